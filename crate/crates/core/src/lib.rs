//! Principal component analysis with heterogeneously missing entries.
//!
//! ```no_run
//! use primepca::data::PartialMatrix;
//! use primepca::estimators::{init_estimator, prime_pca, PrimeConfig};
//! use primepca::linalg::sin_theta_loss;
//! use primepca::sim::{generate_data, generate_mask, DataModelSpec, MissingnessSpec};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let spec = DataModelSpec::noisy_block_sign(40.0);
//! let data = generate_data(&spec, 7)?;
//! let mask = generate_mask(&MissingnessSpec::h1(), spec.n, spec.d, 7)?;
//! let pm = PartialMatrix::new(&data.y, mask)?;
//! let (v0, _) = init_estimator(&pm, 2)?;
//! let run = prime_pca(&PrimeConfig::noisy(2), &v0, &pm, Some(&data.frame))?;
//! println!("loss {}", sin_theta_loss(&run.frame, &data.frame)?);
//! # Ok(())
//! # }
//! ```

pub mod baselines;
pub mod data;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod sim;
