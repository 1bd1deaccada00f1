use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_probability, rng_split, SimError, MASK_STREAM};
use crate::data::Mask;

/// Uniform law on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformLaw {
    pub lo: f64,
    pub hi: f64,
}

impl UniformLaw {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }
}

/// Observation mechanism. Entries are revealed independently unless stated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MissingnessSpec {
    Homogeneous { p: f64 },
    /// Row propensities `Pᵢ` and column propensities `Qⱼ` drawn once per mask,
    /// then `ω_ij ~ Bernoulli(Pᵢ Qⱼ)`.
    RowColProduct { row: UniformLaw, col: UniformLaw },
    /// Rate `p_odd` on columns 1, 3, 5, … (1-based) and `p_even` on the rest.
    CheckerColumns { p_odd: f64, p_even: f64 },
    /// As `CheckerColumns`, by row.
    CheckerRows { p_odd: f64, p_even: f64 },
    /// Each row observes every coordinate except exactly one of the first two,
    /// chosen by a fair coin.
    TwoPattern,
    /// Per-entry probabilities, one inner vector per row.
    ExplicitProbs { probs: Vec<Vec<f64>> },
}

impl MissingnessSpec {
    pub fn h1() -> Self {
        Self::Homogeneous { p: 0.05 }
    }

    pub fn h2() -> Self {
        Self::RowColProduct {
            row: UniformLaw { lo: 0.0, hi: 0.2 },
            col: UniformLaw { lo: 0.05, hi: 0.95 },
        }
    }

    pub fn h3() -> Self {
        Self::CheckerColumns {
            p_odd: 0.19,
            p_even: 0.01,
        }
    }

    pub fn h4() -> Self {
        Self::CheckerRows {
            p_odd: 0.18,
            p_even: 0.02,
        }
    }

    /// Looks up `h1` … `h4` by name.
    pub fn named(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "h1" => Some(Self::h1()),
            "h2" => Some(Self::h2()),
            "h3" => Some(Self::h3()),
            "h4" => Some(Self::h4()),
            _ => None,
        }
    }

    pub fn validate(&self, n: usize, d: usize) -> Result<(), SimError> {
        match self {
            Self::Homogeneous { p } => check_probability("homogeneous p", *p),
            Self::RowColProduct { row, col } => {
                for (name, law) in [("row", row), ("col", col)] {
                    check_probability(&format!("{name} law lower bound"), law.lo)?;
                    check_probability(&format!("{name} law upper bound"), law.hi)?;
                    if law.lo > law.hi {
                        return Err(SimError::InvalidSpec(format!(
                            "{name} law has lo {} > hi {}",
                            law.lo, law.hi
                        )));
                    }
                }
                Ok(())
            }
            Self::CheckerColumns { p_odd, p_even } | Self::CheckerRows { p_odd, p_even } => {
                check_probability("p_odd", *p_odd)?;
                check_probability("p_even", *p_even)
            }
            Self::TwoPattern => {
                if d < 2 {
                    Err(SimError::InvalidSpec("two_pattern needs d >= 2".into()))
                } else {
                    Ok(())
                }
            }
            Self::ExplicitProbs { probs } => {
                if probs.len() != n || probs.iter().any(|r| r.len() != d) {
                    return Err(SimError::InvalidSpec(format!(
                        "explicit probabilities must be {n}x{d}"
                    )));
                }
                for (i, row) in probs.iter().enumerate() {
                    for (j, &p) in row.iter().enumerate() {
                        check_probability(&format!("entry ({i}, {j})"), p)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Marginal revelation probability of entry `(i, j)`. For
    /// `RowColProduct` this averages over the propensity laws.
    pub fn marginal_probability(&self, i: usize, j: usize) -> f64 {
        let odd = |idx: usize| idx % 2 == 0;
        match self {
            Self::Homogeneous { p } => *p,
            Self::RowColProduct { row, col } => {
                0.25 * (row.lo + row.hi) * (col.lo + col.hi)
            }
            Self::CheckerColumns { p_odd, p_even } => {
                if odd(j) {
                    *p_odd
                } else {
                    *p_even
                }
            }
            Self::CheckerRows { p_odd, p_even } => {
                if odd(i) {
                    *p_odd
                } else {
                    *p_even
                }
            }
            Self::TwoPattern => {
                if j < 2 {
                    0.5
                } else {
                    1.0
                }
            }
            Self::ExplicitProbs { probs } => probs[i][j],
        }
    }
}

/// Draws an `n × d` mask from `rng`.
pub fn sample_mask(
    spec: &MissingnessSpec,
    n: usize,
    d: usize,
    rng: &mut impl Rng,
) -> Result<Mask, SimError> {
    spec.validate(n, d)?;
    let mask = match spec {
        MissingnessSpec::RowColProduct { row, col } => {
            let p: Vec<f64> = (0..n).map(|_| row.sample(rng)).collect();
            let q: Vec<f64> = (0..d).map(|_| col.sample(rng)).collect();
            Mask::from_fn(n, d, |i, j| rng.random::<f64>() < p[i] * q[j])
        }
        MissingnessSpec::TwoPattern => {
            let mut mask = Mask::full(n, d);
            for i in 0..n {
                let hidden = usize::from(rng.random::<bool>());
                mask.set(i, hidden, false);
            }
            mask
        }
        other => Mask::from_fn(n, d, |i, j| {
            rng.random::<f64>() < other.marginal_probability(i, j)
        }),
    };
    Ok(mask)
}

/// Draws an `n × d` mask from the mask stream of `seed`.
pub fn generate_mask(
    spec: &MissingnessSpec,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<Mask, SimError> {
    sample_mask(spec, n, d, &mut rng_split(seed, MASK_STREAM))
}
