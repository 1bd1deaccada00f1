#![no_main]

use libfuzzer_sys::fuzz_target;
use primepca::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        // The echo written to report sidecars must load back as a valid config.
        let echo = serde_json::to_string(&cfg).unwrap();
        let again = ExperimentConfig::from_json(&echo).expect("echo is a valid config");
        assert_eq!(again.methods.len(), cfg.methods.len());
        assert_eq!((again.reps, again.base_seed), (cfg.reps, cfg.base_seed));
    }
});
