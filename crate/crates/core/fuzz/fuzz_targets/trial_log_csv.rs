#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::transmission::Gearing;
use wristexo::trial::{clean_interpolate, parse_trial_csv, trial_metrics, TrialLog, TrialMeta};

fuzz_target!(|data: &[u8]| {
    let Ok(samples) = parse_trial_csv(data, "fuzz.csv") else {
        return;
    };
    let meta = TrialMeta::from_filename("P1_POS1_unloaded_S1_T1.csv").unwrap();
    if let Ok(log) = TrialLog::new(meta, samples) {
        if let Ok(cleaned) = clean_interpolate(&log, &Default::default()) {
            let _ = trial_metrics(&cleaned, &Gearing::default());
        }
    }
});
