#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::trial::{likert_summary, parse_likert_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(responses) = parse_likert_csv(data, "fuzz.csv") {
        let _ = likert_summary(&responses);
    }
});
