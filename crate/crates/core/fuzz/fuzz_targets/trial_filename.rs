#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::trial::TrialMeta;

fuzz_target!(|name: &str| {
    if let Ok(meta) = TrialMeta::from_filename(name) {
        let again = TrialMeta::from_filename(&meta.file_name()).expect("rendered name parses");
        assert_eq!(again, meta);
    }
});
