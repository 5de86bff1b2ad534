#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::io::write_plot_csvs;
use wristexo::json::to_canonical_string;
use wristexo::trial::StudyReport;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = serde_json::from_slice::<StudyReport>(data) else {
        return;
    };
    let _ = to_canonical_string(&report);
    let dir = std::env::temp_dir().join("wristexo-fuzz");
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = write_plot_csvs(&report, &dir);
    }
});
