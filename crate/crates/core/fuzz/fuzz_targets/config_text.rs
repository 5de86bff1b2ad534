#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use wristexo::config::ToolkitConfig;

fuzz_target!(|text: &str| {
    let _ = ToolkitConfig::parse(text, "fuzz.cfg", Path::new("/nonexistent"));
});
