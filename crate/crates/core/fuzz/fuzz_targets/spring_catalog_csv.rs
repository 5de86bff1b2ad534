#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::io::parse_catalog;
use wristexo::spring_design::catalog_match;

fuzz_target!(|data: &[u8]| {
    if let Ok(catalog) = parse_catalog(data, "fuzz.csv") {
        let _ = catalog_match(12.32, &catalog);
    }
});
