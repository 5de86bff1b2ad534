#![no_main]

use libfuzzer_sys::fuzz_target;
use wristexo::biomech::PostureLabel;
use wristexo::io::parse_torque_curve;
use wristexo::spring_design::{derive_spring, fit_linear};

fuzz_target!(|data: &[u8]| {
    if let Ok(curve) = parse_torque_curve(data, "fuzz.csv", PostureLabel::P3) {
        if let Ok(fit) = fit_linear(&curve) {
            let _ = derive_spring(&fit);
        }
    }
});
