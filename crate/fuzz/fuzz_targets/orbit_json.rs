#![no_main]

use bnftrace::oscillatory::json::{orbit_from_json, orbit_to_json};
use bnftrace::oscillatory::OrbitExpansion;
use bnftrace::series::{ExactRationalComplex, FloatComplex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = orbit_from_json::<FloatComplex>(text, 1e-9);
    if let Ok(o) = orbit_from_json::<ExactRationalComplex>(text, 0.0) {
        let back: OrbitExpansion<ExactRationalComplex> = orbit_from_json(&orbit_to_json(&o), 0.0).expect("re-parse");
        assert_eq!(back, o);
    }
});
