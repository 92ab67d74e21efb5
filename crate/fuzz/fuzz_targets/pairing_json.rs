#![no_main]

use bnftrace::oscillatory::json::{basis_from_json, bundle_from_json, smeared_from_json};
use bnftrace::series::{ExactRationalComplex, FloatComplex};
use libfuzzer_sys::fuzz_target;

// bundles, smeared families and test bases share number and jet parsing
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = bundle_from_json::<FloatComplex>(text);
    let _ = bundle_from_json::<ExactRationalComplex>(text);
    let _ = smeared_from_json::<FloatComplex>(text);
    let _ = smeared_from_json::<ExactRationalComplex>(text);
    let _ = basis_from_json::<FloatComplex>(text);
    let _ = basis_from_json::<ExactRationalComplex>(text);
});
