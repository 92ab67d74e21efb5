#![no_main]

use bnftrace::qbnf::json::{bnf_from_json, bnf_to_json};
use bnftrace::qbnf::QuantumBnf;
use bnftrace::series::{ExactRationalComplex, FloatComplex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = bnf_from_json::<FloatComplex>(text, 1e-9);
    if let Ok(b) = bnf_from_json::<ExactRationalComplex>(text, 1e-9) {
        let back: QuantumBnf<ExactRationalComplex> = bnf_from_json(&bnf_to_json(&b), 1e-9).expect("re-parse");
        assert_eq!(back, b);
    }
});
