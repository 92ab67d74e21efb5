#![no_main]

use bnftrace::classical::{map_from_json, map_to_json, TaylorMap};
use bnftrace::series::{ExactRationalComplex, FloatComplex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = map_from_json::<FloatComplex>(text);
    if let Ok(m) = map_from_json::<ExactRationalComplex>(text) {
        let back: TaylorMap<ExactRationalComplex> = map_from_json(&map_to_json(&m)).expect("re-parse");
        assert_eq!(back, m);
    }
});
