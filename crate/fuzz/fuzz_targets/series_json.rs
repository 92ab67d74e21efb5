#![no_main]

use bnftrace::series::json::{series_from_json, series_to_json};
use bnftrace::series::{ExactRationalComplex, FloatComplex, MultiSeries};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = series_from_json::<FloatComplex>(text);
    if let Ok(s) = series_from_json::<ExactRationalComplex>(text) {
        let back: MultiSeries<ExactRationalComplex> = series_from_json(&series_to_json(&s)).expect("re-parse");
        assert_eq!(back, s);
    }
});
