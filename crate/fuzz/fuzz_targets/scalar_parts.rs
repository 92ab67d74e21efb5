#![no_main]

use bnftrace::series::{ExactRationalComplex, FloatComplex, Scalar};
use libfuzzer_sys::fuzz_target;

// input is `RE,IM`
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (re, im) = text.split_once(',').unwrap_or((text, "0"));
    let _ = FloatComplex::parse_parts(re, im);
    if let Ok(v) = ExactRationalComplex::parse_parts(re, im) {
        let (r, i) = v.format_parts();
        assert_eq!(ExactRationalComplex::parse_parts(&r, &i).expect("re-parse"), v);
    }
});
