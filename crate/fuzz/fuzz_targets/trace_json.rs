#![no_main]

use bnftrace::qbnf::json::{trace_data_from_json, trace_data_to_json};
use bnftrace::qbnf::TraceData;
use bnftrace::series::{ExactRationalComplex, FloatComplex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = trace_data_from_json::<FloatComplex>(text, 1e-9);
    if let Ok(t) = trace_data_from_json::<ExactRationalComplex>(text, 1e-9) {
        let back: TraceData<ExactRationalComplex> =
            trace_data_from_json(&trace_data_to_json(&t), 1e-9).expect("re-parse");
        assert_eq!(back, t);
    }
});
