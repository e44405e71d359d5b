#![no_main]

use libfuzzer_sys::fuzz_target;
use nudge_lab::io::{stream_from_parts, StreamSidecar};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sidecar) = StreamSidecar::parse(text) {
        // Building the interpolant exercises the grid and spec validation.
        let _ = stream_from_parts(&sidecar, Vec::new());
    }
});
