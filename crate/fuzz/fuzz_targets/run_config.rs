#![no_main]

use libfuzzer_sys::fuzz_target;
use std::path::Path;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = qcex_cli::parse(text) {
        let _ = qcex_cli::prepare(config, Path::new("/nonexistent"));
    }
});
