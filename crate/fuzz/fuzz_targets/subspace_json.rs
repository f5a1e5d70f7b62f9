#![no_main]

use libfuzzer_sys::fuzz_target;
use qcex::io::SubspaceContainer;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = SubspaceContainer::from_json(text) {
        let _ = c.into_problem();
    }
});
