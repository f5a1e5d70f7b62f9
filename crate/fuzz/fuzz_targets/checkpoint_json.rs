#![no_main]

use libfuzzer_sys::fuzz_target;
use qcex::io::Checkpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Checkpoint::from_json(text) {
        let again = Checkpoint::from_json(&c.to_json().expect("checkpoint serializes")).expect("round trip");
        assert_eq!(again, c);
    }
});
