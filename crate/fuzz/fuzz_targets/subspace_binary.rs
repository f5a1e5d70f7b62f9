#![no_main]

use libfuzzer_sys::fuzz_target;
use qcex::io::SubspaceContainer;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = SubspaceContainer::decode_binary(data) {
        let bytes = c.encode_binary().expect("decoded container re-encodes");
        let again = SubspaceContainer::decode_binary(&bytes).expect("re-encoded container decodes");
        assert_eq!(again.header, c.header);
    }
});
