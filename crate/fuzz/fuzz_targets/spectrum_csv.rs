#![no_main]

use libfuzzer_sys::fuzz_target;
use qcex::io::{read_spectrum_csv, write_spectrum_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_spectrum_csv(data) {
        let mut out = Vec::new();
        write_spectrum_csv(&rows, &mut out).expect("rows re-serialize");
        let again = read_spectrum_csv(out.as_slice()).expect("written csv parses");
        assert_eq!(again.len(), rows.len());
    }
});
