#![no_main]

use libfuzzer_sys::fuzz_target;
use wellposed::Signal;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(signal) = Signal::from_csv_str(text) else { return };
    assert!(signal.dt() > 0.0);
    let back = Signal::from_csv_str(&signal.to_csv_string()).expect("written CSV parses");
    assert_eq!(back.len(), signal.len());
    assert_eq!(back.dim(), signal.dim());
    assert_eq!(back.samples(), signal.samples());
});
