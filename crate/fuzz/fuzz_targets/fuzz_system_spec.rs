#![no_main]

use libfuzzer_sys::fuzz_target;
use wellposed::{build_system, SystemSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = SystemSpec::from_json_str(text) else { return };
    // Keep built-in sizes small so each input stays fast.
    if spec.modes.is_some_and(|n| n > 256) {
        return;
    }
    if let Ok(sys) = build_system(&spec) {
        assert_eq!(sys.control().nrows(), sys.modes());
        assert_eq!(sys.observation().ncols(), sys.modes());
        assert!(sys.generator().omega() < 0.0);
    }
    let again = SystemSpec::from_json_str(&spec.canonical_json()).expect("canonical form parses");
    assert_eq!(again.digest(), spec.digest());
});
