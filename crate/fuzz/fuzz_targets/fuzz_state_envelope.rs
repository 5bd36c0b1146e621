#![no_main]

use libfuzzer_sys::fuzz_target;
use wellposed::StateEnvelope;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(env) = StateEnvelope::from_json_str(text) {
        let x = env.state_vector().expect("finite entries form a state");
        assert_eq!(x.len(), env.state.len());
    }
});
