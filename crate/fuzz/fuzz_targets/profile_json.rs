#![no_main]

use claw_core::profile::io::parse_profile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_profile(text) {
        let d = p.domain();
        for x in d.linspace(9) {
            let _ = p.value(x);
        }
        let _ = (p.variation(), p.image());
    }
});
