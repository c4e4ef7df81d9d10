#![no_main]

use claw_core::control::ControlSignal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = ControlSignal::from_json(text) {
        let t = h.duration();
        for i in 0..=8 {
            let s = t * i as f64 / 8.0;
            let _ = (h.value(s), h.primitive(s));
        }
        if let Ok(back) = h.to_json() {
            assert!(ControlSignal::from_json(&back).is_ok());
        }
    }
});
