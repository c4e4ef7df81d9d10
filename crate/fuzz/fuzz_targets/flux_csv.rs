#![no_main]

use claw_core::FluxModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = FluxModel::from_csv_str("fuzz", text) {
        let s = m.states();
        for u in s.linspace(9) {
            let _ = (m.f(u), m.df(u), m.d2f(u));
        }
    }
});
