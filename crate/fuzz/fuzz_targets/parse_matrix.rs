#![no_main]

use coherent_ft::quantum::{Hamiltonian, UnitaryOperator};
use coherent_ft::ComplexMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = ComplexMatrix::from_json(text) {
        let back = ComplexMatrix::from_json(&m.to_json()).expect("re-parse of own output");
        assert!(back.approx_eq(&m, 0.0));
        // Validation must reject, not panic.
        let _ = Hamiltonian::new(m.clone());
        let _ = UnitaryOperator::new(m);
    }
});
