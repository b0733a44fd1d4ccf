#![no_main]

use coherent_ft::tpm::{read_distribution_csv, write_distribution_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dist) = read_distribution_csv(data, 1.0) {
        let mut out = Vec::new();
        write_distribution_csv(&dist, &mut out).unwrap();
        let again = read_distribution_csv(out.as_slice(), 1.0).unwrap();
        assert_eq!(dist.support.len(), again.support.len());
        for (a, b) in dist.iter().zip(again.iter()) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }
});
