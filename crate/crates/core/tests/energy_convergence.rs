use std::f64::consts::PI;

use coherent_ft::energy::{closure_report, decompose, decompose_frames, SpectralFrame, Trajectory};
use coherent_ft::quantum::{
    haar_unitary, rotation_unitary, thermal_state, DensityMatrix, Hamiltonian, UnitaryOperator,
};
use coherent_ft::{Complex64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotating_thermal(beta: f64, steps: usize) -> Trajectory {
    let h = Hamiltonian::qubit();
    let rho0 = thermal_state(&h, beta).unwrap();
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let states = times
        .iter()
        .map(|&t| {
            rho0.evolve(&rotation_unitary(PI * t, 0.0).unwrap())
                .unwrap()
        })
        .collect();
    Trajectory::new(times, vec![h; steps + 1], states).unwrap()
}

#[test]
fn closure_residual_is_second_order() {
    let residuals: Vec<f64> = [25, 50, 100]
        .iter()
        .map(|&m| closure_report(&decompose(&rotating_thermal(1.0, m)).unwrap()))
        .collect();
    println!("residuals {residuals:?}");
    assert!(residuals[0] / residuals[1] >= 3.5);
    assert!(residuals[1] / residuals[2] >= 3.5);
}

#[test]
fn rotation_ledger_matches_closed_form_within_bound() {
    let beta = 1.0;
    let m_values = [25usize, 50, 100];
    let residuals: Vec<f64> = m_values
        .iter()
        .map(|&m| closure_report(&decompose(&rotating_thermal(beta, m)).unwrap()))
        .collect();
    // K / M^2 with K measured across the refinement ladder.
    let k = m_values
        .iter()
        .zip(&residuals)
        .map(|(&m, r)| r * (m * m) as f64)
        .fold(0.0, f64::max);
    let bound = k / (100.0 * 100.0);

    let ledger = decompose(&rotating_thermal(beta, 100)).unwrap();
    let last = ledger.times.len() - 1;
    assert!(ledger.work[last].abs() <= bound);
    assert!(ledger.heat[last].abs() <= bound);
    let closed_form = (PI / 2.0).sin().powi(2) * (beta / 2.0).tanh();
    assert!((ledger.coherent[last] - closed_form).abs() <= bound);
    let du = ledger.internal[last] - ledger.internal[0];
    assert!((ledger.coherent[last] - du).abs() <= bound);
}

/// H(t) and rho(t) both move: levels breathe, eigenbases rotate, populations drift.
fn driven_qutrit(steps: usize, t_end: f64, times_warp: bool) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let frame_h = haar_unitary(3, &mut rng);
    let frame_rho = haar_unitary(3, &mut rng);
    let gen_h = coherent_ft::quantum::random_hermitian(3, &mut rng);
    let gen_rho = coherent_ft::quantum::random_hermitian(3, &mut rng);
    let eig_h = coherent_ft::linalg::eig_hermitian(&gen_h).unwrap();
    let eig_rho = coherent_ft::linalg::eig_hermitian(&gen_rho).unwrap();
    let i = Complex64::new(0.0, 1.0);

    let times: Vec<f64> = (0..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64;
            let s = if times_warp {
                s + 0.1 * (PI * s).sin() * s * (1.0 - s)
            } else {
                s
            };
            s * t_end
        })
        .collect();
    let mut hs = Vec::new();
    let mut states = Vec::new();
    for &t in &times {
        let uh = UnitaryOperator::new(coherent_ft::linalg::spectral_function(&eig_h, |e| {
            (-i * e * 0.3 * t).exp()
        }))
        .unwrap()
        .compose(&frame_h)
        .unwrap();
        let levels = [0.0, 1.0 + 0.3 * t.sin(), 2.5 - 0.2 * t];
        let h0 = ComplexMatrix::from_real_diagonal(&levels);
        let h = uh.matrix().mul(&h0).mul(&uh.matrix().dagger());
        hs.push(Hamiltonian::new(h).unwrap());

        let ur = UnitaryOperator::new(coherent_ft::linalg::spectral_function(&eig_rho, |e| {
            (-i * e * 0.5 * t).exp()
        }))
        .unwrap()
        .compose(&frame_rho)
        .unwrap();
        let pops = [0.6 - 0.1 * t, 0.3 + 0.05 * t, 0.1 + 0.05 * t];
        let rho = ur
            .matrix()
            .mul(&ComplexMatrix::from_real_diagonal(&pops))
            .mul(&ur.matrix().dagger());
        states.push(DensityMatrix::new(rho).unwrap());
    }
    Trajectory::new(times, hs, states).unwrap()
}

#[test]
fn driven_qutrit_converges_at_second_order() {
    for warp in [false, true] {
        let r: Vec<f64> = [40, 80, 160]
            .iter()
            .map(|&m| closure_report(&decompose(&driven_qutrit(m, 1.0, warp)).unwrap()))
            .collect();
        println!("warp={warp} residuals {r:?}");
        assert!(r[0] / r[1] >= 3.5, "{r:?}");
        assert!(r[1] / r[2] >= 3.5, "{r:?}");
        let ledger = decompose(&driven_qutrit(160, 1.0, warp)).unwrap();
        // All three channels are active.
        let last = ledger.times.len() - 1;
        assert!(ledger.work[last].abs() > 1e-2);
        assert!(ledger.heat[last].abs() > 1e-2);
        assert!(ledger.coherent[last].abs() > 1e-2);
    }
}

#[test]
fn eigenvector_phases_do_not_matter() {
    let traj = driven_qutrit(60, 1.0, false);
    let frames: Vec<SpectralFrame> = traj
        .hamiltonians()
        .iter()
        .zip(traj.states())
        .map(|(h, rho)| SpectralFrame {
            energies: h.energies().to_vec(),
            h_vectors: h.eigenvectors().to_vec(),
            populations: rho.populations().to_vec(),
            rho_vectors: rho.basis().to_vec(),
            internal_energy: rho.expectation(h.matrix()),
        })
        .collect();
    let reference = decompose_frames(traj.times(), &frames).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut phased = frames.clone();
    for f in &mut phased {
        for v in f.h_vectors.iter_mut().chain(f.rho_vectors.iter_mut()) {
            *v *= Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
        }
    }
    let rotated = decompose_frames(traj.times(), &phased).unwrap();
    for (a, b) in [
        (&reference.work, &rotated.work),
        (&reference.heat, &rotated.heat),
        (&reference.coherent, &rotated.coherent),
    ] {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

#[test]
fn random_qutrit_overlaps_are_doubly_stochastic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let h = Hamiltonian::new(coherent_ft::quantum::random_hermitian(3, &mut rng)).unwrap();
        let sigma = coherent_ft::quantum::random_hermitian(3, &mut rng);
        let h_rho = Hamiltonian::new(sigma).unwrap();
        let rho = thermal_state(&h_rho, 0.8).unwrap();
        let w = coherent_ft::energy::overlap_weights(&h, &rho).unwrap();
        for (n, w_n) in w.iter().enumerate() {
            let row: f64 = w_n.iter().sum();
            let col: f64 = (0..3).map(|k| w[k][n]).sum();
            assert!((row - 1.0).abs() < 1e-10 && (col - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn resolved_level_crossing_is_followed() {
    // E_1(t) = 0.5 + t crosses E_0 = 1 at t = 0.5 with fixed eigenvectors.
    let steps = 40;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let hs: Vec<Hamiltonian> = times
        .iter()
        .map(|t| Hamiltonian::diagonal(&[1.0, 0.5 + t]).unwrap())
        .collect();
    let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.7])).unwrap();
    let traj = Trajectory::new(times, hs, vec![rho; steps + 1]).unwrap();
    let ledger = decompose(&traj).unwrap();
    let last = ledger.times.len() - 1;
    assert!((ledger.work[last] - 0.7).abs() < 1e-12);
    assert!(ledger.coherent.iter().all(|c| c.abs() < 1e-12));
    assert!(closure_report(&ledger) < 1e-12);
}
