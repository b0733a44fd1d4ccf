//! Statistical behaviour of the emulated photon-counting experiment.

use std::f64::consts::PI;

use coherent_ft::photonic::{
    ift_experiment, run_experiment, sample_std, ExperimentConfig, NoiseConfig, Process, OUTCOMES,
};
use coherent_ft::quantum::hwp_angle_for_rotation;

const THETA: f64 = 86.6 * PI / 180.0;

fn config(betas: Vec<f64>, exposure: f64, replicates: u32, noise: NoiseConfig) -> ExperimentConfig {
    ExperimentConfig {
        betas,
        process: Process::Waveplate {
            alpha: hwp_angle_for_rotation(THETA),
        },
        exposure,
        noise,
        seed: 20240617,
        replicates,
        resamples: 400,
    }
}

fn background(b: f64) -> NoiseConfig {
    NoiseConfig {
        background: b,
        background_on: true,
        ..NoiseConfig::off()
    }
}

#[test]
fn zero_outcome_probability_near_half() {
    let points = run_experiment(&config(vec![1.0], 1e5, 1, NoiseConfig::off())).unwrap();
    let est = &points[0].estimate;
    let expected = (THETA / 2.0).cos().powi(2);
    assert!((expected - 0.529).abs() < 1e-3);
    assert!((est.prob(0.0) - expected).abs() <= 3.0 * est.stderr(0.0));
}

#[test]
fn one_sigma_intervals_cover_about_two_thirds() {
    let points = run_experiment(&config(vec![1.0], 1e4, 100, NoiseConfig::off())).unwrap();
    let mut covered = 0usize;
    let mut total = 0usize;
    for p in &points {
        for c in OUTCOMES {
            total += 1;
            if (p.estimate.prob(c) - p.exact.prob_at(c)).abs() <= p.estimate.stderr(c) {
                covered += 1;
            }
        }
    }
    let coverage = covered as f64 / total as f64;
    assert!((0.58..=0.77).contains(&coverage), "coverage {coverage}");
}

#[test]
fn ift_error_bar_shrinks_as_inverse_sqrt_exposure() {
    let sd: Vec<f64> = [1e3, 1e4, 1e5]
        .iter()
        .map(|&n| {
            let pts = ift_experiment(&config(vec![1.0], n, 20, NoiseConfig::off())).unwrap();
            pts.iter().map(|p| p.stderr).sum::<f64>() / pts.len() as f64
        })
        .collect();
    for w in sd.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10f64.sqrt()).abs() < 0.4, "{sd:?}");
    }
}

#[test]
fn ift_error_bar_matches_delta_method() {
    // IFT = sum_i n_i w_i / sum_i n_i with independent Poisson n_i, so
    // Var ~ sum_i n_i (w_i - IFT)^2 / T^2.
    let beta = 3.0;
    let pts = run_experiment(&config(vec![beta], 1e4, 10, NoiseConfig::off())).unwrap();
    let w = [1.0, (-beta).exp(), beta.exp(), 1.0]; // slots (0,0), (0,1), (1,0), (1,1)
    for p in pts {
        let n = p.record.counts.map(|c| c as f64);
        let t: f64 = n.iter().sum();
        let ift: f64 = n.iter().zip(w).map(|(n, w)| n * w).sum::<f64>() / t;
        let terms: Vec<f64> = n
            .iter()
            .zip(w)
            .map(|(n, w)| n * (w - ift).powi(2) / (t * t))
            .collect();
        let delta = terms.iter().sum::<f64>().sqrt();
        let boot = p.estimate.errors.ift;
        assert!((boot / delta - 1.0).abs() < 0.15, "{boot} vs {delta}");
        // The exp(beta) P(-1) channel carries most of the variance.
        assert!(terms[2] > 0.5 * delta * delta);
    }
}

#[test]
fn noise_free_ift_is_consistent_with_one() {
    let pts = ift_experiment(&config(vec![0.5, 2.0, 4.0], 1e4, 200, NoiseConfig::off())).unwrap();
    let within = pts
        .iter()
        .filter(|p| (p.estimate - 1.0).abs() <= 3.0 * p.stderr)
        .count();
    let frac = within as f64 / pts.len() as f64;
    assert!(frac >= 0.97, "{frac}");
    for p in &pts {
        assert!((p.exact - 1.0).abs() < 1e-12);
    }
}

#[test]
fn background_biases_ift_upward_at_large_beta() {
    let beta = 5.0;
    let noisy = ift_experiment(&config(vec![beta], 5000.0, 100, background(2.0))).unwrap();
    let clean = ift_experiment(&config(vec![beta], 5000.0, 100, NoiseConfig::off())).unwrap();
    let stats = |pts: &[coherent_ft::photonic::IftPoint]| {
        let v = pts.iter().map(|p| p.estimate);
        let mean = v.clone().sum::<f64>() / pts.len() as f64;
        (mean, sample_std(v))
    };
    let (mn, sn) = stats(&noisy);
    let (mc, sc) = stats(&clean);
    println!("noisy mean {mn} sd {sn}; clean mean {mc} sd {sc}");
    assert!(mn - 1.0 > 3.0 * sn / 10.0);
    assert!((mc - 1.0).abs() <= 3.0 * sc / 10.0);
}

#[test]
fn replicates_are_reproducible_and_independent() {
    let cfg = config(vec![0.5, 1.5], 2000.0, 4, background(1.0));
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.record, y.record);
        assert_eq!(x.estimate, y.estimate);
    }
    // Distinct replicates draw from distinct streams.
    assert_ne!(a[0].record.counts, a[1].record.counts);
    let mut other = cfg.clone();
    other.seed += 1;
    let c = run_experiment(&other).unwrap();
    assert_ne!(a[0].record.counts, c[0].record.counts);
}
