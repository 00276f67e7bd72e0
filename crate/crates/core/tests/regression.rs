use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slefvar::lattice::{ising_wolff_run, IsingLattice};
use slefvar::loewner::{sample_sle_seeded, SleConfig};

const SLE_SEEDS: u64 = 40;
const BASE_POINTS: f64 = 2791.55;
const BASE_CAPACITY: f64 = 0.26915;
const BASE_TAU: f64 = 792.4623939928443;

fn sle_means() -> (f64, f64) {
    let mut points = 0usize;
    let mut capacity = 0.0;
    for seed in 0..SLE_SEEDS {
        let mut cfg = SleConfig::semicircle(8.0 / 3.0, 0.01, 1.0);
        cfg.seed = seed;
        let trace = sample_sle_seeded(&cfg).unwrap();
        points += trace.curve.len();
        capacity += trace.capacity();
    }
    (
        points as f64 / SLE_SEEDS as f64,
        capacity / SLE_SEEDS as f64,
    )
}

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 6).
fn tau_int(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    let mut tau = 0.5;
    for lag in 1..n / 2 {
        let c = xs[..n - lag]
            .iter()
            .zip(&xs[lag..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / (n - lag) as f64;
        tau += c / c0;
        if lag as f64 >= 6.0 * tau {
            break;
        }
    }
    tau
}

fn ising_tau() -> f64 {
    let mut lat = IsingLattice::strip(64, 63).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    ising_wolff_run(&mut lat, 1000, 1000, &mut rng, |_| {}).unwrap();
    let mut energy = Vec::with_capacity(20_000);
    ising_wolff_run(&mut lat, 20_000, 1, &mut rng, |l| energy.push(l.energy())).unwrap();
    tau_int(&energy)
}

#[test]
fn sle_trace_sizes_match_baseline() {
    let (points, capacity) = sle_means();
    println!("mean points {points:.6}, mean capacity {capacity:.12e}");
    assert!(
        (points - BASE_POINTS).abs() <= 1e-9 * BASE_POINTS,
        "mean points {points}"
    );
    assert!(
        (capacity - BASE_CAPACITY).abs() <= 1e-9 * BASE_CAPACITY,
        "mean capacity {capacity:e}"
    );
}

#[test]
fn ising_energy_autocorrelation_matches_baseline() {
    let tau = ising_tau();
    println!("tau_int {tau:.12e}");
    assert!(tau.is_finite() && tau > 0.0);
    assert!((tau - BASE_TAU).abs() <= 1e-9 * BASE_TAU, "tau_int {tau}");
}
