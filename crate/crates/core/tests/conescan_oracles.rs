//! Cone probabilities against Monte Carlo sampling of the explicit Gaussian
//! momentum density, and the large-time position probabilities.

use fluxlab::analysis::is_strictly_decreasing;
use fluxlab::conescan::*;
use fluxlab::{canonical_g1, Cone, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn momentum_cone_probability_matches_monte_carlo() {
    // |psi_hat|^2 of the canonical single Gaussian is the normal density with
    // mean k and standard deviation 1 / (2 width) per coordinate.
    let p = canonical_g1();
    let cone = Cone::from_degrees(Vec3::z(), 30.0).unwrap();
    let q = momentum_cone_probability(&p, &cone, &RadialSpec::default()).unwrap().value;
    let normal = Normal::new(0.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let n = 1_000_000;
    let mut hits = 0u64;
    for _ in 0..n {
        let v = Vec3::new(
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            4.0 + normal.sample(&mut rng),
        );
        hits += cone.contains(&v) as u64;
    }
    let phat = hits as f64 / n as f64;
    // At q this close to 1 the binomial standard error is tiny; keep a floor
    // of one expected miss so the comparison stays meaningful.
    let se = (q * (1.0 - q) / n as f64).sqrt().max(1.0 / n as f64);
    assert!((phat - q).abs() <= 3.0 * se, "{phat} vs {q} (se {se})");

    let wide = Cone::from_degrees(Vec3::new(1.0, 0.0, 1.0), 40.0).unwrap();
    let q2 = momentum_cone_probability(&p, &wide, &RadialSpec::default()).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut hits = 0u64;
    for _ in 0..n {
        let v = Vec3::new(
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            4.0 + normal.sample(&mut rng),
        );
        hits += wide.contains(&v) as u64;
    }
    let phat = hits as f64 / n as f64;
    let se = (q2 * (1.0 - q2) / n as f64).sqrt();
    assert!((phat - q2).abs() <= 3.0 * se, "{phat} vs {q2} (se {se})");
}

#[test]
fn position_probability_converges_to_momentum_probability() {
    let p = canonical_g1();
    let cone = Cone::from_degrees(Vec3::z(), 30.0).unwrap();
    let rows = sict_convergence_scan(&p, &cone, &[5.0, 10.0, 20.0, 40.0]).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    assert!(is_strictly_decreasing(&gaps), "{gaps:?}");
    let last = rows.last().unwrap();
    assert!(last.gap <= 0.005 * last.momentum_prob);
}

#[test]
fn full_cone_scan_has_no_gap() {
    let p = canonical_g1();
    let cone = Cone::full(Vec3::z()).unwrap();
    for row in sict_convergence_scan(&p, &cone, &[0.0, 3.0, 30.0]).unwrap() {
        assert!(row.gap <= 1e-7, "{row:?}");
    }
}

#[test]
fn negative_time_is_rejected() {
    let p = canonical_g1();
    let cone = Cone::full(Vec3::z()).unwrap();
    assert!(position_cone_probability(&p, &cone, -1.0, 0.0).is_err());
}
