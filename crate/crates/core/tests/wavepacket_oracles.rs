//! Wave packet evaluation against brute-force quadrature, finite differences
//! and the propagator integral.

use fluxlab::analysis::{is_strictly_decreasing, loglog_slope};
use fluxlab::wavepacket::{evolve_by_quadrature_oracle, OracleGrid};
use fluxlab::{canonical_g1, canonical_g2, Complex64, Error, GaussianComponent, Vec3, WavePacket};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        r.random_range(-half..half),
        r.random_range(-half..half),
        r.random_range(-half..half),
    )
}

/// Trapezoid sum of `f` over the cube `[-h_box, h_box]^3` with spacing `h`.
fn cube_sum<T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>>(
    h_box: f64,
    h: f64,
    center: Vec3,
    f: impl Fn(&Vec3) -> T,
) -> T {
    let n = (2.0 * h_box / h).round() as i64;
    let mut parts = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let row: T = (0..=n)
                .map(|k| {
                    let y = center + Vec3::new(-h_box + i as f64 * h, -h_box + j as f64 * h, -h_box + k as f64 * h);
                    f(&y)
                })
                .sum();
            parts.push(row);
        }
    }
    parts.into_iter().sum::<T>() * (h * h * h)
}

#[test]
fn two_gaussian_normalization_matches_grid_quadrature() {
    let p = canonical_g2();
    let integral = cube_sum(12.0, 0.25, Vec3::zeros(), |y| p.density(y, 0.0));
    assert!((integral - 1.0).abs() <= 1e-6, "{integral}");
}

#[test]
fn single_and_duplicate_components_normalize() {
    let c = GaussianComponent::new(Complex64::new(2.0, 0.0), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
    let p = WavePacket::normalized(vec![c]).unwrap();
    assert!((p.components()[0].amplitude.re - 1.0).abs() < 1e-15);
    let u = GaussianComponent::unit(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 0.7).unwrap();
    let q = WavePacket::normalized(vec![u, u]).unwrap();
    assert!((q.norm_squared() - 1.0).abs() <= 1e-12);
    let zero = GaussianComponent::new(Complex64::new(0.0, 0.0), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
    assert!(matches!(WavePacket::normalized(vec![zero]), Err(Error::InvalidInput(_))));
}

#[test]
fn value_at_origin_for_centered_gaussian() {
    let p = WavePacket::gaussian(Vec3::zeros(), Vec3::zeros(), 1.3).unwrap();
    let expect = (2.0 * std::f64::consts::PI * 1.3 * 1.3).powf(-0.75);
    assert!((p.evaluate(&Vec3::zeros(), 0.0) - Complex64::new(expect, 0.0)).norm() < 1e-15);
}

#[test]
fn fourier_matches_defining_integral() {
    let p = canonical_g2();
    let mut r = rng(3);
    let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
    for _ in 0..10 {
        let k = Vec3::new(0.0, 0.0, 4.0) + random_vec(&mut r, 1.5);
        let direct: Complex64 = p
            .components()
            .iter()
            .map(|c| {
                let single = WavePacket::new(vec![*c]).unwrap();
                cube_sum(8.0 * c.width, 0.2, c.center, |y| {
                    single.evaluate(y, 0.0) * Complex64::from_polar(1.0, -k.dot(y))
                })
            })
            .sum::<Complex64>()
            * norm;
        let closed = p.fourier(&k);
        assert!((direct - closed).norm() <= 1e-6 * closed.norm().max(1e-3), "{direct} {closed}");
    }
}

#[test]
fn momentum_density_peaks_at_wavevector() {
    let p = canonical_g1();
    let peak = p.momentum_density(&Vec3::new(0.0, 0.0, 4.0));
    let mut r = rng(5);
    for _ in 0..50 {
        let k = Vec3::new(0.0, 0.0, 4.0) + random_vec(&mut r, 2.0);
        assert!(p.momentum_density(&k) <= peak);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(7);
    for p in [canonical_g1(), canonical_g2()] {
        for _ in 0..20 {
            let t = r.random_range(0.0..10.0);
            let spread = (1.0 + t * t / 4.0f64).sqrt();
            let x = Vec3::new(0.0, 0.0, 4.0 * t) + random_vec(&mut r, 2.0 * spread);
            let g = p.gradient(&x, t);
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for d in 0..3 {
                let mut e = Vec3::zeros();
                e[d] = h;
                let fd = (p.evaluate(&(x + e), t) - p.evaluate(&(x - e), t)) / (2.0 * h);
                worst = worst.max((fd - g[d]).norm());
            }
            let scale = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(worst <= 1e-6 * scale, "{worst} vs {scale} at {x:?}, t = {t}");
        }
    }
}

#[test]
fn gradient_special_cases() {
    let p = WavePacket::gaussian(Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
    assert!(p.gradient(&Vec3::zeros(), 0.0).iter().all(|c| c.norm() == 0.0));
    let b = Vec3::new(1.0, -1.0, 2.0);
    let k = Vec3::new(0.5, 0.0, 3.0);
    let q = WavePacket::gaussian(b, k, 0.8).unwrap();
    let psi = q.evaluate(&b, 0.0);
    let g = q.gradient(&b, 0.0);
    for d in 0..3 {
        assert!((g[d] - Complex64::new(0.0, k[d]) * psi).norm() < 1e-15);
    }
}

#[test]
fn phase_factor_leaves_modulus_unchanged() {
    let p = canonical_g2();
    let q = p.scaled(Complex64::from_polar(1.0, 0.83));
    let mut r = rng(9);
    for _ in 0..20 {
        let x = random_vec(&mut r, 6.0);
        let t = r.random_range(0.0..5.0);
        assert!((p.evaluate(&x, t).norm() - q.evaluate(&x, t).norm()).abs() <= 1e-15);
    }
}

#[test]
fn unitarity_of_closed_form_evolution() {
    for p in [canonical_g1(), canonical_g2()] {
        for t in [0.0, 1.0, 10.0, 100.0] {
            assert!((p.norm_squared_at(t) - p.norm_squared()).abs() <= 1e-9, "t = {t}");
        }
    }
}

#[test]
fn closed_form_matches_propagator_oracle() {
    let grid = OracleGrid::default();
    let mut r = rng(11);
    let p = canonical_g1();
    for _ in 0..20 {
        let t = r.random_range(0.1..10.0);
        let spread = (1.0 + t * t / 4.0f64).sqrt();
        let x = Vec3::new(0.0, 0.0, 4.0 * t) + random_vec(&mut r, 1.5 * spread);
        let oracle = evolve_by_quadrature_oracle(&p, &x, t, &grid).unwrap();
        let closed = p.evaluate(&x, t);
        assert!((oracle - closed).norm() <= 1e-6 * closed.norm(), "{oracle} {closed}");
    }
    let x = Vec3::new(0.0, 0.0, 5.0);
    let closed = p.evaluate(&x, 1.0);
    let oracle = p.evolve_by_quadrature_oracle(&x, 1.0, &grid).unwrap();
    assert!((oracle - closed).norm() <= 1e-6 * closed.norm());
}

#[test]
fn propagator_oracle_domain_and_linearity() {
    let grid = OracleGrid::default();
    let p1 = canonical_g1();
    assert!(matches!(
        evolve_by_quadrature_oracle(&p1, &Vec3::zeros(), 0.0, &grid),
        Err(Error::Domain(_))
    ));
    let a = GaussianComponent::unit(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 2.0), 1.0).unwrap();
    let b = GaussianComponent::unit(Vec3::new(-1.0, 0.5, 0.0), Vec3::new(1.0, 0.0, 2.0), 0.8).unwrap();
    let (c1, c2) = (Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.9));
    let pa = WavePacket::new(vec![a]).unwrap();
    let pb = WavePacket::new(vec![b]).unwrap();
    let both = WavePacket::new(vec![
        GaussianComponent { amplitude: c1, ..a },
        GaussianComponent { amplitude: c2, ..b },
    ])
    .unwrap();
    let x = Vec3::new(0.5, 1.0, 4.0);
    let lhs = evolve_by_quadrature_oracle(&both, &x, 2.0, &grid).unwrap();
    let rhs = c1 * evolve_by_quadrature_oracle(&pa, &x, 2.0, &grid).unwrap()
        + c2 * evolve_by_quadrature_oracle(&pb, &x, 2.0, &grid).unwrap();
    assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm());
}

#[test]
fn asymptotic_form_improves_along_the_classical_path() {
    let p = canonical_g1();
    let k = Vec3::new(0.0, 0.0, 4.0);
    let errs: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&t| {
            let x = k * t;
            let exact = p.evaluate(&x, t);
            (exact - p.asymptotic_form(&x, t).unwrap()).norm() / exact.norm()
        })
        .collect();
    assert!(is_strictly_decreasing(&errs), "{errs:?}");
}

#[test]
fn asymptotic_form_converges_in_l2() {
    // Radial-angular quadrature of |psi_t - asymptotic|^2 around the classical
    // position; both functions are negligible outside ten spread widths.
    let p = canonical_g1();
    let k = Vec3::new(0.0, 0.0, 4.0);
    let gl = fluxlab::quadrature::GaussLegendre::new(24);
    let dists: Vec<f64> = [5.0, 20.0, 80.0]
        .iter()
        .map(|&t| {
            let spread = (1.0 + t * t / 4.0f64).sqrt();
            let cone = fluxlab::Cone::full(Vec3::z()).unwrap();
            let rule = fluxlab::geometry::cone_quadrature(&cone, 48).unwrap();
            let rule_r = fluxlab::quadrature::CompositeRule::uniform(0.0, 10.0 * spread, 0.5 * spread, 24);
            let _ = &gl;
            let terms: Vec<f64> = rule_r
                .nodes
                .iter()
                .zip(&rule_r.weights)
                .map(|(&r, &w)| {
                    w * r * r
                        * rule.integrate(|d| {
                            let x = k * t + r * d;
                            (p.evaluate(&x, t) - p.asymptotic_form(&x, t).unwrap()).norm_sqr()
                        })
                })
                .collect();
            fluxlab::quadrature::pairwise_sum(&terms).sqrt()
        })
        .collect();
    assert!(is_strictly_decreasing(&dists), "{dists:?}");
}

#[test]
fn asymptotic_form_modulus_and_domain() {
    let p = canonical_g2();
    let x = Vec3::new(3.0, -1.0, 20.0);
    let t = 6.0;
    let a = p.asymptotic_form(&x, t).unwrap().norm_sqr();
    let expect = p.momentum_density(&(x / t)) / (t * t * t);
    assert!((a - expect).abs() <= 1e-14 * expect);
    assert!(matches!(p.asymptotic_form(&x, 0.0), Err(Error::Domain(_))));
}

/// Largest `|psi_t|` over a grid around the classical positions.
fn sup_modulus(p: &WavePacket, t: f64) -> f64 {
    let spread = (1.0 + t * t / 4.0f64).sqrt();
    let mut best: f64 = 0.0;
    for c in p.components() {
        let m = c.center + c.wavevector * t;
        for i in -8..=8 {
            for j in -8..=8 {
                for l in -8..=8 {
                    let x = m + 0.25 * spread * Vec3::new(i as f64, j as f64, l as f64);
                    best = best.max(p.evaluate(&x, t).norm());
                }
            }
        }
    }
    best
}

#[test]
fn supremum_decays_like_t_to_minus_three_halves() {
    // The decay rate is asymptotic: the width (1 + t^2/4)^(1/2) only becomes
    // linear in t once t is well past 2, so the fit starts at t = 10.
    let times: Vec<f64> = (0..8).map(|i| 10.0 * 2f64.powi(i)).collect();
    for p in [canonical_g1(), canonical_g2()] {
        let sups: Vec<f64> = times.iter().map(|&t| sup_modulus(&p, t)).collect();
        let slope = loglog_slope(&times, &sups);
        assert!((slope + 1.5).abs() <= 0.05, "slope {slope}");
        let c = times
            .iter()
            .zip(&sups)
            .map(|(t, s)| s * t.powf(1.5))
            .fold(0.0, f64::max);
        for t in [1.0, 3.0, 7.0, 50.0, 500.0] {
            assert!(sup_modulus(&p, t) <= c * t.powf(-1.5) * 1.5);
        }
    }
}
