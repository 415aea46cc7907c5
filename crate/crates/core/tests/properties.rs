//! Property tests for invariants that hold for every input.

use fluxlab::bohm::{binomial_ci95, Tally};
use fluxlab::conescan::{momentum_cone_probability, RadialSpec};
use fluxlab::flux::{flux_vector, surface_flux};
use fluxlab::geometry::cone_quadrature;
use fluxlab::{Complex64, Cone, GaussianComponent, SphereCap, Vec3, WavePacket};
use nalgebra::Rotation3;
use proptest::prelude::*;

fn vec3(half: f64) -> impl Strategy<Value = Vec3> {
    (-half..half, -half..half, -half..half).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("nonzero axis", |v| v.norm() > 0.1)
}

fn component() -> impl Strategy<Value = GaussianComponent> {
    (0.2f64..2.0, 0.0..std::f64::consts::TAU, vec3(3.0), vec3(3.0), 0.5f64..2.0).prop_map(
        |(m, ph, c, k, w)| GaussianComponent::new(Complex64::from_polar(m, ph), c, k, w).unwrap(),
    )
}

fn packet() -> impl Strategy<Value = WavePacket> {
    prop::collection::vec(component(), 1..4)
        .prop_filter_map("normalizable", |cs| WavePacket::normalized(cs).ok())
}

fn tally() -> impl Strategy<Value = Tally> {
    (0u64..1000, 0u64..1000, 0u64..1000, -1000i64..1000, 0u64..1000).prop_map(|(c, a, f, s, t)| Tally {
        completed: c,
        aborted: a,
        first_in_cap: f,
        no_crossing: c / 3,
        multi_crossers: c / 5,
        signed_in_cap: s,
        signed_in_cap_sq: (s * s) as u64,
        total_in_cap: t,
        total_in_cap_sq: t * t,
        touching_cap: t / 2,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_phase_leaves_density_and_current_unchanged(
        p in packet(), phase in 0.0..std::f64::consts::TAU, x in vec3(5.0), t in 0.0f64..10.0,
    ) {
        let q = p.scaled(Complex64::from_polar(1.0, phase));
        let (d1, d2) = (p.density(&x, t), q.density(&x, t));
        prop_assert!((d1 - d2).abs() <= 1e-12 * d1.max(1e-300));
        let (j1, j2) = (flux_vector(&p, &x, t), flux_vector(&q, &x, t));
        prop_assert!((j1 - j2).norm() <= 1e-12 * j1.norm().max(1e-300));
    }

    #[test]
    fn norm_is_rotation_and_time_invariant(p in packet(), axis in vec3(3.0), t in 0.0f64..50.0) {
        let rot = Rotation3::from_scaled_axis(axis).into_inner();
        let q = p.rotated(&rot);
        prop_assert!((q.norm_squared() - p.norm_squared()).abs() <= 1e-10);
        prop_assert!((p.norm_squared_at(t) - p.norm_squared()).abs() <= 1e-10);
    }

    #[test]
    fn rotated_packet_rotates_the_density(p in packet(), axis in vec3(3.0), x in vec3(4.0), t in 0.0f64..5.0) {
        let rot = Rotation3::from_scaled_axis(axis).into_inner();
        let q = p.rotated(&rot);
        let a = p.density(&x, t);
        let b = q.density(&(rot * x), t);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-200));
    }

    #[test]
    fn absolute_flux_dominates_signed_flux(
        p in packet(), axis in direction(), half in 0.1f64..3.1, r in 1.0f64..20.0, t in 0.0f64..10.0,
    ) {
        let cone = Cone::new(axis, half).unwrap();
        let cap = SphereCap::new(r, cone).unwrap();
        let rule = cone_quadrature(&cone, 12).unwrap();
        let (signed, absolute) = surface_flux(&p, &cap, t, &rule);
        prop_assert!(absolute >= signed.abs() * (1.0 - 1e-12));
    }

    #[test]
    fn cone_and_complement_partition_directions(axis in direction(), half in 0.05f64..3.09, v in direction()) {
        let cone = Cone::new(axis, half).unwrap();
        let comp = cone.complement().unwrap();
        let angle = axis.angle(&v);
        prop_assume!((angle - half).abs() > 1e-9);
        prop_assert!(cone.contains(&v) != comp.contains(&v));
        prop_assert!(cone.contains(&(v * 1e-200)) == cone.contains(&v));
    }

    #[test]
    fn tally_merge_is_a_commutative_monoid(a in tally(), b in tally(), c in tally()) {
        prop_assert_eq!(a.merge(b), b.merge(a));
        prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        prop_assert_eq!(a.merge(Tally::default()), a);
    }

    #[test]
    fn binomial_interval_is_sane(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let x = ((n as f64) * frac).round() as u64;
        let h = binomial_ci95(x, n);
        prop_assert!(h > 0.0 && h <= 0.5);
        prop_assert!(binomial_ci95(x * 4, n * 4) < h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn momentum_probabilities_of_complementary_cones_add_to_one(
        p in packet(), axis in direction(), half in 0.2f64..2.9,
    ) {
        let cone = Cone::new(axis, half).unwrap();
        let spec = RadialSpec::default();
        let a = momentum_cone_probability(&p, &cone, &spec).unwrap().value;
        let b = momentum_cone_probability(&p, &cone.complement().unwrap(), &spec).unwrap().value;
        prop_assert!((a + b - 1.0).abs() <= 1e-6, "{} + {}", a, b);
    }
}
