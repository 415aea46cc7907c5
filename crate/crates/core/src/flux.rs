//! Probability current through spheres and caps, integrated over time.
//!
//! Time integrals run from `T` to a cutoff `T_max = R / v_min`, where `v_min`
//! is the largest tabulated speed whose momentum probability `P(|v| < v_min)`
//! is at most `epsilon_tail`. For a free packet the flux through `partial B_R`
//! after time `t` is carried asymptotically by momenta slower than `R / t`, so
//! the truncated tail is bounded by that probability and reported with every
//! result.
//!
//! Surface sums are evaluated in parallel over quadrature nodes and combined
//! by pairwise summation in node order, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conescan::{momentum_shell_probability, MomentumProfile};
use crate::error::{Error, Result};
use crate::geometry::{cone_quadrature, CapQuadrature, Cone, SphereCap, Vec3};
use crate::quadrature::{adaptive_gk15, pairwise_sum, CompositeRule};
use crate::wavepacket::{CVec3, WavePacket};

pub const DEFAULT_EPSILON_TAIL: f64 = 1e-8;
pub const DEFAULT_TIME_TOL: f64 = 1e-7;
pub const MAX_TIME_INTERVALS: usize = 4000;

/// Angular order of the full-sphere rule behind [`MomentumProfile`] here.
pub const PROFILE_ORDER: usize = 32;

/// Speed quantiles whose arrival times `R / v` seed the time partition.
const ARRIVAL_QUANTILES: [f64; 11] = [
    1e-6, 1e-4, 1e-2, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.9999, 0.999999,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxIntegralResult {
    /// `int dt int j.n dsigma`.
    pub signed: f64,
    /// `int dt int |j.n| dsigma`.
    pub absolute: f64,
    /// `int dt int max(-j.n, 0) dsigma`, so `absolute - signed = 2 * inward`.
    pub inward: f64,
    pub r: f64,
    pub time_window: (f64, f64),
    pub tail_bound: f64,
    pub quad_error: f64,
}

/// `j(x, t) = Im(conj(psi_t(x)) grad psi_t(x))`.
pub fn flux_vector(packet: &WavePacket, x: &Vec3, t: f64) -> Vec3 {
    packet.at(t).current(x)
}

/// `t^-3 |psi_hat(x / t)|^2 x / t`, purely radial.
pub fn asymptotic_flux(packet: &WavePacket, x: &Vec3, t: f64) -> Result<Vec3> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("asymptotic flux needs t > 0, got {t}")));
    }
    let v = x / t;
    Ok(v * (packet.momentum_density(&v) / (t * t * t)))
}

/// Weighted sum over the nodes of `rule`, one column per output component.
fn node_sum<const N: usize>(rule: &CapQuadrature, f: impl Fn(&Vec3) -> [f64; N] + Sync) -> [f64; N] {
    let terms: Vec<[f64; N]> = rule
        .directions
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(d, &w)| f(d).map(|v| v * w))
        .collect();
    let mut out = [0.0; N];
    let mut column = Vec::with_capacity(terms.len());
    for (c, slot) in out.iter_mut().enumerate() {
        column.clear();
        column.extend(terms.iter().map(|t| t[c]));
        *slot = pairwise_sum(&column);
    }
    out
}

/// `[int j.n dsigma, int max(-j.n, 0) dsigma]` over the cap at time `t`.
fn surface_parts(packet: &WavePacket, r: f64, t: f64, rule: &CapQuadrature) -> [f64; 2] {
    let snap = packet.at(t);
    let [signed, inward] = node_sum(rule, |d| {
        let jn = snap.current(&(r * d)).dot(d);
        [jn, (-jn).max(0.0)]
    });
    [r * r * signed, r * r * inward]
}

/// `(int j.n dsigma, int |j.n| dsigma)` over the cap at time `t`, with
/// `dsigma = R^2 dOmega`. `rule` must be built for the cap's cone.
pub fn surface_flux(packet: &WavePacket, cap: &SphereCap, t: f64, rule: &CapQuadrature) -> (f64, f64) {
    let [signed, inward] = surface_parts(packet, cap.radius, t, rule);
    (signed, signed + 2.0 * inward)
}

fn check_rule(cone: &Cone, rule: &CapQuadrature) -> Result<()> {
    if rule.cone != *cone {
        return Err(Error::InvalidInput(
            "quadrature rule was built for a different cone".into(),
        ));
    }
    Ok(())
}

fn check_full_sphere(rule: &CapQuadrature) -> Result<()> {
    if rule.cone.half_angle() != PI {
        return Err(Error::InvalidInput(
            "this integral runs over the whole sphere; pass a rule for a full cone".into(),
        ));
    }
    Ok(())
}

fn check_tolerances(epsilon_tail: f64, time_tol: f64) -> Result<()> {
    if !(epsilon_tail > 0.0 && epsilon_tail < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon_tail must lie in (0, 1), got {epsilon_tail}"
        )));
    }
    if !(time_tol > 0.0 && time_tol.is_finite()) {
        return Err(Error::InvalidInput(format!("time_tol must be positive, got {time_tol}")));
    }
    Ok(())
}

/// Time cutoff and tail probability for radius `r`; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeCutoff {
    pub t_max: f64,
    pub v_min: f64,
    pub tail_bound: f64,
}

pub fn time_cutoff(profile: &MomentumProfile, r: f64, epsilon_tail: f64) -> Result<TimeCutoff> {
    let (v_min, tail_bound) = profile.tail_speed(epsilon_tail);
    if !(v_min > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon_tail = {epsilon_tail:e} is below the resolved slow-momentum probability"
        )));
    }
    Ok(TimeCutoff {
        t_max: r / v_min,
        v_min,
        tail_bound,
    })
}

fn arrival_breaks(profile: &MomentumProfile, r: f64) -> Vec<f64> {
    ARRIVAL_QUANTILES
        .iter()
        .map(|&q| profile.quantile(q))
        .filter(|&v| v > 0.0)
        .map(|v| r / v)
        .collect()
}

fn with_context(e: Error, what: &str) -> Error {
    match e {
        Error::Unconverged {
            what: inner,
            partial,
            error,
            tolerance,
        } => Error::Unconverged {
            what: format!("{what}: {inner}"),
            partial,
            error,
            tolerance,
        },
        other => other,
    }
}

/// `[signed, inward]` time integrals of the cap flux over `[a, b]`.
fn cap_time_integral(
    packet: &WavePacket,
    r: f64,
    rule: &CapQuadrature,
    a: f64,
    b: f64,
    breaks: &[f64],
    time_tol: f64,
) -> Result<([f64; 2], f64)> {
    let res = adaptive_gk15(
        |t| surface_parts(packet, r, t, rule),
        a,
        b,
        breaks,
        time_tol,
        MAX_TIME_INTERVALS,
    )?;
    Ok((res.value, res.error[0] + 2.0 * res.error[1]))
}

/// Signed and absolute flux through the cap integrated over `[T, T_max]`.
///
/// A negative `T` is split at zero: the window `[T, 0]` is integrated with
/// the same closed forms (free evolution runs backwards just as well) and
/// added to the integral from zero.
pub fn integrated_flux(
    packet: &WavePacket,
    cap: &SphereCap,
    t_start: f64,
    epsilon_tail: f64,
    rule: &CapQuadrature,
    time_tol: f64,
) -> Result<FluxIntegralResult> {
    check_rule(&cap.cone, rule)?;
    check_tolerances(epsilon_tail, time_tol)?;
    if !t_start.is_finite() {
        return Err(Error::InvalidInput(format!("T must be finite, got {t_start}")));
    }
    let profile = MomentumProfile::new(packet, PROFILE_ORDER)?;
    integrated_flux_with_profile(packet, cap, t_start, epsilon_tail, rule, time_tol, &profile)
}

/// [`integrated_flux`] with a precomputed momentum profile, for scans over
/// many radii of the same packet.
pub fn integrated_flux_with_profile(
    packet: &WavePacket,
    cap: &SphereCap,
    t_start: f64,
    epsilon_tail: f64,
    rule: &CapQuadrature,
    time_tol: f64,
    profile: &MomentumProfile,
) -> Result<FluxIntegralResult> {
    check_rule(&cap.cone, rule)?;
    check_tolerances(epsilon_tail, time_tol)?;
    let r = cap.radius;
    let cut = time_cutoff(profile, r, epsilon_tail)?;
    let start = t_start.max(0.0);
    if start >= cut.t_max {
        return Err(Error::Domain(format!(
            "T = {t_start} is past the tail cutoff T_max = {}",
            cut.t_max
        )));
    }
    let (lead, lead_err) = if t_start < 0.0 {
        cap_time_integral(packet, r, rule, t_start, 0.0, &[], 0.5 * time_tol)
            .map_err(|e| with_context(e, "integrated flux before t = 0"))?
    } else {
        ([0.0; 2], 0.0)
    };
    let breaks = arrival_breaks(profile, r);
    let (main, main_err) = cap_time_integral(packet, r, rule, start, cut.t_max, &breaks, time_tol)
        .map_err(|e| with_context(e, "integrated flux"))?;
    let signed = lead[0] + main[0];
    let inward = lead[1] + main[1];
    Ok(FluxIntegralResult {
        signed,
        absolute: signed + 2.0 * inward,
        inward,
        r,
        time_window: (t_start, cut.t_max),
        tail_bound: cut.tail_bound,
        quad_error: lead_err + main_err,
    })
}

/// `int_T^inf dt int_cap j_0.n dsigma` through the substitution `v = R / t`:
/// `int_0^{R/T} dv v^2 int_cap |psi_hat(v omega)|^2 dOmega`. Momenta beyond
/// the packet's negligible-tail speed are dropped.
pub fn asymptotic_integrated_flux(
    packet: &WavePacket,
    cap: &SphereCap,
    t_start: f64,
    rule: &CapQuadrature,
) -> Result<f64> {
    if !(t_start > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic integrated flux needs T > 0, got {t_start}"
        )));
    }
    check_rule(&cap.cone, rule)?;
    Ok(asymptotic_speed_window(packet, rule, 0.0, cap.radius / t_start))
}

/// `int_{t1}^{t2} dt int_cap j_0.n dsigma` by the substituted speed integral
/// over `[R / t2, R / t1]`.
pub fn asymptotic_window_flux(
    packet: &WavePacket,
    cap: &SphereCap,
    t1: f64,
    t2: f64,
    rule: &CapQuadrature,
) -> Result<f64> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::Domain(format!("need 0 < t1 < t2, got ({t1}, {t2})")));
    }
    check_rule(&cap.cone, rule)?;
    Ok(asymptotic_speed_window(packet, rule, cap.radius / t2, cap.radius / t1))
}

fn asymptotic_speed_window(packet: &WavePacket, rule: &CapQuadrature, lo: f64, hi: f64) -> f64 {
    let v_max = packet.max_speed();
    let hi = hi.min(v_max);
    if lo >= hi {
        return 0.0;
    }
    momentum_shell_probability(packet, rule, lo, hi, 16)
}

/// The same window as [`asymptotic_window_flux`], integrated directly in time
/// with the adaptive rule. Used to check the substitution.
pub fn asymptotic_window_flux_in_time(
    packet: &WavePacket,
    cap: &SphereCap,
    t1: f64,
    t2: f64,
    rule: &CapQuadrature,
    time_tol: f64,
) -> Result<f64> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::Domain(format!("need 0 < t1 < t2, got ({t1}, {t2})")));
    }
    check_rule(&cap.cone, rule)?;
    let r = cap.radius;
    let profile = MomentumProfile::new(packet, PROFILE_ORDER)?;
    let breaks = arrival_breaks(&profile, r);
    let res = adaptive_gk15(
        |t| {
            let scale = r * r * r / (t * t * t * t);
            node_sum(rule, |d| [scale * packet.momentum_density(&(r / t * d))])
        },
        t1,
        t2,
        &breaks,
        time_tol,
        MAX_TIME_INTERVALS,
    )
    .map_err(|e| with_context(e, "asymptotic flux in time"))?;
    Ok(res.value[0])
}

/// Integral over `[T, T_max]` and the whole sphere of `|(j - j_0).n|`: the
/// finite-radius value of the distance between the true and asymptotic flux.
/// `rule` must cover the full sphere; aligning its pole with the packet's
/// mean wavevector resolves the outgoing packet best.
pub fn fas_distance(
    packet: &WavePacket,
    r: f64,
    t_start: f64,
    epsilon_tail: f64,
    rule: &CapQuadrature,
    time_tol: f64,
) -> Result<f64> {
    fas_distance_impl(packet, r, t_start, epsilon_tail, rule, time_tol, Route::Direct)
}

/// [`fas_distance`] with `j - j_0` assembled from the remainder functions
/// instead of from the two flux fields.
pub fn fas_distance_from_remainders(
    packet: &WavePacket,
    r: f64,
    t_start: f64,
    epsilon_tail: f64,
    rule: &CapQuadrature,
    time_tol: f64,
) -> Result<f64> {
    fas_distance_impl(packet, r, t_start, epsilon_tail, rule, time_tol, Route::Remainders)
}

#[derive(Clone, Copy)]
enum Route {
    Direct,
    Remainders,
}

fn fas_distance_impl(
    packet: &WavePacket,
    r: f64,
    t_start: f64,
    epsilon_tail: f64,
    rule: &CapQuadrature,
    time_tol: f64,
    route: Route,
) -> Result<f64> {
    if !(t_start > 0.0) {
        return Err(Error::Domain(format!("FAS distance needs T > 0, got {t_start}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    check_full_sphere(rule)?;
    check_tolerances(epsilon_tail, time_tol)?;
    let profile = MomentumProfile::new(packet, PROFILE_ORDER)?;
    let cut = time_cutoff(&profile, r, epsilon_tail)?;
    if t_start >= cut.t_max {
        return Ok(0.0);
    }
    let breaks = arrival_breaks(&profile, r);
    let res = adaptive_gk15(
        |t| match route {
            Route::Direct => {
                let snap = packet.at(t);
                let [v] = node_sum(rule, |d| {
                    let x = r * d;
                    let v = x / t;
                    let j0n = packet.momentum_density(&v) * r / (t * t * t * t);
                    [(snap.current(&x).dot(d) - j0n).abs()]
                });
                [r * r * v]
            }
            Route::Remainders => {
                let [v] = node_sum(rule, |d| [cross_term(packet, &(r * d), t).dot(d).abs()]);
                [r * r * v]
            }
        },
        t_start,
        cut.t_max,
        &breaks,
        time_tol,
        MAX_TIME_INTERVALS,
    )
    .map_err(|e| with_context(e, "FAS distance"))?;
    Ok(res.value[0])
}

/// Momentum transform, its gradient, and the remainders `f`, `g` at `(v, t)`.
fn remainder_parts(packet: &WavePacket, v: &Vec3, t: f64) -> (Complex64, CVec3, Complex64, CVec3) {
    let mut hat = Complex64::new(0.0, 0.0);
    let mut grad_hat = CVec3::zeros();
    let mut chirped = Complex64::new(0.0, 0.0);
    let mut grad_chirped = CVec3::zeros();
    for c in packet.components() {
        let (h, gh) = c.fourier_with_gradient(v);
        let (f, gf) = c.chirped_fourier_with_gradient(v, t);
        hat += h;
        grad_hat += gh;
        chirped += f;
        grad_chirped += gf;
    }
    (hat, grad_hat, chirped - hat, grad_chirped - grad_hat)
}

/// `f(v, t) = (2 pi)^(-3/2) int exp(-i v.y) (exp(i |y|^2 / 2t) - 1) psi(y) d^3y`.
pub fn remainder_f(packet: &WavePacket, v: &Vec3, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("remainder f needs t > 0, got {t}")));
    }
    Ok(remainder_parts(packet, v, t).2)
}

/// `g(v, t) = grad_v f(v, t)`.
pub fn remainder_g(packet: &WavePacket, v: &Vec3, t: f64) -> Result<CVec3> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("remainder g needs t > 0, got {t}")));
    }
    Ok(remainder_parts(packet, v, t).3)
}

/// `psi_t(x) = alpha + beta` with `alpha = (i t)^(-3/2) exp(i |x|^2 / 2t)
/// psi_hat(x / t)` and `beta` the same prefactor times `f(x / t, t)`.
pub fn asymptotic_decomposition(packet: &WavePacket, x: &Vec3, t: f64) -> Result<(Complex64, Complex64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("decomposition needs t > 0, got {t}")));
    }
    let v = x / t;
    let (hat, _, f, _) = remainder_parts(packet, &v, t);
    let e = crate::wavepacket::it_pow_minus_three_halves(t)
        * Complex64::from_polar(1.0, 0.5 * x.norm_squared() / t);
    Ok((e * hat, e * f))
}

/// `N(x, t) = j - j_0`, assembled from `psi_hat`, `f` and their gradients.
pub fn cross_term_flux(packet: &WavePacket, x: &Vec3, t: f64) -> Result<Vec3> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("cross terms need t > 0, got {t}")));
    }
    Ok(cross_term(packet, x, t))
}

fn cross_term(packet: &WavePacket, x: &Vec3, t: f64) -> Vec3 {
    // psi_t = E (hat + f), grad psi_t = E (i v (hat + f) + (grad hat + g) / t),
    // |E|^2 = t^-3.
    let v = x / t;
    let (hat, grad_hat, f, g) = remainder_parts(packet, &v, t);
    let full = hat + f;
    let radial = (full.norm_sqr() - hat.norm_sqr()) * v;
    let transverse = (grad_hat + g).map(|c| (full.conj() * c).im) / t;
    (radial + transverse) / (t * t * t)
}

/// Options for [`remainder_bounds_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderOptions {
    /// Radii at which the remainder-assembled FAS distance is evaluated.
    pub radii: Vec<f64>,
    pub t_start: f64,
    pub epsilon_tail: f64,
    pub time_tol: f64,
    pub angular_order: usize,
    /// Relative change allowed between the two grids of the L1 norms.
    pub refinement_tolerance: f64,
}

impl Default for RemainderOptions {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 20.0, 40.0],
            t_start: 1.0,
            epsilon_tail: DEFAULT_EPSILON_TAIL,
            time_tol: DEFAULT_TIME_TOL,
            angular_order: 48,
            refinement_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderDiagnostics {
    /// `2 (2 pi)^(-3/2) ||psi||_1`.
    pub c_f: f64,
    /// `2 (2 pi)^(-3/2) ||y psi(y)||_1`.
    pub c_g: f64,
    pub l1_norm: f64,
    pub l1_moment: f64,
    /// Largest relative change of the L1 norms between the two grids.
    pub refinement_change: f64,
    pub sup_f_sampled: f64,
    pub sup_g_sampled: f64,
    pub samples: usize,
    pub violations: usize,
    /// `(R, FAS distance)` with `j - j_0` built from the remainders.
    pub cross_term_decay: Vec<(f64, f64)>,
}

/// Times of the sampling grid for the suprema of `|f|` and `|g|`.
pub const SAMPLE_TIMES: [f64; 6] = [0.1, 0.5, 1.0, 10.0, 100.0, 1000.0];

/// Speeds of the sampling grid, as multiples of the packet's largest speed
/// scale `max_speed`.
pub const SAMPLE_SPEED_FRACTIONS: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0];

/// Directions of the sampling grid: the coordinate axes, the four body
/// diagonals and the packet's mean direction.
pub fn sample_directions(packet: &WavePacket) -> Vec<Vec3> {
    let s = 1.0 / 3f64.sqrt();
    vec![
        Vec3::x(),
        -Vec3::x(),
        Vec3::y(),
        -Vec3::y(),
        Vec3::z(),
        -Vec3::z(),
        Vec3::new(s, s, s),
        Vec3::new(s, -s, s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, -s),
        packet.preferred_axis(),
    ]
}

/// `(||psi||_1, ||y psi(y)||_1)` by spherical-coordinate quadrature about the
/// origin, radial panels of half the smallest width out to twelve widths past
/// the farthest center.
fn l1_norms(packet: &WavePacket, radial_order: usize, angular_order: usize) -> Result<(f64, f64)> {
    let rule = cone_quadrature(&Cone::full(packet.preferred_axis())?, angular_order)?;
    let r_max = packet
        .components()
        .iter()
        .map(|c| c.center.norm() + 12.0 * c.width)
        .fold(0.0, f64::max);
    let radial = CompositeRule::uniform(0.0, r_max, 0.5 * packet.min_width(), radial_order);
    let snap = packet.at(0.0);
    let terms: Vec<[f64; 2]> = radial
        .nodes
        .par_iter()
        .zip(radial.weights.par_iter())
        .map(|(&r, &w)| {
            let shell = rule.integrate(|d| snap.evaluate(&(r * d)).norm());
            [w * r * r * shell, w * r * r * r * shell]
        })
        .collect();
    let a: Vec<f64> = terms.iter().map(|t| t[0]).collect();
    let b: Vec<f64> = terms.iter().map(|t| t[1]).collect();
    Ok((pairwise_sum(&a), pairwise_sum(&b)))
}

pub fn remainder_bounds(packet: &WavePacket) -> Result<RemainderDiagnostics> {
    remainder_bounds_with(packet, &RemainderOptions::default())
}

pub fn remainder_bounds_with(packet: &WavePacket, opts: &RemainderOptions) -> Result<RemainderDiagnostics> {
    let (n1, m1) = l1_norms(packet, 16, 64)?;
    let (n0, m0) = l1_norms(packet, 12, 48)?;
    let change = ((n1 - n0) / n1).abs().max(((m1 - m0) / m1).abs());
    if !(change <= opts.refinement_tolerance) {
        return Err(Error::Unconverged {
            what: "L1 norms under grid refinement".into(),
            partial: n1,
            error: change,
            tolerance: opts.refinement_tolerance,
        });
    }
    let scale = 2.0 * (2.0 * PI).powf(-1.5);
    let c_f = scale * n1;
    let c_g = scale * m1;

    let v_max = packet.max_speed();
    let dirs = sample_directions(packet);
    let mut sup_f: f64 = 0.0;
    let mut sup_g: f64 = 0.0;
    let mut samples = 0;
    let mut violations = 0;
    for &t in &SAMPLE_TIMES {
        for &frac in &SAMPLE_SPEED_FRACTIONS {
            for d in &dirs {
                let v = frac * v_max * d;
                let (_, _, f, g) = remainder_parts(packet, &v, t);
                let gf = f.norm();
                let gg = g.map(|c| c.norm_sqr()).sum().sqrt();
                sup_f = sup_f.max(gf);
                sup_g = sup_g.max(gg);
                samples += 1;
                if gf > c_f || gg > c_g {
                    violations += 1;
                }
            }
        }
    }

    let rule = cone_quadrature(&Cone::full(packet.preferred_axis())?, opts.angular_order)?;
    let cross_term_decay = opts
        .radii
        .iter()
        .map(|&r| {
            fas_distance_from_remainders(packet, r, opts.t_start, opts.epsilon_tail, &rule, opts.time_tol)
                .map(|v| (r, v))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RemainderDiagnostics {
        c_f,
        c_g,
        l1_norm: n1,
        l1_moment: m1,
        refinement_change: change,
        sup_f_sampled: sup_f,
        sup_g_sampled: sup_g,
        samples,
        violations,
        cross_term_decay,
    })
}

/// `int_{T1}^{T2} dt int_{partial B_R} |j.n| dsigma`. Any real window is
/// allowed; `rule` must cover the full sphere.
pub fn finite_window_flux(
    packet: &WavePacket,
    r: f64,
    t1: f64,
    t2: f64,
    rule: &CapQuadrature,
    time_tol: f64,
) -> Result<f64> {
    if !(t1.is_finite() && t2.is_finite()) || t1 > t2 {
        return Err(Error::InvalidInput(format!("need T1 <= T2, got ({t1}, {t2})")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    check_full_sphere(rule)?;
    if t1 == t2 {
        return Ok(0.0);
    }
    let breaks: Vec<f64> = (1..8).map(|i| t1 + (t2 - t1) * i as f64 / 8.0).collect();
    let (v, _) = cap_time_integral(packet, r, rule, t1, t2, &breaks, time_tol)
        .map_err(|e| with_context(e, "finite window flux"))?;
    Ok(v[0] + 2.0 * v[1])
}
