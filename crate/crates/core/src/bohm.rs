//! Bohmian trajectories of a free packet and their sphere crossings.
//!
//! Initial positions are drawn from `|psi_0|^2`. Each trajectory owns a
//! ChaCha stream keyed by `(seed, index)`, so the sample set and every
//! per-trajectory result are fixed by the seed alone, whatever the thread
//! count. Ensemble tallies are integer sums, merged in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::conescan::MomentumProfile;
use crate::error::{Error, Result};
use crate::geometry::{Cone, Vec3};
use crate::ode::{dopri5, DenseStep, Dopri5Options, IntegratorStats};
use crate::wavepacket::WavePacket;

/// Densities at or below this are treated as nodes of the wave function.
pub const NODE_FLOOR: f64 = 1e-300;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Relative accuracy of a located crossing radius.
pub const CROSSING_RTOL: f64 = 1e-6;
/// Proposals per sample before the rejection sampler gives up.
pub const MAX_PROPOSALS: u64 = 10_000;
/// Largest tolerated fraction of aborted trajectories in an ensemble.
pub const MAX_ABORT_FRACTION: f64 = 0.01;
pub const MIN_ENSEMBLE: usize = 100;

/// `Im(grad psi / psi)`, computed from log-scaled values so it stays finite
/// far out in the tails.
pub fn velocity(packet: &WavePacket, x: &Vec3, t: f64) -> Result<Vec3> {
    let s = packet.evaluate_scaled(x, t);
    let ln_rho = s.ln_density();
    if !(ln_rho > NODE_FLOOR.ln()) {
        return Err(Error::NearNode {
            density: ln_rho.exp(),
            t,
        });
    }
    let inv = 1.0 / s.value;
    Ok(s.gradient.map(|g| (g * inv).im))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingStats {
    pub accepted: u64,
    pub proposals: u64,
}

impl SamplingStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposals as f64
    }
}

/// Rejection sampler for `|psi_0|^2` with proposal `sum_i |c_i|^2 g_i`, where
/// `g_i` is the normal density of component `i`, and envelope `M` times that
/// (`M` components; Cauchy–Schwarz).
struct Sampler<'a> {
    packet: &'a WavePacket,
    cumulative: Vec<f64>,
    total_weight: f64,
    m: f64,
}

impl<'a> Sampler<'a> {
    fn new(packet: &'a WavePacket) -> Self {
        let mut cumulative = Vec::with_capacity(packet.components().len());
        let mut acc = 0.0;
        for c in packet.components() {
            acc += c.amplitude.norm_sqr();
            cumulative.push(acc);
        }
        Self {
            packet,
            cumulative,
            total_weight: acc,
            m: packet.components().len() as f64,
        }
    }

    fn envelope(&self, x: &Vec3) -> f64 {
        self.packet
            .components()
            .iter()
            .map(|c| {
                let s2 = c.width * c.width;
                let norm = (2.0 * std::f64::consts::PI * s2).powf(-1.5);
                c.amplitude.norm_sqr() * norm * (-(x - c.center).norm_squared() / (2.0 * s2)).exp()
            })
            .sum::<f64>()
            * self.m
    }

    /// One accepted draw from stream `index`, with its proposal count.
    fn draw(&self, seed: u64, index: u64) -> Result<(Vec3, u64)> {
        let mut rng = trajectory_rng(seed, index);
        for proposals in 1..=MAX_PROPOSALS {
            let u: f64 = rng.random::<f64>() * self.total_weight;
            let i = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
            let c = &self.packet.components()[i];
            let z = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let x = c.center + c.width * z;
            let accept: f64 = rng.random();
            let env = self.envelope(&x);
            if env > 0.0 && accept * env < self.packet.density(&x, 0.0) {
                return Ok((x, proposals));
            }
        }
        Err(Error::EnvelopeFailure {
            rate: 0.0,
            proposals: MAX_PROPOSALS,
        })
    }
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_sampling(stats: &SamplingStats) -> Result<()> {
    if stats.proposals >= MAX_PROPOSALS && stats.acceptance_rate() < 0.01 {
        return Err(Error::EnvelopeFailure {
            rate: stats.acceptance_rate(),
            proposals: stats.proposals,
        });
    }
    Ok(())
}

/// `n` independent draws from `|psi_0|^2`; draw `i` depends only on `(seed, i)`.
pub fn sample_initial(packet: &WavePacket, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    sample_initial_with_stats(packet, n, seed).map(|(x, _)| x)
}

pub fn sample_initial_with_stats(packet: &WavePacket, n: usize, seed: u64) -> Result<(Vec<Vec3>, SamplingStats)> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let sampler = Sampler::new(packet);
    let draws = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.draw(seed, i))
        .collect::<Result<Vec<_>>>()?;
    let stats = SamplingStats {
        accepted: n as u64,
        proposals: draws.iter().map(|d| d.1).sum(),
    };
    check_sampling(&stats)?;
    Ok((draws.into_iter().map(|d| d.0).collect(), stats))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(t, X(t))` at the start and after every accepted step.
    pub samples: Vec<(f64, Vec3)>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    /// Position at `t` from the stored samples (linear between them).
    pub fn end(&self) -> (f64, Vec3) {
        *self.samples.last().expect("trajectory has a start")
    }
}

fn ode_options(tol: f64) -> Result<Dopri5Options> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok(Dopri5Options {
        tol,
        ..Default::default()
    })
}

/// Integrate `dX/dt = v(X, t)` from `(t0, x0)` to `t_end`.
pub fn integrate_trajectory(packet: &WavePacket, x0: &Vec3, t0: f64, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!("need t0 < t_end, got ({t0}, {t_end})")));
    }
    let opts = ode_options(tol)?;
    let mut samples = vec![(t0, *x0)];
    let out = dopri5(
        |t, x| velocity(packet, x, t),
        t0,
        *x0,
        t_end,
        &opts,
        |_, _| f64::INFINITY,
        |s| {
            samples.push((s.t1(), s.end()));
            true
        },
    )?;
    Ok(Trajectory {
        samples,
        stats: out.stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRecord {
    pub r: f64,
    pub time: f64,
    pub exit_point: Vec3,
    /// +1 outward, -1 inward.
    pub direction: i8,
    /// 1 for the first crossing of this trajectory, 2 for the second, ...
    pub ordinal: usize,
}

/// Every crossing of `partial B_R` up to `t_end`.
#[derive(Debug, Clone)]
pub struct CrossingTrace {
    pub crossings: Vec<CrossingRecord>,
    pub final_time: f64,
    pub final_radius: f64,
    pub stats: IntegratorStats,
}

/// Bisect the dense output of `step` for `|X| = r`, given a sign change.
fn locate(step: &DenseStep, r: f64) -> (f64, Vec3) {
    let g = |th: f64| step.at_fraction(th).norm() - r;
    let (mut lo, mut hi) = (0.0, 1.0);
    let g_lo = g(lo);
    let mut th = 0.5;
    for _ in 0..200 {
        th = 0.5 * (lo + hi);
        let gm = g(th);
        if gm.abs() <= CROSSING_RTOL * r * 0.5 {
            break;
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = th;
        } else {
            hi = th;
        }
    }
    (step.t0 + th * step.h, step.at_fraction(th))
}

/// Follow a trajectory from `t = 0` and report crossings of the sphere.
/// With `stop_at_first` the integration ends at the first crossing.
pub fn trace_crossings(
    packet: &WavePacket,
    x0: &Vec3,
    r: f64,
    t_budget: f64,
    tol: f64,
    stop_at_first: bool,
) -> Result<CrossingTrace> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    if x0.norm() >= r {
        return Err(Error::Domain(format!(
            "start |x0| = {} is not inside the sphere of radius {r}",
            x0.norm()
        )));
    }
    if !(t_budget > 0.0) {
        return Err(Error::InvalidInput(format!("time budget must be positive, got {t_budget}")));
    }
    let opts = ode_options(tol)?;
    let mut crossings = Vec::new();
    let out = dopri5(
        |t, x| velocity(packet, x, t),
        0.0,
        *x0,
        t_budget,
        &opts,
        |_, v| 0.2 * r / v.norm(),
        |s| {
            let inside0 = s.start().norm() < r;
            let inside1 = s.end().norm() < r;
            if inside0 != inside1 {
                let (time, exit_point) = locate(s, r);
                crossings.push(CrossingRecord {
                    r,
                    time,
                    exit_point,
                    direction: if inside0 { 1 } else { -1 },
                    ordinal: crossings.len() + 1,
                });
                if stop_at_first {
                    return false;
                }
            }
            true
        },
    )?;
    Ok(CrossingTrace {
        crossings,
        final_time: out.t,
        final_radius: out.y.norm(),
        stats: out.stats,
    })
}

/// The first crossing of `partial B_R` within `t_budget`, if any.
pub fn first_crossing(
    packet: &WavePacket,
    x0: &Vec3,
    r: f64,
    t_budget: f64,
    tol: f64,
) -> Result<Option<CrossingRecord>> {
    Ok(trace_crossings(packet, x0, r, t_budget, tol, true)?
        .crossings
        .first()
        .copied())
}

/// `4 R / v_typical`, with `v_typical` the mean speed `|k|` or, for packets
/// at rest on average, the median of the momentum distribution.
pub fn default_t_budget(packet: &WavePacket, r: f64) -> Result<f64> {
    let k = packet.mean_wavevector().norm();
    let v = if k > 1e-12 {
        k
    } else {
        MomentumProfile::new(packet, 16)?.median()
    };
    Ok(4.0 * r / v)
}

/// Outcome of one ensemble member.
#[derive(Debug, Clone)]
pub enum TrajectoryOutcome {
    Completed { x0: Vec3, trace: CrossingTrace },
    Aborted { x0: Vec3, reason: String },
}

/// Order-independent tally of ensemble outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub completed: u64,
    pub aborted: u64,
    pub first_in_cap: u64,
    pub no_crossing: u64,
    pub multi_crossers: u64,
    /// Outward minus inward crossings through the cap, summed.
    pub signed_in_cap: i64,
    pub signed_in_cap_sq: u64,
    /// All crossings through the cap, summed.
    pub total_in_cap: u64,
    pub total_in_cap_sq: u64,
    /// Trajectories with at least one crossing through the cap.
    pub touching_cap: u64,
}

impl Tally {
    pub fn record(cone: &Cone, outcome: &TrajectoryOutcome) -> Self {
        match outcome {
            TrajectoryOutcome::Aborted { .. } => Tally {
                aborted: 1,
                ..Default::default()
            },
            TrajectoryOutcome::Completed { trace, .. } => {
                let cs = &trace.crossings;
                let mut signed: i64 = 0;
                let mut total: u64 = 0;
                for c in cs.iter().filter(|c| cone.contains(&c.exit_point)) {
                    signed += c.direction as i64;
                    total += 1;
                }
                Tally {
                    completed: 1,
                    first_in_cap: cs.first().is_some_and(|c| cone.contains(&c.exit_point)) as u64,
                    no_crossing: cs.is_empty() as u64,
                    multi_crossers: (cs.len() > 1) as u64,
                    signed_in_cap: signed,
                    signed_in_cap_sq: (signed * signed) as u64,
                    total_in_cap: total,
                    total_in_cap_sq: total * total,
                    touching_cap: (total > 0) as u64,
                    ..Default::default()
                }
            }
        }
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            completed: self.completed + o.completed,
            aborted: self.aborted + o.aborted,
            first_in_cap: self.first_in_cap + o.first_in_cap,
            no_crossing: self.no_crossing + o.no_crossing,
            multi_crossers: self.multi_crossers + o.multi_crossers,
            signed_in_cap: self.signed_in_cap + o.signed_in_cap,
            signed_in_cap_sq: self.signed_in_cap_sq + o.signed_in_cap_sq,
            total_in_cap: self.total_in_cap + o.total_in_cap,
            total_in_cap_sq: self.total_in_cap_sq + o.total_in_cap_sq,
            touching_cap: self.touching_cap + o.touching_cap,
        }
    }
}

/// 95% half-width for a binomial proportion, in the Agresti–Coull form
/// `1.96 sqrt(p~ (1 - p~) / (n + 4))` with `p~ = (x + 2) / (n + 4)`. Unlike
/// the plain Wald interval it does not collapse to zero when every or no
/// trial succeeds.
pub fn binomial_ci95(successes: u64, n: u64) -> f64 {
    let nt = n as f64 + 4.0;
    let p = (successes as f64 + 2.0) / nt;
    1.96 * (p * (1.0 - p) / nt).sqrt()
}

/// 95% half-width for the mean of integer counts, from the sample variance
/// floored by the binomial variance of "count is nonzero".
fn count_mean_ci95(sum: f64, sum_sq: f64, nonzero: u64, n: u64) -> f64 {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let p = (nonzero as f64 + 2.0) / (nf + 4.0);
    1.96 * (var.max(p * (1.0 - p)) / nf).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub requested: usize,
    /// Completed (non-aborted) trajectories.
    pub n: usize,
    pub aborted: usize,
    pub first_cross_in_cap: usize,
    pub no_crossing: usize,
    pub multi_crossers: usize,
    /// `first_cross_in_cap / n`.
    pub estimate: f64,
    pub ci95: f64,
    /// Mean of (outward - inward) crossings through the cap.
    pub mean_signed_crossings: f64,
    pub ci95_signed: f64,
    /// Mean number of crossings through the cap.
    pub mean_total_crossings: f64,
    pub ci95_total: f64,
    pub multi_cross_frac: f64,
    pub abort_frac: f64,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub r: f64,
    pub t_budget: f64,
}

impl EnsembleStats {
    fn from_tally(t: &Tally, requested: usize, sampling: &SamplingStats, seed: u64, r: f64, t_budget: f64) -> Self {
        let n = t.completed;
        let nf = n as f64;
        Self {
            requested,
            n: n as usize,
            aborted: t.aborted as usize,
            first_cross_in_cap: t.first_in_cap as usize,
            no_crossing: t.no_crossing as usize,
            multi_crossers: t.multi_crossers as usize,
            estimate: t.first_in_cap as f64 / nf,
            ci95: binomial_ci95(t.first_in_cap, n),
            mean_signed_crossings: t.signed_in_cap as f64 / nf,
            ci95_signed: count_mean_ci95(t.signed_in_cap as f64, t.signed_in_cap_sq as f64, t.touching_cap, n),
            mean_total_crossings: t.total_in_cap as f64 / nf,
            ci95_total: count_mean_ci95(t.total_in_cap as f64, t.total_in_cap_sq as f64, t.touching_cap, n),
            multi_cross_frac: t.multi_crossers as f64 / nf,
            abort_frac: t.aborted as f64 / requested as f64,
            acceptance_rate: sampling.acceptance_rate(),
            seed,
            r,
            t_budget,
        }
    }
}

/// Crossing statistics of `n` trajectories with initial positions from
/// [`sample_initial`]. `t_budget` defaults to [`default_t_budget`].
pub fn crossing_statistics(
    packet: &WavePacket,
    r: f64,
    cone: &Cone,
    n: usize,
    seed: u64,
    t_budget: Option<f64>,
    tol: f64,
) -> Result<EnsembleStats> {
    crossing_ensemble(packet, r, cone, n, seed, t_budget, tol).map(|(s, _)| s)
}

/// [`crossing_statistics`] together with every trajectory's outcome, in
/// sample order.
pub fn crossing_ensemble(
    packet: &WavePacket,
    r: f64,
    cone: &Cone,
    n: usize,
    seed: u64,
    t_budget: Option<f64>,
    tol: f64,
) -> Result<(EnsembleStats, Vec<TrajectoryOutcome>)> {
    if n < MIN_ENSEMBLE {
        return Err(Error::InvalidInput(format!(
            "ensemble needs at least {MIN_ENSEMBLE} trajectories, got {n}"
        )));
    }
    ode_options(tol)?;
    let t_budget = match t_budget {
        Some(t) => t,
        None => default_t_budget(packet, r)?,
    };
    let (starts, sampling) = sample_initial_with_stats(packet, n, seed)?;
    let outcomes: Vec<TrajectoryOutcome> = starts
        .par_iter()
        .map(|x0| match trace_crossings(packet, x0, r, t_budget, tol, false) {
            Ok(trace) => TrajectoryOutcome::Completed { x0: *x0, trace },
            Err(e) => TrajectoryOutcome::Aborted {
                x0: *x0,
                reason: e.to_string(),
            },
        })
        .collect();
    let tally = outcomes
        .par_iter()
        .map(|o| Tally::record(cone, o))
        .reduce(Tally::default, Tally::merge);
    if tally.aborted as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::EnsembleQuality {
            aborted: tally.aborted as usize,
            requested: n,
        });
    }
    let stats = EnsembleStats::from_tally(&tally, n, &sampling, seed, r, t_budget);
    Ok((stats, outcomes))
}

/// Closed-form Bohmian trajectory of a single Gaussian component: it rides
/// the spreading profile, `X(t) = b + k t + (X_0 - b) s(t) / s0` with
/// `s(t) = s0 sqrt(1 + t^2 / (4 s0^4))`.
pub fn single_gaussian_trajectory(center: &Vec3, wavevector: &Vec3, width: f64, x0: &Vec3, t: f64) -> Vec3 {
    let spread = (1.0 + t * t / (4.0 * width.powi(4))).sqrt();
    center + wavevector * t + (x0 - center) * spread
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical_g1;

    #[test]
    fn velocity_at_peak_is_wavevector() {
        let p = WavePacket::gaussian(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, -1.0, 2.0), 0.8).unwrap();
        let v = velocity(&p, &Vec3::new(1.0, 2.0, 3.0), 0.0).unwrap();
        assert!((v - Vec3::new(0.5, -1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn velocity_survives_far_tails_until_the_floor() {
        let p = canonical_g1();
        assert!(velocity(&p, &Vec3::new(30.0, 0.0, 0.0), 0.0).is_ok());
        assert!(matches!(
            velocity(&p, &Vec3::new(60.0, 0.0, 0.0), 0.0),
            Err(Error::NearNode { .. })
        ));
    }

    #[test]
    fn single_component_sampling_accepts_everything() {
        let (_, s) = sample_initial_with_stats(&canonical_g1(), 500, 7).unwrap();
        assert_eq!(s.accepted, s.proposals);
    }

    #[test]
    fn sampling_is_counter_based() {
        let p = canonical_g1();
        let a = sample_initial(&p, 200, 11).unwrap();
        let b = sample_initial(&p, 120, 11).unwrap();
        assert_eq!(&a[..120], &b[..]);
    }

    #[test]
    fn start_outside_is_rejected() {
        let p = canonical_g1();
        assert!(matches!(
            first_crossing(&p, &Vec3::new(0.0, 0.0, 3.0), 2.0, 10.0, 1e-8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tally_merge_is_order_independent() {
        let a = Tally {
            completed: 3,
            first_in_cap: 2,
            signed_in_cap: -1,
            ..Default::default()
        };
        let b = Tally {
            completed: 5,
            aborted: 1,
            total_in_cap: 4,
            ..Default::default()
        };
        assert_eq!(a.merge(b), b.merge(a));
    }

    #[test]
    fn agresti_coull_is_positive_at_the_edges() {
        assert!(binomial_ci95(100, 100) > 0.0);
        assert!(binomial_ci95(0, 100) > 0.0);
    }
}
