//! Cone probabilities on the momentum side and, at finite times, on the
//! position side; plus the radial momentum profile used to pick time cutoffs.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cone_quadrature, CapQuadrature, Cone, DEFAULT_ORDER};
use crate::quadrature::{pairwise_sum, CompositeRule, GaussLegendre};
use crate::wavepacket::WavePacket;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSpec {
    /// Gauss–Legendre points per radial panel.
    pub order: usize,
    /// Angular order of the cap rule.
    pub angular_order: usize,
}

impl Default for RadialSpec {
    fn default() -> Self {
        Self {
            order: 16,
            angular_order: DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Where {
    Momentum,
    Position { t: f64, r_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeProbabilityResult {
    pub value: f64,
    pub quad_error: f64,
    pub axis: [f64; 3],
    pub half_angle: f64,
    pub at: Where,
}

/// Breakpoints for radial momentum integrals on `[0, max_speed]`: panels of
/// width `1 / (4 width)` (half a momentum standard deviation) plus a
/// geometric refinement towards zero so that small-speed tails resolve.
pub fn momentum_radial_breaks(packet: &WavePacket) -> Vec<f64> {
    let w0 = 0.25 / packet.min_width();
    let v_max = packet.max_speed();
    let mut breaks = vec![0.0];
    for j in (1..=48).rev() {
        breaks.push(w0 * 0.5f64.powi(j));
    }
    let panels = ((v_max - w0) / w0).ceil().max(1.0) as usize;
    for i in 0..=panels {
        breaks.push(w0 + (v_max - w0) * i as f64 / panels as f64);
    }
    breaks
}

/// `int_{speed in [lo, hi]} int_cone |psi_hat|^2` on the shared radial breaks.
pub(crate) fn momentum_shell_probability(
    packet: &WavePacket,
    rule: &CapQuadrature,
    lo: f64,
    hi: f64,
    order: usize,
) -> f64 {
    let mut breaks: Vec<f64> = momentum_radial_breaks(packet)
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .collect();
    breaks.insert(0, lo);
    breaks.push(hi);
    let radial = CompositeRule::from_breaks(&breaks, order);
    let terms: Vec<f64> = radial
        .nodes
        .par_iter()
        .zip(radial.weights.par_iter())
        .map(|(&v, &w)| w * v * v * rule.integrate(|d| packet.momentum_density(&(v * d))))
        .collect();
    pairwise_sum(&terms)
}

/// `int_C |psi_hat(v)|^2 d^3v`.
pub fn momentum_cone_probability(
    packet: &WavePacket,
    cone: &Cone,
    spec: &RadialSpec,
) -> Result<ConeProbabilityResult> {
    let v_max = packet.max_speed();
    let fine = cone_quadrature(cone, spec.angular_order)?;
    let coarse = cone_quadrature(cone, (spec.angular_order / 2).max(2))?;
    let value = momentum_shell_probability(packet, &fine, 0.0, v_max, spec.order);
    let rough = momentum_shell_probability(packet, &coarse, 0.0, v_max, (spec.order * 3 / 4).max(2));
    Ok(ConeProbabilityResult {
        value,
        quad_error: (value - rough).abs(),
        axis: cone.axis().into(),
        half_angle: cone.half_angle(),
        at: Where::Momentum,
    })
}

/// `int_{C, |x| > r_min} |psi_t(x)|^2 d^3x`.
///
/// The radial window follows the ballistic motion of each component: it spans
/// ten spread widths either side of `|b + k t|`.
pub fn position_cone_probability(
    packet: &WavePacket,
    cone: &Cone,
    t: f64,
    r_min: f64,
) -> Result<ConeProbabilityResult> {
    position_cone_probability_with(packet, cone, t, r_min, &RadialSpec::default())
}

pub fn position_cone_probability_with(
    packet: &WavePacket,
    cone: &Cone,
    t: f64,
    r_min: f64,
    spec: &RadialSpec,
) -> Result<ConeProbabilityResult> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("position cone probability needs t >= 0, got {t}")));
    }
    if !(r_min >= 0.0) {
        return Err(Error::InvalidInput(format!("r_min must be nonnegative, got {r_min}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut spread_min = f64::INFINITY;
    for c in packet.components() {
        let s0 = c.width;
        let spread = s0 * (1.0 + t * t / (4.0 * s0.powi(4))).sqrt();
        let r = (c.center + c.wavevector * t).norm();
        lo = lo.min(r - 10.0 * spread);
        hi = hi.max(r + 10.0 * spread);
        spread_min = spread_min.min(spread);
    }
    let lo = lo.max(0.0).max(r_min);
    let fine = cone_quadrature(cone, spec.angular_order)?;
    let coarse = cone_quadrature(cone, (spec.angular_order / 2).max(2))?;
    if hi <= lo {
        return Ok(ConeProbabilityResult {
            value: 0.0,
            quad_error: 0.0,
            axis: cone.axis().into(),
            half_angle: cone.half_angle(),
            at: Where::Position { t, r_min },
        });
    }
    let shell = |rule: &CapQuadrature, order: usize| {
        let radial = CompositeRule::uniform(lo, hi, 0.5 * spread_min, order);
        let terms: Vec<f64> = radial
            .nodes
            .par_iter()
            .zip(radial.weights.par_iter())
            .map(|(&r, &w)| w * r * r * rule.integrate(|d| packet.density(&(r * d), t)))
            .collect();
        pairwise_sum(&terms)
    };
    let value = shell(&fine, spec.order);
    let rough = shell(&coarse, (spec.order * 3 / 4).max(2));
    Ok(ConeProbabilityResult {
        value,
        quad_error: (value - rough).abs(),
        axis: cone.axis().into(),
        half_angle: cone.half_angle(),
        at: Where::Position { t, r_min },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SictRow {
    pub t: f64,
    pub position_prob: f64,
    pub momentum_prob: f64,
    pub gap: f64,
}

/// Position-side cone probability over a list of times against the momentum
/// probability of the same cone.
pub fn sict_convergence_scan(packet: &WavePacket, cone: &Cone, times: &[f64]) -> Result<Vec<SictRow>> {
    let momentum = momentum_cone_probability(packet, cone, &RadialSpec::default())?.value;
    times
        .par_iter()
        .map(|&t| {
            let p = position_cone_probability(packet, cone, t, 0.0)?.value;
            Ok(SictRow {
                t,
                position_prob: p,
                momentum_prob: momentum,
                gap: (p - momentum).abs(),
            })
        })
        .collect()
}

/// Radial distribution of the speed `|v|` under `|psi_hat|^2`, tabulated as a
/// cumulative distribution at the panel breaks of [`momentum_radial_breaks`].
#[derive(Debug, Clone)]
pub struct MomentumProfile {
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MomentumProfile {
    pub fn new(packet: &WavePacket, angular_order: usize) -> Result<Self> {
        let rule = cone_quadrature(&Cone::full(packet.preferred_axis())?, angular_order)?;
        let breaks = momentum_radial_breaks(packet);
        let gl = GaussLegendre::new(12);
        let panel_mass: Vec<f64> = breaks
            .par_windows(2)
            .map(|w| {
                let terms: Vec<f64> = gl
                    .mapped(w[0], w[1])
                    .map(|(v, wt)| wt * v * v * rule.integrate(|d| packet.momentum_density(&(v * d))))
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for m in panel_mass {
            acc += m;
            cumulative.push(acc);
        }
        Ok(Self { breaks, cumulative })
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("profile is nonempty")
    }

    /// Largest tabulated speed `v` with `P(|v'| < v) <= eps`, and that probability.
    pub fn tail_speed(&self, eps: f64) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        for (&b, &c) in self.breaks.iter().zip(&self.cumulative) {
            if c <= eps {
                best = (b, c);
            } else {
                break;
            }
        }
        best
    }

    /// Speed at which the cumulative distribution reaches `q` (linear
    /// interpolation between breaks).
    pub fn quantile(&self, q: f64) -> f64 {
        let target = q * self.total();
        for i in 1..self.breaks.len() {
            if self.cumulative[i] >= target {
                let (c0, c1) = (self.cumulative[i - 1], self.cumulative[i]);
                let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
                return self.breaks[i - 1] + frac * (self.breaks[i] - self.breaks[i - 1]);
            }
        }
        *self.breaks.last().expect("profile is nonempty")
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}
