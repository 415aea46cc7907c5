//! Dormand–Prince 5(4) integrator for `dX/dt = v(X, t)` in three dimensions,
//! with the standard continuous extension of order four.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    /// Local error tolerance, used as both absolute and relative tolerance.
    pub tol: f64,
    pub max_steps: usize,
    /// Consecutive rejections (error or failed right-hand side) before giving up.
    pub max_consecutive_rejections: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_steps: 1_000_000,
            max_consecutive_rejections: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest scaled local error estimate of an accepted step.
    pub max_local_error: f64,
}

/// One accepted step with its interpolant.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec3; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> Vec3 {
        self.rcont[0]
    }

    pub fn end(&self) -> Vec3 {
        self.rcont[0] + self.rcont[1]
    }

    /// State at `t0 + theta h`, `theta` in `[0, 1]`.
    pub fn at_fraction(&self, theta: f64) -> Vec3 {
        let [r1, r2, r3, r4, r5] = self.rcont;
        let t1 = 1.0 - theta;
        r1 + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)))
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.at_fraction((t - self.t0) / self.h)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Outcome {
    pub t: f64,
    pub y: Vec3,
    pub stats: IntegratorStats,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
}

/// Integrate from `(t0, y0)` towards `t_end > t0`.
///
/// `max_step(y, v)` caps the step length given the state and its velocity.
/// A failing right-hand side is treated like a rejected step (the step shrinks
/// by a factor of four). `observer` sees every accepted step and returns
/// `false` to stop.
pub fn dopri5(
    mut rhs: impl FnMut(f64, &Vec3) -> Result<Vec3>,
    t0: f64,
    y0: Vec3,
    t_end: f64,
    opts: &Dopri5Options,
    max_step: impl Fn(&Vec3, &Vec3) -> f64,
    mut observer: impl FnMut(&DenseStep) -> bool,
) -> Result<Dopri5Outcome> {
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!("need t0 < t_end, got ({t0}, {t_end})")));
    }
    let tol = opts.tol;
    let mut stats = IntegratorStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    let mut h = (0.01 * (t_end - t0)).min(max_step(&y, &k1)).min(0.1);
    let mut consecutive = 0usize;
    let mut last_failure = String::new();

    let abort = |t: f64, reason: String| Error::TrajectoryAbort { t, reason };

    while t < t_end {
        if stats.steps >= opts.max_steps {
            return Err(abort(t, format!("step budget of {} exhausted", opts.max_steps)));
        }
        if consecutive >= opts.max_consecutive_rejections {
            return Err(abort(
                t,
                format!("{consecutive} consecutive rejected steps; last: {last_failure}"),
            ));
        }
        h = h.min(max_step(&y, &k1)).min(t_end - t);
        if !(h > f64::EPSILON * t.abs().max(1.0)) {
            return Err(abort(t, format!("step size underflow (h = {h:e}); last: {last_failure}")));
        }

        let stages = (|| -> Result<[Vec3; 7]> {
            let k2 = rhs(t + C2 * h, &(y + h * A21 * k1))?;
            let k3 = rhs(t + C3 * h, &(y + h * (A31 * k1 + A32 * k2)))?;
            let k4 = rhs(t + C4 * h, &(y + h * (A41 * k1 + A42 * k2 + A43 * k3)))?;
            let k5 = rhs(t + C5 * h, &(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)))?;
            let k6 = rhs(
                t + h,
                &(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)),
            )?;
            let y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
            let k7 = rhs(t + h, &y1)?;
            Ok([k1, k2, k3, k4, k5, k6, k7])
        })();

        let [_, _, k3, k4, k5, k6, k7] = match stages {
            Ok(k) => k,
            Err(e) => {
                stats.rejected += 1;
                consecutive += 1;
                last_failure = e.to_string();
                h *= 0.25;
                continue;
            }
        };
        let y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let mut acc = 0.0;
        for i in 0..3 {
            let sc = tol + tol * y[i].abs().max(y1[i].abs());
            acc += (err_vec[i] / sc).powi(2);
        }
        let err = (acc / 3.0).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            consecutive += 1;
            last_failure = "non-finite error estimate".into();
            h *= 0.25;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err > 1.0 {
            stats.rejected += 1;
            consecutive += 1;
            last_failure = format!("local error {err:.3e} above tolerance");
            h *= factor.min(1.0);
            continue;
        }

        let ydiff = y1 - y;
        let bspl = h * k1 - ydiff;
        let step = DenseStep {
            t0: t,
            h,
            rcont: [
                y,
                ydiff,
                bspl,
                ydiff - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ],
        };
        stats.steps += 1;
        stats.max_local_error = stats.max_local_error.max(err);
        consecutive = 0;
        t = if t_end - (t + h) <= 4.0 * f64::EPSILON * t_end.abs() { t_end } else { t + h };
        y = y1;
        k1 = k7;
        h *= factor;
        if !observer(&step) {
            return Ok(Dopri5Outcome {
                t,
                y,
                stats,
                stopped: true,
            });
        }
    }
    Ok(Dopri5Outcome {
        t,
        y,
        stats,
        stopped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_matches_exponential() {
        let out = dopri5(
            |_, y| Ok(-*y),
            0.0,
            Vec3::new(1.0, 2.0, -1.0),
            3.0,
            &Dopri5Options {
                tol: 1e-10,
                ..Default::default()
            },
            |_, _| f64::INFINITY,
            |_| true,
        )
        .unwrap();
        let expect = Vec3::new(1.0, 2.0, -1.0) * (-3.0f64).exp();
        assert!((out.y - expect).norm() < 1e-8);
    }

    #[test]
    fn dense_output_tracks_rotation() {
        // dX/dt = omega x X: circles of constant radius.
        let rhs = |_: f64, y: &Vec3| Ok(Vec3::new(-y.y, y.x, 0.0));
        let mut worst: f64 = 0.0;
        dopri5(
            rhs,
            0.0,
            Vec3::new(1.0, 0.0, 0.5),
            10.0,
            &Dopri5Options {
                tol: 1e-9,
                ..Default::default()
            },
            |_, _| 0.7,
            |s| {
                for i in 0..=10 {
                    let th = i as f64 / 10.0;
                    let t = s.t0 + th * s.h;
                    let exact = Vec3::new(t.cos(), t.sin(), 0.5);
                    worst = worst.max((s.at_fraction(th) - exact).norm());
                }
                true
            },
        )
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn failing_rhs_aborts() {
        let r = dopri5(
            |t, y| {
                if t > 0.5 {
                    Err(Error::NearNode { density: 0.0, t })
                } else {
                    Ok(*y)
                }
            },
            0.0,
            Vec3::x(),
            1.0,
            &Dopri5Options::default(),
            |_, _| f64::INFINITY,
            |_| true,
        );
        assert!(matches!(r, Err(Error::TrajectoryAbort { .. })));
    }
}
