//! Wave packets built from isotropic 3-D Gaussians, evolved freely in closed
//! form (units with hbar = m = 1, free Hamiltonian -Laplacian/2).
//!
//! A component with amplitude `c`, center `b`, wavevector `k` and width `s0`
//! is, at t = 0,
//!
//! ```text
//! c (2 pi s0^2)^(-3/4) exp(-|x - b|^2 / (4 s0^2) + i k.(x - b))
//! ```
//!
//! so a unit amplitude has unit norm. With `s = s0^2 + i t / 2` it evolves to
//!
//! ```text
//! c (2 s0^2 / pi)^(3/4) (2 s)^(-3/2) exp(-|x - b - k t|^2 / (4 s) + i k.(x - b) - i |k|^2 t / 2)
//! ```
//!
//! The complex power uses the principal branch; `Re s > 0` for every real t,
//! so the branch never jumps. Fourier transforms use the symmetric convention
//! `psi_hat(p) = (2 pi)^(-3/2) int exp(-i p.y) psi(y) d^3y`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub type CVec3 = Vector3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-9;

pub(crate) fn cvec(v: &Vec3) -> CVec3 {
    v.map(|c| Complex64::new(c, 0.0))
}

/// Non-conjugating bilinear form `a . b`.
pub(crate) fn cdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

/// `(i t)^(-3/2)` on the principal branch, for t > 0.
pub fn it_pow_minus_three_halves(t: f64) -> Complex64 {
    Complex64::from_polar(t.powf(-1.5), -0.75 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub amplitude: Complex64,
    pub center: Vec3,
    pub wavevector: Vec3,
    pub width: f64,
}

impl GaussianComponent {
    pub fn new(amplitude: Complex64, center: Vec3, wavevector: Vec3, width: f64) -> Result<Self> {
        let c = Self {
            amplitude,
            center,
            wavevector,
            width,
        };
        c.validate()?;
        Ok(c)
    }

    /// Unit-amplitude component.
    pub fn unit(center: Vec3, wavevector: Vec3, width: f64) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), center, wavevector, width)
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "component width must be positive and finite, got {}",
                self.width
            )));
        }
        let finite = self.amplitude.re.is_finite()
            && self.amplitude.im.is_finite()
            && self.center.iter().all(|c| c.is_finite())
            && self.wavevector.iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidInput(
                "component amplitude, center and wavevector must be finite".into(),
            ));
        }
        Ok(())
    }

    fn evolved(&self, t: f64) -> Evolved {
        let s0sq = self.width * self.width;
        let s = Complex64::new(s0sq, 0.5 * t);
        let norm = (2.0 * s0sq / PI).powf(0.75);
        let prefactor = self.amplitude * norm * (2.0 * s).powf(-1.5);
        Evolved {
            prefactor,
            ln_prefactor: prefactor.norm().ln(),
            mean: self.center + self.wavevector * t,
            inv_two_s: 1.0 / (2.0 * s),
            center: self.center,
            wavevector: self.wavevector,
            phase: -0.5 * self.wavevector.norm_squared() * t,
        }
    }

    /// Fourier transform and its gradient.
    pub fn fourier_with_gradient(&self, p: &Vec3) -> (Complex64, CVec3) {
        let s0sq = self.width * self.width;
        let norm = (2.0 * s0sq / PI).powf(0.75);
        let dp = p - self.wavevector;
        let value = self.amplitude
            * norm
            * Complex64::new(-s0sq * dp.norm_squared(), -p.dot(&self.center)).exp();
        let grad = (cvec(&(-2.0 * s0sq * dp)) - cvec(&self.center) * I) * value;
        (value, grad)
    }

    pub fn fourier(&self, p: &Vec3) -> Complex64 {
        let s0sq = self.width * self.width;
        let norm = (2.0 * s0sq / PI).powf(0.75);
        let dp = p - self.wavevector;
        self.amplitude * norm * Complex64::new(-s0sq * dp.norm_squared(), -p.dot(&self.center)).exp()
    }

    /// `(2 pi)^(-3/2) int exp(-i v.y) exp(i |y|^2 / 2t) psi(y) d^3y` and its
    /// v-gradient, in closed form (the chirp keeps the integrand Gaussian).
    pub fn chirped_fourier_with_gradient(&self, v: &Vec3, t: f64) -> (Complex64, CVec3) {
        let s0sq = self.width * self.width;
        let b = self.center;
        // Centered at b: exponent -a|u|^2 + i w.u + gamma with w = k + b/t - v.
        let a = Complex64::new(0.25 / s0sq, -0.5 / t);
        let w = self.wavevector + b / t - v;
        let gamma = Complex64::new(0.0, 0.5 * b.norm_squared() / t - v.dot(&b));
        let unit_norm = (2.0 * PI * s0sq).powf(-0.75);
        let gauss = (PI / a).powf(1.5) * (2.0 * PI).powf(-1.5);
        let value = self.amplitude * unit_norm * gauss * (-w.norm_squared() / (4.0 * a) + gamma).exp();
        let grad = (cvec(&w) / (2.0 * a) - cvec(&b) * I) * value;
        (value, grad)
    }
}

/// A component frozen at one time, in centered form.
#[derive(Debug, Clone, Copy)]
struct Evolved {
    prefactor: Complex64,
    ln_prefactor: f64,
    mean: Vec3,
    inv_two_s: Complex64,
    center: Vec3,
    wavevector: Vec3,
    phase: f64,
}

impl Evolved {
    /// Exponent of the component at `x` (without the prefactor).
    fn exponent(&self, x: &Vec3) -> Complex64 {
        let d = x - self.mean;
        -0.5 * d.norm_squared() * self.inv_two_s
            + I * (self.wavevector.dot(&(x - self.center)) + self.phase)
    }

    /// `grad psi_i / psi_i`.
    fn log_gradient(&self, x: &Vec3) -> CVec3 {
        let d = x - self.mean;
        -cvec(&d) * self.inv_two_s + cvec(&self.wavevector) * I
    }
}

/// Value and gradient expressed as `scale_factor * exp(log_scale)`, so that
/// ratios like `grad psi / psi` survive when `psi` itself underflows.
#[derive(Debug, Clone, Copy)]
pub struct ScaledEvaluation {
    pub value: Complex64,
    pub gradient: CVec3,
    pub log_scale: f64,
}

impl ScaledEvaluation {
    pub fn value(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    pub fn gradient(&self) -> CVec3 {
        self.gradient * Complex64::new(self.log_scale.exp(), 0.0)
    }

    /// `ln |psi|^2`.
    pub fn ln_density(&self) -> f64 {
        let m = self.value.norm();
        if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            2.0 * (m.ln() + self.log_scale)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    components: Vec<GaussianComponent>,
    norm_tolerance: f64,
}

impl WavePacket {
    /// Validates the components; does not normalize.
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        Self::with_tolerance(components, DEFAULT_NORM_TOLERANCE)
    }

    pub fn with_tolerance(components: Vec<GaussianComponent>, norm_tolerance: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("wave packet needs at least one component".into()));
        }
        if !(norm_tolerance > 0.0 && norm_tolerance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "norm tolerance must be positive, got {norm_tolerance}"
            )));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self {
            components,
            norm_tolerance,
        })
    }

    /// Validate and normalize in one step.
    pub fn normalized(components: Vec<GaussianComponent>) -> Result<Self> {
        Self::new(components)?.normalize()
    }

    /// Single Gaussian, unit norm.
    pub fn gaussian(center: Vec3, wavevector: Vec3, width: f64) -> Result<Self> {
        Self::new(vec![GaussianComponent::unit(center, wavevector, width)?])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    /// Scale all amplitudes by one positive constant so that the norm is 1.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize a packet with squared norm {n2}"
            )));
        }
        let scale = n2.sqrt().recip();
        let components = self
            .components
            .iter()
            .map(|c| GaussianComponent {
                amplitude: c.amplitude * scale,
                ..*c
            })
            .collect();
        let out = Self {
            components,
            norm_tolerance: self.norm_tolerance,
        };
        let check = out.norm_squared();
        if (check - 1.0).abs() > self.norm_tolerance {
            return Err(Error::InvalidInput(format!(
                "normalization failed: squared norm {check} after rescaling"
            )));
        }
        Ok(out)
    }

    /// `||psi||^2` from pairwise overlaps in momentum space (time invariant).
    pub fn norm_squared(&self) -> f64 {
        let mut total = 0.0;
        for (i, ci) in self.components.iter().enumerate() {
            for (j, cj) in self.components.iter().enumerate().skip(i) {
                let o = momentum_overlap(ci, cj);
                total += if i == j { o.re } else { 2.0 * o.re };
            }
        }
        total
    }

    /// `||psi_t||^2` from pairwise overlaps of the evolved components in
    /// position space. Equal to [`Self::norm_squared`] by unitarity.
    pub fn norm_squared_at(&self, t: f64) -> f64 {
        let ev: Vec<Evolved> = self.components.iter().map(|c| c.evolved(t)).collect();
        let mut total = 0.0;
        for i in 0..ev.len() {
            for j in i..ev.len() {
                let o = position_overlap(&ev[i], &ev[j]);
                total += if i == j { o.re } else { 2.0 * o.re };
            }
        }
        total
    }

    /// Probability-weighted mean wavevector, ignoring interference terms.
    pub fn mean_wavevector(&self) -> Vec3 {
        let mut num = Vec3::zeros();
        let mut den = 0.0;
        for c in &self.components {
            let w = c.amplitude.norm_sqr();
            num += w * c.wavevector;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            Vec3::zeros()
        }
    }

    /// Unit vector along the mean wavevector, or z when it vanishes.
    pub fn preferred_axis(&self) -> Vec3 {
        let k = self.mean_wavevector();
        if k.norm() > 1e-12 {
            k.normalize()
        } else {
            Vec3::z()
        }
    }

    pub fn min_width(&self) -> f64 {
        self.components.iter().map(|c| c.width).fold(f64::INFINITY, f64::min)
    }

    /// A speed beyond which the momentum density is negligible (below
    /// 1e-10 in total). Each component's momentum density is an isotropic
    /// normal with standard deviation `1 / (2 width)`; ten of those past the
    /// largest `|k|` is far into the tail even after the Cauchy-Schwarz factor
    /// for interference terms.
    pub fn max_speed(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.wavevector.norm() + 10.0 / (2.0 * c.width))
            .fold(0.0, f64::max)
    }

    /// Same packet with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| GaussianComponent {
                    amplitude: c.amplitude * factor,
                    ..*c
                })
                .collect(),
            norm_tolerance: self.norm_tolerance,
        }
    }

    /// Packet rotated by `rot` about the origin.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| GaussianComponent {
                    center: rot * c.center,
                    wavevector: rot * c.wavevector,
                    ..*c
                })
                .collect(),
            norm_tolerance: self.norm_tolerance,
        }
    }

    /// `psi_t(x)`. Any real t is accepted; free evolution is defined for all times.
    pub fn evaluate(&self, x: &Vec3, t: f64) -> Complex64 {
        self.components
            .iter()
            .map(|c| {
                let e = c.evolved(t);
                e.prefactor * e.exponent(x).exp()
            })
            .sum()
    }

    pub fn gradient(&self, x: &Vec3, t: f64) -> CVec3 {
        let mut g = CVec3::zeros();
        for c in &self.components {
            let e = c.evolved(t);
            let v = e.prefactor * e.exponent(x).exp();
            g += e.log_gradient(x) * v;
        }
        g
    }

    /// Value and gradient together, sharing the exponentials.
    pub fn evaluate_with_gradient(&self, x: &Vec3, t: f64) -> (Complex64, CVec3) {
        self.at(t).evaluate_with_gradient(x)
    }

    /// The packet frozen at time `t`, for repeated evaluation at one time.
    pub fn at(&self, t: f64) -> Snapshot {
        Snapshot {
            t,
            components: self.components.iter().map(|c| c.evolved(t)).collect(),
        }
    }

    /// Value and gradient with a common log scale factored out.
    pub fn evaluate_scaled(&self, x: &Vec3, t: f64) -> ScaledEvaluation {
        let mut terms: Vec<(Evolved, Complex64)> = Vec::with_capacity(self.components.len());
        let mut log_scale = f64::NEG_INFINITY;
        for c in &self.components {
            if c.amplitude == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = c.evolved(t);
            let z = e.exponent(x);
            let lm = e.ln_prefactor + z.re;
            log_scale = log_scale.max(lm);
            terms.push((e, z));
        }
        if !log_scale.is_finite() {
            return ScaledEvaluation {
                value: Complex64::new(0.0, 0.0),
                gradient: CVec3::zeros(),
                log_scale: 0.0,
            };
        }
        let mut value = Complex64::new(0.0, 0.0);
        let mut gradient = CVec3::zeros();
        for (e, z) in terms.iter() {
            let phase = e.prefactor / e.prefactor.norm();
            let v = phase * Complex64::new(e.ln_prefactor + z.re - log_scale, z.im).exp();
            value += v;
            gradient += e.log_gradient(x) * v;
        }
        ScaledEvaluation {
            value,
            gradient,
            log_scale,
        }
    }

    pub fn density(&self, x: &Vec3, t: f64) -> f64 {
        self.evaluate(x, t).norm_sqr()
    }

    /// `psi_hat(k)`.
    pub fn fourier(&self, k: &Vec3) -> Complex64 {
        self.components.iter().map(|c| c.fourier(k)).sum()
    }

    pub fn fourier_with_gradient(&self, k: &Vec3) -> (Complex64, CVec3) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut g = CVec3::zeros();
        for c in &self.components {
            let (cv, cg) = c.fourier_with_gradient(k);
            v += cv;
            g += cg;
        }
        (v, g)
    }

    /// `|psi_hat(k)|^2`.
    pub fn momentum_density(&self, k: &Vec3) -> f64 {
        self.fourier(k).norm_sqr()
    }

    /// Large-time form `(i t)^(-3/2) exp(i |x|^2 / 2t) psi_hat(x / t)`.
    pub fn asymptotic_form(&self, x: &Vec3, t: f64) -> Result<Complex64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("asymptotic form needs t > 0, got {t}")));
        }
        let chirp = Complex64::from_polar(1.0, 0.5 * x.norm_squared() / t);
        Ok(it_pow_minus_three_halves(t) * chirp * self.fourier(&(x / t)))
    }

    /// Direct quadrature of the free propagator integral; see
    /// [`evolve_by_quadrature_oracle`].
    pub fn evolve_by_quadrature_oracle(&self, x: &Vec3, t: f64, grid: &OracleGrid) -> Result<Complex64> {
        evolve_by_quadrature_oracle(self, x, t, grid)
    }
}

/// A packet evaluated at one fixed time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    t: f64,
    components: Vec<Evolved>,
}

impl Snapshot {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn evaluate(&self, x: &Vec3) -> Complex64 {
        self.components
            .iter()
            .map(|e| e.prefactor * e.exponent(x).exp())
            .sum()
    }

    pub fn evaluate_with_gradient(&self, x: &Vec3) -> (Complex64, CVec3) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut gradient = CVec3::zeros();
        for e in &self.components {
            let v = e.prefactor * e.exponent(x).exp();
            value += v;
            gradient += e.log_gradient(x) * v;
        }
        (value, gradient)
    }

    /// Probability current `Im(conj(psi) grad psi)`.
    pub fn current(&self, x: &Vec3) -> Vec3 {
        let (psi, grad) = self.evaluate_with_gradient(x);
        grad.map(|g| (psi.conj() * g).im)
    }
}

/// `<G_i, G_j>` over all of momentum space.
fn momentum_overlap(ci: &GaussianComponent, cj: &GaussianComponent) -> Complex64 {
    let si = ci.width * ci.width;
    let sj = cj.width * cj.width;
    let ni = (2.0 * si / PI).powf(0.75);
    let nj = (2.0 * sj / PI).powf(0.75);
    let a = si + sj;
    let b = cvec(&(2.0 * si * ci.wavevector + 2.0 * sj * cj.wavevector))
        + cvec(&(ci.center - cj.center)) * I;
    let c = si * ci.wavevector.norm_squared() + sj * cj.wavevector.norm_squared();
    let gauss = (PI / a).powf(1.5);
    ci.amplitude.conj() * cj.amplitude * ni * nj * gauss * (cdot(&b, &b) / (4.0 * a) - c).exp()
}

/// `int conj(G_i(x, t)) G_j(x, t) d^3x`, expanded about the mean of `G_i`.
fn position_overlap(ei: &Evolved, ej: &Evolved) -> Complex64 {
    let ki = ei.inv_two_s.conj() * 0.5;
    let kj = ej.inv_two_s * 0.5;
    let a = ki + kj;
    let d = ej.mean - ei.mean;
    let dk = ej.wavevector - ei.wavevector;
    let b = cvec(&d) * (2.0 * kj) + cvec(&dk) * I;
    let c = -kj * d.norm_squared()
        + I * (ej.wavevector.dot(&(ei.mean - ej.center)) - ei.wavevector.dot(&(ei.mean - ei.center)))
        + I * (ej.phase - ei.phase);
    let gauss = (PI / a).powf(1.5);
    ei.prefactor.conj() * ej.prefactor * gauss * (cdot(&b, &b) / (4.0 * a) + c).exp()
}

/// Grid policy for [`evolve_by_quadrature_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Half width of the integration box per component, in units of its width.
    pub half_width: f64,
    /// Upper bound on the phase advance (radians) between neighbouring nodes.
    pub max_phase_step: f64,
    /// Relative disagreement between the base and doubled resolution that is
    /// reported as unconverged.
    pub refinement_tolerance: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            max_phase_step: 0.25,
            refinement_tolerance: 1e-4,
        }
    }
}

/// `psi_t(x) = int (2 pi i t)^(-3/2) exp(i |x - y|^2 / 2t) psi(y) d^3y` by the
/// tensor-product midpoint rule on `[b - 8 s0, b + 8 s0]^3` per component.
///
/// Kernel and components are both products of one-dimensional factors, so the
/// tensor-product sum equals the product of three one-dimensional midpoint
/// sums; that is how it is evaluated. No Gaussian integral identities are
/// used, so this is independent of the closed form in [`WavePacket::evaluate`].
pub fn evolve_by_quadrature_oracle(
    packet: &WavePacket,
    x: &Vec3,
    t: f64,
    grid: &OracleGrid,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("propagator oracle needs t > 0, got {t}")));
    }
    let coarse = oracle_sum(packet, x, t, grid, 1);
    let fine = oracle_sum(packet, x, t, grid, 2);
    let rel_diff = (fine - coarse).norm() / fine.norm().max(f64::MIN_POSITIVE);
    if rel_diff > grid.refinement_tolerance {
        return Err(Error::OracleUnconverged { rel_diff });
    }
    Ok(fine)
}

fn oracle_sum(packet: &WavePacket, x: &Vec3, t: f64, grid: &OracleGrid, refine: usize) -> Complex64 {
    let kernel_norm = Complex64::from_polar((2.0 * PI * t).powf(-1.5), -0.75 * PI);
    let mut total = Complex64::new(0.0, 0.0);
    for c in packet.components() {
        let s0 = c.width;
        let norm = (2.0 * PI * s0 * s0).powf(-0.75);
        let mut product = c.amplitude * norm;
        for d in 0..3 {
            let lo = c.center[d] - grid.half_width * s0;
            let hi = c.center[d] + grid.half_width * s0;
            // Largest local frequency of the integrand on the box.
            let freq = (x[d] - lo).abs().max((x[d] - hi).abs()) / t
                + c.wavevector[d].abs()
                + grid.half_width / (2.0 * s0);
            let h_max = grid.max_phase_step / freq;
            let n = (((hi - lo) / h_max).ceil() as usize).max(64) * refine;
            let h = (hi - lo) / n as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let y = lo + (j as f64 + 0.5) * h;
                let u = y - c.center[d];
                let arg = Complex64::new(
                    -u * u / (4.0 * s0 * s0),
                    c.wavevector[d] * u + 0.5 * (x[d] - y) * (x[d] - y) / t,
                );
                sum += arg.exp();
            }
            product *= sum * h;
        }
        total += product;
    }
    kernel_norm * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn g1() -> WavePacket {
        WavePacket::gaussian(Vec3::zeros(), Vec3::new(0.0, 0.0, 4.0), 1.0).unwrap()
    }

    #[test]
    fn single_component_normalizes_by_scaling() {
        let c = GaussianComponent::new(Complex64::new(2.0, 0.0), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
        let p = WavePacket::normalized(vec![c]).unwrap();
        assert_abs_diff_eq!(p.components()[0].amplitude.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.norm_squared(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn identical_components_collapse() {
        let c = GaussianComponent::unit(Vec3::new(0.3, 0.0, 0.0), Vec3::new(1.0, 0.0, 2.0), 0.7).unwrap();
        let p = WavePacket::normalized(vec![c, c]).unwrap();
        assert_abs_diff_eq!(p.norm_squared(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.components()[0].amplitude.re, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_and_bad_components_rejected() {
        let c = GaussianComponent::new(Complex64::new(0.0, 0.0), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
        assert!(matches!(WavePacket::normalized(vec![c]), Err(Error::InvalidInput(_))));
        assert!(WavePacket::new(vec![]).is_err());
        assert!(GaussianComponent::unit(Vec3::zeros(), Vec3::zeros(), 0.0).is_err());
        assert!(GaussianComponent::unit(Vec3::new(f64::NAN, 0.0, 0.0), Vec3::zeros(), 1.0).is_err());
    }

    #[test]
    fn value_at_origin_matches_normalization_constant() {
        let p = WavePacket::gaussian(Vec3::zeros(), Vec3::zeros(), 1.3).unwrap();
        let want = (2.0 * PI * 1.3 * 1.3).powf(-0.75);
        let got = p.evaluate(&Vec3::zeros(), 0.0);
        assert_abs_diff_eq!(got.re, want, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_special_values() {
        let p = WavePacket::gaussian(Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
        assert!(p.gradient(&Vec3::zeros(), 0.0).norm() < 1e-16);

        let b = Vec3::new(0.5, -1.0, 2.0);
        let k = Vec3::new(1.0, 2.0, -3.0);
        let p = WavePacket::gaussian(b, k, 0.8).unwrap();
        let psi = p.evaluate(&b, 0.0);
        let g = p.gradient(&b, 0.0);
        let want = cvec(&k) * (I * psi);
        assert!((g - want).norm() < 1e-15);
    }

    #[test]
    fn global_phase_leaves_modulus() {
        let p = g1();
        let q = p.scaled(Complex64::from_polar(1.0, 1.234));
        for (x, t) in [(Vec3::new(0.1, 0.2, 3.0), 1.0), (Vec3::new(-2.0, 0.0, 30.0), 8.0)] {
            assert_abs_diff_eq!(p.evaluate(&x, t).norm(), q.evaluate(&x, t).norm(), epsilon = 1e-15);
        }
    }

    #[test]
    fn unitarity_at_several_times() {
        let a = GaussianComponent::new(Complex64::new(1.0, 0.5), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 4.0), 1.0).unwrap();
        let b = GaussianComponent::new(Complex64::new(-0.3, 1.0), Vec3::new(-1.0, 0.5, 0.0), Vec3::new(1.0, 0.0, 3.0), 0.6).unwrap();
        let p = WavePacket::normalized(vec![a, b]).unwrap();
        for t in [0.0, 1.0, 10.0, 100.0, -3.0] {
            assert_abs_diff_eq!(p.norm_squared_at(t), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn scaled_evaluation_matches_direct() {
        let p = WavePacket::normalized(vec![
            GaussianComponent::unit(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 4.0), 1.0).unwrap(),
            GaussianComponent::unit(Vec3::new(-2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 4.0), 1.0).unwrap(),
        ])
        .unwrap();
        let x = Vec3::new(0.7, -0.3, 9.0);
        let s = p.evaluate_scaled(&x, 2.0);
        let direct = p.evaluate(&x, 2.0);
        assert!((s.value() - direct).norm() <= 1e-14 * direct.norm());
        assert!((s.gradient() - p.gradient(&x, 2.0)).norm() <= 1e-13 * direct.norm());
        // Far out the direct value underflows, the ratio does not.
        let far = Vec3::new(0.0, 0.0, 400.0);
        let s = p.evaluate_scaled(&far, 0.0);
        assert_eq!(p.evaluate(&far, 0.0), Complex64::new(0.0, 0.0));
        assert!(s.value.norm() > 0.0);
        assert!(s.ln_density() < -1e4);
    }

    #[test]
    fn asymptotic_form_modulus_and_domain() {
        let p = g1();
        let x = Vec3::new(1.0, -2.0, 30.0);
        let t = 7.0;
        let a = p.asymptotic_form(&x, t).unwrap();
        let want = t.powi(-3) * p.momentum_density(&(x / t));
        assert_abs_diff_eq!(a.norm_sqr(), want, epsilon = 1e-15 * want.max(1e-300));
        assert!(matches!(p.asymptotic_form(&x, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fourier_peaks_at_wavevector() {
        let p = g1();
        let peak = p.momentum_density(&Vec3::new(0.0, 0.0, 4.0));
        for d in [Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.0, 0.05, 0.05)] {
            assert!(p.momentum_density(&(Vec3::new(0.0, 0.0, 4.0) + d)) < peak);
        }
    }

    #[test]
    fn chirped_transform_tends_to_fourier() {
        let c = GaussianComponent::unit(Vec3::new(1.0, 0.0, -0.5), Vec3::new(0.0, 1.0, 4.0), 0.9).unwrap();
        let v = Vec3::new(0.2, 0.8, 3.7);
        let (f, g) = c.chirped_fourier_with_gradient(&v, 1e12);
        let (h, hg) = c.fourier_with_gradient(&v);
        assert!((f - h).norm() < 1e-10);
        assert!((g - hg).norm() < 1e-10);
    }

    #[test]
    fn oracle_domain_error_at_t_zero() {
        assert!(matches!(
            evolve_by_quadrature_oracle(&g1(), &Vec3::zeros(), 0.0, &OracleGrid::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn oracle_reports_coarse_grid() {
        let grid = OracleGrid {
            max_phase_step: 50.0,
            refinement_tolerance: 1e-12,
            ..OracleGrid::default()
        };
        let r = evolve_by_quadrature_oracle(&g1(), &Vec3::new(0.0, 3.0, 5.0), 0.1, &grid);
        assert!(matches!(r, Err(Error::OracleUnconverged { .. })));
    }
}
