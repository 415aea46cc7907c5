//! One-dimensional quadrature: Gauss–Legendre rules, composite panels and an
//! adaptive Gauss–Kronrod (7/15) integrator for small vector-valued integrands.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the three-term recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.mapped(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule over a list of panel breakpoints.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// `breaks` must be sorted ascending; each consecutive pair is one panel.
    pub fn from_breaks(breaks: &[f64], order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            if pair[1] <= pair[0] {
                continue;
            }
            for (x, w) in gl.mapped(pair[0], pair[1]) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Self { nodes, weights }
    }

    /// Uniform panels of width at most `max_width` on [a, b].
    pub fn uniform(a: f64, b: f64, max_width: f64, order: usize) -> Self {
        let panels = (((b - a) / max_width).ceil() as usize).max(1);
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::from_breaks(&breaks, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Summation with O(log n) error growth and a fixed association order, so a
/// given input slice always produces the same bits.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

impl<const N: usize> Segment<N> {
    fn worst(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst()
            .total_cmp(&other.worst())
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let mut resabs = [0.0; N];
    for c in 0..N {
        kronrod[c] = fc[c] * WGK[7];
        gauss[c] = fc[c] * WG[3];
        resabs[c] = fc[c].abs() * WGK[7];
    }
    let mut samples = Vec::with_capacity(15);
    samples.push((7usize, fc, fc));
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for c in 0..N {
            kronrod[c] += WGK[j] * (f1[c] + f2[c]);
            resabs[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
        }
        samples.push((j, f1, f2));
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let mean = 0.5 * kronrod[c];
        let mut resasc = WGK[7] * (fc[c] - mean).abs();
        for &(j, f1, f2) in &samples[1..] {
            resasc += WGK[j] * ((f1[c] - mean).abs() + (f2[c] - mean).abs());
        }
        let resasc = resasc * half.abs();
        let resabs = resabs[c] * half.abs();
        let mut err = ((kronrod[c] - gauss[c]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let roundoff = 50.0 * f64::EPSILON * resabs;
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err < roundoff {
            err = roundoff;
        }
        value[c] = kronrod[c] * half;
        error[c] = err;
    }
    Segment { a, b, value, error }
}

/// Result of [`adaptive_gk15`]: per-component integral and error estimate.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveIntegral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub intervals: usize,
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature of a vector integrand.
///
/// The interval with the largest error estimate is bisected until every
/// component's summed error is at most `abs_tol`. `breakpoints` seed the
/// initial partition (points outside (a, b) are ignored).
pub fn adaptive_gk15<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    max_intervals: usize,
) -> Result<AdaptiveIntegral<N>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(AdaptiveIntegral {
            value: [0.0; N],
            error: [0.0; N],
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = breakpoints
        .iter()
        .cloned()
        .filter(|&p| p > lo && p < hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = vec![lo];
    edges.extend(points);
    edges.push(hi);

    let mut heap: BinaryHeap<Segment<N>> = edges
        .windows(2)
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();

    let totals = |heap: &BinaryHeap<Segment<N>>| {
        let mut err = [0.0; N];
        for s in heap.iter() {
            for (e, se) in err.iter_mut().zip(&s.error) {
                *e += se;
            }
        }
        err
    };

    loop {
        let err = totals(&heap);
        let worst = err.iter().cloned().fold(0.0, f64::max);
        if worst <= abs_tol {
            break;
        }
        if heap.len() >= max_intervals {
            let result = finish(&heap, sign);
            return Err(Error::Unconverged {
                what: format!("adaptive quadrature on [{lo}, {hi}]"),
                partial: result.value[0],
                error: worst,
                tolerance: abs_tol,
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval cannot be split further in floating point.
            let result = finish(&heap, sign);
            return Err(Error::Unconverged {
                what: format!("adaptive quadrature hit resolution limit near t = {mid}"),
                partial: result.value[0] + sign * seg.value[0],
                error: worst,
                tolerance: abs_tol,
            });
        }
        heap.push(gk15(&f, seg.a, mid));
        heap.push(gk15(&f, mid, seg.b));
    }
    Ok(finish(&heap, sign))
}

fn finish<const N: usize>(heap: &BinaryHeap<Segment<N>>, sign: f64) -> AdaptiveIntegral<N> {
    let mut segs: Vec<&Segment<N>> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let vals: Vec<f64> = segs.iter().map(|s| s.value[c]).collect();
        let errs: Vec<f64> = segs.iter().map(|s| s.error[c]).collect();
        value[c] = sign * pairwise_sum(&vals);
        error[c] = pairwise_sum(&errs);
    }
    AdaptiveIntegral {
        value,
        error,
        intervals: segs.len(),
    }
}
