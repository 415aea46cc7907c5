//! Small helpers for convergence tables: log-log slopes and monotonicity.

/// Least-squares slope of `ln y` against `ln x`.
///
/// Returns negative infinity when the sequence reaches exactly zero after
/// positive values (decay faster than any power, i.e. underflow), and NaN
/// for fewer than two points, nonpositive abscissae or negative ordinates.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() != ys.len() || xs.len() < 2 {
        return f64::NAN;
    }
    if xs.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || ys.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
        return f64::NAN;
    }
    if let Some(first_zero) = ys.iter().position(|&y| y == 0.0) {
        return if first_zero > 0 && ys[first_zero..].iter().all(|&y| y == 0.0) {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn is_strictly_decreasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] < w[0])
}

pub fn is_nonincreasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] <= w[0])
}
