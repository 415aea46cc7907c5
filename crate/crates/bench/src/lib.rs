//! Shared fixtures for the kernel benchmarks under `benches/`.

use fluxlab::Vec3;

/// `n` points scattered around the classical path `x = (0, 0, 4t)` of the
/// canonical packets at time `t`, deterministic so runs are comparable.
pub fn points_near_path(n: usize, t: f64) -> Vec<Vec3> {
    let spread = (1.0 + t * t / 4.0f64).sqrt();
    (0..n)
        .map(|i| {
            let a = i as f64 * 2.399_963;
            let r = spread * (0.2 + (i % 7) as f64 * 0.3);
            Vec3::new(r * a.cos(), r * a.sin(), 4.0 * t + spread * ((i % 5) as f64 - 2.0) * 0.5)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(points_near_path(16, 3.0), points_near_path(16, 3.0));
        assert_eq!(points_near_path(16, 3.0).len(), 16);
    }
}
