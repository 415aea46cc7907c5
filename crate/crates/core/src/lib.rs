//! Numerical laboratory for the free flux-across-surfaces theorem.
//!
//! Wave packets are finite sums of Gaussians evolved exactly under the free
//! Schrödinger equation (hbar = m = 1). On top of that the crate integrates
//! the probability current over distant spherical caps and over time,
//! compares the result with momentum-space cone probabilities, and
//! cross-checks both against first-crossing statistics of Bohmian
//! trajectories.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature tables keep their published digits.
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod bohm;
pub mod conescan;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod wavepacket;

pub use error::{Error, Result};
pub use geometry::{Cone, CapQuadrature, Frame, SphereCap, Vec3};
pub use num_complex::Complex64;
pub use wavepacket::{CVec3, GaussianComponent, WavePacket};

/// The single Gaussian used throughout the examples: width 1, centered at
/// the origin, wavevector (0, 0, 4).
pub fn canonical_g1() -> WavePacket {
    WavePacket::gaussian(Vec3::zeros(), Vec3::new(0.0, 0.0, 4.0), 1.0)
        .expect("canonical packet is valid")
}

/// Equal-weight superposition of two width-1 Gaussians at (+-2, 0, 0), both
/// with wavevector (0, 0, 4), normalized.
pub fn canonical_g2() -> WavePacket {
    let k = Vec3::new(0.0, 0.0, 4.0);
    WavePacket::normalized(vec![
        GaussianComponent::unit(Vec3::new(2.0, 0.0, 0.0), k, 1.0).expect("valid component"),
        GaussianComponent::unit(Vec3::new(-2.0, 0.0, 0.0), k, 1.0).expect("valid component"),
    ])
    .expect("canonical packet is valid")
}
