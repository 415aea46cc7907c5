//! Cones with vertex at the origin, spheres, cone-sphere caps and product
//! quadrature rules on caps.
//!
//! Polar angles are measured from the cone axis. A cone is the open set
//! `{x : x . axis > |x| cos(half_angle)}`, so the vertex and the lateral
//! surface are excluded.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    axis: Vec3,
    half_angle: f64,
}

impl Cone {
    /// `axis` is normalized here; it must be nonzero and finite.
    pub fn new(axis: Vec3, half_angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidInput(format!(
                "cone axis must be a finite nonzero vector, got {axis:?}"
            )));
        }
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(Error::InvalidInput(format!(
                "cone half angle must lie in (0, pi], got {half_angle}"
            )));
        }
        Ok(Self {
            axis: axis / norm,
            half_angle,
        })
    }

    pub fn from_degrees(axis: Vec3, half_angle_deg: f64) -> Result<Self> {
        Self::new(axis, half_angle_deg.to_radians())
    }

    /// The whole of R^3 minus the origin, with a chosen polar axis.
    pub fn full(axis: Vec3) -> Result<Self> {
        Self::new(axis, PI)
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// The cone on the opposite side, `-axis` with half angle `pi - half_angle`.
    /// Together with `self` it partitions R^3 up to the shared boundary.
    /// Returns `None` for the full cone.
    pub fn complement(&self) -> Option<Self> {
        if self.half_angle >= PI {
            None
        } else {
            Some(Self {
                axis: -self.axis,
                half_angle: PI - self.half_angle,
            })
        }
    }

    pub fn contains(&self, v: &Vec3) -> bool {
        // Rescale first so that tiny or huge vectors do not under/overflow.
        let s = v.amax();
        if s == 0.0 || !s.is_finite() {
            return false;
        }
        if self.half_angle >= PI {
            return true;
        }
        let u = v / s;
        u.dot(&self.axis) > u.norm() * self.half_angle.cos()
    }

    pub fn solid_angle(&self) -> f64 {
        2.0 * PI * (1.0 - self.half_angle.cos())
    }

    /// Same cone rotated by `rot`.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        Self {
            axis: (rot * self.axis).normalize(),
            half_angle: self.half_angle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCap {
    pub radius: f64,
    pub cone: Cone,
}

impl SphereCap {
    pub fn new(radius: f64, cone: Cone) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sphere radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { radius, cone })
    }

    pub fn area(&self) -> f64 {
        self.radius * self.radius * self.cone.solid_angle()
    }
}

/// Right-handed orthonormal frame `(e1, e2, axis)` for polar coordinates
/// about a cone axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl Frame {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.e1, self.e2, self.e3])
    }

    /// Point at radius `r` and polar angles `(cos_theta, phi)` in this frame.
    pub fn point(&self, r: f64, cos_theta: f64, phi: f64) -> Vec3 {
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        r * (sin_theta * phi.cos() * self.e1 + sin_theta * phi.sin() * self.e2 + cos_theta * self.e3)
    }
}

/// Frame whose third vector is the cone axis.
///
/// The rotation taking the z axis onto `axis` along the great circle is used;
/// for axes in the lower hemisphere the construction first applies a half
/// turn about x, so the result for `-z` is `(x, -y, -z)`.
pub fn rotate_to_axis(cone: &Cone) -> Frame {
    let a = cone.axis();
    let flip = a.z < 0.0;
    let b = if flip { Vec3::new(a.x, -a.y, -a.z) } else { a };
    let inv = 1.0 / (1.0 + b.z);
    let e1 = Vec3::new(1.0 - b.x * b.x * inv, -b.x * b.y * inv, -b.x);
    let e2 = Vec3::new(-b.x * b.y * inv, 1.0 - b.y * b.y * inv, -b.y);
    let half_turn = |v: Vec3| Vec3::new(v.x, -v.y, -v.z);
    if flip {
        Frame {
            e1: half_turn(e1),
            e2: half_turn(e2),
            e3: a,
        }
    } else {
        Frame { e1, e2, e3: a }
    }
}

pub fn outward_normal(x: &Vec3) -> Result<Vec3> {
    let r = x.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!(
            "outward normal undefined at {x:?}"
        )));
    }
    Ok(x / r)
}

/// Product rule on a cap: Gauss–Legendre in `cos(theta)` over
/// `[cos(half_angle), 1]` times the periodic trapezoid rule with `2 * order`
/// points in `phi`. Weights are in solid-angle measure.
#[derive(Debug, Clone)]
pub struct CapQuadrature {
    pub cone: Cone,
    pub order: usize,
    /// `(theta, phi)` in the cone's frame.
    pub nodes: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    /// Unit directions of the nodes in world coordinates.
    pub directions: Vec<Vec3>,
}

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 512;
pub const DEFAULT_ORDER: usize = 64;

pub fn cap_quadrature(cap: &SphereCap, order: usize) -> Result<CapQuadrature> {
    cone_quadrature(&cap.cone, order)
}

/// The angular part of [`cap_quadrature`]; it does not depend on the radius.
pub fn cone_quadrature(cone: &Cone, order: usize) -> Result<CapQuadrature> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::Domain(format!(
            "cap quadrature order must be in [{MIN_ORDER}, {MAX_ORDER}], got {order}"
        )));
    }
    let frame = rotate_to_axis(cone);
    let gl = GaussLegendre::new(order);
    let lo = cone.half_angle().cos();
    let n_phi = 2 * order;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(order * n_phi);
    let mut weights = Vec::with_capacity(order * n_phi);
    let mut directions = Vec::with_capacity(order * n_phi);
    for (u, w) in gl.mapped(lo, 1.0) {
        let theta = u.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            let phi = dphi * j as f64;
            nodes.push((theta, phi));
            weights.push(w * dphi);
            directions.push(frame.point(1.0, u, phi));
        }
    }
    Ok(CapQuadrature {
        cone: *cone,
        order,
        nodes,
        weights,
        directions,
    })
}

impl CapQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.weights)
    }

    /// Integral over the cap of a function of the unit direction, in
    /// solid-angle measure.
    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .directions
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(d))
            .collect();
        crate::quadrature::pairwise_sum(&terms)
    }
}
