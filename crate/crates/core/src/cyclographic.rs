//! The cyclographic dictionary between Euclidean sphere geometry and
//! Minkowski 4-space.
//!
//! * an oriented sphere with center `p` and signed radius `r` is the point
//!   `((r + p1)/√2, p2, p3, (r - p1)/√2)`;
//! * an oriented plane with unit normal `n` is the null hyperplane with normal
//!   `((1 + n1)/2, n2/√2, n3/√2, (1 - n1)/2)`;
//! * a contact element `(p, n)` is the isotropic line through the point
//!   sphere at `p` in that null direction.
//!
//! Every sphere `(p + r n, r)` lies on the line of `(p, n)`: the spheres of a
//! line are exactly the spheres touching the plane at `p` with orientation
//! `n`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};
use crate::minkowski::{causal_character, lorentz_dot, lorentz_norm2, CausalCharacter, IsotropicLine, Vec4};

pub type Vec3 = Vector3<f64>;

/// Normals within this distance of unit length are renormalized; anything
/// further off is rejected.
pub const UNIT_NORMAL_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedSphere {
    pub center: Vec3,
    /// Signed radius; zero is a point sphere.
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedPlane {
    normal: Vec3,
    pub point: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactElement {
    pub point: Vec3,
    normal: Vec3,
}

fn unit_normal(n: Vec3) -> Result<Vec3> {
    let norm = n.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORMAL_SLACK {
        return Err(Error::NonUnitNormal { norm });
    }
    Ok(n / norm)
}

impl OrientedPlane {
    pub fn new(normal: Vec3, point: Vec3) -> Result<Self> {
        Ok(OrientedPlane {
            normal: unit_normal(normal)?,
            point,
        })
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }
}

impl ContactElement {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        Ok(ContactElement {
            point,
            normal: unit_normal(normal)?,
        })
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }
}

pub fn sphere_to_point(s: &OrientedSphere) -> Vec4 {
    let p = &s.center;
    Vec4::new(
        (s.radius + p[0]) * FRAC_1_SQRT_2,
        p[1],
        p[2],
        (s.radius - p[0]) * FRAC_1_SQRT_2,
    )
}

pub fn point_to_sphere(x: &Vec4) -> OrientedSphere {
    OrientedSphere {
        center: Vec3::new((x[0] - x[3]) * FRAC_1_SQRT_2, x[1], x[2]),
        radius: (x[0] + x[3]) * FRAC_1_SQRT_2,
    }
}

fn null_normal(n: &Vec3) -> Vec4 {
    Vec4::new(
        0.5 * (1.0 + n[0]),
        n[1] * FRAC_1_SQRT_2,
        n[2] * FRAC_1_SQRT_2,
        0.5 * (1.0 - n[0]),
    )
}

/// Null normal of the hyperplane representing an oriented plane. It is
/// always normalized so that `<v, e1 + e4> = -1`.
pub fn plane_to_isotropic_normal(plane: &OrientedPlane) -> Vec4 {
    null_normal(&plane.normal)
}

pub fn contact_to_line(ce: &ContactElement) -> IsotropicLine {
    let base = sphere_to_point(&OrientedSphere {
        center: ce.point,
        radius: 0.0,
    });
    IsotropicLine::new(base, null_normal(&ce.normal))
        .expect("null normal of a unit vector is future pointing")
}

pub fn line_to_contact(line: &IsotropicLine) -> ContactElement {
    // The canonical base point already has radius zero.
    let v = line.direction();
    let n = Vec3::new(v[0] - v[3], SQRT_2 * v[1], SQRT_2 * v[2]);
    ContactElement {
        point: point_to_sphere(&line.base()).center,
        normal: n.normalize(),
    }
}

/// Contact element of the line `[base, direction]` given in any
/// parametrization.
pub fn contact_from_raw(base: &Vec4, direction: &Vec4) -> Result<ContactElement> {
    Ok(line_to_contact(&IsotropicLine::new(*base, *direction)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Spacelike separation; the distance is the tangential distance.
    Tangential,
    /// Timelike separation; the distance is the parallel distance.
    Parallel,
    /// Null separation: oriented contact.
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRelation {
    pub kind: PairKind,
    pub distance: f64,
}

pub const CONTACT_TOL: f64 = 1e-12;

pub fn pair_relation(x: &Vec4, y: &Vec4) -> PairRelation {
    pair_relation_with_tol(x, y, CONTACT_TOL)
}

pub fn pair_relation_with_tol(x: &Vec4, y: &Vec4, tol: f64) -> PairRelation {
    let d = x - y;
    let q = lorentz_norm2(&d);
    let kind = if q.abs() < tol * (1.0 + d.norm_squared()) {
        PairKind::Contact
    } else if q > 0.0 {
        PairKind::Tangential
    } else {
        PairKind::Parallel
    };
    let distance = match kind {
        PairKind::Contact => 0.0,
        _ => q.abs().sqrt(),
    };
    PairRelation { kind, distance }
}

/// A spherical (pseudo-hypersphere) or planar (hyperplane) system of
/// L-spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereSystem {
    /// `<x - center, x - center> = c`
    Spherical { center: Vec4, c: f64 },
    /// `<x - point, normal> = 0`
    Planar { point: Vec4, normal: Vec4 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemCharacter {
    Isotropic,
    Timelike,
    Spacelike,
}

impl SphereSystem {
    pub fn contains(&self, x: &Vec4, tol: f64) -> bool {
        match self {
            SphereSystem::Spherical { center, c } => {
                let d = x - center;
                (lorentz_norm2(&d) - c).abs() <= tol
            }
            SphereSystem::Planar { point, normal } => lorentz_dot(&(x - point), normal).abs() <= tol,
        }
    }

    /// Spherical systems are timelike for `c > 0`; planar systems take the
    /// opposite character of their normal.
    pub fn character(&self) -> SystemCharacter {
        match self {
            SphereSystem::Spherical { c, .. } => {
                if *c == 0.0 {
                    SystemCharacter::Isotropic
                } else if *c > 0.0 {
                    SystemCharacter::Timelike
                } else {
                    SystemCharacter::Spacelike
                }
            }
            SphereSystem::Planar { normal, .. } => match causal_character(normal) {
                CausalCharacter::Spacelike => SystemCharacter::Timelike,
                CausalCharacter::Timelike => SystemCharacter::Spacelike,
                _ => SystemCharacter::Isotropic,
            },
        }
    }
}

pub fn system_membership(x: &Vec4, system: &SphereSystem, tol: f64) -> bool {
    system.contains(x, tol)
}
