//! Lorentzian linear algebra of Minkowski 4-space in the null basis, the
//! Laguerre group `R^4 ⋊ G` and its Lie algebra.
//!
//! The metric couples components 1 and 4:
//!
//! ```text
//! <v, w> = -(v1 w4 + v4 w1) + v2 w2 + v3 w3
//! ```
//!
//! so `e1` and `e4` are null and `<e1, e4> = -1`. A timelike or null vector is
//! future pointing when `<v, e1 + e4> < 0`.
//!
//! Group elements `(x, a)` act on points by `y ↦ x + a y`; they are stored
//! alongside a 5×5 homogeneous form `[[a, x], [0, 1]]` so that composition,
//! inversion and the exponential map are plain matrix operations.

use nalgebra::{Matrix4, Matrix5, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;
pub type Mat5 = Matrix5<f64>;

/// Absolute tolerance used by validity checks unless the caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative tolerance on `<v, v>` below which a vector counts as null.
pub const NULL_REL_TOL: f64 = 1e-12;

/// The Gram matrix `g_ij` of the standard basis.
pub fn metric() -> Mat4 {
    Mat4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0,
    )
}

/// Standard basis vector `e_{i+1}` (zero based index).
pub fn basis(i: usize) -> Vec4 {
    let mut v = Vec4::zeros();
    v[i] = 1.0;
    v
}

pub fn lorentz_dot(v: &Vec4, w: &Vec4) -> f64 {
    -(v[0] * w[3] + v[3] * w[0]) + v[1] * w[1] + v[2] * w[2]
}

pub fn lorentz_norm2(v: &Vec4) -> f64 {
    lorentz_dot(v, v)
}

/// `<v, e1 + e4>`; negative for future-pointing causal vectors.
pub fn time_pairing(v: &Vec4) -> f64 {
    -(v[0] + v[3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    LightlikePositive,
    LightlikeNegative,
    Zero,
}

/// Classifies `v` by the sign of `<v, v>`; null vectors are split by time
/// orientation. `<v, v>` counts as zero when it is below
/// [`NULL_REL_TOL`] relative to the Euclidean length squared.
pub fn causal_character(v: &Vec4) -> CausalCharacter {
    causal_character_with_tol(v, NULL_REL_TOL)
}

pub fn causal_character_with_tol(v: &Vec4, rel_tol: f64) -> CausalCharacter {
    let scale = v.norm_squared();
    if scale == 0.0 {
        return CausalCharacter::Zero;
    }
    let q = lorentz_norm2(v);
    if q.abs() <= rel_tol * scale {
        if time_pairing(v) < 0.0 {
            CausalCharacter::LightlikePositive
        } else {
            CausalCharacter::LightlikeNegative
        }
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    }
}

/// True when `v` is null (relative tolerance) and future pointing.
pub fn in_positive_lightcone(v: &Vec4, rel_tol: f64) -> bool {
    causal_character_with_tol(v, rel_tol) == CausalCharacter::LightlikePositive
}

/// Residuals of the three conditions on the linear part of a Laguerre
/// transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCheck {
    pub det_residual: f64,
    pub metric_residual: f64,
    /// `max(<a e1, e1+e4>, <a e4, e1+e4>)`; must be negative.
    pub cone_pairing: f64,
    pub valid: bool,
}

pub fn validate_laguerre_linear(a: &Mat4, tol: f64) -> LinearCheck {
    let g = metric();
    let det_residual = (a.determinant() - 1.0).abs();
    let metric_residual = (a.transpose() * g * a - g).amax();
    let c1 = time_pairing(&a.column(0).into_owned());
    let c4 = time_pairing(&a.column(3).into_owned());
    let cone_pairing = c1.max(c4);
    // Null-ness of the columns follows from the metric condition.
    let valid = det_residual <= tol && metric_residual <= tol && cone_pairing < 0.0;
    LinearCheck {
        det_residual,
        metric_residual,
        cone_pairing,
        valid,
    }
}

/// A point `x` with an oriented basis `a1..a4` satisfying `<a_i, a_j> = g_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaguerreFrame {
    pub origin: Vec4,
    pub basis: [Vec4; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameCheck {
    pub gram_residual: f64,
    pub a1_positive: bool,
    pub a4_positive: bool,
    pub valid: bool,
}

impl LaguerreFrame {
    pub fn standard() -> Self {
        LaguerreFrame {
            origin: Vec4::zeros(),
            basis: [basis(0), basis(1), basis(2), basis(3)],
        }
    }
}

pub fn validate_frame(frame: &LaguerreFrame, tol: f64) -> FrameCheck {
    let g = metric();
    let mut gram_residual = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            let r = (lorentz_dot(&frame.basis[i], &frame.basis[j]) - g[(i, j)]).abs();
            gram_residual = gram_residual.max(r);
        }
    }
    // Nullity is covered by the Gram residual; only the time orientation is
    // checked separately.
    let a1_positive = time_pairing(&frame.basis[0]) < 0.0;
    let a4_positive = time_pairing(&frame.basis[3]) < 0.0;
    FrameCheck {
        gram_residual,
        a1_positive,
        a4_positive,
        valid: gram_residual <= tol && a1_positive && a4_positive,
    }
}

/// Time-oriented isotropic line `[x, v]`.
///
/// Stored canonically: `<v, e1 + e4> = -1` and the base point is the unique
/// point of the line with `<x, e1 + e4> = 0` (a point sphere), so equal lines
/// compare equal componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicLine {
    base: Vec4,
    direction: Vec4,
}

impl IsotropicLine {
    pub fn new(base: Vec4, direction: Vec4) -> Result<Self> {
        if !in_positive_lightcone(&direction, 1e-9) {
            return Err(Error::NotPositiveLightlike {
                character: causal_character(&direction),
            });
        }
        let v = direction / -time_pairing(&direction);
        // <x + t v, e1+e4> = <x, e1+e4> - t = 0
        let t = time_pairing(&base);
        let mut base = base + t * v;
        // remove the rounding residue so that re-canonicalizing is a no-op
        base[0] = -base[3];
        Ok(IsotropicLine { base, direction: v })
    }

    pub fn base(&self) -> Vec4 {
        self.base
    }

    pub fn direction(&self) -> Vec4 {
        self.direction
    }

    pub fn point_at(&self, t: f64) -> Vec4 {
        self.base + t * self.direction
    }
}

/// An element `(x, a)` of the Laguerre group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaguerreElement {
    pub translation: Vec4,
    pub linear: Mat4,
}

impl LaguerreElement {
    pub fn identity() -> Self {
        LaguerreElement {
            translation: Vec4::zeros(),
            linear: Mat4::identity(),
        }
    }

    /// Checked constructor; the linear part must pass
    /// [`validate_laguerre_linear`] at `tol`.
    pub fn new(translation: Vec4, linear: Mat4, tol: f64) -> Result<Self> {
        let check = validate_laguerre_linear(&linear, tol);
        if !check.valid {
            return Err(Error::InvalidGroupElement(check));
        }
        Ok(LaguerreElement {
            translation,
            linear,
        })
    }

    pub fn from_frame(frame: &LaguerreFrame) -> Self {
        LaguerreElement {
            translation: frame.origin,
            linear: Mat4::from_columns(&frame.basis),
        }
    }

    pub fn frame(&self) -> LaguerreFrame {
        LaguerreFrame {
            origin: self.translation,
            basis: [
                self.linear.column(0).into_owned(),
                self.linear.column(1).into_owned(),
                self.linear.column(2).into_owned(),
                self.linear.column(3).into_owned(),
            ],
        }
    }

    pub fn column(&self, i: usize) -> Vec4 {
        self.linear.column(i).into_owned()
    }

    pub fn to_homogeneous(&self) -> Mat5 {
        let mut m = Mat5::identity();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.linear);
        m.fixed_view_mut::<4, 1>(0, 4).copy_from(&self.translation);
        m
    }

    /// Reads back the affine blocks; the bottom row is ignored.
    pub fn from_homogeneous(m: &Mat5) -> Self {
        LaguerreElement {
            translation: m.fixed_view::<4, 1>(0, 4).into_owned(),
            linear: m.fixed_view::<4, 4>(0, 0).into_owned(),
        }
    }

    /// `(x, a)(y, b) = (x + a y, a b)`.
    pub fn compose(&self, other: &LaguerreElement) -> LaguerreElement {
        LaguerreElement {
            translation: self.translation + self.linear * other.translation,
            linear: self.linear * other.linear,
        }
    }

    /// Uses `a^-1 = g a^T g`, exact for isometries.
    pub fn inverse(&self) -> LaguerreElement {
        let g = metric();
        let inv = g * self.linear.transpose() * g;
        LaguerreElement {
            translation: -(inv * self.translation),
            linear: inv,
        }
    }

    pub fn act_on_point(&self, y: &Vec4) -> Vec4 {
        self.translation + self.linear * y
    }

    /// `(x, a)·[y, v] = [x + a y, a v]`.
    pub fn act_on_line(&self, line: &IsotropicLine) -> IsotropicLine {
        IsotropicLine::new(
            self.act_on_point(&line.base()),
            self.linear * line.direction(),
        )
        .expect("Laguerre transformations preserve the positive light cone")
    }

    /// Largest entrywise difference of the homogeneous matrices.
    pub fn distance(&self, other: &LaguerreElement) -> f64 {
        (self.translation - other.translation)
            .amax()
            .max((self.linear - other.linear).amax())
    }

    pub fn check(&self, tol: f64) -> LinearCheck {
        validate_laguerre_linear(&self.linear, tol)
    }
}

/// An element `(v, X)` of the Lie algebra of the Laguerre group:
/// `X^T g + g X = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub translation: Vec4,
    pub linear: Mat4,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement {
            translation: Vec4::zeros(),
            linear: Mat4::zeros(),
        }
    }

    pub fn new(translation: Vec4, linear: Mat4) -> Self {
        AlgebraElement {
            translation,
            linear,
        }
    }

    /// Builds `X = g S` from an antisymmetric `S`, which always satisfies
    /// the infinitesimal isometry condition. Only the strictly upper
    /// triangle of `skew` is read.
    pub fn from_skew(translation: Vec4, skew: &Mat4) -> Self {
        let mut s = Mat4::zeros();
        for i in 0..4 {
            for j in (i + 1)..4 {
                s[(i, j)] = skew[(i, j)];
                s[(j, i)] = -skew[(i, j)];
            }
        }
        AlgebraElement {
            translation,
            linear: metric() * s,
        }
    }

    /// `max |X^T g + g X|`.
    pub fn isometry_residual(&self) -> f64 {
        let g = metric();
        (self.linear.transpose() * g + g * self.linear).amax()
    }

    pub fn to_homogeneous(&self) -> Mat5 {
        let mut m = Mat5::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.linear);
        m.fixed_view_mut::<4, 1>(0, 4).copy_from(&self.translation);
        m
    }

    pub fn from_homogeneous(m: &Mat5) -> Self {
        AlgebraElement {
            translation: m.fixed_view::<4, 1>(0, 4).into_owned(),
            linear: m.fixed_view::<4, 4>(0, 0).into_owned(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement {
            translation: self.translation * s,
            linear: self.linear * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgebraElement {
            translation: self.translation + other.translation,
            linear: self.linear + other.linear,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `[ξ, η] = ξη - ηξ` in the homogeneous embedding.
    pub fn bracket(&self, other: &Self) -> Self {
        AlgebraElement {
            translation: self.linear * other.translation - other.linear * self.translation,
            linear: self.linear * other.linear - other.linear * self.linear,
        }
    }

    pub fn amax(&self) -> f64 {
        self.translation.amax().max(self.linear.amax())
    }

    /// Group exponential via the 5×5 embedding `[[X, v], [0, 0]]`.
    pub fn exp(&self) -> LaguerreElement {
        LaguerreElement::from_homogeneous(&self.to_homogeneous().exp())
    }
}
