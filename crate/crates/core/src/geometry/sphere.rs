//! Middle spheres: the L-Gauss map decoded as a sphere congruence must be the
//! congruence of spheres of radius `H/K` touching `f`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{jet, SurfaceMaps};
use crate::cyclographic::point_to_sphere;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddleSphereReport {
    /// `max |r(σ) - H/K|` over checked nodes.
    pub radius_residual: f64,
    /// `max |center(σ) - (f + (H/K) n)|` (largest component).
    pub center_residual: f64,
    pub checked: usize,
    /// Nodes skipped because `|K| < parabolic_eps` or `f` is not immersed.
    pub parabolic: usize,
}

/// Euclidean `H = ½ tr(I⁻¹ II)` and `K = det II / det I` from central
/// differences of `f`, with `II_ij = f_ij · n` for the normal `n` of the
/// lift (not re-derived from `f`).
pub fn middle_sphere_check(maps: &SurfaceMaps, parabolic_eps: f64) -> MiddleSphereReport {
    let g = maps.grid();
    let mut rep = MiddleSphereReport {
        radius_residual: 0.0,
        center_residual: 0.0,
        checked: 0,
        parabolic: 0,
    };
    for (i, j) in g.nodes(1) {
        let d = jet(&maps.f, i, j);
        let n = maps.n.at(i, j);
        let first = Matrix2::new(d.x.dot(&d.x), d.x.dot(&d.y), d.x.dot(&d.y), d.y.dot(&d.y));
        let second = Matrix2::new(d.xx.dot(n), d.xy.dot(n), d.xy.dot(n), d.yy.dot(n));
        let det_i = first.determinant();
        let k = second.determinant() / det_i;
        if !(det_i > 0.0) || !(k.abs() >= parabolic_eps) {
            rep.parabolic += 1;
            continue;
        }
        let h = 0.5 * (first.try_inverse().unwrap() * second).trace();
        let r = h / k;
        let s = point_to_sphere(maps.sigma.at(i, j));
        let center = maps.f.at(i, j) + n * r;
        rep.radius_residual = rep.radius_residual.max((s.radius - r).abs());
        rep.center_residual = rep.center_residual.max((s.center - center).amax());
        rep.checked += 1;
    }
    rep
}
