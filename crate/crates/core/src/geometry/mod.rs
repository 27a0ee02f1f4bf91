//! Geometry of the L-Gauss map `σ` as a spacelike surface in Minkowski
//! 4-space, and of the Euclidean realization `(f, n)`.
//!
//! All derivatives are central differences on the frame grid, so every
//! per-node quantity here lives one node in from its boundary.

mod mesh;
mod quadric;
mod sphere;

pub use mesh::{export_mesh, read_obj, write_obj, ObjMesh};
pub use quadric::{
    cmc_in_quadric, hyperplane_detect, lawson_table, quadric_detect, CmcSummary, HyperplaneClass,
    HyperplaneFit, LawsonRow, QuadricClass, QuadricFit,
};
pub use sphere::{middle_sphere_check, MiddleSphereReport};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::blaschke::InvariantField;
use crate::cyclographic::Vec3;
use crate::error::{Error, Result};
use crate::frames::{origins, realize_legendre, FrameField};
use crate::grid::{Grid, NodeField, ScalarField};
use crate::minkowski::{lorentz_dot, Vec4};

/// `σ` with its Euclidean Legendre lift, all on the frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMaps {
    pub sigma: NodeField<Vec4>,
    pub f: NodeField<Vec3>,
    pub n: NodeField<Vec3>,
}

impl SurfaceMaps {
    pub fn from_frames(field: &FrameField) -> Result<Self> {
        let lift = realize_legendre(field)?;
        Ok(SurfaceMaps {
            sigma: gauss_map(field),
            f: lift.f,
            n: lift.n,
        })
    }

    pub fn grid(&self) -> Grid {
        self.sigma.grid
    }
}

/// The frame origins.
pub fn gauss_map(field: &FrameField) -> NodeField<Vec4> {
    origins(field)
}

pub(crate) fn check_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::InvalidGrid(format!(
            "fields live on different grids ({}x{} vs {}x{})",
            a.nx, a.ny, b.nx, b.ny
        )));
    }
    Ok(())
}

/// Central first and second differences of a vector field at `(i, j)`.
pub(crate) struct Jet<V> {
    pub x: V,
    pub y: V,
    pub xx: V,
    pub yy: V,
    pub xy: V,
}

pub(crate) fn jet<V>(field: &NodeField<V>, i: usize, j: usize) -> Jet<V>
where
    V: Copy
        + std::ops::Add<Output = V>
        + std::ops::Sub<Output = V>
        + std::ops::Mul<f64, Output = V>,
{
    let g = field.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let c = *field.at(i, j);
    let (e, w) = (*field.at(i + 1, j), *field.at(i - 1, j));
    let (n, s) = (*field.at(i, j + 1), *field.at(i, j - 1));
    let xy = (*field.at(i + 1, j + 1) - *field.at(i - 1, j + 1) - *field.at(i + 1, j - 1)
        + *field.at(i - 1, j - 1))
        * (0.25 / (hx * hy));
    Jet {
        x: (e - w) * (0.5 / hx),
        y: (n - s) * (0.5 / hy),
        xx: (e - c * 2.0 + w) * (1.0 / (hx * hx)),
        yy: (n - c * 2.0 + s) * (1.0 / (hy * hy)),
        xy,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedMetric {
    /// Gram matrix of `σ_x, σ_y` on interior nodes (NaN on the boundary).
    pub gram: NodeField<Matrix2<f64>>,
    /// `max |Gram - e^{2u} I|` over interior nodes.
    pub deviation: f64,
    /// Smallest eigenvalue over interior nodes; positive for a spacelike
    /// immersion.
    pub min_eigenvalue: f64,
}

pub fn induced_metric(sigma: &NodeField<Vec4>, u: &ScalarField) -> Result<InducedMetric> {
    let g = sigma.grid;
    check_same_grid(g, u.grid)?;
    let nan = Matrix2::from_element(f64::NAN);
    let mut gram = NodeField::from_fn(g, |_, _| nan);
    let mut deviation = 0.0_f64;
    let mut min_eigenvalue = f64::INFINITY;
    for (i, j) in g.nodes(1) {
        let d = jet(sigma, i, j);
        let m = Matrix2::new(
            lorentz_dot(&d.x, &d.x),
            lorentz_dot(&d.x, &d.y),
            lorentz_dot(&d.x, &d.y),
            lorentz_dot(&d.y, &d.y),
        );
        let e2 = (2.0 * u.v(i, j)).exp();
        deviation = deviation.max((m - Matrix2::identity() * e2).amax());
        min_eigenvalue = min_eigenvalue.min(m.symmetric_eigenvalues().min());
        *gram.at_mut(i, j) = m;
    }
    Ok(InducedMetric {
        gram,
        deviation,
        min_eigenvalue,
    })
}

/// `max |G_a - G_b|` over interior nodes of two metrics on the same grid.
pub fn metric_difference(a: &InducedMetric, b: &InducedMetric) -> Result<f64> {
    let g = a.gram.grid;
    check_same_grid(g, b.gram.grid)?;
    Ok(g
        .nodes(1)
        .map(|(i, j)| (a.gram.at(i, j) - b.gram.at(i, j)).amax())
        .fold(0.0, f64::max))
}

/// Normal components of the second derivatives of `σ` in the frame basis:
/// `h1_ij = -<σ_ij, a4>` (coefficient of `a1`) and `h4_ij = -<σ_ij, a1>`
/// (coefficient of `a4`).
pub fn second_fundamental_form(field: &FrameField) -> NodeField<[Matrix2<f64>; 2]> {
    let sigma = gauss_map(field);
    let g = sigma.grid;
    let nan = Matrix2::from_element(f64::NAN);
    let mut out = NodeField::from_fn(g, |_, _| [nan, nan]);
    for (i, j) in g.nodes(1) {
        let d = jet(&sigma, i, j);
        let a = field.at(i, j);
        let (a1, a4) = (a.column(0), a.column(3));
        let coef = |b: &Vec4| {
            Matrix2::new(
                -lorentz_dot(&d.xx, b),
                -lorentz_dot(&d.xy, b),
                -lorentz_dot(&d.xy, b),
                -lorentz_dot(&d.yy, b),
            )
        };
        *out.at_mut(i, j) = [coef(&a4), coef(&a1)];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureReport {
    /// `max |H_analytic - H_numeric|` (largest component) on interior nodes.
    pub discrepancy: f64,
    /// `max |<H, H>|` of the numeric vector.
    pub max_norm2: f64,
    /// `max |H|` (largest component) of the analytic vector.
    pub max_abs: f64,
    /// Largest component of the numeric `H` off the `a1` direction.
    pub off_a1: f64,
}

/// Analytic `H = ½(p1 + p3) a1` against the numeric `½ e^{-2u}` times the
/// normal projection of `σ_xx + σ_yy`.
pub fn mean_curvature_vector(field: &FrameField, inv: &InvariantField) -> Result<(NodeField<Vec4>, MeanCurvatureReport)> {
    let g = field.grid();
    check_same_grid(g, inv.grid())?;
    let sigma = gauss_map(field);
    let analytic = NodeField::from_fn(g, |i, j| {
        let q = inv.at(i, j);
        field.at(i, j).column(0) * (0.5 * (q.p1 + q.p3))
    });
    let mut rep = MeanCurvatureReport {
        discrepancy: 0.0,
        max_norm2: 0.0,
        max_abs: 0.0,
        off_a1: 0.0,
    };
    for (i, j) in g.nodes(1) {
        let d = jet(&sigma, i, j);
        let a = field.at(i, j);
        let (a1, a4) = (a.column(0), a.column(3));
        let lap = d.xx + d.yy;
        let scale = 0.5 * (-2.0 * inv.u.v(i, j)).exp();
        let c1 = -lorentz_dot(&lap, &a4) * scale;
        let c4 = -lorentz_dot(&lap, &a1) * scale;
        let numeric = a1 * c1 + a4 * c4;
        let h = analytic.at(i, j);
        rep.discrepancy = rep.discrepancy.max((numeric - h).amax());
        rep.max_norm2 = rep.max_norm2.max(lorentz_dot(&numeric, &numeric).abs());
        rep.max_abs = rep.max_abs.max(h.amax());
        rep.off_a1 = rep.off_a1.max((a4 * c4).amax());
    }
    Ok((analytic, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialReport {
    /// Mean of `Q e^{4u}`; `-c/2` for special potentials.
    pub q_const: f64,
    /// `max |Q e^{4u} - mean|`.
    pub q_spread: f64,
    /// Mean of `P e^{2u}`; `2(k + m)` for special potentials.
    pub p_const: f64,
    pub p_spread: f64,
    /// `max |∂_z̄ (Q e^{4u})|, |∂_z̄ (P e^{2u})|` on interior nodes.
    pub cr_residual: f64,
    /// `max |P|`.
    pub p_max: f64,
    /// Mean and spread of `Q / P²`; absent when `P` vanishes somewhere.
    pub ratio: Option<f64>,
    pub ratio_spread: Option<f64>,
}

/// `Q = J` (here `p2 = 0`) and `P = p1 + p3 = 2W`, rescaled by `λ⁴ = e^{4u}`
/// and `λ² = e^{2u}`.
pub fn differentials(inv: &InvariantField) -> DifferentialReport {
    let g = inv.grid();
    let qs = ScalarField::from_fn(g, |i, j| inv.at(i, j).j * (4.0 * inv.u.v(i, j)).exp());
    let ps = ScalarField::from_fn(g, |i, j| {
        let q = inv.at(i, j);
        (q.p1 + q.p3) * (2.0 * inv.u.v(i, j)).exp()
    });
    let dbar = |f: &ScalarField, i, j| 0.5 * f.dx(i, j).hypot(f.dy(i, j));
    let cr_residual = g
        .nodes(1)
        .map(|(i, j)| dbar(&qs, i, j).max(dbar(&ps, i, j)))
        .fold(0.0, f64::max);
    let p_max = inv
        .nodes
        .values
        .iter()
        .map(|q| (q.p1 + q.p3).abs())
        .fold(0.0, f64::max);
    let p_min = inv
        .nodes
        .values
        .iter()
        .map(|q| (q.p1 + q.p3).abs())
        .fold(f64::INFINITY, f64::min);
    let (ratio, ratio_spread) = if p_min > 1e-12 * p_max.max(1.0) {
        let r = inv.scalar(|q| q.j / (q.p1 + q.p3).powi(2));
        (Some(r.mean(0)), Some(r.spread(0)))
    } else {
        (None, None)
    };
    DifferentialReport {
        q_const: qs.mean(0),
        q_spread: qs.spread(0),
        p_const: ps.mean(0),
        p_spread: ps.spread(0),
        cr_residual,
        p_max,
        ratio,
        ratio_spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::{invariants_from_potential, seed_potential, Potential, SeedKind};
    use crate::frames::{assemble_alpha, integrate_frame, IntegrateOptions, Scheme};
    use crate::minkowski::LaguerreElement;

    pub(crate) fn run(p: &Potential, m: f64) -> (FrameField, InvariantField) {
        let alpha = assemble_alpha(p, m).unwrap();
        let opts = IntegrateOptions::for_potential(p, Scheme::MidpointExp).unwrap();
        let (field, _) = integrate_frame(&alpha, &LaguerreElement::identity(), opts).unwrap();
        (field, invariants_from_potential(p, m).unwrap())
    }

    fn radial(n: usize, c: f64, k: f64) -> Potential {
        seed_potential(&SeedKind::Radial { c }, Grid::square(1.0, n).unwrap(), k).unwrap()
    }

    #[test]
    fn flat_gauss_map_metric() {
        let p = seed_potential(&SeedKind::Harmonic { a: 0.0, b: 0.0 }, Grid::square(1.0, 17).unwrap(), 1.0)
            .unwrap();
        let (field, inv) = run(&p, 0.0);
        let coarse = induced_metric(&gauss_map(&field), &inv.u).unwrap().deviation;
        let p = seed_potential(&SeedKind::Harmonic { a: 0.0, b: 0.0 }, Grid::square(1.0, 33).unwrap(), 1.0)
            .unwrap();
        let (field, inv) = run(&p, 0.0);
        let fine = induced_metric(&gauss_map(&field), &inv.u).unwrap().deviation;
        assert!(coarse < 0.02 && coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn metric_converges_and_ignores_m() {
        let dev = |n| {
            let p = radial(n, 1.0, 1.0);
            let (f0, inv) = run(&p, 0.0);
            let (f1, _) = run(&p, 1.0);
            let m0 = induced_metric(&gauss_map(&f0), &inv.u).unwrap();
            let m1 = induced_metric(&gauss_map(&f1), &inv.u).unwrap();
            assert!(m0.min_eigenvalue > 0.0);
            (m0.deviation, metric_difference(&m0, &m1).unwrap())
        };
        let (d33, x33) = dev(33);
        let (d65, x65) = dev(65);
        assert!(d33 / d65 > 3.5 && d33 / d65 < 4.5, "{d33} {d65}");
        assert!(x65 < x33 / 3.0, "{x33} {x65}");
    }

    #[test]
    fn second_fundamental_form_shape() {
        let p = radial(65, 1.0, 1.0);
        let (field, inv) = run(&p, 0.5);
        let sff = second_fundamental_form(&field);
        let mut worst = 0.0_f64;
        for (i, j) in field.grid().nodes(1) {
            let q = inv.at(i, j);
            let e2 = (2.0 * inv.u.v(i, j)).exp();
            let [h1, h4] = sff.at(i, j);
            worst = worst
                .max((h4 - Matrix2::new(e2, 0.0, 0.0, -e2)).amax())
                .max((h1 - Matrix2::new(q.p1 * e2, 0.0, 0.0, q.p3 * e2)).amax());
        }
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn mean_curvature() {
        let p = radial(65, 1.0, 0.0);
        let (field, inv) = run(&p, 0.0);
        let (_, rep) = mean_curvature_vector(&field, &inv).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert!(rep.discrepancy < 1e-2);

        let err = |n| {
            let p = radial(n, 1.0, 1.0);
            let (field, inv) = run(&p, 0.0);
            mean_curvature_vector(&field, &inv).unwrap().1
        };
        let (r33, r65) = (err(33), err(65));
        assert!(r65.max_norm2 < 1e-2 && r65.off_a1 < 1e-2);
        assert!(r33.discrepancy / r65.discrepancy > 3.0, "{r33:?} {r65:?}");
    }

    #[test]
    fn differentials_of_special_potentials() {
        let p = radial(65, 1.0, 1.0);
        let h2 = p.grid().h().powi(2);
        for m in [0.0, 1.0, 2.0] {
            let inv = invariants_from_potential(&p, m).unwrap();
            let d = differentials(&inv);
            assert!((d.q_const + 0.5).abs() < 10.0 * h2);
            assert!(d.q_spread < 10.0 * h2);
            assert!((d.p_const - 2.0 * (1.0 + m)).abs() < 1e-12);
            let expected = -1.0 / (8.0 * (m + 1.0) * (m + 1.0));
            assert!((d.ratio.unwrap() - expected).abs() < 10.0 * h2);
            assert!(d.cr_residual < 10.0 * h2);
        }
        let p = radial(33, 1.0, 0.0);
        let d = differentials(&invariants_from_potential(&p, 0.0).unwrap());
        assert_eq!(d.p_max, 0.0);
        assert_eq!(d.ratio, None);
    }
}
