//! Blaschke potentials `e^u` on rectangular grids.
//!
//! A potential solving the Liouville equation `Δu = c e^{-2u}` is *special*
//! with character `c`; together with a spectral base `k` it fixes the
//! invariants `J = -½ e^{-2u} Δu` and `W = (k + m) e^{-2u}` of every member
//! of the deformation family. General solutions of the Blaschke equation
//! carry a spectral field `S` with `dS = ½ η` instead of the constant `k`
//! (see [`spectral_field`]).
//!
//! Laplacians are five-point stencils, first derivatives central
//! differences; values on the outer ring of nodes are never produced.

mod banded;
mod newton;

pub use banded::BandedMatrix;
pub use newton::{newton_solve_liouville, NewtonOptions, NewtonSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, InteriorField, NodeField, ScalarField};

/// Analytic potentials and user data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedKind {
    /// `u = ln(1 + (c/4)(x² + y²))`
    Radial { c: f64 },
    /// `u = ln cosh(√c x)`, `c > 0`
    Cosh1d { c: f64 },
    /// `u = a x + b y`, character 0
    Harmonic { a: f64, b: f64 },
    /// Node values in row-major order; no character is attached.
    Custom { values: Vec<f64> },
}

/// Certification slack for analytic seeds: the stencil error of an exact
/// solution is `h²/12 (u_xxxx + u_yyyy)`, far below this bound for the seeds
/// on admissible domains.
const SEED_CERT_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub u: ScalarField,
    /// Character `c` when `u` solves `Δu = c e^{-2u}`.
    pub character: Option<f64>,
    /// Spectral base `k`.
    pub k: f64,
    /// Spectral field `S` replacing the constant `k` for non-special
    /// potentials, defined on a sub-grid of `u`'s grid.
    pub spectral: Option<ScalarField>,
}

impl Potential {
    /// A special potential; fails unless `max |Δ_h u - c e^{-2u}| <= tol`.
    pub fn special(u: ScalarField, c: f64, k: f64, tol: f64) -> Result<Self> {
        let res = liouville_residual(&u, c).max_abs();
        if !(res <= tol) {
            return Err(Error::Domain(format!(
                "potential does not solve the Liouville equation with c = {c}: residual {res:e} > {tol:e}"
            )));
        }
        Ok(Potential {
            u,
            character: Some(c),
            k,
            spectral: None,
        })
    }

    /// A solution of the Blaschke equation; the spectral field is integrated
    /// from the closed form `η` (see [`spectral_field`]).
    pub fn isothermic(u: ScalarField, k: f64, max_curl: f64) -> Result<Self> {
        let spectral = spectral_field(&u, k, max_curl)?;
        Ok(Potential {
            u,
            character: None,
            k,
            spectral: Some(spectral),
        })
    }

    pub fn grid(&self) -> Grid {
        self.u.grid
    }
}

pub fn seed_potential(kind: &SeedKind, grid: Grid, k: f64) -> Result<Potential> {
    let (u, c) = match *kind {
        SeedKind::Radial { c } => {
            let u = ScalarField::sample(grid, |x, y| (1.0 + 0.25 * c * (x * x + y * y)).ln());
            if let Some(bad) = u.values.iter().position(|v| !v.is_finite()) {
                let (i, j) = (bad % grid.nx, bad / grid.nx);
                return Err(Error::Domain(format!(
                    "1 + (c/4)(x²+y²) <= 0 at ({}, {}) for c = {c}",
                    grid.x(i),
                    grid.y(j)
                )));
            }
            (u, c)
        }
        SeedKind::Cosh1d { c } => {
            if !(c > 0.0) {
                return Err(Error::Domain(format!("cosh1d needs c > 0, got {c}")));
            }
            let s = c.sqrt();
            (ScalarField::sample(grid, |x, _| (s * x).cosh().ln()), c)
        }
        SeedKind::Harmonic { a, b } => (ScalarField::sample(grid, |x, y| a * x + b * y + 0.0), 0.0),
        SeedKind::Custom { ref values } => {
            let u = NodeField::from_values(grid, values.clone())?;
            return Ok(Potential {
                u,
                character: None,
                k,
                spectral: None,
            });
        }
    };
    Potential::special(u, c, k, certification_tol(grid, c))
}

/// Largest Liouville residual accepted from a special potential of
/// character `c` on `grid`: `100 h² (1 + |c|)²`.
pub fn certification_tol(grid: Grid, c: f64) -> f64 {
    SEED_CERT_FACTOR * grid.h().powi(2) * (1.0 + c.abs()).powi(2)
}

/// `Δ_h u - c e^{-2u}` on interior nodes.
pub fn liouville_residual(u: &ScalarField, c: f64) -> InteriorField {
    InteriorField::from_fn(u.grid, 1, |i, j| {
        u.laplacian(i, j) - c * (-2.0 * u.v(i, j)).exp()
    })
}

/// Discrete `Δ(e^{-u} (e^u)_xy)` on nodes two away from the boundary.
pub fn blaschke_residual(u: &ScalarField) -> Result<InteriorField> {
    let g = u.grid;
    if g.nx < 5 || g.ny < 5 {
        return Err(Error::GridTooSmall {
            nx: g.nx,
            ny: g.ny,
            min: 5,
        });
    }
    let phi = u.map(|v| v.exp());
    let inner = InteriorField::from_fn(g, 1, |i, j| phi.dxy(i, j) / phi.v(i, j));
    Ok(InteriorField::from_fn(g, 2, |i, j| inner.field.laplacian(i, j)))
}

/// Laguerre invariants at one node. `p2` is always zero here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub j: f64,
    pub w: f64,
}

/// Invariants of the `m`-th member of the deformation family, on a sub-grid
/// of the potential's grid, with `u` restricted to the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantField {
    pub m: f64,
    pub nodes: NodeField<Invariants>,
    pub u: ScalarField,
}

impl InvariantField {
    pub fn grid(&self) -> Grid {
        self.nodes.grid
    }

    pub fn at(&self, i: usize, j: usize) -> &Invariants {
        self.nodes.at(i, j)
    }

    pub fn scalar(&self, f: impl Fn(&Invariants) -> f64) -> ScalarField {
        self.nodes.map(f)
    }
}

/// `q1 = -e^{-u} u_y`, `q2 = e^{-u} u_x`, `J = -½ e^{-2u} Δ_h u`,
/// `W = (k + m) e^{-2u}` (or `(S + m) e^{-2u}` with a spectral field),
/// `p1 = W + J`, `p3 = W - J`.
///
/// Special potentials yield a field on the interior grid; potentials with a
/// spectral field use the spectral field's grid.
pub fn invariants_from_potential(p: &Potential, m: f64) -> Result<InvariantField> {
    let full = p.grid();
    let margin = match &p.spectral {
        None => 1,
        Some(s) => {
            let margin = ((full.nx - s.grid.nx) / 2).max(1);
            if full.shrink(margin)? != s.grid {
                return Err(Error::InvalidGrid(
                    "spectral field grid is not a centred sub-grid of the potential".into(),
                ));
            }
            margin
        }
    };
    let grid = full.shrink(margin)?;
    let u = &p.u;
    let nodes = NodeField::from_fn(grid, |i, j| {
        let (fi, fj) = (i + margin, j + margin);
        let uv = u.v(fi, fj);
        let e1 = (-uv).exp();
        let e2 = e1 * e1;
        let base = match &p.spectral {
            None => p.k,
            Some(s) => s.v(i, j),
        };
        let jj = -0.5 * e2 * u.laplacian(fi, fj);
        let w = (base + m) * e2;
        Invariants {
            q1: -e1 * u.dy(fi, fj),
            q2: e1 * u.dx(fi, fj),
            p1: w + jj,
            p2: 0.0,
            p3: w - jj,
            j: jj,
            w,
        }
    });
    let u_sub = NodeField::from_fn(grid, |i, j| u.v(i + margin, j + margin));
    Ok(InvariantField { m, nodes, u: u_sub })
}

/// Componentwise closed 1-form `η = η_x dx + η_y dy` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    pub dx: ScalarField,
    pub dy: ScalarField,
}

impl OneFormField {
    /// Largest circulation around a grid plaquette divided by its area
    /// (trapezoid rule on every edge).
    pub fn max_curl(&self) -> f64 {
        let g = self.dx.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let mut worst = 0.0_f64;
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let bottom = 0.5 * hx * (self.dx.v(i, j) + self.dx.v(i + 1, j));
                let right = 0.5 * hy * (self.dy.v(i + 1, j) + self.dy.v(i + 1, j + 1));
                let top = 0.5 * hx * (self.dx.v(i, j + 1) + self.dx.v(i + 1, j + 1));
                let left = 0.5 * hy * (self.dy.v(i, j) + self.dy.v(i, j + 1));
                worst = worst.max(((bottom + right - top - left) / (hx * hy)).abs());
            }
        }
        worst
    }

    /// Trapezoid-rule primitive: along the bottom row, then up each column.
    pub fn integrate(&self, base_value: f64) -> ScalarField {
        let g = self.dx.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let mut out = ScalarField::from_fn(g, |_, _| 0.0);
        *out.at_mut(0, 0) = base_value;
        for i in 1..g.nx {
            let prev = out.v(i - 1, 0);
            *out.at_mut(i, 0) = prev + 0.5 * hx * (self.dx.v(i - 1, 0) + self.dx.v(i, 0));
        }
        for i in 0..g.nx {
            for j in 1..g.ny {
                let prev = out.v(i, j - 1);
                *out.at_mut(i, j) = prev + 0.5 * hy * (self.dy.v(i, j - 1) + self.dy.v(i, j));
            }
        }
        out
    }
}

/// The closed form `η_Φ` on nodes two away from the boundary:
///
/// ```text
/// η = -e^{2u}{(e^{-2u}Δu)_x + 4u_x e^{-2u}Δu} dx + e^{2u}{(e^{-2u}Δu)_y + 4u_y e^{-2u}Δu} dy
/// ```
///
/// `(e^{-2u}Δu)_x` is a central difference of the node values of
/// `e^{-2u} Δ_h u`.
pub fn eta_form(u: &ScalarField) -> Result<OneFormField> {
    let g = u.grid;
    let inner = g.shrink(2)?;
    let lap = InteriorField::from_fn(g, 1, |i, j| (-2.0 * u.v(i, j)).exp() * u.laplacian(i, j));
    let l = &lap.field;
    let comp = |i: usize, j: usize, along_x: bool| {
        let (fi, fj) = (i + 2, j + 2);
        let e2 = (2.0 * u.v(fi, fj)).exp();
        if along_x {
            -e2 * (l.dx(fi, fj) + 4.0 * u.dx(fi, fj) * l.v(fi, fj))
        } else {
            e2 * (l.dy(fi, fj) + 4.0 * u.dy(fi, fj) * l.v(fi, fj))
        }
    };
    Ok(OneFormField {
        dx: ScalarField::from_fn(inner, |i, j| comp(i, j, true)),
        dy: ScalarField::from_fn(inner, |i, j| comp(i, j, false)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaIntegral {
    /// Primitive `K` with `dK = η`, on the grid two nodes in from the
    /// boundary, pinned to `k0` at its lower-left node.
    pub k_field: ScalarField,
    pub eta: OneFormField,
    /// Largest plaquette circulation per unit area.
    pub closedness: f64,
}

/// Integrates `η_Φ`; fails when its discrete curl exceeds `max_curl`, which
/// happens exactly when `u` does not solve the Blaschke equation.
pub fn integrate_eta(u: &ScalarField, k0: f64, max_curl: f64) -> Result<EtaIntegral> {
    let eta = eta_form(u)?;
    let closedness = eta.max_curl();
    if !(closedness <= max_curl) {
        return Err(Error::NotClosed {
            residual: closedness,
            threshold: max_curl,
        });
    }
    Ok(EtaIntegral {
        k_field: eta.integrate(k0),
        eta,
        closedness,
    })
}

/// Spectral field `S` with `S = k` at the base node and `dS = ½ η_Φ`, so that
/// `W = S e^{-2u}` makes the middle Maurer–Cartan form flat. For special
/// potentials `η_Φ = 0` and `S` reduces to the constant `k`.
pub fn spectral_field(u: &ScalarField, k: f64, max_curl: f64) -> Result<ScalarField> {
    let integral = integrate_eta(u, 0.0, max_curl)?;
    Ok(integral.k_field.map(|v| k + 0.5 * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::square(1.0, n).unwrap()
    }

    #[test]
    fn seeds_at_the_origin() {
        let g = grid(65);
        let p = seed_potential(&SeedKind::Radial { c: 1.0 }, g, 1.0).unwrap();
        assert_eq!(p.u.v(32, 32), 0.0);
        assert_eq!(p.character, Some(1.0));

        // u = ln cosh(2x): u(0) = 0 and u''(0) = 4 = c e^0
        let p = seed_potential(&SeedKind::Cosh1d { c: 4.0 }, g, 0.0).unwrap();
        assert_eq!(p.u.v(32, 32), 0.0);
        let lap = p.u.laplacian(32, 32);
        assert!((lap - 4.0).abs() < 4.0 * g.h().powi(2) * 2.0, "{lap}");

        let p = seed_potential(&SeedKind::Harmonic { a: 0.0, b: 0.0 }, g, 0.0).unwrap();
        assert!(p.u.values.iter().all(|&v| v == 0.0));
        assert_eq!(p.character, Some(0.0));
    }

    #[test]
    fn seed_domain_errors() {
        let g = grid(9);
        assert!(matches!(
            seed_potential(&SeedKind::Radial { c: -4.0 }, g, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(seed_potential(&SeedKind::Radial { c: -1.0 }, g, 0.0).is_ok());
        assert!(seed_potential(&SeedKind::Cosh1d { c: 0.0 }, g, 0.0).is_err());
        assert!(seed_potential(&SeedKind::Cosh1d { c: -1.0 }, g, 0.0).is_err());
        assert!(matches!(
            seed_potential(&SeedKind::Custom { values: vec![0.0; 3] }, g, 0.0),
            Err(Error::ShapeMismatch { .. })
        ));
        let custom = seed_potential(&SeedKind::Custom { values: vec![0.5; 81] }, g, 2.0).unwrap();
        assert_eq!(custom.character, None);
    }

    #[test]
    fn trivial_residuals() {
        let g = grid(9);
        let zero = ScalarField::sample(g, |_, _| 0.0);
        let r = liouville_residual(&zero, 0.0);
        assert_eq!(r.max_abs(), 0.0);
        assert_eq!(r.get(0, 3), None);
        let r = liouville_residual(&zero, 1.0);
        for (i, j) in g.nodes(1) {
            assert_eq!(r.get(i, j), Some(-1.0));
        }
    }

    #[test]
    fn blaschke_residual_examples() {
        let g = grid(33);
        let cosh = ScalarField::sample(g, |x, _| (2.0 * x).cosh().ln());
        assert!(blaschke_residual(&cosh).unwrap().max_abs() < 1e-9);

        // e^{-u}(e^u)_xy = 1 + xy is harmonic; the discrete residual is a
        // stencil error only
        let xy = ScalarField::sample(g, |x, y| x * y);
        let coarse = blaschke_residual(&xy).unwrap().max_abs();
        let fine = blaschke_residual(&ScalarField::sample(grid(65), |x, y| x * y))
            .unwrap()
            .max_abs();
        assert!(coarse < 0.05, "{coarse}");
        assert!(fine < coarse / 3.0, "{coarse} {fine}");

        // u = x²y²: e^{-u}(e^u)_xy = 4xy + 4x³y³ and Δ of that is 24xy(x² + y²)
        let bad = ScalarField::sample(g, |x, y| x * x * y * y);
        let r = blaschke_residual(&bad).unwrap();
        let (i, j) = (28, 28);
        let (x, y) = (g.x(i), g.y(j));
        let expected = 24.0 * x * y * (x * x + y * y);
        assert!((r.get(i, j).unwrap() - expected).abs() < 0.1 * expected.abs());
        assert!(r.max_abs() > 1.0);

        assert!(matches!(
            blaschke_residual(&ScalarField::sample(Grid::square(1.0, 4).unwrap(), |_, _| 0.0)),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn invariants_flat_case() {
        let g = grid(9);
        let p = seed_potential(&SeedKind::Harmonic { a: 0.0, b: 0.0 }, g, 1.0).unwrap();
        let inv = invariants_from_potential(&p, 0.0).unwrap();
        assert_eq!(inv.grid().nx, 7);
        for v in &inv.nodes.values {
            assert_eq!((v.q1, v.q2, v.j, v.w, v.p1, v.p3, v.p2), (0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn invariants_structure_and_shift() {
        let g = grid(33);
        let p = seed_potential(&SeedKind::Radial { c: 1.0 }, g, 1.0).unwrap();
        let i0 = invariants_from_potential(&p, 0.0).unwrap();
        let i3 = invariants_from_potential(&p, 3.0).unwrap();
        for (k, (a, b)) in i0.nodes.values.iter().zip(&i3.nodes.values).enumerate() {
            assert_eq!(a.p2, 0.0);
            assert!((a.p1 - a.p3 - 2.0 * a.j).abs() < 1e-15);
            let e2 = (-2.0 * i0.u.values[k]).exp();
            assert!((b.w - a.w - 3.0 * e2).abs() < 1e-14);
            assert_eq!(a.j, b.j);
        }
    }

    #[test]
    fn special_potential_has_vanishing_eta() {
        for kind in [SeedKind::Radial { c: 1.0 }, SeedKind::Cosh1d { c: 2.0 }] {
            let p = seed_potential(&kind, grid(65), 0.0).unwrap();
            let int = integrate_eta(&p.u, 2.5, 1.0).unwrap();
            let eta_max = int.eta.dx.max_abs(0).max(int.eta.dy.max_abs(0));
            assert!(eta_max < 0.02, "{kind:?}: {eta_max}");
            for v in &int.k_field.values {
                assert!((v - 2.5).abs() < 0.01);
            }
            assert_eq!(int.k_field.v(0, 0), 2.5);
        }
        let zero = ScalarField::sample(grid(9), |_, _| 0.0);
        let int = integrate_eta(&zero, -1.0, 1e-12).unwrap();
        assert!(int.k_field.values.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn eta_closedness_tracks_blaschke() {
        // Δu = 0, so η vanishes identically
        let xy = ScalarField::sample(grid(33), |x, y| x * y);
        let int = integrate_eta(&xy, 0.0, 1e-12).unwrap();
        assert!(int.closedness < 1e-12);

        // e^u = e^{x²/2} e^y has (e^u)_xy = 0 but Δu = 1: η = -2x dx + 2 dy
        let err = |n| {
            let g = grid(n);
            let u = ScalarField::sample(g, |x, y| 0.5 * x * x + y);
            let int = integrate_eta(&u, 0.0, 1e-6).unwrap();
            let kg = int.k_field.grid;
            let (x0, y0) = (kg.x(0), kg.y(0));
            let mut worst = 0.0_f64;
            for (i, j) in kg.nodes(0) {
                let (x, y) = (kg.x(i), kg.y(j));
                let exact = -(x * x - x0 * x0) + 2.0 * (y - y0);
                worst = worst.max((int.k_field.v(i, j) - exact).abs());
            }
            worst
        };
        let (e33, e65) = (err(33), err(65));
        assert!(e33 < 1e-2 && e65 < e33 / 3.0, "{e33} {e65}");

        let bad = ScalarField::sample(grid(33), |x, y| x * x * y * y);
        assert!(matches!(
            integrate_eta(&bad, 0.0, 0.05),
            Err(Error::NotClosed { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn invariant_identities_are_exact(c in -1.5..1.5f64, k in -2.0..2.0f64, m in -2.0..2.0f64) {
            let p = seed_potential(&SeedKind::Radial { c }, grid(9), k).unwrap();
            let inv = invariants_from_potential(&p, m).unwrap();
            for v in &inv.nodes.values {
                prop_assert_eq!(v.p2, 0.0);
                // exact up to the rounding of the two sums
                let ulps = 4.0 * f64::EPSILON * (v.w.abs() + v.j.abs());
                prop_assert!((v.p1 - v.p3 - 2.0 * v.j).abs() <= ulps);
                prop_assert!((v.p1 + v.p3 - 2.0 * v.w).abs() <= ulps);
            }
        }
    }
}
