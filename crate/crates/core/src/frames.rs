//! The Maurer–Cartan form `α^(m)` of the middle frame, its discrete
//! flatness, integration of `dA = A α` over the grid and the Legendre lift
//! `(f, n)` read off the frames.

use std::io::{BufRead, Write};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::blaschke::{invariants_from_potential, seed_potential, InvariantField, Potential, SeedKind};
use crate::cyclographic::{contact_from_raw, Vec3};
use crate::error::{Error, Result};
use crate::grid::{Grid, InteriorField, NodeField, ScalarField};
use crate::minkowski::{AlgebraElement, LaguerreElement, Mat4, Vec4, DEFAULT_TOL};

/// `α = ξ_x dx + ξ_y dy`, one pair per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MaurerCartanField {
    pub xi: NodeField<[AlgebraElement; 2]>,
}

impl MaurerCartanField {
    pub fn grid(&self) -> Grid {
        self.xi.grid
    }

    pub fn constant(grid: Grid, xi_x: AlgebraElement, xi_y: AlgebraElement) -> Self {
        MaurerCartanField {
            xi: NodeField::from_fn(grid, |_, _| [xi_x, xi_y]),
        }
    }
}

/// The middle Maurer–Cartan form in terms of the invariants, with
/// `α² = e^u dx`, `α³ = e^u dy`:
///
/// ```text
/// ⎡ 2q2α²-2q1α³   p1α²+p2α³    p2α²+p3α³    0           ⎤
/// ⎢ α²            0            -q1α²-q2α³   p1α²+p2α³   ⎥
/// ⎢ -α³           q1α²+q2α³    0            p2α²+p3α³   ⎥
/// ⎣ 0             α²           -α³          2q1α³-2q2α² ⎦
/// ```
///
/// and translation part `(0, α², α³, 0)`.
pub fn alpha_from_invariants(inv: &InvariantField) -> MaurerCartanField {
    let xi = NodeField::from_fn(inv.grid(), |i, j| {
        let q = inv.at(i, j);
        let e = inv.u.v(i, j).exp();
        // (coefficient of α², coefficient of α³) for each direction
        let part = |a2: f64, a3: f64| {
            let mut x = Mat4::zeros();
            x[(0, 0)] = 2.0 * (q.q2 * a2 - q.q1 * a3);
            x[(3, 3)] = -x[(0, 0)];
            x[(0, 1)] = q.p1 * a2 + q.p2 * a3;
            x[(1, 3)] = x[(0, 1)];
            x[(0, 2)] = q.p2 * a2 + q.p3 * a3;
            x[(2, 3)] = x[(0, 2)];
            x[(1, 0)] = a2;
            x[(3, 1)] = a2;
            x[(2, 0)] = -a3;
            x[(3, 2)] = -a3;
            x[(1, 2)] = -q.q1 * a2 - q.q2 * a3;
            x[(2, 1)] = -x[(1, 2)];
            AlgebraElement::new(Vec4::new(0.0, a2, a3, 0.0), x)
        };
        [part(e, 0.0), part(0.0, e)]
    });
    MaurerCartanField { xi }
}

/// `α^(m)` of the `m`-th member of the family of `p`.
pub fn assemble_alpha(p: &Potential, m: f64) -> Result<MaurerCartanField> {
    Ok(alpha_from_invariants(&invariants_from_potential(p, m)?))
}

/// Per-node `max |∂_x ξ_y - ∂_y ξ_x + [ξ_x, ξ_y]|` with central differences,
/// on the nodes of `α`'s grid one in from the boundary.
pub fn flatness_residual(alpha: &MaurerCartanField) -> InteriorField {
    let g = alpha.grid();
    let (hx, hy) = (g.hx(), g.hy());
    InteriorField::from_fn(g, 1, |i, j| {
        let dxy = alpha.xi.at(i + 1, j)[1]
            .sub(&alpha.xi.at(i - 1, j)[1])
            .scale(0.5 / hx);
        let dyx = alpha.xi.at(i, j + 1)[0]
            .sub(&alpha.xi.at(i, j - 1)[0])
            .scale(0.5 / hy);
        let [a, b] = alpha.xi.at(i, j);
        dxy.sub(&dyx).add(&a.bracket(b)).amax()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `A · exp(h ξ(left node))`, first order.
    Euler,
    /// `A · exp(h (ξ(left) + ξ(right)) / 2)`, second order.
    MidpointExp,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "midpoint_exp" | "midpoint" => Ok(Scheme::MidpointExp),
            _ => Err(format!("unknown scheme '{s}' (euler, midpoint_exp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    /// Refuse to integrate above this flatness residual. `None` uses
    /// [`flatness_threshold`] without a character.
    pub flatness_threshold: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            scheme: Scheme::MidpointExp,
            flatness_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub flatness_max: f64,
    pub flatness_threshold: f64,
    /// Largest distance between the row-first and column-first sweeps.
    pub holonomy_max: f64,
    pub frame_drift_max: f64,
    pub scheme: Scheme,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub frames: NodeField<LaguerreElement>,
    pub scheme: Scheme,
}

impl FrameField {
    pub fn grid(&self) -> Grid {
        self.frames.grid
    }

    pub fn at(&self, i: usize, j: usize) -> &LaguerreElement {
        self.frames.at(i, j)
    }

    /// `i,j,x1..x4,a1(4),...,a4(4)` per node, row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,x1,x2,x3,x4,a11,a12,a13,a14,a21,a22,a23,a24,a31,a32,a33,a34,a41,a42,a43,a44")?;
        let g = self.grid();
        for (i, j) in g.nodes(0) {
            let a = self.at(i, j);
            write!(w, "{i},{j}")?;
            for v in a.translation.iter() {
                write!(w, ",{v}")?;
            }
            for c in 0..4 {
                for v in a.linear.column(c).iter() {
                    write!(w, ",{v}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads what [`FrameField::write_csv`] wrote; nodes must come in the
    /// same row-major order on `grid`.
    pub fn read_csv<R: BufRead>(r: R, grid: Grid, scheme: Scheme) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        let mut nodes = grid.nodes(0);
        for (n, line) in r.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            let toks: Vec<&str> = line.split(',').map(str::trim).collect();
            if toks.len() != 22 {
                return Err(err(format!("expected 22 fields, got {}", toks.len())));
            }
            let (i, j): (usize, usize) = match (toks[0].parse(), toks[1].parse()) {
                (Ok(i), Ok(j)) => (i, j),
                _ => return Err(err("bad node index".into())),
            };
            if nodes.next() != Some((i, j)) {
                return Err(err(format!("node ({i}, {j}) out of order")));
            }
            let mut v = [0.0; 20];
            for (slot, tok) in v.iter_mut().zip(&toks[2..]) {
                *slot = tok.parse().map_err(|e| err(format!("value {tok:?}: {e}")))?;
            }
            values.push(LaguerreElement {
                translation: Vec4::from_column_slice(&v[..4]),
                linear: Mat4::from_column_slice(&v[4..]),
            });
        }
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(FrameField {
            frames: NodeField::from_values(grid, values)?,
            scheme,
        })
    }
}

/// Flatness residual of the radial seed of character `c` (or 1), `k = 1`,
/// `m = 0`, whose form lives on `grid`.
pub fn flatness_baseline(grid: Grid, c: Option<f64>) -> Option<f64> {
    // the seed lives on the grid one node wider than α's
    let full = grid.expand(1).ok()?;
    let seed = seed_potential(&SeedKind::Radial { c: c.unwrap_or(1.0) }, full, 1.0)
        .or_else(|_| seed_potential(&SeedKind::Radial { c: 1.0 }, full, 1.0))
        .ok()?;
    let alpha = assemble_alpha(&seed, 0.0).ok()?;
    Some(flatness_residual(&alpha).max_abs())
}

pub const DEFAULT_FLATNESS_THRESHOLD: f64 = 1e-3;

/// `max(100 × baseline, 1e-3)` for forms on `grid`.
pub fn flatness_threshold(grid: Grid, c: Option<f64>) -> f64 {
    flatness_baseline(grid, c)
        .map(|b| 100.0 * b)
        .unwrap_or(0.0)
        .max(DEFAULT_FLATNESS_THRESHOLD)
}

impl IntegrateOptions {
    /// Options whose flatness threshold is calibrated on the analytic seed
    /// with the character of `p`.
    pub fn for_potential(p: &Potential, scheme: Scheme) -> Result<Self> {
        let grid = p.grid().interior()?;
        Ok(IntegrateOptions {
            scheme,
            flatness_threshold: Some(flatness_threshold(grid, p.character)),
        })
    }
}

fn step(a: &LaguerreElement, from: &AlgebraElement, to: &AlgebraElement, h: f64, scheme: Scheme) -> LaguerreElement {
    let xi = match scheme {
        Scheme::Euler => from.scale(h),
        Scheme::MidpointExp => from.add(to).scale(0.5 * h),
    };
    a.compose(&xi.exp())
}

/// Integrates `dA = A α` from `A0` at the lower-left node: along the bottom
/// row, then up every column. A second, column-first sweep measures the
/// holonomy.
pub fn integrate_frame(
    alpha: &MaurerCartanField,
    a0: &LaguerreElement,
    opts: IntegrateOptions,
) -> Result<(FrameField, IntegrationReport)> {
    let g = alpha.grid();
    let flatness_max = flatness_residual(alpha).max_abs();
    let flatness_threshold = opts
        .flatness_threshold
        .unwrap_or_else(|| flatness_threshold(g, None));
    if !(flatness_max <= flatness_threshold) {
        return Err(Error::NotFlat {
            residual: flatness_max,
            threshold: flatness_threshold,
        });
    }
    let frames = sweep(alpha, a0, opts.scheme, true);
    let other = sweep(alpha, a0, opts.scheme, false);
    let holonomy_max = frames
        .values
        .iter()
        .zip(&other.values)
        .fold(0.0_f64, |m, (a, b)| m.max(a.distance(b)));
    let field = FrameField {
        frames,
        scheme: opts.scheme,
    };
    let drift = frame_drift(&field);
    let h = g.h();
    let bound = 1e3 * h * h;
    if drift.max > bound {
        return Err(Error::FrameDrift {
            drift: drift.max,
            bound,
        });
    }
    let report = IntegrationReport {
        flatness_max,
        flatness_threshold,
        holonomy_max,
        frame_drift_max: drift.max,
        scheme: opts.scheme,
        h,
    };
    Ok((field, report))
}

fn sweep(alpha: &MaurerCartanField, a0: &LaguerreElement, scheme: Scheme, rows_first: bool) -> NodeField<LaguerreElement> {
    let g = alpha.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = NodeField::from_fn(g, |_, _| *a0);
    let xi = |i, j, d: usize| &alpha.xi.at(i, j)[d];
    if rows_first {
        for i in 1..g.nx {
            *out.at_mut(i, 0) = step(out.at(i - 1, 0), xi(i - 1, 0, 0), xi(i, 0, 0), hx, scheme);
        }
        for i in 0..g.nx {
            for j in 1..g.ny {
                *out.at_mut(i, j) = step(out.at(i, j - 1), xi(i, j - 1, 1), xi(i, j, 1), hy, scheme);
            }
        }
    } else {
        for j in 1..g.ny {
            *out.at_mut(0, j) = step(out.at(0, j - 1), xi(0, j - 1, 1), xi(0, j, 1), hy, scheme);
        }
        for j in 0..g.ny {
            for i in 1..g.nx {
                *out.at_mut(i, j) = step(out.at(i - 1, j), xi(i - 1, j, 0), xi(i, j, 0), hx, scheme);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Largest metric or determinant residual of the linear parts.
    pub max: f64,
    /// Nodes whose frame fails the group conditions at the default
    /// tolerance.
    pub violations: Vec<(usize, usize)>,
}

pub fn frame_drift(field: &FrameField) -> DriftReport {
    let mut max = 0.0_f64;
    let mut violations = Vec::new();
    for (i, j) in field.grid().nodes(0) {
        let check = field.at(i, j).check(DEFAULT_TOL);
        max = max.max(check.metric_residual).max(check.det_residual);
        if !check.valid {
            violations.push((i, j));
        }
    }
    DriftReport { max, violations }
}

/// Euclidean realization of the frames: `(f, n)` from the line `[x, a1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreLift {
    pub f: NodeField<Vec3>,
    pub n: NodeField<Vec3>,
    /// `max |f_x · n|, |f_y · n|` on interior nodes.
    pub contact_residual: f64,
    /// Smallest determinant of the Gram matrix of `n_x, n_y`.
    pub min_dn_gram: f64,
    /// Smallest sine of the angle between `df·dn` and `dn·dn`, as vectors
    /// of their three independent coefficients.
    pub min_nondegeneracy: f64,
}

pub fn realize_legendre(field: &FrameField) -> Result<LegendreLift> {
    let g = field.grid();
    let mut f = NodeField::from_fn(g, |_, _| Vec3::zeros());
    let mut n = f.clone();
    for (i, j) in g.nodes(0) {
        let a = field.at(i, j);
        let ce = contact_from_raw(&a.translation, &a.column(0))?;
        *f.at_mut(i, j) = ce.point;
        *n.at_mut(i, j) = ce.normal();
    }
    let (hx, hy) = (g.hx(), g.hy());
    let d = |v: &NodeField<Vec3>, i: usize, j: usize| {
        (
            (v.at(i + 1, j) - v.at(i - 1, j)) / (2.0 * hx),
            (v.at(i, j + 1) - v.at(i, j - 1)) / (2.0 * hy),
        )
    };
    let mut contact_residual = 0.0_f64;
    let mut min_dn_gram = f64::INFINITY;
    let mut min_nondegeneracy = f64::INFINITY;
    for (i, j) in g.nodes(1) {
        let (fx, fy) = d(&f, i, j);
        let (nx, ny) = d(&n, i, j);
        let nn = *n.at(i, j);
        contact_residual = contact_residual.max(fx.dot(&nn).abs()).max(fy.dot(&nn).abs());
        let c = Matrix2::new(nx.dot(&nx), nx.dot(&ny), nx.dot(&ny), ny.dot(&ny));
        min_dn_gram = min_dn_gram.min(c.determinant());
        let b = Vec3::new(fx.dot(&nx), 0.5 * (fx.dot(&ny) + fy.dot(&nx)), fy.dot(&ny));
        let cv = Vec3::new(c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let denom = b.norm() * cv.norm();
        let sine = if denom > 0.0 { b.cross(&cv).norm() / denom } else { 0.0 };
        min_nondegeneracy = min_nondegeneracy.min(sine);
    }
    Ok(LegendreLift {
        f,
        n,
        contact_residual,
        min_dn_gram,
        min_nondegeneracy,
    })
}

/// Frame origins `σ = x` at every node.
pub fn origins(field: &FrameField) -> NodeField<Vec4> {
    field.frames.map(|a| a.translation)
}

/// Scalar `u` on the frame grid, for callers that only kept the potential.
pub fn restrict_to(u: &ScalarField, grid: Grid) -> Result<ScalarField> {
    let full = u.grid;
    if full.nx < grid.nx || full.shrink((full.nx - grid.nx) / 2)? != grid {
        return Err(Error::InvalidGrid("grid is not a centred sub-grid".into()));
    }
    let margin = (full.nx - grid.nx) / 2;
    Ok(ScalarField::from_fn(grid, |i, j| u.v(i + margin, j + margin)))
}
