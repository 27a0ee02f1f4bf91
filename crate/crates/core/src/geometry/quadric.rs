//! Hyperplanes and pseudo-hyperspheres containing `σ`, constant mean
//! curvature inside them, and the spectral-parameter tables.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{check_same_grid, gauss_map, induced_metric, jet, metric_difference, InducedMetric};
use crate::blaschke::{invariants_from_potential, InvariantField, Potential};
use crate::error::{Error, Result};
use crate::frames::{assemble_alpha, integrate_frame, FrameField, IntegrateOptions, Scheme};
use crate::minkowski::{lorentz_dot, metric, LaguerreElement, Vec4};

/// Relative size below which `P = p1 + p3` counts as vanishing.
const P_EPS: f64 = 1e-6;

fn p_range(inv: &InvariantField) -> (f64, f64) {
    inv.nodes.values.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), q| {
        let p = (q.p1 + q.p3).abs();
        (lo.min(p), hi.max(p))
    })
}

fn lightcone_threshold(h: f64, scale: f64) -> f64 {
    (10.0 * h * h).max(1e-6) * (1.0 + scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperplaneClass {
    /// Timelike normal: `σ` is minimal in a Euclidean 3-space.
    Spacelike,
    /// Spacelike normal.
    Timelike,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneFit {
    /// Node average of `v = e^{2u}(-p1 a1 + a4)`.
    pub v: Vec4,
    /// `<v, v>`, which should equal `-c`.
    pub v_norm2: f64,
    pub origin: Vec4,
    /// Largest component of `v_x`, `v_y` on interior nodes.
    pub dv_max: f64,
    /// `max |<σ - O, v>|`.
    pub plane_residual: f64,
    pub class: HyperplaneClass,
}

/// The hyperplane `<σ - O, v> = 0` of an L-minimal surface.
pub fn hyperplane_detect(field: &FrameField, inv: &InvariantField) -> Result<HyperplaneFit> {
    let g = field.grid();
    check_same_grid(g, inv.grid())?;
    let (_, p_max) = p_range(inv);
    let j_max = inv.nodes.values.iter().map(|q| q.j.abs()).fold(0.0, f64::max);
    if p_max > P_EPS * j_max.max(1.0) {
        return Err(Error::NotLMinimal { max_abs_p: p_max });
    }
    let v = crate::grid::NodeField::from_fn(g, |i, j| {
        let a = field.at(i, j);
        (a.column(3) - a.column(0) * inv.at(i, j).p1) * (2.0 * inv.u.v(i, j)).exp()
    });
    let dv_max = g
        .nodes(1)
        .map(|(i, j)| {
            let d = jet(&v, i, j);
            d.x.amax().max(d.y.amax())
        })
        .fold(0.0, f64::max);
    let vbar = v.values.iter().fold(Vec4::zeros(), |s, x| s + x) / v.values.len() as f64;
    let sigma = gauss_map(field);
    let origin = *sigma.at(0, 0);
    let plane_residual = sigma
        .values
        .iter()
        .map(|s| lorentz_dot(&(s - origin), &vbar).abs())
        .fold(0.0, f64::max);
    let v_norm2 = lorentz_dot(&vbar, &vbar);
    // size of v in the frame basis, which Laguerre motions leave alone
    let scale = g
        .nodes(0)
        .map(|(i, j)| (2.0 * inv.u.v(i, j)).exp().powi(2) * (1.0 + inv.at(i, j).p1.powi(2)))
        .fold(0.0, f64::max);
    let class = if v_norm2.abs() < lightcone_threshold(g.h(), scale) {
        HyperplaneClass::Isotropic
    } else if v_norm2 < 0.0 {
        HyperplaneClass::Spacelike
    } else {
        HyperplaneClass::Timelike
    };
    Ok(HyperplaneFit {
        v: vbar,
        v_norm2,
        origin,
        dv_max,
        plane_residual,
        class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricClass {
    Hyperbolic,
    DeSitter,
    Lightcone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricFit {
    pub center: Vec4,
    /// Mean of `<σ - O, σ - O>`.
    pub rho: f64,
    /// `max |O_node - O|` (largest component).
    pub center_spread: f64,
    /// `max |<σ - O, σ - O> - ρ|`.
    pub value_spread: f64,
    /// `max |<σ - O, σ - O>|`.
    pub value_max: f64,
    pub class: QuadricClass,
    /// `|ρ|` below this counts as the lightcone. It scales with
    /// `max (ℓ1² + ℓ4²)`, the size of `σ - O` in the frame basis.
    pub lightcone_threshold: f64,
}

/// Per node `O = σ - ℓ1 a1 - ℓ4 a4` with `ℓ1 = (p3 - p1)/(p1 + p3)` and
/// `ℓ4 = 2/(p1 + p3)`.
pub fn quadric_detect(field: &FrameField, inv: &InvariantField) -> Result<QuadricFit> {
    let g = field.grid();
    check_same_grid(g, inv.grid())?;
    let (p_min, p_max) = p_range(inv);
    if !(p_min >= P_EPS * p_max.max(1.0)) {
        return Err(Error::NearlyLMinimal { min_abs_p: p_min });
    }
    let sigma = gauss_map(field);
    let mut scale = 0.0_f64;
    let centers: Vec<Vec4> = g
        .nodes(0)
        .map(|(i, j)| {
            let q = inv.at(i, j);
            let a = field.at(i, j);
            let p = q.p1 + q.p3;
            let (l1, l4) = ((q.p3 - q.p1) / p, 2.0 / p);
            scale = scale.max(l1 * l1 + l4 * l4);
            sigma.at(i, j) - a.column(0) * l1 - a.column(3) * l4
        })
        .collect();
    let center = centers.iter().fold(Vec4::zeros(), |s, x| s + x) / centers.len() as f64;
    let center_spread = centers.iter().map(|c| (c - center).amax()).fold(0.0, f64::max);
    let values: Vec<f64> = sigma
        .values
        .iter()
        .map(|s| lorentz_dot(&(s - center), &(s - center)))
        .collect();
    let rho = values.iter().sum::<f64>() / values.len() as f64;
    let value_spread = values.iter().map(|v| (v - rho).abs()).fold(0.0, f64::max);
    let value_max = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let threshold = lightcone_threshold(g.h(), scale);
    let class = if rho.abs() < threshold {
        QuadricClass::Lightcone
    } else if rho < 0.0 {
        QuadricClass::Hyperbolic
    } else {
        QuadricClass::DeSitter
    };
    Ok(QuadricFit {
        center,
        rho,
        center_spread,
        value_spread,
        value_max,
        class,
        lightcone_threshold: threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcSummary {
    /// Mean of `|H|` over interior nodes; for the lightcone the mean of the
    /// in-cone proxy, which vanishes for zero mean curvature.
    pub h_mean: f64,
    /// `max ||H| - mean|`.
    pub h_spread: f64,
    pub h_std: f64,
    /// Sign of `<H, ν>` for the normal orientation fixed by the frame
    /// (+1, -1, or 0 when mixed).
    pub sign: i8,
    pub nodes: usize,
}

/// `ν` with `<ν, σ_x> = <ν, σ_y> = <ν, d> = 0`, from the Lorentzian cross
/// product of three vectors.
fn normal_to(a: &Vec4, b: &Vec4, d: &Vec4) -> Vec4 {
    let g = metric();
    let rows = [g * a, g * b, g * d];
    let mut out = Vec4::zeros();
    for k in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != k).collect();
        let m = Matrix3::from_fn(|r, c| rows[r][cols[c]]);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out[k] = sign * m.determinant();
    }
    out
}

/// Mean curvature of `σ` inside the fitted pseudo-hypersphere. The unit
/// normal `ν` inside the quadric is rebuilt from the tangents and `σ - O`
/// alone, so this is independent of the frame's normal bundle except in
/// the lightcone case, whose degenerate normal is read off `a1`, `a4`.
pub fn cmc_in_quadric(field: &FrameField, inv: &InvariantField, fit: &QuadricFit) -> Result<CmcSummary> {
    let g = field.grid();
    check_same_grid(g, inv.grid())?;
    let sigma = gauss_map(field);
    let mut values = Vec::new();
    let mut signs = (0usize, 0usize);
    for (i, j) in g.nodes(1) {
        let d = jet(&sigma, i, j);
        let pos = sigma.at(i, j) - fit.center;
        let lap = (d.xx + d.yy) * (-2.0 * inv.u.v(i, j)).exp();
        let h = match fit.class {
            QuadricClass::Lightcone => {
                let a = field.at(i, j);
                let (a1, a4) = (a.column(0), a.column(3));
                // σ - O = x a1 + y a4; the null normal pairing to -1 with it
                // along a1 is a1 / y
                let y = -lorentz_dot(&pos, &a1);
                if y.abs() < 1e-12 {
                    return Err(Error::DegenerateNormal { i, j });
                }
                let c1 = -lorentz_dot(&lap, &a4);
                let c4 = -lorentz_dot(&lap, &a1);
                let hvec = (a1 * c1 + a4 * c4) * 0.5;
                lorentz_dot(&hvec, &a1) / y
            }
            _ => {
                let nu = normal_to(&d.x, &d.y, &pos);
                let n2 = lorentz_dot(&nu, &nu);
                let expected_sign = if fit.class == QuadricClass::Hyperbolic { 1.0 } else { -1.0 };
                if !(n2 * expected_sign > 1e-14 * nu.norm_squared()) {
                    return Err(Error::DegenerateNormal { i, j });
                }
                let nu = nu / n2.abs().sqrt();
                0.5 * lorentz_dot(&lap, &nu) * expected_sign
            }
        };
        if h > 0.0 {
            signs.0 += 1;
        } else if h < 0.0 {
            signs.1 += 1;
        }
        values.push(h);
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let nodes = abs.len();
    let h_mean = abs.iter().sum::<f64>() / nodes as f64;
    let h_spread = abs.iter().map(|v| (v - h_mean).abs()).fold(0.0, f64::max);
    let h_std = (abs.iter().map(|v| (v - h_mean).powi(2)).sum::<f64>() / nodes as f64).sqrt();
    let sign = match signs {
        (_, 0) if signs.0 > 0 => 1,
        (0, _) if signs.1 > 0 => -1,
        _ => 0,
    };
    Ok(CmcSummary {
        h_mean,
        h_spread,
        h_std,
        sign,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawsonRow {
    pub m: f64,
    pub class: Option<QuadricClass>,
    pub rho: Option<f64>,
    pub h_m: Option<f64>,
    /// `κ_m = 1/ρ`; absent for the lightcone.
    pub kappa_m: Option<f64>,
    /// `κ_m + H_m²`.
    pub lawson_invariant: Option<f64>,
    /// `max |g_m - g_{m_0}|` against the first entry of the list.
    pub metric_deviation: Option<f64>,
    /// Failure of this member, if any; other rows are unaffected.
    pub error: Option<String>,
}

struct Member {
    fit: QuadricFit,
    cmc: CmcSummary,
    metric: InducedMetric,
}

fn member(p: &Potential, m: f64, scheme: Scheme) -> Result<Member> {
    let opts = IntegrateOptions::for_potential(p, scheme)?;
    let alpha = assemble_alpha(p, m)?;
    let (field, _) = integrate_frame(&alpha, &LaguerreElement::identity(), opts)?;
    let inv = invariants_from_potential(p, m)?;
    let fit = quadric_detect(&field, &inv)?;
    let cmc = cmc_in_quadric(&field, &inv, &fit)?;
    let metric = induced_metric(&gauss_map(&field), &inv.u)?;
    Ok(Member { fit, cmc, metric })
}

/// One row per spectral parameter; failures are recorded per row.
pub fn lawson_table(p: &Potential, m_list: &[f64], scheme: Scheme) -> Result<Vec<LawsonRow>> {
    if p.character.is_none() {
        return Err(Error::MissingCharacter);
    }
    let members: Vec<Result<Member>> = m_list.iter().map(|&m| member(p, m, scheme)).collect();
    let reference = members.first().and_then(|r| r.as_ref().ok()).map(|m| &m.metric);
    Ok(m_list
        .iter()
        .zip(&members)
        .map(|(&m, res)| lawson_row(m, res.as_ref(), reference))
        .collect())
}

fn lawson_row(m: f64, res: std::result::Result<&Member, &Error>, reference: Option<&InducedMetric>) -> LawsonRow {
    match res {
        Ok(mem) => {
            let kappa = (mem.fit.class != QuadricClass::Lightcone).then(|| 1.0 / mem.fit.rho);
            let h = mem.cmc.h_mean;
            LawsonRow {
                m,
                class: Some(mem.fit.class),
                rho: Some(mem.fit.rho),
                h_m: Some(h),
                kappa_m: kappa,
                lawson_invariant: kappa.map(|k| k + h * h),
                metric_deviation: reference.and_then(|r| metric_difference(&mem.metric, r).ok()),
                error: None,
            }
        }
        Err(e) => LawsonRow {
            m,
            class: None,
            rho: None,
            h_m: None,
            kappa_m: None,
            lawson_invariant: None,
            metric_deviation: None,
            error: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::{seed_potential, SeedKind};
    use crate::geometry::tests::run;
    use crate::grid::Grid;
    use crate::minkowski::AlgebraElement;
    use crate::minkowski::Mat4;
    use proptest::prelude::*;

    fn seed(kind: SeedKind, n: usize, k: f64) -> Potential {
        seed_potential(&kind, Grid::square(1.0, n).unwrap(), k).unwrap()
    }

    #[test]
    fn hyperplane_classes() {
        let h2 = (2.0_f64 / 64.0).powi(2);
        for (kind, class, vv) in [
            (SeedKind::Radial { c: 1.0 }, HyperplaneClass::Spacelike, -1.0),
            (SeedKind::Harmonic { a: 0.3, b: -0.2 }, HyperplaneClass::Isotropic, 0.0),
            (SeedKind::Radial { c: -1.0 }, HyperplaneClass::Timelike, 1.0),
        ] {
            let (field, inv) = run(&seed(kind.clone(), 65, 0.0), 0.0);
            let fit = hyperplane_detect(&field, &inv).unwrap();
            assert_eq!(fit.class, class, "{kind:?}");
            assert!((fit.v_norm2 - vv).abs() < 10.0 * h2, "{kind:?} {}", fit.v_norm2);
        }
        let fit = |n| {
            let (field, inv) = run(&seed(SeedKind::Radial { c: 1.0 }, n, 0.0), 0.0);
            hyperplane_detect(&field, &inv).unwrap()
        };
        let (a, b) = (fit(33), fit(65));
        assert!(a.dv_max / b.dv_max > 3.5, "{} {}", a.dv_max, b.dv_max);
        assert!(a.plane_residual / b.plane_residual > 3.0, "{} {}", a.plane_residual, b.plane_residual);
        let (field, inv) = run(&seed(SeedKind::Radial { c: 1.0 }, 17, 1.0), 0.0);
        assert!(matches!(hyperplane_detect(&field, &inv), Err(Error::NotLMinimal { .. })));
        assert!(quadric_detect(&field, &inv).is_ok());
        let (field, inv) = run(&seed(SeedKind::Radial { c: 1.0 }, 17, 1.0), -1.0);
        assert!(matches!(quadric_detect(&field, &inv), Err(Error::NearlyLMinimal { .. })));
    }

    #[test]
    fn quadric_values() {
        let h2 = (2.0_f64 / 64.0).powi(2);
        for (c, m, rho, class) in [
            (1.0, 0.0, -1.0, QuadricClass::Hyperbolic),
            (1.0, 1.0, -0.25, QuadricClass::Hyperbolic),
            (-1.0, 0.0, 1.0, QuadricClass::DeSitter),
        ] {
            let (field, inv) = run(&seed(SeedKind::Radial { c }, 65, 1.0), m);
            let fit = quadric_detect(&field, &inv).unwrap();
            assert_eq!(fit.class, class);
            assert!((fit.rho - rho).abs() < 10.0 * h2, "{c} {m} {}", fit.rho);
            let cmc = cmc_in_quadric(&field, &inv, &fit).unwrap();
            let expected = (m + 1.0) / c.abs().sqrt();
            assert!((cmc.h_mean - expected).abs() < 20.0 * h2 + 1e-3, "{c} {m} {cmc:?}");
            assert!(cmc.sign != 0);
        }
    }

    #[test]
    fn lightcone_branch() {
        let (field, inv) = run(&seed(SeedKind::Harmonic { a: 0.4, b: 0.1 }, 33, 1.0), 0.0);
        let fit = quadric_detect(&field, &inv).unwrap();
        assert_eq!(fit.class, QuadricClass::Lightcone);
        assert!(fit.value_spread < fit.lightcone_threshold);
        let cmc = cmc_in_quadric(&field, &inv, &fit).unwrap();
        assert!(cmc.h_mean < 1e-2, "{cmc:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn classification_survives_laguerre_motions(
            t in prop::array::uniform4(-3.0..3.0f64),
            s in prop::array::uniform16(-1.0..1.0f64),
        ) {
            let b = AlgebraElement::from_skew(Vec4::from(t), &Mat4::from_row_slice(&s)).exp();
            for (c, k) in [(1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)] {
                let kind = if c == 0.0 { SeedKind::Harmonic { a: 0.2, b: 0.0 } } else { SeedKind::Radial { c } };
                let (field, inv) = run(&seed(kind, 33, k), 0.0);
                let mut moved = field.clone();
                for a in moved.frames.values.iter_mut() {
                    *a = b.compose(a);
                }
                let f0 = quadric_detect(&field, &inv).unwrap();
                let f1 = quadric_detect(&moved, &inv).unwrap();
                let scale = (1.0 + b.linear.amax()).powi(2);
                prop_assert_eq!(f0.class, f1.class);
                prop_assert!((f0.rho - f1.rho).abs() < 1e-9 * scale);
                prop_assert!((b.act_on_point(&f0.center) - f1.center).amax() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn lawson_rows() {
        let p = seed(SeedKind::Radial { c: 1.0 }, 33, 1.0);
        let rows = lawson_table(&p, &[0.0, 1.0, 2.0, -1.0], Scheme::MidpointExp).unwrap();
        let h2 = (2.0_f64 / 32.0).powi(2);
        for (row, (h, kappa)) in rows.iter().zip([(1.0, -1.0), (2.0, -4.0), (3.0, -9.0)]) {
            assert!((row.h_m.unwrap() - h).abs() < 20.0 * h2 + 1e-3, "{row:?}");
            assert!((row.kappa_m.unwrap() - kappa).abs() < 50.0 * h2, "{row:?}");
            assert!(row.lawson_invariant.unwrap().abs() < 100.0 * h2, "{row:?}");
            assert!(row.metric_deviation.unwrap() < 10.0 * h2);
        }
        // m + k = 0 fails on its own
        assert!(rows[3].error.is_some());
        assert_eq!(rows[0].metric_deviation, Some(0.0));

        let custom = Potential {
            character: None,
            ..p
        };
        assert!(matches!(lawson_table(&custom, &[0.0], Scheme::MidpointExp), Err(Error::MissingCharacter)));
    }

    #[test]
    fn de_sitter_lawson_invariant_depends_on_m() {
        // κ_m + H_m² = -2(m + k)²/c for c < 0
        let p = seed(SeedKind::Radial { c: -1.0 }, 33, 1.0);
        let rows = lawson_table(&p, &[0.0, 1.0], Scheme::MidpointExp).unwrap();
        assert!((rows[0].lawson_invariant.unwrap() - 2.0).abs() < 0.05, "{rows:?}");
        assert!((rows[1].lawson_invariant.unwrap() - 8.0).abs() < 0.2, "{rows:?}");
        for r in &rows {
            let h = r.h_m.unwrap();
            assert!((r.kappa_m.unwrap() - h * h).abs() < 0.1, "{r:?}");
        }
    }
}
