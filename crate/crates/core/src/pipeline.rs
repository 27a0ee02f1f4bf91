//! One deformation run per spectral parameter: assemble, integrate, realize
//! and measure, collected into a serializable report whose gates can be
//! re-checked later from the report alone.

use serde::{Deserialize, Serialize};

use crate::blaschke::{invariants_from_potential, Potential};
use crate::error::{Error, Result};
use crate::frames::{assemble_alpha, integrate_frame, realize_legendre, FrameField, IntegrateOptions, Scheme};
use crate::geometry::{
    cmc_in_quadric, differentials, gauss_map, hyperplane_detect, induced_metric, metric_difference,
    middle_sphere_check, quadric_detect, HyperplaneClass, InducedMetric, QuadricClass, SurfaceMaps,
};
use crate::grid::Grid;
use crate::minkowski::LaguerreElement;

/// Gate constants. Error bounds are `constant · h^p` with `p` the order of
/// the integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on residuals, spreads and discrepancies that vanish with `h`.
    pub order: f64,
    /// Bound on `ρ`, `Q e^{4u}`, `Q/P²` and `<v, v>` against their closed forms.
    pub value: f64,
    /// Bound on `|H|` and `κ + H²`, plus `h_floor`.
    pub mean_curvature: f64,
    pub h_floor: f64,
    /// Frame drift bound, times `h²`.
    pub drift: f64,
    /// `|K|` below this skips a node in the middle-sphere check.
    pub parabolic_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            order: 50.0,
            value: 10.0,
            mean_curvature: 20.0,
            h_floor: 1e-3,
            drift: 1e3,
            parabolic_eps: 1e-6,
        }
    }
}

fn abs_rel(expected: f64, measured: f64) -> (f64, f64) {
    let abs = (measured - expected).abs();
    let rel = if expected != 0.0 { abs / expected.abs() } else { abs };
    (abs, rel)
}

/// A measured value next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compared {
    pub expected: f64,
    pub measured: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl Compared {
    pub fn new(expected: f64, measured: f64) -> Self {
        let (abs_error, rel_error) = abs_rel(expected, measured);
        Compared {
            expected,
            measured,
            abs_error,
            rel_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub c: f64,
    pub k: f64,
    pub m: f64,
    pub scheme: Scheme,
    /// Grid of the potential; frames live one node in.
    pub grid: Grid,
    pub h: f64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessBlock {
    pub max: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    /// `max |g_σ - e^{2u} I|`.
    pub deviation: f64,
    pub min_eigenvalue: f64,
    /// `max |g_m - g_{m_0}|` against the first member of the sweep.
    pub m_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialsBlock {
    #[serde(rename = "Q_const")]
    pub q_const: Compared,
    #[serde(rename = "Q_spread")]
    pub q_spread: f64,
    #[serde(rename = "CR_residual")]
    pub cr_residual: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    /// `Q/P²` against `-c/(8(m+k)²)`; absent when `P` vanishes.
    pub ratio: Option<Compared>,
    pub ratio_spread: Option<f64>,
    pub l_minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricBlock {
    pub class: QuadricClass,
    pub class_expected: QuadricClass,
    pub rho: f64,
    pub rho_expected: f64,
    pub rho_abs_error: f64,
    pub rho_rel_error: f64,
    pub center_spread: f64,
    pub value_spread: f64,
    pub value_max: f64,
    pub lightcone_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcBlock {
    /// For the lightcone class, the mean of the zero-mean-curvature proxy.
    #[serde(rename = "H_mean")]
    pub h_mean: f64,
    #[serde(rename = "H_expected")]
    pub h_expected: f64,
    #[serde(rename = "H_abs_error")]
    pub h_abs_error: f64,
    #[serde(rename = "H_rel_error")]
    pub h_rel_error: f64,
    #[serde(rename = "H_spread")]
    pub h_spread: f64,
    #[serde(rename = "H_std")]
    pub h_std: f64,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneBlock {
    pub class: HyperplaneClass,
    pub class_expected: HyperplaneClass,
    pub v_norm2: Compared,
    pub dv_max: f64,
    pub plane_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereBlock {
    pub radius_residual: f64,
    pub center_residual: f64,
    pub checked: usize,
    pub parabolic: usize,
}

/// One row of the correspondence table with closed forms alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawsonEntry {
    pub m: f64,
    pub class: QuadricClass,
    pub rho: f64,
    /// `1/ρ` and `-(m+k)²/c`; absent for the lightcone.
    pub kappa: Option<Compared>,
    #[serde(rename = "H")]
    pub h: Compared,
    /// `κ + H²` and `-2(m+k)²/c`, i.e. `0` for `c > 0`.
    pub invariant: Option<Compared>,
    pub metric_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub flatness: FlatnessBlock,
    pub holonomy: f64,
    pub frame_drift: f64,
    pub contact_residual: f64,
    pub metric: MetricBlock,
    pub differentials: DifferentialsBlock,
    pub quadric: Option<QuadricBlock>,
    pub cmc: Option<CmcBlock>,
    pub hyperplane: Option<HyperplaneBlock>,
    pub middle_sphere: SphereBlock,
    pub lawson_rows: Vec<LawsonEntry>,
}

/// Everything one member of the sweep produces.
#[derive(Debug, Clone)]
pub struct MemberRun {
    pub m: f64,
    pub frames: FrameField,
    pub maps: SurfaceMaps,
    pub metric: InducedMetric,
    pub report: Report,
}

/// `-c/(m+k)²`, the squared radius of the pseudo-hypersphere.
pub fn expected_rho(c: f64, k: f64, m: f64) -> f64 {
    -c / ((m + k) * (m + k))
}

/// `|m+k|/√|c|`, or `0` on the lightcone.
pub fn expected_mean_curvature(c: f64, k: f64, m: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        (m + k).abs() / c.abs().sqrt()
    }
}

pub fn expected_quadric_class(c: f64) -> QuadricClass {
    if c > 0.0 {
        QuadricClass::Hyperbolic
    } else if c < 0.0 {
        QuadricClass::DeSitter
    } else {
        QuadricClass::Lightcone
    }
}

/// Class of the hyperplane with normal `v`, `<v, v> = -c`.
pub fn expected_hyperplane_class(c: f64) -> HyperplaneClass {
    if c > 0.0 {
        HyperplaneClass::Spacelike
    } else if c < 0.0 {
        HyperplaneClass::Timelike
    } else {
        HyperplaneClass::Isotropic
    }
}

/// Runs one member of the spectral family of a special potential.
pub fn run_member(p: &Potential, m: f64, scheme: Scheme, tol: Tolerances) -> Result<MemberRun> {
    let c = p.character.ok_or(Error::MissingCharacter)?;
    let k = p.k;
    let opts = IntegrateOptions::for_potential(p, scheme)?;
    let alpha = assemble_alpha(p, m)?;
    let (frames, integ) = integrate_frame(&alpha, &LaguerreElement::identity(), opts)?;
    let inv = invariants_from_potential(p, m)?;
    let lift = realize_legendre(&frames)?;
    let maps = SurfaceMaps {
        sigma: gauss_map(&frames),
        f: lift.f,
        n: lift.n,
    };
    let metric = induced_metric(&maps.sigma, &inv.u)?;

    let d = differentials(&inv);
    let l_minimal = hyperplane_detect(&frames, &inv).is_ok();
    let ratio_expected = if m + k != 0.0 { -c / (8.0 * (m + k) * (m + k)) } else { 0.0 };
    let differentials = DifferentialsBlock {
        q_const: Compared::new(-c / 2.0, d.q_const),
        q_spread: d.q_spread,
        cr_residual: d.cr_residual,
        p_max: d.p_max,
        ratio: d.ratio.map(|r| Compared::new(ratio_expected, r)),
        ratio_spread: d.ratio_spread,
        l_minimal,
    };

    let (mut quadric, mut cmc, mut hyperplane, mut lawson_rows) = (None, None, None, Vec::new());
    if l_minimal {
        let fit = hyperplane_detect(&frames, &inv)?;
        hyperplane = Some(HyperplaneBlock {
            class: fit.class,
            class_expected: expected_hyperplane_class(c),
            v_norm2: Compared::new(-c, fit.v_norm2),
            dv_max: fit.dv_max,
            plane_residual: fit.plane_residual,
        });
    } else {
        let fit = quadric_detect(&frames, &inv)?;
        let summary = cmc_in_quadric(&frames, &inv, &fit)?;
        let rho_expected = expected_rho(c, k, m);
        let (rho_abs_error, rho_rel_error) = abs_rel(rho_expected, fit.rho);
        let h_expected = expected_mean_curvature(c, k, m);
        let (h_abs_error, h_rel_error) = abs_rel(h_expected, summary.h_mean);
        let kappa = (fit.class != QuadricClass::Lightcone && c != 0.0)
            .then(|| Compared::new(1.0 / rho_expected, 1.0 / fit.rho));
        let invariant = kappa.map(|kp| {
            Compared::new(
                kp.expected + h_expected * h_expected,
                kp.measured + summary.h_mean * summary.h_mean,
            )
        });
        lawson_rows.push(LawsonEntry {
            m,
            class: fit.class,
            rho: fit.rho,
            kappa,
            h: Compared::new(h_expected, summary.h_mean),
            invariant,
            metric_deviation: None,
        });
        quadric = Some(QuadricBlock {
            class: fit.class,
            class_expected: expected_quadric_class(c),
            rho: fit.rho,
            rho_expected,
            rho_abs_error,
            rho_rel_error,
            center_spread: fit.center_spread,
            value_spread: fit.value_spread,
            value_max: fit.value_max,
            lightcone_threshold: fit.lightcone_threshold,
        });
        cmc = Some(CmcBlock {
            h_mean: summary.h_mean,
            h_expected,
            h_abs_error,
            h_rel_error,
            h_spread: summary.h_spread,
            h_std: summary.h_std,
            sign: summary.sign,
        });
    }

    let sphere = middle_sphere_check(&maps, tol.parabolic_eps);
    let report = Report {
        config: RunConfig {
            c,
            k,
            m,
            scheme,
            grid: p.grid(),
            h: integ.h,
            tolerances: tol,
        },
        flatness: FlatnessBlock {
            max: integ.flatness_max,
            threshold: integ.flatness_threshold,
        },
        holonomy: integ.holonomy_max,
        frame_drift: integ.frame_drift_max,
        contact_residual: lift.contact_residual,
        metric: MetricBlock {
            deviation: metric.deviation,
            min_eigenvalue: metric.min_eigenvalue,
            m_deviation: None,
        },
        differentials,
        quadric,
        cmc,
        hyperplane,
        middle_sphere: SphereBlock {
            radius_residual: sphere.radius_residual,
            center_residual: sphere.center_residual,
            checked: sphere.checked,
            parabolic: sphere.parabolic,
        },
        lawson_rows,
    };
    Ok(MemberRun {
        m,
        frames,
        maps,
        metric,
        report,
    })
}

/// Runs every member; a failing member does not stop the others. Metric
/// deviations are taken against the first member.
pub fn deform(p: &Potential, m_list: &[f64], scheme: Scheme, tol: Tolerances) -> Result<Vec<Result<MemberRun>>> {
    if m_list.is_empty() {
        return Err(Error::Domain("empty list of spectral parameters".into()));
    }
    if p.character.is_none() {
        return Err(Error::MissingCharacter);
    }
    let mut runs: Vec<Result<MemberRun>> = m_list.iter().map(|&m| run_member(p, m, scheme, tol)).collect();
    let reference = runs.first().and_then(|r| r.as_ref().ok()).map(|r| r.metric.clone());
    if let Some(reference) = reference {
        for run in runs.iter_mut().flatten() {
            let dev = metric_difference(&run.metric, &reference).ok();
            run.report.metric.m_deviation = dev;
            for row in &mut run.report.lawson_rows {
                row.metric_deviation = dev;
            }
        }
    }
    Ok(runs)
}

/// Outcome of one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    pub required: f64,
    pub pass: bool,
}

impl Gate {
    fn below(name: &str, measured: f64, required: f64) -> Gate {
        Gate {
            name: name.to_string(),
            measured,
            required,
            pass: measured <= required,
        }
    }

    fn holds(name: &str, ok: bool) -> Gate {
        Gate {
            name: name.to_string(),
            measured: if ok { 0.0 } else { 1.0 },
            required: 0.0,
            pass: ok,
        }
    }
}

fn consistent(c: &Compared) -> bool {
    let (abs, rel) = abs_rel(c.expected, c.measured);
    abs == c.abs_error && rel == c.rel_error
}

/// Re-checks a report against its stored tolerances and closed forms. Only
/// the report is read; expected values are recomputed from its config.
pub fn check_report(r: &Report) -> Vec<Gate> {
    let cfg = &r.config;
    let tol = cfg.tolerances;
    let (c, k, m) = (cfg.c, cfg.k, cfg.m);
    let order = match cfg.scheme {
        Scheme::Euler => 1,
        Scheme::MidpointExp => 2,
    };
    let hp = cfg.h.powi(order);
    let small = tol.order * hp;
    let value = tol.value * hp;
    let mean_curv = tol.mean_curvature * hp + tol.h_floor;
    let spacing = cfg.grid.h();
    let mut gates = vec![
        Gate::holds("config.h", (cfg.h - spacing).abs() <= 1e-12 * spacing && spacing > 0.0),
        Gate::below("flatness", r.flatness.max, r.flatness.threshold),
        Gate::holds(
            "flatness.threshold",
            cfg.grid
                .shrink(1)
                .map(|g| crate::frames::flatness_threshold(g, Some(c)) == r.flatness.threshold)
                .unwrap_or(false),
        ),
        Gate::below("holonomy", r.holonomy, small),
        Gate::below("frame_drift", r.frame_drift, tol.drift * cfg.h * cfg.h),
        Gate::below("contact_residual", r.contact_residual, small),
        Gate::below("metric.deviation", r.metric.deviation, small),
        Gate::holds("metric.min_eigenvalue", r.metric.min_eigenvalue > 0.0),
        Gate::below("middle_sphere.radius_residual", r.middle_sphere.radius_residual, small),
        Gate::below("middle_sphere.center_residual", r.middle_sphere.center_residual, small),
        Gate::holds("middle_sphere.checked", r.middle_sphere.checked > 0),
    ];
    if let Some(dev) = r.metric.m_deviation {
        gates.push(Gate::below("metric.m_deviation", dev, small));
    }

    let d = &r.differentials;
    gates.push(Gate::holds("differentials.Q_const.expected", d.q_const.expected == -c / 2.0));
    gates.push(Gate::holds("differentials.Q_const.errors", consistent(&d.q_const)));
    gates.push(Gate::below("differentials.Q_const", d.q_const.abs_error, value));
    gates.push(Gate::below("differentials.Q_spread", d.q_spread, value));
    gates.push(Gate::below("differentials.CR_residual", d.cr_residual, small));
    gates.push(Gate::holds("differentials.l_minimal", d.l_minimal == ((m + k).abs() < 1e-6)));
    if d.l_minimal {
        gates.push(Gate::below("differentials.P_max", d.p_max, 1e-6));
    }
    match (&d.ratio, d.ratio_spread) {
        (Some(ratio), Some(spread)) => {
            let expected = -c / (8.0 * (m + k) * (m + k));
            gates.push(Gate::holds("differentials.ratio.expected", ratio.expected == expected));
            gates.push(Gate::holds("differentials.ratio.errors", consistent(ratio)));
            gates.push(Gate::below("differentials.ratio", ratio.abs_error, value));
            gates.push(Gate::below("differentials.ratio_spread", spread, value));
        }
        (None, None) => gates.push(Gate::holds("differentials.ratio", d.l_minimal)),
        _ => gates.push(Gate::holds("differentials.ratio", false)),
    }

    if d.l_minimal {
        match &r.hyperplane {
            Some(hp_block) => {
                gates.push(Gate::holds("hyperplane.class", hp_block.class == expected_hyperplane_class(c)));
                gates.push(Gate::holds(
                    "hyperplane.class_expected",
                    hp_block.class_expected == expected_hyperplane_class(c),
                ));
                gates.push(Gate::holds("hyperplane.v_norm2.expected", hp_block.v_norm2.expected == -c));
                gates.push(Gate::holds("hyperplane.v_norm2.errors", consistent(&hp_block.v_norm2)));
                gates.push(Gate::below("hyperplane.v_norm2", hp_block.v_norm2.abs_error, value));
                gates.push(Gate::below("hyperplane.dv_max", hp_block.dv_max, small));
                gates.push(Gate::below("hyperplane.plane_residual", hp_block.plane_residual, small));
            }
            None => gates.push(Gate::holds("hyperplane", false)),
        }
        gates.push(Gate::holds("quadric", r.quadric.is_none() && r.cmc.is_none()));
        gates.push(Gate::holds("lawson_rows", r.lawson_rows.is_empty()));
        return gates;
    }

    gates.push(Gate::holds("hyperplane", r.hyperplane.is_none()));
    let (Some(q), Some(h)) = (&r.quadric, &r.cmc) else {
        gates.push(Gate::holds("quadric", false));
        return gates;
    };
    let rho_expected = expected_rho(c, k, m);
    let class = expected_quadric_class(c);
    gates.push(Gate::holds("quadric.class", q.class == class));
    gates.push(Gate::holds("quadric.class_expected", q.class_expected == class));
    gates.push(Gate::holds("quadric.rho_expected", q.rho_expected == rho_expected));
    gates.push(Gate::holds(
        "quadric.rho_errors",
        abs_rel(rho_expected, q.rho) == (q.rho_abs_error, q.rho_rel_error),
    ));
    gates.push(Gate::below("quadric.rho", q.rho_abs_error, value));
    gates.push(Gate::below("quadric.center_spread", q.center_spread, small));
    gates.push(Gate::below("quadric.value_spread", q.value_spread, small));
    // max |v| bounds the mean, and |v - ρ| <= |v| + |ρ|
    let slack = 1e-12 * q.value_max;
    gates.push(Gate::holds(
        "quadric.value_bounds",
        q.value_max + slack >= q.rho.abs() && q.value_max + q.rho.abs() + slack >= q.value_spread,
    ));
    if class == QuadricClass::Lightcone {
        gates.push(Gate::below("quadric.lightcone", q.rho.abs(), q.lightcone_threshold));
        gates.push(Gate::below("quadric.value_max", q.value_max, small));
    } else {
        gates.push(Gate::holds("quadric.lightcone_threshold", q.rho.abs() >= q.lightcone_threshold));
    }

    let h_expected = expected_mean_curvature(c, k, m);
    gates.push(Gate::holds("cmc.H_expected", h.h_expected == h_expected));
    gates.push(Gate::holds(
        "cmc.H_errors",
        abs_rel(h_expected, h.h_mean) == (h.h_abs_error, h.h_rel_error),
    ));
    gates.push(Gate::below("cmc.H_mean", h.h_abs_error, mean_curv));
    gates.push(Gate::below("cmc.H_spread", h.h_spread, small));
    gates.push(Gate::below("cmc.H_std", h.h_std, h.h_spread.max(f64::MIN_POSITIVE)));
    if class != QuadricClass::Lightcone {
        gates.push(Gate::holds("cmc.sign", h.sign != 0));
    }

    match r.lawson_rows.as_slice() {
        [row] => {
            gates.push(Gate::holds(
                "lawson_rows.echo",
                row.m == m && row.class == q.class && row.rho == q.rho && row.metric_deviation == r.metric.m_deviation,
            ));
            gates.push(Gate::holds("lawson_rows.H.expected", row.h.expected == h_expected));
            gates.push(Gate::holds("lawson_rows.H", row.h.measured == h.h_mean && consistent(&row.h)));
            match (&row.kappa, &row.invariant) {
                (Some(kp), Some(inv)) if class != QuadricClass::Lightcone => {
                    let kappa_expected = 1.0 / rho_expected;
                    gates.push(Gate::holds(
                        "lawson_rows.kappa",
                        kp.expected == kappa_expected && kp.measured == 1.0 / q.rho && consistent(kp),
                    ));
                    gates.push(Gate::holds(
                        "lawson_rows.invariant.expected",
                        inv.expected == kappa_expected + h_expected * h_expected
                            && inv.measured == kp.measured + h.h_mean * h.h_mean
                            && consistent(inv),
                    ));
                    gates.push(Gate::below("lawson_rows.invariant", inv.abs_error, mean_curv));
                }
                (None, None) => gates.push(Gate::holds("lawson_rows.kappa", class == QuadricClass::Lightcone)),
                _ => gates.push(Gate::holds("lawson_rows.kappa", false)),
            }
        }
        _ => gates.push(Gate::holds("lawson_rows", false)),
    }
    gates
}
