use thiserror::Error;

use crate::minkowski::{CausalCharacter, LinearCheck};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction is {character:?}, expected a future-pointing null vector")]
    NotPositiveLightlike { character: CausalCharacter },

    #[error("linear part is not in the Laguerre group: {0:?}")]
    InvalidGroupElement(LinearCheck),

    #[error("normal has length {norm}, expected a unit vector")]
    NonUnitNormal { norm: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid {nx}x{ny} is too small, need at least {min} nodes per side")]
    GridTooSmall { nx: usize, ny: usize, min: usize },

    #[error("field shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("seed outside its domain: {0}")]
    Domain(String),

    #[error("potential has no character; it is not known to solve the Liouville equation")]
    MissingCharacter,

    #[error("Newton iteration did not converge after {} iterations (last residual {:e})", trace.len().saturating_sub(1), trace.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { trace: Vec<f64> },

    #[error("singular Jacobian at unknown {row}")]
    SingularJacobian { row: usize, trace: Vec<f64> },

    #[error("1-form is not closed: circulation {residual:e} exceeds {threshold:e}")]
    NotClosed { residual: f64, threshold: f64 },

    #[error("Maurer-Cartan form is not flat: residual {residual:e} exceeds {threshold:e}")]
    NotFlat { residual: f64, threshold: f64 },

    #[error("frame drift {drift:e} exceeds bound {bound:e}")]
    FrameDrift { drift: f64, bound: f64 },

    #[error("P = p1 + p3 reaches {max_abs_p:e}; the hyperplane branch needs an L-minimal surface")]
    NotLMinimal { max_abs_p: f64 },

    #[error("P = p1 + p3 drops to {min_abs_p:e}; the surface is (nearly) L-minimal")]
    NearlyLMinimal { min_abs_p: f64 },

    #[error("degenerate normal span at node ({i}, {j})")]
    DegenerateNormal { i: usize, j: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
