//! Rectangular chart `z = x + iy`, node fields, finite differences and the
//! field CSV format.
//!
//! Nodes are indexed `(i, j)` with `i` along `x` and `j` along `y`; storage is
//! row-major with one row per `j`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny, min: 3 });
        }
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidGrid(format!(
                "ranges [{x0}, {x1}] x [{y0}, {y1}] must be finite and increasing"
            )));
        }
        Ok(Grid {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
        })
    }

    /// `[-half, half]^2` with `n` nodes per side.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Grid::new(-half, half, -half, half, n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    /// The coarser of the two spacings.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn x(&self, i: usize) -> f64 {
        // interpolate from both ends so the last node is exactly x1
        let t = i as f64 / (self.nx - 1) as f64;
        self.x0 * (1.0 - t) + self.x1 * t
    }

    pub fn y(&self, j: usize) -> f64 {
        let t = j as f64 / (self.ny - 1) as f64;
        self.y0 * (1.0 - t) + self.y1 * t
    }

    /// The grid with `margin` nodes removed on every side.
    pub fn shrink(&self, margin: usize) -> Result<Grid> {
        (0..margin).try_fold(*self, |g, _| g.interior())
    }

    /// The grid with `margin` nodes added on every side at the same spacing.
    pub fn expand(&self, margin: usize) -> Result<Grid> {
        let (mx, my) = (margin as f64 * self.hx(), margin as f64 * self.hy());
        Grid::new(
            self.x0 - mx,
            self.x1 + mx,
            self.y0 - my,
            self.y1 + my,
            self.nx + 2 * margin,
            self.ny + 2 * margin,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// The grid with one node removed on every side.
    pub fn interior(&self) -> Result<Grid> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::GridTooSmall {
                nx: self.nx,
                ny: self.ny,
                min: 3,
            });
        }
        Grid::new(
            self.x(1),
            self.x(self.nx - 2),
            self.y(1),
            self.y(self.ny - 2),
            self.nx - 2,
            self.ny - 2,
        )
        .map_err(|_| Error::GridTooSmall {
            nx: self.nx,
            ny: self.ny,
            min: 5,
        })
    }

    /// Nodes at least `margin` away from the boundary, row by row.
    pub fn nodes(&self, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        (margin..ny.saturating_sub(margin))
            .flat_map(move |j| (margin..nx.saturating_sub(margin)).map(move |i| (i, j)))
    }
}

/// Per-node values of any type on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeField<T> {
    pub grid: Grid,
    pub values: Vec<T>,
}

pub type ScalarField = NodeField<f64>;

impl<T> NodeField<T> {
    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(NodeField { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        NodeField { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.values[self.grid.idx(i, j)]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> NodeField<U> {
        NodeField {
            grid: self.grid,
            values: self.values.iter().map(&mut f).collect(),
        }
    }

    /// Restriction to the interior grid (one node dropped on every side).
    pub fn interior(&self) -> Result<NodeField<T>>
    where
        T: Clone,
    {
        let grid = self.grid.interior()?;
        Ok(NodeField::from_fn(grid, |i, j| self.at(i + 1, j + 1).clone()))
    }
}

impl ScalarField {
    pub fn sample(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        NodeField::from_fn(grid, |i, j| f(grid.x(i), grid.y(j)))
    }

    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn dx(&self, i: usize, j: usize) -> f64 {
        (self.v(i + 1, j) - self.v(i - 1, j)) / (2.0 * self.grid.hx())
    }

    pub fn dy(&self, i: usize, j: usize) -> f64 {
        (self.v(i, j + 1) - self.v(i, j - 1)) / (2.0 * self.grid.hy())
    }

    pub fn dxy(&self, i: usize, j: usize) -> f64 {
        (self.v(i + 1, j + 1) - self.v(i + 1, j - 1) - self.v(i - 1, j + 1) + self.v(i - 1, j - 1))
            / (4.0 * self.grid.hx() * self.grid.hy())
    }

    /// Five-point Laplacian `u_xx + u_yy`.
    pub fn laplacian(&self, i: usize, j: usize) -> f64 {
        let hx2 = self.grid.hx().powi(2);
        let hy2 = self.grid.hy().powi(2);
        let c = self.v(i, j);
        (self.v(i + 1, j) - 2.0 * c + self.v(i - 1, j)) / hx2
            + (self.v(i, j + 1) - 2.0 * c + self.v(i, j - 1)) / hy2
    }

    /// `max |v|` over nodes at least `margin` from the boundary.
    pub fn max_abs(&self, margin: usize) -> f64 {
        self.grid
            .nodes(margin)
            .map(|(i, j)| self.v(i, j).abs())
            .fold(0.0, f64::max)
    }

    /// `max v - min v` over nodes at least `margin` from the boundary.
    pub fn spread(&self, margin: usize) -> f64 {
        let (lo, hi) = self
            .grid
            .nodes(margin)
            .map(|(i, j)| self.v(i, j))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    pub fn mean(&self, margin: usize) -> f64 {
        let (s, n) = self
            .grid
            .nodes(margin)
            .fold((0.0, 0usize), |(s, n), (i, j)| (s + self.v(i, j), n + 1));
        s / n as f64
    }

    /// Writes the field CSV: a header line `nx,ny,x0,x1,y0,y1` followed by one
    /// line of `nx` values per grid row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "{},{},{},{},{},{}", g.nx, g.ny, g.x0, g.x1, g.y0, g.y1)?;
        let mut line = String::new();
        for j in 0..g.ny {
            line.clear();
            for i in 0..g.nx {
                if i > 0 {
                    line.push(',');
                }
                write!(line, "{}", self.v(i, j)).expect("writing to a String cannot fail");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Reads the field CSV. A leading line spelling out the column names
    /// `nx,ny,x0,x1,y0,y1` is accepted and skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let parse_err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };

        let mut next = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                Some((n, l)) => Ok(Some((n, l?))),
                None => Ok(None),
            }
        };
        let (mut n, mut header) = next()?.ok_or_else(|| parse_err(0, "empty file".into()))?;
        if header.trim().starts_with("nx") {
            (n, header) = next()?.ok_or_else(|| parse_err(n + 1, "missing grid header".into()))?;
        }
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(parse_err(n, format!("expected 6 header fields, got {}", fields.len())));
        }
        let nx: usize = fields[0].parse().map_err(|e| parse_err(n, format!("nx: {e}")))?;
        let ny: usize = fields[1].parse().map_err(|e| parse_err(n, format!("ny: {e}")))?;
        let mut r = [0.0; 4];
        for (k, slot) in r.iter_mut().enumerate() {
            *slot = fields[k + 2]
                .parse()
                .map_err(|e| parse_err(n, format!("range bound: {e}")))?;
        }
        let grid = Grid::new(r[0], r[1], r[2], r[3], nx, ny)?;

        let mut values = Vec::with_capacity(grid.len());
        for row in 0..ny {
            let (n, line) = next()?.ok_or_else(|| parse_err(n + row + 1, format!("missing row {row}")))?;
            let before = values.len();
            for tok in line.split(',') {
                values.push(
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(n, format!("value {tok:?}: {e}")))?,
                );
            }
            if values.len() - before != nx {
                return Err(parse_err(n, format!("expected {nx} values, got {}", values.len() - before)));
            }
        }
        if let Some((n, _)) = next()? {
            return Err(parse_err(n, "trailing data after the last row".into()));
        }
        NodeField::from_values(grid, values)
    }
}

/// A scalar field whose values are only meaningful at least `margin` nodes
/// away from the boundary; the outer ring holds NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    pub field: ScalarField,
    pub margin: usize,
}

impl InteriorField {
    pub fn from_fn(grid: Grid, margin: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let field = NodeField::from_fn(grid, |i, j| {
            let inside = i >= margin && j >= margin && i + margin < grid.nx && j + margin < grid.ny;
            if inside {
                f(i, j)
            } else {
                f64::NAN
            }
        });
        InteriorField { field, margin }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let g = &self.field.grid;
        let m = self.margin;
        (i >= m && j >= m && i + m < g.nx && j + m < g.ny).then(|| self.field.v(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.field.max_abs(self.margin)
    }
}
