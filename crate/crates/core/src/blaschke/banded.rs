//! Banded LU factorization with partial pivoting for the Newton systems of
//! the Liouville solver (five-point stencil, bandwidth = row length).

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `kl` extra columns on the right for fill-in from row swaps.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.slot(r, c)]
    }

    /// Adds `v` at `(r, c)`; the entry must lie inside the declared band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r}, {c}) outside the band"
        );
        let s = self.slot(r, c);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.kl + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.get(r, c) * x[c]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` in place, consuming the matrix. On a zero pivot the
    /// offending row index is returned.
    pub fn solve(mut self, b: &mut [f64]) -> Result<(), usize> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in (k + 1)..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tiny || !best.is_finite() {
                return Err(k);
            }
            if p != k {
                for c in k..=last_col {
                    let (sk, sp) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(sk, sp);
                }
                b.swap(k, p);
            }
            let pivot = self.data[self.slot(k, k)];
            for r in (k + 1)..=last_row {
                let s = self.slot(r, k);
                let f = self.data[s] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[s] = 0.0;
                for c in (k + 1)..=last_col {
                    let src = self.data[self.slot(k, c)];
                    let dst = self.slot(r, c);
                    self.data[dst] -= f * src;
                }
                b[r] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut s = b[k];
            for c in (k + 1)..=last_col {
                s -= self.data[self.slot(k, c)] * b[c];
            }
            b[k] = s / self.data[self.slot(k, k)];
        }
        Ok(())
    }
}
