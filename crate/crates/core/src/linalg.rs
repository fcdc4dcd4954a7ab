//! Sparse row-compressed matrices and a banded LU factorization with partial pivoting.
//!
//! All grid operators couple a node only to its neighbours, so with x-fastest node ordering
//! their bandwidth is the row length of the grid. A banded LU keeps factorization cost at
//! `O(n · kl · (kl + ku))` without a general sparse solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CsrMatrix {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).1.iter().map(|v| abs(*v)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.n {
            for &c in self.row(r).0 {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    /// Applies `f(row, col, value)` to every stored entry.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.vals[k] = f(r, self.cols[k], self.vals[k]);
            }
        }
        out
    }

    /// `self + diag(d)`, inserting diagonal entries where needed.
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        let mut t = self.triplets();
        t.extend(d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            t.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
        }
        t
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    t.push((new_r, map[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), t)
    }

    /// Factorizes `self - shift · I`.
    pub fn lu_shifted(&self, shift: f64) -> Result<BandedLu> {
        BandedLu::factor(self, shift)
    }

    pub fn lu(&self) -> Result<BandedLu> {
        BandedLu::factor(self, 0.0)
    }
}

/// LU factors of a band matrix with row pivoting (the LAPACK `gbtrf` layout, row-major).
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    // row i stores absolute columns [i - kl, i + kl + ku]
    rows: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn factor(a: &CsrMatrix, shift: f64) -> Result<BandedLu> {
        let n = a.n();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut rows = vec![0.0; n * width];
        let slot = |i: usize, j: usize| i * width + (j + kl - i);
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                rows[slot(r, c)] += v;
            }
            rows[slot(r, r)] -= shift;
        }
        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        let scale = a.norm_inf().max(abs(shift)).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = abs(rows[slot(k, k)]);
            for r in k + 1..=last {
                let v = abs(rows[slot(r, k)]);
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-300 {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            let hi_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=hi_col {
                    rows.swap(slot(k, c), slot(p, c));
                }
            }
            let pivot = rows[slot(k, k)];
            for r in k + 1..=last {
                let factor = rows[slot(r, k)] / pivot;
                lower[k * kl + (r - k - 1)] = factor;
                if factor != 0.0 {
                    rows[slot(r, k)] = 0.0;
                    for c in k + 1..=hi_col {
                        rows[slot(r, c)] -= factor * rows[slot(k, c)];
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            width,
            rows,
            lower,
            pivots,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last = (k + kl).min(n - 1);
                for r in k + 1..=last {
                    b[r] -= self.lower[k * kl + (r - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let hi_col = (k + kl + ku).min(n - 1);
            let row = &self.rows[k * w..(k + 1) * w];
            let mut s = b[k];
            for c in k + 1..=hi_col {
                s -= row[c + kl - k] * b[c];
            }
            b[k] = s / row[kl];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
