//! Fixed-bandwidth square matrices and a pivoted banded LU solver.
//!
//! All coefficient-space operators in this crate couple mode `m` only to
//! modes `m ± 1`, `m ± 2`, `m ± 3`, so they are stored by diagonal. The LU
//! factorization keeps row interchanges inside the band, which widens the
//! upper part of the factor from `k` to `2k` diagonals.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square matrix with `2k + 1` stored diagonals.
///
/// Diagonal `offset = col - row` lives in `bands[(offset + k) * size + row]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    size: usize,
    half_bandwidth: usize,
    bands: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(size: usize, half_bandwidth: usize) -> Self {
        Self {
            size,
            half_bandwidth,
            bands: vec![0.0; (2 * half_bandwidth + 1) * size],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, 0);
        m.bands.fill(1.0);
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    #[inline]
    fn in_band(&self, row: usize, col: usize) -> bool {
        row < self.size && col < self.size && row.abs_diff(col) <= self.half_bandwidth
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        let k = self.half_bandwidth as isize;
        let offset = col as isize - row as isize;
        (offset + k) as usize * self.size + row
    }

    /// Entry `(row, col)`; zero outside the band.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if self.in_band(row, col) {
            self.bands[self.slot(row, col)]
        } else {
            0.0
        }
    }

    /// Writes `(row, col)`. Panics when the position is outside the band.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            self.in_band(row, col),
            "({row}, {col}) outside half-bandwidth {} of a {}x{} matrix",
            self.half_bandwidth,
            self.size,
            self.size
        );
        let s = self.slot(row, col);
        self.bands[s] = value;
    }

    /// Iterates the structurally stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let k = self.half_bandwidth;
        (0..self.size).flat_map(move |row| {
            let lo = row.saturating_sub(k);
            let hi = (row + k).min(self.size.saturating_sub(1));
            (lo..=hi).map(move |col| (row, col, self.get(row, col)))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.size);
        assert_eq!(y.len(), self.size);
        let n = self.size;
        let k = self.half_bandwidth;
        y.fill(0.0);
        for d in 0..(2 * k + 1) {
            let offset = d as isize - k as isize;
            let band = &self.bands[d * n..(d + 1) * n];
            let (r0, r1) = if offset >= 0 {
                (0, n.saturating_sub(offset as usize))
            } else {
                ((-offset) as usize, n)
            };
            for row in r0..r1 {
                let col = (row as isize + offset) as usize;
                y[row] += band[row] * x[col];
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.size, self.half_bandwidth);
        for (i, j, v) in self.entries() {
            t.set(j, i, v);
        }
        t
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other`, widened to the larger bandwidth.
    pub fn add_scaled(&self, other: &BandedMatrix, factor: f64) -> Self {
        assert_eq!(self.size, other.size, "size mismatch");
        let k = self.half_bandwidth.max(other.half_bandwidth);
        let mut out = Self::zeros(self.size, k);
        for (i, j, v) in self.entries() {
            out.set(i, j, v);
        }
        for (i, j, v) in other.entries() {
            let cur = out.get(i, j);
            out.set(i, j, cur + factor * v);
        }
        out
    }

    /// `I + factor * self`.
    pub fn shifted_identity(&self, factor: f64) -> Self {
        let mut out = self.scaled(factor);
        for i in 0..self.size {
            let v = out.get(i, i);
            out.set(i, i, 1.0 + v);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|A(i,j) - B(i,j)|` over all positions.
    pub fn max_abs_diff(&self, other: &BandedMatrix) -> f64 {
        assert_eq!(self.size, other.size);
        let k = self.half_bandwidth.max(other.half_bandwidth);
        let mut worst = 0.0_f64;
        for i in 0..self.size {
            let lo = i.saturating_sub(k);
            let hi = (i + k).min(self.size.saturating_sub(1));
            for j in lo..=hi {
                worst = worst.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Fails when `dense` has a nonzero entry outside the requested band.
    pub fn from_dense(dense: &DMatrix<f64>, half_bandwidth: usize) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::Input(format!(
                "matrix is {}x{}, expected square",
                dense.nrows(),
                dense.ncols()
            )));
        }
        let n = dense.nrows();
        let mut out = Self::zeros(n, half_bandwidth);
        for i in 0..n {
            for j in 0..n {
                let v = dense[(i, j)];
                if i.abs_diff(j) <= half_bandwidth {
                    out.set(i, j, v);
                } else if v != 0.0 {
                    return Err(Error::Input(format!(
                        "entry ({i}, {j}) = {v} lies outside half-bandwidth {half_bandwidth}"
                    )));
                }
            }
        }
        Ok(out)
    }
}

/// LU factors of a banded matrix with partial pivoting inside the band.
///
/// Row `i` of the factor stores columns `i - kl ..= i + kl + ku`; the lower
/// part holds the elimination multipliers in the position they were used.
#[derive(Debug, Clone)]
pub struct BandedLu {
    size: usize,
    lower: usize,
    upper: usize,
    rows: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &BandedMatrix) -> Result<Self> {
        let n = matrix.size();
        let kl = matrix.half_bandwidth();
        let ku = 2 * kl;
        let width = kl + ku + 1;
        let mut lu = Self {
            size: n,
            lower: kl,
            upper: ku,
            rows: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for (i, j, v) in matrix.entries() {
            *lu.at_mut(i, j) = v;
        }

        let tiny = matrix.max_abs() * f64::EPSILON * (n.max(1) as f64);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in (k + 1)..=last_row {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular { row: k });
            }
            lu.pivots[k] = p;
            let last_col = (k + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = lu.at(k, j);
                    let b = lu.at(p, j);
                    *lu.at_mut(k, j) = b;
                    *lu.at_mut(p, j) = a;
                }
            }
            let pivot = lu.at(k, k);
            for i in (k + 1)..=last_row {
                let l = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = l;
                if l != 0.0 {
                    for j in (k + 1)..=last_col {
                        let u = lu.at(k, j);
                        *lu.at_mut(i, j) -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.upper);
        row * (self.lower + self.upper + 1) + (col + self.lower - row)
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.rows[self.index(row, col)]
    }

    #[inline]
    fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        let i = self.index(row, col);
        &mut self.rows[i]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.size;
        assert_eq!(b.len(), n, "rhs length mismatch");
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=(k + self.lower).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..=(i + self.upper).min(n - 1) {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }
}

/// Solves `m x = rhs` by banded LU.
pub fn banded_solve(m: &BandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.size() {
        return Err(Error::Input(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            m.size(),
            m.size()
        )));
    }
    if m.half_bandwidth() > 3 {
        return Err(Error::Capability(format!(
            "half-bandwidth {} exceeds the supported maximum of 3",
            m.half_bandwidth()
        )));
    }
    Ok(BandedLu::factor(m)?.solve(rhs))
}
