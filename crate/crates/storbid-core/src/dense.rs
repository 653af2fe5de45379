//! Small dense linear-algebra kernels for the active-set solver.
//!
//! Everything here avoids square roots so the crate stays no_std-friendly:
//! null spaces come from Gauss-Jordan reduction with partial pivoting, and
//! positive semidefinite systems go through a diagonally pivoted LDL^T
//! factorization instead of Cholesky.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(self.row(r), x))
            .collect()
    }

    /// `self^T * x` for a column vector `x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r).iter().enumerate() {
                out[c] += v * xr;
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Reduce `a` in place to reduced row echelon form with partial pivoting.
/// Entries below `tol` in magnitude never pivot. Returns the pivot columns
/// in order.
fn rref(a: &mut Mat, tol: f64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut lead = 0usize;
    for col in 0..a.cols {
        if lead >= a.rows {
            break;
        }
        let mut best = lead;
        let mut best_abs = a.get(lead, col).abs();
        for r in lead + 1..a.rows {
            let v = a.get(r, col).abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= tol {
            continue;
        }
        a.swap_rows(lead, best);
        let inv = 1.0 / a.get(lead, col);
        for c in col..a.cols {
            let v = a.get(lead, c) * inv;
            a.set(lead, c, v);
        }
        a.set(lead, col, 1.0);
        for r in 0..a.rows {
            if r == lead {
                continue;
            }
            let factor = a.get(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in col..a.cols {
                let v = a.get(r, c) - factor * a.get(lead, c);
                a.set(r, c, v);
            }
            a.set(r, col, 0.0);
        }
        pivots.push(col);
        lead += 1;
    }
    pivots
}

/// Columns spanning the null space of `a`, found from its reduced echelon
/// form. `rel_tol` is a rank tolerance relative to the largest entry of `a`.
pub fn null_space(a: &Mat, rel_tol: f64) -> Mat {
    let scale = a.max_abs();
    let tol = if scale > 0.0 { rel_tol * scale } else { rel_tol };
    let mut work = a.clone();
    let pivots = rref(&mut work, tol);
    let n = a.cols;
    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..n).filter(|c| !is_pivot[*c]).collect();
    let mut basis = Mat::zeros(n, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis.set(f, k, 1.0);
        for (row, &c) in pivots.iter().enumerate() {
            basis.set(c, k, -work.get(row, f));
        }
    }
    basis
}

/// `P^T H P = L D L^T` factorization of a symmetric positive semidefinite
/// matrix with greedy diagonal pivoting. Pivoting stops once the largest
/// remaining diagonal entry falls below the rank tolerance; for a PSD matrix
/// the whole trailing block is then negligible.
#[derive(Debug, Clone)]
pub struct LdlPsd {
    n: usize,
    rank: usize,
    /// `perm[j]` is the original index placed at pivot position `j`.
    perm: Vec<usize>,
    /// Unit lower triangular factor in pivot order; only the first `rank`
    /// columns carry elimination data.
    l: Mat,
    d: Vec<f64>,
}

pub fn ldl_psd(h: &Mat, rel_tol: f64) -> LdlPsd {
    debug_assert_eq!(h.rows(), h.cols());
    let n = h.rows();
    let scale = h.max_abs();
    let tol = if scale > 0.0 { rel_tol * scale } else { rel_tol };
    let mut w = h.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut d = Vec::new();
    let mut rank = n;
    for j in 0..n {
        let mut best = j;
        let mut best_val = w.get(j, j);
        for i in j + 1..n {
            let v = w.get(i, i);
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        if best_val <= tol {
            rank = j;
            break;
        }
        if best != j {
            w.swap_rows(j, best);
            for r in 0..n {
                let tmp = w.get(r, j);
                w.set(r, j, w.get(r, best));
                w.set(r, best, tmp);
            }
            perm.swap(j, best);
        }
        let dj = w.get(j, j);
        d.push(dj);
        for i in j + 1..n {
            let lij = w.get(i, j) / dj;
            w.set(i, j, lij);
        }
        for i in j + 1..n {
            let lij = w.get(i, j);
            for c in j + 1..=i {
                let v = w.get(i, c) - lij * dj * w.get(c, j);
                w.set(i, c, v);
                w.set(c, i, v);
            }
        }
    }
    LdlPsd {
        n,
        rank,
        perm,
        l: w,
        d,
    }
}

impl LdlPsd {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Solve `H x = b`, zero-filling directions in the null space. When the
    /// system is inconsistent the returned vector solves only the range-space
    /// part; callers detect that from the residual `H x - b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            y[j] = b[self.perm[j]];
        }
        // Forward: L y' = y. Columns past the rank are identity.
        for j in 0..self.rank {
            let yj = y[j];
            if yj == 0.0 {
                continue;
            }
            for i in j + 1..self.n {
                y[i] -= self.l.get(i, j) * yj;
            }
        }
        for j in 0..self.n {
            if j < self.rank {
                y[j] /= self.d[j];
            } else {
                y[j] = 0.0;
            }
        }
        // Backward: L^T x = y over the leading block.
        let mut x = y;
        for j in (0..self.rank).rev() {
            let mut s = x[j];
            for i in j + 1..self.n {
                s -= self.l.get(i, j) * x[i];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; self.n];
        for j in 0..self.n {
            out[self.perm[j]] = x[j];
        }
        out
    }

    /// Columns spanning the null space of `H`.
    pub fn null_basis(&self) -> Mat {
        let k = self.n - self.rank;
        let mut basis = Mat::zeros(self.n, k);
        for (col, j) in (self.rank..self.n).enumerate() {
            // Solve L11^T w1 = -(row j of L restricted to pivot columns).
            let mut w1 = vec![0.0; self.rank];
            for i in (0..self.rank).rev() {
                let mut s = -self.l.get(j, i);
                for m in i + 1..self.rank {
                    s -= self.l.get(m, i) * w1[m];
                }
                w1[i] = s;
            }
            for (i, v) in w1.iter().enumerate() {
                basis.set(self.perm[i], col, *v);
            }
            basis.set(self.perm[j], col, 1.0);
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn assert_in_null_space(a: &Mat, basis: &Mat) {
        for col in 0..basis.cols() {
            let v: Vec<f64> = (0..basis.rows()).map(|r| basis.get(r, col)).collect();
            let residual = a.mul_vec(&v);
            assert!(
                max_abs_slice(&residual) < 1e-9,
                "basis column {col} not in null space: {residual:?}"
            );
        }
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let mut a = Mat::zeros(1, 3);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(0, 2, 1.0);
        let basis = null_space(&a, TOL);
        assert_eq!(basis.cols(), 2);
        assert_in_null_space(&a, &basis);
    }

    #[test]
    fn null_space_of_full_rank_square_is_empty() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 3.0);
        assert_eq!(null_space(&a, TOL).cols(), 0);
    }

    #[test]
    fn null_space_of_zero_matrix_is_everything() {
        let a = Mat::zeros(2, 4);
        let basis = null_space(&a, TOL);
        assert_eq!(basis.cols(), 4);
    }

    #[test]
    fn null_space_handles_duplicate_rows() {
        let mut a = Mat::zeros(3, 3);
        for c in 0..3 {
            a.set(0, c, (c + 1) as f64);
            a.set(1, c, 2.0 * (c + 1) as f64);
        }
        a.set(2, 0, 1.0);
        let basis = null_space(&a, TOL);
        assert_eq!(basis.cols(), 1);
        assert_in_null_space(&a, &basis);
    }

    #[test]
    fn ldl_solves_positive_definite_system() {
        // H = [[4,1,0],[1,3,1],[0,1,2]], x = [1,-2,3] => b = [2,-2,4].
        let mut h = Mat::zeros(3, 3);
        let entries = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        for r in 0..3 {
            for c in 0..3 {
                h.set(r, c, entries[r][c]);
            }
        }
        let fact = ldl_psd(&h, TOL);
        assert_eq!(fact.rank(), 3);
        let x = fact.solve(&[2.0, -2.0, 4.0]);
        let expected = [1.0, -2.0, 3.0];
        for (xi, ei) in x.iter().zip(expected) {
            assert!((xi - ei).abs() < 1e-10);
        }
    }

    #[test]
    fn ldl_detects_rank_and_null_basis_of_outer_product() {
        // H = v v^T has rank one.
        let v = [1.0, -2.0, 0.5, 3.0];
        let n = v.len();
        let mut h = Mat::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                h.set(r, c, v[r] * v[c]);
            }
        }
        let fact = ldl_psd(&h, TOL);
        assert_eq!(fact.rank(), 1);
        let basis = fact.null_basis();
        assert_eq!(basis.cols(), n - 1);
        assert_in_null_space(&h, &basis);
        // Consistent rhs: b = H y for some y.
        let y = [0.3, 1.0, -0.7, 0.2];
        let b = h.mul_vec(&y);
        let x = fact.solve(&b);
        let residual: Vec<f64> = h
            .mul_vec(&x)
            .iter()
            .zip(&b)
            .map(|(hx, bi)| hx - bi)
            .collect();
        assert!(max_abs_slice(&residual) < 1e-9);
    }

    #[test]
    fn ldl_zero_matrix_has_full_null_space() {
        let h = Mat::zeros(3, 3);
        let fact = ldl_psd(&h, TOL);
        assert_eq!(fact.rank(), 0);
        assert_eq!(fact.null_basis().cols(), 3);
        assert_eq!(fact.solve(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn ldl_random_psd_solves_consistent_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = rng.gen_range(1..7);
            let r = rng.gen_range(0..=n);
            // H = B^T B with B an r x n random matrix: PSD with rank <= r.
            let mut b = Mat::zeros(r, n);
            for i in 0..r {
                for j in 0..n {
                    b.set(i, j, rng.gen_range(-2.0..2.0));
                }
            }
            let mut h = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..r {
                        s += b.get(k, i) * b.get(k, j);
                    }
                    h.set(i, j, s);
                }
            }
            let fact = ldl_psd(&h, TOL);
            assert!(fact.rank() <= r, "trial {trial}: rank exceeded");
            let basis = fact.null_basis();
            assert_eq!(basis.cols(), n - fact.rank());
            assert_in_null_space(&h, &basis);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let rhs = h.mul_vec(&y);
            let x = fact.solve(&rhs);
            let residual: Vec<f64> = h
                .mul_vec(&x)
                .iter()
                .zip(&rhs)
                .map(|(hx, bi)| hx - bi)
                .collect();
            let scale = 1.0 + max_abs_slice(&rhs);
            assert!(
                max_abs_slice(&residual) < 1e-8 * scale,
                "trial {trial}: residual too large"
            );
        }
    }

    #[test]
    fn matvec_helpers() {
        let mut a = Mat::zeros(2, 3);
        for c in 0..3 {
            a.set(0, c, (c + 1) as f64);
            a.set(1, c, -(c as f64));
        }
        assert_eq!(a.mul_vec(&[1.0, 0.0, 2.0]), vec![7.0, -4.0]);
        assert_eq!(a.mul_transpose_vec(&[1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
    }
}
