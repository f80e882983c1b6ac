//! Sparse and dense linear algebra for the Newton steps.
//!
//! 1D systems are tridiagonal, plus two corner entries when periodic, and are
//! solved directly. Larger 2D/3D systems use restarted GMRES with an ILU(0)
//! right preconditioner.

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates triplets; duplicates are summed.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CsrBuilder {
    pub fn new(n: usize, per_row: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|_| Vec::with_capacity(per_row)).collect(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, val: f64) {
        self.rows[row].push((col, val));
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Multiplies column `j` by `d[j]`.
    pub fn scale_columns(&mut self, d: &[f64]) {
        for (v, &c) in self.vals.iter_mut().zip(&self.cols) {
            *v *= d[c];
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[i * self.n + j] += v;
            }
        }
        a
    }
}

/// LU with partial pivoting on a row-major dense matrix, in place.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap();
        if a[p * n + k] == 0.0 {
            return Err(Error::LinearSolve("singular matrix".into()));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let piv = a[k * n + k];
        for i in k + 1..n {
            let m = a[i * n + k] / piv;
            if m != 0.0 {
                for j in k..n {
                    a[i * n + j] -= m * a[k * n + j];
                }
                b[i] -= m * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k * n + k];
    }
    Ok(b)
}

/// Tridiagonal solve with partial pivoting (the `gtsv` elimination).
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` row `i` to column `i + 1`.
pub fn tridiagonal_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut dl = lower.to_vec();
    let mut d = diag.to_vec();
    let mut du = upper.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(Error::LinearSolve("singular tridiagonal system".into()));
            }
            let m = dl[i] / d[i];
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
        } else {
            let m = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - m * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -m * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= m * b[i];
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return Err(Error::LinearSolve("singular tridiagonal system".into()));
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    Ok(b)
}

/// Tridiagonal plus corners `a[0][n-1] = top`, `a[n-1][0] = bottom`, by
/// Sherman-Morrison.
pub fn cyclic_solve(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    top: f64,
    bottom: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if top == 0.0 && bottom == 0.0 {
        return tridiagonal_solve(lower, diag, upper, rhs);
    }
    // A = T + u v^T with u = (gamma, 0.., bottom), v = (1, 0.., top / gamma)
    let gamma = if diag[0] != 0.0 { -diag[0] } else { 1.0 };
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= bottom * top / gamma;
    let y = tridiagonal_solve(lower, &d, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom;
    let z = tridiagonal_solve(lower, &d, upper, &u)?;
    let vy = y[0] + top / gamma * y[n - 1];
    let vz = z[0] + top / gamma * z[n - 1];
    if 1.0 + vz == 0.0 {
        return Err(Error::LinearSolve("singular cyclic system".into()));
    }
    let fac = vy / (1.0 + vz);
    Ok(y.iter().zip(&z).map(|(a, b)| a - fac * b).collect())
}

/// Solves a 1D periodic or wall-bounded system stored in CSR form.
pub fn banded_1d_solve(a: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    let (mut top, mut bottom) = (0.0, 0.0);
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j == i {
                diag[i] = v;
            } else if j + 1 == i {
                lower[j] = v;
            } else if j == i + 1 {
                upper[i] = v;
            } else if i == 0 && j == n - 1 {
                top = v;
            } else if i == n - 1 && j == 0 {
                bottom = v;
            } else {
                return Err(Error::LinearSolve("matrix is not cyclic tridiagonal".into()));
            }
        }
    }
    cyclic_solve(&lower, &diag, &upper, top, bottom, rhs)
}

/// Incomplete LU factorization with the sparsity of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::LinearSolve(format!("missing diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let col = lu.cols[k];
                if col >= i {
                    break;
                }
                let piv = lu.vals[diag_pos[col]];
                if piv == 0.0 {
                    return Err(Error::LinearSolve("zero pivot in ILU(0)".into()));
                }
                let m = lu.vals[k] / piv;
                lu.vals[k] = m;
                for kk in diag_pos[col] + 1..lu.row_ptr[col + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= m * lu.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag_pos })
    }

    /// Applies `(LU)^-1` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let a = &self.lu;
        for i in 0..a.n {
            let mut s = x[i];
            for k in a.row_ptr[i]..self.diag_pos[i] {
                s -= a.vals[k] * x[a.cols[k]];
            }
            x[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = x[i];
            for k in self.diag_pos[i] + 1..a.row_ptr[i + 1] {
                s -= a.vals[k] * x[a.cols[k]];
            }
            x[i] = s / a.vals[self.diag_pos[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES. Stops when `||b - Ax|| <= rtol ||b||`.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Ilu0,
    rtol: f64,
    restart: usize,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = a.n();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let target = rtol * bnorm;
    let mut r = b.to_vec();
    let mut tmp = vec![0.0; n];
    let mut total = 0;
    let m = restart.max(1);
    loop {
        let beta = norm(&r);
        if beta <= target {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut z = v[k].clone();
            precond.apply(&mut z);
            a.mul_vec(&z, &mut tmp);
            let mut w = tmp.clone();
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            // second pass for orthogonality
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                hess[i][k] += c;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= c * vj;
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let den = hess[k][k].hypot(hess[k + 1][k]);
            if den == 0.0 {
                return Err(Error::LinearSolve("GMRES breakdown".into()));
            }
            cs[k] = hess[k][k] / den;
            sn[k] = hess[k + 1][k] / den;
            hess[k][k] = den;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if g[k + 1].abs() <= target || wn == 0.0 || total >= max_iters {
                break;
            }
            v.push(w.iter().map(|wj| wj / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        let mut dx = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (d, vj) in dx.iter_mut().zip(vi) {
                *d += yi * vj;
            }
        }
        precond.apply(&mut dx);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        a.mul_vec(&x, &mut tmp);
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&tmp) {
            *ri = bi - ai;
        }
        if norm(&r) <= target {
            return Ok(x);
        }
        if total >= max_iters {
            return Err(Error::LinearSolve(format!(
                "GMRES reached {max_iters} iterations (relative residual {:e})",
                norm(&r) / bnorm
            )));
        }
    }
}

/// Forward Gauss-Seidel sweeps. For an M-matrix with `b >= 0` a positive
/// starting vector stays positive.
pub fn gauss_seidel(a: &CsrMatrix, b: &[f64], x: &mut [f64], sweeps: usize) {
    for _ in 0..sweeps {
        for i in 0..a.n() {
            let mut diag = 0.0;
            let mut s = b[i];
            for (j, v) in a.row(i) {
                if j == i {
                    diag += v;
                } else {
                    s -= v * x[j];
                }
            }
            x[i] = s / diag;
        }
    }
}

/// Dispatches on size and structure: dense LU for small systems, the cyclic
/// tridiagonal solver in 1D, ILU(0)-preconditioned GMRES otherwise.
pub fn solve(a: &CsrMatrix, rhs: &[f64], dim: usize) -> Result<Vec<f64>> {
    let n = a.n();
    if n <= 64 {
        return dense_solve(a.to_dense(), rhs.to_vec());
    }
    if dim == 1 {
        return banded_1d_solve(a, rhs);
    }
    let ilu = Ilu0::new(a)?;
    gmres(a, rhs, &ilu, 1e-12, 60, 600)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let mut y = vec![0.0; a.n()];
        a.mul_vec(x, &mut y);
        y.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn builder_sums_duplicates() {
        let mut b = CsrBuilder::new(2, 2);
        b.add(0, 1, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, 4.0);
        b.add(0, 0, 1.0);
        let a = b.build();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn dense_solve_needs_pivoting() {
        let a = vec![0.0, 1.0, 1.0, 0.0];
        let x = dense_solve(a, vec![2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
        assert!(dense_solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn tridiagonal_with_zero_diagonal() {
        // first pivot must come from the sub-diagonal
        let x = tridiagonal_solve(&[1.0, 1.0], &[0.0, 1.0, 2.0], &[1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let ax = [x[1], x[0] + x[1] + x[2], x[1] + 2.0 * x[2]];
        for (a, b) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn cyclic_matches_dense(
            n in 3usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 200),
        ) {
            let mut b = CsrBuilder::new(n, 3);
            for i in 0..n {
                b.add(i, i, 4.0 + seed[i]);
                b.add(i, (i + 1) % n, seed[(i + 50) % 200]);
                b.add(i, (i + n - 1) % n, seed[(i + 100) % 200]);
            }
            let a = b.build();
            let rhs: Vec<f64> = (0..n).map(|i| seed[(i + 150) % 200]).collect();
            let x = banded_1d_solve(&a, &rhs).unwrap();
            let y = dense_solve(a.to_dense(), rhs.clone()).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-11 * (1.0 + q.abs()));
            }
        }

        #[test]
        fn gmres_solves_diffusion_like_systems(
            n in 3usize..12,
            seed in proptest::collection::vec(0.0f64..1.0, 400),
        ) {
            // 2D periodic five-point stencil with random positive couplings
            let size = n * n;
            let mut b = CsrBuilder::new(size, 5);
            let mut k = 0;
            for i in 0..n {
                for j in 0..n {
                    let c = i * n + j;
                    b.add(c, c, 1.0);
                    for nb in [((i + 1) % n) * n + j, i * n + (j + 1) % n] {
                        let w = 5.0 * seed[k % 400] + 0.1;
                        k += 1;
                        b.add(c, c, w);
                        b.add(c, nb, -w);
                        b.add(nb, nb, w);
                        b.add(nb, c, -w);
                    }
                }
            }
            let a = b.build();
            let rhs: Vec<f64> = (0..size).map(|i| seed[(i * 3) % 400] - 0.5).collect();
            let ilu = Ilu0::new(&a).unwrap();
            let x = gmres(&a, &rhs, &ilu, 1e-12, 20, 2000).unwrap();
            prop_assert!(residual(&a, &x, &rhs) <= 1e-10);
        }
    }
}
