//! Dense symmetric-matrix routines: Cholesky factorization and the
//! dominant eigenvalue by power iteration.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{ApmError, Result};

/// Relative asymmetry accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry (relative to the largest entry).
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(ApmError::DimensionMismatch { expected: r, found: c });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(ApmError::invalid_data("matrix has non-finite entries"));
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut asym = 0.0_f64;
        for i in 0..r {
            for j in (i + 1)..r {
                asym = asym.max((a[[i, j]] - a[[j, i]]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(ApmError::NotSymmetric { asymmetry: asym });
        }
        Ok(SymMatrix(a))
    }

    /// Builds `(A + Aᵀ)/2`. Use for matrices that are symmetric up to rounding.
    pub fn symmetrize(a: Array2<f64>) -> Self {
        let sym = (&a + &a.t()) * 0.5;
        SymMatrix(sym)
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(Array2::eye(d))
    }

    pub fn scaled_identity(d: usize, s: f64) -> Self {
        SymMatrix(Array2::eye(d) * s)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.0.dot(&x))
    }

    pub fn dominant_eigenvalue(&self, tol: f64, max_iter: usize) -> Result<f64> {
        dominant_eigenvalue(self, tol, max_iter)
    }
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle is read.
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        Self::factor_with_floor(a, 0.0)
    }

    /// Like [`Cholesky::factor`] but also rejects pivots `L_jj²` at or below
    /// `rel_floor · max_i A_ii`, which catches numerically singular matrices.
    pub fn factor_with_floor(a: ArrayView2<f64>, rel_floor: f64) -> Result<Self> {
        let (n, m) = a.dim();
        if n != m {
            return Err(ApmError::DimensionMismatch { expected: n, found: m });
        }
        let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(a[[i, i]]));
        let floor = rel_floor * max_diag;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > floor) || !d.is_finite() {
                return Err(ApmError::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[[j, j]] = ljj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        y
    }

    /// `A⁻¹`, symmetrized.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim();
        let mut inv = Array2::<f64>::zeros((n, n));
        let mut e = Array1::<f64>::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let col = self.solve(e.view());
            inv.column_mut(j).assign(&col);
        }
        SymMatrix::symmetrize(inv)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diag().iter().map(|v| v.ln()).sum::<f64>()
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn cholesky_solve(a: &SymMatrix, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    if b.len() != a.dim() {
        return Err(ApmError::DimensionMismatch { expected: a.dim(), found: b.len() });
    }
    Ok(Cholesky::factor(a.view())?.solve(b))
}

/// Largest-magnitude eigenvalue of a symmetric matrix by power iteration.
///
/// Starts from the normalized all-ones vector. Iteration stops once the
/// eigen-residual `‖Mv − ρv‖` falls below `tol·|ρ|`, where `ρ` is the Rayleigh
/// quotient, or once `ρ` stops moving (relative change below `1e-3·tol`), which
/// is what happens when the top eigenvalue is repeated or nearly so. If the
/// start vector is annihilated (it lies in the null space), the unit basis
/// vectors are tried in turn.
pub fn dominant_eigenvalue(m: &SymMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(ApmError::invalid_arg("tol must be positive"));
    }
    let d = m.dim();
    if d == 0 {
        return Err(ApmError::invalid_arg("empty matrix"));
    }
    let a = m.as_array();
    let ones = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let starts = std::iter::once(ones).chain((0..d).map(|i| {
        let mut e = Array1::zeros(d);
        e[i] = 1.0;
        e
    }));

    for start in starts {
        let mut v = start;
        let mut w = a.dot(&v);
        if w.dot(&w).sqrt() == 0.0 {
            continue;
        }
        let mut rho = v.dot(&w);
        for _ in 0..max_iter {
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                // Converged onto a zero eigenvector.
                return Ok(0.0);
            }
            v = &w / norm;
            w = a.dot(&v);
            let next = v.dot(&w);
            let r = &w - &(&v * next);
            let resid = r.dot(&r).sqrt();
            let scale = next.abs().max(f64::MIN_POSITIVE);
            let stalled = (next - rho).abs() <= 1e-3 * tol * scale;
            rho = next;
            if resid <= tol * scale || stalled {
                return Ok(rho);
            }
        }
        return Err(ApmError::EigenNoConvergence { iterations: max_iter, estimate: rho });
    }
    // Every start vector was annihilated, so M is the zero matrix.
    Ok(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eig_diag() {
        let m = SymMatrix::from_diag(&[3.0, 1.0]);
        let l = dominant_eigenvalue(&m, 1e-10, 10_000).unwrap();
        assert!((l - 3.0).abs() <= 1e-10 * 3.0);
    }

    #[test]
    fn eig_identity() {
        let l = dominant_eigenvalue(&SymMatrix::identity(5), 1e-10, 100).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_two_by_two() {
        let m = SymMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let l = dominant_eigenvalue(&m, 1e-10, 10_000).unwrap();
        assert!((l - 3.0).abs() <= 3e-10);
    }

    #[test]
    fn eig_start_vector_in_null_space() {
        // All-ones is an eigenvector for eigenvalue 0 here.
        let m = SymMatrix::new(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let l = dominant_eigenvalue(&m, 1e-10, 10_000).unwrap();
        assert!((l - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eig_negative_dominant() {
        let m = SymMatrix::from_diag(&[-5.0, 1.0, 2.0]);
        let l = dominant_eigenvalue(&m, 1e-10, 10_000).unwrap();
        assert!((l + 5.0).abs() < 1e-8);
    }

    #[test]
    fn eig_non_convergence_reports_estimate() {
        let m = SymMatrix::from_diag(&[1.0, 0.999_999]);
        match dominant_eigenvalue(&m, 1e-300, 3) {
            Err(ApmError::EigenNoConvergence { iterations, estimate }) => {
                assert_eq!(iterations, 3);
                assert!(estimate > 0.99);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn chol_solve_examples() {
        let b = array![0.3, -1.0, 2.0];
        let x = cholesky_solve(&SymMatrix::identity(3), b.view()).unwrap();
        assert_eq!(x, b);

        let x = cholesky_solve(&SymMatrix::from_diag(&[2.0, 4.0]), array![2.0, 4.0].view()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);

        let a = SymMatrix::new(array![[4.0, 1.0], [1.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, array![1.0, 2.0].view()).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn chol_rejects_indefinite() {
        let a = SymMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let err = cholesky_solve(&a, array![1.0, 1.0].view()).unwrap_err();
        assert!(matches!(err, ApmError::NotPositiveDefinite { pivot: 1, .. }));
        assert!(err.to_string().contains("not positive definite"));
    }

    #[test]
    fn chol_inverse_and_logdet() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let c = Cholesky::factor(a.view()).unwrap();
        let inv = c.inverse();
        let prod = a.dot(inv.as_array());
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - e).abs() < 1e-14);
            }
        }
        assert!((c.log_det() - 11.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_check() {
        assert!(SymMatrix::new(array![[1.0, 2.0], [2.0 + 1e-9, 1.0]]).is_err());
        assert!(SymMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).is_ok());
        assert!(SymMatrix::new(array![[1.0, 2.0, 3.0], [2.0, 1.0, 0.0]]).is_err());
    }
}
