//! Largest eigenpair of a dense symmetric matrix by Lanczos iteration with
//! full reorthogonalization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest eigenpair of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda_max: f64,
    /// Unit eigenvector, sign chosen so its entries sum to a nonnegative value.
    pub eigenvector: Vec<f64>,
    /// `||M v - lambda v|| / |lambda|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Ritz residuals are checked every this many steps.
const CHECK_EVERY: usize = 5;

/// Runs Lanczos from the all-ones start vector until the relative residual
/// of the top Ritz pair is below `tol`.
pub fn largest_eigenvalue_matrix(m: &DMatrix<f64>, tol: f64) -> Result<SpectralResult> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("eigenvalue tolerance must be positive".into()));
    }
    let max_steps = n.min(400);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps + 1);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    basis.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));

    let mut best = (f64::NAN, f64::INFINITY);
    for step in 0..max_steps {
        let q = &basis[step];
        let mut w = m * q;
        let a = q.dot(&w);
        alpha.push(a);
        // Two passes of Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b_next = w.norm();
        let scale = alpha.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1e-300);
        let breakdown = b_next <= 1e-13 * scale;
        let last = step + 1 == max_steps;
        if breakdown || last || (step + 1) % CHECK_EVERY == 0 {
            let (lambda, y) = top_ritz_pair(&alpha, &beta);
            let vector = assemble(&basis, &y);
            let residual = relative_residual(m, &vector, lambda);
            if residual < best.1 {
                best = (lambda, residual);
            }
            if residual <= tol || breakdown {
                return Ok(finish(lambda, vector, residual, step + 1));
            }
        }
        beta.push(b_next);
        basis.push(w / b_next);
    }
    Err(Error::NoConvergence {
        lambda: best.0,
        residual: best.1,
        iterations: max_steps,
    })
}

fn top_ritz_pair(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (lambda, eig.eigenvectors.column(idx).into_owned())
}

fn assemble(basis: &[DVector<f64>], y: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(basis[0].len());
    for (b, &c) in basis.iter().zip(y.iter()) {
        v.axpy(c, b, 1.0);
    }
    let norm = v.norm();
    v / norm
}

fn relative_residual(m: &DMatrix<f64>, v: &DVector<f64>, lambda: f64) -> f64 {
    let r = m * v - v * lambda;
    r.norm() / lambda.abs().max(f64::MIN_POSITIVE)
}

fn finish(lambda: f64, mut vector: DVector<f64>, residual: f64, iterations: usize) -> SpectralResult {
    if vector.sum() < 0.0 {
        vector.neg_mut();
    }
    SpectralResult {
        lambda_max: lambda,
        eigenvector: vector.iter().copied().collect(),
        residual,
        iterations,
    }
}
