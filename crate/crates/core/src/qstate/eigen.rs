// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Cyclic Jacobi eigensolver for the small Hermitian matrices used here.
//!
//! A Hermitian `A = R + iJ` is mapped to the real symmetric block matrix
//! `[[R, −J], [J, R]]`, whose spectrum is that of `A` with every eigenvalue
//! doubled. An eigenvector `(a, b)` of the block matrix is the complex
//! eigenvector `a + ib` of `A`.

use crate::complex::Complex;
use crate::qstate::Operator;
use crate::scalar::Real;

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
pub struct SymmetricEigen<T> {
    /// Eigenvalues, ascending.
    pub values: Vec<T>,
    /// Column-major eigenvectors matching `values`.
    pub vectors: Vec<T>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Cyclic Jacobi on a row-major `n × n` symmetric matrix. Off-diagonal mass is
/// driven below `tol` times the Frobenius norm or until `max_sweeps`.
pub fn symmetric_eigen<T: Real>(
    matrix: &[T],
    n: usize,
    tol: T,
    max_sweeps: usize,
) -> SymmetricEigen<T> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); n * n];
    for k in 0..n {
        v[k * n + k] = T::one();
    }
    let frob = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let threshold = tol * frob.max(T::min_positive_value());

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        let off = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<T>()
            .sqrt();
        if off <= threshold {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::two() * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[col * n + k] = v[k * n + i];
        }
    }
    SymmetricEigen {
        values,
        vectors,
        sweeps,
        converged,
    }
}

fn real_block<T: Real>(op: &Operator<T>) -> Vec<T> {
    let n = op.dim();
    let m = 2 * n;
    let mut out = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = op[(i, j)];
            out[i * m + j] = z.re;
            out[(i + n) * m + (j + n)] = z.re;
            out[i * m + (j + n)] = -z.im;
            out[(i + n) * m + j] = z.im;
        }
    }
    out
}

/// Eigenvalues of a Hermitian operator, ascending. The operator is assumed
/// Hermitian; only its Hermitian part is seen by the solver.
pub fn hermitian_eigenvalues<T: Real>(op: &Operator<T>) -> Vec<T> {
    let n = op.dim();
    let eig = symmetric_eigen(
        &real_block(&op.hermitian_part()),
        2 * n,
        T::lit(JACOBI_TOL),
        JACOBI_MAX_SWEEPS,
    );
    eig.values.iter().step_by(2).copied().collect()
}

/// Trace norm `Σ |λ_k|` of a Hermitian operator. Both copies of every
/// doubled block eigenvalue are used and magnitudes are summed in sorted
/// order, so `trace_norm(A) == trace_norm(−A)` bit for bit.
pub fn trace_norm<T: Real>(op: &Operator<T>) -> T {
    let n = op.dim();
    let eig = symmetric_eigen(
        &real_block(&op.hermitian_part()),
        2 * n,
        T::lit(JACOBI_TOL),
        JACOBI_MAX_SWEEPS,
    );
    let mut mags: Vec<T> = eig.values.into_iter().map(T::abs).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    mags.into_iter().sum::<T>() * T::half()
}

/// Unit eigenvector for the largest eigenvalue of a Hermitian operator,
/// together with that eigenvalue.
pub fn principal_eigenvector<T: Real>(op: &Operator<T>) -> (T, Vec<Complex<T>>) {
    let n = op.dim();
    let m = 2 * n;
    let eig = symmetric_eigen(
        &real_block(&op.hermitian_part()),
        m,
        T::lit(JACOBI_TOL),
        JACOBI_MAX_SWEEPS,
    );
    let col = &eig.vectors[(m - 1) * m..m * m];
    let mut v: Vec<Complex<T>> = (0..n).map(|k| Complex::new(col[k], col[k + n])).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    for z in &mut v {
        *z = *z / norm;
    }
    (eig.values[m - 1], v)
}

/// Spectral norm `sqrt(λ_max(A†A))` of an arbitrary square operator.
pub fn operator_norm<T: Real>(op: &Operator<T>) -> T {
    let gram = op.adjoint().matmul(op);
    hermitian_eigenvalues(&gram)
        .last()
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero())
        .sqrt()
}
