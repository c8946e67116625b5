// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex square matrices and the single-qubit operator set.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major complex square matrix with an optional symbolic label.
///
/// Qubit ordering for tensor products is big-endian: qubit 0 is the leftmost
/// Kronecker factor, i.e. the most significant bit of a basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    data: Vec<Complex<T>>,
    label: Option<String>,
}

impl<T: Real> Operator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
            label: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = Complex::one();
        }
        m.with_label("I")
    }

    /// Builds a matrix from row-major entries; the length must be a perfect
    /// square.
    pub fn from_row_major(data: Vec<Complex<T>>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self {
            dim,
            data,
            label: None,
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), dim, "ragged rows");
                r.iter().map(|&x| Complex::from_real(T::lit(x)))
            })
            .collect();
        Self {
            dim,
            data,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline(always)]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline(always)]
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// Matrix product; panics on a dimension mismatch (use [`Self::try_matmul`]
    /// for checked multiplication).
    pub fn matmul(&self, rhs: &Self) -> Self {
        self.try_matmul(rhs).expect("operator dimensions must agree")
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * k).collect(),
            label: None,
        }
    }

    pub fn scale_real(&self, k: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z.scale(k)).collect(),
            label: None,
        }
    }

    /// `self += k · other`.
    pub fn add_scaled(&mut self, other: &Self, k: T) {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b.scale(k);
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|k| self.data[k * self.dim + k]).sum()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.dim];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        assert_eq!(v.len(), self.dim, "vector length must match operator");
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            *o = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let d = n * m;
        let mut out = Self::zeros(d);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * d + (j * m + l)] = a * rhs.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.abs()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let n = self.dim;
        (0..n).all(|i| (i..n).all(|j| (self.data[i * n + j] - self.data[j * n + i].conj()).abs() <= tol))
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] =
                    (self.data[i * n + j] + self.data[j * n + i].conj()).scale(T::half());
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Matrix exponential by scaling and squaring with a Taylor series.
    pub fn expm(&self) -> Self {
        let norm1 = (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.data[i * self.dim + j].abs()).sum::<T>())
            .fold(T::zero(), T::max);
        let mut squarings = 0;
        let mut scale = T::one();
        while norm1 * scale > T::half() {
            scale = scale * T::half();
            squarings += 1;
        }
        let a = self.scale_real(scale);
        let mut term = Self::identity(self.dim);
        let mut sum = Self::identity(self.dim);
        for k in 1..=20 {
            term = term.matmul(&a).scale_real(T::one() / T::lit(k as f64));
            sum.add_scaled(&term, T::one());
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum.label = None;
        sum
    }

    /// Lifts a single-qubit operator onto qubit `target` of an `n`-qubit
    /// register.
    pub fn on_qubit(&self, target: usize, n_qubits: usize) -> Self {
        assert_eq!(self.dim, 2, "on_qubit expects a single-qubit operator");
        assert!(target < n_qubits, "target qubit out of range");
        let id = Self::identity(2);
        let mut out = if target == 0 { self.clone() } else { id.clone() };
        for q in 1..n_qubits {
            out = out.kron(if q == target { self } else { &id });
        }
        out.label = self.label.as_ref().map(|l| format!("{l}[{target}]"));
        out
    }
}

/// `ab − ba`.
pub fn commutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    Ok(&a.try_matmul(b)? - &b.matmul(a))
}

/// `ab + ba`.
pub fn anticommutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    Ok(&a.try_matmul(b)? + &b.matmul(a))
}

impl<T> Index<(usize, usize)> for Operator<T> {
    type Output = Complex<T>;
    #[inline(always)]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Operator<T> {
    #[inline(always)]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must agree");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
            label: None,
        }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must agree");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
            label: None,
        }
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        self.matmul(rhs)
    }
}

fn from_pairs<T: Real>(entries: [(f64, f64); 4], label: &str) -> Operator<T> {
    Operator {
        dim: 2,
        data: entries
            .iter()
            .map(|&(re, im)| Complex::new(T::lit(re), T::lit(im)))
            .collect(),
        label: Some(label.to_string()),
    }
}

pub fn sigma_x<T: Real>() -> Operator<T> {
    from_pairs([(0., 0.), (1., 0.), (1., 0.), (0., 0.)], "X")
}

pub fn sigma_y<T: Real>() -> Operator<T> {
    from_pairs([(0., 0.), (0., -1.), (0., 1.), (0., 0.)], "Y")
}

pub fn sigma_z<T: Real>() -> Operator<T> {
    from_pairs([(1., 0.), (0., 0.), (0., 0.), (-1., 0.)], "Z")
}

/// Lowering operator `|0⟩⟨1|`: takes the excited state `|1⟩` to the ground
/// state `|0⟩` and annihilates `|0⟩`. Equal to `(X + iY)/2` in this basis.
pub fn sigma_minus<T: Real>() -> Operator<T> {
    from_pairs([(0., 0.), (1., 0.), (0., 0.), (0., 0.)], "sigma-")
}

/// Raising operator `|1⟩⟨0| = (X − iY)/2`.
pub fn sigma_plus<T: Real>() -> Operator<T> {
    from_pairs([(0., 0.), (0., 0.), (1., 0.), (0., 0.)], "sigma+")
}

/// Single-qubit Pauli by letter (`I`, `X`, `Y`, `Z`).
pub fn pauli<T: Real>(letter: char) -> Result<Operator<T>> {
    match letter.to_ascii_uppercase() {
        'I' => Ok(Operator::identity(2)),
        'X' => Ok(sigma_x()),
        'Y' => Ok(sigma_y()),
        'Z' => Ok(sigma_z()),
        other => Err(Error::InvalidInput(format!("unknown Pauli letter {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Op = Operator<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn paulis_square_to_identity() {
        let id = Op::identity(2);
        for p in [sigma_x::<f64>(), sigma_y(), sigma_z()] {
            assert_eq!(p.matmul(&p).max_abs_diff(&id), 0.0, "{:?}", p.label());
        }
    }

    #[test]
    fn ladder_operators_in_terms_of_paulis() {
        let (x, y) = (sigma_x::<f64>(), sigma_y::<f64>());
        let iy = y.scale(Complex::i());
        let lower = (&x + &iy).scale_real(0.5);
        let raise = (&x - &iy).scale_real(0.5);
        assert_eq!(lower.max_abs_diff(&sigma_minus()), 0.0);
        assert_eq!(raise.max_abs_diff(&sigma_plus()), 0.0);
        // sigma- annihilates the ground state and lowers |1> to |0>.
        let v = sigma_minus::<f64>().apply(&[c(1., 0.), c(0., 0.)]);
        assert_eq!(v, vec![c(0., 0.), c(0., 0.)]);
        let v = sigma_minus::<f64>().apply(&[c(0., 0.), c(1., 0.)]);
        assert_eq!(v, vec![c(1., 0.), c(0., 0.)]);
        assert_eq!(sigma_plus::<f64>().adjoint().max_abs_diff(&sigma_minus()), 0.0);
    }

    #[test]
    fn commutator_examples() {
        let (x, y, z) = (sigma_x::<f64>(), sigma_y::<f64>(), sigma_z::<f64>());
        assert_eq!(commutator(&x, &x).unwrap().max_abs(), 0.0);
        let xy = commutator(&x, &y).unwrap();
        assert!(xy.max_abs_diff(&z.scale(c(0., 2.))) < 1e-15);
        assert_eq!(commutator(&Op::identity(2), &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn anticommutator_examples() {
        let (x, y, z) = (sigma_x::<f64>(), sigma_y::<f64>(), sigma_z::<f64>());
        assert_eq!(anticommutator(&x, &y).unwrap().max_abs(), 0.0);
        let zz = anticommutator(&z, &z).unwrap();
        assert_eq!(zz.max_abs_diff(&Op::identity(2).scale_real(2.0)), 0.0);
        let pm = anticommutator(&sigma_plus::<f64>(), &sigma_minus()).unwrap();
        assert_eq!(pm.max_abs_diff(&Op::identity(2)), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Op::identity(2);
        let b = Op::identity(4);
        assert!(matches!(
            commutator(&a, &b),
            Err(Error::DimensionMismatch { expected: 2, found: 4 })
        ));
        assert!(anticommutator(&a, &b).is_err());
    }

    #[test]
    fn lifting_uses_big_endian_ordering() {
        // X on qubit 0 of two flips the most significant bit: |00> -> |10>.
        let x0 = sigma_x::<f64>().on_qubit(0, 2);
        let mut e0 = vec![c(0., 0.); 4];
        e0[0] = c(1., 0.);
        let out = x0.apply(&e0);
        assert_eq!(out[2], c(1., 0.));
        let x1 = sigma_x::<f64>().on_qubit(1, 2);
        assert_eq!(x1.apply(&e0)[1], c(1., 0.));
        assert_eq!(x1.label(), Some("X[1]"));
    }

    #[test]
    fn exponential_of_rotation_generator() {
        // exp(−iθσ_x) = cos θ I − i sin θ σ_x
        let theta = 1.7;
        let u = sigma_x::<f64>().scale(c(0.0, -theta)).expm();
        let expected = Op::from_row_major(vec![
            c(theta.cos(), 0.),
            c(0., -theta.sin()),
            c(0., -theta.sin()),
            c(theta.cos(), 0.),
        ])
        .unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-14);
        assert!(Op::zeros(4).expm().max_abs_diff(&Op::identity(4)) == 0.0);
    }
}
