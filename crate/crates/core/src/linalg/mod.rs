//! Dense complex linear algebra over small finite-dimensional Hilbert spaces.
//!
//! Everything here is row-major and dense. Dimensions in this crate stay
//! below a few hundred, so there is no sparse path and no BLAS dependency.
//!
//! Tensor products follow one flattening convention throughout: in
//! `a ⊗ b` the index of `a` (the system) varies slower than the index of
//! `b` (the probe), i.e. `(a ⊗ b)[i * dim(b) + j] = a[i] * b[j]`.

mod eigen;

pub use eigen::{herm_eig, herm_func, spectral_norm, Eigenspace, HermitianEigen};

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude type used by every public value.
pub type ComplexScalar = Complex64;

pub const ZERO: ComplexScalar = Complex64::new(0.0, 0.0);
pub const ONE: ComplexScalar = Complex64::new(1.0, 0.0);
pub const I: ComplexScalar = Complex64::new(0.0, 1.0);

/// Tolerance for the structural predicates (`is_hermitian`, `is_projector`, ...).
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Slack on the unit bound of `is_contraction`.
pub const CONTRACTION_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> ComplexScalar {
    Complex64::new(re, im)
}

fn all_finite(values: &[ComplexScalar]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A vector in a `dim`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Ket {
    amps: Vec<ComplexScalar>,
}

impl fmt::Debug for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl Ket {
    pub fn new(amps: Vec<ComplexScalar>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("ket", "dimension must be positive"));
        }
        if !all_finite(&amps) {
            return Err(Error::NonFinite("ket"));
        }
        Ok(Ket { amps })
    }

    /// Builds a ket and rescales it to unit norm.
    pub fn normalized(amps: Vec<ComplexScalar>) -> Result<Self> {
        let ket = Ket::new(amps)?;
        let norm = ket.norm();
        if norm < 1e-300 {
            return Err(Error::invalid("ket", "cannot normalize the zero vector"));
        }
        Ok(ket.scale(ONE / norm))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Ket::new(amps.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ket { amps }
    }

    pub fn zero() -> Self {
        Ket::basis(2, 0)
    }

    pub fn one() -> Self {
        Ket::basis(2, 1)
    }

    /// `(|0⟩ + |1⟩)/√2`
    pub fn plus() -> Self {
        Ket {
            amps: vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        }
    }

    /// `(|0⟩ - |1⟩)/√2`
    pub fn minus() -> Self {
        Ket {
            amps: vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
        }
    }

    /// `(|0⟩ + i|1⟩)/√2`
    pub fn plus_i() -> Self {
        Ket {
            amps: vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)],
        }
    }

    /// `(|0⟩ - i|1⟩)/√2`
    pub fn minus_i() -> Self {
        Ket {
            amps: vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)],
        }
    }

    /// `cos θ |0⟩ + sin θ |1⟩`
    pub fn qubit_angle(theta: f64) -> Self {
        Ket {
            amps: vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[ComplexScalar] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<ComplexScalar> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < STRUCTURE_TOL
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> ComplexScalar {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn checked_inner(&self, other: &Ket) -> Result<ComplexScalar> {
        ensure_dim(self.dim(), other.dim())?;
        Ok(self.inner(other))
    }

    pub fn scale(&self, factor: ComplexScalar) -> Ket {
        Ket {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    /// `|self⟩⟨other|`
    pub fn outer(&self, other: &Ket) -> Operator {
        let (rows, cols) = (self.dim(), other.dim());
        assert_eq!(rows, cols, "outer product of kets with different dims");
        let mut data = Vec::with_capacity(rows * cols);
        for a in &self.amps {
            for b in &other.amps {
                data.push(a * b.conj());
            }
        }
        Operator { dim: rows, data }
    }

    /// `|self⟩⟨self|`
    pub fn projector(&self) -> Operator {
        self.outer(self)
    }

    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// A `dim × dim` complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<ComplexScalar>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for row in self.data.chunks(self.dim) {
            list.entry(&row);
        }
        list.finish()
    }
}

impl Operator {
    /// Wraps row-major entries; `data.len()` must equal `dim²`.
    pub fn new(dim: usize, data: Vec<ComplexScalar>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("operator", "dimension must be positive"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Operator { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<ComplexScalar>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("operator", "rows must form a square grid"));
        }
        Operator::new(dim, rows.into_iter().flatten().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Operator::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ComplexScalar) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for col in 0..dim {
                data.push(f(r, col));
            }
        }
        Operator { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Operator::from_fn(dim, |r, col| if r == col { ONE } else { ZERO })
    }

    pub fn diag(values: &[ComplexScalar]) -> Self {
        Operator::from_fn(
            values.len(),
            |r, col| if r == col { values[r] } else { ZERO },
        )
    }

    pub fn diag_real(values: &[f64]) -> Self {
        Operator::from_fn(values.len(), |r, col| {
            if r == col {
                c(values[r], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Operator whose columns are the given kets.
    pub fn from_columns(columns: &[Ket]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return Err(Error::invalid("operator", "no columns"));
        }
        for col in columns {
            ensure_dim(dim, col.dim())?;
        }
        Ok(Operator::from_fn(dim, |r, k| columns[k].amps[r]))
    }

    pub fn pauli_x() -> Self {
        Operator::from_fn(2, |r, col| if r != col { ONE } else { ZERO })
    }

    pub fn pauli_y() -> Self {
        Operator {
            dim: 2,
            data: vec![ZERO, -I, I, ZERO],
        }
    }

    pub fn pauli_z() -> Self {
        Operator::diag_real(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[ComplexScalar] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexScalar {
        self.data[row * self.dim + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ComplexScalar]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, col: usize) -> Ket {
        Ket {
            amps: (0..self.dim).map(|r| self.get(r, col)).collect(),
        }
    }

    pub fn columns(&self) -> Vec<Ket> {
        (0..self.dim).map(|k| self.column(k)).collect()
    }

    pub fn dagger(&self) -> Operator {
        Operator::from_fn(self.dim, |r, col| self.get(col, r).conj())
    }

    pub fn scale(&self, factor: ComplexScalar) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Operator {
        self.scale(c(factor, 0.0))
    }

    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            let row = &self.data[r * n..(r + 1) * n];
            let out_row = &mut out[r * n..(r + 1) * n];
            for (k, a) in row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Operator { dim: n, data: out }
    }

    pub fn checked_matmul(&self, other: &Operator) -> Result<Operator> {
        ensure_dim(self.dim, other.dim)?;
        Ok(self.matmul(other))
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.dim, ket.dim(), "apply dimension mismatch");
        Ket {
            amps: self
                .rows()
                .map(|row| row.iter().zip(&ket.amps).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }

    /// `⟨bra|self|ket⟩`
    pub fn sandwich(&self, bra: &Ket, ket: &Ket) -> ComplexScalar {
        bra.inner(&self.apply(ket))
    }

    pub fn trace(&self) -> ComplexScalar {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius distance `‖self − other‖`.
    pub fn distance(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn tolerance(&self) -> f64 {
        STRUCTURE_TOL * self.frobenius_norm().max(1.0)
    }

    /// `‖M − M†‖` in Frobenius norm.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for r in 0..n {
            for col in 0..n {
                acc += (self.get(r, col) - self.get(col, r).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() < self.tolerance()
    }

    pub fn is_unitary(&self) -> bool {
        self.dagger()
            .matmul(self)
            .distance(&Operator::identity(self.dim))
            < STRUCTURE_TOL * (self.dim as f64).sqrt().max(1.0)
    }

    pub fn is_projector(&self) -> bool {
        self.is_hermitian() && self.matmul(self).distance(self) < self.tolerance()
    }

    /// Smallest eigenvalue, `None` when the operator is not Hermitian.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        if !self.is_hermitian() {
            return None;
        }
        herm_eig(self).ok().and_then(|e| e.values.last().copied())
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue()
            .is_some_and(|min| min >= -self.tolerance())
    }

    pub fn is_contraction(&self) -> bool {
        spectral_norm(self) <= 1.0 + CONTRACTION_TOL
    }

    /// Hermitian, positive semidefinite, unit trace.
    pub fn is_density(&self) -> bool {
        self.is_psd() && (self.trace() - ONE).norm() < self.tolerance()
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<&Ket> for &Operator {
    type Output = Ket;
    fn mul(self, rhs: &Ket) -> Ket {
        self.apply(rhs)
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Kronecker product under the system-slow / probe-fast convention.
pub trait Kronecker: Sized {
    fn kron(&self, other: &Self) -> Self;
}

impl Kronecker for Ket {
    fn kron(&self, other: &Ket) -> Ket {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ket { amps }
    }
}

impl Kronecker for Operator {
    fn kron(&self, other: &Operator) -> Operator {
        let (m, n) = (self.dim, other.dim);
        Operator::from_fn(m * n, |r, col| {
            self.get(r / n, col / n) * other.get(r % n, col % n)
        })
    }
}

pub fn tensor<T: Kronecker>(a: &T, b: &T) -> T {
    a.kron(b)
}

/// `tr(a · b)` without forming the product.
pub fn trace_of_product(a: &Operator, b: &Operator) -> ComplexScalar {
    assert_eq!(a.dim, b.dim);
    let n = a.dim;
    let mut acc = ZERO;
    for r in 0..n {
        for k in 0..n {
            acc += a.data[r * n + k] * b.data[k * n + r];
        }
    }
    acc
}

/// Unitary DFT with entry `(p, x) = e^{−2πi·p·x/n}/√n`.
///
/// Row (and column) 0 is the uniform vector, i.e. the zero-momentum state.
pub fn dft_matrix(n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::invalid("dft size", "n must be at least 1"));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(Operator::from_fn(n, |p, x| {
        // reduce p·x mod n before scaling keeps the phase argument small
        let k = (p * x) % n;
        Complex64::from_polar(norm, -2.0 * PI * k as f64 / n as f64)
    }))
}

/// The normalized zero-momentum ket `|p₀⟩ = Σₓ |x⟩/√n`.
pub fn zero_momentum(n: usize) -> Ket {
    let amp = c(1.0 / (n as f64).sqrt(), 0.0);
    Ket { amps: vec![amp; n] }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
