//! Affine-invariant geometry of the manifold of symmetric positive definite
//! matrices.
//!
//! Every matrix function goes through a symmetric eigendecomposition. The
//! arguments handed to the eigensolver are symmetrized first, so round-off
//! asymmetry never leaks into the spectrum.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance: `max|A - Aᵀ| <= SYMMETRY_TOL * max(1, ‖A‖_F)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest admissible eigenvalue relative to the largest one.
pub const PD_RELATIVE_FLOOR: f64 = 1e-10;

/// Layout tag for Mandel vectors: diagonal entries first, then the √2-scaled
/// off-diagonal entries.
pub const MANDEL_CONVENTION: &str = "diag-then-upper-colmajor-sqrt2";

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "matrix dimension must be at least 1".into(),
        ));
    }
    Ok(m.nrows())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * m.norm().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Eigendecomposition `U Λ Uᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
struct Spectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    fn of_symmetric(m: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        Spectrum {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `U f(Λ) Uᵀ`, symmetrized.
    fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    fn min(&self) -> f64 {
        self.values.min()
    }

    fn max(&self) -> f64 {
        self.values.max()
    }

    fn check_definite(&self) -> Result<()> {
        let (lo, hi) = (self.min(), self.max());
        let finite = self.values.iter().all(|v| v.is_finite());
        if !finite || hi <= 0.0 || lo <= PD_RELATIVE_FLOOR * hi {
            return Err(Error::Definiteness {
                min_eigenvalue: lo,
                max_eigenvalue: hi,
            });
        }
        Ok(())
    }
}

/// A point on the SPD manifold. The eigendecomposition is computed once at
/// construction and reused by every matrix function.
#[derive(Clone)]
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    spectrum: Spectrum,
}

impl SpdMatrix {
    /// Validates symmetry and strict positive definiteness.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        check_square(&mat)?;
        check_symmetric(&mat)?;
        Self::from_computed(mat)
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_computed(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    /// Symmetrizes a freshly computed matrix and checks definiteness only.
    pub(crate) fn from_computed(mat: DMatrix<f64>) -> Result<Self> {
        let mat = symmetrize(&mat);
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Definiteness {
                min_eigenvalue: f64::NAN,
                max_eigenvalue: f64::NAN,
            });
        }
        let spectrum = Spectrum::of_symmetric(&mat);
        spectrum.check_definite()?;
        Ok(SpdMatrix { mat, spectrum })
    }

    fn from_spectrum(spectrum: Spectrum) -> Self {
        let mat = spectrum.map(|v| v);
        SpdMatrix { mat, spectrum }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.spectrum.values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum.min()
    }

    pub fn condition_number(&self) -> f64 {
        self.spectrum.max() / self.spectrum.min()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.mat.transpose().iter().copied().collect()
    }

    pub fn inverse(&self) -> SpdMatrix {
        let mut spectrum = self.spectrum.clone();
        spectrum.values.apply(|v| *v = 1.0 / *v);
        SpdMatrix::from_spectrum(spectrum)
    }

    /// Congruence `Rᵀ A R`, used to rotate ellipsoids.
    pub fn congruence(&self, r: &DMatrix<f64>) -> Result<SpdMatrix> {
        check_same_dim(self.dim(), r.nrows())?;
        SpdMatrix::from_computed(r.transpose() * &self.mat * r)
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SpdMatrix").field(&self.mat).finish()
    }
}

/// A tangent-space element: a symmetric matrix with no definiteness
/// requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        check_square(&mat)?;
        check_symmetric(&mat)?;
        Ok(SymMatrix(symmetrize(&mat)))
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub(crate) fn from_computed(mat: DMatrix<f64>) -> Self {
        SymMatrix(symmetrize(&mat))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius inner product `tr(S T)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix(self.0 * rhs)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix(&self.0 * rhs)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix(-self.0)
    }
}

/// Mandel vectorization of a symmetric matrix, length `m(m+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(DVector<f64>);

impl TangentVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        matrix_dim_for(v.len())?;
        Ok(TangentVector(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `m` of the `m×m` matrix this vector encodes.
    pub fn matrix_dim(&self) -> usize {
        matrix_dim_for(self.0.len()).expect("checked at construction")
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// Vector length `n = m(m+1)/2` for an `m×m` symmetric matrix.
pub fn mandel_len(m: usize) -> usize {
    m * (m + 1) / 2
}

fn matrix_dim_for(n: usize) -> Result<usize> {
    let m = (((8 * n + 1) as f64).sqrt() - 1.0) / 2.0;
    let m = m.round() as usize;
    if n == 0 || mandel_len(m) != n {
        return Err(Error::InvalidDimension(n));
    }
    Ok(m)
}

/// Index pairs `(row, col)` of the off-diagonal slots, in vector order.
///
/// For m = 3 this is (2,3), (1,3), (1,2) in one-based indexing: the upper
/// triangle is walked column by column starting from the last column, each
/// column from the bottom up.
pub fn mandel_off_diagonal_order(m: usize) -> Vec<(usize, usize)> {
    (1..m)
        .rev()
        .flat_map(|j| (0..j).rev().map(move |i| (i, j)))
        .collect()
}

pub fn mandel_vec(s: &SymMatrix) -> TangentVector {
    let m = s.dim();
    let a = s.as_matrix();
    let mut v = DVector::zeros(mandel_len(m));
    for i in 0..m {
        v[i] = a[(i, i)];
    }
    for (k, (i, j)) in mandel_off_diagonal_order(m).into_iter().enumerate() {
        v[m + k] = std::f64::consts::SQRT_2 * a[(i, j)];
    }
    TangentVector(v)
}

pub fn mandel_mat(v: &TangentVector) -> SymMatrix {
    let m = v.matrix_dim();
    let x = v.as_vector();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = x[i];
    }
    for (k, (i, j)) in mandel_off_diagonal_order(m).into_iter().enumerate() {
        let off = unscale_off_diagonal(x[m + k]);
        a[(i, j)] = off;
        a[(j, i)] = off;
    }
    SymMatrix(a)
}

/// Inverse of `b ↦ fl(√2·b)`: among the doubles next to `x/√2`, returns one
/// that scales back to exactly `x` when such a double exists.
fn unscale_off_diagonal(x: f64) -> f64 {
    let guess = x / std::f64::consts::SQRT_2;
    if !guess.is_finite() || std::f64::consts::SQRT_2 * guess == x {
        return guess;
    }
    let (mut lo, mut hi) = (guess, guess);
    for _ in 0..2 {
        lo = lo.next_down();
        hi = hi.next_up();
        for cand in [lo, hi] {
            if std::f64::consts::SQRT_2 * cand == x {
                return cand;
            }
        }
    }
    guess
}

/// Principal square root.
pub fn spd_sqrt(a: &SpdMatrix) -> SpdMatrix {
    let mut spectrum = a.spectrum.clone();
    spectrum.values.apply(|v| *v = v.sqrt());
    SpdMatrix::from_spectrum(spectrum)
}

/// Inverse of the principal square root.
pub fn spd_inv_sqrt(a: &SpdMatrix) -> SpdMatrix {
    let mut spectrum = a.spectrum.clone();
    spectrum.values.apply(|v| *v = 1.0 / v.sqrt());
    SpdMatrix::from_spectrum(spectrum)
}

/// Principal matrix logarithm.
pub fn logm_spd(a: &SpdMatrix) -> SymMatrix {
    SymMatrix(a.spectrum.map(f64::ln))
}

pub fn expm_sym(s: &SymMatrix) -> Result<SpdMatrix> {
    let spectrum = Spectrum::of_symmetric(s.as_matrix());
    let mut exp = spectrum;
    exp.values.apply(|v| *v = v.exp());
    exp.check_definite()?;
    Ok(SpdMatrix::from_spectrum(exp))
}

/// `Γ^{-1/2} M Γ^{-1/2}`, symmetrized.
fn whiten(inv_sqrt: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(inv_sqrt * m * inv_sqrt))
}

/// Riemannian logarithm `Log_Γ(Q) = Γ^{1/2} logm(Γ^{-1/2} Q Γ^{-1/2}) Γ^{1/2}`.
pub fn log_map(base: &SpdMatrix, q: &SpdMatrix) -> Result<SymMatrix> {
    check_same_dim(base.dim(), q.dim())?;
    if base == q {
        return Ok(SymMatrix::zeros(base.dim()));
    }
    let sqrt = spd_sqrt(base);
    let inv_sqrt = spd_inv_sqrt(base);
    let inner = Spectrum::of_symmetric(&whiten(&inv_sqrt.mat, &q.mat));
    inner.check_definite()?;
    let log_inner = inner.map(f64::ln);
    Ok(SymMatrix::from_computed(&sqrt.mat * log_inner * &sqrt.mat))
}

/// Riemannian exponential `Exp_Γ(Δ) = Γ^{1/2} expm(Γ^{-1/2} Δ Γ^{-1/2}) Γ^{1/2}`.
pub fn exp_map(base: &SpdMatrix, delta: &SymMatrix) -> Result<SpdMatrix> {
    check_same_dim(base.dim(), delta.dim())?;
    if delta.is_zero() {
        return Ok(base.clone());
    }
    let sqrt = spd_sqrt(base);
    let inv_sqrt = spd_inv_sqrt(base);
    let inner = Spectrum::of_symmetric(&whiten(&inv_sqrt.mat, delta.as_matrix()));
    let exp_inner = inner.map(f64::exp);
    SpdMatrix::from_computed(&sqrt.mat * exp_inner * &sqrt.mat)
}

/// Transport matrix `C = (Q Γ⁻¹)^{1/2}`, evaluated as
/// `Γ^{1/2} (Γ^{-1/2} Q Γ^{-1/2})^{1/2} Γ^{-1/2}`.
fn transport_factor(from: &SpdMatrix, to: &SpdMatrix) -> Result<DMatrix<f64>> {
    let sqrt = spd_sqrt(from);
    let inv_sqrt = spd_inv_sqrt(from);
    let inner = Spectrum::of_symmetric(&whiten(&inv_sqrt.mat, &to.mat));
    inner.check_definite()?;
    let inner_sqrt = inner.map(f64::sqrt);
    Ok(&sqrt.mat * inner_sqrt * &inv_sqrt.mat)
}

/// Parallel transport of `v` from `𝒯_from` to `𝒯_to` along the connecting
/// geodesic: `C V Cᵀ`.
pub fn parallel_transport(from: &SpdMatrix, to: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    check_same_dim(from.dim(), to.dim())?;
    check_same_dim(from.dim(), v.dim())?;
    if from == to {
        return Ok(v.clone());
    }
    let c = transport_factor(from, to)?;
    Ok(SymMatrix::from_computed(&c * v.as_matrix() * c.transpose()))
}

/// Point at fraction `t` along the geodesic from `a` to `b`.
pub fn geodesic(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_same_dim(a.dim(), b.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "geodesic parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    exp_map(a, &(log_map(a, b)? * t))
}

/// Affine-invariant inner product `tr(Γ⁻¹ V Γ⁻¹ W)` on `𝒯_Γ`.
pub fn affine_inner(base: &SpdMatrix, v: &SymMatrix, w: &SymMatrix) -> Result<f64> {
    check_same_dim(base.dim(), v.dim())?;
    check_same_dim(base.dim(), w.dim())?;
    let inv = base.inverse();
    Ok((&inv.mat * v.as_matrix() * &inv.mat * w.as_matrix()).trace())
}
