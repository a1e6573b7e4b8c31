//! Dense complex linear algebra.
//!
//! Everything in the crate (states, measurement operators, unitaries) is a
//! [`ComplexMatrix`]: row-major, dense, `f64` complex entries. Multi-register
//! operators carry their tensor structure separately through a
//! [`RegisterShape`], and the register-level operations (partial trace,
//! register permutation, partial contraction) index through it.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("partial trace needs at least one register to keep")]
    EmptyKeepSet,
    #[error("{0:?} is not a permutation of the register indices")]
    NotAPermutation(Vec<usize>),
}

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Relative Hermiticity residual accepted by the eigensolver.
    pub herm: f64,
    /// Relative reconstruction residual for eigendecompositions.
    pub eig: f64,
    /// Absolute slack on eigenvalue bounds for PSD / operator-interval checks.
    pub psd: f64,
    /// Relative off-diagonal Frobenius threshold that ends the Jacobi sweeps.
    pub jacobi_offdiag: f64,
    pub jacobi_max_sweeps: usize,
}

impl NumericPolicy {
    pub const STANDARD: NumericPolicy = NumericPolicy {
        herm: 1e-9,
        eig: 1e-9,
        psd: 1e-9,
        jacobi_offdiag: 1e-12,
        jacobi_max_sweeps: 100,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::STANDARD
    }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Column vector from amplitudes.
    pub fn column(entries: &[C64]) -> Self {
        ComplexMatrix {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    /// `|v><v|` for a column vector (or any matrix, as `v v*`).
    pub fn outer(v: &ComplexMatrix) -> Self {
        v.matmul(&v.adjoint())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`; panics on shape mismatch.
    pub fn axpy(&mut self, s: C64, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul of {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A X A*`.
    pub fn conjugate_by(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.matmul(self).matmul(&a.adjoint())
    }

    /// Frobenius norm of `M - M*`, relative to `‖M‖_F` (absolute when `M = 0`).
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self[(r, c)] - self[(c, r)].conj()).norm_sqr();
            }
        }
        let norm = self.frobenius_norm();
        if norm > 0.0 {
            acc.sqrt() / norm
        } else {
            0.0
        }
    }

    /// `(M + M*) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let n = self.rows;
        ComplexMatrix::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// Frobenius distance of `U U*` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.matmul(&self.adjoint()) - &ComplexMatrix::identity(self.rows)).frobenius_norm()
    }

    /// Embeds one register of an operator into a larger space, leaving the
    /// new basis states with zero entries.
    pub fn pad_register(
        &self,
        shape: &RegisterShape,
        register: usize,
        new_dim: usize,
    ) -> Result<ComplexMatrix, LinalgError> {
        shape.check_square(self)?;
        if register >= shape.len() || new_dim < shape.dims()[register] {
            return Err(LinalgError::ShapeMismatch(format!(
                "cannot pad register {register} of {:?} to dimension {new_dim}",
                shape.dims()
            )));
        }
        let mut new_dims = shape.dims().to_vec();
        new_dims[register] = new_dim;
        let new_shape = RegisterShape::new(new_dims);
        let map: Vec<usize> = (0..shape.total())
            .map(|i| new_shape.flatten(&shape.unflatten(i)))
            .collect();
        let mut out = ComplexMatrix::zeros(new_shape.total(), new_shape.total());
        for (r, &nr) in map.iter().enumerate() {
            for (c, &nc) in map.iter().enumerate() {
                out[(nr, nc)] = self[(r, c)];
            }
        }
        Ok(out)
    }

    /// `Tr_B[(I_A ⊗ op_b) self]` for `self` acting on `A ⊗ B`.
    ///
    /// This is the operator `M` on `A` with `Tr((X ⊗ op_b) self) = Tr(X M)`
    /// for every `X`, computed without forming the product.
    pub fn contract_right(&self, op_b: &ComplexMatrix) -> ComplexMatrix {
        let db = op_b.rows;
        assert!(op_b.is_square() && self.is_square() && self.rows.is_multiple_of(db));
        let da = self.rows / db;
        let mut out = ComplexMatrix::zeros(da, da);
        for i in 0..da {
            for j in 0..da {
                let mut acc = ZERO;
                for k in 0..db {
                    let row = &self.data[(i * db + k) * self.cols + j * db..][..db];
                    // sum_{k'} op_b[k', k]... arranged so that out = Tr_B[(I⊗O)self]
                    for (kp, s) in row.iter().enumerate() {
                        let o = op_b.data[kp * db + k];
                        if o != ZERO {
                            acc += o * s;
                        }
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `Tr_A[(op_a ⊗ I_B) self]` for `self` acting on `A ⊗ B`.
    pub fn contract_left(&self, op_a: &ComplexMatrix) -> ComplexMatrix {
        let da = op_a.rows;
        assert!(op_a.is_square() && self.is_square() && self.rows.is_multiple_of(da));
        let db = self.rows / da;
        let mut out = ComplexMatrix::zeros(db, db);
        for k in 0..da {
            for kp in 0..da {
                let o = op_a.data[kp * da + k];
                if o == ZERO {
                    continue;
                }
                for i in 0..db {
                    let row = &self.data[(k * db + i) * self.cols + kp * db..][..db];
                    let out_row = &mut out.data[i * db..(i + 1) * db];
                    for (dst, s) in out_row.iter_mut().zip(row) {
                        *dst += o * s;
                    }
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(ONE, rhs);
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let s = a[(ar, ac)];
            if s == ZERO {
                continue;
            }
            for br in 0..b.rows {
                let dst = (ar * b.rows + br) * cols + ac * b.cols;
                let src = &b.data[br * b.cols..(br + 1) * b.cols];
                for (o, v) in out.data[dst..dst + b.cols].iter_mut().zip(src) {
                    *o = s * v;
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Hilbert–Schmidt inner product `<A, B> = Tr(A* B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64, LinalgError> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(LinalgError::ShapeMismatch(format!(
            "inner product of {}x{} with {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

/// Local dimensions of an ordered tuple of registers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegisterShape {
    dims: Vec<usize>,
}

impl RegisterShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        let dims = dims.into();
        assert!(dims.iter().all(|&d| d > 0), "register dimensions must be positive");
        RegisterShape { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: the last register varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    pub fn flatten(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &dim)| acc * dim + d)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            digits[i] = flat % self.dims[i];
            flat /= self.dims[i];
        }
        digits
    }

    fn check_square(&self, m: &ComplexMatrix) -> Result<(), LinalgError> {
        if !m.is_square() || m.rows != self.total() {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} operator does not act on registers {:?}",
                m.rows, m.cols, self.dims
            )));
        }
        Ok(())
    }

    /// Flat offsets of every multi-index over the selected registers, in
    /// row-major order of the selection.
    fn offsets(&self, registers: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &r in registers {
            let mut next = Vec::with_capacity(offsets.len() * self.dims[r]);
            for &o in &offsets {
                for d in 0..self.dims[r] {
                    next.push(o + d * strides[r]);
                }
            }
            offsets = next;
        }
        offsets
    }
}

/// Traces out every register not listed in `keep`; the result acts on the
/// kept registers in their original order.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &RegisterShape,
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    shape.check_square(m)?;
    if keep.is_empty() {
        return Err(LinalgError::EmptyKeepSet);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.last().is_some_and(|&k| k >= shape.len()) {
        return Err(LinalgError::ShapeMismatch(format!(
            "keep set {keep:?} out of range for {} registers",
            shape.len()
        )));
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !kept.contains(i)).collect();
    let keep_off = shape.offsets(&kept);
    let trace_off = shape.offsets(&traced);
    let dk = keep_off.len();
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(dk, dk);
    for (i, &ki) in keep_off.iter().enumerate() {
        for (j, &kj) in keep_off.iter().enumerate() {
            out[(i, j)] = trace_off
                .iter()
                .map(|&t| m.data[(ki + t) * n + kj + t])
                .sum();
        }
    }
    Ok(out)
}

/// Conjugates `m` by the register permutation `W`: output register `i` is
/// input register `perm[i]`. Returns the permuted operator together with
/// the permuted shape.
pub fn permute_registers(
    m: &ComplexMatrix,
    shape: &RegisterShape,
    perm: &[usize],
) -> Result<(ComplexMatrix, RegisterShape), LinalgError> {
    shape.check_square(m)?;
    let mut seen = vec![false; shape.len()];
    if perm.len() != shape.len()
        || perm
            .iter()
            .any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true))
    {
        return Err(LinalgError::NotAPermutation(perm.to_vec()));
    }
    let out_shape = RegisterShape::new(perm.iter().map(|&p| shape.dims[p]).collect::<Vec<_>>());
    // Flat input index for each flat output index.
    let src = shape.offsets(perm);
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &si) in src.iter().enumerate() {
        let row = &m.data[si * n..(si + 1) * n];
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (o, &sj) in out_row.iter_mut().zip(&src) {
            *o = row[sj];
        }
    }
    Ok((out, out_shape))
}

/// The inverse of a permutation given in `permute_registers` convention.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        let n = self.vectors.rows;
        ComplexMatrix::from_fn(n, 1, |r, _| self.vectors[(r, k)])
    }

    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.spectral_sum(|l| l)
    }

    /// `Σ_k f(λ_k) v_k v_k*`.
    pub fn spectral_sum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.rows;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let w = f(l);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = self.vectors[(r, k)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * self.vectors[(c, k)].conj();
                }
            }
        }
        out
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    hermitian_eig_with(m, &NumericPolicy::STANDARD)
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eig_with(
    m: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<HermitianEigen, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let residual = m.hermiticity_residual();
    if residual > policy.herm {
        return Err(LinalgError::NotHermitian { residual });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = policy.jacobi_offdiag * scale;

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    acc += a.data[r * n + c].norm_sqr();
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = scale == 0.0 || off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == policy.jacobi_max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.data[p * n + q];
                let abs = apq.norm();
                if abs <= f64::MIN_POSITIVE || abs < 1e-18 * scale {
                    continue;
                }
                jacobi_rotate(&mut a, &mut v, p, q, apq, abs);
            }
        }
        converged = off_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.data[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v.data[r * n + order[c]]);
    Ok(HermitianEigen { values, vectors })
}

/// One two-sided rotation zeroing `a[p][q]`; accumulates into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, apq: C64, abs: f64) {
    let n = a.rows;
    let app = a.data[p * n + p].re;
    let aqq = a.data[q * n + q].re;
    // Phase so that D* A D has a real positive (p, q) entry, then a real rotation.
    let phase = apq / abs;
    let theta = (aqq - app) / (2.0 * abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on the (p, q) plane.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A <- A J (columns p, q).
    for r in 0..n {
        let arp = a.data[r * n + p];
        let arq = a.data[r * n + q];
        a.data[r * n + p] = arp * jpp + arq * jqp;
        a.data[r * n + q] = arp * jpq + arq * jqq;
    }
    // A <- J* A (rows p, q).
    for col in 0..n {
        let apc = a.data[p * n + col];
        let aqc = a.data[q * n + col];
        a.data[p * n + col] = jpp.conj() * apc + jqp.conj() * aqc;
        a.data[q * n + col] = jpq.conj() * apc + jqq.conj() * aqc;
    }
    a.data[p * n + q] = ZERO;
    a.data[q * n + p] = ZERO;
    a.data[p * n + p] = C64::new(a.data[p * n + p].re, 0.0);
    a.data[q * n + q] = C64::new(a.data[q * n + q].re, 0.0);
    for r in 0..n {
        let vrp = v.data[r * n + p];
        let vrq = v.data[r * n + q];
        v.data[r * n + p] = vrp * jpp + vrq * jqp;
        v.data[r * n + q] = vrp * jpq + vrq * jqq;
    }
}

/// Smallest and largest eigenvalue of a Hermitian operator.
pub fn spectral_bounds(m: &ComplexMatrix) -> Result<(f64, f64), LinalgError> {
    let eig = hermitian_eig(m)?;
    let n = eig.values.len();
    Ok((eig.values[n - 1], eig.values[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lcg_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        ComplexMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    fn lcg_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        lcg_matrix(n, seed).hermitian_part()
    }

    #[test]
    fn eig_of_diagonal_is_sorted_identity() {
        let eig = hermitian_eig(&ComplexMatrix::from_real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert!(eig.vectors.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn eig_of_pauli_x() {
        let x = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let eig = hermitian_eig(&x).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.vector(0);
        let v1 = eig.vector(1);
        // Compare up to phase via |<expected, v>| = 1.
        let plus = ComplexMatrix::column(&[c(h, 0.0), c(h, 0.0)]);
        let minus = ComplexMatrix::column(&[c(h, 0.0), c(-h, 0.0)]);
        assert!((hs_inner(&plus, &v0).unwrap().norm() - 1.0).abs() < 1e-14);
        assert!((hs_inner(&minus, &v1).unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        for seed in 0..10 {
            let m = lcg_hermitian(6, seed);
            let eig = hermitian_eig(&m).unwrap();
            assert!((&eig.reconstruct() - &m).frobenius_norm() < 1e-10);
            let vv = eig.vectors.adjoint().matmul(&eig.vectors);
            assert!((&vv - &ComplexMatrix::identity(6)).frobenius_norm() < 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        // Projector of rank 2 conjugated by a non-trivial unitary.
        let m = lcg_hermitian(4, 99);
        let basis = hermitian_eig(&m).unwrap().vectors;
        let p = ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]).conjugate_by(&basis);
        let eig = hermitian_eig(&p).unwrap();
        for (got, want) in eig.values.iter().zip([1.0, 1.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((&eig.reconstruct() - &p).frobenius_norm() < 1e-12);
    }

    #[test]
    fn eig_errors() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&rect), Err(LinalgError::NonSquare { .. })));
        let m = ComplexMatrix::from_vec(2, 2, vec![ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(LinalgError::NotHermitian { .. })));
        let policy = NumericPolicy {
            jacobi_max_sweeps: 0,
            ..NumericPolicy::STANDARD
        };
        assert!(matches!(
            hermitian_eig_with(&lcg_hermitian(5, 3), &policy),
            Err(LinalgError::NoConvergence { sweeps: 0 })
        ));
    }

    #[test]
    fn kron_small_cases() {
        assert_eq!(
            kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)),
            ComplexMatrix::identity(6)
        );
        let k = kron(
            &ComplexMatrix::from_real_diag(&[1.0, 2.0]),
            &ComplexMatrix::from_real_diag(&[3.0, 4.0]),
        );
        assert_eq!(k, ComplexMatrix::from_real_diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_mixed_product() {
        let (a, b, cc, d) = (lcg_matrix(2, 1), lcg_matrix(2, 2), lcg_matrix(2, 3), lcg_matrix(2, 4));
        let lhs = kron(&a, &b).matmul(&kron(&cc, &d));
        let rhs = kron(&a.matmul(&cc), &b.matmul(&d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let ra = lcg_hermitian(2, 5);
        let rb = lcg_hermitian(2, 6);
        let shape = RegisterShape::new([2, 2]);
        let got = partial_trace(&kron(&ra, &rb), &shape, &[0]).unwrap();
        assert!(got.max_abs_diff(&ra.scale(rb.trace())) < 1e-14);
    }

    #[test]
    fn partial_trace_of_maximally_entangled() {
        let n = 3;
        let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
        let v = ComplexMatrix::from_fn(n * n, 1, |r, _| if r % (n + 1) == 0 { amp } else { ZERO });
        let rho = ComplexMatrix::outer(&v);
        let shape = RegisterShape::new([n, n]);
        for keep in [0, 1] {
            let red = partial_trace(&rho, &shape, &[keep]).unwrap();
            assert!(red.max_abs_diff(&ComplexMatrix::identity(n).scale_real(1.0 / n as f64)) < 1e-14);
        }
    }

    #[test]
    fn partial_trace_middle_matches_index_sum() {
        let (d0, d1, d2) = (2, 3, 2);
        let m = lcg_matrix(d0 * d1 * d2, 7);
        let shape = RegisterShape::new([d0, d1, d2]);
        let got = partial_trace(&m, &shape, &[0, 2]).unwrap();
        let mut want = ComplexMatrix::zeros(d0 * d2, d0 * d2);
        for i0 in 0..d0 {
            for i2 in 0..d2 {
                for j0 in 0..d0 {
                    for j2 in 0..d2 {
                        let mut acc = ZERO;
                        for t in 0..d1 {
                            acc += m[((i0 * d1 + t) * d2 + i2, (j0 * d1 + t) * d2 + j2)];
                        }
                        want[(i0 * d2 + i2, j0 * d2 + j2)] = acc;
                    }
                }
            }
        }
        assert!(got.max_abs_diff(&want) < 1e-12);
        assert!((got.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let shape = RegisterShape::new([2, 2]);
        let m = ComplexMatrix::identity(4);
        assert_eq!(partial_trace(&m, &shape, &[]), Err(LinalgError::EmptyKeepSet));
        assert!(matches!(
            partial_trace(&ComplexMatrix::identity(3), &shape, &[0]),
            Err(LinalgError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn permutation_of_product_operators() {
        let p = lcg_matrix(2, 11);
        let q = lcg_matrix(3, 12);
        let shape = RegisterShape::new([2, 3]);
        let (id, _) = permute_registers(&kron(&p, &q), &shape, &[0, 1]).unwrap();
        assert_eq!(id, kron(&p, &q));
        let (swapped, new_shape) = permute_registers(&kron(&p, &q), &shape, &[1, 0]).unwrap();
        assert_eq!(new_shape.dims(), &[3, 2]);
        assert!(swapped.max_abs_diff(&kron(&q, &p)) < 1e-15);
    }

    #[test]
    fn five_register_permutation() {
        // (U, V, X, S, Y) -> (U, X, S, Y, V)
        let dims = [2, 3, 2, 1, 2];
        let factors: Vec<ComplexMatrix> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| lcg_matrix(d, 20 + i as u64))
            .collect();
        let m = kron_all(&factors);
        let perm = [0, 2, 3, 4, 1];
        let (got, _) = permute_registers(&m, &RegisterShape::new(dims), &perm).unwrap();
        let want = kron_all(perm.iter().map(|&i| &factors[i]));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn permutation_errors() {
        let shape = RegisterShape::new([2, 2]);
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            permute_registers(&m, &shape, &[0, 0]),
            Err(LinalgError::NotAPermutation(_))
        ));
        assert!(matches!(
            permute_registers(&m, &shape, &[0]),
            Err(LinalgError::NotAPermutation(_))
        ));
    }

    #[test]
    fn hs_inner_cases() {
        assert_eq!(
            hs_inner(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap(),
            c(2.0, 0.0)
        );
        let x = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert_eq!(hs_inner(&x, &z).unwrap(), ZERO);
        let a = lcg_matrix(3, 30);
        let b = lcg_matrix(3, 31);
        let mut want = ZERO;
        for r in 0..3 {
            for cc in 0..3 {
                want += a[(r, cc)].conj() * b[(r, cc)];
            }
        }
        assert!((hs_inner(&a, &b).unwrap() - want).norm() < 1e-13);
        // Tr(A* B) through the explicit product.
        assert!((a.adjoint().matmul(&b).trace() - want).norm() < 1e-13);
        assert!(hs_inner(&a, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn conj_transpose_adjoint() {
        let m = ComplexMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(m.conj()[(0, 0)], c(0.0, -1.0));
        let a = lcg_matrix(3, 40);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.adjoint(), a.conj().transpose());
        let u = hermitian_eig(&lcg_hermitian(4, 41)).unwrap().vectors;
        assert!(u.matmul(&u.adjoint()).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn contractions_match_partial_trace() {
        let (da, db) = (3, 2);
        let m = lcg_matrix(da * db, 50);
        let oa = lcg_matrix(da, 51);
        let ob = lcg_matrix(db, 52);
        let shape = RegisterShape::new([da, db]);
        let right = partial_trace(&kron(&ComplexMatrix::identity(da), &ob).matmul(&m), &shape, &[0]).unwrap();
        assert!(m.contract_right(&ob).max_abs_diff(&right) < 1e-12);
        let left = partial_trace(&kron(&oa, &ComplexMatrix::identity(db)).matmul(&m), &shape, &[1]).unwrap();
        assert!(m.contract_left(&oa).max_abs_diff(&left) < 1e-12);
    }

    #[test]
    fn pad_register_keeps_block() {
        let m = lcg_matrix(4, 60);
        let shape = RegisterShape::new([2, 2]);
        let padded = m.pad_register(&shape, 0, 3).unwrap();
        assert_eq!(padded.rows(), 6);
        assert!((padded.trace() - m.trace()).norm() < 1e-15);
        assert_eq!(padded[(1, 3)], m[(1, 3)]);
        assert_eq!(padded[(5, 5)], ZERO);
    }
}
