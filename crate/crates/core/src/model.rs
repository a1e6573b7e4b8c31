//! Game and strategy types, their validation, and exact winning
//! probabilities.
//!
//! Index sets are 0-based. Answer pairs `(a, b)` flatten as `a * |B| + b`,
//! question pairs `(x, y)` as `x * |Y| + y`.

use std::fmt;

use thiserror::Error;

use crate::linalg::{
    hermitian_eig, hs_inner, kron, permute_registers, ComplexMatrix, LinalgError, NumericPolicy,
    RegisterShape, C64,
};

/// Trace of a density operator must be within this of one.
pub const TRACE_TOL: f64 = 1e-10;
/// POVM completeness tolerance (Frobenius norm of `Σ E - I`).
pub const POVM_TOL: f64 = 1e-9;
/// Distribution normalization tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated on a probability.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("malformed object: {0}")]
    Malformed(String),
    #[error("probability has imaginary part {0:.3e}")]
    ImaginaryResidual(f64),
    #[error("validation failed:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn mismatch(expected: impl fmt::Display, found: impl fmt::Display) -> ModelError {
    ModelError::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NotHermitian,
    NotPositive,
    AboveIdentity,
    Trace,
    PovmIncomplete,
    Distribution,
    NegativeProbability,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NotHermitian => "not Hermitian",
            ViolationKind::NotPositive => "negative eigenvalue",
            ViolationKind::AboveIdentity => "eigenvalue above 1",
            ViolationKind::Trace => "trace not 1",
            ViolationKind::PovmIncomplete => "POVM does not sum to identity",
            ViolationKind::Distribution => "distribution does not sum to 1",
            ViolationKind::NegativeProbability => "negative probability",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Which object failed, e.g. `Q[0,1]` or `rho`.
    pub location: String,
    /// Magnitude by which the invariant is violated; for eigenvalue
    /// violations this is the offending eigenvalue itself.
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({:.6e})", self.location, self.kind, self.residual)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), ModelError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(ModelError::ValidationFailed(self))
        }
    }

    fn push(&mut self, kind: ViolationKind, location: impl Into<String>, residual: f64) {
        self.violations.push(Violation {
            kind,
            location: location.into(),
            residual,
        });
    }

    /// Eigenvalue checks shared by every operator predicate. Returns the
    /// spectrum when the operator is Hermitian.
    fn spectrum(&mut self, location: &str, m: &ComplexMatrix, policy: &NumericPolicy) -> Option<Vec<f64>> {
        let residual = m.hermiticity_residual();
        if residual > policy.herm {
            self.push(ViolationKind::NotHermitian, location, residual);
            return None;
        }
        match hermitian_eig(m) {
            Ok(eig) => Some(eig.values),
            Err(_) => {
                self.push(ViolationKind::NotHermitian, location, residual);
                None
            }
        }
    }

    fn check_density(&mut self, location: &str, m: &ComplexMatrix, policy: &NumericPolicy) {
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            self.push(ViolationKind::Trace, location, (tr - 1.0).norm());
        }
        if let Some(values) = self.spectrum(location, m, policy) {
            let min = *values.last().unwrap();
            if min < -policy.psd {
                self.push(ViolationKind::NotPositive, location, min);
            }
        }
    }

    /// `0 <= m <= I`.
    fn check_effect(&mut self, location: &str, m: &ComplexMatrix, policy: &NumericPolicy) {
        if let Some(values) = self.spectrum(location, m, policy) {
            let (min, max) = (*values.last().unwrap(), values[0]);
            if min < -policy.psd {
                self.push(ViolationKind::NotPositive, location, min);
            }
            if max > 1.0 + policy.psd {
                self.push(ViolationKind::AboveIdentity, location, max);
            }
        }
    }

    fn check_povm(&mut self, location: &str, elements: &[ComplexMatrix], policy: &NumericPolicy) {
        let Some(first) = elements.first() else {
            self.push(ViolationKind::PovmIncomplete, location, 1.0);
            return;
        };
        let mut total = ComplexMatrix::zeros(first.rows(), first.cols());
        for (k, e) in elements.iter().enumerate() {
            if let Some(values) = self.spectrum(&format!("{location}[{k}]"), e, policy) {
                let min = *values.last().unwrap();
                if min < -policy.psd {
                    self.push(ViolationKind::NotPositive, format!("{location}[{k}]"), min);
                }
            }
            total += e;
        }
        let residual = (&total - &ComplexMatrix::identity(first.rows())).frobenius_norm();
        if residual > POVM_TOL {
            self.push(ViolationKind::PovmIncomplete, location, residual);
        }
    }

    fn check_distribution(&mut self, location: &str, values: &[f64]) {
        for (k, &v) in values.iter().enumerate() {
            if v < 0.0 {
                self.push(ViolationKind::NegativeProbability, format!("{location}[{k}]"), v);
            }
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            self.push(ViolationKind::Distribution, location, (total - 1.0).abs());
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Local dimensions of the referee's question registers in a QC game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcDims {
    /// dim X (sent to Alice)
    pub n: usize,
    /// dim S (kept by the referee)
    pub s: usize,
    /// dim Y (sent to Bob)
    pub m: usize,
}

impl QcDims {
    pub fn total(&self) -> usize {
        self.n * self.s * self.m
    }
}

/// A quantum-classical game: the referee prepares `rho` on `X ⊗ S ⊗ Y`,
/// sends `X` to Alice and `Y` to Bob, and on answers `(a, b)` accepts with
/// the measurement `{Q_{a,b}, I - Q_{a,b}}` on `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct QCGame {
    rho: ComplexMatrix,
    dims: QcDims,
    answers: (usize, usize),
    win_ops: Vec<ComplexMatrix>,
}

impl QCGame {
    pub fn new(
        rho: ComplexMatrix,
        dims: QcDims,
        answers: (usize, usize),
        win_ops: Vec<ComplexMatrix>,
    ) -> Result<Self, ModelError> {
        if dims.n == 0 || dims.s == 0 || dims.m == 0 || answers.0 == 0 || answers.1 == 0 {
            return Err(ModelError::Malformed("dimensions and answer sets must be nonempty".into()));
        }
        if !rho.is_square() || rho.rows() != dims.total() {
            return Err(mismatch(
                format!("rho of size {}", dims.total()),
                format!("{}x{}", rho.rows(), rho.cols()),
            ));
        }
        if win_ops.len() != answers.0 * answers.1 {
            return Err(mismatch(
                format!("{} win operators", answers.0 * answers.1),
                win_ops.len(),
            ));
        }
        if let Some(q) = win_ops.iter().find(|q| !q.is_square() || q.rows() != dims.s) {
            return Err(mismatch(
                format!("win operators of size {}", dims.s),
                format!("{}x{}", q.rows(), q.cols()),
            ));
        }
        Ok(QCGame {
            rho,
            dims,
            answers,
            win_ops,
        })
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dims(&self) -> QcDims {
        self.dims
    }

    pub fn answers(&self) -> (usize, usize) {
        self.answers
    }

    pub fn win_op(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.win_ops[a * self.answers.1 + b]
    }

    pub fn win_ops(&self) -> &[ComplexMatrix] {
        &self.win_ops
    }
}

/// An extended nonlocal game: questions drawn from `pi`, and on answers
/// `(a, b)` the referee measures its register `R` with
/// `{P_{a,b,x,y}, I - P_{a,b,x,y}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedGame {
    pi: Vec<f64>,
    questions: (usize, usize),
    answers: (usize, usize),
    ref_dim: usize,
    ref_ops: Vec<ComplexMatrix>,
}

impl ExtendedGame {
    /// `pi` is indexed by `x * |Y| + y`; `ref_ops` by
    /// `((a * |B| + b) * |X| + x) * |Y| + y`.
    pub fn new(
        pi: Vec<f64>,
        questions: (usize, usize),
        answers: (usize, usize),
        ref_dim: usize,
        ref_ops: Vec<ComplexMatrix>,
    ) -> Result<Self, ModelError> {
        if questions.0 == 0 || questions.1 == 0 || answers.0 == 0 || answers.1 == 0 || ref_dim == 0 {
            return Err(ModelError::Malformed("question/answer sets and R must be nonempty".into()));
        }
        if pi.len() != questions.0 * questions.1 {
            return Err(mismatch(
                format!("{} question probabilities", questions.0 * questions.1),
                pi.len(),
            ));
        }
        let count = answers.0 * answers.1 * questions.0 * questions.1;
        if ref_ops.len() != count {
            return Err(mismatch(format!("{count} referee operators"), ref_ops.len()));
        }
        if let Some(p) = ref_ops.iter().find(|p| !p.is_square() || p.rows() != ref_dim) {
            return Err(mismatch(
                format!("referee operators of size {ref_dim}"),
                format!("{}x{}", p.rows(), p.cols()),
            ));
        }
        Ok(ExtendedGame {
            pi,
            questions,
            answers,
            ref_dim,
            ref_ops,
        })
    }

    pub fn questions(&self) -> (usize, usize) {
        self.questions
    }

    pub fn answers(&self) -> (usize, usize) {
        self.answers
    }

    pub fn ref_dim(&self) -> usize {
        self.ref_dim
    }

    pub fn pi(&self, x: usize, y: usize) -> f64 {
        self.pi[x * self.questions.1 + y]
    }

    pub fn distribution(&self) -> &[f64] {
        &self.pi
    }

    pub fn ref_op(&self, a: usize, b: usize, x: usize, y: usize) -> &ComplexMatrix {
        &self.ref_ops[self.ref_index(a, b, x, y)]
    }

    pub fn ref_ops(&self) -> &[ComplexMatrix] {
        &self.ref_ops
    }

    pub fn ref_index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((a * self.answers.1 + b) * self.questions.0 + x) * self.questions.1 + y
    }

    /// Same game with a different question distribution.
    pub fn with_distribution(&self, pi: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(pi, self.questions, self.answers, self.ref_dim, self.ref_ops.clone())
    }

    /// Same game with a single referee operator replaced.
    pub fn with_ref_op(
        &self,
        (a, b, x, y): (usize, usize, usize, usize),
        op: ComplexMatrix,
    ) -> Result<Self, ModelError> {
        let mut ops = self.ref_ops.clone();
        ops[self.ref_index(a, b, x, y)] = op;
        Self::new(self.pi.clone(), self.questions, self.answers, self.ref_dim, ops)
    }
}

/// Entangled strategy for a QC game: `sigma` on `U ⊗ V`, Alice's POVM on
/// `U ⊗ X`, Bob's on `Y ⊗ V`.
#[derive(Debug, Clone, PartialEq)]
pub struct QCStrategy {
    pub sigma: ComplexMatrix,
    pub ancilla: (usize, usize),
    pub alice: Vec<ComplexMatrix>,
    pub bob: Vec<ComplexMatrix>,
}

impl QCStrategy {
    /// `dim(U ⊗ V)`.
    pub fn total_dim(&self) -> usize {
        self.ancilla.0 * self.ancilla.1
    }
}

/// Entangled strategy for an extended nonlocal game: `sigma` on
/// `U ⊗ R ⊗ V`, and per-question POVMs `alice[x][a]` on `U`, `bob[y][b]`
/// on `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ENLGStrategy {
    pub sigma: ComplexMatrix,
    /// `(dim U, dim R, dim V)`
    pub dims: (usize, usize, usize),
    pub alice: Vec<Vec<ComplexMatrix>>,
    pub bob: Vec<Vec<ComplexMatrix>>,
}

impl ENLGStrategy {
    /// `dim(U ⊗ V)`.
    pub fn total_dim(&self) -> usize {
        self.dims.0 * self.dims.2
    }
}

pub fn validate_qc_game(g: &QCGame) -> ValidationReport {
    let policy = NumericPolicy::STANDARD;
    let mut report = ValidationReport::default();
    report.check_density("rho", &g.rho, &policy);
    let (_, nb) = g.answers;
    for (k, q) in g.win_ops.iter().enumerate() {
        report.check_effect(&format!("Q[{},{}]", k / nb, k % nb), q, &policy);
    }
    report
}

pub fn validate_enlg(h: &ExtendedGame) -> ValidationReport {
    let policy = NumericPolicy::STANDARD;
    let mut report = ValidationReport::default();
    report.check_distribution("pi", &h.pi);
    let (na, nb) = h.answers;
    let (nx, ny) = h.questions;
    for a in 0..na {
        for b in 0..nb {
            for x in 0..nx {
                for y in 0..ny {
                    report.check_effect(&format!("P[{a},{b},{x},{y}]"), h.ref_op(a, b, x, y), &policy);
                }
            }
        }
    }
    report
}

pub fn validate_qc_strategy(s: &QCStrategy) -> ValidationReport {
    let policy = NumericPolicy::STANDARD;
    let mut report = ValidationReport::default();
    report.check_density("sigma", &s.sigma, &policy);
    report.check_povm("A", &s.alice, &policy);
    report.check_povm("B", &s.bob, &policy);
    report
}

pub fn validate_enlg_strategy(s: &ENLGStrategy) -> ValidationReport {
    let policy = NumericPolicy::STANDARD;
    let mut report = ValidationReport::default();
    report.check_density("sigma", &s.sigma, &policy);
    for (x, povm) in s.alice.iter().enumerate() {
        report.check_povm(&format!("A^{x}"), povm, &policy);
    }
    for (y, povm) in s.bob.iter().enumerate() {
        report.check_povm(&format!("B^{y}"), povm, &policy);
    }
    report
}

/// A winning probability computed from a trace formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinProbability {
    /// Unclamped real part.
    pub raw: f64,
}

impl WinProbability {
    fn from_complex(z: C64) -> Result<Self, ModelError> {
        if z.im.abs() >= IMAG_TOL {
            return Err(ModelError::ImaginaryResidual(z.im));
        }
        Ok(WinProbability { raw: z.re })
    }

    /// Clamped to `[0, 1]` for reporting.
    pub fn value(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }

    /// Unclamped `1 - p`.
    pub fn loss(&self) -> f64 {
        1.0 - self.raw
    }
}

fn check_square(what: &str, m: &ComplexMatrix, dim: usize) -> Result<(), ModelError> {
    if !m.is_square() || m.rows() != dim {
        return Err(mismatch(
            format!("{what} of size {dim}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

/// Checks that a QC strategy fits the game's registers and answer sets.
pub fn check_qc_compatible(g: &QCGame, s: &QCStrategy) -> Result<(), ModelError> {
    let (du, dv) = s.ancilla;
    let QcDims { n, m, .. } = g.dims;
    check_square("sigma", &s.sigma, du * dv)?;
    if s.alice.len() != g.answers.0 || s.bob.len() != g.answers.1 {
        return Err(mismatch(
            format!("answer sets {:?}", g.answers),
            format!("({}, {}) POVM elements", s.alice.len(), s.bob.len()),
        ));
    }
    for a in &s.alice {
        check_square("Alice's POVM element on U⊗X", a, du * n)?;
    }
    for b in &s.bob {
        check_square("Bob's POVM element on Y⊗V", b, m * dv)?;
    }
    Ok(())
}

/// Checks that an extended-game strategy fits the game.
pub fn check_enlg_compatible(h: &ExtendedGame, s: &ENLGStrategy) -> Result<(), ModelError> {
    let (du, dr, dv) = s.dims;
    if dr != h.ref_dim {
        return Err(mismatch(format!("dim R = {}", h.ref_dim), format!("dim R = {dr}")));
    }
    check_square("sigma", &s.sigma, du * dr * dv)?;
    if s.alice.len() != h.questions.0 || s.bob.len() != h.questions.1 {
        return Err(mismatch(
            format!("questions {:?}", h.questions),
            format!("({}, {}) measurements", s.alice.len(), s.bob.len()),
        ));
    }
    for povm in &s.alice {
        if povm.len() != h.answers.0 {
            return Err(mismatch(format!("{} outcomes for Alice", h.answers.0), povm.len()));
        }
        for e in povm {
            check_square("Alice's POVM element on U", e, du)?;
        }
    }
    for povm in &s.bob {
        if povm.len() != h.answers.1 {
            return Err(mismatch(format!("{} outcomes for Bob", h.answers.1), povm.len()));
        }
        for e in povm {
            check_square("Bob's POVM element on V", e, dv)?;
        }
    }
    Ok(())
}

/// The joint state `W(σ ⊗ ρ)W*` on `(U, X, S, Y, V)`.
pub fn qc_joint_state(g: &QCGame, s: &QCStrategy) -> Result<ComplexMatrix, ModelError> {
    let (du, dv) = s.ancilla;
    let QcDims { n, s: ds, m } = g.dims;
    let shape = RegisterShape::new([du, dv, n, ds, m]);
    // (U, V, X, S, Y) -> (U, X, S, Y, V)
    let (joint, _) = permute_registers(&kron(&s.sigma, &g.rho), &shape, &[0, 2, 3, 4, 1])?;
    Ok(joint)
}

/// `p = Σ_{a,b} <A_a ⊗ Q_{a,b} ⊗ B_b, W(σ ⊗ ρ)W*>`.
///
/// Each term is contracted register by register (`U⊗X`, then `Y⊗V`, then
/// `S`) rather than through the full Kronecker product.
pub fn qc_win_prob(g: &QCGame, s: &QCStrategy) -> Result<WinProbability, ModelError> {
    check_qc_compatible(g, s)?;
    let joint = qc_joint_state(g, s)?;
    let mut p = C64::new(0.0, 0.0);
    for (a, alice) in s.alice.iter().enumerate() {
        // Tr_{UX}[(A_a* ⊗ I) Ω] on (S, Y, V)
        let rest = joint.contract_left(&alice.adjoint());
        for (b, bob) in s.bob.iter().enumerate() {
            let on_s = rest.contract_right(&bob.adjoint());
            p += hs_inner(g.win_op(a, b), &on_s)?;
        }
    }
    WinProbability::from_complex(p)
}

/// `p = Σ_{x,y,a,b} π(x,y) <A^x_a ⊗ P_{a,b,x,y} ⊗ B^y_b, σ>`.
pub fn enlg_win_prob(h: &ExtendedGame, s: &ENLGStrategy) -> Result<WinProbability, ModelError> {
    check_enlg_compatible(h, s)?;
    let (nx, ny) = h.questions;
    let (na, nb) = h.answers;
    let bob_adj: Vec<Vec<ComplexMatrix>> = s
        .bob
        .iter()
        .map(|povm| povm.iter().map(|e| e.adjoint()).collect())
        .collect();
    let mut p = C64::new(0.0, 0.0);
    for x in 0..nx {
        for a in 0..na {
            // Tr_U[(A^x_a* ⊗ I) σ] on (R, V)
            let rest = s.sigma.contract_left(&s.alice[x][a].adjoint());
            for y in 0..ny {
                let weight = h.pi(x, y);
                if weight == 0.0 {
                    continue;
                }
                for b in 0..nb {
                    let on_r = rest.contract_right(&bob_adj[y][b]);
                    p += hs_inner(h.ref_op(a, b, x, y), &on_r)? * weight;
                }
            }
        }
    }
    WinProbability::from_complex(p)
}
