//! Strategy adapters between a QC game `G` and its constructed extended
//! game `H = build_enlg(G)`, plus the win/lose analysis operators.
//!
//! Forward (`G → H`): the players additionally prepare `|ψ>` on `(X', X)`
//! and `|φ>` on `(Y, Y')`, hand `(X, Y)` to the referee, and on question
//! `x` Alice applies `conj(U_x)` to `X'` before measuring. The losing
//! probability scales by exactly `1/(nm)`.
//!
//! Backward (`H → G`): the players share `σ` with `R` relabelled as
//! `(X', Y')`, measure `(X', X)` in the teleportation basis
//! `{(I ⊗ U_x^T)|ψ>}` to recover a question `x`, then answer with the
//! extended-game measurement for `x`. The losing probability scales by
//! exactly `nm`. (The variant that conjugates `σ` and the measurements and
//! uses `{(I ⊗ U_x*)|ψ>}` gives the same scaling only when `ρ` and every
//! `Q_{a,b}` are real.)
//!
//! Register order of the assembled extended-game state is
//! `(U, X' | X, Y | Y', V)`.

use std::fmt;

use thiserror::Error;

use crate::construct::{build_enlg, max_entangled, weyl_basis, ConstructError, WeylBasis};
use crate::linalg::{kron, kron_all, permute_registers, ComplexMatrix, RegisterShape};
use crate::model::{
    check_enlg_compatible, check_qc_compatible, enlg_win_prob, qc_win_prob, validate_enlg_strategy,
    validate_qc_game, validate_qc_strategy, ENLGStrategy, ExtendedGame, ModelError, QCGame,
    QCStrategy, QcDims, ValidationReport,
};

/// Receipt residuals above this are treated as a broken identity.
pub const RECEIPT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("{what} failed validation:\n{report}")]
    ValidationFailed {
        what: &'static str,
        report: ValidationReport,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

/// A positive rational `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub num: usize,
    pub den: usize,
}

impl Scale {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Losing probabilities before and after adaptation, and how far the
/// target deviates from `scale * source`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationReceipt {
    pub source_loss: f64,
    pub target_loss: f64,
    pub scale: Scale,
    pub residual: f64,
}

impl AdaptationReceipt {
    fn new(source_loss: f64, target_loss: f64, scale: Scale) -> Self {
        AdaptationReceipt {
            source_loss,
            target_loss,
            scale,
            residual: (target_loss - scale.value() * source_loss).abs(),
        }
    }

    pub fn holds(&self) -> bool {
        self.residual < RECEIPT_TOL
    }
}

fn require_valid(what: &'static str, report: ValidationReport) -> Result<(), AdaptError> {
    if report.is_empty() {
        Ok(())
    } else {
        Err(AdaptError::ValidationFailed { what, report })
    }
}

struct Bases {
    n: usize,
    m: usize,
    ux: WeylBasis,
    vy: WeylBasis,
}

impl Bases {
    fn for_game(g: &QCGame) -> Result<Self, ConstructError> {
        let QcDims { n, m, .. } = g.dims();
        Ok(Bases {
            n,
            m,
            ux: weyl_basis(n)?,
            vy: weyl_basis(m)?,
        })
    }

    /// `(I ⊗ U_x^T)|ψ><ψ|(I ⊗ conj(U_x))` on `(X', X)`.
    fn alice_teleport_projector(&self, psi: &ComplexMatrix, x: usize) -> ComplexMatrix {
        let w = kron(&ComplexMatrix::identity(self.n), &self.ux.op(x).transpose());
        psi.conjugate_by(&w)
    }

    /// `(V_y^T ⊗ I)|φ><φ|(conj(V_y) ⊗ I)` on `(Y, Y')`.
    fn bob_teleport_projector(&self, phi: &ComplexMatrix, y: usize) -> ComplexMatrix {
        let w = kron(&self.vy.op(y).transpose(), &ComplexMatrix::identity(self.m));
        phi.conjugate_by(&w)
    }
}

/// `σ ⊗ |ψ><ψ| ⊗ |φ><φ|` arranged on `(U, X', X, Y, Y', V)`.
pub fn forward_initial_state(g: &QCGame, s: &QCStrategy) -> Result<ComplexMatrix, AdaptError> {
    check_qc_compatible(g, s)?;
    let QcDims { n, m, .. } = g.dims();
    let (du, dv) = s.ancilla;
    let psi = max_entangled(n)?.density();
    let phi = max_entangled(m)?.density();
    let built = kron_all([&s.sigma, &psi, &phi]);
    // (U, V, X', X, Y, Y') -> (U, X', X, Y, Y', V)
    let shape = RegisterShape::new([du, dv, n, n, m, m]);
    let (state, _) = permute_registers(&built, &shape, &[0, 2, 3, 4, 5, 1]).map_err(ModelError::from)?;
    Ok(state)
}

fn forward_povms(bases: &Bases, s: &QCStrategy) -> (Vec<Vec<ComplexMatrix>>, Vec<Vec<ComplexMatrix>>) {
    let (du, dv) = s.ancilla;
    let alice = bases
        .ux
        .ops()
        .iter()
        .map(|u| {
            // (I_U ⊗ U_x^T) A_a (I_U ⊗ conj(U_x))
            let left = kron(&ComplexMatrix::identity(du), &u.transpose());
            let right = kron(&ComplexMatrix::identity(du), &u.conj());
            s.alice
                .iter()
                .map(|a| left.matmul(a).matmul(&right).hermitian_part())
                .collect()
        })
        .collect();
    let bob = bases
        .vy
        .ops()
        .iter()
        .map(|v| {
            let left = kron(&v.transpose(), &ComplexMatrix::identity(dv));
            let right = kron(&v.conj(), &ComplexMatrix::identity(dv));
            s.bob
                .iter()
                .map(|b| left.matmul(b).matmul(&right).hermitian_part())
                .collect()
        })
        .collect();
    (alice, bob)
}

pub fn adapt_qc_to_enlg(g: &QCGame, s: &QCStrategy) -> Result<(ENLGStrategy, AdaptationReceipt), AdaptError> {
    let h = build_enlg(g)?;
    adapt_qc_to_enlg_with(g, &h, s)
}

/// Forward adaptation when `h = build_enlg(g)` is already at hand.
pub fn adapt_qc_to_enlg_with(
    g: &QCGame,
    h: &ExtendedGame,
    s: &QCStrategy,
) -> Result<(ENLGStrategy, AdaptationReceipt), AdaptError> {
    require_valid("QC game", validate_qc_game(g))?;
    check_qc_compatible(g, s)?;
    require_valid("QC strategy", validate_qc_strategy(s))?;
    let bases = Bases::for_game(g)?;
    let (n, m) = (bases.n, bases.m);
    let (du, dv) = s.ancilla;
    let sigma = forward_initial_state(g, s)?;
    let (alice, bob) = forward_povms(&bases, s);
    let adapted = ENLGStrategy {
        sigma,
        dims: (du * n, n * m, m * dv),
        alice,
        bob,
    };
    let source_loss = qc_win_prob(g, s)?.loss();
    let target_loss = enlg_win_prob(h, &adapted)?.loss();
    let receipt = AdaptationReceipt::new(source_loss, target_loss, Scale { num: 1, den: n * m });
    Ok((adapted, receipt))
}

pub fn adapt_enlg_to_qc(g: &QCGame, s: &ENLGStrategy) -> Result<(QCStrategy, AdaptationReceipt), AdaptError> {
    let h = build_enlg(g)?;
    adapt_enlg_to_qc_with(g, &h, s)
}

fn backward_povms(g: &QCGame, bases: &Bases, s: &ENLGStrategy) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>), AdaptError> {
    let psi = max_entangled(bases.n)?.density();
    let phi = max_entangled(bases.m)?.density();
    let (du, _, dv) = s.dims;
    let (na, nb) = g.answers();
    let mut alice = vec![ComplexMatrix::zeros(du * bases.n * bases.n, du * bases.n * bases.n); na];
    for (x, povm) in s.alice.iter().enumerate() {
        let proj = bases.alice_teleport_projector(&psi, x);
        for (acc, e) in alice.iter_mut().zip(povm) {
            *acc += &kron(e, &proj);
        }
    }
    let mut bob = vec![ComplexMatrix::zeros(bases.m * bases.m * dv, bases.m * bases.m * dv); nb];
    for (y, povm) in s.bob.iter().enumerate() {
        let proj = bases.bob_teleport_projector(&phi, y);
        for (acc, e) in bob.iter_mut().zip(povm) {
            *acc += &kron(&proj, e);
        }
    }
    let herm = |v: Vec<ComplexMatrix>| v.into_iter().map(|e| e.hermitian_part()).collect();
    Ok((herm(alice), herm(bob)))
}

/// Backward adaptation when `h = build_enlg(g)` is already at hand.
pub fn adapt_enlg_to_qc_with(
    g: &QCGame,
    h: &ExtendedGame,
    s: &ENLGStrategy,
) -> Result<(QCStrategy, AdaptationReceipt), AdaptError> {
    require_valid("QC game", validate_qc_game(g))?;
    check_enlg_compatible(h, s)?;
    require_valid("extended-game strategy", validate_enlg_strategy(s))?;
    let bases = Bases::for_game(g)?;
    let (n, m) = (bases.n, bases.m);
    let (du, _, dv) = s.dims;
    let (alice, bob) = backward_povms(g, &bases, s)?;
    // σ on (U, X', Y', V) is already in (U_new, V_new) order.
    let adapted = QCStrategy {
        sigma: s.sigma.clone(),
        ancilla: (du * n, m * dv),
        alice,
        bob,
    };
    let source_loss = enlg_win_prob(h, s)?.loss();
    let target_loss = qc_win_prob(g, &adapted)?.loss();
    let receipt = AdaptationReceipt::new(source_loss, target_loss, Scale { num: n * m, den: 1 });
    Ok((adapted, receipt))
}

/// Losing-outcome operator `R_0` of the forward-adapted strategy on
/// `(U, X', X, Y, Y', V)`, for an arbitrary initialization of those
/// registers. `R_1 = I - R_0`.
pub fn loss_operator_h(g: &QCGame, s: &QCStrategy) -> Result<ComplexMatrix, AdaptError> {
    check_qc_compatible(g, s)?;
    let h = build_enlg(g)?;
    let bases = Bases::for_game(g)?;
    let (alice, bob) = forward_povms(&bases, s);
    let (nx, ny) = h.questions();
    let (na, nb) = h.answers();
    let r = h.ref_dim();
    let id_r = ComplexMatrix::identity(r);
    let dim = alice[0][0].rows() * r * bob[0][0].rows();
    let mut r0 = ComplexMatrix::zeros(dim, dim);
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                for b in 0..nb {
                    let lose = &id_r - h.ref_op(a, b, x, y);
                    r0 += &kron_all([&alice[x][a], &lose, &bob[y][b]]);
                }
            }
        }
    }
    Ok(r0.scale_real(1.0 / (nx * ny) as f64))
}

/// `W(σ ⊗ ρ)W*` with `W: (U, X', Y', V, X, S, Y) -> (U, X', X, S, Y, Y', V)`.
pub fn backward_joint_state(g: &QCGame, s: &ENLGStrategy) -> Result<ComplexMatrix, AdaptError> {
    let QcDims { n, s: ds, m } = g.dims();
    let (du, r, dv) = s.dims;
    if r != n * m {
        return Err(ModelError::DimensionMismatch {
            expected: format!("dim R = {}", n * m),
            found: format!("dim R = {r}"),
        }
        .into());
    }
    let shape = RegisterShape::new([du, n, m, dv, n, ds, m]);
    let built = kron(&s.sigma, g.rho());
    let (state, _) = permute_registers(&built, &shape, &[0, 1, 4, 5, 6, 2, 3]).map_err(ModelError::from)?;
    Ok(state)
}

/// Losing-outcome operator `R_0` of the backward-adapted strategy on
/// `(U, X', X, S, Y, Y', V)`:
/// `Σ A^x_a ⊗ Π^X_x ⊗ (I - Q_{a,b}) ⊗ Π^Y_y ⊗ B^y_b` with `Π` the
/// teleportation-basis projectors.
pub fn loss_operator_g(g: &QCGame, s: &ENLGStrategy) -> Result<ComplexMatrix, AdaptError> {
    let h = build_enlg(g)?;
    check_enlg_compatible(&h, s)?;
    let bases = Bases::for_game(g)?;
    let psi = max_entangled(bases.n)?.density();
    let phi = max_entangled(bases.m)?.density();
    let QcDims { n, s: ds, m } = g.dims();
    let (du, _, dv) = s.dims;
    let (na, nb) = g.answers();
    let id_s = ComplexMatrix::identity(ds);
    let alice_proj: Vec<ComplexMatrix> = (0..n * n).map(|x| bases.alice_teleport_projector(&psi, x)).collect();
    let bob_proj: Vec<ComplexMatrix> = (0..m * m).map(|y| bases.bob_teleport_projector(&phi, y)).collect();
    let dim = du * n * n * ds * m * m * dv;
    let mut r0 = ComplexMatrix::zeros(dim, dim);
    for x in 0..n * n {
        for y in 0..m * m {
            for a in 0..na {
                for b in 0..nb {
                    let lose = &id_s - g.win_op(a, b);
                    r0 += &kron_all([
                        &s.alice[x][a],
                        &alice_proj[x],
                        &lose,
                        &bob_proj[y],
                        &s.bob[y][b],
                    ]);
                }
            }
        }
    }
    Ok(r0)
}
