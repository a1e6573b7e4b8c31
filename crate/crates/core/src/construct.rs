//! Building extended nonlocal games.
//!
//! [`build_enlg`] turns a QC game `G` on `X ⊗ S ⊗ Y` into an extended
//! nonlocal game `H` whose referee register is `R = (X, Y)`: questions are
//! indices into Weyl bases of `X` and `Y`, drawn uniformly, and the referee
//! accepts with
//!
//! ```text
//! P_{a,b,x,y} = I - (U_x ⊗ V_y)(ξ^T - ξ_{a,b}^T)(U_x ⊗ V_y)*
//! ```
//!
//! where `ξ = Tr_S(ρ)` and `ξ_{a,b} = Tr_S[(I ⊗ Q_{a,b} ⊗ I)ρ]`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

use crate::linalg::{kron, partial_trace, ComplexMatrix, LinalgError, RegisterShape, C64, ONE, ZERO};
use crate::model::{validate_qc_game, ExtendedGame, ModelError, QCGame, QcDims, ValidationReport};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("dimension must be positive")]
    InvalidDimension,
    #[error("input game failed validation:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `e^{2πi k/d}`, exact on quarter turns.
fn root_of_unity(k: usize, d: usize) -> C64 {
    let k = k % d;
    if (4 * k).is_multiple_of(d) {
        return match 4 * k / d {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// The `d²` discrete Weyl operators on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylBasis {
    d: usize,
    ops: Vec<ComplexMatrix>,
}

impl WeylBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `Shift^j Clock^k` at flat index `j * d + k`.
    pub fn op(&self, index: usize) -> &ComplexMatrix {
        &self.ops[index]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `(1/d²) Σ_x U_x M U_x*`.
    pub fn twirl(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.d, self.d);
        for u in &self.ops {
            acc += &m.conjugate_by(u);
        }
        acc.scale_real(1.0 / self.ops.len() as f64)
    }
}

/// `W_{(j,k)} = Shift^j Clock^k` with `Shift|l> = |l+1 mod d>` and
/// `Clock|l> = e^{2πil/d}|l>`, indexed row-major in `(j, k)`.
pub fn weyl_basis(d: usize) -> Result<WeylBasis, ConstructError> {
    if d == 0 {
        return Err(ConstructError::InvalidDimension);
    }
    let mut ops = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let mut w = ComplexMatrix::zeros(d, d);
            for l in 0..d {
                w[((l + j) % d, l)] = root_of_unity(k * l, d);
            }
            ops.push(w);
        }
    }
    Ok(WeylBasis { d, ops })
}

/// `(1/√n) Σ_j |j>|j>` on `C^n ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntangledState {
    n: usize,
    vector: ComplexMatrix,
}

impl MaxEntangledState {
    pub fn local_dim(&self) -> usize {
        self.n
    }

    /// Column vector of length `n²`.
    pub fn vector(&self) -> &ComplexMatrix {
        &self.vector
    }

    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vector)
    }
}

pub fn max_entangled(n: usize) -> Result<MaxEntangledState, ConstructError> {
    if n == 0 {
        return Err(ConstructError::InvalidDimension);
    }
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let vector = ComplexMatrix::from_fn(n * n, 1, |r, _| if r % (n + 1) == 0 { amp } else { ZERO });
    Ok(MaxEntangledState { n, vector })
}

/// `ξ = Tr_S(ρ)` and `ξ_{a,b} = Tr_S[(I ⊗ Q_{a,b} ⊗ I)ρ]`, both on `X ⊗ Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOps {
    pub xi: ComplexMatrix,
    /// Indexed by `a * |B| + b`.
    pub xi_ab: Vec<ComplexMatrix>,
}

pub fn reduce_qc(g: &QCGame) -> Result<ReducedOps, ConstructError> {
    let report = validate_qc_game(g);
    if !report.is_empty() {
        return Err(ConstructError::ValidationFailed(report));
    }
    let QcDims { n, s, m } = g.dims();
    let shape = RegisterShape::new([n, s, m]);
    let xi = partial_trace(g.rho(), &shape, &[0, 2])?;
    let xi_ab = g
        .win_ops()
        .iter()
        .map(|q| {
            let lifted = kron(&kron(&ComplexMatrix::identity(n), q), &ComplexMatrix::identity(m));
            partial_trace(&lifted.matmul(g.rho()), &shape, &[0, 2])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReducedOps { xi, xi_ab })
}

/// The extended nonlocal game obtained from a QC game by post-selected
/// teleportation through Weyl bases of `X` and `Y`.
pub fn build_enlg(g: &QCGame) -> Result<ExtendedGame, ConstructError> {
    let reduced = reduce_qc(g)?;
    let QcDims { n, m, .. } = g.dims();
    let (na, nb) = g.answers();
    let ux = weyl_basis(n)?;
    let vy = weyl_basis(m)?;
    let (nx, ny) = (n * n, m * m);
    let r = n * m;
    let xi_t = reduced.xi.transpose();
    let id = ComplexMatrix::identity(r);

    let locals: Vec<ComplexMatrix> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| kron(ux.op(x), vy.op(y)))
        .collect();

    let mut ref_ops = Vec::with_capacity(na * nb * nx * ny);
    for xi_ab in &reduced.xi_ab {
        let gap = &xi_t - &xi_ab.transpose();
        for w in &locals {
            ref_ops.push((&id - &gap.conjugate_by(w)).hermitian_part());
        }
    }
    let pi = vec![1.0 / (nx * ny) as f64; nx * ny];
    Ok(ExtendedGame::new(pi, (nx, ny), (na, nb), r, ref_ops)?)
}

/// `|γ_0>` and `|γ_1>` on `C^3 ⊗ C^3`.
pub fn rv_gammas() -> [ComplexMatrix; 2] {
    let mut g0 = ComplexMatrix::zeros(9, 1);
    let mut g1 = ComplexMatrix::zeros(9, 1);
    g0[(0, 0)] = C64::new(FRAC_1_SQRT_2, 0.0);
    g1[(0, 0)] = C64::new(FRAC_1_SQRT_2, 0.0);
    for k in [1, 2] {
        g0[(4 * k, 0)] = C64::new(0.5, 0.0);
        g1[(4 * k, 0)] = C64::new(-0.5, 0.0);
    }
    [g0, g1]
}

/// The binary-answer catalog game on `R = C^3 ⊗ C^3` with nine questions
/// per player: answers matter only through `c = a ⊕ b`, and the players
/// lose on the rank-one projector `(U_x ⊗ U_y)|γ_c><γ_c|(U_x ⊗ U_y)*`.
pub fn build_rv_game() -> ExtendedGame {
    let basis = weyl_basis(3).expect("d = 3 is valid");
    let gammas = rv_gammas().map(|g| ComplexMatrix::outer(&g));
    let id = ComplexMatrix::identity(9);
    let mut ref_ops = Vec::with_capacity(4 * 81);
    for a in 0..2 {
        for b in 0..2 {
            let lose = &gammas[a ^ b];
            for x in 0..9 {
                for y in 0..9 {
                    let w = kron(basis.op(x), basis.op(y));
                    ref_ops.push((&id - &lose.conjugate_by(&w)).hermitian_part());
                }
            }
        }
    }
    ExtendedGame::new(vec![1.0 / 81.0; 81], (9, 9), (2, 2), 9, ref_ops).expect("consistent catalog game")
}

/// A nonlocal game seen as an extended game with a one-dimensional referee
/// register: `P_{a,b,x,y} = [predicate(a, b, x, y)]`.
pub fn embed_nonlocal_game(
    pi: Vec<f64>,
    questions: (usize, usize),
    answers: (usize, usize),
    predicate: impl Fn(usize, usize, usize, usize) -> bool,
) -> Result<ExtendedGame, ConstructError> {
    let (nx, ny) = questions;
    let (na, nb) = answers;
    let mut ref_ops = Vec::with_capacity(na * nb * nx * ny);
    for a in 0..na {
        for b in 0..nb {
            for x in 0..nx {
                for y in 0..ny {
                    let v = if predicate(a, b, x, y) { ONE } else { ZERO };
                    ref_ops.push(ComplexMatrix::from_vec(1, 1, vec![v])?);
                }
            }
        }
    }
    Ok(ExtendedGame::new(pi, questions, answers, 1, ref_ops)?)
}

/// CHSH: uniform questions in `{0,1}²`, win iff `a ⊕ b = x ∧ y`.
pub fn chsh_game() -> ExtendedGame {
    embed_nonlocal_game(vec![0.25; 4], (2, 2), (2, 2), |a, b, x, y| (a ^ b) == (x & y))
        .expect("consistent CHSH game")
}
