//! Seeded random instances: Haar unitaries, density operators, POVMs,
//! games and strategies.
//!
//! Every generator draws from [`SeedRng`], a ChaCha stream cipher used as a
//! counter-based generator: `(seed, stream)` pins the whole sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eig, ComplexMatrix, C64};
use crate::model::{ENLGStrategy, ExtendedGame, QCGame, QCStrategy, QcDims};

pub type SeedRng = ChaCha20Rng;

pub fn rng_for(seed: u64, stream: u64) -> SeedRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary via Gram–Schmidt on a Ginibre matrix.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for c in 0..d {
        let mut v: Vec<C64> = (0..d).map(|r| g[(r, c)]).collect();
        // Two passes of modified Gram–Schmidt for orthogonality at 1e-15.
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let v = ginibre(d, 1, rng);
    let norm = v.frobenius_norm();
    ComplexMatrix::outer(&v.scale_real(1.0 / norm))
}

/// Full-rank density operator `G G* / Tr(G G*)`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    w.scale_real(1.0 / tr).hermitian_part()
}

/// `U diag(λ) U*` with `λ_i` uniform in `[0, 1]`.
pub fn random_effect(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let u = haar_unitary(d, rng);
    let diag: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    ComplexMatrix::from_real_diag(&diag).conjugate_by(&u).hermitian_part()
}

/// Random `k`-outcome POVM on `C^d`: `S^{-1/2} G_i S^{-1/2}` with `S = Σ G_i`.
pub fn random_povm(d: usize, k: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    if k == 1 {
        return vec![ComplexMatrix::identity(d)];
    }
    if k == 2 {
        let e0 = random_effect(d, rng);
        let e1 = &ComplexMatrix::identity(d) - &e0;
        return vec![e0, e1];
    }
    let parts: Vec<ComplexMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(d, d, rng);
            g.matmul(&g.adjoint())
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    for p in &parts {
        total += p;
    }
    let inv_sqrt = hermitian_eig(&total.hermitian_part())
        .expect("sum of Wishart matrices is Hermitian")
        .spectral_sum(|l| 1.0 / l.sqrt());
    parts
        .iter()
        .map(|p| p.conjugate_by(&inv_sqrt).hermitian_part())
        .collect()
}

/// Projective binary measurement `{U Π U*, I - U Π U*}` where `Π` projects
/// onto a random-size prefix of the standard basis.
pub fn random_projective_split(d: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    let rank = if d == 1 { rng.gen_range(0..=1) } else { rng.gen_range(1..d) };
    let u = haar_unitary(d, rng);
    let diag: Vec<f64> = (0..d).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    let e0 = ComplexMatrix::from_real_diag(&diag).conjugate_by(&u).hermitian_part();
    let e1 = &ComplexMatrix::identity(d) - &e0;
    vec![e0, e1]
}

pub fn random_qc_game(dims: QcDims, answers: (usize, usize), rng: &mut impl Rng) -> QCGame {
    let rho = random_density(dims.total(), rng);
    let ops = (0..answers.0 * answers.1)
        .map(|_| random_effect(dims.s, rng))
        .collect();
    QCGame::new(rho, dims, answers, ops).expect("consistent random game")
}

pub fn random_qc_strategy(g: &QCGame, ancilla: (usize, usize), rng: &mut impl Rng) -> QCStrategy {
    let QcDims { n, m, .. } = g.dims();
    let (na, nb) = g.answers();
    QCStrategy {
        sigma: random_density(ancilla.0 * ancilla.1, rng),
        ancilla,
        alice: random_povm(ancilla.0 * n, na, rng),
        bob: random_povm(m * ancilla.1, nb, rng),
    }
}

pub fn random_enlg_strategy(h: &ExtendedGame, ancilla: (usize, usize), rng: &mut impl Rng) -> ENLGStrategy {
    let (du, dv) = ancilla;
    let (nx, ny) = h.questions();
    let (na, nb) = h.answers();
    ENLGStrategy {
        sigma: random_density(du * h.ref_dim() * dv, rng),
        dims: (du, h.ref_dim(), dv),
        alice: (0..nx).map(|_| random_povm(du, na, rng)).collect(),
        bob: (0..ny).map(|_| random_povm(dv, nb, rng)).collect(),
    }
}
