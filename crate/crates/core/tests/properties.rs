use proptest::prelude::*;

use enlg::cli::format::{game_to_string, parse_document, Document, Game, GameFile, Metadata};
use enlg::construct::{build_enlg, weyl_basis};
use enlg::linalg::{hermitian_eig, hs_inner, inverse_permutation, kron, partial_trace, permute_registers, ComplexMatrix, RegisterShape, C64};
use enlg::model::{enlg_win_prob, qc_win_prob, ENLGStrategy, QcDims};
use enlg::optimize::helstrom_update;
use enlg::random::{ginibre, random_density, random_enlg_strategy, random_effect, random_qc_game, random_qc_strategy, rng_for};

fn dims3() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(1usize..=3, 3)
}

fn qc_dims() -> impl Strategy<Value = QcDims> {
    (1usize..=3, 1usize..=3, 1usize..=2).prop_map(|(n, s, m)| QcDims { n, s, m })
}

fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_is_linear(dims in dims3(), keep in 0usize..3, seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = rng_for(seed, 0);
        let shape = RegisterShape::new(dims.clone());
        let d = shape.total();
        let (x, y) = (ginibre(d, d, &mut rng), ginibre(d, d, &mut rng));
        let mut mix = x.scale(C64::new(a, 0.0));
        mix.axpy(C64::new(b, 0.0), &y);
        let lhs = partial_trace(&mix, &shape, &[keep]).unwrap();
        let mut rhs = partial_trace(&x, &shape, &[keep]).unwrap().scale(C64::new(a, 0.0));
        rhs.axpy(C64::new(b, 0.0), &partial_trace(&y, &shape, &[keep]).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn partial_trace_of_product(da in 1usize..=3, db in 1usize..=3, seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let (x, y) = (ginibre(da, da, &mut rng), ginibre(db, db, &mut rng));
        let shape = RegisterShape::new(vec![da, db]);
        let left = partial_trace(&kron(&x, &y), &shape, &[0]).unwrap();
        prop_assert!(close(&left, &x.scale(y.trace()), 1e-10));
        let right = partial_trace(&kron(&x, &y), &shape, &[1]).unwrap();
        prop_assert!(close(&right, &y.scale(x.trace()), 1e-10));
    }

    #[test]
    fn permutation_round_trips_and_keeps_spectrum(dims in dims3(), perm in Just(vec![0usize, 1, 2]).prop_shuffle(), seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let shape = RegisterShape::new(dims);
        let m = random_density(shape.total(), &mut rng);
        let (p, pshape) = permute_registers(&m, &shape, &perm).unwrap();
        let (back, bshape) = permute_registers(&p, &pshape, &inverse_permutation(&perm)).unwrap();
        prop_assert_eq!(bshape.dims(), shape.dims());
        prop_assert_eq!(&back, &m);
        let (e1, e2) = (hermitian_eig(&m).unwrap(), hermitian_eig(&p).unwrap());
        for (u, v) in e1.values.iter().zip(&e2.values) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_pairs_have_nonnegative_overlap(d in 1usize..=5, seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let (a, b) = (random_density(d, &mut rng), random_effect(d, &mut rng));
        let z = hs_inner(&a, &b).unwrap();
        prop_assert!(z.re >= -1e-12 && z.im.abs() < 1e-12);
    }

    #[test]
    fn weyl_twirl_is_completely_depolarizing(d in 1usize..=4, seed in any::<u64>()) {
        let m = ginibre(d, d, &mut rng_for(seed, 0));
        let t = weyl_basis(d).unwrap().twirl(&m);
        let expected = ComplexMatrix::identity(d).scale(m.trace() / d as f64);
        prop_assert!(close(&t, &expected, 1e-10));
    }

    #[test]
    fn helstrom_split_is_a_projective_measurement(d in 1usize..=5, seed in any::<u64>()) {
        let g = ginibre(d, d, &mut rng_for(seed, 0));
        let [e0, e1] = helstrom_update(&g.hermitian_part()).unwrap();
        prop_assert!(close(&(&e0 + &e1), &ComplexMatrix::identity(d), 1e-12));
        prop_assert!(close(&e0.matmul(&e0), &e0, 1e-10));
    }

    #[test]
    fn win_probabilities_are_probabilities(dims in qc_dims(), du in 1usize..=2, dv in 1usize..=2, seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let g = random_qc_game(dims, (2, 2), &mut rng);
        let p = qc_win_prob(&g, &random_qc_strategy(&g, (du, dv), &mut rng)).unwrap().raw;
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&p));
        let h = build_enlg(&g).unwrap();
        let q = enlg_win_prob(&h, &random_enlg_strategy(&h, (du, dv), &mut rng)).unwrap().raw;
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&q));
        let cap = 1.0 / (dims.n * dims.m) as f64;
        prop_assert!(1.0 - q <= cap + 1e-9, "loss {} above cap {}", 1.0 - q, cap);
    }

    #[test]
    fn extended_value_is_linear_in_the_state(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = rng_for(seed, 0);
        let g = random_qc_game(QcDims { n: 2, s: 2, m: 2 }, (2, 2), &mut rng);
        let h = build_enlg(&g).unwrap();
        let s = random_enlg_strategy(&h, (1, 2), &mut rng);
        let other = random_density(s.sigma.rows(), &mut rng);
        let mut mixed = s.sigma.scale_real(t);
        mixed.axpy(C64::new(1.0 - t, 0.0), &other);
        let with = |sigma: ComplexMatrix| {
            enlg_win_prob(&h, &ENLGStrategy { sigma, ..s.clone() }).unwrap().raw
        };
        let lhs = with(mixed);
        let rhs = t * with(s.sigma.clone()) + (1.0 - t) * with(other);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn game_files_round_trip_bit_exactly(dims in qc_dims(), seed in any::<u64>()) {
        let g = random_qc_game(dims, (2, 2), &mut rng_for(seed, 0));
        let file = GameFile { metadata: Metadata::new("g", "random"), game: Game::Qc(g.clone()) };
        let text = game_to_string(&file).unwrap();
        let Ok(Document::Game(GameFile { game: Game::Qc(back), .. })) = parse_document(&text) else {
            return Err(TestCaseError::fail("did not parse back as a QC game"));
        };
        prop_assert_eq!(back.rho(), g.rho());
        for (a, b) in back.win_ops().iter().zip(g.win_ops()) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(game_to_string(&GameFile { metadata: Metadata::new("g", "random"), game: Game::Qc(back) }).unwrap(), text);
    }
}
