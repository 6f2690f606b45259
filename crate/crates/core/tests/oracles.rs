//! Library results checked against independent brute-force computations.

mod common;

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use syncgames::algebra::{self, ComplexMatrix, Tolerance};
use syncgames::games::{self, ClassicalOptions, SyncQuantumStrategy, SynchronousGame};
use syncgames::graph::{build_game_graph, is_independent_set};
use syncgames::indepset::{self, IndepStrategy};
use syncgames::lifting;
use syncgames::luck::{self, LuckParams};
use syncgames::rational::Rational;
use syncgames::sampling;
use syncgames::stability;

use common::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

/// Exact value over every pair `(f, f')`, no best-response shortcut.
fn brute_force_classical(g: &SynchronousGame) -> Rational {
    let (nq, na) = (g.n_questions(), g.n_answers());
    let total = na.pow(nq as u32);
    let decode = |mut x: usize| {
        let mut f = vec![0; nq];
        for q in (0..nq).rev() {
            f[q] = x % na;
            x /= na;
        }
        f
    };
    let mut best = Rational::zero();
    for x in 0..total {
        let f = decode(x);
        for y in 0..total {
            let fp = decode(y);
            let mut v = Rational::zero();
            for (q, &fq) in f.iter().enumerate() {
                for (q2, &fq2) in fp.iter().enumerate() {
                    if g.wins(q, q2, fq, fq2) {
                        v += g.distribution.exact(q, q2).unwrap();
                    }
                }
            }
            if v > best {
                best = v;
            }
        }
    }
    best
}

#[test]
fn triangle_two_coloring_classical_value_is_seven_ninths() {
    let g = SynchronousGame::coloring(3, &TRIANGLE, 2);
    assert_eq!(brute_force_classical(&g), Rational::new(7, 9));
    let v = games::classical_value(&g, &ClassicalOptions::default()).unwrap();
    assert_eq!(v.exact, Some(Rational::new(7, 9)));
}

#[test]
fn classical_value_matches_pair_enumeration() {
    let mut rng = sampling::rng(11);
    for _ in 0..40 {
        let nq = rng.random_range(1..=3);
        let na = rng.random_range(1..=3);
        let p_win = rng.random_range(0.2..0.9);
        let g = random_sync_game(&mut rng, nq, na, p_win);
        let v = games::classical_value(&g, &ClassicalOptions::default()).unwrap();
        assert_eq!(v.exact, Some(brute_force_classical(&g)));
        assert_eq!(games::deterministic_value_exact(&g, &v.witness), v.exact);
    }
}

fn trine_strategy() -> SyncQuantumStrategy {
    let pvms = (0..3)
        .map(|q| {
            let angle = 2.0 * std::f64::consts::PI * q as f64 / 3.0;
            let v = [
                Complex64::new(angle.cos(), 0.0),
                Complex64::new(angle.sin(), 0.0),
            ];
            let p = ComplexMatrix::projector(&v);
            let comp = &ComplexMatrix::identity(2) - &p;
            vec![p, comp]
        })
        .collect();
    SyncQuantumStrategy::new(pvms).unwrap()
}

#[test]
fn trine_strategy_value_is_five_sixths() {
    let g = SynchronousGame::coloring(3, &TRIANGLE, 2);
    let v = games::eval_sync_strategy(&g, &trine_strategy(), tol()).unwrap();
    assert!((v - 5.0 / 6.0).abs() < 1e-12);
    let (game, lifted) = lifting::forward_lift(&g, &trine_strategy(), tol()).unwrap();
    let b = indepset::sync_loss_indep(&game, &lifted, tol()).unwrap();
    assert!(b.loss <= 1.0 - 5.0 / 6.0 + 1e-12);
    assert!(b.same_vertex.abs() < 1e-15 && b.diagonal.abs() < 1e-15);
}

/// `1 - value` of the independent set game evaluated as a plain nonlocal game.
fn loss_via_general_evaluator(game: &indepset::IndependentSetGame, s: &IndepStrategy) -> f64 {
    let g = game.as_nonlocal_game();
    1.0 - games::eval_sync_strategy(&g, &s.to_sync_strategy(), Tolerance::new(1e-8)).unwrap()
}

#[test]
fn loss_formula_matches_general_evaluation() {
    let mut rng = sampling::rng(12);
    for _ in 0..20 {
        let nq = rng.random_range(2..=3);
        let na = rng.random_range(1..=3);
        let g = random_sync_game(&mut rng, nq, na, 0.6);
        let game = indepset::reduce(&g).unwrap();
        let d = rng.random_range(1..=3);
        let families = (0..game.t)
            .map(|_| sampling::random_pvm(&mut rng, d, game.n_vertices(), true))
            .collect();
        let s = IndepStrategy::new(families).unwrap();
        let b = indepset::sync_loss_indep(&game, &s, tol()).unwrap();
        let oracle = loss_via_general_evaluator(&game, &s);
        assert!((b.loss - oracle).abs() < 1e-10, "{} vs {oracle}", b.loss);
    }
}

#[test]
fn deterministic_lift_loss_counts_losing_ordered_pairs() {
    let mut rng = sampling::rng(13);
    for _ in 0..30 {
        let nq = rng.random_range(1..=4);
        let na = rng.random_range(1..=3);
        let g = random_sync_game(&mut rng, nq, na, 0.5);
        let f: Vec<usize> = (0..nq).map(|_| rng.random_range(0..na)).collect();
        let s = SyncQuantumStrategy::deterministic(&f, na);
        let (game, lifted) = lifting::forward_lift(&g, &s, tol()).unwrap();
        let b = indepset::sync_loss_indep(&game, &lifted, tol()).unwrap();
        let mut losing = 0i64;
        for i in 0..nq {
            for j in 0..nq {
                if i != j && (!g.wins(i, j, f[i], f[j]) || !g.wins(j, i, f[j], f[i])) {
                    losing += 1;
                }
            }
        }
        let t = nq as i64;
        assert_eq!(b.exact, Some(Rational::new(losing, 2 * t * t)));
    }
}

#[test]
fn forward_lift_loss_at_most_uniform_game_loss() {
    let mut rng = sampling::rng(14);
    for _ in 0..20 {
        let nq = rng.random_range(2..=4);
        let na = rng.random_range(2..=3);
        let g = random_sync_game(&mut rng, nq, na, 0.6);
        let d = rng.random_range(1..=4);
        let pvms = (0..nq)
            .map(|_| sampling::random_pvm(&mut rng, d, na, true))
            .collect();
        let s = SyncQuantumStrategy::new(pvms).unwrap();
        let loss_g = 1.0 - games::eval_sync_strategy(&g, &s, tol()).unwrap();
        let (game, lifted) = lifting::forward_lift(&g, &s, tol()).unwrap();
        let b = indepset::sync_loss_indep(&game, &lifted, tol()).unwrap();
        assert!(b.loss <= loss_g + 1e-12, "{} > {loss_g}", b.loss);
        assert!(b.same_vertex.abs() < 1e-15 && b.diagonal.abs() < 1e-15);
    }
}

#[test]
fn luck_values_by_direct_summation() {
    for k in 2..=6 {
        for n in 1..=6 {
            let p = LuckParams::new(k, n).unwrap();
            let g = luck::make_luck_game(p);
            // The only strategy answers 1 everywhere.
            let only = games::DeterministicStrategyPair::synchronous(vec![0; p.t()]);
            assert_eq!(
                games::deterministic_value_exact(&g, &only),
                Some(luck::luck_value(p))
            );
            let k = k as i64;
            assert!(luck::luck_value(p) <= Rational::new(k * k - k + 1, k * k));
        }
    }
}

#[test]
fn luck_graph_independence_number() {
    for (k, n) in [
        (2, 1),
        (2, 2),
        (3, 1),
        (2, 3),
        (3, 2),
        (4, 1),
        (2, 4),
        (3, 3),
        (4, 2),
        (2, 5),
        (2, 6),
        (3, 4),
        (4, 3),
        (6, 2),
    ] {
        let p = LuckParams::new(k, n).unwrap();
        if p.t() > 12 {
            continue;
        }
        let x = build_game_graph(&luck::make_luck_game(p)).unwrap();
        let big: Vec<(usize, usize)> = (n..p.t()).map(|q| (q, 0)).collect();
        assert_eq!(big.len(), (k - 1) * n);
        assert!(is_independent_set(&x, &big).unwrap());
        // Any set of size kn is all of X, which contains the edge (0,1)-(k n - 1,1).
        let all: Vec<(usize, usize)> = (0..p.t()).map(|q| (q, 0)).collect();
        assert!(!is_independent_set(&x, &all).unwrap());
        // Exhaustive: the independence number is exactly (k-1)n.
        let t = p.t();
        let mut best = 0;
        for mask in 0u32..(1 << t) {
            let set: Vec<usize> = (0..t).filter(|&i| mask >> i & 1 == 1).collect();
            if x.is_independent_indices(&set) {
                best = best.max(set.len());
            }
        }
        assert_eq!(best, (k - 1) * n);
    }
}

#[test]
fn sharpness_case_analysis() {
    for k in 2..=4 {
        for n in 1..=5 {
            let p = LuckParams::new(k, n).unwrap();
            let game = luck::luck_indep_game(p).unwrap();
            let b = indepset::sync_loss_indep(&game, &luck::sharpness_strategy(p), tol()).unwrap();
            let t = (k * n) as f64;
            assert!((b.same_vertex - 2.0 * n as f64 / (2.0 * t * t)).abs() < 1e-15);
            assert_eq!(b.adjacent, 0.0);
        }
    }
}

#[test]
fn c_weighting_moves_mass_to_the_diagonal() {
    let g = SynchronousGame::agreement(3, 2);
    let w = games::c_diagonal_weighting(&g, Rational::new(1, 4)).unwrap();
    // pi'(x,x) = (C/2)(1/3 + 1/3) + (1 - C)/9.
    let expected =
        Rational::new(1, 8) * Rational::new(2, 3) + Rational::new(3, 4) * Rational::new(1, 9);
    assert_eq!(w.distribution.exact(1, 1), Some(expected));
    assert_eq!(
        w.distribution.exact_total(),
        Some(Rational::from_integer(1))
    );
    assert!(games::c_diagonal_weighting(&g, Rational::new(1, 2)).is_err());
}

#[test]
fn subordinate_rounding_respects_blocks() {
    let mut rng = sampling::rng(15);
    let tol = Tolerance::default();
    let d = 6;
    let p = vec![
        ComplexMatrix::from_diagonal(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
        ComplexMatrix::from_diagonal(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
    ];
    let partition = vec![vec![0, 1], vec![2, 3]];
    for _ in 0..10 {
        // PVM refining p, then each element blurred inside its block.
        let mut a = Vec::new();
        for (k, block) in partition.iter().enumerate() {
            let sub = sampling::random_pvm(&mut rng, 3, block.len(), false);
            let blurred = sampling::blur_each(&mut rng, &sub, 0.05);
            for x in blurred {
                let mut full = nalgebra::DMatrix::<Complex64>::zeros(d, d);
                for r in 0..3 {
                    for c in 0..3 {
                        full[(3 * k + r, 3 * k + c)] = x.get(r, c);
                    }
                }
                a.push(ComplexMatrix::from_dmatrix(full).unwrap());
            }
        }
        let out = stability::round_subordinate(&a, &p, &partition, tol).unwrap();
        assert!(is_pvm_1e8(&out.operators));
        for (j, q) in out.operators.iter().enumerate() {
            let pk = &p[j / 2];
            let compressed = &(pk * q) * pk;
            assert!(algebra::dist2_sq(&compressed, q) < 1e-16);
        }
        assert!(out.report.total_dist_sq <= out.block_dist_sq + 1e-9);
    }
}

#[test]
fn single_block_subordinate_equals_plain_rounding() {
    let mut rng = sampling::rng(16);
    let tol = Tolerance::default();
    for _ in 0..10 {
        let pvm = sampling::random_pvm(&mut rng, 5, 3, false);
        let a = sampling::blur_each(&mut rng, &pvm, 0.1);
        let plain = stability::round_positive_family(&a, tol).unwrap();
        let sub =
            stability::round_subordinate(&a, &[ComplexMatrix::identity(5)], &[vec![0, 1, 2]], tol)
                .unwrap();
        assert!(family_dist_sq(&plain.operators, &sub.operators) < 1e-20);
    }
}
