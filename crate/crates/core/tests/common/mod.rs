//! Instance generators shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::Rng;
use syncgames::algebra::{self, ComplexMatrix, Tolerance};
use syncgames::games::{Distribution, SyncQuantumStrategy, SynchronousGame};
use syncgames::sampling;

pub const TRIANGLE: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];
pub const SQUARE: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (0, 3)];

/// Random synchronous game: `V(q,q;a,a') = [a = a']`, every off-diagonal
/// cell winning with probability `p_win`; uniform distribution.
pub fn random_sync_game(rng: &mut impl Rng, nq: usize, na: usize, p_win: f64) -> SynchronousGame {
    let mut cells = vec![false; nq * nq * na * na];
    for q in 0..nq {
        for q2 in 0..nq {
            for a in 0..na {
                for a2 in 0..na {
                    let win = if q == q2 {
                        a == a2
                    } else {
                        rng.random_bool(p_win)
                    };
                    cells[((q * nq + q2) * na + a) * na + a2] = win;
                }
            }
        }
    }
    SynchronousGame::from_fn(nq, na, Distribution::uniform(nq), |q, q2, a, a2| {
        cells[((q * nq + q2) * na + a) * na + a2]
    })
    .unwrap()
}

/// The same PVM for every question: perfect for agreement games.
pub fn shared_pvm_strategy(pvm: &[ComplexMatrix], nq: usize) -> SyncQuantumStrategy {
    SyncQuantumStrategy::new(vec![pvm.to_vec(); nq]).unwrap()
}

/// Perfect `d`-dimensional strategy for a coloring game with proper
/// coloring `f`: question `q` measures one random PVM `{B_k}` and answers
/// `k + f(q) mod |A|`, so adjacent questions never agree.
pub fn quantum_coloring_strategy(
    rng: &mut impl Rng,
    f: &[usize],
    na: usize,
    d: usize,
) -> SyncQuantumStrategy {
    let u = sampling::random_unitary(rng, d);
    let ranks = sampling::random_ranks(rng, d, na, false);
    let base = sampling::pvm_from_basis(&u, &ranks);
    let pvms = f
        .iter()
        .map(|&fq| (0..na).map(|a| base[(a + na - fq) % na].clone()).collect())
        .collect();
    SyncQuantumStrategy::new(pvms).unwrap()
}

/// Squared distance between two families.
pub fn family_dist_sq(x: &[ComplexMatrix], y: &[ComplexMatrix]) -> f64 {
    x.iter().zip(y).map(|(a, b)| algebra::dist2_sq(a, b)).sum()
}

pub fn is_pvm_1e8(family: &[ComplexMatrix]) -> bool {
    algebra::is_pvm(family, Tolerance::new(1e-8)).unwrap()
}

/// Kinds of perturbed families used by the stability sweeps.
#[derive(Debug, Clone, Copy)]
pub enum Perturbation {
    Exact,
    Rotate(f64),
    Blur(f64),
    Shrink(f64),
    RotateDrop(f64),
}

/// Perturbs a PVM according to `kind`.
pub fn perturb(
    rng: &mut impl Rng,
    pvm: &[ComplexMatrix],
    kind: Perturbation,
) -> Vec<ComplexMatrix> {
    match kind {
        Perturbation::Exact => pvm.to_vec(),
        Perturbation::Rotate(theta) => sampling::rotate_each(rng, pvm, theta),
        Perturbation::Blur(s) => sampling::blur_each(rng, pvm, s),
        Perturbation::Shrink(s) => pvm.iter().map(|p| p.scale(1.0 - s)).collect(),
        Perturbation::RotateDrop(theta) => {
            let mut out = sampling::rotate_each(rng, pvm, theta);
            if out.len() > 1 {
                out.pop();
            }
            out
        }
    }
}

/// A random perturbation kind with a random magnitude.
pub fn random_perturbation(rng: &mut impl Rng) -> Perturbation {
    match rng.random_range(0..5) {
        0 => Perturbation::Exact,
        1 => Perturbation::Rotate(rng.random_range(0.0..0.4)),
        2 => Perturbation::Blur(rng.random_range(0.0..0.3)),
        3 => Perturbation::Shrink(rng.random_range(0.0..0.3)),
        _ => Perturbation::RotateDrop(rng.random_range(0.0..0.2)),
    }
}
