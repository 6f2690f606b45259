//! Seeded random instances: hermitian matrices, unitaries, PVMs and
//! perturbations of them. Used by the property suites, the acceptance
//! sweeps and the benches.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{self, ComplexMatrix, Tolerance};

pub use rand::SeedableRng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Hermitian matrix with Gaussian entries, normalized to `||h||_2 = 1`.
pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let h = ComplexMatrix::from_dmatrix(g)
        .expect("finite")
        .hermitian_part();
    let n = algebra::trace_norm2(&h);
    h.scale(1.0 / n)
}

/// Unitary from the eigenvectors of a Gaussian hermitian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, d);
    let eig = algebra::hermitian_eig(&h, Tolerance::default()).expect("hermitian");
    ComplexMatrix::from_dmatrix(eig.eigenvectors).expect("finite")
}

/// `exp(i theta h)` for a fresh random hermitian `h`.
pub fn random_rotation(rng: &mut impl Rng, d: usize, theta: f64) -> ComplexMatrix {
    let h = random_hermitian(rng, d);
    algebra::unitary_exp(&h, theta, Tolerance::default()).expect("hermitian")
}

/// Splits `d` into `m` nonnegative ranks. With `allow_empty == false`
/// every rank is at least one (requires `m <= d`).
pub fn random_ranks(rng: &mut impl Rng, d: usize, m: usize, allow_empty: bool) -> Vec<usize> {
    assert!(m >= 1);
    let mut ranks = vec![0usize; m];
    let mut remaining = d;
    if !allow_empty {
        assert!(m <= d, "cannot fill {m} nonempty blocks in dimension {d}");
        ranks.iter_mut().for_each(|r| *r = 1);
        remaining -= m;
    }
    for _ in 0..remaining {
        ranks[rng.random_range(0..m)] += 1;
    }
    ranks
}

/// PVM whose blocks are spanned by consecutive columns of `basis`.
pub fn pvm_from_basis(basis: &ComplexMatrix, ranks: &[usize]) -> Vec<ComplexMatrix> {
    let d = basis.dim();
    assert_eq!(ranks.iter().sum::<usize>(), d);
    let mut out = Vec::with_capacity(ranks.len());
    let mut col = 0;
    for &r in ranks {
        let mut p = ComplexMatrix::zeros(d);
        for k in col..col + r {
            let v: Vec<Complex64> = basis.as_dmatrix().column(k).iter().copied().collect();
            p += &ComplexMatrix::outer(&v);
        }
        out.push(p.hermitian_part());
        col += r;
    }
    out
}

/// Random PVM with `m` elements in dimension `d`.
pub fn random_pvm(rng: &mut impl Rng, d: usize, m: usize, allow_empty: bool) -> Vec<ComplexMatrix> {
    let u = random_unitary(rng, d);
    let ranks = random_ranks(rng, d, m, allow_empty);
    pvm_from_basis(&u, &ranks)
}

/// Conjugates every element by its own rotation `exp(i theta h_j)`.
/// The outputs are projections but in general no longer a PVM.
pub fn rotate_each(rng: &mut impl Rng, family: &[ComplexMatrix], theta: f64) -> Vec<ComplexMatrix> {
    family
        .iter()
        .map(|p| {
            let u = random_rotation(rng, p.dim(), theta);
            algebra::conjugate(&u, p).hermitian_part()
        })
        .collect()
}

/// Positive contractions `(1 - s) p_j + s w_j` where `w_j` is a random
/// PSD operator with spectrum in `[0, 1]`.
pub fn blur_each(rng: &mut impl Rng, family: &[ComplexMatrix], s: f64) -> Vec<ComplexMatrix> {
    family
        .iter()
        .map(|p| {
            let d = p.dim();
            let u = random_unitary(rng, d);
            let diag: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let w = algebra::conjugate(&u, &ComplexMatrix::from_diagonal(&diag));
            (&p.scale(1.0 - s) + &w.scale(s)).hermitian_part()
        })
        .collect()
}
