//! Seeded synthetic operator bundles.
//!
//! The benchmark and large-size solver tests need operator sets of arbitrary
//! dimension without paying for surface assembly. These matrices mimic the
//! structural properties the solvers rely on — a positive diagonally
//! dominant mass block, symmetric positive definite single-layer and
//! hypersingular blocks, the hypersingular block annihilating constants —
//! while everything else is seeded noise. They deliberately do *not*
//! satisfy the exact adjoint relation between the two double-layer blocks,
//! so anything built on them must hold by linear algebra alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMat;
use crate::operators::OperatorSet;
use crate::spaces::{CoeffKind, DualKind, MassMatrix, OperatorMatrix};

fn noise(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let mut m = DenseMat::zeros(n, n);
    // Column-major fill order keeps the stream layout-independent.
    for j in 0..n {
        for v in m.col_mut(j) {
            *v = rng.gen::<f64>() - 0.5;
        }
    }
    m
}

fn symmetrized(mut m: DenseMat) -> DenseMat {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
    m
}

/// Project symmetrically onto the complement of the constant vector:
/// `P·A·P` with `P = I − 𝟙𝟙ᵀ/n`.
fn deflate_constants(a: &DenseMat) -> DenseMat {
    let n = a.nrows();
    let row_mean: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let col_mean: Vec<f64> = (0..n).map(|j| a.col(j).iter().sum::<f64>() / n as f64).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    DenseMat::from_fn(n, n, |i, j| a.get(i, j) - row_mean[i] - col_mean[j] + total)
}

/// Deterministic synthetic operator bundle of dimension `n`.
pub fn synthetic_operator_set(n: usize, seed: u64) -> OperatorSet {
    assert!(n >= 2, "need at least two degrees of freedom");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mass = symmetrized(noise(&mut rng, n));
    mass.scale(0.1);
    let shift = 2.0 + 0.05 * n as f64;
    for i in 0..n {
        mass.add_to(i, i, shift);
    }

    let mut single = symmetrized(noise(&mut rng, n));
    for i in 0..n {
        single.add_to(i, i, 4.0);
    }

    let mut khat = noise(&mut rng, n);
    khat.scale(0.3);

    // Near-adjoint of khat, with a small asymmetric defect on purpose.
    let mut kprime = khat.transpose();
    kprime.scale(-1.0);
    let mut defect = noise(&mut rng, n);
    defect.scale(0.001);
    kprime.scaled_add(1.0, &defect);

    let mut core = symmetrized(noise(&mut rng, n));
    for i in 0..n {
        core.add_to(i, i, 3.0);
    }
    let hyper = deflate_constants(&core);

    OperatorSet {
        mass: MassMatrix::new(mass),
        single_layer: OperatorMatrix::new(CoeffKind::Flux, DualKind::TraceData, true, single),
        double_layer: OperatorMatrix::new(CoeffKind::Trace, DualKind::TraceData, false, khat),
        adjoint_double_layer: OperatorMatrix::new(CoeffKind::Flux, DualKind::FluxData, false, kprime),
        hypersingular: OperatorMatrix::new(CoeffKind::Trace, DualKind::FluxData, true, hyper),
    }
}

/// Deterministic random jump data sized for `ops`, for benchmarking the
/// solvers without a manufactured case.
pub fn synthetic_jump_data(
    ops: &OperatorSet,
    seed: u64,
    eps0: f64,
    eps1: f64,
) -> Result<crate::solver::JumpProblemData, crate::solver::SolverError> {
    let n = ops.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let g1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    crate::solver::JumpProblemData::new(
        crate::spaces::DualVec::new(DualKind::TraceData, g0),
        crate::spaces::DualVec::new(DualKind::FluxData, g1),
        eps0,
        eps1,
    )
}
