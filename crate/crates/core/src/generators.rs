//! Seeded random and structured ensembles.
//!
//! All generators are deterministic in their parameters and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, CVector, C64};
use crate::state::{validate_density, DensityMatrix, Ensemble, STATE_TOL};

/// Standard complex Gaussian with `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn check_sizes(d: usize, n: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::EnsembleTooSmall(n));
    }
    Ok(())
}

/// `n` Haar-random pure states in dimension `d`.
pub fn gen_haar_pure(d: usize, n: usize, seed: u64) -> Result<Ensemble> {
    check_sizes(d, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n)
        .map(|_| {
            let v = CVector::from_fn(d, |_, _| complex_gaussian(&mut rng));
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect();
    Ensemble::from_pure_vectors(vectors, STATE_TOL)
}

/// `n` states `d^{-1/2} sum_i z_i |i>` with `z_i` uniform on `{+1, -1}`.
/// Duplicates are not removed.
pub fn gen_sign_states(d: usize, n: usize, seed: u64) -> Result<Ensemble> {
    check_sizes(d, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 1.0 / (d as f64).sqrt();
    let vectors = (0..n)
        .map(|_| {
            CVector::from_fn(d, |_, _| {
                if rng.random::<bool>() {
                    c64(amp, 0.0)
                } else {
                    c64(-amp, 0.0)
                }
            })
        })
        .collect();
    Ensemble::from_pure_vectors(vectors, STATE_TOL)
}

/// `n` real pure states in dimension `n` with every pairwise inner product
/// equal to `c`: the columns of `sqrt((1-c) I + c J)`.
pub fn gen_equal_overlap(n: usize, c: f64) -> Result<Ensemble> {
    if n < 2 {
        return Err(Error::EnsembleTooSmall(n));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "overlap c = {c} must lie in [0, 1)"
        )));
    }
    // sqrt(a I + c J) = sqrt(a) I + b J, with the J-eigenvalue fixing b.
    let a = (1.0 - c).sqrt();
    let top = (1.0 + c * (n as f64 - 1.0)).sqrt();
    let b = (top - a) / n as f64;
    let root = CMatrix::from_fn(n, n, |i, j| c64(if i == j { a + b } else { b }, 0.0));
    let vectors = (0..n).map(|j| root.column(j).into_owned()).collect();
    Ensemble::from_pure_vectors(vectors, STATE_TOL)
}

/// `n` states `X X^† / tr(X X^†)` with `X` a `d x rank` complex Gaussian matrix.
pub fn gen_ginibre_mixed(d: usize, rank: usize, n: usize, seed: u64) -> Result<Ensemble> {
    check_sizes(d, n)?;
    if rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} must lie in 1..={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..n)
        .map(|_| {
            let x = CMatrix::from_fn(d, rank, |_, _| complex_gaussian(&mut rng));
            if rank == 1 {
                let v = x.column(0).into_owned();
                let norm = v.norm();
                return DensityMatrix::pure(v.unscale(norm), STATE_TOL);
            }
            let w = &x * x.adjoint();
            let tr = w.trace().re;
            validate_density(w.unscale(tr), STATE_TOL)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(states)
}
