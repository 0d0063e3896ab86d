use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::generators::complex_gaussian;
use crate::linalg::{CMatrix, HermitianMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let m = random_complex(d, d, rng);
    HermitianMatrix::new((&m + m.adjoint()).scale(0.5)).unwrap()
}

/// `X X^†` for a `d x rank` Gaussian `X`.
pub fn random_psd(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let x = random_complex(d, rank, rng);
    HermitianMatrix::new(&x * x.adjoint()).unwrap()
}
