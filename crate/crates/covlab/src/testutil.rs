//! Deterministic matrix fixtures shared by the unit tests.

use ndarray::Array2;

use crate::matcore::{SpdMatrix, SymmetricMatrix};
use crate::randmat::{derive_stream, SeedStream};

const TEST_TAG: u64 = 0x7E57;

fn stream(seed: u64) -> SeedStream {
    derive_stream(seed, TEST_TAG, 0)
}

/// Dense symmetric matrix with i.i.d. standard normal upper triangle.
pub(crate) fn random_symmetric(p: usize, seed: u64) -> SymmetricMatrix {
    let mut s = stream(seed);
    let mut m = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let x = s.next_gaussian();
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    SymmetricMatrix::new(m).expect("construction from finite symmetric entries")
}

/// Well-conditioned random SPD matrix `GᵀG/p + I/2`.
pub(crate) fn random_spd(p: usize, seed: u64) -> SpdMatrix {
    let mut s = stream(seed);
    let mut g = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = s.next_gaussian();
        }
    }
    let mut a = g.t().dot(&g);
    a.mapv_inplace(|x| x / p as f64);
    for i in 0..p {
        a[(i, i)] += 0.5;
    }
    SpdMatrix::new(SymmetricMatrix::symmetrize(a)).expect("shifted Gram matrix is SPD")
}

/// SPD matrix with random eigenvectors and eigenvalues drawn uniformly
/// from [lo, hi]: spectra stay inside a known window.
pub(crate) fn spd_with_spectrum(p: usize, seed: u64, lo: f64, hi: f64) -> SpdMatrix {
    let decomp = random_symmetric(p, seed ^ 0x5EED).eigh().expect("eigh converges");
    let mut s = stream(seed);
    let vals: Vec<f64> = (0..p).map(|_| s.next_uniform(lo, hi)).collect();
    SpdMatrix::new(decomp.assemble(&vals)).expect("positive spectrum is SPD")
}

/// A pair of independent spectrum-confined SPD matrices.
pub(crate) fn spd_pair_with_spectrum(
    p: usize,
    seed: u64,
    lo: f64,
    hi: f64,
) -> (SpdMatrix, SpdMatrix) {
    (
        spd_with_spectrum(p, seed.wrapping_mul(2).wrapping_add(1), lo, hi),
        spd_with_spectrum(p, seed.wrapping_mul(2).wrapping_add(2), lo, hi),
    )
}
