//! Fixtures shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formats::TripletMatrix;

/// The 4x4 example with entries (0,0)=1, (0,2)=2, (1,1)=3, (3,0)=4, (3,3)=5.
pub(crate) fn e4() -> TripletMatrix {
    TripletMatrix::from_entries(4, 4, [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (3, 0, 4.0), (3, 3, 5.0)]).unwrap()
}

pub(crate) fn dense_oracle(a: &TripletMatrix, x: &[f64]) -> Vec<f64> {
    let mut dense = vec![vec![0.0; a.n()]; a.m()];
    for (r, c, v) in a.iter() {
        dense[r][c] = v;
    }
    dense.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Random matrix with roughly `density * m * n` entries in shuffled order.
pub(crate) fn random_matrix(m: usize, n: usize, density: f64, seed: u64) -> TripletMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if rng.gen::<f64>() < density {
                entries.push((r, c, rng.gen_range(-2.0..2.0)));
            }
        }
    }
    for i in (1..entries.len()).rev() {
        let j = rng.gen_range(0..=i);
        entries.swap(i, j);
    }
    TripletMatrix::from_entries(m, n, entries).unwrap()
}

pub(crate) fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Elementwise check against a reference, scaled by the absolute row sum so
/// that cancellation does not masquerade as error.
pub(crate) fn assert_close(a: &TripletMatrix, x: &[f64], y: &[f64], reference: &[f64], rel: f64) {
    assert_eq!(y.len(), reference.len());
    let mut scale = vec![0.0f64; a.m()];
    for (r, c, v) in a.iter() {
        scale[r] += (v * x[c]).abs();
    }
    for i in 0..y.len() {
        let tol = rel * scale[i] + 1e-300;
        assert!(
            (y[i] - reference[i]).abs() <= tol,
            "row {i}: got {}, expected {} (tol {tol})",
            y[i],
            reference[i]
        );
    }
}
