#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spmv_core::formats::TripletMatrix;

/// Classic Hilbert index with x = column, y = row on a `2^level` grid.
pub fn reference_hilbert(row: u64, col: u64, level: u32) -> u64 {
    let n = 1u64 << level;
    let (mut x, mut y) = (col, row);
    let mut d = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = ((x & s) > 0) as u64;
        let ry = ((y & s) > 0) as u64;
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

/// Bit-by-bit interleave, row bit above column bit.
pub fn reference_morton(row: u64, col: u64, level: u32) -> u64 {
    (0..level).fold(0, |acc, bit| {
        acc | (((row >> bit) & 1) << (2 * bit + 1)) | (((col >> bit) & 1) << (2 * bit))
    })
}

pub fn ceil_log2(x: usize) -> u32 {
    let mut level = 0;
    while (1usize << level) < x {
        level += 1;
    }
    level
}

pub fn random_matrix(m: usize, n: usize, density: f64, seed: u64) -> TripletMatrix {
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

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Elementwise comparison scaled by each row's absolute sum of products.
pub fn within(a: &TripletMatrix, x: &[f64], y: &[f64], reference: &[f64], rel: f64) -> Result<(), String> {
    if y.len() != reference.len() {
        return Err(format!("length {} vs {}", y.len(), reference.len()));
    }
    let mut scale = vec![0.0f64; a.m()];
    for (r, c, v) in a.iter() {
        scale[r] += (v * x[c]).abs();
    }
    for i in 0..y.len() {
        let tol = rel * scale[i] + 1e-300;
        if (y[i] - reference[i]).abs() > tol {
            return Err(format!("row {i}: {} vs {} (tol {tol:e})", y[i], reference[i]));
        }
    }
    Ok(())
}
