use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formats::TripletMatrix;
use crate::{to_idx, Error, Idx, Result};

/// Seeded unstructured test matrix with exactly `target_nnz` nonzeros.
///
/// Rows receive weights `(k + 1)^-row_skew_exponent` for their position `k`
/// in a random permutation, row counts are a multinomial draw with those
/// weights (truncated at `n`, excess redrawn among rows with room), and
/// columns are uniform without replacement. Values are uniform in `[-1, 1)`
/// and the entries are returned in shuffled order.
pub fn generate_synthetic(m: usize, n: usize, target_nnz: usize, row_skew_exponent: f64, seed: u64) -> Result<TripletMatrix> {
    let capacity = (m as u128) * (n as u128);
    if target_nnz as u128 > capacity {
        return Err(Error::InvalidArgument(format!(
            "{target_nnz} nonzeros do not fit a {m}x{n} matrix"
        )));
    }
    if !row_skew_exponent.is_finite() || row_skew_exponent < 0.0 {
        return Err(Error::InvalidArgument(format!("row skew exponent {row_skew_exponent} must be finite and >= 0")));
    }
    to_idx(m, "rows")?;
    to_idx(n, "columns")?;
    to_idx(target_nnz, "nnz")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut weight = vec![0.0f64; m];
    for (k, &r) in order.iter().enumerate() {
        weight[r] = ((k + 1) as f64).powf(-row_skew_exponent);
    }

    let mut counts = vec![0usize; m];
    let mut pending = target_nnz;
    while pending > 0 {
        let open: Vec<usize> = (0..m).filter(|&r| counts[r] < n).collect();
        let mut w: Vec<f64> = open.iter().map(|&r| weight[r]).collect();
        if w.iter().all(|&x| x <= 0.0) {
            w.iter_mut().for_each(|x| *x = 1.0);
        }
        let dist = WeightedIndex::new(&w).expect("weights are finite and not all zero");
        for _ in 0..pending {
            counts[open[dist.sample(&mut rng)]] += 1;
        }
        pending = 0;
        for c in counts.iter_mut() {
            if *c > n {
                pending += *c - n;
                *c = n;
            }
        }
    }

    let mut entries: Vec<(Idx, Idx, f64)> = Vec::with_capacity(target_nnz);
    let uniform = rand::distributions::Uniform::new(-1.0, 1.0);
    for (r, &k) in counts.iter().enumerate() {
        if k == 0 {
            continue;
        }
        for c in index::sample(&mut rng, n, k) {
            entries.push((r as Idx, c as Idx, uniform.sample(&mut rng)));
        }
    }
    entries.shuffle(&mut rng);
    let (rows, rest): (Vec<Idx>, Vec<(Idx, f64)>) = entries.into_iter().map(|(r, c, v)| (r, (c, v))).unzip();
    let (cols, data) = rest.into_iter().unzip();
    TripletMatrix::new(m, n, rows, cols, data)
}
