use super::{split_at_cuts, WorkerPool};
use crate::blocked::BcohMatrix;
use crate::formats::check_len;
use crate::{Error, Result};

/// Statically partitioned BCOH: worker `t` sweeps band `t` and writes only
/// that band's rows. The pool size must equal the band count.
pub fn spmv_bcoh(a: &BcohMatrix, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.m()];
    spmv_bcoh_into(a, x, &mut y, pool)?;
    Ok(y)
}

/// [`spmv_bcoh`] into a caller-provided output.
pub fn spmv_bcoh_into(a: &BcohMatrix, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<()> {
    check_len("x", a.n(), x.len())?;
    check_len("y", a.m(), y.len())?;
    if pool.threads() != a.threads() {
        return Err(Error::ThreadCountMismatch {
            expected: a.threads(),
            found: pool.threads(),
        });
    }
    let mut cuts: Vec<usize> = a.bands().iter().map(|b| b.first_row()).collect();
    cuts.push(a.m());
    let slices = split_at_cuts(y, &cuts);
    pool.rayon().scope(|s| {
        for (band, y_band) in a.bands().iter().zip(slices) {
            s.spawn(move |_| {
                y_band.fill(0.0);
                band.multiply(x, y_band);
            });
        }
    });
    Ok(())
}
