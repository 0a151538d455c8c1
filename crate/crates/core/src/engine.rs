//! One front end over the eleven multiplication engines.

use std::fmt;
use std::str::FromStr;

use crate::blocked::{
    build_bcoh, build_csb, build_mergeb, select_block_size, BcohLayout, BcohMatrix, BlockSize, CsbMatrix,
    MergeBlockMatrix, BCOH_INDEX_BITS, CSB_INDEX_BITS, DEFAULT_L2_BYTES,
};
use crate::formats::{CrsMatrix, TripletMatrix};
use crate::parallel::{
    spmv_bcoh_into, spmv_csb_into, spmv_merge_into, spmv_mergeb_into, spmv_parcrs_into, WorkerPool,
};
use crate::sfc::CurveKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Sequential CRS, the baseline.
    Crs,
    /// Row-parallel CRS with dynamic chunks.
    ParCrs,
    /// Merge-path CRS.
    Merge,
    /// Compressed sparse blocks, Z-Morton inside blocks.
    Csb,
    /// Compressed sparse blocks, Hilbert inside blocks.
    Csbh,
    Bcoh,
    Bcohc,
    Bcohch,
    Bcohchp,
    /// Merge path over a CRS of row-wise blocks.
    MergeB,
    /// Merge path over a CRS of Hilbert-ordered blocks.
    MergeBh,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Crs,
        Algorithm::ParCrs,
        Algorithm::Merge,
        Algorithm::Csb,
        Algorithm::Csbh,
        Algorithm::Bcoh,
        Algorithm::Bcohc,
        Algorithm::Bcohch,
        Algorithm::Bcohchp,
        Algorithm::MergeB,
        Algorithm::MergeBh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Crs => "CRS",
            Algorithm::ParCrs => "ParCRS",
            Algorithm::Merge => "Merge",
            Algorithm::Csb => "CSB",
            Algorithm::Csbh => "CSBH",
            Algorithm::Bcoh => "BCOH",
            Algorithm::Bcohc => "BCOHC",
            Algorithm::Bcohch => "BCOHCH",
            Algorithm::Bcohchp => "BCOHCHP",
            Algorithm::MergeB => "MergeB",
            Algorithm::MergeBh => "MergeBH",
        }
    }

    fn bcoh_layout(self) -> Option<BcohLayout> {
        match self {
            Algorithm::Bcoh => Some(BcohLayout::Bcoh),
            Algorithm::Bcohc => Some(BcohLayout::Bcohc),
            Algorithm::Bcohch => Some(BcohLayout::Bcohch),
            Algorithm::Bcohchp => Some(BcohLayout::Bcohchp),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// Parameters that shape a prepared matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    /// Workers the BCOH family is partitioned for.
    pub threads: usize,
    pub l2_bytes: usize,
    /// Overrides the automatic block size (still subject to format caps).
    pub block_size: Option<BlockSize>,
    /// CSB split threshold in nonzeros; `None` means `2 * beta`.
    pub split_threshold: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            threads: 1,
            l2_bytes: DEFAULT_L2_BYTES,
            block_size: None,
            split_threshold: None,
        }
    }
}

impl BuildConfig {
    pub fn with_threads(threads: usize) -> Self {
        BuildConfig {
            threads,
            ..Default::default()
        }
    }

    fn block_size(&self, a: &TripletMatrix, cap: u32) -> BlockSize {
        self.block_size
            .unwrap_or_else(|| select_block_size(a.m().max(a.n()).max(1), cap, self.l2_bytes, std::mem::size_of::<f64>()))
    }
}

/// Storage behind a [`PreparedMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Crs(CrsMatrix),
    Csb(CsbMatrix),
    Bcoh(BcohMatrix),
    MergeB(MergeBlockMatrix),
}

/// A matrix converted for one algorithm, ready to multiply.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMatrix {
    algorithm: Algorithm,
    storage: Storage,
    split_threshold: usize,
}

impl PreparedMatrix {
    /// Converts `a` into the storage `algorithm` needs.
    pub fn build(a: &TripletMatrix, algorithm: Algorithm, config: &BuildConfig) -> Result<Self> {
        let storage = match algorithm {
            Algorithm::Crs | Algorithm::ParCrs | Algorithm::Merge => {
                CrsMatrix::check_fits(a)?;
                Storage::Crs(CrsMatrix::from_triplet(a))
            }
            Algorithm::Csb | Algorithm::Csbh => {
                let curve = if algorithm == Algorithm::Csb {
                    CurveKind::ZMorton
                } else {
                    CurveKind::Hilbert
                };
                Storage::Csb(build_csb(a, config.block_size(a, CSB_INDEX_BITS), curve)?)
            }
            Algorithm::MergeB | Algorithm::MergeBh => Storage::MergeB(build_mergeb(
                a,
                config.block_size(a, CSB_INDEX_BITS),
                algorithm == Algorithm::MergeBh,
            )?),
            _ => {
                let layout = algorithm.bcoh_layout().expect("remaining algorithms are BCOH variants");
                Storage::Bcoh(build_bcoh(a, config.block_size(a, BCOH_INDEX_BITS), config.threads, layout)?)
            }
        };
        let split_threshold = match &storage {
            Storage::Csb(c) => config.split_threshold.unwrap_or(2 * c.beta().beta()),
            _ => 0,
        };
        Ok(PreparedMatrix {
            algorithm,
            storage,
            split_threshold,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    /// Mutable storage access for fault-injection tests.
    #[doc(hidden)]
    pub fn storage_mut(&mut self) -> &mut Storage {
        &mut self.storage
    }

    pub fn m(&self) -> usize {
        match &self.storage {
            Storage::Crs(a) => a.m(),
            Storage::Csb(a) => a.m(),
            Storage::Bcoh(a) => a.m(),
            Storage::MergeB(a) => a.m(),
        }
    }

    pub fn n(&self) -> usize {
        match &self.storage {
            Storage::Crs(a) => a.n(),
            Storage::Csb(a) => a.n(),
            Storage::Bcoh(a) => a.n(),
            Storage::MergeB(a) => a.n(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Crs(a) => a.nnz(),
            Storage::Csb(a) => a.nnz(),
            Storage::Bcoh(a) => a.nnz(),
            Storage::MergeB(a) => a.nnz(),
        }
    }

    /// Block side, for blocked storage.
    pub fn block_size(&self) -> Option<BlockSize> {
        match &self.storage {
            Storage::Crs(_) => None,
            Storage::Csb(a) => Some(a.beta()),
            Storage::Bcoh(a) => Some(a.beta()),
            Storage::MergeB(a) => Some(a.beta()),
        }
    }

    /// Nonzeros in the order the engine visits them.
    pub fn storage_order(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            Storage::Crs(a) => a.to_triplet().iter().collect(),
            Storage::Csb(a) => a.storage_order(),
            Storage::Bcoh(a) => a.storage_order(),
            Storage::MergeB(a) => a.storage_order(),
        }
    }

    pub fn to_triplet(&self) -> Result<TripletMatrix> {
        TripletMatrix::from_entries(self.m(), self.n(), self.storage_order())
    }

    /// `y = A x`, overwriting `y`. Sequential CRS ignores `pool`; the BCOH
    /// family requires `pool` to have as many workers as it has bands.
    pub fn multiply_into(&self, x: &[f64], y: &mut [f64], pool: &WorkerPool) -> Result<()> {
        match (&self.storage, self.algorithm) {
            (Storage::Crs(a), Algorithm::Crs) => a.spmv_into(x, y),
            (Storage::Crs(a), Algorithm::ParCrs) => spmv_parcrs_into(a, x, y, pool),
            (Storage::Crs(a), _) => spmv_merge_into(a, x, y, pool),
            (Storage::Csb(a), _) => spmv_csb_into(a, x, y, pool, self.split_threshold),
            (Storage::Bcoh(a), _) => spmv_bcoh_into(a, x, y, pool),
            (Storage::MergeB(a), _) => spmv_mergeb_into(a, x, y, pool),
        }
    }

    pub fn multiply(&self, x: &[f64], pool: &WorkerPool) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.m()];
        self.multiply_into(x, &mut y, pool)?;
        Ok(y)
    }
}
