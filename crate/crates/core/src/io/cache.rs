use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::{ReadError, ReadResult};
use crate::formats::TripletMatrix;
use crate::{to_idx, Idx};

/// File tag; the final byte is the format version.
pub const CACHE_MAGIC: &[u8; 8] = b"SPMVLAB1";

/// Writes the magic, `m`, `n`, `nnz`, then the row, column and value streams,
/// all as 64-bit little-endian fields.
pub fn cache_write<W: Write>(a: &TripletMatrix, w: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(CACHE_MAGIC)?;
    for v in [a.m(), a.n(), a.nnz()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for &r in a.row_ind() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for &c in a.col_ind() {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    for &v in a.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn cache_write_file(a: &TripletMatrix, path: impl AsRef<Path>) -> std::io::Result<()> {
    cache_write(a, File::create(path)?)
}

pub fn cache_read_file(path: impl AsRef<Path>) -> ReadResult<TripletMatrix> {
    cache_read(File::open(path)?)
}

fn read_word<R: Read>(r: &mut R) -> ReadResult<[u8; 8]> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => ReadError::Truncated,
        _ => ReadError::Io(e),
    })?;
    Ok(buf)
}

fn read_size<R: Read>(r: &mut R, what: &'static str) -> ReadResult<usize> {
    let v = u64::from_le_bytes(read_word(r)?);
    usize::try_from(v).map_err(|_| ReadError::Matrix(crate::Error::IndexOverflow(format!("{what} = {v}"))))
}

/// Reads a cache written by [`cache_write`]. Nothing is returned unless the
/// whole file is consistent.
pub fn cache_read<R: Read>(r: R) -> ReadResult<TripletMatrix> {
    let mut r = BufReader::new(r);
    let magic = read_word(&mut r).map_err(|e| match e {
        ReadError::Truncated => ReadError::BadMagic,
        other => other,
    })?;
    if magic[..7] != CACHE_MAGIC[..7] {
        return Err(ReadError::BadMagic);
    }
    if magic[7] != CACHE_MAGIC[7] {
        return Err(ReadError::BadVersion(magic[7] as char));
    }
    let m = read_size(&mut r, "rows")?;
    let n = read_size(&mut r, "columns")?;
    let nnz = read_size(&mut r, "nnz")?;
    to_idx(nnz, "nnz")?;
    // Grow as data arrives rather than trusting the header with a huge allocation.
    let cap = nnz.min(1 << 20);
    let mut index_stream = |bound: usize, what: &'static str| -> ReadResult<Vec<Idx>> {
        let mut out = Vec::with_capacity(cap);
        for _ in 0..nnz {
            let v = u64::from_le_bytes(read_word(&mut r)?);
            if v >= bound as u64 {
                return Err(ReadError::Matrix(crate::Error::CorruptFormat(format!(
                    "{what} index {v} outside dimension {bound}"
                ))));
            }
            out.push(v as Idx);
        }
        Ok(out)
    };
    let rows = index_stream(m, "row")?;
    let cols = index_stream(n, "column")?;
    let mut data = Vec::with_capacity(cap);
    for _ in 0..nnz {
        data.push(f64::from_le_bytes(read_word(&mut r)?));
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(ReadError::TrailingData);
    }
    TripletMatrix::new(m, n, rows, cols, data).map_err(ReadError::from_matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{e4, random_matrix};

    fn round_trip(a: &TripletMatrix) -> TripletMatrix {
        let mut buf = Vec::new();
        cache_write(a, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 24 * a.nnz());
        cache_read(buf.as_slice()).unwrap()
    }

    #[test]
    fn exact_round_trips() {
        for a in [e4(), TripletMatrix::empty(0, 0).unwrap(), TripletMatrix::empty(5, 9).unwrap(), random_matrix(40, 30, 0.1, 3)] {
            let b = round_trip(&a);
            assert_eq!(b, a);
        }
        let special = TripletMatrix::from_entries(1, 3, [(0, 0, -0.0), (0, 1, f64::MIN_POSITIVE / 3.0), (0, 2, f64::MAX)]).unwrap();
        let back = round_trip(&special);
        assert!(back.data().iter().zip(special.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn layout_is_little_endian() {
        let mut buf = Vec::new();
        cache_write(&e4(), &mut buf).unwrap();
        assert_eq!(&buf[..8], b"SPMVLAB1");
        assert_eq!(&buf[8..16], &4u64.to_le_bytes());
        assert_eq!(&buf[24..32], &5u64.to_le_bytes());
        assert_eq!(&buf[32..40], &0u64.to_le_bytes());
        assert_eq!(&buf[32 + 80..32 + 88], &1.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        cache_write(&e4(), &mut buf).unwrap();
        for cut in [0, 5, 8, 20, 40, buf.len() - 1] {
            let err = cache_read(&buf[..cut]).unwrap_err();
            assert!(matches!(err, ReadError::Truncated | ReadError::BadMagic), "cut {cut}: {err:?}");
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(cache_read(bad.as_slice()), Err(ReadError::BadMagic)));
        let mut bad = buf.clone();
        bad[7] = b'2';
        assert!(matches!(cache_read(bad.as_slice()), Err(ReadError::BadVersion('2'))));
        let mut bad = buf.clone();
        bad.push(0);
        assert!(matches!(cache_read(bad.as_slice()), Err(ReadError::TrailingData)));
        let mut bad = buf.clone();
        bad[32..40].copy_from_slice(&9u64.to_le_bytes());
        assert!(matches!(cache_read(bad.as_slice()), Err(ReadError::Matrix(_))));
    }
}
