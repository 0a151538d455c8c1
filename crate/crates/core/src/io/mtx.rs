use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{ReadError, ReadResult};
use crate::formats::TripletMatrix;
use crate::{to_idx, Idx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Integer,
    Pattern,
}

/// The banner and size line of a coordinate Matrix Market file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub symmetry: Symmetry,
    pub field: Field,
    pub m: usize,
    pub n: usize,
    /// Entries listed in the file, before symmetric expansion.
    pub declared_nnz: usize,
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> ReadResult<TripletMatrix> {
    read_matrix_market_with_header(reader).map(|(_, a)| a)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> ReadResult<TripletMatrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Parses a coordinate Matrix Market body: indices become 0-based, symmetric
/// entries are mirrored, pattern entries get the value 1.0.
pub fn read_matrix_market_with_header<R: BufRead>(reader: R) -> ReadResult<(MatrixHeader, TripletMatrix)> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (line_no, banner) = match lines.next() {
        Some((no, line)) => (no, line?),
        None => {
            return Err(ReadError::MalformedHeader {
                line: 1,
                reason: "empty input".into(),
            })
        }
    };
    let (field, symmetry) = parse_banner(line_no, &banner)?;

    let (m, n, declared_nnz) = loop {
        let Some((no, line)) = lines.next() else {
            return Err(ReadError::MalformedHeader {
                line: line_no + 1,
                reason: "missing size line".into(),
            });
        };
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[m, n, nnz]) => break (m, n, nnz),
            _ => {
                return Err(ReadError::MalformedHeader {
                    line: no,
                    reason: format!("expected `rows cols entries`, found `{trimmed}`"),
                })
            }
        }
    };
    if symmetry == Symmetry::Symmetric && m != n {
        return Err(ReadError::MalformedHeader {
            line: line_no,
            reason: format!("symmetric matrix must be square, got {m}x{n}"),
        });
    }
    let header = MatrixHeader {
        symmetry,
        field,
        m,
        n,
        declared_nnz,
    };

    let expected = declared_nnz.min(1 << 24);
    let factor = if symmetry == Symmetry::Symmetric { 2 } else { 1 };
    let mut rows: Vec<Idx> = Vec::with_capacity(expected * factor);
    let mut cols: Vec<Idx> = Vec::with_capacity(expected * factor);
    let mut data = Vec::with_capacity(expected * factor);
    let mut found = 0usize;
    for (no, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        found += 1;
        if found > declared_nnz {
            continue;
        }
        let (r, c, v) = parse_entry(no, trimmed, field, m, n)?;
        rows.push(to_idx(r, "row")?);
        cols.push(to_idx(c, "column")?);
        data.push(v);
        if symmetry == Symmetry::Symmetric && r != c {
            rows.push(c as Idx);
            cols.push(r as Idx);
            data.push(v);
        }
    }
    if found != declared_nnz {
        return Err(ReadError::EntryCountMismatch {
            declared: declared_nnz,
            found,
        });
    }
    let a = TripletMatrix::new(m, n, rows, cols, data).map_err(ReadError::from_matrix)?;
    Ok((header, a))
}

fn parse_banner(line: usize, banner: &str) -> ReadResult<(Field, Symmetry)> {
    let malformed = |reason: String| ReadError::MalformedHeader { line, reason };
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(malformed("missing `%%MatrixMarket` banner".into()));
    }
    if words.len() != 5 {
        return Err(malformed(format!("expected 4 banner fields, found {}", words.len() - 1)));
    }
    if words[1] != "matrix" {
        return Err(malformed(format!("unsupported object `{}`", words[1])));
    }
    match words[2].as_str() {
        "coordinate" => {}
        "array" => return Err(ReadError::UnsupportedFormat(words[2].clone())),
        other => return Err(malformed(format!("unknown format `{other}`"))),
    }
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(ReadError::UnsupportedField(other.to_string())),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(ReadError::UnsupportedSymmetry(other.to_string())),
    };
    Ok((field, symmetry))
}

fn parse_entry(line: usize, text: &str, field: Field, m: usize, n: usize) -> ReadResult<(usize, usize, f64)> {
    let malformed = |reason: String| ReadError::MalformedEntry { line, reason };
    let parts: Vec<&str> = text.split_whitespace().collect();
    let want = if field == Field::Pattern { 2 } else { 3 };
    if parts.len() != want {
        return Err(malformed(format!("expected {want} fields, found {}", parts.len())));
    }
    let index = |s: &str| s.parse::<i64>().map_err(|_| malformed(format!("bad index `{s}`")));
    let (r, c) = (index(parts[0])?, index(parts[1])?);
    if r < 1 || c < 1 || r as u64 > m as u64 || c as u64 > n as u64 {
        return Err(ReadError::IndexOutOfRange { line, row: r, col: c, m, n });
    }
    let v = match field {
        Field::Pattern => 1.0,
        Field::Integer => parts[2]
            .parse::<i64>()
            .map(|v| v as f64)
            .map_err(|_| malformed(format!("bad integer value `{}`", parts[2])))?,
        Field::Real => parts[2]
            .parse::<f64>()
            .map_err(|_| malformed(format!("bad real value `{}`", parts[2])))?,
    };
    Ok((r as usize - 1, c as usize - 1, v))
}

/// Writes `a` as `coordinate real general` with round-trip precision.
pub fn write_matrix_market<W: Write>(a: &TripletMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.m(), a.n(), a.nnz())?;
    for (r, c, v) in a.iter() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    w.flush()
}
