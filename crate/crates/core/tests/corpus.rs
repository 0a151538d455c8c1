use std::path::PathBuf;

use spmv_core::formats::TripletMatrix;
use spmv_core::io::{cache_read, cache_write, read_matrix_market_file, read_matrix_market_with_header, Field, ReadError, Symmetry};

fn data(dir: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(dir)
}

fn files(dir: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(data(dir)).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    out
}

#[test]
fn every_valid_file_parses_and_caches() {
    let valid = files("valid");
    assert!(valid.len() >= 10);
    let mut combos = std::collections::HashSet::new();
    for path in valid {
        let text = std::fs::read_to_string(&path).unwrap();
        let (header, a) = read_matrix_market_with_header(text.as_bytes()).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        combos.insert((header.field, header.symmetry));
        assert_eq!((a.m(), a.n()), (header.m, header.n));
        let diagonal = a.iter().filter(|(r, c, _)| r == c).count();
        match header.symmetry {
            Symmetry::General => assert_eq!(a.nnz(), header.declared_nnz),
            Symmetry::Symmetric => assert_eq!(a.nnz(), 2 * header.declared_nnz - diagonal),
        }
        let mut buf = Vec::new();
        cache_write(&a, &mut buf).unwrap();
        assert_eq!(cache_read(buf.as_slice()).unwrap(), a);
    }
    for field in [Field::Real, Field::Integer, Field::Pattern] {
        for symmetry in [Symmetry::General, Symmetry::Symmetric] {
            assert!(combos.contains(&(field, symmetry)), "no file for {field:?} {symmetry:?}");
        }
    }
}

#[test]
fn specific_contents() {
    let e4 = read_matrix_market_file(data("valid").join("e4_real_general.mtx")).unwrap();
    let expected = TripletMatrix::from_entries(4, 4, [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (3, 0, 4.0), (3, 3, 5.0)]).unwrap();
    assert!(e4.same_nonzeros(&expected));

    let sym = read_matrix_market_file(data("valid").join("real_symmetric.mtx")).unwrap();
    assert_eq!(
        sym.sorted_entries(),
        vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)]
    );

    let pattern = read_matrix_market_file(data("valid").join("pattern_symmetric.mtx")).unwrap();
    assert_eq!(pattern.nnz(), 5);
    assert!(pattern.data().iter().all(|&v| v == 1.0));

    let mixed = read_matrix_market_file(data("valid").join("mixed_case_comments.mtx")).unwrap();
    assert_eq!(mixed.sorted_entries(), vec![(0, 1, 1.5e-3), (1, 0, -225.0)]);

    let empty = read_matrix_market_file(data("valid").join("empty_rectangular.mtx")).unwrap();
    assert_eq!((empty.m(), empty.n(), empty.nnz()), (5, 7, 0));
}

#[test]
fn every_malformed_file_fails_with_its_kind() {
    type Check = fn(&ReadError) -> bool;
    let expect: &[(&str, Check)] = &[
        ("array_format.mtx", |e| matches!(e, ReadError::UnsupportedFormat(_))),
        ("bad_size_line.mtx", |e| matches!(e, ReadError::MalformedHeader { line: 2, .. })),
        ("bad_value.mtx", |e| matches!(e, ReadError::MalformedEntry { line: 3, .. })),
        ("column_out_of_range.mtx", |e| matches!(e, ReadError::IndexOutOfRange { row: 2, col: 4, .. })),
        ("complex_field.mtx", |e| matches!(e, ReadError::UnsupportedField(_))),
        ("duplicate_entry.mtx", |e| matches!(e, ReadError::DuplicateEntry { row: 1, col: 1 })),
        ("empty_file.mtx", |e| matches!(e, ReadError::MalformedHeader { .. })),
        ("missing_banner.mtx", |e| matches!(e, ReadError::MalformedHeader { line: 1, .. })),
        ("missing_value.mtx", |e| matches!(e, ReadError::MalformedEntry { .. })),
        ("skew_symmetric.mtx", |e| matches!(e, ReadError::UnsupportedSymmetry(_))),
        ("symmetric_mirror_duplicate.mtx", |e| matches!(e, ReadError::DuplicateEntry { .. })),
        ("symmetric_not_square.mtx", |e| matches!(e, ReadError::MalformedHeader { .. })),
        ("too_few_entries.mtx", |e| matches!(e, ReadError::EntryCountMismatch { declared: 3, found: 2 })),
        ("too_many_entries.mtx", |e| matches!(e, ReadError::EntryCountMismatch { declared: 1, found: 2 })),
        ("zero_index.mtx", |e| matches!(e, ReadError::IndexOutOfRange { row: 0, .. })),
    ];
    let on_disk: Vec<String> = files("invalid").iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(on_disk.len(), expect.len());
    for (name, check) in expect {
        assert!(on_disk.contains(&name.to_string()), "{name} missing");
        let err = read_matrix_market_file(data("invalid").join(name)).unwrap_err();
        assert!(check(&err), "{name}: unexpected {err:?}");
    }
}
