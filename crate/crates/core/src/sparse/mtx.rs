//! Matrix Market coordinate format.
//!
//! Supported: `matrix coordinate` with `real`, `integer` or `pattern` fields and
//! `general`, `symmetric` or `skew-symmetric` symmetry. Array format and complex
//! fields are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Layout, SparseMatrix};
use crate::{Error, ParseErrorKind, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn perr(line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse { line, kind }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Field, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(perr(line_no, ParseErrorKind::MalformedHeader(line.trim().to_string())));
    }
    if tokens[2] != "coordinate" {
        return Err(perr(
            line_no,
            ParseErrorKind::Unsupported(format!("format `{}`", tokens[2])),
        ));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" => Field::Pattern,
        "complex" => return Err(perr(line_no, ParseErrorKind::Unsupported("complex field".into()))),
        other => {
            return Err(perr(
                line_no,
                ParseErrorKind::MalformedHeader(format!("unknown field `{other}`")),
            ))
        }
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => return Err(perr(line_no, ParseErrorKind::Unsupported("hermitian symmetry".into()))),
        other => {
            return Err(perr(
                line_no,
                ParseErrorKind::MalformedHeader(format!("unknown symmetry `{other}`")),
            ))
        }
    };
    Ok((field, symmetry))
}

/// Reads a Matrix Market coordinate stream into a CSR matrix.
///
/// Symmetric storage is expanded, pattern entries get value 1.0, duplicate
/// coordinates are summed and explicit zeros are dropped.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (first_no, first) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(perr(1, ParseErrorKind::MalformedHeader(String::new()))),
    };
    let (field, symmetry) = parse_header(first_no, &first)?;

    // Size line: first non-comment, non-blank line after the header.
    let mut size = None;
    let mut last_line = first_no;
    for (n, line) in lines.by_ref() {
        let line = line?;
        last_line = n;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let nums: Vec<Option<usize>> = t.split_whitespace().map(|x| x.parse().ok()).collect();
        match nums.as_slice() {
            [Some(r), Some(c), Some(nnz)] => size = Some((*r, *c, *nnz)),
            _ => return Err(perr(n, ParseErrorKind::MalformedSizeLine(t.to_string()))),
        }
        break;
    }
    let (rows, cols, declared) = match size {
        Some(s) => s,
        None => {
            return Err(perr(
                last_line + 1,
                ParseErrorKind::MalformedSizeLine("missing size line".into()),
            ))
        }
    };

    if symmetry != Symmetry::General && rows != cols {
        return Err(perr(
            first_no,
            ParseErrorKind::Unsupported("non-square symmetric matrix".into()),
        ));
    }

    let mut triplets = Vec::with_capacity(if symmetry == Symmetry::General {
        declared
    } else {
        2 * declared
    });
    let mut found = 0usize;
    for (n, line) in lines {
        let line = line?;
        last_line = n;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if found == declared {
            return Err(perr(n, ParseErrorKind::MalformedEntry(format!("extra entry `{t}`"))));
        }
        let mut parts = t.split_whitespace();
        let bad = || perr(n, ParseErrorKind::MalformedEntry(t.to_string()));
        let r: usize = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let c: usize = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let v: f64 = match field {
            Field::Pattern => 1.0,
            Field::Real => parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(perr(n, ParseErrorKind::OutOfRange { row: r, col: c }));
        }
        let (r, c) = (r - 1, c - 1);
        triplets.push((r, c, v));
        if r != c {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((c, r, v)),
                Symmetry::SkewSymmetric => triplets.push((c, r, -v)),
            }
        }
        found += 1;
    }
    if found < declared {
        return Err(perr(
            last_line + 1,
            ParseErrorKind::Truncated {
                expected: declared,
                found,
            },
        ));
    }

    SparseMatrix::from_triplets(rows, cols, Layout::Csr, &triplets)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = File::open(path.as_ref())?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes `m` as a `real general` coordinate file in row-major entry order.
///
/// Values are printed in shortest round-trip form so a re-read is exact.
pub fn write_matrix_market<W: Write>(m: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c, v) in m.sorted_entries() {
        writeln!(out, "{} {} {:?}", r + 1, c + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market_file(m: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_matrix_market(m, BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{random_sparse, Pattern};

    fn parse(s: &str) -> Result<SparseMatrix> {
        parse_matrix_market(s.as_bytes())
    }

    fn parse_line_of(s: &str) -> (usize, ParseErrorKind) {
        match parse(s) {
            Err(Error::Parse { line, kind }) => (line, kind),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 5.0\n").unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), Some(5.0));
        assert_eq!(m.layout(), Layout::Csr);
    }

    #[test]
    fn symmetric_expansion() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 2\n2 1 4.5\n3 3 -1\n").unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), Some(4.5));
        assert_eq!(m.get(0, 1), Some(4.5));
        assert_eq!(m.get(2, 2), Some(-1.0));
    }

    #[test]
    fn skew_symmetric_mirrors_negated() {
        let m = parse("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(m.get(0, 1), Some(-3.0));
        assert_eq!(m.get(1, 0), Some(3.0));
    }

    #[test]
    fn pattern_duplicates_and_zeros() {
        let m = parse("%%MatrixMarket matrix coordinate pattern general\n2 2 3\n1 1\n1 1\n2 2\n").unwrap();
        assert_eq!(m.get(0, 0), Some(2.0));
        assert_eq!(m.get(1, 1), Some(1.0));

        let z = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.0\n2 2 1.5\n").unwrap();
        assert_eq!(z.nnz(), 1);
    }

    #[test]
    fn error_cases_name_their_line() {
        let (line, kind) = parse_line_of("%%MatrixMarket matrix coordinates real general\n1 1 1\n1 1 1\n");
        assert_eq!(line, 1);
        assert!(matches!(kind, ParseErrorKind::Unsupported(_)));

        let (line, kind) = parse_line_of("%MatrixMarket matrix coordinate real\n");
        assert_eq!(line, 1);
        assert!(matches!(kind, ParseErrorKind::MalformedHeader(_)));

        let (line, kind) = parse_line_of("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1\n3 1 1\n");
        assert_eq!(line, 5);
        assert_eq!(kind, ParseErrorKind::OutOfRange { row: 3, col: 1 });

        let (line, kind) = parse_line_of("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n");
        assert_eq!(line, 5);
        assert_eq!(kind, ParseErrorKind::Truncated { expected: 3, found: 2 });

        let (line, kind) = parse_line_of("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n");
        assert_eq!(line, 3);
        assert!(matches!(kind, ParseErrorKind::MalformedEntry(_)));

        let (line, kind) = parse_line_of("%%MatrixMarket matrix coordinate real general\n2 2\n");
        assert_eq!(line, 2);
        assert!(matches!(kind, ParseErrorKind::MalformedSizeLine(_)));

        let (line, _) = parse_line_of("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1\n");
        assert_eq!(line, 3);
    }

    #[test]
    fn write_then_parse_is_identity() {
        for (seed, pattern) in [(1, Pattern::Uniform), (2, Pattern::Banded), (3, Pattern::Clustered)] {
            let m = random_sparse(30, 20, 0.15, pattern, seed).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&m, &mut buf).unwrap();
            let back = parse_matrix_market(buf.as_slice()).unwrap();
            assert_eq!(back, m);
        }
    }
}
