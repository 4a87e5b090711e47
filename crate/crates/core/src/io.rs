//! File formats.
//!
//! * distributions: CSV with header `x,weight` or `x1,x2[,x3],weight`,
//! * datasets: CSV with one column per dimension, optional header,
//! * moments: CSV with header `j,m` and `j = 1..=k` in order,
//! * coin observations: one integer head count per row, optional header,
//! * matrices: Matrix Market coordinate files, or dense CSV.
//!
//! Parse errors carry the 1-based line number of the offending row.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::cheb::Convention;
use crate::dist::{DiscreteDistribution, MomentVector};
use crate::error::{Error, Result};
use crate::sde::{CsrOperator, DenseOperator};

/// Relative deviation of the total weight above which loading warns.
pub const WEIGHT_SUM_WARNING: f64 = 1e-6;

/// Relative asymmetry tolerated in a `general` Matrix Market file.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => parse_error(
            path,
            line,
            format!("expected {expected_len} fields, found {len}"),
        ),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

/// Numeric CSV rows with their line numbers, plus the header if the file
/// has one (always when `header` is true, otherwise only when the first
/// row is not numeric).
struct Table {
    header: Option<Vec<String>>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table(path: &Path, header: bool) -> Result<Table> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut table = Table { header: None, rows: Vec::new() };
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let numbers: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match numbers {
            Ok(v) if !(header && i == 0) => {
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(parse_error(path, line, format!("non-finite value {x}")));
                }
                table.rows.push((line, v));
            }
            Err(_) if i == 0 => {
                table.header = Some(record.iter().map(|s| s.to_ascii_lowercase()).collect());
            }
            Ok(_) => {
                table.header = Some(record.iter().map(|s| s.to_ascii_lowercase()).collect());
            }
            Err(e) => {
                let bad = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(parse_error(path, line, format!("cannot parse {bad:?} as a number: {e}")));
            }
        }
    }
    Ok(table)
}

/// Reads a distribution, rescaling weights to unit mass.
pub fn read_distribution(path: impl AsRef<Path>) -> Result<DiscreteDistribution> {
    let path = path.as_ref();
    let table = read_table(path, true)?;
    let header = table.header.ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let dim = header.len().saturating_sub(1);
    let expected: Vec<String> = match dim {
        1 => vec!["x".into()],
        2 | 3 => (1..=dim).map(|i| format!("x{i}")).collect(),
        _ => return Err(parse_error(path, 1, format!("expected 2 to 4 columns, found {}", header.len()))),
    };
    if header[..dim] != expected[..] || header[dim] != "weight" {
        return Err(parse_error(
            path,
            1,
            format!("expected header {},weight, found {}", expected.join(","), header.join(",")),
        ));
    }
    if table.rows.is_empty() {
        return Err(parse_error(path, 1, "no rows"));
    }
    let mut points = Vec::with_capacity(table.rows.len() * dim);
    let mut weights = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let w = row[dim];
        if w < 0.0 {
            return Err(parse_error(path, *line, format!("negative weight {w}")));
        }
        if let Some(x) = row[..dim].iter().find(|x| !crate::dist::in_domain(**x)) {
            return Err(parse_error(path, *line, format!("coordinate {x} is outside [-1, 1]")));
        }
        points.extend_from_slice(&row[..dim]);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_WARNING {
        log::warn!("{}: weights sum to {total}; normalizing", path.display());
    }
    DiscreteDistribution::normalized(dim, points, weights)
}

pub fn write_distribution(path: impl AsRef<Path>, d: &DiscreteDistribution) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let header = if d.dim() == 1 {
        "x".to_string()
    } else {
        (1..=d.dim()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
    };
    writeln!(out, "{header},weight").unwrap();
    for (p, w) in d.iter() {
        for x in p {
            write!(out, "{x},").unwrap();
        }
        writeln!(out, "{w}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| io_error(path, e))
}

/// Reads data rows of `dim` columns, flattened row-major.
pub fn read_dataset(path: impl AsRef<Path>, dim: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let table = read_table(path, false)?;
    let mut out = Vec::with_capacity(table.rows.len() * dim);
    for (line, row) in table.rows {
        if row.len() != dim {
            return Err(parse_error(path, line, format!("expected {dim} columns, found {}", row.len())));
        }
        out.extend(row);
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    Ok(out)
}

/// Maps `[lo, hi]` affinely onto `[-1, 1]`.
pub fn affine_rescale(values: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid range [{lo}, {hi}]")));
    }
    Ok(values.iter().map(|x| 2.0 * (x - lo) / (hi - lo) - 1.0).collect())
}

/// Reads plain-convention moments `m_1..=m_k`.
pub fn read_moments(path: impl AsRef<Path>) -> Result<MomentVector> {
    let path = path.as_ref();
    let table = read_table(path, true)?;
    match table.header.as_deref() {
        Some([j, m]) if j == "j" && m == "m" => {}
        _ => return Err(parse_error(path, 1, "expected header j,m")),
    }
    let mut values = Vec::with_capacity(table.rows.len());
    for (line, row) in table.rows {
        if row.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 columns, found {}", row.len())));
        }
        let want = values.len() + 1;
        if row[0] != want as f64 {
            return Err(parse_error(path, line, format!("expected j = {want}, found {}", row[0])));
        }
        values.push(row[1]);
    }
    if values.is_empty() {
        return Err(parse_error(path, 1, "no moments"));
    }
    MomentVector::new(values, Convention::Plain)
}

pub fn write_moments(path: impl AsRef<Path>, m: &MomentVector) -> Result<()> {
    let path = path.as_ref();
    let m = m.to_convention(Convention::Plain);
    let mut out = Vec::new();
    writeln!(out, "j,m").unwrap();
    for (j, v) in m.values().iter().enumerate() {
        writeln!(out, "{},{v}", j + 1).unwrap();
    }
    std::fs::write(path, out).map_err(|e| io_error(path, e))
}

/// Reads nonnegative integer head counts, one per row.
pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let table = read_table(path, false)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, row) in table.rows {
        match row.as_slice() {
            [x] if *x >= 0.0 && x.fract() == 0.0 => out.push(*x as u64),
            [x] => return Err(parse_error(path, line, format!("{x} is not a nonnegative integer"))),
            _ => return Err(parse_error(path, line, format!("expected 1 column, found {}", row.len()))),
        }
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no observations"));
    }
    Ok(out)
}

/// Reads a square symmetric matrix in Matrix Market coordinate format.
/// With the `symmetric` qualifier only the lower triangle is stored and is
/// mirrored; `general` files must be symmetric up to
/// [`SYMMETRY_TOLERANCE`]. Pattern matrices get unit entries.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrOperator> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let banner = banner.map_err(|e| io_error(path, e))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_error(path, 1, "expected a %%MatrixMarket matrix banner"));
    }
    if fields[2] != "coordinate" {
        return Err(parse_error(path, 1, format!("unsupported format {:?}", fields[2])));
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(parse_error(path, 1, format!("unsupported field {other:?}"))),
    };
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_error(path, 1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (line, text) in lines {
        let text = text.map_err(|e| io_error(path, e))?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = text.split_whitespace().collect();
        let Some((n, _)) = size else {
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| p.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_error(path, line, format!("bad size line: {e}")))?;
            if nums.len() != 3 {
                return Err(parse_error(path, line, "size line needs rows, columns and entries"));
            }
            if nums[0] != nums[1] || nums[0] == 0 {
                return Err(parse_error(path, line, format!("matrix is {}x{}, not square", nums[0], nums[1])));
            }
            size = Some((nums[0], nums[2]));
            triplets.reserve(if symmetric { 2 * nums[2] } else { nums[2] });
            continue;
        };
        let want = if pattern { 2 } else { 3 };
        if parts.len() != want {
            return Err(parse_error(path, line, format!("expected {want} fields, found {}", parts.len())));
        }
        let index = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|e| parse_error(path, line, format!("bad index {s:?}: {e}")))?;
            if v == 0 || v > n {
                return Err(parse_error(path, line, format!("index {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (index(parts[0])?, index(parts[1])?);
        let v = if pattern {
            1.0
        } else {
            let v: f64 = parts[2]
                .parse()
                .map_err(|e| parse_error(path, line, format!("bad value {:?}: {e}", parts[2])))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("non-finite value {v}")));
            }
            v
        };
        if symmetric {
            if j > i {
                return Err(parse_error(path, line, "symmetric files store the lower triangle only"));
            }
            if i != j {
                triplets.push((j, i, v));
            }
        }
        triplets.push((i, j, v));
    }
    let (n, declared) = size.ok_or_else(|| parse_error(path, 1, "missing size line"))?;
    let entries = if symmetric {
        triplets.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        triplets.len()
    };
    if entries != declared {
        return Err(parse_error(
            path,
            0,
            format!("header declares {declared} entries, file has {entries}"),
        ));
    }
    let op = CsrOperator::from_triplets(n, &triplets)?;
    if !symmetric {
        check_symmetric(path, n, &op.to_dense())?;
    }
    Ok(op)
}

fn check_symmetric(path: &Path, n: usize, a: &[f64]) -> Result<()> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::Parse {
                    path: PathBuf::from(path),
                    line: 0,
                    message: format!("matrix is not symmetric at ({}, {})", i + 1, j + 1),
                });
            }
        }
    }
    Ok(())
}

/// Reads a dense square symmetric matrix, one row per line.
pub fn read_dense_matrix(path: impl AsRef<Path>) -> Result<DenseOperator> {
    let path = path.as_ref();
    let table = read_table(path, false)?;
    let n = table.rows.len();
    if n == 0 {
        return Err(parse_error(path, 1, "empty matrix"));
    }
    let mut data = Vec::with_capacity(n * n);
    for (line, row) in table.rows {
        if row.len() != n {
            return Err(parse_error(path, line, format!("expected {n} columns, found {}", row.len())));
        }
        data.extend(row);
    }
    check_symmetric(path, n, &data)?;
    DenseOperator::new(n, data)
}
