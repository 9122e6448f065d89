//! Dataset readers (CSV, libsvm) and atomic file output.
//!
//! Both readers map the two distinct label values to `−1`/`+1` by order:
//! numerically when both values parse as numbers, lexicographically
//! otherwise. The smaller value becomes `−1`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use melm_core::dataset::Label;
use melm_core::{LabeledDataset, Matrix};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}, column {column}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("line {line}, column {column}: value {value:?} is not finite")]
    NonFinite { line: u64, column: String, value: String },
    #[error("label column: {0}")]
    LabelColumn(String),
    #[error("only one label value ({0:?}) present; two classes are required")]
    SingleClass(String),
    #[error("expected exactly two label values, found {0:?}")]
    TooManyLabels(Vec<String>),
    #[error("line {line}: {message}")]
    Libsvm { line: usize, message: String },
    #[error("{0} contains no samples")]
    Empty(PathBuf),
    #[error(transparent)]
    Dataset(#[from] melm_core::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Which CSV column holds the labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

fn read_to_string(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Map two distinct raw label strings to classes.
fn label_map(raw: &[String]) -> IoResult<Vec<Label>> {
    let mut distinct: Vec<&str> = raw.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    match distinct.len() {
        0 => return Err(IoError::LabelColumn("no labels".into())),
        1 => return Err(IoError::SingleClass(distinct[0].to_string())),
        2 => {}
        _ => return Err(IoError::TooManyLabels(distinct.iter().map(|s| s.to_string()).collect())),
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    let minus = match numeric {
        Some(v) if v[0] != v[1] => {
            if v[0] < v[1] {
                distinct[0]
            } else {
                distinct[1]
            }
        }
        _ => distinct[0],
    };
    Ok(raw
        .iter()
        .map(|s| if s == minus { Label::Minus } else { Label::Plus })
        .collect())
}

fn parse_cell(value: &str, line: u64, column: &str) -> IoResult<f64> {
    let x: f64 = value.trim().parse().map_err(|_| IoError::NonNumeric {
        line,
        column: column.to_string(),
        value: value.to_string(),
    })?;
    if !x.is_finite() {
        return Err(IoError::NonFinite {
            line,
            column: column.to_string(),
            value: value.to_string(),
        });
    }
    Ok(x)
}

/// Read a comma-separated file. The first row is a header when none of its
/// feature cells is numeric.
pub fn load_csv(path: &Path, label: &LabelColumn) -> IoResult<LabeledDataset> {
    let text = read_to_string(path)?;
    parse_csv(&text, label, path)
}

pub fn parse_csv(text: &str, label: &LabelColumn, path: &Path) -> IoResult<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(IoError::Empty(path.to_path_buf()));
    };
    let width = first.len();
    if width < 2 {
        return Err(IoError::LabelColumn(format!(
            "need at least one feature column and one label column, found {width} column(s)"
        )));
    }
    let provisional = match label {
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Last => Some(width - 1),
        LabelColumn::Name(_) => None,
    };
    let header_like = first
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != provisional)
        .all(|(_, c)| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> = header_like.then(|| first.iter().map(str::to_string).collect());
    let label_idx = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(IoError::LabelColumn(format!("index {i} out of range for {width} columns")))
        }
        LabelColumn::Name(name) => {
            let h = header
                .as_ref()
                .ok_or_else(|| IoError::LabelColumn(format!("{name:?} given but the file has no header row")))?;
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| IoError::LabelColumn(format!("no column named {name:?}")))?
        }
    };
    let column_name = |c: usize| match &header {
        Some(h) => format!("{} ({})", c + 1, h[c]),
        None => (c + 1).to_string(),
    };
    let body = if header.is_some() { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(IoError::Empty(path.to_path_buf()));
    }
    let d = width - 1;
    let mut values = Vec::with_capacity(body.len() * d);
    let mut raw_labels = Vec::with_capacity(body.len());
    for (line, rec) in body {
        if rec.len() != width {
            return Err(IoError::Ragged {
                line: *line,
                column: column_name(rec.len().min(width) - 1),
                expected: width,
                found: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(cell.to_string());
            } else {
                values.push(parse_cell(cell, *line, &column_name(c))?);
            }
        }
    }
    let labels = label_map(&raw_labels)?;
    let points = Matrix::from_column_slice(d, labels.len(), &values);
    let names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, n)| n)
            .collect()
    });
    Ok(LabeledDataset::new(points, labels, names)?)
}

/// Read a sparse `<label> <index>:<value> ...` file with 1-based, strictly
/// ascending indices per line. Missing entries are zero; `d` is the
/// largest index seen. Blank lines are skipped.
pub fn load_libsvm(path: &Path) -> IoResult<LabeledDataset> {
    let text = read_to_string(path)?;
    parse_libsvm(&text, path)
}

pub fn parse_libsvm(text: &str, path: &Path) -> IoResult<LabeledDataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut d = 0;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| IoError::Libsvm { line: line_no, message };
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        if label.contains(':') {
            return Err(err(format!("missing label before {label:?}")));
        }
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, found {tok:?}")))?;
            let i: usize = i.parse().map_err(|_| err(format!("bad feature index {i:?}")))?;
            if i == 0 {
                return Err(err("feature indices are 1-based; found 0".into()));
            }
            if i == last {
                return Err(err(format!("duplicate index {i}")));
            }
            if i < last {
                return Err(err(format!("index {i} follows {last}; indices must ascend")));
            }
            let v: f64 = v.parse().map_err(|_| err(format!("cannot parse {v:?} as a number")))?;
            if !v.is_finite() {
                return Err(err(format!("value {v} at index {i} is not finite")));
            }
            last = i;
            entries.push((i, v));
        }
        d = d.max(last);
        raw_labels.push(label.to_string());
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(IoError::Empty(path.to_path_buf()));
    }
    if d == 0 {
        return Err(IoError::Libsvm {
            line: 1,
            message: "no features on any line".into(),
        });
    }
    let labels = label_map(&raw_labels)?;
    let mut points = Matrix::zeros(d, rows.len());
    for (c, entries) in rows.iter().enumerate() {
        for &(i, v) in entries {
            points[(i - 1, c)] = v;
        }
    }
    Ok(LabeledDataset::new(points, labels, None)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Libsvm,
}

impl Format {
    /// `libsvm` for `.libsvm`/`.svm`/`.txt` extensions, CSV otherwise.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("libsvm" | "svm" | "txt") => Format::Libsvm,
            _ => Format::Csv,
        }
    }
}

pub fn load(path: &Path, format: Option<Format>, label: &LabelColumn) -> IoResult<LabeledDataset> {
    match format.unwrap_or_else(|| Format::infer(path)) {
        Format::Csv => load_csv(path, label),
        Format::Libsvm => load_libsvm(path),
    }
}

/// Write `bytes` to a temporary file beside `path`, then rename it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> IoResult<()> {
    let wrap = |source: std::io::Error| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(wrap)?;
    }
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

/// Columns `x1..xk,label` with one row per sample; labels as `-1`/`1`.
pub fn points_csv(points: &Matrix, labels: &[Label]) -> String {
    let k = points.nrows();
    let mut out = String::new();
    let header: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",label\n");
    for (c, label) in labels.iter().enumerate() {
        for r in 0..k {
            out.push_str(&format!("{},", points[(r, c)]));
        }
        out.push_str(&format!("{}\n", label.sign()));
    }
    out
}
