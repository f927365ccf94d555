//! Instance files: `y,x_1..x_d,is_outlier` CSV plus a TOML sidecar with the
//! generator spec and ground truth.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use robreg_core::{Matrix, RegressionInstance, Truth};
use serde::{Deserialize, Serialize};

use crate::config::GenerateConfig;
use crate::error::{CliError, Result};

/// Sidecar contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub beta_star: Vec<f64>,
    pub support: Vec<usize>,
    pub outlier_set: Vec<usize>,
}

impl TruthRecord {
    fn from_truth(t: &Truth) -> Self {
        Self {
            beta_star: t.beta_star.clone(),
            support: t.support.clone(),
            outlier_set: t.outlier_set.clone(),
        }
    }

    fn into_truth(self, n: usize) -> Truth {
        let inlier_set = (0..n).filter(|i| self.outlier_set.binary_search(i).is_err()).collect();
        Truth {
            beta_star: self.beta_star,
            support: self.support,
            outlier_set: self.outlier_set,
            inlier_set,
        }
    }
}

/// An instance read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub instance: RegressionInstance,
    /// `is_outlier` column; all false when the file carries no labels.
    pub is_outlier: Vec<bool>,
    pub metadata: Option<Metadata>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("toml")
}

pub fn header(d: usize) -> String {
    let mut h = String::from("y");
    for j in 1..=d {
        write!(h, ",x_{j}").unwrap();
    }
    h.push_str(",is_outlier");
    h
}

/// CSV text; floats use the shortest representation that round-trips.
pub fn instance_csv(instance: &RegressionInstance) -> String {
    let outliers = instance.truth().map(|t| t.outlier_set.as_slice()).unwrap_or(&[]);
    let mut out = header(instance.d());
    out.push('\n');
    for (i, (row, y)) in instance.x().row_iter().zip(instance.y()).enumerate() {
        write!(out, "{y:?}").unwrap();
        for v in row {
            write!(out, ",{v:?}").unwrap();
        }
        let flag = u8::from(outliers.binary_search(&i).is_ok());
        writeln!(out, ",{flag}").unwrap();
    }
    out
}

pub fn metadata_for(instance: &RegressionInstance, generate: Option<&GenerateConfig>) -> Metadata {
    Metadata {
        n: instance.n(),
        d: instance.d(),
        generate: generate.cloned(),
        truth: instance.truth().map(TruthRecord::from_truth),
    }
}

pub fn metadata_toml(meta: &Metadata) -> Result<String> {
    toml::to_string(meta).map_err(|e| CliError::Config(format!("cannot serialize metadata: {e}")))
}

/// Writes `contents` unless the file exists and `force` is off.
pub fn write_file(path: &Path, contents: &[u8], force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(CliError::WouldOverwrite { path: path.to_owned() });
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes the CSV and its sidecar. Both targets are checked before either is
/// written.
pub fn write_instance(
    csv_path: &Path,
    instance: &RegressionInstance,
    generate: Option<&GenerateConfig>,
    force: bool,
) -> Result<()> {
    let meta_path = sidecar_path(csv_path);
    if !force {
        for p in [csv_path, meta_path.as_path()] {
            if p.exists() {
                return Err(CliError::WouldOverwrite { path: p.to_owned() });
            }
        }
    }
    let meta = metadata_toml(&metadata_for(instance, generate))?;
    write_file(csv_path, instance_csv(instance).as_bytes(), true)?;
    write_file(&meta_path, meta.as_bytes(), true)
}

fn parse_header(path: &Path, line: &str) -> Result<usize> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let bad = |msg: &str| CliError::parse(path, 1, msg);
    if fields.len() < 3 || fields[0] != "y" || fields[fields.len() - 1] != "is_outlier" {
        return Err(bad("header must be y,x_1,...,x_d,is_outlier"));
    }
    let d = fields.len() - 2;
    for (j, f) in fields[1..=d].iter().enumerate() {
        if *f != format!("x_{}", j + 1) {
            return Err(bad(&format!("expected column x_{}, found {f:?}", j + 1)));
        }
    }
    Ok(d)
}

/// Parses CSV text; errors carry 1-based line numbers.
pub fn parse_instance_csv(path: &Path, text: &str) -> Result<(Vec<f64>, Matrix, Vec<bool>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let first = match records.next() {
        None => return Err(CliError::parse(path, 1, "empty file: missing header")),
        Some(r) => r.map_err(|e| csv_error(path, &e))?,
    };
    let d = parse_header(path, &first.iter().collect::<Vec<_>>().join(","))?;
    let mut y = Vec::new();
    let mut data = Vec::new();
    let mut flags = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != d + 2 {
            return Err(CliError::parse(
                path,
                line,
                format!("expected {} fields, found {}", d + 2, record.len()),
            ));
        }
        for (k, field) in record.iter().take(d + 1).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::parse(path, line, format!("column {}: not a number: {field:?}", k + 1)))?;
            if !v.is_finite() {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("column {}: non-finite value", k + 1),
                ));
            }
            if k == 0 {
                y.push(v);
            } else {
                data.push(v);
            }
        }
        flags.push(match &record[d + 1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("is_outlier must be 0 or 1, found {other:?}"),
                ));
            }
        });
    }
    if y.is_empty() {
        return Err(CliError::parse(path, 2, "no data rows"));
    }
    let x = Matrix::from_vec(y.len(), d, data)?;
    Ok((y, x, flags))
}

fn csv_error(path: &Path, e: &csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::parse(path, line, e.to_string())
}

pub fn parse_metadata(path: &Path, text: &str) -> Result<Metadata> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| {
            text[..s.start].bytes().filter(|&b| b == b'\n').count() as u64 + 1
        });
        CliError::parse(path, line, e.message().to_owned())
    })
}

/// Reads an instance and, when present, its sidecar.
pub fn read_instance(csv_path: &Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let (y, x, is_outlier) = parse_instance_csv(csv_path, &text)?;
    let meta_path = sidecar_path(csv_path);
    let metadata = if meta_path.exists() {
        let t = std::fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
        Some(parse_metadata(&meta_path, &t)?)
    } else {
        None
    };
    let truth = match &metadata {
        Some(m) => {
            if (m.n, m.d) != (y.len(), x.cols()) {
                return Err(CliError::Config(format!(
                    "{}: sidecar says {}x{}, CSV holds {}x{}",
                    meta_path.display(),
                    m.n,
                    m.d,
                    y.len(),
                    x.cols()
                )));
            }
            m.truth.clone().map(|t| t.into_truth(y.len()))
        }
        None => None,
    };
    if let Some(t) = &truth {
        let labelled: Vec<usize> = (0..y.len()).filter(|&i| is_outlier[i]).collect();
        if labelled != t.outlier_set {
            return Err(CliError::Config(format!(
                "{}: is_outlier column disagrees with the sidecar outlier_set",
                csv_path.display()
            )));
        }
    }
    Ok(InstanceFile {
        instance: RegressionInstance::new(y, x, truth)?,
        is_outlier,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("data.csv")
    }

    #[test]
    fn header_lists_every_column() {
        assert_eq!(header(2), "y,x_1,x_2,is_outlier");
    }

    #[test]
    fn bad_number_reports_its_line() {
        let text = "y,x_1,x_2,is_outlier\n1,2,3,0\n1,abc,3,0\n";
        match parse_instance_csv(p(), text).unwrap_err() {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn short_rows_and_bad_flags_are_rejected() {
        let short = "y,x_1,x_2,is_outlier\n1,2,0\n";
        assert!(matches!(
            parse_instance_csv(p(), short),
            Err(CliError::Parse { line: 2, .. })
        ));
        let flag = "y,x_1,x_2,is_outlier\n1,2,3,0\n1,2,3,yes\n";
        assert!(matches!(
            parse_instance_csv(p(), flag),
            Err(CliError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn header_errors_point_at_line_one() {
        for text in ["", "y,x_2,is_outlier\n1,2,0\n", "a,b,c\n"] {
            assert!(
                matches!(parse_instance_csv(p(), text), Err(CliError::Parse { line: 1, .. })),
                "{text:?}"
            );
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        let y = vec![0.1, -1e-300, 123456.789];
        let x = Matrix::from_vec(
            3,
            3,
            vec![std::f64::consts::PI, -0.0, 1e300, 5e-324, 1.0, -2.5, 0.1, 0.2, 0.3],
        )
        .unwrap();
        let inst = RegressionInstance::new(y.clone(), x.clone(), None).unwrap();
        let (y2, x2, flags) = parse_instance_csv(p(), &instance_csv(&inst)).unwrap();
        assert_eq!(y2, y);
        assert_eq!(x2, x);
        assert_eq!(flags, vec![false; 3]);
    }
}
