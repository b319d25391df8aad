//! Dataset ingestion, z-normalisation, synthetic data generation and CSV
//! result persistence.
//!
//! Input files are UCR-style delimited text: class label in the first
//! column, observations in the rest, one series per row. Tab and comma
//! delimiters are auto-detected and scientific notation is accepted. Result
//! files share a fixed schema across commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::learning::LabeledDataset;
use crate::series::{TimeSeries, TimeSeriesSet};

/// Floats are serialised with 17 significant digits, enough for a lossless
/// f64 round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row of the shared result schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub gamma: f64,
    pub cost_c: f64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

pub const RESULT_HEADER: [&str; 7] = ["dataset", "method", "gamma", "c", "seed", "metric", "value"];

/// Serialises rows in the stable column order.
pub fn results_to_csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", RESULT_HEADER.join(","));
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.dataset,
            r.method,
            format_float(r.gamma),
            format_float(r.cost_c),
            r.seed,
            r.metric,
            format_float(r.value)
        );
    }
    out
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    fs::write(path, results_to_csv_string(rows))?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULT_HEADER.join(",") => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "missing result header".into(),
            })
        }
    }
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != RESULT_HEADER.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!(
                    "expected {} fields, got {}",
                    RESULT_HEADER.len(),
                    fields.len()
                ),
            });
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("bad float '{s}'"),
            })
        };
        rows.push(ResultRow {
            dataset: fields[0].to_string(),
            method: fields[1].to_string(),
            gamma: parse_f64(fields[2])?,
            cost_c: parse_f64(fields[3])?,
            seed: fields[4].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("bad seed '{}'", fields[4]),
            })?,
            metric: fields[5].to_string(),
            value: parse_f64(fields[6])?,
        });
    }
    Ok(rows)
}

/// Plain row-major matrix dump, one CSV line per row.
pub fn write_matrix_csv<'a>(rows: impl Iterator<Item = &'a [f64]>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}

/// A copy of the dataset with every series z-normalised.
pub fn z_normalized(dataset: &LabeledDataset) -> LabeledDataset {
    let series: Vec<TimeSeries> = dataset
        .data()
        .iter()
        .map(|s| {
            let mut v = s.values().to_vec();
            z_normalize(&mut v);
            TimeSeries::new(v).expect("normalisation preserves finiteness")
        })
        .collect();
    LabeledDataset::new(
        TimeSeriesSet::new(series).expect("shape unchanged"),
        dataset.labels().to_vec(),
    )
    .expect("labels unchanged")
}

/// In-place z-normalisation with the population standard deviation.
/// Constant series map to all-zeros.
pub fn z_normalize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * (1.0 + mean.abs()) {
        values.fill(0.0);
    } else {
        for v in values.iter_mut() {
            *v = (*v - mean) / std;
        }
    }
}

fn detect_delimiter(line: &str) -> char {
    if line.contains('\t') {
        '\t'
    } else {
        ','
    }
}

/// Rows and raw integer labels of one file, before label remapping.
fn parse_tabular(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<i64>)> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut delimiter = None;
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let delim = *delimiter.get_or_insert_with(|| detect_delimiter(line));
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: "need a label column and at least one observation".into(),
            });
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("ragged row: {} fields, expected {w}", fields.len()),
                });
            }
            _ => {}
        }
        let parse_cell = |cell: &str| -> Result<f64> {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("non-numeric cell '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("non-finite cell '{cell}'"),
                });
            }
            Ok(v)
        };
        let label_value = parse_cell(fields[0])?;
        if (label_value - label_value.round()).abs() > 1e-9 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("class label '{}' is not an integer", fields[0]),
            });
        }
        labels.push(label_value.round() as i64);
        rows.push(
            fields[1..]
                .iter()
                .map(|c| parse_cell(c))
                .collect::<Result<_>>()?,
        );
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "empty dataset".into(),
        });
    }
    Ok((rows, labels))
}

/// Raw labels remapped to contiguous 0-based class ids in ascending order of
/// the raw value. Files that already use 0..k keep their ids.
fn remap_labels(raw: &[i64]) -> Vec<usize> {
    let mut mapping = BTreeMap::new();
    for &l in raw {
        let next = mapping.len();
        mapping.entry(l).or_insert(next);
    }
    // BTreeMap iteration is ordered by raw label; rebuild ids in that order.
    let ordered: BTreeMap<i64, usize> = mapping.keys().enumerate().map(|(i, &k)| (k, i)).collect();
    raw.iter().map(|l| ordered[l]).collect()
}

fn assemble(
    mut rows: Vec<Vec<f64>>,
    raw_labels: Vec<i64>,
    normalize: bool,
) -> Result<LabeledDataset> {
    if normalize {
        for row in rows.iter_mut() {
            z_normalize(row);
        }
    }
    let series = rows
        .into_iter()
        .map(TimeSeries::new)
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(TimeSeriesSet::new(series)?, remap_labels(&raw_labels))
}

/// Loads one UCR-style file.
pub fn load_tabular(path: &Path, normalize: bool) -> Result<LabeledDataset> {
    let (rows, labels) = parse_tabular(path)?;
    assemble(rows, labels, normalize)
}

/// Loads and concatenates several files with one joint label remapping.
pub fn load_merged(paths: &[PathBuf], normalize: bool) -> Result<LabeledDataset> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("dataset paths"));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let (r, l) = parse_tabular(path)?;
        rows.extend(r);
        labels.extend(l);
    }
    assemble(rows, labels, normalize)
}

/// Loads a train/test pair under one joint label remapping, so class ids
/// agree even when a split is missing a class.
pub fn load_split_pair(
    train: &Path,
    test: &Path,
    normalize: bool,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train_rows, train_raw) = parse_tabular(train)?;
    let (test_rows, test_raw) = parse_tabular(test)?;
    let mut all_raw = train_raw.clone();
    all_raw.extend_from_slice(&test_raw);
    let joint = remap_labels(&all_raw);
    let (train_labels, test_labels) = joint.split_at(train_raw.len());

    let build = |rows: Vec<Vec<f64>>, labels: &[usize]| -> Result<LabeledDataset> {
        let mut rows = rows;
        if normalize {
            for row in rows.iter_mut() {
                z_normalize(row);
            }
        }
        let series = rows
            .into_iter()
            .map(TimeSeries::new)
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(TimeSeriesSet::new(series)?, labels.to_vec())
    };
    Ok((
        build(train_rows, train_labels)?,
        build(test_rows, test_labels)?,
    ))
}

/// Writes a dataset back out as tab-separated UCR-style text.
pub fn write_tabular(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (series, &label) in dataset.data().iter().zip(dataset.labels()) {
        let mut fields = vec![label.to_string()];
        fields.extend(series.values().iter().map(|&v| format_float(v)));
        let _ = writeln!(out, "{}", fields.join("\t"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Where a dataset comes from and how to prepare it.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub normalize: bool,
    /// Also load the matching _TRAIN/_TEST sibling and concatenate, with a
    /// joint label remapping.
    pub merge_splits: bool,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn from_path(path: &Path) -> Self {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset");
        let name = stem
            .trim_end_matches("_TRAIN")
            .trim_end_matches("_TEST")
            .to_string();
        Self {
            name,
            path: path.to_path_buf(),
            normalize: false,
            merge_splits: false,
            seed: 0,
        }
    }

    fn sibling(&self) -> Option<PathBuf> {
        let file = self.path.file_name()?.to_str()?;
        let other = if file.contains("_TRAIN") {
            file.replace("_TRAIN", "_TEST")
        } else if file.contains("_TEST") {
            file.replace("_TEST", "_TRAIN")
        } else {
            return None;
        };
        Some(self.path.with_file_name(other))
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        let (mut rows, mut labels) = parse_tabular(&self.path)?;
        if self.merge_splits {
            if let Some(sibling) = self.sibling() {
                let (more_rows, more_labels) = parse_tabular(&sibling)?;
                rows.extend(more_rows);
                labels.extend(more_labels);
            }
        }
        assemble(rows, labels, self.normalize)
    }
}

/// Template shapes for the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Sine against a double-peak shape.
    TwoClass,
    /// Sine, square wave and double-peak.
    ThreeClass,
}

impl SynthKind {
    fn n_classes(&self) -> usize {
        match self {
            SynthKind::TwoClass => 2,
            SynthKind::ThreeClass => 3,
        }
    }

    /// Template value at normalised position p ∈ [0, 1].
    fn template(&self, class: usize, p: f64) -> f64 {
        let shape = match (self, class) {
            (SynthKind::TwoClass, 1) | (SynthKind::ThreeClass, 2) => Shape::DoublePeak,
            (SynthKind::ThreeClass, 1) => Shape::Square,
            _ => Shape::Sine,
        };
        match shape {
            Shape::Sine => (2.0 * std::f64::consts::TAU * p).sin(),
            Shape::Square => {
                if (2.0 * std::f64::consts::TAU * p).sin() >= 0.0 {
                    0.8
                } else {
                    -0.8
                }
            }
            Shape::DoublePeak => {
                let bump = |centre: f64| {
                    let d = (p - centre) / (1.0 / 12.0);
                    1.5 * (-0.5 * d * d).exp()
                };
                bump(1.0 / 3.0) + bump(2.0 / 3.0)
            }
        }
    }
}

enum Shape {
    Sine,
    Square,
    DoublePeak,
}

/// Reproducible synthetic dataset: per class, a template shape under a
/// random global time shift plus a smooth local time warp (both bounded by
/// `shift_range`, edge values replicated) and additive Gaussian noise.
/// Series are emitted in class-major order. With `noise = 0` and
/// `shift_range = 0` every series in a class is the template itself.
pub fn synth_dataset(
    kind: SynthKind,
    n_per_class: usize,
    m: usize,
    noise: f64,
    shift_range: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument(
            "n_per_class must be at least 1".into(),
        ));
    }
    if m < 8 {
        return Err(Error::InvalidArgument(format!(
            "series length must be at least 8, got {m}"
        )));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::NonPositiveParam {
            name: "noise",
            value: noise,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut series = Vec::new();
    let mut labels = Vec::new();
    let last = (m - 1) as f64;
    for class in 0..kind.n_classes() {
        for _ in 0..n_per_class {
            let (shift, warp_amp, warp_phase) = if shift_range == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let r = shift_range as f64;
                (
                    rng.gen_range(-r..=r),
                    rng.gen_range(0.0..=r),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            };
            let mut values = Vec::with_capacity(m);
            for t in 0..m {
                let tf = t as f64;
                let warped = tf - shift
                    + warp_amp * (std::f64::consts::TAU * tf / m as f64 + warp_phase).sin();
                let p = warped.clamp(0.0, last) / last;
                let eps: f64 = if noise > 0.0 {
                    noise * normal.sample(&mut rng)
                } else {
                    0.0
                };
                values.push(kind.template(class, p) + eps);
            }
            series.push(TimeSeries::new(values)?);
            labels.push(class);
        }
    }
    LabeledDataset::new(TimeSeriesSet::new(series)?, labels)
}

/// FNV-1a digest over labels and value bit patterns; pins dataset identity
/// in golden tests.
pub fn dataset_checksum(dataset: &LabeledDataset) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for (series, &label) in dataset.data().iter().zip(dataset.labels()) {
        eat(&(label as u64).to_le_bytes());
        for v in series.values() {
            eat(&v.to_bits().to_le_bytes());
        }
    }
    hash
}
