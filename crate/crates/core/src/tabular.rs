//! Delimited-file ingestion into a typed, role-annotated table and the
//! train/test partition.
//!
//! Dialect: comma separator, `"`-quoted fields with `""` escapes, UTF-8,
//! dot decimal, mandatory header. Missing-value spellings: the empty cell,
//! `NA`, `NaN`, `nan`, `null` (case-insensitive, surrounding blanks ignored).

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, DatasetFormat, SplitType};
use crate::error::{Error, Result};
use crate::rng::seeded_permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    Label,
    Id,
    Group,
    Time,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
    /// Distinct values in first-appearance order (categorical columns only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(usize),
    Missing,
}

impl Cell {
    pub fn is_missing(self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Numeric view: the number itself or the category index.
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(v),
            Cell::Cat(i) => Some(i as f64),
            Cell::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub schemas: Vec<ColumnSchema>,
    /// Row-major cells, one entry per schema column.
    pub values: Vec<Vec<Cell>>,
    /// Raw text of the patient-id column per row (empty when absent).
    pub ids: Vec<String>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

pub(crate) fn is_missing_token(s: &str) -> bool {
    let t = s.trim();
    t.is_empty()
        || ["na", "nan", "null"]
            .iter()
            .any(|m| t.eq_ignore_ascii_case(m))
}

fn parse_number(s: &str) -> Option<f64> {
    let t = s.trim();
    // Rust's float parser also accepts "inf" and "infinity"; those are text here.
    if t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl TabularDataset {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    /// Re-derives the categorical level lists of feature, label and group
    /// columns from `rows` (first appearance in row order) and re-indexes all
    /// cells. Levels never seen in `rows` become missing everywhere, as
    /// unseen levels do at prediction time.
    /// Returns the number of cells that became missing.
    pub fn restrict_categories(&mut self, rows: &[usize]) -> usize {
        let mut lost = 0;
        for c in 0..self.schemas.len() {
            let s = &self.schemas[c];
            if s.kind != ColumnKind::Categorical
                || !matches!(s.role, ColumnRole::Feature | ColumnRole::Label | ColumnRole::Group)
            {
                continue;
            }
            let old = std::mem::take(&mut self.schemas[c].categories);
            let mut remap: Vec<Option<usize>> = vec![None; old.len()];
            let mut kept = Vec::new();
            for &r in rows {
                if let Cell::Cat(i) = self.values[r][c] {
                    if remap[i].is_none() {
                        remap[i] = Some(kept.len());
                        kept.push(old[i].clone());
                    }
                }
            }
            for row in &mut self.values {
                if let Cell::Cat(i) = row[c] {
                    row[c] = match remap[i] {
                        Some(j) => Cell::Cat(j),
                        None => {
                            lost += 1;
                            Cell::Missing
                        }
                    };
                }
            }
            self.schemas[c].categories = kept;
        }
        lost
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ColumnSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn columns_with_role(&self, role: ColumnRole) -> Vec<usize> {
        self.schemas
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.values[row][col]
    }

    /// Numeric view of one column over the given rows.
    pub fn column_values(&self, col: usize, rows: &[usize]) -> Vec<Option<f64>> {
        rows.iter().map(|&r| self.values[r][col].value()).collect()
    }

    /// Text of a cell as it would be written back to a file.
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        match self.values[row][col] {
            Cell::Num(v) => format!("{v}"),
            Cell::Cat(i) => self.schemas[col].categories[i].clone(),
            Cell::Missing => String::new(),
        }
    }
}

fn read_raw(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::data(format!("{}: {other:?}", path.display())),
        })?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::data(format!(
                "{}: duplicate header name \"{h}\"",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            let line = record.position().map_or(0, |p| p.line());
            return Err(Error::data(format!(
                "{}: row at line {line} has {} fields, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn check_format(format: DatasetFormat) -> Result<()> {
    match format {
        DatasetFormat::Csv => Ok(()),
        DatasetFormat::Xlsx => Err(Error::UnsupportedFormat("xlsx".into())),
    }
}

/// Builds a typed column from raw text. Numeric unless forced categorical or
/// some non-missing cell fails to parse.
fn type_column(raw: &[&str], force_categorical: bool) -> (ColumnKind, Vec<String>, Vec<Cell>) {
    if !force_categorical {
        let parsed: Option<Vec<Cell>> = raw
            .iter()
            .map(|s| {
                if is_missing_token(s) {
                    Some(Cell::Missing)
                } else {
                    parse_number(s).map(Cell::Num)
                }
            })
            .collect();
        if let Some(cells) = parsed {
            return (ColumnKind::Numeric, Vec::new(), cells);
        }
    }
    let mut categories: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let cells = raw
        .iter()
        .map(|s| {
            if is_missing_token(s) {
                return Cell::Missing;
            }
            let t = s.trim().to_string();
            let next = categories.len();
            let i = *index.entry(t.clone()).or_insert_with(|| {
                categories.push(t);
                next
            });
            Cell::Cat(i)
        })
        .collect();
    (ColumnKind::Categorical, categories, cells)
}

/// Reads a training file and assigns column roles from the data configuration.
pub fn read_csv_dataset(path: impl AsRef<Path>, dc: &DataConfig) -> Result<TabularDataset> {
    let path = path.as_ref();
    check_format(dc.dataset_format)?;
    let (header, rows) = read_raw(path)?;

    let mut declared: Vec<&str> = vec![dc.patient_id.as_str()];
    declared.extend(dc.labels.iter().map(String::as_str));
    declared.extend(dc.features2drop.iter().map(String::as_str));
    declared.extend(dc.categorical_features.iter().map(String::as_str));
    if !dc.group.is_empty() {
        declared.push(&dc.group);
    }
    if !dc.time.is_empty() {
        declared.push(&dc.time);
    }
    let missing: Vec<&str> = declared
        .into_iter()
        .filter(|d| !header.iter().any(|h| h == d))
        .collect();
    if !missing.is_empty() {
        let mut uniq = missing.clone();
        uniq.dedup();
        return Err(Error::data(format!(
            "{}: declared column(s) not in header: {}",
            path.display(),
            uniq.join(", ")
        )));
    }

    let mut schemas = Vec::with_capacity(header.len());
    let mut columns: Vec<Vec<Cell>> = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let role = if *name == dc.patient_id {
            ColumnRole::Id
        } else if dc.labels.contains(name) {
            ColumnRole::Label
        } else if dc.features2drop.contains(name) {
            ColumnRole::Dropped
        } else if *name == dc.group {
            ColumnRole::Group
        } else if *name == dc.time {
            ColumnRole::Time
        } else {
            ColumnRole::Feature
        };
        let raw: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
        let (kind, categories, cells) = type_column(&raw, dc.categorical_features.contains(name));
        schemas.push(ColumnSchema {
            name: name.clone(),
            kind,
            role,
            categories,
        });
        columns.push(cells);
    }
    let id_col = header.iter().position(|h| *h == dc.patient_id);
    let values = (0..rows.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let ids = rows
        .iter()
        .map(|r| id_col.map_or_else(String::new, |j| r[j].trim().to_string()))
        .collect();
    Ok(TabularDataset {
        schemas,
        values,
        ids,
        train_rows: (0..rows.len()).collect(),
        test_rows: Vec::new(),
    })
}

/// Largest-remainder apportionment of `total` seats over groups of the given
/// sizes at `pct` percent. Remainder ties go to the earlier group.
pub(crate) fn apportion(sizes: &[usize], pct: u32, total: usize) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * pct as f64 / 100.0).collect();
    let mut seats: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(seats.iter().sum());
    for &g in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if seats[g] < sizes[g] {
            seats[g] += 1;
            left -= 1;
        }
    }
    seats
}

/// Partitions rows into train and test according to `split_percentage` and
/// `split_type`. Random splits are stratified per class when `group` names a
/// label column.
pub fn split_dataset(mut ds: TabularDataset, dc: &DataConfig) -> Result<TabularDataset> {
    let pct = dc
        .split_percentage
        .ok_or_else(|| Error::MissingField("split_percentage".into()))?;
    let n = ds.n_rows();
    let n_train = n * pct as usize / 100;
    if n_train == 0 || n_train == n {
        return Err(Error::data(format!(
            "split of {n} rows at {pct}% leaves an empty {} set",
            if n_train == 0 { "training" } else { "test" }
        )));
    }
    let mut train: Vec<usize> = match dc.split_type {
        SplitType::Sequential => (0..n_train).collect(),
        SplitType::Random => {
            let perm = seeded_permutation(n, dc.seed);
            let strat_col = if !dc.group.is_empty() && dc.labels.contains(&dc.group) {
                ds.column_index(&dc.group)
            } else {
                None
            };
            match strat_col {
                None => perm[..n_train].to_vec(),
                Some(col) => {
                    // strata keyed by class value; missing labels form their own stratum
                    let key = |r: usize| ds.values[r][col].value();
                    let mut keys: Vec<Option<f64>> = (0..n).map(key).collect();
                    keys.sort_by(|a, b| match (a, b) {
                        (None, None) => std::cmp::Ordering::Equal,
                        (None, _) => std::cmp::Ordering::Greater,
                        (_, None) => std::cmp::Ordering::Less,
                        (Some(x), Some(y)) => x.total_cmp(y),
                    });
                    keys.dedup();
                    let members: Vec<Vec<usize>> = keys
                        .iter()
                        .map(|k| perm.iter().copied().filter(|&r| key(r) == *k).collect())
                        .collect();
                    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
                    let seats = apportion(&sizes, pct, n_train);
                    members
                        .iter()
                        .zip(&seats)
                        .flat_map(|(m, &s)| m[..s].iter().copied())
                        .collect()
                }
            }
        }
    };
    train.sort_unstable();
    let in_train: HashSet<usize> = train.iter().copied().collect();
    ds.test_rows = (0..n).filter(|r| !in_train.contains(r)).collect();
    ds.train_rows = train;
    Ok(ds)
}

/// Reads a file for a pre-trained model. Columns are matched by name against
/// the training schemas and returned in training order. Unseen categorical
/// levels become missing; label, group, time and dropped columns are optional.
pub fn read_predict_data(
    path: impl AsRef<Path>,
    schemas: &[ColumnSchema],
    format: &str,
) -> Result<TabularDataset> {
    let path = path.as_ref();
    match format.trim().to_ascii_lowercase().as_str() {
        "csv" | "" => {}
        "xlsx" => return Err(Error::UnsupportedFormat("xlsx".into())),
        other => return Err(Error::UnsupportedFormat(other.to_string())),
    }
    let (header, rows) = read_raw(path)?;
    let lookup: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();

    let absent: Vec<&str> = schemas
        .iter()
        .filter(|s| s.role == ColumnRole::Feature && !lookup.contains_key(s.name.as_str()))
        .map(|s| s.name.as_str())
        .collect();
    if !absent.is_empty() {
        return Err(Error::data(format!(
            "{}: trained feature column(s) missing: {}",
            path.display(),
            absent.join(", ")
        )));
    }
    let extras: Vec<&str> = header
        .iter()
        .filter(|h| !schemas.iter().any(|s| s.name == **h))
        .map(String::as_str)
        .collect();
    if !extras.is_empty() {
        log::info!(target: "load", "ignoring columns not seen in training: {}", extras.join(", "));
    }

    let kept: Vec<(&ColumnSchema, usize)> = schemas
        .iter()
        .filter_map(|s| lookup.get(s.name.as_str()).map(|&j| (s, j)))
        .collect();
    let mut values = vec![Vec::with_capacity(kept.len()); rows.len()];
    let mut unseen = 0usize;
    for &(schema, j) in &kept {
        for (i, row) in rows.iter().enumerate() {
            let raw = row[j].as_str();
            let cell = if is_missing_token(raw) {
                Cell::Missing
            } else {
                match schema.kind {
                    ColumnKind::Numeric => match parse_number(raw) {
                        Some(v) => Cell::Num(v),
                        None if schema.role == ColumnRole::Feature || schema.role == ColumnRole::Label => {
                            return Err(Error::data(format!(
                                "{}: column \"{}\" is numeric in training but row {} holds \"{}\"",
                                path.display(),
                                schema.name,
                                i + 1,
                                raw.trim()
                            )))
                        }
                        None => Cell::Missing,
                    },
                    ColumnKind::Categorical => {
                        match schema.categories.iter().position(|c| c == raw.trim()) {
                            Some(k) => Cell::Cat(k),
                            None => {
                                if schema.role != ColumnRole::Id {
                                    unseen += 1;
                                }
                                Cell::Missing
                            }
                        }
                    }
                }
            };
            values[i].push(cell);
        }
    }
    if unseen > 0 {
        log::info!(target: "load", "{unseen} categorical cell(s) hold levels unseen in training; treated as missing");
    }
    let id_col = schemas
        .iter()
        .find(|s| s.role == ColumnRole::Id)
        .and_then(|s| lookup.get(s.name.as_str()).copied());
    let ids = rows
        .iter()
        .map(|r| id_col.map_or_else(String::new, |j| r[j].trim().to_string()))
        .collect();
    let n = rows.len();
    Ok(TabularDataset {
        schemas: kept.into_iter().map(|(s, _)| s.clone()).collect(),
        values,
        ids,
        train_rows: Vec::new(),
        test_rows: (0..n).collect(),
    })
}

/// Writes every column back in the reader's dialect; missing cells are empty.
pub fn write_csv_dataset(ds: &TabularDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(format!("{}: {other:?}", path.display())),
    })?;
    w.write_record(ds.schemas.iter().map(|s| s.name.as_str()))?;
    for r in 0..ds.n_rows() {
        w.write_record((0..ds.schemas.len()).map(|c| ds.cell_text(r, c)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
