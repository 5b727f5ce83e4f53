//! Mixed-type dataset ingestion and the latent-interval construction.
//!
//! Every column is mapped to the latent normal scale through its rescaled
//! empirical distribution function `F(y) = #{y_i <= y} / (n + 1)`. Discrete
//! columns become interval-censored latent coordinates `(tau_{r-1}, tau_r]`;
//! continuous columns are either interval-censored the same way (`Full`) or
//! pinned to their normal score (`Partitioned`). Missing cells are unbounded.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Continuous,
    Binary,
    Ordinal,
    Count,
}

impl VariableKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VariableKind::Continuous)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Continuous => "continuous",
            VariableKind::Binary => "binary",
            VariableKind::Ordinal => "ordinal",
            VariableKind::Count => "count",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: VariableKind,
}

fn default_missing_token() -> String {
    "NA".to_string()
}

/// Column typing document, read from JSON:
/// `{"missing_token": "NA", "columns": [{"name": "x", "kind": "ordinal"}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_missing_token")]
    pub missing_token: String,
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Self {
        Schema {
            missing_token: default_missing_token(),
            columns,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| open_error(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::Data(format!("schema {}: {e}", path.display())))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

/// An `n x p` grid of observations with a missingness mask and column typing.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedDataset {
    values: DMatrix<f64>,
    missing: Vec<bool>,
    columns: Vec<ColumnSpec>,
}

impl MixedDataset {
    /// Validates and wraps raw values. `missing` is row-major with length `n * p`;
    /// the value stored under a missing cell is ignored.
    pub fn new(values: DMatrix<f64>, missing: Vec<bool>, columns: Vec<ColumnSpec>) -> Result<Self> {
        let (n, p) = values.shape();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 rows, got {n}")));
        }
        if p == 0 || columns.len() != p {
            return Err(Error::Data(format!(
                "column specs ({}) do not match value columns ({p})",
                columns.len()
            )));
        }
        if missing.len() != n * p {
            return Err(Error::Data("missing mask has the wrong length".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            let mut observed = 0usize;
            for i in 0..n {
                if missing[i * p + j] {
                    continue;
                }
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        column: col.name.clone(),
                        row: i,
                        value: v.to_string(),
                    });
                }
                observed += 1;
            }
            if observed == 0 {
                return Err(Error::EmptyColumn(col.name.clone()));
            }
            if col.kind == VariableKind::Binary {
                let levels = distinct_sorted((0..n).filter(|&i| !missing[i * p + j]).map(|i| values[(i, j)]));
                if levels.len() > 2 {
                    return Err(Error::BinaryLevels(col.name.clone()));
                }
            }
        }
        Ok(MixedDataset { values, missing, columns })
    }

    /// Fully observed dataset.
    pub fn complete(values: DMatrix<f64>, columns: Vec<ColumnSpec>) -> Result<Self> {
        let len = values.len();
        Self::new(values, vec![false; len], columns)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn kind(&self, j: usize) -> VariableKind {
        self.columns[j].kind
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.p() + j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if self.is_missing(i, j) {
            None
        } else {
            Some(self.values[(i, j)])
        }
    }

    /// Column as `Option`s, `None` where missing.
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.n()).map(|i| self.get(i, j)).collect()
    }

    pub fn observed(&self, j: usize) -> Vec<f64> {
        (0..self.n()).filter_map(|i| self.get(i, j)).collect()
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn schema(&self) -> Schema {
        Schema::new(self.columns.clone())
    }

    /// Sorted distinct observed codes of column `j`.
    pub fn levels(&self, j: usize) -> Vec<f64> {
        distinct_sorted(self.observed(j).into_iter())
    }

    /// Writes the dataset as CSV with a header row, using `missing_token` for missing cells.
    pub fn write_csv<W: std::io::Write>(&self, out: W, missing_token: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.p())
                .map(|j| match self.get(i, j) {
                    Some(v) => format_value(v),
                    None => missing_token.to_string(),
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Parses a CSV (header row, RFC-4180 quoting) against a schema. Columns are
/// returned in schema order; a header column absent from the schema is an error.
pub fn load_dataset<R: Read>(csv_source: R, schema: &Schema) -> Result<MixedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for name in &header {
        if !schema.columns.iter().any(|c| &c.name == name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
        if !seen.insert(name.clone()) {
            return Err(Error::Data(format!("duplicate column `{name}`")));
        }
    }
    let positions: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == &c.name)
                .ok_or_else(|| Error::Data(format!("schema column `{}` missing from CSV", c.name)))
        })
        .collect::<Result<_>>()?;

    let p = schema.columns.len();
    let mut data = Vec::new();
    let mut missing = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (j, &pos) in positions.iter().enumerate() {
            let cell = record.get(pos).unwrap_or("");
            if cell == schema.missing_token {
                data.push(0.0);
                missing.push(true);
                continue;
            }
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::NonNumeric {
                column: schema.columns[j].name.clone(),
                row,
                value: cell.to_string(),
            })?;
            data.push(value);
            missing.push(false);
        }
    }
    let n = missing.len() / p;
    MixedDataset::new(DMatrix::from_row_slice(n, p, &data), missing, schema.columns.clone())
}

pub fn load_dataset_files(data: impl AsRef<Path>, schema: impl AsRef<Path>) -> Result<MixedDataset> {
    let schema = Schema::from_path(schema)?;
    let data = data.as_ref();
    load_dataset(std::fs::File::open(data).map_err(|e| open_error(data, e))?, &schema)
}

fn open_error(path: &Path, e: std::io::Error) -> Error {
    Error::Data(format!("cannot read {}: {e}", path.display()))
}

/// Rescaled empirical distribution function of one column.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecdf {
    values: Vec<f64>,
    cumulative: Vec<usize>,
    n: usize,
}

impl Ecdf {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[f64] {
        &self.values
    }

    /// `#{y_i <= y} / (n + 1)`.
    pub fn eval(&self, y: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= y);
        let count = if idx == 0 { 0 } else { self.cumulative[idx - 1] };
        count as f64 / (self.n + 1) as f64
    }
}

pub fn rescaled_ecdf(column: &[f64]) -> Result<Ecdf> {
    if column.is_empty() {
        return Err(Error::Data("empirical CDF of an empty column".into()));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values = Vec::new();
    let mut cumulative = Vec::new();
    for (k, &v) in sorted.iter().enumerate() {
        if values.last() == Some(&v) {
            *cumulative.last_mut().unwrap() = k + 1;
        } else {
            values.push(v);
            cumulative.push(k + 1);
        }
    }
    Ok(Ecdf {
        values,
        cumulative,
        n: sorted.len(),
    })
}

/// `Phi^{-1}(F(y))` for observed entries; missing entries stay `None`.
pub fn normal_scores(column: &[Option<f64>], ecdf: &Ecdf) -> Vec<Option<f64>> {
    column.iter().map(|v| v.map(|y| normal::quantile(ecdf.eval(y)))).collect()
}

/// Latent cutpoints for one thresholded column. Level `r` occupies
/// `(cuts[r], cuts[r + 1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSet {
    levels: Vec<f64>,
    cuts: Vec<f64>,
}

impl ThresholdSet {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// All cutpoints including the infinite ends.
    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn interior(&self) -> &[f64] {
        &self.cuts[1..self.cuts.len() - 1]
    }

    pub fn level_index(&self, value: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l == value)
    }

    pub fn interval(&self, level: usize) -> (f64, f64) {
        (self.cuts[level], self.cuts[level + 1])
    }

    /// Level whose interval contains latent value `z`.
    pub fn level_for_latent(&self, z: f64) -> usize {
        let r = self.cuts[1..].partition_point(|&c| c < z);
        r.min(self.levels.len() - 1)
    }
}

/// Thresholds `tau_r = Phi^{-1}(F(c_r))` between consecutive observed levels.
/// A single-level column keeps its one cut at `Phi^{-1}(n / (n + 1))`.
pub fn ordinal_thresholds(column: &[f64], ecdf: &Ecdf) -> ThresholdSet {
    let levels = distinct_sorted(column.iter().copied());
    let mut cuts = vec![f64::NEG_INFINITY];
    if levels.len() == 1 {
        cuts.push(normal::quantile(ecdf.eval(levels[0])));
    } else {
        cuts.extend(levels[..levels.len() - 1].iter().map(|&c| normal::quantile(ecdf.eval(c))));
    }
    cuts.push(f64::INFINITY);
    ThresholdSet { levels, cuts }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    /// Every column interval-censored on the latent scale.
    Full,
    /// Continuous columns pinned at their normal scores.
    Partitioned,
}

/// Per-cell latent intervals `(lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBounds {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    /// Row-major; `true` where `lower == upper` is a fixed latent value.
    pub degenerate: Vec<bool>,
}

impl IntervalBounds {
    pub fn n(&self) -> usize {
        self.lower.nrows()
    }

    pub fn p(&self) -> usize {
        self.lower.ncols()
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        self.degenerate[i * self.p() + j]
    }

    pub fn row(&self, i: usize) -> Vec<(f64, f64, bool)> {
        (0..self.p())
            .map(|j| (self.lower[(i, j)], self.upper[(i, j)], self.is_degenerate(i, j)))
            .collect()
    }

    /// Completely unconstrained bounds (every cell missing).
    pub fn unbounded(n: usize, p: usize) -> Self {
        IntervalBounds {
            lower: DMatrix::from_element(n, p, f64::NEG_INFINITY),
            upper: DMatrix::from_element(n, p, f64::INFINITY),
            degenerate: vec![false; n * p],
        }
    }
}

pub fn interval_bounds(dataset: &MixedDataset, mode: BoundsMode) -> IntervalBounds {
    let (n, p) = (dataset.n(), dataset.p());
    let mut bounds = IntervalBounds::unbounded(n, p);
    for j in 0..p {
        let observed = dataset.observed(j);
        let ecdf = rescaled_ecdf(&observed).expect("validated datasets have observed cells");
        let pinned = mode == BoundsMode::Partitioned && !dataset.kind(j).is_discrete();
        if pinned {
            for i in 0..n {
                if let Some(y) = dataset.get(i, j) {
                    let z = normal::quantile(ecdf.eval(y));
                    bounds.lower[(i, j)] = z;
                    bounds.upper[(i, j)] = z;
                    bounds.degenerate[i * p + j] = true;
                }
            }
        } else {
            let thresholds = ordinal_thresholds(&observed, &ecdf);
            for i in 0..n {
                if let Some(y) = dataset.get(i, j) {
                    let r = thresholds.level_index(y).expect("observed value is a level");
                    let (a, b) = thresholds.interval(r);
                    bounds.lower[(i, j)] = a;
                    bounds.upper[(i, j)] = b;
                }
            }
        }
    }
    bounds
}

/// Normal scores of every column (missing cells `None`), column-major by variable.
pub fn score_matrix(dataset: &MixedDataset) -> Vec<Vec<Option<f64>>> {
    (0..dataset.p())
        .map(|j| {
            let ecdf = rescaled_ecdf(&dataset.observed(j)).expect("validated column");
            normal_scores(&dataset.column(j), &ecdf)
        })
        .collect()
}
