//! Delimited-text datasets and held-out direction evaluation.
//!
//! Files are UTF-8, comma separated, `.` decimal point, with exactly one
//! header line. Paths ending in `.gz` are decompressed on the fly. Data rows
//! with a missing or unparsable cell in any selected column (including `NA`)
//! are skipped and reported by line number.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use resave_core::models::r_squared_projected;
use resave_core::rng::Rng;
use resave_core::save::{Standardization, Standardizer};
use resave_core::Observation;

use crate::error::{Error, Result};
use crate::harness::{fit_estimator, Estimator, ExperimentConfig, Summary};

/// A column chosen by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl ColumnSelector {
    /// A bare non-negative integer selects by position, anything else by name.
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        }
    }

    /// Comma-separated list of selectors.
    pub fn parse_list(s: &str) -> Vec<Self> {
        s.split(',').filter(|t| !t.trim().is_empty()).map(Self::parse).collect()
    }

    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            ColumnSelector::Index(i) if *i < headers.len() => Ok(*i),
            ColumnSelector::Index(i) => {
                Err(Error::Schema(format!("column index {i} out of range ({} columns)", headers.len())))
            }
            ColumnSelector::Name(name) => {
                headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))
            }
        }
    }
}

/// Numeric table restricted to the selected columns: column 0 holds the
/// response, the rest the predictors in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response_index: usize,
    pub predictor_indices: Vec<usize>,
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// One-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected: Vec<RejectedRow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.predictor_indices.len()
    }

    pub fn response_name(&self) -> &str {
        &self.column_names[self.response_index]
    }

    pub fn predictor_names(&self) -> Vec<&str> {
        self.predictor_indices.iter().map(|&i| self.column_names[i].as_str()).collect()
    }

    pub fn observation(&self, i: usize) -> Observation {
        let row = &self.rows[i];
        Observation::new(row[self.response_index], self.predictor_indices.iter().map(|&j| row[j]).collect())
    }

    pub fn observations(&self) -> Vec<Observation> {
        (0..self.len()).map(|i| self.observation(i)).collect()
    }

    /// Same rows in a seeded random order.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut out = self.clone();
        Rng::new(seed).shuffle(&mut out.rows);
        out
    }
}

/// Opens `path`, transparently decompressing `.gz` files.
pub fn open_text(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    if path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("gz")) {
        Ok(Box::new(MultiGzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

/// Resolves the response and predictor columns against a header. An empty
/// predictor list selects every other column.
pub fn resolve_columns(
    headers: &[String],
    response: &ColumnSelector,
    predictors: &[ColumnSelector],
) -> Result<(usize, Vec<usize>)> {
    let response = response.resolve(headers)?;
    let predictors: Vec<usize> = if predictors.is_empty() {
        (0..headers.len()).filter(|&i| i != response).collect()
    } else {
        predictors.iter().map(|p| p.resolve(headers)).collect::<Result<_>>()?
    };
    if predictors.is_empty() {
        return Err(Error::Schema("no predictor columns selected".into()));
    }
    if predictors.contains(&response) {
        return Err(Error::Schema("response column is also listed as a predictor".into()));
    }
    for (i, p) in predictors.iter().enumerate() {
        if predictors[..i].contains(p) {
            return Err(Error::Schema(format!("predictor column `{}` selected twice", headers[*p])));
        }
    }
    Ok((response, predictors))
}

/// Parses one finite number. Anything else (empty, `NA`, `nan`, `inf`) is
/// rejected.
pub fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Extracts the selected columns of a record: response first, then
/// predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct RowParser {
    headers: Vec<String>,
    selected: Vec<usize>,
}

impl RowParser {
    pub fn new(headers: Vec<String>, response: &ColumnSelector, predictors: &[ColumnSelector]) -> Result<Self> {
        let (response, predictors) = resolve_columns(&headers, response, predictors)?;
        let selected = std::iter::once(response).chain(predictors).collect();
        Ok(Self { headers, selected })
    }

    pub fn dim(&self) -> usize {
        self.selected.len() - 1
    }

    pub fn parse_row(&self, record: &csv::StringRecord) -> std::result::Result<Vec<f64>, String> {
        if record.len() != self.headers.len() {
            return Err(format!("expected {} fields, found {}", self.headers.len(), record.len()));
        }
        self.selected
            .iter()
            .map(|&c| {
                record
                    .get(c)
                    .and_then(parse_cell)
                    .ok_or_else(|| format!("column `{}`: {:?}", self.headers[c], record.get(c).unwrap_or("")))
            })
            .collect()
    }

    pub fn parse_observation(&self, record: &csv::StringRecord) -> std::result::Result<Observation, String> {
        let row = self.parse_row(record)?;
        Ok(Observation::new(row[0], row[1..].to_vec()))
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    response: &ColumnSelector,
    predictors: &[ColumnSelector],
) -> Result<LoadReport> {
    let path = path.as_ref();
    load_reader(open_text(path)?, response, predictors)
}

/// [`load_csv`] over any reader.
pub fn load_reader(reader: impl Read, response: &ColumnSelector, predictors: &[ColumnSelector]) -> Result<LoadReport> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let (response, predictor_cols) = resolve_columns(&headers, response, predictors)?;
    let selected: Vec<usize> = std::iter::once(response).chain(predictor_cols.iter().copied()).collect();

    let parser = RowParser { headers: headers.clone(), selected: selected.clone() };

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (k, record) in csv.records().enumerate() {
        let fallback = k as u64 + 2;
        match record {
            Ok(record) => {
                let line = record.position().map_or(fallback, |p| p.line());
                match parser.parse_row(&record) {
                    Ok(row) => rows.push(row),
                    Err(reason) => rejected.push(RejectedRow { line, reason }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(fallback, |p| p.line());
                rejected.push(RejectedRow { line, reason: e.to_string() });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let column_names = selected.iter().map(|&c| headers[c].clone()).collect();
    let dataset = Dataset { column_names, rows, response_index: 0, predictor_indices: (1..selected.len()).collect() };
    Ok(LoadReport { dataset, rejected })
}

/// Where the whitening map of a held-out evaluation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoldoutStandardize {
    /// The whole training window (first `n0 + p` rows), shared by both
    /// estimators.
    #[default]
    Training,
    /// The first `n0` rows only (Save-R as in streaming); Save-NR still uses
    /// its full training window.
    Initial,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HoldoutOptions {
    pub config: ExperimentConfig,
    /// Reference direction on the predictor scale. Defaults to the Save-NR
    /// fit on the full dataset.
    pub reference: Option<Vec<f64>>,
    /// Shuffle rows before splitting; file order otherwise.
    pub shuffle_seed: Option<u64>,
    pub standardize: HoldoutStandardize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutReport {
    pub estimator: Estimator,
    pub n0: usize,
    pub p: usize,
    pub beta_hat: Vec<f64>,
    pub reference: Vec<f64>,
    /// Per-row `R²_i` over the held-out rows.
    pub r2: Summary,
    /// Held-out rows where `R²_i` is undefined.
    pub skipped: usize,
}

/// Save-NR direction of the whole dataset, the default reference.
pub fn reference_direction(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<f64>> {
    let obs = data.observations();
    let edr = fit_estimator(Estimator::SaveNr, &obs, obs.len(), config, Standardization::Estimate)?;
    Ok(edr.direction(0))
}

/// Fits on the first `n0 + p` rows (Save-R: `n0` then `p` updates) and scores
/// `R²_i` on every remaining row.
pub fn holdout_eval(
    data: &Dataset,
    n0: usize,
    p: usize,
    estimator: Estimator,
    options: &HoldoutOptions,
) -> Result<HoldoutReport> {
    let train = n0 + p;
    if train >= data.len() {
        return Err(resave_core::Error::InsufficientData { needed: train + 1, got: data.len() }.into());
    }
    let data = match options.shuffle_seed {
        Some(seed) => data.shuffled(seed),
        None => data.clone(),
    };
    let obs = data.observations();
    let reference = match &options.reference {
        Some(r) if r.len() == data.dim() => r.clone(),
        Some(_) => return Err(Error::Usage("reference direction has the wrong dimension".into())),
        None => reference_direction(&data, &options.config)?,
    };
    let standardizer = match (options.standardize, estimator) {
        (HoldoutStandardize::Initial, Estimator::SaveR) => Standardizer::fit(&obs[..n0])?,
        _ => Standardizer::fit(&obs[..train])?,
    };
    let edr = fit_estimator(estimator, &obs[..train], n0, &options.config, Standardization::Fixed(standardizer))?;
    let beta_hat = edr.direction(0);

    let mut values = Vec::with_capacity(obs.len() - train);
    let mut skipped = 0;
    for o in &obs[train..] {
        match r_squared_projected(&beta_hat, &reference, &o.x)? {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    Ok(HoldoutReport { estimator, n0, p, beta_hat, reference, r2: Summary::of(&values), skipped })
}
