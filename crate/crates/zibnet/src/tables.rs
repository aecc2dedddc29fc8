//! Delimited-text ingestion of abundance tables and covariates, the
//! prevalence filter, and total-sum scaling to relative abundances.

use crate::error::{Error, Result};
use crate::margin::ONE_CLAMP;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

/// Labels treated as unassigned taxa (case-insensitive) unless overridden.
pub const DEFAULT_UNASSIGNED_LABELS: [&str; 3] = ["", "unassigned", "unclassified"];

/// Which direction the taxa run in the input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// header row is taxa; one row per sample
    TaxaAsColumns,
    /// header row is samples; one row per taxon
    TaxaAsRows,
}

/// A samples x taxa matrix of nonnegative values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbundanceTable {
    pub sample_ids: Vec<String>,
    pub taxon_ids: Vec<String>,
    /// row l = sample l, column k = taxon k
    pub values: Vec<Vec<f64>>,
    pub is_normalized: bool,
}

/// Covariates after numeric/reference coding, aligned to an abundance table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateTable {
    pub sample_ids: Vec<String>,
    /// expanded column names (indicators named "column=level")
    pub columns: Vec<String>,
    /// one row per sample, aligned with `sample_ids`
    pub values: Vec<Vec<f64>>,
    /// samples dropped by complete-case filtering
    pub dropped: usize,
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => b',',
        _ => b'\t',
    }
}

fn parse_error(path: &Path, row: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        row,
        col,
        msg: msg.into(),
    }
}

fn read_grid(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path))
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let mut grid: Vec<Vec<String>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let row: Vec<String> = record.iter().map(|s| s.trim().to_string()).collect();
        if row.iter().all(String::is_empty) {
            continue;
        }
        if !grid.is_empty() && row.len() != grid[0].len() {
            return Err(parse_error(
                path,
                r + 1,
                row.len(),
                format!("expected {} fields, found {}", grid[0].len(), row.len()),
            ));
        }
        grid.push(row);
    }
    if grid.len() < 2 || grid[0].len() < 2 {
        return Err(parse_error(path, 1, 1, "table needs a header and at least one data row"));
    }
    Ok(grid)
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(format!("{what} '{id}'")));
        }
    }
    Ok(())
}

/// Load a counts/abundance table from TSV or CSV (by file extension). The
/// top-left cell is ignored; the first row and first column are identifiers.
pub fn load_counts(path: &Path, orientation: Orientation) -> Result<AbundanceTable> {
    let grid = read_grid(path)?;
    let col_ids: Vec<String> = grid[0][1..].to_vec();
    let row_ids: Vec<String> = grid[1..].iter().map(|r| r[0].clone()).collect();

    let mut values = Vec::with_capacity(grid.len() - 1);
    for (r, row) in grid[1..].iter().enumerate() {
        let mut out = Vec::with_capacity(row.len() - 1);
        for (c, cell) in row[1..].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, r + 2, c + 2, format!("non-numeric value '{cell}'")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(parse_error(path, r + 2, c + 2, format!("negative or non-finite value {v}")));
            }
            out.push(v);
        }
        values.push(out);
    }

    let (sample_ids, taxon_ids, values) = match orientation {
        Orientation::TaxaAsColumns => (row_ids, col_ids, values),
        Orientation::TaxaAsRows => {
            let transposed: Vec<Vec<f64>> = (0..values[0].len())
                .map(|c| values.iter().map(|row| row[c]).collect())
                .collect();
            (col_ids, row_ids, transposed)
        }
    };
    check_unique(&sample_ids, "sample id")?;
    check_unique(&taxon_ids, "taxon id")?;
    Ok(AbundanceTable {
        sample_ids,
        taxon_ids,
        values,
        is_normalized: false,
    })
}

/// Drop unassigned taxa, drop taxa below the prevalence threshold, drop
/// samples with zero total, then total-sum-scale each sample. Values that
/// would land exactly at 1 are clamped just below it.
pub fn filter_and_normalize(
    table: &AbundanceTable,
    min_prevalence: f64,
    unassigned_labels: &[String],
) -> Result<AbundanceTable> {
    let n = table.sample_ids.len();
    let drop_labels: BTreeSet<String> = unassigned_labels
        .iter()
        .map(|s| s.to_lowercase())
        .collect();

    let keep_taxa: Vec<usize> = (0..table.taxon_ids.len())
        .filter(|&k| {
            if drop_labels.contains(&table.taxon_ids[k].to_lowercase()) {
                return false;
            }
            let prevalence = table.values.iter().filter(|row| row[k] > 0.0).count() as f64
                / n as f64;
            prevalence >= min_prevalence
        })
        .collect();
    if keep_taxa.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }

    let mut sample_ids = Vec::new();
    let mut values = Vec::new();
    for (l, row) in table.values.iter().enumerate() {
        let kept: Vec<f64> = keep_taxa.iter().map(|&k| row[k]).collect();
        let total: f64 = kept.iter().sum();
        if total <= 0.0 {
            continue;
        }
        values.push(kept.iter().map(|&v| (v / total).min(ONE_CLAMP)).collect());
        sample_ids.push(table.sample_ids[l].clone());
    }
    if values.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    Ok(AbundanceTable {
        sample_ids,
        taxon_ids: keep_taxa.iter().map(|&k| table.taxon_ids[k].clone()).collect(),
        values,
        is_normalized: true,
    })
}

/// A raw covariate file: identifier column plus named columns of strings.
#[derive(Debug, Clone)]
pub struct RawCovariates {
    pub sample_ids: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

/// Load a covariate file (first column sample id, header row of names).
pub fn load_covariates(path: &Path) -> Result<RawCovariates> {
    let grid = read_grid(path)?;
    let columns: Vec<String> = grid[0][1..].to_vec();
    let sample_ids: Vec<String> = grid[1..].iter().map(|r| r[0].clone()).collect();
    check_unique(&sample_ids, "sample id")?;
    Ok(RawCovariates {
        sample_ids,
        columns,
        cells: grid[1..].iter().map(|r| r[1..].to_vec()).collect(),
    })
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.to_lowercase().as_str(), "" | "na" | "nan" | "null" | "missing")
}

/// Restrict both tables to samples with complete covariate data for the
/// selected columns, aligned by sample id. Numeric columns pass through;
/// non-numeric columns are reference-coded (the alphabetically first level
/// is the reference) as indicators named "column=level".
pub fn align_covariates(
    table: &AbundanceTable,
    raw: &RawCovariates,
    used_columns: &[String],
) -> Result<(AbundanceTable, CovariateTable)> {
    let col_idx: Vec<usize> = used_columns
        .iter()
        .map(|name| {
            raw.columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        })
        .collect::<Result<_>>()?;

    let cov_by_id: BTreeMap<&str, &Vec<String>> = raw
        .sample_ids
        .iter()
        .map(String::as_str)
        .zip(&raw.cells)
        .collect();

    // complete-case sample set, in abundance-table order
    let mut kept_rows = Vec::new();
    for (l, id) in table.sample_ids.iter().enumerate() {
        if let Some(cells) = cov_by_id.get(id.as_str()) {
            if col_idx.iter().all(|&c| !is_missing(&cells[c])) {
                kept_rows.push(l);
            }
        }
    }
    if kept_rows.is_empty() {
        return Err(Error::NoOverlap);
    }
    let dropped = table.sample_ids.len() - kept_rows.len();

    // decide numeric vs categorical per column from the kept samples
    let mut columns = Vec::new();
    let mut encoders: Vec<Box<dyn Fn(&str) -> Vec<f64>>> = Vec::new();
    for (&c, name) in col_idx.iter().zip(used_columns) {
        let all_numeric = kept_rows.iter().all(|&l| {
            cov_by_id[table.sample_ids[l].as_str()][c]
                .parse::<f64>()
                .is_ok()
        });
        if all_numeric {
            columns.push(name.clone());
            encoders.push(Box::new(|cell: &str| vec![cell.parse::<f64>().unwrap()]));
        } else {
            let levels: Vec<String> = kept_rows
                .iter()
                .map(|&l| cov_by_id[table.sample_ids[l].as_str()][c].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            // first level (alphabetical) is the reference
            for level in &levels[1..] {
                columns.push(format!("{name}={level}"));
            }
            let non_ref: Vec<String> = levels[1..].to_vec();
            encoders.push(Box::new(move |cell: &str| {
                non_ref.iter().map(|lv| f64::from(lv == cell)).collect()
            }));
        }
    }

    let mut cov_values = Vec::with_capacity(kept_rows.len());
    for &l in &kept_rows {
        let cells = cov_by_id[table.sample_ids[l].as_str()];
        let mut row = Vec::with_capacity(columns.len());
        for (&c, enc) in col_idx.iter().zip(&encoders) {
            row.extend(enc(&cells[c]));
        }
        cov_values.push(row);
    }

    let aligned = AbundanceTable {
        sample_ids: kept_rows.iter().map(|&l| table.sample_ids[l].clone()).collect(),
        taxon_ids: table.taxon_ids.clone(),
        values: kept_rows.iter().map(|&l| table.values[l].clone()).collect(),
        is_normalized: table.is_normalized,
    };
    let covariates = CovariateTable {
        sample_ids: aligned.sample_ids.clone(),
        columns,
        values: cov_values,
        dropped,
    };
    Ok((aligned, covariates))
}
