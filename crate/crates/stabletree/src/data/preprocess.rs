//! Missing-row removal and one-hot encoding.

use std::collections::BTreeSet;

use serde::Deserialize;
use stabletree_core::{Dataset, FeatureMatrix};

use super::table::{ColumnData, RawTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One indicator per level.
    #[default]
    KeepAll,
    /// Drops the lexicographically first level of each categorical column.
    DropFirst,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Preprocessing {
    pub encoding: Encoding,
    /// Columns that keep every level under [`Encoding::DropFirst`].
    pub keep_all_levels: Vec<String>,
    /// Columns removed before anything else.
    pub drop: Vec<String>,
}

/// Encoded features.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub x: FeatureMatrix,
    pub names: Vec<String>,
    /// Rows of the raw table that survived missing-value removal.
    pub rows: Vec<usize>,
}

/// Encodes every column except `exclude` into numeric features, dropping rows
/// with a missing value in any used column (including `exclude`).
pub fn encode_features(raw: &RawTable, exclude: Option<&str>, opts: &Preprocessing) -> Result<Features> {
    for d in &opts.drop {
        if raw.column(d).is_none() {
            return Err(Error::Data(format!("column '{d}' listed in drop does not exist")));
        }
    }
    let used: Vec<_> = raw
        .columns()
        .iter()
        .filter(|c| !opts.drop.contains(&c.name))
        .collect();
    let rows: Vec<usize> = (0..raw.n_rows())
        .filter(|&i| used.iter().all(|c| !c.data.is_missing(i)))
        .collect();
    if rows.is_empty() {
        return Err(Error::Data("no rows left after removing missing values".into()));
    }

    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in used.iter().filter(|c| Some(c.name.as_str()) != exclude) {
        match &c.data {
            ColumnData::Numeric(v) => {
                names.push(c.name.clone());
                cols.push(rows.iter().map(|&i| v[i].unwrap()).collect());
            }
            ColumnData::Categorical(v) => {
                let levels: BTreeSet<&str> = rows.iter().map(|&i| v[i].as_deref().unwrap()).collect();
                let skip = match opts.encoding {
                    Encoding::KeepAll => 0,
                    Encoding::DropFirst if opts.keep_all_levels.contains(&c.name) => 0,
                    Encoding::DropFirst => 1,
                };
                for level in levels.into_iter().skip(skip) {
                    names.push(format!("{}_{level}", c.name));
                    cols.push(
                        rows.iter()
                            .map(|&i| f64::from(u8::from(v[i].as_deref() == Some(level))))
                            .collect(),
                    );
                }
            }
        }
    }

    let n = rows.len();
    let m = cols.len();
    let mut values = Vec::with_capacity(n * m);
    for r in 0..n {
        values.extend(cols.iter().map(|c| c[r]));
    }
    Ok(Features {
        x: FeatureMatrix::new(values, n, m)?,
        names,
        rows,
    })
}

/// Turns a raw table into a numeric dataset with response `target`.
pub fn preprocess(raw: &RawTable, target: &str, opts: &Preprocessing) -> Result<Dataset> {
    let col = raw
        .column(target)
        .ok_or_else(|| Error::Data(format!("target column '{target}' not found")))?;
    let ColumnData::Numeric(y) = &col.data else {
        return Err(Error::Data(format!("target column '{target}' is not numeric")));
    };
    if opts.drop.iter().any(|d| d == target) {
        return Err(Error::Data(format!("target column '{target}' is listed in drop")));
    }
    let f = encode_features(raw, Some(target), opts)?;
    let y = f.rows.iter().map(|&i| y[i].unwrap()).collect();
    Ok(Dataset::new(f.x, y, f.names, target.to_string())?)
}

/// Reorders `x`'s columns to `wanted`, failing if the names differ as sets.
pub fn align_columns(x: &FeatureMatrix, names: &[String], wanted: &[String]) -> Result<FeatureMatrix> {
    let missing: Vec<String> = wanted.iter().filter(|w| !names.contains(w)).cloned().collect();
    let extra: Vec<String> = names.iter().filter(|n| !wanted.contains(n)).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Columns { missing, extra });
    }
    select_columns(x, names, wanted)
}

/// Picks the columns `wanted` (by name) from `x`; extra columns are ignored.
pub fn select_columns(x: &FeatureMatrix, names: &[String], wanted: &[String]) -> Result<FeatureMatrix> {
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| names.iter().position(|n| n == w))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Columns {
            missing: wanted.iter().filter(|w| !names.contains(w)).cloned().collect(),
            extra: Vec::new(),
        })?;
    let mut values = Vec::with_capacity(x.n_rows() * idx.len());
    for r in x.rows() {
        values.extend(idx.iter().map(|&j| r[j]));
    }
    Ok(FeatureMatrix::new(values, x.n_rows(), idx.len())?)
}
