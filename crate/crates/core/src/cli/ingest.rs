use std::io::Read;
use std::path::Path;

use crate::design::{DesignInfo, LimitDistribution, SampleSet};
use crate::error::{Error, Result};

/// Reads `t,y[,sigma]` rows from a CSV file. See [`parse_csv`].
pub fn ingest_csv(path: &Path, min_points: usize) -> Result<SampleSet> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(file, min_points)
}

/// Parses `t,y[,sigma]` rows into a sample sorted by `t`.
///
/// A first row whose first cell is not a number is taken as a header.
/// Lines starting with `#` are skipped. Row numbers in errors count
/// records from 1, header included. Without a sigma column the noise level
/// is estimated from successive differences of the sorted responses.
pub fn parse_csv<R: Read>(reader: R, min_points: usize) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<(f64, f64, Option<f64>)> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() < 2 || record.len() > 3 {
            return Err(Error::Parse {
                row,
                column: record.len().min(3) + usize::from(record.len() > 3),
                message: format!("expected 2 or 3 columns, found {}", record.len()),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    column: w.min(record.len()) + 1,
                    message: format!("expected {w} columns like the first data row, found {}", record.len()),
                })
            }
            _ => {}
        }
        let cell = |column: usize| -> Result<f64> {
            let text = &record[column - 1];
            let value: f64 = text.parse().map_err(|_| Error::Parse {
                row,
                column,
                message: format!("'{text}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: format!("'{text}' is not finite"),
                });
            }
            Ok(value)
        };
        let t = cell(1)?;
        let y = cell(2)?;
        let sigma = if record.len() == 3 { Some(cell(3)?) } else { None };
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Parse {
                row,
                column: 1,
                message: format!("design point {t} outside [0, 1]"),
            });
        }
        if let Some(s) = sigma {
            if s <= 0.0 {
                return Err(Error::Parse {
                    row,
                    column: 3,
                    message: format!("noise level {s} must be positive"),
                });
            }
        }
        rows.push((t, y, sigma));
    }
    let needed = min_points.max(2);
    if rows.len() < needed {
        return Err(Error::invalid(format!(
            "need at least {needed} observations, found {}",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("duplicate design point t = {}", w[0].0)));
    }
    let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let design = DesignInfo::new(t, LimitDistribution::Uniform)?;
    if width == Some(3) {
        let sigma = rows.iter().map(|r| r.2.unwrap_or(f64::NAN)).collect();
        SampleSet::new(design, y, sigma)
    } else {
        SampleSet::with_estimated_sigma(design, y)
    }
}
