use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{Closure, Dataset, DatasetError, Split};
use crate::estimators::Estimator;
use crate::raster::{area_error, jaccard};

pub const HISTOGRAM_BINS: usize = 20;

/// One scored sample. Failed samples (estimator error, or nothing to compare)
/// score a Jaccard of 0 and carry the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub jaccard: f64,
    pub area_error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub estimator: String,
    pub rows: Vec<ReportRow>,
    pub mean_jaccard: f64,
    /// Jaccard counts over 20 equal bins of [0, 1]; 1.0 falls in the last bin.
    pub histogram: [usize; HISTOGRAM_BINS],
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }
}

/// Scores `estimator` on the unaugmented samples of `split` (all samples
/// when `None`), optionally restricted to one closure kind.
pub fn evaluate(
    dataset: &Dataset,
    estimator: &dyn Estimator,
    split: Option<Split>,
    closure: Option<Closure>,
) -> Result<Report, DatasetError> {
    let ids: Vec<&str> = dataset
        .manifest
        .ids(split)
        .filter(|e| e.augmented_from.is_none())
        .map(|e| e.id.as_str())
        .collect();
    let rows: Vec<Option<ReportRow>> = ids
        .par_iter()
        .map(|id| {
            let sample = dataset.load_sample(id)?;
            if closure.is_some_and(|c| c != sample.meta.closure) {
                return Ok(None);
            }
            let fail = |reason: String| {
                log::warn!("sample {id}: {reason}");
                ReportRow {
                    id: id.to_string(),
                    jaccard: 0.0,
                    area_error: None,
                    failure: Some(reason),
                }
            };
            let row = match sample.input().and_then(|inp| estimator.estimate(&inp)) {
                Err(e) => fail(e.to_string()),
                Ok(sim) => match jaccard(&sim, &sample.outlet) {
                    Err(e) => fail(e.to_string()),
                    Ok(j) => ReportRow {
                        id: id.to_string(),
                        jaccard: j,
                        area_error: area_error(&sim, &sample.outlet).ok(),
                        failure: None,
                    },
                },
            };
            Ok(Some(row))
        })
        .collect::<Result<_, DatasetError>>()?;
    let rows: Vec<ReportRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(DatasetError::EmptySelection);
    }
    let scores: Vec<f64> = rows.iter().map(|r| r.jaccard).collect();
    Ok(Report {
        estimator: estimator.id(),
        mean_jaccard: scores.iter().sum::<f64>() / scores.len() as f64,
        histogram: histogram(&scores),
        rows,
    })
}

pub fn histogram(scores: &[f64]) -> [usize; HISTOGRAM_BINS] {
    let mut bins = [0; HISTOGRAM_BINS];
    for &s in scores {
        let b = ((s * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    jaccard: f64,
    area_error: Option<f64>,
    estimator: &'a str,
}

/// Per-sample CSV: `id,jaccard,area_error,estimator`; undefined area errors
/// are left blank.
pub fn write_report_csv(report: &Report, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.rows {
        w.serialize(CsvRow {
            id: &r.id,
            jaccard: r.jaccard,
            area_error: r.area_error,
            estimator: &report.estimator,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram CSV: `bin_lo,count`.
pub fn write_histogram_csv(report: &Report, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "count"])?;
    for (b, count) in report.histogram.iter().enumerate() {
        w.write_record([format!("{:.2}", b as f64 / HISTOGRAM_BINS as f64), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split_dataset, write_dataset, DatasetConfig};
    use crate::estimators::{Baseline1, Flow};

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.049, 0.05, 0.5, 0.999, 1.0]);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[10], 1);
        assert_eq!(h[19], 2);
        assert_eq!(h.iter().sum::<usize>(), 6);
    }

    #[test]
    fn flow_scores_itself_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = write_dataset(&dir.path().join("ds"), &DatasetConfig::new(3, 4)).unwrap();
        ds.manifest = split_dataset(&ds.manifest, (0.5, 0.0, 0.5), 1).unwrap();
        let flow = Flow::new(ds.manifest.config.flow);
        let full = evaluate(&ds, &flow, None, Some(Closure::Full)).unwrap();
        assert_eq!(full.rows.len(), 4);
        assert_eq!(full.mean_jaccard, 1.0);
        assert_eq!(full.histogram[19], 4);

        let b1 = evaluate(&ds, &Baseline1, Some(Split::Eval), None).unwrap();
        assert_eq!(b1.rows.len(), 4);
        assert!(b1.mean_jaccard > 0.0 && b1.mean_jaccard < 1.0);
        let mean = b1.rows.iter().map(|r| r.jaccard).sum::<f64>() / 4.0;
        assert!((b1.mean_jaccard - mean).abs() <= 1e-12);

        let csv_path = dir.path().join("r.csv");
        write_report_csv(&b1, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("id,jaccard,area_error,estimator\n"));
        assert_eq!(text.lines().count(), 5);
        let hist_path = dir.path().join("h.csv");
        write_histogram_csv(&b1, &hist_path).unwrap();
        let text = std::fs::read_to_string(&hist_path).unwrap();
        assert!(text.starts_with("bin_lo,count\n0.00,"));
        assert_eq!(text.lines().count(), 21);
    }
}
