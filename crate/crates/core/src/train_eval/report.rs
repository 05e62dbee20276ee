use std::path::Path;

use super::eval::EvalReport;
use super::protocol::SweepPoint;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 4] = ["x", "mean_accuracy", "std_accuracy", "n_repeats"];

/// `x,mean_accuracy,std_accuracy,n_repeats`, accuracies to 6 decimals.
pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(SWEEP_HEADER).map_err(|e| Error::csv(path, e))?;
    for p in points {
        w.write_record([
            p.x.to_string(),
            format!("{:.6}", p.mean_accuracy),
            format!("{:.6}", p.std_accuracy),
            p.n_repeats.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a sweep CSV back; per-repeat accuracies are not stored and come back empty.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::MalformedCsv {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", SWEEP_HEADER.join(",")),
        });
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |f: &str| Error::MalformedCsv { path: path.to_path_buf(), line, message: format!("bad {f}") };
            Ok(SweepPoint {
                x: rec[0].parse().map_err(|_| bad("x"))?,
                mean_accuracy: rec[1].parse().map_err(|_| bad("mean_accuracy"))?,
                std_accuracy: rec[2].parse().map_err(|_| bad("std_accuracy"))?,
                n_repeats: rec[3].parse().map_err(|_| bad("n_repeats"))?,
                accuracies: Vec::new(),
            })
        })
        .collect()
}

/// `(C+1) × (C+1)` grid: a header row and column of glyphs around the counts
/// (rows true, columns predicted).
pub fn write_confusion_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let glyphs: Vec<String> = report.class_list.iter().map(|c| c.glyph.to_string()).collect();
    let mut header = vec!["true\\pred".to_string()];
    header.extend(glyphs.iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (g, row) in glyphs.iter().zip(&report.confusion) {
        let mut rec = vec![g.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
