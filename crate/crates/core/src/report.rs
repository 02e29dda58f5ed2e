//! CSV writers for per-epoch results.
//!
//! Undefined values (no delivery, no score) are written as `NA`. Floats use
//! the shortest representation that round-trips, so identical runs produce
//! identical bytes.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::EpochReport;

pub const NA: &str = "NA";

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), |v| v.to_string())
}

pub fn metrics_csv<W: io::Write>(reports: &[EpochReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "receive_rate", "avg_delay", "avg_neighbor_score"])?;
    for r in reports {
        w.write_record([
            r.epoch.to_string(),
            fmt_opt(r.receive_rate),
            fmt_opt(r.avg_delay),
            fmt_opt(r.avg_neighbor_score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `epoch,rank,score`, ranks counted from 0 in ascending score order.
pub fn score_dist_csv<W: io::Write>(reports: &[EpochReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "rank", "score"])?;
    for r in reports {
        for (rank, s) in r.score_distribution.iter().enumerate() {
            w.write_record([r.epoch.to_string(), rank.to_string(), s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn topic_metrics_csv<W: io::Write>(reports: &[EpochReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "topic", "receive_rate", "avg_delay"])?;
    for r in reports {
        for t in &r.per_topic {
            w.write_record([r.epoch.to_string(), t.topic.to_string(), fmt_opt(t.receive_rate), fmt_opt(t.avg_delay)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows only for epochs that carry attack metrics.
pub fn attack_csv<W: io::Write>(reports: &[EpochReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "victim_topic_coverage", "victim_topic_delay", "attacker_outgoing_fraction"])?;
    for r in reports {
        if let Some(a) = &r.attack {
            w.write_record([
                r.epoch.to_string(),
                fmt_opt(a.victim_topic_coverage),
                fmt_opt(a.victim_topic_delay),
                a.attacker_outgoing_fraction.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Create `path` and hand a buffered writer to `write`.
pub fn write_file(path: &Path, write: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write(BufWriter::new(file)).map_err(|e| Error::csv(path, e))
}

/// `metrics.csv`, `score_dist.csv`, `topic_metrics.csv` and, when any epoch
/// has attack metrics, `attack.csv` under `dir`.
pub fn write_reports(reports: &[EpochReport], dir: &Path) -> Result<()> {
    write_file(&dir.join("metrics.csv"), |w| metrics_csv(reports, w))?;
    write_file(&dir.join("score_dist.csv"), |w| score_dist_csv(reports, w))?;
    write_file(&dir.join("topic_metrics.csv"), |w| topic_metrics_csv(reports, w))?;
    if reports.iter().any(|r| r.attack.is_some()) {
        write_file(&dir.join("attack.csv"), |w| attack_csv(reports, w))?;
    }
    Ok(())
}

/// Mean and sample standard deviation of the defined values; the deviation
/// is undefined below two values.
pub fn mean_std(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let xs: Vec<f64> = values.iter().flatten().copied().collect();
    if xs.is_empty() {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

/// Per-epoch mean and standard deviation across seeds of every
/// `metrics.csv` measure. Seeds may have different lengths; each epoch
/// uses the seeds that reached it.
pub fn summary_csv<W: io::Write>(per_seed: &[&[EpochReport]], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epoch",
        "seeds",
        "receive_rate_mean",
        "receive_rate_std",
        "avg_delay_mean",
        "avg_delay_std",
        "avg_neighbor_score_mean",
        "avg_neighbor_score_std",
    ])?;
    let epochs = per_seed.iter().map(|r| r.len()).max().unwrap_or(0);
    for e in 0..epochs {
        let rows: Vec<&EpochReport> = per_seed.iter().filter_map(|r| r.get(e)).collect();
        let mut rec = vec![e.to_string(), rows.len().to_string()];
        for pick in [
            (|r: &EpochReport| r.receive_rate) as fn(&EpochReport) -> Option<f64>,
            |r| r.avg_delay,
            |r| r.avg_neighbor_score,
        ] {
            let (m, s) = mean_std(&rows.iter().map(|r| pick(r)).collect::<Vec<_>>());
            rec.push(fmt_opt(m));
            rec.push(fmt_opt(s));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
