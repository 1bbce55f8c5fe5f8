//! CSV emission.

use std::io::Write;
use std::path::Path;

use ldvote::dynamics::SchedulerKind;
use ldvote::metrics::ResultRow;

use crate::batch::{CellResult, ExperimentOutput};
use crate::config::ExperimentConfig;

pub const CELL_COLUMNS: [&str; 11] =
    ["distribution", "n", "m", "metric", "r", "k", "bias", "scheduler", "initial_state", "row_kind", "profile"];

pub fn header() -> Vec<&'static str> {
    CELL_COLUMNS.iter().chain(ResultRow::COLUMNS.iter()).copied().collect()
}

/// Infinite and absent values become empty cells.
fn number(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

fn scheduler_label(cfg: &ExperimentConfig) -> &'static str {
    match (cfg.scheduler.kind, cfg.scheduler.opportunity_priority) {
        (SchedulerKind::SingletonUniform, _) => "singleton",
        (SchedulerKind::GroupRandom, false) => "group",
        (SchedulerKind::GroupRandom, true) => "group_priority",
    }
}

fn record(cfg: &ExperimentConfig, dist: &str, cell: &CellResult, kind: &str, profile: &str, row: &ResultRow) -> Vec<String> {
    let k = match (cell.k, cfg.k) {
        (Some(k), _) => k.to_string(),
        (None, Some(spec)) => spec.to_string(),
        (None, None) => String::new(),
    };
    let mut out = vec![
        dist.to_string(),
        cell.cell.n.to_string(),
        cell.cell.m.to_string(),
        cfg.metric.to_string(),
        cell.cell.r.to_string(),
        k,
        cfg.bias.to_string(),
        scheduler_label(cfg).to_string(),
        cfg.initial_state.to_string(),
        kind.to_string(),
        profile.to_string(),
    ];
    out.extend(row.values().into_iter().map(number));
    out
}

/// Writes per-profile rows then the cell mean, cell by cell. Aborted cells
/// are left out.
pub fn write_csv<W: Write>(cfg: &ExperimentConfig, output: &ExperimentOutput, w: W) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(header())?;
    for cell in output.cells.iter().filter(|c| c.aborted.is_none()) {
        for (p, row) in cell.rows.iter().enumerate() {
            wtr.write_record(record(cfg, &output.distribution, cell, "profile", &p.to_string(), row))?;
        }
        if let Some(mean) = &cell.mean {
            wtr.write_record(record(cfg, &output.distribution, cell, "cell_mean", "", mean))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(cfg: &ExperimentConfig, output: &ExperimentOutput, path: &Path) -> csv::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    write_csv(cfg, output, std::io::BufWriter::new(file))
}
