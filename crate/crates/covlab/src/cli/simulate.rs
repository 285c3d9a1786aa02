//! Scenario execution and CSV emission for the `simulate` subcommand.

use std::path::Path;
use std::time::Instant;

use crate::cli::config::Cell;
use crate::error::{Error, Result};
use crate::risk::run_scenario;

/// The stable CSV schema, pinned by a golden-file test.
pub const CSV_HEADER: [&str; 18] = [
    "scenario_id",
    "p",
    "n",
    "truth_kind",
    "prior_kind",
    "nu_rule",
    "loss_family",
    "loss_power",
    "loss_scale",
    "estimator",
    "risk_mean",
    "risk_se",
    "replicates",
    "inner_draws",
    "inner_method",
    "base_seed",
    "wall_ms",
    "error",
];

/// Outcome of a full simulate run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulateSummary {
    pub rows: usize,
    pub error_rows: usize,
}

/// Runs every cell in order (replicate parallelism lives inside the risk
/// engine) and writes one CSV row per cell. A failing cell becomes an
/// error row and the run continues.
pub fn run_simulate(cells: &[Cell], out_path: &Path) -> Result<SimulateSummary> {
    let mut writer = csv::Writer::from_path(out_path).map_err(|e| Error::Io {
        path: out_path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| csv_error(out_path, e))?;
    let mut error_rows = 0;
    for cell in cells {
        let started = Instant::now();
        let outcome = run_scenario(&cell.scenario);
        let wall_ms = started.elapsed().as_millis() as u64;
        let (mean, se, reason) = match &outcome {
            Ok(estimate) => (
                format!("{}", estimate.mean),
                format!("{}", estimate.se),
                String::new(),
            ),
            Err(e) => {
                error_rows += 1;
                (String::new(), String::new(), e.to_string())
            }
        };
        let record = [
            cell.id.clone(),
            cell.scenario.p.to_string(),
            cell.scenario.n.to_string(),
            cell.truth_kind.to_string(),
            cell.prior_kind.clone(),
            cell.nu_rule.clone(),
            cell.loss_family.clone(),
            cell.loss_power.to_string(),
            format!("{}", cell.loss_scale),
            cell.estimator.clone(),
            mean,
            se,
            cell.scenario.replicates.to_string(),
            cell.scenario.effective_inner_draws().to_string(),
            cell.scenario.inner_method().name().to_string(),
            cell.scenario.base_seed.to_string(),
            wall_ms.to_string(),
            reason,
        ];
        writer
            .write_record(&record)
            .map_err(|e| csv_error(out_path, e))?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: out_path.display().to_string(),
        source: e,
    })?;
    Ok(SimulateSummary {
        rows: cells.len(),
        error_rows,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}
