use alloc::vec::Vec;

use super::{positivity_certificate, solve_nehari, SolveConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ScanStatus {
    Solved { converged: bool, level: f64, residual: f64, positivity_ok: bool, iterations: usize },
    ThresholdViolation { threshold: f64 },
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub gamma: f64,
    pub status: ScanStatus,
}

impl ScanRow {
    pub fn converged(&self) -> bool {
        matches!(self.status, ScanStatus::Solved { converged: true, .. })
    }

    pub fn level(&self) -> Option<f64> {
        match self.status {
            ScanStatus::Solved { level, .. } => Some(level),
            _ => None,
        }
    }
}

/// Solves one scan entry; failures are recorded in the row.
pub fn scan_entry(base: &SolveConfig, gamma: f64) -> ScanRow {
    let cfg = base.with_gamma(gamma);
    let status = match solve_nehari(&cfg) {
        Ok(out) => {
            let positivity_ok = out.converged
                && out.min_interior_value > 0.0
                && positivity_certificate(&out.state, &cfg.problem).map(|c| c.ok).unwrap_or(false);
            ScanStatus::Solved {
                converged: out.converged,
                level: out.energy_level,
                residual: out.residual,
                positivity_ok,
                iterations: out.iterations,
            }
        }
        Err(Error::ThresholdViolation { threshold, .. }) => ScanStatus::ThresholdViolation { threshold },
        Err(e) => ScanStatus::Failed(e),
    };
    ScanRow { gamma, status }
}

/// Runs [`solve_nehari`] at every γ of an ascending grid.
pub fn threshold_scan(base: &SolveConfig, gamma_grid: &[f64]) -> Result<Vec<ScanRow>> {
    if gamma_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("gamma grid must be sorted ascending".into()));
    }
    Ok(gamma_grid.iter().map(|&g| scan_entry(base, g)).collect())
}

/// Whether the level is nonincreasing in γ across the converged rows of a
/// scan, or `None` with fewer than two such rows. This is an observation
/// about the grid, not a statement about the continuous problem.
pub fn levels_nonincreasing(rows: &[ScanRow]) -> Option<bool> {
    let levels: Vec<f64> = rows.iter().filter(|r| r.converged()).filter_map(ScanRow::level).collect();
    if levels.len() < 2 {
        return None;
    }
    Some(levels.windows(2).all(|w| w[1] <= w[0]))
}
