//! Empirical check that the rendezvous metric revisits its minima.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::metric::rendezvous_metric;
use crate::simulate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceOptions {
    /// Start of the post-transient window, as a fraction of the span.
    pub transient_fraction: f64,
    /// Minima are taken from this leading fraction of the window.
    pub probe_fraction: f64,
    pub samples: usize,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions {
            transient_fraction: 0.5,
            probe_fraction: 0.4,
            samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub epsilon: f64,
    pub window: (f64, f64),
    pub minima: usize,
    pub satisfied: usize,
    /// `satisfied / minima`; zero when there are no minima.
    pub fraction: f64,
    /// Largest `min_{t₂} d(t₂) − δ` over the probed minima, where `t₂`
    /// ranges over times after the metric first leaves `[0, δ + ε)`.
    pub worst_gap: f64,
}

impl RecurrenceReport {
    /// True only when there was something to check and all of it held.
    pub fn passed(&self) -> bool {
        self.minima > 0 && self.satisfied == self.minima
    }
}

/// For each local minimum `δ` at `t₁` in the first part of the
/// post-transient window, look for a later `t₂` with `d(t₂) < δ + ε`. To
/// rule out the trivial `t₂` right after `t₁`, the search starts once the
/// metric has first risen to `δ + ε`; a metric that never rises again
/// counts as revisiting.
pub fn recurrence_check(traj: &Trajectory, epsilon: f64) -> Result<RecurrenceReport> {
    recurrence_check_with(traj, epsilon, &RecurrenceOptions::default())
}

pub fn recurrence_check_with(
    traj: &Trajectory,
    epsilon: f64,
    options: &RecurrenceOptions,
) -> Result<RecurrenceReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let w0 = t0 + options.transient_fraction * (t1 - t0);
    let probe_end = w0 + options.probe_fraction * (t1 - w0);
    let grid = traj.sample(w0, t1, options.samples.max(3))?;
    let values: Vec<f64> = grid.iter().map(|(_, s)| rendezvous_metric(s)).collect();
    let minima = traj.metric_minima(w0, probe_end, options.samples)?;

    let mut satisfied = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for m in &minima {
        let threshold = m.value + epsilon;
        let start = grid.partition_point(|(t, _)| *t <= m.t);
        let exit = (start..values.len()).find(|&i| values[i] >= threshold);
        let gap = match exit {
            None => 0.0,
            Some(i) => {
                let later = values[i..].iter().copied().fold(f64::INFINITY, f64::min);
                if later.is_finite() {
                    later - m.value
                } else {
                    f64::INFINITY
                }
            }
        };
        if gap < epsilon {
            satisfied += 1;
        }
        worst_gap = worst_gap.max(gap);
    }
    Ok(RecurrenceReport {
        epsilon,
        window: (w0, t1),
        minima: minima.len(),
        satisfied,
        fraction: if minima.is_empty() {
            0.0
        } else {
            satisfied as f64 / minima.len() as f64
        },
        worst_gap: if minima.is_empty() { f64::NAN } else { worst_gap },
    })
}
