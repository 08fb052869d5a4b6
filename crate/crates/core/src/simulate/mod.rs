//! Time integration, regime classification, Poincaré sections and the
//! recurrence check.

mod initial;
mod integrator;
mod metric;
mod poincare;
mod recurrence;
mod regime;
mod trajectory;

pub use initial::{generic_initial, initial_condition, symmetric_initial, InitialKind};
pub use integrator::{dopri5, DenseSegment, IntegratorOptions, Solution, Tolerances};
pub use metric::{rendezvous_metric, MetricMinimum};
pub use poincare::{
    poincare_section, poincare_section_from, ClusterSeparation, Crossing, Parity, PoincareSection,
    CROSSING_TIME_TOL,
};
pub use recurrence::{recurrence_check, recurrence_check_with, RecurrenceOptions, RecurrenceReport};
pub use regime::{
    classify_regime, classify_regime_with, classify_trajectory, sweep_regimes, ClassifierConfig,
    InitialPolicy, Regime, RegimeLabel, SweepCell, SweepSpec,
};
pub use trajectory::{integrate, integrate_with, Trajectory};
