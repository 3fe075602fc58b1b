//! HLAS inputs extracted from raw measurement logs.

pub mod efficiency;
pub mod frf;
pub mod friction;
pub mod log;
pub mod qc;
pub mod thermal;

pub use efficiency::{log_efficiency, point_efficiency, task_weighted_efficiency, EfficiencyField, LogEfficiency, PointEfficiency};
pub use frf::{compute_frf, find_crossover, sweep_freqs, sweep_segments, Crossover, CrossoverKind, FrfPoint, SweepSegment};
pub use friction::{fit_friction, FrictionFit};
pub use log::TimeSeriesLog;
pub use qc::{loaded_bandwidth_check, power_balance_check, PowerBalance};
pub use thermal::{detect_plateau, PlateauResult, DEFAULT_PLATEAU_WINDOW_S, DEFAULT_SLOPE_LIMIT_C_PER_S};
