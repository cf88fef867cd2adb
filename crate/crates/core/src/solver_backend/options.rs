use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Environment variable naming the backend (`highs`).
pub const BACKEND_ENV: &str = "PCR_CLEAR_BACKEND";
/// Environment variable overriding the time limit in seconds.
pub const TIME_LIMIT_ENV: &str = "PCR_CLEAR_TIME_LIMIT";
/// Environment variable overriding the relative gap target.
pub const GAP_ENV: &str = "PCR_CLEAR_GAP";
/// When set, the backend prints its own progress log.
pub const SOLVER_LOG_ENV: &str = "PCR_CLEAR_SOLVER_LOG";
/// Extra HiGHS options as comma-separated `key=value` pairs.
pub const HIGHS_OPTIONS_ENV: &str = "PCR_CLEAR_HIGHS_OPTIONS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// `None` means no limit.
    pub time_limit: Option<Duration>,
    pub relative_gap_target: f64,
    pub absolute_gap_target: f64,
    pub integer_feasibility_tol: f64,
    pub lp_feasibility_tol: f64,
    /// `None` leaves the backend default.
    pub thread_count: Option<u32>,
    pub honor_branching_hints: bool,
    /// Full column vector of a candidate incumbent.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    // Tighter than typical solver defaults: big-M rows amplify slack.
    fn default() -> Self {
        SolveOptions {
            time_limit: None,
            relative_gap_target: 1e-6,
            absolute_gap_target: 1e-6,
            integer_feasibility_tol: 1e-6,
            lp_feasibility_tol: 1e-9,
            thread_count: None,
            honor_branching_hints: false,
            warm_start: None,
        }
    }
}

impl SolveOptions {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.integer_feasibility_tol > 0.0 && self.lp_feasibility_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.relative_gap_target >= 0.0 && self.absolute_gap_target >= 0.0) {
            return Err("gap targets must be non-negative".into());
        }
        Ok(())
    }

    /// Applies `PCR_CLEAR_TIME_LIMIT` and `PCR_CLEAR_GAP` when set.
    pub fn with_env_overrides(mut self) -> Result<Self, String> {
        if let Ok(v) = std::env::var(TIME_LIMIT_ENV) {
            let secs: f64 = v
                .parse()
                .map_err(|_| format!("{TIME_LIMIT_ENV}={v:?} is not a number"))?;
            if !(secs >= 0.0) {
                return Err(format!("{TIME_LIMIT_ENV} must be >= 0"));
            }
            self.time_limit = Some(Duration::from_secs_f64(secs));
        }
        if let Ok(v) = std::env::var(GAP_ENV) {
            self.relative_gap_target = v
                .parse()
                .map_err(|_| format!("{GAP_ENV}={v:?} is not a number"))?;
        }
        self.validate()?;
        Ok(self)
    }
}
