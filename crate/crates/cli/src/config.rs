//! Run configuration: one JSON document per experiment.
//!
//! The config reuses the library's own parameter types (sample plan,
//! schedule overrides, evaluation settings, thresholds) so that what the
//! driver parses is exactly what the experiment consumes, and the whole
//! document can be embedded in the output report for reproducibility.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use selberg_lab::dirpoly::ScheduleOverrides;
use selberg_lab::lfunc::EvalConfig;
use selberg_lab::moments::Thresholds;
use selberg_lab::stats::{SamplePlan, StatsThresholds};

/// Verdict thresholds for the clt command.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CltThresholds {
    /// Max Kolmogorov-Smirnov distance of the standardized samples.
    pub max_ks: f64,
    /// Max |sample mean|.
    pub max_abs_mean: f64,
    /// Standardized level whose upper-tail frequency is tested; must be one
    /// of the report's tabulated levels (-2, -1, 0, 1, 2).
    pub tail_level: f64,
    /// Allowed |empirical tail - normal tail|.
    pub tail_tolerance: f64,
}

impl Default for CltThresholds {
    fn default() -> Self {
        CltThresholds {
            max_ks: 0.08,
            max_abs_mean: 0.15,
            tail_level: 1.0,
            tail_tolerance: 0.05,
        }
    }
}

fn default_agreement_rel_tol() -> f64 {
    1e-6
}

/// Parameters for the moments command. X and sigma0 come from the schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    /// Integration window [T, 2T].
    pub t: f64,
    /// Compute every (k, l) with k <= k_max and l <= l_max.
    pub k_max: u32,
    pub l_max: u32,
    /// When set, also integrate numerically with at least this many points
    /// and require method agreement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<u64>,
    /// Relative tolerance for expansion-vs-quadrature agreement.
    #[serde(default = "default_agreement_rel_tol")]
    pub agreement_rel_tol: f64,
    /// When set, require |value| / prediction inside this band on k = l.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_band: Option<(f64, f64)>,
    /// When set, require |value|/T <= factor * S^((k+l)/2) for k != l.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiagonal_factor: Option<f64>,
}

fn default_window_factor() -> f64 {
    5.0
}

fn default_window_slack() -> f64 {
    0.05
}

/// Optional window-integral check run by the consistency command:
/// lhs = int_{t-1}^{t+1} |log|L(sigma+iy)| - log|L(1/2+iy)|| dy must stay
/// below factor * rhs + slack with rhs = (sigma - 1/2) log t.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCheckConfig {
    pub sigma: f64,
    pub t: f64,
    #[serde(default = "default_window_factor")]
    pub factor: f64,
    #[serde(default = "default_window_slack")]
    pub slack: f64,
}

/// The full run configuration. Each command reads the blocks it needs and
/// validates them up front, reporting every violated field at once.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Form id for single-form commands (clt, consistency, moments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    /// Form ids for the independence command (at least two, distinct).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forms: Option<Vec<String>>,
    /// Sampling plan for clt/independence/consistency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplePlan>,
    /// Schedule overrides; merged with (and overridden by) --override flags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleOverrides>,
    /// Numerical evaluation settings; defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalConfig>,
    /// Mollifier-chain thresholds for the consistency command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency_thresholds: Option<Thresholds>,
    /// Covariance thresholds for the independence command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_thresholds: Option<StatsThresholds>,
    /// Distribution-shape thresholds for the clt command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt_thresholds: Option<CltThresholds>,
    /// Moments command block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsConfig>,
    /// Optional window-integral check for the consistency command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowCheckConfig>,
    /// Explicit coefficient-table length; sized from the evaluation range
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_limit: Option<u64>,
    /// Coefficient cache directory; SELBERG_LAB_CACHE or the local default
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

/// Parses --override KEY=VALUE pairs into schedule overrides.
pub fn parse_override_flags(pairs: &[String]) -> Result<ScheduleOverrides, Vec<String>> {
    let mut ov = ScheduleOverrides::default();
    let mut errors = Vec::new();
    for pair in pairs {
        let Some((key, value)) = pair.split_once('=') else {
            errors.push(format!("override `{pair}`: expected KEY=VALUE"));
            continue;
        };
        let parsed: f64 = match value.parse() {
            Ok(v) => v,
            Err(_) => {
                errors.push(format!("override `{pair}`: `{value}` is not a number"));
                continue;
            }
        };
        match key {
            "w" | "W" => ov.w = Some(parsed),
            "x" | "X" => ov.x = Some(parsed),
            "y" | "Y" => ov.y = Some(parsed),
            "sigma0" => ov.sigma0 = Some(parsed),
            "k1" | "K1" => ov.k1 = Some(parsed),
            "k2" | "K2" => ov.k2 = Some(parsed),
            other => errors.push(format!(
                "override `{pair}`: unknown key `{other}` (expected w, x, y, sigma0, k1, k2)"
            )),
        }
    }
    if errors.is_empty() {
        Ok(ov)
    } else {
        Err(errors)
    }
}

/// Field-wise merge: flag values win over config-file values.
pub fn merge_overrides(
    base: Option<ScheduleOverrides>,
    flags: ScheduleOverrides,
) -> ScheduleOverrides {
    let base = base.unwrap_or_default();
    ScheduleOverrides {
        w: flags.w.or(base.w),
        x: flags.x.or(base.x),
        y: flags.y.or(base.y),
        sigma0: flags.sigma0.or(base.sigma0),
        k1: flags.k1.or(base.k1),
        k2: flags.k2.or(base.k2),
    }
}
