//! Monte Carlo experiments over t in [T, 2T]: empirical distributions of
//! log|L(f, sigma + it)| and the auxiliary prime series, comparison against
//! Gaussian predictions, and cross-form covariance.
//!
//! Every experiment is a pure function of (plan, schedule, config, tables):
//! sampling uses a counter-based generator keyed by (seed, index), and
//! parallel evaluation merges in index order, so reports are bit-identical
//! across runs and worker counts.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dirpoly::{
    diagonal_prime_sum, joint_diagonal_prime_sum, mollifier, p_series, MollifierVariant,
    PSeriesVariant, ParameterSchedule,
};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::lfunc::{afe_eval, floored_log_abs, log_abs_l, EvalConfig};
use crate::rng::CounterRng;

/// How t-values are drawn from [T, 2T].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    UniformRandom,
    Equispaced,
}

/// A sampling request: where, how many, how, and at which abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub t: f64,
    pub count: u64,
    pub seed: u64,
    pub mode: SampleMode,
    /// Evaluation abscissa sigma for L-based statistics.
    pub sigma: f64,
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.count < 2 {
            bad.push(format!("count = {} must be at least 2", self.count));
        }
        if !(self.t >= 100.0) {
            bad.push(format!("T = {} must be at least 100", self.t));
        }
        if !(0.5..=1.0).contains(&self.sigma) {
            bad.push(format!("sigma = {} must lie in [1/2, 1]", self.sigma));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

/// t-values for a plan. Uniform draws are keyed (seed, index) so any
/// subset can be regenerated independently of evaluation order; equispaced
/// uses t_i = T(1 + i/count).
pub fn draw_samples(plan: &SamplePlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let rng = CounterRng::new(plan.seed);
    Ok((0..plan.count)
        .map(|i| match plan.mode {
            SampleMode::UniformRandom => rng.uniform_in(i, plan.t, 2.0 * plan.t),
            SampleMode::Equispaced => plan.t * (1.0 + i as f64 / plan.count as f64),
        })
        .collect())
}

/// Which scalar is recorded at each sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    /// log|L(f, sigma + it)| via the approximate functional equation.
    LogAbsL,
    /// Re P0(sigma + it): primes-only series.
    ReP0,
    /// Re P(sigma + it): prime powers included.
    RePFull,
    /// log|L * M| (mollified value).
    LogLm,
}

/// Evaluated samples, aligned with their t-values; `excluded` lists indices
/// whose evaluation was floored or otherwise flagged, with reasons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSeries {
    pub plan: SamplePlan,
    pub t_values: Vec<f64>,
    pub values: Vec<f64>,
    pub excluded: Vec<(usize, String)>,
}

fn with_sample_context(e: Error, index: usize, t: f64) -> Error {
    let ctx = format!("sample {index} (t = {t:.6})");
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
        Error::Precision(m) => Error::Precision(format!("{ctx}: {m}")),
        Error::ResourceLimit(m) => Error::ResourceLimit(format!("{ctx}: {m}")),
        Error::InfeasibleSchedule(m) => Error::InfeasibleSchedule(format!("{ctx}: {m}")),
        other => other,
    }
}

/// Evaluates `statistic` at every t in the plan. Near-zero-flagged values
/// are kept (at the floor) and recorded in `excluded`; any hard evaluation
/// failure aborts the run naming the failing index.
pub fn sample_statistic(
    form: &Form,
    plan: &SamplePlan,
    statistic: Statistic,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
) -> Result<SampleSeries> {
    let t_values = draw_samples(plan)?;
    let evaluated: Vec<(f64, Option<String>)> = t_values
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            evaluate_statistic(form, statistic, plan.sigma, t, sched, cfg)
                .map_err(|e| with_sample_context(e, i, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(evaluated.len());
    let mut excluded = Vec::new();
    for (i, (v, reason)) in evaluated.into_iter().enumerate() {
        values.push(v);
        if let Some(r) = reason {
            excluded.push((i, r));
        }
    }
    Ok(SampleSeries {
        plan: *plan,
        t_values,
        values,
        excluded,
    })
}

fn evaluate_statistic(
    form: &Form,
    statistic: Statistic,
    sigma: f64,
    t: f64,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
) -> Result<(f64, Option<String>)> {
    match statistic {
        Statistic::LogAbsL => {
            let (v, floored) = log_abs_l(form, sigma, t, cfg)?;
            Ok((v, floored.then(|| "log|L| floored near a zero".to_string())))
        }
        Statistic::ReP0 => {
            let s = Complex64::new(sigma, t);
            Ok((
                p_series(form, s, sched, PSeriesVariant::PrimesOnly)?.value.re,
                None,
            ))
        }
        Statistic::RePFull => {
            let s = Complex64::new(sigma, t);
            Ok((p_series(form, s, sched, PSeriesVariant::Full)?.value.re, None))
        }
        Statistic::LogLm => {
            let s = Complex64::new(sigma, t);
            let l = afe_eval(form, s, cfg)?.l;
            let m = mollifier(form, s, sched, MollifierVariant::M)?.value;
            let (v, floored) = floored_log_abs((l * m).norm());
            Ok((v, floored.then(|| "log|LM| floored near a zero".to_string())))
        }
    }
}

/// Upper-tail probability of the standard normal at v.
pub fn normal_upper_tail(v: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(v)
}

/// Distribution summary of a sample series against a Gaussian model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub sample_count: u64,
    pub excluded_count: u64,
    pub mean: f64,
    pub variance: f64,
    /// Standardized central moments of orders 3, 4, 5, 6.
    pub standardized_moments: [f64; 4],
    /// Sup distance between the standardized empirical CDF and N(0,1).
    pub ks_statistic: f64,
    /// (V, empirical fraction of standardized samples >= V) for V in -2..=2.
    pub tail_frequencies: Vec<(f64, f64)>,
    /// Finite-size diagonal prediction (primary comparison scale).
    pub predicted_variance: f64,
    /// Asymptotic prediction for display; NaN when not applicable.
    pub asymptotic_variance: f64,
    pub exceptional_fraction: f64,
}

/// Summarizes the non-excluded values of a series. Standardization uses the
/// sample mean and standard deviation so the KS statistic measures shape
/// only; a constant series reports ks = 0.5 by convention (the empirical
/// CDF is a step at zero against Phi).
pub fn empirical_report(series: &SampleSeries, predicted_variance: f64) -> Result<EmpiricalReport> {
    let excluded: std::collections::HashSet<usize> =
        series.excluded.iter().map(|(i, _)| *i).collect();
    let included: Vec<f64> = series
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, v)| *v)
        .collect();
    if included.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 usable samples, have {}",
            included.len()
        )));
    }
    let n = included.len() as f64;
    let mean = included.iter().sum::<f64>() / n;
    let variance = included.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = variance.sqrt();

    let mut standardized: Vec<f64> = if sd > 0.0 {
        included.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; included.len()]
    };
    standardized.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut moments = [0.0f64; 4];
    for z in &standardized {
        let mut p = z * z * z;
        for m in moments.iter_mut() {
            *m += p;
            p *= z;
        }
    }
    for m in moments.iter_mut() {
        *m /= n;
    }

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let ks = if sd > 0.0 {
        let mut d: f64 = 0.0;
        for (i, z) in standardized.iter().enumerate() {
            let cdf = normal.cdf(*z);
            d = d.max((cdf - i as f64 / n).abs());
            d = d.max(((i + 1) as f64 / n - cdf).abs());
        }
        d
    } else {
        0.5
    };

    let tail_frequencies = (-2..=2)
        .map(|v| {
            let v = v as f64;
            let frac = standardized.iter().filter(|z| **z >= v).count() as f64 / n;
            (v, frac)
        })
        .collect();

    Ok(EmpiricalReport {
        sample_count: series.values.len() as u64,
        excluded_count: excluded.len() as u64,
        mean,
        variance,
        standardized_moments: moments,
        ks_statistic: ks,
        tail_frequencies,
        predicted_variance,
        asymptotic_variance: f64::NAN,
        exceptional_fraction: excluded.len() as f64 / series.values.len() as f64,
    })
}

/// Samples log|L(f, sigma + it)| and reports against the finite-size
/// variance S/2 (primary) and the asymptotic (1/2) loglog T (display).
/// Returns the raw series too, so callers can persist the samples.
pub fn clt_experiment(
    form: &Form,
    plan: &SamplePlan,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
) -> Result<(EmpiricalReport, SampleSeries)> {
    let series = sample_statistic(form, plan, Statistic::LogAbsL, sched, cfg)?;
    let s = diagonal_prime_sum(form, sched.x, plan.sigma)?;
    let mut report = empirical_report(&series, s / 2.0)?;
    report.asymptotic_variance = 0.5 * plan.t.ln().ln();
    Ok((report, series))
}

/// Thresholds for the covariance verdicts; 0.15 is about five standard
/// errors of a true-zero correlation at 1000 samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatsThresholds {
    pub max_off_diagonal_correlation: f64,
    pub variance_additivity_factor: f64,
}

impl Default for StatsThresholds {
    fn default() -> Self {
        StatsThresholds {
            max_off_diagonal_correlation: 0.15,
            variance_additivity_factor: 0.3,
        }
    }
}

/// Covariance structure of log|L| vectors sampled at shared t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub forms: Vec<String>,
    pub sample_count: u64,
    pub excluded_count: u64,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    /// Asymptotic per-form variance (1/2) loglog T.
    pub predicted_variance: f64,
    pub max_off_diagonal_correlation: f64,
    /// max over pairs of |Var(Xi+Xj) - Var Xi - Var Xj| / (Var Xi + Var Xj).
    pub max_variance_additivity_ratio: f64,
    pub verdict: bool,
}

/// Samples all forms at the same t-values and reports the covariance and
/// correlation matrices, plus the per-form series for persistence.
/// Verdict: every off-diagonal correlation within threshold and pairwise
/// variance additivity within its factor.
pub fn joint_experiment(
    forms: &[&Form],
    plan: &SamplePlan,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
    thresholds: &StatsThresholds,
) -> Result<(CovarianceReport, Vec<SampleSeries>)> {
    joint_experiment_impl(forms, plan, sched, cfg, thresholds, true)
}

fn forms_indistinguishable(a: &Form, b: &Form) -> bool {
    let sieve = match crate::arith::sieve_primes(600) {
        Ok(s) => s,
        Err(_) => return false,
    };
    // The first 100 primes end at 541; compare only what both tables cover.
    sieve
        .primes()
        .iter()
        .take(100)
        .filter(|&&p| p <= a.table.limit && p <= b.table.limit)
        .all(|&p| a.table.value(p) == b.table.value(p))
}

fn joint_experiment_impl(
    forms: &[&Form],
    plan: &SamplePlan,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
    thresholds: &StatsThresholds,
    enforce_distinct: bool,
) -> Result<(CovarianceReport, Vec<SampleSeries>)> {
    if forms.len() < 2 {
        return Err(Error::InvalidArgument(
            "joint experiment needs at least two forms".to_string(),
        ));
    }
    if enforce_distinct {
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                if forms_indistinguishable(forms[i], forms[j]) {
                    return Err(Error::InvalidArgument(format!(
                        "forms {} and {} agree on the first 100 prime coefficients; \
                         joint sampling needs distinct forms",
                        forms[i].descriptor.id, forms[j].descriptor.id
                    )));
                }
            }
        }
    }
    let mut series = Vec::with_capacity(forms.len());
    for form in forms {
        series.push(sample_statistic(form, plan, Statistic::LogAbsL, sched, cfg)?);
    }
    let mut excluded = std::collections::HashSet::new();
    for s in &series {
        excluded.extend(s.excluded.iter().map(|(i, _)| *i));
    }
    let kept: Vec<usize> = (0..plan.count as usize)
        .filter(|i| !excluded.contains(i))
        .collect();
    if kept.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 usable shared samples, have {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let m = forms.len();
    let means: Vec<f64> = series
        .iter()
        .map(|s| kept.iter().map(|&i| s.values[i]).sum::<f64>() / n)
        .collect();
    let mut covariance = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let c = kept
                .iter()
                .map(|&i| (series[a].values[i] - means[a]) * (series[b].values[i] - means[b]))
                .sum::<f64>()
                / n;
            covariance[a][b] = c;
            covariance[b][a] = c;
        }
    }
    let mut correlation = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let denom = (covariance[a][a] * covariance[b][b]).sqrt();
            correlation[a][b] = if denom > 0.0 {
                covariance[a][b] / denom
            } else if a == b {
                1.0
            } else {
                0.0
            };
        }
    }
    let mut max_corr = 0.0f64;
    let mut max_ratio = 0.0f64;
    for a in 0..m {
        for b in a + 1..m {
            max_corr = max_corr.max(correlation[a][b].abs());
            let var_sum = covariance[a][a] + covariance[b][b];
            if var_sum > 0.0 {
                // Var(X+Y) - VarX - VarY = 2 Cov(X,Y).
                max_ratio = max_ratio.max((2.0 * covariance[a][b]).abs() / var_sum);
            }
        }
    }
    let verdict = max_corr <= thresholds.max_off_diagonal_correlation
        && max_ratio <= thresholds.variance_additivity_factor;
    let report = CovarianceReport {
        forms: forms.iter().map(|f| f.descriptor.id.clone()).collect(),
        sample_count: plan.count,
        excluded_count: excluded.len() as u64,
        covariance,
        correlation,
        predicted_variance: 0.5 * plan.t.ln().ln(),
        max_off_diagonal_correlation: max_corr,
        max_variance_additivity_ratio: max_ratio,
        verdict,
    };
    Ok((report, series))
}

/// Samples a1 log|L1| + a2 log|L2| at shared t. The primary variance
/// prediction is the joint diagonal sum with psi = a1 lambda1 + a2 lambda2;
/// the asymptotic display is (a1^2 + a2^2)/2 loglog T.
pub fn linear_combination_experiment(
    form1: &Form,
    form2: &Form,
    a1: f64,
    a2: f64,
    plan: &SamplePlan,
    sched: &ParameterSchedule,
    cfg: &EvalConfig,
) -> Result<EmpiricalReport> {
    if a1 == 0.0 && a2 == 0.0 {
        return Err(Error::InvalidArgument(
            "linear combination needs (a1, a2) != (0, 0)".to_string(),
        ));
    }
    let s1 = sample_statistic(form1, plan, Statistic::LogAbsL, sched, cfg)?;
    let s2 = sample_statistic(form2, plan, Statistic::LogAbsL, sched, cfg)?;
    let mut values = Vec::with_capacity(s1.values.len());
    for i in 0..s1.values.len() {
        values.push(a1 * s1.values[i] + a2 * s2.values[i]);
    }
    let mut excluded = s1.excluded.clone();
    let seen: std::collections::HashSet<usize> = excluded.iter().map(|(i, _)| *i).collect();
    for (i, r) in &s2.excluded {
        if !seen.contains(i) {
            excluded.push((*i, r.clone()));
        }
    }
    excluded.sort_by_key(|(i, _)| *i);
    let series = SampleSeries {
        plan: *plan,
        t_values: s1.t_values,
        values,
        excluded,
    };
    let joint = joint_diagonal_prime_sum(form1, form2, a1, a2, sched.x, plan.sigma)?;
    let mut report = empirical_report(&series, joint / 2.0)?;
    report.asymptotic_variance = (a1 * a1 + a2 * a2) / 2.0 * plan.t.ln().ln();
    Ok(report)
}
