//! The six driver commands. Each config-driven command validates its inputs
//! up front (reporting every violated field), runs the corresponding library
//! operation, writes a JSON report plus a CSV of raw samples, and returns
//! whether every verdict passed.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use selberg_lab::cache::{cache_path, default_cache_dir, load_or_generate, read_entry, write_entry};
use selberg_lab::dirpoly::{schedule, ScheduleOverrides};
use selberg_lab::forms::{builtin_descriptor, builtin_table, Form, BUILTIN_FORM_IDS};
use selberg_lab::lfunc::{
    afe_eval, afe_required_length, dirichlet_eval, floored_log_abs, functional_equation_residual,
    EvalConfig,
};
use selberg_lab::moments::{
    bruteforce_mixed_moment, log_window_integral_check, mollified_l_mean_square,
    mollifier_consistency, mollifier_exp_residual_stats, quadrature_mixed_moment,
    ConsistencyReport, MomentResult, Thresholds,
};
use selberg_lab::stats::{
    clt_experiment, joint_experiment, normal_upper_tail, CovarianceReport, EmpiricalReport,
    SamplePlan, SampleSeries,
};
use selberg_lab::{Error, Result};

use crate::config::{CltThresholds, RunConfig, WindowCheckConfig};
use crate::report::{write_report, write_samples, Envelope, SampleRow, VERSION};
use crate::CliError;

fn known_form(id: &str) -> bool {
    BUILTIN_FORM_IDS.contains(&id)
}

fn cache_dir(config: &RunConfig) -> PathBuf {
    config.cache_dir.clone().unwrap_or_else(default_cache_dir)
}

/// Loads a built-in form through the cache, sized for AFE evaluation over
/// the whole sample range plus coverage of the schedule's X.
fn load_form_for_range(
    config: &RunConfig,
    id: &str,
    sigma: f64,
    t_max: f64,
    x: f64,
    cfg: &EvalConfig,
) -> Result<Form> {
    let limit = match config.table_limit {
        Some(n) => n,
        None => {
            let descriptor = builtin_descriptor(id)?;
            let needed = afe_required_length(&descriptor, Complex64::new(sigma, t_max), cfg)?;
            needed.max(x.floor() as u64).max(100)
        }
    };
    let (form, _) = load_or_generate(&cache_dir(config), id, limit)?;
    Ok(form)
}

fn push_plan_violations(plan: Option<&SamplePlan>, violations: &mut Vec<String>) {
    match plan {
        None => violations.push("plan: block is required for this command".to_string()),
        Some(p) => {
            if let Err(Error::InvalidArgument(msg)) = p.validate() {
                for part in msg.split("; ") {
                    violations.push(format!("plan: {part}"));
                }
            }
        }
    }
}

fn config_error(violations: Vec<String>) -> CliError {
    CliError::Config(violations)
}

// ---------------------------------------------------------------------------
// coeffs

pub fn cmd_coeffs(
    form_id: &str,
    limit: u64,
    out_path: Option<PathBuf>,
) -> std::result::Result<bool, CliError> {
    if !known_form(form_id) {
        return Err(config_error(vec![format!(
            "form: `{form_id}` is not a built-in form (expected one of {})",
            BUILTIN_FORM_IDS.join(", ")
        )]));
    }
    let path = out_path.unwrap_or_else(|| cache_path(&default_cache_dir(), form_id, limit));
    if path.exists() {
        let entry = read_entry(&path)?;
        if entry.form_id != form_id || entry.limit != limit {
            return Err(CliError::Core(Error::CacheFormat(format!(
                "cache file `{}` declares ({}, {}) but ({form_id}, {limit}) was requested",
                path.display(),
                entry.form_id,
                entry.limit,
            ))));
        }
        println!("cache hit, verified: {}", path.display());
        return Ok(true);
    }
    let table = builtin_table(form_id, limit)?;
    write_entry(&path, &table)?;
    println!(
        "wrote {limit} coefficients for {form_id} to {}",
        path.display()
    );
    Ok(true)
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Serialize)]
struct EvalOutput {
    version: &'static str,
    command: &'static str,
    form: String,
    sigma: f64,
    t: f64,
    l_re: f64,
    l_im: f64,
    log_abs_l: f64,
    /// Completed-function value exp(log G) * L.
    lambda_re: f64,
    lambda_im: f64,
    /// Relative residual of the functional equation at s.
    fe_residual: f64,
    /// Relative difference against a plain Dirichlet-series evaluation,
    /// meaningful in the region of absolute convergence.
    dirichlet_residual: f64,
}

pub fn cmd_eval(form_id: &str, sigma: f64, t: f64) -> std::result::Result<bool, CliError> {
    if !known_form(form_id) {
        return Err(config_error(vec![format!(
            "form: `{form_id}` is not a built-in form (expected one of {})",
            BUILTIN_FORM_IDS.join(", ")
        )]));
    }
    let cfg = EvalConfig::default();
    let descriptor = builtin_descriptor(form_id)?;
    let s = Complex64::new(sigma, t);
    let needed = afe_required_length(&descriptor, s, &cfg)?;
    let (form, _) = load_or_generate(&default_cache_dir(), form_id, needed.max(1000))?;

    let value = afe_eval(&form, s, &cfg)?;
    let fe_residual = functional_equation_residual(&form, s, &cfg)?;
    let dirichlet = dirichlet_eval(&form, s, form.table.limit)?;
    let dirichlet_residual = if dirichlet.norm() > 0.0 {
        (value.l - dirichlet).norm() / dirichlet.norm()
    } else {
        f64::NAN
    };
    let out = EvalOutput {
        version: VERSION,
        command: "eval",
        form: form_id.to_string(),
        sigma,
        t,
        l_re: value.l.re,
        l_im: value.l.im,
        log_abs_l: floored_log_abs(value.l.norm()).0,
        lambda_re: value.lambda.re,
        lambda_im: value.lambda.im,
        fe_residual,
        dirichlet_residual,
    };
    let json = serde_json::to_string_pretty(&out)
        .map_err(|e| Error::InvalidArgument(format!("output serialization failed: {e}")))?;
    println!("{json}");
    Ok(true)
}

// ---------------------------------------------------------------------------
// moments

#[derive(Debug, Serialize)]
struct MomentRow {
    k: u32,
    l: u32,
    analytic: MomentResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<MomentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagonal_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offdiagonal_scaled: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MomentsReport {
    form: String,
    diagonal_prime_sum: f64,
    rows: Vec<MomentRow>,
}

pub fn cmd_moments(
    config: &RunConfig,
    flag_overrides: ScheduleOverrides,
    out_dir: &Path,
) -> std::result::Result<bool, CliError> {
    let mut violations = Vec::new();
    let form_id = match &config.form {
        Some(id) if known_form(id) => id.clone(),
        Some(id) => {
            violations.push(format!("form: `{id}` is not a built-in form"));
            String::new()
        }
        None => {
            violations.push("form: field is required for moments".to_string());
            String::new()
        }
    };
    let Some(mc) = config.moments.clone() else {
        violations.push("moments: block is required for this command".to_string());
        return Err(config_error(violations));
    };
    if !(mc.t >= 100.0) {
        violations.push(format!("moments.t: T = {} must be at least 100", mc.t));
    }
    if mc.k_max > 4 || mc.l_max > 4 {
        violations.push(format!(
            "moments.k_max/l_max: ({}, {}) exceed the expansion cap of 4",
            mc.k_max, mc.l_max
        ));
    }
    if let Some(points) = mc.points {
        if points < 1000 {
            violations.push(format!(
                "moments.points: {points} must be at least 1000"
            ));
        }
    }
    if !violations.is_empty() {
        return Err(config_error(violations));
    }

    let merged = crate::config::merge_overrides(config.schedule, flag_overrides);
    let sched = schedule(mc.t, Some(merged).filter(|o| !o.is_empty()))?;
    let limit = config.table_limit.unwrap_or((sched.x.floor() as u64).max(100));
    let (form, _) = load_or_generate(&cache_dir(config), &form_id, limit)?;
    let s_diag =
        selberg_lab::dirpoly::diagonal_prime_sum(&form, sched.x, sched.sigma0)?;

    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut csv = Vec::new();
    for k in 0..=mc.k_max {
        for l in 0..=mc.l_max {
            let analytic = bruteforce_mixed_moment(&form, k, l, mc.t, sched.x, sched.sigma0)?;
            csv.push((mc.t, analytic.value.norm(), false));
            let mut row = MomentRow {
                k,
                l,
                analytic,
                quadrature: None,
                agreement_rel_error: None,
                diagonal_ratio: None,
                offdiagonal_scaled: None,
            };
            if let Some(points) = mc.points {
                let quad = quadrature_mixed_moment(&form, k, l, mc.t, sched.x, sched.sigma0, points)?;
                csv.push((mc.t, quad.value.norm(), false));
                let denom = analytic.value.norm().max(f64::MIN_POSITIVE);
                let rel = (analytic.value - quad.value).norm() / denom;
                verdicts.push((
                    format!("agreement_{k}_{l}"),
                    rel <= mc.agreement_rel_tol,
                ));
                row.quadrature = Some(quad);
                row.agreement_rel_error = Some(rel);
            }
            if k == l && k > 0 {
                let ratio = row.analytic.value.norm() / row.analytic.prediction.norm();
                row.diagonal_ratio = Some(ratio);
                if let Some((lo, hi)) = mc.diagonal_band {
                    verdicts.push((format!("diagonal_band_{k}_{l}"), (lo..=hi).contains(&ratio)));
                }
            }
            if k != l {
                let scale = s_diag.powf((k + l) as f64 / 2.0);
                let scaled = row.analytic.value.norm() / mc.t / scale.max(f64::MIN_POSITIVE);
                row.offdiagonal_scaled = Some(scaled);
                if let Some(factor) = mc.offdiagonal_factor {
                    verdicts.push((format!("offdiagonal_{k}_{l}"), scaled <= factor));
                }
            }
            rows.push(row);
        }
    }
    let pass = verdicts.iter().all(|(_, ok)| *ok);
    let report = MomentsReport {
        form: form_id,
        diagonal_prime_sum: s_diag,
        rows,
    };
    let envelope = Envelope {
        version: VERSION,
        command: "moments",
        seed: None,
        config,
        schedule: Some(&sched),
        verdicts,
        pass,
        report,
    };
    write_report(out_dir, &envelope)?;
    write_samples(out_dir, "moments", &csv)?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// clt

fn series_rows(series: &SampleSeries) -> Vec<SampleRow> {
    let excluded: std::collections::HashSet<usize> =
        series.excluded.iter().map(|(i, _)| *i).collect();
    series
        .t_values
        .iter()
        .zip(&series.values)
        .enumerate()
        .map(|(i, (&t, &v))| (t, v, excluded.contains(&i)))
        .collect()
}

#[derive(Debug, Serialize)]
struct CltReport {
    form: String,
    thresholds: CltThresholds,
    normal_tail_at_level: f64,
    empirical: EmpiricalReport,
}

pub fn cmd_clt(
    config: &RunConfig,
    flag_overrides: ScheduleOverrides,
    seed_flag: Option<u64>,
    out_dir: &Path,
) -> std::result::Result<bool, CliError> {
    let mut violations = Vec::new();
    let form_id = match &config.form {
        Some(id) if known_form(id) => id.clone(),
        Some(id) => {
            violations.push(format!("form: `{id}` is not a built-in form"));
            String::new()
        }
        None => {
            violations.push("form: field is required for clt".to_string());
            String::new()
        }
    };
    push_plan_violations(config.plan.as_ref(), &mut violations);
    let thresholds = config.clt_thresholds.unwrap_or_default();
    if ![-2.0, -1.0, 0.0, 1.0, 2.0].contains(&thresholds.tail_level) {
        violations.push(format!(
            "clt_thresholds.tail_level: {} is not a tabulated level (-2, -1, 0, 1, 2)",
            thresholds.tail_level
        ));
    }
    if !violations.is_empty() {
        return Err(config_error(violations));
    }

    let mut plan = config.plan.expect("validated above");
    if let Some(seed) = seed_flag {
        plan.seed = seed;
    }
    let merged = crate::config::merge_overrides(config.schedule, flag_overrides);
    let sched = schedule(plan.t, Some(merged).filter(|o| !o.is_empty()))?;
    let cfg = config.eval.clone().unwrap_or_default();
    let form = load_form_for_range(config, &form_id, plan.sigma, 2.0 * plan.t, sched.x, &cfg)?;

    let (empirical, series) = clt_experiment(&form, &plan, &sched, &cfg)?;
    let tail_target = normal_upper_tail(thresholds.tail_level);
    let tail_empirical = empirical
        .tail_frequencies
        .iter()
        .find(|(v, _)| *v == thresholds.tail_level)
        .map(|(_, f)| *f)
        .unwrap_or(f64::NAN);
    let verdicts = vec![
        (
            "ks".to_string(),
            empirical.ks_statistic <= thresholds.max_ks,
        ),
        (
            "mean".to_string(),
            empirical.mean.abs() <= thresholds.max_abs_mean,
        ),
        (
            "tail".to_string(),
            (tail_empirical - tail_target).abs() <= thresholds.tail_tolerance,
        ),
    ];
    let pass = verdicts.iter().all(|(_, ok)| *ok);
    let rows = series_rows(&series);
    let report = CltReport {
        form: form_id,
        thresholds,
        normal_tail_at_level: tail_target,
        empirical,
    };
    let envelope = Envelope {
        version: VERSION,
        command: "clt",
        seed: Some(plan.seed),
        config,
        schedule: Some(&sched),
        verdicts,
        pass,
        report,
    };
    write_report(out_dir, &envelope)?;
    write_samples(out_dir, "clt", &rows)?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// independence

#[derive(Debug, Serialize)]
struct IndependenceReport {
    forms: Vec<String>,
    covariance: CovarianceReport,
}

pub fn cmd_independence(
    config: &RunConfig,
    flag_overrides: ScheduleOverrides,
    seed_flag: Option<u64>,
    out_dir: &Path,
) -> std::result::Result<bool, CliError> {
    let mut violations = Vec::new();
    let ids = config.forms.clone().unwrap_or_default();
    if ids.len() < 2 {
        violations.push(format!(
            "forms: independence needs at least two form ids, got {}",
            ids.len()
        ));
    }
    for id in &ids {
        if !known_form(id) {
            violations.push(format!("forms: `{id}` is not a built-in form"));
        }
    }
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != ids.len() {
        violations.push("forms: ids must be distinct".to_string());
    }
    push_plan_violations(config.plan.as_ref(), &mut violations);
    if !violations.is_empty() {
        return Err(config_error(violations));
    }

    let mut plan = config.plan.expect("validated above");
    if let Some(seed) = seed_flag {
        plan.seed = seed;
    }
    let merged = crate::config::merge_overrides(config.schedule, flag_overrides);
    let sched = schedule(plan.t, Some(merged).filter(|o| !o.is_empty()))?;
    let cfg = config.eval.clone().unwrap_or_default();
    let thresholds = config.stats_thresholds.unwrap_or_default();

    let mut forms = Vec::new();
    for id in &ids {
        forms.push(load_form_for_range(
            config,
            id,
            plan.sigma,
            2.0 * plan.t,
            sched.x,
            &cfg,
        )?);
    }
    let refs: Vec<&Form> = forms.iter().collect();
    let (covariance, series) = joint_experiment(&refs, &plan, &sched, &cfg, &thresholds)?;

    // Raw samples: the per-form series concatenated in listed order.
    let mut rows = Vec::new();
    for s in &series {
        rows.extend(series_rows(s));
    }
    let verdicts = vec![
        (
            "off_diagonal_correlation".to_string(),
            covariance.max_off_diagonal_correlation <= thresholds.max_off_diagonal_correlation,
        ),
        (
            "variance_additivity".to_string(),
            covariance.max_variance_additivity_ratio <= thresholds.variance_additivity_factor,
        ),
    ];
    let pass = covariance.verdict;
    let report = IndependenceReport {
        forms: ids,
        covariance,
    };
    let envelope = Envelope {
        version: VERSION,
        command: "independence",
        seed: Some(plan.seed),
        config,
        schedule: Some(&sched),
        verdicts,
        pass,
        report,
    };
    write_report(out_dir, &envelope)?;
    write_samples(out_dir, "independence", &rows)?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// consistency

#[derive(Debug, Serialize)]
struct WindowResult {
    config: WindowCheckConfig,
    lhs: f64,
    rhs: f64,
}

#[derive(Debug, Serialize)]
struct ConsistencyFullReport {
    form: String,
    thresholds: Thresholds,
    exp_residual: ConsistencyReport,
    factor_consistency: ConsistencyReport,
    mollified_mean_square: ConsistencyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<WindowResult>,
}

pub fn cmd_consistency(
    config: &RunConfig,
    flag_overrides: ScheduleOverrides,
    seed_flag: Option<u64>,
    out_dir: &Path,
) -> std::result::Result<bool, CliError> {
    let mut violations = Vec::new();
    let form_id = match &config.form {
        Some(id) if known_form(id) => id.clone(),
        Some(id) => {
            violations.push(format!("form: `{id}` is not a built-in form"));
            String::new()
        }
        None => {
            violations.push("form: field is required for consistency".to_string());
            String::new()
        }
    };
    push_plan_violations(config.plan.as_ref(), &mut violations);
    if let Some(w) = &config.window {
        if !(w.t >= 100.0) {
            violations.push(format!("window.t: {} must be at least 100", w.t));
        }
        if !(w.sigma >= 0.5) {
            violations.push(format!("window.sigma: {} must be at least 1/2", w.sigma));
        }
    }
    if !violations.is_empty() {
        return Err(config_error(violations));
    }

    let mut plan = config.plan.expect("validated above");
    if let Some(seed) = seed_flag {
        plan.seed = seed;
    }
    let merged = crate::config::merge_overrides(config.schedule, flag_overrides);
    let sched = schedule(plan.t, Some(merged).filter(|o| !o.is_empty()))?;
    let cfg = config.eval.clone().unwrap_or_default();
    let thresholds = config.consistency_thresholds.unwrap_or_default();
    // The mollified mean square evaluates L at sigma0, not plan.sigma.
    let form = load_form_for_range(config, &form_id, sched.sigma0, 2.0 * plan.t, sched.x, &cfg)?;

    let exp_residual = mollifier_exp_residual_stats(&form, &sched, &plan, &thresholds)?;
    let factor_consistency = mollifier_consistency(&form, &sched, &plan, &thresholds)?;
    let mollified = mollified_l_mean_square(&form, &sched, &plan, &cfg, &thresholds)?;

    let mut verdicts = vec![
        ("exp_residual".to_string(), exp_residual.verdict),
        ("factor_consistency".to_string(), factor_consistency.verdict),
        ("mollified_mean_square".to_string(), mollified.verdict),
    ];
    let window = match &config.window {
        Some(w) => {
            let (lhs, rhs) = log_window_integral_check(&form, w.sigma, w.t, &cfg)?;
            verdicts.push(("window".to_string(), lhs <= w.factor * rhs + w.slack));
            Some(WindowResult {
                config: *w,
                lhs,
                rhs,
            })
        }
        None => None,
    };
    let pass = verdicts.iter().all(|(_, ok)| *ok);

    let mut rows: Vec<SampleRow> = Vec::new();
    rows.extend(exp_residual.samples.iter().copied());
    rows.extend(factor_consistency.samples.iter().copied());
    rows.extend(mollified.samples.iter().copied());

    let report = ConsistencyFullReport {
        form: form_id,
        thresholds,
        exp_residual,
        factor_consistency,
        mollified_mean_square: mollified,
        window,
    };
    let envelope = Envelope {
        version: VERSION,
        command: "consistency",
        seed: Some(plan.seed),
        config,
        schedule: Some(&sched),
        verdicts,
        pass,
        report,
    };
    write_report(out_dir, &envelope)?;
    write_samples(out_dir, "consistency", &rows)?;
    Ok(pass)
}
