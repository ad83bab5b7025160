//! Mixed moments of the primes-only Dirichlet polynomial by exact term-pair
//! expansion and by panel quadrature, Gaussian moment predictions, sampled
//! mollifier consistency checks, the mollified mean square, unit-window
//! integrals of log|L| near the critical line, and a squared-modulus
//! identity check for the completed function.
//!
//! The expansion method is exact in T (only the inner t-integral is closed
//! form), so the T >> X^(2k) regime costs the same as any other; quadrature
//! is the independent cross-check at moderate T.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorial, sieve_primes};
use crate::dirpoly::{
    joint_diagonal_prime_sum, mollifier, p_series, script_m, MollifierVariant, PSeriesVariant,
    ParameterSchedule, ScriptMVariant,
};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::lfunc::{
    afe_eval, dirichlet_eval, gamma_factor, log_abs_l, EvalConfig, NEAR_ZERO_FLOOR,
};
use crate::stats::{draw_samples, SamplePlan};

/// Cap on both pi(X)^max(k,l) and the expansion pair count.
pub const MOMENT_ENUMERATION_CAP: f64 = 5e7;

/// Cap on quadrature panels (8 evaluations each).
pub const MAX_QUADRATURE_PANELS: u64 = 20_000_000;

const QUANTILE_PROBES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

const WINDOW_TOL: f64 = 5e-3;
const WINDOW_MAX_DEPTH: u32 = 14;
const WINDOW_EVAL_CAP: u64 = 20_000;
const WINDOW_HARD_FAIL: f64 = 0.1;

/// How a MomentResult was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    AnalyticExpansion,
    Quadrature,
}

/// One mixed moment int_T^{2T} P^k conj(P)^l dt with its Gaussian-model
/// prediction and the parameters echoed back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub k: u32,
    pub l: u32,
    pub value: Complex64,
    pub method: MomentMethod,
    /// k! * T * S^k for k = l (S the diagonal prime sum), 0 otherwise.
    pub prediction: Complex64,
    pub t: f64,
    pub x: f64,
    pub sigma0: f64,
}

/// Residual quantiles and scalar metrics from a sampled consistency check,
/// with the excluded-sample accounting that the measure-zero exceptional
/// sets demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub sample_count: u64,
    pub excluded_count: u64,
    /// (probability, residual quantile) pairs at fixed probes.
    pub quantiles: Vec<(f64, f64)>,
    pub metrics: Vec<(String, f64)>,
    pub verdict: bool,
    /// (t, residual, excluded) for every sample, in draw order.
    pub samples: Vec<(f64, f64, bool)>,
}

impl ConsistencyReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// One block for every tolerance used by the consistency verdicts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    /// Median of |M exp(P) - 1| over samples.
    pub median_exp_residual: f64,
    /// Fraction of samples allowed to break the two prime-series bounds.
    pub series_bound_exceptional_fraction: f64,
    /// mean|script-M - M|^2 / mean|M|^2, per factor.
    pub mollifier_mean_square_ratio: f64,
    /// mean|1 - L*M|^2.
    pub mollified_mean_square: f64,
    /// |mean(L*M) - 1|.
    pub first_moment_offset: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            median_exp_residual: 0.2,
            series_bound_exceptional_fraction: 0.05,
            mollifier_mean_square_ratio: 1e-3,
            mollified_mean_square: 0.25,
            first_moment_offset: 0.15,
        }
    }
}

/// Exact int_T^{2T} (m/n)^{it} dt: T on the diagonal, otherwise
/// ((m/n)^{i2T} - (m/n)^{iT}) / (i log(m/n)).
pub fn inner_t_integral(m: u64, n: u64, t: f64) -> Complex64 {
    assert!(m >= 1 && n >= 1, "inner_t_integral needs m, n >= 1");
    if m == n {
        Complex64::new(t, 0.0)
    } else {
        oscillatory_integral((m as f64).ln() - (n as f64).ln(), t)
    }
}

fn oscillatory_integral(dlog: f64, t: f64) -> Complex64 {
    let upper = Complex64::from_polar(1.0, 2.0 * t * dlog);
    let lower = Complex64::from_polar(1.0, t * dlog);
    (upper - lower) / Complex64::new(0.0, dlog)
}

fn validate_moment_args(k: u32, l: u32, t: f64) -> Result<()> {
    let mut bad = Vec::new();
    if k > 4 || l > 4 {
        bad.push(format!("k = {k}, l = {l}: the expansion is limited to k, l <= 4"));
    }
    if !(t > 0.0 && t.is_finite()) {
        bad.push(format!("T = {t} must be positive and finite"));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(bad.join("; ")))
    }
}

/// (p, psi(p)) for p <= x with psi = a1 lambda_1 + a2 lambda_2.
fn prime_weights(
    form1: &Form,
    form2: &Form,
    a1: f64,
    a2: f64,
    x: f64,
) -> Result<Vec<(u64, f64)>> {
    if x < 2.0 {
        return Ok(Vec::new());
    }
    let limit = x.floor() as u64;
    form1.table.ensure_covers(limit)?;
    form2.table.ensure_covers(limit)?;
    let sieve = sieve_primes(limit)?;
    Ok(sieve
        .primes()
        .iter()
        .map(|&p| (p, a1 * form1.table.value(p) + a2 * form2.table.value(p)))
        .collect())
}

/// Number of k-element multisets from a pool of `pool` primes.
fn multiset_count(pool: u64, k: u32) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c = c * (pool as f64 + j as f64) / (j as f64 + 1.0);
    }
    c
}

struct ExpansionTerm {
    n: u128,
    ln_n: f64,
    /// multinomial * prod psi(p)^e * n^{-sigma0}.
    weight: f64,
}

/// All terms of P^k = sum_n weight(n) n^{-it}, enumerated as multisets of
/// primes in increasing index order (deterministic).
fn expand_power(primes: &[(u64, f64)], k: u32, sigma0: f64, k_factorial: f64) -> Vec<ExpansionTerm> {
    fn rec(
        primes: &[(u64, f64)],
        start: usize,
        remaining: u32,
        n: u128,
        ln_n: f64,
        psi_prod: f64,
        denom: f64,
        k_factorial: f64,
        sigma0: f64,
        out: &mut Vec<ExpansionTerm>,
    ) {
        if remaining == 0 {
            out.push(ExpansionTerm {
                n,
                ln_n,
                weight: k_factorial / denom * psi_prod * (-sigma0 * ln_n).exp(),
            });
            return;
        }
        if start == primes.len() {
            return;
        }
        rec(primes, start + 1, remaining, n, ln_n, psi_prod, denom, k_factorial, sigma0, out);
        let (p, psi) = primes[start];
        let lnp = (p as f64).ln();
        let mut nn = n;
        let mut ln_nn = ln_n;
        let mut prod = psi_prod;
        let mut den = denom;
        for e in 1..=remaining {
            nn *= p as u128;
            ln_nn += lnp;
            prod *= psi;
            den *= e as f64;
            rec(primes, start + 1, remaining - e, nn, ln_nn, prod, den, k_factorial, sigma0, out);
        }
    }
    let mut out = Vec::new();
    rec(primes, 0, k, 1, 0.0, 1.0, 1.0, k_factorial, sigma0, &mut out);
    out
}

/// Pairs every direct term against every conjugate term; parallel over the
/// direct side with an order-preserving collect, then a sequential fold, so
/// the sum is bit-stable across worker counts.
fn moment_pair_sum(direct: &[ExpansionTerm], conjugate: &[ExpansionTerm], t: f64) -> Complex64 {
    let partials: Vec<Complex64> = direct
        .par_iter()
        .map(|dn| {
            let mut acc = Complex64::new(0.0, 0.0);
            for cm in conjugate {
                let w = dn.weight * cm.weight;
                if dn.n == cm.n {
                    acc += Complex64::new(w * t, 0.0);
                } else {
                    acc += w * oscillatory_integral(cm.ln_n - dn.ln_n, t);
                }
            }
            acc
        })
        .collect();
    partials.iter().sum()
}

/// Exact-in-T mixed moment of the joint polynomial with
/// psi(p) = a1 lambda_1(p) + a2 lambda_2(p).
pub fn joint_bruteforce_moment(
    form1: &Form,
    form2: &Form,
    a1: f64,
    a2: f64,
    k: u32,
    l: u32,
    t: f64,
    x: f64,
    sigma0: f64,
) -> Result<MomentResult> {
    validate_moment_args(k, l, t)?;
    let primes = prime_weights(form1, form2, a1, a2, x)?;
    let pool = primes.len() as u64;
    let gate = (pool as f64).powi(k.max(l) as i32);
    let pairs = multiset_count(pool, k) * multiset_count(pool, l);
    if gate > MOMENT_ENUMERATION_CAP || pairs > MOMENT_ENUMERATION_CAP {
        return Err(Error::ResourceLimit(format!(
            "expansion needs ~{pairs:.3e} term pairs ({pool} primes, k={k}, l={l}); \
             cap {MOMENT_ENUMERATION_CAP:.1e}"
        )));
    }
    let direct = expand_power(&primes, k, sigma0, factorial(k)? as f64);
    let conjugate = expand_power(&primes, l, sigma0, factorial(l)? as f64);
    let value = moment_pair_sum(&direct, &conjugate, t);
    let s_psi = joint_diagonal_prime_sum(form1, form2, a1, a2, x, sigma0)?;
    let prediction = if k == l {
        Complex64::new(factorial(k)? as f64 * t * s_psi.powi(k as i32), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(MomentResult {
        k,
        l,
        value,
        method: MomentMethod::AnalyticExpansion,
        prediction,
        t,
        x,
        sigma0,
    })
}

/// Single-form mixed moment; identical code path to the joint version with
/// (a1, a2) = (1, 0), so the reduction is bitwise.
pub fn bruteforce_mixed_moment(
    form: &Form,
    k: u32,
    l: u32,
    t: f64,
    x: f64,
    sigma0: f64,
) -> Result<MomentResult> {
    joint_bruteforce_moment(form, form, 1.0, 0.0, k, l, t, x, sigma0)
}

const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

/// Composite 8-point Gauss panels over [T, 2T]. `points` is a minimum: the
/// panel count is raised until each panel spans at most ~4 radians of the
/// fastest oscillation (k+l) log X, otherwise the requested grid would
/// alias the integrand and converge to the wrong value.
pub fn quadrature_mixed_moment(
    form: &Form,
    k: u32,
    l: u32,
    t: f64,
    x: f64,
    sigma0: f64,
    points: u64,
) -> Result<MomentResult> {
    validate_moment_args(k, l, t)?;
    if points < 1000 {
        return Err(Error::InvalidArgument(format!(
            "points = {points} is below the minimum of 1000"
        )));
    }
    let primes = prime_weights(form, form, 1.0, 0.0, x)?;
    let data: Vec<(f64, f64)> = primes
        .iter()
        .map(|&(p, psi)| ((p as f64).ln(), psi * (p as f64).powf(-sigma0)))
        .collect();
    let omega = (k + l) as f64 * if x >= 2.0 { x.ln() } else { 0.0 };
    let min_panels = (points as f64 / 8.0).ceil() as u64;
    let osc_panels = (t * omega / 4.0).ceil() as u64;
    let n_panels = min_panels.max(osc_panels).max(1);
    if n_panels > MAX_QUADRATURE_PANELS {
        return Err(Error::ResourceLimit(format!(
            "resolving the oscillation over [T, 2T] needs {n_panels} panels \
             (cap {MAX_QUADRATURE_PANELS}); use the expansion method at this T"
        )));
    }
    let h = t / n_panels as f64;
    let partials: Vec<Complex64> = (0..n_panels)
        .into_par_iter()
        .map(|i| {
            let mid = t + (i as f64 + 0.5) * h;
            let half = 0.5 * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for (node, weight) in GL8 {
                let tt = mid + half * node;
                let mut poly = Complex64::new(0.0, 0.0);
                for &(lnp, c) in &data {
                    let (sin, cos) = (tt * lnp).sin_cos();
                    poly += Complex64::new(c * cos, -c * sin);
                }
                acc += weight * poly.powu(k) * poly.conj().powu(l);
            }
            acc * half
        })
        .collect();
    let value = partials.iter().sum();
    let s = joint_diagonal_prime_sum(form, form, 1.0, 0.0, x, sigma0)?;
    let prediction = if k == l {
        Complex64::new(factorial(k)? as f64 * t * s.powi(k as i32), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(MomentResult {
        k,
        l,
        value,
        method: MomentMethod::Quadrature,
        prediction,
        t,
        x,
        sigma0,
    })
}

/// Normalized real-part power moment (1/T) int_T^{2T} (Re P)^k dt via the
/// binomial split Re P = (P + conj P)/2 into mixed moments (exact in T).
pub fn real_power_moment(form: &Form, k: u32, t: f64, x: f64, sigma0: f64) -> Result<f64> {
    if k > 4 {
        return Err(Error::InvalidArgument(format!(
            "k = {k}: the binomial split needs mixed moments with max(j, k-j) <= 4"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=k {
        let binom =
            factorial(k)? as f64 / (factorial(j)? as f64 * factorial(k - j)? as f64);
        acc += binom * bruteforce_mixed_moment(form, j, k - j, t, x, sigma0)?.value;
    }
    Ok(acc.re / 2f64.powi(k as i32) / t)
}

/// Moment of a centered real Gaussian with the given variance:
/// 2^{-k} C(k, k/2) (k/2)! (2 variance)^{k/2} = (k-1)!! variance^{k/2}.
pub fn gaussian_moment_prediction(k: u32, variance: f64) -> Result<f64> {
    if k % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} is odd: the Gaussian moment is 0; use the smallness test instead"
        )));
    }
    if k > 12 {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the cap of 12")));
    }
    let half = k / 2;
    let central = factorial(k)? as f64 / (factorial(half)? as f64 * factorial(half)? as f64);
    Ok(central * factorial(half)? as f64 * (2.0 * variance).powi(half as i32)
        / 2f64.powi(k as i32))
}

fn quantile_table(values: &mut [f64]) -> Vec<(f64, f64)> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    QUANTILE_PROBES
        .iter()
        .map(|&q| {
            let pos = q * (values.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            (q, values[lo] * (1.0 - frac) + values[hi] * frac)
        })
        .collect()
}

/// Samples the residual |M(s) exp(P(s)) - 1| at s = sigma0 + it and checks
/// the two prime-series bounds (|low part| <= loglog T, |high part| <=
/// logloglog T) off an exceptional fraction. Evaluation abscissa comes from
/// the schedule; plan.sigma is not used here.
pub fn mollifier_exp_residual_stats(
    form: &Form,
    sched: &ParameterSchedule,
    plan: &SamplePlan,
    thresholds: &Thresholds,
) -> Result<ConsistencyReport> {
    let ts = draw_samples(plan)?;
    let loglog = plan.t.ln().ln();
    let logloglog = loglog.ln();
    let rows: Vec<(f64, bool)> = ts
        .par_iter()
        .map(|&tv| -> Result<(f64, bool)> {
            let s = Complex64::new(sched.sigma0, tv);
            let m = mollifier(form, s, sched, MollifierVariant::M)?.value;
            let p = p_series(form, s, sched, PSeriesVariant::Full)?.value;
            let residual = (m * p.exp() - Complex64::new(1.0, 0.0)).norm();
            let within = if sched.x < 2.0 {
                true
            } else {
                let p1 = p_series(form, s, sched, PSeriesVariant::Low)?.value;
                let p2 = p_series(form, s, sched, PSeriesVariant::High)?.value;
                p1.norm() <= loglog && p2.norm() <= logloglog
            };
            Ok((residual, within))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut residuals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let exceptional = rows.iter().filter(|r| !r.1).count() as f64 / rows.len() as f64;
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let samples = ts
        .iter()
        .zip(&rows)
        .map(|(&tv, r)| (tv, r.0, false))
        .collect();
    let quantiles = quantile_table(&mut residuals);
    let median = quantiles[2].1;
    let verdict = median <= thresholds.median_exp_residual
        && exceptional <= thresholds.series_bound_exceptional_fraction;
    Ok(ConsistencyReport {
        sample_count: plan.count,
        excluded_count: 0,
        quantiles,
        metrics: vec![
            ("median_exp_residual".to_string(), median),
            ("mean_exp_residual".to_string(), mean),
            ("series_bound_exceptional_fraction".to_string(), exceptional),
        ],
        verdict,
        samples,
    })
}

/// Compares the subset-sum mollifier factors against their truncated-
/// exponential forms at sampled s: mean|script-M - M|^2 relative to
/// mean|M|^2 per factor, plus quantiles of the residual
/// max_v |script-M_v exp(P_v) - 1|.
pub fn mollifier_consistency(
    form: &Form,
    sched: &ParameterSchedule,
    plan: &SamplePlan,
    thresholds: &Thresholds,
) -> Result<ConsistencyReport> {
    let ts = draw_samples(plan)?;
    let rows: Vec<[f64; 5]> = ts
        .par_iter()
        .map(|&tv| -> Result<[f64; 5]> {
            let s = Complex64::new(sched.sigma0, tv);
            let m1 = mollifier(form, s, sched, MollifierVariant::M1)?.value;
            let m2 = mollifier(form, s, sched, MollifierVariant::M2)?.value;
            if sched.x < 2.0 {
                return Ok([0.0, 0.0, m1.norm_sqr(), m2.norm_sqr(), 0.0]);
            }
            let sm1 = script_m(form, s, sched, ScriptMVariant::One)?.value;
            let sm2 = script_m(form, s, sched, ScriptMVariant::Two)?.value;
            let p1 = p_series(form, s, sched, PSeriesVariant::Low)?.value;
            let p2 = p_series(form, s, sched, PSeriesVariant::High)?.value;
            let one = Complex64::new(1.0, 0.0);
            let exp_residual = (sm1 * p1.exp() - one)
                .norm()
                .max((sm2 * p2.exp() - one).norm());
            Ok([
                (sm1 - m1).norm_sqr(),
                (sm2 - m2).norm_sqr(),
                m1.norm_sqr(),
                m2.norm_sqr(),
                exp_residual,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let mean = |idx: usize| rows.iter().map(|r| r[idx]).sum::<f64>() / n;
    let (d1, d2, m1sq, m2sq) = (mean(0), mean(1), mean(2), mean(3));
    let ratio1 = if m1sq > 0.0 { d1 / m1sq } else { 0.0 };
    let ratio2 = if m2sq > 0.0 { d2 / m2sq } else { 0.0 };
    let mut residuals: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let samples = ts
        .iter()
        .zip(&rows)
        .map(|(&tv, r)| (tv, r[4], false))
        .collect();
    let quantiles = quantile_table(&mut residuals);
    let verdict = ratio1 <= thresholds.mollifier_mean_square_ratio
        && ratio2 <= thresholds.mollifier_mean_square_ratio;
    Ok(ConsistencyReport {
        sample_count: plan.count,
        excluded_count: 0,
        quantiles,
        metrics: vec![
            ("smooth_mean_square_ratio".to_string(), ratio1),
            ("rough_mean_square_ratio".to_string(), ratio2),
            ("mean_square_m1".to_string(), m1sq),
            ("mean_square_m2".to_string(), m2sq),
        ],
        verdict,
        samples,
    })
}

/// Samples |1 - L(s)M(s)|^2 and the first moment of L*M at s = sigma0 + it.
/// Samples where |L| collapses to the evaluation floor are excluded and
/// counted.
pub fn mollified_l_mean_square(
    form: &Form,
    sched: &ParameterSchedule,
    plan: &SamplePlan,
    cfg: &EvalConfig,
    thresholds: &Thresholds,
) -> Result<ConsistencyReport> {
    let ts = draw_samples(plan)?;
    let rows: Vec<Option<(f64, Complex64)>> = ts
        .par_iter()
        .map(|&tv| -> Result<Option<(f64, Complex64)>> {
            let s = Complex64::new(sched.sigma0, tv);
            let l = afe_eval(form, s, cfg)?.l;
            if l.norm() <= NEAR_ZERO_FLOOR {
                return Ok(None);
            }
            let m = mollifier(form, s, sched, MollifierVariant::M)?.value;
            let lm = l * m;
            Ok(Some(((Complex64::new(1.0, 0.0) - lm).norm_sqr(), lm)))
        })
        .collect::<Result<Vec<_>>>()?;
    let included: Vec<(f64, Complex64)> = rows.iter().flatten().copied().collect();
    let excluded_count = (rows.len() - included.len()) as u64;
    if included.is_empty() {
        return Err(Error::InvalidArgument(
            "every sample was excluded at the evaluation floor".to_string(),
        ));
    }
    let n = included.len() as f64;
    let mean_sq = included.iter().map(|r| r.0).sum::<f64>() / n;
    let var_sq = included.iter().map(|r| (r.0 - mean_sq).powi(2)).sum::<f64>() / n;
    let se = (var_sq / n).sqrt();
    let mean_lm = included.iter().map(|r| r.1).sum::<Complex64>() / n;
    let offset = (mean_lm - Complex64::new(1.0, 0.0)).norm();
    let mut residuals: Vec<f64> = included.iter().map(|r| r.0.sqrt()).collect();
    let samples = ts
        .iter()
        .zip(&rows)
        .map(|(&tv, r)| match r {
            Some((sq, _)) => (tv, sq.sqrt(), false),
            None => (tv, 0.0, true),
        })
        .collect();
    let quantiles = quantile_table(&mut residuals);
    let verdict =
        mean_sq <= thresholds.mollified_mean_square && offset <= thresholds.first_moment_offset;
    Ok(ConsistencyReport {
        sample_count: plan.count,
        excluded_count,
        quantiles,
        metrics: vec![
            ("mean_square_one_minus_lm".to_string(), mean_sq),
            ("mean_square_standard_error".to_string(), se),
            ("first_moment_offset".to_string(), offset),
            ("mean_lm_re".to_string(), mean_lm.re),
            ("mean_lm_im".to_string(), mean_lm.im),
        ],
        verdict,
        samples,
    })
}

struct WindowBudget {
    evals: u64,
}

fn adaptive_simpson(
    g: &mut dyn FnMut(f64, &mut WindowBudget) -> Result<f64>,
    budget: &mut WindowBudget,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = g(lm, budget)?;
    let frm = g(rm, budget)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        if delta.abs() > WINDOW_HARD_FAIL {
            return Err(Error::Precision(format!(
                "window quadrature failed to refine near y = {m:.6}: \
                 local error {:.3e} at the depth cap",
                delta.abs()
            )));
        }
        return Ok(left + right + delta / 15.0);
    }
    Ok(
        adaptive_simpson(g, budget, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)?
            + adaptive_simpson(g, budget, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?,
    )
}

/// lhs = int_{t-1}^{t+1} |log|L(sigma+iy)| - log|L(1/2+iy)|| dy by adaptive
/// Simpson quadrature (subdivision chases the spikes at zeros of L down to
/// a depth cap), rhs = (sigma - 1/2) log t. At sigma = 1/2 the integrand is
/// identically zero and (0, 0) is returned without quadrature.
pub fn log_window_integral_check(
    form: &Form,
    sigma: f64,
    t: f64,
    cfg: &EvalConfig,
) -> Result<(f64, f64)> {
    if !(t >= 100.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be at least 100")));
    }
    let sigma_cap = 0.5 + 5.0 / t.ln();
    if !(0.5..=sigma_cap).contains(&sigma) {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must lie in [1/2, 1/2 + 5/log t] = [0.5, {sigma_cap:.6}]"
        )));
    }
    let rhs = (sigma - 0.5) * t.ln();
    if sigma == 0.5 {
        return Ok((0.0, rhs));
    }
    let mut g = |y: f64, budget: &mut WindowBudget| -> Result<f64> {
        budget.evals += 1;
        if budget.evals > WINDOW_EVAL_CAP {
            return Err(Error::Precision(format!(
                "window quadrature exceeded {WINDOW_EVAL_CAP} integrand evaluations"
            )));
        }
        let (off_line, _) = log_abs_l(form, sigma, y, cfg)?;
        let (on_line, _) = log_abs_l(form, 0.5, y, cfg)?;
        Ok((off_line - on_line).abs())
    };
    let mut budget = WindowBudget { evals: 0 };
    let (a, b) = (t - 1.0, t + 1.0);
    let m = t;
    let fa = g(a, &mut budget)?;
    let fb = g(b, &mut budget)?;
    let fm = g(m, &mut budget)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let lhs = adaptive_simpson(
        &mut g,
        &mut budget,
        a,
        fa,
        b,
        fb,
        m,
        fm,
        whole,
        WINDOW_TOL,
        WINDOW_MAX_DEPTH,
    )?;
    Ok((lhs, rhs))
}

/// Checks |L(s)|^2 = (I(s) + I-dual(s)) / |G(s)|^2 on the critical line for
/// self-dual forms, where I is the damped vertical-line integral of
/// Lambda(z+s) Lambda(z+conj s) e^{z^2} / z on Re z = 1.75. The dual
/// integral is the conjugate, so rhs = 2 Re I / |G|^2; the gamma logs are
/// combined before exponentiation so the ratio survives |G| underflow.
/// Returns (|afe L|^2, rhs).
pub fn squared_modulus_identity_check(
    form: &Form,
    s: Complex64,
    cfg: &EvalConfig,
) -> Result<(f64, f64)> {
    if (s.re - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "s = {s} is off the critical line"
        )));
    }
    let height = s.im.abs();
    if !(10.0..=1000.0).contains(&height) {
        return Err(Error::InvalidArgument(format!(
            "|Im s| = {height} must lie in [10, 1000]"
        )));
    }
    if !form.descriptor.self_dual {
        return Err(Error::InvalidArgument(
            "the dual-pair reduction is implemented for self-dual forms only".to_string(),
        ));
    }
    // The series truncation error on Re z = 1.75 rides the gamma-factor
    // ratio |G(2.25 + it)/G(1/2 + it)|^2 ~ (t/2)^{1.75 deg}, so the term
    // count scales with height, capped by the table; the halved-count sum
    // below turns an under-provisioned table into a Precision error rather
    // than a silently drifted rhs.
    let n_min: u64 = if form.descriptor.degree <= 2 { 50_000 } else { 200_000 };
    form.table.ensure_covers(n_min)?;
    let scaled = (n_min as f64 * (height / 50.0).powi(2)) as u64;
    let n_terms = scaled.clamp(n_min, 500_000).min(form.table.limit);
    // Re(z+s) = 2.25: absolutely convergent series on both Lambda factors.
    const C: f64 = 1.75;
    const V_MAX: f64 = 9.0;
    const H: f64 = 0.0625;
    let lgs = gamma_factor(&form.descriptor, s)?;
    let n_nodes = (2.0 * V_MAX / H).round() as usize + 1;
    let nodes: Vec<(Complex64, Complex64)> = (0..n_nodes)
        .into_par_iter()
        .map(|i| -> Result<(Complex64, Complex64)> {
            let v = -V_MAX + i as f64 * H;
            let z = Complex64::new(C, v);
            let w1 = z + s;
            let w2 = z + s.conj();
            let lg1 = gamma_factor(&form.descriptor, w1)?;
            let lg2 = gamma_factor(&form.descriptor, w2)?;
            let ls1 = dirichlet_eval(form, w1, n_terms)?;
            let ls2 = dirichlet_eval(form, w2, n_terms)?;
            let lh1 = dirichlet_eval(form, w1, n_terms / 2)?;
            let lh2 = dirichlet_eval(form, w2, n_terms / 2)?;
            let damped = (lg1 + lg2 - Complex64::new(2.0 * lgs.re, 0.0) + z * z).exp();
            Ok((damped * ls1 * ls2 / z, damped * lh1 * lh2 / z))
        })
        .collect::<Result<Vec<_>>>()?;
    // The e^{z^2} factor is ~e^{-78} at |v| = 9, so plain node sums stand in
    // for trapezoid rules; the halved grid reuses the even-index nodes.
    let coarse: Complex64 = nodes.iter().step_by(2).map(|(full, _)| full).sum();
    let fine: Complex64 = nodes.iter().map(|(full, _)| full).sum();
    let half_terms: Complex64 = nodes.iter().map(|(_, half)| half).sum();
    let rhs_coarse = 2.0 * (coarse * (2.0 * H) / (2.0 * PI)).re;
    let rhs = 2.0 * (fine * H / (2.0 * PI)).re;
    let rhs_half = 2.0 * (half_terms * H / (2.0 * PI)).re;
    if (rhs - rhs_coarse).abs() > (1e-4 * rhs.abs()).max(1e-8) {
        return Err(Error::Precision(format!(
            "vertical-line quadrature not converged: halving the step moves \
             the value by {:.3e}",
            (rhs - rhs_coarse).abs()
        )));
    }
    if (rhs - rhs_half).abs() > (1.5e-3 * rhs.abs()).max(1e-9) {
        return Err(Error::Precision(format!(
            "series truncation at {n_terms} terms not converged at height \
             {height}: halving the term count moves the value by {:.3e}; a \
             longer coefficient table is needed",
            (rhs - rhs_half).abs()
        )));
    }
    let lhs = afe_eval(form, s, cfg)?.l.norm_sqr();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirpoly::{diagonal_prime_sum, schedule, ScheduleOverrides};
    use crate::forms::{builtin_descriptor, CoefficientTable};
    use crate::stats::SampleMode;
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn delta_form() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| Form::builtin("delta", 700_000).unwrap())
    }

    fn weight16_form() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| Form::builtin("weight16", 100).unwrap())
    }

    fn sym2_form() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| Form::builtin("sym2-delta", 100).unwrap())
    }

    /// lambda(1) = 1 and nothing else: the constant Dirichlet series.
    fn trivial_form() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| {
            let mut values = vec![0.0; 1_200_001];
            values[1] = 1.0;
            Form::new(
                builtin_descriptor("delta").unwrap(),
                CoefficientTable::from_values("delta", 2, "unit mass at n = 1", values).unwrap(),
            )
            .unwrap()
        })
    }

    fn override_schedule(t: f64, x: f64, y: f64, sigma0: f64, k1: f64, k2: f64) -> ParameterSchedule {
        schedule(
            t,
            Some(ScheduleOverrides {
                x: Some(x),
                y: Some(y),
                sigma0: Some(sigma0),
                k1: Some(k1),
                k2: Some(k2),
                ..Default::default()
            }),
        )
        .unwrap()
    }

    fn degenerate_schedule() -> ParameterSchedule {
        ParameterSchedule {
            t: 1e5,
            w: 3.0,
            x: 1.5,
            y: 1.2,
            sigma0: 0.5,
            k1: 5.0,
            k2: 2.0,
            overridden: true,
        }
    }

    fn plan(t: f64, count: u64, seed: u64, sigma: f64) -> SamplePlan {
        SamplePlan {
            t,
            count,
            seed,
            mode: SampleMode::UniformRandom,
            sigma,
        }
    }

    #[test]
    fn inner_integral_diagonal_is_t() {
        assert_eq!(inner_t_integral(7, 7, 1234.5), Complex64::new(1234.5, 0.0));
    }

    #[test]
    fn inner_integral_respects_modulus_bound() {
        for (m, n) in [(2u64, 1u64), (3, 2), (1000, 999), (5, 100)] {
            let bound = 2.0 / ((m as f64).ln() - (n as f64).ln()).abs();
            for t in [10.0, 1e4, 1e8] {
                assert!(inner_t_integral(m, n, t).norm() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn inner_integral_matches_simpson() {
        // Composite Simpson oracle for int_10^20 2^{it} dt.
        let (m, n, t) = (2u64, 1u64, 10.0);
        let steps = 20_000usize;
        let h = t / steps as f64;
        let f = |y: f64| Complex64::from_polar(1.0, y * (m as f64).ln());
        let mut acc = f(t) + f(2.0 * t);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(t + i as f64 * h);
        }
        let oracle = acc * h / 3.0;
        let exact = inner_t_integral(m, n, t);
        assert!((exact - oracle).norm() < 1e-10, "diff {}", (exact - oracle).norm());
    }

    #[test]
    fn zeroth_moment_is_t_exactly() {
        let bf = bruteforce_mixed_moment(delta_form(), 0, 0, 1e5, 50.0, 0.5).unwrap();
        assert_eq!(bf.value, Complex64::new(1e5, 0.0));
        assert_eq!(bf.prediction, Complex64::new(1e5, 0.0));
        let quad = quadrature_mixed_moment(delta_form(), 0, 0, 1e5, 50.0, 0.5, 1000).unwrap();
        assert_relative_eq!(quad.value.re, 1e5, max_relative = 1e-12);
        assert_relative_eq!(quad.value.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn expansion_matches_quadrature() {
        for (k, l) in [(0u32, 1u32), (1, 1), (2, 1)] {
            let bf = bruteforce_mixed_moment(delta_form(), k, l, 1e4, 20.0, 0.5).unwrap();
            let quad =
                quadrature_mixed_moment(delta_form(), k, l, 1e4, 20.0, 0.5, 1000).unwrap();
            let rel = (bf.value - quad.value).norm() / bf.value.norm().max(quad.value.norm());
            assert!(rel <= 1e-6, "k={k} l={l}: rel = {rel:.3e}");
        }
    }

    #[test]
    fn expansion_is_conjugate_under_k_l_swap() {
        let a = bruteforce_mixed_moment(delta_form(), 2, 1, 1e4, 20.0, 0.5).unwrap();
        let b = bruteforce_mixed_moment(delta_form(), 1, 2, 1e4, 20.0, 0.5).unwrap();
        assert_relative_eq!(a.value.re, b.value.re, max_relative = 1e-12);
        assert_relative_eq!(a.value.im, -b.value.im, max_relative = 1e-12);
        let qa = quadrature_mixed_moment(delta_form(), 2, 1, 1e4, 20.0, 0.5, 1000).unwrap();
        let qb = quadrature_mixed_moment(delta_form(), 1, 2, 1e4, 20.0, 0.5, 1000).unwrap();
        assert_relative_eq!(qa.value.re, qb.value.re, max_relative = 1e-12);
        assert_relative_eq!(qa.value.im, -qb.value.im, max_relative = 1e-12);
    }

    #[test]
    fn diagonal_prediction_leads_at_large_t() {
        // k = l = 1 at T = 1e8: the diagonal T*S dwarfs the oscillatory
        // off-diagonal terms, and S matches the direct prime sum.
        let result = bruteforce_mixed_moment(sym2_form(), 1, 1, 1e8, 10.0, 0.5).unwrap();
        assert_relative_eq!(
            result.prediction.re,
            1e8 * 0.5552444181481668,
            max_relative = 1e-12
        );
        let ratio = result.value.re / result.prediction.re;
        assert!((0.9..=1.1).contains(&ratio), "ratio = {ratio}");
        assert!(result.value.im.abs() <= 1e-3 * result.value.re);
    }

    #[test]
    fn joint_moment_reduces_to_single_form_bitwise() {
        let single = bruteforce_mixed_moment(delta_form(), 2, 1, 1e6, 30.0, 0.55).unwrap();
        let joint =
            joint_bruteforce_moment(delta_form(), weight16_form(), 1.0, 0.0, 2, 1, 1e6, 30.0, 0.55)
                .unwrap();
        assert_eq!(single.value.re.to_bits(), joint.value.re.to_bits());
        assert_eq!(single.value.im.to_bits(), joint.value.im.to_bits());
        assert_eq!(single.prediction, joint.prediction);
    }

    #[test]
    fn joint_moment_scales_homogeneously() {
        let single = bruteforce_mixed_moment(delta_form(), 2, 1, 1e6, 30.0, 0.55).unwrap();
        let scaled =
            joint_bruteforce_moment(delta_form(), weight16_form(), -1.5, 0.0, 2, 1, 1e6, 30.0, 0.55)
                .unwrap();
        let factor = (-1.5f64).powi(3);
        assert_relative_eq!(scaled.value.re, factor * single.value.re, max_relative = 1e-13);
        assert_relative_eq!(scaled.value.im, factor * single.value.im, max_relative = 1e-13);
    }

    #[test]
    fn joint_prediction_uses_combined_prime_sum() {
        let result = joint_bruteforce_moment(
            delta_form(),
            weight16_form(),
            1.0,
            1.0,
            1,
            1,
            1e8,
            50.0,
            0.5,
        )
        .unwrap();
        let sieve = sieve_primes(50).unwrap();
        let mut s = 0.0;
        for &p in sieve.primes() {
            let psi = delta_form().table.value(p) + weight16_form().table.value(p);
            s += psi * psi / p as f64;
        }
        assert_relative_eq!(result.prediction.re, 1e8 * s, max_relative = 1e-12);
        let ratio = result.value.re / result.prediction.re;
        assert!((0.9..=1.1).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn moment_results_are_bitwise_reproducible() {
        let a = joint_bruteforce_moment(delta_form(), weight16_form(), 0.7, -0.3, 2, 1, 1e6, 30.0, 0.55)
            .unwrap();
        let b = joint_bruteforce_moment(delta_form(), weight16_form(), 0.7, -0.3, 2, 1, 1e6, 30.0, 0.55)
            .unwrap();
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
        let qa = quadrature_mixed_moment(delta_form(), 1, 1, 1e4, 20.0, 0.5, 2000).unwrap();
        let qb = quadrature_mixed_moment(delta_form(), 1, 1, 1e4, 20.0, 0.5, 2000).unwrap();
        assert_eq!(qa.value.re.to_bits(), qb.value.re.to_bits());
        assert_eq!(qa.value.im.to_bits(), qb.value.im.to_bits());
    }

    #[test]
    fn enumeration_cap_rejects_large_supports() {
        match bruteforce_mixed_moment(delta_form(), 4, 4, 1e6, 2000.0, 0.5) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource-limit, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_enforces_minimum_points() {
        match quadrature_mixed_moment(delta_form(), 1, 1, 1e4, 20.0, 0.5, 500) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("1000"), "{msg}"),
            other => panic!("expected invalid-argument, got {other:?}"),
        }
    }

    #[test]
    fn expansion_rejects_large_powers() {
        assert!(matches!(
            bruteforce_mixed_moment(delta_form(), 5, 0, 1e4, 20.0, 0.5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gaussian_prediction_matches_double_factorial() {
        assert_relative_eq!(gaussian_moment_prediction(2, 0.37).unwrap(), 0.37);
        assert_relative_eq!(gaussian_moment_prediction(4, 1.0).unwrap(), 3.0);
        assert_relative_eq!(gaussian_moment_prediction(6, 1.0).unwrap(), 15.0);
        assert_relative_eq!(gaussian_moment_prediction(0, 2.5).unwrap(), 1.0);
        assert_relative_eq!(
            gaussian_moment_prediction(4, 0.5).unwrap(),
            3.0 * 0.25,
            max_relative = 1e-14
        );
        assert!(matches!(
            gaussian_moment_prediction(3, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gaussian_moment_prediction(14, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn real_power_moments_follow_gaussian_scaling() {
        let s = diagonal_prime_sum(delta_form(), 50.0, 0.5).unwrap();
        let odd = real_power_moment(delta_form(), 1, 1e6, 50.0, 0.5).unwrap();
        assert!(odd.abs() <= 0.05 * s.sqrt(), "first moment {odd}");
        let even = real_power_moment(delta_form(), 2, 1e8, 50.0, 0.5).unwrap();
        let ratio = even / gaussian_moment_prediction(2, s / 2.0).unwrap();
        assert!((0.8..=1.2).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn residual_stats_vanish_without_support() {
        let sched = degenerate_schedule();
        let p = plan(1e5, 120, 5, 0.5);
        let report =
            mollifier_exp_residual_stats(delta_form(), &sched, &p, &Thresholds::default())
                .unwrap();
        assert!(report.verdict);
        assert_eq!(report.metric("median_exp_residual"), Some(0.0));
        assert_eq!(report.metric("series_bound_exceptional_fraction"), Some(0.0));
        assert!(report.quantiles.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn exp_residual_is_conjugation_invariant() {
        let sched = override_schedule(1e4, 100.0, 10.0, 0.6, 20.0, 10.0);
        let tv = 4321.75;
        let residual_at = |s: Complex64| {
            let m = mollifier(delta_form(), s, &sched, MollifierVariant::M)
                .unwrap()
                .value;
            let p = p_series(delta_form(), s, &sched, PSeriesVariant::Full)
                .unwrap()
                .value;
            (m * p.exp() - Complex64::new(1.0, 0.0)).norm()
        };
        let up = residual_at(Complex64::new(0.6, tv));
        let down = residual_at(Complex64::new(0.6, -tv));
        assert_relative_eq!(up, down, max_relative = 1e-14);
    }

    #[test]
    fn mollifier_consistency_degenerate_support_is_exact() {
        let sched = degenerate_schedule();
        let p = plan(1e5, 120, 7, 0.5);
        let report =
            mollifier_consistency(delta_form(), &sched, &p, &Thresholds::default()).unwrap();
        assert!(report.verdict);
        assert_eq!(report.metric("smooth_mean_square_ratio"), Some(0.0));
        assert_eq!(report.metric("rough_mean_square_ratio"), Some(0.0));
        assert_eq!(report.metric("mean_square_m1"), Some(1.0));
    }

    #[test]
    fn truncated_exponential_bound_controls_smooth_factor() {
        // Wherever |P1| <= K1/100, the truncation-tail certificate bounds
        // |script-M1 - exp(-P1)|; the certificate needs K1/100 >= 1, and at
        // sigma0 = 0.9 nearly every sample qualifies.
        use crate::dirpoly::truncated_exp_check;
        let sched = override_schedule(1e5, 1e4, 1e3, 0.9, 100.0, 10.0);
        let p = plan(1e5, 40, 11, 0.9);
        let ts = draw_samples(&p).unwrap();
        let mut qualifying = 0u32;
        for &tv in &ts {
            let s = Complex64::new(sched.sigma0, tv);
            let p1 = p_series(delta_form(), s, &sched, PSeriesVariant::Low)
                .unwrap()
                .value;
            if p1.norm() > sched.k1 / 100.0 {
                continue;
            }
            qualifying += 1;
            let sm1 = script_m(delta_form(), s, &sched, ScriptMVariant::One)
                .unwrap()
                .value;
            let (_, bound) = truncated_exp_check(sched.k1 / 100.0, -p1).unwrap();
            let diff = (sm1 - (-p1).exp()).norm();
            assert!(diff <= bound + 1e-12, "diff {diff:.3e} vs bound {bound:.3e}");
        }
        assert!(qualifying > 0, "no sample had |P1| <= K1/100");
    }

    #[test]
    fn mollified_mean_square_vanishes_for_trivial_table() {
        // L is identically 1 as a Dirichlet series; the evaluator's
        // smoothing weight at n = 1 deviates from 1 by O(q^{-0.15}) because
        // the trivial table lacks the assumed reflection symmetry, so the
        // mean square is small but not zero.
        let sched = degenerate_schedule();
        let sched = ParameterSchedule { t: 1e4, sigma0: 0.9, ..sched };
        let p = plan(1e4, 100, 13, 0.9);
        let report = mollified_l_mean_square(
            trivial_form(),
            &sched,
            &p,
            &EvalConfig::default(),
            &Thresholds::default(),
        )
        .unwrap();
        let ms = report.metric("mean_square_one_minus_lm").unwrap();
        assert!(ms <= 0.05, "mean square {ms}");
        assert_eq!(report.excluded_count, 0);
    }

    #[test]
    fn mollified_mean_square_tracks_prime_square_tail() {
        // Degree 2 forces a p^{-2s} mismatch between the squarefree
        // mollifier and 1/L at every prime, so the mean square sits near
        // sum p^{-4 sigma0} (about 0.11 at sigma0 = 0.9) rather than at 0.
        let sched = override_schedule(6e3, 5e3, 1e3, 0.9, 20.0, 10.0);
        let p = plan(6e3, 100, 17, 0.9);
        let report = mollified_l_mean_square(
            delta_form(),
            &sched,
            &p,
            &EvalConfig::default(),
            &Thresholds::default(),
        )
        .unwrap();
        let ms = report.metric("mean_square_one_minus_lm").unwrap();
        assert!(ms <= 0.2, "mean square {ms}");
        let offset = report.metric("first_moment_offset").unwrap();
        assert!(offset <= 0.1, "offset {offset}");
    }

    #[test]
    fn mean_square_is_stable_under_doubling() {
        let sched = ParameterSchedule { t: 1e4, sigma0: 0.9, ..degenerate_schedule() };
        let cfg = EvalConfig::default();
        let thr = Thresholds::default();
        let r1 = mollified_l_mean_square(trivial_form(), &sched, &plan(1e4, 100, 13, 0.9), &cfg, &thr)
            .unwrap();
        let r2 = mollified_l_mean_square(trivial_form(), &sched, &plan(1e4, 200, 13, 0.9), &cfg, &thr)
            .unwrap();
        let (m1, m2) = (
            r1.metric("mean_square_one_minus_lm").unwrap(),
            r2.metric("mean_square_one_minus_lm").unwrap(),
        );
        let band = 2.0
            * (r1.metric("mean_square_standard_error").unwrap()
                + r2.metric("mean_square_standard_error").unwrap());
        assert!((m1 - m2).abs() <= band, "m1 {m1} m2 {m2} band {band}");
    }

    #[test]
    fn window_at_half_is_zero() {
        let (lhs, rhs) =
            log_window_integral_check(delta_form(), 0.5, 1000.0, &EvalConfig::default()).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn window_rejects_out_of_range_sigma() {
        let cfg = EvalConfig::default();
        assert!(matches!(
            log_window_integral_check(delta_form(), 0.49, 1000.0, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            log_window_integral_check(delta_form(), 0.5 + 6.0 / 1000f64.ln(), 1000.0, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            log_window_integral_check(delta_form(), 0.6, 50.0, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn window_integral_is_bounded_and_grows_with_sigma() {
        let cfg = EvalConfig::default();
        let t = 1000.0f64;
        let near = 0.5 + 0.4 / t.ln();
        let far = 0.5 + 1.0 / t.ln();
        let (lhs_near, rhs_near) = log_window_integral_check(delta_form(), near, t, &cfg).unwrap();
        let (lhs_far, rhs_far) = log_window_integral_check(delta_form(), far, t, &cfg).unwrap();
        assert_relative_eq!(rhs_far, 1.0, max_relative = 1e-12);
        assert!(lhs_near > 0.0);
        assert!(lhs_far <= 5.0 * rhs_far, "lhs {lhs_far} rhs {rhs_far}");
        assert!(
            lhs_near <= 1.05 * lhs_far + 0.02,
            "near {lhs_near} far {lhs_far} at rhs_near {rhs_near}"
        );
    }

    #[test]
    fn squared_modulus_identity_holds_at_height_fifty() {
        let s = Complex64::new(0.5, 50.0);
        let (lhs, rhs) =
            squared_modulus_identity_check(delta_form(), s, &EvalConfig::default()).unwrap();
        assert!(rhs >= -1e-6 * lhs.max(1.0));
        let rel = (lhs - rhs).abs() / lhs.max(rhs);
        assert!(rel <= 1e-3, "lhs {lhs} rhs {rhs} rel {rel:.3e}");
    }

    #[test]
    fn squared_modulus_identity_rejects_bad_arguments() {
        let cfg = EvalConfig::default();
        assert!(matches!(
            squared_modulus_identity_check(delta_form(), Complex64::new(0.6, 50.0), &cfg),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            squared_modulus_identity_check(delta_form(), Complex64::new(0.5, 5.0), &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}
