//! Dirichlet-polynomial toolkit: the T-dependent parameter schedule
//! (W, X, Y, sigma0, K1, K2), the auxiliary prime series P / P0 / P1 / P2,
//! the admissibility predicates a(n), a1(n), a2(n), the mollifiers
//! M / M1 / M2, and truncated exponentials.
//!
//! The schedule's asymptotic regime needs very large T (W >= 3 forces
//! T ~ 1e18), so desk-scale experiments run with explicit overrides; the
//! `overridden` flag travels with every schedule so reports can distinguish
//! the two regimes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::sieve_primes;
use crate::error::{Error, Result};
use crate::forms::{local_power_sums, Form};

/// Hard cap on mollifier support enumeration; larger supports switch to the
/// symmetric-function evaluation.
pub const MOLLIFIER_ENUMERATION_CAP: u64 = 10_000_000;

/// The run parameters tied to a height T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSchedule {
    pub t: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub sigma0: f64,
    pub k1: f64,
    pub k2: f64,
    pub overridden: bool,
}

/// Explicit replacements for individual schedule fields.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleOverrides {
    pub w: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub sigma0: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

impl ScheduleOverrides {
    pub fn is_empty(&self) -> bool {
        self.w.is_none()
            && self.x.is_none()
            && self.y.is_none()
            && self.sigma0.is_none()
            && self.k1.is_none()
            && self.k2.is_none()
    }
}

/// Builds the schedule at height T. Without overrides all fields follow the
/// asymptotic formulas W = (logloglog T)^4, X = T^{1/(logloglog T)^2},
/// Y = T^{(1/loglog T)^2}, sigma0 = 1/2 + W/log T, K1 = 100 loglog T,
/// K2 = 100 logloglog T (natural logs), and W >= 3 is required. Overridden
/// schedules skip the W >= 3 gate but still satisfy 2 < Y <= X < T,
/// 1/2 <= sigma0 < 1 and K2 <= K1.
pub fn schedule(t: f64, overrides: Option<ScheduleOverrides>) -> Result<ParameterSchedule> {
    let e_e = std::f64::consts::E.exp();
    if !(t > e_e) {
        return Err(Error::InvalidArgument(format!(
            "T = {t} must exceed e^e so that loglog T > 1"
        )));
    }
    let lt = t.ln();
    let llt = lt.ln();
    let lllt = llt.ln();

    let ov = overrides.unwrap_or_default();
    let overridden = !ov.is_empty();
    let w = ov.w.unwrap_or(lllt.powi(4));
    let x = ov.x.unwrap_or((lt / (lllt * lllt)).exp());
    let y = ov.y.unwrap_or((lt / (llt * llt)).exp());
    let sigma0 = ov.sigma0.unwrap_or(0.5 + w / lt);
    let k1 = ov.k1.unwrap_or(100.0 * llt);
    let k2 = ov.k2.unwrap_or(100.0 * lllt);

    if !overridden && w < 3.0 {
        return Err(Error::InfeasibleSchedule(format!(
            "asymptotic schedule at T = {t} gives W = {w:.3} < 3; \
             supply explicit overrides (W, X, Y, sigma0, K1, K2) to run at this height"
        )));
    }

    let mut bad = Vec::new();
    if !(y > 2.0) {
        bad.push(format!("Y = {y} must exceed 2"));
    }
    if !(y <= x) {
        bad.push(format!("Y = {y} must not exceed X = {x}"));
    }
    if !(x < t) {
        bad.push(format!("X = {x} must be below T = {t}"));
    }
    let sigma_ok = if overridden {
        (0.5..1.0).contains(&sigma0)
    } else {
        sigma0 > 0.5 && sigma0 < 1.0
    };
    if !sigma_ok {
        bad.push(format!("sigma0 = {sigma0} must lie in [1/2, 1)"));
    }
    if !(k2 <= k1) {
        bad.push(format!("K2 = {k2} must not exceed K1 = {k1}"));
    }
    if !bad.is_empty() {
        return Err(Error::InvalidArgument(bad.join("; ")));
    }
    Ok(ParameterSchedule {
        t,
        w,
        x,
        y,
        sigma0,
        k1,
        k2,
        overridden,
    })
}

/// A Dirichlet-polynomial value with its accumulation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyValue {
    pub s: Complex64,
    pub value: Complex64,
    /// Number of nonzero summands actually accumulated.
    pub term_count: u64,
}

/// Which part of the prime series to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PSeriesVariant {
    /// P(f,s) = sum over prime powers 2 <= n <= X of Lambda_f(n)/(n^s log n).
    Full,
    /// P0(f,s) = sum over primes p <= X of lambda(1,p) p^{-s}.
    PrimesOnly,
    /// P1: `Full` restricted to n <= Y.
    Low,
    /// P2: `Full` restricted to Y < n <= X.
    High,
}

/// Prime/prime-power series. `Full` uses Lambda_f(p^k) = (sum of k-th
/// powers of the local parameters) * log p, obtained from lambda(1,p) by
/// Newton's identities, so each term is Lambda_f(p^k)/(p^{ks} k log p).
pub fn p_series(
    form: &Form,
    s: Complex64,
    sched: &ParameterSchedule,
    variant: PSeriesVariant,
) -> Result<PolyValue> {
    let x = sched.x;
    if matches!(variant, PSeriesVariant::Low | PSeriesVariant::High) && !(sched.y > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "P1/P2 split needs a usable Y, got {}",
            sched.y
        )));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut term_count = 0u64;
    if x >= 2.0 {
        let limit = x.floor() as u64;
        form.table.ensure_covers(limit)?;
        let sieve = sieve_primes(limit)?;
        let degree = form.descriptor.degree;
        for &p in sieve.primes() {
            let pf = p as f64;
            if pf > x {
                break;
            }
            if matches!(variant, PSeriesVariant::PrimesOnly) {
                let lam = form.table.value(p);
                if lam != 0.0 {
                    value += lam * (-s * pf.ln()).exp();
                    term_count += 1;
                }
                continue;
            }
            let k_max = (x.ln() / pf.ln()).floor() as usize;
            let sums = local_power_sums(degree, form.table.value(p), k_max);
            let mut pk = pf;
            for (k, s_k) in sums.iter().enumerate() {
                let k = k + 1;
                let in_range = match variant {
                    PSeriesVariant::Full => pk <= x,
                    PSeriesVariant::Low => pk <= sched.y,
                    PSeriesVariant::High => pk > sched.y && pk <= x,
                    PSeriesVariant::PrimesOnly => unreachable!(),
                };
                // Lambda_f(p^k)/(p^{ks} k log p) with Lambda_f = s_k log p.
                if in_range && *s_k != 0.0 {
                    value += s_k / k as f64 * (-s * pk.ln()).exp();
                    term_count += 1;
                }
                pk *= pf;
                if pk > x {
                    break;
                }
            }
        }
    }
    Ok(PolyValue {
        s,
        value,
        term_count,
    })
}

/// Diagonal prime sum S = sum_{p <= x} lambda(1,p)^2 p^{-2 sigma}: the
/// finite-size variance scale behind every Gaussian prediction here.
pub fn diagonal_prime_sum(form: &Form, x: f64, sigma: f64) -> Result<f64> {
    joint_diagonal_prime_sum(form, form, 1.0, 0.0, x, sigma)
}

/// Joint version with psi(p) = a1 lambda_1(p) + a2 lambda_2(p) in place of
/// lambda(1,p).
pub fn joint_diagonal_prime_sum(
    form1: &Form,
    form2: &Form,
    a1: f64,
    a2: f64,
    x: f64,
    sigma: f64,
) -> Result<f64> {
    if x < 2.0 {
        return Ok(0.0);
    }
    let limit = x.floor() as u64;
    form1.table.ensure_covers(limit)?;
    form2.table.ensure_covers(limit)?;
    let sieve = sieve_primes(limit)?;
    let mut acc = 0.0;
    for &p in sieve.primes() {
        let psi = a1 * form1.table.value(p) + a2 * form2.table.value(p);
        acc += psi * psi * (p as f64).powf(-2.0 * sigma);
    }
    Ok(acc)
}

/// Which admissibility predicate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AVariant {
    /// Both conditions plus "no factor beyond X".
    A,
    /// At most K1 prime factors (with multiplicity), all p <= Y.
    A1,
    /// At most K2 prime factors (with multiplicity), all Y < p <= X.
    A2,
}

fn trial_factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut pairs = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            pairs.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        pairs.push((n, 1));
    }
    pairs
}

/// Indicator of the mollifier-support condition: a1 constrains the Y-smooth
/// part (all p <= Y, at most K1 factors with multiplicity), a2 the rough
/// part (all Y < p <= X, at most K2 factors), and a requires both after
/// splitting n into smooth and rough parts (any factor beyond X fails).
pub fn a_predicate(n: u64, sched: &ParameterSchedule, variant: AVariant) -> u8 {
    assert!(n >= 1, "a predicate needs n >= 1");
    let mut smooth_count = 0u64;
    let mut rough_count = 0u64;
    for (p, e) in trial_factorize(n) {
        let pf = p as f64;
        if pf <= sched.y {
            smooth_count += e as u64;
        } else if pf <= sched.x {
            rough_count += e as u64;
        } else {
            return 0;
        }
    }
    let a1 = smooth_count as f64 <= sched.k1 && rough_count == 0;
    let a2 = rough_count as f64 <= sched.k2 && smooth_count == 0;
    let a = smooth_count as f64 <= sched.k1 && rough_count as f64 <= sched.k2;
    u8::from(match variant {
        AVariant::A => a,
        AVariant::A1 => a1,
        AVariant::A2 => a2,
    })
}

/// Which mollifier factor to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierVariant {
    /// Full mollifier: squarefree n with <= K1 smooth and <= K2 rough factors.
    M,
    /// Smooth factor: primes p <= Y, at most K1 of them.
    M1,
    /// Rough factor: primes Y < p <= X, at most K2 of them.
    M2,
}

/// Depth-first sum over squarefree subsets of `factors` of size <= k_max:
/// returns (sum of products, count of nonzero products including the empty
/// product). `budget` aborts cleanly when the subset tree exceeds the cap.
fn subset_sum(
    factors: &[Complex64],
    k_max: usize,
    budget: &mut u64,
) -> Result<(Complex64, u64)> {
    fn rec(
        factors: &[Complex64],
        start: usize,
        depth_left: usize,
        prefix: Complex64,
        acc: &mut Complex64,
        count: &mut u64,
        budget: &mut u64,
    ) -> Result<()> {
        if *budget == 0 {
            return Err(Error::ResourceLimit(
                "mollifier support enumeration exceeded its cap".to_string(),
            ));
        }
        *budget -= 1;
        *acc += prefix;
        if prefix.norm_sqr() != 0.0 {
            *count += 1;
        }
        if depth_left == 0 {
            return Ok(());
        }
        for i in start..factors.len() {
            rec(
                factors,
                i + 1,
                depth_left - 1,
                prefix * factors[i],
                acc,
                count,
                budget,
            )?;
        }
        Ok(())
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    rec(
        factors,
        0,
        k_max.min(factors.len()),
        Complex64::new(1.0, 0.0),
        &mut acc,
        &mut count,
        budget,
    )?;
    Ok((acc, count))
}

/// Sum over subsets of size <= k_max via elementary symmetric polynomials
/// e_k computed from power sums by Newton's identities: identical to
/// `subset_sum` but O(k_max * #factors). The count is the number of nonzero
/// e_k stage values (per-subset accounting is unavailable on this path).
fn symmetric_sum(factors: &[Complex64], k_max: usize) -> (Complex64, u64) {
    let k_max = k_max.min(factors.len());
    let power_sums: Vec<Complex64> = (1..=k_max)
        .map(|j| factors.iter().map(|x| x.powi(j as i32)).sum())
        .collect();
    let mut e = vec![Complex64::new(0.0, 0.0); k_max + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=k_max {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sign = 1.0;
        for j in 1..=k {
            acc += sign * e[k - j] * power_sums[j - 1];
            sign = -sign;
        }
        e[k] = acc / k as f64;
    }
    let value = e.iter().sum();
    let count = e.iter().filter(|v| v.norm_sqr() != 0.0).count() as u64;
    (value, count)
}

/// Number of subsets of size <= k from m elements, saturating.
fn subset_count_estimate(m: usize, k: usize) -> f64 {
    let mut total = 0.0f64;
    let mut binom = 1.0f64;
    for j in 0..=k.min(m) {
        if j > 0 {
            binom *= (m - j + 1) as f64 / j as f64;
        }
        total += binom;
        if total > 1e18 {
            return f64::INFINITY;
        }
    }
    total
}

fn mollifier_factor_terms(
    form: &Form,
    s: Complex64,
    primes: &[u64],
) -> Vec<Complex64> {
    primes
        .iter()
        .map(|&p| -form.table.value(p) * (-s * (p as f64).ln()).exp())
        .collect()
}

/// M(f,s) = sum_n mu(n) a(n) lambda(1,n) n^{-s}: squarefree products of
/// admissible primes, each contributing prod_p (-lambda(p) p^{-s}).
/// Small supports are enumerated depth-first (exact term accounting);
/// supports past the cap are evaluated by the symmetric-function identity,
/// which sums the same products without walking them.
pub fn mollifier(
    form: &Form,
    s: Complex64,
    sched: &ParameterSchedule,
    variant: MollifierVariant,
) -> Result<PolyValue> {
    let x_limit = sched.x.floor() as u64;
    if sched.x >= 2.0 {
        form.table.ensure_covers(x_limit)?;
    }
    let sieve = sieve_primes(x_limit.max(2))?;
    let smooth: Vec<u64> = sieve
        .primes()
        .iter()
        .copied()
        .filter(|&p| p as f64 <= sched.y)
        .collect();
    let rough: Vec<u64> = sieve
        .primes()
        .iter()
        .copied()
        .filter(|&p| {
            let pf = p as f64;
            pf > sched.y && pf <= sched.x
        })
        .collect();
    let k1 = sched.k1.max(0.0).floor() as usize;
    let k2 = sched.k2.max(0.0).floor() as usize;

    let eval_group = |primes: &[u64], k_max: usize| -> Result<(Complex64, u64)> {
        let factors = mollifier_factor_terms(form, s, primes);
        if subset_count_estimate(primes.len(), k_max) <= MOLLIFIER_ENUMERATION_CAP as f64 {
            let mut budget = MOLLIFIER_ENUMERATION_CAP;
            subset_sum(&factors, k_max, &mut budget)
        } else {
            Ok(symmetric_sum(&factors, k_max))
        }
    };

    let (value, term_count) = match variant {
        MollifierVariant::M1 => eval_group(&smooth, k1)?,
        MollifierVariant::M2 => eval_group(&rough, k2)?,
        MollifierVariant::M => {
            let est = subset_count_estimate(smooth.len(), k1)
                * subset_count_estimate(rough.len(), k2);
            if est <= MOLLIFIER_ENUMERATION_CAP as f64 {
                // Joint enumeration: every admissible n, counted directly.
                let sf = mollifier_factor_terms(form, s, &smooth);
                let rf = mollifier_factor_terms(form, s, &rough);
                let mut budget = MOLLIFIER_ENUMERATION_CAP;
                let mut total = Complex64::new(0.0, 0.0);
                let mut count = 0u64;
                // Enumerate smooth subsets explicitly; each multiplies the
                // whole rough-subset sum tree.
                fn rec(
                    sf: &[Complex64],
                    rf: &[Complex64],
                    start: usize,
                    depth_left: usize,
                    prefix: Complex64,
                    k2: usize,
                    total: &mut Complex64,
                    count: &mut u64,
                    budget: &mut u64,
                ) -> Result<()> {
                    let (rv, rc) = {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let mut c = 0u64;
                        rec_rough(rf, 0, k2, prefix, &mut acc, &mut c, budget)?;
                        (acc, c)
                    };
                    *total += rv;
                    *count += rc;
                    if depth_left == 0 {
                        return Ok(());
                    }
                    for i in start..sf.len() {
                        rec(
                            sf,
                            rf,
                            i + 1,
                            depth_left - 1,
                            prefix * sf[i],
                            k2,
                            total,
                            count,
                            budget,
                        )?;
                    }
                    Ok(())
                }
                fn rec_rough(
                    rf: &[Complex64],
                    start: usize,
                    depth_left: usize,
                    prefix: Complex64,
                    acc: &mut Complex64,
                    count: &mut u64,
                    budget: &mut u64,
                ) -> Result<()> {
                    if *budget == 0 {
                        return Err(Error::ResourceLimit(
                            "mollifier support enumeration exceeded its cap".to_string(),
                        ));
                    }
                    *budget -= 1;
                    *acc += prefix;
                    if prefix.norm_sqr() != 0.0 {
                        *count += 1;
                    }
                    if depth_left == 0 {
                        return Ok(());
                    }
                    for i in start..rf.len() {
                        rec_rough(rf, i + 1, depth_left - 1, prefix * rf[i], acc, count, budget)?;
                    }
                    Ok(())
                }
                rec(
                    &sf,
                    &rf,
                    0,
                    k1.min(sf.len()),
                    Complex64::new(1.0, 0.0),
                    k2,
                    &mut total,
                    &mut count,
                    &mut budget,
                )?;
                (total, count)
            } else {
                let (v1, c1) = eval_group(&smooth, k1)?;
                let (v2, c2) = eval_group(&rough, k2)?;
                (v1 * v2, c1.saturating_mul(c2))
            }
        }
    };
    Ok(PolyValue {
        s,
        value,
        term_count,
    })
}

/// Which truncated exponential to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptMVariant {
    /// Truncation at K1 applied to P1.
    One,
    /// Truncation at K2 applied to P2.
    Two,
}

/// Truncated exponential of -P_v: sum_{k <= K_v} (-1)^k P_v(s)^k / k!.
pub fn script_m(
    form: &Form,
    s: Complex64,
    sched: &ParameterSchedule,
    variant: ScriptMVariant,
) -> Result<PolyValue> {
    let (p, k_cap) = match variant {
        ScriptMVariant::One => (
            p_series(form, s, sched, PSeriesVariant::Low)?,
            sched.k1.max(0.0).floor() as u64,
        ),
        ScriptMVariant::Two => (
            p_series(form, s, sched, PSeriesVariant::High)?,
            sched.k2.max(0.0).floor() as u64,
        ),
    };
    let mut term = Complex64::new(1.0, 0.0);
    let mut value = term;
    let mut term_count = 1u64;
    for k in 1..=k_cap {
        term *= -p.value / k as f64;
        if term.norm_sqr() != 0.0 {
            term_count += 1;
        }
        value += term;
    }
    Ok(PolyValue {
        s,
        value,
        term_count,
    })
}

/// Certifies |e^z - sum_{j <= 100K} z^j/j!| <= e^{-99K} for |z| <= K. The
/// difference is far below double precision, so the error is reported as
/// the term-magnitude tail majorant
/// |z|^{N+1}/(N+1)! * 1/(1 - |z|/(N+2)), N = floor(100K), evaluated in log
/// space. Returns (error, bound); both may underflow to subnormal/zero,
/// the comparison is done on logarithms.
pub fn truncated_exp_check(k: f64, z: Complex64) -> Result<(f64, f64)> {
    if !(k >= 1.0) {
        return Err(Error::InvalidArgument(format!("K = {k} must be at least 1")));
    }
    let r = z.norm();
    if r > k {
        return Err(Error::InvalidArgument(format!(
            "|z| = {r} exceeds K = {k}: truncation bound needs |z| <= K"
        )));
    }
    let n = (100.0 * k).floor();
    let ln_bound = -99.0 * k;
    let ln_error = if r == 0.0 {
        f64::NEG_INFINITY
    } else {
        (n + 1.0) * r.ln() - statrs::function::gamma::ln_gamma(n + 2.0)
            - (1.0 - r / (n + 2.0)).ln()
    };
    let tol = 1e-9f64;
    if ln_error > ln_bound + tol.ln_1p() {
        return Err(Error::Precision(format!(
            "truncated exponential tail ln {ln_error:.3} exceeds ln bound {ln_bound:.3}"
        )));
    }
    Ok((ln_error.exp(), ln_bound.exp() * (1.0 + tol)))
}
