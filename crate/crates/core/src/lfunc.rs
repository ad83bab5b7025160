//! Gamma factors, the AFE smoothing function V, and evaluation of L(f, s)
//! on and near the critical line.
//!
//! The completed function is Lambda(f,s) = G(f,s) L(f,s) with
//! G(f,s) = prod_i pi^{-s/2} Gamma((s - alpha_i)/2). L is computed by a
//! smoothed, balanced approximate functional equation
//!
//!   L(s) = sum_n lambda(n) n^{-s} W1(n) + kappa sum_n lambda(n) n^{s-1} W2(n),
//!
//! where W1, W2 are contour integrals of damped gamma-factor ratios
//! (W1 at base point s, W2 at 1-s with the dual form's shifts), and
//! kappa = G(dual, 1-s)/G(f, s). Both sums decay superpolynomially past
//! sqrt(analytic conductor), so lengths scale like the conductor's square
//! root times a slowly growing tolerance factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{Form, FormDescriptor};

/// Damping exponent A in the e^{A u^2} convergence factor of the contour
/// integrals. Larger A truncates the contour sooner but amplifies
/// cancellation when the contour sits right of the pole at u = 0; A = 1/4
/// keeps the worst-case integrand/result ratio below ~1e3 for degree 3.
const QUADRATIC_DAMPING: f64 = 0.25;

/// Contour abscissa for the decaying branch (y above the balance scale).
const RIGHT_CONTOUR: f64 = 3.0;

/// Contour abscissa for the small-y branch; the integral picks up the
/// residue 1 at u = 0 and the remaining contour contributes O(y^{0.3}).
const LEFT_CONTOUR: f64 = -0.3;

/// Empirical prefactor in the series-length tail model; validated by the
/// length-robustness tests (doubling the length must not move results).
const LENGTH_CALIBRATION: f64 = 40.0;

/// |L| values below this floor are clamped before logs and flagged.
pub const NEAR_ZERO_FLOOR: f64 = 1e-300;

/// Spacing of the ln-y interpolation grid for the smoothing kernels.
const GRID_SPACING: f64 = 0.01;

/// Numerical evaluation parameters shared by the V-integrals and the AFE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Multiplies the natural AFE length (>= 1).
    pub series_cutoff_multiplier: f64,
    /// Vertical step of the trapezoid rule on the contour.
    pub quadrature_step: f64,
    /// Truncation height of the contour.
    pub quadrature_height: f64,
    /// Target relative accuracy for evaluated values.
    pub target_rel_error: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        // Height 24 keeps the damped edge weight negligible even for
        // degree 3 at conductor scales ~1e4: the e^{A(c^2-H^2)} falloff must
        // beat both the gamma-ratio growth e^{(pi deg/4)H} and the
        // conductor factor q^{c/2} on the decaying contour.
        EvalConfig {
            series_cutoff_multiplier: 1.0,
            quadrature_step: 0.0625,
            quadrature_height: 24.0,
            target_rel_error: 1e-6,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.series_cutoff_multiplier >= 1.0) {
            bad.push(format!(
                "series_cutoff_multiplier = {} must be >= 1",
                self.series_cutoff_multiplier
            ));
        }
        if !(self.quadrature_step > 0.0) {
            bad.push(format!(
                "quadrature_step = {} must be positive",
                self.quadrature_step
            ));
        }
        if !(self.quadrature_height >= 10.0 * self.quadrature_step) {
            bad.push(format!(
                "quadrature_height = {} must be at least 10 * quadrature_step = {}",
                self.quadrature_height,
                10.0 * self.quadrature_step
            ));
        }
        if !(self.target_rel_error > 1e-14 && self.target_rel_error < 1e-2) {
            bad.push(format!(
                "target_rel_error = {} must lie in (1e-14, 1e-2)",
                self.target_rel_error
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

/// Value of the completed function and its factors at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedValue {
    pub s: Complex64,
    /// log G(f,s).
    pub log_g: Complex64,
    pub l: Complex64,
    /// exp(log_g) * l; underflows to 0 at large |Im s| where |G| is tiny.
    pub lambda: Complex64,
}

// Stirling coefficients B_{2k} / (2k (2k-1)) for k = 1..12.
const STIRLING_COEFFS: [f64; 12] = [
    8.333333333333333e-2,
    -2.777777777777778e-3,
    7.936507936507937e-4,
    -5.952380952380953e-4,
    8.417508417508417e-4,
    -1.9175269175269176e-3,
    6.41025641025641e-3,
    -2.9550653594771242e-2,
    1.7964437236883057e-1,
    -1.3924322169059011,
    1.3402864044168492e1,
    -1.5684828462600202e2,
];

/// Principal-branch log Gamma, absolute error below 1e-12 for Re z >= 0.5;
/// extended left by downward recurrence (analytic in each half-plane; the
/// negative real axis is a branch cut).
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.re <= 0.5 && z.im.abs() < 1e-9 {
        let nearest = z.re.round();
        if nearest <= 0.0 && (z.re - nearest).abs() < 1e-9 {
            return Err(Error::Domain(format!(
                "log_gamma pole at z = {z} (nonpositive integer)"
            )));
        }
    }
    // Shift upward until Stirling converges, then subtract the logs back.
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 12.0 && w.norm() < 12.0 {
        shift += w.ln();
        w += 1.0;
    }
    let lw = w.ln();
    let mut series = Complex64::new(0.0, 0.0);
    let inv2 = 1.0 / (w * w);
    let mut power = 1.0 / w;
    for c in STIRLING_COEFFS {
        series += c * power;
        power *= inv2;
    }
    let half_log_2pi = 0.9189385332046727;
    Ok((w - 0.5) * lw - w + half_log_2pi + series - shift)
}

fn log_gamma_product(arch_params: &[Complex64], s: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, alpha) in arch_params.iter().enumerate() {
        let arg = (s - alpha) / 2.0;
        acc += log_gamma_complex(arg).map_err(|_| {
            Error::Domain(format!(
                "gamma factor pole: shift {i} (alpha = {alpha}) at s = {s}"
            ))
        })?;
    }
    Ok(acc)
}

fn log_g(arch_params: &[Complex64], s: Complex64) -> Result<Complex64> {
    let pi_part = -(s / 2.0) * std::f64::consts::PI.ln() * arch_params.len() as f64;
    Ok(pi_part + log_gamma_product(arch_params, s)?)
}

/// log G(f,s) = sum_i [ -(s/2) log pi + log Gamma((s - alpha_i)/2) ].
pub fn gamma_factor(form: &FormDescriptor, s: Complex64) -> Result<Complex64> {
    form.validate()?;
    log_g(&form.arch_params, s)
}

/// Compares |log|gamma-part ratio|| between sigma + iy and 1/2 + iy against
/// the first-order prediction (sigma - 1/2) log y. The pi^{-s/2} prefactors
/// are omitted from the left side: they contribute a y-independent drift
/// that the log y model does not describe.
pub fn stirling_ratio_check(form: &FormDescriptor, sigma: f64, y: f64) -> Result<(f64, f64)> {
    form.validate()?;
    if y < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "stirling check needs y >= 100 (asymptotic regime), got {y}"
        )));
    }
    if !(0.5..=1.0).contains(&sigma) {
        return Err(Error::InvalidArgument(format!(
            "stirling check needs 1/2 <= sigma <= 1, got {sigma}"
        )));
    }
    let at = |sig: f64| log_gamma_product(&form.arch_params, Complex64::new(sig, y));
    let lhs = (at(sigma)?.re - at(0.5)?.re).abs();
    let rhs = (sigma - 0.5) * y.ln();
    Ok((lhs, rhs))
}

/// prod_i max(|s - alpha_i|, 1/2) / (2 pi): the analytic-conductor scale
/// whose square root balances the two AFE sums.
fn analytic_conductor(arch_params: &[Complex64], s: Complex64) -> f64 {
    arch_params
        .iter()
        .map(|alpha| (s - alpha).norm().max(0.5) / (2.0 * std::f64::consts::PI))
        .product()
}

/// Trapezoid discretization of (1/2 pi i) int y^{-u} e^{A u^2}
/// (G(b+u)/G(b)) du/u on the vertical line Re u = contour. Weights fold in
/// everything except the y-dependent factor y^{-u}, so each evaluation is a
/// single phase-recurrence pass over the nodes.
struct VKernel {
    contour: f64,
    step: f64,
    /// 1 when the contour lies left of the pole at u = 0 and the residue
    /// there (equal to 1) must be added.
    pole_term: f64,
    /// w_k = (step / 2 pi) e^{A u_k^2} R(u_k) / u_k, k = -K..K.
    weights: Vec<Complex64>,
    /// Absolute truncation-error estimate, uniform in y after the y^{-c}
    /// prefactor is applied.
    tail_estimate: f64,
}

impl VKernel {
    fn build(
        arch_params: &[Complex64],
        base: Complex64,
        contour: f64,
        cfg: &EvalConfig,
    ) -> Result<VKernel> {
        let log_g_base = log_g(arch_params, base)?;
        let h = cfg.quadrature_step;
        let k_max = (cfg.quadrature_height / h).ceil() as i64;
        let mut weights = Vec::with_capacity((2 * k_max + 1) as usize);
        for k in -k_max..=k_max {
            let u = Complex64::new(contour, k as f64 * h);
            let ratio = (log_g(arch_params, base + u)? - log_g_base
                + QUADRATIC_DAMPING * u * u)
                .exp();
            weights.push(h / (2.0 * std::f64::consts::PI) * ratio / u);
        }
        // Past the truncation height the integrand decays at rate at least
        // 2 A H - (pi deg / 4) (gamma-ratio growth along the contour);
        // a nonpositive rate means the tail never converges at this height.
        let decay_rate = 2.0 * QUADRATIC_DAMPING * cfg.quadrature_height
            - std::f64::consts::FRAC_PI_4 * arch_params.len() as f64;
        if decay_rate <= 0.0 {
            return Err(Error::Precision(format!(
                "quadrature height {} too small for degree {}: contour tail does not decay",
                cfg.quadrature_height,
                arch_params.len()
            )));
        }
        let edge = (weights[0].norm() + weights[weights.len() - 1].norm()) / h;
        let tail_estimate = edge / decay_rate;
        if tail_estimate > cfg.target_rel_error {
            return Err(Error::Precision(format!(
                "contour tail estimate {tail_estimate:.3e} exceeds target {:.3e}; \
                 raise quadrature_height",
                cfg.target_rel_error
            )));
        }
        Ok(VKernel {
            contour,
            step: h,
            pole_term: if contour < 0.0 { 1.0 } else { 0.0 },
            weights,
            tail_estimate,
        })
    }

    /// Kernel value at y = exp(ln_y).
    fn eval(&self, ln_y: f64) -> Complex64 {
        let k_max = (self.weights.len() as i64 - 1) / 2;
        // y^{-u_k} = y^{-c} e^{-i k h ln y}: run the phase recurrence from
        // k = -K upward.
        let rot = Complex64::from_polar(1.0, -self.step * ln_y);
        let mut phase = Complex64::from_polar(1.0, self.step * ln_y * k_max as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &self.weights {
            acc += w * phase;
            phase *= rot;
        }
        self.pole_term + (-self.contour * ln_y).exp() * acc
    }

    /// Absolute error bound of `eval` at this y.
    fn error_at(&self, ln_y: f64) -> f64 {
        (-self.contour * ln_y).exp() * self.tail_estimate
    }
}

/// Two-branch kernel: the defining contour Re u = 3 where the integral
/// decays, shifted left across the pole (collecting its residue 1) where
/// y is far below the balance scale and the right contour would cancel
/// catastrophically.
struct SmoothingKernel {
    right: VKernel,
    left: Option<VKernel>,
    /// Branch switch: y below this uses the left contour.
    y_switch: f64,
}

impl SmoothingKernel {
    fn build(
        arch_params: &[Complex64],
        base: Complex64,
        min_y: f64,
        cfg: &EvalConfig,
    ) -> Result<SmoothingKernel> {
        let y_switch = analytic_conductor(arch_params, base).sqrt() / 10.0;
        let right = VKernel::build(arch_params, base, RIGHT_CONTOUR, cfg)?;
        let left = if min_y < y_switch {
            Some(VKernel::build(arch_params, base, LEFT_CONTOUR, cfg)?)
        } else {
            None
        };
        Ok(SmoothingKernel {
            right,
            left,
            y_switch,
        })
    }

    fn eval(&self, ln_y: f64) -> Complex64 {
        match &self.left {
            Some(left) if ln_y < self.y_switch.ln() => left.eval(ln_y),
            _ => self.right.eval(ln_y),
        }
    }

    fn error_at(&self, ln_y: f64) -> f64 {
        match &self.left {
            Some(left) if ln_y < self.y_switch.ln() => left.error_at(ln_y),
            _ => self.right.error_at(ln_y),
        }
    }
}

/// Smoothing kernel sampled on a uniform ln-y grid with 4-point cubic
/// interpolation; grid spacing 0.01 keeps interpolation error near 1e-9.
struct KernelGrid {
    x0: f64,
    values: Vec<Complex64>,
}

impl KernelGrid {
    fn build(kernel: &SmoothingKernel, ln_min: f64, ln_max: f64) -> KernelGrid {
        let x0 = ln_min - 2.0 * GRID_SPACING;
        let count = ((ln_max - x0) / GRID_SPACING).ceil() as usize + 4;
        let values = (0..count)
            .map(|j| kernel.eval(x0 + j as f64 * GRID_SPACING))
            .collect();
        KernelGrid { x0, values }
    }

    fn eval(&self, ln_y: f64) -> Complex64 {
        let pos = (ln_y - self.x0) / GRID_SPACING;
        let j = (pos.floor() as usize).clamp(1, self.values.len() - 3);
        let t = pos - j as f64;
        // Lagrange cubic on the stencil j-1..j+2.
        let wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        self.values[j - 1] * wm1 + self.values[j] * w0 + self.values[j + 1] * w1
            + self.values[j + 2] * w2
    }
}

/// V(f, s, y) = the smoothed cutoff weight attached to n/X at balance point
/// X = sqrt(analytic conductor): V -> 1 as y -> 0 and decays
/// superpolynomially once y exceeds ~1.
pub fn v_smoothing(
    form: &FormDescriptor,
    s: Complex64,
    y: f64,
    cfg: &EvalConfig,
) -> Result<Complex64> {
    form.validate()?;
    cfg.validate()?;
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("y = {y} must be positive")));
    }
    let x0 = analytic_conductor(&form.arch_params, s).sqrt();
    let arg = y * x0;
    let kernel = SmoothingKernel::build(&form.arch_params, s, arg, cfg)?;
    let ln_arg = arg.ln();
    let err = kernel.error_at(ln_arg);
    if err > cfg.target_rel_error {
        return Err(Error::Precision(format!(
            "smoothing-integral error estimate {err:.3e} exceeds target {:.3e} at y = {y}",
            cfg.target_rel_error
        )));
    }
    Ok(kernel.eval(ln_arg))
}

/// Series length: the smoothed tail past n = m X0 scales like
/// exp(-(ln m)^2 / 4A) n^{1-sigma}, so (ln m)^2 - (1-sigma) ln m =
/// ln(C X0^{1-sigma} / eps) determines m.
fn series_length(x0: f64, sigma: f64, cfg: &EvalConfig) -> u64 {
    let a = 4.0 * QUADRATIC_DAMPING;
    let rhs = ((LENGTH_CALIBRATION / cfg.target_rel_error).ln()
        + (1.0 - sigma) * x0.max(1.0).ln())
    .max(2.0)
        * a;
    let b = (1.0 - sigma).max(0.0);
    let lam = 0.5 * (b + (b * b + 4.0 * rhs).sqrt());
    let n = (cfg.series_cutoff_multiplier * lam.exp() * x0).ceil();
    (n as u64).max(16)
}

/// Coefficient-table length needed by `afe_eval` at this point.
pub fn afe_required_length(form: &FormDescriptor, s: Complex64, cfg: &EvalConfig) -> Result<u64> {
    form.validate()?;
    cfg.validate()?;
    let dual = form.dual_arch_params();
    let mirror = Complex64::new(1.0, 0.0) - s;
    let n1 = series_length(
        analytic_conductor(&form.arch_params, s).sqrt(),
        s.re,
        cfg,
    );
    let n2 = series_length(analytic_conductor(&dual, mirror).sqrt(), 1.0 - s.re, cfg);
    Ok(n1.max(n2))
}

struct AfeOutcome {
    value: CompletedValue,
    log_lambda: Complex64,
}

/// Core AFE evaluation; assumes the domain checks of the public entry
/// points (accepts any s where the gamma data is pole-free).
fn afe_core(form: &Form, s: Complex64, cfg: &EvalConfig) -> Result<AfeOutcome> {
    let desc = &form.descriptor;
    let dual = desc.dual_arch_params();
    let mirror = Complex64::new(1.0, 0.0) - s;
    let sigma = s.re;

    let x1 = analytic_conductor(&desc.arch_params, s).sqrt();
    let x2 = analytic_conductor(&dual, mirror).sqrt();
    let n1 = series_length(x1, sigma, cfg);
    let n2 = series_length(x2, 1.0 - sigma, cfg);
    form.table.ensure_covers(n1.max(n2))?;

    let log_g_s = log_g(&desc.arch_params, s)?;
    let log_g_mirror = log_g(&dual, mirror)?;
    let kappa = (log_g_mirror - log_g_s).exp();

    let kernel1 = SmoothingKernel::build(&desc.arch_params, s, 1.0, cfg)?;
    let kernel2 = SmoothingKernel::build(&dual, mirror, 1.0, cfg)?;
    let grid1 = KernelGrid::build(&kernel1, 0.0, (n1 as f64).ln());
    let grid2 = KernelGrid::build(&kernel2, 0.0, (n2 as f64).ln());
    for (kernel, n) in [(&kernel1, n1), (&kernel2, n2)] {
        let worst = kernel.error_at(0.0).max(kernel.error_at((n as f64).ln()));
        if worst > cfg.target_rel_error {
            return Err(Error::Precision(format!(
                "smoothing-integral error estimate {worst:.3e} exceeds target {:.3e}",
                cfg.target_rel_error
            )));
        }
    }

    let values = form.table.values();
    let mut sum1 = Complex64::new(0.0, 0.0);
    for n in 1..=n1 {
        let lam = values[n as usize];
        if lam == 0.0 {
            continue;
        }
        let x = (n as f64).ln();
        let (sin_t, cos_t) = (s.im * x).sin_cos();
        let scale = lam * (-sigma * x).exp();
        sum1 += Complex64::new(scale * cos_t, -scale * sin_t) * grid1.eval(x);
    }
    let mut sum2 = Complex64::new(0.0, 0.0);
    for n in 1..=n2 {
        let lam = values[n as usize];
        if lam == 0.0 {
            continue;
        }
        let x = (n as f64).ln();
        // n^{s-1} = exp((sigma-1) x) e^{i t x}.
        let (sin_t, cos_t) = (s.im * x).sin_cos();
        let scale = lam * ((sigma - 1.0) * x).exp();
        sum2 += Complex64::new(scale * cos_t, scale * sin_t) * grid2.eval(x);
    }

    let l = sum1 + kappa * sum2;
    let guarded = if l.norm() < NEAR_ZERO_FLOOR {
        NEAR_ZERO_FLOOR
    } else {
        l.norm()
    };
    let log_lambda = log_g_s + Complex64::new(guarded.ln(), l.arg());
    Ok(AfeOutcome {
        value: CompletedValue {
            s,
            log_g: log_g_s,
            l,
            lambda: log_g_s.exp() * l,
        },
        log_lambda,
    })
}

fn validate_afe_domain(s: Complex64) -> Result<()> {
    if !(0.5..=3.0).contains(&s.re) {
        return Err(Error::InvalidArgument(format!(
            "afe_eval needs 1/2 <= Re s <= 3, got {}",
            s.re
        )));
    }
    if s.re <= 1.0 && s.im.abs() < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "afe_eval needs |Im s| >= 2 in the critical strip, got s = {s}"
        )));
    }
    Ok(())
}

/// Evaluates L, G and Lambda at s via the smoothed AFE. Valid for
/// 1/2 <= Re s <= 1 with |Im s| >= 2, and in the absolutely convergent
/// extension Re s in (1, 3] at any height.
pub fn afe_eval(form: &Form, s: Complex64, cfg: &EvalConfig) -> Result<CompletedValue> {
    cfg.validate()?;
    validate_afe_domain(s)?;
    Ok(afe_core(form, s, cfg)?.value)
}

/// Partial sum sum_{n <= N} lambda(n) n^{-s}.
pub fn dirichlet_eval(form: &Form, s: Complex64, n_terms: u64) -> Result<Complex64> {
    if n_terms < 1 {
        return Err(Error::InvalidArgument(
            "dirichlet_eval needs at least one term".to_string(),
        ));
    }
    form.table.ensure_covers(n_terms)?;
    let values = form.table.values();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=n_terms {
        let lam = values[n as usize];
        if lam == 0.0 {
            continue;
        }
        let x = (n as f64).ln();
        let (sin_t, cos_t) = (s.im * x).sin_cos();
        let scale = lam * (-s.re * x).exp();
        acc += Complex64::new(scale * cos_t, -scale * sin_t);
    }
    Ok(acc)
}

/// |Lambda(s) - Lambda(1-s)| / max(|Lambda(s)|, floor), with the common
/// exponential scale factored out so the ratio survives the underflow of
/// |G| at large heights. Small values certify evaluator consistency with
/// the functional equation.
pub fn functional_equation_residual(form: &Form, s: Complex64, cfg: &EvalConfig) -> Result<f64> {
    cfg.validate()?;
    if !form.descriptor.self_dual {
        return Err(Error::InvalidArgument(format!(
            "functional-equation check needs a self-dual form, got {}",
            form.descriptor.id
        )));
    }
    let mirror = Complex64::new(1.0, 0.0) - s;
    let a = afe_core(form, s, cfg)?.log_lambda;
    let b = afe_core(form, mirror, cfg)?.log_lambda;
    let scale = a.re.max(b.re);
    let va = (a - scale).exp();
    let vb = (b - scale).exp();
    Ok((va - vb).norm() / va.norm().max(NEAR_ZERO_FLOOR))
}

/// ln |L| with the near-zero floor applied; the flag marks a floored
/// (excluded) sample.
pub fn log_abs_l(form: &Form, sigma: f64, t: f64, cfg: &EvalConfig) -> Result<(f64, bool)> {
    cfg.validate()?;
    let s = Complex64::new(sigma, t);
    validate_afe_domain(s)?;
    let value = afe_core(form, s, cfg)?.value;
    Ok(floored_log_abs(value.l.norm()))
}

/// (ln max(x, floor), flagged): shared floor semantics for |L| logs.
pub fn floored_log_abs(x: f64) -> (f64, bool) {
    if x < NEAR_ZERO_FLOOR {
        (NEAR_ZERO_FLOOR.ln(), true)
    } else {
        (x.ln(), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{
        builtin_descriptor, delta_coefficients, satake_random_form, sym_square_lift,
        CoefficientTable,
    };
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn delta_form_200k() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| Form::builtin("delta", 200_000).unwrap())
    }

    fn delta_form_1m() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| Form::builtin("delta", 1_000_000).unwrap())
    }

    fn sym2_form_320k() -> &'static Form {
        static FORM: OnceLock<Form> = OnceLock::new();
        FORM.get_or_init(|| {
            let gl2 = delta_coefficients(320_000).unwrap();
            Form::new(
                builtin_descriptor("sym2-delta").unwrap(),
                sym_square_lift(&gl2, 320_000).unwrap(),
            )
            .unwrap()
        })
    }

    #[test]
    fn log_gamma_known_real_values() {
        let z = |x: f64| Complex64::new(x, 0.0);
        assert!(log_gamma_complex(z(1.0)).unwrap().norm() < 1e-13);
        assert!(log_gamma_complex(z(2.0)).unwrap().norm() < 1e-13);
        assert_relative_eq!(
            log_gamma_complex(z(0.5)).unwrap().re,
            std::f64::consts::PI.sqrt().ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_gamma_complex(z(5.0)).unwrap().re,
            24.0f64.ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_gamma_complex(z(0.25)).unwrap().re,
            3.6256099082219083f64.ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn log_gamma_rejects_poles() {
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert!(matches!(
                log_gamma_complex(Complex64::new(x, 0.0)),
                Err(Error::Domain(_))
            ));
        }
        assert!(log_gamma_complex(Complex64::new(-2.5, 0.0)).is_ok());
    }

    #[test]
    fn log_gamma_critical_line_modulus_closed_form() {
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t).
        for &t in &[1.0, 10.0, 50.0] {
            let lg = log_gamma_complex(Complex64::new(0.5, t)).unwrap();
            let expected = 0.5
                * (std::f64::consts::PI.ln()
                    - (std::f64::consts::PI * t + (0.5 * (1.0 + (-2.0 * std::f64::consts::PI * t).exp())).ln()))
                    ;
            // ln cosh x = x + ln((1 + e^{-2x})/2).
            assert_relative_eq!(lg.re, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_gamma_imaginary_axis_modulus_closed_form() {
        // |Gamma(it)|^2 = pi / (t sinh(pi t)); exercises the Re z < 1/2 path.
        for &t in &[2.0, 3.0, 8.0] {
            let lg = log_gamma_complex(Complex64::new(0.0, t)).unwrap();
            let pt = std::f64::consts::PI * t;
            let ln_sinh = pt + (0.5 * (1.0 - (-2.0 * pt).exp())).ln();
            let expected = 0.5 * (std::f64::consts::PI.ln() - t.ln() - ln_sinh);
            assert_relative_eq!(lg.re, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_gamma_recurrence_and_conjugation() {
        let pts = [
            Complex64::new(0.3, 4.0),
            Complex64::new(-1.2, 2.5),
            Complex64::new(3.7, -9.0),
            Complex64::new(0.5, 60.0),
        ];
        for z in pts {
            let a = log_gamma_complex(z + 1.0).unwrap();
            let b = log_gamma_complex(z).unwrap() + z.ln();
            assert!((a - b).norm() < 1e-11, "recurrence at {z}: {}", (a - b).norm());
            let c = log_gamma_complex(z.conj()).unwrap();
            assert!((c - log_gamma_complex(z).unwrap().conj()).norm() < 1e-11);
        }
    }

    #[test]
    fn log_gamma_duplication_identity() {
        // log Gamma(2z) = log Gamma(z) + log Gamma(z+1/2) + (2z-1) ln 2 - (1/2) ln pi
        // holds exactly (no branch wrap) for Re z > 0 moderate.
        for z in [Complex64::new(1.3, 2.0), Complex64::new(4.0, -7.5)] {
            let lhs = log_gamma_complex(2.0 * z).unwrap();
            let rhs = log_gamma_complex(z).unwrap()
                + log_gamma_complex(z + 0.5).unwrap()
                + (2.0 * z - 1.0) * 2.0f64.ln()
                - 0.5 * std::f64::consts::PI.ln();
            assert!((lhs - rhs).norm() < 1e-11, "duplication at {z}");
        }
    }

    #[test]
    fn gamma_factor_zero_shifts_vanish_at_one() {
        let d = FormDescriptor {
            id: "zero-shift".to_string(),
            degree: 3,
            arch_params: vec![Complex64::new(0.0, 0.0); 3],
            self_dual: true,
            conductor: 1,
            source: "test".to_string(),
        };
        let g = gamma_factor(&d, Complex64::new(1.0, 0.0)).unwrap();
        assert!(g.norm() < 1e-13, "G(1) = {g}");
    }

    #[test]
    fn gamma_factor_real_on_real_axis_and_additive() {
        let d = builtin_descriptor("sym2-delta").unwrap();
        let s = Complex64::new(0.8, 0.0);
        let g = gamma_factor(&d, s).unwrap();
        assert!(g.im.abs() < 1e-13);

        let joint = gamma_factor(&d, Complex64::new(0.7, 33.0)).unwrap();
        let mut split = Complex64::new(0.0, 0.0);
        for alpha in &d.arch_params {
            let mut part = d.clone();
            part.degree = 1;
            // degree-1 slices are not valid descriptors; sum the raw pieces.
            part.arch_params = vec![*alpha];
            split += log_g(&part.arch_params, Complex64::new(0.7, 33.0)).unwrap();
        }
        assert!((joint - split).norm() < 1e-12);
    }

    #[test]
    fn gamma_factor_pole_names_the_shift() {
        let d = builtin_descriptor("sym2-delta").unwrap();
        // s = alpha_0 = -1 puts the first shift at Gamma(0).
        match gamma_factor(&d, Complex64::new(-1.0, 0.0)) {
            Err(Error::Domain(msg)) => assert!(msg.contains("shift 0"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn gamma_factor_sigma_drift_matches_stirling() {
        let d = builtin_descriptor("delta").unwrap();
        let lo = gamma_factor(&d, Complex64::new(0.5, 1000.0)).unwrap();
        let hi = gamma_factor(&d, Complex64::new(0.6, 1000.0)).unwrap();
        let measured = hi.re - lo.re;
        let mid = Complex64::new(0.55, 1000.0);
        let predicted: f64 = d
            .arch_params
            .iter()
            .map(|alpha| 0.1 * (0.5 * ((mid - alpha) / 2.0).norm().ln() - 0.5 * std::f64::consts::PI.ln()))
            .sum();
        assert_relative_eq!(measured, predicted, max_relative = 0.01);
    }

    #[test]
    fn stirling_ratio_degree3_band() {
        let d = builtin_descriptor("sym2-delta").unwrap();
        let (lhs, rhs) = stirling_ratio_check(&d, 0.6, 1e4).unwrap();
        let ratio = lhs / rhs;
        assert!((1.3..=1.7).contains(&ratio), "ratio = {ratio}");
        let (lhs0, _) = stirling_ratio_check(&d, 0.5, 1e4).unwrap();
        assert_eq!(lhs0, 0.0);
    }

    #[test]
    fn stirling_ratio_monotone_in_sigma() {
        let d = builtin_descriptor("delta").unwrap();
        let mut prev = 0.0;
        for &sigma in &[0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
            let (lhs, _) = stirling_ratio_check(&d, sigma, 5000.0).unwrap();
            assert!(lhs >= prev, "lhs decreased at sigma = {sigma}");
            prev = lhs;
        }
    }

    #[test]
    fn stirling_ratio_rejects_out_of_regime_inputs() {
        let d = builtin_descriptor("delta").unwrap();
        assert!(stirling_ratio_check(&d, 0.6, 50.0).is_err());
        assert!(stirling_ratio_check(&d, 1.2, 1e4).is_err());
    }

    #[test]
    fn v_limits_small_and_large_argument() {
        let d = builtin_descriptor("delta").unwrap();
        let s = Complex64::new(0.5, 50.0);
        let cfg = EvalConfig::default();
        let near_one = v_smoothing(&d, s, 1e-4, &cfg).unwrap();
        assert!(
            (near_one - 1.0).norm() <= 0.05,
            "V(1e-4) = {near_one} not within 0.05 of 1"
        );
        let tiny = v_smoothing(&d, s, 1e3, &cfg).unwrap();
        assert!(tiny.norm() <= 1e-3, "V(1e3) = {tiny}");
    }

    #[test]
    fn v_real_at_real_base_point() {
        let d = builtin_descriptor("delta").unwrap();
        let cfg = EvalConfig::default();
        let v = v_smoothing(&d, Complex64::new(2.0, 0.0), 0.7, &cfg).unwrap();
        assert!(v.im.abs() <= 1e-10, "Im V = {}", v.im);
    }

    #[test]
    fn v_contour_branches_agree_in_overlap() {
        // Both contours are valid near the switch point; they must agree to
        // quadrature accuracy there (independent evaluations).
        let d = builtin_descriptor("delta").unwrap();
        let s = Complex64::new(0.5, 200.0);
        let cfg = EvalConfig::default();
        let x0 = analytic_conductor(&d.arch_params, s).sqrt();
        let right = VKernel::build(&d.arch_params, s, RIGHT_CONTOUR, &cfg).unwrap();
        let left = VKernel::build(&d.arch_params, s, LEFT_CONTOUR, &cfg).unwrap();
        for &factor in &[0.03, 0.1, 0.3, 1.0] {
            let ln_y = (factor * x0).ln();
            let a = right.eval(ln_y);
            let b = left.eval(ln_y);
            assert!(
                (a - b).norm() < 1e-8,
                "contour mismatch at y/X0 = {factor}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn v_precision_error_when_height_insufficient() {
        let d = builtin_descriptor("sym2-delta").unwrap();
        let cfg = EvalConfig {
            quadrature_step: 0.05,
            quadrature_height: 0.5,
            ..EvalConfig::default()
        };
        assert!(matches!(
            v_smoothing(&d, Complex64::new(0.5, 50.0), 1.0, &cfg),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn config_validation_lists_every_violation() {
        let cfg = EvalConfig {
            series_cutoff_multiplier: 0.5,
            quadrature_step: 0.5,
            quadrature_height: 1.0,
            target_rel_error: 0.5,
        };
        match cfg.validate() {
            Err(Error::InvalidArgument(msg)) => {
                assert!(msg.contains("series_cutoff_multiplier"));
                assert!(msg.contains("quadrature_height"));
                assert!(msg.contains("target_rel_error"));
            }
            other => panic!("expected invalid-argument, got {other:?}"),
        }
    }

    #[test]
    fn afe_matches_direct_series_in_convergent_region() {
        let form = delta_form_1m();
        let s = Complex64::new(2.0, 0.0);
        let v = afe_eval(form, s, &EvalConfig::default()).unwrap();
        let direct = dirichlet_eval(form, s, 1_000_000).unwrap();
        assert!(
            (v.l - direct).norm() <= 1e-6 * direct.norm(),
            "afe {} vs series {}",
            v.l,
            direct
        );
        // Lambda consistency.
        assert!((v.lambda - v.log_g.exp() * v.l).norm() <= 1e-12 * v.lambda.norm());
    }

    #[test]
    fn afe_single_term_table_reduces_to_kernel_values() {
        let mut values = vec![0.0; 1001];
        values[1] = 1.0;
        let table = CoefficientTable::from_values("trivial", 2, "unit impulse", values).unwrap();
        let mut desc = builtin_descriptor("delta").unwrap();
        desc.id = "trivial".to_string();
        let form = Form::new(desc.clone(), table).unwrap();
        let s = Complex64::new(0.5, 30.0);
        let cfg = EvalConfig::default();
        let v = afe_eval(&form, s, &cfg).unwrap();

        let mirror = Complex64::new(1.0, 0.0) - s;
        let dual = desc.dual_arch_params();
        let k1 = SmoothingKernel::build(&desc.arch_params, s, 1.0, &cfg).unwrap();
        let k2 = SmoothingKernel::build(&dual, mirror, 1.0, &cfg).unwrap();
        let kappa = (log_g(&dual, mirror).unwrap() - log_g(&desc.arch_params, s).unwrap()).exp();
        let expected = k1.eval(0.0) + kappa * k2.eval(0.0);
        assert!((v.l - expected).norm() < 1e-9, "{} vs {}", v.l, expected);
    }

    #[test]
    fn afe_rejects_out_of_domain_points() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        assert!(matches!(
            afe_eval(form, Complex64::new(0.3, 50.0), &cfg),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            afe_eval(form, Complex64::new(0.6, 1.0), &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn afe_reports_required_table_length() {
        let small = Form::builtin("delta", 100).unwrap();
        let s = Complex64::new(0.5, 5000.0);
        let cfg = EvalConfig::default();
        let need = afe_required_length(&small.descriptor, s, &cfg).unwrap();
        match afe_eval(&small, s, &cfg) {
            Err(Error::TableTooShort { have, need: n }) => {
                assert_eq!(have, 100);
                assert_eq!(n, need);
            }
            other => panic!("expected table-too-short, got {other:?}"),
        }
    }

    #[test]
    fn afe_conjugate_symmetry() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        for &t in &[12.0, 77.7, 431.0] {
            let up = afe_eval(form, Complex64::new(0.5, t), &cfg).unwrap();
            let down = afe_eval(form, Complex64::new(0.5, -t), &cfg).unwrap();
            assert!(
                (down.l - up.l.conj()).norm() <= 1e-8 * up.l.norm().max(1e-6),
                "conjugate asymmetry at t = {t}"
            );
        }
    }

    #[test]
    fn afe_length_robustness_on_sample_points() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        let doubled = EvalConfig {
            series_cutoff_multiplier: 2.0,
            ..cfg.clone()
        };
        for i in 0..100 {
            let t = 20.0 + 7.31 * i as f64;
            let (a, _) = log_abs_l(form, 0.5, t, &cfg).unwrap();
            let (b, _) = log_abs_l(form, 0.5, t, &doubled).unwrap();
            assert!(
                (a - b).abs() <= 10.0 * cfg.target_rel_error,
                "length sensitivity at t = {t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn functional_equation_residual_on_critical_line() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        for &t in &[10.0, 50.0, 200.0, 1000.0] {
            let r = functional_equation_residual(form, Complex64::new(0.5, t), &cfg).unwrap();
            assert!(r <= 1e-4, "delta residual {r} at t = {t}");
        }
        let sym2 = sym2_form_320k();
        for &t in &[10.0, 100.0, 1000.0] {
            let r = functional_equation_residual(sym2, Complex64::new(0.5, t), &cfg).unwrap();
            assert!(r <= 1e-4, "sym2 residual {r} at t = {t}");
        }
    }

    #[test]
    fn functional_equation_residual_off_line() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        let r = functional_equation_residual(form, Complex64::new(0.6, 100.0), &cfg).unwrap();
        assert!(r <= 1e-3, "off-line residual {r}");
    }

    #[test]
    fn functional_equation_residual_for_synthetic_form() {
        let (desc, table) = satake_random_form(11, 2, 50_000).unwrap();
        let form = Form::new(desc, table).unwrap();
        let cfg = EvalConfig::default();
        let r = functional_equation_residual(&form, Complex64::new(0.5, 40.0), &cfg).unwrap();
        assert!(r <= 1e-4, "synthetic residual {r}");
    }

    #[test]
    fn residual_invariant_under_table_scaling() {
        let base = Form::builtin("delta", 50_000).unwrap();
        let scaled = Form {
            descriptor: base.descriptor.clone(),
            table: base.table.scaled(2.0),
        };
        let cfg = EvalConfig::default();
        let s = Complex64::new(0.5, 60.0);
        let r1 = functional_equation_residual(&base, s, &cfg).unwrap();
        let r2 = functional_equation_residual(&scaled, s, &cfg).unwrap();
        assert!((r1 - r2).abs() <= 1e-8, "{r1} vs {r2}");
        let v1 = afe_eval(&base, s, &cfg).unwrap();
        let v2 = afe_eval(&scaled, s, &cfg).unwrap();
        assert!((v2.l - 2.0 * v1.l).norm() <= 1e-10 * v1.l.norm());
    }

    #[test]
    fn dirichlet_partial_sums_cauchy_converge() {
        let form = delta_form_200k();
        let s = Complex64::new(3.0, 0.0);
        for &n in &[1000u64, 2000, 5000, 20_000] {
            let a = dirichlet_eval(form, s, n).unwrap();
            let b = dirichlet_eval(form, s, 2 * n).unwrap();
            assert!((a - b).norm() <= 1e-6, "gap at N = {n}: {}", (a - b).norm());
        }
        let one = dirichlet_eval(form, s, 1).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn dirichlet_eval_is_linear_in_the_table() {
        let base = Form::builtin("delta", 1000).unwrap();
        let other = {
            let (d, t) = satake_random_form(3, 2, 1000).unwrap();
            Form::new(d, t).unwrap()
        };
        let summed = {
            let vals: Vec<f64> = (0..=1000)
                .map(|n| base.table.values()[n] + other.table.values()[n])
                .collect();
            Form::new(
                base.descriptor.clone(),
                CoefficientTable::from_values("sum", 2, "pointwise sum", vals).unwrap(),
            )
            .unwrap()
        };
        let s = Complex64::new(1.5, 7.0);
        let a = dirichlet_eval(&base, s, 1000).unwrap();
        let b = dirichlet_eval(&other, s, 1000).unwrap();
        let c = dirichlet_eval(&summed, s, 1000).unwrap();
        assert!((c - a - b).norm() < 1e-12);
    }

    #[test]
    fn log_abs_l_consistent_with_afe() {
        let form = delta_form_200k();
        let cfg = EvalConfig::default();
        let (la, flagged) = log_abs_l(form, 0.5, 50.0, &cfg).unwrap();
        assert!(!flagged);
        let v = afe_eval(form, Complex64::new(0.5, 50.0), &cfg).unwrap();
        assert_relative_eq!(la.exp(), v.l.norm(), max_relative = 1e-12);
    }

    #[test]
    fn floored_log_abs_flags_underflow() {
        let (v, flagged) = floored_log_abs(0.0);
        assert!(flagged);
        assert_relative_eq!(v, NEAR_ZERO_FLOOR.ln(), max_relative = 1e-15);
        let (v, flagged) = floored_log_abs(1.0);
        assert!(!flagged);
        assert_eq!(v, 0.0);
    }
}
