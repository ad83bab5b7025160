//! Normalized Dirichlet coefficients λ(1,n) for concrete degree-2 and
//! degree-3 forms: the discriminant form, the weight-16 level-1 eigenform,
//! symmetric-square lifts of degree-2 forms, and synthetic Satake-parameter
//! models with Sato-Tate-distributed local data.
//!
//! All built-in tables are real and self-dual, normalized so λ(1,1) = 1 and
//! |λ(1,p)| is bounded by the local dimension (Deligne's bound for the
//! holomorphic forms, unitarity for the synthetic models).

use num_complex::Complex64;

use crate::arith::sieve_primes;
use crate::error::{Error, Result};
use crate::qexp;
use crate::rng::CounterRng;

/// Memory cap on coefficient-table length.
pub const TABLE_LIMIT_CAP: u64 = 100_000_000;

/// Exhaustive multiplicativity checking is restricted to products below
/// this bound; larger tables are checked on the full grid up to the bound.
const MULTIPLICATIVITY_CHECK_CAP: u64 = 100_000;

/// A concrete L-function instance: degree, gamma-factor shifts, duality
/// data, and a label tying it to its coefficient source.
///
/// The completed function is G(f,s)·L(f,s) with
/// G(f,s) = ∏ᵢ π^{−s/2} Γ((s−αᵢ)/2), αᵢ = arch_params[i].
#[derive(Debug, Clone, PartialEq)]
pub struct FormDescriptor {
    pub id: String,
    pub degree: u8,
    pub arch_params: Vec<Complex64>,
    pub self_dual: bool,
    pub conductor: u64,
    pub source: String,
}

impl FormDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.degree as usize != self.arch_params.len() {
            return Err(Error::InvalidArgument(format!(
                "form {}: degree {} but {} gamma shifts",
                self.id,
                self.degree,
                self.arch_params.len()
            )));
        }
        if !(self.degree == 2 || self.degree == 3) {
            return Err(Error::InvalidArgument(format!(
                "form {}: unsupported degree {}",
                self.id, self.degree
            )));
        }
        Ok(())
    }

    /// Gamma shifts of the dual form (the one with conjugated coefficients).
    ///
    /// Real shift multisets describe holomorphic-normalization factors whose
    /// dual is the form itself; spectral-type (non-real) parameters dualize
    /// to the negated, reversed multiset.
    pub fn dual_arch_params(&self) -> Vec<Complex64> {
        if self.arch_params.iter().all(|a| a.im == 0.0) {
            self.arch_params.clone()
        } else {
            self.arch_params.iter().rev().map(|a| -a).collect()
        }
    }
}

/// Immutable table n ↦ λ(1,n) for 1 ≤ n ≤ limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub form_id: String,
    pub degree: u8,
    pub limit: u64,
    pub provenance: String,
    values: Vec<f64>,
}

impl CoefficientTable {
    pub fn from_values(
        form_id: impl Into<String>,
        degree: u8,
        provenance: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "coefficient table needs at least index 1".to_string(),
            ));
        }
        Ok(CoefficientTable {
            form_id: form_id.into(),
            degree,
            limit: values.len() as u64 - 1,
            provenance: provenance.into(),
            values,
        })
    }

    /// λ(1,n); panics past the limit (use `ensure_covers` for fallible
    /// range checks).
    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        self.values[n as usize]
    }

    /// All values with values[0] = 0 padding, so slice index n is λ(1,n).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ensure_covers(&self, n: u64) -> Result<()> {
        if n > self.limit {
            Err(Error::TableTooShort {
                have: self.limit,
                need: n,
            })
        } else {
            Ok(())
        }
    }

    /// Pointwise-scaled copy (used for homogeneity checks).
    pub fn scaled(&self, factor: f64) -> CoefficientTable {
        let mut t = self.clone();
        for v in t.values.iter_mut() {
            *v *= factor;
        }
        t.provenance = format!("{} (scaled by {factor})", self.provenance);
        t
    }
}

/// Descriptor plus coefficient table: everything an evaluator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub descriptor: FormDescriptor,
    pub table: CoefficientTable,
}

impl Form {
    pub fn new(descriptor: FormDescriptor, table: CoefficientTable) -> Result<Form> {
        descriptor.validate()?;
        if descriptor.degree != table.degree {
            return Err(Error::InvalidArgument(format!(
                "descriptor degree {} does not match table degree {}",
                descriptor.degree, table.degree
            )));
        }
        Ok(Form { descriptor, table })
    }

    /// Builds one of the named built-in forms with coefficients up to limit.
    pub fn builtin(id: &str, limit: u64) -> Result<Form> {
        Form::new(builtin_descriptor(id)?, builtin_table(id, limit)?)
    }
}

pub const BUILTIN_FORM_IDS: [&str; 4] = ["delta", "weight16", "sym2-delta", "sym2-weight16"];

/// Descriptor for a built-in form id.
pub fn builtin_descriptor(id: &str) -> Result<FormDescriptor> {
    let real = |xs: &[f64]| xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let d = match id {
        // Weight-k holomorphic forms complete with Γ_C(s + (k−1)/2), i.e.
        // consecutive half-integer shift pairs.
        "delta" => FormDescriptor {
            id: id.to_string(),
            degree: 2,
            arch_params: real(&[-5.5, -6.5]),
            self_dual: true,
            conductor: 1,
            source: "eta-product q-expansion".to_string(),
        },
        "weight16" => FormDescriptor {
            id: id.to_string(),
            degree: 2,
            arch_params: real(&[-7.5, -8.5]),
            self_dual: true,
            conductor: 1,
            source: "Eisenstein-discriminant product q-expansion".to_string(),
        },
        // Symmetric squares of weight-k forms complete with
        // Γ_R(s+1)·Γ_C(s+k−1), giving the shift multiset {1, k−1, k}.
        "sym2-delta" => FormDescriptor {
            id: id.to_string(),
            degree: 3,
            arch_params: real(&[-1.0, -11.0, -12.0]),
            self_dual: true,
            conductor: 1,
            source: "symmetric-square lift of delta".to_string(),
        },
        "sym2-weight16" => FormDescriptor {
            id: id.to_string(),
            degree: 3,
            arch_params: real(&[-1.0, -15.0, -16.0]),
            self_dual: true,
            conductor: 1,
            source: "symmetric-square lift of weight16".to_string(),
        },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown form id '{id}' (built-ins: {BUILTIN_FORM_IDS:?})"
            )))
        }
    };
    Ok(d)
}

/// Coefficient table for a built-in form id.
pub fn builtin_table(id: &str, limit: u64) -> Result<CoefficientTable> {
    match id {
        "delta" => delta_coefficients(limit),
        "weight16" => weight16_coefficients(limit),
        "sym2-delta" => sym_square_lift(&delta_coefficients(limit)?, limit),
        "sym2-weight16" => sym_square_lift(&weight16_coefficients(limit)?, limit),
        _ => Err(Error::InvalidArgument(format!("unknown form id '{id}'"))),
    }
}

fn check_limit(limit: u64) -> Result<()> {
    if limit < 1 {
        return Err(Error::InvalidArgument(
            "table limit must be at least 1".to_string(),
        ));
    }
    if limit > TABLE_LIMIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "table limit {limit} exceeds cap {TABLE_LIMIT_CAP}"
        )));
    }
    Ok(())
}

/// λ(n) = τ(n)/n^{11/2} for the weight-12 discriminant form.
pub fn delta_coefficients(limit: u64) -> Result<CoefficientTable> {
    check_limit(limit)?;
    let series = qexp::delta_series(limit)?;
    let mut values = vec![0.0; limit as usize + 1];
    for n in 1..=limit {
        values[n as usize] = series.coefficient_f64(n) / (n as f64).powf(5.5);
    }
    CoefficientTable::from_values("delta", 2, "eta-product q-expansion", values)
}

/// λ(n) = a(n)/n^{15/2} for the weight-16 level-1 eigenform.
pub fn weight16_coefficients(limit: u64) -> Result<CoefficientTable> {
    check_limit(limit)?;
    let series = qexp::weight16_series(limit)?;
    let mut values = vec![0.0; limit as usize + 1];
    for n in 1..=limit {
        values[n as usize] = series.coefficient_f64(n) / (n as f64).powf(7.5);
    }
    CoefficientTable::from_values(
        "weight16",
        2,
        "Eisenstein-discriminant product q-expansion",
        values,
    )
}

/// Symmetric-square coefficients c(n) of a degree-2 table: c(p) = λ(p)² − 1
/// at primes, prime powers by the degree-3 local Euler recursion
/// h_j = c(p)·h_{j−1} − c(p)·h_{j−2} + h_{j−3}, composites multiplicatively.
pub fn sym_square_lift(gl2_table: &CoefficientTable, limit: u64) -> Result<CoefficientTable> {
    check_limit(limit)?;
    if gl2_table.degree != 2 {
        return Err(Error::InvalidArgument(format!(
            "symmetric square needs a degree-2 input, got degree {}",
            gl2_table.degree
        )));
    }
    if gl2_table.limit < limit {
        return Err(Error::InvalidArgument(format!(
            "input table covers {} < requested {limit}",
            gl2_table.limit
        )));
    }
    let mut values = vec![0.0; limit as usize + 1];
    values[0] = 0.0;
    if limit >= 1 {
        values[1] = 1.0;
    }
    if limit >= 2 {
        let sieve = sieve_primes(limit)?;
        for &p in sieve.primes() {
            let cp = {
                let lp = gl2_table.value(p);
                lp * lp - 1.0
            };
            // h_{j}, filling p, p², p³, … up to the limit.
            let (mut h3, mut h2, mut h1) = (0.0, 0.0, 1.0);
            let mut pw = p;
            loop {
                let h = cp * h1 - cp * h2 + h3;
                values[pw as usize] = h;
                (h3, h2, h1) = (h2, h1, h);
                match pw.checked_mul(p) {
                    Some(next) if next <= limit => pw = next,
                    _ => break,
                }
            }
        }
        for n in 2..=limit {
            let p = sieve.smallest_prime_factor(n).unwrap();
            let mut pe = p;
            let mut m = n / p;
            while m % p == 0 {
                pe *= p;
                m /= p;
            }
            if m > 1 {
                values[n as usize] = values[pe as usize] * values[m as usize];
            }
        }
    }
    CoefficientTable::from_values(
        format!("sym2-{}", gl2_table.form_id),
        3,
        format!("symmetric-square lift of {}", gl2_table.form_id),
        values,
    )
}

/// Inverse CDF of the Sato-Tate density (2/π)sin²θ on [0, π]:
/// solves (θ − sinθ·cosθ)/π = u.
pub fn sato_tate_angle(u: f64) -> f64 {
    assert!((0.0..=1.0).contains(&u), "u={u} outside [0,1]");
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    let mut theta = std::f64::consts::PI * u;
    for _ in 0..200 {
        let f = (theta - theta.sin() * theta.cos()) / std::f64::consts::PI - u;
        if f > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let d = (1.0 - (2.0 * theta).cos()) / std::f64::consts::PI;
        let mut next = if d > 1e-18 { theta - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - theta).abs() <= 1e-15 * (1.0 + theta.abs()) {
            return next;
        }
        theta = next;
    }
    theta
}

/// Synthetic form with independent Sato-Tate local data per prime:
/// degree 2 uses λ(p) = 2cosθ_p, degree 3 the sym-square-type
/// λ(p) = 2cos2θ_p + 1; prime powers follow the local Euler recursion.
/// Fully deterministic in (seed, degree, limit).
pub fn satake_random_form(seed: u64, degree: u8, limit: u64) -> Result<(FormDescriptor, CoefficientTable)> {
    if !(degree == 2 || degree == 3) {
        return Err(Error::InvalidArgument(format!(
            "unsupported degree {degree} for synthetic forms"
        )));
    }
    check_limit(limit)?;
    let rng = CounterRng::new(seed);
    // Index 0 seeds the spectral parameter; primes use indices 1, 2, …
    let r = rng.uniform_in(0, 1.0, 2.0);
    let arch_params = if degree == 2 {
        vec![Complex64::new(0.0, r), Complex64::new(0.0, -r)]
    } else {
        vec![
            Complex64::new(0.0, 2.0 * r),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -2.0 * r),
        ]
    };
    let descriptor = FormDescriptor {
        id: format!("satake-d{degree}-{seed}"),
        degree,
        arch_params,
        self_dual: true,
        conductor: 1,
        source: "synthetic Sato-Tate local data".to_string(),
    };

    let mut values = vec![0.0; limit as usize + 1];
    if limit >= 1 {
        values[1] = 1.0;
    }
    if limit >= 2 {
        let sieve = sieve_primes(limit)?;
        for (i, &p) in sieve.primes().iter().enumerate() {
            let theta = sato_tate_angle(rng.uniform(i as u64 + 1));
            let lp = if degree == 2 {
                2.0 * theta.cos()
            } else {
                2.0 * (2.0 * theta).cos() + 1.0
            };
            let (mut h3, mut h2, mut h1) = (0.0, 0.0, 1.0);
            let mut pw = p;
            loop {
                let h = if degree == 2 {
                    lp * h1 - h2
                } else {
                    lp * h1 - lp * h2 + h3
                };
                values[pw as usize] = h;
                (h3, h2, h1) = (h2, h1, h);
                match pw.checked_mul(p) {
                    Some(next) if next <= limit => pw = next,
                    _ => break,
                }
            }
        }
        for n in 2..=limit {
            let p = sieve.smallest_prime_factor(n).unwrap();
            let mut pe = p;
            let mut m = n / p;
            while m % p == 0 {
                pe *= p;
                m /= p;
            }
            if m > 1 {
                values[n as usize] = values[pe as usize] * values[m as usize];
            }
        }
    }
    let table = CoefficientTable::from_values(
        descriptor.id.clone(),
        degree,
        "synthetic Sato-Tate local data",
        values,
    )?;
    Ok((descriptor, table))
}

/// Power sums s_k = Σᵢ βᵢᵏ of the local parameters at a prime, from λ(p)
/// alone, via Newton's identities for the degree's Euler polynomial
/// (degree 2: e₁ = λ, e₂ = 1; degree 3 self-dual: e₁ = e₂ = λ, e₃ = 1).
/// Returns s_1..=s_kmax.
pub fn local_power_sums(degree: u8, lambda_p: f64, k_max: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(k_max);
    match degree {
        2 => {
            let e1 = lambda_p;
            for k in 1..=k_max {
                let v = match k {
                    1 => e1,
                    2 => e1 * s[0] - 2.0,
                    _ => e1 * s[k - 2] - s[k - 3],
                };
                s.push(v);
            }
        }
        3 => {
            let e1 = lambda_p;
            let e2 = lambda_p;
            for k in 1..=k_max {
                let v = match k {
                    1 => e1,
                    2 => e1 * s[0] - 2.0 * e2,
                    3 => e1 * s[1] - e2 * s[0] + 3.0,
                    _ => e1 * s[k - 2] - e2 * s[k - 3] + s[k - 4],
                };
                s.push(v);
            }
        }
        _ => panic!("unsupported degree {degree}"),
    }
    s
}

/// One failed table invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum TableViolation {
    Normalization {
        value: f64,
    },
    Multiplicativity {
        m: u64,
        n: u64,
        product_value: f64,
        expected: f64,
    },
    RamanujanBound {
        n: u64,
        value: f64,
        bound: f64,
    },
}

impl std::fmt::Display for TableViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableViolation::Normalization { value } => {
                write!(f, "normalization: values[1] = {value}, expected 1")
            }
            TableViolation::Multiplicativity {
                m,
                n,
                product_value,
                expected,
            } => write!(
                f,
                "multiplicativity: values[{}] = {product_value} but values[{m}]·values[{n}] = {expected}",
                m * n
            ),
            TableViolation::RamanujanBound { n, value, bound } => {
                write!(f, "ramanujan bound: |values[{n}]| = {} > {bound}", value.abs())
            }
        }
    }
}

/// Result of validating a table against its invariants; empty means clean.
#[derive(Debug, Clone, Default)]
pub struct TableCheckReport {
    pub violations: Vec<TableViolation>,
}

impl TableCheckReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Validates normalization, multiplicativity on coprime pairs (exhaustive
/// for products up to 10⁵), and the degree's divisor-function bound with
/// tolerance 1e-9.
pub fn check_table(table: &CoefficientTable) -> TableCheckReport {
    const EPS_TOL: f64 = 1e-9;
    let mut report = TableCheckReport::default();
    if (table.value(1) - 1.0).abs() > 1e-12 {
        report.violations.push(TableViolation::Normalization {
            value: table.value(1),
        });
    }
    if table.limit < 2 {
        return report;
    }
    let sieve = sieve_primes(table.limit).expect("table limit within sieve cap");

    let check_limit = table.limit.min(MULTIPLICATIVITY_CHECK_CAP);
    let gcd = |mut a: u64, mut b: u64| {
        while b != 0 {
            let r = a % b;
            a = b;
            b = r;
        }
        a
    };
    for m in 2..=check_limit {
        for n in m + 1..=check_limit / m {
            if gcd(m, n) == 1 {
                let expected = table.value(m) * table.value(n);
                let got = table.value(m * n);
                let scale = 1.0f64.max(expected.abs()).max(got.abs());
                if (got - expected).abs() > 1e-12 * scale {
                    report.violations.push(TableViolation::Multiplicativity {
                        m,
                        n,
                        product_value: got,
                        expected,
                    });
                }
            }
        }
    }

    for n in 2..=table.limit {
        let f = sieve.factorize(n).expect("n below sieve limit");
        let mut bound = 1.0;
        for &(_, e) in &f.pairs {
            bound *= match table.degree {
                2 => e as f64 + 1.0,
                3 => (e as f64 + 1.0) * (e as f64 + 2.0) / 2.0,
                d => panic!("unsupported degree {d}"),
            };
        }
        if table.value(n).abs() > bound * (1.0 + EPS_TOL) {
            report.violations.push(TableViolation::RamanujanBound {
                n,
                value: table.value(n),
                bound,
            });
        }
    }
    report
}
