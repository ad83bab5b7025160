//! Exact integer q-expansions of the built-in level-1 modular forms.
//!
//! The discriminant form is computed as q·A(q)⁸ where A(q) = η(q)³/q^{1/8}
//! expands by Jacobi's identity into the sparse series
//! Σ_k (−1)ᵏ(2k+1) q^{k(k+1)/2}, and the weight-16 eigenform as the product
//! of the weight-4 Eisenstein series E₄ = 1 + 240 Σ σ₃(n)qⁿ with the
//! discriminant. Coefficients such as τ(n) exceed 128 bits well before
//! n = 10⁷, so all polynomial arithmetic runs modulo several 62-bit
//! NTT-friendly primes and individual coefficients are reconstructed by
//! balanced CRT on demand — exactly into i128 where they fit, and rounded
//! to f64 otherwise.

use crate::error::{Error, Result};

/// Largest series length accepted before refusing to allocate.
pub const SERIES_LIMIT_CAP: u64 = 100_000_000;

/// Transform sizes are powers of two up to this exponent; every working
/// modulus p satisfies 2^MAX_LOG2_LEN | p − 1.
const MAX_LOG2_LEN: u32 = 28;

/// Exact integer q-series coefficients a(1..=limit), stored as residues
/// modulo a CRT basis wide enough that balanced reconstruction is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSeries {
    limit: u64,
    basis: CrtBasis,
    /// residues[i][n] = a(n) mod basis.moduli[i]; index 0 is unused.
    residues: Vec<Vec<u64>>,
}

impl ExactSeries {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn digits_at(&self, n: u64, negate: bool) -> [u64; MAX_MODULI] {
        let mut r = [0u64; MAX_MODULI];
        for (i, col) in self.residues.iter().enumerate() {
            let v = col[n as usize];
            r[i] = if negate && v != 0 {
                self.basis.moduli[i] - v
            } else {
                v
            };
        }
        self.basis.garner_digits(&r)
    }

    /// a(n) rounded to f64 (relative error a few ulps).
    pub fn coefficient_f64(&self, n: u64) -> f64 {
        assert!(n >= 1 && n <= self.limit, "index {n} out of range");
        let positive = self.basis.digits_to_f64(&self.digits_at(n, false));
        if positive <= self.basis.half_modulus_f64 {
            positive
        } else {
            -self.basis.digits_to_f64(&self.digits_at(n, true))
        }
    }

    /// a(n) as an exact integer, if it fits in i128.
    pub fn coefficient_i128(&self, n: u64) -> Result<i128> {
        assert!(n >= 1 && n <= self.limit, "index {n} out of range");
        let estimate = self.coefficient_f64(n);
        if estimate.abs() >= 2f64.powi(126) {
            return Err(Error::Precision(format!(
                "coefficient at n={n} is near 2^127; exact i128 readout unavailable"
            )));
        }
        let negate = estimate < 0.0;
        let digits = self.digits_at(n, negate);
        let mut x: u128 = 0;
        for i in (0..self.basis.moduli.len()).rev() {
            x = x
                .wrapping_mul(self.basis.moduli[i] as u128)
                .wrapping_add(digits[i] as u128);
        }
        let magnitude = x as i128;
        Ok(if negate { -magnitude } else { magnitude })
    }
}

const MAX_MODULI: usize = 5;

/// Precomputed Garner-style CRT data for a fixed modulus list.
#[derive(Debug, Clone, PartialEq)]
struct CrtBasis {
    moduli: Vec<u64>,
    /// inv_prefix[i] = (p_0···p_{i−1})^{−1} mod p_i.
    inv_prefix: Vec<u64>,
    /// prefix_f64[i] = p_0···p_{i−1} rounded to f64.
    prefix_f64: Vec<f64>,
    half_modulus_f64: f64,
}

impl CrtBasis {
    fn new(moduli: Vec<u64>) -> Self {
        assert!(moduli.len() <= MAX_MODULI);
        let mut inv_prefix = Vec::with_capacity(moduli.len());
        let mut prefix_f64 = Vec::with_capacity(moduli.len());
        let mut modulus_f64 = 1f64;
        for (i, &p) in moduli.iter().enumerate() {
            let mut prefix_mod_p = 1u64;
            for &q in &moduli[..i] {
                prefix_mod_p = mulmod(prefix_mod_p, q % p, p);
            }
            inv_prefix.push(powmod(prefix_mod_p, p - 2, p));
            prefix_f64.push(modulus_f64);
            modulus_f64 *= p as f64;
        }
        CrtBasis {
            moduli,
            inv_prefix,
            prefix_f64,
            half_modulus_f64: modulus_f64 / 2.0,
        }
    }

    /// Mixed-radix digits v of the unique x ∈ [0, ∏pᵢ) with the given
    /// residues: x = v₀ + v₁p₀ + v₂p₀p₁ + …
    fn garner_digits(&self, residues: &[u64; MAX_MODULI]) -> [u64; MAX_MODULI] {
        let mut digits = [0u64; MAX_MODULI];
        for i in 0..self.moduli.len() {
            let p = self.moduli[i];
            let mut partial = 0u64;
            for j in (0..i).rev() {
                partial = mulmod(partial, self.moduli[j] % p, p);
                partial = addmod(partial, digits[j] % p, p);
            }
            let diff = submod(residues[i] % p, partial, p);
            digits[i] = mulmod(diff, self.inv_prefix[i], p);
        }
        digits
    }

    fn digits_to_f64(&self, digits: &[u64; MAX_MODULI]) -> f64 {
        let mut x = 0f64;
        for i in 0..self.moduli.len() {
            x += digits[i] as f64 * self.prefix_f64[i];
        }
        x
    }
}

/// Discriminant-form q-expansion: a(n) = τ(n), n ≤ limit.
pub fn delta_series(limit: u64) -> Result<ExactSeries> {
    let moduli = select_moduli(limit, 5.5)?;
    let mut residues = Vec::with_capacity(moduli.len());
    for &p in &moduli {
        let field = NttField::new(p, transform_len(limit)?);
        residues.push(shift_by_q(&eta_pow24(limit, &field), limit));
    }
    Ok(ExactSeries {
        limit,
        basis: CrtBasis::new(moduli),
        residues,
    })
}

/// Weight-16 eigenform q-expansion: E₄ times the discriminant, n ≤ limit.
pub fn weight16_series(limit: u64) -> Result<ExactSeries> {
    let moduli = select_moduli(limit, 7.5)?;
    let mut residues = Vec::with_capacity(moduli.len());
    for &p in &moduli {
        let field = NttField::new(p, transform_len(limit)?);
        let eta24 = eta_pow24(limit, &field);
        let e4 = eisenstein4(limit - 1, p);
        let product = field.multiply_truncated(eta24, e4, limit - 1);
        residues.push(shift_by_q(&product, limit));
    }
    Ok(ExactSeries {
        limit,
        basis: CrtBasis::new(moduli),
        residues,
    })
}

/// Re-index a polynomial in exponents 0..limit−1 as coefficients of q·poly,
/// i.e. out[n] = poly[n−1] for 1 ≤ n ≤ limit.
fn shift_by_q(poly: &[u64], limit: u64) -> Vec<u64> {
    let mut out = vec![0u64; limit as usize + 1];
    out[1..=limit as usize].copy_from_slice(&poly[..limit as usize]);
    out
}

fn transform_len(limit: u64) -> Result<usize> {
    let len = (2 * limit).next_power_of_two();
    if len > 1 << MAX_LOG2_LEN {
        return Err(Error::ResourceLimit(format!(
            "series of length {limit} needs transform size {len} > 2^{MAX_LOG2_LEN}"
        )));
    }
    Ok(len as usize)
}

/// Picks enough NTT primes near 2^62 that the CRT modulus exceeds twice the
/// worst-case coefficient magnitude d(n)·n^weight_half.
fn select_moduli(limit: u64, weight_half: f64) -> Result<Vec<u64>> {
    if limit < 1 {
        return Err(Error::InvalidArgument(
            "series limit must be at least 1".to_string(),
        ));
    }
    if limit > SERIES_LIMIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "series limit {limit} exceeds cap {SERIES_LIMIT_CAP}"
        )));
    }
    // d(n) < 2^11 for all n ≤ 10^8; one extra bit for the sign.
    let needed_bits = 12.0 + weight_half * (limit as f64).log2() + 1.0;
    let mut moduli = Vec::new();
    let mut bits = 0.0;
    // p = c·2^28 + 1 with c scanned upward from 2^34 + 1 keeps every p just
    // above 2^62 and guarantees 2^28 | p − 1.
    let mut c: u64 = (1 << 34) + 1;
    while bits < needed_bits.max(64.0) {
        let p = (c << MAX_LOG2_LEN) + 1;
        if is_prime_u64(p) {
            bits += (p as f64).log2();
            moduli.push(p);
            if moduli.len() == MAX_MODULI {
                break;
            }
        }
        c += 2;
    }
    Ok(moduli)
}

/// Dense coefficients of A(q)⁸ = (η³/q^{1/8})⁸ over exponents 0..limit−1,
/// via three cyclic squarings of the sparse Jacobi series.
fn eta_pow24(limit: u64, field: &NttField) -> Vec<u64> {
    let keep = (limit - 1) as usize;
    let p = field.p;
    let mut a = vec![0u64; field.len];
    let mut k = 0u64;
    loop {
        let e = k * (k + 1) / 2;
        if e > keep as u64 {
            break;
        }
        let m = (2 * k + 1) % p;
        a[e as usize] = if k % 2 == 0 { m } else { p - m };
        k += 1;
    }
    for _ in 0..3 {
        field.square_in_place(&mut a);
        for x in a[keep + 1..].iter_mut() {
            *x = 0;
        }
    }
    a
}

/// E₄(q) = 1 + 240 Σ_{n≥1} σ₃(n) qⁿ over exponents 0..=keep, mod p.
fn eisenstein4(keep: u64, p: u64) -> Vec<u64> {
    let mut sigma3 = vec![0u64; keep as usize + 1];
    for d in 1..=keep {
        let cube = mulmod(mulmod(d % p, d % p, p), d % p, p);
        let mut m = d;
        while m <= keep {
            let cell = &mut sigma3[m as usize];
            *cell = addmod(*cell, cube, p);
            m += d;
        }
    }
    let mut e4 = vec![0u64; keep as usize + 1];
    e4[0] = 1 % p;
    for n in 1..=keep as usize {
        e4[n] = mulmod(240 % p, sigma3[n], p);
    }
    e4
}

/// Number-theoretic transform over one prime field, with enough 2-adic
/// headroom in p − 1 for the requested length.
struct NttField {
    p: u64,
    len: usize,
    /// root^len = 1, primitive.
    root: u64,
}

impl NttField {
    fn new(p: u64, len: usize) -> Self {
        assert!(len.is_power_of_two() && len <= 1 << MAX_LOG2_LEN);
        let g = find_generator(p);
        let root = powmod(g, (p - 1) / len as u64, p);
        NttField { p, len, root }
    }

    fn square_in_place(&self, a: &mut [u64]) {
        self.transform(a, false);
        let p = self.p;
        for x in a.iter_mut() {
            *x = mulmod(*x, *x, p);
        }
        self.transform(a, true);
    }

    /// Product of two polynomials given by coefficient vectors (length
    /// self.len), truncated to exponents ≤ keep.
    fn multiply_truncated(&self, mut a: Vec<u64>, b: Vec<u64>, keep: u64) -> Vec<u64> {
        let mut b_padded = vec![0u64; self.len];
        b_padded[..b.len()].copy_from_slice(&b);
        self.transform(&mut a, false);
        self.transform(&mut b_padded, false);
        let p = self.p;
        for (x, y) in a.iter_mut().zip(b_padded.iter()) {
            *x = mulmod(*x, *y, p);
        }
        self.transform(&mut a, true);
        for x in a[keep as usize + 1..].iter_mut() {
            *x = 0;
        }
        a
    }

    fn transform(&self, a: &mut [u64], invert: bool) {
        let n = self.len;
        assert_eq!(a.len(), n);
        let p = self.p;
        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }
        let base = if invert {
            powmod(self.root, p - 2, p)
        } else {
            self.root
        };
        let mut len = 2usize;
        while len <= n {
            let wlen = powmod(base, (n / len) as u64, p);
            let half = len / 2;
            let mut start = 0usize;
            while start < n {
                let mut w = 1u64;
                for i in start..start + half {
                    let u = a[i];
                    let v = mulmod(a[i + half], w, p);
                    a[i] = addmod(u, v, p);
                    a[i + half] = submod(u, v, p);
                    w = mulmod(w, wlen, p);
                }
                start += len;
            }
            len <<= 1;
        }
        if invert {
            let n_inv = powmod(n as u64, p - 2, p);
            for x in a.iter_mut() {
                *x = mulmod(*x, n_inv, p);
            }
        }
    }
}

/// Smallest generator of (Z/p)^* for prime p.
fn find_generator(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    'outer: for g in 2..p {
        for &q in &factors {
            if powmod(g, (p - 1) / q, p) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("no generator found for prime {p}")
}

#[inline]
fn addmod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
fn submod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set decides primality for all
/// 64-bit integers.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
