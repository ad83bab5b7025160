//! Integer-arithmetic primitives: a smallest-prime-factor linear sieve,
//! factorization, the Möbius function, and the multinomial coefficients
//! a_k(n) = k!/(alpha_1! ... alpha_r!) that arise when expanding the k-th
//! power of a sum over primes.

use crate::error::{Error, Result};

/// Hard cap on the sieve limit; the SPF array is 4 bytes per integer.
pub const SIEVE_LIMIT_CAP: u64 = 1 << 28;

/// Multinomial coefficients use exact 64-bit factorials, which overflow
/// past 20!.
pub const MAX_MULTINOMIAL_K: u32 = 20;

/// Primes up to a limit together with every integer's smallest prime factor.
///
/// Immutable after construction; factorization of any n ≤ limit walks the
/// SPF chain in O(log n).
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    spf: Vec<u32>,
}

/// Prime factorization n = ∏ pᵉ with primes strictly increasing and e ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub pairs: Vec<(u64, u32)>,
}

impl Factorization {
    /// The integer this factorization represents (1 for the empty list).
    pub fn value(&self) -> u64 {
        self.pairs
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product()
    }

    /// Number of prime factors counted with multiplicity, Ω(n).
    pub fn big_omega(&self) -> u32 {
        self.pairs.iter().map(|&(_, e)| e).sum()
    }

    /// Number of distinct prime factors, ω(n).
    pub fn omega(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.pairs.iter().all(|&(_, e)| e == 1)
    }
}

/// Builds a [`PrimeTable`] covering 2..=limit with a linear sieve.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!(
            "sieve limit must be at least 2, got {limit}"
        )));
    }
    if limit > SIEVE_LIMIT_CAP {
        return Err(Error::InvalidArgument(format!(
            "sieve limit {limit} exceeds cap {SIEVE_LIMIT_CAP}"
        )));
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u64> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u64);
        }
        let spf_i = spf[i] as usize;
        for &p in &primes {
            let p = p as usize;
            if p > spf_i || i * p > n {
                break;
            }
            spf[i * p] = p as u32;
        }
    }
    Ok(PrimeTable { limit, primes, spf })
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes ≤ limit, sorted ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes p with p ≤ x (and p ≤ limit).
    pub fn primes_up_to(&self, x: f64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p as f64 <= x);
        &self.primes[..end]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    /// Smallest prime factor of n ≤ limit; None for n < 2.
    pub fn smallest_prime_factor(&self, n: u64) -> Option<u64> {
        if n < 2 || n > self.limit {
            None
        } else {
            Some(self.spf[n as usize] as u64)
        }
    }

    /// Factorizes n, using the SPF chain for n ≤ limit and trial division
    /// beyond it.
    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "cannot factorize 0".to_string(),
            ));
        }
        let mut pairs: Vec<(u64, u32)> = Vec::new();
        let mut m = n;
        while m > 1 && m <= self.limit {
            let p = self.spf[m as usize] as u64;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            pairs.push((p, e));
        }
        if m > 1 {
            // Trial division for the part above the sieve: sieved primes
            // first, then odd candidates past the sieve limit.
            let divide_out = |m: &mut u64, d: u64, pairs: &mut Vec<(u64, u32)>| {
                if *m % d == 0 {
                    let mut e = 0u32;
                    while *m % d == 0 {
                        *m /= d;
                        e += 1;
                    }
                    pairs.push((d, e));
                }
            };
            for &p in &self.primes {
                if p * p > m {
                    break;
                }
                divide_out(&mut m, p, &mut pairs);
            }
            let mut d = self.limit | 1;
            while d * d <= m {
                divide_out(&mut m, d, &mut pairs);
                d += 2;
            }
            if m > 1 {
                pairs.push((m, 1));
            }
            pairs.sort_unstable_by_key(|&(p, _)| p);
        }
        Ok(Factorization { pairs })
    }

    /// Möbius function: 0 on non-squarefree n, else (−1)^{#prime factors}.
    pub fn mobius(&self, n: u64) -> Result<i32> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Möbius function undefined at 0".to_string(),
            ));
        }
        let f = self.factorize(n)?;
        if !f.is_squarefree() {
            return Ok(0);
        }
        Ok(if f.omega() % 2 == 0 { 1 } else { -1 })
    }
}

/// Exact k! for k ≤ 20.
pub fn factorial(k: u32) -> Result<u64> {
    if k > MAX_MULTINOMIAL_K {
        return Err(Error::InvalidArgument(format!(
            "factorial requested for k={k}, exact range ends at {MAX_MULTINOMIAL_K}"
        )));
    }
    Ok((2..=k as u64).product())
}

/// a_k(n): the number of ordered k-tuples of primes, all < x_cutoff, whose
/// product is n. Equals k!/(alpha_1!...alpha_r!) when n is a product of
/// exactly k primes (with multiplicity) all below the cutoff, 0 otherwise;
/// a_0(1) = 1.
pub fn multinomial_a_k(table: &PrimeTable, n: u64, k: u32, x_cutoff: f64) -> Result<u64> {
    if k > MAX_MULTINOMIAL_K {
        return Err(Error::InvalidArgument(format!(
            "multinomial order k={k} exceeds cap {MAX_MULTINOMIAL_K}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "multinomial_a_k undefined at n=0".to_string(),
        ));
    }
    if n == 1 {
        return Ok(if k == 0 { 1 } else { 0 });
    }
    let f = table.factorize(n)?;
    if f.big_omega() != k {
        return Ok(0);
    }
    if f.pairs.iter().any(|&(p, _)| p as f64 >= x_cutoff) {
        return Ok(0);
    }
    let mut value = factorial(k)?;
    for &(_, e) in &f.pairs {
        value /= factorial(e)?;
    }
    Ok(value)
}
