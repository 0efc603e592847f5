//! Prime sieving, factor-count statistics, and the density bounds for the
//! set `B_t` of integers with at least `t` prime factors up to `t`.

use crate::error::{Error, Result};
use crate::xprec;
use num_bigint::BigInt;
use num_traits::Signed;
use std::io::{Read, Write};
use std::path::Path;

/// Default memory budget for the smallest-prime-factor table (bytes).
pub const DEFAULT_SIEVE_BUDGET: u64 = 2 << 30;

/// Smallest-prime-factor table plus the ordered list of primes up to `limit`.
///
/// The linear sieve makes the table O(limit) to build, and factoring any
/// `n <= limit` costs one division per prime factor, which is what keeps
/// evaluating a completely multiplicative function over a range cheap.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    spf: Vec<u32>,
}

/// Builds the table up to `limit` under the default memory budget.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    sieve_with_budget(limit, DEFAULT_SIEVE_BUDGET)
}

/// Builds the table up to `limit`, refusing if the spf table would exceed
/// `budget_bytes`.
pub fn sieve_with_budget(limit: u64, budget_bytes: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::Argument(format!("sieve limit {limit} < 2")));
    }
    if limit > u32::MAX as u64 {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds the 32-bit entry width"
        )));
    }
    let bytes = 4 * (limit + 1);
    if bytes > budget_bytes {
        return Err(Error::Resource(format!(
            "spf table for limit {limit} needs {bytes} bytes, budget is {budget_bytes}"
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
        for &p in &primes {
            let p = p as usize;
            if p > spf[i] as usize || i * p > n {
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

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes up to `t` (requires `t <= limit`).
    pub fn prime_pi(&self, t: u64) -> Result<u64> {
        if t > self.limit {
            return Err(Error::Argument(format!(
                "pi({t}) outside table limit {}",
                self.limit
            )));
        }
        Ok(self.primes.partition_point(|&p| p <= t) as u64)
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    pub fn smallest_prime_factor(&self, n: u64) -> Result<u32> {
        if n < 2 || n > self.limit {
            return Err(Error::Argument(format!(
                "spf of {n} outside table range [2, {}]",
                self.limit
            )));
        }
        Ok(self.spf[n as usize])
    }

    /// Full factorization of `n <= limit` as (prime, multiplicity) pairs.
    pub fn factorize(&self, mut n: u64) -> Result<Vec<(u64, u32)>> {
        if n == 0 || n > self.limit {
            return Err(Error::Argument(format!(
                "factorize({n}) outside table range [1, {}]",
                self.limit
            )));
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut a = 0u32;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Total multiplicity of prime factors `<= t` in `n` (the quantity
/// `sum_{p <= t} alpha_p(n)`).
pub fn count_small_prime_factors(n: u64, t: u64, table: &PrimeTable) -> Result<u64> {
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    if n > table.limit() {
        return Err(Error::Argument(format!(
            "n = {n} exceeds table limit {}; supply a factorization instead",
            table.limit()
        )));
    }
    let mut n = n;
    let mut count = 0u64;
    while n > 1 {
        let p = table.spf[n as usize] as u64;
        if p > t {
            break;
        }
        while n % p == 0 {
            n /= p;
            count += 1;
        }
    }
    Ok(count)
}

/// Same statistic from a caller-supplied factorization (for `n` beyond the
/// sieve limit).
pub fn count_small_prime_factors_from(factors: &[(u64, u32)], t: u64) -> u64 {
    factors
        .iter()
        .filter(|&&(p, _)| p <= t)
        .map(|&(_, a)| a as u64)
        .sum()
}

/// Membership in `B_t`: does `n` have at least `t` prime factors `<= t`,
/// counted with multiplicity?
pub fn in_bt(n: u64, t: u64, table: &PrimeTable) -> Result<bool> {
    Ok(count_small_prime_factors(n, t, table)? >= t)
}

/// Simple odd-only Eratosthenes bitset, used to enumerate primes for the
/// prime-zeta partial sums independently of the spf table size.
fn for_each_prime(limit: u64, mut f: impl FnMut(u64)) {
    if limit >= 2 {
        f(2);
    }
    let half = (limit.saturating_sub(1) / 2) as usize; // odd numbers 3,5,..
    let mut composite = vec![false; half + 1];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j <= half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    for i in 1..=half {
        if !composite[i] {
            f(2 * i as u64 + 1);
        }
    }
}

/// Default truncation point for the prime-zeta partial sum.
pub const DEFAULT_ZETA_CUTOFF: u64 = 10_000_000;

/// Certified upper bound for the density `eps_t` of `B_t`:
/// `sum_{p <= cutoff} p^{-k_t} + integral tail`, with `k_t = floor(t / pi(t))`.
///
/// The tail of the sum over primes beyond `cutoff` is dominated by the sum
/// over all integers, hence by `int_cutoff^inf x^{-k} dx`, so the returned
/// value is a true upper bound for the full prime sum.
pub fn epsilon_t_bound(t: u64, table: &PrimeTable, cutoff: Option<u64>) -> Result<f64> {
    if t < 2 {
        return Err(Error::Domain(format!(
            "epsilon bound undefined for t = {t} (no prime <= t)"
        )));
    }
    let pi_t = table.prime_pi(t)?;
    let k = t / pi_t;
    if k < 2 {
        return Err(Error::Domain(format!(
            "k_t = floor({t}/{pi_t}) = {k} <= 1: the prime sum diverges and the bound is vacuous"
        )));
    }
    let cutoff = cutoff.unwrap_or(DEFAULT_ZETA_CUTOFF).max(3);
    let mut acc = crate::accum::Neumaier::default();
    for_each_prime(cutoff, |p| {
        acc.add((p as f64).powi(-(k as i32)));
    });
    let c = cutoff as f64;
    let tail = c.powi(1 - k as i32) / (k as f64 - 1.0);
    // Summation roundoff is far below the tail term; fold it in anyway.
    let roundoff = 1e-13;
    Ok(acc.value() + tail + roundoff)
}

/// Exact empirical density `(1/N) #{n <= N : n in B_t}`.
pub fn epsilon_t_empirical(t: u64, n: u64, table: &PrimeTable) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("N must be >= 1".into()));
    }
    if n > table.limit() {
        return Err(Error::Argument(format!(
            "N = {n} exceeds table limit {}",
            table.limit()
        )));
    }
    let mut count = 0u64;
    for m in 1..=n {
        if in_bt(m, t, table)? {
            count += 1;
        }
    }
    Ok(count as f64 / n as f64)
}

/// Maximum of the empirical density over a grid of window lengths; the
/// finite-grid stand-in for the supremum defining `eps_t`.
pub fn epsilon_t_empirical_max(t: u64, grid: &[u64], table: &PrimeTable) -> Result<f64> {
    let mut best = 0.0f64;
    for &n in grid {
        best = best.max(epsilon_t_empirical(t, n, table)?);
    }
    Ok(best)
}

/// `k_t = floor(t / pi(t))`, the exponent used in the density bound.
pub fn k_t(t: u64, table: &PrimeTable) -> Result<u64> {
    let pi_t = table.prime_pi(t)?;
    if pi_t == 0 {
        return Err(Error::Domain(format!("pi({t}) = 0")));
    }
    Ok(t / pi_t)
}

// ---------------------------------------------------------------------------
// On-disk cache for the spf table.
// ---------------------------------------------------------------------------

const SPF_MAGIC: &[u8; 4] = b"SPFT";
const SPF_VERSION: u32 = 1;
const SPF_ENTRY_WIDTH: u8 = 4;

impl PrimeTable {
    /// Writes the spf table with a versioned header (magic, version, limit,
    /// entry width) so stale caches are rejected on load.
    pub fn save_spf(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(SPF_MAGIC)?;
        f.write_all(&SPF_VERSION.to_le_bytes())?;
        f.write_all(&self.limit.to_le_bytes())?;
        f.write_all(&[SPF_ENTRY_WIDTH])?;
        for &v in &self.spf {
            f.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_spf(path: &Path) -> Result<PrimeTable> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != SPF_MAGIC {
            return Err(Error::State("spf cache: bad magic".into()));
        }
        let mut w32 = [0u8; 4];
        f.read_exact(&mut w32)?;
        if u32::from_le_bytes(w32) != SPF_VERSION {
            return Err(Error::State("spf cache: unsupported version".into()));
        }
        let mut w64 = [0u8; 8];
        f.read_exact(&mut w64)?;
        let limit = u64::from_le_bytes(w64);
        let mut w8 = [0u8; 1];
        f.read_exact(&mut w8)?;
        if w8[0] != SPF_ENTRY_WIDTH {
            return Err(Error::State("spf cache: unexpected entry width".into()));
        }
        let mut spf = vec![0u32; (limit + 1) as usize];
        let mut buf = vec![0u8; 4 * spf.len()];
        f.read_exact(&mut buf)?;
        for (i, chunk) in buf.chunks_exact(4).enumerate() {
            spf[i] = u32::from_le_bytes(chunk.try_into().unwrap());
        }
        let primes = (2..=limit).filter(|&n| spf[n as usize] as u64 == n).collect();
        Ok(PrimeTable { limit, primes, spf })
    }
}

/// Fraction of `ln p / (2 pi)` for a prime (or any positive integer), at
/// full phase precision. Shared by the MRT builder and the tests.
pub fn ln_phase(p: u64) -> xprec::Phase {
    xprec::ln_over_2pi_phase(p, xprec::DEFAULT_FRAC_BITS)
}

/// `ln n` as an exact-enough fixed-point value (192 fractional bits).
pub fn ln_fixed(n: u64) -> BigInt {
    let v = xprec::ln_fixed_u(&num_bigint::BigUint::from(n), xprec::DEFAULT_FRAC_BITS);
    debug_assert!(v.is_positive() || n == 1);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_sieves() {
        assert_eq!(sieve(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve(2).unwrap().primes(), &[2]);
    }

    #[test]
    fn pi_100_against_trial_division() {
        let t = sieve(100).unwrap();
        let oracle = (2..=100).filter(|&n| trial_division_is_prime(n)).count();
        assert_eq!(oracle, 25);
        assert_eq!(t.prime_pi(100).unwrap(), 25);
    }

    #[test]
    fn sieve_matches_trial_division_everywhere() {
        let t = sieve(2000).unwrap();
        for n in 2..=2000u64 {
            assert_eq!(t.is_prime(n), trial_division_is_prime(n), "n = {n}");
            let spf = t.smallest_prime_factor(n).unwrap() as u64;
            assert!(n % spf == 0);
            assert!(trial_division_is_prime(spf));
            for d in 2..spf {
                assert!(n % d != 0, "spf({n}) = {spf} but {d} divides");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        match sieve_with_budget(1_000_000, 1024) {
            Err(Error::Resource(_)) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn factor_counts() {
        let t = sieve(1000).unwrap();
        assert_eq!(count_small_prime_factors(12, 3, &t).unwrap(), 3);
        assert_eq!(count_small_prime_factors(7, 3, &t).unwrap(), 0);
        assert_eq!(count_small_prime_factors(1, 17, &t).unwrap(), 0);
        assert_eq!(
            count_small_prime_factors_from(&[(2, 2), (3, 1), (11, 5)], 3),
            3
        );
    }

    #[test]
    fn count_is_nondecreasing_in_t() {
        let t = sieve(5000).unwrap();
        for n in [1u64, 12, 96, 97, 1024, 4999] {
            let mut prev = 0;
            for th in 1..=60 {
                let c = count_small_prime_factors(n, th, &t).unwrap();
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn bt_membership() {
        let t = sieve(100).unwrap();
        assert!(in_bt(32, 5, &t).unwrap()); // 2^5
        assert!(!in_bt(31, 5, &t).unwrap());
        assert!(!in_bt(2, 1, &t).unwrap()); // no prime <= 1
        assert!(!in_bt(2, 2, &t).unwrap());
        assert!(in_bt(4, 2, &t).unwrap());
    }

    #[test]
    fn bt_against_brute_force() {
        let t = sieve(20_000).unwrap();
        for n in 1..=20_000u64 {
            for tt in [2u64, 3, 5, 10] {
                // brute force: repeated trial division by all primes <= tt
                let mut m = n;
                let mut cnt = 0;
                for p in 2..=tt {
                    if trial_division_is_prime(p) {
                        while m % p == 0 {
                            m /= p;
                            cnt += 1;
                        }
                    }
                }
                assert_eq!(in_bt(n, tt, &t).unwrap(), cnt >= tt, "n={n} t={tt}");
            }
        }
    }

    #[test]
    fn epsilon_empirical_values() {
        let t = sieve(200).unwrap();
        // n <= 16 with at least two factors of two: 4, 8, 12, 16
        assert_eq!(epsilon_t_empirical(2, 16, &t).unwrap(), 4.0 / 16.0);
        assert_eq!(epsilon_t_empirical(1, 100, &t).unwrap(), 0.0);
    }

    #[test]
    fn epsilon_bound_prime_zeta_two() {
        let t = sieve(100).unwrap();
        // k_4 = floor(4 / pi(4)) = 2, so the bound is the prime zeta value
        // P(2) plus the integral tail.
        let b = epsilon_t_bound(4, &t, Some(1_000_000)).unwrap();
        // Independent oracle: trial-division primes to 1e5 plus its own tail.
        let mut partial = 0.0;
        for p in 2..=100_000u64 {
            if trial_division_is_prime(p) {
                partial += (p as f64).powi(-2);
            }
        }
        let oracle_tail = 1.0 / 100_000.0;
        assert!(b >= partial, "upper bound must dominate any partial sum");
        assert!(b <= partial + oracle_tail + 2e-6);
        assert!((b - 0.452_247_42).abs() < 2e-6);
        // Same k_t, same value.
        let b8 = epsilon_t_bound(8, &t, Some(1_000_000)).unwrap();
        assert_eq!(b, b8);
    }

    #[test]
    fn epsilon_bound_refuses_vacuous_t() {
        let t = sieve(100).unwrap();
        for bad in [3u64, 5, 7] {
            assert_eq!(k_t(bad, &t).unwrap(), 1);
            assert!(matches!(
                epsilon_t_bound(bad, &t, None),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn empirical_below_bound_on_grid() {
        let t = sieve(100_000).unwrap();
        for tt in [2u64, 4, 6, 8, 9, 10, 12, 16, 24, 32, 40, 50] {
            if k_t(tt, &t).unwrap() < 2 {
                continue;
            }
            let bound = epsilon_t_bound(tt, &t, Some(1_000_000)).unwrap();
            for n in [10u64, 100, 1000, 10_000, 100_000] {
                let emp = epsilon_t_empirical(tt, n, &t).unwrap();
                assert!(
                    emp <= bound + 1e-12,
                    "t={tt} N={n}: empirical {emp} > bound {bound}"
                );
            }
        }
    }

    #[test]
    fn spf_cache_roundtrip() {
        let t = sieve(5000).unwrap();
        let dir = std::env::temp_dir().join(format!("spf-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("spf.bin");
        t.save_spf(&path).unwrap();
        let back = PrimeTable::load_spf(&path).unwrap();
        assert_eq!(back.limit(), t.limit());
        assert_eq!(back.primes(), t.primes());
        assert_eq!(back.spf, t.spf);
        std::fs::remove_dir_all(&dir).ok();
    }
}
