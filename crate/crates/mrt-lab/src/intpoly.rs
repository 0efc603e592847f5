//! Dense polynomials with exact big-integer coefficients.
//!
//! Just the operations the phase-polynomial family needs: ring arithmetic,
//! Taylor shift by one, differentiation, evaluation, and a Descartes-based
//! certified bound on the largest real root. Degrees reach 2^11 with
//! coefficients of a few thousand bits, so the products parallelize over
//! output coefficients.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

/// Coefficients in increasing degree order, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        IntPoly {
            coeffs: vec![BigInt::one()],
        }
    }

    pub fn from_coeffs(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `x + offset`.
    pub fn linear(offset: u64) -> Self {
        IntPoly {
            coeffs: vec![BigInt::from(offset), BigInt::one()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coeff(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + rhs.coeff(k));
        }
        IntPoly::from_coeffs(out)
    }

    pub fn sub(&self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) - rhs.coeff(k));
        }
        IntPoly::from_coeffs(out)
    }

    pub fn mul(&self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let n = a.len() + b.len() - 1;
        let coeffs: Vec<BigInt> = (0..n)
            .into_par_iter()
            .map(|k| {
                let lo = k.saturating_sub(b.len() - 1);
                let hi = k.min(a.len() - 1);
                let mut acc = BigInt::zero();
                for i in lo..=hi {
                    acc += &a[i] * &b[k - i];
                }
                acc
            })
            .collect();
        IntPoly::from_coeffs(coeffs)
    }

    /// `p(x + 1)` by Horner: `result = (...((a_d)(x+1) + a_{d-1})(x+1) + ...)`.
    pub fn shift_by_one(&self) -> IntPoly {
        let mut out: Vec<BigInt> = Vec::with_capacity(self.coeffs.len());
        for a in self.coeffs.iter().rev() {
            // out = out * (x + 1) + a
            let mut next = vec![BigInt::zero(); out.len() + 1];
            for (i, c) in out.iter().enumerate() {
                next[i + 1] += c;
                next[i] += c;
            }
            if next.is_empty() {
                next.push(BigInt::zero());
            }
            next[0] += a;
            out = next;
        }
        IntPoly::from_coeffs(out)
    }

    /// `p(x + a)` for an integer `a`, by Horner.
    pub fn shift_by(&self, a: i64) -> IntPoly {
        let a = BigInt::from(a);
        let mut out: Vec<BigInt> = Vec::new();
        for c in self.coeffs.iter().rev() {
            let mut next = vec![BigInt::zero(); out.len() + 1];
            for (i, q) in out.iter().enumerate() {
                next[i + 1] += q;
                next[i] += q * &a;
            }
            if next.is_empty() {
                next.push(BigInt::zero());
            }
            next[0] += c;
            out = next;
        }
        IntPoly::from_coeffs(out)
    }

    pub fn derivative(&self) -> IntPoly {
        if self.coeffs.len() <= 1 {
            return IntPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigInt::from(k))
            .collect();
        IntPoly::from_coeffs(coeffs)
    }

    pub fn eval_big(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_i128(&self, x: i128) -> Option<i128> {
        let mut acc: i128 = 0;
        for c in self.coeffs.iter().rev() {
            let c = i128::try_from(c).ok()?;
            acc = acc.checked_mul(x)?.checked_add(c)?;
        }
        Some(acc)
    }

    /// `(x + offset)^mult` via the binomial theorem (binomials built by the
    /// exact multiplicative recurrence).
    pub fn binomial_power(offset: u64, mult: u64) -> IntPoly {
        let e = mult as usize;
        let off = BigInt::from(offset);
        let mut coeffs = vec![BigInt::zero(); e + 1];
        // coefficient of x^k is C(e, k) * offset^(e-k)
        let mut binom = BigInt::one();
        let mut offpow = vec![BigInt::one()];
        for _ in 0..e {
            offpow.push(offpow.last().unwrap() * &off);
        }
        for k in 0..=e {
            coeffs[k] = &binom * &offpow[e - k];
            if k < e {
                binom = binom * BigInt::from((e - k) as u64) / BigInt::from((k + 1) as u64);
            }
        }
        IntPoly::from_coeffs(coeffs)
    }

    /// Product of `(x + offset)^mult` factors, folded as a balanced tree so
    /// the big products happen once at the top.
    pub fn from_factors(factors: &[(u64, u64)]) -> IntPoly {
        fn tree(polys: &[IntPoly]) -> IntPoly {
            match polys.len() {
                0 => IntPoly::one(),
                1 => polys[0].clone(),
                n => {
                    let (a, b) = polys.split_at(n / 2);
                    let (l, r) = rayon::join(|| tree(a), || tree(b));
                    l.mul(&r)
                }
            }
        }
        let leaves: Vec<IntPoly> = factors
            .iter()
            .filter(|&&(_, m)| m > 0)
            .map(|&(off, m)| IntPoly::binomial_power(off, m))
            .collect();
        tree(&leaves)
    }

    /// Number of sign variations in the coefficient sequence (Descartes).
    pub fn sign_variations(&self) -> usize {
        let mut vars = 0;
        let mut last = 0i8;
        for c in &self.coeffs {
            let s = if c.is_positive() {
                1
            } else if c.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    vars += 1;
                }
                last = s;
            }
        }
        vars
    }

    /// Smallest nonnegative integer `a` such that `p(x + a)` has no sign
    /// variations, which certifies (Descartes) that `p` has no real root
    /// greater than `a`. Scans upward geometrically, then tightens by
    /// bisection, re-certifying the returned point.
    pub fn real_root_upper_bound(&self) -> Option<u64> {
        if self.is_zero() {
            return None;
        }
        let ok = |a: u64| self.shift_by(a as i64).sign_variations() == 0;
        if ok(0) {
            return Some(0);
        }
        let mut hi = 1u64;
        while !ok(hi) {
            hi = hi.checked_mul(2)?;
        }
        let mut lo = hi / 2; // ok(lo) may be false; invariant: ok(hi) true
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_shifts() {
        // (x + 1)(x + 2) = x^2 + 3x + 2
        let p = IntPoly::linear(1).mul(&IntPoly::linear(2));
        assert_eq!(p, IntPoly::from_i64(&[2, 3, 1]));
        // shift: p(x + 1) = (x + 2)(x + 3) = x^2 + 5x + 6
        assert_eq!(p.shift_by_one(), IntPoly::from_i64(&[6, 5, 1]));
        assert_eq!(p.shift_by(1), IntPoly::from_i64(&[6, 5, 1]));
        assert_eq!(p.shift_by(-1), IntPoly::from_i64(&[0, 1, 1]));
    }

    #[test]
    fn binomial_power_matches_repeated_mul() {
        let direct = IntPoly::binomial_power(3, 5);
        let mut slow = IntPoly::one();
        for _ in 0..5 {
            slow = slow.mul(&IntPoly::linear(3));
        }
        assert_eq!(direct, slow);
    }

    #[test]
    fn factored_expansion() {
        // (x)(x + 2) and (x + 1)^2
        let p = IntPoly::from_factors(&[(0, 1), (2, 1)]);
        let q = IntPoly::from_factors(&[(1, 2)]);
        assert_eq!(p, IntPoly::from_i64(&[0, 2, 1]));
        assert_eq!(q, IntPoly::from_i64(&[1, 2, 1]));
        assert_eq!(q.sub(&p), IntPoly::from_i64(&[1]));
    }

    #[test]
    fn derivative_and_eval() {
        let p = IntPoly::from_i64(&[1, -3, 0, 2]); // 2x^3 - 3x + 1
        assert_eq!(p.derivative(), IntPoly::from_i64(&[-3, 0, 6]));
        assert_eq!(p.eval_big(&BigInt::from(4)), BigInt::from(2 * 64 - 12 + 1));
        assert_eq!(p.eval_i128(4), Some(117));
    }

    #[test]
    fn root_bounds() {
        // 2x + 1: no positive roots
        assert_eq!(IntPoly::from_i64(&[1, 2]).real_root_upper_bound(), Some(0));
        // (x - 10)(x - 3): largest root 10
        let p = IntPoly::from_i64(&[30, -13, 1]);
        let b = p.real_root_upper_bound().unwrap();
        assert!(b >= 10 && b <= 16, "bound {b}");
        assert_eq!(p.shift_by(b as i64).sign_variations(), 0);
    }
}
