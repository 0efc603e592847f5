//! The multiplicative-difference monomial pair `(pi_d, pitilde_d)`, the
//! integer polynomials `P_d, Q_d, R_d` obtained by substituting consecutive
//! arguments, and the phase functions `f_d = log(P_d/Q_d)` with their
//! asymptotic constants and certified monotonicity thresholds.
//!
//! Everything here is exact: exponent vectors are integers, polynomials
//! carry arbitrary-precision coefficients, and the analytic quantities
//! (`K_d`, `L_d`) are leading coefficients read off the exact algebra.

use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::xprec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Largest index for which the exponent vectors are built (they grow like
/// 2^d, so this is a safety rail, not a practical limit).
pub const MAX_PI_INDEX: usize = 40;

/// Largest index for which polynomials are expanded to dense coefficients.
pub const MAX_EXPAND_INDEX: usize = 14;

/// A product of the variables `z_0..z_d` with multiplicities: the exponent
/// vector of `pi_d` or `pitilde_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorMultiset {
    pub d: usize,
    pub exponents: Vec<u64>,
}

impl FactorMultiset {
    pub fn total_degree(&self) -> u64 {
        self.exponents.iter().sum()
    }
}

/// The pair `(pi_d, pitilde_d)` as exponent vectors, built from the
/// recurrence `pi_{d+1}(z_0..z_{d+1}) = pi_d(z_1..z_{d+1}) pitilde_d(z_0..z_d)`
/// (and symmetrically), with base `pi_0 = z_0`, `pitilde_0 = 1`.
pub fn pi_pair(d: usize) -> Result<(FactorMultiset, FactorMultiset)> {
    if d > MAX_PI_INDEX {
        return Err(Error::Resource(format!(
            "pi pair index {d} exceeds the configured maximum {MAX_PI_INDEX}"
        )));
    }
    let mut a: Vec<u64> = vec![1]; // pi_0 = z_0
    let mut b: Vec<u64> = vec![0]; // pitilde_0 = 1
    for k in 0..d {
        let mut na = vec![0u64; k + 2];
        let mut nb = vec![0u64; k + 2];
        for j in 0..=k + 1 {
            let shifted_a = if j >= 1 { a[j - 1] } else { 0 };
            let shifted_b = if j >= 1 { b[j - 1] } else { 0 };
            let plain_a = if j <= k { a[j] } else { 0 };
            let plain_b = if j <= k { b[j] } else { 0 };
            na[j] = shifted_a + plain_b;
            nb[j] = shifted_b + plain_a;
        }
        a = na;
        b = nb;
    }
    Ok((
        FactorMultiset { d, exponents: a },
        FactorMultiset { d, exponents: b },
    ))
}

/// Net exponent vector of `phi_d^ell = (pi_d / pitilde_d)^ell`.
pub fn phi_exponents(d: usize, ell: i64) -> Result<Vec<i64>> {
    let (pi, tilde) = pi_pair(d)?;
    Ok(pi
        .exponents
        .iter()
        .zip(&tilde.exponents)
        .map(|(&x, &y)| ell * (x as i64 - y as i64))
        .collect())
}

/// `P_d`, `Q_d` and `R_d = Q_d - P_d`, exact and in both factored and
/// expanded form.
#[derive(Clone, Debug)]
pub struct PolyTriple {
    pub d: usize,
    pub p: IntPoly,
    pub q: IntPoly,
    pub r: IntPoly,
    /// (root offset j, multiplicity) pairs: `P_d = prod (n + j)^mult`.
    pub p_factors: Vec<(u64, u64)>,
    pub q_factors: Vec<(u64, u64)>,
}

fn factors_of(ms: &FactorMultiset) -> Vec<(u64, u64)> {
    ms.exponents
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e > 0)
        .map(|(j, &e)| (j as u64, e))
        .collect()
}

/// Expands `(P_d, Q_d, R_d)` and verifies the degree law
/// `deg P_d = deg Q_d = 2^{d-1}` and `deg R_d = 2^{d-1} - d` (for d >= 1).
pub fn pq_polynomials(d: usize) -> Result<PolyTriple> {
    if d > MAX_EXPAND_INDEX {
        return Err(Error::Resource(format!(
            "expansion index {d} exceeds the configured maximum {MAX_EXPAND_INDEX}"
        )));
    }
    let (pi, tilde) = pi_pair(d)?;
    let p_factors = factors_of(&pi);
    let q_factors = factors_of(&tilde);
    let p = IntPoly::from_factors(&p_factors);
    let q = IntPoly::from_factors(&q_factors);
    let r = q.sub(&p);
    if d >= 1 {
        let want = 1usize << (d - 1);
        if p.degree() != Some(want) || q.degree() != Some(want) {
            return Err(Error::Invariant(format!(
                "deg P_{d}/Q_{d} != 2^{}",
                d - 1
            )));
        }
        if r.degree() != Some(want - d) {
            return Err(Error::Invariant(format!(
                "deg R_{d} = {:?}, expected {}",
                r.degree(),
                want - d
            )));
        }
    }
    Ok(PolyTriple {
        d,
        p,
        q,
        r,
        p_factors,
        q_factors,
    })
}

/// The phase function `f_d(x) = log(P_d(x)/Q_d(x))` with its exact
/// derivative, asymptotic constants and monotonicity threshold.
#[derive(Clone, Debug)]
pub struct PhaseFunction {
    pub d: usize,
    pub triple: PolyTriple,
    /// `K_d`: `f_d(x) ~ K_d / x^d` (absent for d = 0, where `f_0 = log x`).
    pub k: Option<BigRational>,
    /// `L_d`: `f'_d(x) ~ L_d / x^{d+1}`.
    pub l: BigRational,
    /// `f'_d` is certified monotone on `[h, +inf)`.
    pub h: f64,
    /// Numerator `P' R - P R'` of the exact derivative.
    pub deriv_num: IntPoly,
    /// Denominator `P Q` of the exact derivative.
    pub deriv_den: IntPoly,
}

/// Exact derivative of `f_d` as a rational function
/// `(P' R - P R') / (P Q)`; valid for every d >= 0.
pub fn fd_derivative(triple: &PolyTriple) -> (IntPoly, IntPoly) {
    let num = triple
        .p
        .derivative()
        .mul(&triple.r)
        .sub(&triple.p.mul(&triple.r.derivative()));
    let den = triple.p.mul(&triple.q);
    (num, den)
}

/// `K_d = -lc(R_d)` and `L_d = lc(P' R - P R')`; both nonzero for d >= 1.
pub fn asymptotic_constants(triple: &PolyTriple) -> Result<(BigRational, BigRational)> {
    if triple.d < 1 {
        return Err(Error::Argument("asymptotic constants need d >= 1".into()));
    }
    let lc_r = triple
        .r
        .leading_coeff()
        .ok_or_else(|| Error::Invariant(format!("R_{} is identically zero", triple.d)))?;
    let k = BigRational::from_integer(-lc_r.clone());
    let (num, _) = fd_derivative(triple);
    let lc_n = num
        .leading_coeff()
        .ok_or_else(|| Error::Invariant("derivative numerator is zero".into()))?;
    let l = BigRational::from_integer(lc_n.clone());
    if k.is_zero() || l.is_zero() {
        return Err(Error::Invariant("vanishing asymptotic constant".into()));
    }
    Ok((k, l))
}

/// Certified threshold beyond which `f'_d` is monotone: an upper bound for
/// the largest real zero of the numerator of `f''_d`, clamped to 0 from
/// below since the domain is x > 0 anyway.
pub fn monotone_threshold(triple: &PolyTriple) -> Result<f64> {
    let (a, b) = fd_derivative(triple);
    // f'' = (A' B - A B') / B^2; only the numerator's zeros matter.
    let num = a.derivative().mul(&b).sub(&a.mul(&b.derivative()));
    if num.is_zero() {
        return Err(Error::Invariant("second derivative numerator is zero".into()));
    }
    let bound = num
        .real_root_upper_bound()
        .ok_or_else(|| Error::Invariant("root bound search overflowed".into()))?;
    Ok(bound as f64)
}

impl PhaseFunction {
    pub fn new(d: usize) -> Result<PhaseFunction> {
        let triple = pq_polynomials(d)?;
        let (deriv_num, deriv_den) = fd_derivative(&triple);
        let (k, l) = if d >= 1 {
            let (k, l) = asymptotic_constants(&triple)?;
            (Some(k), l)
        } else {
            let lc = deriv_num
                .leading_coeff()
                .cloned()
                .unwrap_or_else(BigInt::one);
            (None, BigRational::from_integer(lc))
        };
        let h = monotone_threshold(&triple)?;
        Ok(PhaseFunction {
            d,
            triple,
            k,
            l,
            h,
            deriv_num,
            deriv_den,
        })
    }

    /// `f'_d(x)` as an exact rational, for integer `x` in the domain.
    pub fn derivative_at(&self, x: u64) -> BigRational {
        let xb = BigInt::from(x);
        BigRational::new(self.deriv_num.eval_big(&xb), self.deriv_den.eval_big(&xb))
    }

    /// `R_d(x)/P_d(x)` as an exact rational for rational `x > 0`.
    fn ratio_at(&self, x: &BigRational) -> Result<(BigRational, BigRational)> {
        let eval = |factors: &[(u64, u64)]| -> BigRational {
            let mut acc = BigRational::one();
            for &(off, mult) in factors {
                let base = x + BigRational::from_integer(BigInt::from(off));
                for _ in 0..mult {
                    acc *= &base;
                }
            }
            acc
        };
        let p = eval(&self.triple.p_factors);
        let q = eval(&self.triple.q_factors);
        if !p.is_positive() || !q.is_positive() {
            return Err(Error::Domain(format!(
                "x = {x} is not beyond every real zero of P_{} Q_{}",
                self.d, self.d
            )));
        }
        Ok((&q - &p, p))
    }

    /// `f_d(x)` with certified absolute error at most `2^{-precision/2}`.
    ///
    /// Computed as `-log1p(R_d(x)/P_d(x))` on exact rationals, evaluated in
    /// fixed point with 64 guard bits. The f64 rounding of the result is
    /// checked against the contract afterwards; requesting more absolute
    /// accuracy than an f64 of that magnitude can carry is a precision
    /// error.
    pub fn eval(&self, x: f64, precision: u32) -> Result<f64> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::Domain(format!("f_{} undefined at x = {x}", self.d)));
        }
        let xr = BigRational::from_float(x)
            .ok_or_else(|| Error::Domain(format!("x = {x} is not finite")))?;
        let frac_bits = precision + 64;
        let check = |v: f64| -> Result<f64> {
            if v.abs() * 2.0f64.powi(-52) > 2.0f64.powf(-(precision as f64) / 2.0) {
                Err(Error::Precision(format!(
                    "result magnitude {v:e} cannot carry 2^-{}/2 absolute accuracy in an f64",
                    precision
                )))
            } else {
                Ok(v)
            }
        };
        if self.d == 0 {
            // f_0(x) = log x on dyadic x = u/2^v.
            let num = xr.numer().to_biguint().unwrap();
            let den = xr.denom().to_biguint().unwrap();
            let v = xprec::ln_ratio(&num, &den, frac_bits);
            return check(xprec::fixed_to_f64(&v, frac_bits));
        }
        let (r_val, p_val) = self.ratio_at(&xr)?;
        let ratio = &r_val / &p_val;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let v = if num_traits::Signed::abs(&ratio) <= half {
            // -ln(1 + R/P)
            -xprec::ln1p_ratio(ratio.numer(), ratio.denom(), frac_bits)
        } else if ratio > -BigRational::one() {
            // fall back to ln P - ln Q on positive rationals
            let q_val = &p_val + &r_val;
            let pn = p_val.numer().to_biguint().unwrap() * q_val.denom().to_biguint().unwrap();
            let qn = q_val.numer().to_biguint().unwrap() * p_val.denom().to_biguint().unwrap();
            xprec::ln_ratio(&pn, &qn, frac_bits)
        } else {
            return Err(Error::Domain(format!(
                "P_{}(x)/Q_{}(x) <= 0 at x = {x}",
                self.d, self.d
            )));
        };
        check(xprec::fixed_to_f64(&v, frac_bits))
    }
}

// ---------------------------------------------------------------------------
// Serializable dump (CLI output and golden files).
// ---------------------------------------------------------------------------

/// JSON-friendly rendering of one index of the family.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyDump {
    pub d: usize,
    pub p_factors: Vec<(u64, u64)>,
    pub q_factors: Vec<(u64, u64)>,
    pub p_coeffs: Vec<String>,
    pub q_coeffs: Vec<String>,
    pub r_coeffs: Vec<String>,
    pub k: Option<String>,
    pub l: String,
    pub h: f64,
}

pub fn dump(d: usize) -> Result<PolyDump> {
    let pf = PhaseFunction::new(d)?;
    let render = |p: &IntPoly| p.coeffs().iter().map(|c| c.to_string()).collect();
    Ok(PolyDump {
        d,
        p_factors: pf.triple.p_factors.clone(),
        q_factors: pf.triple.q_factors.clone(),
        p_coeffs: render(&pf.triple.p),
        q_coeffs: render(&pf.triple.q),
        r_coeffs: render(&pf.triple.r),
        k: pf.k.as_ref().map(|k| k.to_string()),
        l: pf.l.to_string(),
        h: pf.h,
    })
}

/// `x^d * f_d(x)` for large x, used as the series oracle for `K_d`.
/// Working precision scales with `d log2 x` so the tiny tail values keep
/// enough mantissa after the fixed-point evaluation.
pub fn scaled_tail_value(pf: &PhaseFunction, x: f64) -> Result<f64> {
    let precision = (pf.d as f64 * x.log2()) as u32 + 60;
    Ok(pf.eval(x, precision)? * x.powi(pf.d as i32))
}
