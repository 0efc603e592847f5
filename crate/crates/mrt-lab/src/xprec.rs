//! Fixed-point angle arithmetic and an extended-precision logarithm kernel.
//!
//! Angles are stored as [`Phase`]: a fraction of a full turn with 128
//! fractional bits. Adding phases and scaling a phase by an integer are
//! exact operations modulo one turn, which is what makes the algebraic
//! identities between products of unit-complex values machine-checkable:
//! an integer combination of stored phases that cancels symbolically
//! cancels bit-for-bit here.
//!
//! Feeding a `Phase` requires logarithms far beyond f64 accuracy
//! (`s * log p` reaches ~2^44 while the phase must be good to well below
//! 2^-32 after reduction). The kernel below computes `ln`, `pi` and
//! friends on `BigInt` mantissas with a fixed number of fractional bits,
//! using the atanh series for `ln` and Machin's formula for `pi`. Every
//! primitive rounds by at most one unit in the last place, and series
//! tails are cut only when the next term underflows the mantissa, so with
//! 32 guard bits the results are certified to the target precision.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::f64::consts::TAU;
use std::sync::Mutex;

/// An angle as a fraction of a turn in [0, 1) with 128 fractional bits.
///
/// The represented value is `self.0 / 2^128` turns. All arithmetic wraps
/// modulo one turn exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Phase(pub u128);

impl Phase {
    pub const ZERO: Phase = Phase(0);
    /// Half a turn.
    pub const HALF: Phase = Phase(1u128 << 127);

    /// Wrapping sum modulo one turn.
    #[inline]
    pub fn add(self, rhs: Phase) -> Phase {
        Phase(self.0.wrapping_add(rhs.0))
    }

    /// Wrapping difference modulo one turn.
    #[inline]
    pub fn sub(self, rhs: Phase) -> Phase {
        Phase(self.0.wrapping_sub(rhs.0))
    }

    #[inline]
    pub fn neg(self) -> Phase {
        Phase(self.0.wrapping_neg())
    }

    /// Exact scaling by a nonnegative integer, modulo one turn.
    #[inline]
    pub fn scale_u64(self, k: u64) -> Phase {
        Phase(self.0.wrapping_mul(k as u128))
    }

    /// Exact scaling by a signed integer, modulo one turn.
    #[inline]
    pub fn scale_i64(self, k: i64) -> Phase {
        if k >= 0 {
            self.scale_u64(k as u64)
        } else {
            self.scale_u64(k.unsigned_abs()).neg()
        }
    }

    /// Exact scaling by `k mod 2^128`, modulo one turn.
    #[inline]
    pub fn scale_u128(self, k: u128) -> Phase {
        Phase(self.0.wrapping_mul(k))
    }

    /// The angle in turns as an f64 in [0, 1).
    #[inline]
    pub fn turns(self) -> f64 {
        self.0 as f64 * 2.0f64.powi(-128)
    }

    /// The angle in radians in [0, 2*pi).
    #[inline]
    pub fn radians(self) -> f64 {
        self.turns() * TAU
    }

    /// Distance to the nearest whole turn, in turns (range [0, 1/2]).
    #[inline]
    pub fn dist_to_integer_turns(self) -> f64 {
        let down = self.0;
        let up = self.0.wrapping_neg();
        down.min(up) as f64 * 2.0f64.powi(-128)
    }

    /// Chord length `|e^{i 2 pi phase} - 1| = 2 sin(pi * dist)`.
    #[inline]
    pub fn chord(self) -> f64 {
        2.0 * (std::f64::consts::PI * self.dist_to_integer_turns()).sin()
    }

    /// The unit-complex value `e^{i 2 pi phase}`.
    #[inline]
    pub fn to_complex(self) -> num_complex::Complex64 {
        let (s, c) = self.radians().sin_cos();
        num_complex::Complex64::new(c, s)
    }

    /// Builds a phase from the fractional part of a fixed-point value with
    /// `frac_bits >= 128` fractional bits. Truncation error is below 2^-128.
    pub fn from_fixed_frac(v: &BigInt, frac_bits: u32) -> Phase {
        assert!(frac_bits >= 128);
        let modulus = BigInt::from(1u8) << frac_bits;
        let frac = v.mod_floor(&modulus);
        let top: BigUint = (frac >> (frac_bits - 128)).to_biguint().unwrap();
        Phase(top.to_u128().unwrap())
    }
}

// ---------------------------------------------------------------------------
// Fixed-point kernel: values are BigInt mantissas scaled by 2^frac_bits.
// ---------------------------------------------------------------------------

/// Floor-rounded fixed-point product. Error at most 1 ulp toward -inf.
fn mul_fixed(a: &BigInt, b: &BigInt, frac_bits: u32) -> BigInt {
    (a * b) >> frac_bits
}

/// Truncating fixed-point quotient. Error at most 1 ulp toward zero.
fn div_fixed(a: &BigInt, b: &BigInt, frac_bits: u32) -> BigInt {
    (a << frac_bits) / b
}

/// `2 * atanh(t)` for a fixed-point `t` with `|t| <= 0.36`, via the series
/// `2 * sum t^{2k+1} / (2k+1)`. Stops when the next term underflows.
fn atanh2_series(t: &BigInt, frac_bits: u32) -> BigInt {
    let t2 = mul_fixed(t, t, frac_bits);
    let mut power = t.clone();
    let mut acc = t.clone();
    let mut k: u32 = 1;
    let ulp = BigUint::from(1u8);
    loop {
        power = mul_fixed(&power, &t2, frac_bits);
        // floor rounding can pin a negative value at -1 ulp; stop once the
        // term is at the rounding noise level
        if power.magnitude() <= &ulp {
            break;
        }
        acc += &power / BigInt::from(2 * k + 1);
        k += 1;
        // |t| <= 0.36 guarantees geometric decay; this cap is unreachable.
        assert!(k < 4 * frac_bits, "atanh series failed to converge");
    }
    acc * 2
}

/// `atan(1/q)` in fixed point for integer `q >= 2`.
fn atan_inv(q: u64, frac_bits: u32) -> BigInt {
    let q2 = BigInt::from(q) * BigInt::from(q);
    let mut power = (BigInt::from(1u8) << frac_bits) / BigInt::from(q);
    let mut acc = power.clone();
    let mut k: u32 = 1;
    loop {
        power = &power / &q2;
        if power.is_zero() {
            break;
        }
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
        k += 1;
    }
    acc
}

/// `pi` in fixed point, by Machin's formula `pi = 16 atan(1/5) - 4 atan(1/239)`.
fn compute_pi(frac_bits: u32) -> BigInt {
    atan_inv(5, frac_bits) * 16 - atan_inv(239, frac_bits) * 4
}

/// `ln 2` in fixed point: `2 atanh(1/3)`.
fn compute_ln2(frac_bits: u32) -> BigInt {
    let third = (BigInt::from(1u8) << frac_bits) / BigInt::from(3u8);
    atanh2_series(&third, frac_bits)
}

struct ConstCache {
    frac_bits: u32,
    pi: BigInt,
    ln2: BigInt,
}

static CONSTS: Mutex<Vec<ConstCache>> = Mutex::new(Vec::new());

fn with_consts<R>(frac_bits: u32, f: impl FnOnce(&BigInt, &BigInt) -> R) -> R {
    let mut cache = CONSTS.lock().unwrap();
    if let Some(c) = cache.iter().find(|c| c.frac_bits == frac_bits) {
        return f(&c.pi, &c.ln2);
    }
    let entry = ConstCache {
        frac_bits,
        pi: compute_pi(frac_bits),
        ln2: compute_ln2(frac_bits),
    };
    let r = f(&entry.pi, &entry.ln2);
    cache.push(entry);
    r
}

/// `pi` as a fixed-point mantissa with `frac_bits` fractional bits.
pub fn pi_fixed(frac_bits: u32) -> BigInt {
    with_consts(frac_bits, |pi, _| pi.clone())
}

/// `ln n` for a positive integer, in fixed point.
///
/// Reduces to `ln(n / 2^k) + k ln 2` with the mantissa in [1, 2), then
/// applies the atanh series. Certified to a few ulps at `frac_bits`.
pub fn ln_fixed_u(n: &BigUint, frac_bits: u32) -> BigInt {
    assert!(!n.is_zero(), "ln of zero");
    let k = n.bits() - 1; // n / 2^k in [1, 2)
    let n = BigInt::from(n.clone());
    // m = n * 2^(frac_bits - k), exact when frac_bits >= k
    let m = if frac_bits as u64 >= k {
        n << (frac_bits as u64 - k)
    } else {
        n >> (k - frac_bits as u64)
    };
    let one = BigInt::from(1u8) << frac_bits;
    let num = &m - &one;
    let den = &m + &one;
    let t = div_fixed(&num, &den, frac_bits);
    let ln_m = atanh2_series(&t, frac_bits);
    with_consts(frac_bits, |_, ln2| ln_m + ln2 * BigInt::from(k))
}

/// `ln(a/b)` for positive integers, in fixed point.
pub fn ln_ratio(a: &BigUint, b: &BigUint, frac_bits: u32) -> BigInt {
    ln_fixed_u(a, frac_bits) - ln_fixed_u(b, frac_bits)
}

/// `ln(1 + num/den)` for an exact rational with `|num/den| < 1/2`, in fixed
/// point, via `2 atanh(num / (2 den + num))`.
pub fn ln1p_ratio(num: &BigInt, den: &BigInt, frac_bits: u32) -> BigInt {
    assert!(den.is_positive(), "ln1p_ratio: denominator must be positive");
    assert!(
        num.magnitude() * 2u8 <= *den.magnitude(),
        "ln1p_ratio: |num/den| must be <= 1/2"
    );
    let t_den = den * 2 + num;
    let t = div_fixed(num, &t_den, frac_bits);
    atanh2_series(&t, frac_bits)
}

/// `frac(ln n / (2 pi))` as a [`Phase`], computed at `frac_bits` working
/// precision (default callers use 192, leaving 64 guard bits).
pub fn ln_over_2pi_phase(n: u64, frac_bits: u32) -> Phase {
    let ln_n = ln_fixed_u(&BigUint::from(n), frac_bits);
    let two_pi = pi_fixed(frac_bits) << 1;
    let ratio = div_fixed(&ln_n, &two_pi, frac_bits);
    Phase::from_fixed_frac(&ratio, frac_bits)
}

/// Reduces a fixed-point value modulo `2 pi`, returning radians in [0, 2*pi).
pub fn reduce_mod_2pi(v: &BigInt, frac_bits: u32) -> f64 {
    let two_pi = pi_fixed(frac_bits) << 1;
    let r = v.mod_floor(&two_pi);
    fixed_to_f64(&r, frac_bits)
}

/// Converts a fixed-point value to f64 (rounding to nearest representable).
pub fn fixed_to_f64(v: &BigInt, frac_bits: u32) -> f64 {
    // f64 conversion of BigInt is exact up to 53 significant bits, then the
    // power-of-two scale commutes with the division.
    let (sign, mag) = (v.sign(), v.magnitude());
    let bits = mag.bits();
    let x = if bits <= 63 {
        mag.to_u64().unwrap() as f64 * 2.0f64.powi(-(frac_bits as i32))
    } else {
        let shift = bits - 63;
        let top = (mag >> shift).to_u64().unwrap() as f64;
        top * 2.0f64.powi(shift as i32 - frac_bits as i32)
    };
    if sign == num_bigint::Sign::Minus {
        -x
    } else {
        x
    }
}

/// Default working precision (fractional bits) for phase construction.
pub const DEFAULT_FRAC_BITS: u32 = 192;
