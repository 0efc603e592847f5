//! The unipotent coordinate systems: exact 0/1 moment oracle, sample paths,
//! torus maps with binomial closed forms, strong stationarity, independence
//! sweeps and the quasi-eigenfunction product relation.
//!
//! Sample phases live in 128-bit fixed point, and the binomial weights are
//! accumulated modulo 2^128, so every algebraic relation that cancels
//! symbolically cancels exactly in the samples. That is what lets the tests
//! assert identities like "this product of coordinates equals 1" at 1e-9
//! rather than hoping float noise stays small.

use crate::error::{Error, Result};
use crate::xprec::Phase;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

// ---------------------------------------------------------------------------
// Moment specifications.
// ---------------------------------------------------------------------------

/// A finite pattern of (lag, exponent) pairs, representing the mixed moment
/// `E[prod Z_{lag}^{exp}]` of a stationary process.
///
/// Normalized form: lags strictly increasing, duplicate lags merged by
/// summing exponents, zero exponents dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MomentSpec {
    terms: Vec<(u64, i64)>,
}

impl MomentSpec {
    pub fn new(terms: impl IntoIterator<Item = (u64, i64)>) -> Self {
        let mut v: Vec<(u64, i64)> = terms.into_iter().collect();
        v.sort_unstable_by_key(|&(lag, _)| lag);
        let mut out: Vec<(u64, i64)> = Vec::with_capacity(v.len());
        for (lag, e) in v {
            match out.last_mut() {
                Some((l, acc)) if *l == lag => *acc += e,
                _ => out.push((lag, e)),
            }
        }
        out.retain(|&(_, e)| e != 0);
        MomentSpec { terms: out }
    }

    pub fn terms(&self) -> &[(u64, i64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_lag(&self) -> u64 {
        self.terms.last().map_or(0, |&(l, _)| l)
    }

    pub fn total_abs_exponent(&self) -> u64 {
        self.terms.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    /// The spec with every lag multiplied by `r`.
    pub fn dilate(&self, r: u64) -> MomentSpec {
        MomentSpec::new(self.terms.iter().map(|&(l, e)| (l * r, e)))
    }

    /// All lags collapsed to zero (exponents summed).
    pub fn collapse(&self) -> MomentSpec {
        let total: i64 = self.terms.iter().map(|&(_, e)| e).sum();
        MomentSpec::new([(0u64, total)])
    }
}

// ---------------------------------------------------------------------------
// The exact moment oracle.
// ---------------------------------------------------------------------------

/// Binomial coefficient `C(n, k)` as a `BigInt`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::from(1u8);
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The shift-invariant measure with `d + 1` independent uniform coordinates
/// and everything beyond determined; its mixed moments are exactly 0 or 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UnipotentMeasure {
    pub d: usize,
}

impl UnipotentMeasure {
    pub fn new(d: usize) -> Self {
        UnipotentMeasure { d }
    }

    /// `E[prod Z_{s_i}^{j_i}] = 1` iff `sum_i j_i C(s_i, l) = 0` for every
    /// order `l in 0..=d`, else 0. Exact integer arithmetic.
    pub fn moment_is_one(&self, spec: &MomentSpec) -> bool {
        self.first_violated_order(spec).is_none()
    }

    /// Smallest order `l >= 0` with `sum_i j_i C(s_i, l) != 0`, if any.
    /// (Orders beyond `d` do not matter for this measure; callers that need
    /// the unrestricted value use `first_violated_order_unbounded`.)
    pub fn first_violated_order(&self, spec: &MomentSpec) -> Option<usize> {
        (0..=self.d).find(|&l| !constraint_sum(spec, l as u64).is_zero())
    }

    pub fn moment(&self, spec: &MomentSpec) -> Complex64 {
        if self.moment_is_one(spec) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

fn constraint_sum(spec: &MomentSpec, order: u64) -> BigInt {
    spec.terms()
        .iter()
        .map(|&(lag, e)| binomial(lag, order) * BigInt::from(e))
        .sum()
}

/// First order `l` (unbounded) at which the binomial constraint fails; for a
/// nontrivial normalized spec this is at most the largest lag.
pub fn first_violated_order_unbounded(spec: &MomentSpec) -> Option<u64> {
    if spec.is_empty() {
        return None;
    }
    let cap = spec.max_lag() + 1;
    (0..=cap).find(|&l| !constraint_sum(spec, l).is_zero())
}

/// Power-sum form of the same criterion: `sum_i j_i s_i^l = 0` for all
/// `l in 0..=d`. Equivalent to the binomial form through the triangular
/// basis change between `{C(s, l)}_l` and `{s^l}_l`.
pub fn powersum_equivalent(spec: &MomentSpec, d: usize) -> bool {
    (0..=d as u64).all(|l| {
        spec.terms()
            .iter()
            .map(|&(lag, e)| BigInt::from(lag).pow(l as u32) * BigInt::from(e))
            .sum::<BigInt>()
            .is_zero()
    })
}

/// Strong stationarity of the 0/1 moments: dilating every lag by `r`
/// preserves the moment. Always true for these measures; exposed as a
/// regression check.
pub fn strong_stationarity_check(d: usize, spec: &MomentSpec, r: u64) -> bool {
    let m = UnipotentMeasure::new(d);
    m.moment_is_one(spec) == m.moment_is_one(&spec.dilate(r))
}

// ---------------------------------------------------------------------------
// Counter-based RNG.
// ---------------------------------------------------------------------------

/// Stateless counter-based generator: every output is a pure function of
/// (seed, counter, stream), so sampling parallelizes without coordination
/// and reruns are bit-identical.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    pub seed: u64,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn u64_at(&self, counter: u64, stream: u64) -> u64 {
        let mixed = splitmix(self.seed ^ splitmix(counter ^ splitmix(stream)));
        splitmix(mixed.wrapping_add(0xD1B5_4A32_D192_ED03))
    }

    /// A uniform phase in [0, 1) with 128 random fractional bits.
    pub fn phase_at(&self, counter: u64, stream: u64) -> Phase {
        let hi = self.u64_at(counter, 2 * stream) as u128;
        let lo = self.u64_at(counter, 2 * stream + 1) as u128;
        Phase((hi << 64) | lo)
    }

    /// Uniform in [0, bound) by multiply-shift.
    pub fn below(&self, counter: u64, stream: u64, bound: u64) -> u64 {
        ((self.u64_at(counter, stream) as u128 * bound as u128) >> 64) as u64
    }
}

// ---------------------------------------------------------------------------
// Sampling.
// ---------------------------------------------------------------------------

/// One sample path `Z_0, ..., Z_{length-1}` of the `d`-th system, as exact
/// phases: `Z_n = e^{2 pi i sum_{j <= min(n, d)} C(n, j) X_j}` with the
/// `X_j` independent uniforms.
///
/// The binomial rows are maintained with Pascal's rule modulo 2^128, which
/// keeps the scaling of each `X_j` exact however large `C(n, j)` grows.
pub fn sample_phases(d: usize, length: u64, rng: &CounterRng, sample_idx: u64) -> Vec<Phase> {
    let x: Vec<Phase> = (0..=d as u64)
        .map(|j| rng.phase_at(sample_idx, j))
        .collect();
    let mut out = Vec::with_capacity(length as usize);
    // row[j] = C(n, j) mod 2^128 for the current n
    let mut row = vec![0u128; d + 1];
    row[0] = 1;
    for _ in 0..length {
        let mut z = Phase::ZERO;
        for (j, &xj) in x.iter().enumerate() {
            z = z.add(xj.scale_u128(row[j]));
        }
        out.push(z);
        // advance Pascal's row: C(n+1, j) = C(n, j) + C(n, j-1)
        for j in (1..=d).rev() {
            row[j] = row[j].wrapping_add(row[j - 1]);
        }
    }
    out
}

/// Unit-complex sample path (convenience over [`sample_phases`]).
pub fn sample_nu_d(d: usize, length: u64, seed: u64, sample_idx: u64) -> Vec<Complex64> {
    let rng = CounterRng::new(seed);
    sample_phases(d, length, &rng, sample_idx)
        .into_iter()
        .map(Phase::to_complex)
        .collect()
}

// ---------------------------------------------------------------------------
// Torus maps.
// ---------------------------------------------------------------------------

/// A point of the finite-dimensional torus carrying the unipotent map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPoint {
    /// Coordinates `(x_1, ..., x_k)`; `coords[0]` is the invariant one.
    pub coords: Vec<Phase>,
}

impl TorusPoint {
    pub fn new(coords: Vec<Phase>) -> Self {
        TorusPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// One step of the unipotent map
/// `(x_1, ..., x_k) -> (x_1, x_1 + x_2, ..., x_{k-1} + x_k)`, exact mod 1.
pub fn td_apply(p: &TorusPoint) -> TorusPoint {
    let k = p.dim();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        if j == 0 {
            out.push(p.coords[0]);
        } else {
            out.push(p.coords[j - 1].add(p.coords[j]));
        }
    }
    TorusPoint::new(out)
}

/// The `r`-th iterate in closed form: coordinate `j` (1-based) becomes
/// `sum_{i <= j} C(r, j - i) x_i`, with exact big-integer binomials reduced
/// modulo one turn.
pub fn td_power(p: &TorusPoint, r: u64) -> TorusPoint {
    let k = p.dim();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut acc = Phase::ZERO;
        for i in 0..=j {
            let c = binomial(r, (j - i) as u64);
            let c_mod = mod_2_128(&c);
            acc = acc.add(p.coords[i].scale_u128(c_mod));
        }
        out.push(acc);
    }
    TorusPoint::new(out)
}

fn mod_2_128(v: &BigInt) -> u128 {
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    let modulus = BigInt::from(1u8) << 128;
    v.mod_floor(&modulus).to_u128().unwrap()
}

// ---------------------------------------------------------------------------
// Sample-based checks.
// ---------------------------------------------------------------------------

/// Verifies the product relation `prod_l Z_{n+l} (l in lhs) = prod_l Z_{n+l}
/// (l in rhs)` along a sample, given that the two lag multisets share power
/// sums up to order `d` (checked exactly first).
pub fn quasi_eigen_relation_check(
    sample: &[Phase],
    d: usize,
    lhs: &[u64],
    rhs: &[u64],
    tol: f64,
) -> Result<bool> {
    if lhs.len() != rhs.len() {
        return Err(Error::Argument("lag multisets must have equal size".into()));
    }
    for j in 0..=d as u32 {
        let ps = |set: &[u64]| -> BigInt {
            set.iter().map(|&l| BigInt::from(l).pow(j)).sum()
        };
        if ps(lhs) != ps(rhs) {
            return Err(Error::Argument(format!(
                "power sums of order {j} differ: {} vs {}",
                ps(lhs),
                ps(rhs)
            )));
        }
    }
    let max_lag = lhs.iter().chain(rhs).copied().max().unwrap_or(0);
    if sample.len() as u64 <= max_lag {
        return Err(Error::Argument("sample shorter than the largest lag".into()));
    }
    let shifts = sample.len() as u64 - max_lag;
    for n in 0..shifts {
        let mut delta = Phase::ZERO;
        for &l in lhs {
            delta = delta.add(sample[(n + l) as usize]);
        }
        for &l in rhs {
            delta = delta.sub(sample[(n + l) as usize]);
        }
        if delta.chord() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Ensemble mixed moment `(1/S) sum_samples prod_t Z_{lag_t}^{e_t}` over
/// freshly drawn sample paths. Deterministic given the seed.
pub fn ensemble_moment(
    d: usize,
    spec: &MomentSpec,
    n_samples: u64,
    seed: u64,
) -> Complex64 {
    let rng = CounterRng::new(seed);
    let len = spec.max_lag() + 1;
    let total: Complex64 = (0..n_samples)
        .into_par_iter()
        .fold(
            || Complex64::new(0.0, 0.0),
            |acc, idx| {
                let phases = sample_phases(d, len, &rng, idx);
                let mut phi = Phase::ZERO;
                for &(lag, e) in spec.terms() {
                    phi = phi.add(phases[lag as usize].scale_i64(e));
                }
                acc + phi.to_complex()
            },
        )
        .reduce(|| Complex64::new(0.0, 0.0), |a, b| a + b);
    total / n_samples as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceEntry {
    pub exponents: Vec<i64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub d: usize,
    pub window: usize,
    pub max_exponent: i64,
    pub n_samples: u64,
    pub seed: u64,
    pub threshold: f64,
    pub max_magnitude: f64,
    pub pass: bool,
    /// The offending moments when the check fails (empty on pass).
    pub violations: Vec<IndependenceEntry>,
}

/// Monte-Carlo independence sweep: all mixed moments over a window of
/// consecutive coordinates, exponents bounded by `max_exp`, at least one
/// nonzero. For `window <= d + 1` the exact moments are all zero and the
/// empirical ones must sit inside Monte-Carlo noise.
pub fn independence_report(
    d: usize,
    window: usize,
    max_exp: i64,
    n_samples: u64,
    seed: u64,
    threshold: f64,
) -> Result<IndependenceReport> {
    if window > d + 1 {
        return Err(Error::Argument(format!(
            "window {window} exceeds d + 1 = {}; consecutive coordinates are only {}-wise independent",
            d + 1,
            d + 1
        )));
    }
    if max_exp < 0 {
        return Err(Error::Argument("max exponent must be >= 0".into()));
    }
    // Pre-draw the sample phase matrix once.
    let rng = CounterRng::new(seed);
    let samples: Vec<Vec<Phase>> = (0..n_samples)
        .into_par_iter()
        .map(|idx| sample_phases(d, window as u64, &rng, idx))
        .collect();
    // Enumerate exponent vectors.
    let base = (2 * max_exp + 1) as u64;
    let count = base.pow(window as u32);
    let entries: Vec<IndependenceEntry> = (1..count)
        .into_par_iter()
        .filter_map(|code| {
            let mut exps = Vec::with_capacity(window);
            let mut c = code;
            for _ in 0..window {
                exps.push((c % base) as i64 - max_exp);
                c /= base;
            }
            if exps.iter().all(|&e| e == 0) {
                return None;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for sample in &samples {
                let mut phi = Phase::ZERO;
                for (j, &e) in exps.iter().enumerate() {
                    phi = phi.add(sample[j].scale_i64(e));
                }
                acc += phi.to_complex();
            }
            let magnitude = (acc / n_samples as f64).norm();
            Some(IndependenceEntry {
                exponents: exps,
                magnitude,
            })
        })
        .collect();
    let max_magnitude = entries.iter().map(|e| e.magnitude).fold(0.0, f64::max);
    let pass = max_magnitude <= threshold;
    let violations = if pass {
        Vec::new()
    } else {
        entries
            .into_iter()
            .filter(|e| e.magnitude > threshold)
            .collect()
    };
    Ok(IndependenceReport {
        d,
        window,
        max_exponent: max_exp,
        n_samples,
        seed,
        threshold,
        max_magnitude,
        pass,
        violations,
    })
}
