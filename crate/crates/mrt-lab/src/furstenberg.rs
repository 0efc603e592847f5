//! Empirical measures of arithmetic functions and their moment statistics:
//! Cesaro and logarithmic averaging, the truncated weak-* metric against
//! analytic oracles, the quasi-genericity criterion statistics, short
//! interval means and slow-variation diagnostics.

use crate::accum;
use crate::error::{Error, Result};
use crate::polyfam::phi_exponents;
use crate::seq::UnitSeq;
use crate::unipotent::{first_violated_order_unbounded, MomentSpec, UnipotentMeasure};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

/// Weighting of the empirical measure over the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weighting {
    /// Uniform weights 1/N.
    Cesaro,
    /// Weights (1/n) / L_N with L_N the harmonic number.
    Logarithmic,
}

/// Anything that can produce the mixed moment attached to a [`MomentSpec`].
pub trait MomentOracle: Sync {
    fn moment(&self, spec: &MomentSpec) -> Complex64;
}

impl MomentOracle for UnipotentMeasure {
    fn moment(&self, spec: &MomentSpec) -> Complex64 {
        UnipotentMeasure::moment(self, spec)
    }
}

/// Windowed empirical averager over a unit-circle sequence.
pub struct EmpiricalAverager<'a> {
    seq: &'a dyn UnitSeq,
    n: u64,
    weighting: Weighting,
}

/// `L_N = 1 + 1/2 + ... + 1/N`.
pub fn harmonic(n: u64) -> f64 {
    accum::sum_real(1, n, |k| 1.0 / k as f64)
}

impl<'a> EmpiricalAverager<'a> {
    pub fn new(seq: &'a dyn UnitSeq, n: u64, weighting: Weighting) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("window must be >= 1".into()));
        }
        Ok(EmpiricalAverager { seq, n, weighting })
    }

    pub fn window(&self) -> u64 {
        self.n
    }

    /// Weighted average of `prod_t u(n + lag_t)^{e_t}` over `n in [1, N]`.
    pub fn moment(&self, spec: &MomentSpec) -> Result<Complex64> {
        let max_lag = spec.max_lag();
        if let Some(m) = self.seq.max_index() {
            if self.n + max_lag > m {
                return Err(Error::Argument(format!(
                    "window {} + lag {} exceeds sequence length {}",
                    self.n, max_lag, m
                )));
            }
        }
        let term = |n: u64| -> Complex64 {
            let mut phase = 0.0f64;
            for &(lag, e) in spec.terms() {
                phase += e as f64 * self.seq.phase_turns(n + lag);
            }
            let (s, c) = (phase.fract() * TAU).sin_cos();
            Complex64::new(c, s)
        };
        match self.weighting {
            Weighting::Cesaro => {
                Ok(accum::sum_complex(1, self.n, term) / self.n as f64)
            }
            Weighting::Logarithmic => {
                let l_n = harmonic(self.n);
                Ok(accum::sum_complex(1, self.n, |n| term(n) / n as f64) / l_n)
            }
        }
    }
}

impl MomentOracle for EmpiricalAverager<'_> {
    fn moment(&self, spec: &MomentSpec) -> Complex64 {
        EmpiricalAverager::moment(self, spec).expect("moment window overflow")
    }
}

/// Plain Cesaro empirical moment at window `n` (convenience).
pub fn empirical_moment(seq: &dyn UnitSeq, n: u64, spec: &MomentSpec) -> Result<Complex64> {
    EmpiricalAverager::new(seq, n, Weighting::Cesaro)?.moment(spec)
}

// ---------------------------------------------------------------------------
// The criterion statistics.
// ---------------------------------------------------------------------------

/// `(1/N) sum_{n <= N} phi_d^l(u(n), ..., u(n+d))`, the statistic whose
/// limits identify the unipotent measures: the `d+1`-st at exponent 1 must
/// head to 1 while every power of the `d`-th heads to 0.
pub fn phi_statistic(seq: &dyn UnitSeq, d: usize, ell: i64, n: u64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Argument("window must be >= 1".into()));
    }
    if let Some(m) = seq.max_index() {
        if n + d as u64 > m {
            return Err(Error::Argument(format!(
                "window {n} + {d} exceeds sequence length {m}"
            )));
        }
    }
    let exps = phi_exponents(d, ell)?;
    let sum = accum::sum_complex(1, n, |k| {
        let mut phase = 0.0f64;
        for (j, &e) in exps.iter().enumerate() {
            if e != 0 {
                phase += e as f64 * seq.phase_turns(k + j as u64);
            }
        }
        let (s, c) = (phase.fract() * TAU).sin_cos();
        Complex64::new(c, s)
    });
    Ok(sum / n as f64)
}

/// Report of the two-sided quasi-genericity criterion at finite scale.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub d: usize,
    pub n: u64,
    pub ell_max: i64,
    pub tol: f64,
    /// `phi_{d+1}` statistic at exponent 1 (should approach 1).
    pub hyp1_re: f64,
    pub hyp1_im: f64,
    /// `|hyp1 - 1|`.
    pub hyp1_deviation: f64,
    /// `|phi_d^l|` for l = 1..=ell_max (should approach 0).
    pub hyp2_magnitudes: Vec<f64>,
    pub hyp2_max: f64,
    pub pass: bool,
}

/// Runs both halves of the criterion on a window of length `n`.
pub fn criterion_check(
    seq: &dyn UnitSeq,
    d: usize,
    n: u64,
    ell_max: i64,
    tol: f64,
) -> Result<CriterionReport> {
    let hyp1 = phi_statistic(seq, d + 1, 1, n)?;
    let hyp1_deviation = (hyp1 - Complex64::new(1.0, 0.0)).norm();
    let mut hyp2 = Vec::new();
    for ell in 1..=ell_max {
        hyp2.push(phi_statistic(seq, d, ell, n)?.norm());
    }
    let hyp2_max = hyp2.iter().copied().fold(0.0, f64::max);
    Ok(CriterionReport {
        d,
        n,
        ell_max,
        tol,
        hyp1_re: hyp1.re,
        hyp1_im: hyp1.im,
        hyp1_deviation,
        hyp2_magnitudes: hyp2,
        hyp2_max,
        pass: hyp1_deviation <= tol && hyp2_max <= tol,
    })
}

// ---------------------------------------------------------------------------
// The truncated weak-* metric.
// ---------------------------------------------------------------------------

/// Enumeration and depth of the metric
/// `Delta(nu, kappa) = sum_j 2^{-j} |int f_j dnu - int f_j dkappa|`.
///
/// The `f_j` are moment monomials in a fixed, versioned order: sorted by
/// (max lag, total absolute exponent, lexicographic terms), drawn from a
/// bounded box that comfortably covers the default depth.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaConfig {
    pub depth: usize,
    pub max_lag: u64,
    pub max_total_exp: u64,
    pub version: u32,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig {
            depth: 40,
            max_lag: 8,
            max_total_exp: 6,
            version: 1,
        }
    }
}

impl DeltaConfig {
    /// The first `depth` moment specs in canonical order.
    pub fn enumeration(&self) -> Vec<MomentSpec> {
        let mut all: Vec<MomentSpec> = Vec::new();
        // every nonempty subset of lags in [0, max_lag] ... bounded by the
        // box; generated as (lag set, exponent assignment) pairs
        let lags: Vec<u64> = (0..=self.max_lag).collect();
        let mut subsets: Vec<Vec<u64>> = vec![Vec::new()];
        for &l in &lags {
            let mut next = subsets.clone();
            for s in &subsets {
                let mut t = s.clone();
                t.push(l);
                if t.len() <= 4 {
                    next.push(t);
                }
            }
            subsets = next;
        }
        for set in subsets.iter().filter(|s| !s.is_empty()) {
            // exponent assignments with 0 < sum |e| <= max_total_exp
            let k = set.len();
            let mut assignments: Vec<Vec<i64>> = vec![Vec::new()];
            for _ in 0..k {
                let mut next = Vec::new();
                for a in &assignments {
                    let used: u64 = a.iter().map(|e| e.unsigned_abs()).sum();
                    for e in -(self.max_total_exp as i64)..=(self.max_total_exp as i64) {
                        if e == 0 {
                            continue;
                        }
                        if used + e.unsigned_abs() <= self.max_total_exp {
                            let mut b = a.clone();
                            b.push(e);
                            next.push(b);
                        }
                    }
                }
                assignments = next;
            }
            for a in assignments {
                let spec = MomentSpec::new(set.iter().copied().zip(a.iter().copied()));
                if !spec.is_empty() {
                    all.push(spec);
                }
            }
        }
        all.sort_by(|x, y| {
            (x.max_lag(), x.total_abs_exponent(), x.terms().to_vec()).cmp(&(
                y.max_lag(),
                y.total_abs_exponent(),
                y.terms().to_vec(),
            ))
        });
        all.dedup();
        all.truncate(self.depth);
        all
    }

    /// Bound on the discarded tail: every term of the metric is at most 2.
    pub fn tail_bound(&self) -> f64 {
        2.0f64.powi(-(self.depth as i32) + 1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaResult {
    pub value: f64,
    pub tail_bound: f64,
    pub depth: usize,
}

/// Truncated metric between two moment oracles (either may be empirical).
pub fn delta_distance(
    a: &dyn MomentOracle,
    b: &dyn MomentOracle,
    cfg: &DeltaConfig,
) -> DeltaResult {
    let mut acc = accum::Neumaier::default();
    for (j, spec) in cfg.enumeration().iter().enumerate() {
        let w = 2.0f64.powi(-(j as i32) - 1);
        acc.add(w * (a.moment(spec) - b.moment(spec)).norm());
    }
    DeltaResult {
        value: acc.value(),
        tail_bound: cfg.tail_bound(),
        depth: cfg.depth,
    }
}

// ---------------------------------------------------------------------------
// The logarithmic mixture oracle.
// ---------------------------------------------------------------------------

/// The logarithmic-limit mixture `D1 * sum_{d >= D1} (1/d - 1/(d+1)) nu_d`,
/// optionally truncated at `d <= d2`.
///
/// Because the component moments are 0/1 and monotone in `d` (the moment is
/// 1 exactly while `d` is below the first violated constraint order), the
/// mixture moment telescopes to a closed form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogMixture {
    pub d1: u64,
    /// Upper truncation (inclusive); `None` is the full mixture.
    pub d2: Option<u64>,
}

impl LogMixture {
    pub fn new(d1: u64, d2: Option<u64>) -> Result<Self> {
        if d1 < 1 {
            return Err(Error::Argument("D1 must be >= 1".into()));
        }
        if let Some(d2) = d2 {
            if d2 < d1 {
                return Err(Error::Argument(format!("D2 = {d2} < D1 = {d1}")));
            }
        }
        Ok(LogMixture { d1, d2 })
    }

    /// Total weight captured (1 exactly when untruncated).
    pub fn weight_sum(&self) -> f64 {
        match self.d2 {
            None => 1.0,
            Some(d2) => 1.0 - self.d1 as f64 / (d2 as f64 + 1.0),
        }
    }

    /// Weight discarded by the truncation.
    pub fn tail_bound(&self) -> f64 {
        1.0 - self.weight_sum()
    }

    /// Exact mixture moment: the components with `d < l*` contribute 1 and
    /// the rest 0, where `l*` is the first violated constraint order.
    pub fn moment_value(&self, spec: &MomentSpec) -> f64 {
        let lstar = match first_violated_order_unbounded(spec) {
            None => return self.weight_sum(), // trivial spec: every component gives 1
            Some(l) => l,
        };
        if lstar <= self.d1 {
            return 0.0;
        }
        // sum over d in [d1, min(lstar, d2 + 1) - 1] of D1 (1/d - 1/(d+1))
        let hi = match self.d2 {
            None => lstar,
            Some(d2) => lstar.min(d2 + 1),
        };
        self.d1 as f64 * (1.0 / self.d1 as f64 - 1.0 / hi as f64)
    }

    /// The same value by explicit term-by-term summation over components
    /// (the independent route used in tests).
    pub fn moment_by_summation(&self, spec: &MomentSpec, d_cap: u64) -> f64 {
        let hi = self.d2.unwrap_or(d_cap).min(d_cap);
        let mut acc = 0.0;
        for d in self.d1..=hi {
            let w = self.d1 as f64 * (1.0 / d as f64 - 1.0 / (d as f64 + 1.0));
            if UnipotentMeasure::new(d as usize).moment_is_one(spec) {
                acc += w;
            }
        }
        acc
    }
}

impl MomentOracle for LogMixture {
    fn moment(&self, spec: &MomentSpec) -> Complex64 {
        Complex64::new(self.moment_value(spec), 0.0)
    }
}

// ---------------------------------------------------------------------------
// Short-interval and slow-variation statistics.
// ---------------------------------------------------------------------------

/// `(1/M) sum_{m <= M} |(1/H) sum_{0 <= h < H} u(m + h)|`.
pub fn short_interval_stat(seq: &dyn UnitSeq, m: u64, h: u64) -> Result<f64> {
    if m == 0 || h == 0 {
        return Err(Error::Argument("M and H must be >= 1".into()));
    }
    if let Some(top) = seq.max_index() {
        if m + h > top + 1 {
            return Err(Error::Argument(format!(
                "needs indices up to {} but sequence ends at {top}",
                m + h - 1
            )));
        }
    }
    // sliding window via prefix sums
    let mut prefix = Vec::with_capacity((m + h) as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    prefix.push(acc);
    for n in 1..(m + h) {
        acc += seq.value(n);
        prefix.push(acc);
    }
    let mut stat = accum::Neumaier::default();
    for start in 1..=m {
        let window = prefix[(start + h - 1) as usize] - prefix[(start - 1) as usize];
        stat.add(window.norm() / h as f64);
    }
    Ok(stat.value() / m as f64)
}

/// `(1/N) sum_{n <= N} |u(n+1) - u(n)|`.
pub fn mean_slow_variation_stat(seq: &dyn UnitSeq, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("N must be >= 1".into()));
    }
    if let Some(top) = seq.max_index() {
        if n + 1 > top {
            return Err(Error::Argument(format!(
                "needs index {} but sequence ends at {top}",
                n + 1
            )));
        }
    }
    Ok(accum::sum_real(1, n, |k| (seq.value(k + 1) - seq.value(k)).norm()) / n as f64)
}

/// Max over all windows of length `len` inside `[1, n_max - len]` of the
/// windowed mean of `|u(j+1) - u(j)|`; the uniform-window variant of the
/// slow-variation property.
pub fn max_windowed_variation(seq: &dyn UnitSeq, n_max: u64, len: u64) -> Result<f64> {
    if len == 0 || n_max <= len {
        return Err(Error::Argument("need n_max > len >= 1".into()));
    }
    let mut diffs = Vec::with_capacity((n_max - 1) as usize);
    let mut prefix = vec![0.0f64];
    let mut acc = 0.0;
    for j in 1..n_max {
        let d = (seq.value(j + 1) - seq.value(j)).norm();
        diffs.push(d);
        acc += d;
        prefix.push(acc);
    }
    let mut worst = 0.0f64;
    for start in 0..(diffs.len() as u64).saturating_sub(len) + 1 {
        let s = prefix[(start + len) as usize] - prefix[start as usize];
        worst = worst.max(s / len as f64);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{AlternatingSign, ConstOne, PhaseSeq, RotationSeq, SurrogatePower};
    use crate::unipotent::{sample_phases, CounterRng};

    #[test]
    fn trivial_moments() {
        let one = ConstOne;
        let spec = MomentSpec::new([(0, 0)]);
        let v = empirical_moment(&one, 100, &spec).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rotation_orbit_closed_form() {
        // u(n) = e^{2 pi i theta n}: u(n) conj(u(n+1)) = e^{-2 pi i theta}
        let theta = 0.137;
        let seq = RotationSeq { theta };
        let spec = MomentSpec::new([(0, 1), (1, -1)]);
        let v = empirical_moment(&seq, 5000, &spec).unwrap();
        // every term equals e^{-2 pi i theta}, so the mean does too
        let want = Complex64::from_polar(1.0, -TAU * theta);
        assert!((v - want).norm() < 1e-12);
    }

    #[test]
    fn nu1_sample_satisfies_phi2_moment() {
        let phases = sample_phases(1, 600, &CounterRng::new(4), 0);
        let seq = PhaseSeq { phases };
        let spec = MomentSpec::new([(0, 1), (1, -2), (2, 1)]);
        let v = empirical_moment(&seq, 500, &spec).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn moment_merge_invariance() {
        let seq = SurrogatePower { s: 97 };
        let merged = MomentSpec::new([(2, 3)]);
        let split = MomentSpec::new([(2, 1), (2, 2)]);
        let a = empirical_moment(&seq, 2000, &merged).unwrap();
        let b = empirical_moment(&seq, 2000, &split).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn lag_overflow_is_an_error() {
        let seq = PhaseSeq {
            phases: vec![crate::xprec::Phase::ZERO; 10],
        };
        let spec = MomentSpec::new([(5, 1)]);
        assert!(matches!(
            empirical_moment(&seq, 10, &spec),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn phi_statistic_trivial_cases() {
        let seq = ConstOne;
        let v = phi_statistic(&seq, 1, 0, 100).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
        let v1 = phi_statistic(&seq, 1, 5, 100).unwrap();
        assert!((v1 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phi_statistic_matches_exp_sum_on_surrogate() {
        // the surrogate makes the statistic literally an exponential sum
        use crate::expsum::{exp_sum, ExpSumSpec, PhaseKind, PrecisionMode};
        let s = 10_000u64;
        let n = 3000u64;
        let pf = crate::polyfam::PhaseFunction::new(2).unwrap();
        for ell in 1..=3i64 {
            let a = phi_statistic(&SurrogatePower { s }, 2, ell, n).unwrap();
            let b = exp_sum(&ExpSumSpec {
                phase: PhaseKind::Fd(&pf),
                s,
                ell,
                a: 1,
                b: n,
                precision: 128,
                mode: PrecisionMode::Certified,
            })
            .unwrap();
            assert!((a - b.mean).norm() < 1e-7, "ell={ell}: {a} vs {}", b.mean);
        }
    }

    #[test]
    fn criterion_fails_for_constant_sequence() {
        let rep = criterion_check(&ConstOne, 1, 500, 3, 0.05).unwrap();
        assert!(!rep.pass);
        assert!(rep.hyp2_max > 0.9); // statistic is exactly 1, not 0
        assert!(rep.hyp1_deviation < 1e-12);
    }

    #[test]
    fn criterion_halves_on_exact_sample() {
        // On a single sample path hyp1 holds exactly. hyp2 does NOT head to
        // zero along one path: the measure is not ergodic, and the phi_d
        // statistic is the path's invariant value, of modulus one. Only the
        // ensemble average vanishes (covered by the oracle agreement tests).
        let phases = sample_phases(1, 40_000 + 3, &CounterRng::new(12), 0);
        let seq = PhaseSeq { phases };
        let rep = criterion_check(&seq, 1, 40_000, 3, 0.05).unwrap();
        assert!(rep.hyp1_deviation < 1e-9);
        assert!(rep.hyp2_max > 0.999, "hyp2 = {}", rep.hyp2_max);
        assert!(!rep.pass);
    }

    #[test]
    fn delta_enumeration_is_stable_and_bounded() {
        let cfg = DeltaConfig::default();
        let e = cfg.enumeration();
        assert_eq!(e.len(), 40);
        // deterministic order: first entries are the lag-0 monomials
        assert_eq!(e[0], MomentSpec::new([(0, -1)]));
        assert_eq!(e[1], MomentSpec::new([(0, 1)]));
        // no duplicates
        let mut sorted = e.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), e.len());
        assert!(cfg.tail_bound() <= 2.0f64.powi(-39));
    }

    #[test]
    fn delta_between_identical_oracles_is_zero() {
        let cfg = DeltaConfig::default();
        let a = UnipotentMeasure::new(2);
        let r = delta_distance(&a, &a, &cfg);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn delta_is_pseudometric_on_oracles() {
        let cfg = DeltaConfig::default();
        let m0 = UnipotentMeasure::new(0);
        let m1 = UnipotentMeasure::new(1);
        let m2 = UnipotentMeasure::new(2);
        let d01 = delta_distance(&m0, &m1, &cfg).value;
        let d10 = delta_distance(&m1, &m0, &cfg).value;
        assert_eq!(d01, d10);
        let d02 = delta_distance(&m0, &m2, &cfg).value;
        let d12 = delta_distance(&m1, &m2, &cfg).value;
        assert!(d02 <= d01 + d12 + 1e-12);
        // globally bounded by 2 (plus tail)
        assert!(d02 <= 2.0 + cfg.tail_bound());
    }

    #[test]
    fn delta_sample_vs_oracle_is_small() {
        let phases = sample_phases(2, 60_000 + 9, &CounterRng::new(77), 3);
        let seq = PhaseSeq { phases };
        let avg = EmpiricalAverager::new(&seq, 60_000, Weighting::Cesaro).unwrap();
        let oracle = UnipotentMeasure::new(2);
        let cfg = DeltaConfig::default();
        let r = delta_distance(&avg, &oracle, &cfg);
        // each moment deviates by Monte-Carlo noise only; weights sum < 1
        assert!(r.value < 0.05, "delta = {}", r.value);
    }

    #[test]
    fn log_mixture_weights_and_window() {
        let full = LogMixture::new(3, None).unwrap();
        assert!((full.weight_sum() - 1.0).abs() < 1e-15);
        let trunc = LogMixture::new(3, Some(30)).unwrap();
        assert!((trunc.weight_sum() - (1.0 - 3.0 / 31.0)).abs() < 1e-15);
        // any nonzero-exponent spec within the window of length D1 + 1
        // has mixture moment 0
        for spec in [
            MomentSpec::new([(0, 1)]),
            MomentSpec::new([(1, -2), (3, 1)]),
            MomentSpec::new([(0, 1), (2, 2), (3, -3)]),
        ] {
            assert_eq!(full.moment_value(&spec), 0.0, "{spec:?}");
        }
    }

    #[test]
    fn log_mixture_closed_form_matches_summation() {
        // compare against explicit component-by-component summation at the
        // same truncation
        let mix = LogMixture::new(2, Some(4000)).unwrap();
        for spec in [
            MomentSpec::new([(0, 1), (1, -2), (2, 1)]),          // l* = 3
            MomentSpec::new([(0, 1), (1, -3), (2, 3), (3, -1)]), // l* = 3 as well
            MomentSpec::new([(0, -1), (1, 3), (2, -3), (3, 1)]), // third-order ratio: weight 1/3
            MomentSpec::new([(0, 2), (4, -2)]),
            MomentSpec::new([]),
        ] {
            let closed = mix.moment_value(&spec);
            let summed = mix.moment_by_summation(&spec, 4000);
            assert!(
                (closed - summed).abs() < 1e-9,
                "{spec:?}: {closed} vs {summed}"
            );
        }
        // untruncated mixture differs from the truncated one only by the
        // tail weight on the trivial spec
        let full = LogMixture::new(2, None).unwrap();
        let trivial = MomentSpec::new([]);
        assert!(
            (full.moment_value(&trivial) - mix.moment_value(&trivial) - mix.tail_bound()).abs()
                < 1e-12
        );
    }

    #[test]
    fn summation_by_parts_identity() {
        // E_N^log moment equals (1/L_N) [ sum_{n<=N-1} E_n/(n+1) + E_N ]
        let seq = SurrogatePower { s: 37 };
        let spec = MomentSpec::new([(0, 1), (1, -1), (3, 2)]);
        let n = 800u64;
        let log_avg = EmpiricalAverager::new(&seq, n, Weighting::Logarithmic)
            .unwrap()
            .moment(&spec)
            .unwrap();
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut cesaro_sum = Complex64::new(0.0, 0.0);
        for m in 1..=n {
            let term = {
                let mut phase = 0.0f64;
                for &(lag, e) in spec.terms() {
                    phase += e as f64 * seq.phase_turns(m + lag);
                }
                let (si, co) = (phase.fract() * TAU).sin_cos();
                Complex64::new(co, si)
            };
            cesaro_sum += term;
            let e_m = cesaro_sum / m as f64;
            if m <= n - 1 {
                rhs += e_m / (m as f64 + 1.0);
            } else {
                rhs += e_m;
            }
        }
        rhs /= harmonic(n);
        assert!((log_avg - rhs).norm() < 1e-12, "{log_avg} vs {rhs}");
    }

    #[test]
    fn short_interval_known_values() {
        assert_eq!(short_interval_stat(&ConstOne, 100, 10).unwrap(), 1.0);
        let v = short_interval_stat(&AlternatingSign, 100, 10).unwrap();
        assert!(v < 1e-12);
    }

    #[test]
    fn short_interval_surrogate_stays_near_one() {
        // H far below n/s: phases barely move across a window
        let seq = SurrogatePower { s: 1 };
        let v = short_interval_stat(&seq, 20_000, 5).unwrap();
        assert!(v > 0.99, "stat = {v}");
    }

    #[test]
    fn slow_variation_known_values() {
        assert_eq!(mean_slow_variation_stat(&ConstOne, 1000).unwrap(), 0.0);
        assert!((mean_slow_variation_stat(&AlternatingSign, 1000).unwrap() - 2.0).abs() < 1e-12);
        // u(n) = n^i: the mean is ~ (log N)/N
        let seq = SurrogatePower { s: 1 };
        let n = 100_000u64;
        let v = mean_slow_variation_stat(&seq, n).unwrap();
        assert!((v - 1.159e-4).abs() < 2e-6, "stat = {v}");
        // rigorous envelope |e^{i theta} - 1| <= |theta| <= 1/n
        assert!(v <= ((n as f64).ln() + 1.0) / n as f64 * (1.0 + 1e-3));
    }

    #[test]
    fn collapsed_moment_mechanism_for_slowly_varying() {
        // for u(n) = n^i the multi-lag moment approaches the collapsed one
        let seq = SurrogatePower { s: 1 };
        let spec = MomentSpec::new([(0, 1), (1, -1)]);
        let collapsed = spec.collapse();
        let mut last = f64::INFINITY;
        for n in [1000u64, 10_000, 100_000] {
            let a = empirical_moment(&seq, n, &spec).unwrap();
            let b = empirical_moment(&seq, n, &collapsed).unwrap();
            let gap = (a - b).norm();
            assert!(gap < last, "gap {gap} did not shrink at N = {n}");
            last = gap;
        }
        assert!(last < 2e-4, "final gap {last}");
    }
}
