//! Cross-module invariants: brute-force oracles, algebraic identities on
//! random inputs, and the structural laws the modules promise each other.

use mrt_lab::expsum::{exp_sum, ExpSumSpec, PhaseKind, PrecisionMode};
use mrt_lab::furstenberg::{delta_distance, DeltaConfig, MomentOracle};
use mrt_lab::intpoly::IntPoly;
use mrt_lab::mrt::{MrtFunction, MrtParams};
use mrt_lab::polyfam::{phi_exponents, pq_polynomials, PhaseFunction};
use mrt_lab::prime_arith::{count_small_prime_factors, in_bt, sieve};
use mrt_lab::seq::UnitSeq;
use mrt_lab::unipotent::{
    strong_stationarity_check, CounterRng, MomentSpec, UnipotentMeasure,
};
use mrt_lab::xprec::Phase;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn bt_membership_against_trial_division_large_range() {
    // n up to 1e6, t up to 50: the oracle only needs trial division by
    // primes below 50
    let table = sieve(1_000_000).unwrap();
    let small_primes: Vec<u64> = vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    let thresholds: Vec<u64> = (2..=50).collect();
    for n in 1..=1_000_000u64 {
        // multiplicity profile of the small primes dividing n
        let mut counts = [0u64; 15];
        let mut m = n;
        for (i, &p) in small_primes.iter().enumerate() {
            while m % p == 0 {
                m /= p;
                counts[i] += 1;
            }
        }
        // spot-check every threshold on a sparse subsequence, all of them
        // on a denser one near small n
        let stride = if n < 10_000 { 1 } else { 101 };
        if n % stride != 0 {
            continue;
        }
        for &t in &thresholds {
            let oracle: u64 = small_primes
                .iter()
                .zip(&counts)
                .filter(|&(&p, _)| p <= t)
                .map(|(_, &c)| c)
                .sum();
            assert_eq!(
                in_bt(n, t, &table).unwrap(),
                oracle >= t,
                "n = {n}, t = {t}"
            );
            assert_eq!(count_small_prime_factors(n, t, &table).unwrap(), oracle);
        }
    }
}

#[test]
fn complete_multiplicativity_on_smooth_pairs() {
    // phases are added exactly mod 1, so u(ab) = u(a) u(b) must hold
    // bit-for-bit whenever all prime factors are stored
    let table = sieve(1_000_000).unwrap();
    let params = MrtParams::new_stage1(2).unwrap();
    let f = MrtFunction::new_stage1(params, &table, None)
        .unwrap()
        .extend_stage(&table, 81, 9)
        .unwrap();
    let rng = CounterRng::new(20_240_817);
    let smooth_primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79];
    let random_smooth = |ctr: u64, cap: u64| -> u64 {
        let mut n = 1u64;
        for step in 0..8 {
            let p = smooth_primes[rng.below(ctr, 100 + step, smooth_primes.len() as u64) as usize];
            if n.saturating_mul(p) > cap {
                break;
            }
            if rng.below(ctr, 200 + step, 2) == 0 {
                n *= p;
            }
        }
        n
    };
    let mut checked = 0u64;
    for ctr in 0..200_000u64 {
        let a = random_smooth(2 * ctr, 1000);
        let b = random_smooth(2 * ctr + 1, 1000);
        if a.saturating_mul(b) > table.limit() {
            continue;
        }
        let lhs = f.phase_u(a * b, &table).unwrap();
        let rhs = f.phase_u(a, &table).unwrap().add(f.phase_u(b, &table).unwrap());
        assert_eq!(lhs, rhs, "a = {a}, b = {b}");
        checked += 1;
        if checked >= 100_000 {
            break;
        }
    }
    assert!(checked >= 100_000, "only {checked} pairs hit the range");
}

#[test]
fn pq_recurrence_two_routes_up_to_twelve() {
    // factored-form expansion vs shift-multiply recurrence, exact equality
    let mut prev = pq_polynomials(0).unwrap();
    for d in 1..=12usize {
        let direct = pq_polynomials(d).unwrap();
        let via_recurrence_p = prev.p.shift_by_one().mul(&prev.q);
        let via_recurrence_q = prev.q.shift_by_one().mul(&prev.p);
        assert_eq!(direct.p, via_recurrence_p, "P_{d}");
        assert_eq!(direct.q, via_recurrence_q, "Q_{d}");
        assert_eq!(direct.p.degree(), Some(1usize << (d - 1)));
        assert_eq!(direct.r.degree(), Some((1usize << (d - 1)) - d));
        prev = direct;
    }
}

#[test]
fn telescoping_identity_on_random_unit_tuples() {
    // phi_{d+1}(z_0..z_{d+1}) = phi_d(z_1..z_{d+1}) / phi_d(z_0..z_d)
    let rng = CounterRng::new(99);
    for d in 0..=6usize {
        let hi = phi_exponents(d + 1, 1).unwrap();
        let lo = phi_exponents(d, 1).unwrap();
        for trial in 0..1000u64 {
            let tuple: Vec<Complex64> = (0..=(d as u64 + 1))
                .map(|j| rng.phase_at(trial, 1000 * d as u64 + j).to_complex())
                .collect();
            let eval = |exps: &[i64], offset: usize| -> Complex64 {
                let mut acc = Complex64::new(1.0, 0.0);
                for (j, &e) in exps.iter().enumerate() {
                    acc *= tuple[j + offset].powi(e as i32);
                }
                acc
            };
            let lhs = eval(&hi, 0);
            let rhs = eval(&lo, 1) / eval(&lo, 0);
            assert!((lhs - rhs).norm() <= 1e-12, "d = {d}, trial = {trial}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // deg(R(n+1) P(n) - R(n) P(n+1)) = deg R + deg P - 1 when degrees differ
    #[test]
    fn crossed_difference_degree_law(
        p_coeffs in proptest::collection::vec(-9i64..=9, 1..6),
        r_coeffs in proptest::collection::vec(-9i64..=9, 1..6),
    ) {
        let p = IntPoly::from_i64(&p_coeffs);
        let r = IntPoly::from_i64(&r_coeffs);
        prop_assume!(!p.is_zero() && !r.is_zero());
        let (dp, dr) = (p.degree().unwrap(), r.degree().unwrap());
        prop_assume!(dp != dr);
        let tilde = r.shift_by_one().mul(&p).sub(&r.mul(&p.shift_by_one()));
        prop_assert_eq!(tilde.degree(), Some(dp + dr - 1));
    }

    // merging duplicate lags never changes an empirical moment
    #[test]
    fn moment_spec_merge_is_sound(
        lags in proptest::collection::vec(0u64..6, 1..5),
        exps in proptest::collection::vec(-3i64..=3, 1..5),
        s in 3u64..60,
    ) {
        let terms: Vec<(u64, i64)> = lags.iter().copied().zip(exps.iter().copied()).collect();
        let spec = MomentSpec::new(terms.clone());
        let seq = mrt_lab::seq::SurrogatePower { s };
        // raw phase evaluation with duplicates left in place
        let n = 400u64;
        let mut raw = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            let mut phase = 0.0f64;
            for &(lag, e) in &terms {
                phase += e as f64 * seq.phase_turns(k + lag);
            }
            raw += Complex64::from_polar(1.0, phase.fract() * std::f64::consts::TAU);
        }
        raw /= n as f64;
        let merged = mrt_lab::furstenberg::empirical_moment(&seq, n, &spec).unwrap();
        prop_assert!((raw - merged).norm() < 1e-9);
    }

    // dilation invariance of the exact 0/1 moments
    #[test]
    fn stationarity_random_specs(
        lags in proptest::collection::vec(0u64..9, 1..5),
        exps in proptest::collection::vec(-3i64..=3, 1..5),
        d in 0usize..4,
        r in prop::sample::select(vec![2u64, 3, 5]),
    ) {
        let spec = MomentSpec::new(lags.into_iter().zip(exps));
        prop_assert!(strong_stationarity_check(d, &spec, r));
    }

    // phase scaling distributes over addition exactly
    #[test]
    fn phase_scaling_linearity(a in any::<u128>(), b in any::<u128>(), k in any::<i64>()) {
        let (pa, pb) = (Phase(a), Phase(b));
        let lhs = pa.add(pb).scale_i64(k);
        let rhs = pa.scale_i64(k).add(pb.scale_i64(k));
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn delta_convexity_on_mixtures() {
    // Delta(sum w nu_i, sum w kappa_i) <= sum w Delta(nu_i, kappa_i)
    struct Mix<'a> {
        weights: Vec<f64>,
        parts: Vec<&'a dyn MomentOracle>,
    }
    impl MomentOracle for Mix<'_> {
        fn moment(&self, spec: &MomentSpec) -> Complex64 {
            self.weights
                .iter()
                .zip(&self.parts)
                .map(|(w, p)| p.moment(spec) * *w)
                .sum()
        }
    }
    let cfg = DeltaConfig::default();
    let m0 = UnipotentMeasure::new(0);
    let m1 = UnipotentMeasure::new(1);
    let m2 = UnipotentMeasure::new(2);
    let m3 = UnipotentMeasure::new(3);
    for &(w0, w1) in &[(0.5, 0.5), (0.25, 0.75), (0.9, 0.1)] {
        let nu = Mix {
            weights: vec![w0, w1],
            parts: vec![&m0, &m1],
        };
        let kappa = Mix {
            weights: vec![w0, w1],
            parts: vec![&m2, &m3],
        };
        let lhs = delta_distance(&nu, &kappa, &cfg).value;
        let rhs = w0 * delta_distance(&m0, &m2, &cfg).value
            + w1 * delta_distance(&m1, &m3, &cfg).value;
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }
}

#[test]
fn expsum_scaling_law_slopes() {
    // the measured normalized sums decay in s at least as fast as the
    // certificate-driven rate beta d - 1 (with 0.1 slack)
    for d in [1usize, 2] {
        let pf = PhaseFunction::new(d).unwrap();
        let beta = (1.0 / (d as f64 + 1.0) + 1.0 / d as f64) / 2.0;
        let alpha = mrt_lab::expsum::default_alpha(d, beta);
        let mut points: Vec<(f64, f64)> = Vec::new();
        for s in [100_000u64, 1_000_000, 10_000_000] {
            let a = ((s as f64).powf(alpha) as u64).max(2);
            let b = (s as f64).powf(beta) as u64;
            let r = exp_sum(&ExpSumSpec {
                phase: PhaseKind::Fd(&pf),
                s,
                ell: 1,
                a,
                b,
                precision: 128,
                mode: PrecisionMode::Certified,
            })
            .unwrap();
            points.push(((s as f64).ln(), r.mean.norm().max(1e-12).ln()));
        }
        // least-squares slope through the three points
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let limit = beta * d as f64 - 1.0 + 0.1;
        assert!(
            slope <= limit,
            "d = {d}: slope {slope:.3} exceeds {limit:.3}"
        );
    }
}

#[test]
fn windowed_slow_variation_of_companion_sequence() {
    // the companion sequence has two jump points per stage; long windows
    // average them away
    use mrt_lab::archimedean::SarnakV;
    use mrt_lab::mrt::Stage;
    let mut params = MrtParams::new_stage1(2).unwrap();
    params.stages.push(Stage { s: Some(9), t: 81 });
    params.stages.push(Stage { s: Some(100), t: 10_000 });
    let sv = SarnakV::new(params).unwrap();
    struct VSeq<'a>(&'a SarnakV);
    impl UnitSeq for VSeq<'_> {
        fn phase_turns(&self, n: u64) -> f64 {
            self.0.phase(n).expect("inside range")
        }
        fn max_index(&self) -> Option<u64> {
            Some(10_000)
        }
    }
    let seq = VSeq(&sv);
    // skip the undefined head: examine windows inside (t_1, t_3]
    let offset = 2u64;
    struct Shifted<'a>(&'a dyn UnitSeq, u64);
    impl UnitSeq for Shifted<'_> {
        fn phase_turns(&self, n: u64) -> f64 {
            self.0.phase_turns(n + self.1)
        }
        fn max_index(&self) -> Option<u64> {
            self.0.max_index().map(|m| m - self.1)
        }
    }
    let shifted = Shifted(&seq, offset);
    // rigorous envelope: the tracking-range slope is at most s/n <= s/r =
    // s^{-1/2} (here 0.1 for the biggest stage), plus at most three jumps
    // of size <= 2 inside any window
    let mut prev = f64::INFINITY;
    for len in [200u64, 1000, 4000] {
        let worst = mrt_lab::furstenberg::max_windowed_variation(&shifted, 9990, len).unwrap();
        let envelope = 0.1 + 6.0 / len as f64;
        assert!(worst < envelope, "len = {len}: worst window mean {worst}");
        assert!(worst <= prev + 1e-12, "window means should not grow with length");
        prev = worst;
    }
}
