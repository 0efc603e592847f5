//! Construction and evaluation of the multiplicative functions that track
//! Archimedean characters stage by stage: the stage parameter sequences
//! `(t_m)`, `(s_m)`, the prime value table, the inductive search for the
//! next exponent, and the discrepancy against the surrogate `n^{is}`.
//!
//! Prime phases are stored in 128-bit fixed point, so evaluating the
//! function at `n` (a sum of prime phases weighted by multiplicities) is
//! exact modulo one turn, and complete multiplicativity holds bit-for-bit.

use crate::error::{Error, Result};
use crate::prime_arith::{self, PrimeTable};
use crate::seq::UnitSeq;
use crate::xprec::Phase;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// One stage of the parameter ladder. Stage 1 has no exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    /// `s_m` (absent for the first stage).
    pub s: Option<u64>,
    /// `t_m`.
    pub t: u64,
}

/// How the next `t` is derived from the accepted `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TPolicy {
    /// `t_{m+1} = s_{m+1}^2`, the minimal admissible choice.
    Square,
    /// Explicit value (validated against `s^2 <= t`).
    Explicit(u64),
    /// `t_{m+1} = s_{m+1}^a`, the growth knob used by the logarithmic
    /// mixture experiments.
    Exponent(u32),
}

/// The stage sequences defining one function of the class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrtParams {
    pub stages: Vec<Stage>,
    /// Request `s_{m+1} > e^{t_m}` during the search. Off by default: it
    /// explodes desk-scale parameters, and nothing downstream checks
    /// aperiodicity itself.
    #[serde(default)]
    pub aperiodic_mode: bool,
}

impl MrtParams {
    pub fn new_stage1(t1: u64) -> Result<Self> {
        if t1 < 2 {
            return Err(Error::Argument(format!(
                "t_1 = {t1} leaves no prime below the first threshold"
            )));
        }
        Ok(MrtParams {
            stages: vec![Stage { s: None, t: t1 }],
            aperiodic_mode: false,
        })
    }

    /// Checks the defining inequalities `t_m < s_{m+1} < s_{m+1}^2 <= t_{m+1}`
    /// and strict growth of both sequences.
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Argument("no stages".into()));
        }
        if self.stages[0].s.is_some() {
            return Err(Error::Argument("stage 1 must not carry an exponent".into()));
        }
        for m in 1..self.stages.len() {
            let prev = &self.stages[m - 1];
            let cur = &self.stages[m];
            let s = cur
                .s
                .ok_or_else(|| Error::Argument(format!("stage {} missing s", m + 1)))?;
            if !(prev.t < s) {
                return Err(Error::Argument(format!(
                    "stage {}: need t_{} = {} < s_{} = {s}",
                    m + 1,
                    m,
                    prev.t,
                    m + 1
                )));
            }
            let s2 = s
                .checked_mul(s)
                .ok_or_else(|| Error::Resource(format!("s^2 overflows u64 for s = {s}")))?;
            if !(s2 <= cur.t) {
                return Err(Error::Argument(format!(
                    "stage {}: need s^2 = {s2} <= t = {}",
                    m + 1,
                    cur.t
                )));
            }
            if let Some(sp) = prev.s {
                if !(sp < s) {
                    return Err(Error::Argument("s sequence must increase".into()));
                }
            }
        }
        Ok(())
    }

    pub fn last_t(&self) -> u64 {
        self.stages.last().unwrap().t
    }

    /// `s_{m+1}` for the 1-based stage index `m` (i.e. the exponent active
    /// on `(t_m, t_{m+1}]`).
    pub fn s_after(&self, m: usize) -> Result<u64> {
        self.stages
            .get(m)
            .and_then(|st| st.s)
            .ok_or_else(|| Error::Argument(format!("no stage beyond index {m}")))
    }

    pub fn t_at(&self, m: usize) -> Result<u64> {
        self.stages
            .get(m - 1)
            .map(|st| st.t)
            .ok_or_else(|| Error::Argument(format!("no stage {m}")))
    }
}

/// Derives `t_{m+1}` from the accepted `s_{m+1}` under a policy.
pub fn next_t(s_next: u64, policy: TPolicy) -> Result<u64> {
    if s_next < 2 {
        return Err(Error::Argument("s must be >= 2".into()));
    }
    let square = s_next
        .checked_mul(s_next)
        .ok_or_else(|| Error::Resource(format!("s^2 overflows u64 for s = {s_next}")))?;
    match policy {
        TPolicy::Square => Ok(square),
        TPolicy::Explicit(t) => {
            if t < square {
                Err(Error::Argument(format!(
                    "explicit t = {t} violates s^2 = {square} <= t"
                )))
            } else {
                Ok(t)
            }
        }
        TPolicy::Exponent(a) => {
            if a < 2 {
                return Err(Error::Argument("growth exponent must be >= 2".into()));
            }
            let mut acc: u64 = 1;
            for _ in 0..a {
                acc = acc
                    .checked_mul(s_next)
                    .ok_or_else(|| Error::Resource(format!("s^{a} overflows u64")))?;
            }
            Ok(acc)
        }
    }
}

/// A stage-complete function: parameters plus the unit-circle value at every
/// prime up to the current threshold.
#[derive(Clone, Debug)]
pub struct MrtFunction {
    pub params: MrtParams,
    /// Ascending `(p, phase of u(p), phase of ln p / 2 pi)`.
    prime_phases: Vec<(u64, Phase, Phase)>,
}

impl MrtFunction {
    /// Stage 1: `u(p)` for `p <= t_1`, all equal to 1 unless explicit phases
    /// are supplied (the first-stage values are a free choice).
    pub fn new_stage1(
        params: MrtParams,
        table: &PrimeTable,
        stage1_phases: Option<&[(u64, Phase)]>,
    ) -> Result<Self> {
        params.validate()?;
        let t1 = params.stages[0].t;
        if params.stages.len() != 1 {
            return Err(Error::Argument(
                "new_stage1 expects parameters with exactly one stage; extend afterwards".into(),
            ));
        }
        if t1 > table.limit() {
            return Err(Error::Resource(format!(
                "sieve limit {} below t_1 = {t1}",
                table.limit()
            )));
        }
        let mut prime_phases = Vec::new();
        for &p in table.primes().iter().take_while(|&&p| p <= t1) {
            let ph = match stage1_phases {
                None => Phase::ZERO,
                Some(list) => list
                    .iter()
                    .find(|&&(q, _)| q == p)
                    .map(|&(_, ph)| ph)
                    .ok_or_else(|| {
                        Error::Argument(format!("no explicit stage-1 phase for p = {p}"))
                    })?,
            };
            prime_phases.push((p, ph, prime_arith::ln_phase(p)));
        }
        if prime_phases.is_empty() {
            return Err(Error::Argument(format!("no primes <= t_1 = {t1}")));
        }
        Ok(MrtFunction {
            params,
            prime_phases,
        })
    }

    pub fn primes_covered(&self) -> usize {
        self.prime_phases.len()
    }

    /// Phase of `u(p)` for a stored prime.
    pub fn prime_phase(&self, p: u64) -> Result<Phase> {
        self.prime_phases
            .binary_search_by_key(&p, |&(q, _, _)| q)
            .map(|i| self.prime_phases[i].1)
            .map_err(|_| Error::State(format!("no stored value at prime {p}")))
    }

    /// Smallest `s in (t_m, cap]` with `|u(p) - p^{is}| < 1/t_m^2` for every
    /// stored prime `p <= t_m` (and `s > e^{t_m}` in aperiodic mode).
    ///
    /// A plain linear scan with early rejection: the candidate density is
    /// high enough at desk scale, and minimality gives a canonical choice.
    pub fn find_next_s(&self, search_cap: u64) -> Result<u64> {
        let t_m = self.params.last_t();
        let threshold = 1.0 / (t_m as f64 * t_m as f64);
        let lower = if self.params.aperiodic_mode {
            let floor = (t_m as f64).exp();
            if floor >= search_cap as f64 {
                return Err(Error::SearchExhausted {
                    cap: search_cap,
                    best: 0,
                    deviation: f64::INFINITY,
                });
            }
            (floor.floor() as u64).max(t_m)
        } else {
            t_m
        };
        let scan: Vec<(u64, Phase, Phase)> = self
            .prime_phases
            .iter()
            .copied()
            .take_while(|&(p, _, _)| p <= t_m)
            .collect();
        if scan.is_empty() {
            return Err(Error::Argument(format!("no primes <= t_m = {t_m}")));
        }
        let mut best = (0u64, f64::INFINITY);
        for s in (lower + 1)..=search_cap {
            let mut worst = 0.0f64;
            let mut ok = true;
            for &(_, up, lnp) in &scan {
                let dev = up.sub(lnp.scale_u64(s)).chord();
                worst = worst.max(dev);
                if dev >= threshold {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(s);
            }
            if worst < best.1 {
                best = (s, worst);
            }
        }
        Err(Error::SearchExhausted {
            cap: search_cap,
            best: best.0,
            deviation: best.1,
        })
    }

    /// Appends a stage: `u(p) := p^{i s_next}` for the new primes
    /// `t_m < p <= new_t`. Existing entries are untouched.
    pub fn extend_stage(&self, table: &PrimeTable, new_t: u64, s_next: u64) -> Result<Self> {
        let mut params = self.params.clone();
        params.stages.push(Stage {
            s: Some(s_next),
            t: new_t,
        });
        params.validate()?;
        if new_t > table.limit() {
            return Err(Error::Resource(format!(
                "sieve limit {} below new threshold {new_t}",
                table.limit()
            )));
        }
        let t_m = self.params.last_t();
        let mut prime_phases = self.prime_phases.clone();
        for &p in table
            .primes()
            .iter()
            .skip_while(|&&p| p <= t_m)
            .take_while(|&&p| p <= new_t)
        {
            let lnp = prime_arith::ln_phase(p);
            prime_phases.push((p, lnp.scale_u64(s_next), lnp));
        }
        Ok(MrtFunction {
            params,
            prime_phases,
        })
    }

    /// Exact phase of `u(n)` via the stored prime phases (complete
    /// multiplicativity: sum of `alpha_p(n) * phase(u(p))` modulo 1).
    pub fn phase_u(&self, n: u64, table: &PrimeTable) -> Result<Phase> {
        if n == 0 {
            return Err(Error::Argument("n must be >= 1".into()));
        }
        let mut acc = Phase::ZERO;
        for (p, a) in table.factorize(n)? {
            let ph = self.prime_phase(p)?;
            acc = acc.add(ph.scale_u64(a as u64));
        }
        Ok(acc)
    }

    pub fn evaluate_u(&self, n: u64, table: &PrimeTable) -> Result<Complex64> {
        Ok(self.phase_u(n, table)?.to_complex())
    }

    /// Fraction of `n <= N` with `|u(n) - n^{i s_{m+1}}| > 1/t_m`, the
    /// quantity bounded by the density of `B_{t_m}`.
    pub fn surrogate_discrepancy(&self, m: usize, n: u64, table: &PrimeTable) -> Result<f64> {
        if n == 0 {
            return Err(Error::Argument("N must be >= 1".into()));
        }
        let t_next = self.params.t_at(m + 1)?;
        if n > t_next {
            return Err(Error::Argument(format!(
                "N = {n} beyond t_{} = {t_next}, outside the comparison range",
                m + 1
            )));
        }
        let t_m = self.params.t_at(m)?;
        let s = self.params.s_after(m)?;
        let tol = 1.0 / t_m as f64;
        let mut violations = 0u64;
        for k in 1..=n {
            let u_phase = self.phase_u(k, table)?;
            let surrogate = prime_arith::ln_phase(k).scale_u64(s);
            if u_phase.sub(surrogate).chord() > tol {
                violations += 1;
            }
        }
        Ok(violations as f64 / n as f64)
    }

    /// View of the function as a unit sequence over `[1, t_last]`.
    pub fn as_seq<'a>(&'a self, table: &'a PrimeTable) -> MrtSeq<'a> {
        MrtSeq { f: self, table }
    }

    // -- on-disk cache ------------------------------------------------------

    /// Hash of the parameters, used to key the prime-value cache.
    pub fn params_hash(params: &MrtParams) -> u64 {
        // FNV-1a over the stage numbers; collision resistance is irrelevant,
        // this only guards against loading a cache for different parameters.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        eat(params.stages.len() as u64);
        for st in &params.stages {
            eat(st.s.unwrap_or(0));
            eat(st.t);
        }
        eat(params.aperiodic_mode as u64);
        h
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"MRTU")?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&Self::params_hash(&self.params).to_le_bytes())?;
        f.write_all(&(self.prime_phases.len() as u64).to_le_bytes())?;
        for &(p, up, lnp) in &self.prime_phases {
            f.write_all(&p.to_le_bytes())?;
            f.write_all(&up.0.to_le_bytes())?;
            f.write_all(&lnp.0.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_cache(path: &Path, params: &MrtParams) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != b"MRTU" {
            return Err(Error::State("prime-value cache: bad magic".into()));
        }
        let mut w32 = [0u8; 4];
        f.read_exact(&mut w32)?;
        if u32::from_le_bytes(w32) != 1 {
            return Err(Error::State("prime-value cache: unsupported version".into()));
        }
        let mut w64 = [0u8; 8];
        f.read_exact(&mut w64)?;
        if u64::from_le_bytes(w64) != Self::params_hash(params) {
            return Err(Error::State(
                "prime-value cache was built for different parameters".into(),
            ));
        }
        f.read_exact(&mut w64)?;
        let count = u64::from_le_bytes(w64);
        let mut prime_phases = Vec::with_capacity(count as usize);
        let mut w128 = [0u8; 16];
        for _ in 0..count {
            f.read_exact(&mut w64)?;
            let p = u64::from_le_bytes(w64);
            f.read_exact(&mut w128)?;
            let up = Phase(u128::from_le_bytes(w128));
            f.read_exact(&mut w128)?;
            let lnp = Phase(u128::from_le_bytes(w128));
            prime_phases.push((p, up, lnp));
        }
        Ok(MrtFunction {
            params: params.clone(),
            prime_phases,
        })
    }
}

/// [`UnitSeq`] view of an [`MrtFunction`].
pub struct MrtSeq<'a> {
    f: &'a MrtFunction,
    table: &'a PrimeTable,
}

impl UnitSeq for MrtSeq<'_> {
    fn phase_turns(&self, n: u64) -> f64 {
        self.f
            .phase_u(n, self.table)
            .expect("MRT sequence indexed outside its range")
            .turns()
    }

    fn max_index(&self) -> Option<u64> {
        Some(self.f.params.last_t())
    }
}
