//! Pull-based unit-circle sequence sources.
//!
//! Surrogate power functions, honest MRT functions, and unipotent-measure
//! sample paths all sit behind one indexed-access trait so the moment and
//! criterion machinery is written once.

use crate::xprec::Phase;
use num_complex::Complex64;

/// A sequence `u(1), u(2), ...` of unit-modulus complex numbers, exposed
/// through its phase in turns. Implementations must be cheap to index.
pub trait UnitSeq: Sync {
    /// Phase of `u(n)` in turns; any real representative is accepted, the
    /// consumers reduce modulo 1.
    fn phase_turns(&self, n: u64) -> f64;

    /// Largest index with a defined value, if the source is finite.
    fn max_index(&self) -> Option<u64> {
        None
    }

    fn value(&self, n: u64) -> Complex64 {
        let (s, c) = (self.phase_turns(n) * std::f64::consts::TAU).sin_cos();
        Complex64::new(c, s)
    }
}

/// The Archimedean surrogate `n -> n^{is}`.
///
/// Standing in for an honest MRT function on the range where the two are
/// close is what makes large-scale statistics affordable; the discrepancy
/// is controlled separately by `mrt::surrogate_discrepancy`.
#[derive(Clone, Copy, Debug)]
pub struct SurrogatePower {
    pub s: u64,
}

impl UnitSeq for SurrogatePower {
    fn phase_turns(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        // s * ln n / (2 pi); at desk scale (s <= 1e7, n <= 1e9) the absolute
        // phase error stays below ~1e-8 turns, far inside every statistical
        // tolerance used on this path.
        (self.s as f64) * (n as f64).ln() / std::f64::consts::TAU
    }
}

/// Constant sequence `u(n) = 1`.
#[derive(Clone, Copy, Debug)]
pub struct ConstOne;

impl UnitSeq for ConstOne {
    fn phase_turns(&self, _n: u64) -> f64 {
        0.0
    }
}

/// `u(n) = (-1)^n`.
#[derive(Clone, Copy, Debug)]
pub struct AlternatingSign;

impl UnitSeq for AlternatingSign {
    fn phase_turns(&self, n: u64) -> f64 {
        if n % 2 == 1 {
            0.5
        } else {
            0.0
        }
    }
}

/// Rotation orbit `u(n) = e^{2 pi i theta n}`.
#[derive(Clone, Copy, Debug)]
pub struct RotationSeq {
    pub theta: f64,
}

impl UnitSeq for RotationSeq {
    fn phase_turns(&self, n: u64) -> f64 {
        self.theta * n as f64
    }
}

/// A materialized sequence of exact phases; `u(n) = e^{2 pi i phases[n-1]}`.
#[derive(Clone, Debug)]
pub struct PhaseSeq {
    pub phases: Vec<Phase>,
}

impl UnitSeq for PhaseSeq {
    fn phase_turns(&self, n: u64) -> f64 {
        self.phases[(n - 1) as usize].turns()
    }

    fn max_index(&self) -> Option<u64> {
        Some(self.phases.len() as u64)
    }
}

/// Adapter for raw unit-complex values (checked on construction).
#[derive(Clone, Debug)]
pub struct ComplexSeq {
    phases: Vec<f64>,
}

impl ComplexSeq {
    /// Accepts values whose modulus deviates from 1 by at most `tol`.
    pub fn new(values: &[Complex64], tol: f64) -> crate::Result<Self> {
        let mut phases = Vec::with_capacity(values.len());
        for (i, z) in values.iter().enumerate() {
            if (z.norm() - 1.0).abs() > tol {
                return Err(crate::Error::Domain(format!(
                    "value at index {} has modulus {}, not unit",
                    i + 1,
                    z.norm()
                )));
            }
            phases.push(z.arg() / std::f64::consts::TAU);
        }
        Ok(ComplexSeq { phases })
    }
}

impl UnitSeq for ComplexSeq {
    fn phase_turns(&self, n: u64) -> f64 {
        self.phases[(n - 1) as usize]
    }

    fn max_index(&self) -> Option<u64> {
        Some(self.phases.len() as u64)
    }
}
