//! Compensated, order-deterministic summation.
//!
//! Ranges are split into fixed-size chunks summed independently (in
//! parallel), then merged in chunk order. The result is bit-identical for
//! any thread count, so reproducibility does not depend on the scheduler.

use num_complex::Complex64;
use rayon::prelude::*;

const CHUNK: u64 = 8192;

/// Neumaier-compensated scalar accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn chunk_sum_complex(lo: u64, hi: u64, f: &(impl Fn(u64) -> Complex64 + Sync)) -> Complex64 {
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for n in lo..hi {
        let z = f(n);
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Sum of `f(n)` for `n` in `[a, b]`, compensated and order-deterministic.
pub fn sum_complex(a: u64, b: u64, f: impl Fn(u64) -> Complex64 + Sync) -> Complex64 {
    if b < a {
        return Complex64::new(0.0, 0.0);
    }
    let bounds: Vec<(u64, u64)> = (a..=b)
        .step_by(CHUNK as usize)
        .map(|lo| (lo, (lo + CHUNK - 1).min(b) + 1))
        .collect();
    let partials: Vec<Complex64> = bounds
        .par_iter()
        .map(|&(lo, hi)| chunk_sum_complex(lo, hi, &f))
        .collect();
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for z in partials {
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Sum of real `f(n)` for `n` in `[a, b]`, compensated and deterministic.
pub fn sum_real(a: u64, b: u64, f: impl Fn(u64) -> f64 + Sync) -> f64 {
    sum_complex(a, b, |n| Complex64::new(f(n), 0.0)).re
}
