//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of panels held at once.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_panels: 200_000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    let value = k * h;
    let error = ((k - g) * h).norm();
    Panel { a, b, value, error }
}

/// Integrates `f` over the union of `intervals`, each first split into
/// `panels_per_interval` equal panels, refining the worst panel until the
/// summed error estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    intervals: &[(f64, f64)],
    panels_per_interval: usize,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let split = panels_per_interval.max(1);
    for &(a, b) in intervals {
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(Error::InvalidArgument(format!("bad integration interval [{a}, {b}]")));
        }
        if b == a {
            continue;
        }
        let w = (b - a) / split as f64;
        for i in 0..split {
            let lo = a + w * i as f64;
            let hi = if i + 1 == split { b } else { lo + w };
            heap.push(kronrod(&f, lo, hi));
        }
    }
    loop {
        // sum in a fixed order so the result does not depend on heap layout
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * value.norm());
        if error <= target || heap.is_empty() {
            return Ok(QuadResult { value, error, panels: heap.len() });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::NonConvergence { iterations: heap.len() });
        }
        // refine a batch of the worst panels before re-summing
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            if worst.error <= target / (4.0 * heap.len().max(1) as f64) {
                heap.push(worst);
                break;
            }
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // cannot split further in binary64
                return Err(Error::NonConvergence { iterations: heap.len() });
            }
            heap.push(kronrod(&f, worst.a, mid));
            heap.push(kronrod(&f, mid, worst.b));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| Complex64::new(x.powi(5), 0.0), &[(0.0, 2.0)], 1, QuadOptions::abs(1e-14)).unwrap();
        assert!((r.value.re - 64.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_exponential() {
        let w = 200.0;
        let r = integrate(|x| Complex64::from_polar(1.0, w * x), &[(0.0, 1.0)], 64, QuadOptions::abs(1e-12)).unwrap();
        let exact = (Complex64::from_polar(1.0, w) - 1.0) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x| Complex64::new(x.sqrt(), 0.0), &[(0.0, 1.0)], 1, QuadOptions::abs(1e-11)).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn multiple_intervals_sum() {
        let r = integrate(|_| Complex64::new(1.0, 0.0), &[(0.0, 1.0), (2.0, 4.5)], 1, QuadOptions::default()).unwrap();
        assert!((r.value.re - 3.5).abs() < 1e-14);
        assert!(integrate(|_| Complex64::new(1.0, 0.0), &[(1.0, 0.0)], 1, QuadOptions::default()).is_err());
    }
}
