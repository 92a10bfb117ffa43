//! Zeroth-order Bessel and Hankel functions and the free-space Green
//! functions of `-(Δ + ω²)` in two and three dimensions.
//!
//! The kernels evaluate in `f64` regardless of the caller's scalar type and
//! round the result once; `f32` users get correctly rounded single precision.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper end of the power-series branch.
const SERIES_MAX: f64 = 4.0;
/// Lower end of the large-argument asymptotic branch.
const ASYMPTOTIC_MIN: f64 = 25.0;

/// Distances below this (in the caller's length unit) count as coincident.
pub const COINCIDENT_REL: f64 = 1e-14;

/// Angular wavenumber `ω > 0`. With unit wave speed it equals the frequency.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Wavenumber<T>(T);

impl<T: Real> Wavenumber<T> {
    pub fn new(omega: T) -> Result<Self> {
        if omega.is_finite() && omega > T::zero() {
            Ok(Self(omega))
        } else {
            Err(Error::Domain(format!("wavenumber must be positive and finite, got {omega}")))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// `J₀(x)`; even in `x`, absolute error about `1e-15` on `[0, 1e4]`.
pub fn bessel_j0<T: Real>(x: T) -> Result<T> {
    let x = x.to_f64_lossy();
    if !x.is_finite() {
        return Err(Error::Domain(format!("J0 of non-finite argument {x}")));
    }
    Ok(T::lit(j0_f64(x.abs())))
}

/// `Y₀(x)` for `x > 0`.
pub fn bessel_y0<T: Real>(x: T) -> Result<T> {
    let x = check_positive(x, "Y0")?;
    Ok(T::lit(j0_y0_f64(x).1))
}

/// `H₀⁽¹⁾(x) = J₀(x) + i Y₀(x)` for `x > 0`.
pub fn hankel1_0<T: Real>(x: T) -> Result<Complex<T>> {
    let x = check_positive(x, "H0")?;
    let (j, y) = j0_y0_f64(x);
    Ok(Complex::new(T::lit(j), T::lit(y)))
}

fn check_positive<T: Real>(x: T, name: &str) -> Result<f64> {
    let x = x.to_f64_lossy();
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("{name} needs a positive finite argument, got {x}")));
    }
    Ok(x)
}

fn j0_f64(x: f64) -> f64 {
    if x <= SERIES_MAX {
        j0_series(x)
    } else if x < ASYMPTOTIC_MIN {
        miller(x).0
    } else {
        hankel_asymptotic(x).0
    }
}

fn j0_y0_f64(x: f64) -> (f64, f64) {
    if x <= SERIES_MAX {
        let j = j0_series(x);
        (j, y0_series(x, j))
    } else if x < ASYMPTOTIC_MIN {
        let (j, neumann) = miller(x);
        let y = std::f64::consts::FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * j
            - 2.0 * std::f64::consts::FRAC_2_PI * neumann;
        (j, y)
    } else {
        hankel_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    sum
}

/// Standard series `Y₀ = (2/π)(ln(x/2) + γ) J₀ + (2/π) Σ (-1)^{k+1} H_k (x²/4)^k / (k!)²`.
fn y0_series(x: f64, j0: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let t = -term * harmonic;
        sum += t;
        if t.abs() < 1e-18 && k > 2 {
            break;
        }
    }
    std::f64::consts::FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + sum)
}

/// Backward recurrence for `J_n(x)` normalised by `J₀ + 2 Σ J_{2k} = 1`.
/// Returns `J₀(x)` and the Neumann sum `Σ_{k≥1} (-1)^k J_{2k}(x) / k`.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * (((x + 40.0) as usize) / 2 + 10);
    let mut j_next = 0.0; // J_{n+1}
    let mut j_cur = 1e-300; // J_n
    let mut norm = 0.0;
    let mut neumann = 0.0;
    for n in (1..=start).rev() {
        let j_prev = (2.0 * n as f64 / x) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{n-1}
        let order = n - 1;
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
            let k = order / 2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            neumann += sign * j_cur / k as f64;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            neumann *= 1e-250;
        }
    }
    norm += j_cur;
    (j_cur / norm, neumann / norm)
}

/// Large-argument expansion `H₀⁽¹⁾(x) ~ √(2/(πx)) e^{i(x-π/4)} Σ i^k a_k x^{-k}`,
/// summed until the terms stop decreasing.
fn hankel_asymptotic(x: f64) -> (f64, f64) {
    let mut re = 1.0;
    let mut im = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        a *= -(odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= prev || a.abs() < 1e-18 {
            break;
        }
        prev = a.abs();
        match k % 4 {
            0 => re += a,
            1 => im += a,
            2 => re -= a,
            _ => im -= a,
        }
    }
    let amp = (std::f64::consts::FRAC_2_PI / x).sqrt();
    // e^{i(x - π/4)} = (cos x + sin x + i (sin x - cos x)) / √2
    let (s, c) = x.sin_cos();
    let er = (c + s) * std::f64::consts::FRAC_1_SQRT_2;
    let ei = (s - c) * std::f64::consts::FRAC_1_SQRT_2;
    (amp * (re * er - im * ei), amp * (re * ei + im * er))
}

/// Outgoing 2D Green function `-(i/4) H₀⁽¹⁾(ω|δ|)`.
pub fn green2d<T: Real>(delta: [T; 2], omega: Wavenumber<T>) -> Result<Complex<T>> {
    let r = delta[0].hypot(delta[1]);
    green_radial(2, r, omega)
}

/// Outgoing 3D Green function `e^{iω|δ|} / (4π|δ|)`.
pub fn green3d<T: Real>(delta: [T; 3], omega: Wavenumber<T>) -> Result<Complex<T>> {
    let r = norm3(delta);
    green_radial(3, r, omega)
}

/// Green function of the given dimension as a function of the distance `r`.
/// Distances below `1e-14` (relative to a unit length) are rejected.
pub fn green_radial<T: Real>(dim: usize, r: T, omega: Wavenumber<T>) -> Result<Complex<T>> {
    green_radial_scaled(dim, r, omega, T::one())
}

/// As [`green_radial`], rejecting `r < 1e-14 · length_scale`.
pub fn green_radial_scaled<T: Real>(
    dim: usize,
    r: T,
    omega: Wavenumber<T>,
    length_scale: T,
) -> Result<Complex<T>> {
    if !r.is_finite() || r < T::lit(COINCIDENT_REL) * length_scale {
        return Err(Error::Singular { distance: r.to_f64_lossy() });
    }
    let w = omega.get();
    match dim {
        2 => {
            let h = hankel1_0(w * r)?;
            let q = T::lit(0.25);
            // -(i/4)(J + iY) = Y/4 - iJ/4
            Ok(Complex::new(h.im * q, -h.re * q))
        }
        3 => {
            let rf = r.to_f64_lossy();
            let phase = w.to_f64_lossy() * rf;
            let scale = 1.0 / (4.0 * std::f64::consts::PI * rf);
            Ok(Complex::new(T::lit(scale * phase.cos()), T::lit(scale * phase.sin())))
        }
        d => Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {d}"))),
    }
}

/// Green function between two embedded points. Two-dimensional points live
/// in the `y = 0` plane, so the Euclidean distance is the same in both cases.
pub fn green_between<T: Real>(
    dim: usize,
    a: [T; 3],
    b: [T; 3],
    omega: Wavenumber<T>,
    length_scale: T,
) -> Result<Complex<T>> {
    let r = norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
    green_radial_scaled(dim, r, omega, length_scale)
}

#[inline]
pub(crate) fn norm3<T: Real>(v: [T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
