//! Geometry and random ensembles: the candidate lattice, sparse targets,
//! sensor configurations, angular sampling densities and Blind Spots.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::real::Real;

/// Square (2D) or cubic (3D) lattice of candidate scatterer positions.
///
/// Index `j` maps to the multi-index `(j1, j2)` with `j = j1·side + j2`
/// (3D: `j = (j1·side + j2)·side + j3`), and to the point
/// `((j1+1)ℓ, (j2+1)ℓ)`. Two-dimensional points `(x, z)` are embedded as
/// `(x, 0, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice<T> {
    ell: T,
    side: usize,
    dim: usize,
}

impl<T: Real> Lattice<T> {
    pub fn new(ell: T, side: usize, dim: usize) -> Result<Self> {
        if !(ell.is_finite() && ell > T::zero()) {
            return Err(Error::InvalidArgument(format!("lattice spacing must be positive, got {ell}")));
        }
        if side == 0 {
            return Err(Error::InvalidArgument("lattice side must be at least 1".into()));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("lattice dimension must be 2 or 3, got {dim}")));
        }
        Ok(Self { ell, side, dim })
    }

    pub fn square(ell: T, side: usize) -> Result<Self> {
        Self::new(ell, side, 2)
    }

    pub fn cubic(ell: T, side: usize) -> Result<Self> {
        Self::new(ell, side, 3)
    }

    #[inline]
    pub fn ell(&self) -> T {
        self.ell
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of lattice points `m`.
    #[inline]
    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side length `ℓ·side` (written `ℓ√m` or `ℓ m^{1/3}`).
    pub fn extent(&self) -> T {
        self.ell * T::of_usize(self.side)
    }

    /// Multi-index of `j`; the unused third slot is zero in 2D.
    pub fn multi_index(&self, j: usize) -> Result<[usize; 3]> {
        let m = self.len();
        if j >= m {
            return Err(Error::IndexOutOfRange { index: j, len: m });
        }
        let s = self.side;
        Ok(match self.dim {
            2 => [j / s, j % s, 0],
            _ => [j / (s * s), (j / s) % s, j % s],
        })
    }

    pub fn index_of(&self, multi: [usize; 3]) -> Result<usize> {
        let s = self.side;
        let used = if self.dim == 2 { &multi[..2] } else { &multi[..] };
        if used.iter().any(|&c| c >= s) || (self.dim == 2 && multi[2] != 0) {
            return Err(Error::InvalidArgument(format!("multi-index {multi:?} outside a side-{s} lattice")));
        }
        Ok(match self.dim {
            2 => multi[0] * s + multi[1],
            _ => (multi[0] * s + multi[1]) * s + multi[2],
        })
    }

    pub fn point(&self, j: usize) -> Result<[T; 3]> {
        let [a, b, c] = self.multi_index(j)?;
        let coord = |k: usize| T::of_usize(k + 1) * self.ell;
        Ok(match self.dim {
            2 => [coord(a), T::zero(), coord(b)],
            _ => [coord(a), coord(b), coord(c)],
        })
    }

    pub fn points(&self) -> Vec<[T; 3]> {
        (0..self.len()).map(|j| self.point(j).expect("index in range")).collect()
    }

    /// Centre of the lattice's bounding box.
    pub fn center(&self) -> [T; 3] {
        let c = T::of_usize(self.side + 1) * self.ell * T::lit(0.5);
        match self.dim {
            2 => [c, T::zero(), c],
            _ => [c, c, c],
        }
    }
}

/// Sparse complex strength vector on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Target<T> {
    nu: Vec<Complex<T>>,
    support: Vec<usize>,
}

impl<T: Real> Target<T> {
    /// Builds a target from a dense strength vector; the support is the set
    /// of exactly nonzero entries.
    pub fn from_dense(nu: Vec<Complex<T>>) -> Self {
        let support = nu
            .iter()
            .enumerate()
            .filter(|(_, v)| v.re != T::zero() || v.im != T::zero())
            .map(|(j, _)| j)
            .collect();
        Self { nu, support }
    }

    /// Builds a target of length `m` from `(index, strength)` pairs.
    pub fn from_entries(m: usize, entries: &[(usize, Complex<T>)]) -> Result<Self> {
        let mut nu = vec![Complex::new(T::zero(), T::zero()); m];
        for &(j, v) in entries {
            if j >= m {
                return Err(Error::IndexOutOfRange { index: j, len: m });
            }
            nu[j] = v;
        }
        Ok(Self::from_dense(nu))
    }

    #[inline]
    pub fn nu(&self) -> &[Complex<T>] {
        &self.nu
    }

    /// Sorted support indices.
    #[inline]
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    #[inline]
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Strengths restricted to the support, in support order.
    pub fn support_values(&self) -> Vec<Complex<T>> {
        self.support.iter().map(|&j| self.nu[j]).collect()
    }

    pub fn scaled(&self, a: T) -> Self {
        Self::from_dense(self.nu.iter().map(|&v| v * a).collect())
    }
}

/// Magnitude law for randomly drawn targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmplitudeLaw<T> {
    Constant(T),
    Uniform { lo: T, hi: T },
}

impl<T: Real> Default for AmplitudeLaw<T> {
    fn default() -> Self {
        Self::Constant(T::one())
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of Monte Carlo trial `t` under `master`.
pub fn trial_seed(master: u64, t: u64) -> u64 {
    master ^ splitmix64(t)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an `s`-sparse target: support uniform without replacement, phases
/// i.i.d. uniform on `[0, 2π)`, magnitudes from `law`.
pub fn draw_target<T: Real>(lat: &Lattice<T>, s: usize, law: AmplitudeLaw<T>, seed: u64) -> Result<Target<T>> {
    let mut rng = rng_from_seed(seed);
    draw_target_with(lat, s, law, &mut rng)
}

pub fn draw_target_with<T: Real, R: Rng>(
    lat: &Lattice<T>,
    s: usize,
    law: AmplitudeLaw<T>,
    rng: &mut R,
) -> Result<Target<T>> {
    let m = lat.len();
    if s == 0 || s > m {
        return Err(Error::InvalidArgument(format!("sparsity {s} must lie in 1..={m}")));
    }
    let mut support = rand::seq::index::sample(rng, m, s).into_vec();
    support.sort_unstable();
    let mut nu = vec![Complex::new(T::zero(), T::zero()); m];
    for &j in &support {
        let mag = match law {
            AmplitudeLaw::Constant(a) => a,
            AmplitudeLaw::Uniform { lo, hi } => lo + (hi - lo) * T::lit(rng.random::<f64>()),
        };
        let phase = T::lit(2.0 * PI * rng.random::<f64>());
        nu[j] = Complex::from_polar(mag, phase);
    }
    Ok(Target { nu, support })
}

/// Number of knots in the inverse-CDF table.
pub const CDF_KNOTS: usize = 10_000;

type Pdf1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Pdf2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Probability density on `[-π, π]` for incident or sampling angles.
#[derive(Clone)]
pub struct AngleDensity {
    pdf: Pdf1,
    support: Vec<(f64, f64)>,
    smoothness: u32,
    knots: Vec<f64>,
    cdf: Vec<f64>,
}

impl fmt::Debug for AngleDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngleDensity")
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl AngleDensity {
    /// Wraps an already normalised density. `support` lists sorted disjoint
    /// intervals inside `[-π, π]` outside of which `pdf` vanishes.
    pub fn new(pdf: impl Fn(f64) -> f64 + Send + Sync + 'static, support: Vec<(f64, f64)>, smoothness: u32) -> Result<Self> {
        let pdf: Pdf1 = Arc::new(pdf);
        check_support(&support)?;
        let mass = total_mass(&pdf, &support)?;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("density integrates to {mass}, not 1")));
        }
        Self::build(pdf, support, smoothness)
    }

    /// Normalises `pdf` by its integral over `support`.
    pub fn normalized(
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Vec<(f64, f64)>,
        smoothness: u32,
    ) -> Result<Self> {
        check_support(&support)?;
        let raw: Pdf1 = Arc::new(pdf);
        let mass = total_mass(&raw, &support)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("density is not normalizable (mass {mass})")));
        }
        let scaled: Pdf1 = Arc::new(move |t| raw(t) / mass);
        Self::build(scaled, support, smoothness)
    }

    /// Uniform density on `[-π, π]`.
    pub fn uniform() -> Self {
        Self::uniform_on(-PI, PI).expect("full circle is a valid support")
    }

    pub fn uniform_on(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        let h = 1.0 / (b - a);
        let smooth = if a <= -PI && b >= PI { u32::MAX } else { 0 };
        Self::new(move |t| if t >= a && t <= b { h } else { 0.0 }, vec![(a, b)], smooth)
    }

    /// Density proportional to `(θ-a)^k (b-θ)^k` on `[a, b]`; it is
    /// `C^{k-1}` on the circle.
    pub fn bump(a: f64, b: f64, k: u32) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        let ki = k as i32;
        Self::normalized(
            move |t| if t > a && t < b { ((t - a) * (b - t)).powi(ki) } else { 0.0 },
            vec![(a, b)],
            k.saturating_sub(1),
        )
    }

    /// Uniform density of the given width centred at `theta0`.
    pub fn narrow(theta0: f64, width: f64) -> Result<Self> {
        Self::uniform_on(theta0 - 0.5 * width, theta0 + 0.5 * width)
    }

    fn build(pdf: Pdf1, support: Vec<(f64, f64)>, smoothness: u32) -> Result<Self> {
        let lo = support[0].0;
        let hi = support[support.len() - 1].1;
        let n = CDF_KNOTS;
        let knots: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            acc += gauss_legendre5(&pdf, w[0], w[1]);
            cdf.push(acc);
        }
        if !(acc.is_finite() && acc > 0.0) {
            return Err(Error::Domain("density has no mass on its support".into()));
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { pdf, support, smoothness, knots, cdf })
    }

    #[inline]
    pub fn pdf(&self, theta: f64) -> f64 {
        (self.pdf)(theta)
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// Smoothness degree `h` (metadata; `u32::MAX` for the smooth uniform law).
    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// Tabulated cumulative distribution function.
    pub fn cdf(&self, theta: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if theta <= first {
            return 0.0;
        }
        if theta >= last {
            return 1.0;
        }
        let pos = (theta - first) / (last - first) * (self.knots.len() - 1) as f64;
        let i = (pos.floor() as usize).min(self.knots.len() - 2);
        let t = pos - i as f64;
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse-CDF sample from a uniform variate `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.knots[i - 1] + t * (self.knots[i] - self.knots[i - 1])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.random::<f64>())).collect()
    }
}

fn check_support(support: &[(f64, f64)]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("density support is empty".into()));
    }
    let tol = 1e-12;
    let mut prev = -PI - tol;
    for &(a, b) in support {
        if !(a.is_finite() && b.is_finite()) || b <= a || a < prev || b > PI + tol {
            return Err(Error::InvalidArgument(format!(
                "support intervals must be sorted, disjoint and inside [-π, π]: {support:?}"
            )));
        }
        prev = b;
    }
    Ok(())
}

fn total_mass(pdf: &Pdf1, support: &[(f64, f64)]) -> Result<f64> {
    let r = quad::integrate(
        |t| num_complex::Complex64::new(pdf(t), 0.0),
        support,
        16,
        QuadOptions { abs_tol: 1e-13, ..QuadOptions::default() },
    )?;
    Ok(r.value.re)
}

fn gauss_legendre5(f: &Pdf1, a: f64, b: f64) -> f64 {
    const X: [f64; 3] = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    const W: [f64; 3] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = W[0] * f(c);
    for i in 1..3 {
        s += W[i] * (f(c - h * X[i]) + f(c + h * X[i]));
    }
    s * h
}

/// Density on the unit sphere with respect to surface measure, in the
/// coordinates of [`sphere_direction`]: latitude `θ ∈ [-π/2, π/2]` and
/// azimuth `φ ∈ [-π, π]`.
#[derive(Clone)]
pub struct SphereDensity {
    pdf: Pdf2,
    max_pdf: f64,
    smoothness: u32,
}

impl fmt::Debug for SphereDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereDensity")
            .field("max_pdf", &self.max_pdf)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl SphereDensity {
    /// `max_pdf` must bound the density; it drives rejection sampling.
    pub fn new(pdf: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, max_pdf: f64, smoothness: u32) -> Result<Self> {
        let pdf: Pdf2 = Arc::new(pdf);
        let d = Self { pdf, max_pdf, smoothness };
        let mass = d.mass()?;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("sphere density integrates to {mass}, not 1")));
        }
        Ok(d)
    }

    pub fn uniform() -> Self {
        let h = 1.0 / (4.0 * PI);
        Self { pdf: Arc::new(move |_, _| h), max_pdf: h, smoothness: u32::MAX }
    }

    fn mass(&self) -> Result<f64> {
        let pdf = self.pdf.clone();
        let outer = |theta: f64| {
            let pdf = pdf.clone();
            let inner = quad::integrate(
                move |phi| num_complex::Complex64::new(pdf(theta, phi), 0.0),
                &[(-PI, PI)],
                8,
                QuadOptions::abs(1e-13),
            )
            .map(|r| r.value.re)
            .unwrap_or(f64::NAN);
            num_complex::Complex64::new(inner * theta.cos(), 0.0)
        };
        let r = quad::integrate(outer, &[(-0.5 * PI, 0.5 * PI)], 8, QuadOptions::abs(1e-12))?;
        Ok(r.value.re)
    }

    #[inline]
    pub fn pdf(&self, theta: f64, phi: f64) -> f64 {
        (self.pdf)(theta, phi)
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// Rejection sampling from the uniform law on the sphere.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = PI * (2.0 * rng.random::<f64>() - 1.0);
            let theta = z.asin();
            if rng.random::<f64>() * self.max_pdf <= self.pdf(theta, phi) {
                out.push((theta, phi));
            }
        }
        out
    }
}

/// Unit vector `(cos θ cos φ, cos θ sin φ, sin θ)`.
pub fn sphere_direction<T: Real>(theta: T, phi: T) -> Result<[T; 3]> {
    let half_pi = T::FRAC_PI_2();
    let pi = T::PI();
    let slack = T::lit(1e-12);
    if !(theta.abs() <= half_pi + slack && phi.abs() <= pi + slack) {
        return Err(Error::InvalidArgument(format!("direction angles out of range: ({theta}, {phi})")));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok([ct * cp, ct * sp, st])
}

/// In-plane direction `(cos θ, sin θ)` embedded as `(cos θ, 0, sin θ)`.
pub fn plane_direction<T: Real>(theta: T) -> [T; 3] {
    let (s, c) = theta.sin_cos();
    [c, T::zero(), s]
}

/// Sensor configuration for the measurement models.
#[derive(Clone, Debug, PartialEq)]
pub enum SensorSet<T> {
    /// Planar far field: incident angles `θ_k` and sampling angles `θ̃_l`.
    FarField2d { incident: Vec<T>, sampling: Vec<T> },
    /// Spherical far field: `(θ, φ)` pairs for incidence and sampling.
    FarField3d { incident: Vec<(T, T)>, sampling: Vec<(T, T)> },
    /// Point sensors on the measurement segment (2D) or square (3D).
    NearField { points: Vec<[T; 3]>, aperture: T, standoff: T },
}

impl<T: Real> SensorSet<T> {
    /// Number of incident waves `p` (zero for near-field sets).
    pub fn p(&self) -> usize {
        match self {
            Self::FarField2d { incident, .. } => incident.len(),
            Self::FarField3d { incident, .. } => incident.len(),
            Self::NearField { .. } => 0,
        }
    }

    /// Number of sampling directions or sensor points `n`.
    pub fn n(&self) -> usize {
        match self {
            Self::FarField2d { sampling, .. } => sampling.len(),
            Self::FarField3d { sampling, .. } => sampling.len(),
            Self::NearField { points, .. } => points.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::FarField2d { .. } => "far-field-2d",
            Self::FarField3d { .. } => "far-field-3d",
            Self::NearField { .. } => "near-field",
        }
    }

    /// Incident unit directions.
    pub fn incident_directions(&self) -> Result<Vec<[T; 3]>> {
        match self {
            Self::FarField2d { incident, .. } => Ok(incident.iter().map(|&t| plane_direction(t)).collect()),
            Self::FarField3d { incident, .. } => incident.iter().map(|&(t, f)| sphere_direction(t, f)).collect(),
            Self::NearField { .. } => Err(Error::InvalidArgument("near-field sensors have no incident directions".into())),
        }
    }

    /// Sampling unit directions.
    pub fn sampling_directions(&self) -> Result<Vec<[T; 3]>> {
        match self {
            Self::FarField2d { sampling, .. } => Ok(sampling.iter().map(|&t| plane_direction(t)).collect()),
            Self::FarField3d { sampling, .. } => sampling.iter().map(|&(t, f)| sphere_direction(t, f)).collect(),
            Self::NearField { .. } => Err(Error::InvalidArgument("near-field sensors have no sampling directions".into())),
        }
    }
}

/// Draws `p` incident and `n` sampling angles i.i.d. from the given densities.
pub fn draw_far_field_2d<T: Real, R: Rng>(
    p: usize,
    n: usize,
    f_inc: &AngleDensity,
    f_samp: &AngleDensity,
    rng: &mut R,
) -> SensorSet<T> {
    let incident = f_inc.sample(rng, p).into_iter().map(T::lit).collect();
    let sampling = f_samp.sample(rng, n).into_iter().map(T::lit).collect();
    SensorSet::FarField2d { incident, sampling }
}

pub fn draw_far_field_3d<T: Real, R: Rng>(
    p: usize,
    n: usize,
    f_inc: &SphereDensity,
    f_samp: &SphereDensity,
    rng: &mut R,
) -> SensorSet<T> {
    let conv = |v: Vec<(f64, f64)>| v.into_iter().map(|(a, b)| (T::lit(a), T::lit(b))).collect();
    let incident = conv(f_inc.sample(rng, p));
    let sampling = conv(f_samp.sample(rng, n));
    SensorSet::FarField3d { incident, sampling }
}

/// Draws `n` near-field sensors uniformly on the aperture: a segment of
/// length `aperture` (2D) or a square of that side (3D), centred over the
/// lattice in the plane `z = ℓ - standoff`, i.e. `standoff` below the
/// nearest lattice layer.
pub fn draw_near_field<T: Real, R: Rng>(
    lat: &Lattice<T>,
    n: usize,
    aperture: T,
    standoff: T,
    rng: &mut R,
) -> Result<SensorSet<T>> {
    if n == 0 || !(aperture > T::zero()) || !(standoff > T::zero()) {
        return Err(Error::InvalidArgument("near-field sensors need n >= 1 and positive aperture and standoff".into()));
    }
    let c = lat.center();
    let z = lat.ell() - standoff;
    let mut offset = || aperture * T::lit(rng.random::<f64>() - 0.5);
    let points = (0..n)
        .map(|_| match lat.dim() {
            2 => [c[0] + offset(), T::zero(), z],
            _ => {
                let dx = offset();
                let dy = offset();
                [c[0] + dx, c[1] + dy, z]
            }
        })
        .collect();
    Ok(SensorSet::NearField { points, aperture, standoff })
}

/// Largest sensor-to-lattice distance bound `Δ_max` for the near-field
/// geometry: `√(¼(L + ℓ√m)² + (Δ_min + ℓ√m)²)` in 2D and
/// `√(2·¼(L + ℓm^{1/3})² + (Δ_min + ℓm^{1/3})²)` in 3D.
pub fn delta_max<T: Real>(dim: usize, aperture: T, extent: T, standoff: T) -> T {
    let quarter = T::lit(0.25);
    let horiz = quarter * (aperture + extent).powi(2);
    let vert = (standoff + extent).powi(2);
    let lateral = if dim == 3 { T::lit(2.0) * horiz } else { horiz };
    (lateral + vert).sqrt()
}

/// Deduplication tolerance for Blind-Spot angles.
pub const BLIND_SPOT_TOL: f64 = 1e-12;

/// Blind Spots of a planar lattice: directions (and antipodes) of all
/// pairwise differences, in `(-π, π]`, sorted and deduplicated.
pub fn blind_spots<T: Real>(lat: &Lattice<T>) -> Result<Vec<T>> {
    if lat.dim() != 2 {
        return Err(Error::InvalidArgument("Blind Spots are defined for planar lattices".into()));
    }
    let pts: Vec<[T; 2]> = lat.points().iter().map(|p| [p[0], p[2]]).collect();
    Ok(blind_spots_of_points(&pts))
}

/// Blind Spots of an arbitrary planar point set.
pub fn blind_spots_of_points<T: Real>(points: &[[T; 2]]) -> Vec<T> {
    let pi = T::PI();
    let wrap = |a: T| if a <= -pi { a + pi + pi } else { a };
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let a = (q[1] - p[1]).atan2(q[0] - p[0]);
            let b = if a > T::zero() { a - pi } else { a + pi };
            out.push(wrap(a));
            out.push(wrap(b));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    let tol = T::lit(BLIND_SPOT_TOL);
    out.dedup_by(|a, b| (*a - *b).abs() <= tol);
    // -π and π are the same direction; only π is kept
    if out.len() > 1 && (out[0] + pi).abs() <= tol && (out[out.len() - 1] - pi).abs() <= tol {
        out.remove(0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lattice_point_examples() {
        let lat = Lattice::square(1.0, 2).unwrap();
        assert_eq!(lat.point(0).unwrap(), [1.0, 0.0, 1.0]);
        assert_eq!(lat.point(2).unwrap(), [2.0, 0.0, 1.0]);
        let lat = Lattice::square(0.5, 3).unwrap();
        assert_eq!(lat.point(8).unwrap(), [1.5, 0.0, 1.5]);
        assert!(matches!(lat.point(9), Err(Error::IndexOutOfRange { .. })));
        let cube = Lattice::cubic(1.0, 2).unwrap();
        assert_eq!(cube.len(), 8);
        assert_eq!(cube.point(7).unwrap(), [2.0, 2.0, 2.0]);
        assert_eq!(cube.point(1).unwrap(), [1.0, 1.0, 2.0]);
    }

    #[test]
    fn lattice_rejects_bad_parameters() {
        assert!(Lattice::new(0.0, 2, 2).is_err());
        assert!(Lattice::new(1.0, 0, 2).is_err());
        assert!(Lattice::new(1.0, 2, 4).is_err());
    }

    proptest! {
        #[test]
        fn lattice_index_round_trip(side in 1usize..9, dim in 2usize..4, seed in 0usize..10_000) {
            let lat = Lattice::new(0.7, side, dim).unwrap();
            let j = seed % lat.len();
            let multi = lat.multi_index(j).unwrap();
            prop_assert_eq!(lat.index_of(multi).unwrap(), j);
            let p = lat.point(j).unwrap();
            let back: Vec<usize> = p.iter().map(|c| (*c / 0.7f64).round() as usize).collect();
            if dim == 2 {
                prop_assert_eq!([back[0] - 1, back[2] - 1], [multi[0], multi[1]]);
            } else {
                prop_assert_eq!([back[0] - 1, back[1] - 1, back[2] - 1], multi);
            }
        }

        #[test]
        fn drawn_target_magnitudes_follow_law(s in 1usize..16, seed: u64, a in 0.01f64..3.0) {
            let lat = Lattice::square(1.0, 4).unwrap();
            let t = draw_target(&lat, s, AmplitudeLaw::Constant(a), seed).unwrap();
            prop_assert_eq!(t.sparsity(), s);
            for (j, v) in t.nu().iter().enumerate() {
                if t.support().contains(&j) {
                    prop_assert!((v.norm() - a).abs() <= 1e-15 * a);
                } else {
                    prop_assert_eq!(*v, Complex::new(0.0, 0.0));
                }
            }
        }

        #[test]
        fn blind_spots_closed_under_antipode(side in 2usize..5) {
            let lat = Lattice::square(1.0, side).unwrap();
            let bs = blind_spots(&lat).unwrap();
            for &a in &bs {
                let b = if a > 0.0 { a - PI } else { a + PI };
                prop_assert!(bs.iter().any(|&c| (c - b).abs() < 1e-12 || (c - b).abs() > 2.0 * PI - 1e-12));
            }
            for axis in [0.0, PI / 2.0, -PI / 2.0, PI] {
                prop_assert!(bs.iter().any(|&c| (c - axis).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn target_full_support_and_determinism() {
        let lat = Lattice::square(1.0, 3).unwrap();
        let t = draw_target(&lat, 9, AmplitudeLaw::default(), 5).unwrap();
        assert_eq!(t.support(), (0..9).collect::<Vec<_>>().as_slice());
        assert_eq!(t, draw_target(&lat, 9, AmplitudeLaw::default(), 5).unwrap());
        assert!(draw_target(&lat, 10, AmplitudeLaw::default(), 5).is_err());
    }

    #[test]
    fn support_frequencies_are_uniform() {
        // 1000 single-site draws over a 3x3 lattice: counts ~ Binomial(1000, 1/9)
        let lat = Lattice::square(1.0, 3).unwrap();
        let mut counts = [0usize; 9];
        let mut rng = rng_from_seed(99);
        for _ in 0..1000 {
            let t = draw_target_with(&lat, 1, AmplitudeLaw::<f64>::default(), &mut rng).unwrap();
            counts[t.support()[0]] += 1;
        }
        let p = 1.0 / 9.0;
        let sigma = (1000.0f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0 * p).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn uniform_angle_moments() {
        let f = AngleDensity::uniform();
        let mut rng = rng_from_seed(1);
        let xs = f.sample(&mut rng, 100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!((var / (PI * PI / 3.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn angle_support_confinement_and_concentration() {
        let f = AngleDensity::uniform_on(0.0, PI / 2.0).unwrap();
        let mut rng = rng_from_seed(2);
        assert!(f.sample(&mut rng, 10_000).iter().all(|&t| (0.0..=PI / 2.0).contains(&t)));
        let g = AngleDensity::narrow(0.3, 1e-3).unwrap();
        assert!(g.sample(&mut rng, 10_000).iter().all(|&t| (t - 0.3).abs() < 1e-2));
    }

    #[test]
    fn unnormalized_density_rejected() {
        assert!(AngleDensity::new(|_| 1.0, vec![(-PI, PI)], 0).is_err());
        assert!(AngleDensity::normalized(|_| 0.0, vec![(-1.0, 1.0)], 0).is_err());
        assert!(AngleDensity::new(|_| 1.0, vec![(1.0, 0.5)], 0).is_err());
    }

    /// Kolmogorov–Smirnov statistic against the analytic CDF of the bump
    /// density `140 t³(1-t)³` on `[0, 1]` (Beta(4, 4)).
    #[test]
    fn kolmogorov_smirnov_bump() {
        let f = AngleDensity::bump(0.0, 1.0, 3).unwrap();
        let exact_cdf = |t: f64| {
            // regularized incomplete beta I_t(4, 4)
            let mut s = 0.0;
            for j in 4..=7u32 {
                let binom = (1..=7u32).product::<u32>() as f64
                    / ((1..=j).product::<u32>() as f64 * (1..=(7 - j)).product::<u32>() as f64);
                s += binom * t.powi(j as i32) * (1.0 - t).powi(7 - j as i32);
            }
            s
        };
        let mut rng = rng_from_seed(3);
        let mut xs = f.sample(&mut rng, 100_000);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = exact_cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value 1.628/√n
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn sphere_directions() {
        assert_eq!(sphere_direction(0.0, 0.0).unwrap(), [1.0, 0.0, 0.0]);
        let p = sphere_direction(PI / 2.0, 1.3).unwrap();
        assert!(p[0].abs() < 1e-16 && p[1].abs() < 1e-16 && (p[2] - 1.0).abs() < 1e-16);
        let q = sphere_direction(PI / 4.0, PI / 2.0).unwrap();
        let h = 0.5f64.sqrt();
        assert!(q[0].abs() < 1e-16 && (q[1] - h).abs() < 1e-15 && (q[2] - h).abs() < 1e-15);
        assert!(sphere_direction(2.0, 0.0).is_err());
        for i in 0..50 {
            let v = sphere_direction(-1.5 + 0.06 * i as f64, -3.0 + 0.12 * i as f64).unwrap();
            assert!((v.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn sphere_density_normalization_and_sampling() {
        let d = SphereDensity::new(|t, p| (1.0 + 0.5 * t.cos() * p.cos()) / (4.0 * PI), 1.5 / (4.0 * PI), 1).unwrap();
        let mut rng = rng_from_seed(4);
        let s = d.sample(&mut rng, 20_000);
        // E[x] = E[cos θ cos φ] = 0.5 · (1/3) under this density
        let mx = s.iter().map(|&(t, p)| t.cos() * p.cos()).sum::<f64>() / s.len() as f64;
        assert!((mx - 1.0 / 6.0).abs() < 0.015, "{mx}");
        assert!(SphereDensity::new(|_, _| 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn blind_spot_examples() {
        let two = blind_spots_of_points(&[[0.0f64, 0.0], [1.0, 0.0]]);
        assert_eq!(two.len(), 2);
        assert!(two[0].abs() < 1e-15 && (two[1] - PI).abs() < 1e-15);
        let lat = Lattice::square(1.0, 2).unwrap();
        let bs = blind_spots(&lat).unwrap();
        let mut want = vec![0.0, PI / 2.0, PI, -PI / 2.0, PI / 4.0, -3.0 * PI / 4.0, 3.0 * PI / 4.0, -PI / 4.0];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(bs.len(), 8);
        for (a, b) in bs.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(blind_spots_of_points::<f64>(&[[0.0, 0.0]]).is_empty());
    }

    #[test]
    fn near_field_geometry() {
        let lat = Lattice::square(1.0f64, 4).unwrap();
        let mut rng = rng_from_seed(5);
        let s = draw_near_field(&lat, 50, 6.0, 1.0, &mut rng).unwrap();
        let SensorSet::NearField { points, .. } = &s else { panic!() };
        let c = lat.center()[0];
        for p in points {
            assert_eq!(p[2], 0.0);
            assert!((p[0] - c).abs() <= 3.0);
        }
        assert!((delta_max(2, 2.0f64, 1.0, 1.0) - 2.5).abs() < 1e-15);
    }
}
