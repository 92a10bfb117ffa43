//! Sensing matrices (MIMO Born, SIMO far field, diffraction-tomography near
//! field), coherence and spectral diagnostics, and the Herglotz-integral
//! predictions behind the coherence bounds.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{dot, phase};
use crate::linalg::{power_iteration_norm, CMatrix};
use crate::quad::{self, QuadOptions};
use crate::real::Real;
use crate::scene::{plane_direction, AngleDensity, Lattice, SensorSet, SphereDensity};
use crate::specfun::{green_between, Wavenumber};

/// Which measurement model produced a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    MimoBorn,
    SimoFarField,
    DtNearField,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MimoBorn => "mimo-born",
            Self::SimoFarField => "simo-far-field",
            Self::DtNearField => "dt-near-field",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mimo-born" => Some(Self::MimoBorn),
            "simo-far-field" => Some(Self::SimoFarField),
            "dt-near-field" => Some(Self::DtNearField),
            _ => None,
        }
    }
}

/// Dense measurement matrix with its provenance.
///
/// MIMO rows are measurement-major: row `k·n + l` pairs incident wave `k`
/// with sampling direction `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingMatrix<T> {
    pub entries: CMatrix<T>,
    pub kind: MatrixKind,
    pub omega: T,
    /// Number of sampling directions or sensors.
    pub n: usize,
    /// Number of incident waves (1 for single-input models).
    pub p: usize,
}

impl<T: Real> SensingMatrix<T> {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }
}

fn assemble_rows<T: Real>(
    rows: usize,
    cols: usize,
    row: impl Fn(usize) -> Result<Vec<Complex<T>>> + Sync + Send,
) -> Result<CMatrix<T>> {
    let parts: Vec<Vec<Complex<T>>> = (0..rows).into_par_iter().map(row).collect::<Result<_>>()?;
    CMatrix::from_row_major(rows, cols, parts.concat())
}

/// MIMO Born matrix for planar angles.
pub fn build_mimo_born<T: Real>(
    lat: &Lattice<T>,
    thetas: &[T],
    tthetas: &[T],
    omega: Wavenumber<T>,
) -> Result<SensingMatrix<T>> {
    let inc: Vec<_> = thetas.iter().map(|&t| plane_direction(t)).collect();
    let samp: Vec<_> = tthetas.iter().map(|&t| plane_direction(t)).collect();
    build_mimo_born_dirs(lat, &inc, &samp, omega)
}

/// MIMO Born matrix with entries `e^{-iω r_j·d̃_l} e^{iω r_j·d_k}` at row `k·n + l`.
pub fn build_mimo_born_dirs<T: Real>(
    lat: &Lattice<T>,
    incident: &[[T; 3]],
    sampling: &[[T; 3]],
    omega: Wavenumber<T>,
) -> Result<SensingMatrix<T>> {
    let (p, n) = (incident.len(), sampling.len());
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument("MIMO matrix needs p >= 1 and n >= 1".into()));
    }
    let pts = lat.points();
    let w = omega.get();
    let entries = assemble_rows(n * p, pts.len(), |row| {
        let (d, dt) = (incident[row / n], sampling[row % n]);
        let diff = [d[0] - dt[0], d[1] - dt[1], d[2] - dt[2]];
        Ok(pts.iter().map(|&r| phase(w * dot(r, diff))).collect())
    })?;
    Ok(SensingMatrix { entries, kind: MatrixKind::MimoBorn, omega: w, n, p })
}

/// SIMO far-field matrix `Φ_lj = e^{-iω r_j·d̃_l}` for planar angles.
pub fn build_simo_farfield<T: Real>(lat: &Lattice<T>, tthetas: &[T], omega: Wavenumber<T>) -> Result<SensingMatrix<T>> {
    let samp: Vec<_> = tthetas.iter().map(|&t| plane_direction(t)).collect();
    build_simo_farfield_dirs(lat, &samp, omega)
}

pub fn build_simo_farfield_dirs<T: Real>(
    lat: &Lattice<T>,
    sampling: &[[T; 3]],
    omega: Wavenumber<T>,
) -> Result<SensingMatrix<T>> {
    let n = sampling.len();
    if n == 0 {
        return Err(Error::InvalidArgument("SIMO matrix needs n >= 1".into()));
    }
    let pts = lat.points();
    let w = omega.get();
    let entries = assemble_rows(n, pts.len(), |l| {
        Ok(pts.iter().map(|&r| phase(-w * dot(r, sampling[l]))).collect())
    })?;
    Ok(SensingMatrix { entries, kind: MatrixKind::SimoFarField, omega: w, n, p: 1 })
}

/// Near-field matrix with entries `G(a_j - r_l)` (the factor `ω²` removed).
pub fn build_dt_nearfield<T: Real>(
    lat: &Lattice<T>,
    sensors: &SensorSet<T>,
    omega: Wavenumber<T>,
) -> Result<SensingMatrix<T>> {
    let SensorSet::NearField { points, .. } = sensors else {
        return Err(Error::InvalidArgument("near-field matrix needs a near-field sensor set".into()));
    };
    let pts = lat.points();
    let entries = assemble_rows(points.len(), pts.len(), |j| {
        pts.iter()
            .map(|&r| green_between(lat.dim(), points[j], r, omega, lat.ell()))
            .collect()
    })?;
    Ok(SensingMatrix { entries, kind: MatrixKind::DtNearField, omega: omega.get(), n: points.len(), p: 1 })
}

/// Builds the matrix matching a sensor set: MIMO Born for far-field sets
/// with incident waves, SIMO for far-field sets without, near field otherwise.
pub fn build_from_sensors<T: Real>(
    lat: &Lattice<T>,
    sensors: &SensorSet<T>,
    omega: Wavenumber<T>,
) -> Result<SensingMatrix<T>> {
    match sensors {
        SensorSet::NearField { .. } => build_dt_nearfield(lat, sensors, omega),
        _ if sensors.p() == 0 => build_simo_farfield_dirs(lat, &sensors.sampling_directions()?, omega),
        _ => build_mimo_born_dirs(lat, &sensors.incident_directions()?, &sensors.sampling_directions()?, omega),
    }
}

/// Mutual coherence `max_{i≠j} |⟨Φ_i, Φ_j⟩| / (‖Φ_i‖ ‖Φ_j‖)`.
pub fn coherence<T: Real>(phi: &CMatrix<T>) -> Result<T> {
    let norms = phi.column_norms();
    if norms.iter().any(|n| n.is_zero()) {
        return Err(Error::DegenerateMatrix("zero column".into()));
    }
    coherence_with_norms(phi, &norms)
}

/// Coherence of a matrix whose entries all have unit modulus, so every
/// column has norm `√rows`.
pub fn coherence_unit_entries<T: Real>(phi: &CMatrix<T>) -> Result<T> {
    let norms = vec![T::of_usize(phi.rows()).sqrt(); phi.cols()];
    coherence_with_norms(phi, &norms)
}

fn coherence_with_norms<T: Real>(phi: &CMatrix<T>, norms: &[T]) -> Result<T> {
    let m = phi.cols();
    if m < 2 {
        return Err(Error::InvalidArgument("coherence needs at least two columns".into()));
    }
    // column-major copy for contiguous inner products
    let cols: Vec<Vec<Complex<T>>> = (0..m).map(|j| phi.column(j)).collect();
    let best = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best = T::zero();
            for j in i + 1..m {
                let ip = crate::linalg::inner(&cols[i], &cols[j]);
                best = best.max(ip.norm() / (norms[i] * norms[j]));
            }
            best
        })
        .reduce(T::zero, T::max);
    Ok(best)
}

/// Largest singular value by power iteration on `Φ*Φ`.
pub fn spectral_norm<T: Real>(phi: &CMatrix<T>) -> Result<T> {
    power_iteration_norm(phi, T::lit(1e-10), 100_000)
}

/// Coherence of the rows of `Φ`, i.e. `μ(Φ*)`.
pub fn gram_row_coherence<T: Real>(phi: &CMatrix<T>) -> Result<T> {
    if phi.rows() < 2 {
        return Err(Error::InvalidArgument("row coherence needs at least two rows".into()));
    }
    coherence(&phi.adjoint())
}

/// `|sin(N z) / sin z|` with the removable poles at `z ∈ πℤ` filled by `N`.
fn dirichlet_ratio(n: usize, z: f64) -> f64 {
    let e = z - PI * (z / PI).round();
    if e.abs() < 1e-9 {
        return n as f64;
    }
    ((n as f64 * e).sin() / e.sin()).abs()
}

/// Normalised MIMO Gram entry `(1/m)|Σ_r Φ_{(θ,θ̃), r} conj(Φ_{(θ',θ̃'), r})|`
/// from the Dirichlet-kernel product
/// `(1/m)|sin(√m z₁)/sin z₁| |sin(√m z₂)/sin z₂|`, with
/// `z₁ = ωℓ(cos θ' - cos θ + cos θ̃ - cos θ̃')/2` and `z₂` the same with sines.
///
/// At the removable poles (`z ≡ 0 mod π`) the ratio takes its limit `√m`.
pub fn gram_entry_closed_form<T: Real>(lat: &Lattice<T>, angles: [T; 4], omega: Wavenumber<T>) -> Result<T> {
    if lat.dim() != 2 {
        return Err(Error::InvalidArgument("closed-form Gram entry needs a square lattice".into()));
    }
    let [t, tp, tt, ttp] = angles.map(|a| a.to_f64_lossy());
    let wl = omega.get().to_f64_lossy() * lat.ell().to_f64_lossy();
    let z1 = 0.5 * wl * (tp.cos() - t.cos() + tt.cos() - ttp.cos());
    let z2 = 0.5 * wl * (tp.sin() - t.sin() + tt.sin() - ttp.sin());
    let side = lat.side();
    let m = lat.len() as f64;
    Ok(T::lit(dirichlet_ratio(side, z1) * dirichlet_ratio(side, z2) / m))
}

fn phase_panels(omega_r: f64, width: f64) -> usize {
    ((omega_r * width / PI).ceil() as usize + 4).min(100_000)
}

/// `∫ e^{iω d(θ)·δ} f(θ) dθ` with `d(θ) = (cos θ, sin θ)`, to absolute
/// tolerance `1e-10`.
pub fn herglotz_expectation<T: Real>(f: &AngleDensity, omega: Wavenumber<T>, delta: [T; 2]) -> Result<Complex<T>> {
    herglotz_expectation_tol(f, omega, delta, QuadOptions::abs(1e-10))
}

pub fn herglotz_expectation_tol<T: Real>(
    f: &AngleDensity,
    omega: Wavenumber<T>,
    delta: [T; 2],
    opts: QuadOptions,
) -> Result<Complex<T>> {
    let w = omega.get().to_f64_lossy();
    let (dx, dz) = (delta[0].to_f64_lossy(), delta[1].to_f64_lossy());
    let r = dx.hypot(dz);
    let width: f64 = f.support().iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    let panels = phase_panels(w * r, width);
    let res = quad::integrate(
        |t| {
            let (s, c) = t.sin_cos();
            Complex64::from_polar(f.pdf(t), w * (c * dx + s * dz))
        },
        f.support(),
        panels,
        opts,
    )?;
    Ok(Complex::new(T::lit(res.value.re), T::lit(res.value.im)))
}

/// Spherical analogue `∫_{S²} e^{iω d·δ} f(d) dS(d)`.
///
/// The integral is taken in a frame whose polar axis is `δ`, so the phase
/// depends only on the polar angle and the inner azimuthal integral is not
/// oscillatory.
pub fn herglotz_expectation_sphere<T: Real>(
    f: &SphereDensity,
    omega: Wavenumber<T>,
    delta: [T; 3],
    opts: QuadOptions,
) -> Result<Complex<T>> {
    let w = omega.get().to_f64_lossy();
    let dv = delta.map(|c| c.to_f64_lossy());
    let r = (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt();
    let (axis, e1, e2) = orthonormal_frame(dv);
    let inner_opts = QuadOptions { abs_tol: opts.abs_tol * 0.1, rel_tol: opts.rel_tol * 0.1, ..opts };
    let density_ring = |gamma: f64| -> f64 {
        let (sg, cg) = gamma.sin_cos();
        quad::integrate(
            |psi| {
                let (sp, cp) = psi.sin_cos();
                let d = [0, 1, 2].map(|k| cg * axis[k] + sg * (cp * e1[k] + sp * e2[k]));
                let theta = d[2].clamp(-1.0, 1.0).asin();
                let phi = d[1].atan2(d[0]);
                Complex64::new(f.pdf(theta, phi), 0.0)
            },
            &[(0.0, 2.0 * PI)],
            8,
            inner_opts,
        )
        .map(|q| q.value.re)
        .unwrap_or(f64::NAN)
    };
    let res = quad::integrate(
        |gamma| Complex64::from_polar(density_ring(gamma) * gamma.sin(), w * r * gamma.cos()),
        &[(0.0, PI)],
        phase_panels(w * r, PI),
        opts,
    )?;
    if !res.value.re.is_finite() {
        return Err(Error::NonConvergence { iterations: res.panels });
    }
    Ok(Complex::new(T::lit(res.value.re), T::lit(res.value.im)))
}

fn orthonormal_frame(v: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let a = if n > 0.0 { [v[0] / n, v[1] / n, v[2] / n] } else { [0.0, 0.0, 1.0] };
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * a[0] + helper[1] * a[1] + helper[2] * a[2];
    let mut e1 = [helper[0] - d * a[0], helper[1] - d * a[1], helper[2] - d * a[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|c| *c /= n1);
    let e2 = [a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]];
    (a, e1, e2)
}

/// Distinct lattice difference vectors, one per `±` pair.
pub fn lattice_differences<T: Real>(lat: &Lattice<T>) -> Vec<[T; 3]> {
    let s = lat.side() as i64;
    let ell = lat.ell();
    let mut out = Vec::new();
    let range = -(s - 1)..s;
    let third: Vec<i64> = if lat.dim() == 3 { range.clone().collect() } else { vec![0] };
    for a in range.clone() {
        for b in range.clone() {
            for &c in &third {
                // keep the lexicographically positive representative
                if (a, b, c) > (0, 0, 0) {
                    let v = [a, b, c].map(|k| T::lit(k as f64) * ell);
                    out.push(if lat.dim() == 2 { [v[0], T::zero(), v[1]] } else { v });
                }
            }
        }
    }
    out
}

/// `χ = max` over distinct lattice pairs of `|E e^{iω d·(r - r')}|` for a
/// planar density, with the given quadrature tolerance.
pub fn chi_planar<T: Real>(lat: &Lattice<T>, f: &AngleDensity, omega: Wavenumber<T>, opts: QuadOptions) -> Result<T> {
    lattice_differences(lat)
        .into_iter()
        .map(|d| herglotz_expectation_tol(f, omega, [d[0], d[2]], opts).map(|v| v.norm()))
        .try_fold(T::zero(), |acc, v| v.map(|v| acc.max(v)))
}

/// Spherical counterpart of [`chi_planar`].
pub fn chi_sphere<T: Real>(lat: &Lattice<T>, f: &SphereDensity, omega: Wavenumber<T>, opts: QuadOptions) -> Result<T> {
    lattice_differences(lat)
        .into_iter()
        .map(|d| herglotz_expectation_sphere(f, omega, d, opts).map(|v| v.norm()))
        .try_fold(T::zero(), |acc, v| v.map(|v| acc.max(v)))
}

/// Predicted coherence bound `(χⁱ + √2 K/√p)(χˢ + √2 K/√n)`.
pub fn coherence_bound_prediction<T: Real>(chi_i: T, chi_s: T, k: T, n: usize, p: usize) -> T {
    let s2k = T::SQRT_2() * k;
    (chi_i + s2k / T::of_usize(p).sqrt()) * (chi_s + s2k / T::of_usize(n).sqrt())
}

/// `K = √(2 ln(8m/δ))`, the equality case of `m ≤ (δ/8) e^{K²/2}`.
pub fn k_from_delta<T: Real>(m: usize, delta: T) -> T {
    (T::lit(2.0) * (T::lit(8.0) * T::of_usize(m) / delta).ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{draw_far_field_2d, rng_from_seed};
    use crate::specfun::bessel_j0;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn w(x: f64) -> Wavenumber<f64> {
        Wavenumber::new(x).unwrap()
    }

    #[test]
    fn mimo_entries_are_unimodular_and_cancel_on_matched_rows() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let phi = build_mimo_born(&lat, &[0.3, -1.0], &[0.3, 2.0, 1.1], w(7.0)).unwrap();
        assert_eq!((phi.rows(), phi.cols()), (6, 16));
        assert!(phi.entries.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        // row k = 0, l = 0 has θ = θ̃
        assert!(phi.entries.row(0).iter().all(|z| (z - C::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn mimo_with_zero_incidence_factors_through_simo() {
        let lat = Lattice::square(0.5, 3).unwrap();
        let tt = [0.4, -2.0, 1.7];
        let om = w(5.0);
        let mimo = build_mimo_born(&lat, &[0.0], &tt, om).unwrap();
        let simo = build_simo_farfield(&lat, &tt, om).unwrap();
        for l in 0..3 {
            for j in 0..9 {
                let x = lat.point(j).unwrap()[0];
                let want = simo.entries[(l, j)] * phase(5.0 * x);
                assert!((mimo.entries[(l, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn simo_examples() {
        let lat = Lattice::square(1.0, 2).unwrap();
        let tiny = build_simo_farfield(&lat, &[0.3, 1.0], w(1e-300)).unwrap();
        assert!(tiny.entries.as_slice().iter().all(|z| (*z - C::new(1.0, 0.0)).norm() < 1e-15));
        let om = w(3.0);
        let theta = 0.8;
        let phi = build_simo_farfield(&lat, &[theta], om).unwrap();
        // indices 0 and 2 differ only in x by ℓ
        let ratio = phi.entries[(0, 2)] / phi.entries[(0, 0)];
        assert!((ratio - phase(-3.0 * theta.cos())).norm() < 1e-14);
    }

    #[test]
    fn simo_3d_uses_full_dot_product() {
        let lat = Lattice::cubic(1.0, 2).unwrap();
        let d = crate::scene::sphere_direction(0.4, -1.2).unwrap();
        let phi = build_simo_farfield_dirs(&lat, &[d], w(2.0)).unwrap();
        for j in 0..8 {
            let r = lat.point(j).unwrap();
            assert!((phi.entries[(0, j)] - phase(-2.0 * (r[0] * d[0] + r[1] * d[1] + r[2] * d[2]))).norm() < 1e-15);
        }
    }

    #[test]
    fn near_field_entries_and_bounds() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let mut rng = rng_from_seed(1);
        let (aperture, standoff) = (6.0, 1.5);
        let om = w(4.0);
        let dmax = crate::scene::delta_max(2, aperture, lat.extent(), standoff);
        let gmin = crate::specfun::green_radial(2, dmax, om).unwrap().norm();
        for _ in 0..20 {
            let sensors = crate::scene::draw_near_field(&lat, 12, aperture, standoff, &mut rng).unwrap();
            let phi = build_dt_nearfield(&lat, &sensors, om).unwrap();
            let min = phi.entries.as_slice().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            assert!(min > 0.0);
            assert!(min >= gmin, "{min} < {gmin}");
        }
        // magnitudes decrease with distance along a row
        let sensors = SensorSet::NearField { points: vec![[0.0, 0.0, 0.0]], aperture, standoff };
        let far = Lattice::square(1.0, 6).unwrap();
        let phi = build_dt_nearfield(&far, &sensors, om).unwrap();
        let mut pairs: Vec<(f64, f64)> = (0..far.len())
            .map(|j| {
                let p = far.point(j).unwrap();
                ((p[0] * p[0] + p[2] * p[2]).sqrt(), phi.entries[(0, j)].norm())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for win in pairs.windows(2) {
            if win[1].0 > win[0].0 + 1e-12 {
                assert!(win[1].1 < win[0].1);
            }
        }
        let bad = SensorSet::NearField { points: vec![[1.0, 0.0, 1.0]], aperture, standoff };
        assert!(build_dt_nearfield(&lat, &bad, om).is_err());
    }

    #[test]
    fn coherence_examples() {
        let orth = CMatrix::from_row_major(2, 2, vec![C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(-1.0, 0.0)]).unwrap();
        assert_eq!(coherence(&orth).unwrap(), 0.0);
        let dup = CMatrix::from_fn(3, 2, |i, _| C::new(i as f64 + 1.0, 0.5));
        assert!((coherence(&dup).unwrap() - 1.0).abs() < 1e-15);
        let zero = CMatrix::from_fn(3, 2, |i, j| if j == 0 { C::new(i as f64, 0.0) } else { C::new(0.0, 0.0) });
        assert!(matches!(coherence(&zero), Err(Error::DegenerateMatrix(_))));
        // DFT rows (third roots of unity), any two rows
        let dft = CMatrix::from_fn(2, 3, |i, j| phase(2.0 * PI * (i * j) as f64 / 3.0));
        let mut brute: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let (x, y) = (dft.column(a), dft.column(b));
                    let ip = crate::linalg::inner(&x, &y).norm();
                    brute = brute.max(ip / (crate::linalg::norm2(&x) * crate::linalg::norm2(&y)));
                }
            }
        }
        assert!((coherence(&dft).unwrap() - brute).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn unit_entry_coherence_agrees_with_general_path(seed: u64) {
            let lat = Lattice::square(1.0, 4).unwrap();
            let mut rng = rng_from_seed(seed);
            let s = draw_far_field_2d::<f64, _>(3, 5, &AngleDensity::uniform(), &AngleDensity::uniform(), &mut rng);
            let phi = build_from_sensors(&lat, &s, w(6.0)).unwrap();
            let a = coherence(&phi.entries).unwrap();
            let b = coherence_unit_entries(&phi.entries).unwrap();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn gram_closed_form_matches_direct_sum(
            t in -3.1f64..3.1, tp in -3.1f64..3.1, tt in -3.1f64..3.1, ttp in -3.1f64..3.1,
            side in 2usize..9, wl in 0.5f64..40.0,
        ) {
            let lat = Lattice::square(1.0, side).unwrap();
            let om = w(wl);
            let phi = build_mimo_born(&lat, &[t, tp], &[tt, ttp], om).unwrap();
            // rows (θ, θ̃) = k0·n + l0 = 0 and (θ', θ̃') = 1·2 + 1 = 3
            let direct = crate::linalg::inner(phi.entries.row(3), phi.entries.row(0)).norm() / lat.len() as f64;
            let closed = gram_entry_closed_form(&lat, [t, tp, tt, ttp], om).unwrap();
            prop_assert!((direct - closed).abs() <= 1e-10);
        }
    }

    #[test]
    fn gram_closed_form_limits() {
        let lat = Lattice::square(1.0, 8).unwrap();
        let om = w(3.0);
        assert!((gram_entry_closed_form(&lat, [0.3, 0.3, 1.2, 1.2], om).unwrap() - 1.0).abs() < 1e-15);
        // θ̃' = π - θ̃ cancels the sines, leaving z₁ = ωℓ cos θ̃; choose √m z₁ = π
        let tt = (PI / (8.0 * 3.0)).acos();
        let v = gram_entry_closed_form(&lat, [0.7, 0.7, tt, PI - tt], om).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn spectral_norm_examples() {
        let id = CMatrix::<f64>::identity(5);
        assert!((spectral_norm(&id).unwrap() - 1.0).abs() < 1e-10);
        let ones = CMatrix::from_fn(4, 9, |_, _| C::new(1.0, 0.0));
        assert!((spectral_norm(&ones).unwrap() - 6.0).abs() < 1e-9);
        let lat = Lattice::square(1.0, 4).unwrap();
        let phi = build_mimo_born(&lat, &[0.1, 0.7], &[1.0, 2.0, -0.4], w(9.0)).unwrap();
        let s = spectral_norm(&phi.entries).unwrap();
        assert!(s * s <= (6 * 16) as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn row_coherence_examples() {
        let rep = CMatrix::from_fn(2, 4, |_, j| phase(j as f64));
        assert!((gram_row_coherence(&rep).unwrap() - 1.0).abs() < 1e-15);
        let dft = CMatrix::from_fn(3, 3, |i, j| phase(2.0 * PI * (i * j) as f64 / 3.0));
        assert!(gram_row_coherence(&dft).unwrap() < 1e-15);
        assert!(gram_row_coherence(&CMatrix::<f64>::identity(1)).is_err());
    }

    #[test]
    fn herglotz_uniform_is_bessel() {
        let f = AngleDensity::uniform();
        for (wv, d) in [(1.0, [0.5, 0.2]), (20.0, [3.0, -4.0]), (50.0, [0.0, 2.0])] {
            let e = herglotz_expectation(&f, w(wv), d).unwrap();
            let j = bessel_j0(wv * (d[0] * d[0] + d[1] * d[1]).sqrt()).unwrap();
            assert!((e - C::new(j, 0.0)).norm() < 1e-10);
        }
        let e = herglotz_expectation(&f, w(3.0), [0.0, 0.0]).unwrap();
        assert!((e - C::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn herglotz_sphere_uniform_is_sinc() {
        let f = SphereDensity::uniform();
        for (wv, d) in [(1.0, [0.5, 0.2, 0.1]), (30.0, [1.0, -1.0, 1.0])] {
            let e = herglotz_expectation_sphere(&f, w(wv), d, QuadOptions::abs(1e-11)).unwrap();
            let x = wv * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((e - C::new(x.sin() / x, 0.0)).norm() < 1e-9, "{e}");
        }
    }

    #[test]
    fn herglotz_sphere_matches_latitude_longitude_quadrature() {
        // independent route: iterated quadrature in (θ, φ) with the cos θ
        // surface element
        let pdf = |t: f64, p: f64| (1.0 + 0.5 * t.cos() * p.cos()) / (4.0 * PI);
        let f = SphereDensity::new(pdf, 1.5 / (4.0 * PI), 1).unwrap();
        let (wv, d) = (4.0, [0.7, -0.3, 0.5]);
        let direct = quad::integrate(
            |t| {
                let inner = quad::integrate(
                    |p| {
                        let v = crate::scene::sphere_direction(t, p).unwrap();
                        Complex64::from_polar(pdf(t, p), wv * (v[0] * d[0] + v[1] * d[1] + v[2] * d[2]))
                    },
                    &[(-PI, PI)],
                    16,
                    QuadOptions::abs(1e-13),
                )
                .unwrap()
                .value;
                inner * t.cos()
            },
            &[(-PI / 2.0, PI / 2.0)],
            16,
            QuadOptions::abs(1e-12),
        )
        .unwrap()
        .value;
        let e = herglotz_expectation_sphere(&f, w(wv), d, QuadOptions::abs(1e-12)).unwrap();
        assert!((e - direct).norm() < 1e-10, "{e} vs {direct}");
    }

    #[test]
    fn coherence_bound_examples() {
        assert!((coherence_bound_prediction(0.0f64, 0.0, 1.0, 4, 4) - 0.5).abs() < 1e-15);
        let a = coherence_bound_prediction(0.1f64, 0.2, 2.0, 10, 10);
        assert!(coherence_bound_prediction(0.1, 0.2, 2.0, 11, 10) < a);
        assert!(coherence_bound_prediction(0.1, 0.2, 2.0, 10, 11) < a);
        let k: f64 = k_from_delta(64, 0.1);
        assert!((k - (2.0 * (8.0 * 64.0 / 0.1f64).ln()).sqrt()).abs() < 1e-15);
        // equality case of m ≤ (δ/8) e^{K²/2}
        assert!((0.1 / 8.0 * (k * k / 2.0).exp() - 64.0).abs() < 1e-9);
    }

    #[test]
    fn lattice_difference_count() {
        let lat = Lattice::square(1.0, 3).unwrap();
        // (2·3-1)² - 1 nonzero vectors, halved by the ± symmetry
        assert_eq!(lattice_differences(&lat).len(), 12);
        assert_eq!(lattice_differences(&Lattice::cubic(1.0, 2).unwrap()).len(), 13);
    }
}
