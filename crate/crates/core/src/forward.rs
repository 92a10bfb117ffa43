//! Forward scattering by point scatterers: the Foldy-Lax exciting field,
//! far-field amplitudes (exact and Born), near-field data, the resonance
//! spectrum and reciprocity residuals.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{norm_max, CMatrix, Lu};
use crate::real::Real;
use crate::scene::{Lattice, SensorSet, Target};
use crate::specfun::{green_between, Wavenumber};

/// Reciprocal condition below which the Foldy-Lax system counts as resonant.
pub const RESONANCE_RCOND: f64 = 1e-12;

/// Incident field `uⁱ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IncidentField<T> {
    /// `e^{iω r·d}` for a unit direction `d`.
    PlaneWave([T; 3]),
    /// `G(r, r₀)` for a point source at `r₀`.
    PointSource([T; 3]),
}

impl<T: Real> IncidentField<T> {
    pub fn eval(&self, r: [T; 3], lat: &Lattice<T>, omega: Wavenumber<T>) -> Result<Complex<T>> {
        match *self {
            Self::PlaneWave(d) => Ok(phase(omega.get() * dot(r, d))),
            Self::PointSource(r0) => green_between(lat.dim(), r, r0, omega, lat.ell()),
        }
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn phase<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

#[inline]
pub(crate) fn neg<T: Real>(v: [T; 3]) -> [T; 3] {
    [-v[0], -v[1], -v[2]]
}

/// Zero-diagonal matrix `[(1 - δ_jl) G(r_j, r_l)]` over the listed sites.
pub fn green_matrix<T: Real>(lat: &Lattice<T>, sites: &[usize], omega: Wavenumber<T>) -> Result<CMatrix<T>> {
    let pts = sites.iter().map(|&j| lat.point(j)).collect::<Result<Vec<_>>>()?;
    let s = sites.len();
    let mut g = CMatrix::zeros(s, s);
    for a in 0..s {
        for b in a + 1..s {
            let v = green_between(lat.dim(), pts[a], pts[b], omega, lat.ell())?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// Exciting field on the target support.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitingField<T> {
    /// Support sites, in the target's support order.
    pub sites: Vec<usize>,
    /// `u(r_j)` for each site.
    pub u: Vec<Complex<T>>,
    /// Reciprocal 1-norm condition of `I - ω²GV`.
    pub rcond: T,
}

/// `I - ω² G V` on the support.
fn foldy_lax_matrix<T: Real>(target: &Target<T>, lat: &Lattice<T>, omega: Wavenumber<T>) -> Result<CMatrix<T>> {
    let sites = target.support();
    let g = green_matrix(lat, sites, omega)?;
    let w2 = omega.get() * omega.get();
    let nu = target.support_values();
    Ok(CMatrix::from_fn(sites.len(), sites.len(), |a, b| {
        let delta: Complex<T> = if a == b { Complex::one() } else { Complex::zero() };
        delta - g[(a, b)] * nu[b] * w2
    }))
}

/// Solves the Foldy-Lax system `(I - ω²GV) U = Uⁱ` on the target support.
///
/// Fails with [`Error::Resonance`] when the reciprocal condition of the
/// system drops below `1e-12`.
pub fn foldy_lax_solve<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    incident: &IncidentField<T>,
    omega: Wavenumber<T>,
) -> Result<ExcitingField<T>> {
    check_target(target, lat)?;
    let sites = target.support().to_vec();
    let ui = sites
        .iter()
        .map(|&j| incident.eval(lat.point(j)?, lat, omega))
        .collect::<Result<Vec<_>>>()?;
    if sites.is_empty() {
        return Ok(ExcitingField { sites, u: ui, rcond: T::one() });
    }
    let a = foldy_lax_matrix(target, lat, omega)?;
    let lu = Lu::new(&a).map_err(|_| Error::Resonance { rcond: 0.0 })?;
    let rcond = lu.rcond();
    if !(rcond >= T::lit(RESONANCE_RCOND)) {
        return Err(Error::Resonance { rcond: rcond.to_f64_lossy() });
    }
    let mut u = lu.solve(&ui);
    let residual = |u: &[Complex<T>]| -> Vec<Complex<T>> {
        a.mul_vec(u).iter().zip(&ui).map(|(&au, &b)| b - au).collect()
    };
    let r = residual(&u);
    let du = lu.solve(&r);
    u.iter_mut().zip(du).for_each(|(x, d)| *x += d);
    let res = crate::linalg::norm2(&residual(&u));
    let scale = crate::linalg::norm2(&ui);
    if res > T::lit(1e-10) * scale {
        return Err(Error::Resonance { rcond: rcond.to_f64_lossy() });
    }
    Ok(ExcitingField { sites, u, rcond })
}

fn check_target<T: Real>(target: &Target<T>, lat: &Lattice<T>) -> Result<()> {
    if target.len() != lat.len() {
        return Err(Error::InvalidArgument(format!(
            "target has {} entries but the lattice has {} points",
            target.len(),
            lat.len()
        )));
    }
    Ok(())
}

fn amplitude_prefactor<T: Real>(omega: Wavenumber<T>) -> T {
    let w = omega.get();
    w * w / (T::lit(4.0) * T::PI())
}

/// Far-field amplitude `A(r̂) = (ω²/4π) Σ_j ν_j u(r_j) e^{-iω r_j·r̂}`.
pub fn scattering_amplitude<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    field: &ExcitingField<T>,
    omega: Wavenumber<T>,
    rhat: [T; 3],
) -> Result<Complex<T>> {
    let mut acc = Complex::zero();
    for (&j, &u) in field.sites.iter().zip(&field.u) {
        let r = lat.point(j)?;
        acc += target.nu()[j] * u * phase(-omega.get() * dot(r, rhat));
    }
    Ok(acc * amplitude_prefactor(omega))
}

/// Exact far-field amplitude for plane-wave incidence `d`.
pub fn exact_amplitude<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    d: [T; 3],
    rhat: [T; 3],
) -> Result<Complex<T>> {
    let field = foldy_lax_solve(target, lat, &IncidentField::PlaneWave(d), omega)?;
    scattering_amplitude(target, lat, &field, omega, rhat)
}

/// Born amplitude: the exciting field replaced by the incident plane wave.
pub fn born_amplitude<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    d: [T; 3],
    rhat: [T; 3],
) -> Result<Complex<T>> {
    check_target(target, lat)?;
    let mut acc = Complex::zero();
    for &j in target.support() {
        let r = lat.point(j)?;
        acc += target.nu()[j] * phase(omega.get() * (dot(r, d) - dot(r, rhat)));
    }
    Ok(acc * amplitude_prefactor(omega))
}

/// Scattered field `uˢ(a) = ω² Σ_j ν_j G(a, r_j) u(r_j)` at arbitrary points.
pub fn scattered_field<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    field: &ExcitingField<T>,
    omega: Wavenumber<T>,
    points: &[[T; 3]],
) -> Result<Vec<Complex<T>>> {
    let w2 = omega.get() * omega.get();
    let sites = field.sites.iter().map(|&j| lat.point(j)).collect::<Result<Vec<_>>>()?;
    points
        .iter()
        .map(|&a| {
            let mut acc = Complex::zero();
            for ((r, &u), &j) in sites.iter().zip(&field.u).zip(&field.sites) {
                acc += target.nu()[j] * green_between(lat.dim(), a, *r, omega, lat.ell())? * u;
            }
            Ok(acc * w2)
        })
        .collect()
}

/// Scattered field at the near-field sensors for a point source or a plane
/// wave, including all multiple scattering.
pub fn nearfield_data<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    source: &IncidentField<T>,
    sensors: &SensorSet<T>,
) -> Result<Vec<Complex<T>>> {
    let SensorSet::NearField { points, .. } = sensors else {
        return Err(Error::InvalidArgument("near-field data needs a near-field sensor set".into()));
    };
    let field = foldy_lax_solve(target, lat, source, omega)?;
    scattered_field(target, lat, &field, omega, points)
}

/// Eigenvalues of `ω² G V` on the target support.
pub fn resonance_spectrum<T: Real>(target: &Target<T>, lat: &Lattice<T>, omega: Wavenumber<T>) -> Result<Vec<Complex<T>>> {
    check_target(target, lat)?;
    let sites = target.support();
    let g = green_matrix(lat, sites, omega)?;
    let w2 = omega.get() * omega.get();
    let nu = target.support_values();
    let m = CMatrix::from_fn(sites.len(), sites.len(), |a, b| g[(a, b)] * nu[b] * w2);
    crate::linalg::eigenvalues(&m)
}

/// `ω²‖GV‖` with the maximum-absolute-row-sum norm, over the support.
pub fn multiple_scattering_strength<T: Real>(target: &Target<T>, lat: &Lattice<T>, omega: Wavenumber<T>) -> Result<T> {
    check_target(target, lat)?;
    let sites = target.support();
    let g = green_matrix(lat, sites, omega)?;
    let nu = target.support_values();
    let gv = CMatrix::from_fn(sites.len(), sites.len(), |a, b| g[(a, b)] * nu[b]);
    Ok(omega.get() * omega.get() * gv.norm_inf())
}

fn relative_gap<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let scale = a.norm().max(b.norm()).max(T::min_positive_value());
    (a - b).norm() / scale
}

/// `|A(r̂, d) - A(-d, -r̂)| / max(|A(r̂, d)|, |A(-d, -r̂)|)` with both sides
/// from separate Foldy-Lax solves.
pub fn reciprocity_residual<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    d: [T; 3],
    rhat: [T; 3],
) -> Result<T> {
    let forward = exact_amplitude(target, lat, omega, d, rhat)?;
    let reversed = exact_amplitude(target, lat, omega, neg(rhat), neg(d))?;
    Ok(relative_gap(forward, reversed))
}

/// Born counterpart of [`reciprocity_residual`].
pub fn born_reciprocity_residual<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    d: [T; 3],
    rhat: [T; 3],
) -> Result<T> {
    let forward = born_amplitude(target, lat, omega, d, rhat)?;
    let reversed = born_amplitude(target, lat, omega, neg(rhat), neg(d))?;
    Ok(relative_gap(forward, reversed))
}

/// Compares the scattered field at `r0` under plane-wave incidence `d`
/// with `4π` times the far-field amplitude in direction `-d` radiated when
/// a point source at `r0` illuminates the target.
pub fn nearfield_reciprocity_residual<T: Real>(
    target: &Target<T>,
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    d: [T; 3],
    r0: [T; 3],
) -> Result<T> {
    let plane = foldy_lax_solve(target, lat, &IncidentField::PlaneWave(d), omega)?;
    let us = scattered_field(target, lat, &plane, omega, &[r0])?[0];
    let point = foldy_lax_solve(target, lat, &IncidentField::PointSource(r0), omega)?;
    let a = scattering_amplitude(target, lat, &point, omega, neg(d))? * (T::lit(4.0) * T::PI());
    Ok(relative_gap(us, a))
}

/// Two-scatterer configuration tuned to resonate exactly.
#[derive(Clone, Debug)]
pub struct ResonantPair<T> {
    pub omega: Wavenumber<T>,
    pub target: Target<T>,
    /// Bisection steps taken.
    pub iterations: usize,
}

/// Places scatterers of magnitudes `a1`, `a2` at lattice sites `j1`, `j2`
/// and finds the frequency at which `1` is an eigenvalue of `ω²GV`.
///
/// The phases of both strengths are locked to `conj G(r₁, r₂)` at that
/// frequency, so the eigenvalues `±ω²√(ν₁ν₂) G` are real. Because `G`
/// depends on `ω`, the resonance condition `ω²√(a₁a₂)|G(ω)| = 1` is solved
/// by bisection on `[1e-3, 1e3]` to full precision.
pub fn resonant_pair<T: Real>(lat: &Lattice<T>, j1: usize, j2: usize, a1: T, a2: T) -> Result<ResonantPair<T>> {
    if j1 == j2 {
        return Err(Error::InvalidArgument("resonant pair needs two distinct sites".into()));
    }
    if !(a1 > T::zero() && a2 > T::zero()) {
        return Err(Error::InvalidArgument("strength magnitudes must be positive".into()));
    }
    let (p1, p2) = (lat.point(j1)?, lat.point(j2)?);
    let coupling = (a1 * a2).sqrt();
    let f = |w: T| -> Result<T> {
        let g = green_between(lat.dim(), p1, p2, Wavenumber::new(w)?, lat.ell())?;
        Ok(w * w * coupling * g.norm() - T::one())
    };
    let (mut lo, mut hi) = (T::lit(1e-3), T::lit(1e3));
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo < T::zero() && fhi > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "no resonance in [1e-3, 1e3]: f(lo) = {flo}, f(hi) = {fhi}"
        )));
    }
    let mut iterations = 0;
    loop {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || iterations > 400 {
            break;
        }
        iterations += 1;
        if f(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = if f(hi)?.abs() < f(lo)?.abs() { hi } else { lo };
    let omega = Wavenumber::new(w)?;
    let g = green_between(lat.dim(), p1, p2, omega, lat.ell())?;
    let unit = g.conj() / g.norm();
    let target = Target::from_entries(lat.len(), &[(j1, unit * a1), (j2, unit * a2)])?;
    Ok(ResonantPair { omega, target, iterations })
}

/// Distance from `1` to the nearest eigenvalue of `ω²GV`.
pub fn resonance_distance<T: Real>(target: &Target<T>, lat: &Lattice<T>, omega: Wavenumber<T>) -> Result<T> {
    let ev = resonance_spectrum(target, lat, omega)?;
    Ok(ev
        .iter()
        .map(|l| (*l - Complex::one()).norm())
        .fold(T::infinity(), T::min))
}

/// Largest `|u|` on the support; convenience for field bounds.
pub fn field_sup<T: Real>(field: &ExcitingField<T>) -> T {
    norm_max(&field.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{draw_target, plane_direction, rng_from_seed, AmplitudeLaw};
    use proptest::prelude::*;
    use rand::Rng;

    type C = Complex<f64>;

    fn w(x: f64) -> Wavenumber<f64> {
        Wavenumber::new(x).unwrap()
    }

    #[test]
    fn single_scatterer_field_is_incident() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let t = Target::from_entries(16, &[(5, C::new(0.3, -0.2))]).unwrap();
        let d = plane_direction(0.7);
        let f = foldy_lax_solve(&t, &lat, &IncidentField::PlaneWave(d), w(3.0)).unwrap();
        let r = lat.point(5).unwrap();
        assert_eq!(f.u.len(), 1);
        assert!((f.u[0] - phase(3.0 * dot(r, d))).norm() < 1e-15);
        // single-scatterer amplitude closed form
        let rhat = plane_direction(-1.1);
        let a = scattering_amplitude(&t, &lat, &f, w(3.0), rhat).unwrap();
        let want = C::new(0.3, -0.2) * 9.0 / (4.0 * std::f64::consts::PI) * phase(3.0 * (dot(r, d) - dot(r, rhat)));
        assert!((a - want).norm() < 1e-15);
        assert!((born_amplitude(&t, &lat, w(3.0), d, rhat).unwrap() - a).norm() < 1e-15);
    }

    #[test]
    fn two_scatterer_closed_form() {
        let lat = Lattice::square(1.0, 3).unwrap();
        let (n1, n2) = (C::new(0.05, 0.02), C::new(-0.03, 0.04));
        let t = Target::from_entries(9, &[(1, n1), (7, n2)]).unwrap();
        let om = w(2.5);
        let inc = IncidentField::PlaneWave(plane_direction(0.4));
        let f = foldy_lax_solve(&t, &lat, &inc, om).unwrap();
        let (r1, r2) = (lat.point(1).unwrap(), lat.point(7).unwrap());
        let g = green_between(2, r1, r2, om, 1.0).unwrap();
        let (u1i, u2i) = (inc.eval(r1, &lat, om).unwrap(), inc.eval(r2, &lat, om).unwrap());
        let w2 = 2.5f64 * 2.5;
        let u1 = (u1i + w2 * n2 * g * u2i) / (1.0 - w2 * w2 * n1 * n2 * g * g);
        let u2 = (u2i + w2 * n1 * g * u1i) / (1.0 - w2 * w2 * n1 * n2 * g * g);
        assert!((f.u[0] - u1).norm() < 1e-14);
        assert!((f.u[1] - u2).norm() < 1e-14);
    }

    #[test]
    fn weak_coupling_bounds_on_field() {
        let lat = Lattice::square(1.0, 8).unwrap();
        for seed in 0..30 {
            let t = draw_target(&lat, 4, AmplitudeLaw::Constant(0.05), seed).unwrap();
            let om = w(5.0);
            let a = multiple_scattering_strength(&t, &lat, om).unwrap();
            if a >= 0.5 {
                continue;
            }
            let f = foldy_lax_solve(&t, &lat, &IncidentField::PlaneWave(plane_direction(0.3)), om).unwrap();
            let b0 = (1.0 - 2.0 * a) / (1.0 - a);
            assert!(field_sup(&f) < 2.0);
            assert!(field_sup(&f) <= 1.0 / (1.0 - a) + 1e-12);
            assert!(f.u.iter().all(|u| u.norm() >= b0 - 1e-12));
        }
    }

    #[test]
    fn neumann_series_matches_direct_solve() {
        let lat = Lattice::square(1.0, 6).unwrap();
        let om = w(4.0);
        let t = draw_target(&lat, 5, AmplitudeLaw::Constant(0.08), 11).unwrap();
        let a = multiple_scattering_strength(&t, &lat, om).unwrap();
        assert!(a < 0.5, "test configuration must be weakly coupled, got {a}");
        let inc = IncidentField::PlaneWave(plane_direction(1.0));
        let f = foldy_lax_solve(&t, &lat, &inc, om).unwrap();
        let g = green_matrix(&lat, t.support(), om).unwrap();
        let nu = t.support_values();
        let ui: Vec<C> = t.support().iter().map(|&j| inc.eval(lat.point(j).unwrap(), &lat, om).unwrap()).collect();
        let mut term = ui.clone();
        let mut sum = ui.clone();
        for _ in 0..20 {
            let v: Vec<C> = term.iter().zip(&nu).map(|(x, n)| x * n * 16.0).collect();
            term = g.mul_vec(&v);
            sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        }
        let diff: Vec<C> = sum.iter().zip(&f.u).map(|(a, b)| a - b).collect();
        let bound = 2.0 * a.powi(21) * norm_max(&ui);
        assert!(norm_max(&diff) <= bound + 1e-15, "{} > {bound}", norm_max(&diff));
    }

    #[test]
    fn born_error_is_small_for_weak_scatterers() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let t = Target::from_entries(16, &[(2, C::new(1e-6, 0.0)), (9, C::new(0.0, 1e-6))]).unwrap();
        let om = w(10.0);
        let (d, r) = (plane_direction(0.2), plane_direction(2.0));
        let a = exact_amplitude(&t, &lat, om, d, r).unwrap();
        let b = born_amplitude(&t, &lat, om, d, r).unwrap();
        assert!((a - b).norm() / a.norm() <= 1e-4);
    }

    #[test]
    fn zero_target_gives_zero_data() {
        let lat = Lattice::square(1.0, 3).unwrap();
        let t = Target::from_dense(vec![C::new(0.0, 0.0); 9]);
        let om = w(2.0);
        assert_eq!(exact_amplitude(&t, &lat, om, plane_direction(0.0), plane_direction(1.0)).unwrap(), C::new(0.0, 0.0));
        let sensors = SensorSet::NearField { points: vec![[2.0, 0.0, -1.0]], aperture: 2.0, standoff: 2.0 };
        let u = nearfield_data(&t, &lat, om, &IncidentField::PointSource([2.0, 0.0, -3.0]), &sensors).unwrap();
        assert_eq!(u, vec![C::new(0.0, 0.0)]);
    }

    #[test]
    fn nearfield_single_scatterer_closed_form() {
        let lat = Lattice::square(1.0, 3).unwrap();
        let nu = C::new(0.2, 0.1);
        let t = Target::from_entries(9, &[(4, nu)]).unwrap();
        let om = w(3.0);
        let (a, r0) = ([1.3, 0.0, -1.0], [2.7, 0.0, -2.0]);
        let sensors = SensorSet::NearField { points: vec![a], aperture: 2.0, standoff: 2.0 };
        let u = nearfield_data(&t, &lat, om, &IncidentField::PointSource(r0), &sensors).unwrap()[0];
        let r1 = lat.point(4).unwrap();
        let want = 9.0 * nu * green_between(2, a, r1, om, 1.0).unwrap() * green_between(2, r1, r0, om, 1.0).unwrap();
        assert!((u - want).norm() < 1e-15);
        let coincident = SensorSet::NearField { points: vec![r1], aperture: 2.0, standoff: 2.0 };
        assert!(matches!(
            nearfield_data(&t, &lat, om, &IncidentField::PointSource(r0), &coincident),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn spectrum_examples() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let t = Target::from_entries(16, &[(3, C::new(2.0, 1.0))]).unwrap();
        assert_eq!(resonance_spectrum(&t, &lat, w(3.0)).unwrap(), vec![C::new(0.0, 0.0)]);
        // spectra of ω²GV and ω²VG coincide
        let t = draw_target(&lat, 5, AmplitudeLaw::Constant(0.7), 2).unwrap();
        let om = w(2.0);
        let mut a = resonance_spectrum(&t, &lat, om).unwrap();
        let g = green_matrix(&lat, t.support(), om).unwrap();
        let nu = t.support_values();
        let vg = CMatrix::from_fn(5, 5, |i, j| nu[i] * g[(i, j)] * 4.0);
        let mut b = crate::linalg::eigenvalues(&vg).unwrap();
        let key = |z: &C| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        a.sort_by_key(key);
        b.sort_by_key(key);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn resonant_pair_is_singular() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let pair = resonant_pair(&lat, 0, 5, 1.0f64, 2.0).unwrap();
        let dist = resonance_distance(&pair.target, &lat, pair.omega).unwrap();
        assert!(dist < 1e-6, "distance {dist}");
        let res = foldy_lax_solve(&pair.target, &lat, &IncidentField::PlaneWave(plane_direction(0.0)), pair.omega);
        assert!(matches!(res, Err(Error::Resonance { .. })));
        // closed form ω = |ν₁ν₂|^{-1/4} |G|^{-1/2}
        let g = green_between(2, lat.point(0).unwrap(), lat.point(5).unwrap(), pair.omega, 1.0).unwrap();
        let formula = 2.0f64.powf(-0.25) * g.norm().powf(-0.5);
        assert!((formula - pair.omega.get()).abs() < 1e-12 * formula);
    }

    #[test]
    fn reciprocity_examples() {
        let lat = Lattice::square(1.0, 6).unwrap();
        let om = w(15.0);
        let t1 = draw_target(&lat, 1, AmplitudeLaw::Constant(1.0), 0).unwrap();
        let (d, r) = (plane_direction(0.3), plane_direction(-2.2));
        assert!(reciprocity_residual(&t1, &lat, om, d, r).unwrap() < 1e-14);
        let t5 = draw_target(&lat, 5, AmplitudeLaw::Constant(0.01), 3).unwrap();
        assert!(reciprocity_residual(&t5, &lat, om, d, r).unwrap() <= 1e-10);
        assert!(born_reciprocity_residual(&t5, &lat, om, d, r).unwrap() < 1e-14);
        let r0 = [3.5, 0.0, -2.0];
        assert!(nearfield_reciprocity_residual(&t5, &lat, om, d, r0).unwrap() < 1e-10);
    }

    proptest! {
        #[test]
        fn amplitude_padding_invariance(seed: u64, theta in -3.1f64..3.1) {
            let lat = Lattice::square(1.0, 5).unwrap();
            let om = w(4.0);
            let t = draw_target(&lat, 3, AmplitudeLaw::Constant(0.1), seed).unwrap();
            let d = plane_direction(0.5);
            let rhat = plane_direction(theta);
            let f = foldy_lax_solve(&t, &lat, &IncidentField::PlaneWave(d), om).unwrap();
            let a = scattering_amplitude(&t, &lat, &f, om, rhat).unwrap();
            // full-grid sum with ν_j = 0 off the support
            let mut full = C::new(0.0, 0.0);
            for j in 0..lat.len() {
                let u = match f.sites.iter().position(|&s| s == j) {
                    Some(k) => f.u[k],
                    None => C::new(0.0, 0.0),
                };
                full += t.nu()[j] * u * phase(-4.0 * dot(lat.point(j).unwrap(), rhat));
            }
            full *= 16.0 / (4.0 * std::f64::consts::PI);
            prop_assert!((a - full).norm() <= 1e-14 * full.norm().max(1e-300));
        }

        #[test]
        fn amplitude_linear_in_strength_at_fixed_field(seed: u64) {
            let lat = Lattice::square(1.0, 4).unwrap();
            let om = w(2.0);
            let t = draw_target(&lat, 2, AmplitudeLaw::Constant(0.2), seed).unwrap();
            let f = foldy_lax_solve(&t, &lat, &IncidentField::PlaneWave(plane_direction(0.0)), om).unwrap();
            let rhat = plane_direction(1.0);
            let a = scattering_amplitude(&t, &lat, &f, om, rhat).unwrap();
            let a2 = scattering_amplitude(&t.scaled(2.0), &lat, &f, om, rhat).unwrap();
            prop_assert!((a2 - 2.0 * a).norm() <= 1e-15 * a.norm());
        }
    }

    #[test]
    fn three_dimensional_reciprocity() {
        let lat = Lattice::cubic(1.0, 3).unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..5 {
            let t = draw_target(&lat, 4, AmplitudeLaw::Constant(0.5), rng.random()).unwrap();
            let d = crate::scene::sphere_direction(0.3, 1.0).unwrap();
            let r = crate::scene::sphere_direction(-0.8, -2.0).unwrap();
            assert!(reciprocity_residual(&t, &lat, w(6.0), d, r).unwrap() < 1e-10);
        }
    }
}
