//! Sparse recovery (OMP, basis pursuit, BPDN, an exhaustive L0 oracle),
//! strength inversion and the stability-bound calculator.

use itertools::Itertools;
use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forward::{green_matrix, IncidentField};
use crate::linalg::{least_squares, norm2, norm_max, CMatrix, Qr};
use crate::real::Real;
use crate::scene::{Lattice, Target};
use crate::sensing::spectral_norm;
use crate::specfun::Wavenumber;

/// Entries below this fraction of `‖x̂‖∞` are outside the reported support.
pub const SUPPORT_THRESHOLD_REL: f64 = 1e-6;
/// Default noise-free BP constraint tolerance, relative to `‖Y‖₂`.
pub const BP_EQ_TOL_REL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100_000;
/// `|denominator|` at or below which strength inversion is ill defined.
pub const ZERO_DENOMINATOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult<T> {
    pub x_hat: Vec<Complex<T>>,
    pub support_hat: Vec<usize>,
    pub residual_2: T,
    pub iterations: usize,
    pub converged: bool,
    /// Dual certificate `w` from basis pursuit: `(Φ*w)_j = sign(x̂_j)` on the
    /// support and `|(Φ*w)_j| ≤ 1 + opt_tol` elsewhere.
    pub dual: Option<Vec<Complex<T>>>,
}

impl<T: Real> RecoveryResult<T> {
    fn new(phi: &CMatrix<T>, y: &[Complex<T>], x_hat: Vec<Complex<T>>, iterations: usize, converged: bool) -> Self {
        let support_hat = support_of(&x_hat, T::lit(SUPPORT_THRESHOLD_REL) * norm_max(&x_hat));
        let residual_2 = residual(phi, &x_hat, y);
        Self { x_hat, support_hat, residual_2, iterations, converged, dual: None }
    }

    /// `x̂` with every entry off `support_hat` set to zero.
    pub fn sparse_estimate(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.x_hat.len()];
        for &j in &self.support_hat {
            out[j] = self.x_hat[j];
        }
        out
    }
}

fn support_of<T: Real>(x: &[Complex<T>], threshold: T) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > threshold)
        .map(|(j, _)| j)
        .collect()
}

fn residual<T: Real>(phi: &CMatrix<T>, x: &[Complex<T>], y: &[Complex<T>]) -> T {
    let r: Vec<_> = phi.mul_vec(x).iter().zip(y).map(|(a, b)| *b - *a).collect();
    norm2(&r)
}

fn csign<T: Real>(z: Complex<T>) -> Complex<T> {
    let n = z.norm();
    if n.is_zero() {
        Complex::zero()
    } else {
        z / n
    }
}

/// Complex soft threshold: shrinks the modulus by `t`, keeping the phase.
pub fn soft_threshold<T: Real>(z: Complex<T>, t: T) -> Complex<T> {
    let n = z.norm();
    if n <= t {
        Complex::zero()
    } else {
        z * ((n - t) / n)
    }
}

fn check_shapes<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>]) -> Result<()> {
    if phi.rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "data length {} does not match {} matrix rows",
            y.len(),
            phi.rows()
        )));
    }
    if phi.cols() == 0 {
        return Err(Error::InvalidArgument("matrix has no columns".into()));
    }
    Ok(())
}

fn scatter<T: Real>(m: usize, support: &[usize], values: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut x = vec![Complex::zero(); m];
    for (&j, &v) in support.iter().zip(values) {
        x[j] = v;
    }
    x
}

/// Orthogonal matching pursuit with a least-squares refit each step.
pub fn omp<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], s_max: usize, tol: T) -> Result<RecoveryResult<T>> {
    check_shapes(phi, y)?;
    let norms = phi.column_norms();
    if norms.iter().any(|n| n.is_zero()) {
        return Err(Error::DegenerateMatrix("zero column".into()));
    }
    let ynorm = norm2(y);
    let mut active: Vec<usize> = Vec::new();
    let mut coef: Vec<Complex<T>> = Vec::new();
    let mut r = y.to_vec();
    let target = tol * ynorm;
    while active.len() < s_max.min(phi.cols()) && norm2(&r) > target {
        let corr = phi.adjoint_mul_vec(&r);
        let next = (0..phi.cols())
            .filter(|j| !active.contains(j))
            .map(|j| (j, corr[j].norm() / norms[j]))
            .fold(None, |best: Option<(usize, T)>, (j, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((j, v)),
            });
        let Some((j, _)) = next else { break };
        active.push(j);
        coef = least_squares(&phi.select_columns(&active), y)?;
        let x = scatter(phi.cols(), &active, &coef);
        r = phi.mul_vec(&x).iter().zip(y).map(|(a, b)| *b - *a).collect();
    }
    let x = scatter(phi.cols(), &active, &coef);
    let converged = norm2(&r) <= target;
    Ok(RecoveryResult::new(phi, y, x, active.len(), converged))
}

/// Least-squares fit on `support` with a dual certificate for the L1
/// problem. The certificate is `hint` (zero if absent) moved by the
/// minimum-norm correction onto `{w : Φ_S* w = sign(x_S)}`; the returned
/// scalar is `max_{j∉S} |(Φ*w)_j|`.
fn certified_fit<T: Real>(
    phi: &CMatrix<T>,
    y: &[Complex<T>],
    support: &[usize],
    hint: Option<&[Complex<T>]>,
) -> Option<(Vec<Complex<T>>, Vec<Complex<T>>, T)> {
    if support.is_empty() || support.len() > phi.rows() {
        return None;
    }
    let sub = phi.select_columns(support);
    let qr = Qr::new(&sub);
    if qr.rank() < support.len() {
        return None;
    }
    let xs = least_squares(&sub, y).ok()?;
    if xs.iter().any(|v| v.norm().is_zero()) {
        return None;
    }
    let w0 = hint.map_or_else(|| vec![Complex::zero(); phi.rows()], <[_]>::to_vec);
    let gap: Vec<_> = sub.adjoint_mul_vec(&w0).iter().zip(&xs).map(|(a, x)| *a - csign(*x)).collect();
    let gp: Vec<_> = qr.perm().iter().map(|&j| gap[j]).collect();
    let delta = qr.thin_q_mul(&qr.r11_adjoint_solve(&gp));
    let w: Vec<_> = w0.iter().zip(&delta).map(|(a, d)| *a - *d).collect();
    let c = phi.adjoint_mul_vec(&w);
    let off = (0..phi.cols())
        .filter(|j| !support.contains(j))
        .map(|j| c[j].norm())
        .fold(T::zero(), T::max);
    Some((scatter(phi.cols(), support, &xs), w, off))
}

/// Basis pursuit `min ‖z‖₁ s.t. ‖Φz − Y‖₂ ≤ eq_tol` over complex `z`.
///
/// ADMM splits the L1 term from the affine constraint; the projection onto
/// `{Φz = Y}` uses a pivoted QR of `Φ*`. Every few iterations the current
/// support is refitted by least squares and accepted when a dual
/// certificate shows it is L1-optimal to within `opt_tol`.
pub fn basis_pursuit<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], eq_tol: T, opt_tol: T) -> Result<RecoveryResult<T>> {
    check_shapes(phi, y)?;
    if !(opt_tol > T::zero()) || eq_tol < T::zero() {
        return Err(Error::InvalidArgument("basis pursuit needs opt_tol > 0 and eq_tol >= 0".into()));
    }
    let m = phi.cols();
    let ynorm = norm2(y);
    if ynorm.is_zero() {
        return Ok(RecoveryResult::new(phi, y, vec![Complex::zero(); m], 0, true));
    }
    let finish = |x: Vec<Complex<T>>, dual: Option<Vec<Complex<T>>>, it: usize| -> Result<RecoveryResult<T>> {
        let mut res = RecoveryResult::new(phi, y, x, it, true);
        if res.residual_2 > eq_tol {
            return Err(Error::Infeasible { residual: res.residual_2.to_f64_lossy(), tol: eq_tol.to_f64_lossy() });
        }
        res.dual = dual;
        Ok(res)
    };
    let fit_on = |x: &[Complex<T>], hint: Option<&[Complex<T>]>| {
        let support = support_of(x, T::lit(SUPPORT_THRESHOLD_REL) * norm_max(x));
        certified_fit(phi, y, &support, hint).filter(|(fit, _, _)| residual(phi, fit, y) <= eq_tol)
    };

    // constraint on independent rows: Q₁* z = g
    let qr = Qr::new(&phi.adjoint());
    let k = qr.rank();
    if k == 0 {
        return Err(Error::Infeasible { residual: ynorm.to_f64_lossy(), tol: eq_tol.to_f64_lossy() });
    }
    let yp: Vec<_> = qr.perm()[..k].iter().map(|&i| y[i]).collect();
    let g = qr.r11_adjoint_solve(&yp);
    let z0 = qr.thin_q_mul(&g);
    if k == m {
        // a single feasible point; no certificate needed
        return match fit_on(&z0, None) {
            Some((fit, w, off)) => finish(fit, (off <= T::one() + opt_tol).then_some(w), 0),
            None => finish(z0, None, 0),
        };
    }
    let project = |v: &[Complex<T>]| -> Vec<Complex<T>> {
        let c: Vec<_> = qr.thin_qh_mul(v).iter().zip(&g).map(|(a, b)| *a - *b).collect();
        v.iter().zip(qr.thin_q_mul(&c)).map(|(a, b)| *a - b).collect()
    };
    // least-squares w with Φ*w ≈ λ, using Φ* P = Q R
    let dual_from = |lambda: &[Complex<T>]| -> Vec<Complex<T>> {
        let v = qr.r11_solve(&qr.thin_qh_mul(lambda));
        let mut w = vec![Complex::zero(); phi.rows()];
        for (t, &i) in qr.perm()[..k].iter().enumerate() {
            w[i] = v[t];
        }
        w
    };
    let certify = |x: &[Complex<T>], rho: T, u: &[Complex<T>]| {
        let lambda: Vec<_> = u.iter().map(|v| *v * rho).collect();
        let hint = dual_from(&lambda);
        fit_on(x, Some(&hint)).filter(|(_, _, off)| *off <= T::one() + opt_tol)
    };

    let scale = norm_max(&z0);
    let mut rho = T::lit(10.0) / scale;
    let mut x = vec![Complex::zero(); m];
    let mut u = vec![Complex::zero(); m];
    for it in 1..=MAX_ITERATIONS {
        let v: Vec<_> = x.iter().zip(&u).map(|(a, b)| *a - *b).collect();
        let z = project(&v);
        let x_old = std::mem::replace(
            &mut x,
            z.iter().zip(&u).map(|(a, b)| soft_threshold(*a + *b, T::one() / rho)).collect(),
        );
        for ((ui, zi), xi) in u.iter_mut().zip(&z).zip(&x) {
            *ui += *zi - *xi;
        }
        let r_p = norm2(&z.iter().zip(&x).map(|(a, b)| *a - *b).collect::<Vec<_>>());
        let dx = norm2(&x.iter().zip(&x_old).map(|(a, b)| *a - *b).collect::<Vec<_>>());
        if it % 10 == 0 {
            if let Some((fit, w, _)) = certify(&x, rho, &u) {
                return finish(fit, Some(w), it);
            }
            let r_d = rho * dx;
            let ten = T::lit(10.0);
            let two = T::lit(2.0);
            if r_p > ten * r_d {
                rho = rho * two;
                u.iter_mut().for_each(|v| *v = *v / two);
            } else if r_d > ten * r_p {
                rho = rho / two;
                u.iter_mut().for_each(|v| *v = *v * two);
            }
        }
        let xn = norm2(&x).max(scale);
        if dx <= opt_tol * xn && r_p <= opt_tol * xn {
            if let Some((fit, w, _)) = certify(&x, rho, &u) {
                return finish(fit, Some(w), it);
            }
            let pick = if residual(phi, &x, y) <= eq_tol { x } else { z };
            return finish(pick, None, it);
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS })
}

/// [`basis_pursuit`] with `eq_tol = 1e-8‖Y‖₂` and `opt_tol = 1e-9`.
pub fn basis_pursuit_default<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>]) -> Result<RecoveryResult<T>> {
    basis_pursuit(phi, y, T::lit(BP_EQ_TOL_REL) * norm2(y), T::lit(1e-9))
}

/// `½‖Y − Φz‖₂² + λ‖z‖₁`.
pub fn lasso_objective<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], lambda: T, z: &[Complex<T>]) -> T {
    let r = residual(phi, z, y);
    T::lit(0.5) * r * r + lambda * z.iter().map(|v| v.norm()).sum::<T>()
}

/// Exact lasso solution on a fixed support by iterating the sign pattern of
/// `x_S = (Φ_S*Φ_S)⁻¹(Φ_S*Y − λ sign(x_S))`, accepted only if it satisfies
/// the full KKT conditions.
fn kkt_polish<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], lambda: T, x: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
    let support = support_of(x, T::lit(SUPPORT_THRESHOLD_REL) * norm_max(x));
    if support.is_empty() || support.len() > phi.rows() {
        return None;
    }
    let sub = phi.select_columns(&support);
    let qr = Qr::new(&sub);
    if qr.rank() < support.len() {
        return None;
    }
    let ls = least_squares(&sub, y).ok()?;
    let mut signs: Vec<_> = support.iter().map(|&j| csign(x[j])).collect();
    for _ in 0..20 {
        // (Φ_S*Φ_S)⁻¹ s = P R⁻¹ R⁻* Pᵀ s
        let sp: Vec<_> = qr.perm().iter().map(|&j| signs[j]).collect();
        let t = qr.r11_solve(&qr.r11_adjoint_solve(&sp));
        let mut corr = vec![Complex::zero(); support.len()];
        for (i, &j) in qr.perm().iter().enumerate() {
            corr[j] = t[i];
        }
        let xs: Vec<_> = ls.iter().zip(&corr).map(|(a, c)| *a - *c * lambda).collect();
        let new_signs: Vec<_> = xs.iter().map(|v| csign(*v)).collect();
        let stable = new_signs
            .iter()
            .zip(&signs)
            .all(|(a, b)| !a.norm().is_zero() && (*a - *b).norm() <= T::lit(1e-9));
        if stable {
            let full = scatter(phi.cols(), &support, &xs);
            let r: Vec<_> = phi.mul_vec(&full).iter().zip(y).map(|(a, b)| *b - *a).collect();
            let c = phi.adjoint_mul_vec(&r);
            let ok = (0..phi.cols())
                .filter(|j| !support.contains(j))
                .all(|j| c[j].norm() <= lambda * (T::one() + T::lit(1e-9)));
            return ok.then_some(full);
        }
        signs = new_signs;
        if signs.iter().any(|s| s.norm().is_zero()) {
            return None;
        }
    }
    None
}

/// Basis pursuit denoising in Lagrangian form, by FISTA with a monotone
/// restart and a KKT-certified support refit.
pub fn bpdn<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], lambda: T, opt_tol: T) -> Result<RecoveryResult<T>> {
    check_shapes(phi, y)?;
    if !(lambda > T::zero()) || !(opt_tol > T::zero()) {
        return Err(Error::InvalidArgument("bpdn needs lambda > 0 and opt_tol > 0".into()));
    }
    let m = phi.cols();
    let norm = spectral_norm(phi)?;
    if norm.is_zero() {
        return Ok(RecoveryResult::new(phi, y, vec![Complex::zero(); m], 0, true));
    }
    let lip = norm * norm;
    let step = T::one() / lip;
    let obj = |z: &[Complex<T>]| lasso_objective(phi, y, lambda, z);
    let prox_step = |p: &[Complex<T>]| -> Vec<Complex<T>> {
        let r: Vec<_> = phi.mul_vec(p).iter().zip(y).map(|(a, b)| *a - *b).collect();
        let grad = phi.adjoint_mul_vec(&r);
        p.iter()
            .zip(&grad)
            .map(|(pi, gi)| soft_threshold(*pi - *gi * step, lambda * step))
            .collect()
    };
    let mut x = vec![Complex::zero(); m];
    let mut f = obj(&x);
    let mut p = x.clone();
    let mut t = T::one();
    for it in 1..=MAX_ITERATIONS {
        let mut x_new = prox_step(&p);
        let mut f_new = obj(&x_new);
        if f_new > f {
            // restart from the last iterate; a plain proximal step is monotone
            t = T::one();
            x_new = prox_step(&x);
            f_new = obj(&x_new);
        }
        let t_new = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let mom = (t - T::one()) / t_new;
        p = x_new.iter().zip(&x).map(|(a, b)| *a + (*a - *b) * mom).collect();
        t = t_new;
        let change = (f - f_new).abs();
        x = x_new;
        let f_old = f;
        f = f_new.min(f_old);
        let done = change <= opt_tol * f.max(T::min_positive_value());
        if done || it % 50 == 0 {
            if let Some(pol) = kkt_polish(phi, y, lambda, &x) {
                if obj(&pol) <= f * (T::one() + T::lit(1e-12)) {
                    return Ok(RecoveryResult::new(phi, y, pol, it, true));
                }
            }
        }
        if done {
            return Ok(RecoveryResult::new(phi, y, x, it, true));
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS })
}

/// Exhaustive search for the smallest support whose least-squares fit
/// leaves residual `≤ tol·‖Y‖₂`; ties broken by the smaller residual.
pub fn brute_force_l0<T: Real>(phi: &CMatrix<T>, y: &[Complex<T>], s_max: usize, tol: T) -> Result<RecoveryResult<T>> {
    check_shapes(phi, y)?;
    let m = phi.cols();
    if m > 24 || s_max > 4 {
        return Err(Error::InvalidArgument(format!(
            "brute-force search limited to m <= 24 and s_max <= 4 (got m = {m}, s_max = {s_max})"
        )));
    }
    let target = tol * norm2(y);
    if norm2(y) <= target {
        return Ok(RecoveryResult::new(phi, y, vec![Complex::zero(); m], 0, true));
    }
    let mut tried = 0;
    for k in 1..=s_max.min(m) {
        let mut best: Option<(T, Vec<Complex<T>>)> = None;
        for support in (0..m).combinations(k) {
            tried += 1;
            let Ok(xs) = least_squares(&phi.select_columns(&support), y) else { continue };
            let x = scatter(m, &support, &xs);
            let r = residual(phi, &x, y);
            if r <= target && best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, x));
            }
        }
        if let Some((_, x)) = best {
            return Ok(RecoveryResult::new(phi, y, x, tried, true));
        }
    }
    Err(Error::NoFeasibleSupport { s_max })
}

/// Strength estimate `ν̂_j = x̂_j / (uⁱ(r_j) + ω² (G x̂)_j)` on the active set.
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthEstimate<T> {
    pub nu_hat: Vec<Complex<T>>,
    /// Active sites (nonzero entries of `x̂`).
    pub active: Vec<usize>,
    /// Denominators in `active` order.
    pub denominator: Vec<Complex<T>>,
    pub well_defined: bool,
}

impl<T: Real> StrengthEstimate<T> {
    pub fn target(&self) -> Target<T> {
        Target::from_dense(self.nu_hat.clone())
    }
}

/// Inverts `X = V U` for `V` using `U = Uⁱ + ω² G X` on the nonzero entries
/// of `x_hat`. Zero denominators leave `ν̂_j = 0` and clear `well_defined`.
pub fn invert_strengths<T: Real>(
    x_hat: &[Complex<T>],
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    incident: &IncidentField<T>,
) -> Result<StrengthEstimate<T>> {
    if x_hat.len() != lat.len() {
        return Err(Error::InvalidArgument(format!(
            "estimate length {} does not match lattice size {}",
            x_hat.len(),
            lat.len()
        )));
    }
    let active: Vec<usize> = (0..x_hat.len()).filter(|&j| !x_hat[j].is_zero()).collect();
    let g = green_matrix(lat, &active, omega)?;
    let xa: Vec<_> = active.iter().map(|&j| x_hat[j]).collect();
    let gx = g.mul_vec(&xa);
    let w2 = omega.get() * omega.get();
    let mut nu_hat = vec![Complex::zero(); x_hat.len()];
    let mut denominator = Vec::with_capacity(active.len());
    let mut well_defined = true;
    for (i, &j) in active.iter().enumerate() {
        let den = incident.eval(lat.point(j)?, lat, omega)? + gx[i] * w2;
        if den.norm() <= T::lit(ZERO_DENOMINATOR) {
            well_defined = false;
        } else {
            nu_hat[j] = x_hat[j] / den;
        }
        denominator.push(den);
    }
    Ok(StrengthEstimate { nu_hat, active, denominator, well_defined })
}

/// Near-field inversion for a point source at `r0`:
/// `ν̂_j = x̂_j / (G(r_j, r₀) + ω² Σ_{l≠j} x̂_l G(r_j, r_l))`.
pub fn invert_strengths_nearfield<T: Real>(
    x_hat: &[Complex<T>],
    lat: &Lattice<T>,
    omega: Wavenumber<T>,
    r0: [T; 3],
) -> Result<StrengthEstimate<T>> {
    invert_strengths(x_hat, lat, omega, &IncidentField::PointSource(r0))
}

/// `3 + √(3/2)`, the lasso error constant.
pub fn lasso_constant<T: Real>() -> T {
    T::lit(3.0) + T::lit(1.5).sqrt()
}

/// Stability quantities for a target under noise level `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport<T> {
    /// `ω²‖GV‖` (max row sum on the support).
    pub gv: T,
    /// `‖G‖` on the support.
    pub g_norm: T,
    pub v_norm: T,
    /// `max_{j∈S} 1/|ν_j|`.
    pub v_inv_norm: T,
    /// `(1 − 2ω²‖GV‖)/(1 − ω²‖GV‖)`, absent when `ω²‖GV‖ ≥ 1/2`.
    pub b0: Option<T>,
    /// Support condition with `t = ω²cε‖G‖`.
    pub cond_green: bool,
    /// Support condition with `t = cε‖V⁻¹‖`.
    pub cond_strength: bool,
    /// `(3 + √1.5)ε`, the bound on `‖X̂ − X‖∞`.
    pub x_error_bound: T,
    /// Bound on `‖V − V̂‖`, present only when `cond_green` holds.
    pub strength_error_bound: Option<T>,
}

/// Evaluates `b₀`, the strength error bound
/// `2(1 + ω²‖G‖‖V‖)cε / (b₀(b₀ − ω²cε‖G‖))` with `c = 3 + √1.5`, and the
/// two support conditions
/// `ω²‖GV‖ < (1 − t)/(2 − t)` with `t = ω²cε‖G‖` and `t = cε‖V⁻¹‖`.
pub fn stability_bounds<T: Real>(target: &Target<T>, lat: &Lattice<T>, omega: Wavenumber<T>, eps: T) -> Result<StabilityReport<T>> {
    if target.sparsity() == 0 {
        return Err(Error::InvalidArgument("stability bounds need a nonempty support".into()));
    }
    if target.len() != lat.len() {
        return Err(Error::InvalidArgument("target and lattice sizes differ".into()));
    }
    let sites = target.support();
    let g = green_matrix(lat, sites, omega)?;
    let nu = target.support_values();
    let gv = CMatrix::from_fn(sites.len(), sites.len(), |i, j| g[(i, j)] * nu[j]);
    let w2 = omega.get() * omega.get();
    let a = w2 * gv.norm_inf();
    let g_norm = g.norm_inf();
    let v_norm = nu.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let v_inv_norm = nu.iter().map(|v| T::one() / v.norm()).fold(T::zero(), T::max);
    let c = lasso_constant::<T>();
    let holds = |t: T| t < T::one() && a < (T::one() - t) / (T::lit(2.0) - t);
    let half = T::lit(0.5);
    let b0 = (a < half).then(|| (T::one() - T::lit(2.0) * a) / (T::one() - a));
    let t2 = w2 * c * eps * g_norm;
    let cond_green = b0.is_some() && holds(t2);
    let cond_strength = b0.is_some() && holds(c * eps * v_inv_norm);
    let strength_error_bound = match b0 {
        Some(b) if cond_green => {
            Some(T::lit(2.0) * (T::one() + w2 * g_norm * v_norm) * c * eps / (b * (b - t2)))
        }
        _ => None,
    };
    Ok(StabilityReport {
        gv: a,
        g_norm,
        v_norm,
        v_inv_norm,
        b0,
        cond_green,
        cond_strength,
        x_error_bound: c * eps,
        strength_error_bound,
    })
}

/// `max_j |ν_j − ν̂_j|`, the norm of the diagonal difference.
pub fn strength_error<T: Real>(nu: &[Complex<T>], nu_hat: &[Complex<T>]) -> T {
    nu.iter().zip(nu_hat).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryMetrics<T> {
    pub err_inf: T,
    pub err_2: T,
    pub exact_support: bool,
    pub support_contained: bool,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Compares `x̂` (support above `threshold`) with `X` (support = nonzeros).
pub fn recovery_metrics<T: Real>(x_hat: &[Complex<T>], x_true: &[Complex<T>], threshold: T) -> Result<RecoveryMetrics<T>> {
    if x_hat.len() != x_true.len() {
        return Err(Error::InvalidArgument("estimate and truth lengths differ".into()));
    }
    let diff: Vec<_> = x_hat.iter().zip(x_true).map(|(a, b)| *a - *b).collect();
    let est: Vec<bool> = x_hat.iter().map(|v| v.norm() > threshold).collect();
    let tru: Vec<bool> = x_true.iter().map(|v| !v.is_zero()).collect();
    let false_positives = est.iter().zip(&tru).filter(|(e, t)| **e && !**t).count();
    let false_negatives = est.iter().zip(&tru).filter(|(e, t)| !**e && **t).count();
    Ok(RecoveryMetrics {
        err_inf: norm_max(&diff),
        err_2: norm2(&diff),
        exact_support: false_positives == 0 && false_negatives == 0,
        support_contained: false_positives == 0,
        false_positives,
        false_negatives,
    })
}

/// Complex Gaussian vector rescaled to `‖E‖₂ = norm` exactly.
pub fn complex_noise<T: Real, R: Rng>(rng: &mut R, len: usize, norm: T) -> Vec<Complex<T>> {
    let raw: Vec<Complex<T>> = (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let n = norm2(&raw);
    if n.is_zero() {
        return raw;
    }
    raw.into_iter().map(|v| v * (norm / n)).collect()
}
