//! Monte Carlo drivers. Trials run in parallel with per-trial seeds and are
//! collected in trial order, so output does not depend on the worker count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, ForwardModel, SparsitySpec};
use super::table::{fmt_f64, fmt_opt, Table};
use super::theory::measure_chi;
use crate::error::{Error, Result};
use crate::forward::{
    born_amplitude, exact_amplitude, foldy_lax_solve, resonance_distance, resonant_pair, scattering_amplitude,
    ExcitingField, IncidentField,
};
use crate::linalg::CMatrix;
use crate::recover::{
    basis_pursuit_default, bpdn, complex_noise, invert_strengths, omp, recovery_metrics, stability_bounds,
    strength_error, RecoveryResult, BP_EQ_TOL_REL, SUPPORT_THRESHOLD_REL,
};
use crate::scene::{
    delta_max, draw_far_field_2d, draw_far_field_3d, draw_near_field, draw_target_with, rng_from_seed, trial_seed,
    AmplitudeLaw, AngleDensity, Lattice, SensorSet, SphereDensity, Target,
};
use crate::sensing::{build_dt_nearfield, build_from_sensors, build_simo_farfield_dirs, coherence, k_from_delta};
use crate::specfun::{green_radial, Wavenumber};

/// Relative `ℓ∞` tolerance for exact recovery of `X` and `ν`.
pub const EXACT_RECOVERY_REL: f64 = 1e-6;
/// Relative tolerance of the reciprocity check.
pub const RECIPROCITY_REL: f64 = 1e-10;
/// Relative stopping tolerance for BPDN.
pub const BPDN_OPT_TOL: f64 = 1e-12;
/// Distance from `1` to the spectrum of `ω²GV` accepted as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

/// Runs the experiment selected by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Coherence => Ok(mc_coherence(cfg)?.table()),
        ExperimentKind::Recovery => Ok(mc_recovery(cfg)?.table()),
        ExperimentKind::Stability => Ok(mc_stability(cfg)?.table()),
        ExperimentKind::Dt => Ok(mc_dt(cfg)?.table()),
        ExperimentKind::Reciprocity => Ok(reciprocity(cfg)?.table()),
        ExperimentKind::Resonance => Ok(resonance(cfg)?.table()),
    }
}

/// Seed of trial `t` in sweep block `block`.
pub fn block_seed(cfg: &ExperimentConfig, block: usize, t: usize) -> u64 {
    trial_seed(cfg.seed, (block * cfg.trials + t) as u64)
}

fn run_trials<R: Send>(cfg: &ExperimentConfig, f: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    (0..cfg.trials).into_par_iter().map(f).collect()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn check_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(Error::Config(format!("config describes {}, not {kind}", cfg.kind)));
    }
    Ok(())
}

/// Sensor densities built once per experiment.
enum Densities {
    Planar(AngleDensity, AngleDensity),
    Sphere(SphereDensity, SphereDensity),
}

impl Densities {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(if cfg.dim == 2 {
            Self::Planar(cfg.incident.planar()?, cfg.sampling.planar()?)
        } else {
            Self::Sphere(cfg.incident.sphere()?, cfg.sampling.sphere()?)
        })
    }

    fn draw<R: Rng>(&self, p: usize, n: usize, rng: &mut R) -> SensorSet<f64> {
        match self {
            Self::Planar(i, s) => draw_far_field_2d(p, n, i, s, rng),
            Self::Sphere(i, s) => draw_far_field_3d(p, n, i, s, rng),
        }
    }
}

fn dense_x(m: usize, target: &Target<f64>, field: &ExcitingField<f64>) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for (&j, &u) in field.sites.iter().zip(&field.u) {
        x[j] = target.nu()[j] * u;
    }
    x
}

fn norm_max(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Data normalisation `Y = (4π/ω²) A`.
fn data_scale(w: Wavenumber<f64>) -> f64 {
    4.0 * PI / (w.get() * w.get())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceTrial {
    pub trial: usize,
    pub seed: u64,
    pub mu: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherencePoint {
    pub omega: f64,
    pub chi_i: f64,
    pub chi_s: f64,
    pub k: f64,
    /// `(χⁱ + √2K/√p)(χˢ + √2K/√n)`.
    pub bound: f64,
    pub trials: Vec<CoherenceTrial>,
}

impl CoherencePoint {
    pub fn passes(&self) -> usize {
        self.trials.iter().filter(|t| t.pass).count()
    }

    pub fn pass_fraction(&self) -> f64 {
        self.passes() as f64 / self.trials.len() as f64
    }

    pub fn median_mu(&self) -> f64 {
        median(&self.trials.iter().map(|t| t.mu).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport {
    /// `(1 − δ)²`.
    pub target_fraction: f64,
    pub points: Vec<CoherencePoint>,
}

/// Draws MIMO sensor sets and compares `μ(Φ)` with the predicted bound.
pub fn mc_coherence(cfg: &ExperimentConfig) -> Result<CoherenceReport> {
    check_kind(cfg, ExperimentKind::Coherence)?;
    let lat = cfg.lattice()?;
    let dens = Densities::new(cfg)?;
    let k = k_from_delta(cfg.m(), cfg.delta);
    let mut points = Vec::new();
    for (b, &omega) in cfg.omega.iter().enumerate() {
        let w = Wavenumber::new(omega)?;
        let (chi_i, chi_s) = measure_chi(cfg, omega)?;
        let bound = crate::sensing::coherence_bound_prediction(chi_i, chi_s, k, cfg.n, cfg.p);
        let trials = run_trials(cfg, |t| {
            let seed = block_seed(cfg, b, t);
            let mut rng = rng_from_seed(seed);
            let sensors = dens.draw(cfg.p, cfg.n, &mut rng);
            let phi = build_from_sensors(&lat, &sensors, w)?;
            let mu = coherence(&phi.entries)?;
            Ok(CoherenceTrial { trial: t, seed, mu, pass: mu < bound })
        })?;
        points.push(CoherencePoint { omega, chi_i, chi_s, k, bound, trials });
    }
    Ok(CoherenceReport { target_fraction: (1.0 - cfg.delta).powi(2), points })
}

impl CoherenceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Coherence.as_str(),
            &[
                "record", "omega", "trial", "seed", "mu", "chi_i", "chi_s", "K", "bound", "pass", "passes", "trials",
                "pass_fraction", "target_fraction", "median_mu",
            ],
        );
        for pt in &self.points {
            for tr in &pt.trials {
                t.push(vec![
                    "trial".into(),
                    fmt_f64(pt.omega),
                    cell(tr.trial),
                    cell(tr.seed),
                    fmt_f64(tr.mu),
                    fmt_f64(pt.chi_i),
                    fmt_f64(pt.chi_s),
                    fmt_f64(pt.k),
                    fmt_f64(pt.bound),
                    cell(tr.pass),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
            t.push(vec![
                "summary".into(),
                fmt_f64(pt.omega),
                String::new(),
                String::new(),
                String::new(),
                fmt_f64(pt.chi_i),
                fmt_f64(pt.chi_s),
                fmt_f64(pt.k),
                fmt_f64(pt.bound),
                String::new(),
                cell(pt.passes()),
                cell(pt.trials.len()),
                fmt_f64(pt.pass_fraction()),
                fmt_f64(self.target_fraction),
                fmt_f64(pt.median_mu()),
            ]);
        }
        t
    }
}

/// Outcome of one solver on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOutcome {
    /// The solver returned an estimate (no numerical error).
    pub solved: bool,
    pub exact_support: bool,
    /// `‖x̂ − X‖∞ / ‖X‖∞`.
    pub rel_err: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
}

impl SolverOutcome {
    fn failed() -> Self {
        Self { solved: false, exact_support: false, rel_err: None, residual: None, iterations: 0 }
    }

    fn from_result(r: &RecoveryResult<f64>, x_true: &[Complex64]) -> Result<Self> {
        let thr = SUPPORT_THRESHOLD_REL * norm_max(&r.x_hat);
        let met = recovery_metrics(&r.x_hat, x_true, thr)?;
        Ok(Self {
            solved: true,
            exact_support: met.exact_support,
            rel_err: Some(met.err_inf / norm_max(x_true)),
            residual: Some(r.residual_2),
            iterations: r.iterations,
        })
    }

    pub fn success(&self) -> bool {
        self.solved && self.exact_support && self.rel_err.is_some_and(|e| e <= EXACT_RECOVERY_REL)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryTrial {
    pub omega: f64,
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    pub mu: f64,
    /// `s ≤ ½(1 + 1/μ)`.
    pub within_spark: bool,
    /// Resonant draw excluded from the rates.
    pub skipped: bool,
    pub bp: SolverOutcome,
    pub omp: SolverOutcome,
    /// Strength inversion succeeded (exact model only).
    pub nu_success: Option<bool>,
    pub nu_rel_err: Option<f64>,
    /// `supp(ν̂) = supp(ν)` (exact model only).
    pub nu_support_equal: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryPoint {
    pub omega: f64,
    /// Sweep label: the sparsity, or `spark`.
    pub label: String,
    pub trials: Vec<RecoveryTrial>,
}

impl RecoveryPoint {
    pub fn counted(&self) -> usize {
        self.trials.iter().filter(|t| !t.skipped).count()
    }

    pub fn skipped(&self) -> usize {
        self.trials.len() - self.counted()
    }

    fn count(&self, f: impl Fn(&RecoveryTrial) -> bool) -> usize {
        self.trials.iter().filter(|t| !t.skipped && f(t)).count()
    }

    pub fn bp_successes(&self) -> usize {
        self.count(|t| t.bp.success())
    }

    pub fn omp_successes(&self) -> usize {
        self.count(|t| t.omp.success())
    }

    pub fn nu_successes(&self) -> usize {
        self.count(|t| t.nu_success == Some(true))
    }

    pub fn bp_rate(&self) -> Option<f64> {
        ratio(self.bp_successes(), self.counted())
    }

    pub fn omp_rate(&self) -> Option<f64> {
        ratio(self.omp_successes(), self.counted())
    }

    pub fn nu_rate(&self) -> Option<f64> {
        ratio(self.nu_successes(), self.counted())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    pub model: ForwardModel,
    pub points: Vec<RecoveryPoint>,
}

/// Simulated data for one trial.
struct Instance {
    phi: CMatrix<f64>,
    y: Vec<Complex64>,
    x: Vec<Complex64>,
    target: Target<f64>,
    incident: Option<[f64; 3]>,
}

/// Draws sensors and builds the matrix; the target is drawn afterwards
/// from the same stream so that `s` may depend on `μ(Φ)`.
fn simulate<R: Rng>(
    cfg: &ExperimentConfig,
    lat: &Lattice<f64>,
    dens: &Densities,
    w: Wavenumber<f64>,
    rng: &mut R,
    sparsity: impl FnOnce(f64) -> usize,
    law: AmplitudeLaw<f64>,
) -> Result<(f64, Option<Instance>)> {
    let m = lat.len();
    let scale = data_scale(w);
    match cfg.model {
        ForwardModel::Born => {
            let sensors = dens.draw(cfg.p, cfg.n, rng);
            let phi = build_from_sensors(lat, &sensors, w)?.entries;
            let mu = coherence(&phi)?;
            let target = draw_target_with(lat, sparsity(mu).clamp(1, m), law, rng)?;
            let (inc, samp) = (sensors.incident_directions()?, sensors.sampling_directions()?);
            let mut y = Vec::with_capacity(inc.len() * samp.len());
            for &d in &inc {
                for &r in &samp {
                    y.push(born_amplitude(&target, lat, w, d, r)? * scale);
                }
            }
            let x = target.nu().to_vec();
            Ok((mu, Some(Instance { phi, y, x, target, incident: None })))
        }
        ForwardModel::Exact => {
            let sensors = dens.draw(1, cfg.n, rng);
            let d = sensors.incident_directions()?[0];
            let samp = sensors.sampling_directions()?;
            let phi = build_simo_farfield_dirs(lat, &samp, w)?.entries;
            let mu = coherence(&phi)?;
            let target = draw_target_with(lat, sparsity(mu).clamp(1, m), law, rng)?;
            let field = match foldy_lax_solve(&target, lat, &IncidentField::PlaneWave(d), w) {
                Ok(f) => f,
                Err(Error::Resonance { .. }) => return Ok((mu, None)),
                Err(e) => return Err(e),
            };
            let y = samp
                .iter()
                .map(|&r| Ok(scattering_amplitude(&target, lat, &field, w, r)? * scale))
                .collect::<Result<Vec<_>>>()?;
            let x = dense_x(m, &target, &field);
            Ok((mu, Some(Instance { phi, y, x, target, incident: Some(d) })))
        }
    }
}

fn spark_sparsity(mu: f64) -> usize {
    (0.5 * (1.0 + 1.0 / mu)).floor() as usize
}

/// Noise-free recovery with BP and OMP; the exact model also inverts the
/// strengths.
pub fn mc_recovery(cfg: &ExperimentConfig) -> Result<RecoveryReport> {
    check_kind(cfg, ExperimentKind::Recovery)?;
    let lat = cfg.lattice()?;
    let dens = Densities::new(cfg)?;
    let mut points = Vec::new();
    let mut block = 0;
    for &omega in &cfg.omega {
        let w = Wavenumber::new(omega)?;
        for s_point in cfg.sparsity.points() {
            let b = block;
            block += 1;
            let trials = run_trials(cfg, |t| {
                let seed = block_seed(cfg, b, t);
                let mut rng = rng_from_seed(seed);
                let pick = |mu: f64| s_point.unwrap_or_else(|| spark_sparsity(mu));
                let (mu, inst) = simulate(cfg, &lat, &dens, w, &mut rng, pick, cfg.amplitude)?;
                let s_nominal = s_point.unwrap_or_else(|| spark_sparsity(mu).clamp(1, lat.len()));
                let Some(inst) = inst else {
                    return Ok(RecoveryTrial {
                        omega,
                        trial: t,
                        seed,
                        s: s_nominal,
                        mu,
                        within_spark: s_nominal as f64 <= 0.5 * (1.0 + 1.0 / mu),
                        skipped: true,
                        bp: SolverOutcome::failed(),
                        omp: SolverOutcome::failed(),
                        nu_success: None,
                        nu_rel_err: None,
                        nu_support_equal: None,
                    });
                };
                let s = inst.target.sparsity();
                let bp_res = basis_pursuit_default(&inst.phi, &inst.y).ok();
                let bp = match &bp_res {
                    Some(r) => SolverOutcome::from_result(r, &inst.x)?,
                    None => SolverOutcome::failed(),
                };
                let s_max = inst.phi.rows().min(inst.phi.cols());
                let omp_out = match omp(&inst.phi, &inst.y, s_max, BP_EQ_TOL_REL) {
                    Ok(r) => SolverOutcome::from_result(&r, &inst.x)?,
                    Err(_) => SolverOutcome::failed(),
                };
                let (nu_success, nu_rel_err, nu_support_equal) = match (inst.incident, &bp_res) {
                    (Some(d), Some(r)) => {
                        let est = invert_strengths(&r.sparse_estimate(), &lat, w, &IncidentField::PlaneWave(d))?;
                        let err = strength_error(inst.target.nu(), &est.nu_hat) / norm_max(inst.target.nu());
                        let same = est.well_defined && est.active == inst.target.support();
                        (Some(same && err <= EXACT_RECOVERY_REL), Some(err), Some(same))
                    }
                    (Some(_), None) => (Some(false), None, Some(false)),
                    (None, _) => (None, None, None),
                };
                Ok(RecoveryTrial {
                    omega,
                    trial: t,
                    seed,
                    s,
                    mu,
                    within_spark: s as f64 <= 0.5 * (1.0 + 1.0 / mu),
                    skipped: false,
                    bp,
                    omp: omp_out,
                    nu_success,
                    nu_rel_err,
                    nu_support_equal,
                })
            })?;
            points.push(RecoveryPoint { omega, label: cfg.sparsity.label(s_point), trials });
        }
    }
    Ok(RecoveryReport { model: cfg.model, points })
}

impl RecoveryReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Recovery.as_str(),
            &[
                "record", "model", "omega", "sparsity", "trial", "seed", "s", "mu", "within_spark", "skipped",
                "bp_residual", "bp_rel_err", "bp_exact_support", "bp_iterations", "bp_success", "omp_residual",
                "omp_rel_err", "omp_exact_support", "omp_iterations", "omp_success", "nu_rel_err", "nu_support_equal",
                "nu_success",
                "counted", "skipped_total", "bp_rate", "omp_rate", "nu_rate",
            ],
        );
        let model = self.model.as_str();
        for pt in &self.points {
            for tr in &pt.trials {
                let mut row = vec![
                    "trial".into(),
                    model.into(),
                    fmt_f64(pt.omega),
                    pt.label.clone(),
                    cell(tr.trial),
                    cell(tr.seed),
                    cell(tr.s),
                    fmt_f64(tr.mu),
                    cell(tr.within_spark),
                    cell(tr.skipped),
                ];
                for o in [&tr.bp, &tr.omp] {
                    row.extend([
                        fmt_opt(o.residual),
                        fmt_opt(o.rel_err),
                        cell(o.exact_support),
                        cell(o.iterations),
                        cell(o.success()),
                    ]);
                }
                row.extend([fmt_opt(tr.nu_rel_err), opt_cell(tr.nu_support_equal), opt_cell(tr.nu_success)]);
                row.extend(std::iter::repeat_n(String::new(), 5));
                t.push(row);
            }
            let mut row = vec!["summary".into(), model.into(), fmt_f64(pt.omega), pt.label.clone()];
            row.extend(std::iter::repeat_n(String::new(), 19));
            row.extend([
                cell(pt.counted()),
                cell(pt.skipped()),
                fmt_opt(pt.bp_rate()),
                fmt_opt(pt.omp_rate()),
                fmt_opt(if self.model == ForwardModel::Exact { pt.nu_rate() } else { None }),
            ]);
            t.push(row);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTrial {
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    pub mu: f64,
    pub skipped: bool,
    /// The solver returned an estimate.
    pub solved: bool,
    /// `‖x̂ − X‖∞`.
    pub x_err: f64,
    /// `(3 + √1.5)ε`, or the exact-recovery tolerance when `ε = 0`.
    pub x_bound: f64,
    pub support_contained: bool,
    pub nu_support_equal: bool,
    /// `‖𝒱 − 𝒱̂‖ = max_j |ν_j − ν̂_j|`.
    pub v_err: f64,
    pub v_bound: Option<f64>,
    /// `ω²‖GV‖`.
    pub gv: f64,
    pub mu_s: bool,
    pub cond_green: bool,
    pub cond_strength: bool,
}

impl StabilityTrial {
    /// `μs ≤ 1/3` and both support conditions.
    pub fn hypotheses(&self) -> bool {
        !self.skipped && self.mu_s && self.cond_green && self.cond_strength
    }

    pub fn x_ok(&self) -> bool {
        self.solved && self.x_err <= self.x_bound
    }

    pub fn v_ok(&self) -> Option<bool> {
        self.v_bound.map(|b| self.solved && self.v_err <= b)
    }

    /// Every conclusion of the stability theorem holds.
    pub fn all_ok(&self) -> bool {
        self.x_ok() && self.support_contained && self.nu_support_equal && self.v_ok() == Some(true)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityPoint {
    pub omega: f64,
    pub eps: f64,
    pub s: usize,
    pub lambda: f64,
    pub trials: Vec<StabilityTrial>,
}

impl StabilityPoint {
    pub fn counted(&self) -> usize {
        self.trials.iter().filter(|t| !t.skipped).count()
    }

    pub fn hypotheses(&self) -> usize {
        self.trials.iter().filter(|t| t.hypotheses()).count()
    }

    fn among_hyp(&self, f: impl Fn(&StabilityTrial) -> bool) -> usize {
        self.trials.iter().filter(|t| t.hypotheses() && f(t)).count()
    }

    pub fn x_ok(&self) -> usize {
        self.among_hyp(StabilityTrial::x_ok)
    }

    pub fn contained(&self) -> usize {
        self.among_hyp(|t| t.support_contained)
    }

    pub fn nu_support(&self) -> usize {
        self.among_hyp(|t| t.nu_support_equal)
    }

    pub fn v_ok(&self) -> usize {
        self.among_hyp(|t| t.v_ok() == Some(true))
    }

    pub fn all_ok(&self) -> usize {
        self.among_hyp(StabilityTrial::all_ok)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityExperiment {
    pub points: Vec<StabilityPoint>,
}

/// Noisy exact-model recovery by BPDN with `λ = 2εn` and `‖E‖₂ = ε√n`;
/// `ε = 0` uses basis pursuit.
pub fn mc_stability(cfg: &ExperimentConfig) -> Result<StabilityExperiment> {
    check_kind(cfg, ExperimentKind::Stability)?;
    let lat = cfg.lattice()?;
    let dens = Densities::new(cfg)?;
    let SparsitySpec::Fixed(sweep) = &cfg.sparsity else {
        return Err(Error::Config("mc-stability needs an explicit sparsity sweep".into()));
    };
    let n = cfg.n as f64;
    let mut points = Vec::new();
    let mut block = 0;
    for &omega in &cfg.omega {
        let w = Wavenumber::new(omega)?;
        for &eps in &cfg.noise {
            for &s in sweep {
                let b = block;
                block += 1;
                let lambda = 2.0 * eps * n;
                let trials = run_trials(cfg, |t| {
                    let seed = block_seed(cfg, b, t);
                    let mut rng = rng_from_seed(seed);
                    let (mu, inst) = simulate(cfg, &lat, &dens, w, &mut rng, |_| s, cfg.amplitude)?;
                    let Some(inst) = inst else {
                        return Ok(StabilityTrial {
                            trial: t,
                            seed,
                            s,
                            mu,
                            skipped: true,
                            solved: false,
                            x_err: f64::NAN,
                            x_bound: f64::NAN,
                            support_contained: false,
                            nu_support_equal: false,
                            v_err: f64::NAN,
                            v_bound: None,
                            gv: f64::NAN,
                            mu_s: false,
                            cond_green: false,
                            cond_strength: false,
                        });
                    };
                    let noise = complex_noise(&mut rng, inst.y.len(), eps * n.sqrt());
                    let y: Vec<_> = inst.y.iter().zip(&noise).map(|(a, e)| a + e).collect();
                    let solved = if eps == 0.0 {
                        basis_pursuit_default(&inst.phi, &y)
                    } else {
                        bpdn(&inst.phi, &y, lambda, BPDN_OPT_TOL)
                    };
                    let rep = stability_bounds(&inst.target, &lat, w, eps)?;
                    let x_bound = if eps == 0.0 { EXACT_RECOVERY_REL * norm_max(&inst.x) } else { rep.x_error_bound };
                    let d = inst.incident.expect("exact model has an incident direction");
                    let (solved, x_err, contained, nu_eq, v_err) = match solved {
                        Ok(r) => {
                            let xs = r.sparse_estimate();
                            let met = recovery_metrics(&xs, &inst.x, 0.0)?;
                            let est = invert_strengths(&xs, &lat, w, &IncidentField::PlaneWave(d))?;
                            let v_err = strength_error(inst.target.nu(), &est.nu_hat);
                            let nu_eq = est.well_defined && est.active == inst.target.support();
                            (true, met.err_inf, met.support_contained, nu_eq, v_err)
                        }
                        Err(Error::NonConvergence { .. } | Error::Infeasible { .. }) => {
                            (false, f64::NAN, false, false, f64::NAN)
                        }
                        Err(e) => return Err(e),
                    };
                    Ok(StabilityTrial {
                        trial: t,
                        seed,
                        s,
                        mu,
                        skipped: false,
                        solved,
                        x_err,
                        x_bound,
                        support_contained: contained,
                        nu_support_equal: nu_eq,
                        v_err,
                        v_bound: rep.strength_error_bound,
                        gv: rep.gv,
                        mu_s: mu * s as f64 <= 1.0 / 3.0,
                        cond_green: rep.cond_green,
                        cond_strength: rep.cond_strength,
                    })
                })?;
                points.push(StabilityPoint { omega, eps, s, lambda, trials });
            }
        }
    }
    Ok(StabilityExperiment { points })
}

impl StabilityExperiment {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Stability.as_str(),
            &[
                "record", "omega", "eps", "s", "lambda", "trial", "seed", "mu", "skipped", "solved", "x_err",
                "x_bound", "x_ok", "support_contained", "nu_support_equal", "v_err", "v_bound", "v_ok", "omega2_GV",
                "mu_s_le_third", "cond_green", "cond_strength", "hypotheses", "counted", "hypotheses_total", "x_ok_total",
                "contained_total", "nu_support_total", "v_ok_total", "all_ok_total",
            ],
        );
        for pt in &self.points {
            let head = [fmt_f64(pt.omega), fmt_f64(pt.eps), cell(pt.s), fmt_f64(pt.lambda)];
            for tr in &pt.trials {
                let mut row = vec!["trial".to_string()];
                row.extend(head.iter().cloned());
                row.extend([
                    cell(tr.trial),
                    cell(tr.seed),
                    fmt_f64(tr.mu),
                    cell(tr.skipped),
                    cell(tr.solved),
                    fmt_f64(tr.x_err),
                    fmt_f64(tr.x_bound),
                    cell(tr.x_ok()),
                    cell(tr.support_contained),
                    cell(tr.nu_support_equal),
                    fmt_f64(tr.v_err),
                    fmt_opt(tr.v_bound),
                    opt_cell(tr.v_ok()),
                    fmt_f64(tr.gv),
                    cell(tr.mu_s),
                    cell(tr.cond_green),
                    cell(tr.cond_strength),
                    cell(tr.hypotheses()),
                ]);
                row.extend(std::iter::repeat_n(String::new(), 7));
                t.push(row);
            }
            let mut row = vec!["summary".to_string()];
            row.extend(head.iter().cloned());
            row.extend(std::iter::repeat_n(String::new(), 18));
            row.extend([
                cell(pt.counted()),
                cell(pt.hypotheses()),
                cell(pt.x_ok()),
                cell(pt.contained()),
                cell(pt.nu_support()),
                cell(pt.v_ok()),
                cell(pt.all_ok()),
            ]);
            t.push(row);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtPoint {
    pub omega: f64,
    /// `ωL`.
    pub omega_l: f64,
    pub mus: Vec<f64>,
    pub seeds: Vec<u64>,
    pub delta_max: f64,
    /// `|G(Δ_max)|`.
    pub g_abs: f64,
    /// `√2K/√n`.
    pub k_term: f64,
    /// `(ωL)^{-1/2}` in 2D, `(ωL)^{-1}` in 3D.
    pub trend: f64,
}

impl DtPoint {
    pub fn median_mu(&self) -> f64 {
        median(&self.mus)
    }

    pub fn mean_mu(&self) -> f64 {
        self.mus.iter().sum::<f64>() / self.mus.len() as f64
    }

    /// `|G(Δ_max)|⁻²(√2K/√n + c·trend)`.
    pub fn bound(&self, c: f64) -> f64 {
        (self.k_term + c * self.trend) / (self.g_abs * self.g_abs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtReport {
    pub dim: usize,
    pub k: f64,
    /// Constant of the trend term, fitted by least squares on the trials of
    /// the first sweep point.
    pub c: f64,
    pub points: Vec<DtPoint>,
}

/// Near-field coherence over an `ω` sweep.
pub fn mc_dt(cfg: &ExperimentConfig) -> Result<DtReport> {
    check_kind(cfg, ExperimentKind::Dt)?;
    let lat = cfg.lattice()?;
    let k = k_from_delta(cfg.m(), cfg.delta);
    let k_term = std::f64::consts::SQRT_2 * k / (cfg.n as f64).sqrt();
    let dmax = delta_max(cfg.dim, cfg.aperture, lat.extent(), cfg.standoff);
    let mut points = Vec::new();
    for (b, &omega) in cfg.omega.iter().enumerate() {
        let w = Wavenumber::new(omega)?;
        let rows = run_trials(cfg, |t| {
            let seed = block_seed(cfg, b, t);
            let mut rng = rng_from_seed(seed);
            let sensors = draw_near_field(&lat, cfg.n, cfg.aperture, cfg.standoff, &mut rng)?;
            let phi = build_dt_nearfield(&lat, &sensors, w)?;
            Ok((seed, coherence(&phi.entries)?))
        })?;
        let omega_l = omega * cfg.aperture;
        let trend = if cfg.dim == 2 { omega_l.powf(-0.5) } else { 1.0 / omega_l };
        points.push(DtPoint {
            omega,
            omega_l,
            seeds: rows.iter().map(|r| r.0).collect(),
            mus: rows.iter().map(|r| r.1).collect(),
            delta_max: dmax,
            g_abs: green_radial(cfg.dim, dmax, w)?.norm(),
            k_term,
            trend,
        });
    }
    let first = &points[0];
    let c = (first.mean_mu() * first.g_abs * first.g_abs - first.k_term) / first.trend;
    Ok(DtReport { dim: cfg.dim, k, c, points })
}

impl DtReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Dt.as_str(),
            &[
                "record", "dim", "omega", "omega_L", "trial", "seed", "mu", "median_mu", "delta_max", "G_abs",
                "K", "k_term", "trend", "c", "bound",
            ],
        );
        for pt in &self.points {
            let head = [cell(self.dim), fmt_f64(pt.omega), fmt_f64(pt.omega_l)];
            for (i, (&mu, &seed)) in pt.mus.iter().zip(&pt.seeds).enumerate() {
                let mut row = vec!["trial".to_string()];
                row.extend(head.iter().cloned());
                row.extend([cell(i), cell(seed), fmt_f64(mu)]);
                row.extend(std::iter::repeat_n(String::new(), 8));
                t.push(row);
            }
            let mut row = vec!["summary".to_string()];
            row.extend(head.iter().cloned());
            row.extend([String::new(), String::new(), String::new()]);
            row.extend([
                fmt_f64(pt.median_mu()),
                fmt_f64(pt.delta_max),
                fmt_f64(pt.g_abs),
                fmt_f64(self.k),
                fmt_f64(pt.k_term),
                fmt_f64(pt.trend),
                fmt_f64(self.c),
                fmt_f64(pt.bound(self.c)),
            ]);
            t.push(row);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocityTrial {
    pub omega: f64,
    pub s: usize,
    pub trial: usize,
    pub seed: u64,
    pub skipped: bool,
    /// `|A(r̂, d)|`.
    pub amplitude: f64,
    /// `|A(r̂, d) − A(−d, −r̂)|`.
    pub gap: f64,
}

impl ReciprocityTrial {
    pub fn pass(&self) -> bool {
        !self.skipped && self.gap <= RECIPROCITY_REL * self.amplitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocityReport {
    pub trials: Vec<ReciprocityTrial>,
}

impl ReciprocityReport {
    pub fn counted(&self) -> usize {
        self.trials.iter().filter(|t| !t.skipped).count()
    }

    pub fn passes(&self) -> usize {
        self.trials.iter().filter(|t| t.pass()).count()
    }
}

/// Compares `A(r̂, d)` with `A(−d, −r̂)` from two independent solves.
pub fn reciprocity(cfg: &ExperimentConfig) -> Result<ReciprocityReport> {
    check_kind(cfg, ExperimentKind::Reciprocity)?;
    let lat = cfg.lattice()?;
    let dens = Densities::new(cfg)?;
    let SparsitySpec::Fixed(sweep) = &cfg.sparsity else {
        return Err(Error::Config("reciprocity needs an explicit sparsity sweep".into()));
    };
    let mut out = Vec::new();
    let mut block = 0;
    for &omega in &cfg.omega {
        let w = Wavenumber::new(omega)?;
        for &s in sweep {
            let b = block;
            block += 1;
            out.extend(run_trials(cfg, |t| {
                let seed = block_seed(cfg, b, t);
                let mut rng = rng_from_seed(seed);
                let target = draw_target_with(&lat, s, cfg.amplitude, &mut rng)?;
                let sensors = dens.draw(1, 1, &mut rng);
                let d = sensors.incident_directions()?[0];
                let r = sensors.sampling_directions()?[0];
                let neg = |v: [f64; 3]| [-v[0], -v[1], -v[2]];
                let pair = exact_amplitude(&target, &lat, w, d, r)
                    .and_then(|a| Ok((a, exact_amplitude(&target, &lat, w, neg(r), neg(d))?)));
                let (skipped, amplitude, gap) = match pair {
                    Ok((a, b)) => (false, a.norm(), (a - b).norm()),
                    Err(Error::Resonance { .. }) => (true, f64::NAN, f64::NAN),
                    Err(e) => return Err(e),
                };
                Ok(ReciprocityTrial { omega, s, trial: t, seed, skipped, amplitude, gap })
            })?);
        }
    }
    Ok(ReciprocityReport { trials: out })
}

impl ReciprocityReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Reciprocity.as_str(),
            &["record", "omega", "s", "trial", "seed", "skipped", "amplitude", "gap", "rel_gap", "pass", "counted", "passes"],
        );
        for tr in &self.trials {
            t.push(vec![
                "trial".into(),
                fmt_f64(tr.omega),
                cell(tr.s),
                cell(tr.trial),
                cell(tr.seed),
                cell(tr.skipped),
                fmt_f64(tr.amplitude),
                fmt_f64(tr.gap),
                fmt_f64(tr.gap / tr.amplitude),
                cell(tr.pass()),
                String::new(),
                String::new(),
            ]);
        }
        let mut row = vec!["summary".to_string()];
        row.extend(std::iter::repeat_n(String::new(), 9));
        row.extend([cell(self.counted()), cell(self.passes())]);
        t.push(row);
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceTrial {
    pub trial: usize,
    pub seed: u64,
    pub sites: [usize; 2],
    pub magnitudes: [f64; 2],
    /// No resonance in the bisection bracket.
    pub skipped: bool,
    pub omega: f64,
    /// Distance from `1` to the spectrum of `ω²GV` at `omega`.
    pub distance: f64,
    /// The Foldy-Lax solve at `omega` reported a resonance.
    pub raised: bool,
}

impl ResonanceTrial {
    pub fn pass(&self) -> bool {
        !self.skipped && self.distance <= RESONANCE_TOL && self.raised
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceReport {
    pub trials: Vec<ResonanceTrial>,
}

/// Random two-scatterer pairs tuned to resonance by bisection.
pub fn resonance(cfg: &ExperimentConfig) -> Result<ResonanceReport> {
    check_kind(cfg, ExperimentKind::Resonance)?;
    let lat = cfg.lattice()?;
    let m = lat.len();
    let trials = run_trials(cfg, |t| {
        let seed = block_seed(cfg, 0, t);
        let mut rng = rng_from_seed(seed);
        let pick = rand::seq::index::sample(&mut rng, m, 2).into_vec();
        let mut mag = || match cfg.amplitude {
            AmplitudeLaw::Constant(a) => a,
            AmplitudeLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        };
        let magnitudes = [mag(), mag()];
        let sites = [pick[0], pick[1]];
        let pair = match resonant_pair(&lat, sites[0], sites[1], magnitudes[0], magnitudes[1]) {
            Ok(p) => p,
            Err(Error::InvalidArgument(_)) => {
                return Ok(ResonanceTrial {
                    trial: t,
                    seed,
                    sites,
                    magnitudes,
                    skipped: true,
                    omega: f64::NAN,
                    distance: f64::NAN,
                    raised: false,
                })
            }
            Err(e) => return Err(e),
        };
        let distance = resonance_distance(&pair.target, &lat, pair.omega)?;
        let d = [1.0, 0.0, 0.0];
        let raised = matches!(
            foldy_lax_solve(&pair.target, &lat, &IncidentField::PlaneWave(d), pair.omega),
            Err(Error::Resonance { .. })
        );
        Ok(ResonanceTrial { trial: t, seed, sites, magnitudes, skipped: false, omega: pair.omega.get(), distance, raised })
    })?;
    Ok(ResonanceReport { trials })
}

impl ResonanceReport {
    pub fn passes(&self) -> usize {
        self.trials.iter().filter(|t| t.pass()).count()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ExperimentKind::Resonance.as_str(),
            &[
                "record", "trial", "seed", "site_1", "site_2", "magnitude_1", "magnitude_2", "skipped", "omega",
                "distance", "raised", "pass", "passes",
            ],
        );
        for tr in &self.trials {
            t.push(vec![
                "trial".into(),
                cell(tr.trial),
                cell(tr.seed),
                cell(tr.sites[0]),
                cell(tr.sites[1]),
                fmt_f64(tr.magnitudes[0]),
                fmt_f64(tr.magnitudes[1]),
                cell(tr.skipped),
                fmt_f64(tr.omega),
                fmt_f64(tr.distance),
                cell(tr.raised),
                cell(tr.pass()),
                String::new(),
            ]);
        }
        let mut row = vec!["summary".to_string()];
        row.extend(std::iter::repeat_n(String::new(), 11));
        row.push(cell(self.passes()));
        t.push(row);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind);
        c.trials = 4;
        c.seed = 11;
        c
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn coherence_single_trial_is_reproducible() {
        let mut c = small(ExperimentKind::Coherence);
        c.trials = 1;
        let a = run(&c).unwrap().to_csv().unwrap();
        let b = run(&c).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# scatter-cs v1 mc-coherence\n"));
    }

    #[test]
    fn output_independent_of_worker_count() {
        let c = small(ExperimentKind::Coherence);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run(&c).unwrap().to_csv().unwrap());
        let b = three.install(|| run(&c).unwrap().to_csv().unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn summary_fraction_is_ratio_of_flags() {
        let c = small(ExperimentKind::Coherence);
        let r = mc_coherence(&c).unwrap();
        let pt = &r.points[0];
        let flags = pt.trials.iter().filter(|t| t.pass).count();
        assert_eq!(pt.pass_fraction(), flags as f64 / 4.0);
    }

    #[test]
    fn single_atom_born_recovery_always_succeeds() {
        let mut c = small(ExperimentKind::Recovery);
        c.side = 5;
        c.n = 6;
        c.p = 6;
        let r = mc_recovery(&c).unwrap();
        assert_eq!(r.points[0].bp_rate(), Some(1.0));
        assert_eq!(r.points[0].omp_rate(), Some(1.0));
    }

    #[test]
    fn dense_underdetermined_target_fails() {
        let mut c = small(ExperimentKind::Recovery);
        c.side = 4;
        c.n = 3;
        c.p = 3;
        c.sparsity = SparsitySpec::Fixed(vec![16]);
        let r = mc_recovery(&c).unwrap();
        assert_eq!(r.points[0].bp_rate(), Some(0.0));
    }

    #[test]
    fn exact_model_recovers_weak_strengths() {
        let mut c = small(ExperimentKind::Recovery);
        c.model = ForwardModel::Exact;
        c.p = 1;
        c.side = 6;
        c.n = 40;
        c.amplitude = AmplitudeLaw::Constant(0.01);
        let r = mc_recovery(&c).unwrap();
        assert_eq!(r.points[0].nu_rate(), Some(1.0));
        let tab = r.table();
        assert_eq!(tab.rows.len(), 5);
    }

    #[test]
    fn zero_noise_stability_is_exact_recovery() {
        let mut c = small(ExperimentKind::Stability);
        c.noise = vec![0.0];
        c.sparsity = SparsitySpec::Fixed(vec![1]);
        let r = mc_stability(&c).unwrap();
        let pt = &r.points[0];
        assert_eq!(pt.lambda, 0.0);
        assert!(pt.trials.iter().all(|t| t.x_ok() && t.nu_support_equal));
    }

    #[test]
    fn dt_k_term_halves_when_n_quadruples() {
        let mut c = small(ExperimentKind::Dt);
        c.omega = vec![5.0];
        c.trials = 2;
        let a = mc_dt(&c).unwrap();
        c.n *= 4;
        let b = mc_dt(&c).unwrap();
        assert!((a.points[0].k_term / b.points[0].k_term - 2.0).abs() < 1e-14);
        // The fitted bound reproduces the mean at the first point.
        let p = &a.points[0];
        assert!((p.bound(a.c) - p.mean_mu()).abs() < 1e-12);
    }

    #[test]
    fn dt_delta_max_column_matches_formula() {
        let c = small(ExperimentKind::Dt);
        let mut c = c;
        c.omega = vec![5.0];
        c.trials = 1;
        let r = mc_dt(&c).unwrap();
        let (l, ext, dmin) = (c.aperture, 4.0, c.standoff);
        let expect = (0.25 * (l + ext) * (l + ext) + (dmin + ext) * (dmin + ext)).sqrt();
        assert!((r.points[0].delta_max - expect).abs() < 1e-14);
    }

    #[test]
    fn reciprocity_and_resonance_small_runs() {
        let mut c = small(ExperimentKind::Reciprocity);
        c.trials = 2;
        let r = reciprocity(&c).unwrap();
        assert_eq!(r.passes(), r.counted());
        assert_eq!(r.trials.len(), 10);
        let c = small(ExperimentKind::Resonance);
        let r = resonance(&c).unwrap();
        assert_eq!(r.passes(), 4);
    }

    #[test]
    fn kind_mismatch_is_config_error() {
        let c = small(ExperimentKind::Dt);
        assert!(mc_coherence(&c).unwrap_err().is_config());
    }
}
