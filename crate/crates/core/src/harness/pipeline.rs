//! Single-instance workflow behind the `simulate`, `build-matrix`,
//! `recover` and `theory` commands.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use super::config::{ExperimentConfig, ForwardModel, SparsitySpec};
use super::theory::{theory_bounds, TheoryReport};
use crate::error::{Error, Result};
use crate::forward::{born_amplitude, foldy_lax_solve, scattering_amplitude, IncidentField};
use crate::io::Scene;
use crate::recover::{
    basis_pursuit_default, bpdn, invert_strengths, omp, stability_bounds, RecoveryResult, StrengthEstimate,
    BP_EQ_TOL_REL,
};
use crate::scene::{
    draw_far_field_2d, draw_far_field_3d, draw_target_with, rng_from_seed, Lattice, SensorSet, Target,
};
use crate::sensing::{
    build_from_sensors, build_mimo_born_dirs, build_simo_farfield_dirs, coherence, spectral_norm, MatrixKind,
    SensingMatrix,
};
use crate::specfun::Wavenumber;

/// One simulated measurement.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub scene: Scene<f64>,
    pub omega: f64,
    pub model: ForwardModel,
    /// Normalised data `Y = (4π/ω²) A`.
    pub data: Vec<Complex64>,
    /// Ground truth of `Y = ΦX`: `ν` (Born) or `νu` (exact).
    pub x_true: Vec<Complex64>,
    pub matrix: SensingMatrix<f64>,
}

fn draw_sensors<R: rand::Rng>(cfg: &ExperimentConfig, p: usize, rng: &mut R) -> Result<SensorSet<f64>> {
    Ok(if cfg.dim == 2 {
        draw_far_field_2d(p, cfg.n, &cfg.incident.planar()?, &cfg.sampling.planar()?, rng)
    } else {
        draw_far_field_3d(p, cfg.n, &cfg.incident.sphere()?, &cfg.sampling.sphere()?, rng)
    })
}

/// Draws far-field sensors and a target from `cfg.seed` and synthesises
/// data at the first configured frequency with the first sparsity.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let SparsitySpec::Fixed(sweep) = &cfg.sparsity else {
        return Err(Error::Config("simulate needs an explicit sparsity".into()));
    };
    let lat = cfg.lattice()?;
    let omega = cfg.omega[0];
    let w = Wavenumber::new(omega)?;
    let mut rng = rng_from_seed(cfg.seed);
    let p = match cfg.model {
        ForwardModel::Born => cfg.p.max(1),
        ForwardModel::Exact => 1,
    };
    let sensors = draw_sensors(cfg, p, &mut rng)?;
    let target = draw_target_with(&lat, sweep[0], cfg.amplitude, &mut rng)?;
    let inc = sensors.incident_directions()?;
    let samp = sensors.sampling_directions()?;
    let scale = 4.0 * PI / (omega * omega);
    let (data, x_true, matrix) = match cfg.model {
        ForwardModel::Born => {
            let mut y = Vec::with_capacity(inc.len() * samp.len());
            for &d in &inc {
                for &r in &samp {
                    y.push(born_amplitude(&target, &lat, w, d, r)? * scale);
                }
            }
            (y, target.nu().to_vec(), build_mimo_born_dirs(&lat, &inc, &samp, w)?)
        }
        ForwardModel::Exact => {
            let field = foldy_lax_solve(&target, &lat, &IncidentField::PlaneWave(inc[0]), w)?;
            let y = samp
                .iter()
                .map(|&r| Ok(scattering_amplitude(&target, &lat, &field, w, r)? * scale))
                .collect::<Result<Vec<_>>>()?;
            let mut x = vec![Complex64::new(0.0, 0.0); lat.len()];
            for (&j, &u) in field.sites.iter().zip(&field.u) {
                x[j] = target.nu()[j] * u;
            }
            (y, x, build_simo_farfield_dirs(&lat, &samp, w)?)
        }
    };
    Ok(Simulation {
        scene: Scene { lattice: lat, target, sensors: Some(sensors) },
        omega,
        model: cfg.model,
        data,
        x_true,
        matrix,
    })
}

/// Sensing matrix of the requested kind for a scene's sensors; `None`
/// picks near field, SIMO or MIMO from the sensor set.
pub fn scene_matrix(scene: &Scene<f64>, omega: f64, kind: Option<MatrixKind>) -> Result<SensingMatrix<f64>> {
    let sensors = scene
        .sensors
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("scene has no [sensors] section".into()))?;
    let w = Wavenumber::new(omega)?;
    match kind {
        None => build_from_sensors(&scene.lattice, sensors, w),
        Some(MatrixKind::SimoFarField) => build_simo_farfield_dirs(&scene.lattice, &sensors.sampling_directions()?, w),
        Some(MatrixKind::MimoBorn) => build_mimo_born_dirs(
            &scene.lattice,
            &sensors.incident_directions()?,
            &sensors.sampling_directions()?,
            w,
        ),
        Some(MatrixKind::DtNearField) => crate::sensing::build_dt_nearfield(&scene.lattice, sensors, w),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    Bp,
    Omp,
    /// BPDN with the given `λ`.
    Bpdn(f64),
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "bp" => Ok(Self::Bp),
            None if s == "omp" => Ok(Self::Omp),
            Some(("bpdn", l)) => l
                .parse()
                .map(Self::Bpdn)
                .map_err(|_| Error::Config(format!("`{l}` is not a valid lambda"))),
            _ => Err(Error::Config(format!("unknown solver `{s}` (bp | omp | bpdn:LAMBDA)"))),
        }
    }
}

pub fn solve(phi: &SensingMatrix<f64>, y: &[Complex64], solver: Solver) -> Result<RecoveryResult<f64>> {
    let a = &phi.entries;
    match solver {
        Solver::Bp => basis_pursuit_default(a, y),
        Solver::Omp => omp(a, y, a.rows().min(a.cols()), BP_EQ_TOL_REL),
        Solver::Bpdn(l) => bpdn(a, y, l, 1e-12),
    }
}

/// Strength inversion for a scene with a single incident plane wave.
pub fn invert_scene(scene: &Scene<f64>, omega: f64, x: &[Complex64]) -> Result<StrengthEstimate<f64>> {
    let sensors = scene
        .sensors
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("scene has no [sensors] section".into()))?;
    let inc = sensors.incident_directions()?;
    if inc.len() != 1 {
        return Err(Error::InvalidArgument("strength inversion needs exactly one incident wave".into()));
    }
    invert_strengths(x, &scene.lattice, Wavenumber::new(omega)?, &IncidentField::PlaneWave(inc[0]))
}

/// Theory report for one MIMO sensor draw from `cfg.seed`; adds the
/// stability bounds when a target and noise level are given.
pub fn theory_report(cfg: &ExperimentConfig, target: Option<(&Lattice<f64>, &Target<f64>)>, eps: f64) -> Result<TheoryReport> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    let mut rng = rng_from_seed(cfg.seed);
    let sensors = draw_sensors(cfg, cfg.p.max(1), &mut rng)?;
    let w = Wavenumber::new(cfg.omega[0])?;
    let phi = build_from_sensors(&lat, &sensors, w)?;
    let mu = coherence(&phi.entries)?;
    let norm = spectral_norm(&phi.entries)?;
    let report = theory_bounds(cfg, mu, norm)?;
    Ok(match target {
        Some((l, t)) => report.with_stability(stability_bounds(t, l, w, eps)?),
        None => report,
    })
}
