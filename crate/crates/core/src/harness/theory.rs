//! Closed-form recoverability bounds evaluated for a configuration.

use std::f64::consts::E;

use super::config::{ExperimentConfig, SparsitySpec};
use super::table::{fmt_f64, fmt_opt, Table};
use crate::error::Result;
use crate::quad::QuadOptions;
use crate::recover::StabilityReport;
use crate::sensing::{chi_planar, chi_sphere, coherence_bound_prediction, k_from_delta};
use crate::specfun::Wavenumber;

/// Absolute quadrature tolerance for the χ measurements.
pub const CHI_ABS_TOL: f64 = 1e-10;

/// Conditions that depend on the target sparsity `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityCheck {
    pub s: usize,
    /// `s ≤ ½(1 + 1/μ)` with the measured `μ`.
    pub spark3: bool,
    /// `s < (8 ln(m/ε))⁻¹ (χⁱ + √2K/√p)⁻² (χˢ + √2K/√n)⁻²`.
    pub spark: bool,
    /// `μ²s ≤ (8 ln(m/τ))⁻¹`.
    pub m_condition: bool,
    /// `q = (ln m − ln ε)/(72√e ln s)`; absent for `s = 1`, where it is `+∞`.
    pub q: Option<f64>,
    /// Left side of `3√(q ln s / (2 ln(m/τ))) + s‖Φ‖²/(mρ) ≤ 1/(4e^{1/4})`.
    pub op_lhs: Option<f64>,
    pub op_condition: bool,
    /// `1 − 2τ − s^{−q}`, the target-ensemble factor of the success probability.
    pub target_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryReport {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub omega: f64,
    pub delta: f64,
    pub tau: f64,
    pub epsilon: f64,
    /// `K = √(2 ln(8m/δ))`.
    pub k: f64,
    /// `m ≤ (δ/8) e^{K²/2}`.
    pub k_condition: bool,
    pub chi_i: f64,
    pub chi_s: f64,
    pub measured_mu: f64,
    pub measured_norm: f64,
    /// `(χⁱ + √2K/√p)(χˢ + √2K/√n)`.
    pub mu_bound: f64,
    /// `½(1 + 1/μ)` with the measured coherence.
    pub spark3: f64,
    /// `½ + ½ (mu_bound)⁻¹`.
    pub spark4: f64,
    /// `(8 ln(m/ε))⁻¹ (mu_bound)⁻²`.
    pub spark: f64,
    /// `√(np)/(4K²)`.
    pub hf: f64,
    /// `(1 − δ)²`.
    pub coherence_probability: f64,
    pub spectral_bound: f64,
    pub spectral_holds: bool,
    /// `√((np − 1)/m)`; the probability of the norm bound is
    /// `(1 − c₁·base)^exponent` for an unspecified constant `c₁`.
    pub norm_probability_base: f64,
    /// `n(n−1)p(p−1)`, or `n(n−1)` for a single incident wave.
    pub norm_probability_exponent: u64,
    pub checks: Vec<SparsityCheck>,
    pub stability: Option<StabilityReport<f64>>,
}

/// Evaluates the coherence, sparsity and spectral-norm bounds for `cfg`
/// at its first frequency, against measured `μ(Φ)` and `‖Φ‖₂`.
pub fn theory_bounds(cfg: &ExperimentConfig, measured_mu: f64, measured_norm: f64) -> Result<TheoryReport> {
    let omega = cfg.omega[0];
    let (chi_i, chi_s) = measure_chi(cfg, omega)?;
    Ok(theory_from_chi(cfg, chi_i, chi_s, measured_mu, measured_norm))
}

/// χⁱ and χˢ for the configured densities at frequency `omega`.
pub fn measure_chi(cfg: &ExperimentConfig, omega: f64) -> Result<(f64, f64)> {
    let lat = cfg.lattice()?;
    let w = Wavenumber::new(omega)?;
    let opts = QuadOptions::abs(CHI_ABS_TOL);
    let chi = |spec: &super::config::DensitySpec| -> Result<f64> {
        if cfg.dim == 2 {
            chi_planar(&lat, &spec.planar()?, w, opts)
        } else {
            chi_sphere(&lat, &spec.sphere()?, w, opts)
        }
    };
    let chi_i = chi(&cfg.incident)?;
    let chi_s = if cfg.sampling == cfg.incident { chi_i } else { chi(&cfg.sampling)? };
    Ok((chi_i, chi_s))
}

/// [`theory_bounds`] with χ supplied; pure arithmetic.
pub fn theory_from_chi(cfg: &ExperimentConfig, chi_i: f64, chi_s: f64, measured_mu: f64, measured_norm: f64) -> TheoryReport {
    let m = cfg.m();
    let (n, p) = (cfg.n, cfg.p.max(1));
    let mf = m as f64;
    let k = k_from_delta(m, cfg.delta);
    let mu_bound = coherence_bound_prediction(chi_i, chi_s, k, n, p);
    let rows = (n * p) as f64;
    let log_tau = (mf / cfg.tau).ln();
    let log_eps = (mf / cfg.epsilon).ln();
    let spark3 = 0.5 * (1.0 + 1.0 / measured_mu);
    let spark = 1.0 / (8.0 * log_eps * mu_bound * mu_bound);
    let rhs_op = 1.0 / (4.0 * E.powf(0.25));
    let sweep: Vec<usize> = match &cfg.sparsity {
        SparsitySpec::Fixed(v) => v.clone(),
        SparsitySpec::Spark => vec![(spark3.floor() as usize).clamp(1, m)],
    };
    let checks = sweep
        .into_iter()
        .map(|s| {
            let sf = s as f64;
            let q = (s > 1).then(|| log_eps / (72.0 * E.sqrt() * sf.ln()));
            let op_lhs = q.map(|q| {
                3.0 * (q * sf.ln() / (2.0 * log_tau)).sqrt() + sf * measured_norm * measured_norm / (mf * rows)
            });
            SparsityCheck {
                s,
                spark3: sf <= spark3,
                spark: sf < spark,
                m_condition: measured_mu * measured_mu * sf <= 1.0 / (8.0 * log_tau),
                q,
                op_lhs,
                op_condition: op_lhs.is_some_and(|l| l <= rhs_op),
                target_factor: q.map(|q| 1.0 - 2.0 * cfg.tau - sf.powf(-q)),
            }
        })
        .collect();
    let (base, exponent) = if p >= 2 {
        (((rows - 1.0) / mf).sqrt(), (n * (n - 1) * p * (p - 1)) as u64)
    } else {
        ((((n - 1) as f64) / mf).sqrt(), (n * (n - 1)) as u64)
    };
    TheoryReport {
        m,
        n,
        p,
        omega: cfg.omega[0],
        delta: cfg.delta,
        tau: cfg.tau,
        epsilon: cfg.epsilon,
        k,
        k_condition: mf <= cfg.delta / 8.0 * (k * k / 2.0).exp() * (1.0 + 1e-12),
        chi_i,
        chi_s,
        measured_mu,
        measured_norm,
        mu_bound,
        spark3,
        spark4: 0.5 + 0.5 / mu_bound,
        spark,
        hf: rows.sqrt() / (4.0 * k * k),
        coherence_probability: (1.0 - cfg.delta).powi(2),
        spectral_bound: 2.0 * mf,
        spectral_holds: measured_norm * measured_norm <= 2.0 * mf,
        norm_probability_base: base,
        norm_probability_exponent: exponent,
        checks,
        stability: None,
    }
}

impl TheoryReport {
    pub fn with_stability(mut self, report: StabilityReport<f64>) -> Self {
        self.stability = Some(report);
        self
    }

    /// Two-column `quantity,value` table.
    pub fn table(&self) -> Table {
        let mut t = Table::new("theory", &["quantity", "value"]);
        let mut put = |k: &str, v: String| t.push(vec![k.to_string(), v]);
        put("m", self.m.to_string());
        put("n", self.n.to_string());
        put("p", self.p.to_string());
        put("omega", fmt_f64(self.omega));
        put("delta", fmt_f64(self.delta));
        put("tau", fmt_f64(self.tau));
        put("epsilon", fmt_f64(self.epsilon));
        put("K", fmt_f64(self.k));
        put("K_condition", self.k_condition.to_string());
        put("chi_i", fmt_f64(self.chi_i));
        put("chi_s", fmt_f64(self.chi_s));
        put("measured_mu", fmt_f64(self.measured_mu));
        put("measured_norm", fmt_f64(self.measured_norm));
        put("mu_bound", fmt_f64(self.mu_bound));
        put("spark3_sparsity", fmt_f64(self.spark3));
        put("spark4_sparsity", fmt_f64(self.spark4));
        put("spark_sparsity", fmt_f64(self.spark));
        put("hf_sparsity", fmt_f64(self.hf));
        put("coherence_probability", fmt_f64(self.coherence_probability));
        put("spectral_bound", fmt_f64(self.spectral_bound));
        put("spectral_holds", self.spectral_holds.to_string());
        put(
            "norm_probability",
            format!(
                "(1 - c1*{})^{} (c1 unspecified)",
                fmt_f64(self.norm_probability_base),
                self.norm_probability_exponent
            ),
        );
        for c in &self.checks {
            let s = c.s;
            put(&format!("s={s}:spark3"), c.spark3.to_string());
            put(&format!("s={s}:spark"), c.spark.to_string());
            put(&format!("s={s}:M"), c.m_condition.to_string());
            put(&format!("s={s}:q"), c.q.map_or("inf".into(), fmt_f64));
            put(&format!("s={s}:op_lhs"), fmt_opt(c.op_lhs));
            put(&format!("s={s}:op_condition"), c.op_condition.to_string());
            put(&format!("s={s}:target_factor"), fmt_opt(c.target_factor));
        }
        if let Some(st) = &self.stability {
            put("stability:omega2_GV", fmt_f64(st.gv));
            put("stability:b0", fmt_opt(st.b0));
            put("stability:cond_green", st.cond_green.to_string());
            put("stability:cond_strength", st.cond_strength.to_string());
            put("stability:x_error_bound", fmt_f64(st.x_error_bound));
            put("stability:strength_error_bound", fmt_opt(st.strength_error_bound));
        }
        t
    }
}
