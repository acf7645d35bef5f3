//! Upper-bound sample budgets from the witness variance bounds.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::channels::ProbeEnsemble;
use crate::estimators::{ceil_count, check_accuracy};
use crate::{Error, Result};

/// Label attached to every budget: these are sufficient, not required, counts.
pub const BUDGET_LABEL: &str = "upper-bound budget";

/// The chain `‖V⁻¹‖²_F ≤ [Tr V⁻¹]² ≤ 2⁶m²cosh²(2ξ_max) ≤ 2⁶m²s⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrobeniusBound {
    /// `Tr V⁻¹ = 8 Σ cosh(2ξ_k)`.
    pub trace_inverse: f64,
    pub trace_inverse_sq: f64,
    pub cosh_bound: f64,
    pub bound: f64,
}

pub fn bound_frobenius(xi: &[f64]) -> Result<FrobeniusBound> {
    if xi.is_empty() || xi.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Domain("squeezing parameters must be nonnegative and nonempty".into()));
    }
    let m = xi.len() as f64;
    let xmax = xi.iter().copied().fold(0.0, f64::max);
    let trace_inverse = 8.0 * xi.iter().map(|x| (2.0 * x).cosh()).sum::<f64>();
    Ok(FrobeniusBound {
        trace_inverse,
        trace_inverse_sq: trace_inverse * trace_inverse,
        cosh_bound: 64.0 * m * m * (2.0 * xmax).cosh().powi(2),
        bound: 64.0 * m * m * (4.0 * xmax).exp(),
    })
}

/// `E(χ²) ≤ 2⁶ m³ s⁴ E_max ‖x_t‖²`.
pub fn chi_state_bound(m: usize, s: f64, e_max: f64, x_norm_sq: f64) -> f64 {
    64.0 * (m as f64).powi(3) * s.powi(4) * e_max * x_norm_sq
}

/// `E(X²) ≤ 2⁸ m⁴ s⁴ Γ_max` (state and channel).
pub fn x_bound(m: usize, s: f64, gamma_max: f64) -> f64 {
    256.0 * (m as f64).powi(4) * s.powi(4) * gamma_max
}

/// `E(χ⁽ᶜ⁾²) ≤ 2⁶ m⁴ s⁴ E_max^U E_max^E`.
pub fn chi_channel_bound(m: usize, s: f64, e_max_target: f64, e_max_device: f64) -> f64 {
    64.0 * (m as f64).powi(4) * s.powi(4) * e_max_target * e_max_device
}

/// `S_max = 2(1 + max|Re α| + max|Im α|)` as stated for the amplifier.
pub fn amplifier_set_bound(ensemble: &ProbeEnsemble) -> f64 {
    amplifier_set_bound_with_gain(ensemble, 1.0)
}

/// `2(1 + g max|Re α| + g max|Im α|)`, which dominates `Σ|τ_l(α)|` for any gain.
pub fn amplifier_set_bound_with_gain(ensemble: &ProbeEnsemble, gain: f64) -> f64 {
    let (re, im) = max_parts(ensemble);
    2.0 * (1.0 + gain * re + gain * im)
}

fn max_parts(ensemble: &ProbeEnsemble) -> (f64, f64) {
    ensemble.amplitudes().iter().flatten().fold((0.0, 0.0), |(r, i), a| (f64::max(r, a.re.abs()), f64::max(i, a.im.abs())))
}

/// `S′_max = 1 + 9γ²/4 + (1 + 2√2)|γ| + max|1 + 3γ Im α| + 2(max|Re α| + max|Im α|)`.
pub fn cubic_set_bound(gamma: f64, ensemble: &ProbeEnsemble) -> f64 {
    let (re, im) = max_parts(ensemble);
    let lin = ensemble.amplitudes().iter().flatten().map(|a| (1.0 + 3.0 * gamma * a.im).abs()).fold(0.0, f64::max);
    1.0 + 9.0 * gamma * gamma / 4.0 + (1.0 + 2.0 * SQRT_2) * gamma.abs() + lin + 2.0 * (re + im)
}

/// Budget for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorBudget {
    pub estimator: String,
    pub second_moment_bound: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub batches: usize,
    pub per_batch: usize,
    pub n: usize,
    /// `B · 34 · bound / ε²` before rounding the batch size.
    pub n_unrounded: f64,
}

impl EstimatorBudget {
    fn new(name: &str, bound: f64, epsilon: f64, delta: f64) -> Self {
        let batches = ceil_count(2.0 * (2.0 / delta).ln());
        let raw = 34.0 * bound / (epsilon * epsilon);
        let per_batch = ceil_count(raw);
        Self {
            estimator: name.into(),
            second_moment_bound: bound,
            epsilon,
            delta,
            batches,
            per_batch,
            n: batches * per_batch,
            n_unrounded: batches as f64 * raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityBudget {
    pub label: &'static str,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max_prep: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_prime_max: Option<f64>,
    pub estimators: Vec<EstimatorBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_chi: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    pub n_total: usize,
}

impl ComplexityBudget {
    fn base(epsilon: f64, delta: f64, estimators: Vec<EstimatorBudget>) -> Self {
        let n_total = estimators.iter().map(|e| e.n).sum();
        Self {
            label: BUDGET_LABEL,
            epsilon,
            delta,
            m: None,
            s: None,
            e_max_prep: None,
            e_max_target: None,
            gamma_max: None,
            r_max: None,
            q_max: None,
            s_max: None,
            s_prime_max: None,
            estimators,
            n_chi: None,
            n_x: None,
            n_total,
        }
    }

    pub fn estimator(&self, name: &str) -> Option<&EstimatorBudget> {
        self.estimators.iter().find(|e| e.estimator == name)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be nonnegative and finite, got {v}")));
    }
    Ok(())
}

fn check_common(epsilon: f64, delta: f64, m: usize, s: f64) -> Result<()> {
    check_accuracy(epsilon, delta)?;
    if m == 0 {
        return Err(Error::Domain("mode count must be positive".into()));
    }
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s = exp(ξ_max) must be ≥ 1, got {s}")));
    }
    Ok(())
}

/// Two-estimator budget: `χ` at `(ε, Δ/2)`, `X` at `(2ε, Δ/2)`.
fn two_estimators(epsilon: f64, delta: f64, chi: (&str, f64), x: (&str, f64)) -> Vec<EstimatorBudget> {
    vec![
        EstimatorBudget::new(chi.0, chi.1, epsilon, delta / 2.0),
        EstimatorBudget::new(x.0, x.1, 2.0 * epsilon, delta / 2.0),
    ]
}

pub fn plan_state(
    epsilon: f64,
    delta: f64,
    m: usize,
    s_t: f64,
    e_max_p: f64,
    gamma_max: f64,
    x_t_norm_sq: f64,
) -> Result<ComplexityBudget> {
    check_common(epsilon, delta, m, s_t)?;
    positive("E_max", e_max_p)?;
    positive("Γ_max", gamma_max)?;
    nonnegative("‖x_t‖²", x_t_norm_sq)?;
    let est = two_estimators(
        epsilon,
        delta,
        ("chi", chi_state_bound(m, s_t, e_max_p, x_t_norm_sq)),
        ("X", x_bound(m, s_t, gamma_max)),
    );
    let mut b = ComplexityBudget::base(epsilon, delta, est);
    b.m = Some(m);
    b.s = Some(s_t);
    b.e_max_prep = Some(e_max_p);
    b.gamma_max = Some(gamma_max);
    b.n_chi = Some(b.estimators[0].n);
    b.n_x = Some(b.estimators[1].n);
    Ok(b)
}

pub fn plan_channel(
    epsilon: f64,
    delta: f64,
    m: usize,
    s_u: f64,
    e_max_u: f64,
    e_max_e: f64,
    gamma_max: f64,
) -> Result<ComplexityBudget> {
    check_common(epsilon, delta, m, s_u)?;
    positive("E_max^U", e_max_u)?;
    positive("E_max^E", e_max_e)?;
    positive("Γ_max", gamma_max)?;
    let est = two_estimators(
        epsilon,
        delta,
        ("chi_c", chi_channel_bound(m, s_u, e_max_u, e_max_e)),
        ("X_c", x_bound(m, s_u, gamma_max)),
    );
    let mut b = ComplexityBudget::base(epsilon, delta, est);
    b.m = Some(m);
    b.s = Some(s_u);
    b.e_max_target = Some(e_max_u);
    b.e_max_prep = Some(e_max_e);
    b.gamma_max = Some(gamma_max);
    b.n_chi = Some(b.estimators[0].n);
    b.n_x = Some(b.estimators[1].n);
    Ok(b)
}

/// `N = B · ⌈34 S_max² r_max / ε²⌉`.
pub fn plan_amplifier(epsilon: f64, delta: f64, s_max: f64, r_max: f64) -> Result<ComplexityBudget> {
    check_accuracy(epsilon, delta)?;
    positive("S_max", s_max)?;
    positive("r_max", r_max)?;
    let est = vec![EstimatorBudget::new("zeta", s_max * s_max * r_max, epsilon, delta)];
    let mut b = ComplexityBudget::base(epsilon, delta, est);
    b.s_max = Some(s_max);
    b.r_max = Some(r_max);
    Ok(b)
}

/// `N = B · ⌈34 S′_max² q_max / ε²⌉`.
pub fn plan_cubic(epsilon: f64, delta: f64, gamma: f64, ensemble: &ProbeEnsemble, q_max: f64) -> Result<ComplexityBudget> {
    check_accuracy(epsilon, delta)?;
    positive("q_max", q_max)?;
    let sp = cubic_set_bound(gamma, ensemble);
    let est = vec![EstimatorBudget::new("Z", sp * sp * q_max, epsilon, delta)];
    let mut b = ComplexityBudget::base(epsilon, delta, est);
    b.s_prime_max = Some(sp);
    b.q_max = Some(q_max);
    Ok(b)
}
