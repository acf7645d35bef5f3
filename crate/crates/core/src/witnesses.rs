//! Closed-form witness evaluators and the homodyne observable dictionaries.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::channels::ProbeEnsemble;
use crate::gaussian::{inverse_spd, GaussianState, GaussianUnitary, OverlapTraces};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    GaussianState,
    GaussianChannel,
    Amplifier,
    Cubic,
}

/// A witness value with the terms that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessValue {
    pub value: f64,
    pub scenario: Scenario,
    pub components: BTreeMap<String, f64>,
}

impl WitnessValue {
    fn new(value: f64, scenario: Scenario, components: &[(&str, f64)]) -> Self {
        let components = components.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self { value, scenario, components }
    }
}

/// `1 + m/2 − ¼(t1 − 2 t2 + t3)`.
pub fn witness_gaussian_state(target: &GaussianState, traces: OverlapTraces) -> Result<WitnessValue> {
    if !target.is_pure() {
        return Err(Error::NotPure("state witness needs a pure target".into()));
    }
    let m = target.modes() as f64;
    let OverlapTraces { t1, t2, t3 } = traces;
    let value = 1.0 + m / 2.0 - 0.25 * (t1 - 2.0 * t2 + t3);
    Ok(WitnessValue::new(value, Scenario::GaussianState, &[("t1", t1), ("t2", t2), ("t3", t3)]))
}

/// `Σ 𝒫(α) Tr[V_U⁻¹ x_U x_Uᵀ]`, known exactly from the target.
pub fn channel_known_term(target: &GaussianUnitary, ensemble: &ProbeEnsemble) -> Result<f64> {
    check_modes(target.modes(), ensemble)?;
    let vinv = inverse_spd(&target.output_covariance())?;
    Ok(ensemble
        .iter()
        .map(|(alpha, p)| {
            let xu = target.output_mean(alpha);
            p * xu.dot(&(&vinv * &xu))
        })
        .sum())
}

fn check_modes(m: usize, ensemble: &ProbeEnsemble) -> Result<()> {
    if ensemble.modes() != m {
        return Err(Error::Dimension(format!(
            "ensemble has {} modes, target has {m}",
            ensemble.modes()
        )));
    }
    Ok(())
}

/// `1 + m/2 − ¼E(X⁽ᶜ⁾) − ¼Σ𝒫 Tr[V_U⁻¹x_U x_Uᵀ] + ½E(χ⁽ᶜ⁾)`.
pub fn witness_gaussian_channel(
    target: &GaussianUnitary,
    ensemble: &ProbeEnsemble,
    e_x: f64,
    e_chi: f64,
) -> Result<WitnessValue> {
    let known = channel_known_term(target, ensemble)?;
    let m = target.modes() as f64;
    let value = 1.0 + m / 2.0 - 0.25 * e_x - 0.25 * known + 0.5 * e_chi;
    Ok(WitnessValue::new(
        value,
        Scenario::GaussianChannel,
        &[("e_x", e_x), ("e_chi", e_chi), ("target_mean_term", known)],
    ))
}

fn require_gain(g: f64) -> Result<()> {
    if !(g > 1.0) {
        return Err(Error::Domain(format!("amplifier gain must exceed 1, got {g}")));
    }
    Ok(())
}

fn require_single_mode(ensemble: &ProbeEnsemble) -> Result<()> {
    if ensemble.modes() != 1 {
        return Err(Error::Dimension("this witness is single-mode".into()));
    }
    Ok(())
}

/// `3/2 − g² Σ𝒫|α|² − E(ζ)`.
pub fn witness_amplifier(g: f64, ensemble: &ProbeEnsemble, e_zeta: f64) -> Result<WitnessValue> {
    require_gain(g)?;
    require_single_mode(ensemble)?;
    let energy = ensemble.mean_energy();
    let value = 1.5 - g * g * energy - e_zeta;
    Ok(WitnessValue::new(value, Scenario::Amplifier, &[("e_zeta", e_zeta), ("mean_energy", energy)]))
}

/// `3/2 − Σ𝒫|α|² − E(Z)`.
pub fn witness_cubic(gamma: f64, ensemble: &ProbeEnsemble, e_z: f64) -> Result<WitnessValue> {
    require_single_mode(ensemble)?;
    let energy = ensemble.mean_energy();
    let value = 1.5 - energy - e_z;
    Ok(WitnessValue::new(
        value,
        Scenario::Cubic,
        &[("e_z", e_z), ("mean_energy", energy), ("gamma", gamma)],
    ))
}

/// `(q cosθ + p sinθ)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureObservable {
    pub angle: f64,
    pub power: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DictionaryKind {
    Amplifier { gain: f64 },
    Cubic { gamma: f64 },
}

/// Observables `{ν_k}` / `{μ_k}` with coefficients `{τ_k}` / `{κ_k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableDictionary {
    pub observables: Vec<QuadratureObservable>,
    pub coefficients: Vec<f64>,
}

/// Distinct homodyne angles used by the dictionaries.
pub const CUBIC_ANGLES: [f64; 4] = [0.0, FRAC_PI_4, -FRAC_PI_4, FRAC_PI_2];

pub fn build_dictionary(kind: DictionaryKind, alpha: C64) -> ObservableDictionary {
    let obs = |angle, power| QuadratureObservable { angle, power };
    match kind {
        DictionaryKind::Amplifier { gain } => ObservableDictionary {
            observables: vec![obs(0.0, 2), obs(FRAC_PI_2, 2), obs(0.0, 1), obs(FRAC_PI_2, 1)],
            coefficients: vec![1.0, 1.0, -2.0 * gain * alpha.re, -2.0 * gain * alpha.im],
        },
        DictionaryKind::Cubic { gamma } => ObservableDictionary {
            observables: vec![
                obs(0.0, 4),
                obs(FRAC_PI_4, 3),
                obs(-FRAC_PI_4, 3),
                obs(FRAC_PI_2, 3),
                obs(0.0, 2),
                obs(FRAC_PI_2, 2),
                obs(0.0, 1),
                obs(FRAC_PI_2, 1),
            ],
            coefficients: vec![
                9.0 * gamma * gamma / 4.0,
                -SQRT_2 * gamma,
                SQRT_2 * gamma,
                gamma,
                1.0 + 3.0 * gamma * alpha.im,
                1.0,
                -2.0 * alpha.re,
                -2.0 * alpha.im,
            ],
        },
    }
}

impl ObservableDictionary {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    /// `p(k|α) = |c_k| / Σ|c_l|`.
    pub fn probabilities(&self) -> Vec<f64> {
        let s = self.abs_sum();
        self.coefficients.iter().map(|c| if s > 0.0 { c.abs() / s } else { 0.0 }).collect()
    }

    /// `Σ_k c_k ⟨obs_k⟩` given a moment oracle.
    pub fn expectation(&self, mut moment: impl FnMut(QuadratureObservable) -> f64) -> f64 {
        self.observables.iter().zip(&self.coefficients).map(|(o, c)| c * moment(*o)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{coherent_state, exact_overlap_traces, overlap_pure};
    use crate::Mat;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn state_witness_examples() {
        let vac = GaussianState::vacuum(1);
        let w = witness_gaussian_state(&vac, OverlapTraces { t1: 2.0, t2: 0.0, t3: 0.0 }).unwrap();
        assert_eq!(w.value, 1.0);
        let coh = coherent_state(&[c(0.5, 0.0)]);
        let w = witness_gaussian_state(&vac, exact_overlap_traces(&vac, &coh).unwrap()).unwrap();
        assert!((w.value - 0.75).abs() < 1e-12);
        assert!(overlap_pure(&vac, &coh).unwrap() >= w.value);
        let th = GaussianState::thermal(1, 0.3).unwrap();
        let w = witness_gaussian_state(&vac, exact_overlap_traces(&vac, &th).unwrap()).unwrap();
        assert!((w.value - 0.7).abs() < 1e-12);
        assert!(overlap_pure(&vac, &th).unwrap() >= w.value);
    }

    #[test]
    fn channel_witness_examples() {
        let id = GaussianUnitary::identity(1);
        let e0 = ProbeEnsemble::single(vec![c(0.0, 0.0)]).unwrap();
        assert_eq!(witness_gaussian_channel(&id, &e0, 2.0, 0.0).unwrap().value, 1.0);
        // Loss η = 0.64 on α = 1: Γ_E = diag(1/4 + 0.64, 1/4), x_E = (0.8, 0).
        let e1 = ProbeEnsemble::single(vec![c(1.0, 0.0)]).unwrap();
        let (ex, echi) = (4.0 * (0.5 + 0.64), 4.0 * 0.8);
        assert!((witness_gaussian_channel(&id, &e1, ex, echi).unwrap().value - 0.96).abs() < 1e-12);
        let e2 = ProbeEnsemble::new(vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]], vec![0.5, 0.5]).unwrap();
        let w = witness_gaussian_channel(&id, &e2, 0.5 * 2.0 + 0.5 * ex, 0.5 * echi).unwrap();
        assert!((w.value - 0.98).abs() < 1e-12);
    }

    #[test]
    fn amplifier_witness_examples() {
        let alpha = c(1.0, 1.0);
        let e = ProbeEnsemble::single(vec![alpha]).unwrap();
        let dict = build_dictionary(DictionaryKind::Amplifier { gain: 2.0 }, alpha);
        assert_eq!(dict.coefficients, vec![1.0, 1.0, -4.0, -4.0]);
        assert_eq!(dict.abs_sum(), 10.0);
        for (nadd, expect) in [(0.0, 1.0), (0.5, 0.5)] {
            let mut out = coherent_state(&[alpha * 2.0]);
            out = GaussianState::new(out.mean().clone(), Mat::identity(2, 2) * (0.25 + nadd / 2.0)).unwrap();
            let ez = dict.expectation(|o| out.quadrature_moment(0, o.angle, o.power));
            if nadd == 0.0 {
                assert!((ez + 7.5).abs() < 1e-12);
            }
            assert!((witness_amplifier(2.0, &e, ez).unwrap().value - expect).abs() < 1e-12);
        }
        // Unit-gain device.
        let out = coherent_state(&[alpha]);
        let ez = dict.expectation(|o| out.quadrature_moment(0, o.angle, o.power));
        assert!((witness_amplifier(2.0, &e, ez).unwrap().value + 1.0).abs() < 1e-12);
        assert!(matches!(witness_amplifier(1.0, &e, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cubic_dictionary_examples() {
        let d = build_dictionary(DictionaryKind::Cubic { gamma: 0.1 }, c(0.0, 0.0));
        let expect = [0.0225, -0.141421, 0.141421, 0.1, 1.0, 1.0, 0.0, 0.0];
        for (a, b) in d.coefficients.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((d.abs_sum() - 2.405343).abs() < 1e-6);
        let d0 = build_dictionary(DictionaryKind::Cubic { gamma: 0.0 }, c(0.4, -0.2));
        assert_eq!(&d0.coefficients[..4], &[0.0, -0.0, 0.0, 0.0]);
        assert_eq!(&d0.coefficients[4..], &[1.0, 1.0, -0.8, 0.4]);
        // γ = 0 on a coherent device: the witness is the coherent-state witness.
        let e = ProbeEnsemble::single(vec![c(0.4, -0.2)]).unwrap();
        let out = coherent_state(&[c(0.4, -0.2)]);
        let ez = d0.expectation(|o| out.quadrature_moment(0, o.angle, o.power));
        assert!((witness_cubic(0.0, &e, ez).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_mismatch_closed_form() {
        // γ_actual = 0 (vacuum output) against γ = 0.1: 1 − 27γ²/64.
        let gamma: f64 = 0.1;
        let e = ProbeEnsemble::single(vec![c(0.0, 0.0)]).unwrap();
        let vac = GaussianState::vacuum(1);
        let d = build_dictionary(DictionaryKind::Cubic { gamma }, c(0.0, 0.0));
        let ez = d.expectation(|o| vac.quadrature_moment(0, o.angle, o.power));
        let w = witness_cubic(gamma, &e, ez).unwrap().value;
        assert!((w - (1.0 - 27.0 * gamma * gamma / 64.0)).abs() < 1e-12);
    }

    #[test]
    fn ensemble_linearity() {
        let gamma = 0.1;
        let alphas = [c(0.0, 0.0), c(0.3, 0.1)];
        let per: Vec<f64> = alphas
            .iter()
            .map(|&a| {
                let out = coherent_state(&[a]);
                let e = ProbeEnsemble::single(vec![a]).unwrap();
                let d = build_dictionary(DictionaryKind::Cubic { gamma }, a);
                witness_cubic(gamma, &e, d.expectation(|o| out.quadrature_moment(0, o.angle, o.power))).unwrap().value
            })
            .collect();
        let e = ProbeEnsemble::new(alphas.iter().map(|&a| vec![a]).collect(), vec![0.3, 0.7]).unwrap();
        let ez: f64 = alphas
            .iter()
            .zip([0.3, 0.7])
            .map(|(&a, p)| {
                let out = coherent_state(&[a]);
                p * build_dictionary(DictionaryKind::Cubic { gamma }, a)
                    .expectation(|o| out.quadrature_moment(0, o.angle, o.power))
            })
            .sum();
        let mixed = witness_cubic(gamma, &e, ez).unwrap().value;
        assert!((mixed - (0.3 * per[0] + 0.7 * per[1])).abs() < 1e-12);
    }
}
