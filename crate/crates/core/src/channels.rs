//! Simulated devices under test and probe ensembles.

use rand::Rng;

use crate::gaussian::{apply_channel, apply_unitary, coherent_state, GaussianChannelMap, GaussianState, GaussianUnitary};
use crate::wavefn::{apply_cubic_phase, GridSpec, GridWavefunction};
use crate::{Error, Result, C64, VACUUM_VARIANCE};

/// Cubic-phase device: input imperfections, then `exp(iγ_actual q³)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicDevice {
    pub gamma: f64,
    /// Added to every input amplitude before the gate.
    pub input_displacement: C64,
    /// Position squeezing `r` of the input, `Var(q) = e^{−2r}/4`.
    pub input_squeezing: f64,
    pub grid: GridSpec,
}

/// The channel being benchmarked.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceModel {
    IdealGaussian { target: GaussianUnitary },
    /// Target followed by pure loss on every mode.
    LossyGaussian { target: GaussianUnitary, eta: f64 },
    /// Target followed by additive thermal noise `n̄/2` per quadrature.
    ThermalGaussian { target: GaussianUnitary, nbar: f64 },
    MiscalibratedGaussian { actual: GaussianUnitary },
    Amplifier { gain: f64, added_noise: f64 },
    CubicPhase(CubicDevice),
}

impl DeviceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeviceModel::LossyGaussian { eta, .. } if !(0.0..=1.0).contains(eta) => {
                Err(Error::Config(format!("loss η = {eta} outside [0, 1]")))
            }
            DeviceModel::ThermalGaussian { nbar, .. } if !(*nbar >= 0.0) => {
                Err(Error::Config(format!("thermal n̄ = {nbar} must be ≥ 0")))
            }
            DeviceModel::Amplifier { gain, added_noise } if !(*gain > 1.0) || !(*added_noise >= 0.0) => Err(
                Error::Config(format!("amplifier needs g > 1 and n_add ≥ 0 (got g = {gain}, n_add = {added_noise})")),
            ),
            DeviceModel::CubicPhase(d) => {
                if !d.gamma.is_finite() || !d.input_squeezing.is_finite() {
                    return Err(Error::Config("cubic device parameters must be finite".into()));
                }
                d.grid.validate().map_err(|e| Error::Config(e.to_string()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, DeviceModel::CubicPhase(_))
    }
}

/// Output of a Gaussian device for coherent input `alpha`.
pub fn probe_gaussian(dev: &DeviceModel, alpha: &[C64]) -> Result<GaussianState> {
    let input = coherent_state(alpha);
    let through = |u: &GaussianUnitary| apply_unitary(u, &input);
    match dev {
        DeviceModel::IdealGaussian { target } => through(target),
        DeviceModel::LossyGaussian { target, eta } => {
            apply_channel(&GaussianChannelMap::pure_loss(alpha.len(), *eta)?, &through(target)?)
        }
        DeviceModel::ThermalGaussian { target, nbar } => {
            apply_channel(&GaussianChannelMap::thermal_noise(alpha.len(), *nbar)?, &through(target)?)
        }
        DeviceModel::MiscalibratedGaussian { actual } => through(actual),
        DeviceModel::Amplifier { gain, added_noise } => {
            let m = alpha.len();
            let v = crate::Mat::identity(2 * m, 2 * m) * (VACUUM_VARIANCE + added_noise / 2.0);
            GaussianState::new(input.mean() * *gain, v)
        }
        DeviceModel::CubicPhase(_) => Err(Error::Domain(
            "cubic-phase device has non-Gaussian output; use probe_cubic".into(),
        )),
    }
}

/// Output wavefunction of a cubic-phase device for coherent input `alpha`.
pub fn probe_cubic(dev: &DeviceModel, alpha: C64) -> Result<GridWavefunction> {
    let DeviceModel::CubicPhase(d) = dev else {
        return Err(Error::Domain("probe_cubic needs a cubic-phase device".into()));
    };
    let input = GridWavefunction::squeezed_coherent(d.grid, alpha + d.input_displacement, d.input_squeezing)?;
    Ok(apply_cubic_phase(&input, d.gamma))
}

/// Coherent probe states with prior weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEnsemble {
    amplitudes: Vec<Vec<C64>>,
    priors: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ProbeEnsemble {
    pub fn new(amplitudes: Vec<Vec<C64>>, priors: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Config("probe ensemble is empty".into()));
        }
        if amplitudes.len() != priors.len() {
            return Err(Error::Config("ensemble amplitudes and priors differ in length".into()));
        }
        let m = amplitudes[0].len();
        if m == 0 || amplitudes.iter().any(|a| a.len() != m) {
            return Err(Error::Config("ensemble amplitudes must share a nonzero mode count".into()));
        }
        if priors.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Config("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("priors sum to {total}, not 1")));
        }
        let cumulative = priors
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self { amplitudes, priors, cumulative })
    }

    /// Equal priors; the last entry absorbs rounding so the sum is exactly 1.
    pub fn uniform(amplitudes: Vec<Vec<C64>>) -> Result<Self> {
        let n = amplitudes.len();
        if n == 0 {
            return Err(Error::Config("probe ensemble is empty".into()));
        }
        let mut p = vec![1.0 / n as f64; n];
        p[n - 1] = 1.0 - p[..n - 1].iter().sum::<f64>();
        Self::new(amplitudes, p)
    }

    /// Single coherent probe with prior 1.
    pub fn single(alpha: Vec<C64>) -> Result<Self> {
        Self::new(vec![alpha], vec![1.0])
    }

    pub fn modes(&self) -> usize {
        self.amplitudes[0].len()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[Vec<C64>] {
        &self.amplitudes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[C64], f64)> {
        self.amplitudes.iter().map(|a| a.as_slice()).zip(self.priors.iter().copied())
    }

    /// `Σ 𝒫(α) ‖α‖²`.
    pub fn mean_energy(&self) -> f64 {
        self.iter().map(|(a, p)| p * a.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    /// Draws an index according to the priors.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
    }
}
