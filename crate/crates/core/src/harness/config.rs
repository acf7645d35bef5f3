//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{CubicDevice, DeviceModel, ProbeEnsemble};
use crate::gaussian::GaussianUnitary;
use crate::symplectic::SymplecticMatrix;
use crate::wavefn::{GridSpec, DEFAULT_CUTOFF};
use crate::witnesses::Scenario;
use crate::{Error, Mat, Result, Vector, C64};

pub const DEFAULT_PILOT_SIZE: usize = 10_000;
pub const DEFAULT_MAX_SHOTS: u64 = 1_000_000_000;

/// How the per-batch sample size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Twice the mean of `Y²` over a pilot run.
    #[default]
    Pilot,
    /// The closed-form second-moment bounds.
    Theorem,
}

/// A single gate; modes are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSpec {
    Squeezer { mode: usize, xi: f64 },
    Rotation { mode: usize, theta: f64 },
    Beamsplitter { modes: [usize; 2], theta: f64 },
    TwoModeSqueezer { modes: [usize; 2], r: f64 },
    Displacement { mode: usize, alpha: [f64; 2] },
}

/// Gaussian unitary: optional literal `(S, d)` followed by `gates` in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Row-major symplectic matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symplectic: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gates: Vec<GateSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceSpec {
    IdealGaussian,
    LossyGaussian { eta: f64 },
    ThermalGaussian { nbar: f64 },
    MiscalibratedGaussian { actual: TargetSpec },
    Amplifier {
        gain: f64,
        #[serde(default)]
        added_noise: f64,
    },
    CubicPhase {
        gamma: f64,
        #[serde(default)]
        input_displacement: [f64; 2],
        #[serde(default)]
        input_squeezing: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// One list of `[re, im]` pairs per probe, one pair per mode.
    pub amplitudes: Vec<Vec<[f64; 2]>>,
    /// Defaults to uniform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
}

/// Assumed bounds that replace values computed from the simulated device.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_max_prep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_max_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
}

impl BoundOverrides {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

fn default_pilot() -> usize {
    DEFAULT_PILOT_SIZE
}

fn default_max_shots() -> u64 {
    DEFAULT_MAX_SHOTS
}

fn is_default_pilot(n: &usize) -> bool {
    *n == DEFAULT_PILOT_SIZE
}

fn is_default_max_shots(n: &u64) -> bool {
    *n == DEFAULT_MAX_SHOTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Mode count; inferred from the target or ensemble when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    /// Target amplifier gain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Target cubic-phase strength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub device: DeviceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub variance_mode: VarianceMode,
    #[serde(default = "default_pilot", skip_serializing_if = "is_default_pilot")]
    pub pilot_size: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "BoundOverrides::is_empty")]
    pub bounds: BoundOverrides,
    /// Refuse to run when the batch layout needs more shots than this.
    #[serde(default = "default_max_shots", skip_serializing_if = "is_default_max_shots")]
    pub max_shots: u64,
    /// Output directory used when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn complex(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl TargetSpec {
    /// Mode count implied by the literal matrix or the gates, if any.
    fn implied_modes(&self) -> Option<usize> {
        if let Some(s) = &self.symplectic {
            return Some(s.len() / 2);
        }
        if let Some(d) = &self.displacement {
            return Some(d.len() / 2);
        }
        self.gates
            .iter()
            .map(|g| match g {
                GateSpec::Squeezer { mode, .. } | GateSpec::Rotation { mode, .. } | GateSpec::Displacement { mode, .. } => {
                    mode + 1
                }
                GateSpec::Beamsplitter { modes, .. } | GateSpec::TwoModeSqueezer { modes, .. } => modes[0].max(modes[1]) + 1,
            })
            .max()
    }

    pub fn build(&self, m: usize) -> Result<GaussianUnitary> {
        let mut u = match &self.symplectic {
            Some(rows) => {
                if rows.len() != 2 * m || rows.iter().any(|r| r.len() != 2 * m) {
                    return Err(Error::Config(format!("symplectic literal must be {0}x{0}", 2 * m)));
                }
                let s = Mat::from_fn(2 * m, 2 * m, |i, j| rows[i][j]);
                GaussianUnitary::from_symplectic(SymplecticMatrix::new(s).map_err(cfg_err)?)
            }
            None => GaussianUnitary::identity(m),
        };
        if let Some(d) = &self.displacement {
            if d.len() != 2 * m {
                return Err(Error::Config(format!("displacement must have length {}", 2 * m)));
            }
            u = GaussianUnitary::new(u.symplectic().clone(), Vector::from_column_slice(d)).map_err(cfg_err)?;
        }
        for g in &self.gates {
            let step = match *g {
                GateSpec::Squeezer { mode, xi } => GaussianUnitary::from_symplectic(SymplecticMatrix::squeezer(m, mode, xi)?),
                GateSpec::Rotation { mode, theta } => {
                    GaussianUnitary::from_symplectic(SymplecticMatrix::rotation(m, mode, theta)?)
                }
                GateSpec::Beamsplitter { modes, theta } => {
                    GaussianUnitary::from_symplectic(SymplecticMatrix::beamsplitter(m, modes[0], modes[1], theta)?)
                }
                GateSpec::TwoModeSqueezer { modes, r } => {
                    GaussianUnitary::from_symplectic(SymplecticMatrix::two_mode_squeezer(m, modes[0], modes[1], r)?)
                }
                GateSpec::Displacement { mode, alpha } => {
                    if mode >= m {
                        return Err(Error::Config(format!("mode {mode} out of range for {m} modes")));
                    }
                    let mut a = vec![C64::new(0.0, 0.0); m];
                    a[mode] = complex(alpha);
                    GaussianUnitary::displacement(&a)
                }
            };
            u = u.then(&step).map_err(cfg_err)?;
        }
        Ok(u)
    }
}

/// Fully built experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub modes: usize,
    pub target: GaussianUnitary,
    pub device: DeviceModel,
    pub ensemble: ProbeEnsemble,
    pub grid: GridSpec,
    pub fock_cutoff: usize,
}

impl Experiment {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        Self::build_inner(config).map_err(cfg_err)
    }

    fn build_inner(config: &ExperimentConfig) -> Result<Self> {
        let c = config;
        crate::estimators::check_accuracy(c.epsilon, c.delta)?;
        if c.pilot_size == 0 {
            return Err(Error::Config("pilot_size must be at least 1".into()));
        }
        let ens_modes = c.ensemble.as_ref().and_then(|e| e.amplitudes.first()).map(|a| a.len());
        let single_mode = matches!(c.scenario, Scenario::Amplifier | Scenario::Cubic);
        let m = c
            .modes
            .or_else(|| c.target.as_ref().and_then(TargetSpec::implied_modes))
            .or(ens_modes)
            .unwrap_or(1);
        if m == 0 {
            return Err(Error::Config("modes must be positive".into()));
        }
        if single_mode && m != 1 {
            return Err(Error::Config("amplifier and cubic scenarios are single-mode".into()));
        }
        let target = c.target.clone().unwrap_or_default().build(m)?;

        let ensemble = match (&c.ensemble, c.scenario) {
            (None, Scenario::GaussianState) => ProbeEnsemble::single(vec![C64::new(0.0, 0.0); m])?,
            (None, _) => return Err(Error::Config("this scenario needs an ensemble".into())),
            (Some(_), Scenario::GaussianState) => {
                return Err(Error::Config("the state scenario uses vacuum input; remove `ensemble`".into()))
            }
            (Some(e), _) => {
                let amps: Vec<Vec<C64>> = e.amplitudes.iter().map(|a| a.iter().copied().map(complex).collect()).collect();
                if amps.iter().any(|a| a.len() != m) {
                    return Err(Error::Config(format!("every ensemble amplitude needs {m} entries")));
                }
                match &e.priors {
                    Some(p) => ProbeEnsemble::new(amps, p.clone())?,
                    None => ProbeEnsemble::uniform(amps)?,
                }
            }
        };

        let grid = c.grid.unwrap_or_default();
        grid.validate()?;
        let fock_cutoff = c.fock_cutoff.unwrap_or(DEFAULT_CUTOFF);
        if fock_cutoff < 8 {
            return Err(Error::Config("fock_cutoff must be at least 8".into()));
        }

        let device = match &c.device {
            DeviceSpec::IdealGaussian => DeviceModel::IdealGaussian { target: target.clone() },
            DeviceSpec::LossyGaussian { eta } => DeviceModel::LossyGaussian { target: target.clone(), eta: *eta },
            DeviceSpec::ThermalGaussian { nbar } => DeviceModel::ThermalGaussian { target: target.clone(), nbar: *nbar },
            DeviceSpec::MiscalibratedGaussian { actual } => DeviceModel::MiscalibratedGaussian { actual: actual.build(m)? },
            DeviceSpec::Amplifier { gain, added_noise } => {
                DeviceModel::Amplifier { gain: *gain, added_noise: *added_noise }
            }
            DeviceSpec::CubicPhase { gamma, input_displacement, input_squeezing } => DeviceModel::CubicPhase(CubicDevice {
                gamma: *gamma,
                input_displacement: complex(*input_displacement),
                input_squeezing: *input_squeezing,
                grid,
            }),
        };
        device.validate()?;

        match c.scenario {
            Scenario::GaussianState | Scenario::GaussianChannel => {
                if !device.is_gaussian() {
                    return Err(Error::Config("Gaussian scenarios need a Gaussian device".into()));
                }
                if matches!(device, DeviceModel::Amplifier { .. }) && c.target.is_some() {
                    return Err(Error::Config("the amplifier device ignores the target; drop one of them".into()));
                }
            }
            Scenario::Amplifier => {
                let g = c.gain.ok_or_else(|| Error::Config("amplifier scenario needs `gain`".into()))?;
                if !(g > 1.0) {
                    return Err(Error::Config(format!("amplifier gain must exceed 1, got {g}")));
                }
                if !device.is_gaussian() {
                    return Err(Error::Config("amplifier scenario needs a Gaussian device".into()));
                }
            }
            Scenario::Cubic => {
                let g = c.gamma.ok_or_else(|| Error::Config("cubic scenario needs `gamma`".into()))?;
                if !g.is_finite() {
                    return Err(Error::Config("gamma must be finite".into()));
                }
                if device.is_gaussian() {
                    return Err(Error::Config("cubic scenario needs a cubic_phase device".into()));
                }
            }
        }
        if c.scenario != Scenario::Amplifier && c.gain.is_some() {
            return Err(Error::Config("`gain` only applies to the amplifier scenario".into()));
        }
        if c.scenario != Scenario::Cubic && c.gamma.is_some() {
            return Err(Error::Config("`gamma` only applies to the cubic scenario".into()));
        }
        for (name, v) in [
            ("e_max_prep", c.bounds.e_max_prep),
            ("e_max_target", c.bounds.e_max_target),
            ("gamma_max", c.bounds.gamma_max),
            ("r_max", c.bounds.r_max),
            ("q_max", c.bounds.q_max),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Config(format!("bound {name} must be positive")));
                }
            }
        }

        Ok(Self { config: config.clone(), modes: m, target, device, ensemble, grid, fock_cutoff })
    }
}
