//! Importance-sampling kernels, shot samplers and median-of-means.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::ProbeEnsemble;
use crate::gaussian::{inverse_spd, GaussianState, GaussianUnitary};
use crate::measurement::{homodyne_single, sample_gamma_entry, QuadratureIndex};
use crate::rng::{batch_stream, StreamKind, StreamRng};
use crate::wavefn::{GridWavefunction, QuadratureSampler};
use crate::witnesses::{build_dictionary, DictionaryKind, ObservableDictionary};
use crate::{Error, Mat, Result, Vector, C64};

/// Entries of `V⁻¹` smaller than this (relative to the largest) count as zero.
const ZERO_ENTRY: f64 = 1e-13;

/// `p(k, l) = [V⁻¹]²_kl / ‖V⁻¹‖²_F`.
#[derive(Debug, Clone)]
pub struct IndexDistribution {
    inverse: Mat,
    weights: Mat,
    frobenius_sq: f64,
    support: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
}

impl IndexDistribution {
    pub fn new(v_inverse: &Mat) -> Result<Self> {
        if v_inverse.nrows() != v_inverse.ncols() || !v_inverse.nrows().is_multiple_of(2) {
            return Err(Error::Dimension("index distribution needs an even square matrix".into()));
        }
        let scale = v_inverse.amax();
        if !(scale > 0.0) {
            return Err(Error::Domain("V⁻¹ is identically zero".into()));
        }
        let inverse = v_inverse.map(|x| if x.abs() <= ZERO_ENTRY * scale { 0.0 } else { x });
        let frobenius_sq = inverse.norm_squared();
        let weights = inverse.map(|x| x * x / frobenius_sq);
        let n = inverse.nrows();
        let mut support = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if weights[(i, j)] > 0.0 {
                    acc += weights[(i, j)];
                    support.push((i, j));
                    cumulative.push(acc);
                }
            }
        }
        Ok(Self { inverse, weights, frobenius_sq, support, cumulative })
    }

    /// From the covariance matrix of a target state.
    pub fn for_covariance(v: &Mat) -> Result<Self> {
        Self::new(&inverse_spd(v)?)
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    pub fn inverse(&self) -> &Mat {
        &self.inverse
    }

    pub fn modes(&self) -> usize {
        self.inverse.nrows() / 2
    }

    /// Draws `(k, l)` among entries with nonzero weight.
    pub fn sample(&self, rng: &mut StreamRng) -> (QuadratureIndex, QuadratureIndex) {
        use rand::Rng;
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.support.len() - 1);
        let (i, j) = self.support[idx];
        (QuadratureIndex::from_zero_based(i), QuadratureIndex::from_zero_based(j))
    }

    fn entry(&self, k: QuadratureIndex, l: QuadratureIndex) -> Result<f64> {
        let (i, j) = (k.zero_based(), l.zero_based());
        if i >= self.inverse.nrows() || j >= self.inverse.nrows() {
            return Err(Error::Dimension("quadrature index outside target".into()));
        }
        let e = self.inverse[(i, j)];
        if e == 0.0 {
            return Err(Error::Contract(format!("index ({}, {}) has zero probability", k.get(), l.get())));
        }
        Ok(e)
    }
}

pub fn index_distribution(v_target_inverse: &Mat) -> Result<IndexDistribution> {
    IndexDistribution::new(v_target_inverse)
}

/// `χ = r′ [x_t]_l / [V⁻¹]_kl · ‖V⁻¹‖²_F`.
pub fn chi_kernel(
    k: QuadratureIndex,
    l: QuadratureIndex,
    r_prime: f64,
    x_target: &Vector,
    dist: &IndexDistribution,
) -> Result<f64> {
    let e = dist.entry(k, l)?;
    Ok(r_prime * x_target[l.zero_based()] / e * dist.frobenius_sq)
}

/// `X = Γ′_kl / [V⁻¹]_kl · ‖V⁻¹‖²_F`.
pub fn x_kernel(k: QuadratureIndex, l: QuadratureIndex, gamma_prime: f64, dist: &IndexDistribution) -> Result<f64> {
    let e = dist.entry(k, l)?;
    Ok(gamma_prime / e * dist.frobenius_sq)
}

/// Measured quantity fed to a channel kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelOutcome {
    /// `r′_k` for the first-moment kernel `χ⁽ᶜ⁾`.
    FirstMoment(f64),
    /// `Γ′_kl` for the second-moment kernel `X⁽ᶜ⁾`.
    SecondMoment(f64),
}

/// `χ⁽ᶜ⁾` or `X⁽ᶜ⁾` for input `α` against target `(S, d)`.
pub fn channel_kernels(
    alpha: &[C64],
    k: QuadratureIndex,
    l: QuadratureIndex,
    outcome: ChannelOutcome,
    target: &GaussianUnitary,
) -> Result<f64> {
    if alpha.len() != target.modes() {
        return Err(Error::Dimension("input amplitude and target mode counts differ".into()));
    }
    let dist = IndexDistribution::for_covariance(&target.output_covariance())?;
    match outcome {
        ChannelOutcome::FirstMoment(r) => chi_kernel(k, l, r, &target.output_mean(alpha), &dist),
        ChannelOutcome::SecondMoment(g) => x_kernel(k, l, g, &dist),
    }
}

/// `sign(c_k) · value · Σ|c_l|` for a dictionary entry (one-based `k`).
pub fn dictionary_kernel(dict: &ObservableDictionary, k: usize, value: f64) -> Result<f64> {
    if k == 0 || k > dict.len() {
        return Err(Error::Dimension(format!("dictionary index {k} outside 1..={}", dict.len())));
    }
    let c = dict.coefficients[k - 1];
    if c == 0.0 {
        return Err(Error::Contract(format!("dictionary index {k} has zero probability")));
    }
    Ok(c.signum() * value * dict.abs_sum())
}

/// `ζ = sign(τ_k) ν′ Σ|τ_l|`.
pub fn zeta_kernel(alpha: C64, k: usize, nu_prime: f64, g: f64) -> Result<f64> {
    dictionary_kernel(&build_dictionary(DictionaryKind::Amplifier { gain: g }, alpha), k, nu_prime)
}

/// `Z = sign(κ_k) μ′ Σ|κ_l|`.
pub fn z_kernel(alpha: C64, k: usize, mu_prime: f64, gamma: f64) -> Result<f64> {
    dictionary_kernel(&build_dictionary(DictionaryKind::Cubic { gamma }, alpha), k, mu_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Chi,
    X,
    ChiC,
    XC,
    Zeta,
    Z,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Chi => "chi",
            Kernel::X => "X",
            Kernel::ChiC => "chi_c",
            Kernel::XC => "X_c",
            Kernel::Zeta => "zeta",
            Kernel::Z => "Z",
        }
    }

    pub fn stream_kind(self) -> StreamKind {
        match self {
            Kernel::Chi | Kernel::ChiC => StreamKind::Chi,
            Kernel::X | Kernel::XC => StreamKind::SecondMoment,
            Kernel::Zeta | Kernel::Z => StreamKind::Dictionary,
        }
    }
}

/// One importance-sampled shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSample {
    pub kernel: Kernel,
    /// Probe index into the ensemble.
    pub alpha: usize,
    /// One-based `k`.
    pub k: usize,
    /// One-based `l` for the moment kernels.
    pub l: Option<usize>,
    /// Measured eigenvalue (`r′`, `Γ′`, `ν′` or `μ′`).
    pub outcome: f64,
    pub value: f64,
}

/// Anything that produces independent kernel values.
pub trait ShotSampler: Sync {
    fn kernel(&self) -> Kernel;
    fn draw(&self, rng: &mut StreamRng) -> EstimatorSample;
}

/// `χ`/`X` (one fixed preparation) or `χ⁽ᶜ⁾`/`X⁽ᶜ⁾` (device outputs per probe).
#[derive(Debug, Clone)]
pub struct MomentSampler {
    kernel: Kernel,
    dist: IndexDistribution,
    ensemble: ProbeEnsemble,
    targets: Vec<Vector>,
    outputs: Vec<GaussianState>,
}

impl MomentSampler {
    /// State scenario: target state and a fixed preparation.
    pub fn state(kernel: Kernel, target: &GaussianState, prep: &GaussianState) -> Result<Self> {
        if !matches!(kernel, Kernel::Chi | Kernel::X) {
            return Err(Error::Contract("state sampler takes the chi or X kernel".into()));
        }
        if target.modes() != prep.modes() {
            return Err(Error::Dimension("target and preparation mode counts differ".into()));
        }
        let m = target.modes();
        Ok(Self {
            kernel,
            dist: IndexDistribution::for_covariance(target.covariance())?,
            ensemble: ProbeEnsemble::single(vec![C64::new(0.0, 0.0); m])?,
            targets: vec![target.mean().clone()],
            outputs: vec![prep.clone()],
        })
    }

    /// Channel scenario: `outputs[i]` is the device output for probe `i`.
    pub fn channel(
        kernel: Kernel,
        target: &GaussianUnitary,
        ensemble: &ProbeEnsemble,
        outputs: Vec<GaussianState>,
    ) -> Result<Self> {
        if !matches!(kernel, Kernel::ChiC | Kernel::XC) {
            return Err(Error::Contract("channel sampler takes the chi_c or X_c kernel".into()));
        }
        if outputs.len() != ensemble.len() || outputs.iter().any(|o| o.modes() != target.modes()) {
            return Err(Error::Dimension("one output per probe with the target's mode count is required".into()));
        }
        Ok(Self {
            kernel,
            dist: IndexDistribution::for_covariance(&target.output_covariance())?,
            ensemble: ensemble.clone(),
            targets: ensemble.amplitudes().iter().map(|a| target.output_mean(a)).collect(),
            outputs,
        })
    }

    pub fn distribution(&self) -> &IndexDistribution {
        &self.dist
    }
}

impl ShotSampler for MomentSampler {
    fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn draw(&self, rng: &mut StreamRng) -> EstimatorSample {
        let a = self.ensemble.sample(rng);
        let (k, l) = self.dist.sample(rng);
        let out = &self.outputs[a];
        let (outcome, value) = match self.kernel {
            Kernel::Chi | Kernel::ChiC => {
                let r = homodyne_single(out, k, rng);
                (r, chi_kernel(k, l, r, &self.targets[a], &self.dist))
            }
            _ => {
                let g = sample_gamma_entry(out, k, l, rng).value;
                (g, x_kernel(k, l, g, &self.dist))
            }
        };
        EstimatorSample {
            kernel: self.kernel,
            alpha: a,
            k: k.get(),
            l: Some(l.get()),
            outcome,
            value: value.expect("sampled indices have nonzero weight"),
        }
    }
}

/// Source of single-mode homodyne outcomes at a given angle.
pub trait QuadratureSource: Send + Sync {
    fn sample(&self, angle: f64, rng: &mut StreamRng) -> f64;
}

impl QuadratureSource for GaussianState {
    fn sample(&self, angle: f64, rng: &mut StreamRng) -> f64 {
        crate::measurement::homodyne_rotated(self, 0, angle, rng)
    }
}

/// Pre-rotated inverse-CDF samplers of a grid state at fixed angles.
#[derive(Debug, Clone)]
pub struct GridSource {
    samplers: Vec<(f64, QuadratureSampler)>,
}

impl GridSource {
    pub fn new(psi: &GridWavefunction, angles: &[f64]) -> Result<Self> {
        let samplers = angles
            .iter()
            .map(|&a| QuadratureSampler::new(psi, a).map(|s| (a, s)))
            .collect::<Result<_>>()?;
        Ok(Self { samplers })
    }
}

impl QuadratureSource for GridSource {
    fn sample(&self, angle: f64, rng: &mut StreamRng) -> f64 {
        let (_, s) = self
            .samplers
            .iter()
            .find(|(a, _)| (a - angle).abs() < 1e-12)
            .expect("angle was prepared");
        s.sample(rng)
    }
}

/// `ζ` or `Z` shots: probe, then dictionary index, then one homodyne.
pub struct DictionarySampler {
    kernel: Kernel,
    ensemble: ProbeEnsemble,
    dictionaries: Vec<ObservableDictionary>,
    cumulative: Vec<Vec<f64>>,
    sources: Vec<Box<dyn QuadratureSource>>,
}

impl DictionarySampler {
    pub fn new(
        kind: DictionaryKind,
        ensemble: &ProbeEnsemble,
        sources: Vec<Box<dyn QuadratureSource>>,
    ) -> Result<Self> {
        if ensemble.modes() != 1 {
            return Err(Error::Dimension("dictionary estimators are single-mode".into()));
        }
        if sources.len() != ensemble.len() {
            return Err(Error::Dimension("one output per probe is required".into()));
        }
        let kernel = match kind {
            DictionaryKind::Amplifier { .. } => Kernel::Zeta,
            DictionaryKind::Cubic { .. } => Kernel::Z,
        };
        let dictionaries: Vec<_> = ensemble.amplitudes().iter().map(|a| build_dictionary(kind, a[0])).collect();
        let cumulative = dictionaries
            .iter()
            .map(|d| {
                d.probabilities()
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { kernel, ensemble: ensemble.clone(), dictionaries, cumulative, sources })
    }

    pub fn dictionaries(&self) -> &[ObservableDictionary] {
        &self.dictionaries
    }
}

impl ShotSampler for DictionarySampler {
    fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn draw(&self, rng: &mut StreamRng) -> EstimatorSample {
        use rand::Rng;
        let a = self.ensemble.sample(rng);
        let dict = &self.dictionaries[a];
        let cum = &self.cumulative[a];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        // Entries with zero coefficient have zero-width intervals and are skipped.
        let mut idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        while dict.coefficients[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        let obs = dict.observables[idx];
        let r = self.sources[a].sample(obs.angle, rng);
        let mu = r.powi(obs.power as i32);
        let value = dictionary_kernel(dict, idx + 1, mu).expect("nonzero coefficient");
        EstimatorSample { kernel: self.kernel, alpha: a, k: idx + 1, l: None, outcome: mu, value }
    }
}

/// Ceiling that ignores floating-point noise just above an integer.
pub fn ceil_count(x: f64) -> usize {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    v.max(1.0) as usize
}

/// `B = ⌈2 ln(2/Δ)⌉`.
pub fn batch_count(delta: f64) -> usize {
    ceil_count(2.0 * (2.0 / delta).ln())
}

/// Batch layout for median-of-means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MomPlan {
    pub batches: usize,
    pub per_batch: usize,
}

pub fn check_accuracy(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("ε must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("Δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

impl MomPlan {
    /// `B = ⌈2 ln(2/Δ)⌉` batches of `⌈34 σ²/ε²⌉` samples.
    pub fn new(epsilon: f64, delta: f64, variance_proxy: f64) -> Result<Self> {
        check_accuracy(epsilon, delta)?;
        if !(variance_proxy >= 0.0) || !variance_proxy.is_finite() {
            return Err(Error::Domain(format!("variance proxy must be finite and ≥ 0, got {variance_proxy}")));
        }
        Ok(Self { batches: batch_count(delta), per_batch: ceil_count(34.0 * variance_proxy / (epsilon * epsilon)) })
    }

    pub fn total(&self) -> usize {
        self.batches * self.per_batch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomResult {
    pub estimate: f64,
    pub batches: usize,
    pub batch_means: Vec<f64>,
    pub per_batch_size: usize,
    pub total_n: usize,
    pub epsilon: f64,
    pub delta: f64,
}

/// Lower median: element `⌊(B−1)/2⌋` of the sorted list.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

impl MomResult {
    pub fn from_batch_means(batch_means: Vec<f64>, per_batch: usize, epsilon: f64, delta: f64) -> Self {
        let batches = batch_means.len();
        Self {
            estimate: lower_median(&batch_means),
            batches,
            batch_means,
            per_batch_size: per_batch,
            total_n: batches * per_batch,
            epsilon,
            delta,
        }
    }
}

/// Consumes exactly `B · n` values from `stream`.
pub fn median_of_means<I: IntoIterator<Item = f64>>(
    stream: I,
    epsilon: f64,
    delta: f64,
    variance_proxy: f64,
) -> Result<MomResult> {
    let plan = MomPlan::new(epsilon, delta, variance_proxy)?;
    let mut it = stream.into_iter();
    let mut means = Vec::with_capacity(plan.batches);
    for b in 0..plan.batches {
        let mut sum = 0.0;
        for i in 0..plan.per_batch {
            sum += it.next().ok_or(Error::InsufficientSamples {
                needed: plan.total(),
                got: b * plan.per_batch + i,
            })?;
        }
        means.push(sum / plan.per_batch as f64);
    }
    Ok(MomResult::from_batch_means(means, plan.per_batch, epsilon, delta))
}

/// Runs a sampler batch-parallel. Batch `b` always uses stream
/// `(seed, kernel, b)`, so the result does not depend on the worker count.
pub fn run_sampler(
    sampler: &dyn ShotSampler,
    plan: MomPlan,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> MomResult {
    let kind = sampler.kernel().stream_kind();
    let means: Vec<f64> = (0..plan.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_stream(seed, kind, b as u64);
            let sum: f64 = (0..plan.per_batch).map(|_| sampler.draw(&mut rng).value).sum();
            sum / plan.per_batch as f64
        })
        .collect();
    MomResult::from_batch_means(means, plan.per_batch, epsilon, delta)
}

/// Safety factor applied to pilot estimates of `E(Y²)`.
pub const PILOT_SAFETY: f64 = 2.0;

/// `2 · mean(Y²)` over a pilot run drawn from its own stream.
pub fn pilot_variance_proxy(sampler: &dyn ShotSampler, seed: u64, pilot_size: usize) -> f64 {
    let mut rng = batch_stream(seed, StreamKind::Pilot, sampler.kernel() as u64);
    let n = pilot_size.max(1);
    let m2: f64 = (0..n).map(|_| sampler.draw(&mut rng).value.powi(2)).sum::<f64>() / n as f64;
    PILOT_SAFETY * m2
}
