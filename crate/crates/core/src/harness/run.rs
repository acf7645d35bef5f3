//! Scenario runners: sampled protocols, exact oracles and budgets.

use std::collections::BTreeMap;

use super::config::{Experiment, ExperimentConfig, VarianceMode};
use super::report::{EstimatorRecord, OracleReport, RunReport, ShotCounters, WitnessEstimate};
use crate::channels::{probe_cubic, probe_gaussian, DeviceModel};
use crate::estimators::{
    pilot_variance_proxy, run_sampler, DictionarySampler, GridSource, Kernel, MomPlan, MomentSampler,
    QuadratureSource, ShotSampler,
};
use crate::gaussian::{apply_unitary, coherent_state, exact_overlap_traces, overlap_pure, GaussianState, OverlapTraces};
use crate::measurement::gamma_max;
use crate::planner::{self, ComplexityBudget};
use crate::symplectic::{euler_decompose, williamson_euler};
use crate::wavefn::{
    fock_cubic_state, fock_expectation, grid_to_fock, padded_observable, CMat, CVec, GridWavefunction,
};
use crate::witnesses::{
    build_dictionary, channel_known_term, witness_amplifier, witness_cubic, witness_gaussian_channel,
    witness_gaussian_state, DictionaryKind, Scenario, WitnessValue, CUBIC_ANGLES,
};
use crate::{Error, Result, C64};

/// Subcommands that run an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CertifyState,
    BenchmarkGaussian,
    BenchmarkAmplifier,
    BenchmarkCubic,
    Plan,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CertifyState => "certify-state",
            Command::BenchmarkGaussian => "benchmark-gaussian",
            Command::BenchmarkAmplifier => "benchmark-amplifier",
            Command::BenchmarkCubic => "benchmark-cubic",
            Command::Plan => "plan",
            Command::Oracle => "oracle",
        }
    }

    fn scenario(self) -> Option<Scenario> {
        match self {
            Command::CertifyState => Some(Scenario::GaussianState),
            Command::BenchmarkGaussian => Some(Scenario::GaussianChannel),
            Command::BenchmarkAmplifier => Some(Scenario::Amplifier),
            Command::BenchmarkCubic => Some(Scenario::Cubic),
            Command::Plan | Command::Oracle => None,
        }
    }
}

fn build_for(cfg: &ExperimentConfig, command: Command) -> Result<Experiment> {
    if let Some(s) = command.scenario() {
        if cfg.scenario != s {
            return Err(Error::Config(format!(
                "{} needs scenario {:?}, config has {:?}",
                command.name(),
                s,
                cfg.scenario
            )));
        }
    }
    Experiment::build(cfg)
}

pub fn run_certify_state(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_sampled(&build_for(cfg, Command::CertifyState)?)
}

pub fn run_benchmark_gaussian(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_sampled(&build_for(cfg, Command::BenchmarkGaussian)?)
}

pub fn run_benchmark_amplifier(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_sampled(&build_for(cfg, Command::BenchmarkAmplifier)?)
}

pub fn run_benchmark_cubic(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_sampled(&build_for(cfg, Command::BenchmarkCubic)?)
}

pub fn run_plan(cfg: &ExperimentConfig) -> Result<ComplexityBudget> {
    budget(&build_for(cfg, Command::Plan)?)
}

/// Exact `W`, `F` and `F − W`; no sampling.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<RunReport> {
    let exp = build_for(cfg, Command::Oracle)?;
    let exact = oracle(&exp)?;
    Ok(RunReport {
        scenario: cfg.scenario,
        config: cfg.clone(),
        witness: None,
        estimators: Vec::new(),
        oracle: Some(exact.report),
        budget: None,
        shots: ShotCounters { estimation: 0, pilot: 0, budget: None, within_budget: None },
    })
}

/// Dispatches the sampled and oracle commands.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunReport> {
    match command {
        Command::CertifyState => run_certify_state(cfg),
        Command::BenchmarkGaussian => run_benchmark_gaussian(cfg),
        Command::BenchmarkAmplifier => run_benchmark_amplifier(cfg),
        Command::BenchmarkCubic => run_benchmark_cubic(cfg),
        Command::Oracle => run_oracle(cfg),
        Command::Plan => Err(Error::Config("plan produces a budget, use run_plan".into())),
    }
}

fn run_sampled(exp: &Experiment) -> Result<RunReport> {
    let cfg = &exp.config;
    let budget = budget(exp)?;
    let exact = oracle(exp)?;
    let samplers = samplers(exp)?;

    let mut layouts = Vec::with_capacity(samplers.len());
    let mut pilot = 0;
    for s in &samplers {
        let name = s.kernel().name();
        let eb = budget
            .estimator(name)
            .ok_or_else(|| Error::Contract(format!("budget has no entry for {name}")))?;
        let (proxy, plan) = match cfg.variance_mode {
            VarianceMode::Theorem => {
                (eb.second_moment_bound, MomPlan { batches: eb.batches, per_batch: eb.per_batch })
            }
            VarianceMode::Pilot => {
                pilot += cfg.pilot_size;
                let v = pilot_variance_proxy(s.as_ref(), cfg.seed, cfg.pilot_size);
                (v, MomPlan::new(eb.epsilon, eb.delta, v)?)
            }
        };
        layouts.push((proxy, plan, eb.epsilon, eb.delta));
    }
    let needed: usize = layouts.iter().map(|l| l.1.total()).sum();
    if needed as u64 > cfg.max_shots {
        return Err(Error::InsufficientSamples { needed, got: cfg.max_shots as usize });
    }

    let mut records = Vec::with_capacity(samplers.len());
    let mut estimates = BTreeMap::new();
    for (s, (proxy, plan, eps, del)) in samplers.iter().zip(layouts) {
        let result = run_sampler(s.as_ref(), plan, eps, del, cfg.seed);
        let name = s.kernel().name();
        estimates.insert(name, result.estimate);
        records.push(EstimatorRecord {
            estimator: name.to_string(),
            variance_mode: cfg.variance_mode,
            variance_proxy: proxy,
            exact_mean: exact.kernel_means.get(name).copied(),
            result,
        });
    }

    let w = assemble(exp, &exact, &estimates)?;
    let estimation: usize = records.iter().map(|r| r.result.total_n).sum();
    Ok(RunReport {
        scenario: cfg.scenario,
        config: cfg.clone(),
        witness: Some(WitnessEstimate {
            value: w.value,
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            offset: exact.offset,
            coefficients: exact.coefficients.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            components: w.components,
        }),
        estimators: records,
        oracle: Some(exact.report),
        shots: ShotCounters {
            estimation,
            pilot,
            budget: Some(budget.n_total),
            within_budget: Some(estimation <= budget.n_total),
        },
        budget: Some(budget),
    })
}

/// Exact values for a simulated device.
struct Exact {
    report: OracleReport,
    kernel_means: BTreeMap<&'static str, f64>,
    /// `W` is affine in the kernel means: `offset + Σ c · mean`.
    offset: f64,
    coefficients: BTreeMap<&'static str, f64>,
    /// State scenario only.
    t3: f64,
}

fn assemble(exp: &Experiment, exact: &Exact, est: &BTreeMap<&'static str, f64>) -> Result<WitnessValue> {
    let get = |k: &str| est.get(k).copied().ok_or_else(|| Error::Contract(format!("missing estimate {k}")));
    match exp.config.scenario {
        Scenario::GaussianState => {
            let target = apply_unitary(&exp.target, &GaussianState::vacuum(exp.modes))?;
            witness_gaussian_state(&target, OverlapTraces { t1: get("X")?, t2: get("chi")?, t3: exact.t3 })
        }
        Scenario::GaussianChannel => witness_gaussian_channel(&exp.target, &exp.ensemble, get("X_c")?, get("chi_c")?),
        Scenario::Amplifier => witness_amplifier(gain(exp)?, &exp.ensemble, get("zeta")?),
        Scenario::Cubic => witness_cubic(gamma(exp)?, &exp.ensemble, get("Z")?),
    }
}

fn gain(exp: &Experiment) -> Result<f64> {
    exp.config.gain.ok_or_else(|| Error::Config("missing gain".into()))
}

fn gamma(exp: &Experiment) -> Result<f64> {
    exp.config.gamma.ok_or_else(|| Error::Config("missing gamma".into()))
}

/// Device output for every probe.
fn gaussian_outputs(exp: &Experiment) -> Result<Vec<GaussianState>> {
    exp.ensemble.amplitudes().iter().map(|a| probe_gaussian(&exp.device, a)).collect()
}

/// Ideal output for every probe.
fn target_outputs(exp: &Experiment) -> Result<Vec<GaussianState>> {
    exp.ensemble
        .amplitudes()
        .iter()
        .map(|a| match exp.config.scenario {
            Scenario::Amplifier => {
                let g = gain(exp)?;
                Ok(coherent_state(&a.iter().map(|z| z * g).collect::<Vec<_>>()))
            }
            _ => apply_unitary(&exp.target, &coherent_state(a)),
        })
        .collect()
}

fn cubic_outputs(exp: &Experiment) -> Result<Vec<GridWavefunction>> {
    exp.ensemble.amplitudes().iter().map(|a| probe_cubic(&exp.device, a[0])).collect()
}

fn max_energy(states: &[GaussianState]) -> f64 {
    states.iter().flat_map(|s| s.mode_energies()).fold(0.0, f64::max)
}

fn weighted<F: FnMut(usize) -> Result<f64>>(exp: &Experiment, mut f: F) -> Result<f64> {
    let mut acc = 0.0;
    for (i, p) in exp.ensemble.priors().iter().enumerate() {
        acc += p * f(i)?;
    }
    Ok(acc)
}

fn samplers(exp: &Experiment) -> Result<Vec<Box<dyn ShotSampler>>> {
    Ok(match exp.config.scenario {
        Scenario::GaussianState => {
            let target = &target_outputs(exp)?[0];
            let prep = &gaussian_outputs(exp)?[0];
            vec![
                Box::new(MomentSampler::state(Kernel::Chi, target, prep)?),
                Box::new(MomentSampler::state(Kernel::X, target, prep)?),
            ]
        }
        Scenario::GaussianChannel => {
            let outs = gaussian_outputs(exp)?;
            vec![
                Box::new(MomentSampler::channel(Kernel::ChiC, &exp.target, &exp.ensemble, outs.clone())?),
                Box::new(MomentSampler::channel(Kernel::XC, &exp.target, &exp.ensemble, outs)?),
            ]
        }
        Scenario::Amplifier => {
            let sources = gaussian_outputs(exp)?
                .into_iter()
                .map(|s| Box::new(s) as Box<dyn QuadratureSource>)
                .collect();
            vec![Box::new(DictionarySampler::new(DictionaryKind::Amplifier { gain: gain(exp)? }, &exp.ensemble, sources)?)]
        }
        Scenario::Cubic => {
            let sources = cubic_outputs(exp)?
                .iter()
                .map(|psi| GridSource::new(psi, &CUBIC_ANGLES).map(|s| Box::new(s) as Box<dyn QuadratureSource>))
                .collect::<Result<Vec<_>>>()?;
            vec![Box::new(DictionarySampler::new(DictionaryKind::Cubic { gamma: gamma(exp)? }, &exp.ensemble, sources)?)]
        }
    })
}

/// Planner budget; bound inputs come from the overrides or the simulated device.
pub(crate) fn budget(exp: &Experiment) -> Result<ComplexityBudget> {
    let c = &exp.config;
    let b = &c.bounds;
    let (eps, del, m) = (c.epsilon, c.delta, exp.modes);
    match c.scenario {
        Scenario::GaussianState => {
            let target = &target_outputs(exp)?[0];
            let prep = gaussian_outputs(exp)?;
            let s_t = williamson_euler(target.covariance())?.s();
            let e_max = b.e_max_prep.unwrap_or_else(|| max_energy(&prep));
            let g_max = b.gamma_max.unwrap_or_else(|| gamma_max(&prep[0]));
            planner::plan_state(eps, del, m, s_t, e_max, g_max, target.mean().norm_squared())
        }
        Scenario::GaussianChannel => {
            let outs = gaussian_outputs(exp)?;
            let s_u = euler_decompose(exp.target.symplectic())?.s();
            let e_u = b.e_max_target.unwrap_or(max_energy(&target_outputs(exp)?));
            let e_e = b.e_max_prep.unwrap_or_else(|| max_energy(&outs));
            let g_max = b.gamma_max.unwrap_or_else(|| outs.iter().map(gamma_max).fold(0.0, f64::max));
            planner::plan_channel(eps, del, m, s_u, e_u, e_e, g_max)
        }
        Scenario::Amplifier => {
            let g = gain(exp)?;
            let s_max = planner::amplifier_set_bound_with_gain(&exp.ensemble, g);
            let r_max = match b.r_max {
                Some(r) => r,
                None => {
                    let dict = build_dictionary(DictionaryKind::Amplifier { gain: g }, C64::new(0.0, 0.0));
                    let mut r: f64 = 0.0;
                    for out in gaussian_outputs(exp)? {
                        for o in &dict.observables {
                            r = r.max(out.quadrature_moment(0, o.angle, 2 * o.power));
                        }
                    }
                    r
                }
            };
            planner::plan_amplifier(eps, del, s_max, r_max)
        }
        Scenario::Cubic => {
            let q_max = match b.q_max {
                Some(q) => q,
                None => cubic_q_max(exp)?,
            };
            planner::plan_cubic(eps, del, gamma(exp)?, &exp.ensemble, q_max)
        }
    }
}

/// `max(⟨q⁸⟩, max_k⟨μ_k²⟩)` over the device outputs.
fn cubic_q_max(exp: &Experiment) -> Result<f64> {
    let dict = build_dictionary(DictionaryKind::Cubic { gamma: 1.0 }, C64::new(0.0, 0.0));
    let mut q: f64 = 0.0;
    for psi in cubic_outputs(exp)? {
        q = q.max(psi.position_moment(8));
        for o in &dict.observables {
            q = q.max(psi.quadrature_moment(o.angle, 2 * o.power as i32)?);
        }
    }
    Ok(q)
}

fn oracle(exp: &Experiment) -> Result<Exact> {
    let m = exp.modes as f64;
    let mut comps = BTreeMap::new();
    let (method, w, f, kernel_means, offset, coefficients, t3, cutoff);
    match exp.config.scenario {
        Scenario::GaussianState => {
            let target = &target_outputs(exp)?[0];
            let prep = &gaussian_outputs(exp)?[0];
            let tr = exact_overlap_traces(target, prep)?;
            w = witness_gaussian_state(target, tr)?;
            f = overlap_pure(target, prep)?;
            kernel_means = BTreeMap::from([("chi", tr.t2), ("X", tr.t1)]);
            offset = 1.0 + m / 2.0 - tr.t3 / 4.0;
            coefficients = BTreeMap::from([("chi", 0.5), ("X", -0.25)]);
            t3 = tr.t3;
            method = "gaussian_overlap";
            cutoff = None;
        }
        Scenario::GaussianChannel => {
            let targets = target_outputs(exp)?;
            let outs = gaussian_outputs(exp)?;
            let traces =
                targets.iter().zip(&outs).map(|(t, o)| exact_overlap_traces(t, o)).collect::<Result<Vec<_>>>()?;
            let e_x = weighted(exp, |i| Ok(traces[i].t1))?;
            let e_chi = weighted(exp, |i| Ok(traces[i].t2))?;
            w = witness_gaussian_channel(&exp.target, &exp.ensemble, e_x, e_chi)?;
            f = weighted(exp, |i| overlap_pure(&targets[i], &outs[i]))?;
            kernel_means = BTreeMap::from([("chi_c", e_chi), ("X_c", e_x)]);
            offset = 1.0 + m / 2.0 - channel_known_term(&exp.target, &exp.ensemble)? / 4.0;
            coefficients = BTreeMap::from([("chi_c", 0.5), ("X_c", -0.25)]);
            t3 = 0.0;
            method = "gaussian_overlap";
            cutoff = None;
        }
        Scenario::Amplifier => {
            let g = gain(exp)?;
            let targets = target_outputs(exp)?;
            let outs = gaussian_outputs(exp)?;
            let amps = exp.ensemble.amplitudes();
            let e_zeta = weighted(exp, |i| {
                let d = build_dictionary(DictionaryKind::Amplifier { gain: g }, amps[i][0]);
                Ok(d.expectation(|o| outs[i].quadrature_moment(0, o.angle, o.power)))
            })?;
            w = witness_amplifier(g, &exp.ensemble, e_zeta)?;
            f = weighted(exp, |i| overlap_pure(&targets[i], &outs[i]))?;
            kernel_means = BTreeMap::from([("zeta", e_zeta)]);
            offset = 1.5 - g * g * exp.ensemble.mean_energy();
            coefficients = BTreeMap::from([("zeta", -1.0)]);
            t3 = 0.0;
            method = "gaussian_overlap";
            cutoff = None;
        }
        Scenario::Cubic => {
            let gm = gamma(exp)?;
            let n = exp.fock_cutoff;
            let lo = cubic_fock(exp, n)?;
            let hi = cubic_fock(exp, 2 * n)?;
            let moved = (lo.0 - hi.0).abs().max((lo.1 - hi.1).abs());
            if moved > 1e-6 {
                return Err(Error::Convergence(format!(
                    "Fock oracle moved by {moved:.2e} when doubling cutoff {n}; raise fock_cutoff"
                )));
            }
            let (e_z, fid) = hi;
            w = witness_cubic(gm, &exp.ensemble, e_z)?;
            f = fid;
            let outs = cubic_outputs(exp)?;
            let amps = exp.ensemble.amplitudes();
            let grid_e_z = weighted(exp, |i| {
                let d = build_dictionary(DictionaryKind::Cubic { gamma: gm }, amps[i][0]);
                let mut acc = 0.0;
                for (o, c) in d.observables.iter().zip(&d.coefficients) {
                    acc += c * outs[i].quadrature_moment(o.angle, o.power as i32)?;
                }
                Ok(acc)
            })?;
            comps.insert("grid_witness".to_string(), witness_cubic(gm, &exp.ensemble, grid_e_z)?.value);
            kernel_means = BTreeMap::from([("Z", e_z)]);
            offset = 1.5 - exp.ensemble.mean_energy();
            coefficients = BTreeMap::from([("Z", -1.0)]);
            t3 = 0.0;
            method = "fock";
            cutoff = Some(2 * n);
        }
    }
    comps.extend(w.components);
    Ok(Exact {
        report: OracleReport {
            method: method.into(),
            witness: w.value,
            fidelity: f,
            gap: f - w.value,
            fock_cutoff: cutoff,
            components: comps,
        },
        kernel_means,
        offset,
        coefficients,
        t3,
    })
}

/// Device output in the Fock basis.
fn cubic_device_fock(exp: &Experiment, alpha: C64, cutoff: usize) -> Result<CVec> {
    let DeviceModel::CubicPhase(d) = &exp.device else {
        return Err(Error::Config("cubic scenario needs a cubic_phase device".into()));
    };
    if d.input_squeezing == 0.0 {
        return fock_cubic_state(alpha + d.input_displacement, d.gamma, cutoff);
    }
    let v = grid_to_fock(&probe_cubic(&exp.device, alpha)?, cutoff);
    let captured = v.norm_squared();
    if captured < 1.0 - 1e-8 {
        return Err(Error::Convergence(format!(
            "cutoff {cutoff} captures only {captured:.10} of the device output; raise fock_cutoff"
        )));
    }
    Ok(v.unscale(captured.sqrt()))
}

/// `(Σ𝒫 Σκ⟨μ⟩, Σ𝒫 |⟨target|out⟩|²)` at one cutoff.
fn cubic_fock(exp: &Experiment, cutoff: usize) -> Result<(f64, f64)> {
    let gm = gamma(exp)?;
    let base = build_dictionary(DictionaryKind::Cubic { gamma: gm }, C64::new(0.0, 0.0));
    let ops: Vec<CMat> = base
        .observables
        .iter()
        .map(|o| {
            padded_observable(cutoff, |s| {
                let x = s.quadrature(o.angle);
                (1..o.power).fold(x.clone(), |acc, _| &acc * &x)
            })
        })
        .collect();
    let mut e_z = 0.0;
    let mut fid = 0.0;
    for (a, p) in exp.ensemble.iter() {
        let alpha = a[0];
        let out = cubic_device_fock(exp, alpha, cutoff)?;
        let target = fock_cubic_state(alpha, gm, cutoff)?;
        let d = build_dictionary(DictionaryKind::Cubic { gamma: gm }, alpha);
        let mut e = 0.0;
        for (op, c) in ops.iter().zip(&d.coefficients) {
            e += c * fock_expectation(&out, op)?;
        }
        e_z += p * e;
        fid += p * target.dotc(&out).norm_sqr();
    }
    Ok((e_z, fid))
}
