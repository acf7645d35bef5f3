//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use rand::Rng;

use cvwit::channels::{probe_cubic, probe_gaussian, CubicDevice, DeviceModel, ProbeEnsemble};
use cvwit::estimators::{
    run_sampler, DictionarySampler, GridSource, IndexDistribution, Kernel, MomPlan, MomentSampler, QuadratureSource,
    ShotSampler,
};
use cvwit::gaussian::{
    apply_unitary, coherent_state, exact_overlap_traces, overlap_pure, GaussianState, GaussianUnitary,
};
use cvwit::harness::{
    run_benchmark_amplifier, run_benchmark_cubic, run_benchmark_gaussian, run_certify_state, run_oracle, run_plan,
    write_batches_csv, ExperimentConfig,
};
use cvwit::measurement::gamma_max;
use cvwit::planner::{
    amplifier_set_bound_with_gain, chi_channel_bound, chi_state_bound, cubic_set_bound, plan_channel, plan_state,
    x_bound,
};
use cvwit::rng::{stream, StreamRng};
use cvwit::symplectic::{euler_decompose, random_symplectic, williamson_euler, SymplecticMatrix};
use cvwit::wavefn::{fock_cubic_state, fock_expectation, padded_observable, CMat, FockOperatorSet, GridSpec};
use cvwit::witnesses::{
    build_dictionary, witness_gaussian_channel, witness_gaussian_state, DictionaryKind, CUBIC_ANGLES,
};
use cvwit::{Mat, Vector, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> StreamRng {
    stream(seed, 0xacce)
}

fn random_unitary(m: usize, xi: f64, disp: f64, r: &mut StreamRng) -> GaussianUnitary {
    let s = random_symplectic(m, xi, r).unwrap();
    let d = Vector::from_fn(2 * m, |_, _| r.random_range(-disp..disp));
    GaussianUnitary::new(s, d).unwrap()
}

fn random_device(target: &GaussianUnitary, r: &mut StreamRng) -> DeviceModel {
    let m = target.modes();
    match r.random_range(0..5) {
        0 => DeviceModel::IdealGaussian { target: target.clone() },
        1 => DeviceModel::LossyGaussian { target: target.clone(), eta: r.random_range(0.3..0.99) },
        2 => DeviceModel::ThermalGaussian { target: target.clone(), nbar: r.random_range(0.01..0.5) },
        3 => DeviceModel::MiscalibratedGaussian { actual: random_unitary(m, 1.0, 1.0, r) },
        _ => {
            let kick = GaussianUnitary::displacement(
                &(0..m).map(|_| c(r.random_range(-0.3..0.3), r.random_range(-0.3..0.3))).collect::<Vec<_>>(),
            );
            DeviceModel::MiscalibratedGaussian { actual: target.then(&kick).unwrap() }
        }
    }
}

fn state_distance(a: &GaussianState, b: &GaussianState) -> f64 {
    let dx = (a.mean() - b.mean()).amax();
    let dv = (a.covariance() - b.covariance()).amax();
    dx.max(dv)
}

/// 1. `W ≤ F` and `W = 1` exactly when the output is the target.
fn soundness() -> Outcome {
    let mut r = rng(1);
    let mut worst = f64::NEG_INFINITY;
    let mut iff_bad = 0;
    let mut ideal = 0;
    let trials = 240;
    for i in 0..trials {
        let m = 1 + i % 4;
        let u = random_unitary(m, 1.0, 1.0, &mut r);
        let target = apply_unitary(&u, &GaussianState::vacuum(m)).unwrap();
        let dev = random_device(&u, &mut r);
        let prep = probe_gaussian(&dev, &vec![c(0.0, 0.0); m]).unwrap();
        let w = witness_gaussian_state(&target, exact_overlap_traces(&target, &prep).unwrap()).unwrap().value;
        let f = overlap_pure(&target, &prep).unwrap();
        worst = worst.max(w - f);
        let same = state_distance(&target, &prep) <= 1e-9;
        ideal += same as usize;
        if same != ((w - 1.0).abs() <= 1e-9) {
            iff_bad += 1;
        }
        // the channel form on a two-probe ensemble
        let ens = ProbeEnsemble::uniform(vec![
            (0..m).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect(),
            vec![c(0.0, 0.0); m],
        ])
        .unwrap();
        let mut e_x = 0.0;
        let mut e_chi = 0.0;
        let mut fbar = 0.0;
        for (a, p) in ens.iter() {
            let t = apply_unitary(&u, &coherent_state(a)).unwrap();
            let o = probe_gaussian(&dev, a).unwrap();
            let tr = exact_overlap_traces(&t, &o).unwrap();
            e_x += p * tr.t1;
            e_chi += p * tr.t2;
            fbar += p * overlap_pure(&t, &o).unwrap();
        }
        let wc = witness_gaussian_channel(&u, &ens, e_x, e_chi).unwrap().value;
        worst = worst.max(wc - fbar);
        if same != ((wc - 1.0).abs() <= 1e-9) {
            iff_bad += 1;
        }
    }
    outcome(
        worst <= 1e-9 && iff_bad == 0 && ideal > 0,
        format!("{trials} targets, max(W − F) = {worst:.3e}, iff violations = {iff_bad}, ideal devices = {ideal}"),
    )
}

/// 2. Vacuum-target closed forms.
fn closed_cases() -> Outcome {
    let mut err: f64 = 0.0;
    for beta in [c(0.5, 0.0), c(0.3, -0.4), c(1.0, 1.0), c(0.0, 0.05)] {
        for m in 1..=3 {
            let mut amps = vec![c(0.0, 0.0); m];
            amps[m - 1] = beta;
            let target = GaussianState::vacuum(m);
            let prep = coherent_state(&amps);
            let w = witness_gaussian_state(&target, exact_overlap_traces(&target, &prep).unwrap()).unwrap().value;
            let f = overlap_pure(&target, &prep).unwrap();
            err = err.max((w - (1.0 - beta.norm_sqr())).abs()).max((f - (-beta.norm_sqr()).exp()).abs());
        }
    }
    for nbar in [0.05, 0.3, 1.0] {
        for m in 1..=4 {
            let target = GaussianState::vacuum(m);
            let prep = GaussianState::thermal(m, nbar).unwrap();
            let w = witness_gaussian_state(&target, exact_overlap_traces(&target, &prep).unwrap()).unwrap().value;
            let f = overlap_pure(&target, &prep).unwrap();
            err = err
                .max((w - (1.0 - m as f64 * nbar)).abs())
                .max((f - (1.0 + nbar).powi(-(m as i32))).abs());
        }
    }
    outcome(err <= 1e-9, format!("max deviation {err:.3e}"))
}

/// A sampler with its exact mean and its second-moment bound.
struct Fixture {
    name: String,
    sampler: Box<dyn ShotSampler>,
    mean: f64,
    bound: f64,
}

fn state_fixtures(out: &mut Vec<Fixture>) {
    let mut r = rng(3);
    let cases: Vec<(GaussianUnitary, DeviceModel)> = {
        let t1 = GaussianUnitary::displacement(&[c(0.4, -0.2)]);
        let t2 = random_unitary(2, 0.5, 0.8, &mut r);
        let t3 = random_unitary(3, 0.3, 0.6, &mut r);
        let d2 = DeviceModel::MiscalibratedGaussian { actual: random_unitary(2, 0.5, 0.8, &mut r) };
        vec![
            (t1.clone(), DeviceModel::ThermalGaussian { target: t1, nbar: 0.3 }),
            (t2, d2),
            (t3.clone(), DeviceModel::LossyGaussian { target: t3, eta: 0.8 }),
        ]
    };
    for (i, (u, dev)) in cases.into_iter().enumerate() {
        let m = u.modes();
        let target = apply_unitary(&u, &GaussianState::vacuum(m)).unwrap();
        let prep = probe_gaussian(&dev, &vec![c(0.0, 0.0); m]).unwrap();
        let tr = exact_overlap_traces(&target, &prep).unwrap();
        let s = williamson_euler(target.covariance()).unwrap().s();
        let e_max = prep.mode_energies().into_iter().fold(0.0, f64::max);
        out.push(Fixture {
            name: format!("chi/state{i}"),
            sampler: Box::new(MomentSampler::state(Kernel::Chi, &target, &prep).unwrap()),
            mean: tr.t2,
            bound: chi_state_bound(m, s, e_max, target.mean().norm_squared()),
        });
        out.push(Fixture {
            name: format!("X/state{i}"),
            sampler: Box::new(MomentSampler::state(Kernel::X, &target, &prep).unwrap()),
            mean: tr.t1,
            bound: x_bound(m, s, gamma_max(&prep)),
        });
    }
}

fn channel_fixtures(out: &mut Vec<Fixture>) {
    let mut r = rng(4);
    let id = GaussianUnitary::identity(1);
    let sq = GaussianUnitary::from_symplectic(SymplecticMatrix::squeezer(1, 0, 0.3).unwrap());
    let bs = GaussianUnitary::from_symplectic(SymplecticMatrix::beamsplitter(2, 0, 1, 0.7).unwrap());
    let cases = vec![
        (
            id.clone(),
            DeviceModel::LossyGaussian { target: id, eta: 0.64 },
            ProbeEnsemble::uniform(vec![vec![c(1.0, 0.0)], vec![c(0.0, 1.0)]]).unwrap(),
        ),
        (
            sq.clone(),
            DeviceModel::ThermalGaussian { target: sq, nbar: 0.2 },
            ProbeEnsemble::new(vec![vec![c(0.0, 0.0)], vec![c(0.5, 0.5)]], vec![0.3, 0.7]).unwrap(),
        ),
        (
            bs,
            DeviceModel::MiscalibratedGaussian { actual: random_unitary(2, 0.3, 0.3, &mut r) },
            ProbeEnsemble::uniform(vec![vec![c(0.5, 0.0), c(0.0, -0.5)], vec![c(-0.3, 0.2), c(0.4, 0.4)]]).unwrap(),
        ),
    ];
    for (i, (u, dev, ens)) in cases.into_iter().enumerate() {
        let m = u.modes();
        let outs: Vec<GaussianState> = ens.amplitudes().iter().map(|a| probe_gaussian(&dev, a).unwrap()).collect();
        let targets: Vec<GaussianState> =
            ens.amplitudes().iter().map(|a| apply_unitary(&u, &coherent_state(a)).unwrap()).collect();
        let (mut e_x, mut e_chi) = (0.0, 0.0);
        for (k, p) in ens.priors().iter().enumerate() {
            let tr = exact_overlap_traces(&targets[k], &outs[k]).unwrap();
            e_x += p * tr.t1;
            e_chi += p * tr.t2;
        }
        let s = euler_decompose(u.symplectic()).unwrap().s();
        let emax = |v: &[GaussianState]| v.iter().flat_map(|x| x.mode_energies()).fold(0.0, f64::max);
        let g = outs.iter().map(gamma_max).fold(0.0, f64::max);
        out.push(Fixture {
            name: format!("chi_c/channel{i}"),
            sampler: Box::new(MomentSampler::channel(Kernel::ChiC, &u, &ens, outs.clone()).unwrap()),
            mean: e_chi,
            bound: chi_channel_bound(m, s, emax(&targets), emax(&outs)),
        });
        out.push(Fixture {
            name: format!("X_c/channel{i}"),
            sampler: Box::new(MomentSampler::channel(Kernel::XC, &u, &ens, outs).unwrap()),
            mean: e_x,
            bound: x_bound(m, s, g),
        });
    }
}

fn amplifier_fixtures(out: &mut Vec<Fixture>) {
    let cases = vec![
        (2.0, DeviceModel::Amplifier { gain: 2.0, added_noise: 0.0 }, vec![c(1.0, 1.0)], vec![1.0]),
        (1.5, DeviceModel::Amplifier { gain: 1.5, added_noise: 0.3 }, vec![c(0.5, 0.0), c(0.0, -0.5)], vec![0.5, 0.5]),
        (
            2.0,
            DeviceModel::IdealGaussian { target: GaussianUnitary::identity(1) },
            vec![c(0.3, 0.7), c(-0.2, 0.1)],
            vec![0.8, 0.2],
        ),
    ];
    for (i, (g, dev, amps, priors)) in cases.into_iter().enumerate() {
        let ens = ProbeEnsemble::new(amps.iter().map(|a| vec![*a]).collect(), priors).unwrap();
        let outs: Vec<GaussianState> = amps.iter().map(|a| probe_gaussian(&dev, &[*a]).unwrap()).collect();
        let kind = DictionaryKind::Amplifier { gain: g };
        let mut mean = 0.0;
        let mut r_max: f64 = 0.0;
        for ((a, p), o) in ens.iter().zip(&outs) {
            let d = build_dictionary(kind, a[0]);
            mean += p * d.expectation(|ob| o.quadrature_moment(0, ob.angle, ob.power));
            for ob in &d.observables {
                r_max = r_max.max(o.quadrature_moment(0, ob.angle, 2 * ob.power));
            }
        }
        let s = amplifier_set_bound_with_gain(&ens, g);
        let sources = outs.into_iter().map(|o| Box::new(o) as Box<dyn QuadratureSource>).collect();
        out.push(Fixture {
            name: format!("zeta/amp{i}"),
            sampler: Box::new(DictionarySampler::new(kind, &ens, sources).unwrap()),
            mean,
            bound: s * s * r_max,
        });
    }
}

/// `Σκ⟨μ⟩` from the Fock basis for a displaced cubic device.
fn fock_e_z(gamma: f64, gamma_dev: f64, shift: C64, ens: &ProbeEnsemble) -> f64 {
    let n = 80;
    let base = build_dictionary(DictionaryKind::Cubic { gamma }, c(0.0, 0.0));
    let ops: Vec<CMat> = base
        .observables
        .iter()
        .map(|o| {
            padded_observable(n, |s| {
                let x = s.quadrature(o.angle);
                (1..o.power).fold(x.clone(), |acc, _| &acc * &x)
            })
        })
        .collect();
    ens.iter()
        .map(|(a, p)| {
            let psi = fock_cubic_state(a[0] + shift, gamma_dev, n).unwrap();
            let d = build_dictionary(DictionaryKind::Cubic { gamma }, a[0]);
            p * ops.iter().zip(&d.coefficients).map(|(op, k)| k * fock_expectation(&psi, op).unwrap()).sum::<f64>()
        })
        .sum()
}

fn cubic_fixtures(out: &mut Vec<Fixture>) {
    let cases = vec![
        (0.1, 0.1, c(0.0, 0.0), ProbeEnsemble::single(vec![c(0.0, 0.0)]).unwrap()),
        (0.1, 0.0, c(0.0, 0.0), ProbeEnsemble::single(vec![c(0.0, 0.0)]).unwrap()),
        (
            0.1,
            0.08,
            c(0.05, -0.05),
            ProbeEnsemble::new(vec![vec![c(0.0, 0.0)], vec![c(0.3, 0.2)]], vec![0.3, 0.7]).unwrap(),
        ),
    ];
    for (i, (gamma, gamma_dev, shift, ens)) in cases.into_iter().enumerate() {
        let dev = DeviceModel::CubicPhase(CubicDevice {
            gamma: gamma_dev,
            input_displacement: shift,
            input_squeezing: 0.0,
            grid: GridSpec::default(),
        });
        let psis: Vec<_> = ens.amplitudes().iter().map(|a| probe_cubic(&dev, a[0]).unwrap()).collect();
        let mut q_max: f64 = 0.0;
        let dict = build_dictionary(DictionaryKind::Cubic { gamma }, c(0.0, 0.0));
        for psi in &psis {
            q_max = q_max.max(psi.position_moment(8));
            for o in &dict.observables {
                q_max = q_max.max(psi.quadrature_moment(o.angle, 2 * o.power as i32).unwrap());
            }
        }
        let s = cubic_set_bound(gamma, &ens);
        let sources = psis
            .iter()
            .map(|p| Box::new(GridSource::new(p, &CUBIC_ANGLES).unwrap()) as Box<dyn QuadratureSource>)
            .collect();
        out.push(Fixture {
            name: format!("Z/cubic{i}"),
            sampler: Box::new(DictionarySampler::new(DictionaryKind::Cubic { gamma }, &ens, sources).unwrap()),
            mean: fock_e_z(gamma, gamma_dev, shift, &ens),
            bound: s * s * q_max,
        });
    }
}

fn all_fixtures() -> Vec<Fixture> {
    let mut f = Vec::new();
    state_fixtures(&mut f);
    channel_fixtures(&mut f);
    amplifier_fixtures(&mut f);
    cubic_fixtures(&mut f);
    f
}

struct Moments {
    mean: f64,
    se_mean: f64,
    second: f64,
    se_second: f64,
}

fn moments(s: &dyn ShotSampler, n: usize, seed: u64) -> Moments {
    let mut r = stream(seed, 0x5eed);
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let y = s.draw(&mut r).value;
        s1 += y;
        s2 += y * y;
        s4 += y.powi(4);
    }
    let nf = n as f64;
    let (m1, m2, m4) = (s1 / nf, s2 / nf, s4 / nf);
    Moments {
        mean: m1,
        se_mean: ((m2 - m1 * m1).max(0.0) / nf).sqrt(),
        second: m2,
        se_second: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
    }
}

const SHOTS: usize = 200_000;

/// 3. Each kernel's sample mean within 5 standard errors of the exact value.
fn unbiasedness(fixtures: &[Fixture], stats: &[Moments]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    let mut kernels = std::collections::BTreeMap::new();
    for (f, m) in fixtures.iter().zip(stats) {
        *kernels.entry(f.sampler.kernel().name()).or_insert(0) += 1;
        let z = (m.mean - f.mean).abs() / m.se_mean.max(1e-300);
        let z = if m.se_mean == 0.0 && (m.mean - f.mean).abs() < 1e-12 { 0.0 } else { z };
        if z > worst {
            worst = z;
            worst_name = f.name.clone();
        }
    }
    let covered = kernels.len() == 6 && kernels.values().all(|&n| n >= 3);
    outcome(
        worst <= 5.0 && covered,
        format!("{} fixtures × {SHOTS} shots, worst |z| = {worst:.2} ({worst_name})", fixtures.len()),
    )
}

/// 4. `E(χ²)` equality on a dense target and every empirical second moment below its bound.
fn variance_chain(fixtures: &[Fixture], stats: &[Moments]) -> Outcome {
    let mut r = rng(5);
    let m = 2;
    // a generic target: dense V⁻¹
    let (u, dist) = loop {
        let u = random_unitary(m, 0.6, 0.8, &mut r);
        let v = apply_unitary(&u, &GaussianState::vacuum(m)).unwrap();
        let d = IndexDistribution::for_covariance(v.covariance()).unwrap();
        if d.inverse().iter().all(|x| x.abs() > 1e-3) {
            break (u, d);
        }
    };
    let target = apply_unitary(&u, &GaussianState::vacuum(m)).unwrap();
    let prep = probe_gaussian(&DeviceModel::ThermalGaussian { target: u.clone(), nbar: 0.25 }, &[c(0.0, 0.0); 2])
        .unwrap()
        .clone();
    let prep = GaussianState::new(prep.mean() + Vector::from_column_slice(&[0.1, -0.2, 0.05, 0.3]), prep.covariance().clone())
        .unwrap();
    let exact = prep.second_moments().trace() * target.mean().norm_squared() * dist.frobenius_sq();
    let sampler = MomentSampler::state(Kernel::Chi, &target, &prep).unwrap();
    let mm = moments(&sampler, 400_000, 77);
    let z_eq = (mm.second - exact) / mm.se_second;

    let mut worst = f64::NEG_INFINITY;
    let mut worst_name = String::new();
    for (f, s) in fixtures.iter().zip(stats) {
        let excess = (s.second - f.bound) / s.se_second.max(1e-300);
        if excess > worst {
            worst = excess;
            worst_name = f.name.clone();
        }
    }
    outcome(
        z_eq.abs() <= 5.0 && worst <= 5.0,
        format!(
            "E(χ²) = {:.5} vs Tr(Γ)‖x‖²‖V⁻¹‖² = {exact:.5} (z = {z_eq:.2}); max (E(Y²) − bound)/SE = {worst:.1} ({worst_name})",
            mm.second
        ),
    )
}

/// 5. Median-of-means failure rate.
fn mom_guarantee() -> Outcome {
    let start = Instant::now();
    let (eps, delta) = (0.1, 0.05);
    let target = coherent_state(&[c(0.3, 0.2)]);
    let prep = GaussianState::new(target.mean().clone(), Mat::identity(2, 2) * 0.35).unwrap();
    let sampler = MomentSampler::state(Kernel::Chi, &target, &prep).unwrap();
    let exact = exact_overlap_traces(&target, &prep).unwrap().t2;
    // diagonal V⁻¹: only (k,k) entries are drawn
    let g = prep.second_moments();
    let x = target.mean();
    let second = sampler.distribution().frobenius_sq() * (0..2).map(|k| g[(k, k)] * x[k] * x[k]).sum::<f64>();
    let var = second - exact * exact;
    let plan = MomPlan::new(eps, delta, var).unwrap();
    let reps = 400;
    let failures = (0..reps)
        .filter(|&rep| (run_sampler(&sampler, plan, eps, delta, 1000 + rep).estimate - exact).abs() > eps)
        .count();
    let frac = failures as f64 / reps as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        frac <= 2.0 * delta && secs < 60.0,
        format!(
            "B = {}, n = {}, failures {failures}/{reps} = {frac:.4}, {secs:.1} s",
            plan.batches, plan.per_batch
        ),
    )
}

fn cubic_cfg(gamma_actual: f64) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"scenario": "cubic", "gamma": 0.1, "device": {{"kind": "cubic_phase", "gamma": {gamma_actual}}},
            "ensemble": {{"amplitudes": [[[0, 0]]]}}, "epsilon": 0.05, "delta": 0.05, "seed": 606}}"#
    ))
    .unwrap()
}

/// 6. Ideal cubic gate saturates the witness.
fn cubic_saturation() -> Outcome {
    let cfg = cubic_cfg(0.1);
    let o = match run_oracle(&cfg) {
        Ok(r) => r.oracle.unwrap(),
        Err(e) => return outcome(false, format!("oracle error: {e}")),
    };
    let r = run_benchmark_cubic(&cfg).unwrap();
    let w = r.witness.unwrap().value;
    outcome(
        (o.witness - 1.0).abs() <= 1e-6 && (w - 1.0).abs() <= 0.05,
        format!("Fock W = {:.9} (cutoff {}), sampled Ŵ = {w:.4}", o.witness, o.fock_cutoff.unwrap()),
    )
}

/// 7. γ_actual = 0 against γ = 0.1.
fn cubic_mismatch() -> Outcome {
    let gamma: f64 = 0.1;
    let closed = 1.0 - 27.0 * gamma * gamma / 16.0;
    let cfg = cubic_cfg(0.0);
    let o = run_oracle(&cfg).unwrap().oracle.unwrap();
    let r = run_benchmark_cubic(&cfg).unwrap();
    let w = r.witness.unwrap().value;
    let fock_ok = (o.witness - closed).abs() <= 1e-6;
    let sampled_ok = (w - closed).abs() <= 0.05;
    outcome(
        fock_ok && sampled_ok,
        format!(
            "closed form {closed:.6}, Fock oracle {:.6} (|Δ| = {:.2e}, needs 1e-6), sampled Ŵ = {w:.4} (within ε: {sampled_ok})",
            o.witness,
            (o.witness - closed).abs()
        ),
    )
}

/// 8. Planner scaling: m⁴, ln(2/Δ), prior independence.
fn scaling() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for m in [1, 2, 3] {
        let a = plan_channel(0.1, 0.05, m, 1.3, 2.0, 1.5, 0.8).unwrap();
        let b = plan_channel(0.1, 0.05, 2 * m, 1.3, 2.0, 1.5, 0.8).unwrap();
        for name in ["chi_c", "X_c"] {
            let ratio = b.estimator(name).unwrap().n_unrounded / a.estimator(name).unwrap().n_unrounded;
            ok &= ratio == 16.0;
        }
        let sa = plan_state(0.1, 0.05, m, 1.3, 2.0, 0.8, 1.0).unwrap();
        let sb = plan_state(0.1, 0.05, 2 * m, 1.3, 2.0, 0.8, 1.0).unwrap();
        ok &= sb.estimator("X").unwrap().n_unrounded / sa.estimator("X").unwrap().n_unrounded == 16.0;
    }
    notes.push("m→2m ratio 16 exact".to_string());
    let per = |d: f64| {
        let b = plan_channel(0.1, d, 2, 1.3, 2.0, 1.5, 0.8).unwrap();
        let e = b.estimator("chi_c").unwrap();
        (e.batches, e.n_unrounded / e.batches as f64)
    };
    let (_, unit) = per(0.05);
    for d in [0.2, 0.05, 0.01, 1e-3, 1e-6] {
        let (bt, u) = per(d);
        ok &= bt == (2.0 * (4.0 / d).ln()).ceil() as usize && (u - unit).abs() <= 1e-9 * unit;
    }
    notes.push("B = ⌈2 ln(2/(Δ/2))⌉ with fixed per-batch size".into());
    let base = r#"{"scenario": "gaussian_channel",
        "target": {"gates": [{"gate": "squeezer", "mode": 0, "xi": 0.4}, {"gate": "beamsplitter", "modes": [0, 1], "theta": 0.6}]},
        "device": {"kind": "lossy_gaussian", "eta": 0.9},
        "ensemble": {"amplitudes": [[[0, 0], [0.5, 0]], [[1, -1], [0, 0.3]], [[0.2, 0.2], [0.1, 0]]] PRIORS},
        "epsilon": 0.05, "delta": 0.05, "seed": 8}"#;
    let budgets: Vec<String> = ["", r#", "priors": [0.2, 0.3, 0.5]"#, r#", "priors": [0.9, 0.05, 0.05]"#]
        .iter()
        .map(|p| {
            let cfg = ExperimentConfig::from_json(&base.replace("PRIORS", p)).unwrap();
            serde_json::to_string(&run_plan(&cfg).unwrap()).unwrap()
        })
        .collect();
    let same = budgets.iter().all(|b| b == &budgets[0]);
    ok &= same;
    notes.push(format!("budgets identical across 3 priors: {same}"));
    outcome(ok, notes.join("; "))
}

/// 9. Byte-identical reports at 1, 4 and 8 threads.
fn determinism() -> Outcome {
    let configs = [
        r#"{"scenario": "gaussian_state", "device": {"kind": "thermal_gaussian", "nbar": 0.3},
            "target": {"gates": [{"gate": "squeezer", "mode": 0, "xi": 0.3}]}, "epsilon": 0.1, "delta": 0.05, "seed": 42}"#,
        r#"{"scenario": "gaussian_channel", "device": {"kind": "lossy_gaussian", "eta": 0.64},
            "ensemble": {"amplitudes": [[[1, 0]], [[0, 0.5]]]}, "epsilon": 0.1, "delta": 0.05, "seed": 43}"#,
        r#"{"scenario": "amplifier", "gain": 2.0, "device": {"kind": "amplifier", "gain": 2.0, "added_noise": 0.5},
            "ensemble": {"amplitudes": [[[1, 1]]]}, "epsilon": 0.2, "delta": 0.05, "seed": 44}"#,
        r#"{"scenario": "cubic", "gamma": 0.1, "device": {"kind": "cubic_phase", "gamma": 0.1},
            "ensemble": {"amplitudes": [[[0, 0]], [[0.3, 0]]]}, "epsilon": 0.1, "delta": 0.05, "seed": 45}"#,
    ];
    let mut ok = true;
    for text in configs {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let outputs: Vec<(String, Vec<u8>)> = [1, 4, 8]
            .iter()
            .map(|&t| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| {
                    let r = match cfg.scenario {
                        cvwit::witnesses::Scenario::GaussianState => run_certify_state(&cfg),
                        cvwit::witnesses::Scenario::GaussianChannel => run_benchmark_gaussian(&cfg),
                        cvwit::witnesses::Scenario::Amplifier => run_benchmark_amplifier(&cfg),
                        cvwit::witnesses::Scenario::Cubic => run_benchmark_cubic(&cfg),
                    }
                    .unwrap();
                    let mut csv = Vec::new();
                    write_batches_csv(&r, &mut csv).unwrap();
                    (r.to_json(), csv)
                })
            })
            .collect();
        ok &= outputs.iter().all(|o| o == &outputs[0]);
    }
    outcome(ok, "4 scenarios, JSON report and batch CSV compared at 1/4/8 threads")
}

/// 10. Cubic-gate conjugation and the dictionary expansion as truncated matrices.
fn operator_identities() -> Outcome {
    let gamma = 0.1;
    let n = 160;
    let block = 12;
    let o = FockOperatorSet::new(n);
    let u = cvwit::wavefn::expm(&(padded_observable(n, |s| &s.q * &s.q * &s.q) * c(0.0, gamma)));
    let ud = u.adjoint();
    let q2 = padded_observable(n, |s| &s.q * &s.q);
    let blk = |m: &CMat| m.view((0, 0), (block, block)).into_owned();
    let max_abs = |m: &CMat| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // U† q U = q, U† p U = p + (3γ/2) q²
    let e1 = max_abs(&(blk(&(&ud * &o.q * &u)) - blk(&o.q)));
    let rhs = &o.p + &q2 * c(1.5 * gamma, 0.0);
    let e2 = max_abs(&(blk(&(&ud * &o.p * &u)) - blk(&rhs)));
    // Σκ μ = (q − Re α)² + (p − (3γ/2)q² − Im α)² − |α|², and it equals U[(q−a)² + (p−b)²]U† − |α|²
    let mut e3: f64 = 0.0;
    let mut e4: f64 = 0.0;
    for alpha in [c(0.0, 0.0), c(0.3, -0.2), c(-0.5, 0.4)] {
        let (a, b) = (alpha.re, alpha.im);
        let d = build_dictionary(DictionaryKind::Cubic { gamma }, alpha);
        let id = |s: &FockOperatorSet| s.identity();
        let lhs = padded_observable(n, |s| {
            d.observables.iter().zip(&d.coefficients).fold(CMat::zeros(s.cutoff, s.cutoff), |acc, (ob, k)| {
                let x = s.quadrature(ob.angle);
                let pw = (1..ob.power).fold(x.clone(), |m, _| &m * &x);
                acc + pw * c(*k, 0.0)
            })
        });
        let rhs = padded_observable(n, |s| {
            let qa = &s.q - id(s) * c(a, 0.0);
            let pb = &s.p - &s.q * &s.q * c(1.5 * gamma, 0.0) - id(s) * c(b, 0.0);
            &qa * &qa + &pb * &pb - id(s) * c(a * a + b * b, 0.0)
        });
        e3 = e3.max(max_abs(&(&lhs - &rhs)) / (1.0 + max_abs(&rhs)));
        let inner = padded_observable(n, |s| {
            let qa = &s.q - id(s) * c(a, 0.0);
            let pb = &s.p - id(s) * c(b, 0.0);
            &qa * &qa + &pb * &pb
        });
        let conj = &u * &inner * &ud - CMat::identity(n, n) * c(a * a + b * b, 0.0);
        e4 = e4.max(max_abs(&(blk(&conj) - blk(&rhs))));
    }
    let worst = e1.max(e2).max(e3).max(e4);
    outcome(
        worst <= 1e-6,
        format!("U†qU {e1:.1e}, U†pU {e2:.1e}, dictionary expansion {e3:.1e}, conjugated form {e4:.1e}"),
    )
}

fn main() {
    let start = Instant::now();
    let fixtures = all_fixtures();
    let stats: Vec<Moments> =
        fixtures.iter().enumerate().map(|(i, f)| moments(f.sampler.as_ref(), SHOTS, 300 + i as u64)).collect();

    type Check<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("witness soundness", Box::new(soundness)),
        ("closed-case values", Box::new(closed_cases)),
        ("estimator unbiasedness", Box::new(|| unbiasedness(&fixtures, &stats))),
        ("variance-bound chain", Box::new(|| variance_chain(&fixtures, &stats))),
        ("median-of-means guarantee", Box::new(mom_guarantee)),
        ("cubic-gate saturation", Box::new(cubic_saturation)),
        ("cubic-gate mismatch", Box::new(cubic_mismatch)),
        ("planner scaling", Box::new(scaling)),
        ("determinism", Box::new(determinism)),
        ("operator identities", Box::new(operator_identities)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        println!(
            "criterion {:>2} {:<27} {}  [{:.1} s] {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed in {:.1} s", checks.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
