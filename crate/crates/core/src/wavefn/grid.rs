use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, VACUUM_VARIANCE};

/// Grid is rejected when the outer strips hold more than this much mass.
pub const INPUT_TAIL_TOL: f64 = 1e-8;
/// Rotations are rejected when the outer strips hold more than this much mass.
pub const ALIAS_TOL: f64 = 1e-6;
/// Outer strip width as a fraction of the grid (each side).
const BOUNDARY_FRACTION: usize = 32;

/// Uniform position grid `q_j = q_min + j·dq`, `dq = (q_max − q_min)/points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub q_min: f64,
    pub q_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 4096, q_min: -12.0, q_max: 12.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.points.is_power_of_two() || self.points < 64 {
            return Err(Error::Grid(format!(
                "grid size {} must be a power of two ≥ 64",
                self.points
            )));
        }
        if !(self.q_max > self.q_min) || !self.q_min.is_finite() || !self.q_max.is_finite() {
            return Err(Error::Grid("grid extent must satisfy q_min < q_max".into()));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.points as f64
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq()
    }

    pub fn points_iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|j| self.q(j))
    }
}

/// Pure single-mode wavefunction sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    spec: GridSpec,
    samples: Vec<C64>,
}

impl GridWavefunction {
    /// Wraps samples that must already have unit norm (within 1e-9).
    pub fn from_samples(spec: GridSpec, samples: Vec<C64>) -> Result<Self> {
        spec.validate()?;
        if samples.len() != spec.points {
            return Err(Error::Dimension("sample count does not match grid".into()));
        }
        let psi = Self { spec, samples };
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("wavefunction norm {n} differs from 1")));
        }
        Ok(psi)
    }

    /// Samples `f`, checks the grid contains its support and normalizes.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> C64) -> Result<Self> {
        spec.validate()?;
        let samples: Vec<C64> = spec.points_iter().map(f).collect();
        let mut psi = Self { spec, samples };
        let n = psi.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Grid("wavefunction has no mass on the grid".into()));
        }
        let bm = psi.boundary_mass() / n;
        if bm > INPUT_TAIL_TOL {
            return Err(Error::Grid(format!(
                "state support leaks past the grid (edge mass {bm:.2e}); increase the grid extent"
            )));
        }
        let scale = n.sqrt().recip();
        psi.samples.iter_mut().for_each(|s| *s *= scale);
        Ok(psi)
    }

    /// `D(α)|0⟩`, phase matching the Fock expansion `e^{−|α|²/2} Σ αⁿ/√n! |n⟩`.
    pub fn coherent(spec: GridSpec, alpha: C64) -> Result<Self> {
        Self::squeezed_coherent(spec, alpha, 0.0)
    }

    /// `D(α) S(r)|0⟩` with `Var(q) = e^{−2r}/4`.
    pub fn squeezed_coherent(spec: GridSpec, alpha: C64, r: f64) -> Result<Self> {
        let var = VACUUM_VARIANCE * (-2.0 * r).exp();
        let norm = (2.0 * PI * var).powf(-0.25);
        let global = C64::from_polar(1.0, -alpha.re * alpha.im);
        Self::from_fn(spec, |q| {
            let env = norm * (-(q - alpha.re).powi(2) / (4.0 * var)).exp();
            global * C64::from_polar(env, 2.0 * alpha.im * q)
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn dq(&self) -> f64 {
        self.spec.dq()
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dq()
    }

    /// Mass in the outer `1/32` of the grid on both sides.
    pub fn boundary_mass(&self) -> f64 {
        let w = self.samples.len() / BOUNDARY_FRACTION;
        let n = self.samples.len();
        let edge: f64 = self.samples[..w]
            .iter()
            .chain(&self.samples[n - w..])
            .map(|s| s.norm_sqr())
            .sum();
        edge * self.dq()
    }

    /// `⟨q^k⟩`.
    pub fn position_moment(&self, k: i32) -> f64 {
        self.spec
            .points_iter()
            .zip(&self.samples)
            .map(|(q, s)| q.powi(k) * s.norm_sqr())
            .sum::<f64>()
            * self.dq()
    }

    /// `⟨(q cosθ + p sinθ)^k⟩`.
    pub fn quadrature_moment(&self, theta: f64, k: i32) -> Result<f64> {
        Ok(rotate_quadrature(self, theta)?.position_moment(k))
    }

    /// Overlap `⟨self|other⟩`.
    pub fn inner(&self, other: &GridWavefunction) -> C64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum::<C64>() * self.dq()
    }
}

/// Pointwise multiplication by `e^{iγq³}`.
pub fn apply_cubic_phase(psi: &GridWavefunction, gamma: f64) -> GridWavefunction {
    let samples = psi
        .spec
        .points_iter()
        .zip(&psi.samples)
        .map(|(q, s)| s * C64::from_polar(1.0, gamma * q * q * q))
        .collect();
    GridWavefunction { spec: psi.spec, samples }
}

/// Splits `θ ∈ (−π, π]` into steps with `|φ| ∈ [π/4, 3π/4]`.
fn rotation_steps(theta: f64) -> Vec<f64> {
    let t = theta.rem_euclid(2.0 * PI);
    let t = if t > PI { t - 2.0 * PI } else { t };
    if t.abs() < 1e-15 {
        return vec![];
    }
    let a = t.abs();
    let sgn = t.signum();
    if (FRAC_PI_4..=3.0 * FRAC_PI_4).contains(&a) {
        vec![t]
    } else {
        // Remainder lands in [π/4, 3π/4] in absolute value.
        vec![sgn * FRAC_PI_2, t - sgn * FRAC_PI_2]
    }
}

/// One fractional Fourier step via chirp–convolution–chirp.
///
/// `ψ_φ(x) = A Σ_y exp(i[(x² + y²)cotφ − 2xy cscφ]) ψ(y) dq`,
/// `A = √((1 − i cotφ)/π)`, rewritten as a linear convolution with
/// `exp(i cscφ (x − y)²)` which is evaluated by zero-padded FFT.
fn chirp_step(spec: &GridSpec, input: &[C64], phi: f64) -> Vec<C64> {
    let n = input.len();
    let dq = spec.dq();
    let (c, s) = (phi.cos() / phi.sin(), 1.0 / phi.sin());
    let pre = c - s;
    let amp = ((C64::new(1.0, -c)) / PI).sqrt() * dq;

    let len = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut g = vec![C64::new(0.0, 0.0); len];
    for (j, (gj, &v)) in g.iter_mut().zip(input).enumerate() {
        let y = spec.q(j);
        *gj = v * C64::from_polar(1.0, pre * y * y);
    }
    let mut h = vec![C64::new(0.0, 0.0); len];
    for m in 0..n {
        let d = m as f64 * dq;
        let w = C64::from_polar(1.0, s * d * d);
        h[m] = w;
        if m > 0 {
            h[len - m] = w;
        }
    }
    fwd.process(&mut g);
    fwd.process(&mut h);
    for (a, b) in g.iter_mut().zip(&h) {
        *a *= b;
    }
    inv.process(&mut g);
    let scale = 1.0 / len as f64;
    (0..n)
        .map(|j| {
            let x = spec.q(j);
            g[j] * scale * amp * C64::from_polar(1.0, pre * x * x)
        })
        .collect()
}

/// Wavefunction in the representation of `q cosθ + p sinθ`.
pub fn rotate_quadrature(psi: &GridWavefunction, theta: f64) -> Result<GridWavefunction> {
    if !theta.is_finite() {
        return Err(Error::Domain("rotation angle must be finite".into()));
    }
    let mut samples = psi.samples.clone();
    for phi in rotation_steps(theta) {
        samples = chirp_step(&psi.spec, &samples, phi);
    }
    let out = GridWavefunction { spec: psi.spec, samples };
    let (n_in, n_out) = (psi.norm(), out.norm());
    let bm = out.boundary_mass();
    if bm > ALIAS_TOL || (n_out - n_in).abs() > ALIAS_TOL {
        return Err(Error::Grid(format!(
            "rotated state aliases on the grid (edge mass {bm:.2e}, norm change {:.2e}); increase grid extent or resolution",
            n_out - n_in
        )));
    }
    Ok(out)
}

/// Inverse-CDF sampler for one quadrature of a grid state.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    q_min: f64,
    dq: f64,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    pub fn new(psi: &GridWavefunction, theta: f64) -> Result<Self> {
        let rotated = rotate_quadrature(psi, theta)?;
        let dq = rotated.dq();
        let dens: Vec<f64> = rotated.samples.iter().map(|s| s.norm_sqr()).collect();
        let mut cdf = Vec::with_capacity(dens.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in dens.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dq;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Numeric("quadrature density has no mass".into()));
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { q_min: rotated.spec.q_min, dq, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (lo, hi) = (self.cdf[j], self.cdf[j + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        self.q_min + (j as f64 + frac) * self.dq
    }
}

pub fn quadrature_pdf_and_sample<R: Rng + ?Sized>(
    psi: &GridWavefunction,
    theta: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let sampler = QuadratureSampler::new(psi, theta)?;
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}
