use nalgebra::{DMatrix, DVector};

use super::grid::GridWavefunction;
use crate::{Error, Result, C64};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const DEFAULT_CUTOFF: usize = 80;
/// Extra levels used when forming operator products, so polynomials up to
/// degree `2·PAD` are exact on the retained levels.
const PAD: usize = 8;
/// Largest population allowed in the top quarter of the retained levels.
const TAIL_TOL: f64 = 1e-10;

fn cz() -> C64 {
    C64::new(0.0, 0.0)
}

/// Ladder and quadrature matrices on levels `0..cutoff`.
#[derive(Debug, Clone)]
pub struct FockOperatorSet {
    pub cutoff: usize,
    pub a: CMat,
    pub ad: CMat,
    pub q: CMat,
    pub p: CMat,
    pub n: CMat,
}

impl FockOperatorSet {
    pub fn new(cutoff: usize) -> Self {
        let mut a = CMat::zeros(cutoff, cutoff);
        for k in 1..cutoff {
            a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let q = (&a + &ad) * C64::new(0.5, 0.0);
        let p = (&a - &ad) * C64::new(0.0, -0.5);
        let n = &ad * &a;
        Self { cutoff, a, ad, q, p, n }
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.cutoff, self.cutoff)
    }

    /// `q cosθ + p sinθ`.
    pub fn quadrature(&self, theta: f64) -> CMat {
        &self.q * C64::new(theta.cos(), 0.0) + &self.p * C64::new(theta.sin(), 0.0)
    }
}

/// Evaluates a polynomial in the ladder operators at a padded cutoff and
/// truncates, so that low-degree products are exact on `0..cutoff`.
pub fn padded_observable(cutoff: usize, f: impl Fn(&FockOperatorSet) -> CMat) -> CMat {
    let big = FockOperatorSet::new(cutoff + PAD);
    f(&big).view((0, 0), (cutoff, cutoff)).into_owned()
}

fn tail_population(state: &CVec) -> f64 {
    let n = state.len();
    state.iter().skip(n - n / 4).map(|c| c.norm_sqr()).sum()
}

/// `D(α)|0⟩` truncated to `cutoff` levels.
pub fn coherent_vector(alpha: C64, cutoff: usize) -> Result<CVec> {
    let mut v = CVec::from_element(cutoff, cz());
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..cutoff {
        v[k] = c;
        c = c * alpha / ((k + 1) as f64).sqrt();
    }
    let missing = 1.0 - v.norm_squared();
    if missing > TAIL_TOL || tail_population(&v) > TAIL_TOL {
        return Err(Error::Convergence(format!(
            "cutoff {cutoff} too small for coherent amplitude |α| = {}",
            alpha.norm()
        )));
    }
    Ok(v)
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(g: &CMat) -> CMat {
    let norm = one_norm(g);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = g * C64::new(0.5f64.powi(s), 0.0);
    let n = g.nrows();
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &b * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// `U(γ) D(α)|0⟩` with `U(γ) = exp(iγq³)`.
pub fn fock_cubic_state(alpha: C64, gamma: f64, cutoff: usize) -> Result<CVec> {
    let coh = coherent_vector(alpha, cutoff)?;
    if gamma == 0.0 {
        return Ok(coh);
    }
    let q3 = padded_observable(cutoff, |o| &o.q * &o.q * &o.q);
    let u = expm(&(q3 * C64::new(0.0, gamma)));
    let out = u * coh;
    if (out.norm() - 1.0).abs() > 1e-8 || tail_population(&out) > TAIL_TOL {
        return Err(Error::Convergence(format!(
            "cubic state with γ = {gamma}, |α| = {} not resolved at cutoff {cutoff}",
            alpha.norm()
        )));
    }
    Ok(out)
}

/// `⟨ψ|A|ψ⟩` in the truncated space.
pub fn fock_expectation(state: &CVec, observable: &CMat) -> Result<f64> {
    if observable.nrows() != state.len() || observable.ncols() != state.len() {
        return Err(Error::Dimension("observable and state dimensions differ".into()));
    }
    if (state.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("Fock state is not normalized".into()));
    }
    let herm = (observable - observable.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if herm > 1e-9 * (1.0 + observable.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
        return Err(Error::Domain("observable is not Hermitian".into()));
    }
    Ok(state.dotc(&(observable * state)).re)
}

/// Expectation at `cutoff` after checking it moves by at most `1e-6` when
/// the cutoff is doubled. Returns the value at the doubled cutoff.
pub fn converged_expectation(
    cutoff: usize,
    state: impl Fn(usize) -> Result<CVec>,
    observable: impl Fn(&FockOperatorSet) -> CMat,
) -> Result<f64> {
    let at = |n: usize| -> Result<f64> { fock_expectation(&state(n)?, &padded_observable(n, &observable)) };
    let lo = at(cutoff)?;
    let hi = at(2 * cutoff)?;
    if (lo - hi).abs() > 1e-6 {
        return Err(Error::Convergence(format!(
            "expectation changed by {:.2e} when doubling cutoff {cutoff}",
            (lo - hi).abs()
        )));
    }
    Ok(hi)
}

/// Projects a grid wavefunction onto the first `cutoff` Hermite functions.
pub fn grid_to_fock(psi: &GridWavefunction, cutoff: usize) -> CVec {
    let spec = psi.spec();
    let dq = spec.dq();
    let mut out = CVec::from_element(cutoff, cz());
    let c0 = (2.0 / std::f64::consts::PI).powf(0.25);
    for (q, s) in spec.points_iter().zip(psi.samples()) {
        let mut prev = 0.0;
        let mut cur = c0 * (-q * q).exp();
        for n in 0..cutoff {
            out[n] += s * (cur * dq);
            let next = (2.0 / (n + 1) as f64).sqrt() * (2f64.sqrt() * q) * cur
                - (n as f64 / (n + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    out
}
