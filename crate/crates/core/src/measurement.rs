//! Simulated homodyne detection on Gaussian states, including the
//! two-category scheme for second moments.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::gaussian::{normal_moment, GaussianState};
use crate::{Error, Result};

/// One-based quadrature index: odd `k` is `q_{(k+1)/2}`, even `k` is `p_{k/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QuadratureIndex(usize);

impl QuadratureIndex {
    pub fn new(k: usize, modes: usize) -> Result<Self> {
        if k == 0 || k > 2 * modes {
            return Err(Error::Dimension(format!("quadrature index {k} outside 1..={}", 2 * modes)));
        }
        Ok(Self(k))
    }

    /// From a zero-based position in `(q1, p1, q2, ...)`.
    pub fn from_zero_based(i: usize) -> Self {
        Self(i + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 - 1
    }

    /// Zero-based mode.
    pub fn mode(self) -> usize {
        (self.0 - 1) / 2
    }

    pub fn is_position(self) -> bool {
        self.0 % 2 == 1
    }
}

/// True when `(k, l)` are `q_j` and `p_j` of one mode, in either order.
pub fn is_conjugate_pair(k: QuadratureIndex, l: QuadratureIndex) -> bool {
    k.mode() == l.mode() && k != l
}

/// Which observable a same-mode conjugate entry was resolved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubObservable {
    Rotated,
    QSquared,
    PSquared,
}

impl SubObservable {
    /// Weight `c_y` in `qp + pq = 2(q+p)²/2 − q² − p²`.
    pub fn coefficient(self) -> f64 {
        match self {
            SubObservable::Rotated => 1.0,
            SubObservable::QSquared | SubObservable::PSquared => -0.5,
        }
    }

    /// Homodyne angle measured for this sub-observable.
    pub fn angle(self) -> f64 {
        match self {
            SubObservable::Rotated => FRAC_PI_4,
            SubObservable::QSquared => 0.0,
            SubObservable::PSquared => std::f64::consts::FRAC_PI_2,
        }
    }

    const ALL: [SubObservable; 3] = [SubObservable::Rotated, SubObservable::QSquared, SubObservable::PSquared];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentOutcome {
    pub k: QuadratureIndex,
    pub l: QuadratureIndex,
    pub value: f64,
    pub sub_observable: Option<SubObservable>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draw from `N(x_k, V_kk)`.
pub fn homodyne_single<R: Rng + ?Sized>(rho: &GaussianState, k: QuadratureIndex, rng: &mut R) -> f64 {
    let i = k.zero_based();
    rho.mean()[i] + rho.covariance()[(i, i)].sqrt() * normal(rng)
}

/// Draw `q cosθ + p sinθ` of `mode` (zero-based).
pub fn homodyne_rotated<R: Rng + ?Sized>(rho: &GaussianState, mode: usize, theta: f64, rng: &mut R) -> f64 {
    let (mu, var) = rho.quadrature_marginal(mode, theta);
    mu + var.max(0.0).sqrt() * normal(rng)
}

/// Joint draw of `(r_k, r_l)` from two simultaneous homodyne detectors.
pub fn homodyne_pair<R: Rng + ?Sized>(
    rho: &GaussianState,
    k: QuadratureIndex,
    l: QuadratureIndex,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if is_conjugate_pair(k, l) {
        return Err(Error::Contract(format!(
            "({}, {}) are conjugate quadratures of one mode and cannot be measured jointly",
            k.get(),
            l.get()
        )));
    }
    if k == l {
        let r = homodyne_single(rho, k, rng);
        return Ok((r, r));
    }
    let (i, j) = (k.zero_based(), l.zero_based());
    let v = rho.covariance();
    let l11 = v[(i, i)].sqrt();
    let l21 = if l11 > 0.0 { v[(i, j)] / l11 } else { 0.0 };
    let l22 = (v[(j, j)] - l21 * l21).max(0.0).sqrt();
    let (z1, z2) = (normal(rng), normal(rng));
    Ok((rho.mean()[i] + l11 * z1, rho.mean()[j] + l21 * z1 + l22 * z2))
}

/// Single-shot unbiased estimate of `Γ_kl`.
pub fn sample_gamma_entry<R: Rng + ?Sized>(
    rho: &GaussianState,
    k: QuadratureIndex,
    l: QuadratureIndex,
    rng: &mut R,
) -> SecondMomentOutcome {
    if is_conjugate_pair(k, l) {
        let y = SubObservable::ALL[rng.random_range(0..3)];
        let eta = homodyne_rotated(rho, k.mode(), y.angle(), rng);
        SecondMomentOutcome { k, l, value: 3.0 * y.coefficient() * eta * eta, sub_observable: Some(y) }
    } else {
        let (a, b) = homodyne_pair(rho, k, l, rng).expect("non-conjugate pair");
        SecondMomentOutcome { k, l, value: a * b, sub_observable: None }
    }
}

/// Exact `E[value²]` of [`sample_gamma_entry`] for zero-based `(i, j)`.
pub fn gamma_entry_second_moment(rho: &GaussianState, i: usize, j: usize) -> f64 {
    let (k, l) = (QuadratureIndex::from_zero_based(i), QuadratureIndex::from_zero_based(j));
    let x = rho.mean();
    let v = rho.covariance();
    if is_conjugate_pair(k, l) {
        let mode = k.mode();
        let m4 = |theta: f64| rho.quadrature_moment(mode, theta, 4);
        return 3.0 * (m4(FRAC_PI_4) + 0.25 * m4(0.0) + 0.25 * m4(std::f64::consts::FRAC_PI_2));
    }
    let (ma, mb, sa, sb, sab) = (x[i], x[j], v[(i, i)], v[(j, j)], v[(i, j)]);
    ma * ma * mb * mb + ma * ma * sb + mb * mb * sa + sa * sb + 2.0 * sab * sab + 4.0 * ma * mb * sab
}

/// `Γ_max`: largest `E[Γ′_kl²]` over all entries.
pub fn gamma_max(rho: &GaussianState) -> f64 {
    let n = 2 * rho.modes();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| gamma_entry_second_moment(rho, i, j))
        .fold(0.0, f64::max)
}

/// Mean of the rotated quadrature `(q_j + p_j)/√2` (used in tests and docs).
pub fn rotated_mean(rho: &GaussianState, mode: usize) -> f64 {
    (rho.mean()[2 * mode] + rho.mean()[2 * mode + 1]) * FRAC_1_SQRT_2
}

/// Fourth raw moment of a single quadrature, `⟨r_k⁴⟩`.
pub fn quadrature_fourth_moment(rho: &GaussianState, k: QuadratureIndex) -> f64 {
    let i = k.zero_based();
    normal_moment(rho.mean()[i], rho.covariance()[(i, i)], 4)
}
