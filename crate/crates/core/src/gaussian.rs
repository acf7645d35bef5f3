//! Gaussian states, unitaries and channels in moment form.

use nalgebra::linalg::SymmetricEigen;

use crate::symplectic::{self, check_symmetric, symplectic_form, SymplecticMatrix, PURITY_TOL};
use crate::{Error, Mat, Result, Vector, C64, VACUUM_VARIANCE};

/// Eigenvalue tolerance for `V + iJ/4 ⪰ 0` and the CP condition.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Smallest eigenvalue of the real embedding of the Hermitian `A + iB`.
fn min_eig_hermitian(a: &Mat, b: &Mat) -> f64 {
    let n = a.nrows();
    let mut big = Mat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((n, n), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(&(-b));
    big.view_mut((n, 0), (n, n)).copy_from(b);
    SymmetricEigen::new(big).eigenvalues.min()
}

fn modes_of(v: &Mat) -> Result<usize> {
    if v.nrows() != v.ncols() || !v.nrows().is_multiple_of(2) || v.nrows() == 0 {
        return Err(Error::Dimension(format!("bad matrix shape {}x{}", v.nrows(), v.ncols())));
    }
    Ok(v.nrows() / 2)
}

/// A Gaussian state: first moments `x` and covariance `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    x: Vector,
    v: Mat,
}

impl GaussianState {
    pub fn new(x: Vector, v: Mat) -> Result<Self> {
        let m = modes_of(&v)?;
        if x.len() != 2 * m {
            return Err(Error::Dimension(format!("mean has length {}, expected {}", x.len(), 2 * m)));
        }
        check_symmetric(&v, 1e-12 * (1.0 + v.amax()))?;
        let v = (&v + v.transpose()) * 0.5;
        let j4 = symplectic_form(m) * VACUUM_VARIANCE;
        if min_eig_hermitian(&v, &j4) < -PHYSICAL_TOL {
            return Err(Error::Domain("covariance violates the uncertainty relation".into()));
        }
        Ok(Self { x, v })
    }

    pub fn vacuum(m: usize) -> Self {
        Self { x: Vector::zeros(2 * m), v: Mat::identity(2 * m, 2 * m) * VACUUM_VARIANCE }
    }

    /// Product of thermal states with mean photon number `nbar` per mode.
    pub fn thermal(m: usize, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::Domain("thermal occupation must be nonnegative".into()));
        }
        Ok(Self { x: Vector::zeros(2 * m), v: Mat::identity(2 * m, 2 * m) * (VACUUM_VARIANCE * (2.0 * nbar + 1.0)) })
    }

    pub fn modes(&self) -> usize {
        self.x.len() / 2
    }

    pub fn mean(&self) -> &Vector {
        &self.x
    }

    pub fn covariance(&self) -> &Mat {
        &self.v
    }

    /// `Γ = V + x xᵀ`.
    pub fn second_moments(&self) -> Mat {
        &self.v + &self.x * self.x.transpose()
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic::symplectic_eigenvalues(&self.v)
    }

    pub fn is_pure(&self) -> bool {
        self.symplectic_eigenvalues()
            .map(|ev| ev.iter().all(|nu| (nu - VACUUM_VARIANCE).abs() <= PURITY_TOL))
            .unwrap_or(false)
    }

    fn require_pure(&self) -> Result<()> {
        if !self.is_pure() {
            return Err(Error::NotPure("target state must be pure".into()));
        }
        Ok(())
    }

    /// Energy `⟨q_k² + p_k²⟩` of each mode.
    pub fn mode_energies(&self) -> Vec<f64> {
        let g = self.second_moments();
        (0..self.modes()).map(|k| g[(2 * k, 2 * k)] + g[(2 * k + 1, 2 * k + 1)]).collect()
    }

    /// Mean and variance of `q cosθ + p sinθ` on `mode`.
    pub fn quadrature_marginal(&self, mode: usize, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let (i, j) = (2 * mode, 2 * mode + 1);
        let mean = c * self.x[i] + s * self.x[j];
        let var = c * c * self.v[(i, i)] + s * s * self.v[(j, j)] + 2.0 * s * c * self.v[(i, j)];
        (mean, var)
    }

    /// `⟨(q cosθ + p sinθ)^power⟩` on `mode`.
    pub fn quadrature_moment(&self, mode: usize, theta: f64, power: u32) -> f64 {
        let (mu, var) = self.quadrature_marginal(mode, theta);
        normal_moment(mu, var, power)
    }
}

/// Raw moment `E[X^k]` of `N(mu, var)`.
pub fn normal_moment(mu: f64, var: f64, k: u32) -> f64 {
    let (mut prev, mut cur) = (1.0, mu);
    if k == 0 {
        return 1.0;
    }
    for n in 2..=k {
        let next = mu * cur + (n - 1) as f64 * var * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coherent state with `x = (Re α₁, Im α₁, ...)` and `V = 𝟙/4`.
pub fn coherent_state(alpha: &[C64]) -> GaussianState {
    let x = Vector::from_iterator(2 * alpha.len(), alpha.iter().flat_map(|a| [a.re, a.im]));
    GaussianState { x, v: Mat::identity(2 * alpha.len(), 2 * alpha.len()) * VACUUM_VARIANCE }
}

/// Gaussian unitary `x → Sx + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUnitary {
    s: SymplecticMatrix,
    d: Vector,
}

impl GaussianUnitary {
    pub fn new(s: SymplecticMatrix, d: Vector) -> Result<Self> {
        if d.len() != 2 * s.modes() {
            return Err(Error::Dimension("displacement length does not match S".into()));
        }
        Ok(Self { s, d })
    }

    pub fn identity(m: usize) -> Self {
        Self { s: SymplecticMatrix::identity(m), d: Vector::zeros(2 * m) }
    }

    pub fn from_symplectic(s: SymplecticMatrix) -> Self {
        let d = Vector::zeros(2 * s.modes());
        Self { s, d }
    }

    /// Displacement `D(α)`.
    pub fn displacement(alpha: &[C64]) -> Self {
        let d = coherent_state(alpha).x;
        Self { s: SymplecticMatrix::identity(alpha.len()), d }
    }

    pub fn modes(&self) -> usize {
        self.s.modes()
    }

    pub fn symplectic(&self) -> &SymplecticMatrix {
        &self.s
    }

    pub fn displacement_vector(&self) -> &Vector {
        &self.d
    }

    /// `then ∘ self`.
    pub fn then(&self, then: &GaussianUnitary) -> Result<Self> {
        let s = then.s.compose(&self.s)?;
        let d = then.s.matrix() * &self.d + &then.d;
        Ok(Self { s, d })
    }

    /// Output mean for a coherent input `α`.
    pub fn output_mean(&self, alpha: &[C64]) -> Vector {
        self.s.matrix() * coherent_state(alpha).x + &self.d
    }

    /// Output covariance `SSᵀ/4` for any coherent input.
    pub fn output_covariance(&self) -> Mat {
        self.s.matrix() * self.s.matrix().transpose() * VACUUM_VARIANCE
    }
}

pub fn apply_unitary(u: &GaussianUnitary, rho: &GaussianState) -> Result<GaussianState> {
    if u.modes() != rho.modes() {
        return Err(Error::Dimension("unitary and state mode counts differ".into()));
    }
    let s = u.s.matrix();
    let v = s * &rho.v * s.transpose();
    let v = (&v + v.transpose()) * 0.5;
    Ok(GaussianState { x: s * &rho.x + &u.d, v })
}

/// Gaussian CPTP map `x → Xx + d`, `V → XVXᵀ + Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelMap {
    x: Mat,
    y: Mat,
    d: Vector,
}

impl GaussianChannelMap {
    pub fn new(x: Mat, y: Mat, d: Vector) -> Result<Self> {
        let m = modes_of(&x)?;
        if y.shape() != x.shape() || d.len() != 2 * m {
            return Err(Error::Dimension("channel blocks have inconsistent shapes".into()));
        }
        check_symmetric(&y, 1e-12 * (1.0 + y.amax()))
            .map_err(|_| Error::Config("channel noise matrix Y is not symmetric".into()))?;
        let j = symplectic_form(m);
        let b = (&j - &x * &j * x.transpose()) * VACUUM_VARIANCE;
        if min_eig_hermitian(&y, &b) < -PHYSICAL_TOL {
            return Err(Error::Config("channel is not completely positive".into()));
        }
        Ok(Self { x, y, d })
    }

    pub fn from_unitary(u: &GaussianUnitary) -> Self {
        let n = 2 * u.modes();
        Self { x: u.s.matrix().clone(), y: Mat::zeros(n, n), d: u.d.clone() }
    }

    /// Pure loss with transmissivity `eta` on every mode.
    pub fn pure_loss(m: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("loss transmissivity {eta} outside [0, 1]")));
        }
        let n = 2 * m;
        Self::new(
            Mat::identity(n, n) * eta.sqrt(),
            Mat::identity(n, n) * ((1.0 - eta) * VACUUM_VARIANCE),
            Vector::zeros(n),
        )
    }

    /// Additive classical noise adding `nbar/2` to every quadrature variance.
    pub fn thermal_noise(m: usize, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::Domain("thermal occupation must be nonnegative".into()));
        }
        let n = 2 * m;
        Self::new(Mat::identity(n, n), Mat::identity(n, n) * (nbar / 2.0), Vector::zeros(n))
    }

    /// Phase-insensitive amplifier: `x → g x`, `V → g² V + Y`, with `Y` chosen
    /// so that coherent inputs leave with `V = 𝟙/4 + n_add/2 · 𝟙`.
    pub fn amplifier(m: usize, gain: f64, added_noise: f64) -> Result<Self> {
        let n = 2 * m;
        let y = VACUUM_VARIANCE * (1.0 - gain * gain) + added_noise / 2.0;
        Ok(Self { x: Mat::identity(n, n) * gain, y: Mat::identity(n, n) * y, d: Vector::zeros(n) })
    }

    pub fn modes(&self) -> usize {
        self.x.nrows() / 2
    }

    /// `then ∘ self`.
    pub fn then(&self, then: &GaussianChannelMap) -> Result<Self> {
        if self.modes() != then.modes() {
            return Err(Error::Dimension("channel mode counts differ".into()));
        }
        Ok(Self {
            x: &then.x * &self.x,
            y: &then.x * &self.y * then.x.transpose() + &then.y,
            d: &then.x * &self.d + &then.d,
        })
    }
}

pub fn apply_channel(c: &GaussianChannelMap, rho: &GaussianState) -> Result<GaussianState> {
    if c.modes() != rho.modes() {
        return Err(Error::Dimension("channel and state mode counts differ".into()));
    }
    let v = &c.x * &rho.v * c.x.transpose() + &c.y;
    let v = (&v + v.transpose()) * 0.5;
    Ok(GaussianState { x: &c.x * &rho.x + &c.d, v })
}

/// `tr(ρ_t ρ_p)` for a pure target.
pub fn overlap_pure(target: &GaussianState, prep: &GaussianState) -> Result<f64> {
    if target.modes() != prep.modes() {
        return Err(Error::Dimension("state mode counts differ".into()));
    }
    target.require_pure()?;
    let sum = &target.v + &prep.v;
    let chol = sum
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("V_t + V_p is singular".into()))?;
    let delta = &target.x - &prep.x;
    let quad = delta.dot(&chol.solve(&delta));
    let m = target.modes() as i32;
    Ok(2f64.powi(-m) * chol.determinant().sqrt().recip() * (-0.5 * quad).exp())
}

/// The three trace terms of the state witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapTraces {
    /// `Tr(V_t⁻¹ Γ_p)`
    pub t1: f64,
    /// `Tr(V_t⁻¹ x_p x_tᵀ)`
    pub t2: f64,
    /// `Tr(V_t⁻¹ x_t x_tᵀ)`
    pub t3: f64,
}

pub(crate) fn inverse_spd(v: &Mat) -> Result<Mat> {
    let inv = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("covariance matrix is not positive definite".into()))?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

pub fn exact_overlap_traces(target: &GaussianState, prep: &GaussianState) -> Result<OverlapTraces> {
    if target.modes() != prep.modes() {
        return Err(Error::Dimension("state mode counts differ".into()));
    }
    target.require_pure()?;
    let vinv = inverse_spd(&target.v)?;
    let w = &vinv * &target.x;
    Ok(OverlapTraces {
        t1: (&vinv * prep.second_moments()).trace(),
        t2: prep.x.dot(&w),
        t3: target.x.dot(&w),
    })
}
