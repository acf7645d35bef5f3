//! Symplectic matrices and the Williamson/Euler decomposition of pure
//! Gaussian covariance matrices.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Mat, Result, VACUUM_VARIANCE};

/// Tolerance on `S J Sᵀ = J` for validated symplectic matrices.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Allowed deviation of a symplectic eigenvalue from the vacuum value.
pub const PURITY_TOL: f64 = 1e-6;
/// Eigenvalues of `4V` this close to one are treated as unsqueezed.
const UNIT_BAND: f64 = 1e-8;

/// Standard symplectic form `⊕ [[0, 1], [-1, 0]]` on `m` modes.
pub fn symplectic_form(m: usize) -> Mat {
    let mut j = Mat::zeros(2 * m, 2 * m);
    for k in 0..m {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

fn check_even_square(m: &Mat) -> Result<usize> {
    if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix of even dimension, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows() / 2)
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// True iff `‖M J Mᵀ − J‖_max ≤ tol`.
pub fn is_symplectic(m: &Mat, tol: f64) -> Result<bool> {
    let modes = check_even_square(m)?;
    let j = symplectic_form(modes);
    Ok(max_abs(&(m * &j * m.transpose() - j)) <= tol)
}

/// A validated element of Sp(2m, ℝ).
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    entries: Mat,
}

impl SymplecticMatrix {
    pub fn new(entries: Mat) -> Result<Self> {
        Self::with_tolerance(entries, SYMPLECTIC_TOL)
    }

    pub fn with_tolerance(entries: Mat, tol: f64) -> Result<Self> {
        if !is_symplectic(&entries, tol)? {
            return Err(Error::Domain(format!(
                "matrix is not symplectic within {tol:e}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(m: usize) -> Self {
        Self { entries: Mat::identity(2 * m, 2 * m) }
    }

    /// Squeezes `q` of `mode` by `e^{-xi}`.
    pub fn squeezer(m: usize, mode: usize, xi: f64) -> Result<Self> {
        check_mode(m, mode)?;
        let mut s = Mat::identity(2 * m, 2 * m);
        s[(2 * mode, 2 * mode)] = (-xi).exp();
        s[(2 * mode + 1, 2 * mode + 1)] = xi.exp();
        Ok(Self { entries: s })
    }

    /// Phase-space rotation `q → q cosθ − p sinθ`, `p → q sinθ + p cosθ`.
    pub fn rotation(m: usize, mode: usize, theta: f64) -> Result<Self> {
        check_mode(m, mode)?;
        let (s, c) = theta.sin_cos();
        let mut r = Mat::identity(2 * m, 2 * m);
        let i = 2 * mode;
        r[(i, i)] = c;
        r[(i, i + 1)] = -s;
        r[(i + 1, i)] = s;
        r[(i + 1, i + 1)] = c;
        Ok(Self { entries: r })
    }

    /// Beam splitter mixing modes `a` and `b` with transmissivity `cos²θ`.
    pub fn beamsplitter(m: usize, a: usize, b: usize, theta: f64) -> Result<Self> {
        check_pair(m, a, b)?;
        let (s, c) = theta.sin_cos();
        let mut r = Mat::identity(2 * m, 2 * m);
        for k in 0..2 {
            let (ia, ib) = (2 * a + k, 2 * b + k);
            r[(ia, ia)] = c;
            r[(ia, ib)] = -s;
            r[(ib, ia)] = s;
            r[(ib, ib)] = c;
        }
        Ok(Self { entries: r })
    }

    /// Two-mode squeezer with squeezing `r`.
    pub fn two_mode_squeezer(m: usize, a: usize, b: usize, r: f64) -> Result<Self> {
        check_pair(m, a, b)?;
        let (ch, sh) = (r.cosh(), r.sinh());
        let mut s = Mat::identity(2 * m, 2 * m);
        let (qa, pa, qb, pb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        s[(qa, qa)] = ch;
        s[(pa, pa)] = ch;
        s[(qb, qb)] = ch;
        s[(pb, pb)] = ch;
        s[(qa, qb)] = sh;
        s[(qb, qa)] = sh;
        s[(pa, pb)] = -sh;
        s[(pb, pa)] = -sh;
        Ok(Self { entries: s })
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.modes() != other.modes() {
            return Err(Error::Dimension("mode counts differ".into()));
        }
        Ok(Self { entries: &self.entries * &other.entries })
    }

    pub fn transpose(&self) -> Self {
        Self { entries: self.entries.transpose() }
    }
}

fn check_mode(m: usize, mode: usize) -> Result<()> {
    if mode >= m {
        return Err(Error::Dimension(format!("mode {mode} out of range for {m} modes")));
    }
    Ok(())
}

fn check_pair(m: usize, a: usize, b: usize) -> Result<()> {
    check_mode(m, a)?;
    check_mode(m, b)?;
    if a == b {
        return Err(Error::Dimension("two-mode gate needs distinct modes".into()));
    }
    Ok(())
}

/// `S = O · D · O′` with `D = ⊕ diag(e^{−ξ_k}, e^{ξ_k})`.
#[derive(Debug, Clone)]
pub struct SymplecticDecomposition {
    pub o: Mat,
    pub d: Mat,
    pub o_prime: Mat,
    pub xi: Vec<f64>,
}

impl SymplecticDecomposition {
    pub fn max_squeezing(&self) -> f64 {
        self.xi.iter().copied().fold(0.0, f64::max)
    }

    /// `s = exp(ξ_max)`.
    pub fn s(&self) -> f64 {
        self.max_squeezing().exp()
    }

    pub fn symplectic(&self) -> Mat {
        &self.o * &self.d * &self.o_prime
    }

    /// `(1/4)·O·D²·Oᵀ`.
    pub fn covariance(&self) -> Mat {
        &self.o * &self.d * &self.d * self.o.transpose() * VACUUM_VARIANCE
    }
}

/// `ξ_max` of a decomposition.
pub fn max_squeezing(dec: &SymplecticDecomposition) -> f64 {
    dec.max_squeezing()
}

pub(crate) fn check_symmetric(v: &Mat, tol: f64) -> Result<()> {
    let asym = max_abs(&(v - v.transpose()));
    if asym > tol {
        return Err(Error::Domain(format!("matrix not symmetric (asymmetry {asym:e})")));
    }
    Ok(())
}

/// Symplectic eigenvalues of a positive-definite `V`, ascending.
pub fn symplectic_eigenvalues(v: &Mat) -> Result<Vec<f64>> {
    let m = check_even_square(v)?;
    let eig = SymmetricEigen::new(v.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Domain("covariance matrix is not positive definite".into()));
    }
    let sqrt_diag = Mat::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let a = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = &a * symplectic_form(m) * &a;
    let mut ev: Vec<f64> = SymmetricEigen::new(k.transpose() * &k)
        .eigenvalues
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

/// Decomposes the covariance matrix of a pure Gaussian state.
///
/// The returned `O′` is the identity: `V` only fixes `S` up to a right
/// orthosymplectic factor, and `S = O·D` is the canonical choice.
pub fn williamson_euler(v: &Mat) -> Result<SymplecticDecomposition> {
    let m = check_even_square(v)?;
    check_symmetric(v, 1e-12 * (1.0 + max_abs(v)))?;
    for nu in symplectic_eigenvalues(v)? {
        if (nu - VACUUM_VARIANCE).abs() > PURITY_TOL {
            return Err(Error::NotPure(format!("symplectic eigenvalue {nu} differs from 1/4")));
        }
    }
    let big_m = v / VACUUM_VARIANCE;
    let eig = SymmetricEigen::new(big_m.clone());
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let j = symplectic_form(m);

    // Columns chosen so far, always as (v, -Jv) pairs.
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(2 * m);
    for &i in &order {
        if basis.len() == 2 * m {
            break;
        }
        let lambda = eig.eigenvalues[i];
        if lambda > 1.0 + UNIT_BAND {
            break;
        }
        let mut c = eig.eigenvectors.column(i).into_owned();
        if lambda >= 1.0 - UNIT_BAND {
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dot(&c);
                    c -= b * proj;
                }
            }
            let n = c.norm();
            if n < 1e-6 {
                continue;
            }
            c /= n;
        }
        let partner = -(&j * &c);
        basis.push(c);
        basis.push(partner);
    }
    if basis.len() != 2 * m {
        return Err(Error::Numeric("could not build a symplectic eigenbasis".into()));
    }

    let mut pairs: Vec<(f64, usize)> = (0..m)
        .map(|k| {
            let c = &basis[2 * k];
            let q = c.dot(&(&big_m * c));
            ((-0.5 * q.ln()).max(0.0), k)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut o = Mat::zeros(2 * m, 2 * m);
    let mut d = Mat::zeros(2 * m, 2 * m);
    let mut xi = Vec::with_capacity(m);
    for (slot, &(x, k)) in pairs.iter().enumerate() {
        o.set_column(2 * slot, &basis[2 * k]);
        o.set_column(2 * slot + 1, &basis[2 * k + 1]);
        d[(2 * slot, 2 * slot)] = (-x).exp();
        d[(2 * slot + 1, 2 * slot + 1)] = x.exp();
        xi.push(x);
    }
    Ok(SymplecticDecomposition { o, d, o_prime: Mat::identity(2 * m, 2 * m), xi })
}

/// Full Euler decomposition of a symplectic matrix.
pub fn euler_decompose(s: &SymplecticMatrix) -> Result<SymplecticDecomposition> {
    let st = s.matrix();
    let v = st * st.transpose() * VACUUM_VARIANCE;
    let v = (&v + v.transpose()) * 0.5;
    let mut dec = williamson_euler(&v)?;
    let d_inv = Mat::from_diagonal(&dec.d.diagonal().map(|x| 1.0 / x));
    dec.o_prime = d_inv * dec.o.transpose() * st;
    Ok(dec)
}

/// Haar random `m×m` unitary embedded as a real orthosymplectic matrix.
pub fn random_orthosymplectic<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Mat {
    let z = nalgebra::DMatrix::<Complex64>::from_fn(m, m, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let mut u = qr.q();
    let r = qr.r();
    for k in 0..m {
        let rk = r[(k, k)];
        let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = u.column_mut(k);
        col *= phase;
    }
    let mut o = Mat::zeros(2 * m, 2 * m);
    for jr in 0..m {
        for kc in 0..m {
            let (x, y) = (u[(jr, kc)].re, u[(jr, kc)].im);
            o[(2 * jr, 2 * kc)] = x;
            o[(2 * jr, 2 * kc + 1)] = -y;
            o[(2 * jr + 1, 2 * kc)] = y;
            o[(2 * jr + 1, 2 * kc + 1)] = x;
        }
    }
    o
}

/// Random `O·D·O′` with `ξ_k ~ U[0, xi_max]`.
pub fn random_symplectic<R: Rng + ?Sized>(m: usize, xi_max: f64, rng: &mut R) -> Result<SymplecticMatrix> {
    random_symplectic_with_xi(m, xi_max, rng).map(|(s, _)| s)
}

/// As [`random_symplectic`], also returning the generated squeezing values.
pub fn random_symplectic_with_xi<R: Rng + ?Sized>(
    m: usize,
    xi_max: f64,
    rng: &mut R,
) -> Result<(SymplecticMatrix, Vec<f64>)> {
    if m == 0 || !(xi_max >= 0.0) {
        return Err(Error::Domain("random_symplectic needs m ≥ 1 and xi_max ≥ 0".into()));
    }
    let o = random_orthosymplectic(m, rng);
    let xi: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * xi_max).collect();
    let mut d = Mat::zeros(2 * m, 2 * m);
    for (k, &x) in xi.iter().enumerate() {
        d[(2 * k, 2 * k)] = (-x).exp();
        d[(2 * k + 1, 2 * k + 1)] = x.exp();
    }
    let o2 = random_orthosymplectic(m, rng);
    let s = SymplecticMatrix::with_tolerance(o * d * o2, 1e-9)?;
    Ok((s, xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn diag(v: &[f64]) -> Mat {
        Mat::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn symplectic_check_examples() {
        assert!(is_symplectic(&Mat::identity(2, 2), 1e-12).unwrap());
        assert!(is_symplectic(&diag(&[2.0, 0.5]), 1e-12).unwrap());
        assert!(!is_symplectic(&diag(&[2.0, 2.0]), 1e-12).unwrap());
        assert!(matches!(is_symplectic(&Mat::identity(3, 3), 1e-12), Err(Error::Dimension(_))));
    }

    #[test]
    fn vacuum_is_unsqueezed() {
        let dec = williamson_euler(&(Mat::identity(4, 4) * 0.25)).unwrap();
        assert_eq!(dec.xi, vec![0.0, 0.0]);
        assert!((&dec.d - Mat::identity(4, 4)).amax() < 1e-12);
        assert_eq!(dec.s(), 1.0);
    }

    #[test]
    fn diagonal_squeezed_state() {
        let v = diag(&[(-1.0f64).exp(), 1.0f64.exp()]) * 0.25;
        let dec = williamson_euler(&v).unwrap();
        assert!((dec.xi[0] - 0.5).abs() < 1e-12);
        assert!((dec.o.abs() - Mat::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rotated_squeezed_state_matches_eigendecomposition() {
        let r = SymplecticMatrix::rotation(1, 0, 0.3).unwrap();
        let v = r.matrix() * diag(&[(-1.0f64).exp(), 1.0f64.exp()]) * r.matrix().transpose() * 0.25;
        let dec = williamson_euler(&v).unwrap();
        let eig = SymmetricEigen::new(&v * 4.0).eigenvalues;
        let oracle = 0.5 * eig.max().ln();
        assert!((dec.xi[0] - oracle).abs() < 1e-10);
        assert!((dec.xi[0] - 0.5).abs() < 1e-10);
        assert!((dec.covariance() - &v).amax() < 1e-8);
    }

    #[test]
    fn mixed_state_rejected() {
        let v = Mat::identity(2, 2) * 0.3;
        assert!(matches!(williamson_euler(&v), Err(Error::NotPure(_))));
        let v = diag(&[0.25, -0.25]);
        assert!(matches!(williamson_euler(&v), Err(Error::Domain(_))));
    }

    #[test]
    fn max_squeezing_examples() {
        let dec = SymplecticDecomposition {
            o: Mat::identity(4, 4),
            d: Mat::identity(4, 4),
            o_prime: Mat::identity(4, 4),
            xi: vec![0.5, 0.2],
        };
        assert_eq!(max_squeezing(&dec), 0.5);
        assert!((dec.s() - 1.648721270700128).abs() < 1e-12);
    }

    #[test]
    fn three_mode_round_trip() {
        let mut g = rng::stream(11, 0);
        let o = random_orthosymplectic(3, &mut g);
        let o2 = random_orthosymplectic(3, &mut g);
        let d = diag(&[(-1.0f64).exp(), 1.0f64.exp(), (-0.3f64).exp(), 0.3f64.exp(), 1.0, 1.0]);
        let s = SymplecticMatrix::new(o * d * o2).unwrap();
        let dec = euler_decompose(&s).unwrap();
        assert!((dec.max_squeezing() - 1.0).abs() < 1e-9);
        assert!((dec.xi[1] - 0.3).abs() < 1e-9);
        assert!(dec.xi[2].abs() < 1e-9);
        assert!((dec.symplectic() - s.matrix()).amax() < 1e-8);
        let op = &dec.o_prime;
        assert!((op * op.transpose() - Mat::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn random_symplectic_examples() {
        let mut g = rng::stream(1, 0);
        let s = random_symplectic(1, 0.0, &mut g).unwrap();
        let m = s.matrix();
        assert!((m * m.transpose() - Mat::identity(2, 2)).amax() < 1e-12);

        let a = random_symplectic(2, 1.0, &mut rng::stream(5, 0)).unwrap();
        let b = random_symplectic(2, 1.0, &mut rng::stream(5, 0)).unwrap();
        assert_eq!(a, b);
        assert!(is_symplectic(a.matrix(), 1e-9).unwrap());

        let (s, mut xi) = random_symplectic_with_xi(3, 0.5, &mut g).unwrap();
        let dec = euler_decompose(&s).unwrap();
        xi.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in xi.iter().zip(&dec.xi) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn gate_constructors_are_symplectic() {
        for s in [
            SymplecticMatrix::squeezer(2, 1, 0.7).unwrap(),
            SymplecticMatrix::rotation(2, 0, 1.1).unwrap(),
            SymplecticMatrix::beamsplitter(2, 0, 1, 0.4).unwrap(),
            SymplecticMatrix::two_mode_squeezer(2, 0, 1, 0.6).unwrap(),
        ] {
            assert!(is_symplectic(s.matrix(), 1e-12).unwrap());
        }
    }
}
