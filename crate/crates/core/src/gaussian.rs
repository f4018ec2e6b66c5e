//! Zero-mean Gaussian states of one or two modes, in `(x₁, p₁, x₂, p₂)`
//! order with vacuum covariance equal to the identity.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};

pub type RealMatrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub cov: RealMatrix,
    pub n_modes: usize,
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Self {
        Self { cov: RealMatrix::identity(2 * n_modes, 2 * n_modes), n_modes }
    }

    pub fn new(cov: RealMatrix) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() % 2 != 0 || cov.nrows() == 0 {
            return Err(Error::NonPhysicalResult(format!("covariance is {}x{}", cov.nrows(), cov.ncols())));
        }
        let s = Self { n_modes: cov.nrows() / 2, cov };
        s.check_physical(1e-9)?;
        Ok(s)
    }

    /// Symmetry and `V + iΩ ≥ 0` within `tol`.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let v = &self.cov;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonPhysicalResult("non-finite covariance entry".into()));
        }
        let asym = (v - v.transpose()).amax();
        if asym > tol * v.amax().max(1.0) {
            return Err(Error::NonPhysicalResult(format!("covariance asymmetric by {asym:e}")));
        }
        let n = v.nrows();
        let omega = symplectic_form(self.n_modes);
        let m = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(0.5 * (v[(i, j)] + v[(j, i)]), omega[(i, j)]));
        let min = hermitian_eigenvalues(&m)?.last().copied().unwrap_or(0.0);
        if min < -tol * v.amax().max(1.0) {
            return Err(Error::NonPhysicalResult(format!("V + iΩ has eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// 2×2 covariance block of `mode`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        Matrix2::new(
            self.cov[(2 * i, 2 * j)],
            self.cov[(2 * i, 2 * j + 1)],
            self.cov[(2 * i + 1, 2 * j)],
            self.cov[(2 * i + 1, 2 * j + 1)],
        )
    }

    /// Symplectic eigenvalues, descending: the positive eigenvalues of the
    /// Hermitian matrix `V^{1/2} iΩ V^{1/2}`.
    pub fn symplectic_spectrum(&self) -> Result<Vec<f64>> {
        let eig = nalgebra::SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::NonPhysicalResult("covariance is not positive definite".into()));
        }
        let root = &eig.eigenvectors
            * RealMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let omega = symplectic_form(self.n_modes);
        let w = &root * omega * &root;
        let n = w.nrows();
        let m = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(0.0, 0.5 * (w[(i, j)] - w[(j, i)])));
        let mut nu = hermitian_eigenvalues(&m)?;
        nu.truncate(self.n_modes);
        Ok(nu)
    }

    /// Symplectic eigenvalues of a two-mode state, larger first.
    pub fn symplectic_eigenvalues(&self) -> Result<(f64, f64)> {
        if self.n_modes != 2 {
            return Err(Error::NonPhysicalResult(format!("expected 2 modes, got {}", self.n_modes)));
        }
        let nu = self.symplectic_spectrum()?;
        Ok((nu[0], nu[1]))
    }
}

/// Block-diagonal `⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> RealMatrix {
    let mut o = RealMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

pub fn tmsv_covariance(chi: f64) -> Result<GaussianState> {
    if !(chi.is_finite() && (0.0..1.0).contains(&chi)) {
        return Err(Error::InvalidParameter(format!("chi must lie in [0, 1), got {chi}")));
    }
    let nu = (1.0 + chi * chi) / (1.0 - chi * chi);
    let s = 2.0 * chi / (1.0 - chi * chi);
    let mut v = RealMatrix::identity(4, 4) * nu;
    v[(0, 2)] = s;
    v[(2, 0)] = s;
    v[(1, 3)] = -s;
    v[(3, 1)] = -s;
    Ok(GaussianState { cov: v, n_modes: 2 })
}

/// Pure loss of transmissivity `eta` on `mode`.
pub fn apply_loss(gs: &GaussianState, eta: f64, mode: usize) -> Result<GaussianState> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    if mode >= gs.n_modes {
        return Err(Error::InvalidParameter(format!("mode {mode} out of range")));
    }
    let n = gs.cov.nrows();
    let mut x = RealMatrix::identity(n, n);
    let mut y = RealMatrix::zeros(n, n);
    for k in [2 * mode, 2 * mode + 1] {
        x[(k, k)] = eta.sqrt();
        y[(k, k)] = 1.0 - eta;
    }
    Ok(GaussianState { cov: &x * &gs.cov * x.transpose() + y, n_modes: gs.n_modes })
}

/// Dual-homodyne swap of the second mode of `gs1` with the second mode of
/// `gs2`: the two are mixed on a balanced beam splitter, `x` of the
/// difference and `p` of the sum port are measured. Returns the conditional
/// covariance of (first mode of `gs1`, first mode of `gs2`), which does not
/// depend on the outcome.
pub fn dhd_swap(gs1: &GaussianState, gs2: &GaussianState) -> Result<GaussianState> {
    if gs1.n_modes != 2 || gs2.n_modes != 2 {
        return Err(Error::NonPhysicalResult("swap inputs must be two-mode states".into()));
    }
    // Joint order (A, B, C, F): A, C from gs1; B, F from gs2.
    let mut v = RealMatrix::zeros(8, 8);
    let place = |v: &mut RealMatrix, src: &RealMatrix, map: [usize; 2]| {
        for (i, &mi) in map.iter().enumerate() {
            for (j, &mj) in map.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        v[(2 * mi + a, 2 * mj + b)] = src[(2 * i + a, 2 * j + b)];
                    }
                }
            }
        }
    };
    place(&mut v, &gs1.cov, [0, 2]);
    place(&mut v, &gs2.cov, [1, 3]);
    // Measured combinations: x_C − x_F and p_C + p_F, each scaled by 1/√2.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut meas = RealMatrix::zeros(2, 8);
    meas[(0, 4)] = h;
    meas[(0, 6)] = -h;
    meas[(1, 5)] = h;
    meas[(1, 7)] = h;
    let sigma = &meas * &v * meas.transpose();
    let kept = v.view((0, 0), (4, 4)).into_owned();
    let cross = v.view((0, 0), (4, 8)).into_owned() * meas.transpose();
    let inv = sigma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonPhysicalResult("singular homodyne covariance".into()))?;
    let cond = kept - &cross * inv * cross.transpose();
    let sym = (&cond + cond.transpose()) * 0.5;
    let out = GaussianState { cov: sym, n_modes: 2 };
    out.check_physical(1e-9)?;
    Ok(out)
}

/// Entropy (bits) of a thermal mode with symplectic eigenvalue `nu`.
pub fn bosonic_entropy(nu: f64) -> f64 {
    if nu <= 1.0 + 1e-12 {
        return 0.0;
    }
    let a = (nu + 1.0) / 2.0;
    let b = (nu - 1.0) / 2.0;
    a * a.log2() - b * b.log2()
}

/// `h(ν_A) − h(ν₊) − h(ν₋)` with mode 0 as `A`.
pub fn gaussian_rci(gs: &GaussianState) -> Result<f64> {
    let (plus, minus) = gs.symplectic_eigenvalues()?;
    if minus < 1.0 - 1e-9 {
        return Err(Error::NonPhysicalResult(format!("symplectic eigenvalue {minus} below 1")));
    }
    let nu_a = gs.block(0, 0).determinant().max(1.0).sqrt();
    Ok(bosonic_entropy(nu_a) - bosonic_entropy(plus) - bosonic_entropy(minus))
}

/// Rate of a direct swap at the receiving user: TMSV(`chi`) across loss
/// `eta_total`, swapped with a local TMSV(`chi`); no scissors, `M = 1`.
pub fn baseline_direct_dhd(chi: f64, eta_total: f64) -> Result<f64> {
    let sent = apply_loss(&tmsv_covariance(chi)?, eta_total, 1)?;
    let local = tmsv_covariance(chi)?;
    Ok(gaussian_rci(&dhd_swap(&sent, &local)?)?.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tmsv_examples() {
        let v = tmsv_covariance(0.0).unwrap();
        assert_eq!(v.cov, RealMatrix::identity(4, 4));
        let v = tmsv_covariance(0.3).unwrap();
        assert!((v.cov[(0, 0)] - 1.09 / 0.91).abs() < 1e-15);
        let (a, b) = v.symplectic_eigenvalues().unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loss_limits() {
        let v = tmsv_covariance(0.3).unwrap();
        assert_eq!(apply_loss(&v, 1.0, 1).unwrap().cov, v.cov);
        let lossy = apply_loss(&v, 1e-12, 1).unwrap();
        assert!((lossy.block(1, 1) - Matrix2::identity()).amax() < 1e-10);
        assert!(lossy.block(0, 1).amax() < 1e-5);
        apply_loss(&v, 0.5, 1).unwrap().check_physical(1e-9).unwrap();
    }

    #[test]
    fn swap_of_pure_tmsvs_is_product_squeezing() {
        for (c1, c2) in [(0.3, 0.3), (0.5, 0.2), (0.9, 0.7)] {
            let out = dhd_swap(&tmsv_covariance(c1).unwrap(), &tmsv_covariance(c2).unwrap()).unwrap();
            let want = tmsv_covariance(c1 * c2).unwrap();
            assert!((&out.cov - &want.cov).amax() < 1e-13, "{c1} {c2}");
        }
    }

    #[test]
    fn rci_examples() {
        assert_eq!(gaussian_rci(&GaussianState::vacuum(2)).unwrap(), 0.0);
        let chi: f64 = 0.3;
        let nu = (1.0 + chi * chi) / (1.0 - chi * chi);
        let r = gaussian_rci(&tmsv_covariance(chi).unwrap()).unwrap();
        assert!((r - bosonic_entropy(nu)).abs() < 1e-9);
        // −Σ c_n² log₂ c_n² with c_n² = (1 − χ²)χ^{2n}
        let fock: f64 = (0..200)
            .map(|n| (1.0 - chi * chi) * chi.powi(2 * n))
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum();
        assert!((r - fock).abs() < 1e-12);
        let sep = dhd_swap(&tmsv_covariance(0.4).unwrap(), &tmsv_covariance(0.0).unwrap()).unwrap();
        assert!(gaussian_rci(&sep).unwrap() <= 1e-12);
    }

    #[test]
    fn baseline_decreases_with_loss() {
        let mut last = f64::INFINITY;
        for eta in [1.0, 0.5, 0.1, 0.01, 1e-4] {
            let r = baseline_direct_dhd(0.3, eta).unwrap();
            assert!(r < last && r > 0.0, "{eta}: {r}");
            last = r;
        }
        let lossless = gaussian_rci(&tmsv_covariance(0.09).unwrap()).unwrap();
        assert!((baseline_direct_dhd(0.3, 1.0).unwrap() - lossless).abs() < 1e-12);
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let mut v = RealMatrix::identity(2, 2);
        v[(0, 0)] = 0.5;
        assert!(GaussianState::new(v).is_err());
    }
}
