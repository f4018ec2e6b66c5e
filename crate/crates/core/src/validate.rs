//! Self-checks runnable from a release build: closed forms against the
//! brute-force oracle, the outcome-mass identity, physicality of built
//! states and the Gaussian cross-checks.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::channel::{qs_success_probability, repeaterless_capacity, HalfChannelParams};
use crate::error::Result;
use crate::gaussian::{apply_loss, dhd_swap, gaussian_rci, tmsv_covariance};
use crate::linalg::{ComplexMatrix, ModeDims};
use crate::quadrature::integrate;
use crate::rate::rci;
use crate::state::closed_form::with_coefficient_mutation;
use crate::state::{build_state, oracle_state, outcome_weight, LinkPairConfig, Orientation, TwoModeFockState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the suite's figure of merit.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub seconds: f64,
    pub detail: String,
}

fn timed(name: &str, f: impl FnOnce() -> Result<(f64, f64, usize, String)>) -> SuiteReport {
    let t = Instant::now();
    let out = f();
    let seconds = t.elapsed().as_secs_f64();
    match out {
        Ok((worst, tolerance, cases, detail)) => SuiteReport {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
            cases,
            seconds,
            detail,
        },
        Err(e) => SuiteReport {
            name: name.into(),
            passed: false,
            worst: f64::INFINITY,
            tolerance: 0.0,
            cases: 0,
            seconds,
            detail: format!("error: {e}"),
        },
    }
}

/// A random configuration small enough for the oracle (`n_max ≤ 8`).
fn draw(rng: &mut StdRng, o: Orientation) -> Result<(LinkPairConfig, Complex64)> {
    loop {
        let mut link = || HalfChannelParams::new(rng.gen_range(0.0..0.5), rng.gen_range(0.01..1.0), rng.gen_range(1.0..10.0));
        let (l1, l2) = (link()?, link()?);
        let cfg = LinkPairConfig::auto(l1, l2, o)?;
        if cfg.n_max > 8 {
            continue;
        }
        let gamma = Complex64::from_polar(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0 * PI));
        return Ok((cfg, gamma));
    }
}

/// Largest elementwise closed-form/oracle deviation, relative to the oracle
/// state weight, over `per_orientation` draws of every layout.
pub fn oracle_equivalence(per_orientation: usize, seed: u64, mutation: f64) -> SuiteReport {
    timed("oracle-equivalence", || {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for o in Orientation::ALL {
            for _ in 0..per_orientation {
                let (cfg, gamma) = draw(&mut rng, o)?;
                let fast = with_coefficient_mutation(mutation, || build_state(&cfg, gamma))?;
                let slow = oracle_state(&cfg, gamma)?;
                worst = worst.max(slow.relative_deviation(&fast));
                cases += 1;
            }
        }
        Ok((worst, 1e-9, cases, format!("max elementwise deviation / weight = {worst:.3e}")))
    })
}

/// `∬ Tr ρ(γ) d²γ` against the product of heralding probabilities, for the
/// two outcome-dependent layouts.
pub fn normalization_identity(cases: usize, seed: u64) -> SuiteReport {
    timed("normalization-identity", || {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for k in 0..cases {
            let o = if k % 2 == 0 { Orientation::AsymmetricSourceScissor } else { Orientation::SymmetricSources };
            let (cfg, _) = draw(&mut rng, o)?;
            // The density is isotropic and falls off at least as e^{-(1-w)|γ|²}.
            let mass = integrate(0.0, 14.0, 448, |r| 2.0 * PI * r * outcome_weight(&cfg, Complex64::new(r, 0.0)));
            let want = qs_success_probability(&cfg.link1) * qs_success_probability(&cfg.link2);
            worst = worst.max((mass / want - 1.0).abs());
        }
        Ok((worst, 1e-3, cases, format!("max relative mass error = {worst:.3e}")))
    })
}

/// Hermiticity, positivity and a finite RCI for random states of every
/// layout.
pub fn physicality(cases: usize, seed: u64) -> SuiteReport {
    timed("physicality", || {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for k in 0..cases {
            let o = Orientation::ALL[k % 3];
            let (cfg, gamma) = draw(&mut rng, o)?;
            let st = build_state(&cfg, gamma)?;
            let scale = st.scale();
            let defect = crate::linalg::hermiticity_defect(&st.matrix) / scale;
            let min = crate::linalg::hermitian_eigenvalues(&st.matrix)?.last().copied().unwrap_or(0.0) / scale;
            let r = rci(&st)?;
            let bad = if r.is_finite() { 0.0 } else { f64::INFINITY };
            worst = worst.max(defect).max(-min).max(bad);
        }
        Ok((worst, 1e-9, cases, format!("max(hermiticity defect, -min eigenvalue) / weight = {worst:.3e}")))
    })
}

/// Fock-basis density matrix of TMSV(`chi`) with loss `eta` on mode B.
pub fn lossy_tmsv_fock(chi: f64, eta: f64, n_max: usize) -> Result<TwoModeFockState> {
    let d = n_max + 1;
    let dims = ModeDims::new(d, d);
    let coeff = crate::channel::tmsv_schmidt_coeffs(chi, n_max);
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    // Env level k: |n⟩_A |n−k⟩_B with amplitude c_n √C(n,k) η^{(n−k)/2} (1−η)^{k/2}.
    let amp = |n: usize, k: usize| -> f64 {
        let ln_binom = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
        coeff[n] * (0.5 * ln_binom).exp() * eta.powf((n - k) as f64 / 2.0) * (1.0 - eta).powf(k as f64 / 2.0)
    };
    for k in 0..d {
        for n in k..d {
            for n2 in k..d {
                m[(dims.index(n, n - k), dims.index(n2, n2 - k))] += Complex64::new(amp(n, k) * amp(n2, k), 0.0);
            }
        }
    }
    TwoModeFockState::from_unnormalized(m, dims)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Swap exactness, Gaussian/Fock RCI agreement and the capacity-attainment
/// point. Reports the worst of the three normalized errors.
pub fn gaussian_cross_checks(seed: u64) -> SuiteReport {
    timed("gaussian-cross-checks", || {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut swap = 0.0f64;
        for _ in 0..5 {
            let (c1, c2) = (rng.gen_range(0.0..0.95), rng.gen_range(0.0..0.95));
            let out = dhd_swap(&tmsv_covariance(c1)?, &tmsv_covariance(c2)?)?;
            let want = tmsv_covariance(c1 * c2)?;
            swap = swap.max((&out.cov - &want.cov).amax() / want.cov.amax());
        }
        let mut fock = 0.0f64;
        for _ in 0..5 {
            let (chi, eta) = (rng.gen_range(0.05..0.25), rng.gen_range(0.01..1.0));
            let g = gaussian_rci(&apply_loss(&tmsv_covariance(chi)?, eta, 1)?)?;
            let f = rci(&lossy_tmsv_fock(chi, eta, 20)?)?;
            fock = fock.max((g - f).abs());
        }
        let attained = gaussian_rci(&apply_loss(&tmsv_covariance(0.99)?, 0.1, 1)?)?;
        let cap = repeaterless_capacity(0.1);
        let gap = (attained / cap - 1.0).abs();
        let worst = (swap / 1e-12).max(fock / 1e-3).max(gap / 0.05);
        Ok((
            worst,
            1.0,
            11,
            format!(
                "swap deviation {swap:.2e} (tol 1e-12), Gaussian-Fock RCI gap {fock:.2e} bits (tol 1e-3), \
                 RCI(0.99, 0.1) = {attained:.6} vs capacity {cap:.6} (tol 5%)"
            ),
        ))
    })
}

/// Every suite at its default size.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        oracle_equivalence(20, seed, 0.0),
        normalization_identity(10, seed.wrapping_add(1)),
        physicality(100, seed.wrapping_add(2)),
        gaussian_cross_checks(seed.wrapping_add(3)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(oracle_equivalence(2, 3, 0.0).passed);
        assert!(normalization_identity(2, 3).passed);
        assert!(physicality(6, 3).passed);
        let g = gaussian_cross_checks(3);
        assert!(g.passed, "{}", g.detail);
    }

    #[test]
    fn mutated_coefficient_is_caught() {
        let r = oracle_equivalence(2, 3, 1e-6);
        assert!(!r.passed, "{}", r.detail);
        // The mutation is scoped.
        assert!(oracle_equivalence(1, 3, 0.0).passed);
    }

    #[test]
    fn lossless_fock_state_is_pure() {
        let st = lossy_tmsv_fock(0.3, 1.0, 20).unwrap();
        assert!((st.weight - 1.0).abs() < 1e-15);
        let e = crate::linalg::hermitian_eigenvalues(&st.matrix).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
    }
}
