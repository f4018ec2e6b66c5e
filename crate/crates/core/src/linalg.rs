//! Dense complex linear algebra on truncated Fock spaces.
//!
//! Joint two-mode indices are row-major with mode A varying slowest:
//! `k = n_a * dim_b + n_b`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::LinalgError;

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative hermiticity tolerance accepted by [`hermitian_eigenvalues`].
pub const HERMITICITY_TOL: f64 = 1e-9;
/// Eigenvalues in `[-NEG_EIG_TOL, 0)` are treated as truncation noise.
pub const NEG_EIG_TOL: f64 = 1e-9;
/// How far a spectrum handed to [`von_neumann_entropy`] may be from unit sum.
pub const UNIT_TRACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModeDims {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl ModeDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        assert!(dim_a > 0 && dim_b > 0, "mode dimensions must be positive");
        Self { dim_a, dim_b }
    }

    pub fn joint(&self) -> usize {
        self.dim_a * self.dim_b
    }

    #[inline]
    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.dim_b + n_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Largest elementwise modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m - m†|` over all entries.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real eigenvalues of a Hermitian matrix, sorted in descending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let defect = hermiticity_defect(m);
    if defect > HERMITICITY_TOL * scale {
        return Err(LinalgError::NonHermitianInput { defect, scale });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    // Exact symmetrisation so the solver sees a Hermitian matrix. Entries far
    // below round-off are flushed and empty rows dropped: the Householder
    // reduction produces NaN on sparse inputs whose columns underflow.
    let flush = scale * 1e-30;
    let herm = (m + m.adjoint()).scale(0.5).map(|z| if z.norm() < flush { Complex64::new(0.0, 0.0) } else { z });
    let n = herm.nrows();
    let live: Vec<usize> = (0..n).filter(|&i| herm.row(i).iter().any(|z| z.re != 0.0 || z.im != 0.0)).collect();
    let reduced = ComplexMatrix::from_fn(live.len(), live.len(), |i, j| herm[(live[i], live[j])]);
    let mut eigs: Vec<f64> = if live.is_empty() { Vec::new() } else { reduced.symmetric_eigenvalues().iter().copied().collect() };
    if eigs.iter().any(|l| !l.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    eigs.resize(n, 0.0);
    eigs.sort_by(|a, b| b.total_cmp(a));
    Ok(eigs)
}

/// Reduced operator on the kept mode.
pub fn partial_trace(rho: &ComplexMatrix, dims: ModeDims, keep: Keep) -> Result<ComplexMatrix, LinalgError> {
    let n = dims.joint();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, rows: rho.nrows(), cols: rho.ncols() });
    }
    let out = match keep {
        Keep::A => ComplexMatrix::from_fn(dims.dim_a, dims.dim_a, |i, j| {
            (0..dims.dim_b).map(|b| rho[(dims.index(i, b), dims.index(j, b))]).sum()
        }),
        Keep::B => ComplexMatrix::from_fn(dims.dim_b, dims.dim_b, |i, j| {
            (0..dims.dim_a).map(|a| rho[(dims.index(a, i), dims.index(a, j))]).sum()
        }),
    };
    Ok(out)
}

/// Shannon entropy (bits) of a normalized spectrum, `0 log 0 = 0`.
pub fn von_neumann_entropy(eigs: &[f64]) -> Result<f64, LinalgError> {
    let total: f64 = eigs.iter().sum();
    if (total - 1.0).abs() > UNIT_TRACE_TOL {
        return Err(LinalgError::NotNormalized { trace: total });
    }
    let mut h = 0.0;
    for &l in eigs {
        if l < -NEG_EIG_TOL {
            return Err(LinalgError::NegativeEigenvalue { value: l });
        }
        if l > 0.0 {
            h -= l * l.log2();
        }
    }
    Ok(h.max(0.0))
}

/// Exponential of a nilpotent matrix by its (terminating) power series.
fn nilpotent_exp(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let mut out = ComplexMatrix::identity(n, n);
    let mut term = ComplexMatrix::identity(n, n);
    for k in 1..n {
        term = (&term * m).unscale(k as f64);
        if max_abs(&term) == 0.0 {
            break;
        }
        out += &term;
    }
    out
}

/// Matrix of the displacement operator in the normal-ordered form
/// `exp(-|γ|²/2) exp(γ a†) exp(-γ* a)` on a `dim`-level Fock space.
///
/// Both exponentials are of nilpotent truncated ladder matrices and the
/// middle sum only touches levels `k <= min(m, n)`, so every returned
/// element equals the untruncated `⟨m|D(γ)|n⟩`.
pub fn displacement_matrix(gamma: Complex64, dim: usize) -> ComplexMatrix {
    assert!(dim >= 1, "displacement matrix needs at least one level");
    let mut lower = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        lower[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let raise = lower.transpose();
    let creation = nilpotent_exp(&raise.scale_complex(gamma));
    let annihilation = nilpotent_exp(&lower.scale_complex(-gamma.conj()));
    (creation * annihilation).scale((-gamma.norm_sqr() / 2.0).exp())
}

trait ScaleComplex {
    fn scale_complex(&self, z: Complex64) -> Self;
}

impl ScaleComplex for ComplexMatrix {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map(|x| x * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_rank_one_spectrum_is_finite() {
        // Rank-one |ψ⟩⟨ψ| with ψ = Σ c_n |n, n⟩ embedded in a 41² space.
        let d = 41;
        let c: Vec<f64> = (0..d).map(|n| 0.3f64.powi(n as i32) * 0.91f64.sqrt()).collect();
        let m = ComplexMatrix::from_fn(d * d, d * d, |i, j| {
            let (a, b, x, y) = (i / d, i % d, j / d, j % d);
            Complex64::new(if a == b && x == y { c[a] * c[x] } else { 0.0 }, 0.0)
        });
        let e = hermitian_eigenvalues(&m).unwrap();
        assert_eq!(e.len(), d * d);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!(e[1..].iter().all(|l| l.abs() < 1e-14));
    }
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()).scale(0.5)
    }

    fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let p = &a * a.adjoint();
        let t = trace(&p).re;
        p.unscale(t)
    }

    /// Characteristic polynomial coefficients by Faddeev–LeVerrier, then
    /// evaluated at each claimed eigenvalue.
    fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
        let n = m.nrows();
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        let mut mk = ComplexMatrix::zeros(n, n);
        for k in 1..=n {
            let prev = coeffs[k - 1];
            mk = m * (&mk + ComplexMatrix::identity(n, n).scale_complex(prev));
            let ck = -trace(&mk) / k as f64;
            coeffs.push(ck);
        }
        coeffs
    }

    fn poly_eval(coeffs: &[Complex64], x: f64) -> Complex64 {
        coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    #[test]
    fn identity_eigenvalues() {
        let eigs = hermitian_eigenvalues(&ComplexMatrix::identity(3, 3)).unwrap();
        assert_eq!(eigs.len(), 3);
        for e in eigs {
            assert!((e - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_eigenvalues_descending() {
        let m = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3, 0.0), c(0.7, 0.0)]));
        let eigs = hermitian_eigenvalues(&m).unwrap();
        assert!((eigs[0] - 0.7).abs() < 1e-14 && (eigs[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_are_characteristic_roots() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in 1..=4 {
            for _ in 0..10 {
                let h = random_hermitian(&mut rng, n);
                let poly = char_poly(&h);
                let eigs = hermitian_eigenvalues(&h).unwrap();
                let scale: f64 = eigs.iter().map(|e| e.abs()).fold(1.0, f64::max);
                for e in &eigs {
                    assert!(poly_eval(&poly, *e).norm() < 1e-10 * scale.powi(n as i32), "n={n} e={e}");
                }
                let sum: f64 = eigs.iter().sum();
                assert!((sum - trace(&h).re).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(hermitian_eigenvalues(&m), Err(LinalgError::NonHermitianInput { .. })));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eigenvalues(&rect), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn block_diagonal_spectrum_is_union() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 3);
        let b = random_hermitian(&mut rng, 4);
        let mut blk = ComplexMatrix::zeros(7, 7);
        blk.view_mut((0, 0), (3, 3)).copy_from(&a);
        blk.view_mut((3, 3), (4, 4)).copy_from(&b);
        let mut union = hermitian_eigenvalues(&a).unwrap();
        union.extend(hermitian_eigenvalues(&b).unwrap());
        union.sort_by(|x, y| y.total_cmp(x));
        let joint = hermitian_eigenvalues(&blk).unwrap();
        for (x, y) in union.iter().zip(&joint) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_partial_trace() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let ra = random_density(&mut rng, 3);
        let rb = random_density(&mut rng, 2).scale(0.4);
        let joint = ra.kronecker(&rb);
        let red = partial_trace(&joint, ModeDims::new(3, 2), Keep::A).unwrap();
        let expect = ra.scale(trace(&rb).re);
        assert!(max_abs(&(red - expect)) < 1e-14);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let mut v = nalgebra::DVector::<Complex64>::zeros(4);
        v[0] = c(1.0, 0.0);
        v[3] = c(1.0, 0.0);
        let rho = (&v * v.adjoint()).scale(0.5);
        let red = partial_trace(&rho, ModeDims::new(2, 2), Keep::A).unwrap();
        assert!((red[(0, 0)].re - 0.5).abs() < 1e-15 && (red[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(red[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let rho = ComplexMatrix::identity(5, 5);
        assert!(matches!(
            partial_trace(&rho, ModeDims::new(2, 2), Keep::B),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let (da, db) = (3, 4);
        let rho = random_density(&mut rng, da * db);
        let red_b = partial_trace(&rho, ModeDims::new(da, db), Keep::B).unwrap();
        // Direct contraction over an explicit 4-index view.
        for i in 0..db {
            for j in 0..db {
                let mut s = c(0.0, 0.0);
                for a in 0..da {
                    s += rho[(a * db + i, a * db + j)];
                }
                assert!((s - red_b[(i, j)]).norm() < 1e-15);
            }
        }
        assert!((trace(&red_b) - trace(&rho)).norm() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(von_neumann_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((von_neumann_entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((von_neumann_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
        // Truncation-level negatives are clamped.
        assert!((von_neumann_entropy(&[1.0 + 5e-10, -5e-10]).unwrap()).abs() < 1e-8);
        assert!(matches!(von_neumann_entropy(&[1.1, -0.1]), Err(LinalgError::NegativeEigenvalue { .. })));
        assert!(matches!(von_neumann_entropy(&[0.5, 0.4]), Err(LinalgError::NotNormalized { .. })));
    }

    /// Generalized Laguerre polynomial by three-term recurrence.
    fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 + alpha - x);
        if n == 0 {
            return l0;
        }
        for k in 1..n {
            let k = k as f64;
            let l2 = ((2.0 * k + 1.0 + alpha - x) * l1 - (k + alpha) * l0) / (k + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    /// `⟨m|D(γ)|n⟩` from the Laguerre closed form.
    fn displacement_element(gamma: Complex64, m: usize, n: usize) -> Complex64 {
        let x = gamma.norm_sqr();
        let pref = (-x / 2.0).exp();
        if m >= n {
            let ratio = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
            gamma.powu((m - n) as u32) * ratio * pref * laguerre(n, (m - n) as f64, x)
        } else {
            let ratio = (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
            (-gamma.conj()).powu((n - m) as u32) * ratio * pref * laguerre(m, (n - m) as f64, x)
        }
    }

    #[test]
    fn displacement_trivial_cases() {
        let d = displacement_matrix(c(0.0, 0.0), 6);
        assert!(max_abs(&(d - ComplexMatrix::identity(6, 6))) < 1e-15);
        let g = c(0.7, -0.4);
        let d = displacement_matrix(g, 12);
        assert!((d[(0, 0)].re - (-g.norm_sqr() / 2.0).exp()).abs() < 1e-15);
        assert!(d[(0, 0)].im.abs() < 1e-15);
    }

    #[test]
    fn displacement_matches_laguerre_and_is_unitary_in_interior() {
        let g = c(0.5, 0.0);
        let d = displacement_matrix(g, 40);
        for m in 0..40 {
            for n in 0..40 {
                let z = displacement_element(g, m, n);
                assert!((d[(m, n)] - z).norm() < 1e-12, "({m},{n})");
            }
        }
        let dd = d.adjoint() * &d;
        let block = dd.view((0, 0), (10, 10)).into_owned() - ComplexMatrix::identity(10, 10);
        assert!(max_abs(&block) < 1e-8);
    }

    proptest! {
        #[test]
        fn displacement_inverse_on_interior(re in -0.7f64..0.7, im in -0.7f64..0.7, dim in 40usize..56) {
            let g = c(re, im);
            prop_assume!(g.norm() <= 1.0);
            let prod = displacement_matrix(g, dim) * displacement_matrix(-g, dim);
            // Elements are exact, but the product still misses the levels above
            // the cutoff; at |γ| = 1 rows within ~25 levels of it lose ~1e-3,
            // so only the lowest quarter is checked.
            let inner = dim / 4;
            let block = prod.view((0, 0), (inner, inner)).into_owned() - ComplexMatrix::identity(inner, inner);
            prop_assert!(max_abs(&block) < 1e-8);
        }

        #[test]
        fn sequential_partial_traces_give_full_trace(seed in 0u64..1000, da in 1usize..5, db in 1usize..5) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let h = random_hermitian(&mut rng, da * db);
            let dims = ModeDims::new(da, db);
            let red = partial_trace(&h, dims, Keep::A).unwrap();
            prop_assert!(hermiticity_defect(&red) < 1e-12);
            let full = partial_trace(&red, ModeDims::new(1, da), Keep::A).unwrap();
            prop_assert!((full[(0, 0)] - trace(&h)).norm() < 1e-12);
        }

        #[test]
        fn entropy_permutation_invariant_and_additive(ws in proptest::collection::vec(0.01f64..1.0, 2..5), vs in proptest::collection::vec(0.01f64..1.0, 2..4)) {
            let sw: f64 = ws.iter().sum();
            let sv: f64 = vs.iter().sum();
            let p: Vec<f64> = ws.iter().map(|w| w / sw).collect();
            let q: Vec<f64> = vs.iter().map(|v| v / sv).collect();
            let mut rev = p.clone();
            rev.reverse();
            let hp = von_neumann_entropy(&p).unwrap();
            prop_assert!((hp - von_neumann_entropy(&rev).unwrap()).abs() < 1e-12);
            let prod: Vec<f64> = p.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
            let hq = von_neumann_entropy(&q).unwrap();
            prop_assert!((von_neumann_entropy(&prod).unwrap() - hp - hq).abs() < 1e-10);
        }
    }
}
