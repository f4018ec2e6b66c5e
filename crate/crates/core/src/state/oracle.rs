//! Brute-force conditional states.
//!
//! Builds each half channel as an explicit tensor (kept mode, scissor
//! output, environment) from the TMSV Schmidt series, the beam-splitter
//! binomial amplitudes and the scissor map, projects the two hub modes onto
//! the swap eigenstate using [`displacement_matrix`], and traces the
//! environments numerically. Slow, but shares no algebra with the closed
//! forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{LinkPairConfig, Orientation, TwoModeFockState};
use crate::channel::{tmsv_schmidt_coeffs, HalfChannelParams};
use crate::error::{LinalgError, Result};
use crate::linalg::{displacement_matrix, ComplexMatrix, ModeDims};

/// Half-channel amplitudes indexed `[kept][scissor][env]`.
struct HalfChannel {
    amp: Vec<[Vec<f64>; 2]>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lossy-mode amplitude of `n` input photons leaving `k` transmitted and
/// `n - k` in the environment.
fn beam_splitter(n: usize, k: usize, eta: f64) -> f64 {
    binomial(n, k).sqrt() * eta.powf(k as f64 / 2.0) * (1.0 - eta).powf((n - k) as f64 / 2.0)
}

fn half_channel(p: &HalfChannelParams, n_src: usize) -> HalfChannel {
    let schmidt = tmsv_schmidt_coeffs(p.chi, n_src);
    let norm = 1.0 / (1.0 + p.g * p.g).sqrt();
    let mut amp = Vec::with_capacity(n_src + 1);
    for (n, &c) in schmidt.iter().enumerate() {
        let mut out = [vec![0.0; n_src + 1], vec![0.0; n_src + 1]];
        for k in 0..=n {
            // The scissor keeps |0⟩, amplifies |1⟩ by g and rejects the rest.
            let scissor = match k {
                0 => 1.0,
                1 => p.g,
                _ => continue,
            };
            out[k][n - k] += norm * c * scissor * beam_splitter(n, k, p.eta);
        }
        amp.push(out);
    }
    HalfChannel { amp }
}

/// Source cutoff large enough that the swap kernel and loss tails are
/// negligible at outcome `gamma`.
fn hub_cutoff(gamma: Complex64) -> usize {
    30 + 6 * gamma.norm_sqr().ceil() as usize
}

/// `K[c][f] = conj⟨c|D(γ)|f⟩ / √π` for the two hub modes.
fn swap_kernel(gamma: Complex64, dim_c: usize, dim_f: usize) -> ComplexMatrix {
    let d = displacement_matrix(gamma, dim_c.max(dim_f));
    ComplexMatrix::from_fn(dim_c, dim_f, |c, f| d[(c, f)].conj() / PI.sqrt())
}

/// `ρ = Φ Φ†` for amplitudes `Φ[(a, b)][(d, e)]`.
fn outer(phi: &ComplexMatrix) -> ComplexMatrix {
    phi * phi.adjoint()
}

fn asymmetric(cfg: &LinkPairConfig, gamma: Complex64) -> ComplexMatrix {
    let n = cfg.n_max;
    let alice = half_channel(&cfg.link1, n + 3);
    let n_f = hub_cutoff(gamma);
    let bob = half_channel(&cfg.link2, n_f);
    let k = swap_kernel(gamma, 2, n_f + 1);
    let dims = ModeDims::new(n + 1, 2);
    let envs_a = n + 4;
    let envs_b = n_f + 1;
    let mut phi = ComplexMatrix::zeros(dims.joint(), envs_a * envs_b);
    for a in 0..=n {
        for b in 0..2 {
            for d in 0..envs_a {
                for e in 0..envs_b {
                    let mut s = Complex64::new(0.0, 0.0);
                    for c in 0..2 {
                        let x = alice.amp[a][c][d];
                        if x == 0.0 {
                            continue;
                        }
                        for f in 0..=n_f {
                            let y = bob.amp[f][b][e];
                            if y != 0.0 {
                                s += k[(c, f)] * (x * y);
                            }
                        }
                    }
                    phi[(dims.index(a, b), d * envs_b + e)] = s;
                }
            }
        }
    }
    outer(&phi)
}

fn symmetric_sources(cfg: &LinkPairConfig, gamma: Complex64) -> ComplexMatrix {
    let n = cfg.n_max;
    let src = n + 3;
    let alice = half_channel(&cfg.link1, src);
    let bob = half_channel(&cfg.link2, src);
    let k = swap_kernel(gamma, 2, 2);
    let dims = ModeDims::new(n + 1, n + 1);
    let envs = src + 1;
    let mut phi = ComplexMatrix::zeros(dims.joint(), envs * envs);
    for a in 0..=n {
        for b in 0..=n {
            for d in 0..envs {
                for e in 0..envs {
                    let mut s = Complex64::new(0.0, 0.0);
                    for c in 0..2 {
                        for f in 0..2 {
                            s += k[(c, f)] * (alice.amp[a][c][d] * bob.amp[b][f][e]);
                        }
                    }
                    phi[(dims.index(a, b), d * envs + e)] = s;
                }
            }
        }
    }
    outer(&phi)
}

/// Unnormalized `Σ χ'^n |n, n⟩` through both losses and both scissors.
fn symmetric_scissors(cfg: &LinkPairConfig) -> ComplexMatrix {
    let chi = cfg.chi_prime();
    let (l1, l2) = (&cfg.link1, &cfg.link2);
    let u = chi * chi * (1.0 - l1.eta) * (1.0 - l2.eta);
    // Terms decay like n² u^n.
    let n_src = if u > 0.0 { ((1e-22f64).ln() / u.ln()).ceil() as usize + 40 } else { 2 };
    let n_src = n_src.min(400);
    let envs = n_src + 1;
    let mut phi = ComplexMatrix::zeros(4, envs * envs);
    let mut amp = 1.0;
    for n in 0..=n_src {
        for k1 in 0..2.min(n + 1) {
            for k2 in 0..2.min(n + 1) {
                let g = (if k1 == 1 { l1.g } else { 1.0 }) * (if k2 == 1 { l2.g } else { 1.0 });
                let v = amp * g * beam_splitter(n, k1, l1.eta) * beam_splitter(n, k2, l2.eta);
                phi[(2 * k1 + k2, (n - k1) * envs + (n - k2))] += Complex64::new(v, 0.0);
            }
        }
        amp *= chi;
        if amp == 0.0 {
            break;
        }
    }
    outer(&phi)
}

/// Reference construction of the conditional state for any orientation,
/// with the same prefactor conventions as the closed forms.
pub fn oracle_state(cfg: &LinkPairConfig, gamma: Complex64) -> Result<TwoModeFockState> {
    cfg.validate()?;
    let matrix = match cfg.orientation {
        Orientation::AsymmetricSourceScissor => asymmetric(cfg, gamma),
        Orientation::SymmetricSources => symmetric_sources(cfg, gamma),
        Orientation::SymmetricScissors => symmetric_scissors(cfg),
    };
    let dims = cfg.mode_dims();
    if matrix.nrows() != dims.joint() {
        return Err(LinalgError::DimensionMismatch { expected: dims.joint(), rows: matrix.nrows(), cols: matrix.ncols() }.into());
    }
    TwoModeFockState::from_unnormalized(matrix, dims)
}
