//! Worked examples for the public API, end to end.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cvrep_core::channel::{
    multiplex_boost, qs_success_probability, repeaterless_capacity, transmissivity, GainPolicy, GainSearch,
    HalfChannelParams, LossModel,
};
use cvrep_core::gaussian::{apply_loss, baseline_direct_dhd, gaussian_rci, tmsv_covariance};
use cvrep_core::linalg::{hermitian_eigenvalues, partial_trace, von_neumann_entropy, Keep};
use cvrep_core::network::{
    beat_fraction, multi_charlie_coverage, pair_rate, placement_sweep, search_hub_sets, Baseline, PairClass,
    SquareNetwork, PAIRS,
};
use cvrep_core::quadrature::integrate;
use cvrep_core::rate::{
    conditional_rate, end_to_end_rate, ergodic_details, gamma_max, optimize_gains, rci, Policies, RateConfig,
};
use cvrep_core::state::{build_state, oracle_state, outcome_weight, LinkPairConfig, Orientation};
use cvrep_core::validate::lossy_tmsv_fock;

fn half(chi: f64, eta: f64, g: f64) -> HalfChannelParams {
    HalfChannelParams::new(chi, eta, g).unwrap()
}

#[test]
fn asymmetric_example_point_matches_oracle() {
    let g = GainPolicy::power_law();
    let (e1, e2) = (0.1, 0.05);
    let l1 = half(0.3, e1, g.direct_gain(e1).unwrap());
    let l2 = half(0.3, e2, g.direct_gain(e2).unwrap());
    let cfg = LinkPairConfig::auto(l1, l2, Orientation::AsymmetricSourceScissor).unwrap();
    let gamma = Complex64::new(0.4, 0.2);
    let fast = build_state(&cfg, gamma).unwrap();
    let slow = oracle_state(&cfg, gamma).unwrap();
    assert!(slow.relative_deviation(&fast) < 1e-9);
}

#[test]
fn outcome_mass_with_generous_cutoff() {
    for o in [Orientation::AsymmetricSourceScissor, Orientation::SymmetricSources] {
        let auto = LinkPairConfig::auto(half(0.3, 0.2, 3.0), half(0.4, 0.05, 6.0), o).unwrap();
        let cfg = LinkPairConfig { n_max: auto.n_max + 6, ..auto };
        let mass = integrate(0.0, 14.0, 512, |r| 2.0 * std::f64::consts::PI * r * outcome_weight(&cfg, Complex64::new(r, 0.0)));
        let want = qs_success_probability(&cfg.link1) * qs_success_probability(&cfg.link2);
        assert!((mass / want - 1.0).abs() < 1e-4, "{o}: {mass} vs {want}");
    }
}

#[test]
fn window_holds_the_outcome_mass() {
    let eta = transmissivity(50.0, LossModel::default());
    let pol = Policies::default();
    let rc = RateConfig::default();
    let (g1, g2) = cvrep_core::rate::resolve_gains(&pol, eta, eta, Orientation::AsymmetricSourceScissor, &rc);
    let cfg = LinkPairConfig::auto(half(0.3, eta, g1), half(0.3, eta, g2), Orientation::AsymmetricSourceScissor).unwrap();
    let gm = gamma_max(&cfg, &rc).unwrap();
    let radial = |r: f64| 2.0 * std::f64::consts::PI * r * outcome_weight(&cfg, Complex64::new(r, 0.0));
    let tail = integrate(gm, 20.0, 512, radial);
    assert!(tail / cfg.total_outcome_mass() < 0.01 + 1e-6);
}

#[test]
fn tmsv_entropy_from_gaussian_and_fock_agree() {
    // −Σ c_n² log₂ c_n² with c_n² = 0.91 · 0.09ⁿ
    let want: f64 = (0..400).map(|n| 0.91 * 0.09f64.powi(n)).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    let gauss = gaussian_rci(&tmsv_covariance(0.3).unwrap()).unwrap();
    let fock = rci(&lossy_tmsv_fock(0.3, 1.0, 30).unwrap()).unwrap();
    assert!((gauss - want).abs() < 1e-10);
    assert!((fock - want).abs() < 1e-10);
    assert!((want - 0.479_637).abs() < 1e-6);
}

#[test]
fn gaussian_and_fock_rci_agree_under_loss() {
    for eta in [0.9, 0.5, 0.1] {
        let g = gaussian_rci(&apply_loss(&tmsv_covariance(0.2).unwrap(), eta, 1).unwrap()).unwrap();
        let f = rci(&lossy_tmsv_fock(0.2, eta, 12).unwrap()).unwrap();
        assert!((g - f).abs() < 1e-3, "{eta}: {g} vs {f}");
    }
}

#[test]
fn multiplexed_rate_arithmetic() {
    let st = lossy_tmsv_fock(0.3, 0.5, 20).unwrap();
    let r = rci(&st).unwrap();
    let boost = multiplex_boost(0.01, 1000);
    assert!((boost - 0.999_956_828_752_4).abs() < 1e-12);
    let got = conditional_rate(&st, 0.01, 0.01, &RateConfig::default()).unwrap();
    assert!((got - boost * boost / 1000.0 * r).abs() < 1e-15);
}

/// Jittered Monte Carlo over the square enclosing the window: one uniform
/// sample per cell of a 316 × 316 grid, about 10⁵ samples.
#[test]
fn lossless_rate_matches_monte_carlo() {
    let rc = RateConfig::default().with_m(1);
    for o in [Orientation::AsymmetricSourceScissor, Orientation::SymmetricSources] {
        let cfg = LinkPairConfig::auto(half(0.3, 1.0, 1.0), half(0.3, 1.0, 1.0), o).unwrap();
        let det = ergodic_details(&cfg, &rc).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let h = det.gamma_max;
        let k = 316;
        let cell = 2.0 * h / k as f64;
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                let x = -h + (i as f64 + rng.gen::<f64>()) * cell;
                let y = -h + (j as f64 + rng.gen::<f64>()) * cell;
                let g = Complex64::new(x, y);
                if g.norm() > h {
                    continue;
                }
                let st = build_state(&cfg, g).unwrap();
                acc += st.weight * rci(&st).unwrap().max(0.0);
            }
        }
        let mc = acc * cell * cell / cfg.total_outcome_mass() * det.factor;
        assert!((mc / det.rate - 1.0).abs() < 0.01, "{o}: {mc} vs {}", det.rate);
    }
}

#[test]
fn numeric_gains_beat_the_diagonal_grid() {
    let eta = transmissivity(50.0, LossModel::default());
    let pol = Policies::default();
    let rc = RateConfig::default();
    let o = Orientation::AsymmetricSourceScissor;
    let search = GainSearch::default();
    let (g1, g2) = optimize_gains(&pol, eta, eta, o, &search, &rc);
    let rate = |a: f64, b: f64| {
        let cfg = LinkPairConfig::auto(half(0.3, eta, a), half(0.3, eta, b), o).unwrap();
        ergodic_details(&cfg, &rc).unwrap().rate
    };
    let best = rate(g1, g2);
    for g in search.grid() {
        assert!(best >= rate(g, g) * (1.0 - 3e-3), "grid g={g}");
    }
}

#[test]
fn end_to_end_examples() {
    let pol = Policies::default();
    let rc = RateConfig::default();
    let loss = LossModel::default();
    let o = Orientation::AsymmetricSourceScissor;
    let zero = end_to_end_rate(0.0, 0.0, o, &pol, &rc, loss).unwrap();
    assert!(zero.rate > 0.0 && zero.rate.is_finite());
    let far = end_to_end_rate(150.0, 150.0, o, &pol, &rc, loss).unwrap();
    assert!(far.rate > repeaterless_capacity(transmissivity(300.0, loss)));
    let none = end_to_end_rate(100.0, 100.0, o, &Policies { chi2: 0.0, ..pol }, &rc, loss).unwrap();
    assert_eq!(none.rate, 0.0);
}

#[test]
fn rates_fall_with_distance() {
    let pol = Policies::default();
    let rc = RateConfig::default();
    let loss = LossModel::default();
    for o in Orientation::ALL {
        let mut last = f64::INFINITY;
        for d in [50.0, 150.0, 250.0, 350.0] {
            let r = end_to_end_rate(d / 2.0, d / 2.0, o, &pol, &rc, loss).unwrap().rate;
            assert!(r < last, "{o} at {d} km");
            last = r;
        }
    }
    let mut last = f64::INFINITY;
    for d in [0.0, 50.0, 150.0, 300.0] {
        let c = baseline_direct_dhd(0.3, transmissivity(d, loss)).unwrap();
        assert!(c < last && c > 0.0);
        last = c;
    }
}

fn entropy(m: &cvrep_core::linalg::ComplexMatrix) -> f64 {
    von_neumann_entropy(&hermitian_eigenvalues(m).unwrap()).unwrap()
}

/// Exchanging the two links of the symmetric-sources layout mirrors the
/// state: the heralding weights are equal and each side's reduced entropy
/// moves to the other side. The rate, being directional, is the average of
/// `H(B) − H(AB)` of the original state.
#[test]
fn symmetric_sources_link_exchange_mirrors_state() {
    let (l1, l2) = (half(0.3, 0.3, 4.0), half(0.3, 0.05, 9.0));
    let o = Orientation::SymmetricSources;
    let a = LinkPairConfig::new(l1, l2, o, 6).unwrap();
    let b = LinkPairConfig::new(l2, l1, o, 6).unwrap();
    for g in [Complex64::new(0.0, 0.0), Complex64::new(0.4, 0.3), Complex64::new(-1.1, 0.7)] {
        let (sa, sb) = (build_state(&a, g).unwrap().normalize(), build_state(&b, g).unwrap().normalize());
        assert!((build_state(&a, g).unwrap().weight / build_state(&b, g).unwrap().weight - 1.0).abs() < 1e-12);
        let (ra, rb) = (partial_trace(&sa.matrix, sa.dims, Keep::A).unwrap(), partial_trace(&sb.matrix, sb.dims, Keep::B).unwrap());
        assert!((entropy(&ra) - entropy(&rb)).abs() < 1e-10);
        assert!((entropy(&sa.matrix) - entropy(&sb.matrix)).abs() < 1e-10);
    }
}

#[test]
fn hub_geometry_examples() {
    let rc = RateConfig::default();
    let pol = Policies::default();
    let loss = LossModel::default();
    let net = SquareNetwork::new(200.0).unwrap();
    // Midpoint is best along the pair's segment.
    let mid = pair_rate(&net, PAIRS[0], (100.0, 0.0), &rc, &pol, loss).unwrap();
    for x in [40.0, 70.0, 130.0, 160.0] {
        assert!(pair_rate(&net, PAIRS[0], (x, 0.0), &rc, &pol, loss).unwrap() < mid);
    }
    // A hub on a user still gives a finite rate.
    let at_user = pair_rate(&net, PAIRS[0], (0.0, 0.0), &rc, &pol, loss).unwrap();
    assert!(at_user.is_finite() && at_user > 0.0);
    // Half-turn about the center maps pair (0, 1) onto pair (2, 3).
    for hub in [(30.0, 50.0), (120.0, 10.0)] {
        let a = pair_rate(&net, PAIRS[0], hub, &rc, &pol, loss).unwrap();
        let b = pair_rate(&net, PAIRS[2], (200.0 - hub.0, 200.0 - hub.1), &rc, &pol, loss).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }
    assert!(pair_rate(&net, PAIRS[0], (250.0, 0.0), &rc, &pol, loss).is_err());
}

#[test]
fn placement_examples() {
    let rc = RateConfig::default();
    let pol = Policies::default();
    let loss = LossModel::default();

    let small = placement_sweep(&SquareNetwork::new(50.0).unwrap(), 11, &rc, &pol, loss).unwrap();
    assert_eq!(beat_fraction(&small, Baseline::B, PairClass::Diagonal), 0.0);

    let net = SquareNetwork::new(250.0).unwrap();
    let sweep = placement_sweep(&net, 11, &rc, &pol, loss).unwrap();
    assert!(beat_fraction(&sweep, Baseline::B, PairClass::Diagonal) > 0.0);
    assert!(sweep.center().pairs.iter().all(|p| p.beats(Baseline::A)));
    for class in [PairClass::Adjacent, PairClass::Diagonal] {
        assert!(beat_fraction(&sweep, Baseline::A, class) >= beat_fraction(&sweep, Baseline::B, class));
    }
    assert!(sweep.all_pairs_cells(Baseline::B).is_empty());
    let cov = multi_charlie_coverage(&net, &[net.center()], &rc, &pol, loss).unwrap();
    assert!(cov.all_pairs(Baseline::A));
    assert!(!cov.all_pairs(Baseline::B));
}

/// Two hubs never cover every pair against the shortest-path capacity at
/// 400 km; three do.
#[test]
fn three_hubs_are_needed_at_400_km() {
    let sweep = placement_sweep(&SquareNetwork::new(400.0).unwrap(), 11, &RateConfig::default(), &Policies::default(), LossModel::default())
        .unwrap();
    assert!(search_hub_sets(&sweep, 2, Baseline::B).is_none());
    let (cov, worst) = search_hub_sets(&sweep, 3, Baseline::B).unwrap();
    assert!(cov.all_pairs(Baseline::B) && worst > 1.0);
}
