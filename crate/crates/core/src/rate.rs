//! Reverse coherent information, conditional and ergodic rates, gain and
//! multiplexing optimization, and distance sweeps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    multiplex_boost, qs_success_probability, repeaterless_capacity, transmissivity, GainPolicy, GainSearch,
    HalfChannelParams, LossModel,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, partial_trace, von_neumann_entropy, Keep};
use crate::quadrature::composite_rule;
use crate::state::truncation::probe_radius;
use crate::state::{build_state, outcome_weight, Heralding, LinkPairConfig, Orientation, TwoModeFockState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Parallel half channels per link.
    pub m: u64,
    /// Swap success probability.
    pub q: f64,
    /// Fraction of the outcome distribution inside the integration window.
    pub gamma_mass: f64,
    /// Initial radial node count; doubled until converged.
    pub radial_nodes: usize,
    pub rci_floor: f64,
    /// Relative change accepted between successive node doublings.
    pub rel_tol: f64,
    /// Absolute change (bits of mean RCI) treated as converged, for rates
    /// that are numerically zero.
    pub abs_tol: f64,
    pub max_nodes: usize,
    /// Angular nodes for a full-plane average; 0 integrates radially only.
    pub angular_nodes: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            m: 1000,
            q: 1.0,
            gamma_mass: 0.99,
            radial_nodes: 64,
            rci_floor: 0.0,
            rel_tol: 3e-3,
            abs_tol: 1e-7,
            max_nodes: 1024,
            angular_nodes: 0,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.gamma_mass > 0.9 && self.gamma_mass < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma_mass must lie in (0.9, 1), got {}", self.gamma_mass)));
        }
        if self.radial_nodes < 2 || self.max_nodes < self.radial_nodes {
            return Err(Error::InvalidParameter("radial node counts out of range".into()));
        }
        Ok(())
    }

    pub fn with_m(self, m: u64) -> Self {
        Self { m, ..self }
    }

    /// Single-pass low-resolution settings used inside searches.
    fn coarse(&self) -> Self {
        Self { radial_nodes: 24, max_nodes: 24, ..*self }
    }
}

/// `H(ρ_A) − H(ρ_AB)` in bits; the state is normalized first.
pub fn rci(state: &TwoModeFockState) -> Result<f64> {
    let rho = state.normalize();
    let joint = hermitian_eigenvalues(&rho.matrix)?;
    let reduced = partial_trace(&rho.matrix, rho.dims, Keep::A)?;
    let local = hermitian_eigenvalues(&reduced)?;
    Ok(von_neumann_entropy(&local)? - von_neumann_entropy(&joint)?)
}

/// `q (1 − (1 − p₁)^M)(1 − (1 − p₂)^M) / M`.
pub fn multiplex_factor(p1: f64, p2: f64, rc: &RateConfig) -> f64 {
    rc.q * multiplex_boost(p1, rc.m) * multiplex_boost(p2, rc.m) / rc.m as f64
}

fn heralding_factor(h: Heralding, rc: &RateConfig) -> f64 {
    match h {
        Heralding::PerLink(p1, p2) => multiplex_factor(p1, p2, rc),
        Heralding::Joint(p) => rc.q * multiplex_boost(p, rc.m) / rc.m as f64,
    }
}

/// `R(γ)`: the floored RCI times the multiplexing factor.
pub fn conditional_rate(state: &TwoModeFockState, p1: f64, p2: f64, rc: &RateConfig) -> Result<f64> {
    Ok(multiplex_factor(p1, p2, rc) * rci(state)?.max(rc.rci_floor))
}

/// Outcome mass inside radius `r` (radial density `2π r Tr ρ(r)`).
fn mass_between(cfg: &LinkPairConfig, a: f64, b: f64, nodes: usize) -> f64 {
    composite_rule(a, b, nodes)
        .into_iter()
        .map(|(r, w)| w * 2.0 * PI * r * outcome_weight(cfg, Complex64::new(r, 0.0)))
        .sum()
}

const MAX_RADIUS: f64 = 60.0;

/// Smallest radius holding `gamma_mass` of the analytic total outcome mass.
/// Outcome-independent layouts have no window and return 0.
pub fn gamma_max(cfg: &LinkPairConfig, rc: &RateConfig) -> Result<f64> {
    cfg.validate()?;
    if !cfg.orientation.outcome_dependent() {
        return Ok(0.0);
    }
    let target = rc.gamma_mass * cfg.total_outcome_mass();
    let mut hi = probe_radius(cfg);
    loop {
        let reached = mass_between(cfg, 0.0, hi, 128);
        if reached >= target {
            break;
        }
        if hi >= MAX_RADIUS {
            return Err(Error::MassNotReached { reached, target, radius: hi });
        }
        hi = (hi * 1.5).min(MAX_RADIUS);
    }
    // Locate the crossing panel, then bisect inside it.
    let panels = 32;
    let h = hi / panels as f64;
    let mut below = 0.0;
    let mut start = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        let m = mass_between(cfg, a, a + h, 16);
        if below + m >= target {
            start = a;
            break;
        }
        below += m;
        start = a + h;
    }
    let (mut lo, mut up) = (start, (start + h).min(hi));
    while up - lo > 1e-10 * up.max(1.0) {
        let mid = 0.5 * (lo + up);
        if below + mass_between(cfg, start, mid, 16) >= target {
            up = mid;
        } else {
            lo = mid;
        }
    }
    Ok(up)
}

/// Full record of one ergodic-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRate {
    /// ebits per mode.
    pub rate: f64,
    /// Outcome-averaged floored RCI before multiplexing.
    pub mean_rci: f64,
    pub gamma_max: f64,
    pub nodes: usize,
    pub n_max: usize,
    pub p1: f64,
    pub p2: f64,
    pub heralding: Heralding,
    /// Combined heralding and multiplexing factor.
    pub factor: f64,
}

/// `∫ RCI⁺ Tr ρ d²γ` over the window, divided by the total mass.
fn windowed_rci(cfg: &LinkPairConfig, rc: &RateConfig, gmax: f64, nodes: usize) -> Result<f64> {
    let pts = composite_rule(0.0, gmax, nodes);
    let angles: Vec<(f64, f64)> = if rc.angular_nodes == 0 {
        vec![(0.0, 2.0 * PI)]
    } else {
        (0..rc.angular_nodes).map(|k| (2.0 * PI * k as f64 / rc.angular_nodes as f64, 2.0 * PI / rc.angular_nodes as f64)).collect()
    };
    let values = pts
        .par_iter()
        .map(|&(r, w)| {
            let mut s = 0.0;
            for &(phi, dphi) in &angles {
                let st = build_state(cfg, Complex64::from_polar(r, phi))?;
                s += dphi * st.weight * rci(&st)?.max(rc.rci_floor);
            }
            Ok(w * r * s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / cfg.total_outcome_mass())
}

/// Mean RCI values below this are indistinguishable from round-off in the
/// entropy difference and are reported as zero.
pub const RCI_RESOLUTION: f64 = 1e-12;

fn resolved(mean_rci: f64) -> f64 {
    if mean_rci < RCI_RESOLUTION {
        0.0
    } else {
        mean_rci
    }
}

/// Ergodic rate with diagnostics.
pub fn ergodic_details(cfg: &LinkPairConfig, rc: &RateConfig) -> Result<ErgodicRate> {
    cfg.validate()?;
    rc.validate()?;
    let (p1, p2) = (qs_success_probability(&cfg.link1), qs_success_probability(&cfg.link2));
    let heralding = cfg.heralding();
    let factor = heralding_factor(heralding, rc);
    let mut out =
        ErgodicRate { rate: 0.0, mean_rci: 0.0, gamma_max: 0.0, nodes: 0, n_max: cfg.n_max, p1, p2, heralding, factor };
    if cfg.link1.chi == 0.0 || cfg.link2.chi == 0.0 {
        return Ok(out);
    }
    if !cfg.orientation.outcome_dependent() {
        let st = build_state(cfg, Complex64::new(0.0, 0.0))?;
        out.mean_rci = resolved(rci(&st)?.max(rc.rci_floor));
        out.rate = factor * out.mean_rci;
        return Ok(out);
    }
    let gmax = gamma_max(cfg, rc)?;
    out.gamma_max = gmax;
    let mut nodes = rc.radial_nodes;
    let mut prev = windowed_rci(cfg, rc, gmax, nodes)?;
    while nodes < rc.max_nodes {
        let next_nodes = (nodes * 2).min(rc.max_nodes);
        let next = windowed_rci(cfg, rc, gmax, next_nodes)?;
        let prev_value = prev;
        let change = if next == 0.0 && prev == 0.0 { 0.0 } else { (next - prev).abs() / next.abs().max(prev.abs()) };
        nodes = next_nodes;
        prev = next;
        if change < rc.rel_tol || (next - prev_value).abs() < rc.abs_tol {
            out.nodes = nodes;
            out.mean_rci = resolved(next);
            out.rate = factor * out.mean_rci;
            return Ok(out);
        }
        if nodes >= rc.max_nodes {
            return Err(Error::QuadratureNotConverged { nodes, change });
        }
    }
    // Single-pass configuration.
    out.nodes = nodes;
    out.mean_rci = resolved(prev);
    out.rate = factor * out.mean_rci;
    Ok(out)
}

/// Outcome-averaged conditional rate, ebits per mode.
pub fn ergodic_rate(cfg: &LinkPairConfig, rc: &RateConfig) -> Result<f64> {
    Ok(ergodic_details(cfg, rc)?.rate)
}

/// Squeezing and gain choices for the two links of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policies {
    pub chi1: f64,
    pub chi2: f64,
    pub gain: GainPolicy,
}

impl Default for Policies {
    fn default() -> Self {
        Self { chi1: 0.3, chi2: 0.3, gain: GainPolicy::default() }
    }
}

impl Policies {
    pub fn with_gain(self, gain: GainPolicy) -> Self {
        Self { gain, ..self }
    }
}

fn pair_config(chi1: f64, chi2: f64, eta1: f64, eta2: f64, g1: f64, g2: f64, o: Orientation) -> Result<LinkPairConfig> {
    LinkPairConfig::auto(HalfChannelParams::new(chi1, eta1, g1)?, HalfChannelParams::new(chi2, eta2, g2)?, o)
}

/// Coarse rate for the search; failures count as no rate.
fn search_objective(p: &Policies, eta1: f64, eta2: f64, g: (f64, f64), o: Orientation, rc: &RateConfig) -> f64 {
    pair_config(p.chi1, p.chi2, eta1, eta2, g.0, g.1, o)
        .and_then(|cfg| ergodic_rate(&cfg, &rc.coarse()))
        .unwrap_or(f64::NEG_INFINITY)
}

/// Golden-section maximization of `f` over `[lo, hi]` in log space.
fn golden_log(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    while b - a > 0.01 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
        }
    }
    if fc >= fd {
        (c.exp(), fc)
    } else {
        (d.exp(), fd)
    }
}

/// Gains maximizing the rate: diagonal scan over the log grid, then
/// alternating golden-section refinement of each gain.
pub fn optimize_gains(
    p: &Policies,
    eta1: f64,
    eta2: f64,
    o: Orientation,
    search: &GainSearch,
    rc: &RateConfig,
) -> (f64, f64) {
    let grid = search.grid();
    let scores: Vec<f64> = grid.par_iter().map(|&g| search_objective(p, eta1, eta2, (g, g), o, rc)).collect();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            best_i = i;
        }
    }
    let mut g = (grid[best_i], grid[best_i]);
    if !(best > 0.0) {
        return g;
    }
    let step = 10f64.powf(1.0 / search.points_per_decade.max(1) as f64);
    for _ in 0..search.refine_rounds {
        for k in 0..2 {
            let cur = if k == 0 { g.0 } else { g.1 };
            let lo = (cur / step).max(search.g_min);
            let hi = (cur * step).min(search.g_max);
            if hi <= lo {
                continue;
            }
            let (x, fx) = golden_log(lo, hi, |x| {
                let pair = if k == 0 { (x, g.1) } else { (g.0, x) };
                search_objective(p, eta1, eta2, pair, o, rc)
            });
            if fx > best {
                best = fx;
                if k == 0 {
                    g.0 = x;
                } else {
                    g.1 = x;
                }
            }
        }
    }
    g
}

/// Resolve both gains under the configured policy.
pub fn resolve_gains(p: &Policies, eta1: f64, eta2: f64, o: Orientation, rc: &RateConfig) -> (f64, f64) {
    match p.gain {
        GainPolicy::NumericOpt(search) => optimize_gains(p, eta1, eta2, o, &search, rc),
        policy => (policy.direct_gain(eta1).unwrap_or(1.0), policy.direct_gain(eta2).unwrap_or(1.0)),
    }
}

/// One pair evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub orientation: Orientation,
    pub d1_km: f64,
    pub d2_km: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub g1: f64,
    pub g2: f64,
    pub m: u64,
    /// ebits per mode.
    pub rate: f64,
    /// Repeaterless capacity of one fiber spanning `d1 + d2`.
    pub cap_direct: f64,
    /// Repeaterless capacity of the route through the hub, `η₁η₂`.
    pub cap_through_node: f64,
    pub details: ErgodicRate,
}

impl RatePoint {
    pub const CSV_HEADER: &'static str =
        "distance_km,orientation,eta1,eta2,g1,g2,M,rate_ebits_per_mode,cap_direct,cap_through_node";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{},{},{:e},{:e},{:e}",
            self.d1_km + self.d2_km,
            self.orientation,
            self.eta1,
            self.eta2,
            self.g1,
            self.g2,
            self.m,
            self.rate,
            self.cap_direct,
            self.cap_through_node
        )
    }
}

/// Assemble transmissivities, gains, the state and the ergodic rate for a
/// pair with links of `d1_km` (Alice side) and `d2_km` (Bob side).
pub fn end_to_end_rate(
    d1_km: f64,
    d2_km: f64,
    orientation: Orientation,
    policies: &Policies,
    rc: &RateConfig,
    loss: LossModel,
) -> Result<RatePoint> {
    if !(d1_km >= 0.0 && d2_km >= 0.0 && d1_km.is_finite() && d2_km.is_finite()) {
        return Err(Error::InvalidParameter(format!("distances must be finite and >= 0, got {d1_km}, {d2_km}")));
    }
    rc.validate()?;
    let (eta1, eta2) = (transmissivity(d1_km, loss), transmissivity(d2_km, loss));
    let (g1, g2) = resolve_gains(policies, eta1, eta2, orientation, rc);
    let cfg = pair_config(policies.chi1, policies.chi2, eta1, eta2, g1, g2, orientation)?;
    let details = ergodic_details(&cfg, rc)?;
    Ok(RatePoint {
        orientation,
        d1_km,
        d2_km,
        eta1,
        eta2,
        g1,
        g2,
        m: rc.m,
        rate: details.rate,
        cap_direct: repeaterless_capacity(transmissivity(d1_km + d2_km, loss)),
        cap_through_node: repeaterless_capacity(eta1 * eta2),
        details,
    })
}

/// Symmetric-split rates for every total distance and orientation, ordered
/// by distance then orientation.
pub fn rate_distance_sweep(
    totals_km: &[f64],
    orientations: &[Orientation],
    policies: &Policies,
    rc: &RateConfig,
    loss: LossModel,
) -> Result<Vec<RatePoint>> {
    let jobs: Vec<(f64, Orientation)> =
        totals_km.iter().flat_map(|&d| orientations.iter().map(move |&o| (d, o))).collect();
    jobs.par_iter().map(|&(d, o)| end_to_end_rate(d / 2.0, d / 2.0, o, policies, rc, loss)).collect()
}

/// `argmax_M` of the heralding/multiplexing factor, with its value.
pub fn optimal_m(heralding: Heralding, q: f64) -> (u64, f64) {
    let f = |m: u64| heralding_factor(heralding, &RateConfig { m, q, ..RateConfig::default() });
    // Powers of two bracket the peak, then a ternary search on integers.
    let mut best = (1u64, f(1));
    let mut m = 1u64;
    while m < 1u64 << 40 {
        m *= 2;
        let v = f(m);
        if v > best.1 {
            best = (m, v);
        } else if m > 4 * best.0 {
            break;
        }
    }
    let (mut lo, mut hi) = ((best.0 / 2).max(1), best.0 * 2);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    (lo..=hi).map(|m| (m, f(m))).fold(best, |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Rate maximized over the multiplexing factor, alternating gain and `M`
/// optimization. Returns the optimal `M` and the rate record at it.
pub fn optimized_m_rate(
    d1_km: f64,
    d2_km: f64,
    orientation: Orientation,
    policies: &Policies,
    rc: &RateConfig,
    loss: LossModel,
) -> Result<(u64, RatePoint)> {
    let mut m = rc.m;
    let mut point = end_to_end_rate(d1_km, d2_km, orientation, policies, &rc.with_m(m), loss)?;
    for _ in 0..2 {
        let (m_new, _) = optimal_m(point.details.heralding, rc.q);
        if m_new == m {
            break;
        }
        m = m_new;
        point = end_to_end_rate(d1_km, d2_km, orientation, policies, &rc.with_m(m), loss)?;
    }
    Ok((m, point))
}
