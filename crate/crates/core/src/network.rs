//! Four users on the corners of a square sharing one (or a few) hubs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{repeaterless_capacity, transmissivity, LossModel};
use crate::error::{Error, Result};
use crate::gaussian::baseline_direct_dhd;
use crate::rate::{end_to_end_rate, Policies, RateConfig};
use crate::state::Orientation;

pub type Point = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairClass {
    Adjacent,
    Diagonal,
}

impl std::fmt::Display for PairClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PairClass::Adjacent => "adjacent",
            PairClass::Diagonal => "diagonal",
        })
    }
}

/// Two users; the first hosts the TMSV source, the second the scissor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub class: PairClass,
}

pub const PAIRS: [Pair; 6] = [
    Pair { id: 0, u: 0, v: 1, class: PairClass::Adjacent },
    Pair { id: 1, u: 1, v: 2, class: PairClass::Adjacent },
    Pair { id: 2, u: 2, v: 3, class: PairClass::Adjacent },
    Pair { id: 3, u: 0, v: 3, class: PairClass::Adjacent },
    Pair { id: 4, u: 0, v: 2, class: PairClass::Diagonal },
    Pair { id: 5, u: 1, v: 3, class: PairClass::Diagonal },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareNetwork {
    pub side_km: f64,
}

impl SquareNetwork {
    pub fn new(side_km: f64) -> Result<Self> {
        if !(side_km.is_finite() && side_km > 0.0) {
            return Err(Error::InvalidParameter(format!("side must be positive, got {side_km}")));
        }
        Ok(Self { side_km })
    }

    /// Users counter-clockwise from the origin.
    pub fn users(&self) -> [Point; 4] {
        let s = self.side_km;
        [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)]
    }

    pub fn pairs(&self) -> &'static [Pair; 6] {
        &PAIRS
    }

    pub fn pair_length(&self, pair: Pair) -> f64 {
        let users = self.users();
        dist(users[pair.u], users[pair.v])
    }

    pub fn center(&self) -> Point {
        (self.side_km / 2.0, self.side_km / 2.0)
    }

    fn hub_distances(&self, pair: Pair, hub: Point) -> (f64, f64) {
        let users = self.users();
        (dist(users[pair.u], hub), dist(users[pair.v], hub))
    }

    fn check_hub(&self, hub: Point) -> Result<()> {
        let s = self.side_km;
        let tol = 1e-9 * s;
        if !(hub.0 >= -tol && hub.0 <= s + tol && hub.1 >= -tol && hub.1 <= s + tol) {
            return Err(Error::InvalidParameter(format!("hub {hub:?} outside the square")));
        }
        Ok(())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Asymmetric-layout rate of `pair` through a hub at `hub`.
pub fn pair_rate(
    net: &SquareNetwork,
    pair: Pair,
    hub: Point,
    rc: &RateConfig,
    policies: &Policies,
    loss: LossModel,
) -> Result<f64> {
    net.check_hub(hub)?;
    let (d1, d2) = net.hub_distances(pair, hub);
    Ok(end_to_end_rate(d1, d2, Orientation::AsymmetricSourceScissor, policies, rc, loss)?.rate)
}

/// Repeaterless capacity of the route through the hub.
pub fn baseline_a(net: &SquareNetwork, pair: Pair, hub: Point, loss: LossModel) -> f64 {
    let (d1, d2) = net.hub_distances(pair, hub);
    repeaterless_capacity(transmissivity(d1, loss) * transmissivity(d2, loss))
}

/// Repeaterless capacity of the straight path between the users.
pub fn baseline_b(net: &SquareNetwork, pair: Pair, loss: LossModel) -> f64 {
    repeaterless_capacity(transmissivity(net.pair_length(pair), loss))
}

/// Direct swap at an end user over the straight path.
pub fn baseline_c(net: &SquareNetwork, pair: Pair, chi: f64, loss: LossModel) -> Result<f64> {
    baseline_direct_dhd(chi, transmissivity(net.pair_length(pair), loss))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub rate: f64,
    pub cap_a: f64,
    pub cap_b: f64,
    pub rate_c: f64,
}

impl PairCell {
    pub fn beats(&self, baseline: Baseline) -> bool {
        self.rate > self.baseline(baseline)
    }

    pub fn baseline(&self, baseline: Baseline) -> f64 {
        match baseline {
            Baseline::A => self.cap_a,
            Baseline::B => self.cap_b,
            Baseline::C => self.rate_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    A,
    B,
    C,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::A, Baseline::B, Baseline::C];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub hub: Point,
    pub pairs: [PairCell; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSweepResult {
    pub side_km: f64,
    pub grid_n: usize,
    /// Row-major over `(iy, ix)`.
    pub cells: Vec<Cell>,
}

impl PlacementSweepResult {
    pub fn cell(&self, ix: usize, iy: usize) -> &Cell {
        &self.cells[iy * self.grid_n + ix]
    }

    pub fn center(&self) -> &Cell {
        let c = self.grid_n / 2;
        self.cell(c, c)
    }

    pub const CSV_HEADER: &'static str = "x_km,y_km,pair_id,rate,cap_a,cap_b,rate_c,beats_a,beats_b,beats_c";

    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.cells.len() * 6);
        for cell in &self.cells {
            for (id, p) in cell.pairs.iter().enumerate() {
                out.push(format!(
                    "{},{},{},{:e},{:e},{:e},{:e},{},{},{}",
                    cell.hub.0,
                    cell.hub.1,
                    id,
                    p.rate,
                    p.cap_a,
                    p.cap_b,
                    p.rate_c,
                    p.beats(Baseline::A) as u8,
                    p.beats(Baseline::B) as u8,
                    p.beats(Baseline::C) as u8
                ));
            }
        }
        out
    }

    /// Largest repeater-rate / baseline ratio over all cells and pairs.
    pub fn max_ratio(&self, baseline: Baseline) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.pairs.iter())
            .filter(|p| p.baseline(baseline) > 0.0)
            .map(|p| p.rate / p.baseline(baseline))
            .fold(0.0, f64::max)
    }

    /// Cells at which every pair beats `baseline`.
    pub fn all_pairs_cells(&self, baseline: Baseline) -> Vec<Point> {
        self.cells.iter().filter(|c| c.pairs.iter().all(|p| p.beats(baseline))).map(|c| c.hub).collect()
    }
}

/// Inclusive `grid_n`-point lattice coordinate.
fn lattice(side: f64, grid_n: usize, i: usize) -> f64 {
    side * i as f64 / (grid_n - 1) as f64
}

/// Distances are rounded to a picometre so mirror-image cells share keys.
fn key(d1: f64, d2: f64) -> (i64, i64) {
    ((d1 * 1e9).round() as i64, (d2 * 1e9).round() as i64)
}

/// Rates for every (hub, pair) of the `grid_n × grid_n` placement lattice.
/// Distinct link-length pairs are evaluated once, in parallel, in a fixed
/// order.
pub fn placement_sweep(
    net: &SquareNetwork,
    grid_n: usize,
    rc: &RateConfig,
    policies: &Policies,
    loss: LossModel,
) -> Result<PlacementSweepResult> {
    if grid_n < 3 || grid_n % 2 == 0 {
        return Err(Error::InvalidParameter(format!("grid_n must be odd and >= 3, got {grid_n}")));
    }
    let hubs: Vec<Point> = (0..grid_n)
        .flat_map(|iy| (0..grid_n).map(move |ix| (ix, iy)))
        .map(|(ix, iy)| (lattice(net.side_km, grid_n, ix), lattice(net.side_km, grid_n, iy)))
        .collect();
    hub_sweep(net, &hubs, grid_n, rc, policies, loss)
}

fn hub_sweep(
    net: &SquareNetwork,
    hubs: &[Point],
    grid_n: usize,
    rc: &RateConfig,
    policies: &Policies,
    loss: LossModel,
) -> Result<PlacementSweepResult> {
    let mut unique: BTreeMap<(i64, i64), (f64, f64)> = BTreeMap::new();
    for &hub in hubs {
        for &pair in net.pairs() {
            let (d1, d2) = net.hub_distances(pair, hub);
            unique.entry(key(d1, d2)).or_insert((d1, d2));
        }
    }
    let jobs: Vec<((i64, i64), (f64, f64))> = unique.into_iter().collect();
    let rates: Vec<f64> = jobs
        .par_iter()
        .map(|&(_, (d1, d2))| {
            end_to_end_rate(d1, d2, Orientation::AsymmetricSourceScissor, policies, rc, loss).map(|p| p.rate)
        })
        .collect::<Result<_>>()?;
    let table: BTreeMap<(i64, i64), f64> = jobs.iter().map(|j| j.0).zip(rates).collect();

    let mut pair_base = [(0.0, 0.0); 6];
    for (slot, &pair) in pair_base.iter_mut().zip(net.pairs()) {
        *slot = (baseline_b(net, pair, loss), baseline_c(net, pair, policies.chi1, loss)?);
    }
    let cells = hubs
        .iter()
        .map(|&hub| {
            let mut pairs = [PairCell { rate: 0.0, cap_a: 0.0, cap_b: 0.0, rate_c: 0.0 }; 6];
            for (slot, &pair) in pairs.iter_mut().zip(net.pairs()) {
                let (d1, d2) = net.hub_distances(pair, hub);
                *slot = PairCell {
                    rate: table[&key(d1, d2)],
                    cap_a: baseline_a(net, pair, hub, loss),
                    cap_b: pair_base[pair.id].0,
                    rate_c: pair_base[pair.id].1,
                };
            }
            Cell { hub, pairs }
        })
        .collect();
    Ok(PlacementSweepResult { side_km: net.side_km, grid_n, cells })
}

/// Share of (cell, pair) combinations of `class` whose rate beats `baseline`.
pub fn beat_fraction(sweep: &PlacementSweepResult, baseline: Baseline, class: PairClass) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for cell in &sweep.cells {
        for pair in PAIRS.iter().filter(|p| p.class == class) {
            total += 1;
            hits += cell.pairs[pair.id].beats(baseline) as usize;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub hubs: Vec<Point>,
    /// Best rate per pair over all hubs.
    pub best_rates: [f64; 6],
    /// Per pair: some hub beats baseline (a) measured through that hub.
    pub beats_a: [bool; 6],
    pub beats_b: [bool; 6],
    pub beats_c: [bool; 6],
}

impl Coverage {
    pub fn all_pairs(&self, baseline: Baseline) -> bool {
        let flags = match baseline {
            Baseline::A => &self.beats_a,
            Baseline::B => &self.beats_b,
            Baseline::C => &self.beats_c,
        };
        flags.iter().all(|&b| b)
    }

    fn from_cells(cells: &[&Cell]) -> Self {
        let mut cov = Coverage {
            hubs: cells.iter().map(|c| c.hub).collect(),
            best_rates: [0.0; 6],
            beats_a: [false; 6],
            beats_b: [false; 6],
            beats_c: [false; 6],
        };
        for cell in cells {
            for (id, p) in cell.pairs.iter().enumerate() {
                cov.best_rates[id] = cov.best_rates[id].max(p.rate);
                cov.beats_a[id] |= p.beats(Baseline::A);
                cov.beats_b[id] |= p.beats(Baseline::B);
                cov.beats_c[id] |= p.beats(Baseline::C);
            }
        }
        cov
    }
}

/// Each pair uses whichever of `hubs` serves it best.
pub fn multi_charlie_coverage(
    net: &SquareNetwork,
    hubs: &[Point],
    rc: &RateConfig,
    policies: &Policies,
    loss: LossModel,
) -> Result<Coverage> {
    if hubs.is_empty() {
        return Err(Error::InvalidParameter("at least one hub position is required".into()));
    }
    for &h in hubs {
        net.check_hub(h)?;
    }
    let sweep = hub_sweep(net, hubs, 0, rc, policies, loss)?;
    let cells: Vec<&Cell> = sweep.cells.iter().collect();
    Ok(Coverage::from_cells(&cells))
}

/// Exhaustive search over `k`-subsets of swept cells for one where every pair
/// beats `baseline`; among those, the subset with the largest worst-pair
/// rate/baseline ratio.
pub fn search_hub_sets(sweep: &PlacementSweepResult, k: usize, baseline: Baseline) -> Option<(Coverage, f64)> {
    let n = sweep.cells.len();
    if k == 0 || k > n {
        return None;
    }
    // Best ratio per (cell, pair); beating means ratio > 1.
    let ratio: Vec<[f64; 6]> = sweep
        .cells
        .iter()
        .map(|c| {
            let mut r = [0.0; 6];
            for (slot, p) in r.iter_mut().zip(&c.pairs) {
                let b = p.baseline(baseline);
                *slot = if b > 0.0 { p.rate / b } else { f64::INFINITY };
            }
            r
        })
        .collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut worst = f64::INFINITY;
        for pair in 0..6 {
            let m = idx.iter().map(|&i| ratio[i][pair]).fold(0.0, f64::max);
            worst = worst.min(m);
        }
        if worst > 1.0 && best.as_ref().is_none_or(|b| worst > b.1) {
            best = Some((idx.clone(), worst));
        }
        // Next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return best.map(|(set, w)| {
                    let cells: Vec<&Cell> = set.iter().map(|&i| &sweep.cells[i]).collect();
                    (Coverage::from_cells(&cells), w)
                });
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
