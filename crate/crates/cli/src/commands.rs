use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use cvrep_core::channel::{repeaterless_capacity, transmissivity};
use cvrep_core::network::{
    beat_fraction, multi_charlie_coverage, placement_sweep, search_hub_sets, Baseline, PairClass,
    PlacementSweepResult, SquareNetwork,
};
use cvrep_core::rate::{end_to_end_rate, optimized_m_rate, rate_distance_sweep, RatePoint};
use cvrep_core::state::Orientation;
use cvrep_core::validate::{self, SuiteReport};

use crate::config::RunConfig;
use crate::svg;

/// Failure of a command after its configuration was accepted.
#[derive(Debug)]
pub enum RunError {
    /// A parameter rejected by the numerics.
    Config(String),
    /// A numerical or physical check failed, or output could not be written.
    Failed(String),
}

impl From<cvrep_core::Error> for RunError {
    fn from(e: cvrep_core::Error) -> Self {
        match e {
            cvrep_core::Error::InvalidParameter(m) => RunError::Config(m),
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Failed(format!("i/o: {e}"))
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn write_text(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

const SERIES_HEADER: &str = "distance_km,series,d1_km,d2_km,eta1,eta2,g1,g2,M,rate_ebits_per_mode,cap_direct,cap_through_node";

fn series_row(series: &str, p: &RatePoint) -> String {
    format!(
        "{},{series},{},{},{:e},{:e},{},{},{},{:e},{:e},{:e}",
        p.d1_km + p.d2_km,
        p.d1_km,
        p.d2_km,
        p.eta1,
        p.eta2,
        p.g1,
        p.g2,
        p.m,
        p.rate,
        p.cap_direct,
        p.cap_through_node
    )
}

pub const OPTIMAL_M_SERIES: &str = "asymmetric-optimal-m";

/// Rates for each orientation, the direct capacity and the optimized-M
/// asymmetric curve over the configured total distances.
pub fn rate_distance(cfg: &RunConfig) -> Result<()> {
    let (pol, rc, loss) = (cfg.policies(), cfg.rate_config(), cfg.loss());
    let points = rate_distance_sweep(&cfg.distances_km, &cfg.orientations, &pol, &rc, loss)?;
    let optimized: Vec<(u64, RatePoint)> = cfg
        .distances_km
        .par_iter()
        .map(|&d| optimized_m_rate(d / 2.0, d / 2.0, Orientation::AsymmetricSourceScissor, &pol, &rc, loss))
        .collect::<cvrep_core::Result<_>>()?;

    let mut csv = cfg.header();
    csv.push_str(SERIES_HEADER);
    csv.push('\n');
    let mut series: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
    let mut push = |name: &str, d: f64, rate: f64, cap: f64| match series.iter_mut().find(|s| s.0 == name) {
        Some(s) => s.1.push((d, rate, cap)),
        None => series.push((name.to_string(), vec![(d, rate, cap)])),
    };
    for (i, &d) in cfg.distances_km.iter().enumerate() {
        let row = &points[i * cfg.orientations.len()..(i + 1) * cfg.orientations.len()];
        for p in row {
            csv.push_str(&series_row(p.orientation.name(), p));
            csv.push('\n');
            push(p.orientation.name(), d, p.rate, p.cap_direct);
        }
        let cap = repeaterless_capacity(transmissivity(d, cfg.loss()));
        let half = transmissivity(d / 2.0, cfg.loss());
        csv.push_str(&format!(
            "{d},capacity,{},{},{half:e},{half:e},,,,{cap:e},{cap:e},{:e}\n",
            d / 2.0,
            d / 2.0,
            repeaterless_capacity(half * half)
        ));
        push("capacity", d, cap, cap);
        let (_, p) = &optimized[i];
        csv.push_str(&series_row(OPTIMAL_M_SERIES, p));
        csv.push('\n');
        push(OPTIMAL_M_SERIES, d, p.rate, p.cap_direct);
    }
    write_text(&cfg.out, &csv)?;

    let summary: Vec<Value> = series
        .iter()
        .filter(|(name, _)| name != "capacity")
        .map(|(name, pts)| {
            let crossing = pts.iter().find(|p| p.1 > p.2).map(|p| p.0);
            let max_ratio = pts.iter().filter(|p| p.2 > 0.0).map(|p| p.1 / p.2).fold(0.0, f64::max);
            let last = pts.last().map(|p| p.1 / p.2);
            json!({"series": name, "first_distance_beating_capacity_km": crossing,
                   "max_rate_over_capacity": max_ratio, "rate_over_capacity_at_last_distance": last})
        })
        .collect();
    let doc = json!({"config": cfg.echo_json(), "series": summary});
    if cfg.out.as_os_str() != "-" {
        write_text(&sibling(&cfg.out, "json"), &pretty(&doc))?;
        if cfg.svg {
            write_text(&sibling(&cfg.out, "svg"), &svg::rate_plot(&series, &cfg.header()))?;
        }
    }
    Ok(())
}

fn unimodal(xs: &[f64]) -> bool {
    if xs.len() < 3 {
        return false;
    }
    let peak = xs.iter().enumerate().fold(0, |b, (i, &x)| if x > xs[b] { i } else { b });
    peak > 0
        && peak < xs.len() - 1
        && xs[..=peak].windows(2).all(|w| w[1] >= w[0])
        && xs[peak..].windows(2).all(|w| w[1] <= w[0])
}

fn baseline_name(b: Baseline) -> &'static str {
    match b {
        Baseline::A => "a",
        Baseline::B => "b",
        Baseline::C => "c",
    }
}

fn scale_summary(cfg: &RunConfig, net: &SquareNetwork, sweep: &PlacementSweepResult) -> Result<Value> {
    let mut fractions = serde_json::Map::new();
    for class in [PairClass::Adjacent, PairClass::Diagonal] {
        let per: serde_json::Map<String, Value> = Baseline::ALL
            .iter()
            .map(|&b| (baseline_name(b).to_string(), json!(beat_fraction(sweep, b, class))))
            .collect();
        fractions.insert(class.to_string(), Value::Object(per));
    }
    let per_baseline = |f: &dyn Fn(Baseline) -> Value| -> Value {
        Value::Object(Baseline::ALL.iter().map(|&b| (baseline_name(b).to_string(), f(b))).collect())
    };
    let center = sweep.center();
    let search = search_hub_sets(sweep, cfg.search_hubs, Baseline::B).map(|(cov, worst)| {
        json!({"hubs": cov.hubs, "worst_rate_over_baseline_b": worst, "best_rates": cov.best_rates})
    });
    let multi = if cfg.hubs.is_empty() {
        Value::Null
    } else {
        let cov = multi_charlie_coverage(net, &cfg.hubs, &cfg.rate_config(), &cfg.policies(), cfg.loss())?;
        json!({"hubs": cov.hubs, "best_rates": cov.best_rates,
               "all_pairs": per_baseline(&|b| json!(cov.all_pairs(b)))})
    };
    Ok(json!({
        "side_km": sweep.side_km,
        "beat_fraction": fractions,
        "center_beats_all_pairs": per_baseline(&|b| json!(center.pairs.iter().all(|p| p.beats(b)))),
        "single_hub_cells_beating_all_pairs": per_baseline(&|b| json!(sweep.all_pairs_cells(b).len())),
        "max_rate_over_baseline": per_baseline(&|b| json!(sweep.max_ratio(b))),
        "hub_search": {"k": cfg.search_hubs, "baseline": "b", "best": search},
        "configured_hubs": multi,
    }))
}

/// Heatmaps and a summary for each configured square side.
pub fn placement(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out;
    fs::create_dir_all(dir)?;
    let mut scales = Vec::new();
    let mut adj_a = Vec::new();
    let mut diag_b = Vec::new();
    for &side in &cfg.scales_km {
        let net = SquareNetwork::new(side)?;
        let sweep = placement_sweep(&net, cfg.grid_n, &cfg.rate_config(), &cfg.policies(), cfg.loss())?;
        let mut csv = cfg.header();
        csv.push_str(&format!("# side_km = {side}\n"));
        csv.push_str(PlacementSweepResult::CSV_HEADER);
        csv.push('\n');
        for row in sweep.csv_rows() {
            csv.push_str(&row);
            csv.push('\n');
        }
        let stem = format!("heatmap_{side}km");
        write_text(&dir.join(format!("{stem}.csv")), &csv)?;
        if cfg.svg {
            write_text(&dir.join(format!("{stem}.svg")), &svg::heatmap(&sweep, &cfg.header()))?;
        }
        adj_a.push(beat_fraction(&sweep, Baseline::A, PairClass::Adjacent));
        diag_b.push(beat_fraction(&sweep, Baseline::B, PairClass::Diagonal));
        scales.push(scale_summary(cfg, &net, &sweep)?);
    }
    let doc = json!({
        "config": cfg.echo_json(),
        "scales": scales,
        "beat_fraction_curves": {
            "adjacent_vs_a": {"values": adj_a, "unimodal": unimodal(&adj_a)},
            "diagonal_vs_b": {"values": diag_b, "unimodal": unimodal(&diag_b)},
        },
    });
    write_text(&dir.join("summary.json"), &pretty(&doc))
}

/// One evaluation with full diagnostics.
pub fn single(cfg: &RunConfig) -> Result<()> {
    let (d1, d2) = match cfg.distances_km.as_slice() {
        [d] => (d / 2.0, d / 2.0),
        [a, b] => (*a, *b),
        _ => unreachable!("validated"),
    };
    let p = end_to_end_rate(d1, d2, cfg.orientations[0], &cfg.policies(), &cfg.rate_config(), cfg.loss())?;
    let doc = json!({"config": cfg.echo_json(), "result": p});
    write_text(&cfg.out, &pretty(&doc))
}

/// Runs every self-check plus the mutation check. Returns whether all passed.
pub fn validate(cfg: &RunConfig) -> Result<bool> {
    let mut suites = validate::run_all(cfg.seed);
    // A 1e-6 error in one closed-form coefficient must be caught.
    let mutated = validate::oracle_equivalence(5, cfg.seed, 1e-6);
    suites.push(SuiteReport {
        name: "mutation-check".into(),
        passed: !mutated.passed,
        detail: format!("perturbed coefficient detected: {}; {}", !mutated.passed, mutated.detail),
        ..mutated
    });
    for s in &suites {
        eprintln!("{:<24} {}  {:.2}s  {}", s.name, if s.passed { "ok  " } else { "FAIL" }, s.seconds, s.detail);
    }
    let passed = suites.iter().all(|s| s.passed);
    let doc = json!({"config": cfg.echo_json(), "passed": passed, "suites": suites});
    write_text(&cfg.out, &pretty(&doc))?;
    Ok(passed)
}
