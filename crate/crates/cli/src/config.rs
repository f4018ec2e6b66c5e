//! Run configuration: a flat `key = value` file, then command-line
//! overrides. The resolved values are echoed as a `#` header into every
//! output so a file fully describes the run that produced it.

use std::fmt::Write as _;
use std::path::PathBuf;

use cvrep_core::channel::{GainPolicy, GainSearch, LossModel};
use cvrep_core::network::Point;
use cvrep_core::rate::{Policies, RateConfig};
use cvrep_core::state::Orientation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RateDistance,
    Placement,
    Single,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RateDistance => "rate-distance",
            Command::Placement => "placement",
            Command::Single => "single",
            Command::Validate => "validate",
        }
    }

    fn default_out(self) -> &'static str {
        match self {
            Command::RateDistance => "rate_distance.csv",
            Command::Placement => "placement",
            Command::Single | Command::Validate => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub loss_db_per_km: f64,
    pub chi: f64,
    pub m: u64,
    pub gain_policy: GainPolicy,
    pub grid_n: usize,
    pub distances_km: Vec<f64>,
    pub scales_km: Vec<f64>,
    pub orientations: Vec<Orientation>,
    pub gamma_mass: f64,
    /// Extra hub sets for the multi-hub coverage report, e.g. `0:150;300:150`.
    pub hubs: Vec<Point>,
    /// Hub count for the exhaustive coverage search over swept cells.
    pub search_hubs: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub svg: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            loss_db_per_km: 0.2,
            chi: 0.3,
            m: 1000,
            gain_policy: GainPolicy::default(),
            grid_n: 31,
            distances_km: (1..=10).map(|k| 50.0 * k as f64).collect(),
            scales_km: vec![100.0, 200.0, 300.0, 400.0, 500.0],
            orientations: Orientation::ALL.to_vec(),
            gamma_mass: 0.99,
            hubs: Vec::new(),
            search_hubs: 3,
            seed: 0,
            threads: 0,
            out: PathBuf::from(command.default_out()),
            svg: false,
        }
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "loss_db_per_km" => self.loss_db_per_km = num(key, v)?,
            "chi" => self.chi = num(key, v)?,
            "m" | "M" => self.m = num(key, v)?,
            "gain_policy" => self.gain_policy = parse_gain_policy(v)?,
            "grid_n" => self.grid_n = num(key, v)?,
            "distances_km" => self.distances_km = list(key, v)?,
            "scales_km" => self.scales_km = list(key, v)?,
            "orientation" => self.orientations = parse_orientations(v)?,
            "gamma_mass" => self.gamma_mass = num(key, v)?,
            "hubs" => self.hubs = parse_hubs(v)?,
            "search_hubs" => self.search_hubs = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "svg" => self.svg = parse_bool(key, v)?,
            other => return err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Settings from a config file body; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value, got '{line}'", lineno + 1));
            };
            self.set(k, v).map_err(|e| ConfigError(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if LossModel::new(self.loss_db_per_km).is_err() {
            return err(format!("loss_db_per_km must be >= 0, got {}", self.loss_db_per_km));
        }
        if !(0.0..1.0).contains(&self.chi) {
            return err(format!("chi must lie in [0, 1), got {}", self.chi));
        }
        if self.m < 1 {
            return err("M must be at least 1");
        }
        if !(self.gamma_mass > 0.9 && self.gamma_mass < 1.0) {
            return err(format!("gamma_mass must lie in (0.9, 1), got {}", self.gamma_mass));
        }
        if self.grid_n < 3 || self.grid_n % 2 == 0 {
            return err(format!("grid_n must be odd and >= 3, got {}", self.grid_n));
        }
        if self.distances_km.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return err("distances must be finite and >= 0");
        }
        if self.scales_km.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return err("scales must be finite and > 0");
        }
        if self.orientations.is_empty() {
            return err("at least one orientation is required");
        }
        match self.gain_policy {
            GainPolicy::Fixed(g) if !(g.is_finite() && g > 0.0) => return err("fixed gain must be positive"),
            GainPolicy::PowerLaw { a, .. } if !(a.is_finite() && a > 0.0) => return err("power-law prefactor must be positive"),
            GainPolicy::NumericOpt(s) if !(s.g_min > 0.0 && s.g_max >= s.g_min && s.points_per_decade > 0) => {
                return err("numeric gain search needs 0 < g_min <= g_max and points > 0")
            }
            _ => {}
        }
        match self.command {
            Command::RateDistance if self.distances_km.is_empty() => err("distances_km is empty"),
            Command::Placement if self.scales_km.is_empty() => err("scales_km is empty"),
            Command::Single if !(1..=2).contains(&self.distances_km.len()) => {
                err("single takes one total distance or two link lengths in distances_km")
            }
            Command::Single if self.orientations.len() != 1 => err("single takes exactly one orientation"),
            _ => Ok(()),
        }
    }

    pub fn policies(&self) -> Policies {
        Policies { chi1: self.chi, chi2: self.chi, gain: self.gain_policy }
    }

    pub fn rate_config(&self) -> RateConfig {
        RateConfig { m: self.m, gamma_mass: self.gamma_mass, ..RateConfig::default() }
    }

    pub fn loss(&self) -> LossModel {
        LossModel { db_per_km: self.loss_db_per_km }
    }

    /// Every setting that can affect results as `key = value` lines, in a
    /// fixed order. `threads` is left out so outputs stay byte-identical
    /// across thread counts.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("command".into(), self.command.name().into()),
            ("loss_db_per_km".into(), self.loss_db_per_km.to_string()),
            ("chi".into(), self.chi.to_string()),
            ("m".into(), self.m.to_string()),
            ("gain_policy".into(), format_gain_policy(&self.gain_policy)),
            ("grid_n".into(), self.grid_n.to_string()),
            ("distances_km".into(), join(&self.distances_km)),
            ("scales_km".into(), join(&self.scales_km)),
            ("orientation".into(), self.orientations.iter().map(|o| o.name()).collect::<Vec<_>>().join(",")),
            ("gamma_mass".into(), self.gamma_mass.to_string()),
            ("hubs".into(), self.hubs.iter().map(|(x, y)| format!("{x}:{y}")).collect::<Vec<_>>().join(";")),
            ("search_hubs".into(), self.search_hubs.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("out".into(), self.out.display().to_string()),
            ("svg".into(), self.svg.to_string()),
        ]
    }

    /// The echo as `# key = value` comment lines.
    pub fn header(&self) -> String {
        let mut s = format!("# cvrep {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in self.echo() {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.echo().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect())
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("{key}: cannot parse '{v}'")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => err(format!("{key}: expected true or false, got '{v}'")),
    }
}

pub fn parse_orientations(v: &str) -> Result<Vec<Orientation>, ConfigError> {
    if v == "all" {
        return Ok(Orientation::ALL.to_vec());
    }
    v.split(',').map(|s| s.parse::<Orientation>().map_err(|e| ConfigError(e.to_string()))).collect()
}

fn parse_hubs(v: &str) -> Result<Vec<Point>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|p| {
            let (x, y) = p.split_once(':').ok_or_else(|| ConfigError(format!("hub '{p}' is not x:y")))?;
            Ok((num("hubs", x.trim())?, num("hubs", y.trim())?))
        })
        .collect()
}

/// `numeric[:g_min=..,g_max=..,points=..,rounds=..]`, `fixed:<g>` or
/// `power[:a=..,b=..,cap=..]`.
pub fn parse_gain_policy(v: &str) -> Result<GainPolicy, ConfigError> {
    let (kind, args) = v.split_once(':').unwrap_or((v, ""));
    let mut kv = Vec::new();
    for part in args.split(',').filter(|s| !s.trim().is_empty()) {
        match part.split_once('=') {
            Some((k, x)) => kv.push((k.trim(), x.trim())),
            None => kv.push(("", part.trim())),
        }
    }
    match kind.trim() {
        "numeric" => {
            let mut s = GainSearch::default();
            for (k, x) in kv {
                match k {
                    "g_min" => s.g_min = num("gain_policy", x)?,
                    "g_max" | "cap" => s.g_max = num("gain_policy", x)?,
                    "points" => s.points_per_decade = num("gain_policy", x)?,
                    "rounds" => s.refine_rounds = num("gain_policy", x)?,
                    _ => return err(format!("gain_policy: unknown numeric option '{k}'")),
                }
            }
            Ok(GainPolicy::NumericOpt(s))
        }
        "fixed" => match kv.as_slice() {
            [("", x)] | [("g", x)] => Ok(GainPolicy::Fixed(num("gain_policy", x)?)),
            _ => err("gain_policy: fixed takes one value, e.g. fixed:30"),
        },
        "power" => {
            let (mut a, mut b, mut cap) = (1.0, 0.25, None);
            for (k, x) in kv {
                match k {
                    "a" => a = num("gain_policy", x)?,
                    "b" => b = num("gain_policy", x)?,
                    "cap" => cap = Some(num("gain_policy", x)?),
                    _ => return err(format!("gain_policy: unknown power option '{k}'")),
                }
            }
            Ok(GainPolicy::PowerLaw { a, b, g_max: cap })
        }
        other => err(format!("gain_policy: unknown kind '{other}' (numeric, fixed, power)")),
    }
}

pub fn format_gain_policy(p: &GainPolicy) -> String {
    match *p {
        GainPolicy::Fixed(g) => format!("fixed:{g}"),
        GainPolicy::PowerLaw { a, b, g_max } => match g_max {
            Some(c) => format!("power:a={a},b={b},cap={c}"),
            None => format!("power:a={a},b={b}"),
        },
        GainPolicy::NumericOpt(s) => format!(
            "numeric:g_min={},g_max={},points={},rounds={}",
            s.g_min, s.g_max, s.points_per_decade, s.refine_rounds
        ),
    }
}
