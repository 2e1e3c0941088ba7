//! Run configuration files.
//!
//! TOML with the sections `[grid]`, `[model]`, `[time]`, `[sweep]` and
//! `[output]`. Unknown sections and keys are rejected, and every problem in a
//! file is reported at once. Lengths may be written as numbers or as multiples
//! of π, e.g. `l_x = "24pi"`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::ConfigError;
use crate::experiments::{Study, SweepConfig, FULL_SCALE};
use crate::grid::GridSpec;
use crate::model::{ExternalInput, FiringRateSpec, InitialConditionSpec, KernelSpec, ModelSpec};
use crate::stepper::{SnapshotPolicy, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    /// Use the `[grid]` resolution as written.
    #[default]
    Desk,
    /// Override the resolution with the full-scale `2¹² × 2¹⁰` grid.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub time: TimeGrid,
    pub nus: Vec<f64>,
    pub profile_nu: f64,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub plots: bool,
    pub scale: Scale,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Grid after applying the scale toggle.
    pub fn effective_grid(&self) -> GridSpec {
        match self.scale {
            Scale::Desk => self.grid,
            Scale::Full => GridSpec {
                n_x: FULL_SCALE.0,
                n_xi: FULL_SCALE.1,
                ..self.grid
            },
        }
    }

    pub fn study(&self) -> Study {
        Study {
            grid: self.effective_grid(),
            model: self.model.clone(),
            time: self.time,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            study: self.study(),
            nus: self.nus.clone(),
        }
    }

    pub fn snapshot_policy(&self) -> SnapshotPolicy {
        if self.snapshot_every == 0 {
            SnapshotPolicy::None
        } else {
            SnapshotPolicy::Every(self.snapshot_every)
        }
    }

    /// Serialize to the configuration format; [`parse_config_str`] reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let m = &self.model;
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "n_x = {}", g.n_x);
        let _ = writeln!(s, "n_xi = {}", g.n_xi);
        let _ = writeln!(s, "l_x = {:?}", g.l_x);
        let _ = writeln!(s, "l_xi = {:?}", g.l_xi);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "gamma = {:?}", m.gamma);
        let _ = writeln!(s, "nu = {:?}", m.nu);
        let _ = writeln!(s, "mu = {:?}", m.firing.mu);
        let _ = writeln!(s, "theta = {:?}", m.firing.theta);
        let _ = writeln!(s, "kappa = {:?}", m.kernel.kappa);
        let _ = writeln!(s, "sigma = {:?}", m.kernel.sigma);
        let _ = writeln!(s, "xi0 = {:?}", m.kernel.xi0);
        let _ = writeln!(s, "rho = {:?}", m.init.rho);
        let _ = writeln!(s, "x0 = {:?}", m.init.x0);
        let _ = writeln!(s, "init_sigma = {:?}", m.init.sigma);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "tau = {:?}", self.time.tau());
        let _ = writeln!(s, "t_end = {:?}", self.time.t_end());
        let _ = writeln!(s, "\n[sweep]");
        let nus: Vec<String> = self.nus.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "nus = [{}]", nus.join(", "));
        let _ = writeln!(s, "profile_nu = {:?}", self.profile_nu);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {:?}", self.output_dir.display().to_string());
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "plots = {}", self.plots);
        let _ = writeln!(
            s,
            "scale = \"{}\"",
            match self.scale {
                Scale::Desk => "desk",
                Scale::Full => "full",
            }
        );
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads = {t}");
        }
        s
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["n_x", "n_xi", "l_x", "l_xi"]),
    (
        "model",
        &["gamma", "nu", "mu", "theta", "kappa", "sigma", "xi0", "rho", "x0", "init_sigma"],
    ),
    ("time", &["tau", "t_end"]),
    ("sweep", &["nus", "profile_nu"]),
    ("output", &["dir", "snapshot_every", "plots", "scale", "threads"]),
];

struct Reader<'a> {
    root: &'a Table,
    problems: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.root.get(section)?.as_table()?.get(key)
    }

    fn missing(&mut self, section: &str, key: &str) {
        self.problems.push(format!("missing required key [{section}] {key}"));
    }

    fn float(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.get(section, key) {
            None => None,
            Some(Value::Float(f)) => Some(*f),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(Value::String(s)) => match parse_pi_multiple(s) {
                Some(v) => Some(v),
                None => {
                    self.problems.push(format!(
                        "[{section}] {key}: cannot read \"{s}\" as a number or multiple of pi"
                    ));
                    None
                }
            },
            Some(other) => {
                self.problems.push(format!(
                    "[{section}] {key}: expected a number, found {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn required_float(&mut self, section: &str, key: &str) -> f64 {
        if self.get(section, key).is_none() {
            self.missing(section, key);
            return f64::NAN;
        }
        self.float(section, key).unwrap_or(f64::NAN)
    }

    fn uint(&mut self, section: &str, key: &str) -> Option<usize> {
        match self.get(section, key) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as usize),
            Some(other) => {
                self.problems.push(format!(
                    "[{section}] {key}: expected a non-negative integer, found {other}"
                ));
                None
            }
        }
    }

    fn required_uint(&mut self, section: &str, key: &str) -> usize {
        if self.get(section, key).is_none() {
            self.missing(section, key);
            return 0;
        }
        self.uint(section, key).unwrap_or(0)
    }
}

/// Parse `"24pi"`, `"24*pi"`, `"pi"` or a plain decimal.
fn parse_pi_multiple(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(coef) = t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        let coef = coef.trim().trim_end_matches('*').trim();
        if coef.is_empty() {
            return Some(PI);
        }
        return coef.parse::<f64>().ok().map(|c| c * PI);
    }
    t.parse().ok()
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::single(format!("parse error: {e}")))?;

    let mut r = Reader {
        root: &root,
        problems: Vec::new(),
    };

    for (name, value) in &root {
        match SECTIONS.iter().find(|(s, _)| s == name) {
            None => r.problems.push(format!("unknown section [{name}]")),
            Some((_, keys)) => match value.as_table() {
                None => r.problems.push(format!("[{name}] must be a section")),
                Some(t) => {
                    for k in t.keys() {
                        if !keys.contains(&k.as_str()) {
                            r.problems.push(format!("unknown key [{name}] {k}"));
                        }
                    }
                }
            },
        }
    }

    let grid = GridSpec::new(
        r.required_uint("grid", "n_x"),
        r.required_uint("grid", "n_xi"),
        r.required_float("grid", "l_x"),
        r.required_float("grid", "l_xi"),
    );

    let gamma = r.required_float("model", "gamma");
    let nu = r.required_float("model", "nu");
    let mu = r.required_float("model", "mu");
    let theta = r.required_float("model", "theta");
    let kappa = r.required_float("model", "kappa");
    let sigma = r.required_float("model", "sigma");
    let xi0 = r.required_float("model", "xi0");
    let rho = r.required_float("model", "rho");
    let x0 = r.required_float("model", "x0");
    let init_sigma = r.float("model", "init_sigma").unwrap_or(sigma);

    let tau = r.required_float("time", "tau");
    let t_end = r.required_float("time", "t_end");

    let nus = match r.get("sweep", "nus") {
        None => crate::experiments::DEFAULT_NUS.to_vec(),
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|v| match v {
                Value::Float(f) => Some(*f),
                Value::Integer(i) => Some(*i as f64),
                other => {
                    r.problems.push(format!("[sweep] nus: non-numeric entry {other}"));
                    None
                }
            })
            .collect(),
        Some(other) => {
            r.problems.push(format!("[sweep] nus: expected an array, found {}", other.type_str()));
            Vec::new()
        }
    };
    let profile_nu = r.float("sweep", "profile_nu").unwrap_or(0.1);

    let output_dir = match r.get("output", "dir") {
        None => PathBuf::from("out"),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(other) => {
            r.problems.push(format!("[output] dir: expected a string, found {}", other.type_str()));
            PathBuf::from("out")
        }
    };
    let snapshot_every = r.uint("output", "snapshot_every").unwrap_or(0);
    let plots = match r.get("output", "plots") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(other) => {
            r.problems.push(format!("[output] plots: expected true/false, found {other}"));
            false
        }
    };
    let scale = match r.get("output", "scale") {
        None => Scale::Desk,
        Some(Value::String(s)) if s == "desk" => Scale::Desk,
        Some(Value::String(s)) if s == "full" => Scale::Full,
        Some(other) => {
            r.problems.push(format!("[output] scale: expected \"desk\" or \"full\", found {other}"));
            Scale::Desk
        }
    };
    let threads = r.uint("output", "threads");

    let mut problems = r.problems;

    // invariant checks only make sense once every key has been read
    if problems.is_empty() {
        if let Err(e) = grid.validate() {
            problems.push(e.to_string());
        }
    }
    let time = match TimeGrid::new(tau, t_end) {
        Ok(t) => Some(t),
        Err(e) => {
            if tau.is_finite() && t_end.is_finite() {
                problems.push(e.to_string());
            }
            None
        }
    };

    let model = ModelSpec {
        gamma,
        nu,
        firing: FiringRateSpec::new(mu, theta),
        kernel: KernelSpec::new(kappa, sigma, xi0),
        init: InitialConditionSpec::new(rho, x0, init_sigma),
        input: ExternalInput::Zero,
    };
    if problems.is_empty() {
        if !(gamma.is_finite() && gamma >= 0.0) {
            problems.push(format!("invalid parameter: gamma must be >= 0, got {gamma}"));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            problems.push(format!("invalid parameter: nu must be >= 0, got {nu}"));
        }
        for e in [
            model.firing.validate().err(),
            model.kernel.validate(grid.l_xi).err(),
            model.init.validate().err(),
        ]
        .into_iter()
        .flatten()
        {
            problems.push(e.to_string());
        }
        let sweep = SweepConfig {
            study: Study {
                grid,
                model: model.clone(),
                time: time.unwrap_or_else(|| TimeGrid::new(1.0, 1.0).unwrap()),
            },
            nus: nus.clone(),
        };
        if let Err(e) = sweep.validate() {
            problems.push(e.to_string());
        }
        if !(profile_nu.is_finite() && profile_nu >= 0.0) {
            problems.push(format!("invalid parameter: profile_nu must be >= 0, got {profile_nu}"));
        }
    }

    if !problems.is_empty() {
        return Err(ConfigError { problems });
    }
    Ok(RunConfig {
        grid,
        model,
        time: time.expect("checked above"),
        nus,
        profile_nu,
        output_dir,
        snapshot_every,
        plots,
        scale,
        threads,
    })
}
