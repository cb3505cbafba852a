//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use super::DriverError;
use crate::model::{InitialCondition, ModelParams};
use crate::spectral::{CutoffSpec, TorusGrid};
use crate::timestepping::{DtPolicy, Scheme, StepperConfig};

/// Every recognized key with its default value, in the order used when the
/// resolved configuration is written out.
const DEFAULTS: &[(&str, &str)] = &[
    ("dimension", "1"),
    ("modes", "64"),
    ("alpha_minus_d", "-1"),
    ("c_k", "-1"),
    ("nu", "0"),
    ("mu", "0"),
    ("cutoff", "bump"),
    ("initial", "cosine"),
    ("ic_mean", "1"),
    ("ic_amplitude", "0.5"),
    ("ic_k1", "1"),
    ("ic_k2", "0"),
    ("ic_mass", "1"),
    ("ic_width", "0.5"),
    ("ic_center1", "3.141592653589793"),
    ("ic_center2", "3.141592653589793"),
    ("ic_decay", "2"),
    ("ic_radius", "0.5"),
    ("t_end", "1"),
    ("dt_policy", "adaptive"),
    ("dt", "0.001"),
    ("safety", "0.5"),
    ("dt_max", "0.01"),
    ("max_steps", "1000000"),
    ("sample_every", "10"),
    ("snapshot_every", "0"),
    ("s_list", "1,2,4"),
    ("energy_s", "1"),
    ("norm_s", "4"),
    ("blowup_threshold", "1e8"),
    ("output", "out"),
    ("seed", "0"),
    ("mu_list", "0.5,0.25,0.125"),
    ("picard_iterations", "6"),
    ("n_list", "64,128,256"),
    ("verify_select", "lemma1,bdiff,gdecomp,commutator,plain_commutator,antisymmetry"),
    ("verify_samples", "100000"),
    ("verify_s", "3"),
    ("verify_b", "0.5"),
    ("verify_eps", "0.5"),
    ("verify_trials", "1000"),
    ("verify_modes", "64"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub modes: usize,
    pub params: ModelParams,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub dt_policy: DtPolicy,
    pub max_steps: usize,
    pub sample_every: usize,
    /// Write a snapshot every this many samples; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub s_list: Vec<f64>,
    pub energy_s: f64,
    /// Sobolev index `s` of the `H^{s-1}` error in μ-convergence studies.
    pub norm_s: f64,
    pub blowup_threshold: f64,
    pub output: PathBuf,
    pub seed: u64,
    pub mu_list: Vec<f64>,
    pub picard_iterations: usize,
    pub n_list: Vec<usize>,
    pub verify: VerifyConfig,
    /// Resolved key/value pairs, all keys present.
    entries: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub select: Vec<String>,
    pub samples: usize,
    pub s: f64,
    pub b: f64,
    pub eps: f64,
    pub trials: usize,
    pub modes: usize,
}

/// Normalizes `c-K`/`C_K` style spellings to the canonical key.
fn canonical(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

fn known(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, DriverError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            DriverError::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        out.push((canonical(k), v.trim().to_string()));
    }
    Ok(out)
}

/// Turns `--key value` / `--key=value` words into pairs.
pub fn parse_overrides(words: &[String]) -> Result<Vec<(String, String)>, DriverError> {
    let mut out = Vec::new();
    let mut it = words.iter();
    while let Some(w) = it.next() {
        let body = w
            .strip_prefix("--")
            .ok_or_else(|| DriverError::Config(format!("expected `--key value`, got `{w}`")))?;
        match body.split_once('=') {
            Some((k, v)) => out.push((canonical(k), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| DriverError::Config(format!("missing value for `{w}`")))?;
                out.push((canonical(body), v.clone()));
            }
        }
    }
    Ok(out)
}

fn num<T: FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T, DriverError> {
    let v = &m[key];
    v.parse()
        .map_err(|_| DriverError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<Vec<T>, DriverError> {
    m[key]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| DriverError::Config(format!("`{key}`: cannot parse `{s}`")))
        })
        .collect()
}

impl RunConfig {
    /// Builds a configuration from defaults, then `pairs` in order (later wins).
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, DriverError> {
        let mut m: BTreeMap<String, String> = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in pairs {
            if !known(k) {
                return Err(DriverError::Config(format!("unknown key `{k}`")));
            }
            m.insert(k.clone(), v.clone());
        }
        Self::from_map(m)
    }

    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self, DriverError> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs)
    }

    fn from_map(m: BTreeMap<String, String>) -> Result<Self, DriverError> {
        let cfg_err = |e: &dyn std::fmt::Display| DriverError::Config(e.to_string());
        let dimension: usize = num(&m, "dimension")?;
        let modes: usize = num(&m, "modes")?;
        TorusGrid::new(dimension, modes).map_err(|e| cfg_err(&e))?;
        let cutoff = CutoffSpec::parse(&m["cutoff"])
            .ok_or_else(|| DriverError::Config(format!("unknown cutoff `{}`", m["cutoff"])))?;
        let params = ModelParams::new(
            num(&m, "alpha_minus_d")?,
            num(&m, "c_k")?,
            num(&m, "nu")?,
            num(&m, "mu")?,
            cutoff,
        )
        .map_err(|e| cfg_err(&e))?;
        let seed: u64 = num(&m, "seed")?;
        let initial = match m["initial"].as_str() {
            "cosine" => InitialCondition::CosinePerturbation {
                mean: num(&m, "ic_mean")?,
                amplitude: num(&m, "ic_amplitude")?,
                wavevector: [num(&m, "ic_k1")?, num(&m, "ic_k2")?],
            },
            "gaussian" => InitialCondition::GaussianBump {
                mass: num(&m, "ic_mass")?,
                width: num(&m, "ic_width")?,
                center: [num(&m, "ic_center1")?, num(&m, "ic_center2")?],
            },
            "random" => InitialCondition::SpectralRandom {
                seed,
                decay: num(&m, "ic_decay")?,
                mean: num(&m, "ic_mean")?,
                amplitude: num(&m, "ic_amplitude")?,
            },
            "poisson" => InitialCondition::Poisson {
                mean: num(&m, "ic_mean")?,
                amplitude: num(&m, "ic_amplitude")?,
                radius: num(&m, "ic_radius")?,
            },
            other => return Err(DriverError::Config(format!("unknown initial condition `{other}`"))),
        };
        initial.validate().map_err(|e| cfg_err(&e))?;
        let dt_policy = match m["dt_policy"].as_str() {
            "fixed" => DtPolicy::Fixed(num(&m, "dt")?),
            "adaptive" => DtPolicy::Adaptive {
                safety: num(&m, "safety")?,
                dt_max: num(&m, "dt_max")?,
            },
            other => return Err(DriverError::Config(format!("unknown dt_policy `{other}`"))),
        };
        let s_list: Vec<f64> = list(&m, "s_list")?;
        if s_list.is_empty() {
            return Err(DriverError::Config("s_list must be nonempty".into()));
        }
        if s_list.iter().chain([&num::<f64>(&m, "energy_s")?]).any(|s| !(*s >= -2.0 && s.is_finite())) {
            return Err(DriverError::Config("Sobolev exponents must be >= -2".into()));
        }
        let verify = VerifyConfig {
            select: list(&m, "verify_select")?,
            samples: num(&m, "verify_samples")?,
            s: num(&m, "verify_s")?,
            b: num(&m, "verify_b")?,
            eps: num(&m, "verify_eps")?,
            trials: num(&m, "verify_trials")?,
            modes: num(&m, "verify_modes")?,
        };
        let cfg = RunConfig {
            dimension,
            modes,
            params,
            initial,
            t_end: num(&m, "t_end")?,
            dt_policy,
            max_steps: num(&m, "max_steps")?,
            sample_every: num(&m, "sample_every")?,
            snapshot_every: num(&m, "snapshot_every")?,
            s_list,
            energy_s: num(&m, "energy_s")?,
            norm_s: num(&m, "norm_s")?,
            blowup_threshold: num(&m, "blowup_threshold")?,
            output: PathBuf::from(&m["output"]),
            seed,
            mu_list: list(&m, "mu_list")?,
            picard_iterations: num(&m, "picard_iterations")?,
            n_list: list(&m, "n_list")?,
            verify,
            entries: m,
        };
        cfg.stepper().validate().map_err(|e| cfg_err(&e))?;
        Ok(cfg)
    }

    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.dimension, self.modes).expect("validated grid")
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            scheme: Scheme::Ifrk4,
            dt_policy: self.dt_policy,
            t_end: self.t_end,
            max_steps: self.max_steps,
            blowup_threshold: self.blowup_threshold,
            sample_every: self.sample_every,
            s_list: self.s_list.clone(),
            energy_s: self.energy_s,
        }
    }

    /// Same configuration with one key replaced.
    pub fn with(&self, key: &str, value: impl ToString) -> Result<Self, DriverError> {
        let key = canonical(key);
        if !known(&key) {
            return Err(DriverError::Config(format!("unknown key `{key}`")));
        }
        let mut m = self.entries.clone();
        m.insert(key, value.to_string());
        Self::from_map(m)
    }

    /// The resolved configuration in the input format, keys in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, _) in DEFAULTS {
            let _ = writeln!(out, "{k} = {}", self.entries[*k]);
        }
        out
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_pairs(&[]).expect("defaults are valid")
    }
}
