//! Flat `key = value` configuration files with flag overrides.
//!
//! Every run is described by a [`RunConfig`]. Values come from three
//! layers, later layers winning: built-in defaults, an optional config
//! file, and command-line flags.

use num_complex::Complex64 as C64;
use rh_core::{Reflection, Result, RhError};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Which reflection coefficient a run uses.
#[derive(Clone, Debug, PartialEq)]
pub enum RSpec {
    /// Rational `r0 / (1 + i z)`.
    Model(C64),
    /// Indicator `rho` on `[a, b]`.
    Step { rho: f64, a: f64, b: f64 },
}

impl RSpec {
    /// Parse `model:0.5`, `model:0.5+0.2i`, or `step:0.5,-1,0`.
    pub fn parse(s: &str) -> Result<RSpec> {
        let bad = |msg: &str| RhError::InvalidParameter(format!("r spec '{s}': {msg}"));
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected 'model:<r0>' or 'step:<rho>,<a>,<b>'"))?;
        match kind {
            "model" => Ok(RSpec::Model(parse_complex(rest)?)),
            "step" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad("step takes exactly rho,a,b"));
                }
                let nums: Vec<f64> = parts
                    .iter()
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e.to_string()))?;
                Ok(RSpec::Step { rho: nums[0], a: nums[1], b: nums[2] })
            }
            other => Err(bad(&format!("unknown kind '{other}'"))),
        }
    }

    /// Realize the reflection coefficient.
    pub fn build(&self) -> Result<Reflection> {
        match *self {
            RSpec::Model(r0) => Reflection::model(r0),
            RSpec::Step { rho, a, b } => Reflection::step(rho, a, b),
        }
    }
}

/// Parse `0.5`, `-0.3+0.2i`, or `0.1i`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let bad = || RhError::InvalidParameter(format!("cannot parse complex number '{s}'"));
    if let Ok(x) = t.parse::<f64>() {
        return Ok(C64::new(x, 0.0));
    }
    let body = t.strip_suffix('i').ok_or_else(bad)?;
    // Split into real and imaginary at the last interior sign.
    if let Some(pos) = body.rfind(['+', '-']).filter(|&p| p > 0) {
        let re = body[..pos].parse::<f64>().map_err(|_| bad())?;
        let im_str = &body[pos..];
        let im = if im_str == "+" || im_str == "-" {
            format!("{im_str}1").parse::<f64>().map_err(|_| bad())?
        } else {
            im_str.parse::<f64>().map_err(|_| bad())?
        };
        Ok(C64::new(re, im))
    } else {
        let im = if body.is_empty() { 1.0 } else { body.parse::<f64>().map_err(|_| bad())? };
        Ok(C64::new(0.0, im))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| RhError::InvalidParameter(format!("list entry '{p}': {e}")))
        })
        .collect()
}

/// Fully resolved run parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub r: RSpec,
    pub x: f64,
    pub t: f64,
    pub x_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub p_list: Vec<f64>,
    /// Nodes per contour piece.
    pub n: usize,
    /// Contour truncation radius.
    pub truncation: f64,
    /// Sector half-opening of deformed contours.
    pub beta: f64,
    /// Exponent margin of closed-form bounds.
    pub beta_prime: f64,
    /// Seed for randomized probes.
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r: RSpec::Model(C64::new(0.5, 0.0)),
            x: 0.0,
            t: 1.0,
            x_list: vec![0.0],
            t_list: vec![0.0, 1.0, 10.0, 100.0],
            p_list: vec![4.0],
            n: 60,
            truncation: 200.0,
            beta: 0.25,
            beta_prime: 0.1,
            seed: 1,
            out: None,
            plot: None,
        }
    }
}

/// Raw `key = value` pairs from a file or flags, before merging.
pub type KeyValues = BTreeMap<String, String>;

/// Parse a flat config file: one `key = value` per line, `#` comments.
pub fn parse_config_file(text: &str) -> Result<KeyValues> {
    let mut map = KeyValues::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            RhError::InvalidParameter(format!(
                "config line {}: expected 'key = value', got '{raw}'",
                lineno + 1
            ))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Apply one layer of overrides on top of the current values.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (k, v) in kv {
            match k.as_str() {
                "r" => self.r = RSpec::parse(v)?,
                "x" => self.x = parse_num(k, v)?,
                "t" => self.t = parse_num(k, v)?,
                "x_list" => self.x_list = parse_list(v)?,
                "t_list" => self.t_list = parse_list(v)?,
                "p_list" => self.p_list = parse_list(v)?,
                "n" => {
                    self.n = v.parse().map_err(|e| {
                        RhError::InvalidParameter(format!("n = '{v}': {e}"))
                    })?
                }
                "truncation" => self.truncation = parse_num(k, v)?,
                "beta" => self.beta = parse_num(k, v)?,
                "beta_prime" => self.beta_prime = parse_num(k, v)?,
                "seed" => {
                    self.seed = v.parse().map_err(|e| {
                        RhError::InvalidParameter(format!("seed = '{v}': {e}"))
                    })?
                }
                "out" => self.out = Some(PathBuf::from(v)),
                "plot" => self.plot = Some(PathBuf::from(v)),
                other => {
                    return Err(RhError::InvalidParameter(format!(
                        "unknown config key '{other}'"
                    )))
                }
            }
        }
        self.validate()
    }

    /// Field-level validation of the numeric preconditions.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(RhError::InvalidParameter(msg));
        match self.r {
            RSpec::Model(r0) if r0.norm() >= 1.0 => {
                return err(format!("r: model amplitude must satisfy |r0| < 1, got {}", r0.norm()))
            }
            RSpec::Step { rho, a, b } if !(0.0..1.0).contains(&rho) || a >= b => {
                return err(format!("r: step needs 0 <= rho < 1 and a < b, got {rho}, [{a}, {b}]"))
            }
            _ => {}
        }
        if self.n < 4 {
            return err(format!("n: need at least 4 nodes per piece, got {}", self.n));
        }
        if !(self.truncation > 0.0) {
            return err(format!("truncation: must be positive, got {}", self.truncation));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return err(format!("beta: must lie in (0, 1/2), got {}", self.beta));
        }
        if self.beta_prime < 0.0 {
            return err(format!("beta_prime: must be nonnegative, got {}", self.beta_prime));
        }
        for &p in &self.p_list {
            if !(p >= 1.0) {
                return err(format!("p_list: norm indices must satisfy p >= 1, got {p}"));
            }
        }
        if self.p_list.is_empty() || self.t_list.is_empty() || self.x_list.is_empty() {
            return err("p_list, t_list, and x_list must be nonempty".into());
        }
        Ok(())
    }
}

fn parse_num(k: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|e| RhError::InvalidParameter(format!("{k} = '{v}': {e}")))
}
