//! Flat `key = value` run configuration: UTF-8 text, `#` comments, every
//! key required, unknown keys rejected.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use ballflow::radial::{RadialGrid, RadialProfile};
use ballflow::solver::GasParams;

/// Named initial-data family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    /// `rho = rho0`, `u = 0`.
    Constant,
    /// `rho = rho0 (1 + amplitude * 16 x^2 (1-x)^2)`, `u = 0`.
    PolynomialBump,
    /// `rho = rho0`, `u = amplitude * r (R - r) / R^2`.
    VelocityBump,
}

impl ProfileFamily {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "polynomial-bump" => Ok(Self::PolynomialBump),
            "velocity-bump" => Ok(Self::VelocityBump),
            other => bail!("profile: unknown family `{other}` (expected constant, polynomial-bump or velocity-bump)"),
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub radius: f64,
    pub cells: usize,
    pub a: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub profile: ProfileFamily,
    pub rho0: f64,
    pub amplitude: f64,
    pub t_end: f64,
    pub output_interval: usize,
    pub cfl: f64,
    pub seed: u64,
    pub delta: f64,
    pub tol_equality: f64,
    pub gronwall_eps: f64,
    pub gronwall_c: f64,
}

const KEYS: &[&str] = &[
    "n",
    "radius",
    "cells",
    "a",
    "gamma",
    "mu",
    "lambda",
    "profile",
    "rho0",
    "amplitude",
    "t_end",
    "output_interval",
    "cfl",
    "seed",
    "delta",
    "tol_equality",
    "gronwall_eps",
    "gronwall_c",
];

/// Parse and validate the config text. Errors carry the offending line
/// number or the violated key and constraint.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| anyhow!("line {lineno}: expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| anyhow!("line {lineno}: unknown key `{key}`"))?;
        if raw.insert(known, (lineno, value.to_string())).is_some() {
            bail!("line {lineno}: duplicate key `{key}`");
        }
    }
    for &key in KEYS {
        if !raw.contains_key(key) {
            bail!("missing key `{key}`");
        }
    }
    let get = |key: &str| -> &str { raw[key].1.as_str() };
    let num = |key: &str| -> Result<f64> {
        get(key)
            .parse::<f64>()
            .with_context(|| format!("line {}: key `{key}` is not a number", raw[key].0))
    };
    let int = |key: &str| -> Result<u64> {
        get(key).parse::<u64>().with_context(|| {
            format!(
                "line {}: key `{key}` is not a nonnegative integer",
                raw[key].0
            )
        })
    };

    let cfg = RunConfig {
        n: int("n")? as u32,
        radius: num("radius")?,
        cells: int("cells")? as usize,
        a: num("a")?,
        gamma: num("gamma")?,
        mu: num("mu")?,
        lambda: num("lambda")?,
        profile: ProfileFamily::parse(get("profile"))?,
        rho0: num("rho0")?,
        amplitude: num("amplitude")?,
        t_end: num("t_end")?,
        output_interval: int("output_interval")? as usize,
        cfl: num("cfl")?,
        seed: int("seed")?,
        delta: num("delta")?,
        tol_equality: num("tol_equality")?,
        gronwall_eps: num("gronwall_eps")?,
        gronwall_c: num("gronwall_c")?,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.n != 2 && cfg.n != 3 {
        bail!("n: dimension must be 2 or 3, got {}", cfg.n);
    }
    if !(cfg.radius > 0.0) {
        bail!("radius: must be positive");
    }
    if cfg.cells < 32 {
        bail!("cells: need at least 32, got {}", cfg.cells);
    }
    if !(cfg.a > 0.0) {
        bail!("a: pressure constant must be positive");
    }
    if !(cfg.gamma > 1.0) {
        bail!("gamma: adiabatic constant must exceed 1, got {}", cfg.gamma);
    }
    if !(cfg.mu > 0.0) {
        bail!("mu: shear viscosity must be positive");
    }
    let combo = cfg.mu + cfg.n as f64 / 2.0 * cfg.lambda;
    if combo < 0.0 {
        bail!("lambda: mu + (N/2) lambda = {combo} violates the nonnegativity constraint");
    }
    if !(cfg.rho0 > 0.0) {
        bail!("rho0: base density must be positive");
    }
    if !cfg.amplitude.is_finite() {
        bail!("amplitude: must be finite");
    }
    if !(cfg.t_end > 0.0) {
        bail!("t_end: must be positive");
    }
    if cfg.output_interval == 0 {
        bail!("output_interval: must be at least 1");
    }
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        bail!("cfl: must lie in (0, 1]");
    }
    if !(cfg.delta >= 0.0) {
        bail!("delta: perturbation amplitude must be nonnegative");
    }
    if !(cfg.tol_equality > 0.0) {
        bail!("tol_equality: must be positive");
    }
    if !(cfg.gronwall_eps > 0.0) {
        bail!("gronwall_eps: must be positive");
    }
    if !(cfg.gronwall_c > 0.0) {
        bail!("gronwall_c: must be positive");
    }
    Ok(())
}

impl RunConfig {
    pub fn gas(&self) -> Result<GasParams<f64>> {
        GasParams::new(self.a, self.gamma, self.mu, self.lambda, self.n).map_err(|e| anyhow!("{e}"))
    }

    /// Sample the named initial-data family on a fine grid (at least eight
    /// profile nodes per solver cell, so the interpolation error stays
    /// subordinate to the scheme error).
    pub fn initial_profiles(&self) -> Result<(RadialProfile<f64>, RadialProfile<f64>)> {
        self.initial_profiles_for_cells(self.cells)
    }

    pub fn initial_profiles_for_cells(
        &self,
        cells: usize,
    ) -> Result<(RadialProfile<f64>, RadialProfile<f64>)> {
        let k = (8 * cells).max(1024);
        let grid =
            Arc::new(RadialGrid::uniform(k, self.radius, self.n).map_err(|e| anyhow!("{e}"))?);
        let radius = self.radius;
        let rho0 = self.rho0;
        let amp = self.amplitude;
        type Field = Box<dyn Fn(f64) -> f64>;
        let (rho, u): (Field, Field) = match self.profile {
            ProfileFamily::Constant => (Box::new(move |_| rho0), Box::new(|_| 0.0)),
            ProfileFamily::PolynomialBump => (
                Box::new(move |r| {
                    let x = r / radius;
                    rho0 * (1.0 + amp * 16.0 * x * x * (1.0 - x) * (1.0 - x))
                }),
                Box::new(|_| 0.0),
            ),
            ProfileFamily::VelocityBump => (
                Box::new(move |_| rho0),
                Box::new(move |r| amp * r * (radius - r) / (radius * radius)),
            ),
        };
        let rho = RadialProfile::from_fn(grid.clone(), rho).map_err(|e| anyhow!("{e}"))?;
        let u = RadialProfile::from_fn(grid, u).map_err(|e| anyhow!("{e}"))?;
        Ok((rho, u))
    }
}

/// A complete config, used by the unit tests.
#[cfg(test)]
pub fn example_config() -> String {
    "\
# ballflow run configuration
n = 3
radius = 1.0
cells = 128
a = 1.0
gamma = 1.4
mu = 0.5
lambda = 0.0
profile = polynomial-bump
rho0 = 1.0
amplitude = 1e-3
t_end = 0.2
output_interval = 10
cfl = 0.4
seed = 42
delta = 1e-3
tol_equality = 1e-9
gronwall_eps = 1e-4
gronwall_c = 50.0
"
    .to_string()
}
