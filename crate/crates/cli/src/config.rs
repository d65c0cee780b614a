//! Sectioned `key = value` experiment configuration.
//!
//! Every section has defaults, so an empty file is the reference experiment.
//! Any key can be overridden from the environment as `SNLS_<SECTION>_<KEY>`,
//! e.g. `SNLS_MODEL_CUTOFF=16` or `SNLS_SWEEP_ALPHAS="[0.5, 0.25]"`.

use serde::{Deserialize, Serialize};
use snls_core::measure::{Experiment, SamplingPlan};
use snls_core::spectral::{Scheme, SimConfig};
use snls_core::stochastic::{GrowthKind, RhoArgument};

pub const ENV_PREFIX: &str = "SNLS_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub dim: usize,
    pub cutoff: usize,
    pub full_shell: bool,
    pub p: f64,
    pub s: f64,
    pub eps: f64,
    pub alpha: f64,
    pub dt: f64,
    pub seed: u64,
    pub oversampling: f64,
    pub scheme: String,
}

impl Default for Model {
    fn default() -> Self {
        let c = Experiment::reference().config;
        Self {
            dim: c.dim,
            cutoff: c.cutoff,
            full_shell: c.full_shell,
            p: c.p,
            s: c.s,
            eps: c.eps,
            alpha: c.alpha,
            dt: c.dt,
            seed: c.seed,
            oversampling: c.oversampling,
            scheme: c.scheme.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    /// Prefactor of `a_k = scale·(1+λ_k)^{-(s+1)/2}`.
    pub scale: f64,
    /// `log1p`, `loglog1p`, `identity` or `linear:<slope>`.
    pub growth: String,
    /// `norm` or `norm-squared`.
    pub rho_argument: String,
}

impl Default for Noise {
    fn default() -> Self {
        let e = Experiment::reference();
        Self { scale: e.noise_scale, growth: e.growth.name(), rho_argument: "norm".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub chains: usize,
    pub samples_per_chain: usize,
    /// Burn-in is `burn_factor/α`; the stride is `1/α`.
    pub burn_factor: f64,
    pub first_stream: u64,
    pub tail_radii: Vec<f64>,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { chains: 40, samples_per_chain: 100, burn_factor: 20.0, first_stream: 0, tail_radii: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    /// `plane-wave` or `power-law`.
    pub initial: String,
    pub amplitude: f64,
    pub mode: i32,
    pub decay: f64,
    /// `‖u_0‖_s` of power-law data.
    pub norm: f64,
    pub horizon: f64,
    pub stride: usize,
    /// Regularity of the tracked norm.
    pub r: f64,
    /// Level `i` of the growth envelope.
    pub level: f64,
}

impl Default for Simulate {
    fn default() -> Self {
        Self {
            initial: "plane-wave".into(),
            amplitude: 0.5,
            mode: 2,
            decay: 2.6,
            norm: 1.0,
            horizon: 1.0,
            stride: 100,
            r: 1.0,
            level: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sde {
    pub runs: usize,
    pub horizon: f64,
    pub energy: bool,
}

impl Default for Sde {
    fn default() -> Self {
        Self { runs: 500, horizon: 1.0, energy: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub alphas: Vec<f64>,
    /// Flow time of the invariance trend; 0 skips it.
    pub invariance_t: f64,
    pub budget_steps: Option<u64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { alphas: vec![0.5, 0.25, 0.1], invariance_t: 1.0, budget_steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Invariance {
    pub t: f64,
    /// Observable names; empty means the default set.
    pub observables: Vec<String>,
}

impl Default for Invariance {
    fn default() -> Self {
        Self { t: 1.0, observables: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sigma {
    pub r: f64,
    pub j_max: u32,
    pub safety: f64,
    pub levels: Vec<u32>,
    /// Growth function of the envelope; empty uses `noise.growth`.
    pub growth: String,
}

impl Default for Sigma {
    fn default() -> Self {
        Self { r: 1.0, j_max: 3, safety: 1.0 / 128.0, levels: (1..=5).collect(), growth: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coupling {
    pub alphas: Vec<f64>,
    pub t: f64,
    pub ball: f64,
    pub r_cut: f64,
    pub runs: usize,
}

impl Default for Coupling {
    fn default() -> Self {
        Self { alphas: vec![0.5, 0.25, 0.1, 0.05], t: 1.0, ball: 1.0, r_cut: 3.0, runs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Density {
    /// The bound is taken above this quantile of each law.
    pub a_quantile: f64,
    pub bins: usize,
    pub levels: usize,
    /// Largest tolerated growth of the bound per refinement.
    pub stability: f64,
}

impl Default for Density {
    fn default() -> Self {
        Self { a_quantile: 0.05, bins: 10, levels: 4, stability: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallBall {
    pub deltas: Vec<f64>,
    pub slack: f64,
}

impl Default for SmallBall {
    fn default() -> Self {
        Self { deltas: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0], slack: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scale {
    pub lambdas: Vec<f64>,
}

impl Default for Scale {
    fn default() -> Self {
        Self { lambdas: vec![1.0, 2.0, 4.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cumulative {
    /// Components `μ^1, ..., μ^{max_n}` at `Λ = n`.
    pub max_n: usize,
}

impl Default for Cumulative {
    fn default() -> Self {
        Self { max_n: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Convergence {
    pub reference_cutoff: usize,
    pub decay: f64,
    pub norm: f64,
    pub r: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cutoffs: Vec<usize>,
    pub samples: usize,
    pub reference_refinement: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            reference_cutoff: 256,
            decay: 2.6,
            norm: 1.0,
            r: 1.0,
            dt: 1.0 / 8192.0,
            horizon: 1.0 / 128.0,
            cutoffs: vec![8, 16, 32, 64],
            samples: 8,
            reference_refinement: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: Model,
    pub noise: Noise,
    pub sampling: Sampling,
    pub simulate: Simulate,
    pub sde: Sde,
    pub sweep: Sweep,
    pub invariance: Invariance,
    pub sigma: Sigma,
    pub coupling: Coupling,
    pub density: Density,
    pub smallball: SmallBall,
    pub scale: Scale,
    pub cumulative: Cumulative,
    pub convergence: Convergence,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parse an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl Config {
    /// Parse text, apply environment-style overrides, validate.
    pub fn parse<I>(text: &str, overrides: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;
        for (name, raw) in overrides {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let rest = rest.to_ascii_lowercase();
            let Some((section, key)) = rest.split_once('_') else {
                return Err(err(format!("override `{name}` must look like {ENV_PREFIX}<SECTION>_<KEY>")));
            };
            let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(err(format!("`{section}` is not a section")));
            };
            sec.insert(key.to_string(), parse_value(&raw));
        }
        let cfg: Config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_env(text: &str) -> Result<Self, ConfigError> {
        let mut vars: Vec<(String, String)> = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        Self::parse(text, vars)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.experiment()?.basis().map_err(|e| err(e.to_string()))?;
        if self.sampling.chains == 0 || self.sampling.samples_per_chain == 0 {
            return Err(err("sampling needs at least one chain and one sample"));
        }
        if !(self.sampling.burn_factor > 0.0) {
            return Err(err("sampling.burn_factor must be positive"));
        }
        if !self.sigma.growth.is_empty() {
            self.sigma_growth()?;
        }
        Ok(())
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let m = &self.model;
        let scheme: Scheme = m.scheme.parse().map_err(|e: snls_core::Error| err(e.to_string()))?;
        Ok(SimConfig {
            dim: m.dim,
            cutoff: m.cutoff,
            full_shell: m.full_shell,
            p: m.p,
            s: m.s,
            eps: m.eps,
            alpha: m.alpha,
            dt: m.dt,
            horizon: self.simulate.horizon,
            seed: m.seed,
            oversampling: m.oversampling,
            scheme,
        })
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        let growth = parse_growth(&self.noise.growth)?;
        let argument = match self.noise.rho_argument.as_str() {
            "norm" => RhoArgument::Norm,
            "norm-squared" => RhoArgument::NormSquared,
            other => return Err(err(format!("unknown rho_argument `{other}`"))),
        };
        if !(self.noise.scale >= 0.0) {
            return Err(err("noise.scale must be nonnegative"));
        }
        Ok(Experiment { config: self.sim_config()?, growth, argument, noise_scale: self.noise.scale })
    }

    pub fn plan(&self) -> SamplingPlan {
        let a = self.model.alpha;
        let mut plan = SamplingPlan::for_alpha(a, self.sampling.chains, self.sampling.samples_per_chain)
            .with_burn_in_factor(a, self.sampling.burn_factor);
        plan.first_stream = self.sampling.first_stream;
        plan
    }

    pub fn sigma_growth(&self) -> Result<GrowthKind, ConfigError> {
        if self.sigma.growth.is_empty() {
            parse_growth(&self.noise.growth)
        } else {
            parse_growth(&self.sigma.growth)
        }
    }
}

fn parse_growth(s: &str) -> Result<GrowthKind, ConfigError> {
    GrowthKind::parse(s).ok_or_else(|| err(format!("unknown growth `{s}`")))
}
