//! TOML run configuration. Unknown keys are errors so a typo cannot
//! silently fall back to a default.

use std::path::Path;

use anyhow::{bail, Context, Result};
use evoreg::coefficients::Profile;
use evoreg::scenarios::{Forcing, ScenarioKind, ScenarioSpec};
use evoreg::solver::Scheme;
use evoreg::spatial::Boundary;
use evoreg::verification::Suite;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Heat,
    Integro,
    Maxwell,
    /// Every grid and law field given explicitly; `family` picks the operator.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingChoice {
    Manufactured,
    Smooth,
    Rough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioName,
    pub family: Option<ScenarioKind>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub forcing: Option<ForcingChoice>,
    /// End of the rough forcing's support.
    pub rough_until: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t0: Option<f64>,
    pub t_end: Option<f64>,
    pub n_t: Option<usize>,
    pub n_x: Option<usize>,
    pub dim: Option<usize>,
    pub boundary: Option<Boundary>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawsSection {
    pub n11: Option<Profile>,
    pub mu: Option<f64>,
    pub kernel: Option<Profile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub levels: usize,
    pub residual_tolerance: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImplicitEuler,
            levels: 3,
            residual_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuitesSection {
    pub run: Vec<Suite>,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub laws: LawsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub suites: SuitesSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).context("parse error")?;
        Ok(config)
    }

    /// Preset values overridden by whatever the file sets, then validated.
    pub fn scenario_spec(&self, seed: u64) -> Result<ScenarioSpec> {
        let s = &self.scenario;
        let mut spec = match s.name {
            ScenarioName::Heat => ScenarioSpec::heat(),
            ScenarioName::Integro => ScenarioSpec::integro(),
            ScenarioName::Maxwell => ScenarioSpec::maxwell(),
            ScenarioName::Custom => self.custom_base()?,
        };
        if s.family.is_some() && s.name != ScenarioName::Custom {
            bail!("validation error: scenario.family is only allowed with name = \"custom\"");
        }
        if let Some(rho) = s.rho {
            spec.rho = rho;
        }
        let g = &self.grid;
        spec.t0 = g.t0.unwrap_or(spec.t0);
        spec.t_end = g.t_end.unwrap_or(spec.t_end);
        spec.n_t = g.n_t.unwrap_or(spec.n_t);
        spec.n_x = g.n_x.unwrap_or(spec.n_x);
        spec.dim = g.dim.unwrap_or(spec.dim);
        spec.boundary = g.boundary.unwrap_or(spec.boundary);
        if let Some(n11) = &self.laws.n11 {
            spec.n11 = n11.clone();
        }
        spec.mu = self.laws.mu.unwrap_or(spec.mu);
        if self.laws.kernel.is_some() {
            spec.kernel = self.laws.kernel.clone();
        }
        if s.rough_until.is_some() && s.forcing != Some(ForcingChoice::Rough) {
            bail!("validation error: scenario.rough_until needs forcing = \"rough\"");
        }
        spec.forcing = match s.forcing {
            None => spec.forcing,
            Some(ForcingChoice::Manufactured) => Forcing::Manufactured,
            Some(ForcingChoice::Smooth) => Forcing::Smooth,
            Some(ForcingChoice::Rough) => {
                let until = s.rough_until.unwrap_or(spec.t0 + (spec.t_end - spec.t0) / 3.0);
                if !(until > spec.t0) {
                    bail!("validation error: scenario.rough_until must exceed grid.t0");
                }
                Forcing::Rough { seed, until }
            }
        };
        if !(self.solver.residual_tolerance > 0.0) {
            bail!("validation error: solver.residual_tolerance must be positive");
        }
        if self.solver.levels < 3 {
            bail!("validation error: solver.levels must be at least 3, got {}", self.solver.levels);
        }
        spec.validate().map_err(|e| anyhow::anyhow!("validation error: {e}"))?;
        Ok(spec)
    }

    fn custom_base(&self) -> Result<ScenarioSpec> {
        let missing = |key: &str| anyhow::anyhow!("validation error: custom scenario needs {key}");
        let g = &self.grid;
        Ok(ScenarioSpec {
            kind: self.scenario.family.ok_or_else(|| missing("scenario.family"))?,
            rho: self.scenario.rho.ok_or_else(|| missing("scenario.rho"))?,
            t0: g.t0.unwrap_or(0.0),
            t_end: g.t_end.ok_or_else(|| missing("grid.t_end"))?,
            n_t: g.n_t.ok_or_else(|| missing("grid.n_t"))?,
            n_x: g.n_x.ok_or_else(|| missing("grid.n_x"))?,
            dim: g.dim.ok_or_else(|| missing("grid.dim"))?,
            boundary: g.boundary.unwrap_or(Boundary::DirichletOnU),
            n11: self.laws.n11.clone().ok_or_else(|| missing("laws.n11"))?,
            mu: self.laws.mu.unwrap_or(1.0),
            kernel: self.laws.kernel.clone(),
            forcing: Forcing::Smooth,
        })
    }
}
