//! Experiment configuration files (TOML, or the JSON manifest of an earlier run).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nopo_core::sde::CriticalConfig;
use nopo_core::{derive_scaled, Complex64, IntegratorConfig, PhysicalParams, ScaledParams, SpectralSettings, TripleSettings};
use serde::{Deserialize, Serialize};

/// Invalid or unreadable configuration. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledSpec {
    pub g2: f64,
    pub gamma_r: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpec {
    pub gamma0: f64,
    pub gamma: f64,
    pub chi: f64,
    pub drive_re: f64,
    #[serde(default)]
    pub drive_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub spectra: bool,
    /// Nonlinear residual V^(π/2) − V_linear^(π/2) next to the analytic correction.
    pub residual: bool,
    pub moments: bool,
    pub epr: bool,
    pub triple: Option<TripleSettings>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { spectra: true, residual: false, moments: true, epr: false, triple: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// Intracavity ⟨Ŷ₁Ŷ₁†⟩ in both representations.
    TotalMoment,
    /// Order-g² part of the same moment.
    NlMoment,
    /// V^(π/2)(0).
    OptSqueeze,
    /// V⁰(0).
    Unsqueezed,
    /// V⁰(0)·V^(π/2)(0).
    Heisenberg,
    /// Linear-inference variance at Ω = 0.
    Inference,
    /// Critical-frame ⟨yy⁺⟩ against η.
    CriticalSqueeze,
}

/// Closed-form curves over a drive (or η) grid, one series per γᵣ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticCurve {
    pub curve: CurveKind,
    pub g2: f64,
    pub gamma_r: Vec<f64>,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl AnalyticCurve {
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.from + step * i as f64).collect()
    }
}

/// Reduced critical equations over a list of η values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalScan {
    pub etas: Vec<f64>,
    #[serde(default)]
    pub sde: CriticalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub physical_units: bool,
    /// Write closed-form results only.
    #[serde(default)]
    pub analytic_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<ScaledSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<SpectralSettings>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<CriticalScan>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// What a configuration asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulation,
    Curves,
    Critical,
}

impl ExperimentConfig {
    pub fn mode(&self) -> Result<Mode> {
        let sim = self.scaled.is_some() || self.physical.is_some();
        match (sim, self.analytic.is_some(), self.critical.is_some()) {
            (true, false, false) => Ok(Mode::Simulation),
            (false, true, false) => Ok(Mode::Curves),
            (false, false, true) => Ok(Mode::Critical),
            (false, false, false) => Err(bad("config needs one of [scaled], [physical], [analytic] or [critical]")),
            _ => Err(bad("[scaled]/[physical], [analytic] and [critical] are mutually exclusive")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode()? {
            Mode::Simulation => {
                if self.scaled.is_some() && self.physical.is_some() {
                    return Err(bad("give parameters as either [scaled] or [physical], not both"));
                }
                self.params()?;
                self.integrator.validate().map_err(|e| bad(format!("[integrator] {e}")))?;
                if let Some(t) = &self.outputs.triple {
                    t.validate().map_err(|e| bad(format!("[outputs.triple] {e}")))?;
                }
            }
            Mode::Curves => {
                let a = self.analytic.as_ref().unwrap();
                if a.points == 0 || a.gamma_r.is_empty() {
                    return Err(bad("[analytic] needs points >= 1 and at least one gamma_r"));
                }
                if !(a.g2 >= 0.0) || a.gamma_r.iter().any(|g| !(*g > 0.0)) {
                    return Err(bad("[analytic] g2 must be non-negative and gamma_r positive"));
                }
            }
            Mode::Critical => {
                let c = self.critical.as_ref().unwrap();
                if c.etas.is_empty() {
                    return Err(bad("[critical] etas must not be empty"));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        let p = match (&self.scaled, &self.physical) {
            (Some(s), None) => PhysicalParams::from_scaled(s.g2, s.gamma_r, s.mu)?,
            (None, Some(p)) => PhysicalParams {
                gamma0: p.gamma0,
                gamma: p.gamma,
                chi: p.chi,
                drive: Complex64::new(p.drive_re, p.drive_im),
            },
            _ => return Err(bad("give parameters as either [scaled] or [physical]")),
        };
        p.validate().map_err(|e| bad(format!("parameters: {e}")))?;
        Ok(p)
    }

    pub fn scaled_params(&self) -> Result<ScaledParams> {
        Ok(derive_scaled(&self.params()?)?)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.integrator.seed = seed;
        if let Some(c) = &mut self.critical {
            c.sde.seed = seed;
        }
    }

    pub fn seed(&self) -> u64 {
        match &self.critical {
            Some(c) => c.sde.seed,
            None => self.integrator.seed,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("serialising configuration")
    }
}

/// Parse TOML, or JSON when the file starts with `{`. A run manifest is accepted through its `config` member.
pub fn parse(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| bad(format!("{origin}: {e}")))?;
        let inner = v.get("config").cloned().unwrap_or(v);
        serde_json::from_value(inner).map_err(|e| bad(format!("{origin}: {e}")))?
    } else {
        toml::from_str(text).map_err(|e| bad(format!("{origin}: {e}")))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}
