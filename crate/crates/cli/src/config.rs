use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ponderotunnel::amplitude::AmplitudeGrid;
use ponderotunnel::baselines::{BarrierResolution, IntegratorSettings};
use ponderotunnel::field::{ElectronConfig, LaserConfig, RecoilConvention};
use ponderotunnel::rate::{RateConfig, RateMode, TransitTime};
use ponderotunnel::volkov::TruncationPolicy;

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub wavelength_um: f64,
    pub sigma_um: f64,
    /// Peak ponderomotive energy in eV. Exclusive with `u_p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up_ev: Option<f64>,
    /// `U_p / ħω`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronSection {
    pub e0_ev: f64,
    #[serde(default)]
    pub p_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    pub u_min: f64,
    pub u_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub energies_ev: Vec<f64>,
    pub impact_offsets_um: Vec<f64>,
    #[serde(default)]
    pub resolution: BarrierResolution,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub laser: LaserSection,
    pub electron: ElectronSection,
    #[serde(default)]
    pub transit: TransitTime,
    #[serde(default)]
    pub mode: RateMode,
    #[serde(default)]
    pub recoil: RecoilConvention,
    #[serde(default)]
    pub grid: AmplitudeGrid,
    #[serde(default)]
    pub policy: TruncationPolicy,
    pub resonance: ResonanceSection,
    pub baseline: BaselineSection,
    pub out: PathBuf,
}

pub const PRESETS: [&str; 3] = ["fig2", "fig3", "fig4"];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, RunError> {
        let mut cfg = Self {
            laser: LaserSection {
                wavelength_um: 1.064,
                sigma_um: 6.0,
                up_ev: Some(2.9),
                u_p: None,
            },
            electron: ElectronSection { e0_ev: 0.54, p_y: 0.0 },
            transit: TransitTime::Formula,
            mode: RateMode::Onshell,
            recoil: RecoilConvention::Peak,
            grid: AmplitudeGrid::default(),
            policy: TruncationPolicy::default(),
            resonance: ResonanceSection {
                u_min: 0.5,
                u_max: 4.5,
                steps: 81,
            },
            baseline: BaselineSection {
                energies_ev: vec![0.54, 1.0, 1.5, 2.0, 2.5],
                impact_offsets_um: vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0],
                resolution: BarrierResolution::default(),
                integrator: IntegratorSettings::default(),
            },
            out: PathBuf::from("out"),
        };
        match name {
            "fig2" | "fig3" => {}
            "fig4" => {
                cfg.laser.up_ev = None;
                cfg.laser.u_p = Some(2.5);
            }
            other => return Err(RunError::Config(format!("unknown preset {other:?}; expected one of {PRESETS:?}"))),
        }
        Ok(cfg)
    }

    /// Parses a TOML document laid over a preset. The document may name its
    /// base with a top-level `preset = "..."` key (default `fig2`).
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let mut doc: toml::Table = text.parse().map_err(|e| RunError::Config(format!("config: {e}")))?;
        let preset = match doc.remove("preset") {
            None => "fig2".to_string(),
            Some(toml::Value::String(s)) => s,
            Some(other) => return Err(RunError::Config(format!("preset must be a string, got {other}"))),
        };
        let base = Self::preset(&preset)?;
        let mut merged = toml::Table::try_from(&base).map_err(|e| RunError::Config(e.to_string()))?;
        if let Some(toml::Value::Table(laser)) = doc.get("laser") {
            if laser.contains_key("up_ev") || laser.contains_key("u_p") {
                if let Some(toml::Value::Table(base_laser)) = merged.get_mut("laser") {
                    base_laser.remove("up_ev");
                    base_laser.remove("u_p");
                }
            }
        }
        merge(&mut merged, doc);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| RunError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn set_up_ev(&mut self, up: f64) {
        self.laser.up_ev = Some(up);
        self.laser.u_p = None;
    }

    pub fn set_u_p(&mut self, u_p: f64) {
        self.laser.up_ev = None;
        self.laser.u_p = Some(u_p);
    }

    pub fn validate(&self) -> Result<(), RunError> {
        match (self.laser.up_ev, self.laser.u_p) {
            (Some(_), Some(_)) => return Err(RunError::Config("give only one of laser.up_ev and laser.u_p".into())),
            (None, None) => return Err(RunError::Config("one of laser.up_ev or laser.u_p is required".into())),
            _ => {}
        }
        self.rate_config()?;
        let r = &self.resonance;
        if !(r.u_min >= 0.0 && r.u_max >= r.u_min && r.u_max.is_finite()) {
            return Err(RunError::Config(format!("resonance range needs 0 ≤ u_min ≤ u_max, got [{}, {}]", r.u_min, r.u_max)));
        }
        if r.u_max > r.u_min && r.steps < 2 {
            return Err(RunError::Config("resonance.steps must be at least 2".into()));
        }
        if self.baseline.energies_ev.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(RunError::Config("baseline energies must be positive".into()));
        }
        Ok(())
    }

    pub fn laser_config(&self) -> Result<LaserConfig, RunError> {
        let l = &self.laser;
        let base = LaserConfig::new(l.wavelength_um * 1e-6, l.sigma_um * 1e-6, l.up_ev.unwrap_or(0.0))?;
        Ok(match l.u_p {
            Some(u) => base.with_normalized_ponderomotive(u)?,
            None => base,
        })
    }

    pub fn electron_config(&self) -> Result<ElectronConfig, RunError> {
        let mut e = ElectronConfig::new(self.electron.e0_ev)?;
        if !self.electron.p_y.is_finite() {
            return Err(RunError::Config("electron.p_y must be finite".into()));
        }
        e.transverse_momentum_y = self.electron.p_y;
        Ok(e)
    }

    pub fn rate_config(&self) -> Result<RateConfig, RunError> {
        let cfg = RateConfig {
            laser: self.laser_config()?,
            electron: self.electron_config()?,
            grid: self.grid,
            policy: self.policy,
            transit: self.transit,
            mode: self.mode,
            recoil: self.recoil,
        };
        // surfaces grid and slow-envelope problems before any work starts
        cfg.context()?;
        Ok(cfg)
    }
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (key, value) in from {
        match (into.get_mut(&key), value) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(key, v);
            }
        }
    }
}
