//! JSON descriptors for kernels, source configurations, and simulation
//! runs, shared by the CLI and the reproduction driver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice_walk::{
    build_finite_range_walk, build_heavy_tail_walk, Angular, BranchingLaw, LatticePoint, WalkError,
    WalkSpec,
};
use crate::simulator::SimulationConfig;
use crate::spectral::{SourceConfig, SpectralError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("JSON parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid kernel descriptor: {0}")]
    InvalidKernel(String),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid branching law: offspring key {0:?} is not a non-negative integer")]
    BadOffspringKey(String),
}

/// Jump-kernel descriptor with the fixed field names used on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelDescriptor {
    pub d: usize,
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<(LatticePoint, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<i64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    FiniteRange,
    HeavyTail,
}

impl KernelDescriptor {
    pub fn to_walk(&self) -> Result<WalkSpec, ConfigError> {
        match self.kind {
            KernelKind::FiniteRange => {
                let weights = self.weights.as_ref().ok_or_else(|| {
                    ConfigError::InvalidKernel("finite_range kernel requires weights".into())
                })?;
                Ok(build_finite_range_walk(self.d, weights)?)
            }
            KernelKind::HeavyTail => {
                let alpha = self.alpha.ok_or_else(|| {
                    ConfigError::InvalidKernel("heavy_tail kernel requires alpha".into())
                })?;
                let scale = self.scale.unwrap_or(1.0);
                let radius = self.truncation_radius.unwrap_or(32);
                Ok(build_heavy_tail_walk(
                    self.d,
                    alpha,
                    Angular::Isotropic,
                    scale,
                    radius,
                )?)
            }
        }
    }

    /// Descriptor for a walk built in memory; `Custom` angular parts have
    /// no JSON form and are rejected.
    pub fn from_walk(walk: &WalkSpec) -> Result<Self, ConfigError> {
        if let Some((alpha, scale, radius, angular)) = walk.heavy_tail_params() {
            if !matches!(angular, Angular::Isotropic) {
                return Err(ConfigError::InvalidKernel(
                    "custom angular parts cannot be serialized".into(),
                ));
            }
            return Ok(KernelDescriptor {
                d: walk.dimension(),
                kind: KernelKind::HeavyTail,
                weights: None,
                alpha: Some(alpha),
                scale: Some(scale),
                truncation_radius: Some(radius),
            });
        }
        let mut weights = walk.enumerated_jumps();
        weights.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(KernelDescriptor {
            d: walk.dimension(),
            kind: KernelKind::FiniteRange,
            weights: Some(weights),
            alpha: None,
            scale: None,
            truncation_radius: None,
        })
    }
}

/// Source-set descriptor: lattice points plus the common intensity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SourcesDescriptor {
    pub points: Vec<LatticePoint>,
    pub beta: f64,
}

impl SourcesDescriptor {
    pub fn to_sources(&self) -> Result<SourceConfig, ConfigError> {
        Ok(SourceConfig::new(self.points.clone(), self.beta)?)
    }

    pub fn from_sources(sources: &SourceConfig) -> Self {
        SourcesDescriptor {
            points: sources.points().to_vec(),
            beta: sources.beta(),
        }
    }
}

/// Branching rates keyed by offspring count, e.g. `{"b": {"0": 0.1, "2": 0.6}}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BranchingDescriptor {
    pub b: BTreeMap<String, f64>,
}

impl BranchingDescriptor {
    pub fn to_law(&self) -> Result<BranchingLaw, ConfigError> {
        let mut rates = BTreeMap::new();
        for (key, &rate) in &self.b {
            let n: u32 = key
                .parse()
                .map_err(|_| ConfigError::BadOffspringKey(key.clone()))?;
            rates.insert(n, rate);
        }
        Ok(BranchingLaw::new(rates)?)
    }

    pub fn from_law(law: &BranchingLaw) -> Self {
        BranchingDescriptor {
            b: law
                .rates()
                .iter()
                .map(|(&n, &r)| (n.to_string(), r))
                .collect(),
        }
    }
}

/// Full simulation run: the kernel fields inline at top level, extended
/// with sources, branching, and run controls.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationDescriptor {
    #[serde(flatten)]
    pub kernel: KernelDescriptor,
    pub sources: SourcesDescriptor,
    pub branching: BranchingDescriptor,
    pub t_max: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<LatticePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<LatticePoint>>,
}

impl SimulationDescriptor {
    pub fn to_config(&self) -> Result<SimulationConfig, ConfigError> {
        let walk = self.kernel.to_walk()?;
        let sources = self.sources.to_sources()?;
        let start = self
            .start
            .clone()
            .unwrap_or_else(|| sources.points()[0].clone());
        Ok(SimulationConfig {
            walk,
            sources,
            branching: self.branching.to_law()?,
            t_max: self.t_max,
            replicates: self.replicates,
            seed: self.seed,
            start,
            population_cap: self.cap.unwrap_or(1_000_000),
            time_points: self.time_points.unwrap_or(51),
            probes: self.probes.clone().unwrap_or_default(),
        })
    }
}

/// Canonical JSON text: parsed to a value and re-serialized, which sorts
/// object keys (the map type is ordered), so the result is stable under
/// key reordering in the input.
pub fn canonical_json(text: &str) -> Result<String, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(serde_json::to_string(&value)?)
}
