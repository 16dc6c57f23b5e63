use std::path::Path;

use serde::{Deserialize, Serialize};

const DEFAULT: &str = include_str!("../config/thresholds.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub certificates: CertificateConfig,
    pub tree: TreeConfig,
    pub oracles: OracleConfig,
    pub d1: D1Config,
    pub small_energy: SmallEnergyConfig,
    pub partial_energy: PartialEnergyConfig,
    pub nazarov: NazarovConfig,
    pub levelset: LevelSetConfig,
    pub smp: SmpConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub gap: f64,
    pub potential: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub trials: usize,
    pub depth: usize,
    pub max_atoms: usize,
    pub capacitary_pairs: usize,
    pub x_points: usize,
    pub max_set_size: usize,
    pub slack: f64,
    pub level_set_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub trials: usize,
    pub depth: usize,
    pub max_atoms: usize,
    pub energy_rel: f64,
    pub adjoint_rel: f64,
    pub adjoint_trials: usize,
    pub capacity_rel: f64,
    pub capacity_sets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct D1Config {
    pub trials: usize,
    pub depths: Vec<usize>,
    pub shallow_depths: Vec<usize>,
    pub lambda_over_delta: f64,
    pub stability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallEnergyConfig {
    pub growth: f64,
    pub lemma_ratio: f64,
    pub lemma_scales: Vec<u32>,
    pub symmetric_scales: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialEnergyConfig {
    pub growth: f64,
    pub closed_form_scales: Vec<u32>,
    pub closed_form_rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NazarovConfig {
    pub x: u64,
    pub m: Vec<usize>,
    pub stability: f64,
    pub large_bound: f64,
    pub side_exponent: f64,
    pub cross_check_max_m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetConfig {
    pub margin: f64,
    pub tree_factor: f64,
    pub x_points: usize,
    pub max_witness: usize,
    pub cross_check_rel: f64,
    pub supplementary_scales: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmpConfig {
    pub taus: Vec<f64>,
    pub eps_factors: Vec<f64>,
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// The bundled thresholds, or the file at `path` if given.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))?;
                Self::from_toml(&text)
            }
            None => Ok(Self::default()),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::from_toml(DEFAULT).expect("bundled thresholds parse")
    }
}
