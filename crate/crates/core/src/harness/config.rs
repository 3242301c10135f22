use crate::congest_sketches::{AmsParams, KmvParams, TugOfWarParams};
use crate::constants::Constants;
use crate::error::{invalid, Error, Result};
use crate::exact_sum::GFunction;
use crate::gossip_algorithms::FpParams;
use crate::gossip_emulation::EmulationMode;
use crate::graph::GraphSpec;
use crate::primitives::Router;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Congest,
    GossipIdeal,
    GossipEmulated,
}

/// How node values are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueDistribution {
    /// Distinct values drawn without replacement from [N].
    AllDistinct,
    Single {
        #[serde(default = "one")]
        value: u64,
    },
    /// Value i ∈ [1, support] with probability ∝ i^(−alpha).
    Zipf { alpha: f64, support: u64 },
    Uniform { support: u64 },
    /// `nodeId value` lines; unlisted nodes are NULL.
    File { path: PathBuf },
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Algorithm {
    F0 {
        epsilon: f64,
        #[serde(default)]
        median_width: Option<usize>,
    },
    F2 {
        epsilon: f64,
        #[serde(default)]
        median_width: Option<usize>,
    },
    AmsFp {
        p: u32,
        epsilon: f64,
        #[serde(default)]
        median_width: Option<usize>,
    },
    ExactSum { g: GFunction },
    TopK { k: usize },
    /// Push-sum count of non-empty nodes.
    PushSum,
    Duplicate,
    L0Sample,
    /// With `preprocess`, duplication runs first and the sample is drawn from its output.
    LpSample {
        p: u32,
        #[serde(default)]
        preprocess: bool,
    },
    Fk { k: u32, epsilon: f64 },
    Fp {
        p: u32,
        k: u32,
        epsilon: f64,
        #[serde(default = "yes")]
        preprocess: bool,
    },
}

fn yes() -> bool {
    true
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::F0 { .. } => "f0".into(),
            Algorithm::F2 { .. } => "f2".into(),
            Algorithm::AmsFp { p, .. } => format!("ams-f{p}"),
            Algorithm::ExactSum { g } => match g {
                GFunction::Distinct => "exact-distinct".into(),
                GFunction::Power { p } => format!("exact-power-{p}"),
                GFunction::Entropy => "exact-entropy".into(),
                GFunction::Identity => "exact-identity".into(),
            },
            Algorithm::TopK { k } => format!("top-{k}"),
            Algorithm::PushSum => "push-sum".into(),
            Algorithm::Duplicate => "duplicate".into(),
            Algorithm::L0Sample => "l0-sample".into(),
            Algorithm::LpSample { p, .. } => format!("l{p}-sample"),
            Algorithm::Fk { k, .. } => format!("fk-{k}"),
            Algorithm::Fp { p, k, .. } => format!("fp-{p}-via-{k}"),
        }
    }

    pub fn is_congest(&self) -> bool {
        matches!(self, Algorithm::F0 { .. } | Algorithm::F2 { .. } | Algorithm::AmsFp { .. } | Algorithm::ExactSum { .. } | Algorithm::TopK { .. })
    }

    pub(crate) fn kmv(&self) -> Option<KmvParams> {
        match *self {
            Algorithm::F0 { epsilon, median_width } => Some(KmvParams { epsilon, median_width }),
            _ => None,
        }
    }

    pub(crate) fn tug(&self) -> Option<TugOfWarParams> {
        match *self {
            Algorithm::F2 { epsilon, median_width } => Some(TugOfWarParams { epsilon, median_width }),
            _ => None,
        }
    }

    pub(crate) fn ams(&self) -> Option<AmsParams> {
        match *self {
            Algorithm::AmsFp { p, epsilon, median_width } => Some(AmsParams { p, epsilon, median_width }),
            _ => None,
        }
    }

    pub(crate) fn fp(&self) -> Option<FpParams> {
        match *self {
            Algorithm::Fp { p, k, epsilon, preprocess } => Some(FpParams { p, k, epsilon, preprocess }),
            _ => None,
        }
    }
}

/// Seeds as an explicit list or a contiguous range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

/// One experiment: a graph, an instance recipe, an algorithm and the seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: Model,
    pub graph: GraphSpec,
    pub universe: u64,
    pub values: ValueDistribution,
    #[serde(default)]
    pub null_fraction: f64,
    /// Fixes the instance across trials; by default each seed draws its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    pub algorithm: Algorithm,
    #[serde(default = "tree_router")]
    pub router: Router,
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<u64>,
    /// GOSSIP(λ) accuracy for the emulated model; defaults to 1/n³.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "physical")]
    pub emulation: EmulationMode,
    /// Overrides for individual constants, applied over the environment defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<serde_json::Map<String, serde_json::Value>>,
}

fn tree_router() -> Router {
    Router::Tree
}

fn physical() -> EmulationMode {
    EmulationMode::Physical
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes file references relative to the config's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let ValueDistribution::File { path } = &mut self.values {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let GraphSpec::EdgeList { path } = &mut self.graph {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.universe == 0 {
            return Err(invalid("universe must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.null_fraction) {
            return Err(invalid(format!("null_fraction must be in [0, 1), got {}", self.null_fraction)));
        }
        if self.algorithm.is_congest() != (self.model == Model::Congest) {
            return Err(invalid(format!("algorithm `{}` does not run in the {:?} model", self.algorithm.label(), self.model)));
        }
        if self.seeds.to_vec().is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        match &self.values {
            ValueDistribution::Zipf { alpha, support } if *alpha < 0.0 || *support == 0 || *support > self.universe => {
                Err(invalid("zipf needs alpha >= 0 and 1 <= support <= universe"))
            }
            ValueDistribution::Uniform { support } if *support == 0 || *support > self.universe => {
                Err(invalid("uniform needs 1 <= support <= universe"))
            }
            ValueDistribution::Single { value } if *value == 0 || *value > self.universe => Err(invalid("single value outside 1..=universe")),
            _ => Ok(()),
        }?;
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l <= 1.0) {
                return Err(invalid(format!("lambda must be in (0, 1], got {l}")));
            }
        }
        self.constants()?;
        Ok(())
    }

    pub fn constants(&self) -> Result<Constants> {
        let base = Constants::from_env();
        let Some(over) = &self.constants else { return Ok(base) };
        let mut v = serde_json::to_value(base).expect("constants serialize");
        let obj = v.as_object_mut().expect("constants are an object");
        for (k, x) in over {
            if !obj.contains_key(k) {
                return Err(invalid(format!("unknown constant `{k}`")));
            }
            obj.insert(k.clone(), x.clone());
        }
        serde_json::from_value(v).map_err(|e| Error::Parse(format!("constants: {e}")))
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canon.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
