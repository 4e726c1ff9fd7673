//! Run configuration, read from JSON. Every field has a desk-scale default,
//! so `{}` is a valid config.

use std::path::{Path, PathBuf};

use fpeng::{ClusterPolicy, CodecBinding, Error, ImageCodecSpec, MetaclusterSpec, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    /// Window length of the declarative memory.
    #[serde(default = "default_episode_len")]
    pub episode_len: usize,
    #[serde(default = "default_episode_policy")]
    pub episode_policy: ClusterPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub sensorimotor: SensorimotorConfig,
    #[serde(default)]
    pub episodic: EpisodicConfig,
}

/// What `train` builds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Cluster { codec: CodecBinding, policy: ClusterPolicy },
    Metacluster { spec: MetaclusterSpec },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Cluster {
            codec: CodecBinding::Image(ImageCodecSpec {
                width: 28,
                height: 28,
                threshold: 0.5,
            }),
            policy: ClusterPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub images: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Maximum number of samples read, after class filtering.
    #[serde(default = "default_limit")]
    pub limit: Option<usize>,
    /// Keep only these labels; needs `labels`.
    #[serde(default)]
    pub classes: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorimotorConfig {
    pub patterns: usize,
    pub passes: usize,
    pub image_side: usize,
    pub block_size: usize,
    pub policy: ClusterPolicy,
    /// Probability of flipping each sensor bit in the noisy evaluation.
    pub noise: f64,
    /// Noisy presentations per pattern.
    pub noise_trials: usize,
}

impl Default for SensorimotorConfig {
    fn default() -> Self {
        Self {
            patterns: 8,
            passes: 3,
            image_side: 8,
            block_size: 4,
            policy: ClusterPolicy {
                theta_seed: 0.8,
                theta_step: 0.1,
                theta_max: 0.95,
                spawn_count: 50,
                max_depth: 2,
            },
            noise: 0.1,
            noise_trials: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodicConfig {
    pub passes: usize,
    pub block_size: usize,
    pub policy: ClusterPolicy,
    /// Window lengths compared side by side; `episode_len` is always included.
    pub windows: Vec<usize>,
}

impl Default for EpisodicConfig {
    fn default() -> Self {
        Self {
            passes: 3,
            block_size: 4,
            policy: ClusterPolicy::single_cell(0.9),
            windows: vec![2, 3],
        }
    }
}

fn default_episode_len() -> usize {
    3
}

fn default_episode_policy() -> ClusterPolicy {
    ClusterPolicy::single_cell(0.9)
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_limit() -> Option<usize> {
    Some(10_000)
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Window lengths for the episodic demo, ascending and deduplicated.
    pub fn episode_windows(&self) -> Vec<usize> {
        let mut w = self.episodic.windows.clone();
        w.push(self.episode_len);
        w.sort_unstable();
        w.dedup();
        w
    }

    /// Fails with an I/O error naming the first referenced path that is missing.
    pub fn check_paths(&self) -> Result<()> {
        if let Some(ds) = &self.dataset {
            for p in std::iter::once(&ds.images).chain(&ds.labels) {
                std::fs::metadata(p).map_err(|e| Error::io(p, e))?;
            }
            if ds.classes.is_some() && ds.labels.is_none() {
                return Err(Error::Argument("dataset.classes needs dataset.labels".into()));
            }
        }
        Ok(())
    }
}
