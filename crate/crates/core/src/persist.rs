//! Versioned, canonical JSON model files (`.fpe.json`).
//!
//! Keys are sorted and the writer is compact, so identical models produce
//! byte-identical files. Footprint values are written as decimal strings with
//! 17 significant digits, which round-trips every binary64 exactly. Loading
//! re-checks every structural invariant before handing back a model.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{CellId, Cluster, ClusterPolicy};
use crate::codec::CodecBinding;
use crate::cognition::{Mode, SyntheticCognition};
use crate::episodic::DeclarativeMemory;
use crate::error::{Error, Result};
use crate::memory::{Cell, Footprint, FootprintId};
use crate::metacluster::{Metacluster, MetaclusterSpec};
use crate::repr::{ActivationVector, Mask};

pub const MAGIC: &str = "FPENG";
pub const VERSION: u32 = 1;
pub const EXTENSION: &str = ".fpe.json";

/// Any level of the engine that can be saved on its own.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Cell(Cell),
    Cluster(Cluster),
    Metacluster(Metacluster),
    Declarative(DeclarativeMemory),
    Cognition(SyntheticCognition),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Cell(_) => "cell",
            Model::Cluster(_) => "cluster",
            Model::Metacluster(_) => "metacluster",
            Model::Declarative(_) => "declarative",
            Model::Cognition(_) => "cognition",
        }
    }
}

/// A model plus the codec its raw inputs were encoded with, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub input_codec: Option<CodecBinding>,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            input_codec: None,
        }
    }

    pub fn with_codec(model: Model, codec: CodecBinding) -> Self {
        Self {
            model,
            input_codec: Some(codec),
        }
    }
}

pub fn encode_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn decode_real(s: &str, field: impl FnOnce() -> String) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::invalid(field(), format!("`{s}` is not a decimal real")))
}

fn encode_vector(v: &ActivationVector) -> Vec<String> {
    v.as_slice().iter().map(|&x| encode_real(x)).collect()
}

fn decode_vector(values: &[String], field: &str) -> Result<ActivationVector> {
    let parsed = values
        .iter()
        .enumerate()
        .map(|(i, s)| decode_real(s, || format!("{field}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = parsed.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(format!("{field}[{i}]"), "activation outside [0, 1]"));
    }
    ActivationVector::new(parsed).map_err(|e| Error::invalid(field, e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    magic: String,
    version: u64,
    config: ConfigDoc,
    payload: PayloadDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    input_codec: Option<CodecBinding>,
    level: LevelConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LevelConfig {
    Cell {
        dim: usize,
    },
    Cluster {
        dim: usize,
        policy: ClusterPolicy,
    },
    Metacluster {
        spec: MetaclusterSpec,
    },
    Declarative {
        episode_len: usize,
        frame_dim: usize,
        policy: ClusterPolicy,
    },
    Cognition {
        spec: MetaclusterSpec,
        motor: String,
        mode: Mode,
        declarative: Option<DeclarativeConfig>,
        /// Reserved slot for a procedural component; always null.
        procedural: Option<serde_json::Value>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeclarativeConfig {
    episode_len: usize,
    policy: ClusterPolicy,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FootprintDoc {
    id: FootprintId,
    count: u64,
    value: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    threshold: String,
    next_id: FootprintId,
    footprints: Vec<FootprintDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellEntryDoc {
    cell: CellDoc,
    /// `[parent cell, parent footprint]`.
    parent: Option<(CellId, FootprintId)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterDoc {
    cells: Vec<CellEntryDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeclarativeDoc {
    cluster: ClusterDoc,
    buffer: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryDoc {
    frame: Vec<String>,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PayloadDoc {
    Cell {
        cell: CellDoc,
    },
    Cluster {
        cluster: ClusterDoc,
    },
    Metacluster {
        clusters: Vec<ClusterDoc>,
    },
    Declarative {
        memory: DeclarativeDoc,
    },
    Cognition {
        motoperceptive: Vec<ClusterDoc>,
        declarative: Option<DeclarativeDoc>,
        history: Vec<HistoryDoc>,
    },
}

fn cell_doc(cell: &Cell) -> CellDoc {
    CellDoc {
        threshold: encode_real(cell.threshold()),
        next_id: cell.next_id(),
        footprints: cell
            .footprints()
            .iter()
            .map(|fp| FootprintDoc {
                id: fp.id(),
                count: fp.count(),
                value: encode_vector(fp.project()),
            })
            .collect(),
    }
}

fn cell_from_doc(doc: &CellDoc, dim: usize, field: &str) -> Result<Cell> {
    let threshold = decode_real(&doc.threshold, || format!("{field}.threshold"))?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("{field}.threshold"), "outside [0, 1]"));
    }
    let footprints = doc
        .footprints
        .iter()
        .enumerate()
        .map(|(i, fp)| {
            let value = decode_vector(&fp.value, &format!("{field}.footprints[{i}].value"))?;
            Ok(Footprint::from_parts(fp.id, value, fp.count))
        })
        .collect::<Result<Vec<_>>>()?;
    Cell::from_parts(dim, threshold, footprints, doc.next_id).map_err(|e| prefix(e, field))
}

fn cluster_doc(cluster: &Cluster) -> ClusterDoc {
    ClusterDoc {
        cells: cluster
            .nodes()
            .iter()
            .map(|n| CellEntryDoc {
                cell: cell_doc(&n.cell),
                parent: n.parent,
            })
            .collect(),
    }
}

fn cluster_from_doc(doc: &ClusterDoc, dim: usize, policy: ClusterPolicy, field: &str) -> Result<Cluster> {
    let cells = doc
        .cells
        .iter()
        .enumerate()
        .map(|(i, e)| Ok((cell_from_doc(&e.cell, dim, &format!("{field}.cells[{i}]"))?, e.parent)))
        .collect::<Result<Vec<_>>>()?;
    Cluster::from_parts(dim, policy, cells).map_err(|e| prefix(e, field))
}

fn declarative_doc(dm: &DeclarativeMemory) -> DeclarativeDoc {
    DeclarativeDoc {
        cluster: cluster_doc(dm.cluster()),
        buffer: dm.buffer().frames().map(encode_vector).collect(),
    }
}

fn declarative_from_doc(
    doc: &DeclarativeDoc,
    episode_len: usize,
    frame_dim: usize,
    policy: ClusterPolicy,
    field: &str,
) -> Result<DeclarativeMemory> {
    if episode_len < 2 || frame_dim == 0 {
        return Err(Error::invalid(field, "episode_len >= 2 and frame_dim >= 1 required"));
    }
    let cluster = cluster_from_doc(
        &doc.cluster,
        episode_len * frame_dim,
        policy,
        &format!("{field}.cluster"),
    )?;
    let frames = doc
        .buffer
        .iter()
        .enumerate()
        .map(|(i, f)| decode_vector(f, &format!("{field}.buffer[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    DeclarativeMemory::from_parts(episode_len, frame_dim, cluster, frames).map_err(|e| prefix(e, field))
}

fn metacluster_from_docs(spec: MetaclusterSpec, docs: &[ClusterDoc], field: &str) -> Result<Metacluster> {
    // Build once empty to learn each node's input dimension.
    let shape = Metacluster::new(spec.clone()).map_err(|e| Error::invalid("config.spec", e.to_string()))?;
    if docs.len() != shape.clusters().len() {
        return Err(Error::invalid(field, "one cluster per node required"));
    }
    let clusters = docs
        .iter()
        .zip(shape.clusters())
        .enumerate()
        .map(|(i, (doc, c))| cluster_from_doc(doc, c.dim(), *c.policy(), &format!("{field}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Metacluster::from_parts(spec, clusters)
}

/// Attaches a location to validation errors raised by nested constructors.
fn prefix(err: Error, field: &str) -> Error {
    match err {
        Error::Validation { field: inner, reason } => Error::Validation {
            field: format!("{field}.{inner}"),
            reason,
        },
        e @ (Error::Io { .. } | Error::Format(_) | Error::Version { .. }) => e,
        other => Error::invalid(field, other.to_string()),
    }
}

fn to_doc(file: &ModelFile) -> FileDoc {
    let (level, payload) = match &file.model {
        Model::Cell(cell) => (
            LevelConfig::Cell { dim: cell.dim() },
            PayloadDoc::Cell { cell: cell_doc(cell) },
        ),
        Model::Cluster(c) => (
            LevelConfig::Cluster {
                dim: c.dim(),
                policy: *c.policy(),
            },
            PayloadDoc::Cluster {
                cluster: cluster_doc(c),
            },
        ),
        Model::Metacluster(mc) => (
            LevelConfig::Metacluster {
                spec: mc.spec().clone(),
            },
            PayloadDoc::Metacluster {
                clusters: mc.clusters().iter().map(cluster_doc).collect(),
            },
        ),
        Model::Declarative(dm) => (
            LevelConfig::Declarative {
                episode_len: dm.episode_len(),
                frame_dim: dm.frame_dim(),
                policy: *dm.cluster().policy(),
            },
            PayloadDoc::Declarative {
                memory: declarative_doc(dm),
            },
        ),
        Model::Cognition(sc) => {
            let (mc, dm, history) = sc.parts();
            (
                LevelConfig::Cognition {
                    spec: mc.spec().clone(),
                    motor: sc.motor_channel().to_string(),
                    mode: sc.mode(),
                    declarative: dm.map(|dm| DeclarativeConfig {
                        episode_len: dm.episode_len(),
                        policy: *dm.cluster().policy(),
                    }),
                    procedural: None,
                },
                PayloadDoc::Cognition {
                    motoperceptive: mc.clusters().iter().map(cluster_doc).collect(),
                    declarative: dm.map(declarative_doc),
                    history: history
                        .iter()
                        .map(|(f, m)| HistoryDoc {
                            frame: encode_vector(f),
                            mask: m.as_slice().to_vec(),
                        })
                        .collect(),
                },
            )
        }
    };
    FileDoc {
        magic: MAGIC.into(),
        version: u64::from(VERSION),
        config: ConfigDoc {
            input_codec: file.input_codec,
            level,
        },
        payload,
    }
}

fn from_doc(doc: FileDoc) -> Result<ModelFile> {
    if let Some(codec) = &doc.config.input_codec {
        codec
            .validate()
            .map_err(|e| Error::invalid("config.input_codec", e.to_string()))?;
    }
    let model = match (doc.config.level, doc.payload) {
        (LevelConfig::Cell { dim }, PayloadDoc::Cell { cell }) => {
            Model::Cell(cell_from_doc(&cell, dim, "payload.cell")?)
        }
        (LevelConfig::Cluster { dim, policy }, PayloadDoc::Cluster { cluster }) => {
            Model::Cluster(cluster_from_doc(&cluster, dim, policy, "payload.cluster")?)
        }
        (LevelConfig::Metacluster { spec }, PayloadDoc::Metacluster { clusters }) => {
            Model::Metacluster(metacluster_from_docs(spec, &clusters, "payload.clusters")?)
        }
        (
            LevelConfig::Declarative {
                episode_len,
                frame_dim,
                policy,
            },
            PayloadDoc::Declarative { memory },
        ) => Model::Declarative(declarative_from_doc(
            &memory,
            episode_len,
            frame_dim,
            policy,
            "payload.memory",
        )?),
        (
            LevelConfig::Cognition {
                spec,
                motor,
                mode,
                declarative,
                procedural,
            },
            PayloadDoc::Cognition {
                motoperceptive,
                declarative: dm_doc,
                history,
            },
        ) => {
            if procedural.is_some() {
                return Err(Error::invalid("config.procedural", "reserved; must be null"));
            }
            let mc = metacluster_from_docs(spec, &motoperceptive, "payload.motoperceptive")?;
            let dm = match (declarative, dm_doc) {
                (None, None) => None,
                (Some(cfg), Some(doc)) => Some(declarative_from_doc(
                    &doc,
                    cfg.episode_len,
                    mc.root_layout().total(),
                    cfg.policy,
                    "payload.declarative",
                )?),
                _ => return Err(Error::invalid("payload.declarative", "disagrees with config")),
            };
            let mut sc = SyntheticCognition::build(mc, &motor, dm, mode).map_err(|e| prefix(e, "config"))?;
            let history = history
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    Ok((
                        decode_vector(&h.frame, &format!("payload.history[{i}].frame"))?,
                        Mask::new(h.mask.clone()),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            sc.restore_history(history)?;
            Model::Cognition(sc)
        }
        _ => return Err(Error::Format("payload kind does not match config kind".into())),
    };
    Ok(ModelFile {
        model,
        input_codec: doc.config.input_codec,
    })
}

/// Canonical text of a model file, newline-terminated.
pub fn to_canonical_string(file: &ModelFile) -> Result<String> {
    // serde_json's default map is ordered, which sorts every object's keys.
    let value = serde_json::to_value(to_doc(file)).map_err(|e| Error::Format(e.to_string()))?;
    let mut text = serde_json::to_string(&value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn from_canonical_str(text: &str) -> Result<ModelFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("not a model file: {e}")))?;
    match value.get("magic").and_then(|m| m.as_str()) {
        Some(MAGIC) => {}
        _ => return Err(Error::Format(format!("missing `{MAGIC}` magic"))),
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format("missing version".into()))?;
    if version != u64::from(VERSION) {
        return Err(Error::Version {
            expected: VERSION,
            found: version,
        });
    }
    let doc: FileDoc = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    from_doc(doc)
}

pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_canonical_string(file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_canonical_str(&text)
}

/// SHA-256 of the canonical text, hex encoded.
pub fn model_hash(file: &ModelFile) -> Result<String> {
    let digest = Sha256::digest(to_canonical_string(file)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
