//! One function per CLI verb. Every file a command writes lands under the
//! output directory it is given.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fpeng::codec::{decode_categorical, decode_image, encode_categorical, encode_image};
use fpeng::persist::{model_hash, EXTENSION};
use fpeng::{
    load_model, save_model, ActivationVector, Cell, ChannelInputs, Cluster, CodecBinding, Error, ImageCodecSpec, Mask,
    Metacluster, Model, ModelFile, Result,
};
use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, RunConfig};
use crate::demos::{run_episodic, run_sensorimotor, EpisodicReport, SensorimotorReport};
use crate::idx::{load_images, load_labels};
use crate::pgm::{read_pgm, write_pgm};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub cell: usize,
    pub depth: usize,
    /// Parent cell and footprint, absent for the seed cell.
    pub parent: Option<(usize, u64)>,
    pub threshold: f64,
    pub footprints: usize,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Metacluster node name, or `declarative` for the episode memory.
    pub node: Option<String>,
    pub depth: usize,
    pub cells: Vec<CellStats>,
    pub footprints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub kind: String,
    pub model_hash: String,
    pub samples: Option<usize>,
    pub wall_time_ms: Option<f64>,
    pub clusters: Vec<ClusterStats>,
}

fn cell_stats(id: usize, depth: usize, parent: Option<(usize, u64)>, cell: &Cell) -> CellStats {
    CellStats {
        cell: id,
        depth,
        parent,
        threshold: cell.threshold(),
        footprints: cell.footprints().len(),
        counts: cell.footprints().iter().map(|f| f.count()).collect(),
    }
}

fn cluster_stats(node: Option<String>, c: &Cluster) -> ClusterStats {
    ClusterStats {
        node,
        depth: c.depth(),
        cells: c
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| cell_stats(id, n.depth, n.parent, &n.cell))
            .collect(),
        footprints: c.footprint_count(),
    }
}

fn metacluster_stats(mc: &Metacluster) -> Vec<ClusterStats> {
    mc.spec()
        .nodes
        .iter()
        .zip(mc.clusters())
        .map(|(n, c)| cluster_stats(Some(n.name.clone()), c))
        .collect()
}

pub fn model_stats(file: &ModelFile) -> Result<StatsReport> {
    let clusters = match &file.model {
        Model::Cell(cell) => vec![ClusterStats {
            node: None,
            depth: 1,
            cells: vec![cell_stats(0, 1, None, cell)],
            footprints: cell.footprints().len(),
        }],
        Model::Cluster(c) => vec![cluster_stats(None, c)],
        Model::Metacluster(mc) => metacluster_stats(mc),
        Model::Declarative(dm) => vec![cluster_stats(Some("declarative".into()), dm.cluster())],
        Model::Cognition(sc) => {
            let mut out = metacluster_stats(sc.motoperceptive());
            if let Some(dm) = sc.declarative() {
                out.push(cluster_stats(Some("declarative".into()), dm.cluster()));
            }
            out
        }
    };
    Ok(StatsReport {
        kind: file.model.kind().into(),
        model_hash: model_hash(file)?,
        samples: None,
        wall_time_ms: None,
        clusters,
    })
}

/// The motoperceptive metacluster of a model, if it has one.
fn metacluster_of(model: &Model) -> Option<&Metacluster> {
    match model {
        Model::Metacluster(mc) => Some(mc),
        Model::Cognition(sc) => Some(sc.motoperceptive()),
        _ => None,
    }
}

fn model_path(out: &Path, stem: &str) -> PathBuf {
    out.join(format!("{stem}{EXTENSION}"))
}

/// Pixels and, when labels were given, the label.
type Sample = (Vec<u8>, Option<u8>);

/// Image width, height and the samples selected by the dataset section, in file order.
fn dataset_samples(cfg: &RunConfig) -> Result<(usize, usize, Vec<Sample>)> {
    let ds = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Argument("no dataset configured (use --dataset)".into()))?;
    let images = load_images(&ds.images)?;
    let labels = ds.labels.as_ref().map(load_labels).transpose()?;
    if let Some(l) = &labels {
        if l.len() != images.len() {
            return Err(Error::Format(format!("{} labels for {} images", l.len(), images.len())));
        }
    }
    let limit = ds.limit.unwrap_or(usize::MAX);
    let samples = images
        .iter()
        .enumerate()
        .map(|(i, px)| (px.to_vec(), labels.as_ref().map(|l| l[i])))
        .filter(|(_, label)| match (&ds.classes, label) {
            (Some(keep), Some(l)) => keep.contains(l),
            _ => true,
        })
        .take(limit)
        .collect();
    Ok((images.cols, images.rows, samples))
}

fn check_image_spec(spec: &ImageCodecSpec, width: usize, height: usize) -> Result<()> {
    if (spec.width, spec.height) != (width, height) {
        return Err(Error::Argument(format!(
            "codec expects {}x{} images, dataset has {width}x{height}",
            spec.width, spec.height
        )));
    }
    Ok(())
}

/// Metacluster inputs for one sample: image channels get the pixels,
/// categorical channels get the label.
fn sample_inputs(mc: &Metacluster, pixels: &[u8], label: Option<u8>) -> Result<ChannelInputs> {
    let mut inputs = ChannelInputs::new();
    for ch in &mc.spec().channels {
        let v = match &ch.codec {
            CodecBinding::Image(spec) => encode_image(pixels, spec)?,
            CodecBinding::Categorical(spec) => {
                let label =
                    label.ok_or_else(|| Error::Argument(format!("channel `{}` needs dataset labels", ch.name)))?;
                encode_categorical(label.into(), spec)?
            }
            CodecBinding::Raw { .. } => {
                return Err(Error::Argument(format!(
                    "raw channel `{}` cannot be fed from an IDX dataset",
                    ch.name
                )))
            }
        };
        inputs.insert(ch.name.clone(), v);
    }
    Ok(inputs)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model_path: PathBuf,
    pub stats_path: PathBuf,
    pub stats: StatsReport,
}

/// Streams the dataset through the configured model in learn mode.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.check_paths()?;
    let (width, height, samples) = dataset_samples(cfg)?;
    let started = Instant::now();
    let file = match &cfg.model {
        ModelConfig::Cluster { codec, policy } => {
            let CodecBinding::Image(spec) = codec else {
                return Err(Error::Argument("training a single cluster needs an image codec".into()));
            };
            check_image_spec(spec, width, height)?;
            let mut cluster = Cluster::new(spec.dim(), *policy)?;
            let mask = Mask::full(spec.dim());
            for (pixels, _) in &samples {
                cluster.learn(&encode_image(pixels, spec)?, &mask)?;
            }
            ModelFile::with_codec(Model::Cluster(cluster), *codec)
        }
        ModelConfig::Metacluster { spec } => {
            for ch in &spec.channels {
                if let CodecBinding::Image(s) = &ch.codec {
                    check_image_spec(s, width, height)?;
                }
            }
            let mut mc = Metacluster::new(spec.clone())?;
            for (pixels, label) in &samples {
                let inputs = sample_inputs(&mc, pixels, *label)?;
                mc.learn(&inputs)?;
            }
            ModelFile::new(Model::Metacluster(mc))
        }
    };
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;

    ensure_dir(&cfg.out)?;
    let model_path = model_path(&cfg.out, "model");
    save_model(&file, &model_path)?;
    let mut stats = model_stats(&file)?;
    stats.samples = Some(samples.len());
    stats.wall_time_ms = Some(elapsed);
    let stats_path = cfg.out.join("stats.json");
    write_json(&stats_path, &stats)?;
    Ok(TrainOutcome {
        model_path,
        stats_path,
        stats,
    })
}

/// `[node:]cell[.footprint]`
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub node: Option<String>,
    pub cell: usize,
    pub footprint: Option<u64>,
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("bad selector `{s}`; expected [node:]cell[.footprint]"));
        let (node, rest) = match s.split_once(':') {
            Some((n, r)) if !n.is_empty() => (Some(n.to_string()), r),
            Some(_) => return Err(bad()),
            None => (None, s),
        };
        let (cell, footprint) = match rest.split_once('.') {
            Some((c, f)) => (c, Some(f.parse().map_err(|_| bad())?)),
            None => (rest, None),
        };
        Ok(Self {
            node,
            cell: cell.parse().map_err(|_| bad())?,
            footprint,
        })
    }
}

/// The cluster a selector names and the image codec its inputs use.
fn render_target<'a>(file: &'a ModelFile, node: Option<&str>) -> Result<(&'a Cluster, ImageCodecSpec)> {
    let image_codec = |c: Option<&CodecBinding>| match c {
        Some(CodecBinding::Image(s)) => Ok(*s),
        _ => Err(Error::Argument("model inputs are not images".into())),
    };
    let from_mc = |mc: &'a Metacluster| -> Result<(&'a Cluster, ImageCodecSpec)> {
        let name = node.ok_or_else(|| Error::Argument("metacluster models need a node in the selector".into()))?;
        let cluster = mc.cluster(name)?;
        let spec = &mc.spec().nodes[mc.node_index(name)?];
        let channel = spec
            .children
            .first()
            .and_then(|c| mc.channel(c).ok())
            .ok_or_else(|| Error::Argument(format!("node `{name}` is not a leaf")))?;
        Ok((cluster, image_codec(Some(&channel.codec))?))
    };
    match (&file.model, metacluster_of(&file.model)) {
        (_, Some(mc)) => from_mc(mc),
        (Model::Cluster(c), _) => Ok((c, image_codec(file.input_codec.as_ref())?)),
        (other, _) => Err(Error::Argument(format!("cannot render a {} model", other.kind()))),
    }
}

/// Writes one PGM per selected footprint and returns the paths.
pub fn cmd_render(model: &Path, selector: &Selector, out: &Path) -> Result<Vec<PathBuf>> {
    let file = load_model(model)?;
    let (spec, footprints) = match &file.model {
        Model::Cell(cell) => {
            if selector.cell != 0 {
                return Err(Error::Lookup {
                    kind: "cell",
                    name: selector.cell.to_string(),
                });
            }
            match file.input_codec {
                Some(CodecBinding::Image(spec)) => (spec, cell.footprints().to_vec()),
                _ => return Err(Error::Argument("model inputs are not images".into())),
            }
        }
        _ => {
            let (cluster, spec) = render_target(&file, selector.node.as_deref())?;
            let cell = cluster.cell(selector.cell).ok_or_else(|| Error::Lookup {
                kind: "cell",
                name: selector.cell.to_string(),
            })?;
            (spec, cell.footprints().to_vec())
        }
    };
    let chosen: Vec<_> = match selector.footprint {
        Some(id) => vec![footprints
            .iter()
            .find(|f| f.id() == id)
            .cloned()
            .ok_or_else(|| Error::Lookup {
                kind: "footprint",
                name: id.to_string(),
            })?],
        None => footprints,
    };
    let dir = out.join("render");
    ensure_dir(&dir)?;
    let prefix = selector.node.as_ref().map(|n| format!("{n}_")).unwrap_or_default();
    let mut written = Vec::with_capacity(chosen.len());
    for fp in &chosen {
        let path = dir.join(format!("{prefix}cell{}_fp{}.pgm", selector.cell, fp.id()));
        write_pgm(&path, spec.width, spec.height, &decode_image(fp.project(), &spec)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes DOT renderings; metacluster models get one file per node unless
/// `node` picks one.
pub fn cmd_export_dot(model: &Path, node: Option<&str>, out: &Path) -> Result<Vec<PathBuf>> {
    let file = load_model(model)?;
    let graphs: Vec<(String, String)> = match (&file.model, metacluster_of(&file.model)) {
        (_, Some(mc)) => match node {
            Some(n) => vec![(n.to_string(), mc.cluster(n)?.export_dot())],
            None => mc
                .spec()
                .nodes
                .iter()
                .zip(mc.clusters())
                .map(|(n, c)| (n.name.clone(), c.export_dot()))
                .collect(),
        },
        (Model::Cluster(c), _) => vec![("cluster".into(), c.export_dot())],
        (Model::Declarative(dm), _) => vec![("declarative".into(), dm.cluster().export_dot())],
        _ => return Err(Error::Argument("a single cell has no tree to export".into())),
    };
    ensure_dir(out)?;
    let mut written = Vec::new();
    for (name, dot) in graphs {
        let path = out.join(format!("{name}.dot"));
        std::fs::write(&path, dot).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_stats(model: &Path, out: &Path) -> Result<StatsReport> {
    let report = model_stats(&load_model(model)?)?;
    ensure_dir(out)?;
    write_json(&out.join("stats.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub target: String,
    pub symbol: Option<usize>,
    pub confidence: Option<f64>,
    pub image: Option<PathBuf>,
    pub values: Vec<f64>,
}

/// Parses `value` for a channel: a symbol index, a PGM path, or
/// comma-separated activations.
pub fn parse_channel_value(codec: &CodecBinding, value: &str) -> Result<ActivationVector> {
    match codec {
        CodecBinding::Categorical(spec) => {
            let symbol = value
                .parse()
                .map_err(|_| Error::Argument(format!("`{value}` is not a symbol index")))?;
            encode_categorical(symbol, spec)
        }
        CodecBinding::Image(spec) => {
            let (w, h, pixels) = read_pgm(value)?;
            check_image_spec(spec, w, h)?;
            encode_image(&pixels, spec)
        }
        CodecBinding::Raw { dim } => {
            let values = value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Argument(format!("`{value}` is not a list of numbers")))?;
            if values.len() != *dim {
                return Err(Error::Dimension {
                    expected: *dim,
                    found: values.len(),
                });
            }
            ActivationVector::new(values)
        }
    }
}

pub fn cmd_complete(model: &Path, inputs: &[(String, String)], target: &str, out: &Path) -> Result<CompletionReport> {
    let file = load_model(model)?;
    let mc = metacluster_of(&file.model)
        .ok_or_else(|| Error::Argument(format!("cannot complete with a {} model", file.model.kind())))?;
    let mut channels = ChannelInputs::new();
    for (name, value) in inputs {
        let codec = &mc.channel(name)?.codec;
        channels.insert(name.clone(), parse_channel_value(codec, value)?);
    }
    let completed = mc.complete(&channels, target)?;
    let mut report = CompletionReport {
        target: target.to_string(),
        symbol: None,
        confidence: None,
        image: None,
        values: completed.as_slice().to_vec(),
    };
    ensure_dir(out)?;
    match &mc.channel(target)?.codec {
        CodecBinding::Categorical(spec) => {
            let (s, c) = decode_categorical(&completed, spec)?;
            report.symbol = Some(s);
            report.confidence = Some(c);
        }
        CodecBinding::Image(spec) => {
            let path = out.join(format!("{target}.pgm"));
            write_pgm(&path, spec.width, spec.height, &decode_image(&completed, spec)?)?;
            report.image = Some(path);
        }
        CodecBinding::Raw { .. } => {}
    }
    write_json(&out.join("completion.json"), &report)?;
    Ok(report)
}

pub fn cmd_demo_sensorimotor(cfg: &RunConfig) -> Result<SensorimotorReport> {
    let (report, mc) = run_sensorimotor(&cfg.sensorimotor, cfg.seed)?;
    ensure_dir(&cfg.out)?;
    save_model(
        &ModelFile::new(Model::Metacluster(mc)),
        model_path(&cfg.out, "sensorimotor"),
    )?;
    write_json(&cfg.out.join("sensorimotor_report.json"), &report)?;
    Ok(report)
}

pub fn cmd_demo_episodic(cfg: &RunConfig) -> Result<EpisodicReport> {
    let report = run_episodic(&cfg.episodic, &cfg.episode_windows(), cfg.seed)?;
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("episodic_report.json"), &report)?;
    Ok(report)
}
