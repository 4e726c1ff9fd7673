//! Metaclusters: trees of clusters over named input channels.
//!
//! Every channel feeds one leaf cluster. Each parent concatenates its
//! children's archetypes into its own input. Channels missing from a call
//! turn into zero-filled, masked-absent segments, so the top of the tree can
//! match on what was observed and project what was not: feed image and sound,
//! read the motor segment back out of the top footprint and let the motor
//! cluster resolve it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{Cluster, ClusterPolicy, Trace};
use crate::codec::CodecBinding;
use crate::error::{Error, Result};
use crate::repr::{binarize, concat, segment, ActivationVector, Mask, SegmentLayout};

/// Channel name → input vector. Absent channels are simply not in the map.
pub type ChannelInputs = BTreeMap<String, ActivationVector>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub codec: CodecBinding,
}

impl ChannelSpec {
    pub fn dim(&self) -> usize {
        self.codec.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    /// A leaf names exactly one channel; an inner node names other nodes.
    pub children: Vec<String>,
    pub policy: ClusterPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ArchetypeMode {
    #[default]
    Dense,
    Binarized {
        tau: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaclusterSpec {
    pub channels: Vec<ChannelSpec>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub archetype_mode: ArchetypeMode,
}

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    Leaf { channel: usize },
    Inner { children: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
struct TopoNode {
    name: String,
    kind: NodeKind,
    parent: Option<usize>,
    layout: SegmentLayout,
}

#[derive(Debug, Clone, PartialEq)]
struct Topology {
    nodes: Vec<TopoNode>,
    /// Children before parents.
    order: Vec<usize>,
    root: usize,
    channel_leaf: Vec<usize>,
}

impl Topology {
    fn build(spec: &MetaclusterSpec) -> Result<Self> {
        if spec.channels.is_empty() {
            return Err(Error::arg("metacluster needs at least one channel"));
        }
        if spec.nodes.is_empty() {
            return Err(Error::arg("metacluster needs at least one node"));
        }
        if let ArchetypeMode::Binarized { tau } = spec.archetype_mode {
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::arg(format!("binarization threshold {tau} outside [0, 1]")));
            }
        }
        let mut channel_ix = BTreeMap::new();
        for (i, ch) in spec.channels.iter().enumerate() {
            ch.codec.validate()?;
            if channel_ix.insert(ch.name.as_str(), i).is_some() {
                return Err(Error::arg(format!("duplicate channel `{}`", ch.name)));
            }
        }
        let mut node_ix = BTreeMap::new();
        for (i, node) in spec.nodes.iter().enumerate() {
            node.policy.validate()?;
            if channel_ix.contains_key(node.name.as_str()) {
                return Err(Error::arg(format!("node `{}` shadows a channel name", node.name)));
            }
            if node_ix.insert(node.name.as_str(), i).is_some() {
                return Err(Error::arg(format!("duplicate node `{}`", node.name)));
            }
        }

        let mut kinds = Vec::with_capacity(spec.nodes.len());
        let mut parent: Vec<Option<usize>> = vec![None; spec.nodes.len()];
        let mut channel_leaf: Vec<Option<usize>> = vec![None; spec.channels.len()];
        for (i, node) in spec.nodes.iter().enumerate() {
            let kind = match node.children.as_slice() {
                [] => return Err(Error::arg(format!("node `{}` has no children", node.name))),
                [only] if channel_ix.contains_key(only.as_str()) => {
                    let ch = channel_ix[only.as_str()];
                    if channel_leaf[ch].replace(i).is_some() {
                        return Err(Error::arg(format!("channel `{only}` feeds more than one leaf")));
                    }
                    NodeKind::Leaf { channel: ch }
                }
                children => {
                    let mut ix = Vec::with_capacity(children.len());
                    for child in children {
                        let Some(&c) = node_ix.get(child.as_str()) else {
                            return Err(if channel_ix.contains_key(child.as_str()) {
                                Error::arg(format!("node `{}` mixes channels with other children", node.name))
                            } else {
                                Error::lookup("node or channel", child.as_str())
                            });
                        };
                        if parent[c].replace(i).is_some() {
                            return Err(Error::arg(format!("node `{child}` has more than one parent")));
                        }
                        ix.push(c);
                    }
                    NodeKind::Inner { children: ix }
                }
            };
            kinds.push(kind);
        }
        if let Some(ch) = channel_leaf.iter().position(Option::is_none) {
            return Err(Error::arg(format!(
                "channel `{}` feeds no leaf",
                spec.channels[ch].name
            )));
        }
        let roots: Vec<usize> = (0..spec.nodes.len()).filter(|&i| parent[i].is_none()).collect();
        let [root] = roots[..] else {
            return Err(Error::arg(format!(
                "metacluster needs exactly one root, found {}",
                roots.len()
            )));
        };

        // Post-order from the root. With single parents and one root, anything
        // unreachable sits on a cycle.
        let mut order = Vec::with_capacity(kinds.len());
        let mut stack = vec![(root, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                order.push(n);
                continue;
            }
            stack.push((n, true));
            if let NodeKind::Inner { children } = &kinds[n] {
                stack.extend(children.iter().rev().map(|&c| (c, false)));
            }
        }
        if order.len() != kinds.len() {
            return Err(Error::arg("metacluster graph is not a single tree"));
        }

        let mut dims = vec![0usize; kinds.len()];
        let mut layouts: Vec<Option<SegmentLayout>> = vec![None; kinds.len()];
        for &n in &order {
            let layout = match &kinds[n] {
                NodeKind::Leaf { channel } => {
                    let ch = &spec.channels[*channel];
                    SegmentLayout::from_lengths([(ch.name.clone(), ch.dim())])?
                }
                NodeKind::Inner { children } => {
                    SegmentLayout::from_lengths(children.iter().map(|&c| (spec.nodes[c].name.clone(), dims[c])))?
                }
            };
            dims[n] = layout.total();
            layouts[n] = Some(layout);
        }

        let nodes = spec
            .nodes
            .iter()
            .zip(kinds)
            .zip(layouts)
            .enumerate()
            .map(|(i, ((node, kind), layout))| TopoNode {
                name: node.name.clone(),
                kind,
                parent: parent[i],
                layout: layout.expect("every node is reachable"),
            })
            .collect();
        Ok(Self {
            nodes,
            order,
            root,
            channel_leaf: channel_leaf.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Node indices from the root down to the leaf of `channel`.
    fn path_to_channel(&self, channel: usize) -> Vec<usize> {
        let mut path = vec![self.channel_leaf[channel]];
        while let Some(p) = self.nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        path.reverse();
        path
    }
}

/// What one node saw and selected during a bottom-up pass.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeResult {
    pub name: String,
    pub input: ActivationVector,
    pub mask: Mask,
    /// `None` when the node had nothing present to process.
    pub trace: Option<Trace>,
    /// Passed to the parent; zeros when the node matched nothing.
    pub archetype: ActivationVector,
    /// Whether the archetype stands for real input.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCResult {
    /// Indexed like `MetaclusterSpec::nodes`.
    pub nodes: Vec<NodeResult>,
    pub root: usize,
    /// Per channel in spec order: the leaf projection for present channels,
    /// the top-down completion for absent ones.
    pub leaf_projections: Vec<Option<ActivationVector>>,
    pub top_projection: Option<ActivationVector>,
    pub mc_projection: ActivationVector,
}

impl MCResult {
    pub fn node(&self, name: &str) -> Option<&NodeResult> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn root(&self) -> &NodeResult {
        &self.nodes[self.root]
    }
}

/// Concatenation of leaf projections in channel order.
pub fn mc_projection(result: &MCResult) -> &ActivationVector {
    &result.mc_projection
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metacluster {
    spec: MetaclusterSpec,
    topo: Topology,
    clusters: Vec<Cluster>,
}

impl Metacluster {
    pub fn new(spec: MetaclusterSpec) -> Result<Self> {
        let topo = Topology::build(&spec)?;
        let clusters = spec
            .nodes
            .iter()
            .zip(&topo.nodes)
            .map(|(n, t)| Cluster::new(t.layout.total(), n.policy))
            .collect::<Result<_>>()?;
        Ok(Self { spec, topo, clusters })
    }

    pub(crate) fn from_parts(spec: MetaclusterSpec, clusters: Vec<Cluster>) -> Result<Self> {
        let topo = Topology::build(&spec)?;
        if clusters.len() != topo.nodes.len() {
            return Err(Error::invalid("clusters", "one cluster per node required"));
        }
        for (i, (c, t)) in clusters.iter().zip(&topo.nodes).enumerate() {
            if c.dim() != t.layout.total() {
                return Err(Error::invalid(
                    format!("clusters[{i}].dim"),
                    format!("expected {} for node `{}`", t.layout.total(), t.name),
                ));
            }
            if c.policy() != &spec.nodes[i].policy {
                return Err(Error::invalid(
                    format!("clusters[{i}].policy"),
                    "differs from node spec",
                ));
            }
        }
        Ok(Self { spec, topo, clusters })
    }

    pub fn spec(&self) -> &MetaclusterSpec {
        &self.spec
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.topo
            .nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::lookup("node", name))
    }

    pub fn cluster(&self, node: &str) -> Result<&Cluster> {
        Ok(&self.clusters[self.node_index(node)?])
    }

    pub fn root_name(&self) -> &str {
        &self.topo.nodes[self.topo.root].name
    }

    pub fn root_cluster(&self) -> &Cluster {
        &self.clusters[self.topo.root]
    }

    /// How the root's input is assembled from its children.
    pub fn root_layout(&self) -> &SegmentLayout {
        &self.topo.nodes[self.topo.root].layout
    }

    pub fn layout(&self, node: &str) -> Result<&SegmentLayout> {
        Ok(&self.topo.nodes[self.node_index(node)?].layout)
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.spec
            .channels
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::lookup("channel", name))
    }

    pub fn channel(&self, name: &str) -> Result<&ChannelSpec> {
        Ok(&self.spec.channels[self.channel_index(name)?])
    }

    /// Leaf cluster fed by `channel`.
    pub fn leaf_cluster(&self, channel: &str) -> Result<&Cluster> {
        Ok(&self.clusters[self.topo.channel_leaf[self.channel_index(channel)?]])
    }

    /// Name of the root's child whose subtree holds `channel`, or `None` when
    /// the root itself is that channel's leaf.
    pub fn root_child_towards(&self, channel: &str) -> Result<Option<&str>> {
        let path = self.topo.path_to_channel(self.channel_index(channel)?);
        Ok(path.get(1).map(|&n| self.topo.nodes[n].name.as_str()))
    }

    fn check_inputs(&self, inputs: &ChannelInputs) -> Result<()> {
        for (name, x) in inputs {
            x.check_dim(self.channel(name)?.dim())?;
        }
        if inputs.is_empty() {
            return Err(Error::arg("at least one channel must be present"));
        }
        Ok(())
    }

    pub fn learn(&mut self, inputs: &ChannelInputs) -> Result<MCResult> {
        self.check_inputs(inputs)?;
        let clusters = &mut self.clusters;
        let nodes = bottom_up(&self.spec, &self.topo, inputs, |i, x, m| clusters[i].learn(x, m))?;
        self.finish(inputs, nodes)
    }

    /// Bottom-up pass in query mode followed by top-down completion of every
    /// absent channel. Never mutates.
    pub fn query(&self, inputs: &ChannelInputs) -> Result<MCResult> {
        self.check_inputs(inputs)?;
        let nodes = bottom_up(&self.spec, &self.topo, inputs, |i, x, m| self.clusters[i].query(x, m))?;
        self.finish(inputs, nodes)
    }

    pub fn process(&mut self, inputs: &ChannelInputs, learn: bool) -> Result<MCResult> {
        if learn {
            self.learn(inputs)
        } else {
            self.query(inputs)
        }
    }

    /// Projection of the absent `target` channel completed from the others.
    pub fn complete(&self, inputs: &ChannelInputs, target: &str) -> Result<ActivationVector> {
        let ch = self.channel_index(target)?;
        if inputs.contains_key(target) {
            return Err(Error::arg(format!(
                "target channel `{target}` must be absent from the inputs"
            )));
        }
        if inputs.is_empty() {
            return Err(Error::arg("completion needs at least one other channel present"));
        }
        let result = self.query(inputs)?;
        result.leaf_projections[ch]
            .clone()
            .ok_or_else(|| Error::NoMatch(format!("nothing to complete `{target}` from")))
    }

    /// Resolves a vector living in the root's input space down to the leaf
    /// projection of `channel`, querying each cluster on the way.
    pub fn descend_from_root(&self, value: &ActivationVector, channel: &str) -> Result<Option<ActivationVector>> {
        value.check_dim(self.root_layout().total())?;
        let path = self.topo.path_to_channel(self.channel_index(channel)?);
        self.descend(&path, value.clone())
    }

    /// `value` is a footprint value of `path[0]`; walks it down the path.
    fn descend(&self, path: &[usize], mut value: ActivationVector) -> Result<Option<ActivationVector>> {
        for pair in path.windows(2) {
            let (node, child) = (&self.topo.nodes[pair[0]], &self.topo.nodes[pair[1]]);
            let part = segment(&value, &node.layout, &child.name)?;
            let trace = self.clusters[pair[1]].query(&part, &Mask::full(part.len()))?;
            match trace.projection() {
                Some(p) => value = p.clone(),
                None => return Ok(None),
            }
        }
        Ok(Some(value))
    }

    fn finish(&self, inputs: &ChannelInputs, nodes: Vec<NodeResult>) -> Result<MCResult> {
        let root = self.topo.root;
        let top_projection = nodes[root].trace.as_ref().and_then(|t| t.projection().cloned());
        let mut leaf_projections = Vec::with_capacity(self.spec.channels.len());
        for (ch, spec) in self.spec.channels.iter().enumerate() {
            let leaf = self.topo.channel_leaf[ch];
            let projection = if inputs.contains_key(&spec.name) {
                nodes[leaf].trace.as_ref().and_then(|t| t.projection().cloned())
            } else {
                match &top_projection {
                    Some(top) => self.descend(&self.topo.path_to_channel(ch), top.clone())?,
                    None => None,
                }
            };
            leaf_projections.push(projection);
        }
        let zero_fill: Vec<ActivationVector> = self
            .spec
            .channels
            .iter()
            .zip(&leaf_projections)
            .map(|(c, p)| p.clone().unwrap_or_else(|| ActivationVector::zeros(c.dim())))
            .collect();
        let mc_projection = concat(&zero_fill)?;
        Ok(MCResult {
            nodes,
            root,
            leaf_projections,
            top_projection,
            mc_projection,
        })
    }
}

fn bottom_up(
    spec: &MetaclusterSpec,
    topo: &Topology,
    inputs: &ChannelInputs,
    mut run: impl FnMut(usize, &ActivationVector, &Mask) -> Result<Trace>,
) -> Result<Vec<NodeResult>> {
    let mut results: Vec<Option<NodeResult>> = vec![None; topo.nodes.len()];
    for &n in &topo.order {
        let node = &topo.nodes[n];
        let (input, mask) = match &node.kind {
            NodeKind::Leaf { channel } => {
                let ch = &spec.channels[*channel];
                match inputs.get(&ch.name) {
                    Some(x) => (x.clone(), Mask::full(x.len())),
                    None => (ActivationVector::zeros(ch.dim()), Mask::absent(ch.dim())),
                }
            }
            NodeKind::Inner { children } => {
                let kids: Vec<&NodeResult> = children
                    .iter()
                    .map(|&c| results[c].as_ref().expect("children precede parents"))
                    .collect();
                let input = concat(kids.iter().map(|k| &k.archetype))?;
                let mask = Mask::concat(
                    kids.iter()
                        .map(|k| {
                            if k.matched {
                                Mask::full(k.archetype.len())
                            } else {
                                Mask::absent(k.archetype.len())
                            }
                        })
                        .collect::<Vec<_>>()
                        .iter(),
                );
                (input, mask)
            }
        };
        let trace = if mask.any_present() {
            Some(run(n, &input, &mask)?)
        } else {
            None
        };
        let archetype = match trace.as_ref().and_then(Trace::archetype) {
            Some(a) => match spec.archetype_mode {
                ArchetypeMode::Dense => Some(a.clone()),
                ArchetypeMode::Binarized { tau } => Some(binarize(a, tau)?),
            },
            None => None,
        };
        let matched = archetype.is_some();
        results[n] = Some(NodeResult {
            name: node.name.clone(),
            archetype: archetype.unwrap_or_else(|| ActivationVector::zeros(input.len())),
            input,
            mask,
            trace,
            matched,
        });
    }
    Ok(results.into_iter().map(|r| r.expect("every node visited")).collect())
}
