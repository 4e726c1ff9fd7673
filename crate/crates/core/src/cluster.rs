//! Clusters: trees of cells.
//!
//! The seed cell holds the most generic footprints. Once a footprint has
//! absorbed `spawn_count` inputs it gets a child cell with a stricter
//! threshold that refines its domain. Inputs descend greedily from the seed,
//! so a learn call touches exactly one root-to-leaf branch.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{Cell, CellOutcome, FootprintId};
use crate::repr::{ActivationVector, Mask};

pub type CellId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPolicy {
    pub theta_seed: f64,
    pub theta_step: f64,
    pub theta_max: f64,
    pub spawn_count: u64,
    pub max_depth: usize,
}

impl Default for ClusterPolicy {
    fn default() -> Self {
        Self {
            theta_seed: 0.35,
            theta_step: 0.15,
            theta_max: 0.95,
            spawn_count: 50,
            max_depth: 3,
        }
    }
}

impl ClusterPolicy {
    /// A flat cluster: one cell at `theta`, never spawning.
    pub fn single_cell(theta: f64) -> Self {
        Self {
            theta_seed: theta,
            theta_step: 1.0,
            theta_max: 1.0,
            spawn_count: u64::MAX,
            max_depth: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta_seed) {
            return Err(Error::arg(format!("theta_seed {} outside [0, 1]", self.theta_seed)));
        }
        if self.theta_step.is_nan() || self.theta_step <= 0.0 {
            return Err(Error::arg("theta_step must be positive"));
        }
        if !(self.theta_seed..=1.0).contains(&self.theta_max) {
            return Err(Error::arg("theta_max must lie in [theta_seed, 1]"));
        }
        if self.spawn_count < 2 {
            return Err(Error::arg("spawn_count must be at least 2"));
        }
        if self.max_depth == 0 {
            return Err(Error::arg("max_depth must be at least 1"));
        }
        Ok(())
    }

    /// Threshold for a child of a cell at `parent`, if it would be stricter.
    pub fn child_threshold(&self, parent: f64) -> Option<f64> {
        let theta = (parent + self.theta_step).min(self.theta_max);
        (theta > parent).then_some(theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellNode {
    pub cell: Cell,
    /// Parent cell and the parent footprint this cell refines.
    pub parent: Option<(CellId, FootprintId)>,
    /// Seed cell is depth 1.
    pub depth: usize,
    children: BTreeMap<FootprintId, CellId>,
}

impl CellNode {
    pub fn child_of(&self, footprint: FootprintId) -> Option<CellId> {
        self.children.get(&footprint).copied()
    }

    pub fn children(&self) -> impl Iterator<Item = (FootprintId, CellId)> + '_ {
        self.children.iter().map(|(&f, &c)| (f, c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub cell: CellId,
    pub depth: usize,
    pub outcome: CellOutcome,
}

/// The branch an input travelled, seed first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn is_no_match(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Most concrete representation: the deepest selected footprint.
    pub fn projection(&self) -> Option<&ActivationVector> {
        self.steps.last().map(|s| &s.outcome.projection)
    }

    /// Most abstract representation: the seed footprint selected.
    pub fn archetype(&self) -> Option<&ActivationVector> {
        self.steps.first().map(|s| &s.outcome.projection)
    }

    pub fn leaf(&self) -> Option<&TraceStep> {
        self.steps.last()
    }
}

pub fn cluster_projection(trace: &Trace) -> Result<&ActivationVector> {
    trace
        .projection()
        .ok_or_else(|| Error::NoMatch("trace selected no footprint".into()))
}

pub fn cluster_archetype(trace: &Trace) -> Result<&ActivationVector> {
    trace
        .archetype()
        .ok_or_else(|| Error::NoMatch("trace selected no footprint".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    dim: usize,
    policy: ClusterPolicy,
    nodes: Vec<CellNode>,
}

impl Cluster {
    pub fn new(dim: usize, policy: ClusterPolicy) -> Result<Self> {
        policy.validate()?;
        let seed = Cell::new(dim, policy.theta_seed)?;
        Ok(Self {
            dim,
            policy,
            nodes: vec![CellNode {
                cell: seed,
                parent: None,
                depth: 1,
                children: BTreeMap::new(),
            }],
        })
    }

    /// Rebuilds a cluster from persisted cells, checking the tree invariants.
    pub(crate) fn from_parts(
        dim: usize,
        policy: ClusterPolicy,
        cells: Vec<(Cell, Option<(CellId, FootprintId)>)>,
    ) -> Result<Self> {
        policy.validate()?;
        let mut nodes: Vec<CellNode> = Vec::with_capacity(cells.len());
        for (i, (cell, parent)) in cells.into_iter().enumerate() {
            let field = |f: &str| format!("cells[{i}].{f}");
            if cell.dim() != dim {
                return Err(Error::invalid(field("dim"), "does not match cluster dimension"));
            }
            let depth = match parent {
                None if i == 0 => {
                    if cell.threshold() != policy.theta_seed {
                        return Err(Error::invalid(field("threshold"), "seed threshold differs from policy"));
                    }
                    1
                }
                None => return Err(Error::invalid(field("parent"), "only the seed cell may lack a parent")),
                Some(_) if i == 0 => return Err(Error::invalid(field("parent"), "seed cell cannot have a parent")),
                Some((p, f)) => {
                    let pnode = nodes
                        .get_mut(p)
                        .ok_or_else(|| Error::invalid(field("parent"), "parent must precede its child"))?;
                    if pnode.cell.footprint(f).is_none() {
                        return Err(Error::invalid(field("parent"), format!("parent footprint {f} missing")));
                    }
                    if cell.threshold() <= pnode.cell.threshold() {
                        return Err(Error::invalid(
                            field("threshold"),
                            "child threshold must exceed parent's",
                        ));
                    }
                    if pnode.children.insert(f, i).is_some() {
                        return Err(Error::invalid(field("parent"), "parent footprint already has a child"));
                    }
                    pnode.depth + 1
                }
            };
            if depth > policy.max_depth {
                return Err(Error::invalid(field("parent"), "tree deeper than max_depth"));
            }
            nodes.push(CellNode {
                cell,
                parent,
                depth,
                children: BTreeMap::new(),
            });
        }
        if nodes.is_empty() {
            return Err(Error::invalid("cells", "cluster needs a seed cell"));
        }
        Ok(Self { dim, policy, nodes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn policy(&self) -> &ClusterPolicy {
        &self.policy
    }

    pub fn nodes(&self) -> &[CellNode] {
        &self.nodes
    }

    pub fn seed(&self) -> &Cell {
        &self.nodes[0].cell
    }

    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        self.nodes.get(id).map(|n| &n.cell)
    }

    /// Number of levels in use.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(1)
    }

    pub fn footprint_count(&self) -> usize {
        self.nodes.iter().map(|n| n.cell.footprints().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes[0].cell.is_empty()
    }

    /// Greedy read-only descent. An empty cluster gives an empty trace.
    pub fn query(&self, x: &ActivationVector, mask: &Mask) -> Result<Trace> {
        self.check_input(x, mask)?;
        let mut steps = Vec::new();
        let mut cur = 0;
        while let Some(outcome) = self.nodes[cur].cell.query(x, mask)? {
            let node = &self.nodes[cur];
            let next = node.child_of(outcome.footprint_id);
            steps.push(TraceStep {
                cell: cur,
                depth: node.depth,
                outcome,
            });
            match next {
                Some(child) => cur = child,
                None => break,
            }
        }
        Ok(Trace { steps })
    }

    /// Learns `x` along one branch and spawns a child cell under the deepest
    /// selected footprint once it reaches `spawn_count`.
    pub fn learn(&mut self, x: &ActivationVector, mask: &Mask) -> Result<Trace> {
        self.check_input(x, mask)?;
        let mut steps = Vec::new();
        let mut cur = 0;
        loop {
            let node = &mut self.nodes[cur];
            let outcome = node.cell.learn(x, mask)?;
            let next = if outcome.created {
                None
            } else {
                node.child_of(outcome.footprint_id)
            };
            steps.push(TraceStep {
                cell: cur,
                depth: node.depth,
                outcome,
            });
            match next {
                Some(child) => cur = child,
                None => break,
            }
        }
        let last = steps.last().expect("learning always selects a footprint");
        self.maybe_spawn(last.cell, last.outcome.footprint_id)?;
        Ok(Trace { steps })
    }

    pub fn process(&mut self, x: &ActivationVector, mask: &Mask, learn: bool) -> Result<Trace> {
        if learn {
            self.learn(x, mask)
        } else {
            self.query(x, mask)
        }
    }

    fn maybe_spawn(&mut self, cell: CellId, footprint: FootprintId) -> Result<()> {
        let node = &self.nodes[cell];
        let count = node.cell.footprint(footprint).map_or(0, |fp| fp.count());
        if count < self.policy.spawn_count || node.depth >= self.policy.max_depth || node.child_of(footprint).is_some()
        {
            return Ok(());
        }
        let Some(theta) = self.policy.child_threshold(node.cell.threshold()) else {
            return Ok(());
        };
        let depth = node.depth + 1;
        let id = self.nodes.len();
        self.nodes.push(CellNode {
            cell: Cell::new(self.dim, theta)?,
            parent: Some((cell, footprint)),
            depth,
            children: BTreeMap::new(),
        });
        self.nodes[cell].children.insert(footprint, id);
        Ok(())
    }

    fn check_input(&self, x: &ActivationVector, mask: &Mask) -> Result<()> {
        x.check_dim(self.dim)?;
        if mask.len() != self.dim {
            return Err(Error::dim(self.dim, mask.len()));
        }
        Ok(())
    }

    /// Per-cell state digests, indexed by cell id.
    pub fn cell_hashes(&self) -> Vec<u64> {
        self.nodes.iter().map(|n| n.cell.state_hash()).collect()
    }

    /// Graphviz rendering: one node per cell, edges labelled with the parent
    /// footprint they refine.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph cluster {\n    node [shape=box];\n");
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "    c{id} [label=\"cell {id}\\ntheta={:.4}\\nfootprints={}\"];",
                node.cell.threshold(),
                node.cell.footprints().len()
            );
        }
        for (id, node) in self.nodes.iter().enumerate() {
            for (fp, child) in node.children() {
                let _ = writeln!(out, "    c{id} -> c{child} [label=\"fp {fp}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}
