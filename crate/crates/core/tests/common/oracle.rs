//! Naive reference implementations used as test oracles. Deliberately
//! written against plain `Vec<f64>` with sums and counts instead of running
//! means, sharing no code with the engine.

#![allow(dead_code)]

pub fn cosine(a: &[f64], b: &[f64], present: &[bool]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        if present[i] {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
    }
    if na == 0.0 && nb == 0.0 {
        1.0
    } else if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb).sqrt()).min(1.0)
    }
}

/// A prototype kept as a sum plus a count.
#[derive(Clone, Debug)]
pub struct Proto {
    pub sum: Vec<f64>,
    pub count: u64,
}

impl Proto {
    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count as f64).collect()
    }
}

/// Index of the first prototype with the highest similarity.
pub fn best(protos: &[Proto], x: &[f64], present: &[bool]) -> Option<(usize, f64)> {
    let mut out: Option<(usize, f64)> = None;
    for (i, p) in protos.iter().enumerate() {
        let s = cosine(x, &p.mean(), present);
        match out {
            Some((_, b)) if s <= b => {}
            _ => out = Some((i, s)),
        }
    }
    out
}

/// Threshold leader clustering on full-mask inputs. Returns the prototype
/// index each input was assigned to, and the final prototypes.
pub fn leader_clustering(stream: &[Vec<f64>], theta: f64) -> (Vec<usize>, Vec<Proto>) {
    let mut protos: Vec<Proto> = Vec::new();
    let mut assigned = Vec::with_capacity(stream.len());
    for x in stream {
        let full = vec![true; x.len()];
        match best(&protos, x, &full) {
            Some((i, s)) if s >= theta => {
                for (acc, v) in protos[i].sum.iter_mut().zip(x) {
                    *acc += v;
                }
                protos[i].count += 1;
                assigned.push(i);
            }
            _ => {
                protos.push(Proto {
                    sum: x.clone(),
                    count: 1,
                });
                assigned.push(protos.len() - 1);
            }
        }
    }
    (assigned, protos)
}

/// Step-by-step simulation of a cluster tree under full masks.
pub struct TreeSim {
    pub theta_seed: f64,
    pub theta_step: f64,
    pub theta_max: f64,
    pub spawn_count: u64,
    pub max_depth: usize,
    /// Per cell: threshold, depth, prototypes, child cell per prototype.
    pub cells: Vec<SimCell>,
}

pub struct SimCell {
    pub theta: f64,
    pub depth: usize,
    pub parent: Option<(usize, usize)>,
    pub protos: Vec<Proto>,
    pub child: Vec<Option<usize>>,
}

impl TreeSim {
    pub fn new(theta_seed: f64, theta_step: f64, theta_max: f64, spawn_count: u64, max_depth: usize) -> Self {
        Self {
            theta_seed,
            theta_step,
            theta_max,
            spawn_count,
            max_depth,
            cells: vec![SimCell {
                theta: theta_seed,
                depth: 1,
                parent: None,
                protos: vec![],
                child: vec![],
            }],
        }
    }

    /// Returns the `(cell, prototype)` path the input took.
    pub fn learn(&mut self, x: &[f64]) -> Vec<(usize, usize)> {
        let full = vec![true; x.len()];
        let mut path = Vec::new();
        let mut cur = 0;
        loop {
            let cell = &mut self.cells[cur];
            match best(&cell.protos, x, &full) {
                Some((i, s)) if s >= cell.theta => {
                    for (acc, v) in cell.protos[i].sum.iter_mut().zip(x) {
                        *acc += v;
                    }
                    cell.protos[i].count += 1;
                    path.push((cur, i));
                    match cell.child[i] {
                        Some(c) => cur = c,
                        None => break,
                    }
                }
                _ => {
                    cell.protos.push(Proto {
                        sum: x.to_vec(),
                        count: 1,
                    });
                    cell.child.push(None);
                    path.push((cur, cell.protos.len() - 1));
                    return path;
                }
            }
        }
        let &(c, p) = path.last().unwrap();
        let cell = &self.cells[c];
        let child_theta = (cell.theta + self.theta_step).min(self.theta_max);
        if cell.protos[p].count >= self.spawn_count
            && cell.depth < self.max_depth
            && cell.child[p].is_none()
            && child_theta > cell.theta
        {
            let depth = cell.depth + 1;
            self.cells.push(SimCell {
                theta: child_theta,
                depth,
                parent: Some((c, p)),
                protos: vec![],
                child: vec![],
            });
            let id = self.cells.len() - 1;
            self.cells[c].child[p] = Some(id);
        }
        path
    }
}

/// Nearest stored pattern by cosine; ties to the lowest index.
pub fn nearest_pattern(patterns: &[Vec<f64>], x: &[f64]) -> usize {
    let full = vec![true; x.len()];
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in patterns.iter().enumerate() {
        let s = cosine(x, p, &full);
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}
