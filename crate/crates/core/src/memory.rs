//! Footprints and Cells: the primitive pattern memory.
//!
//! A [`Footprint`] is the running average of every manifestation assigned to
//! it, and projects that average back out. A [`Cell`] holds footprints under a
//! shared similarity threshold and runs threshold leader clustering: an input
//! joins its most similar footprint if that similarity reaches the threshold,
//! otherwise it founds a new one.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::repr::{similarity, ActivationVector, Mask};

pub type FootprintId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    id: FootprintId,
    value: ActivationVector,
    count: u64,
}

impl Footprint {
    pub fn new(id: FootprintId, x: ActivationVector) -> Self {
        Self { id, value: x, count: 1 }
    }

    pub(crate) fn from_parts(id: FootprintId, value: ActivationVector, count: u64) -> Self {
        Self { id, value, count }
    }

    pub fn id(&self) -> FootprintId {
        self.id
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// The footprint's projection: the average it has built.
    pub fn project(&self) -> &ActivationVector {
        &self.value
    }

    /// Folds `x` into the running mean.
    pub fn learn(&mut self, x: &ActivationVector) -> Result<()> {
        x.check_dim(self.value.len())?;
        self.count += 1;
        let n = self.count as f64;
        let updated = self
            .value
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(&v, &xi)| (v + (xi - v) / n).clamp(0.0, 1.0))
            .collect();
        self.value = ActivationVector::from_unchecked(updated);
        Ok(())
    }
}

impl Hash for Footprint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
        self.count.hash(state);
        for v in self.value.as_slice() {
            v.to_bits().hash(state);
        }
    }
}

/// Result of presenting one input to a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub footprint_id: FootprintId,
    pub similarity: f64,
    pub created: bool,
    pub projection: ActivationVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    footprints: Vec<Footprint>,
    threshold: f64,
    dim: usize,
    next_id: FootprintId,
}

impl Cell {
    pub fn new(dim: usize, threshold: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("cell dimension must be at least one"));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::arg(format!("cell threshold {threshold} outside [0, 1]")));
        }
        Ok(Self {
            footprints: Vec::new(),
            threshold,
            dim,
            next_id: 0,
        })
    }

    /// Rebuilds a cell from persisted state, re-checking every invariant.
    pub(crate) fn from_parts(
        dim: usize,
        threshold: f64,
        footprints: Vec<Footprint>,
        next_id: FootprintId,
    ) -> Result<Self> {
        let mut cell = Self::new(dim, threshold)?;
        let mut last: Option<FootprintId> = None;
        for (i, fp) in footprints.iter().enumerate() {
            if fp.count == 0 {
                return Err(Error::invalid(format!("footprints[{i}].count"), "must be at least 1"));
            }
            if fp.value.len() != dim {
                return Err(Error::invalid(
                    format!("footprints[{i}].value"),
                    format!("length {} does not match cell dimension {dim}", fp.value.len()),
                ));
            }
            if last.is_some_and(|prev| fp.id <= prev) {
                return Err(Error::invalid(
                    format!("footprints[{i}].id"),
                    "ids must be unique and ascending",
                ));
            }
            if fp.id >= next_id {
                return Err(Error::invalid(format!("footprints[{i}].id"), "id not below next_id"));
            }
            last = Some(fp.id);
        }
        cell.footprints = footprints;
        cell.next_id = next_id;
        Ok(cell)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn next_id(&self) -> FootprintId {
        self.next_id
    }

    pub fn footprints(&self) -> &[Footprint] {
        &self.footprints
    }

    pub fn footprint(&self, id: FootprintId) -> Option<&Footprint> {
        self.footprints
            .binary_search_by_key(&id, |fp| fp.id)
            .ok()
            .map(|i| &self.footprints[i])
    }

    pub fn is_empty(&self) -> bool {
        self.footprints.is_empty()
    }

    /// Σ footprint counts, i.e. the number of learn calls this cell has seen.
    pub fn total_count(&self) -> u64 {
        self.footprints.iter().map(|fp| fp.count).sum()
    }

    /// Most similar footprint as `(index, similarity)`; the oldest wins ties.
    fn best_match(&self, x: &ActivationVector, mask: &Mask) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, fp) in self.footprints.iter().enumerate() {
            let s = similarity(x, &fp.value, mask)?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        Ok(best)
    }

    fn check_input(&self, x: &ActivationVector, mask: &Mask) -> Result<()> {
        x.check_dim(self.dim)?;
        if mask.len() != self.dim {
            return Err(Error::dim(self.dim, mask.len()));
        }
        Ok(())
    }

    /// Matches `x` without touching the cell. `None` only for an empty cell;
    /// a below-threshold best match is still returned.
    pub fn query(&self, x: &ActivationVector, mask: &Mask) -> Result<Option<CellOutcome>> {
        self.check_input(x, mask)?;
        Ok(self.best_match(x, mask)?.map(|(i, s)| {
            let fp = &self.footprints[i];
            CellOutcome {
                footprint_id: fp.id,
                similarity: s,
                created: false,
                projection: fp.value.clone(),
            }
        }))
    }

    /// Match-or-create. Absent dimensions of `x` are imputed from the matched
    /// footprint when updating it, and zero-filled when founding a new one.
    pub fn learn(&mut self, x: &ActivationVector, mask: &Mask) -> Result<CellOutcome> {
        self.check_input(x, mask)?;
        match self.best_match(x, mask)? {
            Some((i, s)) if s >= self.threshold => {
                let fp = &mut self.footprints[i];
                let observed = if mask.all_present() {
                    x.clone()
                } else {
                    impute(x, mask, &fp.value)
                };
                fp.learn(&observed)?;
                Ok(CellOutcome {
                    footprint_id: fp.id,
                    similarity: s,
                    created: false,
                    projection: fp.value.clone(),
                })
            }
            _ => {
                let value = if mask.all_present() {
                    x.clone()
                } else {
                    impute(x, mask, &ActivationVector::zeros(self.dim))
                };
                let fp = Footprint::new(self.next_id, value);
                self.next_id += 1;
                let s = similarity(x, &fp.value, mask)?;
                let outcome = CellOutcome {
                    footprint_id: fp.id,
                    similarity: s,
                    created: true,
                    projection: fp.value.clone(),
                };
                self.footprints.push(fp);
                Ok(outcome)
            }
        }
    }

    pub fn process(&mut self, x: &ActivationVector, mask: &Mask, learn: bool) -> Result<Option<CellOutcome>> {
        if learn {
            self.learn(x, mask).map(Some)
        } else {
            self.query(x, mask)
        }
    }

    /// Stable digest of the full cell state.
    pub fn state_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

impl Hash for Cell {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.threshold.to_bits().hash(state);
        self.next_id.hash(state);
        self.footprints.hash(state);
    }
}

/// `x` on present dimensions, `fill` elsewhere.
fn impute(x: &ActivationVector, mask: &Mask, fill: &ActivationVector) -> ActivationVector {
    ActivationVector::from_unchecked(
        x.as_slice()
            .iter()
            .zip(fill.as_slice())
            .zip(mask.as_slice())
            .map(|((&xi, &fi), &present)| if present { xi } else { fi })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn av(v: &[f64]) -> ActivationVector {
        ActivationVector::new(v.to_vec()).unwrap()
    }

    fn random_binary(rng: &mut ChaCha8Rng, dim: usize) -> ActivationVector {
        av(&(0..dim)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
            .collect::<Vec<_>>())
    }

    #[test]
    fn footprint_create_and_project() {
        let fp = Footprint::new(0, av(&[1., 0.]));
        assert_eq!(fp.count(), 1);
        assert_eq!(fp.project(), &av(&[1., 0.]));
    }

    #[test]
    fn footprint_two_point_mean() {
        let mut fp = Footprint::new(0, av(&[1., 0.]));
        fp.learn(&av(&[0., 1.])).unwrap();
        assert_eq!(fp.count(), 2);
        assert_eq!(fp.project(), &av(&[0.5, 0.5]));
        assert!(matches!(fp.learn(&av(&[1.])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn footprint_duplicates_leave_value_unchanged() {
        let x = av(&[0.25, 1., 0.]);
        let mut fp = Footprint::new(0, x.clone());
        for _ in 0..50 {
            fp.learn(&x).unwrap();
        }
        assert_eq!(fp.count(), 51);
        assert_eq!(fp.project(), &x);
    }

    #[test]
    fn footprint_mean_matches_sum_divide_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let stream: Vec<_> = (0..100).map(|_| random_binary(&mut rng, 32)).collect();
        let mut fp = Footprint::new(0, stream[0].clone());
        for x in &stream[1..] {
            fp.learn(x).unwrap();
        }
        for d in 0..32 {
            let mean = stream.iter().map(|x| x[d]).sum::<f64>() / stream.len() as f64;
            assert!((fp.project()[d] - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_creates_on_dissimilar_input() {
        let mut cell = Cell::new(4, 0.9).unwrap();
        cell.learn(&av(&[1., 0., 0., 0.]), &Mask::full(4)).unwrap();
        let out = cell.learn(&av(&[0., 0., 0., 1.]), &Mask::full(4)).unwrap();
        assert!(out.created);
        assert_eq!(out.similarity, 1.0);
        assert_eq!(cell.footprints().len(), 2);
        assert_ne!(cell.footprints()[0].id(), cell.footprints()[1].id());
    }

    #[test]
    fn cell_updates_on_match() {
        let mut cell = Cell::new(4, 0.9).unwrap();
        cell.learn(&av(&[1., 0., 0., 0.]), &Mask::full(4)).unwrap();
        let out = cell.learn(&av(&[1., 0., 0., 0.]), &Mask::full(4)).unwrap();
        assert!(!out.created);
        assert_eq!(out.similarity, 1.0);
        assert_eq!(cell.footprints()[0].count(), 2);
    }

    #[test]
    fn query_on_empty_cell_is_no_match() {
        let cell = Cell::new(3, 0.5).unwrap();
        assert_eq!(cell.query(&av(&[1., 0., 0.]), &Mask::full(3)).unwrap(), None);
    }

    #[test]
    fn query_returns_best_even_below_threshold() {
        let mut cell = Cell::new(2, 0.99).unwrap();
        cell.learn(&av(&[1., 0.]), &Mask::full(2)).unwrap();
        let out = cell.query(&av(&[1., 1.]), &Mask::full(2)).unwrap().unwrap();
        assert!(!out.created);
        assert!(out.similarity < 0.99);
        assert_eq!(out.footprint_id, 0);
    }

    #[test]
    fn ties_go_to_oldest_footprint() {
        let mut cell = Cell::new(2, 1.0).unwrap();
        cell.learn(&av(&[1., 0.]), &Mask::full(2)).unwrap();
        cell.learn(&av(&[0., 1.]), &Mask::full(2)).unwrap();
        let out = cell.query(&av(&[1., 1.]), &Mask::full(2)).unwrap().unwrap();
        assert_eq!(out.footprint_id, 0);
    }

    #[test]
    fn masked_learning_imputes_absent_dimensions() {
        let mut cell = Cell::new(4, 0.5).unwrap();
        cell.learn(&av(&[1., 0., 1., 1.]), &Mask::full(4)).unwrap();
        let mask = Mask::new(vec![true, true, false, false]);
        let out = cell.learn(&av(&[1., 0., 0., 0.]), &mask).unwrap();
        assert!(!out.created);
        assert_eq!(out.projection, av(&[1., 0., 1., 1.]));
        assert_eq!(cell.footprints()[0].count(), 2);
    }

    #[test]
    fn masked_creation_zero_fills_absent_dimensions() {
        let mut cell = Cell::new(4, 0.5).unwrap();
        let mask = Mask::new(vec![true, true, false, false]);
        let out = cell.learn(&av(&[0., 1., 1., 1.]), &mask).unwrap();
        assert!(out.created);
        assert_eq!(out.projection, av(&[0., 1., 0., 0.]));
        assert_eq!(out.similarity, 1.0);
    }

    #[test]
    fn dimension_errors() {
        let mut cell = Cell::new(3, 0.5).unwrap();
        assert!(matches!(
            cell.learn(&av(&[1., 0.]), &Mask::full(2)),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            cell.learn(&av(&[1., 0., 0.]), &Mask::full(2)),
            Err(Error::Dimension { .. })
        ));
        assert!(Cell::new(0, 0.5).is_err());
        assert!(Cell::new(3, 1.5).is_err());
    }

    #[test]
    fn threshold_zero_keeps_one_footprint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cell = Cell::new(64, 0.0).unwrap();
        for _ in 0..200 {
            cell.learn(&random_binary(&mut rng, 64), &Mask::full(64)).unwrap();
        }
        assert_eq!(cell.footprints().len(), 1);
        assert_eq!(cell.total_count(), 200);
    }

    #[test]
    fn queries_do_not_mutate_and_counts_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cell = Cell::new(16, 0.6).unwrap();
        let mut learned = 0;
        for step in 0..300 {
            let x = random_binary(&mut rng, 16);
            if step % 3 == 0 {
                let before = cell.clone();
                cell.process(&x, &Mask::full(16), false).unwrap();
                assert_eq!(before, cell);
            } else {
                cell.process(&x, &Mask::full(16), true).unwrap();
                learned += 1;
            }
        }
        assert_eq!(cell.total_count(), learned);
    }

    #[test]
    fn recognition_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cell = Cell::new(24, 0.7).unwrap();
        for _ in 0..200 {
            let x = random_binary(&mut rng, 24);
            let out = cell.learn(&x, &Mask::full(24)).unwrap();
            let again = cell.query(&out.projection, &Mask::full(24)).unwrap().unwrap();
            assert_eq!(again.footprint_id, out.footprint_id);
            assert_eq!(again.similarity, 1.0);
        }
    }

    #[test]
    fn from_parts_rejects_bad_state() {
        let fp = |id, count| Footprint::from_parts(id, av(&[0.5, 0.5]), count);
        assert!(Cell::from_parts(2, 0.5, vec![fp(0, 1), fp(1, 2)], 2).is_ok());
        assert!(Cell::from_parts(2, 0.5, vec![fp(0, 0)], 1).is_err());
        assert!(Cell::from_parts(2, 0.5, vec![fp(1, 1), fp(1, 1)], 2).is_err());
        assert!(Cell::from_parts(2, 0.5, vec![fp(3, 1)], 2).is_err());
        assert!(Cell::from_parts(3, 0.5, vec![fp(0, 1)], 1).is_err());
    }
}
