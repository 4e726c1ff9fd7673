//! Activation vectors, masks, segment layouts and masked cosine similarity.
//!
//! Everything that flows between levels of the engine is an
//! [`ActivationVector`]: a dense vector with every component in `[0, 1]`.
//! Binary vectors are the sparse distributed representations produced by the
//! encoders; dense ones come out of footprint averaging.

use crate::error::{Error, Result};

/// Dense activation vector, components in `[0, 1]`, length at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationVector(Vec<f64>);

impl ActivationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("activation vector must have at least one dimension"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::arg(format!("activation {v} at index {i} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    /// All-zero vector of dimension `dim`.
    ///
    /// # Panics
    /// If `dim` is zero.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "activation vector must have at least one dimension");
        Self(vec![0.0; dim])
    }

    /// Builds a vector from values the caller guarantees are in range.
    pub(crate) fn from_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Number of components strictly above zero.
    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0.0).count()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.len() == expected {
            Ok(())
        } else {
            Err(Error::dim(expected, self.len()))
        }
    }
}

impl std::ops::Index<usize> for ActivationVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ActivationVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Which dimensions of a vector were actually observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn new(present: Vec<bool>) -> Self {
        Self(present)
    }

    /// Every dimension observed; the identity for masked operations.
    pub fn full(dim: usize) -> Self {
        Self(vec![true; dim])
    }

    /// No dimension observed.
    pub fn absent(dim: usize) -> Self {
        Self(vec![false; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn any_present(&self) -> bool {
        self.0.iter().any(|&p| p)
    }

    pub fn all_present(&self) -> bool {
        self.0.iter().all(|&p| p)
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Mask>) -> Mask {
        Mask(parts.into_iter().flat_map(|m| m.0.iter().copied()).collect())
    }

    /// Marks `[offset, offset + len)` absent.
    pub fn clear_range(&mut self, offset: usize, len: usize) {
        self.0[offset..offset + len].fill(false);
    }
}

/// One named contiguous slice of a concatenated vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Where each part lives inside a concatenation. Segments are contiguous,
/// non-overlapping and cover `[0, total)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLayout {
    segments: Vec<Segment>,
    total: usize,
}

impl SegmentLayout {
    /// Lays out the named parts back to back, in order.
    pub fn from_lengths<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut segments: Vec<Segment> = Vec::new();
        let mut offset = 0;
        for (name, len) in parts {
            let name = name.into();
            if len == 0 {
                return Err(Error::arg(format!("segment `{name}` has zero length")));
            }
            if segments.iter().any(|s| s.name == name) {
                return Err(Error::arg(format!("duplicate segment name `{name}`")));
            }
            segments.push(Segment { name, offset, len });
            offset += len;
        }
        if segments.is_empty() {
            return Err(Error::arg("layout needs at least one segment"));
        }
        Ok(Self {
            segments,
            total: offset,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, name: &str) -> Result<&Segment> {
        self.segments
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::lookup("segment", name))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }
}

/// Masked cosine similarity.
///
/// Absent dimensions are ignored. Two all-zero restrictions are identical
/// (1.0); exactly one all-zero restriction is maximally dissimilar (0.0).
pub fn similarity(a: &ActivationVector, b: &ActivationVector, mask: &Mask) -> Result<f64> {
    b.check_dim(a.len())?;
    if mask.len() != a.len() {
        return Err(Error::dim(a.len(), mask.len()));
    }
    let (mut dot, mut norm_a, mut norm_b) = (0.0, 0.0, 0.0);
    for ((&x, &y), &present) in a.0.iter().zip(&b.0).zip(&mask.0) {
        if present {
            dot += x * y;
            norm_a += x * x;
            norm_b += y * y;
        }
    }
    Ok(match (norm_a == 0.0, norm_b == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        // sqrt of the product keeps self-similarity exactly 1.0
        _ => (dot / (norm_a * norm_b).sqrt()).clamp(0.0, 1.0),
    })
}

pub fn concat<'a>(parts: impl IntoIterator<Item = &'a ActivationVector>) -> Result<ActivationVector> {
    let values: Vec<f64> = parts.into_iter().flat_map(|p| p.0.iter().copied()).collect();
    if values.is_empty() {
        return Err(Error::arg("concat of an empty list"));
    }
    Ok(ActivationVector(values))
}

/// The named slice of `v` under `layout`; the inverse of [`concat`].
pub fn segment(v: &ActivationVector, layout: &SegmentLayout, name: &str) -> Result<ActivationVector> {
    v.check_dim(layout.total())?;
    let seg = layout.get(name)?;
    Ok(ActivationVector(v.0[seg.range()].to_vec()))
}

pub fn binarize(v: &ActivationVector, tau: f64) -> Result<ActivationVector> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::arg(format!("binarization threshold {tau} outside [0, 1]")));
    }
    Ok(ActivationVector(
        v.0.iter().map(|&x| if x >= tau { 1.0 } else { 0.0 }).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn av(v: &[f64]) -> ActivationVector {
        ActivationVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let full = Mask::full(4);
        assert_eq!(
            similarity(&av(&[1., 0., 1., 0.]), &av(&[1., 0., 1., 0.]), &full).unwrap(),
            1.0
        );
        assert_eq!(
            similarity(&av(&[1., 0., 0., 0.]), &av(&[0., 0., 1., 0.]), &full).unwrap(),
            0.0
        );
        let s = similarity(&av(&[1., 1., 0., 0.]), &av(&[1., 0., 0., 0.]), &full).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let front = Mask::new(vec![true, true, false, false]);
        assert_eq!(
            similarity(&av(&[1., 1., 0., 1.]), &av(&[1., 1., 0., 0.]), &front).unwrap(),
            1.0
        );
    }

    #[test]
    fn zero_vector_conventions() {
        let full = Mask::full(2);
        assert_eq!(similarity(&av(&[0., 0.]), &av(&[0., 0.]), &full).unwrap(), 1.0);
        assert_eq!(similarity(&av(&[0., 0.]), &av(&[0., 1.]), &full).unwrap(), 0.0);
        assert_eq!(
            similarity(&av(&[1., 0.]), &av(&[0., 1.]), &Mask::absent(2)).unwrap(),
            1.0
        );
    }

    #[test]
    fn similarity_rejects_length_mismatch() {
        let err = similarity(&av(&[1.]), &av(&[1., 0.]), &Mask::full(1)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
        let err = similarity(&av(&[1., 0.]), &av(&[1., 0.]), &Mask::full(3)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn vector_range_is_enforced() {
        assert!(ActivationVector::new(vec![]).is_err());
        assert!(ActivationVector::new(vec![1.5]).is_err());
        assert!(ActivationVector::new(vec![-0.1]).is_err());
        assert!(ActivationVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat([&av(&[1., 0.]), &av(&[0., 1.])]).unwrap(), av(&[1., 0., 0., 1.]));
        assert_eq!(concat([&av(&[0.5])]).unwrap(), av(&[0.5]));
        assert_eq!(concat([&av(&[1.]), &av(&[0.]), &av(&[1.])]).unwrap(), av(&[1., 0., 1.]));
        assert!(matches!(concat(std::iter::empty()), Err(Error::Argument(_))));
    }

    #[test]
    fn segment_examples() {
        let layout = SegmentLayout::from_lengths([("a", 2), ("b", 2)]).unwrap();
        assert_eq!(segment(&av(&[1., 0., 0., 1.]), &layout, "b").unwrap(), av(&[0., 1.]));
        let single = SegmentLayout::from_lengths([("x", 2)]).unwrap();
        assert_eq!(segment(&av(&[0.25, 0.75]), &single, "x").unwrap(), av(&[0.25, 0.75]));
        assert!(matches!(
            segment(&av(&[1., 0., 0., 1.]), &layout, "c"),
            Err(Error::Lookup { .. })
        ));
        assert!(matches!(
            segment(&av(&[1., 0.]), &layout, "a"),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn layout_rejects_duplicates_and_empty_segments() {
        assert!(SegmentLayout::from_lengths([("a", 1), ("a", 1)]).is_err());
        assert!(SegmentLayout::from_lengths([("a", 0)]).is_err());
        assert!(SegmentLayout::from_lengths(Vec::<(String, usize)>::new()).is_err());
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(binarize(&av(&[0.2, 0.8]), 0.5).unwrap(), av(&[0., 1.]));
        assert_eq!(binarize(&av(&[0.5]), 0.5).unwrap(), av(&[1.]));
        let bin = av(&[1., 0., 1.]);
        assert_eq!(binarize(&bin, 0.5).unwrap(), bin);
        assert!(binarize(&bin, 1.5).is_err());
        assert!(binarize(&bin, -0.5).is_err());
    }

    fn unit_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, dim)
    }

    proptest! {
        #[test]
        fn similarity_symmetric_and_bounded(
            (a, b, m) in (1usize..24).prop_flat_map(|d| (unit_vec(d), unit_vec(d), prop::collection::vec(any::<bool>(), d)))
        ) {
            let (a, b, m) = (av(&a), av(&b), Mask::new(m));
            let ab = similarity(&a, &b, &m).unwrap();
            let ba = similarity(&b, &a, &m).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn self_similarity_is_one(v in (1usize..32).prop_flat_map(unit_vec)) {
            let v = av(&v);
            if v.active_count() > 0 {
                prop_assert_eq!(similarity(&v, &v, &Mask::full(v.len())).unwrap(), 1.0);
            }
        }

        #[test]
        fn binary_self_similarity_under_any_mask(
            (bits, m) in (1usize..32).prop_flat_map(|d| (prop::collection::vec(any::<bool>(), d), prop::collection::vec(any::<bool>(), d)))
        ) {
            let v = av(&bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>());
            prop_assert_eq!(similarity(&v, &v, &Mask::new(m)).unwrap(), 1.0);
        }
    }

    #[test]
    fn concat_segment_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (lp, lq) = (rng.gen_range(1..16), rng.gen_range(1..16));
            let p = av(&(0..lp).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
            let q = av(&(0..lq).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
            let layout = SegmentLayout::from_lengths([("a", lp), ("b", lq)]).unwrap();
            let joined = concat([&p, &q]).unwrap();
            assert_eq!(segment(&joined, &layout, "a").unwrap(), p);
            assert_eq!(segment(&joined, &layout, "b").unwrap(), q);
        }
    }
}
