//! Declarative memory: a sliding window over the last `n` frames,
//! concatenated into episodes and clustered.

use std::collections::VecDeque;

use crate::cluster::{Cluster, ClusterPolicy, Trace};
use crate::error::{Error, Result};
use crate::repr::{concat, segment, ActivationVector, Mask, SegmentLayout};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeBuffer {
    capacity: usize,
    frame_dim: usize,
    frames: VecDeque<ActivationVector>,
}

impl EpisodeBuffer {
    pub fn new(capacity: usize, frame_dim: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::arg("episode length must be at least 2"));
        }
        if frame_dim == 0 {
            return Err(Error::arg("frame dimension must be at least 1"));
        }
        Ok(Self {
            capacity,
            frame_dim,
            frames: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frame_dim(&self) -> usize {
        self.frame_dim
    }

    /// Oldest first.
    pub fn frames(&self) -> impl Iterator<Item = &ActivationVector> {
        self.frames.iter()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.frames.len() == self.capacity
    }

    pub fn push(&mut self, frame: ActivationVector) -> Result<()> {
        frame.check_dim(self.frame_dim)?;
        if self.is_full() {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// The buffered frames concatenated, once the window is full.
    pub fn episode(&self) -> Option<ActivationVector> {
        self.is_full()
            .then(|| concat(&self.frames).expect("full buffer is non-empty"))
    }

    pub(crate) fn restore(&mut self, frames: Vec<ActivationVector>) -> Result<()> {
        if frames.len() > self.capacity {
            return Err(Error::invalid("buffer.frames", "more frames than the episode length"));
        }
        self.frames.clear();
        for (i, f) in frames.into_iter().enumerate() {
            if f.len() != self.frame_dim {
                return Err(Error::invalid(format!("buffer.frames[{i}]"), "wrong frame dimension"));
            }
            self.frames.push_back(f);
        }
        Ok(())
    }
}

/// A single cluster over episodes of `n` consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclarativeMemory {
    buffer: EpisodeBuffer,
    cluster: Cluster,
    layout: SegmentLayout,
}

pub fn slot_name(i: usize) -> String {
    format!("slot{i}")
}

impl DeclarativeMemory {
    pub fn new(episode_len: usize, frame_dim: usize, policy: ClusterPolicy) -> Result<Self> {
        let buffer = EpisodeBuffer::new(episode_len, frame_dim)?;
        let layout = SegmentLayout::from_lengths((0..episode_len).map(|i| (slot_name(i), frame_dim)))?;
        let cluster = Cluster::new(layout.total(), policy)?;
        Ok(Self {
            buffer,
            cluster,
            layout,
        })
    }

    pub(crate) fn from_parts(
        episode_len: usize,
        frame_dim: usize,
        cluster: Cluster,
        frames: Vec<ActivationVector>,
    ) -> Result<Self> {
        let mut dm = Self::new(episode_len, frame_dim, *cluster.policy())?;
        if cluster.dim() != dm.layout.total() {
            return Err(Error::invalid("cluster.dim", "must equal episode_len * frame_dim"));
        }
        dm.cluster = cluster;
        dm.buffer.restore(frames)?;
        Ok(dm)
    }

    pub fn episode_len(&self) -> usize {
        self.buffer.capacity()
    }

    pub fn frame_dim(&self) -> usize {
        self.buffer.frame_dim()
    }

    pub fn buffer(&self) -> &EpisodeBuffer {
        &self.buffer
    }

    pub fn cluster(&self) -> &Cluster {
        &self.cluster
    }

    pub fn layout(&self) -> &SegmentLayout {
        &self.layout
    }

    /// Forgets buffered frames; learned episodes are kept.
    pub fn reset_buffer(&mut self) {
        self.buffer.clear();
    }

    /// Pushes `frame`; returns `None` while the window is still filling.
    pub fn observe(&mut self, frame: ActivationVector, learn: bool) -> Result<Option<Trace>> {
        self.buffer.push(frame)?;
        let Some(episode) = self.buffer.episode() else {
            return Ok(None);
        };
        let mask = Mask::full(episode.len());
        self.cluster.process(&episode, &mask, learn).map(Some)
    }

    /// Queries the episode cluster with per-slot frames and masks; `None`
    /// marks a slot as wholly unobserved.
    pub fn recall(&self, slots: &[Option<(&ActivationVector, &Mask)>]) -> Result<Trace> {
        if slots.len() != self.episode_len() {
            return Err(Error::arg(format!(
                "expected {} slots, got {}",
                self.episode_len(),
                slots.len()
            )));
        }
        let f = self.frame_dim();
        let zero = ActivationVector::zeros(f);
        let absent = Mask::absent(f);
        let mut frames = Vec::with_capacity(slots.len());
        let mut masks = Vec::with_capacity(slots.len());
        for (i, slot) in slots.iter().enumerate() {
            let (frame, mask) = slot.unwrap_or((&zero, &absent));
            if frame.len() != f || mask.len() != f {
                return Err(Error::arg(format!("slot {i} has the wrong frame dimension")));
            }
            frames.push(frame);
            masks.push(mask);
        }
        let episode = concat(frames)?;
        let mask = Mask::concat(masks);
        self.cluster.query(&episode, &mask)
    }

    /// Predicts the frame following `recent` (the last `n - 1` frames,
    /// oldest first). Read-only.
    pub fn predict(&self, recent: &[ActivationVector]) -> Result<ActivationVector> {
        let n = self.episode_len();
        if recent.len() != n - 1 {
            return Err(Error::arg(format!(
                "prediction needs {} frames, got {}",
                n - 1,
                recent.len()
            )));
        }
        let full = Mask::full(self.frame_dim());
        let mut slots: Vec<Option<(&ActivationVector, &Mask)>> = recent.iter().map(|f| Some((f, &full))).collect();
        slots.push(None);
        let trace = self.recall(&slots)?;
        let value = trace
            .projection()
            .ok_or_else(|| Error::NoMatch("episode memory is empty".into()))?;
        segment(value, &self.layout, &slot_name(n - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode_categorical, encode_categorical, CategoricalCodecSpec};

    const SPEC: CategoricalCodecSpec = CategoricalCodecSpec {
        symbols: 6,
        block_size: 2,
    };

    fn sym(k: usize) -> ActivationVector {
        encode_categorical(k, &SPEC).unwrap()
    }

    fn decode(v: &ActivationVector) -> usize {
        decode_categorical(v, &SPEC).unwrap().0
    }

    fn strict() -> ClusterPolicy {
        ClusterPolicy::single_cell(0.9)
    }

    #[test]
    fn warm_up_returns_pending() {
        let mut dm = DeclarativeMemory::new(3, SPEC.dim(), strict()).unwrap();
        assert!(dm.observe(sym(0), true).unwrap().is_none());
        assert!(dm.observe(sym(1), true).unwrap().is_none());
        let t = dm.observe(sym(2), true).unwrap().unwrap();
        assert_eq!(t.projection().unwrap().len(), 3 * SPEC.dim());
        for k in 3..8 {
            assert!(dm.observe(sym(k % 6), true).unwrap().is_some());
        }
    }

    #[test]
    fn constant_stream_grows_one_footprint() {
        let mut dm = DeclarativeMemory::new(3, SPEC.dim(), strict()).unwrap();
        for _ in 0..10 {
            dm.observe(sym(4), true).unwrap();
        }
        let seed = dm.cluster().seed();
        assert_eq!(seed.footprints().len(), 1);
        assert_eq!(seed.footprints()[0].count(), 8);
    }

    #[test]
    fn alternating_stream_gives_two_episodes() {
        let mut dm = DeclarativeMemory::new(2, SPEC.dim(), strict()).unwrap();
        for i in 0..20 {
            dm.observe(sym(i % 2), true).unwrap();
        }
        let seed = dm.cluster().seed();
        assert_eq!(seed.footprints().len(), 2);
        assert_eq!(seed.footprints()[0].project(), &concat([&sym(0), &sym(1)]).unwrap());
        assert_eq!(seed.footprints()[1].project(), &concat([&sym(1), &sym(0)]).unwrap());
    }

    #[test]
    fn buffer_keeps_most_recent_frames() {
        let mut buf = EpisodeBuffer::new(3, SPEC.dim()).unwrap();
        for k in 0..5 {
            buf.push(sym(k)).unwrap();
            let held: Vec<usize> = buf.frames().map(decode).collect();
            let lo = (k + 1).saturating_sub(3);
            assert_eq!(held, (lo..=k).collect::<Vec<_>>());
        }
        let episode = buf.episode().unwrap();
        let dm = DeclarativeMemory::new(3, SPEC.dim(), strict()).unwrap();
        for (i, frame) in buf.frames().enumerate() {
            assert_eq!(&segment(&episode, dm.layout(), &slot_name(i)).unwrap(), frame);
        }
    }

    #[test]
    fn cycle_prediction() {
        let mut dm = DeclarativeMemory::new(2, SPEC.dim(), strict()).unwrap();
        for i in 0..12 {
            dm.observe(sym(i % 3), true).unwrap();
        }
        for k in 0..3 {
            assert_eq!(decode(&dm.predict(&[sym(k)]).unwrap()), (k + 1) % 3);
        }
    }

    #[test]
    fn longer_window_disambiguates_context() {
        // (a, x, b) and (c, x, d) with a=0, x=1, b=2, c=3, d=4
        let train = |n: usize| {
            let mut dm = DeclarativeMemory::new(n, SPEC.dim(), strict()).unwrap();
            for seq in [[0, 1, 2], [3, 1, 4]] {
                dm.reset_buffer();
                for k in seq {
                    dm.observe(sym(k), true).unwrap();
                }
            }
            dm
        };
        let short = train(2);
        let p = decode(&short.predict(&[sym(1)]).unwrap());
        assert!(p == 2 || p == 4);

        let long = train(3);
        assert_eq!(decode(&long.predict(&[sym(0), sym(1)]).unwrap()), 2);
        assert_eq!(decode(&long.predict(&[sym(3), sym(1)]).unwrap()), 4);
    }

    #[test]
    fn prediction_is_read_only() {
        let mut dm = DeclarativeMemory::new(2, SPEC.dim(), strict()).unwrap();
        for i in 0..6 {
            dm.observe(sym(i % 3), true).unwrap();
        }
        let before = dm.clone();
        dm.predict(&[sym(0)]).unwrap();
        assert_eq!(before, dm);
    }

    #[test]
    fn prediction_errors() {
        let dm = DeclarativeMemory::new(3, SPEC.dim(), strict()).unwrap();
        assert!(matches!(dm.predict(&[sym(0), sym(1)]), Err(Error::NoMatch(_))));
        assert!(matches!(dm.predict(&[sym(0)]), Err(Error::Argument(_))));
        let short = ActivationVector::zeros(3);
        assert!(matches!(dm.predict(&[sym(0), short]), Err(Error::Argument(_))));
    }

    #[test]
    fn observe_rejects_wrong_dimension() {
        let mut dm = DeclarativeMemory::new(2, SPEC.dim(), strict()).unwrap();
        assert!(matches!(
            dm.observe(ActivationVector::zeros(5), true),
            Err(Error::Dimension { .. })
        ));
        assert!(DeclarativeMemory::new(1, 4, strict()).is_err());
    }
}
