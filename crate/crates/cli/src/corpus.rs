//! Synthetic corpora, generated from a seed.

use fpeng::codec::{encode_categorical, encode_image};
use fpeng::metacluster::{ArchetypeMode, ChannelSpec, NodeSpec};
use fpeng::{
    ActivationVector, CategoricalCodecSpec, ChannelInputs, ClusterPolicy, CodecBinding, ImageCodecSpec,
    MetaclusterSpec, Result,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VISION: &str = "vision";
pub const SOUND: &str = "sound";
pub const MOTOR: &str = "motor";
pub const SENSOR: &str = "sensor";

/// Largest cosine allowed between two generated images.
const MAX_IMAGE_OVERLAP: f64 = 0.7;

fn leaf(name: &str, channel: &str, policy: ClusterPolicy) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        children: vec![channel.into()],
        policy,
    }
}

fn binary_cosine(a: &[u8], b: &[u8]) -> f64 {
    let on = |v: &[u8]| v.iter().filter(|&&p| p > 0).count() as f64;
    let both = a.iter().zip(b).filter(|(&x, &y)| x > 0 && y > 0).count() as f64;
    let norm = (on(a) * on(b)).sqrt();
    if norm == 0.0 {
        1.0
    } else {
        both / norm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorimotorPattern {
    /// 0 or 255 per pixel.
    pub image: Vec<u8>,
    pub sound: usize,
    pub motor: usize,
}

/// K (image, sound) states, each mapped to its own motor symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorimotorCorpus {
    pub image: ImageCodecSpec,
    pub sound: CategoricalCodecSpec,
    pub motor: CategoricalCodecSpec,
    pub patterns: Vec<SensorimotorPattern>,
}

impl SensorimotorCorpus {
    pub fn generate(k: usize, side: usize, block_size: usize, seed: u64) -> Result<Self> {
        let image = ImageCodecSpec::new(side, side, 0.5)?;
        let sound = CategoricalCodecSpec::new(k, block_size)?;
        let motor = CategoricalCodecSpec::new(k, block_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut images: Vec<Vec<u8>> = Vec::with_capacity(k);
        while images.len() < k {
            let candidate: Vec<u8> = (0..image.dim())
                .map(|_| if rng.gen_bool(0.5) { 255 } else { 0 })
                .collect();
            if candidate.iter().all(|&p| p == 0) {
                continue;
            }
            if images
                .iter()
                .all(|img| binary_cosine(img, &candidate) <= MAX_IMAGE_OVERLAP)
            {
                images.push(candidate);
            }
        }
        let mut sounds: Vec<usize> = (0..k).collect();
        sounds.shuffle(&mut rng);
        let mut motors: Vec<usize> = (0..k).collect();
        motors.shuffle(&mut rng);
        let patterns = images
            .into_iter()
            .zip(sounds.into_iter().zip(motors))
            .map(|(image, (sound, motor))| SensorimotorPattern { image, sound, motor })
            .collect();
        Ok(Self {
            image,
            sound,
            motor,
            patterns,
        })
    }

    /// Three leaves under one top node.
    pub fn spec(&self, policy: ClusterPolicy) -> MetaclusterSpec {
        MetaclusterSpec {
            channels: vec![
                ChannelSpec {
                    name: VISION.into(),
                    codec: CodecBinding::Image(self.image),
                },
                ChannelSpec {
                    name: SOUND.into(),
                    codec: CodecBinding::Categorical(self.sound),
                },
                ChannelSpec {
                    name: MOTOR.into(),
                    codec: CodecBinding::Categorical(self.motor),
                },
            ],
            nodes: vec![
                leaf("vision_leaf", VISION, policy),
                leaf("sound_leaf", SOUND, policy),
                leaf("motor_leaf", MOTOR, policy),
                NodeSpec {
                    name: "top".into(),
                    children: vec!["vision_leaf".into(), "sound_leaf".into(), "motor_leaf".into()],
                    policy,
                },
            ],
            archetype_mode: ArchetypeMode::Dense,
        }
    }

    /// Encoded (image, sound) vectors of pattern `i`.
    pub fn sensor_vectors(&self, i: usize) -> Result<(ActivationVector, ActivationVector)> {
        let p = &self.patterns[i];
        Ok((
            encode_image(&p.image, &self.image)?,
            encode_categorical(p.sound, &self.sound)?,
        ))
    }

    pub fn sensors(&self, i: usize) -> Result<ChannelInputs> {
        let (image, sound) = self.sensor_vectors(i)?;
        Ok(ChannelInputs::from([(VISION.into(), image), (SOUND.into(), sound)]))
    }

    pub fn training_inputs(&self, i: usize) -> Result<ChannelInputs> {
        let mut inputs = self.sensors(i)?;
        inputs.insert(MOTOR.into(), encode_categorical(self.patterns[i].motor, &self.motor)?);
        Ok(inputs)
    }

    /// Sensors of pattern `i` with every bit flipped independently with
    /// probability `rate`.
    pub fn noisy_sensors(&self, i: usize, rate: f64, rng: &mut impl Rng) -> Result<ChannelInputs> {
        let (image, sound) = self.sensor_vectors(i)?;
        let mut flip = |v: ActivationVector| {
            let bits = v
                .into_inner()
                .into_iter()
                .map(|b| if rng.gen_bool(rate) { 1.0 - b } else { b })
                .collect();
            ActivationVector::new(bits)
        };
        let image = flip(image)?;
        let sound = flip(sound)?;
        Ok(ChannelInputs::from([(VISION.into(), image), (SOUND.into(), sound)]))
    }
}

/// Two action sequences sharing an ambiguous middle state:
/// `(a, idle) (x, b) (e, idle)` and `(c, idle) (x, d) (e, idle)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicCorpus {
    pub sensor: CategoricalCodecSpec,
    pub motor: CategoricalCodecSpec,
    /// Per context, the `(sensor, motor)` symbol of each step.
    pub sequences: Vec<Vec<(usize, usize)>>,
    /// Step whose motor depends on the context.
    pub probe: usize,
}

impl EpisodicCorpus {
    pub fn generate(block_size: usize, seed: u64) -> Result<Self> {
        let sensor = CategoricalCodecSpec::new(6, block_size)?;
        let motor = CategoricalCodecSpec::new(4, block_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s: Vec<usize> = (0..sensor.symbols).collect();
        s.shuffle(&mut rng);
        let mut m: Vec<usize> = (0..motor.symbols).collect();
        m.shuffle(&mut rng);
        let (a, c, x, e) = (s[0], s[1], s[2], s[3]);
        let (idle, b, d) = (m[0], m[1], m[2]);
        Ok(Self {
            sensor,
            motor,
            sequences: vec![vec![(a, idle), (x, b), (e, idle)], vec![(c, idle), (x, d), (e, idle)]],
            probe: 1,
        })
    }

    pub fn spec(&self, policy: ClusterPolicy) -> MetaclusterSpec {
        MetaclusterSpec {
            channels: vec![
                ChannelSpec {
                    name: SENSOR.into(),
                    codec: CodecBinding::Categorical(self.sensor),
                },
                ChannelSpec {
                    name: MOTOR.into(),
                    codec: CodecBinding::Categorical(self.motor),
                },
            ],
            nodes: vec![
                leaf("sensor_leaf", SENSOR, policy),
                leaf("motor_leaf", MOTOR, policy),
                NodeSpec {
                    name: "top".into(),
                    children: vec!["sensor_leaf".into(), "motor_leaf".into()],
                    policy,
                },
            ],
            archetype_mode: ArchetypeMode::Dense,
        }
    }

    pub fn sensors(&self, symbol: usize) -> Result<ChannelInputs> {
        Ok(ChannelInputs::from([(
            SENSOR.into(),
            encode_categorical(symbol, &self.sensor)?,
        )]))
    }

    pub fn step_inputs(&self, (sensor, motor): (usize, usize)) -> Result<ChannelInputs> {
        let mut inputs = self.sensors(sensor)?;
        inputs.insert(MOTOR.into(), encode_categorical(motor, &self.motor)?);
        Ok(inputs)
    }
}
