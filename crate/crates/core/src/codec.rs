//! Encoders from raw signals into activation vectors, and decoders back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::ActivationVector;

/// Row-major 8-bit grayscale images thresholded into binary vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageCodecSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_image_threshold")]
    pub threshold: f64,
}

fn default_image_threshold() -> f64 {
    0.5
}

impl ImageCodecSpec {
    pub fn new(width: usize, height: usize, threshold: f64) -> Result<Self> {
        let spec = Self {
            width,
            height,
            threshold,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::arg("image codec needs a non-empty image"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::arg(format!("image threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// `symbols` one-hot blocks of `block_size` bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalCodecSpec {
    pub symbols: usize,
    pub block_size: usize,
}

impl CategoricalCodecSpec {
    pub fn new(symbols: usize, block_size: usize) -> Result<Self> {
        let spec = Self { symbols, block_size };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.symbols * self.block_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbols < 2 {
            return Err(Error::arg("categorical codec needs at least two symbols"));
        }
        if self.block_size == 0 {
            return Err(Error::arg("categorical block size must be at least one"));
        }
        Ok(())
    }
}

/// How a metacluster channel talks to the embodiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecBinding {
    Image(ImageCodecSpec),
    Categorical(CategoricalCodecSpec),
    /// Vectors supplied directly, no codec.
    Raw {
        dim: usize,
    },
}

impl CodecBinding {
    pub fn dim(&self) -> usize {
        match self {
            CodecBinding::Image(s) => s.dim(),
            CodecBinding::Categorical(s) => s.dim(),
            CodecBinding::Raw { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CodecBinding::Image(s) => s.validate(),
            CodecBinding::Categorical(s) => s.validate(),
            CodecBinding::Raw { dim: 0 } => Err(Error::arg("raw channel needs a dimension")),
            CodecBinding::Raw { .. } => Ok(()),
        }
    }
}

pub fn encode_image(pixels: &[u8], spec: &ImageCodecSpec) -> Result<ActivationVector> {
    if pixels.len() != spec.dim() {
        return Err(Error::dim(spec.dim(), pixels.len()));
    }
    let bits = pixels
        .iter()
        .map(|&p| {
            if f64::from(p) / 255.0 >= spec.threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(ActivationVector::from_unchecked(bits))
}

/// Scales activations to bytes, rounding half up.
pub fn decode_image(v: &ActivationVector, spec: &ImageCodecSpec) -> Result<Vec<u8>> {
    v.check_dim(spec.dim())?;
    Ok(v.as_slice().iter().map(|&x| to_byte(x)).collect())
}

pub(crate) fn to_byte(x: f64) -> u8 {
    (x * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_categorical(symbol: usize, spec: &CategoricalCodecSpec) -> Result<ActivationVector> {
    if symbol >= spec.symbols {
        return Err(Error::arg(format!(
            "symbol {symbol} out of range for {} symbols",
            spec.symbols
        )));
    }
    let mut bits = vec![0.0; spec.dim()];
    bits[symbol * spec.block_size..(symbol + 1) * spec.block_size].fill(1.0);
    Ok(ActivationVector::from_unchecked(bits))
}

/// Symbol whose block has the highest mean activation (lowest index on ties),
/// and that mean as the confidence.
pub fn decode_categorical(v: &ActivationVector, spec: &CategoricalCodecSpec) -> Result<(usize, f64)> {
    v.check_dim(spec.dim())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (symbol, block) in v.as_slice().chunks(spec.block_size).enumerate() {
        let mean = block.iter().sum::<f64>() / spec.block_size as f64;
        if mean > best.1 {
            best = (symbol, mean);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{similarity, Mask};

    fn av(v: &[f64]) -> ActivationVector {
        ActivationVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn image_encode_examples() {
        let spec = ImageCodecSpec::new(2, 2, 0.5).unwrap();
        assert_eq!(encode_image(&[0, 255, 128, 0], &spec).unwrap(), av(&[0., 1., 1., 0.]));
        assert_eq!(encode_image(&[0; 4], &spec).unwrap(), av(&[0.; 4]));
        assert!(matches!(encode_image(&[0; 3], &spec), Err(Error::Dimension { .. })));
    }

    #[test]
    fn image_decode_examples() {
        let spec = ImageCodecSpec::new(2, 2, 0.5).unwrap();
        assert_eq!(
            decode_image(&av(&[0., 1., 0.5, 0.25]), &spec).unwrap(),
            vec![0, 255, 128, 64]
        );
        assert_eq!(decode_image(&av(&[0.; 4]), &spec).unwrap(), vec![0; 4]);
        assert!(decode_image(&av(&[0.; 3]), &spec).is_err());
    }

    #[test]
    fn binary_decode_then_encode_is_identity() {
        let spec = ImageCodecSpec::new(3, 2, 0.5).unwrap();
        let v = av(&[1., 0., 0., 1., 1., 0.]);
        let img = decode_image(&v, &spec).unwrap();
        assert_eq!(img, vec![255, 0, 0, 255, 255, 0]);
        assert_eq!(encode_image(&img, &spec).unwrap(), v);
    }

    #[test]
    fn spec_validation() {
        assert!(ImageCodecSpec::new(0, 4, 0.5).is_err());
        assert!(ImageCodecSpec::new(2, 2, 1.2).is_err());
        assert!(CategoricalCodecSpec::new(1, 4).is_err());
        assert!(CategoricalCodecSpec::new(3, 0).is_err());
    }

    #[test]
    fn categorical_examples() {
        let spec = CategoricalCodecSpec::new(3, 2).unwrap();
        assert_eq!(encode_categorical(0, &spec).unwrap(), av(&[1., 1., 0., 0., 0., 0.]));
        assert_eq!(encode_categorical(2, &spec).unwrap(), av(&[0., 0., 0., 0., 1., 1.]));
        assert!(matches!(encode_categorical(3, &spec), Err(Error::Argument(_))));

        let a = encode_categorical(0, &spec).unwrap();
        let b = encode_categorical(1, &spec).unwrap();
        assert_eq!(similarity(&a, &b, &Mask::full(6)).unwrap(), 0.0);
    }

    #[test]
    fn categorical_decode_examples() {
        let spec = CategoricalCodecSpec::new(5, 3).unwrap();
        for k in 0..5 {
            let v = encode_categorical(k, &spec).unwrap();
            assert_eq!(v.active_count(), 3);
            assert_eq!(decode_categorical(&v, &spec).unwrap(), (k, 1.0));
        }
        let two = CategoricalCodecSpec::new(2, 2).unwrap();
        let (sym, conf) = decode_categorical(&av(&[0.2, 0.2, 0.9, 0.9]), &two).unwrap();
        assert_eq!(sym, 1);
        assert!((conf - 0.9).abs() < 1e-12);
        assert_eq!(decode_categorical(&av(&[0.; 4]), &two).unwrap(), (0, 0.0));
        assert!(decode_categorical(&av(&[0.; 3]), &two).is_err());
    }
}
