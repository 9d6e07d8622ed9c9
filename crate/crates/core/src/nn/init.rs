use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};

use super::conv::ConvLayer;
use super::network::NetworkParams;

/// Weight distribution; biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Zero-mean Gaussian with `σ = √(2 / (k²·c_in))`.
    He,
    Gaussian { std: f64 },
    /// Zero-mean uniform on `[−a, a]`.
    Uniform { half_width: f64 },
    /// He-scaled Gaussian with a nonzero mean. Only useful as a negative
    /// control for zero-mean arguments.
    ShiftedHe { mean: f64 },
}

impl InitScheme {
    pub fn parse(s: &str) -> Option<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<f64>().ok()?)),
            None => (s, None),
        };
        match (name, arg) {
            ("he", None) => Some(InitScheme::He),
            ("gaussian", Some(std)) => Some(InitScheme::Gaussian { std }),
            ("uniform", Some(half_width)) => Some(InitScheme::Uniform { half_width }),
            ("shifted_he", Some(mean)) => Some(InitScheme::ShiftedHe { mean }),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitScheme::He => "he".into(),
            InitScheme::Gaussian { std } => format!("gaussian:{std}"),
            InitScheme::Uniform { half_width } => format!("uniform:{half_width}"),
            InitScheme::ShiftedHe { mean } => format!("shifted_he:{mean}"),
        }
    }

    pub fn he_std(kernel: usize, in_channels: usize) -> f64 {
        (2.0 / (kernel * kernel * in_channels) as f64).sqrt()
    }
}

/// Shape of one layer before its parameters exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl LayerShape {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self { in_channels, out_channels, kernel }
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel * self.kernel
    }
}

pub fn init_layer(rng: &mut ChaCha8Rng, shape: LayerShape, scheme: InitScheme) -> Result<ConvLayer> {
    let n = shape.weight_count();
    let he = InitScheme::he_std(shape.kernel, shape.in_channels);
    let gauss = |mean: f64, std: f64, rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let d = Normal::new(mean, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok((0..n).map(|_| d.sample(rng)).collect())
    };
    let weights = match scheme {
        InitScheme::He => gauss(0.0, he, rng)?,
        InitScheme::Gaussian { std } if std > 0.0 => gauss(0.0, std, rng)?,
        InitScheme::ShiftedHe { mean } => gauss(mean, he, rng)?,
        InitScheme::Uniform { half_width: a } if a > 0.0 => (0..n).map(|_| rng.random_range(-a..=a)).collect(),
        _ => return invalid(format!("invalid init scheme {scheme:?}")),
    };
    ConvLayer::new(shape.in_channels, shape.out_channels, shape.kernel, weights, vec![0.0; shape.out_channels])
}

/// Seeded, reproducible parameters for a layer chain.
pub fn init_params(shapes: &[LayerShape], input_skip: Option<usize>, scheme: InitScheme, seed: u64) -> Result<NetworkParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = shapes.iter().map(|&s| init_layer(&mut rng, s, scheme)).collect::<Result<Vec<_>>>()?;
    NetworkParams::new(layers, input_skip)
}
