use crate::error::{shape_err, Result};
use crate::raster::{RasterBand, MsImage, PanImage};

/// Planar `channels × height × width` array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return shape_err(format!(
                "tensor {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            ));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn from_fn(channels: usize, height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self { channels, height, width, data }
    }

    /// Stacks equally sized bands as channels.
    pub fn from_bands(bands: &[RasterBand]) -> Result<Self> {
        let Some(first) = bands.first() else {
            return shape_err("cannot build a tensor from zero bands");
        };
        let (h, w) = first.dims();
        let mut data = Vec::with_capacity(bands.len() * h * w);
        for b in bands {
            if b.dims() != (h, w) {
                return shape_err(format!("band {:?} differs from {:?}", b.dims(), (h, w)));
            }
            data.extend_from_slice(b.values());
        }
        Ok(Self { channels: bands.len(), height: h, width: w, data })
    }

    pub fn from_ms(img: &MsImage) -> Self {
        Self::from_bands(img.bands()).expect("MS bands share dimensions")
    }

    pub fn from_pan(pan: &PanImage) -> Self {
        Self::from_bands(std::slice::from_ref(pan.band())).expect("single band")
    }

    pub fn to_bands(&self) -> Result<Vec<RasterBand>> {
        (0..self.channels).map(|c| RasterBand::new(self.height, self.width, self.channel(c).to_vec())).collect()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Channel-wise concatenation.
    pub fn concat(&self, other: &Tensor) -> Result<Tensor> {
        if (self.height, self.width) != (other.height, other.width) {
            return shape_err("concatenated tensors must share spatial size");
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Tensor { channels: self.channels + other.channels, height: self.height, width: self.width, data })
    }

    /// Spatial window at `(row, col)` of all channels.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Tensor> {
        if row + height > self.height || col + width > self.width {
            return shape_err(format!(
                "window {height}x{width} at ({row},{col}) exceeds {}x{}",
                self.height, self.width
            ));
        }
        let mut data = Vec::with_capacity(self.channels * height * width);
        for c in 0..self.channels {
            for y in row..row + height {
                let start = (c * self.height + y) * self.width + col;
                data.extend_from_slice(&self.data[start..start + width]);
            }
        }
        Ok(Tensor { channels: self.channels, height, width, data })
    }

    pub fn check_same_shape(&self, other: &Tensor, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return shape_err(format!("{what}: shape {:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor { data, ..self.empty_like() })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Tensor { data, ..self.empty_like() })
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    fn empty_like(&self) -> Tensor {
        Tensor { channels: self.channels, height: self.height, width: self.width, data: Vec::new() }
    }
}
