//! "Same"-size 2-D cross-correlation via im2col + GEMM.

use crate::error::{shape_err, Error, Result};

use super::tensor::Tensor;

/// One convolutional layer: `weights[c_out][c_in][k][k]`, `bias[c_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl ConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidArgument("layer channel counts must be positive".into()));
        }
        if kernel % 2 == 0 {
            return Err(Error::InvalidArgument(format!("kernel size must be odd, got {kernel}")));
        }
        if weights.len() != out_channels * in_channels * kernel * kernel || bias.len() != out_channels {
            return shape_err(format!(
                "layer {in_channels}->{out_channels} k={kernel} needs {} weights and {out_channels} biases, got {} and {}",
                out_channels * in_channels * kernel * kernel,
                weights.len(),
                bias.len()
            ));
        }
        if let Some(index) = weights.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { in_channels, out_channels, kernel, weights, bias })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Result<Self> {
        Self::new(
            in_channels,
            out_channels,
            kernel,
            vec![0.0; out_channels * in_channels * kernel * kernel],
            vec![0.0; out_channels],
        )
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_channels + i) * self.kernel + ky) * self.kernel + kx]
    }

    /// Length of one im2col column: `c_in · k²`.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// `c = a·b + beta·c` for row-major `a: m×k`, `b: k×n`; `*_t` reads the
/// operand as stored transposed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above guarantee every index the strides reach is in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Unfolds zero-padded `k×k` neighbourhoods: row `(c·k + ky)·k + kx`,
/// column `y·w + x` holds `input[c][y + ky − r][x + kx − r]`.
pub(crate) fn im2col(input: &Tensor, k: usize) -> Vec<f64> {
    let (c_in, h, w) = input.shape();
    let hw = h * w;
    let r = (k / 2) as isize;
    let mut cols = vec![0.0; c_in * k * k * hw];
    for c in 0..c_in {
        let src = input.channel(c);
        for ky in 0..k {
            let dy = ky as isize - r;
            for kx in 0..k {
                let dx = kx as isize - r;
                let row = &mut cols[((c * k + ky) * k + kx) * hw..][..hw];
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                if x_lo >= x_hi {
                    continue;
                }
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let s0 = sy as usize * w;
                    let dst = &mut row[y * w + x_lo..y * w + x_hi];
                    let from = (s0 as isize + x_lo as isize + dx) as usize;
                    dst.copy_from_slice(&src[from..from + (x_hi - x_lo)]);
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters columns back, summing overlaps.
pub(crate) fn col2im(cols: &[f64], c_in: usize, h: usize, w: usize, k: usize) -> Tensor {
    let hw = h * w;
    let r = (k / 2) as isize;
    let mut out = Tensor::zeros(c_in, h, w);
    for c in 0..c_in {
        let dst = out.channel_mut(c);
        for ky in 0..k {
            let dy = ky as isize - r;
            for kx in 0..k {
                let dx = kx as isize - r;
                let row = &cols[((c * k + ky) * k + kx) * hw..][..hw];
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                if x_lo >= x_hi {
                    continue;
                }
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let from = (sy as usize * w) as isize + x_lo as isize + dx;
                    let d = &mut dst[from as usize..from as usize + (x_hi - x_lo)];
                    d.iter_mut().zip(&row[y * w + x_lo..y * w + x_hi]).for_each(|(a, b)| *a += b);
                }
            }
        }
    }
    out
}

fn columns<'a>(input: &'a Tensor, k: usize, buf: &'a mut Vec<f64>) -> &'a [f64] {
    if k == 1 {
        input.data()
    } else {
        *buf = im2col(input, k);
        buf
    }
}

/// Zero-padded "same" cross-correlation plus bias.
pub fn conv2d_forward(input: &Tensor, layer: &ConvLayer) -> Result<Tensor> {
    if input.channels() != layer.in_channels {
        return shape_err(format!(
            "layer expects {} input channels, got {}",
            layer.in_channels,
            input.channels()
        ));
    }
    let (h, w) = (input.height(), input.width());
    let hw = h * w;
    let mut out = Tensor::zeros(layer.out_channels, h, w);
    for (o, &b) in layer.bias.iter().enumerate() {
        out.channel_mut(o).fill(b);
    }
    let mut buf = Vec::new();
    let cols = columns(input, layer.kernel, &mut buf);
    gemm(layer.out_channels, layer.patch_len(), hw, &layer.weights, false, cols, false, 1.0, out.data_mut());
    Ok(out)
}

/// Element-wise `max(0, z)`.
pub fn relu(z: &Tensor) -> Tensor {
    let mut a = z.clone();
    a.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    a
}

/// Accumulates `∂ℓ/∂W += δ·colsᵀ`, `∂ℓ/∂B += Σ δ`; returns `∂ℓ/∂input` when asked.
pub(crate) fn conv2d_backward(
    input: &Tensor,
    layer: &ConvLayer,
    delta: &Tensor,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    want_input_grad: bool,
) -> Option<Tensor> {
    let (h, w) = (input.height(), input.width());
    let hw = h * w;
    let mut buf = Vec::new();
    let cols = columns(input, layer.kernel, &mut buf);
    gemm(layer.out_channels, hw, layer.patch_len(), delta.data(), false, cols, true, 1.0, grad_w);
    for (o, g) in grad_b.iter_mut().enumerate() {
        *g += delta.channel(o).iter().sum::<f64>();
    }
    if !want_input_grad {
        return None;
    }
    let mut dcols = vec![0.0; layer.patch_len() * hw];
    gemm(layer.patch_len(), layer.out_channels, hw, &layer.weights, true, delta.data(), false, 0.0, &mut dcols);
    if layer.kernel == 1 {
        Some(Tensor::from_vec(layer.in_channels, h, w, dcols).expect("sized above"))
    } else {
        Some(col2im(&dcols, layer.in_channels, h, w, layer.kernel))
    }
}
