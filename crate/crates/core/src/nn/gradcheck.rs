//! Central finite-difference check of every parameter gradient.
//!
//! The loss is piecewise quadratic in any single parameter, so
//! `(L(θ+h) − L(θ−h)) / 2h` is exact wherever both evaluations share one
//! activation pattern. What limits it in floating point is forming
//! `L(θ±h)` from full-size values: each perturbed activation carries rounding
//! of order `ε·|Z|`, i.e. `ε/h` relative to the change being measured, and a
//! gradient that is the small remainder of many cancelling terms is then lost.
//! The two evaluations are therefore carried as exact perturbations of the
//! cached forward trace — the changed channel of `Z_l`, each ReLU evaluated at
//! the perturbed point, then every later layer — and the loss difference is
//! summed as `Σ (Δ⁺ − Δ⁻)(2r + Δ⁺ + Δ⁻)` with compensated summation.
//! When no ReLU input lies within the step of zero, `Δ⁻` is the exact
//! negation of `Δ⁺` and is formed that way rather than propagated again.
//!
//! A ReLU whose input changes sign between the `+h` and `−h` evaluations makes
//! the difference quotient straddle a kink; the step is then shrunk (÷10, at
//! most four times) until both evaluations share one activation pattern.

use crate::error::Result;

use super::conv::{conv2d_forward, ConvLayer};
use super::network::{forward, Activation, LayerTrace, LossKind, NetworkParams};
use super::patches::PatchBatch;
use super::tensor::Tensor;
use super::train::batch_gradients;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSlot {
    Weight(usize),
    Bias(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradMismatch {
    pub layer: usize,
    pub slot: ParamSlot,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    pub worst: Option<GradMismatch>,
    /// Parameters whose step had to shrink to avoid a ReLU kink.
    pub step_reductions: usize,
    /// Parameters whose every step still straddled a kink.
    pub unresolved_kinks: usize,
}

/// `|a − n| / max(|a|, |n|)`, zero when both vanish.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}

fn shifted_add(dst: &mut [f64], src: &[f64], h: usize, w: usize, dy: isize, dx: isize, scale: f64) {
    // dst[y][x] += scale · src[y + dy][x + dx] (zero outside)
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
    if x0 >= x1 {
        return;
    }
    for y in 0..h {
        let sy = y as isize + dy;
        if sy < 0 || sy >= h as isize {
            continue;
        }
        let s0 = sy as usize * w + (x0 as isize + dx) as usize;
        let d = &mut dst[y * w + x0..y * w + x1];
        for (d, s) in d.iter_mut().zip(&src[s0..s0 + (x1 - x0)]) {
            *d += scale * s;
        }
    }
}

/// `relu(z + d) − relu(z)`, exact unless the sign flips.
fn relu_change(z: f64, d: f64) -> f64 {
    let zp = z + d;
    match (z > 0.0, zp > 0.0) {
        (true, true) => d,
        (false, false) => 0.0,
        _ => zp.max(0.0) - z.max(0.0),
    }
}

/// Change of `A_l` given a change `dz` of `Z_l`; records the ReLU pattern at
/// the perturbed point. Returns false if some unit would switch under `+dz`
/// or `−dz`.
fn activation_change(act: Activation, z: &[f64], dz: &mut [f64], signature: &mut Vec<bool>) -> bool {
    let mut stable = true;
    if act == Activation::Relu {
        for (d, &z) in dz.iter_mut().zip(z) {
            let on = z > 0.0;
            stable &= (z + *d > 0.0) == on && (z - *d > 0.0) == on;
            signature.push(z + *d > 0.0);
            *d = relu_change(z, *d);
        }
    }
    // A = Z + X and the output layer pass changes through unchanged.
    stable
}

/// Bias-free copies: convolving a change gives the change of the output.
fn linear_parts(params: &NetworkParams) -> Result<Vec<ConvLayer>> {
    (0..params.depth())
        .map(|l| {
            let c = params.layer(l);
            ConvLayer::new(c.in_channels(), c.out_channels(), c.kernel(), c.weights().to_vec(), vec![0.0; c.out_channels()])
        })
        .collect()
}

struct Perturbation {
    output: Tensor,
    signature: Vec<bool>,
    /// No unit switches under either sign of the step, so the `−step`
    /// perturbation is exactly the negation of this one.
    stable: bool,
}

/// Change of the network output, and the activation pattern, after
/// perturbing one parameter by `step`.
fn perturbed(
    params: &NetworkParams,
    linear: &[ConvLayer],
    trace: &LayerTrace,
    l: usize,
    slot: ParamSlot,
    step: f64,
) -> Result<Perturbation> {
    let layer = params.layer(l);
    let (h, w) = (trace.input.height(), trace.input.width());
    let k = layer.kernel();
    let r = (k / 2) as isize;
    let mut dz = vec![0.0; h * w];
    let o = match slot {
        ParamSlot::Weight(idx) => {
            let kx = idx % k;
            let ky = (idx / k) % k;
            let i = (idx / (k * k)) % layer.in_channels();
            let o = idx / (k * k * layer.in_channels());
            shifted_add(&mut dz, trace.layer_input(l).channel(i), h, w, ky as isize - r, kx as isize - r, step);
            o
        }
        ParamSlot::Bias(o) => {
            dz.fill(step);
            o
        }
    };
    let mut signature = Vec::new();
    if l + 1 == params.depth() {
        let mut out = Tensor::zeros(layer.out_channels(), h, w);
        out.channel_mut(o).copy_from_slice(&dz);
        return Ok(Perturbation { output: out, signature, stable: true });
    }
    let mut stable = activation_change(params.activation(l), trace.pre_activations[l].channel(o), &mut dz, &mut signature);

    // Layer l+1 sees a change in channel `o` only.
    let next = params.layer(l + 1);
    let kn = next.kernel();
    let rn = (kn / 2) as isize;
    let mut dz_next = Tensor::zeros(next.out_channels(), h, w);
    for c in 0..next.out_channels() {
        for ky in 0..kn {
            for kx in 0..kn {
                let wgt = next.weight(c, o, ky, kx);
                if wgt != 0.0 {
                    shifted_add(dz_next.channel_mut(c), &dz, h, w, ky as isize - rn, kx as isize - rn, wgt);
                }
            }
        }
    }
    let mut dz = dz_next;
    for m in l + 1..params.depth() - 1 {
        stable &= activation_change(params.activation(m), trace.pre_activations[m].data(), dz.data_mut(), &mut signature);
        dz = conv2d_forward(&dz, &linear[m + 1])?;
    }
    Ok(Perturbation { output: dz, signature, stable })
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compares backprop against central differences for every weight and bias.
pub fn central_difference_check(params: &NetworkParams, kind: LossKind, batch: &PatchBatch, step: f64) -> Result<GradCheckReport> {
    let (_, grads) = batch_gradients(params, kind, batch, 0)?;
    let traces = batch.items().iter().map(|p| forward(params, &p.input).map(|t| t.1)).collect::<Result<Vec<_>>>()?;
    // Base-point residuals; the residual is `Z` plus terms that do not depend on θ.
    let residuals: Vec<Vec<f64>> = batch
        .items()
        .iter()
        .zip(&traces)
        .map(|(item, t)| {
            let aux = item.skip.as_ref().map(|s| s.data());
            t.output()
                .data()
                .iter()
                .zip(item.target.data())
                .enumerate()
                .map(|(e, (&z, &y))| kind.residual(z, aux.map_or(0.0, |a| a[e]), y))
                .collect()
        })
        .collect();
    let linear = linear_parts(params)?;
    let n_p = batch.len() as f64;
    let mut report = GradCheckReport { checked: 0, max_relative_error: 0.0, worst: None, step_reductions: 0, unresolved_kinks: 0 };

    for l in 0..params.depth() {
        let slots = (0..params.layer(l).weights().len())
            .map(ParamSlot::Weight)
            .chain((0..params.layer(l).out_channels()).map(ParamSlot::Bias));
        for slot in slots {
            let analytic = match slot {
                ParamSlot::Weight(i) => grads.weights[l][i],
                ParamSlot::Bias(i) => grads.biases[l][i],
            };
            let mut h = step;
            let mut numeric = 0.0;
            for attempt in 0..5 {
                let mut kink = false;
                let mut acc = CompensatedSum::default();
                for (trace, r) in traces.iter().zip(&residuals) {
                    let plus = perturbed(params, &linear, trace, l, slot, h)?;
                    // Rounding is symmetric under negation, so a stable
                    // perturbation's mirror image is exact.
                    let (dm, sm) = if plus.stable {
                        let mut neg = plus.output.clone();
                        neg.data_mut().iter_mut().for_each(|v| *v = -*v);
                        (neg, plus.signature.clone())
                    } else {
                        let m = perturbed(params, &linear, trace, l, slot, -h)?;
                        (m.output, m.signature)
                    };
                    kink |= plus.signature != sm;
                    for ((&p, &m), &r) in plus.output.data().iter().zip(dm.data()).zip(r) {
                        // (r + p)² − (r + m)²
                        acc.add((p - m) * (2.0 * r + p + m));
                    }
                }
                numeric = acc.value() / (n_p * 2.0 * h);
                if !kink {
                    if attempt > 0 {
                        report.step_reductions += 1;
                    }
                    break;
                }
                if attempt == 4 {
                    report.unresolved_kinks += 1;
                }
                h /= 10.0;
            }
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some(GradMismatch { layer: l, slot, analytic, numeric, relative_error: err });
            }
        }
    }
    Ok(report)
}
