//! Empirical checks of the initialization argument for detail learning.
//!
//! Expectations are sample means: over patches for image statistics, over
//! seeded initializations for network statistics. Stochastic assertions use
//! 4σ Monte-Carlo bounds.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arch::{ArchKind, ArchSpec};
use crate::error::{invalid, shape_err, Result};
use crate::nn::{
    backward, forward, forward_output, init_params, loss_and_output_grad, Activation, Gradients, InitScheme, LossKind,
    NetworkParams, PatchBatch, PatchSource, Tensor,
};
use crate::resample::WaldTriple;
use crate::MsImage;

/// Published trace values `(T1, T2)` for the three satellite datasets. These
/// need the original imagery and are kept for reference only.
pub const PUBLISHED_TRACES: [(&str, f64, f64); 3] =
    [("IKONOS", 203.8785, 2.9), ("Quickbird", 108.138, 1.1619), ("WorldView-2", 607.1628, 20.2275)];

/// A row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// `H × W × C` → `H × (W·C)`, columns band-major within a row: entry
/// `(y, c·W + x)` holds sample `(c, y, x)`.
pub fn mode1_unfold(t: &Tensor) -> Matrix {
    let (c, h, w) = t.shape();
    let mut data = Vec::with_capacity(c * h * w);
    for y in 0..h {
        for b in 0..c {
            data.extend_from_slice(&t.channel(b)[y * w..(y + 1) * w]);
        }
    }
    Matrix { rows: h, cols: w * c, data }
}

/// Inverse of [`mode1_unfold`].
pub fn mode1_refold(m: &Matrix, channels: usize) -> Result<Tensor> {
    if channels == 0 || m.cols % channels != 0 {
        return invalid(format!("{} columns do not split into {channels} bands", m.cols));
    }
    let w = m.cols / channels;
    Tensor::from_vec(channels, m.rows, w, (0..channels * m.rows * w).map(|i| {
        let (b, y, x) = (i / (m.rows * w), (i / w) % m.rows, i % w);
        m.get(y, b * w + x)
    }).collect())
}

/// `Trace(A·Bᵀ)`.
pub fn trace_abt(a: &Matrix, b: &Matrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return shape_err("trace of A·Bᵀ needs equal shapes");
    }
    let mut s = 0.0;
    for r in 0..a.rows {
        for c in 0..a.cols {
            s += a.get(r, c) * b.get(r, c);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStats {
    /// `Trace E(M̃M̃ᵀ)`.
    pub t1: f64,
    /// `2 |Trace E(M̃(M̃ − Y)ᵀ)|`.
    pub t2: f64,
    pub patches: usize,
    pub tag: String,
}

/// Both traces as means over a non-overlapping patch grid (flush-right
/// patches added at ragged edges).
pub fn trace_stats(lrms_interp: &MsImage, reference: &MsImage, patch: usize, tag: &str) -> Result<TraceStats> {
    if lrms_interp.dims() != reference.dims() || lrms_interp.band_count() != reference.band_count() {
        return shape_err("trace statistics need co-registered images");
    }
    let src = PatchSource::new(Tensor::from_ms(lrms_interp), None, Tensor::from_ms(reference))?;
    let batch = src.extract(patch, patch, 0)?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for p in batch.items() {
        let m = mode1_unfold(&p.input);
        let d = mode1_unfold(&p.input.sub(&p.target)?);
        s1 += trace_abt(&m, &m)?;
        s2 += trace_abt(&m, &d)?;
    }
    let n = batch.len() as f64;
    Ok(TraceStats { t1: s1 / n, t2: 2.0 * (s2 / n).abs(), patches: batch.len(), tag: tag.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { mean, std_error: (var / n as f64).sqrt(), n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationCheck {
    pub estimate: MeanEstimate,
    /// `4 · std_error`.
    pub bound: f64,
    pub passed: bool,
}

/// Output of the three-layer stacked pathway (`Z_3`) for a fresh network.
fn stacked_output(params: &NetworkParams, x: &Tensor) -> Result<Tensor> {
    let (_, trace) = forward(params, x)?;
    Ok(trace.pre_activations[2].clone())
}

/// Mean of `Trace(Z₃₍₁₎ Y₍₁₎ᵀ)` over `n_init` independent initializations
/// (seeds `seed..seed + n_init`) with a fixed input `x` and target `y`.
pub fn expectation_zero_check(
    spec: &ArchSpec,
    x: &Tensor,
    y: &Tensor,
    n_init: usize,
    scheme: InitScheme,
    seed: u64,
) -> Result<ExpectationCheck> {
    if n_init < 100 {
        return invalid("the Monte-Carlo check needs at least 100 initializations");
    }
    spec.validate()?;
    let shapes = spec.layer_shapes();
    let yu = mode1_unfold(y);
    let mut samples = Vec::with_capacity(n_init);
    for i in 0..n_init as u64 {
        let params = init_params(&shapes, spec.input_skip(), scheme, seed.wrapping_add(i))?;
        let z = stacked_output(&params, x)?;
        samples.push(trace_abt(&mode1_unfold(&z), &yu)?);
    }
    let estimate = MeanEstimate::of(&samples);
    let bound = 4.0 * estimate.std_error;
    Ok(ExpectationCheck { estimate, bound, passed: estimate.mean.abs() <= bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitLossConfig {
    pub n_init: usize,
    pub patch_size: usize,
    pub patches: usize,
    pub channels: [usize; 2],
    pub scheme: InitScheme,
    pub seed: u64,
}

impl Default for InitLossConfig {
    fn default() -> Self {
        Self { n_init: 200, patch_size: 16, patches: 16, channels: [32, 16], scheme: InitScheme::He, seed: 1 }
    }
}

/// Initial losses of the four architectures for one initialization seed,
/// in [`ArchKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitLossSample {
    pub seed: u64,
    pub losses: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub lower: ArchKind,
    pub higher: ArchKind,
    /// Paired difference `loss(higher) − loss(lower)` over seeds.
    pub difference: MeanEstimate,
    /// `difference.mean / difference.std_error`.
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitLossSummary {
    pub samples: Vec<InitLossSample>,
    pub means: [MeanEstimate; 4],
    /// Mean stacked-pathway energy `‖Z₃‖²` per item; the premise that this is
    /// equal across architectures only holds approximately for DiCNN2.
    pub pathway_energy: [f64; 4],
    pub separations: Vec<Separation>,
}

impl InitLossSummary {
    /// Every detail-learning architecture beats every direct one by `sigmas`.
    pub fn ordered(&self, sigmas: f64) -> bool {
        self.separations.iter().all(|s| s.sigmas >= sigmas)
    }
}

fn arch_index(kind: ArchKind) -> usize {
    ArchKind::ALL.iter().position(|&k| k == kind).expect("listed")
}

/// Iteration-0 losses of all four architectures on one fixed patch set.
pub fn initial_loss_compare(triple: &WaldTriple, cfg: &InitLossConfig) -> Result<InitLossSummary> {
    if cfg.n_init < 2 {
        return invalid("need at least two initializations");
    }
    let bands = triple.reference.band_count();
    let batches = ArchKind::ALL
        .iter()
        .map(|k| {
            let src = PatchSource::from_images(&triple.lrms_interp, &triple.pan_low, &triple.reference, k.layout())?;
            // Same rng stream for every layout ⇒ same patch positions.
            src.sample(&mut ChaCha8Rng::seed_from_u64(cfg.seed), cfg.patches, cfg.patch_size)
        })
        .collect::<Result<Vec<PatchBatch>>>()?;
    let specs: Vec<ArchSpec> =
        ArchKind::ALL.iter().map(|&k| ArchSpec { channels: cfg.channels, ..ArchSpec::new(k, bands) }).collect();

    let mut samples = Vec::with_capacity(cfg.n_init);
    let mut energy = [0.0; 4];
    for i in 0..cfg.n_init as u64 {
        let seed = cfg.seed.wrapping_add(i);
        let mut losses = [0.0; 4];
        for (a, (spec, batch)) in specs.iter().zip(&batches).enumerate() {
            let params = init_params(&spec.layer_shapes(), spec.input_skip(), cfg.scheme, seed)?;
            let mut outs = Vec::with_capacity(batch.len());
            for p in batch.items() {
                let (out, trace) = forward(&params, &p.input)?;
                energy[a] += trace.pre_activations[2].squared_norm() / batch.len() as f64;
                outs.push(out);
            }
            let skips = batch.skips();
            losses[a] = loss_and_output_grad(spec.kind.loss(), &outs, skips.as_deref(), &batch.targets())?.0;
        }
        samples.push(InitLossSample { seed, losses });
    }
    let means = std::array::from_fn(|a| MeanEstimate::of(&samples.iter().map(|s| s.losses[a]).collect::<Vec<_>>()));
    let mut separations = Vec::new();
    for lower in [ArchKind::Dicnn1, ArchKind::Dicnn2] {
        for higher in [ArchKind::Pnn, ArchKind::Drpnn] {
            let (l, h) = (arch_index(lower), arch_index(higher));
            let d: Vec<f64> = samples.iter().map(|s| s.losses[h] - s.losses[l]).collect();
            let difference = MeanEstimate::of(&d);
            let sigmas = if difference.std_error > 0.0 {
                difference.mean / difference.std_error
            } else if difference.mean > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            separations.push(Separation { lower, higher, difference, sigmas });
        }
    }
    Ok(InitLossSummary { samples, means, pathway_energy: energy.map(|e| e / cfg.n_init as f64), separations })
}

// ---- second, literal implementation of the gradient chain ----

/// Per-layer pre-activations `Z_l` and activations `A_l`, computed with plain
/// scalar loops and zero "same" padding.
#[derive(Debug, Clone)]
pub struct LiteralTrace {
    pub z: Vec<Tensor>,
    pub a: Vec<Tensor>,
}

fn literal_conv(x: &Tensor, params: &NetworkParams, l: usize) -> Tensor {
    let layer = params.layer(l);
    let (ci, h, w) = x.shape();
    let k = layer.kernel();
    let r = (k / 2) as isize;
    Tensor::from_fn(layer.out_channels(), h, w, |o, y, xx| {
        let mut s = layer.bias()[o];
        for i in 0..ci {
            for ky in 0..k {
                for kx in 0..k {
                    let (sy, sx) = (y as isize + ky as isize - r, xx as isize + kx as isize - r);
                    if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                        s += layer.weight(o, i, ky, kx) * x.get(i, sy as usize, sx as usize);
                    }
                }
            }
        }
        s
    })
}

pub fn literal_forward(params: &NetworkParams, x: &Tensor) -> LiteralTrace {
    let mut z = Vec::new();
    let mut a: Vec<Tensor> = Vec::new();
    for l in 0..params.depth() {
        let zl = literal_conv(a.last().unwrap_or(x), params, l);
        if l + 1 < params.depth() {
            let al = match params.activation(l) {
                Activation::Relu => Tensor::from_fn(zl.channels(), zl.height(), zl.width(), |c, y, xx| {
                    zl.get(c, y, xx).max(0.0)
                }),
                // A = Z + X
                _ => Tensor::from_fn(zl.channels(), zl.height(), zl.width(), |c, y, xx| zl.get(c, y, xx) + x.get(c, y, xx)),
            };
            a.push(al);
        }
        z.push(zl);
    }
    LiteralTrace { z, a }
}

/// `(2/N_p)(Z_L + X − Y)` for detail learners, `(2/N_p)(Z_L − Y)` otherwise.
pub fn closed_form_output_sensitivity(kind: LossKind, z: &Tensor, aux: Option<&Tensor>, y: &Tensor, n_p: usize) -> Tensor {
    let scale = 2.0 / n_p as f64;
    Tensor::from_fn(z.channels(), z.height(), z.width(), |c, r, x| match (kind, aux) {
        (LossKind::Dicnn, Some(m)) => scale * (z.get(c, r, x) + m.get(c, r, x) - y.get(c, r, x)),
        _ => scale * (z.get(c, r, x) - y.get(c, r, x)),
    })
}

/// Gradients from the layer-wise compositions
/// `∂ℓ/∂W_l = δ_l ⋆ A_{l−1}`, `∂ℓ/∂B_l = Σ δ_l`,
/// `δ_{l−1} = (W_l ∗ δ_l) ⊗ φ′(Z_{l−1})`, accumulated into `grads`.
pub fn literal_gradients_into(params: &NetworkParams, x: &Tensor, trace: &LiteralTrace, delta_out: &Tensor, grads: &mut Gradients) {
    let (h, w) = (x.height(), x.width());
    let mut delta = delta_out.clone();
    for l in (0..params.depth()).rev() {
        let layer = params.layer(l);
        let input = if l == 0 { x } else { &trace.a[l - 1] };
        let k = layer.kernel();
        let r = (k / 2) as isize;
        let ci = layer.in_channels();
        for o in 0..layer.out_channels() {
            for y in 0..h {
                for xx in 0..w {
                    grads.biases[l][o] += delta.get(o, y, xx);
                }
            }
            for i in 0..ci {
                for ky in 0..k {
                    for kx in 0..k {
                        let mut s = 0.0;
                        for y in 0..h {
                            for xx in 0..w {
                                let (sy, sx) = (y as isize + ky as isize - r, xx as isize + kx as isize - r);
                                if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                                    s += delta.get(o, y, xx) * input.get(i, sy as usize, sx as usize);
                                }
                            }
                        }
                        grads.weights[l][((o * ci + i) * k + ky) * k + kx] += s;
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        let relu = params.activation(l - 1) == Activation::Relu;
        delta = Tensor::from_fn(ci, h, w, |i, y, xx| {
            if relu && trace.z[l - 1].get(i, y, xx) <= 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for o in 0..layer.out_channels() {
                for ky in 0..k {
                    for kx in 0..k {
                        // Z_l(o, y', x') picks A(i, y' + ky − r, x' + kx − r).
                        let (ty, tx) = (y as isize - ky as isize + r, xx as isize - kx as isize + r);
                        if ty >= 0 && ty < h as isize && tx >= 0 && tx < w as isize {
                            s += layer.weight(o, i, ky, kx) * delta.get(o, ty as usize, tx as usize);
                        }
                    }
                }
            }
            s
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub kind: ArchKind,
    /// Engine `δ_L` equals the closed form bit for bit.
    pub delta_exact: bool,
    /// Largest `|g_engine − g_literal| / max(1, |g_literal|)`.
    pub max_gradient_error: f64,
    pub passed: bool,
}

pub const SENSITIVITY_TOLERANCE: f64 = 1e-10;

/// Random desk-width model on a random batch: engine `δ_L` against its
/// closed form, engine gradients against [`literal_gradients_into`].
pub fn sensitivity_form_check(kind: ArchKind, bands: usize, patch: usize, items: usize, seed: u64) -> Result<SensitivityReport> {
    use rand::Rng;
    let spec = ArchSpec::desk(kind, bands);
    let params = init_params(&spec.layer_shapes(), spec.input_skip(), InitScheme::He, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e75);
    let mut t = |c| Tensor::from_fn(c, patch, patch, |_, _, _| rng.random::<f64>());
    let xs: Vec<Tensor> = (0..items).map(|_| t(spec.input_channels())).collect();
    let ms: Vec<Tensor> = (0..items).map(|_| t(bands)).collect();
    let ys: Vec<Tensor> = (0..items).map(|_| t(bands)).collect();

    let outs = xs.iter().map(|x| forward_output(&params, x)).collect::<Result<Vec<_>>>()?;
    let aux = kind.loss().needs_aux().then_some(ms.as_slice());
    let (_, deltas) = loss_and_output_grad(kind.loss(), &outs, aux, &ys)?;

    let mut delta_exact = true;
    let mut engine = Gradients::zeros_like(&params);
    let mut literal = Gradients::zeros_like(&params);
    for i in 0..items {
        let closed = closed_form_output_sensitivity(kind.loss(), &outs[i], aux.map(|a| &a[i]), &ys[i], items);
        delta_exact &= closed.data().iter().zip(deltas[i].data()).all(|(a, b)| a.to_bits() == b.to_bits());

        let (_, trace) = forward(&params, &xs[i])?;
        let g = backward(&params, &trace, &deltas[i])?;
        for (acc, v) in engine.weights.iter_mut().chain(engine.biases.iter_mut()).zip(g.weights.iter().chain(&g.biases)) {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }

        let lt = literal_forward(&params, &xs[i]);
        let lz = lt.z.last().expect("nonempty");
        let ld = closed_form_output_sensitivity(kind.loss(), lz, aux.map(|a| &a[i]), &ys[i], items);
        literal_gradients_into(&params, &xs[i], &lt, &ld, &mut literal);
    }
    let max_gradient_error = engine
        .weights
        .iter()
        .chain(&engine.biases)
        .flatten()
        .zip(literal.weights.iter().chain(&literal.biases).flatten())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let passed = delta_exact && max_gradient_error < SENSITIVITY_TOLERANCE;
    Ok(SensitivityReport { kind, delta_exact, max_gradient_error, passed })
}

// ---- reporting ----

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub check: String,
    pub subject: String,
    pub value: f64,
    /// Threshold or comparison value the check is judged against.
    pub reference: f64,
    pub passed: bool,
}

impl TheoryRow {
    pub fn new(check: &str, subject: impl Into<String>, value: f64, reference: f64, passed: bool) -> Self {
        Self { check: check.into(), subject: subject.into(), value, reference, passed }
    }
}

pub const THEORY_CSV_HEADER: &str = "check,subject,value,reference,passed";

pub fn rows_to_csv(rows: &[TheoryRow]) -> String {
    let mut s = format!("{THEORY_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.10e},{:.10e},{}", r.check, r.subject, r.value, r.reference, r.passed);
    }
    s
}

pub fn rows_to_text(rows: &[TheoryRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{:<5} {:<22} {:<28} value {:>14.6e}  vs {:>14.6e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.check,
            r.subject,
            r.value,
            r.reference
        );
    }
    s
}

pub fn trace_rows(stats: &TraceStats) -> Vec<TheoryRow> {
    vec![
        TheoryRow::new("trace_positive", stats.tag.clone(), stats.t1, 0.0, stats.t1 > 0.0),
        TheoryRow::new("trace_inequality", stats.tag.clone(), stats.t1, stats.t2, stats.t1 > stats.t2),
    ]
}

pub fn expectation_row(subject: &str, check: &ExpectationCheck) -> TheoryRow {
    TheoryRow::new("zero_expectation", subject, check.estimate.mean.abs(), check.bound, check.passed)
}

pub fn init_loss_rows(summary: &InitLossSummary, sigmas: f64) -> Vec<TheoryRow> {
    let mut rows: Vec<TheoryRow> = ArchKind::ALL
        .iter()
        .zip(&summary.means)
        .map(|(k, m)| TheoryRow::new("initial_loss_mean", k.as_str(), m.mean, m.std_error, true))
        .collect();
    rows.extend(ArchKind::ALL.iter().zip(&summary.pathway_energy).map(|(k, &e)| {
        TheoryRow::new("pathway_energy", k.as_str(), e, summary.pathway_energy[arch_index(ArchKind::Pnn)], true)
    }));
    rows.extend(summary.separations.iter().map(|s| {
        TheoryRow::new(
            "initial_loss_order",
            format!("{}<{}", s.lower.as_str(), s.higher.as_str()),
            s.sigmas,
            sigmas,
            s.sigmas >= sigmas,
        )
    }));
    rows
}

pub fn sensitivity_row(r: &SensitivityReport) -> TheoryRow {
    TheoryRow::new("sensitivity_form", r.kind.as_str(), r.max_gradient_error, SENSITIVITY_TOLERANCE, r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{RasterBand, Role};

    fn ms(bands: Vec<Vec<f64>>, h: usize, w: usize) -> MsImage {
        MsImage::new(bands.into_iter().map(|b| RasterBand::new(h, w, b).unwrap()).collect(), Role::HrmsRef).unwrap()
    }

    #[test]
    fn unfold_layout_and_refold() {
        let one = Tensor::from_vec(1, 1, 1, vec![5.0]).unwrap();
        assert_eq!(mode1_unfold(&one), Matrix { rows: 1, cols: 1, data: vec![5.0] });

        let t = Tensor::from_fn(2, 2, 2, |c, y, x| (100 * c + 10 * y + x) as f64);
        let m = mode1_unfold(&t);
        assert_eq!((m.rows, m.cols), (2, 4));
        for c in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    assert_eq!(m.get(y, c * 2 + x), t.get(c, y, x));
                }
            }
        }
        assert_eq!(mode1_refold(&m, 2).unwrap(), t);
        assert!(mode1_refold(&m, 3).is_err());
    }

    #[test]
    fn trace_abt_is_frobenius_product() {
        let a = Tensor::from_fn(3, 4, 5, |c, y, x| (c + 2 * y) as f64 - x as f64 * 0.5);
        let b = Tensor::from_fn(3, 4, 5, |c, y, x| (c * y) as f64 + x as f64);
        assert!((trace_abt(&mode1_unfold(&a), &mode1_unfold(&b)).unwrap() - a.dot(&b)).abs() < 1e-12);
    }

    #[test]
    fn identical_images_have_zero_t2() {
        let m = ms(vec![(0..64).map(|i| i as f64 * 0.1).collect(); 2], 8, 8);
        let s = trace_stats(&m, &m, 4, "same").unwrap();
        assert_eq!(s.t2, 0.0);
        assert_eq!(s.patches, 4);
        // Mean over 4 tiles of the tile energy = total energy / 4.
        let total: f64 = m.bands().iter().flat_map(|b| b.values()).map(|v| v * v).sum();
        assert!((s.t1 - total / 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_target_gives_exact_zero() {
        let spec = ArchSpec { channels: [4, 3], kernels: [3, 3, 3], ..ArchSpec::new(ArchKind::Dicnn1, 2) };
        let x = Tensor::from_fn(3, 6, 6, |c, y, x| (c + y * x) as f64 * 0.1);
        let chk = expectation_zero_check(&spec, &x, &Tensor::zeros(2, 6, 6), 100, InitScheme::He, 3).unwrap();
        assert_eq!(chk.estimate.mean, 0.0);
        assert!(chk.passed);
    }

    #[test]
    fn shifted_init_fails_the_zero_check() {
        let spec = ArchSpec { channels: [4, 3], kernels: [3, 3, 3], ..ArchSpec::new(ArchKind::Dicnn1, 2) };
        let x = Tensor::from_fn(3, 6, 6, |c, y, x| 0.5 + 0.05 * (c + y + x) as f64);
        let y = Tensor::from_fn(2, 6, 6, |_, y, x| 0.4 + 0.02 * (y * x) as f64);
        let ok = expectation_zero_check(&spec, &x, &y, 400, InitScheme::He, 5).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = expectation_zero_check(&spec, &x, &y, 400, InitScheme::ShiftedHe { mean: 0.2 }, 5).unwrap();
        assert!(!bad.passed, "{bad:?}");
    }

    #[test]
    fn literal_chain_matches_engine_for_every_kind() {
        for kind in ArchKind::ALL {
            let r = sensitivity_form_check(kind, 2, 8, 2, 17).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn zero_sensitivity_gives_zero_gradients() {
        let spec = ArchSpec::desk(ArchKind::Drpnn, 2);
        let params = init_params(&spec.layer_shapes(), spec.input_skip(), InitScheme::He, 4).unwrap();
        let x = Tensor::from_fn(3, 6, 6, |c, y, x| (c + y + x) as f64 * 0.1);
        let lt = literal_forward(&params, &x);
        let mut g = Gradients::zeros_like(&params);
        literal_gradients_into(&params, &x, &lt, &Tensor::zeros(2, 6, 6), &mut g);
        assert!(g.is_zero());
    }

    #[test]
    fn all_zero_parameters_reduce_to_image_norms() {
        // With every parameter zero the outputs vanish: the detail learners'
        // loss is ‖M̃ − Y‖², the direct ones' ‖Y‖².
        let scene = crate::synthetic::SyntheticSceneConfig::new(64, 64, 4, 3);
        let tr = crate::synthetic::synthetic_triple(&scene, &Default::default()).unwrap();
        let m = Tensor::from_ms(&tr.lrms_interp);
        let y = Tensor::from_ms(&tr.reference);
        for kind in ArchKind::ALL {
            let spec = ArchSpec::desk(kind, 4);
            let zero = NetworkParams::new(
                spec.layer_shapes().iter().map(|s| crate::nn::ConvLayer::zeros(s.in_channels, s.out_channels, s.kernel).unwrap()).collect(),
                spec.input_skip(),
            )
            .unwrap();
            let src = PatchSource::from_images(&tr.lrms_interp, &tr.pan_low, &tr.reference, kind.layout()).unwrap();
            let whole = PatchBatch::new(vec![src.patch_at(0, 0, 16).unwrap()]).unwrap();
            let loss = crate::nn::batch_loss(&zero, kind.loss(), &whole).unwrap();
            let expect = if kind.learns_details() {
                m.crop(0, 0, 16, 16).unwrap().sub(&y.crop(0, 0, 16, 16).unwrap()).unwrap().squared_norm()
            } else {
                // DRPNN's skip feeds a zero 1×1 layer, so its output is 0 too.
                y.crop(0, 0, 16, 16).unwrap().squared_norm()
            };
            assert!((loss - expect).abs() < 1e-9 * expect, "{kind:?}");
        }
        assert!(m.sub(&y).unwrap().squared_norm() < y.squared_norm());
    }

    #[test]
    fn mean_estimate_matches_hand_values() {
        let e = MeanEstimate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
