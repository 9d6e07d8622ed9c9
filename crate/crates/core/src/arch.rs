//! The four compared three-layer pansharpening CNNs.
//!
//! | kind   | pathway input  | pathway output | prediction          |
//! |--------|----------------|----------------|---------------------|
//! | PNN    | `G = [M̃, P]`   | `N_b`          | `Z_L`               |
//! | DRPNN  | `G`            | `N_b + 1`      | `ω(Z_3 + G)`        |
//! | DiCNN1 | `G`            | `N_b`          | `Z_L + M̃`           |
//! | DiCNN2 | `P`            | `N_b`          | `Z_L + M̃`           |
//!
//! DRPNN's `ω` is a 1×1 convolution appended as a fourth layer; the skip sum
//! `Z_3 + G` is the input-skip activation of the third layer.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, shape_err, Error, Result};
use crate::io::KeyValues;
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::nn::init::{init_layer, init_params, LayerShape};
use crate::nn::{batch_loss, forward_output, train_network, InputLayout, LossKind, NetworkParams, PatchSource, Tensor, TrainConfig};
use crate::raster::{DetailImage, MsImage, PanImage, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchKind {
    Pnn,
    Drpnn,
    Dicnn1,
    Dicnn2,
}

impl ArchKind {
    pub const ALL: [ArchKind; 4] = [ArchKind::Pnn, ArchKind::Drpnn, ArchKind::Dicnn1, ArchKind::Dicnn2];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Pnn => "pnn",
            ArchKind::Drpnn => "drpnn",
            ArchKind::Dicnn1 => "dicnn1",
            ArchKind::Dicnn2 => "dicnn2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s.to_ascii_lowercase())
    }

    /// Display name used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ArchKind::Pnn => "PNN",
            ArchKind::Drpnn => "DRPNN",
            ArchKind::Dicnn1 => "DiCNN1",
            ArchKind::Dicnn2 => "DiCNN2",
        }
    }

    pub fn layout(self) -> InputLayout {
        match self {
            ArchKind::Pnn | ArchKind::Drpnn => InputLayout::Stacked,
            ArchKind::Dicnn1 => InputLayout::StackedWithSkip,
            ArchKind::Dicnn2 => InputLayout::PanWithSkip,
        }
    }

    pub fn loss(self) -> LossKind {
        match self {
            ArchKind::Pnn => LossKind::Pnn,
            ArchKind::Drpnn => LossKind::Drpnn,
            ArchKind::Dicnn1 | ArchKind::Dicnn2 => LossKind::Dicnn,
        }
    }

    /// Largest stable constant step at the default desk settings. PNN
    /// regresses the whole image from a near-zero start, so its first
    /// gradients are two orders of magnitude larger than the others'.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            ArchKind::Pnn => 2e-4,
            _ => 7e-4,
        }
    }

    /// [`TrainConfig::default`] with this architecture's step size.
    pub fn default_train_config(self) -> TrainConfig {
        TrainConfig { learning_rate: self.default_learning_rate(), ..TrainConfig::default() }
    }

    /// Whether the prediction adds `M̃` to the pathway output.
    pub fn learns_details(self) -> bool {
        matches!(self, ArchKind::Dicnn1 | ArchKind::Dicnn2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchSpec {
    pub kind: ArchKind,
    pub bands: usize,
    pub kernels: [usize; 3],
    pub channels: [usize; 2],
}

impl ArchSpec {
    /// Kernels 9-5-5, hidden widths 64-32.
    pub fn new(kind: ArchKind, bands: usize) -> Self {
        Self { kind, bands, kernels: [9, 5, 5], channels: [64, 32] }
    }

    /// Kernels 9-5-5, hidden widths 32-16.
    pub fn desk(kind: ArchKind, bands: usize) -> Self {
        Self { channels: [32, 16], ..Self::new(kind, bands) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 {
            return invalid("an architecture needs at least one band");
        }
        if self.kernels.iter().any(|k| k % 2 == 0) || self.channels.contains(&0) {
            return invalid(format!("kernels must be odd and widths positive: {self:?}"));
        }
        Ok(())
    }

    pub fn input_channels(&self) -> usize {
        match self.kind {
            ArchKind::Dicnn2 => 1,
            _ => self.bands + 1,
        }
    }

    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let [k1, k2, k3] = self.kernels;
        let [c1, c2] = self.channels;
        let out = if self.kind == ArchKind::Drpnn { self.bands + 1 } else { self.bands };
        let mut shapes = vec![
            LayerShape::new(self.input_channels(), c1, k1),
            LayerShape::new(c1, c2, k2),
            LayerShape::new(c2, out, k3),
        ];
        if self.kind == ArchKind::Drpnn {
            shapes.push(LayerShape::new(self.bands + 1, self.bands, 1));
        }
        shapes
    }

    pub fn input_skip(&self) -> Option<usize> {
        (self.kind == ArchKind::Drpnn).then_some(2)
    }

    /// Sum of kernel radii: how far a prediction pixel sees.
    pub fn receptive_radius(&self) -> usize {
        self.kernels.iter().map(|k| k / 2).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ArchSpec,
    params: NetworkParams,
}

/// Loss curve and wall time of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_curve: Vec<f64>,
    pub seconds: f64,
}

impl Model {
    pub fn from_params(spec: ArchSpec, params: NetworkParams) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        let matches = params.depth() == shapes.len()
            && params.input_skip() == spec.input_skip()
            && params.layers().iter().zip(&shapes).all(|(l, s)| {
                (l.in_channels(), l.out_channels(), l.kernel()) == (s.in_channels, s.out_channels, s.kernel)
            });
        if !matches {
            return shape_err(format!("parameters do not match {spec:?}"));
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn kind(&self) -> ArchKind {
        self.spec.kind
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut NetworkParams {
        &mut self.params
    }

    pub fn patch_source(&self, lrms_interp: &MsImage, pan: &PanImage, reference: &MsImage) -> Result<PatchSource> {
        self.check_bands(lrms_interp)?;
        PatchSource::from_images(lrms_interp, pan, reference, self.kind().layout())
    }

    fn check_bands(&self, lrms_interp: &MsImage) -> Result<()> {
        if lrms_interp.band_count() != self.spec.bands {
            return shape_err(format!(
                "model expects {} bands, image has {}",
                self.spec.bands,
                lrms_interp.band_count()
            ));
        }
        Ok(())
    }

    pub fn save(&self, header_path: &Path, payload_path: &Path, iteration: usize, seed: u64) -> Result<()> {
        let mut extra = KeyValues::new();
        extra.push("kind", self.kind().as_str());
        extra.push("bands", self.spec.bands);
        extra.push("kernels", self.spec.kernels.map(|k| k.to_string()).join(","));
        extra.push("channels", self.spec.channels.map(|k| k.to_string()).join(","));
        save_checkpoint(&self.params, &CheckpointMeta { seed, iteration, extra }, header_path, payload_path)
    }

    pub fn load(header_path: &Path, payload_path: &Path) -> Result<(Self, CheckpointMeta)> {
        let (params, meta) = load_checkpoint(header_path, payload_path)?;
        let kind = ArchKind::parse(meta.extra.require("kind")?)
            .ok_or_else(|| Error::Format("unknown architecture kind".into()))?;
        let triple = |key: &str| -> Result<Vec<usize>> {
            meta.extra
                .require(key)?
                .split(',')
                .map(|s| s.parse().map_err(|_| Error::Format(format!("bad {key}"))))
                .collect()
        };
        let (k, c) = (triple("kernels")?, triple("channels")?);
        if k.len() != 3 || c.len() != 2 {
            return Err(Error::Format("checkpoint kernels/channels malformed".into()));
        }
        let spec = ArchSpec {
            kind,
            bands: meta.extra.require_value("bands")?,
            kernels: [k[0], k[1], k[2]],
            channels: [c[0], c[1]],
        };
        Ok((Self::from_params(spec, params)?, meta))
    }
}

/// Freshly initialized model.
pub fn build(spec: ArchSpec, cfg: &TrainConfig) -> Result<Model> {
    spec.validate()?;
    let params = init_params(&spec.layer_shapes(), spec.input_skip(), cfg.init, cfg.seed)?;
    Model::from_params(spec, params)
}

/// Pathway output `Z_L` over a whole image, computed in row strips with a
/// halo wide enough that every kept pixel sees exactly what a single
/// full-image pass would.
pub fn pathway_output(model: &Model, lrms_interp: &MsImage, pan: &PanImage) -> Result<Tensor> {
    model.check_bands(lrms_interp)?;
    if lrms_interp.dims() != pan.dims() {
        return shape_err("lrms_interp and pan must share dimensions");
    }
    let m = Tensor::from_ms(lrms_interp);
    let p = Tensor::from_pan(pan);
    let x = match model.kind().layout() {
        InputLayout::PanWithSkip => p,
        _ => m.concat(&p)?,
    };
    let (h, w) = lrms_interp.dims();
    const STRIP: usize = 64;
    if h <= 2 * STRIP {
        return forward_output(&model.params, &x);
    }
    let halo = model.spec.receptive_radius();
    let mut out = Tensor::zeros(model.params.out_channels(), h, w);
    let mut r0 = 0;
    while r0 < h {
        let r1 = (r0 + STRIP).min(h);
        let (a, b) = (r0.saturating_sub(halo), (r1 + halo).min(h));
        let part = forward_output(&model.params, &x.crop(a, 0, b - a, w)?)?;
        for c in 0..out.channels() {
            let src = &part.channel(c)[(r0 - a) * w..(r1 - a) * w];
            out.channel_mut(c)[r0 * w..r1 * w].copy_from_slice(src);
        }
        r0 = r1;
    }
    Ok(out)
}

/// Fused HRMS estimate.
pub fn predict(model: &Model, lrms_interp: &MsImage, pan: &PanImage) -> Result<MsImage> {
    let z = pathway_output(model, lrms_interp, pan)?;
    let out = if model.kind().learns_details() { z.add(&Tensor::from_ms(lrms_interp))? } else { z };
    MsImage::new(out.to_bands()?, Role::HrmsPred)
}

/// The injected details `D̂` learned by a DiCNN pathway.
pub fn predict_details(model: &Model, lrms_interp: &MsImage, pan: &PanImage) -> Result<DetailImage> {
    if !model.kind().learns_details() {
        return Err(Error::Unsupported(format!("{} does not learn details", model.kind().label())));
    }
    DetailImage::new(pathway_output(model, lrms_interp, pan)?.to_bands()?)
}

/// SGD on random patches of the experiment images.
pub fn train(model: &mut Model, lrms_interp: &MsImage, pan: &PanImage, reference: &MsImage, cfg: &TrainConfig) -> Result<TrainReport> {
    let source = model.patch_source(lrms_interp, pan, reference)?;
    let loss = model.kind().loss();
    let start = Instant::now();
    let loss_curve = train_network(&mut model.params, loss, &source, cfg, 0)?;
    Ok(TrainReport { loss_curve, seconds: start.elapsed().as_secs_f64() })
}

/// A DiCNN2 model for `bands` bands: the hidden layers of `model` and a
/// last layer freshly drawn from `cfg.init` with `cfg.seed`.
pub fn transfer_start(model: &Model, bands: usize, cfg: &TrainConfig) -> Result<Model> {
    if model.kind() != ArchKind::Dicnn2 {
        return Err(Error::Unsupported(format!(
            "only DiCNN2 can be fine-tuned on a new band count; {} feeds M̃ into its pathway",
            model.kind().label()
        )));
    }
    let spec = ArchSpec { bands, ..model.spec };
    spec.validate()?;
    let last = spec.layer_shapes()[2];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = model.params.clone();
    params.replace_layer(2, init_layer(&mut rng, last, cfg.init)?)?;
    Model::from_params(spec, params)
}

/// Mean loss over the non-overlapping `patch`-sized grid of the whole image,
/// on the same scale as the training loss.
pub fn image_loss(model: &Model, lrms_interp: &MsImage, pan: &PanImage, reference: &MsImage, patch: usize) -> Result<f64> {
    let source = model.patch_source(lrms_interp, pan, reference)?;
    let grid = source.extract(patch, patch, 0)?;
    batch_loss(&model.params, model.kind().loss(), &grid)
}

/// DiCNN2 transfer: keeps layers `1..L−1` bit-exactly, re-initializes the
/// last layer for the new band count and trains only that layer.
pub fn fine_tune_last_layer(
    model: &Model,
    lrms_interp: &MsImage,
    pan: &PanImage,
    reference: &MsImage,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    let mut tuned = transfer_start(model, reference.band_count(), cfg)?;
    let source = tuned.patch_source(lrms_interp, pan, reference)?;
    let start = Instant::now();
    let loss_curve = train_network(&mut tuned.params, LossKind::Dicnn, &source, cfg, 2)?;
    Ok((tuned, TrainReport { loss_curve, seconds: start.elapsed().as_secs_f64() }))
}
