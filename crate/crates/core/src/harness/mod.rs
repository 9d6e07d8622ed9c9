//! End-to-end commands: degrade, run, transfer, theory.
//!
//! Every command writes into `cfg.output`. Files that depend only on the
//! config and seed (`results.csv`, `loss_*.csv`, rasters, checkpoints) are
//! byte-reproducible; wall-clock numbers go to `timing.csv` /
//! `transfer.csv` only.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Method, SceneSource, TheoryConfig, TransferConfig};

use crate::arch::{self, ArchKind, ArchSpec, Model};
use crate::classical::{pansharpen, DetailExtractorSpec};
use crate::error::{invalid, Error, Result};
use crate::io::{export_png, read_stem, write_lines, write_stem, Raster};
use crate::metrics::{evaluate, QualityConfig, QualityReport};
use crate::nn::{InitScheme, Tensor, TrainConfig};
use crate::resample::{wald_degrade, WaldConfig, WaldTriple};
use crate::synthetic::{default_corpus, synthetic_triple, SyntheticSceneConfig};
use crate::theory::{self, InitLossConfig, TheoryRow};
use crate::{DetailImage, MsImage, PanImage};

pub const RESULTS_HEADER: &str = "method,qx,sam,ergas,scc";
pub const TIMING_HEADER: &str = "method,train_seconds,predict_seconds";
pub const TRANSFER_HEADER: &str =
    "method,qx,sam,ergas,scc,train_seconds,iterations,initial_loss,final_loss";

/// `<stem>.ckpt` header and `<stem>.params` payload.
pub fn checkpoint_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.ckpt")), dir.join(format!("{stem}.params")))
}

/// Degrades an observed pair and writes `lrms_interp`, `pan_low` and
/// `reference` into `out`.
pub fn cmd_degrade(ms: &MsImage, pan: &PanImage, wald: &WaldConfig, out: &Path) -> Result<WaldTriple> {
    let t = wald_degrade(ms, pan, wald)?;
    write_triple(&t, out)?;
    Ok(t)
}

pub fn write_triple(t: &WaldTriple, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    write_stem(&Raster::Ms(t.lrms_interp.clone()), out, "lrms_interp")?;
    write_stem(&Raster::Pan(t.pan_low.clone()), out, "pan_low")?;
    write_stem(&Raster::Ms(t.reference.clone()), out, "reference")
}

pub fn read_triple(dir: &Path) -> Result<WaldTriple> {
    Ok(WaldTriple {
        lrms_interp: read_stem(dir, "lrms_interp")?.into_ms()?,
        pan_low: read_stem(dir, "pan_low")?.into_pan()?,
        reference: read_stem(dir, "reference")?.into_ms()?,
    })
}

/// Synthetic scenes are generated; observed pairs are degraded on the fly.
pub fn load_triple(scene: &SceneSource, wald: &WaldConfig) -> Result<WaldTriple> {
    match scene {
        SceneSource::Synthetic(s) => synthetic_triple(s, wald),
        SceneSource::Observed { dir, ms, pan } => {
            wald_degrade(&read_stem(dir, ms)?.into_ms()?, &read_stem(dir, pan)?.into_pan()?, wald)
        }
        SceneSource::Triple { dir } => read_triple(dir),
    }
}

/// Everything one method produced.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: QualityReport,
    pub fused: MsImage,
    /// `fused − M̃`, or the pathway output for detail learners. `None` for EXP.
    pub details: Option<DetailImage>,
    pub model: Option<Model>,
    pub loss_curve: Vec<f64>,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

fn arch_spec(cfg: &ExperimentConfig, kind: ArchKind, bands: usize) -> ArchSpec {
    ArchSpec { kind, bands, kernels: cfg.kernels, channels: cfg.channels }
}

/// Trains (for CNNs), predicts and evaluates one method. Prediction time
/// excludes training.
pub fn run_method(method: Method, triple: &WaldTriple, cfg: &ExperimentConfig) -> Result<MethodOutcome> {
    let WaldTriple { lrms_interp, pan_low, reference } = triple;
    let (mut trained, mut loss_curve, mut train_seconds) = (None, Vec::new(), 0.0);
    if let Method::Cnn(kind) = method {
        let tcfg = cfg.train_for(kind);
        let mut m = arch::build(arch_spec(cfg, kind, reference.band_count()), tcfg)?;
        let rep = arch::train(&mut m, lrms_interp, pan_low, reference, tcfg)?;
        loss_curve = rep.loss_curve;
        train_seconds = rep.seconds;
        trained = Some(m);
    }
    let start = Instant::now();
    let (fused, details) = match (method, &trained) {
        (Method::Exp, _) => (lrms_interp.clone(), None),
        (Method::Classical(kind), _) => {
            let fused = pansharpen(lrms_interp, pan_low, &DetailExtractorSpec::default_for(kind, cfg.wald))?;
            let d = DetailImage::difference(&fused, lrms_interp)?;
            (fused, Some(d))
        }
        (Method::Cnn(kind), Some(m)) => {
            let fused = arch::predict(m, lrms_interp, pan_low)?;
            let d = if kind.learns_details() {
                arch::predict_details(m, lrms_interp, pan_low)?
            } else {
                DetailImage::difference(&fused, lrms_interp)?
            };
            (fused, Some(d))
        }
        (Method::Cnn(_), None) => unreachable!("CNN methods are trained above"),
    };
    let predict_seconds = start.elapsed().as_secs_f64();
    let report = evaluate(&fused, reference, &QualityConfig::new(cfg.wald.ratio))?.with_elapsed(predict_seconds);
    Ok(MethodOutcome { method, report, fused, details, model: trained, loss_curve, train_seconds, predict_seconds })
}

fn loss_lines(curve: &[f64]) -> Vec<String> {
    std::iter::once("iteration,loss".to_string()).chain(curve.iter().enumerate().map(|(i, l)| format!("{i},{l}"))).collect()
}

fn write_outputs(o: &MethodOutcome, cfg: &ExperimentConfig) -> Result<()> {
    let dir = &cfg.output;
    let name = o.method.as_str();
    write_stem(&Raster::Ms(o.fused.clone()), dir, &format!("fused_{name}"))?;
    if let Some(d) = &o.details {
        write_stem(&Raster::Detail(d.clone()), dir, &format!("detail_{name}"))?;
    }
    if let Some(m) = &o.model {
        write_lines(&dir.join(format!("loss_{name}.csv")), &loss_lines(&o.loss_curve))?;
        let (h, p) = checkpoint_paths(dir, &format!("model_{name}"));
        let t = cfg.train_for(m.kind());
        m.save(&h, &p, t.iterations, t.seed)?;
    }
    if cfg.export_png {
        export_png(o.fused.bands(), cfg.rgb, &dir.join(format!("fused_{name}.png")))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<(Method, QualityReport)>,
    pub errors: Vec<(Method, String)>,
    pub timings: Vec<(Method, f64, f64)>,
}

impl RunSummary {
    pub fn report(&self, method: Method) -> Option<&QualityReport> {
        self.rows.iter().find(|(m, _)| *m == method).map(|(_, r)| r)
    }

    pub fn complete(&self) -> bool {
        self.errors.is_empty()
    }
}

/// The reduced-resolution experiment. A failing method is recorded in
/// `errors.csv` and the remaining methods still run.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_key_values().to_text())?;
    let triple = load_triple(&cfg.scene, &cfg.wald)?;
    if cfg.export_png {
        export_png(triple.reference.bands(), cfg.rgb, &out.join("reference.png"))?;
        export_png(triple.lrms_interp.bands(), cfg.rgb, &out.join("lrms_interp.png"))?;
    }
    let mut summary = RunSummary { rows: Vec::new(), errors: Vec::new(), timings: Vec::new() };
    for &method in &cfg.methods {
        match run_method(method, &triple, cfg).and_then(|o| write_outputs(&o, cfg).map(|_| o)) {
            Ok(o) => {
                summary.timings.push((method, o.train_seconds, o.predict_seconds));
                summary.rows.push((method, o.report));
            }
            Err(e) => summary.errors.push((method, e.to_string())),
        }
    }
    let results: Vec<String> = std::iter::once(RESULTS_HEADER.to_string())
        .chain(summary.rows.iter().map(|(m, r)| r.csv_row_metrics(m.label())))
        .collect();
    write_lines(&out.join("results.csv"), &results)?;
    let timing: Vec<String> = std::iter::once(TIMING_HEADER.to_string())
        .chain(summary.timings.iter().map(|(m, t, p)| format!("{},{t:.3},{p:.3}", m.label())))
        .collect();
    write_lines(&out.join("timing.csv"), &timing)?;
    let errors: Vec<String> = std::iter::once("method,error".to_string())
        .chain(summary.errors.iter().map(|(m, e)| format!("{},\"{}\"", m.label(), e.replace('"', "'"))))
        .collect();
    write_lines(&out.join("errors.csv"), &errors)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub method: String,
    pub report: QualityReport,
    pub train_seconds: f64,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl TransferRow {
    fn csv(&self) -> String {
        format!(
            "{},{:.3},{},{},{}",
            self.report.csv_row_metrics(&self.method),
            self.train_seconds,
            self.iterations,
            self.initial_loss,
            self.final_loss
        )
    }
}

/// Bands kept after removing `remove` from `bands`.
pub fn kept_bands(bands: usize, remove: &[usize]) -> Result<Vec<usize>> {
    if remove.is_empty() {
        return invalid("no bands removed: nothing to transfer");
    }
    let mut seen = vec![false; bands];
    for &r in remove {
        match seen.get_mut(r) {
            Some(s) if !*s => *s = true,
            Some(_) => return invalid(format!("band {r} removed twice")),
            None => return invalid(format!("band {r} out of range for {bands} bands")),
        }
    }
    let kept: Vec<usize> = (0..bands).filter(|&b| !seen[b]).collect();
    if kept.is_empty() {
        return invalid("every band removed");
    }
    Ok(kept)
}

/// Loads the DiCNN2 checkpoint named in the config, or trains one on the
/// full-band scene when none is given.
pub fn transfer_source_model(cfg: &ExperimentConfig, triple: &WaldTriple) -> Result<Model> {
    let model = match &cfg.transfer.checkpoint {
        Some(h) => Model::load(h, &h.with_extension("params"))?.0,
        None => {
            let t = cfg.train_for(ArchKind::Dicnn2);
            let mut m = arch::build(arch_spec(cfg, ArchKind::Dicnn2, triple.reference.band_count()), t)?;
            arch::train(&mut m, &triple.lrms_interp, &triple.pan_low, &triple.reference, t)?;
            m
        }
    };
    if model.kind() != ArchKind::Dicnn2 {
        return invalid(format!("transfer needs a DiCNN2 checkpoint, got {}", model.kind().label()));
    }
    if model.spec().bands != triple.reference.band_count() {
        return Err(Error::Shape(format!(
            "checkpoint has {} bands, the scene {}",
            model.spec().bands,
            triple.reference.band_count()
        )));
    }
    Ok(model)
}

/// Fine-tunes DiCNN2's last layer on a reduced-band scene with
/// `1/budget_ratio` of the full budget, and trains the other CNNs in
/// `cfg.methods` from scratch at the full budget.
pub fn cmd_transfer(cfg: &ExperimentConfig) -> Result<Vec<TransferRow>> {
    cfg.validate()?;
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let triple = load_triple(&cfg.scene, &cfg.wald)?;
    let kept = kept_bands(triple.reference.band_count(), &cfg.transfer.remove)?;
    let source = transfer_source_model(cfg, &triple)?;
    let reduced = WaldTriple {
        lrms_interp: triple.lrms_interp.select_bands(&kept)?,
        pan_low: triple.pan_low.clone(),
        reference: triple.reference.select_bands(&kept)?,
    };
    let WaldTriple { lrms_interp: m, pan_low: p, reference: y } = &reduced;
    let quality = QualityConfig::new(cfg.wald.ratio);
    let mut rows = Vec::new();

    let full = cfg.train_for(ArchKind::Dicnn2);
    let tune = TrainConfig { iterations: full.iterations.div_ceil(cfg.transfer.budget_ratio), ..full.clone() };
    let start = arch::transfer_start(&source, kept.len(), &tune)?;
    let initial_loss = arch::image_loss(&start, m, p, y, tune.patch_size)?;
    let (tuned, rep) = arch::fine_tune_last_layer(&source, m, p, y, &tune)?;
    write_lines(&out.join("loss_transfer_dicnn2.csv"), &loss_lines(&rep.loss_curve))?;
    rows.push(TransferRow {
        method: "DiCNN2 (fine-tuned)".into(),
        report: evaluate(&arch::predict(&tuned, m, p)?, y, &quality)?,
        train_seconds: rep.seconds,
        iterations: tune.iterations,
        initial_loss,
        final_loss: arch::image_loss(&tuned, m, p, y, tune.patch_size)?,
    });

    for &method in &cfg.methods {
        let Method::Cnn(kind) = method else { continue };
        if kind == ArchKind::Dicnn2 {
            continue;
        }
        let t = cfg.train_for(kind);
        let mut model = arch::build(arch_spec(cfg, kind, kept.len()), t)?;
        let initial_loss = arch::image_loss(&model, m, p, y, t.patch_size)?;
        let rep = arch::train(&mut model, m, p, y, t)?;
        write_lines(&out.join(format!("loss_transfer_{}.csv", kind.as_str())), &loss_lines(&rep.loss_curve))?;
        rows.push(TransferRow {
            method: kind.label().into(),
            report: evaluate(&arch::predict(&model, m, p)?, y, &quality)?,
            train_seconds: rep.seconds,
            iterations: t.iterations,
            initial_loss,
            final_loss: arch::image_loss(&model, m, p, y, t.patch_size)?,
        });
    }
    let lines: Vec<String> = std::iter::once(TRANSFER_HEADER.to_string()).chain(rows.iter().map(TransferRow::csv)).collect();
    write_lines(&out.join("transfer.csv"), &lines)?;
    Ok(rows)
}

/// Synthetic triple whose reference is `side × side`.
fn small_triple(side: usize, seed: u64, wald: &WaldConfig) -> Result<WaldTriple> {
    let n = side * wald.ratio;
    synthetic_triple(&SyntheticSceneConfig::new(n, n, 4, seed), wald)
}

/// All four checks of the initialization analysis; writes `theory.csv` and
/// `theory.txt`.
pub fn cmd_theory(cfg: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    cfg.validate()?;
    let th = &cfg.theory;
    let mut rows = Vec::new();

    for scene in default_corpus() {
        let t = synthetic_triple(&scene, &cfg.wald)?;
        let tag = format!("seed{}_{}b", scene.seed, scene.bands);
        rows.extend(theory::trace_rows(&theory::trace_stats(&t.lrms_interp, &t.reference, th.patch, &tag)?));
    }

    let small = small_triple(16, cfg.seed, &cfg.wald)?;
    let spec = arch_spec(cfg, ArchKind::Dicnn1, 4);
    let x = Tensor::from_ms(&small.lrms_interp).concat(&Tensor::from_pan(&small.pan_low))?;
    let y = Tensor::from_ms(&small.reference);
    let (scheme, subject) = if th.negative_control {
        (InitScheme::ShiftedHe { mean: 0.05 }, "dicnn1_shifted_init")
    } else {
        (cfg.train_for(ArchKind::Dicnn1).init, "dicnn1")
    };
    let chk = theory::expectation_zero_check(&spec, &x, &y, th.n_init_expectation, scheme, cfg.seed)?;
    rows.push(theory::expectation_row(subject, &chk));

    let triple = load_triple(&cfg.scene, &cfg.wald)?;
    let icfg = InitLossConfig {
        n_init: th.n_init_loss,
        patch_size: th.patch,
        channels: cfg.channels,
        scheme: cfg.train_for(ArchKind::Dicnn1).init,
        seed: cfg.seed,
        ..InitLossConfig::default()
    };
    let summary = theory::initial_loss_compare(&triple, &icfg)?;
    rows.extend(theory::init_loss_rows(&summary, th.sigmas));

    for kind in ArchKind::ALL {
        rows.push(theory::sensitivity_row(&theory::sensitivity_form_check(kind, 4, 8, 2, cfg.seed)?));
    }

    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("theory.csv"), theory::rows_to_csv(&rows))?;
    fs::write(cfg.output.join("theory.txt"), theory::rows_to_text(&rows))?;
    Ok(rows)
}
