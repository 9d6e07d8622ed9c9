//! Experiment configuration: flat `key=value` lines with dotted section
//! prefixes, e.g.
//!
//! ```text
//! seed=1
//! output=runs/default
//! methods=exp,mra_glp,dicnn1
//! scene.source=synthetic
//! scene.height=512
//! wald.ratio=4
//! train.iterations=2000
//! train.pnn.learning_rate=0.0002
//! ```
//!
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::arch::ArchKind;
use crate::classical::ExtractorKind;
use crate::error::{invalid, Error, Result};
use crate::io::KeyValues;
use crate::nn::{InitScheme, TrainConfig};
use crate::resample::{Interpolation, WaldConfig};
use crate::synthetic::{default_mixing, SyntheticSceneConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Interpolated LRMS, no fusion.
    Exp,
    Classical(ExtractorKind),
    Cnn(ArchKind),
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Exp,
        Method::Classical(ExtractorKind::CsIntensity),
        Method::Classical(ExtractorKind::MraAtwt),
        Method::Classical(ExtractorKind::MraGlp),
        Method::Cnn(ArchKind::Pnn),
        Method::Cnn(ArchKind::Drpnn),
        Method::Cnn(ArchKind::Dicnn1),
        Method::Cnn(ArchKind::Dicnn2),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exp => "exp",
            Method::Classical(k) => k.as_str(),
            Method::Cnn(k) => k.as_str(),
        }
    }

    /// Row label in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Exp => "EXP",
            Method::Classical(k) => k.as_str(),
            Method::Cnn(k) => k.label(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    Synthetic(SyntheticSceneConfig),
    /// Observed MS and a PAN `ratio` times larger, degraded on load.
    Observed { dir: PathBuf, ms: String, pan: String },
    /// Already-degraded `lrms_interp` / `pan_low` / `reference` stems.
    Triple { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig {
    /// Header of a trained DiCNN2 checkpoint.
    pub checkpoint: Option<PathBuf>,
    /// Zero-based band indices dropped from the scene.
    pub remove: Vec<usize>,
    /// Full training budget ÷ fine-tuning budget.
    pub budget_ratio: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self { checkpoint: None, remove: Vec::new(), budget_ratio: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    pub n_init_expectation: usize,
    pub n_init_loss: usize,
    /// Draw the expectation check from a nonzero-mean init (should fail).
    pub negative_control: bool,
    pub patch: usize,
    /// Required separation, in standard errors, for the initial-loss order.
    pub sigmas: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self { n_init_expectation: 10_000, n_init_loss: 200, negative_control: false, patch: 16, sigmas: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub scene: SceneSource,
    pub wald: WaldConfig,
    pub methods: Vec<Method>,
    pub kernels: [usize; 3],
    pub channels: [usize; 2],
    /// Training settings, one per architecture in [`ArchKind::ALL`] order.
    pub train: [TrainConfig; 4],
    pub export_png: bool,
    /// Bands shown as red, green, blue in PNG composites.
    pub rgb: [usize; 3],
    pub transfer: TransferConfig,
    pub theory: TheoryConfig,
}

impl ExperimentConfig {
    /// Default scene, every method, desk-scale widths and per-architecture
    /// step sizes.
    pub fn new(seed: u64, output: impl Into<PathBuf>) -> Self {
        let train = ArchKind::ALL.map(|k| TrainConfig { seed, ..k.default_train_config() });
        Self {
            seed,
            output: output.into(),
            scene: SceneSource::Synthetic(crate::synthetic::default_scene()),
            wald: WaldConfig::default(),
            methods: Method::ALL.to_vec(),
            kernels: [9, 5, 5],
            channels: [32, 16],
            train,
            export_png: true,
            rgb: [2, 1, 0],
            transfer: TransferConfig::default(),
            theory: TheoryConfig::default(),
        }
    }

    pub fn train_for(&self, kind: ArchKind) -> &TrainConfig {
        &self.train[ArchKind::ALL.iter().position(|&k| k == kind).expect("listed")]
    }

    pub fn train_for_mut(&mut self, kind: ArchKind) -> &mut TrainConfig {
        &mut self.train[ArchKind::ALL.iter().position(|&k| k == kind).expect("listed")]
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        self.wald.validate()?;
        for t in &self.train {
            t.validate()?;
        }
        if let SceneSource::Synthetic(s) = &self.scene {
            s.validate()?;
        }
        if self.transfer.budget_ratio == 0 {
            return invalid("transfer.budget_ratio must be positive");
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let seed: u64 = kv.require_value("seed")?;
        let mut cfg = Self::new(seed, kv.get("output").unwrap_or("out"));
        for (key, value) in kv.entries() {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Later keys win; `train.<field>` applies to every
    /// architecture, `train.<arch>.<field>` to one.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Format(format!("cannot parse {key}={value:?}"));
        match key {
            "seed" => {
                self.seed = num(value, key)?;
                for t in &mut self.train {
                    t.seed = self.seed;
                }
            }
            "output" => self.output = PathBuf::from(value),
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| Method::parse(s).ok_or_else(|| Error::Format(format!("unknown method {s:?}"))))
                    .collect::<Result<_>>()?
            }
            "export.png" => self.export_png = parse_bool(value).ok_or_else(bad)?,
            "export.rgb" => self.rgb = list::<usize, 3>(value, key)?,
            "arch.kernels" => self.kernels = list::<usize, 3>(value, key)?,
            "arch.channels" => self.channels = list::<usize, 2>(value, key)?,
            "wald.ratio" => self.wald.ratio = num(value, key)?,
            "wald.gain" => self.wald.gaussian_nyquist_gain = num(value, key)?,
            "wald.pan_gain" => self.wald.pan_nyquist_gain = Some(num(value, key)?),
            "wald.interpolation" => self.wald.interpolation = Interpolation::parse(value).ok_or_else(bad)?,
            "transfer.checkpoint" => self.transfer.checkpoint = Some(PathBuf::from(value)),
            "transfer.remove" => {
                self.transfer.remove =
                    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s, key)).collect::<Result<_>>()?
            }
            "transfer.budget_ratio" => self.transfer.budget_ratio = num(value, key)?,
            "theory.n_init_expectation" => self.theory.n_init_expectation = num(value, key)?,
            "theory.n_init_loss" => self.theory.n_init_loss = num(value, key)?,
            "theory.negative_control" => self.theory.negative_control = parse_bool(value).ok_or_else(bad)?,
            "theory.patch" => self.theory.patch = num(value, key)?,
            "theory.sigmas" => self.theory.sigmas = num(value, key)?,
            _ if key.starts_with("scene.") => self.apply_scene(&key["scene.".len()..], value, key)?,
            _ if key.starts_with("train.") => {
                let rest = &key["train.".len()..];
                match rest.split_once('.') {
                    Some((arch, field)) => {
                        let kind = ArchKind::parse(arch).ok_or_else(|| Error::Format(format!("unknown key {key:?}")))?;
                        apply_train(self.train_for_mut(kind), field, value, key)?;
                    }
                    None => {
                        for t in &mut self.train {
                            apply_train(t, rest, value, key)?;
                        }
                    }
                }
            }
            _ => return Err(Error::Format(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    fn apply_scene(&mut self, field: &str, value: &str, key: &str) -> Result<()> {
        if field == "source" {
            self.scene = match value {
                "synthetic" => SceneSource::Synthetic(crate::synthetic::default_scene()),
                "observed" => SceneSource::Observed { dir: ".".into(), ms: "ms".into(), pan: "pan".into() },
                "triple" => SceneSource::Triple { dir: ".".into() },
                _ => return Err(Error::Format(format!("unknown scene source {value:?}"))),
            };
            return Ok(());
        }
        match &mut self.scene {
            SceneSource::Synthetic(s) => match field {
                "height" => s.height = num(value, key)?,
                "width" => s.width = num(value, key)?,
                "bands" => {
                    s.bands = num(value, key)?;
                    s.mixing = default_mixing(s.bands, s.mixing.first().map_or(3, Vec::len));
                }
                "seed" => s.seed = num(value, key)?,
                "octaves" => s.octaves = num(value, key)?,
                "base_cell" => s.base_cell = num(value, key)?,
                "regions" => s.regions = num(value, key)?,
                "region_weight" => s.region_weight = num(value, key)?,
                "pan_noise" => s.pan_noise_std = num(value, key)?,
                _ => return Err(Error::Format(format!("unknown key {key:?} for a synthetic scene"))),
            },
            SceneSource::Observed { dir, ms, pan } => match field {
                "dir" => *dir = value.into(),
                "ms" => *ms = value.into(),
                "pan" => *pan = value.into(),
                _ => return Err(Error::Format(format!("unknown key {key:?} for an observed scene"))),
            },
            SceneSource::Triple { dir } => match field {
                "dir" => *dir = value.into(),
                _ => return Err(Error::Format(format!("unknown key {key:?} for a degraded triple"))),
            },
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("seed", self.seed);
        kv.push("output", self.output.display());
        kv.push("methods", self.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","));
        match &self.scene {
            SceneSource::Synthetic(s) => {
                kv.push("scene.source", "synthetic");
                kv.push("scene.height", s.height);
                kv.push("scene.width", s.width);
                kv.push("scene.bands", s.bands);
                kv.push("scene.seed", s.seed);
                kv.push("scene.octaves", s.octaves);
                kv.push("scene.base_cell", s.base_cell);
                kv.push("scene.regions", s.regions);
                kv.push("scene.region_weight", s.region_weight);
                kv.push("scene.pan_noise", s.pan_noise_std);
            }
            SceneSource::Observed { dir, ms, pan } => {
                kv.push("scene.source", "observed");
                kv.push("scene.dir", dir.display());
                kv.push("scene.ms", ms);
                kv.push("scene.pan", pan);
            }
            SceneSource::Triple { dir } => {
                kv.push("scene.source", "triple");
                kv.push("scene.dir", dir.display());
            }
        }
        kv.push("wald.ratio", self.wald.ratio);
        kv.push("wald.gain", self.wald.gaussian_nyquist_gain);
        if let Some(g) = self.wald.pan_nyquist_gain {
            kv.push("wald.pan_gain", g);
        }
        kv.push("wald.interpolation", self.wald.interpolation.as_str());
        kv.push("arch.kernels", join(&self.kernels));
        kv.push("arch.channels", join(&self.channels));
        for (kind, t) in ArchKind::ALL.iter().zip(&self.train) {
            let p = format!("train.{}", kind.as_str());
            kv.push(format!("{p}.learning_rate"), t.learning_rate);
            kv.push(format!("{p}.iterations"), t.iterations);
            kv.push(format!("{p}.batch_size"), t.batch_size);
            kv.push(format!("{p}.patch_size"), t.patch_size);
            kv.push(format!("{p}.init"), t.init.label());
            kv.push(format!("{p}.seed"), t.seed);
        }
        kv.push("export.png", self.export_png);
        kv.push("export.rgb", join(&self.rgb));
        if let Some(c) = &self.transfer.checkpoint {
            kv.push("transfer.checkpoint", c.display());
        }
        kv.push("transfer.remove", join(&self.transfer.remove));
        kv.push("transfer.budget_ratio", self.transfer.budget_ratio);
        kv.push("theory.n_init_expectation", self.theory.n_init_expectation);
        kv.push("theory.n_init_loss", self.theory.n_init_loss);
        kv.push("theory.negative_control", self.theory.negative_control);
        kv.push("theory.patch", self.theory.patch);
        kv.push("theory.sigmas", self.theory.sigmas);
        kv
    }
}

fn apply_train(t: &mut TrainConfig, field: &str, value: &str, key: &str) -> Result<()> {
    match field {
        "learning_rate" => t.learning_rate = num(value, key)?,
        "iterations" => t.iterations = num(value, key)?,
        "batch_size" => t.batch_size = num(value, key)?,
        "patch_size" => t.patch_size = num(value, key)?,
        "seed" => t.seed = num(value, key)?,
        "init" => t.init = InitScheme::parse(value).ok_or_else(|| Error::Format(format!("unknown init {value:?}")))?,
        _ => return Err(Error::Format(format!("unknown key {key:?}"))),
    }
    Ok(())
}

fn num<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Format(format!("cannot parse {key}={value:?}")))
}

fn list<T: FromStr + Copy, const N: usize>(value: &str, key: &str) -> Result<[T; N]> {
    let v: Vec<T> = value.split(',').map(|s| num(s, key)).collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::Format(format!("{key} needs {N} comma-separated values")))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}
