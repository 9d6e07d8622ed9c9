use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dipan::harness::{self, ExperimentConfig};
use dipan::io::{export_png, read_stem, write_stem, KeyValues, Raster};
use dipan::resample::WaldConfig;
use dipan::synthetic::{gen_synthetic_scene, observe, SyntheticSceneConfig};
use dipan::theory;

#[derive(Parser)]
#[command(name = "dipan", version, about = "Detail-injection pansharpening toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wald-degrade an observed MS/PAN pair into lrms_interp, pan_low, reference.
    Degrade {
        /// MS raster stem (path without .hdr/.raw).
        #[arg(long)]
        ms: PathBuf,
        /// PAN raster stem; must be `ratio` times larger than the MS.
        #[arg(long)]
        pan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
    },
    /// Train, fuse and evaluate every configured method.
    Run(ConfigArgs),
    /// Fine-tune DiCNN2 on a reduced-band scene and compare with from-scratch training.
    Transfer(ConfigArgs),
    /// Run the initialization-theory checks.
    Theory {
        #[command(flatten)]
        config: ConfigArgs,
        /// Use a nonzero-mean init for the expectation check (it should fail).
        #[arg(long)]
        negative_control: bool,
    },
    /// Write a synthetic observed MS/PAN pair (and the full-resolution truth).
    GenScene {
        #[arg(long, default_value_t = 512)]
        height: usize,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        bands: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// 2–98 % stretched RGB composite of a raster.
    ExportPng {
        /// Raster stem (path without .hdr/.raw).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Bands shown as red,green,blue.
        #[arg(long, default_value = "2,1,0")]
        rgb: String,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated methods, e.g. exp,mra_glp,dicnn1.
    #[arg(long)]
    methods: Option<String>,
    /// Training iterations for every CNN.
    #[arg(long)]
    iterations: Option<usize>,
    /// Extra config entries, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> dipan::Result<ExperimentConfig> {
        let mut kv = match &self.config {
            Some(p) => KeyValues::read(p)?,
            None => KeyValues::new(),
        };
        if let Some(s) = self.seed {
            kv.push("seed", s);
        }
        if let Some(o) = &self.output {
            kv.push("output", o.display());
        }
        if let Some(m) = &self.methods {
            kv.push("methods", m);
        }
        if let Some(i) = self.iterations {
            kv.push("train.iterations", i);
        }
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| dipan::Error::InvalidArgument(format!("--set expects KEY=VALUE, got {s:?}")))?;
            kv.push(k.trim(), v.trim());
        }
        if kv.get("seed").is_none() {
            return Err(dipan::Error::InvalidArgument("a seed is required (--seed or seed= in the config)".into()));
        }
        ExperimentConfig::from_key_values(&kv)
    }
}

fn split_stem(p: &Path) -> (PathBuf, String) {
    let dir = p.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let stem = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    (dir, stem)
}

fn read(p: &Path) -> dipan::Result<Raster> {
    let (dir, stem) = split_stem(p);
    read_stem(&dir, &stem)
}

fn run(cli: Cli) -> dipan::Result<bool> {
    match cli.command {
        Command::Degrade { ms, pan, out, ratio } => {
            let t = harness::cmd_degrade(&read(&ms)?.into_ms()?, &read(&pan)?.into_pan()?, &WaldConfig::with_ratio(ratio), &out)?;
            let (h, w) = t.reference.dims();
            println!("wrote lrms_interp, pan_low, reference ({h}x{w}, {} bands) to {}", t.reference.band_count(), out.display());
            Ok(true)
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let s = harness::cmd_run(&cfg)?;
            println!("{}", harness::RESULTS_HEADER);
            for (m, r) in &s.rows {
                println!("{}", r.csv_row_metrics(m.label()));
            }
            for (m, e) in &s.errors {
                eprintln!("{} failed: {e}", m.label());
            }
            Ok(s.complete())
        }
        Command::Transfer(args) => {
            let cfg = args.load()?;
            let rows = harness::cmd_transfer(&cfg)?;
            print!("{}", std::fs::read_to_string(cfg.output.join("transfer.csv"))?);
            Ok(!rows.is_empty())
        }
        Command::Theory { config, negative_control } => {
            let mut cfg = config.load()?;
            cfg.theory.negative_control |= negative_control;
            let rows = harness::cmd_theory(&cfg)?;
            print!("{}", theory::rows_to_text(&rows));
            Ok(true)
        }
        Command::GenScene { height, width, bands, seed, ratio, out } => {
            let wald = WaldConfig::with_ratio(ratio);
            let (hrms, pan) = gen_synthetic_scene(&SyntheticSceneConfig::new(height, width, bands, seed))?;
            let (ms, pan) = observe(&hrms, &pan, &wald)?;
            std::fs::create_dir_all(&out)?;
            write_stem(&Raster::Ms(ms), &out, "ms")?;
            write_stem(&Raster::Pan(pan), &out, "pan")?;
            write_stem(&Raster::Ms(hrms), &out, "hrms_truth")?;
            println!("wrote ms, pan, hrms_truth to {}", out.display());
            Ok(true)
        }
        Command::ExportPng { input, output, rgb } => {
            let idx: Vec<usize> = rgb
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| dipan::Error::InvalidArgument(format!("bad --rgb {rgb:?}"))))
                .collect::<dipan::Result<_>>()?;
            let rgb: [usize; 3] = idx.try_into().map_err(|_| dipan::Error::InvalidArgument("--rgb needs three bands".into()))?;
            let bands = match read(&input)? {
                Raster::Ms(m) => m.into_bands(),
                Raster::Pan(p) => vec![p.into_band()],
                Raster::Detail(d) => d.bands().to_vec(),
            };
            export_png(&bands, rgb, &output)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
