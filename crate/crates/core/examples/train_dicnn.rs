//! Train one architecture from scratch, checkpoint it, reload it and fuse.
//!
//!     cargo run --release --example train_dicnn -- dicnn1 2000

use dipan::arch::{self, ArchKind, ArchSpec, Model};
use dipan::metrics::{evaluate, QualityConfig};
use dipan::synthetic::{default_scene, synthetic_triple};

fn main() -> dipan::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().and_then(|s| ArchKind::parse(&s)).unwrap_or(ArchKind::Dicnn1);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);

    let t = synthetic_triple(&default_scene(), &Default::default())?;
    let cfg = dipan::nn::TrainConfig { iterations, ..kind.default_train_config() };
    let mut model = arch::build(ArchSpec::desk(kind, 4), &cfg)?;
    let before = arch::image_loss(&model, &t.lrms_interp, &t.pan_low, &t.reference, cfg.patch_size)?;
    let rep = arch::train(&mut model, &t.lrms_interp, &t.pan_low, &t.reference, &cfg)?;
    let after = arch::image_loss(&model, &t.lrms_interp, &t.pan_low, &t.reference, cfg.patch_size)?;
    println!("{}: {iterations} iterations in {:.1} s, loss {before:.4} -> {after:.4}", kind.label(), rep.seconds);

    let dir = tempfile_dir();
    let (h, p) = (dir.join("model.ckpt"), dir.join("model.params"));
    model.save(&h, &p, iterations, cfg.seed)?;
    let (reloaded, meta) = Model::load(&h, &p)?;
    println!("reloaded checkpoint at iteration {}", meta.iteration);

    let q = QualityConfig::new(4);
    println!("EXP   {}", evaluate(&t.lrms_interp, &t.reference, &q)?.csv_row_metrics("").trim_start_matches(','));
    println!("model {}", evaluate(&arch::predict(&reloaded, &t.lrms_interp, &t.pan_low)?, &t.reference, &q)?.csv_row_metrics("").trim_start_matches(','));
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join("dipan_train_example");
    std::fs::create_dir_all(&d).unwrap();
    d
}
