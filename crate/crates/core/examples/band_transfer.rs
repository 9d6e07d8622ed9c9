//! Fine-tune a DiCNN2 trained on eight bands to the first four, against
//! DiCNN1 trained on those four from scratch.
//!
//!     cargo run --release --example band_transfer -- /tmp/transfer 3000

use std::path::PathBuf;

use dipan::arch::ArchKind;
use dipan::harness::{cmd_transfer, ExperimentConfig, Method, SceneSource};
use dipan::synthetic::SyntheticSceneConfig;

fn main() -> dipan::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "transfer_out".into()));
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3000);

    let mut cfg = ExperimentConfig::new(1, &out);
    cfg.scene = SceneSource::Synthetic(SyntheticSceneConfig::new(512, 512, 8, 5));
    cfg.methods = vec![Method::Cnn(ArchKind::Dicnn1)];
    cfg.transfer.remove = vec![4, 5, 6, 7];
    for t in &mut cfg.train {
        t.iterations = iterations;
    }
    // With no checkpoint configured, DiCNN2 is first trained on all eight bands.
    for r in cmd_transfer(&cfg)? {
        println!(
            "{:<20} {:>6} it {:>7.1} s  loss {:.4} -> {:.4}  Q {:.4}",
            r.method, r.iterations, r.train_seconds, r.initial_loss, r.final_loss, r.report.qx
        );
    }
    Ok(())
}
