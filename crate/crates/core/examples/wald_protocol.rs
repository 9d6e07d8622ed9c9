//! Degrade a synthetic observed pair under Wald's protocol and write the
//! three rasters plus PNG previews.
//!
//!     cargo run --example wald_protocol -- /tmp/wald

use std::path::PathBuf;

use dipan::harness::cmd_degrade;
use dipan::io::export_png;
use dipan::resample::WaldConfig;
use dipan::synthetic::{gen_synthetic_scene, observe, SyntheticSceneConfig};

fn main() -> dipan::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "wald_out".into()));
    let wald = WaldConfig::default();
    let (hrms, pan) = gen_synthetic_scene(&SyntheticSceneConfig::new(512, 512, 4, 7))?;
    let (ms, pan) = observe(&hrms, &pan, &wald)?;
    println!("observed MS {:?}, PAN {:?}", ms.dims(), pan.dims());

    let t = cmd_degrade(&ms, &pan, &wald, &out)?;
    println!("reference {:?}, lrms_interp {:?}, pan_low {:?}", t.reference.dims(), t.lrms_interp.dims(), t.pan_low.dims());
    export_png(t.reference.bands(), [2, 1, 0], &out.join("reference.png"))?;
    export_png(t.lrms_interp.bands(), [2, 1, 0], &out.join("lrms_interp.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
