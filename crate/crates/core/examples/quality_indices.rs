//! The four reduced-resolution indices on a few hand-made distortions.

use dipan::metrics::{evaluate, QualityConfig};
use dipan::synthetic::{default_scene, synthetic_triple};
use dipan::{MsImage, Role};

fn main() -> dipan::Result<()> {
    let t = synthetic_triple(&default_scene(), &Default::default())?;
    let q = QualityConfig::new(4);
    let r = &t.reference;

    let scaled = MsImage::new(r.bands().iter().map(|b| b.map(|v| 1.05 * v)).collect::<dipan::Result<_>>()?, Role::HrmsPred)?;
    let offset = MsImage::new(
        r.bands().iter().enumerate().map(|(i, b)| b.map(|v| v + 0.01 * i as f64)).collect::<dipan::Result<_>>()?,
        Role::HrmsPred,
    )?;

    println!("{:<14} {:>9} {:>9} {:>9} {:>9}", "fused", "Q", "SAM", "ERGAS", "SCC");
    for (name, img) in [("reference", r), ("scaled 5%", &scaled), ("band offsets", &offset), ("interpolated", &t.lrms_interp)] {
        let m = evaluate(img, r, &q)?;
        println!("{name:<14} {:>9.5} {:>9.4} {:>9.4} {:>9.5}", m.qx, m.sam_degrees, m.ergas, m.scc);
    }
    Ok(())
}
