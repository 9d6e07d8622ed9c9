//! The three classical detail injectors against plain interpolation.

use dipan::classical::{pansharpen, DetailExtractorSpec, ExtractorKind};
use dipan::metrics::{evaluate, QualityConfig, QualityReport};
use dipan::resample::WaldConfig;
use dipan::synthetic::{default_scene, synthetic_triple};

fn main() -> dipan::Result<()> {
    let wald = WaldConfig::default();
    let t = synthetic_triple(&default_scene(), &wald)?;
    let q = QualityConfig::new(wald.ratio);

    println!("{}", QualityReport::CSV_HEADER);
    println!("{}", evaluate(&t.lrms_interp, &t.reference, &q)?.csv_row("EXP"));
    for kind in [ExtractorKind::CsIntensity, ExtractorKind::MraAtwt, ExtractorKind::MraGlp] {
        let start = std::time::Instant::now();
        let fused = pansharpen(&t.lrms_interp, &t.pan_low, &DetailExtractorSpec::default_for(kind, wald))?;
        let rep = evaluate(&fused, &t.reference, &q)?.with_elapsed(start.elapsed().as_secs_f64());
        println!("{}", rep.csv_row(kind.as_str()));
    }
    Ok(())
}
