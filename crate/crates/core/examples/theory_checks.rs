//! The initialization analysis at a small scale: trace statistics on the
//! corpus, the zero-expectation Monte Carlo, the initial-loss ordering and
//! the output-sensitivity forms.

use dipan::arch::{ArchKind, ArchSpec};
use dipan::nn::{InitScheme, Tensor};
use dipan::resample::WaldConfig;
use dipan::synthetic::{default_corpus, default_scene, synthetic_triple, SyntheticSceneConfig};
use dipan::theory::{self, InitLossConfig};

fn main() -> dipan::Result<()> {
    let wald = WaldConfig::default();
    let mut rows = Vec::new();
    for s in default_corpus().into_iter().take(3) {
        let t = synthetic_triple(&s, &wald)?;
        rows.extend(theory::trace_rows(&theory::trace_stats(&t.lrms_interp, &t.reference, 16, &format!("seed{}", s.seed))?));
    }

    let small = synthetic_triple(&SyntheticSceneConfig::new(64, 64, 4, 11), &wald)?;
    let x = Tensor::from_ms(&small.lrms_interp).concat(&Tensor::from_pan(&small.pan_low))?;
    let y = Tensor::from_ms(&small.reference);
    let spec = ArchSpec::desk(ArchKind::Dicnn1, 4);
    rows.push(theory::expectation_row("dicnn1", &theory::expectation_zero_check(&spec, &x, &y, 500, InitScheme::He, 1)?));
    rows.push(theory::expectation_row(
        "dicnn1_shifted",
        &theory::expectation_zero_check(&spec, &x, &y, 500, InitScheme::ShiftedHe { mean: 0.05 }, 1)?,
    ));

    let cfg = InitLossConfig { n_init: 100, ..InitLossConfig::default() };
    rows.extend(theory::init_loss_rows(&theory::initial_loss_compare(&synthetic_triple(&default_scene(), &wald)?, &cfg)?, 4.0));

    for kind in ArchKind::ALL {
        rows.push(theory::sensitivity_row(&theory::sensitivity_form_check(kind, 4, 8, 2, 5)?));
    }
    print!("{}", theory::rows_to_text(&rows));
    Ok(())
}
