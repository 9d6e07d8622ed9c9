//! Backprop against central differences for every architecture, every
//! parameter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dipan::arch::{ArchKind, ArchSpec};
use dipan::nn::gradcheck::central_difference_check;
use dipan::nn::{init_params, InitScheme, PatchSource};
use dipan::synthetic::{default_scene, synthetic_triple};

fn main() -> dipan::Result<()> {
    let t = synthetic_triple(&default_scene(), &Default::default())?;
    for kind in ArchKind::ALL {
        let spec = ArchSpec::desk(kind, 4);
        let params = init_params(&spec.layer_shapes(), spec.input_skip(), InitScheme::He, 3)?;
        let src = PatchSource::from_images(&t.lrms_interp, &t.pan_low, &t.reference, kind.layout())?;
        let batch = src.sample(&mut ChaCha8Rng::seed_from_u64(1), 2, 16)?;
        let rep = central_difference_check(&params, kind.loss(), &batch, 1e-5)?;
        println!(
            "{:<7} {:>6} params  max rel err {:.2e}  step shrinks {}  unresolved kinks {}",
            kind.label(),
            rep.checked,
            rep.max_relative_error,
            rep.step_reductions,
            rep.unresolved_kinks
        );
    }
    Ok(())
}
