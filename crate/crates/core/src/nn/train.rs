use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

use super::init::InitScheme;
use super::network::{backward_into, forward, forward_output, loss_and_output_grad, sgd_step, Gradients, LossKind, NetworkParams};
use super::patches::{PatchBatch, PatchSource};
use super::tensor::Tensor;

/// Losses above this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub patch_size: usize,
    pub seed: u64,
    pub init: InitScheme,
}

impl Default for TrainConfig {
    /// Desk-scale defaults. The small-σ init keeps the first updates from
    /// switching off whole ReLU channels, which He scaling does here.
    fn default() -> Self {
        Self {
            learning_rate: 7e-4,
            iterations: 20_000,
            batch_size: 4,
            patch_size: 16,
            seed: 1,
            init: InitScheme::Gaussian { std: 0.01 },
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return invalid("learning rate must be finite and nonnegative");
        }
        if self.batch_size == 0 || self.patch_size == 0 {
            return invalid("batch and patch sizes must be positive");
        }
        Ok(())
    }
}

fn outputs_and_traces(params: &NetworkParams, batch: &PatchBatch) -> Result<(Vec<Tensor>, Vec<super::network::LayerTrace>)> {
    let mut outs = Vec::with_capacity(batch.len());
    let mut traces = Vec::with_capacity(batch.len());
    for p in batch.items() {
        let (o, t) = forward(params, &p.input)?;
        outs.push(o);
        traces.push(t);
    }
    Ok((outs, traces))
}

/// Loss over a batch without gradients.
pub fn batch_loss(params: &NetworkParams, kind: LossKind, batch: &PatchBatch) -> Result<f64> {
    let outs = batch.items().iter().map(|p| forward_output(params, &p.input)).collect::<Result<Vec<_>>>()?;
    let skips = batch.skips();
    Ok(loss_and_output_grad(kind, &outs, skips.as_deref(), &batch.targets())?.0)
}

/// Loss and parameter gradients for layers `lowest..` (others stay zero).
pub fn batch_gradients(params: &NetworkParams, kind: LossKind, batch: &PatchBatch, lowest: usize) -> Result<(f64, Gradients)> {
    let (outs, traces) = outputs_and_traces(params, batch)?;
    let skips = batch.skips();
    let (loss, deltas) = loss_and_output_grad(kind, &outs, skips.as_deref(), &batch.targets())?;
    let mut grads = Gradients::zeros_like(params);
    for (trace, delta) in traces.iter().zip(&deltas) {
        backward_into(params, trace, delta, lowest, &mut grads)?;
    }
    Ok((loss, grads))
}

/// Plain SGD on random patches; returns the per-iteration batch loss.
/// Only layers `lowest..` are updated.
pub fn train_network(
    params: &mut NetworkParams,
    kind: LossKind,
    source: &PatchSource,
    cfg: &TrainConfig,
    lowest: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    // Sampling stream is independent of the init stream drawn from the same seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c4e5);
    let mut curve = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let batch = source.sample(&mut rng, cfg.batch_size, cfg.patch_size)?;
        let (loss, grads) = batch_gradients(params, kind, &batch, lowest)?;
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { iteration: it, loss });
        }
        curve.push(loss);
        sgd_step(params, &grads, cfg.learning_rate, lowest);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::conv::ConvLayer;
    use crate::nn::init::{init_params, LayerShape};
    use rand::Rng;

    /// Target is a fixed 1×1 conv of the input; a 1×1 linear net can match it.
    fn toy_source() -> PatchSource {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Tensor::from_fn(2, 12, 12, |_, _, _| rng.random());
        let truth = ConvLayer::new(2, 1, 1, vec![0.6, -0.3], vec![0.1]).unwrap();
        let y = crate::nn::conv::conv2d_forward(&x, &truth).unwrap();
        PatchSource::new(x, None, y).unwrap()
    }

    #[test]
    fn toy_linear_target_is_learned() {
        let src = toy_source();
        let mut net = init_params(&[LayerShape::new(2, 1, 1)], None, InitScheme::He, 3).unwrap();
        let cfg = TrainConfig { learning_rate: 0.02, iterations: 5000, batch_size: 2, patch_size: 4, ..Default::default() };
        let curve = train_network(&mut net, LossKind::Pnn, &src, &cfg, 0).unwrap();
        assert!(*curve.last().unwrap() < 1e-6, "final loss {}", curve.last().unwrap());
        let full = src.extract(12, 12, 0).unwrap();
        assert!(batch_loss(&net, LossKind::Pnn, &full).unwrap() < 1e-6);
    }

    #[test]
    fn zero_learning_rate_is_flat_and_seeded_runs_repeat() {
        let src = toy_source();
        let shapes = [LayerShape::new(2, 3, 3), LayerShape::new(3, 1, 3)];
        let net0 = init_params(&shapes, None, InitScheme::He, 5).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, iterations: 20, batch_size: 1, patch_size: 12, ..Default::default() };
        let mut net = net0.clone();
        let curve = train_network(&mut net, LossKind::Pnn, &src, &cfg, 0).unwrap();
        assert!(curve.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(net, net0);

        let cfg = TrainConfig { learning_rate: 0.01, iterations: 30, patch_size: 6, ..cfg };
        let (mut a, mut b) = (net0.clone(), net0.clone());
        let ca = train_network(&mut a, LossKind::Pnn, &src, &cfg, 0).unwrap();
        let cb = train_network(&mut b, LossKind::Pnn, &src, &cfg, 0).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_layers_stay_put() {
        let src = toy_source();
        let shapes = [LayerShape::new(2, 3, 3), LayerShape::new(3, 1, 3)];
        let mut net = init_params(&shapes, None, InitScheme::He, 6).unwrap();
        let before = net.clone();
        let cfg = TrainConfig { learning_rate: 0.01, iterations: 10, batch_size: 2, patch_size: 6, ..Default::default() };
        train_network(&mut net, LossKind::Pnn, &src, &cfg, 1).unwrap();
        assert_eq!(net.layer(0), before.layer(0));
        assert_ne!(net.layer(1), before.layer(1));
    }

    #[test]
    fn divergence_is_reported() {
        let src = toy_source();
        let mut net = init_params(&[LayerShape::new(2, 1, 3)], None, InitScheme::He, 7).unwrap();
        let cfg = TrainConfig { learning_rate: 50.0, iterations: 200, batch_size: 1, patch_size: 12, ..Default::default() };
        assert!(matches!(train_network(&mut net, LossKind::Pnn, &src, &cfg, 0), Err(Error::Diverged { .. })));
    }
}
