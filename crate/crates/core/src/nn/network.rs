use crate::error::{invalid, shape_err, Error, Result};

use super::conv::{conv2d_backward, conv2d_forward, relu, ConvLayer};
use super::tensor::Tensor;

/// A chain of conv layers. ReLU follows every layer except the last; the
/// optional `input_skip` layer instead adds the network input to its output
/// (`A = Z + X`) with no activation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<ConvLayer>,
    input_skip: Option<usize>,
}

/// What follows a layer's convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// `A = Z + X`.
    InputSkip,
    /// Last layer: the output is `Z` itself.
    None,
}

impl NetworkParams {
    pub fn new(layers: Vec<ConvLayer>, input_skip: Option<usize>) -> Result<Self> {
        if layers.is_empty() {
            return invalid("a network needs at least one layer");
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_channels() != pair[1].in_channels() {
                return shape_err(format!(
                    "layer {l} outputs {} channels but layer {} expects {}",
                    pair[0].out_channels(),
                    l + 1,
                    pair[1].in_channels()
                ));
            }
        }
        if let Some(s) = input_skip {
            if s + 1 >= layers.len() {
                return invalid("the input-skip layer cannot be the last layer");
            }
            if layers[s].out_channels() != layers[0].in_channels() {
                return shape_err("the input-skip layer must output as many channels as the input has");
            }
        }
        Ok(Self { layers, input_skip })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &ConvLayer {
        &self.layers[l]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut ConvLayer {
        &mut self.layers[l]
    }

    pub(crate) fn replace_layer(&mut self, l: usize, layer: ConvLayer) -> Result<()> {
        let mut layers = self.layers.clone();
        layers[l] = layer;
        *self = Self::new(layers, self.input_skip)?;
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_skip(&self) -> Option<usize> {
        self.input_skip
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.layers[self.layers.len() - 1].out_channels()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::param_count).sum()
    }

    pub fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.layers.len() {
            Activation::None
        } else if self.input_skip == Some(l) {
            Activation::InputSkip
        } else {
            Activation::Relu
        }
    }

    /// Applies layer `l`'s activation to its pre-activation `z`.
    pub fn activate(&self, l: usize, z: &Tensor, input: &Tensor) -> Result<Tensor> {
        match self.activation(l) {
            Activation::Relu => Ok(relu(z)),
            Activation::InputSkip => z.add(input),
            Activation::None => Ok(z.clone()),
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.channels() != self.in_channels() {
            return shape_err(format!(
                "network expects {} input channels, got {}",
                self.in_channels(),
                x.channels()
            ));
        }
        Ok(())
    }
}

/// Every pre-activation `Z_l` and post-activation `A_l` of one forward pass.
/// `activations[l]` is `A_l` for `l < L`; the input `A_0 = X` is kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub input: Tensor,
    pub pre_activations: Vec<Tensor>,
    pub activations: Vec<Tensor>,
}

impl LayerTrace {
    /// `A_{l-1}`, the input of layer `l`.
    pub fn layer_input(&self, l: usize) -> &Tensor {
        if l == 0 {
            &self.input
        } else {
            &self.activations[l - 1]
        }
    }

    pub fn output(&self) -> &Tensor {
        self.pre_activations.last().expect("non-empty network")
    }
}

pub fn forward(params: &NetworkParams, x: &Tensor) -> Result<(Tensor, LayerTrace)> {
    params.check_input(x)?;
    let mut pre_activations = Vec::with_capacity(params.depth());
    let mut activations = Vec::with_capacity(params.depth() - 1);
    for (l, layer) in params.layers.iter().enumerate() {
        let a_prev = if l == 0 { x } else { &activations[l - 1] };
        let z = conv2d_forward(a_prev, layer)?;
        if l + 1 < params.depth() {
            activations.push(params.activate(l, &z, x)?);
        }
        pre_activations.push(z);
    }
    let out = pre_activations.last().expect("non-empty").clone();
    Ok((out, LayerTrace { input: x.clone(), pre_activations, activations }))
}

/// Output only; intermediate tensors are dropped as soon as possible.
pub fn forward_output(params: &NetworkParams, x: &Tensor) -> Result<Tensor> {
    params.check_input(x)?;
    let mut a = conv2d_forward(x, &params.layers[0])?;
    for l in 1..params.depth() {
        a = params.activate(l - 1, &a, x)?;
        a = conv2d_forward(&a, &params.layers[l])?;
    }
    Ok(a)
}

/// Which residual the loss measures (see [`loss_and_output_grad`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `Z_L − Y`.
    Pnn,
    /// `Z_L − Y`, where `Z_L` is the matching layer applied to the skip sum.
    Drpnn,
    /// `Z_L + M̃ − Y`: the network output is the injected detail.
    Dicnn,
}

impl LossKind {
    pub fn residual(self, z: f64, aux: f64, y: f64) -> f64 {
        match self {
            LossKind::Pnn | LossKind::Drpnn => z - y,
            LossKind::Dicnn => z + aux - y,
        }
    }

    pub fn needs_aux(self) -> bool {
        self == LossKind::Dicnn
    }
}

/// `loss = Σ_i ‖r_i‖²_F / N_p` and `δ_L,i = (2/N_p)·r_i` for a batch of
/// `N_p = outputs.len()` items.
pub fn loss_and_output_grad(
    kind: LossKind,
    outputs: &[Tensor],
    aux: Option<&[Tensor]>,
    targets: &[Tensor],
) -> Result<(f64, Vec<Tensor>)> {
    let n_p = outputs.len();
    if n_p == 0 || targets.len() != n_p {
        return shape_err(format!("{n_p} outputs for {} targets", targets.len()));
    }
    let aux = match (kind.needs_aux(), aux) {
        (true, Some(a)) if a.len() == n_p => Some(a),
        (true, _) => return shape_err("the detail loss needs one skip tensor per item"),
        (false, _) => None,
    };
    let scale = 2.0 / n_p as f64;
    let mut loss = 0.0;
    let mut deltas = Vec::with_capacity(n_p);
    for i in 0..n_p {
        let (z, y) = (&outputs[i], &targets[i]);
        z.check_same_shape(y, "output vs target")?;
        let mut delta = z.clone();
        match aux {
            Some(a) => {
                z.check_same_shape(&a[i], "output vs skip")?;
                for ((d, &m), &t) in delta.data_mut().iter_mut().zip(a[i].data()).zip(y.data()) {
                    let r = kind.residual(*d, m, t);
                    loss += r * r;
                    *d = scale * r;
                }
            }
            None => {
                for (d, &t) in delta.data_mut().iter_mut().zip(y.data()) {
                    let r = kind.residual(*d, 0.0, t);
                    loss += r * r;
                    *d = scale * r;
                }
            }
        }
        deltas.push(delta);
    }
    Ok((loss / n_p as f64, deltas))
}

/// Per-layer parameter gradients, shaped like [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            weights: params.layers.iter().map(|l| vec![0.0; l.weights().len()]).collect(),
            biases: params.layers.iter().map(|l| vec![0.0; l.bias().len()]).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|g| g.iter().all(|&v| v == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.biases).flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Reverse pass for one item, accumulating into `grads`. Layers below
/// `lowest` are neither differentiated nor back-propagated through.
pub fn backward_into(
    params: &NetworkParams,
    trace: &LayerTrace,
    delta_out: &Tensor,
    lowest: usize,
    grads: &mut Gradients,
) -> Result<()> {
    if trace.pre_activations.len() != params.depth() || trace.activations.len() + 1 != params.depth() {
        return Err(Error::Shape("trace does not match the network depth".into()));
    }
    delta_out.check_same_shape(trace.output(), "output sensitivity")?;
    let mut delta = delta_out.clone();
    for l in (lowest..params.depth()).rev() {
        let layer = &params.layers[l];
        let below = conv2d_backward(
            trace.layer_input(l),
            layer,
            &delta,
            &mut grads.weights[l],
            &mut grads.biases[l],
            l > lowest,
        );
        if let Some(mut d) = below {
            // δ_{l−1} = (W_l ∗ δ_l) ⊗ φ′(Z_{l−1})
            if params.activation(l - 1) == Activation::Relu {
                for (g, &z) in d.data_mut().iter_mut().zip(trace.pre_activations[l - 1].data()) {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = d;
        }
    }
    Ok(())
}

pub fn backward(params: &NetworkParams, trace: &LayerTrace, delta_out: &Tensor) -> Result<Gradients> {
    let mut g = Gradients::zeros_like(params);
    backward_into(params, trace, delta_out, 0, &mut g)?;
    Ok(g)
}

/// `θ ← θ − α·∂ℓ/∂θ` for layers `lowest..`.
pub fn sgd_step(params: &mut NetworkParams, grads: &Gradients, lr: f64, lowest: usize) {
    for l in lowest..params.depth() {
        let layer = &mut params.layers[l];
        layer.weights.iter_mut().zip(&grads.weights[l]).for_each(|(w, g)| *w -= lr * g);
        layer.bias.iter_mut().zip(&grads.biases[l]).for_each(|(b, g)| *b -= lr * g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_layer(rng: &mut ChaCha8Rng, ci: usize, co: usize, k: usize) -> ConvLayer {
        let w = (0..co * ci * k * k).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b = (0..co).map(|_| rng.random_range(-0.1..0.1)).collect();
        ConvLayer::new(ci, co, k, w, b).unwrap()
    }

    #[test]
    fn single_layer_is_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = random_layer(&mut rng, 2, 3, 3);
        let x = Tensor::from_fn(2, 4, 4, |_, _, _| rng.random());
        let net = NetworkParams::new(vec![l.clone()], None).unwrap();
        assert_eq!(forward(&net, &x).unwrap().0, conv2d_forward(&x, &l).unwrap());
        assert_eq!(forward_output(&net, &x).unwrap(), conv2d_forward(&x, &l).unwrap());
    }

    #[test]
    fn hand_set_three_layer_net() {
        // 3×3 input, three single-channel 3×3 layers with ±1 kernels.
        let x = Tensor::from_vec(1, 3, 3, vec![1.0, 2.0, 0.0, -1.0, 3.0, 1.0, 0.0, -2.0, 1.0]).unwrap();
        let ones = ConvLayer::new(1, 1, 3, vec![1.0; 9], vec![0.0]).unwrap();
        let cross = ConvLayer::new(1, 1, 3, vec![0.0, -1.0, 0.0, -1.0, 1.0, -1.0, 0.0, -1.0, 0.0], vec![0.5]).unwrap();
        let center = ConvLayer::new(1, 1, 3, vec![0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0]).unwrap();
        let net = NetworkParams::new(vec![ones, cross, center], None).unwrap();

        // scalar oracle
        let conv = |a: &[f64; 9], k: &[f64; 9], b: f64| {
            let mut out = [0.0; 9];
            for y in 0..3i32 {
                for x in 0..3i32 {
                    let mut s = b;
                    for ky in -1..=1i32 {
                        for kx in -1..=1i32 {
                            let (sy, sx) = (y + ky, x + kx);
                            if (0..3).contains(&sy) && (0..3).contains(&sx) {
                                s += k[((ky + 1) * 3 + kx + 1) as usize] * a[(sy * 3 + sx) as usize];
                            }
                        }
                    }
                    out[(y * 3 + x) as usize] = s;
                }
            }
            out
        };
        let relu9 = |a: [f64; 9]| a.map(|v| v.max(0.0));
        let x9 = [1.0, 2.0, 0.0, -1.0, 3.0, 1.0, 0.0, -2.0, 1.0];
        let a1 = relu9(conv(&x9, &[1.0; 9], 0.0));
        let a2 = relu9(conv(&a1, &[0.0, -1.0, 0.0, -1.0, 1.0, -1.0, 0.0, -1.0, 0.0], 0.5));
        let z3 = conv(&a2, &[0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(forward(&net, &x).unwrap().0.data(), &z3);
    }

    #[test]
    fn zero_input_zero_bias_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut layers = vec![random_layer(&mut rng, 2, 4, 3), random_layer(&mut rng, 4, 2, 1)];
        layers.iter_mut().for_each(|l| l.bias_mut().fill(0.0));
        let net = NetworkParams::new(layers, None).unwrap();
        let out = forward_output(&net, &Tensor::zeros(2, 5, 5)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wiring_is_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_layer(&mut rng, 2, 3, 3);
        let b = random_layer(&mut rng, 4, 1, 3);
        assert!(NetworkParams::new(vec![a.clone(), b], None).is_err());
        let c = random_layer(&mut rng, 3, 2, 3);
        assert!(NetworkParams::new(vec![a.clone(), c.clone()], Some(1)).is_err());
        let d = random_layer(&mut rng, 2, 1, 1);
        let net = NetworkParams::new(vec![a, c, d], Some(1)).unwrap();
        assert_eq!(net.activation(0), Activation::Relu);
        assert_eq!(net.activation(1), Activation::InputSkip);
        assert_eq!(net.activation(2), Activation::None);
        assert!(forward(&net, &Tensor::zeros(3, 2, 2)).is_err());
    }

    #[test]
    fn loss_optimum_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rand_t = |rng: &mut ChaCha8Rng| Tensor::from_fn(2, 3, 3, |_, _, _| rng.random_range(-1.0..1.0));
        let y = vec![rand_t(&mut rng), rand_t(&mut rng)];
        let m = vec![rand_t(&mut rng), rand_t(&mut rng)];
        let z: Vec<Tensor> = y.iter().zip(&m).map(|(y, m)| y.sub(m).unwrap()).collect();
        let (loss, deltas) = loss_and_output_grad(LossKind::Dicnn, &z, Some(&m), &y).unwrap();
        assert!(loss.abs() < 1e-30);
        assert!(deltas.iter().all(|d| d.data().iter().all(|v| v.abs() < 1e-15)));
        let (loss, _) = loss_and_output_grad(LossKind::Pnn, &y, None, &y).unwrap();
        assert_eq!(loss, 0.0);

        let z = vec![rand_t(&mut rng), rand_t(&mut rng)];
        let (loss, _) = loss_and_output_grad(LossKind::Dicnn, &z, Some(&m), &y).unwrap();
        let mut expect = 0.0;
        for i in 0..2 {
            for e in 0..18 {
                let r = z[i].data()[e] + m[i].data()[e] - y[i].data()[e];
                expect += r * r;
            }
        }
        assert!((loss - expect / 2.0).abs() < 1e-12);
        assert!(loss_and_output_grad(LossKind::Dicnn, &z, None, &y).is_err());
    }

    #[test]
    fn scalar_gradient_closed_form() {
        // one 1×1 layer on a single pixel: ∂/∂w (wx + b − y)² = 2(wx + b − y)x
        let (w, b, x, y) = (0.7, -0.2, 1.5, 0.4);
        let net = NetworkParams::new(vec![ConvLayer::new(1, 1, 1, vec![w], vec![b]).unwrap()], None).unwrap();
        let xt = Tensor::from_vec(1, 1, 1, vec![x]).unwrap();
        let (out, trace) = forward(&net, &xt).unwrap();
        let yt = Tensor::from_vec(1, 1, 1, vec![y]).unwrap();
        let (_, d) = loss_and_output_grad(LossKind::Pnn, &[out], None, &[yt]).unwrap();
        let g = backward(&net, &trace, &d[0]).unwrap();
        assert!((g.weights[0][0] - 2.0 * (w * x + b - y) * x).abs() < 1e-15);
        assert!((g.biases[0][0] - 2.0 * (w * x + b - y)).abs() < 1e-15);
    }

    #[test]
    fn zero_sensitivity_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = NetworkParams::new(vec![random_layer(&mut rng, 2, 3, 3), random_layer(&mut rng, 3, 2, 3)], None).unwrap();
        let x = Tensor::from_fn(2, 4, 4, |_, _, _| rng.random());
        let (out, trace) = forward(&net, &x).unwrap();
        let zero = Tensor::zeros(out.channels(), out.height(), out.width());
        assert!(backward(&net, &trace, &zero).unwrap().is_zero());
    }

    #[test]
    fn sgd_arithmetic() {
        let mut net = NetworkParams::new(vec![ConvLayer::new(1, 1, 1, vec![1.0], vec![0.5]).unwrap()], None).unwrap();
        let g = Gradients { weights: vec![vec![0.25]], biases: vec![vec![-1.0]] };
        let before = net.clone();
        sgd_step(&mut net, &g, 0.0, 0);
        assert_eq!(net, before);
        sgd_step(&mut net, &g, 0.5, 0);
        assert_eq!(net.layer(0).weights(), &[0.875]);
        assert_eq!(net.layer(0).bias(), &[1.0]);
        sgd_step(&mut net, &g, 0.5, 0);
        assert_eq!(net.layer(0).weights(), &[1.0 - 2.0 * 0.5 * 0.25]);
    }
}
