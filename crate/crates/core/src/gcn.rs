//! Residual graph convolutional network over trajectory coefficients.
//!
//! Every layer computes `sigma(A * H * W + 1*b)` where both the adjacency
//! `A` (node mixing) and the weights `W` (feature mixing) are learnable.
//! The network is an encoding layer, a stack of two-layer residual blocks,
//! and a decoding layer. Gradients are hand-derived per layer and
//! accumulated into the shared [`ParameterStore`]; a forward tape carries
//! the per-layer caches the backward pass needs.

use crate::error::{Error, Result};
use crate::matrix::{tanh_map, Matrix};
use crate::params::{ParamId, ParameterStore};
use crate::rng::{uniform_init, xavier_init, SeededRng};

/// Scale of the uniform init for learnable adjacencies. Small enough that
/// initial cross-node mixing is near zero, keeping the untrained network
/// close to the zero-velocity baseline.
pub const ADJACENCY_INIT_BOUND: f64 = 1e-2;

/// Default hidden width of the graph convolutional layers.
pub const DEFAULT_WIDTH: usize = 256;

/// Default number of residual blocks.
pub const DEFAULT_BLOCKS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

/// One graph convolutional layer. `adj` is `nodes x nodes`, `weight` is
/// `f_in x f_out`, `bias` (when present) is `1 x f_out` and is added to
/// every node row. When `train_adj` is false the adjacency is held fixed
/// and its gradient slot stays exactly zero.
#[derive(Debug, Clone)]
pub struct GraphConvLayer {
    pub adj: ParamId,
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub activation: Activation,
    pub train_adj: bool,
}

/// Two graph convolutional layers with a skip connection around them.
#[derive(Debug, Clone)]
pub struct ResidualBlock {
    pub layer1: GraphConvLayer,
    pub layer2: GraphConvLayer,
}

/// How the adjacency matrices of all layers are obtained.
#[derive(Debug, Clone)]
pub enum Connectivity {
    /// A distinct dense adjacency per layer, trained with everything else.
    Learned,
    /// A fixed matrix shared by every layer; only weights and biases train.
    Fixed(Matrix),
}

/// Architecture description for [`MotionGcn::new`].
#[derive(Debug, Clone)]
pub struct ModelConfig {
    /// Graph nodes; one per pose channel.
    pub nodes: usize,
    /// Feature width of the encoder input (coefficients per node).
    pub f_in: usize,
    /// Feature width of the decoder output.
    pub f_out: usize,
    /// Hidden width of all interior layers.
    pub width: usize,
    /// Number of residual blocks between encoder and decoder.
    pub blocks: usize,
    pub use_bias: bool,
    pub connectivity: Connectivity,
}

impl ModelConfig {
    pub fn new(nodes: usize, coeffs: usize, width: usize, blocks: usize) -> Self {
        ModelConfig {
            nodes,
            f_in: coeffs,
            f_out: coeffs,
            width,
            blocks,
            use_bias: true,
            connectivity: Connectivity::Learned,
        }
    }
}

/// The full prediction network plus its parameter store.
#[derive(Debug, Clone)]
pub struct MotionGcn {
    nodes: usize,
    f_in: usize,
    f_out: usize,
    width: usize,
    encoder: GraphConvLayer,
    blocks: Vec<ResidualBlock>,
    decoder: GraphConvLayer,
    params: ParameterStore,
}

/// Cached activations of one executed layer.
#[derive(Debug, Clone)]
struct LayerRecord {
    /// Layer input H.
    input: Matrix,
    /// Node-mixed input A*H.
    mixed: Matrix,
    /// Layer output Y = sigma(A*H*W + 1*b).
    output: Matrix,
}

/// Per-layer caches from one forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTape {
    records: Vec<LayerRecord>,
    nodes: usize,
    f_in: usize,
}

impl ForwardTape {
    /// Output of the final layer recorded on this tape.
    pub fn output(&self) -> &Matrix {
        &self.records.last().expect("tape has at least the encoder record").output
    }
}

fn layer_forward_impl(
    h: &Matrix,
    layer: &GraphConvLayer,
    params: &ParameterStore,
) -> Result<(Matrix, LayerRecord)> {
    let adj = params.value(layer.adj);
    let weight = params.value(layer.weight);
    let mixed = adj.matmul(h)?;
    let mut pre = mixed.matmul(weight)?;
    if let Some(bias) = layer.bias {
        pre = pre.add_row_broadcast(params.value(bias))?;
    }
    let out = match layer.activation {
        Activation::Tanh => tanh_map(&pre),
        Activation::Identity => pre,
    };
    let record = LayerRecord { input: h.clone(), mixed, output: out.clone() };
    Ok((out, record))
}

/// Backward through one layer. Accumulates parameter gradients into the
/// store and returns dL/dH.
///
/// With Z = A*H*W + 1*b, Y = sigma(Z) and G = dL/dY:
///   Gz   = G hadamard sigma'(Z)      (tanh: sigma'(Z) = 1 - Y^2)
///   dW   = (A*H)^T * Gz
///   db   = column sums of Gz
///   dA   = (Gz * W^T) * H^T
///   dH   = A^T * (Gz * W^T)
fn layer_backward_impl(
    record: &LayerRecord,
    layer: &GraphConvLayer,
    params: &mut ParameterStore,
    grad_out: &Matrix,
) -> Result<Matrix> {
    let grad_pre = match layer.activation {
        Activation::Tanh => {
            let deriv = record.output.map(|y| 1.0 - y * y);
            grad_out.hadamard(&deriv)?
        }
        Activation::Identity => grad_out.clone(),
    };
    let weight_t = params.value(layer.weight).transpose();
    let grad_mixed = grad_pre.matmul(&weight_t)?; // Gz * W^T

    let grad_w = record.mixed.transpose().matmul(&grad_pre)?;
    params.accumulate_grad(layer.weight, &grad_w)?;

    if let Some(bias) = layer.bias {
        params.accumulate_grad(bias, &grad_pre.column_sums())?;
    }

    if layer.train_adj {
        let grad_a = grad_mixed.matmul(&record.input.transpose())?;
        params.accumulate_grad(layer.adj, &grad_a)?;
    }

    let adj_t = params.value(layer.adj).transpose();
    adj_t.matmul(&grad_mixed)
}

/// Standalone single-layer forward over an explicit store, the building
/// block the full model stacks.
pub fn layer_forward(
    h: &Matrix,
    layer: &GraphConvLayer,
    params: &ParameterStore,
) -> Result<Matrix> {
    layer_forward_impl(h, layer, params).map(|(out, _)| out)
}

impl MotionGcn {
    /// Builds the network with all parameters zero-initialized; call
    /// [`init_parameters`](Self::init_parameters) before training.
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        if cfg.nodes == 0 || cfg.f_in == 0 || cfg.f_out == 0 || cfg.width == 0 {
            return Err(Error::config("model dimensions must be positive".to_string()));
        }
        if let Connectivity::Fixed(a) = &cfg.connectivity {
            if a.shape() != (cfg.nodes, cfg.nodes) {
                return Err(Error::config(format!(
                    "fixed adjacency is {}x{} but the model has {} nodes",
                    a.rows(),
                    a.cols(),
                    cfg.nodes
                )));
            }
        }
        let mut params = ParameterStore::new();
        let make_layer = |name: &str,
                              f_in: usize,
                              f_out: usize,
                              activation: Activation,
                              params: &mut ParameterStore|
         -> Result<GraphConvLayer> {
            let (adj_value, train_adj) = match &cfg.connectivity {
                Connectivity::Learned => (Matrix::zeros(cfg.nodes, cfg.nodes), true),
                Connectivity::Fixed(a) => (a.clone(), false),
            };
            let adj = params.add(&format!("{name}.A"), adj_value)?;
            let weight = params.add(&format!("{name}.W"), Matrix::zeros(f_in, f_out))?;
            let bias = if cfg.use_bias {
                Some(params.add(&format!("{name}.b"), Matrix::zeros(1, f_out))?)
            } else {
                None
            };
            Ok(GraphConvLayer { adj, weight, bias, activation, train_adj })
        };

        let encoder = make_layer("enc", cfg.f_in, cfg.width, Activation::Tanh, &mut params)?;
        let mut blocks = Vec::with_capacity(cfg.blocks);
        for b in 0..cfg.blocks {
            let layer1 = make_layer(
                &format!("block{b}.l1"),
                cfg.width,
                cfg.width,
                Activation::Tanh,
                &mut params,
            )?;
            let layer2 = make_layer(
                &format!("block{b}.l2"),
                cfg.width,
                cfg.width,
                Activation::Tanh,
                &mut params,
            )?;
            blocks.push(ResidualBlock { layer1, layer2 });
        }
        // The decoder emits residual coefficients, which are unbounded, so
        // it stays linear.
        let decoder = make_layer("dec", cfg.width, cfg.f_out, Activation::Identity, &mut params)?;

        Ok(MotionGcn {
            nodes: cfg.nodes,
            f_in: cfg.f_in,
            f_out: cfg.f_out,
            width: cfg.width,
            encoder,
            blocks,
            decoder,
            params,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn f_in(&self) -> usize {
        self.f_in
    }

    pub fn f_out(&self) -> usize {
        self.f_out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    /// Ids of every adjacency entry, in layer order.
    pub fn adjacency_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.encoder.adj];
        for b in &self.blocks {
            ids.push(b.layer1.adj);
            ids.push(b.layer2.adj);
        }
        ids.push(self.decoder.adj);
        ids
    }

    fn layers(&self) -> Vec<&GraphConvLayer> {
        let mut layers = vec![&self.encoder];
        for b in &self.blocks {
            layers.push(&b.layer1);
            layers.push(&b.layer2);
        }
        layers.push(&self.decoder);
        layers
    }

    /// Xavier weights, uniform +-1e-2 adjacencies, zero biases; the decoder
    /// weight and bias are set to exactly zero so the untrained network is
    /// the identity on coefficients, i.e. the zero-velocity baseline after
    /// composition.
    pub fn init_parameters(&mut self, rng: &mut SeededRng) {
        let layers: Vec<GraphConvLayer> = self.layers().into_iter().cloned().collect();
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.train_adj {
                let (rows, cols) = self.params.value(layer.adj).shape();
                *self.params.value_mut(layer.adj) =
                    uniform_init(rows, cols, ADJACENCY_INIT_BOUND, rng);
            }
            let (rows, cols) = self.params.value(layer.weight).shape();
            if i == last {
                *self.params.value_mut(layer.weight) = Matrix::zeros(rows, cols);
            } else {
                *self.params.value_mut(layer.weight) = xavier_init(rows, cols, rng);
            }
            if let Some(bias) = layer.bias {
                let (rows, cols) = self.params.value(bias).shape();
                *self.params.value_mut(bias) = Matrix::zeros(rows, cols);
            }
        }
    }

    /// Runs the network on a `nodes x f_in` input and returns the residual
    /// output together with the tape the backward pass consumes.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardTape)> {
        if input.shape() != (self.nodes, self.f_in) {
            return Err(Error::shape(format!(
                "model expects {}x{} input, got {}x{}",
                self.nodes,
                self.f_in,
                input.rows(),
                input.cols()
            )));
        }
        let mut records = Vec::with_capacity(2 + 2 * self.blocks.len());
        let (mut h, rec) = layer_forward_impl(input, &self.encoder, &self.params)?;
        records.push(rec);
        for block in &self.blocks {
            let (y1, rec1) = layer_forward_impl(&h, &block.layer1, &self.params)?;
            records.push(rec1);
            let (y2, rec2) = layer_forward_impl(&y1, &block.layer2, &self.params)?;
            records.push(rec2);
            h = h.add(&y2)?;
        }
        let (out, rec) = layer_forward_impl(&h, &self.decoder, &self.params)?;
        records.push(rec);
        Ok((out, ForwardTape { records, nodes: self.nodes, f_in: self.f_in }))
    }

    /// Accumulates dLoss/dtheta for every parameter given dLoss/doutput,
    /// and returns dLoss/dinput.
    pub fn backward(&mut self, tape: &ForwardTape, grad_out: &Matrix) -> Result<Matrix> {
        let expected_records = 2 + 2 * self.blocks.len();
        if tape.records.len() != expected_records
            || tape.nodes != self.nodes
            || tape.f_in != self.f_in
        {
            return Err(Error::state(
                "forward tape does not match this model; rerun forward first".to_string(),
            ));
        }
        if grad_out.shape() != (self.nodes, self.f_out) {
            return Err(Error::shape(format!(
                "gradient is {}x{}, model output is {}x{}",
                grad_out.rows(),
                grad_out.cols(),
                self.nodes,
                self.f_out
            )));
        }

        let decoder = self.decoder.clone();
        let blocks = self.blocks.clone();
        let encoder = self.encoder.clone();

        let mut idx = tape.records.len() - 1;
        let mut grad =
            layer_backward_impl(&tape.records[idx], &decoder, &mut self.params, grad_out)?;
        for block in blocks.iter().rev() {
            // out = in + l2(l1(in)): the skip adds grad straight through.
            let skip = grad.clone();
            idx -= 1;
            grad = layer_backward_impl(&tape.records[idx], &block.layer2, &mut self.params, &grad)?;
            idx -= 1;
            grad = layer_backward_impl(&tape.records[idx], &block.layer1, &mut self.params, &grad)?;
            grad.add_assign(&skip)?;
        }
        idx -= 1;
        debug_assert_eq!(idx, 0);
        layer_backward_impl(&tape.records[idx], &encoder, &mut self.params, &grad)
    }

    /// Exact scalar parameter count of this architecture.
    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Parameter count excluding frozen adjacencies.
    pub fn trainable_param_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|layer| {
                let mut n = self.params.value(layer.weight).len();
                if layer.train_adj {
                    n += self.params.value(layer.adj).len();
                }
                if let Some(bias) = layer.bias {
                    n += self.params.value(bias).len();
                }
                n
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(nodes: usize, coeffs: usize, width: usize, blocks: usize) -> ModelConfig {
        ModelConfig::new(nodes, coeffs, width, blocks)
    }

    fn layer_on_store(
        adj: Matrix,
        weight: Matrix,
        bias: Option<Matrix>,
        activation: Activation,
    ) -> (GraphConvLayer, ParameterStore) {
        let mut params = ParameterStore::new();
        let adj = params.add("A", adj).unwrap();
        let weight = params.add("W", weight).unwrap();
        let bias = bias.map(|b| params.add("b", b).unwrap());
        (GraphConvLayer { adj, weight, bias, activation, train_adj: true }, params)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let h = Matrix::from_rows(&[vec![0.3, -1.2], vec![2.0, 0.1]]).unwrap();
        let (layer, params) = layer_on_store(
            Matrix::identity(2),
            Matrix::identity(2),
            Some(Matrix::zeros(1, 2)),
            Activation::Identity,
        );
        let out = layer_forward(&h, &layer, &params).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn zero_input_zero_bias_gives_zero_output() {
        let (layer, params) = layer_on_store(
            Matrix::from_vec(2, 2, vec![0.5, -0.25, 1.0, 0.75]).unwrap(),
            Matrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap(),
            Some(Matrix::zeros(1, 2)),
            Activation::Tanh,
        );
        let out = layer_forward(&Matrix::zeros(2, 2), &layer, &params).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn layer_matches_hand_computation() {
        // A = [[1, 2], [0, 1]], H = [[1, 0], [0, 1]], W = [[0.5, 0], [0, 0.25]]
        // A*H*W = [[0.5, 0.5], [0, 0.25]], then tanh elementwise.
        let (layer, params) = layer_on_store(
            Matrix::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap(),
            Matrix::from_vec(2, 2, vec![0.5, 0.0, 0.0, 0.25]).unwrap(),
            None,
            Activation::Tanh,
        );
        let out = layer_forward(&Matrix::identity(2), &layer, &params).unwrap();
        let expect = [0.5_f64.tanh(), 0.5_f64.tanh(), 0.0, 0.25_f64.tanh()];
        for (o, e) in out.data().iter().zip(&expect) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn model_with_zero_parameters_outputs_zero() {
        let model = MotionGcn::new(&tiny_config(3, 4, 8, 2)).unwrap();
        let input = Matrix::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let (out, _) = model.forward(&input).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn zero_decoder_annihilates_any_input() {
        let mut model = MotionGcn::new(&tiny_config(3, 4, 8, 1)).unwrap();
        let mut rng = SeededRng::new(17);
        model.init_parameters(&mut rng);
        let input =
            Matrix::from_vec(3, 4, (0..12).map(|i| (i as f64).sin()).collect()).unwrap();
        let (out, _) = model.forward(&input).unwrap();
        assert_eq!(out.max_abs(), 0.0, "decoder weights start at zero");
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let mut a = MotionGcn::new(&tiny_config(4, 5, 8, 2)).unwrap();
        let mut b = MotionGcn::new(&tiny_config(4, 5, 8, 2)).unwrap();
        a.init_parameters(&mut SeededRng::new(99));
        b.init_parameters(&mut SeededRng::new(99));
        for (ea, eb) in a.params().iter().zip(b.params().iter()) {
            assert_eq!(ea.value, eb.value, "parameter {}", ea.name);
        }
        for id in a.adjacency_ids() {
            assert!(a.params().value(id).max_abs() <= ADJACENCY_INIT_BOUND);
        }
    }

    /// Independent straight-line re-implementation of the same equations,
    /// used as a duplicate-implementation oracle for the model forward.
    fn straight_line_forward(model: &MotionGcn, input: &Matrix) -> Matrix {
        let p = model.params();
        let layer = |layer: &GraphConvLayer, h: &Matrix, tanh: bool| -> Matrix {
            let mut z = p
                .value(layer.adj)
                .matmul(h)
                .unwrap()
                .matmul(p.value(layer.weight))
                .unwrap();
            if let Some(b) = layer.bias {
                z = z.add_row_broadcast(p.value(b)).unwrap();
            }
            if tanh {
                z.map(f64::tanh)
            } else {
                z
            }
        };
        let mut h = layer(&model.encoder, input, true);
        for b in &model.blocks {
            let y = layer(&b.layer2, &layer(&b.layer1, &h, true), true);
            h = h.add(&y).unwrap();
        }
        layer(&model.decoder, &h, false)
    }

    #[test]
    fn forward_matches_duplicate_implementation() {
        let mut model = MotionGcn::new(&tiny_config(3, 4, 8, 1)).unwrap();
        let mut rng = SeededRng::new(31);
        model.init_parameters(&mut rng);
        // Give the decoder non-zero weights so the oracle sees every layer.
        let dec_w = model.decoder.weight;
        *model.params_mut().value_mut(dec_w) = xavier_init(8, 4, &mut rng);
        let input =
            Matrix::from_vec(3, 4, (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect())
                .unwrap();
        let (out, _) = model.forward(&input).unwrap();
        let oracle = straight_line_forward(&model, &input);
        assert!(out.max_abs_diff(&oracle).unwrap() < 1e-12);
    }

    #[test]
    fn zero_output_gradient_means_zero_parameter_gradients() {
        let mut model = MotionGcn::new(&tiny_config(3, 4, 8, 1)).unwrap();
        model.init_parameters(&mut SeededRng::new(12));
        let input = Matrix::from_vec(3, 4, vec![0.2; 12]).unwrap();
        let (_, tape) = model.forward(&input).unwrap();
        model.backward(&tape, &Matrix::zeros(3, 4)).unwrap();
        assert_eq!(model.params().global_grad_norm(), 0.0);
    }

    #[test]
    fn single_layer_gradients_match_finite_differences() {
        // One identity-activation layer; scalar loss = sum of outputs.
        let (layer, mut params) = layer_on_store(
            Matrix::from_vec(2, 2, vec![0.3, -0.7, 1.1, 0.4]).unwrap(),
            Matrix::from_vec(2, 3, vec![0.5, -0.2, 0.8, 0.1, 0.9, -0.6]).unwrap(),
            Some(Matrix::from_vec(1, 3, vec![0.05, -0.1, 0.2]).unwrap()),
            Activation::Identity,
        );
        let h = Matrix::from_vec(2, 2, vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let grad_out = Matrix::from_vec(2, 3, vec![1.0; 6]).unwrap();

        let (_, record) = layer_forward_impl(&h, &layer, &params).unwrap();
        layer_backward_impl(&record, &layer, &mut params, &grad_out).unwrap();

        let eps = 1e-5;
        for id in params.ids() {
            let n = params.value(id).len();
            for i in 0..n {
                let orig = params.value(id).data()[i];
                params.value_mut(id).data_mut()[i] = orig + eps;
                let up: f64 = layer_forward(&h, &layer, &params).unwrap().data().iter().sum();
                params.value_mut(id).data_mut()[i] = orig - eps;
                let down: f64 = layer_forward(&h, &layer, &params).unwrap().data().iter().sum();
                params.value_mut(id).data_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = params.grad(id).data()[i];
                let rel = (numeric - analytic).abs()
                    / numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(rel < 1e-4, "entry {i}: analytic {analytic} numeric {numeric}");
            }
        }
    }

    #[test]
    fn block_with_zero_weights_maps_input_to_itself() {
        let mut params = ParameterStore::new();
        let adj = params.add("A", Matrix::identity(3)).unwrap();
        let weight = params.add("W", Matrix::zeros(4, 4)).unwrap();
        let l = GraphConvLayer {
            adj,
            weight,
            bias: None,
            activation: Activation::Tanh,
            train_adj: true,
        };
        let h = Matrix::from_vec(3, 4, (0..12).map(|i| i as f64).collect()).unwrap();
        let y1 = layer_forward(&h, &l, &params).unwrap();
        let y2 = layer_forward(&y1, &l, &params).unwrap();
        let out = h.add(&y2).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn permutation_equivariance_of_single_layer() {
        let mut rng = SeededRng::new(2);
        let k = 5;
        let f = 3;
        let h = uniform_init(k, f, 1.0, &mut rng);
        let a = uniform_init(k, k, 1.0, &mut rng);
        let w = uniform_init(f, f, 1.0, &mut rng);
        let b = uniform_init(1, f, 1.0, &mut rng);

        // permutation matrix that rotates node indices by one
        let mut p = Matrix::zeros(k, k);
        for i in 0..k {
            p.set(i, (i + 1) % k, 1.0);
        }

        let (layer, params) =
            layer_on_store(a.clone(), w.clone(), Some(b.clone()), Activation::Tanh);
        let lhs = p.matmul(&layer_forward(&h, &layer, &params).unwrap()).unwrap();

        let pa = p.matmul(&a).unwrap().matmul(&p.transpose()).unwrap();
        let (layer_p, params_p) = layer_on_store(pa, w, Some(b), Activation::Tanh);
        let rhs = layer_forward(&p.matmul(&h).unwrap(), &layer_p, &params_p).unwrap();

        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn param_count_matches_closed_form() {
        // K=1, L=1, width=1, encoder+decoder only: 2*(1+1+1) = 6.
        let model = MotionGcn::new(&tiny_config(1, 1, 1, 0)).unwrap();
        assert_eq!(model.param_count(), 6);

        // Paper-sized: K nodes, width w, L coeffs, blocks B:
        // (2+2B)*K^2 + (L*w + w) + 2B*(w^2 + w) + (w*L + L), plus one bias
        // row per layer.
        let (k, l, w, blocks) = (66, 15, 256, 12);
        let model = MotionGcn::new(&tiny_config(k, l, w, blocks)).unwrap();
        let layers = 2 + 2 * blocks;
        let expect =
            layers * k * k + (l * w + w) + 2 * blocks * (w * w + w) + (w * l + l);
        assert_eq!(model.param_count(), expect);

        // Doubling K adds exactly layers*3*K^2 at the paper depth.
        let model2 = MotionGcn::new(&tiny_config(2 * k, l, w, blocks)).unwrap();
        assert_eq!(model2.param_count() - model.param_count(), layers * 3 * k * k);
    }

    #[test]
    fn tape_mismatch_is_a_state_error() {
        let mut small = MotionGcn::new(&tiny_config(3, 4, 8, 1)).unwrap();
        let big = MotionGcn::new(&tiny_config(3, 4, 8, 2)).unwrap();
        let input = Matrix::zeros(3, 4);
        let (_, tape) = big.forward(&input).unwrap();
        let err = small.backward(&tape, &Matrix::zeros(3, 4)).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn fixed_connectivity_keeps_adjacency_gradient_zero() {
        let mut cfg = tiny_config(3, 4, 8, 1);
        cfg.connectivity = Connectivity::Fixed(Matrix::identity(3));
        let mut model = MotionGcn::new(&cfg).unwrap();
        model.init_parameters(&mut SeededRng::new(8));
        // make the decoder non-zero so gradients flow everywhere
        let dec_w = model.decoder.weight;
        *model.params_mut().value_mut(dec_w) = xavier_init(8, 4, &mut SeededRng::new(9));
        let input = Matrix::from_vec(3, 4, vec![0.3; 12]).unwrap();
        let (_, tape) = model.forward(&input).unwrap();
        let grad_out = Matrix::from_vec(3, 4, vec![1.0; 12]).unwrap();
        model.backward(&tape, &grad_out).unwrap();
        for id in model.adjacency_ids() {
            assert_eq!(model.params().grad(id).max_abs(), 0.0);
        }
        // but weight gradients are non-zero
        assert!(model.params().global_grad_norm() > 0.0);
    }
}
