use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss;
use crate::{seed, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Relu => {
                if v > T::zero() {
                    v
                } else {
                    T::zero()
                }
            }
            Activation::Identity => v,
        }
    }
}

/// Dense layer computing `activation(x · weightᵀ + bias)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    /// `out × in`
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut out = x.dot(&self.weight.t());
        let act = self.activation;
        Zip::from(out.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row)
                .and(&self.bias)
                .for_each(|o, &b| *o = act.apply(*o + b));
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
    seed: u64,
}

/// Per-layer inputs and post-activation outputs of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace<T> {
    inputs: Vec<Array2<T>>,
    outputs: Vec<Array2<T>>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &Array2<T> {
        self.outputs.last().expect("trace of a non-empty network")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

/// Partial derivatives of a scalar loss, shaped like the owning [`Mlp`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrad<T>>,
}

/// Scalar objective evaluated on the network output.
#[derive(Clone, Debug)]
pub enum Objective<'a, T> {
    SoftmaxCrossEntropy {
        labels: &'a [usize],
    },
    Mse {
        target: ArrayView2<'a, T>,
    },
    /// The output row is split into `mu ‖ logvar` halves.
    GaussianKl,
    Scaled(f64, Box<Objective<'a, T>>),
}

impl<T: Scalar> Mlp<T> {
    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::invalid(format!(
                "{} layer dims need {} activations, got {}",
                dims.len(),
                dims.len() - 1,
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::invalid(format!("zero-width layer in {dims:?}")));
        }
        let mut rng = seed::rng(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    T::of(rng.random_range(-bound..bound))
                });
                Layer {
                    weight,
                    bias: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        Ok(Mlp { layers, seed })
    }

    pub fn from_layers(layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::shape(format!(
                    "layer {k}: bias length {} vs {} outputs",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            if k > 0 && layers[k - 1].out_dim() != layer.in_dim() {
                return Err(Error::shape(format!(
                    "layer {k} takes {} inputs but layer {} emits {}",
                    layer.in_dim(),
                    k - 1,
                    layers[k - 1].out_dim()
                )));
            }
            let finite = layer
                .weight
                .iter()
                .chain(layer.bias.iter())
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!(
                    "layer {k} has non-finite parameters"
                )));
            }
        }
        Ok(Mlp { layers, seed })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Direct parameter access. Shapes must be preserved.
    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer, weight (row-major) then bias.
    pub fn params_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_params_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::shape(format!(
                "{} values for {} parameters",
                values.len(),
                self.num_params()
            )));
        }
        let mut it = values.iter();
        for l in &mut self.layers {
            for (dst, src) in l.weight.iter_mut().chain(l.bias.iter_mut()).zip(&mut it) {
                *dst = *src;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(h.view());
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: ArrayView2<T>) -> Result<Trace<T>> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = if k == 0 {
                x.to_owned()
            } else {
                outputs[k - 1].clone()
            };
            outputs.push(layer.forward(input.view()));
            inputs.push(input);
        }
        Ok(Trace { inputs, outputs })
    }

    /// Reverse pass from `d_output` (gradient w.r.t. the network output).
    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(
        &self,
        trace: &Trace<T>,
        d_output: ArrayView2<T>,
    ) -> Result<(Gradients<T>, Array2<T>)> {
        if trace.outputs.len() != self.layers.len() {
            return Err(Error::shape("trace does not belong to this network"));
        }
        if d_output.dim() != trace.output().dim() {
            return Err(Error::shape(format!(
                "output gradient {:?} vs output {:?}",
                d_output.dim(),
                trace.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_output.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                Zip::from(&mut upstream)
                    .and(&trace.outputs[k])
                    .for_each(|g, &out| {
                        if out <= T::zero() {
                            *g = T::zero();
                        }
                    });
            }
            let weight = upstream.t().dot(&trace.inputs[k]);
            let bias = upstream.sum_axis(Axis(0));
            upstream = upstream.dot(&layer.weight);
            grads.push(LayerGrad { weight, bias });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, upstream))
    }

    /// Loss value (accumulated in `f64`) and exact gradients.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<T>,
        objective: &Objective<'_, T>,
    ) -> Result<(f64, Gradients<T>)> {
        let trace = self.forward_trace(x)?;
        let (value, d_out) = evaluate_objective(trace.output().view(), objective)?;
        let (grads, _) = self.backward(&trace, d_out.view())?;
        Ok((value, grads))
    }
}

fn evaluate_objective<T: Scalar>(
    out: ArrayView2<T>,
    objective: &Objective<'_, T>,
) -> Result<(f64, Array2<T>)> {
    match objective {
        Objective::SoftmaxCrossEntropy { labels } => loss::softmax_cross_entropy(out, labels),
        Objective::Mse { target } => loss::mse(out, target.view()),
        Objective::GaussianKl => {
            if !out.ncols().is_multiple_of(2) {
                return Err(Error::shape(format!(
                    "cannot split {} output columns into mu and logvar",
                    out.ncols()
                )));
            }
            let z = out.ncols() / 2;
            let (mu, logvar) = out.split_at(Axis(1), z);
            let (value, dmu, dlogvar) = loss::gaussian_kl(mu, logvar)?;
            Ok((value, super::hcat(dmu.view(), dlogvar.view())?))
        }
        Objective::Scaled(scale, inner) => {
            let (value, d) = evaluate_objective(out, inner)?;
            Ok((value * scale, d * T::of(*scale)))
        }
    }
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(mlp: &Mlp<T>) -> Self {
        Gradients {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn matches(&self, mlp: &Mlp<T>) -> bool {
        self.layers.len() == mlp.layers.len()
            && self
                .layers
                .iter()
                .zip(&mlp.layers)
                .all(|(g, l)| g.weight.dim() == l.weight.dim() && g.bias.dim() == l.bias.dim())
    }

    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weight.iter().copied());
            out.extend(g.bias.iter().copied());
        }
        out
    }

    pub fn scale(&mut self, factor: T) {
        for g in &mut self.layers {
            g.weight.mapv_inplace(|v| v * factor);
            g.bias.mapv_inplace(|v| v * factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scalar_loop_forward(mlp: &Mlp<f64>, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        for layer in mlp.layers() {
            let mut next = Array2::zeros((h.nrows(), layer.out_dim()));
            for b in 0..h.nrows() {
                for o in 0..layer.out_dim() {
                    let mut acc = layer.bias[o];
                    for i in 0..layer.in_dim() {
                        acc += layer.weight[[o, i]] * h[[b, i]];
                    }
                    next[[b, o]] = match layer.activation {
                        Activation::Relu => acc.max(0.0),
                        Activation::Identity => acc,
                    };
                }
            }
            h = next;
        }
        h
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = Mlp::<f32>::init(&[4, 3], &[Activation::Identity], 11).unwrap();
        let b = Mlp::<f32>::init(&[4, 3], &[Activation::Identity], 11).unwrap();
        assert_eq!(a, b);
        assert!(a.layers()[0].bias.iter().all(|&v| v == 0.0));
        let bound = 0.5f32;
        assert!(a.layers()[0].weight.iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn init_shapes_chain() {
        let m = Mlp::<f64>::init(&[4, 8, 2], &[Activation::Relu, Activation::Identity], 0).unwrap();
        assert_eq!(m.layers()[0].weight.dim(), (8, 4));
        assert_eq!(m.layers()[1].weight.dim(), (2, 8));
        assert_eq!(m.num_params(), 8 * 4 + 8 + 2 * 8 + 2);
    }

    #[test]
    fn init_rejects_activation_count_mismatch() {
        let err = Mlp::<f64>::init(&[4, 8, 2], &[Activation::Relu], 0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer {
            weight: Array2::<f64>::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
        };
        let m = Mlp::from_layers(vec![layer], 0).unwrap();
        let x = array![[1.0, -2.0, 3.5], [0.0, 4.0, -1.0]];
        assert_eq!(m.forward(x.view()).unwrap(), x);
    }

    #[test]
    fn relu_on_negative_preactivations_is_zero() {
        let layer = Layer {
            weight: Array2::<f64>::eye(2),
            bias: Array1::from_elem(2, -10.0),
            activation: Activation::Relu,
        };
        let m = Mlp::from_layers(vec![layer], 0).unwrap();
        let out = m.forward(array![[1.0, 2.0], [3.0, -4.0]].view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_matches_scalar_loops() {
        let mut m =
            Mlp::<f64>::init(&[5, 7, 3], &[Activation::Relu, Activation::Identity], 3).unwrap();
        for (k, l) in m.layers_mut().iter_mut().enumerate() {
            l.bias
                .iter_mut()
                .enumerate()
                .for_each(|(i, b)| *b = 0.1 * (i as f64) - 0.05 * k as f64);
        }
        let x = Array2::from_shape_fn((4, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin());
        let fast = m.forward(x.view()).unwrap();
        let slow = scalar_loop_forward(&m, &x);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = Mlp::<f32>::init(&[3, 2], &[Activation::Identity], 0).unwrap();
        assert!(matches!(
            m.forward(Array2::zeros((1, 4)).view()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_net_with_zero_target_has_zero_gradient() {
        let mut m =
            Mlp::<f64>::init(&[3, 4, 2], &[Activation::Relu, Activation::Identity], 1).unwrap();
        let zeros = vec![0.0; m.num_params()];
        m.set_params_flat(&zeros).unwrap();
        let x = Array2::from_elem((5, 3), 0.7);
        let target = Array2::zeros((5, 2));
        let (loss, g) = m
            .loss_and_grad(
                x.view(),
                &Objective::Mse {
                    target: target.view(),
                },
            )
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scaled_objective_doubles_gradients() {
        let m = Mlp::<f64>::init(&[3, 4, 2], &[Activation::Relu, Activation::Identity], 9).unwrap();
        let x = Array2::from_shape_fn((6, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let target = Array2::from_shape_fn((6, 2), |(i, j)| (i + j) as f64 * 0.1);
        let base = Objective::Mse {
            target: target.view(),
        };
        let (l1, g1) = m.loss_and_grad(x.view(), &base).unwrap();
        let (l2, g2) = m
            .loss_and_grad(x.view(), &Objective::Scaled(2.0, Box::new(base.clone())))
            .unwrap();
        assert_eq!(l2, 2.0 * l1);
        for (a, b) in g1.flat().iter().zip(g2.flat()) {
            assert_eq!(2.0 * a, b);
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut m =
            Mlp::<f32>::init(&[2, 3, 1], &[Activation::Relu, Activation::Identity], 5).unwrap();
        let mut flat = m.params_flat();
        flat[0] = 42.0;
        m.set_params_flat(&flat).unwrap();
        assert_eq!(m.layers()[0].weight[[0, 0]], 42.0);
        assert_eq!(m.params_flat(), flat);
    }
}
