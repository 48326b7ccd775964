use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one network.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Gradients<T>,
    pub v: Gradients<T>,
    pub step: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Mlp<T>, config: AdamConfig) -> Self {
        AdamState {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            step: 0,
            config,
        }
    }

    pub fn update(&mut self, params: &mut Mlp<T>, grads: &Gradients<T>) -> Result<()> {
        if !grads.matches(params) || !self.m.matches(params) {
            return Err(Error::shape(
                "gradients or moments do not match the parameters",
            ));
        }
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let correction1 = T::one() - b1.powi(self.step as i32);
        let correction2 = T::one() - b2.powi(self.step as i32);
        let (lr, eps) = (T::of(c.lr), T::of(c.eps));

        let apply = |w: &mut T, m: &mut T, v: &mut T, g: T| {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        };

        for (k, layer) in params.layers_mut().iter_mut().enumerate() {
            let (g, m, v) = (
                &grads.layers[k],
                &mut self.m.layers[k],
                &mut self.v.layers[k],
            );
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|w, m, v, &g| apply(w, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|w, m, v, &g| apply(w, m, v, g));
        }
        Ok(())
    }
}
