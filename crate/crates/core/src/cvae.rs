//! One task's private conditional VAE plus its auxiliary prediction network.
//!
//! * encoder: `[x ‖ e]` → `[mu ‖ logvar]`
//! * decoder: `[z ‖ e]` → `x̂`
//! * aux:     `x̂` → `[class logits ‖ ê]`
//!
//! Encoder and decoder are conditioned on the class attribute vector only,
//! which is what lets a module generate features for classes it never saw.

use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::learner::{LossBreakdown, LossWeights};
use crate::nn::{
    self, checkpoint_bytes, gaussian_kl, hcat, load_checkpoint, mse, reparameterize,
    save_checkpoint, softmax_cross_entropy, softmax_mse, Activation, Gradients, Mlp,
};
use crate::seed::{self, stream};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvaeDims {
    pub feature_dim: usize,
    pub attr_dim: usize,
    pub num_classes: usize,
    pub z_dim: usize,
}

/// Hidden layer widths (relu) of the three networks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HiddenDims {
    pub encoder: Vec<usize>,
    pub decoder: Vec<usize>,
    pub aux: Vec<usize>,
}

impl Default for HiddenDims {
    fn default() -> Self {
        HiddenDims {
            encoder: vec![512],
            decoder: vec![512],
            aux: vec![256],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCode<T> {
    pub mu: Array2<T>,
    pub logvar: Array2<T>,
}

/// Training rows: features, labels and the attribute row of each label.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a, T> {
    pub x: ArrayView2<'a, T>,
    pub labels: &'a [usize],
    pub e: ArrayView2<'a, T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvaeGradients<T> {
    pub encoder: Gradients<T>,
    pub decoder: Gradients<T>,
    pub aux: Gradients<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvaeModule<T> {
    task_id: usize,
    owned_classes: Vec<usize>,
    dims: CvaeDims,
    pub(crate) encoder: Mlp<T>,
    pub(crate) decoder: Mlp<T>,
    pub(crate) aux: Mlp<T>,
    steps: u64,
    frozen: bool,
}

#[derive(Serialize, Deserialize)]
struct ModuleDescriptor {
    task_id: usize,
    owned_classes: Vec<usize>,
    dims: CvaeDims,
    steps: u64,
    frozen: bool,
}

fn mlp_dims(input: usize, hidden: &[usize], output: usize) -> (Vec<usize>, Vec<Activation>) {
    let mut dims = vec![input];
    dims.extend_from_slice(hidden);
    dims.push(output);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    (dims, acts)
}

/// Maps labels into positions within `active`.
fn active_positions(labels: &[usize], active: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    let mut position = vec![usize::MAX; num_classes];
    for (i, &c) in active.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::Label {
                label: c,
                num_classes,
            });
        }
        position[c] = i;
    }
    labels
        .iter()
        .map(|&l| match position.get(l) {
            Some(&p) if p != usize::MAX => Ok(p),
            _ => Err(Error::invalid(format!(
                "label {l} is outside the active label space"
            ))),
        })
        .collect()
}

impl<T: Scalar> CvaeModule<T> {
    pub fn new(
        task_id: usize,
        owned_classes: Vec<usize>,
        dims: CvaeDims,
        hidden: &HiddenDims,
        seed: u64,
    ) -> Result<Self> {
        let CvaeDims {
            feature_dim: d,
            attr_dim: a,
            num_classes: c,
            z_dim: z,
        } = dims;
        if d == 0 || a == 0 || c == 0 || z == 0 {
            return Err(Error::invalid(format!(
                "module dims must be positive: {dims:?}"
            )));
        }
        let build = |input, hidden: &[usize], output, tag| {
            let (layer_dims, acts) = mlp_dims(input, hidden, output);
            Mlp::init(
                &layer_dims,
                &acts,
                seed::derive(seed, &[stream::MODULE_INIT, tag]),
            )
        };
        Ok(CvaeModule {
            task_id,
            owned_classes,
            dims,
            encoder: build(d + a, &hidden.encoder, 2 * z, 0)?,
            decoder: build(z + a, &hidden.decoder, d, 1)?,
            aux: build(d, &hidden.aux, c + a, 2)?,
            steps: 0,
            frozen: false,
        })
    }

    /// Assembles a module from existing networks, checking the width contract.
    pub fn from_parts(
        task_id: usize,
        owned_classes: Vec<usize>,
        dims: CvaeDims,
        encoder: Mlp<T>,
        decoder: Mlp<T>,
        aux: Mlp<T>,
    ) -> Result<Self> {
        let CvaeDims {
            feature_dim: d,
            attr_dim: a,
            num_classes: c,
            z_dim: z,
        } = dims;
        let widths = [
            ("encoder", &encoder, d + a, 2 * z),
            ("decoder", &decoder, z + a, d),
            ("aux", &aux, d, c + a),
        ];
        for (name, net, input, output) in widths {
            if net.input_dim() != input || net.output_dim() != output {
                return Err(Error::shape(format!(
                    "{name} maps {} → {}, expected {input} → {output}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
        }
        Ok(CvaeModule {
            task_id,
            owned_classes,
            dims,
            encoder,
            decoder,
            aux,
            steps: 0,
            frozen: false,
        })
    }

    pub fn task_id(&self) -> usize {
        self.task_id
    }

    pub fn owned_classes(&self) -> &[usize] {
        &self.owned_classes
    }

    pub fn dims(&self) -> CvaeDims {
        self.dims
    }

    pub fn encoder(&self) -> &Mlp<T> {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp<T> {
        &self.decoder
    }

    pub fn aux(&self) -> &Mlp<T> {
        &self.aux
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn num_params(&self) -> usize {
        self.encoder.num_params() + self.decoder.num_params() + self.aux.num_params()
    }

    fn check_rows(&self, what: &str, m: &ArrayView2<T>, cols: usize) -> Result<()> {
        if m.ncols() != cols {
            return Err(Error::shape(format!(
                "{what}: {} columns, expected {cols}",
                m.ncols()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: ArrayView2<T>, e: ArrayView2<T>) -> Result<GaussianCode<T>> {
        self.check_rows("features", &x, self.dims.feature_dim)?;
        self.check_rows("embeddings", &e, self.dims.attr_dim)?;
        let out = self.encoder.forward(hcat(x, e)?.view())?;
        Ok(self.split_code(out.view()))
    }

    fn split_code(&self, out: ArrayView2<T>) -> GaussianCode<T> {
        let z = self.dims.z_dim;
        GaussianCode {
            mu: out.slice(s![.., ..z]).to_owned(),
            logvar: out.slice(s![.., z..]).to_owned(),
        }
    }

    pub fn decode(&self, z: ArrayView2<T>, e: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_rows("latent", &z, self.dims.z_dim)?;
        self.check_rows("embeddings", &e, self.dims.attr_dim)?;
        self.decoder.forward(hcat(z, e)?.view())
    }

    /// Class logits (all `num_classes`) and the predicted attribute vector.
    pub fn aux_forward(&self, x_hat: ArrayView2<T>) -> Result<(Array2<T>, Array2<T>)> {
        self.check_rows("reconstruction", &x_hat, self.dims.feature_dim)?;
        let out = self.aux.forward(x_hat)?;
        let c = self.dims.num_classes;
        Ok((
            out.slice(s![.., ..c]).to_owned(),
            out.slice(s![.., c..]).to_owned(),
        ))
    }

    fn check_batch(&self, batch: &Batch<'_, T>, noise: &ArrayView2<T>) -> Result<()> {
        let rows = batch.x.nrows();
        if batch.labels.len() != rows || batch.e.nrows() != rows {
            return Err(Error::shape(format!(
                "batch has {rows} feature rows, {} labels, {} embedding rows",
                batch.labels.len(),
                batch.e.nrows()
            )));
        }
        if noise.dim() != (rows, self.dims.z_dim) {
            return Err(Error::shape(format!(
                "noise is {:?}, expected ({rows}, {})",
                noise.dim(),
                self.dims.z_dim
            )));
        }
        Ok(())
    }

    /// All loss components. The two label losses are computed over the
    /// `active` classes only; other logits receive no signal.
    pub fn losses(
        &self,
        batch: &Batch<'_, T>,
        noise: ArrayView2<T>,
        active: &[usize],
        weights: &LossWeights,
    ) -> Result<LossBreakdown> {
        Ok(self.forward_losses(batch, noise, active, weights, false)?.0)
    }

    /// Loss components and exact gradients of the weighted total w.r.t. all
    /// three networks.
    pub fn loss_and_gradients(
        &self,
        batch: &Batch<'_, T>,
        noise: ArrayView2<T>,
        active: &[usize],
        weights: &LossWeights,
    ) -> Result<(LossBreakdown, CvaeGradients<T>)> {
        let (losses, grads) = self.forward_losses(batch, noise, active, weights, true)?;
        Ok((losses, grads.expect("gradients requested")))
    }

    fn forward_losses(
        &self,
        batch: &Batch<'_, T>,
        noise: ArrayView2<T>,
        active: &[usize],
        weights: &LossWeights,
        with_grad: bool,
    ) -> Result<(LossBreakdown, Option<CvaeGradients<T>>)> {
        self.check_batch(batch, &noise)?;
        self.check_rows("features", &batch.x, self.dims.feature_dim)?;
        self.check_rows("embeddings", &batch.e, self.dims.attr_dim)?;
        let (z_dim, c) = (self.dims.z_dim, self.dims.num_classes);
        let positions = active_positions(batch.labels, active, c)?;

        let enc = self.encoder.forward_trace(hcat(batch.x, batch.e)?.view())?;
        let (mu, logvar) = enc.output().view().split_at(Axis(1), z_dim);
        let z = reparameterize(mu, logvar, noise)?;
        let dec = self
            .decoder
            .forward_trace(hcat(z.view(), batch.e)?.view())?;
        let x_hat = dec.output();
        let aux = self.aux.forward_trace(x_hat.view())?;
        let (logits, e_hat) = aux.output().view().split_at(Axis(1), c);
        let active_logits = logits.select(Axis(1), active);

        let (l_recon, d_xhat_recon) = mse(x_hat.view(), batch.x)?;
        let (l_kl, dmu_kl, dlogvar_kl) = gaussian_kl(mu, logvar)?;
        let (l_task, dlogits_task) = softmax_cross_entropy(active_logits.view(), &positions)?;
        let (l_y, dlogits_y) = softmax_mse(active_logits.view(), &positions)?;
        let (l_e, d_ehat) = mse(e_hat, batch.e)?;
        let losses = LossBreakdown::new(l_task, l_recon, l_kl, l_y, l_e, weights);
        if !with_grad {
            return Ok((losses, None));
        }

        let w = |v: f64| T::of(v);
        let d_active = dlogits_task * w(weights.task) + dlogits_y * w(weights.label);
        let mut d_aux_out = Array2::zeros(aux.output().raw_dim());
        for (j, &class) in active.iter().enumerate() {
            d_aux_out.column_mut(class).assign(&d_active.column(j));
        }
        d_aux_out
            .slice_mut(s![.., c..])
            .assign(&(d_ehat * w(weights.embedding)));
        let (g_aux, d_xhat_aux) = self.aux.backward(&aux, d_aux_out.view())?;

        let d_xhat = d_xhat_recon * w(weights.vae) + d_xhat_aux;
        let (g_dec, d_ze) = self.decoder.backward(&dec, d_xhat.view())?;
        let dz = d_ze.slice(s![.., ..z_dim]);

        let half = T::of(0.5);
        let mut dmu = dmu_kl * w(weights.vae);
        dmu += &dz;
        let mut dlogvar = dlogvar_kl * w(weights.vae);
        ndarray::Zip::from(&mut dlogvar)
            .and(&dz)
            .and(&noise)
            .and(&logvar)
            .for_each(|dl, &g, &n, &lv| *dl += g * n * half * (lv * half).exp());
        let (g_enc, _) = self
            .encoder
            .backward(&enc, hcat(dmu.view(), dlogvar.view())?.view())?;

        Ok((
            losses,
            Some(CvaeGradients {
                encoder: g_enc,
                decoder: g_dec,
                aux: g_aux,
            }),
        ))
    }

    /// Applies one optimizer update to all three networks.
    pub fn apply_update(
        &mut self,
        grads: &CvaeGradients<T>,
        optim: &mut [nn::AdamState<T>; 3],
    ) -> Result<()> {
        if self.frozen {
            return Err(Error::Frozen {
                task_id: self.task_id,
            });
        }
        optim[0].update(&mut self.encoder, &grads.encoder)?;
        optim[1].update(&mut self.decoder, &grads.decoder)?;
        optim[2].update(&mut self.aux, &grads.aux)?;
        self.steps += 1;
        Ok(())
    }

    /// `n` decoded samples for one class, `z ~ N(0, I)` drawn from `seed`.
    pub fn generate(&self, embedding: ArrayView1<T>, n: usize, seed: u64) -> Result<Array2<T>> {
        if n == 0 {
            return Err(Error::invalid("cannot generate zero samples"));
        }
        if embedding.len() != self.dims.attr_dim {
            return Err(Error::shape(format!(
                "embedding has {} entries, expected {}",
                embedding.len(),
                self.dims.attr_dim
            )));
        }
        let mut rng = seed::rng(seed);
        let z = Array2::from_shape_simple_fn((n, self.dims.z_dim), || {
            T::of(rng.sample::<f64, _>(StandardNormal))
        });
        let e = embedding
            .broadcast((n, self.dims.attr_dim))
            .expect("row broadcast");
        self.decode(z.view(), e)
    }

    fn descriptor(&self) -> ModuleDescriptor {
        ModuleDescriptor {
            task_id: self.task_id,
            owned_classes: self.owned_classes.clone(),
            dims: self.dims,
            steps: self.steps,
            frozen: self.frozen,
        }
    }

    /// SHA-256 over the descriptor and the three parameter checkpoints.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.descriptor()).expect("descriptor serializes"));
        for net in [&self.encoder, &self.decoder, &self.aux] {
            h.update(checkpoint_bytes(net, self.steps));
        }
        hex::encode(h.finalize())
    }

    /// Writes `module.json`, `encoder.ckpt`, `decoder.ckpt`, `aux.ckpt`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("module.json");
        fs::write(&path, serde_json::to_vec_pretty(&self.descriptor())?)
            .map_err(|e| Error::io(path, e))?;
        save_checkpoint(&dir.join("encoder.ckpt"), &self.encoder, self.steps)?;
        save_checkpoint(&dir.join("decoder.ckpt"), &self.decoder, self.steps)?;
        save_checkpoint(&dir.join("aux.ckpt"), &self.aux, self.steps)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("module.json");
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let desc: ModuleDescriptor = serde_json::from_slice(&bytes)?;
        let (encoder, _) = load_checkpoint(&dir.join("encoder.ckpt"))?;
        let (decoder, _) = load_checkpoint(&dir.join("decoder.ckpt"))?;
        let (aux, _) = load_checkpoint(&dir.join("aux.ckpt"))?;
        let mut module = CvaeModule::from_parts(
            desc.task_id,
            desc.owned_classes,
            desc.dims,
            encoder,
            decoder,
            aux,
        )?;
        module.steps = desc.steps;
        module.frozen = desc.frozen;
        Ok(module)
    }
}

/// Embedding row of `class` as `T`.
pub(crate) fn embedding_row<T: Scalar>(attributes: &Array2<f32>, class: usize) -> Array1<T> {
    attributes.row(class).mapv(|v| T::of(v as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax_rows;

    fn dims() -> CvaeDims {
        CvaeDims {
            feature_dim: 6,
            attr_dim: 3,
            num_classes: 5,
            z_dim: 2,
        }
    }

    fn small_hidden() -> HiddenDims {
        HiddenDims {
            encoder: vec![7],
            decoder: vec![8],
            aux: vec![4],
        }
    }

    fn fixture(rows: usize, cols: usize, phase: f64) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |(i, j)| {
            ((i * cols + j) as f64 * 0.77 + phase).sin()
        })
    }

    #[test]
    fn widths_follow_concatenation() {
        let d = CvaeDims {
            feature_dim: 2048,
            attr_dim: 85,
            num_classes: 50,
            z_dim: 50,
        };
        let hidden = HiddenDims {
            encoder: vec![4],
            decoder: vec![4],
            aux: vec![4],
        };
        let m = CvaeModule::<f32>::new(1, vec![0], d, &hidden, 0).unwrap();
        assert_eq!(m.encoder().input_dim(), 2133);
        assert_eq!(m.encoder().output_dim(), 100);
        assert_eq!(m.decoder().input_dim(), 135);
        assert_eq!(m.decoder().output_dim(), 2048);
        assert_eq!(m.aux().output_dim(), 50 + 85);
        assert!(!m.is_frozen());
    }

    #[test]
    fn rejects_zero_dims() {
        let d = CvaeDims { z_dim: 0, ..dims() };
        assert!(CvaeModule::<f64>::new(1, vec![], d, &small_hidden(), 0).is_err());
    }

    #[test]
    fn encode_decode_aux_shapes_and_determinism() {
        let m = CvaeModule::<f64>::new(1, vec![0, 1], dims(), &small_hidden(), 3).unwrap();
        let x = fixture(1, 6, 0.0);
        let e = fixture(1, 3, 1.0);
        let code = m.encode(x.view(), e.view()).unwrap();
        assert_eq!((code.mu.dim(), code.logvar.dim()), ((1, 2), (1, 2)));
        assert_eq!(code, m.encode(x.view(), e.view()).unwrap());
        let xh = m.decode(code.mu.view(), e.view()).unwrap();
        assert_eq!(xh.dim(), (1, 6));
        let (logits, e_hat) = m.aux_forward(fixture(4, 6, 0.5).view()).unwrap();
        assert_eq!((logits.dim(), e_hat.dim()), ((4, 5), (4, 3)));
        for row in softmax_rows(logits.view()).rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
        assert!(m.encode(fixture(1, 5, 0.0).view(), e.view()).is_err());
    }

    #[test]
    fn zero_decoder_emits_zeros() {
        let mut m = CvaeModule::<f64>::new(1, vec![0], dims(), &small_hidden(), 3).unwrap();
        let n = m.decoder.num_params();
        m.decoder.set_params_flat(&vec![0.0; n]).unwrap();
        let out = m
            .decode(fixture(3, 2, 0.0).view(), fixture(3, 3, 0.0).view())
            .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generate_contract() {
        let m = CvaeModule::<f32>::new(
            1,
            vec![0],
            CvaeDims {
                feature_dim: 6,
                attr_dim: 3,
                num_classes: 5,
                z_dim: 50,
            },
            &small_hidden(),
            3,
        )
        .unwrap();
        let e = Array1::from_vec(vec![0.1f32, -0.2, 0.3]);
        let a = m.generate(e.view(), 50, 9).unwrap();
        assert_eq!(a.dim(), (50, 6));
        assert_eq!(a, m.generate(e.view(), 50, 9).unwrap());
        assert_ne!(a, m.generate(e.view(), 50, 10).unwrap());
        assert!(m.generate(e.view(), 0, 9).is_err());
    }

    /// Identity-like fixture: the encoder passes x through as mu with zero
    /// logvar, the decoder copies z back out.
    #[test]
    fn perfect_autoencoder_has_zero_reconstruction() {
        use crate::nn::Layer;
        let d = CvaeDims {
            feature_dim: 2,
            attr_dim: 1,
            num_classes: 2,
            z_dim: 2,
        };
        let mut enc_w = Array2::<f64>::zeros((4, 3));
        enc_w[[0, 0]] = 1.0;
        enc_w[[1, 1]] = 1.0;
        let mut dec_w = Array2::<f64>::zeros((2, 3));
        dec_w[[0, 0]] = 1.0;
        dec_w[[1, 1]] = 1.0;
        let layer = |w: Array2<f64>| Layer {
            bias: Array1::zeros(w.nrows()),
            weight: w,
            activation: Activation::Identity,
        };
        let m = CvaeModule::from_parts(
            1,
            vec![0, 1],
            d,
            Mlp::from_layers(vec![layer(enc_w)], 0).unwrap(),
            Mlp::from_layers(vec![layer(dec_w)], 0).unwrap(),
            Mlp::from_layers(vec![layer(Array2::zeros((3, 2)))], 0).unwrap(),
        )
        .unwrap();
        let x = fixture(4, 2, 0.0);
        let e = fixture(4, 1, 0.3);
        let noise = Array2::zeros((4, 2));
        let batch = Batch {
            x: x.view(),
            labels: &[0, 1, 1, 0],
            e: e.view(),
        };
        let l = m
            .losses(&batch, noise.view(), &[0, 1], &LossWeights::ALL_ONES)
            .unwrap();
        assert_eq!(l.l_recon, 0.0);
        // zero aux weights → uniform logits over two active classes
        assert!((l.l_task - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_code_has_zero_kl() {
        let mut m = CvaeModule::<f64>::new(1, vec![0], dims(), &small_hidden(), 3).unwrap();
        let n = m.encoder.num_params();
        m.encoder.set_params_flat(&vec![0.0; n]).unwrap();
        let x = fixture(3, 6, 0.0);
        let e = fixture(3, 3, 0.0);
        let batch = Batch {
            x: x.view(),
            labels: &[0, 1, 2],
            e: e.view(),
        };
        let l = m
            .losses(
                &batch,
                fixture(3, 2, 0.9).view(),
                &[0, 1, 2, 3, 4],
                &LossWeights::ALL_ONES,
            )
            .unwrap();
        assert_eq!(l.l_kl, 0.0);
    }

    #[test]
    fn label_outside_active_space_is_rejected() {
        let m = CvaeModule::<f64>::new(1, vec![0], dims(), &small_hidden(), 3).unwrap();
        let x = fixture(2, 6, 0.0);
        let e = fixture(2, 3, 0.0);
        let batch = Batch {
            x: x.view(),
            labels: &[0, 3],
            e: e.view(),
        };
        let noise = Array2::zeros((2, 2));
        assert!(m
            .losses(&batch, noise.view(), &[0, 1], &LossWeights::ALL_ONES)
            .is_err());
        let batch = Batch {
            x: x.view(),
            labels: &[0, 7],
            e: e.view(),
        };
        assert!(m
            .losses(&batch, noise.view(), &[0, 1, 7], &LossWeights::ALL_ONES)
            .is_err());
    }

    #[test]
    fn frozen_module_refuses_updates() {
        let mut m = CvaeModule::<f64>::new(1, vec![0], dims(), &small_hidden(), 3).unwrap();
        let grads = CvaeGradients {
            encoder: Gradients::zeros_like(m.encoder()),
            decoder: Gradients::zeros_like(m.decoder()),
            aux: Gradients::zeros_like(m.aux()),
        };
        let cfg = nn::AdamConfig::default();
        let mut optim = [
            nn::AdamState::new(m.encoder(), cfg),
            nn::AdamState::new(m.decoder(), cfg),
            nn::AdamState::new(m.aux(), cfg),
        ];
        m.apply_update(&grads, &mut optim).unwrap();
        m.freeze();
        let before = m.checksum();
        assert!(matches!(
            m.apply_update(&grads, &mut optim),
            Err(Error::Frozen { .. })
        ));
        assert_eq!(before, m.checksum());
    }

    #[test]
    fn save_load_preserves_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = CvaeModule::<f32>::new(2, vec![3, 4], dims(), &small_hidden(), 11).unwrap();
        m.freeze();
        m.save(dir.path()).unwrap();
        let back = CvaeModule::<f32>::load(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.checksum(), m.checksum());
    }
}
