//! Loss primitives. Every reduction is accumulated in `f64`; gradients are
//! returned in the caller's scalar type.

use ndarray::{Array2, ArrayView2, Zip};

use super::check_same_shape;
use crate::{Error, Result, Scalar};

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::shape(format!(
            "{} labels for {} rows",
            labels.len(),
            rows
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Label {
            label,
            num_classes: classes,
        });
    }
    Ok(())
}

fn non_empty(rows: usize) -> Result<()> {
    if rows == 0 {
        Err(Error::shape("empty batch"))
    } else {
        Ok(())
    }
}

/// Row-wise softmax with max subtraction, computed in `f64`.
fn softmax_f64<T: Scalar>(logits: ArrayView2<T>) -> Array2<f64> {
    let mut p = logits.mapv(|v| v.as_f64());
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    p
}

pub fn softmax_rows<T: Scalar>(logits: ArrayView2<T>) -> Array2<T> {
    softmax_f64(logits).mapv(T::of)
}

/// Mean over the batch of `-log softmax(logits)[label]`.
/// Gradient: `(softmax - onehot) / B`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: ArrayView2<T>,
    labels: &[usize],
) -> Result<(f64, Array2<T>)> {
    let (rows, classes) = logits.dim();
    non_empty(rows)?;
    check_labels(labels, rows, classes)?;
    let batch = rows as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros((rows, classes));
    for ((row, mut g), &label) in logits.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v.as_f64()));
        let sum: f64 = row.iter().map(|&v| (v.as_f64() - max).exp()).sum();
        let log_norm = max + sum.ln();
        loss += log_norm - row[label].as_f64();
        for (j, (&v, gj)) in row.iter().zip(g.iter_mut()).enumerate() {
            let p = (v.as_f64() - log_norm).exp();
            let onehot = if j == label { 1.0 } else { 0.0 };
            *gj = T::of((p - onehot) / batch);
        }
    }
    Ok((loss / batch, grad))
}

/// Mean over all entries of `(softmax(logits) - onehot(labels))²`, with the
/// gradient pulled back through the softmax Jacobian.
pub fn softmax_mse<T: Scalar>(logits: ArrayView2<T>, labels: &[usize]) -> Result<(f64, Array2<T>)> {
    let (rows, classes) = logits.dim();
    non_empty(rows)?;
    check_labels(labels, rows, classes)?;
    let count = (rows * classes) as f64;
    let p = softmax_f64(logits);
    let mut loss = 0.0;
    let mut grad = Array2::zeros((rows, classes));
    let mut dp = vec![0.0; classes];
    for ((prow, mut g), &label) in p.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
        let mut dot = 0.0;
        for (j, &pj) in prow.iter().enumerate() {
            let diff = pj - if j == label { 1.0 } else { 0.0 };
            loss += diff * diff;
            dp[j] = 2.0 * diff / count;
            dot += dp[j] * pj;
        }
        for (j, (&pj, gj)) in prow.iter().zip(g.iter_mut()).enumerate() {
            *gj = T::of(pj * (dp[j] - dot));
        }
    }
    Ok((loss / count, grad))
}

/// Mean over all entries of the squared difference; gradient `2(pred - target)/n`.
pub fn mse<T: Scalar>(pred: ArrayView2<T>, target: ArrayView2<T>) -> Result<(f64, Array2<T>)> {
    check_same_shape("mse", &pred, &target)?;
    non_empty(pred.len())?;
    let count = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(pred.raw_dim());
    Zip::from(&mut grad)
        .and(&pred)
        .and(&target)
        .for_each(|g, &p, &t| {
            let diff = p.as_f64() - t.as_f64();
            loss += diff * diff;
            *g = T::of(2.0 * diff / count);
        });
    Ok((loss / count, grad))
}

/// KL divergence of `N(mu, exp(logvar))` from the standard normal, summed
/// over latent dimensions and averaged over the batch.
pub fn gaussian_kl<T: Scalar>(
    mu: ArrayView2<T>,
    logvar: ArrayView2<T>,
) -> Result<(f64, Array2<T>, Array2<T>)> {
    check_same_shape("gaussian_kl", &mu, &logvar)?;
    non_empty(mu.nrows())?;
    let batch = mu.nrows() as f64;
    let mut loss = 0.0;
    let mut dmu = Array2::zeros(mu.raw_dim());
    let mut dlogvar = Array2::zeros(mu.raw_dim());
    Zip::from(&mut dmu)
        .and(&mut dlogvar)
        .and(&mu)
        .and(&logvar)
        .for_each(|dm, dl, &m, &lv| {
            let (m, lv) = (m.as_f64(), lv.as_f64());
            let var = lv.exp();
            loss += -0.5 * (1.0 + lv - m * m - var);
            *dm = T::of(m / batch);
            *dl = T::of(0.5 * (var - 1.0) / batch);
        });
    Ok((loss / batch, dmu, dlogvar))
}

/// `mu + exp(logvar / 2) ⊙ noise`. Noise is always supplied by the caller.
pub fn reparameterize<T: Scalar>(
    mu: ArrayView2<T>,
    logvar: ArrayView2<T>,
    noise: ArrayView2<T>,
) -> Result<Array2<T>> {
    check_same_shape("reparameterize mu/logvar", &mu, &logvar)?;
    check_same_shape("reparameterize mu/noise", &mu, &noise)?;
    let half = T::of(0.5);
    Ok(Zip::from(&mu)
        .and(&logvar)
        .and(&noise)
        .map_collect(|&m, &lv, &n| m + (lv * half).exp() * n))
}
