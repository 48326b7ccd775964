use serde::{Deserialize, Serialize};

/// Regularizer constants λ1..λ4 of the per-task objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub task: f64,
    pub vae: f64,
    pub label: f64,
    pub embedding: f64,
}

impl LossWeights {
    pub const ALL_ONES: LossWeights = LossWeights {
        task: 1.0,
        vae: 1.0,
        label: 1.0,
        embedding: 1.0,
    };

    pub fn is_valid(&self) -> bool {
        [self.task, self.vae, self.label, self.embedding]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::ALL_ONES
    }
}

/// `λ1·L_task + λ2·L_VAE + λ3·L_y + λ4·L_e`
pub fn total_loss(l_task: f64, l_vae: f64, l_y: f64, l_e: f64, w: &LossWeights) -> f64 {
    w.task * l_task + w.vae * l_vae + w.label * l_y + w.embedding * l_e
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_task: f64,
    pub l_recon: f64,
    pub l_kl: f64,
    pub l_vae: f64,
    pub l_y: f64,
    pub l_e: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_task: f64, l_recon: f64, l_kl: f64, l_y: f64, l_e: f64, w: &LossWeights) -> Self {
        let l_vae = l_recon + l_kl;
        LossBreakdown {
            l_task,
            l_recon,
            l_kl,
            l_vae,
            l_y,
            l_e,
            total: total_loss(l_task, l_vae, l_y, l_e, w),
        }
    }
}
