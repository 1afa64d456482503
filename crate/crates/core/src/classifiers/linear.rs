use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Hyperparams, LinearLoss};
use crate::vectorizer::SparseVector;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(-z))` without overflow.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

pub(crate) struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularized training loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Plain SGD with L2 shrinkage. The weight vector is stored as
/// `scale * v` so that shrinkage costs O(1) per step on sparse rows.
pub(crate) fn fit(
    rows: &[SparseVector],
    labels: &[bool],
    dims: usize,
    hp: &Hyperparams,
    seed: u64,
) -> LinearFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; dims];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let lr = hp.learning_rate;
    let lambda = hp.regularization;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(hp.epochs);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &rows[i];
            let y = if labels[i] { 1.0 } else { -1.0 };
            let margin = scale * dot(&v, x) + bias;
            let g = match hp.loss {
                LinearLoss::Logistic => -y * sigmoid(-y * margin),
                LinearLoss::Hinge => {
                    if y * margin < 1.0 {
                        -y
                    } else {
                        0.0
                    }
                }
            };
            scale *= 1.0 - lr * lambda;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            if g != 0.0 {
                let step = lr * g / scale;
                for &(j, xj) in x.entries() {
                    v[j] -= step * xj;
                }
                bias -= lr * g;
            }
        }
        let weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
        epoch_losses.push(objective(rows, labels, &weights, bias, hp));
    }

    LinearFit {
        weights: v.into_iter().map(|w| w * scale).collect(),
        bias,
        epoch_losses,
    }
}

fn objective(rows: &[SparseVector], labels: &[bool], w: &[f64], b: f64, hp: &Hyperparams) -> f64 {
    let data: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l { 1.0 } else { -1.0 };
            let m = y * (dot(w, x) + b);
            match hp.loss {
                LinearLoss::Logistic => log_loss(m),
                LinearLoss::Hinge => (1.0 - m).max(0.0),
            }
        })
        .sum::<f64>()
        / rows.len() as f64;
    data + 0.5 * hp.regularization * w.iter().map(|x| x * x).sum::<f64>()
}

pub(crate) fn dot(w: &[f64], x: &SparseVector) -> f64 {
    x.entries().iter().map(|&(j, v)| w[j] * v).sum()
}
