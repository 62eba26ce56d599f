use ndarray::Array2;
use rand::seq::SliceRandom;
use rhm_core::encode::encode_batch;
use rhm_core::rng::Rng;
use rhm_core::{Dataset, Datum};
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::network::{argmax_rows, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Training stops once the mean epoch loss falls below this value.
    pub loss_threshold: f64,
    pub max_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 128, learning_rate: 0.3, loss_threshold: 1e-3, max_epochs: 1000 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size > 0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.loss_threshold > 0.0
            && self.max_epochs > 0;
        if ok {
            Ok(())
        } else {
            Err(NnError::Architecture(format!("invalid training configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Mean minibatch loss of every epoch.
    pub loss_history: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// One-hot encodes a batch as one row per datum.
pub fn encode(data: &[Datum], v: usize) -> Array2<f64> {
    let len = data.first().map_or(0, |d| d.features.len() * v);
    Array2::from_shape_vec((data.len(), len), encode_batch(data, v, true)).expect("rows of equal length")
}

/// Minibatch SGD on the cross-entropy, reshuffling every epoch. The epoch loss
/// is the average of the minibatch losses seen during the epoch, each taken
/// before its update.
pub fn train(net: &mut Network, data: &Dataset, config: &TrainConfig, rng: &mut Rng) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(NnError::Core(rhm_core::RhmError::NotEnoughSamples("empty training set".into())));
    }
    let v = net.input.v;
    let x = encode(&data.data, v);
    let labels = data.labels();
    let width = x.ncols();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::new();
    let mut converged = false;
    for epoch in 0..config.max_epochs {
        order.shuffle(rng);
        let (mut total, mut seen) = (0.0, 0usize);
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut xb = Array2::zeros((chunk.len(), width));
            for (r, &i) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&x.row(i));
            }
            let yb: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = net.loss_and_gradients(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(NnError::Diverged { epoch, step, loss });
            }
            net.sgd_step(&grads, config.learning_rate);
            total += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let epoch_loss = total / seen as f64;
        history.push(epoch_loss);
        if epoch_loss < config.loss_threshold {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome { epochs: history.len(), loss_history: history, converged })
}

/// Fraction of data whose largest logit is not the label (lowest class on ties).
pub fn test_error(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(NnError::Core(rhm_core::RhmError::NotEnoughSamples("empty test set".into())));
    }
    let mut wrong = 0usize;
    for chunk in data.data.chunks(1024) {
        let pred = argmax_rows(&net.forward(&encode(chunk, net.input.v))?.logits);
        wrong += pred.iter().zip(chunk).filter(|(p, d)| **p != d.label).count();
    }
    Ok(wrong as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ArchKind, Architecture};
    use rhm_core::dataset::sample_training_set;
    use rhm_core::rng::substream;
    use rhm_core::{ModelParams, RhmInstance};

    #[test]
    fn single_datum_is_memorized() {
        let p = ModelParams::symmetric(4, 2, 2, 0);
        let inst = RhmInstance::build(p).unwrap();
        let one = sample_training_set(&inst, 1, &mut substream(0, 1)).unwrap();
        for kind in ArchKind::ALL {
            let mut net = Network::init(Architecture::default_for(kind, &p), &p, &mut substream(0, 2)).unwrap();
            let out = train(&mut net, &one, &TrainConfig::default(), &mut substream(0, 3)).unwrap();
            assert!(out.converged && out.epochs < 100, "{kind}: {} epochs", out.epochs);
            assert_eq!(test_error(&net, &one).unwrap(), 0.0);
        }
    }

    #[test]
    fn history_is_reproducible() {
        let p = ModelParams::symmetric(3, 2, 2, 1);
        let inst = RhmInstance::build(p).unwrap();
        let data = sample_training_set(&inst, 20, &mut substream(1, 1)).unwrap();
        let cfg = TrainConfig { max_epochs: 5, ..Default::default() };
        let run = || {
            let mut net = Network::init(Architecture::default_for(ArchKind::TreeCnn, &p), &p, &mut substream(1, 2)).unwrap();
            train(&mut net, &data, &cfg, &mut substream(1, 3)).unwrap().loss_history
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_reported() {
        let p = ModelParams::symmetric(3, 2, 2, 1);
        let inst = RhmInstance::build(p).unwrap();
        let data = sample_training_set(&inst, 20, &mut substream(1, 1)).unwrap();
        let mut net = Network::init(Architecture::default_for(ArchKind::DeepFcn, &p), &p, &mut substream(1, 2)).unwrap();
        let cfg = TrainConfig { learning_rate: 1e200, max_epochs: 20, ..Default::default() };
        assert!(matches!(train(&mut net, &data, &cfg, &mut substream(0, 0)), Err(NnError::Diverged { .. })));
    }

    #[test]
    fn constant_predictor_error() {
        let p = ModelParams::symmetric(3, 2, 2, 1);
        let inst = RhmInstance::build(p).unwrap();
        let all = rhm_core::dataset::enumerate_dataset(&inst, 1000).unwrap();
        let net = Network::zeros(Architecture::default_for(ArchKind::ShallowFcn, &p), &p).unwrap();
        assert!((test_error(&net, &all).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }
}
