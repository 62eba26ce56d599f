//! Central finite differences against backpropagation.

use ndarray::Array2;
use rand::Rng as _;
use rhm_core::rng::Rng;
use rhm_core::ModelParams;

use crate::arch::{ArchKind, Architecture};
use crate::error::Result;
use crate::network::{cross_entropy, Network};

/// Gradient of the mean cross-entropy by central differences of step `eps`.
pub fn numerical_gradient(net: &Network, x: &Array2<f64>, labels: &[usize], eps: f64) -> Result<Vec<f64>> {
    let theta = net.parameters();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(theta.len());
    let mut shifted = theta.clone();
    for i in 0..theta.len() {
        let mut loss_at = |value: f64| -> Result<f64> {
            shifted[i] = value;
            probe.set_parameters(&shifted)?;
            Ok(cross_entropy(&probe.forward(x)?.logits, labels)?.0)
        };
        let up = loss_at(theta[i] + eps)?;
        let down = loss_at(theta[i] - eps)?;
        shifted[i] = theta[i];
        out.push((up - down) / (2.0 * eps));
    }
    Ok(out)
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 { 0.0 } else { norm(&diff) / scale }
}

/// A small random network with random biases and a random batch.
pub struct TinyCase {
    pub net: Network,
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
}

pub fn random_tiny_case(kind: ArchKind, rng: &mut Rng) -> Result<TinyCase> {
    let v = rng.random_range(2..=3);
    let s = rng.random_range(2..=3);
    let depth = rng.random_range(1..=2);
    let n_classes = rng.random_range(2..=v.min(3));
    let params = ModelParams::new(v, 1, s, depth, n_classes, 0);
    let width = rng.random_range(2..=5);
    let hidden = match kind {
        ArchKind::ShallowFcn => 1,
        ArchKind::DeepFcn => rng.random_range(1..=3),
        ArchKind::TreeCnn => depth,
    };
    let arch = Architecture { kind, width, depth: hidden };
    let mut net = Network::init(arch, &params, rng)?;
    let theta: Vec<f64> = net
        .parameters()
        .iter()
        .map(|&w| w + 0.3 * rng.random_range(-1.0..1.0))
        .collect();
    net.set_parameters(&theta)?;
    let batch = rng.random_range(1..=6);
    let positions = params.input_dim();
    let mut x = Array2::zeros((batch, positions * v));
    for mut row in x.rows_mut() {
        for j in 0..positions {
            row[j * v + rng.random_range(0..v)] = 1.0;
        }
    }
    let labels = (0..batch).map(|_| rng.random_range(0..n_classes)).collect();
    Ok(TinyCase { net, x, labels })
}
