//! Networks as stacks of dense maps over reshaped activations.
//!
//! Every hidden layer is `relu(X W + b)` applied row-wise. For fully
//! connected networks a row is one datum. For the tree CNN the input is first
//! viewed as one row per position (`v` channels) and every layer starts by
//! merging `s` consecutive rows into one, so that a single weight matrix is
//! shared by all patches of a level. Rows stay position-major, which makes a
//! layer's output for datum `i` the contiguous block of rows belonging to it.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Normal};
use rhm_core::rng::Rng;
use rhm_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::arch::{ArchKind, Architecture};
use crate::error::{NnError, Result};

/// Input geometry shared by all architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub v: usize,
    pub s: usize,
    /// Input positions, `s^L`.
    pub positions: usize,
    pub n_classes: usize,
}

impl InputShape {
    pub fn of(params: &ModelParams) -> Self {
        Self {
            v: params.v,
            s: params.s,
            positions: params.input_dim(),
            n_classes: params.n_classes,
        }
    }

    pub fn input_len(&self) -> usize {
        self.positions * self.v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { w: Array2::zeros((fan_in, fan_out)), b: Array1::zeros(fan_out) }
    }

    fn gaussian(fan_in: usize, fan_out: usize, var: f64, rng: &mut Rng) -> Self {
        let normal = Normal::new(0.0, var.sqrt()).expect("positive variance");
        Self {
            w: Array2::from_shape_simple_fn((fan_in, fan_out), || normal.sample(rng)),
            b: Array1::zeros(fan_out),
        }
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w);
        z += &self.b;
        z
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub input: InputShape,
    pub hidden: Vec<Dense>,
    pub readout: Dense,
}

/// Activations of one forward pass. `acts[0]` is the encoded input and
/// `acts[k]` the output of hidden layer `k`, each in the row layout of its layer.
#[derive(Debug, Clone)]
pub struct Forward {
    pub batch: usize,
    pub acts: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

impl Forward {
    /// Layer `k` of datum `i`, flattened position-major and channel-minor.
    /// `k = acts.len()` addresses the logits.
    pub fn layer_of(&self, k: usize, i: usize) -> &[f64] {
        let a = if k == self.acts.len() { &self.logits } else { &self.acts[k] };
        let per = a.len() / self.batch;
        &a.as_slice().expect("standard layout")[i * per..(i + 1) * per]
    }

    pub fn n_layers(&self) -> usize {
        self.acts.len() + 1
    }
}

/// Gradients with the shape of the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<Dense>,
    pub readout: Dense,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.hidden, &self.readout)
    }
}

fn flatten(hidden: &[Dense], readout: &Dense) -> Vec<f64> {
    hidden
        .iter()
        .chain(std::iter::once(readout))
        .flat_map(|d| d.w.iter().chain(d.b.iter()).copied())
        .collect()
}

impl Network {
    /// Hidden weights are Gaussian with variance `2/fan_in`, the readout with
    /// variance `1/fan_in`; biases start at zero.
    pub fn init(arch: Architecture, params: &ModelParams, rng: &mut Rng) -> Result<Self> {
        params.validate()?;
        arch.validate(params)?;
        if let Some(w) = arch.width_warning(params) {
            log::warn!("{w}");
        }
        let input = InputShape::of(params);
        let mut hidden = Vec::with_capacity(arch.depth);
        for k in 0..arch.depth {
            let fan_in = match (arch.kind, k) {
                (ArchKind::TreeCnn, 0) => input.s * input.v,
                (ArchKind::TreeCnn, _) => input.s * arch.width,
                (_, 0) => input.input_len(),
                _ => arch.width,
            };
            hidden.push(Dense::gaussian(fan_in, arch.width, 2.0 / fan_in as f64, rng));
        }
        let readout = Dense::gaussian(arch.width, input.n_classes, 1.0 / arch.width as f64, rng);
        Ok(Self { arch, input, hidden, readout })
    }

    /// All parameters set to zero.
    pub fn zeros(arch: Architecture, params: &ModelParams) -> Result<Self> {
        let mut net = Self::init(arch, params, &mut rhm_core::rng::substream(0, 0))?;
        net.set_parameters(&vec![0.0; net.n_params()])?;
        Ok(net)
    }

    pub fn n_params(&self) -> usize {
        self.hidden.iter().map(Dense::n_params).sum::<usize>() + self.readout.n_params()
    }

    /// Weights then biases of each hidden layer, then the readout.
    pub fn parameters(&self) -> Vec<f64> {
        flatten(&self.hidden, &self.readout)
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params() {
            return Err(NnError::Shape(format!(
                "{} parameter values for a network with {}",
                values.len(),
                self.n_params()
            )));
        }
        let mut it = values.iter().copied();
        for d in self.hidden.iter_mut().chain(std::iter::once(&mut self.readout)) {
            d.w.iter_mut().chain(d.b.iter_mut()).for_each(|x| *x = it.next().unwrap());
        }
        Ok(())
    }

    fn merge(&self) -> usize {
        match self.arch.kind {
            ArchKind::TreeCnn => self.input.s,
            _ => 1,
        }
    }

    /// Row layout fed to hidden layer `k`.
    fn layer_input<'a>(&self, act: &'a Array2<f64>) -> ArrayView2<'a, f64> {
        let g = self.merge();
        let (rows, cols) = act.dim();
        act.view()
            .into_shape_with_order((rows / g, cols * g))
            .expect("contiguous activations")
    }

    /// Runs the network on a batch given as one encoded datum per row.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Forward> {
        let (batch, len) = x.dim();
        if len != self.input.input_len() {
            return Err(NnError::Shape(format!(
                "input rows of length {len}, expected {}",
                self.input.input_len()
            )));
        }
        let first = match self.arch.kind {
            ArchKind::TreeCnn => x
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((batch * self.input.positions, self.input.v))
                .expect("contiguous input"),
            _ => x.to_owned(),
        };
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(first);
        for layer in &self.hidden {
            let mut z = layer.apply(self.layer_input(acts.last().unwrap()));
            // Written so that NaN propagates and divergence stays visible.
            z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
            acts.push(z);
        }
        let logits = self.readout.apply(acts.last().unwrap().view());
        Ok(Forward { batch, acts, logits })
    }

    /// Mean cross-entropy of the logits and its gradient.
    pub fn loss_and_gradients(&self, x: &Array2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
        let fwd = self.forward(x)?;
        let (loss, dlogits) = cross_entropy(&fwd.logits, labels)?;
        Ok((loss, self.backward(&fwd, dlogits)))
    }

    /// Backpropagates `dlogits` (gradient of the loss with respect to the logits).
    pub fn backward(&self, fwd: &Forward, dlogits: Array2<f64>) -> Gradients {
        let last = fwd.acts.last().unwrap();
        let readout = Dense { w: last.t().dot(&dlogits), b: dlogits.sum_axis(Axis(0)) };
        let mut da = dlogits.dot(&self.readout.w.t());
        let mut hidden = vec![None; self.hidden.len()];
        for k in (0..self.hidden.len()).rev() {
            Zip::from(&mut da).and(&fwd.acts[k + 1]).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            let input = self.layer_input(&fwd.acts[k]);
            hidden[k] = Some(Dense { w: input.t().dot(&da), b: da.sum_axis(Axis(0)) });
            if k > 0 {
                let din = da.dot(&self.hidden[k].w.t());
                da = din.into_shape_with_order(fwd.acts[k].dim()).expect("contiguous gradient");
            }
        }
        Gradients { hidden: hidden.into_iter().map(Option::unwrap).collect(), readout }
    }

    /// `θ ← θ - lr · g`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        let layers = self.hidden.iter_mut().chain(std::iter::once(&mut self.readout));
        let grads = grads.hidden.iter().chain(std::iter::once(&grads.readout));
        for (p, g) in layers.zip(grads) {
            p.w.scaled_add(-lr, &g.w);
            p.b.scaled_add(-lr, &g.b);
        }
    }

    /// Index of the largest logit of every row, lowest class on ties.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.forward(x)?.logits))
    }
}

pub fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Mean cross-entropy over rows, computed with log-sum-exp, and its gradient
/// `(softmax - onehot) / B`.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (b, nc) = logits.dim();
    if labels.len() != b {
        return Err(NnError::Shape(format!("{} labels for {b} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= nc) {
        return Err(NnError::Shape(format!("label {bad} with {nc} classes")));
    }
    let mut grad = logits.clone();
    let mut loss = 0.0;
    for (mut row, &y) in grad.rows_mut().into_iter().zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |a, &x| a.max(x));
        let shifted_y = row[y] - max;
        row.mapv_inplace(|x| (x - max).exp());
        let z: f64 = row.sum();
        loss += z.ln() - shifted_y;
        row.mapv_inplace(|x| x / z);
        row[y] -= 1.0;
    }
    grad /= b as f64;
    Ok((loss / b as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhm_core::rng::substream;

    fn params() -> ModelParams {
        ModelParams::new(3, 2, 2, 2, 3, 0)
    }

    #[test]
    fn zero_network_gives_uniform_loss() {
        let p = params();
        for kind in ArchKind::ALL {
            let net = Network::zeros(Architecture::default_for(kind, &p), &p).unwrap();
            let x = Array2::from_elem((5, 12), 1.0);
            let fwd = net.forward(&x).unwrap();
            assert!(fwd.logits.iter().all(|&z| z == 0.0));
            let (loss, _) = cross_entropy(&fwd.logits, &[0, 1, 2, 0, 1]).unwrap();
            assert!((loss - 3f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn tree_layer_positions_follow_the_stride() {
        let p = ModelParams::symmetric(3, 2, 3, 0);
        let arch = Architecture { kind: ArchKind::TreeCnn, width: 5, depth: 3 };
        let net = Network::init(arch, &p, &mut substream(0, 0)).unwrap();
        let fwd = net.forward(&Array2::zeros((4, 8 * 3))).unwrap();
        for (k, a) in fwd.acts.iter().enumerate().skip(1) {
            assert_eq!(a.nrows(), 4 * 2usize.pow(3 - k as u32));
        }
        assert_eq!(fwd.layer_of(1, 0).len(), 4 * 5);
    }

    #[test]
    fn same_seed_same_weights() {
        let p = params();
        let arch = Architecture::default_for(ArchKind::DeepFcn, &p);
        let a = Network::init(arch, &p, &mut substream(5, 0)).unwrap();
        let b = Network::init(arch, &p, &mut substream(5, 0)).unwrap();
        assert_eq!(a, b);
        let mut c = a.clone();
        c.set_parameters(&b.parameters()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn loss_is_stable_for_huge_logits() {
        let logits = Array2::from_shape_vec((2, 3), vec![1000.0, -1000.0, 0.0, -1000.0, 1000.0, 999.0]).unwrap();
        let (loss, grad) = cross_entropy(&logits, &[1, 2]).unwrap();
        assert!(loss.is_finite() && grad.iter().all(|g| g.is_finite()));
        assert!((loss - (2001.0 + (1.0 + (-1.0f64).exp()).ln()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let p = params();
        let net = Network::zeros(Architecture::default_for(ArchKind::TreeCnn, &p), &p).unwrap();
        assert!(net.forward(&Array2::zeros((2, 11))).is_err());
        assert!(cross_entropy(&Array2::zeros((2, 3)), &[0, 3]).is_err());
    }
}
