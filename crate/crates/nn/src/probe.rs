use rhm_core::rng::Rng;
use rhm_core::sensitivity::LayerActivations;
use rhm_core::{sensitivity_matrix, Dataset, Datum, RhmInstance, SensitivityConfig, SensitivityReport};

use crate::error::Result;
use crate::network::Network;
use crate::train::encode;

/// Every layer of the network on a batch: the one-hot input (layer 0), each
/// hidden layer, and the logits as the last layer.
pub fn layer_activations(net: &Network, batch: &[Datum]) -> Result<LayerActivations> {
    let mut out: LayerActivations = vec![Vec::with_capacity(batch.len()); net.hidden.len() + 2];
    for chunk in batch.chunks(1024) {
        let fwd = net.forward(&encode(chunk, net.input.v))?;
        for (k, layer) in out.iter_mut().enumerate() {
            layer.extend((0..chunk.len()).map(|i| fwd.layer_of(k, i).to_vec()));
        }
    }
    Ok(out)
}

/// Synonymic sensitivity of every layer (including input and logits) to every
/// level `1..=L`.
pub fn sensitivity_profile(
    net: &Network,
    instance: &RhmInstance,
    probe: &Dataset,
    config: &SensitivityConfig,
    rng: &mut Rng,
) -> Result<SensitivityReport> {
    let levels: Vec<usize> = (1..=instance.params().depth).collect();
    let layers = |batch: &[Datum]| layer_activations(net, batch).expect("probe data match the network input");
    Ok(sensitivity_matrix(layers, instance, &levels, probe, config, rng)?)
}
