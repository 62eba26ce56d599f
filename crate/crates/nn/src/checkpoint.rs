//! JSON weight dumps with an architecture header.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::arch::{ArchKind, Architecture};
use crate::error::{NnError, Result};
use crate::network::{Dense, InputShape, Network};

pub const FORMAT: &str = "rhm-nn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDump {
    fan_in: usize,
    fan_out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dump {
    format: String,
    version: u32,
    arch: Architecture,
    input: InputShape,
    hidden: Vec<LayerDump>,
    readout: LayerDump,
}

fn dump(d: &Dense) -> LayerDump {
    LayerDump {
        fan_in: d.w.nrows(),
        fan_out: d.w.ncols(),
        w: d.w.iter().copied().collect(),
        b: d.b.to_vec(),
    }
}

fn restore(l: LayerDump, fan_in: usize, fan_out: usize, name: &str) -> Result<Dense> {
    if (l.fan_in, l.fan_out) != (fan_in, fan_out) {
        return Err(NnError::Checkpoint(format!(
            "{name}: shape {}x{}, expected {fan_in}x{fan_out}",
            l.fan_in, l.fan_out
        )));
    }
    if l.b.len() != fan_out || l.w.iter().chain(&l.b).any(|x| !x.is_finite()) {
        return Err(NnError::Checkpoint(format!("{name}: bad bias length or non-finite value")));
    }
    let w = Array2::from_shape_vec((fan_in, fan_out), l.w)
        .map_err(|_| NnError::Checkpoint(format!("{name}: weight count does not match its shape")))?;
    Ok(Dense { w, b: Array1::from(l.b) })
}

pub fn to_json(net: &Network) -> String {
    let d = Dump {
        format: FORMAT.into(),
        version: VERSION,
        arch: net.arch,
        input: net.input,
        hidden: net.hidden.iter().map(dump).collect(),
        readout: dump(&net.readout),
    };
    serde_json::to_string(&d).expect("checkpoint serializes")
}

/// Parses and validates a checkpoint: header, architecture rules and every
/// layer shape are checked against the declared input.
pub fn from_json(text: &str) -> Result<Network> {
    let d: Dump = serde_json::from_str(text)?;
    if d.format != FORMAT || d.version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported format {} v{}", d.format, d.version)));
    }
    let (arch, input) = (d.arch, d.input);
    let sane = arch.width > 0
        && arch.depth > 0
        && input.v > 0
        && input.s > 1
        && input.n_classes > 0
        && input.positions > 0
        && input.positions.checked_mul(input.v).is_some()
        && arch.width.checked_mul(input.s.max(input.positions * input.v)).is_some();
    if !sane {
        return Err(NnError::Checkpoint("degenerate architecture or input header".into()));
    }
    if arch.kind == ArchKind::TreeCnn {
        let ok = input.s.checked_pow(arch.depth as u32) == Some(input.positions);
        if !ok {
            return Err(NnError::Checkpoint(format!(
                "tree CNN of depth {} cannot cover {} positions with stride {}",
                arch.depth, input.positions, input.s
            )));
        }
    }
    if arch.kind == ArchKind::ShallowFcn && arch.depth != 1 {
        return Err(NnError::Checkpoint("shallow FCN with several hidden layers".into()));
    }
    if d.hidden.len() != arch.depth {
        return Err(NnError::Checkpoint(format!("{} hidden layers for depth {}", d.hidden.len(), arch.depth)));
    }
    let mut hidden = Vec::with_capacity(arch.depth);
    for (k, l) in d.hidden.into_iter().enumerate() {
        let fan_in = match (arch.kind, k) {
            (ArchKind::TreeCnn, 0) => input.s * input.v,
            (ArchKind::TreeCnn, _) => input.s * arch.width,
            (_, 0) => input.input_len(),
            _ => arch.width,
        };
        hidden.push(restore(l, fan_in, arch.width, &format!("hidden layer {k}"))?);
    }
    let readout = restore(d.readout, arch.width, input.n_classes, "readout")?;
    Ok(Network { arch, input, hidden, readout })
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(net))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Network> {
    from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhm_core::rng::substream;
    use rhm_core::ModelParams;

    #[test]
    fn round_trip_is_exact() {
        let p = ModelParams::new(3, 2, 2, 2, 2, 0);
        for kind in ArchKind::ALL {
            let arch = Architecture { kind, width: 4, depth: if kind == ArchKind::ShallowFcn { 1 } else { 2 } };
            let net = Network::init(arch, &p, &mut substream(1, 0)).unwrap();
            assert_eq!(from_json(&to_json(&net)).unwrap(), net);
        }
    }

    #[test]
    fn tampered_shapes_are_rejected() {
        let p = ModelParams::new(3, 2, 2, 2, 2, 0);
        let arch = Architecture { kind: ArchKind::TreeCnn, width: 4, depth: 2 };
        let net = Network::init(arch, &p, &mut substream(1, 0)).unwrap();
        let text = to_json(&net);
        assert!(from_json(&text.replace("\"positions\":4", "\"positions\":8")).is_err());
        assert!(from_json(&text.replace("\"fan_out\":2", "\"fan_out\":3")).is_err());
        assert!(from_json(&text.replace(FORMAT, "other")).is_err());
        assert!(from_json("{").is_err());
    }
}
