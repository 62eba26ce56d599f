use std::fmt;
use std::str::FromStr;

use rhm_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    /// One hidden layer acting on the whole input.
    ShallowFcn,
    /// A stack of fully connected hidden layers.
    DeepFcn,
    /// One shared filter per level, with filter size and stride `s`.
    TreeCnn,
}

impl ArchKind {
    pub const ALL: [ArchKind; 3] = [ArchKind::ShallowFcn, ArchKind::DeepFcn, ArchKind::TreeCnn];

    pub fn name(self) -> &'static str {
        match self {
            ArchKind::ShallowFcn => "shallow-fcn",
            ArchKind::DeepFcn => "deep-fcn",
            ArchKind::TreeCnn => "tree-cnn",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchKind {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        ArchKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| NnError::Architecture(format!("unknown architecture {s:?}")))
    }
}

/// Default hidden layers of a deep FCN.
pub const DEEP_FCN_LAYERS: usize = 3;
pub const SHALLOW_FCN_WIDTH: usize = 1024;
pub const DEEP_FCN_WIDTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ArchKind,
    /// Hidden units per layer (channels per position for the tree CNN).
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
}

impl Architecture {
    /// Desk-scale defaults. The tree CNN is wider than the number of possible
    /// s-tuples, `max(2 v^s, 256)`, and has one layer per level.
    pub fn default_for(kind: ArchKind, params: &ModelParams) -> Self {
        let (width, depth) = match kind {
            ArchKind::ShallowFcn => (SHALLOW_FCN_WIDTH, 1),
            ArchKind::DeepFcn => (DEEP_FCN_WIDTH, DEEP_FCN_LAYERS),
            ArchKind::TreeCnn => ((2 * params.n_tuples()).max(256), params.depth),
        };
        Self { kind, width, depth }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.width == 0 || self.depth == 0 {
            return Err(NnError::Architecture("width and depth must be positive".into()));
        }
        match self.kind {
            ArchKind::ShallowFcn if self.depth != 1 => {
                Err(NnError::Architecture("a shallow FCN has exactly one hidden layer".into()))
            }
            ArchKind::TreeCnn if self.depth != params.depth => Err(NnError::Architecture(format!(
                "a tree CNN needs one layer per level: depth {} for L = {}",
                self.depth, params.depth
            ))),
            _ => Ok(()),
        }
    }

    /// The tree CNN should be wider than the number of s-tuples it must tell apart.
    pub fn width_warning(&self, params: &ModelParams) -> Option<String> {
        (self.kind == ArchKind::TreeCnn && self.width <= params.n_tuples()).then(|| {
            format!(
                "tree CNN width {} does not exceed v^s = {}",
                self.width,
                params.n_tuples()
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ArchKind::ALL {
            assert_eq!(k.name().parse::<ArchKind>().unwrap(), k);
        }
        assert!("cnn".parse::<ArchKind>().is_err());
    }

    #[test]
    fn defaults() {
        let p = ModelParams::symmetric(8, 2, 3, 0);
        let a = Architecture::default_for(ArchKind::TreeCnn, &p);
        assert_eq!((a.width, a.depth), (256, 3));
        assert!(a.validate(&p).is_ok());
        assert!(a.width_warning(&p).is_none());
        let p = ModelParams::symmetric(16, 2, 2, 0);
        assert_eq!(Architecture::default_for(ArchKind::TreeCnn, &p).width, 512);
    }

    #[test]
    fn narrow_tree_warns_and_wrong_depth_fails() {
        let p = ModelParams::symmetric(8, 2, 2, 0);
        let a = Architecture { kind: ArchKind::TreeCnn, width: 64, depth: 2 };
        assert!(a.width_warning(&p).is_some());
        let a = Architecture { depth: 3, ..a };
        assert!(a.validate(&p).is_err());
        let a = Architecture { kind: ArchKind::ShallowFcn, width: 8, depth: 2 };
        assert!(a.validate(&p).is_err());
    }
}
