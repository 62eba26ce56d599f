//! Shallow and deep fully connected networks and the tree CNN matching the
//! hierarchy, trained with minibatch SGD and hand-written backpropagation.

pub mod arch;
pub mod checkpoint;
mod error;
pub mod gradcheck;
pub mod network;
pub mod probe;
pub mod scan;
pub mod train;

pub use arch::{ArchKind, Architecture};
pub use error::{NnError, Result};
pub use network::{cross_entropy, Forward, Gradients, InputShape, Network};
pub use probe::{layer_activations, sensitivity_profile};
pub use scan::{
    read_records, sample_complexity_scan, write_records, ScanConfig, ScanPoint, ScanRecord, ScanResult, Source,
    Threshold,
};
pub use train::{encode, test_error, train, TrainConfig, TrainOutcome};
