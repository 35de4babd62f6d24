//! Classifiers, quantization, memoization and host-side ensembling.

mod ensemble;
mod features;
mod host;
mod io;
mod memo;
mod mlp;
mod quant;

pub use ensemble::ensemble;
pub use features::{cluster_features, sample_features, DirectModel};
pub use host::{calibrate_cluster_budget, cluster_roundtrip, reconstructed_sets, sample_roundtrip, via_cluster, via_sample, HostModels};
pub use io::{from_bytes, load_model, save_model, to_bytes};
pub use memo::{correlate, correlation, TemplateBank};
pub use mlp::{argmax, softmax, Gradients, Mlp, TrainConfig};
pub use quant::{accuracy, encode_set, infer, quantize, quantize_finetuned, train, InputSpec, QTensor, QuantModel, QuantWeights, ACTIVATION_BITS};
