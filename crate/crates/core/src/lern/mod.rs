//! Offline reuse learning for accelerator traces.
//!
//! Every cache line of a layer gets a reuse vector; its reuse count and a
//! four-bin histogram of its reuse intervals are clustered separately with
//! k-means, and the clusters are named Cold..Hot and Immediate..Remote.
//! Lines seen once form the No-Reuse class.

mod accuracy;
mod annotate;
mod export;
mod features;
mod kmeans;
pub(crate) mod model;
mod signature;
mod silhouette;

pub use accuracy::{line_accuracy, line_hits, prediction_accuracy};
pub use annotate::{
    annotate_rc_clusters, annotate_ri_clusters, ri_rule, RcLabel, RiLabel, DOMINANCE_RATIO,
};
pub use export::{export_model, import_model, sidecar_path};
pub use features::{extract_features, ri_bin, ri_feature, RIFeature, RI_BIN_BOUNDS};
pub use kmeans::{kmeans, KMeansResult, MinMax, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use model::{
    fit_signature, train_layer, train_layer_hashed, train_layer_with, ClusterModel, LernParams,
    NO_REUSE,
};
pub use signature::{
    build_reuse_signature, build_reuse_signature_keyed, per_access_reuse, LineReuse, ReuseVector,
    SignatureTrace,
};
pub use silhouette::silhouette;
