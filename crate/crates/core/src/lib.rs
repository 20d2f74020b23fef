//! Detection, estimation and exploitation of network effects in labeled graphs.
//!
//! The crate covers three stages:
//!
//! * [`detect`]: a sampled χ² test per class pair deciding whether classes
//!   connect non-randomly, summarized as a none / weak / strong verdict;
//! * [`estimate`]: a closed-form ridge fit of the class compatibility matrix
//!   with leave-one-out selection of the regularization strength;
//! * [`propagate`]: linearized belief propagation over an [`emphasis`]-weighted
//!   adjacency, followed by argmax prediction.
//!
//! Data-parallel kernels use rayon when the `parallel` feature is enabled
//! (the default) and plain iterators otherwise; results are identical either
//! way and do not depend on the thread count.

pub mod beliefs;
pub mod detect;
pub mod emphasis;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod propagate;
pub mod seed;
pub mod sparse;
pub mod spectral;
pub mod svd;
pub mod synth;

pub use beliefs::{initial_beliefs, BeliefMatrix, CompatibilityForm, CompatibilityMatrix};
pub use detect::{run_test, verdict, EffectLevel, GneVerdict, PValueTable, TestConfig};
pub use emphasis::{emphasis_matrix, WalkConfig};
pub use error::{Error, Result};
pub use estimate::{edge_counting_baseline, estimate_compatibility, RidgeConfig};
pub use graph::Graph;
pub use labels::{sample_priors, LabelSet, PriorSet};
pub use pipeline::{classify, ClassifyConfig, Mode};
pub use propagate::{predict, propagate, PropagationConfig};
pub use sparse::SparseWeightedMatrix;
pub use synth::{generate, GeneratorSpec};
