//! Fuzzy clustering of ordinal time series.
//!
//! Series over an ordered range `s_0 < … < s_n` are summarized by estimated
//! cumulative marginal and lagged joint probabilities. Two dissimilarities are
//! built from those estimates, one on the probabilities themselves (`d1`) and
//! one on block-distance features and ordinal kappas (`d2`). The resulting
//! matrices feed standard or weighted fuzzy C-medoids.
//!
//! ```
//! use otsclust::{scenario, distance_matrix, fuzzy_cmedoids, ClusterConfig, Metric};
//!
//! let data = scenario(1, Some(200), 42).unwrap();
//! let dm = distance_matrix(&data.series, Metric::D1, &data.default_lags).unwrap();
//! let p = fuzzy_cmedoids(&dm.total, &ClusterConfig::new(4, 1.5).with_seed(1)).unwrap();
//! assert_eq!(p.memberships.len(), 20);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod clustering;
pub mod error;
pub mod estimation;
pub mod eval;
pub mod io;
pub mod lagsel;
pub mod matrix;
pub mod metrics;
pub mod series;
pub mod simgen;

pub use bench::{run_bench, BenchConfig, BenchReport};
pub use clustering::{
    cluster, combined_distance, crispify, fuzzy_cmedoids, update_beta, update_medoids, update_memberships,
    weighted_fuzzy_cmedoids, ClusterConfig, FuzzyPartition,
};
pub use error::{Error, Result};
pub use estimation::{build_repr, build_reprs, ordinal_kappa, partial_kappas, SeriesRepr};
pub use eval::{agreement, aufc, correct_classification, mds_2d, select_c_m, validity_indices, Embedding2D};
pub use lagsel::{select_lags, Correction, LagSelectionConfig, LagSelectionReport};
pub use matrix::SquareMatrix;
pub use metrics::{distance_matrix, pairwise_matrix, DistanceMatrix, Metric};
pub use series::{validate_series, LagSet, OrdinalRange, OrdinalSeries};
pub use simgen::{scenario, LabeledDataSet};
