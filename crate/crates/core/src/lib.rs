//! Bit-exact simulation and error analysis of approximate array multipliers.
//!
//! * [`adder`]: full adders as truth tables, library documents.
//! * [`fabric`]: array multiplier grids built from adder cells.
//! * [`metrics`]: ER, MED, NED, MRED, MSE and PSNR over exhaustive sweeps.
//! * [`cluster`]: per-input-region statistics and ED histograms.
//! * [`design`]: the 20-design library, its accuracy table, per-cluster selection.
//!
//! Sweeps use rayon when the `parallel` feature is enabled (the default).
//! Results do not depend on the worker count.

pub mod adder;
pub mod cluster;
pub mod design;
pub mod error;
pub mod fabric;
pub mod metrics;
pub mod par;
pub mod svg;

pub use adder::{exact_full_adder, load_library, AdderLibrary, FullAdderSpec};
pub use cluster::{cluster_sweep, ed_histogram, ClusterReport, ClusterSpec, EdHistogram};
pub use design::{enumerate_library, library_metrics_table, select_per_cluster, DesignId};
pub use error::{Error, Result};
pub use fabric::{build_multiplier, exact_multiply, Architecture, CellGrid, MultiplierConfig};
pub use metrics::{exhaustive_sweep, finalize, psnr_from_mse, MetricAccumulator, MetricReport};
