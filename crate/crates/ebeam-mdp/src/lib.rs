//! Differentiable variable-shaped-beam electron-beam lithography:
//! an exact erf-window exposure model, an FFT-accelerated fast model,
//! analytic shot-parameter gradients, a shot-level mask-data-preparation
//! optimizer, and a wafer-level inverse-lithography loop built on it.

// Validators spell range checks as `!(a > b)` so NaN fails them too; the
// `partial_cmp` rewrite clippy suggests would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod erf;
pub mod error;
pub mod exact;
pub mod fast;
pub mod fdiff;
mod fft;
pub mod field;
pub mod fracture;
pub mod grad;
pub mod io;
pub mod loss;
pub mod model;
pub mod opt;
pub mod optical;

pub use bench::{bench_csv, benchmark_methods, random_shot_set, BenchRow, BENCH_CSV_HEADER};
pub use config::{IoPaths, RunConfig};
pub use error::{Error, Result};
pub use field::RasterField;
pub use fracture::{fracture, rasterize, BinaryMask};
pub use grad::{
    adjoint_accumulate, adjoint_accumulate_fast, backprop_resist, ste_project, ShotGrad,
};
pub use loss::LossReport;
pub use model::{EblParams, LossWeights, OlParams, Shot, ShotBounds, ShotSet};
pub use opt::{
    ilt_forward, ilt_optimize, lr_schedule, mdp_optimize, ForwardModel, OptConfig, OptMode,
    OptTrace, UpdateFrom,
};
pub use optical::{cdr_retarget, magnify_4x, reduce_4x, CornerSet, OpticalModel};
