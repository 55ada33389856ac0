//! Dataset ingestion and the three-stage memorizer.
//!
//! Stage 1 projects the points to a line with pairwise gaps of at least 2.
//! Stage 2 maps each projected value to the code words of its bucket.
//! Stage 3 reads the code words block by block and emits the label whose
//! stored floor matches the input.

mod assemble;
mod codes;
mod dataset;
mod stage1;
mod stage2;
mod stage3;
mod verify;

pub use assemble::{
    assemble_sqrt, build_subnet, project_sorted, regression_grid, regression_wrap, BuildConfig,
    Projected, RegressionGrid, Subnet,
};
pub use codes::{craft_codes, default_bucket_count, floor_nat, CraftedCode};
pub use dataset::Dataset;
pub use stage1::{
    project_to_line, retry_budget_from_env, truncation_bits, verify_projection, Projection1D,
    DEFAULT_CANDIDATES, DEFAULT_RETRY_BUDGET,
};
pub use stage2::build_stage2;
pub use stage3::build_stage3;
pub use verify::{eval_dataset, eval_dataset_float, eval_point, eval_point_trace};
