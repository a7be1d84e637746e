pub mod config;
pub mod distributions;
pub mod error;
pub mod extreme_lp;
pub mod lp_quantile;
pub mod numeric;
pub mod oracle;
pub mod output;
pub mod rolling;
pub mod sim_harness;
pub mod special;
pub mod tail_index;
pub mod trelt;
