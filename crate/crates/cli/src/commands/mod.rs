pub mod eval;
pub mod preprocess;
pub mod report_cmd;
pub mod synth;
pub mod train;
