pub mod eval;
pub mod plan;
pub mod reduce;
pub mod report;
pub mod resample;
pub mod synth;
pub mod train;
pub mod transform;

pub use eval::EvalArgs;
pub use plan::PlanArgs;
pub use reduce::ReduceArgs;
pub use report::ReportArgs;
pub use resample::ResampleArgs;
pub use synth::SynthArgs;
pub use train::TrainArgs;
pub use transform::TransformArgs;
