//! Dataset inventories, class/size-matched resplitting and a synthetic
//! variable-size image generator.

pub mod manifest;
pub mod split;
pub mod synth;

pub use manifest::{resolve, DatasetManifest, ManifestEntry, Split};
pub use split::{distribution_report, stratified_resplit, DistributionReport, SizeBins};
pub use synth::{synth_dataset, SynthSpec};
