//! Foreground/background separated monocular depth estimation toolkit.
//!
//! Building blocks for treating depth as log-space bin classification with
//! region-aware objectives:
//!
//! - [`depth`]: bin specs, depth maps, masks, logit volumes, decoding
//! - [`losses`]: region-weighted cross-entropy objectives and gradients
//! - [`fusion`]: max and mask merging of two decoder branches
//! - [`metrics`]: absRel / sqRel / SILog / log10 / delta at three levels
//! - [`analysis`]: depth-value and Laplacian-gradient statistics
//! - [`pointcloud`]: pseudo-LiDAR back-projection and export
//! - [`dataio`]: KITTI-style files and the logit interchange format
//! - [`toytrain`]: synthetic scenes and a small two-head model trained by
//!   hand-written backprop

pub mod analysis;
pub mod dataio;
pub mod depth;
pub mod error;
pub mod fusion;
pub mod losses;
pub mod metrics;
pub mod pointcloud;
pub mod toytrain;

pub use depth::{decode_depthmap, BinSpec, DepthMap, ForegroundMask, LogitVolume, Region};
pub use error::{Error, Result};
