use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use foresee_core::dataio::{self, DEFAULT_CALIB_KEY};
use foresee_core::pointcloud::{self, ExportFormat, DEFAULT_MAX_HEIGHT};
use rayon::prelude::*;

use crate::common::{self, write_file};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    /// ASCII PLY.
    Ply,
    /// KITTI velodyne layout, little-endian f32 `x y z r`.
    Bin,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Depth PNGs, `<id>.png`.
    #[arg(long)]
    depth_dir: PathBuf,
    /// Calibration files, `<id>.txt`.
    #[arg(long)]
    calib_dir: PathBuf,
    /// Point clouds are written to `<out-dir>/<id>.<ply|bin>`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Keep points at most this many meters above the sensor (`inf` keeps all).
    #[arg(long, default_value_t = DEFAULT_MAX_HEIGHT)]
    max_height: f64,
    /// Height of the sensor above the camera origin, meters.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sensor_offset: f64,
    #[arg(long, value_enum, default_value_t = Format::Bin)]
    format: Format,
    /// Projection matrix key in the calibration files.
    #[arg(long, default_value = DEFAULT_CALIB_KEY)]
    calib_key: String,
    #[arg(long)]
    split: Option<PathBuf>,
}

pub fn run(args: Args, root: Option<&Path>) -> Result<()> {
    let depth_dir = common::resolve(root, &args.depth_dir);
    let calib_dir = common::resolve(root, &args.calib_dir);
    let ids = common::select_ids(args.split.as_deref(), &depth_dir, "png")?;
    common::require_files(&ids, &depth_dir, "png", "depth map")?;
    common::require_files(&ids, &calib_dir, "txt", "calibration")?;
    let format = match args.format {
        Format::Ply => ExportFormat::AsciiPly,
        Format::Bin => ExportFormat::KittiBin,
    };
    let counts = ids
        .par_iter()
        .map(|id| -> Result<usize> {
            let depth = common::load_depth(&depth_dir.join(format!("{id}.png")))?;
            let calib_path = calib_dir.join(format!("{id}.txt"));
            let text = fs::read_to_string(&calib_path).with_context(|| format!("reading {}", calib_path.display()))?;
            let k = dataio::parse_calib(&text, &args.calib_key)
                .with_context(|| format!("parsing calibration {}", calib_path.display()))?;
            let cloud = pointcloud::depth_to_points(&depth, &k);
            let kept = pointcloud::filter_height(&cloud, args.max_height, args.sensor_offset)?;
            let out = args.out_dir.join(format!("{id}.{}", format.extension()));
            write_file(&out, pointcloud::export_to_vec(&kept, format))?;
            Ok(kept.len())
        })
        .collect::<Result<Vec<_>>>()?;
    for (id, n) in ids.iter().zip(&counts) {
        println!("{id}\t{n}");
    }
    Ok(())
}
