use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use foresee_core::dataio;
use foresee_core::depth::{DEFAULT_D_MAX, DEFAULT_D_MIN};
use foresee_core::fusion::{mask_merge, max_merge};
use foresee_core::{decode_depthmap, BinSpec, LogitVolume};

use crate::common::{self, write_file};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    /// Element-wise maximum, no mask needed.
    Max,
    /// Foreground branch inside object boxes, background branch elsewhere.
    Mask,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Foreground-branch logit file.
    #[arg(long)]
    fg: PathBuf,
    /// Background-branch logit file.
    #[arg(long)]
    bg: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Max)]
    mode: Mode,
    /// Object labels selecting the foreground (mask mode).
    #[arg(long, required_if_eq("mode", "mask"))]
    labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Merged logit file.
    #[arg(long)]
    out: PathBuf,
    /// Also decode the merged logits into this depth PNG.
    #[arg(long)]
    depth_out: Option<PathBuf>,
    /// Depth range of the bins, meters; the bin count is the channel count.
    #[arg(long, default_value_t = DEFAULT_D_MIN)]
    d_min: f64,
    #[arg(long, default_value_t = DEFAULT_D_MAX)]
    d_max: f64,
}

fn load_logits(path: &Path) -> Result<LogitVolume> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    dataio::read_logits(&bytes).with_context(|| format!("decoding logits {}", path.display()))
}

pub fn run(args: Args) -> Result<()> {
    let fg = load_logits(&args.fg)?;
    let bg = load_logits(&args.bg)?;
    let merged = match args.mode {
        Mode::Max => max_merge(&fg, &bg)?,
        Mode::Mask => {
            let labels = args.labels.as_deref().expect("clap requires --labels in mask mode");
            let mask = common::load_mask(labels, &common::class_filter(&args.classes), fg.height(), fg.width())?;
            mask_merge(&fg, &bg, &mask)?
        }
    };
    write_file(&args.out, dataio::write_logits(&merged)?)?;
    if let Some(path) = &args.depth_out {
        let spec = BinSpec::new(args.d_min, args.d_max, merged.channels())?;
        let depth = decode_depthmap(&merged, &spec)?;
        write_file(path, dataio::write_depth_png(&depth)?)?;
    }
    Ok(())
}
