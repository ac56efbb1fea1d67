use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use foresee_core::analysis::{self, Scaling, DEFAULT_WINDOW};
use rayon::prelude::*;

use crate::common::{self, write_file};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    /// Share of pixels per depth window.
    Values,
    /// Share of pixels per Laplacian level.
    Gradients,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScalingArg {
    PerImage,
    Global,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    gt_dir: PathBuf,
    #[arg(long)]
    label_dir: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Depth window width in meters.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: f64,
    /// Window upper ends in meters, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32,40,48,56,64,72,80")]
    anchors: Vec<f64>,
    /// Min-max normalization of Laplacian magnitudes.
    #[arg(long, value_enum, default_value_t = ScalingArg::PerImage)]
    scaling: ScalingArg,
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Also write the report as TSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args, root: Option<&Path>) -> Result<()> {
    let gt_dir = common::resolve(root, &args.gt_dir);
    let label_dir = common::resolve(root, &args.label_dir);
    let ids = common::select_ids(args.split.as_deref(), &gt_dir, "png")?;
    if ids.is_empty() {
        anyhow::bail!("no samples found in {}", gt_dir.display());
    }
    common::require_files(&ids, &gt_dir, "png", "ground truth")?;
    common::require_files(&ids, &label_dir, "txt", "labels")?;
    let filter = common::class_filter(&args.classes);
    let scenes = ids
        .par_iter()
        .map(|id| {
            let gt = common::load_depth(&gt_dir.join(format!("{id}.png")))?;
            let mask = common::load_mask(&label_dir.join(format!("{id}.txt")), &filter, gt.height(), gt.width())?;
            Ok((gt, mask))
        })
        .collect::<Result<Vec<_>>>()?;

    let (text, tsv) = match args.mode {
        Mode::Values => {
            let r = analysis::depth_value_distribution(&scenes, args.window, &args.anchors)?;
            (r.to_text(), r.to_tsv())
        }
        Mode::Gradients => {
            let scaling = match args.scaling {
                ScalingArg::PerImage => Scaling::PerImage,
                ScalingArg::Global => Scaling::Global,
            };
            let r = analysis::gradient_distribution(&scenes, scaling)?;
            (r.to_text(), r.to_tsv())
        }
    };
    print!("{text}");
    if let Some(out) = &args.out {
        write_file(out, tsv)?;
    }
    Ok(())
}
