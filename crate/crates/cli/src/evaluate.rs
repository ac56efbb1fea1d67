use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use foresee_core::metrics::{aggregate, evaluate, MetricsReport};
use rayon::prelude::*;

use crate::common::{self, write_file};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Predicted depth PNGs, `<id>.png`.
    #[arg(long)]
    pred_dir: PathBuf,
    /// Ground-truth depth PNGs, `<id>.png`.
    #[arg(long)]
    gt_dir: PathBuf,
    /// Object labels, `<id>.txt`.
    #[arg(long)]
    label_dir: PathBuf,
    /// Reports go to `<out>/aggregate.txt` and `<out>/samples/<id>.txt`.
    #[arg(long)]
    out: PathBuf,
    /// Sample ids to evaluate, one per line (default: every ground-truth PNG).
    #[arg(long)]
    split: Option<PathBuf>,
    /// Classes counted as foreground (default: every class but DontCare).
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Report SILog multiplied by 100.
    #[arg(long)]
    silog_x100: bool,
}

pub fn run(args: Args, root: Option<&Path>) -> Result<()> {
    let pred_dir = common::resolve(root, &args.pred_dir);
    let gt_dir = common::resolve(root, &args.gt_dir);
    let label_dir = common::resolve(root, &args.label_dir);
    let ids = common::select_ids(args.split.as_deref(), &gt_dir, "png")?;
    if ids.is_empty() {
        anyhow::bail!("no samples found in {}", gt_dir.display());
    }
    common::require_files(&ids, &gt_dir, "png", "ground truth")?;
    common::require_files(&ids, &pred_dir, "png", "prediction")?;
    common::require_files(&ids, &label_dir, "txt", "labels")?;
    let filter = common::class_filter(&args.classes);

    let reports = ids
        .par_iter()
        .map(|id| -> Result<MetricsReport> {
            let gt = common::load_depth(&gt_dir.join(format!("{id}.png")))?;
            let pred = common::load_depth(&pred_dir.join(format!("{id}.png")))?;
            let mask = common::load_mask(&label_dir.join(format!("{id}.txt")), &filter, gt.height(), gt.width())?;
            evaluate(&pred, &gt, &mask).with_context(|| format!("evaluating sample {id}"))
        })
        .collect::<Result<Vec<_>>>()?;

    for (id, report) in ids.iter().zip(&reports) {
        write_file(
            &args.out.join("samples").join(format!("{id}.txt")),
            report.to_key_value(args.silog_x100),
        )?;
    }
    let total = aggregate(&reports)?;
    write_file(&args.out.join("aggregate.txt"), total.to_key_value(args.silog_x100))?;
    print!("{} samples\n{}", ids.len(), total.to_text(args.silog_x100));
    Ok(())
}
