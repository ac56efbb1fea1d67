use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use foresee_core::toytrain::{self, ToyConfig, Variant, ABLATION_TSV_HEADER};

use crate::common::write_file;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Experiment {
    /// Single decoder over the configured foreground weights.
    Sweep,
    /// Baseline, SO, SD+SO and ForeSeE on every configured seed.
    Ablation,
    /// One model of `--variant` on the master seed.
    Single,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Baseline,
    So,
    SdSo,
    Foresee,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::So => Variant::SeparateObjective,
            VariantArg::SdSo => Variant::SeparateDecoders,
            VariantArg::Foresee => Variant::ForeSeE,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// TOML experiment config; omitted sections take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long, value_enum, default_value_t = VariantArg::Foresee)]
    variant: VariantArg,
    /// Results, the resolved config and the seeds go here.
    #[arg(long)]
    out: PathBuf,
    /// Report SILog multiplied by 100 in the single-run report.
    #[arg(long)]
    silog_x100: bool,
}

pub fn run(args: Args) -> Result<()> {
    let config = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ToyConfig::from_toml(&text).with_context(|| format!("loading config {}", p.display()))?
        }
        None => ToyConfig::default(),
    };
    write_file(&args.out.join("config.toml"), config.to_toml())?;

    match args.experiment {
        Experiment::Sweep => {
            write_file(&args.out.join("seeds.txt"), format!("{}\n", config.seed))?;
            let rows = toytrain::run_lambda_sweep(&config.sweep.lambdas, &config)?;
            let tsv = toytrain::sweep_tsv(&rows);
            write_file(&args.out.join("sweep.tsv"), &tsv)?;
            print!("{tsv}");
        }
        Experiment::Ablation => {
            let seeds: String = config.ablation.seeds.iter().map(|s| format!("{s}\n")).collect();
            write_file(&args.out.join("seeds.txt"), seeds)?;
            let tables = toytrain::run_ablation_seeds(&config)?;
            let mut tsv = String::from(ABLATION_TSV_HEADER);
            let mut merge = String::from("seed\tmax_fg_absRel\tmask_fg_absRel\tgap\n");
            let mut text = String::new();
            for t in &tables {
                tsv.push_str(&t.tsv_rows());
                if let Some((max, mask)) = t.merge_gap_inputs() {
                    let _ = writeln!(merge, "{}\t{max}\t{mask}\t{}", t.seed, (max - mask).abs());
                }
                let _ = writeln!(text, "{}", t.to_text());
            }
            write_file(&args.out.join("ablation.tsv"), tsv)?;
            write_file(&args.out.join("merge_gap.tsv"), merge)?;
            write_file(&args.out.join("ablation.txt"), &text)?;
            print!("{text}");
        }
        Experiment::Single => {
            write_file(&args.out.join("seeds.txt"), format!("{}\n", config.seed))?;
            let variant = Variant::from(args.variant);
            let spec = config.bin_spec()?;
            let (train, eval) = toytrain::datasets(&config)?;
            let (model, log) = toytrain::train_model(&config, variant.objective(&config.loss), &train)?;
            let report = toytrain::evaluate_model(&model, &eval, &spec, variant.merge())?;
            let mut losses = String::from(match model.num_heads() {
                1 => "step\tloss\n",
                _ => "step\tfg_branch\tbg_branch\n",
            });
            for (step, values) in log.losses.iter().enumerate() {
                let cols: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(losses, "{step}\t{}", cols.join("\t"));
            }
            write_file(&args.out.join("losses.tsv"), losses)?;
            write_file(&args.out.join("metrics.txt"), report.to_key_value(args.silog_x100))?;
            print!("{}\n{}", variant.name(), report.to_text(args.silog_x100));
        }
    }
    Ok(())
}
