//! Deterministic desk-scale training harness.
//!
//! Synthetic scenes ([`scene`]) feed a small two-head network ([`model`])
//! trained with plain SGD through the region-weighted objectives of
//! [`crate::losses`]. [`run_lambda_sweep`] trains single-head models over
//! a range of foreground weights; [`run_ablation`] compares the baseline,
//! a separated objective, separate decoders, and separate decoders with the
//! sensitive loss and max merging.

pub mod model;
pub mod scene;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{decode_depthmap, BinSpec, ForegroundMask, LogitVolume};
use crate::error::{Error, Result};
use crate::fusion::{mask_merge, max_merge, MergeMode};
use crate::losses::{foreground_share, loss_and_gradient, Branch, LabelMap, LossWeights};
use crate::metrics::{aggregate, evaluate, Level, LevelMetrics, MetricsReport};

pub use model::{ModelConfig, ToyModel};
pub use scene::{generate_scene, Scene, SceneParams};

/// Offset added to scene indices of the held-out set.
pub const EVAL_INDEX_OFFSET: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinsConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub num_bins: usize,
}

impl Default for BinsConfig {
    fn default() -> Self {
        BinsConfig {
            d_min: 1.0,
            d_max: 80.0,
            num_bins: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Fraction of `steps` after which the learning rate is multiplied by
    /// `decay_factor` (once).
    pub decay_at: f64,
    pub decay_factor: f64,
    /// Distinct training scenes, cycled through in order.
    pub train_scenes: usize,
    pub eval_scenes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 600,
            batch_size: 4,
            lr: 0.5,
            decay_at: 0.75,
            decay_factor: 0.1,
            train_scenes: 256,
            eval_scenes: 48,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, step: usize) -> f64 {
        if (step as f64) >= self.decay_at * self.steps as f64 {
            self.lr * self.decay_factor
        } else {
            self.lr
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Foreground-branch weight of the sensitive loss.
    pub lambda_f: f64,
    /// Background-branch weight of the sensitive loss.
    pub lambda_b: f64,
    /// Foreground weight of the single-decoder separated objective row.
    pub lambda_so: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_f: crate::losses::DEFAULT_BRANCH_WEIGHT,
            lambda_b: crate::losses::DEFAULT_BRANCH_WEIGHT,
            lambda_so: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambdas: (0..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub seeds: Vec<u64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { seeds: vec![1, 2, 3] }
    }
}

/// Everything an experiment depends on. Serialized as TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    /// Master seed: scene family and model initialization derive from it.
    pub seed: u64,
    pub bins: BinsConfig,
    pub scene: SceneParams,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub sweep: SweepConfig,
    pub ablation: AblationConfig,
}

impl ToyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ToyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.bin_spec()?;
        self.scene.validate()?;
        self.model.validate()?;
        if self.model.num_bins != self.bins.num_bins {
            return Err(Error::Config(format!(
                "model.num_bins ({}) must equal bins.num_bins ({})",
                self.model.num_bins, self.bins.num_bins
            )));
        }
        if self.model.input_channels != 1 {
            return Err(Error::Config("scenes render a single input channel".into()));
        }
        let t = &self.train;
        if t.batch_size == 0 || t.train_scenes == 0 || t.eval_scenes == 0 {
            return Err(Error::Config("batch_size, train_scenes and eval_scenes must be > 0".into()));
        }
        if !(t.lr >= 0.0 && t.lr.is_finite() && t.decay_factor >= 0.0) {
            return Err(Error::Config("lr and decay_factor must be finite and >= 0".into()));
        }
        LossWeights::new(self.loss.lambda_so, self.loss.lambda_f, self.loss.lambda_b)?;
        for &l in &self.sweep.lambdas {
            LossWeights::new(l, 0.0, 0.0)?;
        }
        Ok(())
    }

    pub fn bin_spec(&self) -> Result<BinSpec> {
        BinSpec::new(self.bins.d_min, self.bins.d_max, self.bins.num_bins)
    }

    /// Copy with scenes and initialization re-seeded from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.seed = seed;
        cfg
    }

    fn scene_params(&self) -> SceneParams {
        SceneParams {
            seed: self.seed,
            ..self.scene.clone()
        }
    }

    fn model_config(&self) -> ModelConfig {
        ModelConfig {
            init_seed: self.seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ self.model.init_seed,
            ..self.model.clone()
        }
    }
}

/// Training objective and the number of heads it drives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// One head, plain mean over all valid pixels.
    Global,
    /// One head, `lambda * E_fg + (1 - lambda) * E_bg`.
    Separated(f64),
    /// Two heads: foreground branch and background branch losses.
    Branches { lambda_f: f64, lambda_b: f64 },
}

impl Objective {
    pub fn num_heads(&self) -> usize {
        match self {
            Objective::Global | Objective::Separated(_) => 1,
            Objective::Branches { .. } => 2,
        }
    }

    /// `(weights, branch)` per head for a batch with foreground share
    /// `share`.
    fn head_losses(&self, share: f64) -> Vec<(LossWeights, Branch)> {
        let single = |lambda| {
            vec![(
                LossWeights {
                    lambda,
                    ..LossWeights::default()
                },
                Branch::Single,
            )]
        };
        match *self {
            Objective::Global => single(share),
            Objective::Separated(l) => single(l),
            Objective::Branches { lambda_f, lambda_b } => {
                let w = LossWeights {
                    lambda: 0.5,
                    lambda_f,
                    lambda_b,
                };
                vec![(w, Branch::Foreground), (w, Branch::Background)]
            }
        }
    }
}

/// A scene with its quantized targets.
#[derive(Clone, Debug)]
pub struct Sample {
    pub scene: Scene,
    pub labels: LabelMap,
}

impl Sample {
    pub fn new(scene: Scene, spec: &BinSpec) -> Result<Self> {
        let labels = LabelMap::from_depth(&scene.depth, spec)?;
        Ok(Sample { scene, labels })
    }
}

pub fn make_samples(params: &SceneParams, spec: &BinSpec, indices: impl IntoIterator<Item = u64>) -> Result<Vec<Sample>> {
    let indices: Vec<u64> = indices.into_iter().collect();
    indices
        .par_iter()
        .map(|&i| Sample::new(generate_scene(params, i)?, spec))
        .collect()
}

/// Objective value per head and its gradient over the whole model, pooled
/// over `batch` (region means are taken over all pixels of the batch).
pub fn batch_loss_and_gradient(
    model: &ToyModel,
    batch: &[&Sample],
    objective: Objective,
) -> Result<(Vec<f64>, ToyModel)> {
    if model.num_heads() != objective.num_heads() {
        return Err(Error::ShapeMismatch(format!(
            "objective needs {} heads, model has {}",
            objective.num_heads(),
            model.num_heads()
        )));
    }
    let acts = batch
        .par_iter()
        .map(|s| model.forward(&s.scene.image, s.scene.height(), s.scene.width()))
        .collect::<Result<Vec<_>>>()?;
    let labels = LabelMap::vstack(&batch.iter().map(|s| s.labels.clone()).collect::<Vec<_>>())?;
    let flags: Vec<bool> = batch.iter().flat_map(|s| s.scene.mask.flags().iter().copied()).collect();
    let mask = ForegroundMask::new(labels.height(), labels.width(), flags)?;
    let share = foreground_share(&labels, &mask)?;

    let mut values = Vec::with_capacity(model.num_heads());
    // per head, per sample score gradients
    let mut split: Vec<Vec<LogitVolume>> = vec![Vec::with_capacity(model.num_heads()); batch.len()];
    for (head, (weights, branch)) in objective.head_losses(share).into_iter().enumerate() {
        let stacked = LogitVolume::vstack(&acts.iter().map(|a| a.logits[head].clone()).collect::<Vec<_>>())?;
        let (value, grad) = loss_and_gradient(&stacked, &labels, &mask, &weights, branch)?;
        values.push(value);
        let per = grad.scores().len() / batch.len().max(1);
        for (k, chunk) in grad.scores().chunks(per).enumerate() {
            let a = &acts[k].logits[head];
            split[k].push(LogitVolume::new(a.height(), a.width(), a.channels(), chunk.to_vec())?);
        }
    }
    let grads = acts
        .par_iter()
        .zip(&split)
        .map(|(a, g)| {
            let mut grad = model.zeros_like();
            model.backward(a, g, &mut grad)?;
            Ok(grad)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = model.zeros_like();
    for g in &grads {
        total.add_scaled(g, 1.0);
    }
    Ok((values, total))
}

/// One plain SGD step. Returns the per-head objective values before the
/// update.
pub fn train_step(model: &mut ToyModel, batch: &[&Sample], objective: Objective, lr: f64) -> Result<Vec<f64>> {
    if !(lr >= 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate {lr} must be >= 0")));
    }
    // non-finite scores mean the parameters already blew up
    let (values, grad) = batch_loss_and_gradient(model, batch, objective).map_err(|e| match e {
        Error::NonFinite { .. } => Error::Divergence { step: 0, loss: f64::NAN },
        other => other,
    })?;
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0, loss: bad });
    }
    if lr > 0.0 {
        model.add_scaled(&grad, -lr);
    }
    if !model.all_finite() {
        return Err(Error::Divergence { step: 0, loss: f64::NAN });
    }
    Ok(values)
}

/// Loss values recorded during training.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Per step, per head objective values.
    pub losses: Vec<Vec<f64>>,
}

/// Trains a fresh model for `objective` under `config`.
pub fn train_model(config: &ToyConfig, objective: Objective, train: &[Sample]) -> Result<(ToyModel, TrainLog)> {
    let mut model = ToyModel::new(&config.model_config(), objective.num_heads())?;
    let t = &config.train;
    let mut log = TrainLog::default();
    for step in 0..t.steps {
        let batch: Vec<&Sample> = (0..t.batch_size)
            .map(|j| &train[(step * t.batch_size + j) % train.len()])
            .collect();
        let values = train_step(&mut model, &batch, objective, t.lr_at(step)).map_err(|e| match e {
            Error::Divergence { loss, .. } => Error::Divergence { step, loss },
            other => other,
        })?;
        log.losses.push(values);
    }
    Ok((model, log))
}

/// Scores used for evaluation: the only head, or the merged pair.
pub fn predict(model: &ToyModel, scene: &Scene, merge: MergeMode) -> Result<LogitVolume> {
    let acts = model.forward(&scene.image, scene.height(), scene.width())?;
    let mut logits = acts.logits;
    match logits.len() {
        1 => Ok(logits.pop().unwrap()),
        2 => match merge {
            MergeMode::Max => max_merge(&logits[0], &logits[1]),
            MergeMode::Mask => mask_merge(&logits[0], &logits[1], &scene.mask),
        },
        n => Err(Error::ShapeMismatch(format!("cannot merge {n} heads"))),
    }
}

/// Pooled metrics over `samples`.
pub fn evaluate_model(model: &ToyModel, samples: &[Sample], spec: &BinSpec, merge: MergeMode) -> Result<MetricsReport> {
    let reports = samples
        .par_iter()
        .map(|s| {
            let pred = decode_depthmap(&predict(model, &s.scene, merge)?, spec)?;
            evaluate(&pred, &s.scene.depth, &s.scene.mask)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&reports)
}

/// Training and held-out sample sets for `config`.
pub fn datasets(config: &ToyConfig) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let spec = config.bin_spec()?;
    let params = config.scene_params();
    let train = make_samples(&params, &spec, 0..config.train.train_scenes as u64)?;
    let eval = make_samples(
        &params,
        &spec,
        (0..config.train.eval_scenes as u64).map(|i| EVAL_INDEX_OFFSET + i),
    )?;
    Ok((train, eval))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub report: MetricsReport,
}

impl SweepRow {
    pub fn silog(&self, level: Level) -> f64 {
        self.report.level(level).map_or(f64::NAN, |m| m.silog)
    }
}

/// Trains one single-head model per foreground weight with identical data,
/// initialization and schedule; reports held-out metrics.
pub fn run_lambda_sweep(lambdas: &[f64], config: &ToyConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let spec = config.bin_spec()?;
    let (train, eval) = datasets(config)?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            LossWeights::new(lambda, 0.0, 0.0)?;
            let (model, _) = train_model(config, Objective::Separated(lambda), &train)?;
            let report = evaluate_model(&model, &eval, &spec, MergeMode::Max)?;
            Ok(SweepRow { lambda, report })
        })
        .collect()
}

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda\tfg_silog\tbg_silog\tglobal_silog\tfg_absrel\tbg_absrel\tglobal_absrel\n");
    for r in rows {
        let abs = |l| r.report.level(l).map_or(f64::NAN, |m: LevelMetrics| m.abs_rel);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.lambda,
            r.silog(Level::Foreground),
            r.silog(Level::Background),
            r.silog(Level::Global),
            abs(Level::Foreground),
            abs(Level::Background),
            abs(Level::Global)
        );
    }
    out
}

/// The four compared configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Single decoder, global mean objective.
    Baseline,
    /// Single decoder, separated objective.
    SeparateObjective,
    /// Two decoders each trained on its own region only, mask merge.
    SeparateDecoders,
    /// Two decoders, sensitive loss, max merge.
    ForeSeE,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ForeSeE,
        Variant::SeparateDecoders,
        Variant::SeparateObjective,
        Variant::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::SeparateObjective => "SO",
            Variant::SeparateDecoders => "SD+SO",
            Variant::ForeSeE => "ForeSeE",
        }
    }

    pub fn objective(self, loss: &LossConfig) -> Objective {
        match self {
            Variant::Baseline => Objective::Global,
            Variant::SeparateObjective => Objective::Separated(loss.lambda_so),
            Variant::SeparateDecoders => Objective::Branches {
                lambda_f: 1.0,
                lambda_b: 1.0,
            },
            Variant::ForeSeE => Objective::Branches {
                lambda_f: loss.lambda_f,
                lambda_b: loss.lambda_b,
            },
        }
    }

    pub fn merge(self) -> MergeMode {
        match self {
            Variant::SeparateDecoders => MergeMode::Mask,
            _ => MergeMode::Max,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub report: MetricsReport,
}

/// Results of one ablation run (one seed).
#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    pub seed: u64,
    /// Rows in [`Variant::ALL`] order.
    pub rows: Vec<AblationRow>,
    /// The ForeSeE model evaluated with mask merging instead of max merging.
    pub foresee_mask_merge: MetricsReport,
}

impl AblationTable {
    pub fn row(&self, variant: Variant) -> &AblationRow {
        self.rows.iter().find(|r| r.variant == variant).expect("all variants present")
    }

    pub fn metric(&self, variant: Variant, level: Level) -> Result<LevelMetrics> {
        self.row(variant).report.require(level)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("seed {}\n{:<10}", self.seed, "method");
        for level in Level::ALL {
            let _ = write!(out, "{:>22}", level.name());
        }
        let _ = write!(out, "\n{:<10}", "");
        for _ in Level::ALL {
            let _ = write!(out, "{:>11}{:>11}", "absRel", "SILog");
        }
        out.push('\n');
        let mut line = |name: &str, report: &MetricsReport| {
            let _ = write!(out, "{name:<10}");
            for level in Level::ALL {
                match report.level(level) {
                    Some(m) => {
                        let _ = write!(out, "{:>11.4}{:>11.4}", m.abs_rel, m.silog);
                    }
                    None => {
                        let _ = write!(out, "{:>22}", "absent");
                    }
                }
            }
            out.push('\n');
        };
        for r in &self.rows {
            line(r.variant.name(), &r.report);
        }
        if let Some((max, mask)) = self.merge_gap_inputs() {
            let _ = writeln!(
                out,
                "ForeSeE fg absRel: max merge {max:.4}, mask merge {mask:.4}, gap {:.4}",
                (max - mask).abs()
            );
        }
        out
    }

    /// ForeSeE foreground absRel under max and under mask merging.
    pub fn merge_gap_inputs(&self) -> Option<(f64, f64)> {
        let max = self.row(Variant::ForeSeE).report.level(Level::Foreground)?.abs_rel;
        let mask = self.foresee_mask_merge.level(Level::Foreground)?.abs_rel;
        Some((max, mask))
    }

    /// Rows `seed  method  level  absRel  SILog`.
    pub fn tsv_rows(&self) -> String {
        let mut out = String::new();
        let mut emit = |name: &str, report: &MetricsReport| {
            for level in Level::ALL {
                if let Some(m) = report.level(level) {
                    let _ = writeln!(out, "{}\t{name}\t{}\t{}\t{}", self.seed, level.name(), m.abs_rel, m.silog);
                }
            }
        };
        for r in &self.rows {
            emit(r.variant.name(), &r.report);
        }
        out
    }
}

pub const ABLATION_TSV_HEADER: &str = "seed\tmethod\tlevel\tabsRel\tSILog\n";

/// Trains the four variants under `config` (its master seed) and evaluates
/// them on the same held-out scenes.
pub fn run_ablation(config: &ToyConfig) -> Result<AblationTable> {
    config.validate()?;
    let spec = config.bin_spec()?;
    let (train, eval) = datasets(config)?;
    let models = Variant::ALL
        .par_iter()
        .map(|&v| train_model(config, v.objective(&config.loss), &train).map(|(m, _)| (v, m)))
        .collect::<Result<Vec<_>>>()?;
    let rows = models
        .iter()
        .map(|(v, m)| {
            Ok(AblationRow {
                variant: *v,
                report: evaluate_model(m, &eval, &spec, v.merge())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let foresee = &models.iter().find(|(v, _)| *v == Variant::ForeSeE).unwrap().1;
    let foresee_mask_merge = evaluate_model(foresee, &eval, &spec, MergeMode::Mask)?;
    Ok(AblationTable {
        seed: config.seed,
        rows,
        foresee_mask_merge,
    })
}

/// [`run_ablation`] once per seed of `config.ablation.seeds`.
pub fn run_ablation_seeds(config: &ToyConfig) -> Result<Vec<AblationTable>> {
    config
        .ablation
        .seeds
        .par_iter()
        .map(|&s| run_ablation(&config.with_seed(s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ToyConfig {
        let mut cfg = ToyConfig::default();
        cfg.scene.height = 12;
        cfg.scene.width = 16;
        cfg.scene.object_size = (3, 6);
        cfg.scene.building_width = (3, 6);
        cfg.model.features = 4;
        cfg.model.head_hidden = 4;
        cfg.train.steps = 5;
        cfg.train.train_scenes = 4;
        cfg.train.eval_scenes = 2;
        cfg
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = tiny();
        let text = cfg.to_toml();
        assert_eq!(ToyConfig::from_toml(&text).unwrap(), cfg);
        assert!(ToyConfig::from_toml("[train]\nsteps = \"many\"").is_err());
        assert!(ToyConfig::from_toml("unknown_key = 1").is_err());
        assert!(ToyConfig::from_toml("[bins]\nnum_bins = 8").is_err());
        // partial files fill in defaults
        assert_eq!(ToyConfig::from_toml("seed = 4").unwrap().train, TrainConfig::default());
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let cfg = tiny();
        let (train, _) = datasets(&cfg).unwrap();
        let mut m = ToyModel::new(&cfg.model_config(), 2).unwrap();
        let before = m.clone();
        let batch: Vec<&Sample> = train.iter().collect();
        let obj = Objective::Branches { lambda_f: 0.2, lambda_b: 0.2 };
        train_step(&mut m, &batch, obj, 0.0).unwrap();
        assert_eq!(m, before);
        train_step(&mut m, &batch, obj, 0.1).unwrap();
        assert_ne!(m, before);
        assert!(train_step(&mut m, &batch, Objective::Global, 0.1).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny();
        let (train, _) = datasets(&cfg).unwrap();
        let (a, la) = train_model(&cfg, Objective::Global, &train).unwrap();
        let (b, lb) = train_model(&cfg, Objective::Global, &train).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn non_finite_parameters_report_divergence() {
        let cfg = tiny();
        let (train, _) = datasets(&cfg).unwrap();
        let mut m = ToyModel::new(&cfg.model_config(), 1).unwrap();
        m.params_mut()[0][0] = f64::NAN;
        let batch: Vec<&Sample> = train.iter().collect();
        let r = train_step(&mut m, &batch, Objective::Global, 0.1);
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn lr_schedule_decays_once() {
        let t = TrainConfig { steps: 100, lr: 1.0, decay_at: 0.5, decay_factor: 0.1, ..Default::default() };
        assert_eq!(t.lr_at(49), 1.0);
        assert_eq!(t.lr_at(50), 0.1);
        assert_eq!(t.lr_at(99), 0.1);
    }
}
