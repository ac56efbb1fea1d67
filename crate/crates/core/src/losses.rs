//! Region-weighted softmax cross-entropy objectives and their gradients.
//!
//! Every objective here is a convex combination of two region means,
//! `w_fg * E_fg + w_bg * E_bg`, where `E_r` is the mean per-pixel
//! cross-entropy over valid pixels of region `r`. The three variants differ
//! only in how the region weights are chosen (see [`Branch`]).

use log::warn;

use crate::depth::{BinSpec, DepthMap, ForegroundMask, LogitVolume, Region};
use crate::error::{Error, Result};

/// Default foreground-branch and background-branch bias weight.
pub const DEFAULT_BRANCH_WEIGHT: f64 = 0.2;

/// Region balancing weights, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    /// Foreground weight of the single-decoder separated objective.
    pub lambda: f64,
    /// Foreground weight of the foreground branch.
    pub lambda_f: f64,
    /// Background weight of the background branch.
    pub lambda_b: f64,
}

impl LossWeights {
    pub fn new(lambda: f64, lambda_f: f64, lambda_b: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("lambda_f", lambda_f), ("lambda_b", lambda_b)] {
            check_weight(name, v)?;
        }
        Ok(LossWeights {
            lambda,
            lambda_f,
            lambda_b,
        })
    }

    /// `(foreground weight, background weight)` used by `branch`.
    pub fn region_weights(&self, branch: Branch) -> (f64, f64) {
        match branch {
            Branch::Single => (self.lambda, 1.0 - self.lambda),
            Branch::Foreground => (self.lambda_f, 1.0 - self.lambda_f),
            Branch::Background => (1.0 - self.lambda_b, self.lambda_b),
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: 0.5,
            lambda_f: DEFAULT_BRANCH_WEIGHT,
            lambda_b: DEFAULT_BRANCH_WEIGHT,
        }
    }
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name}={v} must lie in [0, 1]")));
    }
    Ok(())
}

/// Which objective a volume is trained with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Single decoder, `lambda * E_fg + (1 - lambda) * E_bg`.
    Single,
    /// Foreground branch, `lambda_f * E_fg + (1 - lambda_f) * E_bg`.
    Foreground,
    /// Background branch, `lambda_b * E_bg + (1 - lambda_b) * E_fg`.
    Background,
}

/// Per-pixel bin targets with validity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<usize>,
    valid: Vec<bool>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<usize>, valid: Vec<bool>) -> Result<Self> {
        let n = height * width;
        if labels.len() != n || valid.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "label map {height}x{width} needs {n} entries, got {} labels and {} flags",
                labels.len(),
                valid.len()
            )));
        }
        Ok(LabelMap {
            height,
            width,
            labels,
            valid,
        })
    }

    /// Quantizes every valid depth of `depth` with `spec`.
    pub fn from_depth(depth: &DepthMap, spec: &BinSpec) -> Result<Self> {
        let labels = depth
            .values()
            .iter()
            .zip(depth.validity())
            .map(|(&d, &ok)| if ok { spec.label(d) } else { Ok(0) })
            .collect::<Result<Vec<_>>>()?;
        Self::new(depth.height(), depth.width(), labels, depth.validity().to_vec())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    /// Row-wise concatenation of label maps of equal width.
    pub fn vstack(maps: &[LabelMap]) -> Result<LabelMap> {
        let width = maps.first().map_or(0, |m| m.width);
        let mut out = LabelMap {
            height: 0,
            width,
            labels: Vec::new(),
            valid: Vec::new(),
        };
        for m in maps {
            if m.width != width {
                return Err(Error::ShapeMismatch(format!(
                    "cannot stack label map of width {} onto width {width}",
                    m.width
                )));
            }
            out.height += m.height;
            out.labels.extend_from_slice(&m.labels);
            out.valid.extend_from_slice(&m.valid);
        }
        Ok(out)
    }
}

/// `-ln softmax(scores)[label]`.
pub fn pixel_ce_error(scores: &[f64], label: usize) -> Result<f64> {
    if label >= scores.len() {
        return Err(Error::LabelOutOfRange {
            label,
            num_bins: scores.len(),
        });
    }
    Ok((log_sum_exp(scores) - scores[label]).max(0.0))
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

fn check_inputs(volume: &LogitVolume, targets: &LabelMap, fg: &ForegroundMask) -> Result<()> {
    if volume.height() != targets.height || volume.width() != targets.width {
        return Err(Error::ShapeMismatch(format!(
            "volume is {}x{}, labels are {}x{}",
            volume.height(),
            volume.width(),
            targets.height,
            targets.width
        )));
    }
    fg.check_dims(volume.height(), volume.width())
}

/// Sum of per-pixel errors and valid-pixel count for both regions.
#[derive(Clone, Copy, Debug, Default)]
struct RegionSums {
    fg_sum: f64,
    fg_count: usize,
    bg_sum: f64,
    bg_count: usize,
}

impl RegionSums {
    fn mean(&self, region: Region) -> Option<f64> {
        let (sum, count) = match region {
            Region::Foreground => (self.fg_sum, self.fg_count),
            Region::Background => (self.bg_sum, self.bg_count),
        };
        (count > 0).then(|| sum / count as f64)
    }

    fn count(&self, region: Region) -> usize {
        match region {
            Region::Foreground => self.fg_count,
            Region::Background => self.bg_count,
        }
    }
}

fn region_sums(volume: &LogitVolume, targets: &LabelMap, fg: &ForegroundMask) -> Result<RegionSums> {
    check_inputs(volume, targets, fg)?;
    let mut sums = RegionSums::default();
    for i in 0..volume.num_pixels() {
        if !targets.valid[i] {
            continue;
        }
        let e = pixel_ce_error(volume.pixel(i), targets.labels[i])?;
        if fg.is_foreground(i) {
            sums.fg_sum += e;
            sums.fg_count += 1;
        } else {
            sums.bg_sum += e;
            sums.bg_count += 1;
        }
    }
    Ok(sums)
}

/// Mean cross-entropy over the valid pixels of `region`.
pub fn region_mean_error(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    region: Region,
) -> Result<f64> {
    region_sums(volume, targets, fg)?
        .mean(region)
        .ok_or(Error::EmptyRegion(region))
}

/// Mean cross-entropy over all valid pixels.
pub fn global_mean_error(volume: &LogitVolume, targets: &LabelMap) -> Result<f64> {
    let fg = ForegroundMask::all(volume.height(), volume.width(), false);
    region_mean_error(volume, targets, &fg, Region::Background)
}

/// Foreground share `N_f / (N_f + N_b)` of the valid pixels. With this
/// weight the separated objective equals the global mean.
pub fn foreground_share(targets: &LabelMap, fg: &ForegroundMask) -> Result<f64> {
    fg.check_dims(targets.height, targets.width)?;
    let (mut nf, mut n) = (0usize, 0usize);
    for (i, &ok) in targets.valid.iter().enumerate() {
        if ok {
            n += 1;
            nf += usize::from(fg.is_foreground(i));
        }
    }
    if n == 0 {
        return Err(Error::EmptyRegion(Region::Background));
    }
    Ok(nf as f64 / n as f64)
}

/// Region weights after the empty-region fallback: an empty region hands its
/// whole weight to the other one.
fn effective_weights(sums: &RegionSums, w_fg: f64, w_bg: f64) -> Result<(f64, f64)> {
    match (sums.fg_count, sums.bg_count) {
        (0, 0) => Err(Error::EmptyRegion(Region::Foreground)),
        (0, _) => {
            warn!("no valid foreground pixels; using the background term alone");
            Ok((0.0, 1.0))
        }
        (_, 0) => {
            warn!("no valid background pixels; using the foreground term alone");
            Ok((1.0, 0.0))
        }
        _ => Ok((w_fg, w_bg)),
    }
}

fn weighted_objective(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    w_fg: f64,
    w_bg: f64,
) -> Result<f64> {
    let sums = region_sums(volume, targets, fg)?;
    let (w_fg, w_bg) = effective_weights(&sums, w_fg, w_bg)?;
    let term = |w: f64, r: Region| if w == 0.0 { 0.0 } else { w * sums.mean(r).unwrap_or(0.0) };
    Ok(term(w_fg, Region::Foreground) + term(w_bg, Region::Background))
}

/// `lambda * E_fg + (1 - lambda) * E_bg`.
pub fn separated_objective(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    lambda: f64,
) -> Result<f64> {
    check_weight("lambda", lambda)?;
    weighted_objective(volume, targets, fg, lambda, 1.0 - lambda)
}

/// Foreground-branch loss `lambda_f * E_fg + (1 - lambda_f) * E_bg`.
pub fn loss_fg(
    volume_f: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    lambda_f: f64,
) -> Result<f64> {
    check_weight("lambda_f", lambda_f)?;
    weighted_objective(volume_f, targets, fg, lambda_f, 1.0 - lambda_f)
}

/// Background-branch loss `lambda_b * E'_bg + (1 - lambda_b) * E'_fg`.
pub fn loss_bg(
    volume_b: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    lambda_b: f64,
) -> Result<f64> {
    check_weight("lambda_b", lambda_b)?;
    weighted_objective(volume_b, targets, fg, 1.0 - lambda_b, lambda_b)
}

/// Objective value for `which`, dispatching to the matching loss.
pub fn branch_loss(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    weights: &LossWeights,
    which: Branch,
) -> Result<f64> {
    let (w_fg, w_bg) = weights.region_weights(which);
    weighted_objective(volume, targets, fg, w_fg, w_bg)
}

/// Gradient of the `which` objective with respect to the scores.
pub fn loss_gradient(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    weights: &LossWeights,
    which: Branch,
) -> Result<LogitVolume> {
    loss_and_gradient(volume, targets, fg, weights, which).map(|(_, g)| g)
}

/// Objective value and its gradient in one pass over the pixels.
///
/// Each valid pixel of region `r` contributes
/// `(w_r / N_r) * (softmax(scores) - onehot(label))`; invalid pixels get 0.
pub fn loss_and_gradient(
    volume: &LogitVolume,
    targets: &LabelMap,
    fg: &ForegroundMask,
    weights: &LossWeights,
    which: Branch,
) -> Result<(f64, LogitVolume)> {
    check_inputs(volume, targets, fg)?;
    let (w_fg, w_bg) = weights.region_weights(which);
    let mut counts = RegionSums::default();
    for i in 0..volume.num_pixels() {
        if targets.valid[i] {
            let label = targets.labels[i];
            if label >= volume.channels() {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_bins: volume.channels(),
                });
            }
            if fg.is_foreground(i) {
                counts.fg_count += 1;
            } else {
                counts.bg_count += 1;
            }
        }
    }
    let (w_fg, w_bg) = effective_weights(&counts, w_fg, w_bg)?;
    let scale = |r: Region| {
        let (w, n) = match r {
            Region::Foreground => (w_fg, counts.count(r)),
            Region::Background => (w_bg, counts.count(r)),
        };
        if n == 0 {
            0.0
        } else {
            w / n as f64
        }
    };
    let (scale_fg, scale_bg) = (scale(Region::Foreground), scale(Region::Background));

    let c = volume.channels();
    let mut grad = vec![0.0; volume.scores().len()];
    let mut value = 0.0;
    for i in 0..volume.num_pixels() {
        if !targets.valid[i] {
            continue;
        }
        let s = if fg.is_foreground(i) { scale_fg } else { scale_bg };
        if s == 0.0 {
            continue;
        }
        let scores = volume.pixel(i);
        let label = targets.labels[i];
        let lse = log_sum_exp(scores);
        value += s * (lse - scores[label]).max(0.0);
        let g = &mut grad[i * c..(i + 1) * c];
        for (gk, sk) in g.iter_mut().zip(scores) {
            *gk = s * (sk - lse).exp();
        }
        g[label] -= s;
    }
    let grad = LogitVolume::new(volume.height(), volume.width(), c, grad)?;
    Ok((value, grad))
}
