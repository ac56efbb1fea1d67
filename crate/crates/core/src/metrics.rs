//! Depth error metrics at foreground, background and global level.
//!
//! Reports keep running sums (and a Welford mean/M2 pair for the log
//! residual) rather than finished means, so per-image reports pool exactly
//! into dataset-level figures with [`aggregate`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::depth::{DepthMap, ForegroundMask};
use crate::error::{Error, Result};

/// `delta_k` thresholds `1.25^k`, exact in binary.
pub const DELTA_THRESHOLDS: [f64; 3] = [1.25, 1.5625, 1.953125];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Foreground,
    Background,
    Global,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Foreground, Level::Background, Level::Global];

    pub fn name(self) -> &'static str {
        match self {
            Level::Foreground => "foreground",
            Level::Background => "background",
            Level::Global => "global",
        }
    }
}

/// Running sums for one level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelAccumulator {
    count: usize,
    sum_abs_rel: f64,
    sum_sq_rel: f64,
    sum_log10: f64,
    log_mean: f64,
    log_m2: f64,
    delta_hits: [usize; 3],
}

impl LevelAccumulator {
    pub fn push(&mut self, pred: f64, gt: f64) {
        let ratio = pred / gt;
        let diff = pred - gt;
        self.count += 1;
        self.sum_abs_rel += diff.abs() / gt;
        self.sum_sq_rel += diff * diff / gt;
        self.sum_log10 += ratio.log10().abs();
        let d = ratio.ln();
        let step = d - self.log_mean;
        self.log_mean += step / self.count as f64;
        self.log_m2 += step * (d - self.log_mean);
        let worst = ratio.max(1.0 / ratio);
        for (hits, t) in self.delta_hits.iter_mut().zip(DELTA_THRESHOLDS) {
            if worst < t {
                *hits += 1;
            }
        }
    }

    /// Pools `other` into `self` (Chan et al. pairwise update for the log
    /// residual moments).
    pub fn merge(&mut self, other: &LevelAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.log_mean - self.log_mean;
        self.log_mean += delta * nb / n;
        self.log_m2 += other.log_m2 + delta * delta * na * nb / n;
        self.count += other.count;
        self.sum_abs_rel += other.sum_abs_rel;
        self.sum_sq_rel += other.sum_sq_rel;
        self.sum_log10 += other.sum_log10;
        for (a, b) in self.delta_hits.iter_mut().zip(other.delta_hits) {
            *a += b;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Finished metrics, or `None` for a level without pixels.
    pub fn metrics(&self) -> Option<LevelMetrics> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let delta = self.delta_hits.map(|h| h as f64 / n);
        Some(LevelMetrics {
            abs_rel: self.sum_abs_rel / n,
            sq_rel: self.sum_sq_rel / n,
            silog: (self.log_m2 / n).max(0.0).sqrt(),
            log10: self.sum_log10 / n,
            delta,
            pixel_count: self.count,
        })
    }
}

/// Finished metrics of one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    /// Standard deviation of `ln pred - ln gt`, unitless (no x100).
    pub silog: f64,
    pub log10: f64,
    pub delta: [f64; 3],
    pub pixel_count: usize,
}

impl LevelMetrics {
    /// `(name, value)` pairs in report column order. `silog_scale` multiplies
    /// SILog only.
    pub fn fields(&self, silog_scale: f64) -> [(&'static str, f64); 7] {
        [
            ("absRel", self.abs_rel),
            ("sqRel", self.sq_rel),
            ("SILog", self.silog * silog_scale),
            ("log10", self.log10),
            ("delta1", self.delta[0]),
            ("delta2", self.delta[1]),
            ("delta3", self.delta[2]),
        ]
    }
}

/// Foreground / background / global metrics of one image or a pooled set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    foreground: LevelAccumulator,
    background: LevelAccumulator,
    global: LevelAccumulator,
}

impl MetricsReport {
    pub fn accumulator(&self, level: Level) -> &LevelAccumulator {
        match level {
            Level::Foreground => &self.foreground,
            Level::Background => &self.background,
            Level::Global => &self.global,
        }
    }

    pub fn level(&self, level: Level) -> Option<LevelMetrics> {
        self.accumulator(level).metrics()
    }

    /// Like [`level`](Self::level) but an absent level is an error.
    pub fn require(&self, level: Level) -> Result<LevelMetrics> {
        let region = match level {
            Level::Foreground => crate::Region::Foreground,
            _ => crate::Region::Background,
        };
        self.level(level).ok_or(Error::EmptyRegion(region))
    }

    pub fn merge(&mut self, other: &MetricsReport) {
        self.foreground.merge(&other.foreground);
        self.background.merge(&other.background);
        self.global.merge(&other.global);
    }

    /// Aligned plain-text table, one row per level.
    pub fn to_text(&self, silog_x100: bool) -> String {
        let scale = if silog_x100 { 100.0 } else { 1.0 };
        let mut out = format!("{:<12}{:>10}", "level", "pixels");
        for name in ["absRel", "sqRel", "SILog", "log10", "delta1", "delta2", "delta3"] {
            let _ = write!(out, "{name:>10}");
        }
        out.push('\n');
        for level in Level::ALL {
            let _ = write!(out, "{:<12}", level.name());
            match self.level(level) {
                Some(m) => {
                    let _ = write!(out, "{:>10}", m.pixel_count);
                    for (_, v) in m.fields(scale) {
                        let _ = write!(out, "{v:>10.4}");
                    }
                }
                None => {
                    let _ = write!(out, "{:>10}  absent", 0);
                }
            }
            out.push('\n');
        }
        out
    }

    /// `level.metric = value` lines; absent levels emit only
    /// `level.pixel_count = 0`.
    pub fn to_key_value(&self, silog_x100: bool) -> String {
        let scale = if silog_x100 { 100.0 } else { 1.0 };
        let mut out = String::new();
        for level in Level::ALL {
            let name = level.name();
            match self.level(level) {
                Some(m) => {
                    let _ = writeln!(out, "{name}.pixel_count = {}", m.pixel_count);
                    for (key, v) in m.fields(scale) {
                        let _ = writeln!(out, "{name}.{key} = {v}");
                    }
                }
                None => {
                    let _ = writeln!(out, "{name}.pixel_count = 0");
                }
            }
        }
        out
    }
}

/// Parses `key = value` lines (blank lines and `#` comments skipped).
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: &str| Error::Parse {
            context: "metrics report".into(),
            line: i + 1,
            message: message.into(),
        };
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err("expected `key = value`"))?;
        let v: f64 = v.trim().parse().map_err(|_| parse_err("value is not a number"))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Metrics of `pred` against `gt` over pixels valid in both maps.
pub fn evaluate(pred: &DepthMap, gt: &DepthMap, fg: &ForegroundMask) -> Result<MetricsReport> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::ShapeMismatch(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    fg.check_dims(gt.height(), gt.width())?;
    let mut report = MetricsReport::default();
    for i in 0..gt.len() {
        if !(gt.is_valid(i) && pred.is_valid(i)) {
            continue;
        }
        let (r, g) = (pred.values()[i], gt.values()[i]);
        if fg.is_foreground(i) {
            report.foreground.push(r, g);
        } else {
            report.background.push(r, g);
        }
        report.global.push(r, g);
    }
    Ok(report)
}

/// Pixel-weighted pooling of per-image reports.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let (first, rest) = reports
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("cannot aggregate zero reports".into()))?;
    let mut out = first.clone();
    for r in rest {
        out.merge(r);
    }
    Ok(out)
}
