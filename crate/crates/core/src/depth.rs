//! Log-space depth quantization and soft-weighted-sum decoding.
//!
//! Depth estimation is treated as per-pixel classification over `C`
//! log-uniform bins. A [`BinSpec`] holds the bin edges and geometric-mean
//! centers; [`BinSpec::label`] maps metric depth to a class and
//! [`BinSpec::decode`] maps a score vector back to metric depth.

use std::fmt;

use crate::error::{Error, Result};

/// Default number of bins.
pub const DEFAULT_NUM_BINS: usize = 100;
/// Default lower depth bound in meters.
pub const DEFAULT_D_MIN: f64 = 1.0;
/// Default upper depth bound in meters.
pub const DEFAULT_D_MAX: f64 = 80.0;

/// Pixel population a loss term or metric is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Foreground,
    Background,
}

impl Region {
    pub fn other(self) -> Region {
        match self {
            Region::Foreground => Region::Background,
            Region::Background => Region::Foreground,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Foreground => "foreground",
            Region::Background => "background",
        })
    }
}

/// Log-uniform quantization of `[d_min, d_max]` into `C` bins.
#[derive(Clone, Debug, PartialEq)]
pub struct BinSpec {
    d_min: f64,
    d_max: f64,
    edges: Vec<f64>,
    centers: Vec<f64>,
    log_centers: Vec<f64>,
}

impl BinSpec {
    pub fn new(d_min: f64, d_max: f64, num_bins: usize) -> Result<Self> {
        let ok = d_min.is_finite() && d_max.is_finite() && d_min > 0.0 && d_min < d_max;
        if !ok || num_bins < 2 {
            return Err(Error::InvalidRange {
                d_min,
                d_max,
                num_bins,
            });
        }
        let (lo, hi) = (d_min.ln(), d_max.ln());
        let step = (hi - lo) / num_bins as f64;
        let mut edges: Vec<f64> = (0..=num_bins)
            .map(|k| (lo + step * k as f64).exp())
            .collect();
        edges[0] = d_min;
        edges[num_bins] = d_max;
        let centers: Vec<f64> = edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect();
        let log_centers = centers.iter().map(|c| c.ln()).collect();
        Ok(BinSpec {
            d_min,
            d_max,
            edges,
            centers,
            log_centers,
        })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn num_bins(&self) -> usize {
        self.centers.len()
    }

    /// `C + 1` increasing bin edges, `edges[0] = d_min`, `edges[C] = d_max`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Geometric midpoints of each bin.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Ratio between consecutive edges (constant for log-uniform bins).
    pub fn bin_ratio(&self) -> f64 {
        (self.d_max / self.d_min).powf(1.0 / self.num_bins() as f64)
    }

    /// Class index `k` with `edges[k] <= depth < edges[k+1]`. Depths outside
    /// the range clamp to the first or last bin.
    pub fn label(&self, depth: f64) -> Result<usize> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidDepth(depth));
        }
        let c = self.num_bins();
        if depth < self.edges[1] {
            return Ok(0);
        }
        if depth >= self.edges[c - 1] {
            return Ok(c - 1);
        }
        let lo = self.d_min.ln();
        let step = (self.d_max.ln() - lo) / c as f64;
        let mut k = (((depth.ln() - lo) / step).floor().max(0.0) as usize).min(c - 1);
        // the log estimate can land one bin off at an edge
        while k > 0 && depth < self.edges[k] {
            k -= 1;
        }
        while k + 1 < c && depth >= self.edges[k + 1] {
            k += 1;
        }
        Ok(k)
    }

    /// Softmax-weighted geometric mean of the bin centers.
    ///
    /// Panics if `scores.len() != num_bins()`.
    pub fn decode(&self, scores: &[f64]) -> f64 {
        assert_eq!(scores.len(), self.num_bins(), "score length != bin count");
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut acc = 0.0;
        for (s, lc) in scores.iter().zip(&self.log_centers) {
            let w = (s - max).exp();
            total += w;
            acc += w * lc;
        }
        let first = self.centers[0];
        let last = self.centers[self.num_bins() - 1];
        (acc / total).exp().clamp(first, last)
    }
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::new(DEFAULT_D_MIN, DEFAULT_D_MAX, DEFAULT_NUM_BINS).expect("default range is valid")
    }
}

/// Per-pixel depth in meters with a validity flag. Row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    /// Builds a map from values and validity flags. Valid pixels must hold a
    /// finite positive depth; invalid pixels are stored as 0.
    pub fn new(height: usize, width: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = height * width;
        if values.len() != n || valid.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "depth map {height}x{width} needs {n} values, got {} values and {} flags",
                values.len(),
                valid.len()
            )));
        }
        let mut values = values;
        for (v, &ok) in values.iter_mut().zip(&valid) {
            if ok {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(Error::InvalidDepth(*v));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(DepthMap {
            height,
            width,
            values,
            valid,
        })
    }

    /// Fully valid map.
    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::new(height, width, values, valid)
    }

    pub fn filled(height: usize, width: usize, depth: f64) -> Result<Self> {
        Self::from_values(height, width, vec![depth; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.valid[i].then(|| self.values[i])
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Multiplies every valid depth by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::new(self.height, self.width, values, self.valid.clone())
    }
}

/// Per-pixel foreground flag (`true` = foreground). Row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForegroundMask {
    height: usize,
    width: usize,
    flags: Vec<bool>,
}

impl ForegroundMask {
    pub fn new(height: usize, width: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "mask {height}x{width} needs {} flags, got {}",
                height * width,
                flags.len()
            )));
        }
        Ok(ForegroundMask {
            height,
            width,
            flags,
        })
    }

    pub fn all(height: usize, width: usize, foreground: bool) -> Self {
        ForegroundMask {
            height,
            width,
            flags: vec![foreground; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_foreground(&self, index: usize) -> bool {
        self.flags[index]
    }

    pub fn region(&self, index: usize) -> Region {
        if self.flags[index] {
            Region::Foreground
        } else {
            Region::Background
        }
    }

    /// Swaps foreground and background.
    pub fn inverted(&self) -> Self {
        ForegroundMask {
            height: self.height,
            width: self.width,
            flags: self.flags.iter().map(|f| !f).collect(),
        }
    }

    pub fn foreground_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn check_dims(&self, height: usize, width: usize) -> Result<()> {
        if self.height != height || self.width != width {
            return Err(Error::ShapeMismatch(format!(
                "mask is {}x{}, expected {height}x{width}",
                self.height, self.width
            )));
        }
        Ok(())
    }
}

/// `H x W x C` pre-softmax depth-bin scores, channel-last row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitVolume {
    height: usize,
    width: usize,
    channels: usize,
    scores: Vec<f64>,
}

impl LogitVolume {
    pub fn new(height: usize, width: usize, channels: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "volume {height}x{width}x{channels} needs {} scores, got {}",
                height * width * channels,
                scores.len()
            )));
        }
        if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(LogitVolume {
            height,
            width,
            channels,
            scores,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        LogitVolume {
            height,
            width,
            channels,
            scores: vec![0.0; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [f64] {
        &mut self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    /// Score vector of pixel `index` (row-major pixel order).
    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.scores[index * self.channels..(index + 1) * self.channels]
    }

    pub fn pixel_mut(&mut self, index: usize) -> &mut [f64] {
        let c = self.channels;
        &mut self.scores[index * c..(index + 1) * c]
    }

    pub fn same_shape(&self, other: &LogitVolume) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &LogitVolume) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "volumes {}x{}x{} and {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )));
        }
        Ok(())
    }

    /// Stacks volumes of equal width and channel count along the row axis.
    pub fn vstack(volumes: &[LogitVolume]) -> Result<LogitVolume> {
        let Some(first) = volumes.first() else {
            return Err(Error::ShapeMismatch("cannot stack zero volumes".into()));
        };
        let mut scores = Vec::with_capacity(volumes.iter().map(|v| v.scores.len()).sum());
        let mut height = 0;
        for v in volumes {
            if v.width != first.width || v.channels != first.channels {
                return Err(Error::ShapeMismatch(format!(
                    "cannot stack width {} x {} channels onto width {} x {} channels",
                    v.width, v.channels, first.width, first.channels
                )));
            }
            height += v.height;
            scores.extend_from_slice(&v.scores);
        }
        Ok(LogitVolume {
            height,
            width: first.width,
            channels: first.channels,
            scores,
        })
    }
}

/// Decodes every pixel of `volume`; the result is fully valid.
pub fn decode_depthmap(volume: &LogitVolume, spec: &BinSpec) -> Result<DepthMap> {
    if volume.channels() != spec.num_bins() {
        return Err(Error::ShapeMismatch(format!(
            "volume has {} channels, bin spec has {} bins",
            volume.channels(),
            spec.num_bins()
        )));
    }
    let values = volume
        .scores()
        .chunks_exact(volume.channels())
        .map(|s| spec.decode(s))
        .collect();
    DepthMap::from_values(volume.height(), volume.width(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn powers_of_two() {
        let spec = BinSpec::new(1.0, 16.0, 4).unwrap();
        for (e, want) in spec.edges().iter().zip([1.0, 2.0, 4.0, 8.0, 16.0]) {
            assert!(rel(*e, want) < 1e-12, "{e} vs {want}");
        }
        let s2 = 2f64.sqrt();
        for (c, want) in spec.centers().iter().zip([s2, 2.0 * s2, 4.0 * s2, 8.0 * s2]) {
            assert!(rel(*c, want) < 1e-12);
        }
    }

    #[test]
    fn factor_e_spacing() {
        let d = 0.7;
        let spec = BinSpec::new(d, d * 5f64.exp(), 5).unwrap();
        for w in spec.edges().windows(2) {
            assert!(rel(w[1] / w[0], std::f64::consts::E) < 1e-12);
        }
    }

    #[test]
    fn default_edges_match_loop_oracle() {
        let spec = BinSpec::default();
        assert_eq!(spec.num_bins(), 100);
        // repeated multiplication by the bin ratio, independent of the closed form
        let ratio = 80f64.powf(0.01);
        let mut edge = 1.0;
        for k in 0..=100 {
            assert!(rel(spec.edges()[k], edge) < 1e-12, "edge {k}");
            edge *= ratio;
        }
    }

    #[test]
    fn invalid_ranges() {
        assert!(BinSpec::new(0.0, 10.0, 4).is_err());
        assert!(BinSpec::new(5.0, 5.0, 4).is_err());
        assert!(BinSpec::new(1.0, 10.0, 1).is_err());
        assert!(BinSpec::new(f64::NAN, 10.0, 4).is_err());
    }

    #[test]
    fn labels() {
        let spec = BinSpec::new(1.0, 16.0, 4).unwrap();
        assert_eq!(spec.label(3.0).unwrap(), 1);
        assert_eq!(spec.label(0.5).unwrap(), 0);
        assert_eq!(spec.label(100.0).unwrap(), 3);
        assert_eq!(spec.label(16.0).unwrap(), 3);
        assert_eq!(spec.label(spec.edges()[2]).unwrap(), 2);
        assert!(matches!(spec.label(0.0), Err(Error::InvalidDepth(_))));
        assert!(spec.label(-1.0).is_err());
        assert!(spec.label(f64::INFINITY).is_err());
    }

    #[test]
    fn centers_round_trip() {
        for c in [2, 4, 16, 100] {
            let spec = BinSpec::new(1.0, 80.0, c).unwrap();
            for (k, &center) in spec.centers().iter().enumerate() {
                assert!(spec.edges()[k] < center && center < spec.edges()[k + 1]);
                assert_eq!(spec.label(center).unwrap(), k);
            }
        }
    }

    #[test]
    fn decode_examples() {
        let spec = BinSpec::new(1.0, 16.0, 4).unwrap();
        assert!(rel(spec.decode(&[0.7; 4]), 4.0) < 1e-12);
        let peaked = [0.0, 0.0, 30.0, 0.0];
        assert!((spec.decode(&peaked) - 4.0 * 2f64.sqrt()).abs() < 1e-3);
        let s2 = 2f64.sqrt();
        let expected =
            ((s2.ln() + 3.0 * (2.0 * s2).ln() + (4.0 * s2).ln() + (8.0 * s2).ln()) / 6.0).exp();
        assert!(rel(spec.decode(&[0.0, 3f64.ln(), 0.0, 0.0]), expected) < 1e-12);
    }

    #[test]
    fn decode_map() {
        let spec = BinSpec::new(1.0, 16.0, 4).unwrap();
        let single = LogitVolume::new(1, 1, 4, vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        let map = decode_depthmap(&single, &spec).unwrap();
        assert_eq!(map.values()[0], spec.decode(single.pixel(0)));

        let constant = LogitVolume::new(2, 3, 4, [1.0, 2.0, 0.0, -1.0].repeat(6)).unwrap();
        let map = decode_depthmap(&constant, &spec).unwrap();
        assert!(map.values().iter().all(|&d| d == map.values()[0]));
        assert_eq!(map.valid_count(), 6);

        let wrong = LogitVolume::zeros(1, 1, 5);
        assert!(matches!(decode_depthmap(&wrong, &spec), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn depth_map_rejects_bad_values() {
        assert!(DepthMap::new(1, 2, vec![1.0, -1.0], vec![true, true]).is_err());
        let ok = DepthMap::new(1, 2, vec![1.0, -1.0], vec![true, false]).unwrap();
        assert_eq!(ok.get(0, 1), None);
        assert!(DepthMap::from_values(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn volume_rejects_non_finite() {
        assert!(matches!(
            LogitVolume::new(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn label_monotone(a in 0.01f64..200.0, b in 0.01f64..200.0) {
                let spec = BinSpec::new(1.0, 80.0, 37).unwrap();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(spec.label(lo).unwrap() <= spec.label(hi).unwrap());
            }

            #[test]
            fn label_brackets_depth(d in 1.0f64..80.0) {
                let spec = BinSpec::default();
                let k = spec.label(d).unwrap();
                prop_assert!(spec.edges()[k] <= d);
                prop_assert!(k == 99 || d < spec.edges()[k + 1]);
            }

            #[test]
            fn decode_shift_invariant_and_bounded(
                scores in prop::collection::vec(-20.0f64..20.0, 8),
                shift in -50.0f64..50.0,
            ) {
                let spec = BinSpec::new(1.0, 80.0, 8).unwrap();
                let a = spec.decode(&scores);
                let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
                let b = spec.decode(&shifted);
                prop_assert!((a - b).abs() <= 1e-9 * a);
                prop_assert!(a >= spec.centers()[0] && a <= spec.centers()[7]);
            }
        }
    }
}
