//! Dataset statistics contrasting foreground and background pixels: depth
//! value windows and Laplacian depth-gradient levels.

use std::fmt::Write as _;

use crate::depth::{DepthMap, ForegroundMask, Region};
use crate::error::{Error, Result};

/// Default window width in meters.
pub const DEFAULT_WINDOW: f64 = 8.0;

/// Fraction of each region's valid pixels with depth in `(x - width, x]`,
/// one entry per anchor `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub window_width: f64,
    pub anchors: Vec<f64>,
    pub foreground: Vec<f64>,
    pub background: Vec<f64>,
    pub foreground_pixels: usize,
    pub background_pixels: usize,
}

impl DistributionReport {
    /// Tab-separated columns `anchor  foreground  background`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("anchor\tforeground\tbackground\n");
        for ((a, f), b) in self.anchors.iter().zip(&self.foreground).zip(&self.background) {
            let _ = writeln!(out, "{a}\t{f}\t{b}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<18}{:>12}{:>12}\n", "window (m)", "foreground", "background");
        for ((a, f), b) in self.anchors.iter().zip(&self.foreground).zip(&self.background) {
            let window = format!("({}, {}]", a - self.window_width, a);
            let _ = writeln!(out, "{window:<18}{:>11.2}%{:>11.2}%", f * 100.0, b * 100.0);
        }
        out
    }
}

pub fn depth_value_distribution(
    scenes: &[(DepthMap, ForegroundMask)],
    width: f64,
    anchors: &[f64],
) -> Result<DistributionReport> {
    if scenes.is_empty() {
        return Err(Error::InvalidParameter("no scenes given".into()));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("window width {width} must be > 0")));
    }
    if anchors.is_empty() || anchors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("anchors must be non-empty and increasing".into()));
    }
    let mut fg_hits = vec![0usize; anchors.len()];
    let mut bg_hits = vec![0usize; anchors.len()];
    let (mut nf, mut nb) = (0usize, 0usize);
    for (depth, mask) in scenes {
        mask.check_dims(depth.height(), depth.width())?;
        for i in 0..depth.len() {
            if !depth.is_valid(i) {
                continue;
            }
            let d = depth.values()[i];
            let hits = if mask.is_foreground(i) {
                nf += 1;
                &mut fg_hits
            } else {
                nb += 1;
                &mut bg_hits
            };
            for (h, &x) in hits.iter_mut().zip(anchors) {
                if d > x - width && d <= x {
                    *h += 1;
                }
            }
        }
    }
    if nf == 0 {
        return Err(Error::EmptyRegion(Region::Foreground));
    }
    if nb == 0 {
        return Err(Error::EmptyRegion(Region::Background));
    }
    Ok(DistributionReport {
        window_width: width,
        anchors: anchors.to_vec(),
        foreground: fg_hits.iter().map(|&h| h as f64 / nf as f64).collect(),
        background: bg_hits.iter().map(|&h| h as f64 / nb as f64).collect(),
        foreground_pixels: nf,
        background_pixels: nb,
    })
}

/// Depth-gradient level from uniform thirds of `[0, 255]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GradientLevel {
    I,
    II,
    III,
}

impl GradientLevel {
    pub fn from_scaled(value: f64) -> Self {
        if value < 85.0 {
            GradientLevel::I
        } else if value < 170.0 {
            GradientLevel::II
        } else {
            GradientLevel::III
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// How `|Laplacian|` is rescaled to `[0, 255]` before leveling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Min-max over each image separately.
    #[default]
    PerImage,
    /// Min-max over every pixel of the dataset.
    Global,
}

/// Absolute 5-point Laplacian, defined at interior pixels whose four
/// neighbors and self are valid.
pub fn laplacian_magnitude(depth: &DepthMap) -> Result<Vec<Option<f64>>> {
    let (h, w) = (depth.height(), depth.width());
    if h < 3 || w < 3 {
        return Err(Error::TooSmall(format!("{h}x{w} depth map has no 3x3 interior")));
    }
    let at = |r: usize, c: usize| depth.get(r, c);
    let mut out = vec![None; h * w];
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let taps = (at(r, c), at(r - 1, c), at(r + 1, c), at(r, c - 1), at(r, c + 1));
            if let (Some(m), Some(n), Some(s), Some(wv), Some(e)) = taps {
                out[r * w + c] = Some((n + s + wv + e - 4.0 * m).abs());
            }
        }
    }
    if out.iter().all(Option::is_none) {
        return Err(Error::TooSmall("no interior pixel has a valid 4-neighborhood".into()));
    }
    Ok(out)
}

fn value_range(values: &[Option<f64>]) -> (f64, f64) {
    values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

fn levels_in_range(values: &[Option<f64>], (lo, hi): (f64, f64)) -> Vec<Option<GradientLevel>> {
    let span = hi - lo;
    values
        .iter()
        .map(|v| {
            v.map(|v| {
                let scaled = if span > 0.0 { (v - lo) / span * 255.0 } else { 0.0 };
                GradientLevel::from_scaled(scaled)
            })
        })
        .collect()
}

/// Per-pixel gradient level with per-image min-max scaling.
pub fn laplacian_level_map(depth: &DepthMap) -> Result<Vec<Option<GradientLevel>>> {
    let mags = laplacian_magnitude(depth)?;
    let range = value_range(&mags);
    Ok(levels_in_range(&mags, range))
}

/// Percentage of pixels at levels I, II and III, per region.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientLevelReport {
    pub foreground: [f64; 3],
    pub background: [f64; 3],
    pub foreground_pixels: usize,
    pub background_pixels: usize,
}

impl GradientLevelReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12}{:>8}{:>8}{:>8}\n", "", "I", "II", "III");
        for (name, p) in [("Foreground", self.foreground), ("Background", self.background)] {
            let _ = writeln!(out, "{name:<12}{:>8.2}{:>8.2}{:>8.2}", p[0], p[1], p[2]);
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("region\tI\tII\tIII\tpixels\n");
        for (name, p, n) in [
            ("foreground", self.foreground, self.foreground_pixels),
            ("background", self.background, self.background_pixels),
        ] {
            let _ = writeln!(out, "{name}\t{}\t{}\t{}\t{n}", p[0], p[1], p[2]);
        }
        out
    }
}

pub fn gradient_distribution(
    scenes: &[(DepthMap, ForegroundMask)],
    scaling: Scaling,
) -> Result<GradientLevelReport> {
    if scenes.is_empty() {
        return Err(Error::InvalidParameter("no scenes given".into()));
    }
    let mags = scenes
        .iter()
        .map(|(d, m)| {
            m.check_dims(d.height(), d.width())?;
            laplacian_magnitude(d)
        })
        .collect::<Result<Vec<_>>>()?;
    let global_range = mags.iter().map(|m| value_range(m)).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
    );
    let mut fg = [0usize; 3];
    let mut bg = [0usize; 3];
    for ((_, mask), mag) in scenes.iter().zip(&mags) {
        let range = match scaling {
            Scaling::PerImage => value_range(mag),
            Scaling::Global => global_range,
        };
        for (i, level) in levels_in_range(mag, range).into_iter().enumerate() {
            if let Some(level) = level {
                let counts = if mask.is_foreground(i) { &mut fg } else { &mut bg };
                counts[level.index()] += 1;
            }
        }
    }
    let percent = |c: [usize; 3], region| {
        let n: usize = c.iter().sum();
        if n == 0 {
            return Err(Error::EmptyRegion(region));
        }
        Ok((c.map(|x| 100.0 * x as f64 / n as f64), n))
    };
    let (foreground, foreground_pixels) = percent(fg, Region::Foreground)?;
    let (background, background_pixels) = percent(bg, Region::Background)?;
    Ok(GradientLevelReport {
        foreground,
        background,
        foreground_pixels,
        background_pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_mask(h: usize, w: usize) -> ForegroundMask {
        ForegroundMask::new(h, w, (0..h * w).map(|i| i % w < w / 2).collect()).unwrap()
    }

    #[test]
    fn distribution_windows() {
        let d = DepthMap::filled(4, 4, 10.0).unwrap();
        let scenes = vec![(d, half_mask(4, 4))];
        let r = depth_value_distribution(&scenes, 8.0, &[8.0, 16.0]).unwrap();
        assert_eq!(r.foreground, vec![0.0, 1.0]);
        assert_eq!(r.background, vec![0.0, 1.0]);

        let r = depth_value_distribution(&scenes, 80.0, &[40.0, 80.0]).unwrap();
        assert_eq!(r.foreground[1], 1.0);
        assert_eq!(r.to_tsv().lines().count(), 3);
    }

    #[test]
    fn distribution_window_is_half_open() {
        let d = DepthMap::from_values(1, 2, vec![8.0, 16.0]).unwrap();
        let scenes = vec![(d, ForegroundMask::new(1, 2, vec![true, false]).unwrap())];
        let r = depth_value_distribution(&scenes, 8.0, &[8.0, 16.0, 24.0]).unwrap();
        assert_eq!(r.foreground, vec![1.0, 0.0, 0.0]);
        assert_eq!(r.background, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn tiled_windows_sum_to_one() {
        let values: Vec<f64> = (0..60).map(|i| 0.5 + i as f64 * 1.3).collect();
        let d = DepthMap::from_values(6, 10, values).unwrap();
        let scenes = vec![(d, half_mask(6, 10))];
        let anchors: Vec<f64> = (1..=10).map(|k| 8.0 * k as f64).collect();
        let r = depth_value_distribution(&scenes, 8.0, &anchors).unwrap();
        assert!((r.foreground.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((r.background.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_errors() {
        let d = DepthMap::filled(2, 2, 3.0).unwrap();
        let no_fg = vec![(d.clone(), ForegroundMask::all(2, 2, false))];
        assert!(matches!(
            depth_value_distribution(&no_fg, 8.0, &[8.0]),
            Err(Error::EmptyRegion(Region::Foreground))
        ));
        let scenes = vec![(d, half_mask(2, 2))];
        assert!(depth_value_distribution(&scenes, 0.0, &[8.0]).is_err());
        assert!(depth_value_distribution(&scenes, 8.0, &[16.0, 8.0]).is_err());
        assert!(depth_value_distribution(&[], 8.0, &[8.0]).is_err());
    }

    #[test]
    fn constant_depth_is_level_one() {
        let d = DepthMap::filled(5, 6, 12.0).unwrap();
        let levels = laplacian_level_map(&d).unwrap();
        assert!(levels.iter().flatten().all(|&l| l == GradientLevel::I));
        assert_eq!(levels.iter().flatten().count(), 3 * 4);
    }

    #[test]
    fn linear_ramp_interior_is_level_one() {
        let values: Vec<f64> = (0..6 * 7).map(|i| 2.0 + 0.5 * (i / 7) as f64 + 0.25 * (i % 7) as f64).collect();
        let d = DepthMap::from_values(6, 7, values).unwrap();
        let mags = laplacian_magnitude(&d).unwrap();
        assert!(mags.iter().flatten().all(|&m| m.abs() < 1e-12));
        assert!(laplacian_level_map(&d).unwrap().iter().flatten().all(|&l| l == GradientLevel::I));
    }

    #[test]
    fn step_edge_rows_are_level_three() {
        let (h, w) = (8, 5);
        let values: Vec<f64> = (0..h * w).map(|i| if i / w < 4 { 10.0 } else { 20.0 }).collect();
        let d = DepthMap::from_values(h, w, values).unwrap();
        let levels = laplacian_level_map(&d).unwrap();
        for r in 1..h - 1 {
            for c in 1..w - 1 {
                let want = if r == 3 || r == 4 { GradientLevel::III } else { GradientLevel::I };
                assert_eq!(levels[r * w + c], Some(want), "row {r}");
            }
        }
    }

    #[test]
    fn invalid_pixels_excluded_from_neighborhoods() {
        let mut valid = vec![true; 25];
        valid[12] = false;
        let d = DepthMap::new(5, 5, vec![4.0; 25], valid).unwrap();
        let mags = laplacian_magnitude(&d).unwrap();
        for i in [7, 11, 12, 13, 17] {
            assert!(mags[i].is_none());
        }
        assert!(mags[6].is_some());
    }

    #[test]
    fn laplacian_ignores_constant_offset() {
        let values: Vec<f64> = (0..48).map(|i| 3.0 + ((i * 37) % 11) as f64).collect();
        let a = DepthMap::from_values(6, 8, values.clone()).unwrap();
        let b = DepthMap::from_values(6, 8, values.iter().map(|v| v + 17.0).collect()).unwrap();
        assert_eq!(laplacian_level_map(&a).unwrap(), laplacian_level_map(&b).unwrap());
    }

    #[test]
    fn too_small() {
        let d = DepthMap::filled(2, 9, 1.0).unwrap();
        assert!(matches!(laplacian_level_map(&d), Err(Error::TooSmall(_))));
    }

    #[test]
    fn gradient_report_sums_and_scaling() {
        let flat = DepthMap::filled(6, 6, 9.0).unwrap();
        let scenes = vec![(flat.clone(), half_mask(6, 6))];
        let r = gradient_distribution(&scenes, Scaling::PerImage).unwrap();
        assert_eq!(r.foreground, [100.0, 0.0, 0.0]);
        assert_eq!(r.background, [100.0, 0.0, 0.0]);

        // a weak edge and a strong edge: per-image scaling promotes the weak
        // one to level III, global scaling does not
        let edge = |lo: f64, hi: f64| {
            let v: Vec<f64> = (0..36).map(|i| if i / 6 < 3 { lo } else { hi }).collect();
            DepthMap::from_values(6, 6, v).unwrap()
        };
        let scenes = vec![(edge(10.0, 11.0), half_mask(6, 6)), (edge(10.0, 40.0), half_mask(6, 6))];
        let per = gradient_distribution(&scenes, Scaling::PerImage).unwrap();
        let global = gradient_distribution(&scenes, Scaling::Global).unwrap();
        assert!(per.foreground[2] > global.foreground[2]);
        for p in [per.foreground, per.background, global.foreground, global.background] {
            assert!((p.iter().sum::<f64>() - 100.0).abs() < 0.01);
        }
        assert_eq!(per.to_text().lines().count(), 3);
    }
}
