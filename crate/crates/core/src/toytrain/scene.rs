//! Synthetic road-like scenes: a receding ground plane, constant-depth
//! building bands above the horizon, and near-constant-depth rectangular
//! objects standing on the ground.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, ForegroundMask};
use crate::error::{Error, Result};

/// Admissible foreground pixel share of a scene with objects.
pub const FG_FRACTION_RANGE: (f64, f64) = (0.02, 0.25);
const MAX_ATTEMPTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    pub height: usize,
    pub width: usize,
    /// Horizon row as a fraction of the height.
    pub horizon: f64,
    /// Ground depth on the bottom row, meters.
    pub ground_near: f64,
    /// Depth range of building bands, meters.
    pub building_depth: (f64, f64),
    /// Width range of building bands, pixels.
    pub building_width: (usize, usize),
    pub min_objects: usize,
    pub max_objects: usize,
    /// Object depth range, meters (sampled log-uniformly).
    pub object_depth: (f64, f64),
    /// Object height range, pixels.
    pub object_size: (usize, usize),
    /// Standard deviation of the depth jitter fed to the shading, meters.
    pub noise: f64,
    /// Amplitude of the object checker texture.
    pub texture: f64,
    /// Object intensity is `object_offset + object_gain * shade`.
    pub object_offset: f64,
    pub object_gain: f64,
    /// Depth range used to normalize shading.
    pub shade_range: (f64, f64),
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            height: 64,
            width: 96,
            horizon: 0.4,
            ground_near: 4.0,
            building_depth: (20.0, 75.0),
            building_width: (8, 24),
            min_objects: 1,
            max_objects: 4,
            object_depth: (4.0, 30.0),
            object_size: (8, 22),
            noise: 0.05,
            texture: 0.15,
            object_offset: 1.0,
            object_gain: -1.0,
            shade_range: (1.0, 80.0),
            seed: 0,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("scene: {m}")));
        if self.height < 3 || self.width < 3 {
            return bad("height and width must be >= 3");
        }
        if !(self.horizon > 0.0 && self.horizon < 1.0) {
            return bad("horizon must lie in (0, 1)");
        }
        let (lo, hi) = self.shade_range;
        if !(lo > 0.0 && lo < hi) {
            return bad("shade_range must satisfy 0 < lo < hi");
        }
        let in_shade = |(a, b): (f64, f64)| a > 0.0 && a <= b && a >= lo && b <= hi;
        if !in_shade(self.object_depth) || !in_shade(self.building_depth) {
            return bad("object and building depth ranges must be ordered and inside shade_range");
        }
        if !(self.ground_near > 0.0) {
            return bad("ground_near must be > 0");
        }
        if self.min_objects > self.max_objects {
            return bad("min_objects > max_objects");
        }
        let (s0, s1) = self.object_size;
        let (b0, b1) = self.building_width;
        if s0 == 0 || s0 > s1 || b0 == 0 || b0 > b1 {
            return bad("size ranges must be ordered and non-zero");
        }
        if self.noise < 0.0 || self.texture < 0.0 {
            return bad("noise and texture must be >= 0");
        }
        if !(self.object_offset.is_finite() && self.object_gain.is_finite()) {
            return bad("object_offset and object_gain must be finite");
        }
        Ok(())
    }

    fn rng(&self, index: u64) -> Xoshiro256PlusPlus {
        // seed_from_u64 runs SplitMix64 over this combined word
        Xoshiro256PlusPlus::seed_from_u64(self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn horizon_row(&self) -> f64 {
        self.horizon * (self.height - 1) as f64
    }

    /// Ground-plane depth on row `v` (below the horizon).
    fn ground_depth(&self, v: usize) -> f64 {
        let vh = self.horizon_row();
        let rows_below = (self.height - 1) as f64 - vh;
        let d = self.ground_near * rows_below / (v as f64 - vh).max(1e-3);
        d.min(self.shade_range.1)
    }

    /// Row where the ground reaches depth `d`.
    fn ground_row(&self, d: f64) -> f64 {
        let vh = self.horizon_row();
        vh + self.ground_near * ((self.height - 1) as f64 - vh) / d
    }

    fn shade(&self, d: f64) -> f64 {
        let (lo, hi) = self.shade_range;
        (d.clamp(lo, hi).ln() - lo.ln()) / (hi.ln() - lo.ln())
    }
}

/// Rendered scene: single-channel image, dense ground truth and object mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: Vec<f64>,
    pub depth: DepthMap,
    pub mask: ForegroundMask,
}

impl Scene {
    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }
}

struct Object {
    depth: f64,
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
}

/// Deterministic scene number `index` of the family described by `params`.
pub fn generate_scene(params: &SceneParams, index: u64) -> Result<Scene> {
    params.validate()?;
    let mut rng = params.rng(index);
    let (h, w) = (params.height, params.width);
    let vh = params.horizon_row();

    let mut depth = vec![0.0; h * w];
    let mut col = 0;
    while col < w {
        let (b0, b1) = params.building_width;
        let band = rng.random_range(b0..=b1).min(w - col);
        let (d0, d1) = params.building_depth;
        let d = (rng.random_range(d0.ln()..=d1.ln())).exp();
        let top = rng.random_range(0.0..vh * 0.6) as usize;
        for v in 0..h {
            for u in col..col + band {
                depth[v * w + u] = if (v as f64) > vh {
                    params.ground_depth(v)
                } else if v >= top {
                    d
                } else {
                    params.shade_range.1
                };
            }
        }
        col += band;
    }

    let mut attempts = 0;
    let (objects, flags) = loop {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::RejectionLimit {
                attempts: MAX_ATTEMPTS,
                reason: format!(
                    "foreground share never fell inside [{}, {}]",
                    FG_FRACTION_RANGE.0, FG_FRACTION_RANGE.1
                ),
            });
        }
        let count = rng.random_range(params.min_objects..=params.max_objects);
        let mut objects: Vec<Object> = (0..count).map(|_| sample_object(params, &mut rng)).collect();
        // painter's order: far first
        objects.sort_by(|a, b| b.depth.total_cmp(&a.depth));
        let mut flags = vec![false; h * w];
        for o in &objects {
            for v in o.top..o.bottom {
                flags[v * w + o.left..v * w + o.right].fill(true);
            }
        }
        if params.max_objects == 0 {
            break (objects, flags);
        }
        let share = flags.iter().filter(|&&f| f).count() as f64 / (h * w) as f64;
        if (FG_FRACTION_RANGE.0..=FG_FRACTION_RANGE.1).contains(&share) {
            break (objects, flags);
        }
    };

    let mut object_id = vec![usize::MAX; h * w];
    for (id, o) in objects.iter().enumerate() {
        for v in o.top..o.bottom {
            for u in o.left..o.right {
                depth[v * w + u] = o.depth;
                object_id[v * w + u] = id;
            }
        }
    }

    let noise = Normal::new(0.0, params.noise.max(f64::MIN_POSITIVE)).expect("sigma is positive");
    let image = (0..h * w)
        .map(|i| {
            let jitter = if params.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let s = params.shade(depth[i] + jitter);
            match object_id[i] {
                usize::MAX => s,
                id => {
                    let (u, v) = (i % w, i / w);
                    let sign = if (u + v + id) % 2 == 0 { 1.0 } else { -1.0 };
                    params.object_offset + params.object_gain * s + params.texture * sign
                }
            }
        })
        .collect();

    Ok(Scene {
        image,
        depth: DepthMap::from_values(h, w, depth)?,
        mask: ForegroundMask::new(h, w, flags)?,
    })
}

fn sample_object(params: &SceneParams, rng: &mut Xoshiro256PlusPlus) -> Object {
    let (h, w) = (params.height, params.width);
    let (d0, d1) = params.object_depth;
    let depth = rng.random_range(d0.ln()..=d1.ln()).exp();
    let (s0, s1) = params.object_size;
    let size = rng.random_range(s0..=s1).min(h);
    let aspect = rng.random_range(0.8..2.0);
    let width = ((size as f64 * aspect).round() as usize).clamp(1, w);
    let bottom = (params.ground_row(depth).round() as usize).clamp(size, h);
    let left = rng.random_range(0..=w - width);
    Object {
        depth,
        top: bottom - size,
        bottom,
        left,
        right: left + width,
    }
}
