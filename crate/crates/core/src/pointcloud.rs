//! Pseudo-LiDAR: pinhole back-projection of depth maps into camera-frame
//! point clouds, the above-sensor height filter and export.

use std::io::{self, Write};

use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Default maximum height above the sensor kept by [`filter_height`].
pub const DEFAULT_MAX_HEIGHT: f64 = 1.0;

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub f_u: f64,
    pub f_v: f64,
    pub c_u: f64,
    pub c_v: f64,
}

impl CameraIntrinsics {
    pub fn new(f_u: f64, f_v: f64, c_u: f64, c_v: f64) -> Result<Self> {
        if !(f_u > 0.0 && f_v > 0.0 && f_u.is_finite() && f_v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive (f_u={f_u}, f_v={f_v})"
            )));
        }
        if !(c_u.is_finite() && c_v.is_finite()) {
            return Err(Error::InvalidParameter("principal point must be finite".into()));
        }
        Ok(CameraIntrinsics { f_u, f_v, c_u, c_v })
    }

    /// Rejects a principal point farther than `factor` image extents from
    /// the image.
    pub fn check_bounds(&self, height: usize, width: usize, factor: f64) -> Result<()> {
        let (w, h) = (width as f64, height as f64);
        let inside = |c: f64, extent: f64| c >= -factor * extent && c <= (1.0 + factor) * extent;
        if !(inside(self.c_u, w) && inside(self.c_v, h)) {
            return Err(Error::InvalidParameter(format!(
                "principal point ({}, {}) is outside {factor}x the {width}x{height} image bounds",
                self.c_u, self.c_v
            )));
        }
        Ok(())
    }

    /// Pixel coordinate `(u, v)` of a camera-frame point with `z > 0`.
    pub fn project(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        (x * self.f_u / z + self.c_u, y * self.f_v / z + self.c_v)
    }
}

/// One pseudo-LiDAR return. Camera frame: x right, y down, z forward.
/// Held in f64; the binary export rounds to f32.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub reflectance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `(x, y, z)` of pixel `(u, v)` at depth `d`, in f64.
pub fn back_project(k: &CameraIntrinsics, u: f64, v: f64, d: f64) -> (f64, f64, f64) {
    (d * (u - k.c_u) / k.f_u, d * (v - k.c_v) / k.f_v, d)
}

/// One point per valid pixel, row-major, reflectance 1.
pub fn depth_to_points(depth: &DepthMap, k: &CameraIntrinsics) -> PointCloud {
    let w = depth.width();
    let points = (0..depth.len())
        .filter(|&i| depth.is_valid(i))
        .map(|i| {
            let (x, y, z) = back_project(k, (i % w) as f64, (i / w) as f64, depth.values()[i]);
            Point {
                x,
                y,
                z,
                reflectance: 1.0,
            }
        })
        .collect();
    PointCloud { points }
}

/// Drops points more than `max_height` meters above the sensor. The sensor
/// sits `sensor_offset` meters above the camera origin (y points down).
pub fn filter_height(pc: &PointCloud, max_height: f64, sensor_offset: f64) -> Result<PointCloud> {
    if max_height.is_nan() || max_height <= 0.0 {
        return Err(Error::InvalidParameter(format!("max height {max_height} must be > 0")));
    }
    let limit = -(max_height + sensor_offset);
    Ok(PointCloud {
        points: pc.points.iter().copied().filter(|p| p.y >= limit).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    /// ASCII PLY, `x y z reflectance` per line with 6 decimals.
    AsciiPly,
    /// Headerless little-endian f32 quadruples, the KITTI velodyne layout.
    KittiBin,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::AsciiPly => "ply",
            ExportFormat::KittiBin => "bin",
        }
    }
}

pub fn export<W: Write>(pc: &PointCloud, format: ExportFormat, mut out: W) -> io::Result<()> {
    match format {
        ExportFormat::AsciiPly => {
            write!(
                out,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\n\
                 property float z\nproperty float reflectance\nend_header\n",
                pc.len()
            )?;
            for p in &pc.points {
                writeln!(out, "{:.6} {:.6} {:.6} {:.6}", p.x, p.y, p.z, p.reflectance)?;
            }
        }
        ExportFormat::KittiBin => {
            let mut buf = Vec::with_capacity(pc.len() * 16);
            for p in &pc.points {
                for v in [p.x, p.y, p.z, p.reflectance] {
                    buf.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            out.write_all(&buf)?;
        }
    }
    out.flush()
}

pub fn export_to_vec(pc: &PointCloud, format: ExportFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    export(pc, format, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Reads a KITTI velodyne-layout buffer back into points.
pub fn read_kitti_bin(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Truncated {
            expected: bytes.len().div_ceil(16) * 16,
            found: bytes.len(),
        });
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let points = bytes
        .chunks_exact(16)
        .map(|c| Point {
            x: f(&c[0..4]),
            y: f(&c[4..8]),
            z: f(&c[8..12]),
            reflectance: f(&c[12..16]),
        })
        .collect();
    Ok(PointCloud { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitti_like() -> CameraIntrinsics {
        CameraIntrinsics::new(700.0, 700.0, 300.0, 100.0).unwrap()
    }

    #[test]
    fn principal_point_maps_to_axis() {
        let k = kitti_like();
        assert_eq!(back_project(&k, 300.0, 100.0, 5.0), (0.0, 0.0, 5.0));
        let (x, y, z) = back_project(&k, 440.0, 240.0, 7.0);
        assert!((x - 1.4).abs() < 1e-12 && (y - 1.4).abs() < 1e-12 && z == 7.0);
        let (x2, y2, z2) = back_project(&k, 440.0, 240.0, 14.0);
        assert!((x2 - 2.0 * x).abs() < 1e-12 && (y2 - 2.0 * y).abs() < 1e-12 && z2 == 14.0);
    }

    #[test]
    fn one_point_per_valid_pixel() {
        let mut valid = vec![true; 12];
        valid[3] = false;
        valid[7] = false;
        let d = DepthMap::new(3, 4, vec![2.0; 12], valid).unwrap();
        let k = CameraIntrinsics::new(10.0, 10.0, 2.0, 1.0).unwrap();
        let pc = depth_to_points(&d, &k);
        assert_eq!(pc.len(), 10);
        assert!(pc.points.iter().all(|p| p.reflectance == 1.0 && p.z > 0.0));
    }

    #[test]
    fn height_filter() {
        let pc = PointCloud {
            points: [-2.0, 0.5, -1.0, -1.0001]
                .iter()
                .map(|&y| Point { x: 0.0, y, z: 5.0, reflectance: 1.0 })
                .collect(),
        };
        let kept = filter_height(&pc, 1.0, 0.0).unwrap();
        let ys: Vec<f64> = kept.points.iter().map(|p| p.y).collect();
        assert_eq!(ys, vec![0.5, -1.0]);
        assert_eq!(filter_height(&kept, 1.0, 0.0).unwrap(), kept);
        assert_eq!(filter_height(&pc, f64::INFINITY, 0.0).unwrap(), pc);
        // sensor 0.5 m above the camera lifts the cut to y = -1.5
        assert_eq!(filter_height(&pc, 1.0, 0.5).unwrap().len(), 3);
        assert!(filter_height(&pc, 0.0, 0.0).is_err());
    }

    #[test]
    fn export_formats() {
        let empty = PointCloud::default();
        assert!(export_to_vec(&empty, ExportFormat::KittiBin).is_empty());
        let ply = String::from_utf8(export_to_vec(&empty, ExportFormat::AsciiPly)).unwrap();
        assert!(ply.contains("element vertex 0\n") && ply.ends_with("end_header\n"));

        let one = PointCloud {
            points: vec![Point { x: 1.4, y: 1.4, z: 7.0, reflectance: 1.0 }],
        };
        let bin = export_to_vec(&one, ExportFormat::KittiBin);
        assert_eq!(bin.len(), 16);
        assert_eq!(&bin[8..12], &7.0f32.to_le_bytes());
        let back = read_kitti_bin(&bin).unwrap();
        assert_eq!(back.points[0].x, f64::from(1.4f32));
        assert_eq!(export_to_vec(&back, ExportFormat::KittiBin), bin);
        let ply = String::from_utf8(export_to_vec(&one, ExportFormat::AsciiPly)).unwrap();
        assert_eq!(ply.lines().last().unwrap(), "1.400000 1.400000 7.000000 1.000000");
        assert!(read_kitti_bin(&bin[..10]).is_err());
    }

    #[test]
    fn bounds_check() {
        let k = kitti_like();
        assert!(k.check_bounds(375, 1242, 0.5).is_ok());
        let far = CameraIntrinsics::new(700.0, 700.0, 9000.0, 100.0).unwrap();
        assert!(far.check_bounds(375, 1242, 0.5).is_err());
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    }
}
