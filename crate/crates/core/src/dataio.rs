//! KITTI-style inputs and the logit interchange format.
//!
//! * depth PNG: 16-bit grayscale, `depth_m = raw / 256`, raw 0 = no data
//! * object labels: whitespace-separated rows, fields 5-8 are the 2D box
//! * calibration: `KEY: 12 numbers` rows holding 3x4 projection matrices
//! * logit file: `FSEE`, version, then `H W C` as u32 LE and an f32 LE payload

use std::io::Cursor;

use crate::depth::{DepthMap, ForegroundMask, LogitVolume};
use crate::error::{Error, Result};
use crate::pointcloud::CameraIntrinsics;

/// Raw PNG units per meter.
pub const DEPTH_SCALE: f64 = 256.0;
/// Projection row of the left color camera in KITTI calibration files.
pub const DEFAULT_CALIB_KEY: &str = "P2";

pub const LOGIT_MAGIC: [u8; 4] = *b"FSEE";
pub const LOGIT_VERSION: u32 = 1;
pub const LOGIT_HEADER_LEN: usize = 20;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::MalformedImage(e.to_string())
}

pub fn read_depth_png(bytes: &[u8]) -> Result<DepthMap> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale {
        return Err(Error::MalformedImage(format!(
            "expected single-channel grayscale, found {color:?}"
        )));
    }
    if depth != png::BitDepth::Sixteen {
        return Err(Error::BitDepth(format!("expected 16-bit samples, found {depth:?}")));
    }
    let size = reader.output_buffer_size().ok_or_else(|| png_err("image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for row in buf[..info.buffer_size()].chunks_exact(info.line_size) {
        for px in row[..2 * w].chunks_exact(2) {
            let raw = u16::from_be_bytes([px[0], px[1]]);
            valid.push(raw != 0);
            values.push(f64::from(raw) / DEPTH_SCALE);
        }
    }
    DepthMap::new(h, w, values, valid)
}

/// Encodes `depth` as a 16-bit PNG. Valid depths must round to a raw value
/// in `1..=65535`.
pub fn write_depth_png(depth: &DepthMap) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(depth.len() * 2);
    for (i, (&d, &ok)) in depth.values().iter().zip(depth.validity()).enumerate() {
        let raw = if ok {
            let r = (d * DEPTH_SCALE).round();
            if !(1.0..=65535.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "depth {d} m at pixel {i} is outside the encodable range (1/256 .. 255.996 m)"
                )));
            }
            r as u16
        } else {
            0
        };
        data.extend_from_slice(&raw.to_be_bytes());
    }
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, depth.width() as u32, depth.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Sixteen);
        let mut writer = encoder.write_header().map_err(png_err)?;
        writer.write_image_data(&data).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

/// Axis-aligned 2D object box in pixel coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Box2D {
    pub class: String,
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

/// Which labelled classes count as foreground. `DontCare` never does.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ClassFilter {
    #[default]
    AllObjects,
    Only(Vec<String>),
}

impl ClassFilter {
    pub fn accepts(&self, class: &str) -> bool {
        if class == "DontCare" {
            return false;
        }
        match self {
            ClassFilter::AllObjects => true,
            ClassFilter::Only(classes) => classes.iter().any(|c| c == class),
        }
    }
}

pub fn parse_labels(text: &str, filter: &ClassFilter) -> Result<Vec<Box2D>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            context: "object label".into(),
            line: i + 1,
            message,
        };
        if fields.len() < 15 {
            return Err(err(format!("expected at least 15 fields, found {}", fields.len())));
        }
        let mut coords = [0.0; 4];
        for (k, c) in coords.iter_mut().enumerate() {
            let raw = fields[4 + k];
            *c = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("field {} ({raw:?}) is not a finite number", 5 + k)))?;
        }
        let [left, top, right, bottom] = coords;
        if left > right || top > bottom {
            return Err(err(format!("inverted box ({left}, {top}, {right}, {bottom})")));
        }
        if filter.accepts(fields[0]) {
            boxes.push(Box2D {
                class: fields[0].to_string(),
                left,
                top,
                right,
                bottom,
            });
        }
    }
    Ok(boxes)
}

/// Intrinsics from the 3x4 projection matrix stored under `key`.
pub fn parse_calib(text: &str, key: &str) -> Result<CameraIntrinsics> {
    for (i, line) in text.lines().enumerate() {
        let Some((k, rest)) = line.split_once(':') else {
            continue;
        };
        if k.trim() != key {
            continue;
        }
        let err = |message: String| Error::Parse {
            context: format!("calibration {key}"),
            line: i + 1,
            message,
        };
        let values = rest
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| err(format!("{v:?} is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 12 {
            return Err(err(format!("expected a 3x4 matrix (12 values), found {}", values.len())));
        }
        return CameraIntrinsics::new(values[0], values[5], values[2], values[6])
            .map_err(|e| err(e.to_string()));
    }
    Err(Error::MissingKey {
        key: key.to_string(),
        context: "calibration file".into(),
    })
}

/// Union of the half-open boxes `[left, right) x [top, bottom)`, clipped to
/// the image.
pub fn rasterize_mask(boxes: &[Box2D], height: usize, width: usize) -> ForegroundMask {
    let mut flags = vec![false; height * width];
    let clip = |v: f64, n: usize| v.ceil().clamp(0.0, n as f64) as usize;
    for b in boxes {
        let (u0, u1) = (clip(b.left, width), clip(b.right, width));
        let (v0, v1) = (clip(b.top, height), clip(b.bottom, height));
        for v in v0..v1 {
            flags[v * width + u0..v * width + u1.max(u0)].fill(true);
        }
    }
    ForegroundMask::new(height, width, flags).expect("dimensions match by construction")
}

pub fn write_logits(volume: &LogitVolume) -> Result<Vec<u8>> {
    let dims = [volume.height(), volume.width(), volume.channels()];
    let mut out = Vec::with_capacity(LOGIT_HEADER_LEN + 4 * volume.scores().len());
    out.extend_from_slice(&LOGIT_MAGIC);
    out.extend_from_slice(&LOGIT_VERSION.to_le_bytes());
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::InvalidParameter(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (index, &s) in volume.scores().iter().enumerate() {
        let v = s as f32;
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn read_logits(bytes: &[u8]) -> Result<LogitVolume> {
    if bytes.len() < LOGIT_HEADER_LEN {
        return Err(Error::Truncated {
            expected: LOGIT_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != LOGIT_MAGIC {
        return Err(Error::BadMagic {
            expected: LOGIT_MAGIC,
            found,
        });
    }
    let version = word(1);
    if version != LOGIT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (h, w, c) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let n = h
        .checked_mul(w)
        .and_then(|x| x.checked_mul(c))
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(|| Error::InvalidParameter(format!("header {h}x{w}x{c} overflows")))?;
    let payload = &bytes[LOGIT_HEADER_LEN..];
    if payload.len() < n {
        return Err(Error::Truncated {
            expected: LOGIT_HEADER_LEN + n,
            found: bytes.len(),
        });
    }
    if payload.len() > n {
        return Err(Error::TrailingBytes(payload.len() - n));
    }
    let scores = payload
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    LogitVolume::new(h, w, c, scores)
}

/// Sample ids, one per non-empty line.
pub fn parse_index_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CAR: &str = "Car 0.00 0 -1.58 100.0 50.0 200.0 150.0 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59";

    #[test]
    fn depth_png_convention() {
        let d = DepthMap::new(1, 3, vec![1.0, 0.0, 20.5], vec![true, false, true]).unwrap();
        let bytes = write_depth_png(&d).unwrap();
        let back = read_depth_png(&bytes).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.get(0, 0), Some(1.0));
        assert_eq!(back.get(0, 1), None);
    }

    #[test]
    fn depth_png_rejects_other_formats() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2]).unwrap();
        }
        assert!(matches!(read_depth_png(&out), Err(Error::BitDepth(_))));
        assert!(matches!(read_depth_png(b"not a png"), Err(Error::MalformedImage(_))));
        let too_far = DepthMap::filled(1, 1, 300.0).unwrap();
        assert!(write_depth_png(&too_far).is_err());
    }

    #[test]
    fn labels() {
        let boxes = parse_labels(CAR, &ClassFilter::AllObjects).unwrap();
        assert_eq!(
            boxes,
            vec![Box2D { class: "Car".into(), left: 100.0, top: 50.0, right: 200.0, bottom: 150.0 }]
        );
        assert!(parse_labels("", &ClassFilter::AllObjects).unwrap().is_empty());
        let dc = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10";
        assert!(parse_labels(dc, &ClassFilter::AllObjects).unwrap().is_empty());
        let cars_only = ClassFilter::Only(vec!["Car".into()]);
        let ped = CAR.replacen("Car", "Pedestrian", 1);
        assert!(parse_labels(&ped, &cars_only).unwrap().is_empty());

        let text = format!("{CAR}\nCar 0.00 0 -1.58 100.0 50.0");
        match parse_labels(&text, &ClassFilter::AllObjects) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a located parse error, got {other:?}"),
        }
        let bad = CAR.replacen("200.0", "abc", 1);
        assert!(matches!(parse_labels(&bad, &ClassFilter::AllObjects), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn calib() {
        let text = "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 700 0 300 4.5 0 700 100 0.2 0 0 1 0.003\n";
        assert_eq!(parse_calib(text, "P2").unwrap(), CameraIntrinsics::new(700.0, 700.0, 300.0, 100.0).unwrap());
        assert_eq!(parse_calib(text, "P0").unwrap(), CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap());
        assert!(matches!(parse_calib(text, "P3"), Err(Error::MissingKey { .. })));
        let short = "P2: 700 0 300\n";
        assert!(matches!(parse_calib(short, "P2"), Err(Error::Parse { line: 1, .. })));
        let junk = "P1: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 700 0 x 0 0 700 100 0 0 0 1 0";
        assert!(matches!(parse_calib(junk, "P2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn masks() {
        assert_eq!(rasterize_mask(&[], 4, 5).foreground_count(), 0);
        let full = Box2D { class: "Car".into(), left: 0.0, top: 0.0, right: 5.0, bottom: 4.0 };
        assert_eq!(rasterize_mask(&[full], 4, 5).foreground_count(), 20);
        let a = Box2D { class: "Car".into(), left: 0.0, top: 0.0, right: 3.0, bottom: 2.0 };
        let b = Box2D { class: "Car".into(), left: 2.0, top: 1.0, right: 4.0, bottom: 3.0 };
        // 6 + 4 - 1 overlapping pixel
        assert_eq!(rasterize_mask(&[a, b], 4, 5).foreground_count(), 9);
        let outside = Box2D { class: "Car".into(), left: -10.0, top: 2.5, right: 1.2, bottom: 99.0 };
        let m = rasterize_mask(&[outside], 4, 5);
        // columns 0..2, rows 3..4
        assert_eq!(m.foreground_count(), 2);
        assert!(m.is_foreground(3 * 5 + 1));
    }

    #[test]
    fn logit_file_layout() {
        let v = LogitVolume::new(1, 1, 2, vec![0.5, -2.0]).unwrap();
        let bytes = write_logits(&v).unwrap();
        assert_eq!(bytes.len(), LOGIT_HEADER_LEN + 8);
        assert_eq!(&bytes[..4], b"FSEE");
        assert_eq!(read_logits(&bytes).unwrap(), v);
        assert!(matches!(read_logits(&bytes[..25]), Err(Error::Truncated { .. })));
        assert!(matches!(read_logits(&bytes[..7]), Err(Error::Truncated { .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_logits(&long), Err(Error::TrailingBytes(1))));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(read_logits(&magic), Err(Error::BadMagic { .. })));
        let mut nan = bytes.clone();
        nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_logits(&nan), Err(Error::NonFinite { index: 1 })));
        let mut version = bytes;
        version[4] = 9;
        assert!(matches!(read_logits(&version), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn index_lists() {
        assert_eq!(parse_index_list("000001\n\n000007 \n"), vec!["000001", "000007"]);
    }

    proptest! {
        #[test]
        fn logits_round_trip(h in 1usize..5, w in 1usize..5, c in 1usize..6, seed in any::<u64>()) {
            let scores = (0..h * w * c)
                .map(|i| f64::from(((seed.wrapping_mul(i as u64 + 1) % 20000) as f32 - 10000.0) / 7.0))
                .collect();
            let v = LogitVolume::new(h, w, c, scores).unwrap();
            let bytes = write_logits(&v).unwrap();
            prop_assert_eq!(read_logits(&bytes).unwrap(), v);
        }

        #[test]
        fn depth_png_round_trip(values in prop::collection::vec(0.004f64..255.9, 1..40)) {
            let n = values.len();
            let d = DepthMap::from_values(1, n, values).unwrap();
            let back = read_depth_png(&write_depth_png(&d).unwrap()).unwrap();
            for (a, b) in d.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1.0 / 512.0);
            }
        }
    }
}
