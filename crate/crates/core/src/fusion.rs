//! Merging the foreground-branch and background-branch logit volumes.

use crate::depth::{ForegroundMask, LogitVolume};
use crate::error::Result;

/// Element-wise maximum of the two branches' raw scores.
pub fn max_merge(p_f: &LogitVolume, p_b: &LogitVolume) -> Result<LogitVolume> {
    p_f.check_same_shape(p_b)?;
    let mut out = p_f.clone();
    for (o, &b) in out.scores_mut().iter_mut().zip(p_b.scores()) {
        *o = o.max(b);
    }
    Ok(out)
}

/// Foreground pixels from `p_f`, background pixels from `p_b`.
pub fn mask_merge(p_f: &LogitVolume, p_b: &LogitVolume, fg: &ForegroundMask) -> Result<LogitVolume> {
    p_f.check_same_shape(p_b)?;
    fg.check_dims(p_f.height(), p_f.width())?;
    let mut out = p_b.clone();
    for i in 0..out.num_pixels() {
        if fg.is_foreground(i) {
            out.pixel_mut(i).copy_from_slice(p_f.pixel(i));
        }
    }
    Ok(out)
}

/// How the two branches are combined at inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeMode {
    Max,
    Mask,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{decode_depthmap, BinSpec};
    use crate::error::Error;
    use proptest::prelude::*;

    fn vol(scores: Vec<f64>, c: usize) -> LogitVolume {
        let n = scores.len() / c;
        LogitVolume::new(1, n, c, scores).unwrap()
    }

    #[test]
    fn max_examples() {
        let m = max_merge(&vol(vec![1.0, 5.0, 2.0], 3), &vol(vec![3.0, 4.0, 1.0], 3)).unwrap();
        assert_eq!(m.scores(), &[3.0, 5.0, 2.0]);
        let a = vol(vec![1.0, -2.0, 0.5, 7.0], 2);
        assert_eq!(max_merge(&a, &a).unwrap(), a);
        let lower = vol(vec![0.0, -3.0, 0.5, 6.0], 2);
        assert_eq!(max_merge(&a, &lower).unwrap(), a);
    }

    #[test]
    fn shape_mismatch() {
        let a = LogitVolume::zeros(2, 2, 3);
        let b = LogitVolume::zeros(2, 2, 4);
        assert!(matches!(max_merge(&a, &b), Err(Error::ShapeMismatch(_))));
        assert!(mask_merge(&a, &a, &ForegroundMask::all(2, 3, true)).is_err());
    }

    #[test]
    fn mask_boundaries() {
        let f = vol(vec![1.0, 2.0, 3.0, 4.0], 2);
        let b = vol(vec![-1.0, -2.0, -3.0, -4.0], 2);
        assert_eq!(mask_merge(&f, &b, &ForegroundMask::all(1, 2, true)).unwrap(), f);
        assert_eq!(mask_merge(&f, &b, &ForegroundMask::all(1, 2, false)).unwrap(), b);
        let half = ForegroundMask::new(1, 2, vec![false, true]).unwrap();
        assert_eq!(mask_merge(&f, &b, &half).unwrap().scores(), &[-1.0, -2.0, 3.0, 4.0]);
        assert_eq!(mask_merge(&f, &f, &half).unwrap(), f);
    }

    #[test]
    fn confident_branches_agree_after_decoding() {
        let spec = BinSpec::new(1.0, 80.0, 16).unwrap();
        let (h, w, c) = (3, 4, 16);
        let fg = ForegroundMask::new(h, w, (0..h * w).map(|i| i % 3 == 0).collect()).unwrap();
        let mut p_f = LogitVolume::zeros(h, w, c);
        let mut p_b = LogitVolume::zeros(h, w, c);
        for i in 0..h * w {
            let (own, other) = if fg.is_foreground(i) { (&mut p_f, &mut p_b) } else { (&mut p_b, &mut p_f) };
            own.pixel_mut(i)[(i * 5) % c] = 30.0;
            // the other branch is unsure: weak peak elsewhere
            other.pixel_mut(i)[(i * 7 + 3) % c] = 1.0;
        }
        let a = decode_depthmap(&max_merge(&p_f, &p_b).unwrap(), &spec).unwrap();
        let b = decode_depthmap(&mask_merge(&p_f, &p_b, &fg).unwrap(), &spec).unwrap();
        let ratio = spec.bin_ratio();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x / y).max(y / x) < ratio);
        }
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..24).prop_flat_map(|n| {
            let v = || prop::collection::vec(-10.0f64..10.0, n * 3);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn max_algebra((a, b, c) in arb_pair()) {
            let (a, b, c) = (vol(a, 3), vol(b, 3), vol(c, 3));
            let ab = max_merge(&a, &b).unwrap();
            prop_assert_eq!(&ab, &max_merge(&b, &a).unwrap());
            prop_assert_eq!(
                max_merge(&ab, &c).unwrap(),
                max_merge(&a, &max_merge(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(&max_merge(&a, &a).unwrap(), &a);
            for ((m, x), y) in ab.scores().iter().zip(a.scores()).zip(b.scores()) {
                prop_assert!(m >= x && m >= y);
            }
        }
    }
}
