use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::raster::{Raster, Rgb};

#[inline]
fn to_u8(v: f64) -> u8 {
    // f64::round is half-away-from-zero
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resample of the pixels under `src_box` to `out_w x out_h`.
///
/// Sample positions use pixel centres, so equal sizes reproduce the crop
/// exactly.
pub fn resize_region(src: &Raster, src_box: &BBox, out_w: u32, out_h: u32) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument(format!(
            "output size {out_w}x{out_h} is empty"
        )));
    }
    let rect = src_box.pixel_rect(src.width(), src.height())?;
    let sx_scale = f64::from(rect.w) / f64::from(out_w);
    let sy_scale = f64::from(rect.h) / f64::from(out_h);
    let max_x = f64::from(rect.w - 1);
    let max_y = f64::from(rect.h - 1);

    let mut pixels = Vec::with_capacity(out_w as usize * out_h as usize);
    for j in 0..out_h {
        let sy = ((f64::from(j) + 0.5) * sy_scale - 0.5).clamp(0.0, max_y);
        let y0 = sy.floor() as u32;
        let y1 = (y0 + 1).min(rect.h - 1);
        let fy = sy - f64::from(y0);
        for i in 0..out_w {
            let sx = ((f64::from(i) + 0.5) * sx_scale - 0.5).clamp(0.0, max_x);
            let x0 = sx.floor() as u32;
            let x1 = (x0 + 1).min(rect.w - 1);
            let fx = sx - f64::from(x0);
            let p00 = src.get(rect.x + x0, rect.y + y0);
            let p10 = src.get(rect.x + x1, rect.y + y0);
            let p01 = src.get(rect.x + x0, rect.y + y1);
            let p11 = src.get(rect.x + x1, rect.y + y1);
            let mut out: Rgb = [0; 3];
            for c in 0..3 {
                let top = (1.0 - fx) * f64::from(p00[c]) + fx * f64::from(p10[c]);
                let bottom = (1.0 - fx) * f64::from(p01[c]) + fx * f64::from(p11[c]);
                out[c] = to_u8((1.0 - fy) * top + fy * bottom);
            }
            pixels.push(out);
        }
    }
    Raster::new(out_w, out_h, pixels)
}

/// Blend `patch` into `target` under `target_box`:
/// `round(lambda * target + (1 - lambda) * patch)` per channel.
pub fn mix_region_in_place(
    target: &mut Raster,
    target_box: &BBox,
    patch: &Raster,
    lambda: f64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!(
            "mixing ratio {lambda} outside [0, 1]"
        )));
    }
    let rect = target_box.pixel_rect(target.width(), target.height())?;
    if (patch.width(), patch.height()) != (rect.w, rect.h) {
        return Err(Error::Argument(format!(
            "patch is {}x{}, target region is {}x{}",
            patch.width(),
            patch.height(),
            rect.w,
            rect.h
        )));
    }
    for j in 0..rect.h {
        for i in 0..rect.w {
            let t = target.get(rect.x + i, rect.y + j);
            let p = patch.get(i, j);
            let mut out: Rgb = [0; 3];
            for c in 0..3 {
                out[c] = to_u8(lambda * f64::from(t[c]) + (1.0 - lambda) * f64::from(p[c]));
            }
            target.set(rect.x + i, rect.y + j, out);
        }
    }
    Ok(())
}

pub fn mix_region(
    target: &Raster,
    target_box: &BBox,
    patch: &Raster,
    lambda: f64,
) -> Result<Raster> {
    let mut out = target.clone();
    mix_region_in_place(&mut out, target_box, patch, lambda)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Raster {
        let px = (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| [(x * 17) as u8, (y * 29) as u8, ((x + y) * 5) as u8])
            })
            .collect();
        Raster::new(w, h, px).unwrap()
    }

    #[test]
    fn same_size_resize_is_a_crop() {
        let src = gradient(12, 9);
        let b = BBox::new(2.0, 3.0, 5.0, 4.0);
        let out = resize_region(&src, &b, 5, 4).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(out.get(x, y), src.get(2 + x, 3 + y));
            }
        }
    }

    #[test]
    fn checkerboard_to_single_pixel() {
        let src = Raster::new(2, 2, vec![[0; 3], [255; 3], [255; 3], [0; 3]]).unwrap();
        let out = resize_region(&src, &BBox::new(0.0, 0.0, 2.0, 2.0), 1, 1).unwrap();
        // centre sample averages all four: 127.5 rounds away from zero
        assert_eq!(out.get(0, 0), [128; 3]);
    }

    #[test]
    fn constant_region_stays_constant() {
        let src = Raster::filled(20, 20, [37, 201, 99]);
        for (w, h) in [(1, 1), (3, 7), (40, 2), (13, 13)] {
            let out = resize_region(&src, &BBox::new(1.5, 2.25, 9.0, 6.5), w, h).unwrap();
            assert!(out.pixels().iter().all(|&p| p == [37, 201, 99]));
        }
    }

    #[test]
    fn resize_box_outside_raster() {
        let src = Raster::filled(4, 4, [0; 3]);
        assert!(matches!(
            resize_region(&src, &BBox::new(2.0, 2.0, 5.0, 1.0), 2, 2),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn mix_endpoints_and_midpoint() {
        let target = Raster::filled(6, 6, [100; 3]);
        let patch = Raster::filled(2, 3, [200; 3]);
        let b = BBox::new(1.0, 1.0, 2.0, 3.0);
        assert_eq!(mix_region(&target, &b, &patch, 1.0).unwrap(), target);
        let replaced = mix_region(&target, &b, &patch, 0.0).unwrap();
        let half = mix_region(&target, &b, &patch, 0.5).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let inside = (1..3).contains(&x) && (1..4).contains(&y);
                assert_eq!(replaced.get(x, y), if inside { [200; 3] } else { [100; 3] });
                assert_eq!(half.get(x, y), if inside { [150; 3] } else { [100; 3] });
            }
        }
    }

    #[test]
    fn mix_rejects_mismatch_and_bad_ratio() {
        let target = Raster::filled(6, 6, [0; 3]);
        let b = BBox::new(1.0, 1.0, 2.0, 3.0);
        assert!(matches!(
            mix_region(&target, &b, &Raster::filled(3, 3, [0; 3]), 0.5),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            mix_region(&target, &b, &Raster::filled(2, 3, [0; 3]), 1.5),
            Err(Error::Argument(_))
        ));
    }
}
