//! Keypoint refinement by template matching along the epipolar curve.
//!
//! For a matched pair, a square template around the left keypoint is
//! correlated (zero-mean NCC) against integer-pixel candidates around the
//! right keypoint. Candidates must lie within `epipolar_gate` pixels of the
//! left keypoint's epipolar curve; if nothing qualifies or the best score is
//! below `min_ncc`, the keypoint is left untouched.
//!
//! All correlation sums are computed in integer arithmetic, so a perfect
//! (or perfectly inverted) match scores exactly ±1.

use crate::camera::Pixel;
use crate::detection::KeypointName;
use crate::epipolar::{closest_point_on_curve, EpipolarCurve};
use crate::error::{Error, Result};
use crate::gray::GrayImage;

#[derive(Debug, Clone)]
pub struct RefinementConfig {
    /// Template half-width; 10 gives the 21×21 window.
    pub template_half: u32,
    /// Search half-width around the right keypoint, px.
    pub search_half: u32,
    /// Maximum distance of a candidate to the epipolar curve, px.
    pub epipolar_gate: f64,
    /// Minimum accepted correlation score.
    pub min_ncc: f64,
    /// Restrict refinement to these keypoints; `None` refines all five.
    pub keypoints: Option<Vec<KeypointName>>,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            template_half: 10,
            search_half: 30,
            epipolar_gate: 5.0,
            min_ncc: 0.2,
            keypoints: None,
        }
    }
}

impl RefinementConfig {
    pub fn applies_to(&self, name: KeypointName) -> bool {
        match &self.keypoints {
            None => true,
            Some(list) => list.contains(&name),
        }
    }
}

/// Outcome of refining one keypoint.
#[derive(Debug, Clone, Copy)]
pub struct Refinement {
    pub position: Pixel,
    /// Best correlation score seen, if any candidate was evaluated.
    pub score: Option<f64>,
    /// False when the original position was kept.
    pub refined: bool,
}

/// Integer-exact correlation sums of a pixel window.
#[derive(Debug, Clone, Copy)]
struct WindowSums {
    n: i64,
    sum: i64,
    sum_sq: i64,
}

fn window_sums(img: &GrayImage, cx: i64, cy: i64, half: i64) -> WindowSums {
    let mut sum = 0i64;
    let mut sum_sq = 0i64;
    for y in (cy - half)..=(cy + half) {
        let row = y as usize * img.width as usize;
        for x in (cx - half)..=(cx + half) {
            let v = img.pixels[row + x as usize] as i64;
            sum += v;
            sum_sq += v * v;
        }
    }
    let side = 2 * half + 1;
    WindowSums {
        n: side * side,
        sum,
        sum_sq,
    }
}

fn cross_sum(a: &GrayImage, acx: i64, acy: i64, b: &GrayImage, bcx: i64, bcy: i64, half: i64) -> i64 {
    let mut sum = 0i64;
    for dy in -half..=half {
        let arow = (acy + dy) as usize * a.width as usize;
        let brow = (bcy + dy) as usize * b.width as usize;
        for dx in -half..=half {
            sum += a.pixels[arow + (acx + dx) as usize] as i64
                * b.pixels[brow + (bcx + dx) as usize] as i64;
        }
    }
    sum
}

/// Correlation from integer sums. Returns `None` when the candidate window
/// has zero variance (callers treat that as never-selected).
fn ncc_from_sums(sa: WindowSums, sb: WindowSums, sab: i64) -> Option<f64> {
    let va = sa.n * sa.sum_sq - sa.sum * sa.sum;
    let vb = sb.n * sb.sum_sq - sb.sum * sb.sum;
    if va == 0 || vb == 0 {
        return None;
    }
    let num = sa.n * sab - sa.sum * sb.sum;
    // Cauchy-Schwarz equality detected in exact arithmetic: a perfect
    // (anti-)correlation scores exactly ±1.
    if (num as i128) * (num as i128) == (va as i128) * (vb as i128) {
        return Some(if num >= 0 { 1.0 } else { -1.0 });
    }
    Some((num as f64 / ((va as f64).sqrt() * (vb as f64).sqrt())).clamp(-1.0, 1.0))
}

/// Zero-mean normalized cross-correlation of two equal-size patches.
///
/// Errors with [`Error::ZeroVariance`] when both patches are constant; a
/// single constant patch correlates to 0.
pub fn ncc(template: &GrayImage, candidate: &GrayImage) -> Result<f64> {
    if template.width != candidate.width || template.height != candidate.height {
        return Err(Error::Image(format!(
            "patch dimensions differ: {}x{} vs {}x{}",
            template.width, template.height, candidate.width, candidate.height
        )));
    }
    let n = template.pixels.len() as i64;
    let stats = |p: &GrayImage| {
        let mut sum = 0i64;
        let mut sum_sq = 0i64;
        for &v in &p.pixels {
            sum += v as i64;
            sum_sq += (v as i64) * (v as i64);
        }
        WindowSums { n, sum, sum_sq }
    };
    let sa = stats(template);
    let sb = stats(candidate);
    let sab: i64 = template
        .pixels
        .iter()
        .zip(&candidate.pixels)
        .map(|(&a, &b)| a as i64 * b as i64)
        .sum();

    let va = sa.n * sa.sum_sq - sa.sum * sa.sum;
    let vb = sb.n * sb.sum_sq - sb.sum * sb.sum;
    if va == 0 && vb == 0 {
        return Err(Error::ZeroVariance);
    }
    Ok(ncc_from_sums(sa, sb, sab).unwrap_or(0.0))
}

/// Refine `right_kp` by maximizing NCC over integer positions within
/// `±search_half` of it, constrained to `epipolar_gate` px of `curve` (the
/// epipolar curve of `left_kp`). Only the right keypoint moves.
pub fn refine_keypoint(
    left_img: &GrayImage,
    right_img: &GrayImage,
    left_kp: Pixel,
    right_kp: Pixel,
    curve: &EpipolarCurve,
    cfg: &RefinementConfig,
) -> Result<Refinement> {
    let th = cfg.template_half as i64;
    let (tcx, tcy) = (left_kp.u.round() as i64, left_kp.v.round() as i64);
    if !left_img.contains_window(tcx - th, tcy - th, tcx + th, tcy + th) {
        return Err(Error::TemplateOutOfBounds {
            u: left_kp.u,
            v: left_kp.v,
            width: left_img.width,
            height: left_img.height,
        });
    }

    let not_refined = |score: Option<f64>| Refinement {
        position: right_kp,
        score,
        refined: false,
    };

    let template = window_sums(left_img, tcx, tcy, th);
    if template.n * template.sum_sq - template.sum * template.sum == 0 {
        // A flat template matches nothing meaningfully.
        return Ok(not_refined(None));
    }

    // Candidates outside the curve's gate-inflated bounding box cannot pass
    // the gate; the box test is a conservative prefilter, the exact
    // distance check below decides.
    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &curve.vertices {
        min_u = min_u.min(v.u);
        max_u = max_u.max(v.u);
        min_v = min_v.min(v.v);
        max_v = max_v.max(v.v);
    }

    let (rcx, rcy) = (right_kp.u.round() as i64, right_kp.v.round() as i64);
    let sh = cfg.search_half as i64;
    let mut best: Option<(f64, i64, i64)> = None;

    for dy in -sh..=sh {
        let cy = rcy + dy;
        for dx in -sh..=sh {
            let cx = rcx + dx;
            if !right_img.contains_window(cx - th, cy - th, cx + th, cy + th) {
                continue;
            }
            let pos = Pixel::new(cx as f64, cy as f64);
            if pos.u < min_u - cfg.epipolar_gate
                || pos.u > max_u + cfg.epipolar_gate
                || pos.v < min_v - cfg.epipolar_gate
                || pos.v > max_v + cfg.epipolar_gate
            {
                continue;
            }
            if closest_point_on_curve(curve, pos).distance > cfg.epipolar_gate {
                continue;
            }
            let candidate = window_sums(right_img, cx, cy, th);
            let sab = cross_sum(left_img, tcx, tcy, right_img, cx, cy, th);
            let Some(score) = ncc_from_sums(template, candidate, sab) else {
                continue;
            };
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, cx, cy));
            }
        }
    }

    match best {
        Some((score, cx, cy)) if score >= cfg.min_ncc => Ok(Refinement {
            position: Pixel::new(cx as f64, cy as f64),
            score: Some(score),
            refined: true,
        }),
        Some((score, _, _)) => Ok(not_refined(Some(score))),
        None => Ok(not_refined(None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(width: u32, height: u32, seed: u64) -> GrayImage {
        // Small xorshift; the exact pattern is irrelevant, determinism is.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 24) as u8
        };
        let pixels = (0..width as usize * height as usize).map(|_| next()).collect();
        GrayImage::new(width, height, pixels).unwrap()
    }

    fn shifted_copy(img: &GrayImage, dx: i64, dy: i64) -> GrayImage {
        let mut out = GrayImage::filled(img.width, img.height, 0);
        for y in 0..img.height as i64 {
            for x in 0..img.width as i64 {
                let (sx, sy) = (x - dx, y - dy);
                let v = if sx >= 0 && sy >= 0 && sx < img.width as i64 && sy < img.height as i64 {
                    img.pixel(sx as u32, sy as u32)
                } else {
                    0
                };
                out.set(x as u32, y as u32, v);
            }
        }
        out
    }

    fn vertical_curve(at: f64) -> EpipolarCurve {
        EpipolarCurve {
            vertices: vec![Pixel::new(at, -1e4), Pixel::new(at, 1e4)],
            depths: vec![1.0, 2.0],
            depth_range: (1.0, 2.0),
            source_pixel: Pixel::new(at, 0.0),
        }
    }

    #[test]
    fn ncc_self_match_is_exactly_one() {
        let img = noise_image(21, 21, 7);
        assert_eq!(ncc(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ncc_negative_is_exactly_minus_one() {
        let img = noise_image(21, 21, 9);
        let neg = GrayImage::new(21, 21, img.pixels.iter().map(|&v| 255 - v).collect()).unwrap();
        assert_eq!(ncc(&img, &neg).unwrap(), -1.0);
    }

    #[test]
    fn ncc_affine_rescale_is_one() {
        let base = GrayImage::new(3, 3, vec![0, 10, 20, 30, 40, 50, 60, 70, 35]).unwrap();
        let scaled =
            GrayImage::new(3, 3, base.pixels.iter().map(|&v| 3 * v + 20).collect()).unwrap();
        assert!((ncc(&base, &scaled).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ncc_zero_variance() {
        let flat = GrayImage::filled(5, 5, 42);
        let other_flat = GrayImage::filled(5, 5, 17);
        assert!(matches!(ncc(&flat, &other_flat).unwrap_err(), Error::ZeroVariance));

        let textured = noise_image(5, 5, 3);
        assert_eq!(ncc(&flat, &textured).unwrap(), 0.0);
    }

    #[test]
    fn refine_recovers_known_shift() {
        let left = noise_image(120, 120, 42);
        let (dx, dy) = (9, -4);
        let right = shifted_copy(&left, dx, dy);

        let left_kp = Pixel::new(60.0, 60.0);
        let true_right = Pixel::new(60.0 + dx as f64, 60.0 + dy as f64);
        // Detector estimate off by a few pixels, still inside the search.
        let noisy_right = Pixel::new(true_right.u - 6.0, true_right.v + 5.0);
        let curve = vertical_curve(true_right.u);

        let result = refine_keypoint(
            &left,
            &right,
            left_kp,
            noisy_right,
            &curve,
            &RefinementConfig::default(),
        )
        .unwrap();
        assert!(result.refined);
        assert_eq!(result.score, Some(1.0));
        assert_eq!(result.position, true_right);
    }

    #[test]
    fn refine_respects_epipolar_gate() {
        let left = noise_image(120, 120, 5);
        let right = shifted_copy(&left, 4, 0);
        // Curve 40 px away from anything reachable: no candidate qualifies.
        let curve = vertical_curve(200.0);
        let result = refine_keypoint(
            &left,
            &right,
            Pixel::new(60.0, 60.0),
            Pixel::new(64.0, 60.0),
            &curve,
            &RefinementConfig::default(),
        )
        .unwrap();
        assert!(!result.refined);
        assert_eq!(result.position, Pixel::new(64.0, 60.0));
        assert_eq!(result.score, None);
    }

    #[test]
    fn refine_keeps_original_on_flat_search_region() {
        let left = noise_image(120, 120, 6);
        let right = GrayImage::filled(120, 120, 128);
        let curve = vertical_curve(60.0);
        let result = refine_keypoint(
            &left,
            &right,
            Pixel::new(60.0, 60.0),
            Pixel::new(60.0, 60.0),
            &curve,
            &RefinementConfig::default(),
        )
        .unwrap();
        assert!(!result.refined);
    }

    #[test]
    fn refine_rejects_template_at_border() {
        let left = noise_image(40, 40, 8);
        let right = noise_image(40, 40, 9);
        let err = refine_keypoint(
            &left,
            &right,
            Pixel::new(3.0, 20.0),
            Pixel::new(20.0, 20.0),
            &vertical_curve(20.0),
            &RefinementConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TemplateOutOfBounds { .. }));
    }

    #[test]
    fn refined_point_stays_within_search_and_gate() {
        let left = noise_image(160, 160, 11);
        let right = noise_image(160, 160, 12);
        let cfg = RefinementConfig::default();
        let curve = vertical_curve(82.0);
        for seed in 0..20u64 {
            let rk = Pixel::new(78.0 + (seed % 5) as f64, 70.0 + (seed / 5) as f64);
            let r = refine_keypoint(&left, &right, Pixel::new(80.0, 80.0), rk, &curve, &cfg).unwrap();
            let cheb = (r.position.u - rk.u).abs().max((r.position.v - rk.v).abs());
            assert!(cheb <= cfg.search_half as f64 + 0.5);
            if r.refined {
                assert!(closest_point_on_curve(&curve, r.position).distance <= cfg.epipolar_gate);
            } else {
                assert_eq!(r.position, rk);
            }
        }
    }

    #[test]
    fn public_ncc_matches_windowed_kernel() {
        let left = noise_image(60, 60, 21);
        let right = noise_image(60, 60, 22);
        let half = 10i64;
        let (lc, rc) = ((30i64, 30i64), (25i64, 33i64));

        let a = left.window(lc.0, lc.1, half).unwrap();
        let b = right.window(rc.0, rc.1, half).unwrap();
        let direct = ncc(&a, &b).unwrap();

        let sa = window_sums(&left, lc.0, lc.1, half);
        let sb = window_sums(&right, rc.0, rc.1, half);
        let sab = cross_sum(&left, lc.0, lc.1, &right, rc.0, rc.1, half);
        let kernel = ncc_from_sums(sa, sb, sab).unwrap();
        assert_eq!(direct, kernel);
    }
}
