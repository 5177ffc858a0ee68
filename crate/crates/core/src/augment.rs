//! Image degradations: additive noise, rotation and an occluding overlay.

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::canvas::{star, Canvas};
use crate::seed::Seed;

pub const MAX_ANGLE_DEG: f64 = 60.0;
pub const NOISE_MEAN: f64 = 128.0;
pub const NOISE_STD: f64 = 64.0;
/// Overlay side as a fraction of `sqrt(width * height)`.
pub const OVERLAY_FRACTION: (f64, f64) = (0.10, 0.25);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("noise coefficient must be in [0, 1], got {0}")]
    Alpha(f64),
    #[error("rotation angle must lie strictly between -60 and 60 degrees, got {0}")]
    Angle(f64),
    #[error("image must be at least 256 px on each side, got {0}x{1}")]
    TooSmall(u32, u32),
    #[error("augment record is missing its {0} field")]
    Incomplete(&'static str),
    #[error("overlay box does not fit inside the image")]
    OverlayOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Noise,
    Rotate,
    Overlay,
}

impl AugmentKind {
    pub const ALL: [AugmentKind; 3] = [AugmentKind::Noise, AugmentKind::Rotate, AugmentKind::Overlay];

    pub fn display_name(&self) -> &'static str {
        match self {
            AugmentKind::Noise => "Add Visual Noise",
            AugmentKind::Rotate => "Rotate Image",
            AugmentKind::Overlay => "Random Add Image",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayShape {
    Circle,
    Star,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlaySpec {
    /// Top-left corner of the overlay box, pixels.
    pub position_px: [u32; 2],
    pub size_px: u32,
    pub shape_id: OverlayShape,
    pub color: [u8; 3],
}

/// Everything needed to repeat a degradation on the pristine render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub kind: AugmentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<OverlaySpec>,
}

impl AugmentRecord {
    pub fn apply(&self, img: &RgbImage) -> Result<RgbImage, AugmentError> {
        match self.kind {
            AugmentKind::Noise => add_noise(
                img,
                self.alpha.ok_or(AugmentError::Incomplete("alpha"))?,
                self.noise_seed.ok_or(AugmentError::Incomplete("noise_seed"))?,
            ),
            AugmentKind::Rotate => rotate(img, self.angle_deg.ok_or(AugmentError::Incomplete("angle_deg"))?),
            AugmentKind::Overlay => paste_overlay(img, &self.overlay.ok_or(AugmentError::Incomplete("overlay"))?),
        }
    }

    /// True when exactly the fields of `kind` are set.
    pub fn is_well_formed(&self) -> bool {
        let f = (self.alpha.is_some(), self.noise_seed.is_some(), self.angle_deg.is_some(), self.overlay.is_some());
        match self.kind {
            AugmentKind::Noise => f == (true, true, false, false),
            AugmentKind::Rotate => f == (false, false, true, false),
            AugmentKind::Overlay => f == (false, false, false, true),
        }
    }
}

/// Blends every channel with i.i.d. `N(128, 64)` noise clamped to `[0, 255]`:
/// `(1 - alpha) * pixel + alpha * noise`.
pub fn add_noise(img: &RgbImage, alpha: f64, seed: Seed) -> Result<RgbImage, AugmentError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(AugmentError::Alpha(alpha));
    }
    let mut rng = seed.rng();
    let noise = Normal::new(NOISE_MEAN, NOISE_STD).expect("constant parameters");
    let mut out = img.clone();
    for p in out.pixels_mut() {
        for ch in p.0.iter_mut() {
            let n = noise.sample(&mut rng).clamp(0.0, 255.0);
            *ch = ((1.0 - alpha) * *ch as f64 + alpha * n).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

/// Size of the canvas that holds a `w x h` image rotated by `angle_deg`.
pub fn rotated_size(w: u32, h: u32, angle_deg: f64) -> (u32, u32) {
    let t = angle_deg.to_radians();
    let (c, s) = (t.cos().abs(), t.sin().abs());
    let fit = |v: f64| (v - 1e-9).ceil().max(1.0) as u32;
    (fit(w as f64 * c + h as f64 * s), fit(w as f64 * s + h as f64 * c))
}

/// Counter-clockwise bilinear rotation about the image center. The canvas
/// grows to hold every rotated pixel; uncovered area is white.
pub fn rotate(img: &RgbImage, angle_deg: f64) -> Result<RgbImage, AugmentError> {
    if !(angle_deg > -MAX_ANGLE_DEG && angle_deg < MAX_ANGLE_DEG) {
        return Err(AugmentError::Angle(angle_deg));
    }
    let (w, h) = img.dimensions();
    let (nw, nh) = rotated_size(w, h, angle_deg);
    let t = angle_deg.to_radians();
    let (c, s) = (t.cos(), t.sin());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let (ncx, ncy) = (nw as f64 / 2.0, nh as f64 / 2.0);
    let fetch = |x: i64, y: i64| -> [f64; 3] {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            [255.0; 3]
        } else {
            let p = img.get_pixel(x as u32, y as u32).0;
            [p[0] as f64, p[1] as f64, p[2] as f64]
        }
    };
    let mut out = RgbImage::new(nw, nh);
    for (ox, oy, px) in out.enumerate_pixels_mut() {
        let u = ox as f64 + 0.5 - ncx;
        let v = oy as f64 + 0.5 - ncy;
        // inverse mapping back into the source, in pixel-index space
        let sx = c * u - s * v + cx - 0.5;
        let sy = s * u + c * v + cy - 0.5;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let p00 = fetch(x0, y0);
        let p10 = fetch(x0 + 1, y0);
        let p01 = fetch(x0, y0 + 1);
        let p11 = fetch(x0 + 1, y0 + 1);
        let mut rgb = [0u8; 3];
        for k in 0..3 {
            let top = p00[k] * (1.0 - fx) + p10[k] * fx;
            let bottom = p01[k] * (1.0 - fx) + p11[k] * fx;
            rgb[k] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
        }
        *px = Rgb(rgb);
    }
    Ok(out)
}

/// Draws a random opaque shape at a random position.
pub fn overlay(img: &RgbImage, seed: Seed) -> Result<(RgbImage, OverlaySpec), AugmentError> {
    let (w, h) = img.dimensions();
    if w < 256 || h < 256 {
        return Err(AugmentError::TooSmall(w, h));
    }
    let mut rng = seed.rng();
    let side = ((w as f64 * h as f64).sqrt() * rng.random_range(OVERLAY_FRACTION.0..=OVERLAY_FRACTION.1)).round() as u32;
    let side = side.min(w).min(h);
    let shape_id = match rng.random_range(0..3) {
        0 => OverlayShape::Circle,
        1 => OverlayShape::Star,
        _ => OverlayShape::Triangle,
    };
    // keep well away from white so the shape is always visible
    let color = [
        rng.random_range(0..200u8),
        rng.random_range(0..200u8),
        rng.random_range(0..200u8),
    ];
    let spec = OverlaySpec {
        position_px: [rng.random_range(0..=w - side), rng.random_range(0..=h - side)],
        size_px: side,
        shape_id,
        color,
    };
    Ok((paste_overlay(img, &spec)?, spec))
}

pub fn paste_overlay(img: &RgbImage, spec: &OverlaySpec) -> Result<RgbImage, AugmentError> {
    let (w, h) = img.dimensions();
    let [x, y] = spec.position_px;
    if x.checked_add(spec.size_px).is_none_or(|r| r > w) || y.checked_add(spec.size_px).is_none_or(|b| b > h) {
        return Err(AugmentError::OverlayOutside);
    }
    let mut c = Canvas::from_image(img.clone());
    let s = spec.size_px as f64;
    let (x0, y0) = (x as f64, y as f64);
    match spec.shape_id {
        OverlayShape::Circle => c.fill_circle(x0 + s / 2.0, y0 + s / 2.0, s / 2.0, spec.color),
        OverlayShape::Star => c.fill_polygon(&star(x0 + s / 2.0, y0 + s / 2.0, s / 2.0, s / 5.0, 5), spec.color, 1.0),
        OverlayShape::Triangle => c.fill_polygon(&[(x0 + s / 2.0, y0), (x0 + s, y0 + s), (x0, y0 + s)], spec.color, 1.0),
    }
    Ok(c.img)
}

/// Noise coefficient range used when a degradation is drawn at random.
pub const ALPHA_RANGE: (f64, f64) = (0.2, 0.6);

/// Applies one degradation of a kind drawn uniformly from `kinds`.
pub fn random_augment(img: &RgbImage, seed: Seed, kinds: &[AugmentKind]) -> Result<(RgbImage, AugmentRecord), AugmentError> {
    let kinds = if kinds.is_empty() { &AugmentKind::ALL[..] } else { kinds };
    let mut rng = seed.child("augment.params").rng();
    let kind = kinds[rng.random_range(0..kinds.len())];
    let record = match kind {
        AugmentKind::Noise => AugmentRecord {
            kind,
            alpha: Some(rng.random_range(ALPHA_RANGE.0..=ALPHA_RANGE.1)),
            noise_seed: Some(seed.child("augment.noise")),
            angle_deg: None,
            overlay: None,
        },
        AugmentKind::Rotate => {
            let mut angle = rng.random_range(-MAX_ANGLE_DEG..MAX_ANGLE_DEG);
            while angle <= -MAX_ANGLE_DEG {
                angle = rng.random_range(-MAX_ANGLE_DEG..MAX_ANGLE_DEG);
            }
            AugmentRecord {
                kind,
                alpha: None,
                noise_seed: None,
                angle_deg: Some(angle),
                overlay: None,
            }
        }
        AugmentKind::Overlay => {
            let (out, spec) = overlay(img, seed.child("augment.overlay"))?;
            let record = AugmentRecord {
                kind,
                alpha: None,
                noise_seed: None,
                angle_deg: None,
                overlay: Some(spec),
            };
            return Ok((out, record));
        }
    };
    Ok((record.apply(img)?, record))
}
