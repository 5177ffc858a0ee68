//! Deterministic rasterisation of sample metadata into chart images.

pub mod canvas;
mod charts;
pub mod font;

use std::io::Cursor;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::axis::{category_axis, nice_axis, nice_axis_from_zero, Axes};
use crate::sample::{PlotStyle, SampleMetadata};

pub use canvas::Canvas;

pub const DEFAULT_WIDTH: u32 = 1000;
pub const DEFAULT_HEIGHT: u32 = 600;
pub const MIN_SIDE: u32 = 256;
/// Gridline colour. Nothing else in a chart is painted with it, so its
/// presence in the plot area means gridlines were drawn.
pub const GRID_COLOR: [u8; 3] = [205, 205, 215];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("style does not fit a {0} plot")]
    StyleMismatch(String),
    #[error("canvas must be at least {MIN_SIDE}x{MIN_SIDE}, got {0}x{1}")]
    TooSmall(u32, u32),
    #[error("invalid metadata: {0}")]
    InvalidMetadata(String),
    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width_px: u32,
    pub height_px: u32,
    /// Multiplier for margins, strokes and text.
    pub scale: f64,
    pub style: PlotStyle,
}

impl RenderConfig {
    pub fn new(style: PlotStyle) -> Self {
        RenderConfig {
            width_px: DEFAULT_WIDTH,
            height_px: DEFAULT_HEIGHT,
            scale: 1.0,
            style,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub left: i64,
    pub top: i64,
    pub right: i64,
    pub bottom: i64,
}

impl PixelBox {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.left && x <= self.right && y >= self.top && y <= self.bottom
    }
}

/// Where things ended up on the canvas. Written next to each image for
/// tests and debugging; scoring never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub width: u32,
    pub height: u32,
    pub plot_area: PixelBox,
    pub axes: Axes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legend: Option<PixelBox>,
}

impl Layout {
    pub fn px_x(&self, x: f64) -> f64 {
        let a = &self.axes.x;
        self.plot_area.left as f64 + (x - a.lo) / a.span() * (self.plot_area.right - self.plot_area.left) as f64
    }

    pub fn px_y(&self, y: f64) -> f64 {
        let a = &self.axes.y;
        self.plot_area.bottom as f64 - (y - a.lo) / a.span() * (self.plot_area.bottom - self.plot_area.top) as f64
    }
}

pub struct Rendered {
    pub image: RgbImage,
    pub layout: Layout,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Axis limits of the chart drawn for `meta`. A pure function of the
/// metadata, so scorers can find the plot center without any image.
pub fn axes_for(meta: &SampleMetadata) -> Axes {
    match meta {
        SampleMetadata::Series(s) => {
            let (x0, x1) = min_max(s.x_values.iter().copied());
            let (y0, y1) = min_max(s.y_values.iter().copied());
            Axes {
                x: nice_axis(x0, x1),
                y: nice_axis(y0, y1),
            }
        }
        SampleMetadata::Clusters(c) => {
            let (x0, x1) = min_max(c.points.iter().map(|p| p.x));
            let (y0, y1) = min_max(c.points.iter().map(|p| p.y));
            Axes {
                x: nice_axis(x0, x1),
                y: nice_axis(y0, y1),
            }
        }
        SampleMetadata::Histogram(h) => {
            let ext = h.x_extent();
            let max = h.bin_counts.iter().copied().max().unwrap_or(0) as f64;
            Axes {
                x: nice_axis(ext.lo(), ext.hi()),
                y: nice_axis_from_zero(max.max(1.0)),
            }
        }
        SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m) => {
            let (y0, y1) = min_max(m.series.iter().flat_map(|s| s.values.iter().copied()));
            Axes {
                x: category_axis(m.series.len()),
                y: nice_axis(y0, y1),
            }
        }
    }
}

pub fn render(meta: &SampleMetadata, cfg: &RenderConfig) -> Result<Rendered, RenderError> {
    let family = meta.family();
    if !cfg.style.fits(family) {
        return Err(RenderError::StyleMismatch(family.to_string()));
    }
    if cfg.width_px < MIN_SIDE || cfg.height_px < MIN_SIDE {
        return Err(RenderError::TooSmall(cfg.width_px, cfg.height_px));
    }
    let invalid = |e: crate::generators::GenError| RenderError::InvalidMetadata(e.to_string());
    match meta {
        SampleMetadata::Series(s) => s.validate().map_err(invalid)?,
        SampleMetadata::Clusters(c) => c.validate().map_err(invalid)?,
        SampleMetadata::Histogram(h) => h.validate().map_err(invalid)?,
        SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m) => m.validate().map_err(invalid)?,
    }
    let s = cfg.scale.max(0.25);
    let m = |v: f64| (v * s).round() as i64;
    let layout = Layout {
        width: cfg.width_px,
        height: cfg.height_px,
        plot_area: PixelBox {
            left: m(100.0),
            top: m(30.0),
            right: cfg.width_px as i64 - m(30.0),
            bottom: cfg.height_px as i64 - m(60.0),
        },
        axes: axes_for(meta),
        legend: None,
    };
    let mut canvas = Canvas::new(cfg.width_px, cfg.height_px, canvas::WHITE);
    let layout = charts::draw(&mut canvas, meta, &cfg.style, layout, s);
    Ok(Rendered {
        image: canvas.img,
        layout,
    })
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, RenderError> {
    Ok(image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8())
}
