//! Axis limits and tick placement.
//!
//! The renderer draws axes from these values, and the scorers use the same
//! functions to locate "the middle of the x-axis" and "the center of the
//! plot", so both agree without the scorer ever touching pixels.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisScale {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub ticks: Vec<f64>,
}

impl AxisScale {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Number of decimals needed to print tick labels at this step.
    pub fn label_decimals(&self) -> usize {
        decimals_for_step(self.step)
    }

    pub fn format_tick(&self, v: f64) -> String {
        let d = self.label_decimals();
        let s = format!("{:.*}", d, v);
        // avoid "-0"
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    }
}

const TARGET_TICKS: f64 = 6.0;
const PAD_FRACTION: f64 = 0.03;

fn nice_step(raw: f64) -> f64 {
    let exp = raw.log10().floor();
    let base = 10f64.powf(exp);
    let f = raw / base;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 2.5 {
        2.5
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * base
}

fn decimals_for_step(step: f64) -> usize {
    let mut d = 0usize;
    while d < 10 {
        let scaled = step * 10f64.powi(d as i32);
        if (scaled - scaled.round()).abs() < 1e-6 * scaled.abs().max(1.0) {
            return d;
        }
        d += 1;
    }
    d
}

fn snap(v: f64, step: f64) -> f64 {
    let d = decimals_for_step(step) as i32 + 1;
    let f = 10f64.powi(d);
    (v * f).round() / f
}

/// Axis covering `[min, max]` with a small margin, with limits snapped to
/// "nice" tick multiples so the first and last ticks bracket the data.
pub fn nice_axis(min: f64, max: f64) -> AxisScale {
    let (mut lo, mut hi) = if min <= max { (min, max) } else { (max, min) };
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = (lo.abs() * 0.1).max(1.0);
        lo -= pad;
        hi += pad;
    }
    let pad = (hi - lo) * PAD_FRACTION;
    let (plo, phi) = (lo - pad, hi + pad);
    let step = nice_step((phi - plo) / (TARGET_TICKS - 1.0));
    let a = snap((plo / step).floor() * step, step);
    let b = snap((phi / step).ceil() * step, step);
    let n = ((b - a) / step).round() as usize;
    let ticks = (0..=n).map(|i| snap(a + i as f64 * step, step)).collect();
    AxisScale {
        lo: a,
        hi: b,
        step,
        ticks,
    }
}

/// Axis starting exactly at zero, for counts.
pub fn nice_axis_from_zero(max: f64) -> AxisScale {
    let mut a = nice_axis(0.0, max.max(0.0));
    a.ticks.retain(|&t| t >= 0.0);
    a.lo = 0.0;
    if a.ticks.first() != Some(&0.0) {
        a.ticks.insert(0, 0.0);
    }
    a
}

/// Category axis for positions `1..=count`, with half a slot of space on
/// either side.
pub fn category_axis(count: usize) -> AxisScale {
    AxisScale {
        lo: 0.5,
        hi: count as f64 + 0.5,
        step: 1.0,
        ticks: (1..=count).map(|i| i as f64).collect(),
    }
}

/// The plotted box for a set of axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub x: AxisScale,
    pub y: AxisScale,
}

impl Axes {
    pub fn center(&self) -> Point2D {
        Point2D::new(self.x.midpoint(), self.y.midpoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_bracket_data() {
        for (lo, hi) in [(0.0, 1.0), (-3.7, 12.2), (1000.0, 1003.0), (0.001, 0.0042), (-5e5, 7e5), (5.0, 5.0)] {
            let a = nice_axis(lo, hi);
            assert!(a.ticks[0] <= lo && *a.ticks.last().unwrap() >= hi, "{lo} {hi} {a:?}");
            assert_eq!(a.ticks[0], a.lo);
            assert_eq!(*a.ticks.last().unwrap(), a.hi);
            assert!(a.ticks.len() >= 3 && a.ticks.len() <= 14, "{a:?}");
        }
    }

    #[test]
    fn labels_use_step_precision() {
        let a = nice_axis(0.0, 1.0);
        assert_eq!(a.step, 0.25);
        assert_eq!(a.format_tick(0.5), "0.50");
        assert_eq!(a.format_tick(-0.0), "0.00");
        let b = nice_axis(0.0, 1000.0);
        assert_eq!(b.format_tick(200.0), "200");
    }

    #[test]
    fn zero_based_counts() {
        let a = nice_axis_from_zero(37.0);
        assert_eq!(a.lo, 0.0);
        assert_eq!(a.ticks[0], 0.0);
        assert!(a.hi >= 37.0);
    }

    #[test]
    fn category_positions() {
        let c = category_axis(5);
        assert_eq!(c.ticks, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(c.midpoint(), 3.0);
    }
}
