//! Closed intervals, axis-aligned boxes and the overlap measures built on them.
//!
//! Everything here lives in data coordinates. Intervals are closed and measured
//! by length; a zero-length interval is a single point and only compares equal
//! to the same point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("interval bounds must be finite, got [{0}, {1}]")]
    NonFinite(f64, f64),
    #[error("interval lower bound {0} exceeds upper bound {1}")]
    Reversed(f64, f64),
}

/// A closed range `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::NonFinite(lo, hi));
        }
        if lo > hi {
            return Err(GeometryError::Reversed(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    /// Builds an interval from two bounds in either order. The flag is `true`
    /// when the bounds had to be swapped.
    pub fn normalized(a: f64, b: f64) -> Result<(Self, bool), GeometryError> {
        if a <= b {
            Self::new(a, b).map(|i| (i, false))
        } else {
            Self::new(b, a).map(|i| (i, true))
        }
    }

    pub fn point(x: f64) -> Result<Self, GeometryError> {
        Self::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn intersection_length(&self, other: &Interval) -> f64 {
        self.intersection(other).map_or(0.0, |i| i.length())
    }

    /// Grows the interval by `r` on both sides.
    pub fn extended(&self, r: f64) -> Interval {
        Interval {
            lo: self.lo - r,
            hi: self.hi + r,
        }
    }

    /// Clamps both bounds into `domain`; an interval entirely outside it
    /// collapses onto the nearest domain endpoint.
    pub fn clamp_to(&self, domain: &Interval) -> Interval {
        let lo = self.lo.clamp(domain.lo, domain.hi);
        let hi = self.hi.clamp(domain.lo, domain.hi);
        Interval { lo, hi }
    }

    /// Image of the interval under `x -> scale * x + shift` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Interval {
        Interval {
            lo: scale * self.lo + shift,
            hi: scale * self.hi + shift,
        }
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: Interval,
    pub y: Interval,
}

impl BoundingBox {
    pub fn new(x: Interval, y: Interval) -> Self {
        Self { x, y }
    }

    /// Smallest box containing every point; `None` for an empty slice or
    /// non-finite coordinates.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Point2D>) -> Option<BoundingBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut x0, mut x1, mut y0, mut y1) = (first.x, first.x, first.y, first.y);
        for p in it {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        Some(BoundingBox {
            x: Interval::new(x0, x1).ok()?,
            y: Interval::new(y0, y1).ok()?,
        })
    }

    pub fn area(&self) -> f64 {
        self.x.length() * self.y.length()
    }

    pub fn contains(&self, p: &Point2D) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y)
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(self.x.midpoint(), self.y.midpoint())
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        self.x.intersection_length(&other.x) * self.y.intersection_length(&other.y)
    }
}

/// Jaccard similarity of two closed intervals measured by length.
///
/// Zero-measure unions fall back to point equality: `1` when the operands are
/// identical, `0` otherwise.
pub fn jaccard(a: &Interval, b: &Interval) -> f64 {
    let inter = a.intersection_length(b);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Intersection over union of two boxes by area.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Sorted, pairwise-disjoint cover of the union of `intervals`. Touching or
/// overlapping pieces are merged.
pub fn merge_intervals(intervals: &[Interval]) -> Vec<Interval> {
    let mut sorted: Vec<Interval> = intervals.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Total length of the union of `intervals`.
pub fn union_length(intervals: &[Interval]) -> f64 {
    merge_intervals(intervals).iter().map(Interval::length).sum()
}

/// Jaccard similarity between two finite unions of intervals, treating each
/// side as a measurable subset of the line.
pub fn jaccard_sets(a: &[Interval], b: &[Interval]) -> f64 {
    let ma = merge_intervals(a);
    let mb = merge_intervals(b);
    if ma.is_empty() || mb.is_empty() {
        return 0.0;
    }
    let mut inter = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < ma.len() && j < mb.len() {
        inter += ma[i].intersection_length(&mb[j]);
        if ma[i].hi < mb[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    let union = ma.iter().map(Interval::length).sum::<f64>()
        + mb.iter().map(Interval::length).sum::<f64>()
        - inter;
    if union <= 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}
