use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist_inf(self, other: Point) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn unit_square() -> Self {
        Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, p: Point) -> bool {
        let eps = 1e-12 * (self.width() + self.height());
        p.x >= self.x0 - eps && p.x <= self.x1 + eps && p.y >= self.y0 - eps && p.y <= self.y1 + eps
    }

    /// Distance from an interior point to the boundary (0 outside).
    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        (p.x - self.x0)
            .min(self.x1 - p.x)
            .min(p.y - self.y0)
            .min(self.y1 - p.y)
            .max(0.0)
    }

    pub fn side_distance(&self, side: Side, p: Point) -> f64 {
        match side {
            Side::Bottom => p.y - self.y0,
            Side::Right => self.x1 - p.x,
            Side::Top => self.y1 - p.y,
            Side::Left => p.x - self.x0,
        }
    }

    /// Coordinate range `(start, end)` of a side along its tangent axis.
    pub fn side_range(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Bottom | Side::Top => (self.x0, self.x1),
            Side::Left | Side::Right => (self.y0, self.y1),
        }
    }

    pub fn side_length(&self, side: Side) -> f64 {
        let (a, b) = self.side_range(side);
        b - a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Unit normal pointing into the domain.
    pub fn inward_normal(self) -> Point {
        match self {
            Side::Bottom => Point::new(0.0, 1.0),
            Side::Right => Point::new(-1.0, 0.0),
            Side::Top => Point::new(0.0, -1.0),
            Side::Left => Point::new(1.0, 0.0),
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s.to_ascii_lowercase().as_str() {
            "bottom" => Some(Side::Bottom),
            "right" => Some(Side::Right),
            "top" => Some(Side::Top),
            "left" => Some(Side::Left),
            _ => None,
        }
    }
}

/// Portion `(start, end)` of one side of the bounding rectangle, measured along the side's tangent axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub side: Side,
    pub start: f64,
    pub end: f64,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Relatively open membership test.
    pub fn contains(&self, side: Side, s: f64) -> bool {
        self.side == side && s > self.start && s < self.end
    }
}

/// Rectangular Lipschitz domain with its boundary split into a Dirichlet part and its (Neumann) complement.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    rect: Rect,
    dirichlet: Vec<BoundarySegment>,
}

impl Domain {
    pub fn new(rect: Rect, dirichlet: Vec<BoundarySegment>) -> Result<Self> {
        let mut merged: Vec<BoundarySegment> = Vec::new();
        for side in Side::ALL {
            let (lo, hi) = rect.side_range(side);
            let mut segs: Vec<BoundarySegment> = dirichlet
                .iter()
                .filter(|s| s.side == side)
                .copied()
                .collect();
            for s in &segs {
                if !(s.end > s.start) {
                    return Err(Error::invalid(format!("empty Dirichlet segment {s:?}")));
                }
                let tol = 1e-12 * (hi - lo);
                if s.start < lo - tol || s.end > hi + tol {
                    return Err(Error::invalid(format!(
                        "Dirichlet segment {s:?} leaves side {side:?}"
                    )));
                }
            }
            segs.sort_by(|a, b| a.start.total_cmp(&b.start));
            for s in segs {
                let s = BoundarySegment {
                    side,
                    start: s.start.max(lo),
                    end: s.end.min(hi),
                };
                match merged.last_mut() {
                    Some(last) if last.side == side && s.start <= last.end => {
                        last.end = last.end.max(s.end)
                    }
                    _ => merged.push(s),
                }
            }
        }
        Ok(Domain { rect, dirichlet: merged })
    }

    /// Domain whose Dirichlet part is the union of whole sides.
    pub fn with_dirichlet_sides(rect: Rect, sides: &[Side]) -> Self {
        let segs = sides
            .iter()
            .map(|&side| {
                let (start, end) = rect.side_range(side);
                BoundarySegment { side, start, end }
            })
            .collect();
        Domain::new(rect, segs).expect("whole sides are valid segments")
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn dirichlet_part(&self) -> &[BoundarySegment] {
        &self.dirichlet
    }

    /// Complement of the Dirichlet part, side by side.
    pub fn neumann_part(&self) -> Vec<BoundarySegment> {
        let mut out = Vec::new();
        for side in Side::ALL {
            let (lo, hi) = self.rect.side_range(side);
            let mut cursor = lo;
            for d in self.dirichlet.iter().filter(|d| d.side == side) {
                if d.start > cursor {
                    out.push(BoundarySegment { side, start: cursor, end: d.start });
                }
                cursor = cursor.max(d.end);
            }
            if cursor < hi {
                out.push(BoundarySegment { side, start: cursor, end: hi });
            }
        }
        out
    }

    pub fn is_dirichlet_at(&self, side: Side, s: f64) -> bool {
        self.dirichlet.iter().any(|d| d.contains(side, s))
    }

    pub fn dirichlet_length(&self) -> f64 {
        self.dirichlet.iter().map(BoundarySegment::length).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rect.contains(p)
    }

    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        self.rect.dist_to_boundary(p)
    }

    /// Characteristic size (shorter side length).
    pub fn size(&self) -> f64 {
        self.rect.width().min(self.rect.height())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_complements_dirichlet() {
        let rect = Rect::unit_square();
        let d = Domain::new(
            rect,
            vec![
                BoundarySegment { side: Side::Bottom, start: 0.2, end: 0.5 },
                BoundarySegment { side: Side::Bottom, start: 0.4, end: 0.7 },
                BoundarySegment { side: Side::Left, start: 0.0, end: 1.0 },
            ],
        )
        .unwrap();
        assert_eq!(d.dirichlet_part().len(), 2);
        let total: f64 = d.neumann_part().iter().map(|s| s.length()).sum::<f64>() + d.dirichlet_length();
        assert!((total - 4.0).abs() < 1e-12);
        assert!(d.is_dirichlet_at(Side::Bottom, 0.6));
        assert!(!d.is_dirichlet_at(Side::Bottom, 0.1));
        // relatively open
        assert!(!d.is_dirichlet_at(Side::Bottom, 0.2));
    }

    #[test]
    fn rejects_segment_off_side() {
        let r = Domain::new(
            Rect::unit_square(),
            vec![BoundarySegment { side: Side::Top, start: 0.5, end: 1.5 }],
        );
        assert!(r.is_err());
    }
}
