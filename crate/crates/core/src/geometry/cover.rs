use super::crack::{CrackSet, UnionFind};
use super::domain::{Domain, Point, Side};
use crate::error::{Error, Result};

/// Fraction of the shorter domain side that a doubled boundary rectangle may span.
pub const BOUNDARY_RECT_FRACTION: f64 = 0.5;

/// Shape of one cover member.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoverShape {
    /// Open disk `B_r(center)`.
    Disk { center: Point, radius: f64 },
    /// Open axis-aligned square of half-size `half` centered on the boundary point `center`.
    BoundaryRect { center: Point, half: f64 },
}

impl CoverShape {
    pub fn center(&self) -> Point {
        match *self {
            CoverShape::Disk { center, .. } | CoverShape::BoundaryRect { center, .. } => center,
        }
    }

    /// Radius or half-size.
    pub fn scale(&self) -> f64 {
        match *self {
            CoverShape::Disk { radius, .. } => radius,
            CoverShape::BoundaryRect { half, .. } => half,
        }
    }

    /// Distance to the center in the member's own norm (Euclidean or max-norm).
    pub fn gauge(&self, p: Point) -> f64 {
        match *self {
            CoverShape::Disk { center, .. } => p.dist(center),
            CoverShape::BoundaryRect { center, .. } => p.dist_inf(center),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.gauge(p) < self.scale()
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            CoverShape::Disk { radius, .. } => 2.0 * radius,
            CoverShape::BoundaryRect { half, .. } => 2.0 * std::f64::consts::SQRT_2 * half,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, CoverShape::BoundaryRect { .. })
    }

    fn scaled(&self, k: f64) -> CoverShape {
        match *self {
            CoverShape::Disk { center, radius } => CoverShape::Disk { center, radius: k * radius },
            CoverShape::BoundaryRect { center, half } => {
                CoverShape::BoundaryRect { center, half: k * half }
            }
        }
    }

    fn corners(&self) -> [Point; 4] {
        let (c, s) = (self.center(), self.scale());
        [
            Point::new(c.x - s, c.y - s),
            Point::new(c.x + s, c.y - s),
            Point::new(c.x + s, c.y + s),
            Point::new(c.x - s, c.y + s),
        ]
    }

    fn bbox(&self) -> (Point, Point) {
        let (c, s) = (self.center(), self.scale());
        (Point::new(c.x - s, c.y - s), Point::new(c.x + s, c.y + s))
    }

    /// Whether the open shapes intersect.
    fn overlaps(&self, other: &CoverShape) -> bool {
        use CoverShape::*;
        match (self, other) {
            (Disk { center: a, radius: ra }, Disk { center: b, radius: rb }) => a.dist(*b) < ra + rb,
            (Disk { center, radius }, rect @ BoundaryRect { .. })
            | (rect @ BoundaryRect { .. }, Disk { center, radius }) => {
                let (lo, hi) = rect.bbox();
                let dx = (lo.x - center.x).max(center.x - hi.x).max(0.0);
                let dy = (lo.y - center.y).max(center.y - hi.y).max(0.0);
                dx.hypot(dy) < *radius
            }
            (a, b) => {
                let s = a.scale() + b.scale();
                let d = a.center() - b.center();
                d.x.abs() < s && d.y.abs() < s
            }
        }
    }

    /// Largest distance between a point of `self` and a point of `other`.
    fn far_extent(&self, other: &CoverShape) -> f64 {
        use CoverShape::*;
        match (self, other) {
            (Disk { center: a, radius: ra }, Disk { center: b, radius: rb }) => a.dist(*b) + ra + rb,
            (Disk { center, radius }, rect @ BoundaryRect { .. })
            | (rect @ BoundaryRect { .. }, Disk { center, radius }) => rect
                .corners()
                .iter()
                .map(|q| q.dist(*center) + radius)
                .fold(0.0, f64::max),
            (a, b) => {
                let mut m: f64 = 0.0;
                for p in a.corners() {
                    for q in b.corners() {
                        m = m.max(p.dist(q));
                    }
                }
                m
            }
        }
    }
}

/// One member of a cover together with the part of the crack it is responsible for.
#[derive(Clone, Debug)]
pub struct CoverMember {
    pub shape: CoverShape,
    pub crack: CrackSet,
}

impl CoverMember {
    pub fn doubled(&self) -> CoverShape {
        self.shape.scaled(2.0)
    }
}

/// Finite family of disks and boundary squares covering a small crack.
#[derive(Clone, Debug)]
pub struct Cover {
    pub members: Vec<CoverMember>,
    /// Achieved ratio `max diam(member) / H¹(crack ∩ member)`.
    pub constant_c: f64,
    /// Largest admissible doubled boundary square side, in physical units.
    pub threshold: f64,
    /// Number of merge rounds executed.
    pub rounds: usize,
}

impl Cover {
    pub fn empty(domain: &Domain) -> Self {
        Cover {
            members: Vec::new(),
            constant_c: 0.0,
            threshold: BOUNDARY_RECT_FRACTION * domain.size(),
            rounds: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

struct Group {
    shape: CoverShape,
    crack: CrackSet,
}

/// Iterative cover of a crack by at most `m` members.
///
/// Each component starts in a disk of radius `H¹(component)` centered at its bounding-box
/// center. Members whose doubles overlap are merged into one disk centered at the bounding-box
/// center of their doubled union, with radius equal to the diameter of that union; disks whose
/// doubles reach the boundary become boundary squares. The loop stops when all doubled members
/// are pairwise disjoint.
pub fn cover_crack(crack: &CrackSet, domain: &Domain, m: usize) -> Result<Cover> {
    let threshold = BOUNDARY_RECT_FRACTION * domain.size();
    let comps = crack.connected_components();
    if comps.len() > m {
        return Err(Error::TooManyComponents { found: comps.len(), allowed: m });
    }
    if comps.is_empty() {
        return Ok(Cover::empty(domain));
    }
    let mut groups: Vec<Group> = comps
        .into_iter()
        .map(|c| {
            let (lo, hi) = c.bbox().expect("components are nonempty");
            let center = (lo + hi) * 0.5;
            Group { shape: CoverShape::Disk { center, radius: c.h1_measure() }, crack: c }
        })
        .collect();

    let max_rounds = 4 * m + 4;
    let mut rounds = 0;
    loop {
        for g in groups.iter_mut() {
            g.shape = to_boundary_rect(g.shape, domain, threshold)?;
        }
        let n = groups.len();
        let mut uf = UnionFind::new(n);
        let mut any = false;
        for a in 0..n {
            for b in (a + 1)..n {
                if groups[a].shape.scaled(2.0).overlaps(&groups[b].shape.scaled(2.0)) {
                    uf.union(a, b);
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::BudgetTooLarge {
                threshold,
                reason: "merging did not terminate".into(),
            });
        }
        let mut merged: Vec<(usize, Vec<usize>)> = Vec::new();
        for a in 0..n {
            let r = uf.find(a);
            match merged.iter_mut().find(|(root, _)| *root == r) {
                Some((_, v)) => v.push(a),
                None => merged.push((r, vec![a])),
            }
        }
        let old = std::mem::take(&mut groups);
        let mut old: Vec<Option<Group>> = old.into_iter().map(Some).collect();
        for (_, idx) in merged {
            if idx.len() == 1 {
                groups.push(old[idx[0]].take().expect("each index used once"));
                continue;
            }
            let doubled: Vec<CoverShape> = idx
                .iter()
                .map(|&i| old[i].as_ref().expect("each index used once").shape.scaled(2.0))
                .collect();
            let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
            let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            for s in &doubled {
                let (a, b) = s.bbox();
                lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
                hi = Point::new(hi.x.max(b.x), hi.y.max(b.y));
            }
            let mut diam: f64 = 0.0;
            for (k, a) in doubled.iter().enumerate() {
                for b in &doubled[k..] {
                    diam = diam.max(a.far_extent(b));
                }
            }
            let mut crack_union = old[idx[0]].take().expect("each index used once").crack;
            for &i in &idx[1..] {
                crack_union = crack_union.union(&old[i].take().expect("each index used once").crack);
            }
            groups.push(Group {
                shape: CoverShape::Disk { center: (lo + hi) * 0.5, radius: diam },
                crack: crack_union,
            });
        }
    }

    let mut constant_c: f64 = 0.0;
    for g in &groups {
        constant_c = constant_c.max(g.shape.diameter() / g.crack.h1_measure());
    }
    Ok(Cover {
        members: groups
            .into_iter()
            .map(|g| CoverMember { shape: g.shape, crack: g.crack })
            .collect(),
        constant_c,
        threshold,
        rounds,
    })
}

fn to_boundary_rect(shape: CoverShape, domain: &Domain, threshold: f64) -> Result<CoverShape> {
    let rect = domain.rect();
    let (center, r) = match shape {
        CoverShape::Disk { center, radius } => (center, radius),
        CoverShape::BoundaryRect { .. } => return Ok(shape),
    };
    let near: Vec<Side> = Side::ALL
        .into_iter()
        .filter(|&s| rect.side_distance(s, center) < 2.0 * r)
        .collect();
    let too_large = |s: f64| Error::BudgetTooLarge {
        threshold,
        reason: format!("boundary square of half-size {s} needed"),
    };
    let out = match near.as_slice() {
        [] => return Ok(shape),
        [side] => {
            let d = rect.side_distance(*side, center).max(0.0);
            let y = match side {
                Side::Bottom => Point::new(center.x, rect.y0),
                Side::Top => Point::new(center.x, rect.y1),
                Side::Left => Point::new(rect.x0, center.y),
                Side::Right => Point::new(rect.x1, center.y),
            };
            CoverShape::BoundaryRect { center: y, half: r + d }
        }
        [a, b] if a.is_horizontal() != b.is_horizontal() => {
            let (h, v) = if a.is_horizontal() { (*a, *b) } else { (*b, *a) };
            let cy = if h == Side::Bottom { rect.y0 } else { rect.y1 };
            let cx = if v == Side::Left { rect.x0 } else { rect.x1 };
            let y = Point::new(cx, cy);
            let d = rect.side_distance(h, center).max(rect.side_distance(v, center)).max(0.0);
            CoverShape::BoundaryRect { center: y, half: r + d }
        }
        _ => return Err(too_large(r)),
    };
    if 2.0 * 2.0 * out.scale() > threshold {
        return Err(too_large(out.scale()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Grid, Rect};

    fn setup(n: usize) -> (Domain, Grid) {
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let g = Grid::for_domain(&d, n, n).unwrap();
        (d, g)
    }

    #[test]
    fn single_interior_segment_gets_one_disk() {
        let (d, g) = setup(64);
        let c = CrackSet::from_segment(&g, Point::new(0.5, 0.5), Point::new(0.5625, 0.5)).unwrap();
        let cov = cover_crack(&c, &d, 1).unwrap();
        assert_eq!(cov.len(), 1);
        match cov.members[0].shape {
            CoverShape::Disk { center, radius } => {
                assert!((radius - 0.0625).abs() < 1e-12);
                assert!(center.dist(Point::new(0.53125, 0.5)) < 1e-12);
            }
            s => panic!("expected a disk, got {s:?}"),
        }
        assert!((cov.constant_c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn distant_components_stay_separate() {
        let (d, g) = setup(128);
        let mut c =
            CrackSet::from_segment(&g, Point::new(0.25, 0.5), Point::new(0.265625, 0.5)).unwrap();
        c.add_segment(Point::new(0.75, 0.5), Point::new(0.765625, 0.5)).unwrap();
        let cov = cover_crack(&c, &d, 2).unwrap();
        assert_eq!(cov.len(), 2);
        assert_eq!(cov.rounds, 0);
    }

    #[test]
    fn overlapping_doubles_merge_by_hand() {
        // Two vertical slits of length 0.025 at x = 0.475 and x = 0.525 (centers 0.05 apart).
        let (d, g) = setup(80);
        let mut c =
            CrackSet::from_segment(&g, Point::new(0.475, 0.4875), Point::new(0.475, 0.5125)).unwrap();
        c.add_segment(Point::new(0.525, 0.4875), Point::new(0.525, 0.5125)).unwrap();
        let cov = cover_crack(&c, &d, 2).unwrap();
        assert_eq!(cov.len(), 1);
        // Doubled disks: radius 0.05 around (0.475, 0.5) and (0.525, 0.5). Union bbox center
        // (0.5, 0.5), union diameter 0.05 + 0.05 + 0.05 = 0.15.
        match cov.members[0].shape {
            CoverShape::Disk { center, radius } => {
                assert!(center.dist(Point::new(0.5, 0.5)) < 1e-9);
                assert!((radius - 0.15).abs() < 1e-9);
            }
            s => panic!("expected a disk, got {s:?}"),
        }
        assert!((cov.constant_c - 0.3 / 0.05).abs() < 1e-9);
    }

    #[test]
    fn near_boundary_becomes_square_and_large_crack_fails() {
        let (d, g) = setup(64);
        let c = CrackSet::from_segment(&g, Point::new(0.5, 0.0), Point::new(0.5, 0.03125)).unwrap();
        let cov = cover_crack(&c, &d, 1).unwrap();
        assert!(cov.members[0].shape.is_boundary());
        assert_eq!(cov.members[0].shape.center(), Point::new(0.5, 0.0));
        let big = CrackSet::from_segment(&g, Point::new(0.25, 0.5), Point::new(0.75, 0.5)).unwrap();
        assert!(matches!(cover_crack(&big, &d, 1), Err(Error::BudgetTooLarge { .. })));
        let mut two = c.clone();
        two.add_segment(Point::new(0.25, 0.25), Point::new(0.25, 0.3125)).unwrap();
        assert!(matches!(
            cover_crack(&two, &d, 1),
            Err(Error::TooManyComponents { found: 2, allowed: 1 })
        ));
    }
}
