use crate::error::{DwdtError, Result};
use crate::geom::{bounding_box, Vec2};

/// Closed polygonal domain: one outer loop (counter-clockwise) and any number
/// of hole loops (clockwise). Loops are stored without repeating the first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    loops: Vec<Vec<Vec2>>,
}

/// Nearest boundary point to a query together with the inward normal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vec2,
    /// Unit normal pointing into the domain. At a polygon corner this is the
    /// direction from the corner to the query (flipped when the query is outside).
    pub normal: Vec2,
    /// `(query - point) . normal`: positive inside, negative outside.
    pub signed_distance: f64,
    /// Index into [`Polygon::segments`].
    pub segment: usize,
}

fn loop_signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - a.y * b.x
        })
        .sum::<f64>()
        * 0.5
}

impl Polygon {
    /// Orients the loops: the one with the largest absolute area becomes the
    /// counter-clockwise outer loop, all others clockwise holes.
    pub fn new(loops: Vec<Vec<Vec2>>) -> Result<Self> {
        if loops.is_empty() {
            return Err(DwdtError::InvalidInput("polygon has no loops".into()));
        }
        let mut loops = loops;
        for (i, l) in loops.iter().enumerate() {
            if l.len() < 3 {
                return Err(DwdtError::InvalidInput(format!(
                    "polygon loop {i} has {} points",
                    l.len()
                )));
            }
            if l.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(DwdtError::InvalidInput(format!("polygon loop {i} is not finite")));
            }
        }
        let outer = (0..loops.len())
            .max_by(|&a, &b| {
                loop_signed_area(&loops[a])
                    .abs()
                    .total_cmp(&loop_signed_area(&loops[b]).abs())
                    .then(b.cmp(&a))
            })
            .unwrap();
        if loop_signed_area(&loops[outer]) == 0.0 {
            return Err(DwdtError::InvalidInput("polygon has zero area".into()));
        }
        loops.swap(0, outer);
        for (i, l) in loops.iter_mut().enumerate() {
            let a = loop_signed_area(l);
            if (i == 0) != (a > 0.0) {
                l.reverse();
            }
        }
        Ok(Self { loops })
    }

    /// Axis-aligned rectangle `[lo, hi]`.
    pub fn rectangle(lo: Vec2, hi: Vec2) -> Result<Self> {
        Self::new(vec![vec![
            lo,
            Vec2::new(hi.x, lo.y),
            hi,
            Vec2::new(lo.x, hi.y),
        ]])
    }

    pub fn loops(&self) -> &[Vec<Vec2>] {
        &self.loops
    }

    /// Every directed boundary segment, loop by loop.
    pub fn segments(&self) -> Vec<(Vec2, Vec2)> {
        self.loops
            .iter()
            .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
            .collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vec2> {
        self.loops.iter().flatten()
    }

    /// Enclosed area (outer minus holes).
    pub fn area(&self) -> f64 {
        self.loops.iter().map(|l| loop_signed_area(l)).sum()
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        bounding_box(&self.loops[0])
    }

    pub fn diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Even-odd containment; points exactly on the boundary may go either way.
    pub fn contains(&self, p: &Vec2) -> bool {
        let mut inside = false;
        for l in &self.loops {
            let n = l.len();
            for i in 0..n {
                let (a, b) = (l[i], l[(i + 1) % n]);
                if (a.y > p.y) != (b.y > p.y) {
                    let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if p.x < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    /// Nearest boundary point by brute force over all segments (lowest index wins ties).
    pub fn closest_point(&self, p: &Vec2) -> BoundaryPoint {
        let segs = self.segments();
        let mut best = (f64::INFINITY, 0usize, 0.0f64, Vec2::zeros());
        for (i, &(a, b)) in segs.iter().enumerate() {
            let e = b - a;
            let len2 = e.norm_squared();
            let t = if len2 > 0.0 {
                ((p - a).dot(&e) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = a + e * t;
            let d2 = (p - q).norm_squared();
            if d2 < best.0 {
                best = (d2, i, t, q);
            }
        }
        let (_, segment, t, point) = best;
        let (a, b) = segs[segment];
        let left = {
            let e = b - a;
            Vec2::new(-e.y, e.x) / e.norm()
        };
        let r = p - point;
        let normal = if t > 0.0 && t < 1.0 {
            left
        } else if r.norm() > 0.0 {
            let sign = if self.contains(p) { 1.0 } else { -1.0 };
            r * (sign / r.norm())
        } else {
            // on a corner: bisect the two incident segment normals
            let corner = if t == 0.0 { segment } else { self.next_segment(segment) };
            let prev = self.prev_segment(corner);
            let (pa, pb) = segs[prev];
            let (ca, cb) = segs[corner];
            let np = Vec2::new(-(pb - pa).y, (pb - pa).x).normalize();
            let nc = Vec2::new(-(cb - ca).y, (cb - ca).x).normalize();
            let s = np + nc;
            if s.norm() > 0.0 {
                s.normalize()
            } else {
                nc
            }
        };
        BoundaryPoint {
            point,
            normal,
            signed_distance: r.dot(&normal),
            segment,
        }
    }

    fn loop_of(&self, segment: usize) -> (usize, usize) {
        let mut start = 0;
        for l in &self.loops {
            if segment < start + l.len() {
                return (start, l.len());
            }
            start += l.len();
        }
        unreachable!("segment index out of range")
    }

    fn next_segment(&self, segment: usize) -> usize {
        let (start, len) = self.loop_of(segment);
        start + (segment - start + 1) % len
    }

    fn prev_segment(&self, segment: usize) -> usize {
        let (start, len) = self.loop_of(segment);
        start + (segment - start + len - 1) % len
    }
}
