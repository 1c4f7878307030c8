//! Exact planar primitives over the rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar used for every coordinate in the crate.
pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Formats a rational in `p/q` (or bare integer) notation.
pub fn fmt_q(v: &Q) -> String {
    if v.is_integer() {
        format!("{}", v.numer())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Pt {
    pub x: Q,
    pub y: Q,
}

impl Pt {
    pub fn new(x: Q, y: Q) -> Self {
        Pt { x, y }
    }

    pub fn int(x: i128, y: i128) -> Self {
        Pt::new(qi(x), qi(y))
    }

    pub fn zero() -> Self {
        Pt::new(Q::zero(), Q::zero())
    }

    pub fn cross(self, o: Pt) -> Q {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Pt) -> Q {
        self.x * o.x + self.y * o.y
    }

    pub fn norm2(self) -> Q {
        self.dot(self)
    }

    pub fn scale(self, s: Q) -> Pt {
        Pt::new(self.x * s, self.y * s)
    }

    pub fn is_zero(self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// Counter-clockwise quarter turns.
    pub fn rot(self, quarter_turns: u8) -> Pt {
        match quarter_turns % 4 {
            0 => self,
            1 => Pt::new(-self.y, self.x),
            2 => Pt::new(-self.x, -self.y),
            _ => Pt::new(self.y, -self.x),
        }
    }

    pub fn lerp(self, o: Pt, t: Q) -> Pt {
        self + (o - self).scale(t)
    }

    /// Approximate coordinates, only for rendering and reports.
    pub fn to_f64(self) -> (f64, f64) {
        (to_f64(&self.x), to_f64(&self.y))
    }
}

pub fn to_f64(v: &Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

impl fmt::Display for Pt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_q(&self.x), fmt_q(&self.y))
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, o: Pt) -> Pt {
        Pt::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, o: Pt) -> Pt {
        Pt::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Pt {
    type Output = Pt;
    fn neg(self) -> Pt {
        Pt::new(-self.x, -self.y)
    }
}

impl Mul<Q> for Pt {
    type Output = Pt;
    fn mul(self, s: Q) -> Pt {
        self.scale(s)
    }
}

/// Sign of the turn `a -> b -> c`.
pub fn orient(a: Pt, b: Pt, c: Pt) -> Ordering {
    (b - a).cross(c - a).cmp(&Q::zero())
}

/// Rigid motion of the plane: rotation by quarter turns followed by translation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Motion {
    pub rot: u8,
    pub shift: Pt,
}

impl Motion {
    pub fn identity() -> Self {
        Motion {
            rot: 0,
            shift: Pt::zero(),
        }
    }

    pub fn translation(shift: Pt) -> Self {
        Motion { rot: 0, shift }
    }

    pub fn apply(&self, p: Pt) -> Pt {
        p.rot(self.rot) + self.shift
    }

    pub fn apply_vec(&self, v: Pt) -> Pt {
        v.rot(self.rot)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn then_after(&self, other: &Motion) -> Motion {
        Motion {
            rot: (self.rot + other.rot) % 4,
            shift: other.shift.rot(self.rot) + self.shift,
        }
    }

    pub fn inverse(&self) -> Motion {
        let rot = (4 - self.rot % 4) % 4;
        Motion {
            rot,
            shift: (-self.shift).rot(rot),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rot.is_multiple_of(4) && self.shift.is_zero()
    }
}

/// Affine map `p ↦ L p + c` with rational entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Affine {
    pub m: [[Q; 2]; 2],
    pub c: Pt,
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            m: [[Q::one(), Q::zero()], [Q::zero(), Q::one()]],
            c: Pt::zero(),
        }
    }

    pub fn from_rows(r0: [Q; 3], r1: [Q; 3]) -> Self {
        Affine {
            m: [[r0[0], r0[1]], [r1[0], r1[1]]],
            c: Pt::new(r0[2], r1[2]),
        }
    }

    pub fn apply(&self, p: Pt) -> Pt {
        self.apply_vec(p) + self.c
    }

    pub fn apply_vec(&self, v: Pt) -> Pt {
        Pt::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn det(&self) -> Q {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Affine> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        let m = [
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ];
        let lin = Affine { m, c: Pt::zero() };
        let c = -lin.apply_vec(self.c);
        Some(Affine { m, c })
    }

    /// `self ∘ other`.
    pub fn after(&self, other: &Affine) -> Affine {
        let a = &self.m;
        let b = &other.m;
        let m = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        Affine {
            m,
            c: self.apply(other.c),
        }
    }

    pub fn from_motion(mo: &Motion) -> Affine {
        let e1 = Pt::int(1, 0).rot(mo.rot);
        let e2 = Pt::int(0, 1).rot(mo.rot);
        Affine {
            m: [[e1.x, e2.x], [e1.y, e2.y]],
            c: mo.shift,
        }
    }

    pub fn rows(&self) -> [[Q; 3]; 2] {
        [
            [self.m[0][0], self.m[0][1], self.c.x],
            [self.m[1][0], self.m[1][1], self.c.y],
        ]
    }
}

/// Result of intersecting two closed segments.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SegHit {
    None,
    /// Single point with parameters on each segment.
    Point {
        t: Q,
        u: Q,
    },
    /// Collinear overlap; parameter intervals on the first segment and matching ones on the second.
    Overlap {
        t0: Q,
        t1: Q,
        u0: Q,
        u1: Q,
    },
}

/// Intersects `p0→p1` with `q0→q1` (both closed, non-degenerate).
pub fn seg_intersect(p0: Pt, p1: Pt, q0: Pt, q1: Pt) -> SegHit {
    let d = p1 - p0;
    let e = q1 - q0;
    let w = q0 - p0;
    let den = d.cross(e);
    let zero = Q::zero();
    let one = Q::one();
    if !den.is_zero() {
        let t = w.cross(e) / den;
        let u = w.cross(d) / den;
        if t >= zero && t <= one && u >= zero && u <= one {
            return SegHit::Point { t, u };
        }
        return SegHit::None;
    }
    if !w.cross(d).is_zero() {
        return SegHit::None;
    }
    // collinear: project q endpoints on p's parameter
    let dd = d.norm2();
    let ta = w.dot(d) / dd;
    let tb = (q1 - p0).dot(d) / dd;
    let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
    let t0 = if lo > zero { lo } else { zero };
    let t1 = if hi < one { hi } else { one };
    if t0 > t1 {
        return SegHit::None;
    }
    let ee = e.norm2();
    let u_of = |t: Q| (p0 + d.scale(t) - q0).dot(e) / ee;
    if t0 == t1 {
        return SegHit::Point { t: t0, u: u_of(t0) };
    }
    SegHit::Overlap {
        t0,
        t1,
        u0: u_of(t0),
        u1: u_of(t1),
    }
}

/// Twice the signed area of a closed polygon.
pub fn signed_area2(poly: &[Pt]) -> Q {
    let n = poly.len();
    let mut s = Q::zero();
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    s
}

/// Half-plane index used for exact angular ordering (0 for angles in [0, π), 1 otherwise).
fn half(v: Pt) -> u8 {
    if v.y > Q::zero() || (v.y.is_zero() && v.x > Q::zero()) {
        0
    } else {
        1
    }
}

/// Orders nonzero vectors by polar angle in [0, 2π).
pub fn angle_cmp(a: Pt, b: Pt) -> Ordering {
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    // same half: a before b iff b is counter-clockwise from a
    Q::zero().cmp(&a.cross(b))
}

/// Same direction (positive multiples).
pub fn same_direction(a: Pt, b: Pt) -> bool {
    a.cross(b).is_zero() && a.dot(b) > Q::zero()
}

/// Squared distance from `p` to the closed segment `a→b`.
pub fn point_seg_dist2(p: Pt, a: Pt, b: Pt) -> Q {
    let d = b - a;
    let dd = d.norm2();
    if dd.is_zero() {
        return (p - a).norm2();
    }
    let mut t = (p - a).dot(d) / dd;
    if t < Q::zero() {
        t = Q::zero();
    }
    if t > Q::one() {
        t = Q::one();
    }
    (p - (a + d.scale(t))).norm2()
}

pub fn seg_seg_dist2(a0: Pt, a1: Pt, b0: Pt, b1: Pt) -> Q {
    if !matches!(seg_intersect(a0, a1, b0, b1), SegHit::None) {
        return Q::zero();
    }
    let c = [
        point_seg_dist2(a0, b0, b1),
        point_seg_dist2(a1, b0, b1),
        point_seg_dist2(b0, a0, a1),
        point_seg_dist2(b1, a0, a1),
    ];
    c.into_iter().min().unwrap()
}

/// Clips `p0→p1` to the closed unit square; returns the parameter interval if non-degenerate.
pub fn clip_unit(p0: Pt, p1: Pt) -> Option<(Q, Q)> {
    let d = p1 - p0;
    let mut lo = Q::zero();
    let mut hi = Q::one();
    let checks = [
        (-d.x, p0.x),
        (d.x, Q::one() - p0.x),
        (-d.y, p0.y),
        (d.y, Q::one() - p0.y),
    ];
    for (pk, qk) in checks {
        if pk.is_zero() {
            if qk < Q::zero() {
                return None;
            }
        } else {
            let r = qk / pk;
            if pk < Q::zero() {
                if r > lo {
                    lo = r;
                }
            } else if r < hi {
                hi = r;
            }
        }
    }
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

pub fn in_unit(p: Pt) -> bool {
    let (z, o) = (Q::zero(), Q::one());
    p.x >= z && p.x <= o && p.y >= z && p.y <= o
}

/// Whether the polygon's edges meet only at consecutive shared vertices.
pub fn polygon_is_simple(poly: &[Pt]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let (a0, a1) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let (b0, b1) = (poly[j], poly[(j + 1) % n]);
            let adjacent_next = j == i + 1;
            let adjacent_wrap = i == 0 && j == n - 1;
            match seg_intersect(a0, a1, b0, b1) {
                SegHit::None => {}
                SegHit::Overlap { .. } => return false,
                SegHit::Point { t, u } => {
                    if adjacent_next && t == Q::one() && u.is_zero() {
                        continue;
                    }
                    if adjacent_wrap && t.is_zero() && u == Q::one() {
                        continue;
                    }
                    return false;
                }
            }
        }
    }
    true
}

/// Drops repeated and collinear-through vertices of a closed polygon.
pub fn simplify_closed(poly: &[Pt]) -> Vec<Pt> {
    let mut v: Vec<Pt> = Vec::with_capacity(poly.len());
    for &p in poly {
        if v.last() != Some(&p) {
            v.push(p);
        }
    }
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let mut removed = false;
        for i in 0..n {
            let a = v[(i + n - 1) % n];
            let b = v[i];
            let c = v[(i + 1) % n];
            if (b - a).cross(c - b).is_zero() && (b - a).dot(c - b) > Q::zero() {
                v.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// Exact point location against a simple polygon.
pub fn point_in_polygon(p: Pt, poly: &[Pt]) -> Containment {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (b - a).cross(p - a).is_zero() && (p - a).dot(p - b) <= Q::zero() {
            return Containment::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Sutherland-Hodgman clip of `subject` by a counterclockwise convex polygon.
pub fn clip_convex(subject: &[Pt], clip: &[Pt]) -> Vec<Pt> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let side = |p: Pt| (b - a).cross(p - a);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let (cur, prev) = (input[j], input[(j + n - 1) % n]);
            let (sc, sp) = (side(cur), side(prev));
            if sc >= Q::zero() {
                if sp < Q::zero() {
                    out.push(prev + (cur - prev).scale(sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= Q::zero() {
                out.push(prev + (cur - prev).scale(sp / (sp - sc)));
            }
        }
    }
    simplify_closed(&out)
}

pub fn abs(v: Q) -> Q {
    v.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_and_containment() {
        let sq = vec![Pt::int(0, 0), Pt::int(2, 0), Pt::int(2, 2), Pt::int(0, 2)];
        let unit = vec![Pt::int(1, 1), Pt::int(3, 1), Pt::int(3, 3), Pt::int(1, 3)];
        let c = clip_convex(&sq, &unit);
        assert_eq!(signed_area2(&c), qi(2));
        assert_eq!(
            point_in_polygon(Pt::new(q(1, 2), q(1, 2)), &sq),
            Containment::Inside
        );
        assert_eq!(
            point_in_polygon(Pt::new(qi(2), q(1, 2)), &sq),
            Containment::Boundary
        );
        assert_eq!(
            point_in_polygon(Pt::new(qi(3), q(1, 2)), &sq),
            Containment::Outside
        );
    }

    #[test]
    fn motion_inverse_roundtrip() {
        let m = Motion {
            rot: 3,
            shift: Pt::new(q(1, 2), qi(-2)),
        };
        let p = Pt::new(q(1, 3), q(2, 7));
        assert_eq!(m.inverse().apply(m.apply(p)), p);
        let n = Motion {
            rot: 1,
            shift: Pt::int(1, 0),
        };
        assert_eq!(m.then_after(&n).apply(p), m.apply(n.apply(p)));
    }

    #[test]
    fn crossing_and_overlap() {
        let hit = seg_intersect(Pt::int(0, 0), Pt::int(2, 2), Pt::int(0, 2), Pt::int(2, 0));
        assert_eq!(
            hit,
            SegHit::Point {
                t: q(1, 2),
                u: q(1, 2)
            }
        );
        let ov = seg_intersect(Pt::int(0, 0), Pt::int(2, 0), Pt::int(1, 0), Pt::int(3, 0));
        assert!(matches!(ov, SegHit::Overlap { .. }));
        let none = seg_intersect(Pt::int(0, 0), Pt::int(1, 0), Pt::int(0, 1), Pt::int(1, 1));
        assert_eq!(none, SegHit::None);
    }

    #[test]
    fn angle_order_is_polar() {
        let dirs = [
            Pt::int(1, 0),
            Pt::int(1, 1),
            Pt::int(0, 1),
            Pt::int(-1, 0),
            Pt::int(0, -1),
            Pt::int(1, -1),
        ];
        for w in dirs.windows(2) {
            assert_eq!(angle_cmp(w[0], w[1]), Ordering::Less);
        }
    }

    #[test]
    fn clip_to_unit_square() {
        let (lo, hi) = clip_unit(Pt::new(q(-1, 2), q(1, 2)), Pt::new(q(3, 2), q(1, 2))).unwrap();
        assert_eq!((lo, hi), (q(1, 4), q(3, 4)));
        assert!(clip_unit(Pt::int(2, 2), Pt::int(3, 3)).is_none());
    }

    #[test]
    fn simple_polygons() {
        let sq = [Pt::int(0, 0), Pt::int(1, 0), Pt::int(1, 1), Pt::int(0, 1)];
        assert!(polygon_is_simple(&sq));
        let bow = [Pt::int(0, 0), Pt::int(1, 1), Pt::int(1, 0), Pt::int(0, 1)];
        assert!(!polygon_is_simple(&bow));
        assert_eq!(signed_area2(&sq), qi(2));
    }

    #[test]
    fn affine_inverse() {
        let a = Affine::from_rows([qi(1), qi(1), q(1, 2)], [qi(0), qi(1), qi(0)]);
        let p = Pt::new(q(1, 3), q(1, 5));
        assert_eq!(a.inverse().unwrap().apply(a.apply(p)), p);
    }
}
