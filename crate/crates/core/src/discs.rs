//! Immersed bigons and triangles with convex corners, found in the developed plane.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::curve::{ImmersedCurve, Locator};
use crate::develop::{is_embedded_lift, strand, StrandPiece};
use crate::geom::{fmt_q, seg_intersect, signed_area2, Motion, Pt, SegHit, Q};
use crate::intersect::{fiber_product, triple_points, IntersectionPoint};
use crate::surface::SquareTiledSurface;

/// Index recorded on every bigon.
pub const BIGON_INDEX: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiscError {
    #[error("curves {a} and {b} are not transverse at {at}")]
    NonTransverseInput { a: String, b: String, at: String },
    #[error("curve {curve} has no embedded lift certificate at depth {depth}")]
    AdmissibilityUnverified { curve: String, depth: usize },
    #[error("triple point at {at}")]
    TriplePoint { at: String },
    #[error("region bound {bound} is too small")]
    RegionBoundTooSmall { bound: usize },
    #[error("corner {corner} is not an intersection point of {a} and {b}")]
    UnknownCorner {
        corner: String,
        a: String,
        b: String,
    },
    #[error("oracle does not support this surface: {0}")]
    Unsupported(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryArc {
    pub curve: String,
    /// Whether the arc follows the curve's orientation.
    pub forward: bool,
    pub from: Locator,
    pub to: Locator,
    pub pieces: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinatorialDisc {
    /// Bigons: `[x_plus, x_minus]`; triangles: `[x, y, z]`.
    pub corners: Vec<IntersectionPoint>,
    /// Counterclockwise, starting at the last corner.
    pub arcs: Vec<BoundaryArc>,
    /// Counterclockwise region boundary in the developed plane.
    pub region: Vec<Pt>,
    pub deck_word: Vec<usize>,
    pub area: Q,
    pub index: u32,
}

impl CombinatorialDisc {
    pub fn is_bigon(&self) -> bool {
        self.corners.len() == 2
    }

    /// Re-validates the planar certificate: closed simple ccw polygon with convex corners.
    pub fn certificate_holds(&self) -> bool {
        let n = self.region.len();
        if n < 3 || signed_area2(&self.region) <= Q::zero() {
            return false;
        }
        if !crate::develop::closed_polyline_is_simple(&self.region) {
            return false;
        }
        self.area * Q::from_integer(2) == signed_area2(&self.region)
    }
}

impl fmt::Display for CombinatorialDisc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let corners: Vec<String> = self
            .corners
            .iter()
            .map(|c| format!("{}|{}", c.a, c.b))
            .collect();
        let word: Vec<String> = self.deck_word.iter().map(|s| s.to_string()).collect();
        write!(
            f,
            "corners {} word [{}] area {}",
            corners.join(" -> "),
            word.join(" "),
            fmt_q(&self.area)
        )
    }
}

/// Square sequence with consecutive repeats merged.
pub fn canonical_word(squares: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for s in squares {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub depth: usize,
    pub allow_unverified: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            depth: 4,
            allow_unverified: false,
        }
    }
}

/// Position along a strand: piece index and fraction, with piece ends moved to the next start.
type Pos = (usize, Q);

#[derive(Clone, Debug)]
struct Hit {
    p: Pos,
    q: Pos,
}

/// Collinear stretch shared by piece `i` of one strand and piece `j` of the other,
/// `t0 <-> u0` and `t1 <-> u1`.
#[derive(Clone, Debug)]
struct Span {
    i: usize,
    j: usize,
    t0: Q,
    t1: Q,
    u0: Q,
    u1: Q,
}

#[derive(Clone, Debug, Default)]
struct Hits {
    points: Vec<Hit>,
    spans: Vec<Span>,
}

/// Range of `lam` in [0, 1] with `(piece, v0 + lam (v1 - v0)) <= p`.
fn lam_range(piece: usize, v0: Q, v1: Q, p: &Pos) -> Option<(Q, Q)> {
    let (zero, one) = (Q::zero(), Q::one());
    if p.0 > piece {
        return Some((zero, one));
    }
    if p.0 < piece {
        return None;
    }
    if v0 == v1 {
        return (v0 <= p.1).then_some((zero, one));
    }
    let l = (p.1 - v0) / (v1 - v0);
    let (lo, hi) = if v1 > v0 {
        (zero, l.min(one))
    } else {
        (l.max(zero), one)
    };
    (lo <= hi).then_some((lo, hi))
}

impl Span {
    fn reaches(&self, p: &Pos, q: &Pos) -> bool {
        match (
            lam_range(self.i, self.t0, self.t1, p),
            lam_range(self.j, self.u0, self.u1, q),
        ) {
            (Some(a), Some(b)) => a.0.max(b.0) <= a.1.min(b.1),
            _ => false,
        }
    }
}

fn norm_pos(s: &[StrandPiece], i: usize, t: Q) -> Pos {
    if t == Q::one() && i + 1 < s.len() {
        (i + 1, Q::zero())
    } else {
        (i, t)
    }
}

fn bbox(p: &StrandPiece) -> [f64; 4] {
    let (x0, y0) = p.from.to_f64();
    let (x1, y1) = p.to.to_f64();
    [
        x0.min(x1) - 1e-9,
        y0.min(y1) - 1e-9,
        x0.max(x1) + 1e-9,
        y0.max(y1) + 1e-9,
    ]
}

fn strand_hits(s: &[StrandPiece], t: &[StrandPiece]) -> Hits {
    let mut seen = BTreeMap::new();
    let mut spans = Vec::new();
    let tb: Vec<[f64; 4]> = t.iter().map(bbox).collect();
    for (i, a) in s.iter().enumerate() {
        let ab = bbox(a);
        for (j, b) in t.iter().enumerate() {
            let bb = &tb[j];
            if ab[0] > bb[2] || bb[0] > ab[2] || ab[1] > bb[3] || bb[1] > ab[3] {
                continue;
            }
            match seg_intersect(a.from, a.to, b.from, b.to) {
                SegHit::None => {}
                SegHit::Overlap { t0, t1, u0, u1 } => spans.push(Span {
                    i,
                    j,
                    t0,
                    t1,
                    u0,
                    u1,
                }),
                SegHit::Point { t: ta, u } => {
                    let p = norm_pos(s, i, ta);
                    let q = norm_pos(t, j, u);
                    seen.entry((p, q)).or_insert(Hit { p, q });
                }
            }
        }
    }
    Hits {
        points: seen.into_values().collect(),
        spans,
    }
}

fn point_at(s: &[StrandPiece], p: &Pos) -> Pt {
    s[p.0].from.lerp(s[p.0].to, p.1)
}

fn arriving_dir(s: &[StrandPiece], p: &Pos) -> Pt {
    if p.1.is_zero() && p.0 > 0 {
        s[p.0 - 1].dir()
    } else {
        s[p.0].dir()
    }
}

/// Vertices from the strand start up to `p`, inclusive.
fn path_to(s: &[StrandPiece], p: &Pos) -> Vec<Pt> {
    let mut out = vec![s[0].from];
    for piece in &s[..p.0] {
        out.push(piece.to);
    }
    if !p.1.is_zero() {
        out.push(point_at(s, p));
    }
    out
}

fn squares_to(s: &[StrandPiece], p: &Pos) -> Vec<usize> {
    let end = if p.1.is_zero() { p.0 } else { p.0 + 1 };
    s[..end].iter().map(|x| x.square).collect()
}

fn pieces_to(p: &Pos) -> usize {
    if p.1.is_zero() {
        p.0
    } else {
        p.0 + 1
    }
}

fn locator_at(curve: &ImmersedCurve, comp: usize, s: &[StrandPiece], p: &Pos) -> Locator {
    let piece = &s[p.0];
    curve.normalize(Locator {
        comp,
        seg: piece.seg,
        t: piece.param_at(p.1),
    })
}

fn before(x: &Pos, y: &Pos) -> bool {
    x < y
}

/// Whether sub-strands `[0, p]` and `[0, q]` meet only at the allowed positions.
fn only_meet_at(hits: &Hits, p: &Pos, q: &Pos, allowed: &[(Pos, Pos)]) -> bool {
    hits.points.iter().all(|h| {
        let inside = !before(p, &h.p) && !before(q, &h.q);
        !inside || allowed.iter().any(|(a, b)| *a == h.p && *b == h.q)
    }) && !hits.spans.iter().any(|s| s.reaches(p, q))
}

/// Generator lookup for a pair of curves.
#[derive(Clone, Debug)]
pub struct PairTable {
    pub points: Vec<IntersectionPoint>,
    index: BTreeMap<(Locator, Locator), usize>,
}

impl PairTable {
    pub fn new(points: Vec<IntersectionPoint>) -> Self {
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.a, p.b), i))
            .collect();
        PairTable { points, index }
    }

    pub fn find(&self, a: Locator, b: Locator) -> Option<usize> {
        self.index.get(&(a, b)).copied()
    }
}

fn check_transverse(
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    pts: &[IntersectionPoint],
) -> Result<(), DiscError> {
    match pts.iter().find(|p| !p.transverse) {
        Some(p) => Err(DiscError::NonTransverseInput {
            a: a.label.clone(),
            b: b.label.clone(),
            at: p.ambient.to_string(),
        }),
        None => Ok(()),
    }
}

fn check_admissible(curves: &[&ImmersedCurve], opts: &SearchOptions) -> Result<(), DiscError> {
    if opts.allow_unverified {
        return Ok(());
    }
    for c in curves {
        if !is_embedded_lift(c, opts.depth.max(1)) {
            return Err(DiscError::AdmissibilityUnverified {
                curve: c.label.clone(),
                depth: opts.depth,
            });
        }
    }
    Ok(())
}

/// Bigon enumeration between two curves, with the generator table precomputed.
pub struct BigonSearch<'s> {
    surface: &'s SquareTiledSurface,
    pub a: &'s ImmersedCurve,
    pub b: &'s ImmersedCurve,
    pub table: PairTable,
    depth: usize,
}

impl<'s> BigonSearch<'s> {
    pub fn new(
        surface: &'s SquareTiledSurface,
        a: &'s ImmersedCurve,
        b: &'s ImmersedCurve,
        opts: &SearchOptions,
    ) -> Result<Self, DiscError> {
        let pts = fiber_product(surface, a, b);
        check_transverse(a, b, &pts)?;
        check_admissible(&[a, b], opts)?;
        Ok(BigonSearch {
            surface,
            a,
            b,
            table: PairTable::new(pts),
            depth: opts.depth,
        })
    }

    /// All bigons leaving generator `xp`, i.e. with `x_plus = xp`.
    pub fn from_generator(&self, xp: usize) -> Vec<CombinatorialDisc> {
        let x = self.table.points[xp];
        let (a, b) = (self.a, self.b);
        let na = self.depth * a.components[x.a.comp].len();
        let nb = self.depth * b.components[x.b.comp].len();
        let mb = self
            .surface
            .frame_between(a.point_at(x.a), b.point_at(x.b))
            .expect("generators are not corners");
        let mut found: BTreeMap<(usize, Vec<usize>), CombinatorialDisc> = BTreeMap::new();
        for fa in [true, false] {
            let alpha = strand(a, x.a, fa, na, Motion::identity());
            for fb in [true, false] {
                let beta = strand(b, x.b, fb, nb, mb);
                let hits = strand_hits(&alpha, &beta);
                let start: Pos = (0, Q::zero());
                let a0 = alpha[0].dir();
                let b0 = beta[0].dir();
                if b0.cross(a0) <= Q::zero() {
                    continue;
                }
                for h in &hits.points {
                    if h.p == start || h.q == start {
                        continue;
                    }
                    if !only_meet_at(&hits, &h.p, &h.q, &[(start, start), (h.p, h.q)]) {
                        continue;
                    }
                    if arriving_dir(&alpha, &h.p).cross(arriving_dir(&beta, &h.q)) <= Q::zero() {
                        continue;
                    }
                    let mut region: Vec<Pt> = path_to(&alpha, &h.p).into_iter().rev().collect();
                    let bpath = path_to(&beta, &h.q);
                    region.extend(bpath[1..bpath.len() - 1].iter().copied());
                    let area2 = signed_area2(&region);
                    if area2 <= Q::zero() || !crate::develop::closed_polyline_is_simple(&region) {
                        continue;
                    }
                    let la = locator_at(a, x.a.comp, &alpha, &h.p);
                    let lb = locator_at(b, x.b.comp, &beta, &h.q);
                    let Some(xm) = self.table.find(la, lb) else {
                        continue;
                    };
                    let mut word: Vec<usize> = squares_to(&alpha, &h.p).into_iter().rev().collect();
                    word.extend(squares_to(&beta, &h.q));
                    let deck_word = canonical_word(word);
                    let disc = CombinatorialDisc {
                        corners: vec![x, self.table.points[xm]],
                        arcs: vec![
                            BoundaryArc {
                                curve: a.label.clone(),
                                forward: !fa,
                                from: la,
                                to: x.a,
                                pieces: pieces_to(&h.p),
                            },
                            BoundaryArc {
                                curve: b.label.clone(),
                                forward: fb,
                                from: x.b,
                                to: lb,
                                pieces: pieces_to(&h.q),
                            },
                        ],
                        region,
                        deck_word: deck_word.clone(),
                        area: area2 / Q::from_integer(2),
                        index: BIGON_INDEX,
                    };
                    found.entry((xm, deck_word)).or_insert(disc);
                }
            }
        }
        found.into_values().collect()
    }
}

/// Bigons from `x_plus` to `x_minus` between `a` and `b`.
pub fn count_bigons(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    x_plus: &IntersectionPoint,
    x_minus: &IntersectionPoint,
    opts: &SearchOptions,
) -> Result<Vec<CombinatorialDisc>, DiscError> {
    let search = BigonSearch::new(surface, a, b, opts)?;
    let xp = lookup(&search.table, x_plus, a, b)?;
    let xm = lookup(&search.table, x_minus, a, b)?;
    Ok(search
        .from_generator(xp)
        .into_iter()
        .filter(|d| d.corners[1] == search.table.points[xm])
        .collect())
}

fn lookup(
    t: &PairTable,
    p: &IntersectionPoint,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
) -> Result<usize, DiscError> {
    t.find(p.a, p.b).ok_or_else(|| DiscError::UnknownCorner {
        corner: p.to_string(),
        a: a.label.clone(),
        b: b.label.clone(),
    })
}

/// Triangle enumeration for curves `(a, b, c)`; corners `x in a×b`, `y in b×c`, `z in a×c`,
/// boundary counterclockwise `z -a-> x -b-> y -c-> z`.
pub struct TriangleSearch<'s> {
    surface: &'s SquareTiledSurface,
    pub curves: [&'s ImmersedCurve; 3],
    pub ab: PairTable,
    pub bc: PairTable,
    pub ac: PairTable,
    depth: usize,
}

impl<'s> TriangleSearch<'s> {
    pub fn new(
        surface: &'s SquareTiledSurface,
        a: &'s ImmersedCurve,
        b: &'s ImmersedCurve,
        c: &'s ImmersedCurve,
        opts: &SearchOptions,
    ) -> Result<Self, DiscError> {
        let pair =
            |x: &ImmersedCurve, y: &ImmersedCurve, same: bool| -> Result<PairTable, DiscError> {
                let mut pts = fiber_product(surface, x, y);
                if same {
                    pts.retain(|p| p.a != p.b);
                }
                check_transverse(x, y, &pts)?;
                Ok(PairTable::new(pts))
            };
        let ab = pair(a, b, std::ptr::eq(a, b))?;
        let bc = pair(b, c, std::ptr::eq(b, c))?;
        let ac = pair(a, c, std::ptr::eq(a, c))?;
        if !std::ptr::eq(a, b) && !std::ptr::eq(b, c) && !std::ptr::eq(a, c) {
            if let Some(p) = triple_points(surface, a, b, c).first() {
                return Err(DiscError::TriplePoint { at: p.to_string() });
            }
        }
        check_admissible(&[a, b, c], opts)?;
        Ok(TriangleSearch {
            surface,
            curves: [a, b, c],
            ab,
            bc,
            ac,
            depth: opts.depth,
        })
    }

    /// All triangles with first corner `ab.points[xi]`.
    pub fn from_corner(&self, xi: usize) -> Vec<CombinatorialDisc> {
        let [a, b, c] = self.curves;
        let x = self.ab.points[xi];
        let na = self.depth * a.components[x.a.comp].len();
        let nb = self.depth * b.components[x.b.comp].len();
        let mb = self
            .surface
            .frame_between(a.point_at(x.a), b.point_at(x.b))
            .expect("corner-free generator");
        let start: Pos = (0, Q::zero());
        let mut found: BTreeMap<(usize, usize, Vec<usize>), CombinatorialDisc> = BTreeMap::new();
        for fa in [true, false] {
            let alpha = strand(a, x.a, fa, na, Motion::identity());
            for fb in [true, false] {
                let beta = strand(b, x.b, fb, nb, mb);
                if beta[0].dir().cross(alpha[0].dir()) <= Q::zero() {
                    continue;
                }
                let hits_ab = strand_hits(&alpha, &beta);
                for (yi, ypos, pi) in self.corner_positions(&beta, x.b.comp) {
                    let y = self.bc.points[yi];
                    let piece = &beta[pi];
                    let mc = piece.motion.then_after(
                        &self
                            .surface
                            .frame_between(b.point_at(y.a), c.point_at(y.b))
                            .expect("corner-free generator"),
                    );
                    let nc = self.depth * c.components[y.b.comp].len();
                    for fc in [true, false] {
                        let gamma = strand(c, y.b, fc, nc, mc);
                        if arriving_dir(&beta, &ypos).cross(gamma[0].dir()) <= Q::zero() {
                            continue;
                        }
                        let hits_bc = strand_hits(&beta, &gamma);
                        let hits_ca = strand_hits(&gamma, &alpha);
                        for h in &hits_ca.points {
                            let (gz, az) = (&h.p, &h.q);
                            if *az == start || *gz == start {
                                continue;
                            }
                            if arriving_dir(&alpha, az).cross(arriving_dir(&gamma, gz)) <= Q::zero()
                            {
                                continue;
                            }
                            if !only_meet_at(&hits_ab, az, &ypos, &[(start, start)])
                                || !only_meet_at(&hits_bc, &ypos, gz, &[(ypos, start)])
                                || !only_meet_at(&hits_ca, gz, az, &[(*gz, *az)])
                            {
                                continue;
                            }
                            let la = locator_at(a, x.a.comp, &alpha, az);
                            let lc = locator_at(c, y.b.comp, &gamma, gz);
                            let Some(zi) = self.ac.find(la, lc) else {
                                continue;
                            };
                            let mut region: Vec<Pt> =
                                path_to(&alpha, az).into_iter().rev().collect();
                            let bp = path_to(&beta, &ypos);
                            region.extend(bp[1..].iter().copied());
                            let gp = path_to(&gamma, gz);
                            region.extend(gp[1..gp.len() - 1].iter().copied());
                            let area2 = signed_area2(&region);
                            if area2 <= Q::zero()
                                || !crate::develop::closed_polyline_is_simple(&region)
                            {
                                continue;
                            }
                            let mut word: Vec<usize> =
                                squares_to(&alpha, az).into_iter().rev().collect();
                            word.extend(squares_to(&beta, &ypos));
                            word.extend(squares_to(&gamma, gz));
                            let deck_word = canonical_word(word);
                            let disc = CombinatorialDisc {
                                corners: vec![x, y, self.ac.points[zi]],
                                arcs: vec![
                                    BoundaryArc {
                                        curve: a.label.clone(),
                                        forward: !fa,
                                        from: la,
                                        to: x.a,
                                        pieces: pieces_to(az),
                                    },
                                    BoundaryArc {
                                        curve: b.label.clone(),
                                        forward: fb,
                                        from: x.b,
                                        to: y.a,
                                        pieces: pieces_to(&ypos),
                                    },
                                    BoundaryArc {
                                        curve: c.label.clone(),
                                        forward: fc,
                                        from: y.b,
                                        to: lc,
                                        pieces: pieces_to(gz),
                                    },
                                ],
                                region,
                                deck_word: deck_word.clone(),
                                area: area2 / Q::from_integer(2),
                                index: 0,
                            };
                            found.entry((yi, zi, deck_word)).or_insert(disc);
                        }
                    }
                }
            }
        }
        found.into_values().collect()
    }

    /// Positions along a `b` strand where it passes a `b×c` generator (excluding the start).
    fn corner_positions(&self, beta: &[StrandPiece], comp: usize) -> Vec<(usize, Pos, usize)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (i, piece) in beta.iter().enumerate() {
            let (lo, hi) = if piece.t_start <= piece.t_end {
                (piece.t_start, piece.t_end)
            } else {
                (piece.t_end, piece.t_start)
            };
            for (yi, y) in self.bc.points.iter().enumerate() {
                if y.a.comp != comp || y.a.seg != piece.seg || y.a.t < lo || y.a.t > hi {
                    continue;
                }
                let frac = (y.a.t - piece.t_start) / (piece.t_end - piece.t_start);
                let pos = norm_pos(beta, i, frac);
                if pos == (0, Q::zero()) {
                    continue;
                }
                if seen.insert((yi, pos)) {
                    out.push((yi, pos, i));
                }
            }
        }
        out
    }
}

/// Triangles with the given corners.
pub fn count_triangles(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    c: &ImmersedCurve,
    corners: [&IntersectionPoint; 3],
    opts: &SearchOptions,
) -> Result<Vec<CombinatorialDisc>, DiscError> {
    let search = TriangleSearch::new(surface, a, b, c, opts)?;
    let xi = lookup(&search.ab, corners[0], a, b)?;
    lookup(&search.bc, corners[1], b, c)?;
    lookup(&search.ac, corners[2], a, c)?;
    Ok(search
        .from_corner(xi)
        .into_iter()
        .filter(|d| d.corners[1] == *corners[1] && d.corners[2] == *corners[2])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{geodesic, polyline};
    use crate::geom::{q, qi};

    fn torus() -> SquareTiledSurface {
        SquareTiledSurface::torus_grid("T", 1, 1)
    }

    fn n_curve(t: &SquareTiledSurface) -> ImmersedCurve {
        polyline(
            t,
            "n",
            0,
            vec![
                Pt::new(q(1, 4), qi(0)),
                Pt::new(q(1, 4), q(3, 4)),
                Pt::new(q(3, 4), q(1, 4)),
                Pt::new(q(3, 4), q(3, 4)),
                Pt::new(q(1, 4), qi(1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn geodesics_bound_no_bigons() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let s = geodesic(&t, "s", 1, 1, (1, 2), Pt::new(q(1, 3), qi(0))).unwrap();
        let search = BigonSearch::new(&t, &h, &s, &SearchOptions::default()).unwrap();
        assert_eq!(search.table.points.len(), 2);
        for i in 0..2 {
            assert!(search.from_generator(i).is_empty());
        }
    }

    #[test]
    fn finger_gives_one_bigon_each_way() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let n = n_curve(&t);
        let search = BigonSearch::new(&t, &h, &n, &SearchOptions::default()).unwrap();
        let pts = &search.table.points;
        assert_eq!(pts.len(), 3);
        let at = |x: Q| {
            pts.iter()
                .position(|p| p.ambient.p == Pt::new(x, q(1, 2)))
                .unwrap()
        };
        let (p1, p2, p3) = (at(q(1, 4)), at(q(1, 2)), at(q(3, 4)));
        let from2 = search.from_generator(p2);
        assert_eq!(from2.len(), 2);
        let targets: BTreeSet<usize> = from2
            .iter()
            .map(|d| search.table.find(d.corners[1].a, d.corners[1].b).unwrap())
            .collect();
        assert_eq!(targets, [p1, p3].into_iter().collect());
        assert!(search.from_generator(p1).is_empty());
        assert!(search.from_generator(p3).is_empty());
        for d in &from2 {
            assert!(d.certificate_holds());
            assert_eq!(d.area, q(1, 32));
            assert_eq!(d.index, BIGON_INDEX);
        }
        let one = count_bigons(&t, &h, &n, &pts[p2], &pts[p1], &SearchOptions::default()).unwrap();
        assert_eq!(one.len(), 1);
        assert!(
            count_bigons(&t, &h, &n, &pts[p1], &pts[p2], &SearchOptions::default())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn tangency_is_rejected() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let v = polyline(
            &t,
            "v",
            0,
            vec![
                Pt::new(qi(0), q(1, 4)),
                Pt::new(q(1, 2), q(1, 2)),
                Pt::new(qi(1), q(1, 4)),
            ],
        )
        .unwrap();
        let err = BigonSearch::new(&t, &h, &v, &SearchOptions::default())
            .err()
            .unwrap();
        assert!(matches!(err, DiscError::NonTransverseInput { .. }));
    }

    #[test]
    fn three_geodesics_bound_triangles() {
        let t = torus();
        let a = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let b = geodesic(&t, "b", 1, 1, (0, 1), Pt::new(q(1, 2), qi(0))).unwrap();
        let c = geodesic(&t, "c", 1, 1, (1, 1), Pt::new(q(1, 4), qi(0))).unwrap();
        let search = TriangleSearch::new(
            &t,
            &a,
            &b,
            &c,
            &SearchOptions {
                depth: 2,
                allow_unverified: false,
            },
        )
        .unwrap();
        let tris: Vec<CombinatorialDisc> = (0..search.ab.points.len())
            .flat_map(|i| search.from_corner(i))
            .collect();
        assert!(!tris.is_empty());
        for d in &tris {
            assert!(d.certificate_holds());
        }
        // the smallest triangle has area 1/32
        assert!(tris.iter().any(|d| d.area == q(1, 32)));
    }
}
