//! PL finger moves: applying plans, repairing tangencies, lifting moves through a correspondence.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::correspondence::{Correspondence, CorrespondenceError};
use crate::curve::{Component, CurveError, ImmersedCurve, Locator, Segment};
use crate::geom::{q, seg_seg_dist2, Motion, Pt, Q};
use crate::intersect::{fiber_product, self_intersections, IntersectionPoint};
use crate::surface::{SquareTiledSurface, SurfPt};

/// Tapered finger move on the stretch of one component from `from` to `to`.
///
/// Curve vertices strictly inside the stretch are translated by `displacement`
/// (given in the frame of the square under `from`); if there are none the
/// midpoint becomes the moved vertex. `from == to` translates the whole component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub from: Locator,
    pub to: Locator,
    pub displacement: Pt,
    pub radius: Q,
}

impl Move {
    pub fn is_translation(&self) -> bool {
        self.from == self.to
    }
}

/// Closed `radius`-neighbourhood of a PL set; pieces may be single points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zone {
    pub label: String,
    pub pieces: Vec<Segment>,
    pub radius: Q,
}

/// Moves applied in order; each one refers to the curve left by its predecessors.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PerturbationPlan {
    pub target: String,
    pub moves: Vec<Move>,
    pub fixed_zones: Vec<Zone>,
}

impl PerturbationPlan {
    pub fn identity(target: &str) -> Self {
        PerturbationPlan {
            target: target.to_string(),
            moves: Vec::new(),
            fixed_zones: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.moves.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerturbError {
    #[error("move {index}: support radius must lie strictly between 0 and 1/2")]
    BadRadius { index: usize },
    #[error("move {index}: displacement is not shorter than the support radius")]
    TooFar { index: usize },
    #[error("move {index}: endpoints do not name one component of the curve")]
    BadRange { index: usize },
    #[error("move {index} touches fixed zone {zone} near {at}")]
    TouchesZone {
        index: usize,
        zone: String,
        at: SurfPt,
    },
    #[error("move {index} translates a component whose holonomy rotates")]
    RotatingHolonomy { index: usize },
    #[error("move {index} produces an invalid curve: {err}")]
    Invalid { index: usize, err: CurveError },
    #[error("tangency at {at} cannot be resolved")]
    Unresolvable { at: SurfPt },
    #[error("move {index} reaches the fold image near {at}")]
    SupportHitsSingularity { index: usize, at: SurfPt },
    #[error("lifted move {index} no longer matches the composed curve")]
    LostProvenance { index: usize },
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
}

/// Range `[t0, t1)` of a provenance segment covered by one track edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Src {
    seg: usize,
    t0: Q,
    t1: Q,
}

/// Developed closed polyline of one component; `pts[m]` is the holonomy image of `pts[0]`.
#[derive(Clone, Debug)]
struct Track {
    square: usize,
    pts: Vec<Pt>,
    src: Vec<Src>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    edge: usize,
    s: Q,
}

/// The component walked out of a track, with the edge span of every segment.
#[derive(Clone, Debug)]
struct Built {
    comp: Component,
    spans: Vec<(usize, Q, Q)>,
}

fn linf(v: Pt) -> Q {
    let (x, y) = (v.x.abs(), v.y.abs());
    if x > y {
        x
    } else {
        y
    }
}

impl Track {
    fn from_component(c: &Component, src: Vec<Src>) -> Track {
        Track {
            square: c.segments[0].square,
            pts: c.developed(),
            src,
        }
    }

    fn edges(&self) -> usize {
        self.src.len()
    }

    fn build(&mut self, surface: &SquareTiledSurface, label: &str) -> Result<Built, CurveError> {
        // start in the square the curve leaves into
        let first = surface.walk(
            SurfPt {
                square: self.square,
                p: self.pts[0],
            },
            self.pts[1] - self.pts[0],
        )?;
        if let Some(p) = first.pieces.first() {
            if p.square != self.square {
                let m = surface
                    .frame_between(
                        SurfPt {
                            square: self.square,
                            p: self.pts[0],
                        },
                        SurfPt {
                            square: p.square,
                            p: p.from,
                        },
                    )
                    .expect("walk starts at this point");
                let inv = m.inverse();
                self.pts = self.pts.iter().map(|&x| inv.apply(x)).collect();
                self.square = p.square;
            }
        }
        let start = SurfPt {
            square: self.square,
            p: self.pts[0],
        };
        let mut cur = start;
        let mut frame = Motion::identity();
        let mut segs = Vec::new();
        let mut spans = Vec::new();
        for e in 0..self.edges() {
            let delta = self.pts[e + 1] - self.pts[e];
            let len = linf(delta);
            let walk = surface.walk(cur, frame.inverse().apply_vec(delta))?;
            let mut s = Q::zero();
            for p in &walk.pieces {
                let s1 = s + linf(p.to - p.from) / len;
                segs.push(Segment {
                    square: p.square,
                    from: p.from,
                    to: p.to,
                });
                spans.push((e, s, s1));
                s = s1;
            }
            frame = frame.then_after(&walk.motion);
            cur = walk.end;
        }
        if !surface.same_point(cur, start) {
            return Err(CurveError::NotClosed { comp: 0 });
        }
        let curve = ImmersedCurve::from_segments(surface, label, vec![(label.to_string(), segs)])?;
        Ok(Built {
            comp: curve.components.into_iter().next().expect("one component"),
            spans,
        })
    }

    fn prov(&self, pos: Pos) -> (usize, Q) {
        let s = self.src[pos.edge];
        (s.seg, s.t0 + (s.t1 - s.t0) * pos.s)
    }

    fn pos_of(&self, seg: usize, t: Q) -> Option<Pos> {
        self.src.iter().enumerate().find_map(|(e, s)| {
            if s.seg != seg {
                return None;
            }
            let (lo, hi) = if s.t0 < s.t1 {
                (s.t0, s.t1)
            } else {
                (s.t1, s.t0)
            };
            let inside = if s.t0 < s.t1 {
                lo <= t && t < hi
            } else {
                lo < t && t <= hi
            };
            inside.then(|| Pos {
                edge: e,
                s: (t - s.t0) / (s.t1 - s.t0),
            })
        })
    }

    /// Vertex index at `pos`, splitting its edge if needed.
    fn insert(&mut self, pos: Pos) -> usize {
        if pos.s.is_zero() {
            return pos.edge;
        }
        let e = pos.edge;
        let p = self.pts[e].lerp(self.pts[e + 1], pos.s);
        let s = self.src[e];
        let tm = s.t0 + (s.t1 - s.t0) * pos.s;
        self.pts.insert(e + 1, p);
        self.src[e] = Src {
            seg: s.seg,
            t0: s.t0,
            t1: tm,
        };
        self.src.insert(
            e + 1,
            Src {
                seg: s.seg,
                t0: tm,
                t1: s.t1,
            },
        );
        e + 1
    }
}

impl Built {
    fn pos(&self, loc: Locator) -> Pos {
        let (e, s0, s1) = self.spans[loc.seg];
        let s = s0 + (s1 - s0) * loc.t;
        if s == Q::one() {
            let m = self.spans.last().map(|x| x.0 + 1).unwrap_or(1);
            Pos {
                edge: (e + 1) % m,
                s: Q::zero(),
            }
        } else {
            Pos { edge: e, s }
        }
    }

    fn locator(&self, comp: usize, pos: Pos) -> Locator {
        let (j, &(_, s0, s1)) = self
            .spans
            .iter()
            .enumerate()
            .find(|(_, &(e, s0, s1))| e == pos.edge && s0 <= pos.s && pos.s < s1)
            .expect("spans cover every edge");
        Locator {
            comp,
            seg: j,
            t: (pos.s - s0) / (s1 - s0),
        }
    }

    /// Sub-segments of the component between two positions (the whole loop if equal).
    fn stretch(&self, from: Pos, to: Pos, edges: usize) -> Vec<Segment> {
        let m = Q::from_integer(edges as i128);
        let key = |p: Pos| Q::from_integer(p.edge as i128) + p.s;
        let lo = key(from);
        let mut hi = key(to);
        if hi <= lo {
            hi += m;
        }
        let mut out = Vec::new();
        for (j, &(e, s0, s1)) in self.spans.iter().enumerate() {
            let seg = self.comp.segments[j];
            for shift in [Q::zero(), m] {
                let a = Q::from_integer(e as i128) + s0 + shift;
                let b = Q::from_integer(e as i128) + s1 + shift;
                let x = if a > lo { a } else { lo };
                let y = if b < hi { b } else { hi };
                if x <= y {
                    let t0 = (x - a) / (b - a);
                    let t1 = (y - a) / (b - a);
                    out.push(Segment {
                        square: seg.square,
                        from: seg.at(t0),
                        to: seg.at(t1),
                    });
                }
            }
        }
        out
    }
}

/// First zone piece within `reach` of the piece, searched over nearby developed squares.
fn near_zone(
    surface: &SquareTiledSurface,
    piece: &Segment,
    zone: &Zone,
    reach: Q,
) -> Option<SurfPt> {
    let reach2 = reach * reach;
    let (a, b) = (piece.from, piece.to);
    let (minx, maxx) = if a.x < b.x { (a.x, b.x) } else { (b.x, a.x) };
    let (miny, maxy) = if a.y < b.y { (a.y, b.y) } else { (b.y, a.y) };
    let mut seen: HashSet<(usize, Motion)> = HashSet::new();
    let mut stack = vec![(piece.square, Motion::identity())];
    seen.insert(stack[0]);
    while let Some((sq, m)) = stack.pop() {
        for z in zone.pieces.iter().filter(|z| z.square == sq) {
            if seg_seg_dist2(a, b, m.apply(z.from), m.apply(z.to)) <= reach2 {
                return Some(SurfPt {
                    square: z.square,
                    p: z.from,
                });
            }
        }
        if seen.len() > 512 {
            continue;
        }
        for e in 0..4u8 {
            let (n, _) = surface.neighbor(sq, e);
            let mn = m.then_after(&surface.cross_motion(sq, e));
            let c0 = mn.apply(Pt::int(0, 0));
            let c1 = mn.apply(Pt::int(1, 1));
            let (x0, x1) = if c0.x < c1.x {
                (c0.x, c1.x)
            } else {
                (c1.x, c0.x)
            };
            let (y0, y1) = if c0.y < c1.y {
                (c0.y, c1.y)
            } else {
                (c1.y, c0.y)
            };
            let gap = |lo: Q, hi: Q, a: Q, b: Q| {
                let g = if lo > b {
                    lo - b
                } else if a > hi {
                    a - hi
                } else {
                    Q::zero()
                };
                g * g
            };
            if gap(x0, x1, minx, maxx) + gap(y0, y1, miny, maxy) <= reach2 && seen.insert((n, mn)) {
                stack.push((n, mn));
            }
        }
    }
    None
}

enum ZoneHit {
    Fold(SurfPt),
    Fixed(String, SurfPt),
}

fn check_zones(
    surface: &SquareTiledSurface,
    support: &[Segment],
    radius: Q,
    folds: &[Zone],
    fixed: &[Zone],
) -> Option<ZoneHit> {
    for piece in support {
        for z in folds {
            if let Some(at) = near_zone(surface, piece, z, radius + z.radius) {
                return Some(ZoneHit::Fold(at));
            }
        }
        for z in fixed {
            if let Some(at) = near_zone(surface, piece, z, radius + z.radius) {
                return Some(ZoneHit::Fixed(z.label.clone(), at));
            }
        }
    }
    None
}

/// A curve under a sequence of moves, each component tracked against a provenance curve.
#[derive(Clone, Debug)]
struct Tracked {
    label: String,
    tracks: Vec<Track>,
    built: Vec<Built>,
}

impl Tracked {
    fn new(
        surface: &SquareTiledSurface,
        curve: &ImmersedCurve,
        src: Vec<Vec<Src>>,
    ) -> Result<Tracked, CurveError> {
        let mut tracks = Vec::new();
        let mut built = Vec::new();
        for (c, s) in curve.components.iter().zip(src) {
            let mut t = Track::from_component(c, s);
            built.push(t.build(surface, &c.label)?);
            tracks.push(t);
        }
        Ok(Tracked {
            label: curve.label.clone(),
            tracks,
            built,
        })
    }

    fn plain(surface: &SquareTiledSurface, curve: &ImmersedCurve) -> Result<Tracked, CurveError> {
        let src = curve
            .components
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|i| Src {
                        seg: i,
                        t0: Q::zero(),
                        t1: Q::one(),
                    })
                    .collect()
            })
            .collect();
        Tracked::new(surface, curve, src)
    }

    fn curve(&self) -> ImmersedCurve {
        ImmersedCurve {
            label: self.label.clone(),
            components: self.built.iter().map(|b| b.comp.clone()).collect(),
        }
    }

    fn check(
        &self,
        surface: &SquareTiledSurface,
        index: usize,
        mv: &Move,
        folds: &[Zone],
        fixed: &[Zone],
    ) -> Result<(), PerturbError> {
        if mv.radius <= Q::zero() || mv.radius >= q(1, 2) {
            return Err(PerturbError::BadRadius { index });
        }
        if mv.displacement.norm2() >= mv.radius * mv.radius {
            return Err(PerturbError::TooFar { index });
        }
        let c = mv.from.comp;
        let ok = |l: Locator| {
            l.comp == c
                && c < self.built.len()
                && l.seg < self.built[c].comp.len()
                && !l.t.is_negative()
                && l.t < Q::one()
        };
        if !ok(mv.from) || !ok(mv.to) {
            return Err(PerturbError::BadRange { index });
        }
        let b = &self.built[c];
        let support = b.stretch(b.pos(mv.from), b.pos(mv.to), self.tracks[c].edges());
        match check_zones(surface, &support, mv.radius, folds, fixed) {
            None => Ok(()),
            Some(ZoneHit::Fold(at)) => Err(PerturbError::SupportHitsSingularity { index, at }),
            Some(ZoneHit::Fixed(zone, at)) => Err(PerturbError::TouchesZone { index, zone, at }),
        }
    }

    /// Applies a checked move.
    fn apply(
        &mut self,
        surface: &SquareTiledSurface,
        index: usize,
        mv: &Move,
    ) -> Result<(), PerturbError> {
        let c = mv.from.comp;
        let built = &self.built[c];
        let mut track = self.tracks[c].clone();
        let pf = track.prov(built.pos(mv.from));
        let pt = track.prov(built.pos(mv.to));
        let delta = built.comp.frame(mv.from.seg).apply_vec(mv.displacement);
        let hol = built.comp.holonomy();
        let whole = mv.is_translation();
        if whole && hol.rot != 0 {
            return Err(PerturbError::RotatingHolonomy { index });
        }
        let find =
            |t: &Track, p: (usize, Q)| t.pos_of(p.0, p.1).expect("provenance covers the loop");
        let f = track.insert(find(&track, pf));
        let mut to = track.insert(find(&track, pt));
        let mut f = if whole {
            f
        } else {
            track.insert(find(&track, pf))
        };
        if !whole {
            let m = track.edges();
            if (to == f + 1) || (f + 1 == m && to == 0) {
                track.insert(Pos {
                    edge: f,
                    s: q(1, 2),
                });
                f = track.insert(find(&track, pf));
                to = track.insert(find(&track, pt));
            }
        }
        let m = track.edges();
        let back = hol.inverse().apply_vec(delta);
        let wrap = !whole && to <= f;
        for i in 0..=m {
            let d = if whole {
                Some(delta)
            } else if !wrap {
                (f < i && i < to).then_some(delta)
            } else if i > f {
                (i < m || to > 0).then_some(delta)
            } else if i < to {
                Some(back)
            } else {
                None
            };
            if let Some(d) = d {
                track.pts[i] = track.pts[i] + d;
            }
        }
        if track.pts[0] != self.tracks[c].pts[0] || whole {
            // go through the interior of the first segment so the walk never runs along an edge
            let s0 = built.comp.segments[0];
            let via = s0.from.lerp(s0.to, q(1, 2));
            let walk = surface
                .walk(
                    SurfPt {
                        square: track.square,
                        p: via,
                    },
                    track.pts[0] - via,
                )
                .map_err(|e| PerturbError::Invalid {
                    index,
                    err: e.into(),
                })?;
            let inv = walk.motion.inverse();
            track.pts = track.pts.iter().map(|&x| inv.apply(x)).collect();
            track.square = walk.end.square;
        }
        let label = built.comp.label.clone();
        let b = track
            .build(surface, &label)
            .map_err(|err| PerturbError::Invalid { index, err })?;
        self.tracks[c] = track;
        self.built[c] = b;
        Ok(())
    }
}

/// Applies a plan to a curve; the result is normalised.
pub fn apply_plan(
    surface: &SquareTiledSurface,
    curve: &ImmersedCurve,
    plan: &PerturbationPlan,
) -> Result<ImmersedCurve, PerturbError> {
    if plan.is_identity() {
        return Ok(curve.clone());
    }
    let mut tr =
        Tracked::plain(surface, curve).map_err(|err| PerturbError::Invalid { index: 0, err })?;
    for (i, mv) in plan.moves.iter().enumerate() {
        tr.check(surface, i, mv, &[], &plan.fixed_zones)?;
        tr.apply(surface, i, mv)?;
    }
    Ok(tr.curve().normalized(surface))
}

fn tangencies(
    surface: &SquareTiledSurface,
    curves: &[ImmersedCurve],
) -> Vec<(usize, usize, IntersectionPoint)> {
    let mut out = Vec::new();
    for i in 0..curves.len() {
        out.extend(
            self_intersections(surface, &curves[i])
                .into_iter()
                .filter(|p| !p.transverse)
                .map(|p| (i, i, p)),
        );
        for j in i + 1..curves.len() {
            out.extend(
                fiber_product(surface, &curves[i], &curves[j])
                    .into_iter()
                    .filter(|p| !p.transverse)
                    .map(|p| (i, j, p)),
            );
        }
    }
    out
}

fn perp(v: Pt) -> Pt {
    Pt::new(-v.y, v.x)
}

fn sign(v: Q) -> i32 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// Moves `w` along a component (in the max-norm parameter); `None` if a window of
/// half-width `w` would cover the whole loop.
fn step(c: &Component, loc: Locator, w: Q, forward: bool) -> Option<Locator> {
    let total: Q = c.segments.iter().map(|s| linf(s.dir())).sum();
    if w * Q::from_integer(2) >= total {
        return None;
    }
    let n = c.len();
    let (mut seg, mut t, mut rem) = (loc.seg, loc.t, w);
    loop {
        let l = linf(c.segments[seg].dir());
        let avail = if forward { (Q::one() - t) * l } else { t * l };
        if rem < avail {
            let t = if forward { t + rem / l } else { t - rem / l };
            return Some(Locator {
                comp: loc.comp,
                seg,
                t,
            });
        }
        rem -= avail;
        if forward {
            seg = (seg + 1) % n;
            t = Q::zero();
        } else {
            seg = (seg + n - 1) % n;
            t = Q::one();
        }
    }
}

/// Push direction for the `b` branch at a tangency, scaled to max-norm 1.
fn push_direction(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    p: &IntersectionPoint,
) -> Option<(Pt, bool)> {
    let pb = b.point_at(p.b);
    let pa = a.point_at(p.a);
    let m = surface.frame_between(pb, pa)?;
    let (ai, ao) = a.rays_at(p.a);
    let (ai, ao) = (m.apply_vec(ai), m.apply_vec(ao));
    let (bi, bo) = b.rays_at(p.b);
    let parallel = ao.cross(bo).is_zero()
        || ao.cross(bi).is_zero()
        || ai.cross(bo).is_zero()
        || ai.cross(bi).is_zero();
    let mut n = if parallel {
        perp(bo)
    } else if ai.cross(ao).is_zero() {
        // push b's corner through the straight branch
        let side = sign(ao.cross(bi));
        if side > 0 {
            -perp(ao)
        } else {
            perp(ao)
        }
    } else {
        let tb = bo - bi;
        let (s1, s2) = (sign(tb.cross(ai)), sign(tb.cross(ao)));
        if s1 == s2 && s1 != 0 {
            if s1 > 0 {
                perp(tb)
            } else {
                -perp(tb)
            }
        } else if sign(tb.cross(bi)) > 0 {
            -perp(tb)
        } else {
            perp(tb)
        }
    };
    let l = linf(n);
    if l.is_zero() {
        return None;
    }
    n = n.scale(Q::one() / l);
    // smaller square index wins when the two sides differ
    let eps = q(1, 1 << 12);
    let side = |v: Pt| surface.walk(pb, v.scale(eps)).ok().map(|w| w.end.square);
    if let (Some(x), Some(y)) = (side(n), side(-n)) {
        if y < x {
            n = -n;
        }
    }
    Some((n, parallel))
}

fn candidates(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    p: &IntersectionPoint,
) -> Vec<Move> {
    let Some((n, parallel)) = push_direction(surface, a, b, p) else {
        return Vec::new();
    };
    let comp = &b.components[p.b.comp];
    let mut out = Vec::new();
    for k in 3..=14u32 {
        let eps = q(1, 1i128 << k);
        let radius = eps * Q::from_integer(2);
        let finger = |d: Pt| {
            let w = eps * Q::from_integer(4);
            let from = step(comp, p.b, w, false)?;
            let to = step(comp, p.b, w, true)?;
            (from != to).then_some(Move {
                from: b.normalize(from),
                to: b.normalize(to),
                displacement: d,
                radius,
            })
        };
        let whole = |d: Pt| Move {
            from: p.b,
            to: p.b,
            displacement: d,
            radius,
        };
        for d in [n.scale(eps), n.scale(-eps)] {
            if parallel {
                out.push(whole(d));
            }
            out.extend(finger(d));
        }
    }
    out
}

/// Pushes curves off each other until every crossing is transverse.
///
/// Returns the new curves and one plan per input curve (identity plans for untouched ones).
pub fn make_transverse(
    surface: &SquareTiledSurface,
    curves: &[ImmersedCurve],
    fixed_zones: &[Zone],
) -> Result<(Vec<ImmersedCurve>, Vec<PerturbationPlan>), PerturbError> {
    let mut tracked = Vec::with_capacity(curves.len());
    for c in curves {
        tracked.push(
            Tracked::plain(surface, c).map_err(|err| PerturbError::Invalid { index: 0, err })?,
        );
    }
    let mut plans: Vec<PerturbationPlan> = curves
        .iter()
        .map(|c| PerturbationPlan {
            target: c.label.clone(),
            moves: Vec::new(),
            fixed_zones: fixed_zones.to_vec(),
        })
        .collect();
    loop {
        let current: Vec<ImmersedCurve> = tracked.iter().map(|t| t.curve()).collect();
        let bad = tangencies(surface, &current);
        let Some(&(i, j, p)) = bad.first() else { break };
        let mut resolved = false;
        for mv in candidates(surface, &current[i], &current[j], &p) {
            let index = plans[j].moves.len();
            let mut t = tracked[j].clone();
            if t.check(surface, index, &mv, &[], fixed_zones).is_err()
                || t.apply(surface, index, &mv).is_err()
            {
                continue;
            }
            let mut trial = current.clone();
            trial[j] = t.curve();
            if tangencies(surface, &trial).len() < bad.len() {
                tracked[j] = t;
                plans[j].moves.push(mv);
                resolved = true;
                break;
            }
        }
        if !resolved {
            return Err(PerturbError::Unresolvable { at: p.ambient });
        }
    }
    let out = curves
        .iter()
        .zip(&tracked)
        .zip(&plans)
        .map(|((c, t), plan)| {
            if plan.is_identity() {
                c.clone()
            } else {
                t.curve().normalized(surface)
            }
        })
        .collect();
    Ok((out, plans))
}

/// A point of the correspondence surface kept fixed by a lifted move, with its second image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub point: SurfPt,
    pub image2: SurfPt,
}

/// A move on the correspondence: the stretch is given on the preimage curve in `F`
/// and only the first map is changed there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedMove {
    pub from: Locator,
    pub to: Locator,
    /// Squares of `F` under the stretch (the sheet that moves).
    pub sheet: Vec<usize>,
    pub displacement: Pt,
    pub radius: Q,
    pub anchors: Vec<Anchor>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedPlan {
    pub correspondence: String,
    pub moves: Vec<LiftedMove>,
}

fn fold_zones(f: &Correspondence) -> Vec<Zone> {
    f.g1.detect_folds()
        .critical_values
        .iter()
        .enumerate()
        .map(|(i, c)| Zone {
            label: format!("fold image {i}"),
            pieces: c
                .iter()
                .map(|p| Segment {
                    square: p.square,
                    from: p.from,
                    to: p.to,
                })
                .collect(),
            radius: Q::zero(),
        })
        .collect()
}

fn composed_tracks(
    f: &Correspondence,
    l2: &ImmersedCurve,
) -> Result<(Tracked, crate::correspondence::Composition), PerturbError> {
    let comp = f.compose(l2)?;
    let src = comp
        .pieces
        .iter()
        .map(|cs| {
            cs.iter()
                .map(|p| Src {
                    seg: p.f_seg,
                    t0: p.u0,
                    t1: p.u1,
                })
                .collect()
        })
        .collect();
    let tr = Tracked::new(&f.g1.target, &comp.curve, src)
        .map_err(|err| PerturbError::Invalid { index: 0, err })?;
    Ok((tr, comp))
}

/// Lifts a plan on the composed curve to a move of the correspondence that keeps
/// the second map fixed; supports must stay off the first map's fold image.
pub fn lift_perturbation(
    f: &Correspondence,
    l2: &ImmersedCurve,
    plan: &PerturbationPlan,
) -> Result<LiftedPlan, PerturbError> {
    let (mut tr, comp) = composed_tracks(f, l2)?;
    let folds = fold_zones(f);
    let surface = &f.g1.target;
    let preimage = &comp.lifted.curve;
    let mut moves = Vec::new();
    for (i, mv) in plan.moves.iter().enumerate() {
        tr.check(surface, i, mv, &folds, &plan.fixed_zones)?;
        let c = mv.from.comp;
        let (ff, ft) = {
            let b = &tr.built[c];
            let t = &tr.tracks[c];
            (t.prov(b.pos(mv.from)), t.prov(b.pos(mv.to)))
        };
        let from = preimage.normalize(Locator {
            comp: c,
            seg: ff.0,
            t: ff.1,
        });
        let to = preimage.normalize(Locator {
            comp: c,
            seg: ft.0,
            t: ft.1,
        });
        let n = preimage.components[c].len();
        let mut sheet = Vec::new();
        let mut anchors = Vec::new();
        let count = if mv.is_translation() {
            n
        } else {
            (to.seg + n - from.seg) % n + 1
        };
        for k in 0..count {
            sheet.push(preimage.segment(c, (from.seg + k) % n).square);
        }
        sheet.dedup();
        sheet.sort_unstable();
        sheet.dedup();
        for loc in [from, to] {
            let point = preimage.point_at(loc);
            anchors.push(Anchor {
                point,
                image2: f.g2.apply(point),
            });
        }
        tr.apply(surface, i, mv)?;
        moves.push(LiftedMove {
            from,
            to,
            sheet,
            displacement: mv.displacement,
            radius: mv.radius,
            anchors,
        });
    }
    Ok(LiftedPlan {
        correspondence: f.name.clone(),
        moves,
    })
}

/// Composition through the correspondence after a lifted plan has moved its first map.
pub fn perturbed_compose(
    f: &Correspondence,
    l2: &ImmersedCurve,
    lifted: &LiftedPlan,
) -> Result<ImmersedCurve, PerturbError> {
    let (mut tr, comp) = composed_tracks(f, l2)?;
    if lifted.moves.is_empty() {
        return Ok(comp.curve);
    }
    for (i, lm) in lifted.moves.iter().enumerate() {
        let c = lm.from.comp;
        let loc = |l: Locator| -> Result<Locator, PerturbError> {
            let pos = tr.tracks[c]
                .pos_of(l.seg, l.t)
                .ok_or(PerturbError::LostProvenance { index: i })?;
            Ok(tr.built[c].locator(c, pos))
        };
        let mv = Move {
            from: loc(lm.from)?,
            to: loc(lm.to)?,
            displacement: lm.displacement,
            radius: lm.radius,
        };
        if mv.is_translation() != (lm.from == lm.to) {
            return Err(PerturbError::LostProvenance { index: i });
        }
        tr.apply(&f.g1.target, i, &mv)?;
    }
    Ok(tr.curve().normalized(&f.g1.target))
}

/// Whether composing after the lift reproduces the plan applied to the composed curve.
pub fn round_trip(
    f: &Correspondence,
    l2: &ImmersedCurve,
    plan: &PerturbationPlan,
) -> Result<bool, PerturbError> {
    let composed = f.compose(l2)?.curve;
    let direct = apply_plan(&f.g1.target, &composed, plan)?;
    let lifted = lift_perturbation(f, l2, plan)?;
    let again = perturbed_compose(f, l2, &lifted)?;
    Ok(direct.same_as(&again, &f.g1.target))
}
