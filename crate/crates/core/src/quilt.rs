//! Quilted generators, the three-way generator identification, lifting bigons
//! through a correspondence, and folding quilts into strips.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;
use thiserror::Error;

use crate::correspondence::{Composition, Correspondence, CorrespondenceError};
use crate::curve::{ImmersedCurve, Locator};
use crate::discs::CombinatorialDisc;
use crate::geom::{
    clip_convex, point_in_polygon, seg_intersect, signed_area2, Affine, Containment, Motion, Pt,
    SegHit, Q,
};
use crate::intersect::{fiber_product, IntersectionPoint};
use crate::surface::{corner, SquareTiledSurface, SurfPt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuiltError {
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error("{view}: non-transverse intersection at {at}")]
    NonTransverse { view: &'static str, at: SurfPt },
    #[error("generator views disagree: {0}")]
    Mismatch(String),
    #[error("not liftable: {0}")]
    NotLiftable(String),
    #[error("disc boundary carries no composition provenance")]
    MissingProvenance,
}

/// A point `f` of the correspondence surface over `x1` on `L1` and `x2` on `L2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuiltedGenerator {
    pub x1: Locator,
    pub f: SurfPt,
    pub x2: Locator,
    /// The same point on the preimages `g1^-1(L1)` and `g2^-1(L2)`.
    pub p1: Locator,
    pub p2: Locator,
}

impl std::fmt::Display for QuiltedGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} | {} | {})", self.x1, self.f, self.x2)
    }
}

/// Quilted generators and their bijections onto the two composed complexes.
#[derive(Clone, Debug)]
pub struct GeneratorTable {
    pub quilted: Vec<QuiltedGenerator>,
    /// `F ∘ L2` on `F1`.
    pub composed: Composition,
    /// `L1 ∘ F` on `F2`.
    pub left: Composition,
    /// Generators of `CF(L1, F∘L2)`.
    pub view1: Vec<IntersectionPoint>,
    /// Generators of `CF(L1∘F, L2)`.
    pub view2: Vec<IntersectionPoint>,
    pub to_view1: Vec<usize>,
    pub to_view2: Vec<usize>,
}

fn lookup(points: &[IntersectionPoint]) -> BTreeMap<(Locator, Locator), usize> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.a, p.b), i))
        .collect()
}

fn check_transverse(view: &'static str, points: &[IntersectionPoint]) -> Result<(), QuiltError> {
    match points.iter().find(|p| !p.transverse) {
        Some(p) => Err(QuiltError::NonTransverse {
            view,
            at: p.ambient,
        }),
        None => Ok(()),
    }
}

impl GeneratorTable {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.view1.len(), self.quilted.len(), self.view2.len())
    }

    /// Quilted generator over a generator of `CF(L1, F∘L2)`.
    pub fn from_view1(&self, i: usize) -> Option<usize> {
        let y = self.view1[i];
        let p2 = self.composed.lift_locator(y.b);
        let hits: Vec<usize> = (0..self.quilted.len())
            .filter(|&k| self.quilted[k].p2 == p2 && self.quilted[k].x1 == y.a)
            .collect();
        (hits.len() == 1).then(|| hits[0])
    }

    /// Quilted generator over a generator of `CF(L1∘F, L2)`.
    pub fn from_view2(&self, i: usize) -> Option<usize> {
        let y = self.view2[i];
        let p1 = self.left.lift_locator(y.a);
        let hits: Vec<usize> = (0..self.quilted.len())
            .filter(|&k| self.quilted[k].p1 == p1 && self.quilted[k].x2 == y.b)
            .collect();
        (hits.len() == 1).then(|| hits[0])
    }

    /// Whether both bijections compose to the identity in each direction.
    pub fn round_trips(&self) -> bool {
        let n = self.quilted.len();
        if self.view1.len() != n || self.view2.len() != n {
            return false;
        }
        (0..n).all(|k| {
            self.from_view1(self.to_view1[k]) == Some(k)
                && self.from_view2(self.to_view2[k]) == Some(k)
        }) && (0..n).all(|i| self.from_view1(i).map(|k| self.to_view1[k]) == Some(i))
            && (0..n).all(|i| self.from_view2(i).map(|k| self.to_view2[k]) == Some(i))
    }
}

/// The three generator sets of the quilted setup and the maps between them.
pub fn identify_generators(
    l1: &ImmersedCurve,
    f: &Correspondence,
    l2: &ImmersedCurve,
) -> Result<GeneratorTable, QuiltError> {
    let composed = f.compose(l2)?;
    let left = f.compose_left(l1)?;
    let big_f = f.total();
    let quilt_pts = fiber_product(big_f, &left.lifted.curve, &composed.lifted.curve);
    check_transverse("quilt", &quilt_pts)?;
    let view1 = fiber_product(&f.g1.target, l1, &composed.curve);
    check_transverse("F1", &view1)?;
    let view2 = fiber_product(&f.g2.target, &left.curve, l2);
    check_transverse("F2", &view2)?;
    let mut quilted: Vec<QuiltedGenerator> = quilt_pts
        .iter()
        .map(|p| QuiltedGenerator {
            x1: left.lifted.source_locator(p.a),
            f: p.ambient,
            x2: composed.lifted.source_locator(p.b),
            p1: p.a,
            p2: p.b,
        })
        .collect();
    quilted.sort();
    for g in &quilted {
        let ok1 = f.g1.target.same_point(f.g1.apply(g.f), l1.point_at(g.x1));
        let ok2 = f.g2.target.same_point(f.g2.apply(g.f), l2.point_at(g.x2));
        if !ok1 || !ok2 {
            return Err(QuiltError::Mismatch(format!(
                "inconsistent quilted generator {g}"
            )));
        }
    }
    let (idx1, idx2) = (lookup(&view1), lookup(&view2));
    let mut to_view1 = Vec::with_capacity(quilted.len());
    let mut to_view2 = Vec::with_capacity(quilted.len());
    for g in &quilted {
        let y = composed.from_lifted(g.p2);
        let i = idx1
            .get(&(g.x1, y))
            .ok_or_else(|| QuiltError::Mismatch(format!("{g} has no image in CF(L1, F∘L2)")))?;
        let x = left.from_lifted(g.p1);
        let j = idx2
            .get(&(x, g.x2))
            .ok_or_else(|| QuiltError::Mismatch(format!("{g} has no image in CF(L1∘F, L2)")))?;
        to_view1.push(*i);
        to_view2.push(*j);
    }
    Ok(GeneratorTable {
        quilted,
        composed,
        left,
        view1,
        view2,
        to_view1,
        to_view2,
    })
}

/// Part of a lifted disc inside one square of the correspondence surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedPiece {
    pub square: usize,
    /// Counterclockwise, in the square's frame.
    pub polygon: Vec<Pt>,
    /// Square frame into the plane of the input disc.
    pub to_u1: Affine,
    /// Square frame into the plane of the second component.
    pub to_u2: Affine,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiltedDisc {
    pub u1: CombinatorialDisc,
    pub pieces: Vec<LiftedPiece>,
    /// Square of `F2` whose frame carries `u2`.
    pub u2_base: usize,
    /// Second component, piece by piece, in the developed plane of `u2_base`.
    pub u2: Vec<Vec<Pt>>,
    /// Lifted vertices of the boundary arc on `F∘L2`, from `x_plus` to `x_minus`.
    pub seam: Vec<SurfPt>,
    /// Quilted generators at `x_plus` and `x_minus`.
    pub endpoints: [usize; 2],
    pub index: u32,
}

fn ccw(poly: Vec<Pt>) -> Vec<Pt> {
    if signed_area2(&poly) < Q::zero() {
        poly.into_iter().rev().collect()
    } else {
        poly
    }
}

fn unit_square() -> Vec<Pt> {
    (0..4).map(corner).collect()
}

/// Whether some point of the open segment lies strictly inside the polygon.
fn segment_enters(a: Pt, b: Pt, poly: &[Pt]) -> bool {
    let mut ts = vec![Q::zero(), Q::from_integer(1)];
    let n = poly.len();
    for i in 0..n {
        match seg_intersect(a, b, poly[i], poly[(i + 1) % n]) {
            SegHit::None => {}
            SegHit::Point { t, .. } => ts.push(t),
            SegHit::Overlap { t0, t1, .. } => {
                ts.push(t0);
                ts.push(t1);
            }
        }
    }
    ts.sort();
    ts.dedup();
    ts.windows(2).any(|w| {
        point_in_polygon(a.lerp(b, (w[0] + w[1]) / Q::from_integer(2)), poly) == Containment::Inside
    })
}

fn on_curve(surface: &SquareTiledSurface, c: &ImmersedCurve, p: SurfPt) -> bool {
    let mut reps = vec![p];
    for e in SquareTiledSurface::sides_of(p.p) {
        reps.push(surface.across(p, e));
    }
    c.components
        .iter()
        .flat_map(|k| k.segments.iter())
        .any(|s| {
            reps.iter().any(|r| {
                r.square == s.square
                    && (s.to - s.from).cross(r.p - s.from).is_zero()
                    && (r.p - s.from).dot(r.p - s.to) <= Q::zero()
            })
        })
}

const MAX_LIFT_SQUARES: usize = 4096;

/// Lifts a bigon between `L1` and `F∘L2` on `F1` to a quilted disc through `F`.
///
/// The lift starts at the sheet recorded by the composition at `x_plus` and follows
/// the region square by square; crossing a fold edge of `g1`, leaving the image of
/// `g1`, or disagreeing with the recorded sheets along the seam is `NotLiftable`.
pub fn lift_bigon_to_quilt(
    u: &CombinatorialDisc,
    l1: &ImmersedCurve,
    f: &Correspondence,
    table: &GeneratorTable,
) -> Result<QuiltedDisc, QuiltError> {
    let composed = &table.composed;
    if !u.is_bigon() || u.arcs[0].curve != l1.label || u.arcs[1].curve != composed.curve.label {
        return Err(QuiltError::MissingProvenance);
    }
    let (g1, g2) = (&f.g1, &f.g2);
    let big_f = f.total();
    let f1 = &g1.target;
    let (xp, xm) = (u.corners[0], u.corners[1]);
    let base_pt = l1.point_at(xp.a);
    let c_pt = composed.curve.point_at(xp.b);
    let mb = f1
        .frame_between(base_pt, c_pt)
        .ok_or(QuiltError::MissingProvenance)?;
    let p2 = composed.lift_locator(xp.b);
    let start = composed.lifted.curve.point_at(p2);
    let branch = g1
        .branches(start.square)
        .into_iter()
        .find_map(|(t, b)| {
            let img = SurfPt {
                square: t,
                p: b.apply(start.p),
            };
            crate::geom::in_unit(img.p).then_some(())?;
            let m = f1.frame_between(c_pt, img)?;
            Some(
                Affine::from_motion(&mb)
                    .after(&Affine::from_motion(&m))
                    .after(&b),
            )
        })
        .ok_or(QuiltError::MissingProvenance)?;
    let start_g2 = g2.branches(start.square)[0];
    let u2_base = start_g2.0;

    let region = &u.region;
    let mut seen: BTreeSet<(usize, [[Q; 3]; 2])> = BTreeSet::new();
    let mut queue = VecDeque::new();
    queue.push_back((start.square, branch, start_g2.1));
    seen.insert((start.square, branch.rows()));
    let mut pieces = Vec::new();
    let mut area2 = Q::zero();
    while let Some((s, g, h)) = queue.pop_front() {
        if seen.len() > MAX_LIFT_SQUARES {
            return Err(QuiltError::NotLiftable("region is too large".into()));
        }
        let image = ccw(unit_square().iter().map(|&p| g.apply(p)).collect());
        let clipped = clip_convex(region, &image);
        if clipped.len() >= 3 && signed_area2(&clipped) > Q::zero() {
            area2 += signed_area2(&clipped);
            let inv = g.inverse().expect("branches are invertible");
            let polygon = ccw(clipped.iter().map(|&p| inv.apply(p)).collect());
            pieces.push(LiftedPiece {
                square: s,
                polygon,
                to_u1: g,
                to_u2: h,
            });
        }
        for e in 0..4u8 {
            let (a, b) = (g.apply(corner(e)), g.apply(corner(e + 1)));
            if !segment_enters(a, b, region) {
                continue;
            }
            if g1.is_fold_edge(s, e) {
                return Err(QuiltError::NotLiftable(format!(
                    "region crosses the fold image of side {e} of square {s}"
                )));
            }
            let (t, g_next) = g1.develop_across(&g, s, e);
            let (_, h_next) = g2.develop_across(&h, s, e);
            if seen.insert((t, g_next.rows())) {
                queue.push_back((t, g_next, h_next));
            }
        }
    }
    let total2 = signed_area2(region);
    if area2 < total2 {
        return Err(QuiltError::NotLiftable(
            "region leaves the image of g1".into(),
        ));
    }
    if area2 > total2 {
        return Err(QuiltError::NotLiftable("lifted sheets overlap".into()));
    }

    let lift_at = |v: Pt| -> Vec<SurfPt> {
        let mut out = BTreeSet::new();
        for piece in &pieces {
            let inv = piece.to_u1.inverse().expect("invertible");
            let z = inv.apply(v);
            if crate::geom::in_unit(z) {
                out.insert(big_f.canonical(SurfPt {
                    square: piece.square,
                    p: z,
                }));
            }
        }
        out.into_iter().collect()
    };
    // corner x_minus sits at region[0]; x_plus closes the a-side path
    let na = u.arcs[0].pieces + 1;
    let expected_minus =
        big_f.canonical(composed.lifted.curve.point_at(composed.lift_locator(xm.b)));
    if !lift_at(region[0]).contains(&expected_minus) {
        return Err(QuiltError::NotLiftable(
            "seam sheet at x_minus disagrees with the composition".into(),
        ));
    }
    let mut seam = vec![big_f.canonical(start)];
    let c_side: Vec<Pt> = region[na..].iter().rev().copied().collect();
    for v in c_side {
        let lifted = lift_at(v);
        match lifted
            .iter()
            .find(|p| on_curve(big_f, &composed.lifted.curve, **p))
        {
            Some(p) => seam.push(*p),
            None => {
                return Err(QuiltError::NotLiftable(
                    "seam leaves the preimage of L2".into(),
                ))
            }
        }
    }
    seam.push(expected_minus);

    let find = |x: &IntersectionPoint| -> Result<usize, QuiltError> {
        let i = table
            .view1
            .iter()
            .position(|y| y.a == x.a && y.b == x.b)
            .ok_or(QuiltError::MissingProvenance)?;
        table.from_view1(i).ok_or(QuiltError::MissingProvenance)
    };
    let endpoints = [find(&xp)?, find(&xm)?];
    let u2 = pieces
        .iter()
        .map(|p| p.polygon.iter().map(|&z| p.to_u2.apply(z)).collect())
        .collect();
    let disc = QuiltedDisc {
        u1: u.clone(),
        pieces,
        u2_base,
        u2,
        seam,
        endpoints,
        index: u.index,
    };
    if !projection_matches(&disc) {
        return Err(QuiltError::NotLiftable(
            "projection does not reproduce the disc".into(),
        ));
    }
    Ok(disc)
}

/// `g1 ∘ lift` against the input disc: every lifted vertex lands in the region,
/// every region vertex is hit, and areas agree.
pub fn projection_matches(q: &QuiltedDisc) -> bool {
    let region = &q.u1.region;
    let mut hit = vec![false; region.len()];
    let mut area2 = Q::zero();
    for piece in &q.pieces {
        let img: Vec<Pt> = piece
            .polygon
            .iter()
            .map(|&z| piece.to_u1.apply(z))
            .collect();
        if img
            .iter()
            .any(|&v| point_in_polygon(v, region) == Containment::Outside)
        {
            return false;
        }
        for (i, v) in region.iter().enumerate() {
            if img.contains(v) {
                hit[i] = true;
            }
        }
        area2 += crate::geom::abs(signed_area2(&img));
    }
    hit.into_iter().all(|h| h) && area2 == signed_area2(region)
}

/// A quilt seen as one strip in `F1 × F2`: the second factor is reflected, which
/// reverses its orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripData {
    pub first: Vec<Vec<Pt>>,
    pub second_reflected: Vec<Vec<Pt>>,
    pub seam: Vec<SurfPt>,
    pub squares: Vec<usize>,
}

pub fn fold_quilt_to_strip(q: &QuiltedDisc) -> StripData {
    StripData {
        first: q
            .pieces
            .iter()
            .map(|p| p.polygon.iter().map(|&z| p.to_u1.apply(z)).collect())
            .collect(),
        second_reflected: q
            .u2
            .iter()
            .map(|poly| poly.iter().rev().copied().collect())
            .collect(),
        seam: q.seam.clone(),
        squares: q.pieces.iter().map(|p| p.square).collect(),
    }
}

/// Inverse of [`fold_quilt_to_strip`] given the original disc data.
pub fn unfold_strip(strip: &StripData, template: &QuiltedDisc) -> QuiltedDisc {
    let mut q = template.clone();
    q.u2 = strip
        .second_reflected
        .iter()
        .map(|poly| poly.iter().rev().copied().collect())
        .collect();
    q.seam = strip.seam.clone();
    for (piece, (poly, &s)) in q
        .pieces
        .iter_mut()
        .zip(strip.first.iter().zip(&strip.squares))
    {
        let inv = piece.to_u1.inverse().expect("invertible");
        piece.polygon = poly.iter().map(|&v| inv.apply(v)).collect();
        piece.square = s;
    }
    q
}

/// The rigid motion taking `u2` onto the input disc when `g1 = g2`, if one exists.
pub fn rigid_between_components(q: &QuiltedDisc) -> Option<Motion> {
    let first = q.pieces.first()?;
    let m = first.to_u1.after(&first.to_u2.inverse()?);
    let motion = (0..4u8)
        .map(|rot| Motion { rot, shift: m.c })
        .find(|mo| Affine::from_motion(mo) == m)?;
    q.pieces
        .iter()
        .all(|p| p.to_u1.after(&p.to_u2.inverse().unwrap()) == m)
        .then_some(motion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discs::{BigonSearch, SearchOptions};
    use crate::fixtures::{covering_map, geodesic, grid_fold, polyline, wiggled};
    use crate::geom::q;

    fn finger(t: &SquareTiledSurface) -> ImmersedCurve {
        polyline(
            t,
            "L1",
            0,
            vec![
                Pt::new(q(1, 4), q(0, 1)),
                Pt::new(q(1, 4), q(3, 4)),
                Pt::new(q(3, 4), q(1, 4)),
                Pt::new(q(3, 4), q(3, 4)),
                Pt::new(q(1, 4), q(1, 1)),
            ],
        )
        .unwrap()
    }

    fn bigons(
        t: &SquareTiledSurface,
        a: &ImmersedCurve,
        b: &ImmersedCurve,
    ) -> Vec<CombinatorialDisc> {
        let s = BigonSearch::new(t, a, b, &SearchOptions::default()).unwrap();
        (0..s.table.points.len())
            .flat_map(|i| s.from_generator(i))
            .collect()
    }

    #[test]
    fn diagonal_identifies_with_fiber_product() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let f = Correspondence::diagonal(&t);
        let l1 = finger(&t);
        let l2 = geodesic(&t, "L2", 1, 1, (1, 0), Pt::new(q(0, 1), q(1, 2))).unwrap();
        let table = identify_generators(&l1, &f, &l2).unwrap();
        assert_eq!(table.counts(), (3, 3, 3));
        assert_eq!(table.view1, fiber_product(&t, &l1, &l2));
        assert!(table.round_trips());
    }

    #[test]
    fn disjoint_curves_give_empty_table() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let f = Correspondence::diagonal(&t);
        let l1 = geodesic(&t, "L1", 1, 1, (1, 0), Pt::new(q(0, 1), q(1, 3))).unwrap();
        let l2 = geodesic(&t, "L2", 1, 1, (1, 0), Pt::new(q(0, 1), q(2, 3))).unwrap();
        assert_eq!(
            identify_generators(&l1, &f, &l2).unwrap().counts(),
            (0, 0, 0)
        );
    }

    #[test]
    fn diagonal_lift_is_identity() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let f = Correspondence::diagonal(&t);
        let l1 = finger(&t);
        let l2 = geodesic(&t, "L2", 1, 1, (1, 0), Pt::new(q(0, 1), q(1, 2))).unwrap();
        let table = identify_generators(&l1, &f, &l2).unwrap();
        let discs = bigons(&t, &l1, &table.composed.curve);
        assert_eq!(discs.len(), 2);
        for d in &discs {
            let qd = lift_bigon_to_quilt(d, &l1, &f, &table).unwrap();
            assert!(projection_matches(&qd));
            assert!(rigid_between_components(&qd).is_some());
            let strip = fold_quilt_to_strip(&qd);
            assert_eq!(unfold_strip(&strip, &qd), qd);
        }
    }

    #[test]
    fn covering_lift_projects_back() {
        let g1 = covering_map((2, 1), (1, 1), (0, 0), false).unwrap();
        let g2 = covering_map((2, 1), (2, 1), (1, 0), false).unwrap();
        let f = Correspondence::new("F", g1, g2).unwrap();
        let l1 = finger(&f.g1.target);
        let l2 = wiggled(
            &f.g2.target,
            "L2",
            2,
            1,
            (1, 0),
            Pt::new(q(0, 1), q(1, 2)),
            &[],
        )
        .unwrap();
        let table = identify_generators(&l1, &f, &l2).unwrap();
        assert!(table.round_trips());
        let discs = bigons(&f.g1.target, &l1, &table.composed.curve);
        assert!(!discs.is_empty());
        for d in &discs {
            let qd = lift_bigon_to_quilt(d, &l1, &f, &table).unwrap();
            assert!(projection_matches(&qd));
        }
    }

    #[test]
    fn fold_blocks_some_lifts() {
        // g1 folds a 1x2 torus onto the lower row of another 1x2 torus; bigons reaching
        // the fold image need both sheets
        let g1 = grid_fold((1, 2), (1, 2), &[(0, false)], &[(0, false), (0, true)]).unwrap();
        let g2 = covering_map((1, 2), (1, 2), (0, 0), false).unwrap();
        let f = Correspondence::new("F", g1, g2).unwrap();
        let l2 = geodesic(&f.g2.target, "L2", 1, 2, (1, 1), Pt::new(q(1, 3), q(1, 7))).unwrap();
        let vertical =
            geodesic(&f.g2.target, "V", 1, 2, (0, 1), Pt::new(q(1, 2), q(1, 7))).unwrap();
        assert!(!f.composability(&vertical).composable);
        let l1 = polyline(
            &f.g1.target,
            "L1",
            0,
            vec![
                Pt::new(q(0, 1), q(1, 2)),
                Pt::new(q(2, 5), q(1, 2)),
                Pt::new(q(3, 5), q(2, 5)),
                Pt::new(q(9, 20), q(3, 5)),
                Pt::new(q(7, 10), q(1, 2)),
                Pt::new(q(1, 1), q(1, 2)),
            ],
        )
        .unwrap();
        let table = identify_generators(&l1, &f, &l2).unwrap();
        assert!(table.round_trips());
        let discs = bigons(&f.g1.target, &l1, &table.composed.curve);
        let (mut ok, mut blocked) = (0, 0);
        for d in &discs {
            match lift_bigon_to_quilt(d, &l1, &f, &table) {
                Ok(qd) => {
                    assert!(projection_matches(&qd));
                    ok += 1;
                }
                Err(QuiltError::NotLiftable(_)) => blocked += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(ok > 0 && blocked > 0, "{ok} liftable, {blocked} blocked");
    }
}
