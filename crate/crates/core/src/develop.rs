//! Unfolding curves into the plane along their square crossings.

use num_traits::{One, Zero};

use crate::curve::{ImmersedCurve, Locator};
use crate::geom::{seg_intersect, Motion, Pt, SegHit, Q};

/// One planar piece of a developed strand: part of segment `seg` between
/// parameters `t_start` and `t_end` (decreasing when walking backwards).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrandPiece {
    pub seg: usize,
    pub square: usize,
    pub t_start: Q,
    pub t_end: Q,
    pub from: Pt,
    pub to: Pt,
    /// Segment frame into the plane.
    pub motion: Motion,
}

impl StrandPiece {
    pub fn dir(&self) -> Pt {
        self.to - self.from
    }

    /// Segment parameter at fraction `s` of this piece.
    pub fn param_at(&self, s: Q) -> Q {
        self.t_start + (self.t_end - self.t_start) * s
    }
}

/// Develops component `loc.comp` from `loc` for exactly `nseg` segment lengths,
/// forwards or backwards, placing `loc`'s segment frame by `base`.
pub fn strand(
    curve: &ImmersedCurve,
    loc: Locator,
    forward: bool,
    nseg: usize,
    base: Motion,
) -> Vec<StrandPiece> {
    let loc = curve.normalize(loc);
    let comp = &curve.components[loc.comp];
    let n = comp.len();
    let mut out = Vec::new();
    let mut m = base;
    let mut k = loc.seg;
    let zero = Q::zero();
    let one = Q::one();
    let push = |out: &mut Vec<StrandPiece>, k: usize, a: Q, b: Q, m: Motion| {
        if a != b {
            let s = &comp.segments[k];
            out.push(StrandPiece {
                seg: k,
                square: s.square,
                t_start: a,
                t_end: b,
                from: m.apply(s.at(a)),
                to: m.apply(s.at(b)),
                motion: m,
            });
        }
    };
    if forward {
        push(&mut out, k, loc.t, one, m);
        for step in 1..=nseg {
            m = m.then_after(&comp.transition(k));
            k = (k + 1) % n;
            let end = if step == nseg { loc.t } else { one };
            push(&mut out, k, zero, end, m);
        }
    } else {
        push(&mut out, k, loc.t, zero, m);
        for step in 1..=nseg {
            let prev = (k + n - 1) % n;
            m = m.then_after(&comp.transition(prev).inverse());
            k = prev;
            let end = if step == nseg { loc.t } else { zero };
            push(&mut out, k, one, end, m);
        }
    }
    out
}

/// Planar unfolding of a curve arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DevelopedArc {
    pub start: Locator,
    pub base_point: Pt,
    pub points: Vec<Pt>,
    /// Squares crossed, in order (repeats when the arc bends inside a square).
    pub deck_word: Vec<usize>,
}

impl DevelopedArc {
    pub fn pieces(&self) -> impl Iterator<Item = (Pt, Pt)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Develops `steps` segment lengths forward from `start`, in the start segment's frame.
pub fn develop_arc(curve: &ImmersedCurve, start: Locator, steps: usize) -> DevelopedArc {
    let start = curve.normalize(start);
    let pieces = strand(curve, start, true, steps, Motion::identity());
    let base_point = curve.segment(start.comp, start.seg).at(start.t);
    let mut points = vec![base_point];
    points.extend(pieces.iter().map(|p| p.to));
    DevelopedArc {
        start,
        base_point,
        points,
        deck_word: pieces.iter().map(|p| p.square).collect(),
    }
}

/// Checks that each component's lift is embedded over `period_bound` periods.
///
/// This is a bounded certificate: a lift can still cross itself further out.
/// Components whose holonomy is trivial develop to closed loops, which must be simple.
pub fn is_embedded_lift(curve: &ImmersedCurve, period_bound: usize) -> bool {
    assert!(period_bound >= 1, "period bound must be positive");
    curve.components.iter().enumerate().all(|(ci, comp)| {
        let start = Locator {
            comp: ci,
            seg: 0,
            t: Q::zero(),
        };
        if comp.holonomy().is_identity() {
            let pts = comp.developed();
            closed_polyline_is_simple(&pts[..pts.len() - 1])
        } else {
            let pieces = strand(
                curve,
                start,
                true,
                period_bound * comp.len(),
                Motion::identity(),
            );
            let mut pts = vec![pieces[0].from];
            pts.extend(pieces.iter().map(|p| p.to));
            polyline_is_simple(&pts)
        }
    })
}

/// Open polyline without self-contact other than shared consecutive vertices.
pub fn polyline_is_simple(pts: &[Pt]) -> bool {
    let m = pts.len().saturating_sub(1);
    for i in 0..m {
        for j in i + 1..m {
            let hit = seg_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]);
            let ok = match hit {
                SegHit::None => true,
                SegHit::Point { t, u } => j == i + 1 && t == Q::one() && u.is_zero(),
                SegHit::Overlap { .. } => false,
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Closed polyline given without the repeated first vertex.
pub fn closed_polyline_is_simple(pts: &[Pt]) -> bool {
    let m = pts.len();
    if m < 3 {
        return false;
    }
    for i in 0..m {
        for j in i + 1..m {
            let (a0, a1) = (pts[i], pts[(i + 1) % m]);
            let (b0, b1) = (pts[j], pts[(j + 1) % m]);
            let adjacent_fwd = j == i + 1;
            let adjacent_wrap = i == 0 && j == m - 1;
            let ok = match seg_intersect(a0, a1, b0, b1) {
                SegHit::None => true,
                SegHit::Point { t, u } => {
                    (adjacent_fwd && t == Q::one() && u.is_zero())
                        || (adjacent_wrap && t.is_zero() && u == Q::one())
                }
                SegHit::Overlap { .. } => false,
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DevelopedSpec;
    use crate::geom::{q, qi};
    use crate::surface::SquareTiledSurface;

    fn curve(t: &SquareTiledSurface, pts: Vec<Pt>) -> ImmersedCurve {
        ImmersedCurve::from_developed(
            t,
            "c",
            &[DevelopedSpec {
                label: "c".into(),
                square: 0,
                points: pts,
            }],
        )
        .unwrap()
    }

    #[test]
    fn horizontal_develops_straight() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = curve(&t, vec![Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(1, 2))]);
        let arc = develop_arc(
            &h,
            Locator {
                comp: 0,
                seg: 0,
                t: qi(0),
            },
            3,
        );
        assert_eq!(arc.points.first(), Some(&Pt::new(qi(0), q(1, 2))));
        assert_eq!(arc.points.last(), Some(&Pt::new(qi(3), q(1, 2))));
        assert!(arc.points.iter().all(|p| p.y == q(1, 2)));
        assert_eq!(arc.deck_word, vec![0, 0, 0]);
    }

    #[test]
    fn diagonal_develops_straight() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let d = curve(&t, vec![Pt::new(q(1, 3), qi(0)), Pt::new(q(4, 3), qi(1))]);
        let n = d.components[0].len();
        let arc = develop_arc(
            &d,
            Locator {
                comp: 0,
                seg: 0,
                t: qi(0),
            },
            2 * n,
        );
        let first = arc.points[0];
        let last = *arc.points.last().unwrap();
        assert_eq!(last - first, Pt::int(2, 2));
        for p in &arc.points {
            assert_eq!((*p - first).cross(Pt::int(1, 1)), qi(0));
        }
    }

    #[test]
    fn backward_strand_mirrors_forward() {
        let t = SquareTiledSurface::torus_grid("T", 2, 1);
        let w = curve(
            &t,
            vec![
                Pt::new(qi(0), q(1, 3)),
                Pt::new(q(1, 2), q(2, 3)),
                Pt::new(qi(2), q(1, 3)),
            ],
        );
        let loc = Locator {
            comp: 0,
            seg: 1,
            t: q(1, 4),
        };
        let n = w.components[0].len();
        let fwd = strand(&w, loc, true, n, Motion::identity());
        let bwd = strand(&w, loc, false, n, Motion::identity());
        assert_eq!(fwd.last().unwrap().to - fwd[0].from, Pt::int(2, 0));
        assert_eq!(bwd.last().unwrap().to - bwd[0].from, Pt::int(-2, 0));
        assert_eq!(fwd[0].from, bwd[0].from);
    }

    #[test]
    fn strand_extension_is_prefix() {
        let t = SquareTiledSurface::torus_grid("T", 2, 2);
        let c = curve(
            &t,
            vec![
                Pt::new(q(1, 5), qi(0)),
                Pt::new(q(3, 5), q(3, 2)),
                Pt::new(q(1, 5), qi(2)),
            ],
        );
        let loc = Locator {
            comp: 0,
            seg: 0,
            t: q(1, 2),
        };
        let a = develop_arc(&c, loc, 3);
        let b = develop_arc(&c, loc, 5);
        assert_eq!(
            &b.points[..a.points.len() - 1],
            &a.points[..a.points.len() - 1]
        );
    }

    #[test]
    fn embedded_lifts() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let g = curve(&t, vec![Pt::new(q(1, 3), qi(0)), Pt::new(q(4, 3), qi(1))]);
        assert!(is_embedded_lift(&g, 4));
        let wig = curve(
            &t,
            vec![
                Pt::new(qi(0), q(1, 3)),
                Pt::new(q(1, 2), q(2, 3)),
                Pt::new(qi(1), q(1, 3)),
            ],
        );
        assert!(is_embedded_lift(&wig, 4));
    }

    #[test]
    fn looping_lift_is_not_embedded() {
        let t = SquareTiledSurface::torus_grid("T", 3, 3);
        // horizontal curve with a curl that crosses itself inside one period
        let pts = vec![
            Pt::new(qi(0), q(1, 2)),
            Pt::new(q(5, 2), q(1, 2)),
            Pt::new(q(5, 2), q(3, 2)),
            Pt::new(q(3, 2), q(3, 2)),
            Pt::new(q(3, 2), q(-1, 2)),
            Pt::new(q(5, 2), q(-1, 2)),
            Pt::new(q(5, 2), q(1, 4)),
            Pt::new(qi(3), q(1, 2)),
        ];
        let c = curve(&t, pts);
        assert!(!is_embedded_lift(&c, 1));
    }
}
