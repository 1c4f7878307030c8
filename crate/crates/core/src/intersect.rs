//! Fiber products of immersed curves: crossings listed per pair of preimages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::curve::{ImmersedCurve, Locator};
use crate::geom::{angle_cmp, seg_intersect, Motion, Pt, SegHit};
use crate::surface::{SquareTiledSurface, SurfPt};

/// An element of the fiber product `a ×_X b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntersectionPoint {
    pub a: Locator,
    pub b: Locator,
    pub ambient: SurfPt,
    pub transverse: bool,
}

impl IntersectionPoint {
    pub fn swapped(&self) -> IntersectionPoint {
        IntersectionPoint {
            a: self.b,
            b: self.a,
            ambient: self.ambient,
            transverse: self.transverse,
        }
    }
}

impl fmt::Display for IntersectionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} | {}] at {}{}",
            self.a,
            self.b,
            self.ambient,
            if self.transverse { "" } else { " (tangential)" }
        )
    }
}

/// All points `(x, y)` with `a(x) = b(y)`, each pair of preimages listed once.
///
/// Tangential contacts and overlaps are returned with `transverse = false`;
/// an overlap contributes its two endpoints.
pub fn fiber_product(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
) -> Vec<IntersectionPoint> {
    let mut by_square: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, c) in b.components.iter().enumerate() {
        for (si, s) in c.segments.iter().enumerate() {
            by_square.entry(s.square).or_default().push((ci, si));
        }
    }
    let mut hits: BTreeMap<(Locator, Locator), bool> = BTreeMap::new();
    for (ca, comp) in a.components.iter().enumerate() {
        for (sa, seg) in comp.segments.iter().enumerate() {
            // branches can also meet on an edge from opposite sides
            let mut frames = vec![(seg.square, Motion::identity())];
            for e in SquareTiledSurface::sides_of(seg.from)
                .into_iter()
                .chain(SquareTiledSurface::sides_of(seg.to))
            {
                let f = (
                    surface.neighbor(seg.square, e).0,
                    surface.cross_motion(seg.square, e),
                );
                if !frames.contains(&f) {
                    frames.push(f);
                }
            }
            for (sq, m) in frames {
                let Some(cands) = by_square.get(&sq) else {
                    continue;
                };
                for &(cb, sb) in cands {
                    let other = b.segment(cb, sb);
                    let found: Vec<(_, _, bool)> = match seg_intersect(
                        seg.from,
                        seg.to,
                        m.apply(other.from),
                        m.apply(other.to),
                    ) {
                        SegHit::None => continue,
                        SegHit::Point { t, u } => vec![(t, u, false)],
                        SegHit::Overlap { t0, t1, u0, u1 } => vec![(t0, u0, true), (t1, u1, true)],
                    };
                    for (t, u, overlap) in found {
                        let la = a.normalize(Locator {
                            comp: ca,
                            seg: sa,
                            t,
                        });
                        let lb = b.normalize(Locator {
                            comp: cb,
                            seg: sb,
                            t: u,
                        });
                        let e = hits.entry((la, lb)).or_insert(false);
                        *e |= overlap;
                    }
                }
            }
        }
    }
    hits.into_iter()
        .map(|((la, lb), overlap)| {
            let pa = a.point_at(la);
            let transverse = !overlap && crossing_is_transverse(surface, a, la, b, lb);
            IntersectionPoint {
                a: la,
                b: lb,
                ambient: surface.canonical(pa),
                transverse,
            }
        })
        .collect()
}

/// Self-intersections: `fiber_product(c, c)` without its diagonal.
pub fn self_intersections(
    surface: &SquareTiledSurface,
    c: &ImmersedCurve,
) -> Vec<IntersectionPoint> {
    fiber_product(surface, c, c)
        .into_iter()
        .filter(|p| p.a != p.b)
        .collect()
}

/// Whether the two branches cross: their four tangent rays are distinct and alternate.
pub fn crossing_is_transverse(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    la: Locator,
    b: &ImmersedCurve,
    lb: Locator,
) -> bool {
    let pa = a.point_at(la);
    let pb = b.point_at(lb);
    let Some(m) = surface.frame_between(pa, pb) else {
        return false;
    };
    let (ai, ao) = a.rays_at(la);
    let (bi, bo) = b.rays_at(lb);
    rays_alternate([ai, ao], [m.apply_vec(bi), m.apply_vec(bo)])
}

/// Four rays from a point: true iff all directions differ and the pairs interleave.
pub fn rays_alternate(a: [Pt; 2], b: [Pt; 2]) -> bool {
    let mut rays: Vec<(Pt, u8)> = vec![(a[0], 0), (a[1], 0), (b[0], 1), (b[1], 1)];
    if rays.iter().any(|(r, _)| r.is_zero()) {
        return false;
    }
    rays.sort_by(|x, y| angle_cmp(x.0, y.0));
    for i in 0..4 {
        let (u, v) = (rays[i].0, rays[(i + 1) % 4].0);
        if u.cross(v).is_zero() && u.dot(v) > Zero::zero() {
            return false;
        }
    }
    rays[0].1 == rays[2].1 && rays[1].1 == rays[3].1 && rays[0].1 != rays[1].1
}

/// Distinct ambient points where three curves meet pairwise.
pub fn triple_points(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    c: &ImmersedCurve,
) -> Vec<SurfPt> {
    let ab: BTreeSet<SurfPt> = fiber_product(surface, a, b)
        .into_iter()
        .map(|p| p.ambient)
        .collect();
    let bc: BTreeSet<SurfPt> = fiber_product(surface, b, c)
        .into_iter()
        .map(|p| p.ambient)
        .collect();
    let ac: BTreeSet<SurfPt> = fiber_product(surface, a, c)
        .into_iter()
        .map(|p| p.ambient)
        .collect();
    ab.intersection(&bc)
        .filter(|p| ac.contains(p))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DevelopedSpec;
    use crate::geom::{q, qi};

    fn line(t: &SquareTiledSurface, from: Pt, to: Pt) -> ImmersedCurve {
        ImmersedCurve::from_developed(
            t,
            "l",
            &[DevelopedSpec {
                label: "l".into(),
                square: 0,
                points: vec![from, to],
            }],
        )
        .unwrap()
    }

    #[test]
    fn horizontal_meets_vertical_once() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = line(&t, Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(1, 2)));
        let v = line(&t, Pt::new(q(1, 2), qi(0)), Pt::new(q(1, 2), qi(1)));
        let fp = fiber_product(&t, &h, &v);
        assert_eq!(fp.len(), 1);
        assert!(fp[0].transverse);
        assert_eq!(fp[0].ambient.p, Pt::new(q(1, 2), q(1, 2)));
    }

    #[test]
    fn parallels_are_disjoint() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h1 = line(&t, Pt::new(qi(0), q(1, 3)), Pt::new(qi(1), q(1, 3)));
        let h2 = line(&t, Pt::new(qi(0), q(2, 3)), Pt::new(qi(1), q(2, 3)));
        assert!(fiber_product(&t, &h1, &h2).is_empty());
    }

    #[test]
    fn coincident_curves_are_tangential() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h1 = line(&t, Pt::new(qi(0), q(1, 3)), Pt::new(qi(1), q(1, 3)));
        let fp = fiber_product(&t, &h1, &h1.clone().with_label("k"));
        assert!(!fp.is_empty());
        assert!(fp.iter().all(|p| !p.transverse));
    }

    #[test]
    fn touching_vertex_is_not_transverse() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = line(&t, Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(1, 2)));
        // V-shaped curve whose apex touches the horizontal line from below
        let v = ImmersedCurve::from_developed(
            &t,
            "v",
            &[DevelopedSpec {
                label: "v".into(),
                square: 0,
                points: vec![
                    Pt::new(qi(0), q(1, 4)),
                    Pt::new(q(1, 2), q(1, 2)),
                    Pt::new(qi(1), q(1, 4)),
                ],
            }],
        )
        .unwrap();
        let fp = fiber_product(&t, &h, &v);
        assert_eq!(fp.len(), 1);
        assert!(!fp[0].transverse);
    }

    #[test]
    fn crossing_through_vertex_is_transverse() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = line(&t, Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(1, 2)));
        let z = ImmersedCurve::from_developed(
            &t,
            "z",
            &[DevelopedSpec {
                label: "z".into(),
                square: 0,
                points: vec![
                    Pt::new(q(1, 3), qi(0)),
                    Pt::new(q(1, 2), q(1, 2)),
                    Pt::new(q(1, 3), qi(1)),
                ],
            }],
        )
        .unwrap();
        let fp = fiber_product(&t, &h, &z);
        assert_eq!(fp.len(), 1);
        assert!(fp[0].transverse);
    }

    #[test]
    fn alternation() {
        let a = [Pt::int(-1, 0), Pt::int(1, 0)];
        assert!(rays_alternate(a, [Pt::int(0, -1), Pt::int(0, 1)]));
        assert!(!rays_alternate(a, [Pt::int(1, 1), Pt::int(-1, 1)]));
        assert!(rays_alternate(a, [Pt::int(1, -1), Pt::int(1, 1)]));
        assert!(!rays_alternate(a, [Pt::int(1, 0), Pt::int(0, 1)]));
    }
}
