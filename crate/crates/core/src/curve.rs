//! Piecewise-linear immersed (multi)curves on square-tiled surfaces.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::geom::{fmt_q, in_unit, Motion, Pt, Q};
use crate::surface::{SquareTiledSurface, SurfPt, SurfaceError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("component {comp} is empty")]
    Empty { comp: usize },
    #[error("component {comp} segment {seg} has zero length")]
    ZeroLength { comp: usize, seg: usize },
    #[error("component {comp} segment {seg} leaves its square")]
    OutsideSquare { comp: usize, seg: usize },
    #[error("component {comp} segment {seg} runs along a square edge")]
    AlongEdge { comp: usize, seg: usize },
    #[error("component {comp} has a vertex on a square corner at segment {seg}")]
    CornerVertex { comp: usize, seg: usize },
    #[error("component {comp} breaks between segments {seg} and {next}", next = seg + 1)]
    Discontinuous { comp: usize, seg: usize },
    #[error("component {comp} doubles back after segment {seg}")]
    DoublesBack { comp: usize, seg: usize },
    #[error("component {comp} does not close up")]
    NotClosed { comp: usize },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Straight piece of a curve inside one closed square, in local coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub square: usize,
    pub from: Pt,
    pub to: Pt,
}

impl Segment {
    pub fn dir(&self) -> Pt {
        self.to - self.from
    }

    pub fn at(&self, t: Q) -> Pt {
        self.from.lerp(self.to, t)
    }
}

/// Position on a curve: component, segment, and parameter in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Locator {
    pub comp: usize,
    pub seg: usize,
    pub t: Q,
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}s{}@{}", self.comp, self.seg, fmt_q(&self.t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub label: String,
    pub segments: Vec<Segment>,
    /// `transitions[i]` maps segment `i+1`'s square frame into segment `i`'s frame.
    transitions: Vec<Motion>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn transition(&self, i: usize) -> Motion {
        self.transitions[i % self.segments.len()]
    }

    /// Motion taking segment `i`'s frame into segment 0's frame (for `0 <= i <= len`).
    pub fn frame(&self, i: usize) -> Motion {
        let mut m = Motion::identity();
        for k in 0..i {
            m = m.then_after(&self.transitions[k % self.segments.len()]);
        }
        m
    }

    /// Deck motion after one full period.
    pub fn holonomy(&self) -> Motion {
        self.frame(self.segments.len())
    }

    /// Vertices of one developed period, in segment 0's frame (`len + 1` points).
    pub fn developed(&self) -> Vec<Pt> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut m = Motion::identity();
        for (i, s) in self.segments.iter().enumerate() {
            out.push(m.apply(s.from));
            if i + 1 == self.segments.len() {
                out.push(m.apply(s.to));
            }
            m = m.then_after(&self.transitions[i]);
        }
        out
    }
}

/// A closed immersed multicurve; each component is a cyclic list of segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImmersedCurve {
    pub label: String,
    pub components: Vec<Component>,
}

/// Component given as a developed closed polyline starting in a square.
#[derive(Clone, Debug)]
pub struct DevelopedSpec {
    pub label: String,
    pub square: usize,
    /// Plane vertices in the start square's frame; the first lies in the unit
    /// square and the last must land on the same surface point.
    pub points: Vec<Pt>,
}

impl ImmersedCurve {
    pub fn from_segments(
        surface: &SquareTiledSurface,
        label: &str,
        comps: Vec<(String, Vec<Segment>)>,
    ) -> Result<Self, CurveError> {
        let mut components = Vec::with_capacity(comps.len());
        for (ci, (clabel, segs)) in comps.into_iter().enumerate() {
            components.push(build_component(surface, ci, clabel, segs)?);
        }
        Ok(ImmersedCurve {
            label: label.to_string(),
            components,
        })
    }

    pub fn from_developed(
        surface: &SquareTiledSurface,
        label: &str,
        specs: &[DevelopedSpec],
    ) -> Result<Self, CurveError> {
        let mut comps = Vec::new();
        for (ci, spec) in specs.iter().enumerate() {
            if spec.points.len() < 2 || !in_unit(spec.points[0]) {
                return Err(CurveError::Empty { comp: ci });
            }
            let start = SurfPt {
                square: spec.square,
                p: spec.points[0],
            };
            let mut cur = start;
            let mut frame = Motion::identity();
            let mut segs = Vec::new();
            for w in spec.points.windows(2) {
                let delta = frame.inverse().apply_vec(w[1] - w[0]);
                let walk = surface.walk(cur, delta)?;
                segs.extend(walk.pieces.iter().map(|p| Segment {
                    square: p.square,
                    from: p.from,
                    to: p.to,
                }));
                frame = frame.then_after(&walk.motion);
                cur = walk.end;
            }
            if !surface.same_point(cur, start) {
                return Err(CurveError::NotClosed { comp: ci });
            }
            let segs = merge_collinear(surface, segs);
            comps.push((spec.label.clone(), segs));
        }
        Self::from_segments(surface, label, comps)
    }

    pub fn segment(&self, comp: usize, seg: usize) -> &Segment {
        &self.components[comp].segments[seg]
    }

    pub fn segment_count(&self) -> usize {
        self.components.iter().map(|c| c.len()).sum()
    }

    /// Maps `t == 1` onto the start of the following segment.
    pub fn normalize(&self, loc: Locator) -> Locator {
        if loc.t == Q::one() {
            let n = self.components[loc.comp].len();
            Locator {
                comp: loc.comp,
                seg: (loc.seg + 1) % n,
                t: Q::zero(),
            }
        } else {
            loc
        }
    }

    pub fn point_at(&self, loc: Locator) -> SurfPt {
        let s = self.segment(loc.comp, loc.seg);
        SurfPt {
            square: s.square,
            p: s.at(loc.t),
        }
    }

    /// Incoming and outgoing tangent rays at a locator, in its segment's frame.
    pub fn rays_at(&self, loc: Locator) -> (Pt, Pt) {
        let c = &self.components[loc.comp];
        let d = c.segments[loc.seg].dir();
        if loc.t.is_zero() {
            let n = c.len();
            let prev = (loc.seg + n - 1) % n;
            let into_here = c.transition(prev).inverse();
            (-into_here.apply_vec(c.segments[prev].dir()), d)
        } else {
            (-d, d)
        }
    }

    /// Length of the curve in the flat metric (approximate, for diagnostics).
    pub fn length_f64(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.segments.iter())
            .map(|s| {
                let (x, y) = s.dir().to_f64();
                (x * x + y * y).sqrt()
            })
            .sum()
    }

    /// Collinear pieces merged, for comparison up to re-parameterisation.
    pub fn normalized(&self, surface: &SquareTiledSurface) -> ImmersedCurve {
        let comps = self
            .components
            .iter()
            .map(|c| {
                let segs = merge_collinear(surface, c.segments.clone());
                build_component(surface, 0, c.label.clone(), segs).expect("merging keeps validity")
            })
            .collect();
        ImmersedCurve {
            label: self.label.clone(),
            components: comps,
        }
    }

    /// Equality of point sets with orientation, ignoring labels, segment subdivision,
    /// cyclic starting points and component order.
    pub fn same_as(&self, other: &ImmersedCurve, surface: &SquareTiledSurface) -> bool {
        let a = self.normalized(surface);
        let b = other.normalized(surface);
        if a.components.len() != b.components.len() {
            return false;
        }
        let mut used = vec![false; b.components.len()];
        'outer: for ca in &a.components {
            for (j, cb) in b.components.iter().enumerate() {
                if !used[j] && cyclic_eq(&ca.segments, &cb.segments) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    /// Same curve with every component traversed backwards.
    pub fn reversed(&self, surface: &SquareTiledSurface) -> ImmersedCurve {
        let comps = self
            .components
            .iter()
            .map(|c| {
                let segs: Vec<Segment> = c
                    .segments
                    .iter()
                    .rev()
                    .map(|s| Segment {
                        square: s.square,
                        from: s.to,
                        to: s.from,
                    })
                    .collect();
                (c.label.clone(), segs)
            })
            .collect();
        ImmersedCurve::from_segments(surface, &self.label, comps).expect("reversal keeps validity")
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }
}

fn cyclic_eq(a: &[Segment], b: &[Segment]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    (0..n).any(|k| (0..n).all(|i| a[i] == b[(i + k) % n]))
}

/// Merges consecutive segments in the same square that continue in the same direction.
pub fn merge_collinear(_surface: &SquareTiledSurface, segs: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for s in segs {
        if let Some(last) = out.last_mut() {
            if last.square == s.square
                && last.to == s.from
                && last.dir().cross(s.dir()).is_zero()
                && last.dir().dot(s.dir()) > Q::zero()
            {
                last.to = s.to;
                continue;
            }
        }
        out.push(s);
    }
    while out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if last.square == first.square
            && last.to == first.from
            && last.dir().cross(first.dir()).is_zero()
            && last.dir().dot(first.dir()) > Q::zero()
        {
            out[0].from = last.from;
            out.pop();
        } else {
            break;
        }
    }
    out
}

fn build_component(
    surface: &SquareTiledSurface,
    ci: usize,
    label: String,
    segs: Vec<Segment>,
) -> Result<Component, CurveError> {
    if segs.is_empty() {
        return Err(CurveError::Empty { comp: ci });
    }
    let n = segs.len();
    for (i, s) in segs.iter().enumerate() {
        if s.square >= surface.square_count() || !in_unit(s.from) || !in_unit(s.to) {
            return Err(CurveError::OutsideSquare { comp: ci, seg: i });
        }
        if s.from == s.to {
            return Err(CurveError::ZeroLength { comp: ci, seg: i });
        }
        if SquareTiledSurface::is_corner(s.from) || SquareTiledSurface::is_corner(s.to) {
            return Err(CurveError::CornerVertex { comp: ci, seg: i });
        }
        let sa = SquareTiledSurface::sides_of(s.from);
        if SquareTiledSurface::sides_of(s.to)
            .iter()
            .any(|e| sa.contains(e))
        {
            return Err(CurveError::AlongEdge { comp: ci, seg: i });
        }
    }
    let mut transitions = Vec::with_capacity(n);
    for i in 0..n {
        let a = SurfPt {
            square: segs[i].square,
            p: segs[i].to,
        };
        let b = SurfPt {
            square: segs[(i + 1) % n].square,
            p: segs[(i + 1) % n].from,
        };
        let m = surface
            .frame_between(a, b)
            .ok_or(CurveError::Discontinuous { comp: ci, seg: i })?;
        let d0 = segs[i].dir();
        let d1 = m.apply_vec(segs[(i + 1) % n].dir());
        if d0.cross(d1).is_zero() && d0.dot(d1) < Q::zero() {
            return Err(CurveError::DoublesBack { comp: ci, seg: i });
        }
        transitions.push(m);
    }
    Ok(Component {
        label,
        segments: segs,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{q, qi};

    fn torus() -> SquareTiledSurface {
        SquareTiledSurface::torus_grid("T", 1, 1)
    }

    fn spec(points: Vec<Pt>) -> DevelopedSpec {
        DevelopedSpec {
            label: "c".into(),
            square: 0,
            points,
        }
    }

    #[test]
    fn horizontal_loop_is_one_segment() {
        let t = torus();
        let c = ImmersedCurve::from_developed(
            &t,
            "h",
            &[spec(vec![Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(1, 2))])],
        )
        .unwrap();
        assert_eq!(c.components[0].len(), 1);
        assert_eq!(
            c.components[0].holonomy(),
            Motion::translation(Pt::int(1, 0))
        );
    }

    #[test]
    fn slope_two_geodesic() {
        let t = torus();
        let c = ImmersedCurve::from_developed(
            &t,
            "g",
            &[spec(vec![
                Pt::new(q(1, 3), q(1, 7)),
                Pt::new(q(4, 3), q(15, 7)),
            ])],
        )
        .unwrap();
        // crosses one vertical and two horizontal edges per period
        assert_eq!(c.components[0].len(), 3);
        assert_eq!(c.components[0].holonomy().shift, Pt::int(1, 2));
    }

    #[test]
    fn not_closed_is_rejected() {
        let t = torus();
        let r = ImmersedCurve::from_developed(
            &t,
            "x",
            &[spec(vec![Pt::new(qi(0), q(1, 2)), Pt::new(qi(1), q(2, 3))])],
        );
        assert_eq!(r, Err(CurveError::NotClosed { comp: 0 }));
    }

    #[test]
    fn corner_vertex_is_rejected() {
        let t = torus();
        let r = ImmersedCurve::from_developed(
            &t,
            "x",
            &[spec(vec![
                Pt::new(q(1, 2), q(1, 2)),
                Pt::new(q(3, 2), q(3, 2)),
            ])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn doubling_back_is_rejected() {
        let t = torus();
        let segs = vec![
            Segment {
                square: 0,
                from: Pt::new(q(1, 4), q(1, 2)),
                to: Pt::new(q(3, 4), q(1, 2)),
            },
            Segment {
                square: 0,
                from: Pt::new(q(3, 4), q(1, 2)),
                to: Pt::new(q(1, 4), q(1, 2)),
            },
        ];
        let r = ImmersedCurve::from_segments(&t, "x", vec![("c".into(), segs)]);
        assert!(matches!(r, Err(CurveError::DoublesBack { .. })));
    }

    #[test]
    fn reparameterised_curves_compare_equal() {
        let t = SquareTiledSurface::torus_grid("T", 2, 1);
        let a = ImmersedCurve::from_developed(
            &t,
            "a",
            &[spec(vec![
                Pt::new(q(1, 2), q(1, 3)),
                Pt::new(q(5, 2), q(1, 3)),
            ])],
        )
        .unwrap();
        let b = ImmersedCurve::from_developed(
            &t,
            "b",
            &[DevelopedSpec {
                label: "z".into(),
                square: 1,
                points: vec![Pt::new(q(1, 4), q(1, 3)), Pt::new(q(9, 4), q(1, 3))],
            }],
        )
        .unwrap();
        assert!(a.same_as(&b, &t));
        assert!(!a.same_as(&a.reversed(&t), &t));
    }

    #[test]
    fn rays_at_vertex_use_previous_segment() {
        let t = torus();
        let c = ImmersedCurve::from_developed(
            &t,
            "w",
            &[spec(vec![
                Pt::new(qi(0), q(1, 4)),
                Pt::new(q(1, 2), q(1, 2)),
                Pt::new(qi(1), q(1, 4)),
            ])],
        )
        .unwrap();
        let loc = Locator {
            comp: 0,
            seg: 1,
            t: Q::zero(),
        };
        let (inr, out) = c.rays_at(loc);
        assert_eq!(inr, Pt::new(q(-1, 2), q(-1, 4)));
        assert_eq!(out, Pt::new(q(1, 2), q(-1, 4)));
    }
}
