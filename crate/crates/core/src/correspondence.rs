//! Piecewise-affine maps between square-tiled surfaces, fold loci, and
//! correspondences `F -> F1 x F2` acting on curves by pull-back and push-forward.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::curve::{CurveError, ImmersedCurve, Locator, Segment};
use crate::geom::{clip_unit, in_unit, q, qi, Affine, Motion, Pt, Q};
use crate::surface::{corner, SquareTiledSurface, SurfPt, SurfaceError, BOTTOM, LEFT, RIGHT, TOP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SquareKind {
    Covering,
    Fold,
    Shear,
}

impl SquareKind {
    pub fn name(&self) -> &'static str {
        match self {
            SquareKind::Covering => "covering",
            SquareKind::Fold => "fold",
            SquareKind::Shear => "shear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "covering" => Some(SquareKind::Covering),
            "fold" => Some(SquareKind::Fold),
            "shear" => Some(SquareKind::Shear),
            _ => None,
        }
    }
}

/// Where one source square goes: an affine map into the developed plane of `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SquareMap {
    pub target: usize,
    pub affine: Affine,
    pub kind: SquareKind,
}

/// A target square met by the image of a source square; `motion` maps the
/// target square's frame into the image frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    target: usize,
    motion: Motion,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("expected {expected} square maps, got {got}")]
    SquareCount { expected: usize, got: usize },
    #[error("square {square} maps to a missing target square")]
    TargetOutOfRange { square: usize },
    #[error("square {square} has a singular affine part")]
    Singular { square: usize },
    #[error("map is discontinuous across side {side} of square {square}")]
    Discontinuous { square: usize, side: u8 },
    #[error("square {square} is tagged {kind} but its affine part does not fit")]
    KindMismatch { square: usize, kind: &'static str },
    #[error("fold edges meet badly at a vertex of square {square}")]
    FoldNotEmbedded { square: usize },
    #[error("bad cylinder: {0}")]
    BadCylinder(String),
    #[error("maps do not share a source surface")]
    SourceMismatch,
    #[error("both maps fold along side {side} of square {square}")]
    NotImmersion { square: usize, side: u8 },
    #[error("cannot compose maps: image of square {square} spans several squares")]
    Spans { square: usize },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrespondenceError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("curve is tangent to a critical value circle at {at}")]
    CurveThroughCriticalValueTangency { at: SurfPt },
    #[error("degenerate preimage at {at}: {reason}")]
    DegeneratePreimage { at: SurfPt, reason: String },
    #[error("not composable at {witness}: {reason}")]
    NotComposable { witness: SurfPt, reason: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Clone, Debug)]
pub struct SurfaceMap {
    pub name: String,
    pub source: SquareTiledSurface,
    pub target: SquareTiledSurface,
    squares: Vec<SquareMap>,
    cells: Vec<Vec<Cell>>,
    fold_edges: BTreeSet<(usize, u8)>,
}

/// Straight piece of a critical value circle, in one target square (may lie on an edge).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CriticalPiece {
    pub square: usize,
    pub from: Pt,
    pub to: Pt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldLocus {
    /// Each circle as a cyclic list of source edges `(square, side)`.
    pub circles: Vec<Vec<(usize, u8)>>,
    pub critical_values: Vec<Vec<CriticalPiece>>,
}

impl FoldLocus {
    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }
}

fn edge_point(e: u8, t: Q) -> Pt {
    corner(e).lerp(corner(e + 1), t)
}

fn sign(v: Q) -> bool {
    v > Q::zero()
}

fn convex_overlap(a: &[Pt], b: &[Pt]) -> bool {
    let mut axes = Vec::new();
    for poly in [a, b] {
        for i in 0..poly.len() {
            let d = poly[(i + 1) % poly.len()] - poly[i];
            axes.push(Pt::new(-d.y, d.x));
        }
    }
    axes.iter().all(|ax| {
        let proj = |p: &[Pt]| {
            let vals: Vec<Q> = p.iter().map(|x| x.dot(*ax)).collect();
            (*vals.iter().min().unwrap(), *vals.iter().max().unwrap())
        };
        let (a0, a1) = proj(a);
        let (b0, b1) = proj(b);
        a0.max(b0) < a1.min(b1)
    })
}

fn image_cells(
    target: &SquareTiledSurface,
    tau: usize,
    a: &Affine,
) -> Result<Vec<Cell>, SurfaceError> {
    let poly: Vec<Pt> = (0..4).map(|c| a.apply(corner(c))).collect();
    let xs: Vec<Q> = poly.iter().map(|p| p.x).collect();
    let ys: Vec<Q> = poly.iter().map(|p| p.y).collect();
    let lo = |v: &[Q]| v.iter().min().unwrap().floor().to_integer();
    let hi = |v: &[Q]| v.iter().max().unwrap().ceil().to_integer();
    let half = q(1, 2);
    let mut cells = Vec::new();
    for j in lo(&ys)..hi(&ys) {
        for i in lo(&xs)..hi(&xs) {
            let cell = [
                Pt::int(i, j),
                Pt::int(i + 1, j),
                Pt::int(i + 1, j + 1),
                Pt::int(i, j + 1),
            ];
            if !convex_overlap(&poly, &cell) {
                continue;
            }
            let (end, motion) = target.locate(tau, Pt::new(qi(i) + half, qi(j) + half))?;
            cells.push(Cell {
                target: end.square,
                motion,
            });
        }
    }
    Ok(cells)
}

/// Tags squares from their affine parts: next to a fold edge, onto a whole square, or otherwise a shear.
pub fn infer_kinds(source: &SquareTiledSurface, squares: &mut [SquareMap]) {
    let folds = fold_edges_of(source, squares);
    for (s, sq) in squares.iter_mut().enumerate() {
        sq.kind = if (0..4u8).any(|e| folds.contains(&canon_edge(source, s, e))) {
            SquareKind::Fold
        } else if onto_unit(&sq.affine) {
            SquareKind::Covering
        } else {
            SquareKind::Shear
        };
    }
}

fn onto_unit(a: &Affine) -> bool {
    let imgs: BTreeSet<Pt> = (0..4).map(|c| a.apply(corner(c))).collect();
    let unit: BTreeSet<Pt> = (0..4).map(corner).collect();
    imgs == unit
}

fn canon_edge(surface: &SquareTiledSurface, s: usize, e: u8) -> (usize, u8) {
    (s, e).min(surface.neighbor(s, e))
}

fn fold_edges_of(source: &SquareTiledSurface, squares: &[SquareMap]) -> BTreeSet<(usize, u8)> {
    let mut out = BTreeSet::new();
    for s in 0..source.square_count() {
        for e in 0..4u8 {
            let (t, f) = source.neighbor(s, e);
            if (s, e) < (t, f) && sign(squares[s].affine.det()) != sign(squares[t].affine.det()) {
                out.insert((s, e));
            }
        }
    }
    out
}

impl SurfaceMap {
    pub fn new(
        name: &str,
        source: SquareTiledSurface,
        target: SquareTiledSurface,
        squares: Vec<SquareMap>,
    ) -> Result<Self, MapError> {
        let n = source.square_count();
        if squares.len() != n {
            return Err(MapError::SquareCount {
                expected: n,
                got: squares.len(),
            });
        }
        let mut cells = Vec::with_capacity(n);
        for (s, sq) in squares.iter().enumerate() {
            if sq.target >= target.square_count() {
                return Err(MapError::TargetOutOfRange { square: s });
            }
            if sq.affine.det().is_zero() {
                return Err(MapError::Singular { square: s });
            }
            cells.push(image_cells(&target, sq.target, &sq.affine)?);
        }
        let fold_edges = fold_edges_of(&source, &squares);
        let map = SurfaceMap {
            name: name.to_string(),
            source,
            target,
            squares,
            cells,
            fold_edges,
        };
        map.check_continuity()?;
        map.check_folds_embedded()?;
        map.check_kinds()?;
        Ok(map)
    }

    /// Like [`SurfaceMap::new`], with kind tags inferred.
    pub fn inferred(
        name: &str,
        source: SquareTiledSurface,
        target: SquareTiledSurface,
        mut squares: Vec<SquareMap>,
    ) -> Result<Self, MapError> {
        if squares.len() == source.square_count() {
            infer_kinds(&source, &mut squares);
        }
        Self::new(name, source, target, squares)
    }

    pub fn identity(surface: &SquareTiledSurface) -> Self {
        let squares = (0..surface.square_count())
            .map(|s| SquareMap {
                target: s,
                affine: Affine::identity(),
                kind: SquareKind::Covering,
            })
            .collect();
        Self::new("id", surface.clone(), surface.clone(), squares).expect("identity map is valid")
    }

    /// Local branches of the map on square `s`: target square and the affine map
    /// from `s`'s frame into that square's frame.
    pub fn branches(&self, s: usize) -> Vec<(usize, Affine)> {
        let a = self.squares[s].affine;
        self.cells[s]
            .iter()
            .map(|c| (c.target, Affine::from_motion(&c.motion.inverse()).after(&a)))
            .collect()
    }

    /// Given `g` placing square `s`'s image in some developed plane, the placement of the
    /// neighbour across side `e` that agrees with `g` along the shared edge.
    pub fn develop_across(&self, g: &Affine, s: usize, e: u8) -> (usize, Affine) {
        let (t, _) = self.source.neighbor(s, e);
        let a = self.squares[t].affine;
        let pts: Vec<(Pt, Pt)> = [q(1, 3), q(2, 3)]
            .iter()
            .map(|&u| {
                let p = SurfPt {
                    square: s,
                    p: edge_point(e, u),
                };
                (g.apply(p.p), a.apply(self.source.across(p, e).p))
            })
            .collect();
        for rot in 0..4u8 {
            let shift = pts[0].0 - pts[0].1.rot(rot);
            let m = Motion { rot, shift };
            if m.apply(pts[1].1) == pts[1].0 {
                return (t, Affine::from_motion(&m).after(&a));
            }
        }
        unreachable!("continuity was checked at construction")
    }

    pub fn squares(&self) -> &[SquareMap] {
        &self.squares
    }

    pub fn is_fold_edge(&self, s: usize, e: u8) -> bool {
        self.fold_edges.contains(&canon_edge(&self.source, s, e))
    }

    pub fn fold_edges(&self) -> &BTreeSet<(usize, u8)> {
        &self.fold_edges
    }

    fn check_continuity(&self) -> Result<(), MapError> {
        for s in 0..self.source.square_count() {
            for e in 0..4u8 {
                for t in [q(1, 3), q(2, 3)] {
                    let p = SurfPt {
                        square: s,
                        p: edge_point(e, t),
                    };
                    let other = self.source.across(p, e);
                    if !self.target.same_point(self.apply(p), self.apply(other)) {
                        return Err(MapError::Discontinuous { square: s, side: e });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_folds_embedded(&self) -> Result<(), MapError> {
        let mut degree: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for &(s, e) in &self.fold_edges {
            for c in [e, e + 1] {
                degree.entry(self.source.vertex(s, c)).or_insert((0, s)).0 += 1;
            }
        }
        match degree.values().find(|(d, _)| *d != 2) {
            Some(&(_, s)) => Err(MapError::FoldNotEmbedded { square: s }),
            None => Ok(()),
        }
    }

    fn check_kinds(&self) -> Result<(), MapError> {
        for (s, sq) in self.squares.iter().enumerate() {
            let a = &sq.affine;
            let ok = match sq.kind {
                SquareKind::Covering => onto_unit(a),
                SquareKind::Shear => {
                    a.det() == Q::one() && (a.m[1][0].is_zero() || a.m[0][1].is_zero())
                }
                SquareKind::Fold => (0..4u8).any(|e| self.is_fold_edge(s, e)),
            };
            if !ok {
                return Err(MapError::KindMismatch {
                    square: s,
                    kind: sq.kind.name(),
                });
            }
        }
        Ok(())
    }

    /// Image of a point.
    pub fn apply(&self, p: SurfPt) -> SurfPt {
        let sq = &self.squares[p.square];
        let x = sq.affine.apply(p.p);
        for cell in &self.cells[p.square] {
            let y = cell.motion.inverse().apply(x);
            if in_unit(y) {
                return self.target.canonical(SurfPt {
                    square: cell.target,
                    p: y,
                });
            }
        }
        unreachable!("cells cover the image of every square")
    }

    /// All preimages of a target point, canonical and sorted.
    pub fn preimages(&self, p: SurfPt) -> Vec<SurfPt> {
        let mut reps = vec![p];
        for e in SquareTiledSurface::sides_of(p.p) {
            reps.push(self.target.across(p, e));
        }
        let mut out = BTreeSet::new();
        for (s, sq) in self.squares.iter().enumerate() {
            let inv = sq.affine.inverse().expect("checked invertible");
            for cell in &self.cells[s] {
                for r in reps.iter().filter(|r| r.square == cell.target) {
                    let z = inv.apply(cell.motion.apply(r.p));
                    if in_unit(z) {
                        out.insert(self.source.canonical(SurfPt { square: s, p: z }));
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Fold circles and their critical values.
    pub fn detect_folds(&self) -> FoldLocus {
        let mut by_vertex: BTreeMap<usize, Vec<(usize, u8)>> = BTreeMap::new();
        for &(s, e) in &self.fold_edges {
            for c in [e, e + 1] {
                by_vertex
                    .entry(self.source.vertex(s, c))
                    .or_default()
                    .push((s, e));
            }
        }
        let mut used = BTreeSet::new();
        let mut circles = Vec::new();
        for &start in &self.fold_edges {
            if used.contains(&start) {
                continue;
            }
            let mut circle = vec![start];
            used.insert(start);
            let mut v = self.source.vertex(start.0, start.1 + 1);
            loop {
                let next = by_vertex[&v].iter().copied().find(|x| !used.contains(x));
                let Some(nx) = next else { break };
                used.insert(nx);
                circle.push(nx);
                let (a, b) = (
                    self.source.vertex(nx.0, nx.1),
                    self.source.vertex(nx.0, nx.1 + 1),
                );
                v = if a == v { b } else { a };
            }
            circles.push(circle);
        }
        let critical_values = circles
            .iter()
            .map(|c| {
                c.iter()
                    .flat_map(|&(s, e)| self.critical_pieces(s, e))
                    .collect()
            })
            .collect();
        FoldLocus {
            circles,
            critical_values,
        }
    }

    fn critical_pieces(&self, s: usize, e: u8) -> Vec<CriticalPiece> {
        let a = &self.squares[s].affine;
        let (x0, x1) = (a.apply(corner(e)), a.apply(corner(e + 1)));
        let mut out = Vec::new();
        for cell in &self.cells[s] {
            let inv = cell.motion.inverse();
            let (y0, y1) = (inv.apply(x0), inv.apply(x1));
            if let Some((lo, hi)) = clip_closed(y0, y1) {
                let piece = CriticalPiece {
                    square: cell.target,
                    from: y0.lerp(y1, lo),
                    to: y0.lerp(y1, hi),
                };
                if !out.contains(&piece) {
                    out.push(piece);
                }
            }
        }
        out
    }

    fn node_error(&self, node: SurfPt, reason: &str) -> CorrespondenceError {
        let at = self.apply(node);
        let on_fold = SquareTiledSurface::sides_of(node.p)
            .into_iter()
            .any(|e| self.is_fold_edge(node.square, e));
        if on_fold {
            CorrespondenceError::CurveThroughCriticalValueTangency { at }
        } else {
            CorrespondenceError::DegeneratePreimage {
                at,
                reason: reason.to_string(),
            }
        }
    }

    /// The full preimage of a curve, with each segment tied to the input piece it covers.
    pub fn preimage(&self, c: &ImmersedCurve) -> Result<Lifted, CorrespondenceError> {
        #[derive(Clone)]
        struct Pre {
            square: usize,
            from: Pt,
            to: Pt,
            src: SegSource,
        }
        let mut pieces: Vec<Pre> = Vec::new();
        for (s, sq) in self.squares.iter().enumerate() {
            let inv = sq.affine.inverse().expect("checked invertible");
            for cell in &self.cells[s] {
                for (ci, comp) in c.components.iter().enumerate() {
                    for (k, seg) in comp.segments.iter().enumerate() {
                        if seg.square != cell.target {
                            continue;
                        }
                        let z0 = inv.apply(cell.motion.apply(seg.from));
                        let z1 = inv.apply(cell.motion.apply(seg.to));
                        let Some((lo, hi)) = clip_unit(z0, z1) else {
                            continue;
                        };
                        let (from, to) = (z0.lerp(z1, lo), z0.lerp(z1, hi));
                        let sa = SquareTiledSurface::sides_of(from);
                        if let Some(&e) = SquareTiledSurface::sides_of(to)
                            .iter()
                            .find(|e| sa.contains(e))
                        {
                            let node = SurfPt {
                                square: s,
                                p: from.lerp(to, q(1, 2)),
                            };
                            return Err(if self.is_fold_edge(s, e) {
                                CorrespondenceError::CurveThroughCriticalValueTangency {
                                    at: self.apply(node),
                                }
                            } else {
                                CorrespondenceError::DegeneratePreimage {
                                    at: self.apply(node),
                                    reason: "preimage runs along an edge".into(),
                                }
                            });
                        }
                        pieces.push(Pre {
                            square: s,
                            from,
                            to,
                            src: SegSource {
                                comp: ci,
                                seg: k,
                                t0: lo,
                                t1: hi,
                            },
                        });
                    }
                }
            }
        }
        pieces.sort_by(|a, b| {
            (a.src.comp, a.src.seg, a.src.t0, a.square)
                .cmp(&(b.src.comp, b.src.seg, b.src.t0, b.square))
        });
        let mut nodes: BTreeMap<SurfPt, Vec<(usize, bool)>> = BTreeMap::new();
        for (i, p) in pieces.iter().enumerate() {
            for (end, pt) in [(false, p.from), (true, p.to)] {
                let key = self.source.canonical(SurfPt {
                    square: p.square,
                    p: pt,
                });
                nodes.entry(key).or_default().push((i, end));
            }
        }
        for (node, ends) in &nodes {
            if ends.len() != 2 {
                return Err(self.node_error(*node, "curve meets a branch locus"));
            }
        }
        let key_of = |i: usize, end: bool| {
            let p = &pieces[i];
            self.source.canonical(SurfPt {
                square: p.square,
                p: if end { p.to } else { p.from },
            })
        };
        let mut used = vec![false; pieces.len()];
        let mut comps = Vec::new();
        let mut sources = Vec::new();
        for start in 0..pieces.len() {
            if used[start] {
                continue;
            }
            let mut segs = Vec::new();
            let mut srcs = Vec::new();
            let (mut cur, mut fwd) = (start, true);
            loop {
                used[cur] = true;
                let p = &pieces[cur];
                if fwd {
                    segs.push(Segment {
                        square: p.square,
                        from: p.from,
                        to: p.to,
                    });
                    srcs.push(p.src);
                } else {
                    segs.push(Segment {
                        square: p.square,
                        from: p.to,
                        to: p.from,
                    });
                    srcs.push(SegSource {
                        t0: p.src.t1,
                        t1: p.src.t0,
                        ..p.src
                    });
                }
                let exit = key_of(cur, fwd);
                let &(nx, end) = nodes[&exit]
                    .iter()
                    .find(|&&(j, e)| !(j == cur && e == fwd))
                    .expect("degree two");
                if nx == start {
                    break;
                }
                cur = nx;
                fwd = !end;
            }
            comps.push((format!("{}.{}", c.label, comps.len()), segs));
            sources.push(srcs);
        }
        let label = format!("{}^-1({})", self.name, c.label);
        let curve = match ImmersedCurve::from_segments(&self.source, &label, comps.clone()) {
            Ok(curve) => curve,
            Err(e) => {
                let at = match e {
                    CurveError::CornerVertex { comp, seg }
                    | CurveError::DoublesBack { comp, seg }
                    | CurveError::ZeroLength { comp, seg } => {
                        let s = comps[comp].1[seg];
                        self.apply(SurfPt {
                            square: s.square,
                            p: s.to,
                        })
                    }
                    _ => return Err(e.into()),
                };
                return Err(CorrespondenceError::DegeneratePreimage {
                    at,
                    reason: e.to_string(),
                });
            }
        };
        let source_lens = c.components.iter().map(|k| k.len()).collect();
        Ok(Lifted {
            curve,
            source: sources,
            source_lens,
        })
    }

    /// Image of a segment of the source, split into target squares, with parameter ranges.
    fn push_segment(&self, seg: &Segment) -> Result<Vec<(Segment, Q, Q)>, CorrespondenceError> {
        let a = &self.squares[seg.square].affine;
        let (x0, x1) = (a.apply(seg.from), a.apply(seg.to));
        let mut out: Vec<(Segment, Q, Q)> = Vec::new();
        for cell in &self.cells[seg.square] {
            let inv = cell.motion.inverse();
            let (y0, y1) = (inv.apply(x0), inv.apply(x1));
            if let Some((lo, hi)) = clip_unit(y0, y1) {
                out.push((
                    Segment {
                        square: cell.target,
                        from: y0.lerp(y1, lo),
                        to: y0.lerp(y1, hi),
                    },
                    lo,
                    hi,
                ));
            }
        }
        out.sort_by_key(|a| a.1);
        let witness = |s: &Segment| {
            self.target.canonical(SurfPt {
                square: s.square,
                p: s.from.lerp(s.to, q(1, 2)),
            })
        };
        let mut at = Q::zero();
        for (s, lo, hi) in &out {
            let sa = SquareTiledSurface::sides_of(s.from);
            if SquareTiledSurface::sides_of(s.to)
                .iter()
                .any(|e| sa.contains(e))
                || *lo != at
            {
                return Err(CorrespondenceError::NotComposable {
                    witness: witness(s),
                    reason: "image runs along a square edge".into(),
                });
            }
            at = *hi;
        }
        if at != Q::one() {
            return Err(CorrespondenceError::DegeneratePreimage {
                at: self.apply(SurfPt {
                    square: seg.square,
                    p: seg.to,
                }),
                reason: "image not covered".into(),
            });
        }
        Ok(out)
    }

    /// Push-forward of a curve on the source, one output component per input component.
    pub fn push(
        &self,
        c: &ImmersedCurve,
        label: &str,
    ) -> Result<(ImmersedCurve, Vec<Vec<PieceSource>>), CorrespondenceError> {
        let mut comps = Vec::new();
        let mut prov = Vec::new();
        for comp in &c.components {
            let mut segs = Vec::new();
            let mut src = Vec::new();
            for (k, seg) in comp.segments.iter().enumerate() {
                for (s, lo, hi) in self.push_segment(seg)? {
                    segs.push(s);
                    src.push(PieceSource {
                        f_seg: k,
                        u0: lo,
                        u1: hi,
                    });
                }
            }
            comps.push((comp.label.clone(), segs));
            prov.push(src);
        }
        match ImmersedCurve::from_segments(&self.target, label, comps.clone()) {
            Ok(curve) => Ok((curve, prov)),
            Err(e) => {
                let witness = match e {
                    CurveError::CornerVertex { comp, seg }
                    | CurveError::DoublesBack { comp, seg }
                    | CurveError::ZeroLength { comp, seg } => {
                        let s = comps[comp].1[seg];
                        SurfPt {
                            square: s.square,
                            p: s.to,
                        }
                    }
                    _ => return Err(e.into()),
                };
                Err(CorrespondenceError::NotComposable {
                    witness: self.target.canonical(witness),
                    reason: e.to_string(),
                })
            }
        }
    }

    /// `other ∘ self`, when every square's image lies in a single target square.
    pub fn then(&self, other: &SurfaceMap, name: &str) -> Result<SurfaceMap, MapError> {
        if !self.target.same_shape(&other.source) {
            return Err(MapError::SourceMismatch);
        }
        let mut squares = Vec::with_capacity(self.squares.len());
        for (s, sq) in self.squares.iter().enumerate() {
            if self.cells[s].len() != 1 {
                return Err(MapError::Spans { square: s });
            }
            let cell = self.cells[s][0];
            let outer = other.squares[cell.target];
            let affine = outer
                .affine
                .after(&Affine::from_motion(&cell.motion.inverse()))
                .after(&sq.affine);
            squares.push(SquareMap {
                target: outer.target,
                affine,
                kind: SquareKind::Covering,
            });
        }
        SurfaceMap::inferred(name, self.source.clone(), other.target.clone(), squares)
    }
}

/// Parameters of a closed segment inside the closed unit square, allowing edges.
fn clip_closed(p0: Pt, p1: Pt) -> Option<(Q, Q)> {
    if let Some(r) = clip_unit(p0, p1) {
        return Some(r);
    }
    if in_unit(p0) && in_unit(p1) && p0 != p1 {
        return Some((Q::zero(), Q::one()));
    }
    None
}

/// Position on the input curve covered by a preimage segment, from `t0` to `t1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegSource {
    pub comp: usize,
    pub seg: usize,
    pub t0: Q,
    pub t1: Q,
}

/// Preimage curve together with its projection data.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub curve: ImmersedCurve,
    pub source: Vec<Vec<SegSource>>,
    source_lens: Vec<usize>,
}

impl Lifted {
    /// Locator on the input curve below a locator on the preimage.
    pub fn source_locator(&self, loc: Locator) -> Locator {
        let s = self.source[loc.comp][loc.seg];
        let t = s.t0 + (s.t1 - s.t0) * loc.t;
        if t == Q::one() {
            Locator {
                comp: s.comp,
                seg: (s.seg + 1) % self.source_lens[s.comp],
                t: Q::zero(),
            }
        } else {
            Locator {
                comp: s.comp,
                seg: s.seg,
                t,
            }
        }
    }
}

/// Range `[u0, u1]` of preimage segment `f_seg` that an output segment covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PieceSource {
    pub f_seg: usize,
    pub u0: Q,
    pub u1: Q,
}

/// Result of composing a curve through a correspondence, with provenance.
#[derive(Clone, Debug)]
pub struct Composition {
    pub curve: ImmersedCurve,
    /// The curve's preimage on the correspondence surface.
    pub lifted: Lifted,
    pub pieces: Vec<Vec<PieceSource>>,
}

impl Composition {
    /// Locator on the preimage curve (on the correspondence surface).
    pub fn lift_locator(&self, loc: Locator) -> Locator {
        let p = self.pieces[loc.comp][loc.seg];
        let u = p.u0 + (p.u1 - p.u0) * loc.t;
        self.lifted.curve.normalize(Locator {
            comp: loc.comp,
            seg: p.f_seg,
            t: u,
        })
    }

    /// Locator on the original curve.
    pub fn source_locator(&self, loc: Locator) -> Locator {
        self.lifted.source_locator(self.lift_locator(loc))
    }

    /// Inverse of [`Composition::lift_locator`].
    pub fn from_lifted(&self, f: Locator) -> Locator {
        let f = self.lifted.curve.normalize(f);
        let (j, p) = self.pieces[f.comp]
            .iter()
            .enumerate()
            .find(|(_, p)| p.f_seg == f.seg && p.u0 <= f.t && f.t < p.u1)
            .expect("pieces cover every preimage segment");
        Locator {
            comp: f.comp,
            seg: j,
            t: (f.t - p.u0) / (p.u1 - p.u0),
        }
    }
}

/// Outcome of a composability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composability {
    pub composable: bool,
    pub witness: Option<SurfPt>,
    pub reason: Option<String>,
}

/// A surface `F` with maps `g1: F -> F1` and `g2: F -> F2`.
#[derive(Clone, Debug)]
pub struct Correspondence {
    pub name: String,
    pub g1: SurfaceMap,
    pub g2: SurfaceMap,
}

fn not_composable(e: CorrespondenceError) -> CorrespondenceError {
    match e {
        CorrespondenceError::CurveThroughCriticalValueTangency { at } => {
            CorrespondenceError::NotComposable {
                witness: at,
                reason: "tangent to a critical value circle".into(),
            }
        }
        CorrespondenceError::DegeneratePreimage { at, reason } => {
            CorrespondenceError::NotComposable {
                witness: at,
                reason,
            }
        }
        other => other,
    }
}

impl Correspondence {
    pub fn new(name: &str, g1: SurfaceMap, g2: SurfaceMap) -> Result<Self, MapError> {
        if !g1.source.same_shape(&g2.source) {
            return Err(MapError::SourceMismatch);
        }
        if let Some(&(s, e)) = g1.fold_edges.intersection(&g2.fold_edges).next() {
            return Err(MapError::NotImmersion { square: s, side: e });
        }
        Ok(Correspondence {
            name: name.to_string(),
            g1,
            g2,
        })
    }

    /// `F = F1 = F2` with both maps the identity.
    pub fn diagonal(surface: &SquareTiledSurface) -> Self {
        let id = SurfaceMap::identity(surface);
        Self::new("diag", id.clone(), id).expect("diagonal is valid")
    }

    pub fn total(&self) -> &SquareTiledSurface {
        &self.g1.source
    }

    fn transfer(
        &self,
        down: &SurfaceMap,
        up: &SurfaceMap,
        c: &ImmersedCurve,
        label: &str,
    ) -> Result<Composition, CorrespondenceError> {
        let lifted = down.preimage(c).map_err(not_composable)?;
        let (curve, pieces) = up.push(&lifted.curve, label)?;
        Ok(Composition {
            curve,
            lifted,
            pieces,
        })
    }

    /// `F ∘ L2 = g1(g2^-1(L2))` on `F1`.
    pub fn compose(&self, l2: &ImmersedCurve) -> Result<Composition, CorrespondenceError> {
        self.transfer(
            &self.g2,
            &self.g1,
            l2,
            &format!("{}∘{}", self.name, l2.label),
        )
    }

    /// `L1 ∘ F = g2(g1^-1(L1))` on `F2`.
    pub fn compose_left(&self, l1: &ImmersedCurve) -> Result<Composition, CorrespondenceError> {
        self.transfer(
            &self.g1,
            &self.g2,
            l1,
            &format!("{}∘{}", l1.label, self.name),
        )
    }

    pub fn composability(&self, l2: &ImmersedCurve) -> Composability {
        match self.compose(l2) {
            Ok(_) => Composability {
                composable: true,
                witness: None,
                reason: None,
            },
            Err(CorrespondenceError::NotComposable { witness, reason }) => Composability {
                composable: false,
                witness: Some(witness),
                reason: Some(reason),
            },
            Err(e) => Composability {
                composable: false,
                witness: None,
                reason: Some(e.to_string()),
            },
        }
    }
}

/// A cylinder of squares, traced from a starting square to the right or upwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cylinder {
    Horizontal(usize),
    Vertical(usize),
}

impl Cylinder {
    /// Squares of the cylinder in order; fails if the strip turns.
    pub fn trace(&self, surface: &SquareTiledSurface) -> Result<Vec<usize>, MapError> {
        let (start, out_side, in_side) = match *self {
            Cylinder::Horizontal(s) => (s, RIGHT, LEFT),
            Cylinder::Vertical(s) => (s, TOP, BOTTOM),
        };
        if start >= surface.square_count() {
            return Err(MapError::BadCylinder(format!("no square {start}")));
        }
        let mut out = vec![start];
        let mut cur = start;
        loop {
            let (t, f) = surface.neighbor(cur, out_side);
            if f != in_side {
                return Err(MapError::BadCylinder(format!(
                    "strip turns between squares {cur} and {t}"
                )));
            }
            if t == start {
                return Ok(out);
            }
            if out.contains(&t) {
                return Err(MapError::BadCylinder(format!(
                    "strip from {start} does not close"
                )));
            }
            out.push(t);
            cur = t;
        }
    }
}

/// Shear supported on a cylinder: `amount` full twists, the identity elsewhere.
pub fn dehn_shear(
    surface: &SquareTiledSurface,
    cyl: Cylinder,
    amount: i128,
) -> Result<SurfaceMap, MapError> {
    let ring = cyl.trace(surface)?;
    let k = qi(amount * ring.len() as i128);
    shear_on(surface, surface.clone(), cyl, &ring, k)
}

fn shear_on(
    source: &SquareTiledSurface,
    target: SquareTiledSurface,
    cyl: Cylinder,
    ring: &[usize],
    k: Q,
) -> Result<SurfaceMap, MapError> {
    let mut squares: Vec<SquareMap> = (0..source.square_count())
        .map(|s| SquareMap {
            target: s,
            affine: Affine::identity(),
            kind: SquareKind::Covering,
        })
        .collect();
    if !k.is_zero() {
        let (o, z) = (Q::one(), Q::zero());
        let affine = match cyl {
            Cylinder::Horizontal(_) => Affine::from_rows([o, k, z], [z, o, z]),
            Cylinder::Vertical(_) => Affine::from_rows([o, z, z], [k, o, z]),
        };
        for &s in ring {
            squares[s] = SquareMap {
                target: s,
                affine,
                kind: SquareKind::Shear,
            };
        }
    }
    SurfaceMap::new("shear", source.clone(), target, squares)
}

/// Re-glues the far side of a cylinder shifted by `offset` squares, and returns the
/// new surface with the shear that realises the re-gluing as a homeomorphism.
pub fn reglue(
    surface: &SquareTiledSurface,
    cyl: Cylinder,
    offset: i128,
) -> Result<(SquareTiledSurface, SurfaceMap), MapError> {
    let ring = cyl.trace(surface)?;
    let n = ring.len() as i128;
    let far = match cyl {
        Cylinder::Horizontal(_) => TOP,
        Cylinder::Vertical(_) => RIGHT,
    };
    let mut gl = Vec::new();
    let ring_far: Vec<(usize, u8)> = ring.iter().map(|&s| surface.neighbor(s, far)).collect();
    for g in surface.gluings() {
        let touches = ring.iter().any(|&s| g.a == (s, far) || g.b == (s, far));
        if !touches {
            gl.push(g);
        }
    }
    let mut seen = BTreeSet::new();
    for (i, &s) in ring.iter().enumerate() {
        let j = ((i as i128 - offset).rem_euclid(n)) as usize;
        let other = ring_far[j];
        let key = (s, far).min(other);
        if seen.insert(key) {
            gl.push(crate::surface::Gluing {
                a: (s, far),
                b: other,
                flip: false,
            });
        }
    }
    let target = SquareTiledSurface::build(
        &format!("{}+reglue", surface.name),
        surface.square_count(),
        &gl,
    )?;
    let map = shear_on(surface, target.clone(), cyl, &ring, qi(offset))?;
    Ok((target, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{covering_map, geodesic, grid_fold};

    fn torus(w: usize, h: usize) -> SquareTiledSurface {
        SquareTiledSurface::torus_grid("T", w, h)
    }

    fn pillow() -> Result<SurfaceMap, MapError> {
        grid_fold((1, 2), (1, 1), &[(0, false)], &[(0, false), (0, true)])
    }

    #[test]
    fn covering_has_no_folds() {
        let m = covering_map((2, 1), (1, 1), (0, 0), false).unwrap();
        assert!(m.detect_folds().is_empty());
    }

    #[test]
    fn pillow_fold_has_two_circles() {
        let m = pillow().unwrap();
        let locus = m.detect_folds();
        assert_eq!(locus.circles.len(), 2);
        for cv in &locus.critical_values {
            assert!(cv.iter().all(|p| p.from.y == p.to.y));
        }
    }

    #[test]
    fn shear_is_a_twist() {
        let t = torus(1, 1);
        let m = dehn_shear(&t, Cylinder::Horizontal(0), 1).unwrap();
        assert!(m.detect_folds().is_empty());
        let p = m.apply(SurfPt {
            square: 0,
            p: Pt::new(q(1, 4), q(1, 2)),
        });
        assert_eq!(p.p, Pt::new(q(3, 4), q(1, 2)));
        let p = m.apply(SurfPt {
            square: 0,
            p: Pt::new(q(3, 4), q(1, 2)),
        });
        assert_eq!(p.p, Pt::new(q(1, 4), q(1, 2)));
        let id = dehn_shear(&t, Cylinder::Horizontal(0), 0).unwrap();
        assert!(id.squares().iter().all(|s| s.affine == Affine::identity()));
    }

    #[test]
    fn column_shear_is_local() {
        let t = torus(2, 1);
        let m = dehn_shear(&t, Cylinder::Vertical(0), 1).unwrap();
        let moved = m.apply(SurfPt {
            square: 0,
            p: Pt::new(q(1, 2), q(1, 4)),
        });
        assert_eq!(
            moved,
            SurfPt {
                square: 0,
                p: Pt::new(q(1, 2), q(3, 4))
            }
        );
        let fixed = SurfPt {
            square: 1,
            p: Pt::new(q(1, 3), q(1, 5)),
        };
        assert_eq!(m.apply(fixed), fixed);
    }

    #[test]
    fn reglue_zero_is_identity() {
        let t = torus(2, 1);
        let (t2, m) = reglue(&t, Cylinder::Horizontal(0), 0).unwrap();
        assert!(t2.same_shape(&t));
        assert!(m.squares().iter().all(|s| s.affine == Affine::identity()));
        let (t3, _) = reglue(&t, Cylinder::Horizontal(0), 1).unwrap();
        assert_eq!(t3.genus(), 1);
    }

    #[test]
    fn covering_preimage_of_vertical_loop() {
        let m = covering_map((2, 1), (1, 1), (0, 0), false).unwrap();
        let l = geodesic(&m.target, "v", 1, 1, (0, 1), Pt::new(q(1, 2), q(1, 3))).unwrap();
        let pre = m.preimage(&l).unwrap();
        assert_eq!(pre.curve.components.len(), 2);
        let tall = covering_map((1, 2), (1, 1), (0, 0), false).unwrap();
        assert_eq!(tall.preimage(&l).unwrap().curve.components.len(), 1);
    }

    #[test]
    fn fold_preimage_doubles_back() {
        let m = pillow().unwrap();
        let l = geodesic(&m.target, "v", 1, 1, (0, 1), Pt::new(q(1, 3), q(1, 7))).unwrap();
        let pre = m.preimage(&l).unwrap();
        assert_eq!(pre.curve.components.len(), 1);
        assert_eq!(pre.curve.components[0].holonomy().shift, Pt::int(0, 2));
    }

    #[test]
    fn tangent_to_critical_value_is_rejected() {
        let m = pillow().unwrap();
        let l = crate::fixtures::polyline(
            &m.target,
            "touch",
            0,
            vec![
                Pt::new(q(1, 8), q(1, 4)),
                Pt::new(q(1, 2), q(1, 1)),
                Pt::new(q(9, 8), q(1, 4)),
            ],
        )
        .unwrap();
        assert!(matches!(
            m.preimage(&l),
            Err(CorrespondenceError::CurveThroughCriticalValueTangency { .. })
        ));
    }

    #[test]
    fn diagonal_composition_is_identity() {
        let t = torus(2, 1);
        let f = Correspondence::diagonal(&t);
        let l = crate::fixtures::wiggled(
            &t,
            "w",
            2,
            1,
            (1, 1),
            Pt::new(q(1, 3), q(1, 7)),
            &[(q(1, 2), q(1, 9))],
        )
        .unwrap();
        let c = f.compose(&l).unwrap();
        assert!(c.curve.same_as(&l, &t));
        let c2 = f.compose_left(&l).unwrap();
        assert!(c2.curve.same_as(&l, &t));
        let loc = Locator {
            comp: 0,
            seg: 1,
            t: q(1, 3),
        };
        assert_eq!(c.from_lifted(c.lift_locator(loc)), loc);
    }

    #[test]
    fn covering_composition_has_two_components() {
        let t1 = torus(1, 1);
        let g1 = covering_map((2, 1), (1, 1), (0, 0), false).unwrap();
        let g2 = covering_map((2, 1), (1, 1), (1, 0), false).unwrap();
        let f = Correspondence::new("F", g1, g2).unwrap();
        let l2 = geodesic(&t1, "v", 1, 1, (0, 1), Pt::new(q(1, 2), q(1, 3))).unwrap();
        let c = f.compose(&l2).unwrap();
        assert_eq!(c.curve.components.len(), 2);
        assert!(f.composability(&l2).composable);
    }

    #[test]
    fn same_fold_on_both_sides_is_not_an_immersion() {
        let m = pillow().unwrap();
        assert!(matches!(
            Correspondence::new("F", m.clone(), m),
            Err(MapError::NotImmersion { .. })
        ));
    }

    #[test]
    fn tangency_makes_composition_fail() {
        let fold = pillow().unwrap();
        let id = SurfaceMap::identity(&fold.source);
        let f = Correspondence::new("F", id, fold).unwrap();
        let l = crate::fixtures::polyline(
            &f.g2.target,
            "touch",
            0,
            vec![
                Pt::new(q(1, 8), q(1, 4)),
                Pt::new(q(1, 2), q(1, 1)),
                Pt::new(q(9, 8), q(1, 4)),
            ],
        )
        .unwrap();
        let c = f.composability(&l);
        assert!(!c.composable);
        assert_eq!(c.witness.unwrap().p.y, Q::zero());
    }
}
