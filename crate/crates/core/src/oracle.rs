//! Brute-force disc enumeration used to cross-check the disc search.
//!
//! Works on translation surfaces only (all gluings are translations), where the
//! plane tiled by copies of the squares is the universal cover of a torus.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::curve::{ImmersedCurve, Locator};
use crate::discs::{canonical_word, BoundaryArc, CombinatorialDisc, DiscError, BIGON_INDEX};
use crate::geom::{Pt, Q};
use crate::intersect::{fiber_product, IntersectionPoint};
use crate::surface::SquareTiledSurface;

#[derive(Clone, Debug)]
pub enum CornerSpec {
    Bigon {
        x_plus: IntersectionPoint,
        x_minus: IntersectionPoint,
    },
    Triangle {
        x: IntersectionPoint,
        y: IntersectionPoint,
        z: IntersectionPoint,
    },
}

/// A component lifted to the plane: segment `i` of period `k` sits at `shift[i] + k * period`.
struct Lift {
    n: usize,
    seg_from: Vec<Pt>,
    seg_to: Vec<Pt>,
    squares: Vec<usize>,
    shift: Vec<Pt>,
    period: Pt,
}

impl Lift {
    fn new(
        surface: &SquareTiledSurface,
        curve: &ImmersedCurve,
        comp: usize,
    ) -> Result<Lift, DiscError> {
        let offsets = square_offsets(surface)?;
        let c = &curve.components[comp];
        let n = c.len();
        let mut shift = Vec::with_capacity(n);
        let mut v = offsets[c.segments[0].square];
        for i in 0..n {
            shift.push(v);
            let next = &c.segments[(i + 1) % n];
            v = v + c.segments[i].to - next.from;
        }
        Ok(Lift {
            n,
            seg_from: c.segments.iter().map(|s| s.from).collect(),
            seg_to: c.segments.iter().map(|s| s.to).collect(),
            squares: c.segments.iter().map(|s| s.square).collect(),
            period: v - shift[0],
            shift,
        })
    }

    /// Plane point at curve parameter `s` (one unit per segment), before translation.
    fn at(&self, s: &Q) -> Pt {
        let k = s.floor();
        let frac = *s - k;
        let k = k.to_integer();
        let idx = k.rem_euclid(self.n as i128) as usize;
        let per = (k - idx as i128) / self.n as i128;
        let base = self.shift[idx] + self.period.scale(Q::from_integer(per));
        base + self.seg_from[idx] + (self.seg_to[idx] - self.seg_from[idx]).scale(frac)
    }

    fn seg_index(&self, s: &Q) -> usize {
        s.floor().to_integer().rem_euclid(self.n as i128) as usize
    }

    fn param_of(loc: &Locator) -> Q {
        Q::from_integer(loc.seg as i128) + loc.t
    }
}

/// Offsets placing each square in the plane along a spanning tree of the gluings.
fn square_offsets(surface: &SquareTiledSurface) -> Result<Vec<Pt>, DiscError> {
    let n = surface.square_count();
    let mut off: Vec<Option<Pt>> = vec![None; n];
    off[0] = Some(Pt::zero());
    let mut queue = std::collections::VecDeque::from([0usize]);
    let normals = [Pt::int(0, -1), Pt::int(1, 0), Pt::int(0, 1), Pt::int(-1, 0)];
    while let Some(s) = queue.pop_front() {
        for e in 0..4u8 {
            let (t, e2) = surface.neighbor(s, e);
            if e2 != (e + 2) % 4 {
                return Err(DiscError::Unsupported(format!(
                    "square {s} side {e} is glued with a rotation"
                )));
            }
            if off[t].is_none() {
                off[t] = Some(off[s].unwrap() + normals[e as usize]);
                queue.push_back(t);
            }
        }
    }
    Ok(off
        .into_iter()
        .map(|o| o.expect("surface is connected"))
        .collect())
}

/// A window of a translated lift: parameters `[lo, hi]`, translated by `shift`.
struct Window<'l> {
    lift: &'l Lift,
    comp: usize,
    shift: Pt,
    lo: Q,
    hi: Q,
}

impl<'l> Window<'l> {
    fn point(&self, s: &Q) -> Pt {
        self.lift.at(s) + self.shift
    }

    /// Breakpoints: the window ends and every integer parameter in between.
    fn params(&self) -> Vec<Q> {
        let mut out = vec![self.lo];
        let mut k = self.lo.floor() + Q::one();
        while k < self.hi {
            out.push(k);
            k += Q::one();
        }
        out.push(self.hi);
        out
    }

    /// Vertices between parameters `from` and `to`, in that order, both ends included.
    fn path(&self, from: &Q, to: &Q) -> Vec<Pt> {
        let mut ps: Vec<Q> = self
            .params()
            .into_iter()
            .filter(|p| (p > from && p < to) || (p < from && p > to))
            .collect();
        if from > to {
            ps.reverse();
        }
        let mut out = vec![self.point(from)];
        out.extend(ps.iter().map(|p| self.point(p)));
        out.push(self.point(to));
        out
    }

    /// Squares crossed between parameters `from` and `to`.
    fn squares(&self, from: &Q, to: &Q) -> Vec<usize> {
        let mut cuts: Vec<Q> = self
            .params()
            .into_iter()
            .filter(|p| (p > from && p < to) || (p < from && p > to))
            .collect();
        if from > to {
            cuts.reverse();
        }
        let mut stops = vec![*from];
        stops.extend(cuts);
        stops.push(*to);
        stops
            .windows(2)
            .map(|w| self.lift.squares[self.lift.seg_index(&((w[0] + w[1]) / Q::from_integer(2)))])
            .collect()
    }

    fn locator(&self, s: &Q) -> Locator {
        let k = s.floor();
        let t = *s - k;
        Locator {
            comp: self.comp,
            seg: k.to_integer().rem_euclid(self.lift.n as i128) as usize,
            t,
        }
    }
}

fn sign(v: Q) -> i8 {
    match v.cmp(&Q::zero()) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

fn turn(a: Pt, b: Pt, c: Pt) -> i8 {
    sign((b - a).cross(c - a))
}

/// Crossings of two windows as parameter pairs; `None` when they overlap along a segment.
fn crossings(u: &Window, v: &Window) -> Option<Vec<(Q, Q)>> {
    let pu = u.params();
    let pv = v.params();
    let mut out = BTreeMap::new();
    for i in 0..pu.len() - 1 {
        let (p0, p1) = (u.point(&pu[i]), u.point(&pu[i + 1]));
        for j in 0..pv.len() - 1 {
            let (q0, q1) = (v.point(&pv[j]), v.point(&pv[j + 1]));
            let d1 = turn(q0, q1, p0);
            let d2 = turn(q0, q1, p1);
            let d3 = turn(p0, p1, q0);
            let d4 = turn(p0, p1, q1);
            if d1 == 0 && d2 == 0 {
                let lo = |a: Q, b: Q| if a < b { (a, b) } else { (b, a) };
                let (ux, uy) = (lo(p0.x, p1.x), lo(p0.y, p1.y));
                let (vx, vy) = (lo(q0.x, q1.x), lo(q0.y, q1.y));
                let sharing = ux.0 <= vx.1 && vx.0 <= ux.1 && uy.0 <= vy.1 && vy.0 <= uy.1;
                if sharing {
                    return None;
                }
                continue;
            }
            if d1 * d2 > 0 || d3 * d4 > 0 {
                continue;
            }
            let r = p1 - p0;
            let w = q1 - q0;
            let den = r.cross(w);
            let t = (q0 - p0).cross(w) / den;
            let s = (q0 - p0).cross(r) / den;
            let a = pu[i] + (pu[i + 1] - pu[i]) * t;
            let b = pv[j] + (pv[j + 1] - pv[j]) * s;
            out.insert((a, b), ());
        }
    }
    Some(out.into_keys().collect())
}

/// Ear-clipping triangulation; returns the total area when the polygon is simple and ccw.
fn triangulated_area(poly: &[Pt]) -> Option<Q> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut total = Q::zero();
    let half = Q::new(1, 2);
    let mut guard = 0;
    while idx.len() > 3 {
        guard += 1;
        if guard > 4 * poly.len() * poly.len() + 16 {
            return None;
        }
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (a, b, c) = (
                poly[idx[(k + m - 1) % m]],
                poly[idx[k]],
                poly[idx[(k + 1) % m]],
            );
            if turn(a, b, c) <= 0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                let p = poly[j];
                p != a
                    && p != b
                    && p != c
                    && turn(a, b, p) >= 0
                    && turn(b, c, p) >= 0
                    && turn(c, a, p) >= 0
            });
            if blocked {
                continue;
            }
            total += (b - a).cross(c - a) * half;
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return None;
        }
    }
    let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
    if turn(a, b, c) <= 0 {
        return None;
    }
    total += (b - a).cross(c - a) * half;
    Some(total)
}

fn shoelace(poly: &[Pt]) -> Q {
    let n = poly.len();
    let mut s = Q::zero();
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    s / Q::from_integer(2)
}

/// Simple polygon check by pairwise edge tests.
fn simple(poly: &[Pt]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a0, a1) = (poly[i], poly[(i + 1) % n]);
        if a0 == a1 {
            return false;
        }
        for j in i + 1..n {
            let (b0, b1) = (poly[j], poly[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let d1 = turn(b0, b1, a0);
            let d2 = turn(b0, b1, a1);
            let d3 = turn(a0, a1, b0);
            let d4 = turn(a0, a1, b1);
            if adjacent {
                // only the shared vertex may touch: no folding back along the same line
                if d1 == 0 && d2 == 0 && (a1 - a0).dot(b1 - b0) < Q::zero() {
                    return false;
                }
                continue;
            }
            if d1 * d2 <= 0 && d3 * d4 <= 0 {
                if d1 == 0 && d2 == 0 {
                    let lo = |a: Q, b: Q| if a < b { (a, b) } else { (b, a) };
                    let (ux, uy) = (lo(a0.x, a1.x), lo(a0.y, a1.y));
                    let (vx, vy) = (lo(b0.x, b1.x), lo(b0.y, b1.y));
                    if ux.0 <= vx.1 && vx.0 <= ux.1 && uy.0 <= vy.1 && vy.0 <= uy.1 {
                        return false;
                    }
                    continue;
                }
                return false;
            }
        }
    }
    true
}

fn corner_ok(poly: &[Pt], k: usize) -> bool {
    let n = poly.len();
    turn(poly[(k + n - 1) % n], poly[k], poly[(k + 1) % n]) > 0
}

fn certify(poly: Vec<Pt>, corners: &[usize]) -> Option<(Vec<Pt>, Q)> {
    if poly.len() < 3 || !simple(&poly) {
        return None;
    }
    if !corners.iter().all(|&k| corner_ok(&poly, k)) {
        return None;
    }
    let area = triangulated_area(&poly)?;
    if area <= Q::zero() || area != shoelace(&poly) {
        return None;
    }
    Some((poly, area))
}

fn shift_through(lift: &Lift, loc: &Locator, target: Pt) -> Pt {
    target - lift.at(&Lift::param_of(loc))
}

/// Enumerates discs with the given corners by exhaustive search over pairs (or
/// triples) of lift points within `region_bound` periods of each corner.
pub fn oracle_enumerate(
    surface: &SquareTiledSurface,
    curves: &[&ImmersedCurve],
    spec: &CornerSpec,
    region_bound: usize,
) -> Result<Vec<CombinatorialDisc>, DiscError> {
    if region_bound == 0 {
        return Err(DiscError::RegionBoundTooSmall {
            bound: region_bound,
        });
    }
    let d = Q::from_integer(region_bound as i128);
    match spec {
        CornerSpec::Bigon { x_plus, x_minus } => {
            let (a, b) = (curves[0], curves[1]);
            let la = Lift::new(surface, a, x_plus.a.comp)?;
            let lb = Lift::new(surface, b, x_plus.b.comp)?;
            let sa = Lift::param_of(&x_plus.a);
            let sb = Lift::param_of(&x_plus.b);
            let p = la.at(&sa);
            let na = d * Q::from_integer(la.n as i128);
            let nb = d * Q::from_integer(lb.n as i128);
            let wa = Window {
                lift: &la,
                comp: x_plus.a.comp,
                shift: Pt::zero(),
                lo: sa - na,
                hi: sa + na,
            };
            let wb = Window {
                lift: &lb,
                comp: x_plus.b.comp,
                shift: shift_through(&lb, &x_plus.b, p),
                lo: sb - nb,
                hi: sb + nb,
            };
            let Some(vs) = crossings(&wa, &wb) else {
                return Err(DiscError::NonTransverseInput {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    at: p.to_string(),
                });
            };
            let mut out = BTreeMap::new();
            for (ta, tb) in vs {
                if ta == sa || tb == sb {
                    continue;
                }
                let (loc_a, loc_b) = (a.normalize(wa.locator(&ta)), b.normalize(wb.locator(&tb)));
                if loc_a != x_minus.a || loc_b != x_minus.b {
                    continue;
                }
                // boundary: along a from x_minus to x_plus, then along b back
                let mut poly = wa.path(&ta, &sa);
                let bpath = wb.path(&sb, &tb);
                let corner_plus = poly.len() - 1;
                poly.extend(bpath[1..bpath.len() - 1].iter().copied());
                let Some((region, area)) = certify(poly, &[0, corner_plus]) else {
                    continue;
                };
                let mut word = wa.squares(&ta, &sa);
                word.extend(wb.squares(&sb, &tb));
                let deck_word = canonical_word(word);
                let disc = CombinatorialDisc {
                    corners: vec![*x_plus, *x_minus],
                    arcs: vec![
                        BoundaryArc {
                            curve: a.label.clone(),
                            forward: ta < sa,
                            from: loc_a,
                            to: x_plus.a,
                            pieces: 0,
                        },
                        BoundaryArc {
                            curve: b.label.clone(),
                            forward: tb > sb,
                            from: x_plus.b,
                            to: loc_b,
                            pieces: 0,
                        },
                    ],
                    region,
                    deck_word: deck_word.clone(),
                    area,
                    index: BIGON_INDEX,
                };
                out.entry(deck_word).or_insert(disc);
            }
            Ok(out.into_values().collect())
        }
        CornerSpec::Triangle { x, y, z } => {
            let (a, b, c) = (curves[0], curves[1], curves[2]);
            let la = Lift::new(surface, a, x.a.comp)?;
            let lb = Lift::new(surface, b, x.b.comp)?;
            let lc = Lift::new(surface, c, y.b.comp)?;
            let sa = Lift::param_of(&x.a);
            let sb = Lift::param_of(&x.b);
            let px = la.at(&sa);
            let na = d * Q::from_integer(la.n as i128);
            let nb = d * Q::from_integer(lb.n as i128);
            let nc = d * Q::from_integer(lc.n as i128);
            let wa = Window {
                lift: &la,
                comp: x.a.comp,
                shift: Pt::zero(),
                lo: sa - na,
                hi: sa + na,
            };
            let wb = Window {
                lift: &lb,
                comp: x.b.comp,
                shift: shift_through(&lb, &x.b, px),
                lo: sb - nb,
                hi: sb + nb,
            };
            let mut out = BTreeMap::new();
            // lifts of y on the b window: parameters congruent to y's b-locator
            let yb = Lift::param_of(&y.a);
            let n_b = Q::from_integer(lb.n as i128);
            let mut k = ((wb.lo - yb) / n_b).ceil();
            loop {
                let ty = yb + k * n_b;
                k += Q::one();
                if ty > wb.hi {
                    break;
                }
                if ty == sb {
                    continue;
                }
                let py = wb.point(&ty);
                let sc = Lift::param_of(&y.b);
                let wc = Window {
                    lift: &lc,
                    comp: y.b.comp,
                    shift: shift_through(&lc, &y.b, py),
                    lo: sc - nc,
                    hi: sc + nc,
                };
                let Some(vs) = crossings(&wc, &wa) else {
                    continue;
                };
                for (tc, ta) in vs {
                    if ta == sa || tc == sc {
                        continue;
                    }
                    if a.normalize(wa.locator(&ta)) != z.a || c.normalize(wc.locator(&tc)) != z.b {
                        continue;
                    }
                    let mut poly = wa.path(&ta, &sa);
                    let cx = poly.len() - 1;
                    let bp = wb.path(&sb, &ty);
                    poly.extend(bp[1..].iter().copied());
                    let cy = poly.len() - 1;
                    let cp = wc.path(&sc, &tc);
                    poly.extend(cp[1..cp.len() - 1].iter().copied());
                    let Some((region, area)) = certify(poly, &[0, cx, cy]) else {
                        continue;
                    };
                    let mut word = wa.squares(&ta, &sa);
                    word.extend(wb.squares(&sb, &ty));
                    word.extend(wc.squares(&sc, &tc));
                    let deck_word = canonical_word(word);
                    let disc = CombinatorialDisc {
                        corners: vec![*x, *y, *z],
                        arcs: vec![
                            BoundaryArc {
                                curve: a.label.clone(),
                                forward: ta < sa,
                                from: z.a,
                                to: x.a,
                                pieces: 0,
                            },
                            BoundaryArc {
                                curve: b.label.clone(),
                                forward: ty > sb,
                                from: x.b,
                                to: y.a,
                                pieces: 0,
                            },
                            BoundaryArc {
                                curve: c.label.clone(),
                                forward: tc > sc,
                                from: y.b,
                                to: z.b,
                                pieces: 0,
                            },
                        ],
                        region,
                        deck_word: deck_word.clone(),
                        area,
                        index: 0,
                    };
                    out.entry(deck_word).or_insert(disc);
                }
            }
            Ok(out.into_values().collect())
        }
    }
}

/// Every bigon between `a` and `b`, found by the oracle, keyed by `(x_plus, x_minus)` indices
/// into `fiber_product(a, b)`.
pub fn oracle_all_bigons(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    region_bound: usize,
) -> Result<BTreeMap<(usize, usize), Vec<Vec<usize>>>, DiscError> {
    let pts = fiber_product(surface, a, b);
    let mut out = BTreeMap::new();
    for (i, xp) in pts.iter().enumerate() {
        for (j, xm) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let discs = oracle_enumerate(
                surface,
                &[a, b],
                &CornerSpec::Bigon {
                    x_plus: *xp,
                    x_minus: *xm,
                },
                region_bound,
            )?;
            if !discs.is_empty() {
                let mut words: Vec<Vec<usize>> = discs.into_iter().map(|d| d.deck_word).collect();
                words.sort();
                out.insert((i, j), words);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discs::{BigonSearch, SearchOptions, TriangleSearch};
    use crate::fixtures::{geodesic, polyline};
    use crate::geom::{q, qi};

    #[test]
    fn empty_arrangement() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h1 = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 3))).unwrap();
        let h2 = geodesic(&t, "b", 1, 1, (1, 0), Pt::new(qi(0), q(2, 3))).unwrap();
        assert!(oracle_all_bigons(&t, &h1, &h2, 2).unwrap().is_empty());
    }

    #[test]
    fn bound_zero_is_reported() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 3))).unwrap();
        let v = geodesic(&t, "b", 1, 1, (0, 1), Pt::new(q(1, 3), qi(0))).unwrap();
        let p = fiber_product(&t, &h, &v)[0];
        let err = oracle_enumerate(
            &t,
            &[&h, &v],
            &CornerSpec::Bigon {
                x_plus: p,
                x_minus: p,
            },
            0,
        )
        .unwrap_err();
        assert_eq!(err, DiscError::RegionBoundTooSmall { bound: 0 });
    }

    #[test]
    fn agrees_with_search_on_finger() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let n = polyline(
            &t,
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
        .unwrap();
        let oracle = oracle_all_bigons(&t, &h, &n, 4).unwrap();
        let search = BigonSearch::new(&t, &h, &n, &SearchOptions::default()).unwrap();
        let mut mine: BTreeMap<(usize, usize), Vec<Vec<usize>>> = BTreeMap::new();
        for i in 0..search.table.points.len() {
            for d in search.from_generator(i) {
                let j = search.table.find(d.corners[1].a, d.corners[1].b).unwrap();
                mine.entry((i, j)).or_default().push(d.deck_word);
            }
        }
        for v in mine.values_mut() {
            v.sort();
        }
        assert_eq!(oracle.len(), 2);
        assert_eq!(mine, oracle);
    }

    #[test]
    fn agrees_with_search_on_triangles() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let a = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let b = geodesic(&t, "b", 1, 1, (0, 1), Pt::new(q(1, 2), qi(0))).unwrap();
        let c = geodesic(&t, "c", 1, 1, (1, 1), Pt::new(q(1, 4), qi(0))).unwrap();
        let opts = SearchOptions {
            depth: 2,
            allow_unverified: false,
        };
        let search = TriangleSearch::new(&t, &a, &b, &c, &opts).unwrap();
        let mut total = 0;
        for (xi, x) in search.ab.points.iter().enumerate() {
            let found = search.from_corner(xi);
            for y in &search.bc.points {
                for z in &search.ac.points {
                    let mut mine: Vec<Vec<usize>> = found
                        .iter()
                        .filter(|d| d.corners[1] == *y && d.corners[2] == *z)
                        .map(|d| d.deck_word.clone())
                        .collect();
                    let mut theirs: Vec<Vec<usize>> = oracle_enumerate(
                        &t,
                        &[&a, &b, &c],
                        &CornerSpec::Triangle {
                            x: *x,
                            y: *y,
                            z: *z,
                        },
                        2,
                    )
                    .unwrap()
                    .into_iter()
                    .map(|d| d.deck_word)
                    .collect();
                    mine.sort();
                    theirs.sort();
                    assert_eq!(mine, theirs);
                    total += mine.len();
                }
            }
        }
        assert!(total > 0);
    }
}
