//! Closed oriented surfaces glued from unit squares.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::geom::{clip_unit, in_unit, q, Motion, Pt, Q};

/// Sides of the unit square, counter-clockwise from the bottom.
pub const BOTTOM: u8 = 0;
pub const RIGHT: u8 = 1;
pub const TOP: u8 = 2;
pub const LEFT: u8 = 3;

pub fn side_name(e: u8) -> &'static str {
    match e {
        BOTTOM => "bottom",
        RIGHT => "right",
        TOP => "top",
        _ => "left",
    }
}

pub fn parse_side(s: &str) -> Option<u8> {
    match s {
        "bottom" | "b" => Some(BOTTOM),
        "right" | "r" => Some(RIGHT),
        "top" | "t" => Some(TOP),
        "left" | "l" => Some(LEFT),
        _ => None,
    }
}

/// Outward normal of side `e` (integer vector).
pub fn side_normal(e: u8) -> Pt {
    Pt::int(0, -1).rot(e)
}

/// Corner `c` of the unit square; side `e` runs from corner `e` to corner `e+1`.
pub fn corner(c: u8) -> Pt {
    match c % 4 {
        0 => Pt::int(0, 0),
        1 => Pt::int(1, 0),
        2 => Pt::int(1, 1),
        _ => Pt::int(0, 1),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("gluing table is malformed: {0}")]
    MalformedGluing(String),
    #[error("gluing of square {square} side {side} reverses orientation")]
    NonOrientable { square: usize, side: u8 },
    #[error("surface is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("path passes through a square corner in square {square} at {at}")]
    CornerHit { square: usize, at: Pt },
    #[error("path runs along an edge of square {square}")]
    AlongEdge { square: usize },
}

/// One entry of a gluing table: `(square, side)` glued to `(square', side')`.
/// `flip` requests the orientation-preserving-along-the-edge identification,
/// which makes the quotient non-orientable and is rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gluing {
    pub a: (usize, u8),
    pub b: (usize, u8),
    pub flip: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareTiledSurface {
    pub name: String,
    squares: usize,
    partner: Vec<[(usize, u8); 4]>,
    vertex_of: Vec<[usize; 4]>,
    vertex_rep: Vec<(usize, u8)>,
    genus: u32,
}

/// A point of the surface in the local coordinates of one square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfPt {
    pub square: usize,
    pub p: Pt,
}

impl std::fmt::Display for SurfPt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sq{}{}", self.square, self.p)
    }
}

/// Straight piece of a walk, in the local coordinates of its square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Piece {
    pub square: usize,
    pub from: Pt,
    pub to: Pt,
}

#[derive(Clone, Debug)]
pub struct Walk {
    pub pieces: Vec<Piece>,
    pub end: SurfPt,
    /// Maps the final square's local coordinates into the starting square's frame.
    pub motion: Motion,
}

impl SquareTiledSurface {
    /// Builds and validates a surface from a gluing table.
    pub fn build(name: &str, squares: usize, gluings: &[Gluing]) -> Result<Self, SurfaceError> {
        if squares == 0 {
            return Err(SurfaceError::MalformedGluing("no squares".into()));
        }
        let unset = (usize::MAX, 0u8);
        let mut partner = vec![[unset; 4]; squares];
        for g in gluings {
            for &(s, e) in [g.a, g.b].iter() {
                if s >= squares || e > 3 {
                    return Err(SurfaceError::MalformedGluing(format!("bad edge ({s},{e})")));
                }
            }
            if g.a == g.b {
                return Err(SurfaceError::MalformedGluing(format!(
                    "edge ({},{}) glued to itself",
                    g.a.0, g.a.1
                )));
            }
            for (x, y) in [(g.a, g.b), (g.b, g.a)] {
                if partner[x.0][x.1 as usize] != unset {
                    return Err(SurfaceError::MalformedGluing(format!(
                        "edge ({},{}) glued twice",
                        x.0, x.1
                    )));
                }
                partner[x.0][x.1 as usize] = y;
            }
        }
        for (s, row) in partner.iter().enumerate() {
            for (e, p) in row.iter().enumerate() {
                if *p == unset {
                    return Err(SurfaceError::MalformedGluing(format!(
                        "edge ({s},{e}) unglued"
                    )));
                }
            }
        }
        if let Some(g) = gluings.iter().find(|g| g.flip) {
            return Err(SurfaceError::NonOrientable {
                square: g.a.0,
                side: g.a.1,
            });
        }
        // connectivity over squares
        let mut seen = vec![false; squares];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &(t, _) in &partner[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        if seen.iter().any(|x| !x) {
            let mut comps = 0;
            let mut seen2 = vec![false; squares];
            for start in 0..squares {
                if seen2[start] {
                    continue;
                }
                comps += 1;
                let mut st = vec![start];
                seen2[start] = true;
                while let Some(s) = st.pop() {
                    for &(t, _) in &partner[s] {
                        if !seen2[t] {
                            seen2[t] = true;
                            st.push(t);
                        }
                    }
                }
            }
            return Err(SurfaceError::Disconnected { components: comps });
        }
        // vertex classes: corner e of s ~ corner e'+1 of s', corner e+1 of s ~ corner e' of s'
        let mut uf: Vec<usize> = (0..4 * squares).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut c = x;
            while uf[c] != r {
                let n = uf[c];
                uf[c] = r;
                c = n;
            }
            r
        }
        for s in 0..squares {
            for e in 0..4u8 {
                let (t, f) = partner[s][e as usize];
                let pairs = [(e, (f + 1) % 4), ((e + 1) % 4, f)];
                for (ce, cf) in pairs {
                    let a = find(&mut uf, 4 * s + ce as usize);
                    let b = find(&mut uf, 4 * t + cf as usize);
                    if a != b {
                        uf[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut vertex_of = vec![[0usize; 4]; squares];
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        let mut vertex_rep = Vec::new();
        for s in 0..squares {
            for c in 0..4 {
                let r = find(&mut uf, 4 * s + c);
                let next = ids.len();
                let id = *ids.entry(r).or_insert_with(|| {
                    vertex_rep.push((r / 4, (r % 4) as u8));
                    next
                });
                vertex_of[s][c] = id;
            }
        }
        let v = ids.len() as i64;
        let f = squares as i64;
        let chi = v - f; // V - E + F with E = 2F
        if chi > 2 || (2 - chi) % 2 != 0 {
            return Err(SurfaceError::MalformedGluing(format!(
                "Euler characteristic {chi} is not that of a closed orientable surface"
            )));
        }
        let genus = ((2 - chi) / 2) as u32;
        Ok(SquareTiledSurface {
            name: name.to_string(),
            squares,
            partner,
            vertex_of,
            vertex_rep,
            genus,
        })
    }

    /// `w × h` grid with straight (translation) gluings: a torus.
    pub fn torus_grid(name: &str, w: usize, h: usize) -> Self {
        let idx = |i: usize, j: usize| j * w + i;
        let mut g = Vec::new();
        for j in 0..h {
            for i in 0..w {
                g.push(Gluing {
                    a: (idx(i, j), RIGHT),
                    b: (idx((i + 1) % w, j), LEFT),
                    flip: false,
                });
                g.push(Gluing {
                    a: (idx(i, j), TOP),
                    b: (idx(i, (j + 1) % h), BOTTOM),
                    flip: false,
                });
            }
        }
        Self::build(name, w * h, &g).expect("grid torus is valid")
    }

    pub fn square_count(&self) -> usize {
        self.squares
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_rep.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.squares as i64
    }

    /// Vertex id of corner `c` of square `s`.
    pub fn vertex(&self, s: usize, c: u8) -> usize {
        self.vertex_of[s][(c % 4) as usize]
    }

    /// Same square count and gluing table, ignoring the name.
    pub fn same_shape(&self, other: &SquareTiledSurface) -> bool {
        self.squares == other.squares && self.partner == other.partner
    }

    pub fn neighbor(&self, s: usize, e: u8) -> (usize, u8) {
        self.partner[s][e as usize]
    }

    /// Gluing table with each pair listed once.
    pub fn gluings(&self) -> Vec<Gluing> {
        let mut out = Vec::new();
        for s in 0..self.squares {
            for e in 0..4u8 {
                let b = self.partner[s][e as usize];
                if (s, e) < b {
                    out.push(Gluing {
                        a: (s, e),
                        b,
                        flip: false,
                    });
                }
            }
        }
        out
    }

    /// Motion placing the neighbour across side `e` of `s` next to `s`, in `s`'s frame.
    pub fn cross_motion(&self, s: usize, e: u8) -> Motion {
        let (_, f) = self.partner[s][e as usize];
        let rot = (e + 2 + 4 - f) % 4;
        let min_corner = match rot {
            0 => Pt::int(0, 0),
            1 => Pt::int(-1, 0),
            2 => Pt::int(-1, -1),
            _ => Pt::int(0, -1),
        };
        Motion {
            rot,
            shift: side_normal(e) - min_corner,
        }
    }

    /// Sides of the unit square containing `p`.
    pub fn sides_of(p: Pt) -> Vec<u8> {
        let mut v = Vec::new();
        if p.y.is_zero() {
            v.push(BOTTOM);
        }
        if p.x == Q::one() {
            v.push(RIGHT);
        }
        if p.y == Q::one() {
            v.push(TOP);
        }
        if p.x.is_zero() {
            v.push(LEFT);
        }
        v
    }

    pub fn is_corner(p: Pt) -> bool {
        Self::sides_of(p).len() >= 2
    }

    /// Canonical representative of a surface point (edge and corner points have several).
    pub fn canonical(&self, sp: SurfPt) -> SurfPt {
        let sides = Self::sides_of(sp.p);
        match sides.len() {
            0 => sp,
            1 => {
                let other = self.across(sp, sides[0]);
                sp.min(other)
            }
            _ => {
                let c = (0..4u8).find(|&c| corner(c) == sp.p).expect("corner");
                let v = self.vertex_of[sp.square][c as usize];
                let (s, c) = self.vertex_rep[v];
                SurfPt {
                    square: s,
                    p: corner(c),
                }
            }
        }
    }

    /// The same point seen from the square across side `e`.
    pub fn across(&self, sp: SurfPt, e: u8) -> SurfPt {
        let (t, _) = self.neighbor(sp.square, e);
        let m = self.cross_motion(sp.square, e);
        SurfPt {
            square: t,
            p: m.inverse().apply(sp.p),
        }
    }

    pub fn same_point(&self, a: SurfPt, b: SurfPt) -> bool {
        self.canonical(a) == self.canonical(b)
    }

    /// Motion taking `b`'s square frame into `a`'s frame, when both name the same
    /// non-corner point.
    pub fn frame_between(&self, a: SurfPt, b: SurfPt) -> Option<Motion> {
        if a.square == b.square && a.p == b.p {
            return Some(Motion::identity());
        }
        for e in Self::sides_of(a.p) {
            let (t, _) = self.neighbor(a.square, e);
            if t != b.square {
                continue;
            }
            let m = self.cross_motion(a.square, e);
            if m.apply(b.p) == a.p {
                return Some(m);
            }
        }
        None
    }

    /// Walks a straight displacement `delta` (in the start square's frame) from `start`.
    pub fn walk(&self, start: SurfPt, delta: Pt) -> Result<Walk, SurfaceError> {
        let mut pieces = Vec::new();
        let mut s = start.square;
        let mut p = start.p;
        let mut target = p + delta;
        let mut total = Motion::identity();
        let mut guard = 0usize;
        loop {
            guard += 1;
            assert!(guard < 1_000_000, "walk does not terminate");
            if in_unit(target) {
                if p != target {
                    check_not_along_edge(s, p, target)?;
                    pieces.push(Piece {
                        square: s,
                        from: p,
                        to: target,
                    });
                }
                return Ok(Walk {
                    pieces,
                    end: SurfPt {
                        square: s,
                        p: target,
                    },
                    motion: total,
                });
            }
            let d = target - p;
            let exit = match clip_unit(p, target) {
                Some((_, hi)) => p + d.scale(hi),
                None => p,
            };
            if exit != p {
                check_not_along_edge(s, p, exit)?;
                pieces.push(Piece {
                    square: s,
                    from: p,
                    to: exit,
                });
            }
            let sides: Vec<u8> = Self::sides_of(exit)
                .into_iter()
                .filter(|&e| d.dot(side_normal(e)) > Q::zero())
                .collect();
            if Self::sides_of(exit).len() >= 2 {
                return Err(SurfaceError::CornerHit {
                    square: s,
                    at: exit,
                });
            }
            let e = match sides.first() {
                Some(&e) => e,
                None => return Err(SurfaceError::AlongEdge { square: s }),
            };
            let m = self.cross_motion(s, e);
            let inv = m.inverse();
            s = self.neighbor(s, e).0;
            p = inv.apply(exit);
            target = inv.apply(target);
            total = total.then_after(&m);
        }
    }

    /// Locates a plane point given in the frame of square `base`.
    ///
    /// The path runs along square midlines to the centre of the cell holding
    /// the point, so it never crosses a corner.
    pub fn locate(&self, base: usize, point: Pt) -> Result<(SurfPt, Motion), SurfaceError> {
        let half = q(1, 2);
        let cell = Pt::new(floor_q(point.x) + half, floor_q(point.y) + half);
        let centre = Pt::new(half, half);
        let w1 = self.walk(
            SurfPt {
                square: base,
                p: centre,
            },
            Pt::new(cell.x - centre.x, Q::zero()),
        )?;
        let mut total = w1.motion;
        let leg2 = total
            .inverse()
            .apply_vec(Pt::new(Q::zero(), cell.y - centre.y));
        let w2 = self.walk(w1.end, leg2)?;
        total = total.then_after(&w2.motion);
        let leg3 = total.inverse().apply_vec(point - cell);
        let w3 = self.walk(w2.end, leg3)?;
        total = total.then_after(&w3.motion);
        Ok((w3.end, total))
    }
}

fn check_not_along_edge(s: usize, a: Pt, b: Pt) -> Result<(), SurfaceError> {
    let sa = SquareTiledSurface::sides_of(a);
    let sb = SquareTiledSurface::sides_of(b);
    if sa.iter().any(|e| sb.contains(e)) {
        return Err(SurfaceError::AlongEdge { square: s });
    }
    Ok(())
}

pub fn floor_q(v: Q) -> Q {
    v.floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::qi;

    #[test]
    fn single_square_torus_has_genus_one() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        assert_eq!(t.genus(), 1);
        assert_eq!(t.vertex_count(), 1);
    }

    #[test]
    fn two_by_one_torus() {
        let t = SquareTiledSurface::torus_grid("T2", 2, 1);
        assert_eq!(t.genus(), 1);
        assert_eq!(t.euler_characteristic(), 0);
    }

    #[test]
    fn klein_bottle_rejected() {
        let g = [
            Gluing {
                a: (0, RIGHT),
                b: (0, LEFT),
                flip: false,
            },
            Gluing {
                a: (0, TOP),
                b: (0, BOTTOM),
                flip: true,
            },
        ];
        assert!(matches!(
            SquareTiledSurface::build("K", 1, &g),
            Err(SurfaceError::NonOrientable { .. })
        ));
        let g2 = [
            Gluing {
                a: (0, RIGHT),
                b: (0, LEFT),
                flip: true,
            },
            Gluing {
                a: (0, TOP),
                b: (0, BOTTOM),
                flip: true,
            },
        ];
        assert!(matches!(
            SquareTiledSurface::build("P", 1, &g2),
            Err(SurfaceError::NonOrientable { .. })
        ));
    }

    #[test]
    fn disconnected_and_malformed() {
        let mut g = Vec::new();
        for s in 0..2 {
            g.push(Gluing {
                a: (s, RIGHT),
                b: (s, LEFT),
                flip: false,
            });
            g.push(Gluing {
                a: (s, TOP),
                b: (s, BOTTOM),
                flip: false,
            });
        }
        assert_eq!(
            SquareTiledSurface::build("D", 2, &g),
            Err(SurfaceError::Disconnected { components: 2 })
        );
        let partial = [Gluing {
            a: (0, RIGHT),
            b: (0, LEFT),
            flip: false,
        }];
        assert!(matches!(
            SquareTiledSurface::build("M", 1, &partial),
            Err(SurfaceError::MalformedGluing(_))
        ));
    }

    #[test]
    fn shifted_rows_surface() {
        // two rows of two squares whose vertical gluings are shifted
        let g = [
            Gluing {
                a: (0, RIGHT),
                b: (1, LEFT),
                flip: false,
            },
            Gluing {
                a: (1, RIGHT),
                b: (0, LEFT),
                flip: false,
            },
            Gluing {
                a: (2, RIGHT),
                b: (3, LEFT),
                flip: false,
            },
            Gluing {
                a: (3, RIGHT),
                b: (2, LEFT),
                flip: false,
            },
            Gluing {
                a: (0, TOP),
                b: (2, BOTTOM),
                flip: false,
            },
            Gluing {
                a: (1, TOP),
                b: (3, BOTTOM),
                flip: false,
            },
            Gluing {
                a: (2, TOP),
                b: (1, BOTTOM),
                flip: false,
            },
            Gluing {
                a: (3, TOP),
                b: (0, BOTTOM),
                flip: false,
            },
        ];
        let s = SquareTiledSurface::build("S", 4, &g).unwrap();
        assert!(s.genus() >= 1);
        assert_eq!(2 - 2 * s.genus() as i64, s.euler_characteristic());
    }

    #[test]
    fn rotated_gluing_motion() {
        // single square, right glued to bottom and top to left: orientable
        let g = [
            Gluing {
                a: (0, RIGHT),
                b: (0, BOTTOM),
                flip: false,
            },
            Gluing {
                a: (0, TOP),
                b: (0, LEFT),
                flip: false,
            },
        ];
        let s = SquareTiledSurface::build("R", 1, &g).unwrap();
        let m = s.cross_motion(0, RIGHT);
        // bottom side of the neighbour lands on our right side
        assert_eq!(m.apply(Pt::int(0, 0)).x, qi(1));
        assert_eq!(m.apply(Pt::int(1, 0)).x, qi(1));
    }

    #[test]
    fn walk_wraps_torus() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let w = t
            .walk(
                SurfPt {
                    square: 0,
                    p: Pt::new(q(1, 2), q(1, 3)),
                },
                Pt::int(2, 0),
            )
            .unwrap();
        assert_eq!(w.pieces.len(), 3);
        assert_eq!(w.end.p, Pt::new(q(1, 2), q(1, 3)));
        assert_eq!(w.motion, Motion::translation(Pt::int(2, 0)));
    }

    #[test]
    fn walk_rejects_corner() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let r = t.walk(
            SurfPt {
                square: 0,
                p: Pt::new(q(1, 2), q(1, 2)),
            },
            Pt::int(1, 1),
        );
        assert!(matches!(r, Err(SurfaceError::CornerHit { .. })));
    }

    #[test]
    fn locate_far_point() {
        let t = SquareTiledSurface::torus_grid("T", 2, 3);
        let (sp, m) = t.locate(0, Pt::new(q(5, 2), q(-1, 3))).unwrap();
        assert_eq!(sp.square, 4);
        assert_eq!(m.apply(sp.p), Pt::new(q(5, 2), q(-1, 3)));
    }

    #[test]
    fn canonical_edge_points_agree() {
        let t = SquareTiledSurface::torus_grid("T", 2, 1);
        let a = SurfPt {
            square: 0,
            p: Pt::new(qi(1), q(1, 3)),
        };
        let b = SurfPt {
            square: 1,
            p: Pt::new(qi(0), q(1, 3)),
        };
        assert!(t.same_point(a, b));
        let c0 = SurfPt {
            square: 0,
            p: Pt::int(0, 0),
        };
        let c1 = SurfPt {
            square: 1,
            p: Pt::int(1, 1),
        };
        assert!(t.same_point(c0, c1));
    }
}
