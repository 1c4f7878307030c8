//! Builders for common test configurations on square tori.

use num_traits::{One, Zero};

use crate::correspondence::{MapError, SquareKind, SquareMap, SurfaceMap};
use crate::curve::{CurveError, DevelopedSpec, ImmersedCurve};
use crate::geom::{Affine, Pt, Q};
use crate::surface::SquareTiledSurface;

/// Closed polyline starting in `square`, given in that square's frame.
pub fn polyline(
    surface: &SquareTiledSurface,
    label: &str,
    square: usize,
    points: Vec<Pt>,
) -> Result<ImmersedCurve, CurveError> {
    ImmersedCurve::from_developed(
        surface,
        label,
        &[DevelopedSpec {
            label: label.to_string(),
            square,
            points,
        }],
    )
}

/// Straight closed curve on a `w × h` grid torus of class `(p, q)`, starting at `start` in square 0.
pub fn geodesic(
    surface: &SquareTiledSurface,
    label: &str,
    w: i128,
    h: i128,
    class: (i128, i128),
    start: Pt,
) -> Result<ImmersedCurve, CurveError> {
    let d = Pt::int(class.0 * w, class.1 * h);
    polyline(surface, label, 0, vec![start, start + d])
}

/// Geodesic of class `(p, q)` with bumps: each `(s, h)` places a vertex at fraction `s`
/// along the line, pushed sideways by `h` (in units of the line's L1 length).
pub fn wiggled(
    surface: &SquareTiledSurface,
    label: &str,
    w: i128,
    h: i128,
    class: (i128, i128),
    start: Pt,
    bumps: &[(Q, Q)],
) -> Result<ImmersedCurve, CurveError> {
    let d = Pt::int(class.0 * w, class.1 * h);
    let l1 = Q::from_integer(d.x.numer().abs() + d.y.numer().abs());
    let normal = Pt::new(-d.y / l1, d.x / l1);
    let mut pts = vec![start];
    for (s, amp) in bumps {
        pts.push(start + d.scale(*s) + normal.scale(*amp * l1));
    }
    pts.push(start + d);
    polyline(surface, label, 0, pts)
}

/// Covering of a `w1 × h1` grid torus by a `w × h` one, shifted by `offset` squares
/// and optionally turned by a half turn.
pub fn covering_map(
    src: (usize, usize),
    tgt: (usize, usize),
    offset: (i128, i128),
    half_turn: bool,
) -> Result<SurfaceMap, MapError> {
    let (w, h) = src;
    let (w1, h1) = (tgt.0 as i128, tgt.1 as i128);
    let source = SquareTiledSurface::torus_grid(&format!("T{w}x{h}"), w, h);
    let target = SquareTiledSurface::torus_grid(&format!("T{}x{}", tgt.0, tgt.1), tgt.0, tgt.1);
    let (o, z) = (Q::one(), Q::zero());
    let mut squares = Vec::with_capacity(w * h);
    for j in 0..h as i128 {
        for i in 0..w as i128 {
            let (ci, cj, affine) = if half_turn {
                (
                    offset.0 - i - 1,
                    offset.1 - j - 1,
                    Affine::from_rows([-o, z, o], [z, -o, o]),
                )
            } else {
                (offset.0 + i, offset.1 + j, Affine::identity())
            };
            let t = (cj.rem_euclid(h1) * w1 + ci.rem_euclid(w1)) as usize;
            squares.push(SquareMap {
                target: t,
                affine,
                kind: SquareKind::Covering,
            });
        }
    }
    SurfaceMap::new("cover", source, target, squares)
}

/// Product of two interval maps on grid tori: column `i` goes to column `cols[i].0`
/// (mirrored if `cols[i].1`), row `j` to row `rows[j].0` likewise.
pub fn grid_fold(
    src: (usize, usize),
    tgt: (usize, usize),
    cols: &[(usize, bool)],
    rows: &[(usize, bool)],
) -> Result<SurfaceMap, MapError> {
    let (w, h) = src;
    assert!(
        cols.len() == w && rows.len() == h,
        "one entry per column and row"
    );
    let source = SquareTiledSurface::torus_grid(&format!("T{w}x{h}"), w, h);
    let target = SquareTiledSurface::torus_grid(&format!("T{}x{}", tgt.0, tgt.1), tgt.0, tgt.1);
    let (o, z) = (Q::one(), Q::zero());
    let mut squares = Vec::with_capacity(w * h);
    for &(rj, fy) in rows {
        for &(ci, fx) in cols {
            let rx = if fx { [-o, z, o] } else { [o, z, z] };
            let ry = if fy { [z, -o, o] } else { [z, o, z] };
            let t = rj * tgt.0 + ci;
            squares.push(SquareMap {
                target: t,
                affine: Affine::from_rows(rx, ry),
                kind: SquareKind::Covering,
            });
        }
    }
    SurfaceMap::inferred("fold", source, target, squares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::q;

    #[test]
    fn builds_wiggled_curve() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let c = wiggled(
            &t,
            "w",
            1,
            1,
            (0, 1),
            Pt::new(q(1, 3), q(0, 1)),
            &[(q(1, 2), q(1, 5))],
        )
        .unwrap();
        assert_eq!(c.components.len(), 1);
        assert!(c.components[0].holonomy().shift == Pt::int(0, 1));
    }
}
