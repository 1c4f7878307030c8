//! SVG pictures of curves and generators on a square-tiled surface.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use crate::curve::ImmersedCurve;
use crate::geom::Pt;
use crate::surface::{side_normal, SquareTiledSurface, SurfPt};

const UNIT: f64 = 120.0;
const MARGIN: f64 = 24.0;
const COLOURS: [&str; 4] = ["#c0392b", "#2471a3", "#1e8449", "#7d3c98"];

/// Grid cell of every square: neighbours across unused sides are placed next to each
/// other, the rest start new rows.
pub fn layout(surface: &SquareTiledSurface) -> Vec<(i64, i64)> {
    let n = surface.square_count();
    let mut pos: Vec<Option<(i64, i64)>> = vec![None; n];
    let mut used = BTreeSet::new();
    for root in 0..n {
        if pos[root].is_some() {
            continue;
        }
        let lowest = used.iter().map(|&(_, y): &(i64, i64)| y).min().unwrap_or(0);
        let start = if used.is_empty() {
            (0, 0)
        } else {
            (0, lowest - 2)
        };
        pos[root] = Some(start);
        used.insert(start);
        let mut queue = VecDeque::from([root]);
        while let Some(s) = queue.pop_front() {
            let (x, y) = pos[s].expect("placed");
            for e in 0..4u8 {
                let (t, _) = surface.neighbor(s, e);
                if pos[t].is_some() {
                    continue;
                }
                let d = side_normal(e);
                let cell = (x + d.x.to_integer() as i64, y + d.y.to_integer() as i64);
                if used.insert(cell) {
                    pos[t] = Some(cell);
                    queue.push_back(t);
                }
            }
        }
    }
    pos.into_iter()
        .map(|p| p.expect("every square placed"))
        .collect()
}

struct Frame {
    cells: Vec<(i64, i64)>,
    min: (i64, i64),
    max_y: i64,
}

impl Frame {
    fn point(&self, square: usize, p: Pt) -> (f64, f64) {
        let (cx, cy) = self.cells[square];
        let (x, y) = p.to_f64();
        (
            MARGIN + ((cx - self.min.0) as f64 + x) * UNIT,
            MARGIN + ((self.max_y - cy) as f64 + 1.0 - y) * UNIT,
        )
    }
}

pub fn render(
    surface: &SquareTiledSurface,
    curves: &[&ImmersedCurve],
    points: &[SurfPt],
) -> String {
    let cells = layout(surface);
    let min_x = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let max_x = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let min_y = cells.iter().map(|c| c.1).min().unwrap_or(0);
    let max_y = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let frame = Frame {
        cells,
        min: (min_x, min_y),
        max_y,
    };
    let w = (max_x - min_x + 1) as f64 * UNIT + 2.0 * MARGIN;
    let h = (max_y - min_y + 1) as f64 * UNIT + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    for s in 0..surface.square_count() {
        let (x, y) = frame.point(s, Pt::int(0, 1));
        let _ = writeln!(
            out,
            r##"<rect x="{x:.3}" y="{y:.3}" width="{UNIT:.3}" height="{UNIT:.3}" fill="none" stroke="#999999"/>"##
        );
        let (lx, ly) = frame.point(s, Pt::int(0, 0));
        let _ = writeln!(
            out,
            r##"<text x="{:.3}" y="{:.3}" font-size="11" fill="#777777">{s}</text>"##,
            lx + 4.0,
            ly - 4.0
        );
    }
    let mut legend = BTreeMap::new();
    for (k, c) in curves.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        legend.insert(k, (c.label.clone(), colour));
        for comp in &c.components {
            for seg in &comp.segments {
                let (x0, y0) = frame.point(seg.square, seg.from);
                let (x1, y1) = frame.point(seg.square, seg.to);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}" stroke="{colour}" stroke-width="2"/>"#
                );
            }
        }
    }
    for p in points {
        let (x, y) = frame.point(p.square, p.p);
        let _ = writeln!(
            out,
            r##"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="#000000"/>"##
        );
    }
    for (k, (label, colour)) in &legend {
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN:.3}" y="{:.3}" font-size="12" fill="{colour}">{}</text>"#,
            14.0 + 14.0 * *k as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::polyline;
    use crate::geom::q;

    #[test]
    fn grid_layout_is_a_grid() {
        let t = SquareTiledSurface::torus_grid("T", 2, 2);
        let cells = layout(&t);
        let distinct: BTreeSet<_> = cells.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn render_is_deterministic() {
        let t = SquareTiledSurface::torus_grid("T", 1, 1);
        let c = polyline(
            &t,
            "A",
            0,
            vec![Pt::new(q(0, 1), q(1, 3)), Pt::new(q(1, 1), q(1, 3))],
        )
        .unwrap();
        let a = render(&t, &[&c], &[]);
        assert_eq!(a, render(&t, &[&c], &[]));
        assert!(a.contains("<line"));
    }
}
