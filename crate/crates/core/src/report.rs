//! Plain-text report sections. Everything here is a pure function of its input, so
//! identical runs give identical bytes.

use std::fmt::Write;

use crate::discs::CombinatorialDisc;
use crate::floer::{FloerComplex, Mu2};
use crate::geom::fmt_q;
use crate::intersect::IntersectionPoint;
use crate::perturbation::PerturbationPlan;
use crate::quilt::GeneratorTable;
use crate::scenario::fmt_pt;

pub fn generator(p: &IntersectionPoint) -> String {
    format!("{}|{} at {}", p.a, p.b, p.ambient)
}

pub fn disc_line(id: &str, d: &CombinatorialDisc) -> String {
    let corners: Vec<String> = d
        .corners
        .iter()
        .map(|c| format!("{}|{}", c.a, c.b))
        .collect();
    let word: Vec<String> = d.deck_word.iter().map(|s| s.to_string()).collect();
    format!(
        "{id} corners {} word [{}] area {}",
        corners.join(" -> "),
        word.join(" "),
        fmt_q(&d.area)
    )
}

fn matrix(out: &mut String, cf: &FloerComplex) {
    if cf.rank() == 0 {
        let _ = writeln!(out, "  differential: empty");
        return;
    }
    let _ = writeln!(out, "  differential (row = output, column = input):");
    for r in 0..cf.rank() {
        let _ = writeln!(out, "    {}", cf.differential.row_string(r));
    }
}

fn generators(out: &mut String, cf: &FloerComplex) {
    for (i, g) in cf.generators.iter().enumerate() {
        let _ = writeln!(out, "  g{i} = {}", generator(g));
    }
}

/// Generator table, matrix, entry provenance and disc appendix.
pub fn complex(name: &str, surface: &str, cf: &FloerComplex) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "complex {name} = CF({}, {}) on {surface}: {} generators{}",
        cf.left,
        cf.right,
        cf.rank(),
        if cf.declared { " (declared)" } else { "" }
    );
    generators(&mut out, cf);
    matrix(&mut out, cf);
    if !cf.provenance.is_empty() {
        let _ = writeln!(out, "  entries:");
        for ((row, col), ids) in &cf.provenance {
            let names: Vec<String> = ids.iter().map(|i| format!("d{i}")).collect();
            let _ = writeln!(
                out,
                "    g{col} -> g{row}: {} ({})",
                names.join(" "),
                if ids.len() % 2 == 1 { "odd" } else { "cancels" }
            );
        }
    }
    if !cf.discs.is_empty() {
        let _ = writeln!(out, "  discs:");
        for (i, d) in cf.discs.iter().enumerate() {
            let _ = writeln!(out, "    {}", disc_line(&format!("d{i}"), d));
        }
    }
    out
}

pub fn products(name: &str, m: &Mu2) -> String {
    let mut out = String::new();
    let [a, b, c] = &m.labels;
    let _ = writeln!(
        out,
        "products {name} for ({a}, {b}, {c}): {} x {} -> {}, {} triangles",
        m.ab.len(),
        m.bc.len(),
        m.ac.len(),
        m.discs.len()
    );
    for (i, p) in m.ab.iter().enumerate() {
        let _ = writeln!(out, "  x{i} = {}", generator(p));
    }
    for (i, p) in m.bc.iter().enumerate() {
        let _ = writeln!(out, "  y{i} = {}", generator(p));
    }
    for (i, p) in m.ac.iter().enumerate() {
        let _ = writeln!(out, "  z{i} = {}", generator(p));
    }
    for ((x, y, z), n) in &m.counts {
        let _ = writeln!(out, "  mu2(x{x}, y{y}) has z{z} with count {n}");
    }
    if !m.discs.is_empty() {
        let _ = writeln!(out, "  triangles:");
        for (i, d) in m.discs.iter().enumerate() {
            let _ = writeln!(out, "    {}", disc_line(&format!("t{i}"), d));
        }
    }
    out
}

/// A twisted complex: the new matrix and the triangle terms added to `d`.
pub fn twisted(
    name: &str,
    base: &str,
    formula: &str,
    tw: &FloerComplex,
    terms: &[String],
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "twisted complex {name} = {base} with d^b = {formula}: {} generators",
        tw.rank()
    );
    generators(&mut out, tw);
    matrix(&mut out, tw);
    if terms.is_empty() {
        let _ = writeln!(out, "  no triangle terms");
    } else {
        let _ = writeln!(out, "  triangle terms:");
        for t in terms {
            let _ = writeln!(out, "    {t}");
        }
    }
    out
}

pub fn chain(name: &str, complex: &str, cf: &FloerComplex, bits: &[bool]) -> String {
    let members: Vec<String> = bits
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(i, _)| format!("g{i}"))
        .collect();
    format!(
        "cochain {name} in {complex} ({} generators) = {}\n",
        cf.rank(),
        if members.is_empty() {
            "0".to_string()
        } else {
            members.join(" + ")
        }
    )
}

pub fn table(name: &str, t: &GeneratorTable) -> String {
    let mut out = String::new();
    let (n1, nq, n2) = t.counts();
    let _ = writeln!(
        out,
        "generators {name}: CF(L1, F∘L2) has {n1}, quilted has {nq}, CF(L1∘F, L2) has {n2}; bijections {}",
        if t.round_trips() { "round-trip" } else { "FAIL" }
    );
    for (k, g) in t.quilted.iter().enumerate() {
        let _ = writeln!(
            out,
            "  q{k} = {}  <->  view1 g{}  <->  view2 g{}",
            g, t.to_view1[k], t.to_view2[k]
        );
    }
    out
}

pub fn plan(p: &PerturbationPlan) -> String {
    let mut out = String::new();
    if p.moves.is_empty() {
        let _ = writeln!(out, "  {}: no moves", p.target);
    }
    for m in &p.moves {
        let _ = writeln!(
            out,
            "  {}: move {} -> {} by {} radius {}",
            p.target,
            m.from,
            m.to,
            fmt_pt(&m.displacement),
            fmt_q(&m.radius)
        );
    }
    out
}
