//! Text format for whole computations: surfaces, curves, maps, perturbations and a task list.
//!
//! ```text
//! quiltfloer-scenario v1
//! surface T torus 1 1
//! curve A on T
//!   path 0 0,1/3 1,1/3
//! end
//! ```
//!
//! Lines are whitespace-separated tokens; `#` starts a comment. Rationals are written
//! `p/q` or as integers, points as `x,y`, locators as `c0s3@1/4`, generators as
//! `<locator>|<locator>`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::correspondence::{Cylinder, SquareKind};
use crate::curve::{Locator, Segment};
use crate::geom::{fmt_q, Pt, Q};
use crate::perturbation::{Move, PerturbationPlan, Zone};
use crate::surface::parse_side;

pub const HEADER: &str = "quiltfloer-scenario v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        msg: msg.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceDef {
    Torus { w: usize, h: usize },
    Glued { squares: usize, glue: Vec<GlueLine> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueLine {
    pub a: (usize, u8),
    pub b: (usize, u8),
    pub flip: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapSquare {
    pub square: usize,
    pub target: usize,
    pub rows: [[Q; 3]; 2],
    /// `None` asks for the kinds to be inferred.
    pub kind: Option<SquareKind>,
}

/// A generator named by its two locators.
pub type GenRef = (Locator, Locator);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Surface {
        name: String,
        def: SurfaceDef,
    },
    Curve {
        name: String,
        surface: String,
        paths: Vec<(usize, Vec<Pt>)>,
    },
    Map {
        name: String,
        source: String,
        target: String,
        squares: Vec<MapSquare>,
    },
    Twist {
        name: String,
        surface: String,
        cylinder: Cylinder,
        amount: i128,
    },
    Chain {
        name: String,
        first: String,
        second: String,
    },
    Correspondence {
        name: String,
        g1: String,
        g2: String,
    },
    Perturb {
        name: String,
        plan: PerturbationPlan,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Task {
    /// `F ∘ L2` on the first factor.
    Compose {
        out: String,
        corr: String,
        curve: String,
    },
    /// `L1 ∘ F` on the second factor.
    ComposeLeft {
        out: String,
        curve: String,
        corr: String,
    },
    Apply {
        out: String,
        plan: String,
    },
    Transverse {
        outs: Vec<String>,
        curves: Vec<String>,
        keep: Vec<String>,
    },
    Complex {
        out: String,
        a: String,
        b: String,
        unverified: bool,
    },
    Products {
        out: String,
        curves: [String; 3],
        unverified: bool,
    },
    Declare {
        out: String,
        a: String,
        b: String,
        entries: Vec<(GenRef, GenRef)>,
    },
    Cochain {
        out: String,
        complex: String,
        gens: Vec<GenRef>,
    },
    MaurerCartan {
        b: String,
        mu0: String,
    },
    Twisted {
        out: String,
        complex: String,
        left: Option<(String, String)>,
        right: Option<(String, String)>,
    },
    Homology {
        complex: String,
    },
    Generators {
        out: String,
        l1: String,
        corr: String,
        l2: String,
    },
    Lift {
        complex: String,
        table: String,
    },
    ExpectRank {
        complex: String,
        rank: usize,
    },
    ExpectZero {
        complex: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub items: Vec<(usize, Item)>,
    pub tasks: Vec<(usize, Task)>,
}

impl Scenario {
    pub fn item(&self, name: &str) -> Option<&Item> {
        self.items.iter().map(|(_, i)| i).find(|i| i.name() == name)
    }
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Surface { name, .. }
            | Item::Curve { name, .. }
            | Item::Map { name, .. }
            | Item::Twist { name, .. }
            | Item::Chain { name, .. }
            | Item::Correspondence { name, .. }
            | Item::Perturb { name, .. } => name,
        }
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.parse::<i128>().ok()?, d.parse::<i128>().ok()?),
        None => (s.parse::<i128>().ok()?, 1),
    };
    (d != 0).then(|| Q::new(n, d))
}

pub fn parse_pt(s: &str) -> Option<Pt> {
    let (x, y) = s.split_once(',')?;
    Some(Pt::new(parse_q(x)?, parse_q(y)?))
}

pub fn parse_locator(s: &str) -> Option<Locator> {
    let rest = s.strip_prefix('c')?;
    let (comp, rest) = rest.split_once('s')?;
    let (seg, t) = rest.split_once('@')?;
    Some(Locator {
        comp: comp.parse().ok()?,
        seg: seg.parse().ok()?,
        t: parse_q(t)?,
    })
}

pub fn parse_gen(s: &str) -> Option<GenRef> {
    let (a, b) = s.split_once('|')?;
    Some((parse_locator(a)?, parse_locator(b)?))
}

pub fn fmt_pt(p: &Pt) -> String {
    format!("{},{}", fmt_q(&p.x), fmt_q(&p.y))
}

pub fn fmt_gen(g: &GenRef) -> String {
    format!("{}|{}", g.0, g.1)
}

/// Serializes a plan as a `perturb` block.
pub fn write_plan(name: &str, plan: &PerturbationPlan) -> String {
    let mut out = format!("perturb {name} on {}\n", plan.target);
    for m in &plan.moves {
        out.push_str(&format!(
            "  move {} -> {} by {} radius {}\n",
            m.from,
            m.to,
            fmt_pt(&m.displacement),
            fmt_q(&m.radius)
        ));
    }
    for z in &plan.fixed_zones {
        out.push_str(&format!("  zone {} radius {}", z.label, fmt_q(&z.radius)));
        for p in &z.pieces {
            out.push_str(&format!(" piece {} {}", p.square, fmt_pt(&p.from)));
            if p.to != p.from {
                out.push_str(&format!(" {}", fmt_pt(&p.to)));
            }
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let toks: Vec<&str> = l.split_whitespace().collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            })
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let l = self.lines.get(self.pos).cloned();
        self.pos += 1;
        l
    }

    /// Body lines of a block up to its `end`.
    fn block(&mut self, start: usize) -> Result<Vec<(usize, Vec<&'a str>)>, ParseError> {
        let mut body = Vec::new();
        loop {
            match self.next() {
                None => return err(start, "block is missing its `end`"),
                Some((_, t)) if t == ["end"] => return Ok(body),
                Some(l) => body.push(l),
            }
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, ParseError> {
    s.parse().map_err(|_| ParseError {
        line,
        msg: format!("expected {what}, found `{s}`"),
    })
}

fn rational(line: usize, s: &str) -> Result<Q, ParseError> {
    parse_q(s).ok_or_else(|| ParseError {
        line,
        msg: format!("expected a rational, found `{s}`"),
    })
}

fn point(line: usize, s: &str) -> Result<Pt, ParseError> {
    parse_pt(s).ok_or_else(|| ParseError {
        line,
        msg: format!("expected a point x,y, found `{s}`"),
    })
}

fn locator(line: usize, s: &str) -> Result<Locator, ParseError> {
    parse_locator(s).ok_or_else(|| ParseError {
        line,
        msg: format!("expected a locator like c0s1@1/2, found `{s}`"),
    })
}

fn generator(line: usize, s: &str) -> Result<GenRef, ParseError> {
    parse_gen(s).ok_or_else(|| ParseError {
        line,
        msg: format!("expected a generator like c0s1@1/2|c0s0@0, found `{s}`"),
    })
}

fn expect_tok(line: usize, toks: &[&str], i: usize, want: &str) -> Result<(), ParseError> {
    match toks.get(i) {
        Some(t) if *t == want => Ok(()),
        Some(t) => err(line, format!("expected `{want}`, found `{t}`")),
        None => err(line, format!("expected `{want}`")),
    }
}

fn arity(line: usize, toks: &[&str], n: usize, usage: &str) -> Result<(), ParseError> {
    if toks.len() != n {
        return err(line, format!("usage: {usage}"));
    }
    Ok(())
}

fn row(line: usize, s: &str) -> Result<[Q; 3], ParseError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return err(line, format!("expected an affine row a,b,c, found `{s}`"));
    }
    Ok([
        rational(line, parts[0])?,
        rational(line, parts[1])?,
        rational(line, parts[2])?,
    ])
}

fn parse_zone(line: usize, toks: &[&str]) -> Result<Zone, ParseError> {
    // zone <label> radius <r> (piece <sq> <pt> [<pt>])*
    if toks.len() < 4 {
        return err(
            line,
            "usage: zone <label> radius <r> piece <square> <x,y> [<x,y>] ...",
        );
    }
    expect_tok(line, toks, 2, "radius")?;
    let radius = rational(line, toks[3])?;
    let mut pieces = Vec::new();
    let mut i = 4;
    while i < toks.len() {
        expect_tok(line, toks, i, "piece")?;
        let sq: usize = num(
            line,
            toks.get(i + 1).copied().unwrap_or(""),
            "a square index",
        )?;
        let from = point(line, toks.get(i + 2).copied().unwrap_or(""))?;
        let mut to = from;
        i += 3;
        if let Some(p) = toks.get(i).and_then(|t| parse_pt(t)) {
            to = p;
            i += 1;
        }
        pieces.push(Segment {
            square: sq,
            from,
            to,
        });
    }
    if pieces.is_empty() {
        return err(line, "zone has no pieces");
    }
    Ok(Zone {
        label: toks[1].to_string(),
        pieces,
        radius,
    })
}

fn parse_item(lines: &mut Lines, line: usize, toks: &[&str]) -> Result<Option<Item>, ParseError> {
    let item = match toks[0] {
        "surface" => {
            if toks.len() < 3 {
                return err(
                    line,
                    "usage: surface <name> torus <w> <h> | surface <name> squares <n>",
                );
            }
            let name = toks[1].to_string();
            match toks[2] {
                "torus" => {
                    arity(line, toks, 5, "surface <name> torus <w> <h>")?;
                    let w: usize = num(line, toks[3], "a width")?;
                    let h: usize = num(line, toks[4], "a height")?;
                    if w == 0 || h == 0 {
                        return err(line, "torus dimensions must be positive");
                    }
                    Item::Surface {
                        name,
                        def: SurfaceDef::Torus { w, h },
                    }
                }
                "squares" => {
                    arity(line, toks, 4, "surface <name> squares <n>")?;
                    let squares: usize = num(line, toks[3], "a square count")?;
                    let mut glue = Vec::new();
                    for (l, t) in lines.block(line)? {
                        if t[0] != "glue" || !(t.len() == 5 || (t.len() == 6 && t[5] == "flip")) {
                            return err(l, "usage: glue <square> <side> <square> <side> [flip]");
                        }
                        let side = |s: &str| {
                            parse_side(s).ok_or_else(|| ParseError {
                                line: l,
                                msg: format!("unknown side `{s}`"),
                            })
                        };
                        glue.push(GlueLine {
                            a: (num(l, t[1], "a square index")?, side(t[2])?),
                            b: (num(l, t[3], "a square index")?, side(t[4])?),
                            flip: t.len() == 6,
                        });
                    }
                    Item::Surface {
                        name,
                        def: SurfaceDef::Glued { squares, glue },
                    }
                }
                other => return err(line, format!("unknown surface kind `{other}`")),
            }
        }
        "curve" => {
            arity(line, toks, 4, "curve <name> on <surface>")?;
            expect_tok(line, toks, 2, "on")?;
            let mut paths = Vec::new();
            for (l, t) in lines.block(line)? {
                if t[0] != "path" || t.len() < 4 {
                    return err(l, "usage: path <square> <x,y> <x,y> ...");
                }
                let sq: usize = num(l, t[1], "a square index")?;
                let pts = t[2..]
                    .iter()
                    .map(|s| point(l, s))
                    .collect::<Result<Vec<_>, _>>()?;
                paths.push((sq, pts));
            }
            if paths.is_empty() {
                return err(line, "curve has no paths");
            }
            Item::Curve {
                name: toks[1].to_string(),
                surface: toks[3].to_string(),
                paths,
            }
        }
        "map" => {
            // map <name> <source> -> <target>
            if toks.len() == 6 && toks[2] == "=" && toks[4] == "then" {
                Item::Chain {
                    name: toks[1].to_string(),
                    first: toks[3].to_string(),
                    second: toks[5].to_string(),
                }
            } else {
                arity(line, toks, 5, "map <name> <source> -> <target>")?;
                expect_tok(line, toks, 3, "->")?;
                let mut squares = Vec::new();
                for (l, t) in lines.block(line)? {
                    if t[0] != "sq" || t.len() != 7 || t[2] != "->" {
                        return err(
                            l,
                            "usage: sq <square> -> <target> <a,b,c> <d,e,f> <kind|auto>",
                        );
                    }
                    let kind = match t[6] {
                        "auto" => None,
                        k => Some(SquareKind::parse(k).ok_or_else(|| ParseError {
                            line: l,
                            msg: format!("unknown square kind `{k}`"),
                        })?),
                    };
                    squares.push(MapSquare {
                        square: num(l, t[1], "a square index")?,
                        target: num(l, t[3], "a square index")?,
                        rows: [row(l, t[4])?, row(l, t[5])?],
                        kind,
                    });
                }
                Item::Map {
                    name: toks[1].to_string(),
                    source: toks[2].to_string(),
                    target: toks[4].to_string(),
                    squares,
                }
            }
        }
        "twist" => {
            // twist <name> on <surface> <horizontal|vertical> <square> amount <k>
            arity(
                line,
                toks,
                8,
                "twist <name> on <surface> <horizontal|vertical> <square> amount <k>",
            )?;
            expect_tok(line, toks, 2, "on")?;
            expect_tok(line, toks, 6, "amount")?;
            let sq: usize = num(line, toks[5], "a square index")?;
            let cylinder = match toks[4] {
                "horizontal" => Cylinder::Horizontal(sq),
                "vertical" => Cylinder::Vertical(sq),
                o => {
                    return err(
                        line,
                        format!("expected horizontal or vertical, found `{o}`"),
                    )
                }
            };
            Item::Twist {
                name: toks[1].to_string(),
                surface: toks[3].to_string(),
                cylinder,
                amount: num(line, toks[7], "an integer amount")?,
            }
        }
        "correspondence" => {
            arity(line, toks, 5, "correspondence <name> = <g1> <g2>")?;
            expect_tok(line, toks, 2, "=")?;
            Item::Correspondence {
                name: toks[1].to_string(),
                g1: toks[3].to_string(),
                g2: toks[4].to_string(),
            }
        }
        "perturb" => {
            arity(line, toks, 4, "perturb <name> on <curve>")?;
            expect_tok(line, toks, 2, "on")?;
            let mut plan = PerturbationPlan::identity(toks[3]);
            for (l, t) in lines.block(line)? {
                match t[0] {
                    "move" => {
                        if t.len() != 8 || t[2] != "->" || t[4] != "by" || t[6] != "radius" {
                            return err(
                                l,
                                "usage: move <locator> -> <locator> by <dx,dy> radius <r>",
                            );
                        }
                        plan.moves.push(Move {
                            from: locator(l, t[1])?,
                            to: locator(l, t[3])?,
                            displacement: point(l, t[5])?,
                            radius: rational(l, t[7])?,
                        });
                    }
                    "zone" => plan.fixed_zones.push(parse_zone(l, &t)?),
                    o => return err(l, format!("expected move or zone, found `{o}`")),
                }
            }
            Item::Perturb {
                name: toks[1].to_string(),
                plan,
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(item))
}

fn parse_task(line: usize, t: &[&str]) -> Result<Task, ParseError> {
    let unverified = t.last() == Some(&"unverified");
    let t = if unverified { &t[..t.len() - 1] } else { t };
    let task = match t[0] {
        "compose" => {
            arity(line, t, 6, "compose <out> = <correspondence> o <curve>")?;
            expect_tok(line, t, 2, "=")?;
            expect_tok(line, t, 4, "o")?;
            Task::Compose {
                out: t[1].into(),
                corr: t[3].into(),
                curve: t[5].into(),
            }
        }
        "compose-left" => {
            arity(
                line,
                t,
                6,
                "compose-left <out> = <curve> o <correspondence>",
            )?;
            expect_tok(line, t, 2, "=")?;
            expect_tok(line, t, 4, "o")?;
            Task::ComposeLeft {
                out: t[1].into(),
                curve: t[3].into(),
                corr: t[5].into(),
            }
        }
        "apply" => {
            arity(line, t, 4, "apply <out> = <perturbation>")?;
            expect_tok(line, t, 2, "=")?;
            Task::Apply {
                out: t[1].into(),
                plan: t[3].into(),
            }
        }
        "transverse" => {
            // transverse <outs..> = <curves..> [keep <plan>..]
            let eq = t.iter().position(|x| *x == "=");
            let Some(eq) = eq else {
                return err(
                    line,
                    "usage: transverse <out>... = <curve>... [keep <perturb>...]",
                );
            };
            let keep_at = t.iter().position(|x| *x == "keep").unwrap_or(t.len());
            let outs: Vec<String> = t[1..eq].iter().map(|s| s.to_string()).collect();
            let curves: Vec<String> = t[eq + 1..keep_at].iter().map(|s| s.to_string()).collect();
            if outs.is_empty() || outs.len() != curves.len() {
                return err(line, "transverse needs one output name per input curve");
            }
            Task::Transverse {
                outs,
                curves,
                keep: t[(keep_at + 1).min(t.len())..]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            }
        }
        "complex" => {
            arity(line, t, 5, "complex <out> = <a> <b> [unverified]")?;
            expect_tok(line, t, 2, "=")?;
            Task::Complex {
                out: t[1].into(),
                a: t[3].into(),
                b: t[4].into(),
                unverified,
            }
        }
        "products" => {
            arity(line, t, 6, "products <out> = <a> <b> <c> [unverified]")?;
            expect_tok(line, t, 2, "=")?;
            Task::Products {
                out: t[1].into(),
                curves: [t[3].into(), t[4].into(), t[5].into()],
                unverified,
            }
        }
        "declare" => {
            // declare <out> = <a> <b> [mu1 <gen> -> <gen> ...]
            if t.len() < 5 || t[2] != "=" {
                return err(
                    line,
                    "usage: declare <out> = <a> <b> [mu1 <gen> -> <gen> ...]",
                );
            }
            let mut entries = Vec::new();
            if t.len() > 5 {
                expect_tok(line, t, 5, "mu1")?;
                let rest = &t[6..];
                if rest.len() % 3 != 0 {
                    return err(line, "mu1 entries are written <gen> -> <gen>");
                }
                for c in rest.chunks(3) {
                    expect_tok(line, c, 1, "->")?;
                    entries.push((generator(line, c[0])?, generator(line, c[2])?));
                }
            }
            Task::Declare {
                out: t[1].into(),
                a: t[3].into(),
                b: t[4].into(),
                entries,
            }
        }
        "cochain" => {
            // cochain <out> in <complex> = <gen>...
            if t.len() < 5 || t[2] != "in" || t[4] != "=" {
                return err(line, "usage: cochain <out> in <complex> = <gen> ...");
            }
            Task::Cochain {
                out: t[1].into(),
                complex: t[3].into(),
                gens: t[5..]
                    .iter()
                    .map(|s| generator(line, s))
                    .collect::<Result<_, _>>()?,
            }
        }
        "maurer-cartan" => {
            arity(line, t, 4, "maurer-cartan <b> mu0 <chain>")?;
            expect_tok(line, t, 2, "mu0")?;
            Task::MaurerCartan {
                b: t[1].into(),
                mu0: t[3].into(),
            }
        }
        "twisted" => {
            // twisted <out> = <complex> [left <b> <products>] [right <b> <products>]
            if t.len() < 4 || t[2] != "=" {
                return err(
                    line,
                    "usage: twisted <out> = <complex> [left <b> <products>] [right <b> <products>]",
                );
            }
            let (mut left, mut right) = (None, None);
            let mut i = 4;
            while i < t.len() {
                if i + 2 >= t.len() {
                    return err(line, "left/right take a cochain and a products table");
                }
                let pair = Some((t[i + 1].to_string(), t[i + 2].to_string()));
                match t[i] {
                    "left" => left = pair,
                    "right" => right = pair,
                    o => return err(line, format!("expected left or right, found `{o}`")),
                }
                i += 3;
            }
            Task::Twisted {
                out: t[1].into(),
                complex: t[3].into(),
                left,
                right,
            }
        }
        "homology" => {
            arity(line, t, 2, "homology <complex>")?;
            Task::Homology {
                complex: t[1].into(),
            }
        }
        "generators" => {
            arity(line, t, 6, "generators <out> = <L1> <correspondence> <L2>")?;
            expect_tok(line, t, 2, "=")?;
            Task::Generators {
                out: t[1].into(),
                l1: t[3].into(),
                corr: t[4].into(),
                l2: t[5].into(),
            }
        }
        "lift" => {
            arity(line, t, 4, "lift <complex> via <generators>")?;
            expect_tok(line, t, 2, "via")?;
            Task::Lift {
                complex: t[1].into(),
                table: t[3].into(),
            }
        }
        "expect" => match t.get(1).copied() {
            Some("rank") => {
                arity(line, t, 5, "expect rank <complex> = <n>")?;
                expect_tok(line, t, 3, "=")?;
                Task::ExpectRank {
                    complex: t[2].into(),
                    rank: num(line, t[4], "a rank")?,
                }
            }
            Some("zero") => {
                arity(line, t, 3, "expect zero <complex>")?;
                Task::ExpectZero {
                    complex: t[2].into(),
                }
            }
            _ => {
                return err(
                    line,
                    "usage: expect rank <complex> = <n> | expect zero <complex>",
                )
            }
        },
        o => return err(line, format!("unknown task `{o}`")),
    };
    let takes_flag = matches!(task, Task::Complex { .. } | Task::Products { .. });
    if unverified && !takes_flag {
        return err(line, "only complex and products tasks take `unverified`");
    }
    Ok(task)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Surface,
    Curve,
    Map,
    Corr,
    Plan,
    Complex,
    Products,
    Chain,
    Table,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Surface => "surface",
            Kind::Curve => "curve",
            Kind::Map => "map",
            Kind::Corr => "correspondence",
            Kind::Plan => "perturbation",
            Kind::Complex => "complex",
            Kind::Products => "products table",
            Kind::Chain => "cochain",
            Kind::Table => "generator table",
        };
        f.write_str(s)
    }
}

struct Names(BTreeMap<String, Kind>);

impl Names {
    fn define(&mut self, line: usize, name: &str, kind: Kind) -> Result<(), ParseError> {
        if self.0.insert(name.to_string(), kind).is_some() {
            return err(line, format!("`{name}` is defined twice"));
        }
        Ok(())
    }

    fn need(&self, line: usize, name: &str, kind: Kind) -> Result<(), ParseError> {
        match self.0.get(name) {
            Some(k) if *k == kind => Ok(()),
            Some(k) => err(line, format!("`{name}` is a {k}, expected a {kind}")),
            None => err(line, format!("undefined {kind} `{name}`")),
        }
    }
}

fn resolve(s: &Scenario) -> Result<(), ParseError> {
    let mut names = Names(BTreeMap::new());
    for (line, item) in &s.items {
        let line = *line;
        match item {
            Item::Surface { name, .. } => names.define(line, name, Kind::Surface)?,
            Item::Curve { name, surface, .. } => {
                names.need(line, surface, Kind::Surface)?;
                names.define(line, name, Kind::Curve)?;
            }
            Item::Map {
                name,
                source,
                target,
                ..
            } => {
                names.need(line, source, Kind::Surface)?;
                names.need(line, target, Kind::Surface)?;
                names.define(line, name, Kind::Map)?;
            }
            Item::Twist { name, surface, .. } => {
                names.need(line, surface, Kind::Surface)?;
                names.define(line, name, Kind::Map)?;
            }
            Item::Chain {
                name,
                first,
                second,
            } => {
                names.need(line, first, Kind::Map)?;
                names.need(line, second, Kind::Map)?;
                names.define(line, name, Kind::Map)?;
            }
            Item::Correspondence { name, g1, g2 } => {
                names.need(line, g1, Kind::Map)?;
                names.need(line, g2, Kind::Map)?;
                names.define(line, name, Kind::Corr)?;
            }
            Item::Perturb { name, .. } => names.define(line, name, Kind::Plan)?,
        }
    }
    for (line, task) in &s.tasks {
        let line = *line;
        match task {
            Task::Compose { out, corr, curve } | Task::ComposeLeft { out, curve, corr } => {
                names.need(line, corr, Kind::Corr)?;
                names.need(line, curve, Kind::Curve)?;
                names.define(line, out, Kind::Curve)?;
            }
            Task::Apply { out, plan } => {
                names.need(line, plan, Kind::Plan)?;
                let Some(Item::Perturb { plan: p, .. }) = s.item(plan) else {
                    unreachable!("checked above");
                };
                names.need(line, &p.target, Kind::Curve)?;
                names.define(line, out, Kind::Curve)?;
            }
            Task::Transverse { outs, curves, keep } => {
                for c in curves {
                    names.need(line, c, Kind::Curve)?;
                }
                for k in keep {
                    names.need(line, k, Kind::Plan)?;
                }
                for o in outs {
                    names.define(line, o, Kind::Curve)?;
                }
            }
            Task::Complex { out, a, b, .. } | Task::Declare { out, a, b, .. } => {
                names.need(line, a, Kind::Curve)?;
                names.need(line, b, Kind::Curve)?;
                names.define(line, out, Kind::Complex)?;
            }
            Task::Products { out, curves, .. } => {
                for c in curves {
                    names.need(line, c, Kind::Curve)?;
                }
                names.define(line, out, Kind::Products)?;
            }
            Task::Cochain { out, complex, .. } => {
                names.need(line, complex, Kind::Complex)?;
                names.define(line, out, Kind::Chain)?;
            }
            Task::MaurerCartan { b, mu0 } => {
                names.need(line, b, Kind::Chain)?;
                names.need(line, mu0, Kind::Chain)?;
            }
            Task::Twisted {
                out,
                complex,
                left,
                right,
            } => {
                names.need(line, complex, Kind::Complex)?;
                for (b, m) in left.iter().chain(right.iter()) {
                    names.need(line, b, Kind::Chain)?;
                    names.need(line, m, Kind::Products)?;
                }
                names.define(line, out, Kind::Complex)?;
            }
            Task::Homology { complex }
            | Task::ExpectRank { complex, .. }
            | Task::ExpectZero { complex } => names.need(line, complex, Kind::Complex)?,
            Task::Generators { out, l1, corr, l2 } => {
                names.need(line, l1, Kind::Curve)?;
                names.need(line, corr, Kind::Corr)?;
                names.need(line, l2, Kind::Curve)?;
                names.define(line, out, Kind::Table)?;
            }
            Task::Lift { complex, table } => {
                names.need(line, complex, Kind::Complex)?;
                names.need(line, table, Kind::Table)?;
            }
        }
    }
    Ok(())
}

/// Parses and resolves every name reference.
pub fn parse(text: &str) -> Result<Scenario, ParseError> {
    let mut lines = Lines::new(text);
    match lines.next() {
        Some((_, t)) if t.join(" ") == HEADER => {}
        Some((l, _)) => return err(l, format!("expected header `{HEADER}`")),
        None => return err(1, format!("empty scenario, expected header `{HEADER}`")),
    }
    let mut s = Scenario {
        items: Vec::new(),
        tasks: Vec::new(),
    };
    let mut in_tasks = false;
    while let Some((line, toks)) = lines.next() {
        if in_tasks {
            if toks == ["end"] {
                in_tasks = false;
                continue;
            }
            s.tasks.push((line, parse_task(line, &toks)?));
            continue;
        }
        if toks == ["tasks"] {
            in_tasks = true;
            continue;
        }
        match parse_item(&mut lines, line, &toks)? {
            Some(item) => s.items.push((line, item)),
            None => return err(line, format!("unknown block `{}`", toks[0])),
        }
    }
    if in_tasks {
        return err(
            lines.lines.last().map(|l| l.0).unwrap_or(1),
            "tasks block is missing its `end`",
        );
    }
    resolve(&s)?;
    Ok(s)
}

/// Scenarios shipped with the crate.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "torus-basic" => Some(include_str!("../scenarios/torus-basic.qfs")),
        "section5" => Some(include_str!("../scenarios/section5.qfs")),
        _ => None,
    }
}

pub const BUNDLED: [&str; 2] = ["torus-basic", "section5"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::q;

    #[test]
    fn parses_rationals_and_locators() {
        assert_eq!(parse_q("-3/6"), Some(q(-1, 2)));
        assert_eq!(parse_q("4"), Some(q(4, 1)));
        assert_eq!(parse_q("1/0"), None);
        let l = parse_locator("c1s12@3/4").unwrap();
        assert_eq!((l.comp, l.seg, l.t), (1, 12, q(3, 4)));
        let g = parse_gen("c0s1@0|c0s2@1/2").unwrap();
        assert_eq!(fmt_gen(&g), "c0s1@0|c0s2@1/2");
    }

    #[test]
    fn missing_header_is_reported_on_its_line() {
        let e = parse("\n\nsurface T torus 1 1\n").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn undefined_curve_is_a_parse_error() {
        let text = "quiltfloer-scenario v1\nsurface T torus 1 1\ntasks\n  complex X = A B\nend\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.msg.contains("undefined curve `A`"), "{}", e.msg);
    }

    #[test]
    fn plan_blocks_round_trip() {
        let plan = PerturbationPlan {
            target: "K".into(),
            moves: vec![Move {
                from: parse_locator("c0s6@1/2").unwrap(),
                to: parse_locator("c0s1@1/10").unwrap(),
                displacement: Pt::new(q(-1, 8), q(0, 1)),
                radius: q(1, 4),
            }],
            fixed_zones: vec![Zone {
                label: "seam".into(),
                pieces: vec![Segment {
                    square: 0,
                    from: Pt::new(q(0, 1), q(1, 2)),
                    to: Pt::new(q(0, 1), q(1, 2)),
                }],
                radius: q(1, 10),
            }],
        };
        let text = format!(
            "{HEADER}\nsurface T torus 1 1\ncurve K on T\n  path 0 0,1/3 1,1/3\nend\n{}",
            write_plan("P", &plan)
        );
        let s = parse(&text).unwrap();
        match s.item("P") {
            Some(Item::Perturb { plan: p, .. }) => assert_eq!(p, &plan),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bundled_scenarios_parse() {
        for name in BUNDLED {
            parse(bundled(name).unwrap()).unwrap();
        }
    }
}
