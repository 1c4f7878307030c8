//! Executes a scenario and renders its report.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::correspondence::{
    dehn_shear, reglue, Correspondence, SquareKind, SquareMap, SurfaceMap,
};
use crate::curve::{DevelopedSpec, ImmersedCurve};
use crate::develop::is_embedded_lift;
use crate::discs::SearchOptions;
use crate::floer::{
    build_cf, homology, maurer_cartan, mu2, twisted_differential, BitMatrix, FloerComplex, Mu2,
};
use crate::geom::Affine;
use crate::intersect::{fiber_product, self_intersections, IntersectionPoint};
use crate::par::Strategy;
use crate::perturbation::{apply_plan, make_transverse, PerturbationPlan};
use crate::quilt::{identify_generators, lift_bigon_to_quilt, projection_matches, GeneratorTable};
use crate::report;
use crate::scenario::{self, GenRef, Item, Scenario, SurfaceDef, Task};
use crate::surface::{Gluing, SquareTiledSurface, SurfPt};
use crate::svg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TwistReading {
    /// The twist is a shear map of the surface onto itself.
    #[default]
    Shear,
    /// The twist re-glues the cylinder and maps onto the new surface.
    Reglue,
}

impl TwistReading {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shear" => Some(TwistReading::Shear),
            "reglue" => Some(TwistReading::Reglue),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TwistReading::Shear => "shear",
            TwistReading::Reglue => "reglue",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub depth: usize,
    /// Admit curves without an embedded-lift certificate everywhere.
    pub allow_unverified: bool,
    pub twist: TwistReading,
    pub strategy: Strategy,
    pub svg: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            depth: 4,
            allow_unverified: false,
            twist: TwistReading::Shear,
            strategy: Strategy::Parallel,
            svg: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// An expectation or validation did not hold.
    Failed,
    /// A computation could not be carried out; later tasks were skipped.
    Error,
    Parse,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Error => 2,
            Status::Parse => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: String,
    /// `(file name, contents)`.
    pub svgs: Vec<(String, String)>,
    pub status: Status,
}

enum Value {
    Surface(SquareTiledSurface),
    Curve {
        surface: String,
        curve: ImmersedCurve,
    },
    Map {
        map: SurfaceMap,
        source: String,
        target: String,
    },
    Corr {
        corr: Correspondence,
        f1: String,
        f2: String,
    },
    Plan(PerturbationPlan),
    Complex {
        surface: String,
        cf: FloerComplex,
        twisted: bool,
    },
    Products(Mu2),
    Chain {
        complex: String,
        bits: Vec<bool>,
    },
    Table {
        table: GeneratorTable,
        l1: String,
        corr: String,
    },
}

type Step<T> = Result<T, String>;

struct Env {
    opts: RunOptions,
    values: BTreeMap<String, Value>,
    svgs: Vec<(String, String)>,
    failed: bool,
}

impl Env {
    fn new(opts: RunOptions) -> Self {
        Env {
            opts,
            values: BTreeMap::new(),
            svgs: Vec::new(),
            failed: false,
        }
    }

    fn put(&mut self, name: &str, v: Value) {
        self.values.insert(name.to_string(), v);
    }

    fn surface(&self, name: &str) -> Step<&SquareTiledSurface> {
        match self.values.get(name) {
            Some(Value::Surface(s)) => Ok(s),
            _ => Err(format!("surface `{name}` is not available")),
        }
    }

    fn curve(&self, name: &str) -> Step<(&str, &ImmersedCurve)> {
        match self.values.get(name) {
            Some(Value::Curve { surface, curve }) => Ok((surface, curve)),
            _ => Err(format!("curve `{name}` is not available")),
        }
    }

    /// Two curves on one surface.
    fn pair(&self, a: &str, b: &str) -> Step<(String, &ImmersedCurve, &ImmersedCurve)> {
        let (sa, ca) = self.curve(a)?;
        let (sb, cb) = self.curve(b)?;
        if sa != sb {
            return Err(format!("`{a}` lives on {sa} but `{b}` lives on {sb}"));
        }
        Ok((sa.to_string(), ca, cb))
    }

    fn map(&self, name: &str) -> Step<(&SurfaceMap, &str, &str)> {
        match self.values.get(name) {
            Some(Value::Map {
                map,
                source,
                target,
            }) => Ok((map, source, target)),
            _ => Err(format!("map `{name}` is not available")),
        }
    }

    fn corr(&self, name: &str) -> Step<(&Correspondence, &str, &str)> {
        match self.values.get(name) {
            Some(Value::Corr { corr, f1, f2 }) => Ok((corr, f1, f2)),
            _ => Err(format!("correspondence `{name}` is not available")),
        }
    }

    fn plan(&self, name: &str) -> Step<&PerturbationPlan> {
        match self.values.get(name) {
            Some(Value::Plan(p)) => Ok(p),
            _ => Err(format!("perturbation `{name}` is not available")),
        }
    }

    fn complex(&self, name: &str) -> Step<(&str, &FloerComplex, bool)> {
        match self.values.get(name) {
            Some(Value::Complex {
                surface,
                cf,
                twisted,
            }) => Ok((surface, cf, *twisted)),
            _ => Err(format!("complex `{name}` is not available")),
        }
    }

    fn products(&self, name: &str) -> Step<&Mu2> {
        match self.values.get(name) {
            Some(Value::Products(m)) => Ok(m),
            _ => Err(format!("products `{name}` are not available")),
        }
    }

    fn chain(&self, name: &str) -> Step<(&str, &[bool])> {
        match self.values.get(name) {
            Some(Value::Chain { complex, bits }) => Ok((complex, bits)),
            _ => Err(format!("cochain `{name}` is not available")),
        }
    }

    fn search(&self, unverified: bool) -> SearchOptions {
        SearchOptions {
            depth: self.opts.depth,
            allow_unverified: self.opts.allow_unverified || unverified,
        }
    }

    fn item(&mut self, item: &Item) -> Step<String> {
        match item {
            Item::Surface { name, def } => {
                let s = match def {
                    SurfaceDef::Torus { w, h } => SquareTiledSurface::torus_grid(name, *w, *h),
                    SurfaceDef::Glued { squares, glue } => {
                        let gl: Vec<Gluing> = glue
                            .iter()
                            .map(|g| Gluing {
                                a: g.a,
                                b: g.b,
                                flip: g.flip,
                            })
                            .collect();
                        SquareTiledSurface::build(name, *squares, &gl).map_err(|e| e.to_string())?
                    }
                };
                let line = format!(
                    "surface {name}: {} squares, genus {}, {} vertices\n",
                    s.square_count(),
                    s.genus(),
                    s.vertex_count()
                );
                self.put(name, Value::Surface(s));
                Ok(line)
            }
            Item::Curve {
                name,
                surface,
                paths,
            } => {
                let s = self.surface(surface)?;
                let specs: Vec<DevelopedSpec> = paths
                    .iter()
                    .map(|(square, points)| DevelopedSpec {
                        label: name.clone(),
                        square: *square,
                        points: points.clone(),
                    })
                    .collect();
                let c = ImmersedCurve::from_developed(s, name, &specs)
                    .map_err(|e| format!("curve {name}: {e}"))?
                    .normalized(s);
                let line = curve_line(name, surface, &c);
                self.put(
                    name,
                    Value::Curve {
                        surface: surface.clone(),
                        curve: c,
                    },
                );
                Ok(line)
            }
            Item::Map {
                name,
                source,
                target,
                squares,
            } => {
                let src = self.surface(source)?.clone();
                let tgt = self.surface(target)?.clone();
                let sq: Vec<SquareMap> = squares
                    .iter()
                    .map(|m| SquareMap {
                        target: m.target,
                        affine: Affine::from_rows(m.rows[0], m.rows[1]),
                        kind: m.kind.unwrap_or(SquareKind::Covering),
                    })
                    .collect();
                let map = if squares.iter().any(|m| m.kind.is_none()) {
                    SurfaceMap::inferred(name, src, tgt, sq)
                } else {
                    SurfaceMap::new(name, src, tgt, sq)
                }
                .map_err(|e| format!("map {name}: {e}"))?;
                let line = map_line(&map, source, target);
                self.put(
                    name,
                    Value::Map {
                        map,
                        source: source.clone(),
                        target: target.clone(),
                    },
                );
                Ok(line)
            }
            Item::Twist {
                name,
                surface,
                cylinder,
                amount,
            } => {
                let s = self.surface(surface)?.clone();
                let (mut map, target) = match self.opts.twist {
                    TwistReading::Shear => (
                        dehn_shear(&s, *cylinder, *amount)
                            .map_err(|e| format!("twist {name}: {e}"))?,
                        surface.clone(),
                    ),
                    TwistReading::Reglue => {
                        let (mut t, m) = reglue(&s, *cylinder, *amount)
                            .map_err(|e| format!("twist {name}: {e}"))?;
                        let tname = format!("{name}.target");
                        t.name = tname.clone();
                        self.put(&tname, Value::Surface(t));
                        (m, tname)
                    }
                };
                map.name = name.clone();
                let line = map_line(&map, surface, &target);
                self.put(
                    name,
                    Value::Map {
                        map,
                        source: surface.clone(),
                        target,
                    },
                );
                Ok(line)
            }
            Item::Chain {
                name,
                first,
                second,
            } => {
                let (m1, source, mid) = self.map(first)?;
                let (m2, mid2, target) = self.map(second)?;
                if mid != mid2 {
                    return Err(format!(
                        "map {name}: `{first}` lands on {mid} but `{second}` starts on {mid2}"
                    ));
                }
                let map = m1.then(m2, name).map_err(|e| format!("map {name}: {e}"))?;
                let (source, target) = (source.to_string(), target.to_string());
                let line = map_line(&map, &source, &target);
                self.put(
                    name,
                    Value::Map {
                        map,
                        source,
                        target,
                    },
                );
                Ok(line)
            }
            Item::Correspondence { name, g1, g2 } => {
                let (m1, s1, f1) = self.map(g1)?;
                let (m2, s2, f2) = self.map(g2)?;
                if s1 != s2 {
                    return Err(format!(
                        "correspondence {name}: `{g1}` starts on {s1} but `{g2}` starts on {s2}"
                    ));
                }
                let corr = Correspondence::new(name, m1.clone(), m2.clone())
                    .map_err(|e| format!("correspondence {name}: {e}"))?;
                let line = format!("correspondence {name}: {s1} -> {f1} x {f2}\n");
                let (f1, f2) = (f1.to_string(), f2.to_string());
                self.put(name, Value::Corr { corr, f1, f2 });
                Ok(line)
            }
            Item::Perturb { name, plan } => {
                let mut out = format!("perturbation {name} of {}:\n", plan.target);
                out.push_str(&report::plan(plan));
                for z in &plan.fixed_zones {
                    let _ = writeln!(
                        out,
                        "  keeps zone {} ({} pieces) fixed",
                        z.label,
                        z.pieces.len()
                    );
                }
                self.put(name, Value::Plan(plan.clone()));
                Ok(out)
            }
        }
    }

    fn task(&mut self, task: &Task) -> Step<String> {
        match task {
            Task::Compose { out, corr, curve } => {
                let (f, f1, f2) = self.corr(corr)?;
                let (s, c) = self.curve(curve)?;
                if s != f2 {
                    return Err(format!("`{curve}` lives on {s}, not on {f2}"));
                }
                let comp = f.compose(c).map_err(|e| e.to_string())?;
                let line = format!(
                    "{}  preimage on {}: {} segments\n",
                    curve_line(out, f1, &comp.curve),
                    f.total().name,
                    comp.lifted.curve.segment_count()
                );
                let f1 = f1.to_string();
                self.put(
                    out,
                    Value::Curve {
                        surface: f1,
                        curve: comp.curve,
                    },
                );
                Ok(line)
            }
            Task::ComposeLeft { out, curve, corr } => {
                let (f, f1, f2) = self.corr(corr)?;
                let (s, c) = self.curve(curve)?;
                if s != f1 {
                    return Err(format!("`{curve}` lives on {s}, not on {f1}"));
                }
                let comp = f.compose_left(c).map_err(|e| e.to_string())?;
                let line = format!(
                    "{}  preimage on {}: {} segments\n",
                    curve_line(out, f2, &comp.curve),
                    f.total().name,
                    comp.lifted.curve.segment_count()
                );
                let f2 = f2.to_string();
                self.put(
                    out,
                    Value::Curve {
                        surface: f2,
                        curve: comp.curve,
                    },
                );
                Ok(line)
            }
            Task::Apply { out, plan } => {
                let p = self.plan(plan)?.clone();
                let (s, c) = self.curve(&p.target)?;
                let surface = self.surface(s)?;
                let moved = apply_plan(surface, c, &p).map_err(|e| e.to_string())?;
                let mut line = report::plan(&p);
                line.push_str(&curve_line(out, s, &moved));
                let s = s.to_string();
                self.put(
                    out,
                    Value::Curve {
                        surface: s,
                        curve: moved,
                    },
                );
                Ok(line)
            }
            Task::Transverse { outs, curves, keep } => {
                let mut zones = Vec::new();
                for k in keep {
                    zones.extend(self.plan(k)?.fixed_zones.iter().cloned());
                }
                let mut surface_name = None;
                let mut input = Vec::new();
                for c in curves {
                    let (s, curve) = self.curve(c)?;
                    if surface_name.get_or_insert(s.to_string()) != s {
                        return Err(format!("`{c}` is not on {}", surface_name.unwrap()));
                    }
                    input.push(curve.clone());
                }
                let sname = surface_name.unwrap_or_default();
                let surface = self.surface(&sname)?;
                let (moved, plans) =
                    make_transverse(surface, &input, &zones).map_err(|e| e.to_string())?;
                let mut text = String::new();
                for ((o, c), p) in outs.iter().zip(moved).zip(&plans) {
                    text.push_str(&report::plan(p));
                    text.push_str(&curve_line(o, &sname, &c));
                    self.put(
                        o,
                        Value::Curve {
                            surface: sname.clone(),
                            curve: c,
                        },
                    );
                }
                Ok(text)
            }
            Task::Complex {
                out,
                a,
                b,
                unverified,
            } => {
                let (s, ca, cb) = self.pair(a, b)?;
                let surface = self.surface(&s)?;
                let cf = build_cf(
                    surface,
                    ca,
                    cb,
                    &self.search(*unverified),
                    self.opts.strategy,
                )
                .map_err(|e| e.to_string())?;
                let text = report::complex(out, &s, &cf);
                if self.opts.svg {
                    let pts: Vec<SurfPt> = cf.generators.iter().map(|g| g.ambient).collect();
                    let pic = svg::render(surface, &[ca, cb], &pts);
                    self.svgs.push((format!("{out}.svg"), pic));
                }
                self.put(
                    out,
                    Value::Complex {
                        surface: s,
                        cf,
                        twisted: false,
                    },
                );
                Ok(text)
            }
            Task::Products {
                out,
                curves,
                unverified,
            } => {
                let (s, ca, cb) = self.pair(&curves[0], &curves[1])?;
                let (s2, cc) = self.curve(&curves[2])?;
                if s2 != s {
                    return Err(format!("`{}` is not on {s}", curves[2]));
                }
                let surface = self.surface(&s)?;
                let m = mu2(
                    surface,
                    ca,
                    cb,
                    cc,
                    &self.search(*unverified),
                    self.opts.strategy,
                )
                .map_err(|e| e.to_string())?;
                let text = report::products(out, &m);
                self.put(out, Value::Products(m));
                Ok(text)
            }
            Task::Declare { out, a, b, entries } => {
                let (s, ca, cb) = self.pair(a, b)?;
                let surface = self.surface(&s)?;
                let gens = if a == b {
                    self_intersections(surface, ca)
                } else {
                    fiber_product(surface, ca, cb)
                };
                let mut d = BitMatrix::zeros(gens.len(), gens.len());
                for (src, dst) in entries {
                    let i = find_gen(&gens, src)?;
                    let j = find_gen(&gens, dst)?;
                    d.toggle(j, i);
                }
                let cf = FloerComplex::declared(&ca.label, &cb.label, gens, d);
                let text = report::complex(out, &s, &cf);
                self.put(
                    out,
                    Value::Complex {
                        surface: s,
                        cf,
                        twisted: false,
                    },
                );
                Ok(text)
            }
            Task::Cochain { out, complex, gens } => {
                let (_, cf, _) = self.complex(complex)?;
                let mut bits = vec![false; cf.rank()];
                for g in gens {
                    let i = find_gen(&cf.generators, g)?;
                    bits[i] = !bits[i];
                }
                let text = report::chain(out, complex, cf, &bits);
                self.put(
                    out,
                    Value::Chain {
                        complex: complex.clone(),
                        bits,
                    },
                );
                Ok(text)
            }
            Task::MaurerCartan { b, mu0 } => {
                let (cx, bits) = self.chain(b)?;
                let (cx0, bits0) = self.chain(mu0)?;
                if cx != cx0 {
                    return Err(format!("`{b}` and `{mu0}` live in different complexes"));
                }
                let (_, cf, _) = self.complex(cx)?;
                let holds = maurer_cartan(bits, bits0, cf);
                let mu1: Vec<String> = cf
                    .differential
                    .apply(bits)
                    .iter()
                    .map(|x| if *x { "1" } else { "0" }.to_string())
                    .collect();
                if !holds {
                    self.failed = true;
                }
                Ok(format!(
                    "mu1({b}) = [{}]\nmu0 + mu1({b}) = 0 (higher terms vanish): {}\n",
                    mu1.join(" "),
                    if holds { "holds" } else { "FAILS" }
                ))
            }
            Task::Twisted {
                out,
                complex,
                left,
                right,
            } => {
                let (s, cf, _) = self.complex(complex)?;
                let (left_names, right_names) = (left, right);
                let left = match left {
                    Some((b, m)) => Some(self.side_chain(b, m, true)?),
                    None => None,
                };
                let right = match right {
                    Some((b, m)) => Some(self.side_chain(b, m, false)?),
                    None => None,
                };
                let lrefs = left.as_ref().map(|(bits, m, _)| (bits.as_slice(), *m));
                let rrefs = right.as_ref().map(|(bits, m, _)| (bits.as_slice(), *m));
                let tw = twisted_differential(cf, lrefs, rrefs).map_err(|e| e.to_string())?;
                let mut terms = Vec::new();
                for (bits, m, is_left) in left.iter().chain(right.iter()) {
                    for (beta, _) in bits.iter().enumerate().filter(|(_, on)| **on) {
                        for x in 0..cf.rank() {
                            let image = if *is_left {
                                m.apply(beta, x)
                            } else {
                                m.apply(x, beta)
                            };
                            for (z, on) in image.iter().enumerate() {
                                if *on {
                                    terms.push(if *is_left {
                                        format!("mu2(x{beta}, g{x}) contributes g{x} -> g{z}")
                                    } else {
                                        format!("mu2(g{x}, y{beta}) contributes g{x} -> g{z}")
                                    });
                                }
                            }
                        }
                    }
                }
                let mut formula = "d".to_string();
                if let Some((b, _)) = left_names {
                    formula.push_str(&format!(" + mu2({b}, .)"));
                }
                if let Some((b, _)) = right_names {
                    formula.push_str(&format!(" + mu2(., {b})"));
                }
                let text = report::twisted(out, complex, &formula, &tw, &terms);
                let s = s.to_string();
                self.put(
                    out,
                    Value::Complex {
                        surface: s,
                        cf: tw,
                        twisted: true,
                    },
                );
                Ok(text)
            }
            Task::Homology { complex } => {
                let (_, cf, twisted) = self.complex(complex)?;
                let r = homology(cf).map_err(|e| e.to_string())?;
                Ok(format!(
                    "HF{} rank = {r}\n",
                    if twisted { "^b" } else { "" }
                ))
            }
            Task::Generators { out, l1, corr, l2 } => {
                let (_, c1) = self.curve(l1)?;
                let (_, c2) = self.curve(l2)?;
                let (f, _, _) = self.corr(corr)?;
                let table = identify_generators(c1, f, c2).map_err(|e| e.to_string())?;
                if !table.round_trips() {
                    self.failed = true;
                }
                let text = report::table(out, &table);
                self.put(
                    out,
                    Value::Table {
                        table,
                        l1: l1.clone(),
                        corr: corr.clone(),
                    },
                );
                Ok(text)
            }
            Task::Lift { complex, table } => {
                let (_, cf, _) = self.complex(complex)?;
                let Some(Value::Table { table: t, l1, corr }) = self.values.get(table) else {
                    return Err(format!("generator table `{table}` is not available"));
                };
                let (_, c1) = self.curve(l1)?;
                let (f, _, _) = self.corr(corr)?;
                if cf.left != c1.label || cf.right != t.composed.curve.label {
                    return Err(format!(
                        "`{complex}` is not CF({}, {})",
                        c1.label, t.composed.curve.label
                    ));
                }
                let mut text = String::new();
                let mut differs = false;
                if cf.discs.is_empty() {
                    text.push_str("no discs to lift\n");
                }
                for (i, d) in cf.discs.iter().enumerate() {
                    match lift_bigon_to_quilt(d, c1, f, t) {
                        Ok(q) => {
                            let _ = writeln!(
                                text,
                                "d{i}: lifts to a quilted disc over {} squares, projection {}",
                                q.pieces.len(),
                                if projection_matches(&q) {
                                    "matches"
                                } else {
                                    "DIFFERS"
                                }
                            );
                            differs |= !projection_matches(&q);
                        }
                        Err(e) => {
                            let _ = writeln!(text, "d{i}: {e}");
                        }
                    }
                }
                self.failed |= differs;
                Ok(text)
            }
            Task::ExpectRank { complex, rank } => {
                let (_, cf, _) = self.complex(complex)?;
                let r = homology(cf).map_err(|e| e.to_string())?;
                Ok(self.expect(r == *rank, &format!("rank {r}, expected {rank}")))
            }
            Task::ExpectZero { complex } => {
                let (_, cf, _) = self.complex(complex)?;
                let zero = cf.differential.is_zero();
                Ok(self.expect(
                    zero,
                    if zero {
                        "differential vanishes"
                    } else {
                        "differential is nonzero"
                    },
                ))
            }
        }
    }

    fn expect(&mut self, ok: bool, what: &str) -> String {
        if !ok {
            self.failed = true;
        }
        format!("{}: {what}\n", if ok { "pass" } else { "FAIL" })
    }

    /// A cochain re-indexed onto the first (left) or second (right) generator list of a
    /// products table.
    fn side_chain(&self, b: &str, m: &str, left: bool) -> Step<(Vec<bool>, &Mu2, bool)> {
        let (cx, bits) = self.chain(b)?;
        let (_, cf, _) = self.complex(cx)?;
        let prods = self.products(m)?;
        let target = if left { &prods.ab } else { &prods.bc };
        let mut out = vec![false; target.len()];
        for (i, on) in bits.iter().enumerate() {
            if *on {
                let g = &cf.generators[i];
                let j = find_gen(target, &(g.a, g.b))
                    .map_err(|_| format!("generator {} of `{b}` does not appear in `{m}`", g))?;
                out[j] = true;
            }
        }
        Ok((out, prods, left))
    }
}

fn find_gen(gens: &[IntersectionPoint], g: &GenRef) -> Step<usize> {
    gens.iter()
        .position(|p| p.a == g.0 && p.b == g.1)
        .ok_or_else(|| {
            let known: Vec<String> = gens.iter().map(|p| format!("{}|{}", p.a, p.b)).collect();
            format!(
                "no generator {}; known: {}",
                scenario::fmt_gen(g),
                if known.is_empty() {
                    "none".to_string()
                } else {
                    known.join(" ")
                }
            )
        })
}

fn curve_line(name: &str, surface: &str, c: &ImmersedCurve) -> String {
    format!(
        "curve {name} = {} on {surface}: {} components, {} segments\n",
        c.label,
        c.components.len(),
        c.segment_count()
    )
}

fn map_line(m: &SurfaceMap, source: &str, target: &str) -> String {
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for s in m.squares() {
        *kinds.entry(s.kind.name()).or_default() += 1;
    }
    let kinds: Vec<String> = kinds.iter().map(|(k, n)| format!("{n} {k}")).collect();
    format!(
        "map {}: {source} -> {target}, squares {}, fold edges {}\n",
        m.name,
        kinds.join(", "),
        m.fold_edges().len()
    )
}

fn header(title: &str, opts: &RunOptions) -> String {
    format!(
        "quiltfloer {title}\ndepth {}, admissibility {}, twist reading {}\n",
        opts.depth,
        if opts.allow_unverified {
            "unverified allowed"
        } else {
            "certified unless marked"
        },
        opts.twist.name()
    )
}

fn parse_failure(e: scenario::ParseError) -> Outcome {
    Outcome {
        report: format!("parse error: {e}\n"),
        svgs: Vec::new(),
        status: Status::Parse,
    }
}

fn source_line(lines: &[&str], n: usize) -> String {
    let raw = lines.get(n.wrapping_sub(1)).copied().unwrap_or("");
    let raw = raw.split('#').next().unwrap_or("");
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn section(out: &mut String, lines: &[&str], n: usize, body: &str) {
    let _ = writeln!(out, "\n[line {n}] {}", source_line(lines, n));
    out.push_str(body);
}

/// Parses and runs a scenario.
pub fn run(text: &str, opts: &RunOptions) -> Outcome {
    let sc = match scenario::parse(text) {
        Ok(s) => s,
        Err(e) => return parse_failure(e),
    };
    run_parsed(&sc, text, opts)
}

pub fn run_parsed(sc: &Scenario, text: &str, opts: &RunOptions) -> Outcome {
    let lines: Vec<&str> = text.lines().collect();
    let mut env = Env::new(*opts);
    let mut out = header("report", opts);
    let mut status = Status::Ok;
    let steps = sc
        .items
        .iter()
        .map(|(n, i)| (*n, Ok(i)))
        .chain(sc.tasks.iter().map(|(n, t)| (*n, Err(t))));
    for (n, step) in steps {
        let res = match step {
            Ok(item) => env.item(item),
            Err(task) => env.task(task),
        };
        match res {
            Ok(body) => section(&mut out, &lines, n, &body),
            Err(e) => {
                section(&mut out, &lines, n, &format!("error: {e}\n"));
                status = Status::Error;
                break;
            }
        }
    }
    if status == Status::Ok && env.failed {
        status = Status::Failed;
    }
    Outcome {
        report: out,
        svgs: env.svgs,
        status,
    }
}

/// Validates a scenario without enumerating discs: builds every object, runs the
/// construction tasks, and lists the certificates the disc search will rely on.
pub fn check(text: &str, opts: &RunOptions) -> Outcome {
    let sc = match scenario::parse(text) {
        Ok(s) => s,
        Err(e) => return parse_failure(e),
    };
    let mut env = Env::new(*opts);
    let mut certs: Vec<String> = Vec::new();
    let mut ok = true;
    let note = |certs: &mut Vec<String>, n: usize, msg: String| {
        certs.push(format!("line {n}: {msg}"));
    };
    for (n, item) in &sc.items {
        if let Err(e) = env.item(item) {
            note(&mut certs, *n, format!("error: {e}"));
            ok = false;
            break;
        }
    }
    if ok {
        for (n, task) in &sc.tasks {
            let n = *n;
            match task {
                Task::Compose { corr, curve, .. } => {
                    if let (Ok((f, _, _)), Ok((_, c))) = (env.corr(corr), env.curve(curve)) {
                        let cert = f.composability(c);
                        let msg = match &cert.reason {
                            None => format!("{} o {}: composable", corr, curve),
                            Some(r) => format!("{} o {}: NOT composable ({r})", corr, curve),
                        };
                        ok &= cert.composable;
                        note(&mut certs, n, msg);
                    }
                }
                Task::Complex { .. } | Task::Declare { .. } => {
                    let (a, b, unverified) = match task {
                        Task::Complex {
                            a, b, unverified, ..
                        } => (a, b, *unverified),
                        Task::Declare { a, b, .. } => (a, b, true),
                        _ => unreachable!(),
                    };
                    match env.pair(a, b) {
                        Ok((s, ca, cb)) => {
                            let surface = env.surface(&s).expect("curve surfaces exist");
                            let gens = if a == b {
                                self_intersections(surface, ca)
                            } else {
                                fiber_product(surface, ca, cb)
                            };
                            let bad = gens.iter().filter(|g| !g.transverse).count();
                            ok &= bad == 0;
                            note(
                                &mut certs,
                                n,
                                format!(
                                    "{a} x {b}: {} generators, {}",
                                    gens.len(),
                                    if bad == 0 {
                                        "all transverse".to_string()
                                    } else {
                                        format!("{bad} NOT transverse")
                                    }
                                ),
                            );
                            let skip = unverified || opts.allow_unverified;
                            for (name, c) in [(a, ca), (b, cb)] {
                                let lifted = is_embedded_lift(c, opts.depth.max(1));
                                ok &= lifted || skip;
                                note(
                                    &mut certs,
                                    n,
                                    format!(
                                        "{name}: embedded lift {}",
                                        match (lifted, skip) {
                                            (true, _) => "certified",
                                            (false, true) => "not certified (allowed)",
                                            (false, false) => "NOT certified",
                                        }
                                    ),
                                );
                            }
                        }
                        Err(e) => {
                            ok = false;
                            note(&mut certs, n, format!("error: {e}"));
                        }
                    }
                    continue;
                }
                _ => {}
            }
            let constructive = matches!(
                task,
                Task::Compose { .. }
                    | Task::ComposeLeft { .. }
                    | Task::Apply { .. }
                    | Task::Transverse { .. }
            );
            if constructive {
                if let Err(e) = env.task(task) {
                    ok = false;
                    note(&mut certs, n, format!("error: {e}"));
                    break;
                }
            }
        }
    }
    let mut report = header("check", opts);
    for c in &certs {
        let _ = writeln!(report, "{c}");
    }
    report.push_str(if ok { "OK\n" } else { "FAILED\n" });
    Outcome {
        report,
        svgs: Vec::new(),
        status: if ok { Status::Ok } else { Status::Failed },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> RunOptions {
        RunOptions {
            strategy: Strategy::Sequential,
            ..RunOptions::default()
        }
    }

    #[test]
    fn torus_scenario_runs() {
        let o = run(scenario::bundled("torus-basic").unwrap(), &seq());
        assert_eq!(o.status, Status::Ok, "{}", o.report);
        assert!(o.report.contains("1 generators"));
        assert!(o.report.ends_with("pass: rank 1, expected 1\n"));
    }

    #[test]
    fn parse_errors_exit_with_three() {
        let o = run("nonsense\n", &seq());
        assert_eq!(o.status.exit_code(), 3);
    }

    #[test]
    fn failed_expectation_is_reported() {
        let text = scenario::bundled("torus-basic")
            .unwrap()
            .replace("expect rank CF = 1", "expect rank CF = 3");
        let o = run(&text, &seq());
        assert_eq!(o.status, Status::Failed);
        assert!(o.report.contains("FAIL: rank 1, expected 3"));
    }

    #[test]
    fn check_passes_on_bundled() {
        for name in scenario::BUNDLED {
            let o = check(scenario::bundled(name).unwrap(), &seq());
            assert_eq!(o.status, Status::Ok, "{name}: {}", o.report);
            assert!(o.report.ends_with("OK\n"));
        }
    }

    #[test]
    fn declared_generators_must_exist() {
        let text = scenario::bundled("section5").unwrap().replace(
            "cochain m0 in KK = c0s10@1/4|c0s4@3/4",
            "cochain m0 in KK = c0s0@0|c0s1@0",
        );
        let o = run(&text, &seq());
        assert_eq!(o.status, Status::Error);
        assert!(o.report.contains("no generator c0s0@0|c0s1@0"));
    }

    #[test]
    fn svgs_are_collected_on_request() {
        let opts = RunOptions { svg: true, ..seq() };
        let o = run(scenario::bundled("torus-basic").unwrap(), &opts);
        assert_eq!(o.svgs.len(), 1);
        assert_eq!(o.svgs[0].0, "CF.svg");
    }
}
