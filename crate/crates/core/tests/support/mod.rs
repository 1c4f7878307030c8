//! Random fixture generators shared by integration tests, the acceptance suite and benches.
#![allow(dead_code)]

use num_traits::{One, Zero};
use quiltfloer::correspondence::Correspondence;
use quiltfloer::curve::ImmersedCurve;
use quiltfloer::fixtures::{covering_map, grid_fold, polyline, wiggled};
use quiltfloer::geom::{Pt, Q};
use quiltfloer::intersect::fiber_product;
use quiltfloer::surface::SquareTiledSurface;
use rand::Rng;

pub struct WigglePair {
    pub surface: SquareTiledSurface,
    pub a: ImmersedCurve,
    pub b: ImmersedCurve,
    pub description: String,
}

const CLASSES: [(i128, i128); 6] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1)];

fn rational(rng: &mut impl Rng, den: i128, lo: i128, hi: i128) -> Q {
    Q::new(rng.gen_range(lo..=hi), den)
}

pub fn random_wiggled(
    rng: &mut impl Rng,
    surface: &SquareTiledSurface,
    w: i128,
    h: i128,
    label: &str,
    class: (i128, i128),
    max_bumps: usize,
) -> Option<ImmersedCurve> {
    let start = Pt::new(rational(rng, 17, 1, 16), rational(rng, 19, 1, 18));
    let k = rng.gen_range(0..=max_bumps);
    let mut ss: Vec<i128> = (0..k).map(|_| rng.gen_range(1..24)).collect();
    ss.sort();
    ss.dedup();
    let bumps: Vec<(Q, Q)> = ss
        .iter()
        .map(|&s| (Q::new(s, 24), rational(rng, 23, -5, 5)))
        .collect();
    wiggled(surface, label, w, h, class, start, &bumps).ok()
}

/// Two wiggled geodesics on a small grid torus, transverse, with at most `max_points` crossings.
pub fn random_wiggled_pair(rng: &mut impl Rng, max_points: usize) -> Option<WigglePair> {
    let w = rng.gen_range(1..=2);
    let h = rng.gen_range(1..=2);
    let surface = SquareTiledSurface::torus_grid("T", w as usize, h as usize);
    let ca = CLASSES[rng.gen_range(0..CLASSES.len())];
    let cb = CLASSES[rng.gen_range(0..CLASSES.len())];
    let a = random_wiggled(rng, &surface, w, h, "a", ca, 3)?;
    let b = random_wiggled(rng, &surface, w, h, "b", cb, 3)?;
    let fp = fiber_product(&surface, &a, &b);
    if fp.len() > max_points || fp.iter().any(|p| !p.transverse) {
        return None;
    }
    Some(WigglePair {
        description: format!(
            "{w}x{h} torus, classes {ca:?} and {cb:?}, {} crossings",
            fp.len()
        ),
        surface,
        a,
        b,
    })
}

pub struct CoverFixture {
    pub corr: Correspondence,
    pub l1: ImmersedCurve,
    pub l2: ImmersedCurve,
    pub description: String,
}

fn divisor(rng: &mut impl Rng, n: usize) -> usize {
    let ds: Vec<usize> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    ds[rng.gen_range(0..ds.len())]
}

/// `F = w × h` grid torus covering two smaller grid tori, with wiggled curves on both.
pub fn random_covering_correspondence(rng: &mut impl Rng) -> Option<CoverFixture> {
    let (w, h) = (rng.gen_range(1..=2usize), rng.gen_range(1..=2usize));
    let t1 = (divisor(rng, w), divisor(rng, h));
    let t2 = (divisor(rng, w), divisor(rng, h));
    let o1 = (rng.gen_range(0..2), rng.gen_range(0..2));
    let o2 = (rng.gen_range(0..2), rng.gen_range(0..2));
    let (ht1, ht2) = (rng.gen_bool(0.3), rng.gen_bool(0.3));
    let g1 = covering_map((w, h), t1, o1, ht1).ok()?;
    let g2 = covering_map((w, h), t2, o2, ht2).ok()?;
    let corr = Correspondence::new("F", g1, g2).ok()?;
    let c1 = CLASSES[rng.gen_range(0..CLASSES.len())];
    let c2 = CLASSES[rng.gen_range(0..CLASSES.len())];
    let l1 = random_wiggled(
        rng,
        &corr.g1.target,
        t1.0 as i128,
        t1.1 as i128,
        "L1",
        c1,
        2,
    )?;
    let l2 = random_wiggled(
        rng,
        &corr.g2.target,
        t2.0 as i128,
        t2.1 as i128,
        "L2",
        c2,
        2,
    )?;
    Some(CoverFixture {
        description: format!(
            "{w}x{h} over {}x{} and {}x{}, classes {c1:?} and {c2:?}",
            t1.0, t1.1, t2.0, t2.1
        ),
        corr,
        l1,
        l2,
    })
}

/// `g1` folds a 1x2 torus onto the lower row of another; `g2` is the identity.
pub fn row_fold() -> Correspondence {
    let g1 = grid_fold((1, 2), (1, 2), &[(0, false)], &[(0, false), (0, true)]).unwrap();
    let g2 = covering_map((1, 2), (1, 2), (0, 0), false).unwrap();
    Correspondence::new("F", g1, g2).unwrap()
}

/// `g1` folds a 1x2 torus onto a single square; `g2` is the identity.
pub fn pillow() -> Correspondence {
    let g1 = grid_fold((1, 2), (1, 1), &[(0, false)], &[(0, false), (0, true)]).unwrap();
    let g2 = covering_map((1, 2), (1, 2), (0, 0), false).unwrap();
    Correspondence::new("P", g1, g2).unwrap()
}

/// Horizontal zigzag across square 0 of the lower row, with random heights.
pub fn random_zigzag(rng: &mut impl Rng, surface: &SquareTiledSurface) -> Option<ImmersedCurve> {
    let k = rng.gen_range(2..=4);
    let y0 = Q::new(rng.gen_range(3..=17), 20);
    let mut pts = vec![Pt::new(Q::zero(), y0)];
    for i in 1..=k {
        let x = Q::new(i as i128 * 2 - 1, 2 * k as i128 + 1) + Q::new(1, 4 * k as i128 + 2);
        pts.push(Pt::new(x, Q::new(rng.gen_range(3..=17), 20)));
    }
    pts.push(Pt::new(Q::one(), y0));
    polyline(surface, "L1", 0, pts).ok()
}
