//! Mod-2 Floer complexes: differential from bigons, product from triangles,
//! Maurer-Cartan check and the twisted differential.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::curve::ImmersedCurve;
use crate::discs::{BigonSearch, CombinatorialDisc, DiscError, SearchOptions, TriangleSearch};
use crate::intersect::IntersectionPoint;
use crate::par::{self, Strategy};
use crate::surface::SquareTiledSurface;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FloerError {
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error("differential does not square to zero (column {generator})")]
    DifferentialNotSquareZero { generator: String },
    #[error("twisted differential does not square to zero (column {generator})")]
    TwistedDifferentialNotSquareZero { generator: String },
    #[error("generator lists of {what} do not match")]
    GeneratorMismatch { what: String },
}

/// Dense matrix over the two-element field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    for w in 0..out.words {
                        out.data[r * out.words + w] ^= other.data[k * other.words + w];
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "dimension mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a ^ b)
            .collect();
        BitMatrix {
            data,
            ..self.clone()
        }
    }

    pub fn apply(&self, v: &[bool]) -> Vec<bool> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| (0..self.cols).filter(|&c| v[c] && self.get(r, c)).count() % 2 == 1)
            .collect()
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(p, rank);
            for r in 0..m.rows {
                if r != rank && m.get(r, c) {
                    for w in 0..m.words {
                        let v = m.data[rank * m.words + w];
                        m.data[r * m.words + w] ^= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    /// Inverse, when the matrix is square and invertible.
    pub fn inverse(&self) -> Option<BitMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = BitMatrix::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&r| a.get(r, c))?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            for r in 0..n {
                if r != c && a.get(r, c) {
                    for w in 0..a.words {
                        let va = a.data[c * a.words + w];
                        a.data[r * a.words + w] ^= va;
                        let vi = inv.data[c * inv.words + w];
                        inv.data[r * inv.words + w] ^= vi;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn first_nonzero_column(&self) -> Option<usize> {
        (0..self.cols).find(|&c| (0..self.rows).any(|r| self.get(r, c)))
    }

    pub fn row_string(&self, r: usize) -> String {
        (0..self.cols)
            .map(|c| if self.get(r, c) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows).map(|r| self.row_string(r)).collect();
        write!(f, "BitMatrix[{}]", rows.join(" "))
    }
}

/// Mod-2 chain on a generator list.
pub type Chain = Vec<bool>;

pub fn chain_from(n: usize, members: &[usize]) -> Chain {
    let mut c = vec![false; n];
    for &i in members {
        c[i] ^= true;
    }
    c
}

pub fn chain_add(a: &[bool], b: &[bool]) -> Chain {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

#[derive(Clone, Debug)]
pub struct FloerComplex {
    pub left: String,
    pub right: String,
    pub generators: Vec<IntersectionPoint>,
    /// Entry `(x_minus, x_plus)` is the bigon count from `x_plus` to `x_minus`, mod 2.
    pub differential: BitMatrix,
    pub discs: Vec<CombinatorialDisc>,
    /// Disc ids behind each `(row, col)` entry with a nonzero count.
    pub provenance: BTreeMap<(usize, usize), Vec<usize>>,
    /// True when the differential was supplied by hand rather than counted.
    pub declared: bool,
}

impl FloerComplex {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn declared(
        left: &str,
        right: &str,
        generators: Vec<IntersectionPoint>,
        differential: BitMatrix,
    ) -> Self {
        assert_eq!(differential.rows(), generators.len());
        FloerComplex {
            left: left.to_string(),
            right: right.to_string(),
            generators,
            differential,
            discs: Vec::new(),
            provenance: BTreeMap::new(),
            declared: true,
        }
    }

    pub fn index_of(&self, p: &IntersectionPoint) -> Option<usize> {
        self.generators
            .iter()
            .position(|g| g.a == p.a && g.b == p.b)
    }
}

/// `CF(a, b)` with its bigon-counting differential.
pub fn build_cf(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    opts: &SearchOptions,
    strategy: Strategy,
) -> Result<FloerComplex, FloerError> {
    let search = BigonSearch::new(surface, a, b, opts)?;
    let n = search.table.points.len();
    let ids: Vec<usize> = (0..n).collect();
    let per_gen = par::map(strategy, &ids, |&i| search.from_generator(i));
    let mut d = BitMatrix::zeros(n, n);
    let mut discs = Vec::new();
    let mut provenance: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (col, found) in per_gen.into_iter().enumerate() {
        for disc in found {
            let row = search
                .table
                .find(disc.corners[1].a, disc.corners[1].b)
                .expect("corner is a generator");
            d.toggle(row, col);
            provenance.entry((row, col)).or_default().push(discs.len());
            discs.push(disc);
        }
    }
    Ok(FloerComplex {
        left: a.label.clone(),
        right: b.label.clone(),
        generators: search.table.points.clone(),
        differential: d,
        discs,
        provenance,
        declared: false,
    })
}

/// Homology rank over the two-element field.
pub fn homology(cf: &FloerComplex) -> Result<usize, FloerError> {
    let sq = cf.differential.mul(&cf.differential);
    if let Some(c) = sq.first_nonzero_column() {
        return Err(FloerError::DifferentialNotSquareZero {
            generator: c.to_string(),
        });
    }
    Ok(cf.rank() - 2 * cf.differential.rank())
}

/// Triangle counts for curves `(a, b, c)`: `mu2(x, y) = sum_z #(x, y, z) z`.
#[derive(Clone, Debug)]
pub struct Mu2 {
    pub labels: [String; 3],
    pub ab: Vec<IntersectionPoint>,
    pub bc: Vec<IntersectionPoint>,
    pub ac: Vec<IntersectionPoint>,
    /// `(x, y, z)` index triples with their triangle counts.
    pub counts: BTreeMap<(usize, usize, usize), usize>,
    pub discs: Vec<CombinatorialDisc>,
}

impl Mu2 {
    pub fn apply(&self, x: usize, y: usize) -> Chain {
        let mut out = vec![false; self.ac.len()];
        for (&(i, j, k), &n) in self.counts.range((x, y, 0)..=(x, y, usize::MAX)) {
            debug_assert!(i == x && j == y);
            if n % 2 == 1 {
                out[k] ^= true;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.counts.values().all(|n| n % 2 == 0)
    }
}

pub fn mu2(
    surface: &SquareTiledSurface,
    a: &ImmersedCurve,
    b: &ImmersedCurve,
    c: &ImmersedCurve,
    opts: &SearchOptions,
    strategy: Strategy,
) -> Result<Mu2, FloerError> {
    let search = TriangleSearch::new(surface, a, b, c, opts)?;
    let ids: Vec<usize> = (0..search.ab.points.len()).collect();
    let per = par::map(strategy, &ids, |&i| search.from_corner(i));
    let mut counts = BTreeMap::new();
    let mut discs = Vec::new();
    for (xi, found) in per.into_iter().enumerate() {
        for d in found {
            let yi = search
                .bc
                .find(d.corners[1].a, d.corners[1].b)
                .expect("corner is a generator");
            let zi = search
                .ac
                .find(d.corners[2].a, d.corners[2].b)
                .expect("corner is a generator");
            *counts.entry((xi, yi, zi)).or_insert(0) += 1;
            discs.push(d);
        }
    }
    Ok(Mu2 {
        labels: [a.label.clone(), b.label.clone(), c.label.clone()],
        ab: search.ab.points.clone(),
        bc: search.bc.points.clone(),
        ac: search.ac.points.clone(),
        counts,
        discs,
    })
}

/// `mu0 + mu1(b) = 0`, with higher terms assumed to vanish.
pub fn maurer_cartan(b: &[bool], mu0: &[bool], complex: &FloerComplex) -> bool {
    let d_b = complex.differential.apply(b);
    chain_add(&d_b, mu0).iter().all(|x| !x)
}

fn same_points(x: &[IntersectionPoint], y: &[IntersectionPoint]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.a == q.a && p.b == q.b)
}

/// `mu1^b(x) = mu1(x) + mu2(b_left, x) + mu2(x, b_right)`.
///
/// `left` pairs a cochain on `CF(K, K)` with the products for `(K, K, L)`;
/// `right` pairs a cochain on `CF(L, L)` with the products for `(K, L, L)`.
pub fn twisted_differential(
    cf: &FloerComplex,
    left: Option<(&[bool], &Mu2)>,
    right: Option<(&[bool], &Mu2)>,
) -> Result<FloerComplex, FloerError> {
    let n = cf.rank();
    let mut d = cf.differential.clone();
    if let Some((b, m)) = left {
        if !same_points(&m.bc, &cf.generators)
            || !same_points(&m.ac, &cf.generators)
            || b.len() != m.ab.len()
        {
            return Err(FloerError::GeneratorMismatch {
                what: "left cochain products".into(),
            });
        }
        for (beta, _) in b.iter().enumerate().filter(|(_, on)| **on) {
            for x in 0..n {
                for (z, on) in m.apply(beta, x).into_iter().enumerate() {
                    if on {
                        d.toggle(z, x);
                    }
                }
            }
        }
    }
    if let Some((b, m)) = right {
        if !same_points(&m.ab, &cf.generators)
            || !same_points(&m.ac, &cf.generators)
            || b.len() != m.bc.len()
        {
            return Err(FloerError::GeneratorMismatch {
                what: "right cochain products".into(),
            });
        }
        for (beta, _) in b.iter().enumerate().filter(|(_, on)| **on) {
            for x in 0..n {
                for (z, on) in m.apply(x, beta).into_iter().enumerate() {
                    if on {
                        d.toggle(z, x);
                    }
                }
            }
        }
    }
    if let Some(c) = d.mul(&d).first_nonzero_column() {
        return Err(FloerError::TwistedDifferentialNotSquareZero {
            generator: cf.generators[c].to_string(),
        });
    }
    Ok(FloerComplex {
        differential: d,
        ..cf.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{geodesic, polyline};
    use crate::geom::{q, qi, Pt};

    fn torus() -> SquareTiledSurface {
        SquareTiledSurface::torus_grid("T", 1, 1)
    }

    fn n_curve(t: &SquareTiledSurface) -> ImmersedCurve {
        polyline(
            t,
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
        .unwrap()
    }

    #[test]
    fn rank_and_inverse() {
        let mut m = BitMatrix::zeros(3, 3);
        m.set(0, 1, true);
        m.set(2, 1, true);
        assert_eq!(m.rank(), 1);
        assert!(m.inverse().is_none());
        let mut p = BitMatrix::identity(3);
        p.set(0, 2, true);
        let inv = p.inverse().unwrap();
        assert_eq!(p.mul(&inv), BitMatrix::identity(3));
    }

    #[test]
    fn orthogonal_geodesics() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let v = geodesic(&t, "v", 1, 1, (0, 1), Pt::new(q(1, 2), qi(0))).unwrap();
        let cf = build_cf(&t, &h, &v, &SearchOptions::default(), Strategy::Sequential).unwrap();
        assert_eq!(cf.rank(), 1);
        assert!(cf.differential.is_zero());
        assert_eq!(homology(&cf).unwrap(), 1);
    }

    #[test]
    fn disjoint_curves_give_empty_complex() {
        let t = torus();
        let a = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 3))).unwrap();
        let b = geodesic(&t, "b", 1, 1, (1, 0), Pt::new(qi(0), q(2, 3))).unwrap();
        let cf = build_cf(&t, &a, &b, &SearchOptions::default(), Strategy::Sequential).unwrap();
        assert_eq!(cf.rank(), 0);
        assert_eq!(homology(&cf).unwrap(), 0);
    }

    #[test]
    fn finger_complex_has_rank_one_differential() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let n = n_curve(&t);
        let cf = build_cf(&t, &h, &n, &SearchOptions::default(), Strategy::Parallel).unwrap();
        assert_eq!(cf.rank(), 3);
        assert_eq!(cf.differential.rank(), 1);
        let nonzero_cols = (0..3)
            .filter(|&c| (0..3).any(|r| cf.differential.get(r, c)))
            .count();
        assert_eq!(nonzero_cols, 1);
        assert_eq!(homology(&cf).unwrap(), 1);
        for (&(r, c), ids) in &cf.provenance {
            assert_eq!(ids.len() % 2 == 1, cf.differential.get(r, c));
            for &id in ids {
                assert!(cf.discs[id].certificate_holds());
            }
        }
    }

    #[test]
    fn maurer_cartan_cases() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let n = n_curve(&t);
        let cf = build_cf(&t, &h, &n, &SearchOptions::default(), Strategy::Sequential).unwrap();
        let zero = vec![false; 3];
        assert!(maurer_cartan(&zero, &zero, &cf));
        let col = cf.differential.first_nonzero_column().unwrap();
        let b = chain_from(3, &[col]);
        assert!(!maurer_cartan(&b, &zero, &cf));
        let image = cf.differential.apply(&b);
        assert!(maurer_cartan(&b, &image, &cf));
    }

    #[test]
    fn twisting_by_zero_changes_nothing() {
        let t = torus();
        let h = geodesic(&t, "h", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let n = n_curve(&t);
        let cf = build_cf(&t, &h, &n, &SearchOptions::default(), Strategy::Sequential).unwrap();
        let tw = twisted_differential(&cf, None, None).unwrap();
        assert_eq!(tw.differential, cf.differential);
    }

    #[test]
    fn triangle_products() {
        let t = torus();
        let a = geodesic(&t, "a", 1, 1, (1, 0), Pt::new(qi(0), q(1, 2))).unwrap();
        let b = geodesic(&t, "b", 1, 1, (0, 1), Pt::new(q(1, 2), qi(0))).unwrap();
        let c = geodesic(&t, "c", 1, 1, (1, 1), Pt::new(q(1, 4), qi(0))).unwrap();
        let m = mu2(
            &t,
            &a,
            &b,
            &c,
            &SearchOptions {
                depth: 2,
                allow_unverified: false,
            },
            Strategy::Sequential,
        )
        .unwrap();
        assert_eq!((m.ab.len(), m.bc.len(), m.ac.len()), (1, 1, 1));
        assert!(!m.discs.is_empty());
    }
}
