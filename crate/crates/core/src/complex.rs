//! The cubical engine: sublevel sets `S_n`, their integral cohomology, the
//! `U`-action as restriction ranks, graded roots, path cohomology and the
//! Euler characteristic formulas.
//!
//! All computations run on a [`PointCloud`]: a finite set of lattice points
//! with weights, stored lexicographically together with every cube whose
//! vertices all belong to the cloud. A concrete rectangle is one such cloud.
//! For weights on the whole first quadrant the cloud is the exact sublevel
//! set `{w_0 <= N}`, enumerated with quadratic lower bounds, so every level
//! up to `N` is computed without truncation error.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{det_bareiss, rat, solve_columns, to_big, SparseColumns};
use crate::error::{Error, Result};
use crate::grid::{Rect, Table};
use crate::weights::{Rectangle, TopologicalWeight, WeightFn, WeightModel};

const NONE: u32 = u32::MAX;
const PRIME: u64 = 2_147_483_647;

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    /// Maximal number of cubes (all dimensions) in a cloud.
    pub cell_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { cell_cap: 6_000_000 }
    }
}

#[derive(Debug, Clone)]
struct CellLayer {
    /// CSR offsets by base point.
    offsets: Vec<u32>,
    base: Vec<u32>,
    mask: Vec<u32>,
    weight: Vec<i64>,
}

impl CellLayer {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn lookup(&self, p: u32, mask: u32) -> Option<u32> {
        let lo = self.offsets[p as usize] as usize;
        let hi = self.offsets[p as usize + 1] as usize;
        self.mask[lo..hi].binary_search(&mask).ok().map(|i| (lo + i) as u32)
    }
}

/// Weighted lattice points plus all cubes spanned by them.
#[derive(Debug, Clone)]
pub struct PointCloud {
    rank: usize,
    coords: Vec<i64>,
    weights: Vec<i64>,
    up: Vec<u32>,
    layers: Vec<CellLayer>,
}

impl PointCloud {
    /// Every point of a rectangle.
    pub fn from_table(t: &Table, cfg: EngineConfig) -> Result<Self> {
        let rect = t.rect();
        let s = rect.rank();
        if s > 31 {
            return Err(Error::ResourceCap("rank above 31".into()));
        }
        let n = rect.volume();
        if n > cfg.cell_cap {
            return Err(Error::ResourceCap(format!("rectangle has {n} points")));
        }
        let mut coords = Vec::with_capacity(n * s);
        let mut up = vec![NONE; n * s];
        for (i, l) in rect.points().enumerate() {
            for v in 0..s {
                if let Some(j) = rect.step_up(i, &l, v) {
                    up[i * s + v] = j as u32;
                }
            }
            coords.extend_from_slice(&l);
        }
        Self::assemble(s, coords, t.values().to_vec(), up, cfg)
    }

    /// Arbitrary points; duplicates are rejected.
    pub fn from_points(rank: usize, mut pts: Vec<(Vec<i64>, i64)>, cfg: EngineConfig) -> Result<Self> {
        if rank > 31 {
            return Err(Error::ResourceCap("rank above 31".into()));
        }
        if pts.len() > cfg.cell_cap {
            return Err(Error::ResourceCap(format!("{} points", pts.len())));
        }
        pts.sort_by(|a, b| a.0.cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("duplicate point in cloud".into()));
        }
        let index: HashMap<&[i64], u32> =
            pts.iter().enumerate().map(|(i, (l, _))| (l.as_slice(), i as u32)).collect();
        let mut up = vec![NONE; pts.len() * rank];
        let mut probe = vec![0; rank];
        for (i, (l, _)) in pts.iter().enumerate() {
            probe.copy_from_slice(l);
            for v in 0..rank {
                probe[v] += 1;
                if let Some(&j) = index.get(probe.as_slice()) {
                    up[i * rank + v] = j;
                }
                probe[v] -= 1;
            }
        }
        drop(index);
        let mut coords = Vec::with_capacity(pts.len() * rank);
        let mut weights = Vec::with_capacity(pts.len());
        for (l, w) in pts {
            coords.extend(l);
            weights.push(w);
        }
        Self::assemble(rank, coords, weights, up, cfg)
    }

    /// The exact sublevel set `{l >= 0 : chi_k(l) <= bound}`.
    pub fn topological(w: &TopologicalWeight, bound: i64, cfg: EngineConfig) -> Result<Self> {
        let s = w.rank();
        let q: Vec<Vec<i64>> = w.form().iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        let order: Vec<usize> = (0..s).collect();
        let pts = QuadraticBound::new(&q, &w.characteristic().products, &order)
            .enumerate(s, bound, cfg.cell_cap)?;
        let pts = pts.into_iter().map(|l| {
            let x = w.weight(&l);
            (l, x)
        });
        Self::from_points(s, pts.filter(|(_, x)| *x <= bound).collect(), cfg)
    }

    fn assemble(rank: usize, coords: Vec<i64>, weights: Vec<i64>, up: Vec<u32>, cfg: EngineConfig) -> Result<Self> {
        let n = weights.len();
        let layer0 = CellLayer {
            offsets: (0..=n as u32).collect(),
            base: (0..n as u32).collect(),
            mask: vec![0; n],
            weight: weights.clone(),
        };
        let mut cloud = PointCloud { rank, coords, weights, up, layers: vec![layer0] };
        let mut total = n;
        while cloud.layers.len() <= rank {
            let prev = cloud.layers.last().expect("layer 0");
            let mut next = CellLayer { offsets: vec![0], base: vec![], mask: vec![], weight: vec![] };
            let mut cand: Vec<(u32, i64)> = Vec::new();
            for p in 0..n as u32 {
                cand.clear();
                for c in prev.offsets[p as usize]..prev.offsets[p as usize + 1] {
                    let rest = prev.mask[c as usize];
                    let low = if rest == 0 { rank as u32 } else { rest.trailing_zeros() };
                    for v in 0..low {
                        let q = cloud.up[p as usize * rank + v as usize];
                        if q == NONE {
                            continue;
                        }
                        if let Some(f) = prev.lookup(q, rest) {
                            let w = prev.weight[c as usize].max(prev.weight[f as usize]);
                            cand.push((rest | 1 << v, w));
                        }
                    }
                }
                cand.sort_unstable_by_key(|e| e.0);
                for &(m, w) in &cand {
                    next.base.push(p);
                    next.mask.push(m);
                    next.weight.push(w);
                }
                next.offsets.push(next.base.len() as u32);
            }
            if next.len() == 0 {
                break;
            }
            total += next.len();
            if total > cfg.cell_cap {
                return Err(Error::ResourceCap(format!(
                    "more than {} cubes; raise the cap or shrink the domain",
                    cfg.cell_cap
                )));
            }
            cloud.layers.push(next);
        }
        Ok(cloud)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.rank..(i + 1) * self.rank]
    }

    pub fn weight(&self, i: usize) -> i64 {
        self.weights[i]
    }

    /// Highest dimension carrying a cube.
    pub fn top_dim(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn cube_count(&self, d: usize) -> usize {
        self.layers.get(d).map_or(0, |l| l.len())
    }

    pub fn min_weight(&self) -> Option<i64> {
        self.weights.iter().copied().min()
    }

    pub fn max_weight(&self) -> Option<i64> {
        self.weights.iter().copied().max()
    }

    /// Componentwise maximum of the points.
    pub fn bounding_rect(&self) -> Result<Rect> {
        let mut c = vec![0; self.rank];
        for i in 0..self.len() {
            for (m, x) in c.iter_mut().zip(self.point(i)) {
                *m = (*m).max(*x);
            }
        }
        Rect::new(c)
    }

    /// Signed faces of a cube: `d(l, I) = sum_j (-1)^j [(l + E_vj, I - vj) - (l, I - vj)]`
    /// with `j` counted from zero along the increasing directions of `I`.
    fn faces(&self, d: usize, c: usize) -> Vec<(u32, i64)> {
        let layer = &self.layers[d];
        let prev = &self.layers[d - 1];
        let p = layer.base[c];
        let mask = layer.mask[c];
        let mut out = Vec::with_capacity(2 * d);
        let mut bits = mask;
        let mut j = 0;
        while bits != 0 {
            let v = bits.trailing_zeros();
            bits &= bits - 1;
            let rest = mask & !(1 << v);
            let q = self.up[p as usize * self.rank + v as usize];
            let sign = if j % 2 == 0 { 1 } else { -1 };
            out.push((prev.lookup(q, rest).expect("face of a cube"), sign));
            out.push((prev.lookup(p, rest).expect("face of a cube"), -sign));
            j += 1;
        }
        out
    }

    /// Alternating sum `sum (-1)^(q+1) w(cube)` over all cubes.
    pub fn alternating_cube_sum(&self) -> i64 {
        self.layers
            .iter()
            .enumerate()
            .map(|(d, l)| {
                let s: i64 = l.weight.iter().sum();
                if d % 2 == 0 {
                    -s
                } else {
                    s
                }
            })
            .sum()
    }
}

/// Lower bounds for a positive definite quadratic function
/// `f(x) = (x^T Q x - p.x)/2` after fixing a prefix of coordinates, by
/// minimizing exactly over the remaining real coordinates.
#[derive(Debug, Clone)]
pub struct QuadraticBound {
    q: Vec<Vec<i128>>,
    p: Vec<i128>,
    order: Vec<usize>,
    /// Indexed by prefix length `1..=s`: `(det, adjugate)` of the tail block.
    tails: Vec<(i128, Vec<Vec<i128>>)>,
}

impl QuadraticBound {
    pub fn new(q: &[Vec<i64>], p: &[i64], order: &[usize]) -> Self {
        let s = q.len();
        let mut tails = vec![(1, Vec::new()); s + 1];
        for (j, tail) in tails.iter_mut().enumerate().skip(1) {
            let idx = &order[j..];
            if idx.is_empty() {
                continue;
            }
            let block: Vec<Vec<i64>> = idx.iter().map(|&a| idx.iter().map(|&b| q[a][b]).collect()).collect();
            let det = det_bareiss(&to_big(&block));
            let ident: Vec<Vec<_>> =
                (0..idx.len()).map(|c| (0..idx.len()).map(|r| rat(i64::from(r == c))).collect()).collect();
            let inv = solve_columns(&block, &ident).expect("definite block");
            let d = det.clone();
            let adj = (0..idx.len())
                .map(|r| {
                    (0..idx.len())
                        .map(|c| {
                            let x = &inv[c][r] * num_rational::BigRational::from_integer(d.clone());
                            x.to_integer().to_i128().expect("adjugate fits")
                        })
                        .collect()
                })
                .collect();
            *tail = (det.to_i128().expect("determinant fits"), adj);
        }
        QuadraticBound {
            q: q.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect(),
            p: p.iter().map(|&x| x as i128).collect(),
            order: order.to_vec(),
            tails,
        }
    }

    /// `8 D min f` over the tail, for a prefix in permuted coordinates.
    fn scaled_bound(&self, prefix: &[i64]) -> i128 {
        let j = prefix.len();
        let o = &self.order;
        let mut two_c = 0i128;
        for a in 0..j {
            let xa = prefix[a] as i128;
            if xa == 0 {
                continue;
            }
            let row: i128 = (0..j).map(|b| self.q[o[a]][o[b]] * prefix[b] as i128).sum();
            two_c += xa * row - self.p[o[a]] * xa;
        }
        let (d, adj) = &self.tails[j];
        let g: Vec<i128> = o[j..]
            .iter()
            .map(|&t| 2 * (0..j).map(|b| self.q[t][o[b]] * prefix[b] as i128).sum::<i128>() - self.p[t])
            .collect();
        let mut quad = 0i128;
        for (r, gr) in g.iter().enumerate() {
            quad += gr * adj[r].iter().zip(&g).map(|(a, x)| a * x).sum::<i128>();
        }
        4 * d * two_c - quad
    }

    /// All nonnegative prefixes of length `depth` (in the permuted order)
    /// whose tail minimum is at most `bound`, lexicographically.
    pub fn enumerate(&self, depth: usize, bound: i64, cap: usize) -> Result<Vec<Vec<i64>>> {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(depth);
        self.descend(&mut prefix, depth, bound, cap, &mut out)?;
        Ok(out)
    }

    fn descend(&self, prefix: &mut Vec<i64>, depth: usize, bound: i64, cap: usize, out: &mut Vec<Vec<i64>>) -> Result<()> {
        if prefix.len() == depth {
            if out.len() >= cap {
                return Err(Error::ResourceCap(format!("sublevel set has more than {cap} points")));
            }
            out.push(prefix.clone());
            return Ok(());
        }
        let limit = 8 * self.tails[prefix.len() + 1].0 * bound as i128;
        let mut prev: Option<i128> = None;
        let mut t = 0i64;
        loop {
            prefix.push(t);
            let s = self.scaled_bound(prefix);
            if s <= limit {
                self.descend(prefix, depth, bound, cap, out)?;
            }
            prefix.pop();
            // strictly convex in t: once above the limit and rising, done
            if s > limit && prev.is_some_and(|p| s > p) {
                break;
            }
            prev = Some(s);
            t += 1;
        }
        Ok(())
    }
}

/// Cohomology of one sublevel set. Trailing zero degrees are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelCohomology {
    pub betti: Vec<u64>,
    /// Invariant factors greater than one of `H^q`, per `q`.
    pub torsion: Vec<Vec<u64>>,
}

/// `S_n` over a cloud: the cubes of weight at most `n`.
#[derive(Debug, Clone)]
pub struct SublevelComplex {
    cloud: PointCloud,
    level: i64,
}

impl SublevelComplex {
    pub fn new(cloud: PointCloud, level: i64) -> Self {
        SublevelComplex { cloud, level }
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    /// Cube counts per dimension.
    pub fn counts(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .cloud
            .layers
            .iter()
            .map(|l| l.weight.iter().filter(|&&w| w <= self.level).count())
            .collect();
        while v.len() > 1 && v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        self.counts()[0] == 0
    }

    /// Cubes as `(base point, direction bitmask)`.
    pub fn cubes(&self) -> Vec<(Vec<i64>, u32)> {
        let mut out = Vec::new();
        for l in &self.cloud.layers {
            for c in 0..l.len() {
                if l.weight[c] <= self.level {
                    out.push((self.cloud.point(l.base[c] as usize).to_vec(), l.mask[c]));
                }
            }
        }
        out
    }

    pub fn contains(&self, l: &[i64], mask: u32) -> bool {
        self.cubes().iter().any(|(b, m)| b == l && *m == mask)
    }
}

pub fn build_sublevel(model: &dyn WeightFn, rect: &Rect, n: i64, cfg: EngineConfig) -> Result<SublevelComplex> {
    let t = Table::from_fn(rect.clone(), |l| model.weight(l));
    Ok(SublevelComplex::new(PointCloud::from_table(&t, cfg)?, n))
}

pub fn cohomology(s: &SublevelComplex) -> Result<LevelCohomology> {
    integer_cohomology(&s.cloud, s.level)
}

fn trim_u64(v: &mut Vec<u64>) {
    while v.len() > 1 && v.last() == Some(&0) {
        v.pop();
    }
}

fn integer_cohomology(cloud: &PointCloud, n: i64) -> Result<LevelCohomology> {
    let maps: Vec<Vec<u32>> = cloud
        .layers
        .iter()
        .map(|l| {
            let mut k = 0u32;
            l.weight
                .iter()
                .map(|&w| {
                    if w <= n {
                        k += 1;
                        k - 1
                    } else {
                        NONE
                    }
                })
                .collect()
        })
        .collect();
    let counts: Vec<usize> = maps.iter().map(|m| m.iter().filter(|&&x| x != NONE).count()).collect();
    let top = cloud.top_dim();
    // ranks[d] and torsion of the boundary D_d : C_d -> C_{d-1}
    let mut ranks = vec![0usize; top + 2];
    let mut tors: Vec<Vec<BigInt>> = vec![Vec::new(); top + 2];
    for d in 1..=top {
        if counts[d] == 0 {
            continue;
        }
        let cols = (0..cloud.layers[d].len())
            .filter(|&c| maps[d][c] != NONE)
            .map(|c| cloud.faces(d, c).into_iter().map(|(f, s)| (maps[d - 1][f as usize] as usize, s)).collect())
            .collect();
        let snf = SparseColumns { nrows: counts[d - 1], cols }.smith();
        ranks[d] = snf.rank;
        tors[d] = snf.torsion;
    }
    let mut betti: Vec<u64> = (0..=top).map(|q| (counts[q] - ranks[q] - ranks[q + 1]) as u64).collect();
    trim_u64(&mut betti);
    // H^q = Free(H_q) + Tors(H_{q-1}), and Tors(H_{q-1}) comes from D_q
    let mut torsion: Vec<Vec<u64>> = (0..=top)
        .map(|q| {
            tors[q]
                .iter()
                .map(|t| t.to_u64().ok_or_else(|| Error::ResourceCap("torsion coefficient exceeds 64 bits".into())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    while torsion.last().is_some_and(|t| t.is_empty()) {
        torsion.pop();
    }
    Ok(LevelCohomology { betti, torsion })
}

/// Persistence intervals `[birth, death)` per homological degree; `None`
/// marks classes alive at the top.
#[derive(Debug, Clone, Default)]
struct Barcode {
    intervals: Vec<Vec<(i64, Option<i64>)>>,
}

impl Barcode {
    fn betti(&self, q: usize, n: i64) -> u64 {
        self.intervals.get(q).map_or(0, |iv| {
            iv.iter().filter(|(b, d)| *b <= n && d.is_none_or(|d| d > n)).count() as u64
        })
    }

    /// Rank of `H_q(S_n) -> H_q(S_{n+1})`, equal to the rank of the
    /// restriction on cohomology.
    fn through(&self, q: usize, n: i64) -> u64 {
        self.intervals.get(q).map_or(0, |iv| {
            iv.iter().filter(|(b, d)| *b <= n && d.is_none_or(|d| d > n + 1)).count() as u64
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coeffs {
    /// Integers, accepting only unit pivots.
    Integers,
    /// `F_p` with `p = 2^31 - 1`.
    Prime,
}

fn mod_pow(mut b: i64, mut e: i64) -> i64 {
    let mut r = 1;
    b %= PRIME as i64;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME as i64;
        }
        b = b * b % PRIME as i64;
        e >>= 1;
    }
    r
}

/// Standard column reduction in filtration order `(weight, dim, index)`,
/// with clearing. Over the integers the reduction is `R = D V` with `V`
/// unitriangular; if every pivot is a unit then every sublevel complex,
/// being a prefix of the order, has torsion-free homology read off from the
/// intervals. `None` reports a non-unit pivot or an overflow.
fn barcode(cloud: &PointCloud, limit: i64, coeffs: Coeffs) -> Option<Barcode> {
    let mut order: Vec<(i64, usize, u32)> = Vec::new();
    for (d, l) in cloud.layers.iter().enumerate() {
        for c in 0..l.len() {
            if l.weight[c] <= limit {
                order.push((l.weight[c], d, c as u32));
            }
        }
    }
    order.sort_unstable();
    let mut pos: Vec<Vec<u32>> = cloud.layers.iter().map(|l| vec![NONE; l.len()]).collect();
    for (i, &(_, d, c)) in order.iter().enumerate() {
        pos[d][c as usize] = i as u32;
    }
    let total = order.len();
    let mut reduced: Vec<Vec<(u32, i64)>> = vec![Vec::new(); total];
    let mut pivot_owner: Vec<u32> = vec![NONE; total];
    let mut negative = vec![false; total];
    let mut cleared = vec![false; total];
    let p = PRIME as i64;
    for d in (1..=cloud.top_dim()).rev() {
        for j in 0..total {
            let (_, dj, c) = order[j];
            if dj != d || cleared[j] {
                continue;
            }
            let mut col: Vec<(u32, i64)> = cloud
                .faces(d, c as usize)
                .into_iter()
                .map(|(f, s)| (pos[d - 1][f as usize], if coeffs == Coeffs::Prime && s < 0 { p - 1 } else { s }))
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            while let Some(&(low, a)) = col.last() {
                let k = pivot_owner[low as usize];
                if k == NONE {
                    break;
                }
                let other = &reduced[k as usize];
                let b = other.last().expect("pivot column").1;
                col = match coeffs {
                    // b is a unit, so a / b = a * b
                    Coeffs::Integers => subtract_scaled_int(&col, other, a * b)?,
                    Coeffs::Prime => subtract_scaled_mod(&col, other, a * mod_pow(b, p - 2) % p),
                };
            }
            if let Some(&(low, a)) = col.last() {
                if coeffs == Coeffs::Integers && a.abs() != 1 {
                    return None;
                }
                pivot_owner[low as usize] = j as u32;
                cleared[low as usize] = true;
                negative[j] = true;
            }
            reduced[j] = col;
        }
    }
    let mut intervals = vec![Vec::new(); cloud.top_dim() + 1];
    for j in 0..total {
        let (w, d, _) = order[j];
        if negative[j] {
            let low = reduced[j].last().expect("negative column").0 as usize;
            let (wb, db, _) = order[low];
            if wb < w {
                intervals[db].push((wb, Some(w)));
            }
        } else if !cleared[j] {
            intervals[d].push((w, None));
        }
    }
    Some(Barcode { intervals })
}

fn merge_columns(
    a: &[(u32, i64)],
    b: &[(u32, i64)],
    mut minus: impl FnMut(i64, i64) -> Option<i64>,
) -> Option<Vec<(u32, i64)>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            let v = minus(0, b[j].1)?;
            if v != 0 {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = minus(a[i].1, b[j].1)?;
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

fn subtract_scaled_int(a: &[(u32, i64)], b: &[(u32, i64)], f: i64) -> Option<Vec<(u32, i64)>> {
    merge_columns(a, b, |x, y| x.checked_sub(y.checked_mul(f)?))
}

fn subtract_scaled_mod(a: &[(u32, i64)], b: &[(u32, i64)], f: i64) -> Vec<(u32, i64)> {
    let p = PRIME as i64;
    merge_columns(a, b, |x, y| Some((x + p - y * f % p) % p)).expect("no overflow mod p")
}

/// Connected components of every level, tracked by union-find; each
/// component is represented by its lexicographically smallest point.
#[derive(Debug, Clone)]
struct ComponentSweep {
    lo: i64,
    /// Sorted representatives per level `lo, lo+1, ..` (one extra level at the end).
    reps: Vec<Vec<u32>>,
    /// `parents[i][a]`: index at level `i+1` of the component containing
    /// component `a` of level `i`.
    parents: Vec<Vec<usize>>,
}

struct UnionFind {
    parent: Vec<u32>,
    min: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }
}

fn sweep_components(vertex_w: &[i64], edges: &[(u32, u32, i64)], lo: i64, hi: i64) -> ComponentSweep {
    let n = vertex_w.len();
    let mut vs: Vec<u32> = (0..n as u32).filter(|&v| vertex_w[v as usize] <= hi + 1).collect();
    vs.sort_by_key(|&v| (vertex_w[v as usize], v));
    let mut es: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].2 <= hi + 1).collect();
    es.sort_by_key(|&e| edges[e].2);
    let mut uf = UnionFind { parent: (0..n as u32).collect(), min: (0..n as u32).collect() };
    let mut roots: BTreeSet<u32> = BTreeSet::new();
    let (mut vi, mut ei) = (0, 0);
    let mut reps: Vec<Vec<u32>> = Vec::new();
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for level in lo.min(hi + 1)..=hi + 1 {
        while vi < vs.len() && vertex_w[vs[vi] as usize] <= level {
            roots.insert(vs[vi]);
            vi += 1;
        }
        while ei < es.len() && edges[es[ei]].2 <= level {
            let (a, b, _) = edges[es[ei]];
            let (ra, rb) = (uf.find(a), uf.find(b));
            if ra != rb {
                let (ma, mb) = (uf.min[ra as usize], uf.min[rb as usize]);
                roots.remove(&ma);
                roots.remove(&mb);
                let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
                uf.parent[gone as usize] = keep;
                uf.min[keep as usize] = ma.min(mb);
                roots.insert(ma.min(mb));
            }
            ei += 1;
        }
        if level < lo {
            continue;
        }
        let now: Vec<u32> = roots.iter().copied().collect();
        if let Some(prev) = reps.last() {
            let map = prev
                .iter()
                .map(|&r| {
                    let root = uf.find(r);
                    let m = uf.min[root as usize];
                    now.binary_search(&m).expect("component persists")
                })
                .collect();
            parents.push(map);
        }
        reps.push(now);
    }
    ComponentSweep { lo, reps, parents }
}

fn cloud_edges(cloud: &PointCloud) -> Vec<(u32, u32, i64)> {
    let Some(l1) = cloud.layers.get(1) else { return Vec::new() };
    (0..l1.len())
        .map(|c| {
            let p = l1.base[c];
            let v = l1.mask[c].trailing_zeros() as usize;
            (p, cloud.up[p as usize * cloud.rank + v], l1.weight[c])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    H0Only,
}

/// One level of a lattice cohomology module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub n: i64,
    pub betti: Vec<u64>,
    pub torsion: Vec<Vec<u64>>,
    /// Rank of the restriction `H^q(S_{n+1}) -> H^q(S_n)`.
    pub u_rank: Vec<u64>,
}

impl Level {
    fn trivial(&self) -> bool {
        self.betti == [1] && self.torsion.is_empty()
    }
}

/// Levels run from `min_weight` up to the first level of the final run of
/// contractible-looking levels (one vertex, no higher cohomology); every
/// level above is understood to be the same.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeModule {
    pub min_weight: i64,
    pub levels: Vec<Level>,
    /// `sum_n rank H^q_red(S_n)` per `q`.
    pub reduced_ranks: Vec<u64>,
    /// Absent in H0-only mode.
    pub eu: Option<i64>,
}

#[derive(Serialize)]
struct LevelJson<'a> {
    n: i64,
    degree: i64,
    betti: &'a [u64],
    torsion: &'a [Vec<u64>],
    u_rank: &'a [u64],
}

#[derive(Serialize)]
struct ModuleJson<'a> {
    min_weight: i64,
    levels: Vec<LevelJson<'a>>,
    eu: Option<i64>,
    reduced_ranks: &'a [u64],
}

impl LatticeModule {
    fn from_levels(mut levels: Vec<Level>, with_eu: bool) -> Self {
        let min_weight = levels[0].n;
        if let Some(last) = levels.iter().rposition(|l| !l.trivial()) {
            levels.truncate((last + 2).min(levels.len()));
        } else {
            levels.truncate(1);
        }
        let width = levels.iter().map(|l| l.betti.len()).max().unwrap_or(1);
        let mut reduced_ranks = vec![0u64; width];
        for l in &levels {
            for (q, &b) in l.betti.iter().enumerate() {
                reduced_ranks[q] += if q == 0 { b.saturating_sub(1) } else { b };
            }
        }
        trim_u64(&mut reduced_ranks);
        let eu = with_eu.then(|| {
            -min_weight
                + reduced_ranks
                    .iter()
                    .enumerate()
                    .map(|(q, &r)| if q % 2 == 0 { r as i64 } else { -(r as i64) })
                    .sum::<i64>()
        });
        LatticeModule { min_weight, levels, reduced_ranks, eu }
    }

    pub fn level(&self, n: i64) -> Option<&Level> {
        self.levels.iter().find(|l| l.n == n)
    }

    /// `-m_w + sum_q (-1)^q rank H^q_red`.
    pub fn eu(&self) -> Option<i64> {
        self.eu
    }

    pub fn has_trivial_reduced_part(&self) -> bool {
        self.reduced_ranks.iter().all(|&r| r == 0) && self.levels.iter().all(|l| l.torsion.is_empty())
    }

    /// Serialized form; the grading is reported both as level `n` and as
    /// degree `2n`.
    pub fn to_json_value(&self) -> serde_json::Value {
        let m = ModuleJson {
            min_weight: self.min_weight,
            levels: self
                .levels
                .iter()
                .map(|l| LevelJson { n: l.n, degree: 2 * l.n, betti: &l.betti, torsion: &l.torsion, u_rank: &l.u_rank })
                .collect(),
            eu: self.eu,
            reduced_ranks: &self.reduced_ranks,
        };
        serde_json::to_value(m).expect("module serialization")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("min weight {}\n", self.min_weight);
        for l in &self.levels {
            let _ = writeln!(s, "n={:>4}  betti {:?}  torsion {:?}  u_rank {:?}", l.n, l.betti, l.torsion, l.u_rank);
        }
        let _ = writeln!(s, "reduced ranks {:?}", self.reduced_ranks);
        match self.eu {
            Some(e) => {
                let _ = writeln!(s, "eu {e}");
            }
            None => s.push_str("eu not computed (H0 only)\n"),
        }
        s
    }
}

/// Computes the module on a cloud. With `top = None` the cloud is a full
/// rectangle and all levels up to the maximal weight are used; otherwise
/// levels `m_w..=top` are reported and the cloud must contain every point
/// of weight at most `top + 1`.
pub fn module_from_cloud(cloud: &PointCloud, top: Option<i64>, mode: Mode) -> Result<LatticeModule> {
    let lo = cloud.min_weight().ok_or_else(|| Error::Invalid("empty domain".into()))?;
    let hi = top.unwrap_or_else(|| cloud.max_weight().expect("nonempty"));
    if hi < lo {
        return Err(Error::Invalid(format!("top level {hi} is below the minimal weight {lo}")));
    }
    let levels: Vec<Level> = match mode {
        Mode::H0Only => {
            let sweep = sweep_components(&cloud.weights, &cloud_edges(cloud), lo, hi);
            (0..=(hi - lo) as usize)
                .map(|i| {
                    let distinct: BTreeSet<usize> = sweep.parents[i].iter().copied().collect();
                    Level {
                        n: lo + i as i64,
                        betti: vec![sweep.reps[i].len() as u64],
                        torsion: vec![],
                        u_rank: vec![distinct.len() as u64],
                    }
                })
                .collect()
        }
        Mode::Full => {
            if let Some(bars) = barcode(cloud, hi + 1, Coeffs::Integers) {
                (lo..=hi)
                    .map(|n| {
                        let mut betti: Vec<u64> = (0..=cloud.top_dim()).map(|q| bars.betti(q, n)).collect();
                        let mut u_rank: Vec<u64> = (0..=cloud.top_dim()).map(|q| bars.through(q, n)).collect();
                        trim_u64(&mut betti);
                        trim_u64(&mut u_rank);
                        Level { n, betti, torsion: vec![], u_rank }
                    })
                    .collect()
            } else {
                levels_with_torsion(cloud, lo, hi)?
            }
        }
    };
    Ok(LatticeModule::from_levels(levels, mode == Mode::Full))
}

/// Per-level Smith forms for Betti numbers and torsion; restriction ranks
/// from persistence over `F_p`, which agrees with the rational rank unless
/// `p` divides a minor of the restriction map.
fn levels_with_torsion(cloud: &PointCloud, lo: i64, hi: i64) -> Result<Vec<Level>> {
    let bars = barcode(cloud, hi + 1, Coeffs::Prime).expect("field reduction always succeeds");
    // levels with no new cube repeat the previous one
    let mut new_at: BTreeSet<i64> = BTreeSet::new();
    for l in &cloud.layers {
        new_at.extend(l.weight.iter().copied().filter(|&w| w >= lo && w <= hi));
    }
    let keys: Vec<i64> = new_at.into_iter().collect();
    let coh: Vec<LevelCohomology> = keys.par_iter().map(|&n| integer_cohomology(cloud, n)).collect::<Result<_>>()?;
    let mut levels = Vec::new();
    for n in lo..=hi {
        let k = keys.partition_point(|&x| x <= n) - 1;
        let c = &coh[k];
        let mut u_rank: Vec<u64> = (0..c.betti.len().max(1)).map(|q| bars.through(q, n)).collect();
        trim_u64(&mut u_rank);
        for (q, &b) in c.betti.iter().enumerate() {
            if bars.betti(q, n) != b {
                return Err(Error::Invalid(format!(
                    "Betti number over F_p differs from the integral one at level {n}, degree {q}"
                )));
            }
        }
        levels.push(Level { n, betti: c.betti.clone(), torsion: c.torsion.clone(), u_rank });
    }
    Ok(levels)
}

/// Where a module is computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Rect(Rect),
    /// First quadrant, exact through level `n_max`.
    Sublevel { n_max: i64 },
}

/// The cloud of a model on a domain. Analytic models refuse rectangles
/// that do not contain their cohomological cycle.
pub fn cloud_for(model: &WeightModel, domain: &Domain, cfg: EngineConfig) -> Result<PointCloud> {
    match (domain, model) {
        (Domain::Rect(r), WeightModel::Topological(_)) => PointCloud::from_table(&model.tabulate(r), cfg),
        (Domain::Rect(r), _) => {
            let Rectangle::Concrete(own) = model.domain() else { unreachable!("data models have rectangles") };
            if r.rank() != own.rank() || !own.contains(r.corner()) {
                return Err(Error::Invalid("rectangle exceeds the tabulated data".into()));
            }
            if let WeightModel::Analytic(a) = model {
                let z = crate::weights::cohomological_cycle(a.data())?;
                if !z.0.iter().zip(r.corner()).all(|(a, b)| a <= b) {
                    return Err(Error::Invalid(format!(
                        "rectangle must contain the cohomological cycle {:?}",
                        z.0
                    )));
                }
            }
            PointCloud::from_table(&model.tabulate(r), cfg)
        }
        (Domain::Sublevel { n_max }, WeightModel::Topological(t)) => PointCloud::topological(t, n_max + 1, cfg),
        (Domain::Sublevel { .. }, _) => Err(Error::Invalid("sublevel domains need a topological model".into())),
    }
}

pub fn lattice_cohomology(model: &WeightModel, domain: &Domain, mode: Mode, cfg: EngineConfig) -> Result<LatticeModule> {
    let cloud = cloud_for(model, domain, cfg)?;
    module_from_cloud(&cloud, top_of(domain), mode)
}

fn top_of(domain: &Domain) -> Option<i64> {
    match domain {
        Domain::Rect(_) => None,
        Domain::Sublevel { n_max } => Some(*n_max),
    }
}

/// Result of [`truncate`].
#[derive(Debug, Clone)]
pub struct Truncation {
    pub domain: Domain,
    /// Smallest rectangle containing every point the computation touches.
    pub rect: Rect,
    /// Set when levels above the computed range are assumed trivial.
    pub heuristic: bool,
}

/// Chooses a finite domain. Pinned rectangles are kept; data models use
/// their own rectangle (exact). Topological models use the exact sublevel
/// set of level `n_max + 1`, so levels through `n_max` are exact; whether
/// anything happens above `n_max` is not decided, hence the flag. Without
/// `n_max`, the range is doubled until the upper half is trivial.
pub fn truncate(model: &WeightModel, n_max: Option<i64>, pinned: Option<Rect>, cfg: EngineConfig) -> Result<Truncation> {
    if let Some(r) = pinned {
        return Ok(Truncation { domain: Domain::Rect(r.clone()), rect: r, heuristic: false });
    }
    match model {
        WeightModel::Topological(t) => {
            let n_max = match n_max {
                Some(n) => n,
                None => auto_n_max(t, cfg)?,
            };
            let cloud = PointCloud::topological(t, n_max + 1, cfg)?;
            Ok(Truncation { domain: Domain::Sublevel { n_max }, rect: cloud.bounding_rect()?, heuristic: true })
        }
        _ => {
            let Rectangle::Concrete(r) = model.domain() else { unreachable!("data models have rectangles") };
            Ok(Truncation { domain: Domain::Rect(r.clone()), rect: r, heuristic: false })
        }
    }
}

/// Smallest `m_w + 2^j` (`j >= 2`) for which every level in the upper half
/// of `m_w..=m_w + 2^j` is trivial.
pub fn auto_n_max(t: &TopologicalWeight, cfg: EngineConfig) -> Result<i64> {
    // chi_k(0) = 0, so m_w <= 0
    let probe = PointCloud::topological(t, 0, cfg)?;
    let m_w = probe.min_weight().expect("origin has weight 0");
    let mut span = 4i64;
    loop {
        let n_max = m_w + span;
        let cloud = PointCloud::topological(t, n_max + 1, cfg)?;
        let module = module_from_cloud(&cloud, Some(n_max), Mode::Full)?;
        let last = module.levels.last().expect("nonempty");
        if last.n <= m_w + span / 2 && last.trivial() {
            return Ok(n_max);
        }
        span *= 2;
        if span > 1 << 12 {
            return Err(Error::ResourceCap("no stabilization found while doubling the level range".into()));
        }
    }
}

/// A vertex of a graded root: one connected component of `S_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootVertex {
    pub id: usize,
    pub grading: i64,
    /// Lexicographically smallest lattice point of the component.
    pub rep: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradedRoot {
    pub vertices: Vec<RootVertex>,
    /// `(child, parent)` with `grading(parent) = grading(child) + 1`.
    pub edges: Vec<(usize, usize)>,
}

impl GradedRoot {
    fn from_sweep(cloud: &PointCloud, sweep: &ComponentSweep) -> Self {
        // last level with two or more components, plus one
        let nlev = sweep.reps.len() - 1;
        let keep = sweep.reps[..nlev].iter().rposition(|r| r.len() > 1).map_or(1, |i| (i + 2).min(nlev));
        let mut vertices = Vec::new();
        let mut first = Vec::new();
        for (i, reps) in sweep.reps[..keep].iter().enumerate() {
            first.push(vertices.len());
            for &r in reps {
                vertices.push(RootVertex {
                    id: vertices.len(),
                    grading: sweep.lo + i as i64,
                    rep: cloud.point(r as usize).to_vec(),
                });
            }
        }
        let mut edges = Vec::new();
        for i in 0..keep.saturating_sub(1) {
            for (a, &p) in sweep.parents[i].iter().enumerate() {
                edges.push((first[i] + a, first[i + 1] + p));
            }
        }
        GradedRoot { vertices, edges }
    }

    pub fn vertices_at(&self, n: i64) -> usize {
        self.vertices.iter().filter(|v| v.grading == n).count()
    }

    pub fn min_grading(&self) -> i64 {
        self.vertices.iter().map(|v| v.grading).min().unwrap_or(0)
    }

    pub fn max_grading(&self) -> i64 {
        self.vertices.iter().map(|v| v.grading).max().unwrap_or(0)
    }

    /// Violations of the graded-root axioms on the computed range: edges
    /// join consecutive gradings, no vertex has two upward edges, and the
    /// top grading holds a single vertex.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut ups = vec![0usize; self.vertices.len()];
        for &(a, b) in &self.edges {
            if self.vertices[b].grading != self.vertices[a].grading + 1 {
                out.push(format!("edge {a}-{b} does not join consecutive gradings"));
            }
            ups[a] += 1;
        }
        for (v, &u) in ups.iter().enumerate() {
            if u > 1 {
                out.push(format!("vertex {v} has {u} upward edges"));
            }
            if u == 0 && self.vertices[v].grading < self.max_grading() {
                out.push(format!("vertex {v} has no upward edge"));
            }
        }
        let top = self.vertices_at(self.max_grading());
        if top != 1 {
            out.push(format!("top grading has {top} vertices; the range is too small"));
        }
        out
    }

    /// Isomorphism-invariant string (gradings included).
    pub fn canonical(&self) -> String {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        let mut has_parent = vec![false; self.vertices.len()];
        for &(a, b) in &self.edges {
            children[b].push(a);
            has_parent[a] = true;
        }
        fn enc(v: usize, root: &GradedRoot, children: &[Vec<usize>]) -> String {
            let mut parts: Vec<String> = children[v].iter().map(|&c| enc(c, root, children)).collect();
            parts.sort();
            format!("{}({})", root.vertices[v].grading, parts.join(","))
        }
        let mut tops: Vec<String> =
            (0..self.vertices.len()).filter(|&v| !has_parent[v]).map(|v| enc(v, self, &children)).collect();
        tops.sort();
        tops.join(";")
    }

    pub fn is_isomorphic(&self, other: &GradedRoot) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn shifted(&self, d: i64) -> GradedRoot {
        let mut r = self.clone();
        for v in &mut r.vertices {
            v.grading += d;
        }
        r
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("root serialization")
    }

    /// DOT with one rank per grading, the infinite ray drawn as a dashed
    /// edge into a terminal node.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph graded_root {\n  rankdir=BT;\n  node [shape=circle];\n");
        let (lo, hi) = (self.min_grading(), self.max_grading());
        for n in lo..=hi {
            let ids: Vec<String> = self
                .vertices
                .iter()
                .filter(|v| v.grading == n)
                .map(|v| format!("v{} [label=\"{}\"];", v.id, n))
                .collect();
            let _ = writeln!(s, "  {{ rank=same; {} }}", ids.join(" "));
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "  v{a} -> v{b};");
        }
        if let Some(top) = self.vertices.iter().find(|v| v.grading == hi) {
            let _ = writeln!(s, "  inf [shape=none, label=\"...\"];\n  v{} -> inf [style=dashed];", top.id);
        }
        s.push_str("}\n");
        s
    }
}

pub fn graded_root_from_cloud(cloud: &PointCloud, top: Option<i64>) -> Result<GradedRoot> {
    let lo = cloud.min_weight().ok_or_else(|| Error::Invalid("empty domain".into()))?;
    let hi = top.unwrap_or_else(|| cloud.max_weight().expect("nonempty"));
    if hi < lo {
        return Err(Error::Invalid(format!("top level {hi} is below the minimal weight {lo}")));
    }
    let sweep = sweep_components(&cloud.weights, &cloud_edges(cloud), lo, hi);
    Ok(GradedRoot::from_sweep(cloud, &sweep))
}

pub fn graded_root(model: &WeightModel, domain: &Domain, cfg: EngineConfig) -> Result<GradedRoot> {
    graded_root_from_cloud(&cloud_for(model, domain, cfg)?, top_of(domain))
}

pub fn eu(module: &LatticeModule) -> Option<i64> {
    module.eu
}

/// `sum over cubes of R(0,c) of (-1)^(q+1) w(cube)`.
pub fn eu_cube_formula(model: &dyn WeightFn, rect: &Rect, cfg: EngineConfig) -> Result<i64> {
    let t = Table::from_fn(rect.clone(), |l| model.weight(l));
    Ok(PointCloud::from_table(&t, cfg)?.alternating_cube_sum())
}

/// A lattice path `x_0 = 0, x_{i+1} = x_i +- E_v`, without repetitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpec {
    points: Vec<Vec<i64>>,
    increasing: bool,
}

impl PathSpec {
    pub fn new(points: Vec<Vec<i64>>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::Invalid("empty path".into()))?;
        if first.iter().any(|&x| x != 0) {
            return Err(Error::Invalid("paths start at the origin".into()));
        }
        let mut increasing = true;
        for w in points.windows(2) {
            if w[0].len() != w[1].len() {
                return Err(Error::Invalid("path points of different rank".into()));
            }
            let diff: Vec<i64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            if diff.iter().map(|x| x.abs()).sum::<i64>() != 1 {
                return Err(Error::Invalid(format!("{:?} -> {:?} is not a unit step", w[0], w[1])));
            }
            increasing &= diff.iter().all(|&x| x >= 0);
        }
        let distinct: BTreeSet<&Vec<i64>> = points.iter().collect();
        if distinct.len() != points.len() {
            return Err(Error::Invalid("path revisits a point".into()));
        }
        Ok(PathSpec { points, increasing })
    }

    /// The increasing path adding `E_v` for each listed direction.
    pub fn from_directions(rank: usize, dirs: &[usize]) -> Result<Self> {
        let mut l = vec![0; rank];
        let mut pts = vec![l.clone()];
        for &v in dirs {
            if v >= rank {
                return Err(Error::Invalid(format!("direction {v} out of range")));
            }
            l[v] += 1;
            pts.push(l.clone());
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn path_weights(model: &WeightModel, path: &PathSpec) -> Result<Vec<i64>> {
    if let Rectangle::Concrete(r) = model.domain() {
        if let Some(p) = path.points.iter().find(|p| !r.contains(p)) {
            return Err(Error::Invalid(format!("path point {p:?} outside the rectangle")));
        }
    }
    Ok(path.points.iter().map(|p| model.weight(p)).collect())
}

/// H^0 module of a weighted path (vertices `w_i`, edges `max(w_i, w_{i+1})`).
pub fn path_module(weights: &[i64]) -> Result<LatticeModule> {
    if weights.is_empty() {
        return Err(Error::Invalid("empty path".into()));
    }
    let edges: Vec<(u32, u32, i64)> =
        (1..weights.len()).map(|i| ((i - 1) as u32, i as u32, weights[i - 1].max(weights[i]))).collect();
    let lo = *weights.iter().min().expect("nonempty");
    let hi = *weights.iter().max().expect("nonempty");
    let sweep = sweep_components(weights, &edges, lo, hi);
    let levels = (0..=(hi - lo) as usize)
        .map(|i| {
            let u: BTreeSet<usize> = sweep.parents[i].iter().copied().collect();
            Level { n: lo + i as i64, betti: vec![sweep.reps[i].len() as u64], torsion: vec![], u_rank: vec![u.len() as u64] }
        })
        .collect();
    Ok(LatticeModule::from_levels(levels, true))
}

/// `H^0` of the path complex with its Euler characteristic; higher
/// cohomology vanishes since sublevel sets of a path are disjoint arcs.
pub fn path_cohomology(model: &WeightModel, path: &PathSpec) -> Result<LatticeModule> {
    path_module(&path_weights(model, path)?)
}

/// `-w(0) + sum_i max(0, w(x_i) - w(x_{i+1}))`.
pub fn path_eu_formula(model: &WeightModel, path: &PathSpec) -> Result<i64> {
    Ok(path_eu_of_weights(&path_weights(model, path)?))
}

pub fn path_eu_of_weights(w: &[i64]) -> i64 {
    -w[0] + w.windows(2).map(|p| (p[0] - p[1]).max(0)).sum::<i64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStrategy {
    /// Exact dynamic programming over all increasing paths.
    Exhaustive,
    /// Locally smallest drop at each step; an upper bound only.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathOptimum {
    pub eu: i64,
    pub path: PathSpec,
    pub heuristic: bool,
}

/// Minimum of the path Euler characteristic over increasing paths `0 -> c`.
pub fn min_path_eu(t: &Table, strategy: PathStrategy) -> Result<PathOptimum> {
    match strategy {
        PathStrategy::Exhaustive => extremal_path(t, false),
        PathStrategy::Greedy => greedy_path(t),
    }
}

/// Maximum of the path Euler characteristic over increasing paths `0 -> c`.
pub fn max_path_eu(t: &Table) -> Result<PathOptimum> {
    extremal_path(t, true)
}

fn extremal_path(t: &Table, maximize: bool) -> Result<PathOptimum> {
    let rect = t.rect();
    let s = rect.rank();
    let n = rect.volume();
    let mut best = vec![0i64; n];
    let mut from = vec![usize::MAX; n];
    best[0] = -t.at_index(0);
    for i in 1..n {
        let l = rect.point(i);
        let mut choice: Option<(i64, usize)> = None;
        for v in 0..s {
            if l[v] == 0 {
                continue;
            }
            let mut p = l.clone();
            p[v] -= 1;
            let j = rect.index(&p).expect("inside");
            let val = best[j] + (t.at_index(j) - t.at_index(i)).max(0);
            let better = match choice {
                None => true,
                Some((b, _)) => if maximize { val > b } else { val < b },
            };
            if better {
                choice = Some((val, v));
            }
        }
        let (val, v) = choice.expect("non-origin point has a predecessor");
        best[i] = val;
        from[i] = v;
    }
    let mut dirs = Vec::new();
    let mut l = rect.corner().to_vec();
    let mut i = n - 1;
    while i != 0 {
        let v = from[i];
        dirs.push(v);
        l[v] -= 1;
        i = rect.index(&l).expect("inside");
    }
    dirs.reverse();
    Ok(PathOptimum { eu: best[n - 1], path: PathSpec::from_directions(s, &dirs)?, heuristic: false })
}

fn greedy_path(t: &Table) -> Result<PathOptimum> {
    let rect = t.rect();
    let s = rect.rank();
    let mut l = vec![0; s];
    let mut dirs = Vec::new();
    while l.as_slice() != rect.corner() {
        let w = t.at(&l);
        let v = (0..s)
            .filter(|&v| l[v] < rect.corner()[v])
            .min_by_key(|&v| {
                let mut p = l.clone();
                p[v] += 1;
                let wp = t.at(&p);
                ((w - wp).max(0), wp)
            })
            .expect("not at the corner");
        l[v] += 1;
        dirs.push(v);
    }
    let path = PathSpec::from_directions(s, &dirs)?;
    let w: Vec<i64> = path.points().iter().map(|p| t.at(p)).collect();
    Ok(PathOptimum { eu: path_eu_of_weights(&w), path, heuristic: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plumbing::PlumbingGraph;
    use crate::weights::CombinatorialWeight;

    fn t1(vals: &[i64]) -> Table {
        Table::new(Rect::new(vec![vals.len() as i64 - 1]).unwrap(), vals.to_vec()).unwrap()
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    fn level(t: &Table, n: i64) -> LevelCohomology {
        let s = SublevelComplex::new(PointCloud::from_table(t, cfg()).unwrap(), n);
        cohomology(&s).unwrap()
    }

    fn single(e: i64) -> PlumbingGraph {
        PlumbingGraph::from_json(&format!(r#"{{"vertices":[{{"id":"a","e":{e}}}],"edges":[]}}"#)).unwrap()
    }

    #[test]
    fn sublevel_examples() {
        let g = single(-2);
        let w = TopologicalWeight::new(&g, g.minus_canonical());
        let rect = Rect::new(vec![2]).unwrap();
        let s = build_sublevel(&w, &rect, 0, cfg()).unwrap();
        assert_eq!(s.cubes(), vec![(vec![0], 0)]);
        assert!(build_sublevel(&w, &rect, -1, cfg()).unwrap().is_empty());
        let full = build_sublevel(&w, &rect, 4, cfg()).unwrap();
        assert_eq!(full.counts(), vec![3, 2]);
        assert_eq!(cohomology(&full).unwrap().betti, vec![1]);
    }

    #[test]
    fn cohomology_examples() {
        assert_eq!(level(&t1(&[0, 0]), -1).betti, vec![0]);
        assert_eq!(level(&t1(&[0, 5, 0]), 0).betti, vec![2]);
        let ring = Table::from_fn(Rect::new(vec![2, 2]).unwrap(), |l| if l == [1, 1] { 5 } else { 0 });
        let c = level(&ring, 0);
        assert_eq!(c.betti, vec![1, 1]);
        assert!(c.torsion.is_empty());
        assert_eq!(level(&ring, 5).betti, vec![1]);
    }

    #[test]
    fn hollow_cube_has_h2() {
        let t = Table::from_fn(Rect::new(vec![2, 2, 2]).unwrap(), |l| if l == [1, 1, 1] { 1 } else { 0 });
        assert_eq!(level(&t, 0).betti, vec![1, 0, 1]);
        let m = module_from_cloud(&PointCloud::from_table(&t, cfg()).unwrap(), None, Mode::Full).unwrap();
        assert_eq!(m.reduced_ranks, vec![0, 0, 1]);
        assert_eq!(m.eu, Some(1));
        assert_eq!(m.levels[0].u_rank, vec![1]);
    }

    #[test]
    fn combinatorial_example_module() {
        let w = CombinatorialWeight::new(t1(&[0, 0, 1]), t1(&[1, 0, 0])).unwrap();
        let model = WeightModel::Combinatorial(w);
        let rect = Rect::new(vec![2]).unwrap();
        let m = lattice_cohomology(&model, &Domain::Rect(rect.clone()), Mode::Full, cfg()).unwrap();
        assert_eq!(m.min_weight, -1);
        assert_eq!(m.reduced_ranks, vec![0]);
        assert_eq!(m.eu, Some(1));
        let root = graded_root(&model, &Domain::Rect(rect.clone()), cfg()).unwrap();
        assert_eq!(root.vertices.len(), 1);
        assert_eq!(root.min_grading(), -1);
        assert!(root.violations().is_empty());
        assert_eq!(eu_cube_formula(&model, &rect, cfg()).unwrap(), 1);
    }

    #[test]
    fn two_components_merge_in_root() {
        let t = t1(&[0, 2, 0, 1, 3]);
        let cloud = PointCloud::from_table(&t, cfg()).unwrap();
        let m = module_from_cloud(&cloud, None, Mode::Full).unwrap();
        assert_eq!(m.levels.iter().map(|l| l.betti[0]).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert_eq!(m.levels[0].u_rank, vec![2]);
        assert_eq!(m.levels[1].u_rank, vec![1]);
        assert_eq!(m.eu, Some(2));
        let root = graded_root_from_cloud(&cloud, None).unwrap();
        assert!(root.violations().is_empty());
        assert_eq!((root.vertices_at(0), root.vertices_at(1), root.vertices_at(2)), (2, 2, 1));
        assert_eq!(root.canonical(), "2(1(0()),1(0()))");
        let h0 = module_from_cloud(&cloud, None, Mode::H0Only).unwrap();
        assert_eq!(h0.eu, None);
        assert_eq!(h0.reduced_ranks, m.reduced_ranks);
        assert!(root.to_dot().contains("rank=same"));
    }

    #[test]
    fn smith_fallback_agrees_with_unit_pivot_reduction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let rect = Rect::new(vec![rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(0..3)]).unwrap();
            let vals = (0..rect.volume()).map(|_| rng.gen_range(-3..4)).collect();
            let t = Table::new(rect, vals).unwrap();
            let cloud = PointCloud::from_table(&t, cfg()).unwrap();
            let (lo, hi) = (cloud.min_weight().unwrap(), cloud.max_weight().unwrap());
            let fast = module_from_cloud(&cloud, None, Mode::Full).unwrap();
            let slow = LatticeModule::from_levels(levels_with_torsion(&cloud, lo, hi).unwrap(), true);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn trimming_keeps_first_trivial_level() {
        let cloud = PointCloud::from_table(&t1(&[0, 5, 9, 12]), cfg()).unwrap();
        let m = module_from_cloud(&cloud, None, Mode::Full).unwrap();
        assert_eq!(m.levels.len(), 1);
        assert_eq!(m.eu, Some(0));
    }

    #[test]
    fn quadratic_enumeration_matches_brute_force() {
        let g = PlumbingGraph::from_json(
            r#"{"vertices":[{"id":"a","e":-2},{"id":"b","e":-3},{"id":"c","e":-2}],"edges":[["a","b"],["b","c"]]}"#,
        )
        .unwrap();
        for k in [g.minus_canonical()] {
            let w = TopologicalWeight::new(&g, k);
            for bound in [0, 1, 3, 6] {
                let cloud = PointCloud::topological(&w, bound, cfg()).unwrap();
                let rect = Rect::new(vec![12, 12, 12]).unwrap();
                let brute: Vec<Vec<i64>> = rect.points().filter(|l| w.weight(l) <= bound).collect();
                assert!(brute.iter().all(|l| l.iter().all(|&x| x < 12)));
                let got: Vec<Vec<i64>> = (0..cloud.len()).map(|i| cloud.point(i).to_vec()).collect();
                assert_eq!(got, brute);
            }
        }
    }

    #[test]
    fn minus_two_vertex_truncation() {
        let g = single(-2);
        let model = WeightModel::topological(&g, g.minus_canonical());
        let tr = truncate(&model, Some(0), None, cfg()).unwrap();
        assert_eq!(tr.rect, Rect::new(vec![1]).unwrap());
        let rect = Rect::new(vec![2]).unwrap();
        assert_eq!(truncate(&model, None, Some(rect.clone()), cfg()).unwrap().domain, Domain::Rect(rect));
        let m = lattice_cohomology(&model, &tr.domain, Mode::Full, cfg()).unwrap();
        assert_eq!(m.eu, Some(0));
        assert_eq!(auto_n_max(model_top(&model), cfg()).unwrap(), 4);
    }

    fn model_top(m: &WeightModel) -> &TopologicalWeight {
        match m {
            WeightModel::Topological(t) => t,
            _ => unreachable!(),
        }
    }

    #[test]
    fn path_examples() {
        let m = path_module(&[0, 1, 0, 2]).unwrap();
        assert_eq!(m.min_weight, 0);
        assert_eq!(m.reduced_ranks, vec![1]);
        assert_eq!(m.eu, Some(1));
        assert_eq!(path_eu_of_weights(&[0, 1, 0, 2]), 1);
        assert_eq!(path_eu_of_weights(&[0, 2, 1, 3]), 1);
        assert_eq!(path_module(&[0, 2, 1, 3]).unwrap().eu, Some(1));
        assert_eq!(path_module(&[0, 0, 0]).unwrap().eu, Some(0));
        assert_eq!(path_module(&[0, 1, 2, 5]).unwrap().eu, Some(0));
    }

    #[test]
    fn path_spec_validation() {
        assert!(PathSpec::new(vec![vec![0, 0], vec![1, 0], vec![1, 1]]).unwrap().is_increasing());
        assert!(!PathSpec::new(vec![vec![0], vec![1], vec![0]]).is_ok());
        assert!(PathSpec::new(vec![vec![0, 0], vec![1, 1]]).is_err());
        assert!(PathSpec::new(vec![vec![1]]).is_err());
        let p = PathSpec::new(vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1]]).unwrap();
        assert!(!p.is_increasing());
    }

    #[test]
    fn path_optimization() {
        let t = Table::from_fn(Rect::new(vec![2, 2]).unwrap(), |l| [[0, 3, 1], [1, 0, 2], [4, 2, 0]][l[0] as usize][l[1] as usize]);
        let best = min_path_eu(&t, PathStrategy::Exhaustive).unwrap();
        let worst = max_path_eu(&t).unwrap();
        // brute force over the six monotone paths
        let mut all = Vec::new();
        for dirs in [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 1, 0], [1, 1, 0, 0]] {
            let p = PathSpec::from_directions(2, &dirs).unwrap();
            let w: Vec<i64> = p.points().iter().map(|x| t.at(x)).collect();
            all.push(path_eu_of_weights(&w));
        }
        assert_eq!(best.eu, *all.iter().min().unwrap());
        assert_eq!(worst.eu, *all.iter().max().unwrap());
        let w: Vec<i64> = best.path.points().iter().map(|x| t.at(x)).collect();
        assert_eq!(path_eu_of_weights(&w), best.eu);
        let g = min_path_eu(&t, PathStrategy::Greedy).unwrap();
        assert!(g.heuristic && g.eu >= best.eu);
    }
}
