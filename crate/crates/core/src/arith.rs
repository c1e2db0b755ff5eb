//! Exact integer and rational linear algebra.
//!
//! Everything in here is exact: determinants by fraction-free elimination,
//! linear solves over the rationals, and Smith normal forms over the
//! integers (dense with big integers, sparse with machine integers and a
//! dense fallback for whatever resists unit pivoting).

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact floor as an `i64`; panics only on values far outside machine range.
pub fn floor_i64(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().expect("floor out of i64 range")
}

/// Largest integer `m` with `m*m <= n`, for `n >= 0`.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative());
    n.sqrt()
}

/// Largest integer `m` with `m <= sqrt(r)`, for rational `r >= 0`.
pub fn floor_sqrt(r: &Rational) -> BigInt {
    if r.is_negative() || r.is_zero() {
        return BigInt::zero();
    }
    // floor(sqrt(p/q)) = floor(sqrt(p*q)/q) = floor(isqrt(p*q)/q)
    let p = r.numer();
    let q = r.denom();
    isqrt(&(p * q)) / q
}

/// Determinant by Bareiss fraction-free elimination.
pub fn det_bareiss(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

pub fn to_big(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Solves `a * X = b` exactly for square nonsingular `a`; `b` is given by
/// columns and the solution is returned by columns.
pub fn solve_columns(a: &[Vec<i64>], b: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let m = b.len();
    let mut aug: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = a[i].iter().map(|&x| rat(x)).collect();
            row.extend(b.iter().map(|col| col[i].clone()));
            row
        })
        .collect();
    for k in 0..n {
        let piv = (k..n).find(|&i| !aug[i][k].is_zero())?;
        aug.swap(piv, k);
        let inv = aug[k][k].recip();
        for x in aug[k].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != k && !aug[i][k].is_zero() {
                let f = aug[i][k].clone();
                for j in k..n + m {
                    let v = &aug[k][j] * &f;
                    aug[i][j] = &aug[i][j] - v;
                }
            }
        }
    }
    Some(
        (0..m)
            .map(|j| (0..n).map(|i| aug[i][n + j].clone()).collect())
            .collect(),
    )
}

/// Diagonal of the Smith normal form of a dense integer matrix: the nonzero
/// invariant factors `d_1 | d_2 | ...`, all positive.
pub fn invariant_factors(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    for j in t..cols {
                        let v = &q * &a[t][j];
                        a[i][j] -= v;
                    }
                    if !a[i][t].is_zero() {
                        changed = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut().skip(t) {
                        let v = &q * &row[t];
                        row[j] -= v;
                    }
                    if !a[t][j].is_zero() {
                        changed = true;
                    }
                }
            }
            if !changed {
                // divisibility of the rest of the block
                let mut fix = None;
                'outer: for i in t + 1..rows {
                    for j in t + 1..cols {
                        if !(&a[i][j] % &a[t][t]).is_zero() {
                            fix = Some(i);
                            break 'outer;
                        }
                    }
                }
                match fix {
                    Some(i) => {
                        for j in t..cols {
                            let v = a[i][j].clone();
                            a[t][j] += v;
                        }
                    }
                    None => break,
                }
            }
            // move a smaller remainder into the pivot position
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

/// Rank and torsion coefficients (invariant factors > 1) of an integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SmithSummary {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

/// Sparse integer matrix stored by columns, used for cubical boundary maps.
#[derive(Debug, Clone)]
pub struct SparseColumns {
    pub nrows: usize,
    pub cols: Vec<Vec<(usize, i64)>>,
}

impl SparseColumns {
    /// Smith summary via unit-pivot elimination; whatever cannot be
    /// eliminated with a ±1 pivot (or would overflow) goes to the dense
    /// big-integer routine.
    pub fn smith(&self) -> SmithSummary {
        let mut cols: Vec<BTreeMap<usize, i64>> = self
            .cols
            .iter()
            .map(|c| c.iter().filter(|e| e.1 != 0).copied().collect())
            .collect();
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.nrows];
        for (j, c) in cols.iter().enumerate() {
            for &r in c.keys() {
                rows[r].insert(j);
            }
        }
        let mut alive: BTreeSet<usize> = (0..cols.len()).filter(|&j| !cols[j].is_empty()).collect();
        let mut rank = 0;
        'sweep: loop {
            let mut progress = false;
            let order: Vec<usize> = alive.iter().copied().collect();
            for j in order {
                if !alive.contains(&j) {
                    continue;
                }
                if cols[j].is_empty() {
                    alive.remove(&j);
                    continue;
                }
                let pivot = cols[j]
                    .iter()
                    .filter(|(_, v)| v.abs() == 1)
                    .min_by_key(|(r, _)| rows[**r].len())
                    .map(|(&r, &v)| (r, v));
                let Some((r, u)) = pivot else { continue };
                let pivot_col = cols[j].clone();
                let others: Vec<usize> = rows[r].iter().copied().filter(|&k| k != j).collect();
                let mut updates = Vec::with_capacity(others.len());
                for &k in &others {
                    let f = cols[k][&r] * u; // u = ±1, so a/u = a*u
                    let mut nc = cols[k].clone();
                    for (&ri, &vi) in &pivot_col {
                        // on overflow the uncommitted pivot is left for the dense routine
                        let Some(delta) = f.checked_mul(vi) else { break 'sweep };
                        let e = nc.entry(ri).or_insert(0);
                        let Some(nv) = e.checked_sub(delta) else { break 'sweep };
                        *e = nv;
                    }
                    updates.push((k, nc));
                }
                for (k, nc) in updates {
                    for &ri in pivot_col.keys() {
                        rows[ri].remove(&k);
                    }
                    let nc: BTreeMap<usize, i64> = nc.into_iter().filter(|e| e.1 != 0).collect();
                    for &ri in nc.keys() {
                        rows[ri].insert(k);
                    }
                    if nc.is_empty() {
                        alive.remove(&k);
                    }
                    cols[k] = nc;
                }
                for &ri in pivot_col.keys() {
                    rows[ri].remove(&j);
                }
                cols[j].clear();
                alive.remove(&j);
                // row r now only meets column j, which is gone
                rows[r].clear();
                rank += 1;
                progress = true;
            }
            if !progress {
                break;
            }
        }
        let rest: Vec<usize> = alive.iter().copied().filter(|&j| !cols[j].is_empty()).collect();
        if rest.is_empty() {
            return SmithSummary { rank, torsion: Vec::new() };
        }
        let used_rows: BTreeSet<usize> = rest.iter().flat_map(|&j| cols[j].keys().copied()).collect();
        let row_index: BTreeMap<usize, usize> =
            used_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut dense = vec![vec![BigInt::zero(); rest.len()]; used_rows.len()];
        for (jj, &j) in rest.iter().enumerate() {
            for (&r, &v) in &cols[j] {
                dense[row_index[&r]][jj] = BigInt::from(v);
            }
        }
        let factors = invariant_factors(&dense);
        rank += factors.len();
        let torsion = factors.into_iter().filter(|d| !d.is_one()).collect();
        SmithSummary { rank, torsion }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(m: &[&[i64]]) -> Vec<Vec<BigInt>> {
        m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn bareiss_matches_small_determinants() {
        assert_eq!(det_bareiss(&big(&[&[2, -1], &[-1, 2]])), BigInt::from(3));
        assert_eq!(det_bareiss(&big(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
        assert_eq!(det_bareiss(&big(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]])), BigInt::zero());
    }

    #[test]
    fn smith_of_a2_form() {
        let f = invariant_factors(&big(&[&[-2, 1], &[1, -2]]));
        assert_eq!(f, vec![BigInt::from(1), BigInt::from(3)]);
    }

    #[test]
    fn smith_divisibility_chain() {
        let f = invariant_factors(&big(&[&[2, 0], &[0, 3]]));
        assert_eq!(f, vec![BigInt::from(1), BigInt::from(6)]);
        let f = invariant_factors(&big(&[&[4, 0, 0], &[0, 6, 0]]));
        assert_eq!(f, vec![BigInt::from(2), BigInt::from(12)]);
    }

    #[test]
    fn sparse_smith_agrees_with_dense() {
        let dense = big(&[&[1, 1, 0], &[1, -1, 0], &[0, 2, 2]]);
        let sparse = SparseColumns {
            nrows: 3,
            cols: (0..3)
                .map(|j| (0..3).map(|i| (i, dense[i][j].to_i64().unwrap())).collect())
                .collect(),
        };
        let s = sparse.smith();
        let d = invariant_factors(&dense);
        assert_eq!(s.rank, d.len());
        let dt: Vec<BigInt> = d.into_iter().filter(|x| !x.is_one()).collect();
        assert_eq!(s.torsion, dt);
    }

    #[test]
    fn floor_sqrt_of_rationals() {
        assert_eq!(floor_sqrt(&rat_frac(9, 4)), BigInt::from(1));
        assert_eq!(floor_sqrt(&rat(16)), BigInt::from(4));
        assert_eq!(floor_sqrt(&rat_frac(17, 1)), BigInt::from(4));
    }

    #[test]
    fn rational_parse_roundtrip() {
        let r = parse_rational("-4/6").unwrap();
        assert_eq!(format_rational(&r), "-2/3");
        assert_eq!(parse_rational("5").unwrap(), rat(5));
        assert!(parse_rational("1/0").is_none());
    }
}
