//! Shared helpers for the integration tests: fixture loading, star graphs
//! and the synthetic analytic model behind the shipped Hilbert data.
#![allow(dead_code)]

use std::path::PathBuf;

use latcoh::arith::rat;
use latcoh::grid::{Rect, Table};
use latcoh::plumbing::{IntegerCycle, PlumbingGraph};
use latcoh::weights::HilbertData;
use num_traits::ToPrimitive;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn graph(name: &str) -> PlumbingGraph {
    let text = std::fs::read_to_string(fixture_path(&format!("graphs/{name}.json"))).unwrap();
    PlumbingGraph::from_json(&text).unwrap()
}

pub fn data(name: &str) -> HilbertData {
    let text = std::fs::read_to_string(fixture_path(&format!("analytic/{name}.json"))).unwrap();
    HilbertData::from_json(&text).unwrap()
}

/// Star with central vertex `c` and legs `l{i}_{j}` (`j` counted outward).
pub fn star(center: i64, legs: &[&[i64]]) -> PlumbingGraph {
    let mut v = vec![format!(r#"{{"id":"c","e":{center}}}"#)];
    let mut e = vec![];
    for (i, leg) in legs.iter().enumerate() {
        for (j, x) in leg.iter().enumerate() {
            v.push(format!(r#"{{"id":"l{i}_{j}","e":{x}}}"#));
            let prev = if j == 0 { "c".to_string() } else { format!("l{i}_{}", j - 1) };
            e.push(format!(r#"["{prev}","l{i}_{j}"]"#));
        }
    }
    PlumbingGraph::from_json(&format!(r#"{{"vertices":[{}],"edges":[{}]}}"#, v.join(","), e.join(",")))
        .unwrap()
}

/// Negative definite star-shaped graphs with at most eight vertices.
pub fn star_graphs() -> Vec<PlumbingGraph> {
    vec![
        star(-1, &[&[-2], &[-3], &[-7]]),
        star(-1, &[&[-2], &[-3], &[-11]]),
        star(-2, &[&[-2], &[-3], &[-3]]),
        star(-1, &[&[-3], &[-3], &[-4]]),
        star(-2, &[&[-3], &[-3], &[-3]]),
        star(-1, &[&[-2], &[-5], &[-5]]),
        star(-3, &[&[-2], &[-2], &[-2], &[-2]]),
        star(-1, &[&[-2], &[-4], &[-5]]),
        star(-2, &[&[-2, -2], &[-3], &[-4]]),
        star(-1, &[&[-2], &[-4, -2], &[-5]]),
        star(-2, &[&[-3], &[-4], &[-5]]),
    ]
}

/// Graph fixtures that are negative definite trees.
pub fn graph_names() -> Vec<&'static str> {
    vec![
        "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "d4", "e6", "e7", "e8", "sigma237", "star_1_2_3_11",
        "star_235_minus2",
    ]
}

/// Monomial model: `h(l) = #{a in A : a not >= l}` and
/// `h1(l) = #{b in B : b <= l}`, so `p_gh = |B|`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<Vec<i64>>,
}

fn ge(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a >= b)
}

impl Monomial {
    /// `a - b >= -E_v` for some `v` forces `a >= b`; this is what makes
    /// the two jumps along an edge exclusive.
    pub fn duality_axiom(&self) -> bool {
        self.a.iter().all(|a| {
            self.b.iter().all(|b| {
                let d: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let near = d.iter().all(|&x| x >= -1) && d.iter().filter(|&&x| x == -1).count() <= 1;
                !near || d.iter().all(|&x| x >= 0)
            })
        })
    }

    /// `(a - b)|_V̄ >= -E_V̄` forces `a >= b`.
    pub fn reduction_axiom(&self, vbar: &[usize]) -> bool {
        self.a.iter().all(|a| {
            self.b.iter().all(|b| {
                let near = vbar.iter().all(|&v| a[v] - b[v] >= -1);
                !near || ge(a, b)
            })
        })
    }

    pub fn z_coh(&self, rank: usize) -> Vec<i64> {
        (0..rank).map(|v| self.b.iter().map(|b| b[v]).max().unwrap_or(0)).collect()
    }

    pub fn data(&self, corner: Vec<i64>) -> HilbertData {
        let rect = Rect::new(corner).unwrap();
        let h = Table::from_fn(rect.clone(), |l| self.a.iter().filter(|a| !ge(a, l)).count() as i64);
        let h1 = Table::from_fn(rect.clone(), |l| self.b.iter().filter(|b| ge(l, b)).count() as i64);
        let class = vec![rat(0); rect.rank()];
        HilbertData::new(class, self.b.len() as i64, h, h1).unwrap()
    }
}

/// Rational singularity, trivial class: `h(l) = chi(s(l))` with `s(l)` the
/// smallest cycle above `l` in the Lipman cone, and `h1 = 0`.
pub fn rational_data(g: &PlumbingGraph, corner: Vec<i64>) -> HilbertData {
    let rect = Rect::new(corner).unwrap();
    let h = Table::from_fn(rect.clone(), |l| {
        let s = g.s_of(&IntegerCycle(l.to_vec()).to_rational()).cycle;
        g.chi(&s).to_integer().to_i64().unwrap()
    });
    let h1 = Table::from_fn(rect.clone(), |_| 0);
    HilbertData::new(vec![rat(0); rect.rank()], 0, h, h1).unwrap()
}

pub fn v(x: &[i64]) -> Vec<i64> {
    x.to_vec()
}

pub fn p1_model() -> Monomial {
    Monomial { a: vec![v(&[0, 0]), v(&[1, 1]), v(&[1, 2]), v(&[3, 3])], b: vec![v(&[1, 1])] }
}

pub fn p2_model() -> Monomial {
    Monomial { a: vec![v(&[0, 0]), v(&[1, 1]), v(&[2, 2]), v(&[3, 2])], b: vec![v(&[1, 1]), v(&[2, 2])] }
}

pub fn p1_rank3_model() -> Monomial {
    Monomial { a: vec![v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[1, 1, 1]), v(&[2, 1, 2])], b: vec![v(&[1, 1, 1])] }
}

/// Reduction set `{0}`.
pub fn ban_p1_model() -> Monomial {
    Monomial {
        a: vec![v(&[0, 0, 0]), v(&[0, 1, 0]), v(&[0, 2, 1]), v(&[2, 1, 1]), v(&[3, 1, 2])],
        b: vec![v(&[2, 1, 1])],
    }
}

/// Reduction set `{0, 1}`.
pub fn ban_p2_model() -> Monomial {
    Monomial { a: vec![v(&[0, 0, 0]), v(&[0, 0, 1]), v(&[3, 3, 1])], b: vec![v(&[2, 0, 1]), v(&[0, 2, 1])] }
}

/// Both jumps happen along `(1,0) -> (1,1)`.
pub fn cdp_violation_model() -> Monomial {
    Monomial { a: vec![v(&[0, 0]), v(&[1, 0])], b: vec![v(&[1, 1])] }
}

/// Every shipped Hilbert-data fixture, rebuilt from its model.
pub fn analytic_fixtures() -> Vec<(&'static str, HilbertData)> {
    let a1 = graph("a1");
    let a2 = graph("a2");
    let d4 = graph("d4");
    vec![
        ("a1_rational", rational_data(&a1, vec![2])),
        ("a2_rational", rational_data(&a2, vec![2, 2])),
        ("a2_rational_defect", rational_data(&a2, vec![1, 2])),
        ("d4_rational", rational_data(&d4, vec![1, 1, 2, 1])),
        ("a2_rational_c", rational_data(&a2, vec![0, 0])),
        ("a2_rational_c_plus_e0", rational_data(&a2, vec![1, 0])),
        ("synthetic_p1", p1_model().data(vec![1, 1])),
        ("synthetic_p1_plus_e0", p1_model().data(vec![2, 1])),
        ("synthetic_p2", p2_model().data(vec![2, 2])),
        ("synthetic_p2_plus_e1", p2_model().data(vec![2, 3])),
        ("synthetic_p1_rank3", p1_rank3_model().data(vec![1, 1, 1])),
        ("synthetic_p1_rank3_plus_e2", p1_rank3_model().data(vec![1, 1, 2])),
        ("ban_p1", ban_p1_model().data(vec![2, 1, 1])),
        ("ban_p2", ban_p2_model().data(vec![2, 2, 1])),
        ("cdp_violation", cdp_violation_model().data(vec![1, 1])),
    ]
}

/// Pairs `(c = Z_coh, c + E_v)` among the fixtures.
pub fn c_independence_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("a2_rational_c", "a2_rational_c_plus_e0"),
        ("synthetic_p1", "synthetic_p1_plus_e0"),
        ("synthetic_p2", "synthetic_p2_plus_e1"),
        ("synthetic_p1_rank3", "synthetic_p1_rank3_plus_e2"),
    ]
}

/// Fixtures satisfying the duality axiom, with their `p_gh`.
pub fn eu_fixtures() -> Vec<&'static str> {
    vec![
        "a1_rational",
        "a2_rational",
        "a2_rational_defect",
        "d4_rational",
        "a2_rational_c",
        "a2_rational_c_plus_e0",
        "synthetic_p1",
        "synthetic_p1_plus_e0",
        "synthetic_p2",
        "synthetic_p2_plus_e1",
        "synthetic_p1_rank3",
        "synthetic_p1_rank3_plus_e2",
        "ban_p1",
        "ban_p2",
    ]
}
