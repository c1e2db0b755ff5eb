//! Plumbing graphs and the arithmetic of the lattice `L` and its dual `L'`.
//!
//! Vertices are kept in lexicographic order of their ids; every coordinate
//! vector in the crate is indexed by that order.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, format_rational, rat, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    #[serde(rename = "e")]
    pub euler: i64,
    #[serde(rename = "g", default)]
    pub genus: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<Vertex>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// Integral cycle `l = sum m_v E_v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IntegerCycle(pub Vec<i64>);

/// Rational cycle in `L ⊗ Q`; elements of `L'` when all products with the
/// `E_v` are integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalCycle(pub Vec<Rational>);

impl IntegerCycle {
    pub fn zero(n: usize) -> Self {
        IntegerCycle(vec![0; n])
    }

    pub fn basis(n: usize, v: usize) -> Self {
        let mut c = vec![0; n];
        c[v] = 1;
        IntegerCycle(c)
    }

    pub fn to_rational(&self) -> RationalCycle {
        RationalCycle(self.0.iter().map(|&x| rat(x)).collect())
    }

    pub fn le(&self, other: &IntegerCycle) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl RationalCycle {
    pub fn zero(n: usize) -> Self {
        RationalCycle(vec![Rational::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, o: &RationalCycle) -> RationalCycle {
        RationalCycle(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &RationalCycle) -> RationalCycle {
        RationalCycle(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, f: i64) -> RationalCycle {
        let f = rat(f);
        RationalCycle(self.0.iter().map(|a| a * &f).collect())
    }

    pub fn add_int(&self, o: &IntegerCycle) -> RationalCycle {
        RationalCycle(self.0.iter().zip(&o.0).map(|(a, &b)| a + rat(b)).collect())
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|x| x.is_integer())
    }

    /// The integral cycle, if every coordinate is an integer.
    pub fn to_integer(&self) -> Option<IntegerCycle> {
        self.0
            .iter()
            .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
            .collect::<Option<Vec<_>>>()
            .map(IntegerCycle)
    }

    pub fn floor(&self) -> IntegerCycle {
        IntegerCycle(self.0.iter().map(arith::floor_i64).collect())
    }

    pub fn le(&self, other: &RationalCycle) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

impl fmt::Display for RationalCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

/// A class of `H = L'/L`, stored through its representative `r_h` with all
/// coordinates in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscriminantClass {
    r: RationalCycle,
}

impl DiscriminantClass {
    pub fn representative(&self) -> &RationalCycle {
        &self.r
    }

    pub fn is_zero(&self) -> bool {
        self.r.0.iter().all(|x| x.is_zero())
    }
}

/// A characteristic element together with its products `(k, E_v)`, which
/// are integers; this is all that is needed to evaluate `chi_k` on `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacteristicRep {
    pub k: RationalCycle,
    pub products: Vec<i64>,
}

/// Invariant factors of `L'/L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscriminantGroup {
    /// Invariant factors greater than one.
    pub factors: Vec<BigInt>,
    pub order: BigInt,
}

/// Output of a Laufer-type iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LauferRun<C> {
    pub cycle: C,
    pub iterations: usize,
}

/// Canonical spin^c data of a class `h`: `r_h`, `s_h = r_h + Δ_h`,
/// `k_r = -Z_K + 2 s_h` and the variant `-Z_K + 2 r_h`.
#[derive(Debug, Clone)]
pub struct SpinRep {
    pub class: DiscriminantClass,
    pub r_h: RationalCycle,
    pub s_h: RationalCycle,
    pub delta: IntegerCycle,
    pub k_r: CharacteristicRep,
    pub k_r_variant: CharacteristicRep,
}

#[derive(Debug, Clone)]
pub struct PlumbingGraph {
    vertices: Vec<Vertex>,
    edges: Vec<(usize, usize)>,
    form: Vec<Vec<i64>>,
    index: HashMap<String, usize>,
    det_neg: BigInt,
}

impl PlumbingGraph {
    /// Builds and validates a graph: unique ids, known endpoints, no loops,
    /// connected, negative definite.
    pub fn new(mut vertices: Vec<Vertex>, edges: Vec<(String, String)>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        vertices.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex id {:?}", v.id)));
            }
        }
        let n = vertices.len();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (a, b) in &edges {
            let ia = *index
                .get(a)
                .ok_or_else(|| Error::InvalidGraph(format!("edge references unknown vertex {a:?}")))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::InvalidGraph(format!("edge references unknown vertex {b:?}")))?;
            if ia == ib {
                return Err(Error::InvalidGraph(format!("loop at vertex {a:?}")));
            }
            idx_edges.push((ia.min(ib), ia.max(ib)));
        }
        idx_edges.sort();
        let mut form = vec![vec![0i64; n]; n];
        for (i, v) in vertices.iter().enumerate() {
            form[i][i] = v.euler;
        }
        for &(a, b) in &idx_edges {
            form[a][b] += 1;
            form[b][a] += 1;
        }
        let g = PlumbingGraph { vertices, edges: idx_edges, form, index, det_neg: BigInt::zero() };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        let det_neg = g.check_negative_definite()?;
        Ok(PlumbingGraph { det_neg, ..g })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("graph file, line {} column {}: {e}", e.line(), e.column())))?;
        Self::new(f.vertices, f.edges)
    }

    pub fn to_json(&self) -> String {
        let f = GraphFile {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.vertices[a].id.clone(), self.vertices[b].id.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("graph serialization")
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if !seen[w] && self.form[v][w] != 0 && v != w {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Leading principal minors of `-I` must all be positive; returns `det(-I)`.
    fn check_negative_definite(&self) -> Result<BigInt> {
        let n = self.len();
        let neg: Vec<Vec<BigInt>> = self
            .form
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(-x)).collect())
            .collect();
        let mut last = BigInt::one();
        for k in 1..=n {
            let minor: Vec<Vec<BigInt>> = neg[..k].iter().map(|r| r[..k].to_vec()).collect();
            last = arith::det_bareiss(&minor);
            if !last.is_positive() {
                return Err(Error::NotNegativeDefinite { order: k, value: last.to_string() });
            }
        }
        Ok(last)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> Vec<String> {
        self.vertices.iter().map(|v| v.id.clone()).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn intersection_matrix(&self) -> &[Vec<i64>] {
        &self.form
    }

    /// `|det I|`, the order of `H`.
    pub fn det_abs(&self) -> &BigInt {
        &self.det_neg
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.len()
            && self.edges.windows(2).all(|w| w[0] != w[1])
    }

    /// Equivariant operations require a tree of rational curves.
    pub fn require_qhs3(&self) -> Result<()> {
        if !self.is_tree() {
            return Err(Error::NotQhs3("graph is not a tree (cycle or multiple edge)".into()));
        }
        if let Some(v) = self.vertices.iter().find(|v| v.genus > 0) {
            return Err(Error::NotQhs3(format!("vertex {:?} has genus {}", v.id, v.genus)));
        }
        Ok(())
    }

    /// Copy of the graph with altered Euler numbers; re-validated.
    pub fn with_euler_numbers(&self, changes: &[(usize, i64)]) -> Result<PlumbingGraph> {
        let mut vs = self.vertices.clone();
        for &(v, e) in changes {
            vs[v].euler = e;
        }
        Self::new(vs, self.edge_ids())
    }

    pub fn edge_ids(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.vertices[a].id.clone(), self.vertices[b].id.clone()))
            .collect()
    }

    pub fn pair_int(&self, a: &[i64], b: &[i64]) -> i64 {
        let n = self.len();
        let mut s = 0i64;
        for i in 0..n {
            if a[i] == 0 {
                continue;
            }
            let mut row = 0i64;
            for j in 0..n {
                row += self.form[i][j] * b[j];
            }
            s += a[i] * row;
        }
        s
    }

    /// `(x, E_v)` for all `v`, for an integral cycle.
    pub fn products_int(&self, x: &[i64]) -> Vec<i64> {
        (0..self.len())
            .map(|v| (0..self.len()).map(|j| self.form[v][j] * x[j]).sum())
            .collect()
    }

    /// `(x, E_v)` for all `v`.
    pub fn products(&self, x: &RationalCycle) -> Vec<Rational> {
        (0..self.len())
            .map(|v| {
                let mut s = Rational::zero();
                for j in 0..self.len() {
                    if self.form[v][j] != 0 {
                        s += &x.0[j] * rat(self.form[v][j]);
                    }
                }
                s
            })
            .collect()
    }

    pub fn pair(&self, x: &RationalCycle, y: &RationalCycle) -> Rational {
        self.products(y).iter().zip(&x.0).map(|(p, a)| p * a).sum()
    }

    /// Integer products `(x, E_v)` for `x ∈ L'`; error if `x ∉ L'`.
    pub fn dual_products(&self, x: &RationalCycle) -> Result<Vec<i64>> {
        self.products(x)
            .into_iter()
            .map(|p| {
                if p.is_integer() {
                    Ok(p.to_integer().to_i64().expect("product in range"))
                } else {
                    Err(Error::Invalid(format!("cycle {x} is not in the dual lattice")))
                }
            })
            .collect()
    }

    pub fn is_in_dual_lattice(&self, x: &RationalCycle) -> bool {
        self.products(x).iter().all(|p| p.is_integer())
    }

    /// The anti-dual basis `E*_v` with `(E*_v, E_w) = -δ_vw`.
    pub fn dual_basis(&self) -> Vec<RationalCycle> {
        let n = self.len();
        let rhs: Vec<Vec<Rational>> = (0..n)
            .map(|v| (0..n).map(|w| if v == w { rat(-1) } else { rat(0) }).collect())
            .collect();
        arith::solve_columns(&self.form, &rhs)
            .expect("negative definite form is nonsingular")
            .into_iter()
            .map(RationalCycle)
            .collect()
    }

    pub fn discriminant_group(&self) -> DiscriminantGroup {
        let factors: Vec<BigInt> = arith::invariant_factors(&arith::to_big(&self.form))
            .into_iter()
            .filter(|d| !d.is_one())
            .collect();
        DiscriminantGroup { factors, order: self.det_neg.clone() }
    }

    /// `Z_K` from the adjunction formulae `(Z_K, E_v) = e_v + 2 - 2 g_v`.
    pub fn canonical_cycle(&self) -> RationalCycle {
        let rhs: Vec<Rational> = self
            .vertices
            .iter()
            .map(|v| rat(v.euler + 2 - 2 * v.genus as i64))
            .collect();
        RationalCycle(
            arith::solve_columns(&self.form, &[rhs])
                .expect("nonsingular form")
                .remove(0),
        )
    }

    /// Riemann–Roch expression `chi(l') = -(l', l' - Z_K)/2`.
    pub fn chi(&self, l: &RationalCycle) -> Rational {
        let zk = self.canonical_cycle();
        -self.pair(l, &l.sub(&zk)) / rat(2)
    }

    /// `chi` on integral cycles, precomputing `Z_K` once per call site.
    pub fn chi_int(&self, l: &[i64]) -> Rational {
        self.chi(&IntegerCycle(l.to_vec()).to_rational())
    }

    pub fn characteristic(&self, k: RationalCycle) -> Result<CharacteristicRep> {
        let products = self.dual_products(&k)?;
        for (v, p) in products.iter().enumerate() {
            if (self.form[v][v] + p).rem_euclid(2) != 0 {
                return Err(Error::Invalid(format!(
                    "{k} is not characteristic: (E_v, E_v + k) odd at vertex {:?}",
                    self.vertices[v].id
                )));
            }
        }
        Ok(CharacteristicRep { k, products })
    }

    /// `-Z_K`, the characteristic element of the trivial class.
    pub fn minus_canonical(&self) -> CharacteristicRep {
        self.characteristic(self.canonical_cycle().scale(-1))
            .expect("-Z_K is characteristic")
    }

    pub fn class_of(&self, l: &RationalCycle) -> Result<DiscriminantClass> {
        if l.len() != self.len() {
            return Err(Error::Invalid("cycle length does not match vertex count".into()));
        }
        if !self.is_in_dual_lattice(l) {
            return Err(Error::Invalid(format!("cycle {l} is not in the dual lattice")));
        }
        Ok(DiscriminantClass { r: l.sub(&l.floor().to_rational()) })
    }

    pub fn zero_class(&self) -> DiscriminantClass {
        DiscriminantClass { r: RationalCycle::zero(self.len()) }
    }

    /// All classes of `H`, sorted by their `r_h` vectors.
    pub fn classes(&self) -> Vec<DiscriminantClass> {
        let duals = self.dual_basis();
        let mut seen: BTreeSet<DiscriminantClass> = BTreeSet::new();
        let start = self.zero_class();
        seen.insert(start.clone());
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for d in &duals {
                let next = self.class_of(&c.r.add(d)).expect("sum of dual elements");
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Generalized Laufer step: the unique minimal element of `l' + L_{≥0}`
    /// lying in the Lipman cone. The smallest violating vertex index is
    /// always chosen.
    pub fn s_of(&self, l: &RationalCycle) -> LauferRun<RationalCycle> {
        let n = self.len();
        let mut x = l.clone();
        let mut prods = self.products(&x);
        let mut iterations = 0;
        while let Some(v) = (0..n).find(|&v| prods[v].is_positive()) {
            x.0[v] += Rational::one();
            for (w, p) in prods.iter_mut().enumerate() {
                *p += rat(self.form[w][v]);
            }
            iterations += 1;
        }
        LauferRun { cycle: x, iterations }
    }

    /// Laufer's fundamental cycle `Z_min`.
    pub fn min_cycle(&self) -> LauferRun<IntegerCycle> {
        let n = self.len();
        let mut x = vec![1i64; n];
        let mut prods = self.products_int(&x);
        let mut iterations = 0;
        while let Some(v) = (0..n).find(|&v| prods[v] > 0) {
            x[v] += 1;
            for (w, p) in prods.iter_mut().enumerate() {
                *p += self.form[w][v];
            }
            iterations += 1;
        }
        LauferRun { cycle: IntegerCycle(x), iterations }
    }

    pub fn spin_rep(&self, class: &DiscriminantClass) -> Result<SpinRep> {
        self.require_qhs3()?;
        let zk = self.canonical_cycle();
        let r_h = class.r.clone();
        let s_h = self.s_of(&r_h).cycle;
        let delta = s_h
            .sub(&r_h)
            .to_integer()
            .expect("s_h - r_h is integral");
        let k_r = self.characteristic(s_h.scale(2).sub(&zk))?;
        let k_r_variant = self.characteristic(r_h.scale(2).sub(&zk))?;
        Ok(SpinRep { class: class.clone(), r_h, s_h, delta, k_r, k_r_variant })
    }
}

impl CharacteristicRep {
    /// `chi_k(l) = -(l, l + k)/2`.
    pub fn chi(&self, graph: &PlumbingGraph, l: &[i64]) -> i64 {
        let ll = graph.pair_int(l, l);
        let lk: i64 = l.iter().zip(&self.products).map(|(a, b)| a * b).sum();
        let twice = -(ll + lk);
        debug_assert!(twice % 2 == 0, "chi_k not integral: k not characteristic");
        twice / 2
    }

    /// `(k, k)`.
    pub fn square(&self) -> Rational {
        self.k.0.iter().zip(&self.products).map(|(a, &p)| a * rat(p)).sum()
    }
}
