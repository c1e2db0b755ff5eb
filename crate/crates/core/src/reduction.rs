//! Rationality, bad vertex sets and the two reduction theorems.
//!
//! The topological reduction replaces the first quadrant of `Z^s` by that of
//! `Z^{|V̄|}` with weights `chi_{k_r}(x(l̄))`, where `x(l̄)` is the minimal
//! cycle with prescribed `V̄` coefficients that is "Lipman on `V*`" after
//! the shift by `s_h`. The analytic reduction does the same for tabulated
//! data by freezing the `V*` coordinates at `c*`.

use std::collections::HashMap;

use serde::Serialize;

use crate::complex::{module_from_cloud, EngineConfig, LatticeModule, Mode, PointCloud, QuadraticBound};
use crate::error::{Error, Result};
use crate::grid::{Rect, Table};
use crate::plumbing::{CharacteristicRep, DiscriminantClass, IntegerCycle, PlumbingGraph};
use crate::weights::HilbertData;

/// Laufer's test: the graph is rational iff `chi(Z_min) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rationality {
    pub rational: bool,
    pub z_min: Vec<i64>,
    pub chi_z_min: i64,
}

pub fn is_rational(graph: &PlumbingGraph) -> Result<Rationality> {
    graph.require_qhs3()?;
    let z = graph.min_cycle().cycle;
    let chi = graph.minus_canonical().chi(graph, &z.0);
    Ok(Rationality { rational: chi == 1, z_min: z.0, chi_z_min: chi })
}

/// Outcome of decrementing the Euler numbers on a candidate bad set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BadSetVerdict {
    /// Decreasing each `e_v`, `v` in the set, by `decrement` gives a rational graph.
    Certified {
        decrement: i64,
        /// After the decrement, `-e_v >= valency` holds everywhere; a
        /// sufficient condition for rationality reported for information.
        valency_criterion: bool,
    },
    /// No decrement up to the cap worked. This is not a proof of failure.
    Undecided { cap: i64 },
}

impl BadSetVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, BadSetVerdict::Certified { .. })
    }
}

/// Tries decrements `0..=cap`. Rationality is preserved under further
/// decrease, so the first success certifies.
pub fn test_bad_set(graph: &PlumbingGraph, vbar: &[usize], cap: i64) -> Result<BadSetVerdict> {
    graph.require_qhs3()?;
    if let Some(&v) = vbar.iter().find(|&&v| v >= graph.len()) {
        return Err(Error::Invalid(format!("vertex index {v} out of range")));
    }
    for k in 0..=cap {
        let changes: Vec<(usize, i64)> = vbar.iter().map(|&v| (v, graph.vertices()[v].euler - k)).collect();
        let g = graph.with_euler_numbers(&changes)?;
        if is_rational(&g)?.rational {
            let valency_criterion = (0..g.len()).all(|v| -g.vertices()[v].euler >= g.degree(v) as i64);
            return Ok(BadSetVerdict::Certified { decrement: k, valency_criterion });
        }
        if vbar.is_empty() {
            break;
        }
    }
    Ok(BadSetVerdict::Undecided { cap })
}

/// Vertex indices of a list of ids, sorted.
pub fn resolve_ids(graph: &PlumbingGraph, ids: &[String]) -> Result<Vec<usize>> {
    let mut out = ids
        .iter()
        .map(|id| graph.index_of(id).ok_or_else(|| Error::Invalid(format!("unknown vertex id {id:?}"))))
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// The cycles `x(l̄)` for a fixed split `V = V̄ ⊔ V*` and class `h`,
/// memoized. Coordinates of `l̄` follow the increasing order of `V̄`.
#[derive(Debug, Clone)]
pub struct UniversalCycles {
    form: Vec<Vec<i64>>,
    vbar: Vec<usize>,
    vstar: Vec<usize>,
    /// `(s_h, E_v)`.
    shift: Vec<i64>,
    cache: HashMap<Vec<i64>, Vec<i64>>,
}

impl UniversalCycles {
    pub fn new(graph: &PlumbingGraph, vbar: &[usize], class: &DiscriminantClass) -> Result<Self> {
        let sp = graph.spin_rep(class)?;
        let mut vbar = vbar.to_vec();
        vbar.sort_unstable();
        vbar.dedup();
        if let Some(&v) = vbar.iter().find(|&&v| v >= graph.len()) {
            return Err(Error::Invalid(format!("vertex index {v} out of range")));
        }
        let vstar = (0..graph.len()).filter(|v| vbar.binary_search(v).is_err()).collect();
        Ok(UniversalCycles {
            form: graph.intersection_matrix().to_vec(),
            vbar,
            vstar,
            shift: graph.dual_products(&sp.s_h)?,
            cache: HashMap::new(),
        })
    }

    pub fn vbar(&self) -> &[usize] {
        &self.vbar
    }

    /// Laufer iteration on `V*` from `start`: add `E_v` while
    /// `(x + s_h, E_v) > 0` for some `v` in `V*`. Any start below `x(l̄)`
    /// with the right `V̄` part converges to `x(l̄)`.
    fn laufer(&self, mut x: Vec<i64>) -> Vec<i64> {
        let n = x.len();
        let mut prods: Vec<i64> =
            (0..n).map(|v| (0..n).map(|u| self.form[v][u] * x[u]).sum::<i64>() + self.shift[v]).collect();
        while let Some(&v) = self.vstar.iter().find(|&&v| prods[v] > 0) {
            x[v] += 1;
            for (w, p) in prods.iter_mut().enumerate() {
                *p += self.form[w][v];
            }
        }
        x
    }

    /// `x(l̄)`; seeded from a cached `x(l̄ - E_u) + E_u` when available,
    /// which lies below `x(l̄)` by monotonicity.
    pub fn x(&mut self, lbar: &[i64]) -> IntegerCycle {
        if let Some(x) = self.cache.get(lbar) {
            return IntegerCycle(x.clone());
        }
        let n = self.form.len();
        let mut seed = None;
        for (i, &u) in self.vbar.iter().enumerate() {
            if lbar[i] == 0 {
                continue;
            }
            let mut prev = lbar.to_vec();
            prev[i] -= 1;
            if let Some(x) = self.cache.get(&prev) {
                let mut s = x.clone();
                s[u] += 1;
                seed = Some(s);
                break;
            }
        }
        let seed = seed.unwrap_or_else(|| {
            let mut s = vec![0; n];
            for (i, &v) in self.vbar.iter().enumerate() {
                s[v] = lbar[i];
            }
            s
        });
        let x = self.laufer(seed);
        self.cache.insert(lbar.to_vec(), x.clone());
        IntegerCycle(x)
    }
}

/// `x_of` without a persistent cache.
pub fn x_of(graph: &PlumbingGraph, vbar: &[usize], class: &DiscriminantClass, lbar: &[i64]) -> Result<IntegerCycle> {
    let mut u = UniversalCycles::new(graph, vbar, class)?;
    if lbar.len() != u.vbar.len() || lbar.iter().any(|&x| x < 0) {
        return Err(Error::Invalid("l̄ must be a nonnegative vector indexed by V̄".into()));
    }
    Ok(u.x(lbar))
}

/// The reduced topological weight `w̄(l̄) = chi_{k_r}(x(l̄))`.
#[derive(Debug, Clone)]
pub struct ReducedTopological {
    graph: PlumbingGraph,
    k_r: CharacteristicRep,
    cycles: UniversalCycles,
}

pub fn reduce_topological(graph: &PlumbingGraph, vbar: &[usize], class: &DiscriminantClass) -> Result<ReducedTopological> {
    let k_r = graph.spin_rep(class)?.k_r;
    Ok(ReducedTopological { graph: graph.clone(), k_r, cycles: UniversalCycles::new(graph, vbar, class)? })
}

impl ReducedTopological {
    pub fn rank(&self) -> usize {
        self.cycles.vbar.len()
    }

    pub fn vbar(&self) -> &[usize] {
        &self.cycles.vbar
    }

    pub fn weight(&mut self, lbar: &[i64]) -> i64 {
        let x = self.cycles.x(lbar);
        self.k_r.chi(&self.graph, &x.0)
    }

    pub fn tabulate(&mut self, rect: &Rect) -> Table {
        let vals = rect.points().map(|l| self.weight(&l)).collect();
        Table::new(rect.clone(), vals).expect("one value per point")
    }

    /// Exact sublevel set `{l̄ : w̄(l̄) <= bound}`. Since `x(l̄)` has `V̄`
    /// part `l̄`, `w̄(l̄)` is at least the minimum of `chi_{k_r}` over real
    /// cycles with that `V̄` part, which drives the enumeration.
    pub fn cloud(&mut self, bound: i64, cfg: EngineConfig) -> Result<PointCloud> {
        let q: Vec<Vec<i64>> =
            self.graph.intersection_matrix().iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        let order: Vec<usize> = self.cycles.vbar.iter().chain(&self.cycles.vstar).copied().collect();
        let cands = QuadraticBound::new(&q, &self.k_r.products, &order).enumerate(self.rank(), bound, cfg.cell_cap)?;
        let mut pts = Vec::new();
        for l in cands {
            let w = self.weight(&l);
            if w <= bound {
                pts.push((l, w));
            }
        }
        PointCloud::from_points(self.rank(), pts, cfg)
    }

    /// Module through level `n_max`, comparable with the full topological
    /// module computed on `Domain::Sublevel { n_max }`.
    pub fn module(&mut self, n_max: i64, mode: Mode, cfg: EngineConfig) -> Result<LatticeModule> {
        let cloud = self.cloud(n_max + 1, cfg)?;
        module_from_cloud(&cloud, Some(n_max), mode)
    }
}

/// Result of the tabulated `B_an` test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BanCheck {
    pub passed: bool,
    /// A cycle `Z = E_V̄ + l*` with `h^1(Z) > 0`.
    pub witness: Option<Vec<i64>>,
}

/// Checks `h^1(Z) = 0` for every `Z = E_V̄ + l*` inside the rectangle
/// (`l* >= 0` supported on `V*`), using the tabulated `h^1`.
pub fn check_ban(data: &HilbertData, vbar: &[usize]) -> Result<BanCheck> {
    let rect = data.rect();
    let s = rect.rank();
    if let Some(&v) = vbar.iter().find(|&&v| v >= s) {
        return Err(Error::Invalid(format!("vertex index {v} out of range")));
    }
    if let Some(&v) = vbar.iter().find(|&&v| rect.corner()[v] < 1) {
        return Err(Error::Invalid(format!(
            "E_V̄ lies outside the rectangle (c = 0 at vertex {v}); the condition is unverifiable"
        )));
    }
    let mut star_corner = rect.corner().to_vec();
    for &v in vbar {
        star_corner[v] = 0;
    }
    for mut z in Rect::new(star_corner)?.points() {
        for &v in vbar {
            z[v] = 1;
        }
        if data.h1().at(&z) > 0 {
            return Ok(BanCheck { passed: false, witness: Some(z) });
        }
    }
    Ok(BanCheck { passed: true, witness: None })
}

/// Reduced analytic weights on `R(0, c̄)`: `w̄(l̄) = h(l̄, 0) - h^1(l̄ + c*)`.
#[derive(Debug, Clone)]
pub struct ReducedAnalytic {
    pub vbar: Vec<usize>,
    pub weights: Table,
}

pub fn reduce_analytic(data: &HilbertData, vbar: &[usize]) -> Result<ReducedAnalytic> {
    let mut vbar = vbar.to_vec();
    vbar.sort_unstable();
    vbar.dedup();
    let ban = check_ban(data, &vbar)?;
    if let Some(z) = ban.witness {
        return Err(Error::data(&z, "not a B_an set: h1 does not vanish here"));
    }
    let c = data.rect().corner();
    let small = Rect::new(vbar.iter().map(|&v| c[v]).collect())?;
    let weights = Table::from_fn(small, |lbar| {
        let mut low = vec![0; c.len()];
        let mut high = c.to_vec();
        for (i, &v) in vbar.iter().enumerate() {
            low[v] = lbar[i];
            high[v] = lbar[i];
        }
        data.h().at(&low) - data.h1().at(&high)
    });
    Ok(ReducedAnalytic { vbar, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::plumbing::tests::chain;

    fn star(center: i64, legs: &[i64]) -> PlumbingGraph {
        let mut v = vec![format!(r#"{{"id":"c","e":{center}}}"#)];
        let mut e = vec![];
        for (i, x) in legs.iter().enumerate() {
            v.push(format!(r#"{{"id":"l{i}","e":{x}}}"#));
            e.push(format!(r#"["c","l{i}"]"#));
        }
        PlumbingGraph::from_json(&format!(r#"{{"vertices":[{}],"edges":[{}]}}"#, v.join(","), e.join(","))).unwrap()
    }

    #[test]
    fn rationality_examples() {
        let a3 = chain(&[-2, -2, -2]);
        let r = is_rational(&a3).unwrap();
        assert!(r.rational);
        assert_eq!(r.z_min, vec![1, 1, 1]);
        let s237 = star(-1, &[-2, -3, -7]);
        let r = is_rational(&s237).unwrap();
        assert!(!r.rational);
        assert!(r.chi_z_min <= 0);
    }

    #[test]
    fn bad_set_examples() {
        let a3 = chain(&[-2, -2, -2]);
        assert_eq!(
            test_bad_set(&a3, &[], 4).unwrap(),
            BadSetVerdict::Certified { decrement: 0, valency_criterion: true }
        );
        let s237 = star(-1, &[-2, -3, -7]);
        let c = s237.index_of("c").unwrap();
        assert!(test_bad_set(&s237, &[c], 16).unwrap().is_certified());
        let leg = s237.index_of("l2").unwrap();
        assert_eq!(test_bad_set(&s237, &[leg], 3).unwrap(), BadSetVerdict::Undecided { cap: 3 });
    }

    #[test]
    fn x_of_examples() {
        let a2 = chain(&[-2, -2]);
        let h0 = a2.zero_class();
        assert_eq!(x_of(&a2, &[0], &h0, &[0]).unwrap(), IntegerCycle(vec![0, 0]));
        assert_eq!(x_of(&a2, &[0], &h0, &[1]).unwrap(), IntegerCycle(vec![1, 1]));
    }

    /// `x(l̄)` is the minimal admissible cycle: nothing smaller in a box works.
    #[test]
    fn x_of_is_minimal_and_monotone() {
        let g = star(-2, &[-2, -3, -3]);
        let cls = g.classes();
        let c = g.index_of("c").unwrap();
        for h in &cls {
            let shift = g.dual_products(&g.spin_rep(h).unwrap().s_h).unwrap();
            let mut u = UniversalCycles::new(&g, &[c], h).unwrap();
            let mut prev: Option<IntegerCycle> = None;
            for t in 0..5 {
                let x = u.x(&[t]);
                let admissible = |y: &[i64]| {
                    (0..g.len()).filter(|&v| v != c).all(|v| g.products_int(y)[v] + shift[v] <= 0)
                };
                assert!(admissible(&x.0));
                let rect = Rect::new(x.0.clone()).unwrap();
                for y in rect.points().filter(|y| y[c] == t && *y != x.0) {
                    assert!(!admissible(&y), "smaller admissible cycle {y:?} below {:?}", x.0);
                }
                if let Some(p) = prev {
                    assert!(p.le(&x));
                }
                prev = Some(x);
            }
        }
    }

    #[test]
    fn reduced_weight_at_origin_vanishes_for_trivial_class() {
        let g = star(-1, &[-2, -3, -7]);
        let c = g.index_of("c").unwrap();
        let mut r = reduce_topological(&g, &[c], &g.zero_class()).unwrap();
        assert_eq!(r.weight(&[0]), 0);
    }

    fn t2(c: [i64; 2], f: impl Fn(i64, i64) -> i64) -> Table {
        Table::from_fn(Rect::new(c.to_vec()).unwrap(), |l| f(l[0], l[1]))
    }

    #[test]
    fn ban_examples() {
        let zero = HilbertData::new(vec![rat(0), rat(0)], 0, t2([2, 2], |a, b| a + b), t2([2, 2], |_, _| 0)).unwrap();
        assert!(check_ban(&zero, &[0]).unwrap().passed);
        assert!(check_ban(&zero, &[0, 1]).unwrap().passed);
        // the form with pole (1, 0) violates the condition for V̄ = {0}
        let h1 = t2([2, 2], |a, _| i64::from(a >= 1));
        let bad = HilbertData::new(vec![rat(0), rat(0)], 1, t2([2, 2], |a, b| a.min(1) + b), h1).unwrap();
        let c = check_ban(&bad, &[0]).unwrap();
        assert_eq!(c.witness, Some(vec![1, 0]));
        assert!(reduce_analytic(&bad, &[0]).is_err());
    }

    #[test]
    fn reduce_analytic_identity_and_vanishing_h1() {
        let d = HilbertData::new(vec![rat(0), rat(0)], 0, t2([2, 1], |a, b| a + b), t2([2, 1], |_, _| 0)).unwrap();
        let full = reduce_analytic(&d, &[0, 1]).unwrap();
        assert_eq!(full.weights, t2([2, 1], |a, b| a + b));
        let one = reduce_analytic(&d, &[0]).unwrap();
        assert_eq!(one.weights.values(), &[0, 1, 2]);
    }
}
