//! Analytic against topological weights on a shared rectangle, blow-up
//! moves with their pullbacks, and the invariance harnesses built on them.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arith::{format_rational, rat, Rational};
use crate::complex::{
    auto_n_max, graded_root, lattice_cohomology, Domain, EngineConfig, GradedRoot, LatticeModule, Mode,
};
use crate::error::{Error, Result};
use crate::grid::{Rect, Table};
use crate::plumbing::{CharacteristicRep, DiscriminantClass, PlumbingGraph, RationalCycle, Vertex};
use crate::weights::{AnalyticWeight, HilbertData, TopologicalWeight, WeightModel};

/// Components of one level and where the topological ones land.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelMap {
    pub n: i64,
    /// Smallest point of each component of `S_top,n`.
    pub top: Vec<Vec<i64>>,
    /// Smallest point of each component of `S_an,n`.
    pub an: Vec<Vec<i64>>,
    /// `map[i]`: the analytic component containing topological component `i`.
    pub map: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub rect: Rect,
    /// `w_top - w_an` pointwise.
    pub defect: Table,
    /// First point with negative defect, if any.
    pub negative_defect_at: Option<Vec<i64>>,
    /// Every component of `S_top,n` lies inside one component of `S_an,n`
    /// and the maps commute with the inclusions `S_n ⊆ S_{n+1}`.
    pub morphism_ok: bool,
    pub levels: Vec<LevelMap>,
    /// Zero defect everywhere.
    pub isomorphic: bool,
    pub modules_equal: bool,
    pub top: LatticeModule,
    pub an: LatticeModule,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.negative_defect_at.is_none() && self.morphism_ok && (!self.isomorphic || self.modules_equal)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let defect: serde_json::Map<String, serde_json::Value> = self
            .rect
            .points()
            .map(|l| (crate::weights::point_key(&l), json!(self.defect.at(&l))))
            .collect();
        json!({
            "rect": self.rect.corner(),
            "defect": defect,
            "defect_nonnegative": self.negative_defect_at.is_none(),
            "negative_defect_at": self.negative_defect_at,
            "morphism_ok": self.morphism_ok,
            "isomorphic": self.isomorphic,
            "modules_equal": self.modules_equal,
            "levels": self.levels,
            "topological": self.top.to_json_value(),
            "analytic": self.an.to_json_value(),
        })
    }
}

/// Compares `w_an,h` with `w_top,h = chi_{-Z_K + 2 r_h}` on the data rectangle.
pub fn compare(graph: &PlumbingGraph, class: &DiscriminantClass, data: &HilbertData, cfg: EngineConfig) -> Result<ComparisonReport> {
    graph.require_qhs3()?;
    let rect = data.rect().clone();
    if rect.rank() != graph.len() {
        return Err(Error::Invalid(format!(
            "rectangle has rank {} but the graph has {} vertices",
            rect.rank(),
            graph.len()
        )));
    }
    if data.class() != class.representative().0.as_slice() {
        return Err(Error::Invalid("Hilbert data belong to a different class".into()));
    }
    let k = graph.spin_rep(class)?.k_r_variant;
    let top_model = WeightModel::topological(graph, k);
    let an_model = WeightModel::Analytic(AnalyticWeight::new(data.clone()));
    let w_top = top_model.tabulate(&rect);
    let w_an = an_model.tabulate(&rect);
    let defect = Table::from_fn(rect.clone(), |l| w_top.at(l) - w_an.at(l));
    let negative_defect_at = rect.points().find(|l| defect.at(l) < 0);
    let isomorphic = defect.values().iter().all(|&d| d == 0);

    let lo = w_an.min().min(w_top.min());
    let hi = w_an.max().max(w_top.max());
    let mut levels: Vec<LevelMap> = Vec::new();
    let mut morphism_ok = true;
    let mut prev: Option<(Labels, Labels)> = None;
    for n in lo..=hi {
        let t = Labels::new(&w_top, n);
        let a = Labels::new(&w_an, n);
        let mut map = vec![usize::MAX; t.reps.len()];
        for (i, lab) in t.label.iter().enumerate() {
            let Some(ct) = lab else { continue };
            match a.label[i] {
                Some(ca) if map[*ct] == usize::MAX || map[*ct] == ca => map[*ct] = ca,
                _ => morphism_ok = false,
            }
        }
        if let Some((pt, pa)) = &prev {
            // going up a level and then mapping agrees with mapping first
            let prev_map = &levels.last().expect("previous level").map;
            for (c, &rep) in pt.reps.iter().enumerate() {
                let up_then_map = t.label[rep].map(|x| map[x]);
                let map_then_up = prev_map.get(c).and_then(|&m| pa.reps.get(m)).and_then(|&r| a.label[r]);
                if up_then_map != map_then_up {
                    morphism_ok = false;
                }
            }
        }
        levels.push(LevelMap {
            n,
            top: t.reps.iter().map(|&i| rect.point(i)).collect(),
            an: a.reps.iter().map(|&i| rect.point(i)).collect(),
            map,
        });
        prev = Some((t, a));
    }

    let domain = Domain::Rect(rect.clone());
    let top = lattice_cohomology(&top_model, &domain, Mode::Full, cfg)?;
    let an = lattice_cohomology(&an_model, &domain, Mode::Full, cfg)?;
    let modules_equal = top == an;
    Ok(ComparisonReport { rect, defect, negative_defect_at, morphism_ok, levels, isomorphic, modules_equal, top, an })
}

/// Connected components of `{l : w(l) <= n}` in the rectangle (edges
/// `l, l + E_v` with both ends present), labelled in order of their
/// smallest point.
struct Labels {
    label: Vec<Option<usize>>,
    reps: Vec<usize>,
}

impl Labels {
    fn new(w: &Table, n: i64) -> Self {
        let rect = w.rect();
        let mut label = vec![None; rect.volume()];
        let mut reps = Vec::new();
        for start in 0..rect.volume() {
            if label[start].is_some() || w.at_index(start) > n {
                continue;
            }
            let c = reps.len();
            reps.push(start);
            label[start] = Some(c);
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let l = rect.point(i);
                for v in 0..rect.rank() {
                    for d in [-1, 1] {
                        let mut m = l.clone();
                        m[v] += d;
                        if let Some(j) = rect.index(&m) {
                            if label[j].is_none() && w.at_index(j) <= n {
                                label[j] = Some(c);
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        Labels { label, reps }
    }
}

/// A blow-up of a point of `E_{v0}` (generic, or the intersection point
/// with `E_{v1}`). Vertices are named by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlowupMove {
    Point { vertex: String },
    Edge { from: String, to: String },
}

impl BlowupMove {
    /// One move of each kind: the first vertex and the first edge.
    pub fn defaults(graph: &PlumbingGraph) -> Vec<BlowupMove> {
        let mut out = vec![BlowupMove::Point { vertex: graph.vertices()[0].id.clone() }];
        if let Some((a, b)) = graph.edge_ids().into_iter().next() {
            out.push(BlowupMove::Edge { from: a, to: b });
        }
        out
    }
}

/// The blown-up graph together with the index bookkeeping needed for `π*`.
#[derive(Debug, Clone)]
pub struct Blowup {
    pub graph: PlumbingGraph,
    pub new_vertex: usize,
    /// New index of each old vertex.
    pub old_to_new: Vec<usize>,
    /// Old indices of the blown-up curve(s).
    pub ends: Vec<usize>,
}

pub fn blowup(graph: &PlumbingGraph, mv: &BlowupMove) -> Result<Blowup> {
    let find = |id: &str| {
        graph
            .index_of(id)
            .ok_or_else(|| Error::Invalid(format!("unknown vertex {id:?} in blow-up move")))
    };
    let ends = match mv {
        BlowupMove::Point { vertex } => vec![find(vertex)?],
        BlowupMove::Edge { from, to } => vec![find(from)?, find(to)?],
    };
    let new_id = (0..)
        .map(|i| format!("bu{i}"))
        .find(|id| graph.index_of(id).is_none())
        .expect("some id is free");
    let mut vertices: Vec<Vertex> = graph.vertices().to_vec();
    for &v in &ends {
        vertices[v].euler -= 1;
    }
    vertices.push(Vertex { id: new_id.clone(), euler: -1, genus: 0 });
    let mut edges = graph.edge_ids();
    let ids: Vec<String> = ends.iter().map(|&v| graph.vertices()[v].id.clone()).collect();
    if let [a, b] = ids.as_slice() {
        let pos = edges
            .iter()
            .position(|(x, y)| (x == a && y == b) || (x == b && y == a))
            .ok_or_else(|| Error::Invalid(format!("no edge between {a:?} and {b:?}")))?;
        edges.remove(pos);
    }
    for id in &ids {
        edges.push((id.clone(), new_id.clone()));
    }
    let new = PlumbingGraph::new(vertices, edges)?;
    let old_to_new = graph
        .vertices()
        .iter()
        .map(|v| new.index_of(&v.id).expect("old vertex kept"))
        .collect();
    let new_vertex = new.index_of(&new_id).expect("new vertex present");
    Ok(Blowup { graph: new, new_vertex, old_to_new, ends })
}

impl Blowup {
    /// `π*x = x + x_{v0} E_new` or `x + (x_{v0} + x_{v1}) E_new`.
    pub fn pullback(&self, x: &RationalCycle) -> RationalCycle {
        let mut out = vec![Rational::zero(); self.graph.len()];
        for (v, &w) in self.old_to_new.iter().enumerate() {
            out[w] = x.0[v].clone();
        }
        out[self.new_vertex] = self.ends.iter().map(|&v| x.0[v].clone()).sum();
        RationalCycle(out)
    }

    pub fn new_vertex_cycle(&self) -> RationalCycle {
        let mut e = RationalCycle::zero(self.graph.len());
        e.0[self.new_vertex] = Rational::one();
        e
    }

    /// `(π*x, π*y)' = (x, y)` and `(π*x, E_new)' = 0`.
    pub fn check_projection(&self, old: &PlumbingGraph, x: &RationalCycle, y: &RationalCycle) -> bool {
        let (px, py) = (self.pullback(x), self.pullback(y));
        self.graph.pair(&px, &py) == old.pair(x, y) && self.graph.pair(&px, &self.new_vertex_cycle()).is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhBranch {
    /// `r_h' = π* r_h`.
    Equal,
    /// `r_h' = π* r_h - E_new`.
    MinusNew,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhPullback {
    pub branch: RhBranch,
    #[serde(serialize_with = "ser_cycle")]
    pub pulled: RationalCycle,
    #[serde(serialize_with = "ser_cycle")]
    pub r_new: RationalCycle,
    /// `a_{v0} + a_{v1}` for edge moves.
    #[serde(serialize_with = "ser_opt_rational")]
    pub edge_sum: Option<Rational>,
    /// The branch is the one predicted: always equality for point moves,
    /// equality iff `a_{v0} + a_{v1} < 1` for edge moves.
    pub consistent: bool,
}

fn ser_cycle<S: serde::Serializer>(c: &RationalCycle, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(c.to_strings())
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&format_rational(r)),
        None => s.serialize_none(),
    }
}

/// `r_h'` of the class of `π* r_h` on the blown-up graph, against `π* r_h`.
pub fn check_rh_pullback(blow: &Blowup, class: &DiscriminantClass) -> Result<RhPullback> {
    let r = class.representative();
    let pulled = blow.pullback(r);
    let r_new = blow.graph.class_of(&pulled)?.representative().clone();
    let branch = if r_new == pulled {
        RhBranch::Equal
    } else if r_new == pulled.sub(&blow.new_vertex_cycle()) {
        RhBranch::MinusNew
    } else {
        return Err(Error::Invalid(format!("r_h' = {r_new} is neither π*r_h nor π*r_h - E_new")));
    };
    let edge_sum = (blow.ends.len() == 2).then(|| r.0[blow.ends[0]].clone() + r.0[blow.ends[1]].clone());
    let consistent = match &edge_sum {
        None => branch == RhBranch::Equal,
        Some(a) => (branch == RhBranch::Equal) == (*a < rat(1)),
    };
    Ok(RhPullback { branch, pulled, r_new, edge_sum, consistent })
}

/// `sw = eu + (k_r^2 + |V|)/8` together with its ingredients.
#[derive(Debug, Clone)]
pub struct SwValue {
    pub sw: Rational,
    pub eu: i64,
    pub k_square: Rational,
    pub vertices: usize,
    pub n_max: i64,
    /// Levels above `n_max` are assumed trivial.
    pub heuristic: bool,
}

impl SwValue {
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "sw": format_rational(&self.sw),
            "eu": self.eu,
            "k_square": format_rational(&self.k_square),
            "vertices": self.vertices,
            "n_max": self.n_max,
            "heuristic": self.heuristic,
        })
    }
}

pub fn sw_invariant(graph: &PlumbingGraph, class: &DiscriminantClass, n_max: Option<i64>, cfg: EngineConfig) -> Result<SwValue> {
    let (module, n_max) = canonical_module(graph, class, n_max, cfg)?;
    let k = graph.spin_rep(class)?.k_r;
    Ok(sw_from(graph, &k, &module, n_max))
}

fn sw_from(graph: &PlumbingGraph, k: &CharacteristicRep, module: &LatticeModule, n_max: i64) -> SwValue {
    let eu = module.eu().expect("full mode");
    let k_square = k.square();
    let sw = rat(eu) + (k_square.clone() + rat(graph.len() as i64)) / rat(8);
    SwValue { sw, eu, k_square, vertices: graph.len(), n_max, heuristic: true }
}

fn canonical_module(
    graph: &PlumbingGraph,
    class: &DiscriminantClass,
    n_max: Option<i64>,
    cfg: EngineConfig,
) -> Result<(LatticeModule, i64)> {
    let n_max = resolve_n_max(graph, class, n_max, cfg)?;
    let model = WeightModel::topological(graph, graph.spin_rep(class)?.k_r);
    Ok((lattice_cohomology(&model, &Domain::Sublevel { n_max }, Mode::Full, cfg)?, n_max))
}

fn resolve_n_max(graph: &PlumbingGraph, class: &DiscriminantClass, n_max: Option<i64>, cfg: EngineConfig) -> Result<i64> {
    match n_max {
        Some(n) => Ok(n),
        None => auto_n_max(&TopologicalWeight::new(graph, graph.spin_rep(class)?.k_r), cfg),
    }
}

/// Everything computed for one side of a blow-up.
#[derive(Debug, Clone)]
struct Side {
    module: LatticeModule,
    root: GradedRoot,
    sw: SwValue,
}

fn side(graph: &PlumbingGraph, class: &DiscriminantClass, n_max: i64, cfg: EngineConfig) -> Result<Side> {
    let k = graph.spin_rep(class)?.k_r;
    let model = WeightModel::topological(graph, k.clone());
    let domain = Domain::Sublevel { n_max };
    let module = lattice_cohomology(&model, &domain, Mode::Full, cfg)?;
    let root = graded_root(&model, &domain, cfg)?;
    let sw = sw_from(graph, &k, &module, n_max);
    Ok(Side { module, root, sw })
}

#[derive(Debug, Clone)]
pub struct InvarianceCase {
    pub mv: BlowupMove,
    pub rh: RhPullback,
    pub module_equal: bool,
    pub root_equal: bool,
    pub sw_before: Rational,
    pub sw_after: Rational,
    /// Levels whose data differ, including levels present on one side only.
    pub failing_levels: Vec<i64>,
}

impl InvarianceCase {
    pub fn passed(&self) -> bool {
        self.rh.consistent && self.module_equal && self.root_equal && self.sw_before == self.sw_after
    }
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub class: RationalCycle,
    pub n_max: i64,
    pub heuristic: bool,
    pub cases: Vec<InvarianceCase>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(InvarianceCase::passed)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "class": self.class.to_strings(),
            "n_max": self.n_max,
            "heuristic": self.heuristic,
            "passed": self.passed(),
            "cases": self.cases.iter().map(|c| json!({
                "move": c.mv,
                "rh_pullback": c.rh,
                "module_equal": c.module_equal,
                "root_equal": c.root_equal,
                "sw_before": format_rational(&c.sw_before),
                "sw_after": format_rational(&c.sw_after),
                "failing_levels": c.failing_levels,
                "passed": c.passed(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Module, graded root and `sw` before and after each move, both sides with
/// `k_r = -Z_K + 2 s_h` and the class on the blown-up graph given by the
/// pullback of `r_h`. Both sides use the same `n_max`.
pub fn blowup_invariance(
    graph: &PlumbingGraph,
    class: &DiscriminantClass,
    moves: &[BlowupMove],
    n_max: Option<i64>,
    cfg: EngineConfig,
) -> Result<InvarianceReport> {
    graph.require_qhs3()?;
    let n_max = resolve_n_max(graph, class, n_max, cfg)?;
    let before = side(graph, class, n_max, cfg)?;
    let mut cases = Vec::new();
    for mv in moves {
        let blow = blowup(graph, mv)?;
        let rh = check_rh_pullback(&blow, class)?;
        let new_class = blow.graph.class_of(&rh.r_new)?;
        let after = side(&blow.graph, &new_class, n_max, cfg)?;
        cases.push(InvarianceCase {
            mv: mv.clone(),
            module_equal: before.module == after.module,
            root_equal: before.root.is_isomorphic(&after.root),
            sw_before: before.sw.sw.clone(),
            sw_after: after.sw.sw.clone(),
            failing_levels: failing_levels(&before.module, &after.module),
            rh,
        });
    }
    Ok(InvarianceReport { class: class.representative().clone(), n_max, heuristic: true, cases })
}

fn failing_levels(a: &LatticeModule, b: &LatticeModule) -> Vec<i64> {
    let lo = a.min_weight.min(b.min_weight);
    let hi = a.levels.last().map_or(lo, |l| l.n).max(b.levels.last().map_or(lo, |l| l.n));
    (lo..=hi).filter(|&n| a.level(n) != b.level(n)).collect()
}

/// Graded roots of `-Z_K + 2 r_h` and `-Z_K + 2 s_h` on the first quadrant;
/// the second, shifted by `chi_{-Z_K + 2 r_h}(Δ_h)`, should equal the first.
#[derive(Debug, Clone)]
pub struct NormalizationCheck {
    pub shift: i64,
    pub root_r: GradedRoot,
    pub root_s: GradedRoot,
    pub agree: bool,
}

pub fn normalization_check(graph: &PlumbingGraph, class: &DiscriminantClass, n_max: Option<i64>, cfg: EngineConfig) -> Result<NormalizationCheck> {
    let spin = graph.spin_rep(class)?;
    let shift = spin.k_r_variant.chi(graph, &spin.delta.0);
    let n_max = resolve_n_max(graph, class, n_max, cfg)?;
    let root_s = graded_root(&WeightModel::topological(graph, spin.k_r.clone()), &Domain::Sublevel { n_max }, cfg)?;
    let root_r = graded_root(
        &WeightModel::topological(graph, spin.k_r_variant.clone()),
        &Domain::Sublevel { n_max: n_max + shift },
        cfg,
    )?;
    let agree = root_s.shifted(shift).is_isomorphic(&root_r);
    Ok(NormalizationCheck { shift, root_r, root_s, agree })
}
