//! Weight functions on lattice points and their validators.
//!
//! Three flavours are supported: the topological weight `chi_k`, the
//! combinatorial weight built from a pair `(h, h°)`, and the analytic weight
//! `h - h^1` built from tabulated Hilbert data. Cube weights are always the
//! maximum of the vertex weights; that part lives in [`crate::complex`].

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, parse_rational, Rational};
use crate::error::{format_point, Error, Result};
use crate::grid::{Rect, Table};
use crate::plumbing::{CharacteristicRep, IntegerCycle, PlumbingGraph};

/// Evaluates `w_0` on lattice points.
pub trait WeightFn: Sync {
    fn rank(&self) -> usize;
    fn weight(&self, l: &[i64]) -> i64;
}

/// Where a weight function lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rectangle {
    Concrete(Rect),
    /// First quadrant, to be truncated by the engine.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Topological,
    Combinatorial,
    Analytic,
    Reduced,
    Tabulated,
}

/// `w_0(l) = chi_k(l) = -(l, l + k)/2`.
#[derive(Debug, Clone)]
pub struct TopologicalWeight {
    form: Vec<Vec<i64>>,
    k: CharacteristicRep,
}

impl TopologicalWeight {
    pub fn new(graph: &PlumbingGraph, k: CharacteristicRep) -> Self {
        TopologicalWeight { form: graph.intersection_matrix().to_vec(), k }
    }

    pub fn characteristic(&self) -> &CharacteristicRep {
        &self.k
    }

    pub fn form(&self) -> &[Vec<i64>] {
        &self.form
    }
}

impl WeightFn for TopologicalWeight {
    fn rank(&self) -> usize {
        self.form.len()
    }

    fn weight(&self, l: &[i64]) -> i64 {
        let n = self.form.len();
        let mut ll = 0i64;
        for i in 0..n {
            if l[i] == 0 {
                continue;
            }
            let row: i64 = (0..n).map(|j| self.form[i][j] * l[j]).sum();
            ll += l[i] * row;
        }
        let lk: i64 = l.iter().zip(&self.k.products).map(|(a, b)| a * b).sum();
        -(ll + lk) / 2
    }
}

/// `w_0(l) = h(l) + h°(l) - h°(0)` on a rectangle.
#[derive(Debug, Clone)]
pub struct CombinatorialWeight {
    h: Table,
    h_dual: Table,
}

impl CombinatorialWeight {
    /// Requires `h(0) = 0`, `h` nondecreasing and `h°` nonincreasing.
    pub fn new(h: Table, h_dual: Table) -> Result<Self> {
        if h.rect() != h_dual.rect() {
            return Err(Error::Invalid("h and h° live on different rectangles".into()));
        }
        let zero = vec![0; h.rect().rank()];
        if h.at(&zero) != 0 {
            return Err(Error::data(&zero, "h(0) must be 0"));
        }
        if let Some((l, _)) = monotonicity_violation(&h, true) {
            return Err(Error::data(&l, "h is not nondecreasing"));
        }
        if let Some((l, _)) = monotonicity_violation(&h_dual, false) {
            return Err(Error::data(&l, "h° is not nonincreasing"));
        }
        Ok(CombinatorialWeight { h, h_dual })
    }

    /// The pair `(h, h^sym)` with `h^sym(l) = h(c - l)`.
    pub fn symmetric(h: Table) -> Result<Self> {
        let rect = h.rect().clone();
        let sym = Table::from_fn(rect.clone(), |l| h.at(&rect.reflect(l)));
        Self::new(h, sym)
    }

    pub fn h(&self) -> &Table {
        &self.h
    }

    pub fn h_dual(&self) -> &Table {
        &self.h_dual
    }

    pub fn rect(&self) -> &Rect {
        self.h.rect()
    }

    /// `h°(0) - h°(c)`, the value predicted for every Euler characteristic
    /// when stability and the duality property hold.
    pub fn expected_eu(&self) -> i64 {
        let zero = vec![0; self.rect().rank()];
        self.h_dual.at(&zero) - self.h_dual.at(self.rect().corner())
    }
}

impl WeightFn for CombinatorialWeight {
    fn rank(&self) -> usize {
        self.h.rect().rank()
    }

    fn weight(&self, l: &[i64]) -> i64 {
        let zero = vec![0; l.len()];
        self.h.at(l) + self.h_dual.at(l) - self.h_dual.at(&zero)
    }
}

/// Settings for the pair-enumerating validators.
#[derive(Debug, Clone, Copy)]
pub struct ValidatorConfig {
    /// Above this many ordered pairs, pairs are sampled.
    pub pair_threshold: u64,
    pub seed: u64,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig { pair_threshold: 1_000_000, seed: 0 }
    }
}

/// Tabulated analytic data for one class `h`: `h(l) = h~(l + r_h)` and
/// `h^1(O_l(-r_h))` on `R(0, c)`, plus `p_{g,h}`.
#[derive(Debug, Clone)]
pub struct HilbertData {
    class: Vec<Rational>,
    p_gh: i64,
    h: Table,
    h1: Table,
}

#[derive(Serialize, Deserialize)]
struct HilbertFile {
    class: Vec<String>,
    rect: Vec<i64>,
    p_gh: i64,
    h: BTreeMap<String, i64>,
    h1: BTreeMap<String, i64>,
}

pub fn point_key(l: &[i64]) -> String {
    l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_point_key(s: &str) -> Option<Vec<i64>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn table_from_map(rect: &Rect, map: &BTreeMap<String, i64>, name: &str) -> Result<Table> {
    let mut values = vec![None; rect.volume()];
    for (k, &v) in map {
        let l = parse_point_key(k)
            .ok_or_else(|| Error::Parse(format!("{name}: malformed point key {k:?}")))?;
        let idx = rect
            .index(&l)
            .ok_or_else(|| Error::data(&l, format!("{name}: point outside the rectangle")))?;
        values[idx] = Some(v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::data(&rect.point(i), format!("{name}: value missing"))))
        .collect::<Result<Vec<_>>>()?;
    Table::new(rect.clone(), values)
}

impl HilbertData {
    pub fn new(class: Vec<Rational>, p_gh: i64, h: Table, h1: Table) -> Result<Self> {
        Self::with_config(class, p_gh, h, h1, ValidatorConfig::default())
    }

    pub fn with_config(
        class: Vec<Rational>,
        p_gh: i64,
        h: Table,
        h1: Table,
        cfg: ValidatorConfig,
    ) -> Result<Self> {
        let data = HilbertData { class, p_gh, h, h1 };
        data.validate(cfg)?;
        Ok(data)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with(text, ValidatorConfig::default())
    }

    pub fn from_json_with(text: &str, cfg: ValidatorConfig) -> Result<Self> {
        let f: HilbertFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("Hilbert data, line {} column {}: {e}", e.line(), e.column()))
        })?;
        let class = f
            .class
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| Error::Parse(format!("bad fraction {s:?} in class"))))
            .collect::<Result<Vec<_>>>()?;
        let rect = Rect::new(f.rect)?;
        if class.len() != rect.rank() {
            return Err(Error::Invalid("class and rectangle have different lengths".into()));
        }
        let h = table_from_map(&rect, &f.h, "h")?;
        let h1 = table_from_map(&rect, &f.h1, "h1")?;
        Self::with_config(class, f.p_gh, h, h1, cfg)
    }

    pub fn to_json(&self) -> String {
        let rect = self.rect();
        let f = HilbertFile {
            class: self.class.iter().map(format_rational).collect(),
            rect: rect.corner().to_vec(),
            p_gh: self.p_gh,
            h: rect.points().map(|l| (point_key(&l), self.h.at(&l))).collect(),
            h1: rect.points().map(|l| (point_key(&l), self.h1.at(&l))).collect(),
        };
        serde_json::to_string_pretty(&f).expect("data serialization")
    }

    fn validate(&self, cfg: ValidatorConfig) -> Result<()> {
        let rect = self.rect();
        if self.h1.rect() != rect {
            return Err(Error::Invalid("h and h1 tables live on different rectangles".into()));
        }
        if self.class.len() != rect.rank() {
            return Err(Error::Invalid("class length does not match rectangle".into()));
        }
        if self.class.iter().any(|x| x.is_negative() || *x >= Rational::from_integer(1.into())) {
            return Err(Error::Invalid("class coordinates must lie in [0,1)".into()));
        }
        if self.p_gh < 0 {
            return Err(Error::Invalid("p_gh must be nonnegative".into()));
        }
        let zero = vec![0; rect.rank()];
        if self.h.at(&zero) != 0 {
            return Err(Error::data(&zero, "h(0) must be 0"));
        }
        if self.h1.at(&zero) != 0 {
            return Err(Error::data(&zero, "h1(0) must be 0"));
        }
        for l in rect.points() {
            if self.h.at(&l) < 0 || self.h1.at(&l) < 0 {
                return Err(Error::data(&l, "negative table value"));
            }
            if self.h1.at(&l) > self.p_gh {
                return Err(Error::data(&l, "h1 exceeds p_gh"));
            }
        }
        if let Some((l, v)) = monotonicity_violation(&self.h, true) {
            return Err(Error::data(&l, format!("h decreases in direction {v}")));
        }
        if let Some((l, v)) = monotonicity_violation(&self.h1, true) {
            return Err(Error::data(&l, format!("h1 decreases in direction {v}")));
        }
        if self.h1.max() != self.p_gh {
            return Err(Error::Invalid(format!(
                "p_gh = {} but max(h1) = {}; the rectangle may be too small",
                self.p_gh,
                self.h1.max()
            )));
        }
        if self.h1.at(rect.corner()) != self.p_gh {
            return Err(Error::data(rect.corner(), "h1(c) must equal p_gh (c below the cohomological cycle)"));
        }
        let m = check_matroid(&self.h, cfg);
        if let Some(Witness::Pair { first: a, second: b }) = m.witness {
            return Err(Error::data(&a, format!("h violates the matroid inequality with {}", format_point(&b))));
        }
        let m = check_opposite_matroid(&self.h1, cfg);
        if let Some(Witness::Pair { first: a, second: b }) = m.witness {
            return Err(Error::data(
                &a,
                format!("h1 violates the opposite matroid inequality with {}", format_point(&b)),
            ));
        }
        cohomological_cycle(self)?;
        Ok(())
    }

    pub fn class(&self) -> &[Rational] {
        &self.class
    }

    pub fn rect(&self) -> &Rect {
        self.h.rect()
    }

    pub fn p_gh(&self) -> i64 {
        self.p_gh
    }

    pub fn h(&self) -> &Table {
        &self.h
    }

    pub fn h1(&self) -> &Table {
        &self.h1
    }

    /// `h°(l) = p_gh - h^1(l)`.
    pub fn h_dual(&self) -> Table {
        Table::from_fn(self.rect().clone(), |l| self.p_gh - self.h1.at(l))
    }
}

/// `w_0(l) = h(l) - h^1(O_l(-r_h))`.
#[derive(Debug, Clone)]
pub struct AnalyticWeight {
    data: HilbertData,
}

impl AnalyticWeight {
    pub fn new(data: HilbertData) -> Self {
        AnalyticWeight { data }
    }

    pub fn data(&self) -> &HilbertData {
        &self.data
    }

    pub fn rect(&self) -> &Rect {
        self.data.rect()
    }
}

impl WeightFn for AnalyticWeight {
    fn rank(&self) -> usize {
        self.data.rect().rank()
    }

    fn weight(&self, l: &[i64]) -> i64 {
        self.data.h.at(l) - self.data.h1.at(l)
    }
}

impl WeightFn for Table {
    fn rank(&self) -> usize {
        self.rect().rank()
    }

    fn weight(&self, l: &[i64]) -> i64 {
        self.at(l)
    }
}

/// A weight function of any flavour.
#[derive(Debug, Clone)]
pub enum WeightModel {
    Topological(TopologicalWeight),
    Combinatorial(CombinatorialWeight),
    Analytic(AnalyticWeight),
    Tabulated(Table),
}

impl WeightModel {
    pub fn topological(graph: &PlumbingGraph, k: CharacteristicRep) -> Self {
        WeightModel::Topological(TopologicalWeight::new(graph, k))
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            WeightModel::Topological(_) => ModelKind::Topological,
            WeightModel::Combinatorial(_) => ModelKind::Combinatorial,
            WeightModel::Analytic(_) => ModelKind::Analytic,
            WeightModel::Tabulated(_) => ModelKind::Tabulated,
        }
    }

    /// Natural domain: the first quadrant for topological weights, the
    /// data rectangle otherwise.
    pub fn domain(&self) -> Rectangle {
        match self {
            WeightModel::Topological(_) => Rectangle::Adaptive,
            WeightModel::Combinatorial(c) => Rectangle::Concrete(c.rect().clone()),
            WeightModel::Analytic(a) => Rectangle::Concrete(a.rect().clone()),
            WeightModel::Tabulated(t) => Rectangle::Concrete(t.rect().clone()),
        }
    }

    pub fn tabulate(&self, rect: &Rect) -> Table {
        Table::from_fn(rect.clone(), |l| self.weight(l))
    }
}

impl WeightFn for WeightModel {
    fn rank(&self) -> usize {
        match self {
            WeightModel::Topological(w) => w.rank(),
            WeightModel::Combinatorial(w) => w.rank(),
            WeightModel::Analytic(w) => w.rank(),
            WeightModel::Tabulated(w) => WeightFn::rank(w),
        }
    }

    fn weight(&self, l: &[i64]) -> i64 {
        match self {
            WeightModel::Topological(w) => w.weight(l),
            WeightModel::Combinatorial(w) => w.weight(l),
            WeightModel::Analytic(w) => w.weight(l),
            WeightModel::Tabulated(w) => w.weight(l),
        }
    }
}

/// Failure evidence from a validator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Pair { first: Vec<i64>, second: Vec<i64> },
    /// `h(l) = h(l + E_v)` but `h(l + E_u) != h(l + E_u + E_v)`.
    Stability { point: Vec<i64>, direction: usize, shift: usize },
    /// Both differences nonzero along `l -> l + E_v`.
    Step { point: Vec<i64>, direction: usize },
    Point(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub witness: Option<Witness>,
    /// Pairs were sampled rather than enumerated.
    pub sampled: bool,
}

impl Check {
    fn from_witness(witness: Option<Witness>, sampled: bool) -> Self {
        Check { passed: witness.is_none(), witness, sampled }
    }
}

/// First `(l, v)` where the table moves the wrong way along `l -> l + E_v`.
fn monotonicity_violation(t: &Table, increasing: bool) -> Option<(Vec<i64>, usize)> {
    let rect = t.rect();
    for (i, l) in rect.points().enumerate() {
        for v in 0..rect.rank() {
            if let Some(j) = rect.step_up(i, &l, v) {
                let d = t.at_index(j) - t.at_index(i);
                if (increasing && d < 0) || (!increasing && d > 0) {
                    return Some((l, v));
                }
            }
        }
    }
    None
}

fn pairs_check(
    t: &Table,
    cfg: ValidatorConfig,
    violates: impl Fn(i64, i64, i64, i64) -> bool,
) -> Check {
    let rect = t.rect();
    let n = rect.volume();
    let test = |i: usize, j: usize| -> Option<Witness> {
        let a = rect.point(i);
        let b = rect.point(j);
        let lo: Vec<i64> = a.iter().zip(&b).map(|(x, y)| *x.min(y)).collect();
        let hi: Vec<i64> = a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect();
        violates(t.at_index(i), t.at_index(j), t.at(&lo), t.at(&hi)).then_some(Witness::Pair { first: a, second: b })
    };
    let total = (n as u64).saturating_mul(n as u64);
    if total <= cfg.pair_threshold {
        for i in 0..n {
            for j in i + 1..n {
                if let Some(w) = test(i, j) {
                    return Check::from_witness(Some(w), false);
                }
            }
        }
        Check::from_witness(None, false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.pair_threshold {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if let Some(w) = test(i, j) {
                return Check::from_witness(Some(w), true);
            }
        }
        Check::from_witness(None, true)
    }
}

/// `h(l1) + h(l2) >= h(min) + h(max)`.
pub fn check_matroid(h: &Table, cfg: ValidatorConfig) -> Check {
    pairs_check(h, cfg, |a, b, lo, hi| a + b < lo + hi)
}

/// `h1(max) + h1(min) >= h1(l1) + h1(l2)`.
pub fn check_opposite_matroid(h1: &Table, cfg: ValidatorConfig) -> Check {
    pairs_check(h1, cfg, |a, b, lo, hi| lo + hi < a + b)
}

/// Stability: `h(l) = h(l + E_v)` implies `h(l + l̄) = h(l + l̄ + E_v)` for
/// every `l̄ >= 0` with no `E_v` component. By induction along the
/// coordinates of `l̄` it suffices to test `l̄ = E_u`, `u != v`.
pub fn check_stability(h: &Table) -> Check {
    let rect = h.rect();
    let s = rect.rank();
    for (i, l) in rect.points().enumerate() {
        for v in 0..s {
            let Some(iv) = rect.step_up(i, &l, v) else { continue };
            if h.at_index(i) != h.at_index(iv) {
                continue;
            }
            for u in (0..s).filter(|&u| u != v) {
                let Some(iu) = rect.step_up(i, &l, u) else { continue };
                let mut lu = l.clone();
                lu[u] += 1;
                let iuv = rect.step_up(iu, &lu, v).expect("inside since l + E_v is");
                if h.at_index(iu) != h.at_index(iuv) {
                    return Check::from_witness(
                        Some(Witness::Stability { point: l, direction: v, shift: u }),
                        false,
                    );
                }
            }
        }
    }
    Check::from_witness(None, false)
}

/// Combinatorial duality property: `h(l + E_v) - h(l)` and
/// `h°(l) - h°(l + E_v)` are never both nonzero.
pub fn check_cdp(h: &Table, h_dual: &Table) -> Check {
    let rect = h.rect();
    for (i, l) in rect.points().enumerate() {
        for v in 0..rect.rank() {
            let Some(j) = rect.step_up(i, &l, v) else { continue };
            let dh = h.at_index(j) - h.at_index(i);
            let dd = h_dual.at_index(i) - h_dual.at_index(j);
            if dh != 0 && dd != 0 {
                return Check::from_witness(Some(Witness::Step { point: l, direction: v }), false);
            }
        }
    }
    Check::from_witness(None, false)
}

/// Unique minimal `l > 0` with `h^1(l) = p_gh`; zero when `p_gh = 0`.
pub fn cohomological_cycle(data: &HilbertData) -> Result<IntegerCycle> {
    let rect = data.rect();
    if data.p_gh == 0 {
        return Ok(IntegerCycle::zero(rect.rank()));
    }
    let mut min: Option<Vec<i64>> = None;
    for l in rect.points() {
        if data.h1.at(&l) == data.p_gh {
            min = Some(match min {
                None => l,
                Some(m) => m.iter().zip(&l).map(|(a, b)| *a.min(b)).collect(),
            });
        }
    }
    let min = min.ok_or_else(|| Error::Invalid("h1 never attains p_gh".into()))?;
    if data.h1.at(&min) != data.p_gh {
        return Err(Error::data(
            &min,
            "data inconsistent with the min-closure of the cohomological cycle: h1 < p_gh at the minimum of the attainment set",
        ));
    }
    Ok(IntegerCycle(min))
}

/// A finite slice of a multivariable series: coefficients on `R(0, window)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesSlice {
    pub coeffs: Table,
}

#[derive(Serialize)]
struct SeriesFile {
    window: Vec<i64>,
    coeffs: BTreeMap<String, i64>,
}

impl SeriesSlice {
    pub fn window(&self) -> &Rect {
        self.coeffs.rect()
    }

    pub fn get(&self, l: &[i64]) -> Option<i64> {
        self.coeffs.get(l)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().iter().all(|x| x.is_zero())
    }

    pub fn to_json(&self) -> String {
        let w = self.window();
        let f = SeriesFile {
            window: w.corner().to_vec(),
            coeffs: w.points().map(|l| (point_key(&l), self.coeffs.at(&l))).collect(),
        };
        serde_json::to_string_pretty(&f).expect("series serialization")
    }
}

/// A series computed by a stencil, with the count of points whose stencil
/// left the input rectangle.
#[derive(Debug, Clone)]
pub struct StencilSeries {
    pub series: SeriesSlice,
    pub omitted: usize,
}

fn interior(rect: &Rect) -> Result<Rect> {
    let c: Vec<i64> = rect.corner().iter().map(|x| x - 1).collect();
    if c.iter().any(|&x| x < 0) {
        return Err(Error::Invalid("rectangle has no interior for the stencil".into()));
    }
    Rect::new(c)
}

fn subset_points(l: &[i64], mask: usize) -> Vec<i64> {
    let mut p = l.to_vec();
    for (v, x) in p.iter_mut().enumerate() {
        if mask >> v & 1 == 1 {
            *x += 1;
        }
    }
    p
}

fn sign(mask: usize) -> i64 {
    if (mask.count_ones() + 1).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `p(l) = sum_I (-1)^{|I|+1} h(l + E_I)`, i.e. `P = -H * prod_v (1 - t_v^{-1})`.
pub fn poincare_from_hilbert(h: &Table) -> Result<StencilSeries> {
    let win = interior(h.rect())?;
    let s = win.rank();
    let coeffs = Table::from_fn(win.clone(), |l| {
        (0..1usize << s).map(|m| sign(m) * h.at(&subset_points(l, m))).sum()
    });
    Ok(StencilSeries { omitted: h.rect().volume() - win.volume(), series: SeriesSlice { coeffs } })
}

/// Inverse of [`poincare_from_hilbert`]: rebuilds `h` on `R(0, c)` from
/// `p` on the interior and `h` on the outer faces `{l : l_v = c_v some v}`.
pub fn hilbert_from_poincare(p: &SeriesSlice, faces: &Table) -> Result<Table> {
    let rect = faces.rect().clone();
    if interior(&rect)? != *p.window() {
        return Err(Error::Invalid("series window is not the interior of the rectangle".into()));
    }
    let s = rect.rank();
    let mut values = faces.values().to_vec();
    for i in (0..rect.volume()).rev() {
        let l = rect.point(i);
        if let Some(pl) = p.get(&l) {
            let mut acc = -pl;
            for m in 1..1usize << s {
                let j = rect.index(&subset_points(&l, m)).expect("interior stencil");
                acc += sign(m) * values[j];
            }
            values[i] = acc;
        }
    }
    Table::new(rect, values)
}

/// `sum_I (-1)^{|I|+1} w((l, I))` with cube weights the vertex maxima.
pub fn weighted_cube_series(w: &Table) -> Result<StencilSeries> {
    let win = interior(w.rect())?;
    let s = win.rank();
    let coeffs = Table::from_fn(win.clone(), |l| {
        (0..1usize << s)
            .map(|m| {
                let cube_w = (0..1usize << s)
                    .filter(|&sub| sub & !m == 0)
                    .map(|sub| w.at(&subset_points(l, sub)))
                    .max()
                    .expect("nonempty cube");
                sign(m) * cube_w
            })
            .sum()
    });
    Ok(StencilSeries { omitted: w.rect().volume() - win.volume(), series: SeriesSlice { coeffs } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn t1(vals: &[i64]) -> Table {
        Table::new(Rect::new(vec![vals.len() as i64 - 1]).unwrap(), vals.to_vec()).unwrap()
    }

    fn t2(c: [i64; 2], f: impl Fn(i64, i64) -> i64) -> Table {
        Table::from_fn(Rect::new(c.to_vec()).unwrap(), |l| f(l[0], l[1]))
    }

    #[test]
    fn topological_weight_on_minus_two_vertex() {
        let g = PlumbingGraph::from_json(r#"{"vertices":[{"id":"a","e":-2}],"edges":[]}"#).unwrap();
        let w = TopologicalWeight::new(&g, g.minus_canonical());
        assert_eq!(w.weight(&[0]), 0);
        assert_eq!(w.weight(&[1]), 1);
        assert_eq!(w.weight(&[2]), 4);
    }

    #[test]
    fn combinatorial_weights() {
        let w = CombinatorialWeight::new(t1(&[0, 0, 1]), t1(&[1, 0, 0])).unwrap();
        let vals: Vec<i64> = (0..3).map(|i| w.weight(&[i])).collect();
        assert_eq!(vals, vec![0, -1, 0]);
        let w = CombinatorialWeight::symmetric(t1(&[0, 1])).unwrap();
        assert_eq!((w.weight(&[0]), w.weight(&[1])), (0, 0));
        let w = CombinatorialWeight::new(t1(&[0, 0, 0]), t1(&[5, 5, 5])).unwrap();
        assert!((0..3).all(|i| w.weight(&[i]) == 0));
        assert!(CombinatorialWeight::new(t1(&[0, 1, 0]), t1(&[0, 0, 0])).is_err());
    }

    #[test]
    fn symmetric_weight_is_reflection_invariant() {
        let h = t2([2, 3], |a, b| a.min(1) + b);
        let w = CombinatorialWeight::symmetric(h).unwrap();
        let rect = w.rect().clone();
        for l in rect.points() {
            assert_eq!(w.weight(&l), w.weight(&rect.reflect(&l)));
        }
    }

    #[test]
    fn analytic_weight_subtracts_h1() {
        let d = HilbertData::new(vec![rat(0)], 1, t1(&[0, 0, 1]), t1(&[0, 1, 1])).unwrap();
        let w = AnalyticWeight::new(d);
        assert_eq!((0..3).map(|i| w.weight(&[i])).collect::<Vec<_>>(), vec![0, -1, 0]);
        let d = HilbertData::new(vec![rat(0)], 0, t1(&[0, 1, 3]), t1(&[0, 0, 0])).unwrap();
        let w = AnalyticWeight::new(d);
        assert_eq!(w.weight(&[2]), 3);
    }

    #[test]
    fn hilbert_data_validation_errors() {
        // p_gh mismatch
        assert!(HilbertData::new(vec![rat(0)], 2, t1(&[0, 0, 1]), t1(&[0, 1, 1])).is_err());
        // h not monotone
        assert!(HilbertData::new(vec![rat(0)], 0, t1(&[0, 2, 1]), t1(&[0, 0, 0])).is_err());
        // attainment set {(1,2),(2,1)} is not min-closed
        let h1 = t2([2, 2], |a, b| if (a, b) == (1, 2) || (a, b) == (2, 1) || (a, b) == (2, 2) { 1 } else { 0 });
        let h = t2([2, 2], |_, _| 0);
        let err = HilbertData::new(vec![rat(0), rat(0)], 1, h, h1).unwrap_err();
        assert!(err.to_string().contains("matroid") || err.to_string().contains("min-closure"));
    }

    #[test]
    fn sparse_tables_reject_missing_points() {
        let text = r#"{"class":["0"],"rect":[2],"p_gh":0,"h":{"0":0,"1":1},"h1":{"0":0,"1":0,"2":0}}"#;
        let err = HilbertData::from_json(text).unwrap_err();
        assert!(err.to_string().contains("(2)"));
    }

    #[test]
    fn hilbert_json_roundtrip() {
        let d = HilbertData::new(vec![rat(0)], 1, t1(&[0, 0, 1]), t1(&[0, 1, 1])).unwrap();
        let d2 = HilbertData::from_json(&d.to_json()).unwrap();
        assert_eq!(d.h(), d2.h());
        assert_eq!(d.h1(), d2.h1());
        assert_eq!(d.p_gh(), d2.p_gh());
    }

    #[test]
    fn matroid_examples() {
        let cfg = ValidatorConfig::default();
        assert!(check_matroid(&t2([2, 2], |a, b| a + b), cfg).passed);
        let c = check_matroid(&t2([1, 1], |a, b| a.min(b)), cfg);
        assert!(!c.passed);
        assert_eq!(c.witness, Some(Witness::Pair { first: vec![0, 1], second: vec![1, 0] }));
        assert!(check_matroid(&t1(&[0, 0, 3, 7]), cfg).passed);
    }

    #[test]
    fn matroid_sampling_is_seeded() {
        let h = t2([40, 40], |a, b| a.min(b));
        let cfg = ValidatorConfig { pair_threshold: 10_000, seed: 7 };
        let a = check_matroid(&h, cfg);
        let b = check_matroid(&h, cfg);
        assert!(a.sampled);
        assert_eq!(a, b);
        assert!(!a.passed);
    }

    #[test]
    fn stability_examples() {
        assert!(check_stability(&t2([2, 2], |a, b| a + b)).passed);
        let bad = t2([1, 1], |a, b| if (a, b) == (1, 1) { 1 } else { 0 });
        assert!(!check_stability(&bad).passed);
        assert!(check_stability(&t1(&[0, 0, 1, 1])).passed);
    }

    /// The single-step stability test agrees with the definition quantified
    /// over every admissible shift.
    #[test]
    fn stability_local_check_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let rect = Rect::new(vec![2, 2]).unwrap();
            let vals: Vec<i64> = rect.points().map(|_| rng.gen_range(0..2)).collect();
            let h = Table::new(rect.clone(), vals).unwrap();
            let mut brute = true;
            for l in rect.points() {
                for v in 0..2 {
                    let mut lv = l.clone();
                    lv[v] += 1;
                    if !rect.contains(&lv) || h.at(&l) != h.at(&lv) {
                        continue;
                    }
                    for bar in rect.points().filter(|b| b[v] == 0) {
                        let a: Vec<i64> = l.iter().zip(&bar).map(|(x, y)| x + y).collect();
                        let mut b = a.clone();
                        b[v] += 1;
                        if rect.contains(&b) && h.at(&a) != h.at(&b) {
                            brute = false;
                        }
                    }
                }
            }
            assert_eq!(check_stability(&h).passed, brute);
        }
    }

    #[test]
    fn cdp_examples() {
        assert!(check_cdp(&t1(&[0, 0, 1]), &t1(&[1, 0, 0])).passed);
        let c = check_cdp(&t1(&[0, 1]), &t1(&[1, 0]));
        assert_eq!(c.witness, Some(Witness::Step { point: vec![0], direction: 0 }));
        assert!(check_cdp(&t1(&[0, 2, 5]), &t1(&[0, 0, 0])).passed);
    }

    #[test]
    fn poincare_examples() {
        let p = poincare_from_hilbert(&t1(&[0, 1, 2, 3, 4])).unwrap();
        assert!(p.series.coeffs.values().iter().all(|&x| x == 1));
        assert_eq!(p.omitted, 1);
        assert!(poincare_from_hilbert(&t1(&[0, 0, 0])).unwrap().series.is_zero());
        assert!(poincare_from_hilbert(&t2([3, 3], |a, b| a + b)).unwrap().series.is_zero());
    }

    #[test]
    fn poincare_inverts() {
        let h = t2([3, 2], |a, b| a * a + a.min(b) + 2 * b);
        let p = poincare_from_hilbert(&h).unwrap();
        let faces = Table::from_fn(h.rect().clone(), |l| {
            if l.iter().zip(h.rect().corner()).any(|(x, c)| x == c) { h.at(l) } else { 0 }
        });
        assert_eq!(hilbert_from_poincare(&p.series, &faces).unwrap(), h);
    }

    #[test]
    fn weighted_cube_series_examples() {
        assert!(weighted_cube_series(&t2([2, 2], |_, _| 0)).unwrap().series.is_zero());
        let w = t1(&[3, -1, 4, 4]);
        let s = weighted_cube_series(&w).unwrap().series;
        for l in 0..3 {
            assert_eq!(s.get(&[l]).unwrap(), w.at(&[l]).max(w.at(&[l + 1])) - w.at(&[l]));
        }
        let s = weighted_cube_series(&t1(&[0, -1, 0])).unwrap().series;
        let hs = poincare_from_hilbert(&t1(&[0, 0, 1])).unwrap().series;
        assert_eq!(s.coeffs.values(), &[0, 1]);
        assert_eq!(s, hs);
    }

    #[test]
    fn cohomological_cycle_examples() {
        let d = HilbertData::new(vec![rat(0)], 0, t1(&[0, 1]), t1(&[0, 0])).unwrap();
        assert_eq!(cohomological_cycle(&d).unwrap(), IntegerCycle(vec![0]));
        let d = HilbertData::new(vec![rat(0)], 1, t1(&[0, 0, 1]), t1(&[0, 1, 1])).unwrap();
        assert_eq!(cohomological_cycle(&d).unwrap(), IntegerCycle(vec![1]));
    }
}
