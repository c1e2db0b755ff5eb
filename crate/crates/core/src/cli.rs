//! Command-line front end. Every command prints one JSON document by
//! default; `--format text` gives a readable summary and `--format dot`
//! draws graded roots.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 bad input,
//! 3 a resource cap or undecided certificate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::arith::{format_rational, parse_rational};
use crate::compare::{blowup, blowup_invariance, check_rh_pullback, compare, normalization_check, sw_invariant, BlowupMove};
use crate::complex::{
    eu_cube_formula, graded_root, lattice_cohomology, max_path_eu, min_path_eu, path_cohomology, path_eu_formula,
    truncate, Domain, EngineConfig, Mode, PathSpec, PathStrategy,
};
use crate::error::Error;
use crate::grid::Rect;
use crate::plumbing::{DiscriminantClass, PlumbingGraph, RationalCycle};
use crate::reduction::{check_ban, is_rational, reduce_analytic, reduce_topological, resolve_ids, test_bad_set, BadSetVerdict};
use crate::weights::{check_cdp, check_stability, AnalyticWeight, HilbertData, ValidatorConfig, WeightModel};

#[derive(Debug, Parser)]
#[command(name = "latcoh", version, about = "Lattice cohomology of negative definite plumbing graphs")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Seed for sampled validators and random paths.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads for level-wise and class-wise work.
    #[arg(long, env = "LATCOH_WORKERS", global = true)]
    workers: Option<usize>,
    /// Maximal number of cubes in one complex.
    #[arg(long, global = true)]
    cell_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Args)]
struct ClassArgs {
    /// Class given by its `r_h` coordinates, e.g. "2/3,1/3".
    #[arg(long, conflicts_with = "all_classes")]
    class: Option<String>,
    /// Iterate over every class of H.
    #[arg(long)]
    all_classes: bool,
}

#[derive(Debug, Args)]
struct RangeArgs {
    /// Compute levels through this value exactly (topological weights).
    #[arg(long, conflicts_with = "rect")]
    n_max: Option<i64>,
    /// Use the rectangle R(0, c), e.g. "2,3,1".
    #[arg(long)]
    rect: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lattice invariants of a graph.
    Info { graph: PathBuf },
    /// Lattice cohomology module.
    Latcoh {
        graph: PathBuf,
        /// Tabulated analytic data; switches to the analytic weight.
        #[arg(long, conflicts_with = "all_classes")]
        data: Option<PathBuf>,
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Only H^0 (faster; no Euler characteristic).
        #[arg(long)]
        h0_only: bool,
    },
    /// Graded root.
    Root {
        graph: PathBuf,
        #[arg(long, conflicts_with = "all_classes")]
        data: Option<PathBuf>,
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Path cohomology and extremal paths.
    Path {
        graph: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        rect: Option<String>,
        /// Vertex ids of the steps, e.g. "a,b,a".
        #[arg(long, required_unless_present_any = ["min", "max"], conflicts_with_all = ["min", "max"])]
        steps: Option<String>,
        /// Minimize the path Euler characteristic over increasing paths.
        #[arg(long, conflicts_with = "max")]
        min: bool,
        #[arg(long)]
        max: bool,
        /// Greedy minimization instead of the exact one.
        #[arg(long, requires = "min")]
        greedy: bool,
    },
    /// Seiberg–Witten invariant from the Euler characteristic.
    Sw {
        graph: PathBuf,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        n_max: Option<i64>,
    },
    /// Reduced lattice cohomology over a bad vertex set.
    Reduce {
        graph: PathBuf,
        /// Vertex ids of the set, e.g. "c".
        #[arg(long)]
        vbar: String,
        #[arg(long, conflicts_with = "all_classes")]
        data: Option<PathBuf>,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        n_max: Option<i64>,
        /// Largest Euler-number decrement tried when certifying the set.
        #[arg(long, default_value_t = 16)]
        cap: i64,
        /// Also compute the unreduced module and compare.
        #[arg(long)]
        check: bool,
    },
    /// Analytic against topological weights.
    Compare {
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Blow up a point of a curve or an edge.
    Blowup {
        graph: PathBuf,
        /// Generic point of this vertex's curve.
        #[arg(long, conflicts_with = "edge", required_unless_present = "edge")]
        point: Option<String>,
        /// Intersection point of two curves, e.g. "a,b".
        #[arg(long)]
        edge: Option<String>,
        /// Run the invariance checks.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        n_max: Option<i64>,
    },
    /// Run the bundled property suite.
    Verify {
        graph: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        n_max: Option<i64>,
    },
}

/// Parses the process arguments, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ResourceCap(_) => 3,
        _ => 2,
    }
}

/// Rendered output and the exit code it carries.
pub struct Output {
    pub text: String,
    pub code: u8,
}

struct Ctx {
    format: Format,
    seed: u64,
    cfg: EngineConfig,
}

type R<T> = std::result::Result<T, Error>;

pub fn run(cli: &Cli) -> R<Output> {
    if let Some(n) = cli.workers {
        // a second initialization (tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let mut cfg = EngineConfig::default();
    if let Some(c) = cli.cell_cap {
        cfg.cell_cap = c;
    }
    let ctx = Ctx { format: cli.format, seed: cli.seed, cfg };
    match &cli.command {
        Command::Info { graph } => cmd_info(&ctx, &load_graph(graph)?),
        Command::Latcoh { graph, data, class, range, h0_only } => {
            cmd_latcoh(&ctx, &load_graph(graph)?, data.as_deref(), class, range, *h0_only, false)
        }
        Command::Root { graph, data, class, range } => {
            cmd_latcoh(&ctx, &load_graph(graph)?, data.as_deref(), class, range, true, true)
        }
        Command::Path { graph, data, class, rect, steps, min, max, greedy } => {
            let g = load_graph(graph)?;
            let model = single_model(&g, data.as_deref(), class.as_deref())?;
            cmd_path(&ctx, &g, &model, rect.as_deref(), steps.as_deref(), *min, *max, *greedy)
        }
        Command::Sw { graph, class, n_max } => cmd_sw(&ctx, &load_graph(graph)?, class, *n_max),
        Command::Reduce { graph, vbar, data, class, n_max, cap, check } => {
            cmd_reduce(&ctx, &load_graph(graph)?, vbar, data.as_deref(), class, *n_max, *cap, *check)
        }
        Command::Compare { graph, data } => cmd_compare(&ctx, &load_graph(graph)?, &load_data(data, ctx.seed)?),
        Command::Blowup { graph, point, edge, check, class, n_max } => {
            let mv = match (point, edge) {
                (Some(v), _) => BlowupMove::Point { vertex: v.clone() },
                (None, Some(e)) => {
                    let ids = split_list(e);
                    let [a, b] = ids.as_slice() else {
                        return Err(Error::Invalid(format!("--edge expects two vertex ids, got {e:?}")));
                    };
                    BlowupMove::Edge { from: a.clone(), to: b.clone() }
                }
                (None, None) => unreachable!("clap requires one of the two"),
            };
            cmd_blowup(&ctx, &load_graph(graph)?, &mv, *check, class, *n_max)
        }
        Command::Verify { graph, data, n_max } => {
            let d = data.as_deref().map(|p| load_data(p, ctx.seed)).transpose()?;
            cmd_verify(&ctx, &load_graph(graph)?, d.as_ref(), *n_max)
        }
    }
}

fn read(path: &Path) -> R<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_graph(path: &Path) -> R<PlumbingGraph> {
    PlumbingGraph::from_json(&read(path)?)
}

fn load_data(path: &Path, seed: u64) -> R<HilbertData> {
    HilbertData::from_json_with(&read(path)?, ValidatorConfig { seed, ..ValidatorConfig::default() })
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_ints(s: &str) -> R<Vec<i64>> {
    split_list(s)
        .iter()
        .map(|x| x.parse().map_err(|_| Error::Parse(format!("expected an integer, got {x:?}"))))
        .collect()
}

fn parse_class(g: &PlumbingGraph, s: &str) -> R<DiscriminantClass> {
    let coords = split_list(s)
        .iter()
        .map(|x| parse_rational(x).ok_or_else(|| Error::Parse(format!("bad fraction {x:?} in --class"))))
        .collect::<R<Vec<_>>>()?;
    g.class_of(&RationalCycle(coords))
}

fn classes_of(g: &PlumbingGraph, args: &ClassArgs) -> R<Vec<DiscriminantClass>> {
    if args.all_classes {
        g.require_qhs3()?;
        return Ok(g.classes());
    }
    Ok(vec![match &args.class {
        Some(s) => parse_class(g, s)?,
        None => g.zero_class(),
    }])
}

fn data_class(g: &PlumbingGraph, d: &HilbertData) -> R<DiscriminantClass> {
    g.class_of(&RationalCycle(d.class().to_vec()))
}

/// Analytic model when data are given, otherwise the topological one with
/// `k_r = -Z_K + 2 s_h`.
fn single_model(g: &PlumbingGraph, data: Option<&Path>, class: Option<&str>) -> R<WeightModel> {
    match data {
        Some(p) => {
            let d = load_data(p, 0)?;
            check_data_graph(g, &d, class)?;
            Ok(WeightModel::Analytic(AnalyticWeight::new(d)))
        }
        None => {
            let h = match class {
                Some(s) => parse_class(g, s)?,
                None => g.zero_class(),
            };
            Ok(WeightModel::topological(g, g.spin_rep(&h)?.k_r))
        }
    }
}

fn check_data_graph(g: &PlumbingGraph, d: &HilbertData, class: Option<&str>) -> R<()> {
    if d.rect().rank() != g.len() {
        return Err(Error::Invalid(format!("data have rank {} but the graph has {} vertices", d.rect().rank(), g.len())));
    }
    let h = data_class(g, d)?;
    if let Some(s) = class {
        if parse_class(g, s)? != h {
            return Err(Error::Invalid("--class differs from the class recorded in the data".into()));
        }
    }
    Ok(())
}

fn class_json(h: &DiscriminantClass) -> Value {
    json!(h.representative().to_strings())
}

fn render(ctx: &Ctx, value: Value, text: impl FnOnce() -> String, dot: Option<String>, ok: bool) -> R<Output> {
    let text = match ctx.format {
        Format::Json => serde_json::to_string_pretty(&value).expect("json") + "\n",
        Format::Text => text(),
        Format::Dot => dot.ok_or_else(|| Error::Invalid("--format dot is only available for graded roots".into()))?,
    };
    Ok(Output { text, code: if ok { 0 } else { 1 } })
}

fn cmd_info(ctx: &Ctx, g: &PlumbingGraph) -> R<Output> {
    let group = g.discriminant_group();
    let zk = g.canonical_cycle();
    let duals: Vec<Value> = g
        .dual_basis()
        .iter()
        .zip(g.ids())
        .map(|(d, id)| json!({ "vertex": id, "cycle": d.to_strings() }))
        .collect();
    let rationality = match is_rational(g) {
        Ok(r) => Some(r),
        Err(Error::NotQhs3(_)) => None,
        Err(e) => return Err(e),
    };
    let value = json!({
        "vertices": g.ids(),
        "det": group.order.to_string(),
        "h_order": group.order.to_string(),
        "h_invariant_factors": group.factors.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "z_k": zk.to_strings(),
        "z_k_square": format_rational(&g.pair(&zk, &zk)),
        "dual_basis": duals,
        "qhs3": g.require_qhs3().is_ok(),
        "rational": rationality.as_ref().map(|r| r.rational),
        "z_min": rationality.as_ref().map(|r| r.z_min.clone()),
        "chi_z_min": rationality.as_ref().map(|r| r.chi_z_min),
    });
    let text = || {
        let mut s = format!("vertices {}\n|det| = |H| = {}\n", g.ids().join(" "), group.order);
        s += &format!("H invariant factors {:?}\n", group.factors.iter().map(|f| f.to_string()).collect::<Vec<_>>());
        s += &format!("Z_K = {zk}\n");
        for (d, id) in g.dual_basis().iter().zip(g.ids()) {
            s += &format!("E*_{id} = {d}\n");
        }
        match &rationality {
            Some(r) => s += &format!("rational {}  Z_min {:?}  chi(Z_min) {}\n", r.rational, r.z_min, r.chi_z_min),
            None => s += "not a tree of rational curves\n",
        }
        s
    };
    render(ctx, value, text, None, true)
}

/// Module (or root) for one class; `Value`, text and DOT fragments.
fn module_for(
    ctx: &Ctx,
    g: &PlumbingGraph,
    data: Option<&HilbertData>,
    h: &DiscriminantClass,
    range: &RangeArgs,
    h0_only: bool,
    root_only: bool,
) -> R<(Value, String, String)> {
    let model = match data {
        Some(d) => WeightModel::Analytic(AnalyticWeight::new(d.clone())),
        None => WeightModel::topological(g, g.spin_rep(h)?.k_r),
    };
    let pinned = range.rect.as_deref().map(|s| parse_ints(s).and_then(Rect::new)).transpose()?;
    let t = truncate(&model, range.n_max, pinned, ctx.cfg)?;
    let domain_json = match &t.domain {
        Domain::Rect(r) => json!({ "rect": r.corner() }),
        Domain::Sublevel { n_max } => json!({ "n_max": n_max }),
    };
    let root = graded_root(&model, &t.domain, ctx.cfg)?;
    let mut value = json!({
        "class": class_json(h),
        "model": model.kind(),
        "domain": domain_json,
        "heuristic": t.heuristic,
        "root": root.to_json_value(),
    });
    let mut text = format!("class {}\n", h.representative());
    if !root_only {
        let mode = if h0_only { Mode::H0Only } else { Mode::Full };
        let module = lattice_cohomology(&model, &t.domain, mode, ctx.cfg)?;
        value["module"] = module.to_json_value();
        text += &module.to_text();
    } else {
        text += &format!("graded root {}\n", root.canonical());
    }
    if t.heuristic {
        text += "heuristic: levels above the computed range assumed trivial\n";
    }
    Ok((value, text, root.to_dot()))
}

fn cmd_latcoh(
    ctx: &Ctx,
    g: &PlumbingGraph,
    data: Option<&Path>,
    class: &ClassArgs,
    range: &RangeArgs,
    h0_only: bool,
    root_only: bool,
) -> R<Output> {
    let data = data.map(|p| load_data(p, ctx.seed)).transpose()?;
    let classes = match &data {
        Some(d) => {
            check_data_graph(g, d, class.class.as_deref())?;
            vec![data_class(g, d)?]
        }
        None => classes_of(g, class)?,
    };
    let parts: Vec<(Value, String, String)> = classes
        .par_iter()
        .map(|h| module_for(ctx, g, data.as_ref(), h, range, h0_only, root_only))
        .collect::<R<_>>()?;
    let value = if class.all_classes {
        json!({ "classes": parts.iter().map(|p| p.0.clone()).collect::<Vec<_>>() })
    } else {
        parts[0].0.clone()
    };
    let text: String = parts.iter().map(|p| p.1.clone()).collect();
    let dot: String = parts.iter().map(|p| p.2.clone()).collect();
    render(ctx, value, || text, Some(dot), true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_path(
    ctx: &Ctx,
    g: &PlumbingGraph,
    model: &WeightModel,
    rect: Option<&str>,
    steps: Option<&str>,
    min: bool,
    max: bool,
    greedy: bool,
) -> R<Output> {
    if let Some(steps) = steps {
        let dirs = split_list(steps)
            .iter()
            .map(|id| g.index_of(id).ok_or_else(|| Error::Invalid(format!("unknown vertex id {id:?}"))))
            .collect::<R<Vec<_>>>()?;
        let path = PathSpec::from_directions(g.len(), &dirs)?;
        let formula = path_eu_formula(model, &path)?;
        let module = path_cohomology(model, &path)?;
        let eu = module.eu().expect("full");
        let value = json!({
            "path": path.points(),
            "eu_formula": formula,
            "eu_cohomology": eu,
            "equal": formula == eu,
            "module": module.to_json_value(),
        });
        return render(ctx, value, || format!("path eu {formula} (formula), {eu} (cohomology)\n"), None, formula == eu);
    }
    let r = match (rect, model) {
        (Some(s), _) => Rect::new(parse_ints(s)?)?,
        (None, WeightModel::Analytic(a)) => a.rect().clone(),
        _ => return Err(Error::Invalid("extremal paths on topological weights need --rect".into())),
    };
    let table = model.tabulate(&r);
    let opt = if max {
        max_path_eu(&table)?
    } else {
        min_path_eu(&table, if greedy { PathStrategy::Greedy } else { PathStrategy::Exhaustive })?
    };
    debug_assert!(min || max);
    let value = json!({
        "rect": r.corner(),
        "objective": if max { "max" } else { "min" },
        "eu": opt.eu,
        "path": opt.path.points(),
        "heuristic": opt.heuristic,
    });
    render(ctx, value, || format!("{} path eu {}\n", if max { "max" } else { "min" }, opt.eu), None, true)
}

fn cmd_sw(ctx: &Ctx, g: &PlumbingGraph, class: &ClassArgs, n_max: Option<i64>) -> R<Output> {
    let classes = classes_of(g, class)?;
    let vals: Vec<Value> = classes
        .par_iter()
        .map(|h| {
            let v = sw_invariant(g, h, n_max, ctx.cfg)?;
            let mut j = v.to_json_value();
            j["class"] = class_json(h);
            Ok(j)
        })
        .collect::<R<_>>()?;
    let text: String = vals.iter().map(|v| format!("class {}  sw {}\n", v["class"], v["sw"].as_str().unwrap_or(""))).collect();
    let value = if class.all_classes { json!({ "classes": vals }) } else { vals[0].clone() };
    render(ctx, value, || text, None, true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_reduce(
    ctx: &Ctx,
    g: &PlumbingGraph,
    vbar: &str,
    data: Option<&Path>,
    class: &ClassArgs,
    n_max: Option<i64>,
    cap: i64,
    check: bool,
) -> R<Output> {
    let vs = resolve_ids(g, &split_list(vbar))?;
    if let Some(p) = data {
        let d = load_data(p, ctx.seed)?;
        check_data_graph(g, &d, class.class.as_deref())?;
        let ban = check_ban(&d, &vs)?;
        if !ban.passed {
            let value = json!({ "vbar": vbar, "ban": ban });
            return render(ctx, value, || "not a reduction set for these data\n".into(), None, false);
        }
        let red = reduce_analytic(&d, &vs)?;
        let rmodel = WeightModel::Tabulated(red.weights.clone());
        let reduced = lattice_cohomology(&rmodel, &Domain::Rect(red.weights.rect().clone()), Mode::Full, ctx.cfg)?;
        let mut value = json!({ "vbar": vbar, "ban": ban, "reduced": reduced.to_json_value(), "heuristic": false });
        let mut ok = true;
        if check {
            let full_model = WeightModel::Analytic(AnalyticWeight::new(d.clone()));
            let full = lattice_cohomology(&full_model, &Domain::Rect(d.rect().clone()), Mode::Full, ctx.cfg)?;
            ok = full == reduced;
            value["full"] = full.to_json_value();
            value["equal"] = json!(ok);
        }
        let text = reduced.to_text();
        return render(ctx, value, || text, None, ok);
    }
    let verdict = test_bad_set(g, &vs, cap)?;
    if let BadSetVerdict::Undecided { .. } = verdict {
        let value = json!({ "vbar": vbar, "bad_set": verdict, "heuristic": true });
        let out = render(ctx, value, || format!("bad set undecided up to decrement {cap}\n"), None, true)?;
        return Ok(Output { code: 3, ..out });
    }
    let classes = classes_of(g, class)?;
    let results: Vec<(Value, String, bool)> = classes
        .par_iter()
        .map(|h| {
            let full_model = WeightModel::topological(g, g.spin_rep(h)?.k_r);
            let t = truncate(&full_model, n_max, None, ctx.cfg)?;
            let Domain::Sublevel { n_max } = t.domain else { unreachable!("topological truncation") };
            let reduced = reduce_topological(g, &vs, h)?.module(n_max, Mode::Full, ctx.cfg)?;
            let mut v = json!({ "class": class_json(h), "n_max": n_max, "heuristic": true, "reduced": reduced.to_json_value() });
            let mut ok = true;
            if check {
                let full = lattice_cohomology(&full_model, &t.domain, Mode::Full, ctx.cfg)?;
                ok = full == reduced;
                v["full"] = full.to_json_value();
                v["equal"] = json!(ok);
            }
            Ok((v, format!("class {}\n{}", h.representative(), reduced.to_text()), ok))
        })
        .collect::<R<_>>()?;
    let ok = results.iter().all(|r| r.2);
    let vals: Vec<Value> = results.iter().map(|r| r.0.clone()).collect();
    let value = json!({ "vbar": vbar, "bad_set": verdict, "classes": vals });
    let text: String = results.iter().map(|r| r.1.clone()).collect();
    render(ctx, value, || text, None, ok)
}

fn cmd_compare(ctx: &Ctx, g: &PlumbingGraph, d: &HilbertData) -> R<Output> {
    check_data_graph(g, d, None)?;
    let report = compare(g, &data_class(g, d)?, d, ctx.cfg)?;
    let ok = report.passed();
    let text = format!(
        "defect nonnegative {}\nmorphism well defined {}\nisomorphic {}\nmodules equal {}\n",
        report.negative_defect_at.is_none(),
        report.morphism_ok,
        report.isomorphic,
        report.modules_equal
    );
    render(ctx, report.to_json_value(), || text, None, ok)
}

fn cmd_blowup(ctx: &Ctx, g: &PlumbingGraph, mv: &BlowupMove, check: bool, class: &ClassArgs, n_max: Option<i64>) -> R<Output> {
    let blow = blowup(g, mv)?;
    let new_graph: Value = serde_json::from_str(&blow.graph.to_json()).expect("graph json");
    let mut value = json!({
        "move": mv,
        "graph": new_graph,
        "new_vertex": blow.graph.ids()[blow.new_vertex],
        "det_preserved": blow.graph.det_abs() == g.det_abs(),
    });
    let mut ok = blow.graph.det_abs() == g.det_abs();
    if check {
        g.require_qhs3()?;
        let classes = classes_of(g, class)?;
        let reports: Vec<Value> = classes
            .par_iter()
            .map(|h| {
                let rep = blowup_invariance(g, h, std::slice::from_ref(mv), n_max, ctx.cfg)?;
                Ok((rep.passed(), rep.to_json_value()))
            })
            .collect::<R<Vec<_>>>()?
            .into_iter()
            .map(|(p, v)| {
                ok &= p;
                v
            })
            .collect();
        value["invariance"] = json!(reports);
    } else if g.require_qhs3().is_ok() {
        let rh: Vec<Value> = classes_of(g, class)?
            .iter()
            .map(|h| check_rh_pullback(&blow, h).map(|r| json!(r)))
            .collect::<R<_>>()?;
        value["rh_pullback"] = json!(rh);
    }
    let mut text = blow.graph.to_json() + "\n";
    if let Some(reports) = value.get("invariance").and_then(Value::as_array) {
        for r in reports {
            let status = if r["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            text += &format!("{status} invariance for class {}\n", r["class"]);
        }
    }
    render(ctx, value, || text, None, ok)
}

struct Suite {
    checks: Vec<Value>,
    ok: bool,
}

impl Suite {
    fn add(&mut self, name: &str, passed: bool, detail: Value) {
        self.ok &= passed;
        self.checks.push(json!({ "name": name, "passed": passed, "detail": detail }));
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.checks.push(json!({ "name": name, "passed": Value::Null, "skipped": reason }));
    }
}

/// Random increasing paths from 0 to `c`.
fn random_paths(c: &[i64], count: usize, seed: u64) -> Vec<PathSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut dirs: Vec<usize> = c.iter().enumerate().flat_map(|(v, &n)| std::iter::repeat_n(v, n as usize)).collect();
            for i in (1..dirs.len()).rev() {
                dirs.swap(i, rng.gen_range(0..=i));
            }
            PathSpec::from_directions(c.len(), &dirs).expect("increasing path")
        })
        .collect()
}

fn cmd_verify(ctx: &Ctx, g: &PlumbingGraph, data: Option<&HilbertData>, n_max: Option<i64>) -> R<Output> {
    let mut suite = Suite { checks: Vec::new(), ok: true };
    g.require_qhs3()?;
    let z_min = g.min_cycle().cycle;
    let small = Rect::new(z_min.0.clone())?;
    let nodes: Vec<usize> = (0..g.len()).filter(|&v| g.degree(v) >= 3).collect();
    let vbar = if nodes.is_empty() { vec![0] } else { nodes };
    let verdict = test_bad_set(g, &vbar, 16)?;
    for h in g.classes() {
        let tag = h.representative().to_strings().join(",");
        let model = WeightModel::topological(g, g.spin_rep(&h)?.k_r);
        let m = lattice_cohomology(&model, &Domain::Rect(small.clone()), Mode::Full, ctx.cfg)?;
        let f = eu_cube_formula(&model, &small, ctx.cfg)?;
        suite.add(&format!("eu_formula[{tag}]"), m.eu() == Some(f), json!({ "rect": small.corner(), "formula": f, "module": m.eu() }));

        let mut bad_paths = Vec::new();
        for p in random_paths(small.corner(), 8, ctx.seed) {
            let a = path_eu_formula(&model, &p)?;
            let b = path_cohomology(&model, &p)?.eu();
            if Some(a) != b {
                bad_paths.push(p.points().to_vec());
            }
        }
        suite.add(&format!("path_formula[{tag}]"), bad_paths.is_empty(), json!({ "failing_paths": bad_paths }));

        let t = truncate(&model, n_max, None, ctx.cfg)?;
        let Domain::Sublevel { n_max: top } = t.domain else { unreachable!("topological truncation") };
        if verdict.is_certified() {
            let full = lattice_cohomology(&model, &t.domain, Mode::Full, ctx.cfg)?;
            let red = reduce_topological(g, &vbar, &h)?.module(top, Mode::Full, ctx.cfg)?;
            suite.add(&format!("reduction[{tag}]"), full == red, json!({ "vbar": vbar, "n_max": top }));
        } else {
            suite.skip(&format!("reduction[{tag}]"), "bad set not certified");
        }

        let inv = blowup_invariance(g, &h, &BlowupMove::defaults(g), Some(top), ctx.cfg)?;
        suite.add(&format!("blowup_invariance[{tag}]"), inv.passed(), inv.to_json_value());

        let norm = normalization_check(g, &h, Some(top), ctx.cfg)?;
        suite.add(&format!("rh_sh_normalization[{tag}]"), norm.agree, json!({ "shift": norm.shift }));
    }
    if let Some(d) = data {
        let h_dual = d.h_dual();
        let st = check_stability(d.h());
        suite.add("stability", st.passed, json!(st));
        let cdp = check_cdp(d.h(), &h_dual);
        suite.add("cdp", cdp.passed, json!(cdp));
        let model = WeightModel::Analytic(AnalyticWeight::new(d.clone()));
        let m = lattice_cohomology(&model, &Domain::Rect(d.rect().clone()), Mode::Full, ctx.cfg)?;
        suite.add("analytic_eu", m.eu() == Some(d.p_gh()), json!({ "eu": m.eu(), "p_gh": d.p_gh() }));
        let table = model.tabulate(d.rect());
        let lo = min_path_eu(&table, PathStrategy::Exhaustive)?.eu;
        let hi = max_path_eu(&table)?.eu;
        suite.add("analytic_path_eu", lo == d.p_gh() && hi == d.p_gh(), json!({ "min": lo, "max": hi, "p_gh": d.p_gh() }));
        if d.rect().rank() == g.len() {
            let report = compare(g, &data_class(g, d)?, d, ctx.cfg)?;
            suite.add(
                "comparison",
                report.passed(),
                json!({ "defect_nonnegative": report.negative_defect_at.is_none(), "morphism_ok": report.morphism_ok, "isomorphic": report.isomorphic }),
            );
        } else {
            suite.skip("comparison", "data rank differs from the graph");
        }
    }
    let value = json!({ "passed": suite.ok, "checks": suite.checks });
    let text = suite
        .checks
        .iter()
        .map(|c| {
            let status = match c["passed"].as_bool() {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "SKIP",
            };
            format!("{status} {}\n", c["name"].as_str().unwrap_or(""))
        })
        .collect::<String>();
    let ok = suite.ok;
    render(ctx, value, || text, None, ok)
}

