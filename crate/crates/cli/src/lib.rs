//! Command implementations behind the `tasksched` binary.
//!
//! Every command reads and writes plain files. JSON documents carry a
//! `schema_version` field; scored graphs are written one JSON record per
//! line and the trade-off curve as a tab-separated table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use tasksched::affinity::{affinity_tensor, validate_profiles, AffinityTensor, RepresentationProfile};
use tasksched::costmodel::{cost_matrix, CostMatrix, CostUnit};
use tasksched::ordering::{
    Conditional, GaParams, Objective, OrderingProblem, OrderingSolution, SolverKind,
    DEFAULT_EXACT_CAP,
};
use tasksched::taskgraph::{
    enumerate_task_graphs, Architecture, BlockCostProfile, BranchPointConfig, LayerCost,
    DEFAULT_ENUMERATION_CAP,
};
use tasksched::tradeoff::{default_budgets, sweep, TradeoffCurve, DEFAULT_BUDGET_COUNT};
use tasksched::{
    score_graphs, tsplib, Constraints, GraphScore, Parallelism, SolverChoice, SolverConfig,
    TaskGraph,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const AFFINITY_FILE: &str = "affinity.json";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const TRADEOFF_FILE: &str = "tradeoff.tsv";
pub const SELECTED_FILE: &str = "selected.json";
pub const ORDER_FILE: &str = "order.json";
pub const BENCH_FILE: &str = "bench.tsv";

#[derive(Debug, Parser)]
#[command(name = "tasksched", version, about = "Task graph generation and task ordering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute task affinities from representation profiles.
    Affinity(AffinityArgs),
    /// Enumerate and score task graphs, sweep budgets and pick a graph.
    Graphgen(GraphgenArgs),
    /// Solve the task execution order for a graph or a cost matrix.
    Order(OrderArgs),
    /// Re-run the budget sweep over previously scored graphs.
    Tradeoff(TradeoffArgs),
    /// Solve TSPLIB instances and compare with their known optima.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverFlag {
    Auto,
    Exact,
    Ga,
}

impl From<SolverFlag> for SolverChoice {
    fn from(f: SolverFlag) -> Self {
        match f {
            SolverFlag::Auto => SolverChoice::Auto,
            SolverFlag::Exact => SolverChoice::Exact,
            SolverFlag::Ga => SolverChoice::Ga,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveFlag {
    Path,
    Tour,
}

impl From<ObjectiveFlag> for Objective {
    fn from(f: ObjectiveFlag) -> Self {
        match f {
            ObjectiveFlag::Path => Objective::OpenPath,
            ObjectiveFlag::Tour => Objective::ClosedTour,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Ordering solver; `auto` is exact up to the exact cap and genetic above.
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverFlag,
    /// Seed for the genetic solver.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    fn config(&self, exact_cap: usize) -> SolverConfig {
        SolverConfig {
            choice: self.solver.into(),
            exact_cap,
            ga: GaParams::default().with_seed(self.seed),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstraintArgs {
    /// File of `i j` lines: task `i` runs before task `j`.
    #[arg(long)]
    pub precedence: Option<PathBuf>,
    /// File of `i j p` lines: task `j` follows `i` with probability `p`.
    #[arg(long)]
    pub conditional: Option<PathBuf>,
}

impl ConstraintArgs {
    fn load(&self) -> Result<Constraints> {
        let mut c = Constraints::default();
        if let Some(p) = &self.precedence {
            c.precedence = tsplib::parse_precedence(&read_text(p)?)
                .with_context(|| format!("reading {}", p.display()))?;
        }
        if let Some(p) = &self.conditional {
            c.conditional = tsplib::parse_overlay(&read_text(p)?)
                .with_context(|| format!("reading {}", p.display()))?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AffinityArgs {
    /// Representation profiles document.
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GraphgenArgs {
    /// Representation profiles document.
    #[arg(long, required_unless_present = "affinity", conflicts_with = "affinity")]
    pub profiles: Option<PathBuf>,
    /// Precomputed affinity document, instead of `--profiles`.
    #[arg(long)]
    pub affinity: Option<PathBuf>,
    /// Block cost document.
    #[arg(long)]
    pub costs: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub branch_points: usize,
    /// Comma-separated model-size budgets in bytes; 32 log-spaced by default.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<u64>>,
    /// Largest number of task graphs to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    /// Largest task count solved exactly under `--solver auto`.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub exact_cap: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OrderArgs {
    /// Cost matrix document.
    #[arg(long, required_unless_present = "graph", conflicts_with_all = ["graph", "costs"])]
    pub matrix: Option<PathBuf>,
    /// Task graph document, or a selection written by `graphgen`.
    #[arg(long, requires = "costs")]
    pub graph: Option<PathBuf>,
    /// Block cost document used with `--graph`.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "path")]
    pub objective: ObjectiveFlag,
    /// Largest task count solved exactly under `--solver auto`.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TradeoffArgs {
    /// Scored graphs written by `graphgen`.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<u64>>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// TSPLIB instance files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Largest instance solved exactly under `--solver auto`.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfilesDoc {
    pub schema_version: u32,
    pub tasks: Vec<RepresentationProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityDoc {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub task_ids: Vec<String>,
    /// `scores[rho][i][j]`.
    pub scores: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCostsDoc {
    pub schema_version: u32,
    /// Layer index of each branch point; evenly spaced when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_layers: Option<Vec<usize>>,
    pub layers: Vec<LayerCost>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostMatrixDoc {
    pub schema_version: u32,
    #[serde(default)]
    pub unit: CostUnit,
    pub rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub precedence: Vec<(usize, usize)>,
    #[serde(default)]
    pub conditional: Vec<Conditional>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub schema_version: u32,
    pub id: usize,
    #[serde(flatten)]
    pub score: GraphScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedDoc {
    pub schema_version: u32,
    pub budget: u64,
    pub id: usize,
    pub graph: TaskGraph,
    pub variety: f64,
    pub model_size: u64,
    pub exec_cost: f64,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema_version: u32,
    pub order: Vec<usize>,
    pub fitness: f64,
    pub solver: SolverKind,
    pub seed: Option<u64>,
    pub generations: usize,
}

impl From<OrderingSolution> for SolutionDoc {
    fn from(s: OrderingSolution) -> Self {
        SolutionDoc {
            schema_version: SCHEMA_VERSION,
            order: s.order,
            fitness: s.fitness,
            solver: s.solver,
            seed: s.seed,
            generations: s.generations,
        }
    }
}

/// Process exit code for an error: 3 for constraint violations, 4 for
/// capacity limits, 2 for everything else (bad input, schema, I/O).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tasksched::Error>() {
            return match e {
                tasksched::Error::Constraint(_) => 3,
                tasksched::Error::Capacity(_) => 4,
                _ => 2,
            };
        }
    }
    2
}

/// Runs a command and returns its exit code on success.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Affinity(a) => cmd_affinity(a).map(|_| 0),
        Command::Graphgen(a) => cmd_graphgen(a).map(|_| 0),
        Command::Order(a) => cmd_order(a).map(|_| 0),
        Command::Tradeoff(a) => cmd_tradeoff(a).map(|_| 0),
        Command::Bench(a) => cmd_bench(a).map(|report| if report.all_optimal() { 0 } else { 1 }),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    check_version(&value, path)?;
    serde_json::from_value(value).with_context(|| format!("{} does not match its schema", path.display()))
}

fn check_version(value: &serde_json::Value, path: &Path) -> Result<()> {
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(()),
        Some(v) => bail!(
            "{} has schema_version {v}, this build reads version {SCHEMA_VERSION}",
            path.display()
        ),
        None => bail!("{} has no schema_version field", path.display()),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn load_profiles(path: &Path) -> Result<Vec<RepresentationProfile>> {
    let doc: ProfilesDoc = read_doc(path)?;
    Ok(doc.tasks)
}

pub fn load_affinity(path: &Path) -> Result<AffinityTensor> {
    let doc: AffinityDoc = read_doc(path)?;
    let tensor = AffinityTensor::from_nested(&doc.scores)?;
    if tensor.n() != doc.n || tensor.num_branch_points() != doc.d {
        bail!("{}: n and d disagree with the score tensor", path.display());
    }
    Ok(tensor)
}

/// Architecture with `d` branch points from a block cost document.
pub fn load_architecture(path: &Path, d: usize) -> Result<Architecture> {
    let doc: BlockCostsDoc = read_doc(path)?;
    let num_layers = doc.layers.len();
    let config = match doc.branch_layers {
        Some(layers) => {
            if layers.len() != d {
                bail!(
                    "{} lists {} branch layers but {d} branch points are requested",
                    path.display(),
                    layers.len()
                );
            }
            BranchPointConfig::new(num_layers, layers)?
        }
        None => BranchPointConfig::evenly_spaced(d, num_layers)?,
    };
    Ok(Architecture::new(config, BlockCostProfile { layers: doc.layers })?)
}

fn load_graph(path: &Path) -> Result<TaskGraph> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let graph = match value.get("graph") {
        Some(g) => {
            check_version(&value, path)?;
            g.clone()
        }
        None => value,
    };
    serde_json::from_value(graph).with_context(|| format!("{} is not a task graph", path.display()))
}

pub fn read_scores(path: &Path) -> Result<Vec<GraphScore>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: not valid JSON", path.display(), i + 1))?;
        check_version(&value, path).with_context(|| format!("line {}", i + 1))?;
        let rec: ScoreRecord = serde_json::from_value(value)
            .with_context(|| format!("{}:{}: not a score record", path.display(), i + 1))?;
        if rec.id != out.len() {
            bail!("{}:{}: record id {} out of sequence", path.display(), i + 1, rec.id);
        }
        out.push(rec.score);
    }
    Ok(out)
}

pub fn scores_to_jsonl(scores: &[GraphScore]) -> String {
    let mut out = String::new();
    for (id, s) in scores.iter().enumerate() {
        let rec = ScoreRecord {
            schema_version: SCHEMA_VERSION,
            id,
            score: s.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn cmd_affinity(args: &AffinityArgs) -> Result<AffinityDoc> {
    let profiles = load_profiles(&args.profiles)?;
    let shape = validate_profiles(&profiles)?;
    let tensor = affinity_tensor(&profiles, Parallelism::Parallel)?;
    let doc = AffinityDoc {
        schema_version: SCHEMA_VERSION,
        n: tensor.n(),
        d: tensor.num_branch_points(),
        task_ids: profiles.iter().map(|p| p.task_id.clone()).collect(),
        scores: tensor.to_nested(),
    };
    let path = write_file(&args.out_dir, AFFINITY_FILE, &to_json(&doc))?;
    println!(
        "{} tasks, {} branch points, {} samples -> {}",
        doc.n,
        doc.d,
        shape.num_samples,
        path.display()
    );
    Ok(doc)
}

fn sweep_and_write(scores: &[GraphScore], budgets: Option<&[u64]>, out_dir: &Path) -> Result<TradeoffCurve> {
    let budgets = match budgets {
        Some(b) => b.to_vec(),
        None => default_budgets(scores, DEFAULT_BUDGET_COUNT),
    };
    let curve = sweep(scores, &budgets, Parallelism::Parallel)?;
    write_file(out_dir, TRADEOFF_FILE, &curve.to_table())?;
    let point = &curve.points[curve.selected];
    let selected = SelectedDoc {
        schema_version: SCHEMA_VERSION,
        budget: point.budget,
        id: point.graph_id,
        graph: point.best.graph.clone(),
        variety: point.best.variety,
        model_size: point.best.model_size,
        exec_cost: point.best.exec_cost,
        order: point.best.order.clone(),
    };
    write_file(out_dir, SELECTED_FILE, &to_json(&selected))?;
    println!(
        "{} budgets swept; selected graph {} (budget {}, variety {:.4}, size {}, cost {})",
        curve.points.len(),
        point.graph_id,
        point.budget,
        point.best.variety,
        point.best.model_size,
        point.best.exec_cost
    );
    Ok(curve)
}

pub fn cmd_graphgen(args: &GraphgenArgs) -> Result<(Vec<GraphScore>, TradeoffCurve)> {
    let affinity = match (&args.profiles, &args.affinity) {
        (Some(p), _) => affinity_tensor(&load_profiles(p)?, Parallelism::Parallel)?,
        (None, Some(a)) => load_affinity(a)?,
        (None, None) => bail!("one of --profiles or --affinity is required"),
    };
    let d = args.branch_points;
    if affinity.num_branch_points() != d {
        bail!(
            "the profiles have {} branch points but --branch-points is {d}",
            affinity.num_branch_points()
        );
    }
    let arch = load_architecture(&args.costs, d)?;
    let constraints = args.constraints.load()?;
    let graphs: Vec<TaskGraph> = enumerate_task_graphs(affinity.n(), d, args.cap)?.collect();
    let solver = args.solver.config(args.exact_cap);
    let scores = score_graphs(&graphs, &arch, &affinity, &constraints, &solver, Parallelism::Parallel)?;
    let path = write_file(&args.out_dir, SCORES_FILE, &scores_to_jsonl(&scores))?;
    println!("{} task graphs scored -> {}", scores.len(), path.display());
    let curve = sweep_and_write(&scores, args.budgets.as_deref(), &args.out_dir)?;
    Ok((scores, curve))
}

pub fn cmd_tradeoff(args: &TradeoffArgs) -> Result<TradeoffCurve> {
    let scores = read_scores(&args.scores)?;
    sweep_and_write(&scores, args.budgets.as_deref(), &args.out_dir)
}

/// Ordering problem described by `order` arguments.
pub fn order_problem(args: &OrderArgs) -> Result<OrderingProblem> {
    let mut constraints = args.constraints.load()?;
    let costs = match (&args.matrix, &args.graph, &args.costs) {
        (Some(m), _, _) => {
            let doc: CostMatrixDoc = read_doc(m)?;
            constraints.precedence.extend(doc.precedence);
            constraints.conditional.extend(doc.conditional);
            CostMatrix::new(doc.rows, doc.unit)?
        }
        (None, Some(g), Some(c)) => {
            let graph = load_graph(g)?;
            let arch = load_architecture(c, graph.num_branch_points())?;
            cost_matrix(&graph, &arch, CostUnit::Time)?
        }
        _ => bail!("give either --matrix or both --graph and --costs"),
    };
    Ok(OrderingProblem::new(
        costs,
        constraints.precedence,
        constraints.conditional,
        args.objective.into(),
    )?)
}

pub fn cmd_order(args: &OrderArgs) -> Result<SolutionDoc> {
    let problem = order_problem(args)?;
    let solution = args.solver.config(args.cap).solve(&problem, Parallelism::Parallel)?;
    let doc = SolutionDoc::from(solution);
    let path = write_file(&args.out_dir, ORDER_FILE, &to_json(&doc))?;
    let order: Vec<String> = doc.order.iter().map(usize::to_string).collect();
    println!("order {} fitness {} -> {}", order.join(" "), doc.fitness, path.display());
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub nodes: usize,
    pub precedence: usize,
    pub optimum: Option<f64>,
    pub found: f64,
    pub seconds: f64,
    pub solver: SolverKind,
}

impl BenchRow {
    /// Relative gap to the known optimum in percent.
    pub fn gap_percent(&self) -> Option<f64> {
        self.optimum.map(|opt| {
            if opt == 0.0 {
                if self.found == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                100.0 * (self.found - opt) / opt
            }
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<(PathBuf, String)>,
}

impl BenchReport {
    /// True when every file parsed and no known optimum was missed.
    pub fn all_optimal(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.gap_percent().is_none_or(|g| g <= 0.0))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("name\tnodes\tpre\toptimal\tfound\tgap_pct\tseconds\tsolver\n");
        for r in &self.rows {
            let opt = r.optimum.map_or("-".to_string(), |o| o.to_string());
            let gap = r.gap_percent().map_or("-".to_string(), |g| format!("{g:.2}"));
            let solver = match r.solver {
                SolverKind::Exact => "exact",
                SolverKind::Genetic => "ga",
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}",
                r.name, r.nodes, r.precedence, opt, r.found, gap, r.seconds, solver
            );
        }
        out
    }
}

fn bench_one(path: &Path, solver: &SolverConfig) -> Result<BenchRow> {
    let inst = tsplib::parse(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let problem = inst.to_problem(&[])?;
    let name = if inst.name.is_empty() {
        path.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned())
    } else {
        inst.name.clone()
    };
    let start = Instant::now();
    let solution = solver.solve(&problem, Parallelism::Parallel)?;
    Ok(BenchRow {
        optimum: tsplib::known_optimum(&name),
        name,
        nodes: inst.dimension,
        precedence: inst.core_precedence_count(),
        found: solution.fitness,
        seconds: start.elapsed().as_secs_f64(),
        solver: solution.solver,
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let solver = args.solver.config(args.cap);
    let mut report = BenchReport::default();
    for path in &args.files {
        match bench_one(path, &solver) {
            Ok(row) => report.rows.push(row),
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                report.failures.push((path.clone(), format!("{e:#}")));
            }
        }
    }
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = &args.out_dir {
        write_file(dir, BENCH_FILE, &table)?;
    }
    Ok(report)
}
