//! `ripforge` command-line front end.
//!
//! Exit codes: 0 on success (or a passing experiment), 1 on runtime errors
//! and failing experiments, 2 on usage errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use ripforge::certifiers::CertifierKind;
use ripforge::distributions::{DistKind, SubGaussianDist};
use ripforge::graphs::{er_generate, plant, DenseSeed, PlantedMeta};
use ripforge::harness::{resolve_params, run_named, ExperimentKind, RunOptions, Sinks, Verdict};
use ripforge::io;
use ripforge::reduction::{reduce, witness_quadratic_form, PRule, ReductionConfig};
use ripforge::rip::RipParams;
use ripforge::rng;

#[derive(Parser, Debug)]
#[command(name = "ripforge", version, about = "RIP certification, planted dense subgraphs and the graph-to-matrix reduction")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, env = "RIPFORGE_OUT", default_value = "runs")]
    out: PathBuf,
    /// Overwrite an existing run directory.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random design matrix or graph.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a certifier on a matrix file and print the outcome as JSON.
    Certify(CertifyArgs),
    /// Reduce a graph file to a design matrix.
    Reduce(ReduceArgs),
    /// Run a Monte Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    Matrix(GenMatrixArgs),
    Graph(GenGraphArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MatrixFormat {
    Ripm,
    Csv,
}

#[derive(Args, Debug)]
struct GenMatrixArgs {
    #[arg(long, value_parser = parse_dist)]
    dist: DistKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ripm")]
    format: MatrixFormat,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PlantKind {
    Clique,
    RandomDense,
}

#[derive(Args, Debug)]
struct GenGraphArgs {
    #[arg(long)]
    m: usize,
    /// Plant a dense subgraph; omit for an Erdős–Rényi graph.
    #[arg(long, value_enum)]
    plant: Option<PlantKind>,
    #[arg(long, required_if_eq("plant", "clique"), required_if_eq("plant", "random-dense"))]
    kappa: Option<usize>,
    #[arg(long, required_if_eq("plant", "random-dense"))]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Matrix file (RIPM, or CSV when the name ends in `.csv`).
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_parser = parse_certifier)]
    certifier: CertifierKind,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    theta: f64,
    /// Sub-Gaussian parameter for incoherence-paper.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    graph: PathBuf,
    /// ReductionConfig JSON; individual flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long = "L")]
    block_factor: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Explicit p; defaults to p = n.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_parser = parse_dist)]
    dist: Option<DistKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Also run a certifier on the output and report the distinguisher bit.
    #[arg(long, value_parser = parse_certifier, requires = "theta")]
    certifier: Option<CertifierKind>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Report the witness quadratic form; needs the planted-set sidecar.
    #[arg(long)]
    witness: bool,
    /// Planted-set sidecar; defaults to the graph path with `.meta.json`.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Dump A, Z and the sampled vertex sets.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_parser = parse_experiment)]
    name: ExperimentKind,
    /// Experiment parameters as a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    /// Override one parameter, e.g. `--set reduction.beta=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write records as CSV.
    #[arg(long)]
    csv: bool,
    /// Skip the JSON-lines record file.
    #[arg(long)]
    no_records: bool,
    /// Exit 0 even when the verdict is fail.
    #[arg(long)]
    report_only: bool,
}

fn parse_dist(s: &str) -> Result<DistKind, String> {
    s.parse().map_err(|e: ripforge::Error| e.to_string())
}

fn parse_certifier(s: &str) -> Result<CertifierKind, String> {
    s.parse().map_err(|e: ripforge::Error| e.to_string())
}

fn parse_experiment(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: ripforge::Error| e.to_string())
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ripforge::Error> for Failure {
    fn from(e: ripforge::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<ExitCode, Failure>;

/// Provenance echo written into every run directory.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    master_seed: u64,
    output_dir: &'a Path,
    params: Value,
}

fn run_dir(cli: &Cli, name: &str, seed: u64) -> anyhow::Result<PathBuf> {
    let dir = cli.out.join(format!("{name}-{seed}"));
    if dir.exists() && !cli.force {
        bail!("{} already exists; pass --force to overwrite", dir.display());
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Writes a line to stdout, ignoring a closed pipe (`ripforge ... | head`).
fn emit(s: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn echo_config(dir: &Path, command: &str, seed: u64, params: Value) -> anyhow::Result<()> {
    write_json(&dir.join("config.json"), &RunConfig { command, master_seed: seed, output_dir: dir, params })
}

fn cmd_gen_matrix(cli: &Cli, a: &GenMatrixArgs) -> CmdResult {
    if a.n == 0 || a.p == 0 {
        return Err(Failure::Usage(anyhow!("--n and --p must be positive")));
    }
    let dir = run_dir(cli, "gen-matrix", a.seed)?;
    let mut r = rng::stream(a.seed, "gen-matrix", 0);
    let x = SubGaussianDist::new(a.dist).matrix_sample(a.n, a.p, &mut r)?;
    let path = match a.format {
        MatrixFormat::Ripm => {
            let path = dir.join("matrix.ripm");
            io::save_matrix(&path, &x)?;
            path
        }
        MatrixFormat::Csv => {
            let path = dir.join("matrix.csv");
            io::write_matrix_csv(BufWriter::new(File::create(&path).context("creating matrix.csv")?), &x)?;
            path
        }
    };
    let params = json!({"dist": a.dist, "n": a.n, "p": a.p, "format": format!("{:?}", a.format).to_lowercase()});
    write_json(&dir.join("matrix.meta.json"), &params)?;
    echo_config(&dir, "gen matrix", a.seed, params)?;
    emit(path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_graph(cli: &Cli, a: &GenGraphArgs) -> CmdResult {
    let mut r = rng::stream(a.seed, "gen-graph", 0);
    let seed = match a.plant {
        None => None,
        Some(PlantKind::Clique) => Some(DenseSeed::clique(a.kappa.expect("required by clap"))),
        Some(PlantKind::RandomDense) => Some(
            DenseSeed::random_dense(a.kappa.expect("required by clap"), a.epsilon.expect("required by clap"), &mut r)
                .map_err(|e| Failure::Usage(e.into()))?,
        ),
    };
    if a.m == 0 || seed.as_ref().is_some_and(|s| s.kappa > a.m) {
        return Err(Failure::Usage(anyhow!("need m >= 1 and kappa <= m")));
    }
    let dir = run_dir(cli, "gen-graph", a.seed)?;
    let inst = match &seed {
        None => er_generate(a.m, &mut r)?,
        Some(s) => plant(a.m, s, &mut r)?,
    };
    let path = dir.join("graph.txt");
    io::save_graph(&path, &inst.graph)?;
    if let Some(meta) = inst.metadata() {
        write_json(&dir.join("graph.meta.json"), &meta)?;
    }
    let params = json!({"m": a.m, "plant": a.plant.map(|p| format!("{p:?}")), "kappa": a.kappa, "epsilon": a.epsilon});
    echo_config(&dir, "gen graph", a.seed, params)?;
    emit(path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_any_matrix(path: &Path) -> anyhow::Result<ripforge::DesignMatrix> {
    if path.extension().is_some_and(|e| e == "csv") {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(io::read_matrix_csv(f)?)
    } else {
        Ok(io::load_matrix(path).with_context(|| format!("reading {}", path.display()))?)
    }
}

fn cmd_certify(a: &CertifyArgs) -> CmdResult {
    let params = RipParams::new(a.k, a.theta).map_err(|e| Failure::Usage(e.into()))?;
    let x = load_any_matrix(&a.matrix)?;
    let outcome = a.certifier.build(a.sigma).certify(&x, params)?;
    emit(serde_json::to_string(&outcome).map_err(anyhow::Error::from)?);
    Ok(ExitCode::SUCCESS)
}

fn reduction_config(a: &ReduceArgs, m: usize) -> anyhow::Result<ReductionConfig> {
    let mut cfg: ReductionConfig = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let kappa = a.kappa.ok_or_else(|| anyhow!("--kappa is required without --config"))?;
            let dist = a.dist.ok_or_else(|| anyhow!("--dist is required without --config"))?;
            ReductionConfig::new(m, kappa, 0.0, dist)
        }
    };
    if let Some(k) = a.kappa {
        cfg.kappa = k;
    }
    if let Some(l) = a.block_factor {
        cfg.block_factor = l;
    }
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
    if let Some(p) = a.p {
        cfg.p_rule = PRule::Explicit(p);
    }
    if let Some(d) = a.dist {
        cfg.distribution = d;
    }
    if a.epsilon.is_some() {
        cfg.epsilon = a.epsilon;
    }
    if cfg.m != m {
        bail!("config says m = {}, graph has {m} vertices", cfg.m);
    }
    Ok(cfg)
}

fn sidecar_path(a: &ReduceArgs) -> PathBuf {
    a.sidecar.clone().unwrap_or_else(|| a.graph.with_extension("meta.json"))
}

fn write_ids(path: &Path, ids: &[usize]) -> anyhow::Result<()> {
    write_json(path, &ids)
}

fn cmd_reduce(cli: &Cli, a: &ReduceArgs) -> CmdResult {
    let g = io::load_graph(&a.graph).with_context(|| format!("reading {}", a.graph.display()))?;
    let cfg = reduction_config(a, g.m())?;
    let meta: Option<PlantedMeta> = if a.witness {
        let path = sidecar_path(a);
        let text = fs::read_to_string(&path).map_err(|e| {
            anyhow!(
                "--witness is a diagnostic that needs the planted set, but the sidecar {} could not be read: {e}",
                path.display()
            )
        })?;
        Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        None
    };

    let mut r = rng::stream(a.seed, "reduce", 0);
    let (x, trace) = reduce(&g, &cfg, &mut r)?;
    let dir = run_dir(cli, "reduce", a.seed)?;
    io::save_matrix(&dir.join("X.ripm"), &x)?;

    let mut report = Map::new();
    report.insert("dims".into(), serde_json::to_value(trace.dims).map_err(anyhow::Error::from)?);
    if let (Some(c), Some(theta)) = (a.certifier, a.theta) {
        let params = RipParams::new(trace.dims.k, theta)?;
        let outcome = c.build(a.sigma).certify(&x, params)?;
        report.insert("certifier".into(), json!(c));
        report.insert("outcome".into(), serde_json::to_value(outcome).map_err(anyhow::Error::from)?);
        report.insert("distinguisher".into(), json!(u8::from(!outcome.certified)));
    }
    if let Some(meta) = &meta {
        let epsilon = cfg.epsilon.unwrap_or(meta.epsilon);
        let w = witness_quadratic_form(&trace, &meta.planted_set, epsilon)?;
        report.insert(
            "witness".into(),
            json!({"value": w.value, "k1": w.k1, "rows": w.rows.len(), "columns": w.columns, "warning": w.warning}),
        );
    }
    if a.trace {
        let tdir = dir.join("trace");
        fs::create_dir_all(&tdir).context("creating trace directory")?;
        io::save_matrix(&tdir.join("A.ripm"), &trace.a_matrix()?)?;
        io::save_matrix(&tdir.join("Z.ripm"), &trace.z_matrix()?)?;
        write_ids(&tdir.join("U.json"), &trace.u)?;
        write_ids(&tdir.join("W.json"), &trace.w)?;
        if let Some(meta) = &meta {
            write_ids(&tdir.join("K.json"), &meta.planted_set)?;
        }
    }
    write_json(&dir.join("report.json"), &report)?;
    let params = json!({"graph": a.graph, "reduction": cfg, "certifier": a.certifier, "theta": a.theta, "witness": a.witness});
    echo_config(&dir, "reduce", a.seed, params)?;
    emit(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    Ok(ExitCode::SUCCESS)
}

/// Sets `key` (dotted path) in `obj` to `raw`, parsed as JSON when possible.
fn apply_override(obj: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| anyhow!("expected KEY=VALUE, got '{assignment}'"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = obj;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = cur.as_object_mut().ok_or_else(|| anyhow!("'{key}' does not name an object field"))?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs) -> CmdResult {
    let mut params = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(anyhow!("parsing {}: {e}", path.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !params.is_object() {
        return Err(Failure::Usage(anyhow!("experiment config must be a JSON object")));
    }
    if let Some(t) = a.trials {
        params["trials"] = json!(t);
    }
    for o in &a.overrides {
        apply_override(&mut params, o).map_err(Failure::Usage)?;
    }
    let params = resolve_params(a.name, params).map_err(|e| Failure::Usage(e.into()))?;
    if params["trials"] == json!(0) {
        return Err(Failure::Usage(anyhow!("trials must be at least 1")));
    }

    let dir = run_dir(cli, a.name.as_str(), a.seed)?;
    echo_config(&dir, &format!("experiment {}", a.name), a.seed, params.clone())?;
    let mut records = if a.no_records {
        None
    } else {
        Some(BufWriter::new(File::create(dir.join("records.jsonl")).context("creating records.jsonl")?))
    };
    let mut csv = if a.csv { Some(BufWriter::new(File::create(dir.join("records.csv")).context("creating records.csv")?)) } else { None };
    let sinks = Sinks {
        records: records.as_mut().map(|w| w as &mut dyn Write),
        csv: csv.as_mut().map(|w| w as &mut dyn Write),
    };
    let summary = run_named(a.name, params, a.seed, RunOptions { jobs: a.jobs }, sinks)?;
    if let Some(w) = records.as_mut() {
        w.flush().context("writing records.jsonl")?;
    }
    if let Some(w) = csv.as_mut() {
        w.flush().context("writing records.csv")?;
    }
    write_json(&dir.join("summary.json"), &summary)?;
    emit(summary.to_json_pretty()?);
    eprintln!("{}: verdict {:?}, outputs in {}", a.name, summary.verdict, dir.display());
    Ok(match summary.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail if a.report_only => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    })
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Gen(GenCommand::Matrix(a)) => cmd_gen_matrix(cli, a),
        Command::Gen(GenCommand::Graph(a)) => cmd_gen_graph(cli, a),
        Command::Certify(a) => cmd_certify(a),
        Command::Reduce(a) => cmd_reduce(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
