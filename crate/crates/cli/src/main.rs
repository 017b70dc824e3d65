//! `symprig`: experiment drivers writing CSV tables with JSON sidecars.
//!
//! Exit status is 0 when every checked property holds, 2 when one fails and
//! 1 on any error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use symprig::bracket::BracketOptions;
use symprig::experiments::{
    bracket_table, config_digest, dn_sweep, expansion_table, extremal_demo, flow_order_table, inequality_sweep,
    khl_sweep, l1_sweep, qn_table, qstate_table, remainder_table, scaling_sweep, scheme_table, ExperimentConfig,
    FieldSpec, Metadata, Outcome,
};
use symprig::manifold::{NormKind, ScalarField};
use symprig::scheme::{by_name, by_order};

#[derive(Debug, Parser)]
#[command(name = "symprig", version, about = "Poisson brackets, splitting integrators and the Reeb-graph quasi-state")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Uniform,
    L1,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Uniform => NormKind::Uniform,
            NormArg::L1 => NormKind::L1,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    /// CSV destination; the metadata goes next to it with a `.json` extension.
    /// Without it the CSV is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Field spec JSON (`{"manifold": "sphere", "level": 4, "expr": "..."}`).
    #[arg(long = "spec", required = true)]
    specs: Vec<PathBuf>,
    /// Overrides the sphere level of every spec.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    allow_numeric: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Experiment configuration JSON; unset keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    level: Option<u32>,
    /// Scheme order (1 Lie–Trotter, 2 Strang, even orders Yoshida).
    #[arg(long)]
    order: Option<u32>,
    /// Single N instead of the configured range.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allow_numeric: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Subcommand)]
enum SchemeAction {
    /// Prints the merged coefficients of a scheme.
    Show {
        #[arg(long, conflicts_with = "name")]
        order: Option<u32>,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quasi-state ζ of a sphere field and the counts of its Reeb graph.
    Qstate {
        #[command(flatten)]
        fields: FieldArgs,
        /// Graphviz rendering of the Reeb graph.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Poisson bracket `{F, G}` at every vertex.
    Bracket {
        #[command(flatten)]
        fields: FieldArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Monomial norms and `Q_N(F, G)`.
    Qn {
        #[command(flatten)]
        fields: FieldArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "uniform")]
        norm: NormArg,
        #[command(flatten)]
        output: Output,
    },
    /// Splitting scheme coefficients.
    Scheme {
        #[command(subcommand)]
        action: SchemeAction,
    },
    /// Fitted convergence order of a splitting scheme.
    FlowOrder(SweepArgs),
    /// Remainder of the generating Hamiltonian against `Q_N t^{N−1}`.
    Remainder(SweepArgs),
    /// Composition expansion residual orders and the flow-equivalence gap.
    Expansion(SweepArgs),
    /// `Π / Q_N^{1/N}` over a perturbed family, with the scaling check.
    Inequality(SweepArgs),
    /// Upper and lower tube-distance estimates over the ε grid.
    Dn(SweepArgs),
    /// Landau–Hadamard–Kolmogorov type ratios over a family.
    Khl(SweepArgs),
    /// `Π` against `Q_N` in `L₁` (open problem data, not a verified bound).
    L1(SweepArgs),
    /// ζ of the extremal pair `1 − 2x²`, `1 − 2y²` and their sum.
    ExtremalDemo {
        #[arg(long, default_value_t = 5)]
        level: u32,
        #[command(flatten)]
        output: Output,
    },
}

fn load_fields(args: &FieldArgs, count: usize) -> Result<Vec<ScalarField>> {
    if args.specs.len() != count {
        bail!("expected {count} --spec argument(s), got {}", args.specs.len());
    }
    args.specs
        .iter()
        .map(|path| {
            let mut spec = FieldSpec::load(path)?;
            if args.level.is_some() {
                spec.level = args.level;
            }
            spec.build().with_context(|| format!("{}: field `{}`", path.display(), spec.expr))
        })
        .collect()
}

fn specs_echo(args: &FieldArgs) -> Result<serde_json::Value> {
    let specs = args.specs.iter().map(|p| FieldSpec::load(p)).collect::<symprig::Result<Vec<_>>>()?;
    Ok(serde_json::json!({ "specs": specs, "level": args.level, "allow_numeric": args.allow_numeric }))
}

fn sweep_config(args: &SweepArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(level) = args.level {
        cfg.level = level;
    }
    if let Some(order) = args.order {
        cfg.scheme = by_order(order)?.label;
    }
    if let Some(n) = args.n {
        cfg.n_range = vec![n];
    }
    if let Some(norm) = args.norm {
        cfg.norm = norm.into();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.allow_numeric |= args.allow_numeric;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes or prints the table, reports the checks and returns whether all held.
fn emit(
    outcome: &Outcome,
    output: &Output,
    config: serde_json::Value,
    config_hash: String,
    start: Instant,
) -> Result<bool> {
    emit_all(std::slice::from_ref(outcome), output, config, config_hash, start)
}

/// Like [`emit`] for several tables: the first goes to `--out`, the others
/// next to it with their operation name appended to the file stem.
fn emit_all(
    outcomes: &[Outcome],
    output: &Output,
    config: serde_json::Value,
    config_hash: String,
    start: Instant,
) -> Result<bool> {
    for (i, outcome) in outcomes.iter().enumerate() {
        match &output.out {
            Some(path) => {
                let path = if i == 0 { path.clone() } else { suffixed(path, &outcome.table.op) };
                let metadata = Metadata {
                    op: outcome.table.op.clone(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    config_hash: config_hash.clone(),
                    config: config.clone(),
                    tau: outcome.table.tau,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    assertions: outcome.assertions.clone(),
                };
                ensure_parent(&path)?;
                outcome.table.write_files(&path, &metadata).with_context(|| format!("writing {}", path.display()))?;
            }
            None => {
                print_csv(outcome, i > 0)?;
            }
        }
        report_checks(outcome);
    }
    Ok(outcomes.iter().all(Outcome::passed))
}

/// Prints the CSV, after a blank line when it follows another table; a
/// reader that closed the pipe early is not an error.
fn print_csv(outcome: &Outcome, separate: bool) -> Result<()> {
    let mut text = if separate { String::from("\n") } else { String::new() };
    text.push_str(&outcome.table.to_csv_string());
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn report_checks(outcome: &Outcome) {
    for a in &outcome.assertions {
        eprintln!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
}

/// `dir/name.csv` → `dir/name_suffix.csv`.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let start = Instant::now();
    match cli.command {
        Command::Qstate { fields, dot, output } => {
            let f = load_fields(&fields, 1)?.remove(0);
            let (graph, outcome) = qstate_table(&f)?;
            if let Some(path) = dot {
                ensure_parent(&path)?;
                graph.write_dot(std::fs::File::create(&path)?)?;
            }
            let echo = specs_echo(&fields)?;
            emit(&outcome, &output, echo.clone(), config_digest(&echo), start)
        }
        Command::Bracket { fields, output } => {
            let fg = load_fields(&fields, 2)?;
            let outcome = bracket_table(&fg[0], &fg[1])?;
            let echo = specs_echo(&fields)?;
            emit(&outcome, &output, echo.clone(), config_digest(&echo), start)
        }
        Command::Qn { fields, n, norm, output } => {
            let fg = load_fields(&fields, 2)?;
            let opts = BracketOptions { allow_numeric: fields.allow_numeric };
            let outcome = qn_table(&fg[0], &fg[1], n, norm.into(), opts)?;
            let mut echo = specs_echo(&fields)?;
            echo["n"] = n.into();
            echo["norm"] = format!("{norm:?}").to_lowercase().into();
            emit(&outcome, &output, echo.clone(), config_digest(&echo), start)
        }
        Command::Scheme { action: SchemeAction::Show { order, name, output } } => {
            let scheme = match (order, name) {
                (Some(o), _) => by_order(o)?,
                (None, Some(n)) => by_name(&n)?,
                (None, None) => bail!("`scheme show` needs --order or --name"),
            };
            println!("{scheme}");
            let outcome = scheme_table(&scheme);
            let echo = serde_json::json!({ "scheme": scheme });
            match output.out {
                Some(_) => emit(&outcome, &output, echo.clone(), config_digest(&echo), start),
                None => Ok(outcome.passed()),
            }
        }
        Command::ExtremalDemo { level, output } => {
            let (demo, outcome) = extremal_demo(level)?;
            println!("zeta(F)   = {:.6}", demo.zeta_f);
            println!("zeta(G)   = {:.6}", demo.zeta_g);
            println!("zeta(F+G) = {:.6}", demo.zeta_sum);
            println!("Pi(F,G)   = {:.6}", demo.pi);
            let echo = serde_json::json!({ "level": level });
            match output.out {
                Some(_) => emit(&outcome, &output, echo.clone(), config_digest(&echo), start),
                None => {
                    report_checks(&outcome);
                    Ok(outcome.passed())
                }
            }
        }
        Command::FlowOrder(args) => sweep(&args, start, |cfg| Ok(vec![flow_order_table(cfg)?])),
        Command::Remainder(args) => sweep(&args, start, |cfg| Ok(vec![remainder_table(cfg)?])),
        Command::Expansion(args) => sweep(&args, start, |cfg| Ok(vec![expansion_table(cfg)?])),
        Command::Inequality(args) => sweep(&args, start, |cfg| Ok(vec![inequality_sweep(cfg)?, scaling_sweep(cfg)?])),
        Command::Dn(args) => sweep(&args, start, |cfg| Ok(vec![dn_sweep(cfg)?])),
        Command::Khl(args) => sweep(&args, start, |cfg| Ok(vec![khl_sweep(cfg)?])),
        Command::L1(args) => sweep(&args, start, |cfg| Ok(vec![l1_sweep(cfg)?])),
    }
}

fn sweep(
    args: &SweepArgs,
    start: Instant,
    op: impl Fn(&ExperimentConfig) -> symprig::Result<Vec<Outcome>>,
) -> Result<bool> {
    let cfg = sweep_config(args)?;
    let outcomes = op(&cfg)?;
    emit_all(&outcomes, &args.output, serde_json::to_value(&cfg)?, cfg.hash(), start)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
