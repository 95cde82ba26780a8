mod report;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use report::{matrix_from_rows, SolveReport};
use saasel_core::bench::{
    mass_spring, random_network, run_experiment, run_method, BenchError, MassSpringSpec, Method,
    MethodConfig, RandomNetworkSpec,
};
use saasel_core::misdp::BigM;
use saasel_core::model::{selection_to_matrices, DynamicNetwork, LogisticConstraint};
use saasel_core::sdp::{backend_by_name, SolverTolerances, BACKENDS};
use saasel_core::sofs::{stability_margin, verify_closed_loop};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "saasel",
    version,
    about = "Minimum sensor/actuator selection for static output feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark model as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Find a minimum stabilizing selection.
    Solve(SolveArgs),
    /// Check a gain against a model.
    Verify(VerifyArgs),
    /// Run every method on the mass-spring chain and print the comparison.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum GenKind {
    MassSpring {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        stiffness: f64,
        #[arg(long, default_value_t = 0.0)]
        damping: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Random {
        #[arg(long, default_value_t = 3)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long = "L1")]
    l1: Option<f64>,
    #[arg(long = "L2")]
    l2: Option<f64>,
    #[arg(long = "L3")]
    l3: Option<f64>,
    /// Strictness of the stability LMI.
    #[arg(long)]
    eps1: Option<f64>,
    /// Lower bound on the Lyapunov matrix.
    #[arg(long)]
    eps2: Option<f64>,
    /// Limit on the 2^(2N) bit patterns scanned by the search methods.
    #[arg(long)]
    max_candidates: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    logistic: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Sigma trace CSV (search methods) or node log CSV (misdp).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// A solve report, or any JSON object with `selection` and `gain`.
    #[arg(long)]
    gain: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_delimiter = ',', default_value = "misdp,bsa-sdp,bsa-pbh")]
    methods: Vec<Method>,
    /// Replace the chain with a seeded random network of `n` nodes.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Infeasible(String),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn bench_failure(e: BenchError) -> Failure {
    if e.is_numerical() {
        Failure::Numerical(e.into())
    } else {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) | Failure::Numerical(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible(why) => eprintln!("infeasible: {why}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn cmd_gen(kind: GenKind) -> Result<(), Failure> {
    let (net, out) = match kind {
        GenKind::MassSpring {
            n,
            mass,
            stiffness,
            damping,
            output,
        } => {
            let spec = MassSpringSpec {
                mass: vec![mass; n],
                stiffness: vec![stiffness; n + 1],
                damping: vec![damping; n],
            };
            (
                mass_spring(&spec).map_err(|e| Failure::Usage(e.into()))?,
                output,
            )
        }
        GenKind::Random {
            nodes,
            seed,
            output,
        } => (
            random_network(&RandomNetworkSpec::new(nodes, seed))
                .map_err(|e| Failure::Usage(e.into()))?,
            output,
        ),
    };
    write_or_print(out.as_deref(), &(net.to_json() + "\n"))
}

fn config(flags: &SolverFlags) -> Result<MethodConfig, Failure> {
    let mut cfg = MethodConfig::default();
    let defaults = SolverTolerances::default();
    cfg.tol = SolverTolerances {
        eps_lmi: flags.eps1.unwrap_or(defaults.eps_lmi),
        eps_pd: flags.eps2.unwrap_or(defaults.eps_pd),
        ..defaults
    };
    cfg.tol.validate().map_err(|e| anyhow!(e))?;
    cfg.search.tol = cfg.tol;
    let d = BigM::default();
    cfg.big_m = BigM {
        l1: flags.l1.unwrap_or(d.l1),
        l2: flags.l2.unwrap_or(d.l2),
        l3: flags.l3.unwrap_or(d.l3),
    };
    if let Some(limit) = flags.max_candidates {
        cfg.search.enumerate.max_patterns = limit;
    }
    if let Ok(name) = std::env::var("SAASEL_BACKEND") {
        let backend = backend_by_name(&name).ok_or_else(|| {
            anyhow!(
                "unknown SAASEL_BACKEND {name:?}; available: {}",
                BACKENDS.join(", ")
            )
        })?;
        let backend: Arc<dyn saasel_core::sdp::ConicBackend> = Arc::from(backend);
        cfg.search.backend = backend.clone();
        cfg.bnb.backend = backend;
    }
    Ok(cfg)
}

fn load_model(path: &Path) -> Result<DynamicNetwork, Failure> {
    Ok(DynamicNetwork::from_json(&read(path)?)
        .with_context(|| format!("parsing model {}", path.display()))?)
}

fn load_logistic(path: Option<&Path>, nodes: usize) -> Result<LogisticConstraint, Failure> {
    let lc = match path {
        Some(p) => LogisticConstraint::from_json(&read(p)?)
            .with_context(|| format!("parsing logistic constraint {}", p.display()))?,
        None => LogisticConstraint::none(),
    };
    lc.check_nodes(nodes).context("logistic constraint")?;
    Ok(lc)
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let net = load_model(&a.model)?;
    let lc = load_logistic(a.logistic.as_deref(), net.node_count())?;
    let cfg = config(&a.solver)?;
    let out = run_method(&net, &lc, a.method, &cfg).map_err(bench_failure)?;

    if let Some(path) = &a.trace {
        let csv = match (&out.trace, a.method) {
            (Some(t), _) => t.to_csv(),
            (None, Method::Misdp) => saasel_core::misdp::node_log_csv(&out.node_log),
            (None, _) => String::new(),
        };
        write_or_print(Some(path), &csv)?;
    }

    let report = SolveReport::from_outcome(&net, &out).map_err(|e| Failure::Numerical(e.into()))?;
    write_or_print(a.output.as_deref(), &(report.to_json() + "\n"))?;
    match (&out.selection, &report.spectral_abscissa) {
        (Some(_), Some(alpha)) if *alpha < 0.0 => Ok(()),
        (Some(s), _) => Err(Failure::Numerical(anyhow!(
            "selection {s} was returned but its gain does not verify"
        ))),
        (None, _) => Err(Failure::Infeasible(
            out.diagnostic
                .unwrap_or_else(|| "no stabilizing selection".into()),
        )),
    }
}

#[derive(serde::Deserialize)]
struct GainFile {
    selection: saasel_core::model::Selection,
    gain: Vec<Vec<f64>>,
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let net = load_model(&a.model)?;
    let file: GainFile = serde_json::from_str(&read(&a.gain)?)
        .with_context(|| format!("parsing gain file {}", a.gain.display()))?;
    let s = file.selection;
    if s.node_count() != net.node_count() {
        return Err(anyhow!(
            "selection covers {} nodes, model has {}",
            s.node_count(),
            net.node_count()
        )
        .into());
    }
    let f = matrix_from_rows(&file.gain, net.nu(), net.ny())?;
    let sm = selection_to_matrices(&s, &net).context("selection")?;
    let projected = &sm.pi * &f * &sm.gamma;
    let f = if projected != f {
        log::warn!("gain touches inactive channels; projecting onto the selection");
        projected
    } else {
        f
    };
    let spec = verify_closed_loop(&net, &s, &f).context("closed-loop spectrum")?;
    let closed = net.a() + net.b() * &f * net.c();
    let margin = stability_margin(&closed, &SolverTolerances::default());
    println!("spectral_abscissa {:e}", spec.spectral_abscissa);
    if spec.spectral_abscissa < 0.0 {
        if !spec.is_stable_by(margin) {
            log::warn!("abscissa is within {margin:e} of the imaginary axis");
        }
        Ok(())
    } else {
        Err(Failure::Infeasible(format!(
            "closed loop is not Hurwitz (abscissa {:e})",
            spec.spectral_abscissa
        )))
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let net = match a.seed {
        Some(seed) => random_network(&RandomNetworkSpec::new(a.n, seed)),
        None => mass_spring(&MassSpringSpec::uniform(a.n).with_damping(a.damping)),
    }
    .map_err(|e| Failure::Usage(e.into()))?;
    let n = net.node_count();
    let lc = if n >= 2 {
        LogisticConstraint::at_least(n, 2, 2)
    } else {
        LogisticConstraint::none()
    };
    let cfg = config(&a.solver)?;
    let report = run_experiment(&net, &lc, &a.methods, &cfg);
    print!("{}", report.table_csv());
    if let Some(p) = &a.output {
        write_or_print(Some(p), &(report.to_json() + "\n"))?;
    }
    if let Some(p) = &a.trace {
        write_or_print(Some(p), &report.sigma_trace_csv())?;
    }
    for r in &report.rows {
        if let Some(m) = &r.message {
            eprintln!("{}: {m}", r.method);
        }
    }
    Ok(())
}
