//! `noh` command-line harness.
//!
//! Exit codes: 0 on success, 1 for invalid arguments or configuration,
//! 2 for runtime failures (unreadable input, unwritable output).

mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noh::experiment::{
    compare_models, fit_grid, simulate, write_fit_report, write_fit_rows, ExperimentConfig, ExperimentError, FitRow,
    ModelSpec,
};
use noh::generators::GeneratorSpec;
use noh::graph::load_edge_list;
use noh::theory::{
    expected_size, log_stationary_pmf, rate_matrix, stationary_pmf, variance_size, TheoryError, TheoryParams,
};
use noh::NohParams;

use config::Settings;

const DEFAULT_MODELS: [&str; 4] =
    ["sf:m=5", "sw:k=4,p=0.4", "nve:mu=2,sigma=0.5", "noh:lambda=0.01,mu=0.013,init=sf,m=auto"];

#[derive(Parser, Debug)]
#[command(name = "noh", version, about = "Simulate and fit networks whose vertices go online and hidden")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key = value experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (simulate) or report file location (theory, fit, compare).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run NOH replicas and write size series, online degrees and snapshots.
    Simulate(SimulateArgs),
    /// Print the stationary distribution of the online count.
    Theory(TheoryArgs),
    /// Score a (lambda, mu) grid against a real network, best fit first.
    Fit(FitArgs),
    /// Compare models against a real network.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default)]
struct Protocol {
    #[arg(long)]
    burn_in: Option<f64>,
    /// Measurement window start.
    #[arg(long)]
    t_lo: Option<f64>,
    /// Measurement window end.
    #[arg(long)]
    t_hi: Option<f64>,
    /// Spacing of degree snapshots.
    #[arg(long)]
    sample_interval: Option<f64>,
    /// Spacing of online-count samples.
    #[arg(long)]
    size_interval: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Cap on degree snapshots per replica.
    #[arg(long)]
    max_snapshots: Option<usize>,
    /// `all` or the initial online fraction.
    #[arg(long)]
    initial_online: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    /// Initial graph, e.g. `sw:k=20,p=0.3`, `sf:m=5`, `nve:mu=2,sigma=0.5`.
    #[arg(long)]
    generator: Option<String>,
    /// Initial graph from an edge list instead of a generator.
    #[arg(long, conflicts_with = "generator")]
    edges: Option<PathBuf>,
    /// Number of vertices of a generated graph.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated instants for JSON snapshots.
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    #[command(flatten)]
    protocol: Protocol,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct TheoryArgs {
    #[arg(long)]
    n0: u64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    mu: f64,
    /// Also write the birth-death rate matrix as CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Real network edge list.
    #[arg(long)]
    edges: PathBuf,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    /// Comma-separated mu values.
    #[arg(long, value_delimiter = ',', required = true)]
    mu: Vec<f64>,
    /// Initial graph for the dynamics; defaults to the real network itself.
    #[arg(long)]
    init: Option<String>,
    #[command(flatten)]
    protocol: Protocol,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CompareArgs {
    /// Real network edge list.
    #[arg(long)]
    edges: PathBuf,
    /// Model to compare (repeatable), e.g. `sf:m=5` or
    /// `noh:lambda=0.01,mu=0.013,init=sf,m=auto`.
    #[arg(long = "model")]
    models: Vec<String>,
    #[command(flatten)]
    protocol: Protocol,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let settings = match &cli.config {
        Some(path) => config::load(path).map_err(Failure::Config)?,
        None => Settings::default(),
    };
    let globals = Globals { seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&globals, settings, args),
        Command::Theory(args) => cmd_theory(globals.out, args),
        Command::Fit(args) => cmd_fit(&globals, settings, args),
        Command::Compare(args) => cmd_compare(&globals, settings, args),
    }
}

struct Globals {
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn apply(c: &mut ExperimentConfig, s: &Settings) {
    if let Some(v) = s.seed {
        c.seed = v;
    }
    if let Some(v) = s.burn_in {
        c.burn_in = v;
    }
    if let Some(v) = s.window {
        c.window = v;
    }
    if let Some(v) = s.sample_interval {
        c.sample_interval = v;
    }
    if let Some(v) = s.size_interval {
        c.size_interval = v;
    }
    if let Some(v) = s.replicas {
        c.replicas = v;
    }
    if let Some(v) = s.max_snapshots {
        c.max_snapshots = v;
    }
    if let Some(v) = s.initial_online {
        c.initial_online = v;
    }
    if let Some(v) = &s.out {
        c.outputs = v.clone();
    }
}

/// Defaults, then the config file, then flags.
fn experiment_config(globals: &Globals, s: &Settings, protocol: &Protocol) -> Result<ExperimentConfig, Failure> {
    let mut c = ExperimentConfig::default();
    apply(&mut c, s);
    let initial_online = protocol.initial_online.as_deref().map(config::parse_initial).transpose().map_err(Failure::Config)?;
    let flags = Settings {
        seed: globals.seed,
        burn_in: protocol.burn_in,
        window: Some((protocol.t_lo.unwrap_or(c.window.0), protocol.t_hi.unwrap_or(c.window.1))),
        sample_interval: protocol.sample_interval,
        size_interval: protocol.size_interval,
        replicas: protocol.replicas,
        max_snapshots: protocol.max_snapshots,
        initial_online,
        out: globals.out.clone(),
        ..Settings::default()
    };
    apply(&mut c, &flags);
    Ok(c)
}

fn cmd_simulate(globals: &Globals, s: Settings, args: SimulateArgs) -> Result<(), Failure> {
    let mut c = experiment_config(globals, &s, &args.protocol)?;
    let mut generator = match (&args.edges, &args.generator) {
        (Some(path), _) => GeneratorSpec::edge_list(path),
        (None, Some(g)) => config::parse_generator(g).map_err(Failure::Config)?,
        (None, None) => s.generator.clone().unwrap_or_else(|| c.generator.clone()),
    };
    if let Some(n) = args.n.or(s.n) {
        generator.n_vertices = n;
    } else if generator.n_vertices == 0 {
        generator.n_vertices = c.generator.n_vertices;
    }
    if generator.seed == 0 {
        generator.seed = c.seed;
    }
    c.generator = generator;
    let lambda = args.lambda.or(s.lambda).unwrap_or(c.noh.lambda);
    let mu = args.mu.or(s.mu).unwrap_or(c.noh.mu);
    c.noh = NohParams::new(lambda, mu).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(t) = args.snapshot_times.or(s.snapshot_times) {
        c.snapshot_times = t;
    }
    c.validate()?;

    let artifacts = simulate(&c)?;
    let summary = fs::read_to_string(&artifacts.summary)?;
    print!("{summary}");
    eprintln!(
        "wrote {} size series, {} degree series, {} snapshots to {}",
        artifacts.size_csv.len(),
        artifacts.degree_csv.len(),
        artifacts.snapshot_json.len(),
        c.outputs.display()
    );
    Ok(())
}

fn theory_failure(e: TheoryError) -> Failure {
    match e {
        TheoryError::NotIrreducible(_) => Failure::Runtime(e.to_string()),
        _ => Failure::Config(e.to_string()),
    }
}

fn cmd_theory(out: Option<PathBuf>, args: TheoryArgs) -> Result<(), Failure> {
    let p = TheoryParams::new(args.n0, args.lambda, args.mu).map_err(theory_failure)?;
    if let Some(path) = &args.matrix {
        let matrix = rate_matrix(&p).map_err(theory_failure)?;
        create_parent(path)?;
        matrix.write_csv(BufWriter::new(fs::File::create(path)?))?;
    }
    let summary = format!("# E={} D={}", expected_size(&p), variance_size(&p));
    let write_rows = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "n,prob,log_prob")?;
        for (n, prob) in stationary_pmf(&p).probs().iter().enumerate() {
            let log_prob = log_stationary_pmf(&p, n as u64).map_err(io::Error::other)?;
            writeln!(w, "{n},{prob},{log_prob}")?;
        }
        Ok(())
    };
    match out {
        Some(path) => {
            create_parent(&path)?;
            let mut w = BufWriter::new(fs::File::create(&path)?);
            write_rows(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            write_rows(&mut w)?;
            w.flush()?;
        }
    }
    println!("{summary}");
    Ok(())
}

fn create_parent(path: &std::path::Path) -> io::Result<()> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => fs::create_dir_all(parent),
        _ => Ok(()),
    }
}

fn emit_rows(rows: &[FitRow], out: Option<&PathBuf>) -> Result<(), Failure> {
    if let Some(path) = out {
        write_fit_report(rows, path)?;
    }
    write_fit_rows(rows, io::stdout().lock())?;
    Ok(())
}

fn cmd_fit(globals: &Globals, s: Settings, args: FitArgs) -> Result<(), Failure> {
    let c = experiment_config(globals, &s, &args.protocol)?;
    c.validate()?;
    let initial = args.init.as_deref().map(config::parse_generator).transpose().map_err(Failure::Config)?;
    let reference = load_edge_list(&args.edges).map_err(|e| Failure::Runtime(format!("{}: {e}", args.edges.display())))?;
    let initial = initial.map(|mut g| {
        if g.n_vertices == 0 {
            g.n_vertices = reference.n_vertices();
        }
        if g.seed == 0 {
            g.seed = c.seed;
        }
        g
    });
    let ranked = fit_grid(&reference, initial.as_ref(), &args.lambda, &args.mu, &c)?;
    let rows: Vec<FitRow> = ranked.into_iter().map(|(_, row)| row).collect();
    emit_rows(&rows, globals.out.as_ref())
}

fn cmd_compare(globals: &Globals, s: Settings, args: CompareArgs) -> Result<(), Failure> {
    let c = experiment_config(globals, &s, &args.protocol)?;
    c.validate()?;
    let specs: Vec<String> = if args.models.is_empty() {
        DEFAULT_MODELS.iter().map(|m| m.to_string()).collect()
    } else {
        args.models
    };
    let models = specs.iter().map(|m| m.parse::<ModelSpec>()).collect::<Result<Vec<_>, _>>()?;
    let reference = load_edge_list(&args.edges).map_err(|e| Failure::Runtime(format!("{}: {e}", args.edges.display())))?;
    let rows = compare_models(&reference, &models, &c)?;
    emit_rows(&rows, globals.out.as_ref())
}
