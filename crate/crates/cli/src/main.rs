use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use degswitch::exact;
use degswitch::experiments::{run_named, ExperimentConfig, SequenceFamily};
use degswitch::rng::{derive_seed, seeded};
use degswitch::samplers::{sample_configuration, sample_uniform_simple, DEFAULT_MAX_ATTEMPTS};
use degswitch::switching::run_to_simple;
use degswitch::{BadEdgeRule, DegreeSequence, Error, MultigraphJson, SwitchTrace, SwitchVariant};

#[derive(Parser)]
#[command(name = "degswitch", version, about = "Random graphs with a given degree sequence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw graphs from one of the models.
    Sample(SampleArgs),
    /// Exact laws by full enumeration (small sequences only).
    Exact(ExactArgs),
    /// Run a named Monte Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Config,
    Switched,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Edgelist,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Lex,
    MultiFirst,
    Random,
    EdgeOrder,
}

impl From<Rule> for BadEdgeRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Lex => BadEdgeRule::Lex,
            Rule::MultiFirst => BadEdgeRule::MultiFirst,
            Rule::Random => BadEdgeRule::Random,
            Rule::EdgeOrder => BadEdgeRule::EdgeOrder,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    #[value(alias = "any-edge")]
    Any,
    Disjoint,
}

impl From<Variant> for SwitchVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Any => SwitchVariant::AnyEdge,
            Variant::Disjoint => SwitchVariant::Disjoint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Config,
    Uniform,
    Switched,
    Tv,
}

#[derive(clap::Args)]
struct SampleArgs {
    /// Comma-separated degrees, e.g. 2,2,1,1,1,1.
    #[arg(long, value_parser = parse_degrees)]
    degrees: DegreeSequence,
    #[arg(long, value_enum, default_value = "switched")]
    model: Model,
    #[arg(long, value_enum, default_value = "lex")]
    rule: Rule,
    #[arg(long, value_enum, default_value = "any")]
    variant: Variant,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, value_enum, default_value = "edgelist")]
    format: Format,
    /// Rejection budget for the uniform model.
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: u64,
}

#[derive(clap::Args)]
struct ExactArgs {
    #[arg(long, value_parser = parse_degrees)]
    degrees: DegreeSequence,
    #[arg(long, value_enum, default_value = "switched")]
    what: What,
    #[arg(long, value_enum, default_value = "lex")]
    rule: Rule,
    #[arg(long, value_enum, default_value = "any")]
    variant: Variant,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// switch-count, path-limits, example-eo, components or tv-decay.
    #[arg(long)]
    name: String,
    /// regular:<r>, ones, mix:p=..,a=..,b=.., eo:a=.., powerlaw:gamma=.., hub:exp=.., fixed:<degrees>.
    #[arg(long, value_parser = parse_family)]
    family: SequenceFamily,
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lex")]
    rule: Rule,
    #[arg(long, value_enum, default_value = "any")]
    variant: Variant,
    /// Output prefix; writes <out>.json, <out>.csv and with --raw <out>.raw.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep per-replicate rows.
    #[arg(long)]
    raw: bool,
}

fn parse_degrees(s: &str) -> Result<DegreeSequence, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<SequenceFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Serialize)]
struct SampleRecord {
    index: u64,
    graph: MultigraphJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<SwitchTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attempts: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ScaleCap(..) => 4,
        Error::UnknownExperiment(_) | Error::UnknownFamily(_) | Error::InvalidParameter(_) | Error::Parse(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn sample(args: SampleArgs, out: &mut impl Write) -> Result<(), Error> {
    let seq = &args.degrees;
    match args.model {
        Model::Config => seq.require_even()?,
        Model::Switched | Model::Uniform => seq.require_graphical()?,
    }
    for index in 0..args.count {
        let mut rng = seeded(derive_seed(args.seed, &[index]));
        let (graph, trace, attempts) = match args.model {
            Model::Config => (sample_configuration(seq, &mut rng)?.project(), None, None),
            Model::Switched => {
                let config = sample_configuration(seq, &mut rng)?;
                let o = run_to_simple(config, args.rule.into(), args.variant.into(), &mut rng, None)?;
                (o.graph, Some(o.trace), None)
            }
            Model::Uniform => {
                let s = sample_uniform_simple(seq, &mut rng, args.max_attempts)?;
                (s.graph, None, Some(s.attempts))
            }
        };
        match args.format {
            Format::Edgelist => out.write_all(graph.to_edge_list().as_bytes())?,
            Format::Json => {
                let rec = SampleRecord { index, graph: graph.to_json(), trace, attempts };
                serde_json::to_writer(&mut *out, &rec).map_err(|e| Error::Io(e.to_string()))?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TvOutput {
    tv: String,
    tv_type: String,
}

fn exact_cmd(args: ExactArgs, out: &mut impl Write) -> Result<(), Error> {
    let seq = &args.degrees;
    let (rule, variant) = (args.rule.into(), args.variant.into());
    let json = match args.what {
        What::Config => serde_json::to_string_pretty(&exact::configuration_distribution(seq)?.to_json()),
        What::Uniform => serde_json::to_string_pretty(&exact::uniform_simple_distribution(seq)?.to_json()),
        What::Switched => {
            serde_json::to_string_pretty(&exact::switched_distribution_exact(seq, rule, variant)?.to_json())
        }
        What::Tv => {
            let u = exact::uniform_simple_distribution(seq)?;
            let s = exact::switched_distribution_exact(seq, rule, variant)?;
            let tv = exact::tv_distance(&s, &u)?;
            let tv_type = exact::type_tv_distance(&s, &u);
            serde_json::to_string_pretty(&TvOutput { tv: tv.to_string(), tv_type: tv_type.to_string() })
        }
    }
    .map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{json}")?;
    Ok(())
}

fn experiment(args: ExperimentArgs, out: &mut impl Write) -> Result<bool, Error> {
    let grid = if args.n_grid.is_empty() { args.family.default_grid() } else { args.n_grid };
    let mut cfg = ExperimentConfig::new(args.family, grid, args.replicates, args.seed);
    cfg.rule = args.rule.into();
    cfg.variant = args.variant.into();
    cfg.keep_raw = args.raw;
    let report = run_named(&args.name, &cfg)?;
    match &args.out {
        Some(prefix) => report.write_files(prefix)?,
        None => writeln!(out, "{}", report.to_json())?,
    }
    for c in &report.checks {
        let at = c.n.map(|n| format!(" n={n}")).unwrap_or_default();
        eprintln!("[{}] {}{at}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Sample(a) => sample(a, &mut out).map(|_| true),
        Command::Exact(a) => exact_cmd(a, &mut out).map(|_| true),
        Command::Experiment(a) => experiment(a, &mut out),
    };
    let flushed = out.flush();
    match result {
        Ok(true) if flushed.is_ok() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
