use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evflow::corpus;
use evflow::event_model::EventModel;
use evflow::gen::{generate_source, GenConfig};
use evflow::lang::parse_files;
use evflow::oracle::{check_program, ProgramOutcome, SuiteConfig};
use evflow::report::{build_report, render_text, Mode};
use evflow::transform::analyze_uninit;

#[derive(Parser)]
#[command(name = "evflow", version, about = "Event-aware uninitialized-variable analysis for EVL programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report with the plain IFDS analysis.
    Ifds(AnalyzeArgs),
    /// Report with the event-aware analysis.
    Ide(AnalyzeArgs),
    /// Show every IFDS diagnostic and whether event-aware filtering removed it.
    Diff(AnalyzeArgs),
    /// Analyze in the mode given by `--mode`.
    Run {
        #[arg(long, value_enum, default_value_t = CliMode::Diff)]
        mode: CliMode,
        #[command(flatten)]
        args: AnalyzeArgs,
    },
    /// Check the analysis against the interpreter on the corpus and on
    /// random programs.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Ifds,
    Ide,
    Diff,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Ifds => Mode::Ifds,
            CliMode::Ide => Mode::Ide,
            CliMode::Diff => Mode::Diff,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// EVL source files, concatenated in order.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// JSON event model extending the built-in primitives.
    #[arg(long)]
    event_model: Option<PathBuf>,
    /// Write the supergraph as Graphviz DOT.
    #[arg(long)]
    dump_supergraph: Option<PathBuf>,
    /// Write the exploded supergraph as Graphviz DOT.
    #[arg(long)]
    dump_exploded: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Directory of `.evl` programs, each with an optional `.json` event
    /// model beside it. Defaults to the built-in corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Seed of the first random program.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random programs.
    #[arg(long, default_value_t = 100)]
    programs: usize,
    /// Dispatch decisions to enumerate per program.
    #[arg(long, default_value_t = 6)]
    schedules: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ifds(a) => analyze(Mode::Ifds, &a),
        Command::Ide(a) => analyze(Mode::Ide, &a),
        Command::Diff(a) => analyze(Mode::Diff, &a),
        Command::Run { mode, args } => analyze(mode.into(), &args),
        Command::Oracle(a) => oracle(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn use_color() -> bool {
    std::env::var_os("EVFLOW_NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn load_model(path: Option<&Path>) -> Result<EventModel> {
    match path {
        None => Ok(EventModel::builtin()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            EventModel::from_json(&text).with_context(|| format!("invalid event model {}", p.display()))
        }
    }
}

fn analyze(mode: Mode, args: &AnalyzeArgs) -> Result<u8> {
    let start = Instant::now();
    let mut sources = Vec::new();
    for f in &args.files {
        let text = std::fs::read_to_string(f).with_context(|| format!("cannot read {}", f.display()))?;
        sources.push((f.display().to_string(), text));
    }
    let model = load_model(args.event_model.as_deref())?;
    let program = parse_files(&sources)?;
    let analysis = analyze_uninit(&program, &model)?;
    for w in &analysis.graph.warnings {
        eprintln!("warning: {w}");
    }
    let files: Vec<String> = sources.iter().map(|(n, _)| n.clone()).collect();
    let elapsed = start.elapsed().as_secs_f64() * 1000.0;
    let report = build_report(&analysis, &files, mode, elapsed);

    if let Some(path) = &args.dump_supergraph {
        // Highlight a shortest route to the first filtered fact, if any.
        let highlight = analysis
            .filtered
            .provenance
            .keys()
            .find(|(n, _)| analysis.graph.kind(*n).stmt().is_some())
            .and_then(|&(n, _)| analysis.graph.shortest_path(analysis.graph.entry(), n))
            .unwrap_or_default();
        std::fs::write(path, analysis.graph.to_dot(&analysis.program, &highlight))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let Some(path) = &args.dump_exploded {
        let dot = analysis.exploded().to_dot(&analysis.program, |d| analysis.fact_name(d).to_string());
        std::fs::write(path, dot).with_context(|| format!("cannot write {}", path.display()))?;
    }

    match args.format {
        Format::Text => print!("{}", render_text(&report, use_color())),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(report.exit_code() as u8)
}

struct SuiteProgram {
    name: String,
    source: String,
    model: EventModel,
}

fn corpus_programs(dir: Option<&Path>) -> Result<Vec<SuiteProgram>> {
    let Some(dir) = dir else {
        return corpus::ALL
            .iter()
            .map(|c| {
                Ok(SuiteProgram {
                    name: c.file.to_string(),
                    source: c.source.to_string(),
                    model: c.event_model()?,
                })
            })
            .collect();
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "evl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .evl programs in {}", dir.display());
    }
    paths
        .into_iter()
        .map(|p| {
            let source = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
            let model_path = p.with_extension("json");
            let model = load_model(model_path.exists().then_some(model_path.as_path()))?;
            Ok(SuiteProgram {
                name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                source,
                model,
            })
        })
        .collect()
}

fn oracle(args: &OracleArgs) -> Result<u8> {
    let cfg = SuiteConfig {
        max_decisions: args.schedules,
        random_programs: args.programs,
        seed: args.seed,
        ..SuiteConfig::default()
    };
    let mut programs = corpus_programs(args.corpus.as_deref())?;
    let gen_cfg = GenConfig::default();
    for i in 0..cfg.random_programs as u64 {
        let seed = cfg.seed + i;
        programs.push(SuiteProgram {
            name: format!("gen_{seed}.evl"),
            source: generate_source(seed, &gen_cfg),
            model: EventModel::builtin(),
        });
    }
    let mut outcomes: Vec<ProgramOutcome> = Vec::new();
    for sp in &programs {
        let p = parse_files(&[(sp.name.as_str(), sp.source.as_str())])?;
        let outcome = check_program(&sp.name, &sp.source, &p, &sp.model, &cfg)
            .with_context(|| format!("analysis of {} failed", sp.name))?;
        outcomes.push(outcome);
    }
    let failed: Vec<&ProgramOutcome> = outcomes.iter().filter(|o| !o.violations.is_empty()).collect();
    let traces: usize = outcomes.iter().map(|o| o.traces).sum();
    match args.format {
        Format::Json => {
            let summary = serde_json::json!({
                "programs": outcomes.len(),
                "traces": traces,
                "failed": failed.iter().map(|o| serde_json::json!({
                    "name": o.name,
                    "source": o.source,
                    "violations": o.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Format::Text => {
            for o in &failed {
                println!("FAIL {}", o.name);
                for v in &o.violations {
                    println!("  {v}");
                }
                println!("--- counterexample ---\n{}----------------------", o.source);
            }
            println!(
                "{} programs, {traces} traces, {} failing",
                outcomes.len(),
                failed.len()
            );
        }
    }
    Ok(u8::from(!failed.is_empty()))
}
