use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sparql_session::intent::ObservationSymbol;
use sparql_session::report::{self as rp, PipelineConfig, PipelineError, Workspace};

#[derive(Parser)]
#[command(
    name = "sparql-session",
    version,
    about = "Mine search sessions and reformulations from SPARQL query logs"
)]
struct Cli {
    #[command(flatten)]
    opts: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

/// Flags override `--config`, which overrides the defaults.
#[derive(Args)]
struct ConfigArgs {
    /// JSON file with pipeline settings (camelCase keys)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input log (NDJSON)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Directory for stage artifacts
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    time_threshold_minutes: Option<u64>,
    #[arg(long, global = true)]
    bot_window_minutes: Option<u64>,
    #[arg(long, global = true)]
    bot_max_in_window: Option<usize>,
    #[arg(long, global = true)]
    loop_min_run: Option<usize>,
    #[arg(long, global = true)]
    ged_exact_size_limit: Option<usize>,
    #[arg(long, global = true)]
    ged_time_budget_ms: Option<u64>,
    #[arg(long, global = true)]
    hmm_alpha: Option<f64>,
    #[arg(long, global = true)]
    matrix_cap_percentile: Option<f64>,
    /// Fraction of sessions used for the GED series
    #[arg(long, global = true)]
    ged_sample: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Target {
    /// Stored session to take observations from
    #[arg(long, conflicts_with = "observations")]
    session: Option<String>,
    /// Comma-separated observation symbols, e.g. Add,SubObject
    #[arg(long, value_delimiter = ',')]
    observations: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Read the input log into records.ndjson
    Ingest,
    /// Filter robotic traffic and build sessions.ndjson
    Sessionize,
    /// Session lengths, GED series and similarity matrices
    Analyze,
    /// Reformulation events between contiguous queries
    Events,
    /// Result-size-change transition matrix
    Markov,
    /// Train the intent HMM
    HmmTrain,
    /// Most likely result-size-change path for a session
    HmmDecode(Target),
    /// Rank the next reformulation for a session
    Suggest(Target),
    /// Build the report tables
    Report,
    /// All stages in order
    Run,
}

fn load_config(a: &ConfigArgs) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", p.display())))?;
            PipelineConfig::from_json(&text)?
        }
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = a.$f.clone() { cfg.$f = v; })* };
    }
    set!(
        time_threshold_minutes,
        bot_window_minutes,
        bot_max_in_window,
        loop_min_run,
        ged_exact_size_limit,
        ged_time_budget_ms,
        hmm_alpha,
        matrix_cap_percentile,
        ged_sample,
        seed
    );
    if a.input.is_some() {
        cfg.input = a.input.clone();
    }
    if a.output.is_some() {
        cfg.output = a.output.clone();
    }
    if cfg.output.is_none() {
        cfg.output = Some(PathBuf::from("sparql-session-out"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn observations(ws: &Workspace, t: &Target) -> Result<Vec<ObservationSymbol>, PipelineError> {
    match (&t.session, &t.observations) {
        (Some(id), _) => rp::session_observations(ws, id),
        (None, Some(list)) => list
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse().map_err(PipelineError::from))
            .collect(),
        (None, None) => Err(PipelineError::Config("give --session or --observations".into())),
    }
}

fn print<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.opts)?;
    if let Command::Run = cli.command {
        let bundle = rp::run_pipeline(&cfg)?;
        return print(&serde_json::json!({
            "output": cfg.output,
            "sessions": bundle.filter_report.session_count,
            "pairs": bundle.operator_table.pairs,
            "notes": bundle.notes,
        }));
    }
    let ws = Workspace::from_config(&cfg)?;
    match cli.command {
        Command::Ingest => {
            let s = rp::stage_ingest(&cfg, &ws)?;
            print(&serde_json::json!({"lines": s.lines, "records": s.records, "rejected": s.rejected.len()}))
        }
        Command::Sessionize => print(&rp::stage_sessionize(&cfg, &ws)?),
        Command::Analyze => {
            let a = rp::stage_analyze(&cfg, &ws)?;
            print(&serde_json::json!({
                "sessions": a.session_length_histogram.iter().map(|b| b.sessions).sum::<usize>(),
                "matrixCap": a.matrix_cap,
                "gedSampledSessions": a.ged_series.sampled_sessions,
                "gedApproximatePairs": a.ged_series.series.approximate_pairs,
            }))
        }
        Command::Events => {
            let e = rp::stage_events(&ws)?;
            print(&serde_json::json!({"events": e.len()}))
        }
        Command::Markov => {
            let m = rp::stage_markov(&ws)?;
            match m.matrix {
                Some(_) => print(&m),
                None => Err(PipelineError::Intent(sparql_session::intent::IntentError::InsufficientData).into()),
            }
        }
        Command::HmmTrain => print(&rp::stage_hmm_train(&cfg, &ws)?),
        Command::HmmDecode(t) => {
            let model = rp::load_model(&ws)?;
            print(&rp::decode_observations(&model, observations(&ws, &t)?)?)
        }
        Command::Suggest(t) => {
            let model = rp::load_model(&ws)?;
            print(&rp::suggest_observations(&model, observations(&ws, &t)?)?)
        }
        Command::Report => {
            let b = rp::stage_report(&ws, Vec::new())?;
            print(&serde_json::json!({"report": ws.path(rp::REPORT), "notes": b.notes}))
        }
        Command::Run => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, json) = match e.downcast_ref::<PipelineError>() {
                Some(p) => (p.exit_code(), p.to_json()),
                None => (
                    4,
                    serde_json::json!({"error": "internal", "exitCode": 4, "message": format!("{e:#}")}),
                ),
            };
            eprintln!("{json}");
            ExitCode::from(code as u8)
        }
    }
}
