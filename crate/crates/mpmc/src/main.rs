use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use mpmc::{emit_report, parse_properties, run, Format, RunOptions, Sweep};
use mpmc_core::explore::Strategy;
use mpmc_core::mpm::parse_model;
use mpmc_core::Ternary;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Advanced,
    Fsp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    JsonLines,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ColumnsArg {
    Entry,
    All,
}

/// Check CSL properties of a Markov population model.
///
/// Exit status: 0 if every formula holds, 1 if one fails and none is
/// unknown, 2 if one is unknown, 3 on errors.
#[derive(Parser, Debug)]
#[command(name = "mpmc", version)]
struct Cli {
    /// Model file.
    model: PathBuf,
    /// Property file, one formula per line.
    properties: PathBuf,
    /// Truncation error bound.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Derive the truncation bound from the probability thresholds.
    #[arg(long, conflicts_with = "epsilon")]
    auto_epsilon: bool,
    /// Tail bound of the steady-state window; defaults to --epsilon.
    #[arg(long)]
    steady_epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "advanced")]
    strategy: StrategyArg,
    /// Do not stop exploring at states that decide the path formula.
    #[arg(long)]
    no_ap_shortcut: bool,
    #[arg(long, default_value_t = 2_000_000)]
    max_states: usize,
    /// Poisson truncation error of each transient solve.
    #[arg(long, default_value_t = 1e-10)]
    transient_delta: f64,
    /// Use this drift bound instead of maximizing the drift.
    #[arg(long)]
    drift_c: Option<f64>,
    /// Columns used for the steady-state bounds.
    #[arg(long, value_enum, default_value = "entry")]
    cs_columns: ColumnsArg,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Fill `{name}` placeholders, e.g. `t=10,20,60`. Repeatable.
    #[arg(long)]
    sweep: Vec<Sweep>,
    /// Leave timings out of the output so it is reproducible.
    #[arg(long)]
    no_timings: bool,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn real_main() -> Result<u8> {
    let cli = Cli::parse();
    let model_text =
        std::fs::read_to_string(&cli.model).with_context(|| format!("reading {}", cli.model.display()))?;
    let spec = parse_model(&model_text).with_context(|| format!("in {}", cli.model.display()))?;
    let prop_text = std::fs::read_to_string(&cli.properties)
        .with_context(|| format!("reading {}", cli.properties.display()))?;
    let props = parse_properties(&prop_text, spec.names(), &cli.sweep)
        .with_context(|| format!("in {}", cli.properties.display()))?;

    let opts = RunOptions {
        epsilon: cli.epsilon,
        auto_epsilon: cli.auto_epsilon,
        steady_epsilon: cli.steady_epsilon,
        strategy: match cli.strategy {
            StrategyArg::Advanced => Strategy::Advanced,
            StrategyArg::Fsp => Strategy::Fsp,
        },
        ap_shortcut: !cli.no_ap_shortcut,
        max_states: cli.max_states,
        transient_delta: cli.transient_delta,
        drift_c: cli.drift_c,
        all_columns: matches!(cli.cs_columns, ColumnsArg::All),
    };
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::JsonLines => Format::JsonLines,
    };
    if format == Format::Text {
        println!("{}", mpmc::report::TEXT_HEADER);
    }
    let mut verdicts = Vec::new();
    for p in &props {
        let mut report = run(&spec, p, &opts).with_context(|| format!("checking `{}`", p.text))?;
        if cli.no_timings {
            report.timings = None;
        }
        println!("{}", emit_report(&report, format));
        for w in &report.warnings {
            eprintln!("warning: {}: {w}", p.text);
        }
        verdicts.push(report.verdict);
    }
    Ok(if verdicts.contains(&Ternary::Unknown) {
        2
    } else if verdicts.contains(&Ternary::False) {
        1
    } else {
        0
    })
}
