use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use panelcurve::config::OutputFormat;
use panelcurve::design::{Effects, ExpectationMode};
use panelcurve::estimators::WhiteFlavor;
use panelcurve::hp::NairuSource;
use panelcurve::pipeline::{prepare, unit_root_section};
use panelcurve::report::{render_text, render_unit_roots, unit_roots_json, Section};
use panelcurve::transform::RecessionRule;
use panelcurve::{ingest_csv, render_report, run_analysis, simulate_panel, write_csv};
use panelcurve::{AnalysisConfig, AnalysisReport, Error, ErrorClass, Result, SimConfig};

const CONFIG_HELP: &str = "\
Config files are TOML with dotted keys; every key is optional:

  recession_rule        = \"nonpositive\" | \"negative\"
  log_shift.cpi         = <number>   (default max(0, -min) + 1)
  log_shift.unemployment = <number>
  log_shift.uniform     = true | false
  hp.lambda             = <number>   (overrides the frequency rule)
  hp.exponent           = 2.0
  hp.periods_per_year   = 4
  hp.nairu_source       = \"unemployment\" | \"inflation\"
  modes                 = [\"backward\", \"forward\"]
  effects               = [\"pooled\", \"fixed\", \"random\"]
  period_effects        = false
  level                 = 0.05
  format                = \"text\" | \"csv\" | \"json\"
  max_lag               = 13
  unit_root             = true
  white                 = \"hc0\" | \"hc1\"
  seed                  = 42

Command-line flags override the file.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.";

#[derive(Parser)]
#[command(name = "panelcurve", version, about = "Regime-aware panel Phillips-curve analysis", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: unit roots, estimates, specification tests, model choice.
    Run(AnalysisArgs),
    /// ADF and PP p-values per entity and variable.
    Unitroot(AnalysisArgs),
    /// Pooled, fixed and random-effects estimates.
    Estimate(AnalysisArgs),
    /// Redundant FE, Breusch-Pagan, Honda and Hausman tests with the model choice.
    Spectest(AnalysisArgs),
    /// Write a synthetic panel as CSV.
    Simulate(SimulateArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => OutputFormat::Text,
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Backward,
    Forward,
}

#[derive(Clone, Copy, ValueEnum)]
enum EffectsArg {
    Pooled,
    Fixed,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Nonpositive,
    Negative,
}

#[derive(Clone, Copy, ValueEnum)]
enum Nairu {
    Unemployment,
    Inflation,
}

#[derive(Clone, Copy, ValueEnum)]
enum White {
    Hc0,
    Hc1,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Panel CSV (entity,period,cpi,expected_cpi,unemployment,gdp_growth).
    input: Option<PathBuf>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    recession_rule: Option<Rule>,
    #[arg(long)]
    log_shift_cpi: Option<f64>,
    #[arg(long)]
    log_shift_unemployment: Option<f64>,
    #[arg(long)]
    log_shift_uniform: bool,
    #[arg(long)]
    hp_lambda: Option<f64>,
    #[arg(long)]
    hp_exponent: Option<f64>,
    #[arg(long)]
    hp_periods_per_year: Option<u32>,
    #[arg(long, value_enum)]
    hp_nairu_source: Option<Nairu>,
    #[arg(long, value_enum, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    effects: Option<Vec<EffectsArg>>,
    #[arg(long)]
    period_effects: bool,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    max_lag: Option<usize>,
    /// Skip the unit-root section.
    #[arg(long)]
    no_unit_root: bool,
    #[arg(long, value_enum)]
    white: Option<White>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record the current time in the report.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    entities: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    /// Tranquil-only gap slope with noisier recession quarters.
    #[arg(long)]
    regime: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by `run --format json`.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut c = match &self.config {
            Some(path) => AnalysisConfig::from_file(path)?,
            None => AnalysisConfig::default(),
        };
        if let Some(p) = &self.input {
            c.input = Some(p.clone());
        }
        if let Some(f) = self.format {
            c.format = f.into();
        }
        if let Some(r) = self.recession_rule {
            c.recession_rule = match r {
                Rule::Nonpositive => RecessionRule::Nonpositive,
                Rule::Negative => RecessionRule::Negative,
            };
        }
        if self.log_shift_cpi.is_some() {
            c.log_shift.cpi = self.log_shift_cpi;
        }
        if self.log_shift_unemployment.is_some() {
            c.log_shift.unemployment = self.log_shift_unemployment;
        }
        c.log_shift.uniform |= self.log_shift_uniform;
        if self.hp_lambda.is_some() {
            c.hp.lambda = self.hp_lambda;
        }
        if let Some(x) = self.hp_exponent {
            c.hp.exponent = x;
        }
        if let Some(p) = self.hp_periods_per_year {
            c.hp.periods_per_year = p;
        }
        if let Some(n) = self.hp_nairu_source {
            c.hp.nairu_source = match n {
                Nairu::Unemployment => NairuSource::Unemployment,
                Nairu::Inflation => NairuSource::Inflation,
            };
        }
        if let Some(m) = &self.modes {
            c.modes = m
                .iter()
                .map(|m| match m {
                    Mode::Backward => ExpectationMode::Backward,
                    Mode::Forward => ExpectationMode::Forward,
                })
                .collect();
        }
        if let Some(e) = &self.effects {
            c.effects = e
                .iter()
                .map(|e| match e {
                    EffectsArg::Pooled => Effects::Pooled,
                    EffectsArg::Fixed => Effects::Fixed,
                    EffectsArg::Random => Effects::Random,
                })
                .collect();
        }
        c.period_effects |= self.period_effects;
        if let Some(l) = self.level {
            c.level = l;
        }
        if let Some(m) = self.max_lag {
            c.max_lag = m;
        }
        if self.no_unit_root {
            c.unit_root = false;
        }
        if let Some(w) = self.white {
            c.white = match w {
                White::Hc0 => WhiteFlavor::Hc0,
                White::Hc1 => WhiteFlavor::Hc1,
            };
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load_panel(config: &AnalysisConfig) -> Result<panelcurve::PanelDataset> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input file given".into()))?;
    let file = fs::File::open(path).map_err(|e| Error::Ingest {
        row: 0,
        column: String::new(),
        message: format!("cannot open {}: {e}", path.display()),
    })?;
    ingest_csv(std::io::BufReader::new(file))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn analysis(args: &AnalysisArgs, sections: Option<&[Section]>) -> Result<()> {
    let mut config = args.config()?;
    if sections.is_some_and(|s| !s.contains(&Section::UnitRoots)) {
        config.unit_root = false;
    }
    let data = load_panel(&config)?;
    let mut report = run_analysis(&config, &data)?;
    if args.timestamp {
        report.provenance.generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    let bytes = match (config.format, sections) {
        (OutputFormat::Text, Some(s)) => render_text(&report, s).into_bytes(),
        (format, _) => render_report(&report, format)?,
    };
    emit(args.output.as_deref(), &bytes)
}

fn unitroot(args: &AnalysisArgs) -> Result<()> {
    let config = args.config()?;
    let data = load_panel(&config)?;
    let prepared = prepare(&config, &data)?;
    let section = unit_root_section(&config, &prepared)?;
    let bytes = match config.format {
        OutputFormat::Json => unit_roots_json(&section)?.into_bytes(),
        _ => render_unit_roots(&section).into_bytes(),
    };
    emit(args.output.as_deref(), &bytes)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut sim = if args.regime {
        SimConfig::regime_pattern(args.seed)
    } else {
        SimConfig {
            seed: args.seed,
            ..SimConfig::default()
        }
    };
    if let Some(n) = args.entities {
        sim.n_entities = n;
    }
    if let Some(t) = args.periods {
        sim.n_periods = t;
    }
    let data = simulate_panel(&sim)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn report(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let report = AnalysisReport::from_json(&text)?;
    emit(
        args.output.as_deref(),
        &render_report(&report, args.format.into())?,
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => analysis(a, None),
        Command::Unitroot(a) => unitroot(a),
        Command::Estimate(a) => analysis(
            a,
            Some(&[Section::Header, Section::Estimates, Section::Combined]),
        ),
        Command::Spectest(a) => analysis(
            a,
            Some(&[Section::Header, Section::SpecTests, Section::ModelChoice]),
        ),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
