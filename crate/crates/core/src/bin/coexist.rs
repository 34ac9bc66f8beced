//! Command-line front end: scenario generation, single evaluations, rate
//! regions, figure sweeps and the self-check suite.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use coexist_core::estimation::{nmse_curve, BookKind, NmseConfig};
use coexist_core::harness::{
    machine_book, r_h_grid, rate_table, region_row, run_experiment, trace_series, validate, ExperimentSpec, FigureId, RegionSeries, Table,
    ValidationOptions, REGION_HEADER,
};
use coexist_core::pilots::Estimator;
use coexist_core::powerctl::{human_rate_ceiling, sci_data_powers, sci_pilot_powers, HumanTargetMode};
use coexist_core::rates::{LinkModel, Receiver, Scheme, SchemeConfig};
use coexist_core::scenario::{place_devices, Scenario, SystemParams};
use coexist_core::Result;

#[derive(Parser, Debug)]
#[command(name = "coexist", version, about = "Uplink simulator for humans and machines sharing a massive-MIMO cell")]
struct Cli {
    /// Master seed for placement, pilot assignment and Monte-Carlo draws.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Monte-Carlo trials (estimation error and validation).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file (directory for `figure`); standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// sc1[:alpha], sc2, sc3 or opa[:group].
    #[arg(long, global = true, default_value = "sc2")]
    scheme: Scheme,
    /// Human receive combiner.
    #[arg(long, global = true, default_value = "mrc")]
    receiver: Receiver,
    /// Machine pilot family.
    #[arg(long, global = true, default_value = "wbe")]
    book: BookKind,
    /// Input file: system parameters for `generate-scenario`, a scenario for
    /// `rates`, `rate-region` and `asymptotic`, an experiment spec for `figure`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draws a deployment and writes it as TOML.
    GenerateScenario {
        #[arg(long, default_value_t = 100)]
        antennas: usize,
        #[arg(long, default_value_t = 100)]
        ci_length: usize,
    },
    /// Estimation error against pilot SNR for unit-gain, equal-power machines.
    Nmse {
        #[arg(long, default_value = "lmmse")]
        estimator: Estimator,
        #[arg(long, default_value_t = 20)]
        machines: usize,
        #[arg(long, default_value_t = 10)]
        pilot_length: usize,
        #[arg(long, default_value_t = 50)]
        antennas: usize,
        /// Comma-separated SNR values in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-10,0,10,20,30,40")]
        snr_db: Vec<f64>,
    },
    /// Closed-form per-phase SINR and rate of every device.
    Rates {
        #[arg(long, default_value_t = 10)]
        machine_pilot_length: usize,
        #[arg(long, value_enum, default_value_t = PowerRule::Inversion)]
        powers: PowerRule,
        #[command(flatten)]
        deploy: Deploy,
    },
    /// Traces the max-min machine rate against the human rate target.
    RateRegion {
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[arg(long, value_enum, default_value_t = TargetMode::Exact)]
        human_mode: TargetMode,
        #[command(flatten)]
        deploy: Deploy,
    },
    /// Finite-antenna machine SINRs next to their infinite-antenna limits.
    Asymptotic {
        #[arg(long, default_value_t = 10)]
        machine_pilot_length: usize,
        #[command(flatten)]
        deploy: Deploy,
    },
    /// Runs a figure sweep into the output directory.
    Figure { id: FigureId },
    /// Runs the self-check suite; exits nonzero if any check fails.
    Validate {
        /// Skip the rate-region orderings.
        #[arg(long)]
        quick: bool,
    },
}

/// Deployment used when no scenario file is given.
#[derive(clap::Args, Debug)]
struct Deploy {
    #[arg(long, default_value_t = 100)]
    antennas: usize,
    #[arg(long, default_value_t = 100)]
    ci_length: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PowerRule {
    /// Channel inversion for machines, full power for humans.
    Inversion,
    /// Everyone at the power cap.
    Max,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TargetMode {
    Exact,
    PerPhase,
}

impl From<TargetMode> for HumanTargetMode {
    fn from(m: TargetMode) -> Self {
        match m {
            TargetMode::Exact => HumanTargetMode::Exact,
            TargetMode::PerPhase => HumanTargetMode::PerPhase,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(coexist_core::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::GenerateScenario { antennas, ci_length } => {
            let params = match &cli.config {
                Some(path) => {
                    let mut p: SystemParams = toml::from_str(&fs::read_to_string(path)?)?;
                    p.rng_seed = cli.seed;
                    p
                }
                None => SystemParams::table_one(*antennas, *ci_length, cli.seed),
            };
            let text = place_devices(&params)?.to_toml()?;
            emit(cli.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
        }
        Command::Nmse { estimator, machines, pilot_length, antennas, snr_db } => {
            let config = NmseConfig {
                machines: *machines,
                pilot_length: *pilot_length,
                antennas: *antennas,
                book: cli.book,
                estimator: *estimator,
                snr_db: snr_db.clone(),
                trials: cli.trials.unwrap_or(10_000),
                seed: cli.seed,
            };
            let mut table = Table::new(vec!["seed", "estimator", "book", "snr_db", "nmse", "std_error", "trials"]);
            for pt in nmse_curve(&config)? {
                table.rows.push(vec![
                    cli.seed.to_string(),
                    estimator.as_str().into(),
                    cli.book.as_str().into(),
                    pt.snr_db.to_string(),
                    pt.nmse.to_string(),
                    pt.std_error.to_string(),
                    config.trials.to_string(),
                ]);
            }
            emit_table(cli.out.as_deref(), &table)?;
        }
        Command::Rates { machine_pilot_length, powers, deploy } => {
            let s = scenario(cli, deploy)?;
            let model = link_model(cli, &s, *machine_pilot_length)?;
            let p = match powers {
                PowerRule::Inversion => sci_data_powers(&s),
                PowerRule::Max => vec![s.params().p_max_w; s.len()],
            };
            emit_table(cli.out.as_deref(), &rate_table(&model, &p)?)?;
        }
        Command::RateRegion { points, human_mode, deploy } => {
            let s = scenario(cli, deploy)?;
            let q = sci_pilot_powers(&s);
            let ceiling = human_rate_ceiling(&s, s.params().ci_length, s.human_count(), cli.receiver, &q)?;
            let series = RegionSeries { scheme: cli.scheme, book: cli.book, receiver: cli.receiver };
            let mut table = Table::new(REGION_HEADER.to_vec());
            for pt in trace_series(&s, series, (*human_mode).into(), &r_h_grid(ceiling, (*points).max(2)))? {
                table.rows.push(region_row(cli.seed, 0, cli.book, &s, &pt));
            }
            emit_table(cli.out.as_deref(), &table)?;
        }
        Command::Asymptotic { machine_pilot_length, deploy } => {
            let s = scenario(cli, deploy)?;
            let model = link_model(cli, &s, *machine_pilot_length)?;
            let p = sci_data_powers(&s);
            let all = model.evaluate(&p)?;
            let mut table = Table::new(vec!["scheme", "device_id", "antennas", "sinr", "asymptotic_sinr"]);
            for d in s.machines() {
                let finite = all[d].phases.iter().map(|ph| ph.sinr).fold(f64::INFINITY, f64::min);
                table.rows.push(vec![
                    cli.scheme.label().into(),
                    d.to_string(),
                    s.antennas().to_string(),
                    finite.to_string(),
                    model.asymptotic_sinr_machine(d, &p)?.value().to_string(),
                ]);
            }
            emit_table(cli.out.as_deref(), &table)?;
        }
        Command::Figure { id } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let spec = match &cli.config {
                Some(path) => toml::from_str::<ExperimentSpec>(&fs::read_to_string(path)?)?,
                None => {
                    let mut spec = ExperimentSpec::for_figure(*id, cli.seed, out);
                    if let Some(t) = cli.trials {
                        spec.trials = t;
                    }
                    spec
                }
            };
            let done = run_experiment(&spec)?;
            println!("wrote {} rows to {} ({})", done.rows, done.csv.display(), done.metadata.display());
        }
        Command::Validate { quick } => {
            let mut options = ValidationOptions { seed: cli.seed, frontiers: !quick, ..Default::default() };
            if let Some(t) = cli.trials {
                options.nmse_trials = t;
                options.mc_trials = t;
            }
            let report = validate(&options)?;
            for e in &report.entries {
                println!(
                    "{} {:<40} measured {:.6e} expected {:.6e} tol {:.1e}  {}",
                    if e.passed { "PASS" } else { "FAIL" },
                    e.name,
                    e.measured,
                    e.expected,
                    e.tolerance,
                    e.detail
                );
            }
            if let Some(path) = &cli.out {
                fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            let failed = report.entries.iter().filter(|e| !e.passed).count();
            println!("{} checks, {failed} failed", report.entries.len());
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn scenario(cli: &Cli, deploy: &Deploy) -> Result<Scenario> {
    match &cli.config {
        Some(path) => Scenario::load(path),
        None => place_devices(&SystemParams::table_one(deploy.antennas, deploy.ci_length, cli.seed)),
    }
}

fn link_model(cli: &Cli, s: &Scenario, machine_pilot_length: usize) -> Result<LinkModel> {
    let q = sci_pilot_powers(s);
    let machine_pilot_length = match cli.scheme {
        Scheme::Opa { group_size } => group_size,
        _ => machine_pilot_length,
    };
    let config = SchemeConfig::new(cli.scheme, s.params().ci_length, s.human_count(), machine_pilot_length).with_receiver(cli.receiver);
    let book = match cli.scheme {
        Scheme::Opa { group_size } => coexist_core::pilots::make_grouped_orthogonal_book(group_size, s.machine_count())?,
        _ => machine_book(cli.book, machine_pilot_length, s.machine_count(), s.params().rng_seed)?,
    };
    LinkModel::new(s, config, &book, &q)
}

fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => body(&mut fs::File::create(p)?),
        None => body(&mut io::stdout().lock()),
    }
}

fn emit_table(path: Option<&Path>, table: &Table) -> Result<()> {
    emit(path, |w| table.write_to(w))
}
