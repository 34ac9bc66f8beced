//! Reproducible experiment runs: one sweep per figure, CSV output with a JSON
//! metadata sidecar, and a self-check report.
//!
//! Every run is a pure function of its [`ExperimentSpec`]; sweep points may be
//! evaluated in parallel but rows are assembled in sweep order, so output is
//! identical across runs and worker counts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{nmse_curve, BookKind, NmseConfig};
use crate::pilots::{make_random_assignment_book, make_wbe_book, Estimator, PilotBook};
use crate::powerctl::{
    human_rate_ceiling, sci_data_powers, sci_pilot_powers, trace_opa_region, trace_rate_region, HumanTargetMode, RatePoint, RegionSetup,
};
use crate::rates::{LinkModel, Receiver, Scheme, SchemeConfig};
use crate::scenario::{place_devices, Scenario, SystemParams};

mod validate;

pub use validate::{validate, welch_check, CheckEntry, ValidationOptions, ValidationReport};

/// Figures with a built-in sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Estimation error against SNR.
    Fig1,
    /// Machine rate against machine pilot length.
    Fig2,
    /// Machine rate against antenna count with the infinite-antenna limits.
    Fig3,
    /// Rate regions per scheme and pilot family.
    Fig4,
    /// Rate regions for several antenna counts.
    Fig5,
    /// Rate regions against orthogonal scheduling of machines.
    Fig6,
    /// Rate regions for MRC and ZF humans.
    Fig7,
}

impl FigureId {
    pub const ALL: [FigureId; 7] =
        [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6, FigureId::Fig7];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        FigureId::ALL.into_iter().find(|f| f.as_str() == key).ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Where the deployment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioSource {
    /// Default parameters with a fresh placement from the master seed.
    Generated,
    /// A saved scenario; the antenna count is still set by the sweep.
    File(PathBuf),
}

/// Whether the placement is drawn once or several times per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMode {
    /// One placement from the master seed.
    Fixed,
    /// `drops` placements from seeds `seed, seed + 1, …`; rows carry the drop index.
    PerDrop { drops: usize },
}

/// The sweep axis of a figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// Pilot SNR `q β / σ²` in dB for a unit-gain, equal-power machine set.
    Snr { snr_db: Vec<f64>, machines: usize, pilot_length: usize, antennas: usize },
    /// Every machine pilot length from 1 to the machine count, per machine count.
    PilotLength { machine_counts: Vec<usize>, antennas: usize, ci_length: usize },
    /// Antenna counts, with the pilot length searched independently at each.
    Antennas { antennas: Vec<usize>, ci_length: usize, sc1_alpha: f64 },
    /// `r_h_points` human targets evenly spaced from zero to the human rate ceiling.
    Region { antennas: Vec<usize>, ci_length: usize, r_h_points: usize },
}

/// A complete, reproducible description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub figure: FigureId,
    pub scenario: ScenarioSource,
    pub sweep: Sweep,
    /// Monte-Carlo trials per point (estimation-error sweeps only).
    pub trials: usize,
    /// Directory receiving `<figure>.csv` and `<figure>.meta.json`.
    pub out_dir: PathBuf,
    pub seed: u64,
    pub placement: PlacementMode,
    pub human_mode: HumanTargetMode,
}

impl ExperimentSpec {
    /// Default sweep of `figure`.
    pub fn for_figure(figure: FigureId, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        let region = |antennas: Vec<usize>| Sweep::Region { antennas, ci_length: 100, r_h_points: 12 };
        let sweep = match figure {
            FigureId::Fig1 => Sweep::Snr { snr_db: (-2..=8).map(|i| 5.0 * i as f64).collect(), machines: 20, pilot_length: 10, antennas: 50 },
            FigureId::Fig2 => Sweep::PilotLength { machine_counts: vec![50, 100], antennas: 500, ci_length: 250 },
            FigureId::Fig3 => Sweep::Antennas {
                antennas: vec![10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000],
                ci_length: 100,
                sc1_alpha: 0.5,
            },
            FigureId::Fig4 => region(vec![100]),
            FigureId::Fig5 => region(vec![100, 200, 400]),
            FigureId::Fig6 | FigureId::Fig7 => region(vec![200]),
        };
        Self {
            figure,
            scenario: ScenarioSource::Generated,
            sweep,
            trials: 10_000,
            out_dir: out_dir.into(),
            seed,
            placement: PlacementMode::Fixed,
            human_mode: HumanTargetMode::Exact,
        }
    }

    /// Checks that the sweep kind belongs to the figure and the axes are usable.
    pub fn validate(&self) -> Result<()> {
        let ok = matches!(
            (self.figure, &self.sweep),
            (FigureId::Fig1, Sweep::Snr { .. })
                | (FigureId::Fig2, Sweep::PilotLength { .. })
                | (FigureId::Fig3, Sweep::Antennas { .. })
                | (FigureId::Fig4 | FigureId::Fig5 | FigureId::Fig6 | FigureId::Fig7, Sweep::Region { .. })
        );
        if !ok {
            return Err(Error::Configuration(format!("{} does not take this sweep", self.figure.as_str())));
        }
        let empty = match &self.sweep {
            Sweep::Snr { snr_db, .. } => snr_db.is_empty(),
            Sweep::PilotLength { machine_counts, .. } => machine_counts.is_empty(),
            Sweep::Antennas { antennas, .. } => antennas.is_empty(),
            Sweep::Region { antennas, r_h_points, .. } => antennas.is_empty() || *r_h_points < 2,
        };
        if empty {
            return Err(Error::Configuration("sweep axis is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if let PlacementMode::PerDrop { drops } = self.placement {
            if drops == 0 {
                return Err(Error::InvalidParameter("at least one drop is needed".into()));
            }
            if matches!(self.scenario, ScenarioSource::File(_)) {
                return Err(Error::Configuration("a scenario file fixes the placement; use fixed placement".into()));
            }
        }
        Ok(())
    }

    fn drops(&self) -> usize {
        match self.placement {
            PlacementMode::Fixed => 1,
            PlacementMode::PerDrop { drops } => drops,
        }
    }

    // Deployment for one drop, with the given antenna count and interval length.
    fn scenario(&self, drop: usize, antennas: usize, ci_length: usize) -> Result<Scenario> {
        match &self.scenario {
            ScenarioSource::Generated => {
                place_devices(&SystemParams::table_one(antennas, ci_length, self.seed.wrapping_add(drop as u64)))
            }
            ScenarioSource::File(path) => Scenario::load(path)?.with_antennas(antennas)?.with_ci_length(ci_length),
        }
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub rows: usize,
}

/// Provenance written next to every CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub figure: String,
    pub seed: u64,
    pub code_version: String,
    pub spec: ExperimentSpec,
    /// Deployment parameters of the first drop (absent for unit-gain sweeps).
    pub scenario: Option<SystemParams>,
    /// Modelling choices the figure captions leave open.
    pub settings: BTreeMap<String, String>,
    pub rows: usize,
}

/// Runs one figure sweep and writes `<figure>.csv` plus `<figure>.meta.json`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let mut settings = BTreeMap::new();
    let mut set = |k: &str, v: &str| {
        settings.insert(k.to_string(), v.to_string());
    };
    set("placement", match spec.placement {
        PlacementMode::Fixed => "fixed per run",
        PlacementMode::PerDrop { .. } => "redrawn per drop",
    });
    set("pilot_power", "statistical channel inversion for machines, q_max for humans");
    set("data_power_optimization", "data powers optimized with pilot powers held fixed");
    set("human_pilot_length", "K_h");
    let (table, scenario) = match spec.figure {
        FigureId::Fig1 => {
            set("snr_definition", "q beta / sigma^2 per pilot symbol with beta = 1 and sigma^2 = 1");
            set("power_control", "equal pilot powers");
            set("rpa_book", "redrawn every trial; LMMSE uses the realised assignment");
            (fig1(spec)?, None)
        }
        FigureId::Fig2 => {
            set("scheme", "SC-1 with every interval given to machines");
            set("data_power", "statistical channel inversion");
            set("rate", "minimum and mean machine rate, closed form");
            set("rpa_cross_correlation", "expected value 1/N_p");
            fig2(spec)?
        }
        FigureId::Fig3 => {
            set("data_power", "statistical channel inversion (machines), p_max (humans)");
            set("pilot_length_search", "independent grid search per scheme, pilot family and M");
            set("sc3_machine_powers", "pilot power equals data power");
            set("rate", "minimum machine rate, closed form; limit at the chosen pilot length");
            fig3(spec)?
        }
        _ => {
            set("human_target_mode", match spec.human_mode {
                HumanTargetMode::PerPhase => "per-phase SINR targets",
                HumanTargetMode::Exact => "sum of phase rates",
            });
            set("machine_objective", "common machine SINR, bisection");
            set("pilot_length_search", "every N_p^m from 1 to min(K_m, N - N_p^h - 1)");
            set("sc1_alpha_grid", "0 to 1 in steps of 0.01");
            set("r_h_grid", "evenly spaced from 0 to the largest human rate with machines silent");
            set("opa_human_constraint", "human targets enforced in every machine group's interval");
            region_figure(spec)?
        }
    };
    let stem = spec.figure.as_str();
    let csv_path = spec.out_dir.join(format!("{stem}.csv"));
    let rows = table.write(&csv_path)?;
    let meta = Metadata {
        figure: stem.into(),
        seed: spec.seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        spec: spec.clone(),
        scenario,
        settings,
        rows,
    };
    let meta_path = spec.out_dir.join(format!("{stem}.meta.json"));
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(ExperimentOutput { csv: csv_path, metadata: meta_path, rows })
}

/// Column names plus rows of already formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn write(&self, path: &Path) -> Result<usize> {
        let file = fs::File::create(path)?;
        self.write_to(file)?;
        Ok(self.rows.len())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fig1(spec: &ExperimentSpec) -> Result<Table> {
    let Sweep::Snr { snr_db, machines, pilot_length, antennas } = &spec.sweep else { unreachable!() };
    let mut table = Table::new(vec!["seed", "estimator", "book", "machines", "pilot_length", "antennas", "snr_db", "nmse", "std_error", "trials"]);
    for estimator in [Estimator::Ls, Estimator::Lmmse] {
        for book in [BookKind::Wbe, BookKind::Rpa] {
            let config = NmseConfig {
                machines: *machines,
                pilot_length: *pilot_length,
                antennas: *antennas,
                book,
                estimator,
                snr_db: snr_db.clone(),
                trials: spec.trials,
                seed: spec.seed,
            };
            for pt in nmse_curve(&config)? {
                table.rows.push(vec![
                    spec.seed.to_string(),
                    estimator.as_str().into(),
                    book.as_str().into(),
                    machines.to_string(),
                    pilot_length.to_string(),
                    antennas.to_string(),
                    pt.snr_db.to_string(),
                    pt.nmse.to_string(),
                    pt.std_error.to_string(),
                    spec.trials.to_string(),
                ]);
            }
        }
    }
    Ok(table)
}

/// Machine pilot book of the requested family.
pub fn machine_book(kind: BookKind, length: usize, machines: usize, seed: u64) -> Result<PilotBook> {
    match kind {
        BookKind::Wbe => make_wbe_book(length, machines, None),
        BookKind::Rpa => make_random_assignment_book(length, machines, seed),
    }
}

fn machine_rates(model: &LinkModel, p: &[f64]) -> Result<(f64, f64)> {
    let kh = model.human_count();
    let all = model.evaluate(p)?;
    let machines = &all[kh..];
    let min = machines.iter().map(|b| b.rate).fold(f64::INFINITY, f64::min);
    let mean = machines.iter().map(|b| b.rate).sum::<f64>() / machines.len() as f64;
    Ok((min, mean))
}

fn fig2(spec: &ExperimentSpec) -> Result<(Table, Option<SystemParams>)> {
    let Sweep::PilotLength { machine_counts, antennas, ci_length } = &spec.sweep else { unreachable!() };
    let mut table = Table::new(vec!["seed", "drop", "machines", "book", "pilot_length", "antennas", "ci_length", "min_rate", "mean_rate"]);
    let mut first = None;
    for drop in 0..spec.drops() {
        let cases: Vec<Scenario> = match &spec.scenario {
            ScenarioSource::Generated => machine_counts
                .iter()
                .map(|&km| {
                    let mut params = SystemParams::table_one(*antennas, *ci_length, spec.seed.wrapping_add(drop as u64));
                    params.humans = 0;
                    params.machines = km;
                    place_devices(&params)
                })
                .collect::<Result<_>>()?,
            ScenarioSource::File(_) => vec![spec.scenario(drop, *antennas, *ci_length)?],
        };
        for s in &cases {
            first.get_or_insert_with(|| s.params().clone());
            let km = s.machine_count();
            let q = sci_pilot_powers(s);
            let p = sci_data_powers(s);
            for book in [BookKind::Wbe, BookKind::Rpa] {
                let lengths: Vec<usize> = (1..=km.min(ci_length - 1)).collect();
                let rows: Vec<Vec<String>> = lengths
                    .par_iter()
                    .map(|&np| -> Result<Vec<String>> {
                        let config = SchemeConfig::new(Scheme::Sc1 { alpha: 0.0 }, *ci_length, s.human_count(), np);
                        let model = LinkModel::new(s, config, &machine_book(book, np, km, s.params().rng_seed)?, &q)?;
                        let (min, mean) = machine_rates(&model, &p)?;
                        Ok(vec![
                            spec.seed.to_string(),
                            drop.to_string(),
                            km.to_string(),
                            book.as_str().into(),
                            np.to_string(),
                            antennas.to_string(),
                            ci_length.to_string(),
                            min.to_string(),
                            mean.to_string(),
                        ])
                    })
                    .collect::<Result<_>>()?;
                table.rows.extend(rows);
            }
        }
    }
    Ok((table, first))
}

/// Finite-`M` machine rate at the best pilot length and the infinite-antenna
/// rate at that length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPoint {
    pub antennas: usize,
    pub machine_pilot_length: usize,
    pub min_rate: f64,
    pub asymptotic_rate: f64,
}

/// Searches `N_p^m` for the largest minimum machine rate at `antennas` under
/// channel-inverted pilot and data powers.
pub fn best_machine_rate(scenario: &Scenario, scheme: Scheme, book: BookKind, antennas: usize) -> Result<AntennaPoint> {
    let s = scenario.with_antennas(antennas)?;
    let n = s.params().ci_length;
    let (kh, km) = (s.human_count(), s.machine_count());
    let q = sci_pilot_powers(&s);
    let p = sci_data_powers(&s);
    let upper = match scheme {
        Scheme::Sc1 { .. } => km.min(n - 1),
        _ => km.min(n.saturating_sub(kh + 1)),
    };
    let mut best: Option<(f64, usize, LinkModel)> = None;
    for np in 1..=upper {
        let config = SchemeConfig::new(scheme, n, kh, np).with_sc3_equal_machine_powers(scheme == Scheme::Sc3);
        let model = LinkModel::new(&s, config, &machine_book(book, np, km, s.params().rng_seed)?, &q)?;
        let (min, _) = machine_rates(&model, &p)?;
        if best.as_ref().is_none_or(|b| min > b.0) {
            best = Some((min, np, model));
        }
    }
    let (min_rate, np, model) = best.ok_or_else(|| Error::Configuration("no machine pilot length fits the interval".into()))?;
    let prelog = model.prelogs(kh).iter().sum::<f64>();
    let mut limit = f64::INFINITY;
    for d in kh..kh + km {
        let g = model.asymptotic_sinr_machine(d, &p)?.value();
        limit = limit.min(prelog * (1.0 + g).log2());
    }
    Ok(AntennaPoint { antennas, machine_pilot_length: np, min_rate, asymptotic_rate: limit })
}

fn fig3(spec: &ExperimentSpec) -> Result<(Table, Option<SystemParams>)> {
    let Sweep::Antennas { antennas, ci_length, sc1_alpha } = &spec.sweep else { unreachable!() };
    let mut table = Table::new(vec![
        "seed",
        "drop",
        "scheme",
        "book",
        "antennas",
        "ci_length",
        "machine_pilot_length",
        "min_rate",
        "asymptotic_rate",
    ]);
    let mut first = None;
    for drop in 0..spec.drops() {
        let s = spec.scenario(drop, antennas[0], *ci_length)?;
        first.get_or_insert_with(|| s.params().clone());
        for scheme in [Scheme::Sc1 { alpha: *sc1_alpha }, Scheme::Sc2, Scheme::Sc3] {
            for book in [BookKind::Wbe, BookKind::Rpa] {
                let pts: Vec<AntennaPoint> =
                    antennas.par_iter().map(|&m| best_machine_rate(&s, scheme, book, m)).collect::<Result<_>>()?;
                for pt in pts {
                    table.rows.push(vec![
                        spec.seed.to_string(),
                        drop.to_string(),
                        scheme.label().into(),
                        book.as_str().into(),
                        pt.antennas.to_string(),
                        ci_length.to_string(),
                        pt.machine_pilot_length.to_string(),
                        pt.min_rate.to_string(),
                        pt.asymptotic_rate.to_string(),
                    ]);
                }
            }
        }
    }
    Ok((table, first))
}

/// One curve of a rate-region figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSeries {
    pub scheme: Scheme,
    pub book: BookKind,
    pub receiver: Receiver,
}

/// Curves drawn by a rate-region figure.
pub fn region_series(figure: FigureId) -> Vec<RegionSeries> {
    let schemes = [Scheme::Sc1 { alpha: 0.0 }, Scheme::Sc2, Scheme::Sc3];
    let s = |scheme, book, receiver| RegionSeries { scheme, book, receiver };
    match figure {
        FigureId::Fig4 => schemes
            .iter()
            .flat_map(|&sc| [BookKind::Wbe, BookKind::Rpa].map(|b| s(sc, b, Receiver::Mrc)))
            .collect(),
        FigureId::Fig5 => schemes.iter().map(|&sc| s(sc, BookKind::Wbe, Receiver::Mrc)).collect(),
        FigureId::Fig6 => schemes
            .iter()
            .map(|&sc| s(sc, BookKind::Wbe, Receiver::Mrc))
            .chain([s(Scheme::Opa { group_size: 9 }, BookKind::Wbe, Receiver::Mrc)])
            .collect(),
        FigureId::Fig7 => schemes
            .iter()
            .flat_map(|&sc| [Receiver::Mrc, Receiver::Zf].map(|r| s(sc, BookKind::Wbe, r)))
            .collect(),
        _ => Vec::new(),
    }
}

/// Evenly spaced human targets from zero to `ceiling`.
pub fn r_h_grid(ceiling: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| ceiling * i as f64 / (points - 1) as f64).collect()
}

/// Traces one region curve.
pub fn trace_series(scenario: &Scenario, series: RegionSeries, mode: HumanTargetMode, grid: &[f64]) -> Result<Vec<RatePoint>> {
    let q = sci_pilot_powers(scenario);
    let setup = RegionSetup::new(series.scheme, scenario, series.book).with_receiver(series.receiver).with_human_mode(mode);
    match series.scheme {
        Scheme::Opa { group_size } => trace_opa_region(scenario, &q, grid, group_size, &setup),
        _ => trace_rate_region(scenario, &setup, &q, grid),
    }
}

/// Header of rate-region CSV files.
pub const REGION_HEADER: [&str; 13] = [
    "seed",
    "drop",
    "scheme",
    "book",
    "receiver",
    "antennas",
    "ci_length",
    "r_h_target",
    "r_m",
    "feasible",
    "machine_pilot_length",
    "alpha",
    "solver_iterations",
];

/// One rate-region CSV row.
pub fn region_row(seed: u64, drop: usize, book: BookKind, scenario: &Scenario, pt: &RatePoint) -> Vec<String> {
    vec![
        seed.to_string(),
        drop.to_string(),
        pt.scheme.clone(),
        book.as_str().into(),
        pt.receiver.as_str().into(),
        scenario.antennas().to_string(),
        scenario.params().ci_length.to_string(),
        pt.r_h_target.to_string(),
        pt.r_m.to_string(),
        pt.feasible.to_string(),
        opt(pt.machine_pilot_length),
        opt(pt.alpha),
        pt.solver_iterations.to_string(),
    ]
}

fn region_figure(spec: &ExperimentSpec) -> Result<(Table, Option<SystemParams>)> {
    let Sweep::Region { antennas, ci_length, r_h_points } = &spec.sweep else { unreachable!() };
    let series = region_series(spec.figure);
    let mut table = Table::new(REGION_HEADER.to_vec());
    let mut first = None;
    for drop in 0..spec.drops() {
        for &m in antennas {
            let s = spec.scenario(drop, m, *ci_length)?;
            first.get_or_insert_with(|| s.params().clone());
            let q = sci_pilot_powers(&s);
            let receivers: Vec<Receiver> = series.iter().map(|x| x.receiver).collect();
            let mut ceiling: f64 = 0.0;
            for rx in [Receiver::Mrc, Receiver::Zf] {
                if receivers.contains(&rx) {
                    ceiling = ceiling.max(human_rate_ceiling(&s, *ci_length, s.human_count(), rx, &q)?);
                }
            }
            let grid = r_h_grid(ceiling, *r_h_points);
            for x in &series {
                for pt in trace_series(&s, *x, spec.human_mode, &grid)? {
                    table.rows.push(region_row(spec.seed, drop, x.book, &s, &pt));
                }
            }
        }
    }
    Ok((table, first))
}

/// Per-phase closed-form rows for every device of `model` at powers `p`.
pub fn rate_table(model: &LinkModel, p: &[f64]) -> Result<Table> {
    let mut table = Table::new(vec![
        "scheme",
        "receiver",
        "device_id",
        "class",
        "phase",
        "M",
        "N",
        "N_p_h",
        "N_p_m",
        "alpha",
        "prelog",
        "gamma",
        "signal",
        "noncoherent",
        "coherent",
        "noise",
        "sinr_linear",
        "rate_bpshz",
    ]);
    let c = model.config();
    let alpha = match c.scheme {
        Scheme::Sc1 { alpha } => alpha.to_string(),
        _ => String::new(),
    };
    for b in model.evaluate(p)? {
        for (i, ph) in b.phases.iter().enumerate() {
            table.rows.push(vec![
                c.scheme.label().into(),
                b.receiver.as_str().into(),
                b.device.to_string(),
                b.class.as_str().into(),
                i.to_string(),
                model.antennas().to_string(),
                c.ci_length.to_string(),
                c.human_pilot_length.to_string(),
                c.machine_pilot_length.to_string(),
                alpha.clone(),
                ph.prelog.to_string(),
                ph.gamma.to_string(),
                ph.signal.to_string(),
                ph.noncoherent.to_string(),
                ph.coherent.to_string(),
                ph.noise.to_string(),
                ph.sinr.to_string(),
                b.rate.to_string(),
            ]);
        }
    }
    Ok(table)
}
