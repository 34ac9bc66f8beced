//! Self-check suite: identities, error floors, closed-form against Monte-Carlo
//! agreement, solver contracts and frontier orderings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimation::{nmse_curve, BookKind, NmseConfig};
use crate::pilots::{
    closed_form_power, default_wbe_rows, gram_stats, make_random_assignment_book, make_wbe_book, min_power_vector, wbe_sequences, Estimator,
    PilotBook, PilotKind,
};
use crate::powerctl::{
    bisect_common_target, human_rate_ceiling, maxmin_feasible, sci_data_powers, sci_pilot_powers, target_shortfall, Class, DeviceTarget, HumanTargetMode,
    RatePoint, SolverOptions,
};
use crate::rates::{human_mrc_sinr, human_zf_sinr, mc_use_and_forget, LinkModel, McOptions, Receiver, Scheme, SchemeConfig};
use crate::scenario::{place_devices, Device, Scenario, SystemParams};

use super::{r_h_grid, trace_series, RegionSeries};

/// One line of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckEntry {
    fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let passed = (measured - expected).abs() <= tolerance;
        Self { name: name.into(), passed, measured, expected, tolerance, detail: detail.into() }
    }

    fn flag(name: impl Into<String>, passed: bool, measured: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, measured, expected: 0.0, tolerance: 0.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Trials of the estimation-error check.
    pub nmse_trials: usize,
    /// Trials of each closed-form against Monte-Carlo comparison.
    pub mc_trials: usize,
    /// Include the rate-region orderings, the slowest part of the suite.
    pub frontiers: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { seed: 2024, nmse_trials: 10_000, mc_trials: 10_000, frontiers: true }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Welch-equality check of the DFT-row book `u` with `count` sequences.
///
/// `u` is not validated, so a corrupted selection shows up as a failed entry.
pub fn welch_check(count: usize, u: &[usize]) -> Result<CheckEntry> {
    let length = u.len();
    let book = PilotBook::from_sequences(PilotKind::Wbe { u: u.to_vec() }, wbe_sequences(count, u))?;
    let stats = gram_stats(&book)?;
    let (np, km) = (length as f64, count as f64);
    let sum_err = rel(stats.welch_sum, km * km / np);
    let row_err = stats.row_sums.iter().map(|&r| rel(r, km / np)).fold(0.0, f64::max);
    let rho_err = rel(stats.spectral_radius, km / np);
    let passed = sum_err <= 1e-9 && row_err <= 1e-9 && rho_err <= 1e-8;
    Ok(CheckEntry {
        name: format!("welch equality N_p={length} K_m={count}"),
        passed,
        measured: stats.welch_sum,
        expected: km * km / np,
        tolerance: 1e-9,
        detail: format!("relative deviations: sum {sum_err:.2e}, rows {row_err:.2e}, spectral radius {rho_err:.2e}"),
    })
}

fn orthogonality() -> Result<CheckEntry> {
    let book = make_wbe_book(20, 20, None)?;
    let g = book.sequences().adjoint() * book.sequences();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    Ok(CheckEntry::within("WBE with N_p = K_m is orthonormal", worst, 0.0, 1e-10, "max |G - I|"))
}

fn error_floors(options: &ValidationOptions) -> Result<Vec<CheckEntry>> {
    let mut out = Vec::new();
    for (estimator, floor) in [(Estimator::Lmmse, 0.5), (Estimator::Ls, 1.0)] {
        let config = NmseConfig {
            machines: 20,
            pilot_length: 10,
            antennas: 50,
            book: BookKind::Wbe,
            estimator,
            snr_db: vec![40.0],
            trials: options.nmse_trials,
            seed: options.seed,
        };
        let pt = nmse_curve(&config)?[0];
        out.push(CheckEntry::within(
            format!("{} error floor at 40 dB", estimator.as_str()),
            pt.nmse,
            floor,
            0.02 * floor,
            format!("standard error {:.2e} over {} trials", pt.std_error, options.nmse_trials),
        ));
    }
    Ok(out)
}

fn power_identity(seed: u64) -> Result<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut inconsistent = 0;
    for _ in 0..100 {
        let np = rng.random_range(2..=16);
        let km = rng.random_range(np..=3 * np);
        let estimator = if rng.random_bool(0.5) { Estimator::Ls } else { Estimator::Lmmse };
        let e = match estimator {
            Estimator::Ls => rng.random_range(0.01..3.0),
            Estimator::Lmmse => rng.random_range(0.01..0.99),
        };
        let betas: Vec<f64> = (0..km).map(|_| 10f64.powf(rng.random_range(-12.0..-7.0))).collect();
        let stats = gram_stats(&make_wbe_book(np, km, None)?)?;
        match (closed_form_power(&betas, e, 2e-13, np, km, estimator), min_power_vector(&stats, &betas, e, 2e-13, np, estimator)) {
            (Ok(a), Ok(b)) => worst = a.iter().zip(&b).map(|(x, y)| rel(*x, *y)).fold(worst, f64::max),
            (Err(_), Err(_)) => {}
            _ => inconsistent += 1,
        }
    }
    Ok(CheckEntry {
        name: "closed-form power equals matrix solution on WBE books".into(),
        passed: worst <= 1e-8 && inconsistent == 0,
        measured: worst,
        expected: 0.0,
        tolerance: 1e-8,
        detail: format!("{inconsistent} draws where only one path reported infeasibility"),
    })
}

fn table_one(antennas: usize, seed: u64) -> Result<Scenario> {
    place_devices(&SystemParams::table_one(antennas, 100, seed))
}

fn mc_agreement(options: &ValidationOptions) -> Result<Vec<CheckEntry>> {
    let s = table_one(50, options.seed)?;
    let q = sci_pilot_powers(&s);
    let p = vec![s.params().p_max_w; s.len()];
    let book = make_wbe_book(20, s.machine_count(), None)?;
    let mut out = Vec::new();
    for scheme in [Scheme::Sc1 { alpha: 0.5 }, Scheme::Sc2, Scheme::Sc3] {
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, 5, 20), &book, &q)?;
        let closed = model.evaluate(&p)?;
        let mc = mc_use_and_forget(&model, &p, &McOptions::new(options.mc_trials, options.seed))?;
        // (relative error, closed form, Monte-Carlo, device, standard error)
        let mut worst = (0.0, 0.0, 0.0, 0usize, 0.0);
        for est in &mc {
            let cf = closed[est.device].phases[est.phase].sinr;
            if rel(est.sinr, cf) >= worst.0 {
                worst = (rel(est.sinr, cf), cf, est.sinr, est.device, est.std_error);
            }
        }
        out.push(CheckEntry {
            name: format!("{} closed form against Monte-Carlo", scheme.label()),
            passed: worst.0 <= 0.03,
            measured: worst.0,
            expected: 0.0,
            tolerance: 0.03,
            detail: format!(
                "worst device {}: closed form {:.6e}, Monte-Carlo {:.6e}, 3-sigma band ±{:.2e}",
                worst.3,
                worst.1,
                worst.2,
                3.0 * worst.4
            ),
        });
    }
    Ok(out)
}

fn asymptotics(seed: u64) -> Result<Vec<CheckEntry>> {
    // channel inversion on pilots and data, as in the antenna sweep
    let s = table_one(100_000, seed)?;
    let q = sci_pilot_powers(&s);
    let p = sci_data_powers(&s);
    let book = make_wbe_book(20, s.machine_count(), None)?;
    let kh = s.human_count();
    let mut out = Vec::new();
    let mut limits = Vec::new();
    for scheme in [Scheme::Sc1 { alpha: 0.5 }, Scheme::Sc2, Scheme::Sc3] {
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, 5, 20), &book, &q)?;
        let mut worst: f64 = 0.0;
        let mut lim = Vec::new();
        for d in kh..s.len() {
            let finite = model.breakdown(d, &p)?.phases[0].sinr;
            let limit = model.asymptotic_sinr_machine(d, &p)?.value();
            worst = worst.max(rel(finite, limit));
            lim.push(limit);
        }
        limits.push(lim);
        out.push(CheckEntry::within(
            format!("{} machine SINR at M = 1e5 against its limit", scheme.label()),
            worst,
            0.0,
            0.01,
            "largest relative gap over machines",
        ));
    }
    let gap = limits[0].iter().zip(&limits[1]).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    out.push(CheckEntry::within("SC-1 and SC-2 machine limits coincide", gap, 0.0, 1e-12, "largest relative gap"));
    Ok(out)
}

fn zf_identity(seed: u64) -> CheckEntry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let kh = rng.random_range(1..=8);
        let m = rng.random_range(kh + 1..=400);
        let humans: Vec<(f64, f64, f64)> =
            (0..kh).map(|_| (rng.random_range(0.0..1.0), 10f64.powf(rng.random_range(-12.0..-7.0)), rng.random_range(0.01..1.0))).collect();
        let machine_term = if rng.random_bool(0.25) { 0.0 } else { 10f64.powf(rng.random_range(-14.0..-9.0)) };
        let (p, b, g) = humans[0];
        let zf = human_zf_sinr(m, b, p, g, &humans, machine_term, 2e-13).expect("M > K_h");
        let rewritten: Vec<(f64, f64)> = humans.iter().map(|(p, b, g)| (*p, b * (1.0 - g))).collect();
        let mrc = human_mrc_sinr((m - kh) as f64, b, p, g, &rewritten, machine_term, 2e-13);
        worst = worst.max(rel(zf, mrc));
    }
    CheckEntry::within("ZF human SINR equals rewritten MRC SINR", worst, 0.0, 1e-12, "largest relative gap over 200 draws")
}

fn reductions(seed: u64) -> Result<Vec<CheckEntry>> {
    let s = table_one(100, seed)?;
    let q = sci_pilot_powers(&s);
    let book = make_wbe_book(20, s.machine_count(), None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    let kh = s.human_count();

    // SC-2 without humans against SC-1 machines
    let mut params = s.params().clone();
    params.humans = 0;
    let devices = s.devices()[kh..].iter().enumerate().map(|(i, d)| Device { id: i, ..d.clone() }).collect();
    let machines_only = Scenario::from_devices(params, devices)?;
    let sc2 = LinkModel::new(&machines_only, SchemeConfig::new(Scheme::Sc2, 100, 0, 20), &book, &q[kh..])?;
    let sc1 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc1 { alpha: 0.0 }, 100, kh, 20), &book, &q)?;
    let mut worst2: f64 = 0.0;
    for d in 0..machines_only.len() {
        worst2 = worst2.max(rel(sc2.breakdown(d, &p[kh..])?.phases[0].sinr, sc1.breakdown(d + kh, &p)?.phases[0].sinr));
    }

    // SC-3 with silent humans against SC-1 machines
    let mut silent = p.clone();
    silent[..kh].iter_mut().for_each(|x| *x = 0.0);
    let sc3 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc3, 100, 5, 20), &book, &q)?;
    let sc1 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc1 { alpha: 0.5 }, 100, 5, 20), &book, &q)?;
    let mut worst3: f64 = 0.0;
    for d in kh..s.len() {
        worst3 = worst3.max(rel(sc3.breakdown(d, &silent)?.phases[0].sinr, sc1.breakdown(d, &silent)?.phases[0].sinr));
    }
    Ok(vec![
        CheckEntry::within("SC-2 without humans reduces to SC-1 machines", worst2, 0.0, 1e-12, "largest relative SINR gap"),
        CheckEntry::within("SC-3 with silent humans reduces to SC-1 machines", worst3, 0.0, 1e-12, "largest relative SINR gap"),
    ])
}

fn rpa_expectation(seed: u64) -> Result<CheckEntry> {
    let (np, draws) = (10usize, 100_000u64);
    let mut hits = 0u64;
    for d in 0..draws {
        let book = make_random_assignment_book(np, 2, seed.wrapping_add(d))?;
        hits += book.inner(0, 1).norm_sqr().round() as u64;
    }
    let p = 1.0 / np as f64;
    let mean = hits as f64 / draws as f64;
    let band = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
    Ok(CheckEntry::within("random assignment cross-correlation mean", mean, p, band, format!("{draws} independent pairs, 3-sigma binomial band")))
}

fn solver_contracts(seed: u64) -> Result<Vec<CheckEntry>> {
    let s = table_one(200, seed)?;
    let q = sci_pilot_powers(&s);
    let book = make_wbe_book(20, s.machine_count(), None)?;
    // a budget large enough to prove infeasibility right at the boundary
    let options = SolverOptions { max_iterations: 1_000_000, ..SolverOptions::default() };
    let p_max = s.params().p_max_w;
    let kh = s.human_count();
    let mut out = Vec::new();
    for scheme in [Scheme::Sc2, Scheme::Sc3] {
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, kh, 20), &book, &q)?;
        let at = |t: f64| -> Vec<DeviceTarget> {
            (0..s.len()).map(|d| if d < kh { DeviceTarget::Rate(1.0) } else { DeviceTarget::Sinr(t) }).collect()
        };
        let found = bisect_common_target(&model, Class::Machine, &at(0.0), p_max, None, &options)?
            .expect("a human rate of 1 bit/s/Hz is feasible at M = 200");
        let bracket = found.upper / found.sinr - 1.0;
        let solved = maxmin_feasible(&model, &at(found.sinr), p_max, None, &options)?;
        let verify = target_shortfall(&model, &at(found.sinr), &solved.p)?;
        let beyond = maxmin_feasible(&model, &at(found.upper), p_max, None, &options)?;
        let label = scheme.label();
        out.push(CheckEntry::flag(
            format!("{label} fixed-point iterates are non-decreasing"),
            solved.monotone,
            solved.iterations as f64,
            "iterations of the final solve",
        ));
        out.push(CheckEntry::within(format!("{label} solved powers meet every target"), verify.max(0.0), 0.0, 1e-6, "largest relative shortfall"));
        out.push(CheckEntry {
            name: format!("{label} bisection brackets the machine SINR boundary"),
            passed: bracket <= 1e-5 && found.upper_certified && solved.feasible && !beyond.feasible && !beyond.exhausted,
            measured: bracket,
            expected: 0.0,
            tolerance: 1e-5,
            detail: format!("feasible at {:.9e}, proven infeasible at {:.9e}", found.sinr, found.upper),
        });
    }
    Ok(out)
}

/// Compares two frontiers on a common grid. A point of `upper` passes when
/// `lower` is infeasible there or `upper` is feasible with at least the same
/// machine rate (up to the solver resolution).
pub fn frontier_gaps(upper: &[RatePoint], lower: &[RatePoint]) -> Vec<f64> {
    upper
        .iter()
        .zip(lower)
        .map(|(a, b)| match (a.feasible, b.feasible) {
            (_, false) => 0.0,
            (false, true) => f64::INFINITY,
            (true, true) => (b.r_m - a.r_m).max(0.0),
        })
        .collect()
}

// Region points are certified lower bounds whose accuracy is limited by the
// per-solve iteration budget to about 1e-4 bits/s/Hz.
const FRONTIER_SLACK: f64 = 1e-4;

fn frontier_entry(name: &str, gaps: &[f64], grid: &[f64], allowed: impl Fn(f64) -> bool) -> CheckEntry {
    let failing: Vec<f64> = gaps.iter().zip(grid).filter(|(g, r)| **g > FRONTIER_SLACK && !allowed(**r)).map(|(_, r)| *r).collect();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    CheckEntry {
        name: name.into(),
        passed: failing.is_empty(),
        measured: worst,
        expected: 0.0,
        tolerance: FRONTIER_SLACK,
        detail: if failing.is_empty() {
            format!("{} grid points", grid.len())
        } else {
            format!("violated at R_h = {failing:?}")
        },
    }
}

fn frontiers(seed: u64) -> Result<Vec<CheckEntry>> {
    let s = table_one(200, seed)?;
    let q = sci_pilot_powers(&s);
    let ceiling = human_rate_ceiling(&s, 100, s.human_count(), Receiver::Mrc, &q)?;
    let grid = r_h_grid(ceiling, 12);
    let mode = HumanTargetMode::Exact;
    let trace = |scheme, book, receiver| trace_series(&s, RegionSeries { scheme, book, receiver }, mode, &grid);
    let mut out = Vec::new();
    let schemes = [Scheme::Sc1 { alpha: 0.0 }, Scheme::Sc2, Scheme::Sc3];
    let mut wbe_mrc = Vec::new();
    for scheme in schemes {
        let wbe = trace(scheme, BookKind::Wbe, Receiver::Mrc)?;
        let rpa = trace(scheme, BookKind::Rpa, Receiver::Mrc)?;
        let zf = trace(scheme, BookKind::Wbe, Receiver::Zf)?;
        out.push(frontier_entry(&format!("{} WBE frontier above RPA", scheme.label()), &frontier_gaps(&wbe, &rpa), &grid, |_| false));
        out.push(frontier_entry(&format!("{} ZF frontier above MRC", scheme.label()), &frontier_gaps(&zf, &wbe), &grid, |_| false));
        wbe_mrc.push(wbe);
    }
    let top = 2.0 * ceiling / 3.0;
    out.push(frontier_entry("SC-3 above SC-2 on the upper third", &frontier_gaps(&wbe_mrc[2], &wbe_mrc[1]), &grid, |r| r < top - 1e-12));
    let opa = trace(Scheme::Opa { group_size: 9 }, BookKind::Wbe, Receiver::Mrc)?;
    let near_axis = 0.2 * ceiling;
    out.push(frontier_entry("SC-3 above OPA away from the R_m axis", &frontier_gaps(&wbe_mrc[2], &opa), &grid, |r| r <= near_axis));
    Ok(out)
}

/// Runs every check and returns one entry per measured quantity.
pub fn validate(options: &ValidationOptions) -> Result<ValidationReport> {
    let mut entries = Vec::new();
    for (np, km) in [(5, 45), (10, 20), (10, 45), (20, 45)] {
        entries.push(welch_check(km, &default_wbe_rows(np, km))?);
    }
    entries.push(orthogonality()?);
    entries.extend(error_floors(options)?);
    entries.push(power_identity(options.seed)?);
    entries.extend(mc_agreement(options)?);
    entries.extend(asymptotics(options.seed)?);
    entries.push(zf_identity(options.seed));
    entries.extend(reductions(options.seed)?);
    entries.push(rpa_expectation(options.seed)?);
    entries.extend(solver_contracts(options.seed)?);
    if options.frontiers {
        entries.extend(frontiers(options.seed)?);
    }
    Ok(ValidationReport { entries })
}
