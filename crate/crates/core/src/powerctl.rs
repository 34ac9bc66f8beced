//! Pilot power selection, data-power feasibility and rate-region tracing.
//!
//! With pilot powers fixed, every effective SINR is `c_k p_k / I_k(p)` with
//! `I_k` non-decreasing in `p`. Iterating `p_k ← t_k I_k(p) / c_k` from zero
//! produces a non-decreasing sequence that converges to the smallest power
//! vector meeting the targets whenever one exists, so exceeding the power cap
//! proves infeasibility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::BookKind;
use crate::pilots::{make_grouped_orthogonal_book, make_random_assignment_book, make_wbe_book, PilotBook};
use crate::rates::{LinkModel, PhaseForm, Receiver, Scheme, SchemeConfig};
use crate::scenario::Scenario;

/// Pilot and data powers of every device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub q_max_w: f64,
    pub p_max_w: f64,
}

impl PowerProfile {
    pub fn new(q: Vec<f64>, p: Vec<f64>, q_max_w: f64, p_max_w: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidParameter("pilot and data power vectors differ in length".into()));
        }
        let tol = |cap: f64| cap * (1.0 + 1e-12);
        if q.iter().any(|&x| !(x >= 0.0) || x > tol(q_max_w)) || p.iter().any(|&x| !(x >= 0.0) || x > tol(p_max_w)) {
            return Err(Error::Domain("powers must lie within [0, cap]".into()));
        }
        Ok(Self { q, p, q_max_w, p_max_w })
    }
}

/// Statistical channel inversion for machines (`q_k = q_max β_min / β_k`) and
/// full pilot power for humans.
pub fn sci_pilot_powers(scenario: &Scenario) -> Vec<f64> {
    let q_max = scenario.params().q_max_w;
    scenario
        .devices()
        .iter()
        .map(|d| match d.class {
            crate::scenario::DeviceClass::Human => q_max,
            crate::scenario::DeviceClass::Machine => q_max * scenario.beta_min() / d.beta,
        })
        .collect()
}

/// Channel inversion applied to data: machines send `p_max β_min / β_k`,
/// humans `p_max`.
pub fn sci_data_powers(scenario: &Scenario) -> Vec<f64> {
    let p_max = scenario.params().p_max_w;
    scenario
        .devices()
        .iter()
        .map(|d| match d.class {
            crate::scenario::DeviceClass::Human => p_max,
            crate::scenario::DeviceClass::Machine => p_max * scenario.beta_min() / d.beta,
        })
        .collect()
}

/// Requirement placed on one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeviceTarget {
    /// Every data phase reaches this SINR.
    Sinr(f64),
    /// The phases together reach this rate in bits/s/Hz.
    Rate(f64),
}

/// How a human rate target becomes a power requirement when the human has
/// several data phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HumanTargetMode {
    /// Each phase must reach the SINR whose single-log rate over all phases equals the target.
    PerPhase,
    /// The sum of the phase rates must reach the target.
    Exact,
}

impl HumanTargetMode {
    pub fn target(&self, rate: f64, prelogs: &[f64]) -> DeviceTarget {
        match self {
            HumanTargetMode::PerPhase => DeviceTarget::Sinr(sinr_for_rate(rate, prelogs.iter().sum())),
            HumanTargetMode::Exact => DeviceTarget::Rate(rate),
        }
    }
}

/// `2^{R/a} − 1`, infinite when the pre-log is zero and the rate positive.
pub fn sinr_for_rate(rate: f64, prelog: f64) -> f64 {
    if rate <= 0.0 {
        0.0
    } else if prelog <= 0.0 {
        f64::INFINITY
    } else {
        (rate / prelog).exp2() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Fixed-point iterations per solve; a solve that runs out counts as infeasible,
    /// which only lowers a bisection bracket.
    pub max_iterations: usize,
    /// Stop once the largest relative power change falls below this.
    pub tolerance: f64,
    /// Bisection steps on the common machine SINR.
    pub bisection_steps: usize,
    /// Stop the bisection once `upper / lower − 1` falls below this.
    pub bisection_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 2_000, tolerance: 1e-10, bisection_steps: 40, bisection_tolerance: 1e-5 }
    }
}

/// Outcome of one fixed-point solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Powers meeting every target when feasible; the last iterate otherwise.
    pub p: Vec<f64>,
    /// Last iterate, which never exceeds the smallest feasible power vector
    /// and is therefore a valid start for higher targets.
    pub lower: Vec<f64>,
    pub iterations: usize,
    /// Every iterate was componentwise no smaller than the previous one.
    pub monotone: bool,
    /// Largest relative change in the final step.
    pub final_step: f64,
    pub reason: Option<String>,
    /// The iteration budget ran out: the infeasible verdict is unproven.
    pub exhausted: bool,
}

// Smallest x with Σ a_i log2(1 + c_i x / I_i) ≥ rate. The left side is concave
// and increasing, so Newton's method started below the root climbs to it
// monotonically; the per-phase SINR inversions bracket the root.
fn power_for_rate(rate: f64, forms: &[PhaseForm]) -> f64 {
    let total: f64 = forms.iter().map(|ph| ph.prelog).sum();
    let t = sinr_for_rate(rate, total);
    let per_phase = || forms.iter().map(|ph| t * ph.interference / ph.coeff);
    let hi = per_phase().fold(0.0, f64::max);
    if !hi.is_finite() {
        return f64::INFINITY;
    }
    let mut x = per_phase().fold(f64::INFINITY, f64::min);
    for _ in 0..100 {
        let (mut f, mut df) = (0.0, 0.0);
        for ph in forms {
            let s = ph.coeff / ph.interference;
            f += ph.prelog * (1.0 + s * x).log2();
            df += ph.prelog * s / ((1.0 + s * x) * std::f64::consts::LN_2);
        }
        let next = (x + (rate - f) / df).min(hi);
        if !(next > x * (1.0 + 4.0 * f64::EPSILON)) {
            return next.max(x);
        }
        x = next;
    }
    x
}

fn required_power(target: DeviceTarget, forms: &[PhaseForm]) -> f64 {
    match target {
        DeviceTarget::Sinr(t) if t <= 0.0 => 0.0,
        DeviceTarget::Rate(r) if r <= 0.0 => 0.0,
        DeviceTarget::Sinr(t) => forms.iter().map(|ph| t * ph.interference / ph.coeff).fold(0.0, f64::max),
        DeviceTarget::Rate(r) => power_for_rate(r, forms),
    }
}

fn apply(model: &LinkModel, targets: &[DeviceTarget], layout: &[std::ops::Range<usize>], p: &[f64], forms: &mut Vec<PhaseForm>) -> Result<Vec<f64>> {
    model.phase_forms(p, forms)?;
    Ok((0..p.len()).map(|d| required_power(targets[d], &forms[layout[d].clone()])).collect())
}

/// Runs the interference-function iteration `p ← T(p)` for `targets` with cap `p_max`.
///
/// `start` must not exceed the smallest feasible power vector, e.g. zero or
/// the `lower` field of a solve with componentwise lower targets; the
/// iteration is then non-decreasing. The solve stops when the relative step
/// falls below the tolerance, when the geometric tail of the iteration gives
/// a point `p̂` with `T(p̂) ≤ p̂` (every target met, verified directly), or when
/// a verified point with `T(p̃) ≥ p̃` exceeds the cap.
pub fn maxmin_feasible(
    model: &LinkModel,
    targets: &[DeviceTarget],
    p_max: f64,
    start: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<Feasibility> {
    let k = model.device_count();
    if targets.len() != k {
        return Err(Error::InvalidParameter(format!("{} targets for {k} devices", targets.len())));
    }
    if targets.iter().any(|t| match t {
        DeviceTarget::Sinr(x) | DeviceTarget::Rate(x) => !(*x >= 0.0),
    }) {
        return Err(Error::Domain("targets must be non-negative".into()));
    }
    let layout = model.phase_layout();
    let mut p = match start {
        Some(s) if s.len() == k => s.to_vec(),
        Some(_) => return Err(Error::InvalidParameter("start vector has the wrong length".into())),
        None => vec![0.0; k],
    };
    let mut forms = Vec::new();
    let mut monotone = true;
    let mut step = f64::INFINITY;
    let mut prev_delta: Option<Vec<f64>> = None;
    let cap = p_max * (1.0 + 1e-12);
    let result = |feasible, p: Vec<f64>, lower: Vec<f64>, it, monotone, step, reason: Option<&str>| Feasibility {
        feasible,
        p,
        lower,
        iterations: it,
        monotone,
        final_step: step,
        reason: reason.map(str::to_string),
        exhausted: false,
    };
    for it in 1..=options.max_iterations {
        let next = apply(model, targets, &layout, &p, &mut forms)?;
        step = next
            .iter()
            .zip(&p)
            .map(|(&n, &o)| if n == o { 0.0 } else { (n - o).abs() / n.abs().max(o.abs()) })
            .fold(0.0, f64::max);
        if next.iter().zip(&p).any(|(&n, &o)| n < o * (1.0 - 1e-12)) {
            monotone = false;
        }
        if next.iter().any(|x| !x.is_finite() || *x > cap) {
            return Ok(result(false, next, p, it, monotone, step, Some("a device needs more than the power cap")));
        }
        if step < options.tolerance {
            return Ok(result(true, next.clone(), next, it, monotone, step, None));
        }
        let delta: Vec<f64> = next.iter().zip(&p).map(|(n, o)| (n - o).max(0.0)).collect();
        if let Some(prev) = prev_delta.as_ref().filter(|_| it % 4 == 0) {
            if let Some((lo, hi)) = ratio_bounds(&delta, prev) {
                // upper tail estimate: a verified super-solution `T(p̂) ≤ p̂` proves feasibility;
                // the ratio drifts upward near the boundary, so more pessimistic estimates are
                // also tried every few checks
                if hi < 1.0 {
                    let shrinks: &[f64] = if it % 64 == 0 { &[1.0, 0.5, 0.2, 0.05] } else { &[1.0] };
                    for &shrink in shrinks {
                        let h = 1.0 - (1.0 - hi) * shrink;
                        let tail = h / (1.0 - h);
                        let cand: Vec<f64> = next.iter().zip(&delta).map(|(n, d)| n + d * tail).collect();
                        if cand.iter().any(|&x| x > cap) {
                            break;
                        }
                        let image = apply(model, targets, &layout, &cand, &mut forms)?;
                        if image.iter().zip(&cand).all(|(t, c)| *t <= c * (1.0 + options.tolerance)) {
                            return Ok(result(true, cand, next, it, monotone, step, None));
                        }
                    }
                }
                // lower tail estimate: a verified sub-solution `T(p̃) ≥ p̃` lies below the
                // smallest fixed point, so one above the cap proves infeasibility; the
                // candidate is placed just past the cap along the current increment
                let tail = if lo < 1.0 { lo / (1.0 - lo) } else { f64::INFINITY };
                let crossing = next
                    .iter()
                    .zip(&delta)
                    .filter(|(_, d)| **d > 0.0)
                    .map(|(n, d)| (cap - n) / d)
                    .fold(f64::INFINITY, f64::min);
                if crossing.is_finite() && tail >= crossing {
                    let t = crossing * (1.0 + 1e-9);
                    let cand: Vec<f64> = next.iter().zip(&delta).map(|(n, d)| n + d * t).collect();
                    let image = apply(model, targets, &layout, &cand, &mut forms)?;
                    if image.iter().zip(&cand).all(|(t, c)| t >= c) {
                        return Ok(result(false, cand, next, it, monotone, step, Some("the fixed point lies above the power cap")));
                    }
                }
            }
        }
        prev_delta = Some(delta);
        p = next;
    }
    Ok(Feasibility { exhausted: true, ..result(false, p.clone(), p, options.max_iterations, monotone, step, Some("iteration cap reached")) })
}

// Smallest and largest ratio `a_k / b_k` over devices still moving.
fn ratio_bounds(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        if y > 0.0 {
            let r = x / y;
            lo = lo.min(r);
            hi = hi.max(r);
        } else if x > 0.0 {
            return None;
        }
    }
    (hi > 0.0).then_some((lo, hi))
}

/// Worst relative shortfall of the closed-form SINRs (or rates) against the targets at `p`.
pub fn target_shortfall(model: &LinkModel, targets: &[DeviceTarget], p: &[f64]) -> Result<f64> {
    let all = model.evaluate(p)?;
    Ok(all
        .iter()
        .zip(targets)
        .map(|(b, t)| match *t {
            DeviceTarget::Sinr(x) if x > 0.0 => b.phases.iter().map(|ph| (x - ph.sinr) / x).fold(f64::NEG_INFINITY, f64::max),
            DeviceTarget::Rate(r) if r > 0.0 => (r - b.rate) / r,
            _ => f64::NEG_INFINITY,
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Device class whose common SINR is maximised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Human,
    Machine,
}

/// Result of a bisection on a common SINR target.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonTarget {
    /// Largest target found feasible (zero if only the zero target is).
    pub sinr: f64,
    /// Smallest target found infeasible.
    pub upper: f64,
    /// `upper` is proven infeasible (or is the interference-free bound); false
    /// when the solve there only ran out of iterations.
    pub upper_certified: bool,
    pub solution: Feasibility,
    pub iterations: usize,
}

/// Largest common SINR of `class` given fixed targets for the other devices.
///
/// Returns `None` when even a zero target for `class` is infeasible. When
/// `floor` is given and infeasible, returns `None` as well: the caller already
/// holds a better point.
pub fn bisect_common_target(
    model: &LinkModel,
    class: Class,
    others: &[DeviceTarget],
    p_max: f64,
    floor: Option<f64>,
    options: &SolverOptions,
) -> Result<Option<CommonTarget>> {
    let k = model.device_count();
    let members: Vec<usize> = match class {
        Class::Human => (0..model.human_count()).collect(),
        Class::Machine => (model.human_count()..k).collect(),
    };
    let targets_at = |t: f64| -> Vec<DeviceTarget> {
        let mut v = others.to_vec();
        for &d in &members {
            v[d] = DeviceTarget::Sinr(t);
        }
        v
    };
    let mut iterations = 0;
    let base = maxmin_feasible(model, &targets_at(0.0), p_max, None, options)?;
    iterations += base.iterations;
    if !base.feasible {
        return Ok(None);
    }
    if members.is_empty() {
        return Ok(Some(CommonTarget { sinr: 0.0, upper: 0.0, upper_certified: true, solution: base, iterations }));
    }
    // interference-free bound at full power, with the other class silent
    let zeros = vec![0.0; k];
    let sigma2 = model.noise_power();
    let mf = model.antennas() as f64;
    let betas = model.betas();
    let t_hi = match class {
        Class::Human => members.iter().map(|&h| mf * model.human_gamma()[h] * betas[h] * p_max / sigma2).fold(f64::INFINITY, f64::min),
        Class::Machine => {
            let gb = model.machine_gamma_bar(&zeros)?;
            members
                .iter()
                .map(|&d| mf * gb[d - model.human_count()] * betas[d] * p_max / sigma2)
                .fold(f64::INFINITY, f64::min)
        }
    };
    let mut lo_sol = base;
    let mut hi = t_hi;
    let first = match floor {
        Some(f) if f > 0.0 => f,
        _ => t_hi * 1e-15,
    };
    if first >= t_hi && floor.is_some() {
        return Ok(None);
    }
    let s = maxmin_feasible(model, &targets_at(first), p_max, Some(&lo_sol.lower), options)?;
    iterations += s.iterations;
    if !s.feasible {
        if floor.is_some_and(|f| f > 0.0) {
            return Ok(None);
        }
        return Ok(Some(CommonTarget { sinr: 0.0, upper: first, upper_certified: !s.exhausted, solution: lo_sol, iterations }));
    }
    let mut lo = first;
    lo_sol = s;
    let mut certified = true;
    for _ in 0..options.bisection_steps {
        if hi / lo - 1.0 < options.bisection_tolerance {
            break;
        }
        let mid = (lo * hi).sqrt();
        let s = maxmin_feasible(model, &targets_at(mid), p_max, Some(&lo_sol.lower), options)?;
        iterations += s.iterations;
        if s.feasible {
            lo = mid;
            lo_sol = s;
        } else {
            hi = mid;
            certified = !s.exhausted;
        }
    }
    Ok(Some(CommonTarget { sinr: lo, upper: hi, upper_certified: certified, solution: lo_sol, iterations }))
}

/// One point of a rate region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub scheme: String,
    pub receiver: Receiver,
    pub r_h_target: f64,
    /// Minimum machine rate at the reported powers.
    pub r_m: f64,
    pub p: Vec<f64>,
    pub machine_pilot_length: Option<usize>,
    pub alpha: Option<f64>,
    pub feasible: bool,
    pub solver_iterations: usize,
}

/// Everything fixed while a rate region is traced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSetup {
    /// For SC-1 the `alpha` field is ignored and swept over `alpha_grid`.
    pub scheme: Scheme,
    pub ci_length: usize,
    pub human_pilot_length: usize,
    pub receiver: Receiver,
    pub book: BookKind,
    pub book_seed: u64,
    pub human_mode: HumanTargetMode,
    /// Candidate `N_p^m`; empty means `1..=min(K_m, N − N_p^h − 1)`.
    pub machine_pilot_lengths: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    pub solver: SolverOptions,
}

impl RegionSetup {
    /// Defaults: `N_p^h = K_h`, MRC, per-phase human targets, `α` in steps of 0.01.
    pub fn new(scheme: Scheme, scenario: &Scenario, book: BookKind) -> Self {
        Self {
            scheme,
            ci_length: scenario.params().ci_length,
            human_pilot_length: scenario.human_count(),
            receiver: Receiver::Mrc,
            book,
            book_seed: scenario.params().rng_seed,
            human_mode: HumanTargetMode::PerPhase,
            machine_pilot_lengths: Vec::new(),
            alpha_grid: (0..=100).map(|i| i as f64 / 100.0).collect(),
            solver: SolverOptions::default(),
        }
    }

    pub fn with_receiver(mut self, receiver: Receiver) -> Self {
        self.receiver = receiver;
        self
    }

    pub fn with_human_mode(mut self, mode: HumanTargetMode) -> Self {
        self.human_mode = mode;
        self
    }

    fn pilot_grid(&self, scenario: &Scenario) -> Vec<usize> {
        if !self.machine_pilot_lengths.is_empty() {
            return self.machine_pilot_lengths.clone();
        }
        let upper = scenario.machine_count().min(self.ci_length.saturating_sub(self.human_pilot_length + 1));
        (1..=upper).collect()
    }

    fn book_for(&self, scenario: &Scenario, length: usize) -> Result<PilotBook> {
        let km = scenario.machine_count();
        match self.scheme {
            Scheme::Opa { group_size } => make_grouped_orthogonal_book(group_size, km),
            _ => match self.book {
                BookKind::Wbe => make_wbe_book(length, km, None),
                BookKind::Rpa => make_random_assignment_book(length, km, self.book_seed),
            },
        }
    }

    /// Link model for one `(α, N_p^m)` choice.
    pub fn model(&self, scenario: &Scenario, q: &[f64], alpha: f64, machine_pilot_length: usize) -> Result<LinkModel> {
        let scheme = match self.scheme {
            Scheme::Sc1 { .. } => Scheme::Sc1 { alpha },
            s => s,
        };
        let config = SchemeConfig::new(scheme, self.ci_length, self.human_pilot_length, machine_pilot_length).with_receiver(self.receiver);
        LinkModel::new(scenario, config, &self.book_for(scenario, machine_pilot_length)?, q)
    }
}

fn human_targets(model: &LinkModel, rate: f64, mode: HumanTargetMode) -> Vec<DeviceTarget> {
    (0..model.device_count())
        .map(|d| if d < model.human_count() { mode.target(rate, &model.prelogs(d)) } else { DeviceTarget::Sinr(0.0) })
        .collect()
}

fn min_machine_rate(model: &LinkModel, p: &[f64]) -> Result<f64> {
    if model.machine_count() == 0 {
        return Ok(0.0);
    }
    let all = model.evaluate(p)?;
    Ok(all[model.human_count()..].iter().map(|b| b.rate).fold(f64::INFINITY, f64::min))
}

fn infeasible_point(setup: &RegionSetup, r_h: f64, iterations: usize) -> RatePoint {
    RatePoint {
        scheme: setup.scheme.label().into(),
        receiver: setup.receiver,
        r_h_target: r_h,
        r_m: 0.0,
        p: Vec::new(),
        machine_pilot_length: None,
        alpha: None,
        feasible: false,
        solver_iterations: iterations,
    }
}

/// Best machine max-min rate for one human rate target, searching `N_p^m`.
pub fn maxmin_machine_rate(scenario: &Scenario, setup: &RegionSetup, q: &[f64], r_h_target: f64) -> Result<RatePoint> {
    if !(r_h_target >= 0.0) {
        return Err(Error::Domain("human rate target must be non-negative".into()));
    }
    if let Scheme::Sc1 { .. } = setup.scheme {
        return Sc1Region::build(scenario, setup, q)?.point(scenario, setup, q, r_h_target);
    }
    let p_max = scenario.params().p_max_w;
    let grid = match setup.scheme {
        Scheme::Opa { group_size } => vec![group_size],
        _ => setup.pilot_grid(scenario),
    };
    let mut best: Option<(f64, usize, Feasibility)> = None;
    let mut iterations = 0;
    for &npm in &grid {
        let model = setup.model(scenario, q, 0.0, npm)?;
        let targets = human_targets(&model, r_h_target, setup.human_mode);
        let machine_prelog = model.prelogs(model.human_count()).first().copied().unwrap_or(0.0);
        let floor = best.as_ref().map(|(r, _, _)| sinr_for_rate(*r, machine_prelog));
        let found = bisect_common_target(&model, Class::Machine, &targets, p_max, floor, &setup.solver)?;
        let Some(found) = found else { continue };
        iterations += found.iterations;
        let r_m = min_machine_rate(&model, &found.solution.p)?;
        if best.as_ref().is_none_or(|(r, _, _)| r_m > *r) {
            best = Some((r_m, npm, found.solution));
        }
    }
    Ok(match best {
        None => infeasible_point(setup, r_h_target, iterations),
        Some((r_m, npm, sol)) => RatePoint {
            scheme: setup.scheme.label().into(),
            receiver: setup.receiver,
            r_h_target,
            r_m,
            p: sol.p,
            machine_pilot_length: Some(npm),
            alpha: None,
            feasible: true,
            solver_iterations: iterations,
        },
    })
}

/// SC-1 keeps humans and machines in separate intervals, so the machines'
/// best common SINR per pilot length and the humans' best common SINR are
/// computed once and combined for every `α`.
struct Sc1Region {
    /// `(N_p^m, SINR, powers)` of the machines.
    machines: Vec<(usize, f64, Vec<f64>)>,
    human_sinr: f64,
    iterations: usize,
}

impl Sc1Region {
    fn build(scenario: &Scenario, setup: &RegionSetup, q: &[f64]) -> Result<Self> {
        let p_max = scenario.params().p_max_w;
        let k = scenario.len();
        let silent = vec![DeviceTarget::Sinr(0.0); k];
        let mut iterations = 0;
        let mut machines = Vec::new();
        for npm in setup.pilot_grid(scenario) {
            let model = setup.model(scenario, q, 0.0, npm)?;
            if let Some(found) = bisect_common_target(&model, Class::Machine, &silent, p_max, None, &setup.solver)? {
                iterations += found.iterations;
                machines.push((npm, found.sinr, found.solution.p));
            }
        }
        let grid = setup.pilot_grid(scenario);
        let npm = grid.first().copied().unwrap_or(1);
        let model = setup.model(scenario, q, 1.0, npm)?;
        let human_sinr = match bisect_common_target(&model, Class::Human, &silent, p_max, None, &setup.solver)? {
            Some(found) => {
                iterations += found.iterations;
                found.sinr
            }
            None => 0.0,
        };
        Ok(Self { machines, human_sinr, iterations })
    }

    fn point(&self, scenario: &Scenario, setup: &RegionSetup, q: &[f64], r_h: f64) -> Result<RatePoint> {
        let p_max = scenario.params().p_max_w;
        let n = setup.ci_length as f64;
        let human_prelog = (setup.ci_length - setup.human_pilot_length) as f64 / n;
        let mut iterations = self.iterations;
        for &alpha in &setup.alpha_grid {
            if alpha * human_prelog * (1.0 + self.human_sinr).log2() < r_h * (1.0 - 1e-12) {
                continue;
            }
            // confirm the humans' targets at this α with a direct solve
            let npm = self.machines.first().map(|m| m.0).unwrap_or(1);
            let model = setup.model(scenario, q, alpha, npm)?;
            let targets = human_targets(&model, r_h, setup.human_mode);
            let humans = maxmin_feasible(&model, &targets, p_max, None, &setup.solver)?;
            iterations += humans.iterations;
            if !humans.feasible {
                continue;
            }
            let best = self
                .machines
                .iter()
                .map(|(npm, t, p)| ((1.0 - alpha) * (setup.ci_length - npm) as f64 / n * (1.0 + t).log2(), *npm, p))
                .fold(None::<(f64, usize, &Vec<f64>)>, |acc, x| match acc {
                    Some(a) if a.0 >= x.0 => Some(a),
                    _ => Some(x),
                });
            let kh = scenario.human_count();
            let mut p = humans.p.clone();
            let (r_m, npm) = match best {
                Some((_, npm, mp)) => {
                    p[kh..].copy_from_slice(&mp[kh..]);
                    let model = setup.model(scenario, q, alpha, npm)?;
                    (min_machine_rate(&model, &p)?, Some(npm))
                }
                None => (0.0, None),
            };
            return Ok(RatePoint {
                scheme: setup.scheme.label().into(),
                receiver: setup.receiver,
                r_h_target: r_h,
                r_m: if scenario.machine_count() == 0 { 0.0 } else { r_m },
                p,
                machine_pilot_length: npm,
                alpha: Some(alpha),
                feasible: true,
                solver_iterations: iterations,
            });
        }
        Ok(infeasible_point(setup, r_h, iterations))
    }
}

/// One [`RatePoint`] per human rate target.
pub fn trace_rate_region(scenario: &Scenario, setup: &RegionSetup, q: &[f64], r_h_grid: &[f64]) -> Result<Vec<RatePoint>> {
    if let Scheme::Sc1 { .. } = setup.scheme {
        let region = Sc1Region::build(scenario, setup, q)?;
        return r_h_grid.par_iter().map(|&r| region.point(scenario, setup, q, r)).collect();
    }
    r_h_grid.par_iter().map(|&r| maxmin_machine_rate(scenario, setup, q, r)).collect()
}

/// Orthogonal-allocation baseline: machines in groups of `group_size` with
/// orthogonal pilots, one group per interval.
pub fn trace_opa_region(
    scenario: &Scenario,
    q: &[f64],
    r_h_grid: &[f64],
    group_size: usize,
    template: &RegionSetup,
) -> Result<Vec<RatePoint>> {
    if group_size == 0 || group_size + template.human_pilot_length >= template.ci_length {
        return Err(Error::Configuration(format!(
            "group size {group_size} does not fit an interval of {} with {} human pilots",
            template.ci_length, template.human_pilot_length
        )));
    }
    let mut setup = template.clone();
    setup.scheme = Scheme::Opa { group_size };
    setup.machine_pilot_lengths = vec![group_size];
    trace_rate_region(scenario, &setup, q, r_h_grid)
}

/// Largest common human rate with every machine silent, under SC-1 with `α = 1`.
pub fn human_rate_ceiling(scenario: &Scenario, ci_length: usize, human_pilot_length: usize, receiver: Receiver, q: &[f64]) -> Result<f64> {
    let config = SchemeConfig::new(Scheme::Sc1 { alpha: 1.0 }, ci_length, human_pilot_length, 1).with_receiver(receiver);
    let book = make_wbe_book(1, scenario.machine_count().max(1), None)?;
    let book = if scenario.machine_count() == 0 { crate::pilots::make_orthogonal_book(1, 0)? } else { book };
    let model = LinkModel::new(scenario, config, &book, q)?;
    let silent = vec![DeviceTarget::Sinr(0.0); scenario.len()];
    let found = bisect_common_target(&model, Class::Human, &silent, scenario.params().p_max_w, None, &SolverOptions::default())?;
    Ok(found.map(|f| (ci_length - human_pilot_length) as f64 / ci_length as f64 * (1.0 + f.sinr).log2()).unwrap_or(0.0))
}
