//! Monte-Carlo evaluation of the use-and-forget effective SINR.
//!
//! Each trial draws fresh fading, synthesises every training window of the
//! scheme, forms LMMSE estimates and the MRC combiners `v_k = ĥ_k / (γ_k √M)`.
//! Data symbols and receiver noise are averaged analytically given the
//! channels: with `A = √p_k v_k^H g_k` and `B = Σ_j p_j |v_k^H g_j|² + σ² ‖v_k‖²`
//! the estimate is `Γ = |E A|² / (E B − |E A|²)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LinkModel, MachineLoad, Receiver, Scheme};
use crate::error::{Error, Result};
use crate::estimation::{
    batch_mean, batch_ranges, draw_assignment, lmmse_scale, synthesize_training, trial_rng, CompensatedSum,
    FadingRealization, PilotInterference, TrainingWindow,
};
use crate::pilots::{make_orthogonal_book, PilotBook, PilotKind};
use crate::scenario::DeviceClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub trials: usize,
    pub seed: u64,
    /// Replace every estimate by the true channel (`ĥ = h`, `γ = 1`).
    pub perfect_csi: bool,
}

impl McOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, perfect_csi: false }
    }
}

/// Monte-Carlo effective SINR of one device and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub device: usize,
    pub phase: usize,
    pub sinr: f64,
    /// Standard error from the spread of per-batch estimates.
    pub std_error: f64,
    pub trials: usize,
}

struct Plan {
    windows: Vec<TrainingWindow>,
    /// Per window, the combiner multiplier of each column when the book is fixed.
    multipliers: Vec<Option<Vec<f64>>>,
    machine_window: Option<usize>,
    q_train: Vec<f64>,
}

fn machine_window_book(model: &LinkModel, book: &PilotBook) -> Result<PilotBook> {
    let c = model.config;
    match c.scheme {
        Scheme::Sc2 => {
            let humans = make_orthogonal_book(c.human_pilot_length, model.humans)?.embed(0, c.human_training_length())?;
            let machines = book.embed(c.human_pilot_length, c.machine_training_length())?;
            PilotBook::stack(&[&humans, &machines])
        }
        _ => Ok(book.clone()),
    }
}

fn windows(model: &LinkModel, book: &PilotBook, p: &[f64]) -> Result<(Vec<TrainingWindow>, Option<usize>)> {
    let c = model.config;
    let humans: Vec<usize> = (0..model.humans).collect();
    let machines: Vec<usize> = (model.humans..model.device_count()).collect();
    let mut out = Vec::new();
    match c.scheme {
        Scheme::Sc2 => {
            let all: Vec<usize> = (0..model.device_count()).collect();
            out.push(TrainingWindow::new(all, machine_window_book(model, book)?)?);
            Ok((out, Some(0)))
        }
        Scheme::Sc1 { .. } | Scheme::Sc3 => {
            if model.humans > 0 {
                out.push(TrainingWindow::new(humans.clone(), make_orthogonal_book(c.human_pilot_length, model.humans)?)?);
            }
            let mut idx = None;
            if model.machines > 0 {
                let mut w = TrainingWindow::new(machines, book.clone())?;
                if c.scheme == Scheme::Sc3 {
                    w = w.with_overlap(humans.iter().map(|&h| (h, p[h])).collect());
                }
                idx = Some(out.len());
                out.push(w);
            }
            Ok((out, idx))
        }
        Scheme::Opa { .. } => Err(Error::Configuration("the Monte-Carlo oracle covers SC-1, SC-2 and SC-3".into())),
    }
}

fn multipliers(window: &TrainingWindow, betas: &[f64], q: &[f64], noise_power: f64, antennas: usize) -> Result<Vec<f64>> {
    let sqrt_m = (antennas as f64).sqrt();
    (0..window.devices.len())
        .map(|c| {
            let d = window.devices[c];
            let i = PilotInterference::for_device(window, betas, q, c, noise_power, false)?;
            if !(betas[d] * q[d] > 0.0) {
                return Err(Error::DegenerateEstimator(format!("device {d} trains with zero power")));
            }
            let (scale, gamma) = lmmse_scale(betas[d], q[d], window.length(), &i);
            Ok(scale / (gamma * sqrt_m))
        })
        .collect()
}

fn is_random(book: &PilotBook) -> bool {
    matches!(book.kind(), PilotKind::RandomOrthogonalAssignment { .. })
}

fn plan(model: &LinkModel, p: &[f64]) -> Result<Plan> {
    let mut q_train = model.q.clone();
    if model.config.sc3_equal_machine_powers {
        let machines = model.humans..model.device_count();
        q_train[machines.clone()].copy_from_slice(&p[machines]);
    }
    let (windows, machine_window) = windows(model, &model.machine_book, p)?;
    let random = is_random(&model.machine_book);
    let multipliers = windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if random && Some(i) == machine_window {
                Ok(None)
            } else {
                multipliers(w, &model.betas, &q_train, model.noise_power, model.antennas).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan { windows, multipliers, machine_window, q_train })
}

/// Per-slot sums of `A` and `B` over a run of trials.
#[derive(Clone)]
struct Sums {
    a_re: Vec<CompensatedSum>,
    a_im: Vec<CompensatedSum>,
    b: Vec<CompensatedSum>,
}

impl Sums {
    fn new(slots: usize) -> Self {
        Self {
            a_re: vec![CompensatedSum::default(); slots],
            a_im: vec![CompensatedSum::default(); slots],
            b: vec![CompensatedSum::default(); slots],
        }
    }
}

fn ratio(a: Complex64, b: f64) -> f64 {
    let s = a.norm_sqr();
    s / (b - s)
}

fn run_trial<R: Rng>(model: &LinkModel, p: &[f64], plan: &Plan, perfect: bool, rng: &mut R, sums: &mut Sums) -> Result<()> {
    let (kh, k, antennas) = (model.humans, model.device_count(), model.antennas);
    let c = model.config;
    let random_book = if plan.machine_window.is_some() && is_random(&model.machine_book) {
        Some(draw_assignment(rng, c.machine_pilot_length, model.machines)?)
    } else {
        None
    };
    let fading = FadingRealization::draw(rng, antennas, k);
    let g = fading.channels(&model.betas)?;
    let mut v = DMatrix::<Complex64>::zeros(antennas, k);
    let mut machine_book = &model.machine_book;
    for (i, base) in plan.windows.iter().enumerate() {
        let redrawn;
        let window = match (&random_book, Some(i) == plan.machine_window) {
            (Some(b), true) => {
                let mut w = TrainingWindow::new(base.devices.clone(), machine_window_book(model, b)?)?;
                w.overlap = base.overlap.clone();
                machine_book = b;
                redrawn = w;
                &redrawn
            }
            _ => base,
        };
        let obs = synthesize_training(&g, window, &plan.q_train, model.noise_power, rng)?;
        let spread = &obs.y * window.book.sequences();
        let mult = match &plan.multipliers[i] {
            Some(m) => m.clone(),
            None => multipliers(window, &model.betas, &plan.q_train, model.noise_power, antennas)?,
        };
        for (col, &d) in window.devices.iter().enumerate() {
            v.set_column(d, &(spread.column(col) * Complex64::from(mult[col])));
        }
    }
    if perfect {
        v = fading.h.clone() / Complex64::from((antennas as f64).sqrt());
    }
    let cross = v.ad_mul(&g);
    let noise: Vec<f64> = v.column_iter().map(|c| c.norm_squared() * model.noise_power).collect();
    let data = |dev: usize, range: std::ops::Range<usize>| -> f64 { range.map(|j| p[j] * cross[(dev, j)].norm_sqr()).sum() };
    // machine pilots seen by human combiners, symbol by symbol
    let pilot_term: Vec<f64> = if model.human_phases.iter().any(|s| s.machines == MachineLoad::Pilots) {
        let lm = c.machine_training_length();
        let mut weighted = cross.view((0, kh), (kh, model.machines)).into_owned();
        for (m, mut col) in weighted.column_iter_mut().enumerate() {
            col *= Complex64::from((lm as f64 * plan.q_train[kh + m]).sqrt());
        }
        let per_symbol = weighted * machine_book.sequences().adjoint();
        per_symbol.row_iter().map(|r| r.norm_squared() / lm as f64).collect()
    } else {
        vec![0.0; kh]
    };
    let mut slot = 0;
    for dev in 0..k {
        let specs = match model.class(dev) {
            DeviceClass::Human => &model.human_phases,
            DeviceClass::Machine => &model.machine_phases,
        };
        let a = cross[(dev, dev)] * p[dev].sqrt();
        for spec in specs {
            let mut b = noise[dev];
            if spec.humans_active {
                b += data(dev, 0..kh);
            }
            b += match spec.machines {
                MachineLoad::None => 0.0,
                MachineLoad::Data => data(dev, kh..k),
                MachineLoad::Pilots => pilot_term[dev],
                MachineLoad::Group(_) | MachineLoad::OwnGroup => unreachable!("OPA rejected when planning"),
            };
            sums.a_re[slot].add(a.re);
            sums.a_im[slot].add(a.im);
            sums.b[slot].add(b);
            slot += 1;
        }
    }
    Ok(())
}

/// Monte-Carlo effective SINR of every device and phase under MRC, in the
/// order of [`LinkModel::phase_layout`].
pub fn mc_use_and_forget(model: &LinkModel, p: &[f64], options: &McOptions) -> Result<Vec<McEstimate>> {
    model.check_powers(p)?;
    if options.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if model.config.receiver != Receiver::Mrc && model.humans > 0 {
        return Err(Error::Configuration("the Monte-Carlo oracle evaluates MRC combining only".into()));
    }
    let plan = plan(model, p)?;
    let layout = model.phase_layout();
    let slots = layout.last().map(|r| r.end).unwrap_or(0);
    let batches = batch_ranges(options.trials)
        .into_par_iter()
        .map(|range| -> Result<(usize, Sums)> {
            let mut sums = Sums::new(slots);
            let n = range.len();
            for t in range {
                let mut rng = trial_rng(options.seed, t);
                run_trial(model, p, &plan, options.perfect_csi, &mut rng, &mut sums)?;
            }
            Ok((n, sums))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(slots);
    for (dev, range) in layout.iter().enumerate() {
        for (phase, s) in range.clone().enumerate() {
            let mut a_re = CompensatedSum::default();
            let mut a_im = CompensatedSum::default();
            let mut b = CompensatedSum::default();
            let mut per_batch = Vec::with_capacity(batches.len());
            for (n, sums) in &batches {
                let n = *n as f64;
                a_re.add(sums.a_re[s].value());
                a_im.add(sums.a_im[s].value());
                b.add(sums.b[s].value());
                let a = Complex64::new(sums.a_re[s].value(), sums.a_im[s].value()) / n;
                per_batch.push(ratio(a, sums.b[s].value() / n));
            }
            let t = options.trials as f64;
            let sinr = ratio(Complex64::new(a_re.value(), a_im.value()) / t, b.value() / t);
            let (_, std_error) = batch_mean(&per_batch);
            out.push(McEstimate { device: dev, phase, sinr, std_error, trials: options.trials });
        }
    }
    Ok(out)
}

/// Monte-Carlo effective SINR of the phases of one device.
pub fn mc_use_and_forget_sinr(model: &LinkModel, device: usize, p: &[f64], options: &McOptions) -> Result<Vec<McEstimate>> {
    if device >= model.device_count() {
        return Err(Error::Domain(format!("device {device} out of range")));
    }
    Ok(mc_use_and_forget(model, p, options)?.into_iter().filter(|e| e.device == device).collect())
}
