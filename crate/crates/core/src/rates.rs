//! Closed-form effective SINR and ergodic rates for the three
//! coherence-interval sharing schemes and the orthogonal-allocation baseline.
//!
//! Every effective SINR has the form `Γ = signal / (noncoherent + coherent + noise)`
//! where the signal is a coefficient times the device's own data power. A
//! [`LinkModel`] fixes everything except the data powers `p`, so the same
//! object serves rate evaluation, power control and the Monte-Carlo oracle.

mod montecarlo;

pub use montecarlo::{mc_use_and_forget, mc_use_and_forget_sinr, McEstimate, McOptions};

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pilots::{self, PilotBook};
use crate::scenario::{DeviceClass, Scenario};

/// How humans and machines share a coherence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scheme {
    /// Humans use a fraction `alpha` of the intervals, machines the rest.
    Sc1 { alpha: f64 },
    /// One shared training window followed by shared data.
    Sc2,
    /// Humans train first and send data while machines train.
    Sc3,
    /// Machines in groups of `group_size` take turns, one group per interval,
    /// each group with orthogonal pilots.
    Opa { group_size: usize },
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Sc1 { .. } => "sc1",
            Scheme::Sc2 => "sc2",
            Scheme::Sc3 => "sc3",
            Scheme::Opa { .. } => "opa",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    /// `sc1[:alpha]` (α defaults to 0.5), `sc2`, `sc3` or `opa[:group_size]` (defaults to 9).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || Error::InvalidParameter(format!("bad scheme argument in `{s}`"));
        match (name, arg) {
            ("sc1", None) => Ok(Scheme::Sc1 { alpha: 0.5 }),
            ("sc1", Some(a)) => {
                let alpha: f64 = a.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(bad());
                }
                Ok(Scheme::Sc1 { alpha })
            }
            ("sc2", None) => Ok(Scheme::Sc2),
            ("sc3", None) => Ok(Scheme::Sc3),
            ("opa", None) => Ok(Scheme::Opa { group_size: 9 }),
            ("opa", Some(g)) => match g.parse() {
                Ok(group_size) if group_size > 0 => Ok(Scheme::Opa { group_size }),
                _ => Err(bad()),
            },
            _ => Err(Error::InvalidParameter(format!("unknown scheme `{s}` (expected sc1[:alpha], sc2, sc3 or opa[:group])"))),
        }
    }
}

/// Receive combiner applied to human streams; machines always use MRC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Mrc,
    Zf,
}

impl Receiver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Receiver::Mrc => "mrc",
            Receiver::Zf => "zf",
        }
    }
}

impl std::str::FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrc" => Ok(Receiver::Mrc),
            "zf" => Ok(Receiver::Zf),
            other => Err(Error::InvalidParameter(format!("unknown receiver `{other}` (expected mrc or zf)"))),
        }
    }
}

/// Frame layout of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Coherence-interval length `N`.
    pub ci_length: usize,
    /// `N_p^h`.
    pub human_pilot_length: usize,
    /// `N_p^m`; for the orthogonal baseline this is the group size.
    pub machine_pilot_length: usize,
    pub receiver: Receiver,
    /// SC-3 only: machines train at their data power, so the humans see the
    /// same machine interference throughout the data part of the interval.
    pub sc3_equal_machine_powers: bool,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, ci_length: usize, human_pilot_length: usize, machine_pilot_length: usize) -> Self {
        let machine_pilot_length = match scheme {
            Scheme::Opa { group_size } => group_size,
            _ => machine_pilot_length,
        };
        Self {
            scheme,
            ci_length,
            human_pilot_length,
            machine_pilot_length,
            receiver: Receiver::Mrc,
            sc3_equal_machine_powers: false,
        }
    }

    pub fn with_receiver(mut self, receiver: Receiver) -> Self {
        self.receiver = receiver;
        self
    }

    pub fn with_sc3_equal_machine_powers(mut self, on: bool) -> Self {
        self.sc3_equal_machine_powers = on;
        self
    }

    /// Checks the layout against a deployment.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let (n, nh, nm) = (self.ci_length, self.human_pilot_length, self.machine_pilot_length);
        let kh = scenario.human_count();
        if nh < kh {
            return Err(Error::Configuration(format!("N_p^h = {nh} cannot hold {kh} orthogonal human pilots")));
        }
        if scenario.machine_count() > 0 && nm == 0 {
            return Err(Error::Configuration("machines need a pilot length of at least 1".into()));
        }
        if self.sc3_equal_machine_powers && self.scheme != Scheme::Sc3 {
            return Err(Error::Configuration("equal machine powers only apply to SC-3".into()));
        }
        match self.scheme {
            Scheme::Sc1 { alpha } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Configuration(format!("alpha = {alpha} outside [0, 1]")));
                }
                if nh >= n || nm >= n {
                    return Err(Error::Configuration(format!(
                        "SC-1 needs N_p^h < N and N_p^m < N (N = {n}, N_p^h = {nh}, N_p^m = {nm})"
                    )));
                }
            }
            Scheme::Sc2 | Scheme::Sc3 | Scheme::Opa { .. } => {
                if nh + nm >= n {
                    return Err(Error::Configuration(format!(
                        "N_p^h + N_p^m = {} leaves no data symbols in N = {n}",
                        nh + nm
                    )));
                }
            }
        }
        if let Scheme::Opa { group_size } = self.scheme {
            if group_size == 0 || group_size != nm {
                return Err(Error::Configuration("OPA group size must be positive and equal N_p^m".into()));
            }
        }
        Ok(())
    }

    /// Length of the window in which humans train.
    pub fn human_training_length(&self) -> usize {
        match self.scheme {
            Scheme::Sc1 { .. } | Scheme::Sc3 => self.human_pilot_length,
            Scheme::Sc2 | Scheme::Opa { .. } => self.human_pilot_length + self.machine_pilot_length,
        }
    }

    /// Length of the window in which machines train.
    pub fn machine_training_length(&self) -> usize {
        match self.scheme {
            Scheme::Sc1 { .. } | Scheme::Sc3 => self.machine_pilot_length,
            Scheme::Sc2 | Scheme::Opa { .. } => self.human_pilot_length + self.machine_pilot_length,
        }
    }
}

/// One data phase of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSinr {
    pub prelog: f64,
    pub signal: f64,
    pub noncoherent: f64,
    pub coherent: f64,
    pub noise: f64,
    /// `γ_k` for humans, `γ̄_k` for machines.
    pub gamma: f64,
    pub sinr: f64,
}

impl PhaseSinr {
    fn new(prelog: f64, signal: f64, noncoherent: f64, coherent: f64, noise: f64, gamma: f64) -> Self {
        let den = noncoherent + coherent + noise;
        let sinr = if signal == 0.0 { 0.0 } else { signal / den };
        Self { prelog, signal, noncoherent, coherent, noise, gamma, sinr }
    }

    pub fn rate(&self) -> f64 {
        self.prelog * (1.0 + self.sinr).log2()
    }
}

/// Effective SINR terms and achievable rate of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrBreakdown {
    pub device: usize,
    pub class: DeviceClass,
    pub receiver: Receiver,
    pub phases: Vec<PhaseSinr>,
    /// `Σ prelog_i log2(1 + Γ_i)` in bits/s/Hz.
    pub rate: f64,
}

/// `Σ prelog_i log2(1 + Γ_i)`.
pub fn rate(breakdown: &SinrBreakdown) -> f64 {
    breakdown.phases.iter().map(PhaseSinr::rate).sum()
}

/// `Γ = c p_k / I(p)` with `I` the interference-plus-noise term of the phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseForm {
    pub prelog: f64,
    pub coeff: f64,
    pub interference: f64,
}

/// Machine SINR in the infinite-antenna limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AsymptoticSinr {
    Finite(f64),
    /// No interference survives the limit.
    Unbounded,
}

impl AsymptoticSinr {
    pub fn value(&self) -> f64 {
        match self {
            AsymptoticSinr::Finite(v) => *v,
            AsymptoticSinr::Unbounded => f64::INFINITY,
        }
    }
}

/// `γ̄_k = N_p q_k β_k / (N_p Σ_{k'} q_k' β_k' E|φ_k'^H φ_k|² + overlap + σ²)` for
/// every sequence of `book`, where the sum includes `k' = k` and `N_p` is the
/// length of the training window the book sits in.
pub fn gamma_bar(book: &PilotBook, betas: &[f64], q: &[f64], noise_power: f64, length: usize, overlap: f64) -> Result<Vec<f64>> {
    let k = book.count();
    if betas.len() != k || q.len() != k {
        return Err(Error::Configuration(format!("book has {k} sequences but {} betas and {} powers", betas.len(), q.len())));
    }
    let x = pilots::expected_cross_matrix(book);
    let np = length as f64;
    Ok((0..k)
        .map(|i| {
            let cross: f64 = (0..k).map(|j| q[j] * betas[j] * x[(j, i)]).sum();
            let own = np * q[i] * betas[i];
            own / (own + np * cross + overlap + noise_power)
        })
        .collect())
}

/// Human MRC effective SINR `M γ_k β_k p_k / (Σ_{humans} p β + J + σ²)`, where
/// `J` is the received power of the machines active in the same phase.
pub fn human_mrc_sinr(antennas: f64, beta: f64, power: f64, gamma: f64, humans: &[(f64, f64)], machine_term: f64, noise_power: f64) -> f64 {
    let s: f64 = humans.iter().map(|(p, b)| p * b).sum();
    antennas * beta * power / ((s + machine_term + noise_power) / gamma)
}

/// Human ZF effective SINR `(M − K_h) γ_k β_k p_k / (Σ_{humans} p β (1 − γ) + J + σ²)`.
/// `humans` holds `(p, β, γ)` of every human.
pub fn human_zf_sinr(antennas: usize, beta: f64, power: f64, gamma: f64, humans: &[(f64, f64, f64)], machine_term: f64, noise_power: f64) -> Result<f64> {
    if antennas <= humans.len() {
        return Err(Error::ZfInfeasible { antennas, humans: humans.len() });
    }
    let residual: f64 = humans.iter().map(|(p, b, g)| p * b * (1.0 - g)).sum();
    Ok((antennas - humans.len()) as f64 * gamma * beta * power / (residual + machine_term + noise_power))
}

/// Which machines are active in a data phase.
#[derive(Debug, Clone, Copy, PartialEq)]
enum MachineLoad {
    None,
    /// All machines at their data power.
    Data,
    /// All machines at their pilot power (SC-3, first human phase).
    Pilots,
    /// One OPA group.
    Group(usize),
    /// The OPA group of the machine being evaluated.
    OwnGroup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PhaseSpec {
    prelog: f64,
    humans_active: bool,
    machines: MachineLoad,
}

/// Sums over `p` shared by every device's SINR.
#[derive(Debug, Clone)]
struct Aggregates {
    human_power: f64,
    human_residual: f64,
    human_power_sq: f64,
    machine_power: f64,
    machine_pilot: f64,
    group_power: Vec<f64>,
    /// `M Σ_{j≠k} p_j q_j β_j² X_jk / (q_k β_k)` per machine.
    coherent: Vec<f64>,
    /// Machine pilot powers in effect (equal to `p` under the SC-3 equal-power option).
    machine_q: Vec<f64>,
    /// `1/γ̄` per machine.
    inv_gamma_bar: Vec<f64>,
}

/// Everything a rate evaluation needs except the data powers.
#[derive(Debug, Clone)]
pub struct LinkModel {
    config: SchemeConfig,
    antennas: usize,
    noise_power: f64,
    betas: Vec<f64>,
    q: Vec<f64>,
    humans: usize,
    machines: usize,
    machine_book: PilotBook,
    /// Expected `|φ_j^H φ_k|²` between machines, zero diagonal.
    cross: DMatrix<f64>,
    human_gamma: Vec<f64>,
    /// Machine index ranges (local, `0..K_m`) of the OPA groups.
    groups: Vec<Range<usize>>,
    human_phases: Vec<PhaseSpec>,
    machine_phases: Vec<PhaseSpec>,
}

impl LinkModel {
    /// `q` holds the pilot powers of all devices; `machine_book` has one
    /// sequence per machine (a grouped orthogonal book for the OPA baseline).
    pub fn new(scenario: &Scenario, config: SchemeConfig, machine_book: &PilotBook, q: &[f64]) -> Result<Self> {
        config.validate(scenario)?;
        let (kh, km) = (scenario.human_count(), scenario.machine_count());
        if q.len() != kh + km {
            return Err(Error::Configuration(format!("{} pilot powers for {} devices", q.len(), kh + km)));
        }
        if q.iter().any(|&x| !(x >= 0.0) || x > scenario.params().q_max_w * (1.0 + 1e-12)) {
            return Err(Error::Domain("pilot powers must lie in [0, q_max]".into()));
        }
        if machine_book.count() != km {
            return Err(Error::Configuration(format!("machine book has {} sequences for {km} machines", machine_book.count())));
        }
        if km > 0 && machine_book.length() != config.machine_pilot_length {
            return Err(Error::Configuration(format!(
                "machine book length {} differs from N_p^m = {}",
                machine_book.length(),
                config.machine_pilot_length
            )));
        }
        if let Scheme::Opa { group_size } = config.scheme {
            if !matches!(machine_book.kind(), pilots::PilotKind::GroupedOrthogonal { group_size: g } if *g == group_size) {
                return Err(Error::Configuration("OPA needs a grouped orthogonal book with matching group size".into()));
            }
        }
        let betas = scenario.betas();
        let noise_power = scenario.noise_power();
        let lh = config.human_training_length() as f64;
        let human_gamma = (0..kh)
            .map(|k| {
                let g = lh * q[k] * betas[k];
                g / (g + noise_power)
            })
            .collect();
        let groups: Vec<Range<usize>> = match config.scheme {
            Scheme::Opa { group_size } => (0..km.div_ceil(group_size))
                .map(|g| (g * group_size)..((g + 1) * group_size).min(km))
                .collect(),
            // a single group holding every machine
            _ => std::iter::once(0..km).collect(),
        };
        let (n, nh, nm) = (config.ci_length, config.human_pilot_length, config.machine_pilot_length);
        let frac = |s: usize| s as f64 / n as f64;
        let spec = |prelog, humans_active, machines| PhaseSpec { prelog, humans_active, machines };
        let (human_phases, machine_phases) = match config.scheme {
            Scheme::Sc1 { alpha } => (
                vec![spec(alpha * frac(n - nh), true, MachineLoad::None)],
                vec![spec((1.0 - alpha) * frac(n - nm), false, MachineLoad::Data)],
            ),
            Scheme::Sc2 => (
                vec![spec(frac(n - nh - nm), true, MachineLoad::Data)],
                vec![spec(frac(n - nh - nm), true, MachineLoad::Data)],
            ),
            Scheme::Sc3 if config.sc3_equal_machine_powers => (
                vec![spec(frac(n - nh), true, MachineLoad::Data)],
                vec![spec(frac(n - nh - nm), true, MachineLoad::Data)],
            ),
            Scheme::Sc3 => (
                vec![spec(frac(nm), true, MachineLoad::Pilots), spec(frac(n - nh - nm), true, MachineLoad::Data)],
                vec![spec(frac(n - nh - nm), true, MachineLoad::Data)],
            ),
            Scheme::Opa { .. } => {
                let share = frac(n - nh - nm) / groups.len().max(1) as f64;
                (
                    (0..groups.len().max(1))
                        .map(|g| spec(share, true, if km == 0 { MachineLoad::None } else { MachineLoad::Group(g) }))
                        .collect(),
                    vec![spec(share, true, MachineLoad::OwnGroup)],
                )
            }
        };
        Ok(Self {
            config,
            antennas: scenario.antennas(),
            noise_power,
            betas,
            q: q.to_vec(),
            humans: kh,
            machines: km,
            cross: pilots::expected_cross_matrix(machine_book),
            machine_book: machine_book.clone(),
            human_gamma,
            groups,
            human_phases,
            machine_phases,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn pilot_powers(&self) -> &[f64] {
        &self.q
    }

    pub fn machine_book(&self) -> &PilotBook {
        &self.machine_book
    }

    pub fn human_count(&self) -> usize {
        self.humans
    }

    pub fn machine_count(&self) -> usize {
        self.machines
    }

    pub fn device_count(&self) -> usize {
        self.humans + self.machines
    }

    pub fn class(&self, device: usize) -> DeviceClass {
        if device < self.humans {
            DeviceClass::Human
        } else {
            DeviceClass::Machine
        }
    }

    /// `γ_k` of every human.
    pub fn human_gamma(&self) -> &[f64] {
        &self.human_gamma
    }

    /// OPA group of a machine (local machine index), zero for the other schemes.
    pub fn group_of(&self, machine: usize) -> usize {
        match self.config.scheme {
            Scheme::Opa { group_size } => machine / group_size,
            _ => 0,
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Number of data phases of `device`.
    pub fn phase_count(&self, device: usize) -> usize {
        match self.class(device) {
            DeviceClass::Human => self.human_phases.len(),
            DeviceClass::Machine => 1,
        }
    }

    /// Pre-log factors of the phases of `device`.
    pub fn prelogs(&self, device: usize) -> Vec<f64> {
        match self.class(device) {
            DeviceClass::Human => self.human_phases.iter().map(|s| s.prelog).collect(),
            DeviceClass::Machine => vec![self.machine_phases[0].prelog],
        }
    }

    /// Whether the machines' SINR depends on `p` only through an interference
    /// term (false under the SC-3 equal-power option, where `q = p`).
    pub fn is_power_separable(&self) -> bool {
        !self.config.sc3_equal_machine_powers
    }

    fn check_powers(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.device_count() {
            return Err(Error::Configuration(format!("{} data powers for {} devices", p.len(), self.device_count())));
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("data powers must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn machine_training_overlap(&self, p: &[f64]) -> f64 {
        match self.config.scheme {
            Scheme::Sc3 => (0..self.humans).map(|h| p[h] * self.betas[h]).sum(),
            _ => 0.0,
        }
    }

    fn aggregates(&self, p: &[f64]) -> Aggregates {
        let kh = self.humans;
        let beta = &self.betas;
        let mut agg = Aggregates {
            human_power: 0.0,
            human_residual: 0.0,
            human_power_sq: 0.0,
            machine_power: 0.0,
            machine_pilot: 0.0,
            group_power: vec![0.0; self.groups.len()],
            coherent: vec![0.0; self.machines],
            machine_q: vec![0.0; self.machines],
            inv_gamma_bar: vec![0.0; self.machines],
        };
        for h in 0..kh {
            let r = p[h] * beta[h];
            agg.human_power += r;
            agg.human_residual += r * (1.0 - self.human_gamma[h]);
            agg.human_power_sq += r * r;
        }
        for m in 0..self.machines {
            let d = kh + m;
            let q = if self.config.sc3_equal_machine_powers { p[d] } else { self.q[d] };
            agg.machine_q[m] = q;
            agg.machine_power += p[d] * beta[d];
            agg.machine_pilot += q * beta[d];
            agg.group_power[self.group_of(m)] += p[d] * beta[d];
        }
        if self.machines == 0 {
            return agg;
        }
        let lm = self.config.machine_training_length() as f64;
        let overlap = self.machine_training_overlap(p);
        let mb: Vec<f64> = (0..self.machines).map(|m| agg.machine_q[m] * beta[kh + m]).collect();
        // pilot cross terms Σ_j q_j β_j X_jk and coherent sums Σ_j p_j q_j β_j² X_jk
        let w = DVector::from_iterator(self.machines, mb.iter().copied());
        let v = DVector::from_iterator(self.machines, (0..self.machines).map(|m| p[kh + m] * beta[kh + m] * mb[m]));
        let cross = self.cross.tr_mul(&w);
        let coh = self.cross.tr_mul(&v);
        let mf = self.antennas as f64;
        for m in 0..self.machines {
            let own = lm * mb[m];
            agg.inv_gamma_bar[m] = (own + lm * cross[m] + overlap + self.noise_power) / own;
            agg.coherent[m] = mf * coh[m] / mb[m];
        }
        agg
    }

    fn machine_load(&self, load: MachineLoad, agg: &Aggregates, own_group: usize) -> f64 {
        match load {
            MachineLoad::None => 0.0,
            MachineLoad::Data => agg.machine_power,
            MachineLoad::Pilots => agg.machine_pilot,
            MachineLoad::OwnGroup => agg.group_power[own_group],
            MachineLoad::Group(g) => agg.group_power[g],
        }
    }

    fn human_phase(&self, k: usize, spec: &PhaseSpec, p: &[f64], agg: &Aggregates, receiver: Receiver) -> Result<PhaseSinr> {
        let gamma = self.human_gamma[k];
        let j = self.machine_load(spec.machines, agg, 0);
        let mf = self.antennas as f64;
        let (coeff, humans) = match receiver {
            Receiver::Mrc => (mf * self.betas[k], agg.human_power),
            Receiver::Zf => {
                if self.antennas <= self.humans {
                    return Err(Error::ZfInfeasible { antennas: self.antennas, humans: self.humans });
                }
                ((self.antennas - self.humans) as f64 * self.betas[k], agg.human_residual)
            }
        };
        if gamma == 0.0 {
            return Ok(PhaseSinr::new(spec.prelog, 0.0, f64::INFINITY, 0.0, f64::INFINITY, 0.0));
        }
        Ok(PhaseSinr::new(spec.prelog, coeff * p[k], (humans + j) / gamma, 0.0, self.noise_power / gamma, gamma))
    }

    fn machine_phase(&self, m: usize, spec: &PhaseSpec, p: &[f64], agg: &Aggregates) -> PhaseSinr {
        let d = self.humans + m;
        let inv = agg.inv_gamma_bar[m];
        let humans = if spec.humans_active { agg.human_power } else { 0.0 };
        let load = humans + self.machine_load(spec.machines, agg, self.group_of(m));
        let mut coherent = agg.coherent[m];
        if self.config.scheme == Scheme::Sc3 {
            let lm = self.config.machine_training_length() as f64;
            coherent += self.antennas as f64 * agg.human_power_sq / (lm * agg.machine_q[m] * self.betas[d]);
        }
        let signal = self.antennas as f64 * self.betas[d] * p[d];
        if !inv.is_finite() {
            return PhaseSinr::new(spec.prelog, 0.0, f64::INFINITY, coherent, f64::INFINITY, 0.0);
        }
        PhaseSinr::new(spec.prelog, signal, load * inv, coherent, self.noise_power * inv, 1.0 / inv)
    }

    /// Breakdown of `device` with the configured receiver.
    pub fn breakdown(&self, device: usize, p: &[f64]) -> Result<SinrBreakdown> {
        self.breakdown_with(device, p, self.config.receiver)
    }

    /// Breakdown of `device`, with `receiver` applied if it is a human.
    pub fn breakdown_with(&self, device: usize, p: &[f64], receiver: Receiver) -> Result<SinrBreakdown> {
        self.check_powers(p)?;
        if device >= self.device_count() {
            return Err(Error::Domain(format!("device {device} out of range")));
        }
        let agg = self.aggregates(p);
        self.breakdown_from(device, p, &agg, receiver)
    }

    fn breakdown_from(&self, device: usize, p: &[f64], agg: &Aggregates, receiver: Receiver) -> Result<SinrBreakdown> {
        let (class, receiver, phases) = match self.class(device) {
            DeviceClass::Human => (
                DeviceClass::Human,
                receiver,
                self.human_phases
                    .iter()
                    .map(|s| self.human_phase(device, s, p, agg, receiver))
                    .collect::<Result<Vec<_>>>()?,
            ),
            DeviceClass::Machine => (
                DeviceClass::Machine,
                Receiver::Mrc,
                vec![self.machine_phase(device - self.humans, &self.machine_phases[0], p, agg)],
            ),
        };
        let mut b = SinrBreakdown { device, class, receiver, phases, rate: 0.0 };
        b.rate = rate(&b);
        Ok(b)
    }

    /// Breakdowns of every device under the configured receiver.
    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<SinrBreakdown>> {
        self.check_powers(p)?;
        let agg = self.aggregates(p);
        (0..self.device_count())
            .map(|d| self.breakdown_from(d, p, &agg, self.config.receiver))
            .collect()
    }

    /// Layout of [`LinkModel::phase_forms`]: the slice of each device.
    pub fn phase_layout(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        (0..self.device_count())
            .map(|d| {
                let r = start..start + self.phase_count(d);
                start = r.end;
                r
            })
            .collect()
    }

    /// Writes `Γ = coeff · p_k / interference` for every device and phase into
    /// `out`, laid out per [`LinkModel::phase_layout`].
    pub fn phase_forms(&self, p: &[f64], out: &mut Vec<PhaseForm>) -> Result<()> {
        if !self.is_power_separable() {
            return Err(Error::Configuration(
                "SC-3 with equal machine pilot and data powers has no interference-function form".into(),
            ));
        }
        self.check_powers(p)?;
        let agg = self.aggregates(p);
        out.clear();
        for d in 0..self.device_count() {
            match self.class(d) {
                DeviceClass::Human => {
                    for s in &self.human_phases {
                        let ph = self.human_phase(d, s, p, &agg, self.config.receiver)?;
                        let coeff = match self.config.receiver {
                            Receiver::Mrc => self.antennas as f64 * self.betas[d],
                            Receiver::Zf => (self.antennas - self.humans) as f64 * self.betas[d],
                        };
                        out.push(PhaseForm { prelog: s.prelog, coeff, interference: ph.noncoherent + ph.coherent + ph.noise });
                    }
                }
                DeviceClass::Machine => {
                    let ph = self.machine_phase(d - self.humans, &self.machine_phases[0], p, &agg);
                    out.push(PhaseForm {
                        prelog: ph.prelog,
                        coeff: self.antennas as f64 * self.betas[d],
                        interference: ph.noncoherent + ph.coherent + ph.noise,
                    });
                }
            }
        }
        Ok(())
    }

    /// `γ̄_k` of every machine at data powers `p`.
    pub fn machine_gamma_bar(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_powers(p)?;
        Ok(self.aggregates(p).inv_gamma_bar.iter().map(|v| 1.0 / v).collect())
    }

    /// Same deployment and powers with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Self {
        let mut m = self.clone();
        m.antennas = antennas;
        m
    }

    /// Machine SINR as `M → ∞`.
    pub fn asymptotic_sinr_machine(&self, device: usize, p: &[f64]) -> Result<AsymptoticSinr> {
        self.check_powers(p)?;
        if self.class(device) != DeviceClass::Machine {
            return Err(Error::Domain(format!("device {device} is not a machine")));
        }
        if matches!(self.config.scheme, Scheme::Opa { .. }) {
            return Err(Error::Configuration("asymptotic limits are defined for SC-1, SC-2 and SC-3".into()));
        }
        // the coherent term is linear in M; evaluate it per antenna
        let unit = self.with_antennas(1);
        let agg = unit.aggregates(p);
        let ph = unit.machine_phase(device - self.humans, &self.machine_phases[0], p, &agg);
        if ph.coherent == 0.0 {
            return Ok(AsymptoticSinr::Unbounded);
        }
        Ok(AsymptoticSinr::Finite(self.betas[device] * p[device] / ph.coherent))
    }
}

/// Closed-form MRC breakdown of `device` (humans forced to MRC).
pub fn sinr_mrc(model: &LinkModel, device: usize, p: &[f64]) -> Result<SinrBreakdown> {
    model.breakdown_with(device, p, Receiver::Mrc)
}

/// Closed-form ZF breakdown of a human.
pub fn sinr_zf_human(model: &LinkModel, device: usize, p: &[f64]) -> Result<SinrBreakdown> {
    if model.class(device) != DeviceClass::Human {
        return Err(Error::Domain(format!("device {device} is not a human")));
    }
    model.breakdown_with(device, p, Receiver::Zf)
}

/// Free-function form of [`LinkModel::asymptotic_sinr_machine`].
pub fn asymptotic_sinr_machine(model: &LinkModel, device: usize, p: &[f64]) -> Result<AsymptoticSinr> {
    model.asymptotic_sinr_machine(device, p)
}
