//! Uplink training synthesis, de-spreading and channel estimation.
//!
//! The received training block is `Y = √N_p Σ_k √q_k g_k φ_k^H + Z` with
//! `g_k = √β_k h_k`. Projecting onto `φ_k` isolates device `k`; the LS and
//! LMMSE estimators then scale that observation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pilots::{self, Estimator, PilotBook, PilotKind};

/// Draws one circularly-symmetric complex Gaussian sample of the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// `rows × cols` matrix of i.i.d. `CN(0, variance)` entries, filled column by column.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols);
    for z in m.iter_mut() {
        *z = complex_gaussian(rng, variance);
    }
    m
}

/// Small-scale fading of every device for one coherence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    /// `M × K`, i.i.d. `CN(0, 1)`.
    pub h: DMatrix<Complex64>,
}

impl FadingRealization {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, antennas: usize, devices: usize) -> Self {
        Self { h: complex_gaussian_matrix(rng, antennas, devices, 1.0) }
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    /// Channel vectors `g_k = √β_k h_k` as the columns of an `M × K` matrix.
    pub fn channels(&self, betas: &[f64]) -> Result<DMatrix<Complex64>> {
        if betas.len() != self.h.ncols() {
            return Err(Error::Configuration(format!("{} betas for {} channels", betas.len(), self.h.ncols())));
        }
        let mut g = self.h.clone();
        for (mut col, b) in g.column_iter_mut().zip(betas) {
            col *= Complex64::from(b.sqrt());
        }
        Ok(g)
    }

    /// Empirical `‖h_k‖² / M` per device.
    pub fn column_second_moments(&self) -> Vec<f64> {
        let m = self.antennas() as f64;
        self.h.column_iter().map(|c| c.norm_squared() / m).collect()
    }
}

/// Devices trained together in one pilot window.
#[derive(Debug, Clone)]
pub struct TrainingWindow {
    /// Device indices, one per book column.
    pub devices: Vec<usize>,
    pub book: PilotBook,
    /// Devices sending unit-power data symbols during the window, with their data powers.
    pub overlap: Vec<(usize, f64)>,
}

impl TrainingWindow {
    pub fn new(devices: Vec<usize>, book: PilotBook) -> Result<Self> {
        if devices.len() != book.count() {
            return Err(Error::Configuration(format!(
                "{} devices for a book of {} sequences",
                devices.len(),
                book.count()
            )));
        }
        Ok(Self { devices, book, overlap: Vec::new() })
    }

    pub fn with_overlap(mut self, overlap: Vec<(usize, f64)>) -> Self {
        self.overlap = overlap;
        self
    }

    pub fn length(&self) -> usize {
        self.book.length()
    }

    /// Received power of the overlapping data, `Σ p β`.
    pub fn overlap_power(&self, betas: &[f64]) -> f64 {
        self.overlap.iter().map(|&(d, p)| p * betas[d]).sum()
    }
}

/// The received training block of one window.
#[derive(Debug, Clone)]
pub struct TrainingObservation {
    /// `M × N_p`.
    pub y: DMatrix<Complex64>,
    pub window: TrainingWindow,
}

/// Synthesises `Y` for one window from a channel matrix `g` (`M × K`, all devices).
///
/// The noise block is drawn before the overlapping data symbols, so a window
/// whose overlap powers are all zero reproduces the plain window bit for bit.
pub fn synthesize_training<R: Rng + ?Sized>(
    g: &DMatrix<Complex64>,
    window: &TrainingWindow,
    q: &[f64],
    noise_power: f64,
    rng: &mut R,
) -> Result<TrainingObservation> {
    let antennas = g.nrows();
    let length = window.length();
    if q.len() != g.ncols() {
        return Err(Error::Configuration(format!("{} pilot powers for {} devices", q.len(), g.ncols())));
    }
    if let Some(&d) = window.devices.iter().chain(window.overlap.iter().map(|(d, _)| d)).find(|&&d| d >= g.ncols()) {
        return Err(Error::Configuration(format!("device {d} has no channel")));
    }
    let mut y = complex_gaussian_matrix(rng, antennas, length, noise_power);
    let np = length as f64;
    // Y += G_w diag(√(N_p q)) Φ^H
    let mut gw = DMatrix::zeros(antennas, window.devices.len());
    for (c, &d) in window.devices.iter().enumerate() {
        gw.set_column(c, &(g.column(d) * Complex64::from((np * q[d]).sqrt())));
    }
    y += &gw * window.book.sequences().adjoint();
    for &(d, p) in &window.overlap {
        let symbols = complex_gaussian_matrix(rng, 1, length, 1.0);
        y += g.column(d) * (symbols * Complex64::from(p.sqrt()));
    }
    Ok(TrainingObservation { y, window: window.clone() })
}

/// `y_k = Y φ_k`.
pub fn despread(y: &DMatrix<Complex64>, phi: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if y.ncols() != phi.len() {
        return Err(Error::Configuration(format!("training block has {} columns, pilot length {}", y.ncols(), phi.len())));
    }
    Ok(y * phi)
}

/// What contaminates device `k`'s de-spread observation, in received power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotInterference {
    /// `Σ_{k'≠k} β_k' q_k' |φ_k'^H φ_k|²` (realised or pilot-averaged).
    pub pilot_cross: f64,
    /// `Σ p β` of data overlapping the window.
    pub overlap: f64,
    pub noise_power: f64,
}

impl PilotInterference {
    /// Interference seen by book column `k`; `expected` averages over random pilot draws.
    pub fn for_device(window: &TrainingWindow, betas: &[f64], q: &[f64], k: usize, noise_power: f64, expected: bool) -> Result<Self> {
        let mut cross = 0.0;
        for (j, &d) in window.devices.iter().enumerate() {
            if j == k {
                continue;
            }
            let x = if expected {
                pilots::expected_cross_correlation(&window.book, j, k)?
            } else {
                window.book.inner(j, k).norm_sqr()
            };
            cross += betas[d] * q[d] * x;
        }
        Ok(Self { pilot_cross: cross, overlap: window.overlap_power(betas), noise_power })
    }
}

/// An estimate of the normalised channel `h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: DVector<Complex64>,
    pub estimator: Estimator,
    /// Mean-square of one estimate component (LMMSE only).
    pub gamma: Option<f64>,
    /// Analytic per-component mean-square error.
    pub error_ms: f64,
}

fn check_power(beta: f64, q: f64) -> Result<()> {
    if !(beta * q > 0.0) {
        return Err(Error::DegenerateEstimator(format!("pilot received power βq = {} must be positive", beta * q)));
    }
    Ok(())
}

/// `ĥ = y / √(N_p β q)`.
pub fn estimate_ls(y: &DVector<Complex64>, beta: f64, q: f64, length: usize, interference: &PilotInterference) -> Result<ChannelEstimate> {
    check_power(beta, q)?;
    let gain = length as f64 * beta * q;
    let error_ms = (length as f64 * interference.pilot_cross + interference.overlap + interference.noise_power) / gain;
    Ok(ChannelEstimate { h_hat: y * Complex64::from(1.0 / gain.sqrt()), estimator: Estimator::Ls, gamma: None, error_ms })
}

/// LMMSE coefficient `√(N_p β q) / D` and `γ = N_p β q / D` with
/// `D = N_p (β q + pilot_cross) + overlap + σ²`.
pub fn lmmse_scale(beta: f64, q: f64, length: usize, interference: &PilotInterference) -> (f64, f64) {
    let np = length as f64;
    let gain = np * beta * q;
    let d = gain + np * interference.pilot_cross + interference.overlap + interference.noise_power;
    (gain.sqrt() / d, gain / d)
}

pub fn estimate_lmmse(y: &DVector<Complex64>, beta: f64, q: f64, length: usize, interference: &PilotInterference) -> Result<ChannelEstimate> {
    check_power(beta, q)?;
    let (scale, gamma) = lmmse_scale(beta, q, length, interference);
    Ok(ChannelEstimate {
        h_hat: y * Complex64::from(scale),
        estimator: Estimator::Lmmse,
        gamma: Some(gamma),
        error_ms: 1.0 - gamma,
    })
}

/// Pilot family used by [`nmse_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BookKind {
    Wbe,
    Rpa,
}

impl BookKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BookKind::Wbe => "wbe",
            BookKind::Rpa => "rpa",
        }
    }
}

impl std::str::FromStr for BookKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wbe" => Ok(BookKind::Wbe),
            "rpa" => Ok(BookKind::Rpa),
            other => Err(Error::InvalidParameter(format!("unknown pilot book `{other}` (expected wbe or rpa)"))),
        }
    }
}

/// Equal-power, unit-β estimation experiment with SNR = `q β / σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmseConfig {
    pub machines: usize,
    pub pilot_length: usize,
    pub antennas: usize,
    pub book: BookKind,
    pub estimator: Estimator,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsePoint {
    pub snr_db: f64,
    pub nmse: f64,
    /// Standard error over trial batches.
    pub std_error: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Number of contiguous trial batches used for parallel fan-out and standard errors.
pub const BATCHES: usize = 32;

/// Splits `0..trials` into at most [`BATCHES`] contiguous ranges.
pub fn batch_ranges(trials: usize) -> Vec<std::ops::Range<usize>> {
    let n = BATCHES.min(trials).max(1);
    (0..n).map(|b| (b * trials / n)..((b + 1) * trials / n)).collect()
}

/// Generator for trial `t` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Canonical pilots drawn uniformly from a pool of `length`.
pub fn draw_assignment<R: Rng + ?Sized>(rng: &mut R, length: usize, count: usize) -> Result<PilotBook> {
    let mut seqs = DMatrix::zeros(length, count);
    for k in 0..count {
        seqs[(rng.random_range(0..length), k)] = Complex64::new(1.0, 0.0);
    }
    PilotBook::from_sequences(PilotKind::RandomOrthogonalAssignment { seed: 0, pool: length }, seqs)
}

/// Mean of batch values and its standard error.
pub fn batch_mean(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo normalised estimation error `E‖h − ĥ‖² / M`, averaged over devices.
///
/// Random-assignment books are redrawn every trial; the LMMSE estimator uses
/// the realised assignment.
pub fn nmse_curve(config: &NmseConfig) -> Result<Vec<NmsePoint>> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if config.machines == 0 || config.pilot_length == 0 || config.antennas == 0 {
        return Err(Error::InvalidParameter("K_m, N_p and M must be positive".into()));
    }
    let fixed_book = match config.book {
        BookKind::Wbe => Some(pilots::make_wbe_book(config.pilot_length, config.machines, None)?),
        BookKind::Rpa => None,
    };
    let devices: Vec<usize> = (0..config.machines).collect();
    let betas = vec![1.0; config.machines];
    let noise_power = 1.0;
    config
        .snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let q = vec![10f64.powf(snr_db / 10.0); config.machines];
            let point_seed = config.seed.wrapping_add((point as u64) << 32);
            let batches: Vec<f64> = batch_ranges(config.trials)
                .into_par_iter()
                .map(|range| -> Result<f64> {
                    let mut acc = CompensatedSum::default();
                    let len = range.len();
                    for t in range {
                        let mut rng = trial_rng(point_seed, t);
                        let book = match &fixed_book {
                            Some(b) => b.clone(),
                            None => draw_assignment(&mut rng, config.pilot_length, config.machines)?,
                        };
                        let fading = FadingRealization::draw(&mut rng, config.antennas, config.machines);
                        let window = TrainingWindow::new(devices.clone(), book)?;
                        let obs = synthesize_training(&fading.h, &window, &q, noise_power, &mut rng)?;
                        let spread = &obs.y * window.book.sequences();
                        let mut err = 0.0;
                        for k in 0..config.machines {
                            let y: DVector<Complex64> = spread.column(k).into_owned();
                            let interference = PilotInterference::for_device(&window, &betas, &q, k, noise_power, false)?;
                            let est = match config.estimator {
                                Estimator::Ls => estimate_ls(&y, 1.0, q[k], config.pilot_length, &interference)?,
                                Estimator::Lmmse => estimate_lmmse(&y, 1.0, q[k], config.pilot_length, &interference)?,
                            };
                            err += (&est.h_hat - fading.h.column(k)).norm_squared();
                        }
                        acc.add(err / (config.antennas * config.machines) as f64);
                    }
                    Ok(acc.value() / len as f64)
                })
                .collect::<Result<_>>()?;
            let (nmse, std_error) = weighted_batch_mean(&batches, config.trials);
            Ok(NmsePoint { snr_db, nmse, std_error })
        })
        .collect()
}

// Batches can differ in size by one trial; weight them so the mean is the plain trial mean.
fn weighted_batch_mean(batch_means: &[f64], trials: usize) -> (f64, f64) {
    let ranges = batch_ranges(trials);
    let mut total = CompensatedSum::default();
    for (m, r) in batch_means.iter().zip(&ranges) {
        total.add(m * r.len() as f64);
    }
    let mean = total.value() / trials as f64;
    let (_, se) = batch_mean(batch_means);
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilots::make_orthogonal_book;
    use approx::assert_relative_eq;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn noiseless_single_device_training() {
        let mut r = rng();
        let fading = FadingRealization::draw(&mut r, 4, 1);
        let beta = 2.5e-9;
        let g = fading.channels(&[beta]).unwrap();
        let window = TrainingWindow::new(vec![0], make_orthogonal_book(3, 1).unwrap()).unwrap();
        let obs = synthesize_training(&g, &window, &[0.3], 0.0, &mut r).unwrap();
        let s = (3.0 * 0.3 * beta).sqrt();
        for m in 0..4 {
            assert_relative_eq!(obs.y[(m, 0)].re, s * fading.h[(m, 0)].re, max_relative = 1e-12);
            assert_relative_eq!(obs.y[(m, 0)].im, s * fading.h[(m, 0)].im, max_relative = 1e-12);
            assert_eq!(obs.y[(m, 1)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn zero_overlap_power_is_bitwise_plain_training() {
        let fading = FadingRealization::draw(&mut rng(), 8, 3);
        let g = fading.channels(&[1e-10, 2e-10, 3e-10]).unwrap();
        let book = make_orthogonal_book(2, 2).unwrap();
        let plain = TrainingWindow::new(vec![1, 2], book.clone()).unwrap();
        let overlapped = plain.clone().with_overlap(vec![(0, 0.0)]);
        let q = [1.0, 0.5, 0.25];
        let a = synthesize_training(&g, &plain, &q, 2e-13, &mut rng()).unwrap();
        let b = synthesize_training(&g, &overlapped, &q, 2e-13, &mut rng()).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn despread_rejects_length_mismatch() {
        let y = DMatrix::<Complex64>::zeros(3, 4);
        assert!(matches!(despread(&y, &DVector::zeros(3)), Err(Error::Configuration(_))));
    }

    #[test]
    fn ls_error_without_interference() {
        let i = PilotInterference { pilot_cross: 0.0, overlap: 0.0, noise_power: 2e-13 };
        let est = estimate_ls(&DVector::zeros(2), 1e-10, 0.5, 4, &i).unwrap();
        assert_relative_eq!(est.error_ms, 2e-13 / (4.0 * 1e-10 * 0.5), max_relative = 1e-14);
        assert!(matches!(estimate_ls(&DVector::zeros(2), 1e-10, 0.0, 4, &i), Err(Error::DegenerateEstimator(_))));
    }

    #[test]
    fn lmmse_matched_noise_gives_half() {
        let i = PilotInterference { pilot_cross: 0.0, overlap: 0.0, noise_power: 1.0 };
        let est = estimate_lmmse(&DVector::zeros(2), 1.0, 0.25, 4, &i).unwrap();
        assert_relative_eq!(est.gamma.unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(est.gamma.unwrap() + est.error_ms, 1.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn batches_cover_all_trials() {
        for trials in [1, 5, 31, 32, 33, 1000] {
            let r = batch_ranges(trials);
            assert_eq!(r.first().unwrap().start, 0);
            assert_eq!(r.last().unwrap().end, trials);
            assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        }
    }
}
