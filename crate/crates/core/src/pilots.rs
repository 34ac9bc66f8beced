//! Pilot codebooks and their correlation analytics.
//!
//! A [`PilotBook`] stores unit-norm sequences `φ_k` as the columns of an
//! `N_p × K` matrix; the transmitted pilot is `√N_p · φ_k`. [`GramStats`]
//! captures the squared cross-correlation matrix `Φ`, its shifted form
//! `Φ̄ = Φ + I` and the spectral radius that decides whether a common
//! estimation error is reachable at finite pilot power.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ls,
    Lmmse,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::Lmmse => "lmmse",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(Estimator::Ls),
            "lmmse" => Ok(Estimator::Lmmse),
            other => Err(Error::InvalidParameter(format!("unknown estimator `{other}` (expected ls or lmmse)"))),
        }
    }
}

/// How a book was generated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PilotKind {
    /// Mutually orthonormal canonical basis vectors.
    Orthogonal,
    /// Rows `u` of a `K × K` DFT matrix, normalised.
    Wbe { u: Vec<usize> },
    /// Each device draws one of `pool` canonical pilots uniformly at random.
    RandomOrthogonalAssignment { seed: u64, pool: usize },
    /// Devices are split into consecutive groups of `group_size`, orthogonal within a group.
    GroupedOrthogonal { group_size: usize },
    /// Several books stacked in one training window.
    Composite,
}

impl PilotKind {
    pub fn label(&self) -> &'static str {
        match self {
            PilotKind::Orthogonal => "orthogonal",
            PilotKind::Wbe { .. } => "wbe",
            PilotKind::RandomOrthogonalAssignment { .. } => "rpa",
            PilotKind::GroupedOrthogonal { .. } => "grouped-orthogonal",
            PilotKind::Composite => "composite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    kind: PilotKind,
    /// `N_p × K`, one unit-norm sequence per column.
    sequences: DMatrix<Complex64>,
}

/// Correlation analytics of a book.
#[derive(Debug, Clone, PartialEq)]
pub struct GramStats {
    /// `|φ_i^H φ_j|²` with a zero diagonal.
    pub phi: DMatrix<f64>,
    /// `Φ + I`.
    pub phi_bar: DMatrix<f64>,
    pub spectral_radius: f64,
    /// Row sums of `Φ̄`.
    pub row_sums: Vec<f64>,
    /// `Σ_{i,j} |φ_i^H φ_j|²`, diagonal included.
    pub welch_sum: f64,
}

impl PilotBook {
    /// Wraps raw sequences without checking any property of `kind`.
    pub fn from_sequences(kind: PilotKind, sequences: DMatrix<Complex64>) -> Result<Self> {
        if sequences.nrows() == 0 {
            return Err(Error::InvalidParameter("pilot length must be at least 1".into()));
        }
        for (k, col) in sequences.column_iter().enumerate() {
            let norm2: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            if (norm2 - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("sequence {k} has squared norm {norm2}")));
            }
        }
        Ok(Self { kind, sequences })
    }

    pub fn kind(&self) -> &PilotKind {
        &self.kind
    }

    /// Pilot length `N_p`.
    pub fn length(&self) -> usize {
        self.sequences.nrows()
    }

    pub fn count(&self) -> usize {
        self.sequences.ncols()
    }

    pub fn sequences(&self) -> &DMatrix<Complex64> {
        &self.sequences
    }

    pub fn sequence(&self, k: usize) -> DVectorView<'_, Complex64> {
        self.sequences.column(k)
    }

    /// `φ_i^H φ_j`.
    pub fn inner(&self, i: usize, j: usize) -> Complex64 {
        self.sequences.column(i).dotc(&self.sequences.column(j))
    }

    /// Places the sequences on rows `offset..offset + N_p` of a longer window.
    /// Inner products, and therefore every statistic, are unchanged.
    pub fn embed(&self, offset: usize, total_length: usize) -> Result<Self> {
        if offset + self.length() > total_length {
            return Err(Error::Configuration(format!(
                "cannot embed a length-{} book at offset {offset} in a window of {total_length}",
                self.length()
            )));
        }
        let mut seqs = DMatrix::zeros(total_length, self.count());
        seqs.view_mut((offset, 0), (self.length(), self.count())).copy_from(&self.sequences);
        Ok(Self { kind: self.kind.clone(), sequences: seqs })
    }

    /// Concatenates books of equal length into one training window.
    pub fn stack(books: &[&PilotBook]) -> Result<Self> {
        let length = books.first().map(|b| b.length()).unwrap_or(0);
        if length == 0 || books.iter().any(|b| b.length() != length) {
            return Err(Error::Configuration("stacked books must share a positive length".into()));
        }
        let count = books.iter().map(|b| b.count()).sum();
        let mut seqs = DMatrix::zeros(length, count);
        let mut col = 0;
        for b in books {
            seqs.columns_mut(col, b.count()).copy_from(&b.sequences);
            col += b.count();
        }
        Ok(Self { kind: PilotKind::Composite, sequences: seqs })
    }

    /// Writes the book as CSV: a `#` header line with the kind and parameters,
    /// then one row per sequence with interleaved real and imaginary parts.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let params = match &self.kind {
            PilotKind::Wbe { u } => {
                let u: Vec<String> = u.iter().map(|x| x.to_string()).collect();
                format!(",u={}", u.join(";"))
            }
            PilotKind::RandomOrthogonalAssignment { seed, pool } => format!(",seed={seed},pool={pool}"),
            PilotKind::GroupedOrthogonal { group_size } => format!(",group_size={group_size}"),
            _ => String::new(),
        };
        writeln!(out, "# kind={},length={},count={}{}", self.kind.label(), self.length(), self.count(), params)?;
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for col in self.sequences.column_iter() {
            let row: Vec<String> = col
                .iter()
                .flat_map(|z| [format!("{:.17e}", z.re), format!("{:.17e}", z.im)])
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn canonical(length: usize, indices: impl IntoIterator<Item = usize>) -> DMatrix<Complex64> {
    let indices: Vec<usize> = indices.into_iter().collect();
    let mut seqs = DMatrix::zeros(length, indices.len());
    for (k, &row) in indices.iter().enumerate() {
        seqs[(row, k)] = Complex64::new(1.0, 0.0);
    }
    seqs
}

/// `K` canonical basis sequences of length `N_p`.
pub fn make_orthogonal_book(length: usize, count: usize) -> Result<PilotBook> {
    if length == 0 {
        return Err(Error::InvalidParameter("pilot length must be at least 1".into()));
    }
    if count > length {
        return Err(Error::InfeasibleOrthogonality { count, length });
    }
    PilotBook::from_sequences(PilotKind::Orthogonal, canonical(length, 0..count))
}

/// Default DFT row selection `u_i = i mod K` for `i = 1..=N_p`.
pub fn default_wbe_rows(length: usize, count: usize) -> Vec<usize> {
    (1..=length).map(|i| i % count.max(1)).collect()
}

/// Raw DFT-row sequences `φ_k[i] = exp(j 2π u_i k / K) / √N_p`, with no check on `u`.
pub fn wbe_sequences(count: usize, u: &[usize]) -> DMatrix<Complex64> {
    let length = u.len();
    let scale = 1.0 / (length as f64).sqrt();
    DMatrix::from_fn(length, count, |i, k| {
        // reduce the phase index first so large K keeps full precision
        let idx = (u[i] as u128 * k as u128 % count as u128) as f64;
        Complex64::from_polar(scale, 2.0 * PI * idx / count as f64)
    })
}

/// Welch-bound-equality book built from `N_p` distinct rows of the `K_m`-point DFT.
pub fn make_wbe_book(length: usize, count: usize, u: Option<&[usize]>) -> Result<PilotBook> {
    if length == 0 || count == 0 {
        return Err(Error::InvalidParameter("WBE book needs positive length and count".into()));
    }
    if length > count {
        return Err(Error::InvalidParameter(format!(
            "WBE book needs N_p <= K_m, got N_p = {length}, K_m = {count}"
        )));
    }
    let u = match u {
        Some(u) => u.to_vec(),
        None => default_wbe_rows(length, count),
    };
    if u.len() != length {
        return Err(Error::InvalidParameter(format!("u has {} entries, expected {length}", u.len())));
    }
    let mut seen = vec![false; count];
    for &x in &u {
        if x >= count {
            return Err(Error::InvalidParameter(format!("u entry {x} outside 0..{count}")));
        }
        if std::mem::replace(&mut seen[x], true) {
            return Err(Error::InvalidParameter(format!("duplicate u entry {x}")));
        }
    }
    let seqs = wbe_sequences(count, &u);
    PilotBook::from_sequences(PilotKind::Wbe { u }, seqs)
}

/// Every device independently picks one of `N_p` canonical pilots.
pub fn make_random_assignment_book(length: usize, count: usize, seed: u64) -> Result<PilotBook> {
    if length == 0 {
        return Err(Error::InvalidParameter("pilot length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..count).map(|_| rng.random_range(0..length)).collect();
    PilotBook::from_sequences(
        PilotKind::RandomOrthogonalAssignment { seed, pool: length },
        canonical(length, picks),
    )
}

/// Orthogonal pilots reused across consecutive groups of `group_size` devices.
pub fn make_grouped_orthogonal_book(group_size: usize, count: usize) -> Result<PilotBook> {
    if group_size == 0 {
        return Err(Error::InvalidParameter("group size must be at least 1".into()));
    }
    PilotBook::from_sequences(
        PilotKind::GroupedOrthogonal { group_size },
        canonical(group_size, (0..count).map(|k| k % group_size)),
    )
}

/// `E[|φ_i^H φ_j|²]`: the realised value for deterministic books, `1/pool`
/// for random assignment, and zero across groups of a grouped book.
pub fn expected_cross_correlation(book: &PilotBook, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::Domain("cross-correlation needs two distinct devices".into()));
    }
    if i >= book.count() || j >= book.count() {
        return Err(Error::Domain(format!("device index out of range for a book of {}", book.count())));
    }
    Ok(match book.kind() {
        PilotKind::RandomOrthogonalAssignment { pool, .. } => 1.0 / *pool as f64,
        PilotKind::GroupedOrthogonal { group_size } if i / group_size != j / group_size => 0.0,
        _ => book.inner(i, j).norm_sqr(),
    })
}

/// Matrix of [`expected_cross_correlation`] values with a zero diagonal.
pub fn expected_cross_matrix(book: &PilotBook) -> DMatrix<f64> {
    let k = book.count();
    DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { expected_cross_correlation(book, i, j).unwrap_or(0.0) })
}

fn stats_from_phi(phi: DMatrix<f64>) -> GramStats {
    let k = phi.nrows();
    let phi_bar = &phi + DMatrix::<f64>::identity(k, k);
    let row_sums: Vec<f64> = phi_bar.row_iter().map(|r| r.sum()).collect();
    let welch_sum = row_sums.iter().sum();
    let spectral_radius = if k == 0 {
        0.0
    } else {
        // Φ̄ is symmetric and non-negative, so the Perron root is its largest eigenvalue.
        SymmetricEigen::new(phi_bar.clone()).eigenvalues.max()
    };
    GramStats { phi, phi_bar, spectral_radius, row_sums, welch_sum }
}

/// Statistics of the realised cross-correlations of `book`.
pub fn gram_stats(book: &PilotBook) -> Result<GramStats> {
    if book.count() == 0 {
        return Err(Error::InvalidParameter("empty pilot book".into()));
    }
    let k = book.count();
    let gram = book.sequences().ad_mul(book.sequences());
    let phi = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { gram[(i, j)].norm_sqr() });
    Ok(stats_from_phi(phi))
}

/// Statistics of the pilot-averaged cross-correlations (equal to [`gram_stats`]
/// for deterministic books).
pub fn expected_gram_stats(book: &PilotBook) -> Result<GramStats> {
    if book.count() == 0 {
        return Err(Error::InvalidParameter("empty pilot book".into()));
    }
    Ok(stats_from_phi(expected_cross_matrix(book)))
}

fn check_error_range(e: f64, estimator: Estimator) -> Result<()> {
    let ok = match estimator {
        Estimator::Ls => e > 0.0 && e.is_finite(),
        Estimator::Lmmse => e > 0.0 && e < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("target error {e} out of range for {}", estimator.as_str())))
    }
}

/// Whether a positive power vector can give every device the error `e`:
/// `ρ(Φ̄) < 1 + e` for LS, `ρ(Φ̄) < 1 / (1 - e)` for LMMSE.
pub fn error_feasible(stats: &GramStats, e: f64, estimator: Estimator) -> Result<bool> {
    check_error_range(e, estimator)?;
    Ok(match estimator {
        Estimator::Ls => stats.spectral_radius < 1.0 + e,
        Estimator::Lmmse => stats.spectral_radius < 1.0 / (1.0 - e),
    })
}

/// Minimum pilot powers reaching the common error `e` for every device.
///
/// Solves `(I − Φ̄/(1+e)) μ = η/(1+e)` (LS) or `(I − (1−e)Φ̄) μ = (1−e)η` (LMMSE)
/// with `η = σ²/N_p · 1`, and returns `q_k = μ_k / β_k`.
pub fn min_power_vector(
    stats: &GramStats,
    betas: &[f64],
    e: f64,
    noise_power: f64,
    length: usize,
    estimator: Estimator,
) -> Result<Vec<f64>> {
    let k = stats.phi.nrows();
    if betas.len() != k {
        return Err(Error::InvalidParameter(format!("{} betas for {k} sequences", betas.len())));
    }
    if betas.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidParameter("betas must be positive".into()));
    }
    if !error_feasible(stats, e, estimator)? {
        return Err(Error::Infeasible(format!(
            "error {e} needs a spectral radius below the threshold, got {}",
            stats.spectral_radius
        )));
    }
    let eta = noise_power / length as f64;
    let scale = match estimator {
        Estimator::Ls => 1.0 / (1.0 + e),
        Estimator::Lmmse => 1.0 - e,
    };
    let system = DMatrix::<f64>::identity(k, k) - &stats.phi_bar * scale;
    let rhs = DVector::from_element(k, eta * scale);
    let mu = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular power-control system".into()))?;
    if mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Numerical("power solution is not positive".into()));
    }
    Ok(mu.iter().zip(betas).map(|(m, b)| m / b).collect())
}

/// Closed-form minimum powers for a WBE book of `K_m` sequences of length `N_p`.
pub fn closed_form_power(
    betas: &[f64],
    e: f64,
    noise_power: f64,
    length: usize,
    count: usize,
    estimator: Estimator,
) -> Result<Vec<f64>> {
    check_error_range(e, estimator)?;
    let (np, km) = (length as f64, count as f64);
    let (num, den) = match estimator {
        Estimator::Ls => (noise_power, np * (1.0 + e) - km),
        Estimator::Lmmse => (noise_power * (1.0 - e), np - km * (1.0 - e)),
    };
    if !(den > 0.0) {
        return Err(Error::Infeasible(format!("error {e} is below the floor for N_p = {length}, K_m = {count}")));
    }
    if betas.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidParameter("betas must be positive".into()));
    }
    Ok(betas.iter().map(|b| num / (den * b)).collect())
}

/// Per-device mean-square estimation error for powers `q` under `stats`.
pub fn device_errors(
    stats: &GramStats,
    betas: &[f64],
    q: &[f64],
    noise_power: f64,
    length: usize,
    estimator: Estimator,
) -> Vec<f64> {
    let np = length as f64;
    let mu: Vec<f64> = betas.iter().zip(q).map(|(b, q)| b * q).collect();
    (0..mu.len())
        .map(|k| {
            let cross: f64 = (0..mu.len()).map(|j| stats.phi[(j, k)] * mu[j]).sum();
            match estimator {
                Estimator::Ls => (np * cross + noise_power) / (np * mu[k]),
                Estimator::Lmmse => 1.0 - np * mu[k] / (np * (cross + mu[k]) + noise_power),
            }
        })
        .collect()
}

/// Lowest min-max error attainable with `N_p`-length pilots for `K_m` devices.
pub fn error_floor(count: usize, length: usize, estimator: Estimator) -> Result<f64> {
    if length == 0 || length > count {
        return Err(Error::Domain(format!("error floor needs 1 <= N_p <= K_m, got N_p = {length}, K_m = {count}")));
    }
    let (km, np) = (count as f64, length as f64);
    Ok(match estimator {
        Estimator::Lmmse => (km - np) / km,
        Estimator::Ls => (km - np) / np,
    })
}

/// Welch lower bound on `Σ_{i,j} |φ_i^H φ_j|²`; below `K = N_p` only the diagonal counts.
pub fn welch_lower_bound(length: usize, count: usize) -> f64 {
    let (np, k) = (length as f64, count as f64);
    (k * k / np).max(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn orthogonal_books() {
        let b = make_orthogonal_book(5, 5).unwrap();
        let g = b.sequences().ad_mul(b.sequences());
        assert_eq!(g, DMatrix::identity(5, 5));
        let s = gram_stats(&make_orthogonal_book(8, 5).unwrap()).unwrap();
        assert_eq!(s.welch_sum, 5.0);
        assert_relative_eq!(gram_stats(&b).unwrap().spectral_radius, 1.0, epsilon = 1e-12);
        assert!(matches!(
            make_orthogonal_book(4, 5),
            Err(Error::InfeasibleOrthogonality { count: 5, length: 4 })
        ));
    }

    #[test]
    fn wbe_reference_book() {
        let b = make_wbe_book(10, 20, None).unwrap();
        let s = gram_stats(&b).unwrap();
        assert_relative_eq!(s.welch_sum, 40.0, max_relative = 1e-12);
        assert_relative_eq!(s.spectral_radius, 2.0, max_relative = 1e-10);
        for r in &s.row_sums {
            assert_relative_eq!(*r, 2.0, max_relative = 1e-12);
        }
        for i in 0..20 {
            let off: f64 = (0..20).filter(|&j| j != i).map(|j| expected_cross_correlation(&b, i, j).unwrap()).sum();
            assert_relative_eq!(off, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn full_dft_is_orthonormal() {
        let b = make_wbe_book(20, 20, None).unwrap();
        let g = b.sequences().ad_mul(b.sequences());
        let err = (g - DMatrix::<Complex64>::identity(20, 20)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn wbe_parameter_errors() {
        assert!(make_wbe_book(5, 4, None).is_err());
        assert!(make_wbe_book(3, 10, Some(&[1, 2, 2])).is_err());
        assert!(make_wbe_book(3, 10, Some(&[1, 2, 10])).is_err());
        assert!(make_wbe_book(3, 10, Some(&[1, 2])).is_err());
    }

    #[test]
    fn random_assignment_collisions_only() {
        let b = make_random_assignment_book(10, 20, 3).unwrap();
        let s = gram_stats(&b).unwrap();
        assert!(s.phi.iter().all(|&x| x == 0.0 || x == 1.0));
        assert!(s.spectral_radius >= 2.0 - 1e-12);
        assert_eq!(expected_cross_correlation(&b, 0, 1).unwrap(), 0.1);

        let single = gram_stats(&make_random_assignment_book(1, 4, 9).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(single.phi[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
        assert_eq!(make_random_assignment_book(10, 20, 3).unwrap(), b);
    }

    #[test]
    fn cross_correlation_domain() {
        let b = make_orthogonal_book(4, 4).unwrap();
        assert_eq!(expected_cross_correlation(&b, 0, 3).unwrap(), 0.0);
        assert!(matches!(expected_cross_correlation(&b, 2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn feasibility_thresholds() {
        let wbe = gram_stats(&make_wbe_book(10, 20, None).unwrap()).unwrap();
        assert!(error_feasible(&wbe, 1.01, Estimator::Ls).unwrap());
        assert!(!error_feasible(&wbe, 0.5, Estimator::Lmmse).unwrap());
        let orth = gram_stats(&make_orthogonal_book(5, 5).unwrap()).unwrap();
        assert!(error_feasible(&orth, 0.1, Estimator::Lmmse).unwrap());
        assert!(error_feasible(&orth, 1.5, Estimator::Lmmse).is_err());
        assert!(error_feasible(&orth, 0.0, Estimator::Ls).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let ls = closed_form_power(&[1.0], 1.5, 2e-13, 10, 20, Estimator::Ls).unwrap();
        assert_relative_eq!(ls[0], 4e-14, max_relative = 1e-12);
        let mmse = closed_form_power(&[1.0], 0.6, 2e-13, 10, 20, Estimator::Lmmse).unwrap();
        assert_relative_eq!(mmse[0], 4e-14, max_relative = 1e-12);
        assert!(closed_form_power(&[1.0], 0.5, 2e-13, 10, 20, Estimator::Lmmse).is_err());
        assert!(closed_form_power(&[1.0], 1.0, 2e-13, 10, 20, Estimator::Ls).is_err());
    }

    #[test]
    fn min_power_equal_betas_are_equal() {
        let s = gram_stats(&make_wbe_book(10, 20, None).unwrap()).unwrap();
        let q = min_power_vector(&s, &[1.0; 20], 1.5, 2e-13, 10, Estimator::Ls).unwrap();
        for x in &q {
            assert_relative_eq!(*x, 4e-14, max_relative = 1e-9);
        }
    }

    #[test]
    fn min_power_orthogonal_lmmse_single_device_form() {
        // orthogonal pilots decouple devices: 1 - N q β / (N q β + σ²) = e
        // gives q = σ² (1 - e) / (N_p e β)
        let s = gram_stats(&make_orthogonal_book(6, 6).unwrap()).unwrap();
        let betas = [1e-10, 2e-11, 5e-12, 3e-10, 1e-9, 7e-11];
        let e = 0.2;
        let q = min_power_vector(&s, &betas, e, 2e-13, 6, Estimator::Lmmse).unwrap();
        for (qk, b) in q.iter().zip(&betas) {
            assert_relative_eq!(*qk, 2e-13 * (1.0 - e) / (6.0 * e * b), max_relative = 1e-10);
        }
        // the K = N_p closed form agrees
        let cf = closed_form_power(&betas, e, 2e-13, 6, 6, Estimator::Lmmse).unwrap();
        for (a, b) in q.iter().zip(&cf) {
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }
    }

    #[test]
    fn min_power_rejects_infeasible() {
        let s = gram_stats(&make_wbe_book(10, 20, None).unwrap()).unwrap();
        assert!(matches!(
            min_power_vector(&s, &[1.0; 20], 0.5, 2e-13, 10, Estimator::Lmmse),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn floors_and_welch() {
        assert_eq!(error_floor(20, 10, Estimator::Lmmse).unwrap(), 0.5);
        assert_eq!(error_floor(20, 10, Estimator::Ls).unwrap(), 1.0);
        assert_eq!(error_floor(10, 10, Estimator::Ls).unwrap(), 0.0);
        assert_eq!(error_floor(10, 10, Estimator::Lmmse).unwrap(), 0.0);
        assert!(error_floor(10, 11, Estimator::Ls).is_err());
        assert_eq!(welch_lower_bound(10, 20), 40.0);
        assert_eq!(welch_lower_bound(20, 20), 20.0);
        assert_eq!(welch_lower_bound(1, 5), 25.0);
        assert_eq!(welch_lower_bound(8, 5), 5.0);
    }

    #[test]
    fn embedding_preserves_statistics() {
        let b = make_wbe_book(4, 9, None).unwrap();
        let e = b.embed(3, 10).unwrap();
        assert_eq!(e.length(), 10);
        let (s1, s2) = (gram_stats(&b).unwrap(), gram_stats(&e).unwrap());
        assert!((s1.phi - s2.phi).abs().max() < 1e-15);
        assert!(b.embed(7, 10).is_err());
    }

    #[test]
    fn grouped_book_is_orthogonal_within_groups() {
        let b = make_grouped_orthogonal_book(9, 45).unwrap();
        for i in 0..45 {
            for j in 0..45 {
                if i != j {
                    assert_eq!(expected_cross_correlation(&b, i, j).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let b = make_wbe_book(3, 4, None).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# kind=wbe,length=3,count=4,u=1;2;3");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.split(',').count() == 6));
        let first: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();
        let z = b.sequence(1)[0];
        assert_relative_eq!(first[0], z.re, epsilon = 1e-16);
        assert_relative_eq!(first[1], z.im, epsilon = 1e-16);
    }
}
