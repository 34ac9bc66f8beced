//! End-to-end acceptance suite: one numbered criterion per function, each
//! printing a single PASS/FAIL line. Reference values are computed here from
//! first principles rather than read back from the library.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coexist_core::estimation::{nmse_curve, BookKind, NmseConfig};
use coexist_core::harness::{r_h_grid, trace_series, RegionSeries};
use coexist_core::pilots::{
    closed_form_power, gram_stats, make_random_assignment_book, make_wbe_book, min_power_vector, Estimator, PilotBook,
};
use coexist_core::powerctl::{
    bisect_common_target, human_rate_ceiling, maxmin_feasible, sci_data_powers, sci_pilot_powers, Class, DeviceTarget, HumanTargetMode,
    RatePoint, SolverOptions,
};
use coexist_core::rates::{human_mrc_sinr, mc_use_and_forget, LinkModel, McOptions, Receiver, Scheme, SchemeConfig};
use coexist_core::scenario::{place_devices, Device, Scenario, SystemParams};
use coexist_core::Error;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn table_one(antennas: usize) -> Scenario {
    place_devices(&SystemParams::table_one(antennas, 100, SEED)).unwrap()
}

/// `|φ_i^H φ_j|²` from the raw sequences, diagonal included.
fn cross_power(book: &PilotBook) -> DMatrix<f64> {
    let s = book.sequences();
    let k = s.ncols();
    DMatrix::from_fn(k, k, |i, j| {
        let g: Complex64 = (0..s.nrows()).map(|n| s[(n, i)].conj() * s[(n, j)]).sum();
        g.norm_sqr()
    })
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < budget, format!("{:.2} s of {:.0} s", t.as_secs_f64(), budget.as_secs_f64()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_sum: f64 = 0.0;
    let mut worst_row: f64 = 0.0;
    let mut worst_rho: f64 = 0.0;
    for (np, km) in [(5usize, 45usize), (10, 20), (10, 45), (20, 45)] {
        let book = make_wbe_book(np, km, None).unwrap();
        let x = cross_power(&book);
        let bound = (km * km) as f64 / np as f64;
        let load = km as f64 / np as f64;
        worst_sum = worst_sum.max(rel(x.sum(), bound));
        for r in 0..km {
            worst_row = worst_row.max(rel(x.row(r).sum(), load));
        }
        let rho = SymmetricEigen::new(x).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst_rho = worst_rho.max(rel(rho, load));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    Outcome::new(
        worst_sum <= 1e-9 && worst_row <= 1e-9 && worst_rho <= 1e-8 && fast,
        format!("welch sum {worst_sum:.1e}, row sums {worst_row:.1e}, spectral radius {worst_rho:.1e} (relative); {time}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [1usize, 4, 10, 20, 45] {
        let book = make_wbe_book(k, k, None).unwrap();
        let s = book.sequences();
        let gram = s.adjoint() * s;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("max |G − I| = {worst:.1e} over K ∈ {{1, 4, 10, 20, 45}}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (km, np) = (20usize, 10usize);
    let mut passed = true;
    let mut parts = Vec::new();
    for (estimator, floor) in [(Estimator::Lmmse, 1.0 - np as f64 / km as f64), (Estimator::Ls, km as f64 / np as f64 - 1.0)] {
        let config = NmseConfig {
            machines: km,
            pilot_length: np,
            antennas: 50,
            book: BookKind::Wbe,
            estimator,
            snr_db: vec![40.0],
            trials: 10_000,
            seed: SEED,
        };
        let nmse = nmse_curve(&config).unwrap()[0].nmse;
        passed &= rel(nmse, floor) <= 0.02;
        parts.push(format!("{} {nmse:.4} vs floor {floor:.4}", estimator.as_str()));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(30));
    Outcome::new(passed && fast, format!("{}; {time}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let noise = 2e-13;
    let (mut feasible, mut rejected, mut mismatched) = (0, 0, 0);
    let mut worst_power: f64 = 0.0;
    let mut worst_error: f64 = 0.0;
    for _ in 0..100 {
        let km = rng.random_range(2..=45usize);
        let np = rng.random_range(1..=km);
        let estimator = if rng.random_bool(0.5) { Estimator::Lmmse } else { Estimator::Ls };
        let e = match estimator {
            Estimator::Lmmse => rng.random_range(0.01..0.99),
            Estimator::Ls => rng.random_range(0.01..2.0 * km as f64 / np as f64),
        };
        let betas: Vec<f64> = (0..km).map(|_| 10f64.powf(rng.random_range(-12.0..-8.0))).collect();
        let book = make_wbe_book(np, km, None).unwrap();
        let stats = gram_stats(&book).unwrap();
        let closed = closed_form_power(&betas, e, noise, np, km, estimator);
        let matrix = min_power_vector(&stats, &betas, e, noise, np, estimator);
        match (closed, matrix) {
            (Ok(a), Ok(b)) => {
                feasible += 1;
                for (x, y) in a.iter().zip(&b) {
                    worst_power = worst_power.max(rel(*x, *y));
                }
                // errors reached by the closed-form powers, from the raw cross-correlations
                let x = cross_power(&book);
                let n = np as f64;
                for k in 0..km {
                    let mu_k = betas[k] * a[k];
                    let cross: f64 = (0..km).filter(|&j| j != k).map(|j| x[(j, k)] * betas[j] * a[j]).sum();
                    let err = match estimator {
                        Estimator::Ls => (n * cross + noise) / (n * mu_k),
                        Estimator::Lmmse => 1.0 - n * mu_k / (n * (cross + mu_k) + noise),
                    };
                    worst_error = worst_error.max(rel(err, e));
                }
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => rejected += 1,
            _ => mismatched += 1,
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(5));
    Outcome::new(
        worst_power <= 1e-8 && worst_error <= 1e-8 && mismatched == 0 && feasible > 0 && rejected > 0 && fast,
        format!(
            "{feasible} feasible draws (powers agree to {worst_power:.1e}, errors hit the target to {worst_error:.1e}), \
             {rejected} rejected by both, {mismatched} inconsistent; {time}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let s = table_one(50);
    let q = sci_pilot_powers(&s);
    let p = vec![s.params().p_max_w; s.len()];
    let book = make_wbe_book(20, s.machine_count(), None).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for scheme in [Scheme::Sc1 { alpha: 0.5 }, Scheme::Sc2, Scheme::Sc3] {
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, 5, 20), &book, &q).unwrap();
        let closed = model.evaluate(&p).unwrap();
        let mc = mc_use_and_forget(&model, &p, &McOptions::new(10_000, SEED)).unwrap();
        let mut worst: f64 = 0.0;
        for est in &mc {
            let cf = closed[est.device].phases[est.phase].sinr;
            worst = worst.max(rel(cf, est.sinr));
        }
        passed &= worst <= 0.03 && mc.len() >= s.len();
        parts.push(format!("{} worst {:.2}% over {} entries", scheme.label(), 100.0 * worst, mc.len()));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(600));
    Outcome::new(passed && fast, format!("{}; {time}", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let s = table_one(100_000);
    let q = sci_pilot_powers(&s);
    let p = sci_data_powers(&s);
    let np = 20;
    let book = make_wbe_book(np, s.machine_count(), None).unwrap();
    let x = cross_power(&book);
    let beta = s.betas();
    let kh = s.human_count();
    let mut passed = true;
    let mut parts = Vec::new();
    let mut limits: Vec<Vec<f64>> = Vec::new();
    for scheme in [Scheme::Sc1 { alpha: 0.5 }, Scheme::Sc2, Scheme::Sc3] {
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, kh, np), &book, &q).unwrap();
        let (mut finite_gap, mut formula_gap): (f64, f64) = (0.0, 0.0);
        let mut lim = Vec::new();
        for k in s.machines() {
            let mut den: f64 = s
                .machines()
                .filter(|&j| j != k)
                .map(|j| p[j] * q[j] * beta[j] * beta[j] * x[(j - kh, k - kh)])
                .sum::<f64>()
                / (q[k] * beta[k]);
            if scheme == Scheme::Sc3 {
                den += s.humans().map(|h| p[h] * p[h] * beta[h] * beta[h]).sum::<f64>() / (np as f64 * q[k] * beta[k]);
            }
            let oracle = beta[k] * p[k] / den;
            let library = model.asymptotic_sinr_machine(k, &p).unwrap().value();
            let finite = model.breakdown(k, &p).unwrap().phases[0].sinr;
            formula_gap = formula_gap.max(rel(library, oracle));
            finite_gap = finite_gap.max(rel(finite, oracle));
            lim.push(library);
        }
        passed &= formula_gap <= 1e-12 && finite_gap <= 0.01;
        parts.push(format!("{} limit {formula_gap:.1e}, M = 1e5 gap {:.3}%", scheme.label(), 100.0 * finite_gap));
        limits.push(lim);
    }
    let same = limits[0].iter().zip(&limits[1]).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    Outcome::new(passed && same <= 1e-12 && fast, format!("{}, SC-1 vs SC-2 limits {same:.1e}; {time}", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for draw in 0..30u64 {
        let m = rng.random_range(6..=400usize);
        let s = place_devices(&SystemParams::table_one(m, 100, SEED + draw)).unwrap();
        let q = sci_pilot_powers(&s);
        let p: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.01..1.0)).collect();
        let npm = rng.random_range(1..=45usize);
        let book = make_wbe_book(npm, s.machine_count(), None).unwrap();
        let kh = s.human_count();
        let beta = s.betas();
        let sigma2 = s.noise_power();
        let machine_data: f64 = s.machines().map(|j| p[j] * beta[j]).sum();
        let machine_pilot: f64 = s.machines().map(|j| q[j] * beta[j]).sum();
        for scheme in [Scheme::Sc1 { alpha: rng.random_range(0.05..1.0) }, Scheme::Sc2, Scheme::Sc3] {
            let config = SchemeConfig::new(scheme, 100, kh, npm).with_receiver(Receiver::Zf);
            let zf = LinkModel::new(&s, config, &book, &q).unwrap();
            let gamma = zf.human_gamma().to_vec();
            // machine power received during each human data phase
            let machine_terms: Vec<f64> = match scheme {
                Scheme::Sc1 { .. } => vec![0.0],
                Scheme::Sc2 => vec![machine_data],
                _ => vec![machine_pilot, machine_data],
            };
            let rewritten: Vec<(f64, f64)> = s.humans().map(|h| (p[h], beta[h] * (1.0 - gamma[h]))).collect();
            for h in s.humans() {
                let b = zf.breakdown(h, &p).unwrap();
                assert_eq!(b.phases.len(), machine_terms.len());
                for (ph, &j) in b.phases.iter().zip(&machine_terms) {
                    let mrc = human_mrc_sinr((m - kh) as f64, beta[h], p[h], gamma[h], &rewritten, j, sigma2);
                    worst = worst.max(rel(ph.sinr, mrc));
                    checked += 1;
                }
            }
        }
    }
    Outcome::new(worst <= 1e-12, format!("largest relative gap {worst:.1e} over {checked} human phases, 30 draws × 3 schemes"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst2, mut worst3): (f64, f64) = (0.0, 0.0);
    for draw in 0..10u64 {
        let s = place_devices(&SystemParams::table_one(rng.random_range(10..=300), 100, SEED + draw)).unwrap();
        let q = sci_pilot_powers(&s);
        let p: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.01..1.0)).collect();
        let npm = rng.random_range(1..=45usize);
        let book = make_wbe_book(npm, s.machine_count(), None).unwrap();
        let kh = s.human_count();

        let mut params = s.params().clone();
        params.humans = 0;
        let devices: Vec<Device> = s.devices()[kh..].iter().enumerate().map(|(i, d)| Device { id: i, ..d.clone() }).collect();
        let machines_only = Scenario::from_devices(params, devices).unwrap();
        let sc2 = LinkModel::new(&machines_only, SchemeConfig::new(Scheme::Sc2, 100, 0, npm), &book, &q[kh..]).unwrap();
        let sc1 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc1 { alpha: 0.0 }, 100, kh, npm), &book, &q).unwrap();
        for d in 0..machines_only.len() {
            let a = sc2.breakdown(d, &p[kh..]).unwrap();
            let b = sc1.breakdown(d + kh, &p).unwrap();
            worst2 = worst2.max(rel(a.phases[0].sinr, b.phases[0].sinr));
        }

        let mut silent = p.clone();
        silent[..kh].iter_mut().for_each(|x| *x = 0.0);
        let sc3 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc3, 100, kh, npm), &book, &q).unwrap();
        let sc1 = LinkModel::new(&s, SchemeConfig::new(Scheme::Sc1 { alpha: 0.5 }, 100, kh, npm), &book, &q).unwrap();
        for d in s.machines() {
            let a = sc3.breakdown(d, &silent).unwrap();
            let b = sc1.breakdown(d, &silent).unwrap();
            worst3 = worst3.max(rel(a.phases[0].sinr, b.phases[0].sinr));
        }
    }
    Outcome::new(
        worst2 <= 1e-12 && worst3 <= 1e-12,
        format!("SC-2 without humans {worst2:.1e}, SC-3 with silent humans {worst3:.1e} (largest relative machine SINR gap)"),
    )
}

fn criterion_9() -> Outcome {
    let (np, draws) = (10usize, 100_000u64);
    let mut sum = 0.0;
    for d in 0..draws {
        let book = make_random_assignment_book(np, 2, SEED.wrapping_add(d)).unwrap();
        sum += cross_power(&book)[(0, 1)];
    }
    let mean = sum / draws as f64;
    let p = 1.0 / np as f64;
    let band = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
    Outcome::new((mean - p).abs() <= band, format!("mean {mean:.5} vs 1/N_p = {p}, 3σ band ±{band:.5}"))
}

/// Worst-case shortfall of `upper` below `lower` over the selected points.
fn shortfalls(upper: &[RatePoint], lower: &[RatePoint], keep: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    upper
        .iter()
        .zip(lower)
        .filter(|(u, _)| keep(u.r_h_target))
        .map(|(u, l)| {
            let u_rate = if u.feasible { u.r_m } else { f64::NEG_INFINITY };
            let l_rate = if l.feasible { l.r_m } else { f64::NEG_INFINITY };
            let gap = if u_rate >= l_rate { 0.0 } else { l_rate - u_rate };
            (u.r_h_target, gap)
        })
        .collect()
}

fn criterion_10() -> Outcome {
    // rates are certified lower bounds, accurate to about 1e-4 bits/s/Hz
    const SLACK: f64 = 1e-4;
    let start = Instant::now();
    let s = table_one(200);
    let q = sci_pilot_powers(&s);
    let ceiling = human_rate_ceiling(&s, 100, s.human_count(), Receiver::Mrc, &q).unwrap();
    let grid = r_h_grid(ceiling, 12);
    let trace = |scheme, book, receiver| trace_series(&s, RegionSeries { scheme, book, receiver }, HumanTargetMode::Exact, &grid).unwrap();
    let schemes = [Scheme::Sc1 { alpha: 0.0 }, Scheme::Sc2, Scheme::Sc3];
    let wbe: Vec<Vec<RatePoint>> = schemes.iter().map(|&sc| trace(sc, BookKind::Wbe, Receiver::Mrc)).collect();
    let rpa: Vec<Vec<RatePoint>> = schemes.iter().map(|&sc| trace(sc, BookKind::Rpa, Receiver::Mrc)).collect();
    let zf: Vec<Vec<RatePoint>> = schemes.iter().map(|&sc| trace(sc, BookKind::Wbe, Receiver::Zf)).collect();
    let opa = trace(Scheme::Opa { group_size: 9 }, BookKind::Wbe, Receiver::Mrc);

    let fails = |v: &[(f64, f64)]| v.iter().filter(|(_, g)| *g > SLACK).map(|(r, _)| *r).collect::<Vec<f64>>();
    let worst = |v: &[(f64, f64)]| v.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    let mut parts = Vec::new();

    let (mut a_fail, mut b_fail) = (Vec::new(), Vec::new());
    let (mut a_worst, mut b_worst): (f64, f64) = (0.0, 0.0);
    for i in 0..3 {
        let a = shortfalls(&wbe[i], &rpa[i], |_| true);
        a_fail.extend(fails(&a));
        a_worst = a_worst.max(worst(&a));
        let b = shortfalls(&zf[i], &wbe[i], |_| true);
        b_fail.extend(fails(&b));
        b_worst = b_worst.max(worst(&b));
    }
    let pass_a = a_fail.is_empty();
    let pass_b = b_fail.is_empty();
    parts.push(format!("(a) WBE ≥ RPA {} [worst shortfall {a_worst:.2e}]", if pass_a { "holds" } else { "violated" }));
    parts.push(format!("(b) ZF ≥ MRC {} [worst shortfall {b_worst:.2e}]", if pass_b { "holds" } else { "violated" }));

    let upper_third = grid[grid.len() - grid.len() / 3];
    let c = shortfalls(&wbe[2], &wbe[1], |r| r >= upper_third - 1e-12);
    let c_fail = fails(&c);
    parts.push(format!(
        "(c) SC-3 ≥ SC-2 for R_h ≥ {upper_third:.3} on {} points: {} [shortfalls {}]",
        c.len(),
        if c_fail.is_empty() { "holds" } else { "violated" },
        c.iter().map(|(r, g)| format!("{r:.2}:{g:.4}")).collect::<Vec<_>>().join(" ")
    ));

    let near_axis = 0.2 * ceiling;
    let d = shortfalls(&wbe[2], &opa, |_| true);
    let d_fail: Vec<f64> = fails(&d).into_iter().filter(|&r| r > near_axis).collect();
    parts.push(format!(
        "(d) SC-3 ≥ OPA beyond R_h = {near_axis:.3}: {} [shortfalls {}]",
        if d_fail.is_empty() { "holds" } else { "violated" },
        d.iter().map(|(r, g)| format!("{r:.2}:{g:.4}")).collect::<Vec<_>>().join(" ")
    ));

    let (fast, time) = within_budget(start, Duration::from_secs(1200));
    parts.push(time);
    Outcome::new(pass_a && pass_b && c_fail.is_empty() && d_fail.is_empty() && fast && grid.len() >= 10, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let s = table_one(200);
    let q = sci_pilot_powers(&s);
    let kh = s.human_count();
    let p_max = s.params().p_max_w;
    // a budget large enough to prove infeasibility right at the boundary
    let options = SolverOptions { max_iterations: 1_000_000, ..SolverOptions::default() };
    let mut monotone_ok = true;
    let (mut worst_shortfall, mut worst_bracket): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    let mut bracket_ok = true;
    let mut notes = Vec::new();
    for scheme in [Scheme::Sc2, Scheme::Sc3] {
        let book = make_wbe_book(20, s.machine_count(), None).unwrap();
        let model = LinkModel::new(&s, SchemeConfig::new(scheme, 100, kh, 20), &book, &q).unwrap();
        let others: Vec<DeviceTarget> =
            (0..s.len()).map(|d| if d < kh { DeviceTarget::Rate(1.0) } else { DeviceTarget::Sinr(0.0) }).collect();
        let found = bisect_common_target(&model, Class::Machine, &others, p_max, None, &options).unwrap().unwrap();
        let targets: Vec<DeviceTarget> =
            (0..s.len()).map(|d| if d < kh { DeviceTarget::Rate(1.0) } else { DeviceTarget::Sinr(found.sinr) }).collect();

        // iterates from zero, observed one step at a time
        let mut prev = vec![0.0; s.len()];
        for n in 1..=200 {
            let step = SolverOptions { max_iterations: n, ..options };
            let r = maxmin_feasible(&model, &targets, p_max, None, &step).unwrap();
            monotone_ok &= r.monotone && r.lower.iter().zip(&prev).all(|(a, b)| *a >= b * (1.0 - 1e-12));
            prev = r.lower;
            if r.feasible {
                break;
            }
        }

        // targets met at the returned powers
        let all = model.evaluate(&found.solution.p).unwrap();
        for (d, b) in all.iter().enumerate() {
            let short = if d < kh { (1.0 - b.rate) / 1.0 } else { b.phases.iter().map(|ph| (found.sinr - ph.sinr) / found.sinr).fold(f64::MIN, f64::max) };
            worst_shortfall = worst_shortfall.max(short);
        }

        // bracket, with infeasibility re-established by a long independent solve
        let gap = found.upper / found.sinr - 1.0;
        worst_bracket = worst_bracket.max(gap);
        let at = |t: f64| -> Vec<DeviceTarget> {
            (0..s.len()).map(|d| if d < kh { DeviceTarget::Rate(1.0) } else { DeviceTarget::Sinr(t) }).collect()
        };
        let long = SolverOptions { max_iterations: 5_000_000, ..options };
        let above = maxmin_feasible(&model, &at(found.upper), p_max, None, &long).unwrap();
        let below = maxmin_feasible(&model, &at(found.sinr), p_max, None, &long).unwrap();
        bracket_ok &= gap <= 1e-5 && found.upper_certified && !above.feasible && !above.exhausted && below.feasible;
        notes.push(format!("{} Γ* ∈ [{:.6e}, {:.6e}] ({})", scheme.label(), found.sinr, found.upper, above.reason.unwrap_or_default()));
    }
    Outcome::new(
        monotone_ok && worst_shortfall <= 1e-6 && bracket_ok,
        format!(
            "monotone iterates {monotone_ok}, worst target shortfall {worst_shortfall:.1e}, bracket {worst_bracket:.1e}; {}",
            notes.join("; ")
        ),
    )
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("Welch equality of WBE books", criterion_1),
        ("orthogonality at N_p = K_m", criterion_2),
        ("estimation error floors", criterion_3),
        ("closed-form pilot powers", criterion_4),
        ("closed form against Monte-Carlo", criterion_5),
        ("large-array limits", criterion_6),
        ("ZF substitution identity", criterion_7),
        ("scheme reductions", criterion_8),
        ("random assignment collisions", criterion_9),
        ("rate-region orderings", criterion_10),
        ("solver contracts", criterion_11),
    ];
    println!();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
