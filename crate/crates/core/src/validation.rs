//! Oracle and property checks run by `ris-sim validate` and the acceptance
//! suite. Each check returns a [`CheckOutcome`] instead of panicking.

use rand::Rng;
use rand_distr::Exp1;

use crate::asymptotics::{avg_capacity_exact, avg_snr, gumbel_sup_distance, HomogeneousModel};
use crate::channel::{
    sample_tx_ris_channel, sample_user_channels, spatial_signature, ChannelParams, SpatialSignatureParams,
};
use crate::config::SystemConfig;
use crate::harness::center_variances;
use crate::phase::{
    exhaustive_oracle, objective, optimize_phases, optimize_phases_traced, quadratic_form_terms, OptimizerOptions,
    PhaseStart,
};
use crate::power::{waterfill, DEFAULT_WATERFILL_TOL};
use crate::reflection::{random_schedule, CascadedPaths, PhaseAlphabet};
use crate::rng::{complex_gaussian, run_seed, stream_rng, SimRng, Stream};
use crate::stats::{ks_critical_value, ks_statistic};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn log_uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Largest KKT or budget violation of one water-filling solution, relative to
/// the water level or the budget.
pub fn waterfill_violation(alphas: &[f64], p_tx: f64) -> f64 {
    let Ok(r) = waterfill(alphas, p_tx, DEFAULT_WATERFILL_TOL) else {
        return f64::INFINITY;
    };
    let level = r.level();
    let mut worst = (r.average_power() - p_tx).abs() / p_tx.max(1.0);
    for (&p, &a) in r.powers.iter().zip(alphas) {
        let inv = 1.0 / a;
        let v = if p < 0.0 {
            f64::INFINITY
        } else if p > 0.0 {
            (p + inv - level).abs() / level
        } else {
            ((level - inv) / level).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

pub fn waterfill_kkt(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = stream_rng(seed, Stream::Users);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let m = rng.random_range(1..=16);
        let alphas: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, 1e-3, 1e3)).collect();
        let p = log_uniform(&mut rng, 1e-2, 1e2);
        worst = worst.max(waterfill_violation(&alphas, p));
    }
    CheckOutcome::new(
        "water-filling KKT and budget",
        worst <= 1e-9,
        format!("{instances} instances, worst violation {worst:.2e}"),
    )
}

pub fn waterfill_examples() -> CheckOutcome {
    let two = waterfill(&[1.0, 4.0], 1.0, DEFAULT_WATERFILL_TOL);
    let excl = waterfill(&[0.1, 10.0], 0.5, DEFAULT_WATERFILL_TOL);
    let ok = match (&two, &excl) {
        (Ok(a), Ok(b)) => {
            (a.powers[0] - 0.625).abs() < 1e-12
                && (a.powers[1] - 1.375).abs() < 1e-12
                && b.powers[0] == 0.0
                && (b.powers[1] - 1.0).abs() < 1e-12
        }
        _ => false,
    };
    CheckOutcome::new(
        "water-filling worked examples",
        ok,
        format!("{:?} and {:?}", two.map(|r| r.powers), excl.map(|r| r.powers)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseStats {
    pub instances: usize,
    pub optimal: usize,
    /// Instances solved by the zero start alone.
    pub optimal_zero_start: usize,
    pub above_oracle: usize,
    pub below_start: usize,
    pub trace_decreases: usize,
}

/// Block-coordinate ascent against exhaustive search on random one-bit
/// instances with `1..=max_elements` elements and unit-variance channels.
pub fn phase_statistics(instances: usize, max_elements: usize, seed: u64) -> PhaseStats {
    let alphabet = PhaseAlphabet::new(1).expect("one-bit alphabet");
    let mut rng = stream_rng(seed, Stream::Users);
    let mut s = PhaseStats {
        instances,
        ..PhaseStats::default()
    };
    for _ in 0..instances {
        let q = rng.random_range(1..=max_elements);
        let h = complex_gaussian(&mut rng, 1.0);
        let g: Vec<Complex64> = (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let f: Vec<Complex64> = (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let terms = quadratic_form_terms(h, &g, &f);
        let (it, traces) = optimize_phases_traced(&terms, &alphabet, OptimizerOptions::default());
        let zero_only = optimize_phases(
            &terms,
            &alphabet,
            OptimizerOptions {
                start: PhaseStart::Zero,
                ..OptimizerOptions::default()
            },
        );
        let (_, best) = exhaustive_oracle(&terms, &alphabet).expect("small instance");
        let start = objective(&terms, &vec![0; q], &alphabet);
        let tol = 1e-9 * best.max(f64::MIN_POSITIVE);
        if (best - it.objective).abs() <= tol {
            s.optimal += 1;
        }
        if (best - zero_only.objective).abs() <= tol {
            s.optimal_zero_start += 1;
        }
        if it.objective > best + tol {
            s.above_oracle += 1;
        }
        if it.objective < start - tol {
            s.below_start += 1;
        }
        if traces
            .iter()
            .any(|t| t.windows(2).any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)))
        {
            s.trace_decreases += 1;
        }
    }
    s
}

pub fn phase_optimality(instances: usize, seed: u64) -> CheckOutcome {
    let s = phase_statistics(instances, 8, seed);
    let share = s.optimal as f64 / s.instances as f64;
    CheckOutcome::new(
        "phase ascent vs exhaustive search",
        share >= 0.95 && s.above_oracle == 0 && s.below_start == 0 && s.trace_decreases == 0,
        format!(
            "optimal in {}/{} ({:.1}%; zero start alone {:.1}%), above oracle {}, below start {}, nonmonotone traces {}",
            s.optimal,
            s.instances,
            100.0 * share,
            100.0 * s.optimal_zero_start as f64 / s.instances as f64,
            s.above_oracle,
            s.below_start,
            s.trace_decreases
        ),
    )
}

/// Water-filled time-averaged capacity of a schedule given as per-slot
/// reflection vectors, serving the strongest user of each slot.
fn schedule_capacity(paths: &CascadedPaths, slots: &[Vec<u16>], p_tx: f64) -> f64 {
    let alphas: Vec<f64> = slots
        .iter()
        .map(|gamma| paths.gains_sq(gamma).into_iter().fold(0.0, f64::max))
        .collect();
    let Ok(r) = waterfill(&alphas, p_tx, DEFAULT_WATERFILL_TOL) else {
        return f64::NAN;
    };
    r.powers
        .iter()
        .zip(&alphas)
        .map(|(p, a)| (1.0 + p * a).log2())
        .sum::<f64>()
        / slots.len() as f64
}

/// Over all time-varying schedules with `Q = 2`, one-bit phases and two
/// slots, the best constant schedule reaches the overall maximum.
pub fn constant_schedule_optimality(draws: usize, seed: u64) -> CheckOutcome {
    let alphabet = PhaseAlphabet::new(1).expect("one-bit alphabet");
    let (q, m) = (2usize, 2usize);
    let configs: Vec<Vec<u16>> = (0..4u16).map(|i| vec![i & 1, (i >> 1) & 1]).collect();
    let mut rng = stream_rng(seed, Stream::Users);
    let mut failures = 0;
    let mut checked = 0;
    for _ in 0..draws {
        for users in 1..=2 {
            for p_tx in [1.0, 10.0, 1000.0] {
                let h: Vec<Complex64> = (0..users).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                let g: Vec<Complex64> = (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                let f: Vec<Vec<Complex64>> = (0..users)
                    .map(|_| (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect())
                    .collect();
                let paths = CascadedPaths::new(&h, &g, &f, &alphabet);
                let mut best_any = f64::NEG_INFINITY;
                let mut best_const = f64::NEG_INFINITY;
                for a in &configs {
                    for b in &configs {
                        let cap = schedule_capacity(&paths, &[a.clone(), b.clone()], p_tx);
                        best_any = best_any.max(cap);
                        if a == b {
                            best_const = best_const.max(cap);
                        }
                    }
                }
                debug_assert_eq!(m, 2);
                checked += 1;
                if best_const.is_nan() || best_const < best_any - 1e-12 * best_any.abs().max(1.0) {
                    failures += 1;
                }
            }
        }
    }
    CheckOutcome::new(
        "constant schedule optimal over time-varying ones",
        failures == 0,
        format!("{checked} cases (K in 1..=2, three powers), {failures} failures"),
    )
}

/// KS test of `|c_k|^2` with a pure line-of-sight `g` and a fixed reflection
/// vector against the exponential law with mean `sigma_h^2 + sigma_f^2 sigma_g^2 Q`.
pub fn exponential_law(elements: usize, users: usize, samples: usize, seed: u64) -> CheckOutcome {
    let name = format!("exponential law of |c|^2 at Q={elements}, K={users}");
    let mut cfg = SystemConfig {
        users,
        pure_los_g: true,
        ..SystemConfig::default()
    };
    cfg.set_elements(elements);
    let (sigma_g_sq, sigma_h_sq, sigma_f_sq) = match center_variances(&cfg) {
        Ok(v) => v,
        Err(e) => return CheckOutcome::new(name, false, e.to_string()),
    };
    let theta = HomogeneousModel::theta_from_variances(sigma_h_sq, sigma_f_sq, sigma_g_sq, elements);
    let lambda = cfg.wavelength();
    let params = ChannelParams::homogeneous(users, sigma_g_sq, sigma_h_sq, sigma_f_sq, cfg.ricean_factor, true);
    let Ok(alphabet) = cfg.alphabet() else {
        return CheckOutcome::new(name, false, "invalid alphabet".into());
    };

    // Each (Q, K) pair gets its own substream.
    let seed = run_seed(seed, ((elements as u64) << 32) | users as u64);
    let mut sched_rng = stream_rng(seed, Stream::Schedule);
    let gamma = random_schedule(elements, 1, &alphabet, &mut sched_rng).slot(0).to_vec();
    let mut tx_rng = stream_rng(seed, Stream::TxRis);
    let mut user_rng = stream_rng(seed, Stream::Users);
    let mut draws = Vec::with_capacity(samples);
    while draws.len() < samples {
        let sig = SpatialSignatureParams::with_random_angles(cfg.qx, cfg.qy, cfg.element_spacing(), &mut tx_rng);
        let g = sample_tx_ris_channel(&params, &spatial_signature(&sig, lambda), &mut tx_rng);
        let (h, f) = sample_user_channels(&params, elements, &mut user_rng);
        let paths = CascadedPaths::new(&h, &g, &f, &alphabet);
        draws.extend(paths.gains_sq(&gamma));
    }
    draws.truncate(samples);
    let d = ks_statistic(&draws, |x| if x <= 0.0 { 0.0 } else { -(-x / theta).exp_m1() });
    let crit = ks_critical_value(samples, 0.05);
    CheckOutcome::new(
        name,
        d < crit,
        format!("D = {d:.5}, 5% critical value {crit:.5}, {samples} samples"),
    )
}

/// Smallest `r` with `P(X > r) < tail` for `X ~ Binomial(n, p)`.
fn binomial_upper(n: usize, p: f64, tail: f64) -> usize {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    let mut r = 0;
    while 1.0 - cdf >= tail && r < n {
        pmf *= (n - r) as f64 / (r + 1) as f64 * p / (1.0 - p);
        r += 1;
        cdf += pmf;
    }
    r
}

/// Repeats [`exponential_law`] over independent seeds. Under the exponential
/// law the rejection count is Binomial(replicates, 0.05); the check fails if
/// it lands in the upper 1% tail.
pub fn exponential_law_calibration(
    elements: usize,
    users: usize,
    replicates: usize,
    samples: usize,
    seed: u64,
) -> CheckOutcome {
    let rejected = (0..replicates)
        .filter(|&r| !exponential_law(elements, users, samples, run_seed(seed, r as u64 + 1)).passed)
        .count();
    let limit = binomial_upper(replicates, 0.05, 0.01);
    CheckOutcome::new(
        format!("KS rejection rate at Q={elements}, K={users}"),
        rejected <= limit,
        format!("{rejected}/{replicates} rejected at 5%, limit {limit}"),
    )
}

/// Monte Carlo mean of `log2(1 + P max_k E_k)` for each power, from the same
/// explicit draws of `users` unit exponentials.
pub fn monte_carlo_capacity(users: usize, powers: &[f64], draws: usize, seed: u64) -> (Vec<f64>, f64) {
    let mut rng = stream_rng(seed, Stream::Users);
    let mut acc = vec![0.0; powers.len()];
    let mut snr = 0.0;
    for _ in 0..draws {
        let best = (0..users).map(|_| rng.sample::<f64, _>(Exp1)).fold(0.0, f64::max);
        snr += best;
        for (a, p) in acc.iter_mut().zip(powers) {
            *a += (p * best).ln_1p();
        }
    }
    let n = draws as f64;
    (
        acc.into_iter().map(|a| a / n / std::f64::consts::LN_2).collect(),
        snr / n,
    )
}

pub fn asymptotic_agreement(draws: usize, seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let powers = [1.0, 100.0];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    let mut ok = true;
    for (i, users) in [4usize, 16, 64].into_iter().enumerate() {
        let (mc, _) = monte_carlo_capacity(users, &powers, draws, seed.wrapping_add(i as u64));
        for (p, m) in powers.iter().zip(mc) {
            match HomogeneousModel::new(1.0, users, *p, 1.0).and_then(|model| avg_capacity_exact(&model)) {
                Ok(exact) => {
                    let rel = (m - exact).abs() / exact;
                    worst = worst.max(rel);
                    detail.push(format!("K={users} P={p}: {exact:.5} vs {m:.5}"));
                }
                Err(e) => {
                    ok = false;
                    detail.push(e.to_string());
                }
            }
        }
    }
    out.push(CheckOutcome::new(
        "exact capacity vs Monte Carlo",
        ok && worst <= 3e-3,
        format!("worst relative gap {:.3}% ({})", 100.0 * worst, detail.join("; ")),
    ));

    let dists: Vec<f64> = [8usize, 32, 128, 512]
        .iter()
        .map(|&k| {
            HomogeneousModel::new(1.0, k, 1.0, 1.0)
                .map(|m| gumbel_sup_distance(&m, 10_000))
                .unwrap_or(f64::NAN)
        })
        .collect();
    out.push(CheckOutcome::new(
        "Gumbel cdf distance shrinks with K",
        dists.windows(2).all(|w| w[1] < w[0]),
        format!("{dists:.4?}"),
    ));

    let (_, mc_snr) = monte_carlo_capacity(10, &[], draws, seed.wrapping_add(99));
    let formula = HomogeneousModel::new(1.0, 10, 1.0, 1.0)
        .map(|m| avg_snr(&m))
        .unwrap_or(f64::NAN);
    out.push(CheckOutcome::new(
        "average SNR formula vs Monte Carlo at K=10",
        (formula - mc_snr).abs() < 0.06,
        format!("formula {formula:.4}, Monte Carlo {mc_snr:.4}"),
    ));
    out
}

/// Every suite at its full size.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let mut out = vec![
        waterfill_examples(),
        waterfill_kkt(1000, seed),
        phase_optimality(500, seed),
        constant_schedule_optimality(100, seed),
        exponential_law(16, 8, 10_000, seed),
        exponential_law(64, 16, 10_000, seed),
        exponential_law_calibration(16, 8, 100, 10_000, seed),
        exponential_law_calibration(64, 16, 100, 10_000, seed),
    ];
    out.extend(asymptotic_agreement(1_000_000, seed));
    out
}
