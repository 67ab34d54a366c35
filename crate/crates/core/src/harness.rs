//! Monte Carlo runs over independent coherence blocks, sweeps over the user
//! or element count, and CSV output.

use std::io::Write;

use rayon::prelude::*;

use crate::asymptotics::{avg_capacity_exact, avg_capacity_gumbel, avg_snr, HomogeneousModel};
use crate::channel::{
    pathloss_variance, sample_tx_ris_channel, sample_user_channels, spatial_signature, ChannelParams,
    ChannelRealization, Geometry, RisUserGain, SpatialSignatureParams,
};
use crate::config::{Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::reflection::{random_schedule, ReflectionSchedule};
use crate::rng::{run_seed, stream_rng, Stream};
use crate::schedulers::{
    optimized_user_gains, pfs_full_from_gains, run_no_ris, run_pfs_rand, run_rtv_rand, stv_opt_from_gains, SchemeResult,
};
use crate::stats::mean_std;

pub const RESULTS_HEADER: [&str; 10] = [
    "run",
    "scheme",
    "K",
    "Q",
    "M",
    "seed",
    "net_sum_capacity_bps_hz",
    "fairness",
    "user_index",
    "user_rate_bps_hz",
];

pub const SWEEP_HEADER: [&str; 8] = [
    "K",
    "Q",
    "scheme",
    "runs",
    "mean_capacity_bps_hz",
    "std_capacity_bps_hz",
    "mean_fairness",
    "std_fairness",
];

pub const ANALYSIS_HEADER: [&str; 6] = [
    "K",
    "Q",
    "theta_mean",
    "avg_snr",
    "avg_capacity_exact_bps_hz",
    "avg_capacity_gumbel_bps_hz",
];

/// Everything random about one run.
#[derive(Debug, Clone)]
pub struct BlockDraw {
    pub seed: u64,
    pub geometry: Geometry,
    pub params: ChannelParams,
    pub channel: ChannelRealization,
    pub schedule: ReflectionSchedule,
}

pub fn draw_block(cfg: &SystemConfig, run_index: usize) -> Result<BlockDraw> {
    let seed = run_seed(cfg.base_seed, run_index as u64);
    let wavelength = cfg.wavelength();
    let geometry = Geometry::sample(
        cfg.tx_position,
        cfg.ris_position,
        cfg.cluster.center,
        cfg.cluster.radius(),
        cfg.users,
        &mut stream_rng(seed, Stream::Geometry),
    );
    let params = ChannelParams::from_geometry(
        &geometry,
        wavelength,
        cfg.ricean_factor,
        cfg.pure_los_g,
        cfg.pathloss_exponent,
        cfg.ris_gain(),
        cfg.ue_gain(),
        cfg.ris_user_gain,
    )?;
    let mut tx_ris = stream_rng(seed, Stream::TxRis);
    let sig = SpatialSignatureParams::with_random_angles(cfg.qx, cfg.qy, cfg.element_spacing(), &mut tx_ris);
    let g = sample_tx_ris_channel(&params, &spatial_signature(&sig, wavelength), &mut tx_ris);
    let (h, f) = sample_user_channels(&params, cfg.elements(), &mut stream_rng(seed, Stream::Users));
    let channel = ChannelRealization::new(h, g, f)?;
    let schedule = random_schedule(
        cfg.elements(),
        cfg.simulated_slots,
        &cfg.alphabet()?,
        &mut stream_rng(seed, Stream::Schedule),
    );
    Ok(BlockDraw {
        seed,
        geometry,
        params,
        channel,
        schedule,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: usize,
    pub scheme: Scheme,
    pub users: usize,
    pub elements: usize,
    pub slots: usize,
    pub seed: u64,
    pub net_sum_capacity: f64,
    pub fairness: f64,
    pub per_user_rates: Vec<f64>,
    pub winner_histogram: Vec<usize>,
}

/// Runs every configured scheme on one block. All schemes see the same
/// channels, and both randomized schemes share one reflection schedule.
pub fn run_block(cfg: &SystemConfig, run_index: usize) -> Result<Vec<RunRecord>> {
    let ctx = cfg.scheme_context()?;
    let draw = draw_block(cfg, run_index)?;
    let chan = &draw.channel;
    let needs_opt = cfg
        .schemes
        .iter()
        .any(|s| matches!(s, Scheme::StvOpt | Scheme::PfsFull));
    let opt_gains = if needs_opt {
        optimized_user_gains(chan, &ctx)
    } else {
        Vec::new()
    };

    cfg.schemes
        .iter()
        .map(|&scheme| {
            let result: SchemeResult = match scheme {
                Scheme::StvOpt => stv_opt_from_gains(&opt_gains, &ctx),
                Scheme::RtvRand => run_rtv_rand(chan, &draw.schedule, &ctx)?,
                Scheme::PfsFull => pfs_full_from_gains(&opt_gains, &ctx)?,
                Scheme::PfsRand => run_pfs_rand(chan, &draw.schedule, &ctx)?,
                Scheme::NoRis => run_no_ris(chan, &ctx),
            };
            Ok(RunRecord {
                run_index,
                scheme,
                users: cfg.users,
                elements: cfg.elements(),
                slots: cfg.simulated_slots,
                seed: draw.seed,
                net_sum_capacity: result.net_sum_capacity,
                fairness: result.fairness,
                winner_histogram: result.winner_histogram(),
                per_user_rates: result.per_user_rate,
            })
        })
        .collect()
}

/// All runs, ordered by run index and then by the configured scheme order,
/// whatever the thread count.
pub fn run_monte_carlo(cfg: &SystemConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let per_run: Vec<Vec<RunRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_block(cfg, r))
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

/// One row per (run, scheme, user).
pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        for (k, rate) in r.per_user_rates.iter().enumerate() {
            w.write_record([
                r.run_index.to_string(),
                r.scheme.name().to_string(),
                r.users.to_string(),
                r.elements.to_string(),
                r.slots.to_string(),
                r.seed.to_string(),
                r.net_sum_capacity.to_string(),
                r.fairness.to_string(),
                k.to_string(),
                rate.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Users,
    Atoms,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "users" => Ok(SweepAxis::Users),
            "atoms" => Ok(SweepAxis::Atoms),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?}, expected users or atoms"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub users: usize,
    pub elements: usize,
    pub scheme: Scheme,
    pub runs: usize,
    pub mean_capacity: f64,
    pub std_capacity: f64,
    pub mean_fairness: f64,
    pub std_fairness: f64,
}

pub fn summarize(records: &[RunRecord], schemes: &[Scheme]) -> Vec<SweepRow> {
    schemes
        .iter()
        .filter_map(|&scheme| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.scheme == scheme).collect();
            let first = rows.first()?;
            let caps: Vec<f64> = rows.iter().map(|r| r.net_sum_capacity).collect();
            let fair: Vec<f64> = rows.iter().map(|r| r.fairness).collect();
            let (mean_capacity, std_capacity) = mean_std(&caps);
            let (mean_fairness, std_fairness) = mean_std(&fair);
            Some(SweepRow {
                users: first.users,
                elements: first.elements,
                scheme,
                runs: rows.len(),
                mean_capacity,
                std_capacity,
                mean_fairness,
                std_fairness,
            })
        })
        .collect()
}

/// Repeats [`run_monte_carlo`] at each axis value. Values must be strictly
/// increasing.
pub fn sweep(cfg: &SystemConfig, axis: SweepAxis, values: &[usize]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::EmptySweep);
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "sweep values must be strictly increasing, got {values:?}"
        )));
    }
    let mut rows = Vec::new();
    for &v in values {
        let mut point = cfg.clone();
        match axis {
            SweepAxis::Users => point.users = v,
            SweepAxis::Atoms => point.set_elements(v),
        }
        rows.extend(summarize(&run_monte_carlo(&point)?, &point.schemes));
    }
    Ok(rows)
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.users.to_string(),
            r.elements.to_string(),
            r.scheme.name().to_string(),
            r.runs.to_string(),
            r.mean_capacity.to_string(),
            r.std_capacity.to_string(),
            r.mean_fairness.to_string(),
            r.std_fairness.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisRow {
    pub users: usize,
    pub elements: usize,
    pub theta_mean: f64,
    pub avg_snr: f64,
    pub avg_capacity_exact: f64,
    pub avg_capacity_gumbel: f64,
}

/// `(sigma_g^2, sigma_h^2, sigma_f^2)` for a user at the cluster center.
pub fn center_variances(cfg: &SystemConfig) -> Result<(f64, f64, f64)> {
    let lambda = cfg.wavelength();
    let eta = cfg.pathloss_exponent;
    let center = cfg.cluster.center;
    let f_gain = match cfg.ris_user_gain {
        RisUserGain::Ue => cfg.ue_gain(),
        RisUserGain::Ris => cfg.ris_gain(),
    };
    Ok((
        pathloss_variance(cfg.ris_gain(), cfg.tx_position.distance(&cfg.ris_position), eta, lambda)?,
        pathloss_variance(cfg.ue_gain(), center.distance(&cfg.tx_position), eta, lambda)?,
        pathloss_variance(f_gain, center.distance(&cfg.ris_position), eta, lambda)?,
    ))
}

/// Homogeneous model of `cfg` with every user at the cluster center.
pub fn homogeneous_model(cfg: &SystemConfig) -> Result<HomogeneousModel> {
    let (sigma_g_sq, sigma_h_sq, sigma_f_sq) = center_variances(cfg)?;
    let theta = HomogeneousModel::theta_from_variances(sigma_h_sq, sigma_f_sq, sigma_g_sq, cfg.elements());
    HomogeneousModel::new(theta, cfg.users, cfg.p_tx(), cfg.overhead_params().overhead_partial()?)
}

/// Asymptotic predictions over the grid `users x elements`. Empty lists fall
/// back to the configured value.
pub fn analyze(cfg: &SystemConfig, users: &[usize], elements: &[usize]) -> Result<Vec<AnalysisRow>> {
    let users = if users.is_empty() {
        vec![cfg.users]
    } else {
        users.to_vec()
    };
    let elements = if elements.is_empty() {
        vec![cfg.elements()]
    } else {
        elements.to_vec()
    };
    let mut rows = Vec::new();
    for &q in &elements {
        for &k in &users {
            let mut point = cfg.clone();
            point.users = k;
            point.set_elements(q);
            point.validate()?;
            let m = homogeneous_model(&point)?;
            rows.push(AnalysisRow {
                users: k,
                elements: q,
                theta_mean: m.theta_mean,
                avg_snr: avg_snr(&m),
                avg_capacity_exact: avg_capacity_exact(&m)?,
                avg_capacity_gumbel: avg_capacity_gumbel(&m)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_analysis<W: Write>(rows: &[AnalysisRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANALYSIS_HEADER)?;
    for r in rows {
        w.write_record([
            r.users.to_string(),
            r.elements.to_string(),
            r.theta_mean.to_string(),
            r.avg_snr.to_string(),
            r.avg_capacity_exact.to_string(),
            r.avg_capacity_gumbel.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig {
            users: 3,
            qx: 4,
            qy: 2,
            simulated_slots: 10,
            runs: 4,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn single_no_ris_record() {
        let cfg = SystemConfig {
            users: 1,
            runs: 1,
            schemes: vec![Scheme::NoRis],
            ..small()
        };
        let recs = run_monte_carlo(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        let draw = draw_block(&cfg, 0).unwrap();
        let ctx = cfg.scheme_context().unwrap();
        let expected = ctx.xi_no_ris * (1.0 + cfg.p_tx() * draw.channel.h[0].norm_sqr()).log2();
        assert!((recs[0].net_sum_capacity - expected).abs() < 1e-12);
    }

    #[test]
    fn records_are_ordered_and_complete() {
        let cfg = small();
        let recs = run_monte_carlo(&cfg).unwrap();
        assert_eq!(recs.len(), cfg.runs * cfg.schemes.len());
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.run_index, i / cfg.schemes.len());
            assert_eq!(r.scheme, cfg.schemes[i % cfg.schemes.len()]);
            assert_eq!(r.winner_histogram.iter().sum::<usize>(), cfg.simulated_slots);
            let sum: f64 = r.per_user_rates.iter().sum();
            assert!((sum - r.net_sum_capacity).abs() <= 1e-12 * sum.max(1.0));
        }
    }

    #[test]
    fn csv_is_deterministic_with_exact_header() {
        let cfg = small();
        let write = || {
            let mut buf = Vec::new();
            write_records(&run_monte_carlo(&cfg).unwrap(), &mut buf).unwrap();
            buf
        };
        let a = write();
        assert_eq!(a, write());
        let text = String::from_utf8(a).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "run,scheme,K,Q,M,seed,net_sum_capacity_bps_hz,fairness,user_index,user_rate_bps_hz"
        );
        assert_eq!(text.lines().count(), 1 + cfg.runs * cfg.schemes.len() * cfg.users);
    }

    #[test]
    fn users_share_a_common_prefix_across_k() {
        let a = draw_block(&small(), 2).unwrap();
        let b = draw_block(&SystemConfig { users: 5, ..small() }, 2).unwrap();
        assert_eq!(a.channel.h[..], b.channel.h[..3]);
        assert_eq!(a.channel.g, b.channel.g);
        assert_eq!(a.geometry.user_positions[..], b.geometry.user_positions[..3]);
    }

    #[test]
    fn sweep_validates_values() {
        assert!(matches!(sweep(&small(), SweepAxis::Users, &[]), Err(Error::EmptySweep)));
        assert!(sweep(&small(), SweepAxis::Users, &[4, 2]).is_err());
        let rows = sweep(&small(), SweepAxis::Atoms, &[4, 9]).unwrap();
        assert_eq!(rows.len(), 2 * 5);
        assert_eq!(rows[0].elements, 4);
        assert_eq!(rows[5].elements, 9);
        assert!(rows.iter().all(|r| r.runs == 4));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("users".parse::<SweepAxis>().unwrap(), SweepAxis::Users);
        assert_eq!("atoms".parse::<SweepAxis>().unwrap(), SweepAxis::Atoms);
        assert!("K".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn analysis_rows() {
        let rows = analyze(&small(), &[1, 8], &[16, 64]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[1].avg_snr > rows[0].avg_snr);
        assert!(rows[2].theta_mean > rows[0].theta_mean);
        assert!(rows
            .iter()
            .all(|r| r.avg_capacity_exact > 0.0 && r.avg_capacity_gumbel > 0.0));
    }
}
