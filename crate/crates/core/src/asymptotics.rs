//! Extreme-value predictions for the randomized scheme with homogeneous users.
//!
//! With a pure line-of-sight transmitter-to-RIS link and a reflection vector
//! fixed in the slot, every `|c_k|^2` is exponential with mean
//! `theta = sigma_h^2 + sigma_f^2 sigma_g^2 Q`. The best of `K` users then
//! follows the max-of-exponentials law, whose Gumbel limit has location
//! `theta ln K` and scale `theta`.

use crate::error::{Error, Result};
use crate::quadrature::integrate;

pub const EULER_GAMMA: f64 = 0.577_215_664_9;
pub const CAPACITY_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousModel {
    pub theta_mean: f64,
    pub users: usize,
    pub p_tx: f64,
    pub xi_par: f64,
}

impl HomogeneousModel {
    pub fn new(theta_mean: f64, users: usize, p_tx: f64, xi_par: f64) -> Result<Self> {
        if !(theta_mean.is_finite() && theta_mean > 0.0) {
            return Err(Error::Config(format!(
                "exponential mean must be positive, got {theta_mean}"
            )));
        }
        if users == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if !(p_tx.is_finite() && p_tx >= 0.0) {
            return Err(Error::Config(format!(
                "transmit SNR must be finite and nonnegative, got {p_tx}"
            )));
        }
        if !(xi_par > 0.0 && xi_par <= 1.0) {
            return Err(Error::Config(format!(
                "overhead factor must lie in (0, 1], got {xi_par}"
            )));
        }
        Ok(Self {
            theta_mean,
            users,
            p_tx,
            xi_par,
        })
    }

    /// `sigma_h^2 + sigma_f^2 sigma_g^2 Q`.
    pub fn theta_from_variances(sigma_h_sq: f64, sigma_f_sq: f64, sigma_g_sq: f64, elements: usize) -> f64 {
        sigma_h_sq + sigma_f_sq * sigma_g_sq * elements as f64
    }

    pub fn gumbel_constants(&self) -> GumbelConstants {
        GumbelConstants {
            location: self.theta_mean * (self.users as f64).ln(),
            scale: self.theta_mean,
        }
    }
}

/// Location `b_K = theta ln K` and scale `a_K = theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelConstants {
    pub location: f64,
    pub scale: f64,
}

/// Density of the maximum of `K` i.i.d. exponentials with mean `theta`.
pub fn max_exp_pdf(alpha: f64, model: &HomogeneousModel) -> f64 {
    if alpha < 0.0 {
        return 0.0;
    }
    let t = model.theta_mean;
    let k = model.users as f64;
    let e = (-alpha / t).exp();
    // (1 - e)^(K-1) through log1p keeps precision for large K.
    let body = if model.users == 1 {
        1.0
    } else {
        ((k - 1.0) * (-e).ln_1p()).exp()
    };
    k / t * e * body
}

pub fn max_exp_cdf(alpha: f64, model: &HomogeneousModel) -> f64 {
    if alpha < 0.0 {
        return 0.0;
    }
    let e = (-alpha / model.theta_mean).exp();
    (model.users as f64 * (-e).ln_1p()).exp()
}

pub fn gumbel_cdf(alpha: f64, consts: &GumbelConstants) -> f64 {
    (-(-(alpha - consts.location) / consts.scale).exp()).exp()
}

pub fn gumbel_pdf(alpha: f64, consts: &GumbelConstants) -> f64 {
    let z = (-(alpha - consts.location) / consts.scale).exp();
    z * (-z).exp() / consts.scale
}

/// `xi E[log2(1 + P alpha)]` under the exact law, integrated over
/// `[0, theta (ln K + 40)]`.
pub fn avg_capacity_exact(model: &HomogeneousModel) -> Result<f64> {
    if model.p_tx == 0.0 {
        return Ok(0.0);
    }
    let upper = model.theta_mean * ((model.users as f64).ln() + 40.0);
    let r = integrate(
        |a| (model.p_tx * a).ln_1p() / std::f64::consts::LN_2 * max_exp_pdf(a, model),
        0.0,
        upper,
        CAPACITY_ABS_TOL,
        0.0,
    )?;
    Ok(model.xi_par * r.value)
}

/// Same expectation against the Gumbel density, over
/// `[max(0, b - 20 a), b + 40 a]`.
pub fn avg_capacity_gumbel(model: &HomogeneousModel) -> Result<f64> {
    if model.p_tx == 0.0 {
        return Ok(0.0);
    }
    let g = model.gumbel_constants();
    let lower = (g.location - 20.0 * g.scale).max(0.0);
    let upper = g.location + 40.0 * g.scale;
    let r = integrate(
        |a| (model.p_tx * a).ln_1p() / std::f64::consts::LN_2 * gumbel_pdf(a, &g),
        lower,
        upper,
        CAPACITY_ABS_TOL,
        0.0,
    )?;
    Ok(model.xi_par * r.value)
}

/// `P theta (ln K + C)`.
pub fn avg_snr(model: &HomogeneousModel) -> f64 {
    model.p_tx * model.theta_mean * ((model.users as f64).ln() + EULER_GAMMA)
}

/// `sup |F_exact - F_gumbel|` over `points` equally spaced abscissae in
/// `[0, theta (ln K + 20)]`.
pub fn gumbel_sup_distance(model: &HomogeneousModel, points: usize) -> f64 {
    let g = model.gumbel_constants();
    let upper = model.theta_mean * ((model.users as f64).ln() + 20.0);
    (0..points)
        .map(|i| {
            let a = upper * i as f64 / (points - 1).max(1) as f64;
            (max_exp_cdf(a, model) - gumbel_cdf(a, &g)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn model(theta: f64, users: usize, p_tx: f64) -> HomogeneousModel {
        HomogeneousModel::new(theta, users, p_tx, 1.0).unwrap()
    }

    /// `E1(x) = -gamma - ln x - sum_n (-x)^n / (n n!)`, summed directly.
    fn e1_series(x: f64) -> f64 {
        let gamma = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..60 {
            term *= -x / n as f64;
            sum += term / n as f64;
        }
        -gamma - x.ln() - sum
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(HomogeneousModel::new(0.0, 4, 1.0, 1.0).is_err());
        assert!(HomogeneousModel::new(1.0, 0, 1.0, 1.0).is_err());
        assert!(HomogeneousModel::new(1.0, 4, -1.0, 1.0).is_err());
        assert!(HomogeneousModel::new(1.0, 4, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_user_is_exponential() {
        let m = model(2.0, 1, 1.0);
        for a in [0.0, 0.5, 3.0, 10.0] {
            assert!((max_exp_pdf(a, &m) - 0.5 * (-a / 2.0f64).exp()).abs() < 1e-15);
        }
        assert_eq!(max_exp_pdf(-1.0, &m), 0.0);
        assert_eq!(max_exp_cdf(-1.0, &m), 0.0);
    }

    #[test]
    fn cdf_at_location() {
        let m = model(1.0, 100, 1.0);
        assert!((max_exp_cdf(100f64.ln(), &m) - 0.99f64.powi(100)).abs() < 1e-12);
        assert!((max_exp_cdf(100f64.ln(), &m) - 0.366_0).abs() < 1e-4);
    }

    #[test]
    fn pdf_normalizes() {
        for k in [1, 4, 32] {
            let m = model(1.5, k, 1.0);
            let r = integrate(|a| max_exp_pdf(a, &m), 0.0, 50.0 * 1.5, 1e-12, 0.0).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn pdf_is_cdf_derivative() {
        let m = model(1.0, 8, 1.0);
        let h = 1e-5;
        for a in [0.3, 1.0, 2.0, 4.0, 9.0] {
            let fd = (max_exp_cdf(a + h, &m) - max_exp_cdf(a - h, &m)) / (2.0 * h);
            assert!((fd - max_exp_pdf(a, &m)).abs() < 1e-6);
        }
    }

    #[test]
    fn cdf_monotone() {
        let m = model(1.0, 16, 1.0);
        let mut prev = 0.0;
        for i in 0..1000 {
            let c = max_exp_cdf(i as f64 * 0.02, &m);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn exponential_is_von_mises() {
        let theta = 2.0;
        let m = model(theta, 1, 1.0);
        let h = 1e-4;
        for a in [1.0, 5.0, 20.0] {
            let x = a * theta;
            let f = max_exp_pdf(x, &m);
            let df = (max_exp_pdf(x + h, &m) - max_exp_pdf(x - h, &m)) / (2.0 * h);
            let v = (1.0 - max_exp_cdf(x, &m)) / (f * f) * df;
            assert!((v + 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn gumbel_cdf_values() {
        let g = GumbelConstants {
            location: 3.0,
            scale: 2.0,
        };
        assert!((gumbel_cdf(3.0, &g) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(gumbel_cdf(-1e3, &g) < 1e-300);
        assert_eq!(gumbel_cdf(1e3, &g), 1.0);
    }

    #[test]
    fn gumbel_distance_shrinks_with_users() {
        let d: Vec<f64> = [8, 32, 128, 512]
            .iter()
            .map(|&k| gumbel_sup_distance(&model(1.0, k, 1.0), 10_000))
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }

    #[test]
    fn capacity_zero_power() {
        assert_eq!(avg_capacity_exact(&model(1.0, 4, 0.0)).unwrap(), 0.0);
        assert_eq!(avg_capacity_gumbel(&model(1.0, 4, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn single_user_capacity_matches_exponential_integral() {
        let exact = std::f64::consts::E * e1_series(1.0) / std::f64::consts::LN_2;
        assert!((e1_series(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        let c = avg_capacity_exact(&model(1.0, 1, 1.0)).unwrap();
        assert!((c - exact).abs() < 1e-8, "{c} vs {exact}");
    }

    #[test]
    fn gumbel_capacity_gap() {
        let gap = |k| {
            let m = model(1.0, k, 100.0);
            let e = avg_capacity_exact(&m).unwrap();
            ((avg_capacity_gumbel(&m).unwrap() - e) / e).abs()
        };
        assert!(gap(128) < 0.02);
        assert!(gap(512) < gap(8));
    }

    #[test]
    fn capacity_scales_with_overhead() {
        let a = avg_capacity_exact(&model(1.0, 8, 10.0)).unwrap();
        let b = avg_capacity_exact(&HomogeneousModel::new(1.0, 8, 10.0, 0.5).unwrap()).unwrap();
        assert!((b - 0.5 * a).abs() < 1e-12);
    }

    #[test]
    fn capacity_matches_monte_carlo() {
        let m = model(1.0, 16, 1.0);
        let mut rng = stream_rng(11, Stream::Users);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let best = (0..16).map(|_| -(1.0 - rng.random::<f64>()).ln()).fold(0.0, f64::max);
            acc += (1.0 + best).log2();
        }
        let mc = acc / n as f64;
        let exact = avg_capacity_exact(&m).unwrap();
        assert!((mc - exact).abs() / exact < 0.005, "{mc} vs {exact}");
    }

    #[test]
    fn snr_formula() {
        assert!((avg_snr(&model(1.0, 1, 1.0)) - EULER_GAMMA).abs() < 1e-15);
        assert!((avg_snr(&model(1.0, 10, 1.0)) - 2.879_8).abs() < 1e-4);
        assert!((avg_snr(&model(2.0, 10, 1.0)) - 2.0 * avg_snr(&model(1.0, 10, 1.0))).abs() < 1e-12);
        // One factor of e in K adds exactly P theta.
        let m = model(3.0, 7, 5.0);
        let shifted = avg_snr(&m) + m.p_tx * m.theta_mean;
        let direct = m.p_tx * m.theta_mean * ((7.0f64 * std::f64::consts::E).ln() + EULER_GAMMA);
        assert!((shifted - direct).abs() < 1e-12);
    }

    #[test]
    fn snr_formula_near_harmonic_mean() {
        // E[max of 10 unit exponentials] is the harmonic number H_10.
        let h10: f64 = (1..=10).map(|i| 1.0 / i as f64).sum();
        assert!((avg_snr(&model(1.0, 10, 1.0)) - h10).abs() < 0.06);
    }
}
