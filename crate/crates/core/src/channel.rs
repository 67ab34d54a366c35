//! Geometry, large-scale path loss and block-fading channel draws.
//!
//! One [`ChannelRealization`] holds the channels of a single coherence block:
//! the direct gains `h` (transmitter to each user), the transmitter-to-RIS
//! vector `g` and the RIS-to-user vectors `f_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::complex_gaussian;

/// Point in the plane, in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub tx_position: Point,
    pub ris_position: Point,
    pub user_positions: Vec<Point>,
    pub cluster_center: Point,
    pub cluster_radius: f64,
}

impl Geometry {
    /// Places `users` points uniformly over the cluster disk.
    ///
    /// Uses `radius = R * sqrt(U)`, `angle = 2 * pi * U'`, which is uniform
    /// in area. A zero radius puts every user on the cluster center.
    pub fn sample<R: Rng + ?Sized>(
        tx_position: Point,
        ris_position: Point,
        cluster_center: Point,
        cluster_radius: f64,
        users: usize,
        rng: &mut R,
    ) -> Self {
        let user_positions = (0..users)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let r = cluster_radius * u.sqrt();
                let phi = 2.0 * PI * v;
                Point::new(cluster_center.x + r * phi.cos(), cluster_center.y + r * phi.sin())
            })
            .collect();
        Self {
            tx_position,
            ris_position,
            user_positions,
            cluster_center,
            cluster_radius,
        }
    }

    /// Checks that every link used by the channel model has positive length.
    pub fn validate(&self) -> Result<()> {
        if self.tx_position.distance(&self.ris_position) <= 0.0 {
            return Err(Error::DegenerateGeometry("transmitter and RIS coincide".into()));
        }
        for (k, p) in self.user_positions.iter().enumerate() {
            if p.distance(&self.tx_position) <= 0.0 {
                return Err(Error::DegenerateGeometry(format!("user {k} sits on the transmitter")));
            }
            if p.distance(&self.ris_position) <= 0.0 {
                return Err(Error::DegenerateGeometry(format!("user {k} sits on the RIS")));
            }
        }
        Ok(())
    }
}

/// `G * d^-eta * lambda0^2 / (4 pi)^2`.
pub fn pathloss_variance(gain: f64, distance: f64, exponent: f64, wavelength: f64) -> Result<f64> {
    if !(gain.is_finite() && distance.is_finite() && exponent.is_finite() && wavelength.is_finite()) {
        return Err(Error::NonFinite("path-loss argument"));
    }
    if distance <= 0.0 {
        return Err(Error::DegenerateGeometry(format!("link distance {distance} m")));
    }
    if gain <= 0.0 {
        return Err(Error::Config(format!("antenna gain must be positive, got {gain}")));
    }
    Ok(gain * distance.powf(-exponent) * wavelength * wavelength / (16.0 * PI * PI))
}

/// Aperture gain `4 pi A / lambda0^2` of a `q`-element RIS with square cells of side `spacing`.
pub fn ris_aperture_gain(q: usize, spacing: f64, wavelength: f64) -> f64 {
    4.0 * PI * q as f64 * spacing * spacing / (wavelength * wavelength)
}

pub fn dbi_to_linear(dbi: f64) -> f64 {
    10f64.powf(dbi / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub wavelength: f64,
    pub ricean_factor: f64,
    /// Drop the diffuse part of `g` entirely (the infinite Ricean factor limit).
    pub pure_los: bool,
    pub pathloss_exponent: f64,
    pub ris_element_gain: f64,
    pub ue_gain: f64,
    pub sigma_g_sq: f64,
    pub sigma_h_sq: Vec<f64>,
    pub sigma_f_sq: Vec<f64>,
}

/// Which antenna gain the RIS-to-user path loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisUserGain {
    /// User-equipment gain (5 dBi by default).
    Ue,
    /// RIS aperture gain.
    #[default]
    Ris,
}

impl ChannelParams {
    /// Variances from link distances: `g` uses the RIS aperture gain, `h_k`
    /// uses the UE gain and `f_k` uses whichever `ris_user_gain` selects.
    #[allow(clippy::too_many_arguments)]
    pub fn from_geometry(
        geometry: &Geometry,
        wavelength: f64,
        ricean_factor: f64,
        pure_los: bool,
        pathloss_exponent: f64,
        ris_element_gain: f64,
        ue_gain: f64,
        ris_user_gain: RisUserGain,
    ) -> Result<Self> {
        geometry.validate()?;
        let f_gain = match ris_user_gain {
            RisUserGain::Ue => ue_gain,
            RisUserGain::Ris => ris_element_gain,
        };
        let sigma_g_sq = pathloss_variance(
            ris_element_gain,
            geometry.tx_position.distance(&geometry.ris_position),
            pathloss_exponent,
            wavelength,
        )?;
        let sigma_h_sq = geometry
            .user_positions
            .iter()
            .map(|p| {
                pathloss_variance(
                    ue_gain,
                    p.distance(&geometry.tx_position),
                    pathloss_exponent,
                    wavelength,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma_f_sq = geometry
            .user_positions
            .iter()
            .map(|p| {
                pathloss_variance(
                    f_gain,
                    p.distance(&geometry.ris_position),
                    pathloss_exponent,
                    wavelength,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let params = Self {
            wavelength,
            ricean_factor,
            pure_los,
            pathloss_exponent,
            ris_element_gain,
            ue_gain,
            sigma_g_sq,
            sigma_h_sq,
            sigma_f_sq,
        };
        params.validate()?;
        Ok(params)
    }

    /// Explicit variances, identical for every user.
    pub fn homogeneous(
        users: usize,
        sigma_g_sq: f64,
        sigma_h_sq: f64,
        sigma_f_sq: f64,
        ricean_factor: f64,
        pure_los: bool,
    ) -> Self {
        Self {
            wavelength: 1.0,
            ricean_factor,
            pure_los,
            pathloss_exponent: 0.0,
            ris_element_gain: 1.0,
            ue_gain: 1.0,
            sigma_g_sq,
            sigma_h_sq: vec![sigma_h_sq; users],
            sigma_f_sq: vec![sigma_f_sq; users],
        }
    }

    pub fn users(&self) -> usize {
        self.sigma_h_sq.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ricean_factor.is_nan() || self.ricean_factor < 0.0 {
            return Err(Error::Config(format!(
                "Ricean factor must be >= 0, got {}",
                self.ricean_factor
            )));
        }
        if self.sigma_h_sq.len() != self.sigma_f_sq.len() {
            return Err(Error::DimensionMismatch(
                "per-user variance lists differ in length".into(),
            ));
        }
        let all = std::iter::once(&self.sigma_g_sq)
            .chain(&self.sigma_h_sq)
            .chain(&self.sigma_f_sq);
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Config(format!(
                    "channel variance must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialSignatureParams {
    pub qx: usize,
    pub qy: usize,
    /// Inter-element spacing in meters.
    pub element_spacing: f64,
    /// Azimuth in `[0, 2 pi)`.
    pub azimuth: f64,
    /// Elevation in `[-pi/2, pi/2)`.
    pub elevation: f64,
}

impl SpatialSignatureParams {
    pub fn elements(&self) -> usize {
        self.qx * self.qy
    }

    /// Draws azimuth and elevation uniformly over their ranges.
    pub fn with_random_angles<R: Rng + ?Sized>(qx: usize, qy: usize, element_spacing: f64, rng: &mut R) -> Self {
        let azimuth = 2.0 * PI * rng.random::<f64>();
        let elevation = PI * rng.random::<f64>() - 0.5 * PI;
        Self {
            qx,
            qy,
            element_spacing,
            azimuth,
            elevation,
        }
    }
}

/// Planar-array steering vector: the x-axis vector Kronecker the y-axis
/// vector, so entry `qx * Qy + qy` has phase `2 pi / lambda0 * d * (qx u_x + qy u_y)`.
pub fn spatial_signature(p: &SpatialSignatureParams, wavelength: f64) -> Vec<Complex64> {
    let s = p.azimuth.sin();
    let ux = s * p.elevation.cos();
    let uy = s * p.elevation.sin();
    let k = 2.0 * PI / wavelength * p.element_spacing;
    let ax: Vec<Complex64> = (0..p.qx)
        .map(|q| Complex64::from_polar(1.0, k * q as f64 * ux))
        .collect();
    let ay: Vec<Complex64> = (0..p.qy)
        .map(|q| Complex64::from_polar(1.0, k * q as f64 * uy))
        .collect();
    ax.iter().flat_map(|x| ay.iter().map(move |y| x * y)).collect()
}

/// `g = sigma_g (sqrt(k/(k+1)) + sqrt(1/(k+1)) g_dif) a_ris` with a single
/// scalar `g_dif ~ CN(0, 1)` shared by every element.
pub fn sample_tx_ris_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    signature: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let g_dif = complex_gaussian(rng, 1.0);
    let sigma = params.sigma_g_sq.sqrt();
    let scale = if params.pure_los {
        Complex64::new(sigma, 0.0)
    } else {
        let kappa = params.ricean_factor;
        let los = (kappa / (kappa + 1.0)).sqrt();
        let dif = (1.0 / (kappa + 1.0)).sqrt();
        sigma * (los + dif * g_dif)
    };
    signature.iter().map(|a| scale * a).collect()
}

/// Direct gains `h_k ~ CN(0, sigma_h_k^2)` and RIS-to-user vectors
/// `f_k ~ CN(0, sigma_f_k^2 I_Q)`, drawn user by user.
pub fn sample_user_channels<R: Rng + ?Sized>(
    params: &ChannelParams,
    q: usize,
    rng: &mut R,
) -> (Vec<Complex64>, Vec<Vec<Complex64>>) {
    let users = params.users();
    let mut h = Vec::with_capacity(users);
    let mut f = Vec::with_capacity(users);
    for k in 0..users {
        h.push(complex_gaussian(rng, params.sigma_h_sq[k]));
        f.push((0..q).map(|_| complex_gaussian(rng, params.sigma_f_sq[k])).collect());
    }
    (h, f)
}

/// Channels of one coherence block. `f[k]` is the RIS-to-user vector of user `k`
/// (column `k` of the `Q x K` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub f: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn new(h: Vec<Complex64>, g: Vec<Complex64>, f: Vec<Vec<Complex64>>) -> Result<Self> {
        let chan = Self { h, g, f };
        chan.validate()?;
        Ok(chan)
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn elements(&self) -> usize {
        self.g.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.len() != self.h.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} direct gains but {} RIS-to-user vectors",
                self.h.len(),
                self.f.len()
            )));
        }
        let q = self.g.len();
        if let Some(k) = self.f.iter().position(|fk| fk.len() != q) {
            return Err(Error::DimensionMismatch(format!(
                "f[{k}] has length {} but Q = {q}",
                self.f[k].len()
            )));
        }
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        if !(self.h.iter().all(finite) && self.g.iter().all(finite) && self.f.iter().flatten().all(finite)) {
            return Err(Error::NonFinite("channel entry"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn single_element_signature_is_one() {
        let p = SpatialSignatureParams {
            qx: 1,
            qy: 1,
            element_spacing: 0.1,
            azimuth: 1.3,
            elevation: -0.4,
        };
        assert_eq!(spatial_signature(&p, 0.2), vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn broadside_signature_is_all_ones() {
        let p = SpatialSignatureParams {
            qx: 2,
            qy: 2,
            element_spacing: 0.1,
            azimuth: 0.0,
            elevation: 0.7,
        };
        for a in spatial_signature(&p, 0.2) {
            assert!(close(a, Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn half_wavelength_endfire_alternates_sign() {
        let p = SpatialSignatureParams {
            qx: 2,
            qy: 1,
            element_spacing: 0.1,
            azimuth: PI / 2.0,
            elevation: 0.0,
        };
        let a = spatial_signature(&p, 0.2);
        assert!(close(a[0], Complex64::new(1.0, 0.0)));
        assert!(close(a[1], Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn signature_matches_phase_accumulation() {
        let p = SpatialSignatureParams {
            qx: 3,
            qy: 4,
            element_spacing: 0.07,
            azimuth: 2.1,
            elevation: 0.3,
        };
        let lambda = 0.2;
        let a = spatial_signature(&p, lambda);
        let ux = p.azimuth.sin() * p.elevation.cos();
        let uy = p.azimuth.sin() * p.elevation.sin();
        let step = 2.0 * PI / lambda * p.element_spacing;
        let mut idx = 0;
        let mut phase_x = 0.0;
        for _ in 0..p.qx {
            let mut phase = phase_x;
            for _ in 0..p.qy {
                assert!(close(a[idx], Complex64::from_polar(1.0, phase)));
                assert!((a[idx].norm() - 1.0).abs() < 1e-12);
                phase += step * uy;
                idx += 1;
            }
            phase_x += step * ux;
        }
    }

    #[test]
    fn pathloss_collapses_to_one() {
        assert!((pathloss_variance(1.0, 1.0, 2.7, 4.0 * PI).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pathloss_table_value() {
        // 3.162 * 10^-1.6 * 0.04 / (16 pi^2)
        let v = pathloss_variance(3.162, 10.0, 1.6, 0.2).unwrap();
        assert!((v - 2.012e-5).abs() / 2.012e-5 < 1e-3, "{v}");
    }

    #[test]
    fn pathloss_power_law() {
        let a = pathloss_variance(2.0, 5.0, 1.6, 0.2).unwrap();
        let b = pathloss_variance(2.0, 10.0, 1.6, 0.2).unwrap();
        assert!((b / a - 2f64.powf(-1.6)).abs() < 1e-12);
        assert!((2f64.powf(-1.6) - 0.3299).abs() < 1e-4);
    }

    #[test]
    fn zero_distance_is_degenerate() {
        assert!(matches!(
            pathloss_variance(1.0, 0.0, 1.6, 0.2),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn zero_radius_cluster_collapses() {
        let mut rng = stream_rng(3, Stream::Geometry);
        let c = Point::new(40.0, -10.0);
        let g = Geometry::sample(Point::new(0.0, 0.0), Point::new(10.0, 0.0), c, 0.0, 5, &mut rng);
        assert!(g.user_positions.iter().all(|p| p.distance(&c) == 0.0));
    }

    #[test]
    fn disk_sampler_support_and_mean() {
        let mut rng = stream_rng(11, Stream::Geometry);
        let c = Point::new(40.0, -10.0);
        let n = 100_000;
        let g = Geometry::sample(Point::new(0.0, 0.0), Point::new(10.0, 0.0), c, 10.0, n, &mut rng);
        assert!(g.user_positions.iter().all(|p| p.distance(&c) <= 10.0 + 1e-12));
        let mx = g.user_positions.iter().map(|p| p.x).sum::<f64>() / n as f64;
        let my = g.user_positions.iter().map(|p| p.y).sum::<f64>() / n as f64;
        assert!(Point::new(mx, my).distance(&c) < 0.5);
    }

    #[test]
    fn pure_los_is_deterministic_scaling() {
        let params = ChannelParams::homogeneous(1, 4.0, 1.0, 1.0, 3.0, true);
        let sig = spatial_signature(
            &SpatialSignatureParams {
                qx: 2,
                qy: 2,
                element_spacing: 0.1,
                azimuth: 0.9,
                elevation: 0.2,
            },
            0.2,
        );
        let mut rng = stream_rng(5, Stream::TxRis);
        let g = sample_tx_ris_channel(&params, &sig, &mut rng);
        for (gq, aq) in g.iter().zip(&sig) {
            assert!(close(*gq, 2.0 * aq));
        }
    }

    #[test]
    fn rayleigh_g_second_moment() {
        let q = 4;
        let params = ChannelParams::homogeneous(1, 0.5, 1.0, 1.0, 0.0, false);
        let sig = spatial_signature(
            &SpatialSignatureParams {
                qx: 2,
                qy: 2,
                element_spacing: 0.1,
                azimuth: 0.9,
                elevation: 0.2,
            },
            0.2,
        );
        let mut rng = stream_rng(9, Stream::TxRis);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| {
                sample_tx_ris_channel(&params, &sig, &mut rng)
                    .iter()
                    .map(|x| x.norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let expected = 0.5 * q as f64;
        assert!((mean - expected).abs() / expected < 0.02, "{mean}");
    }

    #[test]
    fn ricean_los_fraction() {
        let params = ChannelParams::homogeneous(1, 2.0, 1.0, 1.0, 3.0, false);
        let sig = spatial_signature(
            &SpatialSignatureParams {
                qx: 1,
                qy: 2,
                element_spacing: 0.1,
                azimuth: 0.9,
                elevation: 0.2,
            },
            0.2,
        );
        let mut rng = stream_rng(13, Stream::TxRis);
        let n = 100_000;
        let sigma = params.sigma_g_sq.sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let g = sample_tx_ris_channel(&params, &sig, &mut rng);
            acc += g[1] / (sigma * sig[1]);
        }
        acc /= n as f64;
        let target = 0.75f64.sqrt();
        assert!((acc.re - target).abs() / target < 0.02, "{acc}");
        assert!(acc.im.abs() < 0.02);
    }

    #[test]
    fn user_channel_statistics() {
        let mut params = ChannelParams::homogeneous(2, 1.0, 2.0, 1.0, 0.0, false);
        params.sigma_h_sq[1] = 0.0;
        let mut rng = stream_rng(17, Stream::Users);
        let n = 100_000;
        let mut var_h1 = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        let mut cross_sq = 0.0;
        for _ in 0..n {
            let (h, f) = sample_user_channels(&params, 3, &mut rng);
            assert_eq!(h[1], Complex64::new(0.0, 0.0));
            var_h1 += h[0].norm_sqr();
            let x = f[0][0] * f[1][0].conj();
            cross += x;
            cross_sq += x.norm_sqr();
        }
        var_h1 /= n as f64;
        assert!((var_h1 - 2.0).abs() / 2.0 < 0.02, "{var_h1}");
        // E|f1 f2*|^2 = 1, so the standard error of the mean is 1/sqrt(n).
        let se = (cross_sq / n as f64 / n as f64).sqrt();
        let mean = cross / n as f64;
        assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se, "{mean} vs {se}");
    }

    #[test]
    fn realization_rejects_bad_shapes() {
        let one = Complex64::new(1.0, 0.0);
        assert!(ChannelRealization::new(vec![one], vec![one, one], vec![vec![one]]).is_err());
        assert!(ChannelRealization::new(vec![one, one], vec![one], vec![vec![one]]).is_err());
        assert!(ChannelRealization::new(vec![Complex64::new(f64::NAN, 0.0)], vec![], vec![vec![]]).is_err());
    }
}
