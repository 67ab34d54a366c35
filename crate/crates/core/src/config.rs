//! Simulation configuration, read from a single JSON document.
//!
//! Every field has a default, so `{}` describes the reference scenario:
//! 16 users in a 10 m cluster around (40, -10) m, a 10 x 10 RIS at (10, 0) m,
//! carrier 1.5 GHz, EIRP 33 dBm, noise -100 dBm, Ricean factor 3, path-loss
//! exponent 1.6 and a four-phase alphabet. The overhead factors use the
//! physical frame (`frame_slots` x `symbols_per_slot` symbols) while only
//! `simulated_slots` slots are simulated per block.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{dbi_to_linear, ris_aperture_gain, Point, RisUserGain};
use crate::error::{Error, Result};
use crate::phase::{OptimizerOptions, PhaseStart};
use crate::reflection::{PhaseAlphabet, MAX_PHASE_BITS};
use crate::rng::CHACHA8;
use crate::schedulers::{OverheadParams, SchemeContext};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StvOpt,
    RtvRand,
    PfsFull,
    PfsRand,
    NoRis,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::StvOpt,
        Scheme::RtvRand,
        Scheme::PfsFull,
        Scheme::PfsRand,
        Scheme::NoRis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StvOpt => "stv_opt",
            Scheme::RtvRand => "rtv_rand",
            Scheme::PfsFull => "pfs_full",
            Scheme::PfsRand => "pfs_rand",
            Scheme::NoRis => "no_ris",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub center: Point,
    /// 10 m when homogeneous, 100 m otherwise, unless `radius_m` is set.
    pub homogeneous: bool,
    pub radius_m: Option<f64>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            center: Point::new(40.0, -10.0),
            homogeneous: true,
            radius_m: None,
        }
    }
}

impl ClusterConfig {
    pub fn radius(&self) -> f64 {
        self.radius_m.unwrap_or(if self.homogeneous { 10.0 } else { 100.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadConfig {
    /// Defaults to `K (Q + 1)`.
    pub n_up_full: Option<u64>,
    pub n_down_full: u64,
    pub n_par: u64,
}

impl Default for OverheadConfig {
    fn default() -> Self {
        Self {
            n_up_full: None,
            n_down_full: 1,
            n_par: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub users: usize,
    pub qx: usize,
    pub qy: usize,
    pub simulated_slots: usize,
    pub frame_slots: u64,
    pub symbols_per_slot: u64,
    pub phase_bits: u32,
    pub ricean_factor: f64,
    pub pure_los_g: bool,
    pub pathloss_exponent: f64,
    pub eirp_dbm: f64,
    pub noise_dbm: f64,
    pub carrier_hz: f64,
    /// Inter-element spacing as a fraction of the wavelength.
    pub element_spacing_wavelengths: f64,
    pub ue_gain_dbi: f64,
    pub ris_user_gain: RisUserGain,
    pub tx_position: Point,
    pub ris_position: Point,
    pub cluster: ClusterConfig,
    pub overhead: OverheadConfig,
    pub runs: usize,
    pub base_seed: u64,
    pub rng: String,
    pub schemes: Vec<Scheme>,
    pub floor_epsilon: f64,
    pub max_iterations: usize,
    pub phase_rel_tol: f64,
    pub phase_start: PhaseStart,
    pub waterfill_tol: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 16,
            qx: 10,
            qy: 10,
            simulated_slots: 100,
            frame_slots: 2500,
            symbols_per_slot: 80,
            phase_bits: 2,
            ricean_factor: 3.0,
            pure_los_g: false,
            pathloss_exponent: 1.6,
            eirp_dbm: 33.0,
            noise_dbm: -100.0,
            carrier_hz: 1.5e9,
            element_spacing_wavelengths: 0.5,
            ue_gain_dbi: 5.0,
            ris_user_gain: RisUserGain::default(),
            tx_position: Point::new(0.0, 0.0),
            ris_position: Point::new(10.0, 0.0),
            cluster: ClusterConfig::default(),
            overhead: OverheadConfig::default(),
            runs: 200,
            base_seed: 2021,
            rng: CHACHA8.to_string(),
            schemes: Scheme::ALL.to_vec(),
            floor_epsilon: 1e-3,
            max_iterations: 20,
            phase_rel_tol: 1e-9,
            phase_start: PhaseStart::default(),
            waterfill_tol: 1e-10,
        }
    }
}

impl SystemConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn elements(&self) -> usize {
        self.qx * self.qy
    }

    /// Sets the surface to `q` elements, square when `q` is a perfect square
    /// and a single row otherwise.
    pub fn set_elements(&mut self, q: usize) {
        let side = (q as f64).sqrt().round() as usize;
        if side * side == q {
            self.qx = side;
            self.qy = side;
        } else {
            self.qx = q;
            self.qy = 1;
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing_wavelengths * self.wavelength()
    }

    /// Transmit SNR `EIRP / P_noise`, linear.
    pub fn p_tx(&self) -> f64 {
        10f64.powf((self.eirp_dbm - self.noise_dbm) / 10.0)
    }

    pub fn ue_gain(&self) -> f64 {
        dbi_to_linear(self.ue_gain_dbi)
    }

    pub fn ris_gain(&self) -> f64 {
        ris_aperture_gain(self.elements(), self.element_spacing(), self.wavelength())
    }

    pub fn alphabet(&self) -> Result<PhaseAlphabet> {
        PhaseAlphabet::new(self.phase_bits)
    }

    pub fn overhead_params(&self) -> OverheadParams {
        let mut p = OverheadParams::standard(self.users, self.elements(), self.frame_slots, self.symbols_per_slot);
        p.n_down_full = self.overhead.n_down_full;
        p.n_par = self.overhead.n_par;
        if let Some(n) = self.overhead.n_up_full {
            p.n_up_full = n;
        }
        p
    }

    pub fn no_ris_overhead_params(&self) -> OverheadParams {
        OverheadParams {
            n_up_full: self.users as u64,
            ..self.overhead_params()
        }
    }

    pub fn scheme_context(&self) -> Result<SchemeContext> {
        let overhead = self.overhead_params();
        Ok(SchemeContext {
            p_tx: self.p_tx(),
            alphabet: self.alphabet()?,
            optimizer: OptimizerOptions {
                max_iterations: self.max_iterations,
                rel_tol: self.phase_rel_tol,
                start: self.phase_start,
            },
            slots: self.simulated_slots,
            floor_epsilon: self.floor_epsilon,
            waterfill_tol: self.waterfill_tol,
            xi_full: overhead.overhead_full()?,
            xi_partial: overhead.overhead_partial()?,
            xi_no_ris: self.no_ris_overhead_params().overhead_full()?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.qx == 0 || self.qy == 0 {
            return bad(format!(
                "surface dimensions must be positive, got {} x {}",
                self.qx, self.qy
            ));
        }
        if self.simulated_slots == 0 || self.frame_slots == 0 || self.symbols_per_slot == 0 {
            return bad("slot and symbol counts must be positive".into());
        }
        if self.phase_bits == 0 || self.phase_bits > MAX_PHASE_BITS {
            return bad(format!(
                "phase_bits must lie in 1..={MAX_PHASE_BITS}, got {}",
                self.phase_bits
            ));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.rng != CHACHA8 {
            return bad(format!("unsupported rng {:?}, only {CHACHA8:?} is available", self.rng));
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return bad("schemes must not repeat".into());
        }
        for (name, v) in [
            ("eirp_dbm", self.eirp_dbm),
            ("noise_dbm", self.noise_dbm),
            ("ue_gain_dbi", self.ue_gain_dbi),
            ("pathloss_exponent", self.pathloss_exponent),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("element_spacing_wavelengths", self.element_spacing_wavelengths),
            ("floor_epsilon", self.floor_epsilon),
            ("waterfill_tol", self.waterfill_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.ricean_factor.is_finite() && self.ricean_factor >= 0.0) {
            return bad(format!("ricean_factor must be nonnegative, got {}", self.ricean_factor));
        }
        if !(self.phase_rel_tol.is_finite() && self.phase_rel_tol >= 0.0) {
            return bad("phase_rel_tol must be nonnegative".into());
        }
        let r = self.cluster.radius();
        if !(r.is_finite() && r >= 0.0) {
            return bad(format!("cluster radius must be nonnegative, got {r}"));
        }
        if self.tx_position.distance(&self.ris_position) <= 0.0 {
            return bad("transmitter and RIS positions coincide".into());
        }
        // Surfaces the overhead constraint under its own message.
        self.scheme_context().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_scenario() {
        let cfg = SystemConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(cfg.elements(), 100);
        assert!((cfg.wavelength() - 0.2).abs() < 1e-3);
        assert!((cfg.p_tx() / 10f64.powf(13.3) - 1.0).abs() < 1e-12);
        assert!((cfg.ue_gain() - 3.162).abs() < 1e-3);
        assert!((cfg.ris_gain() - std::f64::consts::PI * 100.0).abs() < 1e-9);
    }

    #[test]
    fn reference_overheads() {
        let ctx = SystemConfig::default().scheme_context().unwrap();
        assert!((ctx.xi_full - 0.97942).abs() < 1e-12);
        assert!((ctx.xi_partial - 0.975).abs() < 1e-12);
        assert!((ctx.xi_no_ris - (1.0 - 2516.0 / 200_000.0)).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(
            SystemConfig::from_json_str(r#"{"user": 3}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SystemConfig::from_json_str(r#"{"cluster": {"radius": 3}}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn partial_documents_keep_defaults() {
        let cfg = SystemConfig::from_json_str(
            r#"{"users": 4, "schemes": ["rtv_rand", "no_ris"], "cluster": {"homogeneous": false}, "ris_user_gain": "ue"}"#,
        )
        .unwrap();
        assert_eq!(cfg.users, 4);
        assert_eq!(cfg.schemes, vec![Scheme::RtvRand, Scheme::NoRis]);
        assert_eq!(cfg.cluster.radius(), 100.0);
        assert_eq!(cfg.ris_user_gain, RisUserGain::Ue);
        assert_eq!(cfg.qx, 10);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for doc in [
            r#"{"users": 0}"#,
            r#"{"runs": 0}"#,
            r#"{"phase_bits": 0}"#,
            r#"{"rng": "pcg"}"#,
            r#"{"schemes": []}"#,
            r#"{"schemes": ["stv_opt", "stv_opt"]}"#,
            r#"{"carrier_hz": -1}"#,
            r#"{"symbols_per_slot": 2}"#,
            r#"{"frame_slots": 1, "symbols_per_slot": 3, "users": 4}"#,
        ] {
            assert!(SystemConfig::from_json_str(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn element_layout() {
        let mut cfg = SystemConfig::default();
        cfg.set_elements(64);
        assert_eq!((cfg.qx, cfg.qy), (8, 8));
        cfg.set_elements(12);
        assert_eq!((cfg.qx, cfg.qy), (12, 1));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("best".parse::<Scheme>().is_err());
    }
}
