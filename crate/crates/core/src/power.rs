//! Slot power allocation under a time-averaged power budget, SINR and rates.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Budget residual tolerance, relative to `max(1, P_TX)`.
pub const DEFAULT_WATERFILL_TOL: f64 = 1e-10;
pub const MAX_BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub powers: Vec<f64>,
    /// The water-level threshold `lambda`; the level itself is `1 / lambda`.
    pub threshold: f64,
    pub active_slots: Vec<bool>,
}

impl WaterfillResult {
    pub fn level(&self) -> f64 {
        1.0 / self.threshold
    }

    pub fn average_power(&self) -> f64 {
        self.powers.iter().sum::<f64>() / self.powers.len() as f64
    }
}

/// Allocates `P^(m) = [1/lambda - 1/alpha_m]^+` so that the slot average equals `p_tx`.
///
/// The level `1/lambda` is bracketed by bisection over
/// `[0, M p_tx + max_m 1/alpha_m]` until the budget residual is within
/// `tol * max(1, p_tx)`; the level is then recomputed in closed form from the
/// resulting active set so active slots meet `P + 1/alpha = 1/lambda` to
/// rounding.
pub fn waterfill(alphas: &[f64], p_tx: f64, tol: f64) -> Result<WaterfillResult> {
    if alphas.is_empty() {
        return Err(Error::DimensionMismatch("water-filling needs at least one slot".into()));
    }
    if !p_tx.is_finite() || p_tx < 0.0 {
        return Err(Error::NonFinite("transmit power must be finite and nonnegative"));
    }
    for (slot, &a) in alphas.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite("slot gain"));
        }
        if a <= 0.0 {
            return Err(Error::NonPositiveGain { slot, value: a });
        }
    }
    let m = alphas.len() as f64;
    let inv: Vec<f64> = alphas.iter().map(|a| 1.0 / a).collect();
    let inv_min = inv.iter().copied().fold(f64::INFINITY, f64::min);
    let inv_max = inv.iter().copied().fold(0.0, f64::max);

    if p_tx == 0.0 {
        return Ok(WaterfillResult {
            powers: vec![0.0; alphas.len()],
            threshold: 1.0 / inv_min,
            active_slots: vec![false; alphas.len()],
        });
    }

    let budget = |level: f64| inv.iter().map(|i| (level - i).max(0.0)).sum::<f64>() / m;
    let target_tol = tol * p_tx.max(1.0);
    let (mut lo, mut hi) = (0.0, m * p_tx + inv_max);
    let mut level = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_ITERS {
        level = 0.5 * (lo + hi);
        let residual = budget(level) - p_tx;
        if residual.abs() <= target_tol {
            break;
        }
        if residual > 0.0 {
            hi = level;
        } else {
            lo = level;
        }
    }

    // Polish: the level is affine in the budget once the active set is fixed.
    let mut active: Vec<bool> = inv.iter().map(|&i| i < level).collect();
    for _ in 0..alphas.len() + 1 {
        let n = active.iter().filter(|&&a| a).count();
        if n == 0 {
            break;
        }
        let sum_inv: f64 = inv.iter().zip(&active).filter(|(_, &a)| a).map(|(i, _)| i).sum();
        let exact = (m * p_tx + sum_inv) / n as f64;
        let next: Vec<bool> = inv.iter().map(|&i| i < exact).collect();
        level = exact;
        if next == active {
            break;
        }
        active = next;
    }

    let powers: Vec<f64> = inv.iter().map(|i| (level - i).max(0.0)).collect();
    let active_slots = powers.iter().map(|&p| p > 0.0).collect();
    Ok(WaterfillResult {
        powers,
        threshold: 1.0 / level,
        active_slots,
    })
}

/// `P_k |c_k|^2 / (|c_k|^2 sum_{u != k} P_u + 1)`.
pub fn sinr(powers: &[f64], c: Complex64, k: usize) -> f64 {
    let gain = c.norm_sqr();
    let interference: f64 = powers.iter().enumerate().filter(|&(u, _)| u != k).map(|(_, p)| p).sum();
    powers[k] * gain / (gain * interference + 1.0)
}

/// `(1/M) sum_m log2(1 + SINR_m)` in bits/s/Hz.
pub fn time_averaged_rate(per_slot_sinrs: &[f64]) -> f64 {
    if per_slot_sinrs.is_empty() {
        return 0.0;
    }
    per_slot_sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / per_slot_sinrs.len() as f64
}

/// Who transmits in a slot and with what power. At most one user per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotAllocation {
    pub user: Option<usize>,
    pub power: f64,
}

impl SlotAllocation {
    pub const IDLE: SlotAllocation = SlotAllocation { user: None, power: 0.0 };

    pub fn to(user: usize, power: f64) -> Self {
        Self {
            user: Some(user),
            power,
        }
    }

    /// Per-user power vector of this slot (zeros except the scheduled user).
    pub fn power_vector(&self, users: usize) -> Vec<f64> {
        let mut p = vec![0.0; users];
        if let Some(k) = self.user {
            p[k] = self.power;
        }
        p
    }
}
