//! End-to-end schemes for one coherence block.
//!
//! Every scheme serves at most one user per slot, so the interference term of
//! the SINR is always zero and a slot rate is `log2(1 + P |c_k|^2)`.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::phase::{optimize_phases, quadratic_form_terms, OptimizerOptions};
use crate::power::{waterfill, SlotAllocation, DEFAULT_WATERFILL_TOL};
use crate::reflection::{CascadedPaths, PhaseAlphabet, ReflectionSchedule};

pub const DEFAULT_FLOOR_EPSILON: f64 = 1e-3;
/// Clamp range for the proportional-fair water-filling gains.
pub const PFS_ALPHA_RANGE: (f64, f64) = (1e-12, 1e12);

/// Pilot counts and frame dimensions used for the overhead factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadParams {
    pub n_up_full: u64,
    pub n_down_full: u64,
    pub n_par: u64,
    pub slots: u64,
    pub symbols_per_slot: u64,
}

impl OverheadParams {
    /// Full-CSIT uplink pilots `K (Q + 1)`, one downlink pilot per slot and
    /// two partial-CSIT symbols per slot.
    pub fn standard(users: usize, elements: usize, slots: u64, symbols_per_slot: u64) -> Self {
        Self {
            n_up_full: (users * (elements + 1)) as u64,
            n_down_full: 1,
            n_par: 2,
            slots,
            symbols_per_slot,
        }
    }

    /// Same frame with the uplink pilots of a system without RIS (`K`).
    pub fn without_ris(users: usize, slots: u64, symbols_per_slot: u64) -> Self {
        Self {
            n_up_full: users as u64,
            ..Self::standard(users, 0, slots, symbols_per_slot)
        }
    }

    pub fn coherence_symbols(&self) -> u64 {
        self.slots * self.symbols_per_slot
    }

    pub fn overhead_full(&self) -> Result<f64> {
        let lc = self.coherence_symbols();
        let pilots = self.n_up_full + self.slots * self.n_down_full;
        let xi = 1.0 - pilots as f64 / lc as f64;
        if lc == 0 || xi <= 0.0 {
            return Err(Error::OverheadExceedsFrame(format!(
                "N_up_full + M N_down_full = {pilots} >= L_c = {lc}"
            )));
        }
        Ok(xi)
    }

    pub fn overhead_partial(&self) -> Result<f64> {
        let p = self.symbols_per_slot;
        let xi = 1.0 - self.n_par as f64 / p as f64;
        if p == 0 || xi <= 0.0 {
            return Err(Error::OverheadExceedsFrame(format!(
                "N_par = {} >= P = {p}",
                self.n_par
            )));
        }
        Ok(xi)
    }
}

/// Running average rates for proportional-fair selection.
#[derive(Debug, Clone, PartialEq)]
pub struct EwmaState {
    pub avg_rates: Vec<f64>,
    /// Index of the last slot folded into `avg_rates`.
    pub slot: u64,
    pub floor_epsilon: f64,
}

impl EwmaState {
    /// State after slot 0, `R^(0) = rates^(0)` floored.
    pub fn bootstrap(initial_rates: &[f64], floor_epsilon: f64) -> Self {
        Self {
            avg_rates: initial_rates.iter().map(|r| r.max(floor_epsilon)).collect(),
            slot: 0,
            floor_epsilon,
        }
    }

    pub fn update(&mut self, rates: &[f64]) {
        self.slot += 1;
        let w = 1.0 / (self.slot as f64 + 1.0);
        for (avg, r) in self.avg_rates.iter_mut().zip(rates) {
            *avg = ((1.0 - w) * *avg + w * r).max(self.floor_epsilon);
        }
    }
}

pub fn ewma_update(state: &EwmaState, rates: &[f64]) -> EwmaState {
    let mut next = state.clone();
    next.update(rates);
    next
}

/// First index attaining the maximum. Values within `1e-12` relative of the
/// maximum count as ties.
fn first_argmax(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0;
    }
    let tol = 1e-12 * max.abs();
    values.iter().position(|&v| v >= max - tol).unwrap_or(0)
}

/// Proportional-fair pick `argmax_k ln(gain_k) / avg_rate_k`.
///
/// A zero gain scores `-inf`. Ties go to the lowest index.
pub fn pfs_select(avg_rates: &[f64], gains: &[f64]) -> usize {
    let scores: Vec<f64> = gains
        .iter()
        .zip(avg_rates)
        .map(|(&g, &r)| if g > 0.0 { g.ln() / r } else { f64::NEG_INFINITY })
        .collect();
    first_argmax(&scores)
}

/// Jain's index `(sum r)^2 / (K sum r^2)`.
pub fn fairness_index(rates: &[f64]) -> Result<f64> {
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if rates.is_empty() || sum_sq == 0.0 {
        return Err(Error::UndefinedFairness);
    }
    Ok((sum * sum / (rates.len() as f64 * sum_sq)).min(1.0))
}

/// Fixed inputs shared by all schemes within one block.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeContext {
    pub p_tx: f64,
    pub alphabet: PhaseAlphabet,
    pub optimizer: OptimizerOptions,
    /// Slots simulated per block.
    pub slots: usize,
    pub floor_epsilon: f64,
    pub waterfill_tol: f64,
    pub xi_full: f64,
    pub xi_partial: f64,
    pub xi_no_ris: f64,
}

impl SchemeContext {
    /// Context with unit overhead factors.
    pub fn new(p_tx: f64, alphabet: PhaseAlphabet, slots: usize) -> Self {
        Self {
            p_tx,
            alphabet,
            optimizer: OptimizerOptions::default(),
            slots,
            floor_epsilon: DEFAULT_FLOOR_EPSILON,
            waterfill_tol: DEFAULT_WATERFILL_TOL,
            xi_full: 1.0,
            xi_partial: 1.0,
            xi_no_ris: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    /// Overhead-scaled time-averaged rate of each user, bits/s/Hz.
    pub per_user_rate: Vec<f64>,
    pub net_sum_capacity: f64,
    pub fairness: f64,
    pub schedule: Vec<SlotAllocation>,
    pub overhead: f64,
}

impl SchemeResult {
    /// Builds the result from raw per-slot rates credited to the slot winners.
    fn from_slots(users: usize, schedule: Vec<SlotAllocation>, slot_rates: &[f64], overhead: f64) -> Self {
        let m = schedule.len().max(1) as f64;
        let mut per_user_rate = vec![0.0; users];
        for (alloc, r) in schedule.iter().zip(slot_rates) {
            if let Some(k) = alloc.user {
                per_user_rate[k] += r;
            }
        }
        for r in &mut per_user_rate {
            *r *= overhead / m;
        }
        let net_sum_capacity = per_user_rate.iter().sum();
        // All users at zero rate are equally served.
        let fairness = fairness_index(&per_user_rate).unwrap_or(1.0);
        Self {
            per_user_rate,
            net_sum_capacity,
            fairness,
            schedule,
            overhead,
        }
    }

    /// Number of slots won by each user.
    pub fn winner_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.per_user_rate.len()];
        for k in self.schedule.iter().filter_map(|a| a.user) {
            hist[k] += 1;
        }
        hist
    }
}

/// `max_theta |c_k(theta)|^2` for every user.
pub fn optimized_user_gains(chan: &ChannelRealization, ctx: &SchemeContext) -> Vec<f64> {
    chan.h
        .iter()
        .zip(&chan.f)
        .map(|(&h, fk)| optimize_phases(&quadratic_form_terms(h, &chan.g, fk), &ctx.alphabet, ctx.optimizer).objective)
        .collect()
}

/// Serves the strongest user in every slot at full power.
fn best_user_constant(gains: &[f64], ctx: &SchemeContext, overhead: f64) -> SchemeResult {
    let k = first_argmax(gains);
    let rate = (1.0 + ctx.p_tx * gains[k]).log2();
    let slots = ctx.slots.max(1);
    SchemeResult::from_slots(
        gains.len(),
        vec![SlotAllocation::to(k, ctx.p_tx); slots],
        &vec![rate; slots],
        overhead,
    )
}

/// Optimized slowly-varying RIS from precomputed [`optimized_user_gains`].
pub fn stv_opt_from_gains(gains: &[f64], ctx: &SchemeContext) -> SchemeResult {
    best_user_constant(gains, ctx, ctx.xi_full)
}

pub fn run_stv_opt(chan: &ChannelRealization, ctx: &SchemeContext) -> SchemeResult {
    stv_opt_from_gains(&optimized_user_gains(chan, ctx), ctx)
}

pub fn run_no_ris(chan: &ChannelRealization, ctx: &SchemeContext) -> SchemeResult {
    let gains: Vec<f64> = chan.h.iter().map(|h| h.norm_sqr()).collect();
    best_user_constant(&gains, ctx, ctx.xi_no_ris)
}

fn slot_gains(chan: &ChannelRealization, schedule: &ReflectionSchedule, ctx: &SchemeContext) -> Result<Vec<Vec<f64>>> {
    if schedule.elements() != chan.elements() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} elements, channel has {}",
            schedule.elements(),
            chan.elements()
        )));
    }
    let paths = CascadedPaths::new(&chan.h, &chan.g, &chan.f, &ctx.alphabet);
    Ok((0..schedule.slots())
        .map(|m| paths.gains_sq(schedule.slot(m)))
        .collect())
}

/// Randomized rapidly-varying RIS: the best user of each slot at power `P_TX`.
pub fn run_rtv_rand(
    chan: &ChannelRealization,
    schedule: &ReflectionSchedule,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let gains = slot_gains(chan, schedule, ctx)?;
    let mut allocs = Vec::with_capacity(gains.len());
    let mut rates = Vec::with_capacity(gains.len());
    for g in &gains {
        let k = first_argmax(g);
        allocs.push(SlotAllocation::to(k, ctx.p_tx));
        rates.push((1.0 + ctx.p_tx * g[k]).log2());
    }
    Ok(SchemeResult::from_slots(chan.users(), allocs, &rates, ctx.xi_partial))
}

/// Proportional-fair selection over per-slot gains at constant power.
///
/// Returns the winners, their rates and the average rate before each slot's
/// decision (slot 0 uses the bootstrapped state).
struct PfsTrace {
    winners: Vec<usize>,
    rates: Vec<f64>,
    avg_before: Vec<f64>,
}

fn pfs_trace<'a>(gains: impl Iterator<Item = &'a [f64]>, users: usize, ctx: &SchemeContext) -> PfsTrace {
    let mut trace = PfsTrace {
        winners: Vec::new(),
        rates: Vec::new(),
        avg_before: Vec::new(),
    };
    let mut state: Option<EwmaState> = None;
    let mut inst = vec![0.0; users];
    for g in gains {
        let snrs: Vec<f64> = g.iter().map(|x| ctx.p_tx * x).collect();
        let k = match &state {
            None => first_argmax(g),
            Some(s) => pfs_select(&s.avg_rates, &snrs),
        };
        let rate = (1.0 + snrs[k]).log2();
        inst.fill(0.0);
        inst[k] = rate;
        match &mut state {
            None => {
                let s = EwmaState::bootstrap(&inst, ctx.floor_epsilon);
                trace.avg_before.push(s.avg_rates[k]);
                state = Some(s);
            }
            Some(s) => {
                trace.avg_before.push(s.avg_rates[k]);
                s.update(&inst);
            }
        }
        trace.winners.push(k);
        trace.rates.push(rate);
    }
    trace
}

pub fn run_pfs_rand(
    chan: &ChannelRealization,
    schedule: &ReflectionSchedule,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let gains = slot_gains(chan, schedule, ctx)?;
    let trace = pfs_trace(gains.iter().map(Vec::as_slice), chan.users(), ctx);
    let allocs = trace.winners.iter().map(|&k| SlotAllocation::to(k, ctx.p_tx)).collect();
    Ok(SchemeResult::from_slots(
        chan.users(),
        allocs,
        &trace.rates,
        ctx.xi_partial,
    ))
}

/// Proportional-fair rapidly-varying RIS with full CSIT, from precomputed
/// [`optimized_user_gains`].
///
/// The schedule comes from a provisional pass at equal power. Slot powers are
/// then water-filled over `|c_k|^(2 / R_k)` of each slot winner, with the
/// average rate taken before that slot's update.
pub fn pfs_full_from_gains(gains: &[f64], ctx: &SchemeContext) -> Result<SchemeResult> {
    let slots = ctx.slots.max(1);
    let trace = pfs_trace(std::iter::repeat_n(gains, slots), gains.len(), ctx);
    let (lo, hi) = PFS_ALPHA_RANGE;
    let alphas: Vec<f64> = trace
        .winners
        .iter()
        .zip(&trace.avg_before)
        .map(|(&k, &avg)| (gains[k].ln() / avg).exp().clamp(lo, hi))
        .collect();
    let wf = waterfill(&alphas, ctx.p_tx, ctx.waterfill_tol)?;
    let allocs = trace
        .winners
        .iter()
        .zip(&wf.powers)
        .map(|(&k, &p)| SlotAllocation::to(k, p))
        .collect();
    let rates: Vec<f64> = trace
        .winners
        .iter()
        .zip(&wf.powers)
        .map(|(&k, &p)| (1.0 + p * gains[k]).log2())
        .collect();
    Ok(SchemeResult::from_slots(gains.len(), allocs, &rates, ctx.xi_full))
}

pub fn run_pfs_full(chan: &ChannelRealization, ctx: &SchemeContext) -> Result<SchemeResult> {
    pfs_full_from_gains(&optimized_user_gains(chan, ctx), ctx)
}
