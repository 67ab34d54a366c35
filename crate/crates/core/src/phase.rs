//! Maximization of one user's received gain over the discrete phase grid.
//!
//! For user `k` the gain as a function of the reflection phases is the
//! quadratic form
//!
//! ```text
//! F(theta) = |h|^2 + 2 Re{ sum_q beta_q e^{j theta_q} } + sum_{p,q} B_pq e^{j theta_p} e^{-j theta_q}
//! ```
//!
//! with `beta = h diag(conj f) g` and `B = diag(conj f) g g^H diag(f)`, which
//! equals `|overall_gain|^2`. Fixing every phase but `theta_v` leaves
//! `lambda_v + 2 |chi_v| cos(theta_v + arg chi_v)`, so each coordinate is
//! solved by picking the grid phase closest to `-arg chi_v`.
//! [`optimize_phases`] sweeps the coordinates in order until the objective
//! stops improving. [`exhaustive_oracle`] enumerates the whole grid and is
//! only meant for small instances.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reflection::PhaseAlphabet;

/// Largest grid [`exhaustive_oracle`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 24;

/// `beta`, `B` and `|h|^2` for one user. `B` is rank one and stored as its
/// factor `u`, `B = u u^H` with `u_q = conj(f_q) g_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormTerms {
    pub beta: Vec<Complex64>,
    pub factor: Vec<Complex64>,
    pub h_abs_sq: f64,
}

pub fn quadratic_form_terms(h: Complex64, g: &[Complex64], f: &[Complex64]) -> QuadraticFormTerms {
    debug_assert_eq!(g.len(), f.len());
    let factor: Vec<Complex64> = g.iter().zip(f).map(|(gq, fq)| fq.conj() * gq).collect();
    QuadraticFormTerms {
        beta: factor.iter().map(|u| h * u).collect(),
        factor,
        h_abs_sq: h.norm_sqr(),
    }
}

impl QuadraticFormTerms {
    pub fn elements(&self) -> usize {
        self.factor.len()
    }

    /// `{B}_{p,q}`.
    pub fn b_entry(&self, p: usize, q: usize) -> Complex64 {
        self.factor[p] * self.factor[q].conj()
    }

    /// Dense `Q x Q` copy of `B`, row-major.
    pub fn b_matrix(&self) -> Vec<Vec<Complex64>> {
        let q = self.elements();
        (0..q).map(|p| (0..q).map(|r| self.b_entry(p, r)).collect()).collect()
    }

    /// `trace(B) = sum_q |g_q|^2 |f_q|^2`.
    pub fn b_trace(&self) -> f64 {
        self.factor.iter().map(|u| u.norm_sqr()).sum()
    }
}

/// Objective at arbitrary (not necessarily grid) phases.
pub fn objective_from_phases(terms: &QuadraticFormTerms, phases: &[f64]) -> f64 {
    let mut linear = Complex64::new(0.0, 0.0);
    let mut coherent = Complex64::new(0.0, 0.0);
    for ((beta, u), &theta) in terms.beta.iter().zip(&terms.factor).zip(phases) {
        let e = Complex64::from_polar(1.0, theta);
        linear += beta * e;
        coherent += u * e;
    }
    (terms.h_abs_sq + 2.0 * linear.re + coherent.norm_sqr()).max(0.0)
}

pub fn objective(terms: &QuadraticFormTerms, theta: &[u16], alphabet: &PhaseAlphabet) -> f64 {
    let phases: Vec<f64> = theta.iter().map(|&l| alphabet.phase(l)).collect();
    objective_from_phases(terms, &phases)
}

/// `(lambda_v, chi_v)` such that `F = lambda_v + 2 Re{chi_v e^{j theta_v}}`
/// with every phase except `theta_v` held at `phases`.
///
/// `lambda_v` here keeps the `B_vv` diagonal term, which does not depend on
/// `theta_v`.
pub fn coordinate_decomposition(terms: &QuadraticFormTerms, phases: &[f64], v: usize) -> (f64, Complex64) {
    let chi = chi_dense(terms, phases, v);
    let mut rest = phases.to_vec();
    // F at theta_v = pi/2 and -pi/2 averages to lambda_v.
    rest[v] = std::f64::consts::FRAC_PI_2;
    let up = objective_from_phases(terms, &rest);
    rest[v] = -std::f64::consts::FRAC_PI_2;
    let down = objective_from_phases(terms, &rest);
    (0.5 * (up + down), chi)
}

fn chi_dense(terms: &QuadraticFormTerms, phases: &[f64], v: usize) -> Complex64 {
    let mut chi = terms.beta[v];
    for (q, &theta) in phases.iter().enumerate() {
        if q != v {
            chi += terms.b_entry(v, q) * Complex64::from_polar(1.0, -theta);
        }
    }
    chi
}

/// Grid index maximizing `Re{chi e^{j theta}}`. The incumbent is kept on a
/// tie with the best candidate; otherwise the lowest index wins.
fn best_grid_index(chi: Complex64, incumbent: u16, alphabet: &PhaseAlphabet) -> u16 {
    let eps = 1e-12 * chi.norm();
    let score = |l: u16| (chi * alphabet.coefficient(l)).re;
    let mut best = incumbent;
    let mut best_score = score(incumbent);
    for l in 0..alphabet.len() as u16 {
        let s = score(l);
        if s > best_score + eps {
            best = l;
            best_score = s;
        }
    }
    best
}

/// One block-coordinate step on `theta[v]`, computing `chi_v` from the
/// current state of every other coordinate.
pub fn coordinate_update(terms: &QuadraticFormTerms, theta: &[u16], v: usize, alphabet: &PhaseAlphabet) -> u16 {
    let phases: Vec<f64> = theta.iter().map(|&l| alphabet.phase(l)).collect();
    best_grid_index(chi_dense(terms, &phases, v), theta[v], alphabet)
}

/// Starting points of the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseStart {
    /// All phases zero.
    Zero,
    /// The zero start and the best point of [`common_phase_sweep`]; the
    /// better ascent result is kept.
    #[default]
    ZeroAndSweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Stop once a full sweep improves the objective by less than this fraction.
    pub rel_tol: f64,
    pub start: PhaseStart,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            rel_tol: 1e-9,
            start: PhaseStart::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseIterate {
    pub theta: Vec<u16>,
    pub objective: f64,
    /// Completed sweeps.
    pub iterations: usize,
}

pub fn optimize_phases(terms: &QuadraticFormTerms, alphabet: &PhaseAlphabet, opts: OptimizerOptions) -> PhaseIterate {
    optimize(terms, alphabet, opts, None)
}

/// Same as [`optimize_phases`], also returning one objective trace per start:
/// the value before the first update and after every coordinate update.
pub fn optimize_phases_traced(
    terms: &QuadraticFormTerms,
    alphabet: &PhaseAlphabet,
    opts: OptimizerOptions,
) -> (PhaseIterate, Vec<Vec<f64>>) {
    let mut traces = Vec::new();
    let it = optimize(terms, alphabet, opts, Some(&mut traces));
    (it, traces)
}

fn optimize(
    terms: &QuadraticFormTerms,
    alphabet: &PhaseAlphabet,
    opts: OptimizerOptions,
    mut traces: Option<&mut Vec<Vec<f64>>>,
) -> PhaseIterate {
    let q = terms.elements();
    let mut starts = vec![vec![0u16; q]];
    if opts.start == PhaseStart::ZeroAndSweep && q > 1 {
        let swept = common_phase_sweep(terms, alphabet);
        if swept != starts[0] {
            starts.push(swept);
        }
    }
    let mut best: Option<PhaseIterate> = None;
    for init in starts {
        let mut trace = Vec::new();
        let it = block_coordinate_ascent(terms, alphabet, init, opts, traces.is_some().then_some(&mut trace));
        if let Some(t) = traces.as_deref_mut() {
            t.push(trace);
        }
        if best.as_ref().is_none_or(|b| it.objective > b.objective) {
            best = Some(it);
        }
    }
    best.expect("at least one start")
}

/// Block-coordinate ascent from `theta`: each sweep updates coordinates
/// `0..Q` in order, each against the latest values of all others.
pub fn block_coordinate_ascent(
    terms: &QuadraticFormTerms,
    alphabet: &PhaseAlphabet,
    mut theta: Vec<u16>,
    opts: OptimizerOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> PhaseIterate {
    let q = terms.elements();
    let coeffs = alphabet.coefficients();
    let mut current = objective(terms, &theta, alphabet);
    if let Some(t) = trace.as_deref_mut() {
        t.push(current);
    }
    if q == 0 {
        return PhaseIterate {
            theta,
            objective: current,
            iterations: 0,
        };
    }

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        // Running sums sum_q beta_q e^{j theta_q} and sum_q u_q e^{j theta_q},
        // rebuilt each sweep to keep rounding from accumulating.
        let mut linear: Complex64 = terms
            .beta
            .iter()
            .zip(&theta)
            .map(|(b, &l)| b * coeffs[l as usize])
            .sum();
        let mut coherent: Complex64 = terms
            .factor
            .iter()
            .zip(&theta)
            .map(|(u, &l)| u * coeffs[l as usize])
            .sum();
        let start = current;
        let mut changed = false;

        for v in 0..q {
            let u = terms.factor[v];
            let old = coeffs[theta[v] as usize];
            // chi_v = beta_v + u_v * conj(sum_{q != v} u_q e^{j theta_q})
            let chi = terms.beta[v] + u * (coherent - u * old).conj();
            let next = best_grid_index(chi, theta[v], alphabet);
            if next != theta[v] {
                let new = coeffs[next as usize];
                linear += terms.beta[v] * (new - old);
                coherent += u * (new - old);
                theta[v] = next;
                changed = true;
            }
            let value = terms.h_abs_sq + 2.0 * linear.re + coherent.norm_sqr();
            if let Some(t) = trace.as_deref_mut() {
                t.push(value);
            }
        }
        iterations += 1;
        current = objective(terms, &theta, alphabet);
        if !changed || current - start <= opts.rel_tol * start.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    PhaseIterate {
        theta,
        objective: current,
        iterations,
    }
}

/// Best configuration among those that round every reflected term to a common
/// reference phase `psi`, over all `psi`.
///
/// Each reflected term of `c` is `conj(u_q) e^{-j theta_q}`, with phase
/// `-arg u_q - theta_q`. As `psi` turns once around the circle the rounded
/// index of element `q` changes `2^b` times, so at most `Q 2^b`
/// configurations occur; they are visited in order with O(1) updates. At a
/// maximizer every term must have the largest projection on `c` itself, so
/// the global optimum is one of these configurations up to ties.
pub fn common_phase_sweep(terms: &QuadraticFormTerms, alphabet: &PhaseAlphabet) -> Vec<u16> {
    let q = terms.elements();
    let l = alphabet.len();
    let step = TAU / l as f64;
    let round = |x: f64| ((x / step).round().rem_euclid(l as f64) as usize % l) as u16;
    let mut theta: Vec<u16> = terms.factor.iter().map(|u| round(-u.arg())).collect();
    if l == 1 || q == 0 {
        return theta;
    }

    // Element q takes index j once psi passes -arg u_q - (j + 1/2) step.
    let mut events: Vec<(f64, usize, u16)> = Vec::with_capacity(q * l);
    for (k, u) in terms.factor.iter().enumerate() {
        for j in 0..l {
            let psi = (-u.arg() - (j as f64 + 0.5) * step).rem_euclid(TAU);
            events.push((psi, k, j as u16));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let coeffs = alphabet.coefficients();
    let mut linear: Complex64 = terms
        .beta
        .iter()
        .zip(&theta)
        .map(|(b, &i)| b * coeffs[i as usize])
        .sum();
    let mut coherent: Complex64 = terms
        .factor
        .iter()
        .zip(&theta)
        .map(|(u, &i)| u * coeffs[i as usize])
        .sum();
    let value = |lin: Complex64, coh: Complex64| terms.h_abs_sq + 2.0 * lin.re + coh.norm_sqr();
    let mut best_value = value(linear, coherent);
    let mut best = theta.clone();
    for (_, k, j) in events {
        if theta[k] == j {
            continue;
        }
        let delta = coeffs[j as usize] - coeffs[theta[k] as usize];
        linear += terms.beta[k] * delta;
        coherent += terms.factor[k] * delta;
        theta[k] = j;
        let v = value(linear, coherent);
        if v > best_value {
            best_value = v;
            best.copy_from_slice(&theta);
        }
    }
    best
}

/// Global maximum by enumerating all `(2^b)^Q` grid points. The first
/// maximizer in lexicographic index order is returned.
pub fn exhaustive_oracle(terms: &QuadraticFormTerms, alphabet: &PhaseAlphabet) -> Result<(Vec<u16>, f64)> {
    let q = terms.elements();
    let states = alphabet.len() as u128;
    let points = states.checked_pow(q as u32).unwrap_or(u128::MAX);
    if points > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            points,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut theta = vec![0u16; q];
    let mut best = (theta.clone(), objective(terms, &theta, alphabet));
    let last = alphabet.len() as u16 - 1;
    loop {
        // Odometer increment, last coordinate fastest.
        let mut pos = q;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            if theta[pos] < last {
                theta[pos] += 1;
                break;
            }
            theta[pos] = 0;
        }
        let value = objective(terms, &theta, alphabet);
        if value > best.1 {
            best = (theta.clone(), value);
        }
    }
}
