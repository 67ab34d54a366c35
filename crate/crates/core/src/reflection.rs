//! Discrete phase alphabet, reflection schedules and the per-slot overall gain.
//!
//! Phases are stored as integer indices `l` into the alphabet
//! `{2 pi l / 2^b}`; reflection coefficients `exp(j 2 pi l / 2^b)` are only
//! materialized when a gain is evaluated.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported resolution in bits per meta-atom.
pub const MAX_PHASE_BITS: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseAlphabet {
    bits: u32,
}

impl PhaseAlphabet {
    pub fn new(bits: u32) -> Result<Self> {
        if bits > MAX_PHASE_BITS {
            return Err(Error::Config(format!(
                "phase resolution {bits} bits exceeds {MAX_PHASE_BITS}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of phase states, `2^b`.
    pub fn len(&self) -> usize {
        1usize << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: u16) -> bool {
        (index as usize) < self.len()
    }

    /// Phase of state `index` in radians.
    pub fn phase(&self, index: u16) -> f64 {
        2.0 * PI * index as f64 / self.len() as f64
    }

    /// Reflection coefficient `exp(j * phase)`.
    pub fn coefficient(&self, index: u16) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(index))
    }

    pub fn phases(&self) -> Vec<f64> {
        (0..self.len() as u16).map(|l| self.phase(l)).collect()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.len() as u16).map(|l| self.coefficient(l)).collect()
    }
}

impl Default for PhaseAlphabet {
    /// Two bits: `{1, j, -1, -j}`.
    fn default() -> Self {
        Self { bits: 2 }
    }
}

/// Phase indices for `Q` meta-atoms over `M` slots, stored slot by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReflectionSchedule {
    elements: usize,
    slots: usize,
    indices: Vec<u16>,
}

impl ReflectionSchedule {
    /// Builds a schedule from per-slot index vectors.
    pub fn from_slots(slots: Vec<Vec<u16>>, alphabet: &PhaseAlphabet) -> Result<Self> {
        let Some(first) = slots.first() else {
            return Err(Error::DimensionMismatch("a schedule needs at least one slot".into()));
        };
        let elements = first.len();
        if let Some(m) = slots.iter().position(|s| s.len() != elements) {
            return Err(Error::DimensionMismatch(format!(
                "slot {m} has {} entries, expected {elements}",
                slots[m].len()
            )));
        }
        if slots.iter().flatten().any(|&l| !alphabet.contains(l)) {
            return Err(Error::Config("schedule index outside the phase alphabet".into()));
        }
        Ok(Self {
            elements,
            slots: slots.len(),
            indices: slots.concat(),
        })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Reflection vector of slot `m`.
    pub fn slot(&self, m: usize) -> &[u16] {
        &self.indices[m * self.elements..(m + 1) * self.elements]
    }

    pub fn get(&self, q: usize, m: usize) -> u16 {
        self.indices[m * self.elements + q]
    }

    /// Writes the schedule as a `Q x M` integer CSV matrix, one meta-atom per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let slots = self.slots();
        for q in 0..self.elements {
            let row: Vec<String> = (0..slots).map(|m| self.get(q, m).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Every entry drawn independently and uniformly over the alphabet.
pub fn random_schedule<R: Rng + ?Sized>(
    elements: usize,
    slots: usize,
    alphabet: &PhaseAlphabet,
    rng: &mut R,
) -> ReflectionSchedule {
    let slots = slots.max(1);
    let states = alphabet.len() as u32;
    let indices = (0..elements * slots)
        .map(|_| {
            if states == 1 {
                0
            } else {
                rng.random_range(0..states) as u16
            }
        })
        .collect();
    ReflectionSchedule {
        elements,
        slots,
        indices,
    }
}

/// The slowly-varying case: the same reflection vector in every slot.
pub fn constant_schedule(gamma: &[u16], slots: usize) -> ReflectionSchedule {
    let slots = slots.max(1);
    ReflectionSchedule {
        elements: gamma.len(),
        slots,
        indices: gamma.repeat(slots),
    }
}

/// `c = h_k + g^H conj(Gamma) f_k = h_k + sum_q conj(g_q) conj(gamma_q) f_{k,q}`.
pub fn overall_gain(
    h: Complex64,
    g: &[Complex64],
    f: &[Complex64],
    gamma: &[u16],
    alphabet: &PhaseAlphabet,
) -> Complex64 {
    debug_assert_eq!(g.len(), f.len());
    debug_assert_eq!(g.len(), gamma.len());
    h + g
        .iter()
        .zip(f)
        .zip(gamma)
        .map(|((gq, fq), &l)| gq.conj() * alphabet.coefficient(l).conj() * fq)
        .sum::<Complex64>()
}

/// Per-user cascaded coefficients `conj(g_q) f_{k,q}` precomputed for one
/// block, so a slot gain costs one pass over `Q` with a table lookup.
#[derive(Debug, Clone)]
pub struct CascadedPaths {
    direct: Vec<Complex64>,
    cascaded: Vec<Vec<Complex64>>,
    conj_table: Vec<Complex64>,
}

impl CascadedPaths {
    pub fn new(h: &[Complex64], g: &[Complex64], f: &[Vec<Complex64>], alphabet: &PhaseAlphabet) -> Self {
        let cascaded = f
            .iter()
            .map(|fk| g.iter().zip(fk).map(|(gq, fq)| gq.conj() * fq).collect())
            .collect();
        Self {
            direct: h.to_vec(),
            cascaded,
            conj_table: alphabet.coefficients().iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.direct.len()
    }

    pub fn gain(&self, user: usize, gamma: &[u16]) -> Complex64 {
        self.direct[user]
            + self.cascaded[user]
                .iter()
                .zip(gamma)
                .map(|(w, &l)| w * self.conj_table[l as usize])
                .sum::<Complex64>()
    }

    /// `|c_k|^2` for every user under reflection vector `gamma`.
    pub fn gains_sq(&self, gamma: &[u16]) -> Vec<f64> {
        (0..self.users()).map(|k| self.gain(k, gamma).norm_sqr()).collect()
    }
}
