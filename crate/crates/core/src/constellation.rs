//! Biased (non-negative) PAM and the spatial-modulation bit mapping.
//!
//! Bits are split antenna-first, big-endian natural binary, no Gray labeling.

use crate::error::{config_err, ConfigError};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ConstellationSpec<T> {
    order: usize,
    e_min: T,
    amplitudes: Vec<T>,
    energies: Vec<T>,
    thresholds: Vec<T>,
}

/// One SM transmission: which antenna is lit and which amplitude it sends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmSymbol {
    pub antenna: usize,
    pub symbol: usize,
}

impl SmSymbol {
    pub fn new(antenna: usize, symbol: usize) -> Self {
        Self { antenna, symbol }
    }
}

pub fn build_biased_pam<T: Real>(order: usize, e_min: T) -> Result<ConstellationSpec<T>, ConfigError> {
    if order < 2 || !order.is_power_of_two() {
        return config_err(format!("modulation order must be a power of two >= 2, got {order}"));
    }
    if !(e_min > T::zero()) || !e_min.is_finite() {
        return config_err(format!("e_min must be positive and finite, got {e_min}"));
    }
    let step = e_min.sqrt();
    let amplitudes: Vec<T> = (0..order).map(|m| T::from_count(m) * step).collect();
    let energies: Vec<T> = (0..order).map(|m| T::from_count(m * m) * e_min).collect();
    let thresholds = energies
        .windows(2)
        .map(|w| (w[0] + w[1]) * T::lit(0.5))
        .collect();
    Ok(ConstellationSpec { order, e_min, amplitudes, energies, thresholds })
}

impl<T: Real> ConstellationSpec<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn e_min(&self) -> T {
        self.e_min
    }

    /// m·√E_min for m = 0..M.
    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    /// m²·E_min for m = 0..M.
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Midpoints between adjacent energies (M − 1 of them).
    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn average_energy(&self) -> T {
        average_energy(self)
    }

    /// E_av / E_min = (M−1)(2M−1)/6.
    pub fn energy_ratio(&self) -> T {
        let m = self.order;
        T::from_count((m - 1) * (2 * m - 1)) / T::lit(6.0)
    }
}

/// (M−1)(2M−1)·E_min/6, the mean of the energy levels.
pub fn average_energy<T: Real>(spec: &ConstellationSpec<T>) -> T {
    spec.energy_ratio() * spec.e_min
}

fn log2_exact(n: usize, what: &str) -> Result<usize, ConfigError> {
    if n == 0 || !n.is_power_of_two() {
        return config_err(format!("{what} must be a power of two, got {n}"));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Bits per SM symbol: log₂N_t + log₂M.
pub fn sm_bits_per_symbol(n_t: usize, order: usize) -> Result<usize, ConfigError> {
    Ok(log2_exact(n_t, "n_t")? + log2_exact(order, "modulation order")?)
}

fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

pub fn sm_map(bits: &[bool], n_t: usize, order: usize) -> Result<SmSymbol, ConfigError> {
    let ant_bits = log2_exact(n_t, "n_t")?;
    let sym_bits = log2_exact(order, "modulation order")?;
    if bits.len() != ant_bits + sym_bits {
        return config_err(format!(
            "SM symbol needs {} bits, got {}",
            ant_bits + sym_bits,
            bits.len()
        ));
    }
    let (a, s) = bits.split_at(ant_bits);
    Ok(SmSymbol::new(bits_to_index(a), bits_to_index(s)))
}

pub fn sm_demap(sym: SmSymbol, n_t: usize, order: usize) -> Result<Vec<bool>, ConfigError> {
    let ant_bits = log2_exact(n_t, "n_t")?;
    let sym_bits = log2_exact(order, "modulation order")?;
    if sym.antenna >= n_t || sym.symbol >= order {
        return config_err(format!(
            "symbol ({}, {}) out of range for n_t={n_t}, M={order}",
            sym.antenna, sym.symbol
        ));
    }
    let mut out = Vec::with_capacity(ant_bits + sym_bits);
    out.extend((0..ant_bits).rev().map(|k| (sym.antenna >> k) & 1 == 1));
    out.extend((0..sym_bits).rev().map(|k| (sym.symbol >> k) & 1 == 1));
    Ok(out)
}
