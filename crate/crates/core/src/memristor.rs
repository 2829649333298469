//! Single-device model: memristance as a bounded linear function of the
//! charge that has passed through the device.
//!
//! A site starts in its low-resistance state `r_on` and its memristance
//! grows as `r_on + r_off * r_on * beta * q` until it saturates at `r_off`,
//! at which point the site is depleted. Only the charge `q` is stored; the
//! memristance is always recomputed from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device constants for one resource site, in reduced units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorParams {
    pub r_on: f64,
    pub r_off: f64,
    pub beta: f64,
}

impl MemristorParams {
    pub fn new(r_on: f64, r_off: f64, beta: f64) -> Result<Self> {
        let params = Self { r_on, r_off, beta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_on.is_finite() && self.r_on > 0.0) {
            return Err(Error::InvalidParams(format!("r_on must be positive, got {}", self.r_on)));
        }
        if !(self.r_off.is_finite() && self.r_off >= self.r_on) {
            return Err(Error::InvalidParams(format!(
                "r_off must satisfy r_on <= r_off, got r_on={} r_off={}",
                self.r_on, self.r_off
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// Memristance before the `r_off` bound is applied.
    pub fn unbounded_memristance(&self, q: f64) -> f64 {
        self.r_on + self.r_off * self.r_on * self.beta * q
    }

    /// Bounded memristance at charge `q`. Exactly `r_off` from the depletion
    /// charge onwards.
    pub fn memristance(&self, q: f64) -> f64 {
        if q >= self.depletion_charge() {
            self.r_off
        } else {
            self.unbounded_memristance(q).min(self.r_off)
        }
    }

    /// Charge at which the memristance first reaches `r_off`:
    /// `(r_off - r_on) / (beta * r_on * r_off)`.
    pub fn depletion_charge(&self) -> f64 {
        (self.r_off - self.r_on) / (self.beta * self.r_on * self.r_off)
    }
}

/// Evolving state of one resource site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemristorState {
    pub label: String,
    pub params: MemristorParams,
    /// Accumulated charge. Keeps growing after depletion.
    pub q: f64,
    pub clamped: bool,
}

impl MemristorState {
    pub fn new(label: impl Into<String>, params: MemristorParams) -> Self {
        let mut state = Self { label: label.into(), params, q: 0.0, clamped: false };
        state.clamped = state.reached_depletion();
        state
    }

    pub fn memristance(&self) -> f64 {
        self.params.memristance(self.q)
    }

    pub fn depletion_charge(&self) -> f64 {
        self.params.depletion_charge()
    }

    /// Charge still needed before the site depletes; zero once clamped.
    pub fn charge_to_depletion(&self) -> f64 {
        (self.depletion_charge() - self.q).max(0.0)
    }

    fn reached_depletion(&self) -> bool {
        self.q >= self.depletion_charge()
    }

    /// Integrates a constant `current` over `dt`. Charge continues to flow
    /// through a depleted device; only its memristance stays at `r_off`.
    pub fn accumulate(&self, current: f64, dt: f64) -> Result<Self> {
        if current < 0.0 || current.is_nan() {
            return Err(Error::NegativeCurrent(current));
        }
        if dt <= 0.0 || dt.is_nan() {
            return Err(Error::NonPositiveStep(dt));
        }
        let mut next = self.clone();
        next.q += current * dt;
        next.clamped = next.clamped || next.reached_depletion();
        Ok(next)
    }

    /// Marks the device depleted with its charge pinned to the depletion
    /// charge. Used when an integrator locates the crossing exactly.
    pub(crate) fn snap_to_depletion(&mut self) {
        self.q = self.q.max(self.depletion_charge());
        self.clamped = true;
    }
}
