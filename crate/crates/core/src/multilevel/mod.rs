//! Doppler-broadened multilevel density-matrix model with z-stepped field
//! propagation.

pub mod liouvillian;
pub mod propagate;

pub use liouvillian::{
    build_liouvillian, laser_excitation_rate, leak_flux, polarizations, scattered_power, steady_state, DensityMatrix,
    Liouvillian, SteadyState,
};
pub use propagate::{
    doppler_average, observables_vs_density, solve_velocity_classes, DecaySchedule, MultilevelForward, Propagator,
    SteadyStateResult,
};

use crate::atomic::RateUnits;
use crate::error::{Error, Result};
use crate::num::Real;

pub const DEFAULT_VELOCITY_CLASSES: usize = 101;
/// Grid half-span in units of W_d.
pub const DEFAULT_GRID_SPAN: f64 = 4.0;
/// |δ₀| at the finite-difference field step, as a fraction of γ_eff.
pub const B_STEP_FRACTION: f64 = 0.02;
/// Largest tolerated relative intensity change across one z step.
pub const MAX_STEP_CHANGE: f64 = 0.1;

/// Velocity classes as `(detuning shift [γ_r], weight)` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid<T> {
    classes: Vec<(T, T)>,
}

impl<T: Real> VelocityGrid<T> {
    /// Evenly spaced classes over ±`span`·W_d, weighted by exp(−δ²/W_d²).
    pub fn gaussian(doppler_width: T, count: usize, span: T) -> Result<Self> {
        if count == 0 {
            return Err(Error::input("velocity grid needs at least one class"));
        }
        if count == 1 {
            return Ok(Self::single());
        }
        if !(doppler_width > T::zero()) || !(span > T::zero()) {
            return Err(Error::input("Doppler width and grid span must be positive"));
        }
        let half = span * doppler_width;
        let step = T::lit(2.0) * half / T::lit((count - 1) as f64);
        let mut classes: Vec<(T, T)> = (0..count)
            .map(|k| {
                let d = -half + step * T::lit(k as f64);
                let x = d / doppler_width;
                (d, (-x * x).exp())
            })
            .collect();
        // Pin the mirror pairs so the grid is exactly symmetric.
        for k in 0..count / 2 {
            let (d, w) = classes[k];
            classes[count - 1 - k] = (-d, w);
        }
        if count % 2 == 1 {
            classes[count / 2].0 = T::zero();
        }
        let total = classes.iter().fold(T::zero(), |acc, c| acc + c.1);
        for c in &mut classes {
            c.1 /= total;
        }
        Self::from_classes(classes)
    }

    pub fn single() -> Self {
        VelocityGrid { classes: vec![(T::zero(), T::one())] }
    }

    pub fn from_classes(classes: Vec<(T, T)>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::input("velocity grid is empty"));
        }
        let total = classes.iter().fold(T::zero(), |acc, c| acc + c.1);
        let tol = T::lit(1e-10).max(T::lit(1e3) * Real::epsilon());
        if (total - T::one()).abs() > tol || classes.iter().any(|c| c.1 < T::zero()) {
            return Err(Error::input(format!("velocity weights must be non-negative and sum to 1 (got {total})")));
        }
        Ok(VelocityGrid { classes })
    }

    pub fn classes(&self) -> &[(T, T)] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub velocity_grid: VelocityGrid<T>,
    pub z_steps: usize,
    /// Finite-difference field step in Gauss; derived from γ_eff when absent.
    pub b_step: Option<T>,
    /// Laser offset from the F′=1 line center, units of γ_r.
    pub laser_detuning: T,
    /// Transit decay γ_t, identified with γ₀ + R when R is folded in.
    pub gamma_eff: T,
    /// Explicit incoherent pumping R, units of γ_r.
    pub pumping_rate: T,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(velocity_grid: VelocityGrid<T>, z_steps: usize, gamma_eff: T) -> Self {
        SolverConfig {
            velocity_grid,
            z_steps,
            b_step: None,
            laser_detuning: T::zero(),
            gamma_eff,
            pumping_rate: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_steps < 2 {
            return Err(Error::input(format!("z_steps = {} must be at least 2", self.z_steps)));
        }
        if !(self.gamma_eff >= T::zero()) {
            return Err(Error::NegativeRate { name: "gamma_eff", value: self.gamma_eff.as_f64() });
        }
        if !(self.pumping_rate >= T::zero()) {
            return Err(Error::NegativeRate { name: "pumping_rate", value: self.pumping_rate.as_f64() });
        }
        if let Some(b) = self.b_step {
            if !(b > T::zero()) {
                return Err(Error::input(format!("b_step = {b} must be positive")));
            }
        }
        Ok(())
    }

    /// Field step giving |δ₀| = 0.02 γ_eff unless overridden.
    pub fn field_step(&self, units: &RateUnits<T>) -> Result<T> {
        if let Some(b) = self.b_step {
            return Ok(b);
        }
        if self.gamma_eff <= T::zero() {
            return Err(Error::input("b_step must be set explicitly when gamma_eff = 0"));
        }
        Ok(T::lit(B_STEP_FRACTION) * self.gamma_eff / (T::lit(2.0) * units.larmor_per_gauss()))
    }
}
