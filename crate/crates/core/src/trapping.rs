//! Two-level radiation-trapping rate model.
//!
//! A thermal reservoir with mean photon number n̄_th pumps the ground state
//! incoherently. n̄_th itself is fed by atomic decay (rate r_a) and drained by
//! photon escape (rate r_e). The density dependence of trapping is carried by
//! f(N), defined through r_a/r_e = f/(1+f).

use crate::error::{Error, Result};
use crate::lambda::MediumParams;
use crate::num::Real;

/// Populations of a two-level atom and the reservoir photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirState<T> {
    pub n_th: T,
    pub rho_aa: T,
    pub rho_bb: T,
}

impl<T: Real> ReservoirState<T> {
    pub fn new(rho_aa: T, n_th: T) -> Result<Self> {
        let s = ReservoirState { n_th, rho_aa, rho_bb: T::one() - rho_aa };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !(self.n_th >= T::zero()) {
            return Err(Error::InvalidState(format!("n_th = {} is negative", self.n_th)));
        }
        if !unit(self.rho_aa) || !unit(self.rho_bb) {
            return Err(Error::InvalidState(format!(
                "populations ({}, {}) outside [0, 1]",
                self.rho_aa, self.rho_bb
            )));
        }
        let tol = T::lit(16.0) * Real::epsilon();
        if (self.rho_aa + self.rho_bb - T::one()).abs() > tol {
            return Err(Error::InvalidState("populations do not sum to one".into()));
        }
        Ok(())
    }
}

/// Time derivatives `(dρ_aa/dt, dρ_bb/dt, dn̄_th/dt)`.
///
/// The ground-state derivative is returned explicitly so callers can check
/// that the total population is conserved.
pub fn reservoir_rhs<T: Real>(
    state: &ReservoirState<T>,
    gamma_r: T,
    r_e: T,
    r_a: T,
) -> Result<(T, T, T)> {
    state.validate()?;
    for (name, v) in [("gamma_r", gamma_r), ("r_e", r_e), ("r_a", r_a)] {
        if v < T::zero() {
            return Err(Error::NegativeRate { name, value: v.as_f64() });
        }
    }
    let two = T::lit(2.0);
    let d_aa = -two * gamma_r * (state.n_th + T::one()) * state.rho_aa + two * gamma_r * state.n_th * state.rho_bb;
    let d_n = -r_e * state.n_th + r_a * state.rho_aa;
    Ok((d_aa, -d_aa, d_n))
}

/// Steady reservoir occupation n̄_th = r_a ρ_aa / r_e.
pub fn steady_n_th<T: Real>(rho_aa: T, r_e: T, r_a: T) -> Result<T> {
    if r_e <= T::zero() {
        return Err(Error::input("photon escape rate must be positive"));
    }
    Ok(r_a * rho_aa / r_e)
}

/// Excited population in equilibrium with a fixed reservoir, n̄/(2n̄+1).
pub fn steady_rho_aa<T: Real>(n_th: T) -> T {
    n_th / (T::lit(2.0) * n_th + T::one())
}

/// Attracting fixed point of the free atom–reservoir pair (no laser).
///
/// With `s = r_a/r_e`, eliminating n̄_th = sρ gives ρ(2sρ + 1 − s) = 0. For
/// `s < 1` only the dark state survives; `s > 1` would be a self-sustaining
/// photon gas, which is why physical media have r_e > r_a.
pub fn coupled_fixed_point<T: Real>(r_e: T, r_a: T) -> Result<ReservoirState<T>> {
    if r_e <= T::zero() {
        return Err(Error::input("photon escape rate must be positive"));
    }
    let s = r_a / r_e;
    if s <= T::one() {
        return ReservoirState::new(T::zero(), T::zero());
    }
    let rho = (s - T::one()) / (T::lit(2.0) * s);
    ReservoirState::new(rho, s * rho)
}

/// Incoherent pumping rate from the local intensity gradient.
pub fn pumping_rate_from_gradient<T: Real>(intensity_gradient: T, kappa: T, f: T) -> Result<T> {
    if kappa <= T::zero() {
        return Err(Error::input("kappa must be positive"));
    }
    if f < T::zero() {
        return Err(Error::input("trapping function f must be non-negative"));
    }
    if intensity_gradient > T::zero() {
        return Err(Error::input("positive intensity gradient (gain) is outside the model"));
    }
    Ok(-(f / (T::one() + f)) * intensity_gradient / kappa)
}

/// Density dependence of trapping:
/// `f(N) = a₁ (N − N_th)₊ + a₂ N_beam ((N − N_beam)₊ / N_beam)^p`.
///
/// For `p = 1` the second term is simply `a₂ (N − N_beam)₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingModel<T> {
    /// Onset of trapping on the cell scale, cm⁻³.
    pub n_threshold: T,
    /// Onset of reabsorption inside the beam, cm⁻³.
    pub n_beam: T,
    /// a₁, cm³.
    pub slope_low: T,
    /// a₂, cm³.
    pub slope_high: T,
    pub exponent: T,
    /// Photon escape rate r_e in units of γ_r.
    pub escape_rate: T,
}

impl<T: Real> Default for TrappingModel<T> {
    fn default() -> Self {
        TrappingModel {
            n_threshold: T::lit(5e10),
            n_beam: T::lit(5e11),
            slope_low: T::lit(1e-12),
            slope_high: T::lit(5e-13),
            exponent: T::one(),
            escape_rate: T::one(),
        }
    }
}

impl<T: Real> TrappingModel<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_threshold >= T::zero()
            && self.n_beam > T::zero()
            && self.slope_low >= T::zero()
            && self.slope_high >= T::zero()
            && self.exponent > T::zero()
            && self.escape_rate > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::input("trapping parameters must be non-negative (N_beam, p, r_e positive)"))
        }
    }

    /// Reabsorption rate r_a = r_e f/(1+f) at density `n`.
    pub fn reabsorption_rate(&self, n: T) -> Result<T> {
        let f = f_of_n(n, self)?;
        Ok(self.escape_rate * f / (T::one() + f))
    }
}

pub fn f_of_n<T: Real>(n: T, model: &TrappingModel<T>) -> Result<T> {
    if !(n >= T::zero()) {
        return Err(Error::input(format!("density {n} must be non-negative")));
    }
    let low = (n - model.n_threshold).max(T::zero());
    let high = (n - model.n_beam).max(T::zero());
    let second = if high > T::zero() {
        model.n_beam * (high / model.n_beam).powf(model.exponent)
    } else {
        T::zero()
    };
    Ok(model.slope_low * low + model.slope_high * second)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport<T> {
    pub n: T,
    pub optical_depth: T,
    pub trapped: bool,
}

fn depth_per_density<T: Real>(medium: &MediumParams<T>) -> T {
    let three_over_8pi = T::lit(3.0) / (T::lit(8.0) * T::pi());
    three_over_8pi * medium.wavelength() * medium.wavelength() * medium.beam_diameter() / medium.doppler_width()
}

/// Optical depth `(3/8π) N λ² d γ_r/W_d` and whether it exceeds one.
pub fn optical_thickness_threshold<T: Real>(medium: &MediumParams<T>) -> ThresholdReport<T> {
    let optical_depth = depth_per_density(medium) * medium.density();
    ThresholdReport { n: medium.density(), optical_depth, trapped: optical_depth > T::one() }
}

/// Density at which the optical depth above equals one.
pub fn threshold_density<T: Real>(medium: &MediumParams<T>) -> T {
    T::one() / depth_per_density(medium)
}

/// Spin-exchange coherence decay N σ v̄ in units of γ_r.
///
/// `gamma_r` is in rad/s, density in cm⁻³, cross section in cm², speed in cm/s.
pub fn spin_exchange_decay<T: Real>(n: T, cross_section: T, relative_speed: T, gamma_r: T) -> T {
    n * cross_section * relative_speed / gamma_r
}

const BOLTZMANN: f64 = 1.380649e-23;
const RB87_MASS: f64 = 1.443160648e-25;
const TORR_TO_PA: f64 = 133.322368;
const RB_MELTING_POINT: f64 = 312.46;

/// Mean relative speed of two Rb-87 atoms at temperature `kelvin`, in cm/s.
pub fn thermal_relative_speed<T: Real>(kelvin: T) -> T {
    // v_rel = sqrt(8kT/(πμ)) with μ = m/2.
    let si = (T::lit(16.0 * BOLTZMANN) * kelvin / (T::pi() * T::lit(RB87_MASS))).sqrt();
    si * T::lit(100.0)
}

/// Saturated Rb vapor density (cm⁻³) at `kelvin`, standard two-phase fit.
pub fn rb_vapor_density<T: Real>(kelvin: T) -> T {
    let t = kelvin.as_f64();
    let log10_torr = if t < RB_MELTING_POINT {
        -94.04826 - 1961.258 / t - 0.03771687 * t + 42.57526 * t.log10()
    } else {
        15.88253 - 4529.635 / t + 0.00058663 * t - 2.99138 * t.log10()
    };
    let pascal = 10f64.powf(log10_torr) * TORR_TO_PA;
    T::lit(pascal / (BOLTZMANN * t) * 1e-6)
}

/// Inverts [`rb_vapor_density`] by bisection over 200–800 K.
pub fn rb_temperature_for_density<T: Real>(n: T) -> Result<T> {
    let target = n.as_f64();
    let (mut lo, mut hi) = (200.0f64, 800.0f64);
    let dens = |t: f64| rb_vapor_density::<f64>(t);
    if !(target > dens(lo) && target < dens(hi)) {
        return Err(Error::input(format!("density {target:e} outside the vapor-pressure table")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dens(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5 * (lo + hi)))
}
