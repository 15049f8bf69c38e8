//! Analytic three-level Λ model of EIT propagation.
//!
//! To lowest order in γ₀, R and δ₀ with |Ω₊|² ≈ |Ω₋|², the total intensity
//! and the relative phase φ = φ₋ − φ₊ obey
//!
//! ```text
//! d|Ω|²/dz = −κ (γ₀ + R)        dφ/dz = δ₀ κ / |Ω|²
//! ```
//!
//! With the trapping rate R taken from the local intensity gradient the first
//! equation integrates to a linear profile and R = f γ₀.

use crate::atomic::{RateUnits, ZeemanShift};
use crate::error::{Error, Result};
use crate::inference::ObservablePoint;
use crate::num::{cplx, Cplx, Real};

/// Plain inputs for [`MediumParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumSpec<T> {
    /// Atomic density, cm⁻³.
    pub density: T,
    /// Optical wavelength, cm.
    pub wavelength: T,
    pub units: RateUnits<T>,
    /// Ground coherence decay γ₀, units of γ_r.
    pub gamma_0: T,
    /// Doppler width W_d, units of γ_r.
    pub doppler_width: T,
    /// Cell length L, cm.
    pub length: T,
    /// Beam diameter d, cm.
    pub beam_diameter: T,
}

impl<T: Real> Default for MediumSpec<T> {
    fn default() -> Self {
        MediumSpec {
            density: T::lit(5e11),
            wavelength: T::lit(794.8e-7),
            units: RateUnits::default(),
            gamma_0: T::lit(0.004),
            doppler_width: T::lit(100.0),
            length: T::lit(5.0),
            beam_diameter: T::lit(0.2),
        }
    }
}

/// Validated vapor parameters with the absorption coefficient κ cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams<T> {
    spec: MediumSpec<T>,
    kappa: T,
}

/// κ = (3/8π) N λ² γ_r, returned in units of γ_r per cm.
pub fn absorption_coefficient<T: Real>(density: T, wavelength: T) -> T {
    T::lit(3.0) / (T::lit(8.0) * T::pi()) * density * wavelength * wavelength
}

impl<T: Real> MediumParams<T> {
    pub fn new(spec: MediumSpec<T>) -> Result<Self> {
        let positive = [
            ("density", spec.density),
            ("wavelength", spec.wavelength),
            ("gamma_r", spec.units.gamma_r),
            ("bohr", spec.units.bohr),
            ("doppler_width", spec.doppler_width),
            ("length", spec.length),
            ("beam_diameter", spec.beam_diameter),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(spec.gamma_0 >= T::zero()) {
            return Err(Error::NegativeRate { name: "gamma_0", value: spec.gamma_0.as_f64() });
        }
        Ok(MediumParams { kappa: absorption_coefficient(spec.density, spec.wavelength), spec })
    }

    pub fn spec(&self) -> &MediumSpec<T> {
        &self.spec
    }

    pub fn with_density(&self, density: T) -> Result<Self> {
        MediumParams::new(MediumSpec { density, ..self.spec })
    }

    pub fn with_gamma_0(&self, gamma_0: T) -> Result<Self> {
        MediumParams::new(MediumSpec { gamma_0, ..self.spec })
    }

    pub fn density(&self) -> T {
        self.spec.density
    }
    pub fn wavelength(&self) -> T {
        self.spec.wavelength
    }
    pub fn units(&self) -> &RateUnits<T> {
        &self.spec.units
    }
    pub fn gamma_0(&self) -> T {
        self.spec.gamma_0
    }
    pub fn doppler_width(&self) -> T {
        self.spec.doppler_width
    }
    pub fn length(&self) -> T {
        self.spec.length
    }
    pub fn beam_diameter(&self) -> T {
        self.spec.beam_diameter
    }
    /// κ in units of γ_r per cm.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// 2μ_B/ħ per Gauss in units of γ_r: the δ₀ produced by one Gauss.
    pub fn two_photon_larmor(&self) -> T {
        T::lit(2.0) * self.spec.units.larmor_per_gauss()
    }
}

/// Circular field components at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldState<T> {
    pub omega_plus: Cplx<T>,
    pub omega_minus: Cplx<T>,
    /// Position, cm.
    pub z: T,
}

impl<T: Real> FieldState<T> {
    /// Linear polarization with total intensity |Ω|² split evenly.
    pub fn linear(intensity: T) -> Self {
        let a = (intensity / T::lit(2.0)).sqrt();
        FieldState { omega_plus: cplx(a, T::zero()), omega_minus: cplx(a, T::zero()), z: T::zero() }
    }

    /// |Ω₊|² + |Ω₋|².
    pub fn intensity(&self) -> T {
        self.omega_plus.norm_sqr() + self.omega_minus.norm_sqr()
    }

    /// φ = φ₋ − φ₊, wrapped into (−π, π].
    pub fn relative_phase(&self) -> T {
        let w = self.omega_minus * self.omega_plus.conj();
        w.im.atan2(w.re)
    }

    pub fn conj(&self) -> Self {
        FieldState { omega_plus: self.omega_plus.conj(), omega_minus: self.omega_minus.conj(), z: self.z }
    }
}

/// Sampled intensity and phase along the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationProfile<T> {
    /// `(z [cm], |Ω|² [γ_r²], φ [rad])`.
    pub samples: Vec<(T, T, T)>,
    /// |Ω(L)|²/|Ω(0)|².
    pub transmission: T,
    /// Signed dφ(L)/dB at B → 0, rad/G.
    pub dphi_db: T,
}

fn check_intensity<T: Real>(omega0_sq: T) -> Result<()> {
    if omega0_sq > T::zero() && omega0_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("input intensity {omega0_sq} must be positive")))
    }
}

/// |Ω(z)|² from the linear closed-form profile.
pub fn propagate_closed_form<T: Real>(medium: &MediumParams<T>, omega0_sq: T, f: T, z: T) -> Result<T> {
    check_intensity(omega0_sq)?;
    if f < T::zero() {
        return Err(Error::input("trapping function f must be non-negative"));
    }
    if z < T::zero() || z > medium.length() {
        return Err(Error::input(format!("z = {z} outside [0, {}]", medium.length())));
    }
    let loss_rate = medium.gamma_0() * medium.kappa() * (T::one() + f);
    let ratio = T::one() - loss_rate * z / omega0_sq;
    if ratio <= T::zero() {
        return Err(Error::Bleached { z: z.as_f64(), zero_at: (omega0_sq / loss_rate).as_f64() });
    }
    Ok(omega0_sq * ratio)
}

/// |dφ/dB| at B → 0 in rad/G for a given transmission.
pub fn rotation_slope<T: Real>(medium: &MediumParams<T>, transmission: T, f: T) -> Result<T> {
    if !(transmission > T::zero() && transmission <= T::one()) {
        return Err(Error::input(format!("transmission {transmission} outside (0, 1]")));
    }
    if transmission == T::one() {
        return Ok(T::zero());
    }
    let decay = medium.gamma_0() * (T::one() + f);
    if decay <= T::zero() {
        return Err(Error::ZeroDecay { transmission: transmission.as_f64() });
    }
    Ok(medium.two_photon_larmor() / decay * (T::one() / transmission).ln())
}

/// Outcome of the Doppler-free validity test `min|Ω| ≥ c · W_d √(γ₀/γ_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerFreeCheck<T> {
    pub holds: bool,
    /// `min|Ω| / (W_d √γ₀)`; infinite when γ₀ = 0.
    pub ratio: T,
    /// Holds, but by less than a factor of three over the margin.
    pub marginal: bool,
}

pub const DEFAULT_VALIDITY_MARGIN: f64 = 1.0;

pub fn doppler_free_boundary<T: Real>(medium: &MediumParams<T>) -> T {
    medium.doppler_width() * medium.gamma_0().sqrt()
}

pub fn doppler_free_predicate<T: Real>(medium: &MediumParams<T>, omega_sq_min: T, margin: T) -> DopplerFreeCheck<T> {
    let boundary = doppler_free_boundary(medium);
    let ratio = if boundary == T::zero() {
        T::max_value().unwrap_or_else(|| T::lit(f64::MAX))
    } else {
        omega_sq_min.max(T::zero()).sqrt() / boundary
    };
    let holds = omega_sq_min > T::zero() && ratio >= margin;
    DopplerFreeCheck { holds, ratio, marginal: holds && ratio < T::lit(3.0) * margin }
}

/// Transmission, rotation slope and γ₀+R for one density.
pub fn forward_observables<T: Real>(medium: &MediumParams<T>, omega0_sq: T, f: T) -> Result<ObservablePoint<T>> {
    let end = propagate_closed_form(medium, omega0_sq, f, medium.length())?;
    let transmission = end / omega0_sq;
    let slope = rotation_slope(medium, transmission, f)?;
    Ok(ObservablePoint {
        n: medium.density(),
        transmission,
        slope,
        gamma_eff: Some(medium.gamma_0() * (T::one() + f)),
    })
}

/// Closed-form profile sampled at `samples` evenly spaced points, at field `b`.
pub fn analytic_profile<T: Real>(
    medium: &MediumParams<T>,
    omega0_sq: T,
    f: T,
    zeeman: &ZeemanShift<T>,
    samples: usize,
) -> Result<PropagationProfile<T>> {
    if samples < 2 {
        return Err(Error::input("need at least two samples"));
    }
    let decay = medium.gamma_0() * (T::one() + f);
    let step = medium.length() / T::lit((samples - 1) as f64);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let z = if k + 1 == samples { medium.length() } else { step * T::lit(k as f64) };
        let i = propagate_closed_form(medium, omega0_sq, f, z)?;
        let phase = if decay > T::zero() {
            zeeman.delta0 / decay * (omega0_sq / i).ln()
        } else {
            zeeman.delta0 * medium.kappa() * z / omega0_sq
        };
        out.push((z, i, phase));
    }
    let transmission = out[samples - 1].1 / omega0_sq;
    let dphi_db = -rotation_slope(medium, transmission, f)?;
    Ok(PropagationProfile { samples: out, transmission, dphi_db })
}
