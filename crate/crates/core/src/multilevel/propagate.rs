//! Slowly-varying-envelope propagation through the multilevel medium:
//! dΩ_q/dz = iκ ⟨P_q⟩, with ⟨·⟩ the Doppler average of the steady state.

use rayon::prelude::*;

use crate::atomic::{zeeman_splitting, LevelScheme, ZeemanShift};
use crate::error::{Error, Result};
use crate::inference::{ForwardModel, ObservablePoint};
use crate::lambda::{FieldState, MediumParams, PropagationProfile};
use crate::multilevel::liouvillian::{
    build_liouvillian, laser_excitation_rate, polarizations, scattered_power, steady_state, DensityMatrix,
};
use crate::multilevel::{SolverConfig, MAX_STEP_CHANGE};
use crate::num::{cplx, Cplx, Real};
use crate::trapping::{f_of_n, TrappingModel};

/// Doppler-averaged medium response at one position.
#[derive(Debug, Clone)]
pub struct SteadyStateResult<T: Real> {
    /// Steady state of each velocity class, in grid order.
    pub rho: Vec<DensityMatrix<T>>,
    pub polarization_plus: Cplx<T>,
    pub polarization_minus: Cplx<T>,
    /// Averaged −(d|Ω|²/dz)/κ.
    pub excitation_rate: T,
    /// Averaged Γ Σ ρ_ee.
    pub scattered_power: T,
}

/// Weighted sum of per-class polarizations, accumulated in grid order.
pub fn doppler_average<T: Real>(per_class: &[(Cplx<T>, Cplx<T>)], weights: &[T]) -> Result<(Cplx<T>, Cplx<T>)> {
    if per_class.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: per_class.len() });
    }
    let zero = cplx(T::zero(), T::zero());
    Ok(per_class
        .iter()
        .zip(weights)
        .fold((zero, zero), |acc, (p, &w)| (acc.0 + p.0 * w, acc.1 + p.1 * w)))
}

pub fn solve_velocity_classes<T: Real>(
    scheme: &LevelScheme<T>,
    fields: &FieldState<T>,
    shift: &ZeemanShift<T>,
    config: &SolverConfig<T>,
) -> Result<SteadyStateResult<T>> {
    let classes = config.velocity_grid.classes();
    let solved: Vec<DensityMatrix<T>> = classes
        .par_iter()
        .map(|&(dv, _)| Ok(steady_state(&build_liouvillian(scheme, fields, shift, dv, config)?)?.rho))
        .collect::<Result<_>>()?;
    let per_class: Vec<_> = solved.iter().map(|r| polarizations(scheme, r)).collect();
    let weights: Vec<T> = classes.iter().map(|c| c.1).collect();
    let (pp, pm) = doppler_average(&per_class, &weights)?;
    let mut excitation = T::zero();
    let mut scattered = T::zero();
    for (r, &w) in solved.iter().zip(&weights) {
        excitation += w * laser_excitation_rate(scheme, fields, r);
        scattered += w * scattered_power(scheme, r);
    }
    Ok(SteadyStateResult {
        rho: solved,
        polarization_plus: pp,
        polarization_minus: pm,
        excitation_rate: excitation,
        scattered_power: scattered,
    })
}

/// Fields and unwrapped relative phase at the cell exit, plus the samples.
#[derive(Debug, Clone)]
pub struct FieldTrace<T> {
    /// `(z, |Ω|², φ)` at every step boundary.
    pub samples: Vec<(T, T, T)>,
    pub output: FieldState<T>,
}

/// Propagation problem: scheme, medium and solver settings.
#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    scheme: LevelScheme<T>,
    medium: MediumParams<T>,
    config: SolverConfig<T>,
}

fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x % two_pi;
    if y > T::pi() {
        y -= two_pi;
    } else if y <= -T::pi() {
        y += two_pi;
    }
    y
}

impl<T: Real> Propagator<T> {
    pub fn new(scheme: LevelScheme<T>, medium: MediumParams<T>, config: SolverConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Propagator { scheme, medium, config })
    }

    pub fn scheme(&self) -> &LevelScheme<T> {
        &self.scheme
    }
    pub fn medium(&self) -> &MediumParams<T> {
        &self.medium
    }
    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    pub fn with_medium(&self, medium: MediumParams<T>) -> Self {
        Propagator { medium, ..self.clone() }
    }

    pub fn with_config(&self, config: SolverConfig<T>) -> Result<Self> {
        Propagator::new(self.scheme.clone(), self.medium, config)
    }

    /// dΩ/dz as `(dΩ₊/dz, dΩ₋/dz)`.
    fn derivative(&self, fields: &FieldState<T>, shift: &ZeemanShift<T>) -> Result<(Cplx<T>, Cplx<T>)> {
        let r = solve_velocity_classes(&self.scheme, fields, shift, &self.config)?;
        let ik = cplx(T::zero(), self.medium.kappa());
        Ok((ik * r.polarization_plus, ik * r.polarization_minus))
    }

    /// RK4 in z at field `b` with `z_steps` equal steps.
    pub fn trace(&self, input: &FieldState<T>, b: T) -> Result<FieldTrace<T>> {
        self.trace_with_steps(input, b, self.config.z_steps)
    }

    fn trace_with_steps(&self, input: &FieldState<T>, b: T, steps: usize) -> Result<FieldTrace<T>> {
        let i0 = input.intensity();
        if !(i0 > T::zero()) {
            return Err(Error::input("input intensity must be positive"));
        }
        let shift = zeeman_splitting(b, self.medium.units());
        let h = self.medium.length() / T::lit(steps as f64);
        let half = h / T::lit(2.0);
        let mut state = FieldState { z: T::zero(), ..*input };
        let mut phase = T::zero();
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push((T::zero(), i0, phase));
        let at = |s: &FieldState<T>, d: (Cplx<T>, Cplx<T>), scale: T| FieldState {
            omega_plus: s.omega_plus + d.0 * scale,
            omega_minus: s.omega_minus + d.1 * scale,
            z: s.z,
        };
        for k in 0..steps {
            let k1 = self.derivative(&state, &shift)?;
            let k2 = self.derivative(&at(&state, k1, half), &shift)?;
            let k3 = self.derivative(&at(&state, k2, half), &shift)?;
            let k4 = self.derivative(&at(&state, k3, h), &shift)?;
            let six = T::lit(6.0);
            let two = T::lit(2.0);
            let next = FieldState {
                omega_plus: state.omega_plus + (k1.0 + k2.0 * two + k3.0 * two + k4.0) * (h / six),
                omega_minus: state.omega_minus + (k1.1 + k2.1 * two + k3.1 * two + k4.1) * (h / six),
                z: if k + 1 == steps { self.medium.length() } else { h * T::lit((k + 1) as f64) },
            };
            let (before, after) = (state.intensity(), next.intensity());
            let change = (after - before).abs() / before;
            if !(change <= T::lit(MAX_STEP_CHANGE)) {
                return Err(Error::StepSize {
                    z: next.z.as_f64(),
                    change: change.as_f64(),
                    limit: MAX_STEP_CHANGE,
                });
            }
            phase += wrap_phase(next.relative_phase() - state.relative_phase());
            state = next;
            samples.push((state.z, after, phase));
        }
        Ok(FieldTrace { samples, output: state })
    }

    fn final_phase(trace: &FieldTrace<T>) -> T {
        trace.samples.last().map_or(T::zero(), |s| s.2)
    }

    /// Profile at field `b`, with the signed slope from runs at `b ± b_step`.
    pub fn propagate(&self, input: &FieldState<T>, b: T) -> Result<PropagationProfile<T>> {
        let step = self.config.field_step(self.medium.units())?;
        let main = self.trace(input, b)?;
        let up = self.trace(input, b + step)?;
        let down = self.trace(input, b - step)?;
        let dphi_db = (Self::final_phase(&up) - Self::final_phase(&down)) / (T::lit(2.0) * step);
        Ok(PropagationProfile {
            transmission: main.output.intensity() / input.intensity(),
            samples: main.samples,
            dphi_db,
        })
    }

    /// Relative transmission change between `z_steps` and `2·z_steps`.
    pub fn step_refinement(&self, input: &FieldState<T>, b: T) -> Result<T> {
        let coarse = self.trace_with_steps(input, b, self.config.z_steps)?;
        let fine = self.trace_with_steps(input, b, 2 * self.config.z_steps)?;
        let (a, c) = (coarse.output.intensity(), fine.output.intensity());
        Ok((a - c).abs() / c)
    }

    /// Transmission and |dφ/dB| at B → 0.
    pub fn observe(&self, input: &FieldState<T>) -> Result<ObservablePoint<T>> {
        let p = self.propagate(input, T::zero())?;
        Ok(ObservablePoint {
            n: self.medium.density(),
            transmission: p.transmission,
            slope: p.dphi_db.abs(),
            gamma_eff: Some(self.config.gamma_eff + self.config.pumping_rate),
        })
    }
}

/// How γ_eff (and explicit R) vary with density in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecaySchedule<T> {
    /// γ_eff fixed at the value in the solver config.
    Constant,
    /// γ_eff = γ₀ (1 + f(N)), R folded into the transit rate.
    Folded { gamma_0: T, model: TrappingModel<T> },
    /// γ_t = γ₀ and explicit incoherent pumping R = f(N) γ₀.
    Explicit { gamma_0: T, model: TrappingModel<T> },
}

impl<T: Real> DecaySchedule<T> {
    /// Solver config for density `n`.
    pub fn config_at(&self, base: &SolverConfig<T>, n: T) -> Result<SolverConfig<T>> {
        let mut c = base.clone();
        match *self {
            DecaySchedule::Constant => {}
            DecaySchedule::Folded { gamma_0, ref model } => {
                c.gamma_eff = gamma_0 * (T::one() + f_of_n(n, model)?);
            }
            DecaySchedule::Explicit { gamma_0, ref model } => {
                c.gamma_eff = gamma_0;
                c.pumping_rate = gamma_0 * f_of_n(n, model)?;
            }
        }
        Ok(c)
    }
}

/// One observable point per density, evaluated in parallel, in input order.
pub fn observables_vs_density<T: Real>(
    densities: &[T],
    template: &Propagator<T>,
    input: &FieldState<T>,
    schedule: &DecaySchedule<T>,
) -> Result<Vec<ObservablePoint<T>>> {
    if densities.iter().any(|&n| !(n > T::zero())) {
        return Err(Error::input("densities must be positive"));
    }
    if densities.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("densities must be ascending"));
    }
    densities
        .par_iter()
        .map(|&n| {
            let p = template
                .with_medium(template.medium().with_density(n)?)
                .with_config(schedule.config_at(template.config(), n)?)?;
            p.observe(input)
        })
        .collect()
}

/// Multilevel forward model for the simulation-matching fit.
#[derive(Debug, Clone)]
pub struct MultilevelForward<T: Real> {
    pub template: Propagator<T>,
    pub input: FieldState<T>,
}

impl<T: Real> ForwardModel<T> for MultilevelForward<T> {
    fn observe(&self, n: T, gamma_eff: T) -> Result<(T, T)> {
        let config = SolverConfig { gamma_eff, ..self.template.config().clone() };
        let p = self
            .template
            .with_medium(self.template.medium().with_density(n)?)
            .with_config(config)?
            .observe(&self.input)?;
        Ok((p.transmission, p.slope))
    }
}
