//! Master-equation generator and its steady state.
//!
//! Dynamics, in units of γ_r and in the frame rotating with the laser:
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ}) − ½{Γ P_e, ρ} + Γ-recycling
//!         − γ_t ρ + (γ_t / n_g) P_g
//! ```
//!
//! Spontaneous decay returns population to the modeled ground states through
//! one jump operator per (excited hyperfine level, polarization); the leak
//! fraction simply never comes back. Cross-hyperfine interference in the decay
//! is dropped (secular approximation, the F′ splitting is ~300 γ_r).
//!
//! The density matrix is solved for in real coordinates: `x[i*n+i] = ρ_ii`,
//! and for `i < j`, `x[i*n+j] = Re ρ_ij`, `x[j*n+i] = Im ρ_ij`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::atomic::{LevelScheme, Manifold, ZeemanShift};
use crate::error::{Error, Result};
use crate::lambda::FieldState;
use crate::multilevel::SolverConfig;
use crate::num::{cplx, Cplx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    entries: DMatrix<Cplx<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn from_entries(entries: DMatrix<Cplx<T>>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        Ok(DensityMatrix { entries })
    }

    /// Rebuilds ρ from real coordinates; Hermitian by construction.
    pub fn from_coordinates(x: &DVector<T>, n: usize) -> Result<Self> {
        if x.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: x.len() });
        }
        let mut m = DMatrix::from_element(n, n, cplx(T::zero(), T::zero()));
        for i in 0..n {
            m[(i, i)] = cplx(x[i * n + i], T::zero());
            for j in i + 1..n {
                let v = cplx(x[i * n + j], x[j * n + i]);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        Ok(DensityMatrix { entries: m })
    }

    /// Real coordinates of the Hermitian part.
    pub fn coordinates(&self) -> DVector<T> {
        let n = self.dim();
        let mut x = DVector::zeros(n * n);
        for i in 0..n {
            x[i * n + i] = self.entries[(i, i)].re;
            for j in i + 1..n {
                x[i * n + j] = self.entries[(i, j)].re;
                x[j * n + i] = self.entries[(i, j)].im;
            }
        }
        x
    }

    pub fn entries(&self) -> &DMatrix<Cplx<T>> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.entries[(i, j)]
    }

    pub fn population(&self, i: usize) -> T {
        self.entries[(i, i)].re
    }

    /// In-system trace.
    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.entries[(i, i)].re)
    }

    /// max |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm_sqr().sqrt());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> T {
        let eig = SymmetricEigen::new(self.entries.clone());
        eig.eigenvalues.iter().fold(T::max_value().unwrap_or_else(|| T::lit(f64::MAX)), |acc, &v| acc.min(v))
    }
}

/// Real generator `G` and source `s` with dx/dt = G x + s.
#[derive(Debug, Clone)]
pub struct Liouvillian<T: Real> {
    n: usize,
    matrix: DMatrix<T>,
    source: DVector<T>,
    transit: T,
    closed: bool,
}

impl<T: Real> Liouvillian<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn source(&self) -> &DVector<T> {
        &self.source
    }

    pub fn transit_rate(&self) -> T {
        self.transit
    }

    /// The homogeneous part applied to ρ (source excluded).
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        if rho.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rho.dim() });
        }
        DensityMatrix::from_coordinates(&(&self.matrix * rho.coordinates()), self.n)
    }
}

fn field_for<T: Real>(fields: &FieldState<T>, q: i32) -> Cplx<T> {
    match q {
        1 => fields.omega_plus,
        -1 => fields.omega_minus,
        _ => cplx(T::zero(), T::zero()),
    }
}

/// Rotating-frame Hamiltonian in units of γ_r.
pub fn hamiltonian<T: Real>(
    scheme: &LevelScheme<T>,
    fields: &FieldState<T>,
    shift: &ZeemanShift<T>,
    detuning: T,
) -> DMatrix<Cplx<T>> {
    let n = scheme.len();
    let mut h = DMatrix::from_element(n, n, cplx(T::zero(), T::zero()));
    for (i, s) in scheme.sublevels().iter().enumerate() {
        let mut e = shift.energy(s);
        if s.manifold == Manifold::Excited {
            e += s.energy_offset - detuning;
        }
        h[(i, i)] = cplx(e, T::zero());
    }
    for c in scheme.couplings() {
        let v = field_for(fields, c.q) * c.amplitude;
        h[(c.excited, c.ground)] -= v;
        h[(c.ground, c.excited)] -= v.conj();
    }
    h
}

/// Groups excited sublevels by F′.
fn excited_manifolds<T: Real>(scheme: &LevelScheme<T>) -> Vec<Vec<usize>> {
    let mut fs: Vec<i32> = scheme.excited_indices().map(|e| scheme.sublevels()[e].f).collect();
    fs.sort_unstable();
    fs.dedup();
    fs.iter()
        .map(|&f| scheme.excited_indices().filter(|&e| scheme.sublevels()[e].f == f).collect())
        .collect()
}

/// Builds the generator for one velocity class.
pub fn build_liouvillian<T: Real>(
    scheme: &LevelScheme<T>,
    fields: &FieldState<T>,
    shift: &ZeemanShift<T>,
    velocity_detuning: T,
    config: &SolverConfig<T>,
) -> Result<Liouvillian<T>> {
    if scheme.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    config.validate()?;
    let n = scheme.len();
    let nn = n * n;
    let idx = |i: usize, j: usize| i * n + j;
    let gamma = scheme.population_decay();
    let transit = config.gamma_eff;
    let pump_half = config.pumping_rate / T::lit(2.0);
    let im = cplx(T::zero(), T::one());

    let h = hamiltonian(scheme, fields, shift, config.laser_detuning + velocity_detuning);
    let mut s = DMatrix::from_element(nn, nn, cplx(T::zero(), T::zero()));

    // −i(H⊗1 − 1⊗Hᵀ)
    for i in 0..n {
        for j in 0..n {
            let hij = h[(i, j)];
            if hij == cplx(T::zero(), T::zero()) {
                continue;
            }
            for k in 0..n {
                s[(idx(i, k), idx(j, k))] -= im * hij;
                s[(idx(k, j), idx(k, i))] += im * hij;
            }
        }
    }

    // Anticommutator with K = Γ P_e + pumping loss on the ground levels.
    let mut k_diag = vec![T::zero(); n];
    for e in scheme.excited_indices() {
        k_diag[e] = gamma;
    }
    if pump_half > T::zero() {
        for c in scheme.couplings().iter().filter(|c| c.amplitude != T::zero()) {
            k_diag[c.ground] += pump_half;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let loss = (k_diag[i] + k_diag[j]) / T::lit(2.0) + transit;
            s[(idx(i, j), idx(i, j))] -= cplx(loss, T::zero());
        }
    }

    // Recycling jumps: L = √Γ Σ c |g⟩⟨e| for each F′ and q.
    for manifold in excited_manifolds(scheme) {
        for q in -1..=1 {
            let entries: Vec<(usize, usize, T)> = scheme
                .couplings()
                .iter()
                .filter(|c| c.q == q && manifold.contains(&c.excited))
                .map(|c| (c.ground, c.excited, c.amplitude * gamma.sqrt()))
                .collect();
            for &(a, b, lab) in &entries {
                for &(c, d, lcd) in &entries {
                    s[(idx(a, c), idx(b, d))] += cplx(lab * lcd, T::zero());
                }
            }
        }
    }

    // Incoherent pumping √(R/2)|e⟩⟨g| on each allowed channel.
    if pump_half > T::zero() {
        for c in scheme.couplings().iter().filter(|c| c.amplitude != T::zero()) {
            s[(idx(c.excited, c.excited), idx(c.ground, c.ground))] += cplx(pump_half, T::zero());
        }
    }

    let matrix = realify(&s, n);
    let mut source = DVector::zeros(nn);
    let grounds: Vec<usize> = scheme.ground_indices().collect();
    if !grounds.is_empty() {
        let share = transit / T::lit(grounds.len() as f64);
        for g in grounds {
            source[idx(g, g)] = share;
        }
    }
    Ok(Liouvillian { n, matrix, source, transit, closed: scheme.is_closed() })
}

/// Converts a complex superoperator on row-major vec(ρ) to the real coordinates.
fn realify<T: Real>(s: &DMatrix<Cplx<T>>, n: usize) -> DMatrix<T> {
    let nn = n * n;
    let idx = |i: usize, j: usize| i * n + j;
    let project = |v: &[Cplx<T>], out: &mut [T]| {
        for a in 0..n {
            out[idx(a, a)] = v[idx(a, a)].re;
            for b in a + 1..n {
                out[idx(a, b)] = v[idx(a, b)].re;
                out[idx(b, a)] = v[idx(a, b)].im;
            }
        }
    };
    let mut g = DMatrix::zeros(nn, nn);
    let mut col = vec![cplx(T::zero(), T::zero()); nn];
    let mut out = vec![T::zero(); nn];
    let store = |g: &mut DMatrix<T>, k: usize, col: &[Cplx<T>], out: &mut Vec<T>| {
        project(col, out);
        g.column_mut(k).copy_from_slice(out);
    };
    for i in 0..n {
        let c = s.column(idx(i, i));
        col.iter_mut().zip(c.iter()).for_each(|(d, v)| *d = *v);
        store(&mut g, idx(i, i), &col, &mut out);
        for j in i + 1..n {
            let a = s.column(idx(i, j));
            let b = s.column(idx(j, i));
            // ρ = E_ij + E_ji for the real part, i(E_ij − E_ji) for the imaginary part.
            for r in 0..nn {
                col[r] = a[r] + b[r];
            }
            store(&mut g, idx(i, j), &col, &mut out);
            for r in 0..nn {
                let d = a[r] - b[r];
                col[r] = cplx(-d.im, d.re);
            }
            store(&mut g, idx(j, i), &col, &mut out);
        }
    }
    g
}

#[derive(Debug, Clone)]
pub struct SteadyState<T: Real> {
    pub rho: DensityMatrix<T>,
    /// ‖G x + s‖∞.
    pub residual: T,
    /// Ratio of the largest to smallest LU pivot.
    pub condition: T,
}

fn residual_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::lit(1e5) * Real::epsilon())
}

/// Solves G x + s = 0. Without transit the trace condition replaces one row,
/// which needs a closed scheme.
pub fn steady_state<T: Real>(gen: &Liouvillian<T>) -> Result<SteadyState<T>> {
    let n = gen.n;
    let mut a = gen.matrix.clone();
    let mut rhs = -gen.source.clone();
    if gen.transit == T::zero() {
        if !gen.closed {
            return Err(Error::Singular {
                condition: f64::INFINITY,
                reason: "open scheme without transit relaxation has no steady state".into(),
            });
        }
        a.row_mut(0).fill(T::zero());
        for k in 0..n {
            a[(0, k * n + k)] = T::one();
        }
        rhs.fill(T::zero());
        rhs[0] = T::one();
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut big, mut small) = (T::zero(), T::max_value().unwrap_or_else(|| T::lit(f64::MAX)));
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        big = big.max(p);
        small = small.min(p);
    }
    let condition = if small > T::zero() { big / small } else { T::max_value().unwrap_or_else(|| T::lit(f64::MAX)) };
    if small == T::zero() || condition > T::one() / (T::lit(1e2) * Real::epsilon()) {
        return Err(Error::Singular {
            condition: condition.as_f64(),
            reason: "steady state is not unique".into(),
        });
    }
    let mut x = lu.solve(&rhs).ok_or_else(|| Error::Singular {
        condition: condition.as_f64(),
        reason: "LU solve failed".into(),
    })?;
    // One round of iterative refinement.
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = (&gen.matrix * &x + &gen.source).amax();
    if !(residual < residual_tolerance()) {
        return Err(Error::Singular {
            condition: condition.as_f64(),
            reason: format!("residual {residual:e} above tolerance"),
        });
    }
    Ok(SteadyState { rho: DensityMatrix::from_coordinates(&x, n)?, residual, condition })
}

/// `(P₊, P₋)` with P_q = Σ c ρ_eg over couplings of polarization q.
pub fn polarizations<T: Real>(scheme: &LevelScheme<T>, rho: &DensityMatrix<T>) -> (Cplx<T>, Cplx<T>) {
    let mut p = (cplx(T::zero(), T::zero()), cplx(T::zero(), T::zero()));
    for c in scheme.couplings() {
        let v = rho.get(c.excited, c.ground) * c.amplitude;
        match c.q {
            1 => p.0 += v,
            -1 => p.1 += v,
            _ => {}
        }
    }
    p
}

/// Rate at which the laser moves population into the excited manifold.
/// Equals −(d|Ω|²/dz)/κ under the propagation equation.
pub fn laser_excitation_rate<T: Real>(scheme: &LevelScheme<T>, fields: &FieldState<T>, rho: &DensityMatrix<T>) -> T {
    let (pp, pm) = polarizations(scheme, rho);
    let two = T::lit(2.0);
    let im = cplx(T::zero(), T::one());
    -(two * (fields.omega_plus.conj() * im * pp).re + two * (fields.omega_minus.conj() * im * pm).re)
}

/// Spontaneously emitted power Γ Σ ρ_ee, in photons per γ_r⁻¹.
pub fn scattered_power<T: Real>(scheme: &LevelScheme<T>, rho: &DensityMatrix<T>) -> T {
    scheme.excited_indices().fold(T::zero(), |acc, e| acc + rho.population(e)) * scheme.population_decay()
}

/// Population flux into the unmodeled ground manifold.
pub fn leak_flux<T: Real>(scheme: &LevelScheme<T>, rho: &DensityMatrix<T>) -> T {
    scheme
        .excited_indices()
        .fold(T::zero(), |acc, e| acc + scheme.leak_fraction(e) * rho.population(e))
        * scheme.population_decay()
}
