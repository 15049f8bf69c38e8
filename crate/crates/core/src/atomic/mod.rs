//! Level schemes and angular-momentum couplings.
//!
//! Energies and rates inside a [`LevelScheme`] are in units of the radiative
//! rate γ_r. With that choice an excited sublevel loses population at
//! `2` (i.e. 2γ_r) and optical coherences decay at `1`.

pub mod angular;

use crate::error::{Error, Result};
use crate::num::Real;

pub use angular::{wigner_3j, wigner_6j};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    Ground,
    Excited,
}

/// One magnetic sublevel |F, m_F⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sublevel<T> {
    pub f: i32,
    pub m: i32,
    pub manifold: Manifold,
    /// Field-free energy relative to the reference line, units of γ_r.
    pub energy_offset: T,
    /// Landé factor; the Zeeman energy is `g_factor * m * (μ_B B / ħ)`.
    pub g_factor: T,
}

/// Dipole amplitude for absorbing polarization `q` on `ground -> excited`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling<T> {
    pub ground: usize,
    pub excited: usize,
    pub q: i32,
    pub amplitude: T,
}

/// Immutable level scheme shared by the multilevel solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme<T> {
    sublevels: Vec<Sublevel<T>>,
    couplings: Vec<Coupling<T>>,
    leak: Vec<T>,
    population_decay: T,
    hyperfine_splitting: T,
}

impl<T: Real> LevelScheme<T> {
    /// Assembles a scheme and checks the selection rule and branching closure.
    pub fn new(
        sublevels: Vec<Sublevel<T>>,
        couplings: Vec<Coupling<T>>,
        leak: Vec<T>,
        hyperfine_splitting: T,
    ) -> Result<Self> {
        if leak.len() != sublevels.len() {
            return Err(Error::DimensionMismatch { expected: sublevels.len(), got: leak.len() });
        }
        for s in &sublevels {
            if s.m.abs() > s.f {
                return Err(Error::input(format!("|m| > F for sublevel {:?}", (s.f, s.m))));
            }
        }
        for c in &couplings {
            let g = sublevels.get(c.ground).ok_or_else(|| Error::input("coupling ground index"))?;
            let e = sublevels.get(c.excited).ok_or_else(|| Error::input("coupling excited index"))?;
            if g.manifold != Manifold::Ground || e.manifold != Manifold::Excited {
                return Err(Error::input("coupling must join a ground and an excited sublevel"));
            }
            if e.m - g.m != c.q {
                return Err(Error::input(format!(
                    "selection rule violated: m' - m = {} but q = {}",
                    e.m - g.m,
                    c.q
                )));
            }
        }
        let scheme = LevelScheme {
            sublevels,
            couplings,
            leak,
            population_decay: T::lit(2.0),
            hyperfine_splitting,
        };
        for e in scheme.excited_indices() {
            let total = scheme.branching_sum(e) + scheme.leak[e];
            if (total - T::one()).abs() > T::lit(1e3) * Real::epsilon() {
                return Err(Error::input(format!("branching of excited level {e} sums to {total}")));
            }
        }
        Ok(scheme)
    }

    pub fn len(&self) -> usize {
        self.sublevels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sublevels.is_empty()
    }

    pub fn sublevels(&self) -> &[Sublevel<T>] {
        &self.sublevels
    }

    pub fn couplings(&self) -> &[Coupling<T>] {
        &self.couplings
    }

    pub fn ground_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(Manifold::Ground)
    }

    pub fn excited_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(Manifold::Excited)
    }

    fn indices(&self, which: Manifold) -> impl Iterator<Item = usize> + '_ {
        self.sublevels
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.manifold == which)
            .map(|(i, _)| i)
    }

    /// Relative dipole amplitude, zero when no such channel exists.
    pub fn coupling(&self, ground: usize, excited: usize, q: i32) -> T {
        self.couplings
            .iter()
            .find(|c| c.ground == ground && c.excited == excited && c.q == q)
            .map_or(T::zero(), |c| c.amplitude)
    }

    /// Fraction of spontaneous decay from `excited` that leaves the modeled states.
    pub fn leak_fraction(&self, excited: usize) -> T {
        self.leak[excited]
    }

    /// Σ over modeled ground sublevels and polarizations of |amplitude|².
    pub fn branching_sum(&self, excited: usize) -> T {
        self.couplings
            .iter()
            .filter(|c| c.excited == excited)
            .fold(T::zero(), |acc, c| acc + c.amplitude * c.amplitude)
    }

    /// Excited-state population decay rate in units of γ_r.
    pub fn population_decay(&self) -> T {
        self.population_decay
    }

    pub fn hyperfine_splitting(&self) -> T {
        self.hyperfine_splitting
    }

    /// True when every excited level decays back into the modeled ground states.
    pub fn is_closed(&self) -> bool {
        self.excited_indices().all(|e| self.leak[e] == T::zero())
    }
}

/// Conversion between laboratory units and the internal γ_r units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateUnits<T> {
    /// γ_r in rad/s.
    pub gamma_r: T,
    /// μ_B/ħ in rad/s per Gauss.
    pub bohr: T,
}

impl<T: Real> Default for RateUnits<T> {
    fn default() -> Self {
        RateUnits {
            gamma_r: T::two_pi() * T::lit(2.87e6),
            bohr: T::two_pi() * T::lit(1.3996e6),
        }
    }
}

impl<T: Real> RateUnits<T> {
    /// From γ_r/2π and (μ_B/ħ)/2π, both in MHz (the latter per Gauss).
    pub fn from_mhz(gamma_r_mhz: T, bohr_mhz_per_gauss: T) -> Self {
        let mhz = T::two_pi() * T::lit(1e6);
        RateUnits { gamma_r: gamma_r_mhz * mhz, bohr: bohr_mhz_per_gauss * mhz }
    }

    /// μ_B B/ħ per Gauss expressed in units of γ_r.
    pub fn larmor_per_gauss(&self) -> T {
        self.bohr / self.gamma_r
    }

    /// Converts a cyclic frequency in MHz to units of γ_r.
    pub fn mhz_to_gamma_r(&self, mhz: T) -> T {
        T::two_pi() * mhz * T::lit(1e6) / self.gamma_r
    }
}

/// Two-photon splitting of the |b±⟩ pair produced by a longitudinal field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanShift<T> {
    /// Field in Gauss.
    pub b: T,
    /// δ₀ in units of γ_r, with ħδ₀/2 = −μ_B B.
    pub delta0: T,
    larmor: T,
}

impl<T: Real> ZeemanShift<T> {
    /// Zeeman energy of a sublevel in units of γ_r.
    pub fn energy(&self, level: &Sublevel<T>) -> T {
        level.g_factor * T::lit(level.m as f64) * self.larmor * self.b
    }

    pub fn zero() -> Self {
        ZeemanShift { b: T::zero(), delta0: T::zero(), larmor: T::zero() }
    }
}

pub fn zeeman_splitting<T: Real>(b_gauss: T, units: &RateUnits<T>) -> ZeemanShift<T> {
    let larmor = units.larmor_per_gauss();
    ZeemanShift { b: b_gauss, delta0: -T::lit(2.0) * larmor * b_gauss, larmor }
}

/// Parameters of the ⁸⁷Rb D₁ scheme that are not fixed by angular momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rb87D1Config<T> {
    /// F′=1 ↔ F′=2 splitting in MHz.
    pub hyperfine_mhz: T,
    /// Overrides the angular-momentum leak to F=1 for every excited level.
    pub leak_fraction: Option<T>,
    pub units: RateUnits<T>,
}

impl<T: Real> Default for Rb87D1Config<T> {
    fn default() -> Self {
        Rb87D1Config { hyperfine_mhz: T::lit(814.5), leak_fraction: None, units: RateUnits::default() }
    }
}

// Doubled quantum numbers of the D1 line: J = J' = 1/2, I = 3/2.
const TJ: i32 = 1;
const TJP: i32 = 1;
const TI: i32 = 3;

fn lande_f<T: Real>(g_j: f64, tf: i32) -> T {
    let (f, i, j) = (tf as f64 / 2.0, TI as f64 / 2.0, TJ as f64 / 2.0);
    T::lit(g_j * (f * (f + 1.0) - i * (i + 1.0) + j * (j + 1.0)) / (2.0 * f * (f + 1.0)))
}

/// Normalized absorption amplitude ⟨F′m′|d_q|F m⟩ / ⟨J′‖d‖J⟩·√(2J′+1), so
/// that summing |·|² over all ground F, m and q gives 1 for each excited level.
pub fn d1_dipole_amplitude<T: Real>(tf: i32, tm: i32, tfp: i32, tmp: i32, q: i32) -> T {
    let tq = 2 * q;
    if tmp - tm != tq {
        return T::zero();
    }
    let phase = (tfp - tmp) / 2 + (TJP + TI + tf) / 2 + 1;
    let sign = if phase.rem_euclid(2) == 0 { T::one() } else { -T::one() };
    let three_j: T = wigner_3j(tfp, 2, tf, -tmp, tq, tm);
    let six_j: T = wigner_6j(TJP, tfp, TI, tf, TJ, 2);
    let norm = (T::lit(((TJP + 1) * (tfp + 1) * (tf + 1)) as f64)).sqrt();
    sign * norm * three_j * six_j
}

/// Builds the 13-state ⁸⁷Rb D₁ scheme: F=2 (5) → F′=1 (3), F′=2 (5).
///
/// Ordering: ground m = −2..2, then F′=1 m = −1..1, then F′=2 m = −2..2.
pub fn build_rb87_d1_scheme<T: Real>(config: &Rb87D1Config<T>) -> Result<LevelScheme<T>> {
    let hfs = config.units.mhz_to_gamma_r(config.hyperfine_mhz);
    let mut sublevels = Vec::with_capacity(13);
    let g_ground: T = lande_f(2.0, 4);
    for m in -2..=2 {
        sublevels.push(Sublevel { f: 2, m, manifold: Manifold::Ground, energy_offset: T::zero(), g_factor: g_ground });
    }
    for (fp, offset) in [(1, T::zero()), (2, hfs)] {
        let g: T = lande_f(2.0 / 3.0, 2 * fp);
        for m in -fp..=fp {
            sublevels.push(Sublevel { f: fp, m, manifold: Manifold::Excited, energy_offset: offset, g_factor: g });
        }
    }

    let mut couplings = Vec::new();
    let mut leak = vec![T::zero(); sublevels.len()];
    for (e, ex) in sublevels.iter().enumerate().filter(|(_, s)| s.manifold == Manifold::Excited) {
        // Natural leak: everything that goes to F=1.
        let mut to_f1 = T::zero();
        for m in -1..=1 {
            let a: T = d1_dipole_amplitude(2, 2 * m, 2 * ex.f, 2 * ex.m, ex.m - m);
            to_f1 += a * a;
        }
        let target_leak = config.leak_fraction.unwrap_or(to_f1);
        if target_leak < T::zero() || target_leak >= T::one() {
            return Err(Error::input(format!("leak fraction {target_leak} outside [0, 1)")));
        }
        let rescale = ((T::one() - target_leak) / (T::one() - to_f1)).sqrt();
        leak[e] = target_leak;
        for (g, gr) in sublevels.iter().enumerate().filter(|(_, s)| s.manifold == Manifold::Ground) {
            let q = ex.m - gr.m;
            if q.abs() > 1 {
                continue;
            }
            let a: T = d1_dipole_amplitude(2 * gr.f, 2 * gr.m, 2 * ex.f, 2 * ex.m, q);
            if a != T::zero() {
                couplings.push(Coupling { ground: g, excited: e, q, amplitude: a * rescale });
            }
        }
    }
    LevelScheme::new(sublevels, couplings, leak, hfs)
}

/// Closed three-level Λ: |b−⟩ (m=−1), |b+⟩ (m=+1), |a⟩ (m=0).
///
/// The ground pair carries g = −1 so that its Zeeman splitting equals δ₀ with
/// ħδ₀/2 = −μ_B B, i.e. E(b±) = ±δ₀/2.
pub fn build_lambda_scheme<T: Real>() -> LevelScheme<T> {
    let g = |m| Sublevel { f: 1, m, manifold: Manifold::Ground, energy_offset: T::zero(), g_factor: -T::one() };
    let sublevels = vec![
        g(-1),
        g(1),
        Sublevel { f: 0, m: 0, manifold: Manifold::Excited, energy_offset: T::zero(), g_factor: T::zero() },
    ];
    let amp = T::lit(0.5).sqrt();
    let couplings = vec![
        Coupling { ground: 0, excited: 2, q: 1, amplitude: amp },
        Coupling { ground: 1, excited: 2, q: -1, amplitude: amp },
    ];
    LevelScheme::new(sublevels, couplings, vec![T::zero(); 3], T::zero())
        .expect("lambda scheme is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme() -> LevelScheme<f64> {
        build_rb87_d1_scheme(&Rb87D1Config::default()).unwrap()
    }

    fn idx(s: &LevelScheme<f64>, f: i32, m: i32, manifold: Manifold) -> usize {
        s.sublevels()
            .iter()
            .position(|l| l.f == f && l.m == m && l.manifold == manifold)
            .unwrap()
    }

    #[test]
    fn thirteen_states() {
        let s = scheme();
        assert_eq!(s.len(), 13);
        assert_eq!(s.ground_indices().count(), 5);
        assert_eq!(s.excited_indices().count(), 8);
    }

    #[test]
    fn selection_rule_examples() {
        let s = scheme();
        let g = idx(&s, 2, 2, Manifold::Ground);
        let e = idx(&s, 1, 1, Manifold::Excited);
        assert_eq!(s.coupling(g, e, 0), 0.0);
        // F'=1 has no m'=2: nothing couples there at q=0 either.
        assert!(s
            .sublevels()
            .iter()
            .all(|l| !(l.manifold == Manifold::Excited && l.f == 1 && l.m == 2)));
    }

    #[test]
    fn selection_rule_all_entries() {
        let s = scheme();
        for g in s.ground_indices() {
            for e in s.excited_indices() {
                for q in -1..=1 {
                    let a = s.coupling(g, e, q);
                    if s.sublevels()[e].m - s.sublevels()[g].m != q {
                        assert_eq!(a, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn natural_leak_fractions() {
        // F'=1 -> F=1 branching is 1/6, F'=2 -> F=1 is 1/2.
        let s = scheme();
        for e in s.excited_indices() {
            let want = if s.sublevels()[e].f == 1 { 1.0 / 6.0 } else { 0.5 };
            assert!((s.leak_fraction(e) - want).abs() < 1e-12);
            assert!((s.branching_sum(e) + s.leak_fraction(e) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leak_override_rescales() {
        let cfg = Rb87D1Config { leak_fraction: Some(0.0), ..Default::default() };
        let s = build_rb87_d1_scheme::<f64>(&cfg).unwrap();
        assert!(s.is_closed());
        for e in s.excited_indices() {
            assert!((s.branching_sum(e) - 1.0).abs() < 1e-12);
        }
        let bad = Rb87D1Config { leak_fraction: Some(1.0), ..Default::default() };
        assert!(build_rb87_d1_scheme::<f64>(&bad).is_err());
    }

    #[test]
    fn ground_line_strength_isotropic() {
        let s = scheme();
        let totals: Vec<f64> = s
            .ground_indices()
            .map(|g| {
                s.couplings()
                    .iter()
                    .filter(|c| c.ground == g)
                    .map(|c| c.amplitude * c.amplitude)
                    .sum()
            })
            .collect();
        for t in &totals {
            assert!((t - totals[0]).abs() < 1e-12, "{totals:?}");
        }
    }

    #[test]
    fn landé_factors() {
        let s = scheme();
        let g = |f, m, man| s.sublevels()[idx(&s, f, m, man)].g_factor;
        assert!((g(2, 1, Manifold::Ground) - 0.5).abs() < 1e-15);
        assert!((g(1, 1, Manifold::Excited) + 1.0 / 6.0).abs() < 1e-15);
        assert!((g(2, 1, Manifold::Excited) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn hyperfine_in_gamma_r_units() {
        let s = scheme();
        assert!((s.hyperfine_splitting() - 814.5 / 2.87).abs() < 1e-9);
    }

    #[test]
    fn deterministic_build() {
        assert_eq!(scheme(), scheme());
    }

    #[test]
    fn zeeman_examples() {
        let u = RateUnits::<f64>::default();
        assert_eq!(zeeman_splitting(0.0, &u).delta0, 0.0);
        let p = zeeman_splitting(0.37, &u).delta0;
        let n = zeeman_splitting(-0.37, &u).delta0;
        assert_eq!(p, -n);
        // 1 mG, γ_r = 2π·2.87 MHz, μ_B/ħ = 2π·1.3996 MHz/G:
        // δ₀ = −2 · 1.3996e6 · 1e-3 / 2.87e6 = −9.7533101045296e-4 γ_r
        let d = zeeman_splitting(1e-3, &u).delta0;
        assert!((d - (-9.753310104529617e-4)).abs() < 1e-15, "{d}");
    }

    #[test]
    fn lambda_scheme_is_closed() {
        let s = build_lambda_scheme::<f64>();
        assert!(s.is_closed());
        assert_eq!(s.len(), 3);
        let z = zeeman_splitting(0.01, &RateUnits::default());
        let e_minus = z.energy(&s.sublevels()[0]);
        let e_plus = z.energy(&s.sublevels()[1]);
        assert!((e_plus - e_minus - z.delta0).abs() < 1e-15);
    }

    #[test]
    fn f32_scheme_builds() {
        let s = build_rb87_d1_scheme::<f32>(&Rb87D1Config::default()).unwrap();
        assert_eq!(s.len(), 13);
    }
}
