//! Independent numerical oracles shared by the integration tests and the
//! acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use radtrap::multilevel::Liouvillian;
use radtrap::trapping::pumping_rate_from_gradient;

/// Solves the implicit relation g = −κ(γ₀ + R(g)) for the intensity gradient
/// by secant iteration, with R taken from the gradient formula.
pub fn implicit_gradient(kappa: f64, gamma_0: f64, f: f64) -> f64 {
    let h = |g: f64| g + kappa * (gamma_0 + pumping_rate_from_gradient(g, kappa, f).unwrap());
    let (mut a, mut b) = (-kappa * gamma_0, -2.0 * kappa * gamma_0 - 1e-3);
    let (mut ha, mut hb) = (h(a), h(b));
    for _ in 0..100 {
        if hb == 0.0 || ha == hb {
            break;
        }
        let c = b - hb * (b - a) / (hb - ha);
        a = b;
        ha = hb;
        b = c.min(0.0);
        hb = h(b);
        if (b - a).abs() <= 1e-16 * b.abs() {
            break;
        }
    }
    b
}

/// RK4 integration of dI/dz = −κ(γ₀ + R) with R from the local gradient.
/// Returns `(z, I)` at every step.
pub fn rk4_intensity(kappa: f64, gamma_0: f64, f: f64, i0: f64, length: f64, steps: usize) -> Vec<(f64, f64)> {
    let rhs = |_i: f64| implicit_gradient(kappa, gamma_0, f);
    let h = length / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut i = i0;
    out.push((0.0, i));
    for k in 0..steps {
        let k1 = rhs(i);
        let k2 = rhs(i + 0.5 * h * k1);
        let k3 = rhs(i + 0.5 * h * k2);
        let k4 = rhs(i + h * k3);
        i += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push((h * (k + 1) as f64, i));
    }
    out
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling, Taylor series and repeated squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.125 { (norm / 0.125).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if one_norm(&term) < 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// State reached from `x0` after time `t` under dx/dt = G x + s, from the
/// exponential of the augmented generator [[G, s], [0, 0]].
pub fn evolve(gen: &Liouvillian<f64>, x0: &DVector<f64>, t: f64) -> DVector<f64> {
    let m = gen.matrix().nrows();
    let mut aug = DMatrix::<f64>::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(gen.matrix());
    aug.view_mut((0, m), (m, 1)).copy_from(gen.source());
    let e = expm(&(aug * t));
    e.view((0, 0), (m, m)) * x0 + e.view((0, m), (m, 1))
}

/// Isotropic population over the given ground levels, as real coordinates.
pub fn isotropic_ground(n: usize, grounds: &[usize]) -> DVector<f64> {
    let mut x = DVector::zeros(n * n);
    for &g in grounds {
        x[g * n + g] = 1.0 / grounds.len() as f64;
    }
    x
}
