//! Wigner 3-j and 6-j symbols from the Racah sums.
//!
//! All angular momenta are passed doubled (`tj = 2j`) so half-integers are
//! exact. Arguments stay small (j ≤ 4) so plain factorials are accurate.

use crate::num::Real;

fn fact<T: Real>(n: i32) -> T {
    debug_assert!(n >= 0);
    let mut acc = T::one();
    for k in 2..=n {
        acc *= T::lit(k as f64);
    }
    acc
}

fn sign<T: Real>(n: i32) -> T {
    if n.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Triangle condition on doubled momenta, including integer perimeter.
pub fn triangle(ta: i32, tb: i32, tc: i32) -> bool {
    ta >= 0
        && tb >= 0
        && tc >= 0
        && tc <= ta + tb
        && tc >= (ta - tb).abs()
        && (ta + tb + tc) % 2 == 0
}

/// Δ(abc) with doubled arguments; caller guarantees the triangle condition.
fn delta<T: Real>(ta: i32, tb: i32, tc: i32) -> T {
    fact::<T>((ta + tb - tc) / 2) * fact::<T>((ta - tb + tc) / 2) * fact::<T>((-ta + tb + tc) / 2)
        / fact::<T>((ta + tb + tc) / 2 + 1)
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)`, doubled arguments.
pub fn wigner_3j<T: Real>(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> T {
    if tm1 + tm2 + tm3 != 0 || !triangle(tj1, tj2, tj3) {
        return T::zero();
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm3.abs() > tj3 {
        return T::zero();
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj3 + tm3) % 2 != 0 {
        return T::zero();
    }
    // Integer (undoubled) combinations used by the Racah sum.
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tm1) / 2;
    let c = (tj2 + tm2) / 2;
    let d = (tj3 - tj2 + tm1) / 2;
    let e = (tj3 - tj1 - tm2) / 2;
    let kmin = 0.max(-d).max(-e);
    let kmax = a.min(b).min(c);
    let mut sum = T::zero();
    for k in kmin..=kmax {
        let den = fact::<T>(k)
            * fact::<T>(d + k)
            * fact::<T>(e + k)
            * fact::<T>(a - k)
            * fact::<T>(b - k)
            * fact::<T>(c - k);
        sum += sign::<T>(k) / den;
    }
    let pre = delta::<T>(tj1, tj2, tj3)
        * fact::<T>((tj1 + tm1) / 2)
        * fact::<T>((tj1 - tm1) / 2)
        * fact::<T>((tj2 + tm2) / 2)
        * fact::<T>((tj2 - tm2) / 2)
        * fact::<T>((tj3 + tm3) / 2)
        * fact::<T>((tj3 - tm3) / 2);
    sign::<T>((tj1 - tj2 - tm3) / 2) * pre.sqrt() * sum
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}`, doubled arguments.
pub fn wigner_6j<T: Real>(tj1: i32, tj2: i32, tj3: i32, tj4: i32, tj5: i32, tj6: i32) -> T {
    let triads = [
        (tj1, tj2, tj3),
        (tj1, tj5, tj6),
        (tj4, tj2, tj6),
        (tj4, tj5, tj3),
    ];
    if triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return T::zero();
    }
    let a1 = (tj1 + tj2 + tj3) / 2;
    let a2 = (tj1 + tj5 + tj6) / 2;
    let a3 = (tj4 + tj2 + tj6) / 2;
    let a4 = (tj4 + tj5 + tj3) / 2;
    let b1 = (tj1 + tj2 + tj4 + tj5) / 2;
    let b2 = (tj2 + tj3 + tj5 + tj6) / 2;
    let b3 = (tj3 + tj1 + tj6 + tj4) / 2;
    let tmin = a1.max(a2).max(a3).max(a4);
    let tmax = b1.min(b2).min(b3);
    let mut sum = T::zero();
    for t in tmin..=tmax {
        let den = fact::<T>(t - a1)
            * fact::<T>(t - a2)
            * fact::<T>(t - a3)
            * fact::<T>(t - a4)
            * fact::<T>(b1 - t)
            * fact::<T>(b2 - t)
            * fact::<T>(b3 - t);
        sum += sign::<T>(t) * fact::<T>(t + 1) / den;
    }
    let pre: T = triads
        .iter()
        .map(|&(a, b, c)| delta::<T>(a, b, c))
        .fold(T::one(), |acc, x| acc * x);
    pre.sqrt() * sum
}
