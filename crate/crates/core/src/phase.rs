//! Exact-rational phase helpers.
//!
//! All root-of-unity powers in the crate are tracked as exact rational
//! exponents of `e^{i pi}` and exponentiated once, which keeps the finite
//! Gauss-type sums reproducible and free of accumulated phase drift.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type C64 = Complex64;

/// `e^{i pi t}` for an exact rational `t`, reduced mod 2 before exponentiating.
pub fn unit_phase(t: &Rat) -> C64 {
    let two = Rat::from_integer(BigInt::from(2));
    let mut u = t.clone() % two.clone();
    if u.is_negative() {
        u += two;
    }
    let x = u.to_f64().unwrap_or(0.0);
    C64::from_polar(1.0, std::f64::consts::PI * x)
}

/// `e^{2 pi i t}` for an exact rational `t`.
pub fn unit_phase2(t: &Rat) -> C64 {
    unit_phase(&(t * Rat::from_integer(BigInt::from(2))))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(t: &Rat) -> f64 {
    t.to_f64().unwrap_or(f64::NAN)
}

/// True iff `t` is an integer.
pub fn is_integer(t: &Rat) -> bool {
    t.denom().is_one()
}

/// `t` reduced into `[0, m)` for a positive integer modulus `m`.
pub fn reduce_mod(t: &Rat, m: i64) -> Rat {
    let mm = rat_int(m);
    let mut u = t.clone() % mm.clone();
    if u.is_negative() {
        u += mm;
    }
    u
}

pub fn rat_is_zero(t: &Rat) -> bool {
    t.is_zero()
}

/// Exact rational as `i64` numerator/denominator, when it fits.
pub fn rat_to_i64_pair(t: &Rat) -> Option<(i64, i64)> {
    Some((t.numer().to_i64()?, t.denom().to_i64()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_quarter_turn() {
        let v = unit_phase(&rat(1, 2));
        assert!((v - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn phase_mod_two() {
        let a = unit_phase(&rat(7, 3));
        let b = unit_phase(&rat(1, 3));
        assert!((a - b).norm() < 1e-15);
        let c = unit_phase(&rat(-5, 3));
        assert!((c - b).norm() < 1e-15);
    }
}
