//! Exact arithmetic in `Z[xi]` for `xi` a primitive `2r`-th root of unity,
//! represented as integer polynomials reduced mod the cyclotomic polynomial
//! `Phi_{2r}`. Used where a finite root-of-unity sum must collapse to exact
//! integers (Verlinde graded dimensions).

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Cyclotomic polynomial `Phi_n` as integer coefficients (index = degree).
pub fn cyclotomic_polynomial(n: u64) -> Vec<BigInt> {
    // x^n - 1 = prod_{d | n} Phi_d; divide out the proper divisors.
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_polynomial(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    num
}

/// Exact division of integer polynomials (panics on nonzero remainder).
fn poly_div_exact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = a.to_vec();
    let db = b.len() - 1;
    assert!(b[db].is_one(), "divisor must be monic");
    let da = rem.len() - 1;
    if da < db {
        assert!(rem.iter().all(|c| c.is_zero()));
        return vec![BigInt::zero()];
    }
    let mut q = vec![BigInt::zero(); da - db + 1];
    for k in (0..=da - db).rev() {
        let c = rem[k + db].clone();
        if c.is_zero() {
            continue;
        }
        q[k] = c.clone();
        for j in 0..=db {
            let t = &rem[k + j] - &c * &b[j];
            rem[k + j] = t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "inexact polynomial division");
    q
}

/// An element of `Z[x]/Phi_{2r}(x)`, `x = e^{i pi / r}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cyclotomic {
    pub r: u64,
    /// Coefficients of degree < deg(Phi_{2r}).
    pub coeffs: Vec<BigInt>,
}

/// Shared modulus data for a fixed root order.
#[derive(Debug, Clone)]
pub struct CyclotomicRing {
    pub r: u64,
    phi: Vec<BigInt>,
    /// x^k mod Phi for k < 2r, precomputed.
    powers: Vec<Vec<BigInt>>,
}

impl CyclotomicRing {
    pub fn new(r: u64) -> Self {
        let phi = cyclotomic_polynomial(2 * r);
        let deg = phi.len() - 1;
        let mut powers = Vec::with_capacity(2 * r as usize);
        let mut cur = vec![BigInt::zero(); deg.max(1)];
        if deg > 0 {
            cur[0] = BigInt::one();
        }
        for _ in 0..(2 * r) {
            powers.push(cur.clone());
            // multiply by x and reduce
            let mut next = vec![BigInt::zero(); deg + 1];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] = c.clone();
            }
            // reduce the degree-deg term
            let top = next[deg].clone();
            if !top.is_zero() {
                for j in 0..deg {
                    let t = &next[j] - &top * &phi[j];
                    next[j] = t;
                }
            }
            next.truncate(deg.max(1));
            cur = next;
        }
        CyclotomicRing { r, phi, powers }
    }

    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn zero(&self) -> Cyclotomic {
        Cyclotomic {
            r: self.r,
            coeffs: vec![BigInt::zero(); self.degree().max(1)],
        }
    }

    pub fn from_int(&self, v: i64) -> Cyclotomic {
        let mut z = self.zero();
        z.coeffs[0] = BigInt::from(v);
        z
    }

    /// `xi^k` for any integer `k` (reduced mod 2r; `xi^{r} = -1` is handled by
    /// the cyclotomic reduction).
    pub fn root_power(&self, k: i64) -> Cyclotomic {
        let kk = k.rem_euclid(2 * self.r as i64) as usize;
        Cyclotomic {
            r: self.r,
            coeffs: self.powers[kk].clone(),
        }
    }

    pub fn add(&self, a: &Cyclotomic, b: &Cyclotomic) -> Cyclotomic {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x + y)
            .collect();
        Cyclotomic { r: self.r, coeffs }
    }

    pub fn sub(&self, a: &Cyclotomic, b: &Cyclotomic) -> Cyclotomic {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x - y)
            .collect();
        Cyclotomic { r: self.r, coeffs }
    }

    pub fn mul(&self, a: &Cyclotomic, b: &Cyclotomic) -> Cyclotomic {
        let deg = self.degree();
        let mut raw = vec![BigInt::zero(); 2 * deg.max(1)];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                let t = &raw[i + j] + x * y;
                raw[i + j] = t;
            }
        }
        // reduce degrees >= deg using x^k = powers[k]
        let mut out = vec![BigInt::zero(); deg.max(1)];
        for (k, c) in raw.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if k < deg {
                let t = &out[k] + c;
                out[k] = t;
            } else {
                // x^{2r} = 1 in Z[x]/Phi_{2r}, so k mod 2r indexes the table
                let kk = k % (2 * self.r as usize);
                for (j, p) in self.powers[kk].iter().enumerate() {
                    let t = &out[j] + &c * p;
                    out[j] = t;
                }
            }
        }
        Cyclotomic { r: self.r, coeffs: out }
    }

    pub fn is_zero(&self, a: &Cyclotomic) -> bool {
        a.coeffs.iter().all(|c| c.is_zero())
    }

    /// The value as an exact integer, if the canonical form is constant.
    pub fn as_integer(&self, a: &Cyclotomic) -> Option<BigInt> {
        if a.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(a.coeffs[0].clone())
        } else {
            None
        }
    }
}

/// Laurent polynomial in `t` with cyclotomic-integer coefficients.
#[derive(Debug, Clone)]
pub struct CycLaurent {
    pub terms: BTreeMap<i64, Cyclotomic>,
}

impl CycLaurent {
    pub fn zero() -> Self {
        CycLaurent {
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(e: i64, c: Cyclotomic) -> Self {
        let mut t = BTreeMap::new();
        t.insert(e, c);
        CycLaurent { terms: t }
    }

    pub fn add_term(&mut self, ring: &CyclotomicRing, e: i64, c: Cyclotomic) {
        let entry = self.terms.entry(e).or_insert_with(|| ring.zero());
        *entry = ring.add(entry, &c);
        if ring.is_zero(entry) {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, ring: &CyclotomicRing, other: &CycLaurent) -> CycLaurent {
        let mut out = self.clone();
        for (&e, c) in &other.terms {
            out.add_term(ring, e, c.clone());
        }
        out
    }

    /// Truncated product: terms with exponent < `min_keep` are dropped.
    pub fn mul_truncated(
        &self,
        ring: &CyclotomicRing,
        other: &CycLaurent,
        min_keep: i64,
    ) -> CycLaurent {
        let mut out = CycLaurent::zero();
        for (&e1, c1) in &self.terms {
            for (&e2, c2) in &other.terms {
                if e1 + e2 < min_keep {
                    continue;
                }
                out.add_term(ring, e1 + e2, ring.mul(c1, c2));
            }
        }
        out
    }
}
