//! Integer linear algebra on linking matrices and the spin / spin^c /
//! homology combinatorics built from them.
//!
//! For a surgery presentation with linking matrix `B` we use the standard
//! identifications: `H_1 = Z^V / B Z^V`, spin structures are `s` in `{0,1}^V`
//! with `B s = diag(B) mod 2`, and spin^c structures are characteristic
//! vectors `K mod 2 B Z^V`. Torsion cosets are canonicalized through the
//! Smith transform, which gives a deterministic indexing for all the
//! coefficient matrices downstream.

use crate::matrix::{smith_normal_form, IntMatrix, SmithDecomposition};
use crate::phase::{is_integer, rat_int, Rat};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Symmetric linking matrix with cached signature data.
#[derive(Debug, Clone)]
pub struct LinkingMatrix {
    b: IntMatrix,
    b_plus: usize,
    b_minus: usize,
    b_one: usize,
    det: BigInt,
}

impl LinkingMatrix {
    pub fn new(b: IntMatrix) -> Result<Self> {
        if !b.is_symmetric() {
            return Err(Error::InvalidInput("linking matrix must be symmetric".into()));
        }
        let (b_plus, b_minus, b_one) = b.signature();
        let det = b.det();
        debug_assert_eq!(det.is_zero(), b_one > 0);
        Ok(LinkingMatrix {
            b,
            b_plus,
            b_minus,
            b_one,
            det,
        })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.b
    }

    pub fn size(&self) -> usize {
        self.b.n
    }

    pub fn signature(&self) -> i64 {
        self.b_plus as i64 - self.b_minus as i64
    }

    pub fn b_plus(&self) -> usize {
        self.b_plus
    }

    pub fn b_minus(&self) -> usize {
        self.b_minus
    }

    pub fn b_one(&self) -> usize {
        self.b_one
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn trace(&self) -> i64 {
        self.b.trace()
    }

    /// Exact inverse; defined only when `b_1 = 0`.
    pub fn inverse(&self) -> Result<Vec<Vec<Rat>>> {
        self.b.inverse_rational()
    }
}

/// Homology, spin and spin^c data extracted from a linking matrix.
#[derive(Debug, Clone)]
pub struct HomologyData {
    /// Invariant factors `d_1 | d_2 | ...` (only entries > 1), torsion part.
    pub invariant_factors: Vec<i64>,
    pub b_one: usize,
    /// The Smith transform realizing the decomposition (recorded so that all
    /// coset canonicalizations and any torsion/free splitting are consistent).
    pub smith: SmithDecomposition,
    /// Coset representatives of `Z^V / B Z^V` (empty when `b_1 > 0`).
    pub cosets: Vec<Vec<i64>>,
    /// Coset representatives of `Z^V / 2B Z^V` (empty when `b_1 > 0`).
    pub cosets_2b: Vec<Vec<i64>>,
    /// Spin structures as vectors in `{0,1}^V`.
    pub spins: Vec<Vec<i64>>,
    /// Characteristic-vector representatives `K mod 2 B Z^V` (b_1 = 0 only).
    pub spinc: Vec<Vec<i64>>,
}

/// Computes the homology package for a symmetric linking matrix.
pub fn homology(lk: &LinkingMatrix) -> HomologyData {
    let b = lk.matrix();
    let n = b.n;
    let smith = smith_normal_form(b);
    let diag = smith.diag();
    let invariant_factors: Vec<i64> = diag.iter().copied().filter(|&d| d > 1).collect();
    let b_one = diag.iter().filter(|&&d| d == 0).count();
    debug_assert_eq!(b_one, lk.b_one());

    let spins = enumerate_spins(b);

    let (cosets, cosets_2b, spinc) = if b_one == 0 {
        let cosets = enumerate_cosets(&smith, &diag, 1);
        let cosets_2b = enumerate_cosets(&smith, &diag, 2);
        // spin^c representatives: K = 2b + B s for a fixed spin s over cosets b
        let s0 = &spins[0];
        let bs = b.mul_vec(s0);
        let spinc = cosets
            .iter()
            .map(|c| {
                (0..n)
                    .map(|i| 2 * c[i] + bs[i])
                    .collect::<Vec<i64>>()
            })
            .collect();
        (cosets, cosets_2b, spinc)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    HomologyData {
        invariant_factors,
        b_one,
        smith,
        cosets,
        cosets_2b,
        spins,
        spinc,
    }
}

/// Coset representatives of `Z^V / (scale * B) Z^V` from the Smith transform:
/// with `U B V = D`, vectors are classified by `U x mod scale * d_i`, and the
/// canonical representative of a key `y` is `U^{-1} y`.
fn enumerate_cosets(smith: &SmithDecomposition, diag: &[i64], scale: i64) -> Vec<Vec<i64>> {
    let n = diag.len();
    let moduli: Vec<i64> = diag.iter().map(|&d| (d * scale).abs()).collect();
    if moduli.iter().any(|&m| m == 0) {
        return Vec::new();
    }
    let total: i64 = moduli.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    let mut y = vec![0i64; n];
    loop {
        out.push(smith.u_inv.mul_vec(&y));
        // increment odometer
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            y[i] += 1;
            if y[i] < moduli[i] {
                break;
            }
            y[i] = 0;
            i += 1;
        }
    }
}

impl HomologyData {
    /// Order of `H_1` (0 means infinite, i.e. `b_1 > 0`).
    pub fn h1_order(&self) -> i64 {
        if self.b_one > 0 {
            0
        } else {
            self.invariant_factors.iter().product::<i64>().max(1)
        }
    }

    /// Canonical coset index of `v` in `Z^V / B Z^V` (requires `b_1 = 0`).
    pub fn coset_index(&self, v: &[i64]) -> usize {
        self.coset_index_scaled(v, 1)
    }

    /// Canonical coset index of `v` in `Z^V / 2B Z^V` (requires `b_1 = 0`).
    pub fn coset_index_2b(&self, v: &[i64]) -> usize {
        self.coset_index_scaled(v, 2)
    }

    fn coset_index_scaled(&self, v: &[i64], scale: i64) -> usize {
        let diag = self.smith.diag();
        let y = self.smith.u.mul_vec(v);
        let key: Vec<i64> = y
            .iter()
            .zip(&diag)
            .map(|(&x, &d)| x.rem_euclid((d * scale).abs().max(1)))
            .collect();
        // mixed-radix index, least-significant first
        let mut idx = 0i64;
        let mut stride = 1i64;
        for (k, &d) in key.iter().zip(&diag) {
            let m = (d * scale).abs().max(1);
            idx += k * stride;
            stride *= m;
        }
        idx as usize
    }

    /// True iff `a` and `b` represent the same class in `Z^V / B Z^V`.
    pub fn same_coset(&self, a: &[i64], b: &[i64]) -> bool {
        let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let y = self.smith.u.mul_vec(&diff);
        y.iter()
            .zip(&self.smith.diag())
            .all(|(&x, &d)| if d == 0 { x == 0 } else { x % d == 0 })
    }
}

fn enumerate_spins(b: &IntMatrix) -> Vec<Vec<i64>> {
    let n = b.n;
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        let s: Vec<i64> = (0..n).map(|i| ((mask >> i) & 1) as i64).collect();
        let bs = b.mul_vec(&s);
        if (0..n).all(|i| (bs[i] - b[(i, i)]).rem_euclid(2) == 0) {
            out.push(s);
        }
    }
    out
}

/// `K = 2b + Bs`: the characteristic vector of the spin^c structure
/// `sigma(b, s)`. Errors if `s` is not a valid spin vector.
pub fn spinc_from_spin(lk: &LinkingMatrix, s: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    let m = lk.matrix();
    let bs = m.mul_vec(s);
    if !(0..m.n).all(|i| (bs[i] - m[(i, i)]).rem_euclid(2) == 0) {
        return Err(Error::InvalidInput("not a spin vector: Bs != diag(B) mod 2".into()));
    }
    let k: Vec<i64> = (0..m.n).map(|i| 2 * b[i] + bs[i]).collect();
    // characteristic: K_I = B_II mod 2
    debug_assert!((0..m.n).all(|i| (k[i] - m[(i, i)]).rem_euclid(2) == 0));
    Ok(k)
}

/// Linking form `lk(a, b) = a^T B^{-1} b mod 1` on torsion classes.
pub fn linking_form(binv: &[Vec<Rat>], a: &[i64], b: &[i64]) -> Rat {
    let mut tot = rat_int(0);
    for (i, row) in binv.iter().enumerate() {
        if a[i] == 0 {
            continue;
        }
        for (j, x) in row.iter().enumerate() {
            tot += rat_int(a[i]) * x * rat_int(b[j]);
        }
    }
    tot
}

/// Quadratic refinement `q_s(a) = a^T B^{-1} a + s^T a mod 2`.
pub fn quadratic_refinement(binv: &[Vec<Rat>], s: &[i64], a: &[i64]) -> Rat {
    let mut tot = linking_form(binv, a, a);
    for (si, ai) in s.iter().zip(a) {
        tot += rat_int(si * ai);
    }
    tot
}

/// Mod-4 reduction of the Rokhlin invariant: `sigma - s^T B s mod 4`.
pub fn rokhlin(lk: &LinkingMatrix, s: &[i64]) -> i64 {
    let bs = lk.matrix().mul_vec(s);
    let sbs: i64 = s.iter().zip(&bs).map(|(a, b)| a * b).sum();
    (lk.signature() - sbs).rem_euclid(4)
}

/// A cohomology class `omega in H^1(M; Q/2Z)` given by its meridian values
/// `mu_I = omega(m_I)`, exact rationals reduced mod 2.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTorusClass {
    pub mu: Vec<Rat>,
    /// True iff every `mu_I` is an integer mod 2 (the class is excluded from
    /// the CGP decoration set).
    pub integral_mod2: bool,
}

impl TwoTorusClass {
    /// Builds and validates the admissibility condition `B mu = 0 mod 2`.
    pub fn new(lk: &LinkingMatrix, mu: Vec<Rat>) -> Result<Self> {
        let n = lk.size();
        if mu.len() != n {
            return Err(Error::InvalidInput("mu length mismatch".into()));
        }
        let two = rat_int(2);
        let mu: Vec<Rat> = mu
            .into_iter()
            .map(|m| {
                let mut x = m % two.clone();
                if x.is_negative() {
                    x += two.clone();
                }
                x
            })
            .collect();
        for i in 0..n {
            let mut row = rat_int(0);
            for j in 0..n {
                row += rat_int(lk.matrix()[(i, j)]) * mu[j].clone();
            }
            let r = row % two.clone();
            if !r.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "B mu != 0 mod 2 at row {i}: residue {r}"
                )));
            }
        }
        let integral_mod2 = mu.iter().all(is_integer);
        Ok(TwoTorusClass { mu, integral_mod2 })
    }

    /// True iff no `mu_I` is an integer (the CGP admissibility condition for
    /// this presentation).
    pub fn admissible(&self) -> bool {
        self.mu.iter().all(|m| !is_integer(m))
    }

    /// `omega(a) = mu^T a` for a torsion class rep `a` (value mod 2).
    pub fn pair(&self, a: &[i64]) -> Rat {
        self.mu
            .iter()
            .zip(a)
            .map(|(m, &x)| m * rat_int(x))
            .sum()
    }
}

/// Enumerates all classes `mu = 2 B^{-1} n mod 2`, `n` over coset reps of
/// `Z^V / B Z^V` (exhaustive; requires `b_1 = 0`). Classes with every entry
/// integral are flagged rather than dropped.
pub fn enumerate_omega(lk: &LinkingMatrix, hom: &HomologyData) -> Result<Vec<TwoTorusClass>> {
    if lk.b_one() != 0 {
        return Err(Error::InvalidInput(
            "exhaustive omega enumeration requires b_1 = 0".into(),
        ));
    }
    let binv = lk.inverse()?;
    let mut out = Vec::new();
    for n in &hom.cosets {
        let mu: Vec<Rat> = binv
            .iter()
            .map(|row| {
                let mut t = rat_int(0);
                for (x, &ni) in row.iter().zip(n) {
                    t += x * rat_int(2 * ni);
                }
                t
            })
            .collect();
        out.push(TwoTorusClass::new(lk, mu)?);
    }
    Ok(out)
}
