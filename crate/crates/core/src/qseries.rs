//! Exact sparse series in `q` with rational exponents, radial evaluation at
//! roots of unity, and the exact periodic-tail limit.
//!
//! A [`QSeries`] stores coefficients for exponents `n/p` with a declared
//! completeness cutoff: every exponent `<= cutoff/p` is complete, larger
//! exponents are absent by truncation. Arithmetic tightens the cutoff to the
//! minimum guaranteed-complete order, so coefficients inside the cutoff are
//! always exact.

use crate::phase::{rat_int, Rat, C64};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct QSeries {
    /// Exponent denominator: stored exponent `n` means `q^{n/p}`.
    p: i64,
    /// Exponent numerator -> exact rational coefficient (no explicit zeros).
    terms: BTreeMap<i64, Rat>,
    /// All exponents `<= cutoff` (in numerator units) are complete.
    cutoff: i64,
}

impl QSeries {
    pub fn zero(p: i64, cutoff_num: i64) -> Self {
        assert!(p > 0);
        QSeries {
            p,
            terms: BTreeMap::new(),
            cutoff: cutoff_num,
        }
    }

    /// Series with a single term `c * q^{num/p}`.
    pub fn monomial(p: i64, num: i64, c: Rat, cutoff_num: i64) -> Self {
        let mut s = Self::zero(p, cutoff_num);
        s.add_term(num, c);
        s
    }

    pub fn one(p: i64, cutoff_num: i64) -> Self {
        Self::monomial(p, 0, rat_int(1), cutoff_num)
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    /// Completeness cutoff in numerator units (exponent `cutoff/p`).
    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rat)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, num: i64) -> Rat {
        self.terms.get(&num).cloned().unwrap_or_else(|| rat_int(0))
    }

    /// Coefficient of `q^e` for a rational exponent `e` (zero if `e` is not a
    /// multiple of `1/p`).
    pub fn coeff_rat(&self, e: &Rat) -> Rat {
        let scaled = e * rat_int(self.p);
        if scaled.denom() == &BigInt::from(1) {
            if let Some(n) = scaled.numer().to_i64() {
                return self.coeff(n);
            }
        }
        rat_int(0)
    }

    /// Adds `c * q^{num/p}`, dropping the term if it lands beyond the cutoff.
    pub fn add_term(&mut self, num: i64, c: Rat) {
        if num > self.cutoff || c.is_zero() {
            return;
        }
        let entry = self.terms.entry(num).or_insert_with(|| rat_int(0));
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&num);
        }
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// Lifts the series to a finer exponent denominator (a multiple of `p`).
    pub fn lift(&self, new_p: i64) -> QSeries {
        assert!(new_p % self.p == 0);
        let f = new_p / self.p;
        QSeries {
            p: new_p,
            terms: self.terms.iter().map(|(&e, c)| (e * f, c.clone())).collect(),
            cutoff: self.cutoff.saturating_mul(f),
        }
    }

    fn common_p(a: &QSeries, b: &QSeries) -> (QSeries, QSeries) {
        let p = a.p.lcm(&b.p);
        (a.lift(p), b.lift(p))
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let (a, b) = Self::common_p(self, other);
        let cutoff = a.cutoff.min(b.cutoff);
        let mut out = QSeries::zero(a.p, cutoff);
        for (e, c) in a.terms {
            out.add_term(e, c);
        }
        for (e, c) in b.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> QSeries {
        if c.is_zero() {
            return QSeries::zero(self.p, self.cutoff);
        }
        QSeries {
            p: self.p,
            terms: self.terms.iter().map(|(&e, x)| (e, x * c)).collect(),
            cutoff: self.cutoff,
        }
    }

    /// Multiplies by `q^{num/p_shift}` (exact exponent shift).
    pub fn shift(&self, num: i64, p_shift: i64) -> QSeries {
        let p = self.p.lcm(&p_shift);
        let s = self.lift(p);
        let d = num * (p / p_shift);
        QSeries {
            p,
            terms: s.terms.iter().map(|(&e, c)| (e + d, c.clone())).collect(),
            cutoff: s.cutoff.saturating_add(d),
        }
    }

    pub fn mul(&self, other: &QSeries) -> Result<QSeries> {
        let (a, b) = Self::common_p(self, other);
        let (amin, bmin) = match (a.min_exponent(), b.min_exponent()) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                let cutoff = a.cutoff.saturating_add(b.cutoff);
                return Ok(QSeries::zero(a.p, cutoff));
            }
        };
        // The product is guaranteed complete through
        // min(cutoff_a + min_b, cutoff_b + min_a).
        let cutoff = (a.cutoff + bmin).min(b.cutoff + amin);
        if cutoff < amin + bmin {
            return Err(Error::Numerical(
                "series multiplication: empty guaranteed-complete range".into(),
            ));
        }
        let mut out = QSeries::zero(a.p, cutoff);
        for (&e1, c1) in &a.terms {
            for (&e2, c2) in &b.terms {
                if e1 + e2 > cutoff {
                    break;
                }
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Restricts the completeness cutoff (dropping any later terms).
    pub fn truncate(&self, cutoff_num: i64) -> QSeries {
        let mut out = QSeries::zero(self.p, cutoff_num.min(self.cutoff));
        for (&e, c) in &self.terms {
            out.add_term(e, c.clone());
        }
        out
    }

    /// Evaluates at `q = exp(2 pi i (1 + i eps)/r)` where `rho = e^{-2 pi eps/r}`,
    /// i.e. radially toward `e^{2 pi i / r}`. The branch of the rational powers
    /// follows the exponent directly, so there are no cuts.
    pub fn radial_evaluate(&self, r: i64, rho: f64) -> C64 {
        assert!(rho > 0.0 && rho < 1.0);
        let eps = -(r as f64) * rho.ln() / (2.0 * std::f64::consts::PI);
        let mut tot = C64::new(0.0, 0.0);
        for (&e, c) in &self.terms {
            let x = e as f64 / (self.p as f64 * r as f64);
            let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
            let decay = (-2.0 * std::f64::consts::PI * eps * x).exp();
            tot += C64::new(c.to_f64().unwrap_or(0.0), 0.0) * phase * decay;
        }
        tot
    }

    /// Magnitude bound for the truncation tail at the given `rho`, from a
    /// geometric bound on the dropped exponents.
    pub fn tail_bound(&self, r: i64, rho: f64) -> f64 {
        let eps = -(r as f64) * rho.ln() / (2.0 * std::f64::consts::PI);
        let x = self.cutoff as f64 / (self.p as f64 * r as f64);
        (-2.0 * std::f64::consts::PI * eps * x).exp() / (1.0 - rho).max(1e-300)
    }

    /// Serializes as `{"p": int, "terms": [[num, "rational"], ...], "cutoff": int}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "terms": self
                .terms
                .iter()
                .map(|(e, c)| serde_json::json!([e, c.to_string()]))
                .collect::<Vec<_>>(),
            "cutoff": self.cutoff,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<QSeries> {
        let bad = |m: &str| Error::InvalidInput(format!("series JSON: {m}"));
        let p = v["p"].as_i64().ok_or_else(|| bad("missing p"))?;
        let cutoff = v["cutoff"].as_i64().ok_or_else(|| bad("missing cutoff"))?;
        let mut s = QSeries::zero(p, cutoff);
        for t in v["terms"].as_array().ok_or_else(|| bad("missing terms"))? {
            let e = t[0].as_i64().ok_or_else(|| bad("bad exponent"))?;
            let c: Rat = t[1]
                .as_str()
                .ok_or_else(|| bad("bad coefficient"))?
                .parse()
                .map_err(|_| bad("unparsable rational"))?;
            s.add_term(e, c);
        }
        Ok(s)
    }
}

/// Outcome of a radial limit with an error estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: (f64, f64),
    pub error_estimate: f64,
    pub converged: bool,
}

impl LimitValue {
    pub fn complex(&self) -> C64 {
        C64::new(self.value.0, self.value.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extrapolation {
    None,
    Richardson,
}

/// Default radial schedule `rho_k = 1 - 2^{-k}`, `k = 4..14`.
pub fn default_schedule() -> Vec<f64> {
    (4..=14).map(|k| 1.0 - 2f64.powi(-k)).collect()
}

/// Radial limit along the schedule with optional Richardson-type
/// extrapolation (Neville polynomial extrapolation in the true eps nodes).
/// Divergence is flagged (via growing extrapolants), not raised as an error.
pub fn radial_limit(s: &QSeries, r: i64, schedule: &[f64], extrap: Extrapolation) -> LimitValue {
    assert!(schedule.windows(2).all(|w| w[0] < w[1]));
    let vals: Vec<C64> = schedule.iter().map(|&rho| s.radial_evaluate(r, rho)).collect();
    let eps: Vec<f64> = schedule
        .iter()
        .map(|&rho| -(r as f64) * rho.ln() / (2.0 * std::f64::consts::PI))
        .collect();
    let (value, err) = match extrap {
        Extrapolation::None => {
            let last = *vals.last().expect("empty schedule");
            let prev = vals[vals.len().saturating_sub(2)];
            (last, (last - prev).norm())
        }
        Extrapolation::Richardson => neville_at_zero(&eps, &vals),
    };
    let tail = s.tail_bound(r, *schedule.last().expect("empty schedule"));
    let total_err = err.max(tail);
    let scale = 1.0 + value.norm();
    let converged = total_err.is_finite() && total_err < 1e-4 * scale;
    LimitValue {
        value: (value.re, value.im),
        error_estimate: total_err,
        converged,
    }
}

/// Neville polynomial extrapolation to `x = 0` at the given nodes; the error
/// estimate is the last correction size.
pub fn neville_at_zero(xs: &[f64], vals: &[C64]) -> (C64, f64) {
    let n = vals.len();
    let mut t: Vec<C64> = vals.to_vec();
    let mut best = *t.last().expect("nonempty");
    let mut err = f64::INFINITY;
    for m in 1..n {
        for i in 0..n - m {
            // P_{i..i+m}(0)
            let num = t[i + 1] * xs[i] - t[i] * xs[i + m];
            t[i] = num / (xs[i] - xs[i + m]);
        }
        let cur = t[0];
        err = (cur - best).norm();
        best = cur;
    }
    (best, err)
}

/// Iterated Richardson extrapolation for values sampled at eps, eps/2, eps/4, ...
/// (geometric refinement with ratio 2).
pub fn richardson(vals: &[C64]) -> (C64, f64) {
    let mut rows: Vec<Vec<C64>> = vec![vals.to_vec()];
    for j in 1..vals.len() {
        let prev = rows.last().expect("nonempty");
        let f = 2f64.powi(j as i32);
        let next: Vec<C64> = (0..prev.len() - 1)
            .map(|i| (prev[i + 1] * f - prev[i]) / (f - 1.0))
            .collect();
        rows.push(next);
    }
    let best = rows.last().expect("nonempty")[0];
    let prev = if rows.len() >= 2 {
        let row = &rows[rows.len() - 2];
        row[row.len() - 1]
    } else {
        best
    };
    (best, (best - prev).norm())
}

/// Periodic coefficient data for the exact tail limit: a function
/// `C: Z -> C` of period `M` with mean value zero, regularized by
/// `e^{-eps(n + gamma)}` or `e^{-eps(n^2 + 2 alpha n + beta)}`; the limit is
/// independent of the regularization parameters.
#[derive(Debug, Clone)]
pub struct PeriodicCoefficient {
    period: usize,
    /// values[k] = C(k+1) for k in 0..M
    values: Vec<C64>,
}

impl PeriodicCoefficient {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty period".into()));
        }
        Ok(PeriodicCoefficient {
            period: values.len(),
            values,
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// `C(n)` for `n >= 1`.
    pub fn value(&self, n: usize) -> C64 {
        self.values[(n - 1) % self.period]
    }

    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.period as f64
    }

    /// Exact `eps -> 0+` limit of `sum_{n>=1} C(n) e^{-eps(...)}`:
    /// `-sum_{n=1}^{M} (n/M) C(n)`. Requires mean value zero.
    pub fn tail_limit(&self) -> Result<C64> {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if self.mean().norm() > 1e-12 * (1.0 + scale) {
            return Err(Error::Undefined(
                "nonzero mean: the tail limit is singular".into(),
            ));
        }
        let m = self.period as f64;
        let mut tot = C64::new(0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            tot += *v * ((k + 1) as f64 / m);
        }
        Ok(-tot)
    }
}
