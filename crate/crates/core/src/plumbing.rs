//! Plumbing-tree presentations, the coefficient expansion of the link series
//! `F`, and sign-refined Reidemeister torsion.
//!
//! For a plumbing tree the link series factorizes over vertices:
//! `F(x) = prod_I (x_I - 1/x_I)^{2 - deg(I)}`. Vertices of degree <= 2
//! contribute finite Laurent polynomials; a degree-d vertex with d >= 3
//! contributes `(x - 1/x)^{-(d-2)}`, expanded as the symmetric average of the
//! two geometric expansions. The resulting half-integer coefficients are kept
//! as exact rationals.

use crate::lattice::{LinkingMatrix, TwoTorusClass};
use crate::matrix::IntMatrix;
use crate::phase::{is_integer, rat, rat_int, rat_to_f64, Rat, C64};
use crate::{Error, Result};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Vertex {
    pub id: i64,
    pub framing: i64,
}

/// A tree of framed unknots. Vertices carry framings; every edge is a Hopf
/// link between the corresponding components.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PlumbingPresentation {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(i64, i64)>,
}

impl PlumbingPresentation {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(i64, i64)>) -> Result<Self> {
        let p = PlumbingPresentation { vertices, edges };
        p.validate_graph()?;
        Ok(p)
    }

    /// Star-shaped tree: one central vertex and one leaf per arm framing.
    pub fn star(center: i64, arms: &[i64]) -> Self {
        let mut vertices = vec![Vertex { id: 0, framing: center }];
        let mut edges = Vec::new();
        for (i, &f) in arms.iter().enumerate() {
            vertices.push(Vertex {
                id: i as i64 + 1,
                framing: f,
            });
            edges.push((0, i as i64 + 1));
        }
        PlumbingPresentation { vertices, edges }
    }

    /// Linear chain of framings (a path graph).
    pub fn chain(framings: &[i64]) -> Self {
        let vertices = framings
            .iter()
            .enumerate()
            .map(|(i, &f)| Vertex { id: i as i64, framing: f })
            .collect();
        let edges = (1..framings.len())
            .map(|i| (i as i64 - 1, i as i64))
            .collect();
        PlumbingPresentation { vertices, edges }
    }

    /// The E8 plumbing: Y-shaped, all framings -2, arms of length 1, 2, 4.
    pub fn e8() -> Self {
        let vertices = (0..8).map(|i| Vertex { id: i, framing: -2 }).collect();
        let edges = vec![(0, 1), (0, 2), (2, 3), (0, 4), (4, 5), (5, 6), (6, 7)];
        PlumbingPresentation { vertices, edges }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn index_of(&self) -> HashMap<i64, usize> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id, i))
            .collect()
    }

    fn validate_graph(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty plumbing".into()));
        }
        let idx = self.index_of();
        if idx.len() != n {
            return Err(Error::InvalidInput("duplicate vertex ids".into()));
        }
        let mut seen = HashSet::new();
        for &(a, b) in &self.edges {
            if a == b {
                return Err(Error::InvalidInput("self-loop".into()));
            }
            if !idx.contains_key(&a) || !idx.contains_key(&b) {
                return Err(Error::InvalidInput(format!(
                    "edge ({a},{b}) references unknown vertex"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::InvalidInput("multiple edge".into()));
            }
        }
        if self.edges.len() + 1 != n {
            return Err(Error::InvalidInput(format!(
                "not a tree: {} vertices, {} edges",
                n,
                self.edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            let (ia, ib) = (idx[&a], idx[&b]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::InvalidInput("disconnected plumbing graph".into()));
        }
        Ok(())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let idx = self.index_of();
        let mut deg = vec![0usize; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[idx[&a]] += 1;
            deg[idx[&b]] += 1;
        }
        deg
    }

    /// Edges as index pairs into the vertex list.
    pub fn edge_indices(&self) -> Vec<(usize, usize)> {
        let idx = self.index_of();
        self.edges.iter().map(|&(a, b)| (idx[&a], idx[&b])).collect()
    }

    /// Linking matrix: framings on the diagonal, adjacency off-diagonal.
    pub fn linking_matrix(&self) -> Result<LinkingMatrix> {
        let idx = self.index_of();
        let n = self.vertices.len();
        let mut m = IntMatrix::zeros(n);
        for (i, v) in self.vertices.iter().enumerate() {
            m[(i, i)] = v.framing;
        }
        for &(a, b) in &self.edges {
            let (ia, ib) = (idx[&a], idx[&b]);
            m[(ia, ib)] = 1;
            m[(ib, ia)] = 1;
        }
        LinkingMatrix::new(m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self
                .vertices
                .iter()
                .map(|v| serde_json::json!({"id": v.id, "framing": v.framing}))
                .collect::<Vec<_>>(),
            "edges": self
                .edges
                .iter()
                .map(|&(a, b)| serde_json::json!([a, b]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("plumbing JSON: {m}"));
        let vertices = v["vertices"]
            .as_array()
            .ok_or_else(|| bad("missing vertices"))?
            .iter()
            .map(|x| {
                Ok(Vertex {
                    id: x["id"].as_i64().ok_or_else(|| bad("bad id"))?,
                    framing: x["framing"].as_i64().ok_or_else(|| bad("bad framing"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = v["edges"]
            .as_array()
            .ok_or_else(|| bad("missing edges"))?
            .iter()
            .map(|x| {
                let a = x[0].as_i64().ok_or_else(|| bad("bad edge"))?;
                let b = x[1].as_i64().ok_or_else(|| bad("bad edge"))?;
                Ok((a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertices, edges)
    }
}

/// Structural report used to select exact vs numeric limit strategies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresentationReport {
    pub vertices: usize,
    pub sigma: i64,
    pub b_plus: usize,
    pub b_minus: usize,
    pub b_one: usize,
    pub h1_order: i64,
    pub weakly_negative_definite: bool,
    pub negative_definite: bool,
    pub y_shaped: bool,
}

pub fn validate_presentation(tree: &PlumbingPresentation) -> Result<PresentationReport> {
    let lk = tree.linking_matrix()?;
    let degs = tree.degrees();
    let high: Vec<usize> = (0..tree.len()).filter(|&i| degs[i] >= 3).collect();
    let weakly_negative_definite = if high.is_empty() {
        true
    } else if lk.b_one() > 0 {
        false
    } else {
        let binv = lk.inverse()?;
        let m = high.len();
        let mut sub: Vec<Vec<Rat>> = vec![vec![rat_int(0); m]; m];
        for (a, &i) in high.iter().enumerate() {
            for (b, &j) in high.iter().enumerate() {
                sub[a][b] = binv[i][j].clone();
            }
        }
        rational_negative_definite(&sub)
    };
    let negative_definite = lk.b_plus() == 0 && lk.b_one() == 0;
    let y_shaped = high.len() == 1 && degs[high[0]] == 3;
    let h1_order = if lk.b_one() > 0 {
        0
    } else {
        lk.det().abs().to_i64().unwrap_or(i64::MAX)
    };
    Ok(PresentationReport {
        vertices: tree.len(),
        sigma: lk.signature(),
        b_plus: lk.b_plus(),
        b_minus: lk.b_minus(),
        b_one: lk.b_one(),
        h1_order,
        weakly_negative_definite,
        negative_definite,
        y_shaped,
    })
}

/// Negative definiteness of a symmetric rational matrix via exact LDL^T
/// pivots (rational Cholesky).
fn rational_negative_definite(m: &[Vec<Rat>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .iter()
        .map(|r| r.iter().map(|x| -x.clone()).collect())
        .collect();
    for k in 0..n {
        if !a[k][k].is_positive() {
            return false;
        }
        let d = a[k][k].clone();
        for i in k + 1..n {
            let f = &a[i][k] / &d;
            for j in k + 1..n {
                let t = &a[i][j] - &f * &a[k][j];
                a[i][j] = t;
            }
        }
    }
    true
}

/// Per-vertex factor of the link series `F`.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexFactor {
    /// Finite Laurent polynomial: sorted (exponent, coefficient) pairs.
    Finite(Vec<(i64, Rat)>),
    /// `(x - 1/x)^{-m}` with `m >= 1`: symmetric average of the expansions at
    /// 0 and at infinity. Support is `+-(m + 2j)`, `j >= 0`.
    NegativePower { m: i64 },
}

impl VertexFactor {
    /// `(x - 1/x)^e` for an integer exponent `e`.
    pub fn power(e: i64) -> VertexFactor {
        if e >= 0 {
            let mut terms = Vec::new();
            for j in 0..=e {
                let c = binomial(e, j) * if j % 2 == 0 { 1 } else { -1 };
                terms.push((e - 2 * j, rat_int(c)));
            }
            terms.sort_by_key(|t| t.0);
            VertexFactor::Finite(terms)
        } else {
            VertexFactor::NegativePower { m: -e }
        }
    }

    /// Coefficient of `x^l` in this factor.
    pub fn coefficient(&self, l: i64) -> Rat {
        match self {
            VertexFactor::Finite(terms) => terms
                .iter()
                .find(|(e, _)| *e == l)
                .map(|(_, c)| c.clone())
                .unwrap_or_else(|| rat_int(0)),
            VertexFactor::NegativePower { m } => {
                let a = l.abs();
                if a < *m || (a - m) % 2 != 0 {
                    return rat_int(0);
                }
                let j = (a - m) / 2;
                let c = rat(binomial(m - 1 + j, j), 2);
                if l < 0 || m % 2 == 0 {
                    c
                } else {
                    -c
                }
            }
        }
    }

    /// Support restricted to `|l| <= bound`, increasing.
    pub fn support(&self, bound: i64) -> Vec<i64> {
        match self {
            VertexFactor::Finite(terms) => terms
                .iter()
                .map(|(e, _)| *e)
                .filter(|e| e.abs() <= bound)
                .collect(),
            VertexFactor::NegativePower { m } => {
                let mut v = Vec::new();
                let mut a = *m;
                while a <= bound {
                    v.push(-a);
                    v.push(a);
                    a += 2;
                }
                v.sort();
                v
            }
        }
    }
}

fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 0..k {
        r = r
            .checked_mul((n - i) as i128)
            .expect("binomial overflow")
            / (i + 1) as i128;
    }
    i64::try_from(r).expect("binomial overflow")
}

/// The factorized link-series coefficients `F_l = prod_I factor_I(l_I)` of a
/// plumbing tree, with sparse expansion within per-vertex bounds.
#[derive(Debug, Clone)]
pub struct FCoefficients {
    pub factors: Vec<VertexFactor>,
    pub degrees: Vec<usize>,
}

impl FCoefficients {
    pub fn coefficient(&self, l: &[i64]) -> Rat {
        let mut c = rat_int(1);
        for (f, &li) in self.factors.iter().zip(l) {
            let ci = f.coefficient(li);
            if ci.is_zero() {
                return rat_int(0);
            }
            c *= ci;
        }
        c
    }

    /// Sparse expansion of all nonzero `F_l` with `|l_I| <= bounds[I]`.
    pub fn expand(&self, bounds: &[i64]) -> BTreeMap<Vec<i64>, Rat> {
        let supports: Vec<Vec<i64>> = self
            .factors
            .iter()
            .zip(bounds)
            .map(|(f, &b)| f.support(b))
            .collect();
        let mut out = BTreeMap::new();
        let n = self.factors.len();
        let mut idx = vec![0usize; n];
        if supports.iter().any(|s| s.is_empty()) {
            return out;
        }
        loop {
            let l: Vec<i64> = idx.iter().zip(&supports).map(|(&i, s)| s[i]).collect();
            let c = self.coefficient(&l);
            if !c.is_zero() {
                out.insert(l, c);
            }
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                idx[i] += 1;
                if idx[i] < supports[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }
}

/// Builds the per-vertex factorization of
/// `F(x) = prod_I (x_I - 1/x_I)^{2 - deg(I)}`.
pub fn f_coefficients(tree: &PlumbingPresentation) -> FCoefficients {
    let degrees = tree.degrees();
    let factors = degrees
        .iter()
        .map(|&d| VertexFactor::power(2 - d as i64))
        .collect();
    FCoefficients { factors, degrees }
}

/// Outcome of a torsion evaluation.
#[derive(Debug, Clone)]
pub struct TorsionValue {
    pub value: C64,
    /// Set when an integral `mu_I` on a high-valency vertex forces the value
    /// to zero; downstream Zhat limits are then expected to diverge.
    pub vanished: bool,
}

/// Sign-refined Reidemeister torsion of a plumbed manifold at the character
/// determined by `omega`:
/// `(-1)^{b_+} prod_I (e^{pi i mu_I} - e^{-pi i mu_I})^{deg(I) - 2}`,
/// times `e^{pi i (eps - s)^T B mu}` when a spin structure is supplied.
pub fn torsion_plumbed(
    tree: &PlumbingPresentation,
    omega: &TwoTorusClass,
    spin: Option<&[i64]>,
) -> Result<TorsionValue> {
    let lk = tree.linking_matrix()?;
    let degs = tree.degrees();
    let n = tree.len();
    let mut value = if lk.b_plus() % 2 == 1 {
        C64::new(-1.0, 0.0)
    } else {
        C64::new(1.0, 0.0)
    };
    let mut vanished = false;
    for i in 0..n {
        let e = degs[i] as i64 - 2;
        let mu = &omega.mu[i];
        if is_integer(mu) {
            match e.cmp(&0) {
                std::cmp::Ordering::Greater => vanished = true,
                std::cmp::Ordering::Equal => {}
                std::cmp::Ordering::Less => {
                    return Err(Error::Undefined(format!(
                        "torsion pole: integral mu at vertex of degree {}",
                        degs[i]
                    )))
                }
            }
            continue;
        }
        let x = rat_to_f64(mu);
        let base = C64::new(0.0, 2.0 * (std::f64::consts::PI * x).sin());
        value *= base.powi(e as i32);
    }
    if vanished {
        return Ok(TorsionValue {
            value: C64::new(0.0, 0.0),
            vanished: true,
        });
    }
    if let Some(s) = spin {
        // e^{pi i (eps - s)^T B mu}; B mu is an even integer vector, so this
        // is a sign that drops out in the class version.
        let mut expo = rat_int(0);
        for i in 0..n {
            let c = 1 - s[i];
            if c == 0 {
                continue;
            }
            for j in 0..n {
                expo += rat_int(c * lk.matrix()[(i, j)]) * omega.mu[j].clone();
            }
        }
        value *= crate::phase::unit_phase(&expo);
    }
    Ok(TorsionValue {
        value,
        vanished: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_omega, homology};

    #[test]
    fn json_round_trip_bit_exact() {
        let t = PlumbingPresentation::star(-2, &[-3, -2, -5]);
        let j = serde_json::to_string(&t.to_json()).unwrap();
        let t2 = PlumbingPresentation::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(t, t2);
        let j2 = serde_json::to_string(&t2.to_json()).unwrap();
        assert_eq!(j, j2);
    }

    #[test]
    fn rejects_bad_graphs() {
        let v: Vec<Vertex> = (0..3).map(|i| Vertex { id: i, framing: -2 }).collect();
        assert!(PlumbingPresentation::new(v.clone(), vec![(0, 1), (1, 2), (2, 0)]).is_err());
        assert!(PlumbingPresentation::new(v.clone(), vec![(0, 0), (1, 2)]).is_err());
        assert!(PlumbingPresentation::new(v, vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn validate_e8() {
        let e8 = PlumbingPresentation::e8();
        let rep = validate_presentation(&e8).unwrap();
        assert_eq!(rep.sigma, -8);
        assert_eq!(rep.h1_order, 1);
        assert!(rep.negative_definite);
        assert!(rep.weakly_negative_definite);
        assert!(rep.y_shaped);
    }

    #[test]
    fn validate_single_vertices() {
        let s3 = PlumbingPresentation::star(-1, &[]);
        let rep = validate_presentation(&s3).unwrap();
        assert_eq!(rep.h1_order, 1);
        assert!(!rep.y_shaped);
        let s2s1 = PlumbingPresentation::star(0, &[]);
        let rep = validate_presentation(&s2s1).unwrap();
        assert_eq!(rep.b_one, 1);
        assert!(rep.weakly_negative_definite);
    }

    #[test]
    fn f_single_vertex_deg0() {
        let t = PlumbingPresentation::star(-1, &[]);
        let f = f_coefficients(&t);
        assert_eq!(f.coefficient(&[2]), rat_int(1));
        assert_eq!(f.coefficient(&[0]), rat_int(-2));
        assert_eq!(f.coefficient(&[-2]), rat_int(1));
        assert_eq!(f.coefficient(&[1]), rat_int(0));
        assert_eq!(f.coefficient(&[4]), rat_int(0));
    }

    #[test]
    fn f_negative_power_vs_taylor_oracle() {
        // one-sided Taylor coefficients of (x - 1/x)^{-m} at 0:
        // (-1)^m sum_j binom(m-1+j, j) x^{m+2j};
        // the symmetric average carries half of that weight on each side.
        for m in 1..=4i64 {
            let f = VertexFactor::NegativePower { m };
            for j in 0..8i64 {
                let l = m + 2 * j;
                let expect =
                    rat(binomial(m - 1 + j, j), 2) * rat_int(if m % 2 == 0 { 1 } else { -1 });
                assert_eq!(f.coefficient(l), expect, "m={m} l={l}");
                assert_eq!(f.coefficient(-l), rat(binomial(m - 1 + j, j), 2));
            }
            assert!(f.coefficient(m + 1).is_zero());
            assert!(f.coefficient(0).is_zero());
        }
    }

    #[test]
    fn f_parity_invariant() {
        // F_l != 0 => l_I = deg(I) mod 2, exhaustively within bounds
        let t = PlumbingPresentation::star(-2, &[-3, -2, -5]);
        let f = f_coefficients(&t);
        let degs = t.degrees();
        let exp = f.expand(&[9, 3, 3, 3]);
        assert!(!exp.is_empty());
        for (l, c) in exp {
            assert!(!c.is_zero());
            for (i, &li) in l.iter().enumerate() {
                assert_eq!(li.rem_euclid(2), (degs[i] as i64).rem_euclid(2), "l={l:?}");
            }
        }
    }

    #[test]
    fn f_antisymmetry_low_valency() {
        let deg0 = VertexFactor::power(2);
        for l in [-2i64, 0, 2] {
            assert_eq!(deg0.coefficient(l), deg0.coefficient(-l));
        }
        let deg1 = VertexFactor::power(1);
        assert_eq!(deg1.coefficient(1), -deg1.coefficient(-1));
    }

    #[test]
    fn genus_one_case() {
        // g = 1: (x - 1/x)^0 = 1: only F_0 = 1
        let f = VertexFactor::power(0);
        assert_eq!(f.coefficient(0), rat_int(1));
        assert_eq!(f.coefficient(2), rat_int(0));
        assert_eq!(f.support(10), vec![0]);
    }

    #[test]
    fn torsion_l31() {
        // B = [-3], mu = 2/3: T = (e^{2 pi i/3} - e^{-2 pi i/3})^{-2} = -1/3
        let t = PlumbingPresentation::star(-3, &[]);
        let lk = t.linking_matrix().unwrap();
        let omega = TwoTorusClass::new(&lk, vec![rat(2, 3)]).unwrap();
        let tv = torsion_plumbed(&t, &omega, None).unwrap();
        assert!((tv.value - C64::new(-1.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!(!tv.vanished);
    }

    #[test]
    fn torsion_spin_independence() {
        let t = PlumbingPresentation::star(-2, &[-3, -2, -5]);
        let lk = t.linking_matrix().unwrap();
        let h = homology(&lk);
        let omegas = enumerate_omega(&lk, &h).unwrap();
        let omega = omegas.iter().find(|w| w.admissible()).unwrap();
        let base = torsion_plumbed(&t, omega, None).unwrap().value;
        for s in &h.spins {
            let v = torsion_plumbed(&t, omega, Some(s)).unwrap().value;
            assert!((v - base).norm() < 1e-12);
        }
    }

    #[test]
    fn torsion_integral_mu_on_trivalent_vanishes() {
        // a class integral exactly at the trivalent center: torsion reported
        // as zero with the divergence flag set
        let t = PlumbingPresentation::star(-1, &[-3, -3, -6]);
        let lk = t.linking_matrix().unwrap();
        let omega =
            TwoTorusClass::new(&lk, vec![rat_int(0), rat(4, 3), rat(4, 3), rat(4, 3)]).unwrap();
        let tv = torsion_plumbed(&t, &omega, None).unwrap();
        assert!(tv.vanished);
        assert_eq!(tv.value, C64::new(0.0, 0.0));
        // fully integral mu hits the pole at a leaf instead
        let zero = TwoTorusClass::new(&lk, vec![rat_int(0); 4]).unwrap();
        assert!(torsion_plumbed(&t, &zero, None).is_err());
    }

    #[test]
    fn deg2_contributes_unit() {
        // a chain vertex (degree 2) has exponent 0: factor 1 even at integral mu
        let t = PlumbingPresentation::chain(&[-2, -3, -2]);
        let lk = t.linking_matrix().unwrap();
        let h = homology(&lk);
        for w in enumerate_omega(&lk, &h).unwrap() {
            if !w.admissible() {
                continue;
            }
            let tv = torsion_plumbed(&t, &w, None).unwrap();
            assert!(tv.value.norm() > 0.0);
        }
    }
}
