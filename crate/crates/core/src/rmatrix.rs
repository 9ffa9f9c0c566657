//! The unrolled quantum group at `xi = e^{i pi / r}`: the modules `V_alpha`
//! and `S_n`, braiding / twist / duality data, and (1,1)-tangle evaluation of
//! braid closures for CGP link invariants, ADO and colored Jones.
//!
//! Matrices are dense complex doubles; scalars are extracted from the (0,0)
//! entry with a full-diagonality assertion.

use crate::cgp::CgpContext;
use crate::phase::C64;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            a: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let s = self[(i, k)];
                if s.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += s * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let s = self[(i, j)];
                if s.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = s * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| {
                    m[(a, col)]
                        .norm()
                        .partial_cmp(&m[(b, col)].norm())
                        .expect("NaN pivot")
                })
                .expect("empty");
            if m[(piv, col)].norm() < 1e-300 {
                return Err(Error::Numerical("singular matrix in braid evaluation".into()));
            }
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(piv, j)];
                inv[(piv, j)] = t;
            }
            let p = m[(col, col)];
            for j in 0..n {
                m[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = m[(i, col)];
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let d = f * m[(col, j)];
                    m[(i, j)] -= d;
                    let d = f * inv[(col, j)];
                    inv[(i, j)] -= d;
                }
            }
        }
        Ok(inv)
    }

    pub fn norm_max(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(&other.a) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x *= c;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.cols + j]
    }
}

/// Module color: a Verma-type `V_alpha` (dimension r) or a simple `S_n`
/// (dimension n+1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Color {
    V { re: f64, im: f64 },
    S { n: usize },
}

impl Color {
    pub fn v(alpha: C64) -> Self {
        Color::V {
            re: alpha.re,
            im: alpha.im,
        }
    }

    pub fn alpha(&self, r: i64) -> C64 {
        match *self {
            Color::V { re, im } => C64::new(re, im),
            // S_n is the highest-weight module of weight n = alpha + r - 1
            Color::S { n } => C64::new(n as f64 - (r - 1) as f64, 0.0),
        }
    }
}

/// Explicit matrices for `E`, `F`, `K^{+-1}`, `H` on the standard bases.
#[derive(Debug, Clone)]
pub struct UqModuleRep {
    pub color: Color,
    pub r: i64,
    pub dim: usize,
    /// H-eigenvalues (weights) on the basis.
    pub weights: Vec<C64>,
    /// E superdiagonal: `E v_i = e[i] v_{i-1}` (index 1..dim-1).
    pub e_super: Vec<C64>,
}

impl UqModuleRep {
    pub fn new(color: Color, r: i64) -> Result<Self> {
        let ctx = CgpContext::new(r)?;
        match color {
            Color::V { re, im } => {
                let alpha = C64::new(re, im);
                let dim = r as usize;
                let r1 = (r - 1) as f64;
                let weights: Vec<C64> = (0..dim)
                    .map(|i| alpha + C64::new(r1 - 2.0 * i as f64, 0.0))
                    .collect();
                let b1 = ctx.brace(C64::new(1.0, 0.0));
                let e_super: Vec<C64> = (0..dim)
                    .map(|i| {
                        if i == 0 {
                            C64::new(0.0, 0.0)
                        } else {
                            ctx.brace(C64::new(i as f64, 0.0))
                                * ctx.brace(C64::new(i as f64, 0.0) - alpha)
                                / (b1 * b1)
                        }
                    })
                    .collect();
                Ok(UqModuleRep {
                    color,
                    r,
                    dim,
                    weights,
                    e_super,
                })
            }
            Color::S { n } => {
                if n + 1 > r as usize {
                    return Err(Error::InvalidInput(format!(
                        "S_{n} is not in the color set at level r = {r}"
                    )));
                }
                let dim = n + 1;
                let weights: Vec<C64> = (0..dim)
                    .map(|i| C64::new(n as f64 - 2.0 * i as f64, 0.0))
                    .collect();
                let b1 = ctx.brace(C64::new(1.0, 0.0));
                let e_super: Vec<C64> = (0..dim)
                    .map(|i| {
                        if i == 0 {
                            C64::new(0.0, 0.0)
                        } else {
                            ctx.brace(C64::new(i as f64, 0.0))
                                * ctx.brace(C64::new((n + 1 - i) as f64, 0.0))
                                / (b1 * b1)
                        }
                    })
                    .collect();
                Ok(UqModuleRep {
                    color,
                    r,
                    dim,
                    weights,
                    e_super,
                })
            }
        }
    }

    pub fn e_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 1..self.dim {
            m[(i - 1, i)] = self.e_super[i];
        }
        m
    }

    pub fn f_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim - 1 {
            m[(i + 1, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn h_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = self.weights[i];
        }
        m
    }

    /// `K^p` acting by `xi^{p * weight}` on weight vectors.
    pub fn k_pow(&self, p: i64) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let e = C64::new(p as f64, 0.0) * self.weights[i];
            m[(i, i)] = (C64::new(0.0, std::f64::consts::PI / self.r as f64) * e).exp();
        }
        m
    }
}

/// `R^{+-1}` as an endomorphism matrix of `A (x) B`:
/// `R = xi^{H (x) H / 2} sum_n ({1}^{2n}/{n}!) xi^{n(n-1)/2} E^n (x) F^n`,
/// `R^{-1} = [sum_n (-1)^n ({1}^{2n}/{n}!) xi^{-n(n-1)/2} E^n (x) F^n] xi^{-H (x) H/2}`.
fn r_matrix(a: &UqModuleRep, b: &UqModuleRep, positive: bool) -> CMatrix {
    assert_eq!(a.r, b.r);
    let r = a.r;
    let ctx = CgpContext::new(r).expect("valid level");
    let (da, db) = (a.dim, b.dim);
    let b1 = ctx.brace(C64::new(1.0, 0.0));
    let ea = a.e_matrix();
    let fb = b.f_matrix();
    let mut s = CMatrix::zeros(da * db, da * db);
    let mut en = CMatrix::identity(da);
    let mut fn_ = CMatrix::identity(db);
    let mut fact = C64::new(1.0, 0.0);
    for n in 0..r {
        if n > 0 {
            en = en.mul(&ea);
            fn_ = fn_.mul(&fb);
            fact *= ctx.brace(C64::new(n as f64, 0.0));
            if en.norm_max() == 0.0 || fn_.norm_max() == 0.0 {
                break;
            }
        }
        let coef = if n == 0 {
            C64::new(1.0, 0.0)
        } else {
            let sign_phase = ctx.xi_pow(C64::new(
                if positive { 1.0 } else { -1.0 } * (n * (n - 1)) as f64 / 2.0,
                0.0,
            ));
            let base = b1.powi(2 * n as i32) / fact * sign_phase;
            if positive {
                base
            } else {
                base * if n % 2 == 0 { 1.0 } else { -1.0 }
            }
        };
        let kr = en.kron(&fn_).scale(coef);
        for (x, y) in s.a.iter_mut().zip(&kr.a) {
            *x += y;
        }
    }
    let mut diag = vec![C64::new(0.0, 0.0); da * db];
    for i in 0..da {
        for j in 0..db {
            let e = a.weights[i] * b.weights[j] / 2.0;
            let e = if positive { e } else { -e };
            diag[i * db + j] = (C64::new(0.0, std::f64::consts::PI / r as f64) * e).exp();
        }
    }
    let n = da * db;
    let mut m = CMatrix::zeros(n, n);
    if positive {
        // diag * S
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = diag[i] * s.a[i * n + j];
            }
        }
    } else {
        // S_minus * diag_minus
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = s.a[i * n + j] * diag[j];
            }
        }
    }
    m
}

/// The flip `tau: A (x) B -> B (x) A` as a matrix.
fn tau_matrix(da: usize, db: usize) -> CMatrix {
    let mut t = CMatrix::zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..db {
            t[(j * da + i, i * db + j)] = C64::new(1.0, 0.0);
        }
    }
    t
}

/// Braiding matrix for a crossing with incoming colors `(V, W)` at the two
/// positions, as a map `V (x) W -> W (x) V`:
/// positive crossing `c_{V,W} = tau o R_{V,W}`,
/// negative crossing `(c_{W,V})^{-1} = R_{W,V}^{-1} o tau_{V,W}`.
pub fn braiding(v: &UqModuleRep, w: &UqModuleRep, positive: bool) -> CMatrix {
    if positive {
        let r = r_matrix(v, w, true);
        tau_matrix(v.dim, w.dim).mul(&r)
    } else {
        let rinv = r_matrix(w, v, false);
        rinv.mul(&tau_matrix(v.dim, w.dim))
    }
}

/// The twist matrix on a module: the right-closure of a single positive
/// crossing (a positive curl), `ptr_2((1 (x) K^{1-r}) c_{V,V})`. Scalar
/// `T(alpha)` on `V_alpha`.
pub fn twist(v: &UqModuleRep) -> CMatrix {
    let c = braiding(v, v, true);
    partial_trace_last(&c, v.dim, &v.k_pow(1 - v.r))
}

/// Partial quantum trace over the last tensor factor of an endomorphism of
/// `A (x) B`: `ptr_B((1 (x) weight) m)`.
fn partial_trace_last(m: &CMatrix, dim_b: usize, weight: &CMatrix) -> CMatrix {
    let dim_a = m.rows / dim_b;
    let weighted = {
        // right-multiply by 1 (x) weight
        let mut w = CMatrix::zeros(m.rows, m.cols);
        for i in 0..m.rows {
            for ja in 0..dim_a {
                for jb in 0..dim_b {
                    let mut acc = C64::new(0.0, 0.0);
                    for kb in 0..dim_b {
                        acc += m[(i, ja * dim_b + kb)] * weight[(kb, jb)];
                    }
                    w[(i, ja * dim_b + jb)] = acc;
                }
            }
        }
        w
    };
    let mut out = CMatrix::zeros(dim_a, dim_a);
    for i in 0..dim_a {
        for j in 0..dim_a {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..dim_b {
                acc += weighted[(i * dim_b + b, j * dim_b + b)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// A braid word with per-strand colors and per-component framings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColoredBraid {
    pub strands: usize,
    /// Signed generator indices, 1-based: `+-g` acts on positions (g-1, g).
    pub word: Vec<i64>,
    /// Color of the strand starting at each bottom position.
    pub colors: Vec<Color>,
    /// Framing of each closed component, indexed by component id.
    pub framings: Vec<i64>,
}

impl ColoredBraid {
    pub fn validate(&self) -> Result<()> {
        if self.colors.len() != self.strands {
            return Err(Error::InvalidInput("one color per strand required".into()));
        }
        for &g in &self.word {
            let a = g.unsigned_abs() as usize;
            if a == 0 || a >= self.strands {
                return Err(Error::InvalidInput(format!("generator {g} out of range")));
            }
        }
        let comp = self.components();
        let ncomp = comp.iter().max().map(|m| m + 1).unwrap_or(0);
        if self.framings.len() != ncomp {
            return Err(Error::InvalidInput(format!(
                "expected {ncomp} framings, got {}",
                self.framings.len()
            )));
        }
        // colors constant along components
        for i in 0..self.strands {
            for j in 0..self.strands {
                if comp[i] == comp[j] && self.colors[i] != self.colors[j] {
                    return Err(Error::InvalidInput(
                        "colors must be constant along closed components".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Permutation of the braid: `perm[i]` = top position of the strand that
    /// starts at bottom position `i`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..self.strands).collect();
        for &g in &self.word {
            let a = g.unsigned_abs() as usize - 1;
            // strands currently at positions a and a+1 cross
            for p in pos.iter_mut() {
                if *p == a {
                    *p = a + 1;
                } else if *p == a + 1 {
                    *p = a;
                }
            }
        }
        pos
    }

    /// Component id per strand (cycles of the closure permutation), numbered
    /// by smallest strand index.
    pub fn components(&self) -> Vec<usize> {
        let perm = self.permutation();
        let mut comp = vec![usize::MAX; self.strands];
        let mut next = 0;
        for start in 0..self.strands {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut s = start;
            loop {
                comp[s] = next;
                s = perm[s];
                if s == start {
                    break;
                }
            }
            next += 1;
        }
        comp
    }

    /// Self-writhe per component and linking numbers between components, from
    /// signed crossing counts (blackboard framing of the closure).
    pub fn writhe_matrix(&self) -> Vec<Vec<i64>> {
        let comp = self.components();
        let ncomp = comp.iter().max().map(|m| m + 1).unwrap_or(0);
        let mut cross = vec![vec![0i64; ncomp]; ncomp];
        // track which strand occupies each position
        let mut occ: Vec<usize> = (0..self.strands).collect();
        for &g in &self.word {
            let a = g.unsigned_abs() as usize - 1;
            let sign = if g > 0 { 1 } else { -1 };
            let (s1, s2) = (occ[a], occ[a + 1]);
            let (c1, c2) = (comp[s1], comp[s2]);
            cross[c1][c2] += sign;
            if c1 != c2 {
                cross[c2][c1] += sign;
            }
            occ.swap(a, a + 1);
        }
        // linking number = half the signed inter-component crossings
        let mut out = vec![vec![0i64; ncomp]; ncomp];
        for i in 0..ncomp {
            for j in 0..ncomp {
                if i == j {
                    out[i][i] = cross[i][i];
                } else {
                    assert!(cross[i][j] % 2 == 0, "odd inter-component crossing count");
                    out[i][j] = cross[i][j] / 2;
                }
            }
        }
        out
    }

    /// Linking matrix of the framed closure: prescribed framings on the
    /// diagonal, linking numbers off it.
    pub fn linking_matrix(&self) -> Vec<Vec<i64>> {
        let mut w = self.writhe_matrix();
        for (i, &f) in self.framings.iter().enumerate() {
            w[i][i] = f;
        }
        w
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "strands": self.strands,
            "word": self.word,
            "colors": self
                .colors
                .iter()
                .map(|c| match c {
                    Color::V { re, im } => serde_json::json!({"V": [re, im]}),
                    Color::S { n } => serde_json::json!({"S": n}),
                })
                .collect::<Vec<_>>(),
            "framings": self.framings,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("braid JSON: {m}"));
        let strands = v["strands"].as_u64().ok_or_else(|| bad("missing strands"))? as usize;
        let word = v["word"]
            .as_array()
            .ok_or_else(|| bad("missing word"))?
            .iter()
            .map(|x| x.as_i64().ok_or_else(|| bad("bad word entry")))
            .collect::<Result<Vec<_>>>()?;
        let colors = v["colors"]
            .as_array()
            .ok_or_else(|| bad("missing colors"))?
            .iter()
            .map(|x| {
                if let Some(arr) = x.get("V").and_then(|a| a.as_array()) {
                    Ok(Color::V {
                        re: arr[0].as_f64().ok_or_else(|| bad("bad V color"))?,
                        im: arr[1].as_f64().ok_or_else(|| bad("bad V color"))?,
                    })
                } else if let Some(n) = x.get("S").and_then(|a| a.as_u64()) {
                    Ok(Color::S { n: n as usize })
                } else {
                    Err(bad("unknown color kind"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let framings = v["framings"]
            .as_array()
            .ok_or_else(|| bad("missing framings"))?
            .iter()
            .map(|x| x.as_i64().ok_or_else(|| bad("bad framing")))
            .collect::<Result<Vec<_>>>()?;
        let b = ColoredBraid {
            strands,
            word,
            colors,
            framings,
        };
        b.validate()?;
        Ok(b)
    }
}

/// Applies the braid word to the identity on the bottom tensor product,
/// returning the full matrix and the color ordering at the top.
fn braid_matrix(braid: &ColoredBraid, r: i64) -> Result<(CMatrix, Vec<Color>)> {
    let mut cols: Vec<Color> = braid.colors.clone();
    let reps = |c: Color| UqModuleRep::new(c, r);
    let dims: Vec<usize> = cols
        .iter()
        .map(|&c| reps(c).map(|m| m.dim))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = dims.iter().product();
    let mut m = CMatrix::identity(total);
    for &g in &braid.word {
        let a = g.unsigned_abs() as usize - 1;
        let (ca, cb) = (cols[a], cols[a + 1]);
        let (ra, rb) = (reps(ca)?, reps(cb)?);
        let c = if g > 0 {
            braiding(&ra, &rb, true)
        } else {
            // negative crossing: (c_{B,A})^{-1} = tau o R^{-1} built with the
            // closed-form inverse on (A, B)
            braiding(&ra, &rb, false)
        };
        // embed at position a: careful with heterogeneous dims
        let dims_now: Vec<usize> = cols
            .iter()
            .map(|&cc| reps(cc).map(|mm| mm.dim))
            .collect::<Result<Vec<_>>>()?;
        let left: usize = dims_now[..a].iter().product();
        let right: usize = dims_now[a + 2..].iter().product();
        let mid = dims_now[a] * dims_now[a + 1];
        let mut big = CMatrix::zeros(total, total);
        for l in 0..left {
            for x in 0..mid {
                for y in 0..mid {
                    let v = c.a[x * mid + y];
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    for rgt in 0..right {
                        let row = (l * mid + x) * right + rgt;
                        let col = (l * mid + y) * right + rgt;
                        big[(row, col)] = v;
                    }
                }
            }
        }
        m = big.mul(&m);
        cols.swap(a, a + 1);
    }
    Ok((m, cols))
}

/// Closes all strands except the leftmost by successive right partial quantum
/// traces with `K^{1-r}` weights, leaving an endomorphism of the first module.
fn close_to_first(braid: &ColoredBraid, r: i64) -> Result<CMatrix> {
    braid.validate()?;
    let (mut m, cols_top) = braid_matrix(braid, r)?;
    if cols_top != braid.colors {
        return Err(Error::InvalidInput(
            "braid permutation does not preserve colors; closure ill-colored".into(),
        ));
    }
    let mut dims: Vec<usize> = braid
        .colors
        .iter()
        .map(|&c| UqModuleRep::new(c, r).map(|mm| mm.dim))
        .collect::<Result<Vec<_>>>()?;
    while dims.len() > 1 {
        let last = dims.len() - 1;
        let rep = UqModuleRep::new(braid.colors[last], r)?;
        m = partial_trace_last(&m, dims[last], &rep.k_pow(1 - r));
        dims.pop();
    }
    Ok(m)
}

/// Conjugates the braid so that strand `s` starts at position 0 (the closure
/// is unchanged).
pub fn move_strand_to_front(braid: &ColoredBraid, s: usize) -> ColoredBraid {
    if s == 0 {
        return braid.clone();
    }
    // conjugator C = sigma_s ... sigma_1 moves bottom position s to 0
    let conj: Vec<i64> = (1..=s as i64).rev().collect();
    let mut word: Vec<i64> = conj.clone();
    word.extend(&braid.word);
    word.extend(conj.iter().rev().map(|g| -g));
    // bottom colors permute: strand s moves to the front
    let mut colors = braid.colors.clone();
    let c = colors.remove(s);
    colors.insert(0, c);
    ColoredBraid {
        strands: braid.strands,
        word,
        colors,
        framings: braid.framings.clone(),
    }
}

/// Scalar `<T>` of the (1,1)-tangle obtained by cutting the closure open
/// along the component of `open_strand`. Errors when the endomorphism is not
/// scalar (non-simple coloring).
pub fn evaluate_11_tangle(braid: &ColoredBraid, open_strand: usize, r: i64) -> Result<C64> {
    let b = move_strand_to_front(braid, open_strand);
    let m = close_to_first(&b, r)?;
    let s = m[(0, 0)];
    let dev = m.sub(&CMatrix::identity(m.rows).scale(s)).norm_max();
    if dev > 1e-9 * (1.0 + s.norm()) {
        return Err(Error::Numerical(format!(
            "tangle endomorphism is not scalar (deviation {dev:.2e}); non-simple coloring?"
        )));
    }
    Ok(s)
}

/// Data of a CGP link evaluation.
#[derive(Debug, Clone)]
pub struct LinkInvariant {
    pub value: C64,
    pub components: usize,
}

/// `N_r(S^3, L)` for the framed colored braid closure: `d(mu_0) <T>` times
/// per-component framing corrections `T(mu_I)^{framing - writhe}`.
pub fn cgp_link_invariant(braid: &ColoredBraid, r: i64) -> Result<LinkInvariant> {
    braid.validate()?;
    let ctx = CgpContext::new(r)?;
    let comp = braid.components();
    let ncomp = comp.iter().max().map(|m| m + 1).unwrap_or(0);
    for c in &braid.colors {
        if matches!(c, Color::S { .. }) {
            return Err(Error::InvalidInput(
                "CGP link invariant requires V-type colors".into(),
            ));
        }
    }
    let tangle = evaluate_11_tangle(braid, 0, r)?;
    let mu0 = braid.colors[0].alpha(r);
    let mut v = ctx.d(mu0)? * tangle;
    let w = braid.writhe_matrix();
    for i in 0..ncomp {
        let strand = (0..braid.strands).find(|&s| comp[s] == i).expect("component strand");
        let alpha = braid.colors[strand].alpha(r);
        v *= ctx.t_scalar(alpha).powi((braid.framings[i] - w[i][i]) as i32);
    }
    Ok(LinkInvariant {
        value: v,
        components: ncomp,
    })
}

/// ADO invariant evaluated at the braid's colors (`x_I = xi^{2 mu_I - 2}`):
/// for links (V >= 2): `ADO_r = N_r xi^{-mu^T B mu / 2 + (r-1)^2 Tr B / 2}`;
/// for knots: `ADO_r = ({r mu}/{mu}) N_r xi^{-f mu^2/2 + f (r-1)^2/2}`.
pub fn ado(braid: &ColoredBraid, r: i64) -> Result<C64> {
    let ctx = CgpContext::new(r)?;
    let inv = cgp_link_invariant(braid, r)?;
    let comp = braid.components();
    let b = braid.linking_matrix();
    let r1 = ((r - 1) * (r - 1)) as f64;
    if inv.components == 1 {
        let mu = braid.colors[0].alpha(r);
        let f = braid.framings[0] as f64;
        let ratio = ctx.brace(mu * r as f64) / ctx.brace(mu);
        Ok(ratio * inv.value * ctx.xi_pow(-mu * mu * f / 2.0 + C64::new(f * r1 / 2.0, 0.0)))
    } else {
        let mus: Vec<C64> = (0..inv.components)
            .map(|i| {
                let strand = (0..braid.strands).find(|&s| comp[s] == i).expect("strand");
                braid.colors[strand].alpha(r)
            })
            .collect();
        let mut quad = C64::new(0.0, 0.0);
        let mut tr = 0i64;
        for i in 0..inv.components {
            tr += b[i][i];
            for j in 0..inv.components {
                quad += C64::new(b[i][j] as f64, 0.0) * mus[i] * mus[j];
            }
        }
        Ok(inv.value * ctx.xi_pow(-quad / 2.0 + C64::new(tr as f64 * r1 / 2.0, 0.0)))
    }
}

/// Skein-normalized colored Jones of the framed braid closure at
/// `q = e^{2 pi i / r}` (unknot with color `S_n` gives `(-1)^n [n+1]`).
pub fn colored_jones(braid: &ColoredBraid, r: i64) -> Result<C64> {
    braid.validate()?;
    let ctx = CgpContext::new(r)?;
    for c in &braid.colors {
        if matches!(c, Color::V { .. }) {
            return Err(Error::InvalidInput(
                "colored Jones requires S-type colors".into(),
            ));
        }
    }
    let (m, cols_top) = braid_matrix(braid, r)?;
    if cols_top != braid.colors {
        return Err(Error::InvalidInput("closure ill-colored".into()));
    }
    // full quantum trace
    let mut dims: Vec<usize> = Vec::new();
    for &c in &braid.colors {
        dims.push(UqModuleRep::new(c, r)?.dim);
    }
    let mut cur = m;
    for i in (0..braid.strands).rev() {
        let rep = UqModuleRep::new(braid.colors[i], r)?;
        cur = partial_trace_last(&cur, dims[i], &rep.k_pow(1 - r));
    }
    let mut v = cur[(0, 0)];
    // framing corrections by the twist eigenvalue on S_n:
    // theta_{S_n} = (-1)^n xi^{(n^2 + 2n)/2}
    let comp = braid.components();
    let w = braid.writhe_matrix();
    let ncomp = braid.framings.len();
    for i in 0..ncomp {
        let strand = (0..braid.strands).find(|&s| comp[s] == i).expect("strand");
        let n = match braid.colors[strand] {
            Color::S { n } => n as i64,
            _ => unreachable!(),
        };
        let theta = ctx.xi_pow(C64::new((n * n + 2 * n) as f64 / 2.0, 0.0))
            * if n % 2 == 0 { 1.0 } else { -1.0 };
        v *= theta.powi((braid.framings[i] - w[i][i]) as i32);
    }
    Ok(v)
}

/// Built-in braid words.
pub mod braids {
    use super::{Color, ColoredBraid};

    /// Right-handed trefoil: closure of `sigma_1^3` on 2 strands.
    pub fn trefoil(color: Color, framing: i64) -> ColoredBraid {
        ColoredBraid {
            strands: 2,
            word: vec![1, 1, 1],
            colors: vec![color, color],
            framings: vec![framing],
        }
    }

    /// Figure-eight knot: closure of `(sigma_1 sigma_2^{-1})^2` on 3 strands.
    pub fn figure_eight(color: Color, framing: i64) -> ColoredBraid {
        ColoredBraid {
            strands: 3,
            word: vec![1, -2, 1, -2],
            colors: vec![color, color, color],
            framings: vec![framing],
        }
    }

    /// Unknot on one strand.
    pub fn unknot(color: Color, framing: i64) -> ColoredBraid {
        ColoredBraid {
            strands: 1,
            word: vec![],
            colors: vec![color],
            framings: vec![framing],
        }
    }

    /// Hopf link: closure of `sigma_1^2` with independent colors.
    pub fn hopf(c1: Color, c2: Color, f1: i64, f2: i64) -> ColoredBraid {
        ColoredBraid {
            strands: 2,
            word: vec![1, 1],
            colors: vec![c1, c2],
            framings: vec![f1, f2],
        }
    }
}
