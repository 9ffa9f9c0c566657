//! Dense integer matrices, Smith normal form with transforms, exact rational
//! inverses and signatures. Sizes here are tiny (surgery presentations with a
//! handful of components), so the algorithms favor exactness over asymptotics.

use crate::phase::{rat_int, Rat};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub n: usize,
    pub a: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix { n, a: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        IntMatrix {
            n,
            a: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let s = self[(i, k)];
                if s == 0 {
                    continue;
                }
                for j in 0..self.n {
                    m[(i, j)] = m[(i, j)]
                        .checked_add(s.checked_mul(other[(k, j)]).expect("overflow"))
                        .expect("overflow");
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: i64) -> IntMatrix {
        IntMatrix {
            n: self.n,
            a: self.a.iter().map(|x| x * c).collect(),
        }
    }

    /// Exact determinant via fraction-free (Bareiss) elimination over BigInt.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::from(1);
        }
        let mut m: Vec<BigInt> = self.a.iter().map(|&x| BigInt::from(x)).collect();
        let mut sign = 1i64;
        let mut prev = BigInt::from(1);
        for k in 0..n - 1 {
            if m[k * n + k].is_zero() {
                let swap = (k + 1..n).find(|&i| !m[i * n + k].is_zero());
                match swap {
                    Some(i) => {
                        for j in 0..n {
                            m.swap(k * n + j, i * n + j);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                    m[i * n + j] = &t / &prev;
                }
            }
            for i in k + 1..n {
                m[i * n + k] = BigInt::zero();
            }
            prev = m[k * n + k].clone();
        }
        let d = m[(n - 1) * n + (n - 1)].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Exact inverse over the rationals. Errors if singular.
    pub fn inverse_rational(&self) -> Result<Vec<Vec<Rat>>> {
        let n = self.n;
        let mut m: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                (0..2 * n)
                    .map(|j| {
                        if j < n {
                            rat_int(self[(i, j)])
                        } else if j - n == i {
                            rat_int(1)
                        } else {
                            rat_int(0)
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&i| !m[i][col].is_zero());
            let piv = piv.ok_or_else(|| Error::Undefined("singular matrix".into()))?;
            m.swap(col, piv);
            let p = m[col][col].clone();
            for j in 0..2 * n {
                m[col][j] = &m[col][j] / &p;
            }
            for i in 0..n {
                if i == col || m[i][col].is_zero() {
                    continue;
                }
                let f = m[i][col].clone();
                for j in 0..2 * n {
                    let t = &m[i][j] - &f * &m[col][j];
                    m[i][j] = t;
                }
            }
        }
        Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
    }

    /// Signature data of a symmetric matrix: (b_plus, b_minus, b_zero), via
    /// symmetric elimination over exact rationals.
    pub fn signature(&self) -> (usize, usize, usize) {
        assert!(self.is_symmetric());
        let n = self.n;
        let mut m: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| rat_int(self[(i, j)])).collect())
            .collect();
        let mut alive: Vec<usize> = (0..n).collect();
        let (mut bp, mut bm, mut bz) = (0usize, 0usize, 0usize);
        while !alive.is_empty() {
            // prefer a nonzero diagonal pivot
            if let Some(pos) = alive.iter().position(|&i| !m[i][i].is_zero()) {
                let p = alive[pos];
                let d = m[p][p].clone();
                if d.is_positive() {
                    bp += 1;
                } else {
                    bm += 1;
                }
                alive.remove(pos);
                let others = alive.clone();
                let pivot_row: Vec<Rat> = (0..n).map(|j| m[p][j].clone()).collect();
                for &i in &others {
                    if m[i][p].is_zero() {
                        continue;
                    }
                    let f = &m[i][p] / &d;
                    for &j in &others {
                        let t = &m[i][j] - &f * &pivot_row[j];
                        m[i][j] = t;
                    }
                    m[i][p] = rat_int(0);
                    m[p][i] = rat_int(0);
                }
                continue;
            }
            // all-zero diagonal: either a zero row (kernel) or a hyperbolic pair
            let mut found = None;
            'outer: for (ai, &i) in alive.iter().enumerate() {
                for (aj, &j) in alive.iter().enumerate() {
                    if ai < aj && !m[i][j].is_zero() {
                        found = Some((ai, aj));
                        break 'outer;
                    }
                }
            }
            match found {
                None => {
                    bz += alive.len();
                    break;
                }
                Some((ai, aj)) => {
                    // rows i,j span a hyperbolic block: contributes (+1, -1).
                    // Schur complement of the block [[0,c],[c,0]].
                    let (i, j) = (alive[ai], alive[aj]);
                    bp += 1;
                    bm += 1;
                    let others: Vec<usize> =
                        alive.iter().copied().filter(|&k| k != i && k != j).collect();
                    let c = m[i][j].clone();
                    let old = m.clone();
                    for &k in &others {
                        for &l in &others {
                            let t = &old[k][l]
                                - (&old[k][i] * &old[j][l] + &old[k][j] * &old[i][l]) / &c;
                            m[k][l] = t;
                        }
                    }
                    for &k in &others {
                        m[k][i] = rat_int(0);
                        m[k][j] = rat_int(0);
                        m[i][k] = rat_int(0);
                        m[j][k] = rat_int(0);
                    }
                    alive.retain(|&k| k != i && k != j);
                }
            }
        }
        (bp, bm, bz)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.a[i * self.n + j]
    }
}

/// Smith normal form `U * B * V = D` with unimodular `U`, `V` and diagonal `D`
/// whose entries form a divisibility chain.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub d: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithDecomposition {
    /// Diagonal entries of `D` (nonnegative, divisibility-ordered).
    pub fn diag(&self) -> Vec<i64> {
        (0..self.d.n).map(|i| self.d[(i, i)]).collect()
    }
}

pub fn smith_normal_form(b: &IntMatrix) -> SmithDecomposition {
    let n = b.n;
    let mut a: Vec<i128> = b.a.iter().map(|&x| x as i128).collect();
    let mut u: Vec<i128> = vec![0; n * n];
    let mut v: Vec<i128> = vec![0; n * n];
    let mut ui: Vec<i128> = vec![0; n * n];
    let mut vi: Vec<i128> = vec![0; n * n];
    for i in 0..n {
        u[i * n + i] = 1;
        v[i * n + i] = 1;
        ui[i * n + i] = 1;
        vi[i * n + i] = 1;
    }
    let at = |m: &Vec<i128>, i: usize, j: usize| m[i * n + j];

    // elementary ops, mirrored on the inverses
    let row_add = |a: &mut Vec<i128>, u: &mut Vec<i128>, ui: &mut Vec<i128>, i: usize, k: usize, c: i128| {
        // row_i += c * row_k ; U' = E U ; (U')^{-1} = U^{-1} E^{-1}
        for j in 0..n {
            a[i * n + j] += c * a[k * n + j];
            u[i * n + j] += c * u[k * n + j];
        }
        for j in 0..n {
            ui[j * n + k] -= c * ui[j * n + i];
        }
    };
    let col_add = |a: &mut Vec<i128>, v: &mut Vec<i128>, vi: &mut Vec<i128>, j: usize, k: usize, c: i128| {
        // col_j += c * col_k
        for i in 0..n {
            a[i * n + j] += c * a[i * n + k];
            v[i * n + j] += c * v[i * n + k];
        }
        for i in 0..n {
            vi[k * n + i] -= c * vi[j * n + i];
        }
    };
    let row_swap = |a: &mut Vec<i128>, u: &mut Vec<i128>, ui: &mut Vec<i128>, i: usize, k: usize| {
        for j in 0..n {
            a.swap(i * n + j, k * n + j);
            u.swap(i * n + j, k * n + j);
        }
        for j in 0..n {
            ui.swap(j * n + i, j * n + k);
        }
    };
    let col_swap = |a: &mut Vec<i128>, v: &mut Vec<i128>, vi: &mut Vec<i128>, j: usize, k: usize| {
        for i in 0..n {
            a.swap(i * n + j, i * n + k);
            v.swap(i * n + j, i * n + k);
        }
        for i in 0..n {
            vi.swap(j * n + i, k * n + i);
        }
    };
    let row_neg = |a: &mut Vec<i128>, u: &mut Vec<i128>, ui: &mut Vec<i128>, i: usize| {
        for j in 0..n {
            a[i * n + j] = -a[i * n + j];
            u[i * n + j] = -u[i * n + j];
        }
        for j in 0..n {
            ui[j * n + i] = -ui[j * n + i];
        }
    };

    for k in 0..n {
        loop {
            // locate minimal nonzero |entry| in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in k..n {
                for j in k..n {
                    let x = at(&a, i, j).abs();
                    if x != 0 && best.map_or(true, |(bi, bj)| x < at(&a, bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            if pi != k {
                row_swap(&mut a, &mut u, &mut ui, k, pi);
            }
            if pj != k {
                col_swap(&mut a, &mut v, &mut vi, k, pj);
            }
            if at(&a, k, k) < 0 {
                row_neg(&mut a, &mut u, &mut ui, k);
            }
            let p = at(&a, k, k);
            let mut clean = true;
            for i in k + 1..n {
                let q = at(&a, i, k).div_euclid(p);
                if q != 0 {
                    row_add(&mut a, &mut u, &mut ui, i, k, -q);
                }
                if at(&a, i, k) != 0 {
                    clean = false;
                }
            }
            for j in k + 1..n {
                let q = at(&a, k, j).div_euclid(p);
                if q != 0 {
                    col_add(&mut a, &mut v, &mut vi, j, k, -q);
                }
                if at(&a, k, j) != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: fold a non-divisible entry into column k
            let mut fixed = true;
            'div: for i in k + 1..n {
                for j in k + 1..n {
                    if at(&a, i, j) % p != 0 {
                        row_add(&mut a, &mut u, &mut ui, k, i, 1);
                        fixed = false;
                        break 'div;
                    }
                }
            }
            if fixed {
                break;
            }
        }
    }

    let to_m = |m: Vec<i128>| IntMatrix {
        n,
        a: m.iter().map(|&x| i64::try_from(x).expect("SNF overflow")).collect(),
    };
    SmithDecomposition {
        u: to_m(u),
        v: to_m(v),
        d: to_m(a),
        u_inv: to_m(ui),
        v_inv: to_m(vi),
    }
}
