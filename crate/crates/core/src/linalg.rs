//! Small dense matrices and univariate polynomials over a [`Coeff`] field.
//!
//! Elimination uses exact zero tests in exact mode and partial pivoting with
//! a relative threshold in float mode.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Coeff, C64};
use crate::series::scalar_to_json;

#[derive(Clone, PartialEq)]
pub struct Matrix<K> {
    rows: usize,
    cols: usize,
    data: Vec<K>,
}

impl<K: Coeff> Matrix<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![K::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = K::one();
        }
        m
    }

    pub fn diagonal(d: &[K]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<K>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[K] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<K>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<K> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn map<L: Coeff>(&self, f: impl Fn(&K) -> L) -> Matrix<L> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_float(&self) -> Matrix<C64> {
        self.map(|c| c.to_c64())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Coeff::magnitude).fold(0.0, f64::max)
    }

    /// All entries negligible relative to `scale` (exactly zero in exact mode).
    pub fn is_negligible(&self, scale: f64) -> bool {
        self.data.iter().all(|c| c.is_negligible(scale))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Coeff::is_zero)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let p = a.mul_ref(&o[(k, j)]);
                    out[(i, j)] = out[(i, j)].add_ref(&p);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[K]) -> Vec<K> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(K::zero(), |acc, (a, b)| acc.add_ref(&a.mul_ref(b)))
            })
            .collect()
    }

    fn zip_with(&self, o: &Self, f: impl Fn(&K, &K) -> K) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix shapes");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip_with(o, K::add_ref)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip_with(o, K::sub_ref)
    }

    pub fn scale(&self, c: &K) -> Self {
        self.map(|a| a.mul_ref(c))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = self.max_abs();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let candidate = match K::MODE {
                crate::scalar::Mode::Exact => (r..m.rows).find(|&i| !m[(i, c)].is_zero()),
                crate::scalar::Mode::Float => (r..m.rows)
                    .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()))
                    .filter(|&i| !m[(i, c)].is_negligible(scale)),
            };
            let Some(p) = candidate else {
                for i in r..m.rows {
                    m[(i, c)] = K::zero();
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = K::one().div_ref(&m[(r, c)]);
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].mul_ref(&inv);
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    let d = f.mul_ref(&m[(r, j)]);
                    m[(i, j)] = m[(i, j)].sub_ref(&d);
                }
                m[(i, c)] = K::zero();
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : M v = 0}`, one vector per free column, with the free
    /// coordinate set to 1.
    pub fn nullspace(&self) -> Vec<Vec<K>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![K::zero(); self.cols];
                v[f] = K::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = K::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::SingularLinearPart);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> K {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = self.rows;
        let mut det = K::one();
        for c in 0..n {
            let p = match K::MODE {
                crate::scalar::Mode::Exact => (c..n).find(|&i| !m[(i, c)].is_zero()),
                crate::scalar::Mode::Float => {
                    (c..n).max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()))
                }
            };
            let Some(p) = p.filter(|&p| !m[(p, c)].is_zero()) else {
                return K::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det = det.mul_ref(&pivot);
            for i in c + 1..n {
                let f = m[(i, c)].div_ref(&pivot);
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let d = f.mul_ref(&m[(c, j)]);
                    m[(i, j)] = m[(i, j)].sub_ref(&d);
                }
            }
        }
        det
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..e {
            acc = acc.try_mul(self).expect("square");
        }
        acc
    }
}

impl<K> std::ops::Index<(usize, usize)> for Matrix<K> {
    type Output = K;
    fn index(&self, (i, j): (usize, usize)) -> &K {
        &self.data[i * self.cols + j]
    }
}

impl<K> std::ops::IndexMut<(usize, usize)> for Matrix<K> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut K {
        &mut self.data[i * self.cols + j]
    }
}

impl<K: fmt::Debug> fmt::Debug for Matrix<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]))
            .finish()
    }
}

impl<K: Coeff> Serialize for Matrix<K> {
    /// Rows of `{"re", "im"}` entries in the series coefficient format.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|c| {
                        let (re, im) = scalar_to_json(&c.to_scalar());
                        serde_json::json!({"re": re, "im": im})
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<K> {
    coeffs: Vec<K>,
}

impl<K: Coeff> Poly<K> {
    pub fn new(mut coeffs: Vec<K>) -> Self {
        while coeffs.last().is_some_and(Coeff::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// `Π (x − r)`.
    pub fn from_roots(roots: &[K]) -> Self {
        let mut p = Self::new(vec![K::one()]);
        for r in roots {
            p = p.mul(&Self::new(vec![-r.clone(), K::one()]));
        }
        p
    }

    pub fn coeffs(&self) -> &[K] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::new(vec![]);
        }
        let mut c = vec![K::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] = c[i + j].add_ref(&a.mul_ref(b));
            }
        }
        Self::new(c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.mul_ref(&K::from_i64(i as i64)))
                .collect(),
        )
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut r = self.coeffs.clone();
        let mut q = vec![K::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let f = r[top].div_ref(&lead);
            let shift = top - dd;
            for (i, c) in d.coeffs.iter().enumerate() {
                r[shift + i] = r[shift + i].sub_ref(&f.mul_ref(c));
            }
            q[shift] = f;
            r.pop();
            while r.last().is_some_and(Coeff::is_zero) {
                r.pop();
            }
        }
        (Self::new(q), Self::new(r))
    }

    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => self.clone(),
            Some(l) => {
                let inv = K::one().div_ref(l);
                Self::new(self.coeffs.iter().map(|c| c.mul_ref(&inv)).collect())
            }
        }
    }

    /// Monic gcd by the Euclidean algorithm (exact arithmetic expected).
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &K) -> K {
        self.coeffs
            .iter()
            .rev()
            .fold(K::zero(), |acc, c| acc.mul_ref(x).add_ref(c))
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, m: &Matrix<K>) -> Matrix<K> {
        let n = m.rows();
        let mut acc = Matrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.try_mul(m).expect("square").add(&Matrix::identity(n).scale(c));
        }
        acc
    }
}

/// Characteristic polynomial `det(xI − M)` by the Faddeev–LeVerrier recursion.
pub fn char_poly<K: Coeff>(m: &Matrix<K>) -> Poly<K> {
    assert!(m.is_square());
    let n = m.rows();
    let mut coeffs = vec![K::zero(); n + 1];
    coeffs[n] = K::one();
    let mut mk = Matrix::zeros(n, n);
    let id = Matrix::identity(n);
    for k in 1..=n {
        mk = m.try_mul(&mk).expect("square").add(&id.scale(&coeffs[n - k + 1]));
        let am = m.try_mul(&mk).expect("square");
        let tr = am.diag().into_iter().fold(K::zero(), |a, b| a.add_ref(&b));
        coeffs[n - k] = -(tr.div_ref(&K::from_i64(k as i64)));
    }
    Poly::new(coeffs)
}

/// All complex roots by the Aberth–Ehrlich iteration.
pub fn poly_roots(p: &Poly<C64>) -> Vec<C64> {
    let Some(deg) = p.degree() else {
        return vec![];
    };
    if deg == 0 {
        return vec![];
    }
    let p = p.monic();
    let dp = p.derivative();
    let radius = 1.0
        + p.coeffs()[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(radius * 0.5, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let pv = p.eval(&z[i]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dp.eval(&z[i]);
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| C64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm());
            }
        }
        if max_step < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Group nearly equal values (within `tol`) and return cluster means.
pub fn cluster_roots(roots: &[C64], tol: f64) -> Vec<C64> {
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for &r in roots {
        match clusters.iter_mut().find(|c| (c[0] - r).norm() <= tol * (1.0 + r.norm())) {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    clusters
        .into_iter()
        .map(|c| c.iter().sum::<C64>() / c.len() as f64)
        .collect()
}
