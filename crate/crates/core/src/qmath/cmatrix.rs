use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows given as nested slices.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let mut m = CMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        m
    }

    /// Rank-one |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = CMatrix::zeros(u.len(), v.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    /// Projector |u⟩⟨u|.
    pub fn projector(u: &[C64]) -> Self {
        Self::outer(u, u)
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

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> CMatrix {
        let mut m = self.clone();
        for v in m.data.iter_mut() {
            *v *= s;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Relative Frobenius asymmetry ‖A − A†‖_F / max(1, ‖A‖_F).
    pub fn hermitian_asymmetry(&self) -> f64 {
        let gap = (self - &self.dagger()).frobenius_norm();
        gap / self.frobenius_norm().max(1.0)
    }

    /// Replaces A by (A + A†)/2.
    pub fn hermitized(&self) -> CMatrix {
        (self + &self.dagger()).scale(0.5)
    }

    /// Matrix-vector product A|v⟩.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            let base = i * self.cols;
            for j in 0..self.cols {
                acc += self.data[base + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// ⟨u|A|v⟩.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let av = self.apply(v);
        u.iter().zip(av.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// ⟨v|A|v⟩ (real part only makes sense for Hermitian A; full value returned).
    pub fn expectation(&self, v: &[C64]) -> C64 {
        self.sandwich(v, v)
    }

    /// Adds s·B in place.
    pub fn add_scaled(&mut self, b: &CMatrix, s: C64) {
        assert_eq!(self.rows, b.rows);
        assert_eq!(self.cols, b.cols);
        for (a, bv) in self.data.iter_mut().zip(b.data.iter()) {
            *a += s * bv;
        }
    }

    /// Accumulates the rank-one update w·|u⟩⟨u| in place.
    pub fn add_weighted_projector(&mut self, u: &[C64], w: f64) {
        assert_eq!(self.rows, u.len());
        for i in 0..self.rows {
            let base = i * self.cols;
            let ui = u[i] * w;
            for j in 0..self.cols {
                self.data[base + j] += ui * u[j].conj();
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        m
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        m
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut m = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                let rb = k * rhs.cols;
                let ob = i * rhs.cols;
                for j in 0..rhs.cols {
                    m.data[ob + j] += aik * rhs.data[rb + j];
                }
            }
        }
        m
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let av = a[(ia, ja)];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = av * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors u ⊗ v.
pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        for b in v {
            out.push(a * b);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_identity() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, j as f64));
        let id = CMatrix::identity(3);
        assert_eq!((&a * &id).data(), a.data());
    }

    #[test]
    fn kron_dims_and_trace() {
        let a = CMatrix::diag_real(&[1.0, 2.0]);
        let b = CMatrix::diag_real(&[3.0, 4.0, 5.0]);
        let k = kron(&a, &b);
        assert_eq!(k.rows(), 6);
        assert!((k.trace().re - 3.0 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn dagger_involution() {
        let a = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, -(j as f64)));
        assert_eq!(a.dagger().dagger().data(), a.data());
    }
}
