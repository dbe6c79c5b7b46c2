use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;

use super::cmatrix::CMatrix;
use super::eigh::eigh;
use crate::error::{Error, Result};

/// Dense real matrix, row-major. Fisher information matrices and other
/// real symmetric quantities live here.
#[derive(Clone, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = RMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = RMatrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> RMatrix {
        RMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> RMatrix {
        let mut m = self.clone();
        for v in m.data.iter_mut() {
            *v *= s;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Maximum |A_ij − A_ji|.
    pub fn symmetry_gap(&self) -> f64 {
        let mut g: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                g = g.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        g
    }

    pub fn symmetrized(&self) -> RMatrix {
        RMatrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self[(i, j)], 0.0))
    }

    pub fn from_complex_re(m: &CMatrix) -> RMatrix {
        RMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].re)
    }

    /// Eigendecomposition of a symmetric matrix: ascending eigenvalues and
    /// orthogonal eigenvector columns. Routed through the complex Jacobi.
    pub fn eig_sym(&self) -> Result<(Vec<f64>, RMatrix)> {
        self.require_square()?;
        let eig = eigh(&self.symmetrized().to_complex())?;
        // columns of a real symmetric eigenproblem can be taken real; strip
        // the (constant) phase per column
        let n = self.rows;
        let mut v = RMatrix::zeros(n, n);
        for j in 0..n {
            let col = eig.eigenvectors.column(j);
            // find largest-magnitude entry to fix the phase
            let mut kmax = 0;
            let mut best = 0.0;
            for (k, z) in col.iter().enumerate() {
                if z.norm() > best {
                    best = z.norm();
                    kmax = k;
                }
            }
            let phase = if best > 0.0 {
                col[kmax] / col[kmax].norm()
            } else {
                C64::new(1.0, 0.0)
            };
            for k in 0..n {
                v[(k, j)] = (col[k] * phase.conj()).re;
            }
        }
        Ok((eig.eigenvalues, v))
    }

    fn require_square(&self) -> Result<usize> {
        if self.rows == self.cols {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Moore–Penrose pseudo-inverse of a symmetric matrix, truncating
    /// eigenvalues of magnitude below `rank_tol · max|λ|`.
    pub fn pinv_sym(&self, rank_tol: f64) -> Result<RMatrix> {
        let (vals, v) = self.eig_sym()?;
        let lmax = vals.iter().map(|l| l.abs()).fold(0.0, f64::max);
        let cutoff = rank_tol * lmax;
        let inv: Vec<f64> = vals
            .iter()
            .map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 })
            .collect();
        Ok(&(&v * &RMatrix::diag(&inv)) * &v.transpose())
    }

    /// Rank after truncating |λ| below `rank_tol · max|λ|`.
    pub fn rank_sym(&self, rank_tol: f64) -> Result<usize> {
        let (vals, _) = self.eig_sym()?;
        let lmax = vals.iter().map(|l| l.abs()).fold(0.0, f64::max);
        Ok(vals.iter().filter(|l| l.abs() > rank_tol * lmax).count())
    }

    /// Inverse square root of a symmetric positive definite matrix.
    pub fn inv_sqrt_spd(&self, tol: f64) -> Result<RMatrix> {
        let (vals, v) = self.eig_sym()?;
        let lmax = vals.iter().cloned().fold(0.0, f64::max);
        if vals[0] <= tol * lmax.max(1e-300) {
            return Err(Error::Singular {
                what: format!("inv_sqrt of matrix with min eigenvalue {:.3e}", vals[0]),
            });
        }
        let inv: Vec<f64> = vals.iter().map(|l| 1.0 / l.sqrt()).collect();
        Ok(&(&v * &RMatrix::diag(&inv)) * &v.transpose())
    }

    pub fn min_eigenvalue_sym(&self) -> Result<f64> {
        Ok(self.eig_sym()?.0[0])
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &RMatrix {
    type Output = RMatrix;
    fn add(self, rhs: &RMatrix) -> RMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        m
    }
}

impl Sub for &RMatrix {
    type Output = RMatrix;
    fn sub(self, rhs: &RMatrix) -> RMatrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        m
    }
}

impl Mul for &RMatrix {
    type Output = RMatrix;
    fn mul(self, rhs: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut m = RMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
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

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:+.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
