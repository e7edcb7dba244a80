//! Dense complex matrices, row-major, sized for link-level work (≤ 16×16).
//!
//! Deliberately small: multiply, Hermitian transpose, and a Cholesky-based
//! solver for Hermitian positive definite systems are all the linear algebra
//! the precoder and SMSE evaluation need.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Draw from N(0, 1) via Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Draw from CN(0, 1): real and imaginary parts each N(0, 1/2).
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-u1.ln()).sqrt();
    let th = 2.0 * PI * u2;
    Complex64::new(r * th.cos(), r * th.sin())
}

/// Complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub data: Vec<Complex64>,
    pub rows: usize,
    pub cols: usize,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
            rows,
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { data, rows, cols }
    }

    /// i.i.d. CN(0,1) entries.
    pub fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Self {
        let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
        Self { data, rows, cols }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.rows);
        for (r, &x) in v.iter().enumerate() {
            self.set(r, c, x);
        }
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn col_block(&self, lo: usize, hi: usize) -> CMatrix {
        assert!(lo <= hi && hi <= self.cols);
        let mut out = CMatrix::zeros(self.rows, hi - lo);
        for r in 0..self.rows {
            for c in lo..hi {
                out.set(r, c - lo, self.get(r, c));
            }
        }
        out
    }

    pub fn hermitian(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    /// Multiply on the right by diag(d): scales column j by `d[j]`.
    pub fn mul_diag_right(&self, d: &[f64]) -> CMatrix {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c) * d[c]);
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix::from_rows(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix::from_rows(self.rows, self.cols, data)
    }

    pub fn add_scaled_identity(&self, s: f64) -> CMatrix {
        assert_eq!(self.rows, self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            out.set(i, i, out.get(i, i) + s);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Cholesky factor L (lower triangular, L·Lᴴ = self) for a Hermitian
    /// positive definite matrix.
    fn cholesky(&self) -> Result<CMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = self.get(j, j).re;
            for k in 0..j {
                diag -= l.get(j, k).norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix not positive definite (pivot {diag} at {j})"
                )));
            }
            let djj = diag.sqrt();
            l.set(j, j, Complex64::new(djj, 0.0));
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / djj);
            }
        }
        Ok(l)
    }

    /// Solve self · X = B for Hermitian positive definite self.
    pub fn solve_hpd(&self, b: &CMatrix) -> Result<CMatrix> {
        assert_eq!(self.rows, b.rows);
        let l = self.cholesky()?;
        let n = self.rows;
        let mut x = b.clone();
        // forward: L y = b
        for c in 0..x.cols {
            for i in 0..n {
                let mut s = x.get(i, c);
                for k in 0..i {
                    s -= l.get(i, k) * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i).re);
            }
            // backward: Lᴴ x = y
            for i in (0..n).rev() {
                let mut s = x.get(i, c);
                for k in i + 1..n {
                    s -= l.get(k, i).conj() * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i).re);
            }
        }
        Ok(x)
    }

    /// trace(self⁻¹) for Hermitian positive definite self.
    pub fn trace_inverse_hpd(&self) -> Result<f64> {
        let inv = self.solve_hpd(&CMatrix::identity(self.rows))?;
        Ok((0..self.rows).map(|i| inv.get(i, i).re).sum())
    }
}
