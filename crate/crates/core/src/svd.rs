//! Singular value decomposition for small dense complex matrices.
//!
//! One-sided Jacobi: orthogonalize the columns of the working matrix with
//! complex plane rotations, accumulate the right factor, read the singular
//! values off the column norms. Adequate and robust for the ≤ 16×16
//! matrices this crate handles.

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Ordered SVD factors H = A · Σ · Bᴴ with a deterministic phase convention.
///
/// `a` is M×M (full left basis), `b` is N×N, `sigma` holds the min(M, N)
/// singular values in descending order. Each column of `a` is rotated so
/// its largest-magnitude entry is real positive; `b` carries the matching
/// phases so the product is preserved.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub a: CMatrix,
    pub sigma: Vec<f64>,
    pub b: CMatrix,
}

impl SingularTriple {
    /// Materialize the M×N diagonal-pattern Σ.
    pub fn sigma_matrix(&self) -> CMatrix {
        let m = self.a.rows;
        let n = self.b.rows;
        let mut s = CMatrix::zeros(m, n);
        for (i, &v) in self.sigma.iter().enumerate() {
            s.set(i, i, Complex64::new(v, 0.0));
        }
        s
    }

    /// A · Σ · Bᴴ.
    pub fn reconstruct(&self) -> CMatrix {
        self.a
            .matmul(&self.sigma_matrix())
            .matmul(&self.b.hermitian())
    }
}

const MAX_SWEEPS: usize = 64;
const ORTHO_TOL: f64 = 1e-15;

/// One-sided Jacobi SVD of a complex matrix with min(M, N) ≤ M, N ≤ 16.
pub fn svd_small(h: &CMatrix) -> Result<SingularTriple> {
    if h.data
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if h.rows == 0 || h.cols == 0 {
        return Err(Error::Domain("matrix must be non-empty".into()));
    }
    if h.rows >= h.cols {
        svd_tall(h)
    } else {
        // H = A Σ Bᴴ  ⇔  Hᴴ = B Σᵀ Aᴴ
        let t = svd_tall(&h.hermitian())?;
        Ok(SingularTriple {
            a: t.b,
            sigma: t.sigma,
            b: t.a,
        })
    }
}

fn svd_tall(h: &CMatrix) -> Result<SingularTriple> {
    let (m, n) = (h.rows, h.cols);
    debug_assert!(m >= n);
    let mut w = h.clone(); // columns get orthogonalized in place
    let mut v = CMatrix::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q);
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                if apq.norm() <= ORTHO_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Phase out the off-diagonal term, then a real Jacobi rotation.
                let phase = apq / apq.norm(); // e^{jφ}
                let g = apq.norm();
                let zeta = (aqq - app) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q) * phase.conj();
                    w.set(r, p, wp * c - wq * s);
                    w.set(r, q, wp * s + wq * c);
                }
                for r in 0..n {
                    let vp = v.get(r, p);
                    let vq = v.get(r, q) * phase.conj();
                    v.set(r, p, vp * c - vq * s);
                    v.set(r, q, vp * s + vq * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // column norms are the singular values
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|c| (0..m).map(|r| w.get(r, c).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let rank_tol = scale * 1e-13;

    let mut a = CMatrix::zeros(m, m);
    let mut b = CMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(norms[src]);
        b.set_col(dst, &v.col(src));
        if norms[src] > rank_tol {
            let col: Vec<Complex64> = w.col(src).iter().map(|z| z / norms[src]).collect();
            a.set_col(dst, &col);
        }
    }
    // fill zero-norm singular directions and the M−N completion columns
    complete_basis(&mut a, n.min(m));
    apply_phase_convention(&mut a, &mut b, n);

    Ok(SingularTriple { a, sigma, b })
}

/// Replace zero columns of `a` and extend the first `n_known` columns to a
/// full deterministic orthonormal basis by Gram-Schmidt over the standard
/// basis vectors.
fn complete_basis(a: &mut CMatrix, n_known: usize) {
    let m = a.rows;
    let mut have: Vec<Vec<Complex64>> = Vec::new();
    for c in 0..m {
        let col = a.col(c);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if c < n_known && norm > 0.5 {
            have.push(col);
        }
    }
    let mut next_fill: Vec<usize> = (0..m)
        .filter(|&c| {
            let norm: f64 = a.col(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            norm <= 0.5
        })
        .collect();
    let mut candidate = 0usize;
    while let Some(&slot) = next_fill.first() {
        // orthogonalize e_candidate against everything we have
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for probe in 0..m {
            let e = (candidate + probe) % m;
            let mut vec: Vec<Complex64> = (0..m)
                .map(|r| {
                    if r == e {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            for existing in &have {
                let inner: Complex64 = existing.iter().zip(&vec).map(|(u, x)| u.conj() * x).sum();
                for (xi, ui) in vec.iter_mut().zip(existing) {
                    *xi -= inner * ui;
                }
            }
            let norm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for x in vec.iter_mut() {
                    *x /= norm;
                }
                best = Some((norm, vec));
                candidate = e + 1;
                break;
            }
            if best.as_ref().map(|(bn, _)| norm > *bn).unwrap_or(true) && norm > 1e-12 {
                let mut nv = vec.clone();
                for x in nv.iter_mut() {
                    *x /= norm;
                }
                best = Some((norm, nv));
            }
        }
        let (_, col) = best.expect("basis completion always finds a direction");
        a.set_col(slot, &col);
        have.push(a.col(slot));
        next_fill.remove(0);
    }
}

/// Rotate each column of `a` so its largest-magnitude entry is real
/// positive; columns < n_b carry the conjugate phase into `b`.
fn apply_phase_convention(a: &mut CMatrix, b: &mut CMatrix, n_b: usize) {
    let m = a.rows;
    for c in 0..m {
        let col = a.col(c);
        let mut best = 0usize;
        let mut bm = -1.0;
        for (r, z) in col.iter().enumerate() {
            let nm = z.norm();
            if nm > bm + 1e-15 {
                bm = nm;
                best = r;
            }
        }
        if bm <= 0.0 {
            continue;
        }
        let pivot = col[best];
        let phasor = pivot.conj() / pivot.norm(); // e^{-jθ}
        let newcol: Vec<Complex64> = col.iter().map(|z| z * phasor).collect();
        a.set_col(c, &newcol);
        if c < n_b {
            let bc: Vec<Complex64> = b.col(c).iter().map(|z| z * phasor).collect();
            b.set_col(c, &bc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitarity_defect(u: &CMatrix) -> f64 {
        let p = u.hermitian().matmul(u);
        p.sub(&CMatrix::identity(u.cols)).max_abs()
    }

    #[test]
    fn diagonal_input() {
        let mut h = CMatrix::zeros(2, 2);
        h.set(0, 0, Complex64::new(3.0, 0.0));
        h.set(1, 1, Complex64::new(1.0, 0.0));
        let t = svd_small(&h).unwrap();
        assert!((t.sigma[0] - 3.0).abs() < 1e-12);
        assert!((t.sigma[1] - 1.0).abs() < 1e-12);
        assert!(t.a.sub(&CMatrix::identity(2)).max_abs() < 1e-12);
        assert!(t.b.sub(&CMatrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn random_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(m, n) in &[(4usize, 2usize), (2, 4), (1, 1), (8, 8), (5, 3), (16, 4)] {
            for _ in 0..20 {
                let h = CMatrix::gaussian(&mut rng, m, n);
                let t = svd_small(&h).unwrap();
                let rec = t.reconstruct();
                assert!(
                    rec.sub(&h).frobenius_norm() < 1e-9,
                    "reconstruction failed for {m}x{n}: {}",
                    rec.sub(&h).frobenius_norm()
                );
                assert!(unitarity_defect(&t.a) < 1e-10, "A not unitary ({m}x{n})");
                assert!(unitarity_defect(&t.b) < 1e-10, "B not unitary ({m}x{n})");
                for w in t.sigma.windows(2) {
                    assert!(w[0] >= w[1], "sigma not descending");
                }
            }
        }
    }

    #[test]
    fn rank_one_outer_product() {
        // u·vᴴ with ‖u‖ = 2, ‖v‖ = 1 → σ = (2, 0)
        let u = [Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        let v = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let mut h = CMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                h.set(r, c, u[r] * v[c].conj());
            }
        }
        let t = svd_small(&h).unwrap();
        assert!((t.sigma[0] - 2.0).abs() < 1e-12, "{}", t.sigma[0]);
        assert!(t.sigma[1].abs() < 1e-12, "{}", t.sigma[1]);
        assert!(t.reconstruct().sub(&h).frobenius_norm() < 1e-9);
        assert!(unitarity_defect(&t.a) < 1e-10);
    }

    #[test]
    fn phase_convention_largest_entry_real_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = CMatrix::gaussian(&mut rng, 4, 3);
        let t = svd_small(&h).unwrap();
        for c in 0..4 {
            let col = t.a.col(c);
            let mut best = 0;
            let mut bm = -1.0;
            for (r, z) in col.iter().enumerate() {
                if z.norm() > bm {
                    bm = z.norm();
                    best = r;
                }
            }
            assert!(
                col[best].im.abs() < 1e-12,
                "pivot not real: {:?}",
                col[best]
            );
            assert!(col[best].re > 0.0, "pivot not positive: {:?}", col[best]);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = CMatrix::zeros(2, 2);
        h.set(0, 0, Complex64::new(f64::NAN, 0.0));
        assert!(svd_small(&h).is_err());
    }
}
