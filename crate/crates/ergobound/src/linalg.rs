//! Minimal complex dense linear algebra for the precoder computations.
//!
//! The simulator only needs a handful of operations on small matrices
//! (tall-skinny channel matrices and K×K Grams): Hermitian Gram products,
//! Cholesky factorization with solves, and a Householder QR for the
//! wide-user-count path. Everything is column-major `Vec<Complex64>`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Condition-number estimate above which a Gram matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;

// ---------------------------------------------------------------------------
// matrix type
// ---------------------------------------------------------------------------

/// Dense complex matrix, column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    data: Vec<Complex64>,
    rows: usize,
    cols: usize,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// A^H x for a column vector x of length `rows`.
    pub fn adjoint_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows, "adjoint_vec dimension mismatch");
        (0..self.cols).map(|j| herm_inner(self.col(j), x)).collect()
    }

    /// A x for a column vector x of length `cols`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * xj;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

/// a^H b.
pub fn herm_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// ‖a‖².
pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

// ---------------------------------------------------------------------------
// Gram and Cholesky
// ---------------------------------------------------------------------------

/// G = A^H A, computing one triangle and mirroring (G is Hermitian).
pub fn gram(a: &CMat) -> CMat {
    let k = a.cols();
    let mut g = CMat::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            let v = herm_inner(a.col(i), a.col(j));
            g[(i, j)] = v;
            if i != j {
                g[(j, i)] = v.conj();
            }
        }
    }
    g
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix,
/// with a cheap condition estimate used to reject near-singular Grams.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    pub fn new(g: &CMat) -> Result<Self> {
        if g.rows() != g.cols() {
            return Err(Error::DegenerateInput(format!(
                "cholesky needs a square matrix, got {}x{}",
                g.rows(),
                g.cols()
            )));
        }
        let n = g.rows();
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = g[(j, j)].re;
            for p in 0..j {
                d -= l[(j, p)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite at pivot {j} (d = {d})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = g[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        let chol = Self { l };
        let cond = chol.condition_estimate();
        if cond > MAX_CONDITION {
            return Err(Error::IllConditioned { cond });
        }
        Ok(chol)
    }

    /// (max diag / min diag)² of L — a lower bound on the true 2-norm
    /// condition number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.l.rows();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..n {
            let d = self.l[(j, j)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo).powi(2)
    }

    /// Solve G x = b via the two triangular systems.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let y = self.forward(b);
        self.backward(&y)
    }

    /// Solve L y = b.
    fn forward(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for p in 0..i {
                let lip = self.l[(i, p)];
                y[i] = y[i] - lip * y[p];
            }
            y[i] /= self.l[(i, i)].re;
        }
        y
    }

    /// Solve L^H x = y.
    fn backward(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.l.rows();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            for p in (i + 1)..n {
                let lpi = self.l[(p, i)].conj();
                x[i] = x[i] - lpi * x[p];
            }
            x[i] /= self.l[(i, i)].re;
        }
        x
    }

    /// Diagonal of G^{-1}: [G^{-1}]_{jj} = ‖L^{-1} e_j‖², one forward solve
    /// per column of the identity.
    pub fn inverse_diag(&self) -> Vec<f64> {
        let n = self.l.rows();
        let mut out = vec![0.0; n];
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            let y = self.forward(&e);
            out[j] = norm_sq(&y[j..]);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Householder QR (thin)
// ---------------------------------------------------------------------------

/// Thin QR of a tall matrix (rows ≥ cols): returns (Q, R) with Q rows×cols
/// having orthonormal columns and R cols×cols upper triangular.
pub fn qr_thin(a: &CMat) -> Result<(CMat, CMat)> {
    let (m, k) = (a.rows(), a.cols());
    if m < k {
        return Err(Error::DegenerateInput(format!(
            "qr_thin needs rows >= cols, got {m}x{k}"
        )));
    }
    let mut work = a.clone();
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for j in 0..k {
        // Build the Householder vector for column j below the diagonal.
        let x0 = work[(j, j)];
        let xnorm = {
            let mut s = 0.0;
            for i in j..m {
                s += work[(i, j)].norm_sqr();
            }
            s.sqrt()
        };
        if xnorm == 0.0 {
            return Err(Error::Numerical(format!(
                "qr_thin: zero column at index {j}"
            )));
        }
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = vec![Complex64::new(0.0, 0.0); m - j];
        for i in j..m {
            v[i - j] = work[(i, j)];
        }
        v[0] -= alpha;
        let vnorm = norm_sq(&v).sqrt();
        if vnorm == 0.0 {
            // Column already aligned with the axis; identity reflector.
            reflectors.push(v);
            work[(j, j)] = alpha;
            continue;
        }
        v.iter_mut().for_each(|c| *c /= vnorm);
        // Apply H = I - 2 v v^H to the trailing block.
        for c in j..k {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in j..m {
                dot += v[i - j].conj() * work[(i, c)];
            }
            let two_dot = 2.0 * dot;
            for i in j..m {
                let upd = two_dot * v[i - j];
                work[(i, c)] -= upd;
            }
        }
        reflectors.push(v);
    }
    let mut r = CMat::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            r[(i, j)] = work[(i, j)];
        }
    }
    // Q = H_1 ... H_k applied to the first k columns of the identity.
    let mut q = CMat::from_fn(m, k, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for j in (0..k).rev() {
        let v = &reflectors[j];
        if norm_sq(v) == 0.0 {
            continue;
        }
        for c in 0..k {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in j..m {
                dot += v[i - j].conj() * q[(i, c)];
            }
            let two_dot = 2.0 * dot;
            for i in j..m {
                let upd = two_dot * v[i - j];
                q[(i, c)] -= upd;
            }
        }
    }
    Ok((q, r))
}

/// Solve R^H X = B^H column-wise variant used by the pseudo-inverse path:
/// returns W = Q R^{-H}, the unnormalized zero-forcing directions.
pub fn q_times_r_inv_adjoint(q: &CMat, r: &CMat) -> Result<CMat> {
    let k = r.rows();
    for j in 0..k {
        if r[(j, j)].norm() == 0.0 {
            return Err(Error::Numerical("singular R factor".into()));
        }
    }
    // Column c of W solves: W = Q R^{-H}  ⇔  W R^H = Q  ⇔ for each row of
    // R^H (lower triangular), forward-substitute across columns of Q.
    let m = q.rows();
    let mut w = CMat::zeros(m, k);
    // R^H is lower triangular with entries (R^H)_{ij} = conj(R_{ji}).
    // Solve X (R^H)^T? Work per matrix column instead: W_{:,c} satisfies
    // sum_{j<=c?} ... Simpler: W = Q * S where S = (R^H)^{-1} = (R^{-1})^H.
    // Compute T = R^{-1} (upper triangular inverse), then S = T^H.
    let mut t = CMat::zeros(k, k);
    for j in 0..k {
        // Solve R t_j = e_j by back substitution.
        let mut col = vec![Complex64::new(0.0, 0.0); k];
        col[j] = Complex64::new(1.0, 0.0);
        for i in (0..=j).rev() {
            let mut s = col[i];
            for p in (i + 1)..=j {
                s -= r[(i, p)] * col[p];
            }
            col[i] = s / r[(i, i)];
        }
        for i in 0..k {
            t[(i, j)] = col[i];
        }
    }
    // S = T^H; W_{:,c} = sum_j Q_{:,j} S_{j,c} = sum_j Q_{:,j} conj(T_{c,j}).
    for c in 0..k {
        for j in 0..k {
            let s = t[(c, j)].conj();
            if s.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..m {
                let upd = q[(i, j)] * s;
                w[(i, c)] += upd;
            }
        }
    }
    Ok(w)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64, msg: &str) {
        assert!((a - b).norm() <= tol, "{msg}: {a} vs {b}");
    }

    #[test]
    fn gram_is_hermitian_and_matches_inner_products() {
        let a = random_matrix(7, 4, 1);
        let g = gram(&a);
        for i in 0..4 {
            for j in 0..4 {
                assert_close(g[(i, j)], g[(j, i)].conj(), 1e-14, "hermitian");
                assert_close(g[(i, j)], herm_inner(a.col(i), a.col(j)), 1e-14, "entry");
            }
        }
    }

    #[test]
    fn cholesky_reconstructs_and_solves() {
        let a = random_matrix(9, 5, 2);
        let g = gram(&a);
        let ch = Cholesky::new(&g).unwrap();
        // L L^H = G
        let n = 5;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for p in 0..n {
                    s += ch.l[(i, p)] * ch.l[(j, p)].conj();
                }
                assert_close(s, g[(i, j)], 1e-12, "reconstruction");
            }
        }
        // Solve against a known vector.
        let x_true: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(i as f64 + 0.5, -(i as f64))).collect();
        let b = g.mul_vec(&x_true);
        let x = ch.solve(&b);
        for i in 0..n {
            assert_close(x[i], x_true[i], 1e-10, "solve");
        }
    }

    #[test]
    fn cholesky_inverse_diag_matches_explicit_inverse() {
        let a = random_matrix(8, 4, 3);
        let g = gram(&a);
        let ch = Cholesky::new(&g).unwrap();
        let diag = ch.inverse_diag();
        for j in 0..4 {
            let mut e = vec![Complex64::new(0.0, 0.0); 4];
            e[j] = Complex64::new(1.0, 0.0);
            let col = ch.solve(&e);
            assert!((diag[j] - col[j].re).abs() <= 1e-12, "diag {j}");
            assert!(col[j].im.abs() <= 1e-12, "inverse diagonal must be real");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_and_ill_conditioned() {
        let mut g = CMat::zeros(2, 2);
        g[(0, 0)] = Complex64::new(1.0, 0.0);
        g[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(matches!(Cholesky::new(&g), Err(Error::Numerical(_))));

        let mut h = CMat::zeros(2, 2);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(1, 1)] = Complex64::new(1e-26, 0.0);
        assert!(matches!(
            Cholesky::new(&h),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn qr_orthonormal_and_reconstructs() {
        let a = random_matrix(10, 6, 4);
        let (q, r) = qr_thin(&a).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = herm_inner(q.col(i), q.col(j));
                assert_close(got, Complex64::new(want, 0.0), 1e-12, "Q^H Q");
                if i > j {
                    assert!(r[(i, j)].norm() <= 1e-14, "R lower triangle");
                }
            }
        }
        for j in 0..6 {
            let rcol: Vec<Complex64> = (0..6).map(|i| r[(i, j)]).collect();
            let qr = q.mul_vec(&rcol);
            for i in 0..10 {
                assert_close(qr[i], a[(i, j)], 1e-12, "QR = A");
            }
        }
    }

    #[test]
    fn pseudo_inverse_paths_agree() {
        // W = A (A^H A)^{-1} via Cholesky solves must match Q R^{-H}.
        let a = random_matrix(12, 5, 5);
        let g = gram(&a);
        let ch = Cholesky::new(&g).unwrap();
        let (q, r) = qr_thin(&a).unwrap();
        let w_qr = q_times_r_inv_adjoint(&q, &r).unwrap();
        for c in 0..5 {
            let mut e = vec![Complex64::new(0.0, 0.0); 5];
            e[c] = Complex64::new(1.0, 0.0);
            let x = ch.solve(&e);
            let w_col = a.mul_vec(&x);
            for i in 0..12 {
                assert_close(w_col[i], w_qr[(i, c)], 1e-10, "pinv paths");
            }
        }
        // And the squared column norms equal the inverse-Gram diagonal.
        let diag = ch.inverse_diag();
        for c in 0..5 {
            let n2 = norm_sq(w_qr.col(c));
            assert!(
                (n2 - diag[c]).abs() <= 1e-10 * diag[c].max(1.0),
                "norm identity at {c}: {n2} vs {}",
                diag[c]
            );
        }
    }

    #[test]
    fn adjoint_and_mul_agree_with_naive() {
        let a = random_matrix(6, 3, 6);
        let x: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let y = a.adjoint_vec(&x);
        for j in 0..3 {
            assert_close(y[j], herm_inner(a.col(j), &x), 1e-14, "adjoint_vec");
        }
    }
}
