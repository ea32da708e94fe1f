//! Dense complex linear algebra for the small matrices that show up in
//! precoder design (at most a few dozen rows).
//!
//! Everything here is hand-rolled on top of [`ComplexMatrix`]:
//!
//! * [`hermitian_eig`]: cyclic complex Jacobi, eigenvalues ascending.
//! * [`thin_svd`]: one-sided (Hestenes) Jacobi, singular values descending.
//! * [`thin_qr`]: Householder reflections, `R` with a real positive diagonal.
//! * [`gram_schmidt`]: modified Gram-Schmidt.
//!
//! QR and Gram-Schmidt deliberately take different routes so that each can
//! serve as the other's oracle.
//!
//! All routines are deterministic: eigenvector phases are pinned by making
//! the largest-magnitude entry of every eigenvector real and positive.

mod matrix;

pub use matrix::ComplexMatrix;
pub(crate) use matrix::dot;

use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance for the Hermitian-input check.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// A matrix is treated as rank deficient when `σ_min ≤ RANK_TOL · σ_max`.
pub const RANK_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("matrix is numerically rank deficient (σ_min/σ_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("expected a tall matrix (rows ≥ cols), got {rows}x{cols}")]
    WideMatrix { rows: usize, cols: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("expected {}x{} entries, found {found}", expected.0, expected.1)]
    Shape { expected: (usize, usize), found: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
}

/// Eigenpairs of a Hermitian matrix, ascending by eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: ComplexMatrix,
}

/// Thin SVD `Y = U · diag(S) · V†` with `S` descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Thin QR `Y = Q · R`.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// A 2×2 unitary `G` with `G† [[α, γ], [γ̄, β]] G` diagonal.
///
/// `G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]` where `γ = |γ| e^{iφ}`.
#[derive(Clone, Copy)]
struct JacobiRotation {
    c: f64,
    s: f64,
    phase: Complex64,
}

impl JacobiRotation {
    fn new(alpha: f64, beta: f64, gamma: Complex64) -> Self {
        let g = gamma.norm();
        let phase = (gamma / g).conj();
        let theta = (beta - alpha) / (2.0 * g);
        let t = if theta.is_infinite() {
            0.0
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        Self { c, s: t * c, phase }
    }

    /// `M ← M · G` acting on columns `p` and `q`.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, s, e) = (self.c, self.s, self.phase);
        for r in 0..m.rows() {
            let mp = m[(r, p)];
            let mq = m[(r, q)];
            m[(r, p)] = mp * c - mq * e * s;
            m[(r, q)] = mp * s + mq * e * c;
        }
    }

    /// `M ← G† · M` acting on rows `p` and `q`.
    fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, s, e) = (self.c, self.s, self.phase.conj());
        for col in 0..m.cols() {
            let mp = m[(p, col)];
            let mq = m[(q, col)];
            m[(p, col)] = mp * c - mq * e * s;
            m[(q, col)] = mp * s + mq * e * c;
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    let (n, cols) = a.shape();
    if n != cols {
        return Err(LinalgError::NotSquare { rows: n, cols });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(LinalgError::NonHermitian { defect });
    }

    // Work on an exactly Hermitian copy built from the upper triangle.
    let mut w = ComplexMatrix::from_fn(n, n, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Less => a[(r, c)],
        std::cmp::Ordering::Equal => Complex64::new(a[(r, r)].re, 0.0),
        std::cmp::Ordering::Greater => a[(c, r)].conj(),
    });
    let mut vectors = ComplexMatrix::identity(n);
    let scale = w.frobenius_norm();

    let mut converged = scale == 0.0;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|q| (0..q).map(move |p| (p, q)))
            .map(|(p, q)| w[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= f64::EPSILON * scale {
            converged = true;
            break;
        }
        for q in 1..n {
            for p in 0..q {
                let gamma = w[(p, q)];
                if gamma.norm() == 0.0 {
                    continue;
                }
                let rot = JacobiRotation::new(w[(p, p)].re, w[(q, q)].re, gamma);
                rot.apply_right(&mut w, p, q);
                rot.apply_left_adjoint(&mut w, p, q);
                w[(p, q)] = Complex64::new(0.0, 0.0);
                w[(q, p)] = Complex64::new(0.0, 0.0);
                w[(p, p)].im = 0.0;
                w[(q, q)].im = 0.0;
                rot.apply_right(&mut vectors, p, q);
            }
        }
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let values = order.iter().map(|&i| w[(i, i)].re).collect();
    let mut sorted = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.col_mut(dst).copy_from_slice(vectors.col(src));
        pin_phase(sorted.col_mut(dst));
    }
    Ok(EigenDecomposition {
        values,
        vectors: sorted,
    })
}

/// Rotates a vector so its largest-magnitude entry is real and positive.
fn pin_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v[best];
    let mag = pivot.norm();
    if mag > 0.0 {
        let rot = pivot.conj() / mag;
        for z in v.iter_mut() {
            *z *= rot;
        }
        v[best] = Complex64::new(v[best].re, 0.0);
    }
}

/// Thin SVD of a tall matrix via one-sided Jacobi.
///
/// Columns of `U` paired with zero singular values are completed to an
/// orthonormal set, so `U†U = I` holds even for rank-deficient input.
pub fn thin_svd(y: &ComplexMatrix) -> Result<ThinSvd, LinalgError> {
    let (n, p) = y.shape();
    if n < p {
        return Err(LinalgError::WideMatrix { rows: n, cols: p });
    }
    if !y.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut w = y.clone();
    let mut v = ComplexMatrix::identity(p);

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for q in 1..p {
            for pc in 0..q {
                let alpha: f64 = w.col(pc).iter().map(Complex64::norm_sqr).sum();
                let beta: f64 = w.col(q).iter().map(Complex64::norm_sqr).sum();
                let gamma = dot(w.col(pc), w.col(q));
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                let rot = JacobiRotation::new(alpha, beta, gamma);
                rot.apply_right(&mut w, pc, q);
                rot.apply_right(&mut v, pc, q);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let norms: Vec<f64> = (0..p)
        .map(|c| w.col(c).iter().map(Complex64::norm_sqr).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma_max = norms[order[0]];

    let mut u = ComplexMatrix::zeros(n, p);
    let mut v_sorted = ComplexMatrix::zeros(p, p);
    let mut singular_values = Vec::with_capacity(p);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        v_sorted.col_mut(dst).copy_from_slice(v.col(src));
        if s > 0.0 && s > f64::EPSILON * sigma_max {
            for (ud, &wd) in u.col_mut(dst).iter_mut().zip(w.col(src)) {
                *ud = wd / s;
            }
        } else {
            missing.push(dst);
        }
    }
    if !missing.is_empty() {
        complete_orthonormal(&mut u, &missing);
    }
    Ok(ThinSvd {
        u,
        singular_values,
        v: v_sorted,
    })
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_orthonormal(u: &mut ComplexMatrix, missing: &[usize]) {
    let n = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|c| !missing.contains(c)).collect();
    let mut candidate = 0;
    for &slot in missing {
        while candidate < n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // Two passes of projection keep the completion orthogonal to
            // working precision.
            for _ in 0..2 {
                for &c in &filled {
                    let h = dot(u.col(c), &e);
                    for (ei, &ui) in e.iter_mut().zip(u.col(c)) {
                        *ei -= h * ui;
                    }
                }
            }
            let norm = e.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
            if norm > 0.5 {
                for (ud, ei) in u.col_mut(slot).iter_mut().zip(e) {
                    *ud = ei / norm;
                }
                filled.push(slot);
                break;
            }
        }
    }
}

/// Singular values of `y`, descending.
pub fn singular_values(y: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    if y.rows() >= y.cols() {
        thin_svd(y).map(|s| s.singular_values)
    } else {
        thin_svd(&y.adjoint()).map(|s| s.singular_values)
    }
}

/// Rejects triangular factors whose singular values fall below the rank
/// threshold. The factor shares its singular values with the input.
fn check_rank(r: &ComplexMatrix) -> Result<(), LinalgError> {
    let sv = singular_values(r)?;
    let max = sv[0];
    let min = *sv.last().expect("non-empty");
    if max == 0.0 || min <= RANK_TOL * max {
        let ratio = if max == 0.0 { 0.0 } else { min / max };
        return Err(LinalgError::RankDeficient { ratio });
    }
    Ok(())
}

/// Thin Householder QR with `R` upper triangular and real positive diagonal.
pub fn thin_qr(y: &ComplexMatrix) -> Result<ThinQr, LinalgError> {
    let (n, p) = y.shape();
    if n < p {
        return Err(LinalgError::WideMatrix { rows: n, cols: p });
    }
    if !y.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut a = y.clone();
    // Householder vectors, each stored with 2/‖v‖², acting on rows k..n.
    let mut reflectors: Vec<Option<(Vec<Complex64>, f64)>> = Vec::with_capacity(p);
    for k in 0..p {
        let x: Vec<Complex64> = a.col(k)[k..].to_vec();
        let norm_x = x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            reflectors.push(None);
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(Complex64::norm_sqr).sum();
        let tau = 2.0 / vnorm2;
        for j in k..p {
            let col = &mut a.col_mut(j)[k..];
            let h = dot(&v, col) * tau;
            for (ci, &vi) in col.iter_mut().zip(&v) {
                *ci -= h * vi;
            }
        }
        reflectors.push(Some((v, tau)));
    }

    let mut r = ComplexMatrix::from_fn(p, p, |i, j| {
        if i <= j {
            a[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    check_rank(&r)?;

    let mut q = ComplexMatrix::eye(n, p);
    for (k, refl) in reflectors.iter().enumerate().rev() {
        if let Some((v, tau)) = refl {
            for j in 0..p {
                let col = &mut q.col_mut(j)[k..];
                let h = dot(v, col) * *tau;
                for (ci, &vi) in col.iter_mut().zip(v) {
                    *ci -= h * vi;
                }
            }
        }
    }

    for k in 0..p {
        let d = r[(k, k)];
        let mag = d.norm();
        let phase = d / mag;
        for z in q.col_mut(k) {
            *z *= phase;
        }
        for j in k..p {
            r[(k, j)] *= phase.conj();
        }
        r[(k, k)] = Complex64::new(mag, 0.0);
    }
    Ok(ThinQr { q, r })
}

/// Modified Gram-Schmidt orthonormalization of the columns of `y`.
///
/// Column `j` of the result has a real positive inner product with column
/// `j` of the input and spans, together with the earlier columns, the same
/// subspace as the first `j + 1` input columns.
pub fn gram_schmidt(y: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let (n, p) = y.shape();
    if n < p {
        return Err(LinalgError::WideMatrix { rows: n, cols: p });
    }
    if !y.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut q = y.clone();
    let mut r = ComplexMatrix::zeros(p, p);
    for j in 0..p {
        for i in 0..j {
            let h = dot(q.col(i), q.col(j));
            r[(i, j)] = h;
            let (done, rest) = q.as_mut_slice().split_at_mut(j * n);
            let qi = &done[i * n..(i + 1) * n];
            for (x, &b) in rest[..n].iter_mut().zip(qi) {
                *x -= h * b;
            }
        }
        let norm = q.col(j).iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LinalgError::RankDeficient { ratio: 0.0 });
        }
        r[(j, j)] = Complex64::new(norm, 0.0);
        for x in q.col_mut(j) {
            *x /= norm;
        }
    }
    check_rank(&r)?;
    Ok(q)
}
