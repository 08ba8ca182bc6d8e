//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Singular values, ascending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    sv
}

/// Smallest and largest absolute value of a spectrum; `(0, 0)` when empty.
pub fn abs_extremes(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    })
}

/// `min > tol * max(1, max)`.
pub fn relatively_nonzero(min: f64, max: f64, tol: f64) -> bool {
    min > tol * max.max(1.0)
}

/// Orthonormal basis of the orthogonal complement of a unit vector `x`,
/// as the trailing n−1 columns of the Householder reflector that maps `x`
/// to ∓e_1. Deterministic in `x`.
pub fn householder_complement(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = DVector::from_column_slice(x);
    v[0] += s * crate::tensor::norm(x);
    let vv = v.dot(&v);
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, n - 1).into_owned()
}

/// Matrix with orthonormal columns drawn from the Haar measure on the
/// Stiefel manifold (QR of a Gaussian matrix, signs fixed by diag(R) > 0).
pub fn random_orthonormal<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for j in 0..r {
        if rdiag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Extends a matrix with orthonormal columns to an orthogonal n×n matrix.
/// The first columns are `u` itself; the rest come from Gram–Schmidt on
/// the standard basis.
pub fn orthogonal_completion(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut cols: Vec<DVector<f64>> = u.column_iter().map(|c| c.into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = 0.0;
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for c in &cols {
                    let proj = c.dot(&v);
                    v -= c * proj;
                }
            }
            let nv = v.norm();
            if nv > best_norm {
                best_norm = nv;
                best = Some(v / nv);
            }
        }
        cols.push(best.expect("n > number of columns"));
    }
    DMatrix::from_columns(&cols)
}

/// Deterministic low-discrepancy unit vectors: Halton points pushed through
/// Box–Muller and normalized.
pub fn quasi_random_unit_vectors(n: usize, count: usize, offset: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let pairs = n.div_ceil(2);
    assert!(
        2 * pairs <= PRIMES.len(),
        "dimension {n} too large for Halton table"
    );
    (0..count)
        .map(|idx| {
            let i = (idx + offset + 1) as u64;
            let mut g = Vec::with_capacity(2 * pairs);
            for p in 0..pairs {
                // radical inverses are in (0, 1) for i ≥ 1
                let u1 = radical_inverse(i, PRIMES[2 * p]);
                let u2 = radical_inverse(i, PRIMES[2 * p + 1]);
                let r = (-2.0 * u1.ln()).sqrt();
                let t = std::f64::consts::TAU * u2;
                g.push(r * t.cos());
                g.push(r * t.sin());
            }
            g.truncate(n);
            let nrm = crate::tensor::norm(&g);
            if nrm == 0.0 {
                let mut e = vec![0.0; n];
                e[idx % n] = 1.0;
                e
            } else {
                g.into_iter().map(|v| v / nrm).collect()
            }
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Angle between two lines or vectors. With `identify_sign`, x and −x are
/// the same point.
pub fn angular_distance(a: &[f64], b: &[f64], identify_sign: bool) -> f64 {
    let na = crate::tensor::norm(a);
    let nb = crate::tensor::norm(b);
    let flip = if identify_sign && crate::tensor::dot(a, b) < 0.0 {
        -1.0
    } else {
        1.0
    };
    // chord length keeps tiny angles accurate
    let chord = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - flip * y / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    2.0 * (chord / 2.0).min(1.0).asin()
}
