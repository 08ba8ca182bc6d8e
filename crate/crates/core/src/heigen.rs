//! H-eigenpairs `A x^{k−1} = λ x^{[k−1]}` over the complex numbers.
//!
//! Residuals, Jacobians and the rank test work at any `n`. At `n = 2` the
//! eigenvalues are the roots of the resultant of the two binary forms
//! `(A x^{k−1})_i − λ x_i^{k−1}`, which gives an exact characteristic
//! polynomial of degree `2(k−1)`.

use nalgebra::{Complex, DMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::poly::{self, BinaryForm, Poly, C64};
use crate::tensor::DenseTensor;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HEigenPair {
    pub lambda: C64,
    /// Scaled so the largest-modulus entry equals 1.
    pub x: Vec<C64>,
    pub residual: f64,
    /// Algebraic multiplicity of `lambda` as a characteristic root.
    pub multiplicity: usize,
    /// `lambda` has a whole line of eigenvectors; `x` is one representative.
    pub positive_dimensional: bool,
}

/// JSON mirror of [`HEigenPair`] with complex numbers as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEigenPairRecord {
    pub lambda: [f64; 2],
    pub x: Vec<[f64; 2]>,
    pub residual: f64,
    pub multiplicity: usize,
    pub positive_dimensional: bool,
}

impl From<&HEigenPair> for HEigenPairRecord {
    fn from(p: &HEigenPair) -> Self {
        Self {
            lambda: [p.lambda.re, p.lambda.im],
            x: p.x.iter().map(|z| [z.re, z.im]).collect(),
            residual: p.residual,
            multiplicity: p.multiplicity,
            positive_dimensional: p.positive_dimensional,
        }
    }
}

fn check_square(a: &DenseTensor) -> Result<usize> {
    if !a.has_equal_dims() {
        return Err(TensorError::UnequalDims(a.dims().to_vec()));
    }
    Ok(a.dims()[0])
}

fn check_vector(a: &DenseTensor, x: &[C64]) -> Result<usize> {
    let n = check_square(a)?;
    if x.len() != n {
        return Err(TensorError::DimensionMismatch(format!(
            "vector length {}, tensor dimension {n}",
            x.len()
        )));
    }
    if x.iter().all(|z| z.norm() == 0.0) {
        return Err(TensorError::ZeroVector);
    }
    Ok(n)
}

/// Scales `x` so its largest-modulus entry is exactly 1.
pub fn scale_normalize(x: &[C64]) -> Option<Vec<C64>> {
    let pivot = x
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    if pivot.norm() == 0.0 {
        return None;
    }
    Some(x.iter().map(|z| z / pivot).collect())
}

fn ax_km1(a: &DenseTensor, x: &[C64]) -> Vec<C64> {
    let vecs: Vec<&[C64]> = vec![x; a.order()];
    a.contract_except(&vecs, &[0])
}

/// `A x^{k−1} − λ x^{[k−1]}`, contracting every slot but the first.
pub fn h_residual(a: &DenseTensor, x: &[C64], lambda: C64) -> Result<Vec<C64>> {
    check_vector(a, x)?;
    let p = (a.order() - 1) as u32;
    Ok(ax_km1(a, x)
        .iter()
        .zip(x)
        .map(|(g, xi)| g - lambda * xi.powu(p))
        .collect())
}

/// Jacobian in `x` of [`h_residual`] at fixed `λ`. For symmetric `A` this
/// is `(k−1)(A x^{k−2} − λ diag(x^{[k−2]}))`; in general the derivative of
/// `A x^{k−1}` sums over the contracted slots.
pub fn h_jacobian(a: &DenseTensor, x: &[C64], lambda: C64) -> Result<DMatrix<C64>> {
    let n = check_vector(a, x)?;
    let k = a.order();
    let vecs: Vec<&[C64]> = vec![x; k];
    let mut j = DMatrix::from_element(n, n, c(0.0));
    for slot in 1..k {
        let flat = a.contract_except(&vecs, &[0, slot]);
        j += DMatrix::from_row_slice(n, n, &flat);
    }
    let scale = lambda * (k as f64 - 1.0);
    for i in 0..n {
        j[(i, i)] -= scale * x[i].powu((k - 2) as u32);
    }
    Ok(j)
}

/// Residual norm with `x` scaled to unit max-modulus.
pub fn normalized_residual(a: &DenseTensor, x: &[C64], lambda: C64) -> Result<f64> {
    let xs = scale_normalize(x).ok_or(TensorError::ZeroVector)?;
    Ok(h_residual(a, &xs, lambda)?
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Rank test: the Jacobian has rank n−1 with kernel along `x`.
///
/// True iff the second-smallest singular value exceeds
/// `tol · max(1, σ_max)` and the smallest right singular vector lies within
/// `1e−6` (sine of the angle) of `x`.
pub fn h_nondegenerate(a: &DenseTensor, x: &[C64], lambda: C64, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(TensorError::InvalidTolerance(tol));
    }
    let residual = normalized_residual(a, x, lambda)?;
    if residual > tol {
        return Err(TensorError::ResidualTooLarge { residual, tol });
    }
    let xs = scale_normalize(x).ok_or(TensorError::ZeroVector)?;
    let n = xs.len();
    if n < 2 {
        return Ok(true);
    }
    let svd = h_jacobian(a, &xs, lambda)?.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let second = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[n - 1]];
    if second <= tol * largest.max(1.0) {
        return Ok(false);
    }
    // rows of Vᴴ are conjugated right singular vectors
    let kernel: Vec<C64> = v_t.row(order[0]).iter().map(|z| z.conj()).collect();
    Ok(complex_sine(&kernel, &xs) < 1e-6)
}

/// Sine of the angle between two complex lines, from the component of `b`
/// orthogonal to `a` (accurate near zero).
pub fn complex_sine(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let coef: C64 = a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<C64>() / na;
    let perp: f64 = a
        .iter()
        .zip(b)
        .map(|(u, v)| (v - coef * u).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (perp / nb).min(1.0)
}

/// Coefficients of the binary forms `(A x^{k−1})_i` for `i = 0, 1` when
/// `n = 2`: entry `j` multiplies `x1^{k−1−j} x2^j`.
pub(crate) fn contraction_forms(a: &DenseTensor) -> Result<[Vec<f64>; 2]> {
    let n = check_square(a)?;
    if n != 2 {
        return Err(TensorError::RequiresN2(n));
    }
    let k = a.order();
    let d = k - 1;
    let mut forms = [vec![0.0; d + 1], vec![0.0; d + 1]];
    for (flat, &v) in a.entries().iter().enumerate() {
        // row-major: first index is the top bit
        let first = flat >> d;
        let twos = (flat & ((1 << d) - 1)).count_ones() as usize;
        forms[first][twos] += v;
    }
    Ok(forms)
}

fn eigen_forms(base: &[Vec<f64>; 2], lambda: C64) -> (BinaryForm, BinaryForm) {
    let d = base[0].len() - 1;
    let mut f1: Vec<C64> = base[0].iter().map(|&v| c(v)).collect();
    let mut f2: Vec<C64> = base[1].iter().map(|&v| c(v)).collect();
    f1[0] -= lambda;
    f2[d] -= lambda;
    (BinaryForm { coeffs: f1 }, BinaryForm { coeffs: f2 })
}

/// Characteristic polynomial of an order-k tensor with n = 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPolyN2 {
    /// Real coefficients, ascending in λ.
    pub coeffs: Vec<f64>,
    /// Effective degree after dropping negligible leading coefficients.
    pub degree: usize,
    /// `n (k−1)^{n−1} = 2(k−1)`.
    pub expected_degree: usize,
}

impl CharPolyN2 {
    pub fn poly(&self) -> Poly {
        Poly::from_real(&self.coeffs[..=self.degree])
    }
}

/// Row-sum bound on the H-eigenvalue moduli.
fn eigenvalue_radius(a: &DenseTensor) -> f64 {
    let n = a.dims()[0];
    let per_row = a.entries().len() / n;
    let r = a
        .entries()
        .chunks(per_row)
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Resultant in `(x1, x2)` of `(A x^{k−1})_i − λ x_i^{k−1}`, as a
/// polynomial in λ. Recovered exactly (up to rounding) by evaluating the
/// Sylvester determinant at `2k−1` points on a circle and inverting the DFT.
pub fn charpoly_n2(a: &DenseTensor) -> Result<CharPolyN2> {
    let base = contraction_forms(a)?;
    let k = a.order();
    let expected = 2 * (k - 1);
    let samples = expected + 1;
    let rho = eigenvalue_radius(a);
    let omega =
        |j: usize| Complex::from_polar(1.0, std::f64::consts::TAU * j as f64 / samples as f64);
    let values: Vec<C64> = (0..samples)
        .map(|j| {
            let (f1, f2) = eigen_forms(&base, omega(j) * rho);
            poly::resultant(&f1, &f2)
        })
        .collect();
    let coeffs: Vec<f64> = (0..samples)
        .map(|m| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * omega(j * m % samples).conj())
                .sum();
            (s / samples as f64).re / rho.powi(m as i32)
        })
        .collect();
    // compare in the scaled variable λ/ρ, where the coefficients are balanced
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(m, v)| (v * rho.powi(m as i32)).abs())
        .collect();
    let top = scaled.iter().copied().fold(0.0, f64::max);
    let degree = scaled.iter().rposition(|&v| v > 1e-10 * top).unwrap_or(0);
    Ok(CharPolyN2 {
        coeffs: coeffs[..=expected].to_vec(),
        degree,
        expected_degree: expected,
    })
}

/// All H-eigenpairs of an n = 2 tensor, sorted by (Re λ, Im λ).
#[derive(Debug, Clone, PartialEq)]
pub struct HSolution {
    pub pairs: Vec<HEigenPair>,
    pub charpoly: CharPolyN2,
    /// Distinct eigenvalues with algebraic multiplicities.
    pub eigenvalues: Vec<(C64, usize)>,
    /// The characteristic polynomial lost degree (non-generic input).
    pub deficient: bool,
}

impl HSolution {
    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.1).sum()
    }
}

/// Fixed representatives for an eigenvalue whose eigenvectors fill the
/// whole projective line.
fn line_representatives(count: usize) -> Vec<Vec<C64>> {
    let base: [(f64, f64); 8] = [
        (1.0, 0.0),
        (0.0, 1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (1.0, 0.5),
        (0.5, 1.0),
        (1.0, -0.5),
        (-0.5, 1.0),
    ];
    (0..count)
        .map(|i| {
            let (a, b) = base[i % base.len()];
            vec![c(a), c(b)]
        })
        .collect()
}

/// Newton steps on `(x_free, λ)` with the pivot entry of `x` held at 1.
fn polish(a: &DenseTensor, x: &mut [C64], lambda: &mut C64, steps: usize) -> Result<f64> {
    let k = a.order();
    let pivot = if x[0].norm() >= x[1].norm() { 0 } else { 1 };
    let free = 1 - pivot;
    let mut res = normalized_residual(a, x, *lambda)?;
    for _ in 0..steps {
        if res == 0.0 {
            break;
        }
        let f = h_residual(a, x, *lambda)?;
        let j = h_jacobian(a, x, *lambda)?;
        let m = nalgebra::Matrix2::new(
            j[(0, free)],
            -x[0].powu((k - 1) as u32),
            j[(1, free)],
            -x[1].powu((k - 1) as u32),
        );
        let Some(delta) = m.lu().solve(&Vector2::new(-f[0], -f[1])) else {
            break;
        };
        let mut x_new = x.to_vec();
        x_new[free] += delta[0];
        let lambda_new = *lambda + delta[1];
        let r = normalized_residual(a, &x_new, lambda_new)?;
        if !(r < res) {
            break;
        }
        x.copy_from_slice(&x_new);
        *lambda = lambda_new;
        res = r;
    }
    Ok(res)
}

/// Eigenpairs from the roots of [`charpoly_n2`].
///
/// For each distinct eigenvalue the common projective roots of the two
/// binary forms are extracted; simple eigenvalues get Newton polishing on
/// the bivariate system. An eigenvalue at which both forms vanish
/// identically is reported with `multiplicity`-many representative
/// directions flagged `positive_dimensional`.
pub fn solve_h_n2(a: &DenseTensor) -> Result<HSolution> {
    let charpoly = charpoly_n2(a)?;
    let base = contraction_forms(a)?;
    let roots = poly::roots_with_multiplicity(&charpoly.poly(), 1e-7);
    let scale = a.hs_norm().max(1.0);
    let mut pairs = Vec::new();
    let mut eigenvalues = Vec::new();
    for root in roots {
        let lambda0 = root.value;
        let m = root.multiplicity;
        eigenvalues.push((lambda0, m));
        let (f1, f2) = eigen_forms(&base, lambda0);
        let zero1 = f1.max_abs() <= 1e-8 * scale;
        let zero2 = f2.max_abs() <= 1e-8 * scale;
        if zero1 && zero2 {
            for x in line_representatives(m) {
                let residual = normalized_residual(a, &x, lambda0)?;
                pairs.push(HEigenPair {
                    lambda: lambda0,
                    x,
                    residual,
                    multiplicity: m,
                    positive_dimensional: true,
                });
            }
            continue;
        }
        let mut candidates: Vec<Vec<C64>> = Vec::new();
        for (form, other) in [(&f1, &f2), (&f2, &f1)] {
            if form.max_abs() <= 1e-8 * scale {
                continue;
            }
            for (x1, x2, _) in form.projective_roots(1e-12) {
                let score = if other.max_abs() <= 1e-8 * scale {
                    0.0
                } else {
                    other.eval(x1, x2).norm() / other.max_abs()
                };
                candidates.push(vec![x1, x2, c(score)]);
            }
        }
        candidates.sort_by(|p, q| p[2].re.total_cmp(&q[2].re));
        let best = candidates.first().map_or(f64::INFINITY, |v| v[2].re);
        let mut accepted: Vec<HEigenPair> = Vec::new();
        for cand in candidates {
            let score = cand[2].re;
            if score > 1e-6_f64.max(10.0 * best) && !accepted.is_empty() {
                continue;
            }
            let mut x = vec![cand[0], cand[1]];
            let mut lambda = lambda0;
            let residual = if m == 1 {
                polish(a, &mut x, &mut lambda, 8)?
            } else {
                normalized_residual(a, &x, lambda)?
            };
            let x = scale_normalize(&x).ok_or(TensorError::ZeroVector)?;
            if accepted.iter().any(|p| complex_sine(&p.x, &x) < 1e-6) {
                continue;
            }
            accepted.push(HEigenPair {
                lambda,
                x,
                residual,
                multiplicity: m,
                positive_dimensional: false,
            });
            if m == 1 {
                break;
            }
        }
        pairs.extend(accepted);
    }
    let key = |z: &C64| (z.re, z.im);
    pairs.sort_by(|p, q| {
        let (a, b) = (key(&p.lambda), key(&q.lambda));
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
    });
    eigenvalues.sort_by(|p, q| p.0.re.total_cmp(&q.0.re).then(p.0.im.total_cmp(&q.0.im)));
    let deficient = charpoly.degree < charpoly.expected_degree;
    Ok(HSolution {
        pairs,
        charpoly,
        eigenvalues,
        deficient,
    })
}
