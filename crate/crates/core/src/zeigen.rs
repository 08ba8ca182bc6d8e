//! Z-eigenpairs of symmetric tensors and their nondegeneracy certification.
//!
//! A unit vector `x` is a Z-eigenvector when `T(x) = A x^{k-1} - λ x`
//! vanishes with `λ = ⟨A, x^{⊗k}⟩`. Nondegeneracy is checked two ways: the
//! Jacobian `∇T(x)` must be nonsingular, and the Riemannian Hessian of
//! `S(x) = ⟨A, x^{⊗k}⟩` on the sphere must be nonsingular. For `λ ≠ 0` the
//! two verdicts coincide because `Pᵀ ∇T P = Hess / k` on the tangent space.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::linalg;
use crate::tensor::{dot, norm, normalize, SymmetricTensor};

/// Default relative threshold for nondegeneracy verdicts.
pub const DEFAULT_CERT_TOL: f64 = 1e-8;
/// Inputs further than this from the unit sphere are rejected.
pub const UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZEigenPair {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
}

impl ZEigenPair {
    pub fn converged(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Which spectral route produced a certification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertRoute {
    Jacobian,
    Hessian,
    Both,
}

/// Spectral diagnostics and the nondegeneracy verdict for one eigen-object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub route: CertRoute,
    pub jac_min_sv: Option<f64>,
    pub jac_max_sv: Option<f64>,
    pub hess_min_abs_eig: Option<f64>,
    pub hess_max_abs_eig: Option<f64>,
    pub nondegenerate: bool,
    pub tol: f64,
    /// Jacobian and Hessian verdicts agree; `None` when only one route applies.
    pub agreement: Option<bool>,
}

fn check_unit(x: &[f64]) -> Result<()> {
    let nrm = norm(x);
    if nrm == 0.0 {
        return Err(TensorError::ZeroVector);
    }
    if (nrm - 1.0).abs() > UNIT_TOL {
        return Err(TensorError::NotUnit { norm: nrm });
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(TensorError::InvalidTolerance(tol));
    }
    Ok(())
}

/// `T(x) = A x^{k-1} - ⟨A, x^{⊗k}⟩ x`.
pub fn z_residual(a: &SymmetricTensor, x: &[f64]) -> Result<Vec<f64>> {
    check_unit(x)?;
    let ax = a.contract_all_but_one(x)?;
    let lambda = dot(&ax, x);
    Ok(ax.iter().zip(x).map(|(g, xi)| g - lambda * xi).collect())
}

/// `∇T(x) = (k-1) A x^{k-2} - λ I - k λ x xᵀ`.
pub fn z_jacobian(a: &SymmetricTensor, x: &[f64]) -> Result<DMatrix<f64>> {
    check_unit(x)?;
    let k = a.order() as f64;
    let n = a.n();
    let m = a.contract_all_but_two(x)?;
    let lambda = a.form_value(x)?;
    let xv = DVector::from_column_slice(x);
    Ok(m * (k - 1.0) - DMatrix::identity(n, n) * lambda - (&xv * xv.transpose()) * (k * lambda))
}

/// Orthonormal basis of the tangent space `{v : vᵀx = 0}` as an n×(n−1)
/// matrix (Householder construction).
pub fn tangent_basis(x: &[f64]) -> Result<DMatrix<f64>> {
    let unit = normalize(x).ok_or(TensorError::ZeroVector)?;
    Ok(linalg::householder_complement(&unit))
}

/// Riemannian Hessian of `S` in the [`tangent_basis`] frame:
/// `Pᵀ (k(k-1) A x^{k-2} - k λ I) P`. Only meaningful at a Z-eigenvector.
pub fn riem_hessian_z(a: &SymmetricTensor, x: &[f64]) -> Result<DMatrix<f64>> {
    check_unit(x)?;
    let k = a.order() as f64;
    let n = a.n();
    let m = a.contract_all_but_two(x)?;
    let lambda = a.form_value(x)?;
    let p = tangent_basis(x)?;
    let euclid = m * (k * (k - 1.0)) - DMatrix::identity(n, n) * (k * lambda);
    let h = p.transpose() * euclid * &p;
    Ok((&h + h.transpose()) * 0.5)
}

/// Shift used by the power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    /// `(k-1)·‖A‖_HS`, large enough to make the iteration monotone.
    Auto,
    /// `-(k-1)·‖A‖_HS`; converges to local minima of `S`.
    AutoConcave,
    Fixed(f64),
}

impl Shift {
    fn resolve(self, a: &SymmetricTensor) -> f64 {
        let bound = (a.order() as f64 - 1.0) * a.hs_norm();
        match self {
            Shift::Auto => bound,
            Shift::AutoConcave => -bound,
            Shift::Fixed(alpha) => alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub shift: Shift,
    pub tol: f64,
    pub maxit: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            shift: Shift::Auto,
            tol: 1e-12,
            maxit: 10_000,
        }
    }
}

fn pair_at(a: &SymmetricTensor, x: Vec<f64>) -> Result<ZEigenPair> {
    let ax = a.contract_all_but_one(&x)?;
    let lambda = dot(&ax, &x);
    let residual = ax
        .iter()
        .zip(&x)
        .map(|(g, xi)| (g - lambda * xi).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ZEigenPair {
        lambda,
        x,
        residual,
    })
}

/// Shifted symmetric higher-order power iteration
/// `x ← ±normalize(A x^{k-1} + α x)`, with the sign of the shift.
///
/// Stops as soon as `‖T(x)‖ ≤ tol`; an exhausted iteration budget is not an
/// error, the returned residual tells the caller whether it converged.
pub fn solve_z_power(a: &SymmetricTensor, x0: &[f64], opts: PowerOptions) -> Result<ZEigenPair> {
    check_tol(opts.tol)?;
    let mut x = normalize(x0).ok_or(TensorError::ZeroVector)?;
    if x.len() != a.n() {
        return Err(TensorError::DimensionMismatch(format!(
            "start has length {}, tensor dimension {}",
            x.len(),
            a.n()
        )));
    }
    let alpha = opts.shift.resolve(a);
    let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
    let mut pair = pair_at(a, x.clone())?;
    for _ in 0..opts.maxit {
        if pair.residual <= opts.tol {
            break;
        }
        let ax = a.contract_all_but_one(&x)?;
        let step: Vec<f64> = ax
            .iter()
            .zip(&x)
            .map(|(g, xi)| sign * (g + alpha * xi))
            .collect();
        match normalize(&step) {
            Some(next) => x = next,
            None => break,
        }
        pair = pair_at(a, x.clone())?;
    }
    Ok(pair)
}

/// Newton's method on `[A x^{k-1} - λ x; (xᵀx - 1)/2] = 0`. Converges
/// quadratically near a nonsingular eigenpair.
pub fn polish_z_newton(
    a: &SymmetricTensor,
    x0: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<ZEigenPair> {
    let n = a.n();
    let k = a.order() as f64;
    let mut x = normalize(x0).ok_or(TensorError::ZeroVector)?;
    let mut current = pair_at(a, x.clone())?;
    let mut lambda = current.lambda;
    for _ in 0..maxit {
        if current.residual <= tol {
            break;
        }
        let m = a.contract_all_but_two(&x)?;
        let ax = &m * DVector::from_column_slice(&x);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n))
            .copy_from(&(&m * (k - 1.0) - DMatrix::identity(n, n) * lambda));
        for i in 0..n {
            jac[(i, n)] = -x[i];
            jac[(n, i)] = x[i];
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -(ax[i] - lambda * x[i]);
        }
        rhs[n] = -(dot(&x, &x) - 1.0) / 2.0;
        let Some(delta) = jac.lu().solve(&rhs) else {
            break;
        };
        let moved: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, d)| xi + d).collect();
        let Some(next) = normalize(&moved) else {
            break;
        };
        x = next;
        let pair = pair_at(a, x.clone())?;
        if !pair.residual.is_finite() {
            break;
        }
        lambda = pair.lambda;
        current = pair;
    }
    Ok(current)
}

/// Certifies a numerical Z-eigenvector through the Jacobian and, when
/// `|λ| > tol`, the Riemannian Hessian.
pub fn certify_z(a: &SymmetricTensor, x: &[f64], tol: f64) -> Result<CertificationReport> {
    check_tol(tol)?;
    let residual = norm(&z_residual(a, x)?);
    if residual > tol {
        return Err(TensorError::ResidualTooLarge { residual, tol });
    }
    let lambda = a.form_value(x)?;
    let jac_sv = linalg::singular_values(&z_jacobian(a, x)?);
    let (jac_min, jac_max) = (jac_sv[0], *jac_sv.last().unwrap());
    let jac_ok = linalg::relatively_nonzero(jac_min, jac_max, tol);

    let hess_eig = linalg::sym_eigenvalues(&riem_hessian_z(a, x)?);
    let (hess_min, hess_max) = linalg::abs_extremes(&hess_eig);
    let hess_ok = linalg::relatively_nonzero(hess_min, hess_max, tol);

    let (route, agreement) = if lambda.abs() > tol {
        (CertRoute::Both, Some(jac_ok == hess_ok))
    } else {
        (CertRoute::Jacobian, None)
    };
    Ok(CertificationReport {
        route,
        jac_min_sv: Some(jac_min),
        jac_max_sv: Some(jac_max),
        hess_min_abs_eig: Some(hess_min),
        hess_max_abs_eig: Some(hess_max),
        nondegenerate: jac_ok,
        tol,
        agreement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultistartOptions {
    /// Number of starts; `None` means `50·k·n`.
    pub starts: Option<usize>,
    pub tol: f64,
    pub maxit: usize,
    pub dedup_angle: f64,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            starts: None,
            tol: 1e-12,
            maxit: 10_000,
            dedup_angle: 1e-6,
        }
    }
}

/// Outcome of a multistart search.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    /// Distinct converged eigenpairs, sorted by descending λ.
    pub pairs: Vec<ZEigenPair>,
    /// Power-iteration starts that did not reach the tolerance.
    pub unconverged: usize,
}

/// Flips `x` so its first coordinate above `1e-8` in magnitude is positive.
pub(crate) fn sign_canonical(x: &mut [f64]) -> bool {
    let flip = x.iter().find(|v| v.abs() > 1e-8).is_some_and(|&v| v < 0.0);
    if flip {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    flip
}

/// Newton iterations per start in the saddle-seeking pass of the
/// multistart searches.
pub(crate) const NEWTON_STARTS_MAXIT: usize = 50;

/// Best-effort search for all real Z-eigenpairs from deterministic
/// quasi-random starts.
///
/// Uses the convex shift, plus the concave shift when k is even (for odd k
/// the minima of S are the maxima at −x), and a plain Newton run from every
/// start, which also converges to saddle points. Each power run is stopped at a
/// coarse residual and finished by Newton; if Newton wanders off, the power
/// iteration is run to full tolerance instead. For odd k every pair
/// `(λ, x)` is completed with its partner `(−λ, −x)`; for even k, `x` and
/// `−x` are identified.
pub fn multistart_z(a: &SymmetricTensor, opts: MultistartOptions) -> Result<MultistartResult> {
    check_tol(opts.tol)?;
    let n = a.n();
    let k = a.order();
    let count = opts.starts.unwrap_or(50 * k * n);
    let starts = linalg::quasi_random_unit_vectors(n, count, 0);
    let mut shifts = vec![Shift::Auto];
    if k % 2 == 0 {
        shifts.push(Shift::AutoConcave);
    }
    let jobs: Vec<(&Vec<f64>, Shift)> = starts
        .iter()
        .flat_map(|s| shifts.iter().map(move |&sh| (s, sh)))
        .collect();
    let found: Vec<Result<ZEigenPair>> = jobs
        .par_iter()
        .map(|(x0, shift)| {
            let coarse = solve_z_power(
                a,
                x0,
                PowerOptions {
                    shift: *shift,
                    tol: opts.tol.max(1e-7),
                    maxit: opts.maxit,
                },
            )?;
            if coarse.residual <= opts.tol {
                return Ok(coarse);
            }
            let polished = polish_z_newton(a, &coarse.x, opts.tol, 30)?;
            if polished.residual <= opts.tol
                && linalg::angular_distance(&polished.x, &coarse.x, false) < 1e-3
            {
                return Ok(polished);
            }
            solve_z_power(
                a,
                &coarse.x,
                PowerOptions {
                    shift: *shift,
                    tol: opts.tol,
                    maxit: opts.maxit,
                },
            )
        })
        .collect();
    // power iterations only reach local extrema; Newton also finds saddles
    let saddles: Vec<Result<ZEigenPair>> = starts
        .par_iter()
        .map(|x0| polish_z_newton(a, x0, opts.tol, NEWTON_STARTS_MAXIT))
        .collect();
    let mut unconverged = 0;
    let mut candidates = Vec::new();
    for r in found {
        let p = r?;
        if p.residual <= opts.tol {
            candidates.push(p);
        } else {
            unconverged += 1;
        }
    }
    for r in saddles {
        let p = r?;
        if p.residual <= opts.tol {
            candidates.push(p);
        }
    }
    Ok(MultistartResult {
        pairs: dedup_z(candidates, k, opts.dedup_angle),
        unconverged,
    })
}

/// Removes duplicate eigenpairs (angular distance below `angle`), adding
/// the `(−λ, −x)` partner for odd k and identifying `±x` for even k.
pub fn dedup_z(pairs: Vec<ZEigenPair>, k: usize, angle: f64) -> Vec<ZEigenPair> {
    let even = k % 2 == 0;
    let mut expanded = Vec::with_capacity(2 * pairs.len());
    for mut p in pairs {
        if even {
            sign_canonical(&mut p.x);
            expanded.push(p);
        } else {
            let partner = ZEigenPair {
                lambda: -p.lambda,
                x: p.x.iter().map(|v| -v).collect(),
                residual: p.residual,
            };
            expanded.push(p);
            expanded.push(partner);
        }
    }
    let mut out: Vec<ZEigenPair> = Vec::new();
    for p in expanded {
        match out
            .iter_mut()
            .find(|q| linalg::angular_distance(&q.x, &p.x, even) < angle)
        {
            Some(q) => {
                if p.residual < q.residual {
                    *q = p;
                }
            }
            None => out.push(p),
        }
    }
    out.sort_by(|p, q| {
        q.lambda.total_cmp(&p.lambda).then_with(|| {
            p.x.iter()
                .zip(&q.x)
                .map(|(a, b)| b.total_cmp(a))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    out
}

/// Number of eigen-lines (points up to ±x) among `pairs`, optionally only
/// those with `|λ| > zero_tol`.
pub fn count_lines(pairs: &[ZEigenPair], angle: f64, zero_tol: Option<f64>) -> usize {
    let mut lines: Vec<&[f64]> = Vec::new();
    for p in pairs {
        if zero_tol.is_some_and(|t| p.lambda.abs() <= t) {
            continue;
        }
        if !lines
            .iter()
            .any(|l| linalg::angular_distance(l, &p.x, true) < angle)
        {
            lines.push(&p.x);
        }
    }
    lines.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{random_symmetric, veronese};

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn e1_cubed() -> SymmetricTensor {
        veronese(&[1.0, 0.0], 3).unwrap()
    }

    fn diag11() -> SymmetricTensor {
        SymmetricTensor::diagonal(&[1.0, 1.0], 3).unwrap()
    }

    #[test]
    fn residual_examples() {
        let a = e1_cubed();
        assert_eq!(z_residual(&a, &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(z_residual(&a, &[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let t = z_residual(&a, &[S2, S2]).unwrap();
        assert!((t[0] - 0.25).abs() < 1e-15 && (t[1] + 0.25).abs() < 1e-15);
        assert!((a.form_value(&[S2, S2]).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!(matches!(
            z_residual(&a, &[1.0, 1.0]),
            Err(TensorError::NotUnit { .. })
        ));
    }

    #[test]
    fn jacobian_examples() {
        let a = e1_cubed();
        let j = z_jacobian(&a, &[1.0, 0.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -1.0]));
        let j0 = z_jacobian(&a, &[0.0, 1.0]).unwrap();
        assert_eq!(j0, DMatrix::zeros(2, 2));
    }

    #[test]
    fn tangent_basis_examples() {
        let p = tangent_basis(&[1.0, 0.0]).unwrap();
        assert!(p[(0, 0)].abs() < 1e-15 && (p[(1, 0)].abs() - 1.0).abs() < 1e-15);
        let p = tangent_basis(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(p.row(3).amax() < 1e-15);
        assert_eq!(tangent_basis(&[0.0, 0.0]), Err(TensorError::ZeroVector));
    }

    #[test]
    fn hessian_examples() {
        let h = riem_hessian_z(&e1_cubed(), &[1.0, 0.0]).unwrap();
        assert_eq!((h.nrows(), h.ncols()), (1, 1));
        assert!((h[(0, 0)] + 3.0).abs() < 1e-14);
        let h0 = riem_hessian_z(&e1_cubed(), &[0.0, 1.0]).unwrap();
        assert!(h0[(0, 0)].abs() < 1e-15);
        // diag(1,1), k=3 at (1,1)/√2: Pᵀ(6 diag(x) − 3λ I)P with P ∝ (1,−1),
        // which evaluates to 6/√2 − 3/√2 = 3/√2.
        let h = riem_hessian_z(&diag11(), &[S2, S2]).unwrap();
        assert!((h[(0, 0)] - 3.0 * S2).abs() < 1e-14);
    }

    #[test]
    fn power_examples() {
        let a = e1_cubed();
        let p = solve_z_power(&a, &[0.6, 0.8], PowerOptions::default()).unwrap();
        assert!(p.residual <= 1e-12);
        assert!((p.lambda - 1.0).abs() < 1e-12);
        assert!((p.x[0] - 1.0).abs() < 1e-12 && p.x[1].abs() < 1e-6);

        let fixed = solve_z_power(
            &a,
            &[1.0, 0.0],
            PowerOptions {
                maxit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fixed.x, vec![1.0, 0.0]);
        assert_eq!(fixed.residual, 0.0);

        let d = solve_z_power(&diag11(), &[S2, S2], PowerOptions::default()).unwrap();
        assert!((d.lambda - S2).abs() < 1e-15);
        assert!((d.x[0] - S2).abs() < 1e-15 && (d.x[1] - S2).abs() < 1e-15);
    }

    #[test]
    fn power_budget_exhaustion_is_not_an_error() {
        let a = random_symmetric(3, 3, 4).unwrap();
        let p = solve_z_power(
            &a,
            &[0.3, 0.2, 0.9],
            PowerOptions {
                maxit: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(p.residual > 1e-12);
    }

    #[test]
    fn certify_examples() {
        let r = certify_z(&e1_cubed(), &[1.0, 0.0], DEFAULT_CERT_TOL).unwrap();
        assert!((r.jac_min_sv.unwrap() - 1.0).abs() < 1e-14);
        assert!((r.jac_max_sv.unwrap() - 2.0).abs() < 1e-14);
        assert!((r.hess_min_abs_eig.unwrap() - 3.0).abs() < 1e-14);
        assert!(r.nondegenerate);
        assert_eq!(r.agreement, Some(true));
        assert_eq!(r.route, CertRoute::Both);

        let r0 = certify_z(&e1_cubed(), &[0.0, 1.0], DEFAULT_CERT_TOL).unwrap();
        assert!(!r0.nondegenerate);
        assert_eq!(r0.agreement, None);
        assert_eq!(r0.route, CertRoute::Jacobian);

        assert!(matches!(
            certify_z(&e1_cubed(), &[S2, S2], DEFAULT_CERT_TOL),
            Err(TensorError::ResidualTooLarge { .. })
        ));
        assert!(certify_z(&e1_cubed(), &[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn multistart_random_n3_all_nondegenerate() {
        for seed in 0..5 {
            let a = random_symmetric(3, 3, seed).unwrap();
            let res = multistart_z(&a, MultistartOptions::default()).unwrap();
            assert!(!res.pairs.is_empty());
            for p in &res.pairs {
                let r = certify_z(&a, &p.x, DEFAULT_CERT_TOL).unwrap();
                assert!(r.nondegenerate, "seed {seed}: {p:?} {r:?}");
            }
        }
    }

    #[test]
    fn dedup_adds_partners_for_odd_order() {
        let p = ZEigenPair {
            lambda: 1.0,
            x: vec![1.0, 0.0],
            residual: 0.0,
        };
        let out = dedup_z(vec![p.clone(), p.clone()], 3, 1e-6);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].lambda, -1.0);
        assert_eq!(dedup_z(vec![p], 4, 1e-6).len(), 1);
    }
}
