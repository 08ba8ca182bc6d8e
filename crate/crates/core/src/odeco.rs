//! Orthogonally decomposable tensors and the closed form of all their
//! nonzero Z-eigenpairs.
//!
//! For `A = Σ_i λ_i u_i^{⊗k}` with orthonormal `u_i`, every nonzero
//! Z-eigenpair is generated by a support set `Λ ⊆ {1..r}`:
//! with `σ = (Σ_{i∈Λ} |λ_i|^{−2/(k−2)})^{−1/2}` the eigenvalue is
//! `±σ^{k−2}` and `x = Σ_{j∈Λ} p_j σ |λ_j|^{−1/(k−2)} u_j` for signs `p_j`.
//! For odd k the signs are forced by `p_j sign(λ_j) = sign(λ)`, and both
//! signs of λ occur; for even k the weights in Λ must share a sign, λ takes
//! that sign and every `p_j` is free.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::linalg;
use crate::tensor::{segre, veronese, BlockVector, DenseTensor, OrthogonalMatrix, SymmetricTensor};
use crate::zeigen::{certify_z, z_jacobian, z_residual, CertificationReport, ZEigenPair};

const ORTHO_TOL: f64 = 1e-12;
/// Residual every enumerated pair must meet against the built tensor.
pub const ENUM_RESIDUAL_TOL: f64 = 1e-10;

fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let r = u.ncols();
    (u.transpose() * u - DMatrix::identity(r, r)).amax()
}

fn check_weights(lambdas: &[f64], r: usize) -> Result<()> {
    if lambdas.len() != r {
        return Err(TensorError::InvalidSpec(format!(
            "{} weights for {r} factors",
            lambdas.len()
        )));
    }
    if let Some(i) = lambdas.iter().position(|&l| l == 0.0 || !l.is_finite()) {
        return Err(TensorError::InvalidSpec(format!(
            "weight {i} is zero or not finite"
        )));
    }
    Ok(())
}

/// `Σ_i λ_i u_i^{⊗k}` with the `u_i` the columns of an n×r matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOdecoSpec {
    u: DMatrix<f64>,
    lambdas: Vec<f64>,
}

impl SymOdecoSpec {
    pub fn new(u: DMatrix<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let (n, r) = u.shape();
        if r == 0 || r > n {
            return Err(TensorError::InvalidSpec(format!(
                "need 1 <= r <= n, got n = {n}, r = {r}"
            )));
        }
        check_weights(&lambdas, r)?;
        let err = orthonormality_error(&u);
        if err > ORTHO_TOL {
            return Err(TensorError::InvalidSpec(format!(
                "factor columns are not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Self { u, lambdas })
    }

    /// Haar-random factors and weights with random sign and magnitude in
    /// `[0.5, 2]`.
    pub fn random(n: usize, r: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Self::random_with(n, r, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Self> {
        let u = linalg::random_orthonormal(n, r, rng);
        let lambdas = (0..r).map(|_| random_weight(rng)).collect();
        Self::new(u, lambdas)
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn r(&self) -> usize {
        self.u.ncols()
    }

    pub fn factors(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.u.column(i).iter().copied().collect()
    }

    /// The same spec with factors `Q U`.
    pub fn rotated(&self, q: &OrthogonalMatrix) -> Result<Self> {
        Self::new(q.matrix() * &self.u, self.lambdas.clone())
    }
}

fn random_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mag: f64 = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// `Σ_i λ_i u^{(1)}_i ⊗ … ⊗ u^{(k)}_i` with one orthonormal factor per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralOdecoSpec {
    factors: Vec<DMatrix<f64>>,
    lambdas: Vec<f64>,
}

impl GeneralOdecoSpec {
    pub fn new(factors: Vec<DMatrix<f64>>, lambdas: Vec<f64>) -> Result<Self> {
        if factors.len() < DenseTensor::MIN_ORDER {
            return Err(TensorError::OrderTooSmall {
                min: DenseTensor::MIN_ORDER,
                got: factors.len(),
            });
        }
        let r = factors[0].ncols();
        for (j, f) in factors.iter().enumerate() {
            if f.ncols() != r || r == 0 || r > f.nrows() {
                return Err(TensorError::InvalidSpec(format!(
                    "factor {j} is {}x{}, expected r = {r} columns with r <= rows",
                    f.nrows(),
                    f.ncols()
                )));
            }
            let err = orthonormality_error(f);
            if err > ORTHO_TOL {
                return Err(TensorError::InvalidSpec(format!(
                    "factor {j} columns are not orthonormal (deviation {err:e})"
                )));
            }
        }
        check_weights(&lambdas, r)?;
        Ok(Self { factors, lambdas })
    }

    pub fn random(dims: &[usize], r: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let factors = dims
            .iter()
            .map(|&n| linalg::random_orthonormal(n, r, &mut rng))
            .collect();
        let lambdas = (0..r).map(|_| random_weight(&mut rng)).collect();
        Self::new(factors, lambdas)
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

/// `Σ_i λ_i u_i^{⊗k}`.
pub fn odeco_build_sym(spec: &SymOdecoSpec, k: usize) -> Result<SymmetricTensor> {
    let mut acc = veronese(&spec.column(0), k)?.scaled(spec.lambdas[0]);
    for i in 1..spec.r() {
        acc = acc.add_scaled(spec.lambdas[i], &veronese(&spec.column(i), k)?)?;
    }
    Ok(acc)
}

/// `Σ_i λ_i τ(u^{(1)}_i, …, u^{(k)}_i)`.
pub fn odeco_build_general(spec: &GeneralOdecoSpec) -> Result<DenseTensor> {
    let term = |i: usize| {
        let blocks = spec
            .factors
            .iter()
            .map(|f| f.column(i).iter().copied().collect())
            .collect();
        segre(&BlockVector::new(blocks))
    };
    let mut acc = term(0)?.scaled(spec.lambdas[0]);
    for i in 1..spec.lambdas.len() {
        acc = acc.add_scaled(spec.lambdas[i], &term(i)?)?;
    }
    Ok(acc)
}

/// One enumerated eigenpair together with the data that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdecoPair {
    pub pair: ZEigenPair,
    /// The support Λ (0-based factor indices, ascending).
    pub support: Vec<usize>,
    /// sign(Λ), the sign of λ.
    pub sign: i8,
    /// Diagonal signs p_jj for j in `support`, in the same order.
    pub pattern: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdecoEigenpairSet {
    pub k: usize,
    pub pairs: Vec<OdecoPair>,
}

fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// `σ = (Σ_{i∈Λ} |λ_i|^{−2/(k−2)})^{−1/2}`.
fn support_scale(lambdas: &[f64], support: &[usize], k: usize) -> f64 {
    let e = -2.0 / (k as f64 - 2.0);
    let s: f64 = support.iter().map(|&i| lambdas[i].abs().powf(e)).sum();
    s.powf(-0.5)
}

fn assemble(
    spec: &SymOdecoSpec,
    k: usize,
    support: &[usize],
    sign: i8,
    pattern: &[i8],
) -> (f64, Vec<f64>) {
    let sigma = support_scale(&spec.lambdas, support, k);
    let lambda = f64::from(sign) * sigma.powf(k as f64 - 2.0);
    let mut x = vec![0.0; spec.n()];
    for (&j, &p) in support.iter().zip(pattern) {
        let w = sigma * spec.lambdas[j].abs().powf(-1.0 / (k as f64 - 2.0));
        for (xi, uij) in x.iter_mut().zip(spec.u.column(j).iter()) {
            *xi += f64::from(p) * w * uij;
        }
    }
    (lambda, x)
}

/// Number of pairs [`enumerate_z_eigenpairs`] emits:
/// Σ over admissible Λ of `2^{|Λ|}` (k even) or `2` (k odd).
pub fn expected_count(lambdas: &[f64], k: usize) -> usize {
    let r = lambdas.len();
    (1u32..(1 << r))
        .filter_map(|mask| {
            let support: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
            if k % 2 == 0 {
                let s0 = sign_of(lambdas[support[0]]);
                support
                    .iter()
                    .all(|&i| sign_of(lambdas[i]) == s0)
                    .then(|| 1usize << support.len())
            } else {
                Some(2)
            }
        })
        .sum()
}

/// All nonzero Z-eigenpairs of `odeco_build_sym(spec, k)` in closed form.
pub fn enumerate_z_eigenpairs(spec: &SymOdecoSpec, k: usize) -> Result<OdecoEigenpairSet> {
    if k < DenseTensor::MIN_ORDER {
        return Err(TensorError::OrderTooSmall {
            min: DenseTensor::MIN_ORDER,
            got: k,
        });
    }
    check_weights(&spec.lambdas, spec.r())?;
    let tensor = odeco_build_sym(spec, k)?;
    let r = spec.r();
    let mut pairs = Vec::new();
    for mask in 1u32..(1 << r) {
        let support: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
        let signs: Vec<i8> = support.iter().map(|&i| sign_of(spec.lambdas[i])).collect();
        let mut choices: Vec<(i8, Vec<i8>)> = Vec::new();
        if k % 2 == 0 {
            if signs.iter().any(|&s| s != signs[0]) {
                continue;
            }
            for bits in 0u32..(1 << support.len()) {
                let pattern = (0..support.len())
                    .map(|t| if bits & (1 << t) != 0 { -1 } else { 1 })
                    .collect();
                choices.push((signs[0], pattern));
            }
        } else {
            for sign in [1i8, -1] {
                choices.push((sign, signs.iter().map(|&s| s * sign).collect()));
            }
        }
        for (sign, pattern) in choices {
            let (lambda, x) = assemble(spec, k, &support, sign, &pattern);
            let residual = crate::tensor::norm(&z_residual(&tensor, &x)?);
            pairs.push(OdecoPair {
                pair: ZEigenPair {
                    lambda,
                    x,
                    residual,
                },
                support: support.clone(),
                sign,
                pattern,
            });
        }
    }
    Ok(OdecoEigenpairSet { k, pairs })
}

/// Outcome of comparing `∇T` against the diagonal-frame block formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    /// Largest entrywise deviation from the block formula.
    pub max_deviation: f64,
    /// Eigenvalues of the block formula: (k−2)λ with multiplicity |Λ|−1,
    /// −2λ once, −λ with multiplicity n−|Λ|.
    pub block_eigenvalues: Vec<f64>,
    pub nonsingular: bool,
}

/// Rotates to the frame where the tensor is diagonal, moves Λ to the
/// leading block, and compares `∇T` with
/// `[(k−2)λ I − kλ z zᵀ, 0; 0, −λ I]`.
pub fn odeco_jacobian_check(
    spec: &SymOdecoSpec,
    k: usize,
    pair: &OdecoPair,
) -> Result<JacobianCheck> {
    let (lambda, x) = assemble(spec, k, &pair.support, pair.sign, &pair.pattern);
    let drift = (lambda - pair.pair.lambda).abs().max(
        x.iter()
            .zip(&pair.pair.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    );
    if pair.pair.x.len() != spec.n() || drift > 1e-10 {
        return Err(TensorError::InvalidSpec(
            "eigenpair was not generated by this spec".into(),
        ));
    }
    let n = spec.n();
    let q = linalg::orthogonal_completion(&spec.u);
    let qt = OrthogonalMatrix::new(q.transpose())?;
    let diag_tensor = odeco_build_sym(spec, k)?.orth_act(&qt)?;
    let y = qt.apply(&x);
    let jac = z_jacobian(&diag_tensor, &y)?;

    let mut order = pair.support.clone();
    order.extend((0..n).filter(|i| !pair.support.contains(i)));
    let permuted = DMatrix::from_fn(n, n, |a, b| jac[(order[a], order[b])]);

    let s = pair.support.len();
    let kf = k as f64;
    let z = DVector::from_iterator(s, pair.support.iter().map(|&j| y[j]));
    let mut block = DMatrix::zeros(n, n);
    block.view_mut((0, 0), (s, s)).copy_from(
        &(DMatrix::identity(s, s) * ((kf - 2.0) * lambda) - (&z * z.transpose()) * (kf * lambda)),
    );
    for i in s..n {
        block[(i, i)] = -lambda;
    }
    let max_deviation = (permuted - block).amax();

    let mut block_eigenvalues = vec![(kf - 2.0) * lambda; s - 1];
    block_eigenvalues.push(-2.0 * lambda);
    block_eigenvalues.extend(std::iter::repeat_n(-lambda, n - s));
    let nonsingular = block_eigenvalues.iter().all(|&e| e != 0.0);
    Ok(JacobianCheck {
        max_deviation,
        block_eigenvalues,
        nonsingular,
    })
}

/// Runs [`certify_z`] on every enumerated pair.
pub fn certify_all(spec: &SymOdecoSpec, k: usize, tol: f64) -> Result<Vec<CertificationReport>> {
    let tensor = odeco_build_sym(spec, k)?;
    enumerate_z_eigenpairs(spec, k)?
        .pairs
        .iter()
        .map(|p| certify_z(&tensor, &p.pair.x, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeigen::DEFAULT_CERT_TOL;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn spec(u: &[f64], n: usize, lambdas: &[f64]) -> SymOdecoSpec {
        let r = lambdas.len();
        SymOdecoSpec::new(DMatrix::from_column_slice(n, r, u), lambdas.to_vec()).unwrap()
    }

    #[test]
    fn build_examples() {
        let one = spec(&[1.0, 0.0], 2, &[1.0]);
        assert_eq!(
            odeco_build_sym(&one, 3).unwrap(),
            veronese(&[1.0, 0.0], 3).unwrap()
        );
        let two = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 1.0]);
        assert_eq!(
            odeco_build_sym(&two, 3).unwrap(),
            SymmetricTensor::diagonal(&[1.0, 1.0], 3).unwrap()
        );
        let rnd = SymOdecoSpec::random(4, 3, 8).unwrap();
        let t = odeco_build_sym(&rnd, 4).unwrap();
        let expect: f64 = rnd.lambdas().iter().map(|l| l * l).sum();
        assert!((t.hs_norm().powi(2) - expect).abs() < 1e-12);
    }

    #[test]
    fn general_build_examples() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let g = GeneralOdecoSpec::new(vec![e1.clone(), e1.clone(), e1], vec![1.0]).unwrap();
        assert_eq!(
            odeco_build_general(&g).unwrap(),
            segre(&BlockVector::new(vec![vec![1.0, 0.0]; 3])).unwrap()
        );
        let id = DMatrix::<f64>::identity(2, 2);
        let g = GeneralOdecoSpec::new(vec![id.clone(), id.clone(), id], vec![1.0, 1.0]).unwrap();
        let t = odeco_build_general(&g).unwrap();
        for (flat, &v) in t.entries().iter().enumerate() {
            let expect = if flat == 0 || flat == 7 { 1.0 } else { 0.0 };
            assert_eq!(v, expect);
        }
        let g = GeneralOdecoSpec::random(&[2, 3, 4], 2, 5).unwrap();
        let expect: f64 = g.lambdas().iter().map(|l| l * l).sum();
        assert!((odeco_build_general(&g).unwrap().hs_norm().powi(2) - expect).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        let u = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!(SymOdecoSpec::new(u.clone(), vec![0.0]).is_err());
        assert!(SymOdecoSpec::new(u, vec![1.0, 2.0]).is_err());
        let skew = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.1, 1.0]);
        assert!(SymOdecoSpec::new(skew, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn diag11_order3_has_six_pairs() {
        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 1.0]);
        let set = enumerate_z_eigenpairs(&s, 3).unwrap();
        assert_eq!(set.pairs.len(), 6);
        let mut mixed = 0;
        for p in &set.pairs {
            assert!(p.pair.residual <= 1e-15);
            if p.support.len() == 2 {
                mixed += 1;
                assert!((p.pair.lambda.abs() - S2).abs() < 1e-15);
                // matched signs: λ and both coordinates share a sign
                assert!(p.pair.x.iter().all(|&v| (v - p.pair.lambda).abs() < 1e-15));
            } else {
                assert!((p.pair.lambda.abs() - 1.0).abs() < 1e-15);
            }
        }
        assert_eq!(mixed, 2);
        assert_eq!(
            crate::zeigen::count_lines(
                &set.pairs.iter().map(|p| p.pair.clone()).collect::<Vec<_>>(),
                1e-8,
                None
            ),
            3
        );
    }

    #[test]
    fn diag21_order3_mixed_support() {
        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[2.0, 1.0]);
        let set = enumerate_z_eigenpairs(&s, 3).unwrap();
        let p = set
            .pairs
            .iter()
            .find(|p| p.support == vec![0, 1] && p.sign == 1)
            .unwrap();
        assert!((p.pair.lambda - (0.8f64).sqrt()).abs() < 1e-15);
        assert!((p.pair.x[0] - 0.447_213_595_499_958).abs() < 1e-12);
        assert!((p.pair.x[1] - 0.894_427_190_999_916).abs() < 1e-12);
        // A x² = (2 x1², x2²) = λ x
        let x = &p.pair.x;
        assert!((2.0 * x[0] * x[0] - p.pair.lambda * x[0]).abs() < 1e-15);
        assert!((x[1] * x[1] - p.pair.lambda * x[1]).abs() < 1e-15);
    }

    #[test]
    fn diag11_order4_has_eight_pairs() {
        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 1.0]);
        let set = enumerate_z_eigenpairs(&s, 4).unwrap();
        assert_eq!(set.pairs.len(), 8);
        let halves = set
            .pairs
            .iter()
            .filter(|p| (p.pair.lambda - 0.5).abs() < 1e-15)
            .count();
        assert_eq!(halves, 4);
        assert!(set.pairs.iter().all(|p| p.pair.lambda > 0.0));
    }

    #[test]
    fn even_order_skips_mixed_sign_supports() {
        let lambdas = [1.0, -1.5, 0.7];
        assert_eq!(expected_count(&lambdas, 4), 2 + 2 + 2 + 4);
        assert_eq!(expected_count(&lambdas, 3), 7 * 2);
        let s = SymOdecoSpec::new(DMatrix::identity(3, 3), lambdas.to_vec()).unwrap();
        assert_eq!(enumerate_z_eigenpairs(&s, 4).unwrap().pairs.len(), 10);
    }

    #[test]
    fn jacobian_check_examples() {
        let s = spec(&[1.0, 0.0], 2, &[1.0]);
        let set = enumerate_z_eigenpairs(&s, 3).unwrap();
        let p = set.pairs.iter().find(|p| p.sign == 1).unwrap();
        let c = odeco_jacobian_check(&s, 3, p).unwrap();
        assert!(c.max_deviation <= 1e-15);
        assert_eq!(c.block_eigenvalues, vec![-2.0, -1.0]);

        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 1.0]);
        let set = enumerate_z_eigenpairs(&s, 3).unwrap();
        let p = set
            .pairs
            .iter()
            .find(|p| p.support.len() == 2 && p.sign == 1)
            .unwrap();
        let c = odeco_jacobian_check(&s, 3, p).unwrap();
        assert!(c.max_deviation <= 1e-14);
        assert!((c.block_eigenvalues[0] - S2).abs() < 1e-15);
        assert!((c.block_eigenvalues[1] + 2.0 * S2).abs() < 1e-15);
        assert!(c.nonsingular);
    }

    #[test]
    fn jacobian_check_rejects_foreign_pair() {
        let s = spec(&[1.0, 0.0], 2, &[1.0]);
        let mut p = enumerate_z_eigenpairs(&s, 3).unwrap().pairs[0].clone();
        p.pair.x = vec![0.0, 1.0];
        assert!(odeco_jacobian_check(&s, 3, &p).is_err());
    }

    #[test]
    fn certify_all_examples() {
        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 1.0]);
        let reports = certify_all(&s, 3, DEFAULT_CERT_TOL).unwrap();
        assert_eq!(reports.len(), 6);
        assert!(reports.iter().all(|r| r.nondegenerate));
        let s = spec(&[1.0, 0.0, 0.0, 1.0], 2, &[2.0, 1.0]);
        assert!(certify_all(&s, 3, DEFAULT_CERT_TOL)
            .unwrap()
            .iter()
            .all(|r| r.nondegenerate));
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let s = loop {
            let s = SymOdecoSpec::random_with(4, 4, &mut rng).unwrap();
            if s.lambdas().iter().any(|&l| l < 0.0) && s.lambdas().iter().any(|&l| l > 0.0) {
                break s;
            }
        };
        assert!(certify_all(&s, 4, DEFAULT_CERT_TOL)
            .unwrap()
            .iter()
            .all(|r| r.nondegenerate));
    }
}
