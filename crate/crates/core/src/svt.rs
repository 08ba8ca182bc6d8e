//! Singular vector tuples: critical points of `G(x) = ⟨A, x_1 ⊗ … ⊗ x_k⟩`
//! on the product of unit spheres.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::linalg;
use crate::tensor::{dot, norm, normalize, BlockVector, DenseTensor};
use crate::zeigen::{self, sign_canonical, tangent_basis, CertRoute, CertificationReport};

const UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularTuple {
    pub sigma: f64,
    pub blocks: BlockVector,
    pub residual: f64,
}

/// JSON-facing mirror of [`SingularTuple`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularTupleRecord {
    pub sigma: f64,
    pub blocks: Vec<Vec<f64>>,
    pub residual: f64,
}

impl From<&SingularTuple> for SingularTupleRecord {
    fn from(t: &SingularTuple) -> Self {
        Self {
            sigma: t.sigma,
            blocks: t.blocks.blocks().to_vec(),
            residual: t.residual,
        }
    }
}

fn check_sphere(x: &BlockVector) -> Result<()> {
    for b in x.blocks() {
        let nrm = norm(b);
        if nrm == 0.0 {
            return Err(TensorError::ZeroVector);
        }
        if (nrm - 1.0).abs() > UNIT_TOL {
            return Err(TensorError::NotUnit { norm: nrm });
        }
    }
    Ok(())
}

/// `G(x) = ⟨A, τ(x)⟩`.
pub fn g_value(a: &DenseTensor, x: &BlockVector) -> Result<f64> {
    let c = a.contract_leave_slot(x, 0)?;
    Ok(dot(&c, x.block(0)))
}

/// Stacked Riemannian gradient of `G`: block `i` is
/// `A(x_1,…,·,…,x_k) − σ x_i` with `σ = G(x)`.
pub fn svt_residual(a: &DenseTensor, x: &BlockVector) -> Result<BlockVector> {
    check_sphere(x)?;
    let sigma = g_value(a, x)?;
    let blocks = (0..a.order())
        .map(|i| {
            let c = a.contract_leave_slot(x, i)?;
            Ok(c.iter()
                .zip(x.block(i))
                .map(|(g, xi)| g - sigma * xi)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockVector::new(blocks))
}

fn tuple_at(a: &DenseTensor, x: BlockVector) -> Result<SingularTuple> {
    let sigma = g_value(a, &x)?;
    let mut sq = 0.0;
    for i in 0..a.order() {
        let c = a.contract_leave_slot(&x, i)?;
        sq += c
            .iter()
            .zip(x.block(i))
            .map(|(g, xi)| (g - sigma * xi).powi(2))
            .sum::<f64>();
    }
    Ok(SingularTuple {
        sigma,
        blocks: x,
        residual: sq.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopmOptions {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for HopmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            maxit: 10_000,
        }
    }
}

/// Deterministic replacement for a block whose contraction vanished.
fn perturbed_block(current: &[f64], attempt: usize) -> Vec<f64> {
    let n = current.len();
    let mut v: Vec<f64> = current.to_vec();
    v[attempt % n] += 0.5;
    v[(attempt + 1) % n] -= 0.25;
    normalize(&v).unwrap_or_else(|| {
        let mut e = vec![0.0; n];
        e[attempt % n] = 1.0;
        e
    })
}

/// Cyclic higher-order power method: `x_i ← normalize(A(…, x_{i−1}, ·, x_{i+1}, …))`
/// in turn for every slot, until the stacked residual is at most `tol`.
///
/// A vanishing contraction restarts that block from a deterministic
/// perturbation; after three such restarts the current (unconverged) point
/// is returned.
pub fn solve_svt_hopm(
    a: &DenseTensor,
    x0: &BlockVector,
    opts: HopmOptions,
) -> Result<SingularTuple> {
    if !(opts.tol > 0.0) {
        return Err(TensorError::InvalidTolerance(opts.tol));
    }
    let mut x = x0.normalized()?;
    let mut current = tuple_at(a, x.clone())?;
    let mut restarts = 0;
    'outer: for _ in 0..opts.maxit {
        if current.residual <= opts.tol {
            break;
        }
        for i in 0..a.order() {
            let c = a.contract_leave_slot(&x, i)?;
            match normalize(&c) {
                Some(next) => *x.block_mut(i) = next,
                None => {
                    restarts += 1;
                    if restarts >= 3 {
                        break 'outer;
                    }
                    let replacement = perturbed_block(x.block(i), restarts);
                    *x.block_mut(i) = replacement;
                }
            }
        }
        current = tuple_at(a, x.clone())?;
    }
    Ok(current)
}

/// Newton's method on the Lagrange system
/// `A(…,·,…) − μ_i x_i = 0`, `(x_iᵀx_i − 1)/2 = 0` for every slot.
pub fn polish_svt_newton(
    a: &DenseTensor,
    x0: &BlockVector,
    tol: f64,
    maxit: usize,
) -> Result<SingularTuple> {
    let k = a.order();
    let dims = a.dims().to_vec();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();
    let size = total + k;
    let mut x = x0.normalized()?;
    let mut current = tuple_at(a, x.clone())?;
    for _ in 0..maxit {
        if current.residual <= tol {
            break;
        }
        let sigma = current.sigma;
        let mut jac = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        for i in 0..k {
            let c = a.contract_leave_slot(&x, i)?;
            for r in 0..dims[i] {
                let row = offsets[i] + r;
                rhs[row] = -(c[r] - sigma * x.block(i)[r]);
                jac[(row, offsets[i] + r)] = -sigma;
                jac[(row, total + i)] = -x.block(i)[r];
                jac[(total + i, offsets[i] + r)] = x.block(i)[r];
            }
            rhs[total + i] = -(dot(x.block(i), x.block(i)) - 1.0) / 2.0;
            for j in 0..k {
                if j == i {
                    continue;
                }
                let m = a.contract_leave_two_slots(&x, i, j)?;
                jac.view_mut((offsets[i], offsets[j]), (dims[i], dims[j]))
                    .copy_from(&m);
            }
        }
        let Some(delta) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut next = Vec::with_capacity(k);
        for i in 0..k {
            let moved: Vec<f64> = (0..dims[i])
                .map(|r| x.block(i)[r] + delta[offsets[i] + r])
                .collect();
            let Some(b) = normalize(&moved) else {
                return Ok(current);
            };
            next.push(b);
        }
        x = BlockVector::new(next);
        let t = tuple_at(a, x.clone())?;
        if !t.residual.is_finite() {
            break;
        }
        current = t;
    }
    Ok(current)
}

/// Riemannian Hessian of `G` on the product of spheres in per-block
/// tangent bases `P_i`: diagonal blocks `−σ I`, off-diagonal blocks
/// `P_iᵀ A(…,·_i,…,·_j,…) P_j`. Only meaningful at a singular tuple.
pub fn riem_hessian_svt(a: &DenseTensor, x: &BlockVector) -> Result<DMatrix<f64>> {
    check_sphere(x)?;
    let k = a.order();
    let sigma = g_value(a, x)?;
    let bases = x
        .blocks()
        .iter()
        .map(|b| tangent_basis(b))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = bases.iter().map(|p| p.ncols()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let mut h = DMatrix::zeros(total, total);
    for i in 0..k {
        for d in 0..sizes[i] {
            h[(offsets[i] + d, offsets[i] + d)] = -sigma;
        }
        for j in (i + 1)..k {
            let m = a.contract_leave_two_slots(x, i, j)?;
            let block = bases[i].transpose() * m * &bases[j];
            h.view_mut((offsets[i], offsets[j]), (sizes[i], sizes[j]))
                .copy_from(&block);
            h.view_mut((offsets[j], offsets[i]), (sizes[j], sizes[i]))
                .copy_from(&block.transpose());
        }
    }
    Ok(h)
}

/// Nondegeneracy verdict from the spectrum of [`riem_hessian_svt`].
pub fn certify_svt(a: &DenseTensor, x: &BlockVector, tol: f64) -> Result<CertificationReport> {
    if !(tol > 0.0) {
        return Err(TensorError::InvalidTolerance(tol));
    }
    let residual = svt_residual(a, x)?.stacked_norm();
    if residual > tol {
        return Err(TensorError::ResidualTooLarge { residual, tol });
    }
    let eig = linalg::sym_eigenvalues(&riem_hessian_svt(a, x)?);
    let (lo, hi) = linalg::abs_extremes(&eig);
    Ok(CertificationReport {
        route: CertRoute::Hessian,
        jac_min_sv: None,
        jac_max_sv: None,
        hess_min_abs_eig: Some(lo),
        hess_max_abs_eig: Some(hi),
        nondegenerate: linalg::relatively_nonzero(lo, hi, tol),
        tol,
        agreement: None,
    })
}

/// Flips block signs so every block's first significant coordinate is
/// positive, and recomputes σ, which absorbs an odd number of flips.
pub fn canonicalize(a: &DenseTensor, t: &SingularTuple) -> Result<SingularTuple> {
    let mut blocks = t.blocks.blocks().to_vec();
    let mut flips = 0;
    for b in blocks.iter_mut() {
        if sign_canonical(b) {
            flips += 1;
        }
    }
    let sigma = if flips % 2 == 0 { t.sigma } else { -t.sigma };
    debug_assert!((sigma - g_value(a, &BlockVector::new(blocks.clone()))?).abs() < 1e-6);
    Ok(SingularTuple {
        sigma,
        blocks: BlockVector::new(blocks),
        residual: t.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtMultistartOptions {
    /// `None` means `50·k·max n_i`.
    pub starts: Option<usize>,
    pub tol: f64,
    pub maxit: usize,
    pub dedup_angle: f64,
}

impl Default for SvtMultistartOptions {
    fn default() -> Self {
        Self {
            starts: None,
            tol: 1e-12,
            maxit: 10_000,
            dedup_angle: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvtMultistartResult {
    /// Distinct canonical tuples, sorted by descending σ.
    pub tuples: Vec<SingularTuple>,
    pub unconverged: usize,
}

/// Best-effort search for singular vector tuples from quasi-random starts.
/// Each HOPM run stops at a coarse residual and is finished by Newton,
/// falling back to HOPM at full tolerance when Newton leaves the basin.
/// A plain Newton run from every start adds the saddle points HOPM cannot
/// reach; its failures are not counted as unconverged.
pub fn multistart_svt(a: &DenseTensor, opts: SvtMultistartOptions) -> Result<SvtMultistartResult> {
    if !(opts.tol > 0.0) {
        return Err(TensorError::InvalidTolerance(opts.tol));
    }
    let dims = a.dims().to_vec();
    let k = dims.len();
    let count = opts
        .starts
        .unwrap_or(50 * k * dims.iter().copied().max().unwrap_or(1));
    let per_block: Vec<Vec<Vec<f64>>> = dims
        .iter()
        .enumerate()
        .map(|(i, &n)| linalg::quasi_random_unit_vectors(n, count, i * count))
        .collect();
    let found: Vec<Result<SingularTuple>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let x0 = BlockVector::new(per_block.iter().map(|b| b[s].clone()).collect());
            let coarse = solve_svt_hopm(
                a,
                &x0,
                HopmOptions {
                    tol: opts.tol.max(1e-7),
                    maxit: opts.maxit,
                },
            )?;
            if coarse.residual <= opts.tol {
                return Ok(coarse);
            }
            let polished = polish_svt_newton(a, &coarse.blocks, opts.tol, 30)?;
            let stayed = polished
                .blocks
                .blocks()
                .iter()
                .zip(coarse.blocks.blocks())
                .all(|(p, c)| linalg::angular_distance(p, c, false) < 1e-3);
            if polished.residual <= opts.tol && stayed {
                return Ok(polished);
            }
            solve_svt_hopm(
                a,
                &coarse.blocks,
                HopmOptions {
                    tol: opts.tol,
                    maxit: opts.maxit,
                },
            )
        })
        .collect();
    let saddles: Vec<Result<SingularTuple>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let x0 = BlockVector::new(per_block.iter().map(|b| b[s].clone()).collect());
            polish_svt_newton(a, &x0, opts.tol, zeigen::NEWTON_STARTS_MAXIT)
        })
        .collect();
    let mut unconverged = 0;
    let mut tuples: Vec<SingularTuple> = Vec::new();
    let runs = found
        .into_iter()
        .map(|r| (r, true))
        .chain(saddles.into_iter().map(|r| (r, false)));
    for (r, counted) in runs {
        let t = r?;
        if t.residual > opts.tol {
            if counted {
                unconverged += 1;
            }
            continue;
        }
        let t = canonicalize(a, &t)?;
        let dup = tuples.iter_mut().find(|q| {
            (q.sigma.abs() - t.sigma.abs()).abs() <= 1e-8 * q.sigma.abs().max(1.0)
                && q.blocks
                    .blocks()
                    .iter()
                    .zip(t.blocks.blocks())
                    .all(|(u, v)| linalg::angular_distance(u, v, true) < opts.dedup_angle)
        });
        match dup {
            Some(q) => {
                if t.residual < q.residual {
                    *q = t;
                }
            }
            None => tuples.push(t),
        }
    }
    tuples.sort_by(|p, q| q.sigma.total_cmp(&p.sigma));
    Ok(SvtMultistartResult {
        tuples,
        unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{random_tensor, segre};

    fn e(i: usize) -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[i] = 1.0;
        v
    }

    fn rank_one() -> DenseTensor {
        segre(&BlockVector::new(vec![e(0); 3])).unwrap()
    }

    #[test]
    fn g_value_examples() {
        let a = rank_one();
        assert_eq!(g_value(&a, &BlockVector::new(vec![e(0); 3])).unwrap(), 1.0);
        assert_eq!(
            g_value(&a, &BlockVector::new(vec![e(1), e(0), e(0)])).unwrap(),
            0.0
        );
        let b = random_tensor(&[2, 2, 2], 3).unwrap();
        let x = BlockVector::new(vec![vec![0.6, 0.8], vec![0.0, 1.0], vec![0.8, -0.6]]);
        let sum = g_value(&a.add_scaled(1.0, &b).unwrap(), &x).unwrap();
        let parts = g_value(&a, &x).unwrap() + g_value(&b, &x).unwrap();
        assert!((sum - parts).abs() < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let a = rank_one();
        let r = svt_residual(&a, &BlockVector::new(vec![e(0); 3])).unwrap();
        assert!(r.blocks().iter().all(|b| b.iter().all(|&v| v == 0.0)));
        let r = svt_residual(&a, &BlockVector::new(vec![e(1); 3])).unwrap();
        assert!(r.blocks().iter().all(|b| b.iter().all(|&v| v == 0.0)));
        let r = svt_residual(&a, &BlockVector::new(vec![e(1), e(0), e(0)])).unwrap();
        assert_eq!(r.block(0), &[1.0, 0.0][..]);
    }

    #[test]
    fn hopm_examples() {
        let a = rank_one();
        let x0 = BlockVector::new(vec![vec![0.6, 0.8]; 3]);
        let t = solve_svt_hopm(&a, &x0, HopmOptions::default()).unwrap();
        assert!((t.sigma - 1.0).abs() < 1e-12);
        assert!(t.residual <= 1e-12);
        for b in t.blocks.blocks() {
            assert!((b[0] - 1.0).abs() < 1e-12);
        }
        let fixed = solve_svt_hopm(
            &a,
            &BlockVector::new(vec![e(0); 3]),
            HopmOptions {
                maxit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fixed.residual, 0.0);
    }

    #[test]
    fn hopm_restarts_after_zero_contraction() {
        // (e2, e2, e2) against e1⊗e1⊗e1 gives a zero contraction in slot 0.
        let a = rank_one();
        let t = solve_svt_hopm(
            &a,
            &BlockVector::new(vec![e(1), e(1), e(0)]),
            HopmOptions::default(),
        )
        .unwrap();
        assert!(t.residual <= 1e-12);
    }

    #[test]
    fn hopm_random_self_consistent() {
        let a = random_tensor(&[2, 2, 2], 17).unwrap();
        let x0 = BlockVector::new(vec![vec![0.6, 0.8]; 3]);
        let t = solve_svt_hopm(&a, &x0, HopmOptions::default()).unwrap();
        assert!(t.residual <= 1e-12);
        assert!((t.sigma - g_value(&a, &t.blocks).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn hessian_examples() {
        let a = rank_one();
        let h = riem_hessian_svt(&a, &BlockVector::new(vec![e(0); 3])).unwrap();
        assert_eq!(h, -DMatrix::<f64>::identity(3, 3));
        let z = riem_hessian_svt(&a, &BlockVector::new(vec![e(1); 3])).unwrap();
        assert_eq!(z, DMatrix::<f64>::zeros(3, 3));
    }

    #[test]
    fn certify_examples() {
        let a = rank_one();
        let r = certify_svt(&a, &BlockVector::new(vec![e(0); 3]), 1e-8).unwrap();
        assert!(r.nondegenerate);
        assert_eq!(r.hess_min_abs_eig, Some(1.0));
        let z = certify_svt(&a, &BlockVector::new(vec![e(1); 3]), 1e-8).unwrap();
        assert!(!z.nondegenerate);
        assert!(matches!(
            certify_svt(&a, &BlockVector::new(vec![e(1), e(0), e(0)]), 1e-8),
            Err(TensorError::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn canonical_sign_tracks_sigma() {
        let a = rank_one();
        let t = SingularTuple {
            sigma: -1.0,
            blocks: BlockVector::new(vec![vec![-1.0, 0.0], e(0), e(0)]),
            residual: 0.0,
        };
        let c = canonicalize(&a, &t).unwrap();
        assert_eq!(c.sigma, 1.0);
        assert_eq!(c.blocks.block(0), &[1.0, 0.0][..]);
    }

    #[test]
    fn multistart_dedups_rank_one() {
        let a = rank_one();
        let res = multistart_svt(&a, SvtMultistartOptions::default()).unwrap();
        let nonzero: Vec<_> = res.tuples.iter().filter(|t| t.sigma.abs() > 1e-6).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].sigma - 1.0).abs() < 1e-12);
    }
}
