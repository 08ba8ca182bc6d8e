//! Brute-force oracles at n = 2 and Monte Carlo censuses of eigen-objects
//! of Gaussian tensors.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::heigen::{self, contraction_forms};
use crate::poly::{BinaryForm, C64};
use crate::svt::{self, SvtMultistartOptions};
use crate::tensor::{random_symmetric_with, random_tensor_with, SymmetricTensor};
use crate::zeigen::{self, ZEigenPair};

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_SWEEP_TOL: f64 = 1e-14;

/// A Z-eigenpair found by the sweep with its angle in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPair {
    pub theta: f64,
    pub pair: ZEigenPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sorted by angle.
    pub pairs: Vec<SweepPair>,
    /// Sign-change brackets plus touching minima that were refined.
    pub brackets: usize,
    pub iterations: usize,
}

struct Sweeper<'a> {
    a: &'a SymmetricTensor,
    k: f64,
}

impl Sweeper<'_> {
    fn point(theta: f64) -> ([f64; 2], [f64; 2]) {
        let (s, c) = theta.sin_cos();
        ([c, s], [-s, c])
    }

    /// `g(θ) = ⟨A x^{k−1}, x⊥⟩`.
    fn g(&self, theta: f64) -> f64 {
        let (x, xp) = Self::point(theta);
        let ax = self.a.contract_all_but_one(&x).expect("n = 2");
        ax[0] * xp[0] + ax[1] * xp[1]
    }

    /// `g'(θ) = (k−1) x⊥ᵀ (A x^{k−2}) x⊥ − λ`.
    fn dg(&self, theta: f64) -> f64 {
        let (x, xp) = Self::point(theta);
        let m = self.a.contract_all_but_two(&x).expect("n = 2");
        let lambda = self.a.form_value(&x).expect("n = 2");
        let quad =
            m[(0, 0)] * xp[0] * xp[0] + 2.0 * m[(0, 1)] * xp[0] * xp[1] + m[(1, 1)] * xp[1] * xp[1];
        (self.k - 1.0) * quad - lambda
    }

    /// Safeguarded Newton inside a sign-change bracket.
    fn refine(&self, mut lo: f64, mut hi: f64, thr: f64, iters: &mut usize) -> f64 {
        let mut g_lo = self.g(lo);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            *iters += 1;
            let gt = self.g(t);
            if gt.abs() <= thr {
                return t;
            }
            if (gt < 0.0) == (g_lo < 0.0) {
                lo = t;
                g_lo = gt;
            } else {
                hi = t;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
            let d = self.dg(t);
            let newton = t - gt / d;
            t = if d != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        t
    }

    /// Golden-section minimization of `|g|` on `[lo, hi]`.
    fn touch_min(&self, mut lo: f64, mut hi: f64, iters: &mut usize) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - r * (hi - lo);
        let mut d = lo + r * (hi - lo);
        let (mut fc, mut fd) = (self.g(c).abs(), self.g(d).abs());
        for _ in 0..120 {
            *iters += 1;
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - r * (hi - lo);
                fc = self.g(c).abs();
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + r * (hi - lo);
                fd = self.g(d).abs();
            }
            if hi - lo <= 1e-15 {
                break;
            }
        }
        if fc < fd {
            c
        } else {
            d
        }
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// All real Z-eigenpairs of a symmetric `n = 2` tensor by sweeping the
/// circle.
///
/// Sign changes of `g` on a uniform grid are refined by bisection with
/// Newton steps; grid-local minima of `|g|` without a sign change are
/// refined by golden section and kept when they reach the threshold, which
/// catches roots of even multiplicity. Roots are found to
/// `|g| ≤ tol · max(1, ‖A‖)`.
pub fn sweep_z_n2(a: &SymmetricTensor, grid: usize, tol: f64) -> Result<SweepResult> {
    if a.n() != 2 {
        return Err(TensorError::RequiresN2(a.n()));
    }
    if !(tol > 0.0) {
        return Err(TensorError::InvalidTolerance(tol));
    }
    if grid < 8 {
        return Err(TensorError::InvalidInput(format!("grid {grid} is below 8")));
    }
    let sw = Sweeper {
        a,
        k: a.order() as f64,
    };
    let thr = tol * a.hs_norm().max(1.0);
    let step = TAU / grid as f64;
    let thetas: Vec<f64> = (0..grid).map(|i| i as f64 * step).collect();
    let gs: Vec<f64> = thetas.iter().map(|&t| sw.g(t)).collect();
    let mut roots: Vec<f64> = Vec::new();
    let mut brackets = 0;
    let mut iterations = 0;
    for i in 0..grid {
        let j = (i + 1) % grid;
        let hi = thetas[i] + step;
        let (gi, gj) = (gs[i], gs[j]);
        if gi == 0.0 {
            roots.push(thetas[i]);
            continue;
        }
        if gj != 0.0 && (gi < 0.0) != (gj < 0.0) {
            brackets += 1;
            roots.push(sw.refine(thetas[i], hi, thr, &mut iterations));
            continue;
        }
        let p = (i + grid - 1) % grid;
        let gp = gs[p];
        let touching = gi.abs() <= gp.abs()
            && gi.abs() <= gj.abs()
            && (gp < 0.0) == (gi < 0.0)
            && (gj < 0.0) == (gi < 0.0)
            && gp != 0.0
            && gj != 0.0;
        if touching {
            let t = sw.touch_min(thetas[i] - step, hi, &mut iterations);
            if sw.g(t).abs() <= thr {
                brackets += 1;
                roots.push(t);
            }
        }
    }
    let mut angles: Vec<f64> = roots.into_iter().map(|t| t.rem_euclid(TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for t in angles {
        if !distinct.iter().any(|&d| circular_gap(d, t) < 1e-9) {
            distinct.push(t);
        }
    }
    let pairs = distinct
        .into_iter()
        .map(|theta| {
            let (x, _) = Sweeper::point(theta);
            let lambda = a.form_value(&x)?;
            let residual = crate::tensor::norm(&zeigen::z_residual(a, &x)?);
            Ok(SweepPair {
                theta,
                pair: ZEigenPair {
                    lambda,
                    x: x.to_vec(),
                    residual,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        pairs,
        brackets,
        iterations,
    })
}

/// Projective roots of `x2 (A x^{k−1})_1 − x1 (A x^{k−1})_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECount {
    /// Distinct complex eigen-lines.
    pub distinct: usize,
    pub multiplicities: Vec<usize>,
    /// The line `(1 : 0)` is among the roots.
    pub at_infinity: bool,
}

impl ECount {
    pub fn with_multiplicity(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

/// Generic number of E-eigen-lines, `((k−1)^n − 1)/(k−2)`.
pub fn generic_e_count(n: usize, k: usize) -> usize {
    ((k - 1).pow(n as u32) - 1) / (k - 2)
}

/// Generic number of H-eigenvalues, `n (k−1)^{n−1}`.
pub fn generic_h_count(n: usize, k: usize) -> usize {
    n * (k - 1).pow(n as u32 - 1)
}

/// Complex E-eigen-lines of a symmetric `n = 2` tensor, counted as roots of
/// a binary form of degree k.
pub fn e_count_n2(a: &SymmetricTensor) -> Result<ECount> {
    let forms = contraction_forms(a.as_dense())?;
    let k = a.order();
    let coeffs: Vec<C64> = (0..=k)
        .map(|j| {
            let from_first = if j >= 1 { forms[0][j - 1] } else { 0.0 };
            let from_second = if j < k { forms[1][j] } else { 0.0 };
            C64::new(from_first - from_second, 0.0)
        })
        .collect();
    let p = BinaryForm { coeffs };
    if p.max_abs() <= 1e-14 * a.hs_norm() || p.max_abs() == 0.0 {
        return Err(TensorError::IdenticallyZero);
    }
    let roots = p.projective_roots(1e-12);
    Ok(ECount {
        distinct: roots.len(),
        multiplicities: roots.iter().map(|r| r.2).collect(),
        at_infinity: roots.iter().any(|r| r.1.norm() == 0.0),
    })
}

/// Generic number of complex singular vector tuples of a tensor of format
/// `dims`: the coefficient of `Π t_i^{n_i−1}` in
/// `Π_i (T_i^{n_i} − t_i^{n_i}) / (T_i − t_i)` with `T_i = Σ_{j≠i} t_j`.
pub fn generic_svt_count(dims: &[usize]) -> u128 {
    let target: Vec<u32> = dims.iter().map(|&n| n as u32 - 1).collect();
    let d = dims.len();
    type Poly = BTreeMap<Vec<u32>, u128>;
    let fits = |e: &[u32]| e.iter().zip(&target).all(|(a, b)| a <= b);
    let mul = |p: &Poly, q: &Poly| -> Poly {
        let mut out = Poly::new();
        for (ea, ca) in p {
            for (eb, cb) in q {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if fits(&e) {
                    *out.entry(e).or_insert(0) += ca * cb;
                }
            }
        }
        out
    };
    let monomial = |i: usize, pow: u32| -> Poly {
        let mut e = vec![0; d];
        e[i] = pow;
        Poly::from([(e, 1)])
    };
    let one = Poly::from([(vec![0; d], 1)]);
    let mut total = one.clone();
    for i in 0..d {
        let others: Poly = (0..d)
            .filter(|&j| j != i)
            .map(|j| (monomial(j, 1).into_keys().next().unwrap(), 1))
            .collect();
        let mut factor = Poly::new();
        let mut others_pow = one.clone();
        for a in 0..dims[i] as u32 {
            for (e, c) in mul(&others_pow, &monomial(i, target[i] - a)) {
                *factor.entry(e).or_insert(0) += c;
            }
            others_pow = mul(&others_pow, &others);
        }
        total = mul(&total, &factor);
    }
    total.get(&target).copied().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensusKind {
    Z,
    Svt,
    H,
}

/// Census configuration. `dims` is `[n; k]` for `z` and `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub kind: CensusKind,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Residual threshold for an eigen-object to enter the statistics.
    pub tol: f64,
    /// Relative threshold of the nondegeneracy verdicts.
    pub cert_tol: f64,
    pub grid: usize,
    pub maxit: usize,
    /// Multistart count for `svt`; `None` uses the solver default.
    pub starts: Option<usize>,
}

impl CensusConfig {
    pub fn new(kind: CensusKind, dims: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            dims,
            trials,
            seed,
            tol: 1e-10,
            cert_tol: zeigen::DEFAULT_CERT_TOL,
            grid: DEFAULT_GRID,
            maxit: 10_000,
            starts: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.tol, self.cert_tol] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(TensorError::InvalidTolerance(t));
            }
        }
        let k = self.dims.len();
        if k < 3 {
            return Err(TensorError::OrderTooSmall { min: 3, got: k });
        }
        if let Some(i) = self.dims.iter().position(|&n| n == 0) {
            return Err(TensorError::ZeroDimension { index: i });
        }
        match self.kind {
            CensusKind::Z | CensusKind::H => {
                if self.dims.iter().any(|&n| n != self.dims[0]) {
                    return Err(TensorError::UnequalDims(self.dims.clone()));
                }
                if self.dims[0] != 2 {
                    return Err(TensorError::RequiresN2(self.dims[0]));
                }
            }
            CensusKind::Svt => {
                if self.dims.iter().any(|&n| n > 3) || k > 3 {
                    return Err(TensorError::InvalidInput(format!(
                        "svt census supports formats up to 3x3x3, got {:?}",
                        self.dims
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generic complex count the real counts are bounded by.
    pub fn reference_count(&self) -> usize {
        let k = self.dims.len();
        match self.kind {
            CensusKind::Z => generic_e_count(2, k),
            CensusKind::H => generic_h_count(2, k),
            CensusKind::Svt => generic_svt_count(&self.dims) as usize,
        }
    }
}

/// One trial of a census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    /// Eigen-objects that passed the residual threshold and were certified.
    pub certified: usize,
    pub degenerate: usize,
    pub unconverged: usize,
    /// Real Z-eigen-lines with λ ≠ 0, real singular tuples up to signs, or
    /// real H-eigenvalues.
    pub real_count: usize,
    /// Distinct complex E-eigen-lines (z) or H-eigenvalues with multiplicity
    /// (h).
    pub complex_count: Option<usize>,
    /// The complex count equals the generic reference.
    pub complex_generic: Option<bool>,
    /// Characteristic polynomial degree (h).
    pub charpoly_degree: Option<usize>,
    /// Simple characteristic roots among the H-eigenvalues.
    pub simple_roots: Option<usize>,
    pub bound_ok: bool,
}

/// Joint counts of "simple characteristic root" and "nondegenerate".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub simple_nondegenerate: usize,
    pub simple_degenerate: usize,
    pub multiple_nondegenerate: usize,
    pub multiple_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub config: CensusConfig,
    pub trials: usize,
    pub degenerate_trials: usize,
    pub degenerate_fraction: f64,
    pub unconverged_total: usize,
    pub max_real_count: usize,
    pub reference_count: usize,
    /// Trials whose complex count equals the reference.
    pub generic_trials: Option<usize>,
    pub real_count_histogram: BTreeMap<usize, usize>,
    pub bound_violations: usize,
    pub co_occurrence: Option<CoOccurrence>,
    /// Real counts never exceed complex counts or the reference.
    pub invariants_ok: bool,
    pub rows: Vec<TrialRow>,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn z_trial(cfg: &CensusConfig, trial: usize) -> Result<TrialRow> {
    let k = cfg.dims.len();
    let a = random_symmetric_with(2, k, &mut trial_rng(cfg.seed, trial))?;
    let sweep = sweep_z_n2(&a, cfg.grid, DEFAULT_SWEEP_TOL)?;
    let mut row = TrialRow {
        trial,
        certified: 0,
        degenerate: 0,
        unconverged: 0,
        real_count: 0,
        complex_count: None,
        complex_generic: None,
        charpoly_degree: None,
        simple_roots: None,
        bound_ok: true,
    };
    let mut pairs = Vec::new();
    for sp in sweep.pairs {
        if sp.pair.residual > cfg.tol {
            row.unconverged += 1;
            continue;
        }
        let cert = zeigen::certify_z(&a, &sp.pair.x, cfg.cert_tol)?;
        row.certified += 1;
        if !cert.nondegenerate {
            row.degenerate += 1;
        }
        pairs.push(sp.pair);
    }
    row.real_count = zeigen::count_lines(&pairs, 1e-8, Some(cfg.cert_tol));
    match e_count_n2(&a) {
        Ok(e) => {
            row.complex_count = Some(e.distinct);
            row.complex_generic = Some(e.distinct == generic_e_count(2, k));
            row.bound_ok = row.real_count <= e.distinct;
        }
        Err(TensorError::IdenticallyZero) => row.complex_generic = Some(false),
        Err(e) => return Err(e),
    }
    row.bound_ok &= row.real_count <= generic_e_count(2, k);
    Ok(row)
}

fn h_trial(cfg: &CensusConfig, trial: usize, co: &mut CoOccurrence) -> Result<TrialRow> {
    let k = cfg.dims.len();
    let a = random_tensor_with(&cfg.dims, &mut trial_rng(cfg.seed, trial))?;
    let sol = heigen::solve_h_n2(&a)?;
    let total = sol.total_multiplicity();
    let mut row = TrialRow {
        trial,
        certified: 0,
        degenerate: 0,
        unconverged: 0,
        real_count: 0,
        complex_count: Some(total),
        complex_generic: Some(total == generic_h_count(2, k) && !sol.deficient),
        charpoly_degree: Some(sol.charpoly.degree),
        simple_roots: Some(sol.eigenvalues.iter().filter(|e| e.1 == 1).count()),
        bound_ok: true,
    };
    for p in &sol.pairs {
        if p.residual > cfg.tol {
            row.unconverged += 1;
            continue;
        }
        let nondegenerate = heigen::h_nondegenerate(&a, &p.x, p.lambda, cfg.cert_tol)?;
        let simple = p.multiplicity == 1 && !p.positive_dimensional;
        match (simple, nondegenerate) {
            (true, true) => co.simple_nondegenerate += 1,
            (true, false) => co.simple_degenerate += 1,
            (false, true) => co.multiple_nondegenerate += 1,
            (false, false) => co.multiple_degenerate += 1,
        }
        row.certified += 1;
        // merged roots are non-generic input; no verdict is asserted on them
        if simple && !nondegenerate {
            row.degenerate += 1;
        }
    }
    row.real_count = sol
        .eigenvalues
        .iter()
        .filter(|(z, _)| z.im.abs() <= 1e-10 * z.norm().max(1.0))
        .map(|e| e.1)
        .sum();
    row.bound_ok = row.real_count <= total && total <= generic_h_count(2, k);
    Ok(row)
}

fn svt_trial(cfg: &CensusConfig, trial: usize) -> Result<TrialRow> {
    let a = random_tensor_with(&cfg.dims, &mut trial_rng(cfg.seed, trial))?;
    let found = svt::multistart_svt(
        &a,
        SvtMultistartOptions {
            starts: cfg.starts,
            tol: cfg.tol.min(1e-12),
            maxit: cfg.maxit,
            ..SvtMultistartOptions::default()
        },
    )?;
    let mut row = TrialRow {
        trial,
        certified: 0,
        degenerate: 0,
        unconverged: found.unconverged,
        real_count: 0,
        complex_count: None,
        complex_generic: None,
        charpoly_degree: None,
        simple_roots: None,
        bound_ok: true,
    };
    for t in &found.tuples {
        if t.residual > cfg.tol {
            row.unconverged += 1;
            continue;
        }
        let cert = svt::certify_svt(&a, &t.blocks, cfg.cert_tol)?;
        row.certified += 1;
        if !cert.nondegenerate {
            row.degenerate += 1;
        }
    }
    row.real_count = row.certified;
    row.bound_ok = row.real_count <= cfg.reference_count();
    Ok(row)
}

/// Samples `trials` Gaussian tensors, enumerates their eigen-objects with
/// the oracle or solver for `kind`, certifies each and aggregates.
///
/// Trial `i` draws from the ChaCha20 stream `i` of `seed`, so the report
/// does not depend on scheduling.
pub fn run_census(cfg: &CensusConfig) -> Result<CensusReport> {
    cfg.validate()?;
    let results: Vec<Result<(TrialRow, CoOccurrence)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut co = CoOccurrence::default();
            let row = match cfg.kind {
                CensusKind::Z => z_trial(cfg, trial)?,
                CensusKind::H => h_trial(cfg, trial, &mut co)?,
                CensusKind::Svt => svt_trial(cfg, trial)?,
            };
            Ok((row, co))
        })
        .collect();
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut co = CoOccurrence::default();
    for r in results {
        let (row, c) = r?;
        co.simple_nondegenerate += c.simple_nondegenerate;
        co.simple_degenerate += c.simple_degenerate;
        co.multiple_nondegenerate += c.multiple_nondegenerate;
        co.multiple_degenerate += c.multiple_degenerate;
        rows.push(row);
    }
    let degenerate_trials = rows.iter().filter(|r| r.degenerate > 0).count();
    let mut histogram = BTreeMap::new();
    for r in &rows {
        *histogram.entry(r.real_count).or_insert(0) += 1;
    }
    let bound_violations = rows.iter().filter(|r| !r.bound_ok).count();
    let generic_trials = match cfg.kind {
        CensusKind::Svt => None,
        _ => Some(
            rows.iter()
                .filter(|r| r.complex_generic == Some(true))
                .count(),
        ),
    };
    Ok(CensusReport {
        config: cfg.clone(),
        trials: cfg.trials,
        degenerate_trials,
        degenerate_fraction: if cfg.trials == 0 {
            0.0
        } else {
            degenerate_trials as f64 / cfg.trials as f64
        },
        unconverged_total: rows.iter().map(|r| r.unconverged).sum(),
        max_real_count: rows.iter().map(|r| r.real_count).max().unwrap_or(0),
        reference_count: cfg.reference_count(),
        generic_trials,
        real_count_histogram: histogram,
        bound_violations,
        co_occurrence: (cfg.kind == CensusKind::H).then_some(co),
        invariants_ok: bound_violations == 0,
        rows,
    })
}
