//! Dense tensor storage and the multilinear kernels shared by every solver.
//!
//! Entries are stored row-major (last index fastest). All kernels are
//! written against flat slices so they can run over `f64` or complex
//! scalars through the [`Scalar`] trait.

use std::ops::{Add, AddAssign, Mul};

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TensorError};

/// Minimal ring interface needed by the contraction kernels.
pub trait Scalar: Copy + Add<Output = Self> + Mul<Output = Self> + AddAssign {
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
}

impl Scalar for Complex<f64> {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex::new(v, 0.0)
    }
}

/// Contracts `mode` of a row-major array against `v`, removing that mode.
fn contract_mode<T: Scalar>(dims: &[usize], data: &[T], mode: usize, v: &[T]) -> Vec<T> {
    let outer: usize = dims[..mode].iter().product();
    let n = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![T::zero(); outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (j, &vj) in v.iter().enumerate() {
            let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s * vj;
            }
        }
    }
    out
}

/// Applies `m` along `mode`: out[.., i, ..] = Σ_j m[i, j] data[.., j, ..].
fn mode_product(dims: &[usize], data: &[f64], mode: usize, m: &DMatrix<f64>) -> Vec<f64> {
    let outer: usize = dims[..mode].iter().product();
    let n = dims[mode];
    let rows = m.nrows();
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for i in 0..rows {
            let dst = (o * rows + i) * inner;
            for j in 0..n {
                let mij = m[(i, j)];
                if mij == 0.0 {
                    continue;
                }
                let src = (o * n + j) * inner;
                for t in 0..inner {
                    out[dst + t] += mij * data[src + t];
                }
            }
        }
    }
    out
}

/// All permutations of `0..k` in lexicographic order.
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// An order-k real tensor with explicit dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    entries: Vec<f64>,
}

impl DenseTensor {
    pub const MIN_ORDER: usize = 3;

    pub fn new(dims: Vec<usize>, entries: Vec<f64>) -> Result<Self> {
        if dims.len() < Self::MIN_ORDER {
            return Err(TensorError::OrderTooSmall {
                min: Self::MIN_ORDER,
                got: dims.len(),
            });
        }
        if let Some(index) = dims.iter().position(|&d| d == 0) {
            return Err(TensorError::ZeroDimension { index });
        }
        let expected: usize = dims.iter().product();
        if entries.len() != expected {
            return Err(TensorError::LengthMismatch {
                expected,
                got: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { index });
        }
        Ok(Self { dims, entries })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn has_equal_dims(&self) -> bool {
        self.dims.iter().all(|&d| d == self.dims[0])
    }

    fn offset(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = flat % d;
            flat /= d;
        }
    }

    /// Entry at a multi-index (0-based). Panics on out-of-range indices.
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.order());
        self.entries[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        assert_eq!(index.len(), self.order());
        let off = self.offset(index);
        self.entries[off] = value;
    }

    fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(TensorError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Σ a_{i_1…i_k} b_{i_1…i_k}.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Hilbert–Schmidt norm.
    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            entries: self.entries.iter().map(|a| alpha * a).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_dims(other)?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    fn check_blocks(&self, x: &BlockVector) -> Result<()> {
        if x.len() != self.order() {
            return Err(TensorError::DimensionMismatch(format!(
                "block vector has {} blocks, tensor has order {}",
                x.len(),
                self.order()
            )));
        }
        for (i, (b, &d)) in x.blocks().iter().zip(&self.dims).enumerate() {
            if b.len() != d {
                return Err(TensorError::DimensionMismatch(format!(
                    "block {i} has length {}, expected {d}",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.order() {
            return Err(TensorError::SlotOutOfRange {
                slot,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Contracts every slot not listed in `keep` against the matching vector
    /// in `vecs`. The kept slots survive in ascending order.
    pub(crate) fn contract_except<T: Scalar>(&self, vecs: &[&[T]], keep: &[usize]) -> Vec<T> {
        let mut dims = self.dims.clone();
        let mut data: Vec<T> = self.entries.iter().map(|&a| T::from_f64(a)).collect();
        for slot in (0..self.order()).rev() {
            if keep.contains(&slot) {
                continue;
            }
            data = contract_mode(&dims, &data, slot, vecs[slot]);
            dims.remove(slot);
        }
        data
    }

    /// Contracts `x_j` into every slot `j != slot`.
    pub fn contract_leave_slot(&self, x: &BlockVector, slot: usize) -> Result<Vec<f64>> {
        self.check_slot(slot)?;
        self.check_blocks(x)?;
        let vecs: Vec<&[f64]> = x.blocks().iter().map(Vec::as_slice).collect();
        Ok(self.contract_except(&vecs, &[slot]))
    }

    /// Contracts every slot except `i` and `j`; rows follow slot `i`.
    pub fn contract_leave_two_slots(
        &self,
        x: &BlockVector,
        i: usize,
        j: usize,
    ) -> Result<DMatrix<f64>> {
        self.check_slot(i)?;
        self.check_slot(j)?;
        if i == j {
            return Err(TensorError::RepeatedSlot(i));
        }
        self.check_blocks(x)?;
        let vecs: Vec<&[f64]> = x.blocks().iter().map(Vec::as_slice).collect();
        let (lo, hi) = (i.min(j), i.max(j));
        let flat = self.contract_except(&vecs, &[lo, hi]);
        let m = DMatrix::from_row_slice(self.dims[lo], self.dims[hi], &flat);
        Ok(if i < j { m } else { m.transpose() })
    }

    /// Largest entrywise deviation from index-permutation symmetry.
    /// Returns `None` when the dims differ.
    pub fn symmetry_deviation(&self) -> Option<f64> {
        if !self.has_equal_dims() {
            return None;
        }
        let k = self.order();
        let perms = permutations(k);
        let mut idx = vec![0; k];
        let mut permuted = vec![0; k];
        let mut worst: f64 = 0.0;
        for flat in 0..self.entries.len() {
            self.unravel(flat, &mut idx);
            for p in &perms {
                for (t, &s) in p.iter().enumerate() {
                    permuted[t] = idx[s];
                }
                let d = (self.entries[flat] - self.entries[self.offset(&permuted)]).abs();
                worst = worst.max(d);
            }
        }
        Some(worst)
    }

    /// Average over all k! index permutations.
    pub fn symmetrize(&self) -> Result<SymmetricTensor> {
        if !self.has_equal_dims() {
            return Err(TensorError::UnequalDims(self.dims.clone()));
        }
        let k = self.order();
        let perms = permutations(k);
        let scale = 1.0 / perms.len() as f64;
        let mut idx = vec![0; k];
        let mut permuted = vec![0; k];
        let mut out = vec![0.0; self.entries.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            self.unravel(flat, &mut idx);
            let mut acc = 0.0;
            for p in &perms {
                for (t, &s) in p.iter().enumerate() {
                    permuted[t] = idx[s];
                }
                acc += self.entries[self.offset(&permuted)];
            }
            *slot = acc * scale;
        }
        Ok(SymmetricTensor {
            base: DenseTensor {
                dims: self.dims.clone(),
                entries: out,
            },
        })
    }
}

/// How a [`SymmetricTensor`] treats its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetryMode {
    /// Reject input whose symmetry deviation exceeds the tolerance.
    Verify { tol: f64 },
    /// Average over index permutations.
    Symmetrize,
}

impl SymmetryMode {
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn verify() -> Self {
        SymmetryMode::Verify {
            tol: Self::DEFAULT_TOL,
        }
    }
}

/// A dense tensor with all dims equal to `n` and entries invariant under
/// index permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    base: DenseTensor,
}

impl SymmetricTensor {
    pub fn from_dense(base: DenseTensor, mode: SymmetryMode) -> Result<Self> {
        match mode {
            SymmetryMode::Symmetrize => base.symmetrize(),
            SymmetryMode::Verify { tol } => {
                let deviation = base
                    .symmetry_deviation()
                    .ok_or_else(|| TensorError::UnequalDims(base.dims.clone()))?;
                if deviation > tol {
                    return Err(TensorError::NotSymmetric { deviation });
                }
                Ok(Self { base })
            }
        }
    }

    /// Order-k diagonal tensor with the given diagonal.
    pub fn diagonal(diag: &[f64], k: usize) -> Result<Self> {
        let n = diag.len();
        let mut base = DenseTensor::zeros(vec![n; k])?;
        for (i, &d) in diag.iter().enumerate() {
            base.set(&vec![i; k], d);
        }
        Ok(Self { base })
    }

    pub fn n(&self) -> usize {
        self.base.dims[0]
    }

    pub fn order(&self) -> usize {
        self.base.order()
    }

    pub fn as_dense(&self) -> &DenseTensor {
        &self.base
    }

    pub fn into_dense(self) -> DenseTensor {
        self.base
    }

    pub fn hs_norm(&self) -> f64 {
        self.base.hs_norm()
    }

    pub fn inner(&self, other: &SymmetricTensor) -> Result<f64> {
        self.base.inner(&other.base)
    }

    /// Linear combination of two symmetric tensors (stays symmetric).
    pub fn add_scaled(&self, alpha: f64, other: &SymmetricTensor) -> Result<SymmetricTensor> {
        Ok(Self {
            base: self.base.add_scaled(alpha, &other.base)?,
        })
    }

    pub fn scaled(&self, alpha: f64) -> SymmetricTensor {
        Self {
            base: self.base.scaled(alpha),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(TensorError::DimensionMismatch(format!(
                "vector length {len}, tensor dimension {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// Contracts `x` into the trailing `m` slots.
    fn contract_tail<T: Scalar>(&self, x: &[T], m: usize) -> Vec<T> {
        let mut dims = self.base.dims.clone();
        let mut data: Vec<T> = self.base.entries.iter().map(|&a| T::from_f64(a)).collect();
        for _ in 0..m {
            let mode = dims.len() - 1;
            data = contract_mode(&dims, &data, mode, x);
            dims.pop();
        }
        data
    }

    /// `A x^{k-1}`: the vector with entries Σ a_{i i_2…i_k} x_{i_2}…x_{i_k}.
    pub fn contract_all_but_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(self.contract_tail(x, self.order() - 1))
    }

    /// `A x^{k-2}` as an n×n matrix.
    pub fn contract_all_but_two(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x.len())?;
        let n = self.n();
        let flat = self.contract_tail(x, self.order() - 2);
        Ok(DMatrix::from_row_slice(n, n, &flat))
    }

    /// Complex `A x^{k-1}`.
    pub fn contract_all_but_one_complex(&self, x: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
        self.check_len(x.len())?;
        Ok(self.contract_tail(x, self.order() - 1))
    }

    /// ⟨A, x^{⊗k}⟩ computed as xᵀ(A x^{k-1}).
    pub fn form_value(&self, x: &[f64]) -> Result<f64> {
        let ax = self.contract_all_but_one(x)?;
        Ok(dot(&ax, x))
    }

    /// The orthogonal action (U·A)_{i_1…i_k} = Σ u_{i_1 j_1}…u_{i_k j_k} a_{j_1…j_k}.
    pub fn orth_act(&self, u: &OrthogonalMatrix) -> Result<SymmetricTensor> {
        if u.n() != self.n() {
            return Err(TensorError::DimensionMismatch(format!(
                "orthogonal matrix is {}x{}, tensor dimension {}",
                u.n(),
                u.n(),
                self.n()
            )));
        }
        let dims = self.base.dims.clone();
        let mut data = self.base.entries.clone();
        for mode in 0..dims.len() {
            data = mode_product(&dims, &data, mode, u.matrix());
        }
        Ok(Self {
            base: DenseTensor {
                dims,
                entries: data,
            },
        })
    }
}

/// The Veronese map x ↦ x^{⊗k}.
pub fn veronese(x: &[f64], k: usize) -> Result<SymmetricTensor> {
    if k < DenseTensor::MIN_ORDER {
        return Err(TensorError::OrderTooSmall {
            min: DenseTensor::MIN_ORDER,
            got: k,
        });
    }
    let blocks = BlockVector::new(vec![x.to_vec(); k]);
    Ok(SymmetricTensor {
        base: segre(&blocks)?,
    })
}

/// The Segre map τ(x) = x_1 ⊗ … ⊗ x_k.
pub fn segre(x: &BlockVector) -> Result<DenseTensor> {
    let dims: Vec<usize> = x.blocks().iter().map(Vec::len).collect();
    let mut entries = vec![1.0];
    for block in x.blocks() {
        entries = entries
            .iter()
            .flat_map(|&e| block.iter().map(move |&b| e * b))
            .collect();
    }
    DenseTensor::new(dims, entries)
}

/// A tuple of real vectors, one per tensor slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    blocks: Vec<Vec<f64>>,
}

impl BlockVector {
    pub const SPHERE_TOL: f64 = 1e-12;

    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.blocks[i]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Every block has unit Euclidean norm within `tol`.
    pub fn on_sphere(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| (norm(b) - 1.0).abs() <= tol)
    }

    /// Normalizes each block; fails on a zero block.
    pub fn normalized(&self) -> Result<BlockVector> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| normalize(b).ok_or(TensorError::ZeroVector))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    /// Euclidean norm of the stacked vector.
    pub fn stacked_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A square matrix with UᵀU = I.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    values: DMatrix<f64>,
}

impl OrthogonalMatrix {
    pub const TOL: f64 = 1e-12;

    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(TensorError::DimensionMismatch(format!(
                "orthogonal matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        let deviation = (values.transpose() * &values - DMatrix::identity(n, n)).amax();
        if deviation > Self::TOL {
            return Err(TensorError::NotOrthogonal { deviation });
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: DMatrix::identity(n, n),
        }
    }

    /// Haar-distributed orthogonal matrix from a seed (QR of a Gaussian
    /// matrix with the sign of R's diagonal absorbed).
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Self::random_with(n, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            values: crate::linalg::random_orthonormal(n, n, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn transpose(&self) -> OrthogonalMatrix {
        Self {
            values: self.values.transpose(),
        }
    }

    pub fn mul(&self, other: &OrthogonalMatrix) -> OrthogonalMatrix {
        Self {
            values: &self.values * &other.values,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.values * nalgebra::DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
}

/// Tensor with independent standard normal entries.
pub fn random_tensor(dims: &[usize], seed: u64) -> Result<DenseTensor> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    random_tensor_with(dims, &mut rng)
}

pub fn random_tensor_with<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<DenseTensor> {
    let len = dims.iter().product();
    let entries = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    DenseTensor::new(dims.to_vec(), entries)
}

/// Symmetrized Gaussian tensor.
pub fn random_symmetric(n: usize, k: usize, seed: u64) -> Result<SymmetricTensor> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    random_symmetric_with(n, k, &mut rng)
}

pub fn random_symmetric_with<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<SymmetricTensor> {
    random_tensor_with(&vec![n; k], rng)?.symmetrize()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: &[f64]) -> Option<Vec<f64>> {
    let nrm = norm(a);
    if nrm == 0.0 || !nrm.is_finite() {
        return None;
    }
    Some(a.iter().map(|v| v / nrm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn e1_cubed() -> SymmetricTensor {
        veronese(&e(2, 0), 3).unwrap()
    }

    #[test]
    fn contract_all_but_one_examples() {
        let a = e1_cubed();
        assert_eq!(
            a.contract_all_but_one(&[0.3, -0.7]).unwrap(),
            vec![0.09, 0.0]
        );
        assert_eq!(a.contract_all_but_one(&e(2, 1)).unwrap(), vec![0.0, 0.0]);
        let d = SymmetricTensor::diagonal(&[1.0, 1.0], 3).unwrap();
        assert_eq!(
            d.contract_all_but_one(&[0.5, -2.0]).unwrap(),
            vec![0.25, 4.0]
        );
        assert!(a.contract_all_but_one(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn contract_all_but_two_examples() {
        let a = e1_cubed();
        let m = a.contract_all_but_two(&e(2, 0)).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let z = a.contract_all_but_two(&e(2, 1)).unwrap();
        assert_eq!(z, DMatrix::zeros(2, 2));
        assert!(a.contract_all_but_two(&[1.0]).is_err());
    }

    #[test]
    fn leave_slot_examples() {
        let a = segre(&BlockVector::new(vec![e(2, 0); 3])).unwrap();
        let x = BlockVector::new(vec![e(2, 0); 3]);
        assert_eq!(a.contract_leave_slot(&x, 0).unwrap(), e(2, 0));
        let y = BlockVector::new(vec![e(2, 1); 3]);
        assert_eq!(a.contract_leave_slot(&y, 0).unwrap(), vec![0.0, 0.0]);
        let z = BlockVector::new(vec![e(2, 1), e(2, 0), e(2, 0)]);
        assert_eq!(a.contract_leave_slot(&z, 0).unwrap(), e(2, 0));
        assert!(matches!(
            a.contract_leave_slot(&x, 3),
            Err(TensorError::SlotOutOfRange { .. })
        ));
        let bad = BlockVector::new(vec![e(3, 0), e(2, 0), e(2, 0)]);
        assert!(a.contract_leave_slot(&bad, 1).is_err());
    }

    #[test]
    fn leave_two_slots_examples() {
        let a = segre(&BlockVector::new(vec![e(2, 0); 3])).unwrap();
        let x = BlockVector::new(vec![e(2, 0); 3]);
        let m = a.contract_leave_two_slots(&x, 0, 1).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let y = BlockVector::new(vec![e(2, 1); 3]);
        assert_eq!(
            a.contract_leave_two_slots(&y, 0, 1).unwrap(),
            DMatrix::zeros(2, 2)
        );
        assert_eq!(
            a.contract_leave_two_slots(&x, 1, 1),
            Err(TensorError::RepeatedSlot(1))
        );
    }

    #[test]
    fn leave_two_slots_orientation() {
        // rows follow the first slot argument, also for rectangular shapes
        let a = random_tensor(&[2, 3, 4], 11).unwrap();
        let x = BlockVector::new(vec![vec![0.6, 0.8], vec![1.0, 0.0, 0.0], vec![0.5; 4]]);
        let m02 = a.contract_leave_two_slots(&x, 0, 2).unwrap();
        let m20 = a.contract_leave_two_slots(&x, 2, 0).unwrap();
        assert_eq!((m02.nrows(), m02.ncols()), (2, 4));
        assert_eq!(m20, m02.transpose());
    }

    #[test]
    fn inner_and_norm() {
        let a = e1_cubed();
        let b = veronese(&e(2, 1), 3).unwrap();
        assert_eq!(a.inner(&a).unwrap(), 1.0);
        assert_eq!(a.inner(&b).unwrap(), 0.0);
        let d = SymmetricTensor::diagonal(&[3.0, 4.0], 3).unwrap();
        assert_eq!(d.hs_norm(), 5.0);
        let c = DenseTensor::zeros(vec![2, 2, 3]).unwrap();
        assert!(a.as_dense().inner(&c).is_err());
    }

    #[test]
    fn veronese_examples() {
        assert_eq!(
            veronese(&e(2, 0), 3).unwrap().as_dense().get(&[0, 0, 0]),
            1.0
        );
        let ones = veronese(&[1.0, 1.0], 3).unwrap();
        assert!(ones.as_dense().entries().iter().all(|&v| v == 1.0));
        assert!(veronese(&[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn segre_examples() {
        let t = segre(&BlockVector::new(vec![e(2, 0), e(2, 1), e(2, 0)])).unwrap();
        for (flat, &v) in t.entries().iter().enumerate() {
            let expected = if flat == 0b010 { 1.0 } else { 0.0 };
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn orth_act_examples() {
        let a = e1_cubed();
        assert_eq!(a.orth_act(&OrthogonalMatrix::identity(2)).unwrap(), a);
        let swap =
            OrthogonalMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(a.orth_act(&swap).unwrap(), veronese(&e(2, 1), 3).unwrap());
        assert!(a.orth_act(&OrthogonalMatrix::identity(3)).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let a = segre(&BlockVector::new(vec![e(2, 0); 3])).unwrap();
        assert_eq!(a.symmetrize().unwrap(), e1_cubed());
        let b = segre(&BlockVector::new(vec![e(2, 0), e(2, 1), e(2, 0)])).unwrap();
        let s = b.symmetrize().unwrap();
        for idx in [[0, 1, 0], [1, 0, 0], [0, 0, 1]] {
            assert!((s.as_dense().get(&idx) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(s.as_dense().get(&[0, 0, 0]), 0.0);
        assert_eq!(s.as_dense().get(&[1, 1, 0]), 0.0);
        let ragged = DenseTensor::zeros(vec![2, 3, 2]).unwrap();
        assert!(matches!(
            ragged.symmetrize(),
            Err(TensorError::UnequalDims(_))
        ));
    }

    #[test]
    fn verify_mode_rejects_asymmetric() {
        let b = segre(&BlockVector::new(vec![e(2, 0), e(2, 1), e(2, 0)])).unwrap();
        assert!(matches!(
            SymmetricTensor::from_dense(b.clone(), SymmetryMode::verify()),
            Err(TensorError::NotSymmetric { .. })
        ));
        assert!(SymmetricTensor::from_dense(b, SymmetryMode::Symmetrize).is_ok());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            DenseTensor::new(vec![2, 2], vec![0.0; 4]),
            Err(TensorError::OrderTooSmall { .. })
        ));
        assert!(matches!(
            DenseTensor::new(vec![2, 2, 2], vec![0.0; 7]),
            Err(TensorError::LengthMismatch {
                expected: 8,
                got: 7
            })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(
            DenseTensor::new(vec![2, 2, 2], v),
            Err(TensorError::NonFinite { index: 3 })
        );
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(
            random_tensor(&[2, 3, 2], 5).unwrap(),
            random_tensor(&[2, 3, 2], 5).unwrap()
        );
        assert_ne!(
            random_tensor(&[2, 3, 2], 5).unwrap(),
            random_tensor(&[2, 3, 2], 6).unwrap()
        );
        let s = random_symmetric(3, 4, 9).unwrap();
        assert!(s.as_dense().symmetry_deviation().unwrap() <= 1e-12);
    }

    #[test]
    fn gaussian_second_moment() {
        // E‖A‖² = 8 for 2×2×2 standard normal entries.
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|s| random_tensor(&[2, 2, 2], s).unwrap().hs_norm().powi(2))
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 8.0).abs() / 8.0 < 0.05, "mean {mean}");
    }

    #[test]
    fn orthogonal_matrix_checks() {
        let q = OrthogonalMatrix::random(4, 3);
        assert!(OrthogonalMatrix::new(q.matrix().clone()).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            OrthogonalMatrix::new(bad),
            Err(TensorError::NotOrthogonal { .. })
        ));
    }
}
