//! Univariate complex polynomials, simultaneous root finding, and binary
//! forms with their Sylvester resultant.

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Polynomial with complex coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&v| c(v)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Index of the highest coefficient that is exactly nonzero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|v| *v != c(0.0))
    }

    /// Drops leading coefficients with modulus at most `rel * max |a_i|`.
    pub fn trimmed(&self, rel: f64) -> Poly {
        let scale = self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let keep = self
            .coeffs
            .iter()
            .rposition(|v| v.norm() > rel * scale)
            .map_or(0, |d| d + 1);
        Poly::new(self.coeffs[..keep].to_vec())
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(c(0.0), |acc, &a| acc * z + a)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| a * i as f64)
                .collect(),
        )
    }

    /// Coefficients `b_j` of `p(center + z) = Σ b_j z^j` (repeated
    /// synthetic division).
    pub fn taylor_shift(&self, center: C64) -> Vec<C64> {
        let mut b = self.coeffs.clone();
        let n = b.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = b[j + 1];
                b[j] += center * next;
            }
        }
        b
    }
}

/// A root with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: C64,
    pub multiplicity: usize,
}

/// All roots of `p` (of its exact degree) by the Aberth–Ehrlich
/// simultaneous iteration, each finished by a few Newton steps.
pub fn aberth_roots(p: &Poly, maxit: usize) -> Vec<C64> {
    let Some(deg) = p.degree() else {
        return Vec::new();
    };
    // exact zero roots are split off first
    let lowest = p.coeffs.iter().position(|v| *v != c(0.0)).unwrap_or(0);
    let q = Poly::new(p.coeffs[lowest..=deg].to_vec());
    let d = deg - lowest;
    let mut roots = vec![c(0.0); lowest];
    if d == 0 {
        return roots;
    }
    let lead = q.coeffs[d];
    if d == 1 {
        roots.push(-q.coeffs[0] / lead);
        return roots;
    }
    let dq = q.derivative();
    // Fujiwara bound on root moduli
    let radius = (1..=d)
        .map(|i| {
            let r = (q.coeffs[d - i] / lead).norm().powf(1.0 / i as f64);
            if i == d {
                r * 0.5f64.powf(1.0 / d as f64)
            } else {
                r
            }
        })
        .fold(0.0, f64::max)
        * 2.0;
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let mut z: Vec<C64> = (0..d)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / d as f64 + 0.4;
            Complex::from_polar(radius * (0.5 + 0.5 * (j as f64 + 1.0) / d as f64), theta)
        })
        .collect();
    for _ in 0..maxit {
        let mut max_step: f64 = 0.0;
        for i in 0..d {
            let pz = q.eval(z[i]);
            if pz == c(0.0) {
                continue;
            }
            let ratio = pz / dq.eval(z[i]);
            let repulsion: C64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff == c(0.0) {
                        c(0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let step = ratio / (c(1.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step <= 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let dz = dq.eval(*zi);
            if dz == c(0.0) {
                break;
            }
            let step = q.eval(*zi) / dz;
            let cand = *zi - step;
            if cand.is_finite() && q.eval(cand).norm() < q.eval(*zi).norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    roots.extend(z);
    roots
}

/// Groups the roots of `p` into distinct roots with multiplicities.
///
/// Roots within `merge_tol · max(1, |z|)` are always merged. Wider clusters
/// (up to `1e-3` relative) are merged only when the Taylor coefficients of
/// `p` at the cluster centroid below the cluster size vanish to `1e-10`
/// relative, i.e. when the cluster is a numerically multiple root.
pub fn roots_with_multiplicity(p: &Poly, merge_tol: f64) -> Vec<Root> {
    let raw = aberth_roots(p, 500);
    let mut clusters: Vec<(Vec<C64>, C64)> = Vec::new();
    for z in raw {
        match clusters
            .iter_mut()
            .find(|(_, ctr)| (*ctr - z).norm() <= merge_tol * ctr.norm().max(1.0))
        {
            Some((members, ctr)) => {
                members.push(z);
                *ctr = members.iter().sum::<C64>() / members.len() as f64;
            }
            None => clusters.push((vec![z], z)),
        }
    }
    // merge numerically multiple roots that Aberth resolved only to eps^{1/m}
    let scale_at = |z: C64| -> f64 {
        p.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm() * z.norm().powi(i as i32))
            .sum::<f64>()
    };
    loop {
        let mut merged = false;
        'search: for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (ca, cb) = (clusters[a].1, clusters[b].1);
                if (ca - cb).norm() > 1e-3 * ca.norm().max(1.0) {
                    continue;
                }
                let mut members = clusters[a].0.clone();
                members.extend(&clusters[b].0);
                let centroid = refine_multiple(
                    p,
                    members.iter().sum::<C64>() / members.len() as f64,
                    members.len(),
                );
                let b_coeffs = p.taylor_shift(centroid);
                let scale = scale_at(centroid).max(f64::MIN_POSITIVE);
                let multiple = b_coeffs[..members.len()]
                    .iter()
                    .all(|bj| bj.norm() <= 1e-10 * scale);
                if multiple {
                    clusters[a] = (members, centroid);
                    clusters.remove(b);
                    merged = true;
                    break 'search;
                }
            }
        }
        if !merged {
            break;
        }
    }
    clusters
        .into_iter()
        .map(|(members, value)| Root {
            value,
            multiplicity: members.len(),
        })
        .collect()
}

/// An m-fold root of `p` is a simple root of `p^{(m−1)}`; Newton on the
/// latter recovers it to full precision from a cluster centroid.
fn refine_multiple(p: &Poly, z0: C64, m: usize) -> C64 {
    if m < 2 {
        return z0;
    }
    let mut d = p.clone();
    for _ in 1..m {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = z0;
    for _ in 0..20 {
        let slope = dd.eval(z);
        if slope == c(0.0) {
            break;
        }
        let step = d.eval(z) / slope;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    // keep the centroid if Newton wandered off the cluster
    if (z - z0).norm() <= 1e-2 * z0.norm().max(1.0) {
        z
    } else {
        z0
    }
}

/// Binary form `Σ_j c_j x1^{d−j} x2^j` of degree `d = coeffs.len() − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryForm {
    pub coeffs: Vec<C64>,
}

impl BinaryForm {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x1: C64, x2: C64) -> C64 {
        let d = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &cj)| cj * x1.powu((d - j) as u32) * x2.powu(j as u32))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Projective roots `(x1 : x2)` with multiplicities, each normalized so
    /// the larger-modulus coordinate is 1. Leading coefficients below
    /// `zero_tol · max |c_j|` count as zero, giving the root `(1 : 0)`.
    pub fn projective_roots(&self, zero_tol: f64) -> Vec<(C64, C64, usize)> {
        let scale = self.max_abs();
        let d = self.degree();
        let at_infinity = self
            .coeffs
            .iter()
            .position(|v| v.norm() > zero_tol * scale)
            .unwrap_or(d);
        // dehomogenize at x2 = 1: Σ_j c_j t^{d−j}
        let ascending: Vec<C64> = self.coeffs[at_infinity..].iter().rev().copied().collect();
        let mut out: Vec<(C64, C64, usize)> = roots_with_multiplicity(&Poly::new(ascending), 1e-7)
            .into_iter()
            .map(|r| normalize_pair(r.value, c(1.0), r.multiplicity))
            .collect();
        if at_infinity > 0 {
            out.push((c(1.0), c(0.0), at_infinity));
        }
        out
    }
}

fn normalize_pair(x1: C64, x2: C64, m: usize) -> (C64, C64, usize) {
    if x1.norm() >= x2.norm() {
        (c(1.0), x2 / x1, m)
    } else {
        (x1 / x2, c(1.0), m)
    }
}

/// Sylvester matrix of two binary forms. Its kernel contains
/// `(x1^N, x1^{N−1} x2, …, x2^N)`, `N = deg p + deg q − 1`, for every common
/// root.
pub fn sylvester(p: &BinaryForm, q: &BinaryForm) -> DMatrix<C64> {
    let (m, n) = (p.degree(), q.degree());
    let size = m + n;
    let mut s = DMatrix::from_element(size, size, c(0.0));
    for i in 0..n {
        for (j, &pj) in p.coeffs.iter().enumerate() {
            s[(i, i + j)] = pj;
        }
    }
    for i in 0..m {
        for (j, &qj) in q.coeffs.iter().enumerate() {
            s[(n + i, i + j)] = qj;
        }
    }
    s
}

/// Resultant of two binary forms.
pub fn resultant(p: &BinaryForm, q: &BinaryForm) -> C64 {
    sylvester(p, q).determinant()
}
