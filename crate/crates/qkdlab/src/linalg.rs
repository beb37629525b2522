//! Dense complex linear algebra and entropy functions for operators of
//! dimension <= 32.
//!
//! Basis convention: subsystem order equals label order, with row-major
//! Kronecker indexing (the first subsystem is the slowest index). This is
//! fixed once here and asserted by tests.

use num_complex::Complex64 as C;

use crate::error::{QkdError, Result};

/// Hermiticity tolerance for density operators (entrywise max deviation).
pub const HERM_TOL: f64 = 1e-12;
/// Trace-one tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue a density operator may carry.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this threshold contribute zero entropy.
pub const ENTROPY_EIG_FLOOR: f64 = 1e-14;

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![C::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(QkdError::DimensionMismatch(format!(
                    "expected {dim} columns, got {}",
                    r.len()
                )));
            }
        }
        let data: Vec<C> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let m = ComplexMatrix { dim, data };
        if !m.is_finite() {
            return Err(QkdError::Domain("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    /// Rank-1 projector |v><v| (v need not be normalized).
    pub fn outer(v: &[C]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.dim + j] += v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, self.get(j, i).conj());
            }
        }
        m
    }

    pub fn scale(&self, s: C) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QkdError::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(QkdError::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_assign_at(i, j, a * other.get(k, j));
                }
            }
        }
        Ok(out)
    }

    /// Max entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                // diagonal: the conjugate-pair test catches Im(a_ii) via |2i Im|
                worst = worst.max(if i == j { d / 2.0 } else { d });
            }
        }
        worst
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Kronecker product with `a` as the slow index.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let dim = da * db;
    let mut out = ComplexMatrix::zeros(dim);
    for ia in 0..da {
        for ja in 0..da {
            let va = a.get(ia, ja);
            if va.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    out.set(ia * db + ib, ja * db + jb, va * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Pauli sigma_x.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
        vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
    ])
    .expect("static")
}

/// Pauli sigma_y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![C::new(0.0, 0.0), C::new(0.0, -1.0)],
        vec![C::new(0.0, 1.0), C::new(0.0, 0.0)],
    ])
    .expect("static")
}

/// Pauli sigma_z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
        vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)],
    ])
    .expect("static")
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi rotations; off-diagonal Frobenius norm driven below
/// 1e-14 relative to the matrix norm, at most 100 sweeps.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = m.hermiticity_defect();
    if defect > 1e-10 {
        return Err(QkdError::NotHermitian {
            deviation: defect,
            tol: 1e-10,
        });
    }
    let n = m.dim();
    let mut a = m.clone();
    // Symmetrize exactly so rounding in the input cannot accumulate.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            a.set(i, j, avg);
            a.set(j, i, avg.conj());
        }
        let d = a.get(i, i);
        a.set(i, i, C::new(d.re, 0.0));
    }
    let scale = a.frobenius().max(1.0);
    let threshold = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= threshold / (n as f64) {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Combined plane transform V = diag(1, conj(phase)) * J with
                // J = [[c, s], [-s, c]]; update A <- V^dag A V.
                let u = phase;
                let ub = phase.conj();
                // Column update: cols p,q of A.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c - akq * ub * s);
                    a.set(k, q, akp * s + akq * ub * c);
                }
                // Row update: rows p,q.
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c - aqk * u * s);
                    a.set(q, k, apk * s + aqk * u * c);
                }
                a.set(p, q, C::new(0.0, 0.0));
                a.set(q, p, C::new(0.0, 0.0));
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eigs)
}

/// Attempted Cholesky factorization of (m + shift*I); succeeds iff the
/// shifted matrix is positive semidefinite up to rounding.
fn cholesky_psd(m: &ComplexMatrix, shift: f64) -> bool {
    let n = m.dim();
    let mut l = vec![C::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d < 0.0 {
            return false;
        }
        let dj = d.sqrt();
        l[j * n + j] = C::new(dj, 0.0);
        if dj == 0.0 {
            // zero pivot: the remaining column must vanish too; accept and
            // let later pivots flag any indefiniteness
            continue;
        }
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = v / dj;
        }
    }
    true
}

/// PSD test of a Hermitian matrix within the given eigenvalue tolerance,
/// via Cholesky of the shifted matrix (much cheaper than an eigensolve).
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    cholesky_psd(m, tol)
}

/// Density operator: Hermitian, unit-trace, PSD matrix with a tensor
/// factorization into labelled subsystems.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    mat: ComplexMatrix,
    dims: Vec<usize>,
    labels: Vec<char>,
}

impl DensityOperator {
    pub fn new(mat: ComplexMatrix, dims: Vec<usize>, labels: Vec<char>) -> Result<Self> {
        let rho = Self::new_unchecked(mat, dims, labels)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Construct without the PSD/trace/Hermiticity checks. Used internally by
    /// channels whose outputs are re-validated by the caller.
    pub fn new_unchecked(mat: ComplexMatrix, dims: Vec<usize>, labels: Vec<char>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        if prod != mat.dim() {
            return Err(QkdError::DimensionMismatch(format!(
                "subsystem dims {:?} do not factor dimension {}",
                dims,
                mat.dim()
            )));
        }
        if dims.len() != labels.len() {
            return Err(QkdError::DimensionMismatch(
                "labels/dims length mismatch".into(),
            ));
        }
        Ok(DensityOperator { mat, dims, labels })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mat.is_finite() {
            return Err(QkdError::InvalidDensity("non-finite entries".into()));
        }
        let defect = self.mat.hermiticity_defect();
        if defect > HERM_TOL {
            return Err(QkdError::NotHermitian {
                deviation: defect,
                tol: HERM_TOL,
            });
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QkdError::InvalidDensity(format!(
                "trace {} not within {TRACE_TOL:.0e} of 1",
                tr
            )));
        }
        if !cholesky_psd(&self.mat, PSD_TOL) {
            return Err(QkdError::InvalidDensity(format!(
                "minimum eigenvalue below -{PSD_TOL:.0e}"
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn label_index(&self, label: char) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(QkdError::UnknownLabel(label))
    }

    /// Purity tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.mat.frobenius().powi(2)
    }
}

/// Trace out every subsystem not listed in `keep`; kept subsystems stay in
/// their original order.
pub fn partial_trace(rho: &DensityOperator, keep: &[char]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(QkdError::Domain("keep set must be non-empty".into()));
    }
    for &l in keep {
        rho.label_index(l)?;
    }
    let k = rho.dims().len();
    let keep_mask: Vec<bool> = rho.labels().iter().map(|l| keep.contains(l)).collect();
    let kept_dims: Vec<usize> = (0..k).filter(|&i| keep_mask[i]).map(|i| rho.dims()[i]).collect();
    let kept_labels: Vec<char> = (0..k).filter(|&i| keep_mask[i]).map(|i| rho.labels()[i]).collect();
    let traced_dims: Vec<usize> = (0..k).filter(|&i| !keep_mask[i]).map(|i| rho.dims()[i]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // strides of each subsystem in the full index
    let mut strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * rho.dims()[i + 1];
    }
    let kept_strides: Vec<usize> = (0..k).filter(|&i| keep_mask[i]).collect::<Vec<_>>()
        .iter().map(|&i| strides[i]).collect();
    let traced_strides: Vec<usize> = (0..k).filter(|&i| !keep_mask[i]).collect::<Vec<_>>()
        .iter().map(|&i| strides[i]).collect();

    let unrank = |mut r: usize, dims: &[usize], strs: &[usize]| -> usize {
        let mut full = 0usize;
        for (d, s) in dims.iter().zip(strs.iter()).rev() {
            full += (r % d) * s;
            r /= d;
        }
        full
    };

    let mut out = ComplexMatrix::zeros(dk);
    for ik in 0..dk {
        let base_i = unrank(ik, &kept_dims, &kept_strides);
        for jk in 0..dk {
            let base_j = unrank(jk, &kept_dims, &kept_strides);
            let mut acc = C::new(0.0, 0.0);
            for t in 0..dt {
                let off = unrank(t, &traced_dims, &traced_strides);
                acc += rho.matrix().get(base_i + off, base_j + off);
            }
            out.set(ik, jk, acc);
        }
    }
    DensityOperator::new(out, kept_dims, kept_labels)
}

/// Entropy (base 2) of a spectrum; eigenvalues below the floor contribute 0.
pub fn entropy_of_spectrum(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigs {
        if l < -PSD_TOL {
            return Err(QkdError::InvalidDensity(format!(
                "eigenvalue {l:.3e} below -{PSD_TOL:.0e}"
            )));
        }
        if l > ENTROPY_EIG_FLOOR {
            s -= l * l.log2();
        }
    }
    Ok(s)
}

/// Von Neumann entropy S(rho) in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let eigs = hermitian_eigenvalues(rho.matrix())?;
    entropy_of_spectrum(&eigs)
}

/// Conditional von Neumann entropy S(X|E) = S(rho_XE) - S(rho_E) in bits.
pub fn conditional_vn_entropy(rho: &DensityOperator, x_label: char, e_label: char) -> Result<f64> {
    rho.label_index(x_label)?;
    rho.label_index(e_label)?;
    let rho_xe = partial_trace(rho, &[x_label, e_label])?;
    let rho_e = partial_trace(rho, &[e_label])?;
    Ok(von_neumann_entropy(&rho_xe)? - von_neumann_entropy(&rho_e)?)
}

/// Probability vector: weights in [0,1] summing to 1.
#[derive(Debug, Clone)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for &w in &weights {
            if !(0.0..=1.0 + 1e-12).contains(&w) {
                return Err(QkdError::Domain(format!("probability {w} outside [0,1]")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(QkdError::Domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbabilityVector { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shannon_entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&w| w > ENTROPY_EIG_FLOOR)
            .map(|&w| -w * w.log2())
            .sum()
    }
}

/// Conditional Shannon entropy H(X|Y) = H(X,Y) - H(Y) for a joint
/// distribution laid out row-major over an (x, y) grid.
pub fn shannon_cond_entropy(joint: &ProbabilityVector, nx: usize, ny: usize) -> Result<f64> {
    if joint.weights().len() != nx * ny {
        return Err(QkdError::DimensionMismatch(format!(
            "joint length {} != {nx}x{ny}",
            joint.weights().len()
        )));
    }
    let hxy = joint.shannon_entropy();
    let mut py = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            py[y] += joint.weights()[x * ny + y];
        }
    }
    let hy: f64 = py
        .iter()
        .filter(|&&w| w > ENTROPY_EIG_FLOOR)
        .map(|&w| -w * w.log2())
        .sum();
    Ok(hxy - hy)
}

/// Binary entropy h(q) in bits; endpoints give 0.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(QkdError::Domain(format!("binary_entropy argument {q} outside [0,1]")));
    }
    if q <= 0.0 || q >= 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// Trace distance (1/2)||a - b||_1.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QkdError::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = a.matrix().sub(b.matrix())?;
    let eigs = hermitian_eigenvalues(&diff)?;
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}
