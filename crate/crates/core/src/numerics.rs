//! Dense complex linear algebra for the small (≤ 16) dimensions used here.
//!
//! Everything is value-typed and immutable once built, so matrices and
//! decompositions can be shared freely between sweep workers.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative Hermiticity tolerance, scaled by the largest entry magnitude.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Upper bound on ‖H‖·dt accepted by [`propagate_step`].
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
pub const MAX_JACOBI_SWEEPS: usize = 100;
pub const MAX_EIG_DIM: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("step too large: |H|*dt = {phase:.4} exceeds {MAX_PHASE_PER_STEP}")]
    StepTooLarge { phase: f64 },
    #[error("length mismatch: {xs} abscissae, {ys} ordinates")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("grid is not strictly ascending at index {index}")]
    NonMonotonicGrid { index: usize },
    #[error("need at least two quadrature points, got {0}")]
    TooFewPoints(usize),
    #[error("dimension {0} is outside the supported range 1..={MAX_EIG_DIM}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds from row-major entries. Panics if `entries.len()` is not a square.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entries length must equal dim^2");
        Self { dim, data: entries }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| {
            assert_eq!(rows[i].len(), dim, "rows must be square");
            C64::new(rows[i][j], 0.0)
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `self += factor * other`, in place.
    pub fn add_scaled(&mut self, factor: f64, other: &ComplexMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * factor;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |A[i][j] − conj(A[j][i])|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL * self.max_abs()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &ComplexMatrix) -> ComplexMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(self.dim, psi.dim());
        let n = self.dim;
        let amps = (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * psi.amplitudes[j]).sum())
            .collect();
        StateVector { amplitudes: amps }
    }

    /// Principal submatrix on the given index set, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(indices.len(), |a, b| self[(indices[a], indices[b])])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pure state amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z / n).collect(),
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// ⟨self|op|other⟩
    pub fn matrix_element(&self, op: &ComplexMatrix, other: &StateVector) -> C64 {
        let n = self.dim();
        assert_eq!(op.dim(), n);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let bra = self.amplitudes[i].conj();
            if bra == C64::new(0.0, 0.0) {
                continue;
            }
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += op[(i, j)] * other.amplitudes[j];
            }
            acc += bra * row;
        }
        acc
    }

    /// Real part of ⟨ψ|op|ψ⟩; exact for Hermitian `op`.
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        self.matrix_element(op, self).re
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenpairs sorted by ascending energy.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.states[0]
    }

    /// Smallest |E_m − E_band| over m ≠ band.
    pub fn gap_to_neighbours(&self, band: usize) -> f64 {
        let e = self.energies[band];
        self.energies
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != band)
            .map(|(_, &em)| (em - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    /// Σ E_n |n⟩⟨n|
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (e, v) in self.energies.iter().zip(&self.states) {
            let a = v.amplitudes();
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += a[i] * a[j].conj() * *e;
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Each eigenvector is phase-fixed so that its largest-magnitude component
/// (lowest index on ties) is real and positive.
pub fn hermitian_eigs(h: &ComplexMatrix) -> Result<EigenDecomposition, NumericsError> {
    let n = h.dim();
    if n == 0 || n > MAX_EIG_DIM {
        return Err(NumericsError::UnsupportedDimension(n));
    }
    let scale = h.max_abs();
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(NumericsError::NotHermitian { deviation });
    }

    // Work on the exactly Hermitian part.
    let mut a = ComplexMatrix::from_fn(n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);

    let total = a.frobenius_norm();
    let threshold = f64::EPSILON * total;
    let mut converged = scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(NumericsError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let energies = order.iter().map(|&k| a[(k, k)].re).collect();
    let states = order
        .iter()
        .map(|&k| fix_phase(StateVector::new((0..n).map(|i| v[(i, k)]).collect())))
        .collect();
    Ok(EigenDecomposition { energies, states })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One Jacobi rotation annihilating a[p][q]. The unitary is J = D·P with
// D = diag(1, e^{-iα}) on (p, q) making the pivot real and P the classical
// real rotation; A ← J† A J and V ← V J.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip pivots that cannot change the diagonal in floating point.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag; // e^{iα}
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(app - t * mag, 0.0);
    a[(q, q)] = C64::new(aqq + t * mag, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

fn fix_phase(state: StateVector) -> StateVector {
    let amps = state.amplitudes();
    let max = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return state;
    }
    let pivot = amps
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = amps[pivot];
    let rot = z.conj() / z.norm();
    let mut fixed = state.scale(rot);
    fixed.amplitudes[pivot] = C64::new(fixed.amplitudes[pivot].norm(), 0.0);
    fixed.normalized()
}

/// exp(−i·H·dt)·ψ through the eigendecomposition of `h_mid`.
///
/// Requires ‖h_mid‖·dt ≤ [`MAX_PHASE_PER_STEP`].
pub fn propagate_step(
    psi: &StateVector,
    h_mid: &ComplexMatrix,
    dt: f64,
) -> Result<StateVector, NumericsError> {
    if psi.dim() != h_mid.dim() {
        return Err(NumericsError::DimensionMismatch {
            left: psi.dim(),
            right: h_mid.dim(),
        });
    }
    let eig = hermitian_eigs(h_mid)?;
    let phase = eig.spectral_radius() * dt.abs();
    if phase > MAX_PHASE_PER_STEP * (1.0 + 1e-12) {
        return Err(NumericsError::StepTooLarge { phase });
    }
    let n = psi.dim();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (e, state) in eig.energies.iter().zip(&eig.states) {
        let coeff = state.inner(psi) * C64::from_polar(1.0, -e * dt);
        for (o, a) in out.iter_mut().zip(state.amplitudes()) {
            *o += a * coeff;
        }
    }
    Ok(StateVector::new(out))
}

/// Kronecker product; the first factor indexes the slow (outer) block.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(na * nb, |i, j| a[(i / nb, j / nb)] * b[(i % nb, j % nb)])
}

/// Composite trapezoid rule on an arbitrary strictly ascending grid.
pub fn trapezoid_integrate(xs: &[f64], ys: &[f64]) -> Result<f64, NumericsError> {
    if xs.len() != ys.len() {
        return Err(NumericsError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(NumericsError::TooFewPoints(xs.len()));
    }
    if let Some(index) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(NumericsError::NonMonotonicGrid { index: index + 1 });
    }
    Ok(xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

/// `n` uniformly spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}
