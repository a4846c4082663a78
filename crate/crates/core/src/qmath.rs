//! Dense complex linear algebra and quantum-state primitives.
//!
//! Basis states are indexed `0..d`. Composite spaces are ordered with the
//! first subsystem (A) as the major index: `|i⟩⊗|k⟩` sits at `i * d_b + k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance for the state, Hermiticity, trace and unitarity invariants.
pub const STATE_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Subsystem retained by [`partial_trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A unit-norm vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::StateJson", try_from = "crate::io::StateJson")]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized within [`STATE_TOL`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidDimension("state has no amplitudes".into()));
        }
        let norm2: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if v.is_empty() || norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(Self {
            amps: v.unscale(norm),
        })
    }

    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::OutOfRange {
                name: "k",
                value: k,
                bound: d,
            });
        }
        let mut amps = vec![ZERO; d];
        amps[k] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|ψ⟩⟨ψ|` as a raw matrix.
    pub fn outer(&self) -> ComplexMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator { m: self.outer() }
    }

    /// `u|ψ⟩`.
    pub fn evolve(&self, u: &UnitaryOperator) -> Result<PureState> {
        check_dim(u.dim(), self.dim())?;
        Ok(Self {
            amps: u.matrix() * &self.amps,
        })
    }
}

/// A Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::MatrixJson", try_from = "crate::io::MatrixJson")]
pub struct DensityOperator {
    m: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let herm = hermiticity_defect(&m);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min_eig = hermitian_eigenvalues(&m).min();
        if min_eig < -STATE_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_raw(m: ComplexMatrix) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("d must be positive".into()));
        }
        Ok(Self {
            m: ComplexMatrix::identity(d, d).unscale(d as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// tr ρ².
    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with(&self, psi: &PureState) -> Result<f64> {
        check_dim(self.dim(), psi.dim())?;
        Ok(psi.amps.dotc(&(&self.m * &psi.amps)).re)
    }
}

/// A square matrix with `U†U = I` within [`STATE_TOL`] (Frobenius).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::MatrixJson", try_from = "crate::io::MatrixJson")]
pub struct UnitaryOperator {
    m: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let d = m.nrows();
        let defect = (m.adjoint() * &m - ComplexMatrix::identity(d, d)).norm();
        if defect > STATE_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_raw(m: ComplexMatrix) -> Self {
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn compose(&self, other: &UnitaryOperator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    /// `u ρ u†`.
    pub fn conjugate(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        check_dim(self.dim(), rho.dim())?;
        Ok(DensityOperator {
            m: &self.m * &rho.m * self.m.adjoint(),
        })
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Max entrywise `|M - M†|`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of the Hermitian part of `m`, in solver order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> DVector<f64> {
    let h = (m + m.adjoint()).unscale(2.0);
    h.symmetric_eigenvalues()
}

/// Kronecker product; block `(i, j)` is `a[i, j] * b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Partial trace of an arbitrary `(d_a·d_b)`-square matrix.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    keep: Subsystem,
    d_a: usize,
    d_b: usize,
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    check_dim(d_a * d_b, m.nrows())?;
    let out = match keep {
        Subsystem::A => ComplexMatrix::from_fn(d_a, d_a, |i, j| {
            (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(d_b, d_b, |i, j| {
            (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()
        }),
    };
    Ok(out)
}

pub fn partial_trace(
    rho: &DensityOperator,
    keep: Subsystem,
    d_a: usize,
    d_b: usize,
) -> Result<DensityOperator> {
    Ok(DensityOperator {
        m: partial_trace_matrix(&rho.m, keep, d_a, d_b)?,
    })
}

/// `(1/√d) Σ_k |k⟩⊗|k⟩`.
pub fn max_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "maximally entangled state needs d >= 2, got {d}"
        )));
    }
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = vec![ZERO; d * d];
    for k in 0..d {
        amps[k * d + k] = amp;
    }
    PureState::new(amps)
}

/// Deterministic generator for sample `stream` of a run seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed pure state: normalized vector of standard complex Gaussians.
pub fn haar_random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be positive".into()));
    }
    loop {
        let amps: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if let Ok(s) = PureState::normalized(amps) {
            return Ok(s);
        }
    }
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn haar_random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitaryOperator {
    let g = ComplexMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOperator { m: q }
}

/// Hilbert–Schmidt inner product `tr(a†b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `Re tr(ρσ)`; equals 1 only when both are the same pure state.
pub fn overlap_trace(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    // tr(ρσ) = Σ_ij ρ_ij σ_ji
    let n = rho.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho.m[(i, j)] * sigma.m[(j, i)];
        }
    }
    Ok(acc.re)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    rho.eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).norm()
}

/// Pauli matrices `[σx, σy, σz]`, with `|0⟩` the +1 eigenvector of `σz`.
pub fn pauli_matrices() -> [ComplexMatrix; 3] {
    let i = C64::i();
    [
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}
