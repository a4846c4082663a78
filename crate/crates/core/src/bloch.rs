//! Qubit specialization of the RSP equation.
//!
//! Each qubit unitary `u` induces a rotation `R` through
//! `u†σ_i u = Σ_j R_{ji} σ_j`, so the Bloch vector of `u†|φ⟩` is `Rχ` and the
//! RSP equation reduces to `Σ_m p_m R_m χ = 0`. Under this convention
//! `R(uv) = R(v)·R(u)`, and `e^{−iθσz/2}` maps to a rotation by `−θ` about
//! `z`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{run_rsp, ProbRule, RspProtocol, RspTranscript};
use crate::qmath::{
    check_dim, pauli_matrices, seeded_rng, ComplexMatrix, DensityOperator, PureState,
    UnitaryOperator, C64,
};
use crate::rsp_eq::{FeasibilityResult, StateSampler};
use crate::simplex::simplex_least_squares;

/// Tolerance for the rotation-matrix invariants.
pub const ROTATION_TOL: f64 = 1e-9;
/// `|χz|` above which a state is off the equator.
pub const EQUATOR_TOL: f64 = 1e-9;
/// Tube half-width around `χxχyχz = 0` excluded from impossibility scans.
pub const N3_TUBE: f64 = 1e-3;

/// Real 3-vector with `ρ = (I + χ·σ)/2`. Serialized as `[x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector(pub Vector3<f64>);

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        Self(Vector3::from(v))
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(b: BlochVector) -> Self {
        b.0.into()
    }
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    /// `χ_i = tr(ρ σ_i)`.
    pub fn from_density(rho: &DensityOperator) -> Result<Self> {
        check_dim(2, rho.dim())?;
        let [sx, sy, sz] = pauli_matrices();
        let m = rho.matrix();
        let comp = |s: &ComplexMatrix| (m * s).trace().re;
        Ok(Self::new(comp(&sx), comp(&sy), comp(&sz)))
    }

    pub fn from_pure(phi: &PureState) -> Result<Self> {
        check_dim(2, phi.dim())?;
        let a = phi.amplitudes();
        let cross = a[0].conj() * a[1];
        Ok(Self::new(
            2.0 * cross.re,
            2.0 * cross.im,
            a[0].norm_sqr() - a[1].norm_sqr(),
        ))
    }

    /// `(I + χ·σ)/2`; errors when `‖χ‖ > 1`.
    pub fn to_density(&self) -> Result<DensityOperator> {
        let [sx, sy, sz] = pauli_matrices();
        let m = (ComplexMatrix::identity(2, 2)
            + sx.scale(self.x())
            + sy.scale(self.y())
            + sz.scale(self.z()))
        .unscale(2.0);
        DensityOperator::new(m)
    }

    /// Pure state with this Bloch vector, which must be a unit vector.
    pub fn to_pure(&self) -> Result<PureState> {
        let n = self.norm();
        if (n - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotNormalized(n * n));
        }
        let theta = self.z().clamp(-1.0, 1.0).acos();
        let phi = self.y().atan2(self.x());
        PureState::normalized(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ])
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn xyz_product(&self) -> f64 {
        self.0.x * self.0.y * self.0.z
    }

    /// Uniform on the unit sphere.
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 1e-12 {
                return Self(v / n);
            }
        }
    }
}

pub fn bloch_from_density(rho: &DensityOperator) -> Result<BlochVector> {
    BlochVector::from_density(rho)
}

pub fn density_from_bloch(chi: &BlochVector) -> Result<DensityOperator> {
    chi.to_density()
}

/// Axis and angle of a rotation; `axis` is `None` for the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub axis: Option<Vector3<f64>>,
    pub angle: f64,
}

/// Element of SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m.transpose() * m - Matrix3::identity()).norm();
        if orth > ROTATION_TOL {
            return Err(Error::Malformed {
                field: "rotation".into(),
                reason: format!("‖RᵀR − I‖ = {orth:e}"),
            });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::Malformed {
                field: "rotation".into(),
                reason: format!("det = {det}"),
            });
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Rodrigues' formula for a rotation by `angle` about `axis`.
    pub fn about(axis: Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize();
        let k = a.cross_matrix();
        Self(Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
    }

    pub fn rx(angle: f64) -> Self {
        Self::about(Vector3::x(), angle)
    }

    pub fn ry(angle: f64) -> Self {
        Self::about(Vector3::y(), angle)
    }

    pub fn rz(angle: f64) -> Self {
        Self::about(Vector3::z(), angle)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, chi: &BlochVector) -> BlochVector {
        BlochVector(self.0 * chi.0)
    }

    /// Axis from the skew part; near 180° the skew part vanishes and the
    /// axis is the dominant eigenvector of `(R + Rᵀ)/4 + I/2`.
    pub fn axis_angle(&self) -> AxisAngle {
        let r = &self.0;
        let angle = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        if angle < 1e-9 {
            return AxisAngle { axis: None, angle: 0.0 };
        }
        let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
        if skew.norm() > 1e-6 {
            return AxisAngle {
                axis: Some(skew.normalize()),
                angle,
            };
        }
        let sym = (r + r.transpose()) / 4.0 + Matrix3::identity() / 2.0;
        let eig = sym.symmetric_eigen();
        let k = eig.eigenvalues.imax();
        AxisAngle {
            axis: Some(eig.eigenvectors.column(k).normalize()),
            angle,
        }
    }
}

/// `(R)_{ji} = ½ tr(σ_j u† σ_i u)`.
pub fn rotation_from_unitary(u: &UnitaryOperator) -> Result<RotationMatrix> {
    check_dim(2, u.dim())?;
    let paulis = pauli_matrices();
    let um = u.matrix();
    let ud = um.adjoint();
    let m = Matrix3::from_fn(|j, i| {
        let conj = &ud * &paulis[i] * um;
        0.5 * (&paulis[j] * conj).trace().re
    });
    Ok(RotationMatrix(m))
}

fn check_simplex(p: &[f64], n: usize) -> Result<()> {
    crate::rsp_eq::validate_probabilities(p, n)
}

/// `‖Σ_m p_m R_m χ‖`.
pub fn reduced_residual(
    rotations: &[RotationMatrix],
    p: &[f64],
    chi: &BlochVector,
) -> Result<f64> {
    check_simplex(p, rotations.len())?;
    let v = rotations
        .iter()
        .zip(p)
        .fold(Vector3::zeros(), |acc, (r, &pm)| acc + r.0 * chi.0 * pm);
    Ok(v.norm())
}

/// Minimizes `‖Σ_m p_m R_m χ‖` over the simplex. The residual is the Bloch
/// norm, `√2` times the operator-level residual of the same `p`.
pub fn solve_reduced(
    rotations: &[RotationMatrix],
    chi: &BlochVector,
    tol: f64,
) -> Result<FeasibilityResult> {
    if rotations.is_empty() {
        return Err(Error::InvalidDimension("rotation family is empty".into()));
    }
    let cols: Vec<DVector<f64>> = rotations
        .iter()
        .map(|r| DVector::from_column_slice((r.0 * chi.0).as_slice()))
        .collect();
    let a = DMatrix::from_columns(&cols);
    let fit = simplex_least_squares(&a, &DVector::zeros(3));
    Ok(FeasibilityResult::from_fit(fit.p, fit.residual, tol))
}

/// Result of [`canonicalize`]: `rotations[m] = S·R_m·T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Canonicalization {
    pub s: RotationMatrix,
    pub t: RotationMatrix,
    pub rotations: Vec<RotationMatrix>,
    /// `R₂R₁ᵀ = I`, so the x-axis constraint is vacuous.
    pub degenerate_second: bool,
    /// `R₃R₁ᵀ = I`, so the xy-plane constraint is vacuous.
    pub degenerate_third: bool,
}

impl Canonicalization {
    /// State at which the transformed family reproduces the original
    /// equation at `chi`: `χ' = Tᵀχ`.
    pub fn remap_state(&self, chi: &BlochVector) -> BlochVector {
        self.t.transpose().apply(chi)
    }
}

/// Minimal rotation carrying unit vector `from` onto unit vector `to`.
fn align(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let cross = from.cross(to);
    let s = cross.norm();
    let c = from.dot(to);
    if s < 1e-15 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        // antiparallel: half turn about any perpendicular axis
        let perp = if from.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let axis = from.cross(&perp).normalize();
        return RotationMatrix::about(axis, PI).0;
    }
    RotationMatrix::about(cross / s, s.atan2(c)).0
}

/// Uses the freedom `R_m → S R_m T` to make `R₁ = I`, put `R₂`'s axis on
/// `±x` and `R₃`'s axis in the xy plane.
pub fn canonicalize(rotations: &[RotationMatrix]) -> Canonicalization {
    let Some(first) = rotations.first() else {
        return Canonicalization {
            s: RotationMatrix::identity(),
            t: RotationMatrix::identity(),
            rotations: Vec::new(),
            degenerate_second: true,
            degenerate_third: true,
        };
    };
    let r1t = first.0.transpose();
    let relative: Vec<Matrix3<f64>> = rotations.iter().map(|r| r.0 * r1t).collect();
    let axis_of = |k: usize| relative.get(k).and_then(|q| RotationMatrix(*q).axis_angle().axis);

    let a2 = axis_of(1);
    let a3 = axis_of(2);
    let mut s = match a2 {
        Some(a) => {
            let a = if a.x < 0.0 { -a } else { a };
            align(&a, &Vector3::x())
        }
        None => Matrix3::identity(),
    };
    if let Some(a) = a3 {
        let a = s * a;
        let mut alpha = -a.z.atan2(a.y);
        if alpha > FRAC_PI_2 {
            alpha -= PI;
        } else if alpha < -FRAC_PI_2 {
            alpha += PI;
        }
        s = RotationMatrix::rx(alpha).0 * s;
    }
    let t = r1t * s.transpose();
    let transformed = rotations.iter().map(|r| RotationMatrix(s * r.0 * t)).collect();
    Canonicalization {
        s: RotationMatrix(s),
        t: RotationMatrix(t),
        rotations: transformed,
        degenerate_second: rotations.len() > 1 && a2.is_none(),
        degenerate_third: rotations.len() > 2 && a3.is_none(),
    }
}

/// `{I, Rx(180°), Ry(180°)}`, the only candidate `n = 3` family after
/// canonicalization.
pub fn canonical_n3_rotations() -> [RotationMatrix; 3] {
    [
        RotationMatrix::identity(),
        RotationMatrix(Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))),
        RotationMatrix(Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0))),
    ]
}

/// Coefficient matrix with columns `χ`, `Rx(180°)χ`, `Ry(180°)χ`, and its
/// determinant `4χxχyχz` by cofactor expansion.
pub fn n3_matrix(chi: &BlochVector) -> (Matrix3<f64>, f64) {
    let (x, y, z) = (chi.x(), chi.y(), chi.z());
    #[rustfmt::skip]
    let m = Matrix3::new(
        x,  x, -x,
        y, -y,  y,
        z, -z, -z,
    );
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    (m, det)
}

/// Unitaries `{I, σz}` with `p = (½, ½)`, valid only for `χz = 0`.
pub fn equatorial_protocol() -> RspProtocol {
    let sz = UnitaryOperator::new(pauli_matrices()[2].clone()).expect("σz is unitary");
    let rule = ProbRule::closed_form(Arc::new(|phi: &PureState| {
        let chi = BlochVector::from_pure(phi)?;
        if chi.z().abs() > EQUATOR_TOL {
            return Err(Error::OutsideSubEnsemble(chi.z().abs()));
        }
        Ok(vec![0.5, 0.5])
    }));
    RspProtocol::new(vec![UnitaryOperator::identity(2), sz], rule)
        .expect("equatorial family is well formed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorDemoReport {
    pub samples: usize,
    pub seed: u64,
    pub min_fidelity: f64,
    pub max_fidelity_defect: f64,
    pub classical_cost: f64,
    pub off_equator_trials: usize,
    pub off_equator_rejected: usize,
    pub passed: bool,
}

/// Runs the equatorial protocol on `samples` states from `sampler` and
/// checks that states off the equator are refused.
pub fn equator_demo(
    samples: usize,
    seed: u64,
    sampler: StateSampler,
) -> Result<(EquatorDemoReport, Vec<RspTranscript>)> {
    let proto = equatorial_protocol();
    let transcripts: Vec<RspTranscript> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i);
            let phi = sampler.sample(2, &mut rng)?;
            run_rsp(&phi, &proto, &mut rng)
        })
        .collect::<Result<_>>()?;

    // Off-equator probes live on a separate stream range.
    let mut rejected = 0;
    for i in 0..samples as u64 {
        let mut rng = seeded_rng(seed, u64::MAX - i);
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let lift = 1e-6 + rng.random::<f64>() * 0.999;
        let z = if rng.random::<bool>() { lift } else { -lift };
        let r = (1.0 - z * z).sqrt();
        let chi = BlochVector::new(r * theta.cos(), r * theta.sin(), z);
        let phi = chi.to_pure()?;
        if matches!(
            run_rsp(&phi, &proto, &mut rng),
            Err(Error::OutsideSubEnsemble(_))
        ) {
            rejected += 1;
        }
    }

    let min_fidelity = transcripts
        .iter()
        .map(|t| t.fidelity)
        .fold(f64::INFINITY, f64::min);
    let max_defect = transcripts
        .iter()
        .map(|t| (1.0 - t.fidelity).abs())
        .fold(0.0, f64::max);
    let cost = proto.classical_cost();
    let report = EquatorDemoReport {
        samples,
        seed,
        min_fidelity,
        max_fidelity_defect: max_defect,
        classical_cost: cost,
        off_equator_trials: samples,
        off_equator_rejected: rejected,
        passed: max_defect <= 1e-9 && cost == 1.0 && rejected == samples,
    };
    Ok((report, transcripts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    pub count: usize,
    pub seed: u64,
    pub tube: f64,
    pub infeasible: usize,
    /// Smallest Bloch-level minimum residual over the samples.
    pub min_residual: f64,
    /// Largest `|det − 4χxχyχz|`, determinant taken by LU.
    pub max_det_error: f64,
    pub worst_chi: BlochVector,
    pub passed: bool,
}

/// Unit `χ` uniform on the sphere, conditioned on `|χxχyχz| > tube`.
pub fn sample_off_tube<R: Rng + ?Sized>(tube: f64, rng: &mut R) -> BlochVector {
    loop {
        let chi = BlochVector::random_unit(rng);
        if chi.xyz_product().abs() > tube {
            return chi;
        }
    }
}

/// Solves the canonical `n = 3` system at `count` generic `χ`. Passes when
/// every sample is infeasible with residual above `tube` and the closed-form
/// determinant agrees with an LU determinant within `1e-12`.
pub fn n3_impossibility_scan(count: usize, seed: u64, tol: f64) -> Result<ImpossibilityReport> {
    let rotations = canonical_n3_rotations();
    let rows: Vec<(BlochVector, FeasibilityResult, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i);
            let chi = sample_off_tube(N3_TUBE, &mut rng);
            let res = solve_reduced(&rotations, &chi, tol)?;
            let (m, det) = n3_matrix(&chi);
            let lu_det = m.lu().determinant();
            let err = (det - 4.0 * chi.xyz_product())
                .abs()
                .max((lu_det - det).abs());
            Ok((chi, res, err))
        })
        .collect::<Result<_>>()?;

    let infeasible = rows.iter().filter(|(_, r, _)| !r.is_feasible()).count();
    let (worst_chi, min_residual) = rows
        .iter()
        .map(|(c, r, _)| (*c, r.min_residual))
        .fold((BlochVector::new(0.0, 0.0, 0.0), f64::INFINITY), |a, b| {
            if b.1 < a.1 {
                b
            } else {
                a
            }
        });
    let max_det_error = rows.iter().map(|(_, _, e)| *e).fold(0.0, f64::max);
    Ok(ImpossibilityReport {
        count,
        seed,
        tube: N3_TUBE,
        infeasible,
        min_residual,
        max_det_error,
        worst_chi,
        passed: infeasible == count && min_residual > N3_TUBE && max_det_error <= 1e-12,
    })
}
