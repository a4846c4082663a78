//! The RSP equation `Σ_m p_m u_m†|φ⟩⟨φ|u_m = I/d` as an executable object:
//! residuals, per-state feasibility over the probability simplex, sampling
//! scans, and the oblivious-case `X` matrix analysis.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochVector;
use crate::error::{Error, Result};
use crate::qmath::{
    check_dim, haar_random_state, seeded_rng, ComplexMatrix, PureState, UnitaryOperator, C64,
    ZERO,
};
use crate::simplex::simplex_least_squares;

pub const DEFAULT_TOL: f64 = 1e-7;
/// Allowed deviation of a probability vector from the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// `‖X†X − I‖_F` threshold for the oblivious identity test.
pub const GRAM_TOL: f64 = 1e-8;
/// Singular values at or below this count as zero in [`completeness_rank`].
pub const RANK_TOL: f64 = 1e-9;
/// Exclusion radius around `χxχyχz = 0` for the generic qubit sampler.
pub const GENERIC_EXCLUSION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    pub probabilities: Option<Vec<f64>>,
    pub min_residual: f64,
    pub tolerance: f64,
    /// Minimizing probability vector, reported for both verdicts.
    #[serde(skip)]
    pub minimizer: Vec<f64>,
}

impl FeasibilityResult {
    pub(crate) fn from_fit(p: DVector<f64>, min_residual: f64, tolerance: f64) -> Self {
        let minimizer: Vec<f64> = p.iter().copied().collect();
        if min_residual <= tolerance {
            Self {
                status: FeasibilityStatus::Feasible,
                probabilities: Some(minimizer.clone()),
                min_residual,
                tolerance,
                minimizer,
            }
        } else {
            Self {
                status: FeasibilityStatus::Infeasible,
                probabilities: None,
                min_residual,
                tolerance,
                minimizer,
            }
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

pub(crate) fn family_dim(unitaries: &[UnitaryOperator]) -> Result<usize> {
    let first = unitaries
        .first()
        .ok_or_else(|| Error::InvalidDimension("unitary family is empty".into()))?;
    let d = first.dim();
    for u in unitaries {
        check_dim(d, u.dim())?;
    }
    Ok(d)
}

pub fn validate_probabilities(p: &[f64], n: usize) -> Result<()> {
    check_dim(n, p.len())?;
    if let Some(&bad) = p.iter().find(|&&x| !x.is_finite() || x < -1e-12) {
        return Err(Error::InvalidProbabilities(format!("entry {bad} is negative")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProbabilities(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// `u†|φ⟩⟨φ|u`.
fn conjugated_projector(u: &UnitaryOperator, phi: &PureState) -> ComplexMatrix {
    let v = u.matrix().adjoint() * phi.amplitudes();
    &v * v.adjoint()
}

/// Left-hand side of the RSP equation.
pub fn rsp_operator(
    unitaries: &[UnitaryOperator],
    p: &[f64],
    phi: &PureState,
) -> Result<ComplexMatrix> {
    let d = family_dim(unitaries)?;
    check_dim(d, phi.dim())?;
    check_dim(unitaries.len(), p.len())?;
    let mut acc = ComplexMatrix::zeros(d, d);
    for (u, &pm) in unitaries.iter().zip(p) {
        acc += conjugated_projector(u, phi).scale(pm);
    }
    Ok(acc)
}

/// `‖Σ_m p_m u_m†|φ⟩⟨φ|u_m − I/d‖_F`.
pub fn rsp_residual(unitaries: &[UnitaryOperator], p: &[f64], phi: &PureState) -> Result<f64> {
    validate_probabilities(p, unitaries.len())?;
    let lhs = rsp_operator(unitaries, p, phi)?;
    let d = lhs.nrows();
    Ok((lhs - ComplexMatrix::identity(d, d).unscale(d as f64)).norm())
}

/// Real coordinates of a Hermitian matrix: the diagonal, then `√2·Re` and
/// `√2·Im` of the strict upper triangle, so the Euclidean norm equals the
/// Frobenius norm.
pub fn hermitian_coordinates(h: &ComplexMatrix) -> DVector<f64> {
    let d = h.nrows();
    let mut out = Vec::with_capacity(d * d);
    out.extend((0..d).map(|i| h[(i, i)].re));
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(s2 * h[(i, j)].re);
            out.push(s2 * h[(i, j)].im);
        }
    }
    DVector::from_vec(out)
}

/// The RSP equation at `phi` as `A p = b` with `d²` real rows.
pub fn linear_system(
    unitaries: &[UnitaryOperator],
    phi: &PureState,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = family_dim(unitaries)?;
    check_dim(d, phi.dim())?;
    let cols: Vec<DVector<f64>> = unitaries
        .iter()
        .map(|u| hermitian_coordinates(&conjugated_projector(u, phi)))
        .collect();
    let a = DMatrix::from_columns(&cols);
    let b = hermitian_coordinates(&ComplexMatrix::identity(d, d).unscale(d as f64));
    Ok((a, b))
}

/// Minimizes the RSP residual at `phi` over the probability simplex.
pub fn solve_probabilities(
    unitaries: &[UnitaryOperator],
    phi: &PureState,
    tol: f64,
) -> Result<FeasibilityResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidProbabilities(format!("tolerance must be positive, got {tol}")));
    }
    let (a, b) = linear_system(unitaries, phi)?;
    let fit = simplex_least_squares(&a, &b);
    Ok(FeasibilityResult::from_fit(fit.p, fit.residual, tol))
}

/// Input-state distribution for scans and demos.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSampler {
    /// Unitarily invariant over the whole space.
    Haar,
    /// Qubit states on the Bloch equator, uniform in azimuth.
    Equatorial,
    /// Qubit Haar states at least [`GENERIC_EXCLUSION`] away from
    /// `χxχyχz = 0`.
    Generic,
}

impl StateSampler {
    pub fn sample<R: Rng + ?Sized>(self, d: usize, rng: &mut R) -> Result<PureState> {
        match self {
            StateSampler::Haar => haar_random_state(d, rng),
            StateSampler::Equatorial => {
                require_qubit(d, "equatorial sampler")?;
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                Ok(equatorial_state(theta))
            }
            StateSampler::Generic => {
                require_qubit(d, "generic sampler")?;
                loop {
                    let s = haar_random_state(2, rng)?;
                    let chi = BlochVector::from_pure(&s)?;
                    if chi.xyz_product().abs() > GENERIC_EXCLUSION {
                        return Ok(s);
                    }
                }
            }
        }
    }
}

fn require_qubit(d: usize, what: &str) -> Result<()> {
    if d != 2 {
        return Err(Error::InvalidDimension(format!("{what} requires d = 2, got {d}")));
    }
    Ok(())
}

/// `(|0⟩ + e^{iθ}|1⟩)/√2`, Bloch vector `(cos θ, sin θ, 0)`.
pub fn equatorial_state(theta: f64) -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::normalized(vec![C64::new(s, 0.0), C64::from_polar(s, theta)])
        .expect("equatorial amplitudes are nonzero")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub d: usize,
    pub count: usize,
    pub feasible_fraction: f64,
    pub max_residual: f64,
    pub min_residual: f64,
    pub worst_state: PureState,
    pub seed: u64,
}

/// Runs [`solve_probabilities`] on `count` sampled states. Sample `i` draws
/// from its own generator stream, so the report does not depend on how the
/// work is scheduled.
pub fn feasibility_scan(
    unitaries: &[UnitaryOperator],
    sampler: StateSampler,
    count: usize,
    tol: f64,
    seed: u64,
) -> Result<ScanReport> {
    if count == 0 {
        return Err(Error::InvalidDimension("scan count must be at least 1".into()));
    }
    let d = family_dim(unitaries)?;
    let outcomes: Vec<(PureState, FeasibilityResult)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i);
            let phi = sampler.sample(d, &mut rng)?;
            let res = solve_probabilities(unitaries, &phi, tol)?;
            Ok((phi, res))
        })
        .collect::<Result<_>>()?;

    let feasible = outcomes.iter().filter(|(_, r)| r.is_feasible()).count();
    let mut worst = 0;
    let mut min_residual = f64::INFINITY;
    for (i, (_, r)) in outcomes.iter().enumerate() {
        if r.min_residual > outcomes[worst].1.min_residual {
            worst = i;
        }
        min_residual = min_residual.min(r.min_residual);
    }
    Ok(ScanReport {
        n: unitaries.len(),
        d,
        count,
        feasible_fraction: feasible as f64 / count as f64,
        max_residual: outcomes[worst].1.min_residual,
        min_residual,
        worst_state: outcomes[worst].0.clone(),
        seed,
    })
}

/// `X_{m; l·d + j} = √(d p_m) ⟨l|u_m|j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct XMatrix {
    pub n: usize,
    pub d: usize,
    pub entries: ComplexMatrix,
}

impl XMatrix {
    /// `X†X`, a `d² × d²` matrix.
    pub fn gram(&self) -> ComplexMatrix {
        self.entries.adjoint() * &self.entries
    }

    /// `XX†`, an `n × n` matrix.
    pub fn co_gram(&self) -> ComplexMatrix {
        &self.entries * self.entries.adjoint()
    }

    pub fn row_norm_sq(&self, m: usize) -> f64 {
        self.entries.row(m).norm_squared()
    }

    pub fn rank(&self) -> usize {
        self.entries
            .clone()
            .singular_values()
            .iter()
            .filter(|&&s| s > RANK_TOL)
            .count()
    }
}

pub fn build_x_matrix(unitaries: &[UnitaryOperator], p: &[f64]) -> Result<XMatrix> {
    let d = family_dim(unitaries)?;
    validate_probabilities(p, unitaries.len())?;
    let n = unitaries.len();
    let entries = ComplexMatrix::from_fn(n, d * d, |m, col| {
        let (l, j) = (col / d, col % d);
        unitaries[m].matrix()[(l, j)].scale((d as f64 * p[m].max(0.0)).sqrt())
    });
    Ok(XMatrix { n, d, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObliviousBoundReport {
    pub n: usize,
    pub d: usize,
    /// `X†X` as JSON matrix.
    pub gram: crate::io::MatrixJson,
    pub gram_defect: f64,
    pub is_identity: bool,
    pub bound_satisfied: bool,
    /// Filled when `is_identity` and `n = d²`.
    pub co_gram_is_identity: Option<bool>,
    pub uniform_probabilities: Option<bool>,
    pub trace_orthogonal: Option<bool>,
    pub classical_cost_bits: f64,
}

/// Oblivious-case analysis for a state-independent `p`.
pub fn oblivious_bound_report(
    unitaries: &[UnitaryOperator],
    p: &[f64],
) -> Result<ObliviousBoundReport> {
    let x = build_x_matrix(unitaries, p)?;
    let (n, d) = (x.n, x.d);
    let gram = x.gram();
    let gram_defect = (&gram - ComplexMatrix::identity(d * d, d * d)).norm();
    let is_identity = gram_defect <= GRAM_TOL;
    let (mut co_gram_is_identity, mut uniform, mut orthogonal) = (None, None, None);
    if is_identity && n == d * d {
        let co_defect = (x.co_gram() - ComplexMatrix::identity(n, n)).norm();
        co_gram_is_identity = Some(co_defect <= GRAM_TOL);
        let target = 1.0 / (d * d) as f64;
        uniform = Some(p.iter().all(|&pm| (pm - target).abs() <= GRAM_TOL));
        orthogonal = Some(trace_orthogonality_defect(unitaries)? <= GRAM_TOL);
    }
    Ok(ObliviousBoundReport {
        n,
        d,
        gram: (&gram).into(),
        gram_defect,
        is_identity,
        bound_satisfied: n >= d * d,
        co_gram_is_identity,
        uniform_probabilities: uniform,
        trace_orthogonal: orthogonal,
        classical_cost_bits: (n as f64).log2(),
    })
}

/// `max_{m,m'} |tr(u_m† u_m') − d δ_mm'|`.
pub fn trace_orthogonality_defect(unitaries: &[UnitaryOperator]) -> Result<f64> {
    let d = family_dim(unitaries)?;
    let mut worst: f64 = 0.0;
    for (i, a) in unitaries.iter().enumerate() {
        for (j, b) in unitaries.iter().enumerate() {
            let ip = crate::qmath::hs_inner(a.matrix(), b.matrix())?;
            let want = if i == j { C64::new(d as f64, 0.0) } else { ZERO };
            worst = worst.max((ip - want).norm());
        }
    }
    Ok(worst)
}

/// Rank of the `d × n` matrix with columns `u_m†|φ⟩`. Feasibility at `phi`
/// needs rank `d`.
pub fn completeness_rank(unitaries: &[UnitaryOperator], phi: &PureState) -> Result<usize> {
    let d = family_dim(unitaries)?;
    check_dim(d, phi.dim())?;
    let cols: Vec<_> = unitaries
        .iter()
        .map(|u| u.matrix().adjoint() * phi.amplitudes())
        .collect();
    let m = ComplexMatrix::from_columns(&cols);
    Ok(m.singular_values().iter().filter(|&&s| s > RANK_TOL).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::shift_family;
    use crate::qmath::{haar_random_unitary, pauli_matrices};

    fn paulis() -> Vec<UnitaryOperator> {
        let mut v = vec![UnitaryOperator::identity(2)];
        v.extend(
            pauli_matrices()
                .into_iter()
                .map(|m| UnitaryOperator::new(m).unwrap()),
        );
        v
    }

    #[test]
    fn residual_of_single_identity() {
        let phi = PureState::basis(2, 0).unwrap();
        let r = rsp_residual(&[UnitaryOperator::identity(2)], &[1.0], &phi).unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn residual_rejects_bad_lengths() {
        let phi = PureState::basis(2, 0).unwrap();
        assert!(rsp_residual(&paulis(), &[0.5, 0.5], &phi).is_err());
        assert!(rsp_residual(&paulis(), &[0.5, 0.5, 0.5, -0.5], &phi).is_err());
    }

    #[test]
    fn shift_family_residual_vanishes() {
        let fam = shift_family(3).unwrap();
        let p = vec![1.0 / 9.0; 9];
        let mut rng = seeded_rng(1, 0);
        for _ in 0..20 {
            let phi = haar_random_state(3, &mut rng).unwrap();
            assert!(rsp_residual(fam.unitaries(), &p, &phi).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn coordinates_preserve_frobenius_norm() {
        let mut rng = seeded_rng(2, 0);
        let u = haar_random_unitary(4, &mut rng);
        let h = u.matrix() + u.matrix().adjoint();
        assert!((hermitian_coordinates(&h).norm() - h.norm()).abs() < 1e-12);
    }

    #[test]
    fn pauli_family_feasible() {
        let mut rng = seeded_rng(3, 0);
        for _ in 0..20 {
            let phi = haar_random_state(2, &mut rng).unwrap();
            let res = solve_probabilities(&paulis(), &phi, DEFAULT_TOL).unwrap();
            assert!(res.is_feasible());
            assert!(res.min_residual <= 1e-10);
            let uniform = rsp_residual(&paulis(), &[0.25; 4], &phi).unwrap();
            assert!(uniform <= 1e-10);
        }
    }

    #[test]
    fn identity_and_sigma_x_infeasible_off_axis() {
        let fam = &paulis()[..2];
        let phi = equatorial_state(0.3); // χx = cos 0.3 ≠ 0
        let res = solve_probabilities(fam, &phi, DEFAULT_TOL).unwrap();
        assert_eq!(res.status, FeasibilityStatus::Infeasible);
        assert!(res.probabilities.is_none());
    }

    #[test]
    fn n_equals_d_is_infeasible() {
        let mut rng = seeded_rng(4, 0);
        for _ in 0..10 {
            let fam: Vec<_> = (0..3).map(|_| haar_random_unitary(3, &mut rng)).collect();
            let phi = haar_random_state(3, &mut rng).unwrap();
            assert!(!solve_probabilities(&fam, &phi, DEFAULT_TOL).unwrap().is_feasible());
        }
    }

    #[test]
    fn scan_examples() {
        let fam = shift_family(2).unwrap();
        let r = feasibility_scan(fam.unitaries(), StateSampler::Haar, 200, DEFAULT_TOL, 5).unwrap();
        assert_eq!(r.feasible_fraction, 1.0);
        let triple = &paulis()[..3];
        let r = feasibility_scan(triple, StateSampler::Generic, 200, DEFAULT_TOL, 5).unwrap();
        assert_eq!(r.feasible_fraction, 0.0);
        let a = feasibility_scan(triple, StateSampler::Haar, 1, DEFAULT_TOL, 9).unwrap();
        let b = feasibility_scan(triple, StateSampler::Haar, 1, DEFAULT_TOL, 9).unwrap();
        assert_eq!(a, b);
        assert!(feasibility_scan(triple, StateSampler::Haar, 0, DEFAULT_TOL, 9).is_err());
    }

    #[test]
    fn x_matrix_examples() {
        let fam = shift_family(2).unwrap();
        let x = build_x_matrix(fam.unitaries(), &[0.25; 4]).unwrap();
        assert!((x.gram() - ComplexMatrix::identity(4, 4)).norm() < 1e-12);

        let x = build_x_matrix(&[UnitaryOperator::identity(2)], &[1.0]).unwrap();
        let s2 = 2f64.sqrt();
        let want = [s2, 0.0, 0.0, s2];
        for (z, w) in x.entries.iter().zip(want) {
            assert!((z - C64::new(w, 0.0)).norm() < 1e-15);
        }
        assert_eq!(x.rank(), 1);
        assert!((x.row_norm_sq(0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn x_matrix_row_norms() {
        let mut rng = seeded_rng(5, 0);
        let fam: Vec<_> = (0..5).map(|_| haar_random_unitary(3, &mut rng)).collect();
        let p = [0.1, 0.2, 0.3, 0.15, 0.25];
        let x = build_x_matrix(&fam, &p).unwrap();
        let mut total = 0.0;
        for (m, &pm) in p.iter().enumerate() {
            assert!((x.row_norm_sq(m) - 9.0 * pm).abs() < 1e-12);
            total += x.row_norm_sq(m);
        }
        assert!((total - 9.0).abs() < 1e-12);
    }

    #[test]
    fn bound_report_examples() {
        for d in [2, 3] {
            let fam = shift_family(d).unwrap();
            let p = vec![1.0 / (d * d) as f64; d * d];
            let r = oblivious_bound_report(fam.unitaries(), &p).unwrap();
            assert!(r.is_identity && r.bound_satisfied);
            assert_eq!(r.co_gram_is_identity, Some(true));
            assert_eq!(r.uniform_probabilities, Some(true));
            assert_eq!(r.trace_orthogonal, Some(true));
        }
        let r = oblivious_bound_report(&paulis()[..3], &[1.0 / 3.0; 3]).unwrap();
        assert!(!r.is_identity && !r.bound_satisfied);

        let fam = shift_family(2).unwrap();
        let r = oblivious_bound_report(fam.unitaries(), &[0.4, 0.2, 0.2, 0.2]).unwrap();
        assert!(!r.is_identity);
        assert_eq!(r.co_gram_is_identity, None);
    }

    #[test]
    fn completeness_rank_examples() {
        let phi = PureState::basis(2, 0).unwrap();
        assert_eq!(completeness_rank(&[UnitaryOperator::identity(2)], &phi).unwrap(), 1);
        let sz = UnitaryOperator::new(pauli_matrices()[2].clone()).unwrap();
        assert_eq!(
            completeness_rank(&[UnitaryOperator::identity(2), sz], &phi).unwrap(),
            1
        );
        let mut rng = seeded_rng(6, 0);
        for _ in 0..10 {
            let phi = haar_random_state(2, &mut rng).unwrap();
            assert_eq!(completeness_rank(&paulis(), &phi).unwrap(), 2);
        }
    }
}
