//! End-to-end simulation of deterministic remote state preparation.
//!
//! Alice and Bob share `(1/√d) Σ_k |k⟩⊗|k⟩`. Given a solution `p` of the RSP
//! equation at the target `|φ⟩`, Alice measures the POVM
//! `E_m = d p_m |φ̄_m⟩⟨φ̄_m|` with `|φ_m⟩ = u_m†|φ⟩` and the bar denoting
//! entrywise complex conjugation. She sends `m`; Bob applies `u_m`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    check_dim, max_entangled, partial_trace, partial_trace_matrix, tensor, ComplexMatrix,
    DensityOperator, PureState, Subsystem, UnitaryOperator, C64, ZERO,
};
use crate::rsp_eq::{family_dim, solve_probabilities, validate_probabilities, DEFAULT_TOL};

/// `‖Σ_m E_m − I‖_F` accepted by [`Povm::new`].
pub const POVM_TOL: f64 = 1e-8;
/// `‖Σ_m E_m − I‖_F` beyond which [`build_povm`] refuses `p`.
pub const BUILD_TOL: f64 = 1e-6;
/// Outcomes with probability at or below this have no conditional state.
pub const MIN_OUTCOME_PROB: f64 = 1e-12;

/// Closed-form `p(φ)` for a state-dependent rule.
pub type ClosedForm = Arc<dyn Fn(&PureState) -> Result<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum ProbRule {
    /// `p_m = 1/n`.
    Uniform,
    /// State-independent vector.
    Fixed(Vec<f64>),
    /// Uses `closed_form` when present, otherwise the simplex solver at `tol`.
    StateDependent {
        closed_form: Option<ClosedForm>,
        tol: f64,
    },
}

impl ProbRule {
    pub fn solver() -> Self {
        ProbRule::StateDependent {
            closed_form: None,
            tol: DEFAULT_TOL,
        }
    }

    pub fn closed_form(f: ClosedForm) -> Self {
        ProbRule::StateDependent {
            closed_form: Some(f),
            tol: DEFAULT_TOL,
        }
    }
}

impl fmt::Debug for ProbRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbRule::Uniform => write!(f, "Uniform"),
            ProbRule::Fixed(p) => f.debug_tuple("Fixed").field(p).finish(),
            ProbRule::StateDependent { closed_form, tol } => f
                .debug_struct("StateDependent")
                .field("closed_form", &closed_form.is_some())
                .field("tol", tol)
                .finish(),
        }
    }
}

/// A family of `n` correction unitaries on `C^d` with a probability rule.
#[derive(Clone, Debug)]
pub struct RspProtocol {
    unitaries: Vec<UnitaryOperator>,
    rule: ProbRule,
}

impl RspProtocol {
    pub fn new(unitaries: Vec<UnitaryOperator>, rule: ProbRule) -> Result<Self> {
        family_dim(&unitaries)?;
        if let ProbRule::Fixed(p) = &rule {
            validate_probabilities(p, unitaries.len())?;
        }
        Ok(Self { unitaries, rule })
    }

    pub fn d(&self) -> usize {
        self.unitaries[0].dim()
    }

    pub fn n(&self) -> usize {
        self.unitaries.len()
    }

    pub fn unitaries(&self) -> &[UnitaryOperator] {
        &self.unitaries
    }

    pub fn prob_rule(&self) -> &ProbRule {
        &self.rule
    }

    pub fn with_rule(mut self, rule: ProbRule) -> Result<Self> {
        if let ProbRule::Fixed(p) = &rule {
            validate_probabilities(p, self.n())?;
        }
        self.rule = rule;
        Ok(self)
    }

    /// Keeps the first `n` members with a uniform rule.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::OutOfRange {
                name: "n",
                value: n,
                bound: self.n() + 1,
            });
        }
        Self::new(self.unitaries[..n].to_vec(), ProbRule::Uniform)
    }

    /// Bits of classical communication, `log₂ n`.
    pub fn classical_cost(&self) -> f64 {
        (self.n() as f64).log2()
    }

    /// Resolves the probability vector for `phi`. A solver-backed rule
    /// returns its minimizer even when infeasible, so that [`build_povm`]
    /// is the single point of rejection.
    pub fn probabilities(&self, phi: &PureState) -> Result<Vec<f64>> {
        check_dim(self.d(), phi.dim())?;
        match &self.rule {
            ProbRule::Uniform => Ok(vec![1.0 / self.n() as f64; self.n()]),
            ProbRule::Fixed(p) => Ok(p.clone()),
            ProbRule::StateDependent {
                closed_form: Some(f),
                ..
            } => f(phi),
            ProbRule::StateDependent {
                closed_form: None,
                tol,
            } => Ok(solve_probabilities(&self.unitaries, phi, *tol)?.minimizer),
        }
    }
}

/// Positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let povm = Self::checked_psd(elements)?;
        let defect = povm.completeness_defect();
        if defect > POVM_TOL {
            return Err(Error::NotRspSolution { defect });
        }
        Ok(povm)
    }

    fn checked_psd(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let d = elements
            .first()
            .ok_or_else(|| Error::InvalidDimension("POVM has no elements".into()))?
            .nrows();
        for e in &elements {
            if !e.is_square() {
                return Err(Error::NotSquare(e.nrows(), e.ncols()));
            }
            check_dim(d, e.nrows())?;
            let herm = crate::qmath::hermiticity_defect(e);
            if herm > crate::qmath::STATE_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let min = crate::qmath::hermitian_eigenvalues(e).min();
            if min < -crate::qmath::STATE_TOL {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// `‖Σ_m E_m − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .elements
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, e| acc + e);
        (sum - ComplexMatrix::identity(d, d)).norm()
    }
}

/// `|φ̄⟩ = Σ_k |k⟩⟨φ|k⟩`: entrywise complex conjugate.
pub fn conjugate_state(phi: &PureState) -> PureState {
    PureState::new(phi.amplitudes().iter().map(|c| c.conj()).collect())
        .expect("conjugation preserves the norm")
}

/// Alice's measurement `E_m = d p_m |φ̄_m⟩⟨φ̄_m|`, `|φ_m⟩ = u_m†|φ⟩`.
pub fn build_povm(phi: &PureState, proto: &RspProtocol, p: &[f64]) -> Result<Povm> {
    check_dim(proto.d(), phi.dim())?;
    validate_probabilities(p, proto.n())?;
    let d = proto.d() as f64;
    let elements = proto
        .unitaries()
        .iter()
        .zip(p)
        .map(|(u, &pm)| {
            let phi_m = phi.evolve(&u.adjoint())?;
            Ok(conjugate_state(&phi_m).outer().scale(d * pm.max(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let povm = Povm::checked_psd(elements)?;
    let defect = povm.completeness_defect();
    if defect > BUILD_TOL {
        return Err(Error::NotRspSolution { defect });
    }
    Ok(povm)
}

fn resource_marginal(d: usize) -> Result<DensityOperator> {
    partial_trace(&max_entangled(d)?.projector(), Subsystem::A, d, d)
}

/// `p_m = tr(ρ_0^A E_m)` with `ρ_0^A` the resource state's marginal on A.
pub fn alice_outcome_distribution(povm: &Povm) -> Result<Vec<f64>> {
    let rho_a = resource_marginal(povm.dim())?;
    Ok(povm
        .elements()
        .iter()
        .map(|e| (rho_a.matrix() * e).trace().re)
        .collect())
}

/// Bob's state after Alice reports `m` (0-based):
/// `tr_A[(E_m ⊗ I) ρ_0^AB] / p_m`.
pub fn post_measurement_state(povm: &Povm, m: usize) -> Result<DensityOperator> {
    let d = povm.dim();
    let e = povm.elements().get(m).ok_or(Error::OutOfRange {
        name: "m",
        value: m,
        bound: povm.len(),
    })?;
    let resource = max_entangled(d)?.outer();
    let joint = tensor(e, &ComplexMatrix::identity(d, d)) * resource;
    let unnormalized = partial_trace_matrix(&joint, Subsystem::B, d, d)?;
    let pm = unnormalized.trace().re;
    if pm <= MIN_OUTCOME_PROB {
        return Err(Error::ZeroProbabilityOutcome(m));
    }
    // tr_A[(E ⊗ I)ρ] is Hermitian in exact arithmetic
    let rho = (&unnormalized + unnormalized.adjoint()).unscale(2.0 * pm);
    Ok(DensityOperator::from_raw(rho))
}

/// `u ρ u†`.
pub fn bob_correct(rho: &DensityOperator, u: &UnitaryOperator) -> Result<DensityOperator> {
    u.conjugate(rho)
}

/// Record of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RspTranscript {
    pub input_state: PureState,
    /// 1-based message index.
    pub outcome: usize,
    pub outcome_probability: f64,
    pub pre_correction_state: DensityOperator,
    pub post_correction_state: DensityOperator,
    pub fidelity: f64,
    pub classical_cost: f64,
}

/// Inverse-CDF draw from `probs`; returns a 0-based index with positive mass.
pub fn sample_outcome<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (m, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = m;
        if u < acc {
            return m;
        }
    }
    last
}

/// Full run: resolve `p`, measure, send `m`, correct.
pub fn run_rsp<R: Rng + ?Sized>(
    phi: &PureState,
    proto: &RspProtocol,
    rng: &mut R,
) -> Result<RspTranscript> {
    let p = proto.probabilities(phi)?;
    let povm = build_povm(phi, proto, &p)?;
    let dist = alice_outcome_distribution(&povm)?;
    let m = sample_outcome(&dist, rng);
    let pre = post_measurement_state(&povm, m)?;
    let post = bob_correct(&pre, &proto.unitaries()[m])?;
    let fidelity = post.fidelity_with(phi)?;
    Ok(RspTranscript {
        input_state: phi.clone(),
        outcome: m + 1,
        outcome_probability: dist[m],
        pre_correction_state: pre,
        post_correction_state: post,
        fidelity,
        classical_cost: proto.classical_cost(),
    })
}

/// Post-correction fidelity of every branch; `None` for zero-probability
/// outcomes.
pub fn branch_fidelities(phi: &PureState, proto: &RspProtocol) -> Result<Vec<Option<f64>>> {
    let p = proto.probabilities(phi)?;
    let povm = build_povm(phi, proto, &p)?;
    let dist = alice_outcome_distribution(&povm)?;
    dist.iter()
        .enumerate()
        .map(|(m, &pm)| {
            if pm <= MIN_OUTCOME_PROB {
                return Ok(None);
            }
            let pre = post_measurement_state(&povm, m)?;
            let post = bob_correct(&pre, &proto.unitaries()[m])?;
            Ok(Some(post.fidelity_with(phi)?))
        })
        .collect()
}

/// Clock-and-shift unitary `Z^p X^x`: `|k⟩ ↦ ω^{p(k+x)} |k + x mod d⟩`,
/// `ω = e^{2πi/d}`. Matches `e^{i(2π/d)p x̂} e^{−i(2π/d)x p̂}` up to a
/// global phase.
pub fn shift_operator(p: usize, x: usize, d: usize) -> Result<UnitaryOperator> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be positive".into()));
    }
    for (name, value) in [("p", p), ("x", x)] {
        if value >= d {
            return Err(Error::OutOfRange {
                name,
                value,
                bound: d,
            });
        }
    }
    let omega = |k: usize| C64::from_polar(1.0, std::f64::consts::TAU * ((p * k) % d) as f64 / d as f64);
    let mut m = ComplexMatrix::from_element(d, d, ZERO);
    for k in 0..d {
        let row = (k + x) % d;
        m[(row, k)] = omega(row);
    }
    Ok(UnitaryOperator::from_raw(m))
}

/// All `d²` shift operators, message `m = p·d + x`, uniform probabilities.
pub fn shift_family(d: usize) -> Result<RspProtocol> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("shift family needs d >= 2, got {d}")));
    }
    let mut unitaries = Vec::with_capacity(d * d);
    for p in 0..d {
        for x in 0..d {
            unitaries.push(shift_operator(p, x, d)?);
        }
    }
    RspProtocol::new(unitaries, ProbRule::Uniform)
}

/// `{I, σx, σy, σz}` with uniform probabilities.
pub fn pauli_family() -> RspProtocol {
    let mut unitaries = vec![UnitaryOperator::identity(2)];
    unitaries.extend(
        crate::qmath::pauli_matrices()
            .into_iter()
            .map(UnitaryOperator::from_raw),
    );
    RspProtocol::new(unitaries, ProbRule::Uniform).expect("Pauli family is well formed")
}
