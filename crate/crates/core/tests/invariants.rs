//! Cross-module invariants checked on random instances.

use rand::Rng;
use rsplab::protocol::{alice_outcome_distribution, build_povm, post_measurement_state, shift_family};
use rsplab::qmath::{
    haar_random_state, haar_random_unitary, max_entangled, partial_trace, seeded_rng,
    ComplexMatrix, Subsystem,
};
use rsplab::rsp_eq::{
    build_x_matrix, feasibility_scan, oblivious_bound_report, rsp_residual, solve_probabilities,
    StateSampler, DEFAULT_TOL,
};

fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[test]
fn solver_minimum_is_never_beaten() {
    let mut rng = seeded_rng(11, 0);
    for _ in 0..20 {
        let d = rng.random_range(2..4);
        let n = rng.random_range(1..7);
        let fam: Vec<_> = (0..n).map(|_| haar_random_unitary(d, &mut rng)).collect();
        let phi = haar_random_state(d, &mut rng).unwrap();
        let res = solve_probabilities(&fam, &phi, DEFAULT_TOL).unwrap();
        let at_min = rsp_residual(&fam, &res.minimizer, &phi).unwrap();
        assert!((at_min - res.min_residual).abs() < 1e-12);
        for _ in 0..1000 {
            let p = random_simplex(n, &mut rng);
            assert!(rsp_residual(&fam, &p, &phi).unwrap() >= res.min_residual - 1e-9);
        }
    }
}

#[test]
fn gram_identity_needs_d_squared_members() {
    let mut rng = seeded_rng(12, 0);
    for _ in 0..200 {
        let d = rng.random_range(2..4);
        let n = rng.random_range(1..d * d);
        let fam: Vec<_> = (0..n).map(|_| haar_random_unitary(d, &mut rng)).collect();
        let p = random_simplex(n, &mut rng);
        let x = build_x_matrix(&fam, &p).unwrap();
        assert!(x.rank() <= n);
        let r = oblivious_bound_report(&fam, &p).unwrap();
        assert!(!r.is_identity && !r.bound_satisfied);
    }
    // the truncated shift family loses the identity as soon as a member goes
    for d in 2..=4 {
        let fam = shift_family(d).unwrap();
        let n = d * d - 1;
        let p = vec![1.0 / n as f64; n];
        assert!(!oblivious_bound_report(&fam.unitaries()[..n], &p).unwrap().is_identity);
    }
}

#[test]
fn bob_marginal_is_unchanged_by_alice() {
    // Σ_m p_m ρ_m^B equals Bob's half of the resource, whatever the family
    let mut rng = seeded_rng(13, 0);
    for d in 2..=4 {
        let proto = shift_family(d).unwrap();
        let bob = partial_trace(&max_entangled(d).unwrap().projector(), Subsystem::B, d, d).unwrap();
        for _ in 0..10 {
            let phi = haar_random_state(d, &mut rng).unwrap();
            let p = vec![1.0 / (d * d) as f64; d * d];
            let povm = build_povm(&phi, &proto, &p).unwrap();
            let dist = alice_outcome_distribution(&povm).unwrap();
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut avg = ComplexMatrix::zeros(d, d);
            for (m, &pm) in dist.iter().enumerate() {
                avg += post_measurement_state(&povm, m).unwrap().matrix().scale(pm);
            }
            assert!((avg - bob.matrix()).norm() < 1e-10);
        }
    }
}

#[test]
fn scans_are_deterministic() {
    let fam = shift_family(2).unwrap();
    let mut rng = seeded_rng(14, 0);
    let generic: Vec<_> = (0..3).map(|_| haar_random_unitary(2, &mut rng)).collect();
    for (us, sampler) in [
        (fam.unitaries().to_vec(), StateSampler::Haar),
        (generic.clone(), StateSampler::Generic),
        (generic, StateSampler::Equatorial),
    ] {
        let a = feasibility_scan(&us, sampler, 64, DEFAULT_TOL, 5).unwrap();
        let b = feasibility_scan(&us, sampler, 64, DEFAULT_TOL, 5).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
