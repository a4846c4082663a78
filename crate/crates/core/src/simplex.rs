//! Least squares over the probability simplex:
//! minimize `‖A p − b‖` subject to `p ≥ 0`, `Σ p = 1`.
//!
//! Up to [`ENUMERATION_LIMIT`] columns the minimum is found exactly by
//! enumerating every support set and solving the affine least-squares
//! problem on it. The optimal set is a polytope whose vertices have a unique
//! affine solution on their support, so the enumeration always visits one.
//! Larger problems run accelerated projected gradient and then re-solve
//! exactly on the support it identifies.

use nalgebra::{DMatrix, DVector};

/// Largest column count solved by exhaustive support enumeration.
pub const ENUMERATION_LIMIT: usize = 8;
pub const PG_MAX_ITERS: usize = 100_000;
pub const PG_REL_TOL: f64 = 1e-12;

/// Entries above `-NEG_SLACK` count as nonnegative.
const NEG_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexFit {
    pub p: DVector<f64>,
    pub residual: f64,
}

pub fn residual(a: &DMatrix<f64>, b: &DVector<f64>, p: &DVector<f64>) -> f64 {
    (a * p - b).norm()
}

pub fn simplex_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> SimplexFit {
    let n = a.ncols();
    assert!(n >= 1, "simplex least squares needs at least one column");
    assert_eq!(a.nrows(), b.len());
    if n <= ENUMERATION_LIMIT {
        enumerate_supports(a, b)
    } else {
        projected_gradient(a, b)
    }
}

fn enumerate_supports(a: &DMatrix<f64>, b: &DVector<f64>) -> SimplexFit {
    let n = a.ncols();
    let mut best: Option<SimplexFit> = None;
    let mut support = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        support.clear();
        support.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        if let Some(fit) = solve_on_support(a, b, &support) {
            if best.as_ref().is_none_or(|cur| fit.residual < cur.residual) {
                best = Some(fit);
            }
        }
    }
    best.expect("singleton supports are always admissible")
}

/// Unconstrained minimizer of `‖A p − b‖` on the affine hull of the face
/// spanned by `support` (entries outside `support` are zero).
fn affine_solution(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> Option<DVector<f64>> {
    let n = a.ncols();
    let pivot = support[0];
    let mut p = DVector::zeros(n);
    if support.len() == 1 {
        p[pivot] = 1.0;
        return Some(p);
    }
    // p_pivot = 1 − Σ z  ⇒  (A_rest − a_pivot 1ᵀ) z ≈ b − a_pivot
    let rest = &support[1..];
    let a_pivot = a.column(pivot);
    let reduced = DMatrix::from_fn(a.nrows(), rest.len(), |r, c| a[(r, rest[c])] - a_pivot[r]);
    let target = b - a_pivot;
    let svd = reduced.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-12).max(f64::MIN_POSITIVE);
    let z = svd.solve(&target, eps).ok()?;
    let mut sum = 0.0;
    for (k, &idx) in rest.iter().enumerate() {
        p[idx] = z[k];
        sum += z[k];
    }
    p[pivot] = 1.0 - sum;
    p.iter().all(|x| x.is_finite()).then_some(p)
}

/// Affine least squares restricted to `support`; `None` when the minimizer
/// leaves the nonnegative orthant.
fn solve_on_support(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> Option<SimplexFit> {
    let mut p = affine_solution(a, b, support)?;
    if support.iter().any(|&i| p[i] < -NEG_SLACK) {
        return None;
    }
    clamp_to_simplex(&mut p);
    let residual = residual(a, b, &p);
    Some(SimplexFit { p, residual })
}

/// Active-set descent from a feasible `x`: move toward the face minimizer
/// until a coordinate hits zero, drop it, repeat. The residual never
/// increases along the way.
fn refine_support(a: &DMatrix<f64>, b: &DVector<f64>, mut x: DVector<f64>) -> DVector<f64> {
    let n = x.len();
    for _ in 0..n {
        let support: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0).collect();
        let Some(z) = affine_solution(a, b, &support) else {
            break;
        };
        let blocking = support
            .iter()
            .filter(|&&i| z[i] < 0.0)
            .map(|&i| (i, x[i] / (x[i] - z[i])))
            .min_by(|l, r| l.1.total_cmp(&r.1));
        match blocking {
            None => {
                x = z;
                break;
            }
            Some((hit, alpha)) => {
                x = &x + (&z - &x).scale(alpha);
                x[hit] = 0.0;
                x.iter_mut().for_each(|v| {
                    if *v < 1e-15 {
                        *v = 0.0
                    }
                });
            }
        }
    }
    clamp_to_simplex(&mut x);
    x
}

fn clamp_to_simplex(p: &mut DVector<f64>) {
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let s = p.sum();
    p.unscale_mut(s);
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

fn projected_gradient(a: &DMatrix<f64>, b: &DVector<f64>) -> SimplexFit {
    let n = a.ncols();
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    let lipschitz = ata.clone().symmetric_eigenvalues().max().max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;
    let objective = |p: &DVector<f64>| 0.5 * (a * p - b).norm_squared();

    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(&x);
    for _ in 0..PG_MAX_ITERS {
        if f_prev == 0.0 {
            break;
        }
        let grad = &ata * &y - &atb;
        let x_next = project_to_simplex(&(&y - grad.scale(step)));
        let f_next = objective(&x_next);
        if f_next > f_prev {
            // restart momentum
            y = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&x_next - &x).scale((t - 1.0) / t_next);
        let converged = (f_prev - f_next) <= PG_REL_TOL * f_prev.max(f64::MIN_POSITIVE);
        x = x_next;
        t = t_next;
        f_prev = f_next;
        if converged {
            break;
        }
    }

    let pg = SimplexFit {
        residual: residual(a, b, &x),
        p: x.clone(),
    };
    // snap tiny entries so the active set matches what PG identified
    x.iter_mut().for_each(|v| {
        if *v <= 1e-10 {
            *v = 0.0
        }
    });
    clamp_to_simplex(&mut x);
    let refined = refine_support(a, b, x);
    let refined = SimplexFit {
        residual: residual(a, b, &refined),
        p: refined,
    };
    if refined.residual < pg.residual {
        refined
    } else {
        pg
    }
}
