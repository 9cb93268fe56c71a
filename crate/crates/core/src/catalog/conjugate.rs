//! `f̃(x) = f(Ux)` for orthogonal `U`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{AuxFunction, Attractor, LimitSet, Objective, ProblemSpec};
use crate::error::{Error, Result};
use crate::math::{abs, sqrt};
use crate::vector::{mat_t_vec, mat_vec};

struct Conjugated {
    inner: Arc<dyn Objective>,
    u: Arc<Vec<f64>>,
    n: usize,
}

impl Conjugated {
    fn pull(&self, v: Vec<f64>) -> Vec<f64> {
        mat_t_vec(&self.u, self.n, &v)
    }

    fn pull_set(&self, l: LimitSet) -> LimitSet {
        LimitSet {
            vectors: l.vectors.into_iter().map(|v| self.pull(v)).collect(),
            exact: l.exact,
        }
    }
}

impl Objective for Conjugated {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&mat_vec(&self.u, self.n, x))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(&mat_vec(&self.u, self.n, x)).map(|g| self.pull(g))
    }

    fn bouligand_limits(&self, x: &[f64]) -> Option<LimitSet> {
        self.inner.bouligand_limits(&mat_vec(&self.u, self.n, x)).map(|l| self.pull_set(l))
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        self.inner.normalized_limits(&mat_vec(&self.u, self.n, x)).map(|l| self.pull_set(l))
    }
}

fn conjugate_aux(a: &AuxFunction, u: Arc<Vec<f64>>, n: usize) -> AuxFunction {
    let (v, u1) = (a.value.clone(), u.clone());
    let mut out = AuxFunction::new(a.name.clone(), Arc::new(move |x: &[f64]| v(&mat_vec(&u1, n, x))));
    if let Some(g) = a.grad.clone() {
        let u2 = u.clone();
        out = out.with_grad(Arc::new(move |x: &[f64]| g(&mat_vec(&u2, n, x)).map(|g| mat_t_vec(&u2, n, &g))));
    }
    if let Some(h) = a.hess.clone() {
        let u3 = u;
        out = out.with_hess(Arc::new(move |x: &[f64]| {
            let h = h(&mat_vec(&u3, n, x))?;
            // Uᵀ H U
            let mut hu = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    hu[i * n + j] = (0..n).map(|k| h[i * n + k] * u3[k * n + j]).sum();
                }
            }
            let mut out = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = (0..n).map(|k| u3[k * n + i] * hu[k * n + j]).sum();
                }
            }
            Some(out)
        }));
    }
    out
}

/// `‖UᵀU − I‖_F` for a row-major square matrix.
pub fn orthogonality_residual(u: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| u[k * n + i] * u[k * n + j]).sum::<f64>() - if i == j { 1.0 } else { 0.0 };
            s += v * v;
        }
    }
    sqrt(s)
}

/// The problem in the coordinates `x̃ = Uᵀx`: `f̃ = f∘U`, `∇f̃ = Uᵀ∇f(U·)`,
/// auxiliary and conserved functions composed the same way, and sets mapped
/// through `Uᵀ`. `u` is row-major `n × n`.
pub fn orthogonal_conjugate(problem: &ProblemSpec, u: &[f64]) -> Result<ProblemSpec> {
    let n = problem.dim;
    if u.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: u.len(),
        });
    }
    let residual = orthogonality_residual(u, n);
    if !(residual <= 1e-12) {
        return Err(Error::NotOrthogonal { residual });
    }
    let ua = Arc::new(u.to_vec());
    let ut: Vec<f64> = (0..n * n).map(|k| u[(k % n) * n + k / n]).collect();
    let mut p = problem.clone();
    p.objective = Arc::new(Conjugated {
        inner: problem.objective.clone(),
        u: ua.clone(),
        n,
    });
    p.g_list = problem.g_list.iter().map(|g| conjugate_aux(g, ua.clone(), n)).collect();
    p.conserved = problem.conserved.iter().map(|g| conjugate_aux(g, ua.clone(), n)).collect();
    p.minima = problem.minima.as_ref().map(|s| s.map_linear(&ut)).transpose()?;
    p.attractor = match &problem.attractor {
        Some(a) => Some(Attractor {
            set: a.set.map_linear(&ut)?,
            order: a.order,
        }),
        None => None,
    };
    let (lo, hi) = &problem.bounded_box;
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let c = mat_vec(&ut, n, &mid);
    let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| abs(ut[i * n + j]) * half[j]).sum()).collect();
    p.bounded_box = (c.iter().zip(&w).map(|(c, w)| c - w).collect(), c.iter().zip(&w).map(|(c, w)| c + w).collect());
    p.lyapunov_region = problem.lyapunov_region.as_ref().and_then(|r| r.map_orthogonal(&ut).ok());
    p.basin = problem.basin.as_ref().and_then(|r| r.map_orthogonal(&ut).ok());
    p.params.push(("U".into(), super::families::join(u)));
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_problem;

    #[test]
    fn identity_is_a_no_op() {
        let p = get_problem("parabola").unwrap();
        let q = orthogonal_conjugate(&p, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        for x in [[0.3, 0.2], [-1.0, 0.5], [0.0, 0.0]] {
            assert_eq!(p.f(&x), q.f(&x));
            assert_eq!(p.gradient(&x), q.gradient(&x));
        }
        assert_eq!(q.bounded_box, p.bounded_box);
    }

    #[test]
    fn non_orthogonal_matrix_is_rejected() {
        let p = get_problem("parabola").unwrap();
        match orthogonal_conjugate(&p, &[1.0, 0.1, 0.0, 1.0]) {
            Err(Error::NotOrthogonal { residual }) => assert!(residual > 0.09),
            other => panic!("{other:?}"),
        }
    }
}
