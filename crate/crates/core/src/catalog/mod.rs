//! Example problems: objectives with closed-form gradients and declared limit
//! sets on their nonsmooth loci, auxiliary functions, conserved quantities and
//! the known minimum and attractor sets.

mod conjugate;
mod families;
mod grammar;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use conjugate::orthogonal_conjugate;
pub use families::{bilinear_conserved, ConservedFamily};
pub use grammar::{get_problem, parse_problem_id, ProblemId, PROBLEM_NAMES};

use crate::fields::{normalized_field, Field};
use crate::region::Region;
use crate::set::{ScalarFn, SetDescriptor};

pub type VectorFn = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// Finite limit set of gradients (or normalized gradients) at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSet {
    pub vectors: Vec<Vec<f64>>,
    pub exact: bool,
}

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// `None` off the smooth locus.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>>;

    /// Declared Bouligand limits at exceptional points.
    fn bouligand_limits(&self, _x: &[f64]) -> Option<LimitSet> {
        None
    }

    /// Declared limits of `∇f/|∇f|` at exceptional points.
    fn normalized_limits(&self, _x: &[f64]) -> Option<LimitSet> {
        None
    }
}

/// A scalar function with optional closed-form first and second derivatives.
/// Values may be `+∞`; a derivative returns `None` where it does not exist.
#[derive(Clone)]
pub struct AuxFunction {
    pub name: String,
    pub value: ScalarFn,
    pub grad: Option<VectorFn>,
    /// Row-major `n × n`.
    pub hess: Option<VectorFn>,
}

impl core::fmt::Debug for AuxFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.name)
    }
}

impl AuxFunction {
    pub fn new(name: impl Into<String>, value: ScalarFn) -> Self {
        AuxFunction {
            name: name.into(),
            value,
            grad: None,
            hess: None,
        }
    }

    pub fn with_grad(mut self, grad: VectorFn) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_hess(mut self, hess: VectorFn) -> Self {
        self.hess = Some(hess);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().and_then(|g| g(x))
    }

    pub fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.hess.as_ref().and_then(|h| h(x))
    }
}

#[derive(Clone, Debug)]
pub struct Attractor {
    pub set: SetDescriptor,
    pub order: f64,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub dim: usize,
    pub objective: Arc<dyn Objective>,
    /// Auxiliary Lyapunov candidates; the first one is recorded along trajectories.
    pub g_list: Vec<AuxFunction>,
    pub conserved: Vec<AuxFunction>,
    pub minima: Option<SetDescriptor>,
    pub attractor: Option<Attractor>,
    pub bounded_box: (Vec<f64>, Vec<f64>),
    /// The field is single-valued and continuous away from the minimum set.
    pub smooth: bool,
    /// Test region for decrease inequalities of the first auxiliary function.
    pub lyapunov_region: Option<Region>,
    /// Start distribution for attractor probes.
    pub basin: Option<Region>,
    /// Default `(c, cap)` of the attractor-probe power schedule.
    pub attractor_schedule: Option<(f64, f64)>,
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("g_list", &self.g_list)
            .field("conserved", &self.conserved)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// A bare problem around an objective, with a `[-10, 10]ⁿ` box.
    pub fn from_objective(name: impl Into<String>, objective: Arc<dyn Objective>) -> Self {
        let dim = objective.dim();
        ProblemSpec {
            name: name.into(),
            params: Vec::new(),
            dim,
            objective,
            g_list: Vec::new(),
            conserved: Vec::new(),
            minima: None,
            attractor: None,
            bounded_box: (alloc::vec![-10.0; dim], alloc::vec![10.0; dim]),
            smooth: false,
            lyapunov_region: None,
            basin: None,
            attractor_schedule: None,
        }
    }

    /// A problem from plain closures; handy for synthetic tests.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self::from_objective(
            name,
            Arc::new(ClosureObjective {
                dim,
                f: Box::new(f),
                grad: Box::new(grad),
            }),
        )
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.objective.gradient(x)
    }

    /// `−∇̂f`.
    pub fn descent_field(&self) -> Field {
        normalized_field(self).negated()
    }

    pub fn primary_g(&self) -> Option<&AuxFunction> {
        self.g_list.first()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        let (lo, hi) = &self.bounded_box;
        x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Canonical id `name:key=value,...`.
    pub fn id(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let mut s = self.name.clone();
        s.push(':');
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(k);
            s.push('=');
            s.push_str(v);
        }
        s
    }
}

type BoxedScalar = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type BoxedVector = Box<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

struct ClosureObjective {
    dim: usize,
    f: BoxedScalar,
    grad: BoxedVector,
}

impl Objective for ClosureObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (self.grad)(x)
    }
}
