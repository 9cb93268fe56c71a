//! Set-valued maps `F: Rⁿ ⇉ Rⁿ` evaluated as finite samples.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::catalog::{LimitSet, Objective, ProblemSpec};
use crate::error::{Error, Result};
use crate::euler::Trajectory;
use crate::region::{unit_sphere, Region};
use crate::report::{ProbeReport, ProbeStats};
use crate::vector::{axpy, dedup_directions, dot, norm, normalized, scale};
use crate::{mix_seed, rng_from_seed};

/// Number of perturbed points in the sampled fallback.
pub const FALLBACK_POINTS: usize = 32;
pub const FALLBACK_RADIUS: f64 = 1e-7;
pub const FALLBACK_DEDUP: f64 = 1e-6;

/// Random convex combinations explored per point by the angle check.
const ANGLE_COMBINATIONS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub directions: Vec<Vec<f64>>,
    /// The list is the whole of `F(x)` rather than a sampled approximation.
    pub exact: bool,
}

impl FieldSample {
    pub fn exact(directions: Vec<Vec<f64>>) -> Self {
        FieldSample {
            directions,
            exact: true,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Normalized,
    Bouligand,
    Custom,
}

pub type FieldFn = Arc<dyn Fn(&[f64]) -> Result<FieldSample> + Send + Sync>;

#[derive(Clone)]
pub struct Field {
    dim: usize,
    kind: FieldKind,
    eval: FieldFn,
    label: String,
}

impl core::fmt::Debug for Field {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.label)
    }
}

impl Field {
    pub fn new(dim: usize, kind: FieldKind, label: impl Into<String>, eval: FieldFn) -> Self {
        Field {
            dim,
            kind,
            eval,
            label: label.into(),
        }
    }

    /// `F ≡ {v₁, …, v_m}`.
    pub fn constant(directions: Vec<Vec<f64>>) -> Self {
        let dim = directions.first().map_or(0, |d| d.len());
        let sample = FieldSample::exact(directions);
        Field::new(dim, FieldKind::Custom, "constant", Arc::new(move |_| Ok(sample.clone())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates `F(x)`. An empty result is reported as a contract violation.
    pub fn evaluate(&self, x: &[f64]) -> Result<FieldSample> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let s = (self.eval)(x)?;
        if s.directions.is_empty() {
            return Err(Error::EmptyFieldSample { point: x.to_vec() });
        }
        Ok(s)
    }

    /// `x ↦ −F(x)`.
    pub fn negated(&self) -> Field {
        let inner = self.eval.clone();
        let label = if let Some(rest) = self.label.strip_prefix('-') {
            String::from(rest)
        } else {
            alloc::format!("-{}", self.label)
        };
        Field {
            dim: self.dim,
            kind: self.kind,
            label,
            eval: Arc::new(move |x| {
                let s = inner(x)?;
                Ok(FieldSample {
                    directions: s.directions.iter().map(|d| scale(d, -1.0)).collect(),
                    exact: s.exact,
                })
            }),
        }
    }
}

/// Seed for the perturbation fallback at `x`, derived from its bit pattern.
fn point_seed(x: &[f64]) -> u64 {
    x.iter().fold(0x5EED_F1E1_D000_0001, |acc, v| mix_seed(acc, v.to_bits()))
}

fn checked_gradient(obj: &dyn Objective, x: &[f64]) -> Result<Option<Vec<f64>>> {
    match obj.gradient(x) {
        Some(g) if g.iter().any(|v| !v.is_finite()) => Err(Error::FieldOverflow { point: x.to_vec() }),
        other => Ok(other),
    }
}

/// Gradients (normalized or raw) at `m` points `x + ρξ_j`, deduplicated.
fn perturbation_sample(obj: &dyn Objective, x: &[f64], normalize: bool) -> Result<FieldSample> {
    let mut rng = rng_from_seed(point_seed(x));
    let mut found = Vec::new();
    for _ in 0..FALLBACK_POINTS {
        let y = axpy(x, FALLBACK_RADIUS, &unit_sphere(&mut rng, x.len()));
        let Some(g) = checked_gradient(obj, &y)? else {
            continue;
        };
        if normalize {
            if let Some(u) = normalized(&g) {
                found.push(u);
            }
        } else {
            found.push(g);
        }
    }
    let directions = dedup_directions(found, FALLBACK_DEDUP);
    if directions.is_empty() {
        return Err(Error::EmptyFieldSample { point: x.to_vec() });
    }
    Ok(FieldSample {
        directions,
        exact: false,
    })
}

fn from_limits(l: LimitSet) -> FieldSample {
    FieldSample {
        directions: l.vectors,
        exact: l.exact,
    }
}

/// `∇̂f`: declared limit sets on exceptional loci, `{∇f/|∇f|}` at smooth
/// points with `∇f ≠ 0`, sampled fallback elsewhere.
pub fn normalized_field(problem: &ProblemSpec) -> Field {
    let obj = problem.objective.clone();
    Field::new(
        problem.dim,
        FieldKind::Normalized,
        alloc::format!("nhat({})", problem.id()),
        Arc::new(move |x| {
            if let Some(l) = obj.normalized_limits(x) {
                return Ok(from_limits(l));
            }
            if let Some(g) = checked_gradient(obj.as_ref(), x)? {
                if let Some(u) = normalized(&g) {
                    return Ok(FieldSample::exact(vec![u]));
                }
            }
            perturbation_sample(obj.as_ref(), x, true)
        }),
    )
}

/// `∇̄f`: declared limit sets on exceptional loci, `{∇f}` at smooth points,
/// sampled fallback elsewhere.
pub fn bouligand_field(problem: &ProblemSpec) -> Field {
    let obj = problem.objective.clone();
    Field::new(
        problem.dim,
        FieldKind::Bouligand,
        alloc::format!("nbar({})", problem.id()),
        Arc::new(move |x| {
            if let Some(l) = obj.bouligand_limits(x) {
                return Ok(from_limits(l));
            }
            if let Some(g) = checked_gradient(obj.as_ref(), x)? {
                return Ok(FieldSample::exact(vec![g]));
            }
            perturbation_sample(obj.as_ref(), x, false)
        }),
    )
}

/// Bouligand sign: `{t/|t|}` for `t ≠ 0`, `{1, −1}` at exactly zero.
pub fn sign_b(t: f64) -> FieldSample {
    if t == 0.0 {
        FieldSample::exact(vec![vec![1.0], vec![-1.0]])
    } else {
        FieldSample::exact(vec![vec![crate::math::signum(t)]])
    }
}

/// Vertices plus random convex combinations of a finite set.
fn hull_probe(vertices: &[Vec<f64>], rng: &mut crate::Rng) -> Vec<Vec<f64>> {
    let mut out = vertices.to_vec();
    if vertices.len() > 1 {
        for _ in 0..ANGLE_COMBINATIONS {
            let w: Vec<f64> = vertices.iter().map(|_| -crate::math::ln(1.0 - rng.random::<f64>())).collect();
            let total: f64 = w.iter().sum();
            let mut c = vec![0.0; vertices[0].len()];
            for (v, wi) in vertices.iter().zip(&w) {
                c = axpy(&c, wi / total, v);
            }
            out.push(c);
        }
    }
    out
}

/// Searches for `x` and `u ∈ co F(x)` such that no `v ∈ co D(x)` satisfies
/// `⟨u, v⟩ ≤ −κ|v|²`. `worst_margin` is the largest `min_v ⟨u,v⟩ + κ|v|²` seen.
pub fn check_angle_condition(
    f_field: &Field,
    d_field: &Field,
    region: &Region,
    kappa: f64,
    n: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if f_field.dim() != d_field.dim() {
        return Err(Error::DimensionMismatch {
            expected: f_field.dim(),
            found: d_field.dim(),
        });
    }
    if !(kappa > 0.0) || n == 0 {
        return Err(Error::param("kappa/n", "need kappa > 0 and n >= 1"));
    }
    let points = region.sample_n(n, seed)?;
    let mut rng = rng_from_seed(mix_seed(seed, 1));
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for x in &points {
        let fs = f_field.evaluate(x)?;
        let ds = d_field.evaluate(x)?;
        let vs = hull_probe(&ds.directions, &mut rng);
        for u in hull_probe(&fs.directions, &mut rng) {
            let m = vs
                .iter()
                .map(|v| dot(&u, v) + kappa * dot(v, v))
                .fold(f64::INFINITY, f64::min);
            if m > worst {
                worst = m;
                if m > 1e-12 * (1.0 + norm(&u)) {
                    witness = Some(Trajectory::single_step(x.clone(), u.clone(), 1.0));
                }
            }
        }
    }
    let stats = ProbeStats {
        trials: points.len(),
        seeds: vec![seed],
        parameters: vec![("kappa".into(), kappa)],
        ..Default::default()
    };
    Ok(match witness {
        Some(w) => ProbeReport::fail(worst, w, stats),
        None => ProbeReport::pass(worst, stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_problem;

    fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn sign_b_examples() {
        assert_eq!(sign_b(-3.0).directions, vec![vec![-1.0]]);
        assert_eq!(sign_b(0.0).directions, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(sign_b(1e-300).directions, vec![vec![1.0]]);
    }

    #[test]
    fn parabola_normalized_at_smooth_point_matches_fd() {
        let p = get_problem("parabola").unwrap();
        let s = normalized_field(&p).evaluate(&[1.0, 0.0]).unwrap();
        let g = fd_gradient(|x| p.f(x), &[1.0, 0.0], 1e-6);
        let oracle = normalized(&g).unwrap();
        assert!(s.exact && s.len() == 1);
        assert!(crate::vector::distance(&s.directions[0], &oracle) < 1e-8);
        assert!((s.directions[0][0] - 0.894427).abs() < 1e-6);
        assert!((s.directions[0][1] + 0.447214).abs() < 1e-6);
    }

    #[test]
    fn parabola_normalized_at_origin_is_declared_pair() {
        let p = get_problem("parabola").unwrap();
        let s = normalized_field(&p).evaluate(&[0.0, 0.0]).unwrap();
        assert!(s.exact);
        assert_eq!(s.len(), 2);
        assert!(s.directions.contains(&vec![0.0, -1.0]) && s.directions.contains(&vec![0.0, 1.0]));
        // limits of ∇f/|∇f| along y → 0± agree with the declared pair
        for y in [1e-9, -1e-9] {
            let u = normalized(&p.gradient(&[0.0, y]).unwrap()).unwrap();
            assert!(s.directions.iter().any(|d| crate::vector::distance(d, &u) < 1e-12));
        }
    }

    #[test]
    fn ellipse_normalized_off_minimum() {
        let p = get_problem("ellipse:a=2,b=1").unwrap();
        let s = normalized_field(&p).evaluate(&[1.0, 0.0]).unwrap();
        assert_eq!(s.directions, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn l1_bouligand_at_minimum_has_four_vectors() {
        let p = get_problem("l1-3d").unwrap();
        let t: f64 = 1.3;
        let s = bouligand_field(&p).evaluate(&[0.0, t, 1.0 / t]).unwrap();
        assert!(s.exact);
        assert_eq!(s.len(), 4);
        for l1 in [-1.0, 1.0] {
            for l2 in [-1.0, 1.0] {
                let v = vec![l1 / t, l2 / t, l2 * t];
                assert!(s.directions.iter().any(|d| crate::vector::distance(d, &v) < 1e-15));
            }
        }
    }

    #[test]
    fn parabola_bouligand_at_smooth_point() {
        let p = get_problem("parabola").unwrap();
        let s = bouligand_field(&p).evaluate(&[1.0, 2.0]).unwrap();
        let oracle = fd_gradient(|x| p.f(x), &[1.0, 2.0], 1e-6);
        assert!(crate::vector::distance(&s.directions[0], &[-4.0, 2.0]) < 1e-12);
        assert!(crate::vector::distance(&s.directions[0], &oracle) < 1e-6);
        let n = normalized_field(&p).evaluate(&[1.0, 2.0]).unwrap();
        assert!(crate::vector::distance(&n.directions[0], &normalized(&s.directions[0]).unwrap()) < 1e-15);
    }

    #[test]
    fn fallback_at_smooth_point_recovers_closed_form() {
        let p = get_problem("parabola").unwrap();
        let x = [0.7, -0.3];
        let s = perturbation_sample(p.objective.as_ref(), &x, true).unwrap();
        assert!(!s.exact);
        assert_eq!(s.len(), 1);
        let closed = normalized(&p.gradient(&x).unwrap()).unwrap();
        assert!(crate::vector::distance(&s.directions[0], &closed) < 1e-5);
    }

    #[test]
    fn fallback_at_undeclared_critical_point_is_inexact() {
        let p = get_problem("ellipse:a=2,b=1").unwrap();
        let s = normalized_field(&p).evaluate(&[0.0, 0.0]).unwrap();
        assert!(!s.exact);
        assert!(s.len() > 1);
        for d in &s.directions {
            assert!((norm(d) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let p = ProblemSpec::custom("blowup", 1, |x| x[0], |_| Some(vec![f64::INFINITY]));
        assert!(matches!(normalized_field(&p).evaluate(&[1.0]), Err(Error::FieldOverflow { .. })));
    }

    #[test]
    fn angle_condition_examples() {
        let p = get_problem("parabola").unwrap();
        let annulus = Region::boxed(vec![-1.2, -0.5], vec![1.2, 1.8]).with_filter({
            let p = p.clone();
            Arc::new(move |x: &[f64]| (0.1..=1.0).contains(&p.f(x)))
        });
        let d = bouligand_field(&p);
        let descent = d.negated();
        let r = check_angle_condition(&descent, &d, &annulus, 0.5, 400, 5).unwrap();
        assert!(r.passed(), "margin {}", r.worst_margin);
        let ascent = normalized_field(&p);
        let r = check_angle_condition(&ascent, &d, &annulus, 0.5, 50, 5).unwrap();
        assert!(!r.passed() && r.worst_margin > 0.0 && r.witness().is_some());
        // F = −∇̂f, D = {∇f}: ⟨u, v⟩ + κ|v|² = −|∇f| + κ|∇f|² ≤ 0 for κ ≤ 1/|∇f|
        let r = check_angle_condition(&p.descent_field(), &d, &annulus, 0.05, 200, 6).unwrap();
        assert!(r.passed());
    }
}
