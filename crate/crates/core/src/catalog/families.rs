use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{AuxFunction, Attractor, LimitSet, Objective, ProblemSpec};
use crate::error::{Error, Result};
use crate::math::{self, abs, exp, powf, signum, sqrt};
use crate::region::Region;
use crate::set::{line, Curve, SetDescriptor};
use crate::vector::{dedup_directions, dot, norm, normalized, scale};

const PI: f64 = core::f64::consts::PI;

fn sq(v: f64) -> f64 {
    v * v
}

fn pair(v: &[f64]) -> Option<LimitSet> {
    let u = normalized(v)?;
    let w = scale(&u, -1.0);
    Some(LimitSet {
        vectors: vec![u, w],
        exact: true,
    })
}

fn cube(n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![-h; n], vec![h; n])
}

fn curve2(map: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static, deriv: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static, intervals: Vec<(f64, f64)>) -> Curve {
    Curve::new(
        2,
        Arc::new(move |t, o: &mut [f64]| o.copy_from_slice(&map(t))),
        Arc::new(move |t, o: &mut [f64]| o.copy_from_slice(&deriv(t))),
        intervals,
    )
    .expect("static curve definition")
}

fn curve_n(dim: usize, map: impl Fn(f64, &mut [f64]) + Send + Sync + 'static, deriv: impl Fn(f64, &mut [f64]) + Send + Sync + 'static, intervals: Vec<(f64, f64)>) -> Curve {
    Curve::new(dim, Arc::new(map), Arc::new(deriv), intervals).expect("static curve definition")
}

fn point_pair(p: Vec<f64>, label: &str) -> SetDescriptor {
    let q = scale(&p, -1.0);
    SetDescriptor::points(vec![p, q], label).expect("finite points")
}

fn finite_g(g: &AuxFunction) -> crate::region::Predicate {
    let v = g.value.clone();
    Arc::new(move |x: &[f64]| v(x).is_finite())
}

// ---------------------------------------------------------------- flat4

struct Flat4;

impl Objective for Flat4 {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        b * b + a * a * b * b * b * b
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (a, b) = (x[0], x[1]);
        let b3 = b * b * b;
        Some(vec![2.0 * a * b3 * b, 2.0 * b + 4.0 * a * a * b3])
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        (x[1] == 0.0).then(|| LimitSet {
            vectors: vec![vec![0.0, 1.0], vec![0.0, -1.0]],
            exact: true,
        })
    }
}

pub(super) fn flat4() -> ProblemSpec {
    let g = AuxFunction::new("|x|", Arc::new(|x: &[f64]| abs(x[0])))
        .with_grad(Arc::new(|x: &[f64]| (x[0] != 0.0).then(|| vec![signum(x[0]), 0.0])))
        .with_hess(Arc::new(|x: &[f64]| (x[0] != 0.0).then(|| vec![0.0; 4])));
    let slab = |lo: f64, hi: f64, h: f64| Region::boxed(vec![lo, -h], vec![hi, h]);
    let region = Region::mixture(vec![
        slab(0.05, 0.3, 0.0),
        slab(0.05, 0.3, 0.05),
        slab(-0.3, -0.05, 0.0),
        slab(-0.3, -0.05, 0.05),
    ])
    .with_label("0.05<=|x|<=0.3,|y|<=0.05");
    let mut p = ProblemSpec::from_objective("flat4", Arc::new(Flat4));
    p.g_list = vec![g];
    p.minima = Some(SetDescriptor::curve(line(vec![0.0, 0.0], vec![1.0, 0.0], (-10.0, 10.0)).unwrap(), "y=0"));
    p.attractor = Some(Attractor {
        set: SetDescriptor::point(vec![0.0, 0.0]).unwrap(),
        order: 4.0,
    });
    p.bounded_box = (vec![-3.0, -2.0], vec![3.0, 2.0]);
    p.smooth = true;
    p.lyapunov_region = Some(region);
    p.basin = Some(Region::boxed(vec![-1.0, 0.0], vec![1.0, 0.0]).with_label("|x|<=1,y=0"));
    p.attractor_schedule = Some((1.0, 1.0));
    p
}

// ---------------------------------------------------------------- parabola

struct Parabola;

impl Objective for Parabola {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = x[0] * x[0] - x[1];
        r * r
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = x[0] * x[0] - x[1];
        Some(vec![4.0 * r * x[0], -2.0 * r])
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        if x[0] * x[0] - x[1] == 0.0 {
            pair(&[2.0 * x[0], -1.0])
        } else {
            None
        }
    }
}

pub(super) fn parabola() -> ProblemSpec {
    let g = AuxFunction::new("x^2 exp(4y)", Arc::new(|x: &[f64]| x[0] * x[0] * exp(4.0 * x[1])))
        .with_grad(Arc::new(|x: &[f64]| {
            let e = exp(4.0 * x[1]);
            Some(vec![2.0 * x[0] * e, 4.0 * x[0] * x[0] * e])
        }))
        .with_hess(Arc::new(|x: &[f64]| {
            let e = exp(4.0 * x[1]);
            Some(vec![2.0 * e, 8.0 * x[0] * e, 8.0 * x[0] * e, 16.0 * x[0] * x[0] * e])
        }));
    let arc = |iv: Vec<(f64, f64)>| curve2(|t| [t, t * t], |t| [1.0, 2.0 * t], iv);
    let mut p = ProblemSpec::from_objective("parabola", Arc::new(Parabola));
    p.conserved = vec![AuxFunction { name: "C".into(), ..g.clone() }];
    p.g_list = vec![g];
    p.minima = Some(SetDescriptor::curve(arc(vec![(-1.0, 1.0)]), "y=x^2"));
    p.attractor = Some(Attractor {
        set: SetDescriptor::point(vec![0.0, 0.0]).unwrap(),
        order: 2.0,
    });
    p.bounded_box = (vec![-1.5, -1.0], vec![1.5, 2.5]);
    p.smooth = true;
    p.lyapunov_region = Some(Region::near_set(
        SetDescriptor::curve(arc(vec![(-0.8, -0.3), (0.3, 0.8)]), "y=x^2,0.3<=|x|<=0.8"),
        0.02,
    ));
    p.basin = Some(Region::near_set(SetDescriptor::curve(arc(vec![(-1.0, 1.0)]), "y=x^2"), 0.0));
    p.attractor_schedule = Some((0.1, 0.1));
    p
}

// ---------------------------------------------------------------- quadrics

/// `{a₁x² + a₂y² = 1}` for the sign patterns that make it nonempty.
fn quadric_curve(a1: f64, a2: f64, span: f64) -> Result<SetDescriptor> {
    if a1 > 0.0 && a2 > 0.0 {
        let (r1, r2) = (1.0 / sqrt(a1), 1.0 / sqrt(a2));
        return Ok(SetDescriptor::curve(
            curve2(move |t| [r1 * math::cos(t), r2 * math::sin(t)], move |t| [-r1 * math::sin(t), r2 * math::cos(t)], vec![(0.0, 2.0 * PI)]),
            "ellipse",
        ));
    }
    let branch = |s: f64, swap: bool, p: f64, q: f64| {
        // p·cosh on the axis with positive weight, q·sinh on the other
        let c = move |t: f64| {
            let (ch, sh) = (0.5 * (exp(t) + exp(-t)), 0.5 * (exp(t) - exp(-t)));
            if swap {
                [s * p * ch, q * sh]
            } else {
                [q * sh, s * p * ch]
            }
        };
        let d = move |t: f64| {
            let (ch, sh) = (0.5 * (exp(t) + exp(-t)), 0.5 * (exp(t) - exp(-t)));
            if swap {
                [s * p * sh, q * ch]
            } else {
                [q * ch, s * p * sh]
            }
        };
        SetDescriptor::curve(curve2(c, d, vec![(-span, span)]), "hyperbola branch")
    };
    if a1 < 0.0 && a2 > 0.0 {
        let (p, q) = (1.0 / sqrt(a2), 1.0 / sqrt(-a1));
        return SetDescriptor::union(vec![branch(1.0, false, p, q), branch(-1.0, false, p, q)], "hyperbola");
    }
    if a1 > 0.0 && a2 < 0.0 {
        let (p, q) = (1.0 / sqrt(a1), 1.0 / sqrt(-a2));
        return SetDescriptor::union(vec![branch(1.0, true, p, q), branch(-1.0, true, p, q)], "hyperbola");
    }
    Err(Error::param("a", "quadric a1 x^2 + a2 y^2 = 1 is empty"))
}

struct Quadric {
    a: Vec<f64>,
}

impl Quadric {
    fn residual(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, v)| a * v * v).sum::<f64>() - 1.0
    }

    fn weighted(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().zip(x).map(|(a, v)| a * v).collect()
    }
}

impl Objective for Quadric {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        r * r
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(scale(&self.weighted(x), 4.0 * self.residual(x)))
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        if self.residual(x) == 0.0 {
            pair(&self.weighted(x))
        } else {
            None
        }
    }
}

fn ellipse_g(a: f64, b: f64) -> AuxFunction {
    AuxFunction::new(
        alloc::format!("|x|^{b}/|y|^{a}"),
        Arc::new(move |x: &[f64]| {
            if x[1] == 0.0 && a > 0.0 {
                f64::INFINITY
            } else {
                powf(abs(x[0]), b) * powf(abs(x[1]), -a)
            }
        }),
    )
    .with_grad(Arc::new(move |x: &[f64]| {
        let (u, v) = (x[0], x[1]);
        if u == 0.0 || v == 0.0 {
            return None;
        }
        let (au, av) = (abs(u), abs(v));
        Some(vec![
            b * u * powf(au, b - 2.0) * powf(av, -a),
            -a * v * powf(au, b) * powf(av, -a - 2.0),
        ])
    }))
    .with_hess(Arc::new(move |x: &[f64]| {
        let (u, v) = (x[0], x[1]);
        if u == 0.0 || v == 0.0 {
            return None;
        }
        let (au, av) = (abs(u), abs(v));
        let off = -a * b * u * v * powf(au, b - 2.0) * powf(av, -a - 2.0);
        Some(vec![
            b * (b - 1.0) * powf(au, b - 2.0) * powf(av, -a),
            off,
            off,
            a * (a + 1.0) * powf(au, b) * powf(av, -a - 2.0),
        ])
    }))
}

pub(super) fn ellipse(a: f64, b: f64) -> Result<ProblemSpec> {
    if !(a.is_finite() && b.is_finite() && ((a > b && b > 0.0) || (a < 0.0 && b > 0.0))) {
        return Err(Error::param("a,b", "need a > b > 0 or a < 0 < b"));
    }
    let g = ellipse_g(a, b);
    let mut p = ProblemSpec::from_objective("ellipse", Arc::new(Quadric { a: vec![a, b] }));
    p.params = vec![("a".into(), alloc::format!("{a}")), ("b".into(), alloc::format!("{b}"))];
    p.conserved = vec![AuxFunction { name: "C".into(), ..g.clone() }];
    p.minima = Some(quadric_curve(a, b, 2.5)?);
    p.attractor = Some(Attractor {
        set: point_pair(vec![0.0, 1.0 / sqrt(b)], "±(0,1/sqrt(b))"),
        order: 2.0,
    });
    let (r1, r2) = (1.0 / sqrt(abs(a)), 1.0 / sqrt(b));
    if a > 0.0 {
        let h = 1.6 * r1.max(r2);
        p.bounded_box = cube(2, h);
        let arc = |iv: Vec<(f64, f64)>| {
            curve2(move |t| [r1 * math::cos(t), r2 * math::sin(t)], move |t| [-r1 * math::sin(t), r2 * math::cos(t)], iv)
        };
        let (lo, hi) = (0.35, 1.2);
        p.lyapunov_region = Some(
            Region::near_set(
                SetDescriptor::curve(arc(vec![(lo, hi), (PI - hi, PI - lo), (PI + lo, PI + hi), (2.0 * PI - hi, 2.0 * PI - lo)]), "ellipse arcs"),
                0.02,
            )
            .with_filter(finite_g(&g)),
        );
        let s = 0.25 * sqrt(b);
        let t0 = if s < 1.0 { libm::asin(s) } else { 0.5 * PI };
        p.basin = Some(
            Region::near_set(SetDescriptor::curve(arc(vec![(t0, PI - t0), (PI + t0, 2.0 * PI - t0)]), "ellipse,|y|>=0.25"), 0.0)
                .with_filter(finite_g(&g)),
        );
    } else {
        p.bounded_box = cube(2, 3.0 * r1.max(r2));
        let near = quadric_curve(a, b, 1.0)?;
        p.lyapunov_region = Some(Region::near_set(near.clone(), 0.02).with_filter(finite_g(&g)));
        p.basin = Some(Region::near_set(near, 0.0).with_filter(finite_g(&g)));
    }
    p.g_list = vec![g];
    p.smooth = true;
    p.attractor_schedule = Some((2.0, 0.1));
    Ok(p)
}

// ---------------------------------------------------------------- multivariate ellipse

/// Conserved quantities of `f(x) = (Σ aᵢxᵢ² − 1)²` built from the index set
/// `I = argmin{aᵢ : aᵢ > 0}` after rescaling so that the minimum is 1.
#[derive(Clone, Debug)]
pub struct ConservedFamily {
    /// `a / min{aᵢ : aᵢ > 0}`.
    pub weights: Vec<f64>,
    pub index_set: Vec<usize>,
    /// `C_i = |x_i|/|x_I|` for `i ∈ I`, `|x_i|/|x_I|^{a_i}` otherwise.
    pub components: Vec<AuxFunction>,
    /// `g = ‖C_{I^c}‖₁`.
    pub g: AuxFunction,
}

pub fn bilinear_conserved(a: &[f64]) -> Result<ConservedFamily> {
    if a.is_empty() || a.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return Err(Error::param("a", "weights must be finite and nonzero"));
    }
    let amin = a.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if !amin.is_finite() {
        return Err(Error::param("a", "at least one weight must be positive"));
    }
    let w: Vec<f64> = a.iter().map(|v| v / amin).collect();
    let index_set: Vec<usize> = (0..a.len()).filter(|&i| abs(w[i] - 1.0) <= 1e-12).collect();
    let n = a.len();
    let iset = Arc::new(index_set.clone());
    let n_i = {
        let iset = iset.clone();
        move |x: &[f64]| sqrt(iset.iter().map(|&j| x[j] * x[j]).sum())
    };
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let in_i = index_set.contains(&i);
        let e = if in_i { 1.0 } else { w[i] };
        let (ni, ni2, iset2) = (n_i.clone(), n_i.clone(), iset.clone());
        let value = Arc::new(move |x: &[f64]| {
            let r = ni(x);
            if r == 0.0 {
                if e > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                abs(x[i]) * powf(r, -e)
            }
        });
        let grad = Arc::new(move |x: &[f64]| {
            let r = ni2(x);
            if r == 0.0 || x[i] == 0.0 {
                return None;
            }
            let mut g = vec![0.0; n];
            let ax = abs(x[i]);
            for &j in iset2.iter() {
                g[j] = -e * ax * powf(r, -e - 2.0) * x[j];
            }
            g[i] += signum(x[i]) * powf(r, -e);
            Some(g)
        });
        components.push(AuxFunction::new(alloc::format!("C{}", i + 1), value).with_grad(grad));
    }
    let outside: Vec<AuxFunction> = (0..n).filter(|i| !index_set.contains(i)).map(|i| components[i].clone()).collect();
    let (o1, o2) = (Arc::new(outside.clone()), Arc::new(outside));
    let g = AuxFunction::new("|C_Ic|_1", Arc::new(move |x: &[f64]| o1.iter().map(|c| c.eval(x)).sum()))
        .with_grad(Arc::new(move |x: &[f64]| {
            let mut acc = vec![0.0; n];
            for c in o2.iter() {
                let gi = c.gradient(x)?;
                for (s, v) in acc.iter_mut().zip(gi) {
                    *s += v;
                }
            }
            Some(acc)
        }));
    Ok(ConservedFamily {
        weights: w,
        index_set,
        components,
        g,
    })
}

pub(super) fn mellipse(a: Vec<f64>) -> Result<ProblemSpec> {
    let fam = bilinear_conserved(&a)?;
    let n = a.len();
    let mut p = ProblemSpec::from_objective("mellipse", Arc::new(Quadric { a: a.clone() }));
    p.params = vec![("a".into(), join(&a))];
    p.g_list = vec![fam.g.clone()];
    p.conserved = fam.components.clone();
    if n == 2 {
        p.minima = Some(quadric_curve(a[0], a[1], 2.5)?);
    }
    if fam.index_set.len() == 1 {
        let i = fam.index_set[0];
        let mut e = vec![0.0; n];
        e[i] = 1.0 / sqrt(a[i]);
        p.attractor = Some(Attractor {
            set: point_pair(e, "flat minima"),
            order: 2.0,
        });
    }
    let amin = a.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    p.bounded_box = cube(n, 3.0_f64.max(2.0 / sqrt(amin)));
    p.smooth = true;
    Ok(p)
}

// ---------------------------------------------------------------- bilinear

struct Bilinear {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
}

impl Bilinear {
    fn parts(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (x, y) = z.split_at(self.cols);
        let ax = crate::vector::mat_vec(&self.a, self.cols, x);
        let aty = crate::vector::mat_t_vec(&self.a, self.cols, y);
        let r = dot(y, &ax) - 1.0;
        (aty, ax, r)
    }
}

impl Objective for Bilinear {
    fn dim(&self) -> usize {
        self.rows + self.cols
    }

    fn value(&self, z: &[f64]) -> f64 {
        let (_, _, r) = self.parts(z);
        r * r
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let (mut g, ax, r) = self.parts(z);
        g.extend(ax);
        Some(scale(&g, 2.0 * r))
    }

    fn normalized_limits(&self, z: &[f64]) -> Option<LimitSet> {
        let (mut g, ax, r) = self.parts(z);
        if r != 0.0 {
            return None;
        }
        g.extend(ax);
        pair(&g)
    }
}

fn norm_sq_difference(split: usize, dim: usize) -> AuxFunction {
    AuxFunction::new(
        "|x|^2-|y|^2",
        Arc::new(move |z: &[f64]| {
            let (x, y) = z.split_at(split);
            dot(x, x) - dot(y, y)
        }),
    )
    .with_grad(Arc::new(move |z: &[f64]| Some(z.iter().enumerate().map(|(i, v)| if i < split { 2.0 * v } else { -2.0 * v }).collect())))
    .with_hess(Arc::new(move |_: &[f64]| {
        let mut h = vec![0.0; dim * dim];
        for i in 0..dim {
            h[i * dim + i] = if i < split { 2.0 } else { -2.0 };
        }
        Some(h)
    }))
}

pub(super) fn bilinear(rows: usize, cols: usize, a: Vec<f64>) -> Result<ProblemSpec> {
    if rows == 0 || cols == 0 || a.len() != rows * cols {
        return Err(Error::param("A", alloc::format!("need {rows}x{cols} = {} entries, got {}", rows * cols, a.len())));
    }
    if a.iter().any(|v| !v.is_finite()) || a.iter().all(|v| *v == 0.0) {
        return Err(Error::param("A", "entries must be finite and not all zero"));
    }
    let dim = rows + cols;
    let mut p = ProblemSpec::from_objective(
        "bilinear",
        Arc::new(Bilinear {
            rows,
            cols,
            a: a.clone(),
        }),
    );
    p.params = vec![
        ("m".into(), alloc::format!("{rows}")),
        ("n".into(), alloc::format!("{cols}")),
        ("A".into(), join(&a)),
    ];
    p.conserved = vec![norm_sq_difference(cols, dim)];
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, &a);
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let positive: Vec<(usize, f64)> = svd.singular_values.iter().copied().enumerate().filter(|(_, s)| *s > 1e-12).collect();
    let (k, smin) = positive.iter().copied().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
    let repeated = positive.iter().filter(|(_, s)| abs(s - smin) <= 1e-12 * smin.max(1.0)).count() > 1;
    if !repeated {
        let scale_ = 1.0 / sqrt(smin);
        let mut z: Vec<f64> = (0..cols).map(|j| vt[(k, j)] * scale_).collect();
        z.extend((0..rows).map(|i| u[(i, k)] * scale_));
        p.attractor = Some(Attractor {
            set: point_pair(z, "flat minima"),
            order: 2.0,
        });
    }
    if rows == 1 && cols == 1 {
        let c = a[0];
        let branch = |s: f64| {
            SetDescriptor::curve(
                curve2(move |t| [s * exp(t), s * exp(-t) / c], move |t| [s * exp(t), -s * exp(-t) / c], vec![(-2.0, 2.0)]),
                "branch",
            )
        };
        p.minima = Some(SetDescriptor::union(vec![branch(1.0), branch(-1.0)], "xy=1/A")?);
    }
    p.bounded_box = cube(dim, 3.0);
    p.smooth = true;
    Ok(p)
}

// ---------------------------------------------------------------- monomial

struct Monomial {
    u: Vec<f64>,
}

impl Monomial {
    fn product(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.u).map(|(v, e)| math::powi(*v, *e as i32)).product()
    }

    fn grad_product(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = self.u[i] * math::powi(x[i], self.u[i] as i32 - 1);
                for j in 0..x.len() {
                    if j != i {
                        p *= math::powi(x[j], self.u[j] as i32);
                    }
                }
                p
            })
            .collect()
    }
}

impl Objective for Monomial {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.product(x) - 1.0;
        r * r
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(scale(&self.grad_product(x), 2.0 * (self.product(x) - 1.0)))
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        if self.product(x) == 1.0 {
            pair(&self.grad_product(x))
        } else {
            None
        }
    }
}

fn monomial_pair(u: &[f64], i: usize, j: usize) -> AuxFunction {
    let n = u.len();
    let (ui, uj) = (u[i], u[j]);
    AuxFunction::new(
        alloc::format!("C{}{}", i + 1, j + 1),
        Arc::new(move |x: &[f64]| x[i] * x[i] / ui - x[j] * x[j] / uj),
    )
    .with_grad(Arc::new(move |x: &[f64]| {
        let mut g = vec![0.0; n];
        g[i] = 2.0 * x[i] / ui;
        g[j] = -2.0 * x[j] / uj;
        Some(g)
    }))
    .with_hess(Arc::new(move |_: &[f64]| {
        let mut h = vec![0.0; n * n];
        h[i * n + i] = 2.0 / ui;
        h[j * n + j] = -2.0 / uj;
        Some(h)
    }))
}

/// Sign patterns `σ ∈ {±1}ⁿ` with `Πσᵢ^{υᵢ} = 1`.
fn admissible_signs(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect::<Vec<f64>>())
        .filter(|s| s.iter().zip(u).filter(|(si, ui)| **si < 0.0 && (**ui as i64) % 2 == 1).count() % 2 == 0)
        .collect()
}

pub(super) fn monomial(u: Vec<f64>) -> Result<ProblemSpec> {
    if u.is_empty() || u.len() > 12 || u.iter().any(|v| !(v.is_finite() && *v >= 1.0 && *v == math::floor(*v) && *v <= 64.0)) {
        return Err(Error::param("u", "exponents must be positive integers (n <= 12, each <= 64)"));
    }
    let n = u.len();
    let mut conserved = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            conserved.push(monomial_pair(&u, i, j));
        }
    }
    let cs = Arc::new(conserved.clone());
    let (c1, c2, c3) = (cs.clone(), cs.clone(), cs);
    let g = AuxFunction::new("sum C_ij^2/4", Arc::new(move |x: &[f64]| c1.iter().map(|c| sq(c.eval(x)) / 4.0).sum()))
        .with_grad(Arc::new(move |x: &[f64]| {
            let mut acc = vec![0.0; n];
            for c in c2.iter() {
                let (v, gc) = (c.eval(x), c.gradient(x)?);
                for (a, gi) in acc.iter_mut().zip(gc) {
                    *a += v * gi / 2.0;
                }
            }
            Some(acc)
        }))
        .with_hess(Arc::new(move |x: &[f64]| {
            let mut h = vec![0.0; n * n];
            for c in c3.iter() {
                let (v, gc, hc) = (c.eval(x), c.gradient(x)?, c.hessian(x)?);
                for r in 0..n {
                    for s in 0..n {
                        h[r * n + s] += (gc[r] * gc[s] + v * hc[r * n + s]) / 2.0;
                    }
                }
            }
            Some(h)
        }));
    let su: f64 = u.iter().sum();
    let ln_c = -u.iter().map(|v| v * math::ln(*v)).sum::<f64>() / su;
    let mag: Vec<f64> = u.iter().map(|v| sqrt(v * exp(ln_c))).collect();
    let flats: Vec<Vec<f64>> = admissible_signs(&u).iter().map(|s| s.iter().zip(&mag).map(|(a, b)| a * b).collect()).collect();

    let mut p = ProblemSpec::from_objective("monomial", Arc::new(Monomial { u: u.clone() }));
    p.params = vec![("u".into(), join(&u))];
    p.g_list = vec![g];
    p.conserved = conserved;
    p.attractor = Some(Attractor {
        set: SetDescriptor::points(flats, "flat minima")?,
        order: 2.0,
    });
    if n == 2 {
        let r = u[0] / u[1];
        let branches = admissible_signs(&u)
            .into_iter()
            .map(|s| {
                let (s0, s1) = (s[0], s[1]);
                SetDescriptor::curve(
                    curve2(move |t| [s0 * exp(t), s1 * exp(-r * t)], move |t| [s0 * exp(t), -r * s1 * exp(-r * t)], vec![(-2.0, 2.0)]),
                    "branch",
                )
            })
            .collect();
        p.minima = Some(SetDescriptor::union(branches, "x^u=1")?);
    }
    p.bounded_box = cube(n, 3.0);
    p.smooth = true;
    Ok(p)
}

// ---------------------------------------------------------------- l1-3d

struct L13;

impl L13 {
    fn vectors(&self, x: &[f64], l1: &[f64], l2: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &a in l1 {
            for &b in l2 {
                out.push(vec![a * x[2], b * x[2], a * x[0] + b * x[1]]);
            }
        }
        dedup_directions(out, 0.0)
    }

    fn signs(t: f64) -> Vec<f64> {
        if t == 0.0 {
            vec![1.0, -1.0]
        } else {
            vec![signum(t)]
        }
    }
}

impl Objective for L13 {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> f64 {
        abs(x[0] * x[2]) + abs(x[1] * x[2] - 1.0)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (p, q) = (x[0] * x[2], x[1] * x[2] - 1.0);
        if p == 0.0 || q == 0.0 {
            return None;
        }
        Some(self.vectors(x, &[signum(p)], &[signum(q)]).remove(0))
    }

    fn bouligand_limits(&self, x: &[f64]) -> Option<LimitSet> {
        let (p, q) = (x[0] * x[2], x[1] * x[2] - 1.0);
        if p != 0.0 && q != 0.0 {
            return None;
        }
        Some(LimitSet {
            vectors: self.vectors(x, &Self::signs(p), &Self::signs(q)),
            exact: true,
        })
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        let b = self.bouligand_limits(x)?;
        let vectors: Option<Vec<Vec<f64>>> = b.vectors.iter().map(|v| normalized(v)).collect();
        Some(LimitSet {
            vectors: dedup_directions(vectors?, 0.0),
            exact: true,
        })
    }
}

pub(super) fn l1_3d() -> ProblemSpec {
    let t0 = powf(2.0, 0.25);
    let k = core::f64::consts::FRAC_1_SQRT_2;
    let c_of = |x: &[f64]| x[0] * x[0] + x[1] * x[1] - x[2] * x[2];
    let conserved = AuxFunction::new("x1^2+x2^2-x3^2", Arc::new(c_of))
        .with_grad(Arc::new(|x: &[f64]| Some(vec![2.0 * x[0], 2.0 * x[1], -2.0 * x[2]])))
        .with_hess(Arc::new(|_: &[f64]| Some(vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -2.0])));
    let g = AuxFunction::new("(C-sqrt2/2)^2/4", Arc::new(move |x: &[f64]| sq(c_of(x) - k) / 4.0))
        .with_grad(Arc::new(move |x: &[f64]| {
            let s = (c_of(x) - k) / 2.0;
            Some(vec![2.0 * x[0] * s, 2.0 * x[1] * s, -2.0 * x[2] * s])
        }))
        .with_hess(Arc::new(move |x: &[f64]| {
            let d = c_of(x) - k;
            let gc = [2.0 * x[0], 2.0 * x[1], -2.0 * x[2]];
            let hc = [2.0, 2.0, -2.0];
            let mut h = vec![0.0; 9];
            for r in 0..3 {
                for s in 0..3 {
                    h[r * 3 + s] = (gc[r] * gc[s] + if r == s { d * hc[r] } else { 0.0 }) / 2.0;
                }
            }
            Some(h)
        }));
    let branch = |s: f64| {
        SetDescriptor::curve(
            curve_n(
                3,
                move |t, o| {
                    o[0] = 0.0;
                    o[1] = s * t0 * exp(t);
                    o[2] = s * exp(-t) / t0;
                },
                move |t, o| {
                    o[0] = 0.0;
                    o[1] = s * t0 * exp(t);
                    o[2] = -s * exp(-t) / t0;
                },
                vec![(-1.0, 1.0)],
            ),
            "branch",
        )
    };
    let mut p = ProblemSpec::from_objective("l1-3d", Arc::new(L13));
    p.g_list = vec![g];
    p.conserved = vec![conserved];
    p.minima = Some(SetDescriptor::union(vec![branch(1.0), branch(-1.0)], "(0,t,1/t)").unwrap());
    p.attractor = Some(Attractor {
        set: point_pair(vec![0.0, t0, 1.0 / t0], "±(0,2^(1/4),2^(-1/4))"),
        order: 2.0,
    });
    p.bounded_box = cube(3, 3.0);
    p
}

// ---------------------------------------------------------------- rank1

struct Rank1 {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Rank1 {
    fn residuals(&self, z: &[f64]) -> Vec<f64> {
        let (x, y) = z.split_at(self.u.len());
        let mut r = Vec::with_capacity(self.u.len() * self.v.len());
        for i in 0..self.u.len() {
            for j in 0..self.v.len() {
                r.push(x[i] * y[j] - self.u[i] * self.v[j]);
            }
        }
        r
    }

    fn vector(&self, z: &[f64], lam: &[f64]) -> Vec<f64> {
        let (m, n) = (self.u.len(), self.v.len());
        let (x, y) = z.split_at(m);
        let mut g = vec![0.0; m + n];
        for i in 0..m {
            for j in 0..n {
                let l = lam[i * n + j];
                g[i] += l * y[j];
                g[m + j] += l * x[i];
            }
        }
        g
    }

    /// All sign matrices consistent with the residual signs, flag = exact.
    fn patterns(&self, z: &[f64]) -> Option<(Vec<Vec<f64>>, bool)> {
        let r = self.residuals(z);
        let zeros: Vec<usize> = (0..r.len()).filter(|&k| r[k] == 0.0).collect();
        if zeros.is_empty() {
            return None;
        }
        let base: Vec<f64> = r.iter().map(|v| signum(*v)).collect();
        let mut out = Vec::with_capacity(1 << zeros.len());
        for mask in 0..1usize << zeros.len() {
            let mut lam = base.clone();
            for (b, &k) in zeros.iter().enumerate() {
                lam[k] = if mask >> b & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(self.vector(z, &lam));
        }
        Some((dedup_directions(out, 0.0), zeros.len() <= 1))
    }
}

impl Objective for Rank1 {
    fn dim(&self) -> usize {
        self.u.len() + self.v.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.residuals(z).iter().map(|r| abs(*r)).sum()
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let r = self.residuals(z);
        if r.contains(&0.0) {
            return None;
        }
        let lam: Vec<f64> = r.iter().map(|v| signum(*v)).collect();
        Some(self.vector(z, &lam))
    }

    fn bouligand_limits(&self, z: &[f64]) -> Option<LimitSet> {
        let (vectors, exact) = self.patterns(z)?;
        Some(LimitSet { vectors, exact })
    }

    fn normalized_limits(&self, z: &[f64]) -> Option<LimitSet> {
        let (vectors, exact) = self.patterns(z)?;
        let total = vectors.len();
        let unit: Vec<Vec<f64>> = vectors.iter().filter_map(|v| normalized(v)).collect();
        if unit.is_empty() {
            return None;
        }
        let exact = exact && unit.len() == total;
        Some(LimitSet {
            vectors: dedup_directions(unit, 0.0),
            exact,
        })
    }
}

fn signed_sums(w: &[f64]) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
    (0..1usize << w.len()).map(move |mask| {
        let s: Vec<f64> = (0..w.len()).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let sum = dot(&s, w);
        (s, sum)
    })
}

/// Bounds `t̲ < t̄` of the attractor `{(ut, v/t) : t̲ ≤ |t| ≤ t̄}`: the extreme
/// roots of `(|u|²t² − |v|²/t²)(|Λv|²/t² − |Λᵀu|²t²)` over sign matrices Λ.
pub(super) fn rank1_interval(u: &[f64], v: &[f64]) -> (f64, f64) {
    let (m, n) = (u.len(), v.len());
    let root = |num: f64, den: f64| powf(num / den, 0.25);
    let t1 = root(dot(v, v), dot(u, u));
    let (mut lo, mut hi) = (t1, t1);
    for mask in 0..1usize << (m * n) {
        let lam = |i: usize, j: usize| if mask >> (i * n + j) & 1 == 1 { -1.0 } else { 1.0 };
        let lv: f64 = (0..m).map(|i| sq((0..n).map(|j| lam(i, j) * v[j]).sum::<f64>())).sum();
        let ltu: f64 = (0..n).map(|j| sq((0..m).map(|i| lam(i, j) * u[i]).sum::<f64>())).sum();
        let t = root(lv, ltu);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    (lo, hi)
}

pub(super) fn rank1(u: Vec<f64>, v: Vec<f64>) -> Result<ProblemSpec> {
    let (m, n) = (u.len(), v.len());
    if m == 0 || n == 0 || m * n > 12 {
        return Err(Error::param("u,v", "need nonempty u, v with m*n <= 12"));
    }
    if u.iter().chain(&v).any(|w| !w.is_finite()) {
        return Err(Error::NonFinite);
    }
    for (name, w) in [("u", &u), ("v", &v)] {
        if let Some((s, _)) = signed_sums(w).find(|(_, sum)| *sum == 0.0) {
            return Err(Error::param(name, alloc::format!("a^T u v^T b vanishes for sign vector {s:?}")));
        }
    }
    let (lo, hi) = rank1_interval(&u, &v);
    let t0 = sqrt(norm(&v) / norm(&u));
    let dim = m + n;
    let family = |sign: f64, iv: (f64, f64), log: bool, label: &str| {
        let (u1, v1, u2, v2) = (u.clone(), v.clone(), u.clone(), v.clone());
        SetDescriptor::curve(
            curve_n(
                dim,
                move |s, o| {
                    let t = if log { t0 * exp(s) } else { s };
                    for i in 0..m {
                        o[i] = sign * u1[i] * t;
                    }
                    for j in 0..n {
                        o[m + j] = sign * v1[j] / t;
                    }
                },
                move |s, o| {
                    let (t, dt) = if log { (t0 * exp(s), t0 * exp(s)) } else { (s, 1.0) };
                    for i in 0..m {
                        o[i] = sign * u2[i] * dt;
                    }
                    for j in 0..n {
                        o[m + j] = -sign * v2[j] * dt / (t * t);
                    }
                },
                vec![iv],
            ),
            String::from(label),
        )
    };
    let mut p = ProblemSpec::from_objective("rank1", Arc::new(Rank1 { u: u.clone(), v: v.clone() }));
    p.params = vec![("u".into(), join(&u)), ("v".into(), join(&v))];
    p.conserved = vec![norm_sq_difference(m, dim)];
    p.minima = Some(SetDescriptor::union(
        vec![family(1.0, (-1.5, 1.5), true, "branch"), family(-1.0, (-1.5, 1.5), true, "branch")],
        "(ut,v/t)",
    )?);
    p.attractor = Some(Attractor {
        set: SetDescriptor::union(vec![family(1.0, (lo, hi), false, "arc"), family(-1.0, (lo, hi), false, "arc")], "interval arc")?,
        order: 2.0,
    });
    p.bounded_box = cube(dim, 3.0);
    Ok(p)
}

// ---------------------------------------------------------------- power1d

struct Power1d {
    m: i32,
}

impl Objective for Power1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        math::powi(x[0], 2 * self.m)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![2.0 * self.m as f64 * math::powi(x[0], 2 * self.m - 1)])
    }

    fn normalized_limits(&self, x: &[f64]) -> Option<LimitSet> {
        (x[0] == 0.0).then(|| LimitSet {
            vectors: vec![vec![1.0], vec![-1.0]],
            exact: true,
        })
    }
}

pub(super) fn power1d(m: f64) -> Result<ProblemSpec> {
    if !(m >= 1.0 && m == math::floor(m) && m <= 16.0) {
        return Err(Error::param("m", "need an integer 1 <= m <= 16"));
    }
    let mut p = ProblemSpec::from_objective("power1d", Arc::new(Power1d { m: m as i32 }));
    p.params = vec![("m".into(), alloc::format!("{m}"))];
    p.minima = Some(SetDescriptor::point(vec![0.0])?);
    p.bounded_box = cube(1, 2.0);
    p.smooth = true;
    Ok(p)
}

pub(super) fn join(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&alloc::format!("{x}"));
    }
    s
}
