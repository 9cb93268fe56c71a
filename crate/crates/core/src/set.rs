//! Descriptors for the target sets of the probes: points, parametric curves,
//! finite unions, and curves cut down to a sublevel set of an auxiliary function.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::vector::{self, dot, mat_vec};
use crate::Rng;

/// Tolerance for membership in parametric sets.
pub const TOL_SET: f64 = 1e-10;

const CURVE_GRID: usize = 2048;

pub type CurveMap = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Point,
    ParametricCurve,
    FiniteUnion,
    SublevelIntersection,
}

/// A curve `t ↦ c(t)` over a union of closed parameter intervals.
#[derive(Clone)]
pub struct Curve {
    dim: usize,
    map: CurveMap,
    deriv: CurveMap,
    intervals: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(dim: usize, map: CurveMap, deriv: CurveMap, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "curve dimension must be positive"));
        }
        if intervals.is_empty() || intervals.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::param("intervals", "need at least one finite interval [a, b] with a <= b"));
        }
        Ok(Curve {
            dim,
            map,
            deriv,
            intervals,
        })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.map)(t, &mut out);
        out
    }

    pub fn tangent(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.deriv)(t, &mut out);
        out
    }

    fn sq_dist(&self, t: f64, x: &[f64], buf: &mut [f64]) -> f64 {
        (self.map)(t, buf);
        buf.iter().zip(x).map(|(c, xi)| (c - xi) * (c - xi)).sum()
    }

    /// ψ(t) = ⟨c(t) − x, c′(t)⟩, half the derivative of the squared distance.
    fn psi(&self, t: f64, x: &[f64], buf: &mut [f64], dbuf: &mut [f64]) -> f64 {
        (self.map)(t, buf);
        (self.deriv)(t, dbuf);
        buf.iter().zip(x).zip(dbuf.iter()).map(|((c, xi), d)| (c - xi) * d).sum()
    }

    /// Parameter of the closest point and the squared distance.
    fn closest(&self, x: &[f64]) -> (f64, f64) {
        let mut buf = vec![0.0; self.dim];
        let mut dbuf = vec![0.0; self.dim];
        let mut best = (f64::NAN, f64::INFINITY);
        for &(a, b) in &self.intervals {
            if a == b {
                let d = self.sq_dist(a, x, &mut buf);
                if d < best.1 {
                    best = (a, d);
                }
                continue;
            }
            let h = (b - a) / (CURVE_GRID - 1) as f64;
            let grid: Vec<f64> = (0..CURVE_GRID).map(|i| self.sq_dist(a + h * i as f64, x, &mut buf)).collect();
            // refine the three best discrete local minima
            let mut cands: Vec<usize> = (0..CURVE_GRID)
                .filter(|&i| (i == 0 || grid[i] <= grid[i - 1]) && (i + 1 == CURVE_GRID || grid[i] <= grid[i + 1]))
                .collect();
            cands.sort_by(|&i, &j| grid[i].total_cmp(&grid[j]));
            cands.truncate(3);
            for i in cands {
                let lo = if i == 0 { a } else { a + h * (i - 1) as f64 };
                let hi = if i + 1 == CURVE_GRID { b } else { a + h * (i + 1) as f64 };
                let (t, d) = self.refine(x, lo, hi, &mut buf, &mut dbuf);
                if d < best.1 {
                    best = (t, d);
                }
                let d0 = grid[i];
                if d0 < best.1 {
                    best = (a + h * i as f64, d0);
                }
            }
        }
        best
    }

    fn refine(&self, x: &[f64], lo: f64, hi: f64, buf: &mut [f64], dbuf: &mut [f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (lo, hi);
        let plo = self.psi(lo, x, buf, dbuf);
        let phi = self.psi(hi, x, buf, dbuf);
        if plo < 0.0 && phi > 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.psi(mid, x, buf, dbuf) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cands = [lo, hi];
            let mut best = (lo, f64::INFINITY);
            for t in cands {
                let d = self.sq_dist(t, x, buf);
                if d < best.1 {
                    best = (t, d);
                }
            }
            return best;
        }
        // golden section on the squared distance
        let g = 0.5 * (crate::math::sqrt(5.0) - 1.0);
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let mut fc = self.sq_dist(c, x, buf);
        let mut fd = self.sq_dist(d, x, buf);
        for _ in 0..120 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = self.sq_dist(c, x, buf);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = self.sq_dist(d, x, buf);
            }
        }
        let t = 0.5 * (lo + hi);
        (t, self.sq_dist(t, x, buf))
    }

    fn linear_image(&self, m: Arc<Vec<f64>>) -> Curve {
        let n = self.dim;
        let (map, deriv) = (self.map.clone(), self.deriv.clone());
        let m2 = m.clone();
        Curve {
            dim: n,
            map: Arc::new(move |t, out: &mut [f64]| {
                let mut tmp = vec![0.0; n];
                map(t, &mut tmp);
                out.copy_from_slice(&mat_vec(&m, n, &tmp));
            }),
            deriv: Arc::new(move |t, out: &mut [f64]| {
                let mut tmp = vec![0.0; n];
                deriv(t, &mut tmp);
                out.copy_from_slice(&mat_vec(&m2, n, &tmp));
            }),
            intervals: self.intervals.clone(),
        }
    }
}

#[derive(Clone)]
enum Repr {
    Point(Vec<f64>),
    Curve(Curve),
    Union(Vec<SetDescriptor>),
}

/// Closest point of a set and a tangent basis there (empty for isolated points).
#[derive(Clone, Debug)]
pub struct Projection {
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub distance: f64,
}

#[derive(Clone)]
pub struct SetDescriptor {
    kind: SetKind,
    dim: usize,
    repr: Repr,
    label: String,
}

impl core::fmt::Debug for SetDescriptor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SetDescriptor")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl SetDescriptor {
    pub fn point(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SetDescriptor {
            kind: SetKind::Point,
            dim: p.len(),
            label: alloc::format!("{p:?}"),
            repr: Repr::Point(p),
        })
    }

    pub fn curve(curve: Curve, label: impl Into<String>) -> Self {
        SetDescriptor {
            kind: SetKind::ParametricCurve,
            dim: curve.dim,
            repr: Repr::Curve(curve),
            label: label.into(),
        }
    }

    pub fn union(members: Vec<SetDescriptor>, label: impl Into<String>) -> Result<Self> {
        let dim = members.first().map(|m| m.dim).ok_or_else(|| Error::param("members", "union must be nonempty"))?;
        if let Some(m) = members.iter().find(|m| m.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim,
            });
        }
        Ok(SetDescriptor {
            kind: SetKind::FiniteUnion,
            dim,
            repr: Repr::Union(members),
            label: label.into(),
        })
    }

    pub fn points(points: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let members = points.into_iter().map(SetDescriptor::point).collect::<Result<Vec<_>>>()?;
        Self::union(members, label)
    }

    /// The part of `carrier` where `g ≤ gbar`. Admissible parameter intervals are
    /// located by a dense scan and bisection on the boundary crossings.
    pub fn sublevel_intersection(carrier: Curve, g: ScalarFn, gbar: f64, label: impl Into<String>) -> Result<Self> {
        const SCAN: usize = 4096;
        let inside = |t: f64| g(&carrier.at(t)) <= gbar;
        let edge = |mut a: f64, mut b: f64, a_in: bool| {
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if inside(m) == a_in {
                    a = m;
                } else {
                    b = m;
                }
            }
            if a_in {
                a
            } else {
                b
            }
        };
        let mut intervals = Vec::new();
        for &(a, b) in &carrier.intervals {
            let h = (b - a) / SCAN as f64;
            let mut start = if inside(a) { Some(a) } else { None };
            let mut prev = (a, start.is_some());
            for i in 1..=SCAN {
                let t = if i == SCAN { b } else { a + h * i as f64 };
                let now = inside(t);
                if now != prev.1 {
                    let e = edge(prev.0, t, prev.1);
                    if now {
                        start = Some(e);
                    } else if let Some(s) = start.take() {
                        intervals.push((s, e));
                    }
                }
                prev = (t, now);
            }
            if let Some(s) = start {
                intervals.push((s, b));
            }
        }
        if intervals.is_empty() {
            return Err(Error::Region("sublevel intersection is empty on the carrier".into()));
        }
        let curve = Curve {
            intervals,
            ..carrier
        };
        Ok(SetDescriptor {
            kind: SetKind::SublevelIntersection,
            dim: curve.dim,
            repr: Repr::Curve(curve),
            label: label.into(),
        })
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    /// The parametrization of a curve or sublevel-intersection set.
    pub fn as_curve(&self) -> Option<&Curve> {
        match &self.repr {
            Repr::Curve(c) => Some(c),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Parameter intervals when the set is a single curve.
    pub fn curve_intervals(&self) -> Option<&[(f64, f64)]> {
        match &self.repr {
            Repr::Curve(c) => Some(c.intervals()),
            _ => None,
        }
    }

    pub fn dist(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Point(p) => vector::distance(p, x),
            Repr::Curve(c) => crate::math::sqrt(c.closest(x).1),
            Repr::Union(ms) => ms.iter().map(|m| m.dist(x)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn project(&self, x: &[f64]) -> Projection {
        match &self.repr {
            Repr::Point(p) => Projection {
                point: p.clone(),
                tangents: Vec::new(),
                distance: vector::distance(p, x),
            },
            Repr::Curve(c) => {
                let (t, d2) = c.closest(x);
                Projection {
                    point: c.at(t),
                    tangents: vec![c.tangent(t)],
                    distance: crate::math::sqrt(d2),
                }
            }
            Repr::Union(ms) => ms
                .iter()
                .map(|m| m.project(x))
                .min_by(|a, b| a.distance.total_cmp(&b.distance))
                .expect("union is nonempty"),
        }
    }

    /// A random member of the set.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        match &self.repr {
            Repr::Point(p) => p.clone(),
            Repr::Union(ms) => ms[rng.random_range(0..ms.len())].sample(rng),
            Repr::Curve(c) => {
                let total: f64 = c.intervals.iter().map(|(a, b)| b - a).sum();
                let mut s = rng.random::<f64>() * total;
                for &(a, b) in &c.intervals {
                    if s <= b - a {
                        return c.at(a + s);
                    }
                    s -= b - a;
                }
                let (_, b) = *c.intervals.last().unwrap();
                c.at(b)
            }
        }
    }

    /// Deterministic members: `m` evenly spaced parameters per curve interval
    /// (an odd `m` includes each midpoint), every point of a finite set.
    pub fn grid_points(&self, m: usize) -> Vec<Vec<f64>> {
        match &self.repr {
            Repr::Point(p) => vec![p.clone()],
            Repr::Union(ms) => ms.iter().flat_map(|s| s.grid_points(m)).collect(),
            Repr::Curve(c) => {
                let mut out = Vec::new();
                for &(a, b) in &c.intervals {
                    if m <= 1 || a == b {
                        out.push(c.at(0.5 * (a + b)));
                        continue;
                    }
                    let mid = (m - 1) / 2;
                    for i in 0..m {
                        // symmetric construction keeps the midpoint exact for odd m
                        let t = if m % 2 == 1 && i == mid {
                            0.5 * (a + b)
                        } else {
                            a + (b - a) * i as f64 / (m - 1) as f64
                        };
                        out.push(c.at(t));
                    }
                }
                out
            }
        }
    }

    /// Image of the set under `x ↦ M x` for a square row-major `M`.
    pub fn map_linear(&self, m: &[f64]) -> Result<Self> {
        if m.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim * self.dim,
                found: m.len(),
            });
        }
        let m = Arc::new(m.to_vec());
        let repr = match &self.repr {
            Repr::Point(p) => Repr::Point(mat_vec(&m, self.dim, p)),
            Repr::Curve(c) => Repr::Curve(c.linear_image(m)),
            Repr::Union(ms) => Repr::Union(ms.iter().map(|s| s.map_linear(&m)).collect::<Result<Vec<_>>>()?),
        };
        Ok(SetDescriptor {
            kind: self.kind,
            dim: self.dim,
            repr,
            label: self.label.clone(),
        })
    }
}

/// `d(x, X)`.
pub fn set_distance(x: &[f64], set: &SetDescriptor) -> Result<f64> {
    if x.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: x.len(),
        });
    }
    Ok(set.dist(x))
}

/// Tangent-space projection length `|P_T v|` for a basis of (not necessarily
/// orthonormal) tangent vectors; only one- and zero-dimensional bases occur.
pub fn tangent_component(tangents: &[Vec<f64>], v: &[f64]) -> f64 {
    match tangents {
        [] => 0.0,
        [t] => {
            let tt = dot(t, t);
            if tt == 0.0 {
                0.0
            } else {
                crate::math::abs(dot(t, v)) / crate::math::sqrt(tt)
            }
        }
        many => {
            // Gram–Schmidt on the basis
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for t in many {
                let mut w = t.clone();
                for b in &basis {
                    let c = dot(&w, b);
                    w = vector::axpy(&w, -c, b);
                }
                if let Some(u) = vector::normalized(&w) {
                    basis.push(u);
                }
            }
            crate::math::sqrt(basis.iter().map(|b| dot(b, v) * dot(b, v)).sum())
        }
    }
}

/// Helper: a straight segment `t ↦ p + t d`.
pub fn line(p: Vec<f64>, d: Vec<f64>, interval: (f64, f64)) -> Result<Curve> {
    let n = p.len();
    let d2 = d.clone();
    Curve::new(
        n,
        Arc::new(move |t, out: &mut [f64]| {
            for i in 0..n {
                out[i] = p[i] + t * d[i];
            }
        }),
        Arc::new(move |_, out: &mut [f64]| out.copy_from_slice(&d2)),
        vec![interval],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn parabola() -> Curve {
        Curve::new(
            2,
            Arc::new(|t, o: &mut [f64]| {
                o[0] = t;
                o[1] = t * t;
            }),
            Arc::new(|t, o: &mut [f64]| {
                o[0] = 1.0;
                o[1] = 2.0 * t;
            }),
            vec![(-1.0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn distance_to_axis() {
        let axis = SetDescriptor::curve(line(vec![0.0, 0.0], vec![1.0, 0.0], (-10.0, 10.0)).unwrap(), "x-axis");
        assert!((set_distance(&[0.0, 3.0], &axis).unwrap() - 3.0).abs() < 1e-12);
        assert!(set_distance(&[0.0, 3.0, 1.0], &axis).is_err());
    }

    #[test]
    fn distance_to_parabola_matches_dense_grid() {
        let set = SetDescriptor::curve(parabola(), "parabola");
        let d = set_distance(&[1.0, 0.0], &set).unwrap();
        // oracle: brute-force minimization of (t-1)^2 + t^4 on a fine grid,
        // then a ternary search on the bracket
        let f = |t: f64| (t - 1.0).powi(2) + t.powi(4);
        let mut best = 0.0;
        for i in 0..=200_000 {
            let t = -1.0 + 2.0 * i as f64 / 200_000.0;
            if f(t) < f(best) {
                best = t;
            }
        }
        let (mut lo, mut hi) = (best - 1e-5, best + 1e-5);
        for _ in 0..200 {
            let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let oracle = f(0.5 * (lo + hi)).sqrt();
        assert!((d - oracle).abs() <= 1e-8 * oracle);
        assert!((d - 0.537_841).abs() < 1e-6);
    }

    #[test]
    fn distance_to_finite_union_hits_zero() {
        let a = 2f64.powf(0.25);
        let p = vec![0.0, a, 1.0 / a];
        let q = vec![0.0, -a, -1.0 / a];
        let set = SetDescriptor::points(vec![p.clone(), q], "pair").unwrap();
        assert_eq!(set.kind(), SetKind::FiniteUnion);
        assert_eq!(set_distance(&p, &set).unwrap(), 0.0);
    }

    #[test]
    fn projection_reports_tangent() {
        let set = SetDescriptor::curve(parabola(), "parabola");
        let pr = set.project(&[0.0, -0.5]);
        assert!(pr.point[0].abs() < 1e-8 && pr.point[1].abs() < 1e-8);
        assert!((tangent_component(&pr.tangents, &[3.0, 4.0]) - 3.0).abs() < 1e-7);
    }

    #[test]
    fn sublevel_intersection_cuts_the_carrier() {
        let g: ScalarFn = Arc::new(|x: &[f64]| x[0].abs());
        let set = SetDescriptor::sublevel_intersection(parabola(), g, 0.5, "cap").unwrap();
        assert_eq!(set.kind(), SetKind::SublevelIntersection);
        let iv = set.curve_intervals().unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.5).abs() < 1e-12 && (iv[0].1 - 0.5).abs() < 1e-12);
        assert!((set.dist(&[1.0, 1.0]) - (0.25f64 + 0.75 * 0.75).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn odd_grid_includes_midpoint() {
        let set = SetDescriptor::curve(parabola(), "parabola");
        let pts = set.grid_points(41);
        assert_eq!(pts.len(), 41);
        assert_eq!(pts[20], vec![0.0, 0.0]);
    }

    #[test]
    fn linear_image_rotates_points() {
        let set = SetDescriptor::point(vec![1.0, 0.0]).unwrap();
        let rot = set.map_linear(&[0.0, -1.0, 1.0, 0.0]).unwrap();
        assert!(rot.dist(&[0.0, 1.0]) < 1e-15);
    }

    proptest! {
        #[test]
        fn sampled_members_have_zero_distance(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let set = SetDescriptor::curve(parabola(), "parabola");
            let y = set.sample(&mut rng);
            prop_assert!(set.dist(&y) <= TOL_SET);
            let two = SetDescriptor::union(vec![set.clone(), SetDescriptor::point(vec![5.0, 5.0]).unwrap()], "u").unwrap();
            let y = two.sample(&mut rng);
            prop_assert!(two.dist(&y) <= TOL_SET);
        }

        #[test]
        fn distance_is_nonnegative_and_lipschitz(x in -3.0f64..3.0, y in -3.0f64..3.0, h in -0.1f64..0.1) {
            let set = SetDescriptor::curve(parabola(), "parabola");
            let d0 = set.dist(&[x, y]);
            let d1 = set.dist(&[x + h, y]);
            prop_assert!(d0 >= 0.0);
            prop_assert!((d0 - d1).abs() <= h.abs() + 1e-8);
        }
    }
}
