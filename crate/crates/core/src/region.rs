//! Samplers for the test regions of the verifiers and the start distributions of
//! the probes. Every sampler accepts an optional rejection predicate.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::set::SetDescriptor;
use crate::vector::{axpy, mat_vec, scale};
use crate::{math, rng_from_seed, Rng};

/// Draw budget for rejection sampling.
pub const MAX_DRAWS: usize = 1_000_000;

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum RegionKind {
    Ball { center: Vec<f64>, radius: f64 },
    /// Uniform in `r_in ≤ |x − center| ≤ r_out`.
    Shell { center: Vec<f64>, r_in: f64, r_out: f64 },
    /// Axis-aligned box; `lo[i] == hi[i]` pins coordinate `i`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// A member of the set plus a uniform offset of norm at most `radius`.
    NearSet { set: SetDescriptor, radius: f64 },
    /// Cycles through a fixed list.
    Points(Vec<Vec<f64>>),
    /// Draws from the members in turn.
    Mixture(Vec<Region>),
}

#[derive(Clone)]
pub struct Region {
    pub kind: RegionKind,
    pub filter: Option<Predicate>,
    pub label: String,
}

impl core::fmt::Debug for Region {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.label)
    }
}

/// Uniform point of the unit ball in `Rⁿ`.
pub fn unit_ball(rng: &mut Rng, n: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = crate::vector::norm(&g);
    let r = math::powf(rng.random::<f64>(), 1.0 / n as f64);
    if norm == 0.0 {
        return alloc::vec![0.0; n];
    }
    scale(&g, r / norm)
}

/// Uniform point of the unit sphere.
pub fn unit_sphere(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = crate::vector::normalized(&g) {
            return u;
        }
    }
}

impl Region {
    fn new(kind: RegionKind, label: String) -> Self {
        Region {
            kind,
            filter: None,
            label,
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let label = alloc::format!("ball(r={radius})");
        Self::new(RegionKind::Ball { center, radius }, label)
    }

    pub fn shell(center: Vec<f64>, r_in: f64, r_out: f64) -> Self {
        let label = alloc::format!("shell({r_in},{r_out})");
        Self::new(RegionKind::Shell { center, r_in, r_out }, label)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self::new(RegionKind::Box { lo, hi }, "box".into())
    }

    pub fn near_set(set: SetDescriptor, radius: f64) -> Self {
        let label = alloc::format!("near({},r={radius})", set.label());
        Self::new(RegionKind::NearSet { set, radius }, label)
    }

    pub fn points(points: Vec<Vec<f64>>) -> Self {
        Self::new(RegionKind::Points(points), "points".into())
    }

    pub fn mixture(parts: Vec<Region>) -> Self {
        Self::new(RegionKind::Mixture(parts), "mixture".into())
    }

    pub fn with_filter(mut self, filter: Predicate) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            RegionKind::Ball { center, .. } | RegionKind::Shell { center, .. } => center.len(),
            RegionKind::Box { lo, .. } => lo.len(),
            RegionKind::NearSet { set, .. } => set.dim(),
            RegionKind::Points(p) => p.first().map_or(0, |p| p.len()),
            RegionKind::Mixture(parts) => parts.first().map_or(0, |p| p.dim()),
        }
    }

    fn raw(&self, rng: &mut Rng, counter: usize) -> Vec<f64> {
        match &self.kind {
            RegionKind::Ball { center, radius } => axpy(center, *radius, &unit_ball(rng, center.len())),
            RegionKind::Shell { center, r_in, r_out } => {
                let n = center.len() as f64;
                let u: f64 = rng.random();
                let (a, b) = (math::powf(*r_in, n), math::powf(*r_out, n));
                let r = math::powf(a + u * (b - a), 1.0 / n);
                axpy(center, r, &unit_sphere(rng, center.len()))
            }
            RegionKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if a == b { *a } else { a + (b - a) * rng.random::<f64>() })
                .collect(),
            RegionKind::NearSet { set, radius } => {
                let y = set.sample(rng);
                axpy(&y, *radius, &unit_ball(rng, y.len()))
            }
            RegionKind::Points(p) => p[counter % p.len()].clone(),
            RegionKind::Mixture(parts) => parts[counter % parts.len()].sample(rng).unwrap_or_default(),
        }
    }

    fn accepts(&self, x: &[f64]) -> bool {
        !x.is_empty() && x.iter().all(|v| v.is_finite()) && self.filter.as_ref().is_none_or(|f| f(x))
    }

    /// One accepted draw.
    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        for i in 0..MAX_DRAWS {
            let x = self.raw(rng, i);
            if self.accepts(&x) {
                return Ok(x);
            }
        }
        Err(Error::Region(alloc::format!("no accepted draw from {} in {MAX_DRAWS} attempts", self.label)))
    }

    /// `count` accepted draws from a generator seeded with `seed`. Fixed point
    /// lists are cycled in order and mixtures alternate between their parts.
    pub fn sample_n(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let mut counter = 0usize;
        while out.len() < count {
            let x = self.raw(&mut rng, counter);
            counter += 1;
            if self.accepts(&x) {
                out.push(x);
            } else {
                attempts += 1;
                if attempts > MAX_DRAWS {
                    return Err(Error::Region(alloc::format!(
                        "no accepted draw from {} in {MAX_DRAWS} attempts",
                        self.label
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Image under `x ↦ M x` (square row-major `M`); the filter is pulled back
    /// with `Mᵀ`, which is the inverse for the orthogonal maps this is used with.
    pub fn map_orthogonal(&self, m: &[f64]) -> Result<Region> {
        let n = self.dim();
        let mt: Vec<f64> = (0..n * n).map(|k| m[(k % n) * n + k / n]).collect();
        let mv = |x: &[f64]| mat_vec(m, n, x);
        let kind = match &self.kind {
            RegionKind::Ball { center, radius } => RegionKind::Ball {
                center: mv(center),
                radius: *radius,
            },
            RegionKind::Shell { center, r_in, r_out } => RegionKind::Shell {
                center: mv(center),
                r_in: *r_in,
                r_out: *r_out,
            },
            RegionKind::Box { .. } => {
                return Err(Error::param("region", "boxes are not closed under rotation"));
            }
            RegionKind::NearSet { set, radius } => RegionKind::NearSet {
                set: set.map_linear(m)?,
                radius: *radius,
            },
            RegionKind::Points(p) => RegionKind::Points(p.iter().map(|x| mv(x)).collect()),
            RegionKind::Mixture(parts) => {
                RegionKind::Mixture(parts.iter().map(|r| r.map_orthogonal(m)).collect::<Result<Vec<_>>>()?)
            }
        };
        let filter = self.filter.clone().map(|f| {
            let mt = mt.clone();
            Arc::new(move |x: &[f64]| f(&mat_vec(&mt, n, x))) as Predicate
        });
        Ok(Region {
            kind,
            filter,
            label: self.label.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::distance;
    use alloc::vec;

    #[test]
    fn ball_and_shell_draws_respect_radii() {
        let ball = Region::ball(vec![1.0, 2.0, 3.0], 0.5);
        for x in ball.sample_n(500, 3).unwrap() {
            assert!(distance(&x, &[1.0, 2.0, 3.0]) <= 0.5 + 1e-15);
        }
        let shell = Region::shell(vec![0.0, 0.0], 0.1, 0.2);
        for x in shell.sample_n(500, 3).unwrap() {
            let r = crate::vector::norm(&x);
            assert!((0.1 - 1e-12..=0.2 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn filter_is_applied_and_exhaustion_reported() {
        let r = Region::boxed(vec![-1.0, 0.0], vec![1.0, 0.0]).with_filter(Arc::new(|x: &[f64]| x[0] > 0.0));
        for x in r.sample_n(100, 1).unwrap() {
            assert!(x[0] > 0.0 && x[1] == 0.0);
        }
        let never = Region::ball(vec![0.0], 1.0).with_filter(Arc::new(|_: &[f64]| false));
        assert!(matches!(never.sample_n(1, 0), Err(Error::Region(_))));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let r = Region::ball(vec![0.0, 0.0], 1.0);
        assert_eq!(r.sample_n(10, 9).unwrap(), r.sample_n(10, 9).unwrap());
        assert_ne!(r.sample_n(10, 9).unwrap(), r.sample_n(10, 10).unwrap());
    }
}
