//! Flatness profiles `f̊(x, r) = sup_{B_r(x)} |f − f(x)|`, the induced preorder
//! and screening of sampled minimum sets.

use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::ProblemSpec;
use crate::error::{Error, Result};
use crate::math::{abs, cos, floor, powf, sin};
use crate::region::unit_ball;
use crate::set::SetDescriptor;
use crate::vector::{axpy, distance, dot, norm, scale, sub};
use crate::{mix_seed, rng_from_seed, Point};

pub const REFINE_STEPS: usize = 20;
pub const TOL_REL: f64 = 1e-3;
/// Largest dimension with a deterministic grid.
pub const MAX_GRID_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    GridAndRandom,
    RandomOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub grid: usize,
    pub draws: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl FlatnessProfile {
    pub fn at_min_radius(&self) -> f64 {
        self.values[0]
    }
}

/// Points of the closed unit ball: a polar/spherical grid with `G` shells
/// (outermost on the sphere) for `n ≤ 3`, a cube grid with `⌊G^{3/n}⌋` nodes per
/// axis pushed radially into the ball for `4 ≤ n ≤ 6`.
pub fn unit_grid(n: usize, g: usize) -> Result<Vec<Vec<f64>>> {
    if g == 0 {
        return Ok(Vec::new());
    }
    let tau = 2.0 * core::f64::consts::PI;
    let shell = |i: usize| (i + 1) as f64 / g as f64;
    Ok(match n {
        0 => return Err(Error::param("n", "dimension must be positive")),
        1 => (0..g)
            .map(|i| vec![if g == 1 { 1.0 } else { -1.0 + 2.0 * i as f64 / (g - 1) as f64 }])
            .collect(),
        2 => {
            let mut out = Vec::with_capacity(g * g);
            for i in 0..g {
                for j in 0..g {
                    let th = tau * j as f64 / g as f64;
                    out.push(vec![shell(i) * cos(th), shell(i) * sin(th)]);
                }
            }
            out
        }
        3 => {
            let mut out = Vec::with_capacity(g * g * g);
            for i in 0..g {
                for j in 0..g {
                    // polar angles include both poles
                    let th = if g == 1 { 0.0 } else { core::f64::consts::PI * j as f64 / (g - 1) as f64 };
                    for k in 0..g {
                        let ph = tau * k as f64 / g as f64;
                        let r = shell(i);
                        out.push(vec![r * sin(th) * cos(ph), r * sin(th) * sin(ph), r * cos(th)]);
                    }
                }
            }
            out
        }
        n if n <= MAX_GRID_DIM => {
            let per = (floor(powf(g as f64, 3.0 / n as f64)) as usize).max(2);
            let total = per.pow(n as u32);
            let mut out = Vec::with_capacity(total);
            for mut idx in 0..total {
                let mut p = vec![0.0; n];
                for c in p.iter_mut() {
                    *c = -1.0 + 2.0 * (idx % per) as f64 / (per - 1) as f64;
                    idx /= per;
                }
                let r = norm(&p);
                out.push(if r > 1.0 { scale(&p, 1.0 / r) } else { p });
            }
            out
        }
        n => return Err(Error::Dimensionality(n)),
    })
}

/// Lower bound on `f̊(x, r)` for each radius: the largest `|f(y) − f(x)|` over
/// the scaled unit grid, `R` uniform ball draws and a projected ascent from the
/// best sample, accumulated across radii so the profile is non-decreasing.
pub fn flatness_profile(f: &dyn Fn(&[f64]) -> f64, x: &Point, radii: &[f64], grid: usize, draws: usize, seed: u64) -> Result<FlatnessProfile> {
    flatness_profile_with(f, x, radii, grid, draws, seed, SamplingMode::GridAndRandom)
}

pub fn flatness_profile_with(
    f: &dyn Fn(&[f64]) -> f64,
    x: &Point,
    radii: &[f64],
    grid: usize,
    draws: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<FlatnessProfile> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("radii", "need positive, strictly ascending radii"));
    }
    let n = x.dim();
    let mut unit = match mode {
        SamplingMode::GridAndRandom => unit_grid(n, grid)?,
        SamplingMode::RandomOnly => Vec::new(),
    };
    let mut rng = rng_from_seed(seed);
    unit.extend((0..draws).map(|_| unit_ball(&mut rng, n)));
    if unit.is_empty() {
        return Err(Error::param("G/R", "no sample points"));
    }
    let fx = f(x);
    let gap = |y: &[f64]| {
        let v = abs(f(y) - fx);
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    let mut values = Vec::with_capacity(radii.len());
    let mut running = 0.0f64;
    for &r in radii {
        let (mut best, mut best_u) = (0.0f64, None);
        for u in &unit {
            let v = gap(&axpy(x, r, u));
            if v > best {
                best = v;
                best_u = Some(u);
            }
        }
        if let Some(u) = best_u {
            best = best.max(refine(&gap, x, &axpy(x, r, u), r));
        }
        running = running.max(best);
        values.push(running);
    }
    Ok(FlatnessProfile {
        center: x.to_vec(),
        radii: radii.to_vec(),
        values,
        grid,
        draws,
        seed,
        mode,
    })
}

/// Projected finite-difference ascent on `h` inside `B_r(x)`, steps of `r/100`;
/// on the sphere an outward gradient is replaced by its tangential part.
fn refine(h: &dyn Fn(&[f64]) -> f64, x: &[f64], y0: &[f64], r: f64) -> f64 {
    let mut y = y0.to_vec();
    let mut best = h(&y);
    let eps = r * 1e-4;
    for _ in 0..REFINE_STEPS {
        let mut grad = vec![0.0; y.len()];
        for i in 0..y.len() {
            let (mut a, mut b) = (y.clone(), y.clone());
            a[i] += eps;
            b[i] -= eps;
            grad[i] = (h(&a) - h(&b)) / (2.0 * eps);
        }
        let offset = sub(&y, x);
        let on_sphere = norm(&offset) >= r * (1.0 - 1e-9);
        if on_sphere && dot(&grad, &offset) > 0.0 {
            let radial = dot(&grad, &offset) / dot(&offset, &offset);
            grad = axpy(&grad, -radial, &offset);
        }
        let gn = norm(&grad);
        if !(gn > 0.0) || !gn.is_finite() {
            break;
        }
        let mut next = axpy(&y, r / 100.0 / gn, &grad);
        let d = distance(&next, x);
        if d > r {
            next = axpy(x, r / d, &sub(&next, x));
        }
        y = next;
        best = best.max(h(&y));
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlatnessOrder {
    XFlatter,
    YFlatter,
    Equivalent,
    Incomparable,
}

impl FlatnessOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            FlatnessOrder::XFlatter => "x_flatter",
            FlatnessOrder::YFlatter => "y_flatter",
            FlatnessOrder::Equivalent => "equivalent",
            FlatnessOrder::Incomparable => "incomparable",
        }
    }
}

/// Preorder on two profiles over the radii of the smallest decade,
/// `r ≤ 10 r_min`, with relative tolerance [`TOL_REL`].
pub fn compare_profiles(px: &FlatnessProfile, py: &FlatnessProfile) -> Result<FlatnessOrder> {
    if px.radii != py.radii {
        return Err(Error::param("radii", "profiles must share the radius grid"));
    }
    let limit = 10.0 * px.radii[0];
    let pairs: Vec<(f64, f64)> = px
        .radii
        .iter()
        .zip(px.values.iter().zip(&py.values))
        .filter(|(r, _)| **r <= limit * (1.0 + 1e-12))
        .map(|(_, (a, b))| (*a, *b))
        .collect();
    let x_le = pairs.iter().all(|(a, b)| *a <= b * (1.0 + TOL_REL));
    let y_le = pairs.iter().all(|(a, b)| *b <= a * (1.0 + TOL_REL));
    Ok(match (x_le, y_le) {
        (true, true) => FlatnessOrder::Equivalent,
        (true, false) => FlatnessOrder::XFlatter,
        (false, true) => FlatnessOrder::YFlatter,
        (false, false) => FlatnessOrder::Incomparable,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn compare_flatness(
    f: &dyn Fn(&[f64]) -> f64,
    x: &Point,
    y: &Point,
    radii: &[f64],
    grid: usize,
    draws: usize,
    seed: u64,
) -> Result<FlatnessOrder> {
    let px = flatness_profile(f, x, radii, grid, draws, seed)?;
    let py = flatness_profile(f, y, radii, grid, draws, seed)?;
    compare_profiles(&px, &py)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatScreen {
    /// Sorted flattest first.
    pub ranked: Vec<FlatnessProfile>,
    /// Size of the leading layer within [`TOL_REL`] of the smallest `f̊(·, r_min)`.
    pub flat_layer: usize,
}

impl FlatScreen {
    /// Whether `other` orders every pair of minima that this screen separates by
    /// more than [`TOL_REL`] at `r_min` the same way. Centers of `other` are
    /// matched through `map` to the nearest center here.
    pub fn agrees_with(&self, other: &FlatScreen, map: impl Fn(&[f64]) -> Vec<f64>) -> bool {
        if self.ranked.len() != other.ranked.len() {
            return false;
        }
        let mut position = vec![usize::MAX; self.ranked.len()];
        for (j, q) in other.ranked.iter().enumerate() {
            let c = map(&q.center);
            let i = (0..self.ranked.len())
                .min_by(|&a, &b| distance(&self.ranked[a].center, &c).total_cmp(&distance(&self.ranked[b].center, &c)))
                .expect("nonempty ranking");
            if distance(&self.ranked[i].center, &c) > 1e-9 || position[i] != usize::MAX {
                return false;
            }
            position[i] = j;
        }
        let v: Vec<f64> = self.ranked.iter().map(FlatnessProfile::at_min_radius).collect();
        (0..v.len()).all(|i| (i + 1..v.len()).all(|j| v[j] <= v[i] * (1.0 + TOL_REL) || position[i] < position[j]))
    }
}

/// Profiles at `m` grid points per component of the minimum set, sorted by
/// `f̊(·, r_min)`, ties broken by the following radii.
pub fn screen_flat_minima(problem: &ProblemSpec, minima: &SetDescriptor, m: usize, radii: &[f64], grid: usize, draws: usize, seed: u64) -> Result<FlatScreen> {
    let centers = minima.grid_points(m);
    if centers.is_empty() {
        return Err(Error::Region("minimum set produced no samples".into()));
    }
    let f = |x: &[f64]| problem.f(x);
    let mut ranked = Vec::with_capacity(centers.len());
    for (i, c) in centers.into_iter().enumerate() {
        ranked.push(flatness_profile(&f, &Point::new(c)?, radii, grid, draws, mix_seed(seed, i as u64))?);
    }
    ranked.sort_by(|a, b| {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let floor = ranked[0].at_min_radius();
    let flat_layer = ranked.iter().take_while(|p| p.at_min_radius() <= floor * (1.0 + TOL_REL)).count();
    Ok(FlatScreen { ranked, flat_layer })
}
