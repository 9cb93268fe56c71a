//! The Euler inclusion `x_{k+1} ∈ x_k + α_k F(x_k)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::catalog::ProblemSpec;
use crate::error::{Error, Result};
use crate::fields::{Field, FieldSample};
use crate::math;
use crate::schedule::{StepSchedule, TimeAccumulator};
use crate::set::ScalarFn;
use crate::vector::{axpy, distance, norm};
use crate::{mix_seed, rng_from_seed};

/// Rule for picking `u_k` from the sample `F(x_k)`.
#[derive(Clone)]
pub enum Selector {
    First,
    /// Index taken modulo the sample size.
    Index(usize),
    Random { seed: u64 },
    /// Picks the direction maximizing the given function at `x + αu`.
    Adversarial(ScalarFn),
}

impl core::fmt::Debug for Selector {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Selector::First => f.write_str("first"),
            Selector::Index(i) => write!(f, "index({i})"),
            Selector::Random { seed } => write!(f, "random({seed})"),
            Selector::Adversarial(_) => f.write_str("adversarial"),
        }
    }
}

/// Where and why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct StopReason {
    pub k: usize,
    pub error: Error,
}

/// Full record of a run. `points` has one more entry than `directions`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    /// Index of `directions[k]` within the sample returned at `points[k]`.
    pub choices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    pub g_values: Vec<f64>,
    pub stopped: Option<StopReason>,
}

impl Trajectory {
    /// `x → x + αu`, used as a witness for pointwise checks. Values are unset.
    pub fn single_step(x: Vec<f64>, u: Vec<f64>, alpha: f64) -> Self {
        let y = axpy(&x, alpha, &u);
        Trajectory {
            points: vec![x, y],
            directions: vec![u],
            choices: vec![0],
            alphas: vec![alpha],
            times: vec![0.0, alpha],
            f_values: vec![f64::NAN; 2],
            g_values: vec![f64::NAN; 2],
            stopped: None,
        }
    }

    /// A zero-step record at `x`.
    pub fn at_point(x: Vec<f64>) -> Self {
        Trajectory {
            points: vec![x],
            times: vec![0.0],
            f_values: vec![f64::NAN],
            g_values: vec![f64::NAN],
            ..Default::default()
        }
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn last(&self) -> &[f64] {
        self.points.last().expect("trajectory has a start point")
    }

    /// Largest `|x_{k+1} − x_k − α_k u_k| / (1 + |x_k|)`.
    pub fn reconstruction_residual(&self) -> f64 {
        (0..self.steps())
            .map(|k| {
                let pred = axpy(&self.points[k], self.alphas[k], &self.directions[k]);
                distance(&pred, &self.points[k + 1]) / (1.0 + norm(&self.points[k]))
            })
            .fold(0.0, f64::max)
    }

    /// Rows kept when thinning by `m`: every `m`-th row, the rows where `g`
    /// attains its extrema, and the final row.
    pub fn stored_rows(&self, m: usize) -> Vec<usize> {
        let n = self.points.len();
        let m = m.max(1);
        let mut keep = vec![false; n];
        for k in (0..n).step_by(m) {
            keep[k] = true;
        }
        if n > 0 {
            keep[n - 1] = true;
        }
        let finite: Vec<(usize, f64)> = self.g_values.iter().copied().enumerate().filter(|(_, g)| !g.is_nan()).collect();
        if let Some((i, _)) = finite.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)) {
            keep[i] = true;
        }
        if let Some((i, _)) = finite.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)) {
            keep[i] = true;
        }
        (0..n).filter(|&k| keep[k]).collect()
    }
}

fn select(selector: &Selector, sample: &FieldSample, x: &[f64], alpha: f64, rng: &mut crate::Rng) -> usize {
    let n = sample.directions.len();
    if n == 1 {
        return 0;
    }
    match selector {
        Selector::First => 0,
        Selector::Index(i) => i % n,
        Selector::Random { .. } => rng.random_range(0..n),
        Selector::Adversarial(h) => {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, u) in sample.directions.iter().enumerate() {
                let v = h(&axpy(x, alpha, u));
                if v > best.1 || (v.is_nan() && best.1 == f64::NEG_INFINITY) {
                    best = (i, v);
                }
            }
            best.0
        }
    }
}

/// Runs `K` steps of the inclusion from `x0`. Failures (field overflow, NaN in
/// `f`, empty samples) truncate the record and are reported in `stopped`.
pub fn simulate(
    problem: &ProblemSpec,
    field: &Field,
    schedule: &StepSchedule,
    x0: &[f64],
    steps: usize,
    selector: &Selector,
    seed: u64,
) -> Result<Trajectory> {
    if x0.len() != problem.dim || field.dim() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            found: if x0.len() != problem.dim { x0.len() } else { field.dim() },
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if steps == 0 {
        return Err(Error::param("K", "need at least one step"));
    }
    let sel_seed = match selector {
        Selector::Random { seed: s } => mix_seed(*s, seed),
        _ => seed,
    };
    let mut rng = rng_from_seed(sel_seed);
    let g = problem.primary_g();
    let eval_g = |x: &[f64]| g.map_or(f64::NAN, |g| g.eval(x));

    let mut tr = Trajectory {
        points: Vec::with_capacity(steps + 1),
        directions: Vec::with_capacity(steps),
        choices: Vec::with_capacity(steps),
        alphas: Vec::with_capacity(steps),
        times: Vec::with_capacity(steps + 1),
        f_values: Vec::with_capacity(steps + 1),
        g_values: Vec::with_capacity(steps + 1),
        stopped: None,
    };
    let mut x = x0.to_vec();
    let mut clock = TimeAccumulator::new();
    let f0 = problem.f(&x);
    tr.points.push(x.clone());
    tr.times.push(0.0);
    tr.f_values.push(f0);
    tr.g_values.push(eval_g(&x));
    if f0.is_nan() {
        tr.stopped = Some(StopReason {
            k: 0,
            error: Error::NanValue {
                what: "f".into(),
                point: x,
            },
        });
        return Ok(tr);
    }
    for k in 0..steps {
        let sample = match field.evaluate(&x) {
            Ok(s) => s,
            Err(e) => {
                tr.stopped = Some(StopReason { k, error: e });
                break;
            }
        };
        let alpha = schedule.alpha(k);
        let i = select(selector, &sample, &x, alpha, &mut rng);
        let u = &sample.directions[i];
        let next = axpy(&x, alpha, u);
        let f = problem.f(&next);
        if f.is_nan() || next.iter().any(|v| !v.is_finite()) {
            tr.stopped = Some(StopReason {
                k: k + 1,
                error: Error::NanValue {
                    what: "f".into(),
                    point: next,
                },
            });
            break;
        }
        tr.directions.push(u.clone());
        tr.choices.push(i);
        tr.alphas.push(alpha);
        tr.times.push(clock.advance(alpha));
        tr.f_values.push(f);
        tr.g_values.push(eval_g(&next));
        tr.points.push(next.clone());
        x = next;
    }
    Ok(tr)
}

/// `(ᾱ, gap)` pairs of the tracking experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingGap {
    pub pairs: Vec<(f64, f64)>,
    /// Gaps are non-increasing as `ᾱ` decreases, up to a factor 1.1; always
    /// true for a single cap.
    pub monotone: bool,
    pub reference_step: f64,
}

/// Distance between Euler runs with constant steps `ᾱ ∈ caps` and a fine-step
/// reference run (step `min(caps)/100`), measured at the coarse times `t_k ≤ T`
/// with the reference interpolated linearly in time. Uses `−∇̂f`.
pub fn tracking_gap(
    problem: &ProblemSpec,
    x0: &[f64],
    caps: &[f64],
    horizon: f64,
    selector: &Selector,
    seed: u64,
) -> Result<TrackingGap> {
    tracking_gap_with_field(problem, &problem.descent_field(), x0, caps, horizon, selector, seed)
}

pub fn tracking_gap_with_field(
    problem: &ProblemSpec,
    field: &Field,
    x0: &[f64],
    caps: &[f64],
    horizon: f64,
    selector: &Selector,
    seed: u64,
) -> Result<TrackingGap> {
    if caps.is_empty() || caps.iter().any(|c| !(*c > 0.0)) || caps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("caps", "need positive, strictly decreasing step caps"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("T", "horizon must be positive"));
    }
    let reference_step = caps[caps.len() - 1] / 100.0;
    let n_ref = math::ceil(horizon / reference_step) as usize + 1;
    let reference = simulate(
        problem,
        field,
        &StepSchedule::constant(reference_step)?,
        x0,
        n_ref,
        selector,
        seed,
    )?;
    if let Some(stop) = &reference.stopped {
        return Err(Error::Horizon(alloc::format!("reference run stopped at k={}: {}", stop.k, stop.error)));
    }
    if let Some(k) = reference.points.iter().position(|p| !problem.in_box(p)) {
        return Err(Error::Horizon(alloc::format!(
            "reference run left the bounded box at t={}",
            reference.times[k]
        )));
    }
    let mut pairs = Vec::with_capacity(caps.len());
    for &cap in caps {
        let n = math::ceil(horizon / cap) as usize + 1;
        let run = simulate(problem, field, &StepSchedule::constant(cap)?, x0, n, selector, seed)?;
        let mut gap: f64 = 0.0;
        for (k, &t) in run.times.iter().enumerate() {
            if t > horizon {
                break;
            }
            gap = gap.max(distance(&run.points[k], &interpolate(&reference, t)));
        }
        pairs.push((cap, gap));
    }
    let monotone = pairs.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1 + 1e-15);
    Ok(TrackingGap {
        pairs,
        monotone,
        reference_step,
    })
}

fn interpolate(tr: &Trajectory, t: f64) -> Vec<f64> {
    let times = &tr.times;
    let j = match times.binary_search_by(|s| s.total_cmp(&t)) {
        Ok(j) => return tr.points[j].clone(),
        Err(j) => j,
    };
    if j == 0 {
        return tr.points[0].clone();
    }
    if j >= times.len() {
        return tr.points[times.len() - 1].clone();
    }
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (t - t0) / (t1 - t0);
    tr.points[j - 1]
        .iter()
        .zip(&tr.points[j])
        .map(|(a, b)| a + w * (b - a))
        .collect()
}

/// Convenience: an adversarial selector maximizing the distance to a set.
pub fn adversarial_distance(set: crate::set::SetDescriptor) -> Selector {
    Selector::Adversarial(Arc::new(move |x: &[f64]| set.dist(x)))
}

/// A short human-readable tag for the selector.
pub fn selector_label(s: &Selector) -> String {
    alloc::format!("{s:?}")
}
