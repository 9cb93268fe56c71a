//! Falsification probes for stability of the Euler iterates, and the
//! geometric estimators around a minimum manifold.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::ProblemSpec;
use crate::error::{Error, Result};
use crate::euler::{adversarial_distance, simulate, Selector, Trajectory};
use crate::fields::{bouligand_field, Field};
use crate::math::{linear_fit, ln, logspace};
use crate::region::{unit_ball, Region};
use crate::report::{ProbeCell, ProbeReport, ProbeStats};
use crate::schedule::{make_constant_schedule, make_power_schedule, make_uniform_schedule, StepSchedule};
use crate::set::{tangent_component, SetDescriptor};
use crate::vector::{axpy, distance, min_norm_in_hull, norm};
use crate::{mix_seed, rng_from_seed, Point};

pub const VERDIER_CAP: f64 = 1e3;
/// Largest accepted log-log slope of the Verdier ratio against `1/|x − y|`.
pub const VERDIER_SLOPE_TOL: f64 = 0.1;
/// Shells per decade-spread radius sweep in the geometric estimators.
const SHELLS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityProbeConfig {
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    pub alpha_bars: Vec<f64>,
    /// Exponent of the power schedule `ᾱ/(k+1)^{1/p}` run in every cell.
    pub p: f64,
    pub n_init: usize,
    pub steps: usize,
    pub seed: u64,
}

impl StabilityProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: &f64| v.is_finite() && *v > 0.0;
        if !pos(&self.epsilon) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        if self.deltas.is_empty() || !self.deltas.iter().all(pos) {
            return Err(Error::param("deltas", "need a nonempty list of positive radii"));
        }
        if self.deltas.iter().any(|d| *d > self.epsilon) {
            return Err(Error::param("deltas", "every delta must be <= epsilon"));
        }
        if self.alpha_bars.is_empty() || !self.alpha_bars.iter().all(pos) {
            return Err(Error::param("alpha_bars", "need a nonempty list of positive caps"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", "need p >= 1"));
        }
        if self.n_init == 0 || self.steps == 0 {
            return Err(Error::param("N_init/K", "must be positive"));
        }
        Ok(())
    }
}

fn ascending(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

struct Scan {
    max: f64,
    first_above: Option<usize>,
    last_above: Option<usize>,
}

/// Distances over `points[from..to]`. Indices are skipped while the 1-Lipschitz
/// bound `d(x_anchor) + |x_j − x_anchor|` stays below both `threshold` and
/// `max(floor, running max)`, so `max` is exact once it exceeds `floor` and
/// the above-threshold indices are exact.
fn scan(dist: &dyn Fn(&[f64]) -> f64, points: &[Vec<f64>], from: usize, to: usize, floor: f64, threshold: f64) -> Scan {
    let mut out = Scan {
        max: 0.0,
        first_above: None,
        last_above: None,
    };
    let mut k = from;
    while k < to {
        let d = dist(&points[k]);
        if !(d <= out.max) {
            out.max = d;
        }
        if !(d <= threshold) {
            out.first_above.get_or_insert(k);
            out.last_above = Some(k);
        }
        let budget = (out.max.max(floor) - d).min(threshold - d);
        let anchor = k;
        k += 1;
        while k < to && budget > 0.0 && distance(&points[k], &points[anchor]) <= budget {
            k += 1;
        }
    }
    out
}

fn run(problem: &ProblemSpec, field: &Field, schedule: &StepSchedule, x0: &[f64], steps: usize, selector: &Selector, seed: u64) -> Result<Trajectory> {
    let tr = simulate(problem, field, schedule, x0, steps, selector, seed)?;
    match tr.stopped {
        Some(ref stop) => Err(stop.error.clone()),
        None => Ok(tr),
    }
}

fn finite_start(problem: &ProblemSpec, x: &[f64]) -> bool {
    let f = problem.f(x);
    f.is_finite() && problem.primary_g().is_none_or(|g| g.eval(x) < f64::INFINITY)
}

/// Unit-ball offsets reused across every `δ`; starts with infinite `g` are
/// redrawn.
fn offsets(problem: &ProblemSpec, anchors: &[Vec<f64>], deltas: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng_from_seed(mix_seed(seed, 0x57A7));
    let mut out = Vec::with_capacity(anchors.len());
    for a in anchors {
        let mut tries = 0;
        loop {
            let xi = unit_ball(&mut rng, problem.dim);
            if deltas.iter().all(|d| finite_start(problem, &axpy(a, *d, &xi))) {
                out.push(xi);
                break;
            }
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Region(format!("no admissible start near {a:?}")));
            }
        }
    }
    Ok(out)
}

fn cell_schedules(alpha_bar: f64, p: f64, seed: u64) -> Result<Vec<StepSchedule>> {
    Ok(vec![
        make_constant_schedule(alpha_bar, alpha_bar)?,
        make_power_schedule(alpha_bar, p, alpha_bar)?,
        make_uniform_schedule(alpha_bar, mix_seed(seed, 0x0A1F))?,
    ])
}

fn stability_grid(
    problem: &ProblemSpec,
    field: &Field,
    target: &SetDescriptor,
    anchors: &[Vec<f64>],
    cfg: &StabilityProbeConfig,
) -> Result<ProbeReport> {
    cfg.validate()?;
    let deltas = ascending(&cfg.deltas);
    let alpha_bars = ascending(&cfg.alpha_bars);
    let xi = offsets(problem, anchors, &deltas, cfg.seed)?;
    let dist = |x: &[f64]| target.dist(x);
    let adversarial = adversarial_distance(target.clone());
    let mut stats = ProbeStats {
        seeds: vec![cfg.seed],
        ..Default::default()
    };
    stats.set_param("epsilon", cfg.epsilon);
    stats.set_param("K", cfg.steps as f64);
    let mut best_pass: Option<usize> = None;
    let mut first_witness: Option<(f64, Trajectory)> = None;
    let mut overall_worst = 0.0f64;
    for &delta in &deltas {
        for &alpha_bar in &alpha_bars {
            let mut worst = 0.0f64;
            let (mut trials, mut clean) = (0usize, 0usize);
            let mut escape: Option<(f64, Trajectory)> = None;
            for (i, (a, xi)) in anchors.iter().zip(&xi).enumerate() {
                let x0 = axpy(a, delta, xi);
                let trial_seed = mix_seed(cfg.seed, i as u64);
                let selectors = [Selector::Random { seed: trial_seed }, adversarial.clone()];
                for schedule in cell_schedules(alpha_bar, cfg.p, trial_seed)? {
                    for sel in &selectors {
                        let tr = run(problem, field, &schedule, &x0, cfg.steps, sel, trial_seed)?;
                        let s = scan(&dist, &tr.points, 0, tr.points.len(), 0.0, cfg.epsilon);
                        trials += 1;
                        worst = worst.max(s.max);
                        if s.first_above.is_none() {
                            clean += 1;
                        } else if escape.as_ref().is_none_or(|(m, _)| s.max > *m) {
                            escape = Some((s.max, tr));
                        }
                    }
                }
            }
            stats.trials += trials;
            stats.cells.push(ProbeCell {
                delta,
                alpha_bar,
                p: cfg.p,
                trials,
                worst_excursion: worst,
                hit_rate: clean as f64 / trials as f64,
            });
            overall_worst = overall_worst.max(worst);
            match escape {
                None => best_pass = Some(stats.cells.len() - 1),
                Some(w) => {
                    if first_witness.is_none() {
                        first_witness = Some(w);
                    }
                }
            }
        }
    }
    Ok(match best_pass {
        Some(i) => {
            let c = stats.cells[i].clone();
            stats.set_param("delta", c.delta);
            stats.set_param("alpha_bar", c.alpha_bar);
            ProbeReport::pass(c.worst_excursion, stats)
        }
        None => {
            let c = stats.cells[0].clone();
            stats.set_param("delta", c.delta);
            stats.set_param("alpha_bar", c.alpha_bar);
            let (_, w) = first_witness.expect("a failing cell carries a witness");
            ProbeReport::fail(c.worst_excursion, w, stats)
        }
    })
}

/// Starts `x̄ + δξ_i` in every `(δ, ᾱ)` cell, each run under constant, power and
/// uniform-random schedules with random and distance-maximizing selectors.
/// Passes with the largest cell whose runs never leave `B_ε(x̄)`; fails with the
/// worst escape of the smallest cell when no cell is clean.
pub fn probe_point_stability(problem: &ProblemSpec, field: &Field, xbar: &Point, cfg: &StabilityProbeConfig) -> Result<ProbeReport> {
    let target = SetDescriptor::point(xbar.to_vec())?;
    let anchors = vec![xbar.to_vec(); cfg.n_init];
    stability_grid(problem, field, &target, &anchors, cfg)
}

/// As [`probe_point_stability`] with `d(·, X)`; starts are `y_i + δξ_i` for
/// samples `y_i ∈ X`.
pub fn probe_set_stability(problem: &ProblemSpec, field: &Field, set: &SetDescriptor, cfg: &StabilityProbeConfig) -> Result<ProbeReport> {
    let mut rng = rng_from_seed(mix_seed(cfg.seed, 0x5E7));
    let anchors: Vec<Vec<f64>> = (0..cfg.n_init).map(|_| set.sample(&mut rng)).collect();
    stability_grid(problem, field, set, &anchors, cfg)
}

/// Checkpoint windows `(K/8, K/4]`, `(K/4, K/2]`, `(K/2, K]`.
fn windows(k: usize) -> [(usize, usize); 3] {
    [(k / 8 + 1, k / 4 + 1), (k / 4 + 1, k / 2 + 1), (k / 2 + 1, k + 1)]
}

/// Power schedule `c/(k+1)^{1/p}` (capped at `c`) from each start. Per start,
/// records the largest `d(x_k, X)` in each checkpoint window; passes when the
/// window maxima are non-increasing and `d(x_K, X) ≤ ε_final` for every start
/// and both the first-choice and random selectors.
#[allow(clippy::too_many_arguments)]
pub fn probe_asymptotic(
    problem: &ProblemSpec,
    field: &Field,
    set: &SetDescriptor,
    p: f64,
    c: f64,
    starts: &Region,
    n_init: usize,
    steps: usize,
    eps_final: f64,
    seed: u64,
) -> Result<ProbeReport> {
    if steps < 8 {
        return Err(Error::param("K", "need K >= 8 for the checkpoint windows"));
    }
    let schedule = make_power_schedule(c, p, c)?;
    let x0s = starts.sample_n(n_init, seed)?;
    let dist = |x: &[f64]| set.dist(x);
    let mut stats = ProbeStats {
        seeds: vec![seed],
        ..Default::default()
    };
    stats.set_param("p", p);
    stats.set_param("c", c);
    stats.set_param("epsilon_final", eps_final);
    let mut worst = 0.0f64;
    let mut ok = 0;
    let mut witness = None;
    for (i, x0) in x0s.iter().enumerate() {
        let s = mix_seed(seed, i as u64);
        for sel in [Selector::First, Selector::Random { seed: s }] {
            let tr = run(problem, field, &schedule, x0, steps, &sel, s)?;
            let w: Vec<f64> = windows(steps)
                .iter()
                .map(|&(a, b)| scan(&dist, &tr.points, a, b, 0.0, f64::INFINITY).max)
                .collect();
            let last = dist(tr.last());
            stats.trials += 1;
            worst = worst.max(last);
            let good = w[1] <= w[0] && w[2] <= w[1] && last <= eps_final;
            if good {
                ok += 1;
            } else if witness.is_none() {
                stats.notes.push(format!("start {i}: window maxima {w:?}, final distance {last:.3e}"));
                witness = Some(tr);
            }
        }
    }
    stats.set_param("pass_rate", ok as f64 / stats.trials as f64);
    Ok(match witness {
        Some(w) => ProbeReport::fail(worst, w, stats),
        None => ProbeReport::pass(worst, stats),
    })
}

/// Starts from `basin ∩ [f ≤ sup_A f]` (and finite `g`); schedule
/// `min(cap, c/(k+1)^{1/p})`, random selector. `k_0` is one past the last
/// iterate outside `B_ε(A)`; passes iff every start has `k_0 ≤ K`, i.e. the
/// final iterate is inside. `worst_margin` is the largest final distance.
#[allow(clippy::too_many_arguments)]
pub fn probe_attractor(
    problem: &ProblemSpec,
    field: &Field,
    attractor: &SetDescriptor,
    p: f64,
    c: f64,
    cap: f64,
    basin: &Region,
    epsilon: f64,
    n_init: usize,
    steps: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let schedule = make_power_schedule(c, p, cap)?;
    let level = attractor
        .grid_points(65)
        .iter()
        .map(|a| problem.f(a))
        .fold(f64::NEG_INFINITY, f64::max);
    let obj = problem.objective.clone();
    let g = problem.primary_g().cloned();
    let admissible = basin.clone().with_filter(Arc::new(move |x: &[f64]| {
        obj.value(x) <= level + 1e-12 * (1.0 + crate::math::abs(level)) && g.as_ref().is_none_or(|g| g.eval(x) < f64::INFINITY)
    }));
    let x0s = admissible.sample_n(n_init, seed)?;
    let dist = |x: &[f64]| attractor.dist(x);
    let mut stats = ProbeStats {
        seeds: vec![seed],
        ..Default::default()
    };
    stats.set_param("p", p);
    stats.set_param("c", c);
    stats.set_param("cap", cap);
    stats.set_param("epsilon", epsilon);
    stats.set_param("level", level);
    stats.notes.push(format!("basin sampler: {}", basin.label));
    let mut worst = 0.0f64;
    let mut witness = None;
    for (i, x0) in x0s.iter().enumerate() {
        let s = mix_seed(seed, i as u64);
        let tr = run(problem, field, &schedule, x0, steps, &Selector::Random { seed: s }, s)?;
        let sc = scan(&dist, &tr.points, 0, tr.points.len(), epsilon, epsilon);
        let k0 = sc.last_above.map_or(0, |k| k + 1);
        worst = worst.max(dist(tr.last()));
        stats.trials += 1;
        if k0 <= steps {
            stats.hitting_times.push(Some(k0));
        } else {
            stats.hitting_times.push(None);
            if witness.is_none() {
                witness = Some(tr);
            }
        }
    }
    let hits = stats.hitting_times.iter().filter(|h| h.is_some()).count();
    stats.cells.push(ProbeCell {
        delta: f64::NAN,
        alpha_bar: cap,
        p,
        trials: stats.trials,
        worst_excursion: worst,
        hit_rate: hits as f64 / stats.trials as f64,
    });
    Ok(match witness {
        Some(w) => ProbeReport::fail(worst, w, stats),
        None => ProbeReport::pass(worst, stats),
    })
}

/// `k_0` for a stored trajectory: one past the last iterate with `d > ε`.
pub fn hitting_time(traj: &Trajectory, set: &SetDescriptor, epsilon: f64) -> usize {
    let dist = |x: &[f64]| set.dist(x);
    scan(&dist, &traj.points, 0, traj.points.len(), epsilon, epsilon)
        .last_above
        .map_or(0, |k| k + 1)
}

/// Points in log-spaced shells `[r/2, r]` around `center`, `per` each.
fn shell_samples(center: &[f64], radii: &[f64], per: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(radii.len() * per);
    for (i, &r) in radii.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::param("radii", "must be positive"));
        }
        out.extend(Region::shell(center.to_vec(), r / 2.0, r).sample_n(per, mix_seed(seed, i as u64))?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubregularityFit {
    pub tau: f64,
    pub intercept: f64,
    /// Largest absolute residual of the log-log fit.
    pub max_residual: f64,
    pub samples: usize,
    /// Samples on `M`, or with `d(0, ∂f) = 0` off `M`.
    pub excluded: usize,
}

/// Least-squares slope of `log d(x, M)` against `log d(0, ∂f(x))` over shell
/// samples around `x̄`.
pub fn estimate_subregularity(problem: &ProblemSpec, set: &SetDescriptor, xbar: &Point, radii: &[f64], per_radius: usize, seed: u64) -> Result<SubregularityFit> {
    let d_field = bouligand_field(problem);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut excluded = 0;
    for x in shell_samples(xbar, radii, per_radius, seed)? {
        let d = set.dist(&x);
        let s = min_norm_in_hull(&d_field.evaluate(&x)?.directions);
        if d > 0.0 && s > 0.0 && d.is_finite() && s.is_finite() {
            xs.push(ln(s));
            ys.push(ln(d));
        } else {
            excluded += 1;
        }
    }
    let (tau, intercept) = linear_fit(&xs, &ys).ok_or_else(|| Error::param("samples", "fewer than two usable samples"))?;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| crate::math::abs(y - (tau * x + intercept)))
        .fold(0.0, f64::max);
    Ok(SubregularityFit {
        tau,
        intercept,
        max_residual,
        samples: xs.len(),
        excluded,
    })
}

/// `|P_{T_y M} v| / (|x − y||v|)` with `y = P_M(x)` and `v ∈ ∂f(x)`, sampled in
/// shells whose radii span three decades below `r`. Passes when the largest
/// ratio is at most [`VERDIER_CAP`] and the log-log slope of the ratio against
/// `1/|x − y|` is at most [`VERDIER_SLOPE_TOL`].
pub fn check_verdier(problem: &ProblemSpec, set: &SetDescriptor, xbar: &Point, r: f64, n: usize, seed: u64) -> Result<ProbeReport> {
    let radii = logspace(r * 1e-3, r, SHELLS);
    let d_field = bouligand_field(problem);
    let per = n.div_ceil(SHELLS).max(1);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut worst = 0.0f64;
    let mut worst_at = None;
    let mut stats = ProbeStats {
        seeds: vec![seed],
        ..Default::default()
    };
    for x in shell_samples(xbar, &radii, per, seed)? {
        let proj = set.project(&x);
        if !(proj.distance > 0.0) {
            stats.skipped += 1;
            continue;
        }
        for v in d_field.evaluate(&x)?.directions {
            let nv = norm(&v);
            if nv == 0.0 {
                continue;
            }
            let ratio = tangent_component(&proj.tangents, &v) / (proj.distance * nv);
            stats.trials += 1;
            if ratio > worst || ratio.is_nan() {
                worst = ratio;
                worst_at = Some((x.clone(), v.clone()));
            }
            if ratio > 0.0 {
                xs.push(-ln(proj.distance));
                ys.push(ln(ratio));
            }
        }
    }
    let slope = linear_fit(&xs, &ys).map_or(0.0, |(s, _)| s);
    stats.set_param("slope", slope);
    stats.set_param("cap", VERDIER_CAP);
    let ok = worst <= VERDIER_CAP && slope <= VERDIER_SLOPE_TOL;
    Ok(match (ok, worst_at) {
        (false, Some((x, v))) => ProbeReport::fail(worst, Trajectory::single_step(x, v, 0.0), stats),
        (false, None) => ProbeReport::fail(worst, Trajectory::at_point(xbar.to_vec()), stats),
        _ => ProbeReport::pass(worst, stats),
    })
}

/// `min d(x + αu, M) + d(x, M) − α/2` over samples `x ∈ B_ρ(x̄)`, all
/// `u ∈ −∇̂f(x)` and `A` log-spaced `α ∈ (0, ᾱ]`; passes iff `≥ −1e−10`.
#[allow(clippy::too_many_arguments)]
pub fn check_distance_lower_bound(
    problem: &ProblemSpec,
    set: &SetDescriptor,
    xbar: &Point,
    alpha_bar: f64,
    rho: f64,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<ProbeReport> {
    distance_lower_bound_on(problem, set, &Region::ball(xbar.to_vec(), rho), alpha_bar, n, a, seed)
}

/// [`check_distance_lower_bound`] over an arbitrary sampler.
pub fn distance_lower_bound_on(problem: &ProblemSpec, set: &SetDescriptor, region: &Region, alpha_bar: f64, n: usize, a: usize, seed: u64) -> Result<ProbeReport> {
    if !(alpha_bar > 0.0) || a == 0 {
        return Err(Error::param("alpha_bar/A", "need alpha_bar > 0 and A >= 1"));
    }
    let field = problem.descent_field();
    let alphas = logspace(alpha_bar * 1e-3, alpha_bar, a);
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut stats = ProbeStats {
        seeds: vec![seed],
        ..Default::default()
    };
    for x in region.sample_n(n, seed)? {
        let d0 = set.dist(&x);
        for u in field.evaluate(&x)?.directions {
            for &alpha in &alphas {
                let m = set.dist(&axpy(&x, alpha, &u)) + d0 - alpha / 2.0;
                stats.trials += 1;
                if m < worst || m.is_nan() {
                    worst = m;
                    worst_at = Some((x.clone(), u.clone(), alpha));
                }
            }
        }
    }
    Ok(match worst_at {
        Some((x, u, alpha)) if !(worst >= -1e-10) => ProbeReport::fail(worst, Trajectory::single_step(x, u, alpha), stats),
        _ => ProbeReport::pass(worst, stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_problem;
    use crate::fields::normalized_field;
    use crate::set::line;

    fn cfg(epsilon: f64, deltas: &[f64], alpha_bars: &[f64], n_init: usize, steps: usize) -> StabilityProbeConfig {
        StabilityProbeConfig {
            epsilon,
            deltas: deltas.to_vec(),
            alpha_bars: alpha_bars.to_vec(),
            p: 2.0,
            n_init,
            steps,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.1, &[0.2], &[0.01], 1, 10).validate().is_err());
        assert!(cfg(0.1, &[], &[0.01], 1, 10).validate().is_err());
        assert!(cfg(0.1, &[0.05], &[-1.0], 1, 10).validate().is_err());
        assert!(cfg(0.1, &[0.05], &[0.01], 0, 10).validate().is_err());
        assert!(cfg(0.1, &[0.05, 0.1], &[0.01], 1, 10).validate().is_ok());
    }

    #[test]
    fn scan_matches_full_evaluation() {
        let pts: Vec<Vec<f64>> = (0..500).map(|k| vec![libm::sin(k as f64 * 0.05), 0.3 * libm::cos(k as f64 * 0.021)]).collect();
        let d = |x: &[f64]| libm::hypot(x[0] - 0.2, x[1]);
        let full_max = pts.iter().map(|p| d(p)).fold(0.0, f64::max);
        let last = pts.iter().rposition(|p| d(p) > 0.7);
        let s = scan(&d, &pts, 0, pts.len(), 0.0, 0.7);
        assert_eq!(s.max, full_max);
        assert_eq!(s.last_above, last);
        let s = scan(&d, &pts, 0, pts.len(), 0.7, 0.7);
        assert_eq!(s.last_above, last);
        assert_eq!(s.first_above, pts.iter().position(|p| d(p) > 0.7));
    }

    #[test]
    fn zero_field_is_trivially_stable() {
        let p = get_problem("parabola").unwrap();
        let zero = Field::constant(vec![vec![0.0, 0.0]]);
        let r = probe_point_stability(&p, &zero, &Point::new(vec![0.3, 0.2]).unwrap(), &cfg(0.01, &[0.005], &[0.1], 3, 50)).unwrap();
        assert!(r.passed());
        assert!(r.worst_margin <= 0.005);
    }

    #[test]
    fn bilinear_flat_minimum_is_stable() {
        let p = get_problem("bilinear:A=2,0,0,1").unwrap();
        let xbar = Point::new(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(p.f(&xbar) < 1e-15);
        let r = probe_point_stability(&p, &p.descent_field(), &xbar, &cfg(0.1, &[0.01], &[0.01], 2, 600)).unwrap();
        assert!(r.passed(), "{}", r.worst_margin);
    }

    #[test]
    fn monomial_dichotomy_small_budget() {
        let p = get_problem("monomial:u=1,1").unwrap();
        let c = cfg(0.05, &[0.01], &[0.02], 1, 2000);
        let flat = probe_point_stability(&p, &p.descent_field(), &Point::new(vec![1.0, 1.0]).unwrap(), &c).unwrap();
        let sharp = probe_point_stability(&p, &p.descent_field(), &Point::new(vec![2.0, 0.5]).unwrap(), &c).unwrap();
        assert!(flat.passed());
        assert!(!sharp.passed());
        let w = sharp.witness().unwrap();
        assert!(w.points.iter().any(|x| crate::vector::distance(x, &[2.0, 0.5]) > 0.05));
    }

    #[test]
    fn probe_monotone_in_cells() {
        let p = get_problem("monomial:u=1,1").unwrap();
        let r = probe_point_stability(&p, &p.descent_field(), &Point::new(vec![1.0, 1.0]).unwrap(), &cfg(0.05, &[0.005, 0.01], &[0.005, 0.01], 2, 400)).unwrap();
        let clean = |d: f64, a: f64| r.stats.cells.iter().find(|c| c.delta == d && c.alpha_bar == a).unwrap().hit_rate == 1.0;
        for (d, a) in [(0.01, 0.01), (0.01, 0.005), (0.005, 0.01)] {
            if clean(d, a) {
                assert!(clean(0.005, 0.005));
            }
        }
        assert!(r.passed());
        assert_eq!(r.stats.param("delta"), Some(0.01));
    }

    #[test]
    fn ellipse_sublevel_arc_is_stable() {
        let p = get_problem("ellipse:a=2,b=1").unwrap();
        let g = p.primary_g().unwrap().value.clone();
        let carrier = p.minima.as_ref().unwrap().as_curve().unwrap().clone();
        let x = SetDescriptor::sublevel_intersection(carrier, g, 0.1, "arc").unwrap();
        let r = probe_set_stability(&p, &p.descent_field(), &x, &cfg(0.1, &[0.005], &[0.005], 2, 300)).unwrap();
        assert!(r.passed(), "{}", r.worst_margin);
    }

    #[test]
    fn parabola_minima_stable_and_repelling_under_ascent() {
        let p = get_problem("parabola").unwrap();
        let minima = p.minima.clone().unwrap();
        let c = cfg(0.05, &[0.005], &[0.005], 2, 300);
        assert!(probe_set_stability(&p, &p.descent_field(), &minima, &c).unwrap().passed());
        let up = normalized_field(&p);
        let r = probe_set_stability(&p, &up, &minima, &c).unwrap();
        assert!(!r.passed());
        assert!(r.witness().is_some());
    }

    #[test]
    fn asymptotic_examples() {
        let p = get_problem("parabola").unwrap();
        let origin = SetDescriptor::point(vec![0.0, 0.0]).unwrap();
        let starts = Region::points(vec![vec![0.9, 0.7]]);
        let r = probe_asymptotic(&p, &p.descent_field(), &origin, 6.0, 0.1, &starts, 1, 20_000, 0.2, 3).unwrap();
        assert!(r.passed(), "{:?}", r.stats.notes);
        assert!(r.worst_margin < origin.dist(&[0.9, 0.7]));
        let zero = Field::constant(vec![vec![0.0, 0.0]]);
        let r = probe_asymptotic(&p, &zero, &origin, 2.0, 1.0, &Region::points(vec![vec![0.0, 0.0]]), 1, 64, 0.0, 3).unwrap();
        assert!(r.passed() && r.worst_margin == 0.0);
    }

    #[test]
    fn attractor_with_large_epsilon_hits_immediately() {
        let p = get_problem("parabola").unwrap();
        let minima = p.minima.clone().unwrap();
        let basin = Region::near_set(minima.clone(), 0.0).with_label("minima");
        let r = probe_attractor(&p, &p.descent_field(), &minima, 2.0, 0.01, 0.01, &basin, 0.5, 5, 200, 1).unwrap();
        assert!(r.passed());
        assert!(r.stats.hitting_times.iter().all(|h| *h == Some(0)));
        assert_eq!(r.stats.cells[0].hit_rate, 1.0);
    }

    #[test]
    fn hitting_times_non_increasing_in_epsilon() {
        let p = get_problem("flat4").unwrap();
        let s = make_power_schedule(1.0, 4.0, 1.0).unwrap();
        let tr = simulate(&p, &p.descent_field(), &s, &[0.8, 0.0], 3000, &Selector::Random { seed: 3 }, 3).unwrap();
        let origin = SetDescriptor::point(vec![0.0, 0.0]).unwrap();
        let ks: Vec<usize> = [0.05, 0.1, 0.2, 0.4, 2.0].iter().map(|e| hitting_time(&tr, &origin, *e)).collect();
        assert!(ks.windows(2).all(|w| w[1] <= w[0]), "{ks:?}");
        assert_eq!(ks[4], 0);
    }

    #[test]
    fn subregularity_examples() {
        let p = get_problem("parabola").unwrap();
        let m = p.minima.clone().unwrap();
        let f = estimate_subregularity(&p, &m, &Point::new(vec![0.0, 0.0]).unwrap(), &logspace(1e-3, 1e-1, 4), 50, 1).unwrap();
        assert!((f.tau - 1.0).abs() <= 0.1, "{}", f.tau);
        // f = d(·, M)² with M the x-axis: |∇f| = 2d exactly
        let sq = ProblemSpec::custom("y2", 2, |x| x[1] * x[1], |x| Some(vec![0.0, 2.0 * x[1]]));
        let axis = SetDescriptor::curve(line(vec![0.0, 0.0], vec![1.0, 0.0], (-1.0, 1.0)).unwrap(), "axis");
        let f = estimate_subregularity(&sq, &axis, &Point::new(vec![0.0, 0.0]).unwrap(), &logspace(1e-3, 1e-1, 4), 30, 2).unwrap();
        assert!((f.tau - 1.0).abs() < 1e-9 && f.max_residual < 1e-9);
        for m in 1..=3 {
            let p = get_problem(&alloc::format!("power1d:m={m}")).unwrap();
            let f = estimate_subregularity(&p, &SetDescriptor::point(vec![0.0]).unwrap(), &Point::new(vec![0.0]).unwrap(), &logspace(1e-3, 1e-1, 4), 30, 3).unwrap();
            let want = 1.0 / (2.0 * m as f64 - 1.0);
            assert!((f.tau - want).abs() <= 0.05 * want, "m={m}: {}", f.tau);
        }
    }

    #[test]
    fn verdier_examples() {
        let p = get_problem("flat4").unwrap();
        let axis = SetDescriptor::curve(line(vec![0.0, 0.0], vec![1.0, 0.0], (-1.0, 1.0)).unwrap(), "axis");
        let o = Point::new(vec![0.0, 0.0]).unwrap();
        let r = check_verdier(&p, &axis, &o, 0.1, 400, 1).unwrap();
        assert!(r.passed() && r.worst_margin < 1e-2);
        let absy = ProblemSpec::custom("absy", 2, |x| libm::fabs(x[1]), |x| (x[1] != 0.0).then(|| vec![0.0, libm::copysign(1.0, x[1])]));
        let r = check_verdier(&absy, &axis, &o, 0.1, 200, 1).unwrap();
        assert!(r.passed() && r.worst_margin == 0.0);
        let absx = ProblemSpec::custom("absx", 2, |x| libm::fabs(x[0]), |x| (x[0] != 0.0).then(|| vec![libm::copysign(1.0, x[0]), 0.0]));
        let r = check_verdier(&absx, &axis, &o, 0.1, 400, 1).unwrap();
        assert!(!r.passed());
        assert!(r.stats.param("slope").unwrap() > 0.9);
    }

    #[test]
    fn distance_lower_bound_examples() {
        let p = get_problem("flat4").unwrap();
        let axis = p.minima.clone().unwrap();
        let r = check_distance_lower_bound(&p, &axis, &Point::new(vec![0.0, 0.0]).unwrap(), 0.05, 0.1, 300, 6, 1).unwrap();
        assert!(r.passed(), "{}", r.worst_margin);
        // grid oracle over (x, y, α) with the closed-form field
        let mut oracle = f64::INFINITY;
        for i in 0..=60 {
            for j in 1..=60 {
                let (x, y) = (-0.07 + 0.14 * i as f64 / 60.0, -0.07 + 0.14 * j as f64 / 61.0);
                let g = [2.0 * x * y.powi(4), 2.0 * y + 4.0 * x * x * y.powi(3)];
                let n = g[0].hypot(g[1]);
                for a in logspace(5e-5, 0.05, 6) {
                    oracle = oracle.min((y - a * g[1] / n).abs() + y.abs() - a / 2.0);
                }
            }
        }
        assert!(oracle >= -1e-10);
        // on M the step leaves along the normal: margin = α(|u_⊥| − 1/2)
        let on_m = Region::points(vec![vec![0.5, 0.0]]);
        let r = distance_lower_bound_on(&p, &axis, &on_m, 0.05, 1, 4, 1).unwrap();
        assert!(r.passed());
        assert!((r.worst_margin - 0.05e-3 * 0.5).abs() < 1e-12, "{}", r.worst_margin);
    }
}
