//! Sampling-based falsification of decrease inequalities along one or several
//! Euler steps, plus orthogonality of conserved quantities.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::{AuxFunction, ProblemSpec};
use crate::error::{Error, Result};
use crate::euler::Trajectory;
use crate::fields::{bouligand_field, Field};
use crate::math::{abs, logspace, powf};
use crate::region::Region;
use crate::report::{ProbeReport, ProbeStats};
use crate::set::SetDescriptor;
use crate::vector::{axpy, dot, min_norm_in_hull, norm, quad_form};
use crate::{mix_seed, Point};

/// Halvings allowed while calibrating `ᾱ`.
pub const MAX_HALVINGS: usize = 30;
/// Threshold for conserved-quantity orthogonality.
pub const CONSERVED_TOL: f64 = 1e-8;

/// Tolerance for non-strict inequalities at a point where `g = gx`.
pub fn tol_g(gx: f64) -> f64 {
    1e-12 * (1.0 + abs(gx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    DL,
    PDL,
    PQDL,
    FirstOrder,
    SecondOrder,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::DL => "dl",
            CertificateKind::PDL => "pdl",
            CertificateKind::PQDL => "pqdl",
            CertificateKind::FirstOrder => "first",
            CertificateKind::SecondOrder => "second",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecreaseCertificate {
    pub kind: CertificateKind,
    pub p: f64,
    pub q: usize,
    pub omega: f64,
    pub alpha_bar: f64,
    pub region: String,
    pub report: ProbeReport,
}

impl DecreaseCertificate {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Step sequences explored by [`verify_pq_dL`], each scaled by a level `α ≤ ᾱ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPattern {
    Constant,
    /// `α/(k+1)^{1/p}` with the certificate's `p`.
    Power,
    /// `α, α/2, α, …`
    AlternatingDown,
    /// `α/2, α, α/2, …`
    AlternatingUp,
}

pub const DEFAULT_PATTERNS: [StepPattern; 4] = [
    StepPattern::Constant,
    StepPattern::Power,
    StepPattern::AlternatingDown,
    StepPattern::AlternatingUp,
];

fn pattern_steps(pattern: StepPattern, level: f64, p: f64, q: usize) -> Vec<f64> {
    (0..q)
        .map(|k| match pattern {
            StepPattern::Constant => level,
            StepPattern::Power => level / powf(k as f64 + 1.0, 1.0 / p),
            StepPattern::AlternatingDown => {
                if k % 2 == 0 {
                    level
                } else {
                    level / 2.0
                }
            }
            StepPattern::AlternatingUp => {
                if k % 2 == 0 {
                    level / 2.0
                } else {
                    level
                }
            }
        })
        .collect()
}

/// One explored branch: `q` steps from a start point.
struct Branch {
    points: Vec<Vec<f64>>,
    dirs: Vec<Vec<f64>>,
    choices: Vec<usize>,
}

/// All selection branches for the step sequence `alphas`, at most `cap` leaves.
fn branches(field: &Field, x0: &[f64], alphas: &[f64], cap: usize, truncated: &mut bool) -> Result<Vec<Branch>> {
    let mut frontier = vec![Branch {
        points: vec![x0.to_vec()],
        dirs: Vec::new(),
        choices: Vec::new(),
    }];
    for &alpha in alphas {
        let mut next = Vec::new();
        for b in &frontier {
            let x = b.points.last().unwrap();
            let s = field.evaluate(x)?;
            for (i, u) in s.directions.iter().enumerate() {
                if next.len() >= cap {
                    *truncated = true;
                    break;
                }
                let mut nb = Branch {
                    points: b.points.clone(),
                    dirs: b.dirs.clone(),
                    choices: b.choices.clone(),
                };
                nb.points.push(axpy(x, alpha, u));
                nb.dirs.push(u.clone());
                nb.choices.push(i);
                next.push(nb);
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

fn eval_checked(g: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let v = g(x);
    if v.is_nan() {
        return Err(Error::NanValue {
            what: "g".into(),
            point: x.to_vec(),
        });
    }
    Ok(v)
}

fn witness(b: &Branch, alphas: &[f64], g0: f64, gq: f64) -> Trajectory {
    let mut t = Trajectory {
        points: b.points.clone(),
        directions: b.dirs.clone(),
        choices: b.choices.clone(),
        alphas: alphas.to_vec(),
        times: vec![0.0],
        f_values: vec![f64::NAN; b.points.len()],
        g_values: vec![f64::NAN; b.points.len()],
        stopped: None,
    };
    let mut acc = crate::schedule::TimeAccumulator::new();
    for a in alphas {
        t.times.push(acc.advance(*a));
    }
    t.g_values[0] = g0;
    *t.g_values.last_mut().unwrap() = gq;
    t
}

/// Outcome of a sweep of `g(x_q) − g(x_0)` against `ω min α^p`.
struct Sweep {
    worst_margin: f64,
    /// `min (g(x_0) − g(x_q)) / min α^p` over trials whose change exceeds `tol_g`.
    min_ratio: f64,
    resolvable: usize,
    violation: Option<Trajectory>,
    trials: usize,
    vacuous: usize,
    truncated: bool,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    g: &dyn Fn(&[f64]) -> f64,
    field: &Field,
    points: &[Vec<f64>],
    sequences: &[Vec<f64>],
    p: f64,
    omega: f64,
    cap: usize,
) -> Result<Sweep> {
    let mut out = Sweep {
        worst_margin: f64::NEG_INFINITY,
        min_ratio: f64::INFINITY,
        resolvable: 0,
        violation: None,
        trials: 0,
        vacuous: 0,
        truncated: false,
    };
    for x in points {
        let g0 = eval_checked(g, x)?;
        if g0 == f64::INFINITY {
            out.vacuous += 1;
            continue;
        }
        for alphas in sequences {
            let amin = alphas.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = powf(amin, p);
            for b in branches(field, x, alphas, cap, &mut out.truncated)? {
                let gq = eval_checked(g, b.points.last().unwrap())?;
                out.trials += 1;
                let margin = gq - g0 + omega * scale;
                if abs(g0 - gq) > tol_g(g0) {
                    out.resolvable += 1;
                    out.min_ratio = out.min_ratio.min((g0 - gq) / scale);
                }
                if margin > out.worst_margin {
                    out.worst_margin = margin;
                }
                if margin > tol_g(g0) && out.violation.is_none() {
                    out.violation = Some(witness(&b, alphas, g0, gq));
                }
            }
        }
    }
    Ok(out)
}

fn finish(kind: CertificateKind, p: f64, q: usize, omega: f64, alpha_bar: f64, region: &Region, sw: Sweep, seed: u64) -> DecreaseCertificate {
    let mut stats = ProbeStats {
        trials: sw.trials,
        seeds: vec![seed],
        parameters: vec![("p".into(), p), ("q".into(), q as f64), ("omega".into(), omega), ("alpha_bar".into(), alpha_bar)],
        skipped: sw.vacuous,
        ..Default::default()
    };
    if sw.vacuous > 0 {
        stats.notes.push(alloc::format!("{} start points with g = +inf passed vacuously", sw.vacuous));
    }
    if sw.truncated {
        stats.notes.push(alloc::format!("branch tree capped at 4^{q} leaves; some selections were not explored"));
    }
    let report = match sw.violation {
        Some(w) => ProbeReport::fail(sw.worst_margin, w, stats),
        None => ProbeReport::pass(sw.worst_margin, stats),
    };
    DecreaseCertificate {
        kind,
        p,
        q,
        omega,
        alpha_bar,
        region: region.label.clone(),
        report,
    }
}

fn levels(alpha_bar: f64, a: usize) -> Result<Vec<f64>> {
    if !(alpha_bar > 0.0 && alpha_bar.is_finite()) || a == 0 {
        return Err(Error::param("alpha_bar/A", "need alpha_bar > 0 and A >= 1"));
    }
    Ok(logspace(alpha_bar * 1e-3, alpha_bar, a))
}

/// `g(x + αu) ≤ g(x)` for region samples `x`, all `u ∈ F(x)` and `A` log-spaced
/// `α ∈ (0, ᾱ]`.
#[allow(non_snake_case)]
pub fn verify_dL(g: &dyn Fn(&[f64]) -> f64, field: &Field, region: &Region, alpha_bar: f64, n: usize, a: usize, seed: u64) -> Result<DecreaseCertificate> {
    let points = region.sample_n(n, seed)?;
    let seqs: Vec<Vec<f64>> = levels(alpha_bar, a)?.into_iter().map(|l| vec![l]).collect();
    let sw = sweep(g, field, &points, &seqs, 1.0, 0.0, usize::MAX)?;
    Ok(finish(CertificateKind::DL, 1.0, 1, 0.0, alpha_bar, region, sw, seed))
}

/// `g(x + αu) − g(x) ≤ −ωα^p` over the same sweep as [`verify_dL`].
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn verify_p_dL(
    g: &dyn Fn(&[f64]) -> f64,
    field: &Field,
    region: &Region,
    p: f64,
    omega: f64,
    alpha_bar: f64,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<DecreaseCertificate> {
    check_p_omega(p, omega)?;
    let points = region.sample_n(n, seed)?;
    let seqs: Vec<Vec<f64>> = levels(alpha_bar, a)?.into_iter().map(|l| vec![l]).collect();
    let sw = sweep(g, field, &points, &seqs, p, omega, usize::MAX)?;
    Ok(finish(CertificateKind::PDL, p, 1, omega, alpha_bar, region, sw, seed))
}

fn check_p_omega(p: f64, omega: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "need p >= 1"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::param("omega", "need omega > 0"));
    }
    Ok(())
}

/// `g(x_q) − g(x_0) ≤ −ω min{α_0, …, α_{q−1}}^p` along every selection branch
/// (at most `4^q`) for each step pattern scaled to `A` levels in `(0, ᾱ]`.
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn verify_pq_dL(
    g: &dyn Fn(&[f64]) -> f64,
    field: &Field,
    patterns: &[StepPattern],
    p: f64,
    q: usize,
    omega: f64,
    alpha_bar: f64,
    region: &Region,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<DecreaseCertificate> {
    check_p_omega(p, omega)?;
    let (points, seqs, cap) = pq_setup(patterns, p, q, alpha_bar, region, n, a, seed)?;
    let sw = sweep(g, field, &points, &seqs, p, omega, cap)?;
    Ok(finish(CertificateKind::PQDL, p, q, omega, alpha_bar, region, sw, seed))
}

#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn pq_setup(
    patterns: &[StepPattern],
    p: f64,
    q: usize,
    alpha_bar: f64,
    region: &Region,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, usize)> {
    if q == 0 || q > 16 {
        return Err(Error::param("q", "need 1 <= q <= 16"));
    }
    if patterns.is_empty() {
        return Err(Error::param("patterns", "need at least one step pattern"));
    }
    let points = region.sample_n(n, seed)?;
    let mut seqs = Vec::new();
    for l in levels(alpha_bar, a)? {
        for &pat in patterns {
            let s = pattern_steps(pat, l, p, q);
            if !seqs.contains(&s) {
                seqs.push(s);
            }
        }
    }
    Ok((points, seqs, 1usize << (2 * q)))
}

/// Calibrated decrease constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// `min (g(x_0) − g(x_q)) / min α^p` over the calibration sweep.
    pub omega_hat: f64,
    pub alpha_bar: f64,
    pub halvings: usize,
}

/// Halves `ᾱ` from `alpha_bar` until the smallest observed decrease ratio is
/// positive. Changes within `tol_g` do not enter the ratio. `q = 1` with [`StepPattern::Constant`] is the single-step case.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    g: &dyn Fn(&[f64]) -> f64,
    field: &Field,
    patterns: &[StepPattern],
    p: f64,
    q: usize,
    alpha_bar: f64,
    region: &Region,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<Calibration> {
    let mut ab = alpha_bar;
    for h in 0..=MAX_HALVINGS {
        let (points, seqs, cap) = pq_setup(patterns, p, q, ab, region, n, a, seed)?;
        let sw = sweep(g, field, &points, &seqs, p, 0.0, if q == 1 { usize::MAX } else { cap })?;
        if sw.resolvable > 0 && sw.min_ratio > 0.0 && sw.min_ratio.is_finite() {
            return Ok(Calibration {
                omega_hat: sw.min_ratio,
                alpha_bar: ab,
                halvings: h,
            });
        }
        ab /= 2.0;
    }
    Err(Error::Calibration(alloc::format!("no positive decrease ratio after {MAX_HALVINGS} halvings of alpha_bar")))
}

/// Calibration followed by verification at `ω̂/2` on an independent seed,
/// halving `ᾱ` again whenever the verification finds a violation.
#[allow(clippy::too_many_arguments)]
pub fn calibrated_certificate(
    g: &dyn Fn(&[f64]) -> f64,
    field: &Field,
    patterns: &[StepPattern],
    p: f64,
    q: usize,
    alpha_bar: f64,
    region: &Region,
    n: usize,
    a: usize,
    seed: u64,
) -> Result<DecreaseCertificate> {
    let mut ab = alpha_bar;
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        let cal = calibrate(g, field, patterns, p, q, ab, region, n, a, seed)?;
        let omega = cal.omega_hat / 2.0;
        let check_seed = mix_seed(seed, 0xCA1);
        let mut cert = if q == 1 && patterns == [StepPattern::Constant] {
            verify_p_dL(g, field, region, p, omega, cal.alpha_bar, n, a, check_seed)?
        } else {
            verify_pq_dL(g, field, patterns, p, q, omega, cal.alpha_bar, region, n, a, check_seed)?
        };
        cert.report.stats.set_param("omega_hat", cal.omega_hat);
        cert.report.stats.seeds.insert(0, seed);
        if cert.passed() {
            return Ok(cert);
        }
        ab = cal.alpha_bar / 2.0;
        last = Some(cert);
    }
    Ok(last.expect("at least one attempt"))
}

fn gradient_at(g: &AuxFunction, x: &[f64]) -> Result<Vec<f64>> {
    g.gradient(x).ok_or_else(|| Error::UnsupportedPoint { point: x.to_vec() })
}

/// `s = max_{u ∈ F(x̄)} ⟨∇g(x̄), u⟩`; certifies first-order decrease iff `s < −1e−12`.
pub fn check_first_order(g: &AuxFunction, field: &Field, xbar: &Point) -> Result<(f64, bool)> {
    let grad = gradient_at(g, xbar)?;
    let s = field
        .evaluate(xbar)?
        .directions
        .iter()
        .map(|u| dot(&grad, u))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((s, s < -1e-12))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrder {
    /// `max ⟨∇g(x), u⟩` over the ball samples.
    pub first_order_max: f64,
    /// `max_{u ∈ F(x̄)} ⟨∇²g(x̄)u, u⟩`.
    pub s2: f64,
    pub certified: bool,
    /// Ball samples where `∇g` does not exist.
    pub skipped: usize,
}

pub fn check_second_order(g: &AuxFunction, field: &Field, xbar: &Point, r: f64, n: usize, seed: u64) -> Result<SecondOrder> {
    let h = g.hessian(xbar).ok_or_else(|| Error::UnsupportedPoint { point: xbar.to_vec() })?;
    gradient_at(g, xbar)?;
    let s2 = field
        .evaluate(xbar)?
        .directions
        .iter()
        .map(|u| quad_form(&h, u))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut points = vec![xbar.to_vec()];
    points.extend(Region::ball(xbar.to_vec(), r).sample_n(n, seed)?);
    let (mut first, mut skipped) = (f64::NEG_INFINITY, 0);
    for x in &points {
        let Some(grad) = g.gradient(x) else {
            skipped += 1;
            continue;
        };
        for u in field.evaluate(x)?.directions {
            first = first.max(dot(&grad, &u));
        }
    }
    Ok(SecondOrder {
        first_order_max: first,
        s2,
        certified: first <= 1e-10 && s2 < -1e-12,
        skipped,
    })
}

/// `max |⟨∇C(x), u⟩| / (1 + |∇C(x)|)` over region samples and `u ∈ F(x)`.
pub fn check_conserved(c: &AuxFunction, field: &Field, region: &Region, n: usize, seed: u64) -> Result<ProbeReport> {
    let points = region.sample_n(n, seed)?;
    let mut worst = 0.0f64;
    let mut worst_at = None;
    let mut skipped = 0;
    for x in &points {
        let Some(grad) = c.gradient(x) else {
            skipped += 1;
            continue;
        };
        let scale = 1.0 + norm(&grad);
        for u in field.evaluate(x)?.directions {
            let m = abs(dot(&grad, &u)) / scale;
            if m > worst || m.is_nan() {
                worst = m;
                worst_at = Some((x.clone(), u));
            }
        }
    }
    let mut stats = ProbeStats {
        trials: points.len() - skipped,
        seeds: vec![seed],
        skipped,
        ..Default::default()
    };
    stats.set_param("tol", CONSERVED_TOL);
    if skipped > 0 {
        stats.notes.push(alloc::format!("{skipped} samples off the differentiable locus of {}", c.name));
    }
    Ok(match worst_at {
        Some((x, u)) if !(worst <= CONSERVED_TOL) => ProbeReport::fail(worst, Trajectory::single_step(x, u, 1.0), stats),
        _ => ProbeReport::pass(worst, stats),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaEstimate {
    pub zeta: f64,
    pub samples: usize,
    /// `ζ̂` is tiny compared with typical `d(0, D(x))`, pointing at a critical
    /// point inside the annulus.
    pub flagged: bool,
}

/// `ζ̂ = min d(0, co ∇̄f(x))` over `N` draws from `{ℓ/2 ≤ f ≤ ℓ} ∩ B_r(X)`.
pub fn estimate_zeta(problem: &ProblemSpec, ell: f64, center: &SetDescriptor, r: f64, n: usize, seed: u64) -> Result<ZetaEstimate> {
    if !(ell > 0.0) || !(r > 0.0) || n == 0 {
        return Err(Error::param("ell/r/N", "need positive level, radius and count"));
    }
    let obj = problem.objective.clone();
    let c2 = center.clone();
    let region = Region::near_set(center.clone(), r).with_filter(alloc::sync::Arc::new(move |x: &[f64]| {
        let f = obj.value(x);
        f >= ell / 2.0 && f <= ell && c2.dist(x) <= r
    }));
    let points = region.sample_n(n, seed)?;
    let d = bouligand_field(problem);
    let mut norms = Vec::with_capacity(points.len());
    for x in &points {
        norms.push(min_norm_in_hull(&d.evaluate(x)?.directions));
    }
    let zeta = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(ZetaEstimate {
        zeta,
        samples: points.len(),
        flagged: zeta <= 1e-3 * median,
    })
}

/// On `t_k ≤ T`: `f(x_k) ≤ 3ℓ/2`; on `T/2 ≤ t_k ≤ T`: `f(x_k) ≤ ℓ − min{ℓ, κζ²T}/6`.
pub fn check_descent_window(traj: &Trajectory, ell: f64, kappa: f64, zeta: f64, horizon: f64) -> Result<ProbeReport> {
    let f0 = *traj.f_values.first().ok_or_else(|| Error::param("trajectory", "empty"))?;
    if !(f0 <= ell) {
        return Err(Error::param("trajectory", "must start in [f <= ell]"));
    }
    let t_end = *traj.times.last().unwrap();
    if t_end < horizon {
        return Err(Error::Horizon(alloc::format!("trajectory ends at t={t_end} before T={horizon}")));
    }
    let upper = 1.5 * ell;
    let late = ell - ell.min(kappa * zeta * zeta * horizon) / 6.0;
    let tol = 1e-12 * (1.0 + ell);
    let mut worst = f64::NEG_INFINITY;
    let mut window = 0;
    let mut bad = None;
    for (k, (&t, &f)) in traj.times.iter().zip(&traj.f_values).enumerate() {
        if t > horizon {
            break;
        }
        let mut m = f - upper;
        if t >= horizon / 2.0 {
            window += 1;
            m = m.max(f - late);
        }
        if m > worst {
            worst = m;
        }
        if m > tol && bad.is_none() {
            bad = Some(k);
        }
    }
    let mut stats = ProbeStats {
        trials: window,
        ..Default::default()
    };
    stats.set_param("late_bound", late);
    stats.set_param("upper_bound", upper);
    if window == 0 {
        stats.notes.push("window [T/2, T] contains no iterate; second bound holds vacuously".into());
    }
    Ok(match bad {
        Some(_) => ProbeReport::fail(worst, traj.clone(), stats),
        None => ProbeReport::pass(worst, stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_problem;
    use crate::euler::{simulate, Selector};
    use crate::fields::normalized_field;
    use crate::schedule::StepSchedule;
    use alloc::sync::Arc;

    fn flat_minima_region() -> Region {
        Region::mixture(vec![
            Region::boxed(vec![0.05, 0.0], vec![1.0, 0.0]),
            Region::boxed(vec![-1.0, 0.0], vec![-0.05, 0.0]),
        ])
    }

    #[test]
    fn dl_on_flat4_minima() {
        let p = get_problem("flat4").unwrap();
        let g = p.primary_g().unwrap().clone();
        let c = verify_dL(&|x| g.eval(x), &p.descent_field(), &flat_minima_region(), 0.01, 200, 8, 1).unwrap();
        assert!(c.passed(), "{}", c.report.worst_margin);
    }

    #[test]
    fn dl_trivial_cases() {
        let p = get_problem("parabola").unwrap();
        let r = Region::ball(vec![0.5, 0.5], 0.3);
        assert!(verify_dL(&|_| 3.0, &p.descent_field(), &r, 0.1, 50, 4, 0).unwrap().passed());
        // g = −f increases along the descent direction
        let c = verify_dL(&|x| -p.f(x), &p.descent_field(), &r, 0.1, 50, 4, 0).unwrap();
        assert!(!c.passed() && c.report.witness().is_some());
        let nan = verify_dL(&|_| f64::NAN, &p.descent_field(), &r, 0.1, 5, 1, 0);
        assert!(matches!(nan, Err(Error::NanValue { .. })));
    }

    #[test]
    fn infinite_g_passes_vacuously_but_becoming_infinite_fails() {
        let p = get_problem("parabola").unwrap();
        let f = Field::constant(vec![vec![0.0, -1.0]]);
        let g = |x: &[f64]| if x[1] <= 0.0 { f64::INFINITY } else { 1.0 };
        let r = Region::points(vec![vec![0.0, 0.5]]);
        let c = verify_dL(&g, &f, &r, 1.0, 1, 3, 0).unwrap();
        assert!(!c.passed());
        let r = Region::points(vec![vec![0.0, -0.5]]);
        let c = verify_dL(&g, &f, &r, 1.0, 1, 3, 0).unwrap();
        assert!(c.passed() && c.report.stats.skipped == 1);
        drop(p);
    }

    #[test]
    fn tiny_omega_matches_dl_and_weakening_holds() {
        let p = get_problem("parabola").unwrap();
        let g = p.primary_g().unwrap().clone();
        let region = p.lyapunov_region.clone().unwrap();
        let field = p.descent_field();
        let dl = verify_dL(&|x| g.eval(x), &field, &region, 0.01, 100, 5, 4).unwrap();
        let pdl = verify_p_dL(&|x| g.eval(x), &field, &region, 2.0, 1e-15, 0.01, 100, 5, 4).unwrap();
        assert_eq!(dl.passed(), pdl.passed());
        assert!(pdl.passed());
        // same samples: pdl margin dominates dl margin
        assert!(pdl.report.worst_margin >= dl.report.worst_margin);
    }

    #[test]
    fn q_equal_one_reduces_to_pdl() {
        let p = get_problem("ellipse:a=2,b=1").unwrap();
        let g = p.primary_g().unwrap().clone();
        let region = p.lyapunov_region.clone().unwrap();
        let field = p.descent_field();
        let a = verify_p_dL(&|x| g.eval(x), &field, &region, 2.0, 0.01, 0.05, 60, 6, 9).unwrap();
        let b = verify_pq_dL(&|x| g.eval(x), &field, &[StepPattern::Constant], 2.0, 1, 0.01, 0.05, &region, 60, 6, 9).unwrap();
        assert_eq!(a.report.worst_margin, b.report.worst_margin);
        assert_eq!(a.passed(), b.passed());
    }

    #[test]
    fn branch_cap_is_reported() {
        let p = get_problem("l1-3d").unwrap();
        let g = p.primary_g().unwrap().clone();
        let t: f64 = 1.5;
        let r = Region::points(vec![vec![0.0, t, 1.0 / t]]);
        let field = crate::fields::bouligand_field(&p).negated();
        let c = verify_pq_dL(&|x| g.eval(x), &field, &[StepPattern::Constant], 2.0, 1, 1e-9, 1e-3, &r, 1, 1, 0).unwrap();
        assert!(c.report.stats.notes.iter().all(|n| !n.contains("capped")));
        let sq = Field::new(3, crate::fields::FieldKind::Custom, "five", Arc::new(|_| {
            Ok(crate::fields::FieldSample::exact((0..5).map(|i| vec![i as f64, 0.0, 0.0]).collect()))
        }));
        let c = verify_pq_dL(&|_| 0.0, &sq, &[StepPattern::Constant], 2.0, 1, 1e-9, 1e-3, &r, 1, 1, 0).unwrap();
        assert!(c.report.stats.notes.iter().any(|n| n.contains("capped")));
    }

    #[test]
    fn first_order_examples() {
        let p = get_problem("flat4").unwrap();
        let g = p.primary_g().unwrap();
        let x = Point::new(vec![0.7, 0.3]).unwrap();
        let (s, ok) = check_first_order(g, &p.descent_field(), &x).unwrap();
        // oracle: −x y⁴ / |(x y⁴, y + 2x²y³)| by direct evaluation
        let (a, b) = (0.7f64, 0.3f64);
        let oracle = -(a * b.powi(4)) / (a * b.powi(4)).hypot(b + 2.0 * a * a * b.powi(3));
        assert!((s - oracle).abs() < 1e-15 && ok);
        let zero = Field::constant(vec![vec![0.0, 0.0], vec![-1.0, 0.0]]);
        assert!(!check_first_order(g, &zero, &x).unwrap().1);
        let x0 = Point::new(vec![0.0, 0.3]).unwrap();
        assert!(matches!(check_first_order(g, &p.descent_field(), &x0), Err(Error::UnsupportedPoint { .. })));
        let flat = AuxFunction::new("0", Arc::new(|_: &[f64]| 0.0)).with_grad(Arc::new(|_: &[f64]| Some(vec![0.0, 0.0])));
        assert_eq!(check_first_order(&flat, &p.descent_field(), &x).unwrap(), (0.0, false));
    }

    #[test]
    fn second_order_parabola() {
        let p = get_problem("parabola").unwrap();
        let g = p.primary_g().unwrap();
        for t in [0.5f64, -0.8] {
            let x = Point::new(vec![t, t * t]).unwrap();
            let r = check_second_order(g, &p.descent_field(), &x, 0.05, 100, 2).unwrap();
            let oracle = -8.0 * t * t * (4.0 * t * t).exp() / (4.0 * t * t + 1.0);
            assert!((r.s2 - oracle).abs() < 1e-12 * oracle.abs(), "{} {}", r.s2, oracle);
            assert!(r.certified && r.first_order_max <= 1e-10);
        }
        let r = check_second_order(g, &p.descent_field(), &Point::new(vec![0.0, 0.0]).unwrap(), 0.05, 50, 2).unwrap();
        assert_eq!(r.s2, 0.0);
        assert!(!r.certified);
    }

    #[test]
    fn second_order_l1_example() {
        let p = get_problem("l1-3d").unwrap();
        let g = p.primary_g().unwrap();
        let field = crate::fields::bouligand_field(&p).negated();
        for t in [0.9f64, 1.4, 1.8] {
            let x = Point::new(vec![0.0, t, 1.0 / t]).unwrap();
            let r = check_second_order(g, &field, &x, 0.05, 100, 3).unwrap();
            let oracle = (t * t - 1.0 / (t * t) - core::f64::consts::FRAC_1_SQRT_2) * (2.0 / (t * t) - t * t);
            assert!((r.s2 - oracle).abs() < 1e-12, "{} {}", r.s2, oracle);
            assert!(r.certified);
        }
    }

    #[test]
    fn conserved_examples() {
        let p = get_problem("parabola").unwrap();
        let c = &p.conserved[0];
        let at = Region::points(vec![vec![1.0, 0.0]]);
        let r = check_conserved(c, &p.descent_field(), &at, 1, 0).unwrap();
        assert!(r.passed() && r.worst_margin < 1e-15);
        let constant = AuxFunction::new("1", Arc::new(|_: &[f64]| 1.0)).with_grad(Arc::new(|_: &[f64]| Some(vec![0.0, 0.0])));
        let r = check_conserved(&constant, &p.descent_field(), &Region::ball(vec![0.0, 0.0], 1.0), 100, 0).unwrap();
        assert_eq!(r.worst_margin, 0.0);
        let rank = get_problem("rank1").unwrap();
        let minima = rank.minima.clone().unwrap();
        let r = check_conserved(&rank.conserved[0], &crate::fields::bouligand_field(&rank), &Region::near_set(minima, 0.0), 50, 0).unwrap();
        assert!(r.passed(), "{}", r.worst_margin);
        // a non-conserved quantity is caught
        let r = check_conserved(&p.g_list[0], &Field::constant(vec![vec![1.0, 0.0]]), &Region::ball(vec![0.5, 0.5], 0.1), 10, 0).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn zeta_parabola_matches_grid_oracle() {
        let p = get_problem("parabola").unwrap();
        let origin = SetDescriptor::point(vec![0.0, 0.0]).unwrap();
        let z = estimate_zeta(&p, 0.04, &origin, 1.0, 4000, 5).unwrap();
        // oracle: dense grid over the annulus
        let mut best = f64::INFINITY;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (x, y) = (-1.0 + 2.0 * i as f64 / 1000.0, -1.0 + 2.0 * j as f64 / 1000.0);
                let f = (x * x - y).powi(2);
                if x.hypot(y) <= 1.0 && (0.02..=0.04).contains(&f) {
                    let r = x * x - y;
                    best = best.min(2.0 * r.abs() * (4.0 * x * x + 1.0).sqrt());
                }
            }
        }
        assert!(z.zeta >= best * 0.98 && z.zeta <= best * 1.05, "{} vs {}", z.zeta, best);
        assert!(!z.flagged);
    }

    #[test]
    fn zeta_of_distance_like_function_is_one() {
        let p = ProblemSpec::custom("norm", 2, |x| x[0].hypot(x[1]), |x| {
            let r = x[0].hypot(x[1]);
            (r > 0.0).then(|| vec![x[0] / r, x[1] / r])
        });
        let z = estimate_zeta(&p, 0.5, &SetDescriptor::point(vec![0.0, 0.0]).unwrap(), 1.0, 200, 1).unwrap();
        assert!((z.zeta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_flags_critical_points() {
        // the annulus around a local maximum contains vanishing gradients
        let p = ProblemSpec::custom("bump", 1, |x| 1.0 - x[0] * x[0], |x| Some(vec![-2.0 * x[0]]));
        let z = estimate_zeta(&p, 1.0, &SetDescriptor::point(vec![0.0]).unwrap(), 0.7, 20000, 1).unwrap();
        assert!(z.zeta < 1e-3 && z.flagged);
    }

    #[test]
    fn descent_window_examples() {
        let p = get_problem("parabola").unwrap();
        let x0 = [0.15, 0.0];
        let s = StepSchedule::constant(1e-3).unwrap();
        let tr = simulate(&p, &p.descent_field(), &s, &x0, 1200, &Selector::First, 0).unwrap();
        let r = check_descent_window(&tr, 0.04, 0.5, 0.28, 1.0).unwrap();
        assert!(r.passed(), "{}", r.worst_margin);
        let r = check_descent_window(&tr, 0.04, 0.5, 0.28, 1e-4).unwrap();
        assert!(r.passed() && r.stats.notes.iter().any(|n| n.contains("vacuously")));
        let up = normalized_field(&p);
        let tr = simulate(&p, &up, &s, &x0, 1200, &Selector::First, 0).unwrap();
        assert!(!check_descent_window(&tr, 0.04, 0.5, 0.28, 1.0).unwrap().passed());
        assert!(matches!(check_descent_window(&tr, 0.04, 0.5, 0.28, 5.0), Err(Error::Horizon(_))));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn weakening_chain(seed in 0u64..10_000, omega in 1e-6f64..2.0, p in 1.0f64..3.0, alpha_bar in 1e-3f64..0.2) {
            let pr = get_problem("ellipse:a=2,b=1").unwrap();
            let g = pr.primary_g().unwrap().clone();
            let region = pr.lyapunov_region.clone().unwrap();
            let field = pr.descent_field();
            let pdl = verify_p_dL(&|x| g.eval(x), &field, &region, p, omega, alpha_bar, 20, 4, seed).unwrap();
            let dl = verify_dL(&|x| g.eval(x), &field, &region, alpha_bar, 20, 4, seed).unwrap();
            proptest::prop_assert!(pdl.report.worst_margin >= dl.report.worst_margin);
            if pdl.passed() {
                proptest::prop_assert!(dl.passed());
            }
        }
    }
}
