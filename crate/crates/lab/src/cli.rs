//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dstab_core::catalog::AuxFunction;
use dstab_core::flatness::{compare_profiles, flatness_profile, screen_flat_minima};
use dstab_core::lyapunov::{
    calibrated_certificate, check_conserved, check_descent_window, check_first_order, check_second_order, estimate_zeta, verify_dL,
    verify_p_dL, verify_pq_dL, StepPattern, DEFAULT_PATTERNS,
};
use dstab_core::math::logspace;
use dstab_core::stability::{
    check_distance_lower_bound, check_verdier, estimate_subregularity, probe_asymptotic, probe_attractor, probe_point_stability,
    probe_set_stability, StabilityProbeConfig,
};
use dstab_core::{get_problem, simulate, Point, ProbeReport, ProblemSpec, Region, Trajectory, Verdict};

use crate::config::{ExperimentConfig, OutputConfig, ProbeConfig, SEED_ENV};
use crate::csvio::{self, CertificateRow, ProbeRow, TrajectoryTable};
use crate::error::{CliError, CliResult};
use crate::figures::{self, Figure};
use crate::parse;
use crate::svg::{self, GScale};

#[derive(Debug, Parser)]
#[command(name = "dstab", version, about = "Euler-inclusion experiments: trajectories, decrease certificates, stability probes, flatness screens")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory and write it as CSV (and optionally SVG).
    Simulate(Opts),
    /// Check a decrease or invariance property of an auxiliary function.
    Verify {
        #[arg(value_enum)]
        check: VerifyCheck,
        #[command(flatten)]
        opts: Opts,
    },
    /// Falsification probes for stability and attraction.
    Probe {
        #[arg(value_enum)]
        kind: ProbeKind,
        #[command(flatten)]
        opts: Opts,
    },
    /// Flatness profiles, comparisons and minimum screens.
    Flatness {
        #[arg(value_enum)]
        kind: FlatnessKind,
        #[command(flatten)]
        opts: Opts,
    },
    /// Regenerate a reference figure as `figN.csv` and `figN.svg`.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        g_scale: Option<GScale>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyCheck {
    Dl,
    Pdl,
    Pqdl,
    First,
    Second,
    Conserved,
    Zeta,
    Descent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Point,
    Set,
    Asymptotic,
    Attractor,
    Subreg,
    Verdier,
    Distbound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlatnessKind {
    Profile,
    Compare,
    Screen,
}

/// Flags shared by every subcommand. Each one overrides the matching config key.
#[derive(Debug, Default, Args)]
pub struct Opts {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// normalized | bouligand
    #[arg(long)]
    pub field: Option<String>,
    /// pow:c=C,p=P[,cap=A] | const:c=C[,cap=A] | uniform:cap=A
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Number of Euler steps K.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// first | random | adversarial | index=i
    #[arg(long)]
    pub selector: Option<String>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub witness: Option<PathBuf>,
    #[arg(long)]
    pub g_scale: Option<GScale>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_bars: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_bar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub cap: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at: Option<Vec<f64>>,
    /// Second point of `flatness compare`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub other: Option<Vec<f64>>,
    /// Sample count N.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Step-size levels A.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub n_init: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub zeta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    /// Grid points per component of the minimum set in `flatness screen`.
    #[arg(long)]
    pub minima: Option<usize>,
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.to_string_lossy().into_owned())
}

impl Opts {
    fn as_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            problem: self.problem.clone(),
            field: self.field.clone(),
            schedule: self.schedule.clone(),
            x0: self.x0.clone(),
            steps: self.steps,
            thin: self.thin,
            selector: self.selector.clone(),
            seed: self.seed,
            output: OutputConfig {
                csv: path_str(&self.csv),
                svg: path_str(&self.svg),
                witness: path_str(&self.witness),
                g_scale: self.g_scale.map(|s| format!("{s:?}").to_lowercase()),
            },
            probe: ProbeConfig {
                epsilon: self.epsilon,
                deltas: self.deltas.clone(),
                alpha_bars: self.alpha_bars.clone(),
                alpha_bar: self.alpha_bar,
                p: self.p,
                q: self.q,
                omega: self.omega,
                c: self.c,
                cap: self.cap,
                radii: self.radii.clone(),
                at: self.at.clone(),
                other: self.other.clone(),
                trials: self.trials,
                levels: self.levels,
                n_init: self.n_init,
                r: self.r,
                ell: self.ell,
                kappa: self.kappa,
                zeta: self.zeta,
                horizon: self.horizon,
                grid: self.grid,
                draws: self.draws,
                minima: self.minima,
            },
        }
    }

    /// Config file (if any) overlaid with the flags.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.overlay(&self.as_config()))
    }
}

/// How a command ended when it did not error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Counterexample,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Counterexample => 1,
        }
    }

    fn of(v: Verdict) -> Self {
        if v.passed() {
            Outcome::Pass
        } else {
            Outcome::Counterexample
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("dstab: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: Command) -> CliResult<Outcome> {
    match cmd {
        Command::Simulate(o) => Ctx::new(o.resolve()?)?.simulate(),
        Command::Verify { check, opts } => Ctx::new(opts.resolve()?)?.verify(check),
        Command::Probe { kind, opts } => Ctx::new(opts.resolve()?)?.probe(kind),
        Command::Flatness { kind, opts } => Ctx::new(opts.resolve()?)?.flatness(kind),
        Command::Reproduce { figure, out_dir, g_scale } => reproduce(figure, &out_dir, g_scale),
    }
}

pub fn reproduce(fig: Figure, dir: &Path, scale: Option<GScale>) -> CliResult<Outcome> {
    let run = figures::run(fig)?;
    let (csv, svg) = figures::render(fig, &run, scale)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{}.csv", fig.name())), csv)?;
    std::fs::write(dir.join(format!("{}.svg", fig.name())), svg)?;
    Ok(Outcome::Pass)
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::config(format!("missing --{flag}")))
}

struct Ctx {
    cfg: ExperimentConfig,
    problem: ProblemSpec,
    seed: u64,
}

impl Ctx {
    fn new(cfg: ExperimentConfig) -> CliResult<Self> {
        let problem = get_problem(&need(&cfg.problem, "problem")?)?;
        let seed = cfg.seed();
        Ok(Ctx { cfg, problem, seed })
    }

    fn pr(&self) -> &ProbeConfig {
        &self.cfg.probe
    }

    fn field(&self) -> CliResult<dstab_core::Field> {
        parse::field(&self.problem, self.cfg.field.as_deref().unwrap_or("normalized"))
    }

    fn point(&self, v: &Option<Vec<f64>>, flag: &str) -> CliResult<Point> {
        let v = need(v, flag)?;
        if v.len() != self.problem.dim {
            return Err(dstab_core::Error::DimensionMismatch {
                expected: self.problem.dim,
                found: v.len(),
            }
            .into());
        }
        Ok(Point::new(v)?)
    }

    fn g(&self) -> CliResult<&AuxFunction> {
        self.problem
            .primary_g()
            .ok_or_else(|| CliError::config(format!("{} has no auxiliary function", self.problem.id())))
    }

    fn lyapunov_region(&self) -> CliResult<Region> {
        self.problem
            .lyapunov_region
            .clone()
            .ok_or_else(|| CliError::config(format!("{} declares no test region", self.problem.id())))
    }

    fn box_region(&self) -> Region {
        let (lo, hi) = self.problem.bounded_box.clone();
        Region::boxed(lo, hi).with_label("box")
    }

    fn trials(&self, default: usize) -> usize {
        self.pr().trials.unwrap_or(default)
    }

    fn trajectory(&self) -> CliResult<Trajectory> {
        let schedule = parse::schedule(self.cfg.schedule.as_deref().unwrap_or("pow:c=1,p=6"), self.seed)?;
        let x0 = need(&self.cfg.x0, "x0")?;
        let selector = parse::selector(self.cfg.selector.as_deref().unwrap_or("first"), &self.problem, self.seed)?;
        let steps = self.cfg.steps.unwrap_or(1000);
        Ok(simulate(&self.problem, &self.field()?, &schedule, &x0, steps, &selector, self.seed)?)
    }

    /// Writes `bytes` to the configured CSV path, or stdout.
    fn emit(&self, bytes: Vec<u8>) -> CliResult<()> {
        match &self.cfg.output.csv {
            Some(path) => std::fs::write(path, bytes)?,
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&bytes)?;
            }
        }
        Ok(())
    }

    fn witness_path(&self) -> PathBuf {
        if let Some(w) = &self.cfg.output.witness {
            return PathBuf::from(w);
        }
        match &self.cfg.output.csv {
            Some(csv) => {
                let p = Path::new(csv);
                let stem = p.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
                p.with_file_name(format!("{stem}.witness.csv"))
            }
            None => PathBuf::from("witness.csv"),
        }
    }

    fn write_witness(&self, report: &ProbeReport) -> CliResult<()> {
        if let Some(w) = report.witness() {
            let path = self.witness_path();
            let mut w = w.clone();
            for (k, x) in w.points.iter().enumerate() {
                if w.f_values[k].is_nan() {
                    w.f_values[k] = self.problem.f(x);
                }
                if w.g_values[k].is_nan() {
                    w.g_values[k] = self.problem.primary_g().map_or(f64::NAN, |g| g.eval(x));
                }
            }
            let mut bytes = Vec::new();
            TrajectoryTable::full(&w).write(&mut bytes)?;
            std::fs::write(&path, bytes)?;
            eprintln!("witness written to {}", path.display());
        }
        Ok(())
    }

    fn simulate(&self) -> CliResult<Outcome> {
        let tr = self.trajectory()?;
        let mut bytes = Vec::new();
        TrajectoryTable::from_rows(&tr, &tr.stored_rows(self.cfg.thin.unwrap_or(1))).write(&mut bytes)?;
        self.emit(bytes)?;
        if let Some(path) = &self.cfg.output.svg {
            let scale = self.cfg.output.g_scale.as_deref().unwrap_or("auto").parse::<GScale>().map_err(CliError::config)?;
            let title = format!("{} from {:?}", self.problem.id(), tr.points[0]);
            let svg = svg::render(&self.problem, &tr.points, scale, &title).ok_or_else(|| CliError::config("SVG output needs a planar problem"))?;
            std::fs::write(path, svg)?;
        }
        match &tr.stopped {
            Some(stop) => Err(CliError::runtime(format!("run stopped at k={}: {}", stop.k, stop.error))),
            None => Ok(Outcome::Pass),
        }
    }

    fn certificates(&self, rows: Vec<CertificateRow>, reports: &[&ProbeReport]) -> CliResult<Outcome> {
        let mut bytes = Vec::new();
        csvio::write_certificates(&mut bytes, &rows)?;
        self.emit(bytes)?;
        for r in reports {
            if !r.passed() {
                self.write_witness(r)?;
                return Ok(Outcome::Counterexample);
            }
        }
        Ok(Outcome::Pass)
    }

    fn verify(&self, check: VerifyCheck) -> CliResult<Outcome> {
        let pr = self.pr();
        let n = self.trials(500);
        let a = pr.levels.unwrap_or(8);
        let alpha_bar = pr.alpha_bar.unwrap_or(0.1);
        let single = |cert: dstab_core::lyapunov::DecreaseCertificate| {
            let row = CertificateRow::from(&cert);
            self.certificates(vec![row], &[&cert.report])
        };
        match check {
            VerifyCheck::Dl => {
                let g = self.g()?;
                single(verify_dL(&|x| g.eval(x), &self.field()?, &self.lyapunov_region()?, alpha_bar, n, a, self.seed)?)
            }
            VerifyCheck::Pdl | VerifyCheck::Pqdl => {
                let g = self.g()?;
                let field = self.field()?;
                let region = self.lyapunov_region()?;
                let p = pr.p.unwrap_or(2.0);
                let (q, patterns): (usize, &[StepPattern]) = if check == VerifyCheck::Pdl {
                    (1, &[StepPattern::Constant])
                } else {
                    (pr.q.unwrap_or(2), &DEFAULT_PATTERNS)
                };
                let gf = |x: &[f64]| g.eval(x);
                let cert = match pr.omega {
                    None => calibrated_certificate(&gf, &field, patterns, p, q, alpha_bar, &region, n, a, self.seed)?,
                    Some(omega) if q == 1 => verify_p_dL(&gf, &field, &region, p, omega, alpha_bar, n, a, self.seed)?,
                    Some(omega) => verify_pq_dL(&gf, &field, patterns, p, q, omega, alpha_bar, &region, n, a, self.seed)?,
                };
                single(cert)
            }
            VerifyCheck::First => {
                let xbar = self.point(&pr.at, "at")?;
                let (s, certified) = check_first_order(self.g()?, &self.field()?, &xbar)?;
                let report = point_report(&xbar, s, certified);
                let row = self.plain_row("first", "point", 1, f64::NAN, s, report.verdict());
                self.certificates(vec![row], &[&report])
            }
            VerifyCheck::Second => {
                let xbar = self.point(&pr.at, "at")?;
                let so = check_second_order(self.g()?, &self.field()?, &xbar, pr.r.unwrap_or(0.1), n, self.seed)?;
                eprintln!("first-order max {:e}, s2 {:e}, skipped {}", so.first_order_max, so.s2, so.skipped);
                let report = point_report(&xbar, so.s2, so.certified);
                let row = self.plain_row("second", &format!("ball(r={})", pr.r.unwrap_or(0.1)), n, f64::NAN, so.s2, report.verdict());
                self.certificates(vec![row], &[&report])
            }
            VerifyCheck::Conserved => {
                if self.problem.conserved.is_empty() {
                    return Err(CliError::config(format!("{} declares no conserved quantity", self.problem.id())));
                }
                let field = self.field()?;
                let region = self.box_region();
                let mut rows = Vec::new();
                let mut reports = Vec::new();
                for c in &self.problem.conserved {
                    let r = check_conserved(c, &field, &region, n, self.seed)?;
                    rows.push(CertificateRow {
                        check: format!("conserved:{}", c.name),
                        region: region.label.clone(),
                        p: f64::NAN,
                        q: 0,
                        omega: f64::NAN,
                        alpha_bar: f64::NAN,
                        n_trials: r.stats.trials,
                        worst_margin: r.worst_margin,
                        verdict: r.verdict().as_str().into(),
                    });
                    reports.push(r);
                }
                let refs: Vec<&ProbeReport> = reports.iter().collect();
                self.certificates(rows, &refs)
            }
            VerifyCheck::Zeta => {
                let z = self.zeta()?;
                if z.flagged {
                    eprintln!("warning: zeta is small against the median; a critical point may lie in the annulus");
                }
                let row = self.plain_row("zeta", &format!("annulus(ell={},r={})", need(&pr.ell, "ell")?, pr.r.unwrap_or(0.5)), z.samples, f64::NAN, z.zeta, Verdict::NoViolationFound);
                self.certificates(vec![row], &[])
            }
            VerifyCheck::Descent => {
                let tr = self.trajectory()?;
                let ell = need(&pr.ell, "ell")?;
                let zeta = match pr.zeta {
                    Some(z) => z,
                    None => self.zeta()?.zeta,
                };
                let horizon = pr.horizon.unwrap_or(*tr.times.last().unwrap());
                let report = check_descent_window(&tr, ell, pr.kappa.unwrap_or(1.0), zeta, horizon)?;
                for note in &report.stats.notes {
                    eprintln!("{note}");
                }
                let row = self.plain_row("descent", &format!("window(T={horizon})"), report.stats.trials, f64::NAN, report.worst_margin, report.verdict());
                self.certificates(vec![row], &[&report])
            }
        }
    }

    fn zeta(&self) -> CliResult<dstab_core::lyapunov::ZetaEstimate> {
        let pr = self.pr();
        let minima = self.problem.minima.as_ref().ok_or_else(|| CliError::config("zeta needs a problem with a known minimum set"))?;
        Ok(estimate_zeta(&self.problem, need(&pr.ell, "ell")?, minima, pr.r.unwrap_or(0.5), self.trials(500), self.seed)?)
    }

    fn plain_row(&self, check: &str, region: &str, n: usize, alpha_bar: f64, margin: f64, v: Verdict) -> CertificateRow {
        CertificateRow {
            check: check.into(),
            region: region.into(),
            p: self.pr().p.unwrap_or(f64::NAN),
            q: self.pr().q.unwrap_or(0),
            omega: self.pr().omega.unwrap_or(f64::NAN),
            alpha_bar,
            n_trials: n,
            worst_margin: margin,
            verdict: v.as_str().into(),
        }
    }

    fn probes(&self, rows: Vec<ProbeRow>, report: &ProbeReport) -> CliResult<Outcome> {
        let mut bytes = Vec::new();
        csvio::write_probes(&mut bytes, &rows)?;
        self.emit(bytes)?;
        for note in &report.stats.notes {
            eprintln!("{note}");
        }
        self.write_witness(report)?;
        Ok(Outcome::of(report.verdict()))
    }

    fn stability_config(&self, default_eps: f64) -> CliResult<StabilityProbeConfig> {
        let pr = self.pr();
        let epsilon = pr.epsilon.unwrap_or(default_eps);
        let grid = |v: &Option<Vec<f64>>| v.clone().unwrap_or_else(|| [0.1, 0.2, 0.4].iter().map(|s| s * epsilon).collect());
        Ok(StabilityProbeConfig {
            epsilon,
            deltas: grid(&pr.deltas),
            alpha_bars: grid(&pr.alpha_bars),
            p: pr.p.unwrap_or(2.0),
            n_init: pr.n_init.unwrap_or(4),
            steps: self.cfg.steps.unwrap_or(20_000),
            seed: self.seed,
        })
    }

    fn minima(&self) -> CliResult<dstab_core::SetDescriptor> {
        self.problem
            .minima
            .clone()
            .ok_or_else(|| CliError::config(format!("{} has no closed-form minimum set", self.problem.id())))
    }

    fn probe(&self, kind: ProbeKind) -> CliResult<Outcome> {
        let pr = self.pr();
        let row = |probe: &str, target: &str, report: &ProbeReport| ProbeRow {
            probe: probe.into(),
            target: target.into(),
            epsilon: report.stats.param("epsilon").unwrap_or(f64::NAN),
            delta: report.stats.param("delta").unwrap_or(f64::NAN),
            alpha_bar: report.stats.param("alpha_bar").unwrap_or(f64::NAN),
            p: report.stats.param("p").unwrap_or(f64::NAN),
            n_trials: report.stats.trials,
            worst_excursion: report.worst_margin,
            hit_rate: report.stats.cells.first().map_or(f64::NAN, |c| c.hit_rate),
            verdict: report.verdict().as_str().into(),
        };
        match kind {
            ProbeKind::Point | ProbeKind::Set => {
                let cfg = self.stability_config(0.05)?;
                let field = self.field()?;
                let (name, target, report) = if kind == ProbeKind::Point {
                    let xbar = self.point(&pr.at, "at")?;
                    (
                        "point",
                        xbar.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
                        probe_point_stability(&self.problem, &field, &xbar, &cfg)?,
                    )
                } else {
                    let set = parse::reference_set(&self.problem)?;
                    ("set", set.label().to_string(), probe_set_stability(&self.problem, &field, &set, &cfg)?)
                };
                let mut rows: Vec<ProbeRow> = report
                    .stats
                    .cells
                    .iter()
                    .map(|c| ProbeRow {
                        probe: format!("{name}.cell"),
                        target: target.clone(),
                        epsilon: cfg.epsilon,
                        delta: c.delta,
                        alpha_bar: c.alpha_bar,
                        p: c.p,
                        n_trials: c.trials,
                        worst_excursion: c.worst_excursion,
                        hit_rate: c.hit_rate,
                        verdict: if c.hit_rate == 1.0 { Verdict::NoViolationFound } else { Verdict::Counterexample }.as_str().into(),
                    })
                    .collect();
                let mut summary = row(name, &target, &report);
                summary.p = cfg.p;
                summary.hit_rate = f64::NAN;
                rows.push(summary);
                self.probes(rows, &report)
            }
            ProbeKind::Asymptotic | ProbeKind::Attractor => {
                let attractor = self
                    .problem
                    .attractor
                    .as_ref()
                    .ok_or_else(|| CliError::config(format!("{} declares no attractor", self.problem.id())))?;
                let (dc, dcap) = self.problem.attractor_schedule.unwrap_or((1.0, 1.0));
                let p = pr.p.unwrap_or(attractor.order);
                let c = pr.c.unwrap_or(dc);
                let basin = self
                    .problem
                    .basin
                    .clone()
                    .unwrap_or_else(|| Region::near_set(attractor.set.clone(), 0.5));
                let epsilon = pr.epsilon.unwrap_or(0.1);
                let steps = self.cfg.steps.unwrap_or(100_000);
                let field = self.field()?;
                let (name, report) = if kind == ProbeKind::Attractor {
                    let cap = pr.cap.unwrap_or(dcap);
                    let r = probe_attractor(&self.problem, &field, &attractor.set, p, c, cap, &basin, epsilon, pr.n_init.unwrap_or(100), steps, self.seed)?;
                    let times: Vec<usize> = r.stats.hitting_times.iter().flatten().copied().collect();
                    if let Some(max) = times.iter().max() {
                        eprintln!("hitting times: max {max} over {} starts", times.len());
                    }
                    ("attractor", r)
                } else {
                    ("asymptotic", probe_asymptotic(&self.problem, &field, &attractor.set, p, c, &basin, pr.n_init.unwrap_or(20), steps, epsilon, self.seed)?)
                };
                let mut r = row(name, attractor.set.label(), &report);
                r.epsilon = epsilon;
                r.p = p;
                r.alpha_bar = report.stats.param("cap").unwrap_or(f64::NAN);
                if kind == ProbeKind::Asymptotic {
                    r.hit_rate = report.stats.param("pass_rate").unwrap_or(f64::NAN);
                }
                self.probes(vec![r], &report)
            }
            ProbeKind::Subreg => {
                let set = self.minima()?;
                let xbar = self.point(&pr.at, "at")?;
                let radii = pr.radii.clone().unwrap_or_else(|| logspace(1e-3, 1e-1, 5));
                let fit = estimate_subregularity(&self.problem, &set, &xbar, &radii, self.trials(200), self.seed)?;
                eprintln!(
                    "tau {:.6} intercept {:.6} max residual {:.3e} ({} samples, {} excluded)",
                    fit.tau, fit.intercept, fit.max_residual, fit.samples, fit.excluded
                );
                let r = ProbeRow {
                    probe: "subreg".into(),
                    target: set.label().into(),
                    epsilon: f64::NAN,
                    delta: f64::NAN,
                    alpha_bar: f64::NAN,
                    p: f64::NAN,
                    n_trials: fit.samples,
                    worst_excursion: fit.tau,
                    hit_rate: f64::NAN,
                    verdict: Verdict::NoViolationFound.as_str().into(),
                };
                self.probes(vec![r], &ProbeReport::pass(fit.tau, Default::default()))
            }
            ProbeKind::Verdier => {
                let set = self.minima()?;
                let xbar = self.point(&pr.at, "at")?;
                let report = check_verdier(&self.problem, &set, &xbar, pr.r.unwrap_or(0.1), self.trials(800), self.seed)?;
                if let Some(s) = report.stats.param("slope") {
                    eprintln!("slope {s:.4}");
                }
                self.probes(vec![row("verdier", set.label(), &report)], &report)
            }
            ProbeKind::Distbound => {
                let set = self.minima()?;
                let xbar = self.point(&pr.at, "at")?;
                let report = check_distance_lower_bound(
                    &self.problem,
                    &set,
                    &xbar,
                    pr.alpha_bar.unwrap_or(0.1),
                    pr.r.unwrap_or(0.5),
                    self.trials(500),
                    pr.levels.unwrap_or(8),
                    self.seed,
                )?;
                let mut r = row("distbound", set.label(), &report);
                r.alpha_bar = pr.alpha_bar.unwrap_or(0.1);
                self.probes(vec![r], &report)
            }
        }
    }

    fn flatness(&self, kind: FlatnessKind) -> CliResult<Outcome> {
        let pr = self.pr();
        let radii = pr.radii.clone().unwrap_or_else(|| logspace(1e-3, 1e-2, 3));
        let grid = pr.grid.unwrap_or(if self.problem.dim <= 2 { 64 } else { 24 });
        let draws = pr.draws.unwrap_or(500);
        let f = |x: &[f64]| self.problem.f(x);
        let mut bytes = Vec::new();
        match kind {
            FlatnessKind::Profile => {
                let x = self.point(&pr.at, "at")?;
                let prof = flatness_profile(&f, &x, &radii, grid, draws, self.seed)?;
                csvio::write_profiles(&mut bytes, &[prof])?;
            }
            FlatnessKind::Compare => {
                let x = self.point(&pr.at, "at")?;
                let y = self.point(&pr.other, "other")?;
                let px = flatness_profile(&f, &x, &radii, grid, draws, self.seed)?;
                let py = flatness_profile(&f, &y, &radii, grid, draws, self.seed)?;
                eprintln!("{}", compare_profiles(&px, &py)?.as_str());
                csvio::write_profiles(&mut bytes, &[px, py])?;
            }
            FlatnessKind::Screen => {
                let screen = screen_flat_minima(&self.problem, &self.minima()?, pr.minima.unwrap_or(41), &radii, grid, draws, self.seed)?;
                eprintln!("flat layer: {}", screen.flat_layer);
                csvio::write_ranking(&mut bytes, &screen)?;
            }
        }
        self.emit(bytes)?;
        Ok(Outcome::Pass)
    }
}

/// A pointwise check as a report; a failed check carries the point as witness.
fn point_report(xbar: &Point, margin: f64, certified: bool) -> ProbeReport {
    let stats = dstab_core::ProbeStats {
        trials: 1,
        ..Default::default()
    };
    if certified {
        ProbeReport::pass(margin, stats)
    } else {
        ProbeReport::fail(margin, Trajectory::at_point(xbar.to_vec()), stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["dstab", "probe", "point", "--problem", "monomial:u=1,1", "--at", "2,0.5", "--epsilon", "0.05"]).unwrap();
        let Command::Probe { kind, opts } = cli.command else { panic!() };
        assert_eq!(kind, ProbeKind::Point);
        assert_eq!(opts.at, Some(vec![2.0, 0.5]));
        assert!(Cli::try_parse_from(["dstab", "verify", "nope"]).is_err());
        let cli = Cli::try_parse_from(["dstab", "simulate", "--x0=-1,0.5", "--problem", "parabola"]).unwrap();
        let Command::Simulate(opts) = cli.command else { panic!() };
        assert_eq!(opts.x0, Some(vec![-1.0, 0.5]));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "problem = \"flat4\"\nsteps = 5\n[probe]\nepsilon = 0.3\n").unwrap();
        let opts = Opts {
            config: Some(path),
            steps: Some(9),
            ..Default::default()
        };
        let cfg = opts.resolve().unwrap();
        assert_eq!(cfg.problem.as_deref(), Some("flat4"));
        assert_eq!(cfg.steps, Some(9));
        assert_eq!(cfg.probe.epsilon, Some(0.3));
    }
}
