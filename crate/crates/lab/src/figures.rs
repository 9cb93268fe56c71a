//! The three reference runs behind `reproduce`.

use dstab_core::{get_problem, make_power_schedule, simulate, ProblemSpec, Selector, StepSchedule, Trajectory};

use crate::csvio::TrajectoryTable;
use crate::error::{CliError, CliResult};
use crate::svg::{self, GScale};

pub const FIGURE_STEPS: usize = 100_000;
pub const FIGURE_THIN: usize = 10;
pub const FIGURE_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Clone, Debug)]
pub struct FigureSpec {
    pub problem: &'static str,
    pub x0: [f64; 2],
    /// `(c, p, cap)` of `α_k = min(cap, c/(k+1)^{1/p})`.
    pub schedule: (f64, f64, f64),
    pub g_scale: GScale,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }

    pub fn spec(self) -> FigureSpec {
        match self {
            Figure::Fig1 => FigureSpec {
                problem: "flat4",
                x0: [2.5, 0.01],
                schedule: (1.0, 6.0, 1.0),
                g_scale: GScale::Auto,
            },
            Figure::Fig2 => FigureSpec {
                problem: "parabola",
                x0: [0.9, 0.7],
                schedule: (0.1, 6.0, 0.1),
                g_scale: GScale::Log,
            },
            Figure::Fig3 => FigureSpec {
                problem: "ellipse:a=2,b=1",
                x0: [0.8, 0.2],
                schedule: (1.0, 6.0, 1.0),
                g_scale: GScale::Auto,
            },
        }
    }
}

pub struct FigureRun {
    pub problem: ProblemSpec,
    pub schedule: StepSchedule,
    pub trajectory: Trajectory,
}

pub fn run(fig: Figure) -> CliResult<FigureRun> {
    let spec = fig.spec();
    let problem = get_problem(spec.problem)?;
    let (c, p, cap) = spec.schedule;
    let schedule = make_power_schedule(c, p, cap)?;
    let trajectory = simulate(&problem, &problem.descent_field(), &schedule, &spec.x0, FIGURE_STEPS, &Selector::First, FIGURE_SEED)?;
    if let Some(stop) = &trajectory.stopped {
        return Err(CliError::runtime(format!("{} stopped at k={}: {}", fig.name(), stop.k, stop.error)));
    }
    Ok(FigureRun {
        problem,
        schedule,
        trajectory,
    })
}

/// CSV and SVG bytes of a figure.
pub fn render(fig: Figure, run: &FigureRun, scale: Option<GScale>) -> CliResult<(Vec<u8>, String)> {
    let tr = &run.trajectory;
    let mut csv = Vec::new();
    TrajectoryTable::from_rows(tr, &tr.stored_rows(FIGURE_THIN)).write(&mut csv)?;
    let title = format!("{}: {} from ({}, {}), {}", fig.name(), run.problem.id(), tr.points[0][0], tr.points[0][1], run.schedule.label());
    let svg = svg::render(&run.problem, &tr.points, scale.unwrap_or(fig.spec().g_scale), &title)
        .ok_or_else(|| CliError::runtime("figure problems are planar"))?;
    Ok((csv, svg))
}
