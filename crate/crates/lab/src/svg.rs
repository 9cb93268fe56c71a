//! Static SVG plots: marching-squares contours of `f` and `g` over the
//! problem's box, overlaid with an iterate polyline.

use std::fmt::Write as _;

use dstab_core::ProblemSpec;

pub const GRID: usize = 512;
pub const F_LEVELS: usize = 8;
pub const MAX_POLYLINE: usize = 10_000;
const WIDTH: f64 = 640.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GScale {
    /// Log-spaced when the finite positive values span more than three decades.
    Auto,
    Log,
    Linear,
}

impl std::str::FromStr for GScale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(GScale::Auto),
            "log" => Ok(GScale::Log),
            "linear" => Ok(GScale::Linear),
            _ => Err(format!("unknown g scale '{s}' (auto, log, linear)")),
        }
    }
}

/// Samples of a function on a `GRID × GRID` lattice, row `j` at `y_j`.
struct Field2 {
    lo: [f64; 2],
    hi: [f64; 2],
    values: Vec<f64>,
}

impl Field2 {
    fn sample(lo: [f64; 2], hi: [f64; 2], f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(GRID * GRID);
        for j in 0..GRID {
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / (GRID - 1) as f64;
            for i in 0..GRID {
                let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (GRID - 1) as f64;
                values.push(f(&[x, y]));
            }
        }
        Field2 { lo, hi, values }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * GRID + i]
    }

    fn coord(&self, i: f64, j: f64) -> [f64; 2] {
        let s = (GRID - 1) as f64;
        [self.lo[0] + (self.hi[0] - self.lo[0]) * i / s, self.lo[1] + (self.hi[1] - self.lo[1]) * j / s]
    }

    fn positive_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| v.is_finite() && *v > 0.0);
        let first = it.next()?;
        Some(it.fold((first, first), |(a, b), v| (a.min(v), b.max(v))))
    }

    /// Segments of the level set `{v = level}`; cells with a non-finite corner
    /// are skipped and saddles are split by the cell mean.
    fn contour(&self, level: f64) -> Vec<([f64; 2], [f64; 2])> {
        let mut segs = Vec::new();
        for j in 0..GRID - 1 {
            for i in 0..GRID - 1 {
                let c = [self.at(i, j), self.at(i + 1, j), self.at(i + 1, j + 1), self.at(i, j + 1)];
                if c.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                let case = c.iter().enumerate().fold(0, |m, (b, v)| m | (usize::from(*v > level) << b));
                if case == 0 || case == 15 {
                    continue;
                }
                // edge e joins corner e to corner e+1
                let corner = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
                let cross = |e: usize| {
                    let (a, b) = (e, (e + 1) % 4);
                    let w = (level - c[a]) / (c[b] - c[a]);
                    let (x0, y0) = corner[a];
                    let (x1, y1) = corner[b];
                    self.coord(i as f64 + x0 + w * (x1 - x0), j as f64 + y0 + w * (y1 - y0))
                };
                let pairs: &[(usize, usize)] = match case {
                    1 | 14 => &[(3, 0)],
                    2 | 13 => &[(0, 1)],
                    3 | 12 => &[(3, 1)],
                    4 | 11 => &[(1, 2)],
                    6 | 9 => &[(0, 2)],
                    7 | 8 => &[(2, 3)],
                    5 | 10 => {
                        let high_center = c.iter().sum::<f64>() / 4.0 > level;
                        if (case == 5) == high_center {
                            &[(0, 1), (2, 3)]
                        } else {
                            &[(3, 0), (1, 2)]
                        }
                    }
                    _ => unreachable!(),
                };
                for &(a, b) in pairs {
                    segs.push((cross(a), cross(b)));
                }
            }
        }
        segs
    }
}

fn log_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (1..=n).map(|i| (a + (b - a) * i as f64 / (n + 1) as f64).exp()).collect()
}

fn linear_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

pub struct Plot {
    lo: [f64; 2],
    hi: [f64; 2],
    height: f64,
    body: String,
}

impl Plot {
    pub fn new(problem: &ProblemSpec) -> Self {
        let (lo, hi) = &problem.bounded_box;
        let (lo, hi) = ([lo[0], lo[1]], [hi[0], hi[1]]);
        let height = (WIDTH * (hi[1] - lo[1]) / (hi[0] - lo[0])).round();
        Plot {
            lo,
            hi,
            height,
            body: String::new(),
        }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        (
            WIDTH * (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]),
            self.height * (1.0 - (p[1] - self.lo[1]) / (self.hi[1] - self.lo[1])),
        )
    }

    fn contours(&mut self, field: &Field2, levels: &[f64], color: &str, class: &str) {
        for &level in levels {
            let segs = field.contour(level);
            if segs.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (a, b) in segs {
                let (ax, ay) = self.px(a);
                let (bx, by) = self.px(b);
                let _ = write!(d, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
            }
            let _ = writeln!(
                self.body,
                "<path class=\"{class}\" data-level=\"{level:.6e}\" d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.8\"/>"
            );
        }
    }

    /// `F_LEVELS` log-spaced contours of `f` over the box.
    pub fn f_contours(&mut self, problem: &ProblemSpec) {
        let field = Field2::sample(self.lo, self.hi, |x| problem.f(x));
        if let Some((a, b)) = field.positive_range() {
            let levels = if b > a { log_levels(a, b, F_LEVELS) } else { Vec::new() };
            self.contours(&field, &levels, "#4477aa", "f");
        }
    }

    /// Contours of the problem's first auxiliary function, if it has one.
    pub fn g_contours(&mut self, problem: &ProblemSpec, scale: GScale, count: usize) {
        let Some(g) = problem.primary_g() else { return };
        let field = Field2::sample(self.lo, self.hi, |x| g.eval(x));
        let Some((a, b)) = field.positive_range() else { return };
        if b <= a {
            return;
        }
        let log = match scale {
            GScale::Log => true,
            GScale::Linear => false,
            GScale::Auto => b / a > 1e3,
        };
        let levels = if log { log_levels(a, b, count) } else { linear_levels(a, b, count) };
        self.contours(&field, &levels, "#cc6677", if log { "logg" } else { "g" });
    }

    /// The iterates, thinned to about [`MAX_POLYLINE`] vertices.
    pub fn polyline(&mut self, points: &[Vec<f64>]) {
        if points.is_empty() {
            return;
        }
        let stride = points.len().div_ceil(MAX_POLYLINE).max(1);
        let mut pts = String::new();
        let mut push = |p: &[f64]| {
            let (x, y) = self.px([p[0], p[1]]);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        };
        for p in points.iter().step_by(stride) {
            push(p);
        }
        if !(points.len() - 1).is_multiple_of(stride) {
            push(&points[points.len() - 1]);
        }
        let _ = writeln!(
            self.body,
            "<polyline class=\"iterates\" points=\"{}\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.2\"/>",
            pts.trim_end()
        );
        let (x, y) = self.px([points[0][0], points[0][1]]);
        let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#228833\"/>");
    }

    pub fn finish(self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{h}\" viewBox=\"0 0 {WIDTH} {h}\">",
            h = self.height
        );
        let _ = writeln!(s, "<title>{}</title>", escape(title));
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Contours of `f` (and `g` when present) with the iterates on top. 2-D only.
pub fn render(problem: &ProblemSpec, points: &[Vec<f64>], scale: GScale, title: &str) -> Option<String> {
    if problem.dim != 2 {
        return None;
    }
    let mut plot = Plot::new(problem);
    plot.f_contours(problem);
    plot.g_contours(problem, scale, F_LEVELS);
    plot.polyline(points);
    Some(plot.finish(title))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_lies_on_circle() {
        let field = Field2::sample([-1.0, -1.0], [1.0, 1.0], |x| x[0] * x[0] + x[1] * x[1]);
        let segs = field.contour(0.25);
        assert!(segs.len() > 100);
        let h = 2.0 / (GRID - 1) as f64;
        for (a, b) in segs {
            for p in [a, b] {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                assert!((r - 0.5).abs() < h * h, "{r}");
            }
        }
    }

    #[test]
    fn level_spacing() {
        let l = log_levels(1e-6, 1.0, 8);
        assert_eq!(l.len(), 8);
        assert!(l.windows(2).all(|w| (w[1] / w[0] - l[1] / l[0]).abs() < 1e-9));
        assert!(l[0] > 1e-6 && l[7] < 1.0);
        assert_eq!(linear_levels(0.0, 9.0, 8), (1..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!("log".parse::<GScale>(), Ok(GScale::Log));
        assert!("cubic".parse::<GScale>().is_err());
    }

    #[test]
    fn render_is_valid_svg_and_thins_polyline() {
        let p = dstab_core::get_problem("parabola").unwrap();
        let pts: Vec<Vec<f64>> = (0..50_000).map(|k| vec![k as f64 / 50_000.0, 0.5]).collect();
        let svg = render(&p, &pts, GScale::Auto, "t<1>").unwrap();
        assert!(svg.contains("version=\"1.1\"") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("<title>t&lt;1&gt;</title>"));
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let n = line.matches(',').count();
        assert!((MAX_POLYLINE / 2..=MAX_POLYLINE + 1).contains(&n), "{n}");
        assert_eq!(svg.matches("class=\"f\"").count(), F_LEVELS);
        assert!(render(&dstab_core::get_problem("l1-3d").unwrap(), &[], GScale::Auto, "").is_none());
    }
}
