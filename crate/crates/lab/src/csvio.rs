//! CSV tables. Reals are written as `{:.16e}` (17 significant digits), which
//! parses back to the same double, so read-then-write is byte-identical.

use std::io::{Read, Write};

use dstab_core::flatness::{FlatScreen, FlatnessProfile};
use dstab_core::lyapunov::DecreaseCertificate;
use dstab_core::Trajectory;

use crate::error::{CliError, CliResult};

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(s: &str, what: &str) -> CliResult<f64> {
    s.parse().map_err(|_| CliError::runtime(format!("bad {what} value '{s}'")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub t: f64,
    /// Step taken from this row; empty on the final row.
    pub alpha: Option<f64>,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryTable {
    pub dim: usize,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryTable {
    /// The given row indices of `traj`.
    pub fn from_rows(traj: &Trajectory, keep: &[usize]) -> Self {
        let dim = traj.points.first().map_or(0, Vec::len);
        let rows = keep
            .iter()
            .map(|&k| TrajectoryRow {
                k,
                t: traj.times[k],
                alpha: traj.alphas.get(k).copied(),
                x: traj.points[k].clone(),
                f: traj.f_values[k],
                g: traj.g_values[k],
            })
            .collect();
        TrajectoryTable { dim, rows }
    }

    pub fn full(traj: &Trajectory) -> Self {
        let keep: Vec<usize> = (0..traj.points.len()).collect();
        Self::from_rows(traj, &keep)
    }

    pub fn header(dim: usize) -> Vec<String> {
        let mut h = vec!["k".to_string(), "t".into(), "alpha".into()];
        h.extend((1..=dim).map(|i| format!("x{i}")));
        h.extend(["f".to_string(), "g".into()]);
        h
    }

    pub fn write<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(self.dim))?;
        for r in &self.rows {
            let mut rec = vec![r.k.to_string(), real(r.t), r.alpha.map(real).unwrap_or_default()];
            rec.extend(r.x.iter().copied().map(real));
            rec.extend([real(r.f), real(r.g)]);
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> CliResult<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header.len() < 5 {
            return Err(CliError::runtime("trajectory header too short"));
        }
        let dim = header.len() - 5;
        if header != Self::header(dim) {
            return Err(CliError::runtime(format!("unexpected trajectory header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let k = rec[0].parse().map_err(|_| CliError::runtime(format!("bad k '{}'", &rec[0])))?;
            let alpha = match &rec[2] {
                "" => None,
                s => Some(parse_real(s, "alpha")?),
            };
            let x = (0..dim).map(|i| parse_real(&rec[3 + i], "x")).collect::<CliResult<_>>()?;
            rows.push(TrajectoryRow {
                k,
                t: parse_real(&rec[1], "t")?,
                alpha,
                x,
                f: parse_real(&rec[3 + dim], "f")?,
                g: parse_real(&rec[4 + dim], "g")?,
            });
        }
        Ok(TrajectoryTable { dim, rows })
    }
}

pub const CERTIFICATE_HEADER: [&str; 9] = ["check", "region", "p", "q", "omega", "alpha_bar", "n_trials", "worst_margin", "verdict"];

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRow {
    pub check: String,
    pub region: String,
    pub p: f64,
    pub q: usize,
    pub omega: f64,
    pub alpha_bar: f64,
    pub n_trials: usize,
    pub worst_margin: f64,
    pub verdict: String,
}

impl From<&DecreaseCertificate> for CertificateRow {
    fn from(c: &DecreaseCertificate) -> Self {
        CertificateRow {
            check: c.kind.as_str().into(),
            region: c.region.clone(),
            p: c.p,
            q: c.q,
            omega: c.omega,
            alpha_bar: c.alpha_bar,
            n_trials: c.report.stats.trials,
            worst_margin: c.report.worst_margin,
            verdict: c.report.verdict().as_str().into(),
        }
    }
}

pub fn write_certificates<W: Write>(out: W, rows: &[CertificateRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CERTIFICATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            r.region.clone(),
            real(r.p),
            r.q.to_string(),
            real(r.omega),
            real(r.alpha_bar),
            r.n_trials.to_string(),
            real(r.worst_margin),
            r.verdict.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const PROBE_HEADER: [&str; 10] = [
    "probe", "target", "epsilon", "delta", "alpha_bar", "p", "n_trials", "worst_excursion", "hit_rate", "verdict",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub probe: String,
    pub target: String,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_bar: f64,
    pub p: f64,
    pub n_trials: usize,
    pub worst_excursion: f64,
    pub hit_rate: f64,
    pub verdict: String,
}

pub fn write_probes<W: Write>(out: W, rows: &[ProbeRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_HEADER)?;
    for r in rows {
        w.write_record([
            r.probe.clone(),
            r.target.clone(),
            real(r.epsilon),
            real(r.delta),
            real(r.alpha_bar),
            real(r.p),
            r.n_trials.to_string(),
            real(r.worst_excursion),
            real(r.hit_rate),
            r.verdict.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `center_x1..center_xn,r,f_ring`, one row per center and radius.
pub fn write_profiles<W: Write>(out: W, profiles: &[FlatnessProfile]) -> CliResult<()> {
    let dim = profiles.first().map_or(0, |p| p.center.len());
    let mut w = csv::Writer::from_writer(out);
    let mut h: Vec<String> = (1..=dim).map(|i| format!("center_x{i}")).collect();
    h.extend(["r".to_string(), "f_ring".into()]);
    w.write_record(h)?;
    for p in profiles {
        for (r, v) in p.radii.iter().zip(&p.values) {
            let mut rec: Vec<String> = p.center.iter().copied().map(real).collect();
            rec.extend([real(*r), real(*v)]);
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `rank,center,profile_at_rmin`; center coordinates are joined by `;`.
pub fn write_ranking<W: Write>(out: W, screen: &FlatScreen) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "center", "profile_at_rmin"])?;
    for (i, p) in screen.ranked.iter().enumerate() {
        let center: Vec<String> = p.center.iter().copied().map(real).collect();
        w.write_record([(i + 1).to_string(), center.join(";"), real(p.at_min_radius())])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dstab_core::{get_problem, make_power_schedule, simulate, Selector};

    #[test]
    fn trajectory_table_round_trips() {
        let p = get_problem("flat4").unwrap();
        let s = make_power_schedule(1.0, 6.0, 1.0).unwrap();
        let tr = simulate(&p, &p.descent_field(), &s, &[2.5, 0.01], 300, &Selector::First, 0).unwrap();
        let table = TrajectoryTable::from_rows(&tr, &tr.stored_rows(7));
        let mut a = Vec::new();
        table.write(&mut a).unwrap();
        let back = TrajectoryTable::read(a.as_slice()).unwrap();
        assert_eq!(back, table);
        let mut b = Vec::new();
        back.write(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("k,t,alpha,x1,x2,f,g\n0,0.0000000000000000e0,1.0000000000000000e0,2.5"));
        assert!(text.trim_end().lines().last().unwrap().starts_with("300,"));
        assert_eq!(text.trim_end().lines().last().unwrap().split(',').nth(2), Some(""));
    }

    #[test]
    fn nan_g_round_trips() {
        let p = get_problem("rank1").unwrap();
        let tr = simulate(&p, &p.descent_field(), &dstab_core::StepSchedule::constant(0.01).unwrap(), &[1.0, 0.5, 0.2, 0.1], 3, &Selector::First, 0).unwrap();
        let table = TrajectoryTable::full(&tr);
        let mut a = Vec::new();
        table.write(&mut a).unwrap();
        let back = TrajectoryTable::read(a.as_slice()).unwrap();
        assert!(back.rows.iter().all(|r| r.g.is_nan()));
        let mut b = Vec::new();
        back.write(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reader_rejects_foreign_headers() {
        assert!(TrajectoryTable::read("k,t,x1,f,g\n".as_bytes()).is_err());
        assert!(TrajectoryTable::read("k,t,alpha,x1,f,g\n0,0,,zz,1,1\n".as_bytes()).is_err());
    }
}
