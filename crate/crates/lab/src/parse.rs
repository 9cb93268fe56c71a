//! Small textual grammars used by flags and config values.

use dstab_core::catalog::parse_problem_id;
use dstab_core::euler::adversarial_distance;
use dstab_core::schedule::{make_constant_schedule, make_uniform_schedule};
use dstab_core::{bouligand_field, make_power_schedule, Field, ProblemSpec, Selector, SetDescriptor, StepSchedule};

use crate::error::{CliError, CliResult};

/// Comma-separated reals.
pub fn reals(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::config(format!("not a number: '{t}' in '{s}'"))))
        .collect()
}

fn key(params: &[(String, Vec<String>)], name: &str) -> CliResult<Option<f64>> {
    match params.iter().find(|(k, _)| k == name) {
        None => Ok(None),
        Some((_, v)) if v.len() == 1 => v[0]
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(format!("{name} must be a number"))),
        Some(_) => Err(CliError::config(format!("{name} takes one value"))),
    }
}

/// `pow:c=C,p=P[,cap=A]`, `const:c=C[,cap=A]` or `uniform:cap=A`. The cap
/// defaults to `c`.
pub fn schedule(s: &str, seed: u64) -> CliResult<StepSchedule> {
    let id = parse_problem_id(s)?;
    let known: &[&str] = match id.name.as_str() {
        "pow" | "power" => &["c", "p", "cap"],
        "const" | "constant" => &["c", "cap"],
        "uniform" => &["cap"],
        other => return Err(CliError::config(format!("unknown schedule '{other}' (pow, const, uniform)"))),
    };
    if let Some((k, _)) = id.params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(CliError::config(format!("unknown schedule key '{k}'")));
    }
    let need = |name: &str| key(&id.params, name)?.ok_or_else(|| CliError::config(format!("schedule '{s}' needs {name}=")));
    Ok(match id.name.as_str() {
        "pow" | "power" => {
            let c = need("c")?;
            make_power_schedule(c, need("p")?, key(&id.params, "cap")?.unwrap_or(c))?
        }
        "const" | "constant" => {
            let c = need("c")?;
            make_constant_schedule(c, key(&id.params, "cap")?.unwrap_or(c))?
        }
        _ => make_uniform_schedule(need("cap")?, seed)?,
    })
}

/// Descent field of the chosen kind.
pub fn field(problem: &ProblemSpec, kind: &str) -> CliResult<Field> {
    match kind {
        "normalized" => Ok(problem.descent_field()),
        "bouligand" => Ok(bouligand_field(problem).negated()),
        other => Err(CliError::config(format!("unknown field '{other}' (normalized, bouligand)"))),
    }
}

/// The attractor of the problem, else its minimum set.
pub fn reference_set(problem: &ProblemSpec) -> CliResult<SetDescriptor> {
    problem
        .attractor
        .as_ref()
        .map(|a| a.set.clone())
        .or_else(|| problem.minima.clone())
        .ok_or_else(|| CliError::config(format!("{} declares neither an attractor nor a minimum set", problem.name)))
}

/// `first`, `random`, `index=i` or `adversarial` (maximizes the distance to the
/// problem's reference set).
pub fn selector(s: &str, problem: &ProblemSpec, seed: u64) -> CliResult<Selector> {
    match s {
        "first" => Ok(Selector::First),
        "random" => Ok(Selector::Random { seed }),
        "adversarial" => Ok(adversarial_distance(reference_set(problem)?)),
        _ => match s.strip_prefix("index=") {
            Some(i) => i.parse().map(Selector::Index).map_err(|_| CliError::config(format!("bad selector index '{i}'"))),
            None => Err(CliError::config(format!("unknown selector '{s}' (first, random, adversarial, index=i)"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dstab_core::schedule::ScheduleKind;

    #[test]
    fn schedules() {
        let s = schedule("pow:c=1,p=6", 0).unwrap();
        assert_eq!(s.kind, ScheduleKind::Power { c: 1.0, p: 6.0 });
        assert_eq!(s.cap, 1.0);
        let s = schedule("const:c=0.01,cap=0.5", 0).unwrap();
        assert_eq!((s.alpha(0), s.cap), (0.01, 0.5));
        assert!(matches!(schedule("uniform:cap=0.1", 3).unwrap().kind, ScheduleKind::Uniform { seed: 3 }));
        assert!(matches!(schedule("pow:c=1", 0), Err(CliError::Config(_))));
        assert!(matches!(schedule("pow:c=1,p=6,z=1", 0), Err(CliError::Config(_))));
        assert!(matches!(schedule("linear:c=1", 0), Err(CliError::Config(_))));
        assert!(matches!(schedule("pow:c=-1,p=2", 0), Err(CliError::Config(_))));
    }

    #[test]
    fn lists_and_selectors() {
        assert_eq!(reals("2.5, 0.01").unwrap(), vec![2.5, 0.01]);
        assert!(reals("1,x").is_err());
        let p = dstab_core::get_problem("parabola").unwrap();
        assert!(matches!(selector("index=3", &p, 0).unwrap(), Selector::Index(3)));
        assert!(selector("adversarial", &p, 0).is_ok());
        assert!(selector("worst", &p, 0).is_err());
        assert!(field(&p, "clarke").is_err());
    }
}
