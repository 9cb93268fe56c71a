//! Problem ids: `name(:key=value(,key=value)*)?`. A token without `=` extends
//! the value list of the preceding key, so `monomial:u=1,2,3` sets `u = 1,2,3`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::families;
use super::ProblemSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemId {
    pub name: String,
    pub params: Vec<(String, Vec<String>)>,
}

pub fn parse_problem_id(id: &str) -> Result<ProblemId> {
    let id = id.trim();
    let (name, rest) = match id.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (id, None),
    };
    if name.is_empty() {
        return Err(Error::param("problem", "empty problem name"));
    }
    let mut params: Vec<(String, Vec<String>)> = Vec::new();
    if let Some(rest) = rest {
        for tok in rest.split(',') {
            let tok = tok.trim();
            match tok.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    if k.is_empty() {
                        return Err(Error::param("problem", alloc::format!("empty key in `{id}`")));
                    }
                    if params.iter().any(|(p, _)| p == k) {
                        return Err(Error::param(k, "given twice"));
                    }
                    params.push((k.to_string(), alloc::vec![v.trim().to_string()]));
                }
                None => match params.last_mut() {
                    Some((_, vals)) => vals.push(tok.to_string()),
                    None => return Err(Error::param("problem", alloc::format!("`{tok}` has no key in `{id}`"))),
                },
            }
        }
    }
    Ok(ProblemId {
        name: name.to_ascii_lowercase(),
        params,
    })
}

impl ProblemId {
    fn take(&mut self, key: &str) -> Option<Vec<String>> {
        let i = self.params.iter().position(|(k, _)| k == key)?;
        Some(self.params.remove(i).1)
    }

    fn numbers(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(vals) = self.take(key) else {
            return Ok(None);
        };
        vals.iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::param(key, alloc::format!("`{v}` is not a number"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn scalar(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.numbers(key)? {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(Error::param(key, "expects a single value")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.params.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::param(k, alloc::format!("unknown parameter for `{}`", self.name))),
        }
    }
}

/// Builds a catalog problem from its id, e.g. `ellipse:a=2,b=1`.
pub fn get_problem(id: &str) -> Result<ProblemSpec> {
    let mut pid = parse_problem_id(id)?;
    let problem = match pid.name.as_str() {
        "flat4" => families::flat4(),
        "parabola" => families::parabola(),
        "l1-3d" | "l13d" => families::l1_3d(),
        "ellipse" => {
            let a = pid.scalar("a", 2.0)?;
            let b = pid.scalar("b", 1.0)?;
            families::ellipse(a, b)?
        }
        "mellipse" => {
            let a = pid.numbers("a")?.unwrap_or_else(|| alloc::vec![1.0, 0.5, -1.0, -0.5]);
            families::mellipse(a)?
        }
        "bilinear" => {
            let a = pid.numbers("a")?.or(pid.numbers("A")?).unwrap_or_else(|| alloc::vec![2.0, 0.0, 0.0, 1.0]);
            let side = libm::sqrt(a.len() as f64) as usize;
            let m = pid.scalar("m", if side * side == a.len() { side as f64 } else { 1.0 })? as usize;
            let n = pid.scalar("n", (a.len() / m.max(1)) as f64)? as usize;
            families::bilinear(m, n, a)?
        }
        "monomial" => {
            let u = pid.numbers("u")?.unwrap_or_else(|| alloc::vec![1.0, 1.0]);
            families::monomial(u)?
        }
        "rank1" => {
            let u = pid.numbers("u")?.unwrap_or_else(|| alloc::vec![1.0, 2.0]);
            let v = pid.numbers("v")?.unwrap_or_else(|| alloc::vec![1.0, 3.0]);
            families::rank1(u, v)?
        }
        "power1d" => {
            let m = pid.scalar("m", 2.0)?;
            families::power1d(m)?
        }
        _ => return Err(Error::UnknownProblem(pid.name)),
    };
    pid.finish()?;
    Ok(problem)
}

/// Names accepted by [`get_problem`].
pub const PROBLEM_NAMES: [&str; 9] = [
    "flat4", "parabola", "ellipse", "mellipse", "bilinear", "monomial", "l1-3d", "rank1", "power1d",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        let id = parse_problem_id("ellipse:a=2,b=1").unwrap();
        assert_eq!(id.name, "ellipse");
        assert_eq!(id.params, alloc::vec![("a".into(), alloc::vec!["2".into()]), ("b".into(), alloc::vec!["1".into()])]);
        let id = parse_problem_id("monomial:u=1,1").unwrap();
        assert_eq!(id.params[0].1, alloc::vec!["1", "1"]);
        assert!(parse_problem_id(":a=1").is_err());
        assert!(parse_problem_id("x:1").is_err());
        assert!(parse_problem_id("x:a=1,a=2").is_err());
    }

    #[test]
    fn unknown_names_and_keys_are_rejected() {
        assert!(matches!(get_problem("nope"), Err(Error::UnknownProblem(_))));
        assert!(matches!(get_problem("parabola:q=1"), Err(Error::InvalidParameter { .. })));
        assert!(get_problem("ellipse:a=1,b=2").is_err());
        assert!(get_problem("ellipse:a=-1,b=2").is_ok());
        assert!(get_problem("rank1:u=1,1,v=1,2").is_err());
        assert!(get_problem("monomial:u=1.5,1").is_err());
    }

    #[test]
    fn every_name_builds_with_defaults() {
        for name in PROBLEM_NAMES {
            let p = get_problem(name).unwrap();
            assert_eq!(p.objective.dim(), p.dim, "{name}");
        }
    }
}
