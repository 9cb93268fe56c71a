//! Dense vectors over `f64`. Operations work on slices; [`Point`] is the
//! validated owned form used at API boundaries.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::math;

/// A point of `Rⁿ` with finite coordinates and `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::param("point", "dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `x + alpha * u`
pub fn axpy(x: &[f64], alpha: f64, u: &[f64]) -> Vec<f64> {
    x.iter().zip(u).map(|(xi, ui)| xi + alpha * ui).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// `M x` for a row-major `rows × cols` matrix.
pub fn mat_vec(m: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    m.chunks(cols).map(|row| dot(row, x)).collect()
}

/// `Mᵀ x` for a row-major `rows × cols` matrix.
pub fn mat_t_vec(m: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; cols];
    for (row, xi) in m.chunks(cols).zip(x) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r * xi;
        }
    }
    out
}

/// `⟨H u, u⟩` for a row-major square matrix.
pub fn quad_form(h: &[f64], u: &[f64]) -> f64 {
    dot(&mat_vec(h, u.len(), u), u)
}

/// Drops vectors closer than `tol` to one already kept.
pub fn dedup_directions(dirs: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    for d in dirs {
        if kept.iter().all(|k| distance(k, &d) > tol) {
            kept.push(d);
        }
    }
    kept
}

/// Distance from the origin to the convex hull of `vectors`, by Frank–Wolfe with
/// exact line search.
pub fn min_norm_in_hull(vectors: &[Vec<f64>]) -> f64 {
    match vectors.len() {
        0 => f64::INFINITY,
        1 => norm(&vectors[0]),
        _ => {
            let mut z = vectors
                .iter()
                .min_by(|a, b| norm(a).total_cmp(&norm(b)))
                .unwrap()
                .clone();
            for _ in 0..2000 {
                let s = vectors
                    .iter()
                    .min_by(|a, b| dot(a, &z).total_cmp(&dot(b, &z)))
                    .unwrap();
                let d = sub(s, &z);
                let dd = dot(&d, &d);
                if dd == 0.0 {
                    break;
                }
                let gap = -dot(&z, &d);
                if gap <= 1e-15 * (1.0 + dot(&z, &z)) {
                    break;
                }
                let t = (gap / dd).min(1.0);
                z = axpy(&z, t, &d);
            }
            norm(&z)
        }
    }
}
