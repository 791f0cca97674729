//! Finite atomic measures `μ = Σ w_j δ_{x_j}` with a declared growth profile
//! `μ(B(x,r)) ≤ C0·r^n` for `r ≥ r_min`, plus densities `f` sampled at the atoms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, euclidean_distance, Cube};
use crate::scalar::{self, Scalar};

/// Growth exponent `n`, constant `C0` and the resolution floor `r_min` below
/// which point masses are not expected to obey the growth bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub n: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub r_min: f64,
}

impl GrowthProfile {
    pub fn new(n: f64, c0: f64, r_min: f64) -> Result<Self> {
        let g = GrowthProfile { n, c0, r_min };
        g.validate(None)?;
        Ok(g)
    }

    fn validate(&self, dim: Option<usize>) -> Result<()> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::InvalidGrowth(format!("n must be positive, got {}", self.n)));
        }
        if let Some(d) = dim {
            if self.n > d as f64 {
                return Err(Error::InvalidGrowth(format!("n = {} exceeds dimension {d}", self.n)));
            }
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidGrowth(format!("C0 must be positive, got {}", self.c0)));
        }
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(Error::InvalidGrowth(format!("r_min must be positive, got {}", self.r_min)));
        }
        Ok(())
    }
}

/// A finite sum of weighted point masses in `R^d`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    /// Row-major `len × dim` coordinates.
    coords: Vec<f64>,
    weights: Vec<f64>,
    growth: GrowthProfile,
    total: f64,
}

impl AtomicMeasure {
    /// Builds a measure from `(position, weight)` pairs, rejecting empty
    /// inputs, non-positive weights, repeated positions and profiles with
    /// `n > dim`.
    pub fn from_points(dim: usize, atoms: &[(Vec<f64>, f64)], growth: GrowthProfile) -> Result<Self> {
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            check_dim(dim, x.len())?;
            coords.extend_from_slice(x);
            weights.push(*w);
        }
        Self::from_flat(dim, coords, weights, growth)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>, growth: GrowthProfile) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::InvalidMeasure("coordinate array does not match atom count".into()));
        }
        growth.validate(Some(dim))?;
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("atom {j} has non-positive weight {w}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        let mut order: Vec<usize> = (0..weights.len()).collect();
        let row = |j: usize| &coords[j * dim..(j + 1) * dim];
        order.sort_by(|&a, &b| {
            row(a)
                .iter()
                .zip(row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some(w) = order.windows(2).find(|w| row(w[0]) == row(w[1])) {
            return Err(Error::InvalidMeasure(format!(
                "atoms {} and {} share a position",
                w[0].min(w[1]),
                w[0].max(w[1])
            )));
        }
        let total = weights.iter().sum();
        Ok(AtomicMeasure {
            dim,
            coords,
            weights,
            growth,
            total,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn growth(&self) -> &GrowthProfile {
        &self.growth
    }

    /// Same atoms under a different growth profile.
    pub fn with_growth(&self, growth: GrowthProfile) -> Result<Self> {
        growth.validate(Some(self.dim))?;
        Ok(AtomicMeasure {
            growth,
            ..self.clone()
        })
    }

    pub fn position(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `‖μ‖`.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Index of the atom located exactly at `x`, if any.
    pub fn atom_at(&self, x: &[f64]) -> Option<usize> {
        self.positions().position(|p| p == x)
    }

    /// Atoms of the closed cube `Q`, in index order.
    pub fn atoms_in_cube<'a>(&'a self, q: &'a Cube) -> impl Iterator<Item = usize> + 'a {
        self.positions()
            .enumerate()
            .filter(move |(_, x)| q.contains_unchecked(x))
            .map(|(j, _)| j)
    }

    /// `μ(Q)` for the closed cube `Q`; atoms on the boundary count.
    pub fn cube_mass(&self, q: &Cube) -> Result<f64> {
        check_dim(self.dim, q.dim())?;
        Ok(self.atoms_in_cube(q).map(|j| self.weights[j]).sum())
    }

    /// `μ(B(x, r))` for the closed Euclidean ball.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .positions()
            .zip(&self.weights)
            .filter(|(p, _)| euclidean_distance(p, x) <= r)
            .map(|(_, w)| w)
            .sum())
    }

    /// `∫_Q |f| dμ`.
    pub fn integrate_abs(&self, f: &DensityVector, q: &Cube) -> Result<f64> {
        f.check_against(self)?;
        check_dim(self.dim, q.dim())?;
        Ok(self
            .atoms_in_cube(q)
            .map(|j| f.values[j].norm() * self.weights[j])
            .sum())
    }

    /// `‖f‖_{L¹(μ)}`.
    pub fn norm_l1(&self, f: &DensityVector) -> Result<f64> {
        f.check_against(self)?;
        Ok(f.values.iter().zip(&self.weights).map(|(v, w)| v.norm() * w).sum())
    }

    /// Smallest Euclidean distance between two distinct atoms, or `None` for a
    /// single atom.
    pub fn min_separation(&self) -> Option<f64> {
        (0..self.len())
            .into_par_iter()
            .filter_map(|i| {
                (i + 1..self.len())
                    .map(|j| euclidean_distance(self.position(i), self.position(j)))
                    .min_by(f64::total_cmp)
            })
            .min_by(f64::total_cmp)
    }

    /// Smallest cube containing every atom (center of the bounding box).
    pub fn bounding_cube(&self) -> Cube {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for x in self.positions() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut side = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        // Rounding of the midpoint can leave an extreme atom a hair outside.
        while self.positions().any(|x| !Cube::from_parts(&center, side.max(f64::MIN_POSITIVE)).contains_unchecked(x)) {
            side = if side == 0.0 { f64::MIN_POSITIVE } else { side * (1.0 + 4.0 * f64::EPSILON) };
        }
        Cube::from_parts(&center, side.max(f64::MIN_POSITIVE))
    }

    /// Largest pairwise Euclidean distance (0 for a single atom).
    pub fn diameter(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                (i + 1..self.len())
                    .map(|j| euclidean_distance(self.position(i), self.position(j)))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Result of checking `μ(B(x_j, r)) ≤ C0·r^n` at every atom and every radius
/// where the ball mass can jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub passed: bool,
    pub n: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub r_min: f64,
    /// Largest `μ(B(x,r)) / r^n` over the checked `(x, r)` pairs: the
    /// tightest constant the instance admits.
    pub worst_ratio: f64,
    pub worst_atom: usize,
    pub worst_radius: f64,
    pub violations: usize,
    pub checked_pairs: usize,
}

/// Checks the growth bound for every atom center and every radius in
/// `{r_min} ∪ {|x_k - x_j| : |x_k - x_j| ≥ r_min}`. Ball mass is a
/// right-continuous step function of `r` jumping only at interatomic
/// distances and `C0·r^n` increases, so these radii cover all `r ≥ r_min`.
pub fn verify_growth(mu: &AtomicMeasure) -> GrowthReport {
    let GrowthProfile { n, c0, r_min } = *mu.growth();
    struct AtomStats {
        worst_ratio: f64,
        worst_radius: f64,
        violations: usize,
        checked: usize,
    }
    let per_atom: Vec<AtomStats> = (0..mu.len())
        .into_par_iter()
        .map(|j| {
            let xj = mu.position(j);
            let mut dist: Vec<(f64, f64)> = mu
                .positions()
                .zip(mu.weights())
                .map(|(x, &w)| (euclidean_distance(x, xj), w))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut stats = AtomStats {
                worst_ratio: 0.0,
                worst_radius: r_min,
                violations: 0,
                checked: 0,
            };
            let mut check = |mass: f64, r: f64| {
                let bound = r.powf(n);
                let ratio = mass / bound;
                if ratio > stats.worst_ratio {
                    stats.worst_ratio = ratio;
                    stats.worst_radius = r;
                }
                if mass > c0 * bound {
                    stats.violations += 1;
                }
                stats.checked += 1;
            };
            let mut mass = 0.0;
            let mut k = 0;
            while k < dist.len() && dist[k].0 <= r_min {
                mass += dist[k].1;
                k += 1;
            }
            check(mass, r_min);
            while k < dist.len() {
                let r = dist[k].0;
                while k < dist.len() && dist[k].0 == r {
                    mass += dist[k].1;
                    k += 1;
                }
                check(mass, r);
            }
            stats
        })
        .collect();

    let mut report = GrowthReport {
        passed: true,
        n,
        c0,
        r_min,
        worst_ratio: 0.0,
        worst_atom: 0,
        worst_radius: r_min,
        violations: 0,
        checked_pairs: 0,
    };
    for (j, s) in per_atom.into_iter().enumerate() {
        if s.worst_ratio > report.worst_ratio {
            report.worst_ratio = s.worst_ratio;
            report.worst_atom = j;
            report.worst_radius = s.worst_radius;
        }
        report.violations += s.violations;
        report.checked_pairs += s.checked;
    }
    report.passed = report.violations == 0;
    report
}

/// Values `f(x_j)` of a density, aligned by index with a measure's atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    #[serde(with = "scalar::vec")]
    pub values: Vec<Scalar>,
}

impl DensityVector {
    pub fn new(values: Vec<Scalar>) -> Self {
        DensityVector { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        DensityVector {
            values: values.iter().map(|&v| Scalar::new(v, 0.0)).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        DensityVector {
            values: vec![Scalar::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_against(&self, mu: &AtomicMeasure) -> Result<()> {
        if self.values.len() != mu.len() {
            return Err(Error::LengthMismatch {
                expected: mu.len(),
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidMeasure("density has a non-finite value".into()));
        }
        Ok(())
    }
}

// JSON layout: {"dim", "growth": {"n","C0","r_min"}, "atoms": [{"x": [...], "w": ...}]}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    x: Vec<f64>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    dim: usize,
    growth: GrowthProfile,
    atoms: Vec<AtomRepr>,
}

impl Serialize for AtomicMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            dim: self.dim,
            growth: self.growth,
            atoms: self
                .positions()
                .zip(&self.weights)
                .map(|(x, &w)| AtomRepr { x: x.to_vec(), w })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        let atoms: Vec<(Vec<f64>, f64)> = repr.atoms.into_iter().map(|a| (a.x, a.w)).collect();
        AtomicMeasure::from_points(repr.dim, &atoms, repr.growth).map_err(serde::de::Error::custom)
    }
}
