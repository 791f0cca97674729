//! Besicovich-type selection of an almost disjoint subfamily of centered
//! cubes, and the annulus strategy that keeps the overlap finite when the
//! level set is spread over many scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cube;
use crate::measure::{AtomicMeasure, DensityVector};

/// A stopping cube centered at the atom that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub atom: usize,
    pub cube: Cube,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFamily {
    pub entries: Vec<Candidate>,
    /// Largest tolerated pointwise overlap of the selected cubes.
    pub overlap_bound: usize,
}

impl CandidateFamily {
    pub fn new(entries: Vec<Candidate>, overlap_bound: usize) -> Self {
        CandidateFamily {
            entries,
            overlap_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub cubes: Vec<Candidate>,
    /// Number of selected cubes containing each atom.
    pub overlap_counts: Vec<usize>,
    pub max_overlap: usize,
    pub overlap_bound: usize,
    /// `(N, N')` when the annulus strategy produced this selection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annulus: Option<AnnulusSummary>,
}

/// Pointwise overlap `Σ_k χ_{Q_k}(x_j)` at every atom.
pub fn overlap_counts(mu: &AtomicMeasure, cubes: &[Candidate]) -> Vec<usize> {
    mu.positions()
        .map(|x| cubes.iter().filter(|c| c.cube.contains_unchecked(x)).count())
        .collect()
}

/// Greedy core: largest cubes first (ties by atom index), keeping a cube iff
/// its center lies outside every cube kept so far.
fn greedy(entries: &[Candidate]) -> Vec<Candidate> {
    let mut order: Vec<&Candidate> = entries.iter().collect();
    order.sort_by(|a, b| b.cube.side().total_cmp(&a.cube.side()).then(a.atom.cmp(&b.atom)));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in order {
        if !kept.iter().any(|k| k.cube.contains_unchecked(c.cube.center())) {
            kept.push(c.clone());
        }
    }
    kept
}

/// Selects a subfamily whose cubes cover every candidate center and whose
/// pointwise overlap at the atoms stays within `overlap_bound`.
///
/// With centered cubes in the sup-norm, two kept centers cannot share a
/// closed orthant around a common point, so the overlap never exceeds `2^d`.
pub fn besicovich_select(mu: &AtomicMeasure, family: &CandidateFamily) -> Result<Selection> {
    for c in &family.entries {
        if c.cube.dim() != mu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                got: c.cube.dim(),
            });
        }
    }
    let cubes = greedy(&family.entries);
    let overlap_counts = overlap_counts(mu, &cubes);
    let max_overlap = overlap_counts.iter().copied().max().unwrap_or(0);
    if max_overlap > family.overlap_bound {
        return Err(Error::OverlapExceeded {
            measured: max_overlap,
            bound: family.overlap_bound,
        });
    }
    Ok(Selection {
        cubes,
        overlap_counts,
        max_overlap,
        overlap_bound: family.overlap_bound,
        annulus: None,
    })
}

/// Dilation ratio between consecutive annuli.
pub const ANNULUS_RATIO: f64 = 1.25;

/// Confinement depth `N` and starting annulus `N'` for which every stopping
/// cube is confined whenever the base cube `Q0` satisfies
/// `2^{d+1}‖f‖₁/μ(Q0) < λ`. A cube from annulus `m ≥ N'` that escaped
/// `Q_{m+N} ∖ Q_{m−N}` would need side above `(4/5 − (4/5)^N)·ℓ(Q_m) > ¾ℓ(Q_m)`
/// (true once `N ≥ 14`); its double then swallows `Q0` as soon as
/// `(5/4)^m ≥ 2` (`m ≥ 4`), contradicting the stopping condition.
pub const DERIVED_CONFINEMENT: (usize, usize) = (14, 4);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusConfig {
    pub ratio: f64,
    /// Confinement depth; `None` scans for the smallest working pair.
    pub n: Option<usize>,
    pub n_prime: Option<usize>,
    /// Base cube, centered at the origin.
    pub q0: Cube,
}

impl AnnulusConfig {
    /// Smallest origin-centered cube `Q0` (over the sides at which its mass
    /// jumps) with `2^{d+1}‖f‖₁/μ(Q0) < λ`, with `N` and `N'` left to the scan.
    pub fn auto(mu: &AtomicMeasure, f: &DensityVector, lambda: f64) -> Result<Self> {
        let norm1 = mu.norm_l1(f)?;
        let needed = 2f64.powi(mu.dim() as i32 + 1) * norm1 / lambda;
        let origin = vec![0.0; mu.dim()];
        let mut sides: Vec<f64> = mu
            .positions()
            .map(|x| 2.0 * crate::geometry::sup_distance(x, &origin))
            .filter(|&s| s > 0.0)
            .collect();
        sides.sort_by(f64::total_cmp);
        sides.dedup();
        let floor = mu.growth().r_min;
        sides.insert(0, floor);
        for s in sides.into_iter().map(|s| s.max(floor)) {
            let q0 = Cube::new(origin.clone(), s)?;
            if mu.cube_mass(&q0)? > needed {
                return Ok(AnnulusConfig {
                    ratio: ANNULUS_RATIO,
                    n: None,
                    n_prime: None,
                    q0,
                });
            }
        }
        Err(Error::InadmissibleLambda {
            lambda,
            floor: 2f64.powi(mu.dim() as i32 + 1) * norm1 / mu.total_mass(),
        })
    }

    fn shell(&self, m: i64) -> Option<Cube> {
        (m >= 0).then(|| {
            self.q0
                .dilate(self.ratio.powi(m as i32))
                .expect("ratio is positive")
        })
    }

    /// Index `m` of the annulus `Q_m ∖ Q_{m−1}` containing `x` (`Q_{−1} = ∅`).
    pub fn annulus_index(&self, x: &[f64]) -> usize {
        let mut m = 0;
        while !self.shell(m as i64).expect("non-negative").contains_unchecked(x) {
            m += 1;
        }
        m
    }

    /// `Q_x ⊂ Q_{m+N} ∖ Q_{m−N}`.
    pub fn is_confined(&self, cube: &Cube, m: usize, n: usize) -> bool {
        let outer = self.shell((m + n) as i64).expect("non-negative");
        let inside = outer.contains_cube(cube).unwrap_or(false);
        let clear = match self.shell(m as i64 - n as i64) {
            Some(inner) => !inner.intersects(cube).unwrap_or(true),
            None => true,
        };
        inside && clear
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGroup {
    pub m: usize,
    pub candidates: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSummary {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_prime")]
    pub n_prime: usize,
    pub groups: Vec<AnnulusGroup>,
}

/// Smallest `N'` making annuli `m ≥ N'` confined at depth `n`.
fn required_start(cfg: &AnnulusConfig, tagged: &[(usize, Candidate)], n: usize) -> usize {
    tagged
        .iter()
        .filter(|(m, c)| !cfg.is_confined(&c.cube, *m, n))
        .map(|(m, _)| m + 1)
        .max()
        .unwrap_or(0)
}

/// Runs the greedy selection separately on each annulus of the candidates'
/// centers and merges the results. The merged overlap is re-measured and must
/// stay within `2^d·(2N + N')`: confined cubes from annulus `m` only meet
/// annuli `m − N + 1 … m + N`, and the first `N'` annuli add at most `2^d` each.
pub fn annulus_cover(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    candidates: &[Candidate],
    cfg: &AnnulusConfig,
) -> Result<Selection> {
    let norm1 = mu.norm_l1(f)?;
    let q0_mass = mu.cube_mass(&cfg.q0)?;
    let scale = 2f64.powi(mu.dim() as i32 + 1);
    if !(scale * norm1 < lambda * q0_mass) {
        return Err(Error::InadmissibleLambda {
            lambda,
            floor: scale * norm1 / q0_mass,
        });
    }

    let mut by_annulus: std::collections::BTreeMap<usize, Vec<Candidate>> = Default::default();
    for c in candidates {
        let m = cfg.annulus_index(c.cube.center());
        by_annulus.entry(m).or_default().push(c.clone());
    }

    let per_cell = 1usize << mu.dim();
    let mut tagged: Vec<(usize, Candidate)> = Vec::new();
    let mut groups = Vec::new();
    for (&m, entries) in &by_annulus {
        let kept = greedy(entries);
        groups.push(AnnulusGroup {
            m,
            candidates: entries.len(),
            selected: kept.len(),
        });
        tagged.extend(kept.into_iter().map(|c| (m, c)));
    }

    let (n, n_prime) = match (cfg.n, cfg.n_prime) {
        (Some(n), Some(n_prime)) => {
            if let Some((m, _)) = tagged
                .iter()
                .find(|(m, c)| *m >= n_prime && !cfg.is_confined(&c.cube, *m, n))
            {
                return Err(Error::ConfinementViolation {
                    annulus: *m,
                    n,
                    n_prime,
                });
            }
            (n, n_prime)
        }
        (fixed_n, _) => {
            let max_m = tagged.iter().map(|(m, _)| *m).max().unwrap_or(0);
            let range: Vec<usize> = match fixed_n {
                Some(n) => vec![n],
                None => (1..=max_m + 64).collect(),
            };
            range
                .into_iter()
                .map(|n| (n, required_start(cfg, &tagged, n)))
                .min_by_key(|&(n, np)| (n + np, n))
                .expect("non-empty scan")
        }
    };

    let cubes: Vec<Candidate> = tagged.into_iter().map(|(_, c)| c).collect();
    let overlap_counts = overlap_counts(mu, &cubes);
    let max_overlap = overlap_counts.iter().copied().max().unwrap_or(0);
    let overlap_bound = per_cell * (2 * n + n_prime).max(1);
    if max_overlap > overlap_bound {
        return Err(Error::OverlapExceeded {
            measured: max_overlap,
            bound: overlap_bound,
        });
    }
    Ok(Selection {
        cubes,
        overlap_counts,
        max_overlap,
        overlap_bound,
        annulus: Some(AnnulusSummary { n, n_prime, groups }),
    })
}
