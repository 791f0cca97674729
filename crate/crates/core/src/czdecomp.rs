//! Calderón–Zygmund decomposition `f = g + Σ b_i` for a density on a
//! non-doubling atomic measure.
//!
//! The pipeline is
//!
//! 1. [`stopping_cube`] for every atom with `|f| > λ`: the cube `Q_x` centered
//!    there on which `∫_{Q_x}|f| / μ(2Q_x)` last exceeds `θ = λ/2^{d+1}`;
//! 2. [`select_cubes`]: an almost disjoint subfamily `{Q_i}` via greedy
//!    Besicovich selection (optionally per annulus);
//! 3. [`attach_r`]: the companion `R_i`, the smallest `(6, 6^{n+1})`-doubling
//!    cube of the form `6^k Q_i` with `k ≥ 1`;
//! 4. [`build_phi`]: constant-sign pieces `φ_i = α_i χ_{A_i}` with
//!    `A_i ⊂ R_i`, built in order of non-decreasing `ℓ(R_i)` so that
//!    `Σ|φ_i| ≤ Bλ`;
//! 5. [`decompose`] assembles `g = f χ_{outside ∪Q_i} + Σ φ_i` and
//!    `b_i = w_i f − φ_i` with `w_i = χ_{Q_i} / Σ_k χ_{Q_k}`.
//!
//! Everything is exact on finite atomic measures: "almost everywhere"
//! becomes "at every atom", and the conditions over a continuum of dilations
//! reduce to finitely many step-function evaluations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{
    annulus_cover, besicovich_select, overlap_counts, AnnulusConfig, Candidate, CandidateFamily,
    Selection,
};
use crate::doubling::{smallest_doubling_power, DerivedConstants, DoublingHit, COMPANION_BASE};
use crate::error::{Error, Result};
use crate::geometry::{sup_distance, Cube};
use crate::measure::{AtomicMeasure, DensityVector};
use crate::scalar::{self, Scalar};

/// `2^{d+1}`, the factor between `λ` and the stopping threshold.
pub fn threshold_scale(dim: usize) -> f64 {
    2f64.powi(dim as i32 + 1)
}

/// Stopping threshold `θ = λ / 2^{d+1}`.
pub fn threshold(lambda: f64, dim: usize) -> f64 {
    lambda / threshold_scale(dim)
}

/// `2^{d+1}‖f‖₁/‖μ‖`; admissible levels lie strictly above it.
pub fn admissibility_floor(mu: &AtomicMeasure, f: &DensityVector) -> Result<f64> {
    Ok(threshold_scale(mu.dim()) * mu.norm_l1(f)? / mu.total_mass())
}

fn check_admissible(mu: &AtomicMeasure, f: &DensityVector, lambda: f64) -> Result<()> {
    let floor = admissibility_floor(mu, f)?;
    if lambda.is_finite() && lambda > floor {
        Ok(())
    } else {
        Err(Error::InadmissibleLambda { lambda, floor })
    }
}

/// How the candidate cubes are thinned out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CzOptions {
    /// Overlap bound for plain greedy selection; `2^d` when unset.
    pub k_overlap: Option<usize>,
    /// Engage the annulus strategy when the level set's sup-norm extent
    /// exceeds this value. Never engaged when unset.
    pub annulus_min_extent: Option<f64>,
    /// Explicit annulus configuration; derived from the data when unset.
    pub annulus: Option<AnnulusConfig>,
}

/// Step function `ℓ ↦ ∫_{Q(x,ℓ)} |f| / μ(Q(x,2ℓ))` for a fixed center,
/// stored as its values on consecutive intervals `[start, end)`.
struct StoppingProfile {
    /// `(start, end, value)`; the first interval starts at 0 and the last one
    /// is unbounded.
    pieces: Vec<(f64, f64, f64)>,
}

impl StoppingProfile {
    fn new(mu: &AtomicMeasure, f: &DensityVector, center: &[f64]) -> Self {
        // An atom at sup-distance d enters the denominator cube Q(x, 2ℓ) at
        // ℓ = d and the numerator cube Q(x, ℓ) at ℓ = 2d.
        let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * mu.len());
        for (j, x) in mu.positions().enumerate() {
            let d = sup_distance(x, center);
            let w = mu.weight(j);
            events.push((d, 0.0, w));
            events.push((2.0 * d, f.values[j].norm() * w, 0.0));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut pieces = Vec::new();
        let (mut num, mut den) = (0.0, 0.0);
        let mut k = 0;
        while k < events.len() {
            let at = events[k].0;
            while k < events.len() && events[k].0 == at {
                num += events[k].1;
                den += events[k].2;
                k += 1;
            }
            let end = events.get(k).map_or(f64::INFINITY, |e| e.0);
            let value = if den > 0.0 { num / den } else { 0.0 };
            pieces.push((at, end, value));
        }
        StoppingProfile { pieces }
    }

    /// The last maximal run of intervals on which the profile exceeds `theta`.
    fn last_run_above(&self, theta: f64) -> Option<(f64, f64)> {
        let last = self.pieces.iter().rposition(|p| p.2 > theta)?;
        let mut first = last;
        while first > 0 && self.pieces[first - 1].2 > theta {
            first -= 1;
        }
        Some((self.pieces[first].0, self.pieces[last].1))
    }
}

/// A side inside the run `[a, b)`: its midpoint, or `a` when the run is so
/// short that the midpoint rounds up to `b`. In that case `b ≤ 2a`, so every
/// side beyond `2ℓ*` still lies past the run.
fn run_interior(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Stopping cube for atom `j` (which must satisfy `|f_j| > λ`).
///
/// Returns `Q(x_j, ℓ*)` with `ℓ*` inside the last maximal interval `[a, b)`
/// (its midpoint, see [`run_interior`]) on which `∫_{Q(x_j,ℓ)}|f| / μ(Q(x_j,2ℓ)) > λ/2^{d+1}`. Every side
/// `ℓ' > 2ℓ* ≥ b` is then at or below the threshold.
pub fn stopping_cube(mu: &AtomicMeasure, f: &DensityVector, lambda: f64, j: usize) -> Result<Cube> {
    f.check_against(mu)?;
    check_admissible(mu, f, lambda)?;
    let theta = threshold(lambda, mu.dim());
    let center = mu.position(j);
    let profile = StoppingProfile::new(mu, f, center);
    let (a, b) = profile
        .last_run_above(theta)
        .ok_or(Error::NoStoppingScale { atom: j })?;
    if !b.is_finite() {
        // The profile tends to ‖f‖₁/‖μ‖, which sits below θ for admissible λ.
        return Err(Error::NoStoppingScale { atom: j });
    }
    let side = run_interior(a, b);
    if side <= 0.0 {
        return Err(Error::NoStoppingScale { atom: j });
    }
    Cube::new(center.to_vec(), side)
}

/// Atoms of the level set `{|f| > λ}`, in index order.
pub fn level_set(f: &DensityVector, lambda: f64) -> Vec<usize> {
    f.values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > lambda)
        .map(|(j, _)| j)
        .collect()
}

fn sup_extent(mu: &AtomicMeasure, atoms: &[usize]) -> f64 {
    (0..mu.dim())
        .map(|i| {
            let (lo, hi) = atoms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
                let c = mu.position(j)[i];
                (lo.min(c), hi.max(c))
            });
            if atoms.is_empty() {
                0.0
            } else {
                hi - lo
            }
        })
        .fold(0.0, f64::max)
}

/// Stopping cubes of the level set, thinned to an almost disjoint family.
pub fn select_cubes(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    opts: &CzOptions,
) -> Result<Selection> {
    f.check_against(mu)?;
    check_admissible(mu, f, lambda)?;
    let level = level_set(f, lambda);
    let candidates: Vec<Candidate> = level
        .par_iter()
        .map(|&j| stopping_cube(mu, f, lambda, j).map(|cube| Candidate { atom: j, cube }))
        .collect::<Result<_>>()?;

    let engage = opts
        .annulus_min_extent
        .is_some_and(|limit| sup_extent(mu, &level) > limit);
    if engage {
        let cfg = match &opts.annulus {
            Some(cfg) => cfg.clone(),
            None => AnnulusConfig::auto(mu, f, lambda)?,
        };
        annulus_cover(mu, f, lambda, &candidates, &cfg)
    } else {
        let k = opts.k_overlap.unwrap_or(1usize << mu.dim());
        besicovich_select(mu, &CandidateFamily::new(candidates, k))
    }
}

/// Companion cubes `R_i`: the smallest `(6, 6^{n+1})`-doubling `6^k Q_i`, `k ≥ 1`.
pub fn attach_r(mu: &AtomicMeasure, cubes: &[Candidate]) -> Result<Vec<DoublingHit>> {
    cubes
        .par_iter()
        .map(|c| smallest_doubling_power(mu, &c.cube, COMPANION_BASE, 1))
        .collect()
}

/// One constant-sign piece `φ = α χ_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    /// Position of the cube in the input slice.
    pub index: usize,
    pub alpha: Scalar,
    /// Atom indices of `A`, ascending.
    pub support: Vec<usize>,
}

/// Builds `φ_i = α_i χ_{A_i}` in order of non-decreasing `ℓ(R_i)` (ties by
/// generating atom). `A_i` keeps the atoms of `R_i` where the pieces built so
/// far sum to at most `2·C2·λ`, and `α_i` makes `∫φ_i dμ = ∫_{Q_i} f w_i dμ`.
/// The output is in processing order.
pub fn build_phi(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    cubes: &[Candidate],
    rs: &[DoublingHit],
    constants: &DerivedConstants,
) -> Result<Vec<Phi>> {
    f.check_against(mu)?;
    if cubes.len() != rs.len() {
        return Err(Error::LengthMismatch {
            expected: cubes.len(),
            got: rs.len(),
        });
    }
    let counts = overlap_counts(mu, cubes);
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| {
        rs[a]
            .cube
            .side()
            .total_cmp(&rs[b].cube.side())
            .then(cubes[a].atom.cmp(&cubes[b].atom))
    });

    let cap = 2.0 * constants.c2 * lambda;
    let mut accumulated = vec![0.0f64; mu.len()];
    let mut out = Vec::with_capacity(cubes.len());
    for (pos, &i) in order.iter().enumerate() {
        let r_atoms: Vec<usize> = mu.atoms_in_cube(&rs[i].cube).collect();
        let support: Vec<usize> = r_atoms
            .iter()
            .copied()
            .filter(|&j| accumulated[j] <= cap)
            .collect();
        let r_mass: f64 = r_atoms.iter().map(|&j| mu.weight(j)).sum();
        let a_mass: f64 = support.iter().map(|&j| mu.weight(j)).sum();
        if a_mass < r_mass / 2.0 {
            return Err(Error::SupportTooSmall {
                part: pos,
                mass: a_mass,
                half: r_mass / 2.0,
            });
        }
        let target: Scalar = mu
            .atoms_in_cube(&cubes[i].cube)
            .map(|j| f.values[j] * (mu.weight(j) / counts[j] as f64))
            .sum();
        let alpha = target / a_mass;
        for &j in &support {
            accumulated[j] += alpha.norm();
        }
        out.push(Phi {
            index: i,
            alpha,
            support,
        });
    }
    Ok(out)
}

/// One bad part `b_i = w_i f − φ_i` with its cubes and coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzPart {
    /// Atom at the center of `Q_i`.
    pub atom: usize,
    #[serde(rename = "Q")]
    pub q: Cube,
    #[serde(rename = "R")]
    pub r: Cube,
    /// Exponent with `R_i = 6^k Q_i`.
    pub k: u32,
    #[serde(with = "scalar")]
    pub alpha: Scalar,
    /// Support `A_i ⊂ R_i` of `φ_i`.
    #[serde(rename = "A")]
    pub support: Vec<usize>,
    /// Values of `b_i` at every atom.
    #[serde(with = "scalar::vec")]
    pub b: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub parts: Vec<CzPart>,
    #[serde(with = "scalar::vec")]
    pub g: Vec<Scalar>,
    pub constants: DerivedConstants,
    /// Measured maximum of `Σ_k χ_{Q_k}` over the atoms.
    pub max_overlap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annulus: Option<crate::covering::AnnulusSummary>,
}

impl CzDecomposition {
    /// `Σ_i b_i` at every atom.
    pub fn bad_total(&self) -> Vec<Scalar> {
        let mut total = vec![Scalar::new(0.0, 0.0); self.g.len()];
        for p in &self.parts {
            for (t, v) in total.iter_mut().zip(&p.b) {
                *t += v;
            }
        }
        total
    }
}

/// Full pipeline: select, attach companions, build `φ_i`, assemble `g` and
/// the `b_i`. A level set that is empty yields `g = f` and no parts.
pub fn decompose(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    opts: &CzOptions,
) -> Result<CzDecomposition> {
    let selection = select_cubes(mu, f, lambda, opts)?;
    let k_overlap = selection.overlap_bound as f64;
    let constants = DerivedConstants::new(mu.dim(), mu.growth(), k_overlap);
    let cubes = &selection.cubes;
    let rs = attach_r(mu, cubes)?;
    let phis = build_phi(mu, f, lambda, cubes, &rs, &constants)?;

    let counts = &selection.overlap_counts;
    let zero = Scalar::new(0.0, 0.0);
    let mut g: Vec<Scalar> = f
        .values
        .iter()
        .zip(counts)
        .map(|(&v, &c)| if c == 0 { v } else { zero })
        .collect();

    let mut parts = Vec::with_capacity(phis.len());
    for phi in phis {
        let cand = &cubes[phi.index];
        let mut b = vec![zero; mu.len()];
        for j in mu.atoms_in_cube(&cand.cube) {
            b[j] = f.values[j] / counts[j] as f64;
        }
        for &j in &phi.support {
            b[j] -= phi.alpha;
            g[j] += phi.alpha;
        }
        parts.push(CzPart {
            atom: cand.atom,
            q: cand.cube.clone(),
            r: rs[phi.index].cube.clone(),
            k: rs[phi.index].power,
            alpha: phi.alpha,
            support: phi.support,
            b,
        });
    }

    Ok(CzDecomposition {
        lambda,
        parts,
        g,
        constants,
        max_overlap: selection.max_overlap,
        annulus: selection.annulus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GrowthProfile;

    fn three_atoms() -> AtomicMeasure {
        AtomicMeasure::from_points(
            1,
            &[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![3.0], 4.0)],
            GrowthProfile::new(1.0, 8.0, 0.5).unwrap(),
        )
        .unwrap()
    }

    fn spike() -> DensityVector {
        DensityVector::from_real(&[10.0, 0.0, 0.0])
    }

    fn c(re: f64) -> Scalar {
        Scalar::new(re, 0.0)
    }

    #[test]
    fn stopping_profile_of_running_example() {
        let mu = three_atoms();
        let p = StoppingProfile::new(&mu, &spike(), &[0.0]);
        let values: Vec<(f64, f64, f64)> = p.pieces.clone();
        assert_eq!(
            values,
            vec![
                (0.0, 1.0, 10.0),
                (1.0, 2.0, 10.0 / 3.0),
                (2.0, 3.0, 10.0 / 3.0),
                (3.0, 6.0, 10.0 / 7.0),
                (6.0, f64::INFINITY, 10.0 / 7.0),
            ]
        );
        assert_eq!(p.last_run_above(2.0), Some((0.0, 3.0)));
    }

    #[test]
    fn stopping_cube_running_example() {
        let q = stopping_cube(&three_atoms(), &spike(), 8.0, 0).unwrap();
        assert_eq!(q, Cube::new(vec![0.0], 1.5).unwrap());
    }

    #[test]
    fn stopping_cube_rejects_inadmissible_lambda() {
        let mu = AtomicMeasure::from_points(1, &[(vec![0.0], 2.0)], GrowthProfile::new(1.0, 2.0, 1.0).unwrap()).unwrap();
        let f = DensityVector::from_real(&[5.0]);
        // floor = 4·10/2 = 20
        assert!(matches!(
            stopping_cube(&mu, &f, 19.0, 0),
            Err(Error::InadmissibleLambda { .. })
        ));
        assert!(matches!(
            stopping_cube(&mu, &f, 20.0, 0),
            Err(Error::InadmissibleLambda { .. })
        ));
    }

    #[test]
    fn stopping_cube_matches_exhaustive_scan() {
        // 100 unit atoms on a line, f = 100 at atom 37.
        let atoms: Vec<_> = (0..100).map(|i| (vec![i as f64], 1.0)).collect();
        let mu = AtomicMeasure::from_points(1, &atoms, GrowthProfile::new(1.0, 3.0, 1.0).unwrap()).unwrap();
        let mut vals = vec![0.0; 100];
        vals[37] = 100.0;
        let f = DensityVector::from_real(&vals);
        let lambda = 80.0;
        let theta = lambda / 4.0;
        let q = stopping_cube(&mu, &f, lambda, 37).unwrap();

        // Oracle: evaluate the ratio by direct interval membership on every
        // critical side, then pick the last run above theta.
        let ratio = |side: f64| {
            let num: f64 = (0..100)
                .filter(|&i| (i as f64 - 37.0).abs() <= side / 2.0)
                .map(|i| vals[i])
                .sum();
            let den = (0..100).filter(|&i| (i as f64 - 37.0).abs() <= side).count() as f64;
            num / den
        };
        let mut knots: Vec<f64> = (0..100)
            .flat_map(|i| {
                let d = (i as f64 - 37.0).abs();
                [d, 2.0 * d]
            })
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let above: Vec<bool> = knots
            .iter()
            .map(|&k| if k == 0.0 { true } else { ratio(k) > theta })
            .collect();
        let last = above.iter().rposition(|&b| b).unwrap();
        let mut first = last;
        while first > 0 && above[first - 1] {
            first -= 1;
        }
        let (a, b) = (knots[first], knots[last + 1]);
        assert_eq!(q.side(), a + (b - a) / 2.0);
        assert!(ratio(q.side()) > theta);
        for &k in knots.iter().filter(|&&k| k > 2.0 * q.side()) {
            assert!(ratio(k) <= theta);
        }
    }

    #[test]
    fn running_example_decomposition() {
        let mu = three_atoms();
        let dec = decompose(&mu, &spike(), 8.0, &CzOptions::default()).unwrap();
        assert_eq!(dec.parts.len(), 1);
        let part = &dec.parts[0];
        assert_eq!(part.q, Cube::new(vec![0.0], 1.5).unwrap());
        assert_eq!(part.r, Cube::new(vec![0.0], 9.0).unwrap());
        assert_eq!(part.k, 1);
        assert_eq!(part.support, vec![0, 1, 2]);
        assert_eq!(part.alpha, c(10.0 / 7.0));
        assert_eq!(dec.g, vec![c(10.0 / 7.0); 3]);
        assert_eq!(part.b, vec![c(10.0 - 10.0 / 7.0), c(-10.0 / 7.0), c(-10.0 / 7.0)]);
        let integral: Scalar = part.b.iter().zip(mu.weights()).map(|(b, w)| b * w).sum();
        assert!(integral.norm() < 1e-13);
    }

    #[test]
    fn trivial_decomposition_above_max() {
        let mu = three_atoms();
        let dec = decompose(&mu, &spike(), 11.0, &CzOptions::default()).unwrap();
        assert!(dec.parts.is_empty());
        assert_eq!(dec.g, spike().values);

        let zero = DensityVector::zeros(3);
        let dec = decompose(&mu, &zero, 1.0, &CzOptions::default()).unwrap();
        assert!(dec.parts.is_empty());
    }

    #[test]
    fn two_far_spikes_give_disjoint_parts() {
        let mut atoms: Vec<_> = (0..50).map(|i| (vec![i as f64 * 0.1], 0.1)).collect();
        atoms.extend((0..50).map(|i| (vec![1000.0 + i as f64 * 0.1], 0.1)));
        let mu = AtomicMeasure::from_points(1, &atoms, GrowthProfile::new(1.0, 3.0, 0.1).unwrap()).unwrap();
        let mut vals = vec![0.0; 100];
        vals[25] = 50.0;
        vals[75] = -50.0;
        let f = DensityVector::from_real(&vals);
        let dec = decompose(&mu, &f, 20.0, &CzOptions::default()).unwrap();
        assert_eq!(dec.parts.len(), 2);
        assert!(!dec.parts[0].r.intersects(&dec.parts[1].r).unwrap());
        for p in &dec.parts {
            let in_r: Vec<usize> = mu.atoms_in_cube(&p.r).collect();
            assert_eq!(p.support, in_r);
        }
        let signs: Vec<f64> = dec.parts.iter().map(|p| p.alpha.re.signum()).collect();
        assert!(signs.contains(&1.0) && signs.contains(&-1.0));
    }

    #[test]
    fn run_interior_stays_inside_short_runs() {
        assert_eq!(run_interior(0.0, 3.0), 1.5);
        let a = 6.926622163624807;
        let b = 6.926622163624808;
        assert_eq!(a + (b - a) / 2.0, b);
        assert_eq!(run_interior(a, b), a);
        assert!(b <= 2.0 * a);
    }

    #[test]
    fn build_phi_is_order_independent() {
        let atoms: Vec<_> = (0..80)
            .map(|i| (vec![(i as f64 * 0.37).sin() * 5.0 + i as f64 * 1e-3], 0.05 + (i % 7) as f64 * 0.01))
            .collect();
        let mu = AtomicMeasure::from_points(1, &atoms, GrowthProfile::new(1.0, 50.0, 1e-3).unwrap()).unwrap();
        let vals: Vec<f64> = (0..80).map(|i| if i % 20 == 3 { 100.0 } else { 0.3 }).collect();
        let f = DensityVector::from_real(&vals);
        let lambda = 30.0;
        let sel = select_cubes(&mu, &f, lambda, &CzOptions::default()).unwrap();
        let consts = DerivedConstants::new(1, mu.growth(), sel.overlap_bound as f64);
        let rs = attach_r(&mu, &sel.cubes).unwrap();
        let base = build_phi(&mu, &f, lambda, &sel.cubes, &rs, &consts).unwrap();

        let mut perm: Vec<usize> = (0..sel.cubes.len()).collect();
        perm.reverse();
        let third = perm.len() / 3;
        perm.rotate_left(third);
        let cubes: Vec<_> = perm.iter().map(|&i| sel.cubes[i].clone()).collect();
        let rs2: Vec<_> = perm.iter().map(|&i| rs[i].clone()).collect();
        let shuffled = build_phi(&mu, &f, lambda, &cubes, &rs2, &consts).unwrap();
        assert!(base.len() >= 2);
        assert_eq!(base.len(), shuffled.len());
        for (a, b) in base.iter().zip(&shuffled) {
            assert_eq!(sel.cubes[a.index].atom, cubes[b.index].atom);
            assert_eq!(a.alpha, b.alpha);
            assert_eq!(a.support, b.support);
        }
    }

    #[test]
    fn decomposition_json_shape() {
        let mu = three_atoms();
        let dec = decompose(&mu, &spike(), 8.0, &CzOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&dec).unwrap();
        assert_eq!(v["lambda"], 8.0);
        assert_eq!(v["parts"][0]["Q"]["side"], 1.5);
        assert_eq!(v["parts"][0]["R"]["center"][0], 0.0);
        assert_eq!(v["parts"][0]["A"], serde_json::json!([0, 1, 2]));
        assert!(v["parts"][0]["alpha"].is_number());
        assert!(v["constants"]["B"].is_number());
        let back: CzDecomposition = serde_json::from_value(v).unwrap();
        assert_eq!(back, dec);
    }
}
