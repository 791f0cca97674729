//! `(α,β)`-doubling cubes, the annulus kernel integral that controls the
//! gap between a cube and its doubling companion, and the explicit constants
//! `C1, C2, C3, B` that turn the decomposition's estimates into assertions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, sup_distance, Cube};
use crate::measure::{AtomicMeasure, GrowthProfile};

/// Dilation base used for the companion cubes `R_i = 6^k Q_i`.
pub const COMPANION_BASE: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingParams {
    pub alpha: f64,
    pub beta: f64,
}

impl DoublingParams {
    /// Requires `α > 1` and `β > α^n`.
    pub fn new(alpha: f64, beta: f64, n: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidDoublingParams(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(beta > alpha.powf(n) && beta.is_finite()) {
            return Err(Error::InvalidDoublingParams(format!(
                "beta = {beta} must exceed alpha^n = {}",
                alpha.powf(n)
            )));
        }
        Ok(DoublingParams { alpha, beta })
    }

    /// `(6, 6^{n+1})`, the parameters of the companion cubes.
    pub fn companion(n: f64) -> Self {
        DoublingParams {
            alpha: COMPANION_BASE,
            beta: COMPANION_BASE.powf(n + 1.0),
        }
    }

    /// `β > α^d`: the regime in which small doubling cubes exist at almost
    /// every point of any Radon measure.
    pub fn small_cube_regime(&self, dim: usize) -> bool {
        self.beta > self.alpha.powi(dim as i32)
    }
}

/// Explicit constants of the decomposition for a given `(d, n, C0, K_overlap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Bound on `∫_{R∖Q} |x - x_Q|^{-n} dμ` for `(6, 6^{n+1})` gaps.
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Chebyshev constant for the previously built `φ_j` overlapping `R_k`.
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Bound on `|α_k| / λ`.
    #[serde(rename = "C3")]
    pub c3: f64,
    /// Bound on `Σ_i |φ_i| / λ`; equals `2·C2 + C3`.
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K_overlap")]
    pub k_overlap: f64,
}

impl DerivedConstants {
    pub fn new(dim: usize, growth: &GrowthProfile, k_overlap: f64) -> Self {
        let n = growth.n;
        let d = dim as f64;
        let c1 = annulus_bound(dim, growth, &DoublingParams::companion(n));
        let threshold_scale = 2f64.powf(d + 1.0);
        let c2 = k_overlap * COMPANION_BASE.powf(n + 1.0) / threshold_scale;
        let c3 = 2.0 / threshold_scale;
        DerivedConstants {
            c1,
            c2,
            c3,
            b: 2.0 * c2 + c3,
            k_overlap,
        }
    }

    /// Default overlap bound `2^d` of greedy centered-cube selection.
    pub fn default_overlap(dim: usize) -> f64 {
        2f64.powi(dim as i32)
    }
}

/// `C0·(√d·α)^n·β/(β − α^n)`: the bound on the annulus integral between
/// concentric cubes separated only by non-doubling `α^k` dilations.
///
/// Each shell `α^kQ ∖ α^{k-1}Q` lies at distance at least `α^{k-1}ℓ(Q)/2`
/// from `x_Q`, shell masses decay like `β^{k-N}` towards the inside, and the
/// outer cube sits in a ball of radius `√d·ℓ/2`, where the growth bound
/// applies. Summing the geometric series gives the formula.
pub fn annulus_bound(dim: usize, growth: &GrowthProfile, p: &DoublingParams) -> f64 {
    let n = growth.n;
    let an = p.alpha.powf(n);
    growth.c0 * ((dim as f64).sqrt() * p.alpha).powf(n) * p.beta / (p.beta - an)
}

/// `μ(αQ) ≤ β·μ(Q)`. A null cube counts as doubling only when `αQ` is null too.
pub fn is_doubling(mu: &AtomicMeasure, q: &Cube, p: &DoublingParams) -> Result<bool> {
    let inner = mu.cube_mass(q)?;
    let outer = mu.cube_mass(&q.dilate(p.alpha)?)?;
    if inner == 0.0 {
        return Ok(outer == 0.0);
    }
    Ok(outer <= p.beta * inner)
}

/// A doubling cube found by dilation, with the exponent that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingHit {
    pub cube: Cube,
    pub power: u32,
}

/// Largest number of consecutive non-doubling dilations a cube of mass
/// `start_mass` can undergo: each one multiplies the mass by more than `β`,
/// and the mass never exceeds `‖μ‖`.
fn dilation_cap(total: f64, start_mass: f64, beta: f64) -> usize {
    let steps = (total / start_mass).ln() / beta.ln();
    steps.max(0.0).ceil() as usize + 2
}

/// The cube centered at atom `x` with side `c·α^k` for the least `k ≥ 0`
/// that is `(α,β)`-doubling.
pub fn doubling_cube_at_least(
    mu: &AtomicMeasure,
    x: &[f64],
    c: f64,
    p: &DoublingParams,
) -> Result<DoublingHit> {
    if mu.atom_at(x).is_none() {
        return Err(Error::NotAnAtom);
    }
    let base = Cube::new(x.to_vec(), c)?;
    let start = mu.cube_mass(&base)?;
    let cap = dilation_cap(mu.total_mass(), start, p.beta);
    for k in 0..=cap {
        let q = base.dilate(p.alpha.powi(k as i32))?;
        if is_doubling(mu, &q, p)? {
            return Ok(DoublingHit { cube: q, power: k as u32 });
        }
    }
    Err(Error::IterationCap { cap })
}

/// `base^k Q` for the least `k ≥ k_min` that is `(base, base^{n+1})`-doubling.
/// With the default base 6 and `k_min = 1`, the result has side at least
/// `6·ℓ(Q)`.
pub fn smallest_doubling_power(
    mu: &AtomicMeasure,
    q: &Cube,
    base: f64,
    k_min: u32,
) -> Result<DoublingHit> {
    let n = mu.growth().n;
    let p = DoublingParams::new(base, base.powf(n + 1.0), n)?;
    let start = mu.cube_mass(q)?;
    if start == 0.0 {
        return Err(Error::InvalidCube("cube has zero mass".into()));
    }
    let cap = k_min as usize + dilation_cap(mu.total_mass(), start, p.beta);
    for k in k_min as usize..=cap {
        let r = q.dilate(base.powi(k as i32))?;
        if is_doubling(mu, &r, &p)? {
            return Ok(DoublingHit { cube: r, power: k as u32 });
        }
    }
    Err(Error::IterationCap { cap })
}

/// `Σ { w_j / |x_j − x_Q|^n : x_j ∈ R ∖ Q }` for concentric `Q ⊂ R`.
pub fn annulus_kernel_integral(mu: &AtomicMeasure, q: &Cube, r: &Cube) -> Result<f64> {
    if !q.is_concentric(r) {
        return Err(Error::NotConcentric);
    }
    if r.side() < q.side() {
        return Err(Error::InvalidCube("outer cube is smaller than inner cube".into()));
    }
    let n = mu.growth().n;
    let center = q.center();
    Ok(mu
        .atoms_in_cube(r)
        .filter(|&j| !q.contains_unchecked(mu.position(j)))
        .map(|j| mu.weight(j) / euclidean_distance(mu.position(j), center).powf(n))
        .sum())
}

/// Side below which every cube `Q` centered at atom `j` has `αQ` containing
/// no other atom, so that `μ(αQ) = μ(Q)` and `Q` is doubling for every
/// `β ≥ 1`. Infinite for a single atom.
pub fn small_doubling_side(mu: &AtomicMeasure, j: usize, alpha: f64) -> f64 {
    let x = mu.position(j);
    let nearest = mu
        .positions()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, y)| sup_distance(x, y))
        .fold(f64::INFINITY, f64::min);
    2.0 * nearest / alpha
}
