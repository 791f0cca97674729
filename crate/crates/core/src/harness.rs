//! Measure and density generators, λ/ε grids, and the end-to-end weak (1,1)
//! experiment that decomposes, verifies and sweeps truncations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::czdecomp::{admissibility_floor, decompose, CzDecomposition, CzOptions};
use crate::doubling::DerivedConstants;
use crate::error::{Error, Result};
use crate::measure::{verify_growth, AtomicMeasure, DensityVector, GrowthProfile};
use crate::operators::{empirical_l2_norm, weak_sweep, Kernel, LambdaGrid, WeakSweep};
use crate::scalar::Scalar;
use crate::verify::verify_decomposition;

/// Factor applied to a measured worst growth ratio when `C0` is not declared.
pub const MEASURED_C0_MARGIN: f64 = 1.0 + 1e-9;

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path.as_ref(), text).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

/// Shape of a generated measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `count` atoms on a uniform grid in `[0, side]^dim` (`count` must be a
    /// perfect `dim`-th power), optionally jittered by up to `jitter`
    /// spacings per coordinate. Doubling; natural exponent `n = dim`.
    Grid {
        dim: usize,
        count: usize,
        #[serde(default = "one")]
        side: f64,
        #[serde(default)]
        jitter: f64,
    },
    /// Depth-`depth` iterate of a self-similar Cantor set: `pieces = 2` is
    /// the middle-thirds-type set on a line, `pieces = 4` the four-corner
    /// set in the plane. Each piece is scaled by `ratio`; atoms sit at the
    /// centers of the final pieces. Natural exponent `ln pieces / ln(1/ratio)`.
    Cantor {
        dim: usize,
        depth: u32,
        #[serde(default = "four")]
        pieces: usize,
        #[serde(default = "quarter")]
        ratio: f64,
    },
    /// `segment_atoms` equal atoms along `[0, length]` on the first axis plus
    /// `heavy_atoms` isolated atoms of weight `heavy_weight` placed at random
    /// off the segment. Strongly non-doubling; natural exponent 1.
    SegmentPlusAtoms {
        dim: usize,
        segment_atoms: usize,
        #[serde(default = "one")]
        length: f64,
        heavy_atoms: usize,
        heavy_weight: f64,
    },
    /// `count` uniformly random points in `[0, side]^dim` with weights spread
    /// log-uniformly over `weight_decades` decades. Natural exponent `dim`.
    Random {
        dim: usize,
        count: usize,
        #[serde(default = "one")]
        side: f64,
        #[serde(default)]
        weight_decades: f64,
    },
    /// A measure JSON file; its declared growth profile is verified.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn quarter() -> f64 {
    0.25
}

/// A generator plus its growth declaration. `n` defaults to the
/// construction's natural exponent, `r_min` to the minimal separation of the
/// atoms, and `C0`, when absent, is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    #[serde(default)]
    pub n: Option<f64>,
    #[serde(default, rename = "C0")]
    pub c0: Option<f64>,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default = "one")]
    pub total_mass: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        GeneratorSpec {
            kind,
            n: None,
            c0: None,
            r_min: None,
            total_mass: 1.0,
            seed: 0,
        }
    }

    pub fn with_growth_exponent(mut self, n: f64) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = Some(c0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of atoms the spec will produce, when known without I/O.
    pub fn atom_count(&self) -> Option<usize> {
        match &self.kind {
            GeneratorKind::Grid { count, .. } | GeneratorKind::Random { count, .. } => Some(*count),
            GeneratorKind::Cantor { depth, pieces, .. } => pieces.checked_pow(*depth),
            GeneratorKind::SegmentPlusAtoms {
                segment_atoms,
                heavy_atoms,
                ..
            } => Some(segment_atoms + heavy_atoms),
            GeneratorKind::File { .. } => None,
        }
    }

    /// The same spec with roughly `count` atoms, for kinds where the atom
    /// count is a free parameter.
    pub fn resized(&self, count: usize) -> Option<Self> {
        let mut out = self.clone();
        match &mut out.kind {
            GeneratorKind::Random { count: c, .. } => *c = count,
            GeneratorKind::SegmentPlusAtoms {
                segment_atoms,
                heavy_atoms,
                ..
            } => {
                let heavy = (*heavy_atoms).min(count / 2);
                *heavy_atoms = heavy;
                *segment_atoms = count - heavy;
            }
            _ => return None,
        }
        Some(out)
    }
}

struct Raw {
    dim: usize,
    points: Vec<(Vec<f64>, f64)>,
    natural_n: f64,
    spacing: Option<f64>,
}

fn integer_root(count: usize, dim: usize) -> Option<usize> {
    let guess = (count as f64).powf(1.0 / dim as f64).round() as usize;
    (guess.checked_pow(dim as u32) == Some(count)).then_some(guess)
}

fn check_dim_range(dim: usize, max: usize) -> Result<()> {
    if dim == 0 || dim > max {
        Err(Error::InvalidGenerator(format!("dimension {dim} is not supported (1..={max})")))
    } else {
        Ok(())
    }
}

fn raw_points(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Raw> {
    let mass = spec.total_mass;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidGenerator(format!("total mass must be positive, got {mass}")));
    }
    match &spec.kind {
        &GeneratorKind::Grid {
            dim,
            count,
            side,
            jitter,
        } => {
            check_dim_range(dim, 3)?;
            if count == 0 {
                return Err(Error::InvalidGenerator("grid needs at least one atom".into()));
            }
            if !(side > 0.0) || !(0.0..0.5).contains(&jitter) {
                return Err(Error::InvalidGenerator("grid needs side > 0 and 0 ≤ jitter < 0.5".into()));
            }
            let per_axis = integer_root(count, dim)
                .ok_or_else(|| Error::InvalidGenerator(format!("{count} is not a perfect power of degree {dim}")))?;
            let h = side / per_axis as f64;
            let w = mass / count as f64;
            let points = (0..count)
                .map(|mut idx| {
                    let x = (0..dim)
                        .map(|_| {
                            let i = idx % per_axis;
                            idx /= per_axis;
                            let shake = if jitter > 0.0 { rng.gen_range(-jitter..jitter) } else { 0.0 };
                            (i as f64 + shake) * h
                        })
                        .collect();
                    (x, w)
                })
                .collect();
            Ok(Raw {
                dim,
                points,
                natural_n: dim as f64,
                spacing: (jitter == 0.0 && count > 1).then_some(h),
            })
        }
        &GeneratorKind::Cantor {
            dim,
            depth,
            pieces,
            ratio,
        } => {
            check_dim_range(dim, 3)?;
            let corners: Vec<Vec<f64>> = match pieces {
                2 => vec![vec![0.0; dim], {
                    let mut v = vec![0.0; dim];
                    v[0] = 1.0 - ratio;
                    v
                }],
                4 if dim >= 2 => [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
                    .iter()
                    .map(|&(a, b)| {
                        let mut v = vec![0.0; dim];
                        v[0] = a * (1.0 - ratio);
                        v[1] = b * (1.0 - ratio);
                        v
                    })
                    .collect(),
                _ => {
                    return Err(Error::InvalidGenerator(format!(
                        "cantor supports 2 pieces, or 4 pieces in dimension ≥ 2 (got {pieces} in {dim})"
                    )))
                }
            };
            if !(ratio > 0.0 && ratio < 0.5) {
                return Err(Error::InvalidGenerator(format!("cantor ratio must lie in (0, 1/2), got {ratio}")));
            }
            let count = pieces
                .checked_pow(depth)
                .filter(|&c| c <= 1 << 22)
                .ok_or_else(|| Error::InvalidGenerator("cantor depth too large".into()))?;
            let w = mass / count as f64;
            let final_side = ratio.powi(depth as i32);
            let points = (0..count)
                .map(|mut idx| {
                    let mut x = vec![0.0; dim];
                    let mut scale = 1.0;
                    for _ in 0..depth {
                        let c = &corners[idx % pieces];
                        idx /= pieces;
                        for (xi, ci) in x.iter_mut().zip(c) {
                            *xi += scale * ci;
                        }
                        scale *= ratio;
                    }
                    for (i, xi) in x.iter_mut().enumerate() {
                        if i < if pieces == 4 { 2 } else { 1 } {
                            *xi += 0.5 * final_side;
                        }
                    }
                    (x, w)
                })
                .collect();
            Ok(Raw {
                dim,
                points,
                natural_n: (pieces as f64).ln() / (1.0 / ratio).ln(),
                spacing: None,
            })
        }
        &GeneratorKind::SegmentPlusAtoms {
            dim,
            segment_atoms,
            length,
            heavy_atoms,
            heavy_weight,
        } => {
            check_dim_range(dim, 3)?;
            if segment_atoms + heavy_atoms == 0 {
                return Err(Error::InvalidGenerator("segment_plus_atoms needs at least one atom".into()));
            }
            if !(length > 0.0) || !(heavy_weight > 0.0) {
                return Err(Error::InvalidGenerator("length and heavy_weight must be positive".into()));
            }
            let h = if segment_atoms > 0 { length / segment_atoms as f64 } else { length };
            let mut points: Vec<(Vec<f64>, f64)> = (0..segment_atoms)
                .map(|i| {
                    let mut x = vec![0.0; dim];
                    x[0] = (i as f64 + 0.5) * h;
                    (x, mass * h / length)
                })
                .collect();
            for _ in 0..heavy_atoms {
                let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..length)).collect();
                if dim == 1 {
                    // Off the segment on the line: beyond its right end.
                    x[0] += length;
                } else {
                    x[1] = rng.gen_range(0.05..0.5) * length * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                }
                points.push((x, heavy_weight));
            }
            Ok(Raw {
                dim,
                points,
                natural_n: 1.0,
                spacing: None,
            })
        }
        &GeneratorKind::Random {
            dim,
            count,
            side,
            weight_decades,
        } => {
            check_dim_range(dim, 3)?;
            if count == 0 {
                return Err(Error::InvalidGenerator("random measure needs at least one atom".into()));
            }
            if !(side > 0.0) || !(weight_decades >= 0.0) {
                return Err(Error::InvalidGenerator("side must be positive and weight_decades ≥ 0".into()));
            }
            let raw: Vec<(Vec<f64>, f64)> = (0..count)
                .map(|_| {
                    let x = (0..dim).map(|_| rng.gen_range(0.0..side)).collect();
                    let w = if weight_decades > 0.0 {
                        10f64.powf(rng.gen_range(0.0..weight_decades))
                    } else {
                        1.0
                    };
                    (x, w)
                })
                .collect();
            let sum: f64 = raw.iter().map(|p| p.1).sum();
            Ok(Raw {
                dim,
                points: raw.into_iter().map(|(x, w)| (x, w * mass / sum)).collect(),
                natural_n: dim as f64,
                spacing: None,
            })
        }
        GeneratorKind::File { .. } => unreachable!("handled by gen_measure"),
    }
}

/// Builds the measure described by `spec`; deterministic given its seed. The
/// result always passes [`verify_growth`] for its recorded profile.
pub fn gen_measure(spec: &GeneratorSpec) -> Result<AtomicMeasure> {
    if let GeneratorKind::File { path } = &spec.kind {
        let mu: AtomicMeasure = read_json(path)?;
        let report = verify_growth(&mu);
        if !report.passed {
            return Err(Error::GrowthViolated {
                worst_ratio: report.worst_ratio,
                c0: report.c0,
            });
        }
        return Ok(mu);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw = raw_points(spec, &mut rng)?;
    let n = spec.n.unwrap_or(raw.natural_n);
    // Any positive placeholder works for the constructor; the real values
    // are filled in once the atoms are known.
    let provisional = GrowthProfile::new(n, 1.0, 1.0)?;
    let mu = AtomicMeasure::from_points(raw.dim, &raw.points, provisional)
        .map_err(|e| Error::InvalidGenerator(e.to_string()))?;
    let r_min = match spec.r_min {
        Some(r) => r,
        None => raw.spacing.or_else(|| mu.min_separation()).unwrap_or(spec.total_mass.max(1.0)),
    };
    let declared = spec.c0;
    let mu = mu.with_growth(GrowthProfile::new(n, declared.unwrap_or(1.0), r_min)?)?;
    let report = verify_growth(&mu);
    match declared {
        Some(c0) if !report.passed => Err(Error::GrowthViolated {
            worst_ratio: report.worst_ratio,
            c0,
        }),
        Some(_) => Ok(mu),
        None => {
            let measured = mu.with_growth(GrowthProfile::new(n, report.worst_ratio * MEASURED_C0_MARGIN, r_min)?)?;
            debug_assert!(verify_growth(&measured).passed);
            Ok(measured)
        }
    }
}

/// Shape of a generated density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    /// `height` at `count` random atoms (distinct), `background` elsewhere;
    /// spike signs alternate when `signed`.
    Spikes {
        count: usize,
        height: f64,
        #[serde(default)]
        background: f64,
        #[serde(default)]
        signed: bool,
    },
    /// Independent uniform values in `[-amplitude, amplitude]`, complex when
    /// `complex` is set.
    Random {
        amplitude: f64,
        #[serde(default)]
        complex: bool,
    },
    /// A density JSON file.
    File {
        path: PathBuf,
    },
}

pub fn gen_density(mu: &AtomicMeasure, spec: &DensitySpec, seed: u64) -> Result<DensityVector> {
    let n = mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let f = match spec {
        &DensitySpec::Constant { value } => DensityVector::from_real(&vec![value; n]),
        &DensitySpec::Spikes {
            count,
            height,
            background,
            signed,
        } => {
            if count > n {
                return Err(Error::InvalidGenerator(format!("{count} spikes requested on {n} atoms")));
            }
            let mut values = vec![background; n];
            let mut order: Vec<usize> = (0..n).collect();
            for i in 0..count {
                let j = rng.gen_range(i..n);
                order.swap(i, j);
                values[order[i]] = if signed && i % 2 == 1 { -height } else { height };
            }
            DensityVector::from_real(&values)
        }
        &DensitySpec::Random { amplitude, complex } => DensityVector::new(
            (0..n)
                .map(|_| {
                    let re = rng.gen_range(-1.0..=1.0) * amplitude;
                    let im = if complex { rng.gen_range(-1.0..=1.0) * amplitude } else { 0.0 };
                    Scalar::new(re, im)
                })
                .collect(),
        ),
        DensitySpec::File { path } => read_json(path)?,
    };
    f.check_against(mu)?;
    if f.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidGenerator("density has non-finite values".into()));
    }
    Ok(f)
}

/// `count` points spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidGrid(format!("need 0 < lo ≤ hi and count ≥ 1 (got {lo}, {hi}, {count})")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| lo * (step * i as f64).exp()).collect();
    grid[count - 1] = hi;
    Ok(grid)
}

/// Parses `a:b:steps` into a geometric grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidGrid(format!("expected a:b:steps, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    geometric_grid(lo, hi, steps)
}

/// Geometric λ grid from `1.01 ×` the admissibility floor to `2 × max|f|`
/// (or twice the lower end when `max|f|` is below it).
pub fn lambda_grid(mu: &AtomicMeasure, f: &DensityVector, count: usize) -> Result<Vec<f64>> {
    let lo = admissibility_floor(mu, f)? * 1.01;
    if !(lo > 0.0) {
        return Err(Error::NonPositiveNorm(mu.norm_l1(f)?));
    }
    let hi = (2.0 * f.max_abs()).max(2.0 * lo);
    geometric_grid(lo, hi, count)
}

/// Where the truncation radii come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Range(String),
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Points(p) => Ok(p.clone()),
            GridSpec::Range(s) => parse_grid(s),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub measure: GeneratorSpec,
    pub density: DensitySpec,
    /// Defaults to the Cauchy kernel in the plane, the Hilbert kernel on the
    /// line and the first Riesz component otherwise.
    #[serde(default)]
    pub kernel: Option<Kernel>,
    /// Truncation radii; defaults to 10 points over two decades above `r_min`.
    #[serde(default)]
    pub eps_grid: Option<GridSpec>,
    /// Decomposition levels; defaults to [`lambda_grid`] with `lambda_count`.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "default_lambda_count")]
    pub lambda_count: usize,
    #[serde(default = "default_weak_grid")]
    pub weak_lambdas: LambdaGrid,
    /// Random restarts of the L² power iteration; 0 skips the estimate.
    #[serde(default = "default_trials")]
    pub l2_trials: usize,
    #[serde(default)]
    pub options: CzOptions,
    /// Keep every decomposition in the report.
    #[serde(default)]
    pub keep_decompositions: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda_count() -> usize {
    10
}
fn default_weak_grid() -> LambdaGrid {
    LambdaGrid::Auto
}
fn default_trials() -> usize {
    2
}

impl ExperimentConfig {
    pub fn new(measure: GeneratorSpec, density: DensitySpec) -> Self {
        ExperimentConfig {
            measure,
            density,
            kernel: None,
            eps_grid: None,
            lambdas: None,
            lambda_count: default_lambda_count(),
            weak_lambdas: default_weak_grid(),
            l2_trials: default_trials(),
            options: CzOptions::default(),
            keep_decompositions: false,
            seed: 0,
        }
    }

    pub fn kernel_for(&self, dim: usize) -> Result<Kernel> {
        match self.kernel {
            Some(k) => Ok(k),
            None if dim == 2 => Ok(Kernel::cauchy()),
            None => Kernel::riesz(dim, 1.0f64.min(dim as f64), 0),
        }
    }
}

/// Decomposition outcome at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub lambda: f64,
    pub admissible: bool,
    pub parts: usize,
    pub passed: bool,
    pub failed: Vec<String>,
    pub max_phi_over_lambda: f64,
    pub max_alpha_over_lambda: f64,
    pub max_overlap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<CzDecomposition>,
}

/// Weak-type and L² measurements at one truncation radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsResult {
    pub eps: f64,
    pub quasinorm: f64,
    pub l2_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub generate_ms: f64,
    pub decompose_ms: f64,
    pub weak_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub dim: usize,
    pub atoms: usize,
    pub growth: GrowthProfile,
    pub total_mass: f64,
    pub norm1: f64,
    pub max_abs: f64,
    pub admissibility_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub instance: InstanceSummary,
    pub constants: DerivedConstants,
    pub kernel: Kernel,
    pub lambdas: Vec<LambdaResult>,
    pub weak: Vec<EpsResult>,
    pub max_quasinorm: f64,
    /// `max/min` of the quasinorm over the ε grid.
    pub quasinorm_variation: f64,
    pub max_l2_norm: Option<f64>,
    pub max_phi_over_lambda: f64,
    pub all_passed: bool,
    #[serde(skip)]
    pub sweep: Option<WeakSweep>,
    pub timing: Timing,
}

impl ExperimentReport {
    /// The report with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        ExperimentReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        match &self.sweep {
            Some(s) => s.write_csv(out),
            None => Ok(()),
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn decompose_and_check(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    floor: f64,
    opts: &CzOptions,
    keep: bool,
) -> Result<LambdaResult> {
    if !(lambda > floor) {
        return Ok(LambdaResult {
            lambda,
            admissible: false,
            parts: 0,
            passed: true,
            failed: Vec::new(),
            max_phi_over_lambda: 0.0,
            max_alpha_over_lambda: 0.0,
            max_overlap: 0,
            decomposition: None,
        });
    }
    let dec = decompose(mu, f, lambda, opts)?;
    let report = verify_decomposition(mu, f, lambda, &dec)?;
    Ok(LambdaResult {
        lambda,
        admissible: true,
        parts: dec.parts.len(),
        passed: report.all_passed(),
        failed: report.failed().map(|c| c.name.clone()).collect(),
        max_phi_over_lambda: report.max_phi_over_lambda,
        max_alpha_over_lambda: report.max_alpha_over_lambda,
        max_overlap: report.max_overlap,
        decomposition: keep.then_some(dec),
    })
}

/// Decomposes and verifies at every admissible λ, then sweeps `T_ε` over the
/// ε grid. A failed invariant aborts with [`Error::InvariantFailed`] carrying
/// the smallest reproducing atom count found by halving.
pub fn run_weak11_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mu = gen_measure(&config.measure)?;
    let f = gen_density(&mu, &config.density, config.seed)?;
    let generate_ms = ms(start);

    let floor = admissibility_floor(&mu, &f)?;
    let norm1 = mu.norm_l1(&f)?;
    let kernel = config.kernel_for(mu.dim())?;
    let k_overlap = config
        .options
        .k_overlap
        .map(|k| k as f64)
        .unwrap_or_else(|| DerivedConstants::default_overlap(mu.dim()));
    let constants = DerivedConstants::new(mu.dim(), mu.growth(), k_overlap);

    let t = Instant::now();
    let lambdas = match &config.lambdas {
        Some(l) => l.clone(),
        None if norm1 > 0.0 => lambda_grid(&mu, &f, config.lambda_count)?,
        None => Vec::new(),
    };
    let results: Vec<LambdaResult> = lambdas
        .par_iter()
        .map(|&l| decompose_and_check(&mu, &f, l, floor, &config.options, config.keep_decompositions))
        .collect::<Result<_>>()?;
    let decompose_ms = ms(t);
    if let Some(bad) = results.iter().find(|r| !r.passed) {
        let atoms = minimize_failure(config, bad.lambda).unwrap_or(mu.len());
        return Err(Error::InvariantFailed {
            condition: bad.failed.join(","),
            lambda: bad.lambda,
            seed: config.measure.seed,
            atoms,
        });
    }

    let t = Instant::now();
    let epsilons = match &config.eps_grid {
        Some(g) => g.resolve()?,
        None => geometric_grid(mu.growth().r_min, mu.growth().r_min * 100.0, 10)?,
    };
    let (weak, sweep): (Vec<EpsResult>, Option<WeakSweep>) = if norm1 > 0.0 {
        let sweep = weak_sweep(&mu, &kernel, &f, &epsilons, &config.weak_lambdas)?;
        let l2: Vec<Option<f64>> = epsilons
            .iter()
            .map(|&eps| {
                (config.l2_trials > 0)
                    .then(|| empirical_l2_norm(&mu, &kernel, eps, config.l2_trials, config.seed))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let weak: Vec<EpsResult> = epsilons
            .iter()
            .zip(&sweep.quasinorms)
            .zip(l2)
            .map(|((&eps, &q), l2)| EpsResult { eps, quasinorm: q, l2_norm: l2 })
            .collect();
        (weak, Some(sweep))
    } else {
        let weak = epsilons
            .iter()
            .map(|&eps| EpsResult {
                eps,
                quasinorm: 0.0,
                l2_norm: None,
            })
            .collect();
        (weak, None)
    };
    let weak_ms = ms(t);

    let quasinorms: Vec<f64> = weak.iter().map(|w: &EpsResult| w.quasinorm).collect();
    let max_q = quasinorms.iter().copied().fold(0.0, f64::max);
    let min_q = quasinorms.iter().copied().fold(f64::INFINITY, f64::min);
    let max_l2 = weak
        .iter()
        .filter_map(|w| w.l2_norm)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(ExperimentReport {
        instance: InstanceSummary {
            dim: mu.dim(),
            atoms: mu.len(),
            growth: *mu.growth(),
            total_mass: mu.total_mass(),
            norm1,
            max_abs: f.max_abs(),
            admissibility_floor: floor,
        },
        constants,
        kernel,
        max_phi_over_lambda: results.iter().map(|r| r.max_phi_over_lambda).fold(0.0, f64::max),
        all_passed: results.iter().all(|r| r.passed),
        lambdas: results,
        max_quasinorm: max_q,
        quasinorm_variation: if max_q == 0.0 { 1.0 } else { max_q / min_q },
        max_l2_norm: max_l2,
        weak,
        sweep,
        timing: Timing {
            generate_ms,
            decompose_ms,
            weak_ms,
            total_ms: ms(start),
        },
        config: config.clone(),
    })
}

/// Halves the atom count while the decomposition at `lambda` still fails;
/// returns the smallest failing count, or `None` when the generator cannot be
/// resized.
pub fn minimize_failure(config: &ExperimentConfig, lambda: f64) -> Option<usize> {
    let fails = |spec: &GeneratorSpec| -> bool {
        let Ok(mu) = gen_measure(spec) else { return false };
        let Ok(f) = gen_density(&mu, &config.density, config.seed) else { return false };
        let Ok(floor) = admissibility_floor(&mu, &f) else { return false };
        match decompose_and_check(&mu, &f, lambda, floor, &config.options, false) {
            Ok(r) => !r.passed,
            Err(_) => false,
        }
    };
    let mut best = config.measure.atom_count()?;
    let mut count = best;
    while count > 1 {
        count /= 2;
        match config.measure.resized(count) {
            Some(spec) if fails(&spec) => best = count,
            _ => break,
        }
    }
    Some(best)
}
