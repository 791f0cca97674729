//! Calderón–Zygmund kernels, truncated transforms `T_ε` over atomic
//! measures, and the empirical weak (1,1) and L² functionals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, euclidean_distance};
use crate::measure::{AtomicMeasure, DensityVector};
use crate::scalar::Scalar;

/// Relative slack when comparing sampled ratios against a declared constant,
/// so that a bound attained in exact arithmetic is not failed by rounding.
pub const KERNEL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `1/(z − w)` with points of the plane read as complex numbers.
    Cauchy,
    /// `(x_j − y_j)/|x − y|^{n+1}`; in one dimension with `n = 1` this is
    /// the Hilbert kernel `1/(x − y)`.
    Riesz { component: usize },
    /// `1/|x − y|^{2n}`: decays too fast to be a kernel of order `n`.
    NegativeControl,
}

/// A kernel together with its declared order `n`, Hölder exponent `δ` and
/// constant `C_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub dim: usize,
    pub n: f64,
    pub delta: f64,
    #[serde(rename = "C_k")]
    pub c_k: f64,
}

impl Kernel {
    pub fn cauchy() -> Self {
        Kernel {
            kind: KernelKind::Cauchy,
            dim: 2,
            n: 1.0,
            delta: 1.0,
            c_k: 2.0,
        }
    }

    pub fn riesz(dim: usize, n: f64, component: usize) -> Result<Self> {
        if dim == 0 || component >= dim {
            return Err(Error::KernelDimension { kernel: "riesz", dim });
        }
        Ok(Kernel {
            kind: KernelKind::Riesz { component },
            dim,
            n,
            delta: 1.0,
            c_k: 2.0,
        })
    }

    pub fn negative_control(dim: usize, n: f64) -> Self {
        Kernel {
            kind: KernelKind::NegativeControl,
            dim,
            n,
            delta: 1.0,
            c_k: 2.0,
        }
    }

    pub fn with_constant(self, c_k: f64) -> Self {
        Kernel { c_k, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Kernel { delta, ..self }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Cauchy => "cauchy",
            KernelKind::Riesz { .. } => "riesz",
            KernelKind::NegativeControl => "negative_control",
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let ok = self.dim == dim
            && match self.kind {
                KernelKind::Cauchy => dim == 2,
                KernelKind::Riesz { component } => component < dim,
                KernelKind::NegativeControl => dim >= 1,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::KernelDimension {
                kernel: self.name(),
                dim,
            })
        }
    }

    /// Evaluates without validation; `x ≠ y` and dimensions are the caller's
    /// responsibility.
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> Scalar {
        match self.kind {
            KernelKind::Cauchy => Scalar::new(x[0] - y[0], x[1] - y[1]).inv(),
            KernelKind::Riesz { component } => {
                let r = euclidean_distance(x, y);
                Scalar::new((x[component] - y[component]) / r.powf(self.n + 1.0), 0.0)
            }
            KernelKind::NegativeControl => {
                let r = euclidean_distance(x, y);
                Scalar::new(r.powf(-2.0 * self.n), 0.0)
            }
        }
    }
}

/// `k(x, y)` for `x ≠ y`.
pub fn kernel_eval(k: &Kernel, x: &[f64], y: &[f64]) -> Result<Scalar> {
    check_dim(k.dim, x.len())?;
    check_dim(k.dim, y.len())?;
    k.check(x.len())?;
    if x == y {
        return Err(Error::Diagonal);
    }
    Ok(k.eval_unchecked(x, y))
}

/// Worst sampled ratios against the declared kernel bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub kernel: Kernel,
    pub samples: usize,
    pub seed: u64,
    /// `max |k(x,y)|·|x−y|ⁿ`.
    pub size_ratio: f64,
    /// `max |k(x,y) − k(x′,y)|·|x−y|^{n+δ}/|x−x′|^δ`.
    pub smooth_first: f64,
    /// `max |k(y,x) − k(y,x′)|·|x−y|^{n+δ}/|x−x′|^δ`.
    pub smooth_second: f64,
    /// The two smoothness terms added before taking the maximum.
    pub smooth_sum: f64,
    pub size_passed: bool,
    pub smoothness_passed: bool,
    pub passed: bool,
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Samples triples `(x, x′, y)` with `|x − x′| ≤ |x − y|/2` at scales
/// `|x − y| ∈ [10⁻³, 10³]` and compares the size and each one-variable
/// smoothness term with `C_k`.
pub fn verify_kernel_conditions(k: &Kernel, samples: usize, seed: u64) -> Result<KernelReport> {
    k.check(k.dim)?;
    let dim = k.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut size, mut first, mut second, mut sum) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples.max(1) {
        let r = 10f64.powf(rng.gen_range(-3.0..3.0));
        let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0) * r * 4.0).collect();
        let u = unit_vector(&mut rng, dim);
        let x: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a + r * b).collect();
        let t: f64 = rng.gen_range(0.0..1.0);
        let h = (0.5 * r * t).max(r * 1e-9);
        let v = unit_vector(&mut rng, dim);
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let dxy = euclidean_distance(&x, &y);
        let dxx = euclidean_distance(&x, &xp);
        if dxx == 0.0 || dxx > dxy / 2.0 || xp == y {
            continue;
        }
        size = size.max(k.eval_unchecked(&x, &y).norm() * dxy.powf(k.n));
        let scale = dxy.powf(k.n + k.delta) / dxx.powf(k.delta);
        let a = (k.eval_unchecked(&x, &y) - k.eval_unchecked(&xp, &y)).norm() * scale;
        let b = (k.eval_unchecked(&y, &x) - k.eval_unchecked(&y, &xp)).norm() * scale;
        first = first.max(a);
        second = second.max(b);
        sum = sum.max(a + b);
    }
    let bound = k.c_k * (1.0 + KERNEL_SLACK);
    let size_passed = size <= bound;
    let smoothness_passed = first <= bound && second <= bound;
    Ok(KernelReport {
        kernel: *k,
        samples,
        seed,
        size_ratio: size,
        smooth_first: first,
        smooth_second: second,
        smooth_sum: sum,
        size_passed,
        smoothness_passed,
        passed: size_passed && smoothness_passed,
    })
}

fn check_transform(mu: &AtomicMeasure, k: &Kernel, f: &DensityVector, eps: f64) -> Result<()> {
    k.check(mu.dim())?;
    f.check_against(mu)?;
    let r_min = mu.growth().r_min;
    if !(eps >= r_min) {
        return Err(Error::EpsilonBelowResolution { eps, r_min });
    }
    Ok(())
}

fn transform_with(
    mu: &AtomicMeasure,
    f: &DensityVector,
    eps: f64,
    eval_atoms: Option<&[usize]>,
    kernel: impl Fn(&[f64], &[f64]) -> Scalar + Sync,
) -> Result<Vec<Scalar>> {
    let targets: Vec<usize> = match eval_atoms {
        Some(list) => {
            if let Some(&bad) = list.iter().find(|&&i| i >= mu.len()) {
                return Err(Error::LengthMismatch {
                    expected: mu.len(),
                    got: bad + 1,
                });
            }
            list.to_vec()
        }
        None => (0..mu.len()).collect(),
    };
    Ok(targets
        .par_iter()
        .map(|&i| {
            let x = mu.position(i);
            let mut acc = Scalar::new(0.0, 0.0);
            for (j, y) in mu.positions().enumerate() {
                if euclidean_distance(x, y) > eps {
                    acc += kernel(x, y) * f.values[j] * mu.weight(j);
                }
            }
            acc
        })
        .collect())
}

/// `T_ε f(x_i) = Σ_{|x_i − x_j| > ε} k(x_i, x_j) f_j w_j` at the requested
/// atoms (all atoms when `eval_atoms` is `None`). Sums run in atom order.
pub fn truncated_transform(
    mu: &AtomicMeasure,
    k: &Kernel,
    f: &DensityVector,
    eps: f64,
    eval_atoms: Option<&[usize]>,
) -> Result<Vec<Scalar>> {
    check_transform(mu, k, f, eps)?;
    transform_with(mu, f, eps, eval_atoms, |x, y| k.eval_unchecked(x, y))
}

/// The adjoint `T_ε* g(x_i) = Σ_{|x_i − x_j| > ε} conj(k(x_j, x_i)) g_j w_j`
/// with respect to `⟨u, v⟩ = Σ u_j conj(v_j) w_j`.
pub fn adjoint_transform(
    mu: &AtomicMeasure,
    k: &Kernel,
    g: &DensityVector,
    eps: f64,
    eval_atoms: Option<&[usize]>,
) -> Result<Vec<Scalar>> {
    check_transform(mu, k, g, eps)?;
    transform_with(mu, g, eps, eval_atoms, |x, y| k.eval_unchecked(y, x).conj())
}

/// `⟨u, v⟩ = Σ u_j conj(v_j) w_j`.
pub fn inner_product(mu: &AtomicMeasure, u: &[Scalar], v: &[Scalar]) -> Result<Scalar> {
    for len in [u.len(), v.len()] {
        if len != mu.len() {
            return Err(Error::LengthMismatch {
                expected: mu.len(),
                got: len,
            });
        }
    }
    Ok(u.iter()
        .zip(v)
        .zip(mu.weights())
        .map(|((a, b), w)| a * b.conj() * w)
        .sum())
}

/// Mass of `{|v| > λ}` for every `λ` in `lambdas`.
pub fn exceedance_masses(mu: &AtomicMeasure, values: &[Scalar], lambdas: &[f64]) -> Result<Vec<f64>> {
    if values.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            got: values.len(),
        });
    }
    let mut rows: Vec<(f64, f64)> = values.iter().zip(mu.weights()).map(|(v, &w)| (v.norm(), w)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    // tail[k] = mass of rows[k..]
    let mut tail = vec![0.0; rows.len() + 1];
    for k in (0..rows.len()).rev() {
        tail[k] = tail[k + 1] + rows[k].1;
    }
    Ok(lambdas
        .iter()
        .map(|&l| tail[rows.partition_point(|r| r.0 <= l)])
        .collect())
}

/// `max_λ λ·μ{|v| > λ}/norm1` over the given grid.
pub fn weak_quasinorm(mu: &AtomicMeasure, values: &[Scalar], norm1: f64, lambdas: &[f64]) -> Result<f64> {
    if !(norm1 > 0.0) {
        return Err(Error::NonPositiveNorm(norm1));
    }
    let masses = exceedance_masses(mu, values, lambdas)?;
    Ok(lambdas
        .iter()
        .zip(masses)
        .map(|(l, m)| l * m / norm1)
        .fold(0.0, f64::max))
}

/// The exact supremum over all `λ > 0`: `λ·μ{|v| > λ}` increases on each
/// step and jumps down at every `|v_j|`, so the sup is
/// `max_j |v_j|·μ{|v| ≥ |v_j|}/norm1`.
pub fn exact_weak_quasinorm(mu: &AtomicMeasure, values: &[Scalar], norm1: f64) -> Result<f64> {
    if !(norm1 > 0.0) {
        return Err(Error::NonPositiveNorm(norm1));
    }
    if values.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            got: values.len(),
        });
    }
    let mut rows: Vec<(f64, f64)> = values.iter().zip(mu.weights()).map(|(v, &w)| (v.norm(), w)).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < rows.len() {
        let level = rows[k].0;
        while k < rows.len() && rows[k].0 == level {
            mass += rows[k].1;
            k += 1;
        }
        best = best.max(level * mass);
    }
    Ok(best / norm1)
}

/// Every distinct nonzero `|v_j|`, the point `|v_j|(1 − 10⁻⁹)` just below
/// it, and the midpoints between consecutive levels; sorted ascending.
pub fn auto_lambda_grid(values: &[Scalar]) -> Vec<f64> {
    let mut levels: Vec<f64> = values.iter().map(|v| v.norm()).filter(|&a| a > 0.0 && a.is_finite()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut grid = Vec::with_capacity(levels.len() * 3);
    for (i, &a) in levels.iter().enumerate() {
        grid.push(a * (1.0 - 1e-9));
        grid.push(a);
        if i + 1 < levels.len() {
            grid.push(0.5 * (a + levels[i + 1]));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Scaled kernel matrix `A_ij = √w_i k(x_i, x_j) √w_j` for `|x_i − x_j| > ε`,
/// whose spectral norm equals the norm of `T_ε` on `L²(μ)`.
fn scaled_matrix(mu: &AtomicMeasure, k: &Kernel, eps: f64) -> Vec<Vec<Scalar>> {
    (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let x = mu.position(i);
            let wi = mu.weight(i).sqrt();
            mu.positions()
                .enumerate()
                .map(|(j, y)| {
                    if euclidean_distance(x, y) > eps {
                        k.eval_unchecked(x, y) * (wi * mu.weight(j).sqrt())
                    } else {
                        Scalar::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn mat_vec(a: &[Vec<Scalar>], v: &[Scalar]) -> Vec<Scalar> {
    a.par_iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn mat_h_vec(a: &[Vec<Scalar>], v: &[Scalar]) -> Vec<Scalar> {
    let n = v.len();
    (0..n)
        .into_par_iter()
        .map(|j| a.iter().zip(v).map(|(row, y)| row[j].conj() * y).sum())
        .collect()
}

fn norm2(v: &[Scalar]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const POWER_ITERATIONS: usize = 500;
const POWER_TOL: f64 = 1e-10;

/// Operator norm of `T_ε` on `L²(μ)` by power iteration on `T_ε* T_ε`,
/// taking the best of `trials` random starts.
pub fn empirical_l2_norm(mu: &AtomicMeasure, k: &Kernel, eps: f64, trials: usize, seed: u64) -> Result<f64> {
    check_transform(mu, k, &DensityVector::zeros(mu.len()), eps)?;
    let a = scaled_matrix(mu, k, eps);
    let n = mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..trials.max(1) {
        let mut v: Vec<Scalar> = (0..n)
            .map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let nv = norm2(&v);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|z| *z /= nv);
            let av = mat_vec(&a, &v);
            let next_estimate = norm2(&av);
            let w = mat_h_vec(&a, &av);
            let converged = (next_estimate - estimate).abs() <= POWER_TOL * next_estimate;
            estimate = next_estimate;
            v = w;
            if converged || estimate == 0.0 {
                break;
            }
        }
        best = best.max(estimate);
    }
    Ok(best)
}

/// How the λ grid of a sweep is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// [`auto_lambda_grid`] of the transform values at each ε.
    Auto,
    Fixed(Vec<f64>),
}

/// One CSV row: `quasinorm` is `λ·exceedance_mass/‖f‖₁` at this point, so the
/// per-ε quasinorm is the column maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakPoint {
    pub eps: f64,
    pub lambda: f64,
    pub exceedance_mass: f64,
    pub quasinorm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakSweep {
    pub kernel: Kernel,
    pub norm1: f64,
    pub epsilons: Vec<f64>,
    /// Exact `sup_λ λ·μ{|T_ε f| > λ}/‖f‖₁` for each ε.
    pub quasinorms: Vec<f64>,
    pub points: Vec<WeakPoint>,
}

impl WeakSweep {
    pub fn max_quasinorm(&self) -> f64 {
        self.quasinorms.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_quasinorm(&self) -> f64 {
        self.quasinorms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max/min` of the per-ε quasinorms; 1 when every value is zero.
    pub fn variation(&self) -> f64 {
        let (lo, hi) = (self.min_quasinorm(), self.max_quasinorm());
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }

    pub fn is_finite(&self) -> bool {
        self.quasinorms.iter().all(|q| q.is_finite())
            && self
                .points
                .iter()
                .all(|p| p.lambda.is_finite() && p.exceedance_mass.is_finite() && p.quasinorm.is_finite())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Transforms `f` at each ε and records exceedance masses over the λ grid.
pub fn weak_sweep(
    mu: &AtomicMeasure,
    k: &Kernel,
    f: &DensityVector,
    epsilons: &[f64],
    lambdas: &LambdaGrid,
) -> Result<WeakSweep> {
    let norm1 = mu.norm_l1(f)?;
    if !(norm1 > 0.0) {
        return Err(Error::NonPositiveNorm(norm1));
    }
    let per_eps: Vec<(f64, Vec<WeakPoint>)> = epsilons
        .par_iter()
        .map(|&eps| {
            let values = truncated_transform(mu, k, f, eps, None)?;
            let grid = match lambdas {
                LambdaGrid::Auto => auto_lambda_grid(&values),
                LambdaGrid::Fixed(g) => g.clone(),
            };
            let masses = exceedance_masses(mu, &values, &grid)?;
            let points = grid
                .iter()
                .zip(masses)
                .map(|(&lambda, m)| WeakPoint {
                    eps,
                    lambda,
                    exceedance_mass: m,
                    quasinorm: lambda * m / norm1,
                })
                .collect();
            Ok((exact_weak_quasinorm(mu, &values, norm1)?, points))
        })
        .collect::<Result<_>>()?;
    let (quasinorms, points): (Vec<f64>, Vec<Vec<WeakPoint>>) = per_eps.into_iter().unzip();
    Ok(WeakSweep {
        kernel: *k,
        norm1,
        epsilons: epsilons.to_vec(),
        quasinorms,
        points: points.into_iter().flatten().collect(),
    })
}
