//! Independent checker for a decomposition: every condition is re-derived
//! from the measure, the density and the stored parts without reusing the
//! construction code.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::czdecomp::CzDecomposition;
use crate::doubling::{annulus_kernel_integral, is_doubling, DerivedConstants, DoublingParams, COMPANION_BASE};
use crate::error::Result;
use crate::geometry::{sup_distance, Cube};
use crate::measure::{AtomicMeasure, DensityVector};
use crate::scalar::Scalar;

/// Relative tolerance for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Outcome of one condition over all parts / atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub passed: bool,
    /// Worst measured value of the checked quantity.
    pub measured: f64,
    /// The bound it is compared against.
    pub bound: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub lambda: f64,
    pub threshold: f64,
    pub parts: usize,
    pub constants: DerivedConstants,
    pub conditions: Vec<ConditionResult>,
    pub max_phi_over_lambda: f64,
    pub max_alpha_over_lambda: f64,
    pub max_overlap: usize,
    pub max_annulus_integral: f64,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionResult> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

/// Accumulates a "measured ≤ bound" style check.
struct Check {
    name: &'static str,
    measured: f64,
    bound: f64,
    failures: usize,
}

impl Check {
    fn new(name: &'static str, bound: f64) -> Self {
        Check {
            name,
            measured: f64::NEG_INFINITY,
            bound,
            failures: 0,
        }
    }

    fn observe(&mut self, value: f64, ok: bool) {
        if value > self.measured || value.is_nan() {
            self.measured = value;
        }
        if !ok {
            self.failures += 1;
        }
    }

    fn finish(self) -> ConditionResult {
        ConditionResult {
            name: self.name.to_string(),
            passed: self.failures == 0,
            measured: if self.measured == f64::NEG_INFINITY { 0.0 } else { self.measured },
            bound: self.bound,
            failures: self.failures,
        }
    }
}

fn mass_of(mu: &AtomicMeasure, atoms: impl Iterator<Item = usize>) -> f64 {
    atoms.map(|j| mu.weight(j)).sum()
}

/// Sorted sup-distances from `center` with prefix sums of `|f|·w` and `w`,
/// for evaluating `∫_{Q(c,2s)}|f| / μ(Q(c,4s))` at many half-sides `s`.
struct RadialSums {
    dist: Vec<f64>,
    abs_f: Vec<f64>,
    mass: Vec<f64>,
}

impl RadialSums {
    fn new(mu: &AtomicMeasure, f: &DensityVector, center: &[f64]) -> Self {
        let mut rows: Vec<(f64, f64, f64)> = mu
            .positions()
            .enumerate()
            .map(|(j, x)| (sup_distance(x, center), f.values[j].norm() * mu.weight(j), mu.weight(j)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut abs_f = Vec::with_capacity(rows.len() + 1);
        let mut mass = Vec::with_capacity(rows.len() + 1);
        abs_f.push(0.0);
        mass.push(0.0);
        for r in &rows {
            abs_f.push(abs_f.last().unwrap() + r.1);
            mass.push(mass.last().unwrap() + r.2);
        }
        RadialSums {
            dist: rows.iter().map(|r| r.0).collect(),
            abs_f,
            mass,
        }
    }

    fn upto(&self, radius: f64) -> usize {
        self.dist.partition_point(|&d| d <= radius)
    }

    /// Ratio for the cube of half-side `s` against its double.
    fn ratio(&self, s: f64) -> f64 {
        self.abs_f[self.upto(s)] / self.mass[self.upto(2.0 * s)]
    }
}

/// Worst `∫_{ηQ}|f| / μ(2ηQ)` over `η > 2`. The ratio is a right-continuous
/// step function of the half-side `s = ηℓ/2`, jumping where an atom reaches
/// the boundary of `ηQ` (`s = d_j`) or of `2ηQ` (`s = d_j/2`), so it suffices
/// to evaluate at `s = ℓ` and at every jump beyond.
fn worst_outer_ratio(sums: &RadialSums, side: f64) -> f64 {
    let start = side;
    let mut worst = sums.ratio(start);
    for &d in &sums.dist {
        for s in [d, d / 2.0] {
            if s > start {
                worst = worst.max(sums.ratio(s));
            }
        }
    }
    worst
}

/// Checks every condition of the decomposition of `f` at level `λ`.
pub fn verify_decomposition(
    mu: &AtomicMeasure,
    f: &DensityVector,
    lambda: f64,
    dec: &CzDecomposition,
) -> Result<InvariantReport> {
    f.check_against(mu)?;
    let dim = mu.dim();
    let theta = lambda / 2f64.powi(dim as i32 + 1);
    let consts = DerivedConstants::new(dim, mu.growth(), dec.constants.k_overlap);
    let zero = Scalar::new(0.0, 0.0);
    let n_atoms = mu.len();

    let mut conditions = Vec::new();

    // Stored constants must match the ones implied by (d, n, C0, K_overlap).
    let mut stored = Check::new("constants", 0.0);
    for (a, b) in [
        (dec.constants.c1, consts.c1),
        (dec.constants.c2, consts.c2),
        (dec.constants.c3, consts.c3),
        (dec.constants.b, consts.b),
    ] {
        let rel = (a - b).abs() / b.abs().max(1.0);
        stored.observe(rel, rel <= IDENTITY_TOL);
    }
    conditions.push(stored.finish());

    let lambda_ok = dec.lambda == lambda;
    conditions.push(ConditionResult {
        name: "lambda".into(),
        passed: lambda_ok,
        measured: dec.lambda,
        bound: lambda,
        failures: usize::from(!lambda_ok),
    });

    // Shape of every stored vector.
    let shapes_ok = dec.g.len() == n_atoms
        && dec.parts.iter().all(|p| {
            p.b.len() == n_atoms
                && p.q.dim() == dim
                && p.r.dim() == dim
                && p.atom < n_atoms
                && p.support.iter().all(|&j| j < n_atoms)
        });
    conditions.push(ConditionResult {
        name: "shape".into(),
        passed: shapes_ok,
        measured: 0.0,
        bound: 0.0,
        failures: usize::from(!shapes_ok),
    });
    if !shapes_ok {
        return Ok(InvariantReport {
            lambda,
            threshold: theta,
            parts: dec.parts.len(),
            constants: consts,
            conditions,
            max_phi_over_lambda: f64::NAN,
            max_alpha_over_lambda: f64::NAN,
            max_overlap: 0,
            max_annulus_integral: f64::NAN,
        });
    }

    let cover: Vec<usize> = mu
        .positions()
        .map(|x| dec.parts.iter().filter(|p| p.q.contains_unchecked(x)).count())
        .collect();

    // Per-part quantities, computed in parallel.
    struct PartFacts {
        cc1_ratio: f64,
        cc2_ratio: f64,
        centered: bool,
        cc4_err: f64,
        cc6_ratio: f64,
        sign_err: f64,
        a_ratio: f64,
        alpha_over_lambda: f64,
        cancel_err: f64,
        support_ok: bool,
        companion_ok: bool,
        annulus: f64,
    }
    let companion = DoublingParams::companion(mu.growth().n);
    let facts: Vec<PartFacts> = dec
        .parts
        .par_iter()
        .map(|p| {
            let q_atoms: Vec<usize> = mu.atoms_in_cube(&p.q).collect();
            let r_atoms: Vec<usize> = mu.atoms_in_cube(&p.r).collect();
            let abs_q: f64 = q_atoms.iter().map(|&j| f.values[j].norm() * mu.weight(j)).sum();
            let double = p.q.dilate(2.0).expect("positive");
            let cc1_ratio = abs_q / mu.cube_mass(&double).expect("dims checked");

            let sums = RadialSums::new(mu, f, p.q.center());
            let cc2_ratio = worst_outer_ratio(&sums, p.q.side());

            let target: Scalar = q_atoms
                .iter()
                .map(|&j| f.values[j] * (mu.weight(j) / cover[j] as f64))
                .sum();
            let a_mass = mass_of(mu, p.support.iter().copied());
            let r_mass = mass_of(mu, r_atoms.iter().copied());
            let phi_integral = p.alpha * a_mass;
            let cc4_err = (phi_integral - target).norm() / (1.0 + target.norm());
            let cc6_ratio = p.alpha.norm() * r_mass / abs_q;
            // α must be a non-negative multiple of ∫ f w_i.
            let cross = p.alpha * target.conj();
            let sign_err = if cross.norm() == 0.0 {
                0.0
            } else {
                (-cross.re).max(cross.im.abs()) / cross.norm()
            };

            let b_integral: Scalar = p.b.iter().zip(mu.weights()).map(|(v, w)| v * w).sum();
            let cancel_err = b_integral.norm() / abs_q;
            let support_ok = p
                .support
                .iter()
                .all(|&j| p.r.contains_unchecked(mu.position(j)))
                && p.support.windows(2).all(|w| w[0] < w[1])
                && p.b
                    .iter()
                    .enumerate()
                    .all(|(j, v)| *v == zero || p.r.contains_unchecked(mu.position(j)));

            let expected_r = p.q.dilate(COMPANION_BASE.powi(p.k as i32)).expect("positive");
            let companion_ok = p.k >= 1
                && p.r == expected_r
                && p.r.side() > 4.0 * p.q.side()
                && is_doubling(mu, &p.r, &companion).unwrap_or(false)
                && (1..p.k).all(|j| {
                    let mid = p.q.dilate(COMPANION_BASE.powi(j as i32)).expect("positive");
                    !is_doubling(mu, &mid, &companion).unwrap_or(true)
                });
            let six_q = p.q.dilate(COMPANION_BASE).expect("positive");
            let annulus = if p.r.side() >= six_q.side() {
                annulus_kernel_integral(mu, &six_q, &p.r).unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            };

            PartFacts {
                cc1_ratio,
                cc2_ratio,
                centered: mu.position(p.atom) == p.q.center() && p.r.is_concentric(&p.q),
                cc4_err,
                cc6_ratio,
                sign_err,
                a_ratio: a_mass / r_mass,
                alpha_over_lambda: p.alpha.norm() / lambda,
                cancel_err,
                support_ok,
                companion_ok,
                annulus,
            }
        })
        .collect();

    // (cc1): strict inequality; measured is the smallest ratio/θ.
    let mut cc1 = Check::new("cc1", 1.0);
    cc1.measured = f64::INFINITY;
    for p in &facts {
        let v = p.cc1_ratio / theta;
        cc1.measured = cc1.measured.min(v);
        if !(v > 1.0) {
            cc1.failures += 1;
        }
    }
    if facts.is_empty() {
        cc1.measured = f64::INFINITY;
    }
    let mut cc1_result = cc1.finish();
    cc1_result.name = "cc1".into();
    conditions.push(cc1_result);

    let mut cc2 = Check::new("cc2", 1.0);
    for p in &facts {
        let v = p.cc2_ratio / theta;
        cc2.observe(v, v <= 1.0);
    }
    conditions.push(cc2.finish());

    // (cc3): |f| ≤ λ at every atom outside ∪Q_i.
    let mut cc3 = Check::new("cc3", lambda);
    for (j, v) in f.values.iter().enumerate() {
        if cover[j] == 0 {
            cc3.observe(v.norm(), v.norm() <= lambda);
        }
    }
    conditions.push(cc3.finish());

    let mut cc4 = Check::new("cc4", IDENTITY_TOL);
    for p in &facts {
        cc4.observe(p.cc4_err, p.cc4_err <= IDENTITY_TOL);
    }
    conditions.push(cc4.finish());

    // (cc5): Σ_i |φ_i| ≤ Bλ at every atom.
    let mut phi_sum = vec![0.0f64; n_atoms];
    for p in &dec.parts {
        for &j in &p.support {
            phi_sum[j] += p.alpha.norm();
        }
    }
    let max_phi = phi_sum.iter().copied().fold(0.0, f64::max) / lambda;
    let mut cc5 = Check::new("cc5", consts.b);
    cc5.observe(max_phi, max_phi <= consts.b);
    conditions.push(cc5.finish());

    let mut cc6 = Check::new("cc6", 2.0);
    for p in &facts {
        cc6.observe(p.cc6_ratio, p.cc6_ratio <= 2.0);
    }
    conditions.push(cc6.finish());

    let mut sign = Check::new("constant_sign", IDENTITY_TOL);
    for p in &facts {
        sign.observe(p.sign_err, p.sign_err <= IDENTITY_TOL);
    }
    conditions.push(sign.finish());

    // Reconstruction: f = g + Σ b_i, g = f χ_out + Σ φ_i, b_i = w_i f − φ_i.
    let mut recon = Check::new("reconstruction", IDENTITY_TOL);
    let bad = dec.bad_total();
    let mut good = vec![zero; n_atoms];
    for (j, v) in f.values.iter().enumerate() {
        if cover[j] == 0 {
            good[j] = *v;
        }
    }
    for p in &dec.parts {
        for &j in &p.support {
            good[j] += p.alpha;
        }
    }
    for j in 0..n_atoms {
        let scale = 1.0 + f.values[j].norm();
        let e1 = (f.values[j] - dec.g[j] - bad[j]).norm() / scale;
        let e2 = (dec.g[j] - good[j]).norm() / (1.0 + good[j].norm());
        let e = e1.max(e2);
        recon.observe(e, e <= IDENTITY_TOL);
    }
    for p in &dec.parts {
        let mut expected = vec![zero; n_atoms];
        for j in mu.atoms_in_cube(&p.q) {
            expected[j] = f.values[j] / cover[j] as f64;
        }
        for &j in &p.support {
            expected[j] -= p.alpha;
        }
        for j in 0..n_atoms {
            let e = (p.b[j] - expected[j]).norm() / (1.0 + f.values[j].norm() + p.alpha.norm());
            recon.observe(e, e <= IDENTITY_TOL);
        }
    }
    conditions.push(recon.finish());

    let mut cancel = Check::new("cancellation", IDENTITY_TOL);
    for p in &facts {
        cancel.observe(p.cancel_err, p.cancel_err <= IDENTITY_TOL);
    }
    conditions.push(cancel.finish());

    let mut support = Check::new("support", 0.0);
    for p in &facts {
        support.observe(0.0, p.support_ok);
    }
    conditions.push(support.finish());

    // μ(A_i) ≥ μ(R_i)/2; measured is the smallest μ(A)/μ(R).
    let mut a_mass = Check::new("support_mass", 0.5);
    a_mass.measured = facts.iter().map(|p| p.a_ratio).fold(f64::INFINITY, f64::min);
    a_mass.failures = facts.iter().filter(|p| !(p.a_ratio >= 0.5)).count();
    conditions.push(a_mass.finish());

    let mut alpha_bound = Check::new("alpha_bound", consts.c3);
    for p in &facts {
        alpha_bound.observe(p.alpha_over_lambda, p.alpha_over_lambda <= consts.c3);
    }
    conditions.push(alpha_bound.finish());

    // |g| ≤ (B + 1)λ.
    let mut g_bound = Check::new("g_bound", consts.b + 1.0);
    for v in &dec.g {
        let r = v.norm() / lambda;
        g_bound.observe(r, r <= consts.b + 1.0);
    }
    conditions.push(g_bound.finish());

    // 1 ≤ Σ_k χ_{Q_k} ≤ K_overlap on every Q_i.
    let mut overlap = Check::new("overlap", dec.constants.k_overlap);
    for p in &dec.parts {
        for j in mu.atoms_in_cube(&p.q) {
            let c = cover[j] as f64;
            overlap.observe(c, c >= 1.0 && c <= dec.constants.k_overlap);
        }
    }
    conditions.push(overlap.finish());

    let mut centered = Check::new("centered", 0.0);
    for p in &facts {
        centered.observe(0.0, p.centered);
    }
    conditions.push(centered.finish());

    let mut comp = Check::new("companion", 0.0);
    for p in &facts {
        comp.observe(0.0, p.companion_ok);
    }
    conditions.push(comp.finish());

    let mut basic = Check::new("annulus_integral", consts.c1);
    for p in &facts {
        basic.observe(p.annulus, p.annulus <= consts.c1);
    }
    conditions.push(basic.finish());

    Ok(InvariantReport {
        lambda,
        threshold: theta,
        parts: dec.parts.len(),
        constants: consts,
        conditions,
        max_phi_over_lambda: max_phi,
        max_alpha_over_lambda: facts.iter().map(|p| p.alpha_over_lambda).fold(0.0, f64::max),
        max_overlap: cover.iter().copied().max().unwrap_or(0),
        max_annulus_integral: facts.iter().map(|p| p.annulus).fold(0.0, f64::max),
    })
}

/// `true` iff `cube` is centered at an atom; a convenience for callers that
/// build decompositions by hand.
pub fn centered_at_atom(mu: &AtomicMeasure, cube: &Cube) -> bool {
    mu.atom_at(cube.center()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czdecomp::{decompose, CzOptions};
    use crate::measure::GrowthProfile;

    fn running() -> (AtomicMeasure, DensityVector) {
        let mu = AtomicMeasure::from_points(
            1,
            &[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![3.0], 4.0)],
            GrowthProfile::new(1.0, 8.0, 0.5).unwrap(),
        )
        .unwrap();
        (mu, DensityVector::from_real(&[10.0, 0.0, 0.0]))
    }

    #[test]
    fn running_example_passes_everything() {
        let (mu, f) = running();
        let dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
        let report = verify_decomposition(&mu, &f, 8.0, &dec).unwrap();
        assert!(report.all_passed(), "{:#?}", report.failed().collect::<Vec<_>>());
        let cc1 = report.condition("cc1").unwrap();
        // (10/3)/2
        assert!((cc1.measured - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.condition("cc6").unwrap().measured, 1.0);
    }

    #[test]
    fn doubled_alpha_is_caught() {
        let (mu, f) = running();
        let mut dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
        dec.parts[0].alpha *= 2.0;
        let report = verify_decomposition(&mu, &f, 8.0, &dec).unwrap();
        let failed: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"cc4"), "{failed:?}");
        assert!(failed.contains(&"reconstruction"), "{failed:?}");
    }

    #[test]
    fn shrunken_cube_breaks_cc2() {
        let (mu, f) = running();
        let mut dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
        // Side 0.5: its dilation by 2.5 has side 1.25 with ratio 10/3 > 2.
        dec.parts[0].q = Cube::new(vec![0.0], 0.5).unwrap();
        let report = verify_decomposition(&mu, &f, 8.0, &dec).unwrap();
        assert!(!report.condition("cc2").unwrap().passed);
    }

    #[test]
    fn missing_part_breaks_cc3() {
        let (mu, f) = running();
        let mut dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
        dec.parts.clear();
        dec.g = f.values.clone();
        let report = verify_decomposition(&mu, &f, 8.0, &dec).unwrap();
        assert!(!report.condition("cc3").unwrap().passed);
        assert!(report.condition("reconstruction").unwrap().passed);
    }

    #[test]
    fn wrong_shape_is_reported() {
        let (mu, f) = running();
        let mut dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
        dec.g.pop();
        let report = verify_decomposition(&mu, &f, 8.0, &dec).unwrap();
        assert!(!report.all_passed());
        assert!(!report.condition("shape").unwrap().passed);
    }
}
