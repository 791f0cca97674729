//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use czlab::covering::{AnnulusConfig, DERIVED_CONFINEMENT};
use czlab::harness::{geometric_grid, lambda_grid};
use czlab::operators::{empirical_l2_norm, weak_sweep, LambdaGrid};
use czlab::{
    decompose, gen_measure, verify_decomposition, verify_kernel_conditions, AtomicMeasure, CzOptions,
    DensityVector, GeneratorKind, GeneratorSpec, GrowthProfile, InvariantReport, Kernel, Scalar,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: u32, title: &str, outcome: &Outcome) {
    let tag = if outcome.passed { "PASS" } else { "FAIL" };
    println!("criterion {id} [{tag}] {title}: {}", outcome.detail);
}

/// One randomized instance of suite 1.
struct Instance {
    label: String,
    mu: AtomicMeasure,
    f: DensityVector,
}

fn random_instance(index: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc2_0000 + index);
    let dim = if index % 2 == 0 { 1 } else { 2 };
    let exponents: &[f64] = if dim == 1 { &[0.5, 1.0] } else { &[0.5, 1.0, 2.0] };
    let n = exponents[(index / 2) as usize % exponents.len()];
    let count = rng.gen_range(8..=500usize);
    let kind = match (index / 6) % 4 {
        0 => GeneratorKind::Random {
            dim,
            count,
            side: 10f64.powf(rng.gen_range(-1.0..2.0)),
            weight_decades: rng.gen_range(0.0..4.0),
        },
        1 => GeneratorKind::SegmentPlusAtoms {
            dim,
            segment_atoms: count - count / 10,
            length: rng.gen_range(1.0..20.0),
            heavy_atoms: count / 10,
            heavy_weight: 10f64.powf(rng.gen_range(-2.0..1.0)),
        },
        2 => {
            let (pieces, depth) = if dim == 2 && rng.gen_bool(0.5) { (4, rng.gen_range(2..=4)) } else { (2, rng.gen_range(3..=8)) };
            GeneratorKind::Cantor {
                dim,
                depth,
                pieces,
                ratio: if pieces == 4 { 0.25 } else { rng.gen_range(0.2..0.45) },
            }
        }
        _ => {
            let per_axis = if dim == 1 { count } else { (count as f64).sqrt() as usize };
            GeneratorKind::Grid {
                dim,
                count: per_axis.pow(dim as u32),
                side: rng.gen_range(0.5..5.0),
                jitter: rng.gen_range(0.0..0.4),
            }
        }
    };
    let label = format!("#{index} d={dim} n={n} {}", serde_json::to_value(&kind).unwrap()["kind"]);
    let spec = GeneratorSpec::new(kind)
        .with_growth_exponent(n)
        .with_seed(index);
    let mu = gen_measure(&spec).expect("generator");

    let complex = rng.gen_bool(0.3);
    let background = rng.gen_range(0.0..1.0);
    let mut values: Vec<Scalar> = (0..mu.len())
        .map(|_| {
            let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
            Scalar::new(rng.gen_range(-1.0..1.0), im) * background
        })
        .collect();
    let spikes = rng.gen_range(1..=(mu.len() / 4).max(1));
    for _ in 0..spikes {
        let j = rng.gen_range(0..mu.len());
        let height = 10f64.powf(rng.gen_range(0.5..3.0));
        let phase = if complex { rng.gen_range(0.0..std::f64::consts::TAU) } else if rng.gen_bool(0.5) { 0.0 } else { std::f64::consts::PI };
        values[j] = Scalar::from_polar(height, phase);
        if !complex {
            values[j].im = 0.0;
        }
    }
    Instance {
        label,
        mu,
        f: DensityVector::new(values),
    }
}

#[derive(Default)]
struct Suite1 {
    instances: usize,
    decompositions: usize,
    parts: usize,
    failures: Vec<String>,
    reports: Vec<(usize, InvariantReport)>,
    elapsed: Duration,
}

fn run_suite1() -> Suite1 {
    let start = Instant::now();
    let mut out = Suite1::default();
    for index in 0..200u64 {
        let inst = random_instance(index);
        let lambdas = lambda_grid(&inst.mu, &inst.f, 10).expect("lambda grid");
        out.instances += 1;
        for &lambda in &lambdas {
            let dec = match decompose(&inst.mu, &inst.f, lambda, &CzOptions::default()) {
                Ok(d) => d,
                Err(e) => {
                    out.failures.push(format!("{} λ={lambda}: {e}", inst.label));
                    continue;
                }
            };
            let rep = verify_decomposition(&inst.mu, &inst.f, lambda, &dec).expect("verify");
            out.decompositions += 1;
            out.parts += dec.parts.len();
            for c in rep.failed() {
                out.failures.push(format!("{} λ={lambda}: {} (measured {}, bound {})", inst.label, c.name, c.measured, c.bound));
            }
            out.reports.push((inst.mu.dim(), rep));
        }
    }
    out.elapsed = start.elapsed();
    out
}

fn criterion1(s: &Suite1) -> Outcome {
    let passed = s.failures.is_empty() && s.instances >= 200 && s.elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "{} instances, {} decompositions, {} parts, {} violations, {:.1} s",
        s.instances,
        s.decompositions,
        s.parts,
        s.failures.len(),
        s.elapsed.as_secs_f64()
    );
    if let Some(first) = s.failures.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    Outcome { passed, detail }
}

fn count_failed(s: &Suite1, name: &str) -> usize {
    s.reports
        .iter()
        .map(|(_, r)| r.condition(name).map_or(1, |c| c.failures))
        .sum()
}

fn criterion2(s: &Suite1) -> Outcome {
    let violations = count_failed(s, "annulus_integral");
    let worst = s
        .reports
        .iter()
        .filter(|(_, r)| r.parts > 0)
        .map(|(_, r)| r.max_annulus_integral / r.constants.c1)
        .fold(0.0, f64::max);
    Outcome {
        passed: violations == 0 && s.parts > 0,
        detail: format!("{} pairs, {violations} violations, worst integral/C1 = {worst:.4}", s.parts),
    }
}

fn criterion3(s: &Suite1) -> Outcome {
    let phi = count_failed(s, "cc5");
    let alpha = count_failed(s, "alpha_bound");
    let worst_phi = s
        .reports
        .iter()
        .map(|(_, r)| r.max_phi_over_lambda / r.constants.b)
        .fold(0.0, f64::max);
    let worst_alpha = s
        .reports
        .iter()
        .map(|(_, r)| r.max_alpha_over_lambda / r.constants.c3)
        .fold(0.0, f64::max);
    let constants_ok = s.reports.iter().all(|(d, r)| {
        let c = &r.constants;
        let two_d = 2f64.powi(*d as i32);
        (c.c3 - 1.0 / two_d).abs() <= 1e-15 && (c.b - (2.0 * c.c2 + c.c3)).abs() <= 1e-12 * c.b
    });
    Outcome {
        passed: phi == 0 && alpha == 0 && constants_ok,
        detail: format!(
            "Σ|φ|/λ violations {phi} (worst ratio to B {worst_phi:.4}), |α|/λ violations {alpha} (worst ratio to C3 {worst_alpha:.4}), constants consistent: {constants_ok}"
        ),
    }
}

/// Clusters at geometrically growing distances from the origin, with the
/// level set spread over many annuli.
fn wide_instance(seed: u64) -> (AtomicMeasure, DensityVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa_0000 + seed);
    let dim = 1 + (seed as usize % 2);
    let mut points: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut values = Vec::new();
    let shells = 30 + seed as i32 * 3;
    for k in 0..shells {
        let radius = 1.3f64.powi(k);
        let direction: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-3);
        for a in 0..6 {
            let x: Vec<f64> = direction
                .iter()
                .map(|c| c / norm * radius + rng.gen_range(-0.05..0.05) * radius + a as f64 * 1e-3)
                .collect();
            points.push((x, rng.gen_range(0.5..2.0)));
            values.push(if a == 0 && k % 3 == 0 { rng.gen_range(50.0..400.0) } else { rng.gen_range(0.0..1.0) });
        }
    }
    // Mass around the origin so that a moderate Q0 is heavy enough.
    for a in 0..20 {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5) + a as f64 * 1e-4).collect();
        points.push((x, 5.0));
        values.push(0.5);
    }
    let provisional = AtomicMeasure::from_points(dim, &points, GrowthProfile::new(1.0, 1.0, 1.0).unwrap()).unwrap();
    let r_min = provisional.min_separation().unwrap();
    let probe = provisional.with_growth(GrowthProfile::new(1.0, 1.0, r_min).unwrap()).unwrap();
    let c0 = czlab::verify_growth(&probe).worst_ratio * (1.0 + 1e-9);
    let mu = provisional.with_growth(GrowthProfile::new(1.0, c0, r_min).unwrap()).unwrap();
    (mu, DensityVector::from_real(&values))
}

fn criterion4(s: &Suite1) -> Outcome {
    let overlap_bad = s
        .reports
        .iter()
        .filter(|(d, r)| r.max_overlap > 1usize << d || r.constants.k_overlap != (1u64 << d) as f64)
        .count();
    let worst = s.reports.iter().map(|(_, r)| r.max_overlap).max().unwrap_or(0);

    let (n, n_prime) = DERIVED_CONFINEMENT;
    let mut confined = 0;
    let mut annuli = 0;
    let mut problems = Vec::new();
    for seed in 0..6u64 {
        let (mu, f) = wide_instance(seed);
        let lambda = lambda_grid(&mu, &f, 4).unwrap()[1];
        let mut cfg = AnnulusConfig::auto(&mu, &f, lambda).unwrap();
        cfg.n = Some(n);
        cfg.n_prime = Some(n_prime);
        let opts = CzOptions {
            k_overlap: None,
            annulus_min_extent: Some(0.0),
            annulus: Some(cfg),
        };
        match decompose(&mu, &f, lambda, &opts) {
            Ok(dec) => {
                let summary = dec.annulus.as_ref().expect("annulus engaged");
                let groups = summary.groups.len();
                let rep = verify_decomposition(&mu, &f, lambda, &dec).unwrap();
                if rep.all_passed() && groups >= 5 {
                    confined += 1;
                    annuli += groups;
                } else {
                    problems.push(format!(
                        "seed {seed}: {groups} annuli, failed {:?}",
                        rep.failed().map(|c| c.name.clone()).collect::<Vec<_>>()
                    ));
                }
            }
            Err(e) => problems.push(format!("seed {seed}: {e}")),
        }
    }
    let passed = overlap_bad == 0 && confined >= 5;
    let mut detail = format!(
        "max overlap {worst} over {} decompositions ({overlap_bad} above 2^d); annulus confinement with (N, N') = ({n}, {n_prime}) on {confined}/6 wide instances spanning {annuli} annuli",
        s.reports.len()
    );
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Outcome { passed, detail }
}

fn criterion5() -> Outcome {
    let start = Instant::now();
    // Growth exponent 1 throughout, matching the order of the Cauchy kernel.
    let families: Vec<(&str, GeneratorSpec)> = vec![
        (
            "segment_plus_atoms",
            GeneratorSpec::new(GeneratorKind::SegmentPlusAtoms {
                dim: 2,
                segment_atoms: 480,
                length: 1.0,
                heavy_atoms: 20,
                heavy_weight: 0.2,
            })
            .with_seed(5),
        ),
        (
            "four_corner_cantor",
            GeneratorSpec::new(GeneratorKind::Cantor {
                dim: 2,
                depth: 5,
                pieces: 4,
                ratio: 0.25,
            }),
        ),
        (
            "random_heavy_tailed",
            GeneratorSpec::new(GeneratorKind::Random {
                dim: 2,
                count: 500,
                side: 1.0,
                weight_decades: 3.0,
            })
            .with_growth_exponent(1.0)
            .with_seed(8),
        ),
    ];
    let kernel = Kernel::cauchy();
    let mut lines = Vec::new();
    let mut finite = true;
    let mut stable = 0;
    for (name, spec) in &families {
        let mu = gen_measure(spec).unwrap();
        // A few concentrated spikes over a small complex background: the
        // L¹-heavy, L²-light regime that the weak (1,1) bound is about.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut f = DensityVector::new(
            (0..mu.len())
                .map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.1)
                .collect(),
        );
        for _ in 0..5 {
            let j = rng.gen_range(0..mu.len());
            f.values[j] = Scalar::from_polar(100.0, rng.gen_range(0.0..std::f64::consts::TAU));
        }
        let r_min = mu.growth().r_min;
        let eps = geometric_grid(r_min, r_min * 100.0, 7).unwrap();
        let sweep = weak_sweep(&mu, &kernel, &f, &eps, &LambdaGrid::Auto).unwrap();
        let l2 = [eps[0], eps[3], eps[6]]
            .iter()
            .map(|&e| empirical_l2_norm(&mu, &kernel, e, 2, 17).unwrap())
            .fold(0.0, f64::max);
        finite &= sweep.is_finite() && l2.is_finite();
        let variation = sweep.variation();
        let ratio = sweep.max_quasinorm() / l2;
        let ok = variation < 2.0 && ratio < 10.0;
        stable += usize::from(ok);
        lines.push(format!(
            "{name} (N={}): variation {variation:.3}, quasinorm {:.4}, L² {l2:.4}, ratio {ratio:.3}{}",
            mu.len(),
            sweep.max_quasinorm(),
            if ok { "" } else { " [unstable]" }
        ));
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: finite && elapsed < Duration::from_secs(120),
        detail: format!(
            "{stable}/{} families stable, all finite: {finite}, {:.1} s; {}",
            families.len(),
            elapsed.as_secs_f64(),
            lines.join("; ")
        ),
    }
}

fn criterion6() -> Outcome {
    let samples = 100_000;
    let positives = [
        ("cauchy", Kernel::cauchy()),
        ("riesz d=2 j=0", Kernel::riesz(2, 1.0, 0).unwrap()),
        ("riesz d=2 j=1", Kernel::riesz(2, 1.0, 1).unwrap()),
        ("hilbert d=1", Kernel::riesz(1, 1.0, 0).unwrap()),
    ];
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, k) in positives {
        let r = verify_kernel_conditions(&k, samples, 2024).unwrap();
        passed &= r.passed;
        parts.push(format!(
            "{name}: size {:.4}, smooth {:.4}/{:.4} → {}",
            r.size_ratio,
            r.smooth_first,
            r.smooth_second,
            if r.passed { "pass" } else { "fail" }
        ));
    }
    for (name, k) in [
        ("negative control d=2", Kernel::negative_control(2, 1.0)),
        ("negative control d=1", Kernel::negative_control(1, 1.0)),
    ] {
        let r = verify_kernel_conditions(&k, samples, 2024).unwrap();
        passed &= !r.passed;
        parts.push(format!(
            "{name}: size {:.3e} → {}",
            r.size_ratio,
            if r.passed { "pass (unexpected)" } else { "fail (expected)" }
        ));
    }
    Outcome {
        passed,
        detail: format!("C_k = 2, {samples} samples; {}", parts.join("; ")),
    }
}

fn criterion7() -> Outcome {
    let mu = AtomicMeasure::from_points(
        1,
        &[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![3.0], 4.0)],
        GrowthProfile::new(1.0, 8.0, 0.5).unwrap(),
    )
    .unwrap();
    let f = DensityVector::from_real(&[10.0, 0.0, 0.0]);
    let dec = decompose(&mu, &f, 8.0, &CzOptions::default()).unwrap();
    let close = |a: Scalar, b: f64| (a - Scalar::new(b, 0.0)).norm() <= 1e-15 * b.abs().max(1.0);
    let mut checks = Vec::new();
    let single = dec.parts.len() == 1;
    checks.push(("one part", single));
    if single {
        let p = &dec.parts[0];
        checks.push(("Q = [-0.75, 0.75]", p.q.center() == [0.0] && p.q.side() == 1.5));
        checks.push(("R = [-4.5, 4.5]", p.r.center() == [0.0] && p.r.side() == 9.0));
        checks.push(("alpha = 10/7", close(p.alpha, 10.0 / 7.0)));
        checks.push(("g = 10/7", dec.g.iter().all(|&v| close(v, 10.0 / 7.0))));
        checks.push((
            "b = (60/7, -10/7, -10/7)",
            close(p.b[0], 60.0 / 7.0) && close(p.b[1], -10.0 / 7.0) && close(p.b[2], -10.0 / 7.0),
        ));
    }
    let verified = verify_decomposition(&mu, &f, 8.0, &dec).unwrap().all_passed();
    checks.push(("verifier", verified));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks match the worked example", checks.len())
        } else {
            format!("mismatched: {}", failed.join(", "))
        },
    }
}

fn main() {
    let suite = run_suite1();
    let outcomes = [
        (1, "decomposition invariants", criterion1(&suite)),
        (2, "annulus kernel integral ≤ C1", criterion2(&suite)),
        (3, "constant chain Σ|φ| ≤ Bλ, |α| ≤ C3λ", criterion3(&suite)),
        (4, "Besicovich overlap and annulus confinement", criterion4(&suite)),
        (5, "weak (1,1) stability of the Cauchy transform", criterion5()),
        (6, "kernel conditions", criterion6()),
        (7, "three-atom worked example", criterion7()),
    ];
    for (id, title, outcome) in &outcomes {
        report(*id, title, outcome);
    }
    let failed = outcomes.iter().filter(|o| !o.2.passed).count();
    println!("acceptance: {}/{} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
