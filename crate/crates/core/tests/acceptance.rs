//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use phases_core::graphon::{
    canonicalize, graphon_entropy, subgraph_density, ConstraintVector, SubgraphPattern,
    DEFAULT_MERGE_TOL,
};
use phases_core::optimizer::{
    bounded_signed_max, constrained_entropy, reference_construction, OptimizerOptions,
};
use phases_core::permuton::{
    count_constrained_perms, maximize_permuton_entropy, perm_to_permuton, permuton_entropy,
    permuton_pattern_density, DensityMethod, GridPermuton, Permutation, PermutonOptions,
    StarPattern,
};
use phases_core::sampler::{estimate_block_structure, sample_chains, ChainConfig};
use phases_core::{Error, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (
        t < limit,
        format!("{:.2} s (limit {} s)", t.as_secs_f64(), limit.as_secs()),
    )
}

fn binary_entropy(p: f64) -> f64 {
    -0.5 * (p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

fn edge_triangle(q: &phases_core::graphon::StepGraphon) -> (f64, f64) {
    (
        subgraph_density(q, &SubgraphPattern::edge()).unwrap(),
        subgraph_density(q, &SubgraphPattern::triangle()).unwrap(),
    )
}

fn closed_form_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let eps: f64 = rng.random_range(0.01..=0.5);
        let tau = rng.random_range(0.0..=eps.powi(3));
        let q = reference_construction(eps, tau).unwrap();
        let (e, t) = edge_triangle(&q);
        worst = worst.max((e - eps).abs()).max((t - tau).abs());
    }
    let (fast, time) = within(start, Duration::from_secs(1));
    outcome(
        worst < 1e-10 && fast,
        format!("max error {worst:.1e}, {time}"),
    )
}

fn er_curve() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for eps in [0.2, 0.3, 0.4, 0.5] {
        let c = ConstraintVector::edge_triangle(eps, eps * eps * eps).unwrap();
        match constrained_entropy(&c, &OptimizerOptions::default()) {
            Ok(r) => {
                let err = (r.entropy - binary_entropy(eps)).abs();
                ok &= r.podality == 1 && err < 1e-6;
                notes.push(format!(
                    "eps={eps}: podality {} error {err:.1e}",
                    r.podality
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("eps={eps}: {e}"));
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    outcome(ok && fast, format!("{}; {time}", notes.join("; ")))
}

fn proven_segment() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for tau in [0.02, 0.06, 0.10] {
        let c = ConstraintVector::edge_triangle(0.5, tau).unwrap();
        let Ok(r) = constrained_entropy(&c, &OptimizerOptions::default()) else {
            ok = false;
            continue;
        };
        let q = canonicalize(&r.graphon, DEFAULT_MERGE_TOL);
        if q.podality() != 2 {
            ok = false;
            continue;
        }
        let s = (0.125f64 - tau).cbrt();
        let errs = [
            (q.masses()[0] - 0.5).abs(),
            (q.value(0, 0) - (0.5 - s)).abs(),
            (q.value(1, 1) - (0.5 - s)).abs(),
            (q.value(0, 1) - (0.5 + s)).abs(),
        ];
        worst = errs.iter().fold(worst, |a, &e| a.max(e));
    }
    let (fast, time) = within(start, Duration::from_secs(300));
    outcome(
        ok && worst < 1e-4 && fast,
        format!("max parameter error {worst:.1e}, {time}"),
    )
}

fn feasibility_boundary() -> Outcome {
    let opts = OptimizerOptions::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for (eps, tau) in [(0.3, 0.17), (0.4, 0.26)] {
        let c = ConstraintVector::edge_triangle(eps, tau).unwrap();
        let infeasible = matches!(
            constrained_entropy(&c, &opts),
            Err(Error::Infeasible { .. })
        );
        ok &= infeasible;
        notes.push(format!("({eps}, {tau}) infeasible: {infeasible}"));
        let below = eps.powf(1.5) - 0.01;
        let c = ConstraintVector::edge_triangle(eps, below).unwrap();
        let feasible = constrained_entropy(&c, &opts).is_ok();
        ok &= feasible;
        notes.push(format!("({eps}, {below:.4}) feasible: {feasible}"));
    }
    outcome(ok, notes.join("; "))
}

fn gradient_suite() -> Outcome {
    let (worst, at) = common::worst_gradient_error(5, 100);
    outcome(
        worst < 1e-5,
        format!("worst relative error {worst:.1e} ({at})"),
    )
}

fn symmetric_branch() -> Outcome {
    let c = ConstraintVector::edge_triangle(0.5, 0.15).unwrap();
    let candidate = reference_construction(0.5, 0.15).unwrap();
    let s_sym = graphon_entropy(&candidate);
    let r = match constrained_entropy(&c, &OptimizerOptions::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let dominates = r.entropy >= s_sym - 1e-6;
    let equal = (r.entropy - s_sym).abs() < 1e-6;
    outcome(
        dominates && r.flags.symmetric_bipodal,
        format!(
            "optimizer entropy {:.6} vs symmetric candidate {:.6} (a = {:.4}); dominance {dominates}, \
             equality {equal} (soft), symmetric_bipodal flag {}, masses {:?}",
            r.entropy,
            s_sym,
            candidate.value(0, 0),
            r.flags.symmetric_bipodal,
            r.graphon.masses()
        ),
    )
}

fn sampler_blocks() -> Outcome {
    let start = Instant::now();
    let c = ConstraintVector::edge_triangle(0.5, 0.1)
        .unwrap()
        .with_delta(0.01)
        .unwrap();
    let diag = 0.5 - 0.025f64.cbrt();
    let cross = 0.5 + 0.025f64.cbrt();
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut seen = Vec::new();
    for seed in [1u64, 2, 3] {
        let cfg = ChainConfig::new(200, c.clone(), seed, 1);
        let out = match sample_chains(&cfg, 1, Parallelism::Parallel).pop().unwrap() {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        let s = out.samples.last().unwrap();
        let est = estimate_block_structure(&s.graph, 2, seed).unwrap();
        let q = &est.graphon;
        ok &= q.podality() == 2;
        for e in [
            (q.value(0, 0) - diag).abs(),
            (q.value(1, 1) - diag).abs(),
            (q.value(0, 1) - cross).abs(),
        ] {
            worst = worst.max(e);
        }
        seen.push(format!(
            "seed {seed} at ({:.4}, {:.4}): diag {:.3}/{:.3} cross {:.3}",
            s.densities[0],
            s.densities[1],
            q.value(0, 0),
            q.value(1, 1),
            q.value(0, 1)
        ));
    }
    let (fast, time) = within(start, Duration::from_secs(600));
    outcome(
        ok && worst < 0.05 && fast,
        format!(
            "max block value error {worst:.4}; {}; {time}",
            seen.join("; ")
        ),
    )
}

fn counting_oracles() -> Outcome {
    let c = ConstraintVector::edge_triangle(0.5, 0.1)
        .unwrap()
        .with_delta(0.3)
        .unwrap();
    let (z, inside) = common::chain_vs_enumeration(5, &c, 8, 50, 40_000);
    let twelve: StarPattern = "12".parse().unwrap();
    let s4 = count_constrained_perms(4, &[(twelve, 0.5)], 0.1, Parallelism::Sequential).unwrap();
    outcome(
        z < 3.0 && inside && s4.count == 6,
        format!(
            "n=5 bins: worst deviation {z:.2} SE, chain inside support {inside}; S_4 count {}",
            s4.count
        ),
    )
}

fn permuton_identities() -> Outcome {
    let exact = |p: &GridPermuton, t: &str| {
        permuton_pattern_density(p, &t.parse().unwrap(), DensityMethod::Exact)
            .unwrap()
            .value
    };
    let u = GridPermuton::uniform(7).unwrap();
    let e12 = (exact(&u, "12") - 0.5).abs();
    let e123 = (exact(&u, "123") - 1.0 / 6.0).abs();
    let mut eh = 0.0f64;
    for n in 3..=8 {
        let pi = Permutation::new((1..=n).rev().collect()).unwrap();
        eh = eh.max((permuton_entropy(&perm_to_permuton(&pi)) + (n as f64).ln()).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut esum = 0.0f64;
    for _ in 0..20 {
        let k = rng.random_range(2..=10);
        let g: Vec<f64> = (0..k * k).map(|_| rng.random_range(0.01..1.0)).collect();
        let p = GridPermuton::unvalidated(k, g).unwrap().project().unwrap();
        let total: f64 = ["123", "132", "213", "231", "312", "321"]
            .iter()
            .map(|t| exact(&p, t))
            .sum();
        esum = esum.max((total - 1.0).abs());
    }
    outcome(
        e12 < 1e-9 && e123 < 1e-9 && eh < 1e-12 && esum < 1e-9,
        format!("rho_12 {e12:.1e}, rho_123 {e123:.1e}, H(perm) {eh:.1e}, S_3 sum {esum:.1e}"),
    )
}

fn permuton_variational() -> Outcome {
    let twelve: StarPattern = "12".parse().unwrap();
    let r = maximize_permuton_entropy(&[(twelve.clone(), 0.5)], 20, &PermutonOptions::default())
        .unwrap();
    let mut trend = Vec::new();
    for n in 5..=9 {
        trend.push(
            count_constrained_perms(n, &[(twelve.clone(), 0.5)], 0.1, Parallelism::Parallel)
                .unwrap()
                .log_normalized,
        );
    }
    let negative = trend.iter().all(|&x| x < 0.0);
    let increasing = trend.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = trend.iter().map(|x| format!("{x:.4}")).collect();
    outcome(
        r.entropy.abs() < 1e-6 && negative && increasing,
        format!("H = {:.1e}; trend n=5..9 [{}]", r.entropy, shown.join(", ")),
    )
}

fn half_blip_bound() -> Outcome {
    let start = Instant::now();
    let t1 = SubgraphPattern::signed_two_star();
    let t2 = SubgraphPattern::signed_square();
    let opts = OptimizerOptions::default();
    let mut values = Vec::new();
    for m in [2, 4, 6, 8] {
        match bounded_signed_max(&t1, &t2, m, &opts) {
            Ok(r) => values.push(r.value),
            Err(e) => return outcome(false, format!("m={m}: {e}")),
        }
    }
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let bounded = values.iter().all(|&v| v <= 1.0 / 6.0 + 1e-3);
    let (fast, time) = within(start, Duration::from_secs(600));
    let shown: Vec<String> = values.iter().map(|x| format!("{x:.6}")).collect();
    outcome(
        nondecreasing && bounded && fast,
        format!("m=2,4,6,8: [{}], {time}", shown.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("closed-form construction exactness", closed_form_exactness),
        ("ER-curve optimality", er_curve),
        ("proven-segment optimizer match", proven_segment),
        ("feasibility boundary", feasibility_boundary),
        ("gradient suite", gradient_suite),
        ("phase-II symmetric branch at (0.5, 0.15)", symmetric_branch),
        ("sampler block recovery", sampler_blocks),
        ("exact counting oracles", counting_oracles),
        ("permuton identities", permuton_identities),
        ("permuton variational sanity", permuton_variational),
        ("half-blip bound", half_blip_bound),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
