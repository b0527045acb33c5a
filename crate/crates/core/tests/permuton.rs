//! Permutations against their permutons, and the permuton optimizer across resolutions.

use phases_core::permuton::{
    count_constrained_perms, maximize_permuton_entropy, perm_pattern_density, perm_to_permuton,
    permuton_pattern_density, DensityMethod, Permutation, PermutonOptions, StarPattern,
};
use phases_core::Parallelism;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ratio(pi: &Permutation, tau: &StarPattern) -> f64 {
    let r = perm_pattern_density(pi, tau).unwrap();
    *r.numer() as f64 / *r.denom() as f64
}

fn gap(pi: &Permutation, tau: &str) -> f64 {
    let tau: StarPattern = tau.parse().unwrap();
    let p = perm_to_permuton(pi);
    (ratio(pi, &tau)
        - permuton_pattern_density(&p, &tau, DensityMethod::Exact)
            .unwrap()
            .value)
        .abs()
}

/// Two increasing runs, the upper one first.
fn skew(n: usize) -> Permutation {
    let h = n / 2;
    Permutation::new((h + 1..=n).chain(1..=h).collect()).unwrap()
}

#[test]
fn permuton_of_a_permutation_approaches_its_densities() {
    let mut last = [f64::INFINITY; 3];
    for n in [10, 20, 40] {
        let pi = skew(n);
        for (slot, tau) in ["123", "213", "12"].iter().enumerate() {
            let g = gap(&pi, tau);
            assert!(g < last[slot], "{tau} n={n}: {g} >= {}", last[slot]);
            last[slot] = g;
        }
    }
    let mut last = f64::INFINITY;
    for n in [20, 40, 80] {
        let g = gap(&skew(n), "21");
        assert!(g < last);
        last = g;
    }
}

#[test]
fn random_permutations_stay_within_collision_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [20, 40] {
        let mut v: Vec<usize> = (1..=n).collect();
        v.shuffle(&mut rng);
        let pi = Permutation::new(v).unwrap();
        for tau in ["132", "231", "321", "12", "1*2", "2*1"] {
            let k = tau.len() as f64;
            // two of the k sampled points share a row or column
            let bound = k * (k - 1.0) / n as f64;
            assert!(gap(&pi, tau) <= bound, "{tau} n={n}");
        }
    }
}

#[test]
fn half_ascent_count_trend_rises_toward_zero() {
    let c = vec![("12".parse::<StarPattern>().unwrap(), 0.5)];
    let mut last = f64::NEG_INFINITY;
    for n in 5..=9 {
        let r = count_constrained_perms(n, &c, 0.1, Parallelism::Sequential).unwrap();
        assert!(r.log_normalized < 0.0, "n={n}");
        assert!(
            r.log_normalized > last,
            "n={n}: {} <= {last}",
            r.log_normalized
        );
        last = r.log_normalized;
    }
}

#[test]
fn optimizer_is_stable_under_refinement() {
    let c = vec![("12".parse::<StarPattern>().unwrap(), 0.7)];
    let opts = PermutonOptions {
        starts: 2,
        parallelism: Parallelism::Sequential,
        ..PermutonOptions::default()
    };
    let coarse = maximize_permuton_entropy(&c, 10, &opts).unwrap();
    let fine = maximize_permuton_entropy(&c, 20, &opts).unwrap();
    assert!(!coarse.degenerate && !fine.degenerate);
    assert!(coarse.entropy < 0.0);
    // finer grids see more permutons, so the optimum can only improve
    assert!(
        fine.entropy >= coarse.entropy - 1e-6,
        "{} vs {}",
        fine.entropy,
        coarse.entropy
    );
    assert!(
        (fine.entropy - coarse.entropy).abs() < 0.02,
        "{} vs {}",
        fine.entropy,
        coarse.entropy
    );
}

#[test]
fn star_pattern_optimum_is_resolution_independent() {
    let c = vec![("*2*".parse::<StarPattern>().unwrap(), 1.0 / 3.0)];
    let opts = PermutonOptions {
        starts: 2,
        parallelism: Parallelism::Sequential,
        ..PermutonOptions::default()
    };
    let a = maximize_permuton_entropy(&c, 12, &opts).unwrap();
    let b = maximize_permuton_entropy(&c, 20, &opts).unwrap();
    assert!((a.entropy - b.entropy).abs() < 1e-6);
    assert!(a.max_residual < 1e-7 && b.max_residual < 1e-7);
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut v: Vec<usize> = (1..=12).collect();
    v.shuffle(&mut rng);
    let p = perm_to_permuton(&Permutation::new(v).unwrap());
    for tau in ["132", "2*1", "12"] {
        let tau: StarPattern = tau.parse().unwrap();
        let exact = permuton_pattern_density(&p, &tau, DensityMethod::Exact)
            .unwrap()
            .value;
        let mc = permuton_pattern_density(
            &p,
            &tau,
            DensityMethod::MonteCarlo {
                samples: 200_000,
                seed: 1,
            },
        )
        .unwrap();
        assert!(
            (mc.value - exact).abs() < 4.0 * mc.std_error.max(1e-6),
            "{tau}"
        );
    }
}
