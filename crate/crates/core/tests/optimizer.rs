//! Optimizer behaviour on the parts of the edge-triangle plane with known answers.

use phases_core::graphon::{
    canonicalize, graphon_entropy, subgraph_density, ConstraintVector, SubgraphPattern,
};
use phases_core::optimizer::{
    constrained_entropy, maximize_entropy, phase_scan, reference_construction, CellStatus,
    GridSpec, Model, OptimizerOptions, ScanOptions,
};
use phases_core::{Error, Parallelism};

fn opts(starts: usize, max_podality: usize) -> OptimizerOptions {
    OptimizerOptions {
        starts,
        max_podality,
        parallelism: Parallelism::Sequential,
        ..OptimizerOptions::default()
    }
}

fn binary_entropy(p: f64) -> f64 {
    -0.5 * (p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

#[test]
fn erdos_renyi_curve_is_constant() {
    for eps in [0.25, 0.45, 0.65] {
        let c = ConstraintVector::edge_triangle(eps, eps.powi(3)).unwrap();
        let r = constrained_entropy(&c, &opts(8, 3)).unwrap();
        assert_eq!(r.podality, 1, "eps={eps}");
        assert!(r.flags.constant);
        assert!((r.entropy - binary_entropy(eps)).abs() < 1e-6, "eps={eps}");
    }
}

#[test]
fn half_density_segment_is_symmetric_bipodal() {
    for tau in [0.03, 0.08] {
        let c = ConstraintVector::edge_triangle(0.5, tau).unwrap();
        let r = maximize_entropy(&c, 2, &opts(8, 2)).unwrap();
        let g = canonicalize(&r.graphon, 1e-4);
        let s = (0.125f64 - tau).cbrt();
        let mut diag = [g.value(0, 0), g.value(1, 1)];
        diag.sort_by(f64::total_cmp);
        assert!(
            (diag[0] - (0.5 - s)).abs() < 1e-4 && (diag[1] - (0.5 - s)).abs() < 1e-4,
            "tau={tau}"
        );
        assert!((g.value(0, 1) - (0.5 + s)).abs() < 1e-4);
        assert!(r.flags.symmetric_bipodal);
    }
}

#[test]
fn optimizer_never_loses_to_the_closed_form() {
    for (eps, tau) in [(0.3, 0.01), (0.4, 0.1), (0.45, 0.2), (0.2, 0.05)] {
        let c = ConstraintVector::edge_triangle(eps, tau).unwrap();
        let r = constrained_entropy(&c, &opts(6, 3)).unwrap();
        let q = reference_construction(eps, tau).unwrap();
        assert!(r.entropy >= graphon_entropy(&q) - 1e-8, "({eps},{tau})");
        assert!(r.max_residual() < 1e-8);
        let e = subgraph_density(&r.graphon, &SubgraphPattern::edge()).unwrap();
        let t = subgraph_density(&r.graphon, &SubgraphPattern::triangle()).unwrap();
        assert!((e - eps).abs() < 1e-8 && (t - tau).abs() < 1e-8);
    }
}

#[test]
fn above_kruskal_katona_is_infeasible() {
    let c = ConstraintVector::edge_triangle(0.3, 0.17).unwrap();
    match constrained_entropy(&c, &opts(4, 2)) {
        Err(Error::Infeasible { .. }) => {}
        other => panic!("expected infeasible, got {other:?}"),
    }
    let c = ConstraintVector::edge_triangle(0.3, 0.3f64.powf(1.5) - 0.01).unwrap();
    assert!(constrained_entropy(&c, &opts(8, 3)).is_ok());
}

#[test]
fn below_curve_cells_at_low_density_are_symmetric() {
    let grid = GridSpec {
        x_min: 0.3,
        x_max: 0.5,
        y_min: -0.02,
        y_max: -0.005,
        nx: 3,
        ny: 2,
        relative_to_er: true,
    };
    let scan = ScanOptions {
        optimizer: opts(4, 3),
        parallelism: Parallelism::Sequential,
        ..ScanOptions::default()
    };
    let map = phase_scan(Model::EdgeTriangle, &grid, &scan).unwrap();
    for cell in &map.cells {
        assert_eq!(cell.status, CellStatus::Feasible);
        let r = cell.result.as_ref().unwrap();
        assert!(r.flags.symmetric_bipodal, "({}, {})", cell.x, cell.y);
        let s = (cell.x.powi(3) - cell.y).cbrt();
        let expected = 0.5 * binary_entropy(cell.x - s) + 0.5 * binary_entropy(cell.x + s);
        assert!(
            (r.entropy - expected).abs() < 1e-7,
            "({}, {})",
            cell.x,
            cell.y
        );
    }
}

#[test]
fn thread_mode_does_not_change_results() {
    let c = ConstraintVector::edge_triangle(0.45, 0.05).unwrap();
    let seq = constrained_entropy(&c, &opts(6, 3)).unwrap();
    let par = constrained_entropy(
        &c,
        &OptimizerOptions {
            parallelism: Parallelism::Parallel,
            ..opts(6, 3)
        },
    )
    .unwrap();
    assert_eq!(seq, par);
}
