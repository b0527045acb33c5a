//! Closed-form feasible graphons for edge/triangle constraints.

use crate::error::{Error, Result};
use crate::graphon::{subgraph_density, StepGraphon, SubgraphPattern};

/// A graphon with edge density `eps` and triangle density `tau`.
///
/// * `tau <= eps³`: two equal blocks, within-block value `eps − x`,
///   cross value `eps + x`, with `x = (eps³ − tau)^{1/3}`.
/// * `eps³ < tau <= 2 eps³` (also `<= eps³ + (1−eps)³`): two equal blocks with
///   diagonal `a` and cross value `d = 2 eps − a`, where `a` solves
///   `a³ + 3 a d² = 4 tau` (monotone in `a`, solved by bisection).
/// * above that, up to `eps^{3/2}`: a clique block of mass `s` inside a
///   background of value `p = (eps − s²)/(1 − s²)`, with `s` found by
///   bisection; at `tau = eps^{3/2}` this is the clique plus isolated nodes.
pub fn reference_construction(eps: f64, tau: f64) -> Result<StepGraphon> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Domain(format!(
            "edge density {eps} outside (0, 0.5]"
        )));
    }
    let tau_max = eps.powf(1.5);
    if !(0.0..=tau_max).contains(&tau) {
        return Err(Error::Domain(format!(
            "triangle density {tau} outside [0, eps^1.5 = {tau_max}]"
        )));
    }
    let er = eps * eps * eps;
    // within rounding of the Erdős–Rényi curve the cube root would amplify
    // a 1e-17 discrepancy into a 1e-6 block split
    if (tau - er).abs() <= 8.0 * f64::EPSILON * er {
        return StepGraphon::constant(eps);
    }
    if tau <= er {
        let x = (er - tau).cbrt();
        return StepGraphon::symmetric_bipodal((eps - x).max(0.0), (eps + x).min(1.0));
    }
    let a_max = (2.0 * eps).min(1.0);
    let cubic = |a: f64| a.powi(3) + 3.0 * a * (2.0 * eps - a).powi(2) - 4.0 * tau;
    if cubic(a_max) >= 0.0 {
        let a = bisect(eps, a_max, cubic);
        return StepGraphon::symmetric_bipodal(a, (2.0 * eps - a).clamp(0.0, 1.0));
    }
    let tri = SubgraphPattern::triangle();
    let clique = |s: f64| -> StepGraphon {
        let p = ((eps - s * s) / (1.0 - s * s)).clamp(0.0, 1.0);
        StepGraphon::new(vec![s, 1.0 - s], vec![vec![1.0, p], vec![p, p]])
            .expect("clique family is a valid graphon")
    };
    let f = |s: f64| subgraph_density(&clique(s), &tri).expect("triangle within cap") - tau;
    let s_max = eps.sqrt();
    let s = if f(s_max) >= 0.0 {
        bisect(1e-9, s_max, f)
    } else {
        s_max
    };
    Ok(clique(s))
}

/// Root of `f` on `[lo, hi]` assuming `f(lo) <= 0 <= f(hi)`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
