//! Dense BFGS with backtracking (Armijo) line search, used for the inner
//! minimizations of the augmented Lagrangian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            grad_tol: 1e-11,
        }
    }
}

/// Minimize `f` starting at `x0`. `f` returns the value and gradient.
pub(crate) fn minimize<F>(x0: Vec<f64>, opts: BfgsOptions, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let (mut fx, g) = f(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    for _ in 0..opts.max_iter {
        if !fx.is_finite() || g.amax() < opts.grad_tol {
            break;
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
            fresh = true;
        }
        // cap the first trial step so saturated coordinates don't explode
        let mut t = (10.0 / d.amax()).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let xt = &x + t * &d;
            let (ft, gt) = f(xt.as_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft, DVector::from_vec(gt)));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if fresh {
                break;
            }
            h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                // Shanno scaling of the initial inverse Hessian
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
            fresh = false;
        }
        let stalled = (fx - fnew).abs() <= 1e-16 * fx.abs().max(1.0) && s.amax() < 1e-14;
        x = xn;
        fx = fnew;
        g = gn;
        if stalled {
            break;
        }
    }
    x.as_slice().to_vec()
}
