//! Bounded one-dimensional minimization.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's method (golden section with parabolic steps) on `[a, b]`.
///
/// `tol` is the absolute tolerance on `x`. The endpoints themselves are
/// compared with the interior optimum, so minima on the boundary are found.
/// Non-finite objective values are treated as `+inf`.
pub fn brent_minimize(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    if !(a < b) || !a.is_finite() || !b.is_finite() || !(tol > 0.0) {
        return Err(Error::Numerical(alloc::format!(
            "bad minimization interval [{a}, {b}] or tolerance {tol}"
        )));
    }
    let mut eval = |x: f64| {
        let y = f(x);
        if y.is_nan() {
            f64::INFINITY
        } else {
            y
        }
    };
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut lo, mut hi) = (a, b);
    let mut x = lo + GOLD * (hi - lo);
    let (mut w, mut v) = (x, x);
    let mut fx = eval(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let tol1 = 1e-10 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (hi - lo) {
            converged = true;
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (lo - x) && p < q * (hi - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < mid { hi - x } else { lo - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(alloc::format!(
            "minimizer did not converge in {max_iter} iterations (bracket [{lo}, {hi}], best x = {x})"
        )));
    }
    let mut best = Minimum { x, fx, iterations };
    for end in [a, b] {
        let fe = eval(end);
        if fe < best.fx {
            best = Minimum { x: end, fx: fe, iterations };
        }
    }
    if !best.fx.is_finite() {
        return Err(Error::Numerical(alloc::format!(
            "objective is not finite anywhere probed on [{a}, {b}]"
        )));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_boundary() {
        let m = brent_minimize(|x| (x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-9, 100).unwrap();
        assert!((m.x - 0.3).abs() < 1e-8);
        let m = brent_minimize(|x| x, 0.0, 1.0, 1e-9, 100).unwrap();
        assert_eq!(m.x, 0.0);
        let m = brent_minimize(|x| -x, 0.0, 2.0, 1e-9, 100).unwrap();
        assert_eq!(m.x, 2.0);
    }

    #[test]
    fn non_smooth_and_failures() {
        let m = brent_minimize(|x: f64| (x - 1.7).abs(), 0.0, 5.0, 1e-10, 200).unwrap();
        assert!((m.x - 1.7).abs() < 1e-9);
        assert!(brent_minimize(|x| x, 1.0, 0.0, 1e-9, 100).is_err());
        assert!(brent_minimize(|x: f64| x.cos(), 0.0, 100.0, 1e-12, 3).is_err());
        assert!(brent_minimize(|_| f64::NAN, 0.0, 1.0, 1e-6, 100).is_err());
    }
}
