//! Small one-dimensional search routines shared by the scanners.

/// Smoothstep-spaced abscissae on `(0, 1)`: `3t^2 - 2t^3` at `t = i/(n+1)`,
/// dense near both ends.
pub fn smoothstep_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let t = i as f64 / (n + 1) as f64;
            t * t * (3.0 - 2.0 * t)
        })
        .collect()
}

/// Shrinks `[inside, outside]` around the boundary of a predicate. Returns
/// the last point where `pred` holds, within `tol` of the boundary.
pub fn bisect_boundary<F: Fn(f64) -> bool>(
    pred: F,
    mut inside: f64,
    mut outside: f64,
    tol: f64,
) -> f64 {
    for _ in 0..200 {
        if (outside - inside).abs() <= tol {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Root of `f` on a bracket `f(lo) f(hi) <= 0`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x, f(x))`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section search for a minimum.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), lo, hi, tol);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_increasing_and_interior() {
        let g = smoothstep_grid(50);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.0 && g[49] < 1.0);
    }

    #[test]
    fn boundary_of_interval() {
        let b = bisect_boundary(|x| x <= 0.3, 0.0, 1.0, 1e-13);
        assert!((b - 0.3).abs() < 1e-12 && b <= 0.3);
    }

    #[test]
    fn root_of_cubic() {
        let r = bisect_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_extrema() {
        let (x, v) = golden_max(|x| -(x - 0.25).powi(2) + 1.0, -1.0, 1.0, 1e-12);
        assert!((x - 0.25).abs() < 1e-6 && (v - 1.0).abs() < 1e-12);
        let (x, _) = golden_min(|x| (x + 0.5).powi(2), -1.0, 1.0, 1e-12);
        assert!((x + 0.5).abs() < 1e-6);
    }
}
