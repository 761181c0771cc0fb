//! Adaptive Simpson quadrature. Used by tests as an independent oracle and
//! by the library for the odd one-off integral.

/// Adaptive Simpson integration of `f` over `[a, b]` with absolute
/// tolerance `tol` and a recursion depth cap. The interval is first split
/// into 32 uniform panels so sharply localized integrands cannot slip
/// between the initial probe points.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    const PANELS: usize = 32;
    let width = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * width;
        let hi = lo + width;
        let flo = f(lo);
        let fhi = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let whole = simpson(lo, hi, flo, fm, fhi);
        total += recurse(&f, lo, hi, flo, fm, fhi, whole, panel_tol, max_depth);
    }
    total
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate an oscillatory integrand of the form `g(u)·sin(u·x)` over
/// `[0, ∞)` by summing adaptive Simpson panels over half-periods of the
/// sine factor until `consecutive_small` panels in a row contribute less
/// than `panel_tol`.
///
/// `f` is the full integrand (sine included). Panels have width `pi/x`
/// (or a fixed width when `x` is tiny and the integrand barely oscillates).
pub fn oscillatory_halfperiod_sum<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    panel_tol: f64,
    u_max: f64,
) -> f64 {
    let width = if x > 1e-8 {
        std::f64::consts::PI / x
    } else {
        f64::INFINITY
    };
    let width = width.min(50.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut small_run = 0;
    while lo < u_max {
        let hi = (lo + width).min(u_max);
        let panel = adaptive_simpson(&f, lo, hi, panel_tol, 48);
        total += panel;
        if panel.abs() < panel_tol {
            small_run += 1;
            if small_run >= 4 {
                break;
            }
        } else {
            small_run = 0;
        }
        lo = hi;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-12, 40);
        // antiderivative: x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert_relative_eq!(v, exact, epsilon = 1e-10);
    }

    #[test]
    fn integrates_gaussian_tail() {
        let v = adaptive_simpson(|x| (-0.5 * x * x).exp(), 0.0, 12.0, 1e-13, 60);
        // half of sqrt(2 pi)
        assert_relative_eq!(v, std::f64::consts::TAU.sqrt() * 0.5, epsilon = 1e-11);
    }

    #[test]
    fn oscillatory_sum_matches_dirichlet() {
        // ∫_0^∞ sin(u)/u du = pi/2
        let v = oscillatory_halfperiod_sum(|u| if u == 0.0 { 1.0 } else { u.sin() / u }, 1.0, 1e-12, 4000.0);
        assert_relative_eq!(v, std::f64::consts::FRAC_PI_2, epsilon = 1e-3);
    }
}
