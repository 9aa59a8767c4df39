//! Shared quadrature and small numeric utilities.
//!
//! Provides Gauss–Legendre rules of arbitrary order, an adaptive
//! Gauss–Kronrod (7, 15) integrator with an error estimate, a π-panel
//! summation scheme for oscillatory semi-infinite integrals, a tensor-product
//! Simpson rule on rectangles, and a least-squares line fit used for
//! convergence-order checks.

use crate::{Error, Result};

/// Value plus error estimate returned by the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // initial guess: Chebyshev-like approximation to the i-th root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = if n == 1 {
                1.0
            } else {
                n as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate f over [a, b] with an n-point Gauss–Legendre rule.
pub fn gauss_legendre_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

// Gauss–Kronrod (7, 15) nodes on [0, 1] of |x|; standard tabulated values.
const GK_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const GK_WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss–Kronrod (7, 15) panel; returns (kronrod, |kronrod − gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in GK_NODES.iter().zip(&GK_WK).enumerate() {
        let (fp, fm) = (f(mid + half * x), f(mid - half * x));
        let pair = if x == 0.0 { fp } else { fp + fm };
        kron += wk * pair;
        if i % 2 == 1 {
            gauss += GK_WG[i / 2] * pair;
        }
    }
    (kron * half, (kron - gauss).abs() * half)
}

/// Adaptive Gauss–Kronrod integration of f over [a, b] to absolute tolerance
/// `tol`, bisecting the worst panel up to `max_depth` levels.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<QuadResult> {
    // worklist of (a, b, value, error, depth), refine worst-first
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e, 0u32)];
    loop {
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol {
            let value = panels.iter().map(|p| p.2).sum();
            return Ok(QuadResult { value, error: err });
        }
        // split the panel with the largest error
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (pa, pb, _, perr, depth) = panels[idx];
        if depth >= max_depth {
            let value: f64 = panels.iter().map(|p| p.2).sum();
            if err <= tol.max(1e-12 * value.abs()) {
                return Ok(QuadResult { value, error: err });
            }
            return Err(Error::Quadrature { requested: tol, achieved: err });
        }
        let pm = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, pm);
        let (v2, e2) = gk15(&f, pm, pb);
        let _ = perr;
        panels[idx] = (pa, pm, v1, e1, depth + 1);
        panels.push((pm, pb, v2, e2, depth + 1));
    }
}

/// Integrate an eventually-decaying oscillatory f over [0, ∞) by summing
/// π-length panels (period matched to `omega`) until the running tail falls
/// below `tol`, with Aitken Δ² acceleration on the partial sums.
pub fn oscillatory_integral<F: Fn(f64) -> f64>(
    f: F,
    omega: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("oscillatory_integral requires ω > 0, got {omega}")));
    }
    let panel = std::f64::consts::PI / omega;
    let mut partial = Vec::with_capacity(max_panels);
    let mut sum = 0.0;
    let mut prev_accel = f64::NAN;
    let mut last_err = f64::INFINITY;
    for i in 0..max_panels {
        let a = i as f64 * panel;
        let r = adaptive_gk(&f, a, a + panel, tol / 4.0, 30)?;
        sum += r.value;
        partial.push(sum);
        if partial.len() >= 5 {
            let accel = iterated_aitken(&partial);
            let err = (accel - prev_accel).abs();
            if err < tol {
                return Ok(QuadResult { value: accel, error: err });
            }
            prev_accel = accel;
            last_err = err;
        }
    }
    Err(Error::Quadrature { requested: tol, achieved: last_err })
}

/// Repeated Aitken Δ² sweeps over a sequence of partial sums; returns the
/// deepest stable extrapolant.
fn iterated_aitken(partials: &[f64]) -> f64 {
    let mut cur = partials.to_vec();
    let mut best = *cur.last().unwrap();
    while cur.len() >= 3 {
        let mut next = Vec::with_capacity(cur.len() - 2);
        for w in cur.windows(3) {
            let denom = w[2] - 2.0 * w[1] + w[0];
            if denom.abs() > 1e-300 {
                next.push(w[2] - (w[2] - w[1]) * (w[2] - w[1]) / denom);
            } else {
                next.push(w[2]);
            }
        }
        best = *next.last().unwrap();
        cur = next;
    }
    best
}

/// Tensor-product Simpson rule for f(x, y) on [ax, bx] × [ay, by] with
/// (nx, ny) panels per axis (each must be even).
pub fn simpson_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (ax, bx, nx): (f64, f64, usize),
    (ay, by, ny): (f64, f64, usize),
) -> Result<f64> {
    if nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0 {
        return Err(Error::Domain(format!("simpson_2d needs even panel counts ≥ 2, got {nx}×{ny}")));
    }
    let simpson_w = |i: usize, n: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let hx = (bx - ax) / nx as f64;
    let hy = (by - ay) / ny as f64;
    let mut sum = 0.0;
    for i in 0..=nx {
        let wx = simpson_w(i, nx);
        let x = ax + i as f64 * hx;
        for j in 0..=ny {
            sum += wx * simpson_w(j, ny) * f(x, ay + j as f64 * hy);
        }
    }
    Ok(sum * hx * hy / 9.0)
}

/// Least-squares line fit y ≈ slope·x + intercept; returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gl_nodes_are_exact_for_polynomials() {
        // n-point rule is exact for degree ≤ 2n−1
        for n in [2usize, 5, 16, 40] {
            let deg = 2 * n - 1;
            let exact = 2.0 / (deg as f64 + 1.0) * if deg % 2 == 0 { 1.0 } else { 0.0 }
                + if deg % 2 == 0 { 0.0 } else { 0.0 };
            let _ = exact;
            // use x^(2n-2), even, exact value 2/(2n-1)
            let p = 2 * n - 2;
            let got = gauss_legendre_integrate(|x| x.powi(p as i32), -1.0, 1.0, n);
            let want = 2.0 / (p as f64 + 1.0);
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn gl_weights_sum_to_two() {
        for n in [1usize, 3, 17, 64] {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_gk_smooth_and_peaked() {
        let r = adaptive_gk(|x| x.sin(), 0.0, PI, 1e-12, 30).unwrap();
        assert!((r.value - 2.0).abs() < 1e-11);
        // narrow Lorentzian: ∫ dx / (x² + a²) over [-1,1] = 2 atan(1/a)/a
        let a = 1e-3;
        let r = adaptive_gk(|x| 1.0 / (x * x + a * a), -1.0, 1.0, 1e-9, 40).unwrap();
        let want = 2.0 * (1.0 / a).atan() / a;
        assert!((r.value - want).abs() < 1e-6 * want);
        assert!(r.error < 1e-8 * want);
    }

    #[test]
    fn adaptive_gk_reports_failure() {
        // |x|^(−1/2) near 0 at absurd tolerance and tiny depth
        let res = adaptive_gk(|x: f64| x.abs().sqrt().recip().min(1e8), 0.0, 1.0, 1e-14, 3);
        assert!(res.is_err());
    }

    #[test]
    fn oscillatory_dirichlet_integral() {
        // ∫₀^∞ sin(x)/x dx = π/2, slowly (conditionally) convergent
        let r = oscillatory_integral(
            |x| if x == 0.0 { 1.0 } else { x.sin() / x },
            1.0,
            1e-9,
            400,
        )
        .unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn oscillatory_damped() {
        // ∫₀^∞ e^{−x} cos(3x) dx = 1/10
        let r = oscillatory_integral(|x| (-x).exp() * (3.0 * x).cos(), 3.0, 1e-11, 200).unwrap();
        assert!((r.value - 0.1).abs() < 1e-9);
    }

    #[test]
    fn simpson_2d_separable() {
        // ∫₀^π ∫₀^1 sin(x)·y² dy dx = 2/3; Simpson error on sin is O(h⁴)
        let v = simpson_2d(|x, y| x.sin() * y * y, (0.0, PI, 128), (0.0, 1.0, 32)).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-7);
        assert!(simpson_2d(|_, _| 1.0, (0.0, 1.0, 3), (0.0, 1.0, 4)).is_err());
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, b) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
    }
}
