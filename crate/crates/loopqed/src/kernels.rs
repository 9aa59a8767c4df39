//! Photon-field covariance kernels and the quantum kernel Q(k, τ).
//!
//! All kernels are expressed through the dimensionless combination
//! `x = βħω_k = λ_ph·k`. The imaginary-time covariance of the thermal photon
//! field is discontinuous at equal times (normal ordering); its even part has
//! a jump of exactly 1/2 there. The dimensionless kernel
//!
//! `Q(u, τ) = (u/2)·cosh[u(|τ|−1/2)]/sinh(u/2)`
//!
//! is even, 1-periodic, positive, equals 1 identically in the classical-field
//! limit u → 0, and integrates to exactly 1 over a period (it is peaked at
//! τ = 0 where Q ≥ 1 and dips below 1 at mid-period).
//!
//! Everything here is evaluated in exponentially-rescaled form so that no
//! intermediate overflows for large u, with series branches below u = 1e-4
//! so the classical limit is exact.

use crate::{Error, Result};

/// Threshold below which sinh/cosh ratios switch to series.
const SERIES_U: f64 = 1e-4;

/// sinh(z)/z, stable at z = 0.
#[inline]
pub fn sinhc(z: f64) -> f64 {
    let a = z.abs();
    if a < 1e-4 {
        let z2 = z * z;
        1.0 + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// Planck occupation n(x) = 1/(eˣ − 1) for x = βħω_k > 0.
///
/// Uses a Laurent-series branch for small x to avoid cancellation.
pub fn planck_occupation(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("planck occupation requires x > 0, got {x}")));
    }
    if x < 1e-5 {
        // 1/x − 1/2 + x/12 − x³/720 + O(x⁵)
        Ok(1.0 / x - 0.5 + x / 12.0 - x * x * x / 720.0)
    } else {
        Ok(1.0 / x.exp_m1())
    }
}

/// Photon covariance C(x, τ−τ′) with x = βħω_k.
///
/// For dt ≠ 0: e^{−x·dt}[θ(dt)(n+1) + θ(−dt)n]; at dt = 0 the normal-order
/// prescription selects n. `periodic` extends dt by period 1; otherwise
/// |dt| > 1 is a domain error.
pub fn photon_covariance(x: f64, dt: f64, periodic: bool) -> Result<f64> {
    let n = planck_occupation(x)?;
    let dt = if periodic {
        let mut t = dt.rem_euclid(1.0);
        // keep the representative in (-1/2, 1/2] irrelevant; C is defined on
        // [0,1) by periodicity with the θ branches taken on the representative
        if t > 1.0 {
            t -= 1.0;
        }
        t
    } else {
        if dt.abs() > 1.0 {
            return Err(Error::Domain(format!(
                "photon covariance requires |τ−τ′| ≤ 1 (got {dt}); pass periodic=true to extend"
            )));
        }
        dt
    };
    if dt == 0.0 {
        Ok(n)
    } else if dt > 0.0 {
        Ok((-x * dt).exp() * (n + 1.0))
    } else {
        Ok((-x * dt).exp() * n)
    }
}

/// Equal-time convention for the even covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualTime {
    /// cosh/sinh formula extended by continuity to τ = 0 (library default;
    /// valid once the normal-order constant is dropped).
    Continuous,
    /// The normal-ordered value n_k at τ = 0, retained for the
    /// normal-order compensation check.
    Discontinuous,
}

/// Even part of the photon covariance, C_even(x, τ) = ½[C(τ) + C(−τ)] for
/// |τ| ≤ 1.
///
/// Away from τ = 0 this is cosh[x(|τ|−1/2)]/(2 sinh(x/2)); at τ = 0 the value
/// is selected by `at_zero`. The continuous value exceeds the discontinuous
/// one by exactly 1/2 for every x.
pub fn covariance_even(x: f64, tau: f64, at_zero: EqualTime) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("covariance_even requires x > 0, got {x}")));
    }
    let t = tau.abs();
    if t > 1.0 {
        return Err(Error::Domain(format!("covariance_even requires |τ| ≤ 1, got {tau}")));
    }
    if t == 0.0 && at_zero == EqualTime::Discontinuous {
        return planck_occupation(x);
    }
    // cosh[x(t−1/2)]/(2 sinh(x/2)) = (e^{x(t−1)} + e^{−xt}) / (2(1 − e^{−x}));
    // every exponent is ≤ 0, so this form never overflows.
    let denom = -(-x).exp_m1();
    Ok(((x * (t - 1.0)).exp() + (-x * t).exp()) / (2.0 * denom))
}

/// Quantum kernel Q(u, τ) with u = λ_ph·k ≥ 0; τ is reduced periodically.
///
/// Q ≡ 1 at u = 0 (classical field).
pub fn q_kernel(u: f64, tau: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("q_kernel requires u ≥ 0, got {u}")));
    }
    let t = tau.rem_euclid(1.0);
    if u < SERIES_U {
        // (8.4)-type expansion; exact at u = 0.
        return Ok(1.0 + 0.5 * u * u * (t * t - t + 1.0 / 6.0));
    }
    let denom = -(-u).exp_m1();
    Ok(0.5 * u * ((u * (t - 1.0)).exp() + (-u * t).exp()) / denom)
}

/// Truncated small-k expansion 1 + (u²/2)[τ² − |τ| + 1/6], |τ| ≤ 1.
pub fn q_kernel_small_k(u: f64, tau: f64) -> Result<f64> {
    let t = tau.abs();
    if t > 1.0 {
        return Err(Error::Domain(format!("q_kernel_small_k requires |τ| ≤ 1, got {tau}")));
    }
    Ok(1.0 + 0.5 * u * u * (t * t - t + 1.0 / 6.0))
}

/// Antiderivative ∫₀^T Q(u, τ) dτ for T ∈ [0, 1], closed form.
///
/// Equals [sinh(u(T−1/2)) + sinh(u/2)] / (2 sinh(u/2)); in particular the
/// full-period integral is exactly 1 for every u.
pub fn q_kernel_antiderivative(u: f64, t_upper: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_upper) {
        return Err(Error::Domain(format!("antiderivative wants T ∈ [0,1], got {t_upper}")));
    }
    if u < SERIES_U {
        // ∫(1 + (u²/2)p) with p = τ²−τ+1/6: T + (u²/2)(T³/3 − T²/2 + T/6)
        let t = t_upper;
        return Ok(t + 0.5 * u * u * (t * t * t / 3.0 - t * t / 2.0 + t / 6.0));
    }
    // sinh(u(T−1/2))/(2 sinh(u/2)) + 1/2, in overflow-safe form:
    // = (e^{u(T-1)} - e^{-uT}) / (2(1 - e^{-u})) + 1/2
    let denom = -(-u).exp_m1();
    Ok(((u * (t_upper - 1.0)).exp() - (-u * t_upper).exp()) / (2.0 * denom) + 0.5)
}

/// Slice-averaged kernel for an M-slice grid: entry d is the average of
/// Q(u, τ−τ′) over a slice pair at offset d = (j−j′) mod M.
///
/// This is the exact kernel to contract with per-slice path increments; the
/// pointwise sample Q(u, d/M) misses the equal-time mass entirely once
/// u ≳ M, while the averaged kernel conserves ∫Q = 1 at any resolution.
pub fn q_kernel_slice_avg(u: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Domain(format!("slice count must be ≥ 2, got {m}")));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("q_kernel_slice_avg requires u ≥ 0, got {u}")));
    }
    let mf = m as f64;
    if u < SERIES_U {
        // Tent-averaging is an O(u²/M²) correction on an already O(u²) shape.
        return (0..m).map(|d| q_kernel(u, d as f64 / mf)).collect();
    }
    let h = u / mf;
    let mut out = Vec::with_capacity(m);
    // d = 0: M·[1 − ((1−e^{−h})/h)·(1−e^{−(u−h)})/(1−e^{−u})]
    let one_m_eh = -(-h).exp_m1();
    let ratio = -(-(u - h)).exp_m1() / -(-u).exp_m1();
    out.push(mf * (1.0 - (one_m_eh / h) * ratio));
    // d ≥ 1: Q(u, d/M) · sinhc(h/2)², folded so all exponents stay ≤ 0:
    // (u/2)·(e^{u(t+1/M−1)} + e^{−u(t−1/M)})·(1−e^{−h})²/(h²(1−e^{−u}))
    let denom = -(-u).exp_m1();
    let sfac = one_m_eh * one_m_eh / (h * h);
    for d in 1..m {
        let t = d as f64 / mf;
        let val = 0.5 * u * ((u * (t + 1.0 / mf - 1.0)).exp() + (-u * (t - 1.0 / mf)).exp()) * sfac
            / denom;
        out.push(val);
    }
    Ok(out)
}

/// Evaluated kernel bundle at one (x = λ_ph·k, τ) point.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub x: f64,
    pub tau: f64,
    pub n_k: f64,
    pub c: f64,
    pub c_even: f64,
    pub q: f64,
}

/// Evaluate all kernels at one point (continuous equal-time convention).
pub fn kernel_eval(x: f64, tau: f64) -> Result<KernelEval> {
    Ok(KernelEval {
        x,
        tau,
        n_k: planck_occupation(x)?,
        c: photon_covariance(x, tau, true)?,
        c_even: covariance_even(x, tau.rem_euclid(1.0).min(1.0), EqualTime::Continuous)?,
        q: q_kernel(x, tau)?,
    })
}
