//! Screening cancellation, tail amplitudes, regime estimates, the τ-bracket
//! closed form, and the universal constant A of the ⟨W_m²⟩ asymptotics.
//!
//! Conventions follow the potentials module: all lengths in one common unit,
//! reduced magnetic quantities carry no relativistic prefactor.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::kernels::q_kernel_slice_avg;
use crate::paths::LoopShape;
use crate::potentials::{dipole_factor, PairContext, QuadSpec};
use crate::quad::{adaptive_gk, oscillatory_integral};
use crate::scales::{FormFactor, Regime, ScaleSet, Species, UnitSystem};
use crate::{Error, Result};

/// Periodized quadratic kernel f(t) = t² − |t| + 1/6 on t ∈ [−1, 1].
#[inline]
pub fn quadratic_kernel(t: f64) -> f64 {
    let a = t.abs();
    t * t - a + 1.0 / 6.0
}

/// Per-r bookkeeping of the dipolar r⁻³ coefficients entering the screening
/// cancellation: residual = wc_coeff + wm_coeff by construction.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TailReport {
    pub r: f64,
    pub regime: Regime,
    /// r³·W_c tail (dipolar coefficient of the Coulomb tail).
    pub wc_coeff: f64,
    /// r³·(W_m quantum correction) (dipolar coefficient).
    pub wm_coeff: f64,
    /// wc_coeff + wm_coeff — the surviving dipolar coefficient of W.
    pub residual: f64,
    /// |wm_coeff| / max(|wc_coeff|, tiny): cancellation quality diagnostic.
    pub ratio: f64,
    /// Discretization error scale of the coefficients, O(1/M).
    pub error_estimate: f64,
}

impl TailReport {
    pub fn new(r: f64, regime: Regime, wc_coeff: f64, wm_coeff: f64, error_estimate: f64) -> Self {
        let residual = wc_coeff + wm_coeff;
        let ratio = wm_coeff.abs() / wc_coeff.abs().max(f64::MIN_POSITIVE);
        TailReport { r, regime, wc_coeff, wm_coeff, residual, ratio, error_estimate }
    }
}

/// Lowest-order singular part of the W_m long-distance correction:
/// −(λ_aλ_b/2)·(δ_{μν}−3r̂_μr̂_ν)/r³ · Σ_{jj′} ΔX_a^μ ΔX_b^ν f(τ̄_j−τ̄_{j′}),
/// which cancels the dipolar Coulomb tail path by path in the continuum.
pub fn wm_quantum_correction(ctx: &PairContext) -> Result<f64> {
    let rlen = (ctx.r[0] * ctx.r[0] + ctx.r[1] * ctx.r[1] + ctx.r[2] * ctx.r[2]).sqrt();
    if rlen == 0.0 {
        return Err(Error::Domain("wm_quantum_correction needs |r| > 0".into()));
    }
    if ctx.loop_a.q != 1 || ctx.loop_b.q != 1 {
        return Err(Error::Domain("wm_quantum_correction needs q = 1 filaments".into()));
    }
    if ctx.loop_a.slices_per_unit != ctx.loop_b.slices_per_unit {
        return Err(Error::Domain("loops must share the τ grid".into()));
    }
    let rhat = [ctx.r[0] / rlen, ctx.r[1] / rlen, ctx.r[2] / rlen];
    let m = ctx.loop_a.slices_per_unit;
    let mut l = [[0.0; 3]; 3];
    for j in 0..m {
        let da = ctx.loop_a.increment(j);
        let ta = ctx.loop_a.midtime(j);
        for j2 in 0..m {
            let db = ctx.loop_b.increment(j2);
            let f = quadratic_kernel(ta - ctx.loop_b.midtime(j2));
            for mu in 0..3 {
                for nu in 0..3 {
                    l[mu][nu] += da[mu] * db[nu] * f;
                }
            }
        }
    }
    let mut contract = 0.0;
    for mu in 0..3 {
        for nu in 0..3 {
            let t = (if mu == nu { 1.0 } else { 0.0 }) - 3.0 * rhat[mu] * rhat[nu];
            contract += l[mu][nu] * t;
        }
    }
    Ok(-0.5 * ctx.lambda_a * ctx.lambda_b * contract / (rlen * rlen * rlen))
}

/// Discrete check of the integration-by-parts identity
/// ∮∮ f(τ−τ′) dξ_a·dξ_b = 2 ∮∮ dτ dτ′ (δ(τ−τ′)−1) ξ_a·ξ_b
/// on a sampled pair; returns (lhs, rhs, gap). The gap is O(1/M).
pub fn ibp_identity_check(a: &LoopShape, b: &LoopShape) -> Result<(f64, f64, f64)> {
    if a.slices_per_unit != b.slices_per_unit || a.q != 1 || b.q != 1 {
        return Err(Error::Domain("ibp check needs q = 1 filaments on one grid".into()));
    }
    let m = a.slices_per_unit;
    let mut lhs = 0.0;
    for j in 0..m {
        let da = a.increment(j);
        let ta = a.midtime(j);
        for j2 in 0..m {
            let db = b.increment(j2);
            let f = quadratic_kernel(ta - b.midtime(j2));
            lhs += f * (da[0] * db[0] + da[1] * db[1] + da[2] * db[2]);
        }
    }
    let d = dipole_factor(a, b)?;
    let rhs = 2.0 * (d[0][0] + d[1][1] + d[2][2]);
    Ok((lhs, rhs, lhs - rhs))
}

/// Both sides of identity (8.7): (λ_ph²/(β√(m_am_b)c²), λ_aλ_b).
pub fn lambda_identity(beta: f64, m_a: f64, m_b: f64, hbar: f64, c: f64) -> (f64, f64) {
    let lambda_ph = beta * hbar * c;
    let lhs = lambda_ph * lambda_ph / (beta * (m_a * m_b).sqrt() * c * c);
    let rhs = hbar * (beta / m_a).sqrt() * hbar * (beta / m_b).sqrt();
    (lhs, rhs)
}

/// Semi-classical r⁻⁶ tail amplitude: (ħβ)⁴/48 · Σ_{γ₁γ₂} I_{γ₁} I_{γ₂}
/// e²_{γ₁} e²_{γ₂} / [(βm_{γ₁}c²)(βm_{γ₂}c²)]. Species entries are
/// (dressed integral I, charge e, relativistic parameter βmc²); the dressed
/// root-point integrals are inputs (chain resummation out of scope).
pub fn tail_amplitude_8_10(hbar_beta: f64, species: &[(f64, f64, f64)]) -> f64 {
    let single: f64 = species.iter().map(|&(i, e, rel)| i * e * e / rel).sum();
    hbar_beta.powi(4) / 48.0 * single * single
}

/// Closed form of the τ-bracket (C.4): ∫₀¹Q(xq₁,τ)Q(xq₂,τ)dτ − 1, written
/// in an overflow-safe exponential form; symmetric in q₁ ↔ q₂ and with a
/// Taylor branch across the removable q₁ = q₂ singularity.
pub fn bracket_c4(x: f64, q1: f64, q2: f64) -> Result<f64> {
    if !(x > 0.0) || !(q1 > 0.0) || !(q2 > 0.0) {
        return Err(Error::Domain(format!("bracket_C4 needs positive arguments, got ({x},{q1},{q2})")));
    }
    let u1 = x * q1;
    let u2 = x * q2;
    let s = u1 + u2;
    let d = (u1 - u2).abs();
    // w_i = u_i/(1−e^{−u_i}); the bracket is
    // (w₁w₂/2)[(1−e^{−S})/S + e^{−min}(1−e^{−D})/D] − 1.
    let w1 = u1 / (-(-u1).exp_m1());
    let w2 = u2 / (-(-u2).exp_m1());
    let term1 = (-(-s).exp_m1()) / s;
    let emin = (-u1.min(u2)).exp();
    let term2 = if (q1 - q2).abs() < 1e-6 * (q1 + q2) {
        emin * (1.0 - d / 2.0 + d * d / 6.0)
    } else {
        emin * (-(-d).exp_m1()) / d
    };
    Ok(0.5 * w1 * w2 * (term1 + term2) - 1.0)
}

/// Which tensor contraction enters the k-space double integrals: the one
/// derived from the two transverse projectors (1 + (q̂₁·q̂₂)²) or the form
/// printed in the source ((q̂₁·q̂₂)² − 3). Both are computed and reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TensorVariant {
    Derived,
    Printed,
}

/// Constant A with an error bar, tagged with its provenance.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ConstantA {
    pub value: f64,
    pub error: f64,
    pub variant: TensorVariant,
}

/// sin(q)/q with a series branch.
#[inline]
fn sinc(q: f64) -> f64 {
    if q.abs() < 1e-4 {
        1.0 - q * q / 6.0
    } else {
        q.sin() / q
    }
}

/// Second angular moment m₂(q) = ∫₋₁¹ dμ μ² e^{iqμ} / 2 =
/// ((q²−2)sin q + 2q cos q)/q³, with a series branch against cancellation.
#[inline]
fn angular_m2(q: f64) -> f64 {
    if q.abs() < 5e-2 {
        let q2 = q * q;
        1.0 / 3.0 - q2 / 10.0 + q2 * q2 / 168.0
    } else {
        ((q * q - 2.0) * q.sin() + 2.0 * q * q.cos()) / (q * q * q)
    }
}

/// Isotropic/axial split of the angular average of e^{iq·r̂} q̂q̂:
/// (a δ + b r̂r̂) with 3a + b = sinc(q), a + b = m₂(q).
#[inline]
fn axial_split(q: f64) -> (f64, f64) {
    let g0 = sinc(q);
    let m2 = angular_m2(q);
    ((g0 - m2) / 2.0, (3.0 * m2 - g0) / 2.0)
}

/// Radial pair weight after the analytic angular integrals:
/// derived variant g₀g₀ + T₁:T₂, printed variant T₁:T₂ − 3g₀g₀,
/// with T₁:T₂ = 3a₁a₂ + a₁b₂ + a₂b₁ + b₁b₂.
#[inline]
fn pair_weight(variant: TensorVariant, g1: f64, a1: f64, b1: f64, g2: f64, a2: f64, b2: f64) -> f64 {
    let tt = 3.0 * a1 * a2 + a1 * b2 + a2 * b1 + b1 * b2;
    match variant {
        TensorVariant::Derived => g1 * g2 + tt,
        TensorVariant::Printed => tt - 3.0 * g1 * g2,
    }
}

fn a_cache() -> &'static Mutex<HashMap<(TensorVariant, String), ConstantA>> {
    static CACHE: OnceLock<Mutex<HashMap<(TensorVariant, String), ConstantA>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Constant A via the t-representation 1/(q₁+q₂) = ∫₀^∞ dt e^{−t(q₁+q₂)},
/// which factorizes the two radial integrals at each t:
/// J(t) = (2/π)∫₀^∞ e^{−tq} sin q dq,
/// M₂(t) = (2/π)∫₀^∞ q e^{−tq} m₂(q) dq (each decays as t⁻²),
/// A = (1/2)∫₀^∞ dt [J² + 3α² + 2αβ + β²] (derived variant), with
/// α = (J−M₂)/2, β = (3M₂−J)/2; printed variant replaces J² by −3J².
pub fn constant_a_t_representation(variant: TensorVariant, quad: &QuadSpec) -> Result<ConstantA> {
    quad.validate()?;
    let osc_tol = quad.t_tol.max(1e-12);
    let j_of = |t: f64| -> Result<f64> {
        let r = oscillatory_integral(|q| (-t * q).exp() * q.sin(), 1.0, osc_tol, 4000)?;
        Ok(2.0 / std::f64::consts::PI * r.value)
    };
    let m2_of = |t: f64| -> Result<f64> {
        let r = oscillatory_integral(|q| q * (-t * q).exp() * angular_m2(q), 1.0, osc_tol, 4000)?;
        Ok(2.0 / std::f64::consts::PI * r.value)
    };
    let g_of = |t: f64| -> f64 {
        let j = j_of(t).unwrap_or(f64::NAN);
        let m2 = m2_of(t).unwrap_or(f64::NAN);
        let alpha = (j - m2) / 2.0;
        let beta = (3.0 * m2 - j) / 2.0;
        let tt = 3.0 * alpha * alpha + 2.0 * alpha * beta + beta * beta;
        match variant {
            TensorVariant::Derived => j * j + tt,
            TensorVariant::Printed => tt - 3.0 * j * j,
        }
    };
    let t_max = 40.0;
    let body = adaptive_gk(g_of, 0.0, t_max, quad.t_tol * 10.0, quad.radial_max_depth)?;
    // large-t tail: G → c/t⁴ with c = 16/(3π²) (derived) or −32/(3π²)
    // (printed), so ∫_T^∞ G = c/(3T³).
    let c_tail = match variant {
        TensorVariant::Derived => 16.0 / (3.0 * std::f64::consts::PI.powi(2)),
        TensorVariant::Printed => -32.0 / (3.0 * std::f64::consts::PI.powi(2)),
    };
    let tail = c_tail / (3.0 * t_max.powi(3));
    let value = 0.5 * (body.value + tail);
    if !value.is_finite() {
        return Err(Error::NonFinite { context: "constant A (t-representation)".into() });
    }
    // tail formula error ~ next order in 1/t², plus quadrature errors
    let error = 0.5 * body.error + tail.abs() / (t_max * t_max) + osc_tol * t_max;
    Ok(ConstantA { value, error, variant })
}

/// Constant A via the direct 2D radial route: after analytic angular
/// integrals, A = (2/π²)∫∫ dq₁dq₂ q₁q₂/(q₁+q₂) · H(q₁,q₂), evaluated with
/// Gaussian damping e^{−(q₁²+q₂²)/2κ²} at κ and 2κ plus Richardson
/// extrapolation in 1/κ².
pub fn constant_a_radial(variant: TensorVariant, quad: &QuadSpec) -> Result<ConstantA> {
    quad.validate()?;
    let eval = |kappa: f64| -> f64 {
        let qmax = 8.0 * kappa;
        let dq = (qmax / quad.radial_2d_panels as f64).min(0.025);
        let n = (qmax / dq).ceil() as usize;
        let mut axis = Vec::with_capacity(n);
        for i in 0..n {
            let q = (i as f64 + 0.5) * dq;
            let (a, b) = axial_split(q);
            let damp = (-q * q / (2.0 * kappa * kappa)).exp();
            axis.push((q, sinc(q), a, b, damp));
        }
        let mut sum = 0.0;
        for &(q1, g1, a1, b1, d1) in &axis {
            let mut row = 0.0;
            for &(q2, g2, a2, b2, d2) in &axis {
                let h = pair_weight(variant, g1, a1, b1, g2, a2, b2);
                row += q1 * q2 / (q1 + q2) * h * d2;
            }
            sum += row * d1;
        }
        2.0 / std::f64::consts::PI.powi(2) * sum * dq * dq
    };
    let kappa = 8.0;
    let coarse = eval(kappa);
    let fine = eval(2.0 * kappa);
    // damping bias shrinks ≈ ×4 per κ doubling
    let value = fine + (fine - coarse) / 3.0;
    if !value.is_finite() {
        return Err(Error::NonFinite { context: "constant A (radial route)".into() });
    }
    let error = (fine - coarse).abs() / 2.0;
    Ok(ConstantA { value, error, variant })
}

/// Constant A (t-representation route), computed once per (variant,
/// QuadSpec fingerprint) and cached.
pub fn constant_a(variant: TensorVariant, quad: &QuadSpec) -> Result<ConstantA> {
    let key = (variant, quad.fingerprint());
    if let Some(hit) = a_cache().lock().unwrap().get(&key) {
        return Ok(*hit);
    }
    let computed = constant_a_t_representation(variant, quad)?;
    a_cache().lock().unwrap().insert(key, computed);
    Ok(computed)
}

/// Predicted ⟨W_m²⟩ in the sub-photon regime (λ_a, λ_b ≪ r ≪ λ_ph):
/// 120·A·(λ_a²λ_b²/120r⁶)·(r/λ_ph)³ = A·λ_a²λ_b²/(r³λ_ph³).
pub fn wm_sq_prediction(r: f64, lambda_ph: f64, lambda_a: f64, lambda_b: f64, a: f64) -> f64 {
    a * lambda_a * lambda_a * lambda_b * lambda_b / (r.powi(3) * lambda_ph.powi(3))
}

/// Order-of-magnitude regime estimates, reported as the dimensionless
/// r-scaled magnitudes (r·|W_m| bound, r·|W_c| estimate, ratio):
/// r·|W_m| ≲ (λ_ph/r)/(βm̄c²), r·|W_c| ≈ λ_mat²/r², ratio = r/λ_ph.
pub fn regime_magnitudes(r: f64, scales: &ScaleSet) -> Result<(f64, f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("regime_magnitudes needs r > 0, got {r}")));
    }
    let lam = scales.lambda_mat_ref();
    let wm_bound = (scales.lambda_ph / r) / scales.rel;
    let wc_estimate = lam * lam / (r * r);
    Ok((wm_bound, wc_estimate, r / scales.lambda_ph))
}

/// Result of the normal-order compensation check (3.15)–(3.17).
#[derive(Debug, Clone, Copy)]
pub struct NormalOrderCheck {
    /// d_γ = (2πħ/c)(e²/m)∫d³k/(2π)³ g²(k)/k.
    pub d_gamma: f64,
    /// First-order matched-contraction term with the continuous C_even(k,0).
    pub continuous_term: f64,
    /// Same with the discontinuous (normal-ordered) value C_even(k,0) = n_k.
    pub discontinuous_term: f64,
    /// Relative gap |(continuous − discontinuous) − βq·d_γ| / (βq·d_γ).
    pub gap: f64,
}

/// Verifies that the equal-time jump of C_even exactly reproduces the
/// normal-order constant: the first-order matched-contraction term
/// βq∫d³k/(2π)³ Γ_μμ(k,0), Γ_{μν} = (4πħe²/m)(g²/2ω_k)δ^tr_{μν}C_even,
/// evaluated with the continuous extension minus the normal-ordered value,
/// must equal βq·d_γ.
pub fn normal_order_check(
    species: &Species,
    q: usize,
    beta: f64,
    units: UnitSystem,
    form_factor: FormFactor,
    quad: &QuadSpec,
) -> Result<NormalOrderCheck> {
    quad.validate()?;
    if q == 0 || !(beta > 0.0) {
        return Err(Error::Domain("normal_order_check needs q ≥ 1, β > 0".into()));
    }
    let e2_over_m = species.charge * species.charge / species.mass;
    let lambda_ph = beta * units.hbar * units.c;
    // sharp cutoff: integrate exactly up to the discontinuity
    let k_max = match form_factor {
        FormFactor::Sharp { k_cut } => k_cut,
        _ => quad.k_max_factor * form_factor.k_cut(),
    };
    // d_γ: radial reduction ∫d³k/(2π)³ g²/k = (1/2π²)∫ k g²(k) dk
    let d_int = adaptive_gk(
        |k| k * form_factor.squared(k),
        0.0,
        k_max,
        quad.radial_tol,
        quad.radial_max_depth,
    )?;
    let d_gamma = 2.0 * std::f64::consts::PI * units.hbar / units.c
        * e2_over_m
        * d_int.value
        / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    // matched-contraction term: βq ∫d³k/(2π)³ (4πħe²/m)(g²/2ck)·2·C_even(k,0)
    // radial: βq (4πħe²/m)/(2π²) ∫ dk (k²·g²/(2ck))·C_even
    let pref = beta * q as f64 * 4.0 * std::f64::consts::PI * units.hbar * e2_over_m
        / (2.0 * std::f64::consts::PI).powi(3)
        * 4.0
        * std::f64::consts::PI;
    let term = |continuous: bool| -> Result<f64> {
        let r = adaptive_gk(
            |k| {
                if k == 0.0 {
                    return 0.0;
                }
                let g2 = form_factor.squared(k);
                if g2 == 0.0 {
                    return 0.0;
                }
                let x = lambda_ph * k;
                let n = crate::kernels::planck_occupation(x).expect("x > 0");
                let c_even = if continuous { n + 0.5 } else { n };
                // trace of the transverse projector contributes a factor 2
                2.0 * k * k * g2 / (2.0 * units.c * k) * c_even
            },
            0.0,
            k_max,
            quad.radial_tol,
            quad.radial_max_depth,
        )?;
        Ok(pref * r.value)
    };
    let continuous_term = term(true)?;
    let discontinuous_term = term(false)?;
    let target = beta * q as f64 * d_gamma;
    let gap = if species.charge == 0.0 {
        (continuous_term - discontinuous_term).abs()
    } else {
        ((continuous_term - discontinuous_term) - target).abs() / target.abs()
    };
    Ok(NormalOrderCheck { d_gamma, continuous_term, discontinuous_term, gap })
}

/// Deterministic evaluation of F (C.1)/(C.3): the λ→0 reduced second moment
/// ⟨Ŵ_m²⟩ = F/r² with
/// F = (4/π²) ∫∫ dq₁dq₂ ĝ²(q₁)ĝ²(q₂) H(q₁,q₂) B(x; q₁, q₂),
/// where x = λ_ph/r, ĝ²(q) = e^{−q²/2κ²} (Gaussian form factor with
/// κ = r·k_cut/√2), H the analytic angular pair weight, and B the τ-bracket.
/// `slices` = Some(M) replaces the continuum bracket by its M-slice discrete
/// analog (1/M)Σ_d Q̄_d(xq₁)Q̄_d(xq₂) − 1, matching the Monte Carlo grid.
pub fn f_big(
    x: f64,
    kappa: f64,
    variant: TensorVariant,
    quad: &QuadSpec,
    slices: Option<usize>,
) -> Result<f64> {
    quad.validate()?;
    if !(x > 0.0) || !(kappa > 0.0) {
        return Err(Error::Domain(format!("f_big needs x, κ > 0, got ({x},{kappa})")));
    }
    let qmax = (8.0 * kappa).min(quad.radial_2d_qmax.max(8.0 * kappa));
    let dq = (qmax / quad.radial_2d_panels as f64).min(0.025);
    let n = (qmax / dq).ceil() as usize;
    struct Axis {
        g0: f64,
        a: f64,
        b: f64,
        damp: f64,
        u: f64,
        eu: f64,
        w: f64,
        qbar: Option<Vec<f64>>,
    }
    let mut axis = Vec::with_capacity(n);
    for i in 0..n {
        let q = (i as f64 + 0.5) * dq;
        let (a, b) = axial_split(q);
        let u = x * q;
        let qbar = match slices {
            Some(m) => Some(q_kernel_slice_avg(u, m)?),
            None => None,
        };
        axis.push(Axis {
            g0: sinc(q),
            a,
            b,
            damp: (-q * q / (2.0 * kappa * kappa)).exp(),
            u,
            eu: (-u).exp(),
            w: u / (-(-u).exp_m1()),
            qbar,
        });
    }
    let mut sum = 0.0;
    for a1 in &axis {
        let mut row = 0.0;
        for a2 in &axis {
            let bracket = match (&a1.qbar, &a2.qbar) {
                (Some(v1), Some(v2)) => {
                    let m = v1.len();
                    let dot: f64 = v1.iter().zip(v2).map(|(p, q)| p * q).sum();
                    dot / m as f64 - 1.0
                }
                _ => {
                    let s = a1.u + a2.u;
                    let d = (a1.u - a2.u).abs();
                    let term1 = (-(-s).exp_m1()) / s;
                    let emin = a1.eu.max(a2.eu);
                    let term2 = if d < 1e-6 * s {
                        emin * (1.0 - d / 2.0 + d * d / 6.0)
                    } else {
                        emin * (-(-d).exp_m1()) / d
                    };
                    0.5 * a1.w * a2.w * (term1 + term2) - 1.0
                }
            };
            let h = pair_weight(variant, a1.g0, a1.a, a1.b, a2.g0, a2.a, a2.b);
            row += h * bracket * a2.damp;
        }
        sum += row * a1.damp;
    }
    let value = 4.0 / std::f64::consts::PI.powi(2) * sum * dq * dq;
    if !value.is_finite() {
        return Err(Error::NonFinite { context: "f_big".into() });
    }
    Ok(value)
}

/// F(x) with the damping scale extrapolated out (Richardson over κ, 2κ);
/// returns (value, error estimate).
pub fn f_big_extrapolated(
    x: f64,
    variant: TensorVariant,
    quad: &QuadSpec,
) -> Result<(f64, f64)> {
    let kappa = 8.0;
    let coarse = f_big(x, kappa, variant, quad, None)?;
    let fine = f_big(x, 2.0 * kappa, variant, quad, None)?;
    Ok((fine + (fine - coarse) / 3.0, (fine - coarse).abs() / 2.0))
}
