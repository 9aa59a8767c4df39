//! Loop–loop interactions: equal-time Coulomb, self-energy, the effective
//! magnetic potential, the dipolar Coulomb tail, and the Gibbs weight.
//!
//! Conventions. All lengths (separation, λ_a, λ_b, λ_ph, 1/k_cut) are given
//! in one common unit chosen by the caller; all outputs are in powers of that
//! unit. Charge factors are NOT applied here — Coulomb-type values are in
//! units of 1/length (multiply by e e′), and [`w_magnetic`] returns the
//! *reduced* magnetic potential Ŵ_m = β√(m_a m_b)c² · W_m, i.e. the k-space
//! integral of (7.18)-type with its relativistic prefactor stripped:
//!
//! `Ŵ_m = ∫ d³k/(2π)³ e^{ik·r} [∮dX_a e^{−ik·λ_aX_a}]^μ [∮dX_b e^{ik·λ_bX_b}]^ν
//!        · 4π g²(k)/k² · P_{μν}(k̂) · Q(λ_ph k, τ̃−τ̃′)`
//!
//! with P the transverse projector by default. The equal-time Dirac comb of
//! the Coulomb terms is discretized as matched-index summation on the shared
//! τ grid, consistent with the δ convention of the paths module.

use crate::kernels::q_kernel_slice_avg;
use crate::paths::LoopShape;
use crate::quad::{adaptive_gk, gauss_legendre};
use crate::scales::FormFactor;
use crate::{Error, Result};

/// Relative regularization scale for coincident Coulomb points.
const COULOMB_REG_EPS: f64 = 1e-3;

/// Quadrature parameters for the k-space and auxiliary integrals.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct QuadSpec {
    /// Absolute tolerance of the adaptive radial k-integration.
    pub radial_tol: f64,
    /// Maximum bisection depth of the radial integration.
    pub radial_max_depth: u32,
    /// Radial cutoff as a multiple of the form-factor k_cut.
    pub k_max_factor: f64,
    /// Gauss–Legendre nodes in cos θ (polar axis along r).
    pub polar_nodes: usize,
    /// Uniform trapezoid nodes in azimuth.
    pub azimuthal_nodes: usize,
    /// Absolute tolerance for the t-representation integral (constant A).
    pub t_tol: f64,
    /// Panels per axis for 2D radial grids (constant A route 2, F(x)).
    pub radial_2d_panels: usize,
    /// Upper limit of 2D radial grids before damping extrapolation.
    pub radial_2d_qmax: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            radial_tol: 1e-9,
            radial_max_depth: 24,
            k_max_factor: 8.0,
            polar_nodes: 32,
            azimuthal_nodes: 32,
            t_tol: 1e-9,
            radial_2d_panels: 400,
            radial_2d_qmax: 60.0,
        }
    }
}

impl QuadSpec {
    /// A cheap spec for statistically dominated Monte Carlo work.
    pub fn coarse() -> Self {
        QuadSpec {
            radial_tol: 1e-7,
            radial_max_depth: 16,
            polar_nodes: 16,
            azimuthal_nodes: 8,
            ..QuadSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.polar_nodes < 2 || self.azimuthal_nodes < 2 || self.radial_2d_panels < 2 {
            return Err(Error::Config("quadrature node counts must be ≥ 2".into()));
        }
        if !(self.radial_tol > 0.0) || !(self.t_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be > 0".into()));
        }
        if !(self.k_max_factor > 0.0) || !(self.radial_2d_qmax > 0.0) {
            return Err(Error::Config("quadrature cutoffs must be > 0".into()));
        }
        Ok(())
    }

    /// Stable hex fingerprint of the full spec (used to key cached results).
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let repr = format!("{self:?}");
        let digest = Sha256::digest(repr.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything needed to evaluate one pair interaction.
#[derive(Clone)]
pub struct PairContext<'a> {
    pub loop_a: &'a LoopShape,
    pub loop_b: &'a LoopShape,
    /// Separation vector r_a − r_b (zero for self-interaction).
    pub r: [f64; 3],
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub lambda_ph: f64,
    pub form_factor: FormFactor,
    pub quad: QuadSpec,
}

impl PairContext<'_> {
    fn check(&self) -> Result<()> {
        if self.loop_a.slices_per_unit != self.loop_b.slices_per_unit {
            return Err(Error::Domain(format!(
                "loops must share the τ grid: M = {} vs {}",
                self.loop_a.slices_per_unit, self.loop_b.slices_per_unit
            )));
        }
        if self.lambda_a < 0.0 || self.lambda_b < 0.0 || self.lambda_ph < 0.0 {
            return Err(Error::Domain("λ scales must be ≥ 0".into()));
        }
        self.quad.validate()
    }

    fn separation(&self) -> f64 {
        norm(self.r)
    }
}

/// A Coulomb-type value with a flag marking whether the short-distance
/// regularization cap was hit anywhere.
#[derive(Debug, Clone, Copy)]
pub struct CoulombValue {
    pub value: f64,
    pub regularized: bool,
}

/// A k-quadrature result with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct WmValue {
    pub value: f64,
    pub quad_error: f64,
}

/// Projector inserted in the k-space integrand of [`w_magnetic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorMode {
    /// δ_{μν} − k̂_μ k̂_ν (the physical polarization sum).
    Transverse,
    /// k̂_μ k̂_ν (the complement, for the decomposition identity).
    Longitudinal,
    /// δ_{μν}.
    Identity,
}

#[inline]
fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Equal-time Coulomb interaction between two loops, Dirac comb of period
/// one: V_c = Δτ Σ_j Σ_windings 1/|r + λ_a X_a(τ̄_j) − λ_b X_b(τ̄_j + m)|.
///
/// Units of 1/length; multiply by e_a e_b. Coincident points are capped at
/// distance 10⁻³·max(λ_a, λ_b) and flagged.
pub fn coulomb_pair(
    a: &LoopShape,
    b: &LoopShape,
    r: [f64; 3],
    lambda_a: f64,
    lambda_b: f64,
) -> Result<CoulombValue> {
    if a.slices_per_unit != b.slices_per_unit {
        return Err(Error::Domain("loops must share the τ grid".into()));
    }
    let m = a.slices_per_unit;
    let dtau = 1.0 / m as f64;
    let cap = COULOMB_REG_EPS * lambda_a.max(lambda_b);
    let mut sum = 0.0;
    let mut regularized = false;
    for ja in 0..a.steps() {
        let s = ja % m;
        let pa = a.midpoint(ja);
        for w in 0..b.q {
            let pb = b.midpoint(s + w * m);
            let d = [
                r[0] + lambda_a * pa[0] - lambda_b * pb[0],
                r[1] + lambda_a * pa[1] - lambda_b * pb[1],
                r[2] + lambda_a * pa[2] - lambda_b * pb[2],
            ];
            let mut dist = norm(d);
            if dist < cap {
                dist = cap;
                regularized = true;
            }
            if dist == 0.0 {
                return Err(Error::Domain(
                    "coincident points with no regularization scale (λ_a = λ_b = 0, |r| = 0)"
                        .into(),
                ));
            }
            sum += 1.0 / dist;
        }
    }
    Ok(CoulombValue { value: dtau * sum, regularized })
}

/// Loop self-energy per squared charge: mutual Coulomb interactions between
/// the q particles sharing one loop, excluding proper self-terms.
///
/// U/e² = (Δτ/2) Σ_s Σ_{w ≠ w′} 1/(λ |X(s + wM) − X(s + w′M)|); exactly 0
/// for a filament (q = 1).
pub fn self_energy(l: &LoopShape, lambda: f64) -> Result<CoulombValue> {
    if l.q == 1 {
        return Ok(CoulombValue { value: 0.0, regularized: false });
    }
    if lambda <= 0.0 {
        return Err(Error::Domain("self-energy of a multi-particle loop needs λ > 0".into()));
    }
    let m = l.slices_per_unit;
    let dtau = 1.0 / m as f64;
    let cap = COULOMB_REG_EPS * lambda;
    let mut sum = 0.0;
    let mut regularized = false;
    for s in 0..m {
        for w in 0..l.q {
            for w2 in 0..l.q {
                if w == w2 {
                    continue;
                }
                let pa = l.midpoint(s + w * m);
                let pb = l.midpoint(s + w2 * m);
                let mut dist =
                    lambda * norm([pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]]);
                if dist < cap {
                    dist = cap;
                    regularized = true;
                }
                sum += 1.0 / dist;
            }
        }
    }
    Ok(CoulombValue { value: 0.5 * dtau * sum, regularized })
}

/// Orthonormal frame (e1, e2, e3) with e3 along `axis` (or ẑ if axis ≈ 0).
fn frame(axis: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = norm(axis);
    let e3 = if n > 0.0 {
        [axis[0] / n, axis[1] / n, axis[2] / n]
    } else {
        [0.0, 0.0, 1.0]
    };
    // pick the axis least aligned with e3 as the seed
    let seed = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut e1 = [
        seed[0] - dot(seed, e3) * e3[0],
        seed[1] - dot(seed, e3) * e3[1],
        seed[2] - dot(seed, e3) * e3[2],
    ];
    let n1 = norm(e1);
    e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    (e1, e2, e3)
}

/// Per-slice phase-weighted increments of a loop, folded onto the M-bin unit
/// period: out[m] = Σ_{j ≡ m (M)} ΔX_j e^{i s k·λ X(mid_j)} for sign s.
fn folded_currents(
    l: &LoopShape,
    lambda: f64,
    k_vec: [f64; 3],
    sign: f64,
    scale: f64,
) -> Vec<[(f64, f64); 3]> {
    let m = l.slices_per_unit;
    let mut out = vec![[(0.0, 0.0); 3]; m];
    for j in 0..l.steps() {
        let mid = l.midpoint(j);
        let phase = sign * lambda * dot(k_vec, mid);
        let (s, c) = phase.sin_cos();
        let dx = l.increment(j);
        let bin = &mut out[j % m];
        for comp in 0..3 {
            bin[comp].0 += scale * dx[comp] * c;
            bin[comp].1 += scale * dx[comp] * s;
        }
    }
    out
}

/// 3×3 projector matrix for a unit vector k̂.
fn projector(mode: ProjectorMode, khat: [f64; 3]) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let kk = khat[i] * khat[j];
            p[i][j] = match mode {
                ProjectorMode::Transverse => (if i == j { 1.0 } else { 0.0 }) - kk,
                ProjectorMode::Longitudinal => kk,
                ProjectorMode::Identity => {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    p
}

/// Core angular + τ-contraction evaluation at one radial k; returns the
/// angular average of Re{ e^{ik·r} Σ U·P·V·Q̄ } (without the 4πg²/k² weight).
#[allow(clippy::too_many_arguments)]
fn angular_sum(
    ctx: &PairContext,
    mode: ProjectorMode,
    k: f64,
    qbar: &[f64],
    cos_nodes: &[f64],
    cos_weights: &[f64],
    diff_scale_a: f64,
    diff_scale_b: f64,
) -> f64 {
    let (e1, e2, e3) = frame(ctx.r);
    let rlen = ctx.separation();
    let m = ctx.loop_a.slices_per_unit;
    let n_az = ctx.quad.azimuthal_nodes;
    let az_w = 1.0 / n_az as f64;
    let mut total = 0.0;
    for (ct, wt) in cos_nodes.iter().zip(cos_weights) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        // e^{ik·r} depends on the polar angle only (r along e3)
        let (pr_s, pr_c) = (k * rlen * ct).sin_cos();
        for ia in 0..n_az {
            let phi = 2.0 * std::f64::consts::PI * ia as f64 / n_az as f64;
            let (sp, cp) = phi.sin_cos();
            let khat = [
                st * (cp * e1[0] + sp * e2[0]) + ct * e3[0],
                st * (cp * e1[1] + sp * e2[1]) + ct * e3[1],
                st * (cp * e1[2] + sp * e2[2]) + ct * e3[2],
            ];
            let k_vec = [k * khat[0], k * khat[1], k * khat[2]];
            let u = folded_currents(ctx.loop_a, ctx.lambda_a, k_vec, -1.0, diff_scale_a);
            let v = folded_currents(ctx.loop_b, ctx.lambda_b, k_vec, 1.0, diff_scale_b);
            let p = projector(mode, khat);
            // pv[m'] = P · v[m']
            let mut pv = vec![[(0.0, 0.0); 3]; m];
            for (mm, vin) in v.iter().enumerate() {
                for i in 0..3 {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for j in 0..3 {
                        re += p[i][j] * vin[j].0;
                        im += p[i][j] * vin[j].1;
                    }
                    pv[mm][i] = (re, im);
                }
            }
            // s = Σ_{m,m'} (u_m · pv_{m'}) Q̄_{(m−m') mod M}
            let mut s_re = 0.0;
            let mut s_im = 0.0;
            for (mi, um) in u.iter().enumerate() {
                for (mj, pvm) in pv.iter().enumerate() {
                    let d = (mi + m - mj) % m;
                    let q = qbar[d];
                    for c in 0..3 {
                        let (ar, ai) = um[c];
                        let (br, bi) = pvm[c];
                        s_re += q * (ar * br - ai * bi);
                        s_im += q * (ar * bi + ai * br);
                    }
                }
            }
            // multiply by e^{ik·r} and keep the real part
            total += wt * az_w * (pr_c * s_re - pr_s * s_im);
        }
    }
    total
}

fn w_magnetic_inner(
    ctx: &PairContext,
    mode: ProjectorMode,
    diff_scale_a: f64,
    diff_scale_b: f64,
) -> Result<WmValue> {
    ctx.check()?;
    let m = ctx.loop_a.slices_per_unit;
    let (cos_nodes, cos_weights) = gauss_legendre(ctx.quad.polar_nodes);
    let k_max = ctx.quad.k_max_factor * ctx.form_factor.k_cut();
    let integrand = |k: f64| -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let g2 = ctx.form_factor.squared(k);
        if g2 == 0.0 {
            return 0.0;
        }
        let qbar = q_kernel_slice_avg(ctx.lambda_ph * k, m).expect("valid kernel arguments");
        let ang = angular_sum(
            ctx,
            mode,
            k,
            &qbar,
            &cos_nodes,
            &cos_weights,
            diff_scale_a,
            diff_scale_b,
        );
        // d³k/(2π)³ → k²/(2π)³ · (2π dφ-normalized · dcosθ); azimuth weight
        // already averaged (×2π here), times 4π g²/k².
        let measure = k * k / (8.0 * std::f64::consts::PI.powi(3)) * 2.0 * std::f64::consts::PI;
        measure * 4.0 * std::f64::consts::PI * g2 / (k * k) * ang
    };
    let res = adaptive_gk(integrand, 0.0, k_max, ctx.quad.radial_tol, ctx.quad.radial_max_depth)?;
    if !res.value.is_finite() {
        return Err(Error::NonFinite { context: "w_magnetic k-integral".into() });
    }
    Ok(WmValue { value: res.value, quad_error: res.error })
}

/// Reduced effective magnetic potential Ŵ_m = β√(m_a m_b)c²·W_m between two
/// loops (r may be zero for the self term), with the projector of `mode`
/// inserted (physical value: [`ProjectorMode::Transverse`]).
pub fn w_magnetic(ctx: &PairContext, mode: ProjectorMode) -> Result<WmValue> {
    w_magnetic_inner(ctx, mode, 1.0, 1.0)
}

/// Independently coded classical-field evaluator: the Q ≡ 1 limit, where the
/// τ contraction factorizes into the product of the two total loop currents
/// ∮dX e^{∓ik·λX}. Serves as a cross-check for [`w_magnetic`] at λ_ph = 0.
pub fn w_magnetic_classical(ctx: &PairContext, mode: ProjectorMode) -> Result<WmValue> {
    ctx.check()?;
    let (cos_nodes, cos_weights) = gauss_legendre(ctx.quad.polar_nodes);
    let (e1, e2, e3) = frame(ctx.r);
    let rlen = ctx.separation();
    let k_max = ctx.quad.k_max_factor * ctx.form_factor.k_cut();
    let n_az = ctx.quad.azimuthal_nodes;
    let integrand = |k: f64| -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let g2 = ctx.form_factor.squared(k);
        if g2 == 0.0 {
            return 0.0;
        }
        let mut ang = 0.0;
        for (ct, wt) in cos_nodes.iter().zip(cos_weights.iter()) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            let (pr_s, pr_c) = (k * rlen * ct).sin_cos();
            for ia in 0..n_az {
                let phi = 2.0 * std::f64::consts::PI * ia as f64 / n_az as f64;
                let (sp, cp) = phi.sin_cos();
                let khat = [
                    st * (cp * e1[0] + sp * e2[0]) + ct * e3[0],
                    st * (cp * e1[1] + sp * e2[1]) + ct * e3[1],
                    st * (cp * e1[2] + sp * e2[2]) + ct * e3[2],
                ];
                let k_vec = [k * khat[0], k * khat[1], k * khat[2]];
                // total currents J_a^μ = Σ_j ΔX_j e^{−ik·λ_a X}, J_b with +i
                let mut ja = [(0.0, 0.0); 3];
                for j in 0..ctx.loop_a.steps() {
                    let ph = -ctx.lambda_a * dot(k_vec, ctx.loop_a.midpoint(j));
                    let (s, c) = ph.sin_cos();
                    let dx = ctx.loop_a.increment(j);
                    for comp in 0..3 {
                        ja[comp].0 += dx[comp] * c;
                        ja[comp].1 += dx[comp] * s;
                    }
                }
                let mut jb = [(0.0, 0.0); 3];
                for j in 0..ctx.loop_b.steps() {
                    let ph = ctx.lambda_b * dot(k_vec, ctx.loop_b.midpoint(j));
                    let (s, c) = ph.sin_cos();
                    let dx = ctx.loop_b.increment(j);
                    for comp in 0..3 {
                        jb[comp].0 += dx[comp] * c;
                        jb[comp].1 += dx[comp] * s;
                    }
                }
                let p = projector(mode, khat);
                let mut s_re = 0.0;
                let mut s_im = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s_re += p[i][j] * (ja[i].0 * jb[j].0 - ja[i].1 * jb[j].1);
                        s_im += p[i][j] * (ja[i].0 * jb[j].1 + ja[i].1 * jb[j].0);
                    }
                }
                ang += wt / n_az as f64 * (pr_c * s_re - pr_s * s_im);
            }
        }
        let measure = k * k / (8.0 * std::f64::consts::PI.powi(3)) * 2.0 * std::f64::consts::PI;
        measure * 4.0 * std::f64::consts::PI * g2 / (k * k) * ang
    };
    let res = adaptive_gk(integrand, 0.0, k_max, ctx.quad.radial_tol, ctx.quad.radial_max_depth)?;
    Ok(WmValue { value: res.value, quad_error: res.error })
}

/// Discrete dipole factor D^{μν} = Δτ Σ_j ξ_a^μ ξ_b^ν − (Δτ Σ ξ_a^μ)(Δτ Σ ξ_b^ν)
/// at slice midpoints — the (δ(s−s′) − 1) double time integral.
pub fn dipole_factor(a: &LoopShape, b: &LoopShape) -> Result<[[f64; 3]; 3]> {
    if a.slices_per_unit != b.slices_per_unit || a.q != 1 || b.q != 1 {
        return Err(Error::Domain("dipole factor needs q = 1 filaments on the same grid".into()));
    }
    let m = a.slices_per_unit;
    let dtau = 1.0 / m as f64;
    let mut matched = [[0.0; 3]; 3];
    let mut mean_a = [0.0; 3];
    let mut mean_b = [0.0; 3];
    for j in 0..m {
        let pa = a.midpoint(j);
        let pb = b.midpoint(j);
        for mu in 0..3 {
            mean_a[mu] += dtau * pa[mu];
            mean_b[mu] += dtau * pb[mu];
            for nu in 0..3 {
                matched[mu][nu] += dtau * pa[mu] * pb[nu];
            }
        }
    }
    let mut d = [[0.0; 3]; 3];
    for mu in 0..3 {
        for nu in 0..3 {
            d[mu][nu] = matched[mu][nu] - mean_a[mu] * mean_b[nu];
        }
    }
    Ok(d)
}

/// Asymptotic dipolar Coulomb tail for a filament pair:
/// W_c tail = (λ_a λ_b / r³) · D^{μν} (δ_{μν} − 3 r̂_μ r̂_ν), units 1/length.
pub fn w_coulomb_tail(ctx: &PairContext) -> Result<f64> {
    ctx.check()?;
    let rlen = ctx.separation();
    if rlen == 0.0 {
        return Err(Error::Domain("w_coulomb_tail needs |r| > 0".into()));
    }
    let rhat = [ctx.r[0] / rlen, ctx.r[1] / rlen, ctx.r[2] / rlen];
    let d = dipole_factor(ctx.loop_a, ctx.loop_b)?;
    let mut contract = 0.0;
    for mu in 0..3 {
        for nu in 0..3 {
            let t = (if mu == nu { 1.0 } else { 0.0 }) - 3.0 * rhat[mu] * rhat[nu];
            contract += d[mu][nu] * t;
        }
    }
    Ok(ctx.lambda_a * ctx.lambda_b * contract / (rlen * rlen * rlen))
}

/// One loop in a Gibbs configuration. `charge` is the dimensionless coupling
/// c = e√(β/ℓ) in the common length unit ℓ, so that β e e′/d = c c′/(d/ℓ);
/// `rel` is the relativistic parameter β m c².
pub struct GibbsLoop<'a> {
    pub shape: &'a LoopShape,
    pub position: [f64; 3],
    pub lambda: f64,
    pub charge: f64,
    pub rel: f64,
}

/// Total Gibbs weight (up to normalization) of a loop configuration:
/// exp[−(Σ_r c_r²(U_r + Ŵ_m(r,r)/(2 rel_r)) + Σ_{r<s} c_r c_s (V_c + Ŵ_m/√(rel_r rel_s)) + Σ_r v_ext(r))].
///
/// `v_ext` returns the dimensionless external term β V_ext for a loop.
pub fn gibbs_weight(
    loops: &[GibbsLoop],
    lambda_ph: f64,
    form_factor: FormFactor,
    quad: &QuadSpec,
    v_ext: &dyn Fn(&GibbsLoop) -> f64,
) -> Result<f64> {
    let mut exponent = 0.0;
    for (r, lr) in loops.iter().enumerate() {
        let u = self_energy(lr.shape, lr.lambda)?;
        let ctx = PairContext {
            loop_a: lr.shape,
            loop_b: lr.shape,
            r: [0.0; 3],
            lambda_a: lr.lambda,
            lambda_b: lr.lambda,
            lambda_ph,
            form_factor,
            quad: quad.clone(),
        };
        let wm_self = w_magnetic(&ctx, ProjectorMode::Transverse).map_err(|e| {
            Error::NonFinite { context: format!("self term of loop {r}: {e}") }
        })?;
        exponent += lr.charge * lr.charge * (u.value + wm_self.value / (2.0 * lr.rel));
        exponent += v_ext(lr);
        for (s, ls) in loops.iter().enumerate().skip(r + 1) {
            let sep = [
                lr.position[0] - ls.position[0],
                lr.position[1] - ls.position[1],
                lr.position[2] - ls.position[2],
            ];
            let vc = coulomb_pair(lr.shape, ls.shape, sep, lr.lambda, ls.lambda)?;
            let ctx = PairContext {
                loop_a: lr.shape,
                loop_b: ls.shape,
                r: sep,
                lambda_a: lr.lambda,
                lambda_b: ls.lambda,
                lambda_ph,
                form_factor,
                quad: quad.clone(),
            };
            let wm = w_magnetic(&ctx, ProjectorMode::Transverse).map_err(|e| {
                Error::NonFinite { context: format!("pair ({r},{s}): {e}") }
            })?;
            exponent += lr.charge
                * ls.charge
                * (vc.value + wm.value / (lr.rel * ls.rel).sqrt());
        }
    }
    if !exponent.is_finite() {
        return Err(Error::NonFinite { context: "gibbs exponent".into() });
    }
    Ok((-exponent).exp())
}

/// Test/diagnostic hook: evaluate with the line-integral differentials of
/// each loop rescaled after the phase factors are formed (bilinearity probe).
pub fn w_magnetic_scaled_differentials(
    ctx: &PairContext,
    mode: ProjectorMode,
    c_a: f64,
    c_b: f64,
) -> Result<WmValue> {
    w_magnetic_inner(ctx, mode, c_a, c_b)
}
