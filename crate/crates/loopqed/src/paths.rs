//! Closed Brownian loops (bridges) and stochastic line integrals.
//!
//! A loop of extent `q` is a 3D Brownian bridge X(τ) on τ ∈ [0, q] with
//! X(0) = X(q) = 0 and per-component covariance
//!
//! `⟨X(τ) X(τ′)⟩ = min(τ, τ′) − ττ′/q`.
//!
//! Discretely the bridge lives on a grid of `slices_per_unit` points per unit
//! of τ (step Δτ = 1/slices_per_unit). Stochastic line integrals use the
//! midpoint rule, which fixes the equal-time convention θ(0) = 1/2 in the
//! mixed covariance ⟨dX(τ) X(τ′)⟩ = [θ(τ′−τ) − τ′/q] dτ — the choice under
//! which quadratic (gradient) contributions close exactly around the loop.
//!
//! Sampling is deterministic and order-independent: each sample index gets
//! its own counter-seeded ChaCha12 stream, so parallel and sequential
//! evaluation produce bit-identical estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// A discretized closed loop: `q·slices_per_unit + 1` points with the last
/// equal to the first.
#[derive(Debug, Clone)]
pub struct LoopShape {
    /// Loop extent in units of β (number of unit intervals).
    pub q: usize,
    /// Grid resolution M: slices per unit of imaginary time.
    pub slices_per_unit: usize,
    /// Vertex positions; `points[0] == points[q·M]`.
    pub points: Vec<[f64; 3]>,
}

impl LoopShape {
    /// Number of increments (slices) in the loop.
    pub fn steps(&self) -> usize {
        self.q * self.slices_per_unit
    }

    /// Time step Δτ = 1 / slices_per_unit.
    pub fn dtau(&self) -> f64 {
        1.0 / self.slices_per_unit as f64
    }

    /// Grid time τ_j of vertex j.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dtau()
    }

    /// Increment ΔX_j = X_{j+1} − X_j.
    pub fn increment(&self, j: usize) -> [f64; 3] {
        let a = self.points[j];
        let b = self.points[j + 1];
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    }

    /// Spatial midpoint of slice j.
    pub fn midpoint(&self, j: usize) -> [f64; 3] {
        let a = self.points[j];
        let b = self.points[j + 1];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
    }

    /// Midpoint time τ̄_j of slice j.
    pub fn midtime(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dtau()
    }

    /// Keep every `factor`-th vertex, producing the same bridge on a coarser
    /// grid. `factor` must divide `slices_per_unit`.
    pub fn coarsen(&self, factor: usize) -> Result<LoopShape> {
        if factor == 0 || self.slices_per_unit % factor != 0 {
            return Err(Error::Domain(format!(
                "coarsening factor {factor} must divide slices_per_unit {}",
                self.slices_per_unit
            )));
        }
        let points = self.points.iter().step_by(factor).copied().collect();
        Ok(LoopShape { q: self.q, slices_per_unit: self.slices_per_unit / factor, points })
    }
}

/// Deterministic per-sample random stream: seed and sample index are mixed
/// through a splitmix64 chain into a 256-bit ChaCha12 key.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut s = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for chunk in key.chunks_exact_mut(8) {
        s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Sample a closed bridge of extent `q` on `slices_per_unit` slices per unit:
/// free Gaussian increments of variance Δτ per component, with the endpoint
/// mismatch subtracted uniformly so the pinning X(q) = X(0) = 0 is exact.
pub fn sample_bridge(
    q: usize,
    slices_per_unit: usize,
    rng: &mut impl Rng,
) -> Result<LoopShape> {
    if q == 0 || slices_per_unit < 2 {
        return Err(Error::Domain(format!(
            "bridge needs q ≥ 1 and slices_per_unit ≥ 2 (got q={q}, M={slices_per_unit})"
        )));
    }
    let n = q * slices_per_unit;
    let dtau = 1.0 / slices_per_unit as f64;
    let sd = dtau.sqrt();
    let mut incr = vec![[0.0f64; 3]; n];
    let mut total = [0.0f64; 3];
    for step in incr.iter_mut() {
        for c in 0..3 {
            let g: f64 = rng.sample(StandardNormal);
            step[c] = sd * g;
            total[c] += step[c];
        }
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut x = [0.0f64; 3];
    points.push(x);
    for step in &incr {
        for c in 0..3 {
            x[c] += step[c] - total[c] / n as f64;
        }
        points.push(x);
    }
    // enforce exact closure against rounding drift
    let last = points.len() - 1;
    points[last] = points[0];
    Ok(LoopShape { q, slices_per_unit, points })
}

/// Continuum bridge covariance per component: min(τ, τ′) − ττ′/q.
pub fn covariance_oracle(q: f64, t1: f64, t2: f64) -> f64 {
    t1.min(t2) - t1 * t2 / q
}

/// Discrete increment covariance per component:
/// ⟨ΔX_j ΔX_k⟩ = Δτ δ_{jk} − Δτ²/q (the δ-function regularized on the grid).
pub fn increment_covariance_oracle(q: f64, dtau: f64, j: usize, k: usize) -> f64 {
    let kron = if j == k { dtau } else { 0.0 };
    kron - dtau * dtau / q
}

/// Discrete mixed covariance ⟨ΔX_j X(τ̄_k)⟩ at slice midpoints:
/// Δτ·[θ(τ̄_k − τ̄_j) − τ̄_k/q] with θ(0) = 1/2 — the midpoint-rule value.
pub fn mixed_covariance_oracle(q: f64, dtau: f64, j: usize, k: usize) -> f64 {
    let theta = match j.cmp(&k) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    };
    let tbar_k = (k as f64 + 0.5) * dtau;
    dtau * (theta - tbar_k / q)
}

/// Midpoint-rule stochastic line integral ∮ F(X(τ), τ)·dX of a vector field
/// over the loop, optionally rigidly shifted by `offset`.
pub fn line_integral_midpoint<F>(shape: &LoopShape, offset: [f64; 3], field: F) -> f64
where
    F: Fn([f64; 3], f64) -> [f64; 3],
{
    let mut sum = 0.0;
    for j in 0..shape.steps() {
        let m = shape.midpoint(j);
        let pos = [m[0] + offset[0], m[1] + offset[1], m[2] + offset[2]];
        let f = field(pos, shape.midtime(j));
        let dx = shape.increment(j);
        sum += f[0] * dx[0] + f[1] * dx[1] + f[2] * dx[2];
    }
    sum
}

/// Midpoint-rule signed (Lévy) area of the loop projected on the
/// (axis1, axis2) plane: (1/2) ∮ (x dy − y dx).
pub fn signed_area(shape: &LoopShape, axis1: usize, axis2: usize) -> f64 {
    let mut a = 0.0;
    for j in 0..shape.steps() {
        let m = shape.midpoint(j);
        let dx = shape.increment(j);
        a += m[axis1] * dx[axis2] - m[axis2] * dx[axis1];
    }
    0.5 * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinning_is_exact() {
        let mut rng = sample_rng(7, 0);
        for q in [1usize, 3] {
            let shape = sample_bridge(q, 32, &mut rng).unwrap();
            assert_eq!(shape.points.len(), q * 32 + 1);
            let first = shape.points[0];
            let last = *shape.points.last().unwrap();
            assert_eq!(first, last);
            assert_eq!(first, [0.0; 3]);
        }
        assert!(sample_bridge(0, 32, &mut rng).is_err());
        assert!(sample_bridge(1, 1, &mut rng).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_independent() {
        let a1 = sample_bridge(1, 16, &mut sample_rng(42, 5)).unwrap();
        let a2 = sample_bridge(1, 16, &mut sample_rng(42, 5)).unwrap();
        assert_eq!(a1.points, a2.points);
        let b = sample_bridge(1, 16, &mut sample_rng(42, 6)).unwrap();
        assert_ne!(a1.points, b.points);
        let c = sample_bridge(1, 16, &mut sample_rng(43, 5)).unwrap();
        assert_ne!(a1.points, c.points);
    }

    /// Empirical covariance of the sampled bridge against the min − ττ′/q
    /// oracle, within three standard errors.
    #[test]
    fn covariance_matches_oracle() {
        let q = 2usize;
        let m = 16usize;
        let n_samples = 4000usize;
        let probes = [(5usize, 5usize), (5, 20), (12, 27), (3, 30)];
        let mut acc = [0.0f64; 4];
        let mut acc2 = [0.0f64; 4];
        for s in 0..n_samples {
            let shape = sample_bridge(q, m, &mut sample_rng(2024, s as u64)).unwrap();
            for (p, &(i, j)) in probes.iter().enumerate() {
                // average the three components for variance reduction
                let v: f64 = (0..3)
                    .map(|c| shape.points[i][c] * shape.points[j][c])
                    .sum::<f64>()
                    / 3.0;
                acc[p] += v;
                acc2[p] += v * v;
            }
        }
        for (p, &(i, j)) in probes.iter().enumerate() {
            let mean = acc[p] / n_samples as f64;
            let var = acc2[p] / n_samples as f64 - mean * mean;
            let se = (var / n_samples as f64).sqrt();
            let t1 = i as f64 / m as f64;
            let t2 = j as f64 / m as f64;
            let oracle = covariance_oracle(q as f64, t1, t2);
            assert!(
                (mean - oracle).abs() < 3.0 * se + 1e-12,
                "probe ({i},{j}): {mean} vs {oracle} ± {se}"
            );
        }
    }

    /// The discrete increment and mixed covariances follow the regularized
    /// δ − 1/q and θ − τ′/q forms, with θ(0) = 1/2 at equal slices.
    #[test]
    fn increment_and_mixed_covariances() {
        let q = 1usize;
        let m = 8usize;
        let dtau = 1.0 / m as f64;
        let n_samples = 6000usize;
        let pairs = [(2usize, 2usize), (2, 5), (6, 1)];
        let mut inc_acc = vec![(0.0f64, 0.0f64); pairs.len()];
        let mut mix_acc = vec![(0.0f64, 0.0f64); pairs.len()];
        for s in 0..n_samples {
            let shape = sample_bridge(q, m, &mut sample_rng(99, s as u64)).unwrap();
            for (p, &(j, k)) in pairs.iter().enumerate() {
                let dj = shape.increment(j);
                let dk = shape.increment(k);
                let mk = shape.midpoint(k);
                let inc: f64 = (0..3).map(|c| dj[c] * dk[c]).sum::<f64>() / 3.0;
                let mix: f64 = (0..3).map(|c| dj[c] * mk[c]).sum::<f64>() / 3.0;
                inc_acc[p].0 += inc;
                inc_acc[p].1 += inc * inc;
                mix_acc[p].0 += mix;
                mix_acc[p].1 += mix * mix;
            }
        }
        for (p, &(j, k)) in pairs.iter().enumerate() {
            let check = |(sum, sum2): (f64, f64), oracle: f64, what: &str| {
                let mean = sum / n_samples as f64;
                let var = sum2 / n_samples as f64 - mean * mean;
                let se = (var / n_samples as f64).sqrt();
                assert!(
                    (mean - oracle).abs() < 3.5 * se + 1e-12,
                    "{what} ({j},{k}): {mean} vs {oracle} ± {se}"
                );
            };
            check(inc_acc[p], increment_covariance_oracle(q as f64, dtau, j, k), "incr");
            check(mix_acc[p], mixed_covariance_oracle(q as f64, dtau, j, k), "mixed");
        }
    }

    /// Midpoint signed-area variance against an exact discrete Wick oracle
    /// built from the bridge covariance.
    #[test]
    fn signed_area_variance_wick_oracle() {
        let q = 1usize;
        let m = 24usize;
        let dtau = 1.0 / m as f64;
        // Wick on A = (1/2)Σ(x̄ Δy − ȳ Δx) with independent x, y components:
        // Var A = (1/2)[Σ_{jk} C̄_{jk} D_{jk} − Σ_{jk} G_{jk} G_{kj}], where
        // C̄ is the midpoint-position covariance, D the increment covariance,
        // and G_{jk} = ⟨x̄_j Δx_k⟩ the same-component mixed covariance.
        let t = |i: usize| i as f64 * dtau;
        let c = |a: f64, b: f64| covariance_oracle(q as f64, a, b);
        let midcov = |j: usize, k: usize| -> f64 {
            0.25 * (c(t(j), t(k))
                + c(t(j), t(k + 1))
                + c(t(j + 1), t(k))
                + c(t(j + 1), t(k + 1)))
        };
        // ⟨X_i ΔX_k⟩ = Δτ·1_{i ≥ k+1} − Δτ·t_i/q
        let vert_inc = |i: usize, k: usize| -> f64 {
            (if i >= k + 1 { dtau } else { 0.0 }) - dtau * t(i) / q as f64
        };
        let mixed = |j: usize, k: usize| 0.5 * (vert_inc(j, k) + vert_inc(j + 1, k));
        let mut oracle = 0.0;
        for j in 0..m {
            for k in 0..m {
                oracle += midcov(j, k) * increment_covariance_oracle(q as f64, dtau, j, k)
                    - mixed(j, k) * mixed(k, j);
            }
        }
        oracle *= 0.5;
        let n_samples = 8000usize;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for s in 0..n_samples {
            let shape = sample_bridge(q, m, &mut sample_rng(7777, s as u64)).unwrap();
            let a = signed_area(&shape, 0, 1);
            s1 += a * a;
            s2 += a * a * a * a;
        }
        let mean = s1 / n_samples as f64;
        let var = s2 / n_samples as f64 - mean * mean;
        let se = (var / n_samples as f64).sqrt();
        assert!(
            (mean - oracle).abs() < 3.0 * se,
            "⟨A²⟩ = {mean} vs Wick oracle {oracle} ± {se}"
        );
    }

    /// Closed-loop midpoint integrals of gradient fields: exact for quadratic
    /// potentials, O(1/M) RMS for cubic ones.
    #[test]
    fn gradient_fields_close() {
        // ∇(|x|²/2) = x: midpoint rule telescopes exactly
        let shape = sample_bridge(1, 64, &mut sample_rng(1, 0)).unwrap();
        let v = line_integral_midpoint(&shape, [0.0; 3], |x, _| x);
        assert!(v.abs() < 1e-12, "quadratic gradient loop integral {v}");

        // ∇(x³/3) = x²ê_x: RMS error scales like 1/M
        let rms = |m: usize, n: usize| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                let shape = sample_bridge(1, m, &mut sample_rng(55, i as u64)).unwrap();
                let v = line_integral_midpoint(&shape, [0.0; 3], |x, _| [x[0] * x[0], 0.0, 0.0]);
                s += v * v;
            }
            (s / n as f64).sqrt()
        };
        let r16 = rms(16, 600);
        let r64 = rms(64, 600);
        let ratio = r16 / r64;
        assert!(ratio > 2.5 && ratio < 6.5, "RMS ratio {ratio}, expected ≈ 4");
    }

    #[test]
    fn coarsening_keeps_endpoints() {
        let shape = sample_bridge(2, 32, &mut sample_rng(3, 3)).unwrap();
        let coarse = shape.coarsen(4).unwrap();
        assert_eq!(coarse.slices_per_unit, 8);
        assert_eq!(coarse.points.len(), 2 * 8 + 1);
        assert_eq!(coarse.points[0], shape.points[0]);
        assert_eq!(coarse.points[4], shape.points[16]);
        assert!(shape.coarsen(5).is_err());
    }
}
