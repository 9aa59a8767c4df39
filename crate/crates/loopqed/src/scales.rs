//! Physical constants, species data, and the derived length-scale hierarchy.
//!
//! Three lengths control the asymptotics: the de Broglie thermal wavelength
//! `λ_mat = ħ√(β/m)`, the photon thermal wavelength `λ_ph = βħc`, and the
//! ultraviolet cutoff length `λ_cut = ħ/(m̄c)`. They obey the chain
//! `λ_cut = λ_mat/√rel` and `λ_ph = √rel·λ_mat` with `rel = βm̄c²`, so
//! `λ_cut·λ_ph = λ_mat²` whenever `m = m̄`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant, J·s (SI default; override for other unit systems).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const C_SI: f64 = 2.997_924_58e8;
/// Boltzmann constant, J/K.
pub const K_B_SI: f64 = 1.380_649e-23;

/// One particle species: mass, charge (Gaussian units), and a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub label: String,
    pub mass: f64,
    pub charge: f64,
}

impl Species {
    pub fn new(label: impl Into<String>, mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("species mass must be positive, got {mass}")));
        }
        Ok(Self { label: label.into(), mass, charge })
    }
}

/// Unit-system constants used when deriving scales from physical inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub c: f64,
}

impl UnitSystem {
    /// Natural units ħ = c = 1.
    pub const NATURAL: Self = Self { hbar: 1.0, c: 1.0 };
    /// SI constants.
    pub const SI: Self = Self { hbar: HBAR_SI, c: C_SI };
}

/// Derived scale hierarchy for a species set at inverse temperature β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    pub beta: f64,
    /// de Broglie length per species, same order as the input list.
    pub lambda_mat: Vec<f64>,
    /// Photon thermal wavelength βħc.
    pub lambda_ph: f64,
    /// Cutoff length ħ/(m̄c) for the reference mass m̄.
    pub lambda_cut: f64,
    /// Dimensionless relativistic parameter βm̄c².
    pub rel: f64,
    /// Reference mass m̄ used for λ_cut and rel.
    pub reference_mass: f64,
}

/// Choice of reference mass m̄ entering λ_cut and the relativistic parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMass {
    /// Lightest species (default: the cutoff must exclude pair creation for
    /// the most easily excited species).
    #[default]
    Lightest,
    /// Geometric mean of all species masses.
    GeometricMean,
    /// Explicit value.
    Explicit,
}

/// Derive the scale hierarchy from physical inputs.
///
/// `reference_mass` overrides the m̄ selection when `Some`; otherwise the
/// lightest species is used.
pub fn derive_scales(
    species: &[Species],
    beta: f64,
    reference_mass: Option<f64>,
    units: UnitSystem,
) -> Result<ScaleSet> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if species.is_empty() {
        return Err(Error::Domain("species list is empty".into()));
    }
    for s in species {
        if !(s.mass > 0.0) {
            return Err(Error::Domain(format!("mass of '{}' must be positive", s.label)));
        }
    }
    let m_bar = match reference_mass {
        Some(m) if m > 0.0 => m,
        Some(m) => return Err(Error::Domain(format!("reference mass must be positive, got {m}"))),
        None => species.iter().map(|s| s.mass).fold(f64::INFINITY, f64::min),
    };
    let lambda_mat = species.iter().map(|s| units.hbar * (beta / s.mass).sqrt()).collect();
    Ok(ScaleSet {
        beta,
        lambda_mat,
        lambda_ph: beta * units.hbar * units.c,
        lambda_cut: units.hbar / (m_bar * units.c),
        rel: beta * m_bar * units.c * units.c,
        reference_mass: m_bar,
    })
}

impl ScaleSet {
    /// λ_mat of the reference species, ħ√(β/m̄).
    pub fn lambda_mat_ref(&self) -> f64 {
        // λ_cut·λ_ph = λ_mat² for m = m̄, so the geometric mean recovers it.
        (self.lambda_cut * self.lambda_ph).sqrt()
    }

    /// Dimensionless ratios (λ_mat/r per species, λ_ph/r, λ_cut/r).
    pub fn ratios(&self, r: f64) -> (Vec<f64>, f64, f64) {
        (
            self.lambda_mat.iter().map(|l| l / r).collect(),
            self.lambda_ph / r,
            self.lambda_cut / r,
        )
    }
}

/// Ultraviolet form factor g(k).
///
/// `Gaussian` uses the convention g(k) = exp(−k²/(2k_cut²)); `Sharp` is the
/// indicator of k ≤ k_cut (Appendix-style restriction of the integration
/// domain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FormFactor {
    Gaussian { k_cut: f64 },
    Sharp { k_cut: f64 },
}

impl FormFactor {
    pub fn k_cut(&self) -> f64 {
        match *self {
            FormFactor::Gaussian { k_cut } | FormFactor::Sharp { k_cut } => k_cut,
        }
    }

    /// Evaluate g(k). Errors on negative k.
    pub fn eval(&self, k: f64) -> Result<f64> {
        if k < 0.0 {
            return Err(Error::Domain(format!("form factor requires k ≥ 0, got {k}")));
        }
        Ok(self.eval_unchecked(k))
    }

    /// Evaluate g(k) assuming k ≥ 0.
    #[inline]
    pub fn eval_unchecked(&self, k: f64) -> f64 {
        match *self {
            FormFactor::Gaussian { k_cut } => {
                let x = k / k_cut;
                (-0.5 * x * x).exp()
            }
            FormFactor::Sharp { k_cut } => {
                if k <= k_cut {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// g²(k), the combination entering every photon-mediated integral.
    #[inline]
    pub fn squared(&self, k: f64) -> f64 {
        let g = self.eval_unchecked(k);
        g * g
    }
}

/// Asymptotic regime of a pair separation r relative to the scale hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// λ_mat ≪ λ_ph ≪ r: photon screening active.
    BeyondPhoton,
    /// λ_mat ≪ r ≪ λ_ph: electrostatic dominance.
    SubPhoton,
    /// Neither separation of scales holds at the configured threshold.
    NonAsymptotic,
}

/// Classify r against the hierarchy using `threshold` as the "≪" ratio
/// cutoff (default 10 in callers).
pub fn regime_classify(r: f64, scales: &ScaleSet, threshold: f64) -> Regime {
    let lam_mat = scales.lambda_mat_ref();
    let lam_ph = scales.lambda_ph;
    if r >= threshold * lam_ph && lam_ph >= threshold * lam_mat {
        Regime::BeyondPhoton
    } else if lam_ph >= threshold * r && r >= threshold * lam_mat {
        Regime::SubPhoton
    } else {
        Regime::NonAsymptotic
    }
}
