//! Experiment harness: configuration, Monte Carlo estimators, scans, and
//! artifact emission (CSV + JSON with a provenance block).
//!
//! All estimators draw per-sample counter-seeded random streams and reduce
//! in fixed index order, so outputs are bit-identical across reruns and
//! worker counts. Column layouts of the emitted CSV files are documented in
//! `schema/csv_columns.md` at the repository root.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::asymptotics::{
    self, constant_a, constant_a_radial, f_big, wm_quantum_correction, TailReport, TensorVariant,
};
use crate::kernels;
use crate::par;
use crate::paths::{covariance_oracle, sample_bridge, sample_rng, LoopShape};
use crate::potentials::{w_coulomb_tail, w_magnetic, PairContext, ProjectorMode, QuadSpec};
use crate::scales::{FormFactor, Regime};
use crate::{Error, Result};

/// Known experiment names, also accepted as per-experiment config sections.
pub const EXPERIMENTS: &[&str] = &[
    "kernels-suite",
    "bridge-suite",
    "wc2",
    "wm2",
    "cancellation-scan",
    "constant-A",
    "normal-order",
];

fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1000
}
fn default_slices() -> usize {
    64
}
fn default_r_grid() -> Vec<f64> {
    vec![1.0]
}
fn default_lambda() -> f64 {
    1e-3
}
fn default_lambda_ph() -> f64 {
    100.0
}
fn default_form_factor() -> FormFactor {
    FormFactor::Gaussian { k_cut: 1.0 }
}
fn default_threshold() -> f64 {
    10.0
}

/// One experiment's full configuration. Lengths are in the common internal
/// unit (dimensionless ratios); physical inputs, when desired, are reduced
/// to these ratios before they reach the config.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monte Carlo sample count N.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Slices per unit of imaginary time, M.
    #[serde(default = "default_slices")]
    pub slices: usize,
    /// Loop separations, strictly positive and ascending.
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda_a: f64,
    #[serde(default = "default_lambda")]
    pub lambda_b: f64,
    #[serde(default = "default_lambda_ph")]
    pub lambda_ph: f64,
    #[serde(default = "default_form_factor")]
    pub form_factor: FormFactor,
    #[serde(default)]
    pub quad: QuadSpec,
    /// Output directory for artifacts. Excluded from the fingerprint (and
    /// hence from serialization, which only feeds the fingerprint): where
    /// results land does not change what they are.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Scale-separation threshold for regime tagging.
    #[serde(default = "default_threshold")]
    pub regime_threshold: f64,
    /// Tensor contraction variant for the A-dependent predictions.
    #[serde(default = "default_tensor_variant")]
    pub tensor_variant: TensorVariant,
}

fn default_tensor_variant() -> TensorVariant {
    TensorVariant::Derived
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::UnknownExperiment(self.experiment.clone()));
        }
        if self.samples < 1 {
            return Err(Error::Config("samples must be ≥ 1".into()));
        }
        if self.slices < 2 {
            return Err(Error::Config("slices must be ≥ 2".into()));
        }
        if self.r_grid.is_empty() {
            return Err(Error::Config("r_grid must not be empty".into()));
        }
        for w in self.r_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config("r_grid must be strictly ascending".into()));
            }
        }
        if !(self.r_grid[0] > 0.0) {
            return Err(Error::Config("r_grid entries must be positive".into()));
        }
        if self.lambda_a < 0.0 || self.lambda_b < 0.0 || !(self.lambda_ph >= 0.0) {
            return Err(Error::Config("λ scales must be ≥ 0".into()));
        }
        if !(self.regime_threshold > 1.0) {
            return Err(Error::Config("regime_threshold must exceed 1".into()));
        }
        self.quad.validate()
    }

    /// Canonical SHA-256 fingerprint (first 16 hex digits) of the config:
    /// serialized to JSON with recursively sorted object keys, so the value
    /// is independent of field ordering in the source file.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let value = serde_json::to_value(self).expect("config serializes");
        let mut canon = String::new();
        write_canonical(&value, &mut canon);
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn write_canonical(v: &serde_json::Value, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            let mut keys: Vec<_> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{k:?}:"));
                write_canonical(&map[*k], out);
            }
            out.push('}');
        }
        serde_json::Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Parse a config file: top-level keys are shared defaults; a table named
/// after an experiment overrides them for that experiment. The experiment
/// actually run is the `experiment` key (or the CLI positional argument).
pub fn parse_config(text: &str, experiment_override: Option<&str>) -> Result<ExperimentConfig> {
    let root: toml::Table =
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
    let mut base = toml::Table::new();
    let mut sections: Vec<(String, toml::Table)> = Vec::new();
    for (k, v) in root {
        match v {
            toml::Value::Table(t) if EXPERIMENTS.contains(&k.as_str()) => {
                sections.push((k, t));
            }
            other => {
                base.insert(k, other);
            }
        }
    }
    if let Some(name) = experiment_override {
        base.insert("experiment".into(), toml::Value::String(name.into()));
    }
    let experiment = base
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config("missing experiment name".into()))?
        .to_string();
    if let Some((_, overrides)) = sections.into_iter().find(|(k, _)| *k == experiment) {
        for (k, v) in overrides {
            base.insert(k, v);
        }
    }
    let cfg: ExperimentConfig = toml::Value::Table(base)
        .try_into()
        .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub value: f64,
    pub se: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub fingerprint: String,
}

impl EstimateRecord {
    fn new(cfg: &ExperimentConfig, quantity: &str, value: f64, se: f64) -> Self {
        debug_assert!(se >= 0.0);
        EstimateRecord {
            quantity: quantity.into(),
            value,
            se,
            n: cfg.samples,
            m: cfg.slices,
            seed: cfg.seed,
            fingerprint: cfg.fingerprint(),
        }
    }
}

fn pair_context<'a>(
    cfg: &ExperimentConfig,
    a: &'a LoopShape,
    b: &'a LoopShape,
    r: f64,
) -> PairContext<'a> {
    PairContext {
        loop_a: a,
        loop_b: b,
        r: [0.0, 0.0, r],
        lambda_a: cfg.lambda_a,
        lambda_b: cfg.lambda_b,
        lambda_ph: cfg.lambda_ph,
        form_factor: cfg.form_factor,
        quad: cfg.quad.clone(),
    }
}

/// Exact discrete second moment of the dipolar tail contraction for unit
/// λ_a = λ_b = r: ⟨(D:T)²⟩ = ‖T‖²·Σ_{jk}(wᵀCw)_{jk}C_{jk}, computed in
/// O(M²) from the midpoint covariance; the continuum limit is 6/720 = 1/120.
pub fn discrete_tail_second_moment(m: usize) -> f64 {
    let dtau = 1.0 / m as f64;
    let midcov = |j: usize, k: usize| -> f64 {
        let t = |i: usize| i as f64 * dtau;
        let c = |x: f64, y: f64| covariance_oracle(1.0, x, y);
        0.25 * (c(t(j), t(k)) + c(t(j), t(k + 1)) + c(t(j + 1), t(k)) + c(t(j + 1), t(k + 1)))
    };
    let mut cmat = vec![0.0; m * m];
    let mut col_sum = vec![0.0; m];
    let mut total = 0.0;
    for j in 0..m {
        for k in 0..m {
            let v = midcov(j, k);
            cmat[j * m + k] = v;
            col_sum[k] += v;
            total += v;
        }
    }
    // (wᵀCw)_{jk} = Δτ²C_{jk} − Δτ³(row_j + col_k) + Δτ⁴·total, rows = cols
    // by symmetry of C
    let mut quad_form = 0.0;
    for j in 0..m {
        for k in 0..m {
            let b = dtau * dtau * cmat[j * m + k]
                - dtau.powi(3) * (col_sum[j] + col_sum[k])
                + dtau.powi(4) * total;
            quad_form += b * cmat[j * m + k];
        }
    }
    6.0 * quad_form
}

/// MC estimate of ⟨[w_coulomb_tail]²⟩ at the first r-grid point.
pub fn estimate_wc_sq(cfg: &ExperimentConfig) -> Result<EstimateRecord> {
    cfg.validate()?;
    let r = cfg.r_grid[0];
    let m = cfg.slices;
    let values = par::map_samples(cfg.samples, |i| {
        let mut rng = sample_rng(cfg.seed, i as u64);
        let a = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
        let b = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
        let ctx = pair_context(cfg, &a, &b, r);
        let v = w_coulomb_tail(&ctx).expect("valid tail context");
        v * v
    });
    let (mean, se) = par::mean_and_se(&values);
    Ok(EstimateRecord::new(cfg, "wc_sq", mean, se))
}

/// MC + deterministic estimate of the reduced ⟨Ŵ_m²⟩.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WmSqEstimate {
    pub record: EstimateRecord,
    /// Deterministic (C.1)/(C.3) evaluation at the same discretization
    /// (λ → 0 limit, matched Gaussian damping), when the form factor is
    /// Gaussian.
    pub deterministic: Option<f64>,
    /// Quadrature failures among the N samples (> 1% aborts).
    pub failures: usize,
    /// Additive error budget: quadrature + discretization (M vs 2M of the
    /// deterministic branch) + 3·SE.
    pub budget: f64,
}

/// MC mean/SE of [w_magnetic]² over N pairs, with the deterministic
/// cross-check value computed by the (C.3)+(C.4) pipeline on the same grid.
pub fn estimate_wm_sq(cfg: &ExperimentConfig) -> Result<WmSqEstimate> {
    cfg.validate()?;
    let r = cfg.r_grid[0];
    let m = cfg.slices;
    let outcomes = par::map_samples(cfg.samples, |i| {
        let mut rng = sample_rng(cfg.seed, i as u64);
        let a = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
        let b = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
        let ctx = pair_context(cfg, &a, &b, r);
        match w_magnetic(&ctx, ProjectorMode::Transverse) {
            Ok(v) => (v.value * v.value, v.quad_error.abs() * 2.0 * v.value.abs(), true),
            Err(_) => (0.0, 0.0, false),
        }
    });
    let failures = outcomes.iter().filter(|o| !o.2).count();
    if failures * 100 > cfg.samples {
        return Err(Error::Quadrature { requested: 0.01, achieved: failures as f64 / cfg.samples as f64 });
    }
    let good: Vec<f64> = outcomes.iter().filter(|o| o.2).map(|o| o.0).collect();
    let quad_err: f64 =
        outcomes.iter().filter(|o| o.2).map(|o| o.1).sum::<f64>() / good.len().max(1) as f64;
    let (mean, se) = par::mean_and_se(&good);
    let record = EstimateRecord::new(cfg, "wm_sq", mean, se);
    let (deterministic, disc_err) = match cfg.form_factor {
        FormFactor::Gaussian { k_cut } => {
            let x = cfg.lambda_ph / r;
            let kappa = r * k_cut / std::f64::consts::SQRT_2;
            let v_m =
                f_big(x, kappa, cfg.tensor_variant, &cfg.quad, Some(m))? / (r * r);
            let v_2m =
                f_big(x, kappa, cfg.tensor_variant, &cfg.quad, Some(2 * m))? / (r * r);
            (Some(v_m), (v_m - v_2m).abs())
        }
        _ => (None, 0.0),
    };
    let budget = quad_err + disc_err + 3.0 * se;
    Ok(WmSqEstimate { record, deterministic, failures, budget })
}

fn classify(r: f64, lambda_mat: f64, lambda_ph: f64, threshold: f64) -> Regime {
    if r >= threshold * lambda_ph && lambda_ph >= threshold * lambda_mat {
        Regime::BeyondPhoton
    } else if lambda_ph >= threshold * r && r >= threshold * lambda_mat {
        Regime::SubPhoton
    } else {
        Regime::NonAsymptotic
    }
}

/// Per-r cancellation bookkeeping: rms dipolar coefficients of the Coulomb
/// tail and the W_m quantum correction (the latter signed negative, since
/// the correction opposes the tail sample by sample), the per-sample
/// residual rms as error estimate, and the (8.14) magnitude ratio r/λ_ph.
pub fn run_cancellation_scan(cfg: &ExperimentConfig) -> Result<Vec<TailReport>> {
    cfg.validate()?;
    let m = cfg.slices;
    let lambda_mat = cfg.lambda_a.max(cfg.lambda_b);
    let mut reports = Vec::with_capacity(cfg.r_grid.len());
    for (ri, &r) in cfg.r_grid.iter().enumerate() {
        let sums = par::map_samples(cfg.samples, |i| {
            let mut rng = sample_rng(cfg.seed.wrapping_add(ri as u64), i as u64);
            let a = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
            let b = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
            let ctx = pair_context(cfg, &a, &b, r);
            let r3 = r * r * r;
            let wc = r3 * w_coulomb_tail(&ctx).expect("valid tail context");
            let wm = r3 * wm_quantum_correction(&ctx).expect("valid correction context");
            [wc * wc, wm * wm, (wc + wm) * (wc + wm)]
        });
        let n = cfg.samples as f64;
        let mut acc = [0.0; 3];
        for s in &sums {
            for k in 0..3 {
                acc[k] += s[k];
            }
        }
        let wc_coeff = (acc[0] / n).sqrt();
        let wm_coeff = -(acc[1] / n).sqrt();
        let residual_rms = (acc[2] / n).sqrt();
        let regime = classify(r, lambda_mat, cfg.lambda_ph, cfg.regime_threshold);
        let mut report =
            TailReport::new(r, regime, wc_coeff, wm_coeff, residual_rms + 3.0 * wc_coeff / n.sqrt());
        report.ratio = r / cfg.lambda_ph;
        reports.push(report);
    }
    Ok(reports)
}

/// Provenance block attached to every JSON summary.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    pub fingerprint: String,
}

impl Provenance {
    fn of(cfg: &ExperimentConfig) -> Self {
        Provenance {
            experiment: cfg.experiment.clone(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            fingerprint: cfg.fingerprint(),
        }
    }
}

fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Run one experiment and write `<name>.csv` + `<name>.json` into the output
/// directory; returns the artifact paths. Validation happens before any
/// filesystem side effect.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut csv = String::new();
    let summary: serde_json::Value;
    match cfg.experiment.as_str() {
        "kernels-suite" => {
            csv.push_str("x,tau,n_k,c_even,q\n");
            let xs = [1e-3, 1e-1, 1.0, 10.0, 1e3];
            let taus = [0.0, 0.1, 0.25, 0.5];
            let mut max_jump_gap: f64 = 0.0;
            for &x in &xs {
                for &tau in &taus {
                    let ev = kernels::kernel_eval(x, tau)?;
                    csv.push_str(&format!("{x},{tau},{},{},{}\n", ev.n_k, ev.c_even, ev.q));
                }
                let jump = kernels::covariance_even(x, 0.0, kernels::EqualTime::Continuous)?
                    - kernels::covariance_even(x, 0.0, kernels::EqualTime::Discontinuous)?;
                max_jump_gap = max_jump_gap.max((jump - 0.5).abs());
            }
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "max_jump_gap": max_jump_gap,
            });
        }
        "bridge-suite" => {
            csv.push_str("t1,t2,measured,oracle,se\n");
            let m = cfg.slices;
            let probes = [(0.125, 0.5), (0.25, 0.75), (0.5, 0.5), (0.375, 0.625)];
            let mut worst_z: f64 = 0.0;
            for &(t1, t2) in &probes {
                let j1 = (t1 * m as f64) as usize;
                let j2 = (t2 * m as f64) as usize;
                let vals = par::map_samples(cfg.samples, |i| {
                    let mut rng = sample_rng(cfg.seed, i as u64);
                    let l = sample_bridge(1, m, &mut rng).expect("valid bridge parameters");
                    (l.points[j1][0] * l.points[j2][0]
                        + l.points[j1][1] * l.points[j2][1]
                        + l.points[j1][2] * l.points[j2][2])
                        / 3.0
                });
                let (mean, se) = par::mean_and_se(&vals);
                let oracle = covariance_oracle(1.0, j1 as f64 / m as f64, j2 as f64 / m as f64);
                worst_z = worst_z.max((mean - oracle).abs() / se.max(1e-300));
                csv.push_str(&format!("{t1},{t2},{mean},{oracle},{se}\n"));
            }
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "worst_z_score": worst_z,
            });
        }
        "wc2" => {
            let rec = estimate_wc_sq(cfg)?;
            let r = cfg.r_grid[0];
            let oracle_m = discrete_tail_second_moment(cfg.slices)
                * (cfg.lambda_a * cfg.lambda_b).powi(2)
                / r.powi(6);
            let oracle_2m = discrete_tail_second_moment(2 * cfg.slices)
                * (cfg.lambda_a * cfg.lambda_b).powi(2)
                / r.powi(6);
            let continuum =
                (cfg.lambda_a * cfg.lambda_b).powi(2) / (120.0 * r.powi(6));
            let budget = (oracle_m - oracle_2m).abs() + 3.0 * rec.se;
            csv.push_str("r,lambda_a_over_r,lambda_b_over_r,value,se,tolerance\n");
            csv.push_str(&format!(
                "{r},{},{},{},{},{budget}\n",
                cfg.lambda_a / r,
                cfg.lambda_b / r,
                rec.value,
                rec.se
            ));
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "record": rec,
                "discrete_oracle": oracle_m,
                "continuum_oracle": continuum,
                "budget": budget,
            });
        }
        "wm2" => {
            let est = estimate_wm_sq(cfg)?;
            let r = cfg.r_grid[0];
            csv.push_str("r,lambda_ph_over_r,value,se,tolerance\n");
            csv.push_str(&format!(
                "{r},{},{},{},{}\n",
                cfg.lambda_ph / r,
                est.record.value,
                est.record.se,
                est.budget
            ));
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "estimate": est,
            });
        }
        "cancellation-scan" => {
            let reports = run_cancellation_scan(cfg)?;
            csv.push_str("r,regime,lambda_ph_over_r,wc_coeff,wm_coeff,residual,ratio,error_estimate\n");
            for t in &reports {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    t.r,
                    serde_json::to_value(t.regime).unwrap().as_str().unwrap(),
                    cfg.lambda_ph / t.r,
                    t.wc_coeff,
                    t.wm_coeff,
                    t.residual,
                    t.ratio,
                    t.error_estimate
                ));
            }
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "reports": reports,
            });
        }
        "constant-A" => {
            csv.push_str("variant,route,value,error\n");
            let mut rows = Vec::new();
            for variant in [TensorVariant::Derived, TensorVariant::Printed] {
                let t_rep = constant_a(variant, &cfg.quad)?;
                let radial = constant_a_radial(variant, &cfg.quad)?;
                csv.push_str(&format!(
                    "{variant:?},t-representation,{},{}\n",
                    t_rep.value, t_rep.error
                ));
                csv.push_str(&format!("{variant:?},radial,{},{}\n", radial.value, radial.error));
                rows.push(serde_json::json!({
                    "variant": variant,
                    "t_representation": t_rep,
                    "radial": radial,
                    "combined_gap": (t_rep.value - radial.value).abs(),
                    "combined_error": t_rep.error + radial.error,
                }));
            }
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "results": rows,
            });
        }
        "normal-order" => {
            let species = crate::scales::Species::new("probe", 1.0, 1.0)?;
            csv.push_str("form_factor,q,d_gamma,continuous,discontinuous,gap\n");
            let mut worst_gap: f64 = 0.0;
            for ff in [
                FormFactor::Gaussian { k_cut: cfg.form_factor.k_cut() },
                FormFactor::Sharp { k_cut: cfg.form_factor.k_cut() },
            ] {
                for q in [1usize, 2] {
                    let chk = asymptotics::normal_order_check(
                        &species,
                        q,
                        1.0,
                        crate::scales::UnitSystem::NATURAL,
                        ff,
                        &cfg.quad,
                    )?;
                    worst_gap = worst_gap.max(chk.gap);
                    let tag = match ff {
                        FormFactor::Gaussian { .. } => "gaussian",
                        FormFactor::Sharp { .. } => "sharp",
                    };
                    csv.push_str(&format!(
                        "{tag},{q},{},{},{},{}\n",
                        chk.d_gamma, chk.continuous_term, chk.discontinuous_term, chk.gap
                    ));
                }
            }
            summary = serde_json::json!({
                "provenance": Provenance::of(cfg),
                "worst_gap": worst_gap,
            });
        }
        other => return Err(Error::UnknownExperiment(other.into())),
    }
    std::fs::create_dir_all(&out_dir)?;
    let stem = cfg.experiment.clone();
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    write_artifact(&csv_path, &csv)?;
    write_artifact(&json_path, &format!("{:#}\n", summary))?;
    Ok(vec![csv_path, json_path])
}
