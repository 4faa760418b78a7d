//! Command implementations. Each builds an [`Artifacts`] bundle; nothing is
//! written here.

use std::collections::BTreeMap;

use clap::ValueEnum;
use dirac_core::bc::{BoundaryCondition, GeneralBc};
use dirac_core::feshbach::{basic_equation_residual, theorem3_ratio, FeshbachReducer, SMatrix, Theorem3Row};
use dirac_core::operator::{GalerkinMatrix, Parity};
use dirac_core::potential::{check_submultiplicative, decay_fit, h_omega_norm, DecayFit, FourierPotential, Weight};
use dirac_core::prooflab::{inequality_suite, m_threshold, Check, InequalityReport, Regime};
use dirac_core::riesz::{beta_ratio_test, riesz_criterion, with_beta};
use dirac_core::spectral::{build_spectral_table_with, galerkin_for_range, resolution_floor, SpectralTable};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::output::{sha256_hex, Artifacts};
use crate::svg::{scatter, Scatter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Deviations,
    Feshbach,
    Theorem3,
    Riesz,
    Prooflab,
    Smoothness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Deviations => "deviations",
            Command::Feshbach => "feshbach",
            Command::Theorem3 => "theorem3",
            Command::Riesz => "riesz",
            Command::Prooflab => "prooflab",
            Command::Smoothness => "smoothness",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "dirac-core")]
    core: &'static str,
    diraclab: &'static str,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'static str,
    config_digest: &'a str,
    potential_digest: String,
    spectral_config_digest: String,
    versions: Versions,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize, S: Serialize> {
    metadata: &'a Metadata<'a>,
    summary: S,
    rows: T,
}

/// Digest of the effective config with the output location removed.
pub fn config_digest(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.out = None;
    sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
}

struct Setup<'a> {
    cfg: &'a RunConfig,
    v: FourierPotential,
    table: SpectralTable,
    galerkin: BTreeMap<Parity, GalerkinMatrix>,
    meta: Metadata<'a>,
}

fn invalid(msg: String) -> RunError {
    RunError::Config(ConfigError::Invalid(msg))
}

fn setup<'a>(cmd: Command, cfg: &'a RunConfig, digest: &'a str, art: &mut Artifacts) -> Result<Setup<'a>, RunError> {
    let v = cfg.potential()?;
    let sc = cfg.spectral();
    let galerkin = galerkin_for_range(&v, cfg.n_range, cfg.k_cut).map_err(|e| invalid(e.to_string()))?;
    let table = build_spectral_table_with(&v, &cfg.bc, cfg.n_range, &sc, &galerkin).map_err(|e| invalid(e.to_string()))?;
    for f in &table.failures {
        art.fail(f.n, "spectrum", &f.error);
    }
    let meta = Metadata {
        command: cmd.name(),
        config_digest: digest,
        potential_digest: v.digest(),
        spectral_config_digest: sc.digest(),
        versions: Versions {
            core: dirac_core::VERSION,
            diraclab: env!("CARGO_PKG_VERSION"),
        },
    };
    Ok(Setup {
        cfg,
        v,
        table,
        galerkin,
        meta,
    })
}

fn general(cfg: &RunConfig, cmd: Command) -> Result<GeneralBc, RunError> {
    match &cfg.bc {
        BoundaryCondition::General(g) => Ok(*g),
        other => Err(invalid(format!(
            "`{}` needs a general boundary condition, got {}",
            cmd.name(),
            other.kind_name()
        ))),
    }
}

fn reducer(s: &Setup, n: i64) -> dirac_core::Result<FeshbachReducer> {
    FeshbachReducer::new(&s.galerkin[&Parity::of(n)], n)
}

pub fn execute(cmd: Command, cfg: &RunConfig, digest: &str) -> Result<Artifacts, RunError> {
    cfg.validate()?;
    if matches!(cmd, Command::Riesz | Command::Prooflab) {
        let g = general(cfg, cmd)?;
        if cmd == Command::Prooflab {
            if let Some(m) = cfg.m {
                if m <= m_threshold(&g) {
                    return Err(invalid(format!("M = {m} must exceed {}", m_threshold(&g))));
                }
            }
        }
    }
    let mut art = Artifacts::default();
    let s = setup(cmd, cfg, digest, &mut art)?;
    match cmd {
        Command::Spectrum => spectrum(&s, &mut art)?,
        Command::Deviations => deviations(&s, &mut art)?,
        Command::Feshbach => feshbach(&s, &mut art)?,
        Command::Theorem3 => theorem3(&s, &mut art)?,
        Command::Riesz => riesz(&s, &mut art)?,
        Command::Prooflab => prooflab(&s, &mut art)?,
        Command::Smoothness => smoothness(&s, &mut art)?,
    }
    art.failures.sort_by(|a, b| (a.n, &a.stage).cmp(&(b.n, &b.stage)));
    Ok(art)
}

#[derive(Serialize)]
struct SpectrumRow {
    n: i64,
    lambda_plus_re: f64,
    lambda_plus_im: f64,
    lambda_minus_re: f64,
    lambda_minus_im: f64,
    mu_re: Option<f64>,
    mu_im: Option<f64>,
    radius: f64,
    double: bool,
    polished: bool,
}

fn spectrum(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let rows: Vec<SpectrumRow> = s
        .table
        .rows
        .iter()
        .map(|r| SpectrumRow {
            n: r.n,
            lambda_plus_re: r.lambda_plus.re,
            lambda_plus_im: r.lambda_plus.im,
            lambda_minus_re: r.lambda_minus.re,
            lambda_minus_im: r.lambda_minus.im,
            mu_re: r.mu.map(|m| m.re),
            mu_im: r.mu.map(|m| m.im),
            radius: r.radius_used,
            double: r.double_flag,
            polished: r.polished,
        })
        .collect();
    art.add_csv("spectrum.csv", &rows)?;
    art.add_json(
        "spectrum.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({ "bc": s.table.bc, "n_range": s.table.n_range, "failures": s.table.failures }),
            rows: &s.table.rows,
        },
    );
    Ok(())
}

#[derive(Serialize)]
struct DeviationRow {
    n: i64,
    gamma_re: f64,
    gamma_im: f64,
    gamma_abs: f64,
    delta_re: Option<f64>,
    delta_im: Option<f64>,
    delta_abs: Option<f64>,
    big_delta: f64,
    below_floor: bool,
}

fn deviation_rows(t: &SpectralTable) -> Vec<DeviationRow> {
    t.rows
        .iter()
        .map(|r| DeviationRow {
            n: r.n,
            gamma_re: r.gamma.re,
            gamma_im: r.gamma.im,
            gamma_abs: r.gamma.norm(),
            delta_re: r.delta.map(|d| d.re),
            delta_im: r.delta.map(|d| d.im),
            delta_abs: r.delta.map(|d| d.norm()),
            big_delta: r.big_delta,
            below_floor: r.big_delta <= resolution_floor(r.n),
        })
        .collect()
}

fn delta_plot(t: &SpectralTable, title: &str) -> String {
    let pts: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.n as f64, r.big_delta)).collect();
    scatter(
        &Scatter {
            title,
            x_label: "n",
            y_label: "Δ_n = |γ_n| + |δ_n|",
            log_y: true,
        },
        &pts,
    )
}

fn deviations(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let rows = deviation_rows(&s.table);
    art.add_csv("deviations.csv", &rows)?;
    art.add_json(
        "deviations.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({ "resolution_floor_rel": resolution_floor(1) }),
            rows: &rows,
        },
    );
    art.add("deviations.svg", delta_plot(&s.table, "Deviations"));
    Ok(())
}

#[derive(Serialize)]
struct FeshbachRow {
    n: i64,
    point: &'static str,
    z_re: f64,
    z_im: f64,
    alpha_re: f64,
    alpha_im: f64,
    beta_minus_re: f64,
    beta_minus_im: f64,
    beta_plus_re: f64,
    beta_plus_im: f64,
    diag_asymmetry: f64,
    basic_residual: f64,
    perturbed: bool,
}

fn feshbach_row(n: i64, point: &'static str, m: &SMatrix) -> FeshbachRow {
    FeshbachRow {
        n,
        point,
        z_re: m.z.re,
        z_im: m.z.im,
        alpha_re: m.alpha.re,
        alpha_im: m.alpha.im,
        beta_minus_re: m.beta_minus.re,
        beta_minus_im: m.beta_minus.im,
        beta_plus_re: m.beta_plus.re,
        beta_plus_im: m.beta_plus.im,
        diag_asymmetry: m.diag_asymmetry,
        basic_residual: m.basic_residual(),
        perturbed: m.perturbed,
    }
}

#[derive(Serialize)]
struct ResidualRow {
    n: i64,
    residual_plus: f64,
    residual_minus: f64,
}

fn feshbach(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for r in &s.table.rows {
        let res = reducer(s, r.n).and_then(|red| {
            let pts = [("z_plus", r.z_plus), ("z_minus", r.z_minus), ("z_star", r.z_star)];
            let ms = pts
                .iter()
                .map(|&(name, z)| red.reduce(z).map(|m| feshbach_row(r.n, name, &m)))
                .collect::<dirac_core::Result<Vec<_>>>()?;
            Ok((ms, basic_equation_residual(&red, r)?))
        });
        match res {
            Ok((ms, b)) => {
                rows.extend(ms);
                residuals.push(ResidualRow {
                    n: r.n,
                    residual_plus: b.residual_plus,
                    residual_minus: b.residual_minus,
                });
            }
            Err(e) => art.fail(r.n, "feshbach", e),
        }
    }
    art.add_csv("feshbach.csv", &rows)?;
    art.add_csv("basic_residual.csv", &residuals)?;
    let worst = residuals
        .iter()
        .map(|r| r.residual_plus.max(r.residual_minus))
        .fold(0.0, f64::max);
    art.add_json(
        "feshbach.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({ "max_basic_residual": worst }),
            rows: serde_json::json!({ "reductions": rows, "basic_residual": residuals }),
        },
    );
    Ok(())
}

fn theorem3_rows(s: &Setup, art: &mut Artifacts) -> Vec<Theorem3Row> {
    let mut out = Vec::new();
    for r in &s.table.rows {
        match reducer(s, r.n).and_then(|red| theorem3_ratio(&red, r)) {
            Ok(t) => out.push(t),
            Err(e) => art.fail(r.n, "theorem3", e),
        }
    }
    out
}

#[derive(Serialize)]
struct Theorem3Csv {
    n: i64,
    num: f64,
    den: f64,
    ratio: Option<f64>,
    vacuous: bool,
    b_plus_abs: f64,
    b_minus_abs: f64,
}

fn theorem3(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let rows = theorem3_rows(s, art);
    let csv: Vec<Theorem3Csv> = rows
        .iter()
        .map(|t| Theorem3Csv {
            n: t.n,
            num: t.num,
            den: t.den,
            ratio: t.ratio,
            vacuous: t.vacuous,
            b_plus_abs: t.b_plus.norm(),
            b_minus_abs: t.b_minus.norm(),
        })
        .collect();
    art.add_csv("theorem3.csv", &csv)?;
    let ratios: Vec<f64> = rows.iter().filter_map(|t| t.ratio).collect();
    let c1 = ratios.iter().copied().reduce(f64::min);
    let c2 = ratios.iter().copied().reduce(f64::max);
    art.add_json(
        "theorem3.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({
                "ratio_min": c1,
                "ratio_max": c2,
                "spread": c1.zip(c2).map(|(a, b)| b / a),
                "resolved_rows": ratios.len(),
                "vacuous_rows": rows.iter().filter(|t| t.vacuous).count(),
            }),
            rows: &rows,
        },
    );
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|t| t.ratio.map(|x| (t.n as f64, x))).collect();
    art.add(
        "theorem3.svg",
        scatter(
            &Scatter {
                title: "β(z*) / Δ ratio",
                x_label: "n",
                y_label: "(|β⁻(z*)| + |β⁺(z*)|) / (|γ_n| + |δ_n|)",
                log_y: false,
            },
            &pts,
        ),
    );
    Ok(())
}

fn riesz(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let floor = s.cfg.gamma_floor;
    let rep = riesz_criterion(&s.table, floor);
    let t3 = theorem3_rows(s, art);
    let beta = beta_ratio_test(&s.table, &t3, floor);
    let rep = with_beta(rep, &beta);
    art.add_csv("riesz.csv", &rep.per_n)?;
    art.add_json(
        "riesz.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({
                "sup_ratio": rep.sup_ratio,
                "vacuous": rep.vacuous,
                "nonzero_gamma_count": rep.nonzero_gamma_count,
                "excluded_count": rep.excluded_count,
                "beta_ratio_min": rep.beta_ratio_min,
                "beta_ratio_max": rep.beta_ratio_max,
                "verdict_hint": rep.verdict_hint,
                "beta_verdict_hint": beta.verdict_hint,
                "beta_zero_denominator": beta.zero_denominator,
                "gamma_floor_rel": floor,
            }),
            rows: &rep.per_n,
        },
    );
    let pts: Vec<(f64, f64)> = rep.per_n.iter().filter_map(|r| r.ratio.map(|x| (r.n as f64, x))).collect();
    art.add(
        "riesz.svg",
        scatter(
            &Scatter {
                title: "Riesz criterion",
                x_label: "n",
                y_label: "|δ_n| / |γ_n|",
                log_y: false,
            },
            &pts,
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct ProoflabCsv {
    n: i64,
    regime: &'static str,
    b_plus: f64,
    b_minus: f64,
    gamma: f64,
    delta: f64,
    xi: f64,
    kappa: f64,
    xi_bound_ok: bool,
    delta_bound_ok: bool,
    balanced_bound_ok: Option<bool>,
    component_bounds_ok: Option<bool>,
    trace_ratio_bounds_ok: Option<bool>,
    beta_bound_ok: Option<bool>,
    beta_bound_as_stated_ok: Option<bool>,
    ell0_g_abs: f64,
    ell1_g_abs: f64,
    ilker6_residual: f64,
    tau_inv_pairing_re: f64,
    tau_inv_pairing_im: f64,
    c_target_re: f64,
    c_target_im: f64,
}

fn all_ok(cs: &[Check]) -> bool {
    cs.iter().all(|c| c.ok)
}

fn prooflab_csv(rep: &InequalityReport) -> Vec<ProoflabCsv> {
    rep.rows
        .iter()
        .map(|r| {
            let p = &r.pairing;
            ProoflabCsv {
                n: r.n,
                regime: match r.regime {
                    Regime::Balanced => "balanced",
                    Regime::CaseI => "case-i",
                    Regime::CaseII => "case-ii",
                },
                b_plus: r.b_plus,
                b_minus: r.b_minus,
                gamma: r.gamma,
                delta: r.delta,
                xi: r.xi,
                kappa: r.kappa,
                xi_bound_ok: r.xi_bound.ok,
                delta_bound_ok: r.delta_bound.ok,
                balanced_bound_ok: r.balanced_bound.map(|c| c.ok),
                component_bounds_ok: r.component_bounds.map(|c| all_ok(&c)),
                trace_ratio_bounds_ok: r.trace_ratio_bounds.map(|c| all_ok(&c)),
                beta_bound_ok: r.beta_bound.map(|c| c.ok),
                beta_bound_as_stated_ok: r.beta_bound_as_stated.map(|c| c.ok),
                ell0_g_abs: p.ell0_g.norm(),
                ell1_g_abs: p.ell1_g.norm(),
                ilker6_residual: p.ilker6_residual,
                tau_inv_pairing_re: p.tau_inv_pairing.re,
                tau_inv_pairing_im: p.tau_inv_pairing.im,
                c_target_re: p.c_target.re,
                c_target_im: p.c_target.im,
            }
        })
        .collect()
}

fn prooflab(s: &Setup, art: &mut Artifacts) -> Result<(), RunError> {
    let g = general(s.cfg, Command::Prooflab)?;
    let rep = inequality_suite(&s.v, &g, &s.table, &s.galerkin, s.cfg.m).map_err(|e| invalid(e.to_string()))?;
    for (n, e) in &rep.failures {
        art.fail(*n, "prooflab", e);
    }
    art.add_csv("prooflab.csv", &prooflab_csv(&rep))?;
    let violations: Vec<i64> = rep.rows.iter().filter(|r| !r.all_ok()).map(|r| r.n).collect();
    art.add_json(
        "prooflab.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({
                "constants": rep.constants,
                "sup_delta_ratio": rep.sup_delta_ratio,
                "sup_beta_ratio": rep.sup_beta_ratio,
                "vacuous": rep.vacuous,
                "violations": violations,
            }),
            rows: &rep.rows,
        },
    );
    Ok(())
}

#[derive(Serialize)]
struct WeightRow {
    weight: String,
    submultiplicative: bool,
    h_omega_norm: f64,
    ell2_partial_sum: f64,
    /// Share of the partial sum contributed by the upper quarter of |n|.
    upper_quarter_share: f64,
}

fn weight_row(v: &FourierPotential, t: &SpectralTable, w: &Weight) -> WeightRow {
    let max_abs = t.rows.iter().map(|r| r.n.unsigned_abs()).max().unwrap_or(0);
    let cut = max_abs - max_abs / 4;
    let mut total = 0.0;
    let mut upper = 0.0;
    for r in &t.rows {
        let om = w.eval(r.n);
        let x = (om * r.big_delta).powi(2);
        total += x;
        if r.n.unsigned_abs() > cut {
            upper += x;
        }
    }
    WeightRow {
        weight: serde_json::to_string(w).expect("weight serializes"),
        submultiplicative: check_submultiplicative(w, 64).ok,
        h_omega_norm: h_omega_norm(v, w),
        ell2_partial_sum: total.sqrt(),
        upper_quarter_share: if total > 0.0 { upper / total } else { 0.0 },
    }
}

fn smoothness(s: &Setup, art: &mut Artifacts) -> std::io::Result<()> {
    let rows = deviation_rows(&s.table);
    art.add_csv("smoothness.csv", &rows)?;
    let pts: Vec<(i64, f64)> = s
        .table
        .rows
        .iter()
        .filter(|r| r.big_delta > 10.0 * resolution_floor(r.n))
        .map(|r| (r.n, r.big_delta))
        .collect();
    let fit: Result<DecayFit, String> = decay_fit(&pts).map_err(|e| e.to_string());
    let weights: Vec<WeightRow> = s.cfg.weights.iter().map(|w| weight_row(&s.v, &s.table, w)).collect();
    art.add_csv("weights.csv", &weights)?;
    art.add_json(
        "smoothness.json",
        &Document {
            metadata: &s.meta,
            summary: serde_json::json!({
                "direction": "V in H(Omega) implies (Delta_n) in l2(Omega)",
                "decay_fit": fit.as_ref().ok(),
                "decay_fit_error": fit.as_ref().err(),
                "fit_points": pts.len(),
                "weights": weights,
            }),
            rows: &rows,
        },
    );
    art.add("smoothness.svg", delta_plot(&s.table, "Smoothness"));
    Ok(())
}
