//! Localized eigenvalues λ_n^± (Per± by parity of n), μ_n for a general bc,
//! and the deviations γ_n = λ⁺ − λ⁻, δ_n = μ − λ⁺.
//!
//! Roots are counted and estimated from χ on the disc |λ − n| < r, refined by
//! Newton on χ, and the Per± pair is then polished as the fixed point of the
//! Feshbach equation z = eig S(z). Near a double root, χ only resolves each
//! root to about √ε; the fixed point resolves γ_n down to rounding.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bc::BoundaryCondition;
use crate::error::{DiracError, Result};
use crate::feshbach::{order_pair, solve_pair, FeshbachReducer};
use crate::operator::{
    analyze_samples, assemble_galerkin, chi_from_monodromy, disc_samples, default_steps, ContourAnalysis,
    GalerkinMatrix, Parity, Propagator, DEFAULT_CONTOUR_NODES,
};
use crate::potential::{hex, FourierPotential};

/// Deviations below 1e−12·max(1,|n|) are not resolved by the root finders.
pub fn resolution_floor(n: i64) -> f64 {
    1e-12 * (n.unsigned_abs() as f64).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    #[serde(rename = "K")]
    pub k_cut: usize,
    /// Newton stops once |χ| ≤ tol.
    pub tol: f64,
    pub contour_nodes: usize,
    /// Fixed ODE step count; the default scales with |n| and the potential order.
    pub ode_steps: Option<usize>,
    /// Pairs closer than cluster_rel·max(1,|n|) are a double eigenvalue.
    pub cluster_rel: f64,
    /// Disc radii tried in order.
    pub radii: Vec<f64>,
    /// Refine λ± by the Feshbach fixed point on the Galerkin matrix.
    pub polish: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            k_cut: 64,
            tol: 1e-14,
            contour_nodes: DEFAULT_CONTOUR_NODES,
            ode_steps: None,
            cluster_rel: 1e-13,
            radii: vec![0.25, 0.125, 0.45],
            polish: true,
        }
    }
}

impl SpectralConfig {
    pub fn cluster_tol(&self, n: i64) -> f64 {
        self.cluster_rel * (n.unsigned_abs() as f64).max(1.0)
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    fn propagator(&self, v: &FourierPotential, n: i64) -> Propagator {
        let steps = self
            .ode_steps
            .unwrap_or_else(|| default_steps(v.order(), n.unsigned_abs() as f64 + 0.5));
        Propagator::new(v, steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralTriple {
    pub n: i64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    /// None for Per± tables.
    pub mu: Option<C64>,
    pub gamma: C64,
    pub delta: Option<C64>,
    /// |γ| + |δ|, with |δ| = 0 when there is no μ.
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    pub z_plus: C64,
    pub z_minus: C64,
    pub z_star: C64,
    /// The other z* branch when |γ| is within ten cluster tolerances.
    pub z_star_alt: Option<C64>,
    pub radius_used: f64,
    pub double_flag: bool,
    /// λ± as refined on χ alone, before the Feshbach polish.
    pub chi_roots: [C64; 2],
    pub polished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub n: i64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralTable {
    pub bc: BoundaryCondition,
    pub potential_digest: String,
    pub n_range: (i64, i64),
    pub rows: Vec<SpectralTriple>,
    pub failures: Vec<RowFailure>,
    pub config_digest: String,
}

impl SpectralTable {
    pub fn row(&self, n: i64) -> Option<&SpectralTriple> {
        self.rows.binary_search_by_key(&n, |r| r.n).ok().map(|i| &self.rows[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLocation {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub double_flag: bool,
    pub radius: f64,
    pub chi_roots: [C64; 2],
    pub polished: bool,
}

/// Tries each configured radius until every bc has its expected root count.
fn scan_disc(
    prop: &Propagator,
    bcs: &[BoundaryCondition],
    expected: &[usize],
    n: i64,
    cfg: &SpectralConfig,
) -> Result<(f64, Vec<ContourAnalysis>)> {
    let center = C64::new(n as f64, 0.0);
    let mut first_err = None;
    for &r in &cfg.radii {
        let samples = disc_samples(prop, bcs, center, r, cfg.contour_nodes);
        let analyses: Result<Vec<ContourAnalysis>> =
            samples.iter().map(|s| analyze_samples(s, center, r, 2)).collect();
        let err = match analyses {
            Ok(a) => match a.iter().zip(expected).find(|(x, &e)| x.count != e as i64) {
                None => return Ok((r, a)),
                Some((x, &e)) => DiracError::WrongRootCount {
                    n,
                    expected: e,
                    count: x.count,
                    radius: r,
                },
            },
            Err(e) => e,
        };
        first_err.get_or_insert(err);
    }
    Err(first_err.unwrap_or(DiracError::BadParams("no contour radii configured".into())))
}

/// Newton on χ with a central-difference derivative; stops at |χ| ≤ tol or
/// when a step no longer decreases |χ|.
fn newton_chi(prop: &Propagator, bc: &BoundaryCondition, z0: C64, tol: f64) -> C64 {
    let chi = |l: C64| chi_from_monodromy(bc, &prop.monodromy(l));
    let h = 1e-6;
    let mut z = z0;
    let mut fz = chi(z);
    for _ in 0..50 {
        if fz.norm() <= tol {
            break;
        }
        let d = (chi(z + h) - chi(z - h)) / (2.0 * h);
        let step = fz / d;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let next = z - step;
        let fnext = chi(next);
        if fnext.norm() >= fz.norm() {
            break;
        }
        z = next;
        fz = fnext;
    }
    z
}

/// Matches {a0, a1} to {b0, b1} and returns the larger distance.
fn pair_distance(a: [C64; 2], b: [C64; 2]) -> f64 {
    let straight = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    straight.min(crossed)
}

/// Fixed-point results further than this from the χ roots are rejected.
const POLISH_AGREEMENT: f64 = 1e-5;

fn locate_pair_with(
    prop: &Propagator,
    galerkin: Option<&GalerkinMatrix>,
    n: i64,
    cfg: &SpectralConfig,
    pair: (f64, &ContourAnalysis),
) -> Result<PairLocation> {
    let (radius, an) = pair;
    let bc = Parity::of(n).bc();
    let est = an.root_estimates();
    let chi_roots = [newton_chi(prop, &bc, est[0], cfg.tol), newton_chi(prop, &bc, est[1], cfg.tol)];
    let (cp, cm) = order_pair(chi_roots[0], chi_roots[1], n);
    let mut roots = [cp, cm];
    let mut polished = false;
    if let Some(g) = galerkin.filter(|g| n.abs() <= g.trust_limit()) {
        let nf = n as f64;
        let fp = FeshbachReducer::new(g, n).and_then(|red| solve_pair(&red, (cp - nf, cm - nf)));
        if let Ok(fp) = fp {
            let cand = [fp.z_plus + nf, fp.z_minus + nf];
            if pair_distance(cand, roots) <= POLISH_AGREEMENT && cand.iter().all(|z| (z - nf).norm() <= radius) {
                roots = cand;
                polished = true;
            }
        }
    }
    let (mut lp, mut lm) = order_pair(roots[0], roots[1], n);
    let double_flag = (lp - lm).norm() <= cfg.cluster_tol(n);
    if double_flag {
        let mid = (lp + lm) * 0.5;
        lp = mid;
        lm = mid;
    }
    Ok(PairLocation {
        lambda_plus: lp,
        lambda_minus: lm,
        double_flag,
        radius,
        chi_roots: [cp, cm],
        polished,
    })
}

/// λ_n^± for Per⁺ (even n) or Per⁻ (odd n).
pub fn locate_pair(v: &FourierPotential, n: i64, cfg: &SpectralConfig) -> Result<PairLocation> {
    let prop = cfg.propagator(v, n);
    let (r, an) = scan_disc(&prop, &[Parity::of(n).bc()], &[2], n, cfg)?;
    let g = if cfg.polish {
        Some(assemble_galerkin(v, Parity::of(n), cfg.k_cut.max(v.order()).max(1))?)
    } else {
        None
    };
    locate_pair_with(&prop, g.as_ref(), n, cfg, (r, &an[0]))
}

/// μ_n for a general bc; returns (μ, radius used).
pub fn locate_general(v: &FourierPotential, bc: &BoundaryCondition, n: i64, cfg: &SpectralConfig) -> Result<(C64, f64)> {
    if bc.general().is_none() {
        return Err(DiracError::NotGeneral(bc.kind_name()));
    }
    let prop = cfg.propagator(v, n);
    let (r, an) = scan_disc(&prop, std::slice::from_ref(bc), &[1], n, cfg)?;
    Ok((refine_simple(&prop, bc, &an[0], n, r, cfg)?, r))
}

fn refine_simple(
    prop: &Propagator,
    bc: &BoundaryCondition,
    an: &ContourAnalysis,
    n: i64,
    radius: f64,
    cfg: &SpectralConfig,
) -> Result<C64> {
    let mu = newton_chi(prop, bc, an.root_estimates()[0], cfg.tol);
    if (mu - n as f64).norm() > radius {
        return Err(DiracError::NoConvergence { near: mu });
    }
    Ok(mu)
}

fn triple_from(n: i64, pair: PairLocation, mu: Option<C64>, cfg: &SpectralConfig) -> SpectralTriple {
    let nf = n as f64;
    let gamma = pair.lambda_plus - pair.lambda_minus;
    let delta = mu.map(|m| m - pair.lambda_plus);
    let z_plus = pair.lambda_plus - nf;
    let z_minus = pair.lambda_minus - nf;
    let z_star = if pair.double_flag {
        z_plus
    } else {
        (pair.lambda_plus + pair.lambda_minus) * 0.5 - nf
    };
    let z_star_alt = (!pair.double_flag && gamma.norm() < 10.0 * cfg.cluster_tol(n)).then_some(z_plus);
    SpectralTriple {
        n,
        lambda_plus: pair.lambda_plus,
        lambda_minus: pair.lambda_minus,
        mu,
        gamma,
        delta,
        big_delta: gamma.norm() + delta.map_or(0.0, |d| d.norm()),
        z_plus,
        z_minus,
        z_star,
        z_star_alt,
        radius_used: pair.radius,
        double_flag: pair.double_flag,
        chi_roots: pair.chi_roots,
        polished: pair.polished,
    }
}

fn compute_row(
    v: &FourierPotential,
    bc: &BoundaryCondition,
    n: i64,
    galerkin: &BTreeMap<Parity, GalerkinMatrix>,
    cfg: &SpectralConfig,
) -> Result<SpectralTriple> {
    let prop = cfg.propagator(v, n);
    let per = Parity::of(n).bc();
    let general = bc.general().is_some();
    let (bcs, expected) = if general {
        (vec![per, *bc], vec![2, 1])
    } else {
        (vec![per], vec![2])
    };
    let (r, an) = scan_disc(&prop, &bcs, &expected, n, cfg)?;
    let pair = locate_pair_with(&prop, galerkin.get(&Parity::of(n)), n, cfg, (r, &an[0]))?;
    let mu = if general {
        Some(refine_simple(&prop, bc, &an[1], n, r, cfg)?)
    } else {
        None
    };
    Ok(triple_from(n, pair, mu, cfg))
}

/// Galerkin matrices for the parities occurring in `n_range`.
pub fn galerkin_for_range(
    v: &FourierPotential,
    n_range: (i64, i64),
    k_cut: usize,
) -> Result<BTreeMap<Parity, GalerkinMatrix>> {
    let mut out = BTreeMap::new();
    for n in n_range.0..=n_range.1.min(n_range.0 + 1) {
        out.insert(Parity::of(n), assemble_galerkin(v, Parity::of(n), k_cut)?);
    }
    Ok(out)
}

/// Per-n rows in parallel; rows that fail are kept as failures. For Per±
/// boundary conditions μ and δ are absent.
pub fn build_spectral_table(
    v: &FourierPotential,
    bc: &BoundaryCondition,
    n_range: (i64, i64),
    cfg: &SpectralConfig,
) -> Result<SpectralTable> {
    let galerkin = if cfg.polish {
        galerkin_for_range(v, n_range, cfg.k_cut)?
    } else {
        BTreeMap::new()
    };
    build_spectral_table_with(v, bc, n_range, cfg, &galerkin)
}

pub fn build_spectral_table_with(
    v: &FourierPotential,
    bc: &BoundaryCondition,
    n_range: (i64, i64),
    cfg: &SpectralConfig,
    galerkin: &BTreeMap<Parity, GalerkinMatrix>,
) -> Result<SpectralTable> {
    if n_range.0 > n_range.1 {
        return Err(DiracError::BadParams(format!("empty range {n_range:?}")));
    }
    let results: Vec<(i64, Result<SpectralTriple>)> = (n_range.0..=n_range.1)
        .into_par_iter()
        .map(|n| (n, compute_row(v, bc, n, galerkin, cfg)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in results {
        match r {
            Ok(t) => rows.push(t),
            Err(e) => failures.push(RowFailure { n, error: e.to_string() }),
        }
    }
    Ok(SpectralTable {
        bc: *bc,
        potential_digest: v.digest(),
        n_range,
        rows,
        failures,
        config_digest: cfg.digest(),
    })
}
