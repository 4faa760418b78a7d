//! Riesz-basis diagnostics on finite tables: sup |δ_n|/|γ_n| over γ_n ≠ 0,
//! and the ratio |β⁻(z*)|/|β⁺(z*)| as a cross-check. Only trend hints are
//! reported; a finite sweep cannot decide an asymptotic property.

use serde::{Deserialize, Serialize};

use crate::feshbach::Theorem3Row;
use crate::spectral::SpectralTable;

pub const DEFAULT_GAMMA_FLOOR_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictHint {
    CriterionBounded,
    CriterionGrowing,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszRow {
    pub n: i64,
    /// |δ|/|γ|, None when γ is below the floor.
    pub ratio: Option<f64>,
    /// sup of the ratios over rows with |m| ≤ |n| seen so far (by |n|, then n).
    pub running_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub sup_ratio: Option<f64>,
    pub vacuous: bool,
    pub nonzero_gamma_count: usize,
    pub excluded_count: usize,
    pub beta_ratio_min: Option<f64>,
    pub beta_ratio_max: Option<f64>,
    pub per_n: Vec<RieszRow>,
    pub verdict_hint: VerdictHint,
}

fn fold_max(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.max(x)))
}

/// Growing if the sup over the upper half of |n| exceeds twice the sup over
/// the lower half.
fn growth_hint(by_abs: &[(u64, f64)]) -> VerdictHint {
    if by_abs.is_empty() {
        return VerdictHint::Vacuous;
    }
    let lo = by_abs.first().unwrap().0;
    let hi = by_abs.last().unwrap().0;
    let mid = (lo + hi) / 2;
    let lower = by_abs.iter().filter(|r| r.0 <= mid).map(|r| r.1).fold(None, fold_max);
    let upper = by_abs.iter().filter(|r| r.0 > mid).map(|r| r.1).fold(None, fold_max);
    match (lower, upper) {
        (Some(l), Some(u)) if u > 2.0 * l => VerdictHint::CriterionGrowing,
        _ => VerdictHint::CriterionBounded,
    }
}

/// Rows with |γ_n| ≤ gamma_floor_rel·max(1,|n|) count as γ_n = 0.
pub fn riesz_criterion(table: &SpectralTable, gamma_floor_rel: f64) -> RieszReport {
    let mut ordered: Vec<_> = table.rows.iter().collect();
    ordered.sort_by_key(|r| (r.n.unsigned_abs(), r.n));
    let mut per_n = Vec::with_capacity(ordered.len());
    let mut run = None;
    let mut included = Vec::new();
    for r in ordered {
        let floor = gamma_floor_rel * (r.n.unsigned_abs() as f64).max(1.0);
        let g = r.gamma.norm();
        let ratio = (g > floor).then(|| r.delta.map_or(0.0, |d| d.norm()) / g);
        if let Some(x) = ratio {
            run = fold_max(run, x);
            included.push((r.n.unsigned_abs(), x));
        }
        per_n.push(RieszRow {
            n: r.n,
            ratio,
            running_sup: run,
        });
    }
    let nonzero = included.len();
    RieszReport {
        sup_ratio: run,
        vacuous: nonzero == 0,
        nonzero_gamma_count: nonzero,
        excluded_count: table.rows.len() - nonzero,
        beta_ratio_min: None,
        beta_ratio_max: None,
        per_n,
        verdict_hint: growth_hint(&included),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRatioReport {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: usize,
    /// Rows with γ ≠ 0 where a β(z*) vanishes.
    pub zero_denominator: Vec<i64>,
    pub verdict_hint: VerdictHint,
}

/// |β⁻(z*)|/|β⁺(z*)| over rows with γ above the floor and both β nonzero.
/// The hint is growing when the largest |log ratio| over the upper half of
/// |n| exceeds the lower-half one by more than log 2.
pub fn beta_ratio_test(table: &SpectralTable, rows: &[Theorem3Row], gamma_floor_rel: f64) -> BetaRatioReport {
    let mut vals = Vec::new();
    let mut zero = Vec::new();
    for t in rows {
        let Some(row) = table.row(t.n) else { continue };
        if row.gamma.norm() <= gamma_floor_rel * (t.n.unsigned_abs() as f64).max(1.0) {
            continue;
        }
        let (bm, bp) = (t.s_star.beta_minus.norm(), t.s_star.beta_plus.norm());
        if bm == 0.0 || bp == 0.0 {
            zero.push(t.n);
        } else {
            vals.push((t.n.unsigned_abs(), bm / bp));
        }
    }
    vals.sort_by_key(|a| a.0);
    let logs: Vec<(u64, f64)> = vals.iter().map(|&(n, r)| (n, r.ln().abs())).collect();
    let hint = if logs.is_empty() {
        VerdictHint::Vacuous
    } else {
        let lo = logs[0].0;
        let mid = (lo + logs.last().unwrap().0) / 2;
        let lower = logs.iter().filter(|r| r.0 <= mid).map(|r| r.1).fold(None, fold_max);
        let upper = logs.iter().filter(|r| r.0 > mid).map(|r| r.1).fold(None, fold_max);
        match (lower, upper) {
            (Some(l), Some(u)) if u > l + std::f64::consts::LN_2 => VerdictHint::CriterionGrowing,
            _ => VerdictHint::CriterionBounded,
        }
    };
    BetaRatioReport {
        min: vals.iter().map(|v| v.1).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.min(x)))),
        max: vals.iter().map(|v| v.1).fold(None, fold_max),
        count: vals.len(),
        zero_denominator: zero,
        verdict_hint: hint,
    }
}

/// Attaches the β proxies to a Riesz report.
pub fn with_beta(mut rep: RieszReport, beta: &BetaRatioReport) -> RieszReport {
    rep.beta_ratio_min = beta.min;
    rep.beta_ratio_max = beta.max;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{BoundaryCondition, GeneralBc};
    use crate::spectral::SpectralTriple;
    use num_complex::Complex64 as C64;

    fn row(n: i64, gamma: f64, delta: f64) -> SpectralTriple {
        let z = C64::new(0.0, 0.0);
        SpectralTriple {
            n,
            lambda_plus: C64::new(n as f64 + gamma / 2.0, 0.0),
            lambda_minus: C64::new(n as f64 - gamma / 2.0, 0.0),
            mu: Some(C64::new(n as f64 + gamma / 2.0 + delta, 0.0)),
            gamma: C64::new(gamma, 0.0),
            delta: Some(C64::new(delta, 0.0)),
            big_delta: gamma.abs() + delta.abs(),
            z_plus: z,
            z_minus: z,
            z_star: z,
            z_star_alt: None,
            radius_used: 0.25,
            double_flag: gamma == 0.0,
            chi_roots: [z, z],
            polished: true,
        }
    }

    fn table(rows: Vec<SpectralTriple>) -> SpectralTable {
        SpectralTable {
            bc: BoundaryCondition::General(GeneralBc::dirichlet_plus()),
            potential_digest: String::new(),
            n_range: (rows[0].n, rows.last().unwrap().n),
            rows,
            failures: vec![],
            config_digest: String::new(),
        }
    }

    #[test]
    fn vacuous_when_all_gamma_zero() {
        let t = table((1..=6).map(|n| row(n, 0.0, 0.0)).collect());
        let r = riesz_criterion(&t, DEFAULT_GAMMA_FLOOR_REL);
        assert!(r.vacuous && r.sup_ratio.is_none());
        assert_eq!(r.verdict_hint, VerdictHint::Vacuous);
        assert_eq!(r.excluded_count, 6);
    }

    #[test]
    fn sup_and_counts() {
        let t = table(vec![row(1, 0.1, 0.05), row(2, 1e-12, 0.3), row(3, 0.01, 0.02), row(4, 0.001, 0.001)]);
        let r = riesz_criterion(&t, DEFAULT_GAMMA_FLOOR_REL);
        assert_eq!(r.sup_ratio, Some(2.0));
        assert_eq!((r.nonzero_gamma_count, r.excluded_count), (3, 1));
        assert_eq!(r.nonzero_gamma_count + r.excluded_count, t.rows.len());
        assert_eq!(r.verdict_hint, VerdictHint::CriterionGrowing);
    }

    #[test]
    fn running_sup_monotone() {
        let t = table((-8..=8).map(|n| row(n, 0.1 / (1.0 + n.abs() as f64), 0.01 * ((n * 7) % 5) as f64)).collect());
        let r = riesz_criterion(&t, DEFAULT_GAMMA_FLOOR_REL);
        let sups: Vec<f64> = r.per_n.iter().filter_map(|x| x.running_sup).collect();
        assert!(sups.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(sups.last().copied(), r.sup_ratio);
    }

    #[test]
    fn bounded_ratios() {
        let t = table((5..=20).map(|n| row(n, 0.5f64.powi(n as i32), 0.3 * 0.5f64.powi(n as i32))).collect());
        let r = riesz_criterion(&t, DEFAULT_GAMMA_FLOOR_REL);
        assert_eq!(r.verdict_hint, VerdictHint::CriterionBounded);
        assert!((r.sup_ratio.unwrap() - 0.3).abs() < 1e-12);
    }
}
