//! Numerical reproduction of the proof apparatus for the general bc:
//! the Jordan pair (f_n, φ_n, ξ_n) of the Per± operator, the vector G_n that
//! satisfies the bc, the adjoint eigenfunction g̃_n, identity
//!
//!   (μ_n − λ_n⁺)⟨G_n, g̃_n⟩ = t_n(ξ_n⟨f_n, g̃_n⟩ − γ_n⟨φ_n, g̃_n⟩),
//!
//! and the chain of inequalities leading to the two-sided estimate.
//!
//! f_n and φ_n live in the Galerkin coefficient space of the matching parity.
//! g̃_n is the solution of the adjoint ODE at conj(μ_n) under bc*, sampled on
//! a uniform grid; pairings with trig vectors use Boole's rule.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bc::{adjoint_bc, boundary_functionals, free_eigvec_coeffs, BoundaryCondition, GeneralBc};
use crate::error::{DiracError, Result};
use crate::feshbach::{order_pair, FeshbachReducer};
use crate::operator::{default_steps, GalerkinMatrix, Parity, Propagator};
use crate::potential::FourierPotential;
use crate::spectral::{resolution_floor, SpectralTable, SpectralTriple};

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

fn c1() -> C64 {
    C64::new(1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPair {
    pub n: i64,
    /// Galerkin coefficients, layout as in [`GalerkinMatrix`].
    pub f: Vec<C64>,
    pub phi: Vec<C64>,
    pub xi: C64,
    /// Eigenvalues of L restricted to E_n.
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub gamma: C64,
    /// ‖Lφ − (λ⁺φ − γφ + ξf)‖
    pub residual: f64,
    pub orthogonality: f64,
}

impl JordanPair {
    pub fn f_vec(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.f)
    }

    pub fn phi_vec(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.phi)
    }
}

/// Unit eigenvector of a 2×2 matrix for eigenvalue e; (1, 0) if h − e vanishes.
fn eigvec2(h: &[[C64; 2]; 2], e: C64) -> [C64; 2] {
    let r1 = [h[0][0] - e, h[0][1]];
    let r2 = [h[1][0], h[1][1] - e];
    let w = |r: &[C64; 2]| r[0].norm() + r[1].norm();
    let row = if w(&r1) >= w(&r2) { r1 } else { r2 };
    if w(&row) <= 1e-14 * (1.0 + e.norm()) {
        return [c1(), c0()];
    }
    let v = [row[1], -row[0]];
    let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / nrm, v[1] / nrm]
}

/// Orthonormal basis of the 2D invariant subspace near n by block inverse
/// iteration from [e_n¹, e_n²].
fn invariant_subspace(m: &GalerkinMatrix, n: i64, shift: C64) -> Result<(DMatrix<C64>, [[C64; 2]; 2])> {
    let d = m.dim();
    let (i1, i2) = match (m.index(1, n), m.index(2, n)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(DiracError::BadParams(format!("index {n} outside the Galerkin modes"))),
    };
    let lu = (&m.entries - DMatrix::from_diagonal_element(d, d, shift)).lu();
    let mut y = DMatrix::<C64>::zeros(d, 2);
    y[(i1, 0)] = c1();
    y[(i2, 1)] = c1();
    let scale = m.entries.norm();
    for _ in 0..500 {
        let z = lu.solve(&y).ok_or(DiracError::RankDeficientProjection { n, rank: 0 })?;
        let qr = z.qr();
        let r = qr.r();
        let rank = (0..2).filter(|&i| r[(i, i)].norm() > 1e-12 * r[(0, 0)].norm().max(1e-300)).count();
        if rank < 2 {
            return Err(DiracError::RankDeficientProjection { n, rank });
        }
        y = qr.q();
        let my = &m.entries * &y;
        let hm = y.adjoint() * &my;
        let resid = (&my - &y * &hm).norm();
        if resid <= 1e-13 * scale {
            let h = [[hm[(0, 0)], hm[(0, 1)]], [hm[(1, 0)], hm[(1, 1)]]];
            return Ok((y, h));
        }
    }
    Err(DiracError::NoConvergence { near: shift })
}

/// Jordan pair from the Galerkin matrix. `row` supplies z* for the shift and
/// the double-eigenvalue decision.
pub fn jordan_pair(m: &GalerkinMatrix, row: &SpectralTriple) -> Result<JordanPair> {
    let n = row.n;
    let shift = C64::new(n as f64, 0.0) + row.z_star + C64::new(1e-3, 7e-4);
    let (y, h) = invariant_subspace(m, n, shift)?;
    let tr = (h[0][0] + h[1][1]) * 0.5;
    let disc = ((h[0][0] - h[1][1]).powu(2) * 0.25 + h[0][1] * h[1][0]).sqrt();
    let (mut lp, mut lm) = order_pair(tr + disc, tr - disc, n);
    if row.double_flag {
        lp = tr;
        lm = tr;
    }
    let hv = eigvec2(&h, lp);
    let mut f = &y * DVector::from_column_slice(&hv);
    let big = f.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(c1());
    f *= big.conj() / big.norm();
    f.unscale_mut(f.norm());
    // complement of hv in C², then gauge φ⁰ towards (conj f₂⁰, −conj f₁⁰)
    let mut phi = &y * DVector::from_column_slice(&[-hv[1].conj(), hv[0].conj()]);
    phi -= &f * f.dotc(&phi);
    phi.unscale_mut(phi.norm());
    let (i1, i2) = (m.index(1, n).unwrap(), m.index(2, n).unwrap());
    let target = f[i2].conj() * phi[i1].conj() - f[i1].conj() * phi[i2].conj();
    if target.norm() > 0.0 {
        phi *= target / target.norm();
    }
    let lphi = &m.entries * &phi;
    let xi = f.dotc(&lphi);
    let gamma = lp - lm;
    let resid = (&lphi - &phi * (lp - gamma) - &f * xi).norm();
    Ok(JordanPair {
        n,
        orthogonality: f.dotc(&phi).norm().max((f.norm() - 1.0).abs()).max((phi.norm() - 1.0).abs()),
        f: f.iter().copied().collect(),
        phi: phi.iter().copied().collect(),
        xi,
        lambda_plus: lp,
        lambda_minus: lm,
        gamma,
        residual: resid,
    })
}

/// Eigenfunction of L* under bc* at conj(μ), sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointEigenfunction {
    pub n: i64,
    pub eigenvalue: C64,
    pub values: Vec<[C64; 2]>,
    /// Boole weights for (1/π)∫₀^π.
    weights: Vec<f64>,
    pub null_residual: f64,
}

fn boole_weights(intervals: usize) -> Vec<f64> {
    assert!(intervals.is_multiple_of(4));
    let h = std::f64::consts::PI / intervals as f64;
    let mut w = vec![0.0; intervals + 1];
    for p in (0..intervals).step_by(4) {
        for (k, c) in [7.0, 32.0, 12.0, 32.0, 7.0].iter().enumerate() {
            w[p + k] += c * 2.0 * h / 45.0 / std::f64::consts::PI;
        }
    }
    w
}

impl AdjointEigenfunction {
    pub fn x(&self, j: usize) -> f64 {
        std::f64::consts::PI * j as f64 / (self.values.len() - 1) as f64
    }

    /// ⟨u, g̃⟩ for a Galerkin coefficient vector u.
    pub fn pair_with(&self, m: &GalerkinMatrix, u: &DVector<C64>) -> C64 {
        let mut acc = c0();
        for (j, g) in self.values.iter().enumerate() {
            let (u1, u2) = m.eval(u, self.x(j));
            acc += (u1 * g[0].conj() + u2 * g[1].conj()) * self.weights[j];
        }
        acc
    }

    /// ⟨g̃, g⟩ for g = A e_n¹ + B e_n².
    fn pair_free(&self, n: i64, a: C64, b: C64) -> C64 {
        let mut acc = c0();
        for (j, g) in self.values.iter().enumerate() {
            let x = self.x(j);
            let e1 = C64::from_polar(1.0, -(n as f64) * x) * a;
            let e2 = C64::from_polar(1.0, n as f64 * x) * b;
            acc += (g[0] * e1.conj() + g[1] * e2.conj()) * self.weights[j];
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| (g[0].norm_sqr() + g[1].norm_sqr()) * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// g̃_n: unit eigenfunction of L* under bc* for conj(μ_n), gauged so that
/// ⟨g̃_n, g_n⁰⟩ > 0 with g_n⁰ the free adjoint eigenfunction.
pub fn adjoint_eigenfunction(v: &FourierPotential, bc: &GeneralBc, n: i64, mu: C64) -> Result<AdjointEigenfunction> {
    let star = adjoint_bc(&BoundaryCondition::General(*bc));
    let vs = v.adjoint();
    let lam = mu.conj();
    let steps = default_steps(vs.order(), lam.norm() + 1.0).max(2048).div_ceil(16) * 16;
    let prop = Propagator::new(&vs, steps);
    let phi = prop.monodromy(lam);
    let mm = star.matrix();
    // row r: m₀·y₁(0) + m₂·y₂(0) + m₁·y₁(π) + m₃·y₂(π), y(π) = Φ y(0)
    let a: [[C64; 2]; 2] = [0, 1].map(|r| {
        [0, 1].map(|j| {
            let direct = if j == 0 { mm[r][0] } else { mm[r][2] };
            direct + mm[r][1] * phi[0][j] + mm[r][3] * phi[1][j]
        })
    });
    let y0 = eigvec2(&a, c0());
    let null_residual = (a[0][0] * y0[0] + a[0][1] * y0[1])
        .norm()
        .max((a[1][0] * y0[0] + a[1][1] * y0[1]).norm());
    let values = prop.solution_on_grid(lam, y0);
    let mut g = AdjointEigenfunction {
        n,
        eigenvalue: lam,
        weights: boole_weights(steps),
        values,
        null_residual,
    };
    let nrm = g.norm();
    let free = free_eigvec_coeffs(bc, n);
    let ph = g.pair_free(n, free.a_n, free.b_n);
    let k = if ph.norm() > 0.0 { ph.conj() / ph.norm() } else { c1() } / nrm;
    for val in g.values.iter_mut() {
        val[0] *= k;
        val[1] *= k;
    }
    Ok(g)
}

/// C = −2a/√(|a|² + |1 − (−1)ⁿb|²).
pub fn c_target(bc: &GeneralBc, n: i64) -> C64 {
    let s = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    -bc.a() * 2.0 / (bc.a().norm_sqr() + (c1() - bc.b() * s).norm_sqr()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub n: i64,
    pub g_vec: Vec<C64>,
    pub tau: f64,
    pub s: C64,
    pub t: C64,
    /// τ⁻¹⟨G, g̃⟩ = ℓ₀(φ)⟨f, g̃⟩ − ℓ₀(f)⟨φ, g̃⟩
    pub tau_inv_pairing: C64,
    pub c_target: C64,
    pub ilker6_residual: f64,
    pub ell0_f: C64,
    pub ell0_phi: C64,
    pub ell0_g: C64,
    pub ell1_g: C64,
    pub f0_components: (C64, C64),
    pub phi0_components: (C64, C64),
    pub f_pair: C64,
    pub phi_pair: C64,
    pub xi: C64,
    pub gamma: C64,
    pub delta: C64,
    /// max of ‖f − f⁰‖, ‖φ − φ⁰‖ and the trace gaps |f^i(0) − f⁰_i|, |φ^i(0) − φ⁰_i|.
    pub kappa: f64,
    pub ell0_f_dev: f64,
    pub ell0_phi_dev: f64,
    /// |φ⁰ − (conj f₂⁰, −conj f₁⁰)|
    pub phi0_conj_gap: f64,
    /// f¹(0)φ²(0) − f²(0)φ¹(0), exposed without any claim about it.
    pub det_f_phi: C64,
}

pub fn pairing_report(
    m: &GalerkinMatrix,
    v: &FourierPotential,
    bc: &GeneralBc,
    row: &SpectralTriple,
) -> Result<(JordanPair, PairingReport)> {
    let n = row.n;
    let mu = row.mu.ok_or(DiracError::NotGeneral("per"))?;
    let jp = jordan_pair(m, row)?;
    let (f, phi) = (jp.f_vec(), jp.phi_vec());
    let g = adjoint_eigenfunction(v, bc, n, mu)?;
    let ell0 = |u: &DVector<C64>| boundary_functionals(&m.trace(u), bc).0;
    let (l0f, l0phi) = (ell0(&f), ell0(&phi));
    let tau = 1.0 / (l0phi.norm_sqr() + l0f.norm_sqr()).sqrt();
    let (s, t) = (l0phi * tau, -l0f * tau);
    let gv = &f * s + &phi * t;
    let (l0g, l1g) = boundary_functionals(&m.trace(&gv), bc);
    let (fg, phig) = (g.pair_with(m, &f), g.pair_with(m, &phi));
    let tau_inv = l0phi * fg - l0f * phig;
    let delta = mu - jp.lambda_plus;
    let lhs = delta * tau_inv * tau;
    let rhs = t * (jp.xi * fg - jp.gamma * phig);
    let (i1, i2) = (m.index(1, n).unwrap(), m.index(2, n).unwrap());
    let proj = |u: &DVector<C64>| {
        let mut p = DVector::zeros(u.len());
        p[i1] = u[i1];
        p[i2] = u[i2];
        p
    };
    let (f0, phi0) = (proj(&f), proj(&phi));
    let (tf, tphi) = (m.trace(&f), m.trace(&phi));
    let kappa = [
        (&f - &f0).norm(),
        (&phi - &phi0).norm(),
        (tf.s1_0 - f[i1]).norm(),
        (tf.s2_0 - f[i2]).norm(),
        (tphi.s1_0 - phi[i1]).norm(),
        (tphi.s2_0 - phi[i2]).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let gap = ((phi[i1] - f[i2].conj()).norm_sqr() + (phi[i2] + f[i1].conj()).norm_sqr()).sqrt();
    let rep = PairingReport {
        n,
        g_vec: gv.iter().copied().collect(),
        tau,
        s,
        t,
        tau_inv_pairing: tau_inv,
        c_target: c_target(bc, n),
        ilker6_residual: (lhs - rhs).norm(),
        ell0_f: l0f,
        ell0_phi: l0phi,
        ell0_g: l0g,
        ell1_g: l1g,
        f0_components: (f[i1], f[i2]),
        phi0_components: (phi[i1], phi[i2]),
        f_pair: fg,
        phi_pair: phig,
        xi: jp.xi,
        gamma: jp.gamma,
        delta,
        kappa,
        ell0_f_dev: (l0f - ell0(&f0)).norm(),
        ell0_phi_dev: (l0phi - ell0(&phi0)).norm(),
        phi0_conj_gap: gap,
        det_f_phi: tf.s1_0 * tphi.s2_0 - tf.s2_0 * tphi.s1_0,
    };
    Ok((jp, rep))
}

/// Smallest M allowed by the case analysis:
/// max{4(|a|/|1±b|)², 4(|1±b|/|a|)²}.
pub fn m_threshold(bc: &GeneralBc) -> f64 {
    let a = bc.a().norm();
    let ones = [(c1() + bc.b()).norm(), (c1() - bc.b()).norm()];
    ones.iter()
        .flat_map(|&o| [4.0 * (a / o).powi(2), 4.0 * (o / a).powi(2)])
        .fold(0.0, f64::max)
}

pub fn default_m(bc: &GeneralBc) -> f64 {
    4.0 * m_threshold(bc) + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// 1/M ≤ |B⁺|/|B⁻| ≤ M, including B⁺ = B⁻ = 0.
    Balanced,
    /// M|B⁺| < |B⁻|
    CaseI,
    /// M|B⁻| < |B⁺|
    CaseII,
}

pub fn regime(b_plus: f64, b_minus: f64, m: f64) -> Regime {
    if m * b_plus < b_minus {
        Regime::CaseI
    } else if m * b_minus < b_plus {
        Regime::CaseII
    } else {
        Regime::Balanced
    }
}

/// lhs ≤ rhs + slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl Check {
    fn new(lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            lhs,
            rhs,
            ok: lhs <= rhs + slack,
        }
    }
}

/// Constants of the estimates, all explicit in a, b, M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConstants {
    pub m: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 2],
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub c0: f64,
    pub d6: [f64; 2],
    pub d7: f64,
    pub d8: [f64; 2],
    pub d9: f64,
}

impl SuiteConstants {
    /// Indexed by parity: [even, odd] where C depends on it.
    pub fn new(bc: &GeneralBc, m: f64) -> Self {
        let (a, b) = (bc.a().norm(), bc.b().norm());
        let cs = [c_target(bc, 0).norm(), c_target(bc, 1).norm()];
        let delta_bound = cs.map(|c| (2.0 + 2.0 * b + 2.0 * a + c) / c * (1.0 + c));
        let mm = a.min((c1() + bc.b()).norm()).min((c1() - bc.b()).norm());
        let low = mm / (2.0 * (m + 1.0).sqrt());
        let d5 = [c1() - bc.b(), c1() + bc.b()]
            .iter()
            .map(|o| a / (2.0 * (a * a + o.norm_sqr()).sqrt() * (m + 1.0).sqrt()))
            .fold(f64::INFINITY, f64::min);
        let c0 = mm / (m + 1.0).sqrt();
        let d6 = cs.map(|c| (c + 1.0) / (c0 / 2.0 * d5));
        let d7 = 3.0 * (2.0 + b + a) / (c0 / 2.0 * d5);
        Self {
            m,
            d1: delta_bound.map(|x| 5.0 * x),
            d2: delta_bound.map(|x| 2.0 * x),
            d3: low / (1.0 + b + a),
            d4: (2.0 + b + a) / low,
            d5,
            c0,
            d6,
            d7,
            d8: d6.map(|x| 4.0 * x),
            d9: 4.0 * d7 + 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub n: i64,
    pub regime: Regime,
    pub b_plus: f64,
    pub b_minus: f64,
    pub gamma: f64,
    pub delta: f64,
    pub xi: f64,
    pub kappa: f64,
    /// |ξ| ≤ 4|γ| + 2(|B⁺| + |B⁻|)
    pub xi_bound: Check,
    /// |δ| ≤ D1|γ| + D2(|B⁺| + |B⁻|)
    pub delta_bound: Check,
    /// balanced: |β⁻(z*)| + |β⁺(z*)| ≤ ((1+M)/√M)|γ|
    pub balanced_bound: Option<Check>,
    /// case rows: (f-component upper, f-component lower, φ upper, φ lower) in
    /// the ordering of case (i); case (ii) swaps components.
    pub component_bounds: Option<[Check; 4]>,
    /// case rows: D3 < |ℓ₀f|/|ℓ₀φ| < D4
    pub trace_ratio_bounds: Option<[Check; 2]>,
    /// case rows: |B⁺| + |B⁻| ≤ D8|δ| + D9|γ|
    pub beta_bound: Option<Check>,
    /// Same with the coefficients exchanged, as in the statement.
    pub beta_bound_as_stated: Option<Check>,
    pub pairing: PairingReport,
}

impl InequalityRow {
    pub fn all_ok(&self) -> bool {
        let opt = |c: &Option<Check>| c.is_none_or(|c| c.ok);
        self.xi_bound.ok
            && self.delta_bound.ok
            && opt(&self.balanced_bound)
            && opt(&self.beta_bound)
            && self.component_bounds.is_none_or(|cs| cs.iter().all(|c| c.ok))
            && self.trace_ratio_bounds.is_none_or(|cs| cs.iter().all(|c| c.ok))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub constants: SuiteConstants,
    pub rows: Vec<InequalityRow>,
    pub failures: Vec<(i64, String)>,
    /// sup |δ| / (|γ| + |B⁺| + |B⁻|) over resolved rows
    pub sup_delta_ratio: Option<f64>,
    /// sup (|B⁺| + |B⁻|) / (|γ| + |δ|) over resolved rows
    pub sup_beta_ratio: Option<f64>,
    pub vacuous: bool,
}

fn sup(xs: impl Iterator<Item = f64>) -> Option<f64> {
    xs.fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
}

fn inequality_row(
    m: &GalerkinMatrix,
    v: &FourierPotential,
    bc: &GeneralBc,
    row: &SpectralTriple,
    k: &SuiteConstants,
) -> Result<InequalityRow> {
    let n = row.n;
    let par = if n.rem_euclid(2) == 0 { 0 } else { 1 };
    let red = FeshbachReducer::new(m, n)?;
    let s_plus = red.reduce(row.z_plus)?;
    let s_star = red.reduce(row.z_star)?;
    let (bp, bm) = (s_plus.beta_plus.norm(), s_plus.beta_minus.norm());
    let (_, rep) = pairing_report(m, v, bc, row)?;
    let (gamma, delta, xi) = (rep.gamma.norm(), rep.delta.norm(), rep.xi.norm());
    let slack = 10.0 * resolution_floor(n);
    let reg = regime(bp, bm, k.m);
    let sm = k.m;
    let mut out = InequalityRow {
        n,
        regime: reg,
        b_plus: bp,
        b_minus: bm,
        gamma,
        delta,
        xi,
        kappa: rep.kappa,
        xi_bound: Check::new(xi, 4.0 * gamma + 2.0 * (bp + bm), slack),
        delta_bound: Check::new(delta, k.d1[par] * gamma + k.d2[par] * (bp + bm), slack),
        balanced_bound: None,
        component_bounds: None,
        trace_ratio_bounds: None,
        beta_bound: None,
        beta_bound_as_stated: None,
        pairing: rep.clone(),
    };
    match reg {
        Regime::Balanced => {
            let lhs = s_star.beta_minus.norm() + s_star.beta_plus.norm();
            out.balanced_bound = Some(Check::new(lhs, (1.0 + sm) / sm.sqrt() * gamma, slack));
        }
        Regime::CaseI | Regime::CaseII => {
            let (f1, f2) = rep.f0_components;
            let (p1, p2) = rep.phi0_components;
            let fn0 = (f1.norm_sqr() + f2.norm_sqr()).sqrt();
            // dominant / minor components in the case (i) ordering
            let (f_big, f_small, p_big, p_small) = match reg {
                Regime::CaseI => (f1.norm(), f2.norm(), p2.norm(), p1.norm()),
                _ => (f2.norm(), f1.norm(), p1.norm(), p2.norm()),
            };
            let kap = rep.kappa;
            let inv = 1.0 / (sm + 1.0).sqrt();
            let root = (sm / (sm + 1.0)).sqrt();
            out.component_bounds = Some([
                Check::new(f_small / fn0, inv, slack),
                Check::new(root, f_big / fn0, slack),
                Check::new(p_small, inv + 4.0 * kap.sqrt(), slack),
                Check::new(root * (1.0 - 16.0 * kap).max(0.0).sqrt(), p_big, slack),
            ]);
            let ratio = rep.ell0_f.norm() / rep.ell0_phi.norm();
            out.trace_ratio_bounds = Some([Check::new(k.d3, ratio, 0.0), Check::new(ratio, k.d4, 0.0)]);
            out.beta_bound = Some(Check::new(bp + bm, k.d8[par] * delta + k.d9 * gamma, slack));
            out.beta_bound_as_stated = Some(Check::new(bp + bm, k.d8[par] * gamma + k.d9 * delta, slack));
        }
    }
    Ok(out)
}

/// Runs the suite over every table row; rows that fail to compute are
/// listed, not fatal.
pub fn inequality_suite(
    v: &FourierPotential,
    bc: &GeneralBc,
    table: &SpectralTable,
    galerkin: &BTreeMap<Parity, GalerkinMatrix>,
    m: Option<f64>,
) -> Result<InequalityReport> {
    use rayon::prelude::*;
    let m = m.unwrap_or_else(|| default_m(bc));
    if !(m > m_threshold(bc)) {
        return Err(DiracError::BadParams(format!(
            "M = {m} must exceed {}",
            m_threshold(bc)
        )));
    }
    let k = SuiteConstants::new(bc, m);
    let results: Vec<(i64, Result<InequalityRow>)> = table
        .rows
        .par_iter()
        .map(|row| {
            let res = galerkin
                .get(&Parity::of(row.n))
                .ok_or(DiracError::BadParams(format!("no Galerkin matrix for n = {}", row.n)))
                .and_then(|g| inequality_row(g, v, bc, row, &k));
            (row.n, res)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in results {
        match r {
            Ok(r) => rows.push(r),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    let resolved = |r: &&InequalityRow| r.gamma + r.delta + r.b_plus + r.b_minus > 10.0 * resolution_floor(r.n);
    let sup_delta_ratio = sup(rows
        .iter()
        .filter(resolved)
        .filter(|r| r.gamma + r.b_plus + r.b_minus > 0.0)
        .map(|r| r.delta / (r.gamma + r.b_plus + r.b_minus)));
    let sup_beta_ratio = sup(rows
        .iter()
        .filter(resolved)
        .filter(|r| r.gamma + r.delta > 0.0)
        .map(|r| (r.b_plus + r.b_minus) / (r.gamma + r.delta)));
    let vacuous = rows.iter().all(|r| r.gamma == 0.0 && r.b_plus == 0.0 && r.b_minus == 0.0 && r.delta <= resolution_floor(r.n));
    Ok(InequalityReport {
        constants: k,
        rows,
        failures,
        sup_delta_ratio,
        sup_beta_ratio,
        vacuous,
    })
}
