//! 2×2 Feshbach reduction of (n+z) − L onto E_n⁰ = span{e_n¹, e_n²}:
//!
//!   S(z) = PVP + PVQ·((n+z) − QLQ)⁻¹·QVP,
//!
//! so n+z is an eigenvalue of L iff z is an eigenvalue of S(z). Entries are
//! labelled by the system (z − α)f₁ − β⁻f₂ = 0, (z − α)f₂ − β⁺f₁ = 0:
//! β⁻ = S₁₂ (e¹ row, e² column), β⁺ = S₂₁.
//!
//! The complement solve uses QLQ = [[D, P], [Q, D]] with D diagonal, reducing
//! to the Schur complement T = E − Q·E⁻¹·P, E = (n+z) − D.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{DiracError, Result};
use crate::operator::GalerkinMatrix;
use crate::spectral::{resolution_floor, SpectralTriple};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    pub n: i64,
    pub z: C64,
    pub alpha: C64,
    pub beta_minus: C64,
    pub beta_plus: C64,
    /// |S₁₁ − S₂₂|
    pub diag_asymmetry: f64,
    pub s11: C64,
    pub s22: C64,
    /// Set when the complement was singular at z and z + 1e−8 was used.
    pub perturbed: bool,
}

impl SMatrix {
    /// Both eigenvalues of the 2×2 matrix [[S₁₁, β⁻], [β⁺, S₂₂]].
    pub fn eigenvalues(&self) -> [C64; 2] {
        let m = (self.s11 + self.s22) * 0.5;
        let h = (self.s11 - self.s22) * 0.5;
        let r = (h * h + self.beta_minus * self.beta_plus).sqrt();
        [m + r, m - r]
    }

    /// |(z − α)² − β⁻β⁺| at this matrix's z.
    pub fn basic_residual(&self) -> f64 {
        ((self.z - self.alpha).powu(2) - self.beta_minus * self.beta_plus).norm()
    }

    /// Eigenvector (f₁, f₂) of S for the eigenvalue `e`, unit length.
    pub fn eigenvector(&self, e: C64) -> [C64; 2] {
        // rows (S₁₁ − e, β⁻) and (β⁺, S₂₂ − e); use the larger one
        let r1 = [self.s11 - e, self.beta_minus];
        let r2 = [self.beta_plus, self.s22 - e];
        let row = if r1[0].norm() + r1[1].norm() >= r2[0].norm() + r2[1].norm() { r1 } else { r2 };
        let v = if row[0].norm() + row[1].norm() == 0.0 {
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        } else {
            [row[1], -row[0]]
        };
        let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / nrm, v[1] / nrm]
    }
}

/// Precomputed blocks for repeated reductions at one index n.
pub struct FeshbachReducer {
    n: i64,
    p_others: DMatrix<C64>,
    q_others: DMatrix<C64>,
    diag: Vec<f64>,
    /// PVQ rows: e_n¹ against the e² complement, e_n² against the e¹ complement.
    row1: DVector<C64>,
    row2: DVector<C64>,
    /// QVP columns: V e_n¹ lands in the e² complement, V e_n² in the e¹ complement.
    col1: DVector<C64>,
    col2: DVector<C64>,
    pvp12: C64,
    pvp21: C64,
}

impl FeshbachReducer {
    pub fn new(m: &GalerkinMatrix, n: i64) -> Result<Self> {
        let mm = m.mode_count();
        let i_n = m.mode_index(n).ok_or(DiracError::BadParams(format!(
            "index {n} is not a mode of the {:?} Galerkin matrix",
            m.parity
        )))?;
        let others: Vec<usize> = (0..mm).filter(|&i| i != i_n).collect();
        let e = &m.entries;
        let p = |i: usize, l: usize| e[(i, mm + l)];
        let q = |i: usize, l: usize| e[(mm + i, l)];
        let k = others.len();
        Ok(Self {
            n,
            p_others: DMatrix::from_fn(k, k, |a, b| p(others[a], others[b])),
            q_others: DMatrix::from_fn(k, k, |a, b| q(others[a], others[b])),
            diag: others.iter().map(|&i| m.modes[i] as f64).collect(),
            row1: DVector::from_fn(k, |a, _| p(i_n, others[a])),
            row2: DVector::from_fn(k, |a, _| q(i_n, others[a])),
            col1: DVector::from_fn(k, |a, _| q(others[a], i_n)),
            col2: DVector::from_fn(k, |a, _| p(others[a], i_n)),
            pvp12: p(i_n, i_n),
            pvp21: q(i_n, i_n),
        })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    fn try_reduce(&self, z: C64) -> Option<[[C64; 2]; 2]> {
        let w = C64::new(self.n as f64, 0.0) + z;
        let einv: Vec<C64> = self.diag.iter().map(|&d| (w - d).inv()).collect();
        if einv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return None;
        }
        let k = self.diag.len();
        // T = E − Q·E⁻¹·P
        let mut scaled_p = self.p_others.clone();
        for (i, mut row) in scaled_p.row_iter_mut().enumerate() {
            row *= einv[i];
        }
        let mut t = -(&self.q_others * &scaled_p);
        for i in 0..k {
            t[(i, i)] += w - self.diag[i];
        }
        let lu = t.lu();
        // [x; y] = R·[0; col1]:  T y = col1,  x = E⁻¹·P·y
        let y1 = lu.solve(&self.col1)?;
        let x1 = &scaled_p * &y1;
        // [x; y] = R·[col2; 0]:  T y = Q·E⁻¹·col2,  x = E⁻¹·(col2 + P·y)
        let e_col2 = DVector::from_fn(k, |i, _| self.col2[i] * einv[i]);
        let y2 = lu.solve(&(&self.q_others * &e_col2))?;
        let x2 = e_col2 + &scaled_p * &y2;
        let s = [
            [self.row1.dot(&y1), self.pvp12 + self.row1.dot(&y2)],
            [self.pvp21 + self.row2.dot(&x1), self.row2.dot(&x2)],
        ];
        let finite = s.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite());
        finite.then_some(s)
    }

    pub fn reduce(&self, z: C64) -> Result<SMatrix> {
        let (s, perturbed) = match self.try_reduce(z) {
            Some(s) => (s, false),
            None => {
                let s = self
                    .try_reduce(z + 1e-8)
                    .ok_or(DiracError::ComplementSingular { n: self.n, z })?;
                (s, true)
            }
        };
        Ok(SMatrix {
            n: self.n,
            z,
            alpha: (s[0][0] + s[1][1]) * 0.5,
            beta_minus: s[0][1],
            beta_plus: s[1][0],
            diag_asymmetry: (s[0][0] - s[1][1]).norm(),
            s11: s[0][0],
            s22: s[1][1],
            perturbed,
        })
    }
}

/// S(z) at index n for the Galerkin matrix of matching parity.
pub fn feshbach_reduce(m: &GalerkinMatrix, n: i64, z: C64) -> Result<SMatrix> {
    FeshbachReducer::new(m, n)?.reduce(z)
}

/// Ordering contract: larger real part first; on a real-part tie the larger
/// imaginary part. A tie is a real-part gap below 1e−9 of the pair distance
/// plus 1e−14·max(1,|n|).
pub fn order_pair(a: C64, b: C64, n: i64) -> (C64, C64) {
    let tie_tol = 1e-9 * (a - b).norm() + 1e-14 * (n.unsigned_abs() as f64).max(1.0);
    let a_first = if (a.re - b.re).abs() <= tie_tol { a.im >= b.im } else { a.re > b.re };
    if a_first {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFixedPoint {
    pub z_plus: C64,
    pub z_minus: C64,
    pub evaluations: usize,
}

/// Solves z = eig(S(z)) for both roots in the disc, starting from a guess.
/// A joint phase iterates on the pair's midpoint; each root is then tracked
/// separately by proximity.
pub fn solve_pair(red: &FeshbachReducer, guess: (C64, C64)) -> Result<PairFixedPoint> {
    let mut evals = 0;
    let tol = 1e-15;
    let mut pair = [guess.0, guess.1];
    for _ in 0..40 {
        let mid = (pair[0] + pair[1]) * 0.5;
        let e = red.reduce(mid)?.eigenvalues();
        evals += 1;
        let step = ((e[0] + e[1]) * 0.5 - mid).norm();
        pair = e;
        if step <= tol * (1.0 + mid.norm()) {
            break;
        }
    }
    for slot in 0..2 {
        let mut z = pair[slot];
        let mut converged = false;
        let mut last_step = f64::INFINITY;
        for _ in 0..60 {
            let e = red.reduce(z)?.eigenvalues();
            evals += 1;
            let next = if (e[0] - z).norm() <= (e[1] - z).norm() { e[0] } else { e[1] };
            let step = (next - z).norm();
            z = next;
            if step <= tol * (1.0 + z.norm()) || (step >= last_step && step < 1e-13) {
                converged = true;
                break;
            }
            last_step = step;
        }
        if !converged {
            return Err(DiracError::NoConvergence {
                near: C64::new(red.n as f64, 0.0) + z,
            });
        }
        pair[slot] = z;
    }
    let (zp, zm) = order_pair(pair[0], pair[1], red.n);
    Ok(PairFixedPoint {
        z_plus: zp,
        z_minus: zm,
        evaluations: evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicResidual {
    pub n: i64,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

/// |(z − α(z))² − β⁻(z)β⁺(z)| at the χ roots of a table row, which are
/// computed without the Galerkin matrix.
pub fn basic_equation_residual(red: &FeshbachReducer, row: &SpectralTriple) -> Result<BasicResidual> {
    let nf = row.n as f64;
    let at = |l: C64| red.reduce(l - nf).map(|s| s.basic_residual());
    Ok(BasicResidual {
        n: row.n,
        residual_plus: at(row.chi_roots[0])?,
        residual_minus: at(row.chi_roots[1])?,
    })
}

/// `ratio` is None when the denominator is below the resolution floor;
/// `vacuous` when both sides are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Row {
    pub n: i64,
    /// |β⁻(z*)| + |β⁺(z*)|
    pub num: f64,
    /// |γ| + |δ|
    pub den: f64,
    pub ratio: Option<f64>,
    pub vacuous: bool,
    pub s_star: SMatrix,
    /// B± = β±(z⁺)
    pub b_plus: C64,
    pub b_minus: C64,
}

pub fn theorem3_ratio(red: &FeshbachReducer, row: &SpectralTriple) -> Result<Theorem3Row> {
    let s_star = red.reduce(row.z_star)?;
    let s_plus = red.reduce(row.z_plus)?;
    let num = s_star.beta_minus.norm() + s_star.beta_plus.norm();
    let den = row.big_delta;
    let floor = resolution_floor(row.n);
    Ok(Theorem3Row {
        n: row.n,
        num,
        den,
        ratio: (den > floor).then(|| num / den),
        vacuous: num <= floor && den <= floor,
        s_star,
        b_plus: s_plus.beta_plus,
        b_minus: s_plus.beta_minus,
    })
}
