//! Galerkin matrix of L on the Per± subspaces.
//!
//! Basis e_k¹ = (e^{−ikx}, 0), e_k² = (0, e^{ikx}) with k ≡ parity (mod 2)
//! and |k| ≤ 2K + parity. Layout: all e¹ modes first, then all e² modes,
//! both in increasing k. Entries:
//!   ⟨L e_k^s, e_k^s⟩ = k,
//!   ⟨V e_k², e_j¹⟩ = p(−(j+k)/2),
//!   ⟨V e_k¹, e_j²⟩ = q((j+k)/2).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bc::{BoundaryCondition, BoundaryTrace};
use crate::error::{DiracError, Result};
use crate::potential::FourierPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: i64) -> Self {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn offset(self) -> i64 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    /// Per⁺ for even, Per⁻ for odd indices.
    pub fn bc(self) -> BoundaryCondition {
        match self {
            Parity::Even => BoundaryCondition::PerPlus,
            Parity::Odd => BoundaryCondition::PerMinus,
        }
    }

    /// (−1)^k for every k of this parity.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinMatrix {
    pub parity: Parity,
    pub k_cut: usize,
    pub modes: Vec<i64>,
    pub entries: DMatrix<C64>,
}

pub fn assemble_galerkin(v: &FourierPotential, parity: Parity, k_cut: usize) -> Result<GalerkinMatrix> {
    if k_cut == 0 || k_cut < v.order() {
        return Err(DiracError::TruncationTooSmall {
            k_cut,
            order: v.order(),
        });
    }
    let top = 2 * k_cut as i64 + parity.offset();
    let modes: Vec<i64> = (-top..=top).step_by(2).collect();
    let m = modes.len();
    let mut a = DMatrix::<C64>::zeros(2 * m, 2 * m);
    for (i, &j) in modes.iter().enumerate() {
        a[(i, i)] = C64::new(j as f64, 0.0);
        a[(m + i, m + i)] = C64::new(j as f64, 0.0);
        for (l, &k) in modes.iter().enumerate() {
            let s = (j + k) / 2;
            a[(i, m + l)] = v.p(-s);
            a[(m + i, l)] = v.q(s);
        }
    }
    Ok(GalerkinMatrix {
        parity,
        k_cut,
        modes,
        entries: a,
    })
}

impl GalerkinMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Position of mode k in the mode list.
    pub fn mode_index(&self, k: i64) -> Option<usize> {
        let top = *self.modes.last()?;
        if (k - self.parity.offset()).rem_euclid(2) != 0 || k.abs() > top {
            return None;
        }
        Some(((k + top) / 2) as usize)
    }

    /// Row/column of e_k¹ (component 1) or e_k² (component 2).
    pub fn index(&self, component: usize, k: i64) -> Option<usize> {
        let i = self.mode_index(k)?;
        match component {
            1 => Some(i),
            2 => Some(self.modes.len() + i),
            _ => None,
        }
    }

    /// All eigenvalues from a dense complex Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.entries
            .clone()
            .schur()
            .eigenvalues()
            .map(|e| e.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Eigenvalues with |λ − center| < radius.
    pub fn eigenvalues_near(&self, center: C64, radius: f64) -> Vec<C64> {
        self.eigenvalues()
            .into_iter()
            .filter(|l| (l - center).norm() < radius)
            .collect()
    }

    /// Indices n for which eigenvalues near n are trusted: |n| ≤ K − K/4.
    pub fn trust_limit(&self) -> i64 {
        (self.k_cut - self.k_cut / 4) as i64
    }

    /// Unit coordinate vector of e_n^component.
    pub fn unit(&self, component: usize, n: i64) -> Option<DVector<C64>> {
        let i = self.index(component, n)?;
        let mut v = DVector::zeros(self.dim());
        v[i] = C64::new(1.0, 0.0);
        Some(v)
    }

    /// Boundary traces of the function with coefficient vector `c`.
    pub fn trace(&self, c: &DVector<C64>) -> BoundaryTrace {
        let m = self.modes.len();
        let s1: C64 = c.rows(0, m).iter().sum();
        let s2: C64 = c.rows(m, m).iter().sum();
        let sg = self.parity.sign();
        BoundaryTrace::new(s1, s1 * sg, s2, s2 * sg)
    }

    /// Function values (u₁(x), u₂(x)) by direct trig-series evaluation.
    pub fn eval(&self, c: &DVector<C64>, x: f64) -> (C64, C64) {
        let m = self.modes.len();
        let w = C64::from_polar(1.0, 2.0 * x);
        let k0 = self.modes[0] as f64;
        let mut e_minus = C64::from_polar(1.0, -k0 * x);
        let mut e_plus = C64::from_polar(1.0, k0 * x);
        let wc = w.conj();
        let (mut u1, mut u2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for i in 0..m {
            u1 += c[i] * e_minus;
            u2 += c[m + i] * e_plus;
            e_minus *= wc;
            e_plus *= w;
        }
        (u1, u2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// ⟨V e_k^s, e_j^t⟩ by trapezoid quadrature on [0, π].
    fn quad_entry(v: &FourierPotential, t: usize, j: i64, s: usize, k: i64) -> C64 {
        let n = 512;
        let mut acc = c(0., 0.);
        for i in 0..n {
            let x = i as f64 * PI / n as f64;
            let (pp, qq) = v.eval(x);
            let (u1, u2) = if s == 1 {
                (C64::from_polar(1.0, -(k as f64) * x), c(0., 0.))
            } else {
                (c(0., 0.), C64::from_polar(1.0, k as f64 * x))
            };
            let vu = (pp * u2, qq * u1);
            let (w1, w2) = if t == 1 {
                (C64::from_polar(1.0, -(j as f64) * x), c(0., 0.))
            } else {
                (c(0., 0.), C64::from_polar(1.0, j as f64 * x))
            };
            acc += vu.0 * w1.conj() + vu.1 * w2.conj();
        }
        acc / n as f64
    }

    #[test]
    fn entries_match_quadrature_oracle() {
        let v = FourierPotential::from_pairs(
            &[(-2, c(0.3, 0.1)), (-1, c(0.2, -0.4)), (1, c(0.7, 0.)), (3, c(0., 0.25))],
            &[(0, c(0.5, 0.5)), (1, c(-0.3, 0.2)), (-2, c(0.1, 0.))],
        )
        .unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let g = assemble_galerkin(&v, parity, 4).unwrap();
            let ks: Vec<i64> = g.modes.iter().copied().filter(|k| k.abs() <= 5).collect();
            for &j in &ks {
                for &k in &ks {
                    for (t, s) in [(1, 2), (2, 1), (1, 1), (2, 2)] {
                        let want = quad_entry(&v, t, j, s, k);
                        let got = g.entries[(g.index(t, j).unwrap(), g.index(s, k).unwrap())];
                        let free = if t == s && j == k { c(k as f64, 0.) } else { c(0., 0.) };
                        assert!((got - free - want).norm() < 1e-12, "({t},{j}) ({s},{k})");
                    }
                }
            }
        }
        let g = assemble_galerkin(&v, Parity::Even, 4).unwrap();
        assert_eq!(g.entries[(g.index(1, 0).unwrap(), g.index(2, 2).unwrap())], v.p(-1));
    }

    #[test]
    fn free_matrix_is_diagonal() {
        let g = assemble_galerkin(&FourierPotential::zero(), Parity::Odd, 3).unwrap();
        assert_eq!(g.modes, vec![-7, -5, -3, -1, 1, 3, 5, 7]);
        let mut ev: Vec<f64> = g.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = g.modes.iter().flat_map(|&k| [k as f64, k as f64]).collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(ev, want);
    }

    #[test]
    fn constant_potential_couples_opposite_modes() {
        // p(0) = q(0) = 1 pairs e_{−k}¹ with e_k², so each block is [[−k, 1], [1, k]]
        // and the eigenvalues are ±√(k² + 1), each twice.
        let v = FourierPotential::from_pairs(&[(0, c(1., 0.))], &[(0, c(1., 0.))]).unwrap();
        let g = assemble_galerkin(&v, Parity::Even, 2).unwrap();
        let mut ev: Vec<f64> = g.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = g
            .modes
            .iter()
            .flat_map(|&k| {
                let r = ((k * k) as f64 + 1.0).sqrt();
                [r, -r]
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{ev:?} vs {want:?}");
        }
    }

    #[test]
    fn single_mode_potential_gives_split_pair() {
        // p(−6) = q(6) = 0.4 couples e_6¹ and e_6² only with each other:
        // block [[6, .4], [.4, 6]], eigenvalues 6 ± 0.4.
        let v = FourierPotential::from_pairs(&[(-6, c(0.4, 0.))], &[(6, c(0.4, 0.))]).unwrap();
        let g = assemble_galerkin(&v, Parity::Even, 8).unwrap();
        let near = g.eigenvalues_near(c(6., 0.), 0.45);
        let mut re: Vec<f64> = near.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re.len(), 2);
        assert!((re[0] - 5.6).abs() < 1e-12 && (re[1] - 6.4).abs() < 1e-12);
    }

    #[test]
    fn truncation_guard() {
        let v = FourierPotential::from_pairs(&[(5, c(1., 0.))], &[]).unwrap();
        assert!(matches!(
            assemble_galerkin(&v, Parity::Even, 4),
            Err(DiracError::TruncationTooSmall { k_cut: 4, order: 5 })
        ));
    }

    #[test]
    fn trace_and_eval_agree() {
        let g = assemble_galerkin(&FourierPotential::zero(), Parity::Odd, 2).unwrap();
        let cvec = DVector::from_fn(g.dim(), |i, _| c(0.1 * i as f64, 0.3 - 0.05 * i as f64));
        let tr = g.trace(&cvec);
        let (a0, b0) = g.eval(&cvec, 0.0);
        let (ap, bp) = g.eval(&cvec, PI);
        assert!((tr.s1_0 - a0).norm() < 1e-12 && (tr.s2_0 - b0).norm() < 1e-12);
        assert!((tr.s1_pi - ap).norm() < 1e-12 && (tr.s2_pi - bp).norm() < 1e-12);
    }
}
