//! Exact trigonometric vector functions u = (Σ a_s e^{isx}, Σ b_s e^{isx}),
//! s ∈ ℤ of either parity, with closed-form inner products on [0, π].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::bc::{BoundaryCondition, BoundaryTrace};
use crate::potential::FourierPotential;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPair {
    pub first: BTreeMap<i64, C64>,
    pub second: BTreeMap<i64, C64>,
}

/// (1/π)∫₀^π e^{isx} dx.
fn mean_exp(s: i64) -> C64 {
    if s == 0 {
        C64::new(1.0, 0.0)
    } else if s % 2 == 0 {
        C64::new(0.0, 0.0)
    } else {
        // (e^{iπs} − 1)/(iπs) = −2/(iπs)
        C64::new(0.0, 2.0 / (PI * s as f64))
    }
}

fn add_term(m: &mut BTreeMap<i64, C64>, s: i64, v: C64) {
    *m.entry(s).or_insert(C64::new(0.0, 0.0)) += v;
}

impl TrigPair {
    pub fn new(first: &[(i64, C64)], second: &[(i64, C64)]) -> Self {
        let mut u = Self::default();
        for &(s, v) in first {
            add_term(&mut u.first, s, v);
        }
        for &(s, v) in second {
            add_term(&mut u.second, s, v);
        }
        u
    }

    pub fn eval(&self, x: f64) -> (C64, C64) {
        let f = |m: &BTreeMap<i64, C64>| m.iter().map(|(&s, &v)| v * C64::from_polar(1.0, s as f64 * x)).sum();
        (f(&self.first), f(&self.second))
    }

    pub fn trace(&self) -> BoundaryTrace {
        let (a0, b0) = self.eval(0.0);
        let alt = |m: &BTreeMap<i64, C64>| -> C64 {
            m.iter().map(|(&s, &v)| if s.rem_euclid(2) == 0 { v } else { -v }).sum()
        };
        BoundaryTrace::new(a0, alt(&self.first), b0, alt(&self.second))
    }

    pub fn scaled_add(&self, k: C64, o: &TrigPair) -> TrigPair {
        let mut r = self.clone();
        for (&s, &v) in &o.first {
            add_term(&mut r.first, s, k * v);
        }
        for (&s, &v) in &o.second {
            add_term(&mut r.second, s, k * v);
        }
        r
    }

    /// L u = iσ₃u′ + V u.
    pub fn apply(&self, v: &FourierPotential) -> TrigPair {
        let mut r = TrigPair::default();
        let kmax = v.order() as i64;
        for (&s, &a) in &self.first {
            // i·(is)·a = −s·a
            add_term(&mut r.first, s, a * (-(s as f64)));
            for k in -kmax..=kmax {
                let qk = v.q(k);
                if qk.norm_sqr() != 0.0 {
                    add_term(&mut r.second, s + 2 * k, qk * a);
                }
            }
        }
        for (&s, &b) in &self.second {
            // −i·(is)·b = s·b
            add_term(&mut r.second, s, b * s as f64);
            for k in -kmax..=kmax {
                let pk = v.p(k);
                if pk.norm_sqr() != 0.0 {
                    add_term(&mut r.first, s + 2 * k, pk * b);
                }
            }
        }
        r
    }

    /// ⟨u, w⟩ = (1/π)∫₀^π (u₁w̄₁ + u₂w̄₂) dx in closed form.
    pub fn inner(&self, w: &TrigPair) -> C64 {
        let comp = |a: &BTreeMap<i64, C64>, b: &BTreeMap<i64, C64>| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for (&s, &x) in a {
                for (&t, &y) in b {
                    acc += x * y.conj() * mean_exp(s - t);
                }
            }
            acc
        };
        comp(&self.first, &w.first) + comp(&self.second, &w.second)
    }

    /// Adds a combination of two low-frequency correctors so that both boundary
    /// functionals of `bc` vanish on the result.
    pub fn project_onto_bc(&self, bc: &BoundaryCondition) -> TrigPair {
        let m = bc.matrix();
        let ell = |t: &BoundaryTrace| -> [C64; 2] {
            let s = [t.s1_0, t.s1_pi, t.s2_0, t.s2_pi];
            [0, 1].map(|r| (0..4).map(|i| m[r][i] * s[i]).sum())
        };
        let one = C64::new(1.0, 0.0);
        let candidates = [
            TrigPair::new(&[(0, one)], &[]),
            TrigPair::new(&[], &[(0, one)]),
            TrigPair::new(&[(1, one)], &[]),
            TrigPair::new(&[], &[(1, one)]),
        ];
        let ells: Vec<[C64; 2]> = candidates.iter().map(|w| ell(&w.trace())).collect();
        let mut best = (0, 1, 0.0);
        for i in 0..4 {
            for j in i + 1..4 {
                let det = (ells[i][0] * ells[j][1] - ells[j][0] * ells[i][1]).norm();
                if det > best.2 {
                    best = (i, j, det);
                }
            }
        }
        let (i, j, _) = best;
        let r = ell(&self.trace());
        let det = ells[i][0] * ells[j][1] - ells[j][0] * ells[i][1];
        // solve [ell_i ell_j]·(x, y) = −r
        let x = (-r[0] * ells[j][1] + r[1] * ells[j][0]) / det;
        let y = (-r[1] * ells[i][0] + r[0] * ells[i][1]) / det;
        self.scaled_add(x, &candidates[i]).scaled_add(y, &candidates[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{adjoint_bc, boundary_functionals, validate_bc, GeneralBc};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inner_matches_quadrature() {
        let u = TrigPair::new(&[(0, c(1., 0.)), (3, c(0.2, -0.1))], &[(-1, c(0., 1.))]);
        let w = TrigPair::new(&[(2, c(0.5, 0.5)), (0, c(0.3, 0.))], &[(4, c(1., -1.)), (-1, c(0.2, 0.))]);
        let n = 200_000;
        let h = PI / n as f64;
        let mut acc = c(0., 0.);
        for j in 0..=n {
            let x = j as f64 * h;
            let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
            let (a, b) = u.eval(x);
            let (p, q) = w.eval(x);
            acc += (a * p.conj() + b * q.conj()) * wt;
        }
        assert!((acc * h / PI - u.inner(&w)).norm() < 1e-9);
    }

    #[test]
    fn projection_satisfies_bc() {
        let g = validate_bc(c(1., 0.5), c(2., 0.), c(-2., 0.), c(-3., 0.) / c(1., 0.5)).unwrap();
        let u = TrigPair::new(&[(2, c(0.3, 0.)), (-3, c(0., 1.))], &[(1, c(0.5, 0.2))]);
        let pu = u.project_onto_bc(&g);
        let (l0, l1) = boundary_functionals(&pu.trace(), g.general().unwrap());
        assert!(l0.norm() < 1e-13 && l1.norm() < 1e-13);
        let star = adjoint_bc(&g);
        let pv = u.project_onto_bc(&star);
        let (l0, l1) = boundary_functionals(&pv.trace(), star.general().unwrap());
        assert!(l0.norm() < 1e-13 && l1.norm() < 1e-13);
    }

    #[test]
    fn free_operator_is_symmetric_on_dirichlet_type() {
        let bc = BoundaryCondition::General(GeneralBc::dirichlet_plus());
        let v = FourierPotential::zero();
        let u = TrigPair::new(&[(1, c(1., 0.)), (2, c(0.4, 0.1))], &[(3, c(0., 0.5))]).project_onto_bc(&bc);
        let w = TrigPair::new(&[(-2, c(1., 1.))], &[(0, c(0.2, 0.)), (5, c(0.1, 0.))]).project_onto_bc(&bc);
        let lhs = u.apply(&v).inner(&w);
        let rhs = u.inner(&w.apply(&v));
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
