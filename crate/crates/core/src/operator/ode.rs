//! Fundamental solution of
//!   y₁′ = −iλy₁ + i𝒫y₂,   y₂′ = iλy₂ − i𝒬y₁
//! (the first-order form of iσ₃y′ + Vy = λy) by a sixth-order Magnus
//! integrator with three Gauss nodes per step. The system is trace-free, so
//! every step is an exact SL(2) map and det Φ = 1 up to rounding.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bc::BoundaryCondition;
use crate::potential::FourierPotential;

pub type Mat2 = [[C64; 2]; 2];

const IDENTITY: Mat2 = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSolution {
    pub lambda: C64,
    /// Φ(π, λ), rows then columns.
    pub phi: Mat2,
}

impl FundamentalSolution {
    pub fn det(&self) -> C64 {
        self.phi[0][0] * self.phi[1][1] - self.phi[0][1] * self.phi[1][0]
    }
}

/// Step count max(256, 16·(K + ⌈|λ|⌉)), rounded up to a multiple of 16.
pub fn default_steps(order: usize, lambda_abs: f64) -> usize {
    let raw = 16 * (order + lambda_abs.ceil() as usize);
    raw.max(256).div_ceil(16) * 16
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn comm(a: &Mat2, b: &Mat2) -> Mat2 {
    let ab = mul(a, b);
    let ba = mul(b, a);
    [[ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]], [ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]]]
}

fn lin(terms: &[(f64, &Mat2)]) -> Mat2 {
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    for (w, m) in terms {
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] += m[i][j] * *w;
            }
        }
    }
    r
}

/// exp of a trace-free 2×2 matrix: cosh(s)·I + sinh(s)/s·Ω with s² = −det Ω.
fn expm_traceless(o: &Mat2) -> Mat2 {
    let s2 = o[0][0] * o[0][0] + o[0][1] * o[1][0];
    let (ch, sh) = if s2.norm() < 1e-6 {
        let s4 = s2 * s2;
        (
            1.0 + s2 / 2.0 + s4 / 24.0 + s4 * s2 / 720.0,
            1.0 + s2 / 6.0 + s4 / 120.0 + s4 * s2 / 5040.0,
        )
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    [[ch + sh * o[0][0], sh * o[0][1]], [sh * o[1][0], ch + sh * o[1][1]]]
}

/// Pre-sampled potential for a fixed step count.
#[derive(Debug, Clone)]
pub struct Propagator {
    steps: usize,
    h: f64,
    /// (𝒫, 𝒬) at the three Gauss nodes of every step.
    samples: Vec<[(C64, C64); 3]>,
}

impl Propagator {
    pub fn new(v: &FourierPotential, steps: usize) -> Self {
        let steps = steps.max(1);
        let h = std::f64::consts::PI / steps as f64;
        let d = 15f64.sqrt() / 10.0;
        let nodes = [0.5 - d, 0.5, 0.5 + d];
        let samples = (0..steps)
            .map(|j| nodes.map(|t| v.eval((j as f64 + t) * h)))
            .collect();
        Self { steps, h, samples }
    }

    /// Propagator with the default step count for |λ| up to `lambda_abs`.
    pub fn for_range(v: &FourierPotential, lambda_abs: f64) -> Self {
        Self::new(v, default_steps(v.order(), lambda_abs))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn step_map(&self, j: usize, lambda: C64) -> Mat2 {
        let i = C64::new(0.0, 1.0);
        let a = self.samples[j].map(|(p, q)| [[-i * lambda, i * p], [-i * q, i * lambda]]);
        let h = self.h;
        let r15 = 15f64.sqrt();
        let a1 = lin(&[(h, &a[1])]);
        let a2 = lin(&[(r15 * h / 3.0, &a[2]), (-r15 * h / 3.0, &a[0])]);
        let a3 = lin(&[(10.0 * h / 3.0, &a[2]), (-20.0 * h / 3.0, &a[1]), (10.0 * h / 3.0, &a[0])]);
        let c1 = comm(&a1, &a2);
        let c2 = lin(&[(-1.0 / 60.0, &comm(&a1, &lin(&[(2.0, &a3), (1.0, &c1)])))]);
        let left = lin(&[(-20.0, &a1), (-1.0, &a3), (1.0, &c1)]);
        let right = lin(&[(1.0, &a2), (1.0, &c2)]);
        let omega = lin(&[(1.0, &a1), (1.0 / 12.0, &a3), (1.0 / 240.0, &comm(&left, &right))]);
        expm_traceless(&omega)
    }

    /// Φ(π, λ).
    pub fn monodromy(&self, lambda: C64) -> Mat2 {
        let mut phi = IDENTITY;
        for j in 0..self.steps {
            phi = mul(&self.step_map(j, lambda), &phi);
        }
        phi
    }

    /// Solution values at x_j = j·h, j = 0..=steps, from y(0) = y0.
    pub fn solution_on_grid(&self, lambda: C64, y0: [C64; 2]) -> Vec<[C64; 2]> {
        let mut out = Vec::with_capacity(self.steps + 1);
        let mut y = y0;
        out.push(y);
        for j in 0..self.steps {
            let e = self.step_map(j, lambda);
            y = [e[0][0] * y[0] + e[0][1] * y[1], e[1][0] * y[0] + e[1][1] * y[1]];
            out.push(y);
        }
        out
    }
}

pub fn fundamental_solution(v: &FourierPotential, lambda: C64, steps: usize) -> FundamentalSolution {
    FundamentalSolution {
        lambda,
        phi: Propagator::new(v, steps).monodromy(lambda),
    }
}

/// Boundary determinant: columns are the two condition rows applied to the
/// solutions with y(0) = (1,0) and y(0) = (0,1). For Per± this is det(Φ ∓ I).
pub fn chi_from_monodromy(bc: &BoundaryCondition, phi: &Mat2) -> C64 {
    let m = bc.matrix();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    // traces (y₁(0), y₁(π), y₂(0), y₂(π)) of the two fundamental solutions
    let t = [
        [one, phi[0][0], zero, phi[1][0]],
        [zero, phi[0][1], one, phi[1][1]],
    ];
    let ell = |r: usize, c: usize| -> C64 { (0..4).map(|i| m[r][i] * t[c][i]).sum() };
    ell(0, 0) * ell(1, 1) - ell(0, 1) * ell(1, 0)
}

/// χ(λ) with the default step count for this λ.
pub fn characteristic_value(bc: &BoundaryCondition, v: &FourierPotential, lambda: C64) -> C64 {
    let prop = Propagator::for_range(v, lambda.norm());
    chi_from_monodromy(bc, &prop.monodromy(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{validate_bc, GeneralBc};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_potential() -> FourierPotential {
        FourierPotential::from_pairs(
            &[(1, c(1., 0.)), (-2, c(0.2, 0.3))],
            &[(0, c(0.4, -0.1)), (2, c(-0.3, 0.))],
        )
        .unwrap()
    }

    #[test]
    fn free_monodromy_is_diagonal() {
        let lam = c(2.3, -0.4);
        let f = fundamental_solution(&FourierPotential::zero(), lam, 256);
        let i = c(0., 1.);
        for (got, want) in [(f.phi[0][0], (-i * PI * lam).exp()), (f.phi[1][1], (i * PI * lam).exp())] {
            assert!((got - want).norm() < 1e-13 * want.norm());
        }
        assert!(f.phi[0][1].norm() < 1e-15 && f.phi[1][0].norm() < 1e-15);
    }

    #[test]
    fn unit_determinant() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let pairs: Vec<(i64, C64)> = (-3..=3).map(|k| (k, c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))).collect();
            let qpairs: Vec<(i64, C64)> = (-3..=3).map(|k| (k, c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))).collect();
            let v = FourierPotential::from_pairs(&pairs, &qpairs).unwrap();
            let lam = c(rng.random_range(-20.0..20.0), rng.random_range(-1.0..1.0));
            let f = fundamental_solution(&v, lam, default_steps(v.order(), lam.norm()));
            assert!((f.det() - 1.0).norm() < 1e-8, "{}", f.det());
        }
    }

    #[test]
    fn step_halving_self_oracle() {
        let v = FourierPotential::from_pairs(&[(1, c(1., 0.))], &[]).unwrap();
        let a = fundamental_solution(&v, c(0.3, 0.), 256);
        let b = fundamental_solution(&v, c(0.3, 0.), 512);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.phi[i][j] - b.phi[i][j]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn sixth_order_convergence() {
        let v = sample_potential();
        let lam = c(7.3, 0.2);
        let reference = fundamental_solution(&v, lam, 4096).phi;
        let err = |s: usize| {
            let p = fundamental_solution(&v, lam, s).phi;
            (0..4).map(|k| (p[k / 2][k % 2] - reference[k / 2][k % 2]).norm()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 40.0, "observed ratio {}", e1 / e2);
    }

    #[test]
    fn free_characteristic_functions() {
        let v = FourierPotential::zero();
        let i = c(0., 1.);
        for lam in [c(0.3, 0.1), c(4.0, 0.), c(-2.7, -0.3)] {
            let w = (i * PI * lam).exp();
            let per = characteristic_value(&BoundaryCondition::PerPlus, &v, lam);
            let want = (w.inv() - 1.0) * (w - 1.0);
            assert!((per - want).norm() < 1e-12);
            let g = validate_bc(c(1., 0.5), c(2., 0.), c(-2., 0.), c(-3., 0.) / c(1., 0.5)).unwrap();
            let gen = characteristic_value(&g, &v, lam);
            assert!((gen - (w - w.inv())).norm() < 1e-12);
        }
        assert!(characteristic_value(&BoundaryCondition::PerPlus, &v, c(4., 0.)).norm() < 1e-13);
        let d = BoundaryCondition::General(GeneralBc::dirichlet_plus());
        assert!(characteristic_value(&d, &v, c(-7., 0.)).norm() < 1e-12);
    }

    #[test]
    fn characteristic_is_continuous() {
        let v = sample_potential();
        let bc = BoundaryCondition::PerMinus;
        let lam = c(3.3, 0.2);
        let prop = Propagator::new(&v, 512);
        let f0 = chi_from_monodromy(&bc, &prop.monodromy(lam));
        let d1 = (chi_from_monodromy(&bc, &prop.monodromy(lam + 1e-4)) - f0).norm();
        let d2 = (chi_from_monodromy(&bc, &prop.monodromy(lam + 1e-5)) - f0).norm();
        assert!(d2 < d1 && (d1 / d2 - 10.0).abs() < 0.5);
    }

    #[test]
    fn monodromy_is_analytic_in_lambda() {
        let v = sample_potential();
        let prop = Propagator::new(&v, 512);
        let lam = c(-4.2, 0.3);
        let h = 1e-5;
        let dx = {
            let a = prop.monodromy(lam + h);
            let b = prop.monodromy(lam - h);
            [a[0][1] - b[0][1], a[1][0] - b[1][0]]
        };
        let dy = {
            let a = prop.monodromy(lam + c(0., h));
            let b = prop.monodromy(lam - c(0., h));
            [a[0][1] - b[0][1], a[1][0] - b[1][0]]
        };
        for k in 0..2 {
            // ∂/∂y = i·∂/∂x
            assert!((dy[k] - c(0., 1.) * dx[k]).norm() / (2.0 * h) < 1e-6);
        }
    }

    #[test]
    fn grid_solution_ends_at_monodromy_column() {
        let v = sample_potential();
        let prop = Propagator::new(&v, 256);
        let lam = c(1.7, 0.);
        let ys = prop.solution_on_grid(lam, [c(0., 0.), c(1., 0.)]);
        let phi = prop.monodromy(lam);
        let last = ys.last().unwrap();
        assert!((last[0] - phi[0][1]).norm() < 1e-13 && (last[1] - phi[1][1]).norm() < 1e-13);
    }
}
