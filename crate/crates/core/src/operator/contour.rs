//! Argument-principle analysis of χ on circles, and numerical Riesz projections.
//!
//! χ is sampled at N equispaced nodes λ_j = c + r·ω^j. An FFT of the samples
//! gives the Taylor coefficients of χ about c, hence χ′ at the nodes, and the
//! trapezoid rule then yields the power sums Σ (ρ − c)^k over enclosed zeros.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::galerkin::GalerkinMatrix;
use super::ode::{chi_from_monodromy, Propagator};
use crate::bc::BoundaryCondition;
use crate::error::{DiracError, Result};
use crate::potential::FourierPotential;

pub const DEFAULT_CONTOUR_NODES: usize = 256;

/// Minimum |χ| on the contour relative to its maximum before the contour is
/// rejected as passing too close to a zero.
const MIN_MODULUS_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourAnalysis {
    pub center: C64,
    pub radius: f64,
    pub count: i64,
    /// Unrounded argument-principle integral.
    pub winding_raw: f64,
    /// Σ (ρ − c)^k over enclosed zeros, k = 0..=max_power.
    pub power_sums: Vec<C64>,
    pub min_modulus: f64,
}

impl ContourAnalysis {
    /// Zero estimates from the power sums (count ≤ 2 only).
    pub fn root_estimates(&self) -> Vec<C64> {
        let c = self.center;
        match self.count {
            1 => vec![c + self.power_sums[1]],
            2 => {
                let e1 = self.power_sums[1];
                let e2 = (e1 * e1 - self.power_sums[2]) * 0.5;
                let disc = (e1 * e1 - e2 * 4.0).sqrt();
                vec![c + (e1 + disc) * 0.5, c + (e1 - disc) * 0.5]
            }
            _ => Vec::new(),
        }
    }
}

/// Argument-principle quantities from samples of an analytic function on
/// the circle |λ − center| = radius.
pub fn analyze_samples(values: &[C64], center: C64, radius: f64, max_power: usize) -> Result<ContourAnalysis> {
    let n = values.len();
    let max_mod = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_mod = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min_mod > MIN_MODULUS_RATIO * max_mod) || !min_mod.is_finite() {
        return Err(DiracError::ZeroOnContour { center, radius });
    }
    let mut planner = FftPlanner::new();
    let mut coef = values.to_vec();
    planner.plan_fft_forward(n).process(&mut coef);
    // coef[k]/n = a_k r^k for 0 ≤ k < n/2; the upper half is alias noise.
    let mut deriv = vec![C64::new(0.0, 0.0); n];
    for m in 0..n / 2 - 1 {
        deriv[m] = coef[m + 1] * ((m + 1) as f64 / (n as f64 * radius));
    }
    planner.plan_fft_inverse(n).process(&mut deriv);
    let mut sums = vec![C64::new(0.0, 0.0); max_power + 1];
    for j in 0..n {
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
        let dz = w * radius;
        let g = deriv[j] / values[j] * dz / n as f64;
        let mut pw = C64::new(1.0, 0.0);
        for s in sums.iter_mut() {
            *s += g * pw;
            pw *= dz;
        }
    }
    let winding_raw = sums[0].re;
    let count = winding_raw.round();
    if (winding_raw - count).abs() >= 0.25 || sums[0].im.abs() >= 0.25 {
        return Err(DiracError::NonIntegerWinding { value: winding_raw });
    }
    Ok(ContourAnalysis {
        center,
        radius,
        count: count as i64,
        winding_raw,
        power_sums: sums,
        min_modulus: min_mod,
    })
}

/// χ samples for several boundary conditions sharing one monodromy per node.
pub fn disc_samples(
    prop: &Propagator,
    bcs: &[BoundaryCondition],
    center: C64,
    radius: f64,
    nodes: usize,
) -> Vec<Vec<C64>> {
    let mut out = vec![Vec::with_capacity(nodes); bcs.len()];
    for j in 0..nodes {
        let lam = center + C64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64);
        let phi = prop.monodromy(lam);
        for (o, bc) in out.iter_mut().zip(bcs) {
            o.push(chi_from_monodromy(bc, &phi));
        }
    }
    out
}

/// Contour analysis of χ_bc for each bc on one circle.
pub fn disc_scan(
    prop: &Propagator,
    bcs: &[BoundaryCondition],
    center: C64,
    radius: f64,
    nodes: usize,
) -> Vec<Result<ContourAnalysis>> {
    disc_samples(prop, bcs, center, radius, nodes)
        .iter()
        .map(|vals| analyze_samples(vals, center, radius, 2))
        .collect()
}

/// Number of zeros of χ in |λ − center| < radius. On a near-zero contour or
/// an ambiguous winding, the node count is doubled once.
pub fn count_zeros_in_disc(bc: &BoundaryCondition, v: &FourierPotential, center: C64, radius: f64) -> Result<i64> {
    let prop = Propagator::for_range(v, center.norm() + radius);
    let mut nodes = DEFAULT_CONTOUR_NODES;
    loop {
        let vals = disc_samples(&prop, std::slice::from_ref(bc), center, radius, nodes);
        match analyze_samples(&vals[0], center, radius, 0) {
            Ok(a) => return Ok(a.count),
            Err(DiracError::NonIntegerWinding { .. }) if nodes == DEFAULT_CONTOUR_NODES => nodes *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// P = (1/2πi)∮ (λ − M)^{−1} dλ by the trapezoid rule.
pub fn riesz_projection_numeric(m: &GalerkinMatrix, center: C64, radius: f64, nodes: usize) -> Result<DMatrix<C64>> {
    let margin = m
        .eigenvalues()
        .iter()
        .map(|l| ((l - center).norm() - radius).abs())
        .fold(f64::INFINITY, f64::min);
    if margin < 1e-3 * radius {
        return Err(DiracError::ContourHitsSpectrum { center, radius });
    }
    let d = m.dim();
    let mut p = DMatrix::<C64>::zeros(d, d);
    for j in 0..nodes {
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64);
        let lam = center + w * radius;
        let shifted = DMatrix::<C64>::from_diagonal_element(d, d, lam) - &m.entries;
        let inv = shifted
            .try_inverse()
            .ok_or(DiracError::ContourHitsSpectrum { center, radius })?;
        p += inv * (w * radius / nodes as f64);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{validate_bc, GeneralBc};
    use crate::operator::galerkin::{assemble_galerkin, Parity};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn power_sums_of_polynomial() {
        let roots = [c(0.1, 0.05), c(-0.07, 0.02)];
        let n = 128;
        let vals: Vec<C64> = (0..n)
            .map(|j| {
                let l = C64::from_polar(0.25, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
                (l - roots[0]) * (l - roots[1]) * (l - 3.0)
            })
            .collect();
        let a = analyze_samples(&vals, c(0., 0.), 0.25, 2).unwrap();
        assert_eq!(a.count, 2);
        let mut est = a.root_estimates();
        est.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((est[0] - roots[1]).norm() < 1e-13 && (est[1] - roots[0]).norm() < 1e-13);
    }

    #[test]
    fn free_counts() {
        let v = FourierPotential::zero();
        assert_eq!(count_zeros_in_disc(&BoundaryCondition::PerPlus, &v, c(4., 0.), 0.25).unwrap(), 2);
        assert_eq!(count_zeros_in_disc(&BoundaryCondition::PerPlus, &v, c(3., 0.), 0.25).unwrap(), 0);
        let g = BoundaryCondition::General(GeneralBc::dirichlet_plus());
        assert_eq!(count_zeros_in_disc(&g, &v, c(3., 0.), 0.25).unwrap(), 1);
        let h = validate_bc(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.)).unwrap();
        assert_eq!(count_zeros_in_disc(&h, &v, c(-5., 0.), 0.25).unwrap(), 1);
    }

    #[test]
    fn zero_on_contour_detected() {
        let v = FourierPotential::zero();
        let r = count_zeros_in_disc(&BoundaryCondition::PerPlus, &v, c(3.5, 0.), 0.5);
        assert!(matches!(r, Err(DiracError::ZeroOnContour { .. })), "{r:?}");
    }

    #[test]
    fn free_riesz_projection_is_coordinate_projector() {
        let g = assemble_galerkin(&FourierPotential::zero(), Parity::Even, 3).unwrap();
        let p = riesz_projection_numeric(&g, c(2., 0.), 0.25, 128).unwrap();
        let mut want = DMatrix::<C64>::zeros(g.dim(), g.dim());
        for comp in [1, 2] {
            let i = g.index(comp, 2).unwrap();
            want[(i, i)] = c(1., 0.);
        }
        assert!((p - want).norm() < 1e-12);
    }

    #[test]
    fn riesz_projection_idempotent_and_rank() {
        let v = FourierPotential::from_pairs(&[(1, c(0.3, 0.1)), (-1, c(0.1, 0.))], &[(0, c(0.2, -0.2))]).unwrap();
        let g = assemble_galerkin(&v, Parity::Odd, 4).unwrap();
        let p = riesz_projection_numeric(&g, c(3., 0.), 0.25, 128).unwrap();
        assert!((&p * &p - &p).norm() < 1e-8);
        let rank = p.trace().re.round() as i64;
        assert_eq!(rank, 2);
        let hit = riesz_projection_numeric(&assemble_galerkin(&FourierPotential::zero(), Parity::Even, 2).unwrap(), c(2.5, 0.), 0.5, 64);
        assert!(matches!(hit, Err(DiracError::ContourHitsSpectrum { .. })));
    }

    #[test]
    fn projections_approach_free_ones() {
        let v = FourierPotential::from_pairs(&[(1, c(0.4, 0.)), (-2, c(0.2, 0.1))], &[(0, c(0.3, 0.)), (2, c(0.1, 0.))]).unwrap();
        let g = assemble_galerkin(&v, Parity::Odd, 24).unwrap();
        let dist = |n: i64| {
            let p = riesz_projection_numeric(&g, c(n as f64, 0.), 0.25, 64).unwrap();
            let mut p0 = DMatrix::<C64>::zeros(g.dim(), g.dim());
            for comp in [1, 2] {
                let i = g.index(comp, n).unwrap();
                p0[(i, i)] = c(1., 0.);
            }
            (p - p0).norm()
        };
        let d: Vec<f64> = [5, 11, 17].iter().map(|&n| dist(n)).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }
}
