//! Fourier potentials, weights, weighted norms and decay fits.
//!
//! Coefficient convention: 𝒫(x) = Σ p(k)·e^{2ikx}, i.e.
//! p(k) = (1/π)∫₀^π 𝒫(x)·e^{−2ikx} dx, and likewise q(k) for 𝒬.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DiracError, Result};

const SELF_ADJOINT_TOL: f64 = 1e-12;

/// Off-diagonal potential V = [[0, 𝒫], [𝒬, 0]] given by its coefficient tables
/// on k ∈ [−K, K]. Coefficients outside the table are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    order: usize,
    p: Vec<C64>,
    q: Vec<C64>,
}

impl FourierPotential {
    /// Tables indexed by k + K. Both must have length 2K + 1.
    pub fn new(p: Vec<C64>, q: Vec<C64>) -> Result<Self> {
        if p.len() != q.len() || p.len().is_multiple_of(2) {
            return Err(DiracError::BadParams(format!(
                "coefficient tables must share an odd length, got {} and {}",
                p.len(),
                q.len()
            )));
        }
        if p.iter().chain(q.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DiracError::BadParams("non-finite coefficient".into()));
        }
        Ok(Self {
            order: (p.len() - 1) / 2,
            p,
            q,
        })
    }

    pub fn zero() -> Self {
        let z = vec![C64::new(0.0, 0.0)];
        Self { order: 0, p: z.clone(), q: z }
    }

    /// Builds a potential from sparse (k, value) lists.
    pub fn from_pairs(p: &[(i64, C64)], q: &[(i64, C64)]) -> Result<Self> {
        let order = p
            .iter()
            .chain(q.iter())
            .map(|&(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut pt = vec![C64::new(0.0, 0.0); 2 * order + 1];
        let mut qt = pt.clone();
        for &(k, v) in p {
            pt[(k + order as i64) as usize] += v;
        }
        for &(k, v) in q {
            qt[(k + order as i64) as usize] += v;
        }
        Self::new(pt, qt)
    }

    /// Truncation order K.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn p(&self, k: i64) -> C64 {
        self.coeff(&self.p, k)
    }

    pub fn q(&self, k: i64) -> C64 {
        self.coeff(&self.q, k)
    }

    fn coeff(&self, t: &[C64], k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.order {
            C64::new(0.0, 0.0)
        } else {
            t[(k + self.order as i64) as usize]
        }
    }

    pub fn p_table(&self) -> &[C64] {
        &self.p
    }

    pub fn q_table(&self) -> &[C64] {
        &self.q
    }

    pub fn is_zero(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|z| z.norm_sqr() == 0.0)
    }

    /// q(k) = conj(p(−k)) for all k, i.e. 𝒬 = conj(𝒫).
    pub fn is_self_adjoint(&self) -> bool {
        let k = self.order as i64;
        (-k..=k).all(|j| (self.q(j) - self.p(-j).conj()).norm() <= SELF_ADJOINT_TOL)
    }

    /// Potential of the formal adjoint: 𝒫* = conj(𝒬), 𝒬* = conj(𝒫).
    pub fn adjoint(&self) -> Self {
        let k = self.order as i64;
        let p = (-k..=k).map(|j| self.q(-j).conj()).collect();
        let q = (-k..=k).map(|j| self.p(-j).conj()).collect();
        Self {
            order: self.order,
            p,
            q,
        }
    }

    /// Extends the tables with zeros up to `order` (never truncates).
    pub fn padded(&self, order: usize) -> Self {
        if order <= self.order {
            return self.clone();
        }
        let k = order as i64;
        Self {
            order,
            p: (-k..=k).map(|j| self.p(j)).collect(),
            q: (-k..=k).map(|j| self.q(j)).collect(),
        }
    }

    /// (𝒫(x), 𝒬(x)) by direct synthesis.
    pub fn eval(&self, x: f64) -> (C64, C64) {
        let w = C64::from_polar(1.0, 2.0 * x);
        let k = self.order as i64;
        let mut e = C64::from_polar(1.0, -2.0 * x * k as f64);
        let (mut sp, mut sq) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for j in 0..self.p.len() {
            sp += self.p[j] * e;
            sq += self.q[j] * e;
            e *= w;
        }
        (sp, sq)
    }

    /// SHA-256 over the order and the exact bit patterns of both tables.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.order as u64).to_le_bytes());
        for z in self.p.iter().chain(self.q.iter()) {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct PotentialRecord {
    #[serde(rename = "K")]
    k: usize,
    p: Vec<(i64, f64, f64)>,
    q: Vec<(i64, f64, f64)>,
}

impl Serialize for FourierPotential {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let k = self.order as i64;
        let rows = |f: &dyn Fn(i64) -> C64| {
            (-k..=k)
                .filter_map(|j| {
                    let v = f(j);
                    (v.norm_sqr() != 0.0).then_some((j, v.re, v.im))
                })
                .collect()
        };
        PotentialRecord {
            k: self.order,
            p: rows(&|j| self.p(j)),
            q: rows(&|j| self.q(j)),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FourierPotential {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = PotentialRecord::deserialize(de)?;
        let k = r.k as i64;
        let mut p = vec![C64::new(0.0, 0.0); 2 * r.k + 1];
        let mut q = p.clone();
        for (tab, rows) in [(&mut p, &r.p), (&mut q, &r.q)] {
            for &(j, re, im) in rows {
                if j.abs() > k {
                    return Err(D::Error::custom(format!("coefficient index {j} exceeds K={k}")));
                }
                tab[(j + k) as usize] = C64::new(re, im);
            }
        }
        FourierPotential::new(p, q).map_err(D::Error::custom)
    }
}

/// Coefficients from samples on the grid x_j = jπ/N, j = 0..N−1, via FFT
/// (the trapezoid rule for π-periodic integrands).
pub fn fourier_coeffs_from_samples(
    p_samples: &[C64],
    q_samples: &[C64],
    order: usize,
) -> Result<FourierPotential> {
    let n = p_samples.len();
    let needed = 4 * order + 4;
    if n < needed || q_samples.len() != n {
        return Err(DiracError::GridTooCoarse {
            grid: n.min(q_samples.len()),
            order,
            needed,
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let transform = |s: &[C64]| {
        let mut buf = s.to_vec();
        fft.process(&mut buf);
        let k = order as i64;
        (-k..=k)
            .map(|j| buf[j.rem_euclid(n as i64) as usize] / n as f64)
            .collect::<Vec<_>>()
    };
    FourierPotential::new(transform(p_samples), transform(q_samples))
}

/// Test-potential generators. Analytic and Sobolev families put the same
/// profile on p and q, so a real `c` gives a self-adjoint potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    TrigPoly {
        p: Vec<(i64, f64, f64)>,
        q: Vec<(i64, f64, f64)>,
    },
    /// p(k) = q(k) = c·r^{|k|}, |k| ≤ order.
    Analytic {
        r: f64,
        #[serde(default = "one")]
        c: f64,
        order: usize,
    },
    /// p(k) = q(k) = c·(1+|k|)^{−m−1}, |k| ≤ order.
    Sobolev {
        m: f64,
        #[serde(default = "one")]
        c: f64,
        order: usize,
    },
    /// Replaces q by q(k) = conj(p(−k)).
    SelfadjointWrap { of: Box<PotentialFamily> },
}

fn one() -> f64 {
    1.0
}

pub fn generate_potential(family: &PotentialFamily) -> Result<FourierPotential> {
    let profile = |order: usize, f: &dyn Fn(i64) -> f64, c: f64| -> Result<FourierPotential> {
        if !c.is_finite() {
            return Err(DiracError::BadParams("amplitude must be finite".into()));
        }
        let k = order as i64;
        let t: Vec<C64> = (-k..=k).map(|j| C64::new(c * f(j), 0.0)).collect();
        FourierPotential::new(t.clone(), t)
    };
    match family {
        PotentialFamily::TrigPoly { p, q } => {
            let conv = |v: &[(i64, f64, f64)]| v.iter().map(|&(k, re, im)| (k, C64::new(re, im))).collect::<Vec<_>>();
            FourierPotential::from_pairs(&conv(p), &conv(q))
        }
        PotentialFamily::Analytic { r, c, order } => {
            if !(*r > 0.0 && *r < 1.0) {
                return Err(DiracError::BadParams(format!("analytic rate r={r} must lie in (0,1)")));
            }
            profile(*order, &|j| r.powi(j.abs() as i32), *c)
        }
        PotentialFamily::Sobolev { m, c, order } => {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(DiracError::BadParams(format!("sobolev order m={m} must be ≥ 0")));
            }
            profile(*order, &|j| (1.0 + j.abs() as f64).powf(-m - 1.0), *c)
        }
        PotentialFamily::SelfadjointWrap { of } => {
            let v = generate_potential(of)?;
            let k = v.order as i64;
            let q = (-k..=k).map(|j| v.p(-j).conj()).collect();
            FourierPotential::new(v.p.clone(), q)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum WeightClass {
    /// (1+|n|)^m
    Polynomial { m: f64 },
    /// exp(a·|n|^θ), 0 < θ < 1
    Subexponential { a: f64, theta: f64 },
    /// exp(ε·|n|)
    Exponential { eps: f64 },
    /// Ω(|n|) read from the table, extended by its last entry.
    Custom { values: Vec<f64> },
}

/// A positive even weight Ω(n) with Ω(0) ≥ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightClass", into = "WeightClass")]
pub struct Weight {
    class: WeightClass,
}

impl TryFrom<WeightClass> for Weight {
    type Error = DiracError;
    fn try_from(class: WeightClass) -> Result<Self> {
        Weight::new(class)
    }
}

impl From<Weight> for WeightClass {
    fn from(w: Weight) -> Self {
        w.class
    }
}

impl Weight {
    pub fn new(class: WeightClass) -> Result<Self> {
        let ok = match &class {
            WeightClass::Polynomial { m } => m.is_finite() && *m >= 0.0,
            WeightClass::Subexponential { a, theta } => {
                a.is_finite() && *a >= 0.0 && *theta > 0.0 && *theta < 1.0
            }
            WeightClass::Exponential { eps } => eps.is_finite() && *eps >= 0.0,
            WeightClass::Custom { values } => {
                !values.is_empty() && values[0] >= 1.0 && values.iter().all(|v| v.is_finite() && *v > 0.0)
            }
        };
        if ok {
            Ok(Self { class })
        } else {
            Err(DiracError::BadParams(format!("invalid weight {class:?}")))
        }
    }

    pub fn polynomial(m: f64) -> Result<Self> {
        Self::new(WeightClass::Polynomial { m })
    }

    pub fn exponential(eps: f64) -> Result<Self> {
        Self::new(WeightClass::Exponential { eps })
    }

    pub fn unit() -> Self {
        Self {
            class: WeightClass::Polynomial { m: 0.0 },
        }
    }

    pub fn class(&self) -> &WeightClass {
        &self.class
    }

    pub fn eval(&self, n: i64) -> f64 {
        let a = n.unsigned_abs() as f64;
        match &self.class {
            WeightClass::Polynomial { m } => (1.0 + a).powf(*m),
            WeightClass::Subexponential { a: s, theta } => (s * a.powf(*theta)).exp(),
            WeightClass::Exponential { eps } => (eps * a).exp(),
            WeightClass::Custom { values } => {
                let i = (n.unsigned_abs() as usize).min(values.len() - 1);
                values[i]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubmultCheck {
    pub ok: bool,
    pub witness: Option<(i64, i64)>,
}

/// Exhaustive check of Ω(n+m) ≤ Ω(n)·Ω(m) over |n|, |m| ≤ range.
pub fn check_submultiplicative(w: &Weight, range: i64) -> SubmultCheck {
    let fails = |n: i64, m: i64| w.eval(n + m) > w.eval(n) * w.eval(m) * (1.0 + 1e-12);
    for n in 0..=range {
        for m in 0..=range {
            for (x, y) in [(n, m), (n, -m), (-n, m), (-n, -m)] {
                if fails(x, y) {
                    return SubmultCheck {
                        ok: false,
                        witness: Some((x, y)),
                    };
                }
            }
        }
    }
    SubmultCheck { ok: true, witness: None }
}

/// √(Σ|x_n|²Ω(n)²) for x indexed from `first_index` upward.
pub fn weighted_seq_norm(x: &[C64], first_index: i64, w: &Weight) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let om = w.eval(first_index + i as i64);
            v.norm_sqr() * om * om
        })
        .sum::<f64>()
        .sqrt()
}

/// H(Ω) norm of V: both coefficient tables combined in quadrature.
pub fn h_omega_norm(v: &FourierPotential, w: &Weight) -> f64 {
    let k = -(v.order as i64);
    let np = weighted_seq_norm(&v.p, k, w);
    let nq = weighted_seq_norm(&v.q, k, w);
    (np * np + nq * nq).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DecayClass {
    /// x_n ≈ A·|n|^slope
    Polynomial { slope: f64 },
    /// x_n ≈ A·e^{−rate·|n|}
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub class: DecayClass,
    /// RMS residual of the chosen model in log x.
    pub residual: f64,
    /// RMS residual of the rejected model.
    pub alt_residual: f64,
    pub points: usize,
    /// Indices dropped because x_n was zero, non-finite, or n = 0.
    pub dropped: Vec<i64>,
}

/// Least-squares line through (t_i, y_i): returns (slope, intercept, rms).
fn line_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mt;
    let rms = (t.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Fits log x against log|n| and against |n|; the smaller residual wins.
pub fn decay_fit(x: &[(i64, f64)]) -> Result<DecayFit> {
    let mut dropped = Vec::new();
    let mut t = Vec::new();
    let mut y = Vec::new();
    for &(n, v) in x {
        if n == 0 || !(v.is_finite() && v > 0.0) {
            dropped.push(n);
        } else {
            t.push(n.unsigned_abs() as f64);
            y.push(v.ln());
        }
    }
    let distinct = {
        let mut u = t.clone();
        u.sort_by(f64::total_cmp);
        u.dedup();
        u.len()
    };
    if t.len() < 8 || distinct < 2 {
        return Err(DiracError::TooFewPoints { found: t.len() });
    }
    let logs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let (sp, _, rp) = line_fit(&logs, &y);
    let (se, _, re) = line_fit(&t, &y);
    let (class, residual, alt_residual) = if rp <= re {
        (DecayClass::Polynomial { slope: sp }, rp, re)
    } else {
        (DecayClass::Exponential { rate: -se }, re, rp)
    };
    Ok(DecayFit {
        class,
        residual,
        alt_residual,
        points: t.len(),
        dropped,
    })
}
