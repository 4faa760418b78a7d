//! Boundary conditions: Per±, and the two-parameter general family
//!
//!   y₁(0) + b·y₁(π) + a·y₂(0) = 0,
//!   d·y₁(π) + c·y₂(0) + y₂(π) = 0,
//!
//! restricted to b + c = 0, ad = 1 − b², ad ≠ 0.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{DiracError, Result};

/// Tolerance on the family constraints and on `ad ≠ 0`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// A validated member of the general family. Only [`validate_bc`] builds one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralBc {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl GeneralBc {
    pub fn a(&self) -> C64 {
        self.a
    }
    pub fn b(&self) -> C64 {
        self.b
    }
    pub fn c(&self) -> C64 {
        self.c
    }
    pub fn d(&self) -> C64 {
        self.d
    }

    /// (a,b,c,d) = (1,0,0,1).
    pub fn dirichlet_plus() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    /// (a,b,c,d) = (−1,0,0,−1).
    pub fn dirichlet_minus() -> Self {
        let m = C64::new(-1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self { a: m, b: zero, c: zero, d: m }
    }

    /// (ã, b̃, c̃, d̃) = (d̄, −c̄, −b̄, ā).
    pub fn adjoint(&self) -> Self {
        Self {
            a: self.d.conj(),
            b: -self.c.conj(),
            c: -self.b.conj(),
            d: self.a.conj(),
        }
    }

    /// Rows of the 2×4 condition matrix acting on (y₁(0), y₁(π), y₂(0), y₂(π)).
    pub fn matrix(&self) -> [[C64; 4]; 2] {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        [[one, self.b, self.a, zero], [zero, self.d, self.c, one]]
    }

    /// (−1)ⁿ
    fn parity_sign(n: i64) -> f64 {
        if n.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Normalized coefficients (ξ, ζ) of the free eigenfunction
    /// ξ·e^{−inx} e¹ + ζ·e^{inx} e² of L⁰_bc at the eigenvalue n.
    pub fn free_eigvec(&self, n: i64) -> (C64, C64) {
        let s = Self::parity_sign(n);
        let xi = self.a;
        let zeta = -(C64::new(1.0, 0.0) + self.b * s);
        let norm = (xi.norm_sqr() + zeta.norm_sqr()).sqrt();
        (xi / norm, zeta / norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    PerPlus,
    PerMinus,
    General(GeneralBc),
}

impl BoundaryCondition {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BoundaryCondition::PerPlus => "per_plus",
            BoundaryCondition::PerMinus => "per_minus",
            BoundaryCondition::General(_) => "general",
        }
    }

    pub fn general(&self) -> Option<&GeneralBc> {
        match self {
            BoundaryCondition::General(g) => Some(g),
            _ => None,
        }
    }

    /// Rows of the 2×4 condition matrix acting on (y₁(0), y₁(π), y₂(0), y₂(π)).
    pub fn matrix(&self) -> [[C64; 4]; 2] {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match self {
            BoundaryCondition::PerPlus => [[one, -one, zero, zero], [zero, zero, one, -one]],
            BoundaryCondition::PerMinus => [[one, one, zero, zero], [zero, zero, one, one]],
            BoundaryCondition::General(g) => g.matrix(),
        }
    }
}

/// Checks the family constraints and returns a General condition.
pub fn validate_bc(a: C64, b: C64, c: C64, d: C64) -> Result<BoundaryCondition> {
    let ad = a * d;
    if ad.norm() <= CONSTRAINT_TOL {
        return Err(DiracError::DegenerateBC { ad_abs: ad.norm() });
    }
    let r1 = (b + c).norm();
    if r1 > CONSTRAINT_TOL {
        return Err(DiracError::ConstraintViolation {
            constraint: "b + c = 0",
            residual: r1,
        });
    }
    let r2 = (ad - (C64::new(1.0, 0.0) - b * b)).norm();
    if r2 > CONSTRAINT_TOL {
        return Err(DiracError::ConstraintViolation {
            constraint: "ad = 1 - b^2",
            residual: r2,
        });
    }
    Ok(BoundaryCondition::General(GeneralBc { a, b, c, d }))
}

/// Adjoint boundary condition. Per± are their own adjoints.
pub fn adjoint_bc(bc: &BoundaryCondition) -> BoundaryCondition {
    match bc {
        BoundaryCondition::General(g) => BoundaryCondition::General(g.adjoint()),
        other => *other,
    }
}

/// Column-pair minors |A_ij| of the condition matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMinors {
    pub a13: C64,
    pub a14: C64,
    pub a23: C64,
    pub a24: C64,
}

impl BoundaryMinors {
    /// Determinants of the 2×2 column pairs, computed directly.
    pub fn direct(m: &[[C64; 4]; 2]) -> Self {
        let det = |i: usize, j: usize| m[0][i] * m[1][j] - m[0][j] * m[1][i];
        Self {
            a13: det(0, 2),
            a14: det(0, 3),
            a23: det(1, 2),
            a24: det(1, 3),
        }
    }

    fn closed_form(g: &GeneralBc) -> Self {
        Self {
            a13: g.c,
            a14: C64::new(1.0, 0.0),
            a23: g.b * g.c - g.a * g.d,
            a24: g.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub regular: bool,
    pub strictly_regular: bool,
    pub minors: BoundaryMinors,
    /// |closed-form minors − direct determinants|, zero for Per±.
    pub audit_residual: f64,
}

/// Regular: A14 ≠ 0 and A23 ≠ 0. Strictly regular additionally
/// (A13 + A24)² ≠ 4·A14·A23, all minors taken as signed determinants.
pub fn strict_regularity(bc: &BoundaryCondition) -> Regularity {
    let direct = BoundaryMinors::direct(&bc.matrix());
    let (minors, audit_residual) = match bc {
        BoundaryCondition::General(g) => {
            let cf = BoundaryMinors::closed_form(g);
            let res = [
                (cf.a13 - direct.a13).norm(),
                (cf.a14 - direct.a14).norm(),
                (cf.a23 - direct.a23).norm(),
                (cf.a24 - direct.a24).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            (cf, res)
        }
        _ => (direct, 0.0),
    };
    let tol = CONSTRAINT_TOL;
    let regular = minors.a14.norm() > tol && minors.a23.norm() > tol;
    let lhs = (minors.a13 + minors.a24).powu(2);
    let rhs = minors.a14 * minors.a23 * 4.0;
    let strictly_regular = regular && (lhs - rhs).norm() > tol * (1.0 + rhs.norm());
    Regularity {
        regular,
        strictly_regular,
        minors,
        audit_residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEigvecCoeffs {
    pub n: i64,
    pub a_n: C64,
    pub b_n: C64,
}

/// Coefficients of the normalized free adjoint eigenfunction A_n e_n¹ + B_n e_n².
pub fn free_eigvec_coeffs(g: &GeneralBc, n: i64) -> FreeEigvecCoeffs {
    let s = GeneralBc::parity_sign(n);
    let top = C64::new(1.0, 0.0) - g.b.conj() * s;
    let norm = (g.a.norm_sqr() + top.norm_sqr()).sqrt();
    FreeEigvecCoeffs {
        n,
        a_n: top / norm,
        b_n: -g.a.conj() / norm,
    }
}

/// Boundary values (s₁(0), s₁(π), s₂(0), s₂(π)) of a vector function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryTrace {
    pub s1_0: C64,
    pub s1_pi: C64,
    pub s2_0: C64,
    pub s2_pi: C64,
}

impl BoundaryTrace {
    pub fn new(s1_0: C64, s1_pi: C64, s2_0: C64, s2_pi: C64) -> Self {
        Self { s1_0, s1_pi, s2_0, s2_pi }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.s1_0 * k, self.s1_pi * k, self.s2_0 * k, self.s2_pi * k)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.s1_0 + o.s1_0,
            self.s1_pi + o.s1_pi,
            self.s2_0 + o.s2_0,
            self.s2_pi + o.s2_pi,
        )
    }
}

/// (ℓ₀(s), ℓ₁(s)).
pub fn boundary_functionals(s: &BoundaryTrace, g: &GeneralBc) -> (C64, C64) {
    let l0 = s.s1_0 + g.b * s.s1_pi + g.a * s.s2_0;
    let l1 = g.d * s.s1_pi + g.c * s.s2_0 + s.s2_pi;
    (l0, l1)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct BcRecord {
    kind: String,
    #[serde(default)]
    a_re: f64,
    #[serde(default)]
    a_im: f64,
    #[serde(default)]
    b_re: f64,
    #[serde(default)]
    b_im: f64,
    #[serde(default)]
    c_re: f64,
    #[serde(default)]
    c_im: f64,
    #[serde(default)]
    d_re: f64,
    #[serde(default)]
    d_im: f64,
}

impl Serialize for BoundaryCondition {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut r = BcRecord {
            kind: self.kind_name().to_string(),
            ..Default::default()
        };
        if let BoundaryCondition::General(g) = self {
            r.a_re = g.a.re;
            r.a_im = g.a.im;
            r.b_re = g.b.re;
            r.b_im = g.b.im;
            r.c_re = g.c.re;
            r.c_im = g.c.im;
            r.d_re = g.d.re;
            r.d_im = g.d.im;
        }
        r.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for BoundaryCondition {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = BcRecord::deserialize(de)?;
        match r.kind.as_str() {
            "per_plus" | "PerPlus" => Ok(BoundaryCondition::PerPlus),
            "per_minus" | "PerMinus" => Ok(BoundaryCondition::PerMinus),
            "general" | "General" => validate_bc(
                C64::new(r.a_re, r.a_im),
                C64::new(r.b_re, r.b_im),
                C64::new(r.c_re, r.c_im),
                C64::new(r.d_re, r.d_im),
            )
            .map_err(D::Error::custom),
            "dirichlet_plus" => Ok(BoundaryCondition::General(GeneralBc::dirichlet_plus())),
            "dirichlet_minus" => Ok(BoundaryCondition::General(GeneralBc::dirichlet_minus())),
            other => Err(D::Error::custom(format!("unknown bc kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn general(a: C64, b: C64, c_: C64, d: C64) -> GeneralBc {
        *validate_bc(a, b, c_, d).unwrap().general().unwrap()
    }

    // c = −b, d = (1 − b²)/a
    fn family_member(a: C64, b: C64) -> Option<GeneralBc> {
        let d = (c(1.0, 0.0) - b * b) / a;
        validate_bc(a, b, -b, d).ok().and_then(|bc| bc.general().copied())
    }

    #[test]
    fn validate_examples() {
        assert!(validate_bc(c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)).is_ok());
        assert!(validate_bc(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.)).is_ok());
        assert!(matches!(
            validate_bc(c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)),
            Err(DiracError::DegenerateBC { .. })
        ));
        match validate_bc(c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)) {
            Err(DiracError::ConstraintViolation { constraint, residual }) => {
                assert_eq!(constraint, "b + c = 0");
                assert_eq!(residual, 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            validate_bc(c(1., 0.), c(0., 0.), c(0., 0.), c(2., 0.)),
            Err(DiracError::ConstraintViolation { constraint: "ad = 1 - b^2", .. })
        ));
    }

    #[test]
    fn parameters_stored_unmodified() {
        let g = general(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.));
        assert_eq!((g.a(), g.b(), g.c(), g.d()), (c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.)));
    }

    #[test]
    fn adjoint_examples() {
        let g = GeneralBc::dirichlet_plus();
        assert_eq!(g.adjoint(), g);
        let h = general(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.)).adjoint();
        assert_eq!((h.a(), h.b(), h.c(), h.d()), (c(-3., 0.), c(2., 0.), c(-2., 0.), c(1., 0.)));
    }

    #[test]
    fn strict_regularity_examples() {
        let r = strict_regularity(&BoundaryCondition::General(GeneralBc::dirichlet_plus()));
        assert!(r.regular && r.strictly_regular);
        assert_eq!(r.minors.a14, c(1., 0.));
        assert_eq!(r.minors.a23, c(-1., 0.));
        assert_eq!((r.minors.a13 + r.minors.a24).norm_sqr(), 0.0);

        let g = general(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.));
        let r = strict_regularity(&BoundaryCondition::General(g));
        assert!(r.strictly_regular);
        assert_eq!(r.minors.a23, c(-1., 0.));
        assert!(r.audit_residual < 1e-15);
    }

    #[test]
    fn periodic_conditions_are_regular_not_strictly() {
        for bc in [BoundaryCondition::PerPlus, BoundaryCondition::PerMinus] {
            let r = strict_regularity(&bc);
            assert!(r.regular);
            assert!(!r.strictly_regular);
        }
    }

    #[test]
    fn dirichlet_presets_are_family_members() {
        for g in [GeneralBc::dirichlet_plus(), GeneralBc::dirichlet_minus()] {
            assert!(validate_bc(g.a(), g.b(), g.c(), g.d()).is_ok());
        }
    }

    #[test]
    fn free_coeff_examples() {
        for n in [-3, 0, 5, 8] {
            let f = free_eigvec_coeffs(&GeneralBc::dirichlet_plus(), n);
            assert!((f.a_n - c(0.5f64.sqrt(), 0.)).norm() < 1e-15);
            assert!((f.b_n - c(-(0.5f64.sqrt()), 0.)).norm() < 1e-15);
        }
    }

    #[test]
    fn free_eigenfunction_satisfies_bc() {
        let g = general(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.));
        for n in -6..=6 {
            let (xi, zeta) = g.free_eigvec(n);
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            let tr = BoundaryTrace::new(xi, xi * s, zeta, zeta * s);
            let (l0, l1) = boundary_functionals(&tr, &g);
            assert!(l0.norm() < 1e-12 && l1.norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn functional_examples() {
        let g = GeneralBc::dirichlet_plus();
        let (l0, l1) = boundary_functionals(&BoundaryTrace::default(), &g);
        assert_eq!((l0, l1), (c(0., 0.), c(0., 0.)));
        let tr = BoundaryTrace::new(c(1., 0.), c(1., 0.), c(0., 0.), c(0., 0.));
        assert_eq!(boundary_functionals(&tr, &g), (c(1., 0.), c(1., 0.)));
    }

    #[test]
    fn serde_round_trip() {
        let bc = validate_bc(c(1., 0.5), c(2., 0.), c(-2., 0.), (c(-3., 0.)) / c(1., 0.5)).unwrap();
        let s = serde_json::to_string(&bc).unwrap();
        assert!(s.contains("\"kind\":\"general\""));
        let back: BoundaryCondition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, bc);
        let per: BoundaryCondition = serde_json::from_str(r#"{"kind":"per_minus"}"#).unwrap();
        assert_eq!(per, BoundaryCondition::PerMinus);
        let bad = serde_json::from_str::<BoundaryCondition>(r#"{"kind":"general","a_re":1.0,"d_re":2.0}"#);
        assert!(bad.is_err());
    }

    fn cplx() -> impl Strategy<Value = C64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(r, i)| c(r, i))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn family_always_strictly_regular(a in cplx(), b in cplx()) {
            prop_assume!(a.norm() > 1e-3 && (c(1.0, 0.0) - b * b).norm() > 1e-3);
            if let Some(g) = family_member(a, b) {
                let r = strict_regularity(&BoundaryCondition::General(g));
                prop_assert!(r.strictly_regular);
                prop_assert!(r.audit_residual < 1e-9 * (1.0 + b.norm_sqr()));
            }
        }

        #[test]
        fn adjoint_closed_and_involutive(a in cplx(), b in cplx()) {
            prop_assume!(a.norm() > 1e-3 && (c(1.0, 0.0) - b * b).norm() > 1e-3);
            if let Some(g) = family_member(a, b) {
                let h = g.adjoint();
                prop_assert!(validate_bc(h.a(), h.b(), h.c(), h.d()).is_ok());
                prop_assert_eq!(h.adjoint(), g);
            }
        }

        #[test]
        fn free_coeffs_normalized(a in cplx(), b in cplx(), n in -50i64..=50) {
            prop_assume!(a.norm() > 1e-3 && (c(1.0, 0.0) - b * b).norm() > 1e-3);
            if let Some(g) = family_member(a, b) {
                let f = free_eigvec_coeffs(&g, n);
                prop_assert!((f.a_n.norm_sqr() + f.b_n.norm_sqr() - 1.0).abs() < 1e-14);
                prop_assert_eq!(free_eigvec_coeffs(&g, n + 2), FreeEigvecCoeffs { n: n + 2, ..f });
            }
        }

        #[test]
        fn functionals_linear(
            s in proptest::array::uniform8(-2.0..2.0f64),
            t in proptest::array::uniform8(-2.0..2.0f64),
            k in cplx(),
        ) {
            let g = general(c(1., 0.), c(2., 0.), c(-2., 0.), c(-3., 0.));
            let tr = |v: [f64; 8]| BoundaryTrace::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]));
            let (u, v) = (tr(s), tr(t));
            let lhs = boundary_functionals(&u.scale(k).add(&v), &g);
            let (u0, u1) = boundary_functionals(&u, &g);
            let (v0, v1) = boundary_functionals(&v, &g);
            prop_assert!((lhs.0 - (u0 * k + v0)).norm() < 1e-12);
            prop_assert!((lhs.1 - (u1 * k + v1)).norm() < 1e-12);
        }
    }
}
