//! The four-compartment host-parasitoid vector field and its closed-form
//! structure: Jacobian, quadratic form, equilibria, reproduction numbers and
//! the admissibility predicates on the interaction coefficients.

use crate::error::{Error, Result};
use crate::linalg::{CVec4, Matrix4, Vec4, C_ZERO};
use num_complex::Complex64;

/// The twelve positive rates and capacities of the model, with the
/// interaction pair `(k1, k2)` and the parasitoid carrying capacity `c2`
/// acting as the distinguished controls of the analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Host pupae-to-adult emergence rate.
    pub alpha1: f64,
    /// Host pupae mortality rate.
    pub beta1: f64,
    /// Host adult mortality rate.
    pub mu1: f64,
    /// Host egg-to-pupa recruitment rate.
    pub phi1: f64,
    /// Host adult carrying capacity.
    pub c1: f64,
    /// Host loss per host-parasitoid encounter.
    pub k1: f64,
    /// Parasitoid larva-to-adult emergence rate.
    pub alpha2: f64,
    /// Parasitoid larva mortality rate.
    pub beta2: f64,
    /// Parasitoid adult mortality rate.
    pub mu2: f64,
    /// Parasitoid oviposition rate.
    pub phi2: f64,
    /// Parasitoid adult carrying capacity.
    pub c2: f64,
    /// Parasitoid gain per host-parasitoid encounter.
    pub k2: f64,
}

/// Population densities: host pupae `P`, host adults `M`, parasitoid larvae
/// `L`, parasitoid adults `G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub p: f64,
    pub m: f64,
    pub l: f64,
    pub g: f64,
}

impl State {
    pub const ZERO: State = State {
        p: 0.0,
        m: 0.0,
        l: 0.0,
        g: 0.0,
    };

    pub fn new(p: f64, m: f64, l: f64, g: f64) -> Self {
        State { p, m, l, g }
    }

    pub fn to_array(&self) -> Vec4 {
        [self.p, self.m, self.l, self.g]
    }

    pub fn from_array(v: &Vec4) -> Self {
        State::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// True when every component is non-negative (biological meaning).
    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|&x| x >= 0.0)
    }
}

impl From<Vec4> for State {
    fn from(v: Vec4) -> Self {
        State::from_array(&v)
    }
}

impl From<State> for Vec4 {
    fn from(s: State) -> Self {
        s.to_array()
    }
}

/// Dimensionless per-species reproduction numbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReproductionNumbers {
    pub r1: f64,
    pub r2: f64,
}

/// Which equilibrium of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquilibriumId {
    /// Total extinction.
    A1,
    /// Host only.
    A2,
    /// Parasitoid only.
    A3,
    /// Coexistence.
    A4,
}

impl EquilibriumId {
    pub const ALL: [EquilibriumId; 4] = [
        EquilibriumId::A1,
        EquilibriumId::A2,
        EquilibriumId::A3,
        EquilibriumId::A4,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            EquilibriumId::A1 => "A1",
            EquilibriumId::A2 => "A2",
            EquilibriumId::A3 => "A3",
            EquilibriumId::A4 => "A4",
        }
    }
}

/// The four closed-form equilibria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumSet {
    pub a1: State,
    pub a2: State,
    pub a3: State,
    pub a4: State,
}

impl EquilibriumSet {
    pub fn get(&self, id: EquilibriumId) -> State {
        match id {
            EquilibriumId::A1 => self.a1,
            EquilibriumId::A2 => self.a2,
            EquilibriumId::A3 => self.a3,
            EquilibriumId::A4 => self.a4,
        }
    }
}

/// One admissibility condition together with its observed violation.
#[derive(Clone, Debug, PartialEq)]
pub enum AdmissibilityViolation {
    NonPositiveK1 { k1: f64 },
    NonPositiveK2 { k2: f64 },
    K2ExceedsK1 { k1: f64, k2: f64 },
    K1AtOrAboveMax { k1: f64, k1_max: f64 },
    R1NotAboveOne { r1: f64 },
    R2NotAboveOne { r2: f64 },
}

impl std::fmt::Display for AdmissibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdmissibilityViolation::NonPositiveK1 { k1 } => write!(f, "k1 = {k1} must be > 0"),
            AdmissibilityViolation::NonPositiveK2 { k2 } => write!(f, "k2 = {k2} must be > 0"),
            AdmissibilityViolation::K2ExceedsK1 { k1, k2 } => {
                write!(f, "k2 = {k2} must not exceed k1 = {k1}")
            }
            AdmissibilityViolation::K1AtOrAboveMax { k1, k1_max } => {
                write!(f, "k1 = {k1} must stay below k1_max = {k1_max}")
            }
            AdmissibilityViolation::R1NotAboveOne { r1 } => write!(f, "R1 = {r1} must exceed 1"),
            AdmissibilityViolation::R2NotAboveOne { r2 } => write!(f, "R2 = {r2} must exceed 1"),
        }
    }
}

/// Verdict of [`ModelParams::is_admissible`] with per-condition diagnostics.
#[derive(Clone, Debug)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<AdmissibilityViolation>,
}

/// Shared tolerance knobs. One record is threaded through every module so a
/// caller can tighten or widen the whole pipeline coherently.
#[derive(Clone, Copy, Debug)]
pub struct ToleranceSettings {
    /// Relative residual accepted for an equilibrium.
    pub equilibrium_rel: f64,
    /// Relative band on `Re(lambda)` treated as "on the imaginary axis".
    pub axis_band_rel: f64,
    /// `|Delta| <= on_sigma_rel * a1 a2 a3` counts as on the Hopf variety.
    pub on_sigma_rel: f64,
    /// Absolute tolerance for scalar root solves in parameter space.
    pub root_abs: f64,
    /// Local error tolerance for the integrator runs inside orbit
    /// shooting and monodromy computation.
    pub integrator_tol: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        ToleranceSettings {
            equilibrium_rel: 1e-9,
            axis_band_rel: 1e-8,
            on_sigma_rel: 1e-6,
            root_abs: 1e-10,
            integrator_tol: 1e-12,
        }
    }
}

impl ModelParams {
    /// Field-study parameter set used throughout the bifurcation analysis;
    /// the interaction pair `(k1, k2)` is supplied by the caller.
    pub fn reference(k1: f64, k2: f64) -> Self {
        ModelParams {
            alpha1: 0.7,
            beta1: 0.003,
            mu1: 0.6,
            phi1: 2.3,
            c1: 400_000.0,
            k1,
            alpha2: 0.3,
            beta2: 0.0015,
            mu2: 0.4,
            phi2: 4.0,
            c2: 100.0,
            k2,
        }
    }

    pub fn with_interactions(mut self, k1: f64, k2: f64) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    pub fn with_c2(mut self, c2: f64) -> Self {
        self.c2 = c2;
        self
    }

    pub fn fields(&self) -> [(&'static str, f64); 12] {
        [
            ("alpha1", self.alpha1),
            ("beta1", self.beta1),
            ("mu1", self.mu1),
            ("phi1", self.phi1),
            ("c1", self.c1),
            ("k1", self.k1),
            ("alpha2", self.alpha2),
            ("beta2", self.beta2),
            ("mu2", self.mu2),
            ("phi2", self.phi2),
            ("c2", self.c2),
            ("k2", self.k2),
        ]
    }

    /// Every parameter must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Domain(format!(
                    "parameter {name} = {value} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    /// Right-hand side of the model at `x`.
    pub fn vector_field(&self, x: &State) -> Result<State> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite state component in {x:?}"
            )));
        }
        let State { p, m, l, g } = *x;
        Ok(State::new(
            self.phi1 * (1.0 - m / self.c1) * m - (self.alpha1 + self.beta1) * p - self.k1 * p * g,
            self.alpha1 * p - self.mu1 * m,
            self.phi2 * (1.0 - g / self.c2) * g - (self.alpha2 + self.beta2) * l
                + self.k2 * p * g,
            self.alpha2 * l - self.mu2 * g,
        ))
    }

    /// Jacobian matrix of the vector field at `x`.
    pub fn jacobian(&self, x: &State) -> Matrix4 {
        let State { p, m, g, .. } = *x;
        Matrix4::from_rows([
            [
                -self.alpha1 - self.beta1 - self.k1 * g,
                self.phi1 - 2.0 * self.phi1 * m / self.c1,
                0.0,
                -self.k1 * p,
            ],
            [self.alpha1, -self.mu1, 0.0, 0.0],
            [
                self.k2 * g,
                0.0,
                -self.alpha2 - self.beta2,
                self.phi2 - 2.0 * self.phi2 * g / self.c2 + self.k2 * p,
            ],
            [0.0, 0.0, self.alpha2, -self.mu2],
        ])
    }

    /// The symmetric bilinear form of the (exactly quadratic) field over
    /// complex 4-vectors: components 2 and 4 vanish identically.
    pub fn bilinear_b(&self, x: &CVec4, y: &CVec4) -> CVec4 {
        // products grouped so that B(x, y) and B(y, x) round identically
        let cross = x[0] * y[3] + x[3] * y[0];
        let b1 = -2.0 * self.phi1 / self.c1 * (x[1] * y[1]) - self.k1 * cross;
        let b3 = -2.0 * self.phi2 / self.c2 * (x[3] * y[3]) + self.k2 * cross;
        [b1, C_ZERO, b3, C_ZERO]
    }

    /// Real-argument convenience wrapper for [`Self::bilinear_b`].
    pub fn bilinear_b_real(&self, x: &Vec4, y: &Vec4) -> Vec4 {
        let cross = x[0] * y[3] + x[3] * y[0];
        [
            -2.0 * self.phi1 / self.c1 * (x[1] * y[1]) - self.k1 * cross,
            0.0,
            -2.0 * self.phi2 / self.c2 * (x[3] * y[3]) + self.k2 * cross,
            0.0,
        ]
    }

    pub fn reproduction_numbers(&self) -> ReproductionNumbers {
        ReproductionNumbers {
            r1: self.alpha1 * self.phi1 / (self.mu1 * (self.alpha1 + self.beta1)),
            r2: self.alpha2 * self.phi2 / (self.mu2 * (self.alpha2 + self.beta2)),
        }
    }

    /// Upper bound on `k1` keeping the coexistence equilibrium non-negative.
    pub fn k1_max(&self) -> Result<f64> {
        let ReproductionNumbers { r1, r2 } = self.reproduction_numbers();
        if r1 <= 1.0 || r2 <= 1.0 {
            return Err(Error::Domain(format!(
                "k1_max requires R1 > 1 and R2 > 1, got R1 = {r1}, R2 = {r2}"
            )));
        }
        Ok(self.alpha1 * self.phi1 * (1.0 - 1.0 / r1) / (self.c2 * self.mu1 * (1.0 - 1.0 / r2)))
    }

    /// The four closed-form equilibria.
    pub fn equilibria(&self) -> Result<EquilibriumSet> {
        self.validate()?;
        let ReproductionNumbers { r1, r2 } = self.reproduction_numbers();
        let f1 = 1.0 - 1.0 / r1;
        let f2 = 1.0 - 1.0 / r2;

        let a2 = State::new(
            self.c1 * self.mu1 / self.alpha1 * f1,
            self.c1 * f1,
            0.0,
            0.0,
        );
        let a3 = State::new(
            0.0,
            0.0,
            self.c2 * self.mu2 / self.alpha2 * f2,
            self.c2 * f2,
        );

        // strictly positive for positive parameters
        let denom = self.alpha1 * self.alpha1 * self.phi1 * self.phi2
            + self.mu1 * self.mu1 * self.c1 * self.c2 * self.k1 * self.k2;
        let host_excess = self.alpha1 * self.phi1 * f1 - self.mu1 * self.c2 * self.k1 * f2;
        let parasitoid_gain = self.c1 * self.mu1 * self.k2 * f1 + self.alpha1 * self.phi2 * f2;
        let a4 = State::new(
            self.c1 * self.mu1 * self.phi2 / denom * host_excess,
            self.c1 * self.alpha1 * self.phi2 / denom * host_excess,
            self.c2 * self.mu2 * self.alpha1 * self.phi1 / (self.alpha2 * denom)
                * parasitoid_gain,
            self.c2 * self.alpha1 * self.phi1 / denom * parasitoid_gain,
        );

        let set = EquilibriumSet {
            a1: State::ZERO,
            a2,
            a3,
            a4,
        };
        for id in EquilibriumId::ALL {
            if !set.get(id).is_finite() {
                return Err(Error::Domain(format!(
                    "equilibrium {} has a non-finite coordinate",
                    id.label()
                )));
            }
        }
        Ok(set)
    }

    /// Membership in the admissible parameter region, with diagnostics
    /// naming each violated condition.
    pub fn is_admissible(&self) -> Admissibility {
        let mut violations = Vec::new();
        if self.k1 <= 0.0 {
            violations.push(AdmissibilityViolation::NonPositiveK1 { k1: self.k1 });
        }
        if self.k2 <= 0.0 {
            violations.push(AdmissibilityViolation::NonPositiveK2 { k2: self.k2 });
        }
        if self.k2 > self.k1 {
            violations.push(AdmissibilityViolation::K2ExceedsK1 {
                k1: self.k1,
                k2: self.k2,
            });
        }
        let ReproductionNumbers { r1, r2 } = self.reproduction_numbers();
        if r1 <= 1.0 {
            violations.push(AdmissibilityViolation::R1NotAboveOne { r1 });
        }
        if r2 <= 1.0 {
            violations.push(AdmissibilityViolation::R2NotAboveOne { r2 });
        }
        if let Ok(k1_max) = self.k1_max() {
            if self.k1 >= k1_max {
                violations.push(AdmissibilityViolation::K1AtOrAboveMax { k1: self.k1, k1_max });
            }
        }
        Admissibility {
            admissible: violations.is_empty(),
            violations,
        }
    }
}

/// The trilinear form of the field: identically zero because the model has
/// no cubic terms.
pub fn trilinear_c(_x: &CVec4, _y: &CVec4, _z: &CVec4) -> CVec4 {
    [C_ZERO; 4]
}

/// Complexified state helper shared by the Hopf machinery.
pub fn state_to_cvec(s: &State) -> CVec4 {
    [
        Complex64::new(s.p, 0.0),
        Complex64::new(s.m, 0.0),
        Complex64::new(s.l, 0.0),
        Complex64::new(s.g, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_to_cvec;
    use proptest::prelude::*;

    fn all_ones() -> ModelParams {
        ModelParams {
            alpha1: 1.0,
            beta1: 1.0,
            mu1: 1.0,
            phi1: 1.0,
            c1: 1.0,
            k1: 1.0,
            alpha2: 1.0,
            beta2: 1.0,
            mu2: 1.0,
            phi2: 1.0,
            c2: 1.0,
            k2: 1.0,
        }
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let p = ModelParams::reference(0.003, 0.001);
        let f = p.vector_field(&State::ZERO).unwrap();
        assert_eq!(f, State::ZERO);
    }

    #[test]
    fn hand_substitution_at_all_ones() {
        let f = all_ones()
            .vector_field(&State::new(1.0, 1.0, 1.0, 1.0))
            .unwrap();
        assert_eq!(f, State::new(-3.0, 0.0, -1.0, 0.0));
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let p = ModelParams::reference(0.003, 0.001);
        assert!(p
            .vector_field(&State::new(f64::NAN, 0.0, 0.0, 0.0))
            .is_err());
        assert!(p
            .vector_field(&State::new(0.0, f64::INFINITY, 0.0, 0.0))
            .is_err());
    }

    #[test]
    fn reproduction_number_unit_case() {
        let mut p = all_ones();
        p.beta1 = 1e-300; // beta1 -> 0 limit of R1 = 1
        let r = p.reproduction_numbers();
        assert!((r.r1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k1_max_scales_inversely_with_c2() {
        let p = ModelParams::reference(0.003, 0.001);
        let base = p.k1_max().unwrap();
        for c2 in [10.0, 250.0, 650.41463] {
            let scaled = p.with_c2(c2).k1_max().unwrap();
            assert!((scaled - base * 100.0 / c2).abs() < 1e-12 * base.max(scaled));
        }
    }

    #[test]
    fn k1_max_requires_supercritical_reproduction() {
        let mut p = ModelParams::reference(0.003, 0.001);
        p.phi1 = 0.1; // pushes R1 below 1
        assert!(p.k1_max().is_err());
    }

    #[test]
    fn bilinear_single_term() {
        let p = all_ones();
        let e2 = [0.0, 1.0, 0.0, 0.0];
        let b = p.bilinear_b_real(&e2, &e2);
        assert_eq!(b, [-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn trilinear_vanishes() {
        let x = vec_to_cvec(&[1.0, -2.0, 0.5, 3.0]);
        let c = trilinear_c(&x, &x, &x);
        assert!(c.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn third_finite_difference_of_field_vanishes() {
        // directional third difference of a quadratic field is zero up to
        // floating-point cancellation
        let p = ModelParams::reference(0.002, 0.0005);
        let x0 = [100.0, 200.0, 30.0, 40.0];
        let v = [1.0, -2.0, 0.5, 1.5];
        let h = 1e-2;
        let eval = |s: f64| {
            let mut x = x0;
            for i in 0..4 {
                x[i] += s * h * v[i];
            }
            p.vector_field(&State::from_array(&x)).unwrap().to_array()
        };
        let (f2, f1, fm1, fm2) = (eval(2.0), eval(1.0), eval(-1.0), eval(-2.0));
        for i in 0..4 {
            let d3 = f2[i] - 2.0 * f1[i] + 2.0 * fm1[i] - fm2[i];
            assert!(d3.abs() <= 1e-4, "third difference {d3} in component {i}");
        }
    }

    #[test]
    fn admissibility_diagnostics() {
        let ok = ModelParams::reference(0.00331, 0.001).is_admissible();
        assert!(ok.admissible, "{:?}", ok.violations);

        let too_big = ModelParams::reference(0.03, 0.001).is_admissible();
        assert!(!too_big.admissible);
        assert!(too_big
            .violations
            .iter()
            .any(|v| matches!(v, AdmissibilityViolation::K1AtOrAboveMax { .. })));

        let swapped = ModelParams::reference(0.001, 0.002).is_admissible();
        assert!(swapped
            .violations
            .iter()
            .any(|v| matches!(v, AdmissibilityViolation::K2ExceedsK1 { .. })));
    }

    #[test]
    fn boundary_k1_equals_k2_is_admissible() {
        let adm = ModelParams::reference(0.00035, 0.00035).is_admissible();
        assert!(adm.admissible, "{:?}", adm.violations);
    }

    fn positive_params() -> impl Strategy<Value = ModelParams> {
        (
            0.05f64..2.0,
            1e-4f64..0.1,
            0.05f64..2.0,
            0.5f64..8.0,
            1e3f64..1e6,
            (1e-5f64..1e-2, 1e-6f64..1e-2),
            0.05f64..2.0,
            1e-4f64..0.1,
            0.05f64..2.0,
            0.5f64..8.0,
            10f64..1e3,
        )
            .prop_map(
                |(alpha1, beta1, mu1, phi1, c1, (k1, k2), alpha2, beta2, mu2, phi2, c2)| {
                    ModelParams {
                        alpha1,
                        beta1,
                        mu1,
                        phi1,
                        c1,
                        k1,
                        alpha2,
                        beta2,
                        mu2,
                        phi2,
                        c2,
                        k2,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn vector_field_vanishes_at_equilibria(p in positive_params()) {
            if let Ok(set) = p.equilibria() {
                for id in EquilibriumId::ALL {
                    let x = set.get(id);
                    let f = p.vector_field(&x).unwrap();
                    let rate_scale = p.fields().iter().map(|(_, v)| v.abs()).fold(1.0, f64::max);
                    let tol = 1e-9 * (1.0 + x.max_abs()) * rate_scale;
                    prop_assert!(f.max_abs() <= tol,
                        "residual {} at {} = {:?}", f.max_abs(), id.label(), x);
                }
            }
        }

        #[test]
        fn jacobian_matches_finite_differences(p in positive_params(),
                                               px in -10.0f64..1e4, mx in -10.0f64..1e4,
                                               lx in -10.0f64..1e3, gx in -10.0f64..1e3) {
            let x = State::new(px, mx, lx, gx);
            let j = p.jacobian(&x);
            let xa = x.to_array();
            for col in 0..4 {
                let h = 1e-6 * (1.0 + xa[col].abs());
                let mut fwd = xa;
                fwd[col] += h;
                let mut bwd = xa;
                bwd[col] -= h;
                let ff = p.vector_field(&State::from_array(&fwd)).unwrap().to_array();
                let fb = p.vector_field(&State::from_array(&bwd)).unwrap().to_array();
                for row in 0..4 {
                    let fd = (ff[row] - fb[row]) / (2.0 * h);
                    let scale = j.0[row][col].abs().max(1e-3);
                    prop_assert!((j.0[row][col] - fd).abs() <= 1e-5 * scale,
                        "J[{row}][{col}] = {} vs fd {}", j.0[row][col], fd);
                }
            }
        }

        #[test]
        fn quadratic_taylor_identity_is_exact(p in positive_params(),
                                              x0 in proptest::array::uniform4(-50.0f64..50.0),
                                              v in proptest::array::uniform4(-10.0f64..10.0)) {
            // f(x0 + v) - f(x0) - J(x0) v = B(v, v) / 2 exactly: the field is quadratic
            let s0 = State::from_array(&x0);
            let f0 = p.vector_field(&s0).unwrap().to_array();
            let mut x1 = x0;
            for i in 0..4 {
                x1[i] += v[i];
            }
            let f1 = p.vector_field(&State::from_array(&x1)).unwrap().to_array();
            let jv = p.jacobian(&s0).mul_vec(&v);
            let bvv = p.bilinear_b_real(&v, &v);
            for i in 0..4 {
                let lhs = f1[i] - f0[i] - jv[i];
                let rhs = 0.5 * bvv[i];
                let scale = f0[i].abs().max(f1[i].abs()).max(jv[i].abs()).max(1.0);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn bilinear_form_is_symmetric(p in positive_params(),
                                      x in proptest::array::uniform4(-5.0f64..5.0),
                                      y in proptest::array::uniform4(-5.0f64..5.0)) {
            let bxy = p.bilinear_b_real(&x, &y);
            let byx = p.bilinear_b_real(&y, &x);
            prop_assert_eq!(bxy, byx);
            prop_assert_eq!(bxy[1], 0.0);
            prop_assert_eq!(bxy[3], 0.0);
        }

        #[test]
        fn complex_bilinear_complexifies_real_form(p in positive_params(),
                                                   x in proptest::array::uniform4(-5.0f64..5.0),
                                                   y in proptest::array::uniform4(-5.0f64..5.0)) {
            let real = p.bilinear_b_real(&x, &y);
            let cplx = p.bilinear_b(&vec_to_cvec(&x), &vec_to_cvec(&y));
            for i in 0..4 {
                prop_assert!((cplx[i].re - real[i]).abs() <= 1e-12 * real[i].abs().max(1.0));
                prop_assert_eq!(cplx[i].im, 0.0);
            }
        }

        #[test]
        fn equilibria_nonnegative_in_admissible_region(seed in 0u64..5000) {
            // random admissible (k1, k2) under the reference rates
            let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = || {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64
            };
            let probe = ModelParams::reference(1e-3, 1e-3);
            let k1_max = probe.k1_max().unwrap();
            let k1 = k1_max * (1e-3 + 0.998 * next());
            let k2 = k1 * (1e-3 + 0.999 * next());
            let p = ModelParams::reference(k1, k2);
            prop_assert!(p.is_admissible().admissible);
            let set = p.equilibria().unwrap();
            for id in EquilibriumId::ALL {
                prop_assert!(set.get(id).is_nonnegative(),
                    "{} = {:?} at k1={k1} k2={k2}", id.label(), set.get(id));
            }
        }
    }
}
