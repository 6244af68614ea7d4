//! Routh-Hurwitz classification of the model equilibria.
//!
//! The quartic stability test, the closed-form characteristic-polynomial
//! coefficients at the coexistence equilibrium, the closed-form spectra of
//! the three boundary equilibria, and a saddle-type classifier with a
//! tolerance band standing in for the exact-arithmetic statements.

use crate::error::{Error, Result};
use crate::linalg::{self, QuarticCoefficients, Spectrum};
use crate::model::{EquilibriumId, ModelParams, ReproductionNumbers, ToleranceSettings};
use num_complex::Complex64;

/// Stability verdict for one equilibrium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassificationKind {
    AsymptoticallyStable,
    /// `negative` eigenvalues left of the axis, `positive` right of it,
    /// none on it.
    SaddleType { negative: usize, positive: usize },
    /// Exactly one conjugate pair on the axis, the others strictly stable.
    MarginalHopfCandidate,
    /// Anything else with eigenvalues on the axis.
    Degenerate,
}

impl ClassificationKind {
    pub fn label(&self) -> String {
        match self {
            ClassificationKind::AsymptoticallyStable => "stable".into(),
            ClassificationKind::SaddleType { negative, positive } => {
                format!("saddle-{negative}-{positive}")
            }
            ClassificationKind::MarginalHopfCandidate => "hopf-candidate".into(),
            ClassificationKind::Degenerate => "degenerate".into(),
        }
    }
}

/// Classification together with the witnessing spectrum; for the coexistence
/// equilibrium the Routh-Hurwitz data is attached as a cross-check.
#[derive(Clone, Debug)]
pub struct Classification {
    pub kind: ClassificationKind,
    pub spectrum: Spectrum,
    pub routh: Option<RouthHurwitz>,
}

/// Outcome of the quartic Routh-Hurwitz test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RouthHurwitz {
    pub stable: bool,
    pub delta: f64,
    pub positive_coeffs: bool,
}

/// All roots of `a0 L^4 + a1 L^3 + a2 L^2 + a3 L + a4` have negative real
/// part iff `a1..a4 > 0` and `delta = a1 a2 a3 - a0 a3^2 - a1^2 a4 > 0`.
pub fn routh_hurwitz(c: &QuarticCoefficients) -> Result<RouthHurwitz> {
    if !c.is_finite() {
        return Err(Error::InvalidInput("non-finite quartic coefficient".into()));
    }
    if c.a0 <= 0.0 {
        return Err(Error::Domain(format!(
            "Routh-Hurwitz requires a0 > 0, got a0 = {}",
            c.a0
        )));
    }
    let delta = c.a1 * c.a2 * c.a3 - c.a0 * c.a3 * c.a3 - c.a1 * c.a1 * c.a4;
    let positive_coeffs = c.a1 > 0.0 && c.a2 > 0.0 && c.a3 > 0.0 && c.a4 > 0.0;
    Ok(RouthHurwitz {
        stable: positive_coeffs && delta > 0.0,
        delta,
        positive_coeffs,
    })
}

/// Closed-form characteristic-polynomial coefficients at the coexistence
/// equilibrium, assembled from its coordinates rather than from the Jacobian.
///
/// The constant term comes from the product expansion of the two block
/// quadratics plus the coupling correction; the equivalent encounter-rate
/// form is exposed as [`a4_alternate`] for cross-checking.
pub fn a_coefficients(p: &ModelParams) -> Result<QuarticCoefficients> {
    let eq = p.equilibria()?;
    let (p4, m4, g4) = (eq.a4.p, eq.a4.m, eq.a4.g);
    let host_damping = p.alpha1 + p.beta1 + p.mu1 + p.k1 * g4;
    let parasitoid_damping = p.alpha2 + p.beta2 + p.mu2;
    let host_restoring = p.alpha1 * p.phi1 / p.c1 * m4;
    let parasitoid_restoring = p.alpha2 * p.phi2 / p.c2 * g4;

    let a1 = host_damping + parasitoid_damping;
    let a2 = host_restoring + parasitoid_restoring + host_damping * parasitoid_damping;
    let a3 = host_damping * parasitoid_restoring
        + parasitoid_damping * host_restoring
        + p.alpha2 * p.k1 * p.k2 * p4 * g4;
    let a4 = host_restoring * parasitoid_restoring + p.alpha2 * p.mu1 * p.k1 * p.k2 * p4 * g4;
    Ok(QuarticCoefficients::monic(a1, a2, a3, a4))
}

/// The constant term written in terms of the reproduction-number excesses;
/// algebraically equal to the `a4` of [`a_coefficients`].
pub fn a4_alternate(p: &ModelParams) -> Result<f64> {
    let eq = p.equilibria()?;
    let ReproductionNumbers { r1, r2 } = p.reproduction_numbers();
    Ok(p.alpha2
        * p.alpha1
        * p.phi1
        * (p.k2 * (1.0 - 1.0 / r1) * eq.a4.p + p.phi2 / p.c1 * (1.0 - 1.0 / r2) * eq.a4.m))
}

/// The Routh-Hurwitz discriminant at the coexistence equilibrium. Positive
/// means asymptotically stable, negative unstable, zero a Hopf candidate.
pub fn delta_at_a4(p: &ModelParams) -> Result<f64> {
    let c = a_coefficients(p)?;
    Ok(routh_hurwitz(&c)?.delta)
}

/// Natural magnitude against which `delta` is compared.
pub fn delta_scale(p: &ModelParams) -> Result<f64> {
    let c = a_coefficients(p)?;
    Ok((c.a1 * c.a2 * c.a3).abs())
}

/// Boundary equilibria with closed-form spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryEquilibrium {
    A1,
    A2,
    A3,
}

/// Roots of `L^2 + s L + q` as a conjugate-closed pair.
fn quadratic_pair(s: f64, q: f64) -> [Complex64; 2] {
    let disc = s * s - 4.0 * q;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new((-s + r) / 2.0, 0.0),
            Complex64::new((-s - r) / 2.0, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [
            Complex64::new(-s / 2.0, r / 2.0),
            Complex64::new(-s / 2.0, -r / 2.0),
        ]
    }
}

/// Closed-form spectrum of a boundary equilibrium. Negative discriminants
/// produce the complex pair rather than an error.
pub fn boundary_spectra(p: &ModelParams, which: BoundaryEquilibrium) -> Result<Spectrum> {
    p.validate()?;
    let ReproductionNumbers { r1, r2 } = p.reproduction_numbers();
    let f1 = 1.0 - 1.0 / r1;
    let f2 = 1.0 - 1.0 / r2;
    let s1 = p.alpha1 + p.beta1 + p.mu1;
    let s2 = p.alpha2 + p.beta2 + p.mu2;
    let eq = p.equilibria()?;

    let (host_pair, parasitoid_pair) = match which {
        BoundaryEquilibrium::A1 => (
            // constant terms via the reproduction-number identity:
            // mu (alpha + beta) - alpha phi = -alpha phi (1 - 1/R)
            quadratic_pair(s1, -p.alpha1 * p.phi1 * f1),
            quadratic_pair(s2, -p.alpha2 * p.phi2 * f2),
        ),
        BoundaryEquilibrium::A2 => (
            quadratic_pair(s1, p.alpha1 * p.phi1 * f1),
            quadratic_pair(
                s2,
                -p.alpha2 * p.phi2 * f2 - p.c1 * p.alpha2 * p.mu1 / p.alpha1 * f1 * p.k2,
            ),
        ),
        BoundaryEquilibrium::A3 => {
            let g3 = eq.a3.g;
            let damp = s1 + p.k1 * g3;
            (
                quadratic_pair(
                    damp,
                    p.mu1 * (p.alpha1 + p.beta1 + p.k1 * g3) - p.alpha1 * p.phi1,
                ),
                quadratic_pair(s2, p.alpha2 * p.phi2 * f2),
            )
        }
    };
    Ok(Spectrum::from_unsorted([
        host_pair[0],
        host_pair[1],
        parasitoid_pair[0],
        parasitoid_pair[1],
    ]))
}

/// Whether the host-block pair at the host-only equilibrium is complex
/// (recruitment above the oscillation threshold).
pub fn a2_host_pair_complex(p: &ModelParams) -> bool {
    let s1 = p.alpha1 + p.beta1 + p.mu1;
    p.phi1 > (s1 * s1 + 4.0 * p.mu1 * (p.alpha1 + p.beta1)) / (4.0 * p.alpha1)
}

/// Whether the parasitoid-block pair at the parasitoid-only equilibrium is
/// complex.
pub fn a3_parasitoid_pair_complex(p: &ModelParams) -> bool {
    let s2 = p.alpha2 + p.beta2 + p.mu2;
    p.phi2 > (s2 * s2 + 4.0 * p.mu2 * (p.alpha2 + p.beta2)) / (4.0 * p.alpha2)
}

fn classify_spectrum(spectrum: &Spectrum, axis_band: f64) -> ClassificationKind {
    let mut negative = 0usize;
    let mut positive = 0usize;
    let mut on_axis = 0usize;
    for z in spectrum.eigenvalues {
        if z.re.abs() <= axis_band {
            on_axis += 1;
        } else if z.re < 0.0 {
            negative += 1;
        } else {
            positive += 1;
        }
    }
    match (negative, positive, on_axis) {
        (4, 0, 0) => ClassificationKind::AsymptoticallyStable,
        (n, p, 0) if p >= 1 => ClassificationKind::SaddleType {
            negative: n,
            positive: p,
        },
        (2, 0, 2) => {
            let pair: Vec<_> = spectrum
                .eigenvalues
                .iter()
                .filter(|z| z.re.abs() <= axis_band)
                .collect();
            if pair[0].im != 0.0 && (pair[0].im + pair[1].im).abs() <= axis_band {
                ClassificationKind::MarginalHopfCandidate
            } else {
                ClassificationKind::Degenerate
            }
        }
        _ => ClassificationKind::Degenerate,
    }
}

/// Classify one equilibrium from its Jacobian spectrum. For the coexistence
/// equilibrium the Routh-Hurwitz verdict is computed independently and must
/// agree with the spectral one away from the variety.
pub fn classify(
    p: &ModelParams,
    which: EquilibriumId,
    tol: &ToleranceSettings,
) -> Result<Classification> {
    let eq = p.equilibria()?;
    let x = eq.get(which);
    let j = p.jacobian(&x);
    let spectrum = linalg::eigenvalues(&j)?;
    let axis_band = tol.axis_band_rel * j.norm_inf().max(1.0);
    let kind = classify_spectrum(&spectrum, axis_band);

    let routh = if which == EquilibriumId::A4 {
        let rh = routh_hurwitz(&a_coefficients(p)?)?;
        let verdict_spectral = matches!(kind, ClassificationKind::AsymptoticallyStable);
        // near the variety the discriminant sign is not meaningful at the
        // axis band, so only strict disagreements are flagged
        let scale = delta_scale(p)?;
        let clear_of_variety = rh.delta.abs() > tol.on_sigma_rel * scale;
        let degenerate = matches!(
            kind,
            ClassificationKind::MarginalHopfCandidate | ClassificationKind::Degenerate
        );
        if clear_of_variety && !degenerate && rh.positive_coeffs && rh.stable != verdict_spectral {
            return Err(Error::Inconsistency(format!(
                "Routh-Hurwitz verdict (stable = {}) disagrees with the spectrum {:?}",
                rh.stable, spectrum.eigenvalues
            )));
        }
        Some(rh)
    } else {
        None
    };

    Ok(Classification {
        kind,
        spectrum,
        routh,
    })
}
