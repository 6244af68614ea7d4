//! First Lyapunov coefficient at the coexistence equilibrium by the
//! projection method.
//!
//! At a point of the Hopf variety the Jacobian `A` has a simple pair
//! `+-i w0`. With right/left eigenvectors normalised to `<p, q> = 1`, the
//! resolvent vectors
//!
//! ```text
//! h11 = -A^-1 B(q, conj q),        h20 = (2 i w0 I - A)^-1 B(q, q)
//! ```
//!
//! feed the cubic normal-form coefficient
//!
//! ```text
//! G21 = <p, C(q, q, conj q) + B(conj q, h20) + 2 B(q, h11)>
//! ```
//!
//! and the first Lyapunov coefficient `l1 = Re(G21) / (2 w0^2)`, whose sign
//! decides whether the bifurcating cycle family is unstable (`l1 > 0`,
//! subcritical) or stable (`l1 < 0`, supercritical). The sign is invariant
//! under any rescaling of `q` with `p` refit to the relative normalisation;
//! the magnitude is not, so every report carries a normalisation tag.

use crate::error::{Error, Result};
use crate::linalg::{self, cvec_add, cvec_conj, cvec_norm, cvec_scale, CVec4, Matrix4, C_ZERO};
use crate::model::{trilinear_c, ModelParams, ToleranceSettings};
use crate::stability::{a_coefficients, delta_at_a4, delta_scale};
use num_complex::Complex64;

/// How the right eigenvector was scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizationTag {
    /// Unit Euclidean norm, first significant component real positive.
    DefaultUnit,
    /// Caller-supplied vector, used verbatim.
    CallerSupplied,
}

/// Everything the projection method produces at one parameter point.
#[derive(Clone, Debug)]
pub struct HopfReport {
    /// Angular frequency of the critical pair.
    pub omega0: f64,
    /// Right eigenvector for `+i w0`.
    pub q: CVec4,
    /// Left eigenvector, `A^T p = -i w0 p`, scaled so `<p, q> = 1`.
    pub p: CVec4,
    /// `-A^-1 B(q, conj q)`; real up to round-off.
    pub h11: CVec4,
    /// `(2 i w0 I - A)^-1 B(q, q)`.
    pub h20: CVec4,
    /// Cubic normal-form coefficient.
    pub g21: Complex64,
    /// First Lyapunov coefficient, `Re(G21) / (2 w0^2)`.
    pub l1: f64,
    /// Derivative of `Re(lambda)` along the unit gradient of the
    /// discriminant in the `(k1, k2)` plane.
    pub transversality: f64,
    pub normalization: NormalizationTag,
}

/// Sub- or supercriticality of the Hopf point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopfClass {
    /// `l1 > 0`: the bifurcating periodic orbits are unstable.
    Subcritical,
    /// `l1 < 0`: the bifurcating periodic orbits are stable.
    Supercritical,
    Degenerate,
}

impl HopfClass {
    /// Classification from the cubic coefficient alone. The test is relative
    /// to `|G21|` so it is invariant under eigenvector rescaling.
    pub fn from_g21(g21: Complex64) -> HopfClass {
        let magnitude = g21.norm();
        if g21.re > 1e-9 * magnitude {
            HopfClass::Subcritical
        } else if g21.re < -1e-9 * magnitude {
            HopfClass::Supercritical
        } else {
            HopfClass::Degenerate
        }
    }
}

/// Critical frequency on the Hopf variety from the coefficient identity
/// `w0^2 = a3 / a1` (a quartic with a pure-imaginary pair and a stable
/// quadratic factor `L^2 + b L + c` has `a1 = b`, `a3 = b w^2`).
///
/// Errors if the parameters are off the variety at the configured band or if
/// the coefficient ratio degenerates; the result is cross-checked against
/// the eigenvalue solver.
pub fn omega0_at(p: &ModelParams, tol: &ToleranceSettings) -> Result<f64> {
    let delta = delta_at_a4(p)?;
    let scale = delta_scale(p)?;
    let band = tol.on_sigma_rel * scale;
    if delta.abs() > band {
        return Err(Error::NotOnSigma {
            delta: delta.abs(),
            band,
        });
    }
    let c = a_coefficients(p)?;
    let ratio = c.a3 / c.a1;
    if !(ratio > 0.0) {
        return Err(Error::Degeneracy(format!(
            "a3/a1 = {ratio} is not positive; no critical frequency"
        )));
    }
    let omega0 = ratio.sqrt();

    // independent route: imaginary part of the critical pair
    let j = p.jacobian(&p.equilibria()?.a4);
    let pair = linalg::eigenvalues(&j)?.leading_complex();
    let cross_tol = (2.0 * delta.abs() / scale).max(1e-6) * omega0.max(1.0);
    if (pair.im - omega0).abs() > cross_tol {
        return Err(Error::Inconsistency(format!(
            "coefficient frequency {omega0} vs eigenvalue frequency {}",
            pair.im
        )));
    }
    Ok(omega0)
}

/// Projection-method engine over explicit Taylor data: Jacobian `a`, the
/// quadratic form `b`, the cubic form `c`, and the critical frequency.
/// Synthetic systems plug in here; the model wrapper is [`lyapunov_l1`].
/// Returns `(q, p, h11, h20, g21, l1)`.
pub fn lyapunov_from_parts<B, C>(
    a: &Matrix4,
    omega0: f64,
    b: B,
    c: C,
    q_override: Option<&CVec4>,
) -> Result<(CVec4, CVec4, CVec4, CVec4, Complex64, f64)>
where
    B: Fn(&CVec4, &CVec4) -> CVec4,
    C: Fn(&CVec4, &CVec4, &CVec4) -> CVec4,
{
    let spectrum = linalg::eigenvalues(a)?;
    let lambda = spectrum.leading_complex();
    if lambda.im <= 0.0 {
        return Err(Error::Degeneracy(
            "no eigenvalue with positive imaginary part".into(),
        ));
    }
    let pair = linalg::eigenpair_at(a, lambda, q_override)?;
    let (q, p) = (pair.right, pair.left);
    let q_bar = cvec_conj(&q);

    let b_q_qbar = b(&q, &q_bar);
    let b_q_q = b(&q, &q);
    // (0 I - A) h = B(q, conj q)  =>  h11 = -A^-1 B(q, conj q)
    let h11 = linalg::solve_shifted(a, C_ZERO, &b_q_qbar)?;
    // resonance (2 i w0 an eigenvalue) surfaces as a singular-shift error
    let h20 = linalg::solve_shifted(a, Complex64::new(0.0, 2.0 * omega0), &b_q_q)?;

    let mut rhs = c(&q, &q, &q_bar);
    rhs = cvec_add(&rhs, &b(&q_bar, &h20));
    rhs = cvec_add(&rhs, &cvec_scale(&b(&q, &h11), Complex64::new(2.0, 0.0)));
    let g21 = linalg::inner(&p, &rhs);
    let l1 = g21.re / (2.0 * omega0 * omega0);
    Ok((q, p, h11, h20, g21, l1))
}

/// First Lyapunov coefficient of the model at a point of (or near) the Hopf
/// variety, with the full set of intermediate quantities.
///
/// `q_override` replaces the default-normalised right eigenvector, letting
/// callers reproduce externally scaled results exactly; the left vector is
/// always refit to `<p, q> = 1`.
pub fn lyapunov_l1(
    p: &ModelParams,
    q_override: Option<&CVec4>,
    tol: &ToleranceSettings,
) -> Result<HopfReport> {
    let omega0 = omega0_at(p, tol)?;
    let a = p.jacobian(&p.equilibria()?.a4);
    let (q, left, h11, h20, g21, l1) = lyapunov_from_parts(
        &a,
        omega0,
        |x, y| p.bilinear_b(x, y),
        trilinear_c,
        q_override,
    )?;
    let direction = delta_gradient_direction(p)?;
    let transversality = transversality_at(p, direction, tol)?;
    Ok(HopfReport {
        omega0,
        q,
        p: left,
        h11,
        h20,
        g21,
        l1,
        transversality,
        normalization: if q_override.is_some() {
            NormalizationTag::CallerSupplied
        } else {
            NormalizationTag::DefaultUnit
        },
    })
}

/// Unit gradient of the discriminant in the `(k1, k2)` plane; the default
/// crossing direction for transversality (it points into the stable side).
pub fn delta_gradient_direction(p: &ModelParams) -> Result<[f64; 2]> {
    let g = delta_gradient(p)?;
    let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if n == 0.0 {
        return Err(Error::Degeneracy("vanishing discriminant gradient".into()));
    }
    Ok([g[0] / n, g[1] / n])
}

fn delta_gradient(p: &ModelParams) -> Result<[f64; 2]> {
    let h1 = 1e-7 * p.k1.max(1e-4);
    let h2 = 1e-7 * p.k2.max(1e-4);
    let at = |k1: f64, k2: f64| delta_at_a4(&p.with_interactions(k1, k2));
    let g1 = (at(p.k1 + h1, p.k2)? - at(p.k1 - h1, p.k2)?) / (2.0 * h1);
    let g2 = (at(p.k1, p.k2 + h2)? - at(p.k1, p.k2 - h2)?) / (2.0 * h2);
    Ok([g1, g2])
}

/// Derivative of `Re(lambda)` of a tracked eigenvalue along a one-parameter
/// matrix family, by central differences with one Richardson extrapolation.
/// `track` is the eigenvalue at `s = 0` used for minimal-distance matching.
pub fn tracked_re_derivative<F>(family: F, track: Complex64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Matrix4>,
{
    let eig_near = |s: f64| -> Result<Complex64> {
        let m = family(s)?;
        let spec = linalg::eigenvalues(&m)?;
        let lam = spec
            .eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - track)
                    .norm()
                    .partial_cmp(&(b - track).norm())
                    .unwrap()
            })
            .unwrap();
        // a collision collapses the tracked pair onto the real axis
        if track.im.abs() > 1e-9 && lam.im.abs() <= 1e-12 {
            return Err(Error::Degeneracy(
                "tracked eigenvalue pair collided within the step".into(),
            ));
        }
        Ok(lam)
    };

    let mut h = step;
    for _ in 0..6 {
        let attempt = (|| -> Result<f64> {
            let d_h = (eig_near(h)?.re - eig_near(-h)?.re) / (2.0 * h);
            let d_h2 = (eig_near(h / 2.0)?.re - eig_near(-h / 2.0)?.re) / h;
            Ok((4.0 * d_h2 - d_h) / 3.0)
        })();
        match attempt {
            Ok(d) => return Ok(d),
            Err(Error::Degeneracy(_)) => h /= 4.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degeneracy(
        "eigenvalue tracking failed after repeated step reductions".into(),
    ))
}

/// Crossing speed of the critical pair: `d/ds Re(lambda)` at `s = 0` for the
/// parameter path `(k1, k2) + s * direction`. A nonzero value certifies the
/// Hopf point as transversal.
pub fn transversality_at(
    p: &ModelParams,
    direction: [f64; 2],
    _tol: &ToleranceSettings,
) -> Result<f64> {
    let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput(
            "transversality direction must be a nonzero finite vector".into(),
        ));
    }
    let dir = [direction[0] / norm, direction[1] / norm];
    let a0 = p.jacobian(&p.equilibria()?.a4);
    let track = linalg::eigenvalues(&a0)?.leading_complex();
    let step = 1e-6 * p.k1.max(p.k2);
    tracked_re_derivative(
        |s| {
            let moved = p.with_interactions(p.k1 + s * dir[0], p.k2 + s * dir[1]);
            Ok(moved.jacobian(&moved.equilibria()?.a4))
        },
        track,
        step,
    )
}

/// Sub/supercriticality of the Hopf point at `p`.
pub fn classify_hopf(p: &ModelParams, tol: &ToleranceSettings) -> Result<HopfClass> {
    let report = lyapunov_l1(p, None, tol)?;
    Ok(HopfClass::from_g21(report.g21))
}

/// Residual diagnostics for a computed report against the Jacobian it came
/// from; every entry sits at round-off level at a genuine Hopf point.
#[derive(Clone, Copy, Debug)]
pub struct ReportResiduals {
    pub right_eigen: f64,
    pub left_eigen: f64,
    pub biorthogonality: f64,
    pub h11_imag_rel: f64,
}

pub fn report_residuals(p: &ModelParams, report: &HopfReport) -> Result<ReportResiduals> {
    let a = p.jacobian(&p.equilibria()?.a4);
    let i_omega = Complex64::new(0.0, report.omega0);
    let aq = a.mul_cvec(&report.q);
    let right =
        cvec_norm(&linalg::cvec_sub(&aq, &cvec_scale(&report.q, i_omega))) / cvec_norm(&report.q);
    let atp = a.transpose().mul_cvec(&report.p);
    let left = cvec_norm(&linalg::cvec_sub(&atp, &cvec_scale(&report.p, -i_omega)))
        / cvec_norm(&report.p);
    let biorth = (linalg::inner(&report.p, &report.q) - linalg::C_ONE).norm();
    let h11_imag =
        report.h11.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
            / cvec_norm(&report.h11).max(f64::MIN_POSITIVE);
    Ok(ReportResiduals {
        right_eigen: right,
        left_eigen: left,
        biorthogonality: biorth,
        h11_imag_rel: h11_imag,
    })
}
