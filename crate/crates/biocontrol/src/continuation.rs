//! Tracing of the Hopf variety in the `(k1, k2)` interaction plane.
//!
//! The variety is the zero set of the Routh-Hurwitz discriminant at the
//! coexistence equilibrium. Inside the admissible wedge it behaves like a
//! graph over `k1` for moderate carrying capacities, so the tracer solves a
//! scalar root per `k1` slice instead of running arclength continuation.
//! The module also locates the tangency of the curve family with the
//! diagonal `k1 = k2` as the parasitoid carrying capacity grows, past which
//! the unstable pocket leaves the admissible region entirely.

use crate::error::{Error, Result};
use crate::hopf;
use crate::model::{ModelParams, ToleranceSettings};
use crate::stability::{a_coefficients, delta_at_a4, routh_hurwitz};

/// One solved point of the variety.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub k1: f64,
    pub k2: f64,
    /// Critical frequency `sqrt(a3/a1)` at the point.
    pub omega0: f64,
    /// Sign of the first Lyapunov coefficient: `+1`, `-1` or `0`.
    pub l1_sign: i8,
    /// Discriminant left after polishing, relative to its natural scale.
    pub delta_residual: f64,
    /// Sign changes beyond the first found in the slice scan.
    pub extra_roots: usize,
}

/// Result of the diagonal-tangency search over the carrying capacity.
#[derive(Clone, Copy, Debug)]
pub struct TangencyResult {
    /// Carrying capacity at which the variety touches the diagonal.
    pub c2_star: f64,
    /// Tangency point coordinates (`k1 = k2`).
    pub k1: f64,
    pub k2: f64,
    /// Discriminant gradient at the tangency point.
    pub gradient: [f64; 2],
    /// Second derivative of the diagonal restriction at the touch point;
    /// positive means the diagonal trace only touches zero from above.
    pub diagonal_second_derivative: f64,
    /// `k1` range that was scanned when certifying the root count.
    pub scanned_k1: (f64, f64),
}

/// Discriminant as a function of the controls, everything else taken
/// from `base`.
pub fn delta_of(base: &ModelParams, k1: f64, k2: f64, c2: f64) -> Result<f64> {
    delta_at_a4(&base.with_interactions(k1, k2).with_c2(c2))
}

fn delta_scale_of(base: &ModelParams, k1: f64, k2: f64, c2: f64) -> Result<f64> {
    let c = a_coefficients(&base.with_interactions(k1, k2).with_c2(c2))?;
    Ok((c.a1 * c.a2 * c.a3).abs())
}

/// Bisection refined by secant steps on a bracketed scalar root.
fn refine_root<F>(mut f: F, mut lo: f64, mut hi: f64, mut f_lo: f64, mut f_hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        // secant candidate, clamped to the central 80% of the bracket
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let mid = 0.5 * (lo + hi);
        let x = if secant.is_finite() && secant > lo + 0.1 * (hi - lo) && secant < hi - 0.1 * (hi - lo)
        {
            secant
        } else {
            mid
        };
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The root `k2 in (0, k1]` of the discriminant along a vertical slice,
/// found by a 256-point log-spaced scan followed by bisection and secant
/// polishing. Returns `None` when the slice has no sign change; extra sign
/// changes beyond the first are counted in the result.
pub fn solve_sigma_k2(base: &ModelParams, k1: f64, c2: f64) -> Result<Option<CurvePoint>> {
    let probe = base.with_interactions(k1, k1).with_c2(c2);
    let k1_max = probe.k1_max()?;
    if !(k1 > 0.0 && k1 < k1_max) {
        return Err(Error::Domain(format!(
            "slice k1 = {k1} outside (0, k1_max = {k1_max}) at c2 = {c2}"
        )));
    }

    const SCAN: usize = 256;
    let k2_lo = 1e-6 * k1;
    let ratio = (k1 / k2_lo).powf(1.0 / (SCAN - 1) as f64);
    let mut grid = [0.0f64; SCAN];
    let mut value = [0.0f64; SCAN];
    let mut k = k2_lo;
    for i in 0..SCAN {
        grid[i] = k.min(k1);
        value[i] = delta_of(base, k1, grid[i], c2)?;
        k *= ratio;
    }

    let mut brackets = Vec::new();
    for i in 0..SCAN - 1 {
        if value[i] == 0.0 {
            brackets.push((grid[i], grid[i], value[i], value[i]));
        } else if value[i] * value[i + 1] < 0.0 {
            brackets.push((grid[i], grid[i + 1], value[i], value[i + 1]));
        }
    }
    let extra_roots = brackets.len().saturating_sub(1);
    let Some(&(lo, hi, f_lo, f_hi)) = brackets.first() else {
        return Ok(None);
    };

    let root = if lo == hi {
        lo
    } else {
        refine_root(|x| delta_of(base, k1, x, c2), lo, hi, f_lo, f_hi, 1e-12)?
    };

    let on_curve = base.with_interactions(k1, root).with_c2(c2);
    let coeffs = a_coefficients(&on_curve)?;
    let omega0 = (coeffs.a3 / coeffs.a1).sqrt();
    let delta_residual =
        routh_hurwitz(&coeffs)?.delta / delta_scale_of(base, k1, root, c2)?.max(f64::MIN_POSITIVE);

    // Lyapunov sign with the tolerance band widened to the achieved residual
    let tol = ToleranceSettings {
        on_sigma_rel: delta_residual.abs().max(1e-9) * 10.0,
        ..Default::default()
    };
    let l1_sign = match hopf::lyapunov_l1(&on_curve, None, &tol) {
        Ok(report) => match hopf::HopfClass::from_g21(report.g21) {
            hopf::HopfClass::Subcritical => 1,
            hopf::HopfClass::Supercritical => -1,
            hopf::HopfClass::Degenerate => 0,
        },
        Err(_) => 0,
    };

    Ok(Some(CurvePoint {
        k1,
        k2: root,
        omega0,
        l1_sign,
        delta_residual,
        extra_roots,
    }))
}

/// Trace the variety over `n` slices. A coarse log-spaced scan first finds
/// the `k1` sub-interval actually carrying roots; the `n` slices are then
/// distributed over that sub-interval. An empty vector is a legal result
/// (for large carrying capacities the variety leaves the wedge).
///
/// Slices are independent of each other, so callers may fan the per-slice
/// solves out across threads; this implementation runs them sequentially
/// and orders the output by `k1` either way.
pub fn trace_sigma(base: &ModelParams, c2: f64, n: usize) -> Result<Vec<CurvePoint>> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 grid points".into()));
    }
    let probe = base.with_interactions(1e-6, 1e-6).with_c2(c2);
    let k1_max = probe.k1_max()?;
    let lo = 1e-3 * k1_max;
    let hi = 0.999 * k1_max;

    const COARSE: usize = 96;
    let ratio = (hi / lo).powf(1.0 / (COARSE - 1) as f64);
    let mut carrying = Vec::new();
    let mut k = lo;
    for _ in 0..COARSE {
        if solve_sigma_k2(base, k, c2)?.is_some() {
            carrying.push(k);
        }
        k *= ratio;
    }
    let (Some(&first), Some(&last)) = (carrying.first(), carrying.last()) else {
        return Ok(Vec::new());
    };
    // pad one coarse cell outward so grid endpoints are not clipped
    let left = (first / ratio).max(lo);
    let right = (last * ratio).min(hi);

    let mut points = Vec::new();
    for i in 0..n {
        let k1 = left + (right - left) * i as f64 / (n - 1) as f64;
        if let Some(pt) = solve_sigma_k2(base, k1, c2)? {
            points.push(pt);
        }
    }
    points.sort_by(|a, b| a.k1.partial_cmp(&b.k1).unwrap());
    Ok(points)
}

/// Central-difference gradient of the discriminant in `(k1, k2)`, one
/// Richardson extrapolation per component.
pub fn gradient_delta(base: &ModelParams, k1: f64, k2: f64, c2: f64) -> Result<[f64; 2]> {
    let step1 = 1e-7 * k1.max(1e-4);
    let step2 = 1e-7 * k2.max(1e-4);
    let d1 = |h: f64| -> Result<f64> {
        Ok((delta_of(base, k1 + h, k2, c2)? - delta_of(base, k1 - h, k2, c2)?) / (2.0 * h))
    };
    let d2 = |h: f64| -> Result<f64> {
        Ok((delta_of(base, k1, k2 + h, c2)? - delta_of(base, k1, k2 - h, c2)?) / (2.0 * h))
    };
    let g1 = (4.0 * d1(step1 / 2.0)? - d1(step1)?) / 3.0;
    let g2 = (4.0 * d2(step2 / 2.0)? - d2(step2)?) / 3.0;
    Ok([g1, g2])
}

/// Diagonal restriction `N(k1) = Delta(k1, k1, c2)`.
fn diagonal_delta(base: &ModelParams, k1: f64, c2: f64) -> Result<f64> {
    delta_of(base, k1, k1, c2)
}

/// Minimum of the diagonal restriction over the admissible `k1` range,
/// located by golden-section search seeded from a coarse scan.
fn diagonal_minimum(base: &ModelParams, c2: f64) -> Result<(f64, f64, (f64, f64))> {
    let probe = base.with_interactions(1e-6, 1e-6).with_c2(c2);
    let k1_max = probe.k1_max()?;
    let lo = 1e-5 * k1_max;
    let hi = 0.999 * k1_max;

    const SCAN: usize = 512;
    let ratio = (hi / lo).powf(1.0 / (SCAN - 1) as f64);
    let mut best = (lo, f64::INFINITY);
    let mut k = lo;
    for _ in 0..SCAN {
        let v = diagonal_delta(base, k, c2)?;
        if v < best.1 {
            best = (k, v);
        }
        k *= ratio;
    }

    let mut a = (best.0 / ratio).max(lo);
    let mut b = (best.0 * ratio).min(hi);
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    let mut x1 = a + phi * (b - a);
    let mut x2 = b - phi * (b - a);
    let mut f1 = diagonal_delta(base, x1, c2)?;
    let mut f2 = diagonal_delta(base, x2, c2)?;
    for _ in 0..120 {
        if b - a <= 1e-14 * b.max(1.0) + 1e-18 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + phi * (b - a);
            f1 = diagonal_delta(base, x1, c2)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - phi * (b - a);
            f2 = diagonal_delta(base, x2, c2)?;
        }
    }
    let k_min = 0.5 * (a + b);
    Ok((k_min, diagonal_delta(base, k_min, c2)?, (lo, hi)))
}

/// Number of diagonal zero crossings, certified on a fine log grid plus the
/// neighbourhood of the diagonal minimum.
fn diagonal_root_count(base: &ModelParams, c2: f64) -> Result<usize> {
    let (k_min, f_min, (lo, hi)) = diagonal_minimum(base, c2)?;
    if f_min > 0.0 {
        return Ok(0);
    }
    if f_min == 0.0 {
        return Ok(1);
    }
    // negative minimum: a crossing on each side as long as the ends are
    // positive, which the scan verifies
    let f_lo = diagonal_delta(base, lo, c2)?;
    let f_hi = diagonal_delta(base, hi, c2)?;
    let mut count = 0;
    if f_lo > 0.0 && k_min > lo {
        count += 1;
    }
    if f_hi > 0.0 && k_min < hi {
        count += 1;
    }
    Ok(count)
}

/// Locate the tangency of the variety family with the diagonal: the
/// carrying capacity at which the diagonal root pair collapses to a single
/// touch point. Bisection on the root count brackets the critical capacity;
/// a two-dimensional Newton iteration on `(N, dN/dk1) = 0` polishes
/// `(k1, c2)` to convergence.
pub fn find_tangency(base: &ModelParams) -> Result<TangencyResult> {
    // bracket by root count: 2 roots below the critical capacity, 0 above
    let mut lo = base.c2;
    if diagonal_root_count(base, lo)? < 2 {
        return Err(Error::Bracketing(format!(
            "expected two diagonal crossings at c2 = {lo}"
        )));
    }
    let mut hi = lo;
    for _ in 0..40 {
        hi *= 1.5;
        if diagonal_root_count(base, hi)? == 0 {
            break;
        }
    }
    if diagonal_root_count(base, hi)? != 0 {
        return Err(Error::Bracketing(format!(
            "no capacity with an empty diagonal found up to c2 = {hi}"
        )));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if diagonal_root_count(base, mid)? >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    let mut c2 = 0.5 * (lo + hi);
    let (mut k1, _, scanned) = diagonal_minimum(base, c2)?;

    // Newton on F(k1, c2) = (N, dN/dk1) with finite-difference Jacobian
    let n_of = |k: f64, c: f64| diagonal_delta(base, k, c);
    let dn_dk = |k: f64, c: f64| -> Result<f64> {
        let h = 1e-6 * k;
        Ok((n_of(k + h, c)? - n_of(k - h, c)?) / (2.0 * h))
    };
    for _ in 0..60 {
        let f1 = n_of(k1, c2)?;
        let f2 = dn_dk(k1, c2)?;
        let hk = 1e-6 * k1;
        let hc = 1e-6 * c2;
        let j11 = (n_of(k1 + hk, c2)? - n_of(k1 - hk, c2)?) / (2.0 * hk);
        let j12 = (n_of(k1, c2 + hc)? - n_of(k1, c2 - hc)?) / (2.0 * hc);
        let j21 = (dn_dk(k1 + hk, c2)? - dn_dk(k1 - hk, c2)?) / (2.0 * hk);
        let j22 = (dn_dk(k1, c2 + hc)? - dn_dk(k1, c2 - hc)?) / (2.0 * hc);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::IterationFailure(
                "singular Jacobian in the tangency Newton iteration".into(),
            ));
        }
        let dk = (-f1 * j22 + f2 * j12) / det;
        let dc = (-j11 * f2 + j21 * f1) / det;
        k1 += dk;
        c2 += dc;
        if dk.abs() <= 1e-12 * k1 && dc.abs() <= 1e-10 * c2 {
            break;
        }
    }

    // second-order condition: the diagonal trace touches zero from above
    let h = 1e-4 * k1;
    let second =
        (n_of(k1 + h, c2)? - 2.0 * n_of(k1, c2)? + n_of(k1 - h, c2)?) / (h * h);
    if second <= 0.0 {
        return Err(Error::Inconsistency(format!(
            "diagonal restriction is not convex at the tangency point: N'' = {second}"
        )));
    }

    let gradient = gradient_delta(base, k1, k1, c2)?;
    Ok(TangencyResult {
        c2_star: c2,
        k1,
        k2: k1,
        gradient,
        diagonal_second_derivative: second,
        scanned_k1: scanned,
    })
}
