//! Time integration and periodic-orbit machinery.
//!
//! An embedded Dormand-Prince 5(4) integrator with PI step-size control
//! drives everything: plain trajectory integration, first-return maps on a
//! Poincare section through the coexistence equilibrium, Newton shooting for
//! the bifurcating periodic orbit, and monodromy/Floquet computation via the
//! variational equations. The cycle born on the stable side of the Hopf
//! variety is of saddle type, so it is located by Newton iteration on the
//! reduced return map rather than by forward or reverse relaxation.

use crate::error::{Error, Result};
use crate::hopf;
use crate::linalg::{self, CVec4, Matrix4, Vec4};
use crate::model::{ModelParams, State, ToleranceSettings};
use crate::stability::{delta_at_a4, delta_scale};
use num_complex::Complex64;

/// Autonomous vector field with an analytic Jacobian; the variational flow
/// needs both.
pub trait VectorField {
    fn eval(&self, x: &Vec4) -> Result<Vec4>;
    fn jacobian(&self, x: &Vec4) -> Matrix4;
}

/// The host-parasitoid model as a [`VectorField`].
pub struct ModelField<'a>(pub &'a ModelParams);

impl VectorField for ModelField<'_> {
    fn eval(&self, x: &Vec4) -> Result<Vec4> {
        Ok(self.0.vector_field(&State::from_array(x))?.to_array())
    }

    fn jacobian(&self, x: &Vec4) -> Matrix4 {
        self.0.jacobian(&State::from_array(x))
    }
}

/// Integrator statistics attached to every trajectory.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_error_estimate: f64,
}

/// Time-ordered samples of one integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<(f64, State)>,
    pub stats: IntegratorStats,
}

/// Stability verdict for a computed periodic orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitVerdict {
    /// Exactly one multiplier outside the unit circle.
    UnstableSaddleCycle,
    /// All nontrivial multipliers strictly inside.
    Stable,
    Indeterminate,
}

/// A closed orbit anchored on the Poincare section.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub anchor: State,
    pub period: f64,
    pub multipliers: [Complex64; 4],
    pub verdict: OrbitVerdict,
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights (final row of `A`, FSAL) minus the embedded
/// fourth-order weights.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince step from `(t, y)` with `f0 = f(y)` already known.
/// Returns `(y_next, f_next, scaled_error)`.
fn dp_step<const N: usize, F>(
    f: &F,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<([f64; N], [f64; N], f64)>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    let mut k: [[f64; N]; 7] = [[0.0; N]; 7];
    k[0] = *f0;
    for stage in 0..6 {
        let mut arg = *y;
        for (j, kj) in k.iter().enumerate().take(stage + 1) {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..N {
                    arg[i] += h * a * kj[i];
                }
            }
        }
        k[stage + 1] = f(&arg)?;
    }
    // the 6th stage argument IS the 5th-order solution (FSAL)
    let mut y1 = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        let b = A[5][j];
        if b != 0.0 {
            for i in 0..N {
                y1[i] += h * b * kj[i];
            }
        }
    }
    let f1 = k[6];

    let mut err_sq = 0.0;
    for i in 0..N {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += ERR[j] * kj[i];
        }
        e *= h;
        let sc = atol + rtol * y[i].abs().max(y1[i].abs());
        err_sq += (e / sc) * (e / sc);
    }
    Ok((y1, f1, (err_sq / N as f64).sqrt()))
}

/// Record of one accepted step, exposing cubic Hermite dense output.
pub struct StepRecord<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> StepRecord<N> {
    pub fn hermite(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y0[i]
                + h10 * h * self.f0[i]
                + h01 * self.y1[i]
                + h11 * h * self.f1[i];
        }
        out
    }
}

/// What the step callback wants next.
pub enum StepOutcome {
    Continue,
    /// Stop at the given interior time; the state there comes from the
    /// dense output of the current step.
    StopAt(f64),
}

struct StepControl {
    rtol: f64,
    atol: f64,
    h_max: f64,
    max_steps: usize,
}

/// Adaptive propagation with a per-step callback; the engine under both the
/// public integrator and the return-map machinery.
fn propagate<const N: usize, F, C>(
    f: &F,
    y0: [f64; N],
    t_end: f64,
    ctl: &StepControl,
    mut on_step: C,
) -> Result<(f64, [f64; N], IntegratorStats)>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
    C: FnMut(&StepRecord<N>) -> StepOutcome,
{
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("bad integration span {t_end}")));
    }
    let mut stats = IntegratorStats::default();
    let mut t = 0.0;
    let mut y = y0;
    let mut fy = f(&y)?;

    // initial step from the scaled sizes of y and f
    let scale = |v: &[f64; N], w: &[f64; N]| -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = ctl.atol + ctl.rtol * w[i].abs();
            s += (v[i] / sc) * (v[i] / sc);
        }
        (s / N as f64).sqrt()
    };
    let d0 = scale(&y, &y);
    let d1 = scale(&fy, &y);
    let mut h = if d0 > 1e-5 && d1 > 1e-5 {
        0.01 * d0 / d1
    } else {
        1e-6 * t_end
    };
    h = h.min(ctl.h_max).min(t_end);

    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    const BETA: f64 = 0.04;
    const EXPO: f64 = 0.2 - BETA * 0.75;
    const SAFE: f64 = 0.9;

    while t < t_end {
        if stats.steps + stats.rejected > ctl.max_steps {
            return Err(Error::IntegrationFailure {
                reason: format!("step budget {} exhausted", ctl.max_steps),
                t,
            });
        }
        h = h.min(t_end - t).min(ctl.h_max);
        if h < 1e-14 * t_end.max(1.0) {
            return Err(Error::IntegrationFailure {
                reason: "step size underflow (stiffness or blow-up)".into(),
                t,
            });
        }
        let (y1, f1, err) = dp_step(f, &y, &fy, h, ctl.rtol, ctl.atol)?;
        if !err.is_finite() {
            return Err(Error::IntegrationFailure {
                reason: "non-finite error estimate".into(),
                t,
            });
        }

        if err <= 1.0 {
            stats.steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            let record = StepRecord {
                t0: t,
                t1: t + h,
                y0: y,
                y1,
                f0: fy,
                f1,
            };
            match on_step(&record) {
                StepOutcome::Continue => {}
                StepOutcome::StopAt(t_stop) => {
                    let y_stop = record.hermite(t_stop);
                    return Ok((t_stop, y_stop, stats));
                }
            }
            t += h;
            y = y1;
            fy = f1;

            let fac11 = err.max(1e-10).powf(EXPO);
            let mut fac = fac11 / err_old.powf(BETA);
            fac = (fac / SAFE).clamp(0.2, 10.0);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            h = h_new;
            err_old = err.max(1e-4);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            let fac11 = err.powf(EXPO);
            h /= (fac11 / SAFE).min(10.0);
            rejected_last = true;
        }
    }
    Ok((t, y, stats))
}

/// Integrate the model from `x0` for `t_end` time units with local error
/// tolerance `tol`, sampling every accepted step.
pub fn integrate(p: &ModelParams, x0: &State, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be > 0")));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    let field = ModelField(p);
    let ctl = StepControl {
        rtol: tol,
        atol: tol,
        h_max: f64::INFINITY,
        max_steps: 4_000_000,
    };
    let mut samples = vec![(0.0, *x0)];
    let eval = |x: &Vec4| field.eval(x);
    let (t_final, y_final, stats) = propagate(&eval, x0.to_array(), t_end, &ctl, |rec| {
        samples.push((rec.t1, State::from_array(&rec.y1)));
        StepOutcome::Continue
    })?;
    if let Some(last) = samples.last_mut() {
        *last = (t_final, State::from_array(&y_final));
    }
    Ok(Trajectory { samples, stats })
}

// ---------------------------------------------------------------------------
// Poincare section and shooting
// ---------------------------------------------------------------------------

fn dot4(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm4(a: &Vec4) -> f64 {
    dot4(a, a).sqrt()
}

fn axpy(y: &mut Vec4, a: f64, x: &Vec4) {
    for i in 0..4 {
        y[i] += a * x[i];
    }
}

/// Poincare section through `center` with normal `normal`, carrying an
/// orthonormal in-plane basis.
struct Section<'a, F: VectorField> {
    field: &'a F,
    center: Vec4,
    normal: Vec4,
    basis: [Vec4; 3],
    /// Rotation period of the linearisation, used for scheduling.
    t_linear: f64,
    rtol: f64,
    atol: f64,
}

impl<'a, F: VectorField> Section<'a, F> {
    fn new(field: &'a F, center: Vec4, q: &CVec4, omega: f64, tol: f64, scale: f64) -> Result<Self> {
        let mut normal = [q[0].im, q[1].im, q[2].im, q[3].im];
        let n_norm = norm4(&normal);
        if n_norm == 0.0 {
            return Err(Error::Degeneracy("eigenvector has no imaginary part".into()));
        }
        for v in normal.iter_mut() {
            *v /= n_norm;
        }
        // in-plane rotation direction first, coordinate fallbacks after
        let re_q = [q[0].re, q[1].re, q[2].re, q[3].re];
        let mut basis: Vec<Vec4> = Vec::new();
        let mut candidates = vec![re_q];
        candidates.extend([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        for cand in candidates {
            let mut v = cand;
            axpy(&mut v, -dot4(&normal, &cand), &normal);
            for b in &basis {
                let proj = dot4(b, &v);
                axpy(&mut v, -proj, b);
            }
            let n = norm4(&v);
            if n > 1e-8 {
                for x in v.iter_mut() {
                    *x /= n;
                }
                basis.push(v);
            }
            if basis.len() == 3 {
                break;
            }
        }
        if basis.len() != 3 {
            return Err(Error::Degeneracy("section basis construction failed".into()));
        }
        Ok(Section {
            field,
            center,
            normal,
            basis: [basis[0], basis[1], basis[2]],
            t_linear: 2.0 * std::f64::consts::PI / omega,
            rtol: tol,
            atol: tol * scale,
        })
    }

    fn lift(&self, xi: &[f64; 3]) -> Vec4 {
        let mut x = self.center;
        for (c, b) in xi.iter().zip(&self.basis) {
            axpy(&mut x, *c, b);
        }
        x
    }

    fn project(&self, x: &Vec4) -> [f64; 3] {
        let mut d = *x;
        axpy(&mut d, -1.0, &self.center);
        [
            dot4(&d, &self.basis[0]),
            dot4(&d, &self.basis[1]),
            dot4(&d, &self.basis[2]),
        ]
    }

    fn offset(&self, x: &Vec4) -> f64 {
        let mut d = *x;
        axpy(&mut d, -1.0, &self.center);
        dot4(&d, &self.normal)
    }

    /// First return to the section with the same crossing orientation as the
    /// departure. Returns the crossing state and the return time.
    fn first_return(&self, x0: &Vec4) -> Result<(Vec4, f64)> {
        let departure = dot4(&self.normal, &self.field.eval(x0)?);
        if departure == 0.0 {
            return Err(Error::Degeneracy("departure tangent to the section".into()));
        }
        let up = departure > 0.0;
        let t_skip = 0.55 * self.t_linear;
        let t_max = 8.0 * self.t_linear;
        let ctl = StepControl {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.t_linear / 16.0,
            max_steps: 2_000_000,
        };
        let eval = |x: &Vec4| self.field.eval(x);
        let mut crossing: Option<f64> = None;
        let result = propagate(&eval, *x0, t_max, &ctl, |rec| {
            if rec.t1 < t_skip {
                return StepOutcome::Continue;
            }
            let g0 = self.offset(&rec.y0);
            let g1 = self.offset(&rec.y1);
            let oriented = if up { g0 < 0.0 && g1 >= 0.0 } else { g0 > 0.0 && g1 <= 0.0 };
            if !oriented {
                return StepOutcome::Continue;
            }
            // bisection on the Hermite interpolant
            let (mut ta, mut tb) = (rec.t0, rec.t1);
            for _ in 0..80 {
                let tm = 0.5 * (ta + tb);
                let gm = self.offset(&rec.hermite(tm));
                if (gm >= 0.0) == up {
                    tb = tm;
                } else {
                    ta = tm;
                }
            }
            let t_hit = 0.5 * (ta + tb);
            crossing = Some(t_hit);
            StepOutcome::StopAt(t_hit)
        })?;
        match crossing {
            Some(t) => Ok((result.1, t)),
            None => Err(Error::OrbitNotFound {
                reason: format!("no section return within {t_max:.3} time units"),
                history: Vec::new(),
            }),
        }
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = b[i];
        for j in i + 1..3 {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Newton iteration on the reduced 3-dimensional return map, with a line
/// search and a collapse guard against falling into the focus at the
/// section center.
fn newton_on_return_map<F: VectorField>(
    section: &Section<'_, F>,
    xi0: [f64; 3],
    scale: f64,
) -> Result<([f64; 3], f64, Vec<f64>)> {
    let residual = |xi: &[f64; 3]| -> Result<([f64; 3], f64)> {
        let (xr, t) = section.first_return(&section.lift(xi))?;
        let pr = section.project(&xr);
        Ok(([pr[0] - xi[0], pr[1] - xi[1], pr[2] - xi[2]], t))
    };
    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();

    let mut xi = xi0;
    let seed_radius = norm3(&xi0);
    let mut history = Vec::new();
    let (mut res, mut t_ret) = residual(&xi)?;
    for _ in 0..40 {
        let rn = norm3(&res);
        history.push(rn);
        if rn <= 1e-9 * scale {
            return Ok((xi, t_ret, history));
        }
        if norm3(&xi) < 1e-3 * seed_radius {
            return Err(Error::OrbitNotFound {
                reason: "iteration collapsed into the equilibrium".into(),
                history,
            });
        }
        // forward-difference Jacobian of R(xi) - xi
        let h_fd = (1e-6 * norm3(&xi)).max(1e-9 * scale);
        let mut jac = [[0.0f64; 3]; 3];
        for c in 0..3 {
            let mut probe = xi;
            probe[c] += h_fd;
            let (rp, _) = residual(&probe)?;
            for r in 0..3 {
                jac[r][c] = (rp[r] - res[r]) / h_fd;
            }
        }
        let Some(step) = solve3(jac, [-res[0], -res[1], -res[2]]) else {
            return Err(Error::OrbitNotFound {
                reason: "singular return-map Jacobian".into(),
                history,
            });
        };
        // line search: accept the first residual decrease
        let mut lambda = 1.0;
        let mut advanced = false;
        for _ in 0..8 {
            let cand = [
                xi[0] + lambda * step[0],
                xi[1] + lambda * step[1],
                xi[2] + lambda * step[2],
            ];
            match residual(&cand) {
                Ok((rc, tc)) if norm3(&rc) < rn => {
                    xi = cand;
                    res = rc;
                    t_ret = tc;
                    advanced = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !advanced {
            return Err(Error::OrbitNotFound {
                reason: "line search stalled".into(),
                history,
            });
        }
    }
    Err(Error::OrbitNotFound {
        reason: "Newton budget exhausted".into(),
        history,
    })
}

/// Stabilise a seed by iterating the return map with radial renormalisation
/// (contracts the strongly stable directions), then slide the radius to the
/// neutral-drift shell along the converged ray.
fn stabilised_seed<F: VectorField>(
    section: &Section<'_, F>,
    radius: f64,
) -> Result<[f64; 3]> {
    let mut xi = [radius, 0.0, 0.0];
    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    for _ in 0..6 {
        let (xr, _) = section.first_return(&section.lift(&xi))?;
        let p = section.project(&xr);
        let n = norm3(&p);
        if n < 1e-6 * radius {
            return Err(Error::OrbitNotFound {
                reason: "seed spiralled into the equilibrium".into(),
                history: Vec::new(),
            });
        }
        xi = [p[0] * radius / n, p[1] * radius / n, p[2] * radius / n];
    }
    // radial drift sign scan along the converged ray
    let dir = [xi[0] / radius, xi[1] / radius, xi[2] / radius];
    let drift = |r: f64| -> Result<f64> {
        let probe = [r * dir[0], r * dir[1], r * dir[2]];
        let (xr, _) = section.first_return(&section.lift(&probe))?;
        let n = norm3(&section.project(&xr));
        Ok((n / r).ln())
    };
    let r_lo = radius / 8.0;
    let r_hi = radius * 8.0;
    let mut d_lo = drift(r_lo)?;
    let grow = 2f64.powf(0.25);
    let mut bracket = None;
    let mut r = r_lo;
    while r < r_hi {
        let r_next = r * grow;
        let d_next = drift(r_next)?;
        if d_lo == 0.0 || (d_lo < 0.0) != (d_next < 0.0) {
            bracket = Some((r, r_next, d_lo, d_next));
            break;
        }
        d_lo = d_next;
        r = r_next;
    }
    let Some((mut a, mut b, mut da, _db)) = bracket else {
        return Err(Error::OrbitNotFound {
            reason: format!("no neutral-drift radius in [{r_lo:.3e}, {r_hi:.3e}]"),
            history: Vec::new(),
        });
    };
    for _ in 0..30 {
        let m = (a * b).sqrt();
        let dm = drift(m)?;
        if (dm < 0.0) == (da < 0.0) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    let r_star = (a * b).sqrt();
    Ok([r_star * dir[0], r_star * dir[1], r_star * dir[2]])
}

/// Generic cycle search used by both the model front end and the synthetic
/// test systems: section through `center` normal to `Im q`, stabilised seed,
/// then Newton on the reduced return map.
pub fn find_cycle<F: VectorField>(
    field: &F,
    center: &Vec4,
    q: &CVec4,
    omega: f64,
    hint_radius: f64,
    tol: f64,
) -> Result<(Vec4, f64)> {
    let scale = norm4(center).max(1.0);
    let section = Section::new(field, *center, q, omega, tol, scale)?;
    let mut last_err = None;
    for factor in [1.0, 0.5, 2.0, 0.25, 4.0, 8.0] {
        let attempt = stabilised_seed(&section, hint_radius * factor)
            .and_then(|seed| newton_on_return_map(&section, seed, scale));
        match attempt {
            Ok((xi, period, _)) => {
                let anchor = section.lift(&xi);
                return Ok((anchor, period));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::OrbitNotFound {
        reason: "no shooting attempt converged".into(),
        history: Vec::new(),
    }))
}

/// Monodromy matrix: the variational flow over one period starting from
/// `anchor` with the identity.
pub fn monodromy<F: VectorField>(
    field: &F,
    anchor: &Vec4,
    period: f64,
    tol: f64,
) -> Result<(Matrix4, Vec4)> {
    let mut y0 = [0.0f64; 20];
    y0[..4].copy_from_slice(anchor);
    for i in 0..4 {
        y0[4 + 5 * i] = 1.0; // identity in row-major 4x4 block
    }
    let rhs = |y: &[f64; 20]| -> Result<[f64; 20]> {
        let x = [y[0], y[1], y[2], y[3]];
        let fx = field.eval(&x)?;
        let j = field.jacobian(&x);
        let mut out = [0.0f64; 20];
        out[..4].copy_from_slice(&fx);
        for i in 0..4 {
            for jj in 0..4 {
                let mut s = 0.0;
                for kk in 0..4 {
                    s += j.0[i][kk] * y[4 + 4 * kk + jj];
                }
                out[4 + 4 * i + jj] = s;
            }
        }
        Ok(out)
    };
    let ctl = StepControl {
        rtol: tol,
        atol: tol * norm4(anchor).max(1.0),
        h_max: period / 16.0,
        max_steps: 2_000_000,
    };
    let (_, y_end, _) = propagate(&rhs, y0, period, &ctl, |_| StepOutcome::Continue)?;
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = y_end[4 + 4 * i + j];
        }
    }
    let x_end = [y_end[0], y_end[1], y_end[2], y_end[3]];
    Ok((m, x_end))
}

fn verdict_from_multipliers(multipliers: &[Complex64; 4]) -> OrbitVerdict {
    let unstable = multipliers.iter().filter(|m| m.norm() > 1.0 + 1e-3).count();
    let trivial_ok = multipliers
        .iter()
        .any(|m| (m - Complex64::new(1.0, 0.0)).norm() <= 1e-3);
    if !trivial_ok {
        return OrbitVerdict::Indeterminate;
    }
    match unstable {
        1 => OrbitVerdict::UnstableSaddleCycle,
        0 => {
            let contracting = multipliers
                .iter()
                .filter(|m| m.norm() < 1.0 - 1e-3)
                .count();
            if contracting == 3 {
                OrbitVerdict::Stable
            } else {
                OrbitVerdict::Indeterminate
            }
        }
        _ => OrbitVerdict::Indeterminate,
    }
}

/// Floquet multipliers of a converged orbit of the model, via the
/// monodromy of the variational equations.
pub fn floquet_multipliers(p: &ModelParams, orbit: &PeriodicOrbit) -> Result<[Complex64; 4]> {
    if !(orbit.period > 0.0) {
        return Err(Error::InvalidInput(format!(
            "period {} must be positive",
            orbit.period
        )));
    }
    let field = ModelField(p);
    let anchor = orbit.anchor.to_array();
    // an equilibrium is not an orbit
    let speed = norm4(&field.eval(&anchor)?);
    let scale = norm4(&anchor).max(1.0);
    if speed <= 1e-9 * scale {
        return Err(Error::Domain(
            "anchor is an equilibrium, not a periodic orbit".into(),
        ));
    }
    let tol = 1e-12;
    let (m, x_end) = monodromy(&field, &anchor, orbit.period, tol)?;
    let mut closure = x_end;
    axpy(&mut closure, -1.0, &anchor);
    if norm4(&closure) > 1e-6 * scale {
        return Err(Error::Domain(format!(
            "orbit does not close: |x(T) - x(0)| = {:.3e}",
            norm4(&closure)
        )));
    }
    let multipliers = linalg::eigenvalues(&m)?.eigenvalues;
    let trivial_dev = multipliers
        .iter()
        .map(|mu| (mu - Complex64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if trivial_dev > 1e-2 {
        return Err(Error::IterationFailure(format!(
            "trivial multiplier off by {trivial_dev:.3e}; tighten the integrator tolerance"
        )));
    }
    Ok(multipliers)
}

/// Locate the periodic orbit bifurcating from the coexistence equilibrium
/// near the Hopf variety, on the stable side.
///
/// The Poincare section passes through the equilibrium with normal `Im q`;
/// the initial guess sits at `hint_radius` along `Re q`, defaulting to the
/// normal-form amplitude estimate `sqrt(-gamma / l1)`.
pub fn find_periodic_orbit(
    p: &ModelParams,
    hint_radius: Option<f64>,
    tol: &ToleranceSettings,
) -> Result<PeriodicOrbit> {
    let delta = delta_at_a4(p)?;
    if delta <= 0.0 {
        return Err(Error::Domain(format!(
            "parameters lie on the unstable side of the Hopf variety (delta = {delta:.3e}); \
             the bifurcating cycle exists on the stable side"
        )));
    }
    let eq = p.equilibria()?;
    let a4 = eq.a4.to_array();
    let j = p.jacobian(&eq.a4);
    let pair = linalg::eigenvalues(&j)?.leading_complex();
    if pair.im <= 0.0 {
        return Err(Error::Degeneracy("no oscillatory pair at the equilibrium".into()));
    }
    let gamma = pair.re;
    if gamma >= -1e-12 {
        return Err(Error::Domain(format!(
            "critical pair is not strictly stable (Re = {gamma:.3e}); too close to the variety"
        )));
    }
    let eigen = linalg::eigenpair_at(&j, pair, None)?;

    let radius = match hint_radius {
        Some(r) if r > 0.0 => r,
        Some(r) => {
            return Err(Error::InvalidInput(format!(
                "hint radius {r} must be positive"
            )))
        }
        None => {
            // widen the variety band to where we actually stand, then take
            // the normal-form prediction
            let band = ToleranceSettings {
                on_sigma_rel: 10.0 * delta.abs() / delta_scale(p)?,
                ..*tol
            };
            let report = hopf::lyapunov_l1(p, None, &band)?;
            if report.l1 <= 0.0 {
                return Err(Error::Degeneracy(
                    "normal-form radius undefined: l1 <= 0 on this side".into(),
                ));
            }
            (-gamma / report.l1).sqrt()
        }
    };

    let field = ModelField(p);
    let (anchor, period) = find_cycle(&field, &a4, &eigen.right, pair.im, radius, tol.integrator_tol)?;
    let mut orbit = PeriodicOrbit {
        anchor: State::from_array(&anchor),
        period,
        multipliers: [Complex64::new(0.0, 0.0); 4],
        verdict: OrbitVerdict::Indeterminate,
    };
    orbit.multipliers = floquet_multipliers(p, &orbit)?;
    orbit.verdict = verdict_from_multipliers(&orbit.multipliers);
    Ok(orbit)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exponential decay in every component; closed-form flow for oracles.
    struct LinearDecay;

    impl VectorField for LinearDecay {
        fn eval(&self, x: &Vec4) -> Result<Vec4> {
            Ok([-x[0], -x[1], -x[2], -x[3]])
        }

        fn jacobian(&self, _x: &Vec4) -> Matrix4 {
            let mut m = Matrix4::zeros();
            for i in 0..4 {
                m.0[i][i] = -1.0;
            }
            m
        }
    }

    /// Planar oscillator with planted cubic plus two decoupled stable
    /// directions. With `z = x1 + i x2`:
    /// `z' = (gamma + i omega) z + (cr + i ci) z |z|^2`.
    /// For `gamma < 0 < cr` it carries an unstable cycle of radius
    /// `sqrt(-gamma/cr)` and period `2 pi / (omega + ci R^2)` with
    /// multipliers `{1, exp(-2 gamma T), exp(m3 T), exp(m4 T)}`.
    struct PlantedCycle {
        gamma: f64,
        omega: f64,
        cr: f64,
        ci: f64,
        m3: f64,
        m4: f64,
    }

    impl PlantedCycle {
        fn radius(&self) -> f64 {
            (-self.gamma / self.cr).sqrt()
        }

        fn period(&self) -> f64 {
            let r2 = -self.gamma / self.cr;
            2.0 * std::f64::consts::PI / (self.omega + self.ci * r2)
        }
    }

    impl VectorField for PlantedCycle {
        fn eval(&self, x: &Vec4) -> Result<Vec4> {
            let (u, v) = (x[0], x[1]);
            let r2 = u * u + v * v;
            Ok([
                self.gamma * u - self.omega * v + (self.cr * u - self.ci * v) * r2,
                self.omega * u + self.gamma * v + (self.ci * u + self.cr * v) * r2,
                self.m3 * x[2],
                self.m4 * x[3],
            ])
        }

        fn jacobian(&self, x: &Vec4) -> Matrix4 {
            let (u, v) = (x[0], x[1]);
            let r2 = u * u + v * v;
            Matrix4::from_rows([
                [
                    self.gamma + self.cr * r2 + (self.cr * u - self.ci * v) * 2.0 * u,
                    -self.omega - self.ci * r2 + (self.cr * u - self.ci * v) * 2.0 * v,
                    0.0,
                    0.0,
                ],
                [
                    self.omega + self.ci * r2 + (self.ci * u + self.cr * v) * 2.0 * u,
                    self.gamma + self.cr * r2 + (self.ci * u + self.cr * v) * 2.0 * v,
                    0.0,
                    0.0,
                ],
                [0.0, 0.0, self.m3, 0.0],
                [0.0, 0.0, 0.0, self.m4],
            ])
        }
    }

    fn rotation_q() -> CVec4 {
        [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]
    }

    #[test]
    fn single_step_is_fifth_order() {
        // local error of one step on x' = -x scales as h^6
        let f = |x: &[f64; 1]| -> Result<[f64; 1]> { Ok([-x[0]]) };
        let y = [1.0f64];
        let f0 = f(&y).unwrap();
        let exact = |h: f64| (-h).exp();
        let err_at = |h: f64| {
            let (y1, _, _) = dp_step(&f, &y, &f0, h, 1e-3, 1e-3).unwrap();
            (y1[0] - exact(h)).abs()
        };
        let e1 = err_at(0.2);
        let e2 = err_at(0.1);
        let ratio = e1 / e2;
        assert!(
            (40.0..110.0).contains(&ratio),
            "order ratio {ratio} (e1 = {e1:.3e}, e2 = {e2:.3e})"
        );
    }

    #[test]
    fn linear_decay_matches_closed_form() {
        let field = LinearDecay;
        let ctl = StepControl {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 100_000,
        };
        let eval = |x: &Vec4| field.eval(x);
        let (_, y, _) = propagate(&eval, [1.0, 2.0, -1.0, 0.5], 5.0, &ctl, |_| {
            StepOutcome::Continue
        })
        .unwrap();
        let decay = (-5.0f64).exp();
        for (got, want) in y.iter().zip([decay, 2.0 * decay, -decay, 0.5 * decay]) {
            assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let field = LinearDecay;
        let eval = |x: &Vec4| field.eval(x);
        let run = |tol: f64| {
            let ctl = StepControl {
                rtol: tol,
                atol: tol,
                h_max: f64::INFINITY,
                max_steps: 1_000_000,
            };
            let (_, y, _) = propagate(&eval, [1.0, 0.0, 0.0, 0.0], 5.0, &ctl, |_| {
                StepOutcome::Continue
            })
            .unwrap();
            (y[0] - (-5.0f64).exp()).abs()
        };
        let coarse = run(1e-6);
        let fine = run(1e-10);
        assert!(
            fine < coarse / 30.0,
            "coarse {coarse:.3e} vs fine {fine:.3e}"
        );
    }

    #[test]
    fn equilibrium_is_invariant_under_integration() {
        let p = ModelParams::reference(0.003315398963782266, 0.001);
        let a4 = p.equilibria().unwrap().a4;
        let traj = integrate(&p, &a4, 100.0, 1e-10).unwrap();
        let end = traj.samples.last().unwrap().1;
        let drift = State::new(end.p - a4.p, end.m - a4.m, end.l - a4.l, end.g - a4.g);
        assert!(
            drift.norm() <= 1e-6 * a4.norm(),
            "drift {} after {} steps",
            drift.norm(),
            traj.stats.steps
        );
    }

    #[test]
    fn perturbation_in_the_basin_returns_to_equilibrium() {
        // well inside the stable region, far from the variety
        let p = ModelParams::reference(0.02, 1e-4);
        let a4 = p.equilibria().unwrap().a4;
        let x0 = State::new(a4.p * 1.001, a4.m, a4.l, a4.g * 0.999);
        let traj = integrate(&p, &x0, 400.0, 1e-9).unwrap();
        let end = traj.samples.last().unwrap().1;
        let dist = State::new(end.p - a4.p, end.m - a4.m, end.l - a4.l, end.g - a4.g);
        assert!(dist.norm() <= 1e-4 * a4.norm(), "distance {}", dist.norm());
    }

    #[test]
    fn trajectory_time_is_strictly_increasing() {
        let p = ModelParams::reference(0.001, 0.0005);
        let x0 = State::new(1000.0, 2000.0, 50.0, 40.0);
        let traj = integrate(&p, &x0, 10.0, 1e-8).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(traj.samples.iter().all(|(_, s)| s.is_finite()));
        assert!((traj.samples.last().unwrap().0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_rejects_bad_inputs() {
        let p = ModelParams::reference(0.001, 0.0005);
        assert!(integrate(&p, &State::ZERO, 10.0, 0.0).is_err());
        assert!(integrate(&p, &State::new(f64::NAN, 0.0, 0.0, 0.0), 1.0, 1e-8).is_err());
    }

    #[test]
    fn planted_cycle_is_recovered_exactly() {
        let sys = PlantedCycle {
            gamma: -0.02,
            omega: 2.0,
            cr: 0.5,
            ci: 0.0,
            m3: -0.6,
            m4: -1.5,
        };
        let r_exact = sys.radius();
        let t_exact = sys.period();
        // deliberately poor hint: 2.7x the true radius
        let (anchor, period) =
            find_cycle(&sys, &[0.0; 4], &rotation_q(), sys.omega, 2.7 * r_exact, 1e-12).unwrap();
        let r_got = (anchor[0] * anchor[0] + anchor[1] * anchor[1]).sqrt();
        assert!(
            (r_got - r_exact).abs() <= 1e-3 * r_exact,
            "radius {r_got} vs {r_exact}"
        );
        assert!(
            (period - t_exact).abs() <= 1e-6 * t_exact,
            "period {period} vs {t_exact}"
        );
        assert!(anchor[2].abs() < 1e-9 && anchor[3].abs() < 1e-9);

        let (m, _) = monodromy(&sys, &anchor, period, 1e-12).unwrap();
        let mus = linalg::eigenvalues(&m).unwrap().eigenvalues;
        let expect = [
            1.0,
            (-2.0 * sys.gamma * t_exact).exp(),
            (sys.m3 * t_exact).exp(),
            (sys.m4 * t_exact).exp(),
        ];
        for want in expect {
            let hit = mus
                .iter()
                .map(|mu| (mu - Complex64::new(want, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(hit <= 1e-3 * want.max(1e-3), "missing multiplier {want}");
        }
        let verdict = verdict_from_multipliers(&mus);
        assert_eq!(verdict, OrbitVerdict::UnstableSaddleCycle);
    }

    #[test]
    fn planted_cycle_with_frequency_shift() {
        // nonzero ci bends the period away from 2 pi / omega
        let sys = PlantedCycle {
            gamma: -0.05,
            omega: 1.3,
            cr: 0.8,
            ci: 0.4,
            m3: -0.7,
            m4: -2.2,
        };
        let (anchor, period) =
            find_cycle(&sys, &[0.0; 4], &rotation_q(), sys.omega, sys.radius(), 1e-12).unwrap();
        let r_got = (anchor[0] * anchor[0] + anchor[1] * anchor[1]).sqrt();
        assert!((r_got - sys.radius()).abs() <= 1e-3 * sys.radius());
        assert!((period - sys.period()).abs() <= 1e-6 * sys.period());
    }

    #[test]
    fn stable_cycle_verdict() {
        // supercritical side: gamma > 0 with cr < 0 carries a stable cycle
        let sys = PlantedCycle {
            gamma: 0.05,
            omega: 1.5,
            cr: -0.6,
            ci: 0.0,
            m3: -0.8,
            m4: -1.9,
        };
        let r = (-sys.gamma / sys.cr).sqrt();
        let (anchor, period) =
            find_cycle(&sys, &[0.0; 4], &rotation_q(), sys.omega, r, 1e-12).unwrap();
        let (m, _) = monodromy(&sys, &anchor, period, 1e-12).unwrap();
        let mus = linalg::eigenvalues(&m).unwrap().eigenvalues;
        assert_eq!(verdict_from_multipliers(&mus), OrbitVerdict::Stable);
    }

    #[test]
    fn floquet_rejects_equilibria_and_bad_periods() {
        let p = ModelParams::reference(0.003, 0.001);
        let a4 = p.equilibria().unwrap().a4;
        let fake = PeriodicOrbit {
            anchor: a4,
            period: 2.0,
            multipliers: [Complex64::new(0.0, 0.0); 4],
            verdict: OrbitVerdict::Indeterminate,
        };
        assert!(matches!(
            floquet_multipliers(&p, &fake),
            Err(Error::Domain(_))
        ));
        let nonsense = PeriodicOrbit {
            period: -1.0,
            ..fake
        };
        assert!(floquet_multipliers(&p, &nonsense).is_err());
    }

    #[test]
    fn orbit_search_rejects_the_unstable_side() {
        let p = ModelParams::reference(0.001, 0.001); // delta < 0 here
        let tol = ToleranceSettings::default();
        assert!(matches!(
            find_periodic_orbit(&p, None, &tol),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn orbit_search_rejects_the_variety_point_itself() {
        let p = ModelParams::reference(0.003315398963782266, 0.001);
        let tol = ToleranceSettings::default();
        // gamma is at round-off level here: no cycle radius to aim for
        assert!(find_periodic_orbit(&p, None, &tol).is_err());
    }
}
