//! Dense 4x4 linear algebra over real and complex scalars.
//!
//! Everything here is specialised to the fixed dimension of the model:
//! characteristic polynomials by the Faddeev-LeVerrier recursion, eigenvalues
//! by shifted QR on the companion matrix followed by Newton polishing of each
//! root on the quartic, eigenvectors by inverse iteration, and complex LU
//! solves for the shifted systems used by the Lyapunov computation.

use crate::error::{Error, Result};
pub use num_complex::Complex64;

pub type Vec4 = [f64; 4];
pub type CVec4 = [Complex64; 4];

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Real 4x4 matrix in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix4(pub [[f64; 4]; 4]);

impl Matrix4 {
    pub fn zeros() -> Self {
        Matrix4([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        Matrix4(rows)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn mul_vec(&self, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (0..4).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    pub fn mul_cvec(&self, v: &CVec4) -> CVec4 {
        let mut out = [C_ZERO; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += v[j] * self.0[i][j];
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Matrix4) -> Matrix4 {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..4)
            .map(|i| (0..4).map(|j| self.0[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn determinant(&self) -> f64 {
        // LU with partial pivoting; 4x4 only.
        let mut a = self.0;
        let mut det = 1.0;
        for col in 0..4 {
            let mut piv = col;
            for r in col + 1..4 {
                if a[r][col].abs() > a[piv][col].abs() {
                    piv = r;
                }
            }
            if a[piv][col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        det
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

/// Coefficients of `a0 L^4 + a1 L^3 + a2 L^2 + a3 L + a4`, with `a0 = 1`
/// for characteristic polynomials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuarticCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl QuarticCoefficients {
    pub fn monic(a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        QuarticCoefficients {
            a0: 1.0,
            a1,
            a2,
            a3,
            a4,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (((self.a0 * z + self.a1) * z + self.a2) * z + self.a3) * z + self.a4
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        ((4.0 * self.a0 * z + 3.0 * self.a1) * z + 2.0 * self.a2) * z + self.a3
    }

    /// Magnitude of the polynomial evaluated with every term taken in
    /// absolute value; the natural scale for backward-error checks.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.a0.abs() * r.powi(4)
            + self.a1.abs() * r.powi(3)
            + self.a2.abs() * r * r
            + self.a3.abs() * r
            + self.a4.abs()
            + f64::MIN_POSITIVE
    }

    pub fn is_finite(&self) -> bool {
        [self.a0, self.a1, self.a2, self.a3, self.a4]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Four eigenvalues sorted by descending real part, then descending
/// imaginary part; conjugate-closed for real input matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: [Complex64; 4],
}

impl Spectrum {
    pub fn from_unsorted(mut v: [Complex64; 4]) -> Self {
        v.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap()
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        Spectrum { eigenvalues: v }
    }

    /// Eigenvalue with the largest imaginary part (the oscillatory branch).
    pub fn leading_complex(&self) -> Complex64 {
        *self
            .eigenvalues
            .iter()
            .max_by(|a, b| a.im.partial_cmp(&b.im).unwrap())
            .unwrap()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::MIN, f64::max)
    }
}

/// Right/left eigenvector pair normalised so that `<p, q> = sum conj(p_i) q_i = 1`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub right: CVec4,
    pub left: CVec4,
}

/// `sum_i conj(a_i) b_i`, the inner product convention used throughout.
pub fn inner(a: &CVec4, b: &CVec4) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cvec_norm(v: &CVec4) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn cvec_conj(v: &CVec4) -> CVec4 {
    [v[0].conj(), v[1].conj(), v[2].conj(), v[3].conj()]
}

pub fn cvec_scale(v: &CVec4, s: Complex64) -> CVec4 {
    [v[0] * s, v[1] * s, v[2] * s, v[3] * s]
}

pub fn cvec_add(a: &CVec4, b: &CVec4) -> CVec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn cvec_sub(a: &CVec4, b: &CVec4) -> CVec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn vec_to_cvec(v: &Vec4) -> CVec4 {
    [v[0].into(), v[1].into(), v[2].into(), v[3].into()]
}

/// Coefficients of `det(m - L I)` with the sign convention `a0 = +1`
/// (identical to `det(L I - m)` in dimension four), via Faddeev-LeVerrier.
pub fn char_poly(m: &Matrix4) -> Result<QuarticCoefficients> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let mut mk = *m;
    let c1 = -mk.trace();
    let mut coeffs = [c1, 0.0, 0.0, 0.0];
    for k in 2..=4 {
        let mut shifted = mk;
        for i in 0..4 {
            shifted.0[i][i] += coeffs[k - 2];
        }
        mk = m.mul_mat(&shifted);
        coeffs[k - 1] = -mk.trace() / k as f64;
    }
    Ok(QuarticCoefficients::monic(
        coeffs[0], coeffs[1], coeffs[2], coeffs[3],
    ))
}

// ---------------------------------------------------------------------------
// complex 4x4 LU
// ---------------------------------------------------------------------------

/// LU factorisation with partial pivoting of a complex 4x4 matrix.
struct ComplexLu {
    lu: [[Complex64; 4]; 4],
    perm: [usize; 4],
    det: Complex64,
    /// Substitute for (near-)zero pivots; keeps inverse iteration usable on
    /// an exactly singular shift without overflowing.
    pivot_floor: f64,
}

impl ComplexLu {
    fn factor(a: [[Complex64; 4]; 4]) -> Self {
        let scale = a
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(f64::MIN_POSITIVE, f64::max);
        let mut lu = a;
        let mut perm = [0usize, 1, 2, 3];
        let mut det = C_ONE;
        for col in 0..4 {
            let mut piv = col;
            for r in col + 1..4 {
                if lu[r][col].norm() > lu[piv][col].norm() {
                    piv = r;
                }
            }
            if piv != col {
                lu.swap(piv, col);
                perm.swap(piv, col);
                det = -det;
            }
            let d = lu[col][col];
            det *= d;
            if d.norm() == 0.0 {
                continue;
            }
            for r in col + 1..4 {
                let f = lu[r][col] / d;
                lu[r][col] = f;
                for c in col + 1..4 {
                    lu[r][c] -= f * lu[col][c];
                }
            }
        }
        ComplexLu {
            lu,
            perm,
            det,
            pivot_floor: 1e-40 * scale,
        }
    }

    fn solve(&self, rhs: &CVec4) -> CVec4 {
        let mut y = [C_ZERO; 4];
        for i in 0..4 {
            let mut s = rhs[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s;
        }
        let mut x = [C_ZERO; 4];
        for i in (0..4).rev() {
            let mut s = y[i];
            for j in i + 1..4 {
                s -= self.lu[i][j] * x[j];
            }
            let d = self.lu[i][i];
            x[i] = if d.norm() < self.pivot_floor {
                s / self.pivot_floor
            } else {
                s / d
            };
        }
        x
    }
}

fn shifted_matrix(m: &Matrix4, shift: Complex64) -> [[Complex64; 4]; 4] {
    // shift * I - m
    let mut a = [[C_ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = Complex64::new(-m.0[i][j], 0.0);
        }
        a[i][i] += shift;
    }
    a
}

/// Solve `(shift I - m) x = rhs`. Fails if the shift is an eigenvalue of `m`
/// at the working tolerance; the error names the offending eigenvalue.
pub fn solve_shifted(m: &Matrix4, shift: Complex64, rhs: &CVec4) -> Result<CVec4> {
    let lu = ComplexLu::factor(shifted_matrix(m, shift));
    let scale = m.norm_inf().max(shift.norm()).max(1.0);
    if lu.det.norm() < 1e-12 * scale.powi(4) {
        let spec = eigenvalues(m)?;
        let nearest = spec
            .eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - shift)
                    .norm()
                    .partial_cmp(&(b - shift).norm())
                    .unwrap()
            })
            .unwrap();
        return Err(Error::SingularShift {
            shift,
            eigenvalue: nearest,
            distance: (nearest - shift).norm(),
        });
    }
    Ok(lu.solve(rhs))
}

// ---------------------------------------------------------------------------
// eigenvalues: companion matrix + shifted QR + Newton polish
// ---------------------------------------------------------------------------

/// Roots of a monic quartic by complex QR iteration on its companion matrix,
/// each root polished by Newton on the polynomial. Deterministic.
pub fn quartic_roots(p: &QuarticCoefficients) -> Result<[Complex64; 4]> {
    if !p.is_finite() {
        return Err(Error::InvalidInput("non-finite quartic coefficient".into()));
    }
    if p.a0 == 0.0 {
        return Err(Error::Domain("leading coefficient must be nonzero".into()));
    }
    let c = [p.a1 / p.a0, p.a2 / p.a0, p.a3 / p.a0, p.a4 / p.a0];
    let monic = QuarticCoefficients::monic(c[0], c[1], c[2], c[3]);

    // companion matrix (upper Hessenberg)
    let mut h = [[C_ZERO; 4]; 4];
    for j in 0..4 {
        h[0][j] = Complex64::new(-c[j], 0.0);
    }
    h[1][0] = C_ONE;
    h[2][1] = C_ONE;
    h[3][2] = C_ONE;

    let mut roots = [C_ZERO; 4];
    let mut found = 0usize;
    let mut active = 4usize; // rows 0..active are still iterating
    let mut sweeps = 0usize;
    let eps = f64::EPSILON;
    while active > 1 {
        sweeps += 1;
        if sweeps > 200 {
            return Err(Error::IterationFailure(
                "QR sweeps exceeded budget on companion matrix".into(),
            ));
        }
        // deflation test on the trailing subdiagonal entry
        let m = active - 1;
        let sub = h[m][m - 1].norm();
        if sub <= eps * (h[m - 1][m - 1].norm() + h[m][m].norm() + f64::MIN_POSITIVE) {
            roots[found] = h[m][m];
            found += 1;
            active -= 1;
            continue;
        }
        // first couple of sweeps unshifted, then Wilkinson shift from the
        // trailing 2x2 block
        let shift = if sweeps <= 2 {
            C_ZERO
        } else {
            wilkinson_shift(h[m - 1][m - 1], h[m - 1][m], h[m][m - 1], h[m][m])
        };
        qr_hessenberg_step(&mut h, active, shift);
    }
    if active == 1 {
        roots[found] = h[0][0];
        found += 1;
    }
    debug_assert_eq!(found, 4);

    // Newton polish each root on the quartic
    for r in roots.iter_mut() {
        *r = polish_root(&monic, *r)?;
    }

    Ok(roots)
}

/// Eigenvalue of the trailing 2x2 block closest to its lower-right entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit QR step `H <- R Q + shift I` on the leading `n x n`
/// Hessenberg block, using Givens rotations.
fn qr_hessenberg_step(h: &mut [[Complex64; 4]; 4], n: usize, shift: Complex64) {
    for i in 0..n {
        h[i][i] -= shift;
    }
    let mut rotations = [(1.0f64, C_ZERO); 3];
    for k in 0..n - 1 {
        let (c, s) = givens(h[k][k], h[k + 1][k]);
        rotations[k] = (c, s);
        for j in k..n {
            let t1 = h[k][j];
            let t2 = h[k + 1][j];
            h[k][j] = c * t1 + s * t2;
            h[k + 1][j] = -s.conj() * t1 + c * t2;
        }
    }
    for (k, &(c, s)) in rotations.iter().enumerate().take(n - 1) {
        for i in 0..(k + 2).min(n) {
            let t1 = h[i][k];
            let t2 = h[i][k + 1];
            h[i][k] = c * t1 + s.conj() * t2;
            h[i][k + 1] = -s * t1 + c * t2;
        }
    }
    for i in 0..n {
        h[i][i] += shift;
    }
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with real `c >= 0`
/// chosen so that `G [a, b]^T` has zero second component.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C_ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = a * b.conj() / (na * r);
    (c, s)
}

/// Newton iteration on the quartic, with a backward-error acceptance test.
fn polish_root(p: &QuarticCoefficients, start: Complex64) -> Result<Complex64> {
    let mut z = start;
    let mut best = z;
    let mut best_err = p.eval(z).norm() / p.eval_scale(z);
    for _ in 0..50 {
        let f = p.eval(z);
        let df = p.eval_derivative(z);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        let err = p.eval(z).norm() / p.eval_scale(z);
        if err < best_err {
            best_err = err;
            best = z;
        }
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    // near-multiple roots cannot do better than ~sqrt(eps) forward error but
    // still have tiny backward error; 1e-10 is far above both
    if best_err > 1e-10 {
        return Err(Error::IterationFailure(format!(
            "root polishing stalled at backward error {best_err:.3e}"
        )));
    }
    Ok(best)
}

/// Enforce conjugate closure on the root set of a real-coefficient quartic.
fn symmetrize_conjugates(roots: &mut [Complex64; 4]) {
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut used = [false; 4];
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| roots[b].im.abs().partial_cmp(&roots[a].im.abs()).unwrap());
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        if roots[i].im.abs() <= 1e-12 * scale {
            roots[i].im = 0.0;
            continue;
        }
        // best conjugate partner among the unused roots
        let partner = (0..4)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (roots[a] - roots[i].conj())
                    .norm()
                    .partial_cmp(&(roots[b] - roots[i].conj()).norm())
                    .unwrap()
            });
        if let Some(j) = partner {
            used[j] = true;
            let avg = (roots[i] + roots[j].conj()) / 2.0;
            roots[i] = avg;
            roots[j] = avg.conj();
        }
    }
}

/// All four eigenvalues of a real 4x4 matrix, conjugate-paired and sorted.
pub fn eigenvalues(m: &Matrix4) -> Result<Spectrum> {
    let p = char_poly(m)?;
    let mut roots = quartic_roots(&p)?;
    symmetrize_conjugates(&mut roots);
    Ok(Spectrum::from_unsorted(roots))
}

// ---------------------------------------------------------------------------
// eigenvectors: inverse iteration
// ---------------------------------------------------------------------------

fn inverse_iteration(a: [[Complex64; 4]; 4], scale: f64) -> Result<CVec4> {
    let lu = ComplexLu::factor(a);
    let mut v = [Complex64::new(0.5, 0.0); 4];
    for _ in 0..2 {
        v = lu.solve(&v);
        let n = cvec_norm(&v);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Degeneracy(
                "inverse iteration produced a non-finite or zero vector".into(),
            ));
        }
        v = cvec_scale(&v, Complex64::new(1.0 / n, 0.0));
    }
    // one extra iteration if the residual is not yet small
    let residual = |v: &CVec4| -> f64 {
        let mut r = [C_ZERO; 4];
        for i in 0..4 {
            for j in 0..4 {
                r[i] += a[i][j] * v[j];
            }
        }
        cvec_norm(&r)
    };
    if residual(&v) > 1e-12 * scale {
        v = lu.solve(&v);
        let n = cvec_norm(&v);
        v = cvec_scale(&v, Complex64::new(1.0 / n, 0.0));
    }
    Ok(v)
}

/// Rotate and scale to unit norm with the first component of magnitude
/// above `floor` made real and positive.
pub fn normalize_default(q: &CVec4) -> CVec4 {
    let n = cvec_norm(q);
    let mut v = cvec_scale(q, Complex64::new(1.0 / n, 0.0));
    let floor = 1e-8;
    if let Some(lead) = v.iter().find(|z| z.norm() > floor).copied() {
        let phase = lead / lead.norm();
        v = cvec_scale(&v, phase.conj());
    }
    v
}

/// Right and left eigenvectors of `m` at a (near-)simple eigenvalue.
///
/// The right vector spans the null space of `m - lambda I`; the left vector
/// satisfies `m^T p = conj(lambda) p`, so that for `lambda = i w0` it obeys
/// `m^T p = -i w0 p`. After the default normalisation the pair satisfies
/// `<p, q> = sum conj(p_i) q_i = 1`. A caller-supplied `q` replaces the
/// default-normalised right vector (the left vector is refit to it).
pub fn eigenpair_at(m: &Matrix4, lambda: Complex64, q_override: Option<&CVec4>) -> Result<EigenPair> {
    let scale = m.norm_inf().max(1.0);
    let q_raw = inverse_iteration(shifted_matrix(m, lambda), scale)?;
    let right = match q_override {
        Some(q) => *q,
        None => normalize_default(&q_raw),
    };
    let mt = m.transpose();
    let p_raw = inverse_iteration(shifted_matrix(&mt, lambda.conj()), scale)?;

    // residual checks on the computed vectors certify that lambda is close
    // to a simple eigenvalue; a caller-supplied right vector only has to be
    // a plausible approximation
    let check = |mat: &Matrix4, l: Complex64, v: &CVec4| -> f64 {
        let mv = mat.mul_cvec(v);
        let lv = cvec_scale(v, l);
        cvec_norm(&cvec_sub(&mv, &lv)) / cvec_norm(v)
    };
    let r_res = check(m, lambda, &normalize_default(&q_raw));
    let l_res = check(&mt, lambda.conj(), &p_raw);
    let band = 1e-8 * scale;
    if r_res > band || l_res > band {
        return Err(Error::Degeneracy(format!(
            "eigenvector residuals {r_res:.3e} / {l_res:.3e} exceed {band:.3e}; \
             eigenvalue may not be simple"
        )));
    }
    if q_override.is_some() {
        let o_res = check(m, lambda, &right);
        if o_res > 1e-2 * scale {
            return Err(Error::Degeneracy(format!(
                "supplied eigenvector has residual {o_res:.3e}, beyond the sanity band {:.3e}",
                1e-2 * scale
            )));
        }
    }

    let s = inner(&p_raw, &right);
    if s.norm() < 1e-12 {
        return Err(Error::Degeneracy(
            "left/right eigenvectors are numerically orthogonal".into(),
        ));
    }
    let left = cvec_scale(&p_raw, (C_ONE / s).conj());
    Ok(EigenPair {
        lambda,
        right,
        left,
    })
}
