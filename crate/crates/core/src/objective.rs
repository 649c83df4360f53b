//! The intensity objective f(z) = (1/4m) sum_j (|<a_j,z>|^2 - y_j)^2, its
//! gradients, and the support-restricted Gauss-Newton machinery.
//!
//! Residuals are F_j(z) = (|<a_j,z>|^2 - y_j) / (2 sqrt m), so ||F||^2 = f(z)
//! and grad f = 2 J^T F with J the Jacobian of F. For a real iterate the
//! Jacobian row is (1/sqrt m)(a_R a_R^T z + a_I a_I^T z)^T = Re(c_j a_j)/sqrt m
//! with c_j = <a_j, z>; for a complex iterate the step is parameterized over
//! the 2|S| real unknowns (Re z_t, Im z_t), giving the row
//! [Re(c_j a_jt) | Im(c_j a_jt)] / sqrt m.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{solve_spd, DenseVector, Field, SmallSymmetricMatrix, SupportSet};
use crate::sensing::{Measurements, SensingEnsemble};

/// Residual vector F(z); satisfies ||F||^2 = f(z).
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
}

impl Residual {
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Jacobian of the residual restricted to a support, stored densely as
/// m x width real rows. width = |S| for a real iterate; for a complex iterate
/// width = 2|S| with the columns laid out as [d/dRe z_t | d/dIm z_t].
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedJacobian {
    pub support: SupportSet,
    pub field: Field,
    m: usize,
    width: usize,
    rows: Vec<f64>,
}

impl RestrictedJacobian {
    pub fn measurement_count(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.width..(j + 1) * self.width]
    }
}

/// Normal equations J^T J delta = J^T F of one Gauss-Newton step.
#[derive(Clone, Debug)]
pub struct GaussNewtonSystem {
    pub matrix: SmallSymmetricMatrix,
    pub rhs: Vec<f64>,
    pub support: SupportSet,
    pub field: Field,
}

fn check_instance(a: &SensingEnsemble, y: &Measurements, z: &DenseVector) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements vs {} sensing vectors",
            y.len(),
            a.rows()
        )));
    }
    if z.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "iterate length {} vs ensemble columns {}",
            z.len(),
            a.cols()
        )));
    }
    Ok(())
}

/// Intensity loss f(z) = (1/4m) sum_j (|<a_j,z>|^2 - y_j)^2.
pub fn loss(a: &SensingEnsemble, y: &Measurements, z: &DenseVector) -> Result<f64> {
    check_instance(a, y, z)?;
    let c = a.inner_products(z)?;
    let m = a.rows() as f64;
    let mut acc = 0.0;
    for (cj, yj) in c.iter().zip(&y.values) {
        let w = cj.norm_sqr() - yj;
        acc += w * w;
    }
    Ok(acc / (4.0 * m))
}

/// Residual F_j(z) = (|<a_j,z>|^2 - y_j) / (2 sqrt m).
pub fn residual(a: &SensingEnsemble, y: &Measurements, z: &DenseVector) -> Result<Residual> {
    check_instance(a, y, z)?;
    let c = a.inner_products(z)?;
    let scale = 1.0 / (2.0 * (a.rows() as f64).sqrt());
    Ok(Residual {
        values: c
            .iter()
            .zip(&y.values)
            .map(|(cj, yj)| scale * (cj.norm_sqr() - yj))
            .collect(),
    })
}

/// Gradient of f at a real iterate:
/// (1/m) sum_j (|<a_j,z>|^2 - y_j) (a_jR a_jR^T + a_jI a_jI^T) z.
pub fn gradient(a: &SensingEnsemble, y: &Measurements, z: &DenseVector) -> Result<DenseVector> {
    check_instance(a, y, z)?;
    let x = z.as_real().ok_or_else(|| {
        Error::FieldMismatch("gradient requires a real iterate; use wirtinger_gradient".into())
    })?;
    let m = a.rows() as f64;
    let mut g = vec![0.0; x.len()];
    a.for_each_row(|j, row| {
        let mut c = Complex64::new(0.0, 0.0);
        for (ak, &xk) in row.iter().zip(x) {
            c += ak.conj() * xk;
        }
        let w = (c.norm_sqr() - y.values[j]) / m;
        for (gk, ak) in g.iter_mut().zip(row) {
            *gk += w * (c * ak).re;
        }
    });
    Ok(DenseVector::Real(g))
}

/// Wirtinger gradient at a complex iterate:
/// (1/m) sum_j (|a_j^* z|^2 - y_j) (a_j a_j^*) z, scaled so that its real
/// restriction reproduces `gradient`.
pub fn wirtinger_gradient(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
) -> Result<DenseVector> {
    check_instance(a, y, z)?;
    let x = z.as_complex().ok_or_else(|| {
        Error::FieldMismatch("wirtinger_gradient requires a complex iterate".into())
    })?;
    let m = a.rows() as f64;
    let mut g = vec![Complex64::new(0.0, 0.0); x.len()];
    a.for_each_row(|j, row| {
        let mut c = Complex64::new(0.0, 0.0);
        for (ak, xk) in row.iter().zip(x) {
            c += ak.conj() * xk;
        }
        let w = (c.norm_sqr() - y.values[j]) / m;
        let wc = w * c;
        for (gk, ak) in g.iter_mut().zip(row) {
            *gk += wc * ak;
        }
    });
    Ok(DenseVector::Complex(g))
}

/// Values of `z` on `support`, in support order, kept in z's field.
fn restrict(z: &DenseVector, support: &SupportSet) -> DenseVector {
    match z {
        DenseVector::Real(v) => {
            DenseVector::Real(support.indices().iter().map(|&i| v[i]).collect())
        }
        DenseVector::Complex(v) => {
            DenseVector::Complex(support.indices().iter().map(|&i| v[i]).collect())
        }
    }
}

/// Embeds on-support values back into an otherwise-zero ambient vector.
fn embed(values: &DenseVector, support: &SupportSet) -> DenseVector {
    match values {
        DenseVector::Real(v) => {
            let mut out = vec![0.0; support.ambient()];
            for (t, &i) in support.indices().iter().enumerate() {
                out[i] = v[t];
            }
            DenseVector::Real(out)
        }
        DenseVector::Complex(v) => {
            let mut out = vec![Complex64::new(0.0, 0.0); support.ambient()];
            for (t, &i) in support.indices().iter().enumerate() {
                out[i] = v[t];
            }
            DenseVector::Complex(out)
        }
    }
}

fn jacobian_from_products(
    a: &SensingEnsemble,
    c: &[Complex64],
    support: &SupportSet,
    field: Field,
) -> RestrictedJacobian {
    let m = a.rows();
    let t = support.len();
    let width = match field {
        Field::Real => t,
        Field::Complex => 2 * t,
    };
    let scale = 1.0 / (m as f64).sqrt();
    let mut rows = vec![0.0; m * width];
    for j in 0..m {
        let cj = c[j];
        let out = &mut rows[j * width..(j + 1) * width];
        for (col, &k) in support.indices().iter().enumerate() {
            let ca = cj * a.entry(j, k);
            match field {
                Field::Real => out[col] = scale * ca.re,
                Field::Complex => {
                    out[col] = scale * ca.re;
                    out[t + col] = scale * ca.im;
                }
            }
        }
    }
    RestrictedJacobian {
        support: support.clone(),
        field,
        m,
        width,
        rows,
    }
}

/// Jacobian of the residual at `z`, restricted to `support`. The dense
/// representation is intended for supports up to a few times the sparsity
/// level; rows use the full inner products <a_j, z>.
pub fn jacobian(
    a: &SensingEnsemble,
    z: &DenseVector,
    support: &SupportSet,
) -> Result<RestrictedJacobian> {
    if z.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "iterate length {} vs ensemble columns {}",
            z.len(),
            a.cols()
        )));
    }
    if support.ambient() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "support ambient {} vs ensemble columns {}",
            support.ambient(),
            a.cols()
        )));
    }
    if support.is_empty() {
        return Err(Error::Parameter("jacobian support must be nonempty".into()));
    }
    let c = a.inner_products(z)?;
    Ok(jacobian_from_products(a, &c, support, z.field()))
}

fn assemble_system(
    a: &SensingEnsemble,
    y: &Measurements,
    c: &[Complex64],
    support: &SupportSet,
    field: Field,
) -> GaussNewtonSystem {
    let jac = jacobian_from_products(a, c, support, field);
    let width = jac.width();
    let m = a.rows();
    let res_scale = 1.0 / (2.0 * (m as f64).sqrt());
    let mut matrix = SmallSymmetricMatrix::zeros(width);
    let mut rhs = vec![0.0; width];
    for (j, (cj, yj)) in c.iter().zip(&y.values).enumerate() {
        let row = jac.row(j);
        let f = res_scale * (cj.norm_sqr() - yj);
        for p in 0..width {
            rhs[p] += row[p] * f;
            for q in p..width {
                matrix.add_to(p, q, row[p] * row[q]);
            }
        }
    }
    GaussNewtonSystem {
        matrix,
        rhs,
        support: support.clone(),
        field,
    }
}

/// Builds the Gauss-Newton normal equations at `z` on `support`. The iterate
/// is taken restricted to the support (mass elsewhere is ignored), matching
/// the solver's fixed-support inner loop.
pub fn gn_system(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
    support: &SupportSet,
) -> Result<GaussNewtonSystem> {
    check_instance(a, y, z)?;
    if support.is_empty() {
        return Err(Error::Parameter("gauss-newton support must be nonempty".into()));
    }
    let zs = restrict(z, support);
    let c = a.inner_products_on_support(support, &zs)?;
    Ok(assemble_system(a, y, &c, support, z.field()))
}

/// Solves the normal equations, retrying a singular factorization once with
/// a Tikhonov shift of 1e-12 * trace(H)/dim(H).
fn solve_gn_system(system: &GaussNewtonSystem) -> Result<Vec<f64>> {
    match solve_spd(&system.matrix, &system.rhs) {
        Ok(delta) => Ok(delta),
        Err(Error::SingularSystem { .. }) => {
            let dim = system.matrix.dim();
            let mut shifted = system.matrix.clone();
            shifted.shift_diagonal(1e-12 * system.matrix.trace() / dim as f64);
            solve_spd(&shifted, &system.rhs)
        }
        Err(e) => Err(e),
    }
}

/// On-support update z_S - scale * delta, with the complex delta laid out as
/// [Re | Im] halves matching the Jacobian columns.
fn apply_delta(zs: &DenseVector, delta: &[f64], scale: f64) -> DenseVector {
    match zs {
        DenseVector::Real(v) => {
            DenseVector::Real(v.iter().zip(delta).map(|(vt, d)| vt - scale * d).collect())
        }
        DenseVector::Complex(v) => {
            let t = v.len();
            DenseVector::Complex(
                v.iter()
                    .enumerate()
                    .map(|(k, vt)| vt - scale * Complex64::new(delta[k], delta[t + k]))
                    .collect(),
            )
        }
    }
}

/// Loss evaluated from precomputed inner products c_j = <a_j, z>.
fn loss_from_products(c: &[Complex64], y: &Measurements) -> f64 {
    let m = c.len() as f64;
    let mut acc = 0.0;
    for (cj, yj) in c.iter().zip(&y.values) {
        let w = cj.norm_sqr() - yj;
        acc += w * w;
    }
    acc / (4.0 * m)
}

/// One Gauss-Newton step on a fixed support: solves
/// J^T J (z_S - z_S') = J^T F and returns the updated iterate, supported
/// exactly on `support`.
///
/// A zero right-hand side (exact fixed point; e.g. noiseless z = +/-x, or
/// y = 0 at z = 0) returns the iterate unchanged without factorizing, since
/// the normal matrix may be singular there. Otherwise a singular
/// factorization is retried once with a Tikhonov shift of
/// 1e-12 * trace(H)/dim(H); a second failure propagates the error.
pub fn gn_step(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
    support: &SupportSet,
) -> Result<DenseVector> {
    let system = gn_system(a, y, z, support)?;
    let zs = restrict(z, support);
    if system.rhs.iter().all(|&g| g == 0.0) {
        return Ok(embed(&zs, support));
    }
    let delta = solve_gn_system(&system)?;
    Ok(embed(&apply_delta(&zs, &delta, 1.0), support))
}

/// One Gauss-Newton step with backtracking on the loss: the [`gn_step`]
/// direction is kept but its length is halved until the loss stops
/// increasing, so the result never has a larger loss than the input.
///
/// Far from a minimizer the residual's linearization degrades quickly (the
/// residual is quadratic in the iterate) and the full step can overshoot by
/// orders of magnitude; since the direction is still a descent direction for
/// the loss — the normal matrix is positive semidefinite — a short enough
/// fraction of it always improves the loss. Whenever the full step already
/// does not increase the loss (always the case near a minimizer), the result
/// is identical to [`gn_step`], so local convergence behavior is unchanged.
///
/// A non-finite loss at the starting point is reported as a non-finite
/// error; if no fraction down to 2^-30 of the step improves the loss (a
/// numerically stationary point), the iterate is returned unchanged.
pub fn damped_gn_step(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
    support: &SupportSet,
) -> Result<DenseVector> {
    check_instance(a, y, z)?;
    if support.is_empty() {
        return Err(Error::Parameter(
            "gauss-newton support must be nonempty".into(),
        ));
    }
    let zs = restrict(z, support);
    let c0 = a.inner_products_on_support(support, &zs)?;
    let f0 = loss_from_products(&c0, y);
    if !f0.is_finite() {
        return Err(Error::NonFinite(
            "the loss is not finite at the Gauss-Newton starting point".into(),
        ));
    }
    let system = assemble_system(a, y, &c0, support, z.field());
    if system.rhs.iter().all(|&g| g == 0.0) {
        return Ok(embed(&zs, support));
    }
    let delta = solve_gn_system(&system)?;
    let mut scale = 1.0;
    for _ in 0..=30 {
        let cand = apply_delta(&zs, &delta, scale);
        let c = a.inner_products_on_support(support, &cand)?;
        let f = loss_from_products(&c, y);
        if f.is_finite() && f <= f0 {
            return Ok(embed(&cand, support));
        }
        scale /= 2.0;
    }
    // Not even 2^-30 of the step helps: numerically stationary. Keep the
    // iterate; the next projected-gradient step will move it instead.
    Ok(embed(&zs, support))
}
