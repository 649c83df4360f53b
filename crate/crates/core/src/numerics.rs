//! Dense vectors over R or C, support sets, small SPD systems, and the
//! metric/thresholding primitives the solver is built from.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar field tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// A dense vector over R or C. Complex entries are (re, im) pairs of f64.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", content = "entries", rename_all = "snake_case")]
pub enum DenseVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl DenseVector {
    /// Real vector; rejects non-finite entries.
    pub fn real(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("real entry {i} is not finite")));
        }
        Ok(DenseVector::Real(entries))
    }

    /// Complex vector; rejects non-finite parts.
    pub fn complex(entries: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = entries
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite(format!("complex entry {i} is not finite")));
        }
        Ok(DenseVector::Complex(entries))
    }

    /// All-zero vector of the given field and length.
    pub fn zeros(field: Field, n: usize) -> Self {
        match field {
            Field::Real => DenseVector::Real(vec![0.0; n]),
            Field::Complex => DenseVector::Complex(vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DenseVector::Real(v) => v.len(),
            DenseVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn field(&self) -> Field {
        match self {
            DenseVector::Real(_) => Field::Real,
            DenseVector::Complex(_) => Field::Complex,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            DenseVector::Real(v) => Some(v),
            DenseVector::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&[Complex64]> {
        match self {
            DenseVector::Complex(v) => Some(v),
            DenseVector::Real(_) => None,
        }
    }

    /// Modulus of entry `i`.
    pub fn magnitude(&self, i: usize) -> f64 {
        match self {
            DenseVector::Real(v) => v[i].abs(),
            DenseVector::Complex(v) => v[i].norm(),
        }
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        match self {
            DenseVector::Real(v) => v.iter().map(|a| a * a).sum(),
            DenseVector::Complex(v) => v.iter().map(|a| a.norm_sqr()).sum(),
        }
    }

    /// Entrywise difference; operands must share field and length.
    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        check_compatible(self, other)?;
        Ok(match (self, other) {
            (DenseVector::Real(a), DenseVector::Real(b)) => {
                DenseVector::Real(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            (DenseVector::Complex(a), DenseVector::Complex(b)) => {
                DenseVector::Complex(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            _ => unreachable!("field checked above"),
        })
    }

    /// Validates finiteness of every entry (for data loaded from the outside).
    pub fn validate(&self) -> Result<()> {
        match self {
            DenseVector::Real(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("vector has a non-finite entry".into()));
                }
            }
            DenseVector::Complex(v) => {
                if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(Error::NonFinite("vector has a non-finite entry".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_compatible(a: &DenseVector, b: &DenseVector) -> Result<()> {
    if a.field() != b.field() {
        return Err(Error::FieldMismatch(
            "operands live in different scalar fields".into(),
        ));
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "operand lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Inner product `<a, b> = sum conj(a_i) b_i` (conjugate-linear in the first
/// argument), for same-field operands.
pub fn inner_product(a: &DenseVector, b: &DenseVector) -> Result<Complex64> {
    check_compatible(a, b)?;
    Ok(match (a, b) {
        (DenseVector::Real(x), DenseVector::Real(y)) => {
            Complex64::new(x.iter().zip(y).map(|(p, q)| p * q).sum(), 0.0)
        }
        (DenseVector::Complex(x), DenseVector::Complex(y)) => {
            x.iter().zip(y).map(|(p, q)| p.conj() * q).sum()
        }
        _ => unreachable!("field checked above"),
    })
}

/// A sorted, duplicate-free set of indices into an ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    ambient: usize,
}

impl SupportSet {
    /// Builds a support set; indices are sorted, must be in range and unique.
    pub fn new(mut indices: Vec<usize>, ambient: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&i) = indices.iter().find(|&&i| i >= ambient) {
            return Err(Error::Parameter(format!(
                "support index {i} out of range for dimension {ambient}"
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("support indices contain duplicates".into()));
        }
        Ok(SupportSet { indices, ambient })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Dimension of the ambient space the indices point into.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Hard thresholding H_s: keeps the `s` largest-modulus entries and zeroes the
/// rest. Ties are broken toward the lowest index so the result is unique.
pub fn hard_threshold(v: &DenseVector, s: usize) -> Result<(DenseVector, SupportSet)> {
    let n = v.len();
    if s == 0 || s > n {
        return Err(Error::Parameter(format!(
            "sparsity {s} must satisfy 1 <= s <= {n}"
        )));
    }
    if let Some(i) = (0..n).find(|&i| !v.magnitude(i).is_finite()) {
        return Err(Error::NonFinite(format!(
            "cannot threshold: entry {i} has non-finite magnitude"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| {
        v.magnitude(j)
            .partial_cmp(&v.magnitude(i))
            .expect("entry magnitudes are finite")
            .then(i.cmp(&j))
    });
    let support = SupportSet::new(order[..s].to_vec(), n)?;
    let thresholded = match v {
        DenseVector::Real(x) => {
            let mut out = vec![0.0; n];
            for &i in support.indices() {
                out[i] = x[i];
            }
            DenseVector::Real(out)
        }
        DenseVector::Complex(x) => {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for &i in support.indices() {
                out[i] = x[i];
            }
            DenseVector::Complex(out)
        }
    };
    Ok((thresholded, support))
}

/// Distance up to the global phase ambiguity of magnitude measurements.
///
/// Real case: min(||z - x||, ||z + x||). Complex case: the closed form is
/// sqrt(||z||^2 + ||x||^2 - 2|<z,x>|); it is evaluated here by rotating `x`
/// onto `z` with the optimal phase and subtracting directly, which computes
/// the same quantity without squaring away half the significant digits.
pub fn dist(z: &DenseVector, x: &DenseVector) -> Result<f64> {
    check_compatible(z, x)?;
    match (z, x) {
        (DenseVector::Real(a), DenseVector::Real(b)) => {
            let mut minus = 0.0;
            let mut plus = 0.0;
            for (p, q) in a.iter().zip(b) {
                minus += (p - q) * (p - q);
                plus += (p + q) * (p + q);
            }
            Ok(minus.min(plus).sqrt())
        }
        (DenseVector::Complex(a), DenseVector::Complex(b)) => {
            let ip: Complex64 = a.iter().zip(b).map(|(p, q)| p.conj() * q).sum();
            let phase = if ip.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                ip.conj() / ip.norm()
            };
            let mut acc = 0.0;
            for (p, q) in a.iter().zip(b) {
                acc += (p - phase * q).norm_sqr();
            }
            Ok(acc.sqrt())
        }
        _ => unreachable!("field checked above"),
    }
}

/// Relative error dist(estimate, truth) / ||truth||.
pub fn relative_error(estimate: &DenseVector, truth: &DenseVector) -> Result<f64> {
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::Parameter(
            "relative error undefined for zero reference".into(),
        ));
    }
    Ok(dist(estimate, truth)? / denom)
}

/// Peak signal-to-noise ratio in dB after optimal global-phase alignment of
/// the estimate to the reference. The peak is max |reference_i|; returns the
/// 300 dB sentinel once the MSE falls below 1e-30 * peak^2.
pub fn psnr(reference: &DenseVector, estimate: &DenseVector) -> Result<f64> {
    check_compatible(reference, estimate)?;
    let peak = (0..reference.len())
        .map(|i| reference.magnitude(i))
        .fold(0.0_f64, f64::max);
    if peak == 0.0 {
        return Err(Error::Parameter("psnr requires a nonzero reference".into()));
    }
    let n = reference.len();
    let mse = match (reference, estimate) {
        (DenseVector::Real(r), DenseVector::Real(e)) => {
            let ip: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
            let sign = if ip < 0.0 { -1.0 } else { 1.0 };
            r.iter()
                .zip(e)
                .map(|(a, b)| (a - sign * b) * (a - sign * b))
                .sum::<f64>()
                / n as f64
        }
        (DenseVector::Complex(r), DenseVector::Complex(e)) => {
            let ip: Complex64 = r.iter().zip(e).map(|(a, b)| a.conj() * b).sum();
            let phase = if ip.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                ip.conj() / ip.norm()
            };
            r.iter()
                .zip(e)
                .map(|(a, b)| (a - phase * b).norm_sqr())
                .sum::<f64>()
                / n as f64
        }
        _ => unreachable!("field checked above"),
    };
    if mse < 1e-30 * peak * peak {
        return Ok(300.0);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Symmetric matrix stored as a packed upper triangle, so symmetry holds by
/// construction. Sized for the solver's restricted normal equations (a few
/// times the sparsity level).
#[derive(Clone, Debug, PartialEq)]
pub struct SmallSymmetricMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SmallSymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SmallSymmetricMatrix {
            dim,
            upper: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.dim - r * (r + 1) / 2 + c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.upper[k] = value;
    }

    pub fn add_to(&mut self, i: usize, j: usize, delta: f64) {
        let k = self.idx(i, j);
        self.upper[k] += delta;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(&mut self, shift: f64) {
        for i in 0..self.dim {
            self.add_to(i, i, shift);
        }
    }

    /// Matrix-vector product (for residual checks).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| x.iter().enumerate().map(|(j, xj)| self.get(i, j) * xj).sum())
            .collect()
    }
}

/// Solves M delta = b for symmetric positive definite M by an unpivoted
/// Cholesky factorization. A non-positive (within tolerance) pivot produces
/// `Error::SingularSystem` carrying the offending pivot index.
pub fn solve_spd(m: &SmallSymmetricMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix dim {n} vs rhs length {}",
            b.len()
        )));
    }
    let max_diag = (0..n).map(|i| m.get(i, i).abs()).fold(0.0_f64, f64::max);
    let pivot_floor = n as f64 * f64::EPSILON * max_diag;

    // Lower-triangular factor, dense row-major.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m.get(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if acc <= pivot_floor || !acc.is_finite() {
                    return Err(Error::SingularSystem { pivot: i });
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    let mut x = y;
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[k * n + i] * x[k];
        }
        x[i] /= l[i * n + i];
    }
    Ok(x)
}
