//! Starting points: the spectral initializer and a perturbed-oracle helper
//! for experiments that begin near the truth.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hard_threshold, inner_product, DenseVector, Field, SupportSet};
use crate::rng::Rng;
use crate::sensing::{Measurements, SensingEnsemble, SparseSignal};

/// Output of the spectral initializer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitReport {
    pub z0: DenseVector,
    pub support_estimate: SupportSet,
    pub power_iterations: usize,
    /// ||M v - lambda v|| / |lambda| at the returned eigenvector.
    pub eigen_residual: f64,
}

/// Support estimate: the s largest diagonal scores
/// score_t = (1/m) sum_j y_j |a_{jt}|^2, ties toward the lowest index.
pub fn spectral_support(
    a: &SensingEnsemble,
    y: &Measurements,
    s: usize,
) -> Result<SupportSet> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements vs {} sensing vectors",
            y.len(),
            a.rows()
        )));
    }
    let m = a.rows() as f64;
    let mut scores = vec![0.0; a.cols()];
    a.for_each_row(|j, row| {
        let yj = y.values[j];
        for (score, ak) in scores.iter_mut().zip(row) {
            *score += yj * ak.norm_sqr();
        }
    });
    for score in &mut scores {
        *score /= m;
    }
    let (_, support) = hard_threshold(&DenseVector::Real(scores), s)?;
    Ok(support)
}

/// Spectral initializer: estimates the support from the diagonal scores, runs
/// power iteration (tolerance 1e-8, cap 1000, started from the normalized
/// all-ones vector) on the restricted matrix
/// M = (1/m) sum_j y_j [a_j]_S [a_j]_S^*, rotates the leading eigenvector so
/// its largest-modulus entry is real and positive, and scales the embedded
/// result to norm sqrt(mean(y)). For a real-field target the rotated
/// eigenvector's real part is taken (and renormalized) before scaling.
pub fn spectral_init(
    a: &SensingEnsemble,
    y: &Measurements,
    s: usize,
    field: Field,
) -> Result<InitReport> {
    let mean_y = y.mean();
    if mean_y.is_nan() || mean_y <= 0.0 {
        return Err(Error::Initialization(format!(
            "spectral init needs mean(y) > 0, got {mean_y}"
        )));
    }
    let support = spectral_support(a, y, s)?;
    let idx = support.indices();
    let m = a.rows() as f64;

    // Restricted s x s Hermitian matrix, dense row-major.
    let mut matrix = vec![Complex64::new(0.0, 0.0); s * s];
    a.for_each_row(|j, row| {
        let yj = y.values[j];
        for (t, &kt) in idx.iter().enumerate() {
            let bt = row[kt];
            for (u, &ku) in idx.iter().enumerate() {
                matrix[t * s + u] += yj * bt * row[ku].conj();
            }
        }
    });
    for entry in &mut matrix {
        *entry /= m;
    }

    let mul = |v: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); s];
        for t in 0..s {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..s {
                acc += matrix[t * s + u] * v[u];
            }
            out[t] = acc;
        }
        out
    };

    let mut v = vec![Complex64::new(1.0 / (s as f64).sqrt(), 0.0); s];
    let mut iterations = 0;
    for _ in 0..1000 {
        let w = mul(&v);
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        iterations += 1;
        let next: Vec<Complex64> = w.iter().map(|c| c / norm).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < 1e-8 {
            break;
        }
    }

    // Rayleigh quotient (real for Hermitian M) and eigenpair residual.
    let mv = mul(&v);
    let lambda: f64 = v.iter().zip(&mv).map(|(p, q)| (p.conj() * q).re).sum();
    let residual_norm = mv
        .iter()
        .zip(&v)
        .map(|(p, q)| (p - lambda * q).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let eigen_residual = if lambda != 0.0 {
        residual_norm / lambda.abs()
    } else {
        f64::INFINITY
    };

    // Deterministic global phase: largest-modulus entry real and positive.
    let mut top = 0;
    for t in 1..s {
        if v[t].norm() > v[top].norm() {
            top = t;
        }
    }
    let rotation = if v[top].norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        v[top].conj() / v[top].norm()
    };
    for entry in &mut v {
        *entry *= rotation;
    }

    let scale = mean_y.sqrt();
    let z0 = match field {
        Field::Real => {
            let re: Vec<f64> = v.iter().map(|c| c.re).collect();
            let norm = re.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Initialization(
                    "leading eigenvector has no real part".into(),
                ));
            }
            let mut out = vec![0.0; a.cols()];
            for (t, &i) in idx.iter().enumerate() {
                out[i] = re[t] / norm * scale;
            }
            DenseVector::Real(out)
        }
        Field::Complex => {
            let mut out = vec![Complex64::new(0.0, 0.0); a.cols()];
            for (t, &i) in idx.iter().enumerate() {
                out[i] = v[t] * scale;
            }
            DenseVector::Complex(out)
        }
    };
    Ok(InitReport {
        z0,
        support_estimate: support,
        power_iterations: iterations,
        eigen_residual,
    })
}

/// A starting point at exact relative error `r` from the truth, supported on
/// the true support: x + w with w orthogonal to x (so the phase-aligned
/// distance is exactly ||w|| = r ||x||) and direction drawn uniformly from
/// the sphere in the orthogonal complement. Degenerate supports where no
/// orthogonal direction exists (e.g. s = 1 over the reals) fall back to the
/// collinear point (1 + r) x.
pub fn perturbed_oracle_init(truth: &SparseSignal, r: f64, seed: u64) -> Result<DenseVector> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Parameter(format!(
            "target relative error must be finite and positive, got {r}"
        )));
    }
    let x = &truth.vector;
    let norm_x = x.norm();
    if norm_x == 0.0 {
        return Err(Error::Parameter(
            "perturbed oracle init needs a nonzero truth".into(),
        ));
    }
    let mut rng = Rng::new(seed);
    let idx = truth.support.indices();

    let mut w = DenseVector::zeros(x.field(), x.len());
    match &mut w {
        DenseVector::Real(wv) => {
            for &i in idx {
                wv[i] = rng.next_gaussian();
            }
        }
        DenseVector::Complex(wv) => {
            for &i in idx {
                wv[i] = rng.next_complex_gaussian();
            }
        }
    }
    // Project out the component along x; <x, w - alpha x> = 0.
    let alpha = inner_product(x, &w)? / Complex64::new(norm_x * norm_x, 0.0);
    match (&mut w, x) {
        (DenseVector::Real(wv), DenseVector::Real(xv)) => {
            for &i in idx {
                wv[i] -= alpha.re * xv[i];
            }
        }
        (DenseVector::Complex(wv), DenseVector::Complex(xv)) => {
            for &i in idx {
                wv[i] -= alpha * xv[i];
            }
        }
        _ => unreachable!("w was built in x's field"),
    }
    let norm_w = w.norm();
    if norm_w == 0.0 {
        // No orthogonal direction on this support; scale along the truth.
        return scaled_truth(x, 1.0 + r);
    }
    let factor = r * norm_x / norm_w;
    Ok(match (w, x) {
        (DenseVector::Real(wv), DenseVector::Real(xv)) => DenseVector::Real(
            xv.iter()
                .zip(wv)
                .map(|(xi, wi)| xi + factor * wi)
                .collect(),
        ),
        (DenseVector::Complex(wv), DenseVector::Complex(xv)) => DenseVector::Complex(
            xv.iter()
                .zip(wv)
                .map(|(xi, wi)| xi + factor * wi)
                .collect(),
        ),
        _ => unreachable!("w was built in x's field"),
    })
}

fn scaled_truth(x: &DenseVector, factor: f64) -> Result<DenseVector> {
    Ok(match x {
        DenseVector::Real(v) => DenseVector::Real(v.iter().map(|a| factor * a).collect()),
        DenseVector::Complex(v) => DenseVector::Complex(v.iter().map(|a| factor * a).collect()),
    })
}
