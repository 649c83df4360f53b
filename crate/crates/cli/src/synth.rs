//! Wavelet-domain instances for the reconstruction families: synthetic
//! sparse-coefficient signals/images and the composed sensing operators that
//! measure them in coefficient space.
//!
//! For a real orthonormal transform W, <a, W^-1 c> = <W a, c>: transforming
//! every ensemble row (real and imaginary parts separately) yields an
//! operator whose measurements of the coefficient vector c equal the original
//! operator's measurements of the synthesized signal W^-1 c. The solver then
//! works entirely in coefficient space, where the target is s-sparse.

use grahtp::numerics::{hard_threshold, DenseVector, Field};
use grahtp::sensing::{gen_sparse_signal, SensingEnsemble, SparseSignal};
use grahtp::wavelet::{
    haar_forward_1d, haar_forward_2d, haar_inverse_1d, haar_inverse_2d, Grid, WaveletSpec,
};
use grahtp::Result;
use num_complex::Complex64;

/// A 1-D ground truth: s-sparse Haar coefficients and the signal they
/// synthesize.
pub struct WaveletTruth1d {
    pub coeffs: SparseSignal,
    pub signal: Vec<f64>,
}

pub fn wavelet_sparse_1d(
    n: usize,
    s: usize,
    spec: &WaveletSpec,
    seed: u64,
) -> Result<WaveletTruth1d> {
    let coeffs = gen_sparse_signal(n, s, Field::Real, seed)?;
    let entries = coeffs.vector.as_real().expect("real by construction");
    let signal = haar_inverse_1d(entries, spec)?;
    Ok(WaveletTruth1d { coeffs, signal })
}

/// A 2-D ground truth: s-sparse coefficients (row-major over the grid), the
/// image they synthesize, and the reference image PSNR is measured against.
pub struct WaveletTruth2d {
    pub coeffs: SparseSignal,
    pub image: Grid,
    /// PSNR reference: the input image when one was supplied, otherwise the
    /// synthesized image itself.
    pub reference: Grid,
}

/// Synthetic 2-D instance: draw s-sparse coefficients and synthesize.
pub fn wavelet_sparse_2d(
    height: usize,
    width: usize,
    s: usize,
    spec: &WaveletSpec,
    seed: u64,
) -> Result<WaveletTruth2d> {
    let coeffs = gen_sparse_signal(height * width, s, Field::Real, seed)?;
    let entries = coeffs.vector.as_real().expect("real by construction");
    let grid = Grid::new(height, width, entries.to_vec())?;
    let image = haar_inverse_2d(&grid, spec)?;
    Ok(WaveletTruth2d {
        coeffs,
        reference: image.clone(),
        image,
    })
}

/// Instance from a real image: the truth is the best s-term coefficient
/// approximation; PSNR is still reported against the original image.
pub fn image_truth_2d(image: &Grid, s: usize, spec: &WaveletSpec) -> Result<WaveletTruth2d> {
    let full = haar_forward_2d(image, spec)?;
    let (vector, support) = hard_threshold(&DenseVector::real(full.data.clone())?, s)?;
    let truncated = vector.as_real().expect("real by construction").to_vec();
    let truncated_grid = Grid::new(image.height, image.width, truncated)?;
    let truncated = haar_inverse_2d(&truncated_grid, spec)?;
    Ok(WaveletTruth2d {
        coeffs: SparseSignal {
            vector,
            support,
            seed: 0,
        },
        image: truncated,
        reference: image.clone(),
    })
}

/// Applies the forward transform to every row of `a` (real and imaginary
/// parts separately), producing the coefficient-space operator.
pub fn compose_rows_1d(a: &SensingEnsemble, spec: &WaveletSpec) -> Result<SensingEnsemble> {
    compose_rows(a, |re, im| {
        Ok((haar_forward_1d(re, spec)?, haar_forward_1d(im, spec)?))
    })
}

/// 2-D version: each row is reshaped to the image grid before transforming.
pub fn compose_rows_2d(
    a: &SensingEnsemble,
    spec: &WaveletSpec,
    height: usize,
    width: usize,
) -> Result<SensingEnsemble> {
    compose_rows(a, |re, im| {
        let tre = haar_forward_2d(&Grid::new(height, width, re.to_vec())?, spec)?;
        let tim = haar_forward_2d(&Grid::new(height, width, im.to_vec())?, spec)?;
        Ok((tre.data, tim.data))
    })
}

fn compose_rows<F>(a: &SensingEnsemble, mut transform: F) -> Result<SensingEnsemble>
where
    F: FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let n = a.cols();
    let mut rows = Vec::with_capacity(a.rows() * n);
    let mut failure = None;
    a.for_each_row(|_, row| {
        if failure.is_some() {
            return;
        }
        let re: Vec<f64> = row.iter().map(|v| v.re).collect();
        let im: Vec<f64> = row.iter().map(|v| v.im).collect();
        match transform(&re, &im) {
            Ok((tre, tim)) => {
                rows.extend(tre.iter().zip(&tim).map(|(&p, &q)| Complex64::new(p, q)));
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    SensingEnsemble::from_rows(a.kind(), a.rows(), n, a.seed(), rows)
}

/// Sign-aligns a real estimate with its reference (the solver only pins the
/// truth up to a global sign).
pub fn align_sign(estimate: &[f64], reference: &[f64]) -> Vec<f64> {
    let dot: f64 = estimate
        .iter()
        .zip(reference)
        .map(|(p, q)| p * q)
        .sum();
    if dot < 0.0 {
        estimate.iter().map(|v| -v).collect()
    } else {
        estimate.to_vec()
    }
}
