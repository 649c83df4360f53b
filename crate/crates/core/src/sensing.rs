//! Signal generation, measurement ensembles, and the magnitude-squared
//! measurement map y_j = |<a_j, x>|^2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseVector, Field, SupportSet};
use crate::rng::Rng;

/// Measurement ensemble family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Rows drawn i.i.d. from CN(0, I): entries with N(0, 1/2) parts.
    ComplexGaussian,
    /// Distinct rows of the unitary discrete Fourier matrix.
    PartialDft,
}

/// An s-sparse ground-truth signal together with its generation metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    pub vector: DenseVector,
    pub support: SupportSet,
    pub seed: u64,
}

impl SparseSignal {
    /// Smallest nonzero magnitude on the support.
    pub fn min_magnitude(&self) -> f64 {
        self.support
            .indices()
            .iter()
            .map(|&i| self.vector.magnitude(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Row storage: Gaussian rows are materialized; DFT rows are kept as row
/// indices and synthesized on demand from a shared twiddle table.
#[derive(Clone, Debug, PartialEq)]
enum RowStorage {
    Explicit(Vec<Complex64>),
    DftRows {
        indices: Vec<usize>,
        /// table[t] = exp(-2 pi i t / n) / sqrt(n); row j entry k is
        /// table[(indices[j] * k) mod n].
        table: Vec<Complex64>,
    },
}

fn dft_table(n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|t| {
            let angle = -2.0 * std::f64::consts::PI * t as f64 / n as f64;
            Complex64::new(angle.cos() * scale, angle.sin() * scale)
        })
        .collect()
}

/// A measurement ensemble: m sensing vectors of length n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleRepr", into = "EnsembleRepr")]
pub struct SensingEnsemble {
    kind: EnsembleKind,
    m: usize,
    n: usize,
    seed: u64,
    storage: RowStorage,
}

impl SensingEnsemble {
    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Builds an ensemble from explicitly given rows (row-major, m*n entries).
    /// Used by tests and by wavelet-composed measurement operators.
    pub fn from_rows(kind: EnsembleKind, m: usize, n: usize, seed: u64, rows: Vec<Complex64>) -> Result<Self> {
        if rows.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {m}*{n} row entries, got {}",
                rows.len()
            )));
        }
        if rows.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("ensemble row entry is not finite".into()));
        }
        Ok(SensingEnsemble {
            kind,
            m,
            n,
            seed,
            storage: RowStorage::Explicit(rows),
        })
    }

    /// The DFT row indices, when this is a partial-DFT ensemble.
    pub fn dft_row_indices(&self) -> Option<&[usize]> {
        match &self.storage {
            RowStorage::DftRows { indices, .. } => Some(indices),
            RowStorage::Explicit(_) => None,
        }
    }

    /// Entry a_{jk} of sensing vector j.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        match &self.storage {
            RowStorage::Explicit(rows) => rows[j * self.n + k],
            RowStorage::DftRows { indices, table } => table[(indices[j] * k) % self.n],
        }
    }

    /// Visits each sensing vector in row order as a contiguous slice.
    pub fn for_each_row<F: FnMut(usize, &[Complex64])>(&self, mut f: F) {
        match &self.storage {
            RowStorage::Explicit(rows) => {
                for (j, row) in rows.chunks_exact(self.n).enumerate() {
                    f(j, row);
                }
            }
            RowStorage::DftRows { indices, table } => {
                let n = self.n;
                let mut scratch = vec![Complex64::new(0.0, 0.0); n];
                for (j, &r) in indices.iter().enumerate() {
                    for (k, slot) in scratch.iter_mut().enumerate() {
                        *slot = table[(r * k) % n];
                    }
                    f(j, &scratch);
                }
            }
        }
    }

    /// Inner products c_j = <a_j, z> = sum_k conj(a_{jk}) z_k for all rows.
    pub fn inner_products(&self, z: &DenseVector) -> Result<Vec<Complex64>> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "ensemble has {} columns, operand has length {}",
                self.n,
                z.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        match z {
            DenseVector::Real(x) => self.for_each_row(|j, row| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, &v) in row.iter().zip(x) {
                    acc += a.conj() * v;
                }
                out[j] = acc;
            }),
            DenseVector::Complex(x) => self.for_each_row(|j, row| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, v) in row.iter().zip(x) {
                    acc += a.conj() * v;
                }
                out[j] = acc;
            }),
        }
        Ok(out)
    }

    /// Inner products of every row against a vector supported on `support`
    /// with the given on-support values (real or complex), in O(m |support|).
    pub fn inner_products_on_support(
        &self,
        support: &SupportSet,
        values: &DenseVector,
    ) -> Result<Vec<Complex64>> {
        if support.ambient() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "support ambient {} vs ensemble columns {}",
                support.ambient(),
                self.n
            )));
        }
        if values.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "support size {} vs value count {}",
                support.len(),
                values.len()
            )));
        }
        let idx = support.indices();
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            match values {
                DenseVector::Real(v) => {
                    for (t, &k) in idx.iter().enumerate() {
                        acc += self.entry(j, k).conj() * v[t];
                    }
                }
                DenseVector::Complex(v) => {
                    for (t, &k) in idx.iter().enumerate() {
                        acc += self.entry(j, k).conj() * v[t];
                    }
                }
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// A new ensemble holding the contiguous row range [start, start + count).
    /// Generation order (and thus reproducibility metadata) is preserved.
    pub fn row_range(&self, start: usize, count: usize) -> Result<SensingEnsemble> {
        if start + count > self.m {
            return Err(Error::Parameter(format!(
                "row range {start}..{} exceeds {} rows",
                start + count,
                self.m
            )));
        }
        let storage = match &self.storage {
            RowStorage::Explicit(rows) => {
                RowStorage::Explicit(rows[start * self.n..(start + count) * self.n].to_vec())
            }
            RowStorage::DftRows { indices, table } => RowStorage::DftRows {
                indices: indices[start..start + count].to_vec(),
                table: table.clone(),
            },
        };
        Ok(SensingEnsemble {
            kind: self.kind,
            m: count,
            n: self.n,
            seed: self.seed,
            storage,
        })
    }
}

/// Serialized form: explicit rows as decimal entries, DFT rows as indices.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleRepr {
    schema_version: u32,
    kind: EnsembleKind,
    m: usize,
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dft_row_indices: Option<Vec<usize>>,
}

impl From<SensingEnsemble> for EnsembleRepr {
    fn from(e: SensingEnsemble) -> Self {
        let (rows, dft_row_indices) = match e.storage {
            RowStorage::Explicit(rows) => (Some(rows), None),
            RowStorage::DftRows { indices, .. } => (None, Some(indices)),
        };
        EnsembleRepr {
            schema_version: 1,
            kind: e.kind,
            m: e.m,
            n: e.n,
            seed: e.seed,
            rows,
            dft_row_indices,
        }
    }
}

impl TryFrom<EnsembleRepr> for SensingEnsemble {
    type Error = Error;

    fn try_from(r: EnsembleRepr) -> Result<Self> {
        if r.schema_version != 1 {
            return Err(Error::Parameter(format!(
                "unsupported ensemble schema_version {}",
                r.schema_version
            )));
        }
        match (r.rows, r.dft_row_indices) {
            (Some(rows), None) => SensingEnsemble::from_rows(r.kind, r.m, r.n, r.seed, rows),
            (None, Some(indices)) => {
                if indices.len() != r.m {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {} DFT row indices, got {}",
                        r.m,
                        indices.len()
                    )));
                }
                if indices.iter().any(|&i| i >= r.n) {
                    return Err(Error::Parameter("DFT row index out of range".into()));
                }
                Ok(SensingEnsemble {
                    kind: r.kind,
                    m: r.m,
                    n: r.n,
                    seed: r.seed,
                    storage: RowStorage::DftRows {
                        indices,
                        table: dft_table(r.n),
                    },
                })
            }
            _ => Err(Error::Parameter(
                "ensemble needs exactly one of `rows` or `dft_row_indices`".into(),
            )),
        }
    }
}

/// Magnitude-squared measurements, with the noise metadata that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub values: Vec<f64>,
    pub sigma: f64,
    pub noise_seed: Option<u64>,
}

impl Measurements {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// The contiguous sub-range [start, start + count) of measurements.
    pub fn range(&self, start: usize, count: usize) -> Result<Measurements> {
        if start + count > self.values.len() {
            return Err(Error::Parameter(format!(
                "measurement range {start}..{} exceeds {} values",
                start + count,
                self.values.len()
            )));
        }
        Ok(Measurements {
            values: self.values[start..start + count].to_vec(),
            sigma: self.sigma,
            noise_seed: self.noise_seed,
        })
    }
}

/// Draws an s-sparse signal with support uniform over s-subsets of 0..n and
/// i.i.d. standard normal (real) or CN(0,1) (complex) values on the support.
pub fn gen_sparse_signal(n: usize, s: usize, field: Field, seed: u64) -> Result<SparseSignal> {
    if s == 0 || s > n {
        return Err(Error::Parameter(format!(
            "sparsity {s} must satisfy 1 <= s <= {n}"
        )));
    }
    let mut rng = Rng::new(seed);
    let support = SupportSet::new(rng.sample_distinct(n, s), n)?;
    let vector = match field {
        Field::Real => {
            let mut v = vec![0.0; n];
            for &i in support.indices() {
                let mut g = rng.next_gaussian();
                while g == 0.0 {
                    g = rng.next_gaussian();
                }
                v[i] = g;
            }
            DenseVector::Real(v)
        }
        Field::Complex => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for &i in support.indices() {
                let mut g = rng.next_complex_gaussian();
                while g.norm() == 0.0 {
                    g = rng.next_complex_gaussian();
                }
                v[i] = g;
            }
            DenseVector::Complex(v)
        }
    };
    Ok(SparseSignal {
        vector,
        support,
        seed,
    })
}

/// Samples a measurement ensemble. Gaussian rows are generated row-major in
/// one pass; partial-DFT row indices are drawn uniformly without replacement
/// (and stored sorted).
pub fn sample_ensemble(kind: EnsembleKind, m: usize, n: usize, seed: u64) -> Result<SensingEnsemble> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter("ensemble dimensions must be positive".into()));
    }
    let mut rng = Rng::new(seed);
    let storage = match kind {
        EnsembleKind::ComplexGaussian => {
            let mut rows = Vec::with_capacity(m * n);
            for _ in 0..m * n {
                rows.push(rng.next_complex_gaussian());
            }
            RowStorage::Explicit(rows)
        }
        EnsembleKind::PartialDft => {
            if m > n {
                return Err(Error::Parameter(format!(
                    "partial DFT needs m <= n, got m={m}, n={n}"
                )));
            }
            RowStorage::DftRows {
                indices: rng.sample_distinct(n, m),
                table: dft_table(n),
            }
        }
    };
    Ok(SensingEnsemble {
        kind,
        m,
        n,
        seed,
        storage,
    })
}

/// Noiseless measurements y_j = |<a_j, x>|^2.
pub fn measure(ensemble: &SensingEnsemble, x: &DenseVector) -> Result<Measurements> {
    let products = ensemble.inner_products(x)?;
    Ok(Measurements {
        values: products.iter().map(|c| c.norm_sqr()).collect(),
        sigma: 0.0,
        noise_seed: None,
    })
}

/// Additive Gaussian noise y + sigma * eps with eps_j i.i.d. N(0,1). The
/// noise draw depends only on the seed, so doubling sigma exactly doubles the
/// perturbation. sigma = 0 returns the input unchanged.
pub fn add_noise(measurements: &Measurements, sigma: f64, seed: u64) -> Result<Measurements> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Parameter(format!(
            "noise level sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(measurements.clone());
    }
    let mut rng = Rng::new(seed);
    let values = measurements
        .values
        .iter()
        .map(|y| y + sigma * rng.next_gaussian())
        .collect();
    Ok(Measurements {
        values,
        sigma,
        noise_seed: Some(seed),
    })
}
