//! Eigenvalue spectra, the Marchenko-Pastur noise band and the split of a
//! correlation matrix into random, group and market components.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// Symmetric eigendecomposition with the noise band of a random correlation
/// matrix of the same shape.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Largest eigenvalue.
    pub lambda_market: f64,
    /// N / T.
    pub ratio: f64,
    pub t_eff: usize,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of eigenvalues strictly above the upper band edge.
    pub fn above_bulk(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&l| l > self.lambda_plus)
            .count()
    }

    /// Fraction of eigenvalues outside `[lambda_minus, lambda_plus]`.
    pub fn fraction_outside_bulk(&self) -> f64 {
        let outside = self
            .eigenvalues
            .iter()
            .filter(|&&l| l < self.lambda_minus || l > self.lambda_plus)
            .count();
        outside as f64 / self.n() as f64
    }

    /// `Σ λ_k v_k v_kᵀ` over the given eigen-indices.
    pub fn partial_sum(&self, indices: &[usize]) -> DMatrix<f64> {
        let n = self.n();
        if indices.is_empty() {
            return DMatrix::zeros(n, n);
        }
        let mut v = DMatrix::zeros(n, indices.len());
        let mut scaled = DMatrix::zeros(n, indices.len());
        for (col, &k) in indices.iter().enumerate() {
            let vk = self.eigenvectors.column(k);
            v.set_column(col, &vk);
            scaled.set_column(col, &(vk * self.eigenvalues[k]));
        }
        let m = &scaled * v.transpose();
        symmetrize(m)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `(λ−, λ+) = ((1 − √q)², (1 + √q)²)` for `q = N / T`.
pub fn mp_bounds(ratio: f64) -> (f64, f64) {
    let r = ratio.sqrt();
    ((1.0 - r).powi(2), (1.0 + r).powi(2))
}

/// Marchenko-Pastur eigenvalue density for `q = N / T`.
pub fn mp_density(lambda: f64, ratio: f64) -> f64 {
    let (lo, hi) = mp_bounds(ratio);
    if lambda <= lo || lambda >= hi || lambda <= 0.0 {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * ratio * lambda)
}

/// Cumulative Marchenko-Pastur distribution (continuous part, `q ≤ 1`).
///
/// Integrates the density after substituting `λ = λ− + (λ+ − λ−)(1 − cos θ)/2`,
/// which removes the square-root endpoint singularities.
pub fn mp_cdf(x: f64, ratio: f64) -> f64 {
    let (lo, hi) = mp_bounds(ratio);
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let half = (hi - lo) / 2.0;
    let theta_x = (1.0 - (x - lo) / half).clamp(-1.0, 1.0).acos();
    let panels = 2000;
    let h = theta_x / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let theta = (k as f64 + 0.5) * h;
        let lambda = lo + half * (1.0 - theta.cos());
        let s = theta.sin();
        sum += half * half * s * s / lambda;
    }
    (sum * h / (2.0 * PI * ratio)).clamp(0.0, 1.0)
}

/// Kolmogorov distance between the empirical distribution of `eigenvalues`
/// and the Marchenko-Pastur law.
pub fn mp_ks_distance(eigenvalues: &[f64], ratio: f64) -> f64 {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = mp_cdf(x, ratio);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Full eigendecomposition of `c`, estimated from `t_eff` samples.
pub fn eigendecompose(c: &CorrelationMatrix, t_eff: usize) -> Result<SpectralDecomposition> {
    decompose_symmetric(c.values(), t_eff)
}

/// Eigendecomposition of any symmetric matrix, with the band for `N / t_eff`.
pub fn decompose_symmetric(m: &DMatrix<f64>, t_eff: usize) -> Result<SpectralDecomposition> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Size(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if t_eff == 0 {
        return Err(Error::Size("t_eff must be positive".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    if t_eff < n {
        log::warn!("t_eff = {t_eff} < N = {n}: the noise band is unreliable");
    }
    let (values, vectors) = sorted_eigen(m)?;
    let ratio = n as f64 / t_eff as f64;
    let (lambda_minus, lambda_plus) = mp_bounds(ratio);
    Ok(SpectralDecomposition {
        lambda_market: values[0],
        eigenvalues: values,
        eigenvectors: vectors,
        lambda_plus,
        lambda_minus,
        ratio,
        t_eff,
    })
}

/// Eigenpairs sorted by descending eigenvalue; each vector's largest-magnitude
/// entry is made nonnegative.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let pivot = v.iter().enumerate().fold(
            0,
            |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
        );
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    Ok((values, vectors))
}

/// How many eigenvalues went into each component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub random: usize,
    pub group: usize,
    pub market: usize,
}

/// `C = C_random + C_group + C_market`.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    pub c_random: DMatrix<f64>,
    pub c_group: DMatrix<f64>,
    pub c_market: DMatrix<f64>,
    pub counts: ModeCounts,
    /// No eigenvalue lies above the noise band.
    pub no_structure: bool,
}

impl ModeDecomposition {
    /// True when the group component is empty.
    pub fn group_is_empty(&self) -> bool {
        self.counts.group == 0
    }
}

/// Splits the spectrum into noise (`λ ≤ λ+`, including everything below
/// `λ−`), the single largest eigenvalue as the market mode when it clears
/// `λ+`, and the remaining above-band eigenvalues as the group mode.
pub fn decompose_modes(spec: &SpectralDecomposition) -> ModeDecomposition {
    let n = spec.n();
    let above: Vec<usize> = (0..n)
        .filter(|&k| spec.eigenvalues[k] > spec.lambda_plus)
        .collect();
    let random: Vec<usize> = (0..n)
        .filter(|&k| spec.eigenvalues[k] <= spec.lambda_plus)
        .collect();
    let (market, group): (&[usize], &[usize]) = match above.split_first() {
        Some((first, rest)) => (std::slice::from_ref(first), rest),
        None => (&[], &[]),
    };
    ModeDecomposition {
        c_random: spec.partial_sum(&random),
        c_group: spec.partial_sum(group),
        c_market: spec.partial_sum(market),
        counts: ModeCounts {
            random: random.len(),
            group: group.len(),
            market: market.len(),
        },
        no_structure: above.is_empty(),
    }
}

/// Eigenvalue histogram with the Marchenko-Pastur curve at the bin centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumHistogram {
    pub bin_edges: Vec<f64>,
    pub empirical_density: Vec<f64>,
    pub mp_density: Vec<f64>,
    /// Excluded from the histogram, reported here instead.
    pub lambda_market: f64,
    /// Eigenvalues that went into the histogram (all but the largest).
    pub n_binned: usize,
}

/// How [`SpectrumHistogram::empirical_density`] is normalized.
pub const HISTOGRAM_NORMALIZATION: &str =
    "density over all eigenvalues except the largest; integrates to 1 over the bin range";

impl SpectrumHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }
}

/// Histogram of every eigenvalue except the largest over
/// `[min(λ_min, λ−), max(λ_max, λ+)]`.
pub fn spectrum_histogram(spec: &SpectralDecomposition, bins: usize) -> Result<SpectrumHistogram> {
    if bins < 10 {
        return Err(Error::Config(format!("need at least 10 bins, got {bins}")));
    }
    let bulk = &spec.eigenvalues[1..];
    let lo = bulk.iter().copied().fold(spec.lambda_minus, f64::min);
    let hi = bulk.iter().copied().fold(spec.lambda_plus, f64::max);
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0usize; bins];
    for &l in bulk {
        let k = (((l - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let scale = if bulk.is_empty() {
        0.0
    } else {
        1.0 / (bulk.len() as f64 * width)
    };
    let empirical_density = counts.iter().map(|&c| c as f64 * scale).collect();
    let mp = bin_edges
        .windows(2)
        .map(|w| mp_density(0.5 * (w[0] + w[1]), spec.ratio))
        .collect();
    Ok(SpectrumHistogram {
        bin_edges,
        empirical_density,
        mp_density: mp,
        lambda_market: spec.lambda_market,
        n_binned: bulk.len(),
    })
}
