//! Signal matrix to modularity context, the chain every command runs.

use crate::correlation::{pearson, CorrelationMatrix};
use crate::error::Result;
use crate::ingest::SignalMatrix;
use crate::modularity::{make_context, ModularityContext};
use crate::spectra::{decompose_modes, eigendecompose, ModeDecomposition, SpectralDecomposition};

/// Every intermediate product for one signal matrix.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub correlation: CorrelationMatrix,
    pub spectrum: SpectralDecomposition,
    pub modes: ModeDecomposition,
    pub context: ModularityContext,
}

/// Correlation, spectrum, mode split and modularity context of `signal`,
/// using its length as the sample size.
pub fn analyze(signal: &SignalMatrix) -> Result<Analysis> {
    let correlation = pearson(signal)?;
    let spectrum = eigendecompose(&correlation, correlation.sample_length())?;
    let modes = decompose_modes(&spectrum);
    let context = make_context(&modes, &correlation)?;
    Ok(Analysis {
        correlation,
        spectrum,
        modes,
        context,
    })
}
