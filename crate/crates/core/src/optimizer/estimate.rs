//! Sample-average estimates of the expected objective and gradient norm.

use rayon::prelude::*;

use super::MeshState;
use crate::error::{Error, Result};
use crate::fem::{l2_norm_vector, SolverOptions};
use crate::shape_calculus::TargetGradient;
use crate::stochastics::{stream, ScenarioDistribution, StreamKey};

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    /// Mean objective over the samples.
    pub j_hat: f64,
    /// Mean `|V|_L2` over the same samples.
    pub v_hat: f64,
    /// Per-sample `(J, |V|_L2)` in sample order.
    pub samples: Vec<(f64, f64)>,
}

/// Averages over `m` scenarios drawn from the streams `(estimate, n, l)`.
/// Samples are evaluated in parallel and reduced in index order, so the
/// result does not depend on the thread count.
pub fn estimate_expectation(
    state: &MeshState,
    dist: &ScenarioDistribution,
    seed: u64,
    n: usize,
    m: usize,
    mode: TargetGradient,
    opts: &SolverOptions,
) -> Result<Estimate> {
    if m == 0 {
        return Err(Error::Parameter("estimate needs at least one sample".into()));
    }
    let n_incl = state.mesh().max_label() as usize;
    let samples = (0..m)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream(seed, StreamKey::estimate(n, l));
            let s = dist.sample(n_incl, &mut rng)?;
            let (ev, def) = state.gradient(&s, mode, opts)?;
            Ok((ev.pde.objective, l2_norm_vector(state.mesh(), &def.field)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut j, mut v) = (0.0, 0.0);
    for &(a, b) in &samples {
        j += a;
        v += b;
    }
    Ok(Estimate { j_hat: j / m as f64, v_hat: v / m as f64, samples })
}
