//! Seeded random streams and scenario sampling.
//!
//! Every stream is a ChaCha8 generator whose 256-bit seed is derived from
//! `(master seed, purpose, iteration, sample)` through a SplitMix64 chain.
//! Two draws with the same key are bit-identical no matter which thread
//! performs them or in which order keys are visited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Acceptance probability below which rejection sampling gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

pub type Stream = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// The scenario driving iteration `n` of the optimizer.
    Step,
    /// Sample `l` of the expectation estimator at iteration `n`.
    Estimate,
    Other(u64),
}

impl Purpose {
    fn id(self) -> u64 {
        match self {
            Purpose::Step => 1,
            Purpose::Estimate => 2,
            Purpose::Other(k) => 0x100 + k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub purpose: Purpose,
    pub iteration: u64,
    pub sample: u64,
}

impl StreamKey {
    pub fn step(iteration: usize) -> Self {
        StreamKey { purpose: Purpose::Step, iteration: iteration as u64, sample: 0 }
    }

    pub fn estimate(iteration: usize, sample: usize) -> Self {
        StreamKey { purpose: Purpose::Estimate, iteration: iteration as u64, sample: sample as u64 }
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `key` under `master_seed`.
pub fn stream(master_seed: u64, key: StreamKey) -> Stream {
    let mut state = master_seed;
    for word in [key.purpose.id(), key.iteration, key.sample] {
        state = splitmix(&mut state) ^ word.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Normal distribution with mean `mean` and standard deviation `std`
/// conditioned on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncNormalParams {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl TruncNormalParams {
    pub fn new(mean: f64, std: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::Distribution(format!("standard deviation must be positive, got {std}")));
        }
        if !(lo < hi) {
            return Err(Error::Distribution(format!("empty window [{lo}, {hi}]")));
        }
        if !mean.is_finite() || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Distribution("non-finite parameter".into()));
        }
        Ok(TruncNormalParams { mean, std, lo, hi })
    }

    /// Probability mass of the untruncated normal inside the window.
    pub fn acceptance(&self) -> f64 {
        let za = (self.lo - self.mean) / self.std;
        let zb = (self.hi - self.mean) / self.std;
        if za > 0.0 {
            upper_tail(za) - upper_tail(zb)
        } else {
            normal_cdf(zb) - normal_cdf(za)
        }
    }

    /// Analytic CDF of the truncated distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let z = |v: f64| (v - self.mean) / self.std;
        (normal_cdf(z(x)) - normal_cdf(z(self.lo))) / self.acceptance()
    }
}

/// Rejection sampling from the untruncated normal. A window narrower than
/// `1e-9` standard deviations collapses onto its midpoint.
pub fn sample_truncated_normal<R: Rng + ?Sized>(p: &TruncNormalParams, rng: &mut R) -> Result<f64> {
    if p.hi - p.lo <= 1e-9 * p.std {
        return Ok(0.5 * (p.lo + p.hi));
    }
    let acc = p.acceptance();
    if !(acc >= MIN_ACCEPTANCE) {
        return Err(Error::TailTooFar(acc));
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = p.mean + p.std * z;
        if (p.lo..=p.hi).contains(&x) {
            return Ok(x);
        }
    }
}

/// A scalar input that is either fixed or random.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Component {
    Const(f64),
    TruncNormal(TruncNormalParams),
}

impl Component {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            Component::Const(v) => Ok(*v),
            Component::TruncNormal(p) => sample_truncated_normal(p, rng),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Component::Const(_))
    }

    pub fn mean(&self) -> f64 {
        match self {
            Component::Const(v) => *v,
            Component::TruncNormal(p) => p.mean,
        }
    }
}

/// One realization of the random inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// `kappa[0]` for the outer region, `kappa[i]` for inclusion `i`.
    pub kappa: Vec<f64>,
    /// Constant Neumann flux on the outer boundary.
    pub g: f64,
    /// Constant volume source.
    pub f: f64,
}

impl Scenario {
    pub fn new(kappa: Vec<f64>, g: f64, f: f64) -> Result<Self> {
        if kappa.is_empty() || kappa.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::Parameter(format!("conductivities must be positive: {kappa:?}")));
        }
        Ok(Scenario { kappa, g, f })
    }

    /// `kappa0` outside, `kappa_int` in each of `n_inclusions` inclusions.
    pub fn two_phase(kappa0: f64, kappa_int: f64, n_inclusions: usize, g: f64, f: f64) -> Result<Self> {
        let mut kappa = vec![kappa_int; n_inclusions + 1];
        kappa[0] = kappa0;
        Scenario::new(kappa, g, f)
    }

    pub fn kappa_of(&self, label: u32) -> f64 {
        let l = label as usize;
        *self.kappa.get(l).unwrap_or_else(|| self.kappa.last().expect("non-empty kappa"))
    }
}

/// Distribution of [`Scenario`]s as a product of independent components.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDistribution {
    pub kappa0: Component,
    pub kappa_int: Component,
    pub g: Component,
    pub f: Component,
    /// Tie every inclusion to a single conductivity draw.
    pub common_inclusion_kappa: bool,
}

impl ScenarioDistribution {
    pub fn deterministic(kappa0: f64, kappa_int: f64, g: f64, f: f64) -> Self {
        ScenarioDistribution {
            kappa0: Component::Const(kappa0),
            kappa_int: Component::Const(kappa_int),
            g: Component::Const(g),
            f: Component::Const(f),
            common_inclusion_kappa: true,
        }
    }

    /// Truncated normals around `(1.5, 4, 10)` with windows `[1,2]`,
    /// `[3,5]`, `[9,11]` and a common standard deviation; `f = 0`.
    pub fn truncated(std: f64) -> Result<Self> {
        Ok(ScenarioDistribution {
            kappa0: Component::TruncNormal(TruncNormalParams::new(1.5, std, 1.0, 2.0)?),
            kappa_int: Component::TruncNormal(TruncNormalParams::new(4.0, std, 3.0, 5.0)?),
            g: Component::TruncNormal(TruncNormalParams::new(10.0, std, 9.0, 11.0)?),
            f: Component::Const(0.0),
            common_inclusion_kappa: true,
        })
    }

    pub fn is_deterministic(&self) -> bool {
        [self.kappa0, self.kappa_int, self.g, self.f].iter().all(Component::is_deterministic)
    }

    /// Draws every random component independently, in the fixed order
    /// kappa0, inclusion kappas, g, f.
    pub fn sample<R: Rng + ?Sized>(&self, n_inclusions: usize, rng: &mut R) -> Result<Scenario> {
        let mut kappa = Vec::with_capacity(n_inclusions + 1);
        kappa.push(self.kappa0.sample(rng)?);
        if self.common_inclusion_kappa {
            let k = self.kappa_int.sample(rng)?;
            kappa.extend(std::iter::repeat_n(k, n_inclusions));
        } else {
            for _ in 0..n_inclusions {
                kappa.push(self.kappa_int.sample(rng)?);
            }
        }
        let g = self.g.sample(rng)?;
        let f = self.f.sample(rng)?;
        Scenario::new(kappa, g, f)
    }
}
