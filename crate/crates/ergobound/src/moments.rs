//! First- and second-order statistics of the effective coefficients
//! g_{uk'} = √E_{k'}·h_u^H v_{k'}: analytic values where the geometry gives
//! them in closed form (perfect CSI), unbiased empirical estimates otherwise,
//! and the conditional interference profile E[I | g_uu] used by the tightest
//! lower bound.

use crate::channel::{CsiModel, EffectiveChannel, PrecoderKind, SystemConfig};
use crate::error::{Error, Result};
use crate::special::gamma_ratio_half;
use num_complex::Complex64;

/// Minimum sample count before empirical moments are considered usable.
pub const MIN_MOMENT_SAMPLES: u64 = 1000;

/// Minimum samples per bin of a conditional-moment curve.
pub const MIN_BIN_SAMPLES: usize = 100;

/// Default number of quantile bins for conditional curves.
pub const DEFAULT_BINS: usize = 50;

/// Where a [`MomentSet`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    Analytic,
    Empirical,
}

/// Moments of the effective coefficients for one (reference) user.
///
/// Conventions: `pow_cross[u] = 0` for the user's own index, so summing
/// `pow_cross` gives the mean total interference power; `var_cross[u]`
/// holds the own-coefficient variance, so summing the variance-based
/// penalty over `var_cross` covers all K coefficients.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub mean_gkk: Complex64,
    /// E[|g_uu|²].
    pub pow_gkk: f64,
    /// Var(g_uu) = E[|g_uu|²] - |E[g_uu]|².
    pub var_gkk: f64,
    /// E[|g_uk'|²] per coefficient, zero at the own index.
    pub pow_cross: Vec<f64>,
    /// Var(g_uk') per coefficient, `var_gkk` at the own index.
    pub var_cross: Vec<f64>,
    pub source: MomentSource,
}

impl MomentSet {
    /// Mean total interference power Σ_{k'≠u} E[|g_uk'|²].
    pub fn interference_power(&self) -> f64 {
        self.pow_cross.iter().sum()
    }

    pub fn users(&self) -> usize {
        self.pow_cross.len()
    }
}

// ---------------------------------------------------------------------------
// analytic moments (perfect CSI)
// ---------------------------------------------------------------------------

/// Closed-form moments under perfect CSI.
///
/// Conjugate: g_uu = √(E/K)·‖h_u‖ with ‖h_u‖² ~ Gamma(M, 1), so
/// E[g_uu] = √(E/K)·Γ(M+1/2)/Γ(M) and E[|g_uu|²] = (E/K)·M; each cross
/// coefficient is CN(0, E/K). Zero forcing: |g_uu|² = (E/K)·X with
/// X ~ Gamma(M-K+1, 1) and all cross coefficients vanish.
pub fn analytic_moments(cfg: &SystemConfig) -> Result<MomentSet> {
    if cfg.csi != CsiModel::Perfect {
        return Err(Error::UnsupportedConfig(
            "analytic moments are only available under perfect channel knowledge".into(),
        ));
    }
    let e = cfg.user_energy();
    let k = cfg.k;
    let user = 0usize;
    match cfg.precoder {
        PrecoderKind::ConjBf => {
            let ratio = gamma_ratio_half(cfg.m as u32)?;
            let mean = e.sqrt() * ratio;
            let pow = e * cfg.m as f64;
            let var = pow - mean * mean;
            let mut pow_cross = vec![e; k];
            pow_cross[user] = 0.0;
            let mut var_cross = vec![e; k];
            var_cross[user] = var;
            Ok(MomentSet {
                mean_gkk: Complex64::new(mean, 0.0),
                pow_gkk: pow,
                var_gkk: var,
                pow_cross,
                var_cross,
                source: MomentSource::Analytic,
            })
        }
        PrecoderKind::Zfbf => {
            let n = (cfg.m - cfg.k + 1) as u32;
            let ratio = gamma_ratio_half(n)?;
            let mean = e.sqrt() * ratio;
            let pow = e * n as f64;
            let var = pow - mean * mean;
            let mut var_cross = vec![0.0; k];
            var_cross[user] = var;
            Ok(MomentSet {
                mean_gkk: Complex64::new(mean, 0.0),
                pow_gkk: pow,
                var_gkk: var,
                pow_cross: vec![0.0; k],
                var_cross,
                source: MomentSource::Analytic,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// empirical moments
// ---------------------------------------------------------------------------

/// Streaming accumulator over effective-channel samples; mergeable across
/// chunks so parallel reductions stay deterministic.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    n: u64,
    user: usize,
    sum: Vec<Complex64>,
    sum_sq: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(users: usize, user: usize) -> Self {
        Self {
            n: 0,
            user,
            sum: vec![Complex64::new(0.0, 0.0); users],
            sum_sq: vec![0.0; users],
        }
    }

    pub fn push(&mut self, eff: &EffectiveChannel) {
        debug_assert_eq!(eff.g.len(), self.sum.len());
        debug_assert_eq!(eff.user_index, self.user);
        self.n += 1;
        for (j, &g) in eff.g.iter().enumerate() {
            self.sum[j] += g;
            self.sum_sq[j] += g.norm_sqr();
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(self.user, other.user);
        assert_eq!(self.sum.len(), other.sum.len());
        self.n += other.n;
        for j in 0..self.sum.len() {
            self.sum[j] += other.sum[j];
            self.sum_sq[j] += other.sum_sq[j];
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unbiased moments; errors until [`MIN_MOMENT_SAMPLES`] are seen.
    pub fn finalize(&self) -> Result<MomentSet> {
        if self.n < MIN_MOMENT_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_MOMENT_SAMPLES,
                got: self.n,
            });
        }
        let n = self.n as f64;
        let users = self.sum.len();
        let var_of = |j: usize| -> f64 {
            // (Σ|g|² - |Σg|²/n) / (n-1), floored at zero.
            ((self.sum_sq[j] - self.sum[j].norm_sqr() / n) / (n - 1.0)).max(0.0)
        };
        let mean_gkk = self.sum[self.user] / n;
        let pow_gkk = self.sum_sq[self.user] / n;
        let var_gkk = var_of(self.user);
        let mut pow_cross = vec![0.0; users];
        let mut var_cross = vec![0.0; users];
        for j in 0..users {
            if j == self.user {
                var_cross[j] = var_gkk;
            } else {
                pow_cross[j] = self.sum_sq[j] / n;
                var_cross[j] = var_of(j);
            }
        }
        Ok(MomentSet {
            mean_gkk,
            pow_gkk,
            var_gkk,
            pow_cross,
            var_cross,
            source: MomentSource::Empirical,
        })
    }
}

// ---------------------------------------------------------------------------
// conditional interference
// ---------------------------------------------------------------------------

/// E[I | g_uu] as a function of the own-coefficient power |g_uu|².
#[derive(Debug, Clone)]
pub enum ConditionalMomentCurve {
    /// Conjugate beamforming under perfect CSI: E[I | g] = (K-1)/M·|g|²
    /// (interfering beams are isotropic given h_u, so each contributes
    /// ‖h_u‖²·E/(K·M)).
    Linear { coeff: f64 },
    /// Interference independent of (or absent given) the own coefficient.
    Constant { value: f64 },
    /// Empirical quantile-binned profile.
    Binned(BinnedCurve),
}

impl ConditionalMomentCurve {
    pub fn eval(&self, own_power: f64) -> f64 {
        match self {
            ConditionalMomentCurve::Linear { coeff } => coeff * own_power,
            ConditionalMomentCurve::Constant { value } => *value,
            ConditionalMomentCurve::Binned(curve) => curve.eval(own_power),
        }
    }

    /// Analytic conditional curve under perfect CSI.
    pub fn analytic(cfg: &SystemConfig) -> Result<Self> {
        if cfg.csi != CsiModel::Perfect {
            return Err(Error::UnsupportedConfig(
                "analytic conditional interference needs perfect channel knowledge".into(),
            ));
        }
        Ok(match cfg.precoder {
            PrecoderKind::ConjBf => ConditionalMomentCurve::Linear {
                coeff: (cfg.k as f64 - 1.0) / cfg.m as f64,
            },
            PrecoderKind::Zfbf => ConditionalMomentCurve::Constant { value: 0.0 },
        })
    }
}

/// Piecewise-constant conditional mean over quantile bins of the
/// conditioning variable, clamped at both ends.
#[derive(Debug, Clone)]
pub struct BinnedCurve {
    /// Upper edge of each bin except the last (length = bins - 1).
    edges: Vec<f64>,
    /// Conditional mean within each bin (length = bins).
    values: Vec<f64>,
}

impl BinnedCurve {
    /// Build from (conditioning value, response) pairs using equal-count
    /// bins; bin count shrinks so every bin keeps [`MIN_BIN_SAMPLES`].
    pub fn from_pairs(pairs: &[(f64, f64)], max_bins: usize) -> Result<Self> {
        if pairs.len() < MIN_BIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_BIN_SAMPLES as u64,
                got: pairs.len() as u64,
            });
        }
        let bins = max_bins.max(1).min(pairs.len() / MIN_BIN_SAMPLES).max(1);
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let mut edges = Vec::with_capacity(bins - 1);
        let mut values = Vec::with_capacity(bins);
        for b in 0..bins {
            let lo = b * n / bins;
            let hi = (b + 1) * n / bins;
            let mean = sorted[lo..hi].iter().map(|p| p.1).sum::<f64>() / (hi - lo) as f64;
            values.push(mean);
            if b + 1 < bins {
                edges.push(sorted[hi].0);
            }
        }
        Ok(Self { edges, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.edges.partition_point(|&e| e <= x);
        self.values[idx]
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
