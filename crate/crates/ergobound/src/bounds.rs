//! Upper and lower bounds on the per-user ergodic rate.
//!
//! With g = (g_0, …, g_{K-1}) the effective coefficients of the reference
//! user (own index 0), interference I = Σ_{k'≠0}|g_{k'}|², and noise power
//! N0, the per-user bounds in nats are
//!
//! - UB  = E[ln(1 + |g_0|²/(N0 + I))]
//! - LB1 = ln(1 + |E g_0|²/(N0 + Var g_0 + E I))
//! - LB2 = UB − (1/T)·Σ_k ln(1 + T·Var(g_k)/N0)
//! - LB3 = E[ln(1 + |g_0|²/(N0 + E[I|g_0]))] − (1/T)·ln(1 + T·Var(g_0)/(N0 + E I))
//!         + E[ln(1 + I/N0)] − ln(1 + E I/N0)
//!
//! All internal arithmetic stays in nats; the single conversion to
//! bits/channel-use happens when a [`BoundResult`] is assembled. LB2 may be
//! negative at short coherence lengths and is reported as computed.

use crate::channel::{CsiModel, PrecoderKind, SystemConfig};
use crate::error::{Error, Result};
use crate::moments::{ConditionalMomentCurve, MomentSet, MomentSource};
use crate::montecarlo::SampleRecord;
use crate::special::log_moment_gamma;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Minimum Monte Carlo sample count for the expectation-based bounds.
pub const MIN_BOUND_SAMPLES: usize = 2;

// ---------------------------------------------------------------------------
// identifiers and results
// ---------------------------------------------------------------------------

/// Bound identity, ordered the way result tables are sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundId {
    Ub,
    Lb1,
    Lb2,
    Lb3,
}

impl BoundId {
    pub const ALL: [BoundId; 4] = [BoundId::Ub, BoundId::Lb1, BoundId::Lb2, BoundId::Lb3];

    pub fn token(self) -> &'static str {
        match self {
            BoundId::Ub => "ub",
            BoundId::Lb1 => "lb1",
            BoundId::Lb2 => "lb2",
            BoundId::Lb3 => "lb3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ub" => Ok(BoundId::Ub),
            "lb1" => Ok(BoundId::Lb1),
            "lb2" => Ok(BoundId::Lb2),
            "lb3" => Ok(BoundId::Lb3),
            other => Err(Error::Config(format!("unknown bound '{other}'"))),
        }
    }
}

/// How a number was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    MonteCarlo,
}

impl Method {
    pub fn token(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// One evaluated bound, in bits/channel-use per user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub bound: BoundId,
    pub method: Method,
    /// Per-user rate in bits/channel-use.
    pub rate: f64,
    /// Standard error of `rate` (0 where the value is deterministic).
    pub stderr: f64,
}

impl BoundResult {
    fn from_nats(bound: BoundId, method: Method, nats: f64, stderr_nats: f64) -> Self {
        Self {
            bound,
            method,
            rate: nats * LOG2_E,
            stderr: stderr_nats * LOG2_E,
        }
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

fn mean_and_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> Result<(f64, f64)> {
    let n = values.len();
    if n < MIN_BOUND_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_BOUND_SAMPLES as u64,
            got: n as u64,
        });
    }
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let se = (ss / (nf - 1.0)).sqrt() / nf.sqrt();
    Ok((mean, se))
}

/// UB by sample average of ln(1 + |g_0|²/(N0 + I)).
pub fn ub_monte_carlo(records: &[SampleRecord], n0: f64) -> Result<BoundResult> {
    let (mean, se) = mean_and_se(
        records
            .iter()
            .map(move |r| (r.own.norm_sqr() / (n0 + r.interference)).ln_1p()),
    )?;
    Ok(BoundResult::from_nats(BoundId::Ub, Method::MonteCarlo, mean, se))
}

/// LB1 in nats from first/second moments (deterministic given the moments).
pub fn lb1_nats(moments: &MomentSet, n0: f64) -> f64 {
    let signal = moments.mean_gkk.norm_sqr();
    let denom = n0 + moments.var_gkk + moments.interference_power();
    (signal / denom).ln_1p()
}

/// LB1; closed form exactly when the moments are analytic.
pub fn lb1_from_moments(moments: &MomentSet, n0: f64) -> BoundResult {
    let method = match moments.source {
        MomentSource::Analytic => Method::ClosedForm,
        MomentSource::Empirical => Method::MonteCarlo,
    };
    BoundResult::from_nats(BoundId::Lb1, method, lb1_nats(moments, n0), 0.0)
}

/// The LB2 coherence penalty (1/T)·Σ_k ln(1 + T·Var(g_k)/N0) in nats; the
/// sum runs over all K coefficients, the own one included.
pub fn lb2_penalty_nats(moments: &MomentSet, t: u32, n0: f64) -> f64 {
    let tf = t as f64;
    moments
        .var_cross
        .iter()
        .map(|&v| (tf * v / n0).ln_1p())
        .sum::<f64>()
        / tf
}

/// LB2 from an already-evaluated UB (they share the same sample set, so the
/// penalty subtraction keeps the UB's standard error).
pub fn lb2_from_ub(ub: &BoundResult, moments: &MomentSet, t: u32, n0: f64) -> BoundResult {
    let penalty_bits = lb2_penalty_nats(moments, t, n0) * LOG2_E;
    let method = if ub.method == Method::ClosedForm && moments.source == MomentSource::Analytic {
        Method::ClosedForm
    } else {
        Method::MonteCarlo
    };
    BoundResult {
        bound: BoundId::Lb2,
        method,
        rate: ub.rate - penalty_bits,
        stderr: ub.stderr,
    }
}

/// The four LB3 pieces (bits/channel-use) plus the standard error of the
/// sampled part.
#[derive(Debug, Clone, Copy)]
pub struct Lb3Terms {
    /// E[log(1 + |g_0|²/(N0 + E[I|g_0]))].
    pub term1: f64,
    /// (1/T)·log(1 + T·Var(g_0)/(N0 + E I)).
    pub term2: f64,
    /// E[log(1 + I/N0)].
    pub term3: f64,
    /// log(1 + E I/N0).
    pub term4: f64,
    /// Standard error of term1 alone.
    pub se_term1: f64,
    /// Standard error of term3 alone.
    pub se_term3: f64,
    /// Standard error of term1 + term3 (evaluated on common samples).
    pub se_sampled: f64,
}

/// LB3 by Monte Carlo: the two expectations run on the same sample set
/// (common random numbers), the two corrections are deterministic given the
/// moments.
pub fn lb3_monte_carlo(
    records: &[SampleRecord],
    curve: &ConditionalMomentCurve,
    moments: &MomentSet,
    t: u32,
    n0: f64,
) -> Result<(BoundResult, Lb3Terms)> {
    let (t1, se1) = mean_and_se(records.iter().map(|r| {
        let own = r.own.norm_sqr();
        (own / (n0 + curve.eval(own))).ln_1p()
    }))?;
    let (t3, se3) = mean_and_se(records.iter().map(|r| (r.interference / n0).ln_1p()))?;
    // Per-sample sum for the joint standard error.
    let (_, se13) = mean_and_se(records.iter().map(|r| {
        let own = r.own.norm_sqr();
        (own / (n0 + curve.eval(own))).ln_1p() + (r.interference / n0).ln_1p()
    }))?;
    let ei = moments.interference_power();
    let tf = t as f64;
    let t2 = (tf * moments.var_gkk / (n0 + ei)).ln_1p() / tf;
    let t4 = (ei / n0).ln_1p();
    let nats = t1 - t2 + t3 - t4;
    let result = BoundResult::from_nats(BoundId::Lb3, Method::MonteCarlo, nats, se13);
    let terms = Lb3Terms {
        term1: t1 * LOG2_E,
        term2: t2 * LOG2_E,
        term3: t3 * LOG2_E,
        term4: t4 * LOG2_E,
        se_term1: se1 * LOG2_E,
        se_term3: se3 * LOG2_E,
        se_sampled: se13 * LOG2_E,
    };
    Ok((result, terms))
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

/// SINR-style arguments of the Gamma log-moments in the closed forms.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormParams {
    /// (M+K-1)/(MK)·snr — conjugate signal-plus-interference argument.
    pub gamma1: f64,
    /// (K-1)/(MK)·snr — conjugate interference argument.
    pub gamma2: f64,
    /// snr/K — zero-forcing signal argument.
    pub gamma3: f64,
    /// Gamma order M-K+1 of the zero-forcing own-power distribution.
    pub zf_order: u32,
}

impl ClosedFormParams {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let (m, k) = (cfg.m as f64, cfg.k as f64);
        let snr = cfg.snr();
        Ok(Self {
            gamma1: (m + k - 1.0) / (m * k) * snr,
            gamma2: (k - 1.0) / (m * k) * snr,
            gamma3: snr / k,
            zf_order: (cfg.m.saturating_sub(cfg.k) + 1) as u32,
        })
    }
}

/// Which bounds have closed forms at a given operating point: all four under
/// perfect zero forcing; LB1 and (a relaxed) LB2 under perfect conjugate
/// beamforming; none with estimated CSI.
pub fn closed_form_available(cfg: &SystemConfig, bound: BoundId) -> bool {
    if cfg.csi != CsiModel::Perfect {
        return false;
    }
    match cfg.precoder {
        PrecoderKind::Zfbf => true,
        PrecoderKind::ConjBf => matches!(bound, BoundId::Lb1 | BoundId::Lb2),
    }
}

/// Closed-form UB under perfect zero forcing: |g_0|² = (E/K)·X with
/// X ~ Gamma(M-K+1, 1) and no interference, so UB = E[ln(1 + snr/K·X)].
pub fn ub_closed_zf(cfg: &SystemConfig) -> Result<BoundResult> {
    require(cfg, PrecoderKind::Zfbf, "closed-form upper bound")?;
    let p = ClosedFormParams::new(cfg)?;
    let nats = log_moment_gamma(p.zf_order, p.gamma3)?;
    Ok(BoundResult::from_nats(BoundId::Ub, Method::ClosedForm, nats, 0.0))
}

/// Closed-form conditional-SINR expectation under perfect conjugate
/// beamforming (the sampled part of LB3): with |g_0|² = (E/K)·Y,
/// Y ~ Gamma(M, 1), and E[I | g_0] = (K-1)/M·|g_0|², the expectation splits
/// into E[ln(1 + γ₁Y)] − E[ln(1 + γ₂Y)].
pub fn conj_conditional_sinr_nats(cfg: &SystemConfig) -> Result<f64> {
    require(cfg, PrecoderKind::ConjBf, "conjugate conditional closed form")?;
    let p = ClosedFormParams::new(cfg)?;
    let m = cfg.m as u32;
    Ok(log_moment_gamma(m, p.gamma1)? - log_moment_gamma(m, p.gamma2)?)
}

/// Closed-form LB1 under perfect CSI (either precoder), via the analytic
/// moments.
pub fn lb1_closed(cfg: &SystemConfig) -> Result<BoundResult> {
    let m = crate::moments::analytic_moments(cfg)?;
    Ok(lb1_from_moments(&m, cfg.n0))
}

/// Closed-form LB2 under perfect CSI. Zero forcing is exact
/// (UB_closed − penalty). Conjugate beamforming replaces the UB by the
/// conditional-SINR expectation, which can only lower the value — the result
/// is a slightly weaker but still valid lower bound.
pub fn lb2_closed(cfg: &SystemConfig) -> Result<BoundResult> {
    let moments = crate::moments::analytic_moments(cfg)?;
    let head_nats = match cfg.precoder {
        PrecoderKind::Zfbf => {
            let p = ClosedFormParams::new(cfg)?;
            log_moment_gamma(p.zf_order, p.gamma3)?
        }
        PrecoderKind::ConjBf => conj_conditional_sinr_nats(cfg)?,
    };
    let nats = head_nats - lb2_penalty_nats(&moments, cfg.t, cfg.n0);
    Ok(BoundResult::from_nats(BoundId::Lb2, Method::ClosedForm, nats, 0.0))
}

/// Closed-form LB3 under perfect zero forcing: interference vanishes, so
/// LB3 = UB − (1/T)·ln(1 + T·Var(g_0)/N0).
pub fn lb3_closed_zf(cfg: &SystemConfig) -> Result<BoundResult> {
    require(cfg, PrecoderKind::Zfbf, "closed-form tightest lower bound")?;
    let moments = crate::moments::analytic_moments(cfg)?;
    let p = ClosedFormParams::new(cfg)?;
    let tf = cfg.t as f64;
    let nats = log_moment_gamma(p.zf_order, p.gamma3)?
        - (tf * moments.var_gkk / cfg.n0).ln_1p() / tf;
    Ok(BoundResult::from_nats(BoundId::Lb3, Method::ClosedForm, nats, 0.0))
}

fn require(cfg: &SystemConfig, precoder: PrecoderKind, what: &str) -> Result<()> {
    if cfg.csi != CsiModel::Perfect {
        return Err(Error::UnsupportedConfig(format!(
            "{what} needs perfect channel knowledge"
        )));
    }
    if cfg.precoder != precoder {
        return Err(Error::UnsupportedConfig(format!(
            "{what} applies to {} only",
            precoder.token()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
