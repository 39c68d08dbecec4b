//! System model: i.i.d. Rayleigh block-fading downlink with M transmit
//! antennas and K single-antenna users, conjugate or zero-forcing
//! beamforming, and perfect or pilot-based MMSE channel knowledge at the
//! transmitter.
//!
//! Randomness contract: sample index s uses `ChaCha8Rng` seeded with the run
//! seed on stream s. Within a sample the channel matrix is drawn
//! column-by-column, each entry real part then imaginary part, scaled by
//! 1/√2; the pilot-noise matrix (when CSI is estimated) follows in the same
//! order from the same stream. This makes every sample reproducible in
//! isolation regardless of chunking or thread count.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Cholesky};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Linear precoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Conjugate (matched-filter) beamforming: v_k ∝ ĥ_k.
    ConjBf,
    /// Zero-forcing beamforming: v_k ∝ column k of Ĥ(Ĥ^H Ĥ)^{-1}.
    Zfbf,
}

impl PrecoderKind {
    pub fn token(self) -> &'static str {
        match self {
            PrecoderKind::ConjBf => "conjbf",
            PrecoderKind::Zfbf => "zfbf",
        }
    }
}

/// Transmitter channel-knowledge model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiModel {
    /// The transmitter precodes on the true channel.
    Perfect,
    /// The transmitter precodes on the MMSE estimate from uplink pilots
    /// received at the data SNR.
    PilotMmse,
}

impl CsiModel {
    pub fn token(self) -> &'static str {
        match self {
            CsiModel::Perfect => "perfect",
            CsiModel::PilotMmse => "pilot_mmse",
        }
    }
}

/// Full simulation configuration for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas M.
    pub m: usize,
    /// Users K.
    pub k: usize,
    /// Coherence block length T in channel uses.
    pub t: u32,
    /// Total transmit energy per channel use.
    pub etx: f64,
    /// Noise variance at each receiver.
    pub n0: f64,
    pub precoder: PrecoderKind,
    pub csi: CsiModel,
    pub seed: u64,
    pub samples: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config("m and k must be at least 1".into()));
        }
        if self.precoder == PrecoderKind::Zfbf && self.m < self.k {
            return Err(Error::UnsupportedConfig(format!(
                "zero-forcing needs m >= k, got m = {}, k = {}",
                self.m, self.k
            )));
        }
        if self.t == 0 {
            return Err(Error::Config("t must be at least 1".into()));
        }
        if !(self.etx > 0.0) || !self.etx.is_finite() {
            return Err(Error::Config(format!("etx must be positive, got {}", self.etx)));
        }
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(Error::Config(format!("n0 must be positive, got {}", self.n0)));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Transmit SNR etx/n0.
    pub fn snr(&self) -> f64 {
        self.etx / self.n0
    }

    /// Per-user share of the transmit energy (equal allocation).
    pub fn user_energy(&self) -> f64 {
        self.etx / self.k as f64
    }
}

// ---------------------------------------------------------------------------
// random draws
// ---------------------------------------------------------------------------

/// Independent generator for sample `index` under the run `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One CN(0, 1) scalar: (re + i·im)/√2 with re, im ~ N(0, 1).
#[inline]
pub fn draw_cn(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// m×k matrix of i.i.d. CN(0, 1) entries, drawn column-by-column.
pub fn draw_channel(m: usize, k: usize, rng: &mut impl Rng) -> CMat {
    let mut h = CMat::zeros(m, k);
    for j in 0..k {
        let col = h.col_mut(j);
        for entry in col.iter_mut() {
            *entry = draw_cn(rng);
        }
    }
    h
}

/// MMSE channel estimate from pilots observed at `snr`: with y = h + w/√snr
/// per entry, ĥ = snr/(1+snr)·y, so ĥ ~ CN(0, c) with c = snr/(1+snr) and
/// the estimation error h - ĥ ~ CN(0, 1-c) is uncorrelated with ĥ.
pub fn mmse_estimate(h: &CMat, snr: f64, rng: &mut impl Rng) -> CMat {
    let c = snr / (1.0 + snr);
    let sigma = (1.0 / snr).sqrt();
    let mut hhat = CMat::zeros(h.rows(), h.cols());
    for j in 0..h.cols() {
        let src = h.col(j);
        let dst = hhat.col_mut(j);
        for (d, &s) in dst.iter_mut().zip(src) {
            let w = draw_cn(rng);
            *d = c * (s + sigma * w);
        }
    }
    hhat
}

/// Channel knowledge the precoder acts on, per the CSI model. Draws the
/// pilot noise (PilotMmse) from `rng` immediately after the channel draw.
pub fn transmitter_csi(h: &CMat, cfg: &SystemConfig, rng: &mut impl Rng) -> CMat {
    match cfg.csi {
        CsiModel::Perfect => h.clone(),
        CsiModel::PilotMmse => mmse_estimate(h, cfg.snr(), rng),
    }
}

// ---------------------------------------------------------------------------
// precoders
// ---------------------------------------------------------------------------

/// Unit-norm beamforming vectors and the per-user energies that multiply
/// them.
#[derive(Debug, Clone)]
pub struct Precoder {
    /// m×k matrix whose column k is v_k with ‖v_k‖ = 1.
    pub vectors: CMat,
    /// Energy E_k assigned to user k.
    pub energies: Vec<f64>,
}

/// Conjugate beamforming: v_k = ĥ_k / ‖ĥ_k‖.
pub fn precode_conj(hhat: &CMat, etx: f64) -> Result<Precoder> {
    let (m, k) = (hhat.rows(), hhat.cols());
    let mut vectors = CMat::zeros(m, k);
    for j in 0..k {
        let n = linalg::norm_sq(hhat.col(j)).sqrt();
        if n == 0.0 {
            return Err(Error::DegenerateInput(format!("zero channel column {j}")));
        }
        let dst = vectors.col_mut(j);
        for (d, &s) in dst.iter_mut().zip(hhat.col(j)) {
            *d = s / n;
        }
    }
    Ok(Precoder {
        vectors,
        energies: vec![etx / k as f64; k],
    })
}

/// Zero-forcing beamforming: normalized columns of Ĥ(Ĥ^H Ĥ)^{-1}. Uses the
/// Gram-Cholesky route for modest user counts and Householder QR above
/// [`ZF_QR_THRESHOLD`], where the squared Gram conditioning starts to bite.
pub fn precode_zf(hhat: &CMat, etx: f64) -> Result<Precoder> {
    if hhat.cols() > ZF_QR_THRESHOLD {
        precode_zf_qr(hhat, etx)
    } else {
        precode_zf_gram(hhat, etx)
    }
}

/// User counts up to this bound go through the Gram-Cholesky route.
pub const ZF_QR_THRESHOLD: usize = 32;

/// Gram-Cholesky zero forcing (shares its factor with the fast sampling
/// path).
pub fn precode_zf_gram(hhat: &CMat, etx: f64) -> Result<Precoder> {
    let (m, k) = (hhat.rows(), hhat.cols());
    let ch = Cholesky::new(&linalg::gram(hhat))?;
    let mut vectors = CMat::zeros(m, k);
    let mut e = vec![Complex64::new(0.0, 0.0); k];
    for j in 0..k {
        e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        e[j] = Complex64::new(1.0, 0.0);
        let x = ch.solve(&e);
        let w = hhat.mul_vec(&x);
        let n = linalg::norm_sq(&w).sqrt();
        if n == 0.0 {
            return Err(Error::Numerical(format!("zero-forcing direction {j} vanished")));
        }
        let dst = vectors.col_mut(j);
        for (d, s) in dst.iter_mut().zip(w) {
            *d = s / n;
        }
    }
    Ok(Precoder {
        vectors,
        energies: vec![etx / k as f64; k],
    })
}

/// QR zero forcing: Ĥ = QR gives Ĥ(Ĥ^H Ĥ)^{-1} = Q R^{-H}.
pub fn precode_zf_qr(hhat: &CMat, etx: f64) -> Result<Precoder> {
    let (m, k) = (hhat.rows(), hhat.cols());
    let (q, r) = linalg::qr_thin(hhat)?;
    let w = linalg::q_times_r_inv_adjoint(&q, &r)?;
    let mut vectors = CMat::zeros(m, k);
    for j in 0..k {
        let n = linalg::norm_sq(w.col(j)).sqrt();
        if n == 0.0 {
            return Err(Error::Numerical(format!("zero-forcing direction {j} vanished")));
        }
        let dst = vectors.col_mut(j);
        for (d, &s) in dst.iter_mut().zip(w.col(j)) {
            *d = s / n;
        }
    }
    Ok(Precoder {
        vectors,
        energies: vec![etx / k as f64; k],
    })
}

/// Precoder dispatch on the configured family.
pub fn precode(hhat: &CMat, cfg: &SystemConfig) -> Result<Precoder> {
    match cfg.precoder {
        PrecoderKind::ConjBf => precode_conj(hhat, cfg.etx),
        PrecoderKind::Zfbf => precode_zf(hhat, cfg.etx),
    }
}

// ---------------------------------------------------------------------------
// effective channel
// ---------------------------------------------------------------------------

/// Effective scalar coefficients seen by one user: g_{k'} = √E_{k'}·h^H v_{k'}.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub g: Vec<Complex64>,
    pub user_index: usize,
}

impl EffectiveChannel {
    /// Desired-signal coefficient g_{uu}.
    pub fn own(&self) -> Complex64 {
        self.g[self.user_index]
    }

    /// Total interference power Σ_{k'≠u} |g_{uk'}|².
    pub fn interference(&self) -> f64 {
        self.g
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self.user_index)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }
}

/// Effective coefficients for the user whose true channel is column
/// `user_index` of `h`.
pub fn effective_coefficients(
    h: &CMat,
    precoder: &Precoder,
    user_index: usize,
) -> EffectiveChannel {
    let hu = h.col(user_index);
    let g = precoder
        .vectors
        .adjoint_vec(hu)
        .iter()
        .zip(&precoder.energies)
        .map(|(c, &e)| c.conj() * e.sqrt())
        .collect();
    EffectiveChannel { g, user_index }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
