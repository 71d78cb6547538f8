//! Parametric coda synthesiser with planted bit → observable encodings.
//!
//! Each experimental unit is identified by its covariate vector `x`; the
//! bytes of `x` seed every random draw (see [`derive_rng`]), so a given
//! `(x, t)` always renders the same audio. Treatment bits act on the
//! rendered coda in two regimes:
//!
//! * above a dose of 1, a bit's *target* observable moves linearly with
//!   `slope * (t - 1)` (its "drive");
//! * every bit also has a cross effect `cross_amp * tanh(t)` on the
//!   observables it does not target; the cross effect is strongest inside
//!   `[-1, 1]` and saturates to a constant beyond it.
//!
//! Clicks are exponentially decaying sinusoids. Background white noise grows
//! with `relu(t - 1)` on every bit and is capped so the primary clicks stay
//! well above the detector thresholds across the whole dose range.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::signal::AudioClip;

/// Observable a bit may be planted to control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    NClicks,
    MeanIci,
    IciStd,
    SpectralMean,
    SpectralStd,
    None,
}

impl Target {
    const EFFECTIVE: [Target; 5] = [
        Target::NClicks,
        Target::MeanIci,
        Target::IciStd,
        Target::SpectralMean,
        Target::SpectralStd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::NClicks => "n_clicks",
            Target::MeanIci => "mean_ici",
            Target::IciStd => "ici_std",
            Target::SpectralMean => "spectral_mean",
            Target::SpectralStd => "spectral_std",
            Target::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::EFFECTIVE
            .into_iter()
            .chain([Target::None])
            .find(|t| t.name() == s)
    }

    fn slot(self) -> usize {
        match self {
            Target::NClicks => 0,
            Target::MeanIci => 1,
            Target::IciStd => 2,
            Target::SpectralMean => 3,
            Target::SpectralStd => 4,
            Target::None => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitEffect {
    pub target: Target,
    /// Target change per unit dose above 1, in the target's unit.
    pub slope: f64,
    /// Saturating cross effect on the other observables, in their units.
    pub cross_amp: f64,
    /// Noise standard deviation added per unit dose above 1.
    pub noise_coeff: f64,
}

impl BitEffect {
    pub fn inert(cross_amp: f64) -> Self {
        Self {
            target: Target::None,
            slope: 0.0,
            cross_amp,
            noise_coeff: 0.0015,
        }
    }
}

/// Ground-truth map from encoding bits to effects.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEncoding {
    pub bits: Vec<BitEffect>,
}

impl PlantedEncoding {
    /// Default map on five bits: bit 1 drives the click count (and, through
    /// it, shorter and more regular intervals), bit 0 the spectral mean and
    /// bit 3 lowers the within-coda spectral spread.
    pub fn standard() -> Self {
        Self::with_targets(5, 1, 0, 3)
    }

    /// Same effects as [`PlantedEncoding::standard`] on `n_bits` bits
    /// with the three targeted bits at the given indices.
    pub fn with_targets(n_bits: usize, clicks_bit: usize, mean_bit: usize, spread_bit: usize) -> Self {
        let cross = [0.6, 0.5, -0.7, 0.5, 0.8, -0.6, 0.7, -0.5];
        let mut bits: Vec<BitEffect> = (0..n_bits)
            .map(|b| BitEffect::inert(cross[b % cross.len()]))
            .collect();
        let mut plant = |b: usize, target, slope| {
            if b < n_bits {
                bits[b].target = target;
                bits[b].slope = slope;
            }
        };
        plant(clicks_bit, Target::NClicks, 0.5);
        plant(mean_bit, Target::SpectralMean, 1.0);
        plant(spread_bit, Target::SpectralStd, -1.0);
        Self { bits }
    }

    pub fn n_bits(&self) -> usize {
        self.bits.len()
    }

    /// Index of the bit planted on `target`, if any.
    pub fn bit_for(&self, target: Target) -> Option<usize> {
        self.bits.iter().position(|b| b.target == target)
    }
}

/// Generator constants. Defaults render ~2 s codas at 32 kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub clip_len: usize,
    pub covariate_dim: usize,
    pub base_clicks: u32,
    pub base_ici_s: f64,
    /// Relative per-unit spread of the base interval.
    pub ici_unit_spread: f64,
    pub base_ici_std_s: f64,
    /// Interval shortening per unit of click-count drive.
    pub ici_coupling: f64,
    /// Interval-spread shrinkage per unit of click-count drive.
    pub ici_std_coupling: f64,
    pub min_gap_s: f64,
    pub onset_min_s: f64,
    pub onset_jitter_s: f64,
    /// Relative per-unit spread of the click-count slope.
    pub slope_spread: f64,
    pub f0_hz: f64,
    pub f0_unit_spread_hz: f64,
    pub base_spectral_std_hz: f64,
    pub min_spectral_std_hz: f64,
    pub carrier_min_hz: f64,
    pub carrier_max_hz: f64,
    pub click_decay_s: f64,
    pub click_amp: f64,
    pub click_amp_jitter: f64,
    pub noise_base: f64,
    pub noise_max: f64,
    pub unit_clicks: f64,
    pub unit_ici_s: f64,
    pub unit_ici_std_s: f64,
    pub unit_spectral_hz: f64,
    pub unit_spectral_std_hz: f64,
    pub planted: PlantedEncoding,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 32000,
            clip_len: 65536,
            covariate_dim: 95,
            base_clicks: 5,
            base_ici_s: 0.2,
            ici_unit_spread: 0.05,
            base_ici_std_s: 0.02,
            ici_coupling: 0.116,
            ici_std_coupling: 0.405,
            min_gap_s: 0.06,
            onset_min_s: 0.15,
            onset_jitter_s: 0.1,
            slope_spread: 0.1,
            f0_hz: 6000.0,
            f0_unit_spread_hz: 300.0,
            base_spectral_std_hz: 600.0,
            min_spectral_std_hz: 20.0,
            carrier_min_hz: 2800.0,
            carrier_max_hz: 14000.0,
            click_decay_s: 0.003,
            click_amp: 0.7,
            click_amp_jitter: 0.15,
            noise_base: 0.002,
            noise_max: 0.05,
            unit_clicks: 1.0,
            unit_ici_s: 0.01,
            unit_ici_std_s: 0.002,
            unit_spectral_hz: 350.0,
            unit_spectral_std_hz: 45.0,
            planted: PlantedEncoding::standard(),
        }
    }
}

/// Longest coda the generator renders; bounds the per-unit draw tables.
const MAX_CLICKS: usize = 40;

macro_rules! synth_scalars {
    ($m:ident) => {
        $m!(base_clicks, u32);
        $m!(base_ici_s, f64);
        $m!(ici_unit_spread, f64);
        $m!(base_ici_std_s, f64);
        $m!(ici_coupling, f64);
        $m!(ici_std_coupling, f64);
        $m!(min_gap_s, f64);
        $m!(onset_min_s, f64);
        $m!(onset_jitter_s, f64);
        $m!(slope_spread, f64);
        $m!(f0_hz, f64);
        $m!(f0_unit_spread_hz, f64);
        $m!(base_spectral_std_hz, f64);
        $m!(min_spectral_std_hz, f64);
        $m!(carrier_min_hz, f64);
        $m!(carrier_max_hz, f64);
        $m!(click_decay_s, f64);
        $m!(click_amp, f64);
        $m!(click_amp_jitter, f64);
        $m!(noise_base, f64);
        $m!(noise_max, f64);
        $m!(unit_clicks, f64);
        $m!(unit_ici_s, f64);
        $m!(unit_ici_std_s, f64);
        $m!(unit_spectral_hz, f64);
        $m!(unit_spectral_std_hz, f64);
    };
}

impl SynthConfig {
    pub fn n_bits(&self) -> usize {
        self.planted.n_bits()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || self.clip_len < 2 {
            return Err(Error::config("sample_rate and clip_len must be positive"));
        }
        if self.covariate_dim == 0 {
            return Err(Error::config("covariate_dim must be positive"));
        }
        if self.n_bits() == 0 {
            return Err(Error::config("n_bits must be positive"));
        }
        if self.base_clicks == 0 || self.base_clicks as usize > MAX_CLICKS {
            return Err(Error::config(format!(
                "planted.base_clicks must lie in 1..={MAX_CLICKS}"
            )));
        }
        if !(self.carrier_min_hz > 0.0 && self.carrier_min_hz < self.carrier_max_hz)
            || self.carrier_max_hz >= self.sample_rate as f64 / 2.0
        {
            return Err(Error::config("planted carrier range must lie inside (0, Nyquist)"));
        }
        if !(self.click_decay_s > 0.0) || !(self.base_ici_s > 0.0) || !(self.min_gap_s > 0.0) {
            return Err(Error::config("planted timing constants must be positive"));
        }
        if !(self.click_amp > 0.0 && self.click_amp <= 1.0) {
            return Err(Error::config("planted.click_amp must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.click_amp_jitter) {
            return Err(Error::config("planted.click_amp_jitter must lie in [0, 1)"));
        }
        for (b, e) in self.planted.bits.iter().enumerate() {
            if !e.slope.is_finite() || !e.cross_amp.is_finite() || !(e.noise_coeff >= 0.0) {
                return Err(Error::config(format!("planted.bit{b}: invalid effect")));
            }
        }
        Ok(())
    }

    /// Writes every generator constant and the planted map as `planted.*`.
    pub fn write_kv(&self, kv: &mut KvMap) {
        macro_rules! put {
            ($f:ident, $t:ty) => {
                kv.insert(concat!("planted.", stringify!($f)), self.$f);
            };
        }
        synth_scalars!(put);
        for (b, e) in self.planted.bits.iter().enumerate() {
            kv.insert(format!("planted.bit{b}.target"), e.target.name());
            kv.insert(format!("planted.bit{b}.slope"), e.slope);
            kv.insert(format!("planted.bit{b}.cross_amp"), e.cross_amp);
            kv.insert(format!("planted.bit{b}.noise_coeff"), e.noise_coeff);
        }
    }

    /// Reads `planted.*` keys over the defaults. `n_bits`, `sample_rate`,
    /// `clip_len` and `covariate_dim` come from the caller.
    pub fn read_kv(
        kv: &KvMap,
        n_bits: usize,
        sample_rate: u32,
        clip_len: usize,
        covariate_dim: usize,
    ) -> Result<Self> {
        let mut cfg = SynthConfig {
            sample_rate,
            clip_len,
            covariate_dim,
            ..SynthConfig::default()
        };
        macro_rules! get {
            ($f:ident, $t:ty) => {
                cfg.$f = kv.parse_or::<$t>(concat!("planted.", stringify!($f)), cfg.$f)?;
            };
        }
        synth_scalars!(get);
        let mut planted = if n_bits == 5 {
            PlantedEncoding::standard()
        } else {
            PlantedEncoding::with_targets(n_bits, 1, 0, 3)
        };
        let any_bit_key = kv.with_prefix("planted.bit").next().is_some();
        for (b, e) in planted.bits.iter_mut().enumerate() {
            if any_bit_key {
                *e = BitEffect::inert(0.0);
            }
            let key = |f: &str| format!("planted.bit{b}.{f}");
            if let Some(t) = kv.get(&key("target")) {
                e.target = Target::parse(t)
                    .ok_or_else(|| Error::config(format!("invalid value for {}: {t:?}", key("target"))))?;
            }
            e.slope = kv.parse_or(&key("slope"), e.slope)?;
            e.cross_amp = kv.parse_or(&key("cross_amp"), e.cross_amp)?;
            e.noise_coeff = kv.parse_or(&key("noise_coeff"), e.noise_coeff)?;
        }
        cfg.planted = planted;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Covariates and treatment doses of one generator call.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentInput {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl LatentInput {
    /// Treatment vector with `dose` on `bit` and zeros elsewhere.
    pub fn single_bit(x: Vec<f64>, n_bits: usize, bit: usize, dose: f64) -> Self {
        let mut t = vec![0.0; n_bits];
        t[bit] = dose;
        Self { x, t }
    }

    pub fn validate(&self, cfg: &SynthConfig) -> Result<()> {
        if self.x.len() != cfg.covariate_dim {
            return Err(Error::config(format!(
                "covariate vector has {} entries, expected {}",
                self.x.len(),
                cfg.covariate_dim
            )));
        }
        if self.t.len() != cfg.n_bits() {
            return Err(Error::config(format!(
                "treatment vector has {} entries, expected {}",
                self.t.len(),
                cfg.n_bits()
            )));
        }
        if self.x.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::data("covariates must be finite and within [-1, 1]"));
        }
        if self.t.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("treatment doses must be finite"));
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the little-endian IEEE-754 bytes of `x`, with `-0.0`
/// folded onto `0.0`.
pub fn covariate_seed(x: &[f64]) -> u64 {
    let mut h = FNV_OFFSET;
    for v in x {
        let v = if *v == 0.0 { 0.0f64 } else { *v };
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Unit random stream: ChaCha8 (`rand_chacha`) seeded with
/// [`covariate_seed`] through `seed_from_u64`, on stream 0.
pub fn derive_rng(x: &[f64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(covariate_seed(x))
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Fixed per-unit draws; consumed in a fixed order so that every dose of a
/// unit sees the same values.
struct UnitDraws {
    slope_mult: f64,
    ici_mult: f64,
    f0_offset: f64,
    onset: f64,
    gap_z: Vec<f64>,
    carrier_z: Vec<f64>,
    amp_u: Vec<f64>,
    phase: Vec<f64>,
    noise_seed: u64,
}

impl UnitDraws {
    fn draw(x: &[f64]) -> Self {
        let mut rng = derive_rng(x);
        let sym = |rng: &mut ChaCha8Rng| rng.random_range(-1.0..1.0);
        let slope_mult = sym(&mut rng);
        let ici_mult = sym(&mut rng);
        let f0_offset = sym(&mut rng);
        let onset = rng.random::<f64>();
        let normals = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..MAX_CLICKS).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let gap_z = normals(&mut rng);
        let carrier_z = normals(&mut rng);
        let amp_u = (0..MAX_CLICKS).map(|_| rng.random::<f64>()).collect();
        let phase = (0..MAX_CLICKS).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let noise_seed = rng.random::<u64>();
        Self {
            slope_mult,
            ici_mult,
            f0_offset,
            onset,
            gap_z,
            carrier_z,
            amp_u,
            phase,
            noise_seed,
        }
    }
}

/// Centres `z` and scales it to unit population standard deviation; fewer
/// than two values (or a constant vector) become zeros.
fn standardize(z: &[f64]) -> Vec<f64> {
    if z.len() < 2 {
        return vec![0.0; z.len()];
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return vec![0.0; z.len()];
    }
    z.iter().map(|v| (v - mean) / sd).collect()
}

/// Coda parameters implied by the planted encoding for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTargets {
    pub n_clicks: u32,
    pub mean_ici_s: f64,
    pub ici_std_s: f64,
    pub carrier_hz: f64,
    pub spectral_std_hz: f64,
    pub noise_sd: f64,
    pub onsets_s: Vec<f64>,
    pub carriers_hz: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Set when the planted click count did not fit the clip and was
    /// reduced.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub clip: AudioClip,
    pub targets: PlantedTargets,
}

/// Planted coda parameters for `input`, without rendering audio.
pub fn planned_targets(input: &LatentInput, cfg: &SynthConfig) -> Result<PlantedTargets> {
    input.validate(cfg)?;
    let draws = UnitDraws::draw(&input.x);
    Ok(plan(input, cfg, &draws))
}

fn plan(input: &LatentInput, cfg: &SynthConfig, d: &UnitDraws) -> PlantedTargets {
    // drive[o]: linear effect of the bits targeting o; cross[o]: saturating
    // effect of the bits that do not.
    let mut drive = [0.0f64; 5];
    let mut cross = [0.0f64; 5];
    let mut noise_sd = cfg.noise_base;
    for (b, (e, &t)) in cfg.planted.bits.iter().zip(&input.t).enumerate() {
        if e.target != Target::None {
            drive[e.target.slot()] += e.slope * relu(t - 1.0);
        }
        for o in Target::EFFECTIVE {
            if o != e.target {
                let sign = if (b + o.slot()) % 2 == 0 { 1.0 } else { -1.0 };
                cross[o.slot()] += sign * e.cross_amp * t.tanh();
            }
        }
        noise_sd += e.noise_coeff * relu(t - 1.0);
    }
    let noise_sd = noise_sd.min(cfg.noise_max);
    let slot = |t: Target| t.slot();

    let click_drive = drive[slot(Target::NClicks)];
    let slope_mult = 1.0 + cfg.slope_spread * d.slope_mult;
    let n_float = cfg.base_clicks as f64
        + cfg.unit_clicks * (slope_mult * click_drive + cross[slot(Target::NClicks)]);
    let mut n = (n_float.round().max(1.0) as usize).min(MAX_CLICKS);

    let mean_ici = (cfg.base_ici_s * (1.0 + cfg.ici_unit_spread * d.ici_mult)
        / (1.0 + cfg.ici_coupling * click_drive)
        + cfg.unit_ici_s * (drive[slot(Target::MeanIci)] + cross[slot(Target::MeanIci)]))
        .max(cfg.min_gap_s);
    let ici_std = (cfg.base_ici_std_s / (1.0 + cfg.ici_std_coupling * click_drive)
        + cfg.unit_ici_std_s * (drive[slot(Target::IciStd)] + cross[slot(Target::IciStd)]))
        .max(0.0);
    let carrier = cfg.f0_hz
        + cfg.f0_unit_spread_hz * d.f0_offset
        + cfg.unit_spectral_hz * (drive[slot(Target::SpectralMean)] + cross[slot(Target::SpectralMean)]);
    let spectral_std = (cfg.base_spectral_std_hz
        + cfg.unit_spectral_std_hz
            * (drive[slot(Target::SpectralStd)] + cross[slot(Target::SpectralStd)]))
        .max(cfg.min_spectral_std_hz);

    let duration = cfg.clip_len as f64 / cfg.sample_rate as f64;
    let onset0 = cfg.onset_min_s + cfg.onset_jitter_s * d.onset;
    let tail = 10.0 * cfg.click_decay_s;
    let mut degenerate = false;
    let onsets = loop {
        let e = standardize(&d.gap_z[..n - 1]);
        let mut onsets = Vec::with_capacity(n);
        let mut t = onset0;
        onsets.push(t);
        for z in &e {
            t += (mean_ici + ici_std * z).max(cfg.min_gap_s);
            onsets.push(t);
        }
        if t + tail <= duration || n == 1 {
            break onsets;
        }
        n -= 1;
        degenerate = true;
    };

    let cz = standardize(&d.carrier_z[..n]);
    let carriers = cz
        .iter()
        .map(|z| (carrier + spectral_std * z).clamp(cfg.carrier_min_hz, cfg.carrier_max_hz))
        .collect();
    let amplitudes = d.amp_u[..n]
        .iter()
        .map(|u| cfg.click_amp * (1.0 - cfg.click_amp_jitter * u))
        .collect();

    PlantedTargets {
        n_clicks: n as u32,
        mean_ici_s: mean_ici,
        ici_std_s: ici_std,
        carrier_hz: carrier,
        spectral_std_hz: spectral_std,
        noise_sd,
        onsets_s: onsets,
        carriers_hz: carriers,
        amplitudes,
        degenerate,
    }
}

/// Adds one click: raised-cosine attack over 0.25 ms, then exponential
/// decay, truncated after ten decay constants.
pub fn add_click(
    samples: &mut [f64],
    sample_rate: u32,
    onset_s: f64,
    carrier_hz: f64,
    amplitude: f64,
    decay_s: f64,
    phase: f64,
) {
    let fs = sample_rate as f64;
    let start = (onset_s * fs).round() as usize;
    let attack = ((0.00025 * fs).round() as usize).max(1);
    let len = (10.0 * decay_s * fs).ceil() as usize;
    let w = 2.0 * PI * carrier_hz / fs;
    let decay = (-1.0 / (decay_s * fs)).exp();
    let mut env = amplitude;
    for k in 0..len {
        let i = start + k;
        if i >= samples.len() {
            break;
        }
        let ramp = if k < attack {
            0.5 - 0.5 * (PI * k as f64 / attack as f64).cos()
        } else {
            1.0
        };
        samples[i] += env * ramp * (w * k as f64 + phase).sin();
        env *= decay;
    }
}

/// Renders a coda from explicit click parameters plus white noise drawn
/// from `noise_seed`; samples are clamped to `[-1, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn render_coda(
    sample_rate: u32,
    clip_len: usize,
    onsets_s: &[f64],
    carriers_hz: &[f64],
    amplitudes: &[f64],
    phases: &[f64],
    decay_s: f64,
    noise_sd: f64,
    noise_seed: u64,
) -> AudioClip {
    let mut samples = vec![0.0; clip_len];
    if noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        rng.set_stream(1);
        for s in samples.iter_mut() {
            *s = noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    for (k, &onset) in onsets_s.iter().enumerate() {
        let phase = phases.get(k).copied().unwrap_or(0.0);
        add_click(&mut samples, sample_rate, onset, carriers_hz[k], amplitudes[k], decay_s, phase);
    }
    for s in samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioClip {
        samples,
        sample_rate,
    }
}

/// Deterministic coda for `(x, t)` under the planted encoding.
pub fn synth_coda(input: &LatentInput, cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    input.validate(cfg)?;
    let draws = UnitDraws::draw(&input.x);
    let targets = plan(input, cfg, &draws);
    let clip = render_coda(
        cfg.sample_rate,
        cfg.clip_len,
        &targets.onsets_s,
        &targets.carriers_hz,
        &targets.amplitudes,
        &draws.phase,
        cfg.click_decay_s,
        targets.noise_sd,
        draws.noise_seed,
    );
    Ok(SynthOutput { clip, targets })
}

/// `n_units` covariate vectors drawn i.i.d. uniform on `[-1, 1]^dim`
/// from a ChaCha8 stream seeded with `seed`.
pub fn draw_covariates(seed: u64, n_units: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_units)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}
