//! Radar channel-estimate synthesis.
//!
//! Models the post-FFT, post-spectral-division channel estimate of an OFDM
//! monostatic radar: each target contributes a 2D complex exponential whose
//! normalized frequencies encode round-trip delay (range) and Doppler
//! (velocity), scaled by a Friis attenuation amplitude, plus AWGN.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OFDM frame and radar-geometry parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    /// Subcarrier count (rows of the channel estimate).
    pub n: usize,
    /// OFDM symbols per frame (columns).
    pub m: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Cyclic-prefix length in samples.
    pub n_cp: usize,
    /// Propagation speed in m/s.
    pub c: f64,
    /// Radar cross section in m^2.
    pub sigma_rcs: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            n: 64,
            m: 8,
            delta_f: 15e3,
            f_c: 3e9,
            n_cp: 16,
            c: SPEED_OF_LIGHT,
            sigma_rcs: 1.0,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(Error::Config(format!("need N >= 2 and M >= 2, got {}x{}", self.n, self.m)));
        }
        if !(self.delta_f > 0.0) || !(self.f_c > 0.0) || !(self.c > 0.0) {
            return Err(Error::Config("delta_f, f_c and c must be positive".into()));
        }
        Ok(())
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn n_s(&self) -> usize {
        self.n + self.n_cp
    }

    /// Total OFDM symbol duration T_s = N_s / (N * delta_f), seconds.
    pub fn t_s(&self) -> f64 {
        self.n_s() as f64 / (self.n as f64 * self.delta_f)
    }

    /// Total bandwidth B = N * delta_f, Hz.
    pub fn bandwidth(&self) -> f64 {
        self.n as f64 * self.delta_f
    }
}

/// A single point target in normalized-frequency coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Reflection amplitude, dimensionless, >= 0.
    pub b: f64,
    /// Normalized delay frequency, cycles per subcarrier index, in [-0.5, 0.5).
    pub f1: f64,
    /// Normalized Doppler frequency, cycles per symbol index, in [-0.5, 0.5).
    pub f2: f64,
}

/// A collection of targets sharing a common reflection phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    /// Common reflection phase, radians.
    pub phi: f64,
}

impl TargetScene {
    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Checks amplitude signs, frequency ranges, and the pairwise wrap-around
    /// minimum separations 1/(3N) on f1 and 1/(3M) on f2.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        for t in &self.targets {
            if t.b < 0.0 {
                return Err(Error::Domain(format!("negative amplitude {}", t.b)));
            }
            if !(-0.5..0.5).contains(&t.f1) || !(-0.5..0.5).contains(&t.f2) {
                return Err(Error::Domain(format!(
                    "frequencies ({}, {}) outside [-0.5, 0.5)",
                    t.f1, t.f2
                )));
            }
        }
        let sep1 = 1.0 / (3.0 * n as f64);
        let sep2 = 1.0 / (3.0 * m as f64);
        for (i, a) in self.targets.iter().enumerate() {
            for b in &self.targets[i + 1..] {
                if wrap_distance(a.f1, b.f1) < sep1 || wrap_distance(a.f2, b.f2) < sep2 {
                    return Err(Error::Domain(format!(
                        "targets at ({}, {}) and ({}, {}) violate the minimum separation",
                        a.f1, a.f2, b.f1, b.f2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Wrap-around distance between two normalized frequencies on the unit circle.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Reduce a frequency into [-0.5, 0.5).
pub fn wrap_frequency(f: f64) -> f64 {
    (f + 0.5).rem_euclid(1.0) - 0.5
}

/// N x M complex channel estimate stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    n: usize,
    m: usize,
    i_plane: Vec<f64>,
    q_plane: Vec<f64>,
    /// Noise tag in dB; `f64::INFINITY` marks a noise-free matrix.
    pub snr_db: f64,
}

impl ChannelEstimate {
    pub fn zeros(n: usize, m: usize) -> Self {
        ChannelEstimate {
            n,
            m,
            i_plane: vec![0.0; n * m],
            q_plane: vec![0.0; n * m],
            snr_db: f64::INFINITY,
        }
    }

    pub fn from_planes(n: usize, m: usize, i_plane: Vec<f64>, q_plane: Vec<f64>, snr_db: f64) -> Result<Self> {
        if i_plane.len() != n * m || q_plane.len() != n * m {
            return Err(Error::Shape(format!(
                "planes of length {}/{} do not match {}x{}",
                i_plane.len(),
                q_plane.len(),
                n,
                m
            )));
        }
        Ok(ChannelEstimate { n, m, i_plane, q_plane, snr_db })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn i_plane(&self) -> &[f64] {
        &self.i_plane
    }

    pub fn q_plane(&self) -> &[f64] {
        &self.q_plane
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        let idx = k * self.m + l;
        Complex64::new(self.i_plane[idx], self.q_plane[idx])
    }

    pub fn set_entry(&mut self, k: usize, l: usize, v: Complex64) {
        let idx = k * self.m + l;
        self.i_plane[idx] = v.re;
        self.q_plane[idx] = v.im;
    }

    /// Mean squared magnitude over all entries.
    pub fn mean_power(&self) -> f64 {
        let sum: f64 = self
            .i_plane
            .iter()
            .zip(&self.q_plane)
            .map(|(re, im)| re * re + im * im)
            .sum();
        sum / (self.n * self.m) as f64
    }

    pub fn is_finite(&self) -> bool {
        self.i_plane.iter().chain(&self.q_plane).all(|v| v.is_finite())
    }
}

/// Result of mapping physical range/velocity to normalized frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFreqs {
    /// Wrapped into [-0.5, 0.5).
    pub f1: f64,
    pub f2: f64,
    /// Unwrapped values, for aliasing diagnostics.
    pub f1_raw: f64,
    pub f2_raw: f64,
    /// Set when either unwrapped value left [-0.5, 0.5).
    pub aliased: bool,
}

/// Maps range d (m) and radial velocity v (m/s) to the normalized frequency
/// pair: f1 = delta_f * 2d/c (round-trip delay), f2 = T_s * 2 v f_c / c.
pub fn map_physical_to_normalized(d: f64, v: f64, cfg: &RadarConfig) -> NormalizedFreqs {
    let tau = 2.0 * d / cfg.c;
    let f_doppler = 2.0 * v * cfg.f_c / cfg.c;
    let f1_raw = cfg.delta_f * tau;
    let f2_raw = cfg.t_s() * f_doppler;
    let aliased = !(-0.5..0.5).contains(&f1_raw) || !(-0.5..0.5).contains(&f2_raw);
    NormalizedFreqs {
        f1: wrap_frequency(f1_raw),
        f2: wrap_frequency(f2_raw),
        f1_raw,
        f2_raw,
        aliased,
    }
}

/// Friis two-way attenuation: b = sqrt(c * sigma_rcs / ((4 pi)^3 d^4 f_c^2)).
pub fn friis_attenuation(d: f64, cfg: &RadarConfig) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::Domain(format!("range must be positive, got {d}")));
    }
    let four_pi_cubed = (4.0 * std::f64::consts::PI).powi(3);
    Ok((cfg.c * cfg.sigma_rcs / (four_pi_cubed * d.powi(4) * cfg.f_c * cfg.f_c)).sqrt())
}

/// Noise-free channel estimate:
/// h[k][l] = sum_p b_p exp(-j 2 pi f1_p k) exp(+j 2 pi f2_p l) e^{j phi}.
pub fn synthesize_channel(scene: &TargetScene, cfg: &RadarConfig) -> Result<ChannelEstimate> {
    cfg.validate()?;
    let (n, m) = (cfg.n, cfg.m);
    let mut h = ChannelEstimate::zeros(n, m);
    let phase = Complex64::from_polar(1.0, scene.phi);
    for t in &scene.targets {
        // Per-target rank-1 outer product of the two axis exponentials.
        let wk = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * t.f1);
        let wl = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t.f2);
        let mut ek = Complex64::new(t.b, 0.0) * phase;
        for k in 0..n {
            let mut e = ek;
            for l in 0..m {
                let idx = k * m + l;
                h.i_plane[idx] += e.re;
                h.q_plane[idx] += e.im;
                e *= wl;
            }
            ek *= wk;
        }
    }
    Ok(h)
}

/// One standard-normal pair via Box-Muller; deterministic given the stream.
pub fn standard_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// A single standard-normal draw.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    standard_normal_pair(rng).0
}

/// Adds circularly symmetric complex Gaussian noise at the given SNR, defined
/// against the mean per-entry power of the input. `snr_db = +inf` is the
/// no-noise sentinel.
pub fn add_awgn<R: Rng>(h: &ChannelEstimate, snr_db: f64, rng: &mut R) -> Result<ChannelEstimate> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        let mut out = h.clone();
        out.snr_db = f64::INFINITY;
        return Ok(out);
    }
    let p_sig = h.mean_power();
    if p_sig == 0.0 {
        return Err(Error::Domain("cannot scale noise to a zero-power signal".into()));
    }
    let sigma2 = p_sig * 10f64.powf(-snr_db / 10.0);
    let s = (sigma2 / 2.0).sqrt();
    let mut out = h.clone();
    for idx in 0..out.i_plane.len() {
        let (zr, zi) = standard_normal_pair(rng);
        out.i_plane[idx] += s * zr;
        out.q_plane[idx] += s * zi;
    }
    out.snr_db = snr_db;
    Ok(out)
}

/// Square QAM constellation of the given order, unit average power.
pub fn qam_constellation(order: usize) -> Result<Vec<Complex64>> {
    let side = (order as f64).sqrt().round() as usize;
    if side * side != order || side < 2 {
        return Err(Error::Config(format!("QAM order {order} is not a square >= 4")));
    }
    let scale = (2.0 * (side * side - 1) as f64 / 3.0).sqrt();
    let mut points = Vec::with_capacity(order);
    for i in 0..side {
        for q in 0..side {
            let re = (2 * i as i64 + 1 - side as i64) as f64 / scale;
            let im = (2 * q as i64 + 1 - side as i64) as f64 / scale;
            points.push(Complex64::new(re, im));
        }
    }
    Ok(points)
}

/// Full spectral-division round trip: draws QAM symbols S, forms
/// Y = S .* H + Z entrywise, and returns the ratio Y ./ S. With a
/// unit-modulus constellation this is statistically equivalent to
/// `add_awgn(synthesize_channel(..))`.
pub fn qam_roundtrip<R: Rng>(
    scene: &TargetScene,
    cfg: &RadarConfig,
    order: usize,
    snr_db: f64,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    let constellation = qam_constellation(order)?;
    let h = synthesize_channel(scene, cfg)?;
    let noise_free = snr_db.is_infinite() && snr_db > 0.0;
    let sigma2 = if noise_free {
        0.0
    } else {
        let p_sig = h.mean_power();
        if p_sig == 0.0 {
            return Err(Error::Domain("cannot scale noise to a zero-power signal".into()));
        }
        p_sig * 10f64.powf(-snr_db / 10.0)
    };
    let s = (sigma2 / 2.0).sqrt();
    let mut out = ChannelEstimate::zeros(cfg.n, cfg.m);
    out.snr_db = snr_db;
    for k in 0..cfg.n {
        for l in 0..cfg.m {
            let sym = constellation[rng.gen_range(0..constellation.len())];
            let z = if noise_free {
                Complex64::new(0.0, 0.0)
            } else {
                let (zr, zi) = standard_normal_pair(rng);
                Complex64::new(s * zr, s * zi)
            };
            let y = sym * h.entry(k, l) + z;
            if sym.norm_sqr() == 0.0 {
                return Err(Error::Domain("constellation produced a zero symbol".into()));
            }
            out.set_entry(k, l, y / sym);
        }
    }
    Ok(out)
}
