//! Correlated Rayleigh channels for a cell-free network on a wrap-around square.
//!
//! Large-scale gains follow a log-distance law with log-normal shadowing; the
//! small-scale part uses local-scattering correlation across each AP array.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use log::warn;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CMatrix, Matrix};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid network config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("degenerate geometry: AP-UE distance {0} m is not positive")]
    ZeroDistance(f64),
    #[error("malformed channel dump: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Network geometry, propagation and Monte Carlo parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub area_side_m: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_ues: usize,
    pub bandwidth_hz: f64,
    pub height_diff_m: f64,
    pub pathloss_exponent: f64,
    pub gain_at_1km_db: f64,
    pub shadow_std_db: f64,
    pub angular_std_azimuth_deg: f64,
    pub angular_std_elevation_deg: f64,
    pub downlink_power_w: f64,
    pub noise_figure_db: f64,
    /// Express channel gains relative to the receiver noise power, so the
    /// channel handed to the precoders has unit noise variance.
    pub normalize_to_noise: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            area_side_m: 1000.0,
            num_aps: 100,
            antennas_per_ap: 1,
            num_ues: 60,
            bandwidth_hz: 20e6,
            height_diff_m: 10.0,
            pathloss_exponent: 3.67,
            gain_at_1km_db: -140.6,
            shadow_std_db: 4.0,
            angular_std_azimuth_deg: 15.0,
            angular_std_elevation_deg: 15.0,
            downlink_power_w: 1.0,
            noise_figure_db: 7.0,
            normalize_to_noise: true,
        }
    }
}

impl NetworkConfig {
    /// Total transmit antennas `L·N`.
    pub fn num_antennas(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ChannelError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ChannelError::InvalidConfig {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        fn nonneg(field: &'static str, v: f64) -> Result<(), ChannelError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ChannelError::InvalidConfig {
                    field,
                    reason: format!("must be finite and >= 0, got {v}"),
                })
            }
        }
        fn count(field: &'static str, v: usize) -> Result<(), ChannelError> {
            if v >= 1 {
                Ok(())
            } else {
                Err(ChannelError::InvalidConfig {
                    field,
                    reason: "must be >= 1".into(),
                })
            }
        }
        count("num_aps", self.num_aps)?;
        count("antennas_per_ap", self.antennas_per_ap)?;
        count("num_ues", self.num_ues)?;
        positive("area_side_m", self.area_side_m)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("height_diff_m", self.height_diff_m)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("downlink_power_w", self.downlink_power_w)?;
        nonneg("shadow_std_db", self.shadow_std_db)?;
        nonneg("angular_std_azimuth_deg", self.angular_std_azimuth_deg)?;
        nonneg("angular_std_elevation_deg", self.angular_std_elevation_deg)?;
        if !self.gain_at_1km_db.is_finite() {
            return Err(ChannelError::InvalidConfig {
                field: "gain_at_1km_db",
                reason: "must be finite".into(),
            });
        }
        if !self.noise_figure_db.is_finite() {
            return Err(ChannelError::InvalidConfig {
                field: "noise_figure_db",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// AP and UE drop on the wrap-around square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRealization {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// `distances[k][l]`: 3-D distance between UE k and the nearest torus image of AP l.
    pub distances: Vec<Vec<f64>>,
    /// Azimuth of UE k seen from the nearest image of AP l, radians.
    pub azimuths: Vec<Vec<f64>>,
    /// Elevation of UE k seen from AP l, radians (negative: UE below AP).
    pub elevations: Vec<Vec<f64>>,
}

/// Planar offset from `from` to the nearest of the 9 torus images of `to`.
pub fn wrapped_offset(from: [f64; 2], to: [f64; 2], side: f64) -> [f64; 2] {
    let mut best = [0.0, 0.0];
    let mut best_d2 = f64::INFINITY;
    for sx in [-side, 0.0, side] {
        for sy in [-side, 0.0, side] {
            let dx = to[0] + sx - from[0];
            let dy = to[1] + sy - from[1];
            let d2 = dx * dx + dy * dy;
            if d2 < best_d2 {
                best_d2 = d2;
                best = [dx, dy];
            }
        }
    }
    best
}

/// 3-D AP–UE distance with wrap-around.
pub fn wrapped_distance(ap: [f64; 2], ue: [f64; 2], side: f64, height_diff: f64) -> f64 {
    let [dx, dy] = wrapped_offset(ap, ue, side);
    (dx * dx + dy * dy + height_diff * height_diff).sqrt()
}

/// Builds distances and angles for given positions.
pub fn geometry_from_positions(
    ap_positions: Vec<[f64; 2]>,
    ue_positions: Vec<[f64; 2]>,
    side: f64,
    height_diff: f64,
) -> GeometryRealization {
    let mut distances = Vec::with_capacity(ue_positions.len());
    let mut azimuths = Vec::with_capacity(ue_positions.len());
    let mut elevations = Vec::with_capacity(ue_positions.len());
    for &ue in &ue_positions {
        let mut d_row = Vec::with_capacity(ap_positions.len());
        let mut az_row = Vec::with_capacity(ap_positions.len());
        let mut el_row = Vec::with_capacity(ap_positions.len());
        for &ap in &ap_positions {
            let [dx, dy] = wrapped_offset(ap, ue, side);
            let planar = (dx * dx + dy * dy).sqrt();
            d_row.push((planar * planar + height_diff * height_diff).sqrt());
            az_row.push(dy.atan2(dx));
            el_row.push(-(height_diff.atan2(planar)));
        }
        distances.push(d_row);
        azimuths.push(az_row);
        elevations.push(el_row);
    }
    GeometryRealization {
        ap_positions,
        ue_positions,
        distances,
        azimuths,
        elevations,
    }
}

/// Uniform AP and UE drop on the square, APs first.
pub fn generate_geometry<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<GeometryRealization, ChannelError> {
    cfg.validate()?;
    let side = cfg.area_side_m;
    let mut drop = |n: usize| -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect()
    };
    let aps = drop(cfg.num_aps);
    let ues = drop(cfg.num_ues);
    Ok(geometry_from_positions(aps, ues, side, cfg.height_diff_m))
}

/// Deterministic pathloss in dB (no shadowing).
pub fn pathloss_db(d_m: f64, cfg: &NetworkConfig) -> Result<f64, ChannelError> {
    if !(d_m > 0.0) {
        return Err(ChannelError::ZeroDistance(d_m));
    }
    Ok(cfg.gain_at_1km_db - 10.0 * cfg.pathloss_exponent * (d_m / 1000.0).log10())
}

/// Large-scale gain in dB for a given shadowing realization in dB.
pub fn large_scale_fading_db(
    d_m: f64,
    cfg: &NetworkConfig,
    shadow_db: f64,
) -> Result<f64, ChannelError> {
    Ok(pathloss_db(d_m, cfg)? + shadow_db)
}

/// Large-scale gain as a linear power ratio with an independent log-normal
/// shadowing draw.
pub fn large_scale_fading<R: Rng + ?Sized>(
    d_m: f64,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    let z: f64 = StandardNormal.sample(rng);
    let db = large_scale_fading_db(d_m, cfg, cfg.shadow_std_db * z)?;
    Ok(db_to_linear(db))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Receiver noise power in watts: `−174 dBm/Hz + 10·log10(B) + NF`.
pub fn noise_variance(cfg: &NetworkConfig) -> f64 {
    let dbm = -174.0 + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    db_to_linear(dbm) / 1000.0
}

/// Local-scattering correlation matrix of an N-element half-wavelength ULA.
///
/// Angular deviations around the nominal azimuth and elevation are Gaussian
/// with the given standard deviations (radians); the double integral is
/// evaluated by trapezoidal quadrature over ±6 standard
/// deviations with weights normalized to sum to one, so the diagonal equals
/// `gain` exactly. The result is Hermitian; `R[(l, m)]` depends only on `l − m`.
pub fn spatial_correlation<T: Real>(
    n: usize,
    gain: f64,
    azimuth: f64,
    elevation: f64,
    std_azimuth: f64,
    std_elevation: f64,
) -> CMatrix<T> {
    const POINTS: usize = 121;
    let nodes = |std: f64| -> Vec<(f64, f64)> {
        if std == 0.0 || n == 1 {
            return vec![(0.0, 1.0)];
        }
        let span = 6.0 * std;
        let step = 2.0 * span / (POINTS - 1) as f64;
        let raw: Vec<(f64, f64)> = (0..POINTS)
            .map(|i| {
                let x = -span + step * i as f64;
                (x, (-0.5 * (x / std).powi(2)).exp())
            })
            .collect();
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        raw.into_iter().map(|(x, w)| (x, w / total)).collect()
    };
    let az_nodes = nodes(std_azimuth);
    let el_nodes = nodes(std_elevation);

    // first column: r[d] = E[exp(jπ d sin(φ) cos(θ))]
    let mut first = vec![Complex::new(0.0f64, 0.0); n];
    first[0] = Complex::new(1.0, 0.0);
    for (d, slot) in first.iter_mut().enumerate().skip(1) {
        let mut acc = Complex::new(0.0, 0.0);
        for &(da, wa) in &az_nodes {
            for &(de, we) in &el_nodes {
                let phase = PI * d as f64 * (azimuth + da).sin() * (elevation + de).cos();
                acc += Complex::new(0.0, phase).exp() * (wa * we);
            }
        }
        *slot = acc;
    }
    CMatrix::from_fn(n, n, |l, m| {
        let z = if l >= m {
            first[l - m]
        } else {
            first[m - l].conj()
        };
        Complex::new(T::of(z.re * gain), T::of(z.im * gain))
    })
}

/// Stacked downlink channel `K × M` with its real lift and spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix<T> {
    pub h: CMatrix<T>,
    pub h_r: Matrix<T>,
    /// Per-UE noise variance in the units of `h`.
    pub sigma2: T,
    /// Square of the largest singular value of `h_r`.
    pub largest_singular_value_sq: T,
    pub antennas_per_ap: usize,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn new(h: CMatrix<T>, sigma2: T, antennas_per_ap: usize) -> Self {
        let h_r = h.lift();
        let largest_singular_value_sq = if h_r.rows() <= h_r.cols() {
            h_r.gram_rows().largest_symmetric_eigenvalue()
        } else {
            h_r.gram_cols().largest_symmetric_eigenvalue()
        };
        Self {
            h,
            h_r,
            sigma2,
            largest_singular_value_sq,
            antennas_per_ap,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.h.rows()
    }

    pub fn num_antennas(&self) -> usize {
        self.h.cols()
    }

    /// Writes the text dump: a `K M` header line, then K rows of M
    /// whitespace-separated `re,im` pairs, row-major.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<(), ChannelError> {
        let io = |e: std::io::Error| ChannelError::Io(e.to_string());
        writeln!(w, "{} {}", self.num_ues(), self.num_antennas()).map_err(io)?;
        for k in 0..self.num_ues() {
            let line: Vec<String> = self
                .h
                .row(k)
                .iter()
                .map(|z| format!("{:e},{:e}", z.re.as_f64(), z.im.as_f64()))
                .collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
        Ok(())
    }

    /// Reads a dump written by [`ChannelMatrix::write_text`].
    pub fn read_text<B: BufRead>(
        r: B,
        sigma2: T,
        antennas_per_ap: usize,
    ) -> Result<Self, ChannelError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| ChannelError::Format("empty input".into()))?
            .map_err(|e| ChannelError::Io(e.to_string()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| ChannelError::Format(format!("bad header {header:?}")))
            })
            .collect::<Result<_, _>>()?;
        let [k, m] = dims[..] else {
            return Err(ChannelError::Format(format!("bad header {header:?}")));
        };
        let mut data = Vec::with_capacity(k * m);
        for row in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| ChannelError::Format(format!("missing row {row}")))?
                .map_err(|e| ChannelError::Io(e.to_string()))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| ChannelError::Format(format!("bad entry {tok:?}")))?;
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| ChannelError::Format(format!("bad number {s:?}")))
                };
                data.push(Complex::new(T::of(parse(re)?), T::of(parse(im)?)));
            }
            if data.len() - before != m {
                return Err(ChannelError::Format(format!(
                    "row {row} has {} entries",
                    data.len() - before
                )));
            }
        }
        let h =
            CMatrix::from_row_major(k, m, data).map_err(|e| ChannelError::Format(e.to_string()))?;
        Ok(Self::new(h, sigma2, antennas_per_ap))
    }
}

/// Per-(UE, AP) correlation matrices, `correlations[k][l]`, in the units the
/// channel will be drawn in.
pub type Correlations<T> = Vec<Vec<CMatrix<T>>>;

/// Large-scale gains and correlation matrices for a geometry.
///
/// Shadowing is drawn here, one independent value per AP–UE pair in UE-major
/// order. When `normalize_to_noise` is set the gains are divided by the noise
/// power and the returned noise variance is 1.
pub fn correlations_for_geometry<T: Real, R: Rng + ?Sized>(
    geometry: &GeometryRealization,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<(Correlations<T>, f64), ChannelError> {
    let noise = noise_variance(cfg);
    let (scale, sigma2) = if cfg.normalize_to_noise {
        (1.0 / noise, 1.0)
    } else {
        (1.0, noise)
    };
    let std_az = cfg.angular_std_azimuth_deg.to_radians();
    let std_el = cfg.angular_std_elevation_deg.to_radians();
    let mut out = Vec::with_capacity(geometry.distances.len());
    for (k, row) in geometry.distances.iter().enumerate() {
        let mut per_ap = Vec::with_capacity(row.len());
        for (l, &d) in row.iter().enumerate() {
            let gain = large_scale_fading(d, cfg, rng)? * scale;
            per_ap.push(spatial_correlation(
                cfg.antennas_per_ap,
                gain,
                geometry.azimuths[k][l],
                geometry.elevations[k][l],
                std_az,
                std_el,
            ));
        }
        out.push(per_ap);
    }
    Ok((out, sigma2))
}

/// Square root of a Hermitian PSD matrix in lifted real form, with clipping of
/// negative eigenvalues.
fn lifted_sqrt<T: Real>(r: &CMatrix<T>) -> Matrix<T> {
    let lifted = r.lift();
    let (root, most_negative) = lifted.psd_sqrt();
    let scale = lifted.frobenius();
    if most_negative < -T::of(1e-9) * scale {
        warn!(
            "correlation matrix not PSD (eigenvalue {}), clipped to zero",
            most_negative
        );
    }
    root
}

/// One correlated Rayleigh draw `h_kl = R_kl^{1/2} w`, `w ~ CN(0, I)`,
/// assembled with row k holding `h_k1ᵀ … h_kLᵀ`.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(
    correlations: &Correlations<T>,
    sigma2: T,
    rng: &mut R,
) -> ChannelMatrix<T> {
    let roots: Vec<Vec<Matrix<T>>> = correlations
        .iter()
        .map(|row| row.iter().map(lifted_sqrt).collect())
        .collect();
    draw_channel_with_roots(&roots, sigma2, rng)
}

/// Draws a channel from precomputed lifted square roots (see [`draw_channel`]).
pub fn draw_channel_with_roots<T: Real, R: Rng + ?Sized>(
    roots: &[Vec<Matrix<T>>],
    sigma2: T,
    rng: &mut R,
) -> ChannelMatrix<T> {
    let k = roots.len();
    let l = roots.first().map_or(0, |r| r.len());
    let n = roots
        .first()
        .and_then(|r| r.first())
        .map_or(0, |m| m.rows() / 2);
    let half = T::of(0.5).sqrt();
    let mut h = CMatrix::zeros(k, l * n);
    let mut w = vec![T::zero(); 2 * n];
    for (ki, row) in roots.iter().enumerate() {
        for (li, root) in row.iter().enumerate() {
            for x in w.iter_mut() {
                *x = T::standard_normal(rng) * half;
            }
            // draw order: Re(w) then Im(w) via the lifted layout
            let hv = root.mul_vec(&w);
            for a in 0..n {
                h[(ki, li * n + a)] = Complex::new(hv[a], hv[n + a]);
            }
        }
    }
    ChannelMatrix::new(h, sigma2, n)
}

/// Geometry, large-scale fading and small-scale draw for one setup.
pub fn generate_channel<T: Real, R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<(GeometryRealization, ChannelMatrix<T>), ChannelError> {
    let geometry = generate_geometry(cfg, rng)?;
    let (corr, sigma2) = correlations_for_geometry::<T, _>(&geometry, cfg, rng)?;
    let channel = draw_channel(&corr, T::of(sigma2), rng);
    Ok((geometry, channel))
}
