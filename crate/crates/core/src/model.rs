//! Scenario construction: system parameters, channel realizations, steering
//! vectors, transmit-frame synthesis, and the scalar sensing/communication
//! metrics consumed by the detector and the beamforming optimizer.
//!
//! All internal computation is in linear SI units (watts, meters, hertz);
//! dB/dBm conversion happens only at the scenario-file boundary so that
//! quantities spanning 15 orders of magnitude cannot be double-converted.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::OperatingPoint;
use crate::linalg;
use crate::rng::{sample_cscg, stream, CounterRng};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("frame synthesis needs at least as many slots as transmit antennas (L = {slots}, M_t = {m_t})")]
    UnsupportedSlotCount { slots: usize, m_t: usize },
    #[error("matrix is not Hermitian positive semidefinite (defect {0:.3e})")]
    NotPsd(f64),
    #[error("power budget exceeded: |w|^2 + tr(R0) = {total:.6e} > P = {budget:.6e}")]
    PowerBudgetExceeded { total: f64, budget: f64 },
    #[error("scenario file error: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// System-level parameters: array sizes, frame length, power and noise budget,
/// and the minimum communication SINR.
#[derive(Debug, Clone, Serialize)]
pub struct SystemConfig {
    pub m_t: usize,
    pub m_r: usize,
    pub slots: usize,
    /// Transmit power budget in watts.
    pub power: f64,
    /// Communication-user noise power in watts.
    pub sigma_c2: f64,
    /// Sensing noise power per receive antenna in watts.
    pub sigma_s2: f64,
    /// Minimum communication SINR, linear.
    pub gamma_0: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m_t: 16,
            m_r: 16,
            slots: 1024,
            power: 1.0,      // 30 dBm
            sigma_c2: 1e-11, // -80 dBm
            sigma_s2: 1e-11, // -80 dBm
            gamma_0: 0.0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("m_t", self.m_t as f64),
            ("m_r", self.m_r as f64),
            ("slots", self.slots as f64),
            ("power", self.power),
            ("sigma_c2", self.sigma_c2),
            ("sigma_s2", self.sigma_s2),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        if !self.gamma_0.is_finite() || self.gamma_0 < 0.0 {
            return Err(ModelError::Negative {
                name: "gamma_0",
                value: self.gamma_0,
            });
        }
        Ok(())
    }
}

/// Propagation-model parameters for channel generation.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelModelParams {
    /// Rician factor, linear.
    pub rician_k: f64,
    /// Reference path loss at distance `d0`, in dB.
    pub l0_db: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Path-loss exponent.
    pub beta0: f64,
    /// Base-station to communication-user distance, meters.
    pub d_bc: f64,
    /// Base-station to target distance, meters.
    pub d1: f64,
    /// Target to sensing-receiver distance, meters.
    pub d2: f64,
    /// Target radar cross-section, square meters.
    pub sigma_t: f64,
    /// Carrier frequency, hertz.
    pub carrier_hz: f64,
    pub light_speed: f64,
    /// Angular position of the communication user as seen from the transmit
    /// array. The line-of-sight component steers toward this angle.
    pub cu_angle_rad: f64,
    /// Target angle at the transmit array.
    pub target_tx_angle_rad: f64,
    /// Target angle at the sensing receive array.
    pub target_rx_angle_rad: f64,
}

impl Default for ChannelModelParams {
    fn default() -> Self {
        ChannelModelParams {
            rician_k: 1.0,
            l0_db: -30.0,
            d0: 1.0,
            beta0: 2.5,
            d_bc: 1000.0,
            d1: 260.0,
            d2: 260.0,
            sigma_t: 0.5,
            carrier_hz: 8e8,
            light_speed: SPEED_OF_LIGHT,
            cu_angle_rad: 0.0,
            target_tx_angle_rad: PI / 6.0,
            target_rx_angle_rad: PI / 4.0,
        }
    }
}

impl ChannelModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("d0", self.d0),
            ("d_bc", self.d_bc),
            ("d1", self.d1),
            ("d2", self.d2),
            ("carrier_hz", self.carrier_hz),
            ("light_speed", self.light_speed),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        for (name, value) in [("rician_k", self.rician_k), ("sigma_t", self.sigma_t)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::Negative { name, value });
            }
        }
        Ok(())
    }
}

/// One realized scenario draw: communication channel, target steering vectors,
/// and the target channel coefficient.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Base-station to communication-user channel, length M_t.
    pub h: DVector<Complex64>,
    /// Transmit steering vector toward the target, |a|^2 = M_t.
    pub a: DVector<Complex64>,
    /// Receive steering vector toward the target, |b|^2 = M_r.
    pub b: DVector<Complex64>,
    /// Complex coefficient of the transmitter-target-receiver path.
    pub alpha: Complex64,
}

/// Transmit design: information beamformer `w` and deterministic-signal
/// sample covariance `R0`.
#[derive(Debug, Clone)]
pub struct BeamformerDesign {
    pub w: DVector<Complex64>,
    pub r0: DMatrix<Complex64>,
}

impl BeamformerDesign {
    /// Validates Hermitian positive semidefiniteness of `R0` and the power
    /// budget `|w|^2 + tr(R0) <= power` (within small rounding slack).
    pub fn new(
        w: DVector<Complex64>,
        r0: DMatrix<Complex64>,
        power_budget: f64,
    ) -> Result<Self, ModelError> {
        if r0.nrows() != w.len() || !r0.is_square() {
            return Err(ModelError::ShapeMismatch(format!(
                "w has length {}, R0 is {}x{}",
                w.len(),
                r0.nrows(),
                r0.ncols()
            )));
        }
        let defect = linalg::hermitian_defect(&r0);
        if defect > 1e-9 {
            return Err(ModelError::NotPsd(defect));
        }
        let trace = r0.diagonal().iter().map(|z| z.re).sum::<f64>();
        let min_eig = linalg::hermitian_eigenvalues(&r0)
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -1e-9 * trace.max(1e-30) {
            return Err(ModelError::NotPsd(-min_eig));
        }
        let total = w.norm_squared() + trace;
        if total > power_budget + 1e-9 * power_budget.max(1.0) {
            return Err(ModelError::PowerBudgetExceeded {
                total,
                budget: power_budget,
            });
        }
        Ok(BeamformerDesign { w, r0 })
    }

    pub fn comm_power(&self) -> f64 {
        self.w.norm_squared()
    }

    pub fn deterministic_power(&self) -> f64 {
        self.r0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn total_power(&self) -> f64 {
        self.comm_power() + self.deterministic_power()
    }
}

/// A concrete transmit frame: deterministic slots and information symbols.
#[derive(Debug, Clone)]
pub struct TransmitFrame {
    /// Deterministic sensing slots, M_t x L.
    pub x0: DMatrix<Complex64>,
    /// Information symbols, length L; i.i.d. CSCG(0,1) when sampled.
    pub symbols: DVector<Complex64>,
}

impl TransmitFrame {
    /// Frame with the given deterministic slots and zeroed symbols.
    pub fn deterministic(x0: DMatrix<Complex64>) -> Self {
        let l = x0.ncols();
        TransmitFrame {
            x0,
            symbols: DVector::zeros(l),
        }
    }

    /// Draws fresh CSCG(0,1) symbols in place.
    pub fn sample_symbols<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for s in self.symbols.iter_mut() {
            *s = sample_cscg(rng, 1.0);
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Distance-dependent power gain `10^(L0/10) * (d/d0)^(-beta0)`.
pub fn path_loss(d: f64, params: &ChannelModelParams) -> Result<f64, ModelError> {
    if !(d > 0.0) {
        return Err(ModelError::NonPositive {
            name: "distance",
            value: d,
        });
    }
    Ok(db_to_linear(params.l0_db) * (d / params.d0).powf(-params.beta0))
}

/// Power gain |alpha|^2 of the transmitter-target-receiver path:
/// eta * sigma_t / (d1^2 d2^2) with eta = c^2 / (64 pi^3 f^2).
pub fn target_channel_gain(params: &ChannelModelParams) -> f64 {
    let eta = params.light_speed * params.light_speed
        / (64.0 * PI.powi(3) * params.carrier_hz * params.carrier_hz);
    eta * params.sigma_t / (params.d1 * params.d1 * params.d2 * params.d2)
}

/// Half-wavelength uniform-linear-array steering vector: unit-modulus phase
/// ramp exp(j pi sin(angle) k), so its squared norm equals the element count.
fn ula_steering(angle_rad: f64, elements: usize) -> DVector<Complex64> {
    let phase_step = PI * angle_rad.sin();
    DVector::from_fn(elements, |k, _| {
        Complex64::from_polar(1.0, phase_step * k as f64)
    })
}

/// Transmit/receive steering vectors toward the given angles.
pub fn steering_vectors(
    angle_t: f64,
    angle_r: f64,
    config: &SystemConfig,
) -> (DVector<Complex64>, DVector<Complex64>) {
    (
        ula_steering(angle_t, config.m_t),
        ula_steering(angle_r, config.m_r),
    )
}

/// Rician-fading communication channel
/// h = sqrt(path_loss) (sqrt(K/(K+1)) h_los + sqrt(1/(K+1)) h_nlos),
/// with a unit-modulus line-of-sight steering component and i.i.d. CSCG(0,1)
/// scattered entries. Deterministic given the seed.
pub fn sample_rician_channel(
    params: &ChannelModelParams,
    config: &SystemConfig,
    seed: u64,
) -> Result<DVector<Complex64>, ModelError> {
    let pl = path_loss(params.d_bc, params)?;
    let k = params.rician_k;
    let los_scale = (pl * k / (k + 1.0)).sqrt();
    let nlos_scale = (pl / (k + 1.0)).sqrt();
    let h_los = ula_steering(params.cu_angle_rad, config.m_t);
    let mut rng = CounterRng::from_key(seed, 0, 0, stream::CHANNEL_NLOS);
    let h_nlos = DVector::from_fn(config.m_t, |_, _| sample_cscg(&mut rng, 1.0));
    Ok(h_los * Complex64::new(los_scale, 0.0) + h_nlos * Complex64::new(nlos_scale, 0.0))
}

/// Draws a full channel realization: Rician communication channel, target
/// steering vectors, and a target coefficient with the geometric magnitude
/// and a uniformly random phase.
pub fn sample_channel_set(
    params: &ChannelModelParams,
    config: &SystemConfig,
    seed: u64,
) -> Result<ChannelSet, ModelError> {
    params.validate()?;
    config.validate()?;
    let h = sample_rician_channel(params, config, seed)?;
    let (a, b) = steering_vectors(
        params.target_tx_angle_rad,
        params.target_rx_angle_rad,
        config,
    );
    let mut rng = CounterRng::from_key(seed, 0, 0, stream::TARGET_PHASE);
    let phase = rng.random::<f64>() * 2.0 * PI;
    let alpha = Complex64::from_polar(target_channel_gain(params).sqrt(), phase);
    Ok(ChannelSet { h, a, b, alpha })
}

/// Synthesizes deterministic slots X0 with exact sample covariance:
/// X0 = sqrt(L) R0^{1/2} U, where U holds the first M_t rows of the unitary
/// L-point DFT matrix, so (1/L) X0 X0^H = R0 up to rounding.
pub fn synthesize_deterministic_frame(
    r0: &DMatrix<Complex64>,
    slots: usize,
) -> Result<DMatrix<Complex64>, ModelError> {
    let m_t = r0.nrows();
    if !r0.is_square() {
        return Err(ModelError::ShapeMismatch(format!(
            "R0 is {}x{}",
            r0.nrows(),
            r0.ncols()
        )));
    }
    if slots < m_t {
        return Err(ModelError::UnsupportedSlotCount { slots, m_t });
    }
    let defect = linalg::hermitian_defect(r0);
    if defect > 1e-9 {
        return Err(ModelError::NotPsd(defect));
    }
    let sqrt = linalg::hermitian_sqrt(r0);
    let l = slots as f64;
    let dft = DMatrix::from_fn(m_t, slots, |k, n| {
        Complex64::from_polar(1.0 / l.sqrt(), -2.0 * PI * (k * n) as f64 / l)
    });
    Ok(sqrt * dft * Complex64::new(l.sqrt(), 0.0))
}

/// Communication SINR and achievable rate at the user:
/// gamma = |h^H w|^2 / (h^H R0 h + sigma_c^2), rate = log2(1 + gamma).
pub fn comm_metrics(
    design: &BeamformerDesign,
    h: &DVector<Complex64>,
    sigma_c2: f64,
) -> (f64, f64) {
    let signal = h.dotc(&design.w).norm_sqr();
    let interference = (h.adjoint() * &design.r0 * h)[(0, 0)].re;
    let gamma = signal / (interference + sigma_c2);
    (gamma, (1.0 + gamma).log2())
}

/// Received-signal-to-noise ratios at the sensing receiver:
/// gamma_c for the Gaussian component, gamma_s for the deterministic one.
pub fn sensing_snrs(
    design: &BeamformerDesign,
    alpha: Complex64,
    a: &DVector<Complex64>,
    config: &SystemConfig,
) -> OperatingPoint {
    let m_r = config.m_r as f64;
    let gain = alpha.norm_sqr() * m_r / config.sigma_s2;
    let a_t_w = a.dot(&design.w);
    let gamma_c = gain * a_t_w.norm_sqr();
    let a_conj = a.map(|z| z.conj());
    let quad = (a_conj.adjoint() * &design.r0 * &a_conj)[(0, 0)].re;
    let gamma_s = gain * quad.max(0.0);
    OperatingPoint::new(gamma_c, gamma_s, config.slots)
        .expect("sensing SNRs are finite and nonnegative by construction")
}

/// A complete simulation scenario: system configuration plus channel model.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Scenario {
    pub config: SystemConfig,
    pub channel: ChannelModelParams,
}

/// On-disk scenario schema. Powers are in dBm, the SINR threshold in dB,
/// distances in meters; every field is optional and defaults to the baseline
/// configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub m_t: Option<usize>,
    pub m_r: Option<usize>,
    pub l: Option<usize>,
    pub p_dbm: Option<f64>,
    pub sigma_c2_dbm: Option<f64>,
    pub sigma_s2_dbm: Option<f64>,
    pub gamma_0_db: Option<f64>,
    pub k: Option<f64>,
    pub l0_db: Option<f64>,
    pub d0_m: Option<f64>,
    pub beta0: Option<f64>,
    pub d_bc_m: Option<f64>,
    pub d1_m: Option<f64>,
    pub d2_m: Option<f64>,
    pub sigma_t_m2: Option<f64>,
    pub f_hz: Option<f64>,
    pub cu_angle_rad: Option<f64>,
    pub target_tx_angle_rad: Option<f64>,
    pub target_rx_angle_rad: Option<f64>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ModelError> {
        let mut config = SystemConfig::default();
        let mut channel = ChannelModelParams::default();
        if let Some(v) = self.m_t {
            config.m_t = v;
        }
        if let Some(v) = self.m_r {
            config.m_r = v;
        }
        if let Some(v) = self.l {
            config.slots = v;
        }
        if let Some(v) = self.p_dbm {
            config.power = dbm_to_watts(v);
        }
        if let Some(v) = self.sigma_c2_dbm {
            config.sigma_c2 = dbm_to_watts(v);
        }
        if let Some(v) = self.sigma_s2_dbm {
            config.sigma_s2 = dbm_to_watts(v);
        }
        if let Some(v) = self.gamma_0_db {
            config.gamma_0 = db_to_linear(v);
        }
        if let Some(v) = self.k {
            channel.rician_k = v;
        }
        if let Some(v) = self.l0_db {
            channel.l0_db = v;
        }
        if let Some(v) = self.d0_m {
            channel.d0 = v;
        }
        if let Some(v) = self.beta0 {
            channel.beta0 = v;
        }
        if let Some(v) = self.d_bc_m {
            channel.d_bc = v;
        }
        if let Some(v) = self.d1_m {
            channel.d1 = v;
        }
        if let Some(v) = self.d2_m {
            channel.d2 = v;
        }
        if let Some(v) = self.sigma_t_m2 {
            channel.sigma_t = v;
        }
        if let Some(v) = self.f_hz {
            channel.carrier_hz = v;
        }
        if let Some(v) = self.cu_angle_rad {
            channel.cu_angle_rad = v;
        }
        if let Some(v) = self.target_tx_angle_rad {
            channel.target_tx_angle_rad = v;
        }
        if let Some(v) = self.target_rx_angle_rad {
            channel.target_rx_angle_rad = v;
        }
        config.validate()?;
        channel.validate()?;
        Ok(Scenario { config, channel })
    }
}

pub fn parse_scenario(json: &str) -> Result<Scenario, ModelError> {
    let file: ScenarioFile =
        serde_json::from_str(json).map_err(|e| ModelError::BadScenario(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ModelError> {
    parse_scenario(&std::fs::read_to_string(path)?)
}
