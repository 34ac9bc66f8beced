//! Single-cell deployment: system parameters, device placement and large-scale fading.
//!
//! Devices are dropped uniformly over the area of the annulus between the
//! minimum distance and the cell radius. Large-scale fading follows the
//! deterministic path-loss law `130 + 37.6 log10(d_km)` dB with no shadowing.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static system parameters of the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of base-station antennas `M`.
    pub antennas: usize,
    /// Coherence-interval length `N` in samples.
    pub ci_length: usize,
    /// Number of human-type devices `K_h`.
    pub humans: usize,
    /// Number of machine-type devices `K_m`.
    pub machines: usize,
    pub cell_radius_m: f64,
    pub d_min_m: f64,
    /// Total receiver noise power in watts.
    pub noise_power_w: f64,
    /// Pilot power cap in watts.
    pub q_max_w: f64,
    /// Data power cap in watts.
    pub p_max_w: f64,
    pub rng_seed: u64,
}

impl SystemParams {
    /// The simulation defaults: 250 m cell, 20 m exclusion, 2e-13 W noise,
    /// 1 W power caps, 5 humans and 45 machines.
    pub fn table_one(antennas: usize, ci_length: usize, rng_seed: u64) -> Self {
        Self {
            antennas,
            ci_length,
            humans: 5,
            machines: 45,
            cell_radius_m: 250.0,
            d_min_m: 20.0,
            noise_power_w: 2e-13,
            q_max_w: 1.0,
            p_max_w: 1.0,
            rng_seed,
        }
    }

    pub fn device_count(&self) -> usize {
        self.humans + self.machines
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.antennas == 0 {
            return bad("antenna count must be at least 1".into());
        }
        if self.ci_length < self.humans + 1 {
            return bad(format!(
                "coherence interval N = {} must exceed the human count {}",
                self.ci_length, self.humans
            ));
        }
        if self.device_count() == 0 {
            return bad("the cell needs at least one device".into());
        }
        if !(self.d_min_m > 0.0 && self.d_min_m < self.cell_radius_m) {
            return bad(format!(
                "need 0 < d_min ({}) < cell radius ({})",
                self.d_min_m, self.cell_radius_m
            ));
        }
        if !(self.noise_power_w > 0.0) {
            return bad("noise power must be positive".into());
        }
        if !(self.q_max_w > 0.0 && self.p_max_w > 0.0) {
            return bad("power caps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceClass {
    Human,
    Machine,
}

impl DeviceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeviceClass::Human => "human",
            DeviceClass::Machine => "machine",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: usize,
    pub class: DeviceClass,
    pub distance_m: f64,
    /// Linear large-scale fading coefficient.
    pub beta: f64,
}

/// An immutable deployment. Humans occupy indices `0..K_h`, machines follow.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    params: SystemParams,
    devices: Vec<Device>,
    beta_min: f64,
}

/// Path loss in dB at `distance_m` meters.
pub fn path_loss_db(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    Ok(130.0 + 37.6 * (distance_m / 1000.0).log10())
}

/// Linear large-scale fading coefficient at `distance_m` meters.
pub fn beta_from_distance(distance_m: f64) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(distance_m)? / 10.0))
}

/// Drops `K_h + K_m` devices uniformly over the annulus area, deterministically in the seed.
pub fn place_devices(params: &SystemParams) -> Result<Scenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let r2_min = params.d_min_m * params.d_min_m;
    let r2_max = params.cell_radius_m * params.cell_radius_m;
    let mut devices = Vec::with_capacity(params.device_count());
    for id in 0..params.device_count() {
        let u: f64 = rng.random();
        // clamp guards the sqrt rounding at the annulus edges
        let distance_m = (r2_min + u * (r2_max - r2_min))
            .sqrt()
            .clamp(params.d_min_m, params.cell_radius_m);
        let class = if id < params.humans { DeviceClass::Human } else { DeviceClass::Machine };
        devices.push(Device { id, class, distance_m, beta: beta_from_distance(distance_m)? });
    }
    Scenario::from_devices(params.clone(), devices)
}

impl Scenario {
    /// Builds a scenario from an explicit device table (replay mode).
    pub fn from_devices(params: SystemParams, devices: Vec<Device>) -> Result<Self> {
        params.validate()?;
        if devices.len() != params.device_count() {
            return Err(Error::InvalidParameter(format!(
                "device table has {} rows, expected K_h + K_m = {}",
                devices.len(),
                params.device_count()
            )));
        }
        for (idx, dev) in devices.iter().enumerate() {
            let expected = if idx < params.humans { DeviceClass::Human } else { DeviceClass::Machine };
            if dev.class != expected {
                return Err(Error::InvalidParameter(format!(
                    "device {idx} must be a {}: humans precede machines",
                    expected.as_str()
                )));
            }
            if dev.id != idx {
                return Err(Error::InvalidParameter(format!("device ids must be 0..K, row {idx} has id {}", dev.id)));
            }
            if dev.distance_m < params.d_min_m || dev.distance_m > params.cell_radius_m {
                return Err(Error::InvalidParameter(format!(
                    "device {idx} at {} m lies outside [{}, {}]",
                    dev.distance_m, params.d_min_m, params.cell_radius_m
                )));
            }
            if !(dev.beta > 0.0) {
                return Err(Error::InvalidParameter(format!("device {idx} has non-positive beta")));
            }
        }
        let beta_min = beta_from_distance(params.cell_radius_m)?;
        Ok(Self { params, devices, beta_min })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn antennas(&self) -> usize {
        self.params.antennas
    }

    pub fn noise_power(&self) -> f64 {
        self.params.noise_power_w
    }

    pub fn human_count(&self) -> usize {
        self.params.humans
    }

    pub fn machine_count(&self) -> usize {
        self.params.machines
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn humans(&self) -> std::ops::Range<usize> {
        0..self.params.humans
    }

    pub fn machines(&self) -> std::ops::Range<usize> {
        self.params.humans..self.devices.len()
    }

    pub fn class(&self, device: usize) -> DeviceClass {
        self.devices[device].class
    }

    pub fn betas(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.beta).collect()
    }

    /// Same deployment observed by a base station with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Result<Self> {
        let mut params = self.params.clone();
        params.antennas = antennas;
        Self::from_devices(params, self.devices.clone())
    }

    /// Same deployment with a different coherence-interval length.
    pub fn with_ci_length(&self, ci_length: usize) -> Result<Self> {
        let mut params = self.params.clone();
        params.ci_length = ci_length;
        Self::from_devices(params, self.devices.clone())
    }

    pub fn to_toml(&self) -> Result<String> {
        let file = ScenarioFile {
            params: self.params.clone(),
            devices: self
                .devices
                .iter()
                .map(|d| DeviceRecord {
                    id: d.id,
                    class: d.class,
                    distance_m: d.distance_m,
                    beta: Some(d.beta),
                })
                .collect(),
        };
        Ok(toml::to_string_pretty(&file)?)
    }

    /// Parses a scenario file. A file without a device table is treated as
    /// parameters only and the devices are generated from its seed.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.devices.is_empty() {
            return place_devices(&file.params);
        }
        let devices = file
            .devices
            .into_iter()
            .map(|rec| {
                let beta = match rec.beta {
                    Some(b) => b,
                    None => beta_from_distance(rec.distance_m)?,
                };
                Ok(Device { id: rec.id, class: rec.class, distance_m: rec.distance_m, beta })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_devices(file.params, devices)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    params: SystemParams,
    #[serde(default)]
    devices: Vec<DeviceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceRecord {
    id: usize,
    class: DeviceClass,
    distance_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}
