//! Flat key = value run configuration with presets and full provenance.
//!
//! Every simulation parameter lives in one flat namespace. A preset fully
//! enumerates the defaults; `--set key=value` and config files override
//! them; unknown keys are rejected. The resolved map is written next to
//! every output as a JSON sidecar, and feeding that sidecar back through
//! `--config` reproduces the run bit by bit.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sivsim::constants;
use sivsim::eseem::si29_larmor_khz;
use sivsim::lindblad::{FineStructureModel, Variant};
use sivsim::spin::SpinSystem;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Key registry: every accepted parameter with its documentation.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "parameter preset: main_text or s7"),
    (
        "two_d_gs_mhz",
        "ground-state zero-field splitting 2*D_gs, MHz",
    ),
    (
        "two_d_es_mhz",
        "excited-state zero-field splitting 2*D_es, MHz",
    ),
    ("g_gs", "ground-state Lande factor"),
    ("g_es", "excited-state Lande factor"),
    ("b0_gauss", "axial magnetic field, gauss"),
    ("omega_l_mhz", "optical Rabi frequency, MHz"),
    ("delta_l_mhz", "laser detuning from the line centre, MHz"),
    ("lambda_mhz", "coherent doublet mixing, MHz"),
    ("gamma_r", "radiative decay rate per branch, 1/us"),
    ("gamma_1", "ISC rate es(+-1/2) -> ds1, 1/us"),
    ("gamma_2", "ISC rate es(+-3/2) -> ds2, 1/us"),
    ("gamma_3", "ISC rate ds1 -> gs(+-1/2), 1/us"),
    ("gamma_4", "ISC rate ds2 -> gs(+-3/2), 1/us"),
    (
        "gamma_relax",
        "intrinsic ground-state spin relaxation, 1/us",
    ),
    (
        "gs_mixing_rate",
        "extra ground mixing during excitation scans (broadband MW), 1/us",
    ),
    ("gamma_s", "doublet dephasing, 1/us"),
    (
        "mw1_rate",
        "incoherent MW1 mixing during optical segments, 1/us",
    ),
    (
        "mw2_rate",
        "incoherent MW2 mixing during optical segments, 1/us",
    ),
    (
        "mw3_rate",
        "incoherent MW3 mixing during optical segments, 1/us",
    ),
    ("mw_center_mhz", "broadband MW scheme centre, MHz"),
    ("mw_bandwidth_mhz", "broadband MW scheme bandwidth, MHz"),
    ("mw_rate", "broadband MW scheme mixing rate, 1/us"),
    ("drive_rabi_mhz", "bare microwave drive Rabi frequency, MHz"),
    (
        "detuning_mhz",
        "microwave drive detuning for FID fringes, MHz",
    ),
    ("a_par_khz", "parallel hyperfine coupling, kHz"),
    ("a_perp_khz", "orthogonal hyperfine coupling, kHz"),
    (
        "omega_i_khz",
        "nuclear Larmor frequency, kHz (0 = derive from b0)",
    ),
    ("t2_ms", "echo coherence time, ms"),
    ("t2_star_us", "free-induction dephasing time, us"),
    ("stretch_exponent", "echo envelope stretch exponent"),
    ("init_us", "initialising laser duration, us"),
    ("readout_us", "readout laser duration, us"),
    ("start", "sweep start (command-specific unit)"),
    ("stop", "sweep stop (command-specific unit)"),
    ("points", "sweep point count"),
    ("channel", "microwave channel: MW1, MW2 or MW3"),
    ("odmr_scheme", "ODMR initialisation: a2 or a2+mw3"),
    ("odmr_linewidth_mhz", "phenomenological ODMR line FWHM, MHz"),
    (
        "noise_sigma",
        "additive Gaussian noise level (0 = noiseless)",
    ),
    ("seed", "noise seed"),
    ("format", "output format: csv or json"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults of a preset, fully enumerated.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let (two_d_gs, two_d_es) = match name {
            "main_text" => (constants::TWO_D_GS_MAIN_MHZ, constants::TWO_D_ES_MAIN_MHZ),
            "s7" => (constants::TWO_D_GS_ALT_MHZ, constants::TWO_D_ES_ALT_MHZ),
            other => {
                return Err(ConfigError(format!(
                    "unknown preset `{other}` (expected main_text or s7)"
                )))
            }
        };
        let mut values = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            values.insert(k.to_string(), v);
        };
        put("preset", name.to_string());
        put("two_d_gs_mhz", two_d_gs.to_string());
        put("two_d_es_mhz", two_d_es.to_string());
        put("g_gs", constants::G_GS.to_string());
        put("g_es", constants::G_ES.to_string());
        put("b0_gauss", constants::B0_GAUSS.to_string());
        put("omega_l_mhz", constants::OMEGA_L_DEFAULT_MHZ.to_string());
        put("delta_l_mhz", "0".to_string());
        put("lambda_mhz", constants::LAMBDA_DEFAULT_MHZ.to_string());
        put("gamma_r", constants::GAMMA_R_DEFAULT.to_string());
        put("gamma_1", constants::GAMMA_1_DEFAULT.to_string());
        put("gamma_2", constants::GAMMA_2_DEFAULT.to_string());
        put("gamma_3", constants::GAMMA_3_DEFAULT.to_string());
        put("gamma_4", constants::GAMMA_4_DEFAULT.to_string());
        put("gamma_relax", constants::GAMMA_RELAX_DEFAULT.to_string());
        put("gs_mixing_rate", "1".to_string());
        put("gamma_s", constants::GAMMA_S_DEFAULT.to_string());
        put("mw1_rate", "0".to_string());
        put("mw2_rate", "0".to_string());
        put("mw3_rate", constants::MW_RATE_DEFAULT.to_string());
        put("mw_center_mhz", "258".to_string());
        put(
            "mw_bandwidth_mhz",
            constants::MW_BANDWIDTH_DEFAULT_MHZ.to_string(),
        );
        put("mw_rate", constants::MW_RATE_DEFAULT.to_string());
        put(
            "drive_rabi_mhz",
            constants::MW_DRIVE_DEFAULT_MHZ.to_string(),
        );
        put("detuning_mhz", "0.1".to_string());
        put("a_par_khz", "10".to_string());
        put("a_perp_khz", "29".to_string());
        put("omega_i_khz", "0".to_string());
        put("t2_ms", "0.85".to_string());
        put("t2_star_us", "30".to_string());
        put("stretch_exponent", "3".to_string());
        put("init_us", "30".to_string());
        put("readout_us", "0.15".to_string());
        put("start", "nan".to_string());
        put("stop", "nan".to_string());
        put("points", "0".to_string());
        put("channel", "MW1".to_string());
        put("odmr_scheme", "a2+mw3".to_string());
        put("odmr_linewidth_mhz", "1".to_string());
        put("noise_sigma", "0".to_string());
        put("seed", "0".to_string());
        put("format", "csv".to_string());
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if key == "preset" {
            // Re-resolve the preset defaults, keeping explicit overrides out
            // of scope: preset must come first.
            let fresh = Self::preset(value)?;
            self.values = fresh.values;
            return Ok(());
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError(format!(
                "unknown key `{key}`; run `sivsim keys` for the list"
            )));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply `--set key=value` arguments. A preset override is applied
    /// first wherever it appears, so it cannot silently erase other
    /// overrides from the same command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        let mut split = Vec::new();
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected key=value, got `{item}`")))?;
            split.push((key.trim(), value.trim()));
        }
        for (key, value) in split.iter().filter(|(k, _)| *k == "preset") {
            self.set(key, value)?;
        }
        for (key, value) in split.iter().filter(|(k, _)| *k != "preset") {
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Load overrides from a flat `key = value` text file or a JSON sidecar.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("invalid sidecar JSON: {e}")))?;
            let params = doc
                .get("params")
                .and_then(|p| p.as_object())
                .ok_or_else(|| ConfigError("sidecar has no `params` object".into()))?;
            if let Some(preset) = params.get("preset").and_then(|v| v.as_str()) {
                self.set("preset", preset)?;
            }
            for (k, v) in params {
                if k == "preset" {
                    continue;
                }
                let value = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                self.set(k, &value)?;
            }
            return Ok(());
        }
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", idx + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key {key} missing from resolved config"))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get_str(key).parse::<f64>().map_err(|_| {
            ConfigError(format!(
                "key `{key}` is not a number: {}",
                self.get_str(key)
            ))
        })
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, ConfigError> {
        let v = self.get_f64(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(ConfigError(format!(
                "key `{key}` must be a non-negative integer"
            )));
        }
        Ok(v as usize)
    }

    /// Sweep grid with per-command defaults when start/stop/points are unset.
    pub fn grid(
        &self,
        default_start: f64,
        default_stop: f64,
        default_points: usize,
    ) -> Result<Vec<f64>, ConfigError> {
        let start = self.get_f64("start")?;
        let stop = self.get_f64("stop")?;
        let points = self.get_usize("points")?;
        let start = if start.is_nan() { default_start } else { start };
        let stop = if stop.is_nan() { default_stop } else { stop };
        let points = if points == 0 { default_points } else { points };
        if stop <= start || points < 2 {
            return Err(ConfigError(format!(
                "invalid sweep: start {start}, stop {stop}, points {points}"
            )));
        }
        Ok(sivsim::trace::linspace(start, stop, points))
    }

    pub fn spin_system(&self) -> Result<SpinSystem, ConfigError> {
        Ok(SpinSystem::new(
            self.get_f64("two_d_gs_mhz")?,
            self.get_f64("two_d_es_mhz")?,
            self.get_f64("g_gs")?,
            self.get_f64("g_es")?,
            self.get_f64("b0_gauss")?,
        ))
    }

    fn base_model(&self) -> Result<FineStructureModel, ConfigError> {
        let mut model = FineStructureModel::main_text();
        model.d_gs = self.get_f64("two_d_gs_mhz")? / 2.0;
        model.d_es = self.get_f64("two_d_es_mhz")? / 2.0;
        model.omega_l = self.get_f64("omega_l_mhz")?;
        model.delta_l = self.get_f64("delta_l_mhz")?;
        model.lambda = self.get_f64("lambda_mhz")?;
        model.gamma_r = self.get_f64("gamma_r")?;
        model.gamma_1 = self.get_f64("gamma_1")?;
        model.gamma_2 = self.get_f64("gamma_2")?;
        model.gamma_3 = self.get_f64("gamma_3")?;
        model.gamma_4 = self.get_f64("gamma_4")?;
        model.gamma_relax = self.get_f64("gamma_relax")?;
        model.gamma_s = self.get_f64("gamma_s")?;
        Ok(model)
    }

    /// Six-level model from the resolved parameters.
    pub fn six_level_model(&self) -> Result<FineStructureModel, ConfigError> {
        self.base_model()
    }

    /// Ten-level model from the resolved parameters, with the optical-segment
    /// microwave mixing rates.
    pub fn ten_level_model(&self) -> Result<FineStructureModel, ConfigError> {
        let mut model = self.base_model()?;
        model.variant = Variant::TenLevel {
            b0_gauss: self.get_f64("b0_gauss")?,
            g_gs: self.get_f64("g_gs")?,
            g_es: self.get_f64("g_es")?,
            mw_mixing: [
                self.get_f64("mw1_rate")?,
                self.get_f64("mw2_rate")?,
                self.get_f64("mw3_rate")?,
            ],
        };
        Ok(model)
    }

    /// Nuclear coupling; omega_i_khz = 0 derives the 29Si Larmor frequency
    /// from the field.
    pub fn coupling(&self) -> Result<sivsim::pulse::NuclearCoupling, ConfigError> {
        let omega = self.get_f64("omega_i_khz")?;
        let omega = if omega == 0.0 {
            si29_larmor_khz(self.get_f64("b0_gauss")?)
        } else {
            omega
        };
        Ok(sivsim::pulse::NuclearCoupling::new(
            self.get_f64("a_par_khz")?,
            self.get_f64("a_perp_khz")?,
            omega,
        ))
    }

    pub fn sequence_config(&self) -> Result<sivsim::pulse::SequenceConfig, ConfigError> {
        Ok(sivsim::pulse::SequenceConfig {
            drive_rabi_mhz: self.get_f64("drive_rabi_mhz")?,
            detuning_mhz: self.get_f64("detuning_mhz")?,
            ..sivsim::pulse::SequenceConfig::default()
        })
    }

    /// Resolved parameters for the sidecar.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Sidecar document: command line plus every resolved parameter.
pub fn sidecar_json(command: &str, config: &RunConfig) -> String {
    let mut params = serde_json::Map::new();
    for (k, v) in config.resolved() {
        params.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let doc = serde_json::json!({
        "tool": "sivsim",
        "command": command,
        "params": params,
    });
    serde_json::to_string_pretty(&doc).expect("sidecar serialization")
}
