use crate::error::{Error, Result};

/// Thresholds shared by every stage of the tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Confusion reduction factor shared by the three disambiguation passes.
    pub kappa: f64,
    /// Minimum confidence for the reliable pool.
    pub conf_first: f64,
    /// Minimum confidence for the unreliable pool.
    pub conf_second: f64,
    /// Overlap up to which a detection is kept as-is.
    pub nms_first: f64,
    /// Overlap up to which a confident detection is kept as unreliable.
    pub nms_second: f64,
    /// Minimum LocSim accepted by the first association.
    pub gate_first: f64,
    /// Minimum LocSim accepted by the second association.
    pub gate_second: f64,
    /// Minimum confidence for an unmatched reliable detection to start a track.
    pub init_conf: f64,
    /// Frames a lost track survives without an update.
    pub max_age: u32,
    /// Weight of the existing appearance feature in the moving average.
    pub ema_alpha: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            kappa: 0.3,
            conf_first: 0.6,
            conf_second: 0.1,
            nms_first: 0.7,
            nms_second: 0.95,
            gate_first: 0.2,
            gate_second: 0.5,
            init_conf: 0.7,
            max_age: 30,
            ema_alpha: 0.9,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("kappa", self.kappa),
            ("conf_first", self.conf_first),
            ("conf_second", self.conf_second),
            ("nms_first", self.nms_first),
            ("nms_second", self.nms_second),
            ("gate_first", self.gate_first),
            ("gate_second", self.gate_second),
            ("init_conf", self.init_conf),
            ("ema_alpha", self.ema_alpha),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.nms_first > self.nms_second {
            return Err(Error::Config(format!(
                "nms_first ({}) must not exceed nms_second ({})",
                self.nms_first, self.nms_second
            )));
        }
        if self.conf_second >= self.conf_first {
            return Err(Error::Config(format!(
                "conf_second ({}) must be below conf_first ({})",
                self.conf_second, self.conf_first
            )));
        }
        if self.max_age < 1 {
            return Err(Error::Config("max_age must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
        };
        match key {
            "kappa" => self.kappa = real()?,
            "conf_first" => self.conf_first = real()?,
            "conf_second" => self.conf_second = real()?,
            "nms_first" => self.nms_first = real()?,
            "nms_second" => self.nms_second = real()?,
            "gate_first" => self.gate_first = real()?,
            "gate_second" => self.gate_second = real()?,
            "init_conf" => self.init_conf = real()?,
            "ema_alpha" => self.ema_alpha = real()?,
            "max_age" => {
                self.max_age = value
                    .parse()
                    .map_err(|_| Error::Config(format!("max_age: '{value}' is not an integer")))?
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines with `#` comments on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
