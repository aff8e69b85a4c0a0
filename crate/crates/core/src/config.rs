//! Instance configuration: defaults, an optional TOML file, then flag overrides.
//!
//! ```toml
//! p = 3
//! gamma_x = "1/2"
//! v_s = "1/4"
//! stages = 12
//! work_prec = "26"
//! seed = 7
//! ```

use serde::Deserialize;

use crate::builder::Instance;
use crate::error::{Error, Result};
use crate::valgroup::{fmt_rat, int, parse_rat, Rat};

/// One source of settings; unset fields defer to earlier layers.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub p: Option<u32>,
    pub gamma_x: Option<String>,
    pub v_s: Option<String>,
    pub work_prec: Option<String>,
    pub stages: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {}", e.message())))
    }

    fn over(self, base: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            p: self.p.or(base.p),
            gamma_x: self.gamma_x.or(base.gamma_x),
            v_s: self.v_s.or(base.v_s),
            work_prec: self.work_prec.or(base.work_prec),
            stages: self.stages.or(base.stages),
            seed: self.seed.or(base.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceConfig {
    pub instance: Instance,
    pub stages: usize,
    pub work_prec: Rat,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            instance: Instance::default(),
            stages: 12,
            work_prec: int(26),
            seed: 0,
        }
    }
}

impl InstanceConfig {
    /// Applies `layers` in order over the defaults; `work_prec` defaults to
    /// `2 (stages + 1)`.
    pub fn resolve(layers: impl IntoIterator<Item = ConfigLayer>) -> Result<Self> {
        let merged = layers
            .into_iter()
            .fold(ConfigLayer::default(), |acc, layer| layer.over(acc));
        let d = Instance::default();
        let rat_or = |s: &Option<String>, name: &str, default: Rat| -> Result<Rat> {
            match s {
                Some(s) => parse_rat(s)
                    .map_err(|_| Error::Config(format!("{name} = `{s}` is not a rational"))),
                None => Ok(default),
            }
        };
        let stages = merged.stages.unwrap_or(12);
        let cfg = InstanceConfig {
            instance: Instance {
                p: merged.p.unwrap_or(d.p),
                gamma_x: rat_or(&merged.gamma_x, "gamma_x", d.gamma_x)?,
                v_s: rat_or(&merged.v_s, "v_s", d.v_s)?,
            },
            stages,
            work_prec: rat_or(&merged.work_prec, "work_prec", int(2 * (stages as i64 + 1)))?,
            seed: merged.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        if self.stages == 0 {
            return Err(Error::Config("stages must be at least 1".into()));
        }
        let floor = int(self.stages as i64 + 1);
        if self.work_prec <= floor {
            return Err(Error::Config(format!(
                "work_prec = {} must exceed stages + 1 = {}",
                fmt_rat(&self.work_prec),
                fmt_rat(&floor)
            )));
        }
        Ok(())
    }
}
