//! JSON run configuration with `--set key=value` overrides.

use std::path::{Path, PathBuf};

use emt_core::config::Config;
use emt_core::powertrain::{EngineMap, MachineMap, PowertrainModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io;

/// Optional component map files. Unset entries use the bundled synthetic
/// maps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapPaths {
    pub engine_fuel: Option<PathBuf>,
    pub engine_max_torque: Option<PathBuf>,
    pub machine_a_eff: Option<PathBuf>,
    pub machine_a_max_power: Option<PathBuf>,
    pub machine_b_eff: Option<PathBuf>,
    pub machine_b_max_power: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub core: Config,
    pub maps: MapPaths,
}

/// Set `path` (dot separated) in `root` to `raw`, parsed as JSON when
/// possible and as a string otherwise. The key must already exist.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> CliResult<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("--set {path}: {} is not a section", parts[..i].join("."))))?;
        let child = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::Usage(format!("--set {path}: unknown key {part:?}")))?;
        node = child;
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok(())
}

/// Defaults, then the file (if any), then overrides in order.
pub fn load(file: Option<&Path>, overrides: &[String]) -> CliResult<RunConfig> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("defaults serialise");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let user: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        merge(&mut value, user);
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {o:?}")))?;
        apply_override(&mut value, k.trim(), v.trim())?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Data(format!("config: {e}")))?;
    cfg.core.validate().map_err(|e| CliError::Data(format!("config: {e}")))?;
    Ok(cfg)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn machine(eff: &Option<PathBuf>, pmax: &Option<PathBuf>, fallback: MachineMap) -> CliResult<MachineMap> {
    match (eff, pmax) {
        (None, None) => Ok(fallback),
        (Some(e), Some(p)) => {
            let table = io::parse_map(&read(e)?).map_err(|x| CliError::format(e, x))?;
            let curve = io::parse_curve(&read(p)?).map_err(|x| CliError::format(p, x))?;
            MachineMap::new(table, curve).map_err(|x| CliError::Data(format!("{}: {x}", e.display())))
        }
        _ => Err(CliError::Usage("machine maps need both an efficiency map and a max-power curve".into())),
    }
}

impl RunConfig {
    pub fn model(&self) -> CliResult<PowertrainModel> {
        let synth = PowertrainModel::synthetic();
        let m = &self.maps;
        let engine = match (&m.engine_fuel, &m.engine_max_torque) {
            (None, None) => synth.engine,
            (Some(f), Some(t)) => {
                let table = io::parse_map(&read(f)?).map_err(|x| CliError::format(f, x))?;
                let curve = io::parse_curve(&read(t)?).map_err(|x| CliError::format(t, x))?;
                if curve.xs() != table.x().points() {
                    return Err(CliError::Data(format!(
                        "{}: torque curve must be given at the fuel map's speed nodes",
                        t.display()
                    )));
                }
                EngineMap::new(table, curve.ys().to_vec()).map_err(|x| CliError::Data(format!("{}: {x}", f.display())))?
            }
            _ => return Err(CliError::Usage("engine maps need both a fuel map and a max-torque curve".into())),
        };
        let model = PowertrainModel {
            engine,
            machine_a: machine(&m.machine_a_eff, &m.machine_a_max_power, synth.machine_a)?,
            machine_b: machine(&m.machine_b_eff, &m.machine_b_max_power, synth.machine_b)?,
            battery: self.core.battery.clone(),
            vehicle: self.core.vehicle.clone(),
        };
        model.validate().map_err(|e| CliError::Data(format!("config: {e}")))?;
        Ok(model)
    }
}
