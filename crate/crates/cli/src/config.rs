//! Flat key=value configuration merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use thermkin_core::liouvillian::{EvolveOptions, Method};
use thermkin_core::metrics::SLD_CUTOFF;
use thermkin_core::protocols::{ModelFamily, DEFAULT_EQUIDIST_TOL};
use thermkin_core::quantum::DEFAULT_TAIL_TOL;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

type CResult<T> = std::result::Result<T, ConfigError>;

macro_rules! keys {
    ($($field:ident : $help:literal),* $(,)?) => {
        /// Every configuration key, also accepted as `--kebab-case` flag.
        #[derive(Args, Debug, Default, Clone)]
        pub struct Keys {
            /// key=value file; flags override its entries
            #[arg(long)]
            pub config: Option<PathBuf>,
            $(
                #[arg(long, help = $help)]
                pub $field: Option<String>,
            )*
        }

        pub const KNOWN_KEYS: &[&str] = &[$(stringify!($field)),*];

        impl Keys {
            fn flag_entries(&self) -> Vec<(&'static str, Option<&String>)> {
                vec![$((stringify!($field), self.$field.as_ref())),*]
            }
        }
    };
}

keys! {
    model: "qubit | ho | qbm",
    dim: "Fock truncation (ho, qbm)",
    omega: "level spacing; trap frequency for qbm",
    gamma: "coupling rate (qubit, ho)",
    mass: "particle mass (qbm)",
    cutoff: "Lorentz-Drude cutoff (qbm)",
    damping: "damping rate (qbm)",
    t_cold: "cold temperature",
    t_warm: "warm temperature",
    t_hot: "hot temperature",
    nbar_cold: "cold temperature as mean occupation",
    nbar_warm: "warm temperature as mean occupation",
    nbar_hot: "hot temperature as mean occupation",
    direction: "forward | backward (protocol3)",
    t_final: "final time",
    points: "number of output times",
    grid_chunks: "1 for a uniform grid, more for runs of doubling spacing",
    method: "rk | exponential | auto",
    rtol: "relative integrator tolerance",
    atol: "absolute integrator tolerance",
    max_steps: "integrator step budget",
    tail_tol: "largest thermal population allowed in the top Fock level",
    sld_cutoff: "relative eigenvalue cutoff in the QFI",
    equidist_tol: "fidelity residual for equidistance",
    deltas: "comma-separated temperature offsets (linres)",
    divergence_nbar_hot: "comma-separated hot occupations for the near-temperature comparison (linres)",
    full_spectrum: "decompose every invariant block, not only the population sector",
    out_dir: "output directory",
}

pub fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn parse_file(path: &Path) -> CResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> CResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
        let key = normalize_key(k);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("unknown key '{}' on line {}", k.trim(), n + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl Keys {
    /// File entries overridden by flags.
    pub fn merged(&self) -> CResult<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(p) => parse_file(p)?,
            None => BTreeMap::new(),
        };
        for (k, v) in self.flag_entries() {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Protocol3,
    Protocol2,
    Spectrum,
    Equidist,
    Linres,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub family: ModelFamily,
    pub t_cold: Option<f64>,
    pub t_warm: Option<f64>,
    pub t_hot: Option<f64>,
    pub backward: bool,
    pub t_final: f64,
    pub points: usize,
    pub grid_chunks: usize,
    pub evolve: EvolveOptions,
    pub sld_cutoff: f64,
    pub equidist_tol: f64,
    pub deltas: Option<Vec<f64>>,
    pub divergence_nbar_hot: Vec<f64>,
    pub full_spectrum: bool,
    pub out_dir: PathBuf,
    /// Resolved values in key order, for the manifest.
    pub resolved: Vec<(String, String)>,
    /// Assumptions the user did not state explicitly.
    pub flags: Vec<String>,
}

struct Reader {
    map: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
    flags: Vec<String>,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64_opt(&mut self, key: &str) -> CResult<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| ConfigError(format!("{key}: expected a number, got '{s}'")))?;
                if !v.is_finite() {
                    return Err(ConfigError(format!("{key}: must be finite, got '{s}'")));
                }
                self.resolved.push((key.into(), format!("{v:e}")));
                Ok(Some(v))
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CResult<f64> {
        match self.f64_opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.push((key.into(), format!("{default:e}")));
                Ok(default)
            }
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> CResult<f64> {
        let v = self.f64_or(key, default)?;
        if !(v > 0.0) {
            return Err(ConfigError(format!("{key}: must be positive, got {v}")));
        }
        Ok(v)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> CResult<usize> {
        let v = match self.raw(key) {
            None => default,
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got '{s}'")))?,
        };
        self.resolved.push((key.into(), v.to_string()));
        Ok(v)
    }

    fn list(&mut self, key: &str) -> CResult<Option<Vec<f64>>> {
        let Some(s) = self.raw(key).map(str::to_string) else {
            return Ok(None);
        };
        let v = s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError(format!("{key}: bad entry '{}'", x.trim())))
            })
            .collect::<CResult<Vec<_>>>()?;
        self.resolved.push((key.into(), s));
        Ok(Some(v))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> CResult<bool> {
        let v = match self.raw(key) {
            None => default,
            Some("true" | "1" | "yes") => true,
            Some("false" | "0" | "no") => false,
            Some(s) => return Err(ConfigError(format!("{key}: expected true/false, got '{s}'"))),
        };
        self.resolved.push((key.into(), v.to_string()));
        Ok(v)
    }

    /// Temperature from `t_<name>` or `nbar_<name>`, else the default
    /// occupation (recorded as an assumption).
    fn temperature(&mut self, family: &ModelFamily, name: &str, default: Option<Fallback>) -> CResult<Option<f64>> {
        let tk = format!("t_{name}");
        let nk = format!("nbar_{name}");
        let t = self.f64_opt(&tk)?;
        let n = self.f64_opt(&nk)?;
        let value = match (t, n, default) {
            (Some(_), Some(_), _) => return Err(ConfigError(format!("give only one of {tk} and {nk}"))),
            (Some(t), None, _) => Some(t),
            (None, Some(n), _) => Some(occupation_temperature(family, &nk, n)?),
            (None, None, Some(Fallback::Temperature(t))) => {
                self.flags.push(format!("default {tk} = {t}"));
                Some(t)
            }
            (None, None, Some(Fallback::Occupation(n))) => {
                self.flags.push(format!("default {nk} = {n}"));
                Some(occupation_temperature(family, &nk, n)?)
            }
            (None, None, None) => None,
        };
        if let Some(v) = value {
            if !(v > 0.0) {
                return Err(ConfigError(format!("{tk}: temperature must be positive, got {v}")));
            }
            self.resolved.push((format!("resolved_{tk}"), format!("{v:.16e}")));
        }
        Ok(value)
    }
}

fn occupation_temperature(family: &ModelFamily, key: &str, n: f64) -> CResult<f64> {
    family
        .temperature_for_occupation(n)
        .map_err(|e| ConfigError(format!("{key}: {e}")))
}

#[derive(Clone, Copy, Debug)]
enum Fallback {
    Temperature(f64),
    Occupation(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ModelName {
    Qubit,
    Ho,
    Qbm,
}

/// Build a run configuration for `cmd` from merged entries.
pub fn resolve(cmd: Command, map: BTreeMap<String, String>) -> CResult<RunConfig> {
    let mut r = Reader {
        map,
        resolved: Vec::new(),
        flags: Vec::new(),
    };
    let name = match r.raw("model").unwrap_or("qubit") {
        "qubit" => ModelName::Qubit,
        "ho" | "oscillator" => ModelName::Ho,
        "qbm" | "brownian" => ModelName::Qbm,
        other => return Err(ConfigError(format!("model: expected qubit, ho or qbm, got '{other}'"))),
    };
    r.resolved.push((
        "model".into(),
        match name {
            ModelName::Qubit => "qubit",
            ModelName::Ho => "ho",
            ModelName::Qbm => "qbm",
        }
        .into(),
    ));

    let (family, t_final_default, chunks_default, method_default) = match name {
        ModelName::Qubit => {
            let omega = r.positive("omega", 1.0)?;
            let gamma = r.positive("gamma", 0.1)?;
            (ModelFamily::qubit(omega, gamma), 6.0 / gamma, 6, Method::RungeKutta)
        }
        ModelName::Ho => {
            let dim = r.usize_or("dim", 150)?;
            let omega = r.positive("omega", 1.0)?;
            let gamma = r.positive("gamma", 0.1)?;
            let tail = r.positive("tail_tol", DEFAULT_TAIL_TOL)?;
            check_dim(dim)?;
            (
                ModelFamily::oscillator(dim, omega, gamma).with_tail_tol(tail),
                50.0,
                1,
                Method::Exponential,
            )
        }
        ModelName::Qbm => {
            // dense modes of this generator lose conditioning quickly with
            // size; at 16 the full spectrum is still resolved to 1e-10
            let spectrum = cmd == Command::Spectrum;
            let default_dim = if spectrum { 16 } else { 150 };
            let dim = r.usize_or("dim", default_dim)?;
            let omega = r.positive("omega", 1e-3)?;
            let mass = r.positive("mass", 1.0)?;
            let cutoff = r.positive("cutoff", 1.0)?;
            let damping = r.positive("damping", 0.1)?;
            let default_tail = if spectrum { 1e-2 } else { 1e-4 };
            if !r.map.contains_key("tail_tol") {
                r.flags.push(format!("qbm default tail_tol = {default_tail:e}"));
            }
            let tail = r.positive("tail_tol", default_tail)?;
            check_dim(dim)?;
            (
                ModelFamily::brownian(dim, mass, omega, cutoff, damping).with_tail_tol(tail),
                5000.0,
                10,
                Method::Exponential,
            )
        }
    };
    if tail_tol_given_for_qubit(&r, name) {
        return Err(ConfigError("tail_tol applies to ho and qbm only".into()));
    }

    // temperature defaults per command and model
    use Fallback::*;
    let (cold, warm, hot) = match (cmd, name) {
        (Command::Protocol3 | Command::Equidist, ModelName::Qubit) => (None, Some(Temperature(0.5)), Some(Temperature(1.5))),
        (Command::Protocol2 | Command::Spectrum, ModelName::Qubit) => (Some(Temperature(0.3)), None, Some(Temperature(1.5))),
        (Command::Linres, ModelName::Qubit) => (None, Some(Temperature(0.5)), None),
        (Command::Spectrum, ModelName::Qbm) => (Some(Occupation(1.0)), None, Some(Occupation(2.0))),
        (Command::Linres, _) => (Some(Occupation(1.0)), Some(Occupation(1.0)), None),
        (_, _) => (Some(Occupation(1.0)), None, Some(Occupation(10.0))),
    };
    // explicit warm + hot means solve for cold: drop the cold default
    let warm_given = r.map.contains_key("t_warm") || r.map.contains_key("nbar_warm");
    let cold_given = r.map.contains_key("t_cold") || r.map.contains_key("nbar_cold");
    let cold = if warm_given && !cold_given && matches!(cmd, Command::Protocol3 | Command::Equidist) {
        None
    } else {
        cold
    };
    let warm = if cold.is_some() && !warm_given && matches!(cmd, Command::Protocol3 | Command::Equidist) {
        None
    } else {
        warm
    };
    let t_cold = r.temperature(&family, "cold", cold)?;
    let t_warm = r.temperature(&family, "warm", warm)?;
    let t_hot = r.temperature(&family, "hot", hot)?;

    let backward = match r.raw("direction").unwrap_or("forward") {
        "forward" => false,
        "backward" => true,
        other => return Err(ConfigError(format!("direction: expected forward or backward, got '{other}'"))),
    };
    if matches!(cmd, Command::Protocol3) {
        r.resolved.push(("direction".into(), if backward { "backward" } else { "forward" }.into()));
    }
    let t_final = r.positive("t_final", t_final_default)?;
    let points = r.usize_or("points", 1201)?;
    if points < 5 {
        return Err(ConfigError(format!("points: need at least 5, got {points}")));
    }
    let grid_chunks = r.usize_or("grid_chunks", chunks_default)?;
    if grid_chunks == 0 {
        return Err(ConfigError("grid_chunks: must be at least 1".into()));
    }
    let method = match r.raw("method") {
        None => method_default,
        Some("rk" | "runge-kutta" | "dopri5") => Method::RungeKutta,
        Some("exponential" | "expo") => Method::Exponential,
        Some("auto") => Method::Auto,
        Some(other) => return Err(ConfigError(format!("method: expected rk, exponential or auto, got '{other}'"))),
    };
    r.resolved.push(("method".into(), format!("{method:?}")));
    let defaults = EvolveOptions::default();
    let evolve = EvolveOptions {
        rtol: r.positive("rtol", defaults.rtol)?,
        atol: r.positive("atol", defaults.atol)?,
        method,
        max_steps: r.usize_or("max_steps", defaults.max_steps)?,
    };
    let sld_cutoff = r.positive("sld_cutoff", SLD_CUTOFF)?;
    let equidist_tol = r.positive("equidist_tol", DEFAULT_EQUIDIST_TOL)?;
    let deltas = r.list("deltas")?;
    let divergence_nbar_hot = match r.list("divergence_nbar_hot")? {
        Some(v) => v,
        None if cmd == Command::Linres && name == ModelName::Ho => {
            r.flags.push("default divergence_nbar_hot = 1.1,2,5".into());
            vec![1.1, 2.0, 5.0]
        }
        None => Vec::new(),
    };
    let full_spectrum = r.bool_or("full_spectrum", false)?;
    let out_dir = PathBuf::from(r.raw("out_dir").unwrap_or("out"));
    r.resolved.push(("out_dir".into(), out_dir.display().to_string()));
    Ok(RunConfig {
        family,
        t_cold,
        t_warm,
        t_hot,
        backward,
        t_final,
        points,
        grid_chunks,
        evolve,
        sld_cutoff,
        equidist_tol,
        deltas,
        divergence_nbar_hot,
        full_spectrum,
        out_dir,
        resolved: r.resolved,
        flags: r.flags,
    })
}

fn tail_tol_given_for_qubit(r: &Reader, name: ModelName) -> bool {
    name == ModelName::Qubit && r.map.contains_key("tail_tol")
}

fn check_dim(dim: usize) -> CResult<()> {
    if dim < 2 {
        return Err(ConfigError(format!("dim: need at least 2, got {dim}")));
    }
    Ok(())
}
