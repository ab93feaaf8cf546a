//! Flat `key = value` run configuration with dotted section keys.
//!
//! Every key has a default; a file only lists what it changes. Receiver keys
//! are overrides applied on top of the reference receiver of each junction
//! count in `sweep.junctions`, so one file can drive N = 1 and N = 4 sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use slipt_core::ehmodel::EhModelKind;
use slipt_core::format::float;
use slipt_core::infotheory::{InputDistribution, NoiseModel};
use slipt_core::quad::{linspace, logspace};
use slipt_core::spectral::{
    photocurrents, AmbientModel, EnergySignal, InfoSignal, PhotocurrentState, PhysicalConstants,
    ReceiverSpec, SpectralBand,
};

use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn bad(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

/// Key reference printed by `--help`.
pub const KEY_HELP: &str = "\
CONFIG KEYS (flat `key = value`, `#` starts a comment; grids are comma lists of
numbers, linspace(a,b,n) and logspace(a,b,n)):
  receiver.r_load_ohm, receiver.r_info_ohm    EH load R_L and information load R_d [ohm]
  receiver.c_info_f, receiver.inductance_h    filter C_d [F] and L [H]
  receiver.v_t_v                              thermal voltage [V]
  receiver.cell_area_m2                       cell area A_P [m^2]
  receiver.info_junction                      junction absorbing the carrier (1-based)
  receiver.info_responsivity_a_per_w          explicit r(lambda_0) [A/W]
  receiver.junctionK.lambda_min_nm, .lambda_max_nm   passband of junction K [nm]
  receiver.junctionK.eta                      conversion efficiency
  receiver.junctionK.i_sat1_a, .i_sat2_a      diode saturation currents [A]
  receiver.junctionK.r_sh_ohm, .r_s_ohm       shunt and series resistance [ohm]
  constants.t_sun_k, .alpha_se_sr, .sun_area_m2, .earth_area_m2
  energy.layout                               reference | midpoints
  energy.gain                                 channel gain of every energy line
  info.lambda_nm, info.gain                   carrier wavelength [nm] and gain h
  info.a_sq_w, info.period_s                  default peak power [W] and symbol period [s]
  noise.sigma_sq_w                            output noise variance [W]
  model                                       auto | accurate | approximate | closed-form-single |
                                              closed-form-multi | baseline-single-diode | baseline-mpp
  seed                                        Monte Carlo seed
  sweep.junctions                             junction counts, e.g. 1,4
  sweep.mu_a, sweep.p_w, sweep.s_w, sweep.a_sq_w   ambient levels, energy powers [W],
                                              transmit powers [W], peak powers [W]
  sweep.models                                all | comma list of model tags and circuit-oracle
  sweep.dists                                 comma list of optimal, uniform
  ber.trials                                  Monte Carlo trials per point
  tradeoff.p_w, tradeoff.a_sq_w               tradeoff grids [W]
  transient.junctions, .mu_a, .p_w            receiver and operating point
  transient.symbols                           per-slot transmit powers [W]
  transient.dt_s                              step [s] or auto (T/10^4)
  transient.start                             warm | cold
  transient.record_every                      waveform decimation
  validate.ber_trials, .sampler_draws, .period_s, .fault_r_sigma_scale";

/// A sweep axis: explicit values and generated ranges, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    items: Vec<GridItem>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GridItem {
    Value(f64),
    Lin(f64, f64, usize),
    Log(f64, f64, usize),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for item in &self.items {
            match *item {
                GridItem::Value(v) => out.push(v),
                GridItem::Lin(a, b, n) => out.extend(linspace(a, b, n)),
                GridItem::Log(a, b, n) => out.extend(logspace(a, b, n)),
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, item) in self.items.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            match *item {
                GridItem::Value(v) => write!(f, "{}", float(v))?,
                GridItem::Lin(a, b, n) => write!(f, "linspace({},{},{n})", float(a), float(b))?,
                GridItem::Log(a, b, n) => write!(f, "logspace({},{},{n})", float(a), float(b))?,
            }
        }
        Ok(())
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut items = Vec::new();
        for part in split_top_level(s) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let range = |name: &str| -> std::result::Result<Option<(f64, f64, usize)>, String> {
                let Some(inner) = part.strip_prefix(name).and_then(|r| r.strip_prefix('(')) else {
                    return Ok(None);
                };
                let inner = inner.strip_suffix(')').ok_or(format!("unclosed '{part}'"))?;
                let args: Vec<&str> = inner.split(',').map(str::trim).collect();
                if args.len() != 3 {
                    return Err(format!("{name} takes (start,end,count), got '{part}'"));
                }
                let a = parse_f64(args[0])?;
                let b = parse_f64(args[1])?;
                let n: usize = args[2].parse().map_err(|_| format!("bad count in '{part}'"))?;
                if n == 0 {
                    return Err(format!("empty range '{part}'"));
                }
                Ok(Some((a, b, n)))
            };
            if let Some((a, b, n)) = range("linspace")? {
                items.push(GridItem::Lin(a, b, n));
            } else if let Some((a, b, n)) = range("logspace")? {
                if !(a > 0.0 && b > 0.0) {
                    return Err(format!("logspace bounds must be > 0 in '{part}'"));
                }
                items.push(GridItem::Log(a, b, n));
            } else {
                items.push(GridItem::Value(parse_f64(part)?));
            }
        }
        Ok(Grid { items })
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0);
    for (k, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

/// Optional per-junction overrides, keyed by 1-based junction index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JunctionOverrides {
    pub lambda_min_nm: Option<f64>,
    pub lambda_max_nm: Option<f64>,
    pub eta: Option<f64>,
    pub i_sat1: Option<f64>,
    pub i_sat2: Option<f64>,
    pub r_sh: Option<f64>,
    pub r_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReceiverOverrides {
    pub r_load: Option<f64>,
    pub r_info: Option<f64>,
    pub c_info: Option<f64>,
    pub inductance: Option<f64>,
    pub v_t: Option<f64>,
    pub cell_area: Option<f64>,
    /// 1-based.
    pub info_junction: Option<usize>,
    pub info_responsivity: Option<f64>,
    pub junctions: BTreeMap<usize, JunctionOverrides>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyLayout {
    /// Reference lines for N ∈ {1, 4}, band midpoints otherwise.
    Reference,
    Midpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    /// The closed form matching the junction count.
    Auto,
    Kind(EhModelKind),
}

impl ModelChoice {
    pub fn for_junctions(self, n: usize) -> EhModelKind {
        match self {
            ModelChoice::Auto => EhModelKind::closed_form_for(n),
            ModelChoice::Kind(k) => k,
        }
    }
}

/// One column family of the EH curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveModel {
    Eh(EhModelKind),
    CircuitOracle,
}

impl CurveModel {
    pub const ORACLE_TAG: &'static str = "circuit-oracle";

    pub fn tag(self) -> &'static str {
        match self {
            CurveModel::Eh(k) => k.tag(),
            CurveModel::CircuitOracle => Self::ORACLE_TAG,
        }
    }

    fn all() -> Vec<CurveModel> {
        let mut v: Vec<_> = EhModelKind::ALL.iter().copied().map(CurveModel::Eh).collect();
        v.push(CurveModel::CircuitOracle);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub junctions: Vec<usize>,
    pub mu_a: Grid,
    pub p_w: Grid,
    pub s_w: Grid,
    pub a_sq_w: Grid,
    /// `None` means every model.
    pub models: Option<Vec<CurveModel>>,
    pub dists: Vec<InputDistribution>,
}

impl SweepConfig {
    pub fn models(&self) -> Vec<CurveModel> {
        self.models.clone().unwrap_or_else(CurveModel::all)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSection {
    pub junctions: usize,
    pub mu_a: f64,
    pub p_w: f64,
    pub symbols: Grid,
    pub dt_s: Option<f64>,
    pub cold_start: bool,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateSection {
    pub ber_trials: u64,
    pub sampler_draws: u64,
    pub period_s: f64,
    pub fault_r_sigma_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub receiver: ReceiverOverrides,
    pub constants: PhysicalConstants,
    pub energy_layout: EnergyLayout,
    pub energy_gain: f64,
    /// Information signal; the carrier wavelength lives in `info_lambda_nm`.
    pub info: InfoSignal,
    pub info_lambda_nm: f64,
    pub noise: NoiseModel,
    pub model: ModelChoice,
    pub seed: u64,
    pub sweep: SweepConfig,
    pub ber_trials: u64,
    pub tradeoff_p_w: Grid,
    pub tradeoff_a_sq_w: Grid,
    pub transient: TransientSection,
    pub validate: ValidateSection,
}

fn grid(s: &str) -> Grid {
    s.parse().expect("static grid")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            receiver: ReceiverOverrides::default(),
            constants: PhysicalConstants::default(),
            energy_layout: EnergyLayout::Reference,
            energy_gain: 1.0,
            info: InfoSignal::default(),
            info_lambda_nm: 980.0,
            noise: NoiseModel::default(),
            model: ModelChoice::Auto,
            seed: 0x5eed,
            sweep: SweepConfig {
                junctions: vec![1, 4],
                mu_a: grid("0,0.2,0.7"),
                p_w: grid("0,0.01,0.1"),
                s_w: grid("linspace(0,0.1,21)"),
                a_sq_w: grid("logspace(1e-6,0.1,21)"),
                models: None,
                dists: vec![InputDistribution::Optimal, InputDistribution::Uniform],
            },
            ber_trials: 1_000_000,
            tradeoff_p_w: grid("0,logspace(1e-4,0.2,30)"),
            tradeoff_a_sq_w: grid("0.001,0.01,0.1"),
            transient: TransientSection {
                junctions: 1,
                mu_a: 0.0,
                p_w: 0.0,
                symbols: grid("0.1,0,0.1,0.1,0,0,0.1,0"),
                dt_s: None,
                cold_start: false,
                record_every: 10,
            },
            validate: ValidateSection {
                ber_trials: 10_000_000,
                sampler_draws: 1_000_000,
                period_s: 1e-3,
                fault_r_sigma_scale: 1.0,
            },
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    parse_f64(v).map_err(|e| bad(key, e))
}

fn count<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| bad(key, format!("'{v}' is not a non-negative integer")))
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let out: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(bad(key, "empty list"));
    }
    Ok(out)
}

impl RunConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            if let Some(first) = seen.insert(key.to_string(), lineno + 1) {
                return Err(CliError::Config(format!(
                    "line {}: {key} already set on line {first}",
                    lineno + 1
                )));
            }
            cfg.set(key, value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set '{assignment}': expected key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        if let Some(rest) = key.strip_prefix("receiver.junction") {
            let (idx, field) = rest
                .split_once('.')
                .ok_or_else(|| bad(key, "expected receiver.junctionK.<field>"))?;
            let idx: usize = idx.parse().map_err(|_| bad(key, "junction index"))?;
            if idx == 0 {
                return Err(bad(key, "junctions are numbered from 1"));
            }
            let j = self.receiver.junctions.entry(idx).or_default();
            let x = num(key, v)?;
            let slot = match field {
                "lambda_min_nm" => &mut j.lambda_min_nm,
                "lambda_max_nm" => &mut j.lambda_max_nm,
                "eta" => &mut j.eta,
                "i_sat1_a" => &mut j.i_sat1,
                "i_sat2_a" => &mut j.i_sat2,
                "r_sh_ohm" => &mut j.r_sh,
                "r_s_ohm" => &mut j.r_s,
                _ => return Err(bad(key, "unknown junction field")),
            };
            *slot = Some(x);
            return Ok(());
        }
        let r = &mut self.receiver;
        match key {
            "receiver.r_load_ohm" => r.r_load = Some(num(key, v)?),
            "receiver.r_info_ohm" => r.r_info = Some(num(key, v)?),
            "receiver.c_info_f" => r.c_info = Some(num(key, v)?),
            "receiver.inductance_h" => r.inductance = Some(num(key, v)?),
            "receiver.v_t_v" => r.v_t = Some(num(key, v)?),
            "receiver.cell_area_m2" => r.cell_area = Some(num(key, v)?),
            "receiver.info_junction" => {
                let k: usize = count(key, v)?;
                if k == 0 {
                    return Err(bad(key, "junctions are numbered from 1"));
                }
                r.info_junction = Some(k);
            }
            "receiver.info_responsivity_a_per_w" => r.info_responsivity = Some(num(key, v)?),
            "constants.t_sun_k" => self.constants.t_sun = num(key, v)?,
            "constants.alpha_se_sr" => self.constants.alpha_se = num(key, v)?,
            "constants.sun_area_m2" => self.constants.sun_area = num(key, v)?,
            "constants.earth_area_m2" => self.constants.earth_area = num(key, v)?,
            "energy.layout" => {
                self.energy_layout = match v {
                    "reference" => EnergyLayout::Reference,
                    "midpoints" => EnergyLayout::Midpoints,
                    _ => return Err(bad(key, "expected reference or midpoints")),
                }
            }
            "energy.gain" => self.energy_gain = num(key, v)?,
            "info.lambda_nm" => self.info_lambda_nm = num(key, v)?,
            "info.gain" => self.info.gain = num(key, v)?,
            "info.a_sq_w" => self.info.a_sq = num(key, v)?,
            "info.period_s" => self.info.period = num(key, v)?,
            "noise.sigma_sq_w" => {
                self.noise = NoiseModel::new(num(key, v)?).map_err(|e| bad(key, e))?
            }
            "model" => {
                self.model = if v == "auto" {
                    ModelChoice::Auto
                } else {
                    ModelChoice::Kind(v.parse().map_err(|e| bad(key, e))?)
                }
            }
            "seed" => self.seed = count(key, v)?,
            "sweep.junctions" => {
                self.sweep.junctions = list(key, v, |s| {
                    let n: usize = count(key, s)?;
                    if n == 0 {
                        return Err(bad(key, "need at least one junction"));
                    }
                    Ok(n)
                })?
            }
            "sweep.mu_a" => self.sweep.mu_a = v.parse().map_err(|e| bad(key, e))?,
            "sweep.p_w" => self.sweep.p_w = v.parse().map_err(|e| bad(key, e))?,
            "sweep.s_w" => self.sweep.s_w = v.parse().map_err(|e| bad(key, e))?,
            "sweep.a_sq_w" => self.sweep.a_sq_w = v.parse().map_err(|e| bad(key, e))?,
            "sweep.models" => {
                self.sweep.models = if v == "all" {
                    None
                } else {
                    Some(list(key, v, |s| {
                        if s == CurveModel::ORACLE_TAG {
                            Ok(CurveModel::CircuitOracle)
                        } else {
                            s.parse().map(CurveModel::Eh).map_err(|e| bad(key, e))
                        }
                    })?)
                }
            }
            "sweep.dists" => {
                self.sweep.dists = list(key, v, |s| {
                    let d: InputDistribution = s.parse().map_err(|e| bad(key, e))?;
                    if d == InputDistribution::Ook {
                        return Err(bad(key, "ook has no rate-power point; use the ber command"));
                    }
                    Ok(d)
                })?
            }
            "ber.trials" => self.ber_trials = count(key, v)?,
            "tradeoff.p_w" => self.tradeoff_p_w = v.parse().map_err(|e| bad(key, e))?,
            "tradeoff.a_sq_w" => self.tradeoff_a_sq_w = v.parse().map_err(|e| bad(key, e))?,
            "transient.junctions" => self.transient.junctions = count(key, v)?,
            "transient.mu_a" => self.transient.mu_a = num(key, v)?,
            "transient.p_w" => self.transient.p_w = num(key, v)?,
            "transient.symbols" => self.transient.symbols = v.parse().map_err(|e| bad(key, e))?,
            "transient.dt_s" => {
                self.transient.dt_s = if v == "auto" { None } else { Some(num(key, v)?) }
            }
            "transient.start" => {
                self.transient.cold_start = match v {
                    "warm" => false,
                    "cold" => true,
                    _ => return Err(bad(key, "expected warm or cold")),
                }
            }
            "transient.record_every" => {
                let n: usize = count(key, v)?;
                if n == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
                self.transient.record_every = n;
            }
            "validate.ber_trials" => self.validate.ber_trials = count(key, v)?,
            "validate.sampler_draws" => self.validate.sampler_draws = count(key, v)?,
            "validate.period_s" => self.validate.period_s = num(key, v)?,
            "validate.fault_r_sigma_scale" => self.validate.fault_r_sigma_scale = num(key, v)?,
            _ => return Err(bad(key, "unknown key (see --help for the key list)")),
        }
        Ok(())
    }

    /// Canonical key-value form: receiver overrides that are set, then every
    /// other key with its resolved value.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let r = &self.receiver;
        let opt = [
            ("receiver.r_load_ohm", r.r_load),
            ("receiver.r_info_ohm", r.r_info),
            ("receiver.c_info_f", r.c_info),
            ("receiver.inductance_h", r.inductance),
            ("receiver.v_t_v", r.v_t),
            ("receiver.cell_area_m2", r.cell_area),
            ("receiver.info_responsivity_a_per_w", r.info_responsivity),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                push(k, float(v));
            }
        }
        if let Some(k) = r.info_junction {
            push("receiver.info_junction", k.to_string());
        }
        for (idx, j) in &r.junctions {
            let fields = [
                ("lambda_min_nm", j.lambda_min_nm),
                ("lambda_max_nm", j.lambda_max_nm),
                ("eta", j.eta),
                ("i_sat1_a", j.i_sat1),
                ("i_sat2_a", j.i_sat2),
                ("r_sh_ohm", j.r_sh),
                ("r_s_ohm", j.r_s),
            ];
            for (name, v) in fields {
                if let Some(v) = v {
                    push(&format!("receiver.junction{idx}.{name}"), float(v));
                }
            }
        }
        let c = &self.constants;
        push("constants.t_sun_k", float(c.t_sun));
        push("constants.alpha_se_sr", float(c.alpha_se));
        push("constants.sun_area_m2", float(c.sun_area));
        push("constants.earth_area_m2", float(c.earth_area));
        push(
            "energy.layout",
            match self.energy_layout {
                EnergyLayout::Reference => "reference",
                EnergyLayout::Midpoints => "midpoints",
            }
            .into(),
        );
        push("energy.gain", float(self.energy_gain));
        push("info.lambda_nm", float(self.info_lambda_nm));
        push("info.gain", float(self.info.gain));
        push("info.a_sq_w", float(self.info.a_sq));
        push("info.period_s", float(self.info.period));
        push("noise.sigma_sq_w", float(self.noise.sigma_sq));
        push(
            "model",
            match self.model {
                ModelChoice::Auto => "auto".into(),
                ModelChoice::Kind(k) => k.tag().into(),
            },
        );
        push("seed", self.seed.to_string());
        let s = &self.sweep;
        push(
            "sweep.junctions",
            s.junctions.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        );
        push("sweep.mu_a", s.mu_a.to_string());
        push("sweep.p_w", s.p_w.to_string());
        push("sweep.s_w", s.s_w.to_string());
        push("sweep.a_sq_w", s.a_sq_w.to_string());
        push(
            "sweep.models",
            match &s.models {
                None => "all".into(),
                Some(m) => m.iter().map(|m| m.tag()).collect::<Vec<_>>().join(","),
            },
        );
        push(
            "sweep.dists",
            s.dists.iter().map(|d| d.tag()).collect::<Vec<_>>().join(","),
        );
        push("ber.trials", self.ber_trials.to_string());
        push("tradeoff.p_w", self.tradeoff_p_w.to_string());
        push("tradeoff.a_sq_w", self.tradeoff_a_sq_w.to_string());
        let t = &self.transient;
        push("transient.junctions", t.junctions.to_string());
        push("transient.mu_a", float(t.mu_a));
        push("transient.p_w", float(t.p_w));
        push("transient.symbols", t.symbols.to_string());
        push("transient.dt_s", t.dt_s.map_or("auto".into(), float));
        push("transient.start", if t.cold_start { "cold" } else { "warm" }.into());
        push("transient.record_every", t.record_every.to_string());
        let v = &self.validate;
        push("validate.ber_trials", v.ber_trials.to_string());
        push("validate.sampler_draws", v.sampler_draws.to_string());
        push("validate.period_s", float(v.period_s));
        push("validate.fault_r_sigma_scale", float(v.fault_r_sigma_scale));
        out
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            s.push_str(&k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// The receiver with `n` junctions after overrides.
    pub fn receiver(&self, n: usize) -> Result<ReceiverSpec> {
        let o = &self.receiver;
        let mut rx = match ReceiverSpec::reference(n) {
            Ok(rx) => rx,
            Err(_) => {
                let mut bands = Vec::with_capacity(n);
                for k in 1..=n {
                    let j = o.junctions.get(&k);
                    let (Some(lo), Some(hi)) = (
                        j.and_then(|j| j.lambda_min_nm),
                        j.and_then(|j| j.lambda_max_nm),
                    ) else {
                        return Err(CliError::Config(format!(
                            "N = {n} has no reference layout: set receiver.junction{k}.lambda_min_nm \
                             and lambda_max_nm"
                        )));
                    };
                    bands.push(SpectralBand::from_nm(lo, hi)?);
                }
                ReceiverSpec::from_bands(&bands)?
            }
        };
        rx.constants = self.constants;
        if let Some(v) = o.r_load {
            rx.r_load = v;
        }
        if let Some(v) = o.r_info {
            rx.r_info = v;
        }
        if let Some(v) = o.c_info {
            rx.c_info = v;
        }
        if let Some(v) = o.inductance {
            rx.inductance = v;
        }
        if let Some(v) = o.v_t {
            rx.v_t = v;
        }
        if let Some(v) = o.cell_area {
            rx.cell_area = v;
        }
        if let Some(k) = o.info_junction {
            if k > n {
                return Err(CliError::Config(format!(
                    "receiver.info_junction = {k} exceeds N = {n}"
                )));
            }
            rx.info_junction = k - 1;
        }
        rx.info_responsivity_override = o.info_responsivity.or(rx.info_responsivity_override);
        for (&k, j) in o.junctions.range(1..=n) {
            let spec = &mut rx.junctions[k - 1];
            let lo = j.lambda_min_nm.map_or(spec.band.lambda_min, |v| v * 1e-9);
            let hi = j.lambda_max_nm.map_or(spec.band.lambda_max, |v| v * 1e-9);
            spec.band = SpectralBand::new(lo, hi)?;
            if let Some(v) = j.eta {
                spec.eta = v;
            }
            if let Some(v) = j.i_sat1 {
                spec.i_sat1 = v;
            }
            if let Some(v) = j.i_sat2 {
                spec.i_sat2 = v;
            }
            if let Some(v) = j.r_sh {
                spec.r_sh = v;
            }
            if let Some(v) = j.r_s {
                spec.r_s = v;
            }
        }
        rx.validate()?;
        Ok(rx)
    }

    pub fn info(&self) -> InfoSignal {
        InfoSignal {
            wavelength: self.info_lambda_nm * 1e-9,
            ..self.info
        }
    }

    pub fn energy(&self, rx: &ReceiverSpec, p: f64) -> Result<EnergySignal> {
        let mut e = match (self.energy_layout, rx.n()) {
            (EnergyLayout::Reference, 1 | 4) => EnergySignal::reference(rx.n(), p)?,
            _ => EnergySignal::at_band_midpoints(rx, p),
        };
        for line in &mut e.lines {
            line.gain = self.energy_gain;
        }
        Ok(e)
    }

    /// Photocurrents at ambient level `mu_a` and energy-signal power `p`.
    pub fn state(&self, rx: &ReceiverSpec, mu_a: f64, p: f64) -> Result<PhotocurrentState> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(CliError::Config(format!("energy power {p} W must be >= 0")));
        }
        let energy = self.energy(rx, p)?;
        Ok(photocurrents(rx, &AmbientModel::new(mu_a)?, &energy, &self.info())?)
    }

    /// Checks everything that does not depend on a sweep point.
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.info().validate()?;
        for &n in &self.sweep.junctions {
            self.receiver(n)?;
        }
        self.receiver(self.transient.junctions)?;
        if let Some(&k) = self.receiver.junctions.keys().next_back() {
            let max_n = self
                .sweep
                .junctions
                .iter()
                .copied()
                .chain([self.transient.junctions, 1, 4])
                .max()
                .unwrap_or(1);
            if k > max_n {
                return Err(CliError::Config(format!(
                    "receiver.junction{k} is beyond every configured junction count"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_reference_receivers() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.receiver(1).unwrap(), ReceiverSpec::single_junction());
        assert_eq!(cfg.receiver(4).unwrap(), ReceiverSpec::four_junction());
        cfg.validate().unwrap();
    }

    #[test]
    fn energy_defaults_split_power_evenly() {
        let cfg = RunConfig::default();
        let rx = cfg.receiver(4).unwrap();
        let e = cfg.energy(&rx, 0.1).unwrap();
        assert_eq!(e.lines.len(), 4);
        for (line, j) in e.lines.iter().zip(&rx.junctions) {
            assert!((line.power - 0.025).abs() < 1e-15);
            assert!((line.wavelength - j.band.midpoint()).abs() < 1e-18);
        }
        let rx1 = cfg.receiver(1).unwrap();
        assert!((cfg.energy(&rx1, 0.1).unwrap().lines[0].wavelength - 550e-9).abs() < 1e-18);
    }

    #[test]
    fn parses_comments_overrides_and_grids() {
        let text = "# receiver tweaks\n\
                    receiver.r_load_ohm = 5000   # half the default\n\
                    receiver.junction1.lambda_min_nm = 420\n\
                    sweep.s_w = 0, linspace(0.01, 0.02, 3), logspace(1e-3,1e-1,3)\n\
                    model = accurate\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.receiver.r_load, Some(5000.0));
        let rx = cfg.receiver(4).unwrap();
        assert_eq!(rx.r_load, 5000.0);
        assert!((rx.junctions[0].band.lambda_min - 420e-9).abs() < 1e-18);
        let s = cfg.sweep.s_w.values();
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], 0.0);
        assert!((s[2] - 0.015).abs() < 1e-15);
        assert!((s[5] - 1e-2).abs() < 1e-15);
        assert_eq!(cfg.model, ModelChoice::Kind(EhModelKind::Accurate));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "unknown.key = 1",
            "receiver.r_load_ohm = abc",
            "receiver.junction0.eta = 0.5",
            "sweep.dists = ook",
            "model = fancy",
            "seed = 1\nseed = 2",
            "sweep.s_w = linspace(0,1)",
            "sweep.a_sq_w = logspace(0,1,3)",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
        let mut cfg = RunConfig::default();
        cfg.apply_override("receiver.info_junction=5").unwrap();
        assert!(cfg.receiver(4).is_err());
        assert!(cfg.apply_override("missing-equals").is_err());
    }

    #[test]
    fn custom_junction_count_needs_bands() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("sweep.junctions=2").unwrap();
        assert!(cfg.validate().is_err());
        for s in [
            "receiver.junction1.lambda_min_nm=400",
            "receiver.junction1.lambda_max_nm=800",
            "receiver.junction2.lambda_min_nm=800",
            "receiver.junction2.lambda_max_nm=1200",
        ] {
            cfg.apply_override(s).unwrap();
        }
        let rx = cfg.receiver(2).unwrap();
        assert_eq!(rx.n(), 2);
        assert_eq!(cfg.energy(&rx, 0.02).unwrap().lines.len(), 2);
    }

    #[test]
    fn serialize_is_idempotent_on_defaults() {
        let once = RunConfig::default().serialize();
        let parsed = RunConfig::parse(&once).unwrap();
        assert_eq!(parsed, RunConfig::default());
        assert_eq!(parsed.serialize(), once);
    }

    fn assignment() -> impl Strategy<Value = String> {
        prop_oneof![
            (1e2..1e5f64).prop_map(|v| format!("receiver.r_load_ohm={v}")),
            (1usize..=4, 1e-12..1e-6f64)
                .prop_map(|(k, v)| format!("receiver.junction{k}.i_sat1_a={v}")),
            (0.0..1.0f64, 1usize..50).prop_map(|(a, n)| format!("sweep.s_w=0,linspace({a},1,{n})")),
            (1e-6..1e-3f64).prop_map(|v| format!("noise.sigma_sq_w={v}")),
            any::<u64>().prop_map(|v| format!("seed={v}")),
            prop::sample::select(vec!["model=auto", "model=accurate", "sweep.models=accurate,circuit-oracle",
                "transient.start=cold", "transient.dt_s=1e-7", "energy.layout=midpoints"])
                .prop_map(String::from),
        ]
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trips(sets in prop::collection::vec(assignment(), 0..8)) {
            let mut cfg = RunConfig::default();
            for s in &sets {
                cfg.apply_override(s).unwrap();
            }
            let text = cfg.serialize();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.serialize(), text);
        }
    }
}
