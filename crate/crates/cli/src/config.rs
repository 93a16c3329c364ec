//! Line-oriented run configuration: `section.key = value`, `#` comments,
//! lists and matrices in brackets (`[[1,1],[1,0]]`, parentheses also accepted).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thermo_core::cocycle::SingularWeight;
use thermo_core::mp_transitions::T_RANGE;
use thermo_core::symbolic::{build_beta_shift, build_manneville_pomeau, CylinderSpace, SftSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pressure,
    DualEntropy,
    Equilibrium,
    Tangency,
    ZeroTemp,
    Cocycle,
    Lyapunov,
    MpScan,
    BetaShift,
    Axioms,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Pressure,
        Command::DualEntropy,
        Command::Equilibrium,
        Command::Tangency,
        Command::ZeroTemp,
        Command::Cocycle,
        Command::Lyapunov,
        Command::MpScan,
        Command::BetaShift,
        Command::Axioms,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::DualEntropy => "dual-entropy",
            Command::Equilibrium => "equilibrium",
            Command::Tangency => "tangency",
            Command::ZeroTemp => "zero-temp",
            Command::Cocycle => "cocycle",
            Command::Lyapunov => "lyapunov",
            Command::MpScan => "mp-scan",
            Command::BetaShift => "beta-shift",
            Command::Axioms => "axioms",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Sft,
    Beta,
    Mp,
    Doubling,
}

impl SystemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemKind::Sft => "sft",
            SystemKind::Beta => "beta",
            SystemKind::Mp => "mp",
            SystemKind::Doubling => "doubling",
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, SystemKind::Sft | SystemKind::Beta)
    }
}

impl FromStr for SystemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sft" => Ok(SystemKind::Sft),
            "beta" => Ok(SystemKind::Beta),
            "mp" => Ok(SystemKind::Mp),
            "doubling" => Ok(SystemKind::Doubling),
            _ => Err(format!("unknown system kind `{s}` (sft, beta, mp, doubling)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureGrid {
    Bernoulli,
    Markov,
}

impl MeasureGrid {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureGrid::Bernoulli => "bernoulli",
            MeasureGrid::Markov => "markov",
        }
    }
}

impl FromStr for MeasureGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bernoulli" => Ok(MeasureGrid::Bernoulli),
            "markov" => Ok(MeasureGrid::Markov),
            _ => Err(format!("unknown grid `{s}` (bernoulli, markov)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Matrix,
    Separated,
    Transfer,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::Matrix => "matrix",
            EngineKind::Separated => "separated",
            EngineKind::Transfer => "transfer",
        }
    }
}

impl FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "matrix" => Ok(EngineKind::Matrix),
            "separated" => Ok(EngineKind::Separated),
            "transfer" => Ok(EngineKind::Transfer),
            _ => Err(format!("unknown engine `{s}` (matrix, separated, transfer)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub matrix: Option<Vec<Vec<u8>>>,
    pub beta: Option<f64>,
    pub beta_depth: usize,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub depth: usize,
    /// One value per admissible word of length `depth`, lexicographic; zeros when absent.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureConfig {
    pub n_max: usize,
    pub transfer_depth: usize,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualConfig {
    pub grid: MeasureGrid,
    pub grid_size: usize,
    pub order: usize,
    pub tol: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumConfig {
    pub marginal_depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyConfig {
    pub directions: usize,
    pub tol: f64,
    pub gateaux_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTempConfig {
    pub t_min: f64,
    pub t_ratio: f64,
    pub t_max: f64,
    pub max_period: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleConfig {
    pub generators: Option<Vec<Vec<Vec<f64>>>>,
    /// Defaults to `(1, 0, ..., 0)`.
    pub alpha: Option<Vec<f64>>,
    pub n_max: usize,
    pub grid_size: usize,
    pub t_grid: Vec<f64>,
    pub max_period: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovConfig {
    /// Bernoulli weights; the Parry measure when absent.
    pub probs: Option<Vec<f64>>,
    pub n_steps: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpConfig {
    pub depth: usize,
    /// The default scan grid when absent.
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomsConfig {
    pub engine: EngineKind,
    pub samples: usize,
    pub n_max: usize,
    pub transfer_depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub system: SystemConfig,
    pub potential: PotentialConfig,
    pub pressure: PressureConfig,
    pub dual: DualConfig,
    pub equilibrium: EquilibriumConfig,
    pub tangency: TangencyConfig,
    pub zero_temp: ZeroTempConfig,
    pub cocycle: CocycleConfig,
    pub lyapunov: LyapunovConfig,
    pub mp: MpConfig,
    pub axioms: AxiomsConfig,
}

impl RunConfig {
    /// Defaults for every field except the command.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            seed: 0,
            system: SystemConfig {
                kind: SystemKind::Sft,
                matrix: None,
                beta: None,
                beta_depth: 24,
                alpha: None,
            },
            potential: PotentialConfig { depth: 1, values: None },
            pressure: PressureConfig {
                n_max: 12,
                transfer_depth: 12,
                t: 1.0,
            },
            dual: DualConfig {
                grid: MeasureGrid::Markov,
                grid_size: 50,
                order: 1,
                tol: 1e-6,
                samples: 20,
            },
            equilibrium: EquilibriumConfig { marginal_depth: 2 },
            tangency: TangencyConfig {
                directions: 50,
                tol: 1e-9,
                gateaux_pairs: 10,
            },
            zero_temp: ZeroTempConfig {
                t_min: 0.1,
                t_ratio: 1.3,
                t_max: 50.0,
                max_period: 12,
                depth: 2,
            },
            cocycle: CocycleConfig {
                generators: None,
                alpha: None,
                n_max: 12,
                grid_size: 100,
                t_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
                max_period: 8,
            },
            lyapunov: LyapunovConfig {
                probs: None,
                n_steps: 10_000,
                samples: 200,
            },
            mp: MpConfig { depth: 18, t_grid: None },
            axioms: AxiomsConfig {
                engine: EngineKind::Matrix,
                samples: 200,
                n_max: 10,
                transfer_depth: 6,
            },
        }
    }

    /// The symbolic system named by the `system` section.
    pub fn sft(&self) -> Option<Arc<SftSystem>> {
        match self.system.kind {
            SystemKind::Sft => SftSystem::new("config", self.system.matrix.clone()?).ok().map(Arc::new),
            SystemKind::Beta => build_beta_shift(self.system.beta?, self.system.beta_depth)
                .ok()
                .map(|(_, s)| Arc::new(s)),
            _ => None,
        }
    }

    pub fn singular_weight(&self) -> Option<SingularWeight> {
        let l = self.cocycle.generators.as_ref()?.first()?.len();
        let alpha = self.cocycle.alpha.clone().unwrap_or_else(|| {
            let mut a = vec![0.0; l];
            a[0] = 1.0;
            a
        });
        SingularWeight::new(alpha).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Parse { line: usize, reason: String },
    Validation { field: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, reason } => write!(f, "ParseError(line {line}): {reason}"),
            ConfigError::Validation { field, reason } => write!(f, "ValidationError({field}): {reason}"),
        }
    }
}

/// Every problem found in a config, in the order found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Atom(String),
    List(Vec<Value>),
}

fn parse_value(text: &str) -> Result<Value, String> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err("missing value".into());
    }
    let mut pos = 0;
    let v = parse_item(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(format!("unexpected `{}` after value", chars[pos]));
    }
    Ok(v)
}

fn parse_item(c: &[char], pos: &mut usize) -> Result<Value, String> {
    match c.get(*pos) {
        Some(&open) if open == '[' || open == '(' => {
            let close = if open == '[' { ']' } else { ')' };
            *pos += 1;
            let mut items = Vec::new();
            if c.get(*pos) == Some(&close) {
                *pos += 1;
                return Ok(Value::List(items));
            }
            loop {
                items.push(parse_item(c, pos)?);
                match c.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(&x) if x == close => {
                        *pos += 1;
                        return Ok(Value::List(items));
                    }
                    Some(x) => return Err(format!("expected `,` or `{close}`, found `{x}`")),
                    None => return Err(format!("unclosed `{open}`")),
                }
            }
        }
        Some(_) => {
            let start = *pos;
            while *pos < c.len() && !matches!(c[*pos], ',' | '[' | ']' | '(' | ')') {
                *pos += 1;
            }
            if *pos == start {
                return Err(format!("unexpected `{}`", c[start]));
            }
            Ok(Value::Atom(c[start..*pos].iter().collect()))
        }
        None => Err("value ends early".into()),
    }
}

fn atom(v: &Value) -> Result<&str, String> {
    match v {
        Value::Atom(s) => Ok(s),
        Value::List(_) => Err("expected a single value, found a list".into()),
    }
}

fn list(v: &Value) -> Result<&[Value], String> {
    match v {
        Value::List(items) => Ok(items),
        Value::Atom(_) => Err("expected a bracketed list".into()),
    }
}

fn real(v: &Value) -> Result<f64, String> {
    let s = atom(v)?;
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

fn count(v: &Value) -> Result<usize, String> {
    let s = atom(v)?;
    s.parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

fn reals(v: &Value) -> Result<Vec<f64>, String> {
    list(v)?.iter().map(real).collect()
}

fn rows<T>(v: &Value, each: impl Fn(&Value) -> Result<T, String>) -> Result<Vec<Vec<T>>, String> {
    list(v)?.iter().map(|r| list(r)?.iter().map(&each).collect()).collect()
}

fn bit(v: &Value) -> Result<u8, String> {
    match atom(v)? {
        "0" => Ok(0),
        "1" => Ok(1),
        s => Err(format!("transition entries must be 0 or 1, found `{s}`")),
    }
}

const KEYS: &[&str] = &[
    "run.command",
    "run.seed",
    "system.kind",
    "system.matrix",
    "system.beta",
    "system.beta_depth",
    "system.alpha",
    "potential.depth",
    "potential.values",
    "pressure.n_max",
    "pressure.transfer_depth",
    "pressure.t",
    "dual.grid",
    "dual.grid_size",
    "dual.order",
    "dual.tol",
    "dual.samples",
    "equilibrium.marginal_depth",
    "tangency.directions",
    "tangency.tol",
    "tangency.gateaux_pairs",
    "zero_temp.t_min",
    "zero_temp.t_ratio",
    "zero_temp.t_max",
    "zero_temp.max_period",
    "zero_temp.depth",
    "cocycle.generators",
    "cocycle.alpha",
    "cocycle.n_max",
    "cocycle.grid_size",
    "cocycle.t_grid",
    "cocycle.max_period",
    "lyapunov.probs",
    "lyapunov.n_steps",
    "lyapunov.samples",
    "mp.depth",
    "mp.t_grid",
    "axioms.engine",
    "axioms.samples",
    "axioms.n_max",
    "axioms.transfer_depth",
];

fn assign(cfg: &mut RunConfig, key: &str, v: &Value) -> Result<(), String> {
    match key {
        "run.command" => cfg.command = atom(v)?.parse()?,
        "run.seed" => {
            let s = atom(v)?;
            cfg.seed = s.parse().map_err(|_| format!("`{s}` is not a u64"))?;
        }
        "system.kind" => cfg.system.kind = atom(v)?.parse()?,
        "system.matrix" => cfg.system.matrix = Some(rows(v, bit)?),
        "system.beta" => cfg.system.beta = Some(real(v)?),
        "system.beta_depth" => cfg.system.beta_depth = count(v)?,
        "system.alpha" => cfg.system.alpha = Some(real(v)?),
        "potential.depth" => cfg.potential.depth = count(v)?,
        "potential.values" => cfg.potential.values = Some(reals(v)?),
        "pressure.n_max" => cfg.pressure.n_max = count(v)?,
        "pressure.transfer_depth" => cfg.pressure.transfer_depth = count(v)?,
        "pressure.t" => cfg.pressure.t = real(v)?,
        "dual.grid" => cfg.dual.grid = atom(v)?.parse()?,
        "dual.grid_size" => cfg.dual.grid_size = count(v)?,
        "dual.order" => cfg.dual.order = count(v)?,
        "dual.tol" => cfg.dual.tol = real(v)?,
        "dual.samples" => cfg.dual.samples = count(v)?,
        "equilibrium.marginal_depth" => cfg.equilibrium.marginal_depth = count(v)?,
        "tangency.directions" => cfg.tangency.directions = count(v)?,
        "tangency.tol" => cfg.tangency.tol = real(v)?,
        "tangency.gateaux_pairs" => cfg.tangency.gateaux_pairs = count(v)?,
        "zero_temp.t_min" => cfg.zero_temp.t_min = real(v)?,
        "zero_temp.t_ratio" => cfg.zero_temp.t_ratio = real(v)?,
        "zero_temp.t_max" => cfg.zero_temp.t_max = real(v)?,
        "zero_temp.max_period" => cfg.zero_temp.max_period = count(v)?,
        "zero_temp.depth" => cfg.zero_temp.depth = count(v)?,
        "cocycle.generators" => {
            cfg.cocycle.generators = Some(list(v)?.iter().map(|m| rows(m, real)).collect::<Result<_, _>>()?)
        }
        "cocycle.alpha" => cfg.cocycle.alpha = Some(reals(v)?),
        "cocycle.n_max" => cfg.cocycle.n_max = count(v)?,
        "cocycle.grid_size" => cfg.cocycle.grid_size = count(v)?,
        "cocycle.t_grid" => cfg.cocycle.t_grid = reals(v)?,
        "cocycle.max_period" => cfg.cocycle.max_period = count(v)?,
        "lyapunov.probs" => cfg.lyapunov.probs = Some(reals(v)?),
        "lyapunov.n_steps" => cfg.lyapunov.n_steps = count(v)?,
        "lyapunov.samples" => cfg.lyapunov.samples = count(v)?,
        "mp.depth" => cfg.mp.depth = count(v)?,
        "mp.t_grid" => cfg.mp.t_grid = Some(reals(v)?),
        "axioms.engine" => cfg.axioms.engine = atom(v)?.parse()?,
        "axioms.samples" => cfg.axioms.samples = count(v)?,
        "axioms.n_max" => cfg.axioms.n_max = count(v)?,
        "axioms.transfer_depth" => cfg.axioms.transfer_depth = count(v)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses and validates a config, reporting every error rather than the first.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut cfg = RunConfig::new(Command::Pressure);
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            errors.push(ConfigError::Parse {
                line,
                reason: "expected `section.key = value`".into(),
            });
            continue;
        };
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            errors.push(ConfigError::Parse {
                line,
                reason: format!("unknown key `{key}`"),
            });
            continue;
        };
        if let Some(&(_, first)) = seen.iter().find(|(k, _)| *k == known) {
            errors.push(ConfigError::Parse {
                line,
                reason: format!("`{key}` already set on line {first}"),
            });
            continue;
        }
        seen.push((known, line));
        if let Err(reason) = parse_value(value).and_then(|v| assign(&mut cfg, known, &v)) {
            errors.push(ConfigError::Parse {
                line,
                reason: format!("{key}: {reason}"),
            });
        }
    }
    if !seen.iter().any(|(k, _)| *k == "run.command") {
        errors.push(ConfigError::Validation {
            field: "run.command".into(),
            reason: "is required".into(),
        });
    }
    if errors.is_empty() {
        errors.extend(validate(&cfg));
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn bad(out: &mut Vec<ConfigError>, field: &str, reason: impl Into<String>) {
    out.push(ConfigError::Validation {
        field: field.into(),
        reason: reason.into(),
    });
}

fn in_range<T: PartialOrd + fmt::Display + Copy>(out: &mut Vec<ConfigError>, field: &str, x: T, lo: T, hi: T) {
    if !(lo <= x && x <= hi) {
        bad(out, field, format!("must lie in [{lo}, {hi}], got {x}"));
    }
}

/// Range and consistency checks on a fully populated config.
pub fn validate(cfg: &RunConfig) -> Vec<ConfigError> {
    let mut out = Vec::new();
    let c = cfg.command;
    let kind = cfg.system.kind;

    in_range(&mut out, "system.beta_depth", cfg.system.beta_depth, 1, 64);
    let sft = match kind {
        SystemKind::Sft => match &cfg.system.matrix {
            None => {
                bad(&mut out, "system.matrix", "is required for system.kind = sft");
                None
            }
            Some(m) => match SftSystem::new("config", m.clone()) {
                Ok(s) if s.is_irreducible() => Some(Arc::new(s)),
                Ok(_) => {
                    bad(&mut out, "system.matrix", "must be irreducible");
                    None
                }
                Err(e) => {
                    bad(&mut out, "system.matrix", e.to_string());
                    None
                }
            },
        },
        SystemKind::Beta => match cfg.system.beta {
            None => {
                bad(&mut out, "system.beta", "is required for system.kind = beta");
                None
            }
            Some(b) => match build_beta_shift(b, cfg.system.beta_depth) {
                Ok((_, s)) => Some(Arc::new(s)),
                Err(e) => {
                    bad(&mut out, "system.beta", e.to_string());
                    None
                }
            },
        },
        SystemKind::Mp => {
            match cfg.system.alpha {
                None => bad(&mut out, "system.alpha", "is required for system.kind = mp"),
                Some(a) => {
                    if let Err(e) = build_manneville_pomeau(a) {
                        bad(&mut out, "system.alpha", e.to_string());
                    }
                }
            }
            None
        }
        SystemKind::Doubling => None,
    };

    let symbolic = matches!(
        c,
        Command::DualEntropy | Command::Equilibrium | Command::Tangency | Command::ZeroTemp | Command::Cocycle | Command::Lyapunov
    );
    if symbolic && !kind.is_symbolic() {
        bad(&mut out, "system.kind", format!("{} needs a symbolic system (sft or beta)", c.as_str()));
    }
    if c == Command::MpScan && kind != SystemKind::Mp {
        bad(&mut out, "system.kind", "mp-scan needs system.kind = mp");
    }
    if c == Command::BetaShift && kind != SystemKind::Beta {
        bad(&mut out, "system.kind", "beta-shift needs system.kind = beta");
    }

    in_range(&mut out, "potential.depth", cfg.potential.depth, 1, 8);
    if let Some(sys) = &sft {
        if (1..=8).contains(&cfg.potential.depth) {
            match CylinderSpace::new(sys, cfg.potential.depth) {
                Ok(space) => {
                    if let Some(v) = &cfg.potential.values {
                        if v.len() != space.len() {
                            bad(
                                &mut out,
                                "potential.values",
                                format!("need {} values (one per admissible word of length {})", space.len(), cfg.potential.depth),
                            );
                        }
                    }
                }
                Err(e) => bad(&mut out, "potential.depth", e.to_string()),
            }
        }
    }

    in_range(&mut out, "pressure.n_max", cfg.pressure.n_max, 1, 24);
    in_range(&mut out, "pressure.transfer_depth", cfg.pressure.transfer_depth, 1, 24);
    in_range(&mut out, "pressure.t", cfg.pressure.t, T_RANGE.0, T_RANGE.1);

    in_range(&mut out, "dual.grid_size", cfg.dual.grid_size, 1, 10_000);
    in_range(&mut out, "dual.order", cfg.dual.order, 1, 4);
    in_range(&mut out, "dual.tol", cfg.dual.tol, 1e-12, 1e-2);
    in_range(&mut out, "dual.samples", cfg.dual.samples, 0, 100_000);
    if c == Command::DualEntropy && cfg.dual.grid == MeasureGrid::Bernoulli {
        if let Some(sys) = &sft {
            if sys.alphabet_size() != 2 || sys.edge_count() != 4 {
                bad(&mut out, "dual.grid", "bernoulli grid needs the full 2-shift");
            }
        }
    }

    in_range(&mut out, "equilibrium.marginal_depth", cfg.equilibrium.marginal_depth, 1, 12);
    in_range(&mut out, "tangency.directions", cfg.tangency.directions, 0, 100_000);
    in_range(&mut out, "tangency.tol", cfg.tangency.tol, 1e-15, 1e-2);
    in_range(&mut out, "tangency.gateaux_pairs", cfg.tangency.gateaux_pairs, 0, 10_000);

    let z = &cfg.zero_temp;
    in_range(&mut out, "zero_temp.t_min", z.t_min, 1e-6, 500.0);
    in_range(&mut out, "zero_temp.t_ratio", z.t_ratio, 1.0001, 10.0);
    in_range(&mut out, "zero_temp.t_max", z.t_max, 1e-6, 500.0);
    if z.t_max < z.t_min {
        bad(&mut out, "zero_temp.t_max", "must be at least zero_temp.t_min");
    }
    in_range(&mut out, "zero_temp.max_period", z.max_period, 1, 24);
    in_range(&mut out, "zero_temp.depth", z.depth, 1, 12);

    let cc = &cfg.cocycle;
    if let Some(gens) = &cc.generators {
        let l = gens.first().map_or(0, |g| g.len());
        if l == 0 || gens.iter().any(|g| g.len() != l || g.iter().any(|r| r.len() != l)) {
            bad(&mut out, "cocycle.generators", "every generator must be the same nonempty square size");
        } else if let Some(sys) = &sft {
            if gens.len() != sys.alphabet_size() {
                bad(&mut out, "cocycle.generators", format!("need one matrix per symbol ({})", sys.alphabet_size()));
            }
        }
        if let Some(a) = &cc.alpha {
            if a.len() != l {
                bad(&mut out, "cocycle.alpha", format!("need {l} weights"));
            }
        }
    } else if matches!(c, Command::Cocycle | Command::Lyapunov) {
        bad(&mut out, "cocycle.generators", format!("is required for {}", c.as_str()));
    }
    if let Some(a) = &cc.alpha {
        if let Err(e) = SingularWeight::new(a.clone()) {
            let reason = match e {
                thermo_core::Error::InvalidParameter { reason, .. } => reason,
                other => other.to_string(),
            };
            bad(&mut out, "alpha", reason);
        }
    }
    in_range(&mut out, "cocycle.n_max", cc.n_max, 1, 20);
    in_range(&mut out, "cocycle.grid_size", cc.grid_size, 1, 10_000);
    in_range(&mut out, "cocycle.max_period", cc.max_period, 1, 16);
    if cc.t_grid.is_empty() || cc.t_grid.iter().any(|&t| t <= 0.0) || cc.t_grid.windows(2).any(|w| w[1] <= w[0]) {
        bad(&mut out, "cocycle.t_grid", "must be positive and increasing");
    }

    let ly = &cfg.lyapunov;
    if let Some(p) = &ly.probs {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| x <= 0.0) || (sum - 1.0).abs() > 1e-12 {
            bad(&mut out, "lyapunov.probs", "must be positive and sum to 1");
        }
        if let Some(sys) = &sft {
            if p.len() != sys.alphabet_size() || sys.edge_count() != p.len() * p.len() {
                bad(&mut out, "lyapunov.probs", "Bernoulli weights need a full shift with one weight per symbol");
            }
        }
    }
    in_range(&mut out, "lyapunov.n_steps", ly.n_steps, 1000, 10_000_000);
    in_range(&mut out, "lyapunov.samples", ly.samples, 2, 100_000);

    in_range(&mut out, "mp.depth", cfg.mp.depth, 1, 24);
    if let Some(g) = &cfg.mp.t_grid {
        if g.len() < 2 || g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|&t| !(T_RANGE.0..=T_RANGE.1).contains(&t)) {
            bad(
                &mut out,
                "mp.t_grid",
                format!("needs two or more increasing points in [{}, {}]", T_RANGE.0, T_RANGE.1),
            );
        }
    }

    let ax = &cfg.axioms;
    in_range(&mut out, "axioms.samples", ax.samples, 1, 100_000);
    in_range(&mut out, "axioms.n_max", ax.n_max, 1, 20);
    in_range(&mut out, "axioms.transfer_depth", ax.transfer_depth, 1, 24);
    if c == Command::Axioms {
        let transfer = ax.engine == EngineKind::Transfer;
        if transfer == kind.is_symbolic() {
            bad(
                &mut out,
                "axioms.engine",
                "matrix and separated engines need a symbolic system; transfer needs an interval map",
            );
        }
    }
    out
}

fn fmt_reals(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_rows<T: fmt::Display>(m: &[Vec<T>]) -> String {
    let items: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", items.join(","))
}

/// Writes every field, so that `parse_config(&serialize(c)) == Ok(c)`.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut put = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    put("run.command", cfg.command.as_str().into());
    put("run.seed", cfg.seed.to_string());
    put("system.kind", cfg.system.kind.as_str().into());
    if let Some(m) = &cfg.system.matrix {
        put("system.matrix", fmt_rows(m));
    }
    if let Some(b) = cfg.system.beta {
        put("system.beta", b.to_string());
    }
    put("system.beta_depth", cfg.system.beta_depth.to_string());
    if let Some(a) = cfg.system.alpha {
        put("system.alpha", a.to_string());
    }
    put("potential.depth", cfg.potential.depth.to_string());
    if let Some(v) = &cfg.potential.values {
        put("potential.values", fmt_reals(v));
    }
    put("pressure.n_max", cfg.pressure.n_max.to_string());
    put("pressure.transfer_depth", cfg.pressure.transfer_depth.to_string());
    put("pressure.t", cfg.pressure.t.to_string());
    put("dual.grid", cfg.dual.grid.as_str().into());
    put("dual.grid_size", cfg.dual.grid_size.to_string());
    put("dual.order", cfg.dual.order.to_string());
    put("dual.tol", cfg.dual.tol.to_string());
    put("dual.samples", cfg.dual.samples.to_string());
    put("equilibrium.marginal_depth", cfg.equilibrium.marginal_depth.to_string());
    put("tangency.directions", cfg.tangency.directions.to_string());
    put("tangency.tol", cfg.tangency.tol.to_string());
    put("tangency.gateaux_pairs", cfg.tangency.gateaux_pairs.to_string());
    put("zero_temp.t_min", cfg.zero_temp.t_min.to_string());
    put("zero_temp.t_ratio", cfg.zero_temp.t_ratio.to_string());
    put("zero_temp.t_max", cfg.zero_temp.t_max.to_string());
    put("zero_temp.max_period", cfg.zero_temp.max_period.to_string());
    put("zero_temp.depth", cfg.zero_temp.depth.to_string());
    if let Some(g) = &cfg.cocycle.generators {
        let ms: Vec<String> = g.iter().map(|m| fmt_rows(m)).collect();
        put("cocycle.generators", format!("[{}]", ms.join(", ")));
    }
    if let Some(a) = &cfg.cocycle.alpha {
        put("cocycle.alpha", fmt_reals(a));
    }
    put("cocycle.n_max", cfg.cocycle.n_max.to_string());
    put("cocycle.grid_size", cfg.cocycle.grid_size.to_string());
    put("cocycle.t_grid", fmt_reals(&cfg.cocycle.t_grid));
    put("cocycle.max_period", cfg.cocycle.max_period.to_string());
    if let Some(p) = &cfg.lyapunov.probs {
        put("lyapunov.probs", fmt_reals(p));
    }
    put("lyapunov.n_steps", cfg.lyapunov.n_steps.to_string());
    put("lyapunov.samples", cfg.lyapunov.samples.to_string());
    put("mp.depth", cfg.mp.depth.to_string());
    if let Some(g) = &cfg.mp.t_grid {
        put("mp.t_grid", fmt_reals(g));
    }
    put("axioms.engine", cfg.axioms.engine.as_str().into());
    put("axioms.samples", cfg.axioms.samples.to_string());
    put("axioms.n_max", cfg.axioms.n_max.to_string());
    put("axioms.transfer_depth", cfg.axioms.transfer_depth.to_string());
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
