//! Command dispatch, CSV emission and the run summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};
use thermo_core::cocycle::{
    cfh_variational_check, lyapunov_exterior, lyapunov_qr, lyapunov_temperature_sweep, subadditive_pressure, CocycleSpec,
};
use thermo_core::duality::{bernoulli_grid, envelope_equality_check, markov_grid, variational_identity_check};
use thermo_core::equilibrium::{gateaux_derivative, gibbs_state, sample_directions, tangency_check, DEFAULT_T_GRID};
use thermo_core::measures::{LocallyConstantPotential, MarkovMeasure};
use thermo_core::mp_transitions::{default_scan_grid, kink_detector, phase_scan, scan_csv, verdict_at};
use thermo_core::pressure::{
    axiom_suite, coboundary_invariance_check, matrix_pressure, separated_set_pressure, topological_entropy,
    transfer_operator_pressure, MatrixEngine, PressureEngine, SeparatedEngine, TransferEngine, TransferOptions,
};
use thermo_core::report::{csv_row, fmt12};
use thermo_core::symbolic::{
    build_beta_shift, build_manneville_pomeau, doubling_map, format_symbols, CylinderSpace, IntervalMapSystem, SftSystem,
};
use thermo_core::zerotemp::{accumulation_diagnostics, geometric_grid, oracle_csv, periodic_orbit_oracle, temperature_sweep};

use crate::config::{Command, EngineKind, MeasureGrid, RunConfig, SystemKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug)]
pub enum RunError {
    Core(thermo_core::Error),
    Io(String),
}

impl RunError {
    pub fn name(&self) -> &'static str {
        match self {
            RunError::Core(e) => e.name(),
            RunError::Io(_) => "IoError",
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<thermo_core::Error> for RunError {
    fn from(e: thermo_core::Error) -> Self {
        RunError::Core(e)
    }
}

type Res<T> = std::result::Result<T, RunError>;

/// Collected outputs of one command before anything touches the disk.
#[derive(Debug, Default)]
struct Artifacts {
    files: Vec<(String, String)>,
    scalars: Map<String, Value>,
    checks_passed: bool,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts {
            checks_passed: true,
            ..Default::default()
        }
    }

    fn csv(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn num(&mut self, key: &str, x: f64) {
        let v = fmt12(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64);
        self.scalars.insert(key.into(), v.map_or(Value::String(fmt12(x)), Value::Number));
    }

    fn int(&mut self, key: &str, x: u64) {
        self.scalars.insert(key.into(), json!(x));
    }

    fn text(&mut self, key: &str, s: impl Into<String>) {
        self.scalars.insert(key.into(), Value::String(s.into()));
    }

    fn flag(&mut self, key: &str, b: bool) {
        self.scalars.insert(key.into(), Value::Bool(b));
    }

    fn check(&mut self, key: &str, pass: bool) {
        self.flag(key, pass);
        self.checks_passed &= pass;
    }
}

/// Result of [`run`]: the process exit code and the summary record that was written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn sft(cfg: &RunConfig) -> Res<Arc<SftSystem>> {
    match cfg.system.kind {
        SystemKind::Sft => {
            let rows = cfg.system.matrix.clone().unwrap_or_default();
            Ok(Arc::new(SftSystem::new("config", rows)?))
        }
        SystemKind::Beta => {
            let (_, s) = build_beta_shift(cfg.system.beta.unwrap_or(0.0), cfg.system.beta_depth)?;
            Ok(Arc::new(s))
        }
        _ => Err(RunError::Core(thermo_core::Error::InvalidParameter {
            name: "system",
            reason: "needs a symbolic system".into(),
        })),
    }
}

fn interval_map(cfg: &RunConfig) -> Res<IntervalMapSystem> {
    match cfg.system.kind {
        SystemKind::Mp => Ok(build_manneville_pomeau(cfg.system.alpha.unwrap_or(0.0))?),
        _ => Ok(doubling_map()),
    }
}

fn potential(cfg: &RunConfig, sys: &Arc<SftSystem>) -> Res<LocallyConstantPotential> {
    let space = CylinderSpace::new(sys, cfg.potential.depth)?;
    let values = cfg.potential.values.clone().unwrap_or_else(|| vec![0.0; space.len()]);
    Ok(LocallyConstantPotential::new(&space, values)?)
}

fn cocycle(cfg: &RunConfig, sys: &Arc<SftSystem>) -> Res<CocycleSpec> {
    let gens = cfg
        .cocycle
        .generators
        .as_ref()
        .map(|g| {
            g.iter()
                .map(|m| DMatrix::from_fn(m.len(), m.len(), |i, j| m[i][j]))
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    Ok(CocycleSpec::new(sys, gens)?)
}

fn is_full_shift(sys: &SftSystem) -> bool {
    let m = sys.alphabet_size();
    sys.edge_count() == m * m
}

fn cmd_pressure(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    if cfg.system.kind.is_symbolic() {
        let sys = sft(cfg)?;
        let phi = potential(cfg, &sys)?;
        let exact = matrix_pressure(&phi)?;
        let sep = separated_set_pressure(&phi, cfg.pressure.n_max)?;
        let mut summary = String::from("method,value,lower,upper\n");
        summary.push_str(&csv_row([
            "matrix".into(),
            fmt12(exact.log_lambda),
            fmt12(exact.bracket.0),
            fmt12(exact.bracket.1),
        ]));
        summary.push_str(&csv_row([
            "separated".into(),
            fmt12(sep.value),
            fmt12(sep.bracket.0),
            fmt12(sep.bracket.1),
        ]));
        a.csv("pressure.csv", summary);
        a.csv("separated.csv", sep.to_csv());
        a.num("value", exact.log_lambda);
        a.num("separated_value", sep.value);
        a.num("separated_lower", sep.bracket.0);
        a.num("separated_upper", sep.bracket.1);
        a.num("topological_entropy", topological_entropy(&sys)?);
    } else {
        let map = interval_map(cfg)?;
        let est = transfer_operator_pressure(&map, cfg.pressure.t, cfg.pressure.transfer_depth)?;
        a.csv("transfer.csv", est.to_csv());
        a.num("value", est.value);
        a.num("lower", est.bracket.0);
        a.num("upper", est.bracket.1);
        a.num("t", cfg.pressure.t);
    }
    Ok(())
}

fn cmd_dual_entropy(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let grid = match cfg.dual.grid {
        MeasureGrid::Bernoulli => bernoulli_grid(&sys, cfg.dual.grid_size)?,
        MeasureGrid::Markov => markov_grid(&sys, cfg.dual.order, cfg.dual.grid_size, cfg.seed)?,
    };
    let env = envelope_equality_check(&sys, &grid, None)?;
    a.csv("envelope.csv", env.to_csv());
    a.num("max_gap", env.max_gap);
    a.num("envelope_tolerance", env.tolerance);
    a.check("envelope_pass", env.pass);

    let phi = potential(cfg, &sys)?;
    let v = variational_identity_check(&phi, cfg.dual.tol, cfg.dual.samples, cfg.seed)?;
    let mut csv = String::from("pressure,dual_entropy,integral,defect,samples,sampled_max,pass\n");
    csv.push_str(&csv_row([
        fmt12(v.pressure),
        fmt12(v.dual_entropy),
        fmt12(v.integral),
        fmt12(v.defect),
        v.samples.to_string(),
        fmt12(v.sampled_max),
        v.pass.to_string(),
    ]));
    a.csv("variational.csv", csv);
    a.num("pressure", v.pressure);
    a.num("dual_entropy", v.dual_entropy);
    a.num("defect", v.defect);
    a.check("variational_pass", v.pass);
    Ok(())
}

fn cmd_equilibrium(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let phi = potential(cfg, &sys)?;
    let g = gibbs_state(&phi)?;
    let mu = &g.measure;
    let space = mu.space();
    let p = mu.stochastic();
    let mut csv = String::from("from,to,probability\n");
    for i in 0..space.len() {
        for &j in space.successors(i) {
            csv.push_str(&csv_row([
                format_symbols(space.word(i).symbols()),
                format_symbols(space.word(j).symbols()),
                fmt12(p[(i, j)]),
            ]));
        }
    }
    a.csv("transitions.csv", csv);
    a.csv("marginal.csv", mu.marginal(cfg.equilibrium.marginal_depth)?.to_csv());
    a.num("pressure", g.log_lambda);
    a.num("entropy", mu.ks_entropy());
    a.num("integral", mu.integrate(&phi)?);
    Ok(())
}

fn cmd_tangency(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let phi = potential(cfg, &sys)?;
    let dirs = sample_directions(phi.space(), cfg.tangency.directions, cfg.seed)?;
    let rep = tangency_check(&phi, &dirs)?;
    a.csv("tangency.csv", rep.to_csv());
    a.num("max_violation", rep.max_violation);
    a.int("directions_tested", rep.directions_tested as u64);
    a.check("tangency_pass", rep.passes(cfg.tangency.tol));

    let mu = gibbs_state(&phi)?.measure;
    let mut csv = String::from("psi_id,derivative,pairing,error\n");
    let mut worst = 0.0f64;
    for (i, psi) in dirs.iter().take(cfg.tangency.gateaux_pairs).enumerate() {
        let d = gateaux_derivative(&phi, psi, &DEFAULT_T_GRID)?.derivative;
        let pairing = mu.integrate(psi)?;
        worst = worst.max((d - pairing).abs());
        csv.push_str(&csv_row([i.to_string(), fmt12(d), fmt12(pairing), fmt12(d - pairing)]));
    }
    a.csv("gateaux.csv", csv);
    a.num("gateaux_max_error", worst);
    a.check("gateaux_pass", worst <= 1e-7);
    Ok(())
}

fn cmd_zero_temp(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let phi = potential(cfg, &sys)?;
    let z = &cfg.zero_temp;
    let grid = geometric_grid(z.t_min, z.t_ratio, z.t_max);
    let sweep = temperature_sweep(&phi, &grid, z.depth)?;
    let oracle = periodic_orbit_oracle(&phi, z.max_period)?;
    let acc = accumulation_diagnostics(&sweep, &oracle, &sys)?;
    a.csv("sweep.csv", sweep.to_csv());
    a.csv("oracle.csv", oracle_csv(&oracle, &phi)?);
    a.csv("accumulation.csv", acc.to_csv());
    let last = sweep.rows.last().expect("nonempty grid");
    a.num("t_max", last.t);
    a.num("pressure_over_t", last.pressure_over_t);
    a.num("entropy", last.entropy);
    a.num("max_average", oracle.max_average);
    a.text("witness_orbit", format_symbols(oracle.witness_orbit.symbols()));
    a.num("integral_gap", acc.integral_gap);
    a.flag("accumulation_pass", acc.pass());
    Ok(())
}

fn cmd_cocycle(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let spec = cocycle(cfg, &sys)?;
    let alpha = cfg.singular_weight().ok_or(RunError::Core(thermo_core::Error::InvalidParameter {
        name: "alpha",
        reason: "invalid singular weight".into(),
    }))?;
    let cc = &cfg.cocycle;
    let est = subadditive_pressure(&spec, &alpha, cc.n_max)?;
    a.csv("pressure.csv", est.to_csv());
    a.num("value", est.value);
    a.num("fekete_upper", est.fekete_upper);

    let grid = if sys.alphabet_size() == 2 && is_full_shift(&sys) {
        bernoulli_grid(&sys, cc.grid_size)?
    } else {
        markov_grid(&sys, 1, cc.grid_size, cfg.seed)?
    };
    let cfh = cfh_variational_check(&spec, &alpha, &grid, cc.n_max)?;
    a.csv("cfh.csv", cfh.to_csv());
    a.num("cfh_best_lower", cfh.best_lower);
    a.num("cfh_gap", cfh.gap);
    a.check("cfh_pass", cfh.pass);

    let sweep = lyapunov_temperature_sweep(&spec, &alpha, &cc.t_grid, cc.n_max, cc.max_period)?;
    a.csv("lyapunov_sweep.csv", sweep.to_csv());
    a.num("lyapunov_optimum", sweep.oracle.max_average);
    a.text("lyapunov_witness", format_symbols(sweep.oracle.witness_orbit.symbols()));
    a.num("limit_gap", sweep.limit_gap);
    Ok(())
}

fn cmd_lyapunov(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let sys = sft(cfg)?;
    let spec = cocycle(cfg, &sys)?;
    let mu = match &cfg.lyapunov.probs {
        Some(p) => MarkovMeasure::bernoulli(&sys, p)?,
        None => MarkovMeasure::parry(&sys)?,
    };
    let ly = &cfg.lyapunov;
    let spectrum = lyapunov_qr(&spec, &mu, ly.n_steps, ly.samples, cfg.seed)?;
    a.csv("spectrum.csv", spectrum.to_csv());
    let mut csv = String::from("k,exterior,stderr,qr_partial_sum\n");
    let mut partial = 0.0;
    for k in 1..=spec.dimension() {
        partial += spectrum.exponents[k - 1];
        let (e, s) = lyapunov_exterior(&spec, &mu, k, ly.n_steps, ly.samples, cfg.seed.wrapping_add(k as u64))?;
        csv.push_str(&csv_row([k.to_string(), fmt12(e), fmt12(s), fmt12(partial)]));
        if k == 1 {
            a.num("exterior_top", e);
        }
    }
    a.csv("exterior.csv", csv);
    a.num("lambda_1", spectrum.exponents[0]);
    a.num("lambda_sum", spectrum.exponents.iter().sum());
    Ok(())
}

fn cmd_mp_scan(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let alpha = cfg.system.alpha.unwrap_or(0.0);
    let grid = cfg.mp.t_grid.clone().unwrap_or_else(default_scan_grid);
    let scan = phase_scan(alpha, &grid, cfg.mp.depth)?;
    let verdicts = kink_detector(&scan);
    a.csv("scan.csv", scan_csv(&scan, &verdicts));
    a.num("alpha", alpha);
    a.int("depth", cfg.mp.depth as u64);
    if let Some(v) = verdict_at(&verdicts, 1.0) {
        a.num("verdict_t", v.t);
        a.text("verdict", v.verdict.as_str());
        a.num("gap", v.gap);
        a.num("noise", v.noise);
    }
    let widest = scan.rows.iter().map(|r| r.width()).fold(0.0, f64::max);
    a.num("max_width", widest);
    Ok(())
}

fn cmd_beta_shift(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let beta = cfg.system.beta.unwrap_or(0.0);
    let (spec, sys) = build_beta_shift(beta, cfg.system.beta_depth)?;
    let sys = Arc::new(sys);
    let mut csv = String::from("i,digit\n");
    for (i, d) in spec.expansion.iter().enumerate() {
        csv.push_str(&csv_row([(i + 1).to_string(), d.to_string()]));
    }
    a.csv("expansion.csv", csv);
    let h = topological_entropy(&sys)?;
    a.num("beta", beta);
    a.num("entropy", h);
    a.num("log_beta", beta.ln());
    a.num("entropy_error", h - beta.ln());
    a.int("states", sys.alphabet_size() as u64);
    match spec.terminates_at {
        Some(k) => a.int("terminates_at", k as u64),
        None => {
            a.scalars.insert("terminates_at".into(), Value::Null);
        }
    }
    a.flag("expansion_valid", spec.validate());
    Ok(())
}

fn cmd_axioms(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    let ax = &cfg.axioms;
    let engine: Box<dyn PressureEngine> = match ax.engine {
        EngineKind::Matrix => Box::new(MatrixEngine {
            space: CylinderSpace::new(&sft(cfg)?, cfg.potential.depth)?,
        }),
        EngineKind::Separated => Box::new(SeparatedEngine {
            space: CylinderSpace::new(&sft(cfg)?, cfg.potential.depth)?,
            n_max: ax.n_max,
        }),
        EngineKind::Transfer => Box::new(TransferEngine::new(
            &interval_map(cfg)?,
            ax.transfer_depth,
            TransferOptions::default(),
        )?),
    };
    let rep = axiom_suite(engine.as_ref(), ax.samples, cfg.seed)?;
    a.csv("axioms.csv", rep.to_csv());
    a.text("engine", rep.engine.clone());
    a.int("samples", rep.samples as u64);
    for (name, stat) in rep.rows() {
        a.num(&format!("{name}_worst_violation"), stat.worst_violation);
    }
    a.check("axioms_pass", rep.pass);

    if cfg.system.kind.is_symbolic() {
        let space = CylinderSpace::new(&sft(cfg)?, cfg.potential.depth)?;
        let phis = sample_directions(&space, ax.samples, cfg.seed)?;
        let psis = sample_directions(&space, ax.samples, cfg.seed.wrapping_add(1))?;
        let n = space.len();
        let mut csv = String::from("sample,pressure,shifted_pressure,difference,pass\n");
        let mut all = true;
        let mut worst = 0.0f64;
        for (i, (phi, psi)) in phis[n..].iter().zip(&psis[n..]).enumerate() {
            let phi = phi.scale(3.0);
            let psi = psi.scale(3.0);
            let r = coboundary_invariance_check(&phi, &psi)?;
            all &= r.pass;
            worst = worst.max(r.difference.abs());
            csv.push_str(&csv_row([
                i.to_string(),
                fmt12(r.pressure),
                fmt12(r.shifted_pressure),
                fmt12(r.difference),
                r.pass.to_string(),
            ]));
        }
        a.csv("coboundary.csv", csv);
        a.num("coboundary_worst", worst);
        a.check("coboundary_pass", all);
    }
    Ok(())
}

fn dispatch(cfg: &RunConfig, a: &mut Artifacts) -> Res<()> {
    match cfg.command {
        Command::Pressure => cmd_pressure(cfg, a),
        Command::DualEntropy => cmd_dual_entropy(cfg, a),
        Command::Equilibrium => cmd_equilibrium(cfg, a),
        Command::Tangency => cmd_tangency(cfg, a),
        Command::ZeroTemp => cmd_zero_temp(cfg, a),
        Command::Cocycle => cmd_cocycle(cfg, a),
        Command::Lyapunov => cmd_lyapunov(cfg, a),
        Command::MpScan => cmd_mp_scan(cfg, a),
        Command::BetaShift => cmd_beta_shift(cfg, a),
        Command::Axioms => cmd_axioms(cfg, a),
    }
}

fn write(path: &Path, body: &str) -> Res<()> {
    fs::write(path, body).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Runs one command, writes its CSVs and `summary.json` into `out`, and returns the exit code.
///
/// CSVs never contain timing, so identical configs give identical files.
pub fn run(cfg: &RunConfig, out: &Path) -> RunOutcome {
    let start = Instant::now();
    let mut a = Artifacts::new();
    let result = dispatch(cfg, &mut a);
    let mut files = Vec::new();
    let mut io_error = None;
    if let Err(e) = fs::create_dir_all(out) {
        io_error = Some(RunError::Io(format!("{}: {e}", out.display())));
    }
    if result.is_ok() && io_error.is_none() {
        for (name, body) in &a.files {
            let p = out.join(name);
            if let Err(e) = write(&p, body) {
                io_error = Some(e);
                break;
            }
            files.push(p);
        }
    }
    let error = result.err().or(io_error);
    let (status, exit_code) = match (&error, a.checks_passed) {
        (Some(_), _) => ("error", EXIT_ERROR),
        (None, false) => ("check_failed", EXIT_CHECK_FAILED),
        (None, true) => ("ok", EXIT_OK),
    };
    let summary = json!({
        "command": cfg.command.as_str(),
        "status": status,
        "exit_code": exit_code,
        "seed": cfg.seed,
        "library_version": thermo_core::VERSION,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "error": error.as_ref().map(|e| e.name()),
        "message": error.as_ref().map(|e| e.to_string()),
        "files": a.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>(),
        "scalars": Value::Object(a.scalars),
    });
    let text = serde_json::to_string_pretty(&summary).expect("json") + "\n";
    let summary_path = out.join("summary.json");
    let exit_code = if fs::write(&summary_path, text).is_ok() {
        files.push(summary_path);
        exit_code
    } else {
        EXIT_ERROR
    };
    RunOutcome {
        exit_code,
        summary,
        files,
    }
}
