//! Subcommand implementations.

use std::path::PathBuf;

use thermkin_core::protocols::{
    equidistance_of, linear_response_sweep, run_protocol, solve_equidistant_cold, solve_equidistant_warm,
    spectrum_report, BranchResult, Equidistance, ProtocolKind, ProtocolResult, ProtocolSpec, SpectrumSide,
};
use thermkin_core::validation::{run_validation, CheckKind};

use crate::config::{Command, ConfigError, RunConfig};
use crate::output::{fmt_f64, fmt_opt, write_atomic, Manifest, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(#[from] thermkin_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Numeric(e) => e.name(),
            CliError::Io(_) => "IoError",
            CliError::Validation(_) => "ValidationFailure",
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(ConfigError(msg.into()))
}

struct Outputs {
    dir: PathBuf,
    manifest: Manifest,
    files: Vec<String>,
}

impl Outputs {
    fn new(command: &str, cfg: Option<&RunConfig>, dir: PathBuf) -> Self {
        let mut manifest = Manifest::default();
        manifest.add("command", command);
        manifest.add("version", env!("CARGO_PKG_VERSION"));
        manifest.add("units", "hbar = k_B = 1");
        manifest.add("vectorization", "column stacking, vec(rho)[i + D j] = rho[i, j]");
        if let Some(cfg) = cfg {
            for (k, v) in &cfg.resolved {
                manifest.add(k.clone(), v.clone());
            }
            for f in &cfg.flags {
                manifest.add("assumption", f.clone());
            }
        }
        Self {
            dir,
            manifest,
            files: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.dir, name, contents)?;
        self.files.push(name.into());
        Ok(())
    }

    fn finish(mut self) -> CliResult<()> {
        for f in std::mem::take(&mut self.files) {
            self.manifest.add("output", f);
        }
        write_atomic(&self.dir, "manifest.txt", &self.manifest.render())?;
        Ok(())
    }
}

fn equidist_table(eq: &Equidistance) -> String {
    let mut t = Table::new(&["t_warm", "t_hot", "t_cold", "residual"]);
    t.row(&[fmt_f64(eq.t_warm), fmt_f64(eq.t_hot), fmt_f64(eq.t_cold), fmt_f64(eq.residual())]);
    t.render()
}

fn kinematics_table(r: &ProtocolResult) -> String {
    let mut t = Table::new(&["branch", "t", "fidelity_to_target", "qfi", "velocity", "length", "completion"]);
    for b in [&r.heating, &r.cooling] {
        let k = &b.kinematics;
        for i in 0..k.times.len() {
            t.row(&[
                b.label.to_string(),
                fmt_f64(k.times[i]),
                fmt_f64(k.fidelity[i]),
                fmt_f64(k.qfi[i]),
                fmt_f64(k.velocity[i]),
                fmt_f64(k.length[i]),
                fmt_opt(k.completion.as_ref().map(|c| c[i])),
            ]);
        }
    }
    t.render()
}

fn branch_rows(t: &mut Table, b: &BranchResult) {
    let mut row = |m: &str, v: String| t.row(&[b.label.to_string(), m.to_string(), v]);
    row("initial_temperature", fmt_f64(b.initial_temperature));
    row("bath_temperature", fmt_f64(b.bath_temperature));
    for (level, time) in &b.threshold_times {
        row(&format!("time_to_fidelity_{level}"), fmt_opt(*time));
    }
    row("time_to_completion_0.9", fmt_opt(b.completion_time));
    row("final_fidelity", fmt_opt(b.kinematics.fidelity.last().copied()));
    row("converged", (b.converged as u8).to_string());
    row("fidelity_monotone", (b.fidelity_monotone as u8).to_string());
    row("total_length", fmt_f64(b.kinematics.total_length()));
    row("quadrature_change", fmt_f64(b.kinematics.quadrature_change));
    row("accepted_steps", b.trajectory.diagnostics.accepted_steps.to_string());
}

fn summary_table(r: &ProtocolResult) -> String {
    let mut t = Table::new(&["branch", "metric", "value"]);
    branch_rows(&mut t, &r.heating);
    branch_rows(&mut t, &r.cooling);
    let s = &r.summary;
    let both = "both".to_string();
    let b = |v: Option<bool>| v.map(|x| (x as u8).to_string()).unwrap_or_else(|| "nan".into());
    for (m, v) in [
        ("max_completion_gap", fmt_opt(s.max_completion_gap)),
        ("min_interior_completion_gap", fmt_opt(s.min_interior_completion_gap)),
        ("heating_dominates", b(s.heating_dominates)),
        ("velocity_crossing", fmt_opt(s.velocity_crossing)),
        ("max_fidelity_gap", fmt_f64(s.max_fidelity_gap)),
        ("relative_fidelity_gap", fmt_opt(s.relative_fidelity_gap)),
    ] {
        t.row(&[both.clone(), m.into(), v]);
    }
    t.render()
}

fn protocol_spec(cfg: &RunConfig, kind: ProtocolKind) -> CliResult<ProtocolSpec> {
    let hot = cfg.t_hot.ok_or_else(|| config_err("missing t_hot or nbar_hot"))?;
    let mut spec = ProtocolSpec::new(cfg.family, kind, hot, cfg.t_final).with_grid(cfg.points, cfg.grid_chunks);
    spec.t_cold = cfg.t_cold;
    spec.t_warm = cfg.t_warm;
    spec.evolve = cfg.evolve;
    spec.equidist_tol = cfg.equidist_tol;
    spec.sld_cutoff = cfg.sld_cutoff;
    Ok(spec)
}

fn print_protocol(r: &ProtocolResult) {
    println!(
        "T_C = {:.10}  T_W = {}  T_H = {:.10}",
        r.t_cold,
        r.t_warm.map(|w| format!("{w:.10}")).unwrap_or_else(|| "-".into()),
        r.t_hot
    );
    for b in [&r.heating, &r.cooling] {
        let th: Vec<String> = b
            .threshold_times
            .iter()
            .map(|(l, t)| format!("F>={l}: {}", t.map(|x| format!("{x:.6}")).unwrap_or_else(|| "never".into())))
            .collect();
        println!(
            "{:8} {}  phi=0.9: {}  F(t_fin) = {:.8}",
            b.label,
            th.join("  "),
            b.completion_time.map(|x| format!("{x:.6}")).unwrap_or_else(|| "never".into()),
            b.kinematics.fidelity.last().copied().unwrap_or(f64::NAN)
        );
    }
    if let Some(d) = r.summary.heating_dominates {
        println!("heating completion ahead at every interior sample: {d}");
    }
    for f in &r.flags {
        println!("flag: {f}");
    }
}

fn protocol(cfg: &RunConfig, cmd: Command) -> CliResult<()> {
    let kind = match (cmd, cfg.backward) {
        (Command::Protocol2, _) => ProtocolKind::TwoTemperature,
        (_, false) => ProtocolKind::ThreeTemperatureForward,
        (_, true) => ProtocolKind::ThreeTemperatureBackward,
    };
    let spec = protocol_spec(cfg, kind)?;
    if kind == ProtocolKind::TwoTemperature && spec.t_cold.is_none() {
        return Err(config_err("missing t_cold or nbar_cold"));
    }
    let r = run_protocol(&spec)?;
    let name = if cmd == Command::Protocol2 { "protocol2" } else { "protocol3" };
    let mut out = Outputs::new(name, Some(cfg), cfg.out_dir.clone());
    out.manifest.add("protocol", kind.name());
    out.manifest.add("grid", if cfg.grid_chunks == 1 { "uniform" } else { "graded" });
    for b in [&r.heating, &r.cooling] {
        out.manifest.add(format!("{}_integrator", b.label), b.trajectory.diagnostics.method.clone());
        out.manifest.add(
            format!("{}_max_repair", b.label),
            fmt_f64(b.trajectory.diagnostics.max_repair),
        );
    }
    for f in &r.flags {
        out.manifest.add("flag", f.clone());
    }
    out.write("kinematics.csv", &kinematics_table(&r))?;
    out.write("summary.csv", &summary_table(&r))?;
    if let Some(eq) = &r.equidistance {
        out.write("equidist.csv", &equidist_table(eq))?;
    }
    print_protocol(&r);
    out.finish()
}

fn equidist(cfg: &RunConfig) -> CliResult<()> {
    let hot = cfg.t_hot.ok_or_else(|| config_err("missing t_hot or nbar_hot"))?;
    let eq = match (cfg.t_cold, cfg.t_warm) {
        (None, Some(w)) => solve_equidistant_cold(&cfg.family, w, hot, cfg.equidist_tol)?,
        (Some(c), None) => solve_equidistant_warm(&cfg.family, c, hot, cfg.equidist_tol)?,
        (Some(c), Some(w)) => equidistance_of(&cfg.family, c, w, hot)?,
        (None, None) => return Err(config_err("give t_warm (to solve T_C) or t_cold (to solve T_W)")),
    };
    let mut out = Outputs::new("equidist", Some(cfg), cfg.out_dir.clone());
    out.write("equidist.csv", &equidist_table(&eq))?;
    println!("T_C = {:.12}", eq.t_cold);
    println!("T_W = {:.12}", eq.t_warm);
    println!("T_H = {:.12}", eq.t_hot);
    println!("F(C,W) = {:.15}  F(H,W) = {:.15}", eq.f_cold, eq.f_hot);
    println!("residual = {:.3e}", eq.residual());
    out.finish()
}

fn spectrum(cfg: &RunConfig) -> CliResult<()> {
    let hot = cfg.t_hot.ok_or_else(|| config_err("missing t_hot or nbar_hot"))?;
    let cold = cfg.t_cold.ok_or_else(|| config_err("missing t_cold or nbar_cold"))?;
    let r = spectrum_report(&cfg.family, hot, cold, cfg.full_spectrum)?;
    let mut t = Table::new(&["bath_label", "k", "re_lambda", "im_lambda", "abs_overlap"]);
    let mut s = Table::new(&[
        "bath_label",
        "bath_temperature",
        "gap",
        "slow_modes",
        "slow_overlap_mass",
        "weighted_rate",
        "min_re",
        "max_re",
        "zero_modes",
        "conjugate_defect",
    ]);
    let mut side = |x: &SpectrumSide| {
        for (k, (l, o)) in x.eigenvalues.iter().zip(&x.abs_overlaps).enumerate() {
            t.row(&[x.label.into(), k.to_string(), fmt_f64(l.re), fmt_f64(l.im), fmt_f64(*o)]);
        }
        s.row(&[
            x.label.into(),
            fmt_f64(x.bath_temperature),
            fmt_f64(x.gap),
            x.slow_modes.to_string(),
            fmt_f64(x.slow_overlap_mass),
            fmt_f64(x.weighted_rate),
            fmt_f64(x.min_re),
            fmt_f64(x.max_re),
            x.zero_modes.to_string(),
            fmt_f64(x.conjugate_defect),
        ]);
        println!(
            "{:4} T = {:.6}: {} modes, gap {:.6e}, slow modes {}, slow overlap mass {:.6e}, weighted rate {:.6e}, min Re {:.6e}",
            x.label,
            x.bath_temperature,
            x.eigenvalues.len(),
            x.gap,
            x.slow_modes,
            x.slow_overlap_mass,
            x.weighted_rate,
            x.min_re
        );
    };
    side(&r.hot);
    side(&r.cold);
    let mut out = Outputs::new("spectrum", Some(cfg), cfg.out_dir.clone());
    out.manifest.add("sector", if r.full { "all blocks" } else { "population blocks" });
    out.write("spectrum.csv", &t.render())?;
    out.write("spectrum_summary.csv", &s.render())?;
    out.finish()
}

fn linres(cfg: &RunConfig) -> CliResult<()> {
    let warm = cfg.t_warm.ok_or_else(|| config_err("missing t_warm or nbar_warm"))?;
    let deltas = cfg
        .deltas
        .clone()
        .unwrap_or_else(|| (1..=10).map(|k| 0.005 * k as f64 * warm).collect());
    let lr = linear_response_sweep(&cfg.family, warm, &deltas)?;
    let mut t = Table::new(&["delta_t", "one_minus_f_heat", "one_minus_f_cool", "fit_coefficient"]);
    for r in &lr.rows {
        t.row(&[fmt_f64(r.delta), fmt_f64(r.heating), fmt_f64(r.cooling), fmt_f64(lr.coefficient)]);
    }
    let mut out = Outputs::new("linres", Some(cfg), cfg.out_dir.clone());
    out.manifest.add("fit_coefficient", fmt_f64(lr.coefficient));
    out.manifest.add("fit_coefficient_heating", fmt_f64(lr.heating_coefficient));
    out.manifest.add("fit_coefficient_cooling", fmt_f64(lr.cooling_coefficient));
    out.manifest.add("thermal_coefficient", fmt_f64(lr.thermal_coefficient));
    out.write("linres.csv", &t.render())?;
    println!(
        "T_W = {warm:.10}: fitted c = {:.10e} (heating {:.10e}, cooling {:.10e}), Var(E)/(8T^4) = {:.10e}",
        lr.coefficient, lr.heating_coefficient, lr.cooling_coefficient, lr.thermal_coefficient
    );
    if !cfg.divergence_nbar_hot.is_empty() {
        let cold = cfg.t_cold.ok_or_else(|| config_err("missing t_cold or nbar_cold for the divergence runs"))?;
        let mut d = Table::new(&[
            "nbar_hot",
            "t_cold",
            "t_warm",
            "t_hot",
            "max_fidelity_gap",
            "relative_fidelity_gap",
        ]);
        for &n in &cfg.divergence_nbar_hot {
            let th = cfg.family.temperature_for_occupation(n)?;
            let mut spec = protocol_spec(
                &RunConfig {
                    t_hot: Some(th),
                    t_warm: None,
                    t_cold: Some(cold),
                    ..cfg.clone()
                },
                ProtocolKind::ThreeTemperatureForward,
            )?;
            spec.t_hot = th;
            let r = run_protocol(&spec)?;
            d.row(&[
                fmt_f64(n),
                fmt_f64(r.t_cold),
                fmt_opt(r.t_warm),
                fmt_f64(r.t_hot),
                fmt_f64(r.summary.max_fidelity_gap),
                fmt_opt(r.summary.relative_fidelity_gap),
            ]);
            println!(
                "nbar_hot = {n}: sup |F_heat - F_cool| = {:.6e}, relative to 1 - F(0): {}",
                r.summary.max_fidelity_gap,
                r.summary
                    .relative_fidelity_gap
                    .map(|x| format!("{x:.6e}"))
                    .unwrap_or_else(|| "-".into())
            );
        }
        out.write("divergence.csv", &d.render())?;
    }
    out.finish()
}

fn validate(dir: PathBuf) -> CliResult<()> {
    let checks = run_validation()?;
    let mut t = Table::new(&["check", "kind", "value", "tolerance", "pass"]);
    let mut failed = Vec::new();
    for c in &checks {
        t.row(&[
            c.name.into(),
            c.kind.name().into(),
            fmt_f64(c.value),
            fmt_f64(c.tolerance),
            (c.pass as u8).to_string(),
        ]);
        println!(
            "{} [{}] {}: {:.3e} (tol {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.kind.name(),
            c.name,
            c.value,
            c.tolerance
        );
        if !c.pass && c.kind != CheckKind::Reference {
            failed.push(c.name);
        }
    }
    let mut out = Outputs::new("validate", None, dir);
    out.write("validate.csv", &t.render())?;
    out.finish()?;
    if !failed.is_empty() {
        return Err(CliError::Validation(format!("failed checks: {}", failed.join("; "))));
    }
    Ok(())
}

pub fn run(cmd: Option<Command>, cfg: Option<RunConfig>, validate_dir: PathBuf) -> CliResult<()> {
    match (cmd, cfg) {
        (Some(c @ (Command::Protocol3 | Command::Protocol2)), Some(cfg)) => protocol(&cfg, c),
        (Some(Command::Equidist), Some(cfg)) => equidist(&cfg),
        (Some(Command::Spectrum), Some(cfg)) => spectrum(&cfg),
        (Some(Command::Linres), Some(cfg)) => linres(&cfg),
        _ => validate(validate_dir),
    }
}
