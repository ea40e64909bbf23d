//! The eight scenarios behind `sce run`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sce_core::mode_oracle::oracle_compare;
use sce_core::propagator::{evolve_rk, factorial_bound, geometric_bound, BoundReport};
use sce_core::sce::{
    consistent_conformal_jet, shoot_energy_constraint, solve_energy_for_a3, solve_sce, solve_sce_at, tail_sensitivity, tow_in,
    Formulation, InitialData, PhysicsParams, SceTrajectory, ScaleFactorJet, ShootSetup, SmoothSwitch, TowInOutcome,
};
use sce_core::seqspace::{weighted_norm, NormSpec, WeightSpec};

use crate::config::{A3Spec, Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{canonical, sha256_hex, write_json, write_sidecar, write_table, write_trajectory, BoundSummary, RunReport, TRAJECTORY_COLUMNS};

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    dir: PathBuf,
    echo: serde_json::Value,
    metrics: BTreeMap<String, f64>,
    nonfinite: Vec<String>,
    bounds: Vec<BoundSummary>,
    files: Vec<String>,
    halt: Option<String>,
}

impl Run<'_> {
    fn metric(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.metrics.insert(key.to_string(), v);
        } else {
            self.nonfinite.push(key.to_string());
        }
    }

    fn trajectory(&mut self, name: &str, traj: &SceTrajectory) -> CliResult<()> {
        let path = self.dir.join(name);
        let rows = write_trajectory(&path, traj)?;
        self.sidecar(&path, &TRAJECTORY_COLUMNS, rows)
    }

    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<f64>>) -> CliResult<()> {
        let path = self.dir.join(name);
        let n = write_table(&path, header, rows)?;
        self.sidecar(&path, header, n)
    }

    fn sidecar(&mut self, csv: &Path, header: &[&str], rows: usize) -> CliResult<()> {
        let side = write_sidecar(csv, header, rows, &self.echo)?;
        for p in [csv, side.as_path()] {
            self.files.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
        Ok(())
    }

    fn halted(&mut self, traj: &SceTrajectory) {
        if let Some(h) = &traj.halt {
            self.halt.get_or_insert_with(|| format!("tau = {}: {}", h.tau, h.reason));
        }
    }

    fn summary(&mut self, prefix: &str, traj: &SceTrajectory) {
        let abs_max = |f: &dyn Fn(&sce_core::sce::TrajectorySample) -> f64| {
            traj.samples.iter().map(f).filter(|x| x.is_finite()).fold(0.0, f64::max)
        };
        let a0 = traj.samples.first().map_or(f64::NAN, |s| s.jet.a);
        let p = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        self.metric(&p("samples"), traj.samples.len() as f64);
        self.metric(&p("max_abs_trace_residual"), abs_max(&|s| s.diagnostics.trace_residual.abs()));
        self.metric(&p("max_abs_energy_residual"), abs_max(&|s| s.diagnostics.energy_residual.abs()));
        self.metric(&p("max_rel_trace_residual"), traj.max_trace_relative());
        self.metric(&p("max_rel_energy_residual"), traj.max_energy_relative());
        self.metric(&p("max_abs_a_drift"), abs_max(&|s| (s.jet.a - a0).abs()));
        if let Some(l) = traj.last() {
            self.metric(&p("final_tau"), l.tau);
            self.metric(&p("final_a"), l.jet.a);
        }
        self.halted(traj);
    }
}

/// Run a validated config, writing every artifact under `cfg.output.dir`.
/// A numerical halt is reported in `RunReport::halt`; outputs are still written.
pub fn run(cfg: &ScenarioConfig) -> CliResult<RunReport> {
    let start = Instant::now();
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let echo = cfg.to_json();
    let hash = sha256_hex(&canonical(&echo));
    let mut r = Run { cfg, dir, echo, metrics: BTreeMap::new(), nonfinite: vec![], bounds: vec![], files: vec![], halt: None };
    let outcome = match cfg.scenario {
        Scenario::MinkowskiCheck | Scenario::VacuumEvolve | Scenario::ThermalEvolve => evolve(&mut r),
        Scenario::Conformal => conformal(&mut r),
        Scenario::Towin => towin(&mut r),
        Scenario::Shoot => shoot(&mut r),
        Scenario::OracleCompare => oracle(&mut r),
        Scenario::BoundsAudit => bounds_audit(&mut r),
    };
    match outcome {
        Ok(()) => {}
        Err(CliError::Numerical(msg)) => {
            r.halt.get_or_insert(msg);
        }
        Err(e) => return Err(e),
    }
    r.files.push("report.json".into());
    let report = RunReport {
        scenario: cfg.scenario.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hash,
        wall_time_s: start.elapsed().as_secs_f64(),
        halt: r.halt,
        metrics: r.metrics,
        nonfinite: r.nonfinite,
        bounds: r.bounds,
        files: r.files,
    };
    write_json(&r.dir.join("report.json"), &report)?;
    Ok(report)
}

fn initial_data(cfg: &ScenarioConfig, p: &PhysicsParams) -> CliResult<InitialData> {
    let moments = cfg.moments()?;
    let j = cfg.initial.jet;
    let bg = cfg.initial.background;
    let mut jet = ScaleFactorJet::new(j.a, j.a1, j.a2, 0.0);
    jet.a3 = match j.a3 {
        A3Spec::Value(v) => v,
        A3Spec::Keyword(_) => solve_energy_for_a3(&jet, &moments.get(0), &moments.get(1), &bg, p)
            .map_err(|e| CliError::at("initial.jet.a3", format!("cannot solve the energy constraint: {e}")))?,
    };
    Ok(InitialData::new(jet, moments, bg))
}

fn span(cfg: &ScenarioConfig) -> (f64, f64) {
    (cfg.span[0], cfg.span[1])
}

fn evolve(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let p = cfg.physics_params()?;
    let init = initial_data(cfg, &p)?;
    r.metric("c1", p.c1);
    r.metric("initial_a3", init.jet.a3);
    let traj = solve_sce(&init, &p, cfg.formulation, span(cfg), &cfg.solver)?;
    r.trajectory("trajectory.csv", &traj)?;
    r.summary("", &traj);
    if cfg.tail_extra > 0 && traj.completed() {
        let d = tail_sensitivity(&init, |n| cfg.moments_at(n).map_err(|e| sce_core::SceError::InvalidArgument(e.to_string())), cfg.tail_extra, &p, cfg.formulation, span(cfg), &cfg.solver)?;
        r.metric("tail_sensitivity", d);
    }
    Ok(())
}

fn conformal(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let p = cfg.physics_params()?;
    let mut init = initial_data(cfg, &p)?;
    let (m0, m1) = (init.moments.get(0), init.moments.get(1));
    init.jet = consistent_conformal_jet(init.jet.a, init.jet.a1, &m0, &m1, &init.background, &p)?;
    init.jet.a4 = None;
    r.metric("initial_a2", init.jet.a2);
    r.metric("initial_a3", init.jet.a3);
    let fourth = solve_sce(&init, &p, Formulation::FourthOrder, span(cfg), &cfg.solver)?;
    r.trajectory("trajectory_fourth_order.csv", &fourth)?;
    r.summary("fourth_order", &fourth);
    let second = solve_sce_at(&init, &p, Formulation::ConformalSecondOrder, &fourth.times(), &cfg.solver)?;
    r.trajectory("trajectory_second_order.csv", &second)?;
    r.summary("second_order", &second);
    let gap = fourth.samples.iter().zip(&second.samples).map(|(x, y)| (x.jet.a - y.jet.a).abs()).fold(0.0, f64::max);
    r.metric("max_abs_a_gap", gap);
    Ok(())
}

fn towin_metrics(r: &mut Run, out: &TowInOutcome) {
    let norm = r.cfg.norm.spec();
    r.metric("tau_init", out.at_init().tau);
    if let Some((jet, moments)) = out.jumps(&norm) {
        r.metric("jet_jump", jet);
        r.metric("moment_jump", moments);
        r.metric("jump_within_epsilon", f64::from(u8::from(jet.max(moments) <= r.cfg.towin.epsilon)));
    }
    if let Some(f) = out.at_free() {
        r.metric("energy_residual_at_free", f.diagnostics.energy_residual);
        r.metric("energy_scale_at_free", f.diagnostics.energy_scale);
    }
    let free = out.free_segment();
    let trace = free.iter().map(|s| s.diagnostics.trace_relative()).filter(|x| x.is_finite()).fold(0.0, f64::max);
    r.metric("free_max_rel_trace_residual", trace);
}

fn towin(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let p = cfg.physics_params()?;
    let t = cfg.towin;
    let sw = SmoothSwitch { tau_init: t.times.init, tau_free: t.times.free };
    let out = tow_in(&t.ramp, &cfg.moments()?, cfg.initial.background, &p, t.times, &sw, &cfg.solver)?;
    r.trajectory("trajectory.csv", &out.trajectory)?;
    r.summary("", &out.trajectory);
    towin_metrics(r, &out);
    Ok(())
}

fn shoot(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let p = cfg.physics_params()?;
    let moments = cfg.moments()?;
    let setup = ShootSetup {
        base: &cfg.towin.ramp,
        moments: &moments,
        background: cfg.initial.background,
        params: p,
        times: cfg.towin.times,
        delta: cfg.shoot.delta,
        opts: cfg.solver,
    };
    let s = &cfg.shoot;
    let res = shoot_energy_constraint(&setup, (s.c_range[0], s.c_range[1]), s.rel_tol, s.max_steps)?;
    r.trajectory("trajectory.csv", &res.outcome.trajectory)?;
    r.summary("", &res.outcome.trajectory);
    r.metric("c0", res.c0);
    r.metric("bisection_steps", res.steps as f64);
    r.metric("shot_residual", res.residual);
    r.metric("shot_scale", res.scale);
    towin_metrics(r, &res.outcome);
    Ok(())
}

fn oracle(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let o = &cfg.oracle;
    let (t0, t1) = span(cfg);
    let rep = oracle_compare(&o.bump, &o.potential, t0, t1, cfg.order, o.tol)?;
    let rows = (0..=rep.retained)
        .map(|n| {
            let (a, b) = (rep.from_modes.get(n), rep.from_hierarchy.get(n));
            vec![n as f64, rep.gaps[n], a[0], a[1], a[2], b[0], b[1], b[2]]
        })
        .collect();
    r.table(
        "oracle.csv",
        &["n", "gap", "modes_ff", "modes_pf", "modes_pp", "hierarchy_ff", "hierarchy_pf", "hierarchy_pp"],
        rows,
    )?;
    r.metric("max_abs_gap", rep.max_abs_gap);
    r.metric("retained", rep.retained as f64);
    Ok(())
}

fn summarize(label: String, rep: &BoundReport, observed: f64) -> BoundSummary {
    BoundSummary { label, regime: format!("{:?}", rep.regime).to_lowercase(), bound: Some(rep.bound).filter(|b| b.is_finite()), observed, valid: rep.valid }
}

fn bounds_audit(r: &mut Run) -> CliResult<()> {
    let cfg = r.cfg;
    let b = &cfg.bounds;
    let m0 = cfg.moments()?;
    let p = cfg.norm.p.unwrap_or(f64::INFINITY);
    let geo = NormSpec { p, weights: WeightSpec::geometric(1.0, b.omega)? };
    let fac_in = NormSpec { p, weights: WeightSpec::factorial(b.omega)? };
    let fac_out = NormSpec { p, weights: WeightSpec::factorial(b.upsilon)? };
    let (t0, t1) = span(cfg);
    let k = b.checkpoints.max(1);
    let mut rows = Vec::with_capacity(k);
    let mut violations = 0usize;
    for i in 1..=k {
        let t = t0 + (t1 - t0) * i as f64 / k as f64;
        let m = evolve_rk(&m0, &b.potential, t0, t, cfg.solver.tol)?;
        let g = geometric_bound(&b.potential, b.omega, t0, t)?;
        let f = factorial_bound(&b.potential, b.omega, b.upsilon, t0, t)?;
        let g_obs = weighted_norm(&m, &geo) / weighted_norm(&m0, &geo);
        let f_obs = weighted_norm(&m, &fac_out) / weighted_norm(&m0, &fac_in);
        violations += usize::from(g_obs > g.bound * (1.0 + 1e-9));
        violations += usize::from(f.valid && f_obs > f.bound * (1.0 + 1e-9));
        rows.push(vec![t, g_obs, g.bound, g.c_omega, f_obs, f.bound, f.c_omega, f64::from(u8::from(f.valid))]);
        if i == k {
            r.bounds.push(summarize(format!("geometric omega={} tau={t}", b.omega), &g, g_obs));
            r.bounds.push(summarize(format!("factorial omega={} upsilon={} tau={t}", b.omega, b.upsilon), &f, f_obs));
        }
    }
    r.table(
        "bounds.csv",
        &["tau", "geometric_ratio", "geometric_bound", "c_omega", "factorial_ratio", "factorial_bound", "c_0", "factorial_valid"],
        rows,
    )?;
    r.metric("violations", violations as f64);
    Ok(())
}
