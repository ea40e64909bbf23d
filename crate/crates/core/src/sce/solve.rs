//! Co-evolution of the scale-factor jet, the background field and the moment
//! hierarchy, plus the Picard fixed-point path and the constraint monitor.

use serde::{Deserialize, Serialize};

use super::equations::{
    background_rhs, conformal_rhs, consistent_conformal_jet, energy_residual, trace_equation, trace_from_components,
    trace_rhs, BackgroundField, Formulation, PhysicsParams, ScaleFactorJet, POLE_PROXIMITY,
};
use crate::error::{Result, SceError};
use crate::kinematics::apply_generator_flat;
use crate::quadrature::{lobatto_grid, ChebInterp, GaussRule};
use crate::rk::{triple_groups, DormandPrince, RkOptions, RkStats};
use crate::seqspace::{MomentVector, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub jet: ScaleFactorJet,
    pub moments: MomentVector,
    #[serde(default)]
    pub background: BackgroundField,
}

impl InitialData {
    pub fn new(jet: ScaleFactorJet, moments: MomentVector, background: BackgroundField) -> Self {
        Self { jet, moments, background }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub tol: f64,
    pub sample_dt: f64,
    /// a above this value counts as blow-up.
    pub blowup: f64,
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, sample_dt: 0.01, blowup: 1e8, max_steps: 2_000_000 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.sample_dt > 0.0) || !(self.blowup > 1.0) {
            return Err(SceError::InvalidArgument("tol and sample_dt must be > 0 and blowup > 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ricci: f64,
    pub g00: f64,
    pub hubble: f64,
    /// −R − κ⟨T⟩ from the coincidence limits.
    pub trace_residual: f64,
    pub trace_scale: f64,
    /// ⟨T₀₀⟩ − G₀₀/κ
    pub energy_residual: f64,
    pub energy_scale: f64,
}

impl Diagnostics {
    pub fn evaluate(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Self {
        let nan = f64::NAN;
        let (trace_residual, trace_scale) = match (
            trace_from_components(jet, m0, m1, bg, p),
            trace_equation(jet, m0, m1, bg, p),
        ) {
            (Ok(r), Ok(l)) => (r, p.kappa * l.scale),
            _ => (nan, nan),
        };
        let (energy_residual, energy_scale) = match energy_residual(jet, m0, m1, bg, p) {
            Ok(e) => (e.value, e.scale),
            Err(_) => (nan, nan),
        };
        Self { ricci: jet.ricci(), g00: jet.g00(), hubble: jet.hubble(), trace_residual, trace_scale, energy_residual, energy_scale }
    }

    pub fn trace_relative(&self) -> f64 {
        rel(self.trace_residual, self.trace_scale)
    }

    pub fn energy_relative(&self) -> f64 {
        rel(self.energy_residual, self.energy_scale)
    }
}

fn rel(v: f64, s: f64) -> f64 {
    if s > 0.0 {
        v.abs() / s
    } else {
        v.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub tau: f64,
    pub jet: ScaleFactorJet,
    pub moments: MomentVector,
    pub background: BackgroundField,
    pub diagnostics: Diagnostics,
}

/// Where and why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Halt {
    pub tau: f64,
    pub reason: SceError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceTrajectory {
    pub formulation: Formulation,
    pub samples: Vec<TrajectorySample>,
    pub halt: Option<Halt>,
    pub stats: RkStats,
}

impl SceTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn completed(&self) -> bool {
        self.halt.is_none()
    }

    /// The trajectory, or the halt reason as an error.
    pub fn into_result(self) -> Result<Self> {
        match self.halt {
            Some(h) => Err(h.reason),
            None => Ok(self),
        }
    }

    pub fn max_trace_relative(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.trace_relative()).fold(0.0, f64::max)
    }

    pub fn max_energy_relative(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.energy_relative()).fold(0.0, f64::max)
    }
}

/// Prescribed top derivative blended into the dynamics: a^{(k+1)} = (1−χ)·g + χ·f.
pub(crate) trait Blend {
    fn chi(&self, tau: f64) -> f64;
    fn prescribed(&self, tau: f64) -> f64;
}

pub(crate) struct Engine<'a> {
    pub p: PhysicsParams,
    pub form: Formulation,
    pub blend: Option<&'a dyn Blend>,
    pub blowup: f64,
}

impl<'a> Engine<'a> {
    pub fn new(p: &PhysicsParams, form: Formulation) -> Result<Self> {
        p.validate()?;
        if form == Formulation::ConformalSecondOrder && !p.is_conformal() {
            return Err(SceError::InvalidArgument(
                "the second-order formulation needs xi = 1/6 and 3c3 + c4 = -1/(5760 pi^2)".into(),
            ));
        }
        Ok(Self { p: *p, form, blend: None, blowup: SolveOptions::default().blowup })
    }

    pub fn jet_len(&self) -> usize {
        match self.form {
            Formulation::FourthOrder => 4,
            Formulation::ConformalSecondOrder => 2,
        }
    }

    pub fn pack(&self, init: &InitialData) -> Vec<f64> {
        let j = &init.jet;
        let mut y = match self.form {
            Formulation::FourthOrder => vec![j.a, j.a1, j.a2, j.a3],
            Formulation::ConformalSecondOrder => vec![j.a, j.a1],
        };
        y.push(init.background.phi);
        y.push(init.background.pi);
        y.extend(init.moments.flat());
        y
    }

    pub fn groups(&self, len: usize) -> Vec<usize> {
        let k = self.jet_len();
        let mut g: Vec<usize> = (0..k).collect();
        g.push(k);
        g.push(k);
        g.extend(triple_groups(len - k - 2, k + 1));
        g
    }

    fn parts<'y>(&self, y: &'y [f64]) -> (&'y [f64], BackgroundField, &'y [f64]) {
        let k = self.jet_len();
        (&y[..k], BackgroundField::new(y[k], y[k + 1]), &y[k + 2..])
    }

    fn check(&self, jet: &[f64]) -> Result<()> {
        let a = jet[0];
        if !a.is_finite() || jet.iter().any(|x| !x.is_finite()) {
            return Err(SceError::NonFinite { tau: f64::NAN });
        }
        if a < POLE_PROXIMITY {
            return Err(SceError::BigBang { a });
        }
        if a > self.blowup {
            return Err(SceError::BlowUp { a });
        }
        Ok(())
    }

    /// Unblended top derivative f (a⁗ or a″).
    pub fn free_top(&self, jet: &[f64], bg: &BackgroundField, m: &[f64]) -> Result<f64> {
        let m0 = [m[0], m[1], m[2]];
        let m1 = if m.len() >= 6 { [m[3], m[4], m[5]] } else { [0.0; 3] };
        match self.form {
            Formulation::FourthOrder => {
                trace_rhs(&ScaleFactorJet::new(jet[0], jet[1], jet[2], jet[3]), &m0, &m1, bg, &self.p)
            }
            Formulation::ConformalSecondOrder => conformal_rhs(jet[0], jet[1], bg.shift(&m0)[0], &self.p),
        }
    }

    pub fn top(&self, tau: f64, jet: &[f64], bg: &BackgroundField, m: &[f64]) -> Result<f64> {
        match self.blend {
            None => self.free_top(jet, bg, m),
            Some(b) => {
                let chi = b.chi(tau);
                if chi <= 0.0 {
                    Ok(b.prescribed(tau))
                } else if chi >= 1.0 {
                    self.free_top(jet, bg, m)
                } else {
                    Ok((1.0 - chi) * b.prescribed(tau) + chi * self.free_top(jet, bg, m)?)
                }
            }
        }
    }

    pub fn potential(&self, jet: &[f64], a2: f64) -> f64 {
        let m = self.p.m();
        self.p.eta() * a2 / jet[0] + jet[0] * jet[0] * m * m
    }

    pub fn rhs(&self, tau: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (jet, bg, m) = self.parts(y);
        self.check(jet)?;
        let k = jet.len();
        let top = self.top(tau, jet, &bg, m)?;
        if !top.is_finite() {
            return Err(SceError::NonFinite { tau });
        }
        dy[..k - 1].copy_from_slice(&jet[1..]);
        dy[k - 1] = top;
        let a2 = if k == 4 { jet[2] } else { top };
        let v = self.potential(jet, a2);
        let dbg = background_rhs(&bg, v);
        dy[k] = dbg.phi;
        dy[k + 1] = dbg.pi;
        apply_generator_flat(m, v, &mut dy[k + 2..]);
        Ok(())
    }

    /// Full jet (with a⁗) at a state.
    pub fn full_jet(&self, tau: f64, y: &[f64]) -> Result<ScaleFactorJet> {
        let (jet, bg, m) = self.parts(y);
        let top = self.top(tau, jet, &bg, m)?;
        match self.form {
            Formulation::FourthOrder => Ok(ScaleFactorJet::new(jet[0], jet[1], jet[2], jet[3]).with_a4(top)),
            Formulation::ConformalSecondOrder => {
                let m1 = if m.len() >= 6 { [m[3], m[4], m[5]] } else { [0.0; 3] };
                consistent_conformal_jet(jet[0], jet[1], &[m[0], m[1], m[2]], &m1, &bg, &self.p)
            }
        }
    }

    pub fn sample(&self, tau: f64, y: &[f64]) -> TrajectorySample {
        let (jet, bg, m) = self.parts(y);
        let moments = MomentVector::from_flat(m).unwrap_or_else(|_| MomentVector::zeros(m.len() / 3 - 1));
        let full = self.full_jet(tau, y).unwrap_or_else(|_| {
            let g = |i: usize| jet.get(i).copied().unwrap_or(f64::NAN);
            ScaleFactorJet { a: jet[0], a1: jet[1], a2: g(2), a3: g(3), a4: None }
        });
        let diagnostics = Diagnostics::evaluate(&full, &moments.get(0), &moments.get(1), &bg, &self.p);
        TrajectorySample { tau, jet: full, moments, background: bg, diagnostics }
    }

    /// Integrate through the given increasing sample times (the first is the start).
    pub fn run(&self, y0: Vec<f64>, times: &[f64], opts: &SolveOptions) -> Result<SceTrajectory> {
        let mut y = y0;
        let mut t = times[0];
        let mut stepper = DormandPrince::new(RkOptions { max_steps: opts.max_steps, ..RkOptions::with_tol(opts.tol) })?
            .with_groups(self.groups(y.len()));
        let mut samples = vec![self.sample(t, &y)];
        let mut halt = None;
        let mut f = |tau: f64, y: &[f64], dy: &mut [f64]| self.rhs(tau, y, dy);
        for &target in &times[1..] {
            match stepper.advance(&mut f, &mut t, &mut y, target) {
                Ok(()) => samples.push(self.sample(t, &y)),
                Err(e) => {
                    if t > samples.last().map_or(f64::NEG_INFINITY, |s| s.tau) {
                        samples.push(self.sample(t, &y));
                    }
                    let reason = match e {
                        SceError::NonFinite { .. } => SceError::NonFinite { tau: t },
                        other => other,
                    };
                    halt = Some(Halt { tau: t, reason });
                    break;
                }
            }
        }
        Ok(SceTrajectory { formulation: self.form, samples, halt, stats: stepper.stats })
    }
}

/// τ0, τ0 + dt, … with τ1 always included.
pub fn uniform_times(tau0: f64, tau1: f64, dt: f64) -> Vec<f64> {
    let n = ((tau1 - tau0) / dt - 1e-9).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..n).map(|i| tau0 + i as f64 * dt).collect();
    out.push(tau1);
    out
}

fn check_init(init: &InitialData, span: (f64, f64)) -> Result<()> {
    init.jet.validate()?;
    if !(span.1 > span.0) || !span.0.is_finite() || !span.1.is_finite() {
        return Err(SceError::InvalidArgument(format!("span must be increasing, got {span:?}")));
    }
    Ok(())
}

/// Integrate the coupled system over `span`, sampling every `opts.sample_dt`.
///
/// Invalid input is an error; a pole or blow-up met on the way ends the run
/// early and is reported in [`SceTrajectory::halt`] with the samples so far.
pub fn solve_sce(
    init: &InitialData,
    p: &PhysicsParams,
    form: Formulation,
    span: (f64, f64),
    opts: &SolveOptions,
) -> Result<SceTrajectory> {
    check_init(init, span)?;
    opts.validate()?;
    solve_sce_at(init, p, form, &uniform_times(span.0, span.1, opts.sample_dt), opts)
}

/// As [`solve_sce`], sampled at explicit increasing times starting at the initial time.
pub fn solve_sce_at(
    init: &InitialData,
    p: &PhysicsParams,
    form: Formulation,
    times: &[f64],
    opts: &SolveOptions,
) -> Result<SceTrajectory> {
    init.jet.validate()?;
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SceError::InvalidArgument("sample times must be strictly increasing".into()));
    }
    let mut engine = Engine::new(p, form)?;
    engine.blowup = opts.blowup;
    engine.run(engine.pack(init), times, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub trajectory: SceTrajectory,
    /// sup-norm distance between successive jet iterates.
    pub gaps: Vec<f64>,
}

/// Fixed-point iteration of Φ[a⃗](τ) = a⃗_init + ∫ (a′, …, a^{(k)}, f(a⃗, M[a⃗])).
///
/// Iterates live on a Chebyshev–Lobatto grid of `nodes` points; M[a⃗] and the
/// background are integrated under the interpolated potential of the current
/// iterate, and the integral is the spectral cumulative quadrature.
pub fn picard_solve(
    init: &InitialData,
    p: &PhysicsParams,
    form: Formulation,
    span: (f64, f64),
    iterations: usize,
    nodes: usize,
) -> Result<PicardResult> {
    check_init(init, span)?;
    if nodes < 3 {
        return Err(SceError::InvalidArgument("Picard grid needs at least 3 nodes".into()));
    }
    let engine = Engine::new(p, form)?;
    let k = engine.jet_len();
    let y0 = engine.pack(init);
    let grid = lobatto_grid(span.0, span.1, nodes);
    let interp = ChebInterp::new(grid.clone());
    let q = interp.cumulative_matrix();
    let jet0 = y0[..k].to_vec();
    let mut jets: Vec<Vec<f64>> = vec![jet0.clone(); nodes];
    let mut matter: Vec<Vec<f64>> = vec![y0[k..].to_vec(); nodes];
    let mut gaps = Vec::with_capacity(iterations);
    let scale = 1.0 + jet0.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    for it in 0..iterations {
        matter = evolve_matter(&engine, &jets, &interp, &y0[k..], &grid)?;
        let mut phi = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let (bg, m) = (BackgroundField::new(matter[i][0], matter[i][1]), &matter[i][2..]);
            engine.check(&jets[i]).map_err(|_| SceError::PicardDivergence { iteration: it, gap: f64::INFINITY })?;
            let top = engine.free_top(&jets[i], &bg, m)?;
            let mut d = jets[i][1..].to_vec();
            d.push(top);
            phi.push(d);
        }
        let mut next = vec![jet0.clone(); nodes];
        for i in 0..nodes {
            for (j, pj) in phi.iter().enumerate() {
                for c in 0..k {
                    next[i][c] += q[i][j] * pj[c];
                }
            }
        }
        let gap = next
            .iter()
            .zip(&jets)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
            .fold(0.0f64, f64::max);
        gaps.push(gap);
        if !gap.is_finite() || gap > 1e8 * scale {
            return Err(SceError::PicardDivergence { iteration: it, gap });
        }
        jets = next;
    }
    if iterations > 0 {
        matter = evolve_matter(&engine, &jets, &interp, &y0[k..], &grid)?;
    }
    let samples = grid
        .iter()
        .zip(jets.iter().zip(&matter))
        .map(|(t, (j, mt))| {
            let mut y = j.clone();
            y.extend_from_slice(mt);
            engine.sample(*t, &y)
        })
        .collect();
    Ok(PicardResult {
        trajectory: SceTrajectory { formulation: form, samples, halt: None, stats: RkStats::default() },
        gaps,
    })
}

/// Background field and moments under the potential of a jet iterate given on the grid.
fn evolve_matter(engine: &Engine, jets: &[Vec<f64>], interp: &ChebInterp, m0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let vs: Vec<f64> = jets
        .iter()
        .map(|j| {
            let a2 = if j.len() == 4 { j[2] } else { 0.0 };
            engine.potential(j, a2)
        })
        .collect();
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let v = interp.eval(&vs, t);
        dy[0] = y[1];
        dy[1] = -v * y[0];
        apply_generator_flat(&y[2..], v, &mut dy[2..]);
        Ok(())
    };
    let mut groups = vec![0, 0];
    groups.extend(triple_groups(m0.len() - 2, 1));
    let mut stepper = DormandPrince::new(RkOptions::with_tol(1e-12))?.with_groups(groups);
    let mut y = m0.to_vec();
    let mut t = grid[0];
    let mut out = vec![y.clone()];
    for &target in &grid[1..] {
        stepper.advance(&mut rhs, &mut t, &mut y, target)?;
        out.push(y.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub tau: f64,
    pub residual: f64,
    pub scale: f64,
    /// finite-difference dE/dτ
    pub derivative: f64,
    /// dE/dτ + 2(a′/a)E, zero when the constraint propagates exactly
    pub defect: f64,
}

impl MonitorSample {
    /// Defect relative to the size of the two terms it balances.
    pub fn relative_defect(&self) -> f64 {
        let size = self.derivative.abs() + (self.derivative - self.defect).abs();
        rel(self.defect, size)
    }
}

/// Energy residual along a trajectory and the defect of its propagation law
/// dE/dτ = −2(a′/a)E, with dE/dτ from 5-point Lagrange differentiation.
pub fn constraint_monitor(traj: &SceTrajectory) -> Vec<MonitorSample> {
    let s = &traj.samples;
    let n = s.len();
    let t: Vec<f64> = s.iter().map(|x| x.tau).collect();
    let e: Vec<f64> = s.iter().map(|x| x.diagnostics.energy_residual).collect();
    (0..n)
        .map(|i| {
            let derivative = if n >= 5 {
                let lo = i.saturating_sub(2).min(n - 5);
                lagrange_derivative(&t[lo..lo + 5], &e[lo..lo + 5], t[i])
            } else {
                f64::NAN
            };
            let h = s[i].jet.a1 / s[i].jet.a;
            MonitorSample {
                tau: t[i],
                residual: e[i],
                scale: s[i].diagnostics.energy_scale,
                derivative,
                defect: derivative + 2.0 * h * e[i],
            }
        })
        .collect()
}

/// Derivative at x of the interpolating polynomial through (xs, ys).
fn lagrange_derivative(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        // d/dx Π_{m≠j}(x − x_m)
        let mut num = 0.0;
        for l in 0..n {
            if l == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != j && m != l {
                    prod *= x - xs[m];
                }
            }
            num += prod;
        }
        total += ys[j] * num / denom;
    }
    total
}

/// Constants of the continuous-dependence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceConstants {
    /// Lipschitz constant of the back-reaction f in (jet, moments).
    pub l_f: f64,
    /// Lipschitz constant of the jet-to-moments map.
    pub l_m: f64,
    /// sup |f − f̃| between the two equations.
    pub mu_f: f64,
}

/// ‖Δa⃗_init‖e^{K(τ,τ_init)} + (μ_f + L_f L_M ‖ΔM_init‖)∫e^{K(τ,η)}dη with
/// K(τ,η) = (1+L_f)(τ−η) + ½L_f L_M (τ−η)², for elapsed time t = τ − τ_init.
pub fn dependence_bound(d_jet: f64, d_moments: f64, c: &DependenceConstants, t: f64) -> f64 {
    let k = |s: f64| (1.0 + c.l_f) * s + 0.5 * c.l_f * c.l_m * s * s;
    let integral = GaussRule::new(16).integrate(|s| k(s).exp(), 0.0, t.max(0.0), 4);
    d_jet * k(t).exp() + (c.mu_f + c.l_f * c.l_m * d_moments) * integral
}

/// Largest |a(τ) − ã(τ)| between a run at the given moment order and one with
/// `extra` more moments, on common sample times.
pub fn tail_sensitivity<F>(
    init: &InitialData,
    moments_at: F,
    extra: usize,
    p: &PhysicsParams,
    form: Formulation,
    span: (f64, f64),
    opts: &SolveOptions,
) -> Result<f64>
where
    F: Fn(usize) -> Result<MomentVector>,
{
    let n = init.moments.order();
    let lo = solve_sce(&InitialData { moments: moments_at(n)?, ..init.clone() }, p, form, span, opts)?;
    let hi = solve_sce(&InitialData { moments: moments_at(n + extra)?, ..init.clone() }, p, form, span, opts)?;
    Ok(lo
        .samples
        .iter()
        .zip(&hi.samples)
        .map(|(x, y)| (x.jet.a - y.jet.a).abs())
        .fold(0.0, f64::max))
}
