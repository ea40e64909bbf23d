//! Tow-in initial data: follow a prescribed scale factor carrying a known
//! state, switch the SCE on smoothly, and shoot on a cubic bump strength until
//! the energy constraint holds once the switch is complete.

use serde::{Deserialize, Serialize};

use super::equations::{energy_residual, BackgroundField, Formulation, PhysicsParams, ScaleFactorJet, POLE_PROXIMITY};
use super::solve::{uniform_times, Blend, Diagnostics, Engine, SceTrajectory, SolveOptions, TrajectorySample};
use crate::error::{Result, SceError};
use crate::jet::TimeJet;
use crate::kinematics::apply_generator_flat;
use crate::quadrature::GaussRule;
use crate::rk::{triple_groups, DormandPrince, RkOptions};
use crate::seqspace::{weighted_norm, MomentVector, NormSpec};

/// A prescribed scale factor with derivatives through a⁗.
pub trait ScaleProfile {
    fn derivatives(&self, tau: f64) -> [f64; 5];
}

impl<F: Fn(f64) -> [f64; 5]> ScaleProfile for F {
    fn derivatives(&self, tau: f64) -> [f64; 5] {
        self(tau)
    }
}

/// A monotone switching function χ with values in [0, 1].
pub trait SwitchFunction {
    fn chi(&self, tau: f64) -> f64;
}

impl<F: Fn(f64) -> f64> SwitchFunction for F {
    fn chi(&self, tau: f64) -> f64 {
        self(tau)
    }
}

fn flat_exp_jet(y: &TimeJet) -> TimeJet {
    // exp(−1/y) for y > 0, continued by zero
    if y.value() <= 0.0 {
        return TimeJet::constant(0.0, y.order());
    }
    (-&y.recip().expect("positive")).exp()
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1, built from exp(−1/x).
pub fn smooth_step_jet(x: &TimeJet) -> TimeJet {
    let v = x.value();
    if v <= 0.0 {
        return TimeJet::constant(0.0, x.order());
    }
    if v >= 1.0 {
        return TimeJet::constant(1.0, x.order());
    }
    let f = flat_exp_jet(x);
    let g = flat_exp_jet(&(-x).add_scalar(1.0));
    f.checked_div(&(&f + &g)).expect("nonzero denominator")
}

pub fn smooth_step(x: f64) -> f64 {
    smooth_step_jet(&TimeJet::constant(x, 0)).value()
}

/// C^∞ bump exp(1 − 1/(1 − x²)) on (−1, 1), equal to 1 at 0.
pub fn bump_jet(x: &TimeJet) -> TimeJet {
    if x.value().abs() >= 1.0 {
        return TimeJet::constant(0.0, x.order());
    }
    let one_minus = (-&(x * x)).add_scalar(1.0);
    (-&one_minus.recip().expect("inside support")).add_scalar(1.0).exp()
}

pub fn bump(x: f64) -> f64 {
    bump_jet(&TimeJet::constant(x, 0)).value()
}

/// χ(τ) = step((τ − τ_init)/(τ_free − τ_init)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSwitch {
    pub tau_init: f64,
    pub tau_free: f64,
}

impl SwitchFunction for SmoothSwitch {
    fn chi(&self, tau: f64) -> f64 {
        smooth_step((tau - self.tau_init) / (self.tau_free - self.tau_init))
    }
}

/// a(τ) = 1 + slope·(τ − τ_s)·step((τ − τ_s)/width): Minkowskian before τ_s,
/// linear expansion after τ_s + width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothRamp {
    pub tau_start: f64,
    pub width: f64,
    pub slope: f64,
}

impl ScaleProfile for SmoothRamp {
    fn derivatives(&self, tau: f64) -> [f64; 5] {
        let x = TimeJet::variable(tau, 4).add_scalar(-self.tau_start);
        let s = smooth_step_jet(&x.scale(1.0 / self.width));
        let a = (&x * &s).scale(self.slope).add_scalar(1.0);
        let d = a.derivatives();
        [d[0], d[1], d[2], d[3], d[4]]
    }
}

/// a_tow(τ) + (c/2)∫_{−∞}^{τ}(τ − η)² χ((η − τ_init)/δ) dη, which raises a‴(τ_init) by c.
pub struct ShotProfile<'a> {
    pub base: &'a dyn ScaleProfile,
    pub c: f64,
    pub delta: f64,
    pub tau_init: f64,
    rule: GaussRule,
}

impl<'a> ShotProfile<'a> {
    pub fn new(base: &'a dyn ScaleProfile, c: f64, delta: f64, tau_init: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(SceError::InvalidArgument(format!("bump width must be > 0, got {delta}")));
        }
        Ok(Self { base, c, delta, tau_init, rule: GaussRule::new(24) })
    }

    fn moments(&self, tau: f64) -> [f64; 3] {
        let lo = self.tau_init - self.delta;
        let hi = tau.min(self.tau_init + self.delta);
        if hi <= lo {
            return [0.0; 3];
        }
        let chi = |eta: f64| bump((eta - self.tau_init) / self.delta);
        let i = |k: i32| self.rule.integrate(|eta| (tau - eta).powi(k) * chi(eta), lo, hi, 8);
        [0.5 * i(2), i(1), i(0)]
    }
}

impl ScaleProfile for ShotProfile<'_> {
    fn derivatives(&self, tau: f64) -> [f64; 5] {
        let mut d = self.base.derivatives(tau);
        if self.c == 0.0 {
            return d;
        }
        let [i0, i1, i2] = self.moments(tau);
        let x = TimeJet::variable((tau - self.tau_init) / self.delta, 1);
        let b = bump_jet(&x);
        d[0] += self.c * i0;
        d[1] += self.c * i1;
        d[2] += self.c * i2;
        d[3] += self.c * b.value();
        d[4] += self.c * b.derivative(1) / self.delta;
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowInTimes {
    pub tow: f64,
    pub init: f64,
    pub free: f64,
    pub stop: f64,
}

impl TowInTimes {
    pub fn validate(&self) -> Result<()> {
        if !(self.tow <= self.init && self.init <= self.free && self.free < self.stop) {
            return Err(SceError::InvalidArgument(format!(
                "tow-in times must satisfy tow <= init <= free < stop, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowInOutcome {
    pub trajectory: SceTrajectory,
    pub init_index: usize,
    /// Sample at τ_free, if the run got that far.
    pub free_index: Option<usize>,
}

impl TowInOutcome {
    pub fn at_init(&self) -> &TrajectorySample {
        &self.trajectory.samples[self.init_index]
    }

    pub fn at_free(&self) -> Option<&TrajectorySample> {
        self.free_index.map(|i| &self.trajectory.samples[i])
    }

    /// Samples on [τ_free, τ_stop].
    pub fn free_segment(&self) -> &[TrajectorySample] {
        match self.free_index {
            Some(i) => &self.trajectory.samples[i..],
            None => &[],
        }
    }

    /// (‖a⃗(τ_free) − a⃗(τ_init)‖_∞, ‖M(τ_free) − M(τ_init)‖) for the given moment norm.
    pub fn jumps(&self, norm: &NormSpec) -> Option<(f64, f64)> {
        let f = self.at_free()?;
        let i = self.at_init();
        let jet = [f.jet.a - i.jet.a, f.jet.a1 - i.jet.a1, f.jet.a2 - i.jet.a2, f.jet.a3 - i.jet.a3]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let dm = f.moments.combine(1.0, &i.moments, -1.0);
        Some((jet, weighted_norm(&dm, norm)))
    }
}

struct TowBlend<'a> {
    profile: &'a dyn ScaleProfile,
    switch: &'a dyn SwitchFunction,
}

impl Blend for TowBlend<'_> {
    fn chi(&self, tau: f64) -> f64 {
        self.switch.chi(tau)
    }

    fn prescribed(&self, tau: f64) -> f64 {
        self.profile.derivatives(tau)[4]
    }
}

/// Follow `profile` from τ_tow to τ_init with the moments and background
/// evolved on it, then integrate a⁗ = (1−χ)a_tow⁗ + χf from τ_init to τ_stop.
#[allow(clippy::too_many_arguments)]
pub fn tow_in(
    profile: &dyn ScaleProfile,
    m_tow: &MomentVector,
    bg: BackgroundField,
    p: &PhysicsParams,
    times: TowInTimes,
    switch: &dyn SwitchFunction,
    opts: &SolveOptions,
) -> Result<TowInOutcome> {
    times.validate()?;
    opts.validate()?;
    Engine::new(p, Formulation::FourthOrder)?;
    let m = p.m();
    let eta = p.eta();
    let potential = |tau: f64| {
        let d = profile.derivatives(tau);
        eta * d[2] / d[0] + d[0] * d[0] * m * m
    };

    // towed segment: geometry prescribed exactly
    let mut samples = Vec::new();
    let mut y = vec![bg.phi, bg.pi];
    y.extend(m_tow.flat());
    let tow_times = if times.init > times.tow { uniform_times(times.tow, times.init, opts.sample_dt) } else { vec![times.tow] };
    let mut groups = vec![0, 0];
    groups.extend(triple_groups(y.len() - 2, 1));
    let mut stepper =
        DormandPrince::new(RkOptions { max_steps: opts.max_steps, ..RkOptions::with_tol(opts.tol) })?.with_groups(groups);
    let mut t = times.tow;
    let mut rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        let v = potential(tau);
        dy[0] = y[1];
        dy[1] = -v * y[0];
        apply_generator_flat(&y[2..], v, &mut dy[2..]);
        Ok(())
    };
    for &target in &tow_times {
        stepper.advance(&mut rhs, &mut t, &mut y, target)?;
        let d = profile.derivatives(t);
        let jet = ScaleFactorJet::from_array(d);
        jet.validate()?;
        let moments = MomentVector::from_flat(&y[2..])?;
        let b = BackgroundField::new(y[0], y[1]);
        let diagnostics = Diagnostics::evaluate(&jet, &moments.get(0), &moments.get(1), &b, p);
        samples.push(TrajectorySample { tau: t, jet, moments, background: b, diagnostics });
    }
    let init_index = samples.len() - 1;

    // blended segment
    let blend = TowBlend { profile, switch };
    let mut engine = Engine::new(p, Formulation::FourthOrder)?;
    engine.blowup = opts.blowup;
    engine.blend = Some(&blend);
    let d = profile.derivatives(times.init);
    let mut y0 = vec![d[0], d[1], d[2], d[3]];
    y0.extend_from_slice(&y);
    let mut run_times =
        if times.free > times.init { uniform_times(times.init, times.free, opts.sample_dt) } else { vec![times.init] };
    run_times.extend(uniform_times(times.free, times.stop, opts.sample_dt).into_iter().skip(1));
    let run = engine.run(y0, &run_times, opts)?;
    samples.extend(run.samples.into_iter().skip(1));
    let free_index = (init_index..samples.len()).find(|&i| samples[i].tau == times.free);
    Ok(TowInOutcome {
        trajectory: SceTrajectory { formulation: Formulation::FourthOrder, samples, halt: run.halt, stats: run.stats },
        init_index,
        free_index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub c0: f64,
    /// Energy residual and its scale at τ_free for c₀.
    pub residual: f64,
    pub scale: f64,
    pub steps: usize,
    pub outcome: TowInOutcome,
}

/// Everything a shot needs besides the bump strength.
pub struct ShootSetup<'a> {
    pub base: &'a dyn ScaleProfile,
    pub moments: &'a MomentVector,
    pub background: BackgroundField,
    pub params: PhysicsParams,
    pub times: TowInTimes,
    pub delta: f64,
    pub opts: SolveOptions,
}

impl ShootSetup<'_> {
    pub fn run(&self, c: f64) -> Result<TowInOutcome> {
        let profile = ShotProfile::new(self.base, c, self.delta, self.times.init)?;
        let switch = SmoothSwitch { tau_init: self.times.init, tau_free: self.times.free };
        tow_in(&profile, self.moments, self.background, &self.params, self.times, &switch, &self.opts)
    }

    /// Energy residual (value, scale) at τ_free for bump strength c.
    pub fn constraint(&self, c: f64) -> Result<(f64, f64, TowInOutcome)> {
        let out = self.run(c)?;
        let s = match out.at_free() {
            Some(s) => s,
            None => {
                return Err(out.trajectory.halt.map(|h| h.reason).unwrap_or_else(|| SceError::Halted("no sample at tau_free".into())))
            }
        };
        if s.jet.a1.abs() < POLE_PROXIMITY {
            return Err(SceError::EnergyPole { a1: s.jet.a1 });
        }
        let e = energy_residual(&s.jet, &s.moments.get(0), &s.moments.get(1), &s.background, &self.params)?;
        Ok((e.value, e.scale, out))
    }
}

/// Bisection on the bump strength c until the energy residual at τ_free
/// vanishes to `rel_tol`·scale (at most `max_steps` halvings).
pub fn shoot_energy_constraint(setup: &ShootSetup, c_range: (f64, f64), rel_tol: f64, max_steps: usize) -> Result<ShootResult> {
    let (mut lo, mut hi) = c_range;
    if !(hi > lo) {
        return Err(SceError::InvalidArgument(format!("empty bump-strength range {c_range:?}")));
    }
    let (g_lo, s_lo, out_lo) = setup.constraint(lo)?;
    let (g_hi, s_hi, out_hi) = setup.constraint(hi)?;
    if g_lo.abs() <= rel_tol * s_lo {
        return Ok(ShootResult { c0: lo, residual: g_lo, scale: s_lo, steps: 0, outcome: out_lo });
    }
    if g_hi.abs() <= rel_tol * s_hi {
        return Ok(ShootResult { c0: hi, residual: g_hi, scale: s_hi, steps: 0, outcome: out_hi });
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(SceError::NoSignChange { lo, hi, g_lo, g_hi });
    }
    let sign_lo = g_lo.signum();
    let mut best = None;
    for step in 1..=max_steps {
        let mid = 0.5 * (lo + hi);
        let (g, s, out) = setup.constraint(mid)?;
        let done = g.abs() <= rel_tol * s || step == max_steps || mid == lo || mid == hi;
        if done {
            best = Some(ShootResult { c0: mid, residual: g, scale: s, steps: step, outcome: out });
            break;
        }
        if g.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.expect("loop runs at least once"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{vacuum_moments, CouplingParams};
    use crate::sce::equations::calibrate_c1;
    use crate::seqspace::WeightSpec;

    fn setup_params(vac: &MomentVector) -> PhysicsParams {
        let mut p =
            PhysicsParams::new(CouplingParams::new(1.0, 0.0).unwrap(), 1.0, [0.0, 0.0, -1.0 / 3.0, 0.0], 1.0).unwrap();
        p.c1 = calibrate_c1(vac.get(0)[2], 1.0, 1.0).unwrap();
        p
    }

    #[test]
    fn step_and_bump_shapes() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        // derivatives of the step against finite differences
        let x = 0.3;
        let j = smooth_step_jet(&TimeJet::variable(x, 2));
        let h = 1e-5;
        let fd = (smooth_step(x + h) - smooth_step(x - h)) / (2.0 * h);
        assert!((j.derivative(1) - fd).abs() < 1e-8);
    }

    #[test]
    fn ramp_is_minkowskian_then_linear() {
        let r = SmoothRamp { tau_start: 1.0, width: 0.5, slope: 0.2 };
        assert_eq!(r.derivatives(0.5), [1.0, 0.0, 0.0, 0.0, 0.0]);
        let d = r.derivatives(2.0);
        assert!((d[0] - 1.2).abs() < 1e-15 && (d[1] - 0.2).abs() < 1e-15 && d[2].abs() < 1e-15);
    }

    #[test]
    fn shot_profile_derivatives_are_consistent() {
        let base = SmoothRamp { tau_start: 0.0, width: 1.0, slope: 0.3 };
        let s = ShotProfile::new(&base, 2.0, 0.1, 1.0).unwrap();
        let d = s.derivatives(1.0);
        assert!((d[3] - base.derivatives(1.0)[3] - 2.0).abs() < 1e-14);
        let h = 1e-5;
        for tau in [0.95, 1.0, 1.04] {
            let (lo, hi) = (s.derivatives(tau - h), s.derivatives(tau + h));
            let d = s.derivatives(tau);
            for k in 0..4 {
                let fd = (hi[k] - lo[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 2e-5 * (1.0 + d[k + 1].abs()), "k={k} tau={tau} fd={fd} d={}", d[k + 1]);
            }
        }
        let far = s.derivatives(0.5);
        assert_eq!(far, base.derivatives(0.5));
    }

    #[test]
    fn switch_off_follows_the_profile() {
        let vac = vacuum_moments(1.0, 1.0, 10).unwrap();
        let p = setup_params(&vac);
        let ramp = SmoothRamp { tau_start: 0.2, width: 0.5, slope: 0.1 };
        let times = TowInTimes { tow: 0.0, init: 0.5, free: 0.8, stop: 1.0 };
        let off = |_t: f64| 0.0;
        let out = tow_in(&ramp, &vac, BackgroundField::default(), &p, times, &off, &SolveOptions::default()).unwrap();
        for s in &out.trajectory.samples {
            let d = ramp.derivatives(s.tau);
            assert!((s.jet.a - d[0]).abs() < 1e-9 && (s.jet.a3 - d[3]).abs() < 1e-8, "tau {}", s.tau);
        }
        assert_eq!(out.at_free().unwrap().tau, 0.8);
    }

    #[test]
    fn free_segment_solves_the_trace_equation() {
        let vac = vacuum_moments(1.0, 1.0, 12).unwrap();
        let p = setup_params(&vac);
        let ramp = SmoothRamp { tau_start: 0.2, width: 0.5, slope: 0.2 };
        let times = TowInTimes { tow: 0.0, init: 0.8, free: 0.85, stop: 1.2 };
        let sw = SmoothSwitch { tau_init: times.init, tau_free: times.free };
        let out = tow_in(&ramp, &vac, BackgroundField::default(), &p, times, &sw, &SolveOptions::default()).unwrap();
        assert!(out.trajectory.completed());
        for s in out.free_segment() {
            assert!(s.diagnostics.trace_relative() < 1e-8);
        }
        let (dj, dm) = out.jumps(&NormSpec::sup(WeightSpec::geometric(1.0, 1.0).unwrap())).unwrap();
        assert!(dj < 0.05 && dm < 0.05, "{dj} {dm}");
    }

    #[test]
    fn shooting_satisfies_the_energy_constraint() {
        let vac = vacuum_moments(1.0, 1.0, 10).unwrap();
        let p = setup_params(&vac);
        let ramp = SmoothRamp { tau_start: 0.2, width: 0.5, slope: 0.2 };
        let times = TowInTimes { tow: 0.0, init: 0.8, free: 0.85, stop: 0.95 };
        let opts = SolveOptions { tol: 1e-12, ..Default::default() };
        let setup =
            ShootSetup { base: &ramp, moments: &vac, background: BackgroundField::default(), params: p, times, delta: 0.02, opts };
        let r = shoot_energy_constraint(&setup, (-10.0, 10.0), 1e-10, 60).unwrap();
        assert!(r.residual.abs() <= 1e-10 * r.scale);
        assert!(r.steps <= 60);
        for s in r.outcome.free_segment() {
            assert!(s.diagnostics.energy_relative() < 1e-8, "{}", s.tau);
        }
        let err = shoot_energy_constraint(&setup, (1.0, 10.0), 1e-10, 60).unwrap_err();
        assert!(matches!(err, SceError::NoSignChange { .. }));
    }
}
