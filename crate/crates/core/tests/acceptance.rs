//! The twelve acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails on any FAIL that is not the documented thermal Minkowski case.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sce_core::jet::TimeJet;
use sce_core::kinematics::{
    apply_generator, hadamard_coeffs, massive_thermal_moments, max_b_factors, minkowski_coeffs, purity_residual,
    thermal_moments, vacuum_moments, word_product, CouplingParams, MomentConvention,
};
use sce_core::mode_oracle::{evolve_modes, j_invariant, log_simpson_grid, oracle_compare, BumpSpec, ModeField};
use sce_core::propagator::{
    evolve_dyson, evolve_rk, factorial_bound, geometric_bound, perturbation_gap, Potential,
};
use sce_core::sce::{
    calibrate_c1, consistent_conformal_jet, constraint_monitor, energy_residual, picard_solve, shoot_energy_constraint,
    solve_energy_for_a3, solve_sce, solve_sce_at, trace_equation, trace_from_components, trace_rhs, BackgroundField,
    Formulation, InitialData, PhysicsParams, ScaleFactorJet, ShootSetup, SmoothRamp, SolveOptions, TowInTimes,
};
use sce_core::seqspace::{weighted_norm, MomentVector, NormSpec, WeightSpec};

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure predicted by analysis (see the README); does not fail the suite.
    expected_failure: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, expected_failure: false }
    }
}

fn sup(omega: f64) -> NormSpec {
    NormSpec::sup(WeightSpec::geometric(1.0, omega).unwrap())
}

fn default_params(m0: &MomentVector) -> PhysicsParams {
    let mut p = PhysicsParams::new(CouplingParams::new(1.0, 0.0).unwrap(), 1.0, [0.0, 0.0, -1.0 / 3.0, 0.0], 1.0).unwrap();
    p.c1 = calibrate_c1(m0.get(0)[2], 1.0, 1.0).unwrap();
    p
}

fn stationarity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut check = |m: &MomentVector, v: f64| {
        let s = apply_generator(m, v);
        for n in 0..m.order() {
            let scale = (0..3)
                .map(|i| m.get(n)[i].abs().max(m.get(n + 1)[i].abs()))
                .fold(0.0, f64::max)
                * v.abs().max(1.0);
            let r = (0..3).map(|i| s.get(n)[i].abs()).fold(0.0, f64::max) / scale;
            worst = worst.max(r);
        }
    };
    check(&vacuum_moments(1.0, 1.0, 16).unwrap(), 1.0);
    check(&thermal_moments(1.0, 16, MomentConvention::PositionSpace).unwrap(), 0.0);
    Outcome::new(worst < 1e-12, format!("max relative |S M|_n over n < 16: {worst:.2e}"))
}

fn closed_form_coefficients() -> Outcome {
    let m2: f64 = 1.0;
    let v = TimeJet::constant(m2, 26);
    let c = hadamard_coeffs(&v, 13).unwrap();
    let mut coeff: f64 = 0.0;
    for j in 0..=12 {
        let (alpha, gamma) = minkowski_coeffs(m2, j);
        coeff = coeff.max((c.alpha[j].value() - alpha).abs() / alpha.abs());
        if j >= 1 {
            coeff = coeff.max((c.gamma_at(j as isize - 1).value() - gamma).abs() / gamma.abs());
        }
        coeff = coeff.max(c.beta[j].taylor().iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    let mut purity: f64 = 0.0;
    for j in 0..=11 {
        let r = purity_residual(&c, j).unwrap();
        purity = purity.max(r.taylor().iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    Outcome::new(
        coeff < 1e-12 && purity < 1e-12,
        format!("coefficient mismatch {coeff:.2e} (j <= 12), purity residual {purity:.2e} (j <= 11)"),
    )
}

fn word_combinatorics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut ok = true;
    let mut words = 0usize;
    for n in 1..=9 {
        // distinct potentials, one per slot
        let vs: Vec<f64> = (0..n).map(|i| rng.gen_range(0.5..2.0) + i as f64).collect();
        let cap = max_b_factors(n);
        let mut cap_hit = false;
        for mask in 0u32..(1 << n) {
            let word: Vec<Option<f64>> =
                (0..n).map(|i| if mask >> i & 1 == 1 { None } else { Some(vs[i]) }).collect();
            let bs = mask.count_ones() as usize;
            let p = word_product(&word);
            let zero = p.iter().flatten().all(|x| *x == 0.0);
            words += 1;
            if bs > cap && !zero {
                ok = false;
            }
            if bs == cap && !zero {
                cap_hit = true;
            }
        }
        ok &= cap_hit;
    }
    Outcome::new(ok, format!("{words} words, n <= 9: zero beyond the cap, cap attained for every n"))
}

fn propagator_equivalence() -> Outcome {
    let v = Potential::Sinusoid { base: 1.0, amplitude: 0.3, frequency: 1.0, phase: 0.0 };
    let m = vacuum_moments(1.0, 1.0, 12)
        .unwrap()
        .combine(1.0, &MomentVector::new(vec![[0.01, 0.02, -0.01]; 13]).unwrap(), 1.0);
    let norm = sup(2.0);
    let rk = evolve_rk(&m, &v, 0.0, 0.5, 1e-12).unwrap();
    let dy = evolve_dyson(&m, &v, 0.0, 0.5, 40, 24).unwrap();
    let gap = weighted_norm(&rk.combine(1.0, &dy, -1.0), &norm);
    // identity at zero span
    let e1 = weighted_norm(&evolve_dyson(&m, &v, 0.5, 0.5, 40, 24).unwrap().combine(1.0, &m, -1.0), &norm)
        .max(weighted_norm(&evolve_rk(&m, &v, 0.5, 0.5, 1e-12).unwrap().combine(1.0, &m, -1.0), &norm));
    // composition over a split interval, and reversal
    let mid = evolve_rk(&m, &v, 0.0, 0.2, 1e-12).unwrap();
    let two = evolve_rk(&mid, &v, 0.2, 0.5, 1e-12).unwrap();
    let mid_d = evolve_dyson(&m, &v, 0.0, 0.2, 40, 24).unwrap();
    let two_d = evolve_dyson(&mid_d, &v, 0.2, 0.5, 40, 24).unwrap();
    let back = evolve_dyson(&dy, &v, 0.5, 0.0, 40, 24).unwrap();
    let e2 = weighted_norm(&two.combine(1.0, &rk, -1.0), &norm)
        .max(weighted_norm(&two_d.combine(1.0, &dy, -1.0), &norm))
        .max(weighted_norm(&back.combine(1.0, &m, -1.0), &norm));
    Outcome::new(
        gap < 1e-8 && e1 < 1e-8 && e2 < 1e-8,
        format!("Dyson vs RK {gap:.2e}, identity {e1:.2e}, composition/reversal {e2:.2e}"),
    )
}

fn norm_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..100 {
        let omega: f64 = rng.gen_range(0.5..3.0);
        let spec = sup(omega);
        let entries = (0..=12)
            .map(|n| {
                let w = omega.powi(n);
                [rng.gen_range(-1.0..1.0) / w, rng.gen_range(-1.0..1.0) / w, rng.gen_range(-1.0..1.0) / w]
            })
            .collect();
        let m = MomentVector::new(entries).unwrap();
        let v = Potential::Sinusoid {
            base: rng.gen_range(-2.0..2.0),
            amplitude: rng.gen_range(0.0..1.0),
            frequency: rng.gen_range(0.5..3.0),
            phase: rng.gen_range(0.0..6.0),
        };
        let t1 = rng.gen_range(0.05..1.0);
        let um = evolve_rk(&m, &v, 0.0, t1, 1e-12).unwrap();
        let bound = geometric_bound(&v, omega, 0.0, t1).unwrap().bound;
        if weighted_norm(&um, &spec) > bound * weighted_norm(&m, &spec) {
            violations += 1;
        }
    }
    // the factorial estimate is flagged valid exactly when C0·K < 1
    let mut flag_errors = 0;
    for _ in 0..100 {
        let omega = rng.gen_range(0.1..2.0);
        let upsilon = omega * rng.gen_range(1.1..4.0);
        let v = Potential::Constant { value: rng.gen_range(-2.0..2.0) };
        let t1 = rng.gen_range(0.001..0.5);
        let r = factorial_bound(&v, omega, upsilon, 0.0, t1).unwrap();
        let c0 = 2.0 * (1.0 + v_value(&v).powi(2)).sqrt() * t1;
        let k = 2.0 * upsilon * omega / (upsilon - omega);
        let x = c0 * k;
        let want = if x < 1.0 {
            c0.exp() + c0 * k.powi(3) / (2.0 * PI) * (upsilon / omega).sqrt() * (3.0 - 2.0 * x) / (1.0 - x).powi(2)
        } else {
            f64::INFINITY
        };
        let same = if want.is_finite() { (r.bound - want).abs() <= 1e-10 * want } else { r.bound.is_infinite() };
        if r.valid != (x < 1.0) || !same || (r.c_omega - c0).abs() > 1e-12 * c0 {
            flag_errors += 1;
        }
    }
    let mut gap_violations = 0;
    for _ in 0..100 {
        let omega: f64 = rng.gen_range(0.5..2.0);
        let base = vacuum_moments(1.0, 1.0, 10).unwrap();
        let pert: Vec<[f64; 3]> = (0..=10)
            .map(|n| {
                let w = omega.powi(n) * 50.0;
                [rng.gen_range(-1.0..1.0) / w, rng.gen_range(-1.0..1.0) / w, rng.gen_range(-1.0..1.0) / w]
            })
            .collect();
        let mt = base.combine(1.0, &MomentVector::new(pert).unwrap(), 1.0);
        let v = Potential::Sinusoid { base: 1.0, amplitude: rng.gen_range(0.0..0.5), frequency: 1.0, phase: 0.0 };
        let vt = Potential::Sinusoid { base: 1.0 + rng.gen_range(-0.1..0.1), amplitude: 0.2, frequency: 2.0, phase: 0.3 };
        let t1 = rng.gen_range(0.05..0.5);
        let (lhs, rhs) = perturbation_gap(&base, &mt, &v, &vt, omega, 0.0, t1).unwrap();
        if lhs > rhs {
            gap_violations += 1;
        }
    }
    Outcome::new(
        violations == 0 && flag_errors == 0 && gap_violations == 0,
        format!(
            "geometric bound violations {violations}/100, factorial flag errors {flag_errors}/100, perturbation violations {gap_violations}/100"
        ),
    )
}

fn v_value(v: &Potential) -> f64 {
    match *v {
        Potential::Constant { value } => value,
        _ => unreachable!(),
    }
}

fn mode_oracle() -> Outcome {
    let (k, w) = log_simpson_grid(0.05, 20.0, 201).unwrap();
    let v = Potential::Sinusoid { base: 1.0, amplitude: 0.3, frequency: 1.0, phase: 0.0 };
    let mut drift: f64 = 0.0;
    for field in [ModeField::vacuum(k.clone(), w.clone(), 1.0).unwrap(), ModeField::thermal(k, w, 1.0).unwrap()] {
        let j0 = j_invariant(&field);
        let j1 = j_invariant(&evolve_modes(&field, &v, 0.0, 1.0, 1e-13).unwrap());
        for (a, b) in j0.iter().zip(&j1) {
            drift = drift.max((a - b).abs() / a.abs());
        }
    }
    let mut b = BumpSpec::new(1.0, 0.5, [1.0, 0.2, -0.5]);
    b.nodes = 257;
    let constant = oracle_compare(&b, &Potential::Constant { value: 1.0 }, 0.0, 0.5, 12, 1e-12).unwrap();
    let varying = oracle_compare(&b, &v, 0.0, 0.5, 12, 1e-12).unwrap();
    let gap = constant.max_abs_gap.max(varying.max_abs_gap);
    Outcome::new(
        drift < 1e-10 && gap < 1e-6,
        format!("J drift {drift:.2e}; oracle gap {gap:.2e} on n <= {}", constant.retained.min(varying.retained)),
    )
}

fn minkowski_fixed_point() -> Outcome {
    let static_jet = ScaleFactorJet::minkowski();
    let bg = BackgroundField::default();
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    struct Run {
        ok: bool,
        trace: f64,
        energy: f64,
        drift: f64,
        /// |a − 1| up to τ = 0.3, before the hierarchy cut reaches n = 0
        early: f64,
        halt: Option<String>,
        p: PhysicsParams,
    }
    let run = |m: &MomentVector| {
        let p = default_params(m);
        let (m0, m1) = (m.get(0), m.get(1));
        let trace = trace_from_components(&static_jet, &m0, &m1, &bg, &p).unwrap();
        let energy = energy_residual(&static_jet, &m0, &m1, &bg, &p).unwrap().value;
        let init = InitialData::new(ScaleFactorJet::new(1.0, 0.0, 0.0, 0.0), m.clone(), bg);
        let traj = solve_sce(&init, &p, Formulation::FourthOrder, (0.0, 1.0), &opts).unwrap();
        let dev = |s: &&sce_core::sce::TrajectorySample| (s.jet.a - 1.0).abs();
        let drift = traj.samples.iter().map(|s| dev(&s)).fold(0.0, f64::max);
        let early = traj.samples.iter().filter(|s| s.tau <= 0.3 + 1e-12).map(|s| dev(&s)).fold(0.0, f64::max);
        let ok = trace.abs() < 1e-12 && energy.abs() < 1e-12 && drift < 1e-8 && traj.completed();
        let halt = traj.halt.as_ref().map(|h| format!("{} at tau {:.3}", h.reason, h.tau));
        Run { ok, trace, energy, drift, early, halt, p }
    };
    let vac = run(&vacuum_moments(1.0, 1.0, 12).unwrap());
    let th_m = massive_thermal_moments(1.0, 1.0, 1.0, 12).unwrap();
    let th = run(&th_m);
    // with c1 calibrated on the energy, the static trace is −κ(4Mππ0 − m²Mφφ0 + m⁴/32π²),
    // which vanishes only for a Lorentz-invariant state
    let m0 = th_m.get(0);
    let predicted = -th.p.kappa * (4.0 * m0[2] - m0[0] + 1.0 / (32.0 * PI * PI));
    let matches = (th.trace - predicted).abs() < 1e-10 * predicted.abs() && th.energy.abs() < 1e-12 && th.early > 1e-8;
    let detail = format!(
        "vacuum: trace {:.2e} energy {:.2e} |a-1| {:.2e}; thermal: trace {:.4e} (predicted {predicted:.4e}) energy {:.2e} |a-1| {:.2e} by tau 0.3, {:.2e} overall{}",
        vac.trace,
        vac.energy,
        vac.drift,
        th.trace,
        th.energy,
        th.early,
        th.drift,
        th.halt.map(|h| format!(" ({h})")).unwrap_or_default(),
    );
    Outcome { pass: vac.ok && th.ok, detail, expected_failure: vac.ok && !th.ok && matches }
}

fn formulation_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let jet = ScaleFactorJet::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let mut r3 = || [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)];
        let (m0, m1) = (r3(), r3());
        let bg = BackgroundField::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let p = PhysicsParams::new(
            CouplingParams::new(rng.gen_range(0.0..2.0), rng.gen_range(-0.3..0.5)).unwrap(),
            rng.gen_range(0.2..3.0),
            [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..-0.1), rng.gen_range(-0.1..0.1)],
            rng.gen_range(0.3..3.0),
        )
        .unwrap();
        let full = jet.with_a4(trace_rhs(&jet, &m0, &m1, &bg, &p).unwrap());
        let scale = p.kappa * trace_equation(&full, &m0, &m1, &bg, &p).unwrap().scale;
        let r = trace_from_components(&full, &m0, &m1, &bg, &p).unwrap();
        worst = worst.max(r.abs() / scale);
    }
    Outcome::new(worst < 1e-10, format!("max relative residual over 50 cases {worst:.2e}"))
}

fn conformal_reduction() -> Outcome {
    let vac = vacuum_moments(1.0, 1.0, 12).unwrap();
    let c1 = calibrate_c1(vac.get(0)[2], 1.0, 1.0).unwrap();
    let p = PhysicsParams::conformal(1.0, 1.0, c1, 0.0, 1.0).unwrap();
    let bg = BackgroundField::default();
    let jet = consistent_conformal_jet(1.0, 0.1, &vac.get(0), &vac.get(1), &bg, &p).unwrap();
    let init = InitialData::new(jet, vac, bg);
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    let fourth = solve_sce(&init, &p, Formulation::FourthOrder, (0.0, 0.5), &opts).unwrap();
    let second = solve_sce(&init, &p, Formulation::ConformalSecondOrder, (0.0, 0.5), &opts).unwrap();
    let gap = fourth
        .samples
        .iter()
        .zip(&second.samples)
        .map(|(x, y)| (x.jet.a - y.jet.a).abs().max((x.jet.a1 - y.jet.a1).abs()))
        .fold(0.0, f64::max);
    let ok = fourth.completed() && second.completed() && fourth.samples.len() == second.samples.len();
    Outcome::new(ok && gap < 1e-6, format!("max |Δa|, |Δa'| over Δτ = 0.5: {gap:.2e}"))
}

fn constraint_propagation() -> Outcome {
    let vac = vacuum_moments(1.0, 1.0, 12).unwrap();
    let p = default_params(&vac);
    let bg = BackgroundField::default();
    let mut jet = ScaleFactorJet::new(1.0, 0.2, 0.0, 0.0);
    jet.a3 = solve_energy_for_a3(&jet, &vac.get(0), &vac.get(1), &bg, &p).unwrap();
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    let good = solve_sce(&InitialData::new(jet, vac.clone(), bg), &p, Formulation::FourthOrder, (0.0, 1.0), &opts).unwrap();
    let held = good.max_energy_relative();
    let mut wrong = jet;
    wrong.a3 += 0.05;
    let bad = solve_sce(&InitialData::new(wrong, vac, bg), &p, Formulation::FourthOrder, (0.0, 1.0), &opts).unwrap();
    let defect = constraint_monitor(&bad).iter().map(|m| m.relative_defect()).fold(0.0, f64::max);
    let ok = good.completed() && bad.completed() && held < 1e-8 && defect < 1e-6;
    Outcome::new(ok, format!("constrained run energy residual {held:.2e}·scale; propagation defect {defect:.2e}"))
}

fn tow_in_shooting() -> Outcome {
    let vac = vacuum_moments(1.0, 1.0, 12).unwrap();
    let p = default_params(&vac);
    let ramp = SmoothRamp { tau_start: 0.2, width: 0.5, slope: 0.2 };
    let times = TowInTimes { tow: 0.0, init: 0.8, free: 0.82, stop: 1.5 };
    let epsilon = 0.05;
    let setup = ShootSetup {
        base: &ramp,
        moments: &vac,
        background: BackgroundField::default(),
        params: p,
        times,
        delta: 0.2,
        opts: SolveOptions { tol: 1e-12, ..Default::default() },
    };
    let r = match shoot_energy_constraint(&setup, (-10.0, 10.0), 1e-10, 60) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("shooting failed: {e}")),
    };
    let seg = r.outcome.free_segment();
    let trace = seg.iter().map(|s| s.diagnostics.trace_relative()).fold(0.0, f64::max);
    let energy = seg.iter().map(|s| s.diagnostics.energy_relative()).fold(0.0, f64::max);
    let (dj, dm) = r.outcome.jumps(&sup(1.0)).unwrap();
    let ok = r.outcome.trajectory.completed() && trace < 1e-8 && energy < 1e-6 && dj < epsilon && dm < epsilon;
    Outcome::new(
        ok,
        format!(
            "c0 = {:.6} after {} steps; trace {trace:.2e}, energy {energy:.2e}·scale; jumps {dj:.2e}, {dm:.2e} (eps {epsilon})",
            r.c0, r.steps
        ),
    )
}

fn picard_validation() -> Outcome {
    let vac = vacuum_moments(1.0, 1.0, 12).unwrap();
    let p = default_params(&vac);
    let bg = BackgroundField::new(0.05, 0.02);
    let mut jet = ScaleFactorJet::new(1.0, 0.3, 0.1, 0.0);
    jet.a3 = solve_energy_for_a3(&jet, &vac.get(0), &vac.get(1), &bg, &p).unwrap();
    let init = InitialData::new(jet, vac, bg);
    let r = picard_solve(&init, &p, Formulation::FourthOrder, (0.0, 0.25), 20, 20).unwrap();
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    let reference = solve_sce_at(&init, &p, Formulation::FourthOrder, &r.trajectory.times(), &opts).unwrap();
    let gap = r
        .trajectory
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(x, y)| {
            [x.jet.a - y.jet.a, x.jet.a1 - y.jet.a1, x.jet.a2 - y.jet.a2, x.jet.a3 - y.jet.a3]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()))
        })
        .fold(0.0, f64::max);
    // geometric decay: successive gaps shrink by a ratio below 1 until the floor
    let g = &r.gaps;
    let ratios: Vec<f64> = g.windows(2).filter(|w| w[0] > 1e-12).map(|w| w[1] / w[0]).collect();
    let geometric = !ratios.is_empty() && ratios.iter().all(|q| *q < 0.9);
    Outcome::new(
        gap < 1e-6 && geometric,
        format!(
            "sup-gap to solver {gap:.2e} after {} iterations; worst contraction ratio {:.2}",
            g.len(),
            ratios.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("stationarity", stationarity),
        ("closed-form coefficients", closed_form_coefficients),
        ("word-count combinatorics", word_combinatorics),
        ("propagator equivalence", propagator_equivalence),
        ("norm bounds", norm_bounds),
        ("mode oracle", mode_oracle),
        ("Minkowski fixed point", minkowski_fixed_point),
        ("formulation equivalence", formulation_equivalence),
        ("conformal reduction", conformal_reduction),
        ("constraint propagation", constraint_propagation),
        ("tow-in and shooting", tow_in_shooting),
        ("Picard validation", picard_validation),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && o.expected_failure { " [known]" } else { "" };
        println!("{tag} {:>2} {name}{note}: {} ({secs:.2} s)", i + 1, o.detail);
        if !o.pass && !o.expected_failure {
            unexpected.push(i + 1);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
