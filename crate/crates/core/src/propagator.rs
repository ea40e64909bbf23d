//! Evolution of moment vectors under M′ = S(τ)M and the associated norm bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};
use crate::kinematics::apply_generator_flat;
use crate::quadrature::{lobatto_grid, ChebInterp, GaussRule};
use crate::rk::{triple_groups, DormandPrince, RkOptions};
use crate::seqspace::{weighted_norm, MomentVector, NormSpec, WeightSpec};

pub const DEFAULT_TOL: f64 = 1e-10;

/// τ ↦ V(τ), assumed continuous on the interval it is evaluated on.
pub trait PotentialTrajectory {
    fn value(&self, tau: f64) -> f64;
}

impl<F: Fn(f64) -> f64> PotentialTrajectory for F {
    fn value(&self, tau: f64) -> f64 {
        self(tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Constant { value: f64 },
    /// base + amplitude·sin(frequency·τ + phase)
    Sinusoid { base: f64, amplitude: f64, frequency: f64, phase: f64 },
}

impl PotentialTrajectory for Potential {
    fn value(&self, tau: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Sinusoid { base, amplitude, frequency, phase } => base + amplitude * (frequency * tau + phase).sin(),
        }
    }
}

/// Integrate the truncated moment system with adaptive Dormand–Prince.
pub fn evolve_rk<P: PotentialTrajectory + ?Sized>(
    m0: &MomentVector,
    v: &P,
    tau0: f64,
    tau1: f64,
    tol: f64,
) -> Result<MomentVector> {
    evolve_rk_with(m0, v, tau0, tau1, RkOptions::with_tol(tol))
}

pub fn evolve_rk_with<P: PotentialTrajectory + ?Sized>(
    m0: &MomentVector,
    v: &P,
    tau0: f64,
    tau1: f64,
    opts: RkOptions,
) -> Result<MomentVector> {
    let mut y = m0.flat();
    let mut t = tau0;
    let mut rhs = |t: f64, m: &[f64], dm: &mut [f64]| {
        let vt = v.value(t);
        if !vt.is_finite() {
            return Err(SceError::NonFinite { tau: t });
        }
        apply_generator_flat(m, vt, dm);
        Ok(())
    };
    let groups = triple_groups(y.len(), 0).collect();
    DormandPrince::new(opts)?.with_groups(groups).advance(&mut rhs, &mut t, &mut y, tau1)?;
    MomentVector::from_flat(&y)
}

/// Sample an evolution at the given (monotone) times, one integrator for the whole run.
pub fn evolve_rk_samples<P: PotentialTrajectory + ?Sized>(
    m0: &MomentVector,
    v: &P,
    tau0: f64,
    times: &[f64],
    tol: f64,
) -> Result<Vec<MomentVector>> {
    let mut y = m0.flat();
    let mut t = tau0;
    let mut rhs = |t: f64, m: &[f64], dm: &mut [f64]| {
        apply_generator_flat(m, v.value(t), dm);
        Ok(())
    };
    let groups = triple_groups(y.len(), 0).collect();
    let mut stepper = DormandPrince::new(RkOptions::with_tol(tol))?.with_groups(groups);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        stepper.advance(&mut rhs, &mut t, &mut y, target)?;
        out.push(MomentVector::from_flat(&y)?);
    }
    Ok(out)
}

/// Partial Dyson sum Σ_{n ≤ terms} U_n(τ1, τ0)M0.
///
/// The iterated integrals are Picard iterates on a Chebyshev–Lobatto grid of
/// `quad_nodes` points with spectral cumulative integration. For τ1 < τ0 the
/// integrals are signed, which is the backward evolution (inverse of the
/// forward one).
pub fn evolve_dyson<P: PotentialTrajectory + ?Sized>(
    m0: &MomentVector,
    v: &P,
    tau0: f64,
    tau1: f64,
    terms: usize,
    quad_nodes: usize,
) -> Result<MomentVector> {
    if terms < 1 || quad_nodes < 2 {
        return Err(SceError::InvalidArgument(format!(
            "Dyson series needs terms >= 1 and quad_nodes >= 2 (got {terms}, {quad_nodes})"
        )));
    }
    if tau0 == tau1 {
        return Ok(m0.clone());
    }
    let nodes = lobatto_grid(tau0, tau1, quad_nodes);
    let vs: Vec<f64> = nodes.iter().map(|t| v.value(*t)).collect();
    let q = ChebInterp::new(nodes).cumulative_matrix();
    let base = m0.flat();
    let dim = base.len();
    let mut term: Vec<Vec<f64>> = vec![base.clone(); quad_nodes];
    let mut total = base;
    let mut s = vec![vec![0.0; dim]; quad_nodes];
    for _ in 0..terms {
        for j in 0..quad_nodes {
            apply_generator_flat(&term[j], vs[j], &mut s[j]);
        }
        for (i, row) in q.iter().enumerate() {
            let out = &mut term[i];
            out.iter_mut().for_each(|x| *x = 0.0);
            for (qij, sj) in row.iter().zip(&s) {
                if *qij != 0.0 {
                    for (o, x) in out.iter_mut().zip(sj) {
                        *o += qij * x;
                    }
                }
            }
        }
        for (t, x) in total.iter_mut().zip(&term[quad_nodes - 1]) {
            *t += x;
        }
    }
    MomentVector::from_flat(&total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRegime {
    Geometric,
    Factorial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// C_ω for the geometric regime, C_0 for the factorial one.
    pub c_omega: f64,
    /// K(υ, ω) = 2υω/(υ−ω); only defined in the factorial regime.
    pub k: Option<f64>,
    /// Factor multiplying the input norm; +∞ when the estimate does not apply.
    pub bound: f64,
    pub regime: BoundRegime,
    pub valid: bool,
}

fn panels(span: f64, per_unit: f64) -> usize {
    ((span.abs() * per_unit).ceil() as usize).clamp(4, 100_000)
}

/// |∫_{τ0}^{τ1} √(1+V²) dτ|
pub fn generator_integral<P: PotentialTrajectory + ?Sized>(v: &P, tau0: f64, tau1: f64) -> f64 {
    GaussRule::new(10)
        .integrate(|t| (1.0 + v.value(t).powi(2)).sqrt(), tau0, tau1, panels(tau1 - tau0, 16.0))
        .abs()
}

/// C_ω = 2ω|τ1 − τ0| + 2|∫√(1+V²)| and the bound e^{C_ω} on ‖U(τ1, τ0)‖ in ℓᵖ(cωⁿ).
pub fn geometric_bound<P: PotentialTrajectory + ?Sized>(v: &P, omega: f64, tau0: f64, tau1: f64) -> Result<BoundReport> {
    if !(omega > 0.0) {
        return Err(SceError::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let c = 2.0 * omega * (tau1 - tau0).abs() + 2.0 * generator_integral(v, tau0, tau1);
    Ok(BoundReport { c_omega: c, k: None, bound: c.exp(), regime: BoundRegime::Geometric, valid: true })
}

/// The small-time estimate of ‖U(τ1, τ0)‖ from ℓᵖ((2n)!ω²ⁿ) into ℓᵖ((2n)!υ²ⁿ).
pub fn factorial_bound<P: PotentialTrajectory + ?Sized>(
    v: &P,
    omega: f64,
    upsilon: f64,
    tau0: f64,
    tau1: f64,
) -> Result<BoundReport> {
    if !(upsilon > omega) {
        return Err(SceError::InvalidArgument(format!("factorial bound needs upsilon > omega ({upsilon} <= {omega})")));
    }
    if !(omega > 0.0) {
        return Err(SceError::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let c0 = 2.0 * generator_integral(v, tau0, tau1);
    let k = 2.0 * upsilon * omega / (upsilon - omega);
    let x = c0 * k;
    let valid = x < 1.0;
    let bound = if valid {
        c0.exp() + c0 * k.powi(3) / (2.0 * PI) * (upsilon / omega).sqrt() * (3.0 - 2.0 * x) / (1.0 - x).powi(2)
    } else {
        f64::INFINITY
    };
    Ok(BoundReport { c_omega: c0, k: Some(k), bound, regime: BoundRegime::Factorial, valid })
}

/// Both sides of the perturbation estimate for two potentials and two initial
/// vectors, in the sup norm with weights ωⁿ.
pub fn perturbation_gap<P, Q>(
    m: &MomentVector,
    mt: &MomentVector,
    v: &P,
    vt: &Q,
    omega: f64,
    tau0: f64,
    tau1: f64,
) -> Result<(f64, f64)>
where
    P: PotentialTrajectory + ?Sized,
    Q: PotentialTrajectory + ?Sized,
{
    let spec = NormSpec::sup(WeightSpec::geometric(1.0, omega)?);
    let um = evolve_rk(m, v, tau0, tau1, 1e-12)?;
    let umt = evolve_rk(mt, vt, tau0, tau1, 1e-12)?;
    let lhs = weighted_norm(&um.combine(1.0, &umt, -1.0), &spec);
    let c = geometric_bound(v, omega, tau0, tau1)?.c_omega;
    let ct = geometric_bound(vt, omega, tau0, tau1)?.c_omega;
    let dv = GaussRule::new(10)
        .integrate(|t| (v.value(t) - vt.value(t)).abs(), tau0, tau1, panels(tau1 - tau0, 64.0))
        .abs();
    let rhs = c.exp() * weighted_norm(&m.combine(1.0, mt, -1.0), &spec)
        + 2.0 * (c + ct).exp() * weighted_norm(mt, &spec) * dv;
    Ok((lhs, rhs))
}
