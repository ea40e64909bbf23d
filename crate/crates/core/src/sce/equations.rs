//! Pointwise pieces of the field equations: [v₁], the expanded trace and
//! energy equations, their assembly from coincidence limits, and the
//! conformally coupled second-order reduction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};
use crate::jet::TimeJet;
use crate::kinematics::{potential, CouplingParams};
use crate::seqspace::Triple;

/// Distance to a pole below which the solver refuses to divide.
pub const POLE_PROXIMITY: f64 = 1e-8;

const PI2: f64 = PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub coupling: CouplingParams,
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub lambda0: f64,
}

impl PhysicsParams {
    pub fn new(coupling: CouplingParams, kappa: f64, c: [f64; 4], lambda0: f64) -> Result<Self> {
        let p = Self { coupling, kappa, c1: c[0], c2: c[1], c3: c[2], c4: c[3], lambda0 };
        p.validate()?;
        Ok(p)
    }

    /// The conformally coupled parameter point with 3c₃ + c₄ = −1/(5760π²).
    pub fn conformal(m: f64, kappa: f64, c1: f64, c2: f64, lambda0: f64) -> Result<Self> {
        Self::new(CouplingParams::new(m, 1.0 / 6.0)?, kappa, [c1, c2, -1.0 / (3.0 * 5760.0 * PI2), 0.0], lambda0)
    }

    pub fn validate(&self) -> Result<()> {
        CouplingParams::new(self.coupling.m, self.coupling.xi)?;
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(SceError::InvalidArgument(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(SceError::InvalidArgument(format!("lambda0 must be > 0, got {}", self.lambda0)));
        }
        if [self.c1, self.c2, self.c3, self.c4].iter().any(|c| !c.is_finite()) {
            return Err(SceError::InvalidArgument("renormalization constants must be finite".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> f64 {
        self.coupling.m
    }

    pub fn xi(&self) -> f64 {
        self.coupling.xi
    }

    /// 6ξ − 1
    pub fn eta(&self) -> f64 {
        6.0 * self.coupling.xi - 1.0
    }

    /// ξ = 1/6 and 3c₃ + c₄ = −1/(5760π²), where the trace equation drops to second order.
    pub fn is_conformal(&self) -> bool {
        let target = -1.0 / (5760.0 * PI2);
        self.eta().abs() < 1e-12 && (3.0 * self.c3 + self.c4 - target).abs() <= 1e-9 * target.abs()
    }

    /// Coefficient of a⁗/a⁵ in the trace equation.
    pub fn fourth_order_coefficient(&self, a: f64) -> f64 {
        let eta = self.eta();
        -12.0 * (3.0 * self.c3 + self.c4) - 1.0 / (480.0 * PI2)
            + eta / (48.0 * PI2)
            + eta * eta / (16.0 * PI2) * (a * self.lambda0).ln()
    }

    /// Coefficient multiplying (2a‴a′/a⁴ − a″²/a⁴ − 4a″a′²/a⁵) in the energy equation.
    pub fn energy_third_order_coefficient(&self, a: f64) -> f64 {
        let eta = self.eta();
        6.0 * (3.0 * self.c3 + self.c4) + 1.0 / (960.0 * PI2)
            - eta / (96.0 * PI2)
            - eta * eta / (32.0 * PI2) * (a * self.lambda0).ln()
    }

    /// Scale factor of the logarithmic pole, if there is one.
    pub fn log_singularity(&self) -> Option<f64> {
        let eta = self.eta();
        if eta == 0.0 {
            return None;
        }
        let rhs = 11.0 + 5760.0 * PI2 * (3.0 * self.c3 + self.c4) - 60.0 * self.xi();
        Some((rhs / (30.0 * eta * eta)).exp() / self.lambda0)
    }

    /// Denominator of the second-order reduction.
    pub fn conformal_denominator(&self, a: f64, a1: f64) -> f64 {
        let m2 = self.m() * self.m();
        a1 * a1 / a.powi(4) - 1440.0 * PI2 / self.kappa + (1440.0 * PI2 * self.c2 - 5.0) * m2
    }
}

/// a and its conformal-time derivatives; a⁗ only where residuals need it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleFactorJet {
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a4: Option<f64>,
}

impl ScaleFactorJet {
    pub fn new(a: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self { a, a1, a2, a3, a4: None }
    }

    pub fn minkowski() -> Self {
        Self { a: 1.0, a1: 0.0, a2: 0.0, a3: 0.0, a4: Some(0.0) }
    }

    pub fn from_array(d: [f64; 5]) -> Self {
        Self { a: d[0], a1: d[1], a2: d[2], a3: d[3], a4: Some(d[4]) }
    }

    pub fn with_a4(mut self, a4: f64) -> Self {
        self.a4 = Some(a4);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(SceError::Domain(format!("scale factor a = {} must be > 0", self.a)));
        }
        let rest = [self.a1, self.a2, self.a3, self.a4.unwrap_or(0.0)];
        if rest.iter().any(|x| !x.is_finite()) {
            return Err(SceError::Domain("scale-factor derivatives must be finite".into()));
        }
        Ok(())
    }

    pub fn require_a4(&self) -> Result<f64> {
        self.a4.ok_or_else(|| SceError::InvalidArgument("a'''' is required here".into()))
    }

    pub fn hubble(&self) -> f64 {
        self.a1 / (self.a * self.a)
    }

    pub fn ricci(&self) -> f64 {
        6.0 * self.a2 / self.a.powi(3)
    }

    pub fn g00(&self) -> f64 {
        3.0 * self.a1 * self.a1 / (self.a * self.a)
    }

    /// □R; needs a⁗.
    pub fn box_ricci(&self) -> Result<f64> {
        let a4 = self.require_a4()?;
        Ok(box_r_bracket(self.a, self.a1, self.a2, self.a3, a4) * 6.0)
    }

    /// The jet as a truncated Taylor series (order 4 if a⁗ is known, else 3).
    pub fn to_time_jet(&self) -> TimeJet {
        match self.a4 {
            Some(a4) => TimeJet::from_derivatives(&[self.a, self.a1, self.a2, self.a3, a4]),
            None => TimeJet::from_derivatives(&[self.a, self.a1, self.a2, self.a3]),
        }
    }
}

/// a⁗/a⁵ − 4a‴a′/a⁶ − 3a″²/a⁶ + 6a″a′²/a⁷ (= □R/6)
fn box_r_bracket(a: f64, a1: f64, a2: f64, a3: f64, a4: f64) -> f64 {
    a4 / a.powi(5) - 4.0 * a3 * a1 / a.powi(6) - 3.0 * a2 * a2 / a.powi(6) + 6.0 * a2 * a1 * a1 / a.powi(7)
}

/// Classical background pair (rescaled field ϕ and its conformal-time derivative π).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundField {
    pub phi: f64,
    pub pi: f64,
}

impl BackgroundField {
    pub fn new(phi: f64, pi: f64) -> Self {
        Self { phi, pi }
    }

    pub fn is_zero(&self) -> bool {
        self.phi == 0.0 && self.pi == 0.0
    }

    /// M₀ + (ϕ², ϕπ, π²)
    pub fn shift(&self, m0: &Triple) -> Triple {
        [m0[0] + self.phi * self.phi, m0[1] + self.phi * self.pi, m0[2] + self.pi * self.pi]
    }
}

/// (π, −Vϕ)
pub fn background_rhs(bg: &BackgroundField, v: f64) -> BackgroundField {
    BackgroundField { phi: bg.pi, pi: -v * bg.phi }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Trace equation solved for a⁗.
    #[default]
    FourthOrder,
    /// The second-order reduction, only at the conformal parameter point.
    ConformalSecondOrder,
}

/// Sum of a list of terms together with the largest term magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(terms: &[f64]) -> Self {
        let value = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |s, t| s.max(t.abs()));
        Self { value, scale }
    }

    /// |value| / scale, or |value| when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(SceError::Domain(format!("scale factor a = {a} must be > 0")));
    }
    Ok(())
}

/// FLRW coincidence limit of the Hadamard coefficient v₁.
pub fn v1_coincidence(jet: &ScaleFactorJet, p: &PhysicsParams) -> Result<f64> {
    jet.validate()?;
    let a4 = jet.require_a4()?;
    let (a, a1, a2, a3) = (jet.a, jet.a1, jet.a2, jet.a3);
    let (m, xi) = (p.m(), p.xi());
    let eta = 6.0 * xi - 1.0;
    Ok(m.powi(4) / 8.0
        + (a1.powi(4) / a.powi(8) - a2 * a1 * a1 / a.powi(7)) / 60.0
        + eta * m * m / 4.0 * a2 / a.powi(3)
        + eta * eta / 8.0 * a2 * a2 / a.powi(6)
        + (5.0 * xi - 1.0) / 20.0
            * (6.0 * a2 * a1 * a1 / a.powi(7) - 3.0 * a2 * a2 / a.powi(6) - 4.0 * a3 * a1 / a.powi(6)
                + a4 / a.powi(5)))
}

/// Terms of the expanded trace equation R/κ + ⟨T⟩ (a⁗ as given; M₀ already
/// shifted by the background). The first entry is the a⁗ term alone.
fn trace_terms(a: f64, a1: f64, a2: f64, a3: f64, a4: f64, m0: &Triple, m1: &Triple, p: &PhysicsParams) -> [f64; 16] {
    let eta = p.eta();
    let m2 = p.m() * p.m();
    let lg = (a * p.lambda0).ln();
    let big_p = p.fourth_order_coefficient(a);
    let e2 = eta * eta / (32.0 * PI2);
    let a6 = a.powi(6);
    let a7 = a.powi(7);
    [
        big_p * a4 / a.powi(5),
        big_p * (-4.0 * a3 * a1 / a6 - 3.0 * a2 * a2 / a6 + 6.0 * a2 * a1 * a1 / a7),
        e2 * (4.0 * a3 * a1 / a6 + 3.0 * a2 * a2 / a6 - 10.0 * a2 * a1 * a1 / a7),
        (a1.powi(4) / a.powi(8) - a2 * a1 * a1 / a7) / (240.0 * PI2),
        6.0 / p.kappa * a2 / a.powi(3),
        m2 * (-6.0 * p.c2 + 1.0 / (48.0 * PI2) + eta / (8.0 * PI2) * (1.0 + lg)) * a2 / a.powi(3),
        eta * m2 / (16.0 * PI2) * a1 * a1 / a.powi(4),
        m2 * m2 * 4.0 * p.c1,
        m2 * m2 * (1.0 / (32.0 * PI2) + lg / (8.0 * PI2)),
        -m2 * m0[0] / (a * a),
        eta * 6.0 * p.xi() * a2 / a.powi(5) * m0[0],
        -eta * a1 * a1 / a6 * m0[0],
        eta * m2 / (a * a) * m0[0],
        eta * 2.0 * a1 / a.powi(5) * m0[1],
        -eta * m0[2] / a.powi(4),
        -eta * m1[0] / a.powi(4),
    ]
}

/// The expanded trace equation R/κ + ⟨T⟩ at a full jet; zero on solutions.
pub fn trace_equation(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<Residual> {
    jet.validate()?;
    let a4 = jet.require_a4()?;
    let m0s = bg.shift(m0);
    let t = trace_terms(jet.a, jet.a1, jet.a2, jet.a3, a4, &m0s, m1, p);
    Ok(Residual::from_terms(&t))
}

/// a⁗ from the trace equation.
///
/// At the conformal parameter point the a⁗ and a‴ terms vanish identically
/// and the equation is a constraint Q = a″D − N = 0; a⁗ is then taken from
/// Q″ = 0, using the moment dynamics for the derivatives of M_{φφ,0}.
pub fn trace_rhs(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<f64> {
    check_a(jet.a)?;
    if p.is_conformal() {
        let mut full = *jet;
        full.a4 = Some(0.0);
        let (q, d) = conformal_constraint_jet(&full, m0, m1, bg, p)?;
        return Ok(-q.derivative(2) / d);
    }
    let big_p = p.fourth_order_coefficient(jet.a);
    if big_p.abs() < POLE_PROXIMITY {
        return Err(SceError::LogSingularity { a: jet.a, coefficient: big_p });
    }
    let m0s = bg.shift(m0);
    let t = trace_terms(jet.a, jet.a1, jet.a2, jet.a3, 0.0, &m0s, m1, p);
    let rest: f64 = t[1..].iter().sum();
    Ok(-rest * jet.a.powi(5) / big_p)
}

/// H̃ − H at coincidence for the φφ, φπ, ππ entries and Δ_r of the φφ entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegDifferences {
    pub ff: f64,
    pub fp: f64,
    pub pp: f64,
    pub lap_ff: f64,
}

pub fn reg_differences(jet: &ScaleFactorJet, p: &PhysicsParams) -> Result<RegDifferences> {
    jet.validate()?;
    jet.require_a4()?;
    let aj = jet.to_time_jet();
    let v = potential(&aj, &p.coupling)?;
    let (v0, v1, v2) = (v.derivative(0), v.derivative(1), v.derivative(2));
    // h = a′/a, q = a″/a as jets
    let h = aj.diff().checked_div(&aj)?;
    let q = aj.diff().diff().checked_div(&aj)?;
    let (h0, h1) = (h.derivative(0), h.derivative(1));
    let (q0, q1, q2) = (q.derivative(0), q.derivative(1), q.derivative(2));
    let lg = (jet.a * p.lambda0).ln();
    let ff = v0 / (8.0 * PI2) * lg + q0 / (48.0 * PI2);
    let fp = v1 / (16.0 * PI2) * lg + (6.0 * v0 * h0 + q1) / (96.0 * PI2);
    let pp = (v0 * v0 + v2) / (32.0 * PI2) * lg
        + (h1 * h1 + 2.0 * q0 * q0 + 4.0 * q2) / (960.0 * PI2)
        + (3.0 * v0 * v0 - 6.0 * v0 * h0 * h0 + 4.0 * v0 * q0 + 12.0 * v1 * h0 + v2) / (192.0 * PI2);
    let lap_ff = (3.0 * v0 * v0 + v2) / (32.0 * PI2) * (5.0 / 6.0 + lg)
        + v0 / (32.0 * PI2) * h0 * h0
        + (11.0 * h1 * h1 - 2.0 * q0 * q0 + 12.0 * h0 * q1) / (960.0 * PI2);
    Ok(RegDifferences { ff, fp, pp, lap_ff })
}

/// Coincidence limits of the regularized two-point function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceLimits {
    /// [ω]
    pub omega: f64,
    /// [(1⊗Δ)ω]
    pub laplace: f64,
    /// [(∂_τ⊗∂_τ)ω]
    pub dtdt: f64,
    /// [(1⊗∂_τ)ω]
    pub dt: f64,
}

pub fn coincidence_limits(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<CoincidenceLimits> {
    let d = reg_differences(jet, p)?;
    let m0s = bg.shift(m0);
    let a2 = jet.a * jet.a;
    let h = jet.a1 / jet.a;
    let ff = m0s[0] - d.ff;
    let fp = m0s[1] - d.fp;
    let pp = m0s[2] - d.pp;
    Ok(CoincidenceLimits {
        omega: ff / a2,
        laplace: (m1[0] - d.lap_ff) / a2,
        dtdt: pp / a2 + h * h * ff / a2 - 2.0 * h * fp / a2,
        dt: fp / a2 - h * ff / a2,
    })
}

/// ⟨T^ren⟩ assembled from the coincidence limits.
pub fn renormalized_trace(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<f64> {
    let c = coincidence_limits(jet, m0, m1, bg, p)?;
    let (m, xi) = (p.m(), p.xi());
    let eta = 6.0 * xi - 1.0;
    let r = jet.ricci();
    let box_r = jet.box_ricci()?;
    let v1 = v1_coincidence(jet, p)?;
    Ok((eta * (xi * r + m * m) - m * m) * c.omega - eta / (jet.a * jet.a) * (c.laplace + c.dtdt)
        - (9.0 * xi - 2.0) / (2.0 * PI2) * v1
        + 4.0 * p.c1 * m.powi(4)
        - p.c2 * m * m * r
        - (6.0 * p.c3 + 2.0 * p.c4) * box_r)
}

/// −R − κ⟨T^ren⟩ from the coincidence limits; vanishes on solutions of the traced equation.
pub fn trace_from_components(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<f64> {
    let t = renormalized_trace(jet, m0, m1, bg, p)?;
    Ok(-jet.ricci() - p.kappa * t)
}

/// ⟨T₀₀^ren⟩ assembled from the coincidence limits (needs a⁗, which cancels).
pub fn renormalized_energy(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<f64> {
    let c = coincidence_limits(jet, m0, m1, bg, p)?;
    let (a, a1, a2, a3) = (jet.a, jet.a1, jet.a2, jet.a3);
    let (m, xi) = (p.m(), p.xi());
    let g00 = jet.g00();
    let j00 = -24.0 * a2 * a1 * a1 / a.powi(5) - 6.0 * a2 * a2 / a.powi(4) + 12.0 * a3 * a1 / a.powi(4);
    let v1 = v1_coincidence(jet, p)?;
    Ok(0.5 * c.dtdt - 0.5 * c.laplace + 0.5 * a * a * m * m * c.omega + xi * (g00 * c.omega + 6.0 * a1 / a * c.dt)
        - a * a / (4.0 * PI2) * v1
        - p.c1 * a * a * m.powi(4)
        + p.c2 * m * m * g00
        + (3.0 * p.c3 + p.c4) * j00)
}

fn energy_terms(a: f64, a1: f64, a2: f64, a3: f64, m0: &Triple, m1: &Triple, p: &PhysicsParams) -> [f64; 12] {
    let eta = p.eta();
    let m2 = p.m() * p.m();
    let lg = (a * p.lambda0).ln();
    let pe = p.energy_third_order_coefficient(a);
    let a4 = a.powi(4);
    [
        pe * 2.0 * a3 * a1 / a4,
        pe * (-a2 * a2 / a4 - 4.0 * a2 * a1 * a1 / a.powi(5)),
        -eta * eta / (16.0 * PI2) * a2 * a1 * a1 / a.powi(5),
        a1.powi(4) / (960.0 * PI2 * a.powi(6)),
        -3.0 / p.kappa * a1 * a1 / (a * a),
        m2 * (3.0 * p.c2 - 1.0 / (96.0 * PI2) - eta / (16.0 * PI2) * (1.0 + lg)) * a1 * a1 / (a * a),
        -m2 * m2 * p.c1 * a * a,
        -m2 * m2 * lg / (32.0 * PI2) * a * a,
        0.5 * m2 * m0[0],
        eta * (-a1 * a1 / (2.0 * a4) * m0[0] + a1 / a.powi(3) * m0[1]),
        m0[2] / (2.0 * a * a),
        -m1[0] / (2.0 * a * a),
    ]
}

/// The expanded energy equation ⟨T₀₀⟩ − G₀₀/κ; zero when the constraint holds.
pub fn energy_residual(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<Residual> {
    jet.validate()?;
    let m0s = bg.shift(m0);
    Ok(Residual::from_terms(&energy_terms(jet.a, jet.a1, jet.a2, jet.a3, &m0s, m1, p)))
}

/// The a‴ that satisfies the energy constraint for given a, a′, a″ and moments.
pub fn solve_energy_for_a3(jet: &ScaleFactorJet, m0: &Triple, m1: &Triple, bg: &BackgroundField, p: &PhysicsParams) -> Result<f64> {
    jet.validate()?;
    let coef = p.energy_third_order_coefficient(jet.a) * 2.0 * jet.a1 / jet.a.powi(4);
    if jet.a1.abs() < POLE_PROXIMITY || coef.abs() < POLE_PROXIMITY * 1e-6 {
        return Err(SceError::EnergyPole { a1: jet.a1 });
    }
    let m0s = bg.shift(m0);
    let t = energy_terms(jet.a, jet.a1, jet.a2, 0.0, &m0s, m1, p);
    Ok(-t.iter().sum::<f64>() / coef)
}

/// a″ of the second-order reduction at the conformal parameter point.
pub fn conformal_rhs(a: f64, a1: f64, mff0: f64, p: &PhysicsParams) -> Result<f64> {
    check_a(a)?;
    if !p.is_conformal() {
        return Err(SceError::InvalidArgument(
            "second-order reduction needs xi = 1/6 and 3c3 + c4 = -1/(5760 pi^2)".into(),
        ));
    }
    let d = p.conformal_denominator(a, a1);
    if d.abs() < POLE_PROXIMITY {
        return Err(SceError::HubbleSingularity { a, a1, denominator: d });
    }
    Ok(conformal_numerator(a, a1, mff0, p) / d)
}

fn conformal_numerator(a: f64, a1: f64, mff0: f64, p: &PhysicsParams) -> f64 {
    let m = p.m();
    a1.powi(4) / a.powi(5)
        + 0.5 * m.powi(4) * a.powi(3) * (1920.0 * PI2 * p.c1 + 15.0 + 60.0 * (a * p.lambda0).ln())
        - 240.0 * PI2 * m * m * a * mff0
}

/// Q = a″D − N as a jet of order 2 built from the full jet (a⁗ as given)
/// together with the value D of the denominator.
fn conformal_constraint_jet(
    jet: &ScaleFactorJet,
    m0: &Triple,
    m1: &Triple,
    bg: &BackgroundField,
    p: &PhysicsParams,
) -> Result<(TimeJet, f64)> {
    let a4 = jet.require_a4()?;
    let aj = TimeJet::from_derivatives(&[jet.a, jet.a1, jet.a2, jet.a3, a4]);
    let d0 = p.conformal_denominator(jet.a, jet.a1);
    if d0.abs() < POLE_PROXIMITY {
        return Err(SceError::HubbleSingularity { a: jet.a, a1: jet.a1, denominator: d0 });
    }
    let m0s = bg.shift(m0);
    let (m, kappa) = (p.m(), p.kappa);
    let v = p.eta() * jet.a2 / jet.a + jet.a * jet.a * m * m;
    // M_φφ,0′ = 2M_φπ,0 and M_φπ,0′ = −VM_φφ,0 + M_ππ,0 + M_φφ,1
    let mff = TimeJet::from_derivatives(&[m0s[0], 2.0 * m0s[1], 2.0 * (-v * m0s[0] + m0s[2] + m1[0])]);
    let a0 = aj.truncate(2);
    let a1 = aj.diff().truncate(2);
    let a2 = aj.diff().diff();
    let inv_a = a0.recip()?;
    let d = (&a1 * &a1) * inv_a.powi(4);
    let d = d.add_scalar(-1440.0 * PI2 / kappa + (1440.0 * PI2 * p.c2 - 5.0) * m * m);
    let lg = a0.scale(p.lambda0).ln()?;
    let n = &(&a1.powi(4) * &inv_a.powi(5))
        + &(&a0.powi(3) * &lg.scale(60.0).add_scalar(1920.0 * PI2 * p.c1 + 15.0)).scale(0.5 * m.powi(4));
    let n = &n - &(&a0 * &mff).scale(240.0 * PI2 * m * m);
    Ok((&(&a2 * &d) - &n, d0))
}

/// Completes (a, a′) to a full jet consistent with the second-order reduction.
pub fn consistent_conformal_jet(
    a: f64,
    a1: f64,
    m0: &Triple,
    m1: &Triple,
    bg: &BackgroundField,
    p: &PhysicsParams,
) -> Result<ScaleFactorJet> {
    let m0s = bg.shift(m0);
    let a2 = conformal_rhs(a, a1, m0s[0], p)?;
    let mut jet = ScaleFactorJet { a, a1, a2, a3: 0.0, a4: Some(0.0) };
    let (q, d) = conformal_constraint_jet(&jet, m0, m1, bg, p)?;
    jet.a3 = -q.derivative(1) / d;
    let (q, d) = conformal_constraint_jet(&jet, m0, m1, bg, p)?;
    jet.a4 = Some(-q.derivative(2) / d);
    Ok(jet)
}

/// c₁ making the static energy constraint hold for a time-translation invariant state.
pub fn calibrate_c1(mpp0: f64, m: f64, lambda0: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(SceError::InvalidArgument(format!("calibration of c1 needs m > 0, got {m}")));
    }
    if !(lambda0 > 0.0) {
        return Err(SceError::InvalidArgument(format!("lambda0 must be > 0, got {lambda0}")));
    }
    Ok(mpp0 / m.powi(4) - lambda0.ln() / (32.0 * PI2))
}
