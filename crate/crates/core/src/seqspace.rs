//! Weighted sequence spaces of moment triples.
//!
//! Norms treat each triple with the max norm and divide by the weight, so a
//! sequence lies in ℓᵖ(w) when Σ |M_n / w_n|ᵖ is finite.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};

pub type Triple = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// w_n = c·ωⁿ
    Geometric { c: f64, omega: f64 },
    /// w_n = (2n)!·ω²ⁿ
    Factorial { omega: f64 },
    Explicit { weights: Vec<f64> },
}

impl WeightSpec {
    pub fn geometric(c: f64, omega: f64) -> Result<Self> {
        let w = Self::Geometric { c, omega };
        w.validate()?;
        Ok(w)
    }

    pub fn factorial(omega: f64) -> Result<Self> {
        let w = Self::Factorial { omega };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        let good = match self {
            Self::Geometric { c, omega } => ok(*c) && ok(*omega),
            Self::Factorial { omega } => ok(*omega),
            Self::Explicit { weights } => weights.iter().all(|w| ok(*w)),
        };
        if good {
            Ok(())
        } else {
            Err(SceError::InvalidArgument(format!("weights must be positive: {self:?}")))
        }
    }

    /// w_n. Explicit weights beyond the stored list are +∞ (the entry is not
    /// weighted into the norm).
    pub fn weight(&self, n: usize) -> f64 {
        match self {
            Self::Geometric { c, omega } => c * omega.powi(n as i32),
            Self::Factorial { omega } => {
                let mut w = 1.0;
                for k in 1..=2 * n {
                    w *= k as f64 * omega;
                }
                w
            }
            Self::Explicit { weights } => weights.get(n).copied().unwrap_or(f64::INFINITY),
        }
    }

    pub fn weights(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.weight(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    /// ℓᵖ exponent; `f64::INFINITY` for the sup norm.
    pub p: f64,
    pub weights: WeightSpec,
}

impl NormSpec {
    pub fn sup(weights: WeightSpec) -> Self {
        Self { p: f64::INFINITY, weights }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(SceError::InvalidArgument(format!("norm exponent p = {} < 1", self.p)));
        }
        self.weights.validate()
    }
}

/// Truncated moment sequence M_0..M_N, triples ordered (φφ, (φπ), ππ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    entries: Vec<Triple>,
}

impl MomentVector {
    pub fn new(entries: Vec<Triple>) -> Result<Self> {
        if entries.is_empty() {
            return Err(SceError::InvalidArgument("moment vector needs at least M_0".into()));
        }
        if entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SceError::InvalidArgument("non-finite moment entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn zeros(order: usize) -> Self {
        Self { entries: vec![[0.0; 3]; order + 1] }
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 3 != 0 {
            return Err(SceError::InvalidArgument("flat moment length not a multiple of 3".into()));
        }
        Self::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.entries.iter().flatten().copied().collect()
    }

    /// Truncation index N.
    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[Triple] {
        &self.entries
    }

    pub fn get(&self, n: usize) -> Triple {
        self.entries.get(n).copied().unwrap_or([0.0; 3])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { entries: self.entries.iter().map(|t| t.map(|x| x * s)).collect() }
    }

    /// αself + βother, zero-padding the shorter vector.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        let len = self.entries.len().max(other.entries.len());
        let entries = (0..len)
            .map(|n| {
                let (x, y) = (self.get(n), other.get(n));
                [0, 1, 2].map(|i| alpha * x[i] + beta * y[i])
            })
            .collect();
        Self { entries }
    }

    /// Zero-pad (or cut) to order `order`.
    pub fn resized(&self, order: usize) -> Self {
        Self { entries: (0..=order).map(|n| self.get(n)).collect() }
    }

    /// Adds (φ², φπ, π²) of a background field pair to M_0.
    pub fn with_background(&self, phi: f64, pi: f64) -> Self {
        let mut out = self.clone();
        out.entries[0][0] += phi * phi;
        out.entries[0][1] += phi * pi;
        out.entries[0][2] += pi * pi;
        out
    }
}

fn triple_max(t: &Triple) -> f64 {
    t.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// (Σ_n |M_n / w_n|ᵖ)^{1/p}, or the supremum when p = ∞.
pub fn weighted_norm(m: &MomentVector, spec: &NormSpec) -> f64 {
    let scaled = m
        .entries
        .iter()
        .enumerate()
        .map(|(n, t)| triple_max(t) / spec.weights.weight(n));
    if spec.p.is_infinite() {
        scaled.fold(0.0, f64::max)
    } else if spec.p == 1.0 {
        scaled.sum()
    } else {
        scaled.map(|x| x.powf(spec.p)).sum::<f64>().powf(1.0 / spec.p)
    }
}

/// (LM)_n = M_{n+1}.
pub fn left_shift(m: &MomentVector) -> Result<MomentVector> {
    if m.order() == 0 {
        return Err(SceError::InvalidArgument("left shift of an order-0 moment vector".into()));
    }
    Ok(MomentVector { entries: m.entries[1..].to_vec() })
}

/// sup_n w_{n+m}/v_n, the operator norm bound of Lᵐ: ℓᵖ(w) → ℓᵖ(v).
///
/// Returns +∞ when the ratio is unbounded. Explicit weights are scanned over
/// their finite range.
pub fn shift_norm_bound(w: &WeightSpec, v: &WeightSpec, m: usize) -> f64 {
    use WeightSpec::*;
    let ratio = |n: usize| w.weight(n + m) / v.weight(n);
    match (w, v) {
        (Explicit { weights }, _) => {
            let len = weights.len().saturating_sub(m);
            (0..len).map(ratio).fold(0.0, f64::max)
        }
        (_, Explicit { weights }) => (0..weights.len()).map(ratio).fold(0.0, f64::max),
        (Geometric { c: cw, omega: ow }, Geometric { c: cv, omega: ov }) => {
            if ow > ov {
                f64::INFINITY
            } else {
                cw / cv * ow.powi(m as i32)
            }
        }
        (Factorial { .. }, Geometric { .. }) => f64::INFINITY,
        (Factorial { omega: ow }, Factorial { omega: ov }) => {
            if m == 0 && ow <= ov {
                1.0
            } else if ow >= ov {
                f64::INFINITY
            } else {
                scan_unimodal(ratio)
            }
        }
        (Geometric { .. }, Factorial { .. }) => scan_unimodal(ratio),
    }
}

// The consecutive ratio r(n+1)/r(n) decreases in n for the weight pairs
// routed here, so the first descent marks the supremum.
fn scan_unimodal(r: impl Fn(usize) -> f64) -> f64 {
    let mut prev = r(0);
    for n in 1..10_000 {
        let x = r(n);
        if !x.is_finite() || x < prev {
            break;
        }
        prev = x;
    }
    prev
}
