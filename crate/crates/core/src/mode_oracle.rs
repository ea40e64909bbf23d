//! Per-mode evolution of the Fourier-space Cauchy data Ĝ(τ, k), used as an
//! independent check of the moment hierarchy.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};
use crate::propagator::{evolve_rk, PotentialTrajectory};
use crate::rk::{integrate, RkOptions};
use crate::seqspace::{MomentVector, Triple};

/// Default number of log-spaced nodes on a bump support.
pub const DEFAULT_NODES: usize = 2049;
/// Indices within Δτ·SAFETY of the cut are excluded from oracle comparisons.
pub const DEFAULT_SAFETY: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    k: Vec<f64>,
    g: Vec<Triple>,
    weights: Vec<f64>,
}

impl ModeField {
    pub fn new(k: Vec<f64>, g: Vec<Triple>, weights: Vec<f64>) -> Result<Self> {
        if k.len() != g.len() || k.len() != weights.len() || k.is_empty() {
            return Err(SceError::InvalidArgument("mode grid, data and weights differ in length".into()));
        }
        if k[0] <= 0.0 || k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SceError::InvalidArgument("k-grid must be positive and strictly increasing".into()));
        }
        if g.iter().flatten().chain(&weights).any(|x| !x.is_finite()) {
            return Err(SceError::InvalidArgument("non-finite mode data".into()));
        }
        Ok(Self { k, g, weights })
    }

    /// Stationary vacuum data (1/(2ω_k), 0, ω_k/2).
    pub fn vacuum(k: Vec<f64>, weights: Vec<f64>, m: f64) -> Result<Self> {
        let g = k
            .iter()
            .map(|k| {
                let w = (k * k + m * m).sqrt();
                [0.5 / w, 0.0, 0.5 * w]
            })
            .collect();
        Self::new(k, g, weights)
    }

    /// Massless thermal data at inverse temperature β.
    pub fn thermal(k: Vec<f64>, weights: Vec<f64>, beta: f64) -> Result<Self> {
        let g = k
            .iter()
            .map(|k| {
                let c = 1.0 / (0.5 * beta * k).tanh();
                [0.5 * c / k, 0.0, 0.5 * c * k]
            })
            .collect();
        Self::new(k, g, weights)
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn data(&self) -> &[Triple] {
        &self.g
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { g: self.g.iter().map(|t| t.map(|x| s * x)).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.k != other.k {
            return Err(SceError::InvalidArgument("adding mode fields on different grids".into()));
        }
        let g = self.g.iter().zip(&other.g).map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]).collect();
        Ok(Self { g, ..self.clone() })
    }

    /// M_n = (−1)ⁿ/(2π²)·Σ_i w_i k_i^{2n+2} Ĝ(k_i), summed in grid order.
    pub fn moments(&self, order: usize) -> Result<MomentVector> {
        let mut entries = vec![[0.0; 3]; order + 1];
        for ((k, g), w) in self.k.iter().zip(&self.g).zip(&self.weights) {
            let k2 = k * k;
            let mut p = w * k2;
            for e in entries.iter_mut() {
                for i in 0..3 {
                    e[i] += p * g[i];
                }
                p *= k2;
            }
        }
        let c = 1.0 / (2.0 * PI * PI);
        for (n, e) in entries.iter_mut().enumerate() {
            let s = if n % 2 == 0 { c } else { -c };
            *e = e.map(|x| s * x);
        }
        MomentVector::new(entries)
    }
}

/// Log-spaced grid on [lo, hi] with Simpson weights for ∫dk (odd node count).
pub fn log_simpson_grid(lo: f64, hi: f64, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lo > 0.0 && hi > lo) || nodes < 3 || nodes % 2 == 0 {
        return Err(SceError::InvalidArgument(format!(
            "log Simpson grid needs 0 < lo < hi and an odd node count >= 3 (got {lo}, {hi}, {nodes})"
        )));
    }
    let (ulo, uhi) = (lo.ln(), hi.ln());
    let h = (uhi - ulo) / (nodes - 1) as f64;
    let mut k = Vec::with_capacity(nodes);
    let mut w = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let ki = if i == 0 {
            lo
        } else if i == nodes - 1 {
            hi
        } else {
            (ulo + i as f64 * h).exp()
        };
        let simpson = if i == 0 || i == nodes - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        k.push(ki);
        // dk = k du
        w.push(simpson * h / 3.0 * ki);
    }
    Ok((k, w))
}

pub fn mode_rhs(g: &Triple, k: f64, v: f64) -> Triple {
    let w2 = k * k + v;
    [2.0 * g[1], -w2 * g[0] + g[2], -2.0 * w2 * g[1]]
}

/// Evolve every node independently (in parallel, results kept in grid order).
pub fn evolve_modes<P: PotentialTrajectory + Sync + ?Sized>(
    f: &ModeField,
    v: &P,
    tau0: f64,
    tau1: f64,
    tol: f64,
) -> Result<ModeField> {
    if !(tol > 0.0) {
        return Err(SceError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let g: Result<Vec<Triple>> = f
        .k
        .par_iter()
        .zip(f.g.par_iter())
        .map(|(&k, g0)| {
            let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
                let d = mode_rhs(&[y[0], y[1], y[2]], k, v.value(t));
                dy.copy_from_slice(&d);
                Ok(())
            };
            let y = integrate(&mut rhs, tau0, g0, tau1, RkOptions::with_tol(tol))?;
            Ok([y[0], y[1], y[2]])
        })
        .collect();
    Ok(ModeField { g: g?, ..f.clone() })
}

/// Ĵ = Ĝ_φφ Ĝ_ππ − Ĝ_φπ² per node.
pub fn j_invariant(f: &ModeField) -> Vec<f64> {
    f.g.iter().map(|g| g[0] * g[2] - g[1] * g[1]).collect()
}

/// Smooth compactly supported difference data
/// amplitude·(1 − ((k − center)/width)²)^smoothness on |k − center| < width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    /// Support radius: the bump vanishes outside [center − width, center + width].
    pub width: f64,
    pub amplitude: Triple,
    #[serde(default = "default_smoothness")]
    pub smoothness: u32,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_smoothness() -> u32 {
    8
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

impl BumpSpec {
    pub fn new(center: f64, width: f64, amplitude: Triple) -> Self {
        Self { center, width, amplitude, smoothness: default_smoothness(), nodes: DEFAULT_NODES }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, _) = self.support();
        if !(self.width > 0.0) || !(lo > 0.0) || !self.center.is_finite() {
            return Err(SceError::InvalidArgument(format!(
                "bump support [{}, {}] must lie in (0, inf)",
                lo,
                self.center + self.width
            )));
        }
        if self.smoothness < 2 {
            return Err(SceError::InvalidArgument("bump smoothness must be >= 2".into()));
        }
        Ok(())
    }

    pub fn profile(&self, k: f64) -> f64 {
        let x = (k - self.center) / self.width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(self.smoothness as i32)
        }
    }

    pub fn field(&self) -> Result<ModeField> {
        self.validate()?;
        let (lo, hi) = self.support();
        let (k, w) = log_simpson_grid(lo, hi, self.nodes)?;
        let g = k.iter().map(|k| self.amplitude.map(|a| a * self.profile(*k))).collect();
        ModeField::new(k, g, w)
    }
}

pub fn bump_moments(b: &BumpSpec, order: usize) -> Result<MomentVector> {
    b.field()?.moments(order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_abs_gap: f64,
    /// Highest index compared.
    pub retained: usize,
    /// max |Δ| over the triple, per retained index.
    pub gaps: Vec<f64>,
    pub from_modes: MomentVector,
    pub from_hierarchy: MomentVector,
}

pub fn oracle_compare<P: PotentialTrajectory + Sync + ?Sized>(
    b: &BumpSpec,
    v: &P,
    tau0: f64,
    tau1: f64,
    order: usize,
    tol: f64,
) -> Result<OracleReport> {
    oracle_compare_with(b, v, tau0, tau1, order, tol, DEFAULT_SAFETY)
}

/// Evolve the bump per mode and through the moment hierarchy, then compare
/// the indices n ≤ N − ⌈|τ1 − τ0|·safety⌉.
pub fn oracle_compare_with<P: PotentialTrajectory + Sync + ?Sized>(
    b: &BumpSpec,
    v: &P,
    tau0: f64,
    tau1: f64,
    order: usize,
    tol: f64,
    safety: f64,
) -> Result<OracleReport> {
    let cut = ((tau1 - tau0).abs() * safety).ceil() as usize;
    if cut > order {
        return Err(SceError::InvalidArgument(format!(
            "no truncation-free indices: order {order} with a cut of {cut}"
        )));
    }
    let retained = order - cut;
    let field = b.field()?;
    let m0 = field.moments(order)?;
    let from_modes = evolve_modes(&field, v, tau0, tau1, tol)?.moments(order)?;
    let from_hierarchy = evolve_rk(&m0, v, tau0, tau1, tol)?;
    let gaps: Vec<f64> = (0..=retained)
        .map(|n| {
            let (a, c) = (from_modes.get(n), from_hierarchy.get(n));
            (0..3).map(|i| (a[i] - c[i]).abs()).fold(0.0, f64::max)
        })
        .collect();
    let max_abs_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(OracleReport { max_abs_gap, retained, gaps, from_modes, from_hierarchy })
}
