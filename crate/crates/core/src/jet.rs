//! Truncated Taylor jets in conformal time.
//!
//! A jet of order d stores c_0..c_d with f(τ0 + t) ≈ Σ c_k t^k, so the k-th
//! derivative is k!·c_k. Every binary operation truncates at the smaller order.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Result, SceError};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeJet {
    coeffs: Vec<f64>,
}

impl TimeJet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The identity jet τ ↦ τ expanded about `tau`.
    pub fn variable(tau: f64, order: usize) -> Self {
        let mut j = Self::constant(tau, order);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    /// Build from derivative values f, f′, f″, …
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty(), "jet needs at least a value");
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Self { coeffs }
    }

    pub fn from_taylor(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least a value");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn taylor(&self) -> &[f64] {
        &self.coeffs
    }

    /// k-th derivative at the expansion point, zero beyond the stored order.
    pub fn derivative(&self, k: usize) -> f64 {
        match self.coeffs.get(k) {
            Some(c) => c * crate::special::factorial(k),
            None => 0.0,
        }
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    /// d/dτ; the order drops by one (an order-0 jet differentiates to zero).
    pub fn diff(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(0.0, 0);
        }
        let coeffs = (1..self.coeffs.len()).map(|k| k as f64 * self.coeffs[k]).collect();
        Self { coeffs }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = (order + 1).min(self.coeffs.len());
        Self { coeffs: self.coeffs[..n].to_vec() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 || !c0.is_finite() {
            return Err(SceError::Domain("jet reciprocal of zero constant term".into()));
        }
        let n = self.coeffs.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / c0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| self.coeffs[i] * r[k - i]).sum();
            r[k] = -s / c0;
        }
        Ok(Self { coeffs: r })
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut e = vec![0.0; n];
        e[0] = self.coeffs[0].exp();
        // e' = f' e
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| i as f64 * self.coeffs[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Self { coeffs: e }
    }

    pub fn ln(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 <= 0.0 {
            return Err(SceError::Domain(format!("jet logarithm of {c0}")));
        }
        let n = self.coeffs.len();
        let mut l = vec![0.0; n];
        l[0] = c0.ln();
        // f l' = f'
        for k in 1..n {
            let s: f64 = (1..k).map(|i| i as f64 * l[i] * self.coeffs[k - i]).sum();
            l[k] = (k as f64 * self.coeffs[k] - s) / (k as f64 * c0);
        }
        Ok(Self { coeffs: l })
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    /// Composition g∘self for an outer function given by its derivatives at self.value().
    pub fn compose(&self, outer: &[f64]) -> Self {
        let n = self.order();
        let mut dx = self.clone();
        dx.coeffs[0] = 0.0;
        let mut out = Self::constant(0.0, n);
        let mut pw = Self::constant(1.0, n);
        let mut fact = 1.0;
        for (k, g) in outer.iter().enumerate().take(n + 1) {
            if k > 0 {
                pw = &pw * &dx;
                fact *= k as f64;
            }
            out = &out + &pw.scale(g / fact);
        }
        out
    }
}

impl Add for &TimeJet {
    type Output = TimeJet;
    fn add(self, rhs: &TimeJet) -> TimeJet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        TimeJet { coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect() }
    }
}

impl Sub for &TimeJet {
    type Output = TimeJet;
    fn sub(self, rhs: &TimeJet) -> TimeJet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        TimeJet { coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect() }
    }
}

impl Mul for &TimeJet {
    type Output = TimeJet;
    fn mul(self, rhs: &TimeJet) -> TimeJet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|i| self.coeffs[i] * rhs.coeffs[k - i]).sum())
            .collect();
        TimeJet { coeffs }
    }
}

impl Div for &TimeJet {
    type Output = TimeJet;
    /// Panics on a zero constant term; use `checked_div` where that can happen.
    fn div(self, rhs: &TimeJet) -> TimeJet {
        self.checked_div(rhs).expect("jet division by zero")
    }
}

impl Neg for &TimeJet {
    type Output = TimeJet;
    fn neg(self) -> TimeJet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for TimeJet {
            type Output = TimeJet;
            fn $m(self, rhs: TimeJet) -> TimeJet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&TimeJet> for TimeJet {
            type Output = TimeJet;
            fn $m(self, rhs: &TimeJet) -> TimeJet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);
