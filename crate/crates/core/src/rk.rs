//! Dormand–Prince 5(4) with embedded error control.

use crate::error::{Result, SceError};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus the embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl RkOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { atol: tol, rtol: tol, ..Self::default() }
    }
}

impl Default for RkOptions {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-10, h_init: None, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Stateful stepper; keeps its step size between successive `advance` calls.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    opts: RkOptions,
    h: Option<f64>,
    groups: Option<Vec<usize>>,
    pub stats: RkStats,
}

impl DormandPrince {
    pub fn new(opts: RkOptions) -> Result<Self> {
        if !(opts.atol > 0.0) || !(opts.rtol >= 0.0) {
            return Err(SceError::InvalidArgument(format!("tolerance must be positive, got {}", opts.atol)));
        }
        Ok(Self { opts, h: opts.h_init, groups: None, stats: RkStats::default() })
    }

    /// Components sharing a group id share their relative error scale (the
    /// largest magnitude in the group). Without groups every component is
    /// scaled by itself.
    pub fn with_groups(mut self, groups: Vec<usize>) -> Self {
        self.groups = Some(groups);
        self
    }

    fn scales(&self, y: &[f64], ynew: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match &self.groups {
            None => out.extend(y.iter().zip(ynew).map(|(a, b)| a.abs().max(b.abs()))),
            Some(g) => {
                let count = g.iter().copied().max().map_or(0, |m| m + 1);
                let mut gmax = vec![0.0f64; count];
                for (i, gi) in g.iter().enumerate() {
                    gmax[*gi] = gmax[*gi].max(y[i].abs()).max(ynew[i].abs());
                }
                out.extend(g.iter().map(|gi| gmax[*gi]));
            }
        }
        for s in out.iter_mut() {
            *s = self.opts.atol + self.opts.rtol * *s;
        }
    }

    /// Integrate y′ = f(t, y) from `*t` to `t_end` (either direction), updating in place.
    pub fn advance<F>(&mut self, f: &mut F, t: &mut f64, y: &mut [f64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let span = t_end - *t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut sc = Vec::with_capacity(n);
        if let Some(g) = &self.groups {
            if g.len() != n {
                return Err(SceError::InvalidArgument("error groups do not match the state size".into()));
            }
        }
        f(*t, y, &mut k[0])?;
        self.stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h.abs().min(span.abs()),
            None => self.initial_step(y, &k[0], span.abs()),
        };
        let mut steps = 0;
        loop {
            let remaining = (t_end - *t) * dir;
            if remaining <= 0.0 {
                break;
            }
            // land exactly on t_end
            let last = h >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { h.min(self.opts.h_max) };
            if hs < self.opts.h_min * (1.0 + t.abs()) {
                return Err(SceError::StepUnderflow { tau: *t, h: hs });
            }
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(SceError::StepBudget { tau: *t, steps });
            }
            let hd = hs * dir;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hd * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                f(*t + C[s] * hd, &tmp, &mut k[s])?;
                self.stats.evaluations += 1;
                if s == 6 {
                    ynew.copy_from_slice(&tmp);
                }
            }
            let mut err = 0.0f64;
            let mut finite = true;
            self.scales(y, &ynew, &mut sc);
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * hd;
                err = err.max(e.abs() / sc[i]);
                finite &= ynew[i].is_finite();
            }
            if !finite || !err.is_finite() {
                self.stats.rejected += 1;
                h = hs * 0.2;
                continue;
            }
            if err <= 1.0 {
                *t = if last { t_end } else { *t + hd };
                y.copy_from_slice(&ynew);
                let last_k = k[6].clone();
                k[0] = last_k;
                self.stats.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = hs * fac;
                } else {
                    h = h.max(hs * fac);
                }
            } else {
                self.stats.rejected += 1;
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn initial_step(&self, y: &[f64], f0: &[f64], span: f64) -> f64 {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        let mut sc = Vec::with_capacity(y.len());
        self.scales(y, y, &mut sc);
        for ((yi, fi), s) in y.iter().zip(f0).zip(&sc) {
            d0 = d0.max(yi.abs() / s);
            d1 = d1.max(fi.abs() / s);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        // fifth-root scaling of the tolerance keeps the first step modest
        let cap = 0.1 * span * self.opts.rtol.max(self.opts.atol).powf(0.2).max(1e-3);
        h.min(cap.max(1e-6)).min(span)
    }
}

/// Group ids pairing each moment triple of a flat moment vector.
pub fn triple_groups(len: usize, offset: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |i| offset + i / 3)
}

/// One-shot integration helper.
pub fn integrate<F>(f: &mut F, t0: f64, y0: &[f64], t1: f64, opts: RkOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut y = y0.to_vec();
    let mut t = t0;
    DormandPrince::new(opts)?.advance(f, &mut t, &mut y, t1)?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0];
            Ok(())
        };
        let y = integrate(&mut f, 0.0, &[1.0], 2.0, RkOptions::with_tol(1e-12)).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let y = integrate(&mut f, 1.0, &[1f64.sin(), 1f64.cos()], -2.0, RkOptions::with_tol(1e-12)).unwrap();
        assert!((y[0] - (-2f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-2f64).cos()).abs() < 1e-10);
    }

    #[test]
    fn zero_span_is_identity() {
        let mut calls = 0;
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            calls += 1;
            dy[0] = 1.0;
            Ok(())
        };
        let y = integrate(&mut f, 0.5, &[3.0], 0.5, RkOptions::default()).unwrap();
        assert_eq!(y, vec![3.0]);
        assert_eq!(calls, 0);
    }

    #[test]
    fn singularity_underflows() {
        // y′ = y², y(0) = 1 blows up at t = 1
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
            Ok(())
        };
        let err = integrate(&mut f, 0.0, &[1.0], 2.0, RkOptions::with_tol(1e-10)).unwrap_err();
        assert!(matches!(err, SceError::StepUnderflow { .. } | SceError::StepBudget { .. }));
    }

    #[test]
    fn rhs_errors_propagate() {
        let mut f = |t: f64, _y: &[f64], dy: &mut [f64]| {
            if t > 0.5 {
                return Err(SceError::BigBang { a: 0.0 });
            }
            dy[0] = 1.0;
            Ok(())
        };
        assert!(matches!(
            integrate(&mut f, 0.0, &[0.0], 1.0, RkOptions::default()),
            Err(SceError::BigBang { .. })
        ));
    }
}
