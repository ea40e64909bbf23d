//! Potential V, the generator matrices A and B, Hadamard coefficients and
//! closed-form reference moments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};
use crate::jet::TimeJet;
use crate::quadrature::GaussRule;
use crate::seqspace::{MomentVector, Triple};
use crate::special::{binomial, digamma, zeta};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub m: f64,
    pub xi: f64,
}

impl CouplingParams {
    pub fn new(m: f64, xi: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() || !xi.is_finite() {
            return Err(SceError::InvalidArgument(format!("mass must be >= 0, got {m}")));
        }
        Ok(Self { m, xi })
    }
}

/// V = (6ξ−1)a″/a + a²m² as a jet two orders shorter than `a`.
pub fn potential(a: &TimeJet, params: &CouplingParams) -> Result<TimeJet> {
    if a.value() <= 0.0 {
        return Err(SceError::Domain(format!("scale factor a = {} <= 0", a.value())));
    }
    if a.order() < 2 {
        return Err(SceError::InsufficientJetOrder { needed: 2, got: a.order() });
    }
    let a2 = a.diff().diff();
    let ratio = a2.checked_div(a)?;
    let curv = ratio.scale(6.0 * params.xi - 1.0);
    let mass = (a * a).scale(params.m * params.m);
    Ok(&curv + &mass)
}

pub fn generator_matrices(v: f64) -> (Mat3, Mat3) {
    let a = [[0.0, 2.0, 0.0], [-v, 0.0, 1.0], [0.0, -2.0 * v, 0.0]];
    let b = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
    (a, b)
}

pub fn mat_mul(x: &Mat3, y: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    out
}

/// Product of a word in A(V) and B, leftmost letter outermost. `Some(v)` is
/// A(v), `None` is B.
pub fn word_product(word: &[Option<f64>]) -> Mat3 {
    let mut out = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for letter in word {
        let (a, b) = generator_matrices(letter.unwrap_or(0.0));
        out = mat_mul(&out, if letter.is_some() { &a } else { &b });
    }
    out
}

/// ⌈(n+1)/2⌉: the most B factors a nonzero word of length n can contain.
pub fn max_b_factors(n: usize) -> usize {
    (n + 2) / 2
}

/// Induced max-norm (maximum absolute row sum).
pub fn mat_norm_inf(x: &Mat3) -> f64 {
    x.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// The closed-form bounds ‖A‖ = 2√(1+V²), ‖B‖ = 2 used in the evolution estimates.
pub fn generator_norms(v: f64) -> (f64, f64) {
    (2.0 * (1.0 + v * v).sqrt(), 2.0)
}

/// (SM)_n = A·M_n + B·M_{n+1} on flat storage, M_{N+1} = 0.
pub fn apply_generator_flat(m: &[f64], v: f64, out: &mut [f64]) {
    let len = m.len() / 3;
    for n in 0..len {
        let (pp, pf, ff) = (m[3 * n], m[3 * n + 1], m[3 * n + 2]);
        let (np, nf) = if n + 1 < len { (m[3 * n + 3], m[3 * n + 4]) } else { (0.0, 0.0) };
        out[3 * n] = 2.0 * pf;
        out[3 * n + 1] = -v * pp + ff + np;
        out[3 * n + 2] = -2.0 * v * pf + 2.0 * nf;
    }
}

pub fn apply_generator(m: &MomentVector, v: f64) -> MomentVector {
    let flat = m.flat();
    let mut out = vec![0.0; flat.len()];
    apply_generator_flat(&flat, v, &mut out);
    MomentVector::from_flat(&out).expect("finite generator output")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HadamardCoeffs {
    pub alpha: Vec<TimeJet>,
    pub beta: Vec<TimeJet>,
    /// gamma[0] is γ_{−1}; gamma[j+1] is γ_j.
    pub gamma: Vec<TimeJet>,
}

impl HadamardCoeffs {
    pub fn max_index(&self) -> usize {
        self.alpha.len() - 1
    }

    /// γ_j for j ≥ −1.
    pub fn gamma_at(&self, j: isize) -> &TimeJet {
        &self.gamma[(j + 1) as usize]
    }
}

/// α_j, β_j (j ≤ J) and γ_j (j ≤ J−1, plus γ_{−1}) from the coincidence recurrences.
pub fn hadamard_coeffs(v: &TimeJet, j_max: usize) -> Result<HadamardCoeffs> {
    if v.order() < 2 * j_max {
        return Err(SceError::InsufficientJetOrder { needed: 2 * j_max, got: v.order() });
    }
    let d = v.order();
    let half = TimeJet::constant(0.5, d);
    let mut alpha = vec![half.clone()];
    let mut beta = vec![TimeJet::constant(0.0, d)];
    let mut gamma = vec![half];
    let v1 = v.diff();
    for j in 0..j_max {
        // Σ_{i=1}^{j} (α_i γ_{j−i} − β_i β_{j−i})
        let mut sum = TimeJet::constant(0.0, d);
        for i in 1..=j {
            let t = &(&alpha[i] * &gamma[j - i + 1]) - &(&beta[i] * &beta[j - i]);
            sum = &sum + &t;
        }
        let core = &(v * &alpha[j]) + &beta[j].diff();
        gamma.push(&core.scale(0.5) - &sum);
        alpha.push(&core.scale(-0.5) - &sum);
        let b2 = beta[j].diff().diff();
        let next = &(&(&v1 * &alpha[j]).scale(-0.25) - &b2.scale(0.25)) - &(v * &beta[j]);
        beta.push(next);
    }
    Ok(HadamardCoeffs { alpha, beta, gamma })
}

/// α_{j+1} + γ_j + 2Σ_{i=1}^{j}(α_i γ_{j−i} − β_i β_{j−i}).
pub fn purity_residual(c: &HadamardCoeffs, j: usize) -> Result<TimeJet> {
    let jm = c.max_index();
    if jm == 0 || j > jm - 1 {
        return Err(SceError::IndexOutOfRange { index: j, max: jm.saturating_sub(1) });
    }
    let mut out = &c.alpha[j + 1] + c.gamma_at(j as isize);
    for i in 1..=j {
        let t = &(&c.alpha[i] * c.gamma_at((j - i) as isize)) - &(&c.beta[i] * &c.beta[j - i]);
        out = &out + &t.scale(2.0);
    }
    Ok(out)
}

/// Minkowski closed form: (α_j, γ_{j−1}) = (½·binom(−½, j), ½·binom(½, j))·m^{2j}.
pub fn minkowski_coeffs(m2: f64, j: usize) -> (f64, f64) {
    let p = m2.powi(j as i32);
    (0.5 * binomial(-0.5, j) * p, 0.5 * binomial(0.5, j) * p)
}

/// Coincidence moments of the Minkowski vacuum of mass m at length scale μ.
pub fn vacuum_moments(m: f64, mu: f64, order: usize) -> Result<MomentVector> {
    if !(m >= 0.0) || !(mu > 0.0) {
        return Err(SceError::InvalidArgument(format!("vacuum moments need m >= 0, mu > 0 (m = {m}, mu = {mu})")));
    }
    if m == 0.0 {
        return Ok(MomentVector::zeros(order));
    }
    let l = (m * mu / 2.0).ln();
    let h = m / 2.0;
    let mut entries = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let nf = n as f64;
        let psi = digamma(2.0 * nf + 2.0);
        let ff = h.powi(2 * n as i32 + 2) / (2.0 * PI * PI)
            * (l + psi - 0.5 * (digamma(nf + 1.0) + digamma(nf + 2.0)))
            * binomial(2.0 * nf + 1.0, n + 1);
        // (2n+1)!/(n!(n+2)!) = binom(2n+1, n)/(n+2)
        let pp = h.powi(2 * n as i32 + 4) / (PI * PI)
            * (l + psi - 0.5 * (digamma(nf + 1.0) + digamma(nf + 3.0)))
            * binomial(2.0 * nf + 1.0, n)
            / (nf + 2.0);
        entries.push([ff, 0.0, pp]);
    }
    MomentVector::new(entries)
}

/// Overall normalization of the thermal moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentConvention {
    /// Δ_rⁿ of the regularized kernel at coincidence; used by the field equations.
    #[default]
    PositionSpace,
    /// Momentum-space moments without the 1/(2π²) of the Fourier inversion.
    Literature,
}

/// Massless thermal moments at inverse temperature β.
pub fn thermal_moments(beta: f64, order: usize, convention: MomentConvention) -> Result<MomentVector> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SceError::InvalidArgument(format!("thermal moments need beta > 0, got {beta}")));
    }
    let norm = match convention {
        MomentConvention::PositionSpace => 1.0 / (2.0 * PI * PI),
        MomentConvention::Literature => 1.0,
    };
    let mut entries = Vec::with_capacity(order + 1);
    let mut fact = 1.0; // (2n+1)!
    for n in 0..=order {
        if n > 0 {
            fact *= (2 * n) as f64 * (2 * n + 1) as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let k = 2 * n as i32;
        let ff = sign * beta.powi(-k - 2) * zeta(2.0 * n as f64 + 2.0) * fact;
        let pp = sign * beta.powi(-k - 4) * zeta(2.0 * n as f64 + 4.0) * fact
            * (2 * n + 2) as f64
            * (2 * n + 3) as f64;
        entries.push([norm * ff, 0.0, norm * pp]);
    }
    MomentVector::new(entries)
}

/// Thermal moments of a field of mass m: the vacuum moments plus the
/// Bose–Einstein excitation integrals (−1)ⁿ/(2π²)∫k^{2n+2}δĜ dk.
pub fn massive_thermal_moments(m: f64, mu: f64, beta: f64, order: usize) -> Result<MomentVector> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SceError::InvalidArgument(format!("thermal moments need beta > 0, got {beta}")));
    }
    let vac = vacuum_moments(m, mu, order)?;
    let rule = GaussRule::new(20);
    let mut entries = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let p = 2 * n as i32 + 2;
        // cut where k^p e^{−βk} is 50 e-folds below its peak
        let peak = p as f64 / beta;
        let log_peak = p as f64 * peak.ln() - beta * peak;
        let mut kmax = 2.0 * peak + 1.0 / beta;
        while p as f64 * kmax.ln() - beta * kmax > log_peak - 50.0 {
            kmax *= 1.25;
        }
        let occ = |k: f64| {
            let w = (k * k + m * m).sqrt();
            (w, 1.0 / (beta * w).exp_m1())
        };
        let ff = rule.integrate(
            |k| {
                let (w, nb) = occ(k);
                if k == 0.0 {
                    0.0
                } else {
                    k.powi(p) * nb / w
                }
            },
            0.0,
            kmax,
            400,
        );
        let pp = rule.integrate(
            |k| {
                let (w, nb) = occ(k);
                k.powi(p) * nb * w
            },
            0.0,
            kmax,
            400,
        );
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign / (2.0 * PI * PI);
        let v = vac.get(n);
        entries.push([v[0] + c * ff, 0.0, v[2] + c * pp]);
    }
    MomentVector::new(entries)
}

pub fn triple_sub(a: &Triple, b: &Triple) -> Triple {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn flat_potential() {
        let p = CouplingParams::new(1.3, 0.7).unwrap();
        let a = TimeJet::from_derivatives(&[1.0, 0.0, 0.0, 0.0]);
        assert!(close(potential(&a, &p).unwrap().value(), 1.69, 1e-15));
        let conf = CouplingParams::new(2.0, 1.0 / 6.0).unwrap();
        let a = TimeJet::from_derivatives(&[1.5, 0.3, 7.0]);
        assert!(close(potential(&a, &conf).unwrap().value(), 9.0, 1e-14));
        let p0 = CouplingParams::new(0.0, 0.0).unwrap();
        let a = TimeJet::from_derivatives(&[2.0, 0.0, 1.0]);
        assert_eq!(potential(&a, &p0).unwrap().value(), -0.5);
        let bad = TimeJet::from_derivatives(&[0.0, 0.0, 1.0]);
        assert!(potential(&bad, &p0).is_err());
    }

    #[test]
    fn potential_derivative_matches_hand_rule() {
        // V′ = (6ξ−1)(a‴/a − a″a′/a²) + 2aa′m²
        let p = CouplingParams::new(0.8, 0.1).unwrap();
        let d = [1.2, 0.3, -0.4, 0.9, 0.2];
        let v = potential(&TimeJet::from_derivatives(&d), &p).unwrap();
        let want = (0.6 - 1.0) * (d[3] / d[0] - d[2] * d[1] / (d[0] * d[0])) + 2.0 * d[0] * d[1] * 0.64;
        assert!(close(v.derivative(1), want, 1e-14));
        assert_eq!(v.order(), 2);
    }

    #[test]
    fn generator_shape() {
        let (a, b) = generator_matrices(0.0);
        assert_eq!(a, [[0.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        let b3 = mat_mul(&mat_mul(&b, &b), &b);
        assert!(b3.iter().flatten().all(|x| *x == 0.0));
        let (na, nb) = generator_norms(3.0);
        assert!(close(na, 2.0 * 10f64.sqrt(), 1e-15));
        assert_eq!(nb, 2.0);
        // the induced row-sum norm never exceeds the closed-form bound
        for v in [-5.0, -0.3, 0.0, 0.7, 3.0, 40.0] {
            let (a, b) = generator_matrices(v);
            assert!(mat_norm_inf(&a) <= generator_norms(v).0 + 1e-15);
            assert!(mat_norm_inf(&b) <= 2.0);
        }
    }

    #[test]
    fn generator_on_single_triple() {
        let m = MomentVector::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(apply_generator(&m, 2.0).entries(), &[[0.0, -2.0, 0.0]]);
    }

    #[test]
    fn vacuum_reference_value() {
        let m = vacuum_moments(1.0, 1.0, 4).unwrap();
        let want = (0.5f64.ln() + digamma(2.0) - 0.5 * (digamma(1.0) + digamma(2.0))) / (8.0 * PI * PI);
        assert!(close(m.get(0)[0], want, 1e-14));
        // quoted to four digits as -2.4461e-3; the value is -2.44624e-3
        assert!((m.get(0)[0] + 2.4461e-3).abs() < 2e-7);
        assert!(m.entries().iter().all(|t| t[1] == 0.0));
        // M_ππ,0 = (m⁴/32π²)(¼ + log(mμ/2))
        let mu = 1.7;
        let mm = 0.9;
        let v = vacuum_moments(mm, mu, 1).unwrap();
        let want = mm.powi(4) / (32.0 * PI * PI) * (0.25 + (mm * mu / 2.0).ln());
        assert!(close(v.get(0)[2], want, 1e-14));
        assert!(vacuum_moments(0.0, 1.0, 3).unwrap().entries().iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn vacuum_is_stationary() {
        for (m, mu) in [(1.0, 1.0), (0.6, 2.5), (2.0, 0.3)] {
            let vac = vacuum_moments(m, mu, 16).unwrap();
            let s = apply_generator(&vac, m * m);
            for n in 0..16 {
                let scale = vac.get(n).iter().chain(vac.get(n + 1).iter()).fold(0.0f64, |a, x| a.max(x.abs()));
                assert!(s.get(n).iter().all(|x| x.abs() < 1e-12 * scale), "n = {n}");
            }
        }
    }

    #[test]
    fn thermal_reference_values() {
        let t = thermal_moments(1.0, 3, MomentConvention::PositionSpace).unwrap();
        assert!(close(t.get(0)[0], 1.0 / 12.0, 1e-14));
        let lit = thermal_moments(1.0, 3, MomentConvention::Literature).unwrap();
        assert!(close(lit.get(0)[2], PI.powi(4) / 15.0, 1e-14));
        assert!(close(lit.get(0)[2], 2.0 * PI * PI * t.get(0)[2], 1e-14));
        let s = apply_generator(&t, 0.0);
        for n in 0..3 {
            assert!(s.get(n).iter().all(|x| x.abs() < 1e-12 * t.get(n + 1)[0].abs()));
        }
    }

    #[test]
    fn massive_thermal_limits() {
        // massless limit reproduces the closed form
        let a = massive_thermal_moments(0.0, 1.0, 1.3, 5).unwrap();
        let b = thermal_moments(1.3, 5, MomentConvention::PositionSpace).unwrap();
        for n in 0..=5 {
            assert!(close(a.get(n)[0], b.get(n)[0], 1e-12), "n = {n}");
            assert!(close(a.get(n)[2], b.get(n)[2], 1e-12), "n = {n}");
        }
        // massive thermal state is stationary under V = m²
        let t = massive_thermal_moments(1.0, 1.0, 2.0, 10).unwrap();
        let s = apply_generator(&t, 1.0);
        for n in 0..10 {
            let scale = t.get(n + 1)[0].abs().max(t.get(n)[2].abs());
            assert!(s.get(n).iter().all(|x| x.abs() < 1e-11 * scale), "n = {n}");
        }
    }

    #[test]
    fn minkowski_hadamard() {
        let m2 = 1.3;
        let v = TimeJet::constant(m2, 24);
        let c = hadamard_coeffs(&v, 12).unwrap();
        for j in 0..=12 {
            let (a, _) = minkowski_coeffs(m2, j);
            assert!(close(c.alpha[j].value(), a, 1e-12));
            assert_eq!(c.beta[j].value(), 0.0);
        }
        for j in 1..=12 {
            let (_, g) = minkowski_coeffs(m2, j);
            assert!(close(c.gamma_at(j as isize - 1).value(), g, 1e-12));
        }
        assert!(close(c.gamma_at(0).value() - c.alpha[1].value(), m2 / 2.0, 1e-14));
        for j in 0..12 {
            assert!(purity_residual(&c, j).unwrap().value().abs() < 1e-14);
        }
        assert!(purity_residual(&c, 12).is_err());
    }

    #[test]
    fn massless_coeffs_vanish() {
        let c = hadamard_coeffs(&TimeJet::constant(0.0, 8), 4).unwrap();
        for j in 1..=4 {
            assert_eq!(c.alpha[j].value(), 0.0);
            assert_eq!(c.beta[j].value(), 0.0);
            assert_eq!(c.gamma_at(j as isize - 1).value(), 0.0);
        }
        assert_eq!(c.alpha[0].value(), 0.5);
        assert_eq!(c.gamma_at(-1).value(), 0.5);
    }

    #[test]
    fn purity_detects_perturbation() {
        let v = TimeJet::from_derivatives(&[1.0, 0.3, -0.2, 0.1, 0.05, 0.0, 0.0, 0.0, 0.0]);
        let mut c = hadamard_coeffs(&v, 4).unwrap();
        for j in 0..4 {
            assert!(purity_residual(&c, j).unwrap().value().abs() < 1e-14);
        }
        c.alpha[1] = c.alpha[1].add_scalar(1e-3);
        assert!((purity_residual(&c, 0).unwrap().value() - 1e-3).abs() < 1e-15);
        assert!(hadamard_coeffs(&v, 5).is_err());
    }
}
