//! Finite-size Bethe equations, the transfer-matrix eigenvalue formula and
//! energies and momenta of Bethe states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::repkit::Spin;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const POLE_TOL: f64 = 1e-10;
const COLLISION_TOL: f64 = 1e-9;

/// A set of Bethe roots, sorted by real then imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheRoots {
    #[serde(with = "pairs")]
    pub roots: Vec<Complex64>,
}

/// Roots as JSON arrays of [re, im].
mod pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl BetheRoots {
    pub fn new(mut roots: Vec<Complex64>) -> Result<BetheRoots> {
        sort_roots(&mut roots);
        for w in roots.windows(2) {
            if (w[0] - w[1]).norm() < COLLISION_TOL {
                return Err(Error::Numeric(format!("coinciding roots near {}", w[0])));
            }
        }
        Ok(BetheRoots { roots })
    }

    pub fn m(&self) -> usize {
        self.roots.len()
    }
}

fn sort_roots(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// (spin, multiplicity Lρ_s) pairs.
fn site_counts(spec: &ChainSpec) -> Vec<(f64, i32)> {
    spec.distinct
        .iter()
        .map(|s| {
            let n = spec.sites().iter().filter(|x| *x == s).count();
            (s.value(), n as i32)
        })
        .collect()
}

fn check_poles(spec: &ChainSpec, roots: &[Complex64]) -> Result<()> {
    for (n, &l) in roots.iter().enumerate() {
        for s in &spec.distinct {
            let is = I * s.value();
            if (l - is).norm() < POLE_TOL || (l + is).norm() < POLE_TOL {
                return Err(Error::Pole(format!("root {l} sits on ±i{}", s.value())));
            }
        }
        for (p, &m) in roots.iter().enumerate() {
            if p != n && ((l - m - I).norm() < POLE_TOL || (l - m + I).norm() < POLE_TOL) {
                return Err(Error::Pole(format!("roots {l} and {m} differ by ±i")));
            }
        }
    }
    Ok(())
}

/// ln of LHS_n / RHS_n with the principal branch of the ratio.
fn log_ratio(counts: &[(f64, i32)], roots: &[Complex64]) -> Vec<Complex64> {
    roots
        .iter()
        .enumerate()
        .map(|(n, &l)| {
            let mut ratio = Complex64::new(1.0, 0.0);
            for &(s, c) in counts {
                ratio *= ((l + I * s) / (l - I * s)).powi(c);
            }
            for (p, &m) in roots.iter().enumerate() {
                if p != n {
                    let d = l - m;
                    ratio *= (d - I) / (d + I);
                }
            }
            ratio.ln()
        })
        .collect()
}

/// LHS·RHS^{-1} − 1 for each equation, where the p = n factor of the pairing
/// product equals −1 and cancels the explicit sign.
pub fn bethe_residual(spec: &ChainSpec, roots: &[Complex64]) -> Result<Vec<Complex64>> {
    check_poles(spec, roots)?;
    let counts = site_counts(spec);
    Ok(log_ratio(&counts, roots).into_iter().map(|g| g.exp() - 1.0).collect())
}

fn jacobian(counts: &[(f64, i32)], roots: &[Complex64]) -> DMatrix<Complex64> {
    let m = roots.len();
    let mut jac = DMatrix::zeros(m, m);
    for n in 0..m {
        let l = roots[n];
        let mut diag = Complex64::new(0.0, 0.0);
        for &(s, c) in counts {
            diag += (1.0 / (l + I * s) - 1.0 / (l - I * s)) * c as f64;
        }
        for p in 0..m {
            if p == n {
                continue;
            }
            let d = l - roots[p];
            let k = 1.0 / (d - I) - 1.0 / (d + I);
            diag += k;
            jac[(n, p)] = -k;
        }
        jac[(n, n)] = diag;
    }
    jac
}

fn residual_norm(counts: &[(f64, i32)], roots: &[Complex64]) -> f64 {
    log_ratio(counts, roots).iter().fold(0.0, |a, g| a.max((g.exp() - 1.0).norm()))
}

/// Damped Newton on the logarithmic Bethe equations.
pub fn solve_bethe(spec: &ChainSpec, m: usize, seeds: &[Complex64]) -> Result<BetheRoots> {
    if m == 0 {
        return Err(Error::Validation("solve_bethe needs M ≥ 1".into()));
    }
    if seeds.len() != m {
        return Err(Error::Validation(format!("expected {m} seeds, got {}", seeds.len())));
    }
    check_poles(spec, seeds)?;
    let counts = site_counts(spec);
    let mut x: Vec<Complex64> = seeds.to_vec();
    let mut norm = residual_norm(&counts, &x);
    for _ in 0..200 {
        if norm < 1e-10 {
            break;
        }
        let g = DVector::from_vec(log_ratio(&counts, &x));
        let jac = jacobian(&counts, &x);
        let step = jac
            .lu()
            .solve(&(-g))
            .ok_or_else(|| Error::Numeric("singular Bethe Jacobian".into()))?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let trial: Vec<Complex64> = x.iter().zip(step.iter()).map(|(a, d)| a + d * t).collect();
            if check_poles(spec, &trial).is_ok() {
                let tn = residual_norm(&counts, &trial);
                if tn.is_finite() && tn < norm * (1.0 - 1e-4 * t) {
                    x = trial;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Numeric(format!("Newton stalled at residual {norm:.3e}")));
        }
    }
    if !(norm < 1e-10) {
        return Err(Error::Numeric(format!("no convergence after 200 iterations (residual {norm:.3e})")));
    }
    BetheRoots::new(x)
}

/// C_α^(s)(u) for α < 2s; C_{2s} = 1.
fn c_alpha(counts: &[(f64, i32)], s: f64, two_s: u32, alpha: u32, u: Complex64) -> Result<Complex64> {
    let mut c = Complex64::new(1.0, 0.0);
    for k in alpha..two_s {
        let k = k as f64;
        for &(sp, n) in counts {
            let den = u + I * (k - s + sp + 1.0);
            if den.norm() < 1e-9 {
                return Err(Error::Pole(format!("u = {u} is a pole of C_α")));
            }
            c *= ((u + I * (k - s - sp + 1.0)) / den).powi(n);
        }
    }
    Ok(c)
}

/// Eigenvalue τ^(s)(u) of the transfer matrix on a Bethe state.
///
/// The factors that cancel between numerator and denominator at α = 0 and
/// α = 2s are removed analytically.
pub fn tau_eigenvalue(spec: &ChainSpec, s: Spin, u: Complex64, roots: &[Complex64]) -> Result<Complex64> {
    let counts = site_counts(spec);
    let sv = s.value();
    let two_s = s.doubled;
    let mut tau = Complex64::new(0.0, 0.0);
    for alpha in 0..=two_s {
        let a = alpha as f64;
        let mut term = c_alpha(&counts, sv, two_s, alpha, u)?;
        for &l in roots {
            let x = u - l;
            let mut num = vec![x + I * (sv + 1.0), x - I * sv];
            let mut den = vec![x + I * (a - sv + 1.0), x + I * (a - sv)];
            if alpha == 0 {
                num.remove(1);
                den.remove(1);
            }
            if alpha == two_s {
                num.remove(0);
                den.remove(0);
            }
            for d in &den {
                if d.norm() < 1e-9 {
                    return Err(Error::Pole(format!("u = {u} hits a pole at root {l}")));
                }
            }
            term *= num.iter().product::<Complex64>() / den.iter().product::<Complex64>();
        }
        tau += term;
    }
    Ok(tau)
}

/// Energies E^(s) for every s ∈ S and momentum in [0, 2π/L0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMomentum {
    /// (spin, E^(s)), aligned with the distinct spins.
    pub energies: Vec<(Spin, f64)>,
    pub momentum: f64,
}

pub fn energy_momentum(spec: &ChainSpec, roots: &[Complex64]) -> Result<EnergyMomentum> {
    check_poles(spec, roots)?;
    let mut energies = Vec::new();
    for s in &spec.distinct {
        let sv = s.value();
        let e: Complex64 = roots.iter().map(|&l| -2.0 * sv / (l * l + sv * sv)).sum();
        if e.im.abs() > 1e-9 {
            return Err(Error::Numeric(format!("energy has imaginary part {:.3e}", e.im)));
        }
        energies.push((*s, e.re));
    }
    let l0 = spec.l0() as f64;
    let mut z = Complex64::new(1.0, 0.0);
    for s in &spec.motif {
        let sv = s.value();
        for &l in roots {
            z *= (l + I * sv) / (l - I * sv);
        }
    }
    if (z.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Numeric(format!("shift eigenvalue has modulus {}", z.norm())));
    }
    let period = std::f64::consts::TAU / l0;
    let mut p = (-z.arg() / l0).rem_euclid(period);
    if period - p < 1e-12 {
        p = 0.0;
    }
    Ok(EnergyMomentum { energies, momentum: p })
}

/// S = S_0 − M.
pub fn total_spin(spec: &ChainSpec, m: usize) -> Rational64 {
    spec.s0() - Rational64::from_integer(m as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{diagonalize, hamiltonian, transfer_matrix};

    fn spec(motif: &[u32], repeats: usize) -> ChainSpec {
        ChainSpec::new(motif.iter().map(|&d| Spin::from_doubled(d)).collect(), repeats).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn test_residual_examples() {
        let s = spec(&[1], 2);
        let r = bethe_residual(&s, &[c(0.0)]).unwrap();
        assert!(r[0].norm() < 1e-15);
        assert!(bethe_residual(&s, &[]).unwrap().is_empty());
        assert!(bethe_residual(&s, &[c(0.3)]).unwrap()[0].norm() > 0.1);
        assert!(matches!(bethe_residual(&s, &[Complex64::new(0.0, 0.5)]), Err(Error::Pole(_))));
    }

    #[test]
    fn test_solve_examples() {
        let s = spec(&[1], 2);
        let r = solve_bethe(&s, 1, &[c(0.1)]).unwrap();
        assert!(r.roots[0].norm() < 1e-10);

        let s4 = spec(&[1], 4);
        let r = solve_bethe(&s4, 2, &[c(-0.3), c(0.3)]).unwrap();
        assert!((r.roots[0] + r.roots[1]).norm() < 1e-10);
        assert!(r.roots.iter().all(|z| z.im.abs() < 1e-10));
        let e = energy_momentum(&s4, &r.roots).unwrap().energies[0].1;
        let h = diagonalize(&hamiltonian(&s4, Spin::HALF).unwrap()).unwrap();
        assert!((e - h.eigenvalues[0].re).abs() < 1e-7);

        assert!(matches!(solve_bethe(&s, 1, &[Complex64::new(0.0, 0.5)]), Err(Error::Pole(_))));
        assert!(matches!(solve_bethe(&s, 2, &[c(0.1)]), Err(Error::Validation(_))));
    }

    #[test]
    fn test_solver_idempotent() {
        let s = spec(&[1], 6);
        let r = solve_bethe(&s, 3, &[c(-0.8), c(0.0), c(0.8)]).unwrap();
        let again = solve_bethe(&s, 3, &r.roots).unwrap();
        for (a, b) in r.roots.iter().zip(&again.roots) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn test_tau_two_sites() {
        let s = spec(&[1], 2);
        for u in [c(0.37), Complex64::new(-0.4, 0.2)] {
            let tau = tau_eigenvalue(&s, Spin::HALF, u, &[c(0.0)]).unwrap();
            let sp = diagonalize(&transfer_matrix(&s, Spin::HALF, u).unwrap()).unwrap();
            let best = sp.eigenvalues.iter().map(|e| (e - tau).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-8, "{best}");
        }
        // pseudo-vacuum: ferromagnetic state, eigenvalue of t on |↑↑⟩
        let u = c(0.6);
        let tau = tau_eigenvalue(&s, Spin::HALF, u, &[]).unwrap();
        let t = transfer_matrix(&s, Spin::HALF, u).unwrap();
        assert!((t.mat[(0, 0)] - tau).norm() < 1e-12);
    }

    #[test]
    fn test_tau_pole_cancellation() {
        let s = spec(&[1], 4);
        let r = solve_bethe(&s, 2, &[c(-0.3), c(0.3)]).unwrap();
        let at = r.roots[0] + I * 0.5;
        let eps = 1e-7;
        let lo = tau_eigenvalue(&s, Spin::HALF, at - eps, &r.roots).unwrap();
        let hi = tau_eigenvalue(&s, Spin::HALF, at + eps, &r.roots).unwrap();
        assert!((lo - hi).norm() < 1e-6);
    }

    #[test]
    fn test_energy_momentum() {
        let s = spec(&[1], 2);
        let em = energy_momentum(&s, &[c(0.0)]).unwrap();
        assert!((em.energies[0].1 + 4.0).abs() < 1e-14);
        assert!((em.momentum - std::f64::consts::PI).abs() < 1e-14);
        let em = energy_momentum(&s, &[]).unwrap();
        assert_eq!(em.energies[0].1, 0.0);
        assert_eq!(em.momentum, 0.0);

        // E^(s) = i d/du ln τ^(s) at 0
        let s6 = spec(&[1], 6);
        let r = solve_bethe(&s6, 3, &[c(-0.8), c(0.0), c(0.8)]).unwrap();
        let h = 1e-5;
        let tau = |u: f64| tau_eigenvalue(&s6, Spin::HALF, c(u), &r.roots).unwrap();
        let d = (tau(h) - tau(-h)) / (2.0 * h * tau(0.0));
        let e = energy_momentum(&s6, &r.roots).unwrap().energies[0].1;
        assert!(((I * d).re - e).abs() < 1e-7);
        for l in &r.roots {
            assert!(-1.0 / (l.re * l.re + 0.25) < 0.0);
        }
    }

    #[test]
    fn test_total_spin() {
        assert_eq!(total_spin(&spec(&[1], 2), 1), Rational64::from_integer(0));
        assert_eq!(total_spin(&spec(&[1, 2], 2), 0), Rational64::from_integer(3));
        let s = spec(&[1, 2], 2);
        assert_eq!(total_spin(&s, 3), Rational64::from_integer(0));
    }

    #[test]
    fn test_roots_json() {
        let r = BetheRoots::new(vec![Complex64::new(0.5, -0.25), c(-1.0)]).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"roots":[[-1.0,0.0],[0.5,-0.25]]}"#);
        let back: BetheRoots = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(BetheRoots::new(vec![c(0.1), c(0.1)]).is_err());
    }
}
