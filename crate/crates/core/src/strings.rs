//! String configurations, logarithmic Bethe equations for string centers,
//! valences, and the completeness count.
//!
//! Half-integer quantities are stored doubled: a string of length 2m is keyed
//! by `d = 2m`, and quantum numbers are kept as `2Q`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bethe::{energy_momentum, solve_bethe, BetheRoots};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::special_functions::{phi, phi_prime};

/// ν: doubled string length → number of strings.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StringConfig {
    pub nu: BTreeMap<u32, usize>,
}

impl StringConfig {
    pub fn new(nu: BTreeMap<u32, usize>) -> StringConfig {
        StringConfig { nu: nu.into_iter().filter(|&(_, n)| n > 0).collect() }
    }

    pub fn count(&self, d: u32) -> usize {
        self.nu.get(&d).copied().unwrap_or(0)
    }

    /// M = 2 Σ m ν_m.
    pub fn m_total(&self) -> usize {
        self.nu.iter().map(|(&d, &n)| d as usize * n).sum()
    }

    /// The vacuum ν_s = Lρ_s/2 on S, or `None` when Lρ_s is odd.
    pub fn vacuum(spec: &ChainSpec) -> Option<StringConfig> {
        let mut nu = BTreeMap::new();
        for s in &spec.distinct {
            let n = spec.sites().iter().filter(|x| *x == s).count();
            if n % 2 != 0 {
                return None;
            }
            nu.insert(s.doubled, n / 2);
        }
        Some(StringConfig::new(nu))
    }
}

/// Doubled quantum numbers 2Q_{m,k}, increasing in k.
pub type QuantumNumbers = BTreeMap<u32, Vec<i64>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiKernels {
    pub phi_p_m: f64,
    pub phi2_p_m: f64,
    pub psi_p_m: f64,
    pub psi2_p_m: f64,
}

/// Indices r (as integers) entering Φ_p^(m), p an integer and d = 2m.
fn phi_indices(p: u32, d: u32) -> Vec<u32> {
    let p = p as i64;
    let d = d as i64;
    let mut out = Vec::new();
    let mut r = (p - d + 1).abs() + 2;
    while r <= p + d - 1 {
        out.push(r as u32);
        r += 2;
    }
    if p > d - 1 {
        out.push((p - d + 1) as u32);
    }
    out
}

/// (index, weight) pairs entering Φ_2^(p,m) with dp = 2p, dm = 2m.
pub(crate) fn phi2_indices(dp: u32, dm: u32) -> Vec<(u32, f64)> {
    let lo = dp.abs_diff(dm);
    let hi = dp + dm;
    let mut out = vec![(hi, 1.0), (lo, 1.0)];
    let mut r = lo + 2;
    while r + 2 <= hi {
        out.push((r, 2.0));
        r += 2;
    }
    out
}

/// Fourier transform of Ψ_p^(m): Σ e^{−r|q|/2} over the indices of Φ_p^(m).
pub fn psi_hat(p: u32, d: u32, q: f64) -> f64 {
    phi_indices(p, d).into_iter().map(|r| (-0.5 * r as f64 * q.abs()).exp()).sum()
}

/// Fourier transform of Ψ_2^(p,m); the φ_0 term contributes nothing.
pub fn psi2_hat(dp: u32, dm: u32, q: f64) -> f64 {
    phi2_indices(dp, dm)
        .into_iter()
        .filter(|&(r, _)| r > 0)
        .map(|(r, w)| w * (-0.5 * r as f64 * q.abs()).exp())
        .sum()
}

pub fn phi_p_m(p: u32, d: u32, lambda: f64) -> f64 {
    phi_indices(p, d).into_iter().map(|r| phi(r as f64, lambda)).sum()
}

pub fn psi_p_m(p: u32, d: u32, lambda: f64) -> f64 {
    phi_indices(p, d).into_iter().map(|r| phi_prime(r as f64, lambda)).sum()
}

pub fn phi2(dp: u32, dm: u32, lambda: f64) -> f64 {
    phi2_indices(dp, dm).into_iter().map(|(r, w)| w * phi(r as f64, lambda)).sum()
}

pub fn psi2(dp: u32, dm: u32, lambda: f64) -> f64 {
    phi2_indices(dp, dm).into_iter().map(|(r, w)| w * phi_prime(r as f64, lambda)).sum()
}

/// Φ_p^(m), Φ_2^(m,m) and their derivatives, with `d = 2m`.
pub fn phi_kernels(p: u32, d: u32, lambda: f64) -> Result<PhiKernels> {
    if p == 0 || d == 0 {
        return Err(Error::Domain("Φ kernels need p ≥ 1 and m ≥ 1/2".into()));
    }
    Ok(PhiKernels {
        phi_p_m: phi_p_m(p, d, lambda),
        phi2_p_m: phi2(d, d, lambda),
        psi_p_m: psi_p_m(p, d, lambda),
        psi2_p_m: psi2(d, d, lambda),
    })
}

/// Flattened (d, k) labels in the order of the center vector.
fn labels(config: &StringConfig) -> Vec<u32> {
    config.nu.iter().flat_map(|(&d, &n)| std::iter::repeat(d).take(n)).collect()
}

/// Residual of the logarithmic string equations at each (m, k):
/// −2πQ + L Σ_s ρ_s Φ_{2s}^(m)(λ) − Σ Φ_2^(p,m)(λ − λ').
pub fn log_bethe_residual(
    spec: &ChainSpec,
    config: &StringConfig,
    centers: &BTreeMap<u32, Vec<f64>>,
    q: &QuantumNumbers,
) -> Result<Vec<f64>> {
    let (lab, x, qv) = flatten(config, centers, q)?;
    Ok(string_residual(spec, &lab, &x, &qv))
}

fn flatten(
    config: &StringConfig,
    centers: &BTreeMap<u32, Vec<f64>>,
    q: &QuantumNumbers,
) -> Result<(Vec<u32>, Vec<f64>, Vec<i64>)> {
    let lab = labels(config);
    let mut x = Vec::new();
    let mut qv = Vec::new();
    for (&d, &n) in &config.nu {
        let c = centers.get(&d).filter(|c| c.len() == n);
        let qq = q.get(&d).filter(|c| c.len() == n);
        match (c, qq) {
            (Some(c), Some(qq)) => {
                x.extend_from_slice(c);
                qv.extend_from_slice(qq);
            }
            _ => return Err(Error::Validation(format!("centers/Q do not match ν at length {d}"))),
        }
    }
    Ok((lab, x, qv))
}

fn site_counts(spec: &ChainSpec) -> Vec<(u32, f64)> {
    spec.distinct
        .iter()
        .map(|s| (s.doubled, spec.sites().iter().filter(|x| *x == s).count() as f64))
        .collect()
}

fn string_residual(spec: &ChainSpec, lab: &[u32], x: &[f64], q2: &[i64]) -> Vec<f64> {
    let counts = site_counts(spec);
    (0..x.len())
        .map(|a| {
            let mut r = -std::f64::consts::PI * q2[a] as f64;
            for &(p, n) in &counts {
                r += n * phi_p_m(p, lab[a], x[a]);
            }
            for b in 0..x.len() {
                if b != a {
                    r -= phi2(lab[b], lab[a], x[a] - x[b]);
                }
            }
            r
        })
        .collect()
}

fn string_jacobian(spec: &ChainSpec, lab: &[u32], x: &[f64]) -> DMatrix<f64> {
    let counts = site_counts(spec);
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for a in 0..n {
        let mut diag = 0.0;
        for &(p, c) in &counts {
            diag += c * psi_p_m(p, lab[a], x[a]);
        }
        for b in 0..n {
            if b != a {
                let k = psi2(lab[b], lab[a], x[a] - x[b]);
                diag -= k;
                jac[(a, b)] = k;
            }
        }
        jac[(a, a)] = diag;
    }
    jac
}

/// Newton solve of the string equations for real centers.
pub fn solve_centers(
    spec: &ChainSpec,
    config: &StringConfig,
    q: &QuantumNumbers,
) -> Result<BTreeMap<u32, Vec<f64>>> {
    let lab = labels(config);
    let mut q2 = Vec::new();
    for (&d, &n) in &config.nu {
        let qq = q.get(&d).filter(|v| v.len() == n).ok_or_else(|| {
            Error::Validation(format!("quantum numbers do not match ν at length {d}"))
        })?;
        q2.extend_from_slice(qq);
    }
    // seeds spread by the quantum numbers
    let mut x: Vec<f64> = q2.iter().map(|&v| 0.25 * v as f64).collect();
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut res = string_residual(spec, &lab, &x, &q2);
    let mut nrm = norm(&res);
    for _ in 0..200 {
        if nrm < 1e-12 {
            break;
        }
        let jac = string_jacobian(spec, &lab, &x);
        let step = jac
            .lu()
            .solve(&(-DVector::from_vec(res.clone())))
            .ok_or_else(|| Error::Numeric("singular string Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let tr = string_residual(spec, &lab, &trial, &q2);
            if norm(&tr) < nrm * (1.0 - 1e-4 * t) {
                x = trial;
                res = tr;
                nrm = norm(&res);
                break;
            }
            t *= 0.5;
            if t < 1e-8 {
                return Err(Error::Numeric(format!("string Newton stalled at {nrm:.3e}")));
            }
        }
    }
    if !(nrm < 1e-10) {
        return Err(Error::Numeric(format!("string Newton did not converge ({nrm:.3e})")));
    }
    let mut out = BTreeMap::new();
    let mut i = 0;
    for (&d, &n) in &config.nu {
        out.insert(d, x[i..i + n].to_vec());
        i += n;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Valence {
    pub p_m: i64,
    /// 2Q_{m,max} = P_m − 1.
    pub q_max_doubled: i64,
}

/// P_m(ν) = 2 Σ_i min(m, s_i) − 4 Σ_n min(m, n) ν_n + ν_m, with `d = 2m`.
pub fn valence(spec: &ChainSpec, config: &StringConfig, d: u32) -> Valence {
    let sites: i64 = spec.sites().iter().map(|s| d.min(s.doubled) as i64).sum();
    let strings: i64 = config.nu.iter().map(|(&n, &c)| 2 * d.min(n) as i64 * c as i64).sum();
    let p = sites - strings + config.count(d) as i64;
    Valence { p_m: p, q_max_doubled: p - 1 }
}

/// All partitions of M into doubled string lengths.
pub fn configurations(m: usize) -> Vec<StringConfig> {
    fn rec(left: usize, max_d: usize, cur: &mut BTreeMap<u32, usize>, out: &mut Vec<StringConfig>) {
        if left == 0 {
            out.push(StringConfig::new(cur.clone()));
            return;
        }
        for d in (1..=max_d.min(left)).rev() {
            for k in 1..=left / d {
                cur.insert(d as u32, k);
                rec(left - k * d, d - 1, cur, out);
            }
            cur.remove(&(d as u32));
        }
    }
    let mut out = Vec::new();
    rec(m, m, &mut BTreeMap::new(), &mut out);
    out
}

/// Generalized binomial a(a−1)...(a−k+1)/k! for any integer a.
pub fn binomial(a: &BigInt, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * (a - BigInt::from(i)) / BigInt::from(i + 1);
    }
    c
}

/// Number of Bethe states with M roots, counting gl(2) multiplets fully.
pub fn count_states(spec: &ChainSpec, m: usize) -> BigInt {
    let two_s0 = (spec.s0() * 2).to_integer();
    if m as i64 > two_s0 / 2 {
        return BigInt::zero();
    }
    let dmax = (2 * m as u32).max(spec.distinct.last().map_or(0, |s| s.doubled));
    let mut total = BigInt::zero();
    'configs: for config in configurations(m) {
        let mut term = BigInt::one();
        for d in 1..=dmax {
            let p = valence(spec, &config, d).p_m;
            let nu = config.count(d) as i64;
            if p < nu {
                continue 'configs;
            }
            if nu > 0 {
                term *= binomial(&BigInt::from(p), nu as usize);
            }
        }
        total += term;
    }
    total * BigInt::from(two_s0 - 2 * m as i64 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub sum: BigInt,
    pub hilbert_dim: BigInt,
    pub equal: bool,
}

pub fn completeness_check(spec: &ChainSpec) -> Completeness {
    let s0 = (spec.s0()).floor().to_integer() as usize;
    let sum: BigInt = (0..=s0).map(|m| count_states(spec, m)).sum();
    let hilbert_dim: BigInt = spec.sites().iter().map(|s| BigInt::from(s.dim())).product();
    let equal = sum == hilbert_dim;
    Completeness { sum, hilbert_dim, equal }
}

/// The exponents b_n of the generating function for a chain.
pub fn b_for_spec(spec: &ChainSpec) -> BTreeMap<usize, i64> {
    let mut b = BTreeMap::new();
    b.insert(1, -(spec.length() as i64));
    for s in &spec.distinct {
        let n = spec.sites().iter().filter(|x| *x == s).count() as i64;
        *b.entry(s.doubled as usize + 1).or_insert(0) += n;
    }
    b
}

/// Coefficients of (1−x)·Π_n (1−x^n)^{b_n} up to x^order.
pub fn generating_series(b: &BTreeMap<usize, i64>, order: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::zero(); order + 1];
    poly[0] = BigInt::one();
    let mul = |poly: &Vec<BigInt>, factor: &[BigInt]| -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); order + 1];
        for (i, a) in poly.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, f) in factor.iter().enumerate() {
                if i + j > order {
                    break;
                }
                out[i + j] += a * f;
            }
        }
        out
    };
    let mut one_minus_x = vec![BigInt::zero(); order + 1];
    one_minus_x[0] = BigInt::one();
    if order >= 1 {
        one_minus_x[1] = -BigInt::one();
    }
    poly = mul(&poly, &one_minus_x);
    for (&n, &e) in b {
        if e == 0 || n > order {
            continue;
        }
        // (1 − x^n)^e = Σ_j binom(e, j)(−1)^j x^{nj} with generalized binomials
        let mut factor = vec![BigInt::zero(); order + 1];
        let e_big = BigInt::from(e);
        let mut j = 0;
        while n * j <= order {
            let c = binomial(&e_big, j);
            factor[n * j] = if j % 2 == 0 { c } else { -c };
            j += 1;
        }
        poly = mul(&poly, &factor);
    }
    poly
}

/// Z({b}, M) by direct summation with generalized binomials of A_m(ν, b).
pub fn z_from_configs(b: &BTreeMap<usize, i64>, m: usize) -> BigInt {
    let bj = |j: usize| b.get(&j).copied().unwrap_or(0);
    let mut total = BigInt::zero();
    for config in configurations(m) {
        let mut term = BigInt::one();
        for (&d, &nu) in &config.nu {
            let d = d as i64;
            let mut a: i64 = -(1..=d).map(|j| (d - j + 1) * bj(j as usize)).sum::<i64>();
            a -= 2 * m as i64;
            for (&dn, &c) in &config.nu {
                if (dn as i64) > d {
                    a += 2 * (dn as i64 - d) * c as i64;
                }
            }
            a += nu as i64;
            term *= binomial(&BigInt::from(a), nu);
        }
        total += term;
    }
    total
}

/// Compares the series coefficients with Z({b}, M) for M ≤ m_max.
pub fn series_identity_check(b: &BTreeMap<usize, i64>, m_max: usize) -> Result<bool> {
    if m_max > 20 {
        return Err(Error::Domain("series check limited to M ≤ 20".into()));
    }
    if b.get(&1).is_none_or(|&b1| b1 >= 0) || b.iter().any(|(&n, &v)| n >= 2 && v < 0) || b.contains_key(&0) {
        return Err(Error::Domain("b must have b_1 < 0 and b_n ≥ 0 for n ≥ 2".into()));
    }
    let series = generating_series(b, m_max);
    Ok((0..=m_max).all(|m| series[m] == z_from_configs(b, m)))
}

/// A Bethe state built from string data.
#[derive(Debug, Clone, Serialize)]
pub struct ConstructedState {
    pub config: StringConfig,
    pub q: QuantumNumbers,
    pub roots: BetheRoots,
}

/// Allowed doubled quantum numbers −(P−1), −(P−1)+2, ..., P−1.
fn q_lattice(p: i64) -> Vec<i64> {
    (0..p).map(|i| -(p - 1) + 2 * i).collect()
}

fn combinations(pool: &[i64], k: usize) -> Vec<Vec<i64>> {
    fn rec(pool: &[i64], k: usize, start: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(pool, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Attempts to build every string state with M roots: string centers from the
/// logarithmic equations, then a finite-size refinement of the full root set.
/// States whose refinement fails or duplicates an earlier root set are dropped.
pub fn construct_states(spec: &ChainSpec, m: usize) -> Vec<ConstructedState> {
    let mut out: Vec<ConstructedState> = Vec::new();
    if m == 0 {
        return out;
    }
    for config in configurations(m) {
        let mut per_length: Vec<(u32, Vec<Vec<i64>>)> = Vec::new();
        let mut feasible = true;
        for (&d, &nu) in &config.nu {
            let p = valence(spec, &config, d).p_m;
            if p < nu as i64 {
                feasible = false;
                break;
            }
            per_length.push((d, combinations(&q_lattice(p), nu)));
        }
        if !feasible {
            continue;
        }
        let mut choices: Vec<QuantumNumbers> = vec![BTreeMap::new()];
        for (d, combos) in &per_length {
            let mut next = Vec::new();
            for base in &choices {
                for c in combos {
                    let mut q = base.clone();
                    q.insert(*d, c.clone());
                    next.push(q);
                }
            }
            choices = next;
        }
        for q in choices {
            let Ok(centers) = solve_centers(spec, &config, &q) else { continue };
            if let Some(state) = refine(spec, &config, &q, &centers) {
                let dup = out.iter().any(|o| {
                    o.roots.m() == state.roots.m()
                        && o.roots.roots.iter().zip(&state.roots.roots).all(|(a, b)| (a - b).norm() < 1e-7)
                });
                if !dup {
                    out.push(state);
                }
            }
        }
    }
    out
}

fn refine(
    spec: &ChainSpec,
    config: &StringConfig,
    q: &QuantumNumbers,
    centers: &BTreeMap<u32, Vec<f64>>,
) -> Option<ConstructedState> {
    let m = config.m_total();
    // small imaginary deformations keep seeds off the exact-string poles
    for shrink in [0.98, 0.9, 1.02] {
        let mut seeds = Vec::with_capacity(m);
        for (&d, cs) in centers {
            for &c in cs {
                for j in 0..d {
                    let alpha = -(d as f64) / 2.0 + 0.5 + j as f64;
                    seeds.push(Complex64::new(c + 1e-3 * alpha, alpha * shrink));
                }
            }
        }
        let Ok(roots) = solve_bethe(spec, m, &seeds) else { continue };
        if roots.roots.iter().any(|z| !(z.norm() < 1e4)) {
            continue;
        }
        if energy_momentum(spec, &roots.roots).is_err() {
            continue;
        }
        return Some(ConstructedState { config: config.clone(), q: q.clone(), roots });
    }
    None
}
