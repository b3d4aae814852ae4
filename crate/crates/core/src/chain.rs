//! L0-regular spin chains: description, transfer matrices, shift and
//! momentum operators, Hamiltonians and dense spectra.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repkit::{fused_r, spin_rep, DenseOperator, Spin};

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_CAP: u128 = 4096;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A validated L0-regular chain: the motif repeated `repeats` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub motif: Vec<Spin>,
    pub repeats: usize,
    /// Distinct spins s̄_1 < ... < s̄_n.
    pub distinct: Vec<Spin>,
    /// ρ_j = L_{s̄_j}/L0, aligned with `distinct`.
    pub densities: Vec<Rational64>,
    /// periods[j] = 2(s̄_{j+1} − s̄_j) = π/ħ_j for j = 0..n−1; ħ_n = 0.
    periods: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpinJson {
    Text(String),
    Int(u32),
}

#[derive(Serialize, Deserialize)]
struct ChainSpecJson {
    motif: Vec<SpinJson>,
    repeats: usize,
}

impl ChainSpec {
    /// Builds a spec with the default dimension cap.
    pub fn new(motif: Vec<Spin>, repeats: usize) -> Result<ChainSpec> {
        ChainSpec::with_cap(motif, repeats, DEFAULT_CAP)
    }

    pub fn with_cap(motif: Vec<Spin>, repeats: usize, cap: u128) -> Result<ChainSpec> {
        if motif.is_empty() {
            return Err(Error::Validation("empty motif".into()));
        }
        if repeats == 0 {
            return Err(Error::Validation("repeats must be positive".into()));
        }
        for s in &motif {
            Spin::checked(s.doubled)?;
        }
        let mut dim: u128 = 1;
        for _ in 0..repeats {
            for s in &motif {
                dim = dim.saturating_mul(s.dim() as u128);
            }
        }
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let mut counts: BTreeMap<Spin, i64> = BTreeMap::new();
        for s in &motif {
            *counts.entry(*s).or_default() += 1;
        }
        let l0 = motif.len() as i64;
        let distinct: Vec<Spin> = counts.keys().copied().collect();
        let densities = counts.values().map(|&c| Rational64::new(c, l0)).collect();
        let mut periods = Vec::with_capacity(distinct.len());
        let mut prev = 0;
        for s in &distinct {
            periods.push(s.doubled - prev);
            prev = s.doubled;
        }
        Ok(ChainSpec { motif, repeats, distinct, densities, periods })
    }

    pub fn from_json(text: &str) -> Result<ChainSpec> {
        ChainSpec::from_json_with_cap(text, DEFAULT_CAP)
    }

    pub fn from_json_with_cap(text: &str, cap: u128) -> Result<ChainSpec> {
        let raw: ChainSpecJson =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("chain spec: {e}")))?;
        let motif = raw
            .motif
            .iter()
            .map(|s| match s {
                SpinJson::Text(t) => t.parse(),
                SpinJson::Int(n) => Spin::checked(2 * n),
            })
            .collect::<Result<Vec<_>>>()?;
        ChainSpec::with_cap(motif, raw.repeats, cap)
    }

    pub fn to_json(&self) -> String {
        let raw = ChainSpecJson {
            motif: self.motif.iter().map(|s| SpinJson::Text(s.to_string())).collect(),
            repeats: self.repeats,
        };
        serde_json::to_string(&raw).expect("plain struct serializes")
    }

    pub fn l0(&self) -> usize {
        self.motif.len()
    }

    /// Chain length L.
    pub fn length(&self) -> usize {
        self.repeats * self.motif.len()
    }

    /// Site spins s_1..s_L.
    pub fn sites(&self) -> Vec<Spin> {
        (0..self.repeats).flat_map(|_| self.motif.iter().copied()).collect()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.sites().iter().map(|s| s.dim()).product()
    }

    /// Number of distinct spins.
    pub fn n_distinct(&self) -> usize {
        self.distinct.len()
    }

    /// s̄_j for j = 0..=n, with s̄_0 = 0; j = n+1 is infinite and not representable.
    pub fn sbar(&self, j: usize) -> Spin {
        if j == 0 {
            Spin::from_doubled(0)
        } else {
            self.distinct[j - 1]
        }
    }

    /// ρ_j for j = 1..=n.
    pub fn rho(&self, j: usize) -> Rational64 {
        self.densities[j - 1]
    }

    /// π/ħ_j for j = 0..n−1; `None` for j = n where ħ_n = 0.
    pub fn period(&self, j: usize) -> Option<u32> {
        self.periods.get(j).copied()
    }

    /// ħ_j = π/(2(s̄_{j+1} − s̄_j)); zero for the last index.
    pub fn hbar(&self, j: usize) -> f64 {
        match self.period(j) {
            Some(p) => std::f64::consts::PI / p as f64,
            None => 0.0,
        }
    }

    /// Gap set R_j: half-integers strictly between s̄_j and s̄_{j+1}. The last
    /// set is infinite and is truncated at `max_doubled`.
    pub fn gap_set(&self, j: usize, max_doubled: u32) -> Vec<Spin> {
        let lo = self.sbar(j).doubled;
        let hi = if j < self.n_distinct() { self.sbar(j + 1).doubled } else { max_doubled + 1 };
        (lo + 1..hi).map(Spin::from_doubled).collect()
    }

    /// Index j (1-based) of a spin in the distinct set.
    pub fn index_of(&self, s: Spin) -> Result<usize> {
        self.distinct
            .iter()
            .position(|&x| x == s)
            .map(|p| p + 1)
            .ok_or_else(|| Error::Domain(format!("spin {s} is not in the chain")))
    }

    /// S_0 = L Σ_j s̄_j ρ_j.
    pub fn s0(&self) -> Rational64 {
        self.sites().iter().map(|s| s.rational()).sum()
    }
}

/// Sorted spectrum of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    pub dimension: usize,
}

/// t^(s)(u) = tr_0 R_{01}(u) ... R_{0L}(u).
pub fn transfer_matrix(spec: &ChainSpec, s: Spin, u: Complex64) -> Result<DenseOperator> {
    spec.index_of(s)?;
    transfer_any_aux(spec, s, u)
}

/// Transfer matrix with an arbitrary auxiliary spin (not restricted to S).
pub fn transfer_any_aux(spec: &ChainSpec, s: Spin, u: Complex64) -> Result<DenseOperator> {
    let sites = spec.sites();
    let da = s.dim();
    let mut cache: BTreeMap<Spin, DMatrix<Complex64>> = BTreeMap::new();
    for site in &sites {
        if !cache.contains_key(site) {
            cache.insert(*site, fused_r(s, *site, u)?.mat);
        }
    }
    // block(r, α, β): the site operator ⟨α|R|β⟩
    let block = |r: &DMatrix<Complex64>, di: usize, a: usize, b: usize| {
        r.view((a * di, b * di), (di, di)).into_owned()
    };
    let first = &cache[&sites[0]];
    let d1 = sites[0].dim();
    if sites.len() == 1 {
        let mut t = DMatrix::zeros(d1, d1);
        for a in 0..da {
            t += block(first, d1, a, a);
        }
        return DenseOperator::new(t, vec![d1]);
    }
    // acc[a0][b]: operator on the sites processed so far
    let mut acc: Vec<Vec<DMatrix<Complex64>>> =
        (0..da).map(|a| (0..da).map(|b| block(first, d1, a, b)).collect()).collect();
    for site in &sites[1..sites.len() - 1] {
        let r = &cache[site];
        let di = site.dim();
        let blocks: Vec<Vec<DMatrix<Complex64>>> =
            (0..da).map(|b| (0..da).map(|g| block(r, di, b, g)).collect()).collect();
        let n = acc[0][0].nrows() * di;
        let mut next = vec![vec![DMatrix::zeros(n, n); da]; da];
        for a0 in 0..da {
            for g in 0..da {
                for b in 0..da {
                    next[a0][g] += acc[a0][b].kronecker(&blocks[b][g]);
                }
            }
        }
        acc = next;
    }
    let last = sites[sites.len() - 1];
    let r = &cache[&last];
    let dl = last.dim();
    let n = acc[0][0].nrows() * dl;
    let mut t = DMatrix::zeros(n, n);
    for a0 in 0..da {
        for b in 0..da {
            t += acc[a0][b].kronecker(&block(r, dl, b, a0));
        }
    }
    DenseOperator::new(t, sites.iter().map(|s| s.dim()).collect())
}

/// Product t^(s_1)(u_1) ... t^(s_L0)(u_L0) over the motif spins.
pub fn composite_transfer(spec: &ChainSpec, u_list: &[Complex64]) -> Result<DenseOperator> {
    if u_list.len() != spec.l0() {
        return Err(Error::Validation(format!(
            "expected {} spectral parameters, got {}",
            spec.l0(),
            u_list.len()
        )));
    }
    let mut out = DenseOperator::identity(spec.sites().iter().map(|s| s.dim()).collect());
    for (s, u) in spec.motif.iter().zip(u_list) {
        out = out.mul(&transfer_any_aux(spec, *s, *u)?);
    }
    Ok(out)
}

/// Richardson-extrapolated central difference of a matrix-valued function at 0.
fn derivative_at_zero<F>(f: F) -> Result<DMatrix<Complex64>>
where
    F: Fn(f64) -> Result<DMatrix<Complex64>>,
{
    let h = 1e-5;
    let d = |h: f64| -> Result<DMatrix<Complex64>> { Ok((f(h)? - f(-h)?) / Complex64::new(2.0 * h, 0.0)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((fine * Complex64::new(4.0, 0.0) - coarse) / Complex64::new(3.0, 0.0))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse with a 1-norm condition-number guard.
fn guarded_inverse(m: &DMatrix<Complex64>, what: &str) -> Result<DMatrix<Complex64>> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric(format!("{what} is singular")))?;
    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() || cond > 1e8 {
        return Err(Error::Numeric(format!("{what} is ill-conditioned (cond ≈ {cond:.3e})")));
    }
    Ok(inv)
}

fn hermitian_part(m: &DMatrix<Complex64>, what: &str) -> Result<DMatrix<Complex64>> {
    let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let skew = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if skew > 1e-8 * scale {
        return Err(Error::Numeric(format!("{what} is not Hermitian (residual {skew:.3e})")));
    }
    Ok((m + m.adjoint()) * Complex64::new(0.5, 0.0))
}

/// H^(s) = i t^(s)(0)^{-1} t^(s)′(0).
pub fn hamiltonian(spec: &ChainSpec, s: Spin) -> Result<DenseOperator> {
    spec.index_of(s)?;
    let t0 = transfer_any_aux(spec, s, Complex64::new(0.0, 0.0))?;
    let dt = derivative_at_zero(|h| Ok(transfer_any_aux(spec, s, Complex64::new(h, 0.0))?.mat))?;
    let inv = guarded_inverse(&t0.mat, "t(0)")?;
    let h = inv * dt * I;
    DenseOperator::new(hermitian_part(&h, "H")?, t0.factor_dims)
}

/// θ_s = Σ_j δ_{s,s_j} α_j, aligned with `spec.distinct`.
pub fn theta(spec: &ChainSpec, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != spec.l0() {
        return Err(Error::Validation(format!("expected {} weights, got {}", spec.l0(), alpha.len())));
    }
    let mut th = vec![0.0; spec.n_distinct()];
    for (s, a) in spec.motif.iter().zip(alpha) {
        th[spec.index_of(*s)? - 1] += a;
    }
    Ok(th)
}

/// General Hamiltonian H = Σ_s θ_s H^(s), cross-checked against the gradient
/// of ln of the composite transfer matrix. Non-positive θ_s is rejected unless
/// `allow_nonpositive` is set.
pub fn general_hamiltonian(spec: &ChainSpec, alpha: &[f64], allow_nonpositive: bool) -> Result<DenseOperator> {
    let th = theta(spec, alpha)?;
    if !allow_nonpositive && th.iter().any(|&x| x <= 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {th:?}")));
    }
    let dims: Vec<usize> = spec.sites().iter().map(|s| s.dim()).collect();
    let n = spec.hilbert_dim();
    let mut sum = DMatrix::zeros(n, n);
    for (j, s) in spec.distinct.iter().enumerate() {
        if th[j] != 0.0 {
            sum += hamiltonian(spec, *s)?.mat * Complex64::new(th[j], 0.0);
        }
    }
    let zero = vec![Complex64::new(0.0, 0.0); spec.l0()];
    let t0 = composite_transfer(spec, &zero)?;
    let inv = guarded_inverse(&t0.mat, "composite t(0)")?;
    let mut grad = DMatrix::zeros(n, n);
    for (j, a) in alpha.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let dj = derivative_at_zero(|h| {
            let mut u = zero.clone();
            u[j] = Complex64::new(h, 0.0);
            Ok(composite_transfer(spec, &u)?.mat)
        })?;
        grad += dj * Complex64::new(*a, 0.0);
    }
    let h_grad = inv * grad * I;
    let diff = (&h_grad - &sum).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if diff > 1e-7 {
        return Err(Error::Numeric(format!("gradient and θ-sum Hamiltonians differ by {diff:.3e}")));
    }
    DenseOperator::new(sum, dims)
}

/// p̂ with S_{L0} = exp(−i L0 p̂), eigenvalues in [0, 2π/L0).
///
/// S_{L0}^{L/L0} = 1, so p̂ is assembled from the spectral projectors
/// (1/n) Σ_m ω^{−km} S^m instead of a matrix logarithm.
pub fn momentum_operator(spec: &ChainSpec) -> Result<DenseOperator> {
    let zero = vec![Complex64::new(0.0, 0.0); spec.l0()];
    let shift = composite_transfer(spec, &zero)?;
    let n = spec.repeats;
    let dim = shift.dim();
    let unitary = (&shift.mat * shift.mat.adjoint() - DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if unitary > 1e-10 {
        return Err(Error::Numeric(format!("shift operator is not unitary ({unitary:.3e})")));
    }
    let mut powers = vec![DMatrix::<Complex64>::identity(dim, dim)];
    for m in 1..=n {
        powers.push(&powers[m - 1] * &shift.mat);
    }
    let cyc = (&powers[n] - DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if cyc > 1e-8 {
        return Err(Error::Numeric(format!("shift operator does not cycle ({cyc:.3e})")));
    }
    let l0 = spec.l0() as f64;
    let tau = std::f64::consts::TAU;
    let mut p = DMatrix::zeros(dim, dim);
    for k in 0..n {
        // eigenvalue ω^k = e^{2πik/n} = e^{−i L0 p_k}
        let pk = tau / l0 * (((n - k) % n) as f64) / n as f64;
        if pk == 0.0 {
            continue;
        }
        let mut proj = DMatrix::zeros(dim, dim);
        for (m, pw) in powers.iter().take(n).enumerate() {
            let phase = Complex64::from_polar(1.0 / n as f64, -tau * (k * m) as f64 / n as f64);
            proj += pw * phase;
        }
        p += proj * Complex64::new(pk, 0.0);
    }
    DenseOperator::new(hermitian_part(&p, "momentum")?, shift.factor_dims)
}

/// Total gl(2) generators (e3, e+, e−) on the chain.
pub fn total_generators(spec: &ChainSpec) -> (DenseOperator, DenseOperator, DenseOperator) {
    let sites = spec.sites();
    let dims: Vec<usize> = sites.iter().map(|s| s.dim()).collect();
    let n: usize = dims.iter().product();
    let mut out = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    for (i, s) in sites.iter().enumerate() {
        let rep = spin_rep(*s);
        for (k, g) in [&rep.e3, &rep.e_plus, &rep.e_minus].into_iter().enumerate() {
            let mut m = DMatrix::<Complex64>::identity(1, 1);
            for (j, d) in dims.iter().enumerate() {
                m = if j == i { m.kronecker(&g.mat) } else { m.kronecker(&DMatrix::identity(*d, *d)) };
            }
            out[k] += m;
        }
    }
    let [a, b, c] = out;
    (
        DenseOperator { mat: a, factor_dims: dims.clone() },
        DenseOperator { mat: b, factor_dims: dims.clone() },
        DenseOperator { mat: c, factor_dims: dims },
    )
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Dense spectrum; Hermitian inputs get real eigenvalues sorted ascending.
pub fn diagonalize(op: &DenseOperator) -> Result<SpectrumResult> {
    diagonalize_with_cap(op, DEFAULT_CAP as usize)
}

pub fn diagonalize_with_cap(op: &DenseOperator, cap: usize) -> Result<SpectrumResult> {
    let n = op.dim();
    if n > cap {
        return Err(Error::DimensionCap { dim: n as u128, cap: cap as u128 });
    }
    let scale = op.max_norm().max(1.0);
    let skew = (&op.mat - op.mat.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut eig: Vec<Complex64> = if skew <= 1e-10 * scale {
        let h = (&op.mat + op.mat.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().map(|&x| Complex64::new(x, 0.0)).collect()
    } else {
        let schur = nalgebra::Schur::try_new(op.mat.clone(), 1e-14 * scale, 10_000)
            .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
        let (_, t) = schur.unpack();
        (0..n).map(|i| t[(i, i)]).collect()
    };
    sort_complex(&mut eig);
    Ok(SpectrumResult { eigenvalues: eig, dimension: n })
}
