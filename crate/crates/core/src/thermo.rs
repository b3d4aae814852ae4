//! Thermodynamic limit: vacuum densities, vacuum energy and momentum, excited
//! state corrections and the hole dispersion law.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::digamma;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::quad::{adaptive, PanelRule};
use crate::repkit::Spin;
use crate::special_functions::{eval_gamma_hat, eval_kappa_hat, kappa, trig_family, KernelParams};
use crate::strings::{psi2, psi2_hat, psi_hat, psi_p_m};

/// σ^(0)_s(λ) = ρ_s / (2 cosh πλ).
pub fn vacuum_density(spec: &ChainSpec, s: Spin, lambda: f64) -> Result<f64> {
    let j = spec.index_of(s)?;
    Ok(rho_f64(spec, j) * sigma0(lambda))
}

/// 1/(2 cosh πλ) without overflow.
pub fn sigma0(lambda: f64) -> f64 {
    let e = (-PI * lambda.abs()).exp();
    e / (1.0 + e * e)
}

fn rho_f64(spec: &ChainSpec, j: usize) -> f64 {
    let r = spec.rho(j);
    *r.numer() as f64 / *r.denom() as f64
}

/// How the density equations were solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DensityMethod {
    /// Per-momentum division of the transformed equations, then inverse transform.
    TransformDivision,
    /// Nyström discretization, FFT convolution and conjugate gradients.
    FftNystrom,
    /// Nyström discretization with a dense LU solve (small grids only).
    DenseNystrom,
}

/// Uniform grid samples of the densities σ_s, one row per s ∈ S.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
    pub method: DensityMethod,
}

impl DensityGrid {
    pub fn step(&self) -> f64 {
        (self.lambda_max - self.lambda_min) / (self.n - 1) as f64
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda_min + i as f64 * self.step()
    }

    /// Largest |σ_s(λ) − ρ_s σ^(0)(λ)| over grid points with |λ| ≤ `within`.
    pub fn max_error(&self, spec: &ChainSpec, within: f64) -> f64 {
        let mut worst = 0.0f64;
        for (j, row) in self.values.iter().enumerate() {
            let rho = rho_f64(spec, j + 1);
            for (i, v) in row.iter().enumerate() {
                let l = self.lambda(i);
                if l.abs() <= within {
                    worst = worst.max((v - rho * sigma0(l)).abs());
                }
            }
        }
        worst
    }
}

/// Grid parameters for the density solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_window: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { half_window: 24.0, n: 4096 }
    }
}

impl GridSpec {
    fn validate(&self, min_window: f64, min_n: usize, pow2: bool) -> Result<()> {
        if !(self.half_window >= min_window) {
            return Err(Error::Validation(format!(
                "window [−{w}, {w}] is smaller than [−{min_window}, {min_window}]",
                w = self.half_window
            )));
        }
        if self.n < min_n || (pow2 && !self.n.is_power_of_two()) {
            return Err(Error::Validation(format!("grid size {} must be ≥ {min_n} (power of two: {pow2})", self.n)));
        }
        Ok(())
    }

    fn points(&self) -> (Vec<f64>, f64) {
        let h = 2.0 * self.half_window / (self.n - 1) as f64;
        ((0..self.n).map(|i| -self.half_window + i as f64 * h).collect(), h)
    }
}

/// Σ_r ρ_r Ψ_{2r}^(s)(λ).
fn driving_term(spec: &ChainSpec, s: Spin, lambda: f64) -> f64 {
    spec.distinct
        .iter()
        .enumerate()
        .map(|(k, r)| rho_f64(spec, k + 1) * psi_p_m(r.doubled, s.doubled, lambda))
        .sum()
}

fn check_decay(grid: &DensityGrid) -> Result<()> {
    for row in &grid.values {
        let edge = row[0].abs().max(row[row.len() - 1].abs());
        if !(edge < 1e-10) {
            return Err(Error::Validation(format!("density does not decay at the window edge ({edge:.3e})")));
        }
    }
    Ok(())
}

/// Solves the vacuum integral equations with the FFT Nyström solver
/// (window ≥ [−20, 20], N ≥ 1024, N a power of two).
pub fn solve_vacuum_integral(spec: &ChainSpec, grid: GridSpec) -> Result<DensityGrid> {
    grid.validate(20.0, 1024, true)?;
    let out = solve_fft_nystrom(spec, grid)?;
    check_decay(&out)?;
    Ok(out)
}

/// Route through the transformed equations: for each momentum q the n×n system
/// 2π σ̂_s + 2π Σ_r Ψ̂_2^(r,s) σ̂_r = Σ_r ρ_r Ψ̂_{2r}^(s) is solved, and σ_s is
/// recovered by a cosine transform.
pub fn solve_transform_division(spec: &ChainSpec, grid: GridSpec) -> Result<DensityGrid> {
    grid.validate(20.0, 2, false)?;
    let n = spec.n_distinct();
    let rule = PanelRule::new(16);
    let nodes = rule.points(0.0, 90.0, 360);
    let mut hats: Vec<Vec<f64>> = vec![Vec::with_capacity(nodes.len()); n];
    for &(q, _) in &nodes {
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for (i, s) in spec.distinct.iter().enumerate() {
            a[(i, i)] += 2.0 * PI;
            for (k, r) in spec.distinct.iter().enumerate() {
                a[(i, k)] += 2.0 * PI * psi2_hat(r.doubled, s.doubled, q);
                b[i] += rho_f64(spec, k + 1) * psi_hat(r.doubled, s.doubled, q);
            }
        }
        let x = a.lu().solve(&b).ok_or_else(|| Error::Numeric("singular transformed system".into()))?;
        for i in 0..n {
            hats[i].push(x[i]);
        }
    }
    let (pts, _) = grid.points();
    let values = hats
        .iter()
        .map(|h| {
            pts.iter()
                .map(|&l| 2.0 * nodes.iter().zip(h).map(|(&(q, w), v)| w * v * (q * l).cos()).sum::<f64>())
                .collect()
        })
        .collect();
    Ok(DensityGrid {
        lambda_min: -grid.half_window,
        lambda_max: grid.half_window,
        n: grid.n,
        values,
        method: DensityMethod::TransformDivision,
    })
}

/// Dense Nyström solve, intended for small grids as an independent check.
pub fn solve_dense_nystrom(spec: &ChainSpec, grid: GridSpec) -> Result<DensityGrid> {
    if grid.n > 2048 {
        return Err(Error::DimensionCap { dim: grid.n as u128, cap: 2048 });
    }
    let (pts, h) = grid.points();
    let n = spec.n_distinct();
    let g = grid.n;
    let mut a = DMatrix::<f64>::zeros(n * g, n * g);
    let mut b = DVector::<f64>::zeros(n * g);
    for (si, s) in spec.distinct.iter().enumerate() {
        for i in 0..g {
            a[(si * g + i, si * g + i)] += 2.0 * PI;
            b[si * g + i] = driving_term(spec, *s, pts[i]);
            for (ri, r) in spec.distinct.iter().enumerate() {
                for j in 0..g {
                    a[(si * g + i, ri * g + j)] += h * psi2(r.doubled, s.doubled, pts[i] - pts[j]);
                }
            }
        }
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::Numeric("singular Nyström matrix".into()))?;
    Ok(DensityGrid {
        lambda_min: -grid.half_window,
        lambda_max: grid.half_window,
        n: g,
        values: (0..n).map(|si| x.rows(si * g, g).iter().copied().collect()).collect(),
        method: DensityMethod::DenseNystrom,
    })
}

/// Toeplitz blocks applied through zero-padded FFT convolution.
struct ToeplitzBlocks {
    n_species: usize,
    g: usize,
    h: f64,
    /// spectra[s][r] of the circulant embedding of Ψ_2^(r,s)
    spectra: Vec<Vec<Vec<Complex64>>>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl ToeplitzBlocks {
    fn new(spec: &ChainSpec, pts: &[f64], h: f64) -> Self {
        let g = pts.len();
        let m = 2 * g;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let n = spec.n_distinct();
        let mut spectra = vec![vec![Vec::new(); n]; n];
        for (si, s) in spec.distinct.iter().enumerate() {
            for (ri, r) in spec.distinct.iter().enumerate() {
                let mut c = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..g {
                    let v = psi2(r.doubled, s.doubled, k as f64 * h);
                    c[k] = Complex64::new(v, 0.0);
                    if k > 0 {
                        c[m - k] = Complex64::new(v, 0.0);
                    }
                }
                fwd.process(&mut c);
                spectra[si][ri] = c;
            }
        }
        ToeplitzBlocks { n_species: n, g, h, spectra, fwd, inv }
    }

    /// y = (2π I + h K) x on the stacked species vector.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (n, g) = (self.n_species, self.g);
        let m = 2 * g;
        let xs: Vec<Vec<Complex64>> = (0..n)
            .map(|ri| {
                let mut v = vec![Complex64::new(0.0, 0.0); m];
                for j in 0..g {
                    v[j] = Complex64::new(x[ri * g + j], 0.0);
                }
                self.fwd.process(&mut v);
                v
            })
            .collect();
        let mut y = vec![0.0; n * g];
        for si in 0..n {
            let mut acc = vec![Complex64::new(0.0, 0.0); m];
            for ri in 0..n {
                for (a, (k, v)) in acc.iter_mut().zip(self.spectra[si][ri].iter().zip(&xs[ri])) {
                    *a += k * v;
                }
            }
            self.inv.process(&mut acc);
            for i in 0..g {
                y[si * g + i] = 2.0 * PI * x[si * g + i] + self.h * acc[i].re / m as f64;
            }
        }
        y
    }
}

fn solve_fft_nystrom(spec: &ChainSpec, grid: GridSpec) -> Result<DensityGrid> {
    let (pts, h) = grid.points();
    let n = spec.n_distinct();
    let g = grid.n;
    let op = ToeplitzBlocks::new(spec, &pts, h);
    let mut b = vec![0.0; n * g];
    for (si, s) in spec.distinct.iter().enumerate() {
        for i in 0..g {
            b[si * g + i] = driving_term(spec, *s, pts[i]);
        }
    }
    let x = conjugate_gradient(|v| op.apply(v), &b, 1e-14, 500)?;
    Ok(DensityGrid {
        lambda_min: -grid.half_window,
        lambda_max: grid.half_window,
        n: g,
        values: (0..n).map(|si| x[si * g..(si + 1) * g].to_vec()).collect(),
        method: DensityMethod::FftNystrom,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain CG for a symmetric positive definite operator.
fn conjugate_gradient<F: Fn(&[f64]) -> Vec<f64>>(apply: F, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let b_norm = dot(b, b).sqrt().max(1e-300);
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numeric("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= 1e3 * rel_tol * b_norm {
        return Ok(x);
    }
    Err(Error::Numeric(format!("CG stalled at relative residual {:.3e}", rr.sqrt() / b_norm)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumEnergy {
    pub closed_form: f64,
    pub numeric: f64,
}

/// Vacuum energy per site: digamma closed form and the momentum-space integral
/// −Σ_s' ρ_s' ∫_0^∞ Ψ̂_{2s}^(s')(p)/cosh(p/2) dp.
pub fn vacuum_energy(spec: &ChainSpec, s: Spin) -> Result<VacuumEnergy> {
    spec.index_of(s)?;
    let sv = s.value();
    let mut closed = 0.0;
    let mut numeric = 0.0;
    for (k, sp) in spec.distinct.iter().enumerate() {
        let rho = rho_f64(spec, k + 1);
        let spv = sp.value();
        closed -= rho * (digamma((spv + sv + 1.0) / 2.0) - digamma(((spv - sv).abs() + 1.0) / 2.0));
        let (val, err) = adaptive(
            |q| psi_hat(s.doubled, sp.doubled, q) / (0.5 * q).cosh(),
            0.0,
            90.0,
            1e-14,
            1 << 14,
        );
        if !(err < 1e-11) {
            return Err(Error::Numeric(format!("energy quadrature did not converge ({err:.3e})")));
        }
        numeric -= rho * val;
    }
    Ok(VacuumEnergy { closed_form: closed, numeric })
}

/// Vacuum energy per site from the real-space integral −Σ ρ_s' ∫ σ^(0) Ψ_{2s}^(s').
pub fn vacuum_energy_real_space(spec: &ChainSpec, s: Spin) -> Result<f64> {
    spec.index_of(s)?;
    let rule = PanelRule::new(16);
    let mut e = 0.0;
    for (k, sp) in spec.distinct.iter().enumerate() {
        let rho = rho_f64(spec, k + 1);
        e -= rho * 2.0 * rule.integrate(|l| sigma0(l) * psi_p_m(s.doubled, sp.doubled, l), 0.0, 14.0, 400);
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VacuumMomentum {
    /// Σ_s s ρ_s, so that p_0 = π L · coefficient before reduction.
    pub coefficient: (i64, i64),
    /// p_0/π reduced to [0, 2/L0).
    pub reduced_over_pi: (i64, i64),
    pub reduced: f64,
}

/// p_0 = π L Σ s ρ_s mod 2π/L0.
pub fn vacuum_momentum(spec: &ChainSpec, length: usize) -> VacuumMomentum {
    let coef: Rational64 = spec
        .distinct
        .iter()
        .enumerate()
        .map(|(k, s)| s.rational() * spec.rho(k + 1))
        .sum();
    let x = coef * Rational64::from_integer(length as i64);
    let period = Rational64::new(2, spec.l0() as i64);
    let red = x - (x / period).floor() * period;
    VacuumMomentum {
        coefficient: (*coef.numer(), *coef.denom()),
        reduced_over_pi: (*red.numer(), *red.denom()),
        reduced: PI * *red.numer() as f64 / *red.denom() as f64,
    }
}

/// Holes and new strings above the vacuum, with the removed-string counts μ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitationContext {
    /// holes[j−1]: hole rapidities λ̃_{j,d} in the sea of 2s̄_j-strings.
    pub holes: Vec<Vec<f64>>,
    /// Doubled string length 2r (r ∉ S) → centers λ_{r,ℓ}.
    pub new_strings: BTreeMap<u32, Vec<f64>>,
    /// μ_j aligned with the distinct spins.
    pub mu: Vec<i64>,
}

fn solve_rational(mut a: Vec<Vec<Rational64>>, mut b: Vec<Rational64>) -> Option<Vec<Rational64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

impl ExcitationContext {
    /// Validates the data and solves D_s = 4 Σ_s' min(s,s') μ_s' − 4 Σ_r min(s,r) ν̃_r for μ.
    /// μ_s may be negative (more 2s-strings than in the vacuum); it must be an integer.
    pub fn new(spec: &ChainSpec, holes: Vec<Vec<f64>>, new_strings: BTreeMap<u32, Vec<f64>>) -> Result<Self> {
        let n = spec.n_distinct();
        if holes.len() != n {
            return Err(Error::Validation(format!("expected hole lists for {n} seas, got {}", holes.len())));
        }
        for (j, h) in holes.iter().enumerate() {
            if h.len() % 2 != 0 {
                return Err(Error::Validation(format!("sea {} has an odd number of holes", j + 1)));
            }
            if h.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("non-finite hole rapidity".into()));
            }
        }
        for (&d, c) in &new_strings {
            if d == 0 || spec.distinct.iter().any(|s| s.doubled == d) {
                return Err(Error::Validation(format!("new strings of length {d} must have length 2r with r ∉ S")));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("non-finite string center".into()));
            }
        }
        // doubled: 4 min(s, s') = 2 min(2s, 2s')
        let a: Vec<Vec<Rational64>> = spec
            .distinct
            .iter()
            .map(|s| {
                spec.distinct
                    .iter()
                    .map(|t| Rational64::from_integer(2 * s.doubled.min(t.doubled) as i64))
                    .collect()
            })
            .collect();
        let b: Vec<Rational64> = spec
            .distinct
            .iter()
            .zip(&holes)
            .map(|(s, h)| {
                let strings: i64 = new_strings
                    .iter()
                    .map(|(&d, c)| 2 * s.doubled.min(d) as i64 * c.len() as i64)
                    .sum();
                Rational64::from_integer(h.len() as i64 + strings)
            })
            .collect();
        let mu = solve_rational(a, b).ok_or_else(|| Error::Numeric("singular μ system".into()))?;
        if mu.iter().any(|m| !m.is_integer()) {
            return Err(Error::Validation(format!("holes and strings give non-integer μ: {mu:?}")));
        }
        let ctx = ExcitationContext { holes, new_strings, mu: mu.iter().map(|m| m.to_integer()).collect() };
        let top = spec.distinct.last().map_or(0, |s| s.doubled);
        let max_d = ctx.new_strings.keys().copied().max().unwrap_or(0).max(top) + 2;
        for d in 1..=max_d {
            if spec.distinct.iter().all(|s| s.doubled != d) && ctx.a_r(spec, d) < 0 {
                return Err(Error::Validation(format!("A_r < 0 at 2r = {d}")));
            }
        }
        Ok(ctx)
    }

    /// Vacuum context (no holes, no strings).
    pub fn empty(spec: &ChainSpec) -> Self {
        ExcitationContext { holes: vec![Vec::new(); spec.n_distinct()], new_strings: BTreeMap::new(), mu: vec![0; spec.n_distinct()] }
    }

    /// D_j for j = 1..=n; zero outside.
    pub fn d(&self, j: usize) -> usize {
        if j == 0 || j > self.holes.len() {
            0
        } else {
            self.holes[j - 1].len()
        }
    }

    pub fn nu_tilde(&self, d: u32) -> usize {
        self.new_strings.get(&d).map_or(0, |c| c.len())
    }

    /// Valence P̃_n for doubled n.
    pub fn p_tilde(&self, spec: &ChainSpec, d: u32) -> i64 {
        let mu: i64 = spec.distinct.iter().zip(&self.mu).map(|(s, m)| 2 * d.min(s.doubled) as i64 * m).sum();
        let strings: i64 = self.new_strings.iter().map(|(&r, c)| 2 * d.min(r) as i64 * c.len() as i64).sum();
        self.nu_tilde(d) as i64 + mu - strings
    }

    /// A_r = P̃_r − ν̃_r (equals D_s on S).
    pub fn a_r(&self, spec: &ChainSpec, d: u32) -> i64 {
        self.p_tilde(spec, d) - self.nu_tilde(d) as i64
    }

    /// Interpolation form of A_r for r inside the gap R_j (j < n).
    pub fn a_r_interpolated(&self, spec: &ChainSpec, j: usize, d: u32) -> Rational64 {
        let lo = spec.sbar(j).doubled as i64;
        let hi = spec.sbar(j + 1).doubled as i64;
        let r = d as i64;
        let gap = Rational64::from_integer(hi - lo);
        let mut a = Rational64::from_integer((r - lo) * self.d(j + 1) as i64) / gap
            + Rational64::from_integer((hi - r) * self.d(j) as i64) / gap;
        for (&m, c) in &self.new_strings {
            let m = m as i64;
            if m > lo && m < hi {
                // 4(s̄_{j+1} − max)(min − s̄_j)/(s̄_{j+1} − s̄_j) in doubled units
                let w = Rational64::from_integer(2 * (hi - m.max(r)) * (m.min(r) - lo)) / gap;
                a -= w * Rational64::from_integer(c.len() as i64);
            }
        }
        a
    }

    /// Total spin S = D_n/2 − 2 Σ_{r ∈ R_n} (r − s̄_n) ν̃_r.
    pub fn total_spin(&self, spec: &ChainSpec) -> Rational64 {
        let n = spec.n_distinct();
        let top = spec.sbar(n).doubled as i64;
        let mut s = Rational64::new(self.d(n) as i64, 2);
        for (&r, c) in &self.new_strings {
            if r as i64 > top {
                s -= Rational64::from_integer((r as i64 - top) * c.len() as i64);
            }
        }
        s
    }
}

/// Smooth parts of the 1/L density corrections in sea j, plus the hole point
/// masses that the δ terms contribute under integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corrections {
    pub r: f64,
    pub c: f64,
    /// (position, weight) of the δ terms in r.
    pub point_masses: Vec<(f64, f64)>,
}

fn kernel_params(period: Option<u32>, r: u32) -> Result<KernelParams> {
    KernelParams::with_period(period, r)
}

/// Hole correction r_{s̄_j}(λ) without its δ terms, and polarization c_{s̄_j}(λ).
pub fn excited_corrections(spec: &ChainSpec, ctx: &ExcitationContext, lambda: f64, j: usize) -> Result<Corrections> {
    let n = spec.n_distinct();
    if j == 0 || j > n {
        return Err(Error::Domain(format!("sea index {j} outside 1..={n}")));
    }
    let below = spec.period(j - 1);
    let above = spec.period(j);
    let mut r = 0.0;
    let mut masses = Vec::new();
    if j > 1 {
        let p = kernel_params(below, below.unwrap_or(0).saturating_sub(1))?;
        for &h in &ctx.holes[j - 2] {
            r += kappa(p, lambda - h);
        }
    }
    if j < n {
        let p = kernel_params(above, above.unwrap_or(0).saturating_sub(1))?;
        for &h in &ctx.holes[j] {
            r += kappa(p, lambda - h);
        }
    }
    let pa = kernel_params(above, 1)?;
    let pb = kernel_params(below, 1)?;
    for &h in &ctx.holes[j - 1] {
        r += kappa(pa, lambda - h) + kappa(pb, lambda - h);
        masses.push((h, -1.0));
    }
    r /= 2.0 * PI;

    let lo = spec.sbar(j - 1).doubled;
    let sj = spec.sbar(j).doubled;
    let hi = if j < n { spec.sbar(j + 1).doubled } else { u32::MAX };
    let mut c = 0.0;
    for (&m, centers) in &ctx.new_strings {
        let params = if m > lo && m < sj {
            kernel_params(below, sj - m)?
        } else if m > sj && m < hi {
            kernel_params(above, m - sj)?
        } else {
            continue;
        };
        for &x in centers {
            c -= trig_family(params, lambda - x).gamma;
        }
    }
    c /= 2.0 * PI;
    Ok(Corrections { r, c, point_masses: masses })
}

/// ∫ (r + c) dλ over ℝ from the transforms at p = 0, including the δ masses.
pub fn correction_integral_exact(spec: &ChainSpec, ctx: &ExcitationContext, j: usize) -> Result<f64> {
    let n = spec.n_distinct();
    let below = spec.period(j - 1);
    let above = spec.period(j);
    let mut total = 0.0;
    if j > 1 {
        total += ctx.d(j - 1) as f64 * eval_kappa_hat(kernel_params(below, below.unwrap_or(0).saturating_sub(1))?, 0.0);
    }
    if j < n {
        total += ctx.d(j + 1) as f64 * eval_kappa_hat(kernel_params(above, above.unwrap_or(0).saturating_sub(1))?, 0.0);
    }
    total += ctx.d(j) as f64
        * (eval_kappa_hat(kernel_params(above, 1)?, 0.0) + eval_kappa_hat(kernel_params(below, 1)?, 0.0));
    total -= ctx.d(j) as f64;
    let lo = spec.sbar(j - 1).doubled;
    let sj = spec.sbar(j).doubled;
    let hi = if j < n { spec.sbar(j + 1).doubled } else { u32::MAX };
    for (&m, centers) in &ctx.new_strings {
        let params = if m > lo && m < sj {
            kernel_params(below, sj - m)?
        } else if m > sj && m < hi {
            kernel_params(above, m - sj)?
        } else {
            continue;
        };
        total -= centers.len() as f64 * eval_gamma_hat(params, 0.0);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dispersion {
    pub d_e: f64,
    pub momenta: Vec<f64>,
    pub dispersion_residual: f64,
}

/// p^(s)(λ) = ρ_s arctan(sinh πλ) + ρ_s π/2, written as 2ρ_s arctan(e^{πλ})
/// so that it stays accurate near the Fermi edge λ → −∞.
pub fn hole_momentum(rho: f64, lambda: f64) -> f64 {
    2.0 * rho * (PI * lambda).exp().atan()
}

/// ΔE^(s) = Σ_d π/cosh(πλ̃_{s,d}) over the holes of sea s, their momenta, and
/// the residual of the dispersion law ΔE = π Σ sin(p/ρ_s).
pub fn delta_energy_dispersion(spec: &ChainSpec, ctx: &ExcitationContext, s: Spin) -> Result<Dispersion> {
    let j = spec.index_of(s)?;
    let rho = rho_f64(spec, j);
    let holes = &ctx.holes[j - 1];
    let d_e: f64 = holes.iter().map(|&l| PI / (PI * l).cosh()).sum();
    let momenta: Vec<f64> = holes.iter().map(|&l| hole_momentum(rho, l)).collect();
    let law: f64 = momenta.iter().map(|p| PI * (p / rho).sin()).sum();
    Ok(Dispersion { d_e, momenta, dispersion_residual: (d_e - law).abs() })
}
