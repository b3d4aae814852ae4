//! Phase shifts of hole excitations, their factorized form, the auxiliary
//! Bethe equations tying new strings to holes, the spin-sector transfer
//! matrix, the conjectured S-matrices and the central charge.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use serde::Serialize;

use crate::chain::{diagonalize, ChainSpec};
use crate::error::{Error, Result};
use crate::quad::PanelRule;
use crate::repkit::{embed_two, fused_r, DenseOperator, Spin};
use crate::rsos::{rsos_transfer_matrix, RsosTransferContext, TransferKind};
use crate::special_functions::{big_gamma_ext, k_value, trig_family, KernelParams};
use crate::strings::phi2_indices;
use crate::thermo::{excited_corrections, ExcitationContext};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Panels of the λ = tan θ phase quadrature over a full half-turn.
const PHASE_PANELS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseFactors {
    pub s_check: Complex64,
    pub s_tilde: Complex64,
    /// The sign C_j = (−1)^{μ_j}.
    pub c: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseResult {
    /// Φ from the integral of the density corrections.
    pub phi: f64,
    pub factors: PhaseFactors,
    /// |e^{iΦ} − C Š S̃|.
    pub residual: f64,
}

fn check_sea(spec: &ChainSpec, j: usize) -> Result<()> {
    let n = spec.n_distinct();
    if j == 0 || j > n {
        return Err(Error::Domain(format!("sea index {j} outside 1..={n}")));
    }
    Ok(())
}

fn hole(ctx: &ExcitationContext, j: usize, d: usize) -> Result<f64> {
    ctx.holes[j - 1]
        .get(d.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::Domain(format!("hole {d} does not exist in sea {j}")))
}

/// 2π ∫_{−∞}^{x} (r + c) over the smooth parts; the δ terms of r cancel
/// against the explicit hole sum.
pub fn phase_integral(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, x: f64) -> Result<f64> {
    check_sea(spec, j)?;
    let lo = -PI / 2.0 + 1e-9;
    let hi = x.atan();
    let panels = ((hi - lo) / PI * PHASE_PANELS).ceil().max(8.0) as usize;
    let mut err = None;
    let value = PanelRule::new(16).integrate(
        |t| {
            let l = t.tan();
            match excited_corrections(spec, ctx, l, j) {
                Ok(c) => (c.r + c.c) * (1.0 + l * l),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        panels,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(2.0 * PI * value),
    }
}

/// Š_j(λ): the new-string factor.
pub fn s_check(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, lambda: f64) -> Result<Complex64> {
    check_sea(spec, j)?;
    let n = spec.n_distinct();
    let lo = spec.sbar(j - 1).doubled;
    let sj = spec.sbar(j).doubled;
    let hi = if j < n { spec.sbar(j + 1).doubled } else { u32::MAX };
    let mut s = Complex64::new(1.0, 0.0);
    for (&m, centers) in &ctx.new_strings {
        let p = if m > lo && m < sj {
            KernelParams::with_period(spec.period(j - 1), sj - m)?
        } else if m > sj && m < hi {
            KernelParams::with_period(spec.period(j), m - sj)?
        } else {
            continue;
        };
        for &c in centers {
            s *= trig_family(p, lambda - c).g;
        }
    }
    Ok(s)
}

/// S̃_j(λ): the hole factor. The sea-(L+1) product is empty, so the
/// K_{π/ħ_L − 1} factor with ħ_L = 0 never enters.
pub fn s_tilde(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, lambda: f64) -> Result<Complex64> {
    check_sea(spec, j)?;
    let n = spec.n_distinct();
    let below = spec.period(j - 1);
    let above = spec.period(j);
    let mut s = Complex64::new(1.0, 0.0);
    if j > 1 {
        let p = KernelParams::with_period(below, below.unwrap_or(1) - 1)?;
        for &h in &ctx.holes[j - 2] {
            s *= k_value(p, h - lambda)?;
        }
    }
    let pb = KernelParams::with_period(below, 1)?;
    let pa = KernelParams::with_period(above, 1)?;
    for &h in &ctx.holes[j - 1] {
        s *= k_value(pb, h - lambda)? * k_value(pa, h - lambda)?;
    }
    if j < n {
        let p = KernelParams::with_period(above, above.unwrap_or(1) - 1)?;
        for &h in &ctx.holes[j] {
            s *= k_value(p, h - lambda)?;
        }
    }
    Ok(s)
}

/// Phase shift of hole `d` (1-based) in the sea of spin `s`, by both routes.
pub fn phase_shift(spec: &ChainSpec, ctx: &ExcitationContext, s: Spin, d: usize) -> Result<PhaseResult> {
    let j = spec.index_of(s)?;
    let x = hole(ctx, j, d)?;
    let phi = phase_integral(spec, ctx, j, x)?;
    let factors = PhaseFactors {
        s_check: s_check(spec, ctx, j, x)?,
        s_tilde: s_tilde(spec, ctx, j, x)?,
        c: if ctx.mu[j - 1] % 2 == 0 { 1 } else { -1 },
    };
    let closed = factors.s_check * factors.s_tilde * factors.c as f64;
    let residual = ((I * phi).exp() - closed).norm();
    Ok(PhaseResult { phi, factors, residual })
}

/// One auxiliary Bethe equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxEntry {
    /// 2m.
    pub doubled_len: u32,
    pub index: usize,
    pub center: f64,
    /// Logarithmic residual −2πQ + Σ Γ − Σ F_2.
    pub residual: f64,
    /// For centers of 1-strings of the auxiliary XXZ (or XXX) chain: distance
    /// of (LHS/RHS of the product form)·e^{i·residual} from ±1.
    pub product_gap: Option<f64>,
}

/// Doubled quantum numbers 2Q per string length, aligned with the centers.
pub type AuxQuantumNumbers = BTreeMap<u32, Vec<i64>>;

fn gap_bounds(spec: &ChainSpec, j: usize) -> (u32, u32) {
    let lo = spec.sbar(j).doubled;
    let hi = if j < spec.n_distinct() { spec.sbar(j + 1).doubled } else { u32::MAX };
    (lo, hi)
}

fn in_gap(spec: &ChainSpec, j: usize) -> impl Fn(u32) -> bool {
    let (lo, hi) = gap_bounds(spec, j);
    move |m| m > lo && m < hi
}

fn check_gap(spec: &ChainSpec, j: usize) -> Result<()> {
    if j > spec.n_distinct() {
        return Err(Error::Domain(format!("gap index {j} outside 0..={}", spec.n_distinct())));
    }
    Ok(())
}

fn log_residuals(
    spec: &ChainSpec,
    ctx: &ExcitationContext,
    j: usize,
    centers: &BTreeMap<u32, Vec<f64>>,
    q2: &AuxQuantumNumbers,
) -> Vec<AuxEntry> {
    let n = spec.n_distinct();
    let hbar = spec.hbar(j);
    let (lo, hi) = gap_bounds(spec, j);
    let gamma = |r: u32, l: f64| big_gamma_ext(hbar, r as f64, l);
    let mut out = Vec::new();
    for (&m, cs) in centers.iter().filter(|(&m, _)| m > lo && m < hi) {
        for (k, &x) in cs.iter().enumerate() {
            let q = q2.get(&m).and_then(|v| v.get(k)).copied().unwrap_or(0);
            let mut res = -PI * q as f64;
            if j >= 1 {
                res += ctx.holes[j - 1].iter().map(|&h| gamma(m - lo, x - h)).sum::<f64>();
            }
            if j < n {
                res += ctx.holes[j].iter().map(|&h| gamma(hi - m, x - h)).sum::<f64>();
            }
            for (&r, rs) in centers.iter().filter(|(&r, _)| r > lo && r < hi) {
                let idx = phi2_indices(r - lo, m - lo);
                for &y in rs {
                    res -= idx.iter().map(|&(i, w)| w * gamma(i, x - y)).sum::<f64>();
                }
            }
            out.push(AuxEntry { doubled_len: m, index: k, center: x, residual: res, product_gap: None });
        }
    }
    out
}

/// Product form of the auxiliary equations (XXZ with inhomogeneities for
/// j < L, XXX spin ½ for j = L) at the center x of a 1-string; returns LHS/RHS.
fn product_ratio(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, centers: &BTreeMap<u32, Vec<f64>>, m: u32, k: usize) -> Complex64 {
    let n = spec.n_distinct();
    let hbar = spec.hbar(j);
    let (lo, hi) = gap_bounds(spec, j);
    let f = |z: Complex64| if hbar == 0.0 { z } else { (z * hbar).sinh() };
    let ratio = |u: f64, a: f64| f(Complex64::new(u, a)) / f(Complex64::new(u, -a));
    let x = centers[&m][k];
    let mut lhs = Complex64::new(1.0, 0.0);
    if j < n {
        let g = (hi - lo) as f64;
        if j >= 1 {
            for &h in &ctx.holes[j - 1] {
                lhs *= ratio(x - h, (g - 1.0) / 2.0);
            }
        }
        for &h in &ctx.holes[j] {
            lhs *= ratio(x - h, 0.5);
        }
    } else {
        for &h in &ctx.holes[j - 1] {
            lhs *= ratio(x - h, 0.5);
        }
    }
    let mut rhs = Complex64::new(1.0, 0.0);
    for (&r, rs) in centers.iter().filter(|(&r, _)| r > lo && r < hi) {
        // auxiliary string length
        let len = if j < n { hi - r } else { r - lo };
        for (l, &y) in rs.iter().enumerate() {
            for t in 1..=len {
                if r == m && l == k {
                    continue;
                }
                let member = Complex64::new(y, (len as f64 + 1.0 - 2.0 * t as f64) / 2.0);
                let z = Complex64::new(x, 0.0) - member;
                rhs *= f(z + I) / f(z - I);
            }
        }
    }
    lhs / rhs
}

/// Residuals of the auxiliary equations for every new-string center in gap
/// R_j (j = 0..=L), together with the product-form comparison at 1-string
/// centers.
pub fn aux_constraint_residual(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, q2: &AuxQuantumNumbers) -> Result<Vec<AuxEntry>> {
    check_gap(spec, j)?;
    let n = spec.n_distinct();
    let (lo, hi) = gap_bounds(spec, j);
    let one_string = if j < n { hi - 1 } else { lo + 1 };
    let mut out = log_residuals(spec, ctx, j, &ctx.new_strings, q2);
    for e in out.iter_mut().filter(|e| e.doubled_len == one_string) {
        let z = product_ratio(spec, ctx, j, &ctx.new_strings, e.doubled_len, e.index) * (I * e.residual).exp();
        e.product_gap = Some((z - 1.0).norm().min((z + 1.0).norm()));
    }
    Ok(out)
}

/// Validates 2Q against the vacancy count P̃_m: |2Q| ≤ P̃_m − 1 with
/// 2Q ≡ P̃_m − 1 (mod 2).
pub fn validate_quantum_numbers(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, q2: &AuxQuantumNumbers) -> Result<()> {
    check_gap(spec, j)?;
    let inside = in_gap(spec, j);
    for (&m, cs) in ctx.new_strings.iter().filter(|(&m, _)| inside(m)) {
        let qs = q2.get(&m).map_or(&[][..], |v| v.as_slice());
        if qs.len() != cs.len() {
            return Err(Error::Validation(format!("{} quantum numbers for {} strings of length {m}", qs.len(), cs.len())));
        }
        let p = ctx.p_tilde(spec, m);
        for &q in qs {
            if p < 1 || q.abs() > p - 1 || (q - (p - 1)).rem_euclid(2) != 0 {
                return Err(Error::Validation(format!("2Q = {q} is not allowed with {p} vacancies at 2m = {m}")));
            }
        }
    }
    for &m in q2.keys() {
        if !inside(m) {
            return Err(Error::Validation(format!("string length {m} is not in gap {j}")));
        }
    }
    Ok(())
}

/// Newton solve of the auxiliary equations in gap R_j for the new-string
/// centers, starting from the centers stored in `ctx`.
pub fn solve_aux_constraints(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, q2: &AuxQuantumNumbers) -> Result<ExcitationContext> {
    validate_quantum_numbers(spec, ctx, j, q2)?;
    let inside = in_gap(spec, j);
    let keys: Vec<(u32, usize)> = ctx
        .new_strings
        .iter()
        .filter(|(&m, _)| inside(m))
        .flat_map(|(&m, cs)| (0..cs.len()).map(move |k| (m, k)))
        .collect();
    let mut centers = ctx.new_strings.clone();
    let norm = |c: &BTreeMap<u32, Vec<f64>>| -> DVector<f64> {
        DVector::from_iterator(keys.len(), log_residuals(spec, ctx, j, c, q2).iter().map(|e| e.residual))
    };
    let shifted = |c: &BTreeMap<u32, Vec<f64>>, delta: &DVector<f64>, scale: f64| {
        let mut c = c.clone();
        for (i, &(m, k)) in keys.iter().enumerate() {
            c.get_mut(&m).unwrap()[k] += scale * delta[i];
        }
        c
    };
    let mut r = norm(&centers);
    for _ in 0..200 {
        if r.amax() < 1e-10 {
            let mut out = ctx.clone();
            out.new_strings = centers;
            return Ok(out);
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(keys.len(), keys.len());
        for col in 0..keys.len() {
            let e = DVector::from_fn(keys.len(), |i, _| if i == col { 1.0 } else { 0.0 });
            let d = (norm(&shifted(&centers, &e, h)) - norm(&shifted(&centers, &e, -h))) / (2.0 * h);
            jac.set_column(col, &d);
        }
        let step = jac.lu().solve(&(-&r)).ok_or_else(|| Error::Numeric("singular Jacobian in the auxiliary solve".into()))?;
        let mut scale = 1.0;
        loop {
            let trial = shifted(&centers, &step, scale);
            let rt = norm(&trial);
            if rt.norm() < r.norm() || scale < 1e-6 {
                centers = trial;
                r = rt;
                break;
            }
            scale *= 0.5;
        }
    }
    Err(Error::Numeric(format!("auxiliary equations did not converge (max residual {:.3e})", r.amax())))
}

/// S(λ) = K_1^(0)(λ) R(−λ) on C² ⊗ C².
pub fn spin_s_matrix(lambda: f64) -> Result<DenseOperator> {
    let k = k_value(KernelParams::with_period(None, 1)?, lambda)?;
    Ok(fused_r(Spin::HALF, Spin::HALF, Complex64::new(-lambda, 0.0))?.scale(k))
}

/// t^(L)(λ) = tr_0 S_01(λ − λ̃_{L,1}) ... S_0D(λ − λ̃_{L,D}) on (C²)^{⊗D_L}.
pub fn spin_transfer(spec: &ChainSpec, ctx: &ExcitationContext, lambda: f64) -> Result<DenseOperator> {
    let holes = &ctx.holes[spec.n_distinct() - 1];
    if holes.is_empty() {
        return Err(Error::Domain("the spin transfer matrix needs D_L ≥ 1".into()));
    }
    let dims = vec![2usize; holes.len() + 1];
    let mut acc = DenseOperator::identity(dims.clone());
    for (q, &h) in holes.iter().enumerate() {
        acc = acc.mul(&embed_two(&spin_s_matrix(lambda - h)?, &dims, 0, q + 1));
    }
    let n = 1usize << holes.len();
    let t = DMatrix::from_fn(n, n, |i, k| acc.mat[(i, k)] + acc.mat[(n + i, n + k)]);
    DenseOperator::new(t, vec![2; holes.len()])
}

/// The conjectured S-matrix of hole d in sea j. Only the spectrum is
/// meaningful since the conjecture holds up to conjugation.
#[derive(Debug, Clone)]
pub struct ConjecturedS {
    pub spin_part: Option<DenseOperator>,
    pub rsos_parts: Vec<DenseOperator>,
    pub spectrum: Vec<Complex64>,
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

pub fn conjectured_s(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, d: usize) -> Result<ConjecturedS> {
    check_sea(spec, j)?;
    let n = spec.n_distinct();
    let x = hole(ctx, j, d)?;
    let first = rsos_transfer_matrix(TransferKind::PlainAux, &RsosTransferContext::from_excitation(spec, ctx, j - 1, d)?, x)?;
    let (spin_part, rsos_parts) = if j == n {
        (Some(spin_transfer(spec, ctx, x)?), vec![first])
    } else {
        let second = rsos_transfer_matrix(TransferKind::FusedAux, &RsosTransferContext::from_excitation(spec, ctx, j, d)?, x)?;
        (None, vec![first, second])
    };
    let mut spectrum = vec![Complex64::new(1.0, 0.0)];
    for op in spin_part.iter().chain(&rsos_parts) {
        let eig = diagonalize(op)?.eigenvalues;
        spectrum = spectrum.iter().flat_map(|a| eig.iter().map(move |b| a * b)).collect();
    }
    Ok(ConjecturedS { spin_part, rsos_parts, spectrum: sorted(spectrum) })
}

/// The string-hypothesis value Š S̃ next to the conjectured spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteComparison {
    pub string_route: Complex64,
    pub conjectured: Vec<Complex64>,
    /// min_k |conjectured_k − string_route|.
    pub nearest: f64,
}

pub fn compare_routes(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, d: usize) -> Result<RouteComparison> {
    let x = hole(ctx, j, d)?;
    let string_route = s_check(spec, ctx, j, x)? * s_tilde(spec, ctx, j, x)?;
    let conjectured = conjectured_s(spec, ctx, j, d)?.spectrum;
    let nearest = conjectured.iter().map(|z| (z - string_route).norm()).fold(f64::INFINITY, f64::min);
    Ok(RouteComparison { string_route, conjectured, nearest })
}

/// c = L + Σ_j (2 − 3/(s̄_j − s̄_{j−1} + 1)).
pub fn central_charge(spec: &ChainSpec) -> Rational64 {
    let n = spec.n_distinct();
    (1..=n).fold(Rational64::from_integer(n as i64), |c, j| {
        let gap = Rational64::new((spec.sbar(j).doubled - spec.sbar(j - 1).doubled) as i64, 2);
        c + Rational64::from_integer(2) - Rational64::from_integer(3) / (gap + 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::k_gamma_ratio;

    fn spec(motif: &[u32]) -> ChainSpec {
        ChainSpec::with_cap(motif.iter().map(|&d| Spin::from_doubled(d)).collect(), 1, u128::MAX).unwrap()
    }

    fn ctx(spec: &ChainSpec, holes: &[&[f64]], strings: &[(u32, &[f64])]) -> ExcitationContext {
        ExcitationContext::new(
            spec,
            holes.iter().map(|h| h.to_vec()).collect(),
            strings.iter().map(|&(m, c)| (m, c.to_vec())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn test_spin_half_two_holes() {
        let s = spec(&[1]);
        let c = ctx(&s, &[&[-0.4, 0.9]], &[]);
        let p = phase_shift(&s, &c, Spin::HALF, 1).unwrap();
        assert_eq!(p.factors.s_check, Complex64::new(1.0, 0.0));
        assert_eq!(p.factors.c, -1);
        assert!((p.factors.s_tilde - k_gamma_ratio(1.0, 1.3)).norm() < 1e-8);
        assert!(p.residual < 1e-7, "{}", p.residual);
        let same = ctx(&s, &[&[0.3, 0.3]], &[]);
        let p = phase_shift(&s, &same, Spin::HALF, 2).unwrap();
        assert!((p.factors.s_tilde - 1.0).norm() < 1e-12);
        assert!(phase_shift(&s, &c, Spin::HALF, 3).is_err());
    }

    #[test]
    fn test_phase_consistency_examples() {
        let cases: Vec<(ChainSpec, ExcitationContext)> = vec![
            (spec(&[2]), ctx(&spec(&[2]), &[&[-0.5, 1.1]], &[(1, &[0.2])])),
            (spec(&[2]), ctx(&spec(&[2]), &[&[-1.0, 0.3, 0.8, 2.0]], &[])),
            (spec(&[1, 2]), ctx(&spec(&[1, 2]), &[&[0.1, -0.6], &[0.4, 1.5]], &[])),
            (spec(&[1, 3]), ctx(&spec(&[1, 3]), &[&[0.7, -0.2], &[0.0, 1.0]], &[])),
            (spec(&[1, 3]), ctx(&spec(&[1, 3]), &[&[0.7, -0.2], &[0.0, 1.0, -1.5, 0.3]], &[(2, &[0.5])])),
            (spec(&[1]), ctx(&spec(&[1]), &[&[-1.0, 1.0]], &[(2, &[0.0])])),
        ];
        for (s, c) in &cases {
            for (j, holes) in c.holes.iter().enumerate() {
                for d in 1..=holes.len() {
                    let p = phase_shift(s, c, s.distinct[j], d).unwrap();
                    assert!(p.residual < 1e-7, "{:?} sea {} hole {d}: {}", s.motif, j + 1, p.residual);
                    assert!((p.factors.s_check.norm() - 1.0).abs() < 1e-9);
                    assert!((p.factors.s_tilde.norm() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn test_pure_hole_factorization() {
        // one sea of spin ½, and sea 1 of (½, 1)
        let hs = [0.2, -0.9, 1.4, 0.6];
        for (motif, n) in [(&[1u32][..], 1usize), (&[1, 2][..], 2)] {
            let s = spec(motif);
            let holes = |h: &[f64]| {
                let mut v = vec![h.to_vec()];
                v.resize(n, Vec::new());
                ExcitationContext::new(&s, v, BTreeMap::new()).unwrap()
            };
            let total = phase_shift(&s, &holes(&hs), Spin::HALF, 1).unwrap().phi;
            let pair = |q: f64| phase_shift(&s, &holes(&[hs[0], q]), Spin::HALF, 1).unwrap().phi;
            let sum: f64 = hs[1..].iter().map(|&q| pair(q)).sum::<f64>() - pair(hs[0]);
            assert!((total - sum).abs() < 1e-7, "{motif:?}");
        }
    }

    #[test]
    fn test_aux_residual_examples() {
        let s = spec(&[1]);
        let c = ctx(&s, &[&[-0.8, 0.8]], &[]);
        assert!(aux_constraint_residual(&s, &c, 1, &AuxQuantumNumbers::new()).unwrap().is_empty());
        let c = ctx(&s, &[&[-0.8, 0.8]], &[(2, &[0.0])]);
        let q: AuxQuantumNumbers = [(2, vec![0])].into_iter().collect();
        let r = aux_constraint_residual(&s, &c, 1, &q).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].residual.abs() < 1e-15);
        assert!(r[0].product_gap.unwrap() < 1e-12);
        // gap ½ between the two seas of (½, 1): no strings fit
        let s2 = spec(&[1, 2]);
        assert!(s2.gap_set(1, 10).is_empty());
    }

    #[test]
    fn test_solve_aux_examples() {
        let s = spec(&[1]);
        let q: AuxQuantumNumbers = [(2, vec![0])].into_iter().collect();
        let c = ctx(&s, &[&[-0.8, 0.8]], &[(2, &[0.3])]);
        let solved = solve_aux_constraints(&s, &c, 1, &q).unwrap();
        assert!(solved.new_strings[&2][0].abs() < 1e-10);
        let c = ctx(&s, &[&[2.0, 12.0]], &[(2, &[5.0])]);
        let solved = solve_aux_constraints(&s, &c, 1, &q).unwrap();
        assert!((solved.new_strings[&2][0] - 7.0).abs() < 1e-3);
        let bad: AuxQuantumNumbers = [(2, vec![2])].into_iter().collect();
        assert!(matches!(solve_aux_constraints(&s, &c, 1, &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn test_product_form_in_rsos_gap() {
        // spin 3/2 sea with a 1-string of the auxiliary XXZ chain (m = 1, 2m = 2)
        let s = spec(&[3]);
        let c = ctx(&s, &[&[-0.7, 1.3]], &[(2, &[0.2])]);
        let q: AuxQuantumNumbers = [(2, vec![0])].into_iter().collect();
        let solved = solve_aux_constraints(&s, &c, 0, &q).unwrap();
        let r = aux_constraint_residual(&s, &solved, 0, &q).unwrap();
        assert!(r[0].residual.abs() < 1e-10);
        assert!(r[0].product_gap.unwrap() < 1e-9, "{:?}", r[0]);
        let p = phase_shift(&s, &solved, Spin::from_doubled(3), 2).unwrap();
        assert!(p.residual < 1e-7);
    }

    #[test]
    fn test_spin_s_matrix_unitarity() {
        for x in [0.0, 0.3, -1.7, 4.0] {
            let a = spin_s_matrix(x).unwrap();
            let b = spin_s_matrix(-x).unwrap();
            let id = DenseOperator::identity(vec![2, 2]);
            assert!(a.mul(&b).distance(&id) < 1e-10);
        }
    }

    #[test]
    fn test_spin_transfer_family() {
        let s = spec(&[1]);
        let c = ctx(&s, &[&[-0.5, 0.2, 1.0, 1.9]], &[]);
        let t1 = spin_transfer(&s, &c, 0.37).unwrap();
        let t2 = spin_transfer(&s, &c, -1.2).unwrap();
        assert!(t1.commutator_norm(&t2) < 1e-9);
        let one = ctx(&spec(&[1]), &[&[0.0, 0.0]], &[]);
        let mut single = one.clone();
        single.holes[0].truncate(1);
        let t = spin_transfer(&s, &single, 0.8).unwrap();
        let e3 = DenseOperator::new(DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)])), vec![2]).unwrap();
        assert!(t.commutator_norm(&e3) < 1e-12);
        assert!(spin_transfer(&s, &ExcitationContext::empty(&s), 0.1).is_err());
    }

    #[test]
    fn test_conjecture_spin_half() {
        let s = spec(&[1]);
        let c = ctx(&s, &[&[-0.4, 0.9]], &[]);
        let cs = conjectured_s(&s, &c, 1, 1).unwrap();
        assert_eq!(cs.rsos_parts[0].dim(), 1);
        assert!((cs.rsos_parts[0].mat[(0, 0)] - 1.0).norm() < 1e-12);
        let th = -1.3;
        let k = k_gamma_ratio(1.0, th);
        let singlet = k * Complex64::new(-th, -1.0) / Complex64::new(-th, 1.0);
        let expected = sorted(vec![k, k, k, singlet]);
        for (a, b) in cs.spectrum.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn test_conjecture_alternating() {
        let s = spec(&[1, 2]);
        let c = ctx(&s, &[&[0.1, -0.6], &[0.4, 1.5]], &[]);
        for d in 1..=2 {
            let x = c.holes[0][d - 1];
            let cs = conjectured_s(&s, &c, 1, d).unwrap();
            assert_eq!(cs.spectrum.len(), 1);
            let expected: Complex64 = c.holes[1]
                .iter()
                .map(|&h| {
                    let z = Complex64::new(0.5 * PI * (x - h), 0.25 * PI);
                    I * z.cosh() / z.sinh()
                })
                .product();
            assert!((cs.spectrum[0] - expected).norm() < 1e-9);
            let cmp = compare_routes(&s, &c, 1, d).unwrap();
            assert!(cmp.nearest < 1e-9);
        }
    }

    #[test]
    fn test_central_charge() {
        assert_eq!(central_charge(&spec(&[1])), Rational64::from_integer(1));
        assert_eq!(central_charge(&spec(&[2])), Rational64::new(3, 2));
        assert_eq!(central_charge(&spec(&[1, 2])), Rational64::from_integer(2));
        // 3s/(s+1) for homogeneous spin s
        for d in 1..=8 {
            let sv = Rational64::new(d, 2);
            assert_eq!(central_charge(&spec(&[d as u32])), sv * 3 / (sv + 1));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]
            #[test]
            fn factors_unimodular(a in -3.0f64..3.0, b in -3.0f64..3.0, c0 in -3.0f64..3.0, e in -3.0f64..3.0) {
                let s = spec(&[1, 3]);
                let c = ctx(&s, &[&[a, b], &[c0, e]], &[]);
                for j in 1..=2 {
                    let x = c.holes[j - 1][0];
                    prop_assert!((s_tilde(&s, &c, j, x).unwrap().norm() - 1.0).abs() < 1e-9);
                    prop_assert!((s_check(&s, &c, j, x).unwrap().norm() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
