//! Generalized RSOS path spaces: enumeration, exact counting, the
//! trigonometric degeneracy formula, hole/new-string bookkeeping, Boltzmann
//! weights and the RSOS transfer-matrix entries used by the S-matrix.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::repkit::{DenseOperator, Spin};
use crate::special_functions::{k_value, KernelParams};
use crate::thermo::ExcitationContext;

/// Largest D + D' accepted by [`enumerate_paths`].
pub const ENUMERATION_GUARD: usize = 14;

/// The space H^RSOS(D; D'; s̄): D sites with jump 2s̄−1 followed by D' sites
/// with jump 1, heights in 0..=2s̄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RsosSpace {
    pub d: usize,
    pub dp: usize,
    /// 2s̄.
    pub sbar_doubled: u32,
}

impl RsosSpace {
    pub fn new(d: usize, dp: usize, sbar: Spin) -> Result<Self> {
        if d % 2 != 0 || dp % 2 != 0 {
            return Err(Error::Validation(format!("D = {d} and D' = {dp} must be even")));
        }
        if sbar.doubled == 0 {
            return Err(Error::Validation("the gap s̄ must be at least 1/2".into()));
        }
        Ok(RsosSpace { d, dp, sbar_doubled: sbar.doubled })
    }

    /// Restriction parameter 2s̄ + 2.
    pub fn restriction(&self) -> u32 {
        self.sbar_doubled + 2
    }

    pub fn hbar(&self) -> f64 {
        PI / self.restriction() as f64
    }

    fn a_step(&self, x: u32, y: u32) -> bool {
        let s2 = self.sbar_doubled as i64;
        let k = y as i64 - x as i64 + s2 - 1;
        k % 2 == 0 && (0..=2 * (s2 - 1)).contains(&k) && (s2 - 2..=s2 + 2).contains(&(x as i64 + y as i64))
    }

    fn b_step(x: u32, y: u32) -> bool {
        x.abs_diff(y) == 1
    }

    /// Allowed step from position `i` (0-based) to `i + 1` along the joined path.
    fn step(&self, i: usize, x: u32, y: u32) -> bool {
        if i < self.d {
            self.a_step(x, y)
        } else {
            Self::b_step(x, y)
        }
    }
}

/// A basis element E(a_0..a_D; b_0..b_D'), with a_D = b_0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RsosPath {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

/// All paths of the space, in lexicographic order of the joined height sequence.
pub fn enumerate_paths(space: RsosSpace) -> Result<Vec<RsosPath>> {
    let total = space.d + space.dp;
    if total > ENUMERATION_GUARD {
        return Err(Error::DimensionCap { dim: total as u128, cap: ENUMERATION_GUARD as u128 });
    }
    let mut out = Vec::new();
    let mut seq = vec![0u32];
    fn rec(space: &RsosSpace, seq: &mut Vec<u32>, total: usize, out: &mut Vec<RsosPath>) {
        let i = seq.len() - 1;
        if i == total {
            if *seq.last().unwrap() == 0 {
                out.push(RsosPath { a: seq[..=space.d].to_vec(), b: seq[space.d..].to_vec() });
            }
            return;
        }
        let x = seq[i];
        for y in 0..=space.sbar_doubled {
            if space.step(i, x, y) {
                seq.push(y);
                rec(space, seq, total, out);
                seq.pop();
            }
        }
    }
    rec(&space, &mut seq, total, &mut out);
    Ok(out)
}

/// Exact number of paths by dynamic programming over (position, height).
pub fn count_paths(space: RsosSpace) -> BigUint {
    let h = space.sbar_doubled as usize + 1;
    let mut layer = vec![BigUint::zero(); h];
    layer[0] = BigUint::one();
    for i in 0..space.d + space.dp {
        let mut next = vec![BigUint::zero(); h];
        for (x, c) in layer.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (y, slot) in next.iter_mut().enumerate() {
                if space.step(i, x as u32, y as u32) {
                    *slot += c;
                }
            }
        }
        layer = next;
    }
    layer.swap_remove(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaValue {
    pub value: f64,
    pub rounded: u64,
}

/// 2^D/(s̄+1) Σ_{q=1}^{2s̄+1} sin²(qπ/(2s̄+2)) cos^D(qπ/(2s̄+2)) for even D.
pub fn zj_formula(dsum: usize, sbar: Spin) -> Result<FormulaValue> {
    if dsum % 2 != 0 {
        return Err(Error::Validation(format!("D = {dsum} must be even")));
    }
    if dsum > 1000 {
        return Err(Error::Validation(format!("D = {dsum} is beyond the floating-point range of the formula")));
    }
    let n = sbar.doubled + 2;
    let sum: f64 = (1..n)
        .map(|q| {
            let x = q as f64 * PI / n as f64;
            x.sin().powi(2) * x.cos().powi(dsum as i32)
        })
        .sum();
    let value = 2f64.powi(dsum as i32) / (sbar.value() + 1.0) * sum;
    let rounded = value.round();
    if (value - rounded).abs() > 1e-6 * rounded.max(1.0) {
        return Err(Error::Numeric(format!("formula value {value} is not an integer")));
    }
    Ok(FormulaValue { value, rounded: rounded as u64 })
}

/// Z_L = 2^{D_L}.
pub fn z_top(d_top: usize) -> BigUint {
    BigUint::one() << d_top
}

/// The intermediate binomial form of Z_j: a sum over even A_r (r strictly
/// inside the gap) of Π binom((A_{r−½} + A_{r+½})/2, A_r).
pub fn z_binomial_sum(d_lo: usize, d_hi: usize, gap: Spin) -> BigUint {
    let interior = gap.doubled.saturating_sub(1) as usize;
    let cap = d_lo.max(d_hi);
    let mut seq = vec![0usize; interior + 2];
    seq[0] = d_lo;
    seq[interior + 1] = d_hi;
    fn binom(n: usize, k: usize) -> BigUint {
        if k > n {
            return BigUint::zero();
        }
        let mut acc = BigUint::one();
        for i in 0..k {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }
    fn rec(seq: &mut Vec<usize>, pos: usize, cap: usize) -> BigUint {
        let last = seq.len() - 1;
        if pos == last {
            let mut prod = BigUint::one();
            for r in 1..last {
                let top = seq[r - 1] + seq[r + 1];
                if top % 2 != 0 {
                    return BigUint::zero();
                }
                prod *= binom(top / 2, seq[r]);
                if prod.is_zero() {
                    break;
                }
            }
            return prod;
        }
        let mut total = BigUint::zero();
        for a in (0..=cap).step_by(2) {
            seq[pos] = a;
            total += rec(seq, pos + 1, cap);
        }
        total
    }
    rec(&mut seq, 1, cap)
}

/// Hole and new-string bookkeeping for one excited configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleLedger {
    /// D_j for j = 1..=n.
    pub d: Vec<usize>,
    /// Doubled 2r → ν̃_r.
    pub nu_tilde: BTreeMap<u32, usize>,
    /// Doubled 2r → A_r for every r ∉ S up to one step above the largest string.
    pub a: BTreeMap<u32, i64>,
    pub mu: Vec<i64>,
    pub total_spin: (i64, i64),
    /// Π_{j<n} |H^RSOS(D_j; D_{j+1}; s̄_{j+1} − s̄_j)| · 2^{D_n}.
    pub degeneracy: BigUint,
}

/// Builds the ledger, validating A_r ≥ 0 and even, and checks that the
/// inversion ν̃_r = (A_{r−½} + A_{r+½} − 2A_r)/2 reproduces ν̃.
pub fn hole_ledger(spec: &ChainSpec, d: &[usize], nu_tilde: &BTreeMap<u32, usize>) -> Result<HoleLedger> {
    let n = spec.n_distinct();
    if d.len() != n {
        return Err(Error::Validation(format!("expected {n} hole counts, got {}", d.len())));
    }
    let nu: BTreeMap<u32, usize> = nu_tilde.iter().filter(|(_, &c)| c > 0).map(|(&k, &v)| (k, v)).collect();
    let ctx = ExcitationContext::new(
        spec,
        d.iter().map(|&k| vec![0.0; k]).collect(),
        nu.iter().map(|(&m, &c)| (m, vec![0.0; c])).collect(),
    )?;
    let top = spec.sbar(n).doubled;
    let max_d = nu.keys().copied().max().unwrap_or(0).max(top) + 1;
    let is_sea = |x: u32| spec.distinct.iter().any(|s| s.doubled == x);
    let mut a = BTreeMap::new();
    for r in 1..=max_d {
        if is_sea(r) {
            continue;
        }
        let direct = ctx.a_r(spec, r);
        let j = (0..=n).rev().find(|&j| spec.sbar(j).doubled < r).unwrap_or(0);
        if j < n {
            let interp = ctx.a_r_interpolated(spec, j, r);
            if interp != Rational64::from_integer(direct) {
                return Err(Error::Numeric(format!("A at 2r = {r}: interpolation {interp} vs valence {direct}")));
            }
        }
        if direct < 0 || direct % 2 != 0 {
            return Err(Error::Validation(format!("A at 2r = {r} is {direct}; it must be even and non-negative")));
        }
        a.insert(r, direct);
    }
    // inversion with A_s = D_s and A_0 = 0
    let a_at = |x: u32| -> i64 {
        if x == 0 {
            0
        } else if let Ok(j) = spec.index_of(Spin::from_doubled(x)) {
            d[j - 1] as i64
        } else {
            a.get(&x).copied().unwrap_or_else(|| ctx.a_r(spec, x))
        }
    };
    for r in 1..=max_d {
        if is_sea(r) {
            continue;
        }
        let twice = a_at(r - 1) + a_at(r + 1) - 2 * a_at(r);
        if twice != 2 * ctx.nu_tilde(r) as i64 {
            return Err(Error::Numeric(format!("inversion fails at 2r = {r}: {twice}/2 vs {}", ctx.nu_tilde(r))));
        }
    }
    let mut degeneracy = z_top(d[n - 1]);
    for j in 0..n {
        let gap = Spin::from_doubled(spec.sbar(j + 1).doubled - spec.sbar(j).doubled);
        let lo = if j == 0 { 0 } else { d[j - 1] };
        degeneracy *= count_paths(RsosSpace::new(lo, d[j], gap)?);
    }
    let s = ctx.total_spin(spec);
    Ok(HoleLedger { d: d.to_vec(), nu_tilde: nu, a, mu: ctx.mu.clone(), total_spin: (*s.numer(), *s.denom()), degeneracy })
}

fn restriction_from_hbar(hbar: f64) -> Result<u32> {
    let n = PI / hbar;
    let r = n.round();
    if !(hbar > 0.0) || (n - r).abs() > 1e-9 || r < 3.0 {
        return Err(Error::Domain(format!("ħ = {hbar} is not π/(2s+2) for a positive half-integer s")));
    }
    Ok(r as u32)
}

fn check_heights(n: u32, hs: &[u32]) -> Result<()> {
    if let Some(h) = hs.iter().find(|&&h| h + 2 > n) {
        return Err(Error::Domain(format!("height {h} outside 0..={}", n - 2)));
    }
    Ok(())
}

/// W_ħ(d c | a b; λ) = δ_ac − (−1)^{(a−c)/2} sinh(ħλ)/sinh(ħ(λ−i))
/// √(sin ħ(a+1) sin ħ(c+1) / sin ħ(b+1) sin ħ(d+1)) δ_bd,
/// with d, c the upper and a, b the lower corners.
pub fn boltzmann_weight(hbar: f64, a: u32, b: u32, c: u32, d: u32, lambda: Complex64) -> Result<Complex64> {
    let n = restriction_from_hbar(hbar)?;
    check_heights(n, &[a, b, c, d])?;
    Ok(weight_unchecked(hbar, a, b, c, d, lambda)?)
}

fn weight_unchecked(hbar: f64, a: u32, b: u32, c: u32, d: u32, lambda: Complex64) -> Result<Complex64> {
    let mut w = Complex64::new(if a == c { 1.0 } else { 0.0 }, 0.0);
    if b == d {
        let diff = a as i64 - c as i64;
        if diff % 2 != 0 {
            return Err(Error::Domain(format!("odd height difference a − c = {diff}")));
        }
        let sign = if (diff / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let s = |x: u32| (hbar * (x as f64 + 1.0)).sin();
        let root = (s(a) * s(c) / (s(b) * s(d))).sqrt();
        let ratio = (lambda * hbar).sinh() / ((lambda - Complex64::new(0.0, 1.0)) * hbar).sinh();
        w -= ratio * sign * root;
    }
    Ok(w)
}

/// Lexicographically smallest unit-step path of `steps` steps from x to y.
fn lowest_path(x: u32, y: u32, steps: usize, max_h: u32) -> Option<Vec<u32>> {
    let reach = |from: u32, left: usize| from.abs_diff(y) as usize <= left && (left + from.abs_diff(y) as usize) % 2 == 0;
    if !reach(x, steps) {
        return None;
    }
    let mut path = vec![x];
    let mut cur = x;
    for left in (0..steps).rev() {
        let next = [cur.wrapping_sub(1), cur + 1]
            .into_iter()
            .filter(|&h| h <= max_h && cur > 0 || h == cur + 1 && h <= max_h)
            .find(|&h| reach(h, left))?;
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Fused weight with jump 2s − 1 between the columns: corners are the upper
/// (b_1, b_{2s}) and lower (a_1, a_{2s}) heights. The lower internal heights
/// are summed; the upper internal heights follow the lowest admissible path.
/// Equal to 1 for s = ½.
pub fn fused_weight(hbar: f64, edges: [u32; 4], lambda: Complex64, s: Spin) -> Result<Complex64> {
    let n = restriction_from_hbar(hbar)?;
    check_heights(n, &edges)?;
    fused_unchecked(hbar, n - 2, edges, lambda, s.doubled)
}

fn fused_unchecked(hbar: f64, max_h: u32, edges: [u32; 4], lambda: Complex64, s2: u32) -> Result<Complex64> {
    if s2 <= 1 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let [b1, bl, a1, al] = edges;
    let steps = s2 as usize - 1;
    let Some(top) = lowest_path(b1, bl, steps, max_h) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut bottom = vec![a1];
    fn rec(
        hbar: f64,
        max_h: u32,
        top: &[u32],
        bottom: &mut Vec<u32>,
        al: u32,
        lambda: Complex64,
        s2: u32,
        total: &mut Complex64,
    ) -> Result<()> {
        let steps = top.len() - 1;
        if bottom.len() == steps {
            let last = *bottom.last().unwrap();
            if last.abs_diff(al) != 1 {
                return Ok(());
            }
            bottom.push(al);
            let mut prod = Complex64::new(1.0, 0.0);
            for k in 0..steps {
                let shift = Complex64::new(0.0, (k as f64 + 1.0) - s2 as f64 + 1.0);
                prod *= weight_unchecked(hbar, bottom[k], bottom[k + 1], top[k + 1], top[k], lambda + shift)?;
            }
            bottom.pop();
            *total += prod;
            return Ok(());
        }
        let cur = *bottom.last().unwrap();
        for next in [cur.checked_sub(1), Some(cur + 1)].into_iter().flatten() {
            if next <= max_h {
                bottom.push(next);
                rec(hbar, max_h, top, bottom, al, lambda, s2, total)?;
                bottom.pop();
            }
        }
        Ok(())
    }
    rec(hbar, max_h, &top, &mut bottom, al, lambda, s2, &mut total)?;
    Ok(total)
}

/// Which RSOS transfer matrix an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransferKind {
    /// t_1^{(j,d)}: plain auxiliary space, d indexes the holes of sea j+1.
    PlainAux,
    /// t_{2s̄−1}^{(j,d)}: fused auxiliary space, d indexes the holes of sea j.
    FusedAux,
}

/// Data for one RSOS transfer matrix on H^RSOS(D_j; D_{j+1}; s̄_{j+1} − s̄_j).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsosTransferContext {
    pub space: RsosSpace,
    /// λ̃_{j,q}, q = 1..D_j.
    pub holes_lo: Vec<f64>,
    /// λ̃_{j+1,q}, q = 1..D_{j+1}.
    pub holes_hi: Vec<f64>,
    /// 1-based hole index d.
    pub d: usize,
}

impl RsosTransferContext {
    pub fn new(space: RsosSpace, holes_lo: Vec<f64>, holes_hi: Vec<f64>, d: usize) -> Result<Self> {
        if holes_lo.len() != space.d || holes_hi.len() != space.dp {
            return Err(Error::Validation(format!(
                "expected {} and {} hole rapidities, got {} and {}",
                space.d,
                space.dp,
                holes_lo.len(),
                holes_hi.len()
            )));
        }
        Ok(RsosTransferContext { space, holes_lo, holes_hi, d })
    }

    /// Transfer context for sea pair (j, j+1) of an excitation, j = 0..n−1.
    pub fn from_excitation(spec: &ChainSpec, ctx: &ExcitationContext, j: usize, d: usize) -> Result<Self> {
        let n = spec.n_distinct();
        if j >= n {
            return Err(Error::Domain(format!("gap index {j} outside 0..{n}")));
        }
        let gap = Spin::from_doubled(spec.sbar(j + 1).doubled - spec.sbar(j).doubled);
        let lo = if j == 0 { Vec::new() } else { ctx.holes[j - 1].clone() };
        let hi = ctx.holes[j].clone();
        Self::new(RsosSpace::new(lo.len(), hi.len(), gap)?, lo, hi, d)
    }

    fn check_d(&self, kind: TransferKind) -> Result<()> {
        let bound = match kind {
            TransferKind::PlainAux => self.space.dp,
            TransferKind::FusedAux => self.space.d,
        };
        if self.d == 0 || self.d > bound {
            return Err(Error::Domain(format!("hole index {} outside 1..={bound}", self.d)));
        }
        Ok(())
    }
}

fn k_norm(period: u32, r: u32, lambda: f64) -> Result<Complex64> {
    k_value(KernelParams::with_period(Some(period), r)?, lambda)
}

fn check_path(space: &RsosSpace, p: &RsosPath) -> Result<()> {
    let ok = p.a.len() == space.d + 1
        && p.b.len() == space.dp + 1
        && p.a[0] == 0
        && p.a[space.d] == p.b[0]
        && p.b[space.dp] == 0
        && p.a.iter().chain(&p.b).all(|&h| h <= space.sbar_doubled)
        && p.a.windows(2).all(|w| space.a_step(w[0], w[1]))
        && p.b.windows(2).all(|w| RsosSpace::b_step(w[0], w[1]));
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("{p:?} is not a path of {space:?}")))
    }
}

/// ⟨bra| t(λ) |ket⟩ for the plain or fused-auxiliary RSOS transfer matrix,
/// including its normalization.
pub fn rsos_transfer_entry(
    kind: TransferKind,
    tc: &RsosTransferContext,
    bra: &RsosPath,
    ket: &RsosPath,
    lambda: f64,
) -> Result<Complex64> {
    tc.check_d(kind)?;
    check_path(&tc.space, bra)?;
    check_path(&tc.space, ket)?;
    let norm = normalization(kind, tc, lambda)?;
    Ok(norm * entry_weights(kind, tc, bra, ket, lambda)?)
}

fn normalization(kind: TransferKind, tc: &RsosTransferContext, lambda: f64) -> Result<Complex64> {
    let g = tc.space.sbar_doubled;
    let period = tc.space.restriction();
    let (r_lo, r_hi) = match kind {
        TransferKind::PlainAux => (g - 1, 1),
        TransferKind::FusedAux => (1, g - 1),
    };
    let mut n = Complex64::new(1.0, 0.0);
    for &h in &tc.holes_lo {
        n *= k_norm(period, r_lo, h - lambda)?;
    }
    for &h in &tc.holes_hi {
        n *= k_norm(period, r_hi, h - lambda)?;
    }
    Ok(n)
}

fn entry_weights(kind: TransferKind, tc: &RsosTransferContext, bra: &RsosPath, ket: &RsosPath, lambda: f64) -> Result<Complex64> {
    let sp = &tc.space;
    let hbar = sp.hbar();
    let g = sp.sbar_doubled;
    let max_h = g;
    let c = |x: f64| Complex64::new(x, 0.0);
    let (a, b, ap, bp) = (&ket.a, &ket.b, &bra.a, &bra.b);
    let d = tc.d;
    let mut v = Complex64::new(1.0, 0.0);
    match kind {
        TransferKind::PlainAux => {
            // a'_{D+1} = b'_1
            let ap_at = |q: usize| if q <= sp.d { ap[q] } else { bp[1] };
            for q in 1..=sp.d {
                v *= fused_unchecked(hbar, max_h, [a[q - 1], a[q], ap_at(q), ap_at(q + 1)], c(lambda - tc.holes_lo[q - 1]), g)?;
            }
            for q in 1..sp.dp {
                let hole = if q < d { tc.holes_hi[q - 1] } else { tc.holes_hi[q] };
                v *= weight_unchecked(hbar, bp[q], bp[q + 1], b[q], b[q - 1], c(lambda - hole))?;
            }
        }
        TransferKind::FusedAux => {
            let bar = |x: u32| g - x;
            // b_{−1} = a_{D−1}
            let b_at = |q: i64| if q < 0 { a[sp.d - 1] } else { b[q as usize] };
            for q in 1..=sp.dp {
                let edges = [b_at(q as i64 - 2), bar(b[q - 1]), bar(bp[q - 1]), bp[q]];
                v *= fused_unchecked(hbar, max_h, edges, c(lambda - tc.holes_hi[q - 1]), g)?;
            }
            for q in 1..sp.d {
                let hole = if q < d { tc.holes_lo[q - 1] } else { tc.holes_lo[q] };
                v *= weight_unchecked(hbar, bar(ap[q]), ap[q + 1], bar(a[q]), a[q - 1], c(lambda - hole))?;
            }
        }
    }
    Ok(v)
}

/// The full transfer matrix on the path basis of [`enumerate_paths`]
/// (rows are bras, columns kets).
pub fn rsos_transfer_matrix(kind: TransferKind, tc: &RsosTransferContext, lambda: f64) -> Result<DenseOperator> {
    tc.check_d(kind)?;
    let paths = enumerate_paths(tc.space)?;
    let norm = normalization(kind, tc, lambda)?;
    let n = paths.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, bra) in paths.iter().enumerate() {
        for (k, ket) in paths.iter().enumerate() {
            m[(i, k)] = norm * entry_weights(kind, tc, bra, ket, lambda)?;
        }
    }
    DenseOperator::new(m, vec![n])
}

/// Counts as f64 for tables.
pub fn count_as_f64(c: &BigUint) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(d: usize, dp: usize, s2: u32) -> RsosSpace {
        RsosSpace::new(d, dp, Spin::from_doubled(s2)).unwrap()
    }

    fn spec(motif: &[u32]) -> ChainSpec {
        ChainSpec::with_cap(motif.iter().map(|&d| Spin::from_doubled(d)).collect(), 1, u128::MAX).unwrap()
    }

    #[test]
    fn test_enumeration_examples() {
        for s2 in 1..=7 {
            assert_eq!(enumerate_paths(space(0, 0, s2)).unwrap().len(), 1);
        }
        assert_eq!(enumerate_paths(space(0, 2, 1)).unwrap().len(), 1);
        assert_eq!(enumerate_paths(space(10, 0, 4)).unwrap().len(), 41);
        assert_eq!(enumerate_paths(space(4, 6, 4)).unwrap().len(), 41);
        assert!(matches!(enumerate_paths(space(8, 8, 2)), Err(Error::DimensionCap { .. })));
        assert!(RsosSpace::new(3, 0, Spin::ONE).is_err());
    }

    #[test]
    fn test_count_matches_enumeration() {
        for s2 in 1..=7 {
            for d in (0..=12).step_by(2) {
                for dp in (0..=12 - d).step_by(2) {
                    let sp = space(d, dp, s2);
                    let n = enumerate_paths(sp).unwrap().len();
                    assert_eq!(count_paths(sp), BigUint::from(n), "{sp:?}");
                }
            }
        }
    }

    #[test]
    fn test_formula_examples() {
        let f = zj_formula(10, Spin::from_doubled(4)).unwrap();
        assert_eq!(f.rounded, 41);
        for d in (0..=20).step_by(2) {
            assert_eq!(zj_formula(d, Spin::HALF).unwrap().rounded, 1);
            assert_eq!(count_paths(space(d, 0, 1)), BigUint::one());
        }
        assert_eq!(z_top(4), BigUint::from(16u32));
        assert!(zj_formula(3, Spin::ONE).is_err());
    }

    #[test]
    fn test_binomial_form_matches_paths() {
        for s2 in 1..=5 {
            for lo in (0..=6).step_by(2) {
                for hi in (0..=6).step_by(2) {
                    let gap = Spin::from_doubled(s2);
                    assert_eq!(z_binomial_sum(lo, hi, gap), count_paths(space(lo, hi, s2)), "{lo} {hi} {s2}");
                }
            }
        }
    }

    #[test]
    fn test_ledger_examples() {
        let s = spec(&[1]);
        let l = hole_ledger(&s, &[0], &BTreeMap::new()).unwrap();
        assert!(l.a.values().all(|&a| a == 0));
        assert_eq!(l.total_spin, (0, 1));
        assert_eq!(l.degeneracy, BigUint::one());
        let s = spec(&[1, 3]);
        let l = hole_ledger(&s, &[2, 2], &BTreeMap::new()).unwrap();
        assert_eq!(l.a[&2], 2);
        assert_eq!(l.total_spin, (1, 1));
        // one 2-string removes the spin
        let l = hole_ledger(&spec(&[1]), &[2], &[(2, 1)].into_iter().collect()).unwrap();
        assert_eq!(l.total_spin, (0, 1));
        assert_eq!(l.degeneracy, BigUint::from(4u32));
        assert!(hole_ledger(&spec(&[1]), &[0], &[(2, 1)].into_iter().collect()).is_err());
    }

    #[test]
    fn test_weight_initial_condition() {
        let hbar = PI / 5.0;
        for a in 0..=3 {
            for b in 0..=3 {
                for c in 0..=3 {
                    for d in 0..=3 {
                        if (a + c) % 2 == 1 && b == d {
                            continue;
                        }
                        let w = boltzmann_weight(hbar, a, b, c, d, Complex64::new(0.0, 0.0)).unwrap();
                        assert_eq!(w, Complex64::new(if a == c { 1.0 } else { 0.0 }, 0.0));
                    }
                }
            }
        }
        assert!(boltzmann_weight(hbar, 4, 0, 0, 0, Complex64::new(0.1, 0.0)).is_err());
        assert!(boltzmann_weight(1.0, 0, 0, 0, 0, Complex64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn test_props_identities() {
        let hbar = PI / 3.0;
        let k = KernelParams::with_period(Some(3), 1).unwrap();
        for x in [0.3, 1.0, 2.5, -0.7] {
            let kx = k_value(k, -x).unwrap();
            let w1 = boltzmann_weight(hbar, 1, 0, 1, 0, Complex64::new(x, 0.0)).unwrap();
            let w2 = boltzmann_weight(hbar, 0, 1, 0, 1, Complex64::new(x, 0.0)).unwrap();
            assert!((kx * w1 - 1.0).norm() < 1e-12, "{x}");
            assert!((kx * w2 - 1.0).norm() < 1e-12, "{x}");
        }
    }

    #[test]
    fn test_fused_weight_reduces() {
        let hbar = PI / 4.0;
        let l = Complex64::new(0.37, 0.0);
        for e in [[0, 1, 1, 0], [1, 0, 0, 1], [1, 2, 2, 1], [2, 1, 1, 2], [1, 0, 2, 1]] {
            let f = fused_weight(hbar, e, l, Spin::ONE).unwrap();
            let w = boltzmann_weight(hbar, e[2], e[3], e[1], e[0], l).unwrap();
            assert!((f - w).norm() < 1e-15);
        }
        assert_eq!(fused_weight(PI / 3.0, [0, 0, 1, 1], l, Spin::HALF).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn test_lowest_path() {
        assert_eq!(lowest_path(1, 1, 2, 3), Some(vec![1, 0, 1]));
        assert_eq!(lowest_path(0, 2, 2, 3), Some(vec![0, 1, 2]));
        assert_eq!(lowest_path(0, 1, 2, 3), None);
        assert_eq!(lowest_path(3, 3, 2, 3), Some(vec![3, 2, 3]));
    }

    #[test]
    fn test_trivial_transfer() {
        let tc = RsosTransferContext::new(space(0, 0, 2), vec![], vec![], 1).unwrap();
        let p = RsosPath { a: vec![0], b: vec![0] };
        assert!(rsos_transfer_entry(TransferKind::PlainAux, &tc, &p, &p, 0.3).is_err());
        let w = entry_weights(TransferKind::PlainAux, &tc, &p, &p, 0.3).unwrap();
        assert_eq!(w, Complex64::new(1.0, 0.0));
        assert_eq!(normalization(TransferKind::PlainAux, &tc, 0.3).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn test_gap_half_reduces_to_scalar() {
        let lo = vec![0.4, -1.1];
        let hi = vec![0.25, 1.3, -0.6, 2.0];
        for d in 1..=hi.len() {
            let tc = RsosTransferContext::new(space(2, 4, 1), lo.clone(), hi.clone(), d).unwrap();
            let paths = enumerate_paths(tc.space).unwrap();
            assert_eq!(paths.len(), 1);
            let x = hi[d - 1];
            let e = rsos_transfer_entry(TransferKind::PlainAux, &tc, &paths[0], &paths[0], x).unwrap();
            let expected: Complex64 = lo
                .iter()
                .map(|&l| {
                    let z = Complex64::new(0.5 * PI * (x - l), 0.25 * PI);
                    Complex64::new(0.0, 1.0) * z.cosh() / z.sinh()
                })
                .product();
            assert!((e - expected).norm() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn test_transfer_spectra_unimodular() {
        // spin-1 homogeneous sector and a mixed gap-1 sector
        let cases = [
            (space(0, 4, 2), vec![], vec![0.3, -0.7, 0.1, 1.2]),
            (space(2, 2, 2), vec![0.4, -0.2], vec![0.1, 1.2]),
        ];
        for (sp, lo, hi) in cases {
            for d in 1..=sp.dp {
                let tc = RsosTransferContext::new(sp, lo.clone(), hi.clone(), d).unwrap();
                let t = rsos_transfer_matrix(TransferKind::PlainAux, &tc, hi[d - 1]).unwrap();
                let spec = crate::chain::diagonalize(&t).unwrap();
                for z in spec.eigenvalues {
                    assert!((z.norm() - 1.0).abs() < 1e-9, "{sp:?} d={d}: {z}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn count_depends_only_on_sum(s2 in 1u32..=7, d in 0usize..=6, dp in 0usize..=6) {
                let (d, dp) = (2 * d, 2 * dp);
                prop_assert_eq!(count_paths(space(d, dp, s2)), count_paths(space(d + dp, 0, s2)));
            }

            #[test]
            fn count_matches_formula(s2 in 1u32..=7, half in 0usize..=10) {
                let dsum = 2 * half;
                let f = zj_formula(dsum, Spin::from_doubled(s2)).unwrap();
                prop_assert!((f.value - f.rounded as f64).abs() < 1e-9 * f.value.max(1.0));
                prop_assert_eq!(BigUint::from(f.rounded), count_paths(space(dsum, 0, s2)));
            }

            #[test]
            fn ledger_a_even_nonnegative(d1 in 0usize..=3, d2 in 0usize..=3, nu in 0usize..=2) {
                let s = spec(&[1, 5]);
                let strings: BTreeMap<u32, usize> = [(3u32, nu)].into_iter().collect();
                if let Ok(l) = hole_ledger(&s, &[2 * d1, 2 * d2], &strings) {
                    prop_assert!(l.a.values().all(|&a| a >= 0 && a % 2 == 0));
                }
            }
        }
    }
}
