//! gl(2) spin representations, fusion projectors, fused R-matrices and the
//! Yang-Baxter residual.
//!
//! Tensor legs are ordered left to right; an R-matrix acts on (aux ⊗ site).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;

use crate::error::{Error, Result};

/// Largest doubled spin accepted by validation.
pub const MAX_DOUBLED_SPIN: u32 = 8;

/// A half-integer spin stored doubled (s = doubled/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spin {
    pub doubled: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { doubled: 1 };
    pub const ONE: Spin = Spin { doubled: 2 };

    pub fn from_doubled(doubled: u32) -> Spin {
        Spin { doubled }
    }

    /// Validated constructor enforcing the desk-scale cap.
    pub fn checked(doubled: u32) -> Result<Spin> {
        if doubled > MAX_DOUBLED_SPIN {
            return Err(Error::Validation(format!(
                "spin {}/2 above the cap {}/2",
                doubled, MAX_DOUBLED_SPIN
            )));
        }
        Ok(Spin { doubled })
    }

    pub fn dim(self) -> usize {
        self.doubled as usize + 1
    }

    pub fn value(self) -> f64 {
        self.doubled as f64 / 2.0
    }

    pub fn rational(self) -> Rational64 {
        Rational64::new(self.doubled as i64, 2)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.doubled % 2 == 0 {
            write!(f, "{}", self.doubled / 2)
        } else {
            write!(f, "{}/2", self.doubled)
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    /// Accepts "k/2" or an integer.
    fn from_str(s: &str) -> Result<Spin> {
        let t = s.trim();
        let bad = || Error::Validation(format!("cannot parse spin '{s}'"));
        if let Some((num, den)) = t.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            let den: u32 = den.trim().parse().map_err(|_| bad())?;
            match den {
                1 => Spin::checked(2 * num),
                2 => Spin::checked(num),
                _ => Err(bad()),
            }
        } else {
            let n: u32 = t.parse().map_err(|_| bad())?;
            Spin::checked(2 * n)
        }
    }
}

impl serde::Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Spin, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A dense complex operator on a tensor product of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub mat: DMatrix<Complex64>,
    pub factor_dims: Vec<usize>,
}

impl DenseOperator {
    pub fn new(mat: DMatrix<Complex64>, factor_dims: Vec<usize>) -> Result<Self> {
        let n: usize = factor_dims.iter().product();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Validation(format!(
                "operator shape {}x{} does not match factor dims {:?}",
                mat.nrows(),
                mat.ncols(),
                factor_dims
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite operator entry".into()));
        }
        Ok(DenseOperator { mat, factor_dims })
    }

    pub fn identity(factor_dims: Vec<usize>) -> Self {
        let n = factor_dims.iter().product();
        DenseOperator { mat: DMatrix::identity(n, n), factor_dims }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        DenseOperator { mat: self.mat.kronecker(&other.mat), factor_dims: dims }
    }

    pub fn mul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: &self.mat * &other.mat, factor_dims: self.factor_dims.clone() }
    }

    pub fn scale(&self, z: Complex64) -> DenseOperator {
        DenseOperator { mat: &self.mat * z, factor_dims: self.factor_dims.clone() }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: &self.mat + &other.mat, factor_dims: self.factor_dims.clone() }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: &self.mat - &other.mat, factor_dims: self.factor_dims.clone() }
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator { mat: self.mat.adjoint(), factor_dims: self.factor_dims.clone() }
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn commutator_norm(&self, other: &DenseOperator) -> f64 {
        (&self.mat * &other.mat - &other.mat * &self.mat)
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn distance(&self, other: &DenseOperator) -> f64 {
        (&self.mat - &other.mat).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// The generators π_s(e3), π_s(e±), π_s(e0).
#[derive(Debug, Clone)]
pub struct SpinRep {
    pub e3: DenseOperator,
    pub e_plus: DenseOperator,
    pub e_minus: DenseOperator,
    pub e0: DenseOperator,
}

pub fn spin_rep(s: Spin) -> SpinRep {
    let d = s.dim();
    let two_s = s.doubled as f64;
    let mut e3 = DMatrix::zeros(d, d);
    let mut ep = DMatrix::zeros(d, d);
    for n in 1..=d {
        e3[(n - 1, n - 1)] = Complex64::new(0.5 * two_s + 1.0 - n as f64, 0.0);
        if n < d {
            ep[(n - 1, n)] = Complex64::new((n as f64 * (two_s + 1.0 - n as f64)).sqrt(), 0.0);
        }
    }
    let em = ep.transpose();
    SpinRep {
        e3: DenseOperator { mat: e3, factor_dims: vec![d] },
        e_plus: DenseOperator { mat: ep, factor_dims: vec![d] },
        e_minus: DenseOperator { mat: em, factor_dims: vec![d] },
        e0: DenseOperator::identity(vec![d]),
    }
}

/// The permutation P(x ⊗ y) = y ⊗ x from V_a ⊗ V_b to V_b ⊗ V_a.
pub fn permutation(da: usize, db: usize) -> DenseOperator {
    let n = da * db;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..da {
        for j in 0..db {
            m[(j * da + i, i * db + j)] = Complex64::new(1.0, 0.0);
        }
    }
    DenseOperator { mat: m, factor_dims: vec![db, da] }
}

/// The two-site Casimir e3⊗e3 + ½(e+⊗e− + e−⊗e+).
pub fn coupling(s: Spin, sp: Spin) -> DenseOperator {
    let a = spin_rep(s);
    let b = spin_rep(sp);
    let half = Complex64::new(0.5, 0.0);
    a.e3.kron(&b.e3)
        .add(&a.e_plus.kron(&b.e_minus).add(&a.e_minus.kron(&b.e_plus)).scale(half))
}

/// Doubled values of the spins k with |s − s'| ≤ k ≤ s + s'.
pub fn fusion_channels(s: Spin, sp: Spin) -> Vec<u32> {
    let lo = s.doubled.abs_diff(sp.doubled);
    let hi = s.doubled + sp.doubled;
    (lo..=hi).step_by(2).collect()
}

fn casimir_value(s: Spin, sp: Spin, k2: u32) -> f64 {
    let k = k2 as f64 / 2.0;
    let a = s.value();
    let b = sp.value();
    0.5 * (k * (k + 1.0) - a * (a + 1.0) - b * (b + 1.0))
}

/// Projector onto the spin-k component of V_s ⊗ V_s', by Lagrange interpolation
/// in the Casimir.
pub fn projector(s: Spin, sp: Spin, k: Spin) -> Result<DenseOperator> {
    let channels = fusion_channels(s, sp);
    if !channels.contains(&k.doubled) {
        return Err(Error::Domain(format!(
            "spin {k} is not in the fusion of {s} and {sp}"
        )));
    }
    let c = coupling(s, sp);
    let n = c.dim();
    let xk = casimir_value(s, sp, k.doubled);
    let mut out = DenseOperator::identity(vec![s.dim(), sp.dim()]);
    for &j in &channels {
        if j == k.doubled {
            continue;
        }
        let xj = casimir_value(s, sp, j);
        let shifted = &c.mat - DMatrix::<Complex64>::identity(n, n) * Complex64::new(xj, 0.0);
        out.mat = &out.mat * shifted * Complex64::new(1.0 / (xk - xj), 0.0);
    }
    Ok(out)
}

/// f_k(u) = Π_{ℓ=k+1}^{s+s'} (u − iℓ)/(u + iℓ), with k and the bound doubled.
fn fusion_coefficient(k2: u32, top2: u32, u: Complex64) -> Result<Complex64> {
    let mut f = Complex64::new(1.0, 0.0);
    let mut l2 = k2 + 2;
    while l2 <= top2 {
        let l = l2 as f64 / 2.0;
        let den = u + Complex64::new(0.0, l);
        if den.norm() < 1e-12 {
            return Err(Error::Pole(format!("u = -i*{l} is a pole of the fused R-matrix")));
        }
        f *= (u - Complex64::new(0.0, l)) / den;
        l2 += 2;
    }
    Ok(f)
}

/// Fused R-matrix R^(s,s')(u) = Σ_k f_k(u) P_k on V_s ⊗ V_s'.
pub fn fused_r(s: Spin, sp: Spin, u: Complex64) -> Result<DenseOperator> {
    let top = s.doubled + sp.doubled;
    let mut out = DenseOperator {
        mat: DMatrix::zeros(s.dim() * sp.dim(), s.dim() * sp.dim()),
        factor_dims: vec![s.dim(), sp.dim()],
    };
    for k in fusion_channels(s, sp) {
        let f = fusion_coefficient(k, top, u)?;
        let p = projector(s, sp, Spin::from_doubled(k))?;
        out.mat += p.mat * f;
    }
    Ok(out)
}

/// Embeds an operator on legs (a, b) of a multi-leg space with dimensions `dims`.
pub fn embed_two(op: &DenseOperator, dims: &[usize], a: usize, b: usize) -> DenseOperator {
    let n: usize = dims.iter().product();
    let da = dims[a];
    let db = dims[b];
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        let ia = (col / strides[a]) % da;
        let ib = (col / strides[b]) % db;
        let base = col - ia * strides[a] - ib * strides[b];
        for ja in 0..da {
            for jb in 0..db {
                let z = op.mat[(ja * db + jb, ia * db + ib)];
                if z != Complex64::new(0.0, 0.0) {
                    m[(base + ja * strides[a] + jb * strides[b], col)] += z;
                }
            }
        }
    }
    DenseOperator { mat: m, factor_dims: dims.to_vec() }
}

/// Max-norm of R12(u−v) R13(u−w) R23(v−w) − R23(v−w) R13(u−w) R12(u−v).
pub fn ybe_residual(si: Spin, sj: Spin, sk: Spin, u: Complex64, v: Complex64, w: Complex64) -> Result<f64> {
    let dims = [si.dim(), sj.dim(), sk.dim()];
    let r12 = embed_two(&fused_r(si, sj, u - v)?, &dims, 0, 1);
    let r13 = embed_two(&fused_r(si, sk, u - w)?, &dims, 0, 2);
    let r23 = embed_two(&fused_r(sj, sk, v - w)?, &dims, 1, 2);
    let lhs = r12.mul(&r13).mul(&r23);
    let rhs = r23.mul(&r13).mul(&r12);
    Ok(lhs.distance(&rhs))
}
