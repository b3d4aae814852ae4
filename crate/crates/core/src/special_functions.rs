//! Elementary kernels: the rational family e_r, φ_r, the trigonometric family
//! G, Γ, γ with its Fourier transform γ̂, the damped transform κ̂ and the
//! unimodular kernel K, including every degenerate regime.
//!
//! Fourier convention: f̂(p) = (1/2π) ∫ e^{ipλ} f(λ) dλ.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::PanelRule;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Which closed form (if any) a parameter pair falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// ħ > 0 and 0 < r < π/ħ.
    Generic,
    /// r = 0.
    RZero,
    /// r = π/ħ.
    RTop,
    /// ħ = 0 (the rational limit), r > 0.
    HbarZero,
}

/// Parameters (ħ, r) of the trigonometric kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub hbar: f64,
    pub r: f64,
    regime: Regime,
}

impl KernelParams {
    /// Builds parameters from floating values. The top regime r = π/ħ is only
    /// recognised on exact equality; use [`KernelParams::with_period`] when π/ħ
    /// is an integer coming from spins.
    pub fn new(hbar: f64, r: f64) -> Result<Self> {
        if !hbar.is_finite() || !r.is_finite() {
            return Err(Error::Domain(format!("non-finite kernel parameters hbar={hbar}, r={r}")));
        }
        if hbar < 0.0 || r < 0.0 {
            return Err(Error::Domain(format!("negative kernel parameters hbar={hbar}, r={r}")));
        }
        let regime = if r == 0.0 {
            Regime::RZero
        } else if hbar == 0.0 {
            Regime::HbarZero
        } else {
            let top = PI / hbar;
            if r == top {
                Regime::RTop
            } else if r > top {
                return Err(Error::Domain(format!("r={r} exceeds pi/hbar={top}")));
            } else {
                Regime::Generic
            }
        };
        Ok(KernelParams { hbar, r, regime })
    }

    /// Builds parameters with ħ = π/period (or ħ = 0 when `period` is `None`).
    /// Regime selection is exact because both r and the period are integers.
    pub fn with_period(period: Option<u32>, r: u32) -> Result<Self> {
        match period {
            None => {
                let regime = if r == 0 { Regime::RZero } else { Regime::HbarZero };
                Ok(KernelParams { hbar: 0.0, r: r as f64, regime })
            }
            Some(0) => Err(Error::Domain("zero period".into())),
            Some(n) => {
                if r > n {
                    return Err(Error::Domain(format!("r={r} exceeds pi/hbar={n}")));
                }
                let regime = if r == 0 {
                    Regime::RZero
                } else if r == n {
                    Regime::RTop
                } else {
                    Regime::Generic
                };
                Ok(KernelParams { hbar: PI / n as f64, r: r as f64, regime })
            }
        }
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// π/ħ, infinite for ħ = 0.
    pub fn period(&self) -> f64 {
        if self.hbar == 0.0 {
            f64::INFINITY
        } else {
            PI / self.hbar
        }
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatedFunction {
    pub value: Complex64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EPhi {
    pub e_r: Complex64,
    pub phi_r: f64,
    pub phi_prime_r: f64,
}

/// e_r(λ) = (λ + ir/2)/(λ − ir/2), φ_r = 2 arctan(2λ/r) and φ'_r.
pub fn eval_e_phi(r: f64, lambda: f64) -> Result<EPhi> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("e_r requires r > 0, got {r}")));
    }
    let z = Complex64::new(lambda, 0.5 * r);
    Ok(EPhi {
        e_r: z / z.conj(),
        phi_r: phi(r, lambda),
        phi_prime_r: phi_prime(r, lambda),
    })
}

/// φ_r(λ) with the convention φ_0 ≡ 0.
pub fn phi(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        2.0 * (2.0 * lambda / r).atan()
    }
}

/// φ'_r(λ) = 4r/(4λ² + r²), zero for r = 0.
pub fn phi_prime(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        4.0 * r / (4.0 * lambda * lambda + r * r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigFamily {
    pub g: Complex64,
    pub big_gamma: f64,
    /// γ(λ); set to zero when `is_dirac` (the r = 0 distribution is never sampled).
    pub gamma: f64,
    pub is_dirac: bool,
}

/// G, Γ and γ for ħ > 0.
pub fn eval_trig_family(p: KernelParams, lambda: f64) -> Result<TrigFamily> {
    if p.hbar <= 0.0 {
        return Err(Error::Domain("trigonometric family needs hbar > 0".into()));
    }
    Ok(trig_family(p, lambda))
}

/// Same as [`eval_trig_family`] but also covers ħ = 0, where G = −e_r,
/// Γ = φ_r and γ = φ'_r.
pub fn trig_family(p: KernelParams, lambda: f64) -> TrigFamily {
    match p.regime {
        Regime::RZero => TrigFamily {
            g: Complex64::new(-1.0, 0.0),
            big_gamma: 0.0,
            gamma: 0.0,
            is_dirac: true,
        },
        Regime::RTop => TrigFamily {
            g: Complex64::new(1.0, 0.0),
            big_gamma: 0.0,
            gamma: 0.0,
            is_dirac: false,
        },
        Regime::HbarZero => {
            let z = Complex64::new(lambda, 0.5 * p.r);
            TrigFamily {
                g: -z / z.conj(),
                big_gamma: phi(p.r, lambda),
                gamma: phi_prime(p.r, lambda),
                is_dirac: false,
            }
        }
        Regime::Generic => TrigFamily {
            g: g_generic(p.hbar, p.r, lambda),
            big_gamma: big_gamma_ext(p.hbar, p.r, lambda),
            gamma: gamma_generic(p.hbar, p.r, lambda),
            is_dirac: false,
        },
    }
}

fn g_generic(hbar: f64, r: f64, lambda: f64) -> Complex64 {
    // Written through Γ to stay finite for large |λ|.
    (-I * big_gamma_ext(hbar, r, lambda)).exp()
}

fn gamma_generic(hbar: f64, r: f64, lambda: f64) -> f64 {
    let x = 2.0 * hbar * lambda;
    if x.abs() > 700.0 {
        return 0.0;
    }
    2.0 * hbar * (hbar * r).sin() / (x.cosh() - (hbar * r).cos())
}

/// Γ_r^(ħ)(λ) = 2 arctan(tanh(ħλ)/tan(ħr/2)) for any r ≥ 0; r beyond π/ħ is
/// allowed here because string-string phases reach up to 2π/ħ. For ħ = 0 this
/// is φ_r.
pub fn big_gamma_ext(hbar: f64, r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if hbar == 0.0 {
        return phi(r, lambda);
    }
    let t = (0.5 * hbar * r).tan();
    if !t.is_finite() || t.abs() > 1e300 {
        return 0.0;
    }
    2.0 * ((hbar * lambda).tanh() / t).atan()
}

/// γ̂_r^(ħ)(p); equals e^{−r|p|/2} for ħ = 0.
pub fn eval_gamma_hat(p: KernelParams, momentum: f64) -> f64 {
    match p.regime {
        Regime::RZero => 1.0,
        Regime::RTop => 0.0,
        Regime::HbarZero => (-0.5 * p.r * momentum.abs()).exp(),
        Regime::Generic => {
            let a = 0.5 * momentum.abs();
            let top = PI / p.hbar;
            if a < 1e-300 {
                return 1.0 - p.r / top;
            }
            // sinh(a(A−r))/sinh(aA) = e^{−ar}(1 − e^{−2a(A−r)})/(1 − e^{−2aA})
            let num = -(-2.0 * a * (top - p.r)).exp_m1();
            let den = -(-2.0 * a * top).exp_m1();
            (-a * p.r).exp() * num / den
        }
    }
}

/// 1/(2cosh(p/2)) without overflow.
pub fn half_sech_half(momentum: f64) -> f64 {
    let e = (-0.5 * momentum.abs()).exp();
    e / (1.0 + e * e)
}

/// κ̂_r^(ħ)(p) = γ̂_r^(ħ)(p)/(2cosh(p/2)).
pub fn eval_kappa_hat(p: KernelParams, momentum: f64) -> f64 {
    eval_gamma_hat(p, momentum) * half_sech_half(momentum)
}

/// Upper momentum cutoff where the K integrand envelope drops below 1e-16.
fn p_max(p: KernelParams) -> f64 {
    let rate = 0.5 * (1.0 + p.r.min(p.period()));
    (37.0 / rate).min(400.0)
}

/// Integrates an oscillatory momentum-space integrand over [0, p_max]. When
/// π/ħ is large, γ̂ varies on the scale ħ near p = 0, so that stretch gets its
/// own panels.
fn momentum_integral<F: FnMut(f64) -> f64>(p: KernelParams, lambda: f64, panel_scale: f64, mut f: F) -> f64 {
    let pm = p_max(p);
    let rule = PanelRule::new(16);
    let mut lo = 0.0;
    let mut total = 0.0;
    if p.regime == Regime::Generic {
        let knee = (40.0 / p.period()).min(pm);
        if knee < 0.5 * pm {
            let n = (panel_scale * (8.0 + knee * lambda.abs() / PI)).ceil() as usize;
            total += rule.integrate(&mut f, 0.0, knee, n);
            lo = knee;
        }
    }
    let panels = ((panel_scale * (pm - lo) * lambda.abs().max(1.0)) / PI).ceil() as usize + 8;
    total + rule.integrate(&mut f, lo, pm, panels)
}

/// κ(λ) = ∫ e^{−ipλ} κ̂(p) dp, by quadrature in momentum space. In the ħ = 0
/// regime the tail |λ| > 30 uses the asymptotic series instead, since the
/// quadrature cost grows with |λ|.
pub fn kappa(p: KernelParams, lambda: f64) -> f64 {
    match p.regime {
        Regime::RTop => 0.0,
        Regime::HbarZero if lambda.abs() > KAPPA_ASYMPTOTIC_FROM => kappa_asymptotic(p.r, lambda),
        // poles of κ̂ at distance min(2ħ, π) from the real axis give e^{−min(2ħ,π)|λ|} decay
        Regime::Generic if (2.0 * p.hbar).min(PI) * lambda.abs() > 50.0 => 0.0,
        _ => 2.0 * momentum_integral(p, lambda, 1.0, |q| (q * lambda).cos() * eval_kappa_hat(p, q)),
    }
}

const KAPPA_ASYMPTOTIC_FROM: f64 = 30.0;

/// 2∫_0^∞ cos(pλ) f(p) dp ~ 2 Σ_k (−1)^{k+1} f^{(2k+1)}(0⁺)/λ^{2k+2} for
/// f(p) = e^{−rp/2}/(2 cosh(p/2)).
fn kappa_asymptotic(r: f64, lambda: f64) -> f64 {
    // Euler numbers E_0, E_2, ..., E_14 for the sech series
    const EULER: [f64; 8] = [1.0, -1.0, 5.0, -61.0, 1385.0, -50521.0, 2702765.0, -199360981.0];
    const N: usize = 16;
    let mut fact = [1.0f64; N];
    for i in 1..N {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut sech = [0.0f64; N];
    for (k, e) in EULER.iter().enumerate() {
        sech[2 * k] = e / fact[2 * k] / 4f64.powi(k as i32);
    }
    let mut total = 0.0;
    for k in 0..7 {
        let m = 2 * k + 1;
        // Taylor coefficient of f at order m, times m! for the derivative
        let c: f64 = (0..=m).map(|i| (-r / 2.0).powi(i as i32) / fact[i] * sech[m - i]).sum::<f64>() / 2.0;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        total += sign * 2.0 * c * fact[m] / lambda.powi(2 * k as i32 + 2);
    }
    total
}

/// −i ln K(λ) phase integral ∫_0^∞ sin(pλ)/p · γ̂(p)/cosh(p/2) dp.
fn k_phase_integral(p: KernelParams, lambda: f64, panel_scale: f64) -> f64 {
    momentum_integral(p, lambda, panel_scale, |q| {
            let s = if q * lambda.abs() < 1e-8 {
                lambda * (1.0 - (q * lambda).powi(2) / 6.0)
            } else {
                (q * lambda).sin() / q
            };
        s * 2.0 * eval_kappa_hat(p, q)
    })
}

/// K by direct quadrature of its defining integral, available in every regime
/// (used as the oracle for the closed forms).
pub fn eval_k_quadrature(p: KernelParams, lambda: f64) -> Result<Complex64> {
    if p.regime == Regime::RTop {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let coarse = k_phase_integral(p, lambda, 1.0);
    let fine = k_phase_integral(p, lambda, 2.0);
    if (coarse - fine).abs() > 1e-10 {
        return Err(Error::Numeric(format!(
            "K quadrature not converged at hbar={}, r={}, lambda={lambda}: |delta|={:.3e}",
            p.hbar,
            p.r,
            (coarse - fine).abs()
        )));
    }
    Ok((-I * fine).exp())
}

/// K_r^(ħ)(λ) in all four regimes.
pub fn eval_k(p: KernelParams, lambda: f64) -> Result<EvaluatedFunction> {
    match p.regime {
        Regime::RZero => {
            let z = Complex64::new(0.5 * PI * lambda, -0.25 * PI);
            Ok(EvaluatedFunction { value: -I * coth(z), method: Method::ClosedForm })
        }
        Regime::RTop => Ok(EvaluatedFunction { value: Complex64::new(1.0, 0.0), method: Method::ClosedForm }),
        Regime::HbarZero => Ok(EvaluatedFunction { value: k_gamma_ratio(p.r, lambda), method: Method::ClosedForm }),
        Regime::Generic => Ok(EvaluatedFunction { value: eval_k_quadrature(p, lambda)?, method: Method::Quadrature }),
    }
}

/// Shorthand returning only the value of [`eval_k`].
pub fn k_value(p: KernelParams, lambda: f64) -> Result<Complex64> {
    eval_k(p, lambda).map(|v| v.value)
}

fn coth(z: Complex64) -> Complex64 {
    // Stable for large |Re z|.
    if z.re.abs() > 20.0 {
        let e = (-2.0 * z * z.re.signum()).exp();
        return z.re.signum() * (1.0 + e) / (1.0 - e);
    }
    z.cosh() / z.sinh()
}

/// The ħ → 0 kernel
/// Γ(−iλ/2 + (r+3)/4) Γ(iλ/2 + (r+1)/4) / [Γ(iλ/2 + (r+3)/4) Γ(−iλ/2 + (r+1)/4)].
pub fn k_gamma_ratio(r: f64, lambda: f64) -> Complex64 {
    let a = Complex64::new((r + 3.0) / 4.0, -0.5 * lambda);
    let b = Complex64::new((r + 1.0) / 4.0, 0.5 * lambda);
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a.conj()) - ln_gamma(b.conj())).exp()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex log-Gamma (Lanczos, g = 7) for Re z > 0; the branch is irrelevant
/// for callers that exponentiate.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z) = Γ(z+1)/z keeps the argument in the accurate half plane.
        return ln_gamma(z + 1.0) - z.ln();
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(hbar: f64, r: f64) -> KernelParams {
        KernelParams::new(hbar, r).unwrap()
    }

    #[test]
    fn test_e_phi_examples() {
        let v = eval_e_phi(1.0, 0.0).unwrap();
        assert!((v.e_r + 1.0).norm() < 1e-15);
        assert_eq!(v.phi_r, 0.0);
        assert!((v.phi_prime_r - 4.0).abs() < 1e-15);
        assert!((eval_e_phi(1.0, 1e12).unwrap().phi_r - PI).abs() < 1e-11);
        assert!((eval_e_phi(2.0, 1.0).unwrap().phi_r - PI / 2.0).abs() < 1e-15);
        assert!(eval_e_phi(0.0, 1.0).is_err());
        assert!(eval_e_phi(-1.0, 1.0).is_err());
    }

    #[test]
    fn test_e_unimodular() {
        for &l in &[-3.0, -0.2, 0.0, 1.5, 40.0] {
            assert!((eval_e_phi(1.5, l).unwrap().e_r.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn test_degenerate_trig() {
        let z = eval_trig_family(params(1.0, 0.0), 0.7).unwrap();
        assert_eq!(z.g, Complex64::new(-1.0, 0.0));
        assert_eq!(z.big_gamma, 0.0);
        assert!(z.is_dirac);
        let t = eval_trig_family(KernelParams::with_period(Some(1), 1).unwrap(), 0.7).unwrap();
        assert_eq!(t.g, Complex64::new(1.0, 0.0));
        assert_eq!(t.gamma, 0.0);
        assert!(eval_trig_family(KernelParams::with_period(None, 1).unwrap(), 0.1).is_err());
    }

    #[test]
    fn test_g_limit() {
        let g = eval_trig_family(params(1.0, 1.0), 60.0).unwrap().g;
        let expected = (-I * (PI - 1.0)).exp();
        assert!((g - expected).norm() < 1e-12);
        let g = eval_trig_family(params(1.0, 1.0), -60.0).unwrap().g;
        assert!((g - expected.conj()).norm() < 1e-12);
    }

    #[test]
    fn test_g_matches_sinh_ratio() {
        let (h, r, l) = (0.8, 1.3, 0.45);
        let num = (Complex64::new(-l, -0.5 * r) * h).sinh();
        let den = (Complex64::new(l, -0.5 * r) * h).sinh();
        let g = eval_trig_family(params(h, r), l).unwrap().g;
        assert!((g - num / den).norm() < 1e-13);
    }

    #[test]
    fn test_gamma_hat_values() {
        assert_eq!(eval_gamma_hat(params(1.0, 0.0), 3.0), 1.0);
        assert!((eval_gamma_hat(params(1.0, 1.0), 0.0) - (1.0 - 1.0 / PI)).abs() < 1e-15);
        assert_eq!(eval_gamma_hat(KernelParams::with_period(Some(1), 1).unwrap(), 2.0), 0.0);
        // series branch agrees with the direct ratio just off zero
        let p = params(1.0, 1.0);
        let q = 1e-3;
        let direct = ((q / 2.0) * (PI - 1.0)).sinh() / (q * PI / 2.0).sinh();
        assert!((eval_gamma_hat(p, q) - direct).abs() < 1e-12);
    }

    #[test]
    fn test_kappa_hat_values() {
        assert!((eval_kappa_hat(params(1.0, 1.0), 0.0) - (1.0 - 1.0 / PI) / 2.0).abs() < 1e-15);
        assert_eq!(eval_kappa_hat(KernelParams::with_period(Some(1), 1).unwrap(), 0.3), 0.0);
        assert!((eval_kappa_hat(params(PI, 0.0), 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn test_gamma_hat_zero_quadrature() {
        // γ̂(0) = (1/2π)∫γ
        let p = params(1.0, 1.0);
        let (v, _) = crate::quad::adaptive(|l| gamma_generic(1.0, 1.0, l), -40.0, 40.0, 1e-14, 1 << 12);
        assert!((v / (2.0 * PI) - eval_gamma_hat(p, 0.0)).abs() < 1e-10);
    }

    #[test]
    fn test_k_closed_forms() {
        let top = KernelParams::with_period(Some(2), 2).unwrap();
        assert_eq!(k_value(top, 0.9).unwrap(), Complex64::new(1.0, 0.0));
        let h0 = KernelParams::with_period(None, 1).unwrap();
        assert!((k_value(h0, 0.0).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn test_k_gamma_ratio_vs_quadrature() {
        // (ħ=0, r=1, λ=1): closed Gamma ratio against the defining integral
        let h0 = KernelParams::with_period(None, 1).unwrap();
        let closed = k_value(h0, 1.0).unwrap();
        let quad = eval_k_quadrature(h0, 1.0).unwrap();
        assert!((closed - quad).norm() < 1e-8, "{closed} vs {quad}");
        for &l in &[-2.5, 0.3, 4.0] {
            for &r in &[0.5, 1.0, 3.0] {
                let p = KernelParams::new(0.0, r).unwrap();
                let d = (k_value(p, l).unwrap() - eval_k_quadrature(p, l).unwrap()).norm();
                assert!(d < 1e-8, "r={r} l={l} d={d}");
            }
        }
    }

    #[test]
    fn test_k_zero_closed_vs_quadrature() {
        let p = KernelParams::with_period(Some(3), 0).unwrap();
        for &l in &[-1.5, 0.0, 0.4, 2.0] {
            let d = (k_value(p, l).unwrap() - eval_k_quadrature(p, l).unwrap()).norm();
            assert!(d < 1e-9, "l={l} d={d}");
        }
    }

    #[test]
    fn test_k_limits() {
        let p = params(1.0, 1.0);
        let k = k_value(p, 40.0).unwrap();
        assert!((k - (-0.5 * I * (PI - 1.0)).exp()).norm() < 1e-8);
    }

    #[test]
    fn test_k_continuity_in_hbar() {
        let small = params(1e-3, 1.0);
        let zero = KernelParams::new(0.0, 1.0).unwrap();
        for &l in &[-1.0, 0.5, 2.0] {
            let d = (k_value(small, l).unwrap() - k_value(zero, l).unwrap()).norm();
            assert!(d < 1e-3, "l={l} d={d}");
        }
    }

    #[test]
    fn test_ln_gamma_real() {
        for &x in &[0.3, 1.0, 2.5, 7.2] {
            let v = ln_gamma(Complex64::new(x, 0.0)).re;
            assert!((v - statrs::function::gamma::ln_gamma(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn test_fourier_consistency() {
        let rule = PanelRule::new(16);
        for &h in &[1.0, PI / 2.0, PI] {
            for &r in &[0.5, 1.0, 2.0] {
                if r >= PI / h {
                    continue;
                }
                let p = params(h, r);
                let w = 40.0 / h;
                for k in 0..=20 {
                    let q = -10.0 + k as f64;
                    let ft = rule.integrate(|l| (q * l).cos() * gamma_generic(h, r, l), 0.0, w, 400) / PI;
                    assert!((ft - eval_gamma_hat(p, q)).abs() < 1e-8, "h={h} r={r} p={q}");
                }
            }
        }
    }

    #[test]
    fn test_derivative_consistency() {
        for &h in &[1.0, PI / 2.0, PI] {
            for &r in &[0.5, 1.0, 2.0] {
                if r >= PI / h {
                    continue;
                }
                let p = params(h, r);
                for &l in &[-1.3, 0.0, 0.7] {
                    let e = 1e-5;
                    let fd = (trig_family(p, l + e).big_gamma - trig_family(p, l - e).big_gamma) / (2.0 * e);
                    assert!((fd - trig_family(p, l).gamma).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn test_kappa_asymptotic_matches_quadrature() {
        for r in [1.0, 2.0, 3.0] {
            let p = KernelParams::with_period(None, r as u32).unwrap();
            for l in [30.0, -35.0, 50.0] {
                let quad = 2.0 * momentum_integral(p, l, 1.0, |q| (q * l).cos() * eval_kappa_hat(p, q));
                assert!((kappa_asymptotic(r, l) - quad).abs() < 1e-14, "r={r} l={l}");
            }
        }
    }

    #[test]
    fn test_kappa_integral() {
        // ∫κ = 2π κ̂(0)
        let p = params(1.0, 1.0);
        let rule = PanelRule::new(16);
        let v = 2.0 * rule.integrate(|l| kappa(p, l), 0.0, 40.0, 80);
        assert!((v - 2.0 * PI * eval_kappa_hat(p, 0.0)).abs() < 1e-7);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn g_and_k_unimodular(h in 0.2f64..2.0, frac in 0.05f64..0.95, l in -8.0f64..8.0) {
                let p = KernelParams::new(h, frac * PI / h).unwrap();
                prop_assert!((trig_family(p, l).g.norm() - 1.0).abs() < 1e-10);
                let k = k_value(p, l).unwrap();
                prop_assert!((k.norm() - 1.0).abs() < 1e-10);
                let km = k_value(p, -l).unwrap();
                prop_assert!((k * km - 1.0).norm() < 1e-10);
            }

            #[test]
            fn k_hbar_zero_inversion(r in 0.1f64..5.0, l in -10.0f64..10.0) {
                let p = KernelParams::new(0.0, r).unwrap();
                let k = k_value(p, l).unwrap();
                prop_assert!((k.norm() - 1.0).abs() < 1e-10);
                prop_assert!((k * k_value(p, -l).unwrap() - 1.0).norm() < 1e-10);
            }

            #[test]
            fn k_zero_unimodular(l in -10.0f64..10.0) {
                let p = KernelParams::with_period(Some(2), 0).unwrap();
                prop_assert!((k_value(p, l).unwrap().norm() - 1.0).abs() < 1e-10);
            }
        }
    }
}
