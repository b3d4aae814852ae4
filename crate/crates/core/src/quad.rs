//! Composite Gauss-Legendre quadrature on finite panels.

use gauss_quad::GaussLegendre;

/// Fixed-order Gauss-Legendre rule applied panel by panel.
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<(f64, f64)>,
}

impl PanelRule {
    pub fn new(order: usize) -> Self {
        let rule = GaussLegendre::new(order.max(2).try_into().expect("order >= 2"));
        PanelRule {
            nodes: rule.iter().map(|(x, w)| (*x, *w)).collect(),
        }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal pieces.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            let mut acc = 0.0;
            for &(x, w) in &self.nodes {
                acc += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * acc;
        }
        total
    }

    /// Abscissae and weights of the composite rule on `[a, b]`.
    pub fn points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for &(x, w) in &self.nodes {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

/// Integrates with successive panel doubling until two estimates agree to `tol`.
/// Returns the estimate and the last observed difference.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> (f64, f64) {
    let rule = PanelRule::new(16);
    let mut panels = 4;
    let mut prev = rule.integrate(&mut f, a, b, panels);
    loop {
        panels *= 2;
        let cur = rule.integrate(&mut f, a, b, panels);
        let diff = (cur - prev).abs();
        if diff <= tol * (1.0 + cur.abs()) || panels >= max_panels {
            return (cur, diff);
        }
        prev = cur;
    }
}
