use std::f64::consts::PI;

use serde::Serialize;

use super::{spanning_trees, tree_polynomial_from, SchwingerVector};
use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;
use crate::propagator::RegularizationWindow;
use crate::quadrature::adaptive_cubature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchwingerResult {
    pub value: f64,
    pub err: f64,
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

/// int over [eps, L]^E of prod_e dt_e/(4 pi) / P(t), in log coordinates t_e = e^{s_e}.
pub fn schwinger_integral(
    g: &DecoratedGraph,
    window: RegularizationWindow,
    rel_tol: f64,
) -> Result<SchwingerResult> {
    if let Some(k) = g.edges().iter().position(|e| e.is_self_loop()) {
        return Err(Error::SelfLoopPresent(k));
    }
    let trees = spanning_trees(g)?;
    let n = g.n_edges();
    let (lo, hi) = (window.eps.ln(), window.l.ln());
    let mut t = SchwingerVector::ones(n);
    let est = adaptive_cubature(
        |s| {
            let mut jac = 1.0;
            let tv: Vec<f64> = s.iter().map(|x| x.exp()).collect();
            for x in &tv {
                jac *= x / (4.0 * PI);
            }
            t = SchwingerVector { t: tv };
            jac / tree_polynomial_from(&trees, &t)
        },
        &vec![lo; n],
        &vec![hi; n],
        0.0,
        rel_tol,
        200_000_000,
    )?;
    Ok(SchwingerResult { value: est.value, err: est.err, eps: window.eps, l: window.l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    #[test]
    fn single_edge_is_linear() {
        let w = RegularizationWindow::new(0.01, 3.0).unwrap();
        let r = schwinger_integral(&single_edge(0), w, 1e-12).unwrap();
        assert!((r.value - (3.0 - 0.01) / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn banana_approaches_closed_form() {
        let w = RegularizationWindow::new(1e-12, 1.0).unwrap();
        let r = schwinger_integral(&banana(&[0, 0]), w, 1e-10).unwrap();
        let exact = 2f64.ln() / (8.0 * PI * PI);
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn rejects_self_loops() {
        let w = RegularizationWindow::new(0.1, 1.0).unwrap();
        assert_eq!(schwinger_integral(&self_loop(0), w, 1e-6), Err(Error::SelfLoopPresent(0)));
    }
}
