//! Graph integrals W(tau, conj tau) and the checks built on them.

mod checks;
mod excised;
mod grid;

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;
use crate::modular::{ModularPoint, SumControl};
use crate::propagator::{self_loop_value, PropagatorKernel, RegularizationWindow};
use crate::quadrature::neville;

pub use checks::{
    anomaly_check, imtau_fit, modularity_check, wirtinger_dbar, AnomalyReport, DbarEstimate, ImTauFit,
    ModularityReport,
};

/// Complex number as {"re", "im"} in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        JsonComplex { re: z.re, im: z.im }
    }
}

pub(crate) fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    JsonComplex::from(*z).serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RegulatedExtrapolated,
    ExcisedDirect,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::RegulatedExtrapolated => "regulated-extrapolated",
            Method::ExcisedDirect => "excised-direct",
        }
    }
}

/// How self-loop factors are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfLoopMode {
    ClosedForm,
    /// Extrapolate d^n P_{eps,L}(0) over the eps schedule.
    Regulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureControl {
    /// Lower bound on the grid size; raised automatically to resolve sqrt(eps).
    pub grid_per_dim: usize,
    /// In units of the shortest lattice period.
    pub excision_radius: f64,
    pub eps_schedule: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub richardson_order: usize,
    pub tol: f64,
    pub method: Method,
    pub self_loops: SelfLoopMode,
    pub sums: SumControl,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        QuadratureControl {
            grid_per_dim: 16,
            excision_radius: 0.1,
            eps_schedule: vec![4e-3, 2e-3, 1e-3, 5e-4],
            l: 1e3,
            richardson_order: 3,
            tol: 1e-10,
            method: Method::RegulatedExtrapolated,
            self_loops: SelfLoopMode::ClosedForm,
            sums: SumControl::default(),
        }
    }
}

impl QuadratureControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidControl(m));
        if !(self.excision_radius > 0.0 && self.excision_radius < 0.25) {
            return bad(format!("excision radius {} not in (0, 0.25)", self.excision_radius));
        }
        if self.eps_schedule.is_empty() {
            return bad("empty eps schedule".into());
        }
        if self.eps_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("eps schedule must be strictly decreasing".into());
        }
        for &e in &self.eps_schedule {
            RegularizationWindow::new(e, self.l)?;
        }
        if self.richardson_order >= self.eps_schedule.len() {
            return bad(format!(
                "richardson order {} needs more than {} schedule points",
                self.richardson_order,
                self.eps_schedule.len()
            ));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol {}", self.tol));
        }
        self.sums.validate()
    }

    fn windows(&self) -> Vec<RegularizationWindow> {
        self.eps_schedule.iter().map(|&e| RegularizationWindow { eps: e, l: self.l }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultParams {
    pub eps_schedule: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    /// Largest grid used; 0 if no grid was needed.
    pub grid: usize,
    pub excision_radius: f64,
    pub richardson_order: usize,
    pub tol: f64,
    pub self_loops: SelfLoopMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphIntegralResult {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub err: f64,
    pub method: Method,
    pub params: ResultParams,
    /// Unextrapolated values along the eps schedule (regulated method only).
    #[serde(skip)]
    pub sequence: Vec<(f64, Complex64)>,
}

struct Factor {
    value: Complex64,
    err: f64,
    sequence: Option<Vec<Complex64>>,
}

fn extrapolate(ctl: &QuadratureControl, seq: &[Complex64]) -> Factor {
    let k = ctl.richardson_order;
    let m = seq.len();
    let xs = &ctl.eps_schedule[m - k - 1..];
    let ys = &seq[m - k - 1..];
    let top = neville(xs, ys, 0.0);
    let prev = if k == 0 {
        if m >= 2 {
            seq[m - 2]
        } else {
            top
        }
    } else {
        neville(&xs[1..], &ys[1..], 0.0)
    };
    let scale = seq.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Factor { value: top, err: (top - prev).norm() + 1e-12 * scale, sequence: Some(seq.to_vec()) }
}

/// W of a decorated graph: product over components and self-loops, one vertex pinned per component.
pub fn graph_integral(g: &DecoratedGraph, tau: ModularPoint, ctl: &QuadratureControl) -> Result<GraphIntegralResult> {
    ctl.validate()?;
    let windows = ctl.windows();
    let mut factors: Vec<Factor> = Vec::new();
    for e in g.edges().iter().filter(|e| e.is_self_loop()) {
        factors.push(match ctl.self_loops {
            SelfLoopMode::ClosedForm => {
                Factor { value: self_loop_value(e.n, tau, &ctl.sums), err: 0.0, sequence: None }
            }
            SelfLoopMode::Regulated => {
                let seq: Vec<Complex64> = windows
                    .iter()
                    .map(|w| PropagatorKernel::new(tau, *w, e.n, &ctl.sums).eval(Complex64::new(0.0, 0.0)))
                    .collect();
                extrapolate(ctl, &seq)
            }
        });
    }
    let loop_free: Vec<(usize, usize, u32)> = g
        .edges()
        .iter()
        .filter(|e| !e.is_self_loop())
        .map(|e| (e.head, e.tail, e.n))
        .collect();
    let rest = DecoratedGraph::from_indices(g.n_vertices(), &loop_free)?;
    let mut grid_used = 0;
    for (comp, _) in rest.components() {
        if comp.n_edges() == 0 {
            continue;
        }
        factors.push(match ctl.method {
            Method::RegulatedExtrapolated => {
                let degree = (0..comp.n_vertices()).map(|v| comp.degree(v)).max().unwrap_or(1);
                let eps_min = *ctl.eps_schedule.last().unwrap();
                let n = grid::auto_grid(tau, eps_min, degree, ctl.tol).max(ctl.grid_per_dim);
                grid_used = grid_used.max(n);
                let seq = grid::regulated_component(&comp, tau, &windows, n, &ctl.sums)?;
                extrapolate(ctl, &seq)
            }
            Method::ExcisedDirect => {
                let (value, err) = excised::excised_component(&comp, tau, ctl.excision_radius, &ctl.sums)?;
                Factor { value, err, sequence: None }
            }
        });
    }
    let mut value = Complex64::new(1.0, 0.0);
    for f in &factors {
        value *= f.value;
    }
    let mut err = 0.0;
    for (i, f) in factors.iter().enumerate() {
        let others: f64 =
            factors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| h.value.norm() + h.err).product();
        err += f.err * others;
    }
    if !value.re.is_finite() || !value.im.is_finite() || !err.is_finite() {
        return Err(Error::QuadratureFailure("non-finite graph integral".into()));
    }
    let sequence = if ctl.method == Method::RegulatedExtrapolated {
        ctl.eps_schedule
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let mut p = Complex64::new(1.0, 0.0);
                for f in &factors {
                    p *= f.sequence.as_ref().map_or(f.value, |s| s[i]);
                }
                (e, p)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(GraphIntegralResult {
        value,
        err,
        method: ctl.method,
        params: ResultParams {
            eps_schedule: ctl.eps_schedule.clone(),
            l: ctl.l,
            grid: grid_used,
            excision_radius: ctl.excision_radius,
            richardson_order: ctl.richardson_order,
            tol: ctl.tol,
            self_loops: ctl.self_loops,
        },
        sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use std::f64::consts::PI;

    fn fast() -> QuadratureControl {
        QuadratureControl { eps_schedule: vec![8e-3, 4e-3, 2e-3], richardson_order: 2, ..Default::default() }
    }

    #[test]
    fn edgeless_is_one() {
        for n in 0..4 {
            let r = graph_integral(&edgeless(n), ModularPoint::i(), &fast()).unwrap();
            assert_eq!(r.value, Complex64::new(1.0, 0.0));
            assert_eq!(r.err, 0.0);
        }
    }

    #[test]
    fn single_edge_vanishes() {
        let tau = ModularPoint::new(0.1, 0.9).unwrap();
        for n in 0..3 {
            let r = graph_integral(&single_edge(n), tau, &fast()).unwrap();
            assert!(r.value.norm() < 1e-10, "n={n}: {}", r.value);
        }
    }

    #[test]
    fn self_loop_two_is_e4() {
        let tau = ModularPoint::i();
        let r = graph_integral(&self_loop(2), tau, &fast()).unwrap();
        let e4 = crate::modular::eisenstein(4, tau, &SumControl::default()).unwrap();
        assert!((r.value - PI.powi(3) / 30.0 * e4).norm() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let r = graph_integral(&self_loop(0), ModularPoint::i(), &fast()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(v["value"]["re"].is_number() && v["value"]["im"].is_number());
        assert_eq!(v["method"], "regulated-extrapolated");
        assert_eq!(v["params"]["L"], 1e3);
    }

    #[test]
    fn control_validation() {
        let mut c = fast();
        c.eps_schedule = vec![1e-3, 2e-3];
        assert!(matches!(graph_integral(&banana(&[0, 0]), ModularPoint::i(), &c), Err(Error::InvalidControl(_))));
        let mut c = fast();
        c.excision_radius = 0.3;
        assert!(c.validate().is_err());
        let mut c = fast();
        c.richardson_order = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn five_vertices_refused() {
        let r = graph_integral(&cycle(5), ModularPoint::i(), &fast());
        assert!(matches!(r, Err(Error::QuadratureBudgetExceeded(_))));
    }
}
