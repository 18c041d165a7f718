mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ellint::engine::*;
use ellint::graph::families::*;
use ellint::graph::DecoratedGraph;
use ellint::modular::*;
use ellint::polynomials::*;
use ellint::propagator::*;
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn corpus() -> Vec<DecoratedGraph> {
    let mut gs = common::small_multigraphs(4, 6);
    let mut r = common::rng(1);
    for _ in 0..100 {
        let extra = r.gen_range(0..4);
        gs.push(common::random_connected(&mut r, 5, extra));
    }
    gs
}

fn matrix_tree() -> Outcome {
    let mut r = common::rng(11);
    let mut worst: f64 = 0.0;
    let gs = corpus();
    for g in &gs {
        let t = common::random_t(&mut r, g.n_edges(), 0.1, 10.0);
        let p = tree_polynomial(g, &t).unwrap();
        let prod: f64 = t.as_slice().iter().product();
        for base in 0..g.n_vertices() {
            let d = kirchhoff_det(g, &t, base).unwrap() * prod;
            worst = worst.max((d - p).abs() / p);
        }
    }
    outcome(worst < 1e-10, format!("{} graphs, max rel err {worst:.2e}", gs.len()))
}

fn cut_inverse() -> Outcome {
    let mut r = common::rng(12);
    let mut worst: f64 = 0.0;
    let gs = corpus();
    for g in &gs {
        let t = common::random_t(&mut r, g.n_edges(), 0.1, 10.0);
        let base = r.gen_range(0..g.n_vertices());
        let m = graph_matrix(g, &t, base).unwrap().matrix;
        let a = inverse_via_cuts(g, &t, base).unwrap();
        let id = &a * &m;
        for i in 0..id.nrows() {
            let row: f64 =
                (0..id.ncols()).map(|j| (id[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs()).sum();
            worst = worst.max(row);
        }
    }
    outcome(worst < 1e-9, format!("max ||AM - I||_inf {worst:.2e}"))
}

fn coefficient_bound() -> Outcome {
    let mut r = common::rng(13);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let v = r.gen_range(2..=5);
        let extra = r.gen_range(0..4);
        let g = common::random_connected(&mut r, v, extra);
        let t = common::random_t(&mut r, g.n_edges(), 0.01, 100.0);
        let base = r.gen_range(0..v);
        let e = r.gen_range(0..g.n_edges());
        let j = r.gen_range(0..v - 1);
        worst = worst.max(edge_coeff(&g, &t, base, e, j).unwrap().abs());
    }
    outcome(worst <= 2.0 + 1e-12, format!("max |coeff| {worst:.6}"))
}

fn collapse_constants() -> Outcome {
    let exact = a_constant(0, &[0]).unwrap();
    let mut ok = exact.to_string() == "1/12";
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in 0..=2usize {
        let tuples: Vec<Vec<u32>> = match k {
            0 => vec![vec![]],
            1 => (0..=3).map(|a| vec![a]).collect(),
            _ => (0..=3).flat_map(|a| (0..=3).map(move |b| vec![a, b])).collect(),
        };
        for ns in tuples {
            for n0 in 0..=3 {
                let q = a_constant(n0, &ns).unwrap().to_f64();
                let num = if k == 0 { 1.0 } else { a_constant_numeric(n0, &ns, 48).unwrap() };
                worst = worst.max((q - num).abs() / q);
                cases += 1;
            }
        }
    }
    ok &= worst < 1e-12;
    outcome(ok, format!("A(0;0) = {exact}, {cases} cases, max rel diff {worst:.2e}"))
}

fn schwinger_banana() -> Outcome {
    let w = RegularizationWindow::new(1e-12, 1.0).unwrap();
    let r = schwinger_integral(&banana(&[0, 0]), w, 1e-10).unwrap();
    let want = 2f64.ln() / (8.0 * PI * PI);
    let d = (r.value - want).abs();
    outcome(d < 1e-6, format!("{:.12} vs {want:.12}, diff {d:.2e}", r.value))
}

fn propagator_closed_form() -> Outcome {
    let mut r = common::rng(16);
    let ctl = SumControl::default();
    let w = RegularizationWindow::new(1e-5, 1e4).unwrap();
    let mut samples = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let tau = ModularPoint::new(r.gen_range(-0.5..0.5), r.gen_range(0.8..1.6)).unwrap();
        let z = r.gen_range(0.1..0.9) + r.gen_range(0.1..0.9) * tau.tau();
        let p = bcov_propagator(z, tau, w, 0, &ctl);
        let l = weierstrass_p(z, tau, 0, &ctl).unwrap() / (4.0 * PI) + E2STAR_COEFF * e2_star(tau, &ctl);
        worst = worst.max((p - l).norm() / l.norm().max(1.0));
        samples.push((z, tau));
    }
    let fit = fit_e2star_coefficient(&samples, w, &ctl).unwrap();
    let ok = worst < 1e-4 && fit.matched.is_some();
    outcome(
        ok,
        format!(
            "max diff {worst:.2e}, fitted c = {:.8}{:+.1e}i matches {}",
            fit.coefficient.re,
            fit.coefficient.im,
            fit.matched.unwrap_or("none")
        ),
    )
}

fn poisson() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.0, 0.3, 0.5, 0.9] {
        for l in [0.1, 1.0, 10.0] {
            worst = worst.max(poisson_theta_check(a, l));
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:.2e}"))
}

fn self_loops() -> Outcome {
    let sums = SumControl::default();
    let ctl = QuadratureControl { self_loops: SelfLoopMode::Regulated, ..Default::default() };
    let odd = self_loop_value(1, ModularPoint::i(), &sums);
    let mut ok = odd == Complex64::new(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for tau in [ModularPoint::i(), ModularPoint::new(0.3, 0.8).unwrap()] {
        let v = graph_integral(&self_loop(2), tau, &ctl).unwrap().value;
        let want = PI.powi(3) / 30.0 * eisenstein(4, tau, &sums).unwrap();
        worst = worst.max((v - want).norm() / want.norm());
    }
    ok &= worst < 1e-6;
    outcome(ok, format!("n=1 gives {odd}, n=2 max rel err {worst:.2e}"))
}

fn vanishing() -> Outcome {
    let tau = ModularPoint::new(0.2, 1.1).unwrap();
    let ctl = QuadratureControl::default();
    let e = graph_integral(&single_edge(0), tau, &ctl).unwrap().value.norm();
    let p = graph_integral(&path(3), tau, &ctl).unwrap().value.norm();
    let s = graph_integral(&star(3), tau, &ctl).unwrap().value.norm();
    outcome(e < 1e-8 && p < 1e-6 && s < 1e-6, format!("edge {e:.1e}, path-3 {p:.1e}, star-3 {s:.1e}"))
}

fn modularity() -> Outcome {
    let tau = ModularPoint::new(0.2, 1.1).unwrap();
    let ctl = QuadratureControl::default();
    let g = banana(&[0, 0]);
    let s = modularity_check(&g, tau, ModularGroupElement::S, &ctl).unwrap();
    let t = modularity_check(&g, tau, ModularGroupElement::T, &ctl).unwrap();
    outcome(
        s.weight == 4 && s.residual < 1e-3 && t.residual < 1e-10,
        format!("weight {}, S {:.2e}, T {:.2e}", s.weight, s.residual, t.residual),
    )
}

fn anomaly() -> Outcome {
    let ctl = QuadratureControl { tol: 1e-5, ..Default::default() };
    let r = anomaly_check(&triangle(), ModularPoint::i(), &ctl, 1e-3).unwrap();
    outcome(
        r.residual < 2e-2,
        format!(
            "dbar W = {:.6e}{:+.6e}i, rhs = {:.6e}{:+.6e}i, residual {:.2e} (opposite sign {:.2e})",
            r.lhs.re, r.lhs.im, r.rhs.re, r.rhs.im, r.residual, r.residual_opposite_sign
        ),
    )
}

fn e2_star_weight() -> Outcome {
    let mut r = common::rng(22);
    let ctl = SumControl::default();
    let gammas = [ModularGroupElement::S, ModularGroupElement::T, ModularGroupElement::S.compose(&ModularGroupElement::T)];
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let tau = ModularPoint::new(r.gen_range(-0.5..0.5), r.gen_range(0.7..1.5)).unwrap();
        for g in &gammas {
            let lhs = e2_star(g.act(tau), &ctl);
            let rhs = g.factor(tau.tau()).powi(2) * e2_star(tau, &ctl);
            worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1.0));
        }
    }
    let at_i = e2_star(ModularPoint::i(), &ctl).norm();
    outcome(worst < 1e-9 && at_i < 1e-10, format!("max residual {worst:.2e}, |E2*(i)| {at_i:.1e}"))
}

fn flat_collapse() -> Outcome {
    let r = flat_collapse_check(&banana(&[0, 0]), &FlatTestFunction::standard(), &[1e-4], 1.0).unwrap();
    let lhs = r.lhs[0].1;
    let rel = (lhs - r.rhs).norm() / r.rhs.norm();
    outcome(
        r.constant.to_string() == "1/12" && rel < 1e-2,
        format!("lhs {:.6e}{:+.2e}i, rhs {:.6e}{:+.2e}i, rel {rel:.2e}", lhs.re, lhs.im, r.rhs.re, r.rhs.im),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 13] = [
        ("matrix-tree determinant", Duration::from_secs(10), matrix_tree),
        ("cut-formula inverse", Duration::from_secs(30), cut_inverse),
        ("edge coefficient bound", Duration::from_secs(600), coefficient_bound),
        ("collapse constants", Duration::from_secs(5), collapse_constants),
        ("Schwinger banana-2", Duration::from_secs(600), schwinger_banana),
        ("propagator closed form", Duration::from_secs(60), propagator_closed_form),
        ("Poisson theta identity", Duration::from_secs(600), poisson),
        ("self-loop values", Duration::from_secs(60), self_loops),
        ("single edge and trees vanish", Duration::from_secs(300), vanishing),
        ("banana-2 modularity", Duration::from_secs(600), modularity),
        ("triangle anomaly", Duration::from_secs(2700), anomaly),
        ("E2* weight two", Duration::from_secs(600), e2_star_weight),
        ("flat collapse", Duration::from_secs(600), flat_collapse),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
