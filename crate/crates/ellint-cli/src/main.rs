use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ellint::engine::{
    anomaly_check, graph_integral, modularity_check, JsonComplex, Method, QuadratureControl, SelfLoopMode,
};
use ellint::graph::DecoratedGraph;
use ellint::modular::{ModularGroupElement, ModularPoint, SumControl};
use ellint::polynomials::{a_constant, cuts, kirchhoff_det, spanning_trees, SchwingerVector};
use ellint::propagator::self_loop_value;
use ellint::Error;
use num_complex::Complex64;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "ellint", version, about = "Graph integrals on elliptic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Regulated,
    Excised,
}

#[derive(Args, Debug, Clone)]
struct Quad {
    /// Comma-separated, strictly decreasing.
    #[arg(long = "eps-schedule", value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
    #[arg(long = "L")]
    l: Option<f64>,
    /// Minimum grid points per torus direction.
    #[arg(long)]
    grid: Option<usize>,
    /// Excision radius in units of the shortest period.
    #[arg(long)]
    excision: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "richardson-order")]
    richardson_order: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Extrapolate self-loops numerically instead of using closed forms.
    #[arg(long = "regulated-loops")]
    regulated_loops: bool,
}

impl Quad {
    fn resolve(&self) -> QuadratureControl {
        let mut c = QuadratureControl::default();
        if let Some(e) = &self.eps_schedule {
            c.eps_schedule = e.clone();
            c.richardson_order = c.richardson_order.min(e.len().saturating_sub(1));
        }
        if let Some(l) = self.l {
            c.l = l;
        }
        if let Some(n) = self.grid {
            c.grid_per_dim = n;
        }
        if let Some(r) = self.excision {
            c.excision_radius = r;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        if let Some(k) = self.richardson_order {
            c.richardson_order = k;
        }
        if self.method == Some(MethodArg::Excised) {
            c.method = Method::ExcisedDirect;
        }
        if self.regulated_loops {
            c.self_loops = SelfLoopMode::Regulated;
        }
        c
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the graph integral W at tau.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_complex)]
        tau: Complex64,
        #[command(flatten)]
        quad: Quad,
    },
    /// Kirchhoff determinant, spanning trees and cut sets.
    Polys {
        #[arg(long)]
        graph: PathBuf,
        /// Schwinger parameters, one per edge (default all 1).
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        /// Base vertex removed from the graph matrix (default: last).
        #[arg(long)]
        base: Option<String>,
        /// Seed vertices of the first cut side (default: first vertex).
        #[arg(long, value_delimiter = ',')]
        seeds1: Option<Vec<String>>,
        /// Seed vertices of the second cut side (default: last vertex).
        #[arg(long, value_delimiter = ',')]
        seeds2: Option<Vec<String>>,
    },
    /// Closed-form self-loop value.
    Selfloop {
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_complex)]
        tau: Complex64,
    },
    /// Exact rational constant A(n0; n1, ..., nk).
    #[command(name = "a-const")]
    AConst {
        #[arg(long)]
        n0: u32,
        /// Comma-separated decorations n1..nk (may be empty).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        ns: Vec<u32>,
    },
    /// Compare W(gamma tau) with (C tau + D)^weight W(tau).
    #[command(name = "check-modularity")]
    CheckModularity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_complex)]
        tau: Complex64,
        /// A,B,C,D with AD - BC = 1.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        gamma: Vec<i64>,
        #[command(flatten)]
        quad: Quad,
    },
    /// Compare d/d(conj tau) W with the edge contraction/deletion sum.
    #[command(name = "check-anomaly")]
    CheckAnomaly {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_complex)]
        tau: Complex64,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[command(flatten)]
        quad: Quad,
    },
    /// Evaluate W on a grid of tau values.
    Scan {
        #[arg(long)]
        graph: PathBuf,
        /// Real part: a value or start:stop:count.
        #[arg(long = "re", allow_hyphen_values = true)]
        re: String,
        /// Imaginary part: a value or start:stop:count.
        #[arg(long = "im")]
        im: String,
        #[command(flatten)]
        quad: Quad,
    },
}

/// Parses "a+bi", "a-bi", "bi", "i", "-i" or "a", ignoring spaces.
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number `{s}`");
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => num(x)?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_range(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Parse(format!("bad range `{s}`, expected value or start:stop:count"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().map_err(|_| bad())?]),
        [a, b, n] => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => Err(bad()),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(bad()),
    }
}

fn parse_graph_file(path: &PathBuf) -> Result<DecoratedGraph, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    DecoratedGraph::from_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn point(tau: Complex64) -> Result<ModularPoint, Error> {
    ModularPoint::from_complex(tau)
}

fn cplx(z: Complex64) -> Value {
    serde_json::to_value(JsonComplex::from(z)).unwrap()
}

fn vertex(g: &DecoratedGraph, name: &str) -> Result<usize, Error> {
    g.vertex_index(name)
}

struct Output {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{}", if x == 0.0 { 0.0 } else { x })
    } else {
        format!("{x:e}")
    }
}

fn run(cli: &Cli) -> Result<(Output, Value), Error> {
    match &cli.command {
        Command::Eval { graph, tau, quad } => {
            let g = parse_graph_file(graph)?;
            let ctl = quad.resolve();
            let r = graph_integral(&g, point(*tau)?, &ctl)?;
            let echo = json!({"command": "eval", "graph": graph, "tau": cplx(*tau), "control": ctl});
            let rows = vec![vec![num(r.value.re), num(r.value.im), num(r.err), r.method.tag().to_string()]];
            Ok((Output { json: serde_json::to_value(&r).unwrap(), header: vec!["re", "im", "err", "method"], rows }, echo))
        }
        Command::Polys { graph, t, base, seeds1, seeds2 } => {
            let g = parse_graph_file(graph)?;
            let t = match t {
                Some(t) => SchwingerVector::new(t.clone())?,
                None => SchwingerVector::ones(g.n_edges()),
            };
            if t.len() != g.n_edges() {
                return Err(Error::InvalidControl(format!("{} Schwinger parameters for {} edges", t.len(), g.n_edges())));
            }
            let last = g.n_vertices().checked_sub(1).ok_or_else(|| Error::InvalidControl("empty graph".into()))?;
            let base_v = match base {
                Some(b) => vertex(&g, b)?,
                None => last,
            };
            let pick = |s: &Option<Vec<String>>, d: usize| -> Result<Vec<usize>, Error> {
                match s {
                    Some(v) => v.iter().map(|n| vertex(&g, n)).collect(),
                    None => Ok(vec![d]),
                }
            };
            let s1 = pick(seeds1, 0)?;
            let s2 = pick(seeds2, last)?;
            let det = kirchhoff_det(&g, &t, base_v)?;
            let trees = spanning_trees(&g)?;
            let cut_list = if g.n_vertices() >= 2 { cuts(&g, &s1, &s2)? } else { Vec::new() };
            let echo = json!({
                "command": "polys", "graph": graph, "t": t.as_slice(), "base": g.names()[base_v],
                "seeds1": s1.iter().map(|&v| &g.names()[v]).collect::<Vec<_>>(),
                "seeds2": s2.iter().map(|&v| &g.names()[v]).collect::<Vec<_>>(),
            });
            let mut rows = vec![vec!["det".into(), num(det)]];
            for tr in &trees {
                rows.push(vec!["tree".into(), join(tr)]);
            }
            for c in &cut_list {
                rows.push(vec!["cut".into(), join(&c.edges)]);
            }
            let out = json!({"det": det, "trees": trees, "cuts": cut_list});
            Ok((Output { json: out, header: vec!["kind", "value"], rows }, echo))
        }
        Command::Selfloop { n, tau } => {
            let sums = SumControl::default();
            let v = self_loop_value(*n, point(*tau)?, &sums);
            let echo = json!({"command": "selfloop", "n": n, "tau": cplx(*tau), "sums": sums});
            let out = json!({"value": cplx(v), "err": 0.0, "method": "closed-form", "params": {"n": n, "sums": sums}});
            let rows = vec![vec![num(v.re), num(v.im), num(0.0), "closed-form".into()]];
            Ok((Output { json: out, header: vec!["re", "im", "err", "method"], rows }, echo))
        }
        Command::AConst { n0, ns } => {
            let a = a_constant(*n0, ns)?;
            let echo = json!({"command": "a-const", "n0": n0, "ns": ns});
            let out = json!({"value": a.to_string(), "float": a.to_f64(), "n0": n0, "ns": ns});
            let rows = vec![vec![a.to_string(), num(a.to_f64())]];
            Ok((Output { json: out, header: vec!["value", "float"], rows }, echo))
        }
        Command::CheckModularity { graph, tau, gamma, quad } => {
            let g = parse_graph_file(graph)?;
            let ctl = quad.resolve();
            let [a, b, c, d] = gamma[..] else {
                return Err(Error::Parse(format!("--gamma needs 4 integers, got {}", gamma.len())));
            };
            let gm = ModularGroupElement::new(a, b, c, d)?;
            let r = modularity_check(&g, point(*tau)?, gm, &ctl)?;
            let echo = json!({"command": "check-modularity", "graph": graph, "tau": cplx(*tau), "gamma": gamma, "control": ctl});
            let rows = vec![vec![num(r.residual), num(r.err), r.weight.to_string()]];
            Ok((Output { json: serde_json::to_value(&r).unwrap(), header: vec!["residual", "err", "weight"], rows }, echo))
        }
        Command::CheckAnomaly { graph, tau, h, quad } => {
            let g = parse_graph_file(graph)?;
            let ctl = quad.resolve();
            let r = anomaly_check(&g, point(*tau)?, &ctl, *h)?;
            let echo = json!({"command": "check-anomaly", "graph": graph, "tau": cplx(*tau), "h": h, "control": ctl});
            let rows = vec![vec![
                num(r.lhs.re),
                num(r.lhs.im),
                num(r.lhs_err),
                num(r.rhs.re),
                num(r.rhs.im),
                num(r.rhs_err),
                num(r.residual),
            ]];
            let header = vec!["lhs_re", "lhs_im", "lhs_err", "rhs_re", "rhs_im", "rhs_err", "residual"];
            Ok((Output { json: serde_json::to_value(&r).unwrap(), header, rows }, echo))
        }
        Command::Scan { graph, re, im, quad } => {
            let g = parse_graph_file(graph)?;
            let ctl = quad.resolve();
            let xs = parse_range(re)?;
            let ys = parse_range(im)?;
            let mut rows = Vec::new();
            let mut points = Vec::new();
            for &x in &xs {
                for &y in &ys {
                    let r = graph_integral(&g, ModularPoint::new(x, y)?, &ctl)?;
                    rows.push(vec![num(x), num(y), num(r.value.re), num(r.value.im), num(r.err)]);
                    points.push(json!({"re": x, "im": y, "value": cplx(r.value), "err": r.err}));
                }
            }
            let echo = json!({"command": "scan", "graph": graph, "re": xs, "im": ys, "control": ctl});
            let out = json!({"method": ctl.method.tag(), "points": points});
            Ok((Output { json: out, header: vec!["x", "y", "re", "im", "err"], rows }, echo))
        }
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn render(out: &Output, echo: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut v = out.json.clone();
            if let Value::Object(m) = &mut v {
                m.insert("run".into(), echo.clone());
            }
            serde_json::to_string_pretty(&v).unwrap() + "\n"
        }
        Format::Csv => {
            let mut s = out.header.join(",") + "\n";
            for r in &out.rows {
                s += &r.join(",");
                s.push('\n');
            }
            s
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("ELLINT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidControl(format!("ELLINT_THREADS={v}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidControl(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok((out, echo)) => {
            eprintln!("params: {echo}");
            let text = render(&out, &echo, cli.common.format);
            let written = match &cli.common.output {
                Some(p) => fs::write(p, text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("0.2+1.1i").unwrap(), c(0.2, 1.1));
        assert_eq!(parse_complex(" 0.2 + 1.1 i ").unwrap(), c(0.2, 1.1));
        assert_eq!(parse_complex("-0.5-i").unwrap(), c(-0.5, -1.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1e-3+2.5e-1i").unwrap(), c(1e-3, 0.25));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert!(parse_complex("x+i").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0").unwrap(), vec![0.0]);
        let r = parse_range("0.8:2.0:25").unwrap();
        assert_eq!(r.len(), 25);
        assert!((r[24] - 2.0).abs() < 1e-15);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
    }
}
