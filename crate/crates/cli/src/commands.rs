use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand};
use num_rational::Rational64;
use polylab::diagrams::{eval_diagram, DiagramSpec};
use polylab::enumerate::{pc_estimate, xi2_from_table, Enumerator, Model};
use polylab::fields::LatticeField;
use polylab::greens::{
    decomposition_params, default_grid, green_field, nn_mass, phi_remainder, so_mass, verify_decay_bound, Walk,
};
use polylab::profile::{faxen_general, faxen_i0, window_prediction};
use polylab::rational::{parse_rational, to_f64};
use polylab::torus::{excess_series, lift_audit, sandwich_check, torus_two_point_series, wrap_identity_check};
use polylab::{Error, StepKernel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{Output, Table};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct KernelArgs {
    /// Lattice dimension.
    #[arg(long)]
    pub d: usize,
    /// Spread-out range.
    #[arg(long = "L", default_value_t = 1)]
    #[serde(rename = "L")]
    pub range: u32,
}

impl KernelArgs {
    fn kernel(&self) -> polylab::Result<StepKernel> {
        StepKernel::new(self.d, self.range)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PolymerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// tree or animal.
    #[arg(long, default_value = "tree")]
    pub model: Model,
    /// Largest number of bonds.
    #[arg(long)]
    pub nmax: usize,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Count polymers modulo translation.
    Enum(PolymerArgs),
    /// Two-point coefficients c_n(x).
    Twopoint {
        #[command(flatten)]
        #[serde(flatten)]
        polymer: PolymerArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<i64>,
        /// Activity as an exact rational "a/b".
        #[arg(long)]
        p: Option<String>,
    },
    /// Susceptibility coefficients, optionally tilted.
    Chi {
        #[command(flatten)]
        #[serde(flatten)]
        polymer: PolymerArgs,
        #[arg(long)]
        tilt: Option<f64>,
        #[arg(long)]
        p: Option<String>,
    },
    /// Mass of the spread-out walk, or of the nearest-neighbour walk with --nn.
    Mass {
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        #[serde(rename = "L")]
        range: Option<u32>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        nn: bool,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Walk Green function on a torus, restricted to a box.
    Greens {
        #[command(flatten)]
        #[serde(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        z: f64,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 3)]
        radius: usize,
        /// Also fit the axis decay rate against the mass.
        #[arg(long)]
        decay: bool,
    },
    /// Parameters of the nearest-neighbour comparison and the remainder phi.
    Decomp {
        #[command(flatten)]
        #[serde(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        z: f64,
        /// Torus size for the remainder; skipped when absent.
        #[arg(long)]
        phi_grid: Option<usize>,
    },
    /// Torus two-point coefficients with the Z^d comparison series.
    Torus {
        #[command(flatten)]
        #[serde(flatten)]
        polymer: PolymerArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<i64>,
    },
    /// Exact check of psi - E <= G^T - G <= psi.
    Sandwich {
        #[command(flatten)]
        #[serde(flatten)]
        polymer: PolymerArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<i64>,
        #[arg(long)]
        p: String,
    },
    /// Exhaustive audit of torus lifts.
    LiftAudit {
        #[command(flatten)]
        #[serde(flatten)]
        polymer: PolymerArgs,
        #[arg(long)]
        r: usize,
    },
    /// Evaluate a convolution diagram from a JSON spec.
    Diagram {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        p: f64,
        /// NAME=FILE binding a field stored as JSON.
        #[arg(long = "field")]
        fields: Vec<String>,
        /// NAME bound to the walk Green function given by --d, --L, --z.
        #[arg(long = "walk")]
        walks: Vec<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "L")]
        #[serde(rename = "L")]
        range: Option<u32>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Compare torus and Z^d convolution powers of the wrapped walk function.
    Wrap {
        #[command(flatten)]
        #[serde(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        z: f64,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// The profile integral I0(s) over s=lo:hi:step.
    Profile {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        /// Also evaluate Fi(alpha, beta; s), given as "alpha,beta".
        #[arg(long)]
        fi: Option<String>,
    },
    /// Scaling-window exponents and scales.
    Window {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: u64,
        #[arg(long, default_value = "1/2")]
        gamma: String,
        #[arg(long, default_value_t = 8)]
        dc: i64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enum(_) => "enum",
            Command::Twopoint { .. } => "twopoint",
            Command::Chi { .. } => "chi",
            Command::Mass { .. } => "mass",
            Command::Greens { .. } => "greens",
            Command::Decomp { .. } => "decomp",
            Command::Torus { .. } => "torus",
            Command::Sandwich { .. } => "sandwich",
            Command::LiftAudit { .. } => "lift-audit",
            Command::Diagram { .. } => "diagram",
            Command::Wrap { .. } => "wrap",
            Command::Profile { .. } => "profile",
            Command::Window { .. } => "window",
        }
    }

    pub fn run(&self) -> polylab::Result<Output> {
        match self {
            Command::Enum(a) => enumerate(a),
            Command::Twopoint { polymer, x, p } => twopoint(polymer, x, p.as_deref()),
            Command::Chi { polymer, tilt, p } => chi(polymer, *tilt, p.as_deref()),
            Command::Mass { d, range, z, nn, mu } => mass(*d, *range, *z, *nn, *mu),
            Command::Greens { kernel, z, grid, radius, decay } => greens(kernel, *z, *grid, *radius, *decay),
            Command::Decomp { kernel, z, phi_grid } => decomp(kernel, *z, *phi_grid),
            Command::Torus { polymer, r, x } => torus(polymer, *r, x),
            Command::Sandwich { polymer, r, x, p } => sandwich(polymer, *r, x, p),
            Command::LiftAudit { polymer, r } => audit(polymer, *r),
            Command::Diagram { spec, p, fields, walks, d, range, z, radius, grid } => {
                diagram(spec, *p, fields, walks, (*d, *range, *z), *radius, *grid)
            }
            Command::Wrap { kernel, z, r, k } => wrap(kernel, *z, *r, *k),
            Command::Profile { s, fi } => profile(s, fi.as_deref()),
            Command::Window { d, r, gamma, dc } => window(*d, *r, gamma, *dc),
        }
    }
}

fn precondition<T>(msg: impl Into<String>) -> polylab::Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

fn point_text(x: &[i64]) -> String {
    x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn list<T: ToString>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("results serialise to JSON")
}

fn enumerate(a: &PolymerArgs) -> polylab::Result<Output> {
    let counts = Enumerator::new(&a.kernel.kernel()?, a.model, a.nmax).counts()?;
    let table = Table::new(
        &["n", "t_n", "rooted_n"],
        (0..=a.nmax).map(|n| vec![n.to_string(), counts.t_n[n].to_string(), counts.rooted_n[n].to_string()]),
    );
    let mut out = Output::exact(to_value(&counts));
    out.line("model", a.model);
    out.line("n_max", a.nmax);
    out.line("t_n", list(&counts.t_n));
    out.line("rooted_n", list(&counts.rooted_n));
    out.table = Some(table);
    Ok(out)
}

fn twopoint(a: &PolymerArgs, x: &[i64], p: Option<&str>) -> polylab::Result<Output> {
    let kernel = a.kernel.kernel()?;
    if x.len() != kernel.dim() {
        return precondition(format!("x has {} coordinates, expected {}", x.len(), kernel.dim()));
    }
    let table = Enumerator::new(&kernel, a.model, a.nmax).two_point_table()?;
    let coeffs = table.coeffs(x);
    let series = table.series(x);
    let mut result = json!({
        "x": x, "n_max": a.nmax, "model": a.model, "omega": kernel.omega(), "coeffs": coeffs,
    });
    let mut out = Output::exact(Value::Null);
    out.line("x", point_text(x));
    out.line("c_n(x)", list(&coeffs));
    if let Some(text) = p {
        let p = parse_rational(text)?;
        let value = series.eval_rational(&p);
        result["p"] = json!(p.to_string());
        result["value"] = json!(value.to_string());
        result["value_f64"] = json!(to_f64(&value));
        out.line("G_p(x)", format!("{value} ({:.12e})", to_f64(&value)));
    }
    out.result = result;
    out.table = Some(Table::new(&["n", "c_n"], coeffs.iter().enumerate().map(|(n, c)| vec![n.to_string(), c.to_string()])));
    Ok(out)
}

fn chi(a: &PolymerArgs, tilt: Option<f64>, p: Option<&str>) -> polylab::Result<Output> {
    let kernel = a.kernel.kernel()?;
    let table = Enumerator::new(&kernel, a.model, a.nmax).two_point_table()?;
    let chi = table.susceptibility();
    let coeffs: Vec<String> = (0..=a.nmax).map(|n| chi.coeff(n).to_string()).collect();
    let mut out = Output::exact(Value::Null);
    let mut result = json!({
        "model": a.model, "n_max": a.nmax, "omega": kernel.omega(), "radius": table.radius,
        "t_n": table.t_n, "chi": coeffs,
    });
    out.line("chi_n", coeffs.join(" "));
    let mut header = vec!["n", "chi_n"];
    let mut tilted = None;
    if let Some(m) = tilt {
        if !(m >= 0.0 && m.is_finite()) {
            return precondition(format!("tilt {m} must be finite and nonnegative"));
        }
        let series = table.tilted(m);
        result["tilt"] = json!(m);
        result["tilted"] = json!(series.coeffs);
        out.exact = false;
        header.push("tilted_n");
        tilted = Some(series.coeffs);
    }
    if a.nmax >= 4 {
        let est = pc_estimate(&table.t_n, kernel.omega())?;
        out.line("p_c estimate (ratio method, advisory)", format!("{:.6}", est.estimate));
        result["pc_estimate"] = to_value(&est);
        out.exact = false;
    }
    if let Some(text) = p {
        let p = parse_rational(text)?;
        let value = chi.eval_rational(&p);
        out.line("chi(p)", format!("{value} ({:.12e})", to_f64(&value)));
        result["p"] = json!(p.to_string());
        result["value"] = json!(value.to_string());
        match xi2_from_table(&table, to_f64(&p)) {
            Ok(xi2) => {
                out.line("xi^2(p)", format!("{xi2:.12e}"));
                result["xi2"] = json!(xi2);
                out.exact = false;
            }
            Err(e) => out.line("xi^2(p)", format!("unavailable: {e}")),
        }
    }
    let rows = (0..=a.nmax).map(|n| {
        let mut row = vec![n.to_string(), coeffs[n].clone()];
        if let Some(t) = &tilted {
            row.push(format!("{:e}", t[n]));
        }
        row
    });
    out.table = Some(Table::new(&header, rows));
    out.result = result;
    Ok(out)
}

fn mass(d: usize, range: Option<u32>, z: Option<f64>, nn: bool, mu: Option<f64>) -> polylab::Result<Output> {
    let result = if nn {
        let Some(mu) = mu else { return precondition("--nn needs --mu") };
        nn_mass(mu, d)?
    } else {
        let (Some(range), Some(z)) = (range, z) else { return precondition("mass needs --L and --z (or --nn --mu)") };
        so_mass(&StepKernel::new(d, range)?, z)?
    };
    let mut out = Output::float(to_value(&result));
    out.line("m", result.m);
    out.line("xi", result.xi);
    out.line("method", format!("{:?}", result.method));
    Ok(out)
}

fn greens(k: &KernelArgs, z: f64, grid: Option<usize>, radius: usize, decay: bool) -> polylab::Result<Output> {
    let kernel = k.kernel()?;
    let n = match grid {
        Some(n) => n,
        None => default_grid(&kernel, z)?,
    };
    let field = green_field(&Walk::SpreadOut(kernel.clone()), z, n)?;
    let boxed = field.to_box(radius)?;
    let origin = vec![0i64; kernel.dim()];
    let mut result = json!({
        "z": z, "grid": n, "radius": radius, "sum": field.sum(), "origin": field.get(&origin),
        "symmetry_defect": field.symmetry_defect(), "box": boxed,
    });
    let mut out = Output::float(Value::Null);
    out.line("grid N", n);
    out.line("box radius", radius);
    out.line("sum", field.sum());
    out.line("S(0)", field.get(&origin));
    if decay {
        let rep = verify_decay_bound(&kernel, z, n)?;
        out.line("mass", rep.mass);
        out.line("fitted decay rate", rep.slope);
        out.line("ratio", rep.ratio);
        result["decay"] = to_value(&rep);
    }
    let mut header: Vec<String> = (1..=kernel.dim()).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let rows = boxed.iter().map(|(x, v)| {
        let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        row.push(format!("{v:e}"));
        row
    });
    out.table = Some(Table::from_strings(header, rows));
    out.result = result;
    Ok(out)
}

fn decomp(k: &KernelArgs, z: f64, phi_grid: Option<usize>) -> polylab::Result<Output> {
    let kernel = k.kernel()?;
    let params = decomposition_params(&kernel, z)?;
    let mut result = json!({
        "z": z, "lambda": params.lambda, "mu": params.mu, "moment0": params.moment0, "moment2": params.moment2,
    });
    let mut out = Output::float(Value::Null);
    out.line("lambda_z", params.lambda);
    out.line("mu_z", params.mu);
    out.line("sum E_z", params.moment0);
    out.line("sum |x|^2 E_z", params.moment2);
    if let Some(n) = phi_grid {
        let phi = phi_remainder(&kernel, z, n)?;
        out.line("grid N", n);
        out.line("sup |x|^(d-2) |phi|", phi.sup_stat);
        result["phi_grid"] = json!(n);
        result["phi_sup"] = json!(phi.sup_stat);
    }
    out.result = result;
    Ok(out)
}

fn torus(a: &PolymerArgs, r: usize, x: &[i64]) -> polylab::Result<Output> {
    let kernel = a.kernel.kernel()?;
    let torus = torus_two_point_series(&kernel, r, a.nmax, a.model, x)?;
    let excess = excess_series(&kernel, r, a.nmax, a.model, x)?;
    let zd = Enumerator::new(&kernel, a.model, a.nmax).two_point_table()?.series(x);
    let col = |s: &polylab::series::PolymerSeries, n: usize| s.coeff(n).to_string();
    let rows = (0..=a.nmax).map(|n| {
        vec![n.to_string(), col(&torus, n), col(&zd, n), col(&excess.psi, n), col(&excess.big_e, n)]
    });
    let mut out = Output::exact(json!({
        "x": x, "r": r, "n_max": a.nmax, "model": a.model,
        "torus": torus, "zd": zd, "psi": excess.psi, "big_e": excess.big_e, "trivial": excess.trivial,
    }));
    out.line("x", point_text(x));
    out.line("period", r);
    out.line("no wrapping below n_max", excess.trivial);
    out.table = Some(Table::new(&["n", "torus", "zd", "psi", "E"], rows));
    Ok(out)
}

fn sandwich(a: &PolymerArgs, r: usize, x: &[i64], p: &str) -> polylab::Result<Output> {
    let kernel = a.kernel.kernel()?;
    let p = parse_rational(p)?;
    let rep = sandwich_check(&kernel, r, a.nmax, a.model, x, &p)?;
    let mut out = Output::exact(to_value(&rep));
    out.line("verdict", if rep.holds { "PASS" } else { "FAIL" });
    out.line("p", &rep.p);
    out.line("psi - E", &rep.lower_value);
    out.line("G^T - G", &rep.difference_value);
    out.line("psi", &rep.upper_value);
    out.line("lower bound coefficientwise", rep.lower_coefficientwise);
    out.line("upper bound coefficientwise", rep.upper_coefficientwise);
    Ok(out)
}

fn audit(a: &PolymerArgs, r: usize) -> polylab::Result<Output> {
    let rep = lift_audit(&a.kernel.kernel()?, r, a.nmax, a.model)?;
    let mut out = Output::exact(to_value(&rep));
    out.line("verdict", if rep.passed() { "PASS" } else { "FAIL" });
    out.line("torus polymers", rep.torus_polymers);
    out.line("round trip", rep.round_trip);
    out.line("injective", rep.injective);
    out.line("faithful lifts", rep.faithful_lifts);
    out.line("pool size", rep.lemma_pool);
    out.line("pool check", rep.lemma_holds);
    Ok(out)
}

fn diagram(
    spec_path: &Path,
    p: f64,
    files: &[String],
    walks: &[String],
    walk: (Option<usize>, Option<u32>, Option<f64>),
    radius: usize,
    grid: Option<usize>,
) -> polylab::Result<Output> {
    let read = |path: &std::path::Path| {
        std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
    };
    let spec: DiagramSpec = serde_json::from_str(&read(spec_path)?)
        .map_err(|e| Error::InvalidParameter(format!("bad diagram spec: {e}")))?;
    let mut fields = BTreeMap::new();
    for binding in files {
        let Some((name, path)) = binding.split_once('=') else {
            return precondition(format!("field binding '{binding}' is not NAME=FILE"));
        };
        let field: LatticeField = serde_json::from_str(&read(path.as_ref())?)
            .map_err(|e| Error::InvalidParameter(format!("bad field file {path}: {e}")))?;
        fields.insert(name.to_string(), field);
    }
    if !walks.is_empty() {
        let (Some(d), Some(range), Some(z)) = walk else {
            return precondition("--walk needs --d, --L and --z");
        };
        let kernel = StepKernel::new(d, range)?;
        let n = match grid {
            Some(n) => n,
            None => default_grid(&kernel, z)?.max((2 * radius + 2).next_power_of_two()),
        };
        let s = green_field(&Walk::SpreadOut(kernel), z, n)?.to_box(radius)?;
        for name in walks {
            fields.insert(name.clone(), s.clone());
        }
    }
    let start = Instant::now();
    let value = eval_diagram(&spec, &fields, p)?;
    let mut out = Output::float(to_value(&value));
    out.line("value", value.value);
    out.line("box radius", value.box_radius);
    out.line("runtime (s)", format!("{:.3}", start.elapsed().as_secs_f64()));
    Ok(out)
}

fn wrap(k: &KernelArgs, z: f64, r: usize, fold: usize) -> polylab::Result<Output> {
    let rep = wrap_identity_check(&k.kernel()?, z, r, fold)?;
    let mut out = Output::float(to_value(&rep));
    out.line("k", rep.k);
    out.line("box radius", rep.box_radius);
    out.line("truncated mass", rep.truncated_mass);
    out.line("max discrepancy", rep.discrepancy);
    Ok(out)
}

fn parse_range(text: &str) -> polylab::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("'{s}' is not a number")));
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if step.is_nan() || step <= 0.0 || hi < lo {
                return precondition(format!("range {text} needs lo <= hi and step > 0"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return precondition(format!("range {text} has too many points"));
            }
            Ok((0..count).map(|i| lo + i as f64 * step).collect())
        }
        _ => precondition(format!("range '{text}' is not lo:hi:step")),
    }
}

fn profile(s: &str, fi: Option<&str>) -> polylab::Result<Output> {
    let grid = parse_range(s)?;
    let fi = match fi {
        None => None,
        Some(text) => {
            let parsed: Vec<f64> = text.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>()
                .map_err(|_| Error::InvalidParameter(format!("--fi '{text}' is not alpha,beta")))?;
            let [alpha, beta] = parsed[..] else { return precondition("--fi takes exactly alpha,beta") };
            Some((alpha, beta))
        }
    };
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = Vec::with_capacity(grid.len());
    let mut header = vec!["s", "I0", "ln_I0", "est_error", "method"];
    if fi.is_some() {
        header.push("Fi");
    }
    for &sv in &grid {
        let v = faxen_i0(sv)?;
        let mut row = vec![sv.to_string(), format!("{:e}", v.i0), format!("{:e}", v.ln_i0), format!("{:e}", v.est_error), format!("{:?}", v.method)];
        let mut entry = to_value(&v);
        if let Some((alpha, beta)) = fi {
            let f = faxen_general(alpha, beta, sv)?;
            row.push(format!("{f:e}"));
            entry["fi"] = json!(f);
        }
        rows.push(row);
        values.push(entry);
    }
    let mut out = Output::float(json!({ "s": s, "fi": fi, "values": values }));
    out.line("points", grid.len());
    if grid.len() == 1 {
        out.line("I0", values[0]["i0"].clone());
    }
    out.table = Some(Table::new(&header, rows.into_iter()));
    Ok(out)
}

fn window(d: u32, r: u64, gamma: &str, dc: i64) -> polylab::Result<Output> {
    let gamma: Rational64 = gamma
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("gamma '{gamma}' is not a rational a/b")))?;
    let w = window_prediction(d, r, gamma, dc)?;
    let mut out = Output::float(to_value(&w));
    out.line("V", w.volume);
    out.line("window exponent", w.window_exponent);
    out.line("chi exponent", w.chi_exponent);
    out.line("plateau exponent", w.plateau_exponent);
    out.line("window", w.window);
    out.line("chi scale", w.chi_scale);
    out.line("plateau scale", w.plateau_scale);
    Ok(out)
}
