//! Subcommand dispatch.

use serde::Serialize;
use serde_json::{json, Value};
use statdisc_core::disc::{self, Disc, GluingReport, LiftCheck};
use statdisc_core::indices::{self, PartialIndices, ReductionReport, SymbolSource, ToeplitzConfig};
use statdisc_core::linalg::CMat;
use statdisc_core::solver::{self, Constraints, GluedDisc, IndicatrixPoint, SolveConfig};
use statdisc_core::{
    boundary, sampling, BoundaryFunction, DefiningFunction, DiscParams, Hyperquadric, LiftParams, Monomial, PerturbedHypersurface,
    RealPolynomial, StatDiscError, C64,
};

use crate::config::{parse_complex, parse_complex_list, Command, RunConfig, SymbolChoice};
use crate::output::{float, flatten, Table};

/// Failure of a subcommand.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values; exit code 2.
    Usage(String),
    /// Library error; exit code 1.
    Domain(StatDiscError),
    /// I/O on input or output files; exit code 1.
    Io(String),
}

impl From<StatDiscError> for CliError {
    fn from(e: StatDiscError) -> Self {
        Self::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Result of a subcommand: the JSON document and, where the output is
/// tabular, the CSV table.
pub struct Output {
    pub json: Value,
    pub table: Option<Table>,
}

impl Output {
    fn json<T: Serialize>(v: &T) -> Self {
        Self { json: to_value(v), table: None }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("outputs serialize to JSON")
}

/// The math objects named by the flags.
struct Model<'a> {
    cfg: &'a RunConfig,
    n: usize,
    surface: Option<PerturbedHypersurface>,
}

impl<'a> Model<'a> {
    fn new(cfg: &'a RunConfig) -> CliResult<Self> {
        let f = &cfg.flags;
        let surface = match &f.surface {
            Some(path) => Some(read_json::<PerturbedHypersurface>(path)?),
            None => None,
        };
        let inferred = f
            .w
            .as_ref()
            .map(|w| w.len())
            .or(f.v.as_ref().map(|v| v.len()))
            .or(f.z.as_ref().map(|z| z.len().saturating_sub(1)))
            .or(f.p.as_ref().map(|p| p.len().saturating_sub(1)));
        let n = match &surface {
            Some(m) if f.n.is_some_and(|n| n != m.n()) => return usage(format!("--n disagrees with the surface (n = {})", m.n())),
            Some(m) => m.n(),
            None => f.n.or(inferred).unwrap_or(1),
        };
        if n == 0 {
            return usage("--n must be at least 1");
        }
        Ok(Self { cfg, n, surface })
    }

    fn list(&self, flag: &str, items: &Option<Vec<String>>, len: usize) -> CliResult<Option<Vec<C64>>> {
        let Some(items) = items else { return Ok(None) };
        let v = parse_complex_list(items).map_err(CliError::Usage)?;
        if v.len() != len {
            return usage(format!("--{flag} needs {len} entries, got {}", v.len()));
        }
        Ok(Some(v))
    }

    fn quadric(&self) -> CliResult<Hyperquadric> {
        let n = self.n;
        if let Some(m) = &self.surface {
            return Ok(m.base().clone());
        }
        let Some(items) = &self.cfg.flags.quadric else { return Ok(Hyperquadric::identity(n)) };
        let entries = parse_complex_list(items).map_err(CliError::Usage)?;
        if entries.len() == n {
            let diag: Vec<f64> = entries.iter().map(|z| z.re).collect();
            if entries.iter().any(|z| z.im != 0.0) {
                return usage("diagonal --quadric entries must be real");
            }
            return Ok(Hyperquadric::diagonal(&diag)?);
        }
        if entries.len() == n * n {
            return Ok(Hyperquadric::new(CMat::from_row_slice(n, n, &entries))?);
        }
        usage(format!("--quadric needs {n} or {} entries, got {}", n * n, entries.len()))
    }

    fn explicit_params(&self) -> bool {
        let f = &self.cfg.flags;
        f.a.is_some() || f.w.is_some() || f.v.is_some() || f.y0.is_some()
    }

    /// Disc parameters from the flags, or random ones when only `--seed` is given.
    fn params(&self) -> CliResult<DiscParams> {
        let f = &self.cfg.flags;
        let n = self.n;
        if !self.explicit_params() {
            if let Some(seed) = f.seed {
                return Ok(sampling::disc_params(&mut sampling::rng(seed), n, 0.6, true));
            }
        }
        let a = match &f.a {
            Some(s) => parse_complex(s).map_err(CliError::Usage)?,
            None => C64::new(0.0, 0.0),
        };
        let mut unit = vec![C64::new(0.0, 0.0); n];
        unit[0] = C64::new(1.0, 0.0);
        let w = self.list("w", &f.w, n)?.unwrap_or(unit);
        let v = self.list("v", &f.v, n)?.unwrap_or_else(|| vec![C64::new(0.0, 0.0); n]);
        Ok(DiscParams::new(f.y0.unwrap_or(0.0), v, w, a)?)
    }

    /// `--p`, else `(--p0, 0)`, else `fallback`.
    fn center(&self, fallback: impl FnOnce() -> CliResult<Vec<C64>>) -> CliResult<Vec<C64>> {
        let f = &self.cfg.flags;
        if let Some(p) = self.list("p", &f.p, self.n + 1)? {
            return Ok(p);
        }
        if let Some(p0) = &f.p0 {
            let mut p = vec![C64::new(0.0, 0.0); self.n + 1];
            p[0] = parse_complex(p0).map_err(CliError::Usage)?;
            return Ok(p);
        }
        fallback()
    }

    fn unit_center(&self) -> CliResult<Vec<C64>> {
        let mut p = vec![C64::new(0.0, 0.0); self.n + 1];
        p[0] = C64::new(1.0, 0.0);
        Ok(p)
    }

    fn point(&self) -> CliResult<Vec<C64>> {
        match self.list("z", &self.cfg.flags.z, self.n + 1)? {
            Some(z) => Ok(z),
            None => usage("--z is required"),
        }
    }

    fn polynomial(&self) -> CliResult<RealPolynomial> {
        let vars = 2 * self.n + 2;
        let Some(spec) = &self.cfg.flags.perturbation else {
            let mut e = vec![0u32; vars];
            e[2] = 4;
            return Ok(RealPolynomial::new(vars, vec![Monomial { exponents: e, coeff: 1.0 }])?);
        };
        let mut terms = Vec::new();
        for term in spec.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (coeff, exps) = term.split_once(':').ok_or_else(|| CliError::Usage(format!("term '{term}' needs coeff:exponents")))?;
            let coeff: f64 = coeff.trim().parse().map_err(|_| CliError::Usage(format!("bad coefficient in '{term}'")))?;
            let exponents: Vec<u32> = exps
                .split(',')
                .map(|e| e.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("bad exponents in '{term}'")))?;
            if exponents.len() != vars {
                return usage(format!("term '{term}' needs {vars} exponents"));
            }
            terms.push(Monomial { exponents, coeff });
        }
        Ok(RealPolynomial::new(vars, terms)?)
    }

    fn hypersurface(&self) -> CliResult<PerturbedHypersurface> {
        if let Some(m) = &self.surface {
            return Ok(self.cfg.flags.epsilon.map_or_else(|| m.clone(), |e| m.with_epsilon(e)));
        }
        Ok(PerturbedHypersurface::new(self.quadric()?, self.polynomial()?, self.cfg.flags.epsilon.unwrap_or(0.0))?)
    }

    fn solve_config(&self) -> CliResult<SolveConfig> {
        let f = &self.cfg.flags;
        let d = SolveConfig::default();
        let cfg = SolveConfig {
            grid: self.cfg.grid,
            modes: f.trunc.unwrap_or(d.modes),
            tolerance: f.tolerance.unwrap_or(d.tolerance),
            max_iterations: f.max_iterations.unwrap_or(d.max_iterations),
            ..d
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn differential(&self) -> CliResult<CMat> {
        let d = self.n + 1;
        Ok(match self.list("df", &self.cfg.flags.df, d * d)? {
            Some(e) => CMat::from_row_slice(d, d, &e),
            None => CMat::identity(d, d),
        })
    }

    fn source(&self) -> SymbolSource {
        match self.cfg.flags.symbol.unwrap_or_default() {
            SymbolChoice::ClosedForm => SymbolSource::ClosedForm,
            SymbolChoice::GBased => SymbolSource::GBased,
        }
    }

    /// One fixed instance, or `--instances` random ones drawn from `--seed`.
    fn instances(&self) -> CliResult<Vec<(Hyperquadric, DiscParams)>> {
        let f = &self.cfg.flags;
        match f.instances {
            Some(count) if !self.explicit_params() => {
                let mut rng = sampling::rng(f.seed.unwrap_or(0));
                Ok((0..count)
                    .map(|_| {
                        let q = sampling::hermitian(&mut rng, self.n);
                        let p = sampling::disc_params(&mut rng, self.n, 0.6, true);
                        (q, p)
                    })
                    .collect())
            }
            _ => Ok(vec![(self.quadric()?, self.params()?)]),
        }
    }
}

/// Runs one subcommand.
pub fn execute(cfg: &RunConfig) -> CliResult<Output> {
    let model = Model::new(cfg)?;
    let grid = cfg.grid;
    boundary::check_grid(grid).map_err(|e| CliError::Usage(e.to_string()))?;
    match cfg.command {
        Command::DiscMake => disc_make(&model, grid),
        Command::DiscInvert => disc_invert(&model, grid),
        Command::DiscThrough => disc_through(&model),
        Command::Lift => lift(&model, grid),
        Command::Verify => verify(&model, grid),
        Command::IndicesMaslov => suite(&model, |q, p| maslov(&model, q, p, grid)),
        Command::IndicesPartial => suite(&model, |q, p| partial(&model, q, p, grid)),
        Command::IndicesReplay => suite(&model, |q, p| replay(q, p, grid)),
        Command::Solve => solve(&model),
        Command::FamilyDim => family_dim(&model),
        Command::Jacobians => jacobians(&model),
        Command::Indicatrix => indicatrix(&model),
        Command::Transport => transport(&model),
    }
}

fn boundary_table(name: &'static str, h: &BoundaryFunction, extra: Option<(&str, &[f64])>) -> Table {
    let d = h.dim();
    let mut header = vec!["k".to_string(), "theta".to_string()];
    for j in 0..d {
        header.push(format!("h{j}_re"));
        header.push(format!("h{j}_im"));
    }
    if let Some((label, _)) = extra {
        header.push(label.to_string());
    }
    let mut t = Table { name, header, rows: Vec::new() };
    let g = h.grid_size();
    for k in 0..g {
        let mut row = vec![k.to_string(), float(std::f64::consts::TAU * k as f64 / g as f64)];
        for z in h.at(k) {
            row.push(float(z.re));
            row.push(float(z.im));
        }
        if let Some((_, vals)) = extra {
            row.push(float(vals[k]));
        }
        t.rows.push(row);
    }
    t
}

fn disc_make(model: &Model, grid: usize) -> CliResult<Output> {
    let q = model.quadric()?;
    let params = model.params()?;
    let d = disc::make_disc(&q, params.clone())?;
    let h = d.boundary(grid)?;
    let json = json!({
        "n": model.n,
        "params": params,
        "center": d.center(),
        "velocity": d.velocity(),
        "endpoint": d.endpoint()?,
        "gluing_residual": d.gluing_residual(grid)?,
    });
    Ok(Output { json, table: Some(boundary_table("disc-make", &h, None)) })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_boundary(path: &std::path::Path) -> CliResult<BoundaryFunction> {
    Ok(BoundaryFunction::new(read_json::<Vec<Vec<C64>>>(path)?)?)
}

fn disc_invert(model: &Model, grid: usize) -> CliResult<Output> {
    let q = model.quadric()?;
    let (h, original) = match &model.cfg.flags.input {
        Some(path) => (read_boundary(path)?, None),
        None => {
            let p = model.params()?;
            (Disc::new(&q, p.clone())?.boundary(grid)?, Some(p))
        }
    };
    let recovered = disc::invert_disc(&q, &h)?;
    let error = original.as_ref().map(|p| {
        let mut e = (p.y0 - recovered.y0).abs().max((p.a - recovered.a).norm());
        for (x, y) in p.v.iter().chain(&p.w).zip(recovered.v.iter().chain(&recovered.w)) {
            e = e.max((x - y).norm());
        }
        e
    });
    Ok(Output::json(&json!({
        "n": q.n(),
        "params": recovered,
        "original": original,
        "max_param_error": error,
    })))
}

fn disc_through(model: &Model) -> CliResult<Output> {
    let q = model.quadric()?;
    let p = model.center(|| usage("--p0 or --p is required"))?;
    let z = model.point()?;
    let params = disc::disc_through(&q, &p, &z)?;
    let end = Disc::new(&q, params.clone())?.endpoint()?;
    let err = end.iter().zip(&z).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Ok(Output::json(&json!({
        "n": q.n(),
        "a": params.a,
        "w": params.w,
        "params": params,
        "endpoint": end,
        "endpoint_error": err,
    })))
}

fn lift(model: &Model, grid: usize) -> CliResult<Output> {
    let q = model.quadric()?;
    let params = model.params()?;
    let b = model.cfg.flags.b.unwrap_or(1.0);
    let l = LiftParams::new(params.clone(), b)?;
    let check: LiftCheck = disc::check_lift(&q, &l, grid)?;
    let h_star = disc::closed_form_lift(&q, &l)?.boundary(grid)?;
    let json = json!({ "n": q.n(), "params": params, "b": b, "check": check });
    Ok(Output { json, table: Some(boundary_table("lift", &h_star, None)) })
}

fn verify(model: &Model, grid: usize) -> CliResult<Output> {
    let m = model.hypersurface()?;
    let h = match &model.cfg.flags.input {
        Some(path) => read_boundary(path)?,
        None => Disc::new(m.base(), model.params()?)?.boundary(grid)?,
    };
    let report: GluingReport = disc::verify_gluing(&m, &h)?;
    Ok(Output::json(&json!({ "n": m.n(), "epsilon": m.epsilon(), "report": report })))
}

fn suite(model: &Model, run: impl Fn(&Hyperquadric, &DiscParams) -> CliResult<Value>) -> CliResult<Output> {
    let inst = model.instances()?;
    if inst.len() == 1 && model.cfg.flags.instances.is_none() {
        let (q, p) = &inst[0];
        return Ok(Output { json: run(q, p)?, table: None });
    }
    let results: Vec<Value> = inst.iter().map(|(q, p)| run(q, p)).collect::<CliResult<_>>()?;
    Ok(Output::json(&json!({ "seed": model.cfg.flags.seed.unwrap_or(0), "instances": results })))
}

fn maslov(model: &Model, q: &Hyperquadric, p: &DiscParams, grid: usize) -> CliResult<Value> {
    let b = indices::build_b(q, p, model.source(), grid)?;
    let total = indices::maslov_index(&b)?;
    Ok(json!({
        "n": q.n(),
        "symbol": model.source(),
        "params": p,
        "kappa_total": total,
        "expected_total": 2 * q.n() as i64 + 2,
    }))
}

fn partial(model: &Model, q: &Hyperquadric, p: &DiscParams, grid: usize) -> CliResult<Value> {
    let b = indices::build_b(q, p, model.source(), grid)?;
    let kappa: PartialIndices = indices::partial_indices(&b)?;
    let toeplitz = indices::toeplitz_indices(b.samples(), kappa.total, &ToeplitzConfig::default())?;
    Ok(json!({
        "n": q.n(),
        "symbol": model.source(),
        "params": p,
        "kappa": kappa.kappa,
        "kappa_total": kappa.total,
        "toeplitz_kappa": toeplitz.kappa,
        "agree": toeplitz == kappa,
    }))
}

fn replay(q: &Hyperquadric, p: &DiscParams, grid: usize) -> CliResult<Value> {
    let report: ReductionReport = indices::verify_reduction_chain(q, p, grid)?;
    let agree = report.start == report.end && report.steps.iter().all(|s| s.delta == s.expected_delta);
    Ok(json!({ "n": q.n(), "params": p, "report": report, "agree": agree }))
}

fn glued_table(sol: &GluedDisc) -> CliResult<Table> {
    Ok(boundary_table("solve", &sol.boundary()?, Some(("lambda", &sol.lambda))))
}

fn solve_from_flags(model: &Model) -> CliResult<(PerturbedHypersurface, GluedDisc, SolveConfig)> {
    let m = model.hypersurface()?;
    let cfg = model.solve_config()?;
    let params = model.params()?;
    let cons = if model.cfg.flags.pinned.unwrap_or(false) {
        Constraints::pinned(Disc::new(m.base(), params.clone())?.center())
    } else {
        Constraints::default()
    };
    let sol = solver::solve_glued_disc(&m, &params, &cfg, &cons)?;
    Ok((m, sol, cfg))
}

fn solve(model: &Model) -> CliResult<Output> {
    let (_, sol, _) = solve_from_flags(model)?;
    let table = glued_table(&sol)?;
    Ok(Output { json: to_value(&sol), table: Some(table) })
}

fn family_dim(model: &Model) -> CliResult<Output> {
    let (m, sol, cfg) = solve_from_flags(model)?;
    let fd = solver::family_dimension(&m, &sol, &cfg)?;
    let n = model.n;
    let expected = if fd.pinned { 2 * n + 1 } else { 4 * n + 3 };
    let mut t = Table::new("family-dim", &["index", "singular_value"]);
    for (i, s) in fd.singular_values.iter().enumerate() {
        t.rows.push(vec![i.to_string(), float(*s)]);
    }
    let json = json!({
        "n": n,
        "epsilon": m.epsilon(),
        "pinned": fd.pinned,
        "dim": fd.dim,
        "expected": expected,
        "gap": fd.gap,
        "singular_values": fd.singular_values,
        "iterations": sol.diagnostics.iterations,
    });
    Ok(Output { json, table: Some(t) })
}

fn jacobians(model: &Model) -> CliResult<Output> {
    let m = model.hypersurface()?;
    let cfg = model.solve_config()?;
    let p = model.center(|| model.unit_center())?;
    let j = solver::center_map_jacobians(&m, &p, &cfg)?;
    let mut json = to_value(&j);
    json["endpoint_sigma_min"] = json!(j.endpoint_sigma_min());
    json["velocity_sigma_min"] = json!(j.velocity_sigma_min());
    json["center"] = to_value(&p);
    json["epsilon"] = json!(m.epsilon());
    Ok(Output { json, table: None })
}

fn indicatrix(model: &Model) -> CliResult<Output> {
    let m = model.hypersurface()?;
    let cfg = model.solve_config()?;
    let p = model.center(|| model.unit_center())?;
    let count = model.cfg.flags.count.unwrap_or(32);
    let seeds = solver::indicatrix_grid(model.n, count);
    let threads = model
        .cfg
        .flags
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |t| t.get()))
        .clamp(1, count.max(1));
    let mut points: Vec<Option<IndicatrixPoint>> = vec![None; count];
    std::thread::scope(|s| {
        let chunk = count.div_ceil(threads).max(1);
        for (slots, seeds) in points.chunks_mut(chunk).zip(seeds.chunks(chunk)) {
            let (m, p, cfg) = (&m, &p, &cfg);
            s.spawn(move || {
                for (slot, seed) in slots.iter_mut().zip(seeds) {
                    *slot = Some(solver::indicatrix_point(m, p, seed.clone(), cfg));
                }
            });
        }
    });
    let points: Vec<IndicatrixPoint> = points.into_iter().map(|p| p.expect("every slot is filled")).collect();
    let n = model.n;
    let mut header: Vec<String> = vec!["index".into()];
    for j in 1..=n {
        header.extend([format!("u{j}_re"), format!("u{j}_im")]);
    }
    header.extend(["a_re".into(), "a_im".into()]);
    for prefix in ["v", "closed"] {
        for j in 0..=n {
            header.extend([format!("{prefix}{j}_re"), format!("{prefix}{j}_im")]);
        }
    }
    header.extend(["residual".into(), "iterations".into(), "error".into()]);
    let mut t = Table { name: "indicatrix", header, rows: Vec::new() };
    for (i, pt) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for z in &pt.seed.direction {
            row.extend([float(z.re), float(z.im)]);
        }
        row.extend([float(pt.seed.a.re), float(pt.seed.a.im)]);
        for v in [&pt.velocity, &pt.closed_form] {
            match v {
                Some(v) => v.iter().for_each(|z| row.extend([float(z.re), float(z.im)])),
                None => row.extend(std::iter::repeat_n(String::new(), 2 * (n + 1))),
            }
        }
        row.push(pt.residual.map(float).unwrap_or_default());
        row.push(pt.iterations.to_string());
        row.push(pt.error.as_ref().map(|e| e.0.clone()).unwrap_or_default());
        t.rows.push(row);
    }
    let failed = points.iter().filter(|p| p.error.is_some()).count();
    let json = json!({ "n": n, "epsilon": m.epsilon(), "center": p, "failed": failed, "points": points });
    Ok(Output { json, table: Some(t) })
}

fn transport(model: &Model) -> CliResult<Output> {
    let m = model.hypersurface()?;
    let cfg = model.solve_config()?;
    let p = model.center(|| model.unit_center())?;
    let z = model.point()?;
    let df = model.differential()?;
    let t = solver::transport_jet(&m, &m, &p, &df, &z, None, &cfg)?;
    let mut json = to_value(&t);
    json["z"] = to_value(&z);
    json["center"] = to_value(&p);
    json["epsilon"] = json!(m.epsilon());
    Ok(Output { json, table: None })
}

/// CSV for outputs without a natural table.
pub fn table_for(name: &'static str, out: &Output) -> Table {
    match &out.table {
        Some(t) => Table { name: t.name, header: t.header.clone(), rows: t.rows.clone() },
        None => flatten(name, &out.json),
    }
}
