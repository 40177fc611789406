use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use vertex_expansion::bave::{self, Assignment, BaveInstance};
use vertex_expansion::exact::{exact_min, ExactOptions};
use vertex_expansion::gadget::{self, build_chain, ProductFunction, MAX_TABLE_R, T};
use vertex_expansion::gauss::{self, GaussianGraphSpec, IndicatorSet};
use vertex_expansion::reduction::{self, ReductionParams};
use vertex_expansion::rounding::{self, RoundOptions};
use vertex_expansion::sdp::{self, SdpSolution, SolveOptions};
use vertex_expansion::transforms::{self, Origin};
use vertex_expansion::{corpus, Error, WeightedGraph};

use crate::{
    BaveCommand, Command, Covariance, GadgetCommand, GaussCommand, Generator, Output, SdpCommand,
    TestFunction, TransformCommand,
};

pub const SCHEMA: u32 = 1;

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

fn input_error(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        msg: msg.into(),
    }
}

/// A report plus the exit code it goes out with; a non-converged solve still
/// prints its best iterate.
pub struct Outcome {
    pub report: Value,
    pub code: u8,
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Wraps command output with the schema version, the command name, its full
/// parameter set and the seed (`null` for deterministic commands).
fn report(command: &str, params: Value, seed: Option<u64>, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("command".into(), json!(command));
    out.insert("params".into(), params);
    out.insert("seed".into(), json!(seed));
    if let Value::Object(fields) = body {
        out.extend(fields);
    }
    Value::Object(out)
}

fn ok(report: Value) -> CliResult<Outcome> {
    Ok(Outcome { report, code: 0 })
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> CliResult<WeightedGraph> {
    Ok(WeightedGraph::parse(&read(path)?)?)
}

fn read_instance(path: &Path) -> CliResult<BaveInstance> {
    Ok(BaveInstance::from_json(&read(path)?)?)
}

fn read_assignment(path: &Path) -> CliResult<Assignment> {
    let values: Vec<f64> = serde_json::from_str(&read(path)?)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(Assignment::new(values)?)
}

/// Writes `text` to `--out` and reports the path, or embeds it under `key`.
fn emit(out: &Output, key: &str, text: String) -> CliResult<Value> {
    match &out.out {
        Some(path) => {
            write(path, &text)?;
            Ok(json!({ "out": path }))
        }
        None => Ok(json!({ key: text })),
    }
}

fn emit_json(out: Option<&PathBuf>, key: &str, text: String) -> CliResult<Value> {
    match out {
        Some(path) => {
            write(path, &text)?;
            Ok(json!({ "out": path }))
        }
        None => {
            let v: Value = serde_json::from_str(&text).expect("library emits valid JSON");
            Ok(json!({ key: v }))
        }
    }
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut a), Value::Object(b)) => {
            a.extend(b);
            Value::Object(a)
        }
        (a, _) => a,
    }
}

pub fn run(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Exact {
            graph,
            symmetric,
            balance,
            cap,
        } => {
            let g = read_graph(&graph)?;
            let res = exact_min(
                &g,
                ExactOptions {
                    symmetric,
                    balance,
                    cap,
                },
            )?;
            let key = if symmetric { "PhiV" } else { "phiV" };
            ok(report(
                "exact",
                json!({ "graph": graph, "symmetric": symmetric, "balance": balance, "cap": cap }),
                None,
                json!({ key: res.value, "cut": res.cut.members() }),
            ))
        }
        Command::Approx {
            graph,
            reps,
            seed,
            tol,
            max_iter,
        } => {
            let g = read_graph(&graph)?;
            let opts = RoundOptions {
                reps,
                seed,
                solve: SolveOptions {
                    tol,
                    max_iter,
                    seed,
                },
            };
            let (_, r) = rounding::round(&g, None, opts)?;
            ok(report(
                "approx",
                json!({ "graph": graph, "reps": reps, "tol": tol, "max_iter": max_iter }),
                Some(seed),
                json!({
                    "sdpval": r.sdpval,
                    "degree": r.degree,
                    "bound": r.bound,
                    "achieved": r.achieved,
                    "cut": r.cut,
                    "disconnected": r.disconnected,
                    "perRep": r.per_rep,
                }),
            ))
        }
        Command::Sdp {
            command:
                SdpCommand::Solve {
                    graph,
                    tol,
                    max_iter,
                    seed,
                    dump_gram,
                },
        } => {
            let g = read_graph(&graph)?;
            let p = sdp::build_sdp(&g)?;
            let (sol, code) = match sdp::solve(
                &p,
                SolveOptions {
                    tol,
                    max_iter,
                    seed,
                },
            ) {
                Ok(sol) => (sol, 0),
                Err(Error::NotConverged { best, .. }) => (*best, EXIT_NOT_CONVERGED),
                Err(e) => return Err(e.into()),
            };
            if let Some(path) = &dump_gram {
                write(path, &sol.gram_text())?;
            }
            Ok(Outcome {
                report: report(
                    "sdp solve",
                    json!({ "graph": graph, "tol": tol, "max_iter": max_iter, "dump_gram": dump_gram }),
                    Some(seed),
                    sdp_body(&sol),
                ),
                code,
            })
        }
        Command::Transform { command } => transform(command),
        Command::Bave { command } => bave_command(command),
        Command::Gadget { command } => gadget_command(command),
        Command::Gauss { command } => gauss_command(command),
        Command::Reduce {
            graph,
            r,
            eps,
            d,
            samples,
            seed,
            eta,
            out,
        } => {
            let g = read_graph(&graph)?;
            let mut params = ReductionParams::new(r, eps, d, samples, seed)?;
            if let Some(eta) = eta {
                params = params.with_eta(eta)?;
            }
            let folded = reduction::build_folded_instance(&g, params)?;
            let labels: Vec<String> = folded.vertices.iter().map(ToString::to_string).collect();
            let body = json!({
                "variables": folded.instance.n_vars(),
                "tuples": folded.instance.tuples().len(),
                "marginal_gap": folded.instance.marginal_gap(),
                "labels": labels,
            });
            let inst = emit_json(out.as_ref(), "instance", folded.instance.to_json())?;
            ok(report(
                "reduce",
                json!({ "graph": graph, "R": r, "eps": eps, "d": d, "eta": params.eta, "samples": samples }),
                Some(seed),
                merge(body, inst),
            ))
        }
        Command::Corpus {
            generator,
            n,
            d,
            k,
            dim,
            seed,
            out,
        } => {
            let need = |v: Option<usize>, flag: &str| {
                v.ok_or_else(|| input_error(format!("{} needs --{flag}", value_name(generator))))
            };
            let g = match generator {
                Generator::Cycle => corpus::cycle(need(n, "n")?),
                Generator::Clique => corpus::clique(need(n, "n")?),
                Generator::Star => corpus::star(need(n, "n")?),
                Generator::Hypercube => {
                    corpus::hypercube(dim.ok_or_else(|| input_error("hypercube needs --dim"))?)
                }
                Generator::RandomRegular => {
                    corpus::random_regular(need(n, "n")?, need(d, "d")?, seed)
                }
                Generator::Barbell => corpus::barbell(need(k, "k")?),
                Generator::TwoCliques => corpus::two_cliques(need(k, "k")?),
            }?;
            let name = value_name(generator);
            let body = merge(
                json!({ "vertices": g.n(), "edges": g.edge_count() }),
                emit(&out, "graph", g.to_text())?,
            );
            ok(report(
                "corpus",
                json!({ "generator": name, "n": n, "d": d, "k": k, "dim": dim, "out": out.out }),
                (generator == Generator::RandomRegular).then_some(seed),
                body,
            ))
        }
    }
}

fn sdp_body(sol: &SdpSolution) -> Value {
    json!({
        "value": sol.value,
        "residuals": sol.residuals,
        "iterations": sol.iterations,
        "converged": sol.converged,
    })
}

fn transform(command: TransformCommand) -> CliResult<Outcome> {
    match command {
        TransformCommand::SquareUnion { graph, out } => {
            let g = read_graph(&graph)?;
            let h = transforms::square_union(&g);
            let map: Map<String, Value> = (0..h.n()).map(|v| (v.to_string(), json!(v))).collect();
            let body = merge(
                json!({ "vertices": h.n(), "edges": h.edge_count(), "map": map }),
                emit(&out, "graph", h.to_text())?,
            );
            ok(report(
                "transform square-union",
                json!({ "graph": graph, "out": out.out }),
                None,
                body,
            ))
        }
        TransformCommand::Subdivide { graph, out } => {
            let g = read_graph(&graph)?;
            let sub = transforms::edge_subdivision_weighted(&g);
            let map: Map<String, Value> = (0..sub.graph.n())
                .map(|v| {
                    let origin = match sub.origin(v) {
                        Origin::Vertex(u) => json!(u),
                        Origin::Edge(a, b) => json!([a, b]),
                    };
                    (v.to_string(), origin)
                })
                .collect();
            let body = merge(
                json!({ "vertices": sub.graph.n(), "edges": sub.graph.edge_count(), "map": map }),
                emit(&out, "graph", sub.graph.to_text())?,
            );
            ok(report(
                "transform subdivide",
                json!({ "graph": graph, "out": out.out }),
                None,
                body,
            ))
        }
    }
}

fn bave_command(command: BaveCommand) -> CliResult<Outcome> {
    match command {
        BaveCommand::Value {
            instance,
            assignment,
        } => {
            let inst = read_instance(&instance)?;
            let f = read_assignment(&assignment)?;
            let v = bave::bave_value(&inst, &f)?;
            ok(report(
                "bave value",
                json!({ "instance": instance, "assignment": assignment }),
                None,
                json!({
                    "numerator": v.numerator,
                    "denominator": v.denominator,
                    "ratio": v.ratio().ok(),
                }),
            ))
        }
        BaveCommand::Optimum { instance, balance } => {
            let inst = read_instance(&instance)?;
            let (f, value) = bave::bave_optimum(&inst, balance)?;
            ok(report(
                "bave optimum",
                json!({ "instance": instance, "balance": balance }),
                None,
                json!({ "value": value, "assignment": f.values() }),
            ))
        }
        BaveCommand::Threshold {
            instance,
            assignment,
        } => {
            let inst = read_instance(&instance)?;
            let f = read_assignment(&assignment)?;
            let fractional = bave::bave_value(&inst, &f)?.ratio()?;
            let (g, value) = bave::threshold_round(&inst, &f)?;
            ok(report(
                "bave threshold",
                json!({ "instance": instance, "assignment": assignment }),
                None,
                json!({ "fractional": fractional, "value": value, "threshold": g.values() }),
            ))
        }
        BaveCommand::Uniformize { instance, t, out } => {
            let inst = read_instance(&instance)?;
            let u = bave::uniformize(&inst, t)?;
            let body = merge(
                json!({
                    "t": u.t,
                    "variables": u.instance.n_vars(),
                    "origin": u.origin,
                    "deleted": u.deleted,
                }),
                emit_json(out.out.as_ref(), "instance", u.instance.to_json())?,
            );
            ok(report(
                "bave uniformize",
                json!({ "instance": instance, "t": t, "out": out.out }),
                None,
                body,
            ))
        }
        BaveCommand::SampleGraph {
            instance,
            big_d,
            seed,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let s = bave::instance_to_graph(&inst, big_d, seed)?;
            let body = merge(
                json!({
                    "vertices": s.graph.n(),
                    "edges": s.graph.edge_count(),
                    "ids": s.ids,
                    "multi_degrees": s.multi_degrees,
                    "deleted_fraction": s.deleted_fraction,
                }),
                emit(&out, "graph", s.graph.to_text())?,
            );
            ok(report(
                "bave sample-graph",
                json!({ "instance": instance, "D": big_d, "out": out.out }),
                Some(seed),
                body,
            ))
        }
    }
}

/// Majority of the coordinates in `{s, t}`, ties broken by the first one.
fn majority(r: usize) -> impl Fn(&[u8]) -> f64 + Send + Sync + 'static {
    move |x: &[u8]| {
        let ones = x.iter().filter(|&&c| c <= T).count();
        if 2 * ones > r || (2 * ones == r && x[0] <= T) {
            1.0
        } else {
            0.0
        }
    }
}

fn gadget_command(command: GadgetCommand) -> CliResult<Outcome> {
    match command {
        GadgetCommand::Chain { eps } => {
            let h = build_chain(eps)?;
            ok(report(
                "gadget chain",
                json!({ "eps": eps }),
                None,
                json!({
                    "states": gadget::STATE_NAMES,
                    "transition": h.transition,
                    "stationary": h.stationary,
                    "eigenvalues": h.eigenvalues,
                    "eigenvectors": h.eigenvectors,
                    "reversibility_error": h.reversibility_error(),
                }),
            ))
        }
        GadgetCommand::Dictator { eps, r, d } => {
            let (numerator, var1) = gadget::dictator_value_exact(eps, d)?;
            let h = build_chain(eps)?;
            if r == 0 {
                return Err(input_error("R must be at least 1"));
            }
            let (num_table, var1_table) =
                gadget::exact_value(&h, d, &ProductFunction::dictator(r, 0))?;
            ok(report(
                "gadget dictator",
                json!({ "eps": eps, "R": r, "d": d }),
                None,
                json!({
                    "numerator": numerator,
                    "var1": var1,
                    "ratio": numerator / var1,
                    "enumerated": { "numerator": num_table, "var1": var1_table },
                }),
            ))
        }
        GadgetCommand::Estimate {
            eps,
            r,
            d,
            samples,
            seed,
            function,
        } => {
            let h = build_chain(eps)?;
            if r == 0 {
                return Err(input_error("R must be at least 1"));
            }
            let f = match function {
                TestFunction::Dictator => ProductFunction::dictator(r, 0),
                TestFunction::Constant => ProductFunction::constant(r, 1.0),
                TestFunction::Majority if r <= MAX_TABLE_R => {
                    ProductFunction::tabulate(r, majority(r))?
                }
                TestFunction::Majority => ProductFunction::callback(r, majority(r)),
            };
            let est = gadget::estimate_value(&h, d, &f, samples, seed)?;
            ok(report(
                "gadget estimate",
                json!({
                    "eps": eps,
                    "R": r,
                    "d": d,
                    "samples": samples,
                    "function": value_name(function),
                }),
                Some(seed),
                json!({ "estimate": est }),
            ))
        }
        GadgetCommand::Spectrum { eps } => {
            let h = build_chain(eps)?;
            ok(report(
                "gadget spectrum",
                json!({ "eps": eps }),
                None,
                json!({ "spectrum": h.spectrum() }),
            ))
        }
    }
}

fn gauss_command(command: GaussCommand) -> CliResult<Outcome> {
    match command {
        GaussCommand::Iso {
            eps,
            d,
            offset,
            samples,
            seed,
        } => {
            let h = build_chain(eps)?;
            let spec = GaussianGraphSpec::from_chain(&h, d)?;
            let set = IndicatorSet::coordinate_halfspace(spec.n(), offset);
            let est = gauss::estimate_isoperimetry(&spec, &set, samples, seed)?;
            let volume = gauss::normal_cdf(offset);
            ok(report(
                "gauss iso",
                json!({ "eps": eps, "d": d, "offset": offset, "samples": samples }),
                Some(seed),
                json!({
                    "spec": spec,
                    "estimate": est,
                    "volume": volume,
                    "reference": (spec.eps_floor * (d as f64).ln()).sqrt() * volume.min(1.0 - volume),
                }),
            ))
        }
        GaussCommand::Tv { delta, eps } => {
            let tv = gauss::tv_distance_shifted(delta, eps)?;
            ok(report(
                "gauss tv",
                json!({ "delta": delta, "eps": eps }),
                None,
                json!({ "tv": tv }),
            ))
        }
        GaussCommand::Maxstat {
            d,
            sigma,
            samples,
            seed,
        } => {
            let s = gauss::max_gaussian_stats(d, sigma, samples, seed)?;
            let ln = (d as f64).ln();
            ok(report(
                "gauss maxstat",
                json!({ "d": d, "sigma": sigma, "samples": samples }),
                Some(seed),
                json!({
                    "stats": s,
                    "bound_mean": sigma * (2.0 * ln).sqrt(),
                    "bound_mean_sq": 4.0 * sigma * sigma * ln,
                }),
            ))
        }
        GaussCommand::Pz {
            n,
            covariance,
            samples,
            seed,
        } => {
            if n == 0 {
                return Err(input_error("n must be at least 1"));
            }
            let cov = match covariance {
                Covariance::Iid => DMatrix::identity(n, n) / n as f64,
                Covariance::Rank1 => {
                    DMatrix::from_fn(n, n, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 })
                }
                Covariance::Random => gauss::random_covariance(n, seed)?,
            };
            let p = gauss::paley_zygmund_check(&cov, samples, seed)?;
            ok(report(
                "gauss pz",
                json!({
                    "n": n,
                    "covariance": value_name(covariance),
                    "samples": samples,
                }),
                Some(seed),
                json!({ "probability": p, "lower_bound": 1.0 / 12.0 }),
            ))
        }
    }
}
