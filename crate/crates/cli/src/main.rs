use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use zerosum::expansion::{expansion_cover, verify_cover, ExpansionConfig, ExpansionCover, Fiber};
use zerosum::instance::{Generator, Instance, InstanceSpec};
use zerosum::nullstellensatz::{verify_coefficients, weighted_zero_sum, CoefficientSolution, WeightedInstance};
use zerosum::oracle::{
    axis_zero_sum_free, davenport_bound, enumerate_subsums, find_zero_sum_subset, is_zero_sum_free, olson_constant,
    SearchBudget, ZeroSumCertificate,
};
use zerosum::pipeline::{find_zero_sum, verify_trace, PipelineConfig, PipelineTrace, TraceCheck};
use zerosum::thickness::{decompose, strong_decompose, tube_decompose, Decomposition, GrowthFunction, StrongDecomposition, TubularCertificate};
use zerosum::{Error, Frac, GroupElement, GroupMultiset, GroupParams};

mod bench;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Serialize)]
#[command(name = "zerosum", version, about = "Zero-sum subsets of point sets in F_p^d")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct Global {
    /// Prime modulus
    #[arg(long, global = true)]
    p: Option<u32>,
    /// Dimension
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget for searches that support one
    #[arg(long, global = true)]
    budget_ms: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Include wall-clock timings (reports are then not byte-reproducible)
    #[arg(long, global = true)]
    #[serde(skip)]
    timings: bool,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Olson constant of F_p^d
    Olson,
    /// Nonempty subset sums of an instance
    Subsums {
        #[arg(long)]
        input: PathBuf,
        /// Raw little-endian bitset, one bit per state in index order
        #[arg(long)]
        bitset: Option<PathBuf>,
    },
    /// Zero-sum subset via the subset-sum oracle
    FindZeroSum {
        #[arg(long)]
        input: PathBuf,
    },
    /// (Strong) decomposition into hull-thick parts
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        #[arg(long, default_value_t = 0)]
        k0: u64,
        /// Growth function as JSON, e.g. {"kind":"affine","c":1,"c0":1}
        #[arg(long)]
        growth: Option<String>,
        #[arg(long)]
        strong: bool,
        #[arg(long, default_value_t = zerosum::thickness::DEFAULT_MAX_PARTS)]
        max_parts: usize,
    },
    /// Tubular sub-multiset and its certificate
    Tube {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        k0: u64,
        #[arg(long, default_value = "1/16")]
        delta: String,
        #[arg(long)]
        growth: Option<String>,
    },
    /// Weighted zero sum: a_i in {0} or [r, w_i - r], sum a_i y_i = 0
    Nul {
        /// JSON list of points, e.g. [[1,0],[0,1]]
        #[arg(long)]
        points: String,
        /// Comma-separated weights
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 0)]
        r: u64,
    },
    /// Expansion cover over fibers labelled by the first l coordinates
    Expand {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        t: i64,
        #[arg(long, default_value_t = 4)]
        t_max: i64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Staged zero-sum search with full trace
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Write the trace separately
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Use the unscaled constants instead of the small-prime profile
        #[arg(long)]
        asymptotic_constants: bool,
        #[arg(long)]
        prepass: bool,
    },
    /// Re-check a report or trace
    Verify {
        /// Report or trace file
        #[arg(long)]
        artifact: PathBuf,
        /// Instance to check against (defaults to the one embedded in the report)
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Timing grid, CSV output
    Bench {
        /// dp, dp-large, pipeline, all or empty
        #[arg(long, default_value = "dp")]
        suite: String,
    },
    /// Generate an instance
    Gen {
        /// explicit, random-cloud, fiber-union, box or adversarial-thin
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        size: usize,
        /// JSON list of points for explicit
        #[arg(long)]
        points: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        labels: Vec<i64>,
        #[arg(long, default_value_t = 0)]
        fiber_size: usize,
        #[arg(long, default_value_t = 0)]
        cloud: usize,
        #[arg(long, default_value_t = 1)]
        radius: u32,
        #[arg(long, default_value_t = 1)]
        width: u32,
        #[arg(long)]
        include_zero: bool,
        #[arg(long)]
        multiset: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Olson => "olson",
            Command::Subsums { .. } => "subsums",
            Command::FindZeroSum { .. } => "find-zero-sum",
            Command::Decompose { .. } => "decompose",
            Command::Tube { .. } => "tube",
            Command::Nul { .. } => "nul",
            Command::Expand { .. } => "expand",
            Command::Pipeline { .. } => "pipeline",
            Command::Verify { .. } => "verify",
            Command::Bench { .. } => "bench",
            Command::Gen { .. } => "gen",
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    schema_version: u32,
    command: String,
    artifact_version: String,
    seed: u64,
    config_digest: String,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<f64>,
}

/// Exit status of a command that ran to completion.
enum Outcome {
    Ok(Value),
    /// Result produced but it reports a failure (stage failure, failed check).
    Failed(Value),
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Accepts a bare instance or any report embedding one under `result.input`.
fn instance_from_value(v: &Value) -> Result<Instance, Error> {
    let inner = v.get("result").and_then(|r| r.get("input")).unwrap_or(v);
    Instance::from_json(&inner.to_string())
}

fn load_instance(path: &Path, global: &Global) -> Result<(GroupParams, Instance), Error> {
    let inst = instance_from_value(&read_json(path)?)?;
    if global.p.is_some_and(|p| p != inst.p) || global.d.is_some_and(|d| d != inst.d) {
        return Err(usage(format!("instance is over F_{}^{}, which contradicts --p/--d", inst.p, inst.d)));
    }
    Ok((inst.params()?, inst))
}

fn global_params(global: &Global) -> Result<GroupParams, Error> {
    let (Some(p), Some(d)) = (global.p, global.d) else {
        return Err(usage("--p and --d are required"));
    };
    GroupParams::new(p, d)
}

fn parse_frac(s: &str) -> Result<Frac, Error> {
    s.parse()
}

fn parse_growth(s: &Option<String>) -> Result<GrowthFunction, Error> {
    let g = match s {
        None => PipelineConfig::default().growth,
        Some(text) => serde_json::from_str(text).map_err(|e| Error::Parse(format!("growth: {e}")))?,
    };
    g.validate()?;
    Ok(g)
}

fn parse_points(params: &GroupParams, text: &str) -> Result<Vec<GroupElement>, Error> {
    let coords: Vec<Vec<i64>> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("points: {e}")))?;
    coords.iter().map(|c| params.element(c)).collect()
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn fibers_by_head(x: &GroupMultiset, l: usize) -> Vec<Fiber> {
    let mut map: std::collections::BTreeMap<GroupElement, GroupMultiset> = Default::default();
    for (e, m) in x.iter() {
        map.entry(e.head(l)).or_default().insert(e.clone(), m);
    }
    map.into_iter().map(|(label, elements)| Fiber { label, elements }).collect()
}

fn budget(global: &Global) -> SearchBudget {
    let mut b = SearchBudget::default();
    if let Some(ms) = global.budget_ms {
        b.max_time = Some(Duration::from_millis(ms));
    }
    b
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let g = &cli.global;
    match &cli.command {
        Command::Olson => {
            let params = global_params(g)?;
            match olson_constant(&params, &budget(g)) {
                Ok(r) if r.exact => Ok(Outcome::Ok(to_value(&r))),
                Ok(r) => Ok(Outcome::Failed(to_value(&r))),
                Err(Error::StateBudget { states, cap }) => {
                    let witness = axis_zero_sum_free(&params);
                    Ok(Outcome::Failed(json!({
                        "p": params.p,
                        "d": params.d,
                        "olson": null,
                        "exact": false,
                        "lower": witness.len() as u64 + 1,
                        "upper": davenport_bound(&params),
                        "witness": witness,
                        "reason": format!("{states} states exceed the search cap of {cap}"),
                    })))
                }
                Err(e) => Err(e),
            }
        }
        Command::Subsums { input, bitset } => {
            let (params, inst) = load_instance(input, g)?;
            let table = enumerate_subsums(&params, &inst.multiset())?;
            let bytes = table.reachable.to_le_bytes();
            if let Some(path) = bitset {
                write_atomic(path, &bytes)?;
            }
            Ok(Outcome::Ok(json!({
                "input": inst,
                "states": params.states(),
                "reachable": table.len(),
                "contains_zero": table.contains(&params.zero()),
                "bitset_sha256": hex::encode(Sha256::digest(&bytes)),
            })))
        }
        Command::FindZeroSum { input } => {
            let (params, inst) = load_instance(input, g)?;
            let cert = find_zero_sum_subset(&params, &inst.multiset())?;
            let found = cert.is_some();
            let v = json!({ "input": inst, "certificate": cert });
            Ok(if found { Outcome::Ok(v) } else { Outcome::Failed(v) })
        }
        Command::Decompose { input, epsilon, k0, growth, strong, max_parts } => {
            let (params, inst) = load_instance(input, g)?;
            let (eps, gf) = (parse_frac(epsilon)?, parse_growth(growth)?);
            let x = inst.multiset();
            if *strong {
                let sd = strong_decompose(&params, &x, *k0, &eps, &gf, *max_parts)?;
                let ok = sd.checks.ok();
                let v = json!({ "input": inst, "strong": sd });
                Ok(if ok { Outcome::Ok(v) } else { Outcome::Failed(v) })
            } else {
                let dec = decompose(&params, &x, *k0, &eps, &gf)?;
                let check = dec.check(&params, &x);
                let v = json!({ "input": inst, "decomposition": dec, "check": check });
                Ok(if check.ok() { Outcome::Ok(v) } else { Outcome::Failed(v) })
            }
        }
        Command::Tube { input, k0, delta, growth } => {
            let (params, inst) = load_instance(input, g)?;
            let (y, cert) = tube_decompose(&params, &inst.multiset(), *k0, &parse_frac(delta)?, &parse_growth(growth)?)?;
            let y: Vec<GroupElement> = y.iter_copies().cloned().collect();
            Ok(Outcome::Ok(json!({ "input": inst, "y": y, "certificate": cert })))
        }
        Command::Nul { points, weights, r } => {
            let params = global_params(g)?;
            let pts = parse_points(&params, points)?;
            let w: Vec<u64> = weights
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("weight {s:?}"))))
                .collect::<Result<_, _>>()?;
            let inst = WeightedInstance::new(&params, pts, w, *r)?;
            let sol = weighted_zero_sum(&inst)?;
            let v = json!({
                "instance": inst,
                "hypothesis": { "lhs": inst.hypothesis_lhs(), "rhs": inst.hypothesis_rhs(), "holds": inst.hypothesis_holds() },
                "solution": sol,
            });
            Ok(if sol.is_some() { Outcome::Ok(v) } else { Outcome::Failed(v) })
        }
        Command::Expand { input, l, t, t_max, samples } => {
            let (params, inst) = load_instance(input, g)?;
            if *l > params.d {
                return Err(usage("--l exceeds d"));
            }
            let cfg = ExpansionConfig { t: *t, t_max: *t_max, samples_per_lambda: *samples, seed: g.seed, ..Default::default() };
            let fibers = fibers_by_head(&inst.multiset(), *l);
            match expansion_cover(&params, *l, &fibers, &cfg) {
                Ok(cover) => Ok(Outcome::Ok(json!({ "input": inst, "l": l, "cover": cover }))),
                Err(e @ (Error::Stagnation { .. } | Error::Exhausted { .. })) => {
                    Ok(Outcome::Failed(json!({ "input": inst, "l": l, "cover": null, "failure": e.to_string() })))
                }
                Err(e) => Err(e),
            }
        }
        Command::Pipeline { input, epsilon, trace, asymptotic_constants, prepass } => {
            let (params, inst) = load_instance(input, g)?;
            let mut cfg = PipelineConfig { epsilon: parse_frac(epsilon)?, seed: g.seed, prepass: *prepass, ..Default::default() };
            if *asymptotic_constants {
                cfg.stage = zerosum::pipeline::StageParams::asymptotic();
            }
            let run = find_zero_sum(&params, &inst.multiset(), &cfg)?;
            if let Some(path) = trace {
                write_atomic(path, &pretty(&run.trace))?;
            }
            let ok = run.certificate.is_some();
            let v = json!({ "input": inst, "config": cfg, "certificate": run.certificate, "failure": run.failure, "trace": run.trace });
            Ok(if ok { Outcome::Ok(v) } else { Outcome::Failed(v) })
        }
        Command::Verify { artifact, input } => {
            let art = read_json(artifact)?;
            let checks = verify_artifact(&art, input.as_deref(), g)?;
            for c in &checks {
                eprintln!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            let all = checks.iter().all(|c| c.pass);
            let v = json!({ "checks": checks, "all_pass": all });
            Ok(if all { Outcome::Ok(v) } else { Outcome::Failed(v) })
        }
        Command::Bench { .. } => unreachable!("handled before dispatch"),
        Command::Gen { kind, size, points, labels, fiber_size, cloud, radius, width, include_zero, multiset } => {
            let params = global_params(g)?;
            let generator = match kind.as_str() {
                "explicit" => {
                    let text = points.as_deref().ok_or_else(|| usage("explicit needs --points"))?;
                    let coords: Vec<Vec<i64>> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("points: {e}")))?;
                    Generator::Explicit { points: coords }
                }
                "random-cloud" => Generator::RandomCloud { size: *size, include_zero: *include_zero },
                "fiber-union" => Generator::FiberUnion { labels: labels.clone(), fiber_size: *fiber_size, cloud: *cloud },
                "box" => Generator::Box { radius: *radius },
                "adversarial-thin" => Generator::AdversarialThin { size: *size, width: *width },
                other => return Err(usage(format!("unknown generator {other:?}"))),
            };
            let spec = InstanceSpec { p: params.p, d: params.d, seed: g.seed, generator, multiset: *multiset };
            let inst = spec.generate()?;
            Ok(Outcome::Ok(json!({ "spec": spec, "input": inst })))
        }
    }
}

fn named(name: &str, pass: bool) -> TraceCheck {
    TraceCheck { name: name.into(), pass }
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T, Error> {
    let inner = v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))?;
    serde_json::from_value(inner.clone()).map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn verify_artifact(art: &Value, input: Option<&Path>, g: &Global) -> Result<Vec<TraceCheck>, Error> {
    // a bare trace as written by `pipeline --trace`
    if art.get("stage_params").is_some() {
        let trace: PipelineTrace = serde_json::from_value(art.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let path = input.ok_or_else(|| usage("verifying a bare trace needs --input"))?;
        let (params, inst) = load_instance(path, g)?;
        return Ok(verify_trace(&params, &inst.multiset(), &trace));
    }
    let command: String = field(art, "command")?;
    let version: u32 = field(art, "schema_version")?;
    if version != REPORT_SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported report schema version {version}")));
    }
    let result: Value = field(art, "result")?;
    let embedded = || -> Result<(GroupParams, Instance), Error> {
        match input {
            Some(path) => load_instance(path, g),
            None => {
                let inst = instance_from_value(art)?;
                Ok((inst.params()?, inst))
            }
        }
    };
    let mut out = Vec::new();
    match command.as_str() {
        "olson" => {
            let p: u32 = field(&result, "p")?;
            let d: usize = field(&result, "d")?;
            let params = GroupParams::new(p, d)?;
            let witness: Vec<GroupElement> = field(&result, "witness")?;
            let lower: u64 = field(&result, "lower")?;
            let upper: u64 = field(&result, "upper")?;
            let distinct = GroupMultiset::from_elements(witness.iter().cloned()).is_set();
            out.push(named("witness_distinct", distinct));
            out.push(named("witness_zero_sum_free", is_zero_sum_free(&params, &witness)?));
            out.push(named("lower_matches_witness", lower == witness.len() as u64 + 1));
            out.push(named("upper_within_davenport", lower <= upper && upper <= davenport_bound(&params)));
        }
        "subsums" => {
            let (params, inst) = embedded()?;
            let table = enumerate_subsums(&params, &inst.multiset())?;
            let digest = hex::encode(Sha256::digest(table.reachable.to_le_bytes()));
            out.push(named("reachable_count", field::<usize>(&result, "reachable")? == table.len()));
            out.push(named("contains_zero", field::<bool>(&result, "contains_zero")? == table.contains(&params.zero())));
            out.push(named("bitset_digest", field::<String>(&result, "bitset_sha256")? == digest));
        }
        "find-zero-sum" => {
            let (params, inst) = embedded()?;
            let x = inst.multiset();
            match field::<Option<ZeroSumCertificate>>(&result, "certificate")? {
                Some(cert) => {
                    out.push(named("certificate_nonempty", !cert.elements.is_empty()));
                    out.push(named("certificate_subset", GroupMultiset::from_elements(cert.elements.iter().cloned()).is_submultiset_of(&x)));
                    out.push(named("certificate_sum_zero", params.sum(&cert.elements).is_zero()));
                }
                None => {
                    let table = enumerate_subsums(&params, &x)?;
                    out.push(named("zero_unreachable", !table.contains(&params.zero())));
                }
            }
        }
        "decompose" => {
            let (params, inst) = embedded()?;
            let x = inst.multiset();
            if result.get("strong").is_some() {
                let sd: StrongDecomposition = field(&result, "strong")?;
                let c = sd.recheck(&params, &x);
                out.push(named("removal_bound", c.removal_bound));
                out.push(named("parts_thick", c.parts_thick));
                out.push(named("unions_tubular", c.unions_tubular));
                out.push(named("all_subsets_certified", sd.subsets.len() as u64 == (1u64 << sd.parts().len()) - 1));
                let union = sd.parts().iter().fold(sd.x0.clone(), |acc, part| acc.union(part));
                out.push(named("partition", union == x));
                out.push(named("removed_count", sd.x0.len() == sd.base.x0.len() + sd.removed_total));
            } else {
                let dec: Decomposition = field(&result, "decomposition")?;
                let c = dec.check(&params, &x);
                out.push(named("partition", c.partition));
                out.push(named("x0_small", c.x0_small));
                out.push(named("parts_large", c.parts_large));
                out.push(named("parts_thick", c.parts_thick));
                out.push(named("hulls_match", c.hulls_match));
            }
        }
        "tube" => {
            let (params, inst) = embedded()?;
            let x = inst.multiset();
            let y = GroupMultiset::from_elements(field::<Vec<GroupElement>>(&result, "y")?);
            let cert: TubularCertificate = field(&result, "certificate")?;
            out.push(named("y_subset", y.is_submultiset_of(&x)));
            let keep = Frac::one() - &cert.delta * &Frac::from_int(1u64 << (params.d + 1));
            out.push(named("y_large", Frac::from_int(y.len()) >= keep.mul_int(x.len())));
            if !y.is_empty() {
                let c = cert.check(&params, &y);
                out.push(named("psi_valid", c.psi_valid));
                out.push(named("in_box", c.in_box));
                out.push(named("thick_rescan", c.thick));
                out.push(named("achieved_delta_matches", c.achieved_delta == cert.achieved_delta));
            }
        }
        "nul" => {
            let inst: WeightedInstance = field(&result, "instance")?;
            match field::<Option<CoefficientSolution>>(&result, "solution")? {
                Some(sol) => out.push(named("solution", verify_coefficients(&inst, &sol))),
                None => out.push(named("no_solution_recomputed", weighted_zero_sum(&inst)?.is_none())),
            }
        }
        "expand" => {
            let (_, inst) = embedded()?;
            let l: usize = field(&result, "l")?;
            if let Some(cover) = field::<Option<ExpansionCover>>(&result, "cover")? {
                let c = verify_cover(&cover, &fibers_by_head(&inst.multiset(), l))?;
                out.push(named("pairs_valid", c.pairs_valid));
                out.push(named("disjoint", c.disjoint));
                out.push(named("all_targets", c.all_targets));
                out.push(named("constant_k", c.constant_k));
            }
        }
        "pipeline" => {
            let (params, inst) = embedded()?;
            let x = inst.multiset();
            let trace: PipelineTrace = field(&result, "trace")?;
            if let Some(cert) = field::<Option<ZeroSumCertificate>>(&result, "certificate")? {
                out.push(named("certificate_nonempty", !cert.elements.is_empty()));
                out.push(named("certificate_subset", GroupMultiset::from_elements(cert.elements.iter().cloned()).is_submultiset_of(&x)));
                out.push(named("certificate_sum_zero", params.sum(&cert.elements).is_zero()));
                out.push(named("certificate_matches_trace", trace.certificate.as_ref() == Some(&cert)));
            }
            out.extend(verify_trace(&params, &x, &trace));
        }
        "gen" => {
            let spec: InstanceSpec = field(&result, "spec")?;
            let inst: Instance = field(&result, "input")?;
            out.push(named("regenerates", spec.generate()? == inst));
            out.push(named("is_set", spec.multiset || inst.multiset().is_set()));
        }
        other => return Err(Error::Parse(format!("cannot verify artifacts of command {other:?}"))),
    }
    Ok(out)
}

fn pretty<T: Serialize>(t: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(t).expect("serializable");
    v.push(b'\n');
    v
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes).and_then(|_| std::fs::rename(&tmp, path)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn emit(global: &Global, bytes: &[u8]) -> Result<(), Error> {
    match &global.output {
        Some(path) => write_atomic(path, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| Error::Parse(e.to_string()))
        }
    }
}

fn config_digest(cli: &Cli) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(cli).expect("serializable")))
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("ZEROSUM_THREADS") {
        let n: usize = v.parse().map_err(|_| usage(format!("ZEROSUM_THREADS={v:?} is not a number")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if let Command::Bench { suite } = &cli.command {
        return match bench::run(suite, &cli.global).and_then(|csv| emit(&cli.global, csv.as_bytes())) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }
    let start = Instant::now();
    let (result, code) = match run(&cli) {
        Ok(Outcome::Ok(v)) => (v, 0),
        Ok(Outcome::Failed(v)) => (v, 2),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, Error::Internal(_)) { 3 } else { 1 });
        }
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: cli.command.name().into(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        seed: cli.global.seed,
        config_digest: config_digest(&cli),
        result,
        timings_ms: cli.global.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    if let Err(e) = emit(&cli.global, &pretty(&report)) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
