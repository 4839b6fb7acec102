//! End-to-end zero-sum search for large sets, following the
//! decomposition / hyperplane / weighted zero-sum / expansion route.
//!
//! Every inequality the argument relies on is checked at runtime. A
//! violated one stops the run with a [`StageFailure`] carrying the
//! inequality with both sides evaluated; a successful run returns a
//! certificate that is re-verified from scratch before it is handed out.
//!
//! Coordinates: ψ(x) = φ(x) + s is the tube chart of X_S, φ its linear
//! part and v = −s, so ψ(x) = φ(x) − v. Fibers are keyed by y = head(φ(x));
//! the expansion step works on ψ-points, whose heads are the labels y − v.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{expansion_cover, verify_cover, ExpansionConfig, ExpansionCover, Fiber};
use crate::frac::Frac;
use crate::group::{affine_hull, AffineHull, AffineIso, GroupElement, GroupMultiset, GroupParams, LinearFunctional};
use crate::nullstellensatz::{verify_coefficients, weighted_zero_sum, CoefficientSolution, WeightedInstance};
use crate::oracle::{find_zero_sum_subset, ZeroSumCertificate};
use crate::rng;
use crate::thickness::{scan_functionals, strong_decompose, GrowthFunction, StrongDecomposition};

pub const TRACE_SCHEMA_VERSION: u32 = 1;
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64, one stream per stage)";

/// Thinning constants, as multiples of μ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningWindow {
    pub rate: Frac,
    pub lo: Frac,
    pub hi: Frac,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageParams {
    pub profile: String,
    pub k0: u64,
    /// When set, μ is shrunk until μ·m < ε·cap.
    pub mu_cap: Option<Frac>,
    pub r_divisor: u64,
    pub thinning: ThinningWindow,
    pub max_parts: usize,
}

impl StageParams {
    /// Unscaled constants; only meaningful for very large p.
    pub fn asymptotic() -> StageParams {
        StageParams {
            profile: "asymptotic".into(),
            k0: 0,
            mu_cap: Some(Frac::new(1, 100)),
            r_divisor: 3,
            thinning: ThinningWindow { rate: Frac::new(1, 15), lo: Frac::new(1, 20), hi: Frac::new(1, 10) },
            max_parts: crate::thickness::DEFAULT_MAX_PARTS,
        }
    }

    /// Small-prime profile: μ is not shrunk and the thinning window is
    /// widened to [μ/8, μ/3] at rate μ/5, keeping |Z_y| ≤ r.
    pub fn desk() -> StageParams {
        StageParams {
            profile: "desk".into(),
            mu_cap: None,
            thinning: ThinningWindow { rate: Frac::new(1, 5), lo: Frac::new(1, 8), hi: Frac::new(1, 3) },
            ..StageParams::asymptotic()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub epsilon: Frac,
    pub growth: GrowthFunction,
    pub escalation_growth: Option<GrowthFunction>,
    pub seed: u64,
    pub hyperplane_budget: u32,
    pub thinning_budget: u32,
    pub expansion_escalations: u32,
    pub expansion: ExpansionConfig,
    pub stage: StageParams,
    /// Hand the whole input to the subset-sum oracle first.
    pub prepass: bool,
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            epsilon: Frac::new(1, 2),
            growth: GrowthFunction::Affine { c: 1, c0: 1 },
            escalation_growth: Some(GrowthFunction::Affine { c: 2, c0: 1 }),
            seed: 0,
            hyperplane_budget: 1000,
            thinning_budget: 100,
            expansion_escalations: 3,
            expansion: ExpansionConfig::default(),
            stage: StageParams::desk(),
            prepass: false,
            record_timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_positive() {
            return Err(Error::Precondition(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.hyperplane_budget == 0 || self.thinning_budget == 0 || self.expansion_escalations == 0 {
            return Err(Error::Precondition("retry budgets must be positive".into()));
        }
        if self.stage.r_divisor == 0 {
            return Err(Error::Precondition("r divisor must be positive".into()));
        }
        self.growth.validate()?;
        if let Some(g) = &self.escalation_growth {
            g.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ShortCircuit,
    Decomposition,
    Hyperplane,
    Weighted,
    Projection,
    Thinning,
    Expansion,
    Selection,
    Target,
    Assembly,
}

impl Stage {
    pub fn number(self) -> u32 {
        self as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    pub description: String,
    pub lhs: Frac,
    pub rel: Relation,
    pub rhs: Frac,
}

impl Inequality {
    pub fn new(description: impl Into<String>, lhs: Frac, rel: Relation, rhs: Frac) -> Inequality {
        Inequality { description: description.into(), lhs, rel, rhs }
    }

    pub fn ints(description: impl Into<String>, lhs: u64, rel: Relation, rhs: u64) -> Inequality {
        Inequality::new(description, Frac::from_int(lhs), rel, Frac::from_int(rhs))
    }

    pub fn holds(&self) -> bool {
        match self.rel {
            Relation::Lt => self.lhs < self.rhs,
            Relation::Le => self.lhs <= self.rhs,
            Relation::Eq => self.lhs == self.rhs,
            Relation::Ge => self.lhs >= self.rhs,
            Relation::Gt => self.lhs > self.rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub number: u32,
    pub inequality: Inequality,
    pub message: String,
    pub suggestion: String,
}

impl StageFailure {
    fn new(stage: Stage, inequality: Inequality, message: impl Into<String>, suggestion: &str) -> StageFailure {
        StageFailure { stage, number: stage.number(), inequality, message: message.into(), suggestion: suggestion.into() }
    }

    /// A failure is honest when its inequality re-evaluates as violated.
    pub fn is_honest(&self) -> bool {
        !self.inequality.holds()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneRecord {
    pub normal: LinearFunctional,
    pub attempts: u32,
    /// x_i ∈ H ∩ U_i, lexicographically smallest.
    pub points: Vec<GroupElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedRecord {
    pub instance: WeightedInstance,
    pub solution: CoefficientSolution,
    pub support: Vec<usize>,
    pub hypothesis_lhs: u64,
    pub hypothesis_rhs: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberRecord {
    /// head(φ(x)) shared by the fiber.
    pub y: GroupElement,
    pub size: u64,
    pub a_y: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub members: Vec<usize>,
    pub l: usize,
    pub k_s: u64,
    pub psi: AffineIso,
    pub v: GroupElement,
    /// y_i = head(φ(x_i)) for i in `members`.
    pub part_labels: Vec<GroupElement>,
    pub fibers: Vec<FiberRecord>,
    /// Fiber points in original coordinates, aligned with `fibers`.
    pub fiber_points: Vec<Vec<GroupElement>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningRecord {
    pub attempts: u32,
    pub delta: Frac,
    pub windows: Vec<(u64, u64)>,
    /// Z_y in original coordinates, aligned with the fibers.
    pub z: Vec<Vec<GroupElement>>,
    pub worst_outside: Frac,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub cover: ExpansionCover,
    pub k_y: Vec<u64>,
    pub rethins: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRecord {
    /// A_y in original coordinates, aligned with the fibers.
    pub a_sets: Vec<Vec<GroupElement>>,
    /// Σ_A φ(x) = (u_1, u_2).
    pub u: GroupElement,
    pub target: GroupElement,
    /// S_y in original coordinates, aligned with the fibers.
    pub s_sets: Vec<Vec<GroupElement>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub schema_version: u32,
    pub rng: String,
    pub seed: u64,
    pub p: u32,
    pub d: usize,
    pub epsilon: Frac,
    pub stage_params: StageParams,
    pub input_size: u64,
    /// |X| ≥ (d − 1 + ε)p
    pub size_condition: bool,
    pub short_circuit: bool,
    pub prepass: bool,
    pub growth: GrowthFunction,
    pub restarts: u32,
    pub decomposition: Option<StrongDecomposition>,
    pub mu: Option<Frac>,
    pub r: Option<u64>,
    pub hyperplane: Option<HyperplaneRecord>,
    pub weighted: Option<WeightedRecord>,
    pub projection: Option<ProjectionRecord>,
    pub thinning: Option<ThinningRecord>,
    pub expansion: Option<ExpansionRecord>,
    pub selection: Option<SelectionRecord>,
    pub certificate: Option<ZeroSumCertificate>,
    pub failure: Option<StageFailure>,
    pub timings_ms: Option<Vec<(Stage, f64)>>,
}

impl PipelineTrace {
    fn new(params: &GroupParams, x: &GroupMultiset, config: &PipelineConfig) -> PipelineTrace {
        let need = (Frac::from_int(params.d as u64 - 1) + config.epsilon.clone()).mul_int(params.p as u64);
        PipelineTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            rng: RNG_ALGORITHM.into(),
            seed: config.seed,
            p: params.p,
            d: params.d,
            epsilon: config.epsilon.clone(),
            stage_params: config.stage.clone(),
            input_size: x.len(),
            size_condition: Frac::from_int(x.len()) >= need,
            short_circuit: false,
            prepass: false,
            growth: config.growth.clone(),
            restarts: 0,
            decomposition: None,
            mu: None,
            r: None,
            hyperplane: None,
            weighted: None,
            projection: None,
            thinning: None,
            expansion: None,
            selection: None,
            certificate: None,
            failure: None,
            timings_ms: config.record_timings.then(Vec::new),
        }
    }

    fn reset_attempt(&mut self) {
        self.decomposition = None;
        self.mu = None;
        self.r = None;
        self.hyperplane = None;
        self.weighted = None;
        self.projection = None;
        self.thinning = None;
        self.expansion = None;
        self.selection = None;
    }

    fn time(&mut self, stage: Stage, start: Instant) {
        if let Some(t) = self.timings_ms.as_mut() {
            t.push((stage, start.elapsed().as_secs_f64() * 1e3));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub certificate: Option<ZeroSumCertificate>,
    pub failure: Option<StageFailure>,
    pub trace: PipelineTrace,
}

type StageResult<T> = Result<std::result::Result<T, StageFailure>>;

/// Samples normals until the hyperplane through the origin meets every hull
/// and the chosen points x_i ∈ H ∩ U_i are distinct.
pub fn sample_hyperplane(
    params: &GroupParams,
    hulls: &[AffineHull],
    seed: u64,
    budget: u32,
) -> std::result::Result<HyperplaneRecord, StageFailure> {
    let mut rng = rng::substream(seed, Stage::Hyperplane.number() as u64);
    let mut last_miss = 0u64;
    for attempt in 1..=budget {
        let normal: Vec<u32> = loop {
            let v: Vec<u32> = (0..params.d).map(|_| rng.random_range(0..params.p)).collect();
            if v.iter().any(|&c| c != 0) {
                break v;
            }
        };
        let mut points = Vec::with_capacity(hulls.len());
        let mut missed = 0u64;
        for hull in hulls {
            match hull.intersect_hyperplane(params, &normal) {
                Some(inter) => points.push(inter.lex_min().clone()),
                None => missed += 1,
            }
        }
        if missed > 0 {
            last_miss = missed;
            continue;
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != points.len() {
            continue;
        }
        return Ok(HyperplaneRecord { normal: LinearFunctional::new(0, normal), attempts: attempt, points });
    }
    Err(StageFailure::new(
        Stage::Hyperplane,
        Inequality::ints("accepted hyperplanes meeting every hull at distinct points", 0, Relation::Ge, 1),
        format!("{budget} samples rejected; last sample missed {last_miss} hulls"),
        "use a larger p or fewer parts",
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinningOutcome {
    /// Indices into each fiber.
    pub chosen: Vec<Vec<usize>>,
    pub attempts: u32,
    pub windows: Vec<(u64, u64)>,
    pub worst_outside: Frac,
}

/// Bernoulli thinning of the fibers (ψ-coordinates) with rejection until
/// every |Z_y| lies in its window and Z is (g(K_S), δ/4)-thick along every
/// functional non-constant on the fiber factor.
#[allow(clippy::too_many_arguments)]
pub fn random_thinning(
    params: &GroupParams,
    l: usize,
    fibers: &[Vec<GroupElement>],
    mu: &Frac,
    delta: &Frac,
    k_s: u64,
    g: &GrowthFunction,
    window: &ThinningWindow,
    seed: u64,
    budget: u32,
) -> std::result::Result<ThinningOutcome, StageFailure> {
    let total: u64 = fibers.iter().map(|f| f.len() as u64).sum();
    let radius = g.apply(k_s);
    let fiber_factor = |lin: &[u32]| lin[l..].iter().any(|&a| a != 0);
    for f in fibers {
        if Frac::from_int(f.len() as u64) < mu.mul_int(total) {
            return Err(StageFailure::new(
                Stage::Thinning,
                Inequality::new("|X_y| >= mu * sum |X_y|", Frac::from_int(f.len() as u64), Relation::Ge, mu.mul_int(total)),
                "a fiber is smaller than the part-size bound",
                "use a larger epsilon",
            ));
        }
    }
    let union = GroupMultiset::from_elements(fibers.iter().flatten().cloned());
    let pre = scan_functionals(params, &union, radius, fiber_factor);
    if !pre.is_thick(delta) {
        return Err(StageFailure::new(
            Stage::Thinning,
            Inequality::new("outside count of X_S >= delta |X_S|", Frac::from_int(pre.worst_outside()), Relation::Ge, delta.mul_int(total)),
            format!("X_S is thin along {:?}", pre.worst),
            "use a larger p",
        ));
    }
    let windows: Vec<(u64, u64)> = fibers
        .iter()
        .map(|f| {
            let base = mu.mul_int(f.len() as u64);
            ((&base * &window.lo).ceil_u64(), (&base * &window.hi).floor_u64())
        })
        .collect();
    if let Some(&(lo, hi)) = windows.iter().find(|(lo, hi)| lo > hi || *hi == 0) {
        return Err(StageFailure::new(
            Stage::Thinning,
            Inequality::ints("thinning window [lo, hi] contains a positive integer", lo.max(1), Relation::Le, hi),
            "empty thinning window",
            "use a larger input",
        ));
    }
    let rate = (mu * &window.rate).to_f64().clamp(0.0, 1.0);
    let quarter = delta.div_int(4);
    let mut last = Inequality::ints("draws accepted", 0, Relation::Ge, 1);
    let mut last_msg = String::new();
    for attempt in 1..=budget {
        let mut rng = rng::substream(seed, 1000 + attempt as u64);
        let chosen: Vec<Vec<usize>> =
            fibers.iter().map(|f| (0..f.len()).filter(|_| rng.random_bool(rate)).collect()).collect();
        if let Some((c, &(lo, hi))) = chosen.iter().zip(&windows).find(|(c, (lo, hi))| (c.len() as u64) < *lo || c.len() as u64 > *hi) {
            let n = c.len() as u64;
            last = if n < lo {
                Inequality::ints("|Z_y| >= window low", n, Relation::Ge, lo)
            } else {
                Inequality::ints("|Z_y| <= window high", n, Relation::Le, hi)
            };
            last_msg = "fiber sample outside its window".into();
            continue;
        }
        let z = GroupMultiset::from_elements(chosen.iter().zip(fibers).flat_map(|(c, f)| c.iter().map(|&i| f[i].clone())));
        let scan = scan_functionals(params, &z, radius, fiber_factor);
        let worst_outside = scan.achieved_delta();
        if scan.is_thick(&quarter) {
            return Ok(ThinningOutcome { chosen, attempts: attempt, windows, worst_outside });
        }
        last = Inequality::new("outside count of Z >= (delta/4) |Z|", Frac::from_int(scan.worst_outside()), Relation::Ge, quarter.mul_int(z.len()));
        last_msg = format!("Z is thin along {:?}", scan.worst);
    }
    Err(StageFailure::new(
        Stage::Thinning,
        last,
        format!("thinning budget of {budget} draws exhausted: {last_msg}"),
        "use a larger input or raise the thinning budget",
    ))
}

/// B ⊆ X, B ≠ ∅ and Σ_B = 0, recomputed from scratch.
pub fn verify_certificate(params: &GroupParams, x: &GroupMultiset, cert: &ZeroSumCertificate) -> bool {
    if cert.elements.is_empty() || cert.elements.iter().any(|e| params.check(e).is_err()) {
        return false;
    }
    let b = GroupMultiset::from_elements(cert.elements.iter().cloned());
    b.is_submultiset_of(x) && params.sum(&cert.elements).is_zero()
}

fn head_of(x: &GroupElement, l: usize) -> GroupElement {
    x.head(l)
}

struct Attempt<'a> {
    params: &'a GroupParams,
    x: &'a GroupMultiset,
    config: &'a PipelineConfig,
    growth: GrowthFunction,
    seed: u64,
}

impl Attempt<'_> {
    fn run(&self, trace: &mut PipelineTrace) -> StageResult<ZeroSumCertificate> {
        let params = self.params;
        let p = params.p;
        let d = params.d;
        let cfg = self.config;

        // (1) strong decomposition with ε' = ε / 2d
        let t0 = Instant::now();
        let eps1 = cfg.epsilon.div_int(2 * d as u64);
        let sd = match strong_decompose(params, self.x, cfg.stage.k0, &eps1, &self.growth, cfg.stage.max_parts) {
            Ok(sd) => sd,
            Err(Error::SweepTooLarge { m, cap }) => {
                return Ok(Err(StageFailure::new(
                    Stage::Decomposition,
                    Inequality::ints("number of parts m <= sweep cap", m as u64, Relation::Le, cap as u64),
                    "too many parts for the 2^m - 1 subset sweep",
                    "use a larger epsilon",
                )))
            }
            Err(Error::Precondition(msg)) if eps1 >= Frac::one() => {
                return Ok(Err(StageFailure::new(
                    Stage::Decomposition,
                    Inequality::new("epsilon / 2d < 1", eps1.clone(), Relation::Lt, Frac::one()),
                    msg,
                    "use a smaller epsilon",
                )))
            }
            Err(e) => return Err(e),
        };
        let passed = [sd.checks.removal_bound, sd.checks.parts_thick, sd.checks.unions_tubular].iter().filter(|&&b| b).count();
        if passed < 3 {
            return Ok(Err(StageFailure::new(
                Stage::Decomposition,
                Inequality::ints("strong decomposition checks passed", passed as u64, Relation::Ge, 3),
                format!("{:?}", sd.checks),
                "use a larger p",
            )));
        }
        let parts: Vec<GroupMultiset> = sd.parts().to_vec();
        let m = parts.len();
        let n_post: u64 = parts.iter().map(GroupMultiset::len).sum();
        let min_part = parts.iter().map(GroupMultiset::len).min().unwrap_or(0);
        let mut mu = Frac::new(min_part as i64, n_post as i64);
        if let Some(cap) = &cfg.stage.mu_cap {
            let bound = (&cfg.epsilon * cap).div_int(m as u64);
            if mu >= bound {
                mu = bound.div_int(2);
            }
        }
        let r = mu.mul_int(n_post).div_int(cfg.stage.r_divisor).ceil_u64();
        let hulls = sd.base.hulls.clone();
        trace.decomposition = Some(sd.clone());
        trace.mu = Some(mu.clone());
        trace.r = Some(r);
        trace.time(Stage::Decomposition, t0);

        // (2) hyperplane through the origin meeting every hull
        let t0 = Instant::now();
        let hyper = match sample_hyperplane(params, &hulls, self.seed, cfg.hyperplane_budget) {
            Ok(h) => h,
            Err(f) => return Ok(Err(f)),
        };
        trace.hyperplane = Some(hyper.clone());
        trace.time(Stage::Hyperplane, t0);

        // (3) weighted zero sum of the x_i inside H, weights |X_i|, margin r
        let t0 = Instant::now();
        let weights: Vec<u64> = parts.iter().map(GroupMultiset::len).collect();
        let lhs: u64 = weights.iter().sum();
        let rhs = (d as u64 - 1) * (p as u64 - 1) + 2 * r * m as u64 + 1;
        if lhs < rhs {
            return Ok(Err(StageFailure::new(
                Stage::Weighted,
                Inequality::ints("sum of weights >= (d-1)(p-1) + 2rm + 1", lhs, Relation::Ge, rhs),
                "weighted zero-sum hypothesis fails inside the hyperplane",
                "use a larger input",
            )));
        }
        let inst = WeightedInstance::new(params, hyper.points.clone(), weights, r)?;
        let sol = weighted_zero_sum(&inst)?
            .ok_or_else(|| Error::Internal("weighted hypothesis holds in H but no solution was found".into()))?;
        if !verify_coefficients(&inst, &sol) {
            return Err(Error::Internal("weighted solution failed verification".into()));
        }
        let support: Vec<usize> = (0..m).filter(|&i| sol.a[i] > 0).collect();
        trace.weighted = Some(WeightedRecord {
            instance: inst.clone(),
            solution: sol.clone(),
            support: support.clone(),
            hypothesis_lhs: lhs,
            hypothesis_rhs: rhs,
        });
        trace.time(Stage::Weighted, t0);

        // (4) tube chart of X_S and projection onto the first l coordinates
        let t0 = Instant::now();
        let sub = sd
            .certificate_for(&support)
            .ok_or_else(|| Error::Internal(format!("no tubular certificate for S = {support:?}")))?;
        let cert = &sub.certificate;
        let l = cert.l;
        let k_s = cert.k;
        let psi = cert.psi.clone();
        let v = params.neg(&psi.shift);
        let phi = |x: &GroupElement| psi.apply_linear(params, x);
        let bad = support
            .iter()
            .filter(|&&i| hulls[i].basis.iter().any(|b| phi(b).0[..l].iter().any(|&c| c != 0)))
            .count();
        if bad > 0 {
            return Ok(Err(StageFailure::new(
                Stage::Projection,
                Inequality::ints("hulls of X_S with a non-point projection", bad as u64, Relation::Le, 0),
                "a hull is not collapsed by the tube projection",
                "use a faster growing g",
            )));
        }
        let part_labels: Vec<GroupElement> = support.iter().map(|&i| head_of(&phi(&hyper.points[i]), l)).collect();
        let mut fibers: BTreeMap<GroupElement, (Vec<GroupElement>, u64)> = BTreeMap::new();
        for (&i, y) in support.iter().zip(&part_labels) {
            let entry = fibers.entry(y.clone()).or_default();
            entry.0.extend(parts[i].iter_copies().cloned());
            entry.1 += sol.a[i];
        }
        for (pts, _) in fibers.values_mut() {
            pts.sort();
        }
        let lparams = (l > 0).then(|| GroupParams { p, d: l });
        if let Some(lp) = &lparams {
            let ys = fibers.iter().fold(lp.zero(), |acc, (y, (_, a))| lp.add(&acc, &lp.scale(y, *a)));
            if !ys.is_zero() {
                return Err(Error::Internal("sum a_y y != 0".into()));
            }
        }
        let labels: Vec<GroupElement> = fibers.keys().cloned().collect();
        let fiber_pts: Vec<Vec<GroupElement>> = fibers.values().map(|(pts, _)| pts.clone()).collect();
        let a_y: Vec<u64> = fibers.values().map(|(_, a)| *a).collect();
        trace.projection = Some(ProjectionRecord {
            members: support.clone(),
            l,
            k_s,
            psi: psi.clone(),
            v: v.clone(),
            part_labels,
            fibers: labels
                .iter()
                .zip(&fiber_pts)
                .zip(&a_y)
                .map(|((y, pts), &a)| FiberRecord { y: y.clone(), size: pts.len() as u64, a_y: a })
                .collect(),
            fiber_points: fiber_pts.clone(),
        });
        trace.time(Stage::Projection, t0);

        // (5)-(6) thinning and expansion, re-thinning on stagnation
        let psi_pts: Vec<Vec<GroupElement>> = fiber_pts.iter().map(|f| f.iter().map(|x| psi.apply(params, x)).collect()).collect();
        let delta = cert.delta.clone();
        let mut rethins = 0;
        let (thin, cover) = loop {
            let t0 = Instant::now();
            let thin_seed = self.seed ^ (rethins as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let thin = match random_thinning(
                params,
                l,
                &psi_pts,
                &mu,
                &delta,
                k_s,
                &self.growth,
                &cfg.stage.thinning,
                thin_seed,
                cfg.thinning_budget,
            ) {
                Ok(t) => t,
                Err(f) => return Ok(Err(f)),
            };
            trace.thinning = Some(ThinningRecord {
                attempts: thin.attempts,
                delta: delta.div_int(4),
                windows: thin.windows.clone(),
                z: thin.chosen.iter().zip(&fiber_pts).map(|(c, f)| c.iter().map(|&i| f[i].clone()).collect()).collect(),
                worst_outside: thin.worst_outside.clone(),
            });
            trace.time(Stage::Thinning, t0);

            let t0 = Instant::now();
            let cover_fibers: Vec<Fiber> = labels
                .iter()
                .zip(&thin.chosen)
                .zip(&psi_pts)
                .map(|((y, c), pts)| Fiber {
                    label: if l > 0 { lparams.as_ref().unwrap().sub(y, &v.head(l)) } else { GroupElement(vec![]) },
                    elements: GroupMultiset::from_elements(c.iter().map(|&i| pts[i].clone())),
                })
                .collect();
            let ecfg = ExpansionConfig { seed: self.seed.wrapping_add(rethins as u64 + 1), ..cfg.expansion.clone() };
            match expansion_cover(params, l, &cover_fibers, &ecfg) {
                Ok(cover) => {
                    trace.time(Stage::Expansion, t0);
                    break (thin, cover);
                }
                Err(Error::Stagnation { covered, target, .. } | Error::Exhausted { covered, target }) => {
                    trace.time(Stage::Expansion, t0);
                    rethins += 1;
                    if rethins >= cfg.expansion_escalations {
                        return Ok(Err(StageFailure::new(
                            Stage::Expansion,
                            Inequality::ints("covered targets of the fiber factor", covered, Relation::Ge, target),
                            format!("expansion stalled after {rethins} thinning draws"),
                            "raise T, switch the growth function or use a larger input",
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        };

        let zero_tail = GroupElement(vec![0; d - l]);
        let base_sel = cover
            .select_by_fiber(&zero_tail)
            .ok_or_else(|| Error::Internal("cover misses the zero target".into()))?;
        let cover_labels: Vec<GroupElement> =
            labels.iter().map(|y| if l > 0 { lparams.as_ref().unwrap().sub(y, &v.head(l)) } else { GroupElement(vec![]) }).collect();
        let k_y: Vec<u64> = cover_labels.iter().map(|lab| base_sel.get(lab).map_or(0, |s| s.len() as u64)).collect();
        let k = cover.k;
        if k_y.iter().sum::<u64>() != k {
            return Err(Error::Internal("sum k_y != k".into()));
        }
        for (i, &ky) in k_y.iter().enumerate() {
            let z = thin.chosen[i].len() as u64;
            if ky > z || z > a_y[i] {
                let ineq = if ky > z {
                    Inequality::ints("k_y <= |Z_y|", ky, Relation::Le, z)
                } else {
                    Inequality::ints("|Z_y| <= a_y", z, Relation::Le, a_y[i])
                };
                return Ok(Err(StageFailure::new(Stage::Expansion, ineq, "fiber budget violated", "use a larger input")));
            }
        }
        trace.expansion = Some(ExpansionRecord { cover: cover.clone(), k_y: k_y.clone(), rethins });

        // (7) A_y: smallest points of X_y \ Z_y, a_y − k_y of them
        let t0 = Instant::now();
        let mut a_sets = Vec::new();
        for (i, pts) in fiber_pts.iter().enumerate() {
            let z: std::collections::BTreeSet<usize> = thin.chosen[i].iter().copied().collect();
            let free: Vec<&GroupElement> = pts.iter().enumerate().filter(|(j, _)| !z.contains(j)).map(|(_, x)| x).collect();
            let need = a_y[i] - k_y[i];
            if (free.len() as u64) < need {
                return Ok(Err(StageFailure::new(
                    Stage::Selection,
                    Inequality::ints("|X_y \\ Z_y| >= a_y - k_y", free.len() as u64, Relation::Ge, need),
                    "not enough points outside Z_y",
                    "use a larger input",
                )));
            }
            a_sets.push(free[..need as usize].iter().map(|&x| x.clone()).collect::<Vec<_>>());
        }
        let u = params.sum(a_sets.iter().flatten().map(|x| phi(x)).collect::<Vec<_>>().iter());
        let (u1, u2) = (u.head(l), u.tail(l));
        if let Some(lp) = &lparams {
            let expect = lp.sub(&lp.neg(&cover.u0), &lp.scale(&v.head(l), k));
            if u1 != expect {
                return Err(Error::Internal("u_1 != -u_0 - k v".into()));
            }
        }
        trace.time(Stage::Selection, t0);

        // (8) cover selection at the complementary tail
        let t0 = Instant::now();
        let tail = GroupParams { p, d: d - l };
        let target = if d > l { tail.sub(&tail.neg(&u2), &tail.scale(&v.tail(l), k)) } else { GroupElement(vec![]) };
        let chosen = cover.select(&target).ok_or_else(|| Error::Internal("cover misses a target".into()))?;
        let back: HashMap<GroupElement, GroupElement> =
            psi_pts.iter().flatten().cloned().zip(fiber_pts.iter().flatten().cloned()).collect();
        let mut s_sets: Vec<Vec<GroupElement>> = vec![Vec::new(); labels.len()];
        let mut sel_sum = params.zero();
        for e in &chosen {
            sel_sum = params.add(&sel_sum, e);
            let orig = back.get(e).ok_or_else(|| Error::Internal("selected point has no preimage".into()))?;
            let fi = labels.iter().position(|y| *y == phi(orig).head(l)).expect("point lies in a fiber");
            s_sets[fi].push(orig.clone());
        }
        let mut want = cover.u0.0.clone();
        want.extend(&target.0);
        if sel_sum.0 != want {
            return Err(Error::Internal("selection sum != (u_0, target)".into()));
        }
        trace.selection = Some(SelectionRecord { a_sets: a_sets.clone(), u, target, s_sets: s_sets.clone() });
        trace.time(Stage::Target, t0);

        // (9) B = ∪ (A_y ∪ S_y)
        let t0 = Instant::now();
        let b: Vec<GroupElement> = a_sets.into_iter().flatten().chain(s_sets.into_iter().flatten()).collect();
        let certificate = ZeroSumCertificate::new(params, b);
        let distinct = GroupMultiset::from_elements(certificate.elements.iter().cloned()).is_set();
        if !distinct || !verify_certificate(params, self.x, &certificate) {
            return Err(Error::Internal("assembled B failed verification".into()));
        }
        trace.time(Stage::Assembly, t0);
        Ok(Ok(certificate))
    }
}

/// Runs the staged search on a set X.
pub fn find_zero_sum(params: &GroupParams, x: &GroupMultiset, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !x.is_set() {
        return Err(Error::Precondition("input must be a set".into()));
    }
    for (e, _) in x.iter() {
        params.check(e)?;
    }
    let mut trace = PipelineTrace::new(params, x, config);
    let zero = params.zero();
    if x.contains(&zero) {
        let cert = ZeroSumCertificate::new(params, vec![zero]);
        trace.short_circuit = true;
        trace.certificate = Some(cert.clone());
        return Ok(PipelineRun { certificate: Some(cert), failure: None, trace });
    }
    if config.prepass {
        trace.prepass = true;
        match find_zero_sum_subset(params, x) {
            Ok(Some(cert)) => {
                trace.certificate = Some(cert.clone());
                return Ok(PipelineRun { certificate: Some(cert), failure: None, trace });
            }
            Ok(None) => {
                let failure = StageFailure::new(
                    Stage::ShortCircuit,
                    Inequality::ints("nonempty zero-sum subsets found by the oracle", 0, Relation::Ge, 1),
                    "the input is zero-sum free",
                    "none: no certificate exists",
                );
                trace.failure = Some(failure.clone());
                return Ok(PipelineRun { certificate: None, failure: Some(failure), trace });
            }
            Err(Error::StateBudget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let growths: Vec<GrowthFunction> = std::iter::once(config.growth.clone()).chain(config.escalation_growth.clone()).collect();
    let mut failure = None;
    for (restart, growth) in growths.iter().enumerate() {
        trace.reset_attempt();
        trace.restarts = restart as u32;
        trace.growth = growth.clone();
        let attempt = Attempt { params, x, config, growth: growth.clone(), seed: config.seed.wrapping_add(restart as u64 * 7919) };
        match attempt.run(&mut trace)? {
            Ok(cert) => {
                trace.certificate = Some(cert.clone());
                return Ok(PipelineRun { certificate: Some(cert), failure: None, trace });
            }
            Err(f) => {
                let retry = f.stage == Stage::Expansion && restart + 1 < growths.len();
                failure = Some(f);
                if !retry {
                    break;
                }
            }
        }
    }
    let failure = failure.expect("at least one attempt ran");
    if !failure.is_honest() {
        return Err(Error::Internal(format!("stage failure with a satisfied inequality: {failure:?}")));
    }
    trace.failure = Some(failure.clone());
    Ok(PipelineRun { certificate: None, failure: Some(failure), trace })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub name: String,
    pub pass: bool,
}

fn check(out: &mut Vec<TraceCheck>, name: &str, pass: bool) {
    out.push(TraceCheck { name: name.into(), pass });
}

/// Re-checks every identity recorded in a trace against the input.
pub fn verify_trace(params: &GroupParams, x: &GroupMultiset, trace: &PipelineTrace) -> Vec<TraceCheck> {
    let mut out = Vec::new();
    let p = params.p;
    check(&mut out, "schema_version", trace.schema_version == TRACE_SCHEMA_VERSION);
    check(&mut out, "group", trace.p == params.p && trace.d == params.d);
    check(&mut out, "outcome_present", trace.certificate.is_some() != trace.failure.is_some());
    if let Some(cert) = &trace.certificate {
        check(&mut out, "certificate", verify_certificate(params, x, cert));
    }
    if let Some(f) = &trace.failure {
        check(&mut out, "failure_inequality_violated", f.is_honest());
    }
    if let Some(sd) = &trace.decomposition {
        check(&mut out, "strong_decomposition", sd.recheck(params, x).ok());
    }
    if let (Some(sd), Some(h)) = (&trace.decomposition, &trace.hyperplane) {
        let ok = h.points.len() == sd.parts().len()
            && sd.parts().iter().zip(&h.points).all(|(part, xi)| {
                affine_hull(params, part).map(|hull| hull.contains(params, xi)).unwrap_or(false)
                    && h.normal.eval(params, xi).map(|v| v == 0).unwrap_or(false)
            });
        check(&mut out, "hyperplane_points", ok);
    }
    if let Some(w) = &trace.weighted {
        check(&mut out, "weighted_solution", verify_coefficients(&w.instance, &w.solution));
        let sum = w.instance.points.iter().zip(&w.solution.a).fold(params.zero(), |acc, (xi, &a)| params.add(&acc, &params.scale(xi, a)));
        check(&mut out, "sum_a_i_x_i", sum.is_zero());
    }
    let (Some(proj), Some(thin), Some(exp), Some(sel)) = (&trace.projection, &trace.thinning, &trace.expansion, &trace.selection) else {
        return out;
    };
    let l = proj.l;
    let phi = |x: &GroupElement| proj.psi.apply_linear(params, x);
    if l > 0 {
        let lp = GroupParams { p, d: l };
        let ys = proj.fibers.iter().fold(lp.zero(), |acc, f| lp.add(&acc, &lp.scale(&f.y, f.a_y)));
        check(&mut out, "sum_a_y_y", ys.is_zero());
        let k_sum = proj.fibers.iter().zip(&exp.k_y).fold(lp.zero(), |acc, (f, &ky)| lp.add(&acc, &lp.scale(&lp.sub(&f.y, &proj.v.head(l)), ky)));
        check(&mut out, "sum_k_y_labels", k_sum == exp.cover.u0);
        let u1 = sel.u.head(l);
        let expect = lp.sub(&lp.neg(&exp.cover.u0), &lp.scale(&proj.v.head(l), exp.cover.k));
        check(&mut out, "u1_identity", u1 == expect);
    }
    check(&mut out, "sum_k_y", exp.k_y.iter().sum::<u64>() == exp.cover.k);
    let fibers: Vec<Fiber> = proj
        .fibers
        .iter()
        .zip(&thin.z)
        .map(|(f, z)| Fiber {
            label: if l > 0 { GroupParams { p, d: l }.sub(&f.y, &proj.v.head(l)) } else { GroupElement(vec![]) },
            elements: GroupMultiset::from_elements(z.iter().map(|x| proj.psi.apply(params, x))),
        })
        .collect();
    check(&mut out, "expansion_cover", verify_cover(&exp.cover, &fibers).map(|c| c.ok()).unwrap_or(false));
    let u = params.sum(sel.a_sets.iter().flatten().map(|x| phi(x)).collect::<Vec<_>>().iter());
    check(&mut out, "u", u == sel.u);
    let s_sum = params.sum(sel.s_sets.iter().flatten().map(|x| proj.psi.apply(params, x)).collect::<Vec<_>>().iter());
    let mut want = exp.cover.u0.0.clone();
    want.extend(&sel.target.0);
    check(&mut out, "selection_sum", s_sum.0 == want);
    let sizes_ok = proj.fibers.iter().enumerate().all(|(i, f)| {
        sel.a_sets[i].len() as u64 + exp.k_y[i] == f.a_y && thin.z[i].len() as u64 <= f.a_y && exp.k_y[i] <= thin.z[i].len() as u64
    });
    check(&mut out, "cardinality_ledger", sizes_ok);
    out
}
