//! Thickness along linear functionals and the three decomposition
//! procedures built on it: single-tube reduction, recursive decomposition
//! into hull-thick parts, and the strong decomposition in which every union
//! of parts carries a tubular certificate.
//!
//! Thickness scans run over every nonzero linear part (not only canonical
//! ones) so that "thick along every functional non-constant on a subspace"
//! is decided exactly. Candidates are visited canonical-first, then
//! lexicographically; among functionals with the same in-slab count the
//! first visited wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::group::{
    affine_hull, linear_parts_scan_order, AffineHull, AffineIso, GroupElement, GroupMultiset, GroupParams,
    LinearFunctional, SymmetricInterval,
};
use crate::linalg;

/// Strictly increasing g: N -> N with g(K) > K, evaluated with saturation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthFunction {
    /// c·K + c0
    Affine { c: u64, c0: u64 },
    /// (K + shift)^exp
    Polynomial { shift: u64, exp: u32 },
    /// base^K
    Exponential { base: u64 },
    /// inner applied `times` times
    Iterated { inner: Box<GrowthFunction>, times: u32 },
}

impl Default for GrowthFunction {
    fn default() -> GrowthFunction {
        GrowthFunction::Affine { c: 4, c0: 4 }
    }
}

impl GrowthFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            GrowthFunction::Affine { c, c0 } => *c >= 1 && *c0 >= 1,
            GrowthFunction::Polynomial { shift, exp } => *shift >= 1 && *exp >= 1 && (*exp > 1 || *shift >= 1),
            GrowthFunction::Exponential { base } => *base >= 2,
            GrowthFunction::Iterated { inner, times } => return if *times >= 1 { inner.validate() } else { Err(Error::Precondition("g^0 is not growing".into())) },
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("growth function {self:?} is not strictly increasing with g(K) > K")))
        }
    }

    pub fn apply(&self, k: u64) -> u64 {
        match self {
            GrowthFunction::Affine { c, c0 } => c.saturating_mul(k).saturating_add(*c0),
            GrowthFunction::Polynomial { shift, exp } => k.saturating_add(*shift).saturating_pow(*exp),
            GrowthFunction::Exponential { base } => base.saturating_pow(k.min(u32::MAX as u64) as u32),
            GrowthFunction::Iterated { inner, times } => inner.iterate(k, *times),
        }
    }

    /// g^i(k), with g^0(k) = k.
    pub fn iterate(&self, k: u64, i: u32) -> u64 {
        (0..i).fold(k, |acc, _| self.apply(acc))
    }

    pub fn power(&self, times: u32) -> GrowthFunction {
        GrowthFunction::Iterated { inner: Box::new(self.clone()), times }
    }
}

fn interval(p: u32, k: u64) -> SymmetricInterval {
    SymmetricInterval::new(k.min(p as u64) as u32)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThicknessParams {
    pub k: u64,
    pub delta: Frac,
}

/// Per-value counts of <linear, x> over the multiset.
fn histogram(p: u32, items: &[(GroupElement, u64)], linear: &[u32]) -> Vec<u64> {
    let mut h = vec![0u64; p as usize];
    for (x, m) in items {
        h[linalg::dot(linear, &x.0, p) as usize] += m;
    }
    h
}

/// Best constant term for a slab of radius `k`: returns (in-count, a0),
/// smallest a0 on ties.
fn best_window(hist: &[u64], k: SymmetricInterval) -> (u64, u32) {
    let p = hist.len();
    if k.is_everything(p as u32) {
        return (hist.iter().sum(), 0);
    }
    let k = k.k as usize;
    // value v is inside iff a0 + v ∈ [-k, k]; window of values centred at c = -a0
    let window_at = |c: usize| -> u64 { (0..=2 * k).map(|t| hist[(c + p - k + t) % p]).sum() };
    let mut sums = vec![0u64; p];
    sums[0] = window_at(0);
    for c in 1..p {
        let leaving = hist[(c - 1 + p - k) % p];
        let entering = hist[(c + k) % p];
        sums[c] = sums[c - 1] - leaving + entering;
    }
    let mut best = (0u64, 0u32);
    let mut first = true;
    for a0 in 0..p {
        let c = (p - a0) % p;
        if first || sums[c] > best.0 {
            best = (sums[c], a0 as u32);
            first = false;
        }
    }
    best
}

/// Outcome of an exhaustive scan: the admissible functional with the most
/// elements inside its slab.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub total: u64,
    pub scanned: usize,
    /// `None` when no functional passed the filter (vacuously thick).
    pub worst: Option<LinearFunctional>,
    pub worst_inside: u64,
}

impl ScanResult {
    pub fn worst_outside(&self) -> u64 {
        match self.worst {
            Some(_) => self.total - self.worst_inside,
            None => self.total,
        }
    }

    /// Thick along every scanned functional.
    pub fn is_thick(&self, delta: &Frac) -> bool {
        self.worst.is_none() || delta.count_at_least(self.worst_outside(), self.total)
    }

    /// Smallest outside fraction seen (1 when nothing was scanned).
    pub fn achieved_delta(&self) -> Frac {
        if self.total == 0 || self.worst.is_none() {
            return Frac::one();
        }
        Frac::new(self.worst_outside() as i64, self.total as i64)
    }
}

/// Scans every nonzero linear part accepted by `admit`.
pub fn scan_functionals<F>(params: &GroupParams, x: &GroupMultiset, k: u64, admit: F) -> ScanResult
where
    F: Fn(&[u32]) -> bool + Sync,
{
    let items: Vec<(GroupElement, u64)> = x.iter().map(|(e, m)| (e.clone(), m)).collect();
    let parts: Vec<Vec<u32>> = linear_parts_scan_order(params).into_iter().filter(|l| admit(l)).collect();
    let iv = interval(params.p, k);
    let best = parts
        .par_iter()
        .enumerate()
        .map(|(i, lin)| {
            let (inside, a0) = best_window(&histogram(params.p, &items, lin), iv);
            (inside, i, a0)
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    match best {
        Some((inside, i, a0)) => ScanResult {
            total: x.len(),
            scanned: parts.len(),
            worst: Some(LinearFunctional::new(a0, parts[i].clone())),
            worst_inside: inside,
        },
        None => ScanResult { total: x.len(), scanned: 0, worst: None, worst_inside: 0 },
    }
}

/// Number of elements (with multiplicity) outside H(xi, K).
pub fn outside_count(params: &GroupParams, x: &GroupMultiset, xi: &LinearFunctional, k: u64) -> Result<u64> {
    let iv = interval(params.p, k);
    let mut out = 0;
    for (e, m) in x.iter() {
        if !iv.contains(xi.eval(params, e)?, params.p) {
            out += m;
        }
    }
    Ok(out)
}

/// (K, δ)-thickness along one functional: (thick?, outside count).
pub fn is_thick(params: &GroupParams, x: &GroupMultiset, xi: &LinearFunctional, tp: &ThicknessParams) -> Result<(bool, u64)> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if xi.is_constant() {
        return Err(Error::ConstantFunctional);
    }
    let out = outside_count(params, x, xi, tp.k)?;
    Ok((tp.delta.count_at_least(out, x.len()), out))
}

/// Thickness along every functional non-constant on the affine hull of `x`.
pub fn scan_in_hull(params: &GroupParams, x: &GroupMultiset, k: u64) -> Result<(AffineHull, ScanResult)> {
    let hull = affine_hull(params, x)?;
    let scan = scan_functionals(params, x, k, |l| hull.is_nonconstant(params.p, l));
    Ok((hull, scan))
}

/// A functional, independent of `excluded_span`, along which `x` is
/// (K, δ)-thin; the one with the largest in-slab count is returned.
pub fn find_thin_functional(
    params: &GroupParams,
    x: &GroupMultiset,
    k: u64,
    delta: &Frac,
    excluded_span: &[Vec<u32>],
) -> Option<LinearFunctional> {
    if x.is_empty() {
        return None;
    }
    let mut basis = excluded_span.to_vec();
    let pivots = linalg::rref(&mut basis, params.p);
    let scan = scan_functionals(params, x, k, |l| !linalg::in_span(l, &basis, &pivots, params.p));
    if scan.is_thick(delta) {
        None
    } else {
        scan.worst
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TubularCertificate {
    pub l: usize,
    pub psi: AffineIso,
    /// Box radius K.
    pub k: u64,
    /// Thickness radius K'.
    pub k_prime: u64,
    pub delta: Frac,
    pub functionals: Vec<LinearFunctional>,
    /// Minimum outside fraction measured when the certificate was issued.
    pub achieved_delta: Frac,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TubularCheck {
    pub psi_valid: bool,
    pub in_box: bool,
    pub thick: bool,
    pub worst: Option<LinearFunctional>,
    pub achieved_delta: Frac,
}

impl TubularCheck {
    pub fn ok(&self) -> bool {
        self.psi_valid && self.in_box && self.thick
    }
}

impl TubularCertificate {
    /// Re-validates against `x` by exhaustive scan in ψ-coordinates.
    pub fn check(&self, params: &GroupParams, x: &GroupMultiset) -> TubularCheck {
        let psi_valid = self.psi.validate(params).is_ok() && self.l <= params.d;
        if !psi_valid || x.is_empty() {
            return TubularCheck { psi_valid, in_box: false, thick: false, worst: None, achieved_delta: Frac::zero() };
        }
        let iv = interval(params.p, self.k);
        let mut image = GroupMultiset::new();
        for (e, m) in x.iter() {
            image.insert(self.psi.apply(params, e), m);
        }
        let in_box = image.iter().all(|(e, _)| e.0[..self.l].iter().all(|&c| iv.contains(c, params.p)));
        let l = self.l;
        let scan = scan_functionals(params, &image, self.k_prime, |lin| lin[l..].iter().any(|&a| a != 0));
        TubularCheck {
            psi_valid,
            in_box,
            thick: scan.is_thick(&self.delta),
            worst: scan.worst.clone(),
            achieved_delta: scan.achieved_delta(),
        }
    }
}

/// Greedy tube reduction: pick independent functionals ξ_1, ξ_2, … with
/// `x` (g^i(K0), 2^i δ)-thin along ξ_i, then keep the points inside every
/// H(ξ_i, K) with K = g^l(K0).
pub fn tube_decompose(
    params: &GroupParams,
    x: &GroupMultiset,
    k0: u64,
    delta: &Frac,
    g: &GrowthFunction,
) -> Result<(GroupMultiset, TubularCertificate)> {
    g.validate()?;
    if !(delta.is_positive() && *delta < Frac::pow2_neg(params.d as u32 + 1)) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, 2^-(d+1))")));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut functionals: Vec<LinearFunctional> = Vec::new();
    for i in 1..=params.d as u32 {
        let ki = g.iterate(k0, i);
        let di = delta * &Frac::from_int(1u64 << i);
        let span: Vec<Vec<u32>> = functionals.iter().map(|f| f.linear.clone()).collect();
        match find_thin_functional(params, x, ki, &di, &span) {
            Some(f) => functionals.push(f),
            None => break,
        }
    }
    let l = functionals.len();
    let k = g.iterate(k0, l as u32);
    let iv = interval(params.p, k);
    let y = x.filter(|e| functionals.iter().all(|f| iv.contains(f.eval_unchecked(params.p, e), params.p)));
    let rows: Vec<Vec<u32>> = functionals.iter().map(|f| f.linear.clone()).collect();
    let mut matrix = rows.clone();
    matrix.extend(linalg::complete_basis(&rows, params.d, params.p));
    let mut shift = params.zero();
    for (i, f) in functionals.iter().enumerate() {
        shift.0[i] = f.a0;
    }
    let psi = AffineIso::new(params, matrix, shift)?;
    let mut cert = TubularCertificate {
        l,
        psi,
        k,
        k_prime: g.apply(k),
        delta: delta.clone(),
        functionals,
        achieved_delta: Frac::zero(),
    };
    if !y.is_empty() {
        cert.achieved_delta = cert.check(params, &y).achieved_delta;
    }
    Ok((y, cert))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub parts: Vec<GroupMultiset>,
    pub hulls: Vec<AffineHull>,
    pub x0: GroupMultiset,
    /// Growth iterations used; K = g^l(K0).
    pub l: u32,
    pub k0: u64,
    pub k: u64,
    /// Radius g(K) at which every part is thick in its hull.
    pub radius: u64,
    pub epsilon: Frac,
    /// Achieved: min over parts of the outside fraction in the hull scan.
    pub delta: Frac,
    /// Achieved: min over parts of |X_i| / |X|.
    pub mu: Frac,
    pub total: u64,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub partition: bool,
    pub x0_small: bool,
    pub parts_large: bool,
    pub parts_thick: bool,
    pub hulls_match: bool,
}

impl DecompositionCheck {
    pub fn ok(&self) -> bool {
        self.partition && self.x0_small && self.parts_large && self.parts_thick && self.hulls_match
    }
}

impl Decomposition {
    pub fn m(&self) -> usize {
        self.parts.len()
    }

    pub fn check(&self, params: &GroupParams, x: &GroupMultiset) -> DecompositionCheck {
        let mut union = self.x0.clone();
        for part in &self.parts {
            union = union.union(part);
        }
        let total = x.len();
        let parts_thick = self.delta.is_positive()
            && self.parts.iter().all(|part| match scan_in_hull(params, part, self.radius) {
                Ok((_, scan)) => scan.is_thick(&self.delta),
                Err(_) => false,
            });
        let hulls_match = self.hulls.len() == self.parts.len()
            && self.parts.iter().zip(&self.hulls).all(|(part, h)| affine_hull(params, part).ok().as_ref() == Some(h));
        DecompositionCheck {
            partition: union == *x,
            x0_small: Frac::from_int(self.x0.len()) <= self.epsilon.mul_int(total),
            parts_large: self.parts.iter().all(|part| self.mu.mul_int(total) <= Frac::from_int(part.len())),
            parts_thick,
            hulls_match,
        }
    }
}

struct DecomposeCtx<'a> {
    params: &'a GroupParams,
    radius: u64,
    parts: Vec<GroupMultiset>,
    x0: GroupMultiset,
    depth: usize,
}

impl DecomposeCtx<'_> {
    fn rec(&mut self, x: GroupMultiset, eps: Frac, depth: usize) -> Result<()> {
        if depth > self.params.d {
            return Err(Error::RecursionDepth(depth));
        }
        self.depth = self.depth.max(depth);
        let (hull, scan) = scan_in_hull(self.params, &x, self.radius)?;
        if hull.dim() == 0 || scan.is_thick(&eps.div_int(2)) {
            self.parts.push(x);
            return Ok(());
        }
        let xi = scan.worst.expect("thin scan names a functional");
        let p = self.params.p;
        let iv = interval(p, self.radius);
        let r = self.radius.max(1);
        let threshold = eps.mul_int(x.len()).div_int(8 * r);
        let mut fibers: std::collections::BTreeMap<i64, GroupMultiset> = Default::default();
        for (e, m) in x.iter() {
            let v = xi.eval_unchecked(p, e);
            if iv.contains(v, p) {
                fibers.entry(self.params.lift_signed(v)).or_default().insert(e.clone(), m);
            } else {
                self.x0.insert(e.clone(), m);
            }
        }
        let next_eps = eps.div_int(8 * r);
        for (_, fiber) in fibers {
            if Frac::from_int(fiber.len()) < threshold {
                self.x0 = self.x0.union(&fiber);
            } else {
                self.rec(fiber, next_eps.clone(), depth + 1)?;
            }
        }
        Ok(())
    }
}

/// Recursive decomposition into hull-thick parts.
///
/// A set that is (g(K), ε/2)-thick in its hull is returned whole. Otherwise
/// the thin functional with the largest slab count slices it into fibers
/// over [-g(K), g(K)]; points off the slab and fibers smaller than
/// ε|X|/(8 g(K)) go to X_0, and each remaining fiber is decomposed with
/// ε' = ε/(8 g(K)). The slab radius g(K) is the same at every level, so
/// l = 0 and K = K0.
pub fn decompose(params: &GroupParams, x: &GroupMultiset, k0: u64, epsilon: &Frac, g: &GrowthFunction) -> Result<Decomposition> {
    g.validate()?;
    if !(epsilon.is_positive() && *epsilon < Frac::one()) {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let radius = g.apply(k0);
    let mut ctx = DecomposeCtx { params, radius, parts: Vec::new(), x0: GroupMultiset::new(), depth: 0 };
    ctx.rec(x.clone(), epsilon.clone(), 0)?;
    let total = x.len();
    let mut delta = Frac::one();
    let mut hulls = Vec::new();
    for part in &ctx.parts {
        let (hull, scan) = scan_in_hull(params, part, radius)?;
        delta = delta.min(scan.achieved_delta());
        hulls.push(hull);
    }
    let mu = ctx
        .parts
        .iter()
        .map(|part| Frac::new(part.len() as i64, total as i64))
        .min()
        .unwrap_or_else(Frac::zero);
    Ok(Decomposition {
        parts: ctx.parts,
        hulls,
        x0: ctx.x0,
        l: 0,
        k0,
        k: k0,
        radius,
        epsilon: epsilon.clone(),
        delta,
        mu,
        total,
        depth: ctx.depth,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCertificate {
    pub j: u64,
    /// 0-based part indices.
    pub members: Vec<usize>,
    pub delta_j: Frac,
    /// K_S = g^s(K).
    pub s: usize,
    pub removed: u64,
    pub certificate: TubularCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongChecks {
    pub removal_bound: bool,
    pub parts_thick: bool,
    pub unions_tubular: bool,
}

impl StrongChecks {
    pub fn ok(&self) -> bool {
        self.removal_bound && self.parts_thick && self.unions_tubular
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongDecomposition {
    /// Decomposition run with g^{d+1} and ε/2, parts after the sweep removals.
    pub base: Decomposition,
    pub epsilon: Frac,
    pub growth: GrowthFunction,
    pub delta0: Frac,
    pub mu0: Frac,
    pub subsets: Vec<SubsetCertificate>,
    pub removed_total: u64,
    /// Final exceptional set: decomposition X_0 plus sweep removals.
    pub x0: GroupMultiset,
    pub checks: StrongChecks,
}

impl StrongDecomposition {
    pub fn parts(&self) -> &[GroupMultiset] {
        &self.base.parts
    }

    pub fn union_of(&self, members: &[usize]) -> GroupMultiset {
        members.iter().fold(GroupMultiset::new(), |acc, &i| acc.union(&self.base.parts[i]))
    }

    pub fn certificate_for(&self, members: &[usize]) -> Option<&SubsetCertificate> {
        self.subsets.iter().find(|s| s.members == members)
    }

    /// Recomputes the three sweep properties from the stored parts.
    pub fn recheck(&self, params: &GroupParams, x: &GroupMultiset) -> StrongChecks {
        let total = x.len();
        let removal_bound = Frac::from_int(self.removed_total).mul_int(2) < self.epsilon.mul_int(total);
        let half = self.delta0.div_int(2);
        let parts_thick = self.base.parts.iter().all(|part| match scan_in_hull(params, part, self.base.radius) {
            Ok((_, scan)) => scan.is_thick(&half),
            Err(_) => false,
        });
        let unions_tubular = self.subsets.iter().all(|s| {
            let union = self.union_of(&s.members);
            s.certificate.check(params, &union).ok()
        });
        StrongChecks { removal_bound, parts_thick, unions_tubular }
    }
}

pub const DEFAULT_MAX_PARTS: usize = 8;

/// δ_j = ε μ0 δ0 2^{-d-2-m} 2^{-(d+m+4) j}
pub fn sweep_delta(epsilon: &Frac, mu0: &Frac, delta0: &Frac, d: usize, m: usize, j: u64) -> Frac {
    let e = (d + 2 + m) as u64 + (d + m + 4) as u64 * j;
    &(&(epsilon * mu0) * delta0) * &Frac::pow2_neg(e as u32)
}

pub fn strong_decompose(
    params: &GroupParams,
    x: &GroupMultiset,
    k0: u64,
    epsilon: &Frac,
    g: &GrowthFunction,
    max_parts: usize,
) -> Result<StrongDecomposition> {
    let d = params.d;
    let g_prime = g.power(d as u32 + 1);
    let mut base = decompose(params, x, k0, &epsilon.div_int(2), &g_prime)?;
    let m = base.m();
    if m > max_parts {
        return Err(Error::SweepTooLarge { m, cap: max_parts });
    }
    let delta0 = base.delta.clone();
    let mu0 = base.mu.clone();
    let k = base.k;
    let mut parts = base.parts.clone();
    let mut subsets = Vec::new();
    let mut removed_all = GroupMultiset::new();
    for j in 1..(1u64 << m) {
        let members: Vec<usize> = (0..m).filter(|i| j >> i & 1 == 1).collect();
        let union = members.iter().fold(GroupMultiset::new(), |acc, &i| acc.union(&parts[i]));
        let delta_j = sweep_delta(epsilon, &mu0, &delta0, d, m, j);
        let (y, cert) = tube_decompose(params, &union, k, &delta_j, g)?;
        let removed = union.difference(&y);
        for (e, mult) in removed.iter() {
            for _ in 0..mult {
                let owner = members.iter().copied().find(|&i| parts[i].contains(e)).expect("removed element has an owner");
                parts[owner].remove_one(e);
            }
        }
        removed_all = removed_all.union(&removed);
        subsets.push(SubsetCertificate {
            j,
            members,
            delta_j: delta_j.clone(),
            s: cert.l,
            removed: removed.len(),
            certificate: TubularCertificate { delta: delta_j.div_int(2), ..cert },
        });
    }
    if parts.iter().any(GroupMultiset::is_empty) {
        return Err(Error::Precondition("a part was emptied by the tube sweep".into()));
    }
    base.hulls = parts.iter().map(|part| affine_hull(params, part)).collect::<Result<_>>()?;
    base.parts = parts;
    let x0 = base.x0.union(&removed_all);
    let mut sd = StrongDecomposition {
        base,
        epsilon: epsilon.clone(),
        growth: g.clone(),
        delta0,
        mu0,
        subsets,
        removed_total: removed_all.len(),
        x0,
        checks: StrongChecks { removal_bound: false, parts_thick: false, unions_tubular: false },
    };
    for s in sd.subsets.iter_mut() {
        let union = s.members.iter().fold(GroupMultiset::new(), |acc, &i| acc.union(&sd.base.parts[i]));
        s.certificate.achieved_delta = s.certificate.check(params, &union).achieved_delta;
    }
    sd.checks = sd.recheck(params, x);
    Ok(sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(p: u32, d: usize) -> GroupParams {
        GroupParams::new(p, d).unwrap()
    }

    fn set(params: &GroupParams, pts: impl IntoIterator<Item = Vec<i64>>) -> GroupMultiset {
        GroupMultiset::from_elements(pts.into_iter().map(|c| params.element(&c).unwrap()))
    }

    #[test]
    fn growth_functions() {
        let g = GrowthFunction::default();
        assert_eq!(g.apply(0), 4);
        assert_eq!(g.iterate(0, 2), 20);
        assert_eq!(g.power(3).apply(0), 84);
        assert_eq!(GrowthFunction::Polynomial { shift: 2, exp: 2 }.apply(1), 9);
        assert_eq!(GrowthFunction::Exponential { base: 2 }.apply(5), 32);
        assert!(GrowthFunction::Affine { c: 1, c0: 0 }.validate().is_err());
        assert!(GrowthFunction::Exponential { base: 1 }.validate().is_err());
    }

    #[test]
    fn window_picks_best_constant() {
        let hist = vec![0, 5, 0, 0, 0, 0, 3];
        // slab radius 1 centred at value 0 covers {6, 0, 1}: a0 = 0
        assert_eq!(best_window(&hist, SymmetricInterval::new(1)), (8, 0));
        assert_eq!(best_window(&hist, SymmetricInterval::new(0)), (5, 6));
        assert_eq!(best_window(&hist, SymmetricInterval::new(3)).0, 8);
    }

    #[test]
    fn thick_examples() {
        let g = gp(7, 1);
        let line = set(&g, (0..7).map(|t| vec![t]));
        let xi = LinearFunctional::coordinate(&g, 0);
        let (thick, out) = is_thick(&g, &line, &xi, &ThicknessParams { k: 1, delta: Frac::new(1, 2) }).unwrap();
        assert!(thick);
        assert_eq!(out, 4);
        let inside = set(&g, [vec![0], vec![1], vec![6]]);
        let (thick, out) = is_thick(&g, &inside, &xi, &ThicknessParams { k: 1, delta: Frac::new(1, 1000) }).unwrap();
        assert!(!thick);
        assert_eq!(out, 0);
        let constant = LinearFunctional::new(3, vec![0]);
        assert!(matches!(
            is_thick(&g, &line, &constant, &ThicknessParams { k: 1, delta: Frac::new(1, 2) }),
            Err(Error::ConstantFunctional)
        ));
    }

    #[test]
    fn thin_functional_examples() {
        let g = gp(11, 2);
        let boxed = set(&g, (-1..=1).flat_map(|a| (-1..=1).map(move |b| vec![a, b])));
        let f = find_thin_functional(&g, &boxed, 1, &Frac::new(1, 10), &[]).unwrap();
        assert_eq!(f, LinearFunctional::new(0, vec![0, 1]));
        let f = find_thin_functional(&g, &boxed, 1, &Frac::new(1, 10), &[vec![0, 1]]).unwrap();
        assert_eq!(f, LinearFunctional::new(0, vec![1, 0]));
        let g1 = gp(11, 1);
        let full = set(&g1, (0..11).map(|t| vec![t]));
        assert!(find_thin_functional(&g1, &full, 2, &Frac::new(6, 11), &[]).is_none());
    }

    #[test]
    fn tube_examples() {
        let g = gp(11, 2);
        let gf = GrowthFunction::default();
        let boxed = set(&g, (-1..=1).flat_map(|a| (-1..=1).map(move |b| vec![a, b])));
        let (y, cert) = tube_decompose(&g, &boxed, 1, &Frac::new(1, 100), &gf).unwrap();
        assert_eq!(cert.l, 2);
        assert_eq!(y, boxed);
        assert!(cert.check(&g, &y).ok());

        let g1 = gp(11, 1);
        let full = set(&g1, (0..11).map(|t| vec![t]));
        let (y, cert) = tube_decompose(&g1, &full, 0, &Frac::new(1, 100), &gf).unwrap();
        assert_eq!((cert.l, y.len()), (0, 11));
        assert!(cert.check(&g1, &y).ok());

        let strip = set(&g, (-1..=1).flat_map(|a| (0..11).map(move |b| vec![a, b])));
        let (y, cert) = tube_decompose(&g, &strip, 0, &Frac::new(1, 100), &GrowthFunction::Affine { c: 1, c0: 1 }).unwrap();
        assert_eq!(cert.l, 1);
        assert_eq!(y, strip);
        assert_eq!(cert.functionals[0].linear, vec![1, 0]);
        assert!(cert.check(&g, &y).ok());
        assert!(tube_decompose(&g, &strip, 0, &Frac::new(1, 8), &gf).is_err());
    }

    #[test]
    fn decompose_thick_set_is_single_part() {
        let g = gp(31, 2);
        let plane = set(&g, (0..31).flat_map(|a| (0..31).map(move |b| vec![a, b])));
        let dec = decompose(&g, &plane, 0, &Frac::new(1, 4), &GrowthFunction::default()).unwrap();
        assert_eq!(dec.m(), 1);
        assert!(dec.x0.is_empty());
        assert!(dec.check(&g, &plane).ok());
    }

    #[test]
    fn decompose_parallel_lines() {
        let g = gp(31, 2);
        let lines = set(&g, [0i64, 1].into_iter().flat_map(|a| (0..31).map(move |b| vec![a, b])));
        let dec = decompose(&g, &lines, 0, &Frac::new(1, 4), &GrowthFunction::Affine { c: 1, c0: 1 }).unwrap();
        assert_eq!(dec.m(), 2);
        assert!(dec.hulls.iter().all(|h| h.dim() == 1));
        assert!(dec.check(&g, &lines).ok());
    }

    #[test]
    fn strong_decompose_parallel_lines() {
        let g = gp(31, 2);
        let lines = set(&g, [0i64, 1].into_iter().flat_map(|a| (0..31).map(move |b| vec![a, b])));
        let sd = strong_decompose(&g, &lines, 0, &Frac::new(1, 4), &GrowthFunction::Affine { c: 1, c0: 1 }, 8).unwrap();
        assert_eq!(sd.parts().len(), 2);
        assert_eq!(sd.subsets.len(), 3);
        assert!(sd.checks.ok());
        assert!(sd.subsets.iter().all(|s| s.certificate.l == 1));
    }
}
