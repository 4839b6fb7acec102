//! Exact ground truth: nonempty subset sums, zero-sum witnesses, largest
//! zero-sum-free sets and Olson constants for small groups.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupMultiset, GroupParams};
use crate::stateset::StateSet;

/// Past this many states the per-state round index is not stored and
/// witnesses are recovered by recomputing prefix tables.
pub const WITNESS_MEMORY_CAP: u64 = 1 << 26;

const UNREACHED: u32 = u32::MAX;

/// Σ*(A) as a bit table over F_p^d.
#[derive(Clone, Debug)]
pub struct ReachabilityTable {
    pub params: GroupParams,
    pub reachable: StateSet,
    /// 1-based round in which each state first became reachable.
    first_round: Option<Vec<u32>>,
    /// The copies of A in processing order.
    elements: Vec<GroupElement>,
}

impl ReachabilityTable {
    pub fn contains(&self, x: &GroupElement) -> bool {
        self.reachable.contains(x)
    }

    pub fn len(&self) -> usize {
        self.reachable.count()
    }

    pub fn is_empty(&self) -> bool {
        self.reachable.is_empty()
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.reachable.elements()
    }

    /// Sub-multiset of A summing to `target`, if `target` ∈ Σ*(A).
    pub fn witness(&self, target: &GroupElement) -> Option<Vec<GroupElement>> {
        if !self.contains(target) {
            return None;
        }
        match &self.first_round {
            Some(rounds) => Some(backtrack(&self.params, rounds, &self.elements, target)),
            None => Some(recompute_witness(&self.params, &self.elements, target)),
        }
    }
}

fn backtrack(params: &GroupParams, rounds: &[u32], elements: &[GroupElement], target: &GroupElement) -> Vec<GroupElement> {
    let mut out = Vec::new();
    let mut z = target.clone();
    let mut limit = u32::MAX;
    loop {
        let j = rounds[params.index(&z)];
        debug_assert!(j != UNREACHED && j < limit);
        let x = &elements[(j - 1) as usize];
        out.push(x.clone());
        if &z == x {
            break;
        }
        z = params.sub(&z, x);
        limit = j;
        // z must have been reachable strictly before round j
        debug_assert!(rounds[params.index(&z)] < j);
    }
    out.sort();
    out
}

/// Witness recovery without stored rounds: find the shortest prefix whose
/// table contains the target, take its last element, repeat.
fn recompute_witness(params: &GroupParams, elements: &[GroupElement], target: &GroupElement) -> Vec<GroupElement> {
    let mut out = Vec::new();
    let mut z = target.clone();
    let mut prefix = elements.len();
    loop {
        let mut set = StateSet::new(params);
        let mut tmp = StateSet::new(params);
        let mut hit = None;
        for (j, x) in elements[..prefix].iter().enumerate() {
            set.shift_into(x, &mut tmp);
            tmp.insert(x);
            set.union_with(&tmp);
            if set.contains(&z) {
                hit = Some(j);
                break;
            }
        }
        let j = hit.expect("target reachable in prefix");
        let x = &elements[j];
        out.push(x.clone());
        if &z == x {
            break;
        }
        z = params.sub(&z, x);
        prefix = j;
    }
    out.sort();
    out
}

fn build_table(params: &GroupParams, a: &GroupMultiset, track: bool, stop_at_zero: bool) -> Result<ReachabilityTable> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (x, _) in a.iter() {
        params.check(x)?;
    }
    let n = params.states();
    let track = track && n <= WITNESS_MEMORY_CAP;
    let elements: Vec<GroupElement> = a.iter_copies().cloned().collect();
    let mut set = StateSet::new(params);
    let mut tmp = StateSet::new(params);
    let mut rounds = track.then(|| vec![UNREACHED; n as usize]);
    let zero = params.index(&params.zero());
    for (j, x) in elements.iter().enumerate() {
        set.shift_into(x, &mut tmp);
        tmp.insert(x);
        if let Some(r) = rounds.as_mut() {
            set.for_each_missing_from(&tmp, |idx| r[idx] = j as u32 + 1);
        }
        set.union_with(&tmp);
        if stop_at_zero && set.contains_index(zero) {
            break;
        }
    }
    Ok(ReachabilityTable { params: *params, reachable: set, first_round: rounds, elements })
}

/// Σ*(A) by the incremental rule reach ← reach ∪ (reach + x) ∪ {x}.
pub fn enumerate_subsums(params: &GroupParams, a: &GroupMultiset) -> Result<ReachabilityTable> {
    build_table(params, a, false, false)
}

/// Same table with witness bookkeeping.
pub fn enumerate_subsums_with_witnesses(params: &GroupParams, a: &GroupMultiset) -> Result<ReachabilityTable> {
    build_table(params, a, true, false)
}

/// A nonempty sub-multiset with vanishing sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSumCertificate {
    pub elements: Vec<GroupElement>,
    pub sum: GroupElement,
}

impl ZeroSumCertificate {
    pub fn new(params: &GroupParams, mut elements: Vec<GroupElement>) -> ZeroSumCertificate {
        elements.sort();
        let sum = params.sum(&elements);
        ZeroSumCertificate { elements, sum }
    }

    /// Recomputes everything from scratch: nonempty, contained in `a`
    /// (respecting multiplicities), claimed sum correct and zero.
    pub fn verify(&self, params: &GroupParams, a: &GroupMultiset) -> bool {
        if self.elements.is_empty() || self.elements.iter().any(|x| params.check(x).is_err()) {
            return false;
        }
        let sub = GroupMultiset::from_elements(self.elements.iter().cloned());
        let sum = params.sum(&self.elements);
        sub.is_submultiset_of(a) && sum.is_zero() && sum == self.sum
    }
}

pub fn find_zero_sum_subset(params: &GroupParams, a: &GroupMultiset) -> Result<Option<ZeroSumCertificate>> {
    let zero = params.zero();
    if a.contains(&zero) {
        return Ok(Some(ZeroSumCertificate::new(params, vec![zero])));
    }
    let table = build_table(params, a, true, true)?;
    Ok(table.witness(&zero).map(|w| ZeroSumCertificate::new(params, w)))
}

/// Forces the recomputation path regardless of size (used to test it).
pub fn find_zero_sum_subset_recompute(params: &GroupParams, a: &GroupMultiset) -> Result<Option<ZeroSumCertificate>> {
    let table = build_table(params, a, false, true)?;
    Ok(table.witness(&params.zero()).map(|w| ZeroSumCertificate::new(params, w)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
    /// Groups larger than this are not searched at all.
    pub max_states: u64,
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget { max_nodes: Some(50_000_000), max_time: Some(Duration::from_secs(60)), max_states: 1 << 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSumFreeResult {
    pub size: usize,
    pub witness: Vec<GroupElement>,
    /// False when the budget ran out: `size` is then only a lower bound.
    pub exact: bool,
    pub nodes: u64,
}

/// {j·e_i : 1 ≤ j ≤ k, all i} with k(k+1)/2 < p is zero-sum-free: each
/// coordinate of a nonempty subsum is a positive integer below p, or the
/// subset misses that axis entirely.
pub fn axis_zero_sum_free(params: &GroupParams) -> Vec<GroupElement> {
    let p = params.p as u64;
    let mut k = 0u64;
    while (k + 1) * (k + 2) / 2 < p {
        k += 1;
    }
    let mut out = Vec::new();
    for i in 0..params.d {
        for j in 1..=k {
            out.push(params.scale(&params.unit(i), j));
        }
    }
    out.sort();
    out
}

struct Search<'a> {
    params: &'a GroupParams,
    order: Vec<GroupElement>,
    neg_index: Vec<usize>,
    best: Vec<usize>,
    best_extra: Option<Vec<GroupElement>>,
    nodes: u64,
    budget: &'a SearchBudget,
    started: Instant,
    aborted: bool,
}

impl Search<'_> {
    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.budget.max_nodes.is_some_and(|m| self.nodes >= m)
            || (self.nodes % 1024 == 0 && self.budget.max_time.is_some_and(|t| self.started.elapsed() >= t))
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn dfs(&mut self, chosen: &mut Vec<usize>, reach: &StateSet, start: usize) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if chosen.len() + 1 > self.best_len() {
            self.best = chosen.clone();
            self.best_extra = None;
        }
        let candidates: Vec<usize> = (start..self.order.len())
            .filter(|&c| !reach.contains(&self.params.neg(&self.order[c])))
            .collect();
        // c and -c can never both be added
        let classes = candidates
            .iter()
            .filter(|&&c| {
                let n = self.neg_index[c];
                n == usize::MAX || n > c || !candidates.contains(&n)
            })
            .count();
        if chosen.len() + 1 + classes <= self.best_len() {
            return;
        }
        let mut next = reach.clone();
        for &c in &candidates {
            let x = &self.order[c];
            reach.shift_into(x, &mut next);
            next.insert(x);
            next.union_with(reach);
            chosen.push(c);
            self.dfs(chosen, &next, c + 1);
            chosen.pop();
            if self.aborted {
                return;
            }
        }
    }

    fn best_len(&self) -> usize {
        match &self.best_extra {
            Some(v) => v.len(),
            None => self.best.len() + 1,
        }
    }
}

/// Largest zero-sum-free subset by branch and bound.
///
/// Linear automorphisms preserve zero-sum-freeness and act transitively on
/// nonzero vectors, so the search fixes `e_1` as a member. Branching adds
/// elements in increasing order; an element `c` is admissible iff `-c` is
/// not already a subsum.
pub fn max_zero_sum_free(params: &GroupParams, budget: &SearchBudget) -> Result<ZeroSumFreeResult> {
    let axis = axis_zero_sum_free(params);
    if params.states() > budget.max_states {
        return Ok(ZeroSumFreeResult { size: axis.len(), witness: axis, exact: false, nodes: 0 });
    }
    let e1 = params.unit(0);
    let order: Vec<GroupElement> = params.elements_lex().filter(|x| !x.is_zero() && *x != e1).collect();
    let neg_index = order
        .iter()
        .map(|x| {
            let n = params.neg(x);
            order.binary_search(&n).unwrap_or(usize::MAX)
        })
        .collect();
    let mut search = Search {
        params,
        order,
        neg_index,
        best: Vec::new(),
        best_extra: Some(axis),
        nodes: 0,
        budget,
        started: Instant::now(),
        aborted: false,
    };
    let mut reach = StateSet::new(params);
    reach.insert(&e1);
    search.dfs(&mut Vec::new(), &reach, 0);
    let witness = match search.best_extra.take() {
        Some(extra) => extra,
        None => {
            let mut w: Vec<GroupElement> = search.best.iter().map(|&i| search.order[i].clone()).collect();
            w.push(e1);
            w.sort();
            w
        }
    };
    Ok(ZeroSumFreeResult { size: witness.len(), witness, exact: !search.aborted, nodes: search.nodes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlsonResult {
    pub p: u32,
    pub d: usize,
    /// Exact value when `exact`.
    pub olson: Option<u64>,
    pub lower: u64,
    pub upper: u64,
    pub exact: bool,
    pub witness: Vec<GroupElement>,
    pub nodes: u64,
}

/// Davenport bound d(p-1)+1, an upper bound for the Olson constant.
pub fn davenport_bound(params: &GroupParams) -> u64 {
    params.d as u64 * (params.p as u64 - 1) + 1
}

pub fn olson_constant(params: &GroupParams, budget: &SearchBudget) -> Result<OlsonResult> {
    let zsf = max_zero_sum_free(params, budget)?;
    let upper = davenport_bound(params);
    let lower = zsf.size as u64 + 1;
    if lower > upper {
        return Err(Error::Precondition(format!("zero-sum-free set of size {} exceeds d(p-1)", zsf.size)));
    }
    Ok(OlsonResult {
        p: params.p,
        d: params.d,
        olson: zsf.exact.then_some(lower),
        lower,
        upper: if zsf.exact { lower } else { upper },
        exact: zsf.exact,
        witness: zsf.witness,
        nodes: zsf.nodes,
    })
}

pub fn is_zero_sum_free(params: &GroupParams, a: &[GroupElement]) -> Result<bool> {
    let set = GroupMultiset::from_elements(a.iter().cloned());
    if set.is_empty() {
        return Ok(true);
    }
    Ok(!enumerate_subsums(params, &set)?.contains(&params.zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(p: u32, d: usize) -> GroupParams {
        GroupParams::new(p, d).unwrap()
    }

    fn ms(params: &GroupParams, pts: &[&[i64]]) -> GroupMultiset {
        GroupMultiset::from_elements(pts.iter().map(|c| params.element(c).unwrap()))
    }

    #[test]
    fn subsum_examples() {
        let g = gp(5, 1);
        let t = enumerate_subsums(&g, &ms(&g, &[&[1], &[2]])).unwrap();
        let got: Vec<u32> = t.elements().iter().map(|e| e.0[0]).collect();
        assert_eq!(got, vec![1, 2, 3]);
        let t = enumerate_subsums(&g, &ms(&g, &[&[0]])).unwrap();
        assert_eq!(t.elements(), vec![g.zero()]);
        let g = gp(3, 2);
        let t = enumerate_subsums(&g, &ms(&g, &[&[1, 0], &[0, 1], &[2, 2]])).unwrap();
        assert_eq!(t.len(), 7);
        assert!(t.contains(&g.zero()));
        assert!(matches!(enumerate_subsums(&g, &GroupMultiset::new()), Err(Error::EmptyInput)));
    }

    #[test]
    fn zero_sum_examples() {
        let g = gp(3, 1);
        let c = find_zero_sum_subset(&g, &ms(&g, &[&[1], &[2]])).unwrap().unwrap();
        assert_eq!(c.elements.len(), 2);
        let g5 = gp(5, 1);
        assert!(find_zero_sum_subset(&g5, &ms(&g5, &[&[1], &[2]])).unwrap().is_none());
        let a = ms(&g5, &[&[3], &[0], &[4]]);
        let c = find_zero_sum_subset(&g5, &a).unwrap().unwrap();
        assert_eq!(c.elements, vec![g5.zero()]);
    }

    #[test]
    fn multiset_witness_respects_multiplicity() {
        let g = gp(3, 1);
        let mut a = GroupMultiset::new();
        a.insert(g.element(&[1]).unwrap(), 3);
        let c = find_zero_sum_subset(&g, &a).unwrap().unwrap();
        assert_eq!(c.elements.len(), 3);
        assert!(c.verify(&g, &a));
        let r = find_zero_sum_subset_recompute(&g, &a).unwrap().unwrap();
        assert!(r.verify(&g, &a));
    }

    #[test]
    fn verifier_rejects_bad_certificates() {
        let g = gp(5, 1);
        let a = ms(&g, &[&[1], &[4], &[2]]);
        let good = ZeroSumCertificate::new(&g, vec![g.element(&[1]).unwrap(), g.element(&[4]).unwrap()]);
        assert!(good.verify(&g, &a));
        let empty = ZeroSumCertificate::new(&g, vec![]);
        assert!(!empty.verify(&g, &a));
        let not_sub = ZeroSumCertificate::new(&g, vec![g.element(&[3]).unwrap(), g.element(&[2]).unwrap()]);
        assert!(!not_sub.verify(&g, &a));
        let mut lie = good.clone();
        lie.elements.pop();
        assert!(!lie.verify(&g, &a));
    }

    #[test]
    fn axis_set_is_zero_sum_free() {
        for (p, d) in [(3, 1), (7, 1), (11, 2), (13, 3)] {
            let g = gp(p, d);
            assert!(is_zero_sum_free(&g, &axis_zero_sum_free(&g)).unwrap());
        }
    }

    #[test]
    fn small_olson_values() {
        let b = SearchBudget::default();
        let r = max_zero_sum_free(&gp(3, 1), &b).unwrap();
        assert_eq!((r.size, r.exact), (1, true));
        assert_eq!(r.witness, vec![gp(3, 1).element(&[1]).unwrap()]);
        let r = max_zero_sum_free(&gp(7, 1), &b).unwrap();
        assert_eq!(r.size, 3);
        assert!(is_zero_sum_free(&gp(7, 1), &r.witness).unwrap());
        assert_eq!(olson_constant(&gp(5, 1), &b).unwrap().olson, Some(3));
    }

    #[test]
    fn over_budget_returns_interval() {
        let g = GroupParams::new(101, 3).unwrap();
        let r = olson_constant(&g, &SearchBudget::default()).unwrap();
        assert!(!r.exact);
        assert_eq!(r.olson, None);
        assert!(r.lower < r.upper);
        assert_eq!(r.upper, 301);
    }

    #[test]
    fn node_cap_flags_inexact() {
        let b = SearchBudget { max_nodes: Some(3), ..SearchBudget::default() };
        let r = olson_constant(&gp(5, 2), &b).unwrap();
        assert!(!r.exact);
        assert!(r.lower >= 2);
    }
}
