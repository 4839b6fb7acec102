//! Weighted zero sums: coefficients a_y ∈ {0} ∪ [r, w(y) − r], not all
//! zero, with Σ a_y y = 0.
//!
//! Exact DP over group states. Only a_y mod p matters for the sum, so each
//! point contributes at most p transitions (the smallest integer of each
//! residue class is kept as representative). Suffix tables of minimum
//! support let the reconstruction return the lexicographically smallest
//! coefficient vector among the minimum-support solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupMultiset, GroupParams};
use crate::oracle::{find_zero_sum_subset, ZeroSumCertificate};

/// Cap on (|Y| + 1) · p^d table entries.
pub const TABLE_CAP: u64 = 1 << 27;

const INF: u16 = u16::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedInstance {
    pub p: u32,
    pub d: usize,
    pub points: Vec<GroupElement>,
    pub weights: Vec<u64>,
    pub r: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientSolution {
    /// Aligned with the instance's points.
    pub a: Vec<u64>,
}

impl CoefficientSolution {
    pub fn support(&self) -> usize {
        self.a.iter().filter(|&&a| a > 0).count()
    }
}

impl WeightedInstance {
    pub fn new(params: &GroupParams, points: Vec<GroupElement>, weights: Vec<u64>, r: u64) -> Result<WeightedInstance> {
        let inst = WeightedInstance { p: params.p, d: params.d, points, weights, r };
        inst.validate()?;
        Ok(inst)
    }

    pub fn params(&self) -> Result<GroupParams> {
        GroupParams::new(self.p, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        if self.points.len() != self.weights.len() {
            return Err(Error::InvalidParams(format!("{} points but {} weights", self.points.len(), self.weights.len())));
        }
        if self.points.len() >= INF as usize {
            return Err(Error::InvalidParams("too many points".into()));
        }
        for x in &self.points {
            params.check(x)?;
        }
        let mut sorted = self.points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.points.len() {
            return Err(Error::InvalidParams("points must be distinct".into()));
        }
        if self.weights.contains(&0) {
            return Err(Error::InvalidParams("weights must be positive".into()));
        }
        Ok(())
    }

    /// Nonzero part [max(r, 1), w − r] of the allowed set, if nonempty.
    pub fn nonzero_range(&self, i: usize) -> Option<(u64, u64)> {
        let lo = self.r.max(1);
        let hi = self.weights[i].checked_sub(self.r)?;
        (lo <= hi).then_some((lo, hi))
    }

    pub fn allows(&self, i: usize, a: u64) -> bool {
        a == 0 || self.nonzero_range(i).is_some_and(|(lo, hi)| lo <= a && a <= hi)
    }

    pub fn hypothesis_lhs(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// d(p − 1) + 2r|Y| + 1
    pub fn hypothesis_rhs(&self) -> u64 {
        self.d as u64 * (self.p as u64 - 1) + 2 * self.r * self.points.len() as u64 + 1
    }

    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis_lhs() >= self.hypothesis_rhs()
    }

    /// (residue, smallest representative) pairs, ordered by representative.
    fn residues(&self, i: usize) -> Vec<(u32, u64)> {
        let Some((lo, hi)) = self.nonzero_range(i) else {
            return Vec::new();
        };
        let p = self.p as u64;
        (lo..=hi.min(lo + p - 1)).map(|c| ((c % p) as u32, c)).collect()
    }
}

/// idx(s − c·y) for a state index `s`.
fn sub_index(p: u32, s: usize, cy: &[u32]) -> usize {
    let (mut rest, mut out, mut radix) = (s, 0usize, 1usize);
    for &v in cy {
        let digit = (rest % p as usize) as u32;
        rest /= p as usize;
        out += (((digit + p - v) % p) as usize) * radix;
        radix *= p as usize;
    }
    out
}

/// Exact search; `Ok(None)` only when no solution exists.
pub fn weighted_zero_sum(inst: &WeightedInstance) -> Result<Option<CoefficientSolution>> {
    inst.validate()?;
    let params = inst.params()?;
    let n = inst.points.len();
    if n == 0 {
        return Ok(None);
    }
    let states = params.states();
    let entries = (n as u64 + 1) * states;
    if entries > TABLE_CAP {
        return Err(Error::StateBudget { states: entries, cap: TABLE_CAP });
    }
    let s_len = states as usize;
    let p = params.p;
    let moves: Vec<Vec<(u64, Vec<u32>)>> = (0..n)
        .map(|i| inst.residues(i).into_iter().map(|(res, rep)| (rep, params.scale(&inst.points[i], res as u64).0)).collect())
        .collect();

    // minsup[i][s]: fewest nonzero coefficients on positions i.. summing to s
    // nz[i][s]: same, requiring at least one nonzero
    let mut minsup = vec![INF; (n + 1) * s_len];
    let mut nz = vec![INF; (n + 1) * s_len];
    minsup[n * s_len] = 0;
    for i in (0..n).rev() {
        let (head, tail) = minsup.split_at_mut((i + 1) * s_len);
        let next = &tail[..s_len];
        let cur = &mut head[i * s_len..];
        let (nz_head, nz_tail) = nz.split_at_mut((i + 1) * s_len);
        let nz_next = &nz_tail[..s_len];
        let nz_cur = &mut nz_head[i * s_len..];
        cur.copy_from_slice(next);
        nz_cur.copy_from_slice(nz_next);
        for (_, cy) in &moves[i] {
            for s in 0..s_len {
                let prev = next[sub_index(p, s, cy)];
                if prev != INF {
                    cur[s] = cur[s].min(prev + 1);
                    nz_cur[s] = nz_cur[s].min(prev + 1);
                }
            }
        }
    }
    let best = nz[0];
    if best == INF {
        if inst.hypothesis_holds() {
            return Err(Error::Precondition("hypothesis holds but the exhaustive search found no solution".into()));
        }
        return Ok(None);
    }

    let mut a = vec![0u64; n];
    let mut target = 0usize;
    let mut budget = best;
    let mut have_nonzero = false;
    for i in 0..n {
        let next = (i + 1) * s_len;
        let zero_ok = if have_nonzero { minsup[next + target] <= budget } else { nz[next + target] <= budget };
        if zero_ok {
            continue;
        }
        let (rep, cy) = moves[i]
            .iter()
            .find(|(_, cy)| budget > 0 && minsup[next + sub_index(p, target, cy)] <= budget - 1)
            .expect("suffix table guarantees a continuation");
        a[i] = *rep;
        target = sub_index(p, target, cy);
        budget -= 1;
        have_nonzero = true;
    }
    debug_assert_eq!(target, 0);
    Ok(Some(CoefficientSolution { a }))
}

/// Independent check of membership, non-triviality and the sum.
pub fn verify_coefficients(inst: &WeightedInstance, sol: &CoefficientSolution) -> bool {
    let Ok(params) = inst.params() else {
        return false;
    };
    if sol.a.len() != inst.points.len() || sol.a.iter().all(|&a| a == 0) {
        return false;
    }
    if !(0..sol.a.len()).all(|i| inst.allows(i, sol.a[i])) {
        return false;
    }
    let mut acc = vec![0u64; params.d];
    for (x, &a) in inst.points.iter().zip(&sol.a) {
        for (s, &c) in acc.iter_mut().zip(&x.0) {
            *s = (*s + (a % params.p as u64) * c as u64) % params.p as u64;
        }
    }
    acc.iter().all(|&s| s == 0)
}

/// Nonempty zero-sum sub-multiset of a sequence; guaranteed when
/// n > d(p − 1). Falls back to the subset-sum oracle when the weighted
/// table would be too large.
pub fn zero_sum_sequence(params: &GroupParams, elements: &[GroupElement]) -> Result<Option<ZeroSumCertificate>> {
    for x in elements {
        params.check(x)?;
    }
    let zero = params.zero();
    if elements.contains(&zero) {
        return Ok(Some(ZeroSumCertificate::new(params, vec![zero])));
    }
    let multiset = GroupMultiset::from_elements(elements.iter().cloned());
    let (points, weights): (Vec<GroupElement>, Vec<u64>) = multiset.iter().map(|(e, m)| (e.clone(), m)).unzip();
    let entries = (points.len() as u64 + 1) * params.states();
    if points.is_empty() || entries > TABLE_CAP {
        return find_zero_sum_subset(params, &multiset);
    }
    let inst = WeightedInstance::new(params, points, weights, 0)?;
    Ok(weighted_zero_sum(&inst)?.map(|sol| {
        let elems = inst
            .points
            .iter()
            .zip(&sol.a)
            .flat_map(|(x, &a)| std::iter::repeat_n(x.clone(), a as usize))
            .collect();
        ZeroSumCertificate::new(params, elems)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: u32, d: usize, pts: &[&[i64]], w: &[u64], r: u64) -> WeightedInstance {
        let params = GroupParams::new(p, d).unwrap();
        let points = pts.iter().map(|c| params.element(c).unwrap()).collect();
        WeightedInstance::new(&params, points, w.to_vec(), r).unwrap()
    }

    #[test]
    fn forced_multiple_of_p() {
        let i = inst(3, 1, &[&[1]], &[3], 0);
        assert!(i.hypothesis_holds());
        let sol = weighted_zero_sum(&i).unwrap().unwrap();
        assert_eq!(sol.a, vec![3]);
        assert!(verify_coefficients(&i, &sol));
    }

    #[test]
    fn zero_point() {
        let i = inst(5, 2, &[&[0, 0]], &[3], 1);
        assert_eq!(weighted_zero_sum(&i).unwrap().unwrap().a, vec![1]);
    }

    #[test]
    fn two_points_mod_five() {
        let i = inst(5, 1, &[&[1], &[2]], &[5, 5], 1);
        assert_eq!((i.hypothesis_lhs(), i.hypothesis_rhs()), (10, 9));
        let sol = weighted_zero_sum(&i).unwrap().unwrap();
        assert_eq!(sol.a, vec![1, 2]);
        assert!(verify_coefficients(&i, &sol));
        assert!(verify_coefficients(&i, &CoefficientSolution { a: vec![4, 3] }));
    }

    #[test]
    fn verifier_rejections() {
        let i = inst(5, 1, &[&[1], &[2]], &[5, 5], 2);
        assert!(!verify_coefficients(&i, &CoefficientSolution { a: vec![0, 0] }));
        // 1 + 2·2 = 5 ≡ 0 but a_1 = 1 = r − 1 sits in the gap
        assert!(!verify_coefficients(&i, &CoefficientSolution { a: vec![1, 2] }));
        assert!(!verify_coefficients(&i, &CoefficientSolution { a: vec![2] }));
    }

    #[test]
    fn infeasible_without_hypothesis() {
        let i = inst(7, 1, &[&[1]], &[3], 0);
        assert!(!i.hypothesis_holds());
        assert_eq!(weighted_zero_sum(&i).unwrap(), None);
    }

    #[test]
    fn sequences() {
        let params = GroupParams::new(3, 1).unwrap();
        let one = params.element(&[1]).unwrap();
        let cert = zero_sum_sequence(&params, &[one.clone(), one.clone(), one.clone()]).unwrap().unwrap();
        assert_eq!(cert.elements, vec![one.clone(); 3]);
        let cert = zero_sum_sequence(&params, &[one.clone(), params.zero()]).unwrap().unwrap();
        assert_eq!(cert.elements, vec![params.zero()]);
        assert_eq!(zero_sum_sequence(&params, &[one.clone(), one]).unwrap(), None);
    }
}
