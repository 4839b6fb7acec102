//! Arithmetic in F_p^d: elements, multisets, affine-linear functionals,
//! symmetric intervals, affine isomorphisms and affine hulls.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

pub const MAX_DIM: usize = 6;
pub const DEFAULT_STATE_CAP: u64 = 1 << 24;

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= n as u64 {
        if n as u64 % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupParams {
    pub p: u32,
    pub d: usize,
}

impl GroupParams {
    pub fn new(p: u32, d: usize) -> Result<GroupParams> {
        GroupParams::with_cap(p, d, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(p: u32, d: usize, cap: u64) -> Result<GroupParams> {
        if p == 2 || !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not an odd prime")));
        }
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidParams(format!("d = {d} outside [1, {MAX_DIM}]")));
        }
        let params = GroupParams { p, d };
        let states = params.states_u128();
        if states > cap as u128 {
            return Err(Error::StateBudget {
                states: states.min(u64::MAX as u128) as u64,
                cap,
            });
        }
        Ok(params)
    }

    fn states_u128(&self) -> u128 {
        (self.p as u128).pow(self.d as u32)
    }

    /// Group order p^d.
    pub fn states(&self) -> u64 {
        self.states_u128() as u64
    }

    /// Same prime, different dimension (no budget check beyond the default).
    pub fn with_dim(&self, d: usize) -> Result<GroupParams> {
        GroupParams::new(self.p, d)
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.d])
    }

    pub fn unit(&self, i: usize) -> GroupElement {
        let mut v = vec![0; self.d];
        v[i] = 1;
        GroupElement(v)
    }

    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    /// Builds an element from arbitrary integers, reducing mod p.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        Ok(GroupElement(coords.iter().map(|&c| self.reduce(c)).collect()))
    }

    pub fn check(&self, x: &GroupElement) -> Result<()> {
        self.check_len(x.dim())?;
        if x.0.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidParams(format!("unreduced coordinate in {:?}", x.0)));
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: len });
        }
        Ok(())
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&b.0).map(|(&x, &y)| (x + y) % self.p).collect())
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&b.0).map(|(&x, &y)| (x + self.p - y) % self.p).collect())
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().map(|&x| (self.p - x) % self.p).collect())
    }

    pub fn scale(&self, a: &GroupElement, c: u64) -> GroupElement {
        let m = self.p as u64;
        let c = c % m;
        GroupElement(a.0.iter().map(|&x| (x as u64 * c % m) as u32).collect())
    }

    pub fn sum<'a, I>(&self, items: I) -> GroupElement
    where
        I: IntoIterator<Item = &'a GroupElement>,
    {
        let mut acc = vec![0u64; self.d];
        for x in items {
            for (a, &c) in acc.iter_mut().zip(&x.0) {
                *a += c as u64;
            }
        }
        GroupElement(acc.into_iter().map(|a| (a % self.p as u64) as u32).collect())
    }

    /// Mixed-radix state index: coordinate 0 is the least significant digit.
    pub fn index(&self, x: &GroupElement) -> usize {
        x.0.iter().rev().fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    pub fn from_index(&self, mut idx: usize) -> GroupElement {
        let p = self.p as usize;
        let mut v = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            v.push((idx % p) as u32);
            idx /= p;
        }
        GroupElement(v)
    }

    /// Every element, in lexicographic order (coordinate 0 most significant).
    pub fn elements_lex(&self) -> impl Iterator<Item = GroupElement> + '_ {
        let mut cur = Some(vec![0u32; self.d]);
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            let mut i = self.d;
            loop {
                if i == 0 {
                    cur = None;
                    break;
                }
                i -= 1;
                next[i] += 1;
                if next[i] < self.p {
                    cur = Some(next);
                    break;
                }
                next[i] = 0;
            }
            Some(GroupElement(out))
        })
    }

    /// Representative of a residue in (-p/2, p/2].
    pub fn lift_signed(&self, r: u32) -> i64 {
        if r > self.p / 2 {
            r as i64 - self.p as i64
        } else {
            r as i64
        }
    }
}

/// A point of F_p^d with canonical residues in [0, p-1].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<u32>);

impl GroupElement {
    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn head(&self, l: usize) -> GroupElement {
        GroupElement(self.0[..l].to_vec())
    }

    pub fn tail(&self, l: usize) -> GroupElement {
        GroupElement(self.0[l..].to_vec())
    }
}

/// Finite multiset of group elements; `len` counts multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupMultiset {
    entries: BTreeMap<GroupElement, u64>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct MultisetEntry {
    element: GroupElement,
    multiplicity: u64,
}

impl GroupMultiset {
    pub fn new() -> GroupMultiset {
        GroupMultiset::default()
    }

    pub fn from_elements<I: IntoIterator<Item = GroupElement>>(items: I) -> GroupMultiset {
        let mut m = GroupMultiset::new();
        for x in items {
            m.insert(x, 1);
        }
        m
    }

    pub fn insert(&mut self, x: GroupElement, multiplicity: u64) {
        if multiplicity == 0 {
            return;
        }
        *self.entries.entry(x).or_insert(0) += multiplicity;
        self.total += multiplicity;
    }

    /// Removes one copy; returns false when `x` is absent.
    pub fn remove_one(&mut self, x: &GroupElement) -> bool {
        match self.entries.get_mut(x) {
            Some(m) => {
                *m -= 1;
                if *m == 0 {
                    self.entries.remove(x);
                }
                self.total -= 1;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn multiplicity(&self, x: &GroupElement) -> u64 {
        self.entries.get(x).copied().unwrap_or(0)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.entries.contains_key(x)
    }

    /// Distinct elements with multiplicities, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, u64)> {
        self.entries.iter().map(|(x, &m)| (x, m))
    }

    /// Every copy, repeated according to multiplicity.
    pub fn iter_copies(&self) -> impl Iterator<Item = &GroupElement> {
        self.entries
            .iter()
            .flat_map(|(x, &m)| std::iter::repeat_n(x, m as usize))
    }

    pub fn is_set(&self) -> bool {
        self.entries.values().all(|&m| m == 1)
    }

    pub fn is_submultiset_of(&self, other: &GroupMultiset) -> bool {
        self.iter().all(|(x, m)| other.multiplicity(x) >= m)
    }

    pub fn union(&self, other: &GroupMultiset) -> GroupMultiset {
        let mut out = self.clone();
        for (x, m) in other.iter() {
            out.insert(x.clone(), m);
        }
        out
    }

    /// Multiset difference (saturating).
    pub fn difference(&self, other: &GroupMultiset) -> GroupMultiset {
        let mut out = GroupMultiset::new();
        for (x, m) in self.iter() {
            out.insert(x.clone(), m.saturating_sub(other.multiplicity(x)));
        }
        out
    }

    pub fn filter<F: Fn(&GroupElement) -> bool>(&self, keep: F) -> GroupMultiset {
        let mut out = GroupMultiset::new();
        for (x, m) in self.iter() {
            if keep(x) {
                out.insert(x.clone(), m);
            }
        }
        out
    }

    pub fn sum(&self, params: &GroupParams) -> GroupElement {
        params.sum(self.iter_copies())
    }
}

impl Serialize for GroupMultiset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let list: Vec<MultisetEntry> = self
            .iter()
            .map(|(x, m)| MultisetEntry { element: x.clone(), multiplicity: m })
            .collect();
        list.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupMultiset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<GroupMultiset, D::Error> {
        let list = Vec::<MultisetEntry>::deserialize(d)?;
        let mut m = GroupMultiset::new();
        for e in list {
            if e.multiplicity == 0 {
                return Err(serde::de::Error::custom("zero multiplicity entry"));
            }
            m.insert(e.element, e.multiplicity);
        }
        Ok(m)
    }
}

/// The interval [-K, K] of F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymmetricInterval {
    pub k: u32,
}

impl SymmetricInterval {
    pub fn new(k: u32) -> SymmetricInterval {
        SymmetricInterval { k }
    }

    pub fn is_everything(&self, p: u32) -> bool {
        2 * self.k as u64 + 1 >= p as u64
    }

    pub fn contains(&self, r: u32, p: u32) -> bool {
        self.is_everything(p) || r <= self.k || r >= p - self.k
    }

    /// Number of residues in the interval.
    pub fn width(&self, p: u32) -> u32 {
        if self.is_everything(p) {
            p
        } else {
            2 * self.k + 1
        }
    }
}

/// x -> a0 + <linear, x>.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinearFunctional {
    pub a0: u32,
    pub linear: Vec<u32>,
}

impl LinearFunctional {
    pub fn new(a0: u32, linear: Vec<u32>) -> LinearFunctional {
        LinearFunctional { a0, linear }
    }

    pub fn coordinate(params: &GroupParams, i: usize) -> LinearFunctional {
        LinearFunctional { a0: 0, linear: params.unit(i).0 }
    }

    pub fn eval(&self, params: &GroupParams, x: &GroupElement) -> Result<u32> {
        if self.linear.len() != params.d || x.dim() != params.d {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                got: if x.dim() != params.d { x.dim() } else { self.linear.len() },
            });
        }
        Ok(self.eval_unchecked(params.p, x))
    }

    pub(crate) fn eval_unchecked(&self, p: u32, x: &GroupElement) -> u32 {
        ((self.a0 as u64 + linalg::dot(&self.linear, &x.0, p) as u64) % p as u64) as u32
    }

    pub fn is_constant(&self) -> bool {
        self.linear.iter().all(|&a| a == 0)
    }

    pub fn is_canonical(&self) -> bool {
        is_canonical_part(&self.linear)
    }

    /// Scales so that the first nonzero linear coefficient is 1.
    pub fn canonical(&self, p: u32) -> LinearFunctional {
        let Some(&lead) = self.linear.iter().find(|&&a| a != 0) else {
            return self.clone();
        };
        let inv = linalg::inv_mod(lead, p);
        let mut linear = self.linear.clone();
        linalg::scale(&mut linear, inv, p);
        LinearFunctional { a0: (self.a0 as u64 * inv as u64 % p as u64) as u32, linear }
    }

    /// The functional `x -> self(psi(x))`.
    pub fn compose(&self, params: &GroupParams, psi: &AffineIso) -> LinearFunctional {
        let p = params.p;
        let linear = linalg::mat_vec(&linalg::transpose(&psi.matrix), &self.linear, p);
        let a0 = (self.a0 + linalg::dot(&self.linear, &psi.shift.0, p)) % p;
        LinearFunctional { a0, linear }
    }
}

pub(crate) fn is_canonical_part(linear: &[u32]) -> bool {
    linear.iter().find(|&&a| a != 0) == Some(&1)
}

/// All nonzero linear parts, canonical ones first, each group in
/// lexicographic order. This is the scan order used for thickness tests.
pub fn linear_parts_scan_order(params: &GroupParams) -> Vec<Vec<u32>> {
    let mut canonical = Vec::new();
    let mut rest = Vec::new();
    for v in params.elements_lex().skip(1) {
        if is_canonical_part(&v.0) {
            canonical.push(v.0);
        } else {
            rest.push(v.0);
        }
    }
    canonical.extend(rest);
    canonical
}

/// Canonical linear parts (first nonzero entry 1), lexicographic.
pub fn canonical_linear_parts(params: &GroupParams) -> Vec<Vec<u32>> {
    params
        .elements_lex()
        .skip(1)
        .filter(|v| is_canonical_part(&v.0))
        .map(|v| v.0)
        .collect()
}

/// Canonicalized functional search space: every canonical non-constant
/// functional with each constant term, plus the `p` constant functionals.
pub fn canonical_functionals(params: &GroupParams) -> Vec<LinearFunctional> {
    let mut out: Vec<LinearFunctional> = (0..params.p)
        .map(|a0| LinearFunctional::new(a0, vec![0; params.d]))
        .collect();
    for part in canonical_linear_parts(params) {
        for a0 in 0..params.p {
            out.push(LinearFunctional::new(a0, part.clone()));
        }
    }
    out
}

/// Membership in H(xi, K).
pub fn in_tube_set(
    params: &GroupParams,
    x: &GroupElement,
    xi: &LinearFunctional,
    k: SymmetricInterval,
) -> Result<bool> {
    Ok(k.contains(xi.eval(params, x)?, params.p))
}

/// x -> matrix · x + shift, with `matrix` invertible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineIso {
    pub matrix: Vec<Vec<u32>>,
    pub shift: GroupElement,
}

impl AffineIso {
    pub fn new(params: &GroupParams, matrix: Vec<Vec<u32>>, shift: GroupElement) -> Result<AffineIso> {
        let iso = AffineIso { matrix, shift };
        iso.validate(params)?;
        Ok(iso)
    }

    pub fn validate(&self, params: &GroupParams) -> Result<()> {
        if self.matrix.len() != params.d || self.matrix.iter().any(|r| r.len() != params.d) {
            return Err(Error::DimensionMismatch { expected: params.d, got: self.matrix.len() });
        }
        params.check(&self.shift)?;
        if self.matrix.iter().flatten().any(|&a| a >= params.p) {
            return Err(Error::InvalidParams("unreduced matrix entry".into()));
        }
        if linalg::rank(&self.matrix, params.p) != params.d {
            return Err(Error::Singular(params.p));
        }
        Ok(())
    }

    pub fn identity(params: &GroupParams) -> AffineIso {
        let matrix = (0..params.d).map(|i| params.unit(i).0).collect();
        AffineIso { matrix, shift: params.zero() }
    }

    pub fn translation(params: &GroupParams, v: GroupElement) -> AffineIso {
        AffineIso { shift: v, ..AffineIso::identity(params) }
    }

    pub fn apply(&self, params: &GroupParams, x: &GroupElement) -> GroupElement {
        params.add(&self.apply_linear(params, x), &self.shift)
    }

    pub fn apply_linear(&self, params: &GroupParams, x: &GroupElement) -> GroupElement {
        GroupElement(linalg::mat_vec(&self.matrix, &x.0, params.p))
    }

    pub fn inverse(&self, params: &GroupParams) -> Result<AffineIso> {
        let inv = linalg::invert(&self.matrix, params.p).ok_or(Error::Singular(params.p))?;
        let shift = params.neg(&GroupElement(linalg::mat_vec(&inv, &self.shift.0, params.p)));
        Ok(AffineIso { matrix: inv, shift })
    }

    /// `self ∘ other`.
    pub fn compose(&self, params: &GroupParams, other: &AffineIso) -> AffineIso {
        let matrix = linalg::mat_mul(&self.matrix, &other.matrix, params.p);
        let shift = self.apply(params, &other.shift);
        AffineIso { matrix, shift }
    }
}

pub fn change_coords(params: &GroupParams, x: &GroupMultiset, psi: &AffineIso) -> Result<GroupMultiset> {
    psi.validate(params)?;
    let mut out = GroupMultiset::new();
    for (e, m) in x.iter() {
        out.insert(psi.apply(params, e), m);
    }
    Ok(out)
}

/// basepoint + span(basis); the basis is kept in reduced row echelon form
/// and the basepoint is the lexicographically smallest point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineHull {
    pub basepoint: GroupElement,
    pub basis: Vec<GroupElement>,
    #[serde(skip)]
    pivots: Vec<usize>,
}

/// Pivots are derived from the basis and ignored.
impl PartialEq for AffineHull {
    fn eq(&self, other: &AffineHull) -> bool {
        self.basepoint == other.basepoint && self.basis == other.basis
    }
}

impl Eq for AffineHull {}

impl AffineHull {
    pub fn from_parts(params: &GroupParams, basepoint: GroupElement, directions: Vec<Vec<u32>>) -> AffineHull {
        let mut rows = directions;
        let pivots = linalg::rref(&mut rows, params.p);
        let mut base = basepoint.0;
        linalg::reduce(&mut base, &rows, &pivots, params.p);
        AffineHull {
            basepoint: GroupElement(base),
            basis: rows.into_iter().map(GroupElement).collect(),
            pivots,
        }
    }

    pub fn whole(params: &GroupParams) -> AffineHull {
        AffineHull::from_parts(params, params.zero(), (0..params.d).map(|i| params.unit(i).0).collect())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn rows(&self) -> Vec<Vec<u32>> {
        self.basis.iter().map(|b| b.0.clone()).collect()
    }

    pub fn contains(&self, params: &GroupParams, x: &GroupElement) -> bool {
        let diff = params.sub(x, &self.basepoint);
        if self.pivots.len() == self.basis.len() {
            return linalg::in_span(&diff.0, &self.rows(), &self.pivots, params.p);
        }
        // deserialized: the basis is in echelon form, so pivots are leading entries
        let pivots: Vec<usize> = self.basis.iter().map(|b| b.0.iter().position(|&c| c != 0).unwrap_or(0)).collect();
        linalg::in_span(&diff.0, &self.rows(), &pivots, params.p)
    }

    /// True iff the linear part of `xi` is not constant along the hull.
    pub fn is_nonconstant(&self, p: u32, linear: &[u32]) -> bool {
        self.basis.iter().any(|b| linalg::dot(linear, &b.0, p) != 0)
    }

    /// Lexicographically smallest point (the stored basepoint).
    pub fn lex_min(&self) -> &GroupElement {
        &self.basepoint
    }

    /// Intersection with the hyperplane `<normal, x> = 0`.
    pub fn intersect_hyperplane(&self, params: &GroupParams, normal: &[u32]) -> Option<AffineHull> {
        let p = params.p;
        let at_base = linalg::dot(normal, &self.basepoint.0, p);
        let dots: Vec<u32> = self.basis.iter().map(|b| linalg::dot(normal, &b.0, p)).collect();
        let Some(j0) = dots.iter().position(|&v| v != 0) else {
            return (at_base == 0).then(|| self.clone());
        };
        let inv = linalg::inv_mod(dots[j0], p);
        let mut base = self.basepoint.0.clone();
        linalg::sub_scaled(&mut base, &self.basis[j0].0, (at_base as u64 * inv as u64 % p as u64) as u32, p);
        let dirs = self
            .basis
            .iter()
            .zip(&dots)
            .enumerate()
            .filter(|&(j, _)| j != j0)
            .map(|(_, (b, &dv))| {
                let mut v = b.0.clone();
                linalg::sub_scaled(&mut v, &self.basis[j0].0, (dv as u64 * inv as u64 % p as u64) as u32, p);
                v
            })
            .collect();
        Some(AffineHull::from_parts(params, GroupElement(base), dirs))
    }

    pub fn points(&self, params: &GroupParams) -> Vec<GroupElement> {
        let k = self.dim();
        let coeffs = GroupParams { p: params.p, d: k.max(1) };
        if k == 0 {
            return vec![self.basepoint.clone()];
        }
        coeffs
            .elements_lex()
            .map(|c| {
                let mut x = self.basepoint.clone();
                for (t, b) in c.0.iter().zip(&self.basis) {
                    x = params.add(&x, &params.scale(b, *t as u64));
                }
                x
            })
            .collect()
    }
}

pub fn affine_hull(params: &GroupParams, x: &GroupMultiset) -> Result<AffineHull> {
    let mut it = x.iter();
    let (base, _) = it.next().ok_or(Error::EmptyInput)?;
    let dirs = it.map(|(e, _)| params.sub(e, base).0).collect();
    Ok(AffineHull::from_parts(params, base.clone(), dirs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(p: u32, d: usize) -> GroupParams {
        GroupParams::new(p, d).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GroupParams::new(2, 1).is_err());
        assert!(GroupParams::new(9, 1).is_err());
        assert!(GroupParams::new(7, 0).is_err());
        assert!(GroupParams::new(7, 7).is_err());
        assert!(matches!(GroupParams::new(101, 4), Err(Error::StateBudget { .. })));
        assert!(GroupParams::with_cap(101, 4, u64::MAX).is_ok());
    }

    #[test]
    fn eval_examples() {
        let g = gp(7, 2);
        let x = GroupElement(vec![3, 5]);
        assert_eq!(LinearFunctional::new(0, vec![1, 0]).eval(&g, &x).unwrap(), 3);
        assert_eq!(LinearFunctional::new(2, vec![0, 0]).eval(&g, &x).unwrap(), 2);
        let y = GroupElement(vec![4, 5]);
        assert_eq!(LinearFunctional::new(1, vec![2, 3]).eval(&g, &y).unwrap(), 3);
        assert!(LinearFunctional::new(0, vec![1]).eval(&g, &x).is_err());
    }

    #[test]
    fn tube_membership() {
        let g = gp(7, 2);
        let xi = LinearFunctional::coordinate(&g, 0);
        let k1 = SymmetricInterval::new(1);
        assert!(in_tube_set(&g, &GroupElement(vec![6, 0]), &xi, k1).unwrap());
        assert!(!in_tube_set(&g, &GroupElement(vec![3, 0]), &xi, k1).unwrap());
        let big = SymmetricInterval::new(3);
        assert!(g.elements_lex().all(|x| in_tube_set(&g, &x, &xi, big).unwrap()));
    }

    #[test]
    fn hull_examples() {
        let g = gp(5, 2);
        let single = GroupMultiset::from_elements([GroupElement(vec![1, 1])]);
        let h = affine_hull(&g, &single).unwrap();
        assert_eq!(h.dim(), 0);
        assert_eq!(h.basepoint, GroupElement(vec![1, 1]));
        let line = GroupMultiset::from_elements((0..3).map(|t| GroupElement(vec![0, t])));
        let h = affine_hull(&g, &line).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.basis, vec![GroupElement(vec![0, 1])]);
        assert!(affine_hull(&g, &GroupMultiset::new()).is_err());
    }

    #[test]
    fn coordinate_changes() {
        let g = gp(5, 2);
        let x = GroupMultiset::from_elements([GroupElement(vec![1, 2]), GroupElement(vec![3, 0])]);
        let id = AffineIso::identity(&g);
        assert_eq!(change_coords(&g, &x, &id).unwrap(), x);
        let v = GroupElement(vec![2, 4]);
        let t = AffineIso::translation(&g, v.clone());
        let zero = GroupMultiset::from_elements([g.zero()]);
        assert_eq!(change_coords(&g, &zero, &t).unwrap(), GroupMultiset::from_elements([v]));
        let swap = AffineIso::new(&g, vec![vec![0, 1], vec![1, 0]], g.zero()).unwrap();
        let swapped = change_coords(&g, &x, &swap).unwrap();
        assert_eq!(swapped.len(), 2);
        assert!(swapped.contains(&GroupElement(vec![2, 1])));
        assert!(AffineIso::new(&g, vec![vec![1, 2], vec![2, 4]], g.zero()).is_err());
    }

    #[test]
    fn canonical_functional_count() {
        let g = gp(3, 2);
        let all = canonical_functionals(&g);
        let nonconst = all.iter().filter(|f| !f.is_constant()).count();
        assert_eq!(nonconst, (9 - 1) / (3 - 1) * 3);
        assert_eq!(all.len() - nonconst, 3);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
        // every non-constant functional is a unique nonzero multiple of a canonical one
        let mut seen = std::collections::BTreeSet::new();
        for a0 in 0..3 {
            for lin in g.elements_lex().skip(1) {
                seen.insert(LinearFunctional::new(a0, lin.0).canonical(3));
            }
        }
        assert_eq!(seen.len(), nonconst);
    }

    #[test]
    fn hyperplane_intersection() {
        let g = gp(31, 2);
        let line = AffineHull::from_parts(&g, GroupElement(vec![3, 0]), vec![vec![0, 1]]);
        let hit = line.intersect_hyperplane(&g, &[1, 1]).unwrap();
        assert_eq!(hit.dim(), 0);
        assert_eq!(hit.basepoint, GroupElement(vec![3, 28]));
        assert!(line.intersect_hyperplane(&g, &[1, 0]).is_none());
    }

    #[test]
    fn index_round_trip() {
        let g = gp(5, 3);
        for i in 0..125 {
            assert_eq!(g.index(&g.from_index(i)), i);
        }
        assert_eq!(g.elements_lex().count(), 125);
    }
}
