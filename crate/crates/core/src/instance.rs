//! Instance files and seeded generators.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupMultiset, GroupParams};
use crate::rng;

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub schema_version: u32,
    pub p: u32,
    pub d: usize,
    pub points: Vec<GroupElement>,
}

impl Instance {
    pub fn new(params: &GroupParams, points: Vec<GroupElement>) -> Instance {
        Instance { schema_version: INSTANCE_SCHEMA_VERSION, p: params.p, d: params.d, points }
    }

    pub fn params(&self) -> Result<GroupParams> {
        GroupParams::new(self.p, self.d)
    }

    pub fn validate(&self) -> Result<GroupParams> {
        if self.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported instance schema version {}", self.schema_version)));
        }
        let params = self.params()?;
        for x in &self.points {
            params.check(x)?;
        }
        Ok(params)
    }

    pub fn multiset(&self) -> GroupMultiset {
        GroupMultiset::from_elements(self.points.iter().cloned())
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let inst: Instance = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Points given as signed integer coordinates.
    Explicit { points: Vec<Vec<i64>> },
    /// Uniform distinct points, zero excluded unless asked for.
    RandomCloud {
        size: usize,
        #[serde(default)]
        include_zero: bool,
    },
    /// Random points on the hyperplanes x_0 = y for each label y, plus an
    /// optional uniform cloud.
    FiberUnion {
        labels: Vec<i64>,
        fiber_size: usize,
        #[serde(default)]
        cloud: usize,
    },
    /// Every point of [-radius, radius]^d.
    Box { radius: u32 },
    /// Random points squeezed into the slab |x_0| <= width.
    AdversarialThin { size: usize, width: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub p: u32,
    pub d: usize,
    pub seed: u64,
    pub generator: Generator,
    /// Sample with replacement instead of producing a set.
    #[serde(default)]
    pub multiset: bool,
}

fn random_point<R: Rng>(params: &GroupParams, rng: &mut R) -> GroupElement {
    GroupElement((0..params.d).map(|_| rng.random_range(0..params.p)).collect())
}

/// Draws `size` points with `draw`, distinct unless `multiset`.
fn collect<R: Rng, F: FnMut(&mut R) -> GroupElement>(
    size: usize,
    available: u64,
    multiset: bool,
    rng: &mut R,
    mut draw: F,
) -> Result<Vec<GroupElement>> {
    if !multiset && size as u64 > available {
        return Err(Error::InvalidParams(format!("cannot draw {size} distinct points from {available}")));
    }
    if multiset {
        return Ok((0..size).map(|_| draw(rng)).collect());
    }
    let mut seen = BTreeSet::new();
    while seen.len() < size {
        seen.insert(draw(rng));
    }
    Ok(seen.into_iter().collect())
}

impl InstanceSpec {
    pub fn generate(&self) -> Result<Instance> {
        let params = GroupParams::new(self.p, self.d)?;
        let mut rng = rng::seeded(self.seed);
        let states = params.states();
        let points = match &self.generator {
            Generator::Explicit { points } => points.iter().map(|c| params.element(c)).collect::<Result<Vec<_>>>()?,
            Generator::RandomCloud { size, include_zero } => {
                let available = if *include_zero { states } else { states - 1 };
                let zero = params.zero();
                collect(*size, available, self.multiset, &mut rng, |r| loop {
                    let x = random_point(&params, r);
                    if *include_zero || x != zero {
                        break x;
                    }
                })?
            }
            Generator::FiberUnion { labels, fiber_size, cloud } => {
                let mut out = BTreeSet::new();
                let mut all = Vec::new();
                for &y in labels {
                    let head = params.reduce(y);
                    let fiber = collect(*fiber_size, states / params.p as u64, self.multiset, &mut rng, |r| {
                        let mut x = random_point(&params, r);
                        x.0[0] = head;
                        x
                    })?;
                    all.extend(fiber);
                }
                let extra = collect(*cloud, states, true, &mut rng, |r| random_point(&params, r))?;
                all.extend(extra);
                if self.multiset {
                    all
                } else {
                    out.extend(all);
                    out.into_iter().collect()
                }
            }
            Generator::Box { radius } => {
                let r = (*radius).min(params.p / 2) as i64;
                let side = (2 * r + 1) as usize;
                let mut pts = Vec::new();
                for idx in 0..side.pow(params.d as u32) {
                    let mut rest = idx;
                    let coords: Vec<i64> = (0..params.d)
                        .map(|_| {
                            let c = (rest % side) as i64 - r;
                            rest /= side;
                            c
                        })
                        .collect();
                    pts.push(params.element(&coords)?);
                }
                pts.sort();
                pts
            }
            Generator::AdversarialThin { size, width } => {
                let w = (*width).min(params.p / 2) as i64;
                let available = (2 * w as u64 + 1) * (states / params.p as u64);
                collect(*size, available, self.multiset, &mut rng, |r| {
                    let mut x = random_point(&params, r);
                    x.0[0] = params.reduce(r.random_range(-w..=w));
                    x
                })?
            }
        };
        Ok(Instance::new(&params, points))
    }
}
