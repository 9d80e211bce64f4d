//! Seeded interleaving of several datasets at fixed integer ratios.
//!
//! One period of `sum(weights)` slots holds each source exactly `weight`
//! times in a seeded order, and the stream repeats that period. Every
//! window of `sum(weights)` consecutive items therefore contains each
//! source exactly `weight` times, wherever it starts.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixSource {
    pub name: String,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixSpec {
    pub sources: Vec<MixSource>,
    pub total: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::invalid("mix needs at least one source"));
        }
        if let Some(s) = self.sources.iter().find(|s| s.weight == 0) {
            return Err(Error::invalid(format!("source {} has weight 0", s.name)));
        }
        let mut names: Vec<&str> = self.sources.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateId(w[0].to_string()));
        }
        Ok(())
    }

    pub fn period(&self) -> usize {
        self.sources.iter().map(|s| s.weight).sum()
    }
}

/// One output item: record `index` of source `source`, drawn during pass
/// `wrap` over that source (0 for the first pass).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixDraw {
    pub source: usize,
    pub index: usize,
    pub wrap: usize,
}

/// Plans the interleaving given each source's record count. Within a
/// source records are drawn in a seeded permutation; when it runs out a
/// fresh permutation starts and `wrap` increments.
pub fn mix_plan(spec: &MixSpec, sizes: &[usize]) -> Result<Vec<MixDraw>> {
    spec.validate()?;
    if sizes.len() != spec.sources.len() {
        return Err(Error::LengthMismatch {
            what: "mix sources",
            expected: spec.sources.len(),
            actual: sizes.len(),
        });
    }
    if let Some(i) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!(
            "source {} is empty",
            spec.sources[i].name
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pattern: Vec<usize> = spec
        .sources
        .iter()
        .enumerate()
        .flat_map(|(i, s)| std::iter::repeat_n(i, s.weight))
        .collect();
    pattern.shuffle(&mut rng);

    struct Cursor {
        order: Vec<usize>,
        pos: usize,
        wrap: usize,
    }
    let mut cursors: Vec<Cursor> = sizes
        .iter()
        .map(|&n| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            Cursor {
                order,
                pos: 0,
                wrap: 0,
            }
        })
        .collect();

    let mut out = Vec::with_capacity(spec.total);
    for k in 0..spec.total {
        let source = pattern[k % pattern.len()];
        let c = &mut cursors[source];
        if c.pos == c.order.len() {
            c.order.shuffle(&mut rng);
            c.pos = 0;
            c.wrap += 1;
        }
        out.push(MixDraw {
            source,
            index: c.order[c.pos],
            wrap: c.wrap,
        });
        c.pos += 1;
    }
    Ok(out)
}

/// `mix_plan` applied to in-memory sources.
pub fn mix_datasets<'a, T>(spec: &MixSpec, sources: &'a [Vec<T>]) -> Result<Vec<(MixDraw, &'a T)>> {
    let sizes: Vec<usize> = sources.iter().map(Vec::len).collect();
    Ok(mix_plan(spec, &sizes)?
        .into_iter()
        .map(|d| (d, &sources[d.source][d.index]))
        .collect())
}
