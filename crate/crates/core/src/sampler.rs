//! Furthest point sampling over pose collections using aligned MPJPE.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{mpjpe, yaw_align, Pose, Skeleton};

pub type FrameId = String;

/// Below this many candidates the min-distance update runs sequentially.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone)]
pub struct PoseCollection {
    skeleton: Skeleton,
    frames: Vec<(FrameId, Pose)>,
}

impl PoseCollection {
    pub fn new(skeleton: Skeleton, frames: Vec<(FrameId, Pose)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(frames.len());
        for (id, pose) in &frames {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            pose.validate(&skeleton)
                .map_err(|e| Error::invalid(format!("frame `{id}`: {e}")))?;
        }
        Ok(PoseCollection { skeleton, frames })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn frames(&self) -> &[(FrameId, Pose)] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.frames.iter().position(|(f, _)| f == id)
    }
}

/// How poses are normalized before distances are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Root translation removed, then facing turned toward +Z.
    #[default]
    Yaw,
    /// Raw joint positions.
    None,
}

pub fn aligned_poses(collection: &PoseCollection, alignment: Alignment) -> Result<Vec<Pose>> {
    match alignment {
        Alignment::None => Ok(collection.frames.iter().map(|(_, p)| p.clone()).collect()),
        Alignment::Yaw => collection
            .frames
            .par_iter()
            .map(|(_, p)| yaw_align(p, &collection.skeleton).map(|a| a.pose))
            .collect(),
    }
}

/// Greedy furthest point sampling with yaw alignment.
pub fn fps_select(collection: &PoseCollection, n: usize, start: &str) -> Result<Vec<FrameId>> {
    fps_select_with(collection, n, start, Alignment::Yaw)
}

/// Picks `start`, then repeatedly the frame whose distance to the nearest
/// already-picked frame is largest. Ties go to the lowest frame id.
pub fn fps_select_with(
    collection: &PoseCollection,
    n: usize,
    start: &str,
    alignment: Alignment,
) -> Result<Vec<FrameId>> {
    let poses = aligned_poses(collection, alignment)?;
    let picks = fps_indices(collection, &poses, n, start)?;
    Ok(picks
        .into_iter()
        .map(|i| collection.frames[i].0.clone())
        .collect())
}

fn fps_indices(
    collection: &PoseCollection,
    poses: &[Pose],
    n: usize,
    start: &str,
) -> Result<Vec<usize>> {
    let population = collection.len();
    if n == 0 || n > population {
        return Err(Error::invalid(format!(
            "cannot select {n} frames from a population of {population}"
        )));
    }
    let first = collection
        .position(start)
        .ok_or_else(|| Error::invalid(format!("unknown start frame `{start}`")))?;

    let mut min_dist = vec![f64::INFINITY; population];
    let mut selected = vec![false; population];
    let mut picks = Vec::with_capacity(n);
    let mut current = first;

    loop {
        selected[current] = true;
        picks.push(current);
        if picks.len() == n {
            break;
        }

        let pivot = &poses[current];
        let update = |(d, p): (&mut f64, &Pose)| {
            let dist = mpjpe(pivot, p).expect("poses share a skeleton");
            if dist < *d {
                *d = dist;
            }
        };
        if population >= PARALLEL_THRESHOLD {
            min_dist
                .par_iter_mut()
                .zip(poses.par_iter())
                .for_each(update);
        } else {
            min_dist.iter_mut().zip(poses.iter()).for_each(update);
        }

        let mut best: Option<usize> = None;
        for i in 0..population {
            if selected[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (di, db) = (min_dist[i], min_dist[b]);
                    if di > db || (di == db && collection.frames[i].0 < collection.frames[b].0) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        current = best.expect("n <= population leaves a candidate");
    }
    Ok(picks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    Explicit(Vec<FrameId>),
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub fraction: f64,
    pub subset_count: usize,
    pub start: StartPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subset {
    pub start: FrameId,
    pub ids: Vec<FrameId>,
}

impl SubsetSpec {
    /// Number of frames per subset for a population.
    pub fn subset_size(&self, population: usize) -> Result<usize> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "fraction {} is outside (0, 1]",
                self.fraction
            )));
        }
        if self.fraction * (population as f64) < 1.0 {
            return Err(Error::invalid(format!(
                "fraction {} of {population} frames selects nothing",
                self.fraction
            )));
        }
        Ok(((self.fraction * population as f64).round() as usize).clamp(1, population))
    }
}

/// `count` distinct frame ids drawn uniformly with the seed.
///
/// Panics if `count` exceeds the population.
pub fn seeded_starts(collection: &PoseCollection, count: usize, seed: u64) -> Vec<FrameId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, collection.len(), count)
        .into_iter()
        .map(|i| collection.frames[i].0.clone())
        .collect()
}

/// Runs one FPS per subset, each from a distinct start frame.
pub fn generate_subsets(
    collection: &PoseCollection,
    spec: &SubsetSpec,
    seed: u64,
) -> Result<Vec<Subset>> {
    let population = collection.len();
    let n = spec.subset_size(population)?;
    if spec.subset_count == 0 {
        return Err(Error::invalid("subset_count must be at least 1"));
    }
    if spec.subset_count > population {
        return Err(Error::invalid(format!(
            "{} subsets need distinct starts but only {population} frames exist",
            spec.subset_count
        )));
    }

    let starts: Vec<FrameId> = match &spec.start {
        StartPolicy::Explicit(ids) => {
            if ids.len() != spec.subset_count {
                return Err(Error::LengthMismatch {
                    what: "explicit start frames",
                    expected: spec.subset_count,
                    actual: ids.len(),
                });
            }
            let distinct: HashSet<&FrameId> = ids.iter().collect();
            if distinct.len() != ids.len() {
                return Err(Error::invalid("explicit start frames must be distinct"));
            }
            ids.clone()
        }
        StartPolicy::SeededRandom => seeded_starts(collection, spec.subset_count, seed),
    };

    let poses = aligned_poses(collection, Alignment::Yaw)?;
    starts
        .par_iter()
        .map(|start| {
            let picks = fps_indices(collection, &poses, n, start)?;
            Ok(Subset {
                start: start.clone(),
                ids: picks
                    .into_iter()
                    .map(|i| collection.frames[i].0.clone())
                    .collect(),
            })
        })
        .collect()
}
