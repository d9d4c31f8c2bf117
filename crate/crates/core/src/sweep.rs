//! Exhaustive-or-sampled quantification over products of vector domains.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::gf2::{CutoffCoset, FamilyTag, Gf2Vec};

/// Quantified spaces at or below this many points are swept exhaustively.
pub const DEFAULT_EXHAUSTIVE_LIMIT: u128 = 1 << 16;
/// Samples drawn per property once the space exceeds the exhaustive limit.
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Exhaustive,
    Sampled,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Exhaustive => "exhaustive",
            SweepMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub exhaustive_limit: u128,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn mode_for(&self, space: u128) -> SweepMode {
        if space <= self.exhaustive_limit {
            SweepMode::Exhaustive
        } else {
            SweepMode::Sampled
        }
    }
}

/// Serializes a point count as a JSON number when it fits in `u64`, as a
/// decimal string otherwise.
pub fn serialize_points<S: serde::Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    match u64::try_from(*v) {
        Ok(x) => s.serialize_u64(x),
        Err(_) => s.serialize_str(&v.to_string()),
    }
}

/// `2^bits`, saturating.
pub fn pow2(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

/// A finite set of vectors with an indexing and a uniform sampler.
#[derive(Debug, Clone)]
pub enum VecDomain {
    /// Every vector of the family.
    All { family: FamilyTag, len: usize },
    /// The elements of a cutoff coset.
    Coset(CutoffCoset),
    /// Vectors supported below `cutoff`.
    Low {
        family: FamilyTag,
        len: usize,
        cutoff: usize,
    },
}

impl VecDomain {
    pub fn size(&self) -> u128 {
        match self {
            VecDomain::All { len, .. } => pow2(*len),
            VecDomain::Coset(c) => pow2(c.cutoff()),
            VecDomain::Low { cutoff, .. } => pow2(*cutoff),
        }
    }

    /// Only called with `index < size()`, which the exhaustive limit keeps
    /// below 2^128.
    pub fn nth(&self, index: u128) -> Gf2Vec {
        match self {
            VecDomain::All { family, len } => Gf2Vec::from_u128(*family, *len, index),
            VecDomain::Coset(c) => c.element(index),
            VecDomain::Low {
                family,
                len,
                cutoff,
            } => Gf2Vec::from_u128(*family, *len, index & (pow2(*cutoff).wrapping_sub(1))),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Gf2Vec {
        match self {
            VecDomain::All { family, len } => random_vec(*family, *len, *len, rng),
            VecDomain::Coset(c) => {
                let low = random_vec(c.rep().family(), c.len(), c.cutoff(), rng);
                c.rep().try_add(&low).expect("same family")
            }
            VecDomain::Low {
                family,
                len,
                cutoff,
            } => random_vec(*family, *len, *cutoff, rng),
        }
    }
}

/// Uniform vector with support below `free`.
pub fn random_vec(family: FamilyTag, len: usize, free: usize, rng: &mut impl Rng) -> Gf2Vec {
    let mut v = Gf2Vec::zeros(family, len);
    for i in 0..free.min(len) {
        if rng.gen::<bool>() {
            v.set(i, true);
        }
    }
    v
}

pub fn product_size(domains: &[VecDomain]) -> u128 {
    domains
        .iter()
        .fold(1u128, |acc, d| acc.saturating_mul(d.size()))
}

/// Outcome of one quantified property.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub mode: SweepMode,
    pub points: u128,
    pub failure: Option<String>,
}

/// Checks `check` on every tuple of every instance (exhaustive), or on
/// `cfg.samples` random (instance, tuple) pairs. Stops at the first failure.
pub fn sweep_instances<I>(
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
    instances: &[I],
    domains: impl Fn(&I) -> Vec<VecDomain>,
    mut check: impl FnMut(&I, &[Gf2Vec]) -> Result<(), String>,
) -> SweepOutcome {
    let doms: Vec<Vec<VecDomain>> = instances.iter().map(&domains).collect();
    let space = doms
        .iter()
        .fold(0u128, |acc, d| acc.saturating_add(product_size(d)));
    let mode = cfg.mode_for(space);
    let failure = match mode {
        SweepMode::Exhaustive => instances
            .iter()
            .zip(&doms)
            .find_map(|(inst, d)| odometer(d, |vals| check(inst, vals)).err()),
        SweepMode::Sampled => {
            let live: Vec<usize> = (0..instances.len())
                .filter(|&i| product_size(&doms[i]) > 0)
                .collect();
            let mut failure = None;
            if !live.is_empty() {
                for _ in 0..cfg.samples {
                    let i = live[rng.gen_range(0..live.len())];
                    let vals: Vec<Gf2Vec> = doms[i].iter().map(|d| d.sample(rng)).collect();
                    if let Err(w) = check(&instances[i], &vals) {
                        failure = Some(w);
                        break;
                    }
                }
            }
            failure
        }
    };
    SweepOutcome {
        mode,
        points: space,
        failure,
    }
}

/// Checks `check` on every index tuple of the box `dims` (last index
/// fastest), or on `cfg.samples` uniform tuples once the box exceeds the
/// exhaustive limit.
pub fn sweep_indices(
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
    dims: &[u128],
    mut check: impl FnMut(&[u128]) -> Result<(), String>,
) -> SweepOutcome {
    let space = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d));
    let mode = cfg.mode_for(space);
    let mut idx = vec![0u128; dims.len()];
    let failure = if space == 0 {
        None
    } else {
        match mode {
            SweepMode::Exhaustive => 'outer: loop {
                if let Err(w) = check(&idx) {
                    break Some(w);
                }
                let mut j = dims.len();
                loop {
                    if j == 0 {
                        break 'outer None;
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < dims[j] {
                        break;
                    }
                    idx[j] = 0;
                }
            },
            SweepMode::Sampled => (0..cfg.samples).find_map(|_| {
                for (i, &d) in idx.iter_mut().zip(dims) {
                    *i = rng.gen_range(0..d);
                }
                check(&idx).err()
            }),
        }
    };
    SweepOutcome {
        mode,
        points: space,
        failure,
    }
}

/// Runs `check` over the full product of `domains`, last domain fastest.
pub fn odometer(
    domains: &[VecDomain],
    mut check: impl FnMut(&[Gf2Vec]) -> Result<(), String>,
) -> Result<(), String> {
    let sizes: Vec<u128> = domains.iter().map(VecDomain::size).collect();
    if sizes.contains(&0) {
        return Ok(());
    }
    let mut idx = vec![0u128; domains.len()];
    let mut vals: Vec<Gf2Vec> = domains.iter().map(|d| d.nth(0)).collect();
    loop {
        check(&vals)?;
        let mut j = domains.len();
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < sizes[j] {
                vals[j] = domains[j].nth(idx[j]);
                break;
            }
            idx[j] = 0;
            vals[j] = domains[j].nth(0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn index_sweep_counts_and_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut n = 0;
        let out = sweep_indices(&SweepConfig::default(), &mut rng, &[3, 4, 5], |i| {
            assert!(i[0] < 3 && i[1] < 4 && i[2] < 5);
            n += 1;
            Ok(())
        });
        assert_eq!((out.mode, out.points, n), (SweepMode::Exhaustive, 60, 60));
        let cfg = SweepConfig { exhaustive_limit: 10, samples: 7, seed: 0 };
        let mut n = 0;
        let out = sweep_indices(&cfg, &mut rng, &[3, 4, 5], |_| {
            n += 1;
            Ok(())
        });
        assert_eq!((out.mode, n), (SweepMode::Sampled, 7));
        let out = sweep_indices(&cfg, &mut rng, &[3, 0], |_| Err("unreachable".into()));
        assert_eq!(out.failure, None);
    }

    #[test]
    fn odometer_visits_every_tuple_once() {
        let fam = FamilyTag::anonymous("t", 2);
        let doms = vec![
            VecDomain::All {
                family: fam,
                len: 2,
            },
            VecDomain::Low {
                family: fam,
                len: 2,
                cutoff: 1,
            },
        ];
        let mut seen = std::collections::BTreeSet::new();
        odometer(&doms, |v| {
            assert!(seen.insert((v[0].clone(), v[1].clone())));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn sampled_mode_above_limit() {
        let cfg = SweepConfig {
            exhaustive_limit: 4,
            samples: 10,
            seed: 1,
        };
        let fam = FamilyTag::anonymous("t", 3);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut calls = 0;
        let out = sweep_instances(
            &cfg,
            &mut rng,
            &[()],
            |_| vec![VecDomain::All { family: fam, len: 3 }],
            |_, _| {
                calls += 1;
                Ok(())
            },
        );
        assert_eq!(out.mode, SweepMode::Sampled);
        assert_eq!(out.points, 8);
        assert_eq!(calls, 10);
    }

    #[test]
    fn failure_stops_sweep() {
        let fam = FamilyTag::anonymous("t", 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = sweep_instances(
            &SweepConfig::default(),
            &mut rng,
            &[0u8, 1u8],
            |_| vec![VecDomain::All { family: fam, len: 3 }],
            |i, v| {
                if *i == 1 && v[0].count_ones() == 3 {
                    Err("found".into())
                } else {
                    Ok(())
                }
            },
        );
        assert_eq!(out.mode, SweepMode::Exhaustive);
        assert_eq!(out.failure.as_deref(), Some("found"));
    }
}
