use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::{Attribute, RlParams, NUM_ATTRIBUTES};
use crate::rlws::{ActionSet, AttributeSetting, RlwsConfig};
use crate::seed::mix64;

/// Bucket counts a non-boolean attribute gene can take.
pub const BUCKET_OPTIONS: [usize; 3] = [2, 4, 8];

pub const NUM_PARAM_GENES: usize = 5;
pub const GENE_COUNT: usize = NUM_ATTRIBUTES + NUM_PARAM_GENES;

pub const PARAM_NAMES: [&str; NUM_PARAM_GENES] = ["alpha", "epsilon", "gamma", "reward", "penalty"];

/// Candidate values of the five RL parameter genes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Palettes {
    pub alpha: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
    pub reward: Vec<f64>,
    pub penalty: Vec<f64>,
}

impl Default for Palettes {
    fn default() -> Self {
        Palettes {
            alpha: vec![0.005, 0.01, 0.05, 0.09, 0.2],
            epsilon: vec![0.0, 0.01, 0.04, 0.1, 0.2],
            gamma: vec![0.5, 0.8, 0.9, 0.95, 0.999],
            reward: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            penalty: vec![-1.0, -0.5, 0.0, 0.25, 0.5],
        }
    }
}

impl Palettes {
    pub fn param(&self, i: usize) -> &[f64] {
        match i {
            0 => &self.alpha,
            1 => &self.epsilon,
            2 => &self.gamma,
            3 => &self.reward,
            4 => &self.penalty,
            _ => panic!("parameter gene {i} out of range"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            let p = self.param(i);
            if p.is_empty() || p.len() > u8::MAX as usize {
                return Err(Error::Config(format!("palette `{name}` needs between 1 and 255 values")));
            }
        }
        for &alpha in &self.alpha {
            for &epsilon in &self.epsilon {
                for &gamma in &self.gamma {
                    RlParams {
                        alpha,
                        epsilon,
                        gamma,
                        ..RlParams::default()
                    }
                    .validate()?;
                }
            }
        }
        if self.reward.iter().chain(&self.penalty).any(|v| !v.is_finite()) {
            return Err(Error::Config("reward and penalty palettes must be finite".into()));
        }
        Ok(())
    }

    /// Number of values gene `locus` can take.
    pub fn options(&self, locus: usize) -> usize {
        if locus < NUM_ATTRIBUTES {
            if Attribute::ALL[locus].is_boolean() {
                2
            } else {
                BUCKET_OPTIONS.len() + 1
            }
        } else {
            self.param(locus - NUM_ATTRIBUTES).len()
        }
    }
}

/// log2 of the number of distinct genomes.
pub fn log2_space_size(palettes: &Palettes) -> f64 {
    (0..GENE_COUNT).map(|l| (palettes.options(l) as f64).log2()).sum()
}

/// An encoded RLWS design. Attribute genes hold 0 for "excluded" or
/// `1 + index into BUCKET_OPTIONS` (booleans: 1 = two buckets); parameter
/// genes hold palette indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Genome {
    pub genes: Vec<u8>,
}

impl Genome {
    pub fn random<R: Rng + ?Sized>(palettes: &Palettes, rng: &mut R) -> Genome {
        let genes = (0..GENE_COUNT)
            .map(|l| rng.gen_range(0..palettes.options(l)) as u8)
            .collect();
        let mut g = Genome { genes };
        g.repair(palettes, rng);
        g
    }

    pub fn num_attributes(&self) -> usize {
        self.genes[..NUM_ATTRIBUTES].iter().filter(|&&g| g != 0).count()
    }

    /// Ensures at least one attribute is included by switching on a uniformly
    /// chosen attribute with a uniformly chosen bucket count. Returns whether
    /// anything changed.
    pub fn repair<R: Rng + ?Sized>(&mut self, palettes: &Palettes, rng: &mut R) -> bool {
        if self.num_attributes() > 0 {
            return false;
        }
        let locus = rng.gen_range(0..NUM_ATTRIBUTES);
        self.genes[locus] = rng.gen_range(1..palettes.options(locus)) as u8;
        true
    }

    /// Included attributes and their bucket counts, in table order.
    pub fn attributes(&self) -> Vec<(Attribute, usize)> {
        Attribute::ALL
            .iter()
            .zip(&self.genes)
            .filter(|(_, &g)| g != 0)
            .map(|(&a, &g)| (a, if a.is_boolean() { 2 } else { BUCKET_OPTIONS[g as usize - 1] }))
            .collect()
    }

    pub fn params(&self, palettes: &Palettes) -> RlParams {
        let v = |i: usize| palettes.param(i)[self.genes[NUM_ATTRIBUTES + i] as usize];
        RlParams {
            alpha: v(0),
            epsilon: v(1),
            gamma: v(2),
            reward: v(3),
            penalty: v(4),
            ..RlParams::default()
        }
    }

    pub fn decode(&self, palettes: &Palettes, actions: ActionSet, decision_interval: u32) -> RlwsConfig {
        RlwsConfig {
            actions,
            params: self.params(palettes),
            attributes: self
                .attributes()
                .into_iter()
                .map(|(a, b)| AttributeSetting::new(a, b))
                .collect(),
            decision_interval,
            record_decisions: false,
        }
    }

    pub fn validate(&self, palettes: &Palettes) -> Result<()> {
        if self.genes.len() != GENE_COUNT {
            return Err(Error::Config(format!(
                "genome has {} genes, expected {GENE_COUNT}",
                self.genes.len()
            )));
        }
        if let Some(l) = (0..GENE_COUNT).find(|&l| self.genes[l] as usize >= palettes.options(l)) {
            return Err(Error::Config(format!("gene {l} holds out-of-range value {}", self.genes[l])));
        }
        if self.num_attributes() == 0 {
            return Err(Error::Config("genome includes no attribute".into()));
        }
        Ok(())
    }

    /// Stable 64-bit identifier.
    pub fn hash64(&self) -> u64 {
        self.genes
            .iter()
            .fold(0x243F_6A88_85A3_08D3, |h, &g| mix64(h ^ g as u64))
    }

    /// Human-readable decoding, e.g. `L1MP:8 GNMIE:4 | alpha=0.09 ...`.
    pub fn summary(&self, palettes: &Palettes) -> String {
        let attrs: Vec<String> = self
            .attributes()
            .iter()
            .map(|(a, b)| format!("{}:{b}", a.symbol()))
            .collect();
        let p = self.params(palettes);
        format!(
            "{} | alpha={} epsilon={} gamma={} reward={} penalty={}",
            attrs.join(" "),
            p.alpha,
            p.epsilon,
            p.gamma,
            p.reward,
            p.penalty
        )
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (attrs, params) = self.genes.split_at(NUM_ATTRIBUTES.min(self.genes.len()));
        for g in attrs {
            write!(f, "{g}")?;
        }
        f.write_str("-")?;
        for (i, g) in params.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (attrs, params) = s.split_once('-').ok_or_else(|| format!("genome `{s}` lacks the `-` separator"))?;
        let mut genes: Vec<u8> = attrs
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| format!("invalid attribute gene `{c}`")))
            .collect::<std::result::Result<_, _>>()?;
        for p in params.split('.').filter(|p| !p.is_empty()) {
            genes.push(p.parse().map_err(|_| format!("invalid parameter gene `{p}`"))?);
        }
        if genes.len() != GENE_COUNT {
            return Err(format!("genome `{s}` has {} genes, expected {GENE_COUNT}", genes.len()));
        }
        Ok(Genome { genes })
    }
}

impl TryFrom<String> for Genome {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Genome> for String {
    fn from(g: Genome) -> String {
        g.to_string()
    }
}

/// Single-point splice: `c1` takes `p1[..point]` and `p2[point..]`, `c2` the
/// reverse.
pub fn splice(p1: &Genome, p2: &Genome, point: usize) -> (Genome, Genome) {
    assert!(
        point >= 1 && point < p1.genes.len() && p1.genes.len() == p2.genes.len(),
        "crossover point {point} out of range"
    );
    let join = |a: &Genome, b: &Genome| Genome {
        genes: a.genes[..point].iter().chain(&b.genes[point..]).copied().collect(),
    };
    (join(p1, p2), join(p2, p1))
}

/// Splice followed by validity repair of both children.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Genome,
    p2: &Genome,
    point: usize,
    palettes: &Palettes,
    rng: &mut R,
) -> (Genome, Genome) {
    let (mut c1, mut c2) = splice(p1, p2, point);
    c1.repair(palettes, rng);
    c2.repair(palettes, rng);
    (c1, c2)
}

/// `clamp(c / mean(parent fitness), 0, p_max)`; non-positive mean fitness maps
/// to `p_max`.
pub fn mutation_probability(parent_fitnesses: &[f64], c: f64, p_max: f64) -> f64 {
    let mean = parent_fitnesses.iter().sum::<f64>() / parent_fitnesses.len().max(1) as f64;
    if mean <= 0.0 || !mean.is_finite() {
        return p_max;
    }
    (c / mean).clamp(0.0, p_max)
}

/// With probability `p`, re-draws one uniformly chosen gene to a different
/// value. Loci whose every alternative would leave no attribute included are
/// skipped. Returns the mutated locus.
pub fn mutate<R: Rng + ?Sized>(child: &mut Genome, p: f64, palettes: &Palettes, rng: &mut R) -> Option<usize> {
    if !(rng.gen::<f64>() < p) {
        return None;
    }
    let sole = (child.num_attributes() == 1).then(|| child.genes[..NUM_ATTRIBUTES].iter().position(|&g| g != 0));
    let mutable: Vec<usize> = (0..GENE_COUNT)
        .filter(|&l| palettes.options(l) > 1)
        .filter(|&l| !(sole == Some(Some(l)) && palettes.options(l) == 2))
        .collect();
    let locus = mutable[rng.gen_range(0..mutable.len())];
    let current = child.genes[locus] as usize;
    let lo = usize::from(sole == Some(Some(locus)));
    let choices: Vec<usize> = (lo..palettes.options(locus)).filter(|&v| v != current).collect();
    child.genes[locus] = choices[rng.gen_range(0..choices.len())] as u8;
    Some(locus)
}

/// Roulette-wheel selection: index `i` with probability `f_i / Σf`, uniform
/// when every fitness is zero.
pub fn select_parent<R: Rng + ?Sized>(fitnesses: &[f64], rng: &mut R) -> usize {
    assert!(!fitnesses.is_empty(), "cannot select from an empty population");
    let total: f64 = fitnesses.iter().map(|f| f.max(0.0)).sum();
    if !(total > 0.0) || !total.is_finite() {
        return rng.gen_range(0..fitnesses.len());
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, f) in fitnesses.iter().enumerate() {
        let f = f.max(0.0);
        if x < f {
            return i;
        }
        x -= f;
    }
    fitnesses.iter().rposition(|&f| f > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn space_size_near_two_to_the_seventy() {
        let l = log2_space_size(&Palettes::default());
        assert!((l - (9.0 + 50.0 + 5.0 * 5f64.log2())).abs() < 1e-9);
        assert!((69.0..=72.0).contains(&l));
    }

    #[test]
    fn text_round_trip_and_decode() {
        let p = Palettes::default();
        let mut rng = seed::rng(3);
        for _ in 0..50 {
            let g = Genome::random(&p, &mut rng);
            g.validate(&p).unwrap();
            assert_eq!(g.to_string().parse::<Genome>().unwrap(), g);
            g.decode(&p, ActionSet::Pipeline, 1).validate().unwrap();
        }
    }

    #[test]
    fn repair_includes_one_attribute() {
        let p = Palettes::default();
        let mut g = Genome {
            genes: vec![0; GENE_COUNT],
        };
        assert!(g.repair(&p, &mut seed::rng(1)));
        assert_eq!(g.num_attributes(), 1);
        assert!(!g.repair(&p, &mut seed::rng(1)));
    }

    #[test]
    fn crossover_of_identical_parents() {
        let p = Palettes::default();
        let mut rng = seed::rng(9);
        let a = Genome::random(&p, &mut rng);
        let (c1, c2) = crossover(&a, &a, 17, &p, &mut rng);
        assert_eq!(c1, a);
        assert_eq!(c2, a);
    }

    #[test]
    fn last_point_swaps_only_last_gene() {
        let p1 = Genome {
            genes: vec![1; GENE_COUNT],
        };
        let p2 = Genome {
            genes: vec![0; GENE_COUNT],
        };
        let (c1, _) = splice(&p1, &p2, GENE_COUNT - 1);
        let diff: Vec<usize> = (0..GENE_COUNT).filter(|&i| c1.genes[i] != p1.genes[i]).collect();
        assert_eq!(diff, vec![GENE_COUNT - 1]);
    }

    #[test]
    #[should_panic]
    fn point_zero_rejected() {
        let g = Genome {
            genes: vec![1; GENE_COUNT],
        };
        splice(&g, &g, 0);
    }

    #[test]
    fn mutation_extremes() {
        let p = Palettes::default();
        let mut rng = seed::rng(5);
        for _ in 0..200 {
            let g = Genome::random(&p, &mut rng);
            let mut c = g.clone();
            assert_eq!(mutate(&mut c, 0.0, &p, &mut rng), None);
            assert_eq!(c, g);
            mutate(&mut c, 1.0, &p, &mut rng).unwrap();
            let diff = (0..GENE_COUNT).filter(|&i| c.genes[i] != g.genes[i]).count();
            assert_eq!(diff, 1);
            c.validate(&p).unwrap();
        }
        assert_eq!(mutation_probability(&[1.0, 1.0], 0.02, 0.25), 0.02);
        assert_eq!(mutation_probability(&[0.01], 0.02, 0.25), 0.25);
        assert_eq!(mutation_probability(&[0.0], 0.02, 0.25), 0.25);
    }

    #[test]
    fn roulette_degenerate_cases() {
        let mut rng = seed::rng(2);
        for _ in 0..100 {
            assert_eq!(select_parent(&[0.0, 5.0, 0.0], &mut rng), 1);
        }
        let mut seen = [false; 3];
        for _ in 0..100 {
            seen[select_parent(&[0.0, 0.0, 0.0], &mut rng)] = true;
        }
        assert_eq!(seen, [true; 3]);
    }
}
