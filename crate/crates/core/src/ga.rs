//! Binary-coded genetic algorithm baseline: roulette selection, single-point
//! crossover, per-bit mutation and elite re-injection.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{TitlMarsModel, VarKind};
use crate::solution::{Sense, Solution, SolveStats, SolveStatus};

pub const DEFAULT_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GaPreset {
    Grefenstette,
    Michalewicz,
}

impl GaPreset {
    pub const ALL: [GaPreset; 2] = [GaPreset::Grefenstette, GaPreset::Michalewicz];

    pub fn name(self) -> &'static str {
        match self {
            GaPreset::Grefenstette => "grefenstette",
            GaPreset::Michalewicz => "michalewicz",
        }
    }

    pub fn params(self, seed: u64) -> GaParams {
        let (population, generations, crossover, mutation) = match self {
            GaPreset::Grefenstette => (30, 300, 0.9, 0.01),
            GaPreset::Michalewicz => (50, 1000, 0.8, 0.15),
        };
        GaParams {
            population,
            generations,
            crossover,
            mutation,
            bits: DEFAULT_BITS,
            seed,
        }
    }
}

impl fmt::Display for GaPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grefenstette" => Ok(GaPreset::Grefenstette),
            "michalewicz" => Ok(GaPreset::Michalewicz),
            other => Err(Error::Config(format!(
                "unknown GA preset `{other}` (expected grefenstette or michalewicz)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub bits: u32,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaPreset::Grefenstette.params(0)
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::Config(format!(
                "population must be even and at least 2, got {}",
                self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover) || !(0.0..=1.0).contains(&self.mutation) {
            return Err(Error::Config("crossover and mutation rates must lie in [0, 1]".into()));
        }
        if !(1..=52).contains(&self.bits) {
            return Err(Error::Config(format!("bits per variable must be in 1..=52, got {}", self.bits)));
        }
        Ok(())
    }
}

/// Bit string, one `bool` per gene, variables concatenated most significant bit first.
pub type Chromosome = Vec<bool>;

/// Maps each `bits`-wide slice to `l + k (u - l) / (2^bits - 1)`; integer variables round and clamp.
pub fn decode(chrom: &[bool], lower: &[f64], upper: &[f64], kinds: &[VarKind], bits: u32) -> Vec<f64> {
    let b = bits as usize;
    debug_assert_eq!(chrom.len(), lower.len() * b);
    let denom = ((1u64 << bits) - 1) as f64;
    chrom
        .chunks(b)
        .enumerate()
        .map(|(v, slice)| {
            let k = slice.iter().fold(0u64, |acc, &bit| (acc << 1) | bit as u64);
            let x = lower[v] + k as f64 * (upper[v] - lower[v]) / denom;
            match kinds[v] {
                VarKind::Real => x.clamp(lower[v], upper[v]),
                VarKind::Integer => x.round().clamp(lower[v], upper[v]),
            }
        })
        .collect()
}

/// Roulette draw on fitness shifted so its minimum sits just above zero.
pub fn roulette<R: Rng + ?Sized>(fitness: &[f64], draws: usize, rng: &mut R) -> Vec<usize> {
    let min = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let mut cum = Vec::with_capacity(fitness.len());
    let mut total = 0.0;
    for f in fitness {
        total += f - min + 1e-12;
        cum.push(total);
    }
    (0..draws)
        .map(|_| {
            let r = rng.random::<f64>() * total;
            cum.partition_point(|&c| c <= r).min(fitness.len() - 1)
        })
        .collect()
}

/// Single-point crossover with probability `rate`, else the parents are copied.
pub fn crossover<R: Rng + ?Sized>(a: &[bool], b: &[bool], rate: f64, rng: &mut R) -> (Chromosome, Chromosome) {
    let mut c = a.to_vec();
    let mut d = b.to_vec();
    if a.len() > 1 && rng.random_bool(rate) {
        let point = rng.random_range(1..a.len());
        c[point..].copy_from_slice(&b[point..]);
        d[point..].copy_from_slice(&a[point..]);
    }
    (c, d)
}

/// Flips each bit independently with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(chrom: &mut [bool], rate: f64, rng: &mut R) {
    for bit in chrom.iter_mut() {
        if rng.random_bool(rate) {
            *bit = !*bit;
        }
    }
}

/// GA run result with the best-so-far value after initialisation and after each generation.
#[derive(Clone, Debug)]
pub struct GaRun {
    pub solution: Solution,
    pub trace: Vec<f64>,
}

/// Runs exactly `params.generations` generations and returns the best individual seen.
pub fn optimize(model: &TitlMarsModel, sense: Sense, params: &GaParams) -> Result<Solution> {
    optimize_traced(model, sense, params).map(|r| r.solution)
}

pub fn optimize_traced(model: &TitlMarsModel, sense: Sense, params: &GaParams) -> Result<GaRun> {
    params.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let len = model.dim() * params.bits as usize;
    let s = sense.to_min();
    let eval = |pop: &[Chromosome]| -> Vec<f64> {
        pop.par_iter()
            .map(|c| {
                let x = decode(c, model.lower(), model.upper(), model.kinds(), params.bits);
                -s * model.eval(&x)
            })
            .collect()
    };

    let mut pop: Vec<Chromosome> = (0..params.population)
        .map(|_| (0..len).map(|_| rng.random::<bool>()).collect())
        .collect();
    let mut fitness = eval(&pop);
    let mut evaluations = pop.len() as u64;
    let argmax = |f: &[f64]| {
        f.iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > f[best] { i } else { best })
    };
    let b = argmax(&fitness);
    let mut elite = (pop[b].clone(), fitness[b]);
    let mut trace = vec![-s * elite.1];

    for _ in 0..params.generations {
        let parents = roulette(&fitness, params.population, &mut rng);
        let mut next = Vec::with_capacity(params.population);
        for pair in parents.chunks(2) {
            let (c, d) = crossover(&pop[pair[0]], &pop[pair[1]], params.crossover, &mut rng);
            next.push(c);
            next.push(d);
        }
        for c in next.iter_mut() {
            mutate(c, params.mutation, &mut rng);
        }
        fitness = eval(&next);
        evaluations += next.len() as u64;
        // the elite replaces the weakest child
        let worst = fitness
            .iter()
            .enumerate()
            .fold(0, |w, (i, v)| if *v < fitness[w] { i } else { w });
        next[worst] = elite.0.clone();
        fitness[worst] = elite.1;
        pop = next;
        let b = argmax(&fitness);
        if fitness[b] > elite.1 {
            elite = (pop[b].clone(), fitness[b]);
        }
        trace.push(-s * elite.1);
    }

    let x = decode(&elite.0, model.lower(), model.upper(), model.kinds(), params.bits);
    let value = model.eval(&x);
    Ok(GaRun {
        solution: Solution {
            sense,
            x,
            value,
            bound: -sense.worst(),
            gap: f64::INFINITY,
            status: SolveStatus::Heuristic,
            stats: SolveStats {
                nodes: 0,
                lp_iterations: 0,
                evaluations,
                wall_time: start.elapsed(),
            },
        },
        trace,
    })
}
