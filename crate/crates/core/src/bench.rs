//! Random covering systems and NIS / IS / NIX / IX timing.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::{ApproxPair, SubsetVector};
use crate::bitmatrix::parallel_kernels;
use crate::incremental::{pipeline_is, pipeline_ix, pipeline_nis, pipeline_nix, IncrementalError};
use crate::model::{Covering, CoveringSystem, Universe};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("{0} and {1} disagree; timing aborted")]
    Gate(Algorithm, Algorithm),
    #[error("no timings to summarize")]
    Empty,
    #[error("subset index {index} out of range for {n} objects")]
    Subset { index: usize, n: usize },
    #[error(transparent)]
    Incremental(#[from] IncrementalError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {reason}")]
    CsvContent { row: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_blocks")]
    pub blocks_per_covering: usize,
    #[serde(default = "default_prob")]
    pub extra_membership_prob: f64,
    pub seed: u64,
}

fn default_blocks() -> usize {
    5
}

fn default_prob() -> f64 {
    0.1
}

impl GenSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            blocks_per_covering: default_blocks(),
            extra_membership_prob: default_prob(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.blocks_per_covering == 0 {
            return Err(BenchError::Spec(
                "blocks_per_covering must be at least 1".into(),
            ));
        }
        if self.n < self.blocks_per_covering {
            return Err(BenchError::Spec(format!(
                "n = {} is smaller than blocks_per_covering = {}",
                self.n, self.blocks_per_covering
            )));
        }
        if self.m == 0 {
            return Err(BenchError::Spec("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.extra_membership_prob) {
            return Err(BenchError::Spec(format!(
                "extra_membership_prob = {} is outside [0, 1]",
                self.extra_membership_prob
            )));
        }
        Ok(())
    }
}

/// One covering: a home block per object, extra memberships with
/// probability `p`, then every empty block gets one random object.
pub fn generate_covering(
    name: impl Into<String>,
    n: usize,
    blocks: usize,
    p: f64,
    rng: &mut impl Rng,
) -> Covering {
    let mut members = vec![Vec::new(); blocks];
    for x in 0..n {
        let home = rng.gen_range(0..blocks);
        for (b, block) in members.iter_mut().enumerate() {
            if b == home || rng.gen_bool(p) {
                block.push(x);
            }
        }
    }
    for block in &mut members {
        if block.is_empty() {
            block.push(rng.gen_range(0..n));
        }
    }
    Covering::new(name, members)
}

fn generate_with(spec: &GenSpec, rng: &mut ChaCha8Rng) -> CoveringSystem {
    let coverings = (1..=spec.m)
        .map(|k| {
            generate_covering(
                format!("C{k}"),
                spec.n,
                spec.blocks_per_covering,
                spec.extra_membership_prob,
                rng,
            )
        })
        .collect();
    CoveringSystem::new(Universe::indexed(spec.n), coverings)
        .expect("generated coverings are in range")
}

/// Deterministic for a fixed spec.
pub fn generate_system(spec: &GenSpec) -> Result<CoveringSystem, BenchError> {
    spec.validate()?;
    Ok(generate_with(
        spec,
        &mut ChaCha8Rng::seed_from_u64(spec.seed),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Nis,
    Is,
    Nix,
    Ix,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Nis, Algorithm::Is, Algorithm::Nix, Algorithm::Ix];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Nis => "NIS",
            Algorithm::Is => "IS",
            Algorithm::Nix => "NIX",
            Algorithm::Ix => "IX",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// Mean and population variance (divide by N).
pub fn stats(times: &[f64]) -> Result<(f64, f64), BenchError> {
    if times.is_empty() {
        return Err(BenchError::Empty);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let variance = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    Ok((mean, variance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub repetitions: usize,
    pub times: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub threads: usize,
}

impl BenchRecord {
    pub fn from_times(
        algorithm: Algorithm,
        n: usize,
        m: usize,
        times: Vec<f64>,
        threads: usize,
    ) -> Result<Self, BenchError> {
        let (mean, variance) = stats(&times)?;
        Ok(Self {
            algorithm,
            n,
            m,
            repetitions: times.len(),
            times,
            mean,
            variance,
            threads,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetRule {
    /// `⌊n/2⌋` objects drawn with the spec's RNG after generation.
    RandomHalf,
    Explicit(Vec<usize>),
}

/// A generated system, the extra covering, and the target set.
#[derive(Debug, Clone)]
pub struct Workload {
    pub system: CoveringSystem,
    pub extended: CoveringSystem,
    pub new_covering: Covering,
    pub target: SubsetVector,
}

pub fn workload(spec: &GenSpec, rule: &SubsetRule) -> Result<Workload, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let system = generate_with(spec, &mut rng);
    let new_covering = generate_covering(
        format!("C{}", spec.m + 1),
        spec.n,
        spec.blocks_per_covering,
        spec.extra_membership_prob,
        &mut rng,
    );
    let members = match rule {
        SubsetRule::RandomHalf => sample(&mut rng, spec.n, spec.n / 2).into_vec(),
        SubsetRule::Explicit(xs) => {
            if let Some(&index) = xs.iter().find(|&&x| x >= spec.n) {
                return Err(BenchError::Subset { index, n: spec.n });
            }
            xs.clone()
        }
    };
    let extended = system
        .with_covering(new_covering.clone())
        .expect("fresh name");
    Ok(Workload {
        system,
        extended,
        new_covering,
        target: SubsetVector::from_indices(spec.n, &members),
    })
}

impl Workload {
    pub fn run(&self, algorithm: Algorithm) -> Result<ApproxPair, BenchError> {
        let x = &self.target;
        Ok(match algorithm {
            Algorithm::Nis => pipeline_nis(&self.extended, x)?,
            Algorithm::Is => pipeline_is(&self.system, &self.new_covering, x)?,
            Algorithm::Nix => pipeline_nix(&self.extended, x)?,
            Algorithm::Ix => pipeline_ix(&self.system, &self.new_covering, x)?,
        })
    }

    /// NIS ≡ IS and NIX ≡ IX.
    pub fn check(&self) -> Result<(), BenchError> {
        for (a, b) in [
            (Algorithm::Nis, Algorithm::Is),
            (Algorithm::Nix, Algorithm::Ix),
        ] {
            if self.run(a)? != self.run(b)? {
                return Err(BenchError::Gate(a, b));
            }
        }
        Ok(())
    }
}

fn threads() -> usize {
    if parallel_kernels() {
        rayon::current_num_threads()
    } else {
        1
    }
}

/// Time the four pipelines `repetitions` times each after the correctness
/// gate and one untimed warm-up. `Γ(𝒟)` and `Π(𝒟)` of the base system are
/// built before timing; the incremental pipelines start from them.
pub fn run_benchmark(
    spec: &GenSpec,
    repetitions: usize,
    rule: &SubsetRule,
) -> Result<Vec<BenchRecord>, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::Empty);
    }
    let w = workload(spec, rule)?;
    w.system.gamma();
    w.system.pi();
    w.check()?;
    let threads = threads();
    Algorithm::ALL
        .into_iter()
        .map(|algorithm| {
            w.run(algorithm)?;
            let mut times = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let start = Instant::now();
                let out = w.run(algorithm)?;
                times.push(start.elapsed().as_secs_f64());
                std::hint::black_box(out);
            }
            BenchRecord::from_times(algorithm, spec.n, spec.m, times, threads)
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    algorithm: Algorithm,
    n: usize,
    m: usize,
    rep: String,
    seconds: Option<f64>,
    mean: Option<f64>,
    variance: Option<f64>,
    threads: usize,
}

const SUMMARY: &str = "summary";

/// Columns `algorithm,n,m,rep,seconds,mean,variance,threads`: one row per
/// timed run (`rep` from 1), then a `rep = summary` row per algorithm.
pub fn export_csv(records: &[BenchRecord], out: impl Write) -> Result<(), BenchError> {
    if records.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        for (i, &t) in r.times.iter().enumerate() {
            w.serialize(CsvRow {
                algorithm: r.algorithm,
                n: r.n,
                m: r.m,
                rep: (i + 1).to_string(),
                seconds: Some(t),
                mean: None,
                variance: None,
                threads: r.threads,
            })?;
        }
        w.serialize(CsvRow {
            algorithm: r.algorithm,
            n: r.n,
            m: r.m,
            rep: SUMMARY.into(),
            seconds: None,
            mean: Some(r.mean),
            variance: Some(r.variance),
            threads: r.threads,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Read back [`export_csv`] output. Means and variances come from the
/// summary rows; the times from the per-run rows.
pub fn parse_csv(input: impl Read) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records: Vec<BenchRecord> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for (i, row) in csv::Reader::from_reader(input)
        .deserialize::<CsvRow>()
        .enumerate()
    {
        let row = row?;
        let bad = |reason: &str| BenchError::CsvContent {
            row: i + 1,
            reason: reason.to_string(),
        };
        if row.rep == SUMMARY {
            let (Some(mean), Some(variance)) = (row.mean, row.variance) else {
                return Err(bad("summary row without mean and variance"));
            };
            if times.is_empty() {
                return Err(bad("summary row without timed runs"));
            }
            let times = std::mem::take(&mut times);
            records.push(BenchRecord {
                algorithm: row.algorithm,
                n: row.n,
                m: row.m,
                repetitions: times.len(),
                times,
                mean,
                variance,
                threads: row.threads,
            });
        } else {
            let rep: usize = row
                .rep
                .parse()
                .map_err(|_| bad("rep is neither a number nor \"summary\""))?;
            if rep != times.len() + 1 {
                return Err(bad("runs out of order"));
            }
            times.push(row.seconds.ok_or_else(|| bad("run row without seconds"))?);
        }
    }
    if !times.is_empty() {
        return Err(BenchError::CsvContent {
            row: 0,
            reason: "trailing runs without a summary row".into(),
        });
    }
    if records.is_empty() {
        return Err(BenchError::Empty);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_spec_validates() {
        let spec = GenSpec {
            n: 5,
            m: 3,
            blocks_per_covering: 2,
            extra_membership_prob: 0.0,
            seed: 42,
        };
        let s = generate_system(&spec).unwrap();
        assert!(s.validate().is_ok());
        assert_eq!(s.coverings().len(), 3);
        assert!(s.coverings().iter().all(|c| c.len() <= 2));
    }

    #[test]
    fn spec_errors() {
        let mut spec = GenSpec::new(4, 2, 0);
        assert!(matches!(generate_system(&spec), Err(BenchError::Spec(_))));
        spec.n = 10;
        spec.extra_membership_prob = 1.5;
        assert!(generate_system(&spec).is_err());
        spec.extra_membership_prob = f64::NAN;
        assert!(generate_system(&spec).is_err());
        spec.extra_membership_prob = 0.5;
        spec.m = 0;
        assert!(generate_system(&spec).is_err());
    }

    #[test]
    fn desk_scale_system() {
        let spec = GenSpec::new(2000, 100, 1);
        let s = generate_system(&spec).unwrap();
        assert!(s.validate().is_ok());
        assert_eq!(s.block_count(), 500);
        assert_eq!(s, generate_system(&spec).unwrap());
    }

    #[test]
    fn stats_by_hand() {
        assert_eq!(stats(&[2.0, 2.0, 2.0]).unwrap(), (2.0, 0.0));
        assert_eq!(stats(&[1.0, 3.0]).unwrap(), (2.0, 1.0));
        assert!(matches!(stats(&[]), Err(BenchError::Empty)));
    }

    #[test]
    fn benchmark_emits_four_records() {
        let spec = GenSpec::new(60, 5, 7);
        let records = run_benchmark(&spec, 3, &SubsetRule::RandomHalf).unwrap();
        let algs: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
        assert_eq!(algs, Algorithm::ALL);
        for r in &records {
            assert_eq!(r.repetitions, 3);
            assert!(r.variance.is_finite() && r.variance >= 0.0);
            assert_eq!((r.mean, r.variance), stats(&r.times).unwrap());
        }
    }

    #[test]
    fn workload_is_deterministic() {
        let spec = GenSpec::new(50, 4, 9);
        let a = workload(&spec, &SubsetRule::RandomHalf).unwrap();
        let b = workload(&spec, &SubsetRule::RandomHalf).unwrap();
        assert_eq!(a.extended, b.extended);
        assert_eq!(a.target, b.target);
        assert_eq!(a.target.count(), 25);
        for alg in Algorithm::ALL {
            assert_eq!(a.run(alg).unwrap(), b.run(alg).unwrap());
        }
        assert!(matches!(
            workload(&spec, &SubsetRule::Explicit(vec![50])),
            Err(BenchError::Subset { index: 50, n: 50 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            BenchRecord::from_times(
                Algorithm::Nis,
                10,
                2,
                vec![0.1, 0.2, 0.30000000000000004],
                1,
            )
            .unwrap(),
            BenchRecord::from_times(Algorithm::Is, 10, 2, vec![1e-7, 3.5e-6], 1).unwrap(),
        ];
        let mut buf = Vec::new();
        export_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("algorithm,n,m,rep,seconds,mean,variance,threads\n"));
        assert!(text.contains("NIS,10,2,summary,,"));
        assert_eq!(parse_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_csv(
            "algorithm,n,m,rep,seconds,mean,variance,threads\nNIS,1,1,x,0.1,,,1\n".as_bytes()
        )
        .is_err());
        assert!(parse_csv(
            "algorithm,n,m,rep,seconds,mean,variance,threads\nNIS,1,1,1,0.1,,,1\n".as_bytes()
        )
        .is_err());
        assert!(matches!(
            export_csv(&[], Vec::new()),
            Err(BenchError::Empty)
        ));
    }

    proptest! {
        #[test]
        fn csv_round_trips_arbitrary_times(times in prop::collection::vec(0.0f64..10.0, 1..20)) {
            let r = vec![BenchRecord::from_times(Algorithm::Ix, 3, 1, times, 2).unwrap()];
            let mut buf = Vec::new();
            export_csv(&r, &mut buf).unwrap();
            let back = parse_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(stats(&back[0].times).unwrap(), (back[0].mean, back[0].variance));
        }

        #[test]
        fn generated_systems_validate(n in 1usize..40, m in 1usize..5, b in 1usize..6, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let spec = GenSpec { n: n.max(b), m, blocks_per_covering: b, extra_membership_prob: p, seed };
            let s = generate_system(&spec).unwrap();
            prop_assert!(s.validate().is_ok());
        }
    }
}
