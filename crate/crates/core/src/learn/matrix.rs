//! Experiment bundles: every (domain, condition, seed) cell trained in
//! parallel, plus random-policy baselines, written as CSV with a manifest.

use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::curve::{mean_curve, LearningCurve};
use super::features::FeatureRepr;
use super::train::{random_baseline, train, Agent, TrainConfig};
use crate::domains::{generate, DomainConfig, DomainName, GeneratedDomain};
use crate::error::LearnError;
use crate::model::to_hex;
use crate::runtime::ShieldSchedule;
use crate::synth::{synthesize_default, Shield};

pub const MANIFEST_FORMAT: &str = "beliefshield-bundle/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub agent: Agent,
    pub schedule: ShieldSchedule,
    pub repr: FeatureRepr,
}

impl Condition {
    pub fn new(agent: Agent, schedule: ShieldSchedule, repr: FeatureRepr) -> Self {
        Condition { agent, schedule, repr }
    }

    /// File-system friendly name, e.g. `reinforce_always-on_support`.
    pub fn label(&self) -> String {
        format!("{}_{}_{}", self.agent, self.schedule.to_string().replace(':', "-"), self.repr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSpec {
    pub domains: Vec<DomainConfig>,
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    /// Episode counts, rates and evaluation protocol shared by all cells;
    /// agent, schedule, representation and seed are overridden per cell.
    /// Cells whose agent differs from `base.agent` use that agent's default
    /// learning rate.
    pub base: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub domain: DomainName,
    pub condition: Condition,
    pub seed: u64,
    pub curve: LearningCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Baseline {
    pub domain: DomainName,
    pub shielded: bool,
    pub curve: LearningCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub domain: DomainName,
    /// Empty when the domain itself could not be prepared.
    pub condition: String,
    pub seed: Option<u64>,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bundle {
    pub cells: Vec<Cell>,
    pub baselines: Vec<Baseline>,
    pub failures: Vec<Failure>,
}

/// Mean normalized curve of one (domain, condition) over its seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub domain: DomainName,
    pub condition: String,
    pub idx: usize,
    pub mean_norm: f64,
    pub smooth_norm: f64,
}

struct Prepared {
    domain: GeneratedDomain,
    shield: Shield,
}

fn prepare(c: &DomainConfig) -> Result<Prepared, String> {
    let domain = generate(c).map_err(|e| e.to_string())?;
    let shield = synthesize_default(&domain.pomdp, &domain.spec).map_err(|e| e.to_string())?;
    Ok(Prepared { domain, shield })
}

/// Runs every cell of `spec` in parallel. Failed domains or cells are
/// reported in `failures` and do not stop the others. With no seeds the
/// bundle is empty.
pub fn run_matrix(spec: &MatrixSpec) -> Bundle {
    let mut bundle = Bundle::default();
    if spec.seeds.is_empty() {
        return bundle;
    }
    let prepared: Vec<Result<Prepared, String>> = spec.domains.par_iter().map(prepare).collect();
    let mut jobs = Vec::new();
    for (di, p) in prepared.iter().enumerate() {
        match p {
            Ok(_) => {
                for ci in 0..spec.conditions.len() {
                    for &seed in &spec.seeds {
                        jobs.push((di, ci, seed));
                    }
                }
            }
            Err(e) => bundle.failures.push(Failure { domain: spec.domains[di].name, condition: String::new(), seed: None, error: e.clone() }),
        }
    }
    let results: Vec<(usize, usize, u64, Result<LearningCurve, LearnError>)> = jobs
        .par_iter()
        .map(|&(di, ci, seed)| {
            let p = prepared[di].as_ref().expect("only prepared domains have jobs");
            let cond = &spec.conditions[ci];
            let mut cfg = spec.base.clone();
            cfg.agent = cond.agent;
            cfg.schedule = cond.schedule;
            cfg.repr = cond.repr;
            cfg.seed = seed;
            if cfg.agent != spec.base.agent {
                cfg.learning_rate = TrainConfig::new(cfg.agent).learning_rate;
            }
            (di, ci, seed, train(&p.domain, Some(&p.shield), &cfg))
        })
        .collect();
    for (di, ci, seed, r) in results {
        let domain = spec.domains[di].name;
        match r {
            Ok(curve) => bundle.cells.push(Cell { domain, condition: spec.conditions[ci].clone(), seed, curve }),
            Err(e) => bundle.failures.push(Failure { domain, condition: spec.conditions[ci].label(), seed: Some(seed), error: e.to_string() }),
        }
    }
    let base_jobs: Vec<(usize, bool)> =
        prepared.iter().enumerate().filter(|(_, p)| p.is_ok()).flat_map(|(di, _)| [(di, false), (di, true)]).collect();
    let mut base_cfg = spec.base.clone();
    base_cfg.seed = spec.seeds[0];
    let baselines: Vec<(usize, bool, Result<LearningCurve, LearnError>)> = base_jobs
        .par_iter()
        .map(|&(di, shielded)| {
            let p = prepared[di].as_ref().expect("prepared");
            let sh = if shielded { Some(&p.shield) } else { None };
            (di, shielded, random_baseline(&p.domain, sh, &base_cfg))
        })
        .collect();
    for (di, shielded, r) in baselines {
        let domain = spec.domains[di].name;
        match r {
            Ok(curve) => bundle.baselines.push(Baseline { domain, shielded, curve }),
            Err(e) => bundle.failures.push(Failure {
                domain,
                condition: baseline_label(shielded).into(),
                seed: Some(base_cfg.seed),
                error: e.to_string(),
            }),
        }
    }
    bundle
}

fn baseline_label(shielded: bool) -> &'static str {
    if shielded {
        "random_shielded"
    } else {
        "random_unshielded"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub domain: DomainName,
    pub condition: String,
    pub seed: Option<u64>,
    pub file: String,
    pub sha256: String,
    pub final_smooth_norm: Option<f64>,
    pub violations_during: usize,
    pub violations_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub cells: Vec<ManifestEntry>,
    pub baselines: Vec<ManifestEntry>,
    pub aggregate: ManifestEntryFile,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntryFile {
    pub file: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    to_hex(&Sha256::digest(bytes))
}

impl Bundle {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.baselines.is_empty() && self.failures.is_empty()
    }

    /// Mean curves per (domain, condition) over seeds, in cell order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(DomainName, String)> = Vec::new();
        for c in &self.cells {
            let k = (c.domain, c.condition.label());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut out = Vec::new();
        for (domain, label) in keys {
            let curves: Vec<&LearningCurve> =
                self.cells.iter().filter(|c| c.domain == domain && c.condition.label() == label).map(|c| &c.curve).collect();
            for (idx, mean_norm, smooth_norm) in mean_curve(&curves) {
                out.push(AggregateRow { domain, condition: label.clone(), idx, mean_norm, smooth_norm });
            }
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut s = String::from("domain,condition,idx,mean_norm,smooth_norm\n");
        for r in self.aggregate() {
            s.push_str(&format!("{},{},{},{},{}\n", r.domain, r.condition, r.idx, r.mean_norm, r.smooth_norm));
        }
        s
    }

    /// Writes one curve CSV per cell and baseline, `aggregate.csv` and
    /// `manifest.json` under `dir`. Paths in the manifest are relative.
    pub fn write(&self, dir: &Path) -> io::Result<Manifest> {
        fs::create_dir_all(dir)?;
        let put = |rel: String, text: &str| -> io::Result<ManifestEntryFile> {
            let path = dir.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, text)?;
            Ok(ManifestEntryFile { file: rel, sha256: sha256_hex(text.as_bytes()) })
        };
        let entry = |domain: DomainName, condition: String, seed: Option<u64>, f: ManifestEntryFile, c: &LearningCurve| ManifestEntry {
            domain,
            condition,
            seed,
            file: f.file,
            sha256: f.sha256,
            final_smooth_norm: c.final_smoothed(),
            violations_during: c.violations_during,
            violations_after: c.violations_after,
        };
        let mut cells = Vec::new();
        for c in &self.cells {
            let label = c.condition.label();
            let f = put(format!("{}/{}/seed{}.csv", c.domain, label, c.seed), &c.curve.to_csv())?;
            cells.push(entry(c.domain, label, Some(c.seed), f, &c.curve));
        }
        let mut baselines = Vec::new();
        for b in &self.baselines {
            let label = baseline_label(b.shielded).to_string();
            let f = put(format!("{}/{label}.csv", b.domain), &b.curve.to_csv())?;
            baselines.push(entry(b.domain, label, None, f, &b.curve));
        }
        let aggregate = put("aggregate.csv".into(), &self.aggregate_csv())?;
        let manifest = Manifest { format: MANIFEST_FORMAT.into(), cells, baselines, aggregate, failures: self.failures.clone() };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seeds: Vec<u64>) -> MatrixSpec {
        let repr = FeatureRepr::Support;
        MatrixSpec {
            domains: vec![DomainConfig::new(DomainName::Obstacle)],
            conditions: vec![
                Condition::new(Agent::Reinforce, ShieldSchedule::AlwaysOn, repr),
                Condition::new(Agent::Reinforce, ShieldSchedule::Off, repr),
            ],
            seeds,
            base: TrainConfig::new(Agent::Reinforce).with_episodes(200),
        }
    }

    #[test]
    fn cardinality() {
        let b = run_matrix(&spec(vec![3]));
        assert!(b.failures.is_empty());
        assert_eq!(b.cells.len(), 2);
        assert_eq!(b.baselines.len(), 2);
        let shielded = b.baselines.iter().find(|x| x.shielded).unwrap();
        assert_eq!(shielded.curve.rows.last().unwrap().viol_after, 0);
        assert_eq!(b.cells[0].curve.violations_during, 0);
    }

    #[test]
    fn no_seeds_no_work() {
        assert!(run_matrix(&spec(vec![])).is_empty());
    }

    #[test]
    fn bad_domain_is_reported() {
        let mut s = spec(vec![1]);
        s.domains.push(DomainConfig::new(DomainName::Refuel).with_energy(0));
        let b = run_matrix(&s);
        assert_eq!(b.cells.len(), 2);
        assert_eq!(b.failures.len(), 1);
        assert_eq!(b.failures[0].domain, DomainName::Refuel);
    }

    #[test]
    fn written_bundle_is_reproducible() {
        let s = spec(vec![1, 2]);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = run_matrix(&s).write(d1.path()).unwrap();
        let m2 = run_matrix(&s).write(d2.path()).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.cells.len(), 4);
        let text = fs::read_to_string(d1.path().join(&m1.cells[0].file)).unwrap();
        assert_eq!(sha256_hex(text.as_bytes()), m1.cells[0].sha256);
        assert_eq!(fs::read(d1.path().join("manifest.json")).unwrap(), fs::read(d2.path().join("manifest.json")).unwrap());
    }
}
