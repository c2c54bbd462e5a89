use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::worldgraph::World;

use super::{run_episode, sample_instance, EpisodeConfig, ExperimentError, Method};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub maps: Vec<String>,
    pub methods: Vec<Method>,
    #[serde(rename = "delta_T")]
    pub delta_t: Vec<u32>,
    pub instances: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Overrides the map's mission length.
    #[serde(rename = "T_max")]
    pub t_max: Option<u32>,
    pub gamma_h: Option<f64>,
    pub episode: EpisodeConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            maps: vec!["map1".into()],
            methods: Method::ALL.to_vec(),
            delta_t: vec![1, 5, 10, 20, 30],
            instances: 6,
            episodes: 50,
            seed: 0,
            t_max: Some(30),
            gamma_h: Some(1.5),
            episode: EpisodeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub map: String,
    pub method: Method,
    #[serde(rename = "delta_T")]
    pub delta_t: u32,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_steps: f64,
    pub mean_violations: f64,
}

/// SplitMix64 finaliser, used to derive well-spread child seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn child_seed(parent: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(parent) ^ a) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Success statistics per (map, method, Δ_T). Every method and Δ_T sees the
/// same sampled instances and the same episode seeds.
pub fn sweep(config: &SweepConfig, worlds: &[World]) -> Result<Vec<SweepRow>, ExperimentError> {
    if config.methods.is_empty() {
        return Err(ExperimentError::Config("no methods given".into()));
    }
    if config.delta_t.contains(&0) {
        return Err(ExperimentError::Config(
            "delta_T values must be at least 1".into(),
        ));
    }
    let mut rows = Vec::new();
    if config.instances == 0 || config.episodes == 0 {
        return Ok(rows);
    }
    for name in &config.maps {
        let world = worlds
            .iter()
            .find(|w| &w.name == name)
            .ok_or_else(|| ExperimentError::Config(format!("map {name:?} not loaded")))?;
        let map_seed = child_seed(
            config.seed,
            name.bytes().fold(0u64, |h, b| mix(h ^ b as u64)),
            0,
        );
        let mut instances = Vec::with_capacity(config.instances);
        for i in 0..config.instances {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(map_seed, i as u64, 0));
            let mut inst = sample_instance(&mut rng, world, 0)?;
            if let Some(t) = config.t_max {
                inst.t_max = t;
            }
            if let Some(g) = config.gamma_h {
                inst.gamma_h = g;
            }
            instances.push(inst);
        }
        for &method in &config.methods {
            for &dt in &config.delta_t {
                let (mut ok, mut steps, mut violations, mut n) = (0usize, 0u64, 0u64, 0usize);
                for (i, inst) in instances.iter().enumerate() {
                    for e in 0..config.episodes {
                        let mut inst = inst.clone();
                        inst.delta_t = dt;
                        inst.seed = child_seed(map_seed, i as u64, e as u64 + 1);
                        let r = run_episode(world, &inst, method, &config.episode)?;
                        if let Some(f) = &r.failure {
                            log::warn!("{} {method} episode {i}/{e} failed: {f}", world.name);
                        }
                        ok += r.success as usize;
                        steps += r.steps as u64;
                        violations += r.violations as u64;
                        n += 1;
                    }
                }
                rows.push(SweepRow {
                    map: name.clone(),
                    method,
                    delta_t: dt,
                    episodes: n,
                    success_rate: ok as f64 / n as f64,
                    mean_steps: steps as f64 / n as f64,
                    mean_violations: violations as f64 / n as f64,
                });
                log::info!("{name} {method} delta_T={dt}: {ok}/{n}");
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "map",
    "method",
    "delta_T",
    "episodes",
    "success_rate",
    "mean_steps",
    "mean_violations",
];

/// Writes `header` and then one record per row, so an empty table still
/// carries its column names.
pub fn write_csv<T: Serialize, W: Write>(
    header: &[&str],
    rows: &[T],
    out: W,
) -> Result<(), ExperimentError> {
    let err = |e: csv::Error| ExperimentError::Csv(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| ExperimentError::Csv(e.to_string()))
}

/// One line per (map, Δ_T) listing methods from best to worst success rate.
pub fn ranking(rows: &[SweepRow]) -> Vec<String> {
    let mut groups: BTreeMap<(&str, u32), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.map, r.delta_t)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((map, dt), mut rs)| {
            rs.sort_by(|a, b| {
                b.success_rate
                    .total_cmp(&a.success_rate)
                    .then(a.method.cmp(&b.method))
            });
            let order: Vec<String> = rs
                .iter()
                .map(|r| format!("{} {:.3}", r.method, r.success_rate))
                .collect();
            format!("{map} delta_T={dt}: {}", order.join(" > "))
        })
        .collect()
}
