//! Regenerates `data/study/`: a six-bus, eight-unit system with four wind
//! farms, ten wind scenarios and four credible outages over five days.
//!
//! Usage: `cargo run -p gridfreq-core --example make_study_data [out_dir]`

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::path::PathBuf;

use gridfreq::freq_dynamics::FrequencyLimits;
use gridfreq::scenarios::{write_wind, WindScenario};
use gridfreq::study_harness::StudyConfig;
use gridfreq::synthetic::{converter_fleet, make_unit, PlantType};
use gridfreq::uc_core::{ContingencySpec, InitialState, Line, Network, SystemData, WindFarm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HOURS: usize = 120;
const SCENARIOS: usize = 10;
const NODES: [&str; 6] = ["n1", "n2", "n3", "n4", "n5", "n6"];
const LOAD_SHARE: [f64; 6] = [0.2, 0.15, 0.2, 0.15, 0.15, 0.15];
const FARMS: [(&str, &str, f64); 4] = [
    ("wf1", "n2", 150.0),
    ("wf2", "n3", 150.0),
    ("wf3", "n5", 150.0),
    ("wf4", "n6", 150.0),
];
/// 0-based hours with low demand and strong wind around the contingency.
const LULL: std::ops::Range<usize> = 63..71;

fn total_demand(t: usize) -> f64 {
    let h = (t % 24) as f64;
    let base = 900.0 + 230.0 * (2.0 * PI * (h - 8.0) / 24.0).sin() + 15.0 * (t / 24) as f64;
    if LULL.contains(&t) {
        0.68 * base
    } else {
        base
    }
}

fn forecast_cf(farm: usize, t: usize) -> f64 {
    let phase = farm as f64 * 0.9;
    let cf = 0.42 + 0.18 * (2.0 * PI * t as f64 / 37.0 + phase).sin();
    if LULL.contains(&t) {
        0.85
    } else {
        cf
    }
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("data/study"), PathBuf::from);
    fs::create_dir_all(&out).unwrap();

    let units = vec![
        make_unit("g1", "n1", PlantType::Nuclear, 400.0),
        make_unit("g2", "n4", PlantType::Nuclear, 300.0),
        make_unit("g3", "n2", PlantType::Ccgt, 200.0),
        make_unit("g4", "n5", PlantType::Ccgt, 150.0),
        make_unit("g5", "n3", PlantType::Ccgt, 150.0),
        make_unit("g6", "n6", PlantType::Ocgt, 100.0),
        make_unit("g7", "n2", PlantType::Ocgt, 80.0),
        make_unit("g8", "n5", PlantType::Ocgt, 60.0),
    ];
    let ring = [
        ("n1", "n2"),
        ("n2", "n3"),
        ("n3", "n4"),
        ("n4", "n5"),
        ("n5", "n6"),
        ("n6", "n1"),
        ("n2", "n5"),
    ];
    let lines = ring
        .iter()
        .map(|&(a, b)| Line {
            from: a.into(),
            to: b.into(),
            susceptance: 500.0,
            capacity: 400.0,
        })
        .collect();
    let demand: BTreeMap<String, Vec<f64>> = NODES
        .iter()
        .zip(LOAD_SHARE)
        .map(|(n, share)| {
            let series = (0..HOURS)
                .map(|t| (share * total_demand(t) * 10.0).round() / 10.0)
                .collect();
            (n.to_string(), series)
        })
        .collect();
    let network = Network {
        nodes: NODES.iter().map(|s| s.to_string()).collect(),
        lines,
        demand,
        voll: 3000.0,
        wind_farms: FARMS
            .iter()
            .map(|&(id, bus, cap)| WindFarm {
                id: id.into(),
                bus: bus.into(),
                capacity: cap,
            })
            .collect(),
        reference_buses: vec!["n1".into()],
    };
    let mut initial = vec![InitialState::fresh(); units.len()];
    initial[0] = InitialState::online(300.0, 24);
    initial[1] = InitialState::online(200.0, 24);
    let system = SystemData {
        units,
        fleet: converter_fleet(200.0, 150.0),
        limits: FrequencyLimits::default(),
        t_turbine: 5.0,
        network: Some(network),
        contingency: Some(ContingencySpec {
            outages: ["g5", "g6", "g7", "g8"].map(String::from).to_vec(),
            hour: 66,
            tau: 1.0,
        }),
        wind: Some("wind.csv".into()),
        initial: Some(initial),
        freq_mode: None,
    };
    fs::write(
        out.join("system.json"),
        serde_json::to_string_pretty(&system).unwrap() + "\n",
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scenarios: Vec<WindScenario> = (0..SCENARIOS)
        .map(|s| {
            let realization = FARMS
                .iter()
                .enumerate()
                .map(|(f, &(id, _, cap))| {
                    let mut eps = 0.0;
                    let series = (0..HOURS)
                        .map(|t| {
                            eps = 0.8 * eps + 0.08 * (rng.gen::<f64>() * 2.0 - 1.0) * 3f64.sqrt();
                            let cf = (forecast_cf(f, t) * (1.0 + eps)).clamp(0.0, 1.0);
                            (cf * cap * 10.0).round() / 10.0
                        })
                        .collect();
                    (id.to_string(), series)
                })
                .collect();
            WindScenario {
                id: format!("w{:02}", s + 1),
                probability: 1.0 / SCENARIOS as f64,
                first_hour: 0,
                realization,
            }
        })
        .collect();
    write_wind(&scenarios, File::create(out.join("wind.csv")).unwrap()).unwrap();

    let config = StudyConfig {
        mip_rel_gap: 5e-3,
        ..StudyConfig::default()
    };
    fs::write(
        out.join("study.json"),
        serde_json::to_string_pretty(&config).unwrap() + "\n",
    )
    .unwrap();
    println!("wrote {}", out.display());
}
