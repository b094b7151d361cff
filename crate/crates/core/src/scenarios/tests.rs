use std::io::Write;

use approx::assert_abs_diff_eq;

use super::*;
use crate::synthetic::synthetic_fleet;

fn model(k: usize, mttf: f64) -> ContingencyModel {
    ContingencyModel {
        outages: (1..=k).map(|i| format!("g{i}")).collect(),
        lambda: vec![1.0 / mttf; k],
        contingency_hour: 5,
        tau: 1.0,
    }
}

fn flat_wind(n: usize, hours: usize) -> Vec<WindScenario> {
    (0..n)
        .map(|s| WindScenario {
            id: format!("w{:02}", s + 1),
            probability: 1.0 / n as f64,
            first_hour: 0,
            realization: [("wf1".to_string(), vec![10.0 * s as f64; hours])].into(),
        })
        .collect()
}

fn write_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn four_outages_reproduce_the_published_probabilities() {
    let p = contingency_probabilities(&model(4, 1000.0)).unwrap();
    assert_abs_diff_eq!(p.p_outage[0], 0.9995e-3, epsilon = 1e-7);
    assert_abs_diff_eq!(p.p_survive[0], 0.9990, epsilon = 1e-4);
    assert_abs_diff_eq!(p.pi_none, 0.9960, epsilon = 1e-4);
    assert_abs_diff_eq!(p.pi_outage[2], 0.9965e-3, epsilon = 1e-7);
    assert_abs_diff_eq!(p.total(), 0.9999, epsilon = 1e-4);
    assert!(p.total() < 1.0);
}

#[test]
fn vanishing_failure_rate_leaves_only_the_intact_system() {
    let p = contingency_probabilities(&model(4, 1e12)).unwrap();
    assert_abs_diff_eq!(p.pi_none, 1.0, epsilon = 1e-10);
    assert!(p.pi_outage.iter().all(|&x| x < 1e-11));
}

#[test]
fn single_outage_total_matches_closed_form() {
    let m = model(1, 250.0);
    let p = contingency_probabilities(&m).unwrap();
    let l = m.lambda[0];
    assert_abs_diff_eq!(p.total(), (-l * m.tau).exp() * l.exp(), epsilon = 1e-15);
}

#[test]
fn invalid_rates_are_rejected() {
    let mut m = model(2, 1000.0);
    m.lambda[1] = 0.0;
    assert!(contingency_probabilities(&m).is_err());
    let mut m = model(2, 1000.0);
    m.tau = -1.0;
    assert!(contingency_probabilities(&m).is_err());
}

#[test]
fn ten_winds_and_four_outages_make_fifty_scenarios() {
    let units = synthetic_fleet(6);
    let tree = build_tree(&flat_wind(10, 24), &model(4, 1000.0), &units, 1000.0).unwrap();
    assert_eq!(tree.scenarios.len(), 50);
    let total = tree.total_probability();
    assert!((0.999..=1.0).contains(&total), "{total}");
    let p = contingency_probabilities(&model(4, 1000.0)).unwrap();
    assert_abs_diff_eq!(total, p.total() * 1.0, epsilon = 1e-12);
}

#[test]
fn single_uniform_wind_without_outages_has_unit_probability() {
    let units = synthetic_fleet(3);
    let tree = build_tree(&flat_wind(1, 4), &ContingencyModel::none(), &units, 500.0).unwrap();
    assert_eq!(tree.scenarios.len(), 1);
    assert_eq!(tree.scenarios[0].probability, 1.0);
    assert_eq!(tree.contingency_hour, None);
    assert!(tree.scenarios[0].delta_p.iter().all(|&d| d == 0.0));
}

#[test]
fn availability_and_outage_size_follow_the_failed_unit() {
    let units = synthetic_fleet(6);
    let tree = build_tree(&flat_wind(2, 12), &model(2, 1000.0), &units, 2000.0).unwrap();
    for s in &tree.scenarios {
        match s.outage.as_deref() {
            None => {
                assert!(s.availability.iter().flatten().all(|&a| a));
                assert!(s.delta_p.iter().all(|&d| d == 0.0));
            }
            Some(id) => {
                let i = units.iter().position(|u| u.id == id).unwrap();
                for (j, row) in s.availability.iter().enumerate() {
                    for (t, &a) in row.iter().enumerate() {
                        assert_eq!(a, j != i || t < 5, "unit {j} hour {t}");
                    }
                }
                for (t, &d) in s.delta_p.iter().enumerate() {
                    let expected = if t == 5 { units[i].p_max / 2000.0 } else { 0.0 };
                    assert_eq!(d, expected);
                }
            }
        }
    }
}

#[test]
fn tree_ignores_input_order() {
    let units = synthetic_fleet(6);
    let mut wind = flat_wind(3, 6);
    let m = model(3, 800.0);
    let a = build_tree(&wind, &m, &units, 1000.0).unwrap();
    wind.reverse();
    let mut m2 = m.clone();
    m2.outages.reverse();
    m2.lambda.reverse();
    let b = build_tree(&wind, &m2, &units, 1000.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn duplicate_outages_are_rejected() {
    let units = synthetic_fleet(3);
    let mut m = model(2, 1000.0);
    m.outages[1] = "g1".into();
    assert!(build_tree(&flat_wind(1, 8), &m, &units, 500.0).is_err());
}

#[test]
fn contingency_hour_must_lie_in_horizon() {
    let units = synthetic_fleet(3);
    assert!(build_tree(&flat_wind(1, 4), &model(1, 1000.0), &units, 500.0).is_err());
}

fn csv_for(scenarios: usize, hours: usize) -> String {
    let mut s = String::from("scenario,farm,hour,mw\n");
    for w in 0..scenarios {
        for t in 0..hours {
            s.push_str(&format!("s{w},wf1,{t},{}\n", 5.0 * (w + t) as f64));
        }
    }
    s
}

#[test]
fn well_formed_file_gives_equal_probabilities() {
    let f = write_file(&csv_for(2, 24));
    let wind = ingest_wind(f.path()).unwrap();
    assert_eq!(wind.len(), 2);
    assert!(wind.iter().all(|w| w.probability == 0.5 && w.hours() == 24));
    assert_eq!(wind[1].realization["wf1"][3], 20.0);

    let f = write_file(&csv_for(10, 3));
    let wind = ingest_wind(f.path()).unwrap();
    assert!(wind.iter().all(|w| w.probability == 0.1));
}

#[test]
fn negative_output_names_the_line() {
    let mut text = csv_for(2, 4);
    text = text.replace("s1,wf1,2,15\n", "s1,wf1,2,-3\n");
    let f = write_file(&text);
    let err = ingest_wind(f.path()).unwrap_err();
    match err {
        GridError::WindData { line, message, .. } => {
            assert_eq!(line, 8);
            assert!(message.contains("negative"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn ragged_and_unknown_farms_are_rejected() {
    let mut text = csv_for(2, 4);
    text = text.replace("s1,wf1,3,20\n", "");
    let err = ingest_wind(write_file(&text).path()).unwrap_err();
    assert!(matches!(err, GridError::WindData { line: 6, .. }), "{err}");

    let mut text = csv_for(2, 2);
    text.push_str("s1,wf9,0,1\n");
    let err = ingest_wind(write_file(&text).path()).unwrap_err();
    assert!(matches!(err, GridError::WindData { line: 6, .. }), "{err}");
    assert!(err.to_string().contains("unknown farm"));

    let err = ingest_wind_for(write_file(&csv_for(1, 2)).path(), &["other".into()]).unwrap_err();
    assert!(err.to_string().contains("unknown farm"));
}

#[test]
fn malformed_numbers_are_reported_with_line() {
    let text = "scenario,farm,hour,mw\ns0,wf1,0,abc\n";
    let err = ingest_wind(write_file(text).path()).unwrap_err();
    assert!(matches!(err, GridError::WindData { line: 2, .. }), "{err}");
}

#[test]
fn written_wind_reads_back() {
    let wind = flat_wind(3, 5);
    let mut buf = Vec::new();
    write_wind(&wind, &mut buf).unwrap();
    let f = write_file(std::str::from_utf8(&buf).unwrap());
    assert_eq!(ingest_wind(f.path()).unwrap(), wind);
}

#[test]
fn window_slices_every_farm() {
    let w = &flat_wind(2, 10)[1];
    let sub = w.window(3, 4).unwrap();
    assert_eq!(sub.first_hour, 3);
    assert_eq!(sub.hours(), 4);
    assert!(w.window(8, 4).is_err());
}
