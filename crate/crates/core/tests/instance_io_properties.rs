mod common;

use std::fs;

use vrptw_core::instance_io::{
    apply_dynamicity, generate_training_instance, instance_from_str, instance_to_string, parse_solomon, read_solomon,
    DynamicityConfig, GeneratorConfig,
};

/// Minimal reading of the Solomon layout, kept separate from the crate's parser:
/// the fleet line follows `NUMBER CAPACITY`, customer rows follow the column header.
fn independent_read(text: &str) -> (usize, f64, Vec<Vec<f64>>) {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let fleet_at = lines.iter().position(|l| l.starts_with("NUMBER")).unwrap() + 1;
    let fleet: Vec<f64> = lines[fleet_at].split_whitespace().map(|t| t.parse().unwrap()).collect();
    let rows_at = lines.iter().position(|l| l.starts_with("CUST NO")).unwrap() + 1;
    let rows = lines[rows_at..].iter().map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect()).collect();
    (fleet[0] as usize, fleet[1], rows)
}

#[test]
fn c101_first_25() {
    let text = fs::read_to_string(common::solomon("C101")).unwrap();
    let (count, capacity, rows) = independent_read(&text);
    let inst = read_solomon(&common::solomon("C101"), Some(25)).unwrap();
    assert_eq!((inst.len(), inst.fleet().capacity, inst.fleet().count), (25, 200.0, 25));
    assert_eq!((count, capacity), (25, 200.0));
    // Row 0 is the depot.
    assert_eq!((inst.depot().x, inst.depot().y), (rows[0][1], rows[0][2]));
    for (c, row) in inst.customers().iter().zip(&rows[1..]) {
        assert_eq!(
            [c.id as f64, c.loc.x, c.loc.y, c.demand, c.tw_min, c.tw_max, c.service_duration],
            [row[0], row[1], row[2], row[3], row[4], row[5], row[6]]
        );
    }
}

#[test]
fn every_file_parses_and_prefixes_agree() {
    let mut seen = 0;
    for entry in fs::read_dir(common::data_dir().join("solomon")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let full = parse_solomon(&text, None).unwrap();
        assert_eq!(full.len(), 100, "{}", path.display());
        for k in [1, 10, 25, 50, 100] {
            let part = parse_solomon(&text, Some(k)).unwrap();
            assert_eq!(part.customers(), &full.customers()[..k]);
            assert_eq!(part.fleet(), full.fleet());
            assert_eq!(part.depot_due(), full.depot_due());
        }
        seen += 1;
    }
    assert_eq!(seen, 56);
}

#[test]
fn generator_over_1000_seeds() {
    let base = GeneratorConfig::default();
    for seed in 0..1000 {
        let inst = generate_training_instance(&GeneratorConfig { seed, ..base.clone() }).unwrap();
        assert_eq!(inst.len(), 20);
        assert_eq!(inst.fleet().count, 4);
        let d = inst.depot();
        assert!((-25.0..25.0).contains(&d.x) && (-25.0..25.0).contains(&d.y));
        for c in inst.customers() {
            assert!((-100.0..100.0).contains(&c.loc.x) && (-100.0..100.0).contains(&c.loc.y));
            assert!(c.demand > 0.0 && c.demand.is_finite());
            assert!((0.0..200.0).contains(&c.tw_min));
            assert!(c.tw_max >= c.tw_min + base.tw_width_min);
            assert_eq!(c.reveal_time, 0.0);
        }
        assert_eq!(instance_from_str(&instance_to_string(&inst)).unwrap(), inst);
    }
}

#[test]
fn dynamicity_touches_only_reveal_times() {
    for seed in 0..50 {
        let inst = common::random_instance(37, 5, seed, 0.0);
        for fraction in [0.0, 0.1, 0.5, 1.0] {
            let d = apply_dynamicity(&inst, &DynamicityConfig { fraction, seed }).unwrap();
            let hidden = d.customers().iter().filter(|c| c.reveal_time > 0.0).count();
            assert_eq!(hidden, (fraction * 37.0_f64).round() as usize);
            for (a, b) in inst.customers().iter().zip(d.customers()) {
                let mut b2 = b.clone();
                b2.reveal_time = 0.0;
                assert_eq!(*a, b2);
                assert!(b.reveal_time >= 0.0 && b.reveal_time <= b.tw_max);
            }
            assert_eq!((d.depot(), d.fleet(), d.depot_due()), (inst.depot(), inst.fleet(), inst.depot_due()));
        }
    }
}
