use std::fs;

use toruslab::classical::{scan, ScanOptions};
use toruslab::geometry::make_profile;
use toruslab::io::*;
use toruslab::observable::Observable;
use toruslab::quantization::{ebk_lattice, LatticeOptions};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("toruslab-io-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn scan_csv_has_the_documented_columns() {
    let p = make_profile::<f64>("sphere", &[]).unwrap();
    let s = scan(&p, &Observable::cos_sq(), &[0.2, 0.5, 0.8], &ScanOptions::default()).unwrap();
    let path = tmp("scan.csv");
    write_csv(&path, &Provenance::new("cfg", "model", 0.25), &scan_table(&s)).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# toruslab "));
    assert_eq!(lines[1], "# config_hash: cfg");
    assert_eq!(lines[2], "# model_hash: model");
    assert!(lines[3].starts_with("# run: timestamp="));
    assert_eq!(lines[4], "a,omega,class,m,n,height,q_avg,qinf_lo,qinf_hi,T");
    assert_eq!(lines.len(), 5 + s.rows.len());
    assert!(!text.contains('\r'));

    let (prov, table) = read_csv(&path).unwrap();
    assert_eq!((prov.config_hash.as_str(), prov.model_hash.as_str()), ("cfg", "model"));
    assert_eq!(prov.wall_time_s, 0.25);
    for (r, cells) in s.rows.iter().zip(&table.rows) {
        assert_eq!(cells[0].parse::<f64>().unwrap(), r.a);
        assert_eq!(cells[1].parse::<f64>().unwrap(), r.omega);
        assert_eq!(cells[2], "rational");
    }
}

#[test]
fn lattice_round_trips_through_json() {
    let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
    let lat = ebk_lattice(&p, &Observable::cos_2s(), 0.1, 0.05, (0.8, 1.2), &LatticeOptions::default()).unwrap();
    let path = tmp("lattice.json");
    let prov = Provenance::new("c", "m", 1.0);
    write_json(&path, &prov, &lat).unwrap();
    let (back_prov, back): (Provenance, toruslab::Lattice) = read_json(&path).unwrap();
    assert_eq!(back, lat);
    assert_eq!(back_prov, prov);
    let t = lattice_table(&lat);
    assert_eq!(t.header, ["k1", "k2", "E", "F", "Re z", "Im z", "class", "height"]);
    assert_eq!(t.rows.len(), lat.entries.len());
}

#[test]
fn reruns_differ_only_in_the_run_line() {
    let t = Table {
        header: vec!["x".into(), "label".into()],
        rows: vec![vec![num(0.1 + 0.2), "a,b".into()], vec![num(1e-300), "".into()]],
    };
    let (a, b) = (tmp("a.csv"), tmp("b.csv"));
    write_csv(&a, &Provenance::new("h", "m", 1.0), &t).unwrap();
    write_csv(&b, &Provenance { timestamp: 7, ..Provenance::new("h", "m", 9.0) }, &t).unwrap();
    let strip = |p: &std::path::Path| {
        fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with("# run:")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    let (_, back) = read_csv(&a).unwrap();
    assert_eq!(back.rows, t.rows);
    assert_eq!(back.rows[0][0].parse::<f64>().unwrap(), 0.1 + 0.2);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(read_csv(&tmp("nope.csv")), Err(toruslab::Error::Io(_))));
}
