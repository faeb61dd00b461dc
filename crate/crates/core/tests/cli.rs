use std::process::{Command, Output};

use liequot::phi::PhiRecord;

const HURWITZ: &str = "<x,y | x^2,y^3,(xy)^7>";

fn liequot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liequot"))
        .args(args)
        .env_remove("LIEQUOT_CACHE")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn abel_of_triangle_group_is_trivial() {
    let o = liequot(&["abel", HURWITZ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "trivial");
    let o = liequot(&["--format", "json", "abel", "<a,b | a^4, b^6, a*b*a^-1*b^-1>"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["torsion"], serde_json::json!(["2", "12"]));
}

#[test]
fn incl_queries() {
    assert_eq!(stdout(&liequot(&["incl", "--d", "2", "--e", "1", "--f", "2"])).trim(), "false");
    assert_eq!(stdout(&liequot(&["incl", "--d", "2", "--e", "1", "--f", "3"])).trim(), "true");
    let o = liequot(&["--format", "json", "incl", "--d", "2", "--exponents", "2,6"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["common_overfield"], 6);
    assert_eq!(liequot(&["incl", "--d", "2", "--exponents", "1,2"]).status.code(), Some(1));
}

#[test]
fn count_emits_one_record_per_q() {
    let o = liequot(&["count", "--class", "A1", "--q", "7", HURWITZ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let rec: PhiRecord = serde_json::from_str(lines[0]).unwrap();
    assert!(rec.exact);
    assert_eq!((rec.n_phi, rec.orbit_count), (336, 1));

    let o = liequot(&["count", "--q", "4,5,7", HURWITZ]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn random_mode_is_marked_inexact() {
    let o = liequot(&["count", "--q", "13", "--random", "200", "<x,y|>"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: PhiRecord = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(!rec.exact);
    assert!(!rec.images.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(liequot(&["abel", "<x | y>"]).status.code(), Some(1));
    assert_eq!(liequot(&["count", "--q", "6", HURWITZ]).status.code(), Some(1));
    assert_eq!(liequot(&["count", "--q", "7", "--budget", "5", HURWITZ]).status.code(), Some(2));
    assert_eq!(liequot(&["count", "--q", "13", "--cap", "100", HURWITZ]).status.code(), Some(2));
    assert_eq!(liequot(&["--help"]).status.code(), Some(0));
}

#[test]
fn presentation_files_with_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.fp");
    std::fs::write(&path, "# (2,3,7) triangle group\n<x,y | x^2, y^3, (x*y)^7>  # Hurwitz\n").unwrap();
    let o = liequot(&["count", "--q", "7", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rec: PhiRecord = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(rec.n_phi, 336);
}

#[test]
fn cache_round_trip_through_env_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let first = Command::new(env!("CARGO_BIN_EXE_liequot"))
        .args(["count", "--q", "7", HURWITZ])
        .env("LIEQUOT_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 1);
    // Served from the cache: an impossible budget no longer matters.
    let second = liequot(&["--cache", cache.to_str().unwrap(), "count", "--q", "7", "--budget", "1", HURWITZ]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 1);
}

#[test]
fn verdict_output_carries_disclaimer() {
    let o = liequot(&["growth", "--q", "4,5,7", HURWITZ]);
    assert!(stdout(&o).contains("heuristic"));
    let o = liequot(&["residue", "--p", "2", "--e-max", "3", HURWITZ]);
    let out = stdout(&o);
    assert!(out.contains("001") && out.contains("heuristic"));
}

#[test]
fn unitary_subcommands() {
    let o = liequot(&["unitary", "p7", "--limit", "1000"]);
    assert!(stdout(&o).starts_with("P7 primes below 1000: 0"));
    let o = liequot(&["--format", "json", "unitary", "mu", "--q", "7", "--m", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["conclusion"], "MuExists");
    assert_eq!(v["witness_order"], 8);
    assert_eq!(liequot(&["unitary", "mu", "--q", "5", "--m", "4"]).status.code(), Some(1));
    let o = liequot(&["--format", "json", "unitary", "prime", "5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "inert");
}
