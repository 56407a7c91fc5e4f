mod common;

use nestrec::oeis::{check_correspondence, lookup, parse_bfile, registry, Transform};

fn load(id: &str) -> nestrec::oeis::BFile {
    let path = common::fixtures_dir().join(format!("b{}.txt", &id[1..]));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_bfile(id, &bytes).unwrap()
}

#[test]
fn every_registered_row_matches_its_fixture() {
    for corr in registry() {
        let b = load(&corr.oeis_id);
        assert_eq!(b.len(), 10_000);
        let r = check_correspondence(&corr, &b, 10_000).unwrap();
        assert!(r.passed, "{r}");
        assert_eq!(r.count("checked"), b.len() as u64, "{}: partial overlap", corr.oeis_id);
    }
}

#[test]
fn unshifted_a028391_fails_at_once() {
    let mut corr = lookup("A028391").unwrap();
    corr.transform = Transform { index_shift: 0, value_shift: 0 };
    let r = check_correspondence(&corr, &load("A028391"), 10_000).unwrap();
    assert!(!r.passed);
    assert_eq!(r.counterexample.unwrap().n, 1);
}

#[test]
fn fixtures_round_trip_through_canonical_text() {
    let b = load("A196126");
    assert_eq!(parse_bfile("A196126", b.to_text().as_bytes()).unwrap(), b);
}

/// Live download from oeis.org; set NESTREC_LIVE_OEIS=1 to run.
#[test]
#[ignore]
fn live_fetch_and_check() {
    if std::env::var("NESTREC_LIVE_OEIS").as_deref() != Ok("1") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = nestrec::oeis::FetchConfig::from_env(dir.path(), true);
    for corr in registry() {
        let bytes = nestrec::oeis::fetch_bfile(&corr.oeis_id, &cfg).unwrap();
        let b = parse_bfile(&corr.oeis_id, &bytes).unwrap();
        let r = check_correspondence(&corr, &b, 10_000).unwrap();
        println!("{r}");
    }
}
