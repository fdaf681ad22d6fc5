use std::io::Write;

use votexfer::dataio::{load_election_csv, load_json, load_pools_csv, load_vote_split_csv, FIXTURE_DIR_ENV};
use votexfer::manipulation::Strategy;
use votexfer::Error;

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn loaders_read_files() {
    let e = load_election_csv(file("district_id,party,votes\nC1,A,65\nC1,B,35\n").path()).unwrap();
    assert_eq!(e.num_districts(), 1);
    let t = load_pools_csv(file("party,constituency_seats,pool_dvt,pool_pvt,pool_nvt\nX,1,1,2,3\n").path()).unwrap();
    assert_eq!(t.pools[2], [3]);
    let rows = load_vote_split_csv(file("party,list_votes,candidate_votes\nX,10,8\n").path()).unwrap();
    assert_eq!(rows[0].1, 10);
    let s: Strategy =
        load_json(file(r#"{"strategy":"deliberate_loss","district_id":"C1","party":"A"}"#).path()).unwrap();
    assert!(matches!(s, Strategy::DeliberateLoss { .. }));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_election_csv("/nonexistent/votes.csv").unwrap_err();
    assert_eq!(err.kind(), "IoError");
    assert!(err.to_string().contains("/nonexistent/votes.csv"));
}

#[test]
fn validation_errors_name_the_invariant() {
    let err = load_election_csv(file("district_id,party,votes\nC1,A,5\n").path()).unwrap_err();
    assert!(matches!(&err, Error::Validation { invariant } if invariant.contains("at least two parties")));
    let err = load_election_csv(file("district_id,party,votes\nC1,A,0\nC1,B,0\n").path()).unwrap_err();
    assert!(matches!(&err, Error::Validation { invariant } if invariant.contains("no votes")));
}

#[test]
fn fixture_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("example1.csv"),
        "district_id,party,votes\nZ,A,1\nZ,B,2\n",
    )
    .unwrap();
    std::env::set_var(FIXTURE_DIR_ENV, dir.path());
    let text = votexfer::dataio::fixture_text("example1").unwrap();
    let embedded = votexfer::dataio::fixture_text("hungary2014").unwrap();
    std::env::remove_var(FIXTURE_DIR_ENV);
    assert!(text.contains("Z,A,1"));
    assert!(embedded.starts_with("party,"));
}
