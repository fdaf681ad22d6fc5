//! File formats: per-district vote CSVs, pool fixtures, vote-split rows,
//! JSON configs and the CSV outputs of the analysis pipelines.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::analytic::CurveSample;
use crate::apportionment::{PoolTable, Sweep};
use crate::error::{Error, Result};
use crate::model::{DistrictResult, ElectionInput, PartyId, TransferFormula};
use crate::simulation::KSweepRow;

/// District id under which separate national list votes are given.
pub const LIST_DISTRICT: &str = "@list";

pub const ELECTION_HEADER: [&str; 3] = ["district_id", "party", "votes"];
pub const POOLS_HEADER: [&str; 5] = ["party", "constituency_seats", "pool_dvt", "pool_pvt", "pool_nvt"];
pub const VOTE_SPLIT_HEADER: [&str; 3] = ["party", "list_votes", "candidate_votes"];

/// Environment variable naming a directory that overrides the embedded
/// fixtures.
pub const FIXTURE_DIR_ENV: &str = "VOTEXFER_FIXTURE_DIR";

const EMBEDDED: [(&str, &str); 3] = [
    ("example1", include_str!("../fixtures/example1.csv")),
    ("hungary2014", include_str!("../fixtures/hungary2014.csv")),
    (
        "hungary2014_votesplit",
        include_str!("../fixtures/hungary2014_votesplit.csv"),
    ),
];

/// Names of the fixtures shipped with the library.
pub fn fixture_names() -> impl Iterator<Item = &'static str> {
    EMBEDDED.iter().map(|(name, _)| *name)
}

/// Text of fixture `name`, read from `$VOTEXFER_FIXTURE_DIR/<name>.csv` when
/// that file exists and from the embedded copy otherwise.
pub fn fixture_text(name: &str) -> Result<String> {
    if let Some(dir) = std::env::var_os(FIXTURE_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{name}.csv"));
        if path.is_file() {
            return read_to_string(&path);
        }
    }
    EMBEDDED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| (*text).to_string())
        .ok_or_else(|| Error::InvalidConfig(format!("unknown fixture {name:?}")))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, csv::Position::line);
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => parse_error(line, err.to_string()),
        _ => parse_error(line, e.to_string()),
    }
}

/// Reads records after checking the header, handing each to `row` with its
/// 1-based line number.
fn read_records(text: &str, header: &[&str], mut row: impl FnMut(u64, &csv::StringRecord) -> Result<()>) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(csv_error)?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Err(parse_error(1, "empty input"));
    }
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_error(1, format!("expected header {:?}", header.join(","))));
    }
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map_or(0, csv::Position::line);
        row(line, &record)?;
    }
    Ok(())
}

fn parse_count(line: u64, field: &str, what: &str) -> Result<u64> {
    if let Some(rest) = field.strip_prefix('-') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::validation(format!(
                "{what} must be non-negative (line {line}: {field})"
            )));
        }
    }
    field
        .parse()
        .map_err(|_| parse_error(line, format!("{what} {field:?} is not a non-negative integer")))
}

fn parse_party(line: u64, field: &str) -> Result<PartyId> {
    PartyId::new(field).map_err(|_| parse_error(line, "empty party id"))
}

/// Parses per-district votes. Parties and districts keep the order of their
/// first appearance; rows with district id `@list` give national list votes.
pub fn parse_election_csv(text: &str) -> Result<ElectionInput> {
    let mut parties: Vec<PartyId> = Vec::new();
    let mut districts: Vec<DistrictResult> = Vec::new();
    let mut district_pos: HashMap<String, usize> = HashMap::new();
    let mut list_votes: Option<Vec<(PartyId, u64)>> = None;
    read_records(text, &ELECTION_HEADER, |line, rec| {
        let district = &rec[0];
        if district.is_empty() {
            return Err(parse_error(line, "empty district id"));
        }
        let party = parse_party(line, &rec[1])?;
        let votes = parse_count(line, &rec[2], "votes")?;
        if !parties.contains(&party) {
            parties.push(party.clone());
        }
        if district == LIST_DISTRICT {
            let lv = list_votes.get_or_insert_with(Vec::new);
            if lv.iter().any(|(p, _)| *p == party) {
                return Err(Error::validation(format!(
                    "list votes for {party} given more than once (line {line})"
                )));
            }
            lv.push((party, votes));
            return Ok(());
        }
        let i = *district_pos.entry(district.to_string()).or_insert_with(|| {
            districts.push(DistrictResult::new(district, []));
            districts.len() - 1
        });
        if districts[i].votes.iter().any(|(p, _)| *p == party) {
            return Err(Error::validation(format!(
                "district {district} lists party {party} more than once (line {line})"
            )));
        }
        districts[i].votes.push((party, votes));
        Ok(())
    })?;
    if parties.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    ElectionInput::new(parties, districts, list_votes)
}

pub fn load_election_csv(path: impl AsRef<Path>) -> Result<ElectionInput> {
    parse_election_csv(&read_to_string(path.as_ref())?)
}

/// Canonical CSV form: districts in order, each listing its parties in party
/// order, followed by any `@list` rows.
pub fn write_election_csv<W: Write>(e: &ElectionInput, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let emit = |w: &mut csv::Writer<W>, rec: [&str; 3]| w.write_record(rec).map_err(csv_error);
    emit(&mut w, ELECTION_HEADER)?;
    for (d, id) in e.district_ids().enumerate() {
        for (p, party) in e.parties().iter().enumerate() {
            if e.has_entry(d, p) {
                emit(&mut w, [id, party.as_str(), &e.votes(d, p).to_string()])?;
            }
        }
    }
    if let Some(lv) = e.list_votes() {
        for (party, v) in e.parties().iter().zip(lv) {
            emit(&mut w, [LIST_DISTRICT, party.as_str(), &v.to_string()])?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<output>"),
        source,
    })
}

pub fn election_csv_string(e: &ElectionInput) -> Result<String> {
    let mut buf = Vec::new();
    write_election_csv(e, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[derive(Deserialize)]
struct PoolRow {
    party: String,
    constituency_seats: u32,
    pool_dvt: u64,
    pool_pvt: u64,
    pool_nvt: u64,
}

/// Parses aggregate pools per formula together with the district seats
/// each party won. Pools must grow from DVT to PVT to NVT.
pub fn parse_pools_csv(text: &str) -> Result<PoolTable> {
    let mut table = PoolTable {
        parties: Vec::new(),
        constituency_seats: Vec::new(),
        pools: [Vec::new(), Vec::new(), Vec::new()],
    };
    let header = csv::StringRecord::from(POOLS_HEADER.to_vec());
    read_records(text, &POOLS_HEADER, |line, rec| {
        let row: PoolRow = rec.deserialize(Some(&header)).map_err(|e| {
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_error(line, message)
        })?;
        let party = parse_party(line, &row.party)?;
        if table.parties.contains(&party) {
            return Err(Error::validation(format!(
                "party ids must be unique ({party} repeated)"
            )));
        }
        if !(row.pool_dvt <= row.pool_pvt && row.pool_pvt <= row.pool_nvt) {
            return Err(Error::MonotonicityViolation { party });
        }
        table.parties.push(party);
        table.constituency_seats.push(row.constituency_seats);
        table.pools[TransferFormula::Dvt.index()].push(row.pool_dvt);
        table.pools[TransferFormula::Pvt.index()].push(row.pool_pvt);
        table.pools[TransferFormula::Nvt.index()].push(row.pool_nvt);
        Ok(())
    })?;
    if table.parties.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    Ok(table)
}

pub fn load_pools_csv(path: impl AsRef<Path>) -> Result<PoolTable> {
    parse_pools_csv(&read_to_string(path.as_ref())?)
}

/// Gap between a party's list votes and its candidates' votes.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VoteSplitStat {
    pub party: PartyId,
    pub inland_list_votes: u64,
    pub candidate_votes: u64,
    /// `(list - candidate) / candidate`.
    pub split: f64,
}

pub fn vote_split_stats(rows: &[(PartyId, u64, u64)]) -> Result<Vec<VoteSplitStat>> {
    rows.iter()
        .map(|(party, l, c)| {
            if *c == 0 {
                return Err(Error::ZeroCandidateVotes { party: party.clone() });
            }
            Ok(VoteSplitStat {
                party: party.clone(),
                inland_list_votes: *l,
                candidate_votes: *c,
                split: (*l as f64 - *c as f64) / *c as f64,
            })
        })
        .collect()
}

pub fn parse_vote_split_csv(text: &str) -> Result<Vec<(PartyId, u64, u64)>> {
    let mut rows = Vec::new();
    read_records(text, &VOTE_SPLIT_HEADER, |line, rec| {
        rows.push((
            parse_party(line, &rec[0])?,
            parse_count(line, &rec[1], "list_votes")?,
            parse_count(line, &rec[2], "candidate_votes")?,
        ));
        Ok(())
    })?;
    Ok(rows)
}

pub fn load_vote_split_csv(path: impl AsRef<Path>) -> Result<Vec<(PartyId, u64, u64)>> {
    parse_vote_split_csv(&read_to_string(path.as_ref())?)
}

/// Reads a JSON document into `T`, rejecting what `T` rejects.
pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Formats `v` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<output>"),
        source,
    })
}

/// Columns `x,side,formula,seat_share`.
pub fn write_curves_csv<W: Write>(samples: &[CurveSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "side", "formula", "seat_share"])
        .map_err(csv_error)?;
    for s in samples {
        w.write_record([
            fmt_sig(s.x).as_str(),
            s.curve.side_label(),
            s.curve.formula_label(),
            &fmt_sig(s.seat_share),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

/// One row per list-seat count and party.
pub fn write_sweep_csv<W: Write>(sweep: &Sweep, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "list_seats",
        "formula",
        "party",
        "seats",
        "seat_share",
        "diff",
        "two_thirds",
    ])
    .map_err(csv_error)?;
    for row in &sweep.rows {
        let a = &row.allocation;
        for (i, party) in a.parties.iter().enumerate() {
            w.write_record([
                row.list_seats.to_string().as_str(),
                sweep.formula.name(),
                party.as_str(),
                &a.total_seats[i].to_string(),
                &fmt_sig(a.seat_share(i)),
                &fmt_sig(row.diff),
                if row.two_thirds[i] { "1" } else { "0" },
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w)
}

/// Per-`k` majority fractions and mean seat shares.
pub fn write_k_sweep_csv<W: Write>(rows: &[KSweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "all_three_majority",
        "mean_dvt",
        "mean_pvt",
        "mean_nvt",
        "expected_dvt",
    ])
    .map_err(csv_error)?;
    for r in rows {
        let s = &r.summary;
        let frac = s.all_three() as f64 / s.runs as f64;
        w.write_record([
            fmt_sig(r.k),
            fmt_sig(frac),
            fmt_sig(s.mean_seat_share[0]),
            fmt_sig(s.mean_seat_share[1]),
            fmt_sig(s.mean_seat_share[2]),
            fmt_sig(r.expected_dvt),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::pid;
    use crate::model::{continuous_allocation, MixRatio};

    #[test]
    fn example_fixture_reproduces_shares() {
        let e = parse_election_csv(&fixture_text("example1").unwrap()).unwrap();
        let m = MixRatio::new(0.6).unwrap();
        let a = continuous_allocation(&e, TransferFormula::Nvt, m).unwrap();
        assert!((a.seat_share_of(&pid("A")).unwrap() - 0.53125).abs() < 1e-12);
    }

    #[test]
    fn election_errors() {
        assert!(matches!(parse_election_csv(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_election_csv("district_id,party,votes\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_election_csv("district_id,party,votes\nC1,A,-3\nC1,B,2\n"),
            Err(Error::Validation { .. })
        ));
        match parse_election_csv("district_id,party,votes\nC1,A,3\nC1,B,x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_election_csv("district_id,party,votes\nC1,A,3\nC1,A,2\n"),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            parse_election_csv("district,party,votes\nC1,A,3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_election_csv("district_id,party,votes\nC1,A,3\nC1,B\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn list_rows() {
        let text = "district_id,party,votes\nC1,A,3\nC1,B,2\n@list,A,10\n@list,B,20\n";
        let e = parse_election_csv(text).unwrap();
        assert_eq!(e.list_votes(), Some(&[10u64, 20][..]));
        assert_eq!(election_csv_string(&e).unwrap(), text);
    }

    #[test]
    fn canonical_round_trip() {
        let text = fixture_text("example1").unwrap();
        let e = parse_election_csv(&text).unwrap();
        assert_eq!(election_csv_string(&e).unwrap(), text);
    }

    #[test]
    fn pools_fixture() {
        let t = parse_pools_csv(&fixture_text("hungary2014").unwrap()).unwrap();
        assert_eq!(t.parties[0].as_str(), "FIDESZ-KDNP");
        assert_eq!(
            [t.pools[0][0], t.pools[1][0], t.pools[2][0]],
            [2264780, 2440963, 3205661]
        );
        assert_eq!(t.pools[1][2], t.pools[2][2]);
        assert_eq!(t.constituency_seats, [96, 10, 0, 0]);
    }

    #[test]
    fn pool_errors() {
        let h = "party,constituency_seats,pool_dvt,pool_pvt,pool_nvt\n";
        assert!(matches!(
            parse_pools_csv(&format!("{h}X,0,10,9,12\n")),
            Err(Error::MonotonicityViolation { .. })
        ));
        assert!(matches!(
            parse_pools_csv(&format!("{h}X,0,10,11,10\n")),
            Err(Error::MonotonicityViolation { .. })
        ));
        assert!(matches!(
            parse_pools_csv(&format!("{h}X,0,ten,11,12\n")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_pools_csv(h), Err(Error::Parse { .. })));
    }

    #[test]
    fn vote_split() {
        let rows = parse_vote_split_csv(&fixture_text("hungary2014_votesplit").unwrap()).unwrap();
        let stats = vote_split_stats(&rows).unwrap();
        let pct: Vec<f64> = stats.iter().map(|s| (s.split * 10000.0).round() / 100.0).collect();
        assert_eq!(pct, [-1.07, -2.17, 1.69, 10.09]);
        let same = vote_split_stats(&[(pid("X"), 5, 5)]).unwrap();
        assert_eq!(same[0].split, 0.0);
        assert!(matches!(
            vote_split_stats(&[(pid("X"), 5, 0)]),
            Err(Error::ZeroCandidateVotes { .. })
        ));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.52), "0.52");
        assert_eq!(fmt_sig(73.0 / 140.0), "0.521428571429");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0107), "-0.0107");
        assert_eq!(fmt_sig(1.86863968081614e-3), "0.00186863968082");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_sig(0.668341708542714), "0.668341708543");
    }
}
