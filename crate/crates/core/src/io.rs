//! File formats: CSV and JSON for counts, reference tables, sweeps and grids,
//! JSON-lines for trial records, and atomic file replacement.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::GridReport;
use crate::error::{Error, Result};
use crate::estimator::{ReferenceCounts, ReferenceTable};
use crate::harness::{InfidelityRow, SweepAxis, SweepResult};
use crate::model::{DoubleReadoutCounts, RoundOutcome, Subspace};
use crate::sim::TrialRecord;

fn csv_error(what: &'static str) -> impl Fn(csv::Error) -> Error {
    move |e| Error::parse(what, e)
}

fn flag(value: u8, what: &'static str) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::parse(what, format!("{value} is not 0 or 1"))),
    }
}

fn bit(value: u8, what: &'static str) -> Result<Subspace> {
    flag(value, what).map(|b| Subspace::from_index(b as usize).expect("0 or 1"))
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes).map_err(|e| Error::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---- double-readout counts -------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    o_prime: u8,
    o: u8,
    prep: u8,
    count: u64,
}

/// Eight rows `o_prime,o,prep,count`, ordered by `prep`, `o_prime`, `o`.
pub fn write_counts_csv<W: Write>(counts: &DoubleReadoutCounts, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (o2, o, p, count) in counts.cells() {
        w.serialize(CountRow {
            o_prime: o2.index() as u8,
            o: o.index() as u8,
            prep: p.index() as u8,
            count,
        })
        .map_err(csv_error("counts CSV"))?;
    }
    w.flush().map_err(|e| Error::parse("counts CSV", e))
}

pub fn read_counts_csv<R: Read>(input: R) -> Result<DoubleReadoutCounts> {
    let mut counts = DoubleReadoutCounts::new();
    let mut seen = [[[false; 2]; 2]; 2];
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: CountRow = row.map_err(csv_error("counts CSV"))?;
        let (o2, o, p) = (bit(row.o_prime, "o_prime")?, bit(row.o, "o")?, bit(row.prep, "prep")?);
        let slot = &mut seen[p.index()][o2.index()][o.index()];
        if *slot {
            return Err(Error::parse("counts CSV", format!("duplicate cell ({o2}, {o}, {p})")));
        }
        *slot = true;
        counts.set(o2, o, p, row.count);
    }
    if seen.iter().flatten().flatten().any(|s| !s) {
        return Err(Error::parse("counts CSV", "expected all 8 cells"));
    }
    Ok(counts)
}

fn count_key(o2: Subspace, o: Subspace, p: Subspace) -> String {
    format!("n_{}{}_{}", o2.index(), o.index(), p.index())
}

/// JSON object keyed `n_<o'><o>_<p>`.
pub fn counts_to_json(counts: &DoubleReadoutCounts) -> String {
    let map: BTreeMap<String, u64> = counts.cells().map(|(o2, o, p, n)| (count_key(o2, o, p), n)).collect();
    serde_json::to_string_pretty(&map).expect("map serializes")
}

pub fn counts_from_json(text: &str) -> Result<DoubleReadoutCounts> {
    let mut map: BTreeMap<String, u64> = serde_json::from_str(text).map_err(|e| Error::parse("counts JSON", e))?;
    let mut counts = DoubleReadoutCounts::new();
    for p in Subspace::ALL {
        for o2 in Subspace::ALL {
            for o in Subspace::ALL {
                let key = count_key(o2, o, p);
                let n = map
                    .remove(&key)
                    .ok_or_else(|| Error::parse("counts JSON", format!("missing key {key}")))?;
                counts.set(o2, o, p, n);
            }
        }
    }
    if let Some(extra) = map.keys().next() {
        return Err(Error::parse("counts JSON", format!("unexpected key {extra}")));
    }
    Ok(counts)
}

/// Loads counts from a `.json` or CSV file.
pub fn load_counts(path: &Path) -> Result<DoubleReadoutCounts> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        counts_from_json(&text)
    } else {
        read_counts_csv(text.as_bytes())
    }
}

// ---- reference data --------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ReferenceCountRow {
    v: RoundOutcome,
    s: u8,
    count: u64,
}

/// Rows `v,s,count` with `v` written as two bits, e.g. `01`.
pub fn write_reference_counts_csv<W: Write>(counts: &ReferenceCounts, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in Subspace::ALL {
        for v in RoundOutcome::ALL {
            w.serialize(ReferenceCountRow {
                v,
                s: s.index() as u8,
                count: counts.get(v, s),
            })
            .map_err(csv_error("reference counts CSV"))?;
        }
    }
    w.flush().map_err(|e| Error::parse("reference counts CSV", e))
}

pub fn read_reference_counts_csv<R: Read>(input: R) -> Result<ReferenceCounts> {
    let mut counts = ReferenceCounts::default();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: ReferenceCountRow = row.map_err(csv_error("reference counts CSV"))?;
        counts.set(row.v, bit(row.s, "s")?, row.count);
    }
    Ok(counts)
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    v_bit1: u8,
    v_bit2: u8,
    subspace: u8,
    p_hat: f64,
}

/// Metadata stored next to a reference table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub floor: f64,
    pub totals: [u64; 2],
}

pub fn write_reference_table_csv<W: Write>(table: &ReferenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in Subspace::ALL {
        for v in RoundOutcome::ALL {
            w.serialize(TableRow {
                v_bit1: v.bit1 as u8,
                v_bit2: v.bit2 as u8,
                subspace: s.index() as u8,
                p_hat: table.p_hat(v, s),
            })
            .map_err(csv_error("reference table CSV"))?;
        }
    }
    w.flush().map_err(|e| Error::parse("reference table CSV", e))
}

pub fn sidecar_json(table: &ReferenceTable) -> String {
    let sidecar = TableSidecar {
        floor: table.smoothing_floor(),
        totals: table.source_totals(),
    };
    serde_json::to_string_pretty(&sidecar).expect("sidecar serializes")
}

pub fn read_reference_table<R: Read>(csv_input: R, sidecar: &str) -> Result<ReferenceTable> {
    let meta: TableSidecar = serde_json::from_str(sidecar).map_err(|e| Error::parse("reference table sidecar", e))?;
    let mut p_hat = [[f64::NAN; 4]; 2];
    for row in csv::Reader::from_reader(csv_input).deserialize() {
        let row: TableRow = row.map_err(csv_error("reference table CSV"))?;
        let v = RoundOutcome::new(flag(row.v_bit1, "v_bit1")?, flag(row.v_bit2, "v_bit2")?);
        p_hat[bit(row.subspace, "subspace")?.index()][v.index()] = row.p_hat;
    }
    ReferenceTable::from_probabilities(p_hat, meta.floor, meta.totals)
}

/// Path of the JSON sidecar belonging to a reference table CSV.
pub fn sidecar_path(table_csv: &Path) -> std::path::PathBuf {
    table_csv.with_extension("json")
}

pub fn save_reference_table(table: &ReferenceTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_reference_table_csv(table, &mut buf)?;
    write_atomic(path, &buf)?;
    write_atomic(&sidecar_path(path), sidecar_json(table).as_bytes())
}

pub fn load_reference_table(path: &Path) -> Result<ReferenceTable> {
    let csv_text = read_text(path)?;
    let sidecar = read_text(&sidecar_path(path))?;
    read_reference_table(csv_text.as_bytes(), &sidecar)
}

// ---- trial records ---------------------------------------------------------

pub fn write_trials_jsonl<W: Write>(records: &[TrialRecord], mut out: W) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record).expect("trial record serializes");
        writeln!(out, "{line}").map_err(|e| Error::parse("trial JSONL", e))?;
    }
    Ok(())
}

pub fn read_trials_jsonl<R: Read>(mut input: R) -> Result<Vec<TrialRecord>> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::parse("trial JSONL", e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::parse("trial JSONL", e)))
        .collect()
}

// ---- reports ---------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SweepRow {
    axis: &'static str,
    axis_value: f64,
    infidelity_s_plus: f64,
    infidelity_s_minus: f64,
    infidelity_mean: f64,
    mean_rounds: f64,
    ci_68_low: f64,
    ci_68_high: f64,
    ci_68_s_plus_low: f64,
    ci_68_s_plus_high: f64,
    ci_68_s_minus_low: f64,
    ci_68_s_minus_high: f64,
    cap_hits: u64,
}

pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let axis = match sweep.sweep_axis {
        SweepAxis::FixedRounds => "fixed_rounds",
        SweepAxis::ThresholdRatio => "threshold_ratio",
    };
    let mut w = csv::Writer::from_writer(out);
    for p in &sweep.points {
        w.serialize(SweepRow {
            axis,
            axis_value: p.axis_value,
            infidelity_s_plus: p.infidelity_s_plus,
            infidelity_s_minus: p.infidelity_s_minus,
            infidelity_mean: p.infidelity_mean,
            mean_rounds: p.mean_rounds,
            ci_68_low: p.ci_68_low,
            ci_68_high: p.ci_68_high,
            ci_68_s_plus_low: p.ci_68_s_plus.0,
            ci_68_s_plus_high: p.ci_68_s_plus.1,
            ci_68_s_minus_low: p.ci_68_s_minus.0,
            ci_68_s_minus_high: p.ci_68_s_minus.1,
            cap_hits: p.cap_hits,
        })
        .map_err(csv_error("sweep CSV"))?;
    }
    w.flush().map_err(|e| Error::parse("sweep CSV", e))
}

pub fn write_grid_csv<W: Write>(grid: &GridReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &grid.rows {
        w.serialize(row).map_err(csv_error("grid CSV"))?;
    }
    w.flush().map_err(|e| Error::parse("grid CSV", e))
}

pub fn write_infidelity_csv<W: Write>(rows: &[InfidelityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error("infidelity CSV"))?;
    }
    w.flush().map_err(|e| Error::parse("infidelity CSV", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_rounds, GenerativeConfig};

    #[test]
    fn counts_csv_round_trip() {
        let counts = DoubleReadoutCounts::training();
        let mut buf = Vec::new();
        write_counts_csv(&counts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("o_prime,o,prep,count\n"));
        assert_eq!(text.lines().count(), 9);
        assert_eq!(read_counts_csv(text.as_bytes()).unwrap(), counts);
    }

    #[test]
    fn counts_json_round_trip() {
        let counts = DoubleReadoutCounts::training();
        let json = counts_to_json(&counts);
        assert!(json.contains("\"n_10_0\": 2"));
        assert_eq!(counts_from_json(&json).unwrap(), counts);
        assert!(counts_from_json("{\"n_00_0\": 1}").is_err());
    }

    #[test]
    fn malformed_counts_rejected() {
        assert!(read_counts_csv("o_prime,o,prep,count\n0,0,2,5\n".as_bytes()).is_err());
        assert!(read_counts_csv("o_prime,o,prep,count\n0,0,0,5\n".as_bytes()).is_err());
        assert!(read_counts_csv("o_prime,o,prep,count\n0,0,0,-5\n".as_bytes()).is_err());
    }

    #[test]
    fn reference_table_round_trip() {
        let mut counts = ReferenceCounts::default();
        counts.set(RoundOutcome::BRIGHT_BRIGHT, Subspace::SPlus, 9000);
        counts.set(RoundOutcome::DARK_DARK, Subspace::SPlus, 997);
        counts.set(RoundOutcome::DARK_BRIGHT, Subspace::SPlus, 3);
        counts.set(RoundOutcome::DARK_DARK, Subspace::SMinus, 10000);
        let table = ReferenceTable::build(&counts, 1e-5).unwrap();
        let mut buf = Vec::new();
        write_reference_table_csv(&table, &mut buf).unwrap();
        let back = read_reference_table(buf.as_slice(), &sidecar_json(&table)).unwrap();
        assert_eq!(back, table);

        let mut buf = Vec::new();
        write_reference_counts_csv(&counts, &mut buf).unwrap();
        assert_eq!(read_reference_counts_csv(buf.as_slice()).unwrap(), counts);
    }

    #[test]
    fn trials_jsonl_round_trip() {
        let cfg = GenerativeConfig::resolve("45GHz").unwrap();
        let records: Vec<_> = (0..3).map(|i| simulate_rounds(&cfg, Subspace::SMinus, 5, i).unwrap()).collect();
        let mut buf = Vec::new();
        write_trials_jsonl(&records, &mut buf).unwrap();
        assert_eq!(read_trials_jsonl(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(read_text(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
