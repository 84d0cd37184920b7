//! CSV and binary trace files.
//!
//! CSV: header `ts,req,kind,addr,tag`, `kind` is `R` or `W`, `addr` is hex
//! with a `0x` prefix. Binary: magic `HTRC`, one version byte, then
//! little-endian 26-byte records `ts:u64 req:u8 kind:u8 addr:u64 tag:u64`.
//! Layer marks live next to the trace in `<stem>.layers.csv` (`pos,layer`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AccessKind, AccessSequence, LayerMark, MemoryAccess};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"HTRC";
pub const BINARY_VERSION: u8 = 1;
pub const BINARY_RECORD_BYTES: usize = 26;

const CSV_HEADER: [&str; 5] = ["ts", "req", "kind", "addr", "tag"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Binary,
}

impl TraceFormat {
    /// Guess from the file extension; anything other than `.bin`/`.htrc` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("htrc") => TraceFormat::Binary,
            _ => TraceFormat::Csv,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TraceFormat::Csv),
            "binary" | "bin" => Ok(TraceFormat::Binary),
            other => Err(Error::Config(format!("unknown trace format '{other}'"))),
        }
    }
}

pub fn layers_sidecar_path(trace_path: &Path) -> PathBuf {
    let stem = trace_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    trace_path.with_file_name(format!("{stem}.layers.csv"))
}

pub fn parse_trace(path: &Path, format: TraceFormat) -> Result<AccessSequence> {
    let accesses = match format {
        TraceFormat::Csv => parse_csv(path)?,
        TraceFormat::Binary => parse_binary(path)?,
    };
    let mut seq = AccessSequence::new(accesses, path.display().to_string());
    let sidecar = layers_sidecar_path(path);
    if sidecar.exists() {
        seq.layer_marks = read_layer_marks(&sidecar)?;
    }
    seq.validate()?;
    Ok(seq)
}

fn parse_hex(field: &str) -> Option<u64> {
    let digits = field
        .strip_prefix("0x")
        .or_else(|| field.strip_prefix("0X"))?;
    u64::from_str_radix(digits, 16).ok()
}

fn parse_csv(path: &Path) -> Result<Vec<MemoryAccess>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse_line(idx + 1, e.to_string()))?;
        if !saw_header {
            saw_header = true;
            if record.iter().eq(CSV_HEADER.iter().copied()) {
                continue;
            }
        }
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        out.push(parse_csv_record(&record, line)?);
    }
    Ok(out)
}

fn parse_csv_record(record: &csv::StringRecord, line: usize) -> Result<MemoryAccess> {
    if record.len() != 5 {
        return Err(Error::parse_line(
            line,
            format!("expected 5 fields, found {}", record.len()),
        ));
    }
    let timestamp = record[0]
        .parse::<u64>()
        .map_err(|_| Error::parse_line(line, format!("bad timestamp '{}'", &record[0])))?;
    let requester_id = record[1]
        .parse::<u8>()
        .map_err(|_| Error::parse_line(line, format!("bad requester '{}'", &record[1])))?;
    let kind = match &record[2] {
        "R" => AccessKind::Read,
        "W" => AccessKind::Write,
        other => {
            return Err(Error::parse_line(
                line,
                format!("bad access kind '{other}' (expected R or W)"),
            ))
        }
    };
    let address = parse_hex(&record[3])
        .ok_or_else(|| Error::parse_line(line, format!("bad address '{}'", &record[3])))?;
    let tag = record[4]
        .parse::<u64>()
        .map_err(|_| Error::parse_line(line, format!("bad tag '{}'", &record[4])))?;
    Ok(MemoryAccess {
        timestamp,
        requester_id,
        address,
        kind,
        tag,
    })
}

fn parse_binary(path: &Path) -> Result<Vec<MemoryAccess>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    if bytes.len() < 5 || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::parse_offset(0, "missing HTRC magic"));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(Error::parse_offset(
            4,
            format!("unsupported version {}", bytes[4]),
        ));
    }
    let body = &bytes[5..];
    if body.len() % BINARY_RECORD_BYTES != 0 {
        let offset = 5 + (body.len() / BINARY_RECORD_BYTES) * BINARY_RECORD_BYTES;
        return Err(Error::parse_offset(offset as u64, "truncated record"));
    }
    body.chunks_exact(BINARY_RECORD_BYTES)
        .enumerate()
        .map(|(i, rec)| {
            let offset = (5 + i * BINARY_RECORD_BYTES) as u64;
            let u64_at = |at: usize| u64::from_le_bytes(rec[at..at + 8].try_into().unwrap());
            let kind = match rec[9] {
                0 => AccessKind::Read,
                1 => AccessKind::Write,
                k => return Err(Error::parse_offset(offset + 9, format!("bad kind byte {k}"))),
            };
            Ok(MemoryAccess {
                timestamp: u64_at(0),
                requester_id: rec[8],
                kind,
                address: u64_at(10),
                tag: u64_at(18),
            })
        })
        .collect()
}

pub fn write_trace(seq: &AccessSequence, path: &Path, format: TraceFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        TraceFormat::Csv => {
            writeln!(w, "ts,req,kind,addr,tag").map_err(io)?;
            for a in &seq.accesses {
                writeln!(
                    w,
                    "{},{},{},{:#x},{}",
                    a.timestamp,
                    a.requester_id,
                    a.kind.as_char(),
                    a.address,
                    a.tag
                )
                .map_err(io)?;
            }
        }
        TraceFormat::Binary => {
            w.write_all(BINARY_MAGIC).map_err(io)?;
            w.write_all(&[BINARY_VERSION]).map_err(io)?;
            let mut rec = [0u8; BINARY_RECORD_BYTES];
            for a in &seq.accesses {
                rec[0..8].copy_from_slice(&a.timestamp.to_le_bytes());
                rec[8] = a.requester_id;
                rec[9] = matches!(a.kind, AccessKind::Write) as u8;
                rec[10..18].copy_from_slice(&a.address.to_le_bytes());
                rec[18..26].copy_from_slice(&a.tag.to_le_bytes());
                w.write_all(&rec).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)?;
    let sidecar = layers_sidecar_path(path);
    if !seq.layer_marks.is_empty() {
        write_layer_marks(&seq.layer_marks, &sidecar)?;
    } else if sidecar.exists() {
        // a stale sidecar would attach the wrong layers on the next parse
        std::fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

pub fn write_layer_marks(marks: &[LayerMark], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(e.to_string()))?;
    let err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    w.write_record(["pos", "layer"]).map_err(err)?;
    for m in marks {
        w.write_record([m.position.to_string(), m.layer_id.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_layer_marks(path: &Path) -> Result<Vec<LayerMark>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut marks = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| Error::parse_line(line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse_line(line, "expected pos,layer"));
        }
        let position = rec[0]
            .parse()
            .map_err(|_| Error::parse_line(line, format!("bad position '{}'", &rec[0])))?;
        let layer_id = rec[1]
            .parse()
            .map_err(|_| Error::parse_line(line, format!("bad layer '{}'", &rec[1])))?;
        marks.push(LayerMark { position, layer_id });
    }
    Ok(marks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, body: &[u8]) -> PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body).unwrap();
        p
    }

    #[test]
    fn csv_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "t.csv",
            b"ts,req,kind,addr,tag\n1,0,R,0x1000,0\n2,0,W,0x1040,0\n",
        );
        let seq = parse_trace(&p, TraceFormat::Csv).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.accesses[0], MemoryAccess::read(1, 0, 0x1000));
        assert_eq!(seq.accesses[1], MemoryAccess::write(2, 0, 0x1040));
    }

    #[test]
    fn empty_file_is_empty_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "e.csv", b"");
        assert_eq!(parse_trace(&p, TraceFormat::Csv).unwrap().len(), 0);
        let b = write_file(dir.path(), "e.bin", b"");
        assert_eq!(parse_trace(&b, TraceFormat::Binary).unwrap().len(), 0);
    }

    #[test]
    fn bad_kind_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "x.csv", b"1,0,X,0x1000,0\n");
        match parse_trace(&p, TraceFormat::Csv) {
            Err(Error::Parse { location, message }) => {
                assert_eq!(location, "line 1");
                assert!(message.contains('X'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "m.csv", b"5,0,R,0x0,0\n3,0,R,0x40,0\n");
        assert!(matches!(
            parse_trace(&p, TraceFormat::Csv),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn binary_layout_is_26_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let seq = AccessSequence::new(
            vec![MemoryAccess::write(7, 3, 0xdead_beef).with_tag(9)],
            "b",
        );
        let p = dir.path().join("one.bin");
        write_trace(&seq, &p, TraceFormat::Binary).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 5 + BINARY_RECORD_BYTES);
        assert_eq!(&bytes[..4], b"HTRC");
        assert_eq!(bytes[4], BINARY_VERSION);
        assert_eq!(bytes[5], 7);
        assert_eq!(bytes[5 + 8], 3);
        assert_eq!(bytes[5 + 9], 1);
        assert_eq!(parse_trace(&p, TraceFormat::Binary).unwrap().accesses, seq.accesses);
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = b"HTRC\x01".to_vec();
        body.extend_from_slice(&[0u8; 30]);
        let p = write_file(dir.path(), "t.bin", &body);
        match parse_trace(&p, TraceFormat::Binary) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "byte offset 31"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sidecar_layers_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut seq = AccessSequence::new(
            (0..6).map(|i| MemoryAccess::read(i, 8, i * 64)).collect(),
            "l",
        );
        seq.layer_marks = vec![
            LayerMark { position: 0, layer_id: 0 },
            LayerMark { position: 3, layer_id: 1 },
        ];
        let p = dir.path().join("acc.csv");
        write_trace(&seq, &p, TraceFormat::Csv).unwrap();
        assert!(dir.path().join("acc.layers.csv").exists());
        let head = std::fs::read_to_string(dir.path().join("acc.layers.csv")).unwrap();
        assert!(head.starts_with("pos,layer\n"));
        let back = parse_trace(&p, TraceFormat::Csv).unwrap();
        assert_eq!(back.layer_marks, seq.layer_marks);
    }
}
