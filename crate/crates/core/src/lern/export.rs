//! Per-layer model files: `layerN.csv` rows `line_addr_hex,rc_cluster,ri_cluster`
//! (label ordinals, -1 for No-Reuse) plus `layerN.json` with everything else.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::model::ClusterModel;
use crate::error::{Error, Result};

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn export_model(model: &ClusterModel, csv_path: &Path) -> Result<()> {
    let f = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(csv_path, e);
    writeln!(w, "line_addr_hex,rc_cluster,ri_cluster").map_err(io)?;
    for (&line, &(rc, ri)) in &model.assignments {
        let (rc, ri) = if rc < 0 || ri < 0 {
            (-1, -1)
        } else {
            (
                model.rc_annotation[rc as usize] as i8,
                model.ri_annotation[ri as usize] as i8,
            )
        };
        writeln!(w, "{line:#x},{rc},{ri}").map_err(io)?;
    }
    w.flush().map_err(io)?;

    let side = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(model).expect("model serializes");
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

fn parse_hex(s: &str) -> Option<u64> {
    u64::from_str_radix(s.strip_prefix("0x").unwrap_or(s), 16).ok()
}

/// Reads a model back. Label ordinals are mapped to center indices through
/// the sidecar's annotations.
pub fn import_model(csv_path: &Path) -> Result<ClusterModel> {
    let side = sidecar_path(csv_path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let mut model: ClusterModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: side.display().to_string(),
        message: e.to_string(),
    })?;
    let rc_index = |label: i64| model.rc_annotation.iter().position(|&l| l as i64 == label);
    let ri_index = |label: i64| model.ri_annotation.iter().position(|&l| l as i64 == label);

    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| Error::Parse {
        location: csv_path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut assignments = std::collections::BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let line_no = n + 2;
        let rec = rec.map_err(|e| Error::parse_line(line_no, e.to_string()))?;
        if rec.len() != 3 {
            return Err(Error::parse_line(line_no, "expected 3 fields"));
        }
        let line = parse_hex(&rec[0]).ok_or_else(|| Error::parse_line(line_no, "bad line address"))?;
        let num = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::parse_line(line_no, format!("bad cluster id '{s}'")))
        };
        let (rc, ri) = (num(&rec[1])?, num(&rec[2])?);
        let entry = if rc < 0 || ri < 0 {
            (-1, -1)
        } else {
            let rc = rc_index(rc).ok_or_else(|| Error::parse_line(line_no, "unknown RC label"))?;
            let ri = ri_index(ri).ok_or_else(|| Error::parse_line(line_no, "unknown RI label"))?;
            (rc as i8, ri as i8)
        };
        assignments.insert(line, entry);
    }
    model.assignments = assignments;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lern::model::tests::toy_sequence;
    use crate::lern::train_layer;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("layer0.csv");
        let m = train_layer(&toy_sequence(), 0, 6, 1).unwrap();
        export_model(&m, &p).unwrap();
        let back = import_model(&p).unwrap();
        assert_eq!(back, m);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("line_addr_hex,rc_cluster,ri_cluster\n0x1,"));
    }
}
