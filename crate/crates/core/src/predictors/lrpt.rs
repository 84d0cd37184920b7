use std::io::Write;
use std::path::Path;

use super::HashScheme;
use crate::error::{Error, Result};
use crate::lern::{import_model, ClusterModel, RcLabel, RiLabel};

/// Bits per table entry: valid + 2-bit RC cluster + 2-bit RI cluster.
pub const ENTRY_BITS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Reuse { rc: RcLabel, ri: RiLabel },
    NoReuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LrptConfig {
    pub hash: HashScheme,
}

impl LrptConfig {
    pub fn entries(&self) -> usize {
        self.hash.entries()
    }

    pub fn footprint_bytes(&self) -> u64 {
        self.entries() as u64 * ENTRY_BITS / 8
    }
}

impl Default for LrptConfig {
    fn default() -> Self {
        Self {
            hash: HashScheme::Bitmask(19),
        }
    }
}

/// Tagless direct-mapped table. Each byte holds one packed entry:
/// bit 4 valid, bits 3..2 RC label, bits 1..0 RI label.
#[derive(Debug, Clone)]
pub struct Lrpt {
    cfg: LrptConfig,
    table: Vec<u8>,
    /// Cold RC center of the loaded model, for the Cold special case.
    cold_center: Option<f64>,
    loaded_layer: Option<u32>,
}

impl Lrpt {
    pub fn new(cfg: LrptConfig) -> Result<Self> {
        cfg.hash.validate()?;
        Ok(Self {
            table: vec![0; cfg.entries()],
            cfg,
            cold_center: None,
            loaded_layer: None,
        })
    }

    pub fn config(&self) -> LrptConfig {
        self.cfg
    }

    pub fn footprint_bytes(&self) -> u64 {
        self.cfg.footprint_bytes()
    }

    pub fn cold_center(&self) -> Option<f64> {
        self.cold_center
    }

    pub fn loaded_layer(&self) -> Option<u32> {
        self.loaded_layer
    }

    pub fn clear(&mut self) {
        self.table.iter_mut().for_each(|e| *e = 0);
        self.cold_center = None;
        self.loaded_layer = None;
    }

    /// Clears the table and fills it from one layer's model. A model trained
    /// without hashing fits any table; a hashed one only fits its own scheme.
    pub fn load(&mut self, model: &ClusterModel) -> Result<()> {
        if let Some(h) = model.hash {
            if h != self.cfg.hash {
                return Err(Error::Config(format!(
                    "model trained under {h} cannot load into a {} table",
                    self.cfg.hash
                )));
            }
        }
        if model.block_bits != 6 {
            return Err(Error::Config(format!(
                "table is indexed by 64 B blocks, model uses block_bits={}",
                model.block_bits
            )));
        }
        self.clear();
        for &key in model.assignments.keys() {
            let Some((rc, ri)) = model.labels(key) else {
                continue;
            };
            let idx = match model.hash {
                Some(_) => key,
                None => self.cfg.hash.index(key),
            };
            self.table[idx as usize] = 0x10 | (rc as u8) << 2 | ri as u8;
        }
        self.cold_center = model.cold_center();
        self.loaded_layer = Some(model.layer_id);
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let model = import_model(path)?;
        self.load(&model)
    }

    pub fn lookup(&self, address: u64) -> Prediction {
        let e = self.table[self.cfg.hash.index(address >> 6) as usize];
        if e & 0x10 == 0 {
            Prediction::NoReuse
        } else {
            Prediction::Reuse {
                rc: RcLabel::ALL[(e >> 2 & 3) as usize],
                ri: RiLabel::ALL[(e & 3) as usize],
            }
        }
    }

    pub fn valid_entries(&self) -> usize {
        self.table.iter().filter(|&&e| e & 0x10 != 0).count()
    }

    /// CSV `index,valid,rc,ri`; with `valid_only`, invalid rows are skipped.
    pub fn dump(&self, w: &mut impl Write, valid_only: bool) -> std::io::Result<()> {
        writeln!(w, "index,valid,rc,ri")?;
        for (i, &e) in self.table.iter().enumerate() {
            let valid = e & 0x10 != 0;
            if valid_only && !valid {
                continue;
            }
            writeln!(w, "{i},{},{},{}", valid as u8, e >> 2 & 3, e & 3)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn model(lines: &[(u64, i8, i8)], hash: Option<HashScheme>) -> ClusterModel {
        let mut m: ClusterModel = serde_json::from_value(serde_json::json!({
            "layer_id": 0, "block_bits": 6, "hash": hash,
            "rc_centers": [1.5, 3.0, 9.0, 40.0],
            "ri_centers": [[1.0,0.0,0.0,0.0],[1.0,1.0,0.0,0.0],[0.0,1.0,0.0,0.0],[0.0,0.0,0.0,1.0]],
            "rc_annotation": ["Cold","Light","Moderate","Hot"],
            "ri_annotation": ["Immediate","Near","Far","Remote"],
            "normalization": {"min": [], "max": []},
            "silhouette_rc": null, "silhouette_ri": null
        }))
        .unwrap();
        m.assignments = lines.iter().map(|&(l, rc, ri)| (l, (rc, ri))).collect::<BTreeMap<_, _>>();
        m
    }

    #[test]
    fn footprints() {
        for (bits, kb) in [(19, 320), (18, 160), (17, 80)] {
            let c = LrptConfig {
                hash: HashScheme::Bitmask(bits),
            };
            assert_eq!(c.footprint_bytes(), kb * 1024);
        }
    }

    #[test]
    fn single_line_any_offset() {
        let mut t = Lrpt::new(LrptConfig::default()).unwrap();
        t.load(&model(&[(0x40, 3, 0)], None)).unwrap();
        for off in [0, 1, 63] {
            assert_eq!(
                t.lookup((0x40 << 6) + off),
                Prediction::Reuse {
                    rc: RcLabel::Hot,
                    ri: RiLabel::Immediate
                }
            );
        }
        assert_eq!(t.lookup(0x41 << 6), Prediction::NoReuse);
        assert_eq!(t.cold_center(), Some(1.5));
    }

    #[test]
    fn empty_model_all_no_reuse() {
        let mut t = Lrpt::new(LrptConfig::default()).unwrap();
        t.load(&model(&[], None)).unwrap();
        assert_eq!(t.valid_entries(), 0);
        assert_eq!(t.lookup(12345), Prediction::NoReuse);
    }

    #[test]
    fn collision_last_wins() {
        let cfg = LrptConfig {
            hash: HashScheme::Bitmask(17),
        };
        let mut t = Lrpt::new(cfg).unwrap();
        let a = 5u64;
        let b = 5u64 + (1 << 17);
        t.load(&model(&[(a, 0, 3), (b, 2, 1)], None)).unwrap();
        let want = Prediction::Reuse {
            rc: RcLabel::Moderate,
            ri: RiLabel::Near,
        };
        assert_eq!(t.lookup(a << 6), want);
        assert_eq!(t.lookup(b << 6), want);
    }

    #[test]
    fn hash_mismatch_rejected() {
        let mut t = Lrpt::new(LrptConfig::default()).unwrap();
        let m = model(&[(1, 0, 0)], Some(HashScheme::SplitMix32(17)));
        assert!(matches!(t.load(&m), Err(Error::Config(_))));
        let mut t = Lrpt::new(LrptConfig {
            hash: HashScheme::SplitMix32(17),
        })
        .unwrap();
        t.load(&m).unwrap();
        assert_eq!(t.valid_entries(), 1);
    }

    #[test]
    fn no_reuse_rows_skipped_and_dump() {
        let cfg = LrptConfig {
            hash: HashScheme::Bitmask(4),
        };
        let mut t = Lrpt::new(cfg).unwrap();
        t.load(&model(&[(1, -1, -1), (2, 1, 2)], None)).unwrap();
        let mut out = Vec::new();
        t.dump(&mut out, true).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "index,valid,rc,ri\n2,1,1,2\n");
    }
}
