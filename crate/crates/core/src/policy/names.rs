use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memsys::Arbitration;

/// How accelerator requests are chosen for bypass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AccelBypass {
    None,
    /// SHiP prediction; with a gate, only after `gate` x the per-epoch
    /// requirement has completed in the current epoch.
    Ship { gate: Option<f64> },
    /// L-RPT prediction at one fixed ladder rung.
    LernFixed { rung: u8 },
    /// L-RPT prediction with the progress monitor picking the rung.
    LernDeadline,
    /// Random with probability `p`.
    Random { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub arbitration: Arbitration,
    pub core_bypass: bool,
    pub accel: AccelBypass,
    /// Cores and accelerator train one SHiP table.
    pub shared_ship: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyName {
    FifoNb,
    FifoCs,
    ArpNb,
    ArpCs,
    ArpCas,
    ArpCsAs,
    ArpAs,
    ArpAl,
    ArpAsD,
    ArpCsAsD,
    ArpCsAsThD(f64),
    ArpCsAfr(f64),
    Hydra,
    HydraNoCoreBypass,
}

/// Rung used by the deadline-agnostic LERN variant.
pub const ARP_AL_RUNG: u8 = 2;

impl PolicyName {
    pub fn uses_lern(self) -> bool {
        matches!(
            self,
            PolicyName::ArpAl | PolicyName::Hydra | PolicyName::HydraNoCoreBypass
        )
    }

    pub fn spec(self) -> PolicySpec {
        use AccelBypass as A;
        use Arbitration::*;
        let (arbitration, core_bypass, accel, shared_ship) = match self {
            PolicyName::FifoNb => (Fifo, false, A::None, false),
            PolicyName::FifoCs => (Fifo, true, A::None, false),
            PolicyName::ArpNb => (Arp, false, A::None, false),
            PolicyName::ArpCs => (Arp, true, A::None, false),
            PolicyName::ArpCas => (Arp, true, A::Ship { gate: None }, true),
            PolicyName::ArpCsAs => (Arp, true, A::Ship { gate: None }, false),
            PolicyName::ArpAs => (Arp, false, A::Ship { gate: None }, false),
            PolicyName::ArpAl => (Arp, false, A::LernFixed { rung: ARP_AL_RUNG }, false),
            PolicyName::ArpAsD => (Arp, false, A::Ship { gate: Some(1.0) }, false),
            PolicyName::ArpCsAsD => (Arp, true, A::Ship { gate: Some(1.0) }, false),
            PolicyName::ArpCsAsThD(t) => (Arp, true, A::Ship { gate: Some(t) }, false),
            PolicyName::ArpCsAfr(p) => (Arp, true, A::Random { p }, false),
            PolicyName::Hydra => (Arp, true, A::LernDeadline, false),
            PolicyName::HydraNoCoreBypass => (Arp, false, A::LernDeadline, false),
        };
        PolicySpec {
            arbitration,
            core_bypass,
            accel,
            shared_ship,
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyName::FifoNb => f.write_str("FIFO-NB"),
            PolicyName::FifoCs => f.write_str("FIFO-CS"),
            PolicyName::ArpNb => f.write_str("ARP-NB"),
            PolicyName::ArpCs => f.write_str("ARP-CS"),
            PolicyName::ArpCas => f.write_str("ARP-CAS"),
            PolicyName::ArpCsAs => f.write_str("ARP-CS-AS"),
            PolicyName::ArpAs => f.write_str("ARP-AS"),
            PolicyName::ArpAl => f.write_str("ARP-AL"),
            PolicyName::ArpAsD => f.write_str("ARP-AS-D"),
            PolicyName::ArpCsAsD => f.write_str("ARP-CS-AS-D"),
            PolicyName::ArpCsAsThD(t) => write!(f, "ARP-CS-ASTh{t}-D"),
            PolicyName::ArpCsAfr(p) => write!(f, "ARP-CS-AFR{p}"),
            PolicyName::Hydra => f.write_str("HyDRA"),
            PolicyName::HydraNoCoreBypass => f.write_str("HyDRA-noCoreBypass"),
        }
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase();
        let unknown = || Error::Config(format!("unknown policy '{s}'"));
        let num = |x: &str| x.parse::<f64>().map_err(|_| unknown());
        Ok(match u.as_str() {
            "FIFO-NB" => PolicyName::FifoNb,
            "FIFO-CS" => PolicyName::FifoCs,
            "ARP-NB" => PolicyName::ArpNb,
            "ARP-CS" => PolicyName::ArpCs,
            "ARP-CAS" => PolicyName::ArpCas,
            "ARP-CS-AS" => PolicyName::ArpCsAs,
            "ARP-AS" => PolicyName::ArpAs,
            "ARP-AL" => PolicyName::ArpAl,
            "ARP-AS-D" => PolicyName::ArpAsD,
            "ARP-CS-AS-D" => PolicyName::ArpCsAsD,
            "HYDRA" | "ARP-CS-AL-D" => PolicyName::Hydra,
            "HYDRA-NOCOREBYPASS" | "ARP-AL-D" => PolicyName::HydraNoCoreBypass,
            _ => {
                if let Some(t) = u.strip_prefix("ARP-CS-ASTH").and_then(|r| r.strip_suffix("-D")) {
                    let t = num(t)?;
                    if t.is_nan() || t <= 0.0 {
                        return Err(Error::Config("ASTh gate must be positive".into()));
                    }
                    PolicyName::ArpCsAsThD(t)
                } else if let Some(p) = u.strip_prefix("ARP-CS-AFR") {
                    let p = num(p)?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Config("AFR probability must be in [0,1]".into()));
                    }
                    PolicyName::ArpCsAfr(p)
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}
