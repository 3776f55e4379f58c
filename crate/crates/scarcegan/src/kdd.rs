//! KDD Cup 1999 connection records: 41 attributes and a label with a
//! trailing period, one record per line.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FIELD_COUNT: usize = 41;
pub const NUMERIC_COUNT: usize = 38;

pub const FIELD_NAMES: [&str; FIELD_COUNT] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// Positions of the symbolic attributes among the 41.
pub const SYMBOLIC_FIELDS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KddCategory {
    Normal,
    Dos,
    Probe,
    R2l,
    U2r,
}

impl KddCategory {
    pub const ALL: [KddCategory; 5] = [
        KddCategory::Normal,
        KddCategory::Dos,
        KddCategory::Probe,
        KddCategory::R2l,
        KddCategory::U2r,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KddCategory::Normal => "normal",
            KddCategory::Dos => "dos",
            KddCategory::Probe => "probe",
            KddCategory::R2l => "r2l",
            KddCategory::U2r => "u2r",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Category of a raw label (without its trailing period), covering the
    /// training attack types and the extra ones of the labeled test file.
    pub fn of_label(label: &str) -> Option<Self> {
        use KddCategory::*;
        Some(match label {
            "normal" => Normal,
            "back" | "land" | "neptune" | "pod" | "smurf" | "teardrop" | "apache2" | "mailbomb" | "processtable"
            | "udpstorm" => Dos,
            "ipsweep" | "nmap" | "portsweep" | "satan" | "mscan" | "saint" => Probe,
            "ftp_write" | "guess_passwd" | "imap" | "multihop" | "phf" | "spy" | "warezclient" | "warezmaster"
            | "named" | "sendmail" | "snmpgetattack" | "snmpguess" | "worm" | "xlock" | "xsnoop" => R2l,
            "buffer_overflow" | "loadmodule" | "perl" | "rootkit" | "httptunnel" | "ps" | "sqlattack" | "xterm" => U2r,
            _ => return None,
        })
    }
}

impl fmt::Display for KddCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KddRecord {
    /// The 38 numeric attributes in file order.
    pub numeric: [f64; NUMERIC_COUNT],
    /// `protocol_type`, `service`, `flag`.
    pub symbolic: [String; 3],
    pub label: String,
    pub category: KddCategory,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KddData {
    pub records: Vec<KddRecord>,
}

impl KddData {
    pub fn counts(&self) -> BTreeMap<KddCategory, usize> {
        let mut out: BTreeMap<KddCategory, usize> = KddCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for r in &self.records {
            *out.entry(r.category).or_default() += 1;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn parse_line(line: &str, line_no: usize) -> Result<KddRecord> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != FIELD_COUNT + 1 {
        return Err(Error::Malformed {
            line: line_no,
            reason: format!("expected {} fields, found {}", FIELD_COUNT + 1, fields.len()),
        });
    }
    let raw_label = fields[FIELD_COUNT].trim();
    let label = raw_label.strip_suffix('.').ok_or_else(|| Error::Malformed {
        line: line_no,
        reason: format!("label {raw_label:?} lacks its trailing period"),
    })?;
    let category = KddCategory::of_label(label).ok_or_else(|| Error::UnknownLabel {
        line: line_no,
        label: label.to_string(),
    })?;
    let mut numeric = [0.0; NUMERIC_COUNT];
    let mut symbolic: [String; 3] = Default::default();
    let mut k = 0;
    for (i, f) in fields[..FIELD_COUNT].iter().enumerate() {
        if let Some(s) = SYMBOLIC_FIELDS.iter().position(|&p| p == i) {
            symbolic[s] = f.trim().to_string();
            continue;
        }
        numeric[k] = f.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Malformed {
            line: line_no,
            reason: format!("{} is not a number: {f:?}", FIELD_NAMES[i]),
        })?;
        k += 1;
    }
    Ok(KddRecord {
        numeric,
        symbolic,
        label: label.to_string(),
        category,
    })
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 20, reader)))
}

/// Parses every non-blank line. With `dedup`, repeated identical lines are
/// kept once.
pub fn read_kdd(reader: impl BufRead, dedup: bool) -> Result<KddData> {
    let mut seen: HashSet<[u8; 16]> = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if dedup {
            let digest = Sha256::digest(line.trim_end().as_bytes());
            let mut key = [0u8; 16];
            key.copy_from_slice(&digest[..16]);
            if !seen.insert(key) {
                continue;
            }
        }
        records.push(parse_line(&line, i + 1)?);
    }
    Ok(KddData { records })
}

/// Loads a KDD file; `.gz` files are decompressed on the fly.
pub fn load_kdd(path: impl AsRef<Path>, dedup: bool) -> Result<KddData> {
    let path = path.as_ref();
    let data = read_kdd(open(path)?, dedup)?;
    log::info!("{}: {} records, {:?}", path.display(), data.len(), data.counts());
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "0,tcp,http,SF,215,45076,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,1,1,0.00,0.00,0.00,0.00,1.00,0.00,0.00,0,0,0.00,0.00,0.00,0.00,0.00,0.00,0.00,0.00,normal.";

    #[test]
    fn parses_a_record() {
        let r = parse_line(LINE, 1).unwrap();
        assert_eq!(r.symbolic, ["tcp".to_string(), "http".into(), "SF".into()]);
        assert_eq!(r.numeric[1], 215.0);
        assert_eq!(r.category, KddCategory::Normal);
    }

    #[test]
    fn missing_period_rejected() {
        let line = LINE.trim_end_matches('.');
        assert!(matches!(parse_line(line, 3), Err(Error::Malformed { line: 3, .. })));
    }

    #[test]
    fn unknown_label_rejected() {
        let line = LINE.replace("normal.", "martian.");
        assert!(matches!(parse_line(&line, 9), Err(Error::UnknownLabel { line: 9, .. })));
    }

    #[test]
    fn short_line_rejected_with_number() {
        let err = read_kdd(format!("{LINE}\n0,tcp,normal.\n").as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_input_has_zero_counts() {
        let d = read_kdd(&b""[..], false).unwrap();
        assert!(d.is_empty());
        assert!(d.counts().values().all(|c| *c == 0));
    }

    #[test]
    fn dedup_drops_repeats() {
        let text = format!("{LINE}\n{LINE}\n");
        assert_eq!(read_kdd(text.as_bytes(), false).unwrap().len(), 2);
        assert_eq!(read_kdd(text.as_bytes(), true).unwrap().len(), 1);
    }
}
