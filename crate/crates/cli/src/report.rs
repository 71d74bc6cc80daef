use std::fmt::Display;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use sha2::{Digest, Sha256};

/// Machine-readable `key=value` lines plus a human summary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
    pub summary: Vec<String>,
}

impl Report {
    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let k = file.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex(&hasher.finalize()))
}

/// `config_sha256:<hash> qrng:<version> sim_seed:<seed>`.
pub fn provenance(canonical_config: &str, sim_seed: u64) -> String {
    format!(
        "config_sha256:{} qrng:{} sim_seed:{sim_seed}",
        sha256_hex(canonical_config.as_bytes()),
        env!("CARGO_PKG_VERSION")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn renders_in_insertion_order() {
        let mut r = Report::default();
        r.put("b", 2);
        r.put("a", "x");
        assert_eq!(r.render(), "b=2\na=x\n");
        assert_eq!(r.get("a"), Some("x"));
    }
}
