//! On-disk formats: population CSVs, the run manifest and content hashes.

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{names, Names, Population};

/// Population columns as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTable {
    pub param_names: Names,
    pub summary_names: Names,
    pub theta: Vec<Vec<f64>>,
    pub summaries: Vec<Vec<f64>>,
    pub rho_full: Vec<f64>,
    pub rho_marginal: Vec<Option<f64>>,
}

impl PopulationTable {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn column(&self, param: &str) -> Result<Vec<f64>> {
        let j = self
            .param_names
            .iter()
            .position(|n| n == param)
            .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
        Ok(self.theta.iter().map(|row| row[j]).collect())
    }
}

impl From<&Population> for PopulationTable {
    fn from(pop: &Population) -> Self {
        Self {
            param_names: pop.param_names(),
            summary_names: pop.summary_names(),
            theta: pop.particles.iter().map(|p| p.theta.values.clone()).collect(),
            summaries: pop.particles.iter().map(|p| p.summaries.values.clone()).collect(),
            rho_full: pop.particles.iter().map(|p| p.rho_full).collect(),
            rho_marginal: pop.particles.iter().map(|p| p.rho_marginal).collect(),
        }
    }
}

/// `param:<name>…,summary:<name>…,rho_full,rho_marginal`, one particle per
/// row; values use Rust's shortest round-trip formatting and an absent
/// marginal discrepancy is an empty field.
pub fn population_csv(pop: &Population) -> String {
    table_csv(&PopulationTable::from(pop))
}

pub fn table_csv(t: &PopulationTable) -> String {
    let mut out = String::new();
    let header: Vec<String> = t
        .param_names
        .iter()
        .map(|n| format!("param:{n}"))
        .chain(t.summary_names.iter().map(|n| format!("summary:{n}")))
        .chain(["rho_full".to_string(), "rho_marginal".to_string()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..t.len() {
        for v in t.theta[i].iter().chain(&t.summaries[i]) {
            let _ = write!(out, "{v},");
        }
        let _ = write!(out, "{}", t.rho_full[i]);
        match t.rho_marginal[i] {
            Some(r) => {
                let _ = writeln!(out, ",{r}");
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

pub fn read_population_csv(text: &str) -> Result<PopulationTable> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty population file".into()))?
        .split(',')
        .collect();
    let params: Vec<&str> = header.iter().filter_map(|h| h.strip_prefix("param:")).collect();
    let sums: Vec<&str> = header.iter().filter_map(|h| h.strip_prefix("summary:")).collect();
    let (p, s) = (params.len(), sums.len());
    if header.len() != p + s + 2 || header[p + s..] != ["rho_full", "rho_marginal"] {
        return Err(Error::Parse(format!("unexpected population header {header:?}")));
    }
    let mut t = PopulationTable {
        param_names: names(&params),
        summary_names: names(&sums),
        theta: Vec::new(),
        summaries: Vec::new(),
        rho_full: Vec::new(),
        rho_marginal: Vec::new(),
    };
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, got {}",
                i + 1,
                header.len(),
                fields.len()
            )));
        }
        let num = |f: &str| {
            f.parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
        };
        let vals: Vec<f64> = fields[..p + s + 1].iter().map(|f| num(f)).collect::<Result<_>>()?;
        t.theta.push(vals[..p].to_vec());
        t.summaries.push(vals[p..p + s].to_vec());
        t.rho_full.push(vals[p + s]);
        t.rho_marginal.push(match fields[p + s + 1] {
            "" => None,
            f => Some(num(f)?),
        });
    }
    Ok(t)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `git describe --always --dirty` of the working directory, or "unknown".
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the run directory, '/'-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes files under a run directory and remembers their hashes.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: std::path::PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, contents)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PopulationTable {
        PopulationTable {
            param_names: names(&["a", "b"]),
            summary_names: names(&["S1"]),
            theta: vec![vec![0.1, -2.5e-9], vec![3.0, 1.0 / 3.0]],
            summaries: vec![vec![7.0], vec![f64::MIN_POSITIVE]],
            rho_full: vec![0.5, 0.25],
            rho_marginal: vec![None, Some(0.125)],
        }
    }

    #[test]
    fn csv_layout() {
        let text = table_csv(&table());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("param:a,param:b,summary:S1,rho_full,rho_marginal"));
        assert_eq!(lines.next(), Some("0.1,-0.0000000025,7,0.5,"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table();
        let back = read_population_csv(&table_csv(&t)).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("b").unwrap(), vec![-2.5e-9, 1.0 / 3.0]);
        assert!(back.column("z").is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_population_csv("").is_err());
        assert!(read_population_csv("param:a,rho_full\n").is_err());
        assert!(read_population_csv("param:a,rho_full,rho_marginal\n1,2\n").is_err());
        assert!(read_population_csv("param:a,rho_full,rho_marginal\nx,2,\n").is_err());
    }

    #[test]
    fn writer_hashes_contents() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write("sub/x.txt", "abc").unwrap();
        assert_eq!(
            w.files()[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(std::fs::read_to_string(dir.path().join("sub/x.txt")).unwrap(), "abc");
    }
}
