//! On-disk dataset formats.
//!
//! Container directory (all integers little-endian):
//!
//! | file              | content                                            |
//! |-------------------|----------------------------------------------------|
//! | `meta.json`       | `name`, `N`, `D`, `C`, `class_names`, `feature_norm` |
//! | `features.f32`    | row-major `N x D` IEEE-754 binary32                |
//! | `labels.u32`      | `N` class indices                                  |
//! | `adj_indptr.u64`  | `N + 1` CSR row offsets                            |
//! | `adj_indices.u64` | CSR column indices                                 |
//!
//! Edge-list bundle (small fixtures and hand-converted raw data):
//! `edges.txt` (one whitespace-separated `i j` pair per line, `#` comments),
//! `features.csv` (one comma-separated row per node, no header) and
//! `labels.csv` (one label per line; integers, or class names which are then
//! ordered lexicographically).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, SparseAdjacency};
use crate::error::{Error, Result};

/// `meta.json` of a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerMeta {
    pub name: String,
    #[serde(rename = "N")]
    pub num_nodes: usize,
    #[serde(rename = "D")]
    pub num_features: usize,
    #[serde(rename = "C")]
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub feature_norm: bool,
}

/// Loads a container directory or, when no `meta.json` is present but an
/// `edges.txt` is, an edge-list bundle. No preprocessing is applied.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.join("meta.json").is_file() {
        load_container(path)
    } else if path.join("edges.txt").is_file() {
        load_bundle(path)
    } else if !path.exists() {
        Err(Error::MissingFile(path.to_path_buf()))
    } else {
        Err(Error::MissingFile(path.join("meta.json")))
    }
}

fn read(path: PathBuf) -> Result<Vec<u8>> {
    fs::read(&path).map_err(|e| Error::io(path, e))
}

fn read_u64s(path: PathBuf) -> Result<Vec<usize>> {
    let bytes = read(path.clone())?;
    if bytes.len() % 8 != 0 {
        return Err(Error::LengthMismatch(format!(
            "{} is not a whole number of u64 values",
            path.display()
        )));
    }
    bytes
        .chunks_exact(8)
        .map(|c| {
            let v = u64::from_le_bytes(c.try_into().unwrap());
            usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("index {v} too large")))
        })
        .collect()
}

pub fn load_container(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta: ContainerMeta = serde_json::from_slice(&read(meta_path)?)?;
    if meta.class_names.len() != meta.num_classes {
        return Err(Error::LengthMismatch(format!(
            "meta.json lists {} class names for C = {}",
            meta.class_names.len(),
            meta.num_classes
        )));
    }

    let fbytes = read(dir.join("features.f32"))?;
    if fbytes.len() != 4 * meta.num_nodes * meta.num_features {
        return Err(Error::LengthMismatch(format!(
            "features.f32 holds {} bytes, expected N*D*4 = {}",
            fbytes.len(),
            4 * meta.num_nodes * meta.num_features
        )));
    }
    let features = fbytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let lbytes = read(dir.join("labels.u32"))?;
    if lbytes.len() != 4 * meta.num_nodes {
        return Err(Error::LengthMismatch(format!(
            "labels.u32 holds {} bytes, expected N*4 = {}",
            lbytes.len(),
            4 * meta.num_nodes
        )));
    }
    let labels = lbytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let indptr = read_u64s(dir.join("adj_indptr.u64"))?;
    let indices = read_u64s(dir.join("adj_indices.u64"))?;
    let adjacency = SparseAdjacency::from_csr(meta.num_nodes, indptr, indices)?;

    Dataset::new(
        meta.name,
        adjacency,
        features,
        meta.num_features,
        labels,
        meta.class_names,
        meta.feature_norm,
    )
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `ds` as a container directory, creating it if needed.
pub fn write_container(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = ContainerMeta {
        name: ds.name.clone(),
        num_nodes: ds.num_nodes(),
        num_features: ds.num_features,
        num_classes: ds.num_classes(),
        class_names: ds.class_names.clone(),
        feature_norm: ds.feature_norm,
    };
    write(dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
    let f: Vec<u8> = ds.features.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(dir.join("features.f32"), &f)?;
    let l: Vec<u8> = ds.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(dir.join("labels.u32"), &l)?;
    let p: Vec<u8> = ds
        .adjacency
        .indptr()
        .iter()
        .flat_map(|&v| (v as u64).to_le_bytes())
        .collect();
    write(dir.join("adj_indptr.u64"), &p)?;
    let i: Vec<u8> = ds
        .adjacency
        .indices()
        .iter()
        .flat_map(|&v| (v as u64).to_le_bytes())
        .collect();
    write(dir.join("adj_indices.u64"), &i)
}

fn read_text(path: PathBuf) -> Result<(PathBuf, String)> {
    let s = fs::read_to_string(&path).map_err(|e| Error::io(path.clone(), e))?;
    Ok((path, s))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn load_bundle(dir: &Path) -> Result<Dataset> {
    let (fpath, ftext) = read_text(dir.join("features.csv"))?;
    let mut features = Vec::new();
    let mut num_features = None;
    let mut num_nodes = 0usize;
    for (line, l) in content_lines(&ftext) {
        let row: Vec<f32> = l
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f32>()
                    .map_err(|e| parse_err(&fpath, line, format!("bad feature value {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        match num_features {
            None => num_features = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    &fpath,
                    line,
                    format!("row has {} values, expected {d}", row.len()),
                ))
            }
            _ => {}
        }
        features.extend(row);
        num_nodes += 1;
    }
    let num_features = num_features.unwrap_or(0);

    let (_, ltext) = read_text(dir.join("labels.csv"))?;
    let raw: Vec<(usize, String)> = content_lines(&ltext).map(|(n, l)| (n, l.to_string())).collect();
    if raw.len() != num_nodes {
        return Err(Error::LengthMismatch(format!(
            "labels.csv has {} entries, features.csv has {num_nodes} rows",
            raw.len()
        )));
    }
    let all_numeric = raw.iter().all(|(_, s)| s.parse::<u32>().is_ok());
    let (labels, class_names) = if all_numeric {
        let labels: Vec<u32> = raw.iter().map(|(_, s)| s.parse().unwrap()).collect();
        let c = labels.iter().max().map_or(0, |&m| m as usize + 1);
        (labels, (0..c).map(|k| k.to_string()).collect::<Vec<_>>())
    } else {
        let names: BTreeSet<&str> = raw.iter().map(|(_, s)| s.as_str()).collect();
        let names: Vec<String> = names.into_iter().map(String::from).collect();
        let labels = raw
            .iter()
            .map(|(_, s)| names.binary_search(s).unwrap() as u32)
            .collect();
        (labels, names)
    };

    let (epath, etext) = read_text(dir.join("edges.txt"))?;
    let mut edges = Vec::new();
    for (line, l) in content_lines(&etext) {
        let mut it = l.split_whitespace();
        let mut next = || -> Result<usize> {
            let t = it
                .next()
                .ok_or_else(|| parse_err(&epath, line, "expected two node indices"))?;
            t.parse::<usize>()
                .map_err(|e| parse_err(&epath, line, format!("bad node index {t:?}: {e}")))
        };
        let (i, j) = (next()?, next()?);
        if i >= num_nodes || j >= num_nodes {
            return Err(parse_err(
                &epath,
                line,
                format!("edge ({i}, {j}) out of range for {num_nodes} nodes"),
            ));
        }
        edges.push((i, j));
    }
    let adjacency = SparseAdjacency::from_edges(num_nodes, &edges)?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, adjacency, features, num_features, labels, class_names, false)
}

/// Writes an edge-list bundle (directed pairs exactly as stored).
pub fn write_bundle(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for (i, j) in ds.adjacency.iter_edges() {
        edges.push_str(&format!("{i} {j}\n"));
    }
    write(dir.join("edges.txt"), edges.as_bytes())?;
    let mut f = String::new();
    for i in 0..ds.num_nodes() {
        let row: Vec<String> = ds.feature_row(i).iter().map(|v| v.to_string()).collect();
        f.push_str(&row.join(","));
        f.push('\n');
    }
    write(dir.join("features.csv"), f.as_bytes())?;
    let l: String = ds.labels.iter().map(|l| format!("{l}\n")).collect();
    write(dir.join("labels.csv"), l.as_bytes())
}
