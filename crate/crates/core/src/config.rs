//! Plain-text run configuration: `key = value` lines, `#` comments, and
//! repeated `nucleus = Z x y z` lines for the molecule.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Molecule, Nucleus, PlateConfig, Vec3};

const KNOWN_KEYS: &[&str] = &[
    "r",
    "m",
    "v",
    "electrons",
    "n",
    "L",
    "n_xi",
    "n_rho",
    "L_xi",
    "L_rho",
    "h_xi",
    "h_rho",
    "tol",
    "max_iter",
    "seed",
];

/// Parsed configuration file. Every scalar key is optional so that command-line
/// flags can fill or override individual values.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfigFile {
    pub r: Option<f64>,
    pub m: Option<f64>,
    pub v: Option<Vec3>,
    pub electrons: Option<usize>,
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub n_xi: Option<usize>,
    pub n_rho: Option<usize>,
    #[serde(rename = "L_xi")]
    pub l_xi: Option<f64>,
    #[serde(rename = "L_rho")]
    pub l_rho: Option<f64>,
    pub h_xi: Option<f64>,
    pub h_rho: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub nuclei: Vec<Nucleus>,
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse value {s:?} for key {key}"),
    })
}

/// Parses `x,y,z` or `x y z`.
pub fn parse_vec3(s: &str) -> Option<Vec3> {
    let parts: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    match parts.as_slice() {
        [x, y, z] => Some(Vec3::new(*x, *y, *z)),
        _ => None,
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "nucleus" {
                cfg.nuclei.push(parse_nucleus(line_no, value)?);
                continue;
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown key {key:?}"),
                });
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("key {key:?} already set on line {prev}"),
                });
            }
            match key {
                "r" => cfg.r = Some(parse_num(line_no, key, value)?),
                "m" => cfg.m = Some(parse_num(line_no, key, value)?),
                "v" => {
                    cfg.v = Some(parse_vec3(value).ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("expected three components for v, got {value:?}"),
                    })?)
                }
                "electrons" => cfg.electrons = Some(parse_num(line_no, key, value)?),
                "n" => cfg.n = Some(parse_num(line_no, key, value)?),
                "L" => cfg.l = Some(parse_num(line_no, key, value)?),
                "n_xi" => cfg.n_xi = Some(parse_num(line_no, key, value)?),
                "n_rho" => cfg.n_rho = Some(parse_num(line_no, key, value)?),
                "L_xi" => cfg.l_xi = Some(parse_num(line_no, key, value)?),
                "L_rho" => cfg.l_rho = Some(parse_num(line_no, key, value)?),
                "h_xi" => cfg.h_xi = Some(parse_num(line_no, key, value)?),
                "h_rho" => cfg.h_rho = Some(parse_num(line_no, key, value)?),
                "tol" => cfg.tol = Some(parse_num(line_no, key, value)?),
                "max_iter" => cfg.max_iter = Some(parse_num(line_no, key, value)?),
                "seed" => cfg.seed = Some(parse_num(line_no, key, value)?),
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ConfigFile::parse(&std::fs::read_to_string(path)?)
    }

    /// Plate from `v` (default `e1`), `r` and `m` (default 1).
    pub fn plate(&self) -> Result<PlateConfig> {
        let r = self
            .r
            .ok_or_else(|| Error::InvalidInput("missing plate distance r".into()))?;
        PlateConfig::new(self.v.unwrap_or(Vec3::E1), r, self.m.unwrap_or(1.0))
    }

    /// Molecule from the `nucleus` lines; the electron count defaults to the
    /// total nuclear charge.
    pub fn molecule(&self) -> Option<Molecule> {
        if self.nuclei.is_empty() {
            return None;
        }
        let total: u32 = self.nuclei.iter().map(|n| n.charge).sum();
        Some(Molecule::new(
            self.nuclei.clone(),
            self.electrons.unwrap_or(total as usize),
        ))
    }
}

fn parse_nucleus(line: usize, value: &str) -> Result<Nucleus> {
    let fields: Vec<&str> = value.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Parse {
            line,
            msg: format!("nucleus needs `Z x y z`, got {value:?}"),
        });
    }
    let charge: u32 = parse_num(line, "nucleus", fields[0])?;
    if charge == 0 {
        return Err(Error::Parse {
            line,
            msg: "nuclear charge must be positive".into(),
        });
    }
    let mut p = [0.0; 3];
    for (dst, src) in p.iter_mut().zip(&fields[1..]) {
        *dst = parse_num(line, "nucleus", src)?;
    }
    Ok(Nucleus {
        position: Vec3::from_array(p),
        charge,
    })
}
