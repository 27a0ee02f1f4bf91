//! Run configuration: a plain `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use laguerre::frames::Scheme;
use laguerre::grid::Grid;
use laguerre::pipeline::Tolerances;

use crate::Failure;

pub const KEYS: &[&str] = &[
    "kind",
    "c",
    "k",
    "a",
    "b",
    "potential",
    "grid",
    "m",
    "scheme",
    "out",
    "init",
    "max_iter",
    "newton_tol",
    "frames",
    "tol_order",
    "tol_value",
    "tol_mean_curvature",
    "tol_h_floor",
    "tol_drift",
    "parabolic_eps",
];

/// Keys holding paths, resolved against the directory of the config file.
const PATH_KEYS: &[&str] = &["potential", "out", "init", "frames"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl Settings {
    pub fn parse(text: &str, base: &Path) -> Result<Self, Failure> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let value = if PATH_KEYS.contains(&key) && !matches!(value, "zero" | "boundary") && value.parse::<f64>().is_err() {
                base.join(value).to_string_lossy().into_owned()
            } else {
                value.to_string()
            };
            s.set(key, value)
                .map_err(|e| usage(format!("config line {}: {}", n + 1, msg_of(e))))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Settings::parse(&text, base)
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<(), Failure> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("unknown key '{key}'")));
        }
        self.values.insert(key, value);
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, Failure> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| usage(format!("{key}: expected a finite number, got '{v}'")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, Failure> {
        self.f64(key)?.ok_or_else(|| usage(format!("missing required value '{key}'")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, Failure> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("{key}: expected a non-negative integer, got '{v}'"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.path("out").unwrap_or_else(|| PathBuf::from("out"))
    }

    /// `x0:x1:y0:y1:n` or `x0:x1:y0:y1:nx:ny`; default `[-1, 1]²` with 65
    /// nodes.
    pub fn grid(&self) -> Result<Grid, Failure> {
        let spec = self.raw("grid").unwrap_or("-1:1:-1:1:65");
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let bad = || usage(format!("grid: expected x0:x1:y0:y1:n[:ny], got '{spec}'"));
        if parts.len() != 5 && parts.len() != 6 {
            return Err(bad());
        }
        let mut r = [0.0; 4];
        for (slot, p) in r.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| bad())?;
        }
        let nx: usize = parts[4].parse().map_err(|_| bad())?;
        let ny: usize = match parts.get(5) {
            Some(p) => p.parse().map_err(|_| bad())?,
            None => nx,
        };
        if nx < 5 || ny < 5 {
            return Err(usage(format!("grid: need at least 5 nodes per side, got {nx}x{ny}")));
        }
        Grid::new(r[0], r[1], r[2], r[3], nx, ny).map_err(|e| usage(format!("grid: {e}")))
    }

    pub fn m_list(&self) -> Result<Vec<f64>, Failure> {
        let spec = self.raw("m").unwrap_or("0");
        let list = spec
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| usage(format!("m: bad entry '{}'", t.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if list.is_empty() {
            return Err(usage("m: the list is empty"));
        }
        Ok(list)
    }

    pub fn scheme(&self) -> Result<Scheme, Failure> {
        self.raw("scheme").unwrap_or("midpoint_exp").parse().map_err(usage)
    }

    pub fn tolerances(&self) -> Result<Tolerances, Failure> {
        let d = Tolerances::default();
        Ok(Tolerances {
            order: self.f64_or("tol_order", d.order)?,
            value: self.f64_or("tol_value", d.value)?,
            mean_curvature: self.f64_or("tol_mean_curvature", d.mean_curvature)?,
            h_floor: self.f64_or("tol_h_floor", d.h_floor)?,
            drift: self.f64_or("tol_drift", d.drift)?,
            parabolic_eps: self.f64_or("parabolic_eps", d.parabolic_eps)?,
        })
    }

    /// One `key = value` per line in key order.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn msg_of(f: Failure) -> String {
    match f {
        Failure::Gate(m) | Failure::Usage(m) | Failure::Io(m) => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let text = "# canonical\nc = 1\nm = 0, 1,2\ngrid = -1:1:-1:1:33\npotential = u.csv\n";
        let mut s = Settings::parse(text, Path::new("/runs")).unwrap();
        assert_eq!(s.m_list().unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(s.grid().unwrap().nx, 33);
        assert_eq!(s.raw("potential"), Some("/runs/u.csv"));
        s.set("c", "-1".into()).unwrap();
        assert_eq!(s.require_f64("c").unwrap(), -1.0);
        assert_eq!(s.scheme().unwrap(), Scheme::MidpointExp);
        assert_eq!(s.tolerances().unwrap(), Tolerances::default());
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        assert!(matches!(Settings::parse("colour = red", base), Err(Failure::Usage(_))));
        assert!(matches!(Settings::parse("c 1", base), Err(Failure::Usage(_))));
        let s = Settings::parse("grid = -1:1:-1:1:4\nm = 0,x\nc = nan\nscheme = rk4", base).unwrap();
        assert!(s.grid().is_err());
        assert!(s.m_list().is_err());
        assert!(s.f64("c").is_err());
        assert!(s.scheme().is_err());
    }

    #[test]
    fn text_is_sorted() {
        let s = Settings::parse("m = 0\nc = 1\nk = 1", Path::new(".")).unwrap();
        assert_eq!(s.to_text(), "c = 1\nk = 1\nm = 0\n");
    }
}
