//! Optional `key = value` run-configuration files. Flags always override file
//! entries; unknown keys are rejected so typos fail fast.

use std::collections::HashMap;
use std::path::Path;

pub struct FileConfig {
    entries: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "j",
    "h",
    "g",
    "tmax",
    "points",
    "threshold",
    "hd_rate",
    "wave",
    "out_dir",
    "h_values",
    "g_values",
    "t_avg",
    "workers",
];

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            entries: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut entries = HashMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    line_no + 1
                ));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!(
                    "{}:{}: unknown config key `{key}`",
                    path.display(),
                    line_no + 1
                ));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| format!("config key `{key}`: {e}")),
        }
    }
}

/// Parses either a comma list `0.1,0.2` or a range `start:stop:step`
/// (inclusive stop, within half a step).
pub fn parse_value_list(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:stop:step, got `{text}`"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
        let step: f64 = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
        if !step.is_finite() || step <= 0.0 || stop < start {
            return Err(format!("bad range `{text}`"));
        }
        let count = ((stop - start) / step + 0.5).floor() as usize + 1;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{e}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_value_list("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_value_list("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        let r = parse_value_list("0.1:0.4:0.1").unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[3] - 0.4).abs() < 1e-12);
        assert!(parse_value_list("1:2").is_err());
        assert!(parse_value_list("2:1:0.1").is_err());
    }
}
