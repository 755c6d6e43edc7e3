//! Flat `key = value` defaults file. Keys mirror the long flag names;
//! explicit flags always win. Unknown keys are rejected so a typo cannot
//! silently fall back to a default.

use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    pub two_omega: Option<f64>,
    pub detuning_ratio: Option<f64>,
    pub kappa: Option<f64>,
    pub nbar: Option<f64>,
    pub temperature: Option<f64>,
    pub gamma_scale: Option<f64>,
    pub g: Option<f64>,
    pub omega_ph: Option<f64>,
    pub gamma_c: Option<f64>,
    pub mode: Option<String>,
    pub tol: Option<f64>,
    pub n_start: Option<usize>,
    pub n_cap: Option<usize>,
}

pub fn load(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |e: String| format!("line {}: {key}: {e}", lineno + 1);
        let num = || value.parse::<f64>().map_err(|e| bad(e.to_string()));
        let int = || value.parse::<usize>().map_err(|e| bad(e.to_string()));
        match key {
            "two-omega" => cfg.two_omega = Some(num()?),
            "detuning-ratio" => cfg.detuning_ratio = Some(num()?),
            "kappa" => cfg.kappa = Some(num()?),
            "nbar" => cfg.nbar = Some(num()?),
            "temperature" => cfg.temperature = Some(num()?),
            "gamma-scale" => cfg.gamma_scale = Some(num()?),
            "g" => cfg.g = Some(num()?),
            "omega-ph" => cfg.omega_ph = Some(num()?),
            "gamma-c" => cfg.gamma_c = Some(num()?),
            "mode" => cfg.mode = Some(value.to_string()),
            "tol" => cfg.tol = Some(num()?),
            "n-start" => cfg.n_start = Some(int()?),
            "n-cap" => cfg.n_cap = Some(int()?),
            other => return Err(format!("line {}: unknown key `{other}`", lineno + 1)),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let cfg = parse("# defaults\n  kappa = 5e-3 # inline\n\nmode=beyond\nn-cap = 64\n").unwrap();
        assert_eq!(cfg.kappa, Some(5e-3));
        assert_eq!(cfg.mode.as_deref(), Some("beyond"));
        assert_eq!(cfg.n_cap, Some(64));
        assert!(cfg.g.is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_numbers() {
        assert!(parse("kappa = fast\n").is_err());
        assert!(parse("decay = 1\n").is_err());
        assert!(parse("just-a-key\n").is_err());
    }
}
