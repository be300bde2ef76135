//! Plain `key = value` configuration files. Keys are the long flag names;
//! blank lines and `#` comments are ignored. Flags on the command line win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use hyplyap::lyapunov::RunConfig;

use crate::{Global, NormArg};

fn parse_pairs(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", origin.display(), no + 1);
        };
        pairs.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(pairs)
}

fn apply(file: &mut Global, key: &str, value: &str) -> Result<()> {
    let ctx = || format!("config key {key} = {value:?}");
    match key {
        "digits" => file.digits = Some(value.parse().with_context(ctx)?),
        "seed" => file.seed = Some(value.parse().with_context(ctx)?),
        "workers" => file.workers = Some(value.parse().with_context(ctx)?),
        "windows" => file.windows = Some(value.parse().with_context(ctx)?),
        "qr-period" => file.qr_period = Some(value.parse().with_context(ctx)?),
        "refresh" => file.refresh = Some(value.parse().with_context(ctx)?),
        "normalization" => {
            file.normalization = Some(NormArg::from_str(value, true).map_err(anyhow::Error::msg).with_context(ctx)?)
        }
        "out" => file.out = Some(PathBuf::from(value)),
        "json" => file.json = value.parse().with_context(ctx)?,
        _ => bail!("unknown config key {key:?}"),
    }
    Ok(())
}

/// Fills unset flags from `--config`, if given.
pub fn merge(cli: Global) -> Result<Global> {
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut file = Global::default();
    for (k, v) in parse_pairs(&text, &path)? {
        apply(&mut file, &k, &v)?;
    }
    Ok(Global {
        digits: cli.digits.or(file.digits),
        seed: cli.seed.or(file.seed),
        workers: cli.workers.or(file.workers),
        windows: cli.windows.or(file.windows),
        qr_period: cli.qr_period.or(file.qr_period),
        refresh: cli.refresh.or(file.refresh),
        normalization: cli.normalization.or(file.normalization),
        out: cli.out.or(file.out),
        json: cli.json || file.json,
        config: cli.config,
    })
}

pub fn run_config(g: &Global) -> RunConfig {
    let d = RunConfig::default();
    RunConfig {
        digits: g.digits.unwrap_or(d.digits),
        seed: g.seed.unwrap_or(d.seed),
        workers: g.workers.unwrap_or(d.workers),
        windows: g.windows.unwrap_or(d.windows),
        qr_period: g.qr_period.unwrap_or(d.qr_period),
        refresh_period: g.refresh.unwrap_or(d.refresh_period),
        normalization: g.normalization.map_or(d.normalization, Into::into),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_fills_gaps_and_flags_win() {
        let dir = std::env::temp_dir().join(format!("hyplyap-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# defaults\ndigits = 2000\nqr_period = 4\nseed=9\nnormalization = digit\n").unwrap();
        let cli = Global { seed: Some(3), config: Some(path), ..Global::default() };
        let g = merge(cli).unwrap();
        let cfg = run_config(&g);
        assert_eq!(cfg.digits, 2000);
        assert_eq!(cfg.qr_period, 4);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.normalization, hyplyap::lyapunov::Normalization::PerDigit);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn bad_lines_are_errors() {
        let p = Path::new("x.conf");
        assert!(parse_pairs("digits 5", p).is_err());
        let mut g = Global::default();
        assert!(apply(&mut g, "colour", "red").is_err());
        assert!(apply(&mut g, "digits", "many").is_err());
    }
}
