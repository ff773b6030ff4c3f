//! Flat `key = value` configuration with one section per command.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ini::{Ini, ParseOption};

use crate::CliError;

/// Marker that opens every output header.
pub const HEADER_PREFIX: &str = "# relaydiv schema=";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tradeoff,
    Simulate,
    Waveform,
    Toeplitz,
    CompareCapacity,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Tradeoff,
        Command::Simulate,
        Command::Waveform,
        Command::Toeplitz,
        Command::CompareCapacity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tradeoff => "tradeoff",
            Command::Simulate => "simulate",
            Command::Waveform => "waveform",
            Command::Toeplitz => "toeplitz",
            Command::CompareCapacity => "compare-capacity",
        }
    }

    /// Accepted keys and their defaults, in echo order.
    pub fn keys(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Tradeoff => &[("k", "2"), ("schemes", "all"), ("r_step", "1/20"), ("t0_bw", "3")],
            Command::Simulate => &[
                ("scheme", "stc"),
                ("mode", "mc"),
                ("cond", "overall"),
                ("probability", "joint"),
                ("r", "0.1"),
                ("snr_db", "0:30:5"),
                ("trials", "100000"),
                ("seed", "1"),
                ("variances", "1,1,1,1,1"),
                ("t0_bw", "3"),
                ("waveform", "srrc"),
                ("rolloff", "0.5"),
                ("span", "2"),
                ("sps", "64"),
                ("tau", "0.3"),
                ("omega_points", "4096"),
                ("quad_points", "512"),
            ],
            Command::Waveform => &[
                ("waveform", "srrc"),
                ("rolloff", "0.5"),
                ("span", "2"),
                ("sps", "64"),
                ("tau", "0.3"),
                ("omega_points", "4096"),
            ],
            Command::Toeplitz => &[
                ("waveform", "srrc"),
                ("rolloff", "0.5"),
                ("span", "2"),
                ("sps", "64"),
                ("tau", "0.3"),
                ("snr_db", "20"),
                ("seed", "1"),
                ("draws", "1"),
                ("n_list", "8,32,128,512"),
                ("n_cap", "4096"),
            ],
            Command::CompareCapacity => &[
                ("waveform", "half-sine"),
                ("rolloff", "0.5"),
                ("span", "1"),
                ("sps", "64"),
                ("tau", "0.5"),
                ("snr_db", "0:30:10"),
                ("draws", "100"),
                ("seed", "1"),
                ("omega_points", "4096"),
                ("quad_points", "512"),
            ],
        }
    }

    fn from_section(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keeps only the leading comment block of an emitted file, uncommented.
fn header_block(text: &str) -> String {
    text.lines()
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a config file or an emitted output header and returns the
/// entries of `command`'s section.
pub fn parse(text: &str, command: Command) -> Result<Vec<(String, String)>, CliError> {
    let body = if text.starts_with(HEADER_PREFIX) {
        header_block(text)
    } else {
        text.to_string()
    };
    let opt = ParseOption {
        enabled_quote: false,
        enabled_escape: false,
        ..ParseOption::default()
    };
    let ini = Ini::load_from_str_opt(&body, opt).map_err(|e| CliError::Config(format!("config: {e}")))?;
    let mut found = None;
    for (section, props) in ini.iter() {
        let Some(name) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(CliError::Config(format!(
                    "config: key `{k}` appears before any section"
                )));
            }
            continue;
        };
        let Some(cmd) = Command::from_section(name.trim()) else {
            return Err(CliError::Config(format!("config: unknown section [{name}]")));
        };
        if cmd != command {
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (k, v) in props.iter() {
            if !seen.insert(k.to_string()) {
                return Err(CliError::Config(format!("config: key `{k}` repeated in [{name}]")));
            }
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        found = Some(entries);
    }
    found.ok_or_else(|| CliError::Config(format!("config: no [{command}] section")))
}

/// Fully resolved keys of one command, in echo order.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: Command,
    values: Vec<(&'static str, String)>,
}

impl Settings {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            values: command.keys().iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }

    /// Overrides `key`, rejecting keys the command does not know.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        match self.values.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => {
                slot.1 = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!(
                "{origin}: `{key}` is not a {} option",
                self.command
            ))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("no key `{key}` for {}", self.command))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| CliError::Config(format!("{key} = {v}: {e}")))
    }

    /// The config block echoed at the top of every output.
    pub fn echo(&self) -> String {
        let mut s = format!("# [{}]\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }
}

/// Parses `LO:HI:STEP` into an inclusive grid, or a single value.
pub fn parse_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("{key} = {text}: {why}"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(&e.to_string()));
    match parts.as_slice() {
        [x] => {
            let x = num(x)?;
            if !x.is_finite() {
                return Err(bad("not finite"));
            }
            Ok(vec![x])
        }
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
                return Err(bad("not finite"));
            }
            if step <= 0.0 {
                return Err(bad("step must be positive"));
            }
            if hi < lo {
                return Err(bad("HI is below LO"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if n > 10_000 {
                return Err(bad("more than 10000 points"));
            }
            Ok((0..n).map(|i| lo + i as f64 * step).collect())
        }
        _ => Err(bad("expected LO:HI:STEP or a single value")),
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e| CliError::Config(format!("{key} = {text}: `{s}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_own_section_only() {
        let text = "# comment\n[tradeoff]\nk = 1\n[simulate]\nr = 0.2\n";
        let e = parse(text, Command::Simulate).unwrap();
        assert_eq!(e, vec![("r".to_string(), "0.2".to_string())]);
    }

    #[test]
    fn rejects_unknown_section_and_stray_keys() {
        assert!(parse("[plot]\nx = 1\n", Command::Tradeoff).is_err());
        assert!(parse("k = 1\n[tradeoff]\n", Command::Tradeoff).is_err());
        assert!(parse("[simulate]\nr = 1\n", Command::Tradeoff).is_err());
    }

    #[test]
    fn rejects_repeated_key() {
        assert!(parse("[tradeoff]\nk = 1\nk = 2\n", Command::Tradeoff).is_err());
    }

    #[test]
    fn header_round_trip() {
        let mut s = Settings::defaults(Command::Waveform);
        s.set("tau", "0.5", "test").unwrap();
        let text = format!("{HEADER_PREFIX}pd-report/v1\n{}metric,value\n# trailing\n", s.echo());
        let e = parse(&text, Command::Waveform).unwrap();
        let mut t = Settings::defaults(Command::Waveform);
        for (k, v) in &e {
            t.set(k, v, "header").unwrap();
        }
        assert_eq!(t.echo(), s.echo());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut s = Settings::defaults(Command::Toeplitz);
        assert!(s.set("trials", "10", "test").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "0:15:5").unwrap(), vec![0.0, 5.0, 10.0, 15.0]);
        assert_eq!(parse_grid("g", "20").unwrap(), vec![20.0]);
        assert!(parse_grid("g", "0:10:0").is_err());
        assert!(parse_grid("g", "10:0:1").is_err());
        assert!(parse_grid("g", "1:2").is_err());
    }
}
