//! The sectioned key=value config format, plus the crate's shared text
//! conventions (significant-digit number formatting and the FNV-1a content
//! digest stamped into output headers).
//!
//! The format is deliberately flat and diffable:
//!
//! ```text
//! # full-line comments and blank lines are skipped
//! [model]
//! omega_r = 5.15
//! n_cut = 30
//! ```
//!
//! Sections cannot nest, every key needs a `=`, duplicate keys within a
//! section are rejected, and every diagnostic is anchored to a 1-based line
//! number so a typo is a one-glance fix. Which (section, key) pairs are
//! *meaningful* is decided by the caller (see [`crate::run`]), which treats
//! unknown keys as hard errors rather than silently ignoring them.

use crate::{Error, Result};

/// One `key = value` assignment, with its section and source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A parsed config file: the assignments in file order, plus the digest of
/// the raw text they came from.
#[derive(Debug, Clone)]
pub struct RawConfig {
    pub entries: Vec<ConfigEntry>,
    digest: u64,
}

impl RawConfig {
    /// Parse config text. Syntax errors (and duplicate keys) are reported
    /// with their line number; content is not interpreted here.
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut entries: Vec<ConfigEntry> = Vec::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(Error::Config {
                        line,
                        message: format!("unterminated section header `{s}`"),
                    });
                };
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "empty section name".into(),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(section) = section.as_deref() else {
                return Err(Error::Config {
                    line,
                    message: format!("`{s}` appears before any [section] header"),
                });
            };
            let Some((key, value)) = s.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{s}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    line,
                    message: "empty key".into(),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("key `{key}` has an empty value"),
                });
            }
            if let Some(prev) = entries
                .iter()
                .find(|e| e.section == section && e.key == key)
            {
                return Err(Error::Config {
                    line,
                    message: format!(
                        "duplicate key `{key}` in [{section}] (first set on line {})",
                        prev.line
                    ),
                });
            }
            entries.push(ConfigEntry {
                section: section.to_string(),
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(RawConfig {
            entries,
            digest: fnv1a64(text.as_bytes()),
        })
    }

    /// FNV-1a digest of the raw config text, as stamped into output headers.
    pub fn digest(&self) -> u64 {
        self.digest
    }

    /// Look up one assignment.
    pub fn get(&self, section: &str, key: &str) -> Option<&ConfigEntry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    /// Typed getters: parse the value at (section, key), or fall back to a
    /// default when absent. Parse failures are anchored to the value's line.
    pub fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        self.parse_with(section, key, default, "a number")
    }

    pub fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        self.parse_with(section, key, default, "a non-negative integer")
    }

    pub fn u64(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        self.parse_with(section, key, default, "a non-negative integer")
    }

    pub fn bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        let Some(e) = self.get(section, key) else {
            return Ok(default);
        };
        match e.value.as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(Error::Config {
                line: e.line,
                message: format!("cannot parse `{other}` as a boolean (true/false)"),
            }),
        }
    }

    pub fn string(&self, section: &str, key: &str, default: &str) -> String {
        self.get(section, key)
            .map_or_else(|| default.to_string(), |e| e.value.clone())
    }

    pub fn opt_string(&self, section: &str, key: &str) -> Option<String> {
        self.get(section, key).map(|e| e.value.clone())
    }

    /// A comma-separated list value, trimmed (`labels = gg0, gg1, ee0`).
    pub fn list(&self, section: &str, key: &str, default: &[&str]) -> Vec<String> {
        match self.get(section, key) {
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            None => default.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn parse_with<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        default: T,
        what: &str,
    ) -> Result<T> {
        let Some(e) = self.get(section, key) else {
            return Ok(default);
        };
        e.value.parse().map_err(|_| Error::Config {
            line: e.line,
            message: format!("cannot parse `{}` as {what}", e.value),
        })
    }

    /// Reject any (section, key) not present in `allowed`, and any section
    /// name that is not listed at all — the typo guard. `allowed` maps a
    /// section name to its full key set.
    pub fn check_schema(&self, allowed: &[(&str, &[&str])]) -> Result<()> {
        for e in &self.entries {
            match allowed.iter().find(|(s, _)| *s == e.section) {
                None => {
                    return Err(Error::Config {
                        line: e.line,
                        message: format!(
                            "unknown section [{}] (known: {})",
                            e.section,
                            allowed
                                .iter()
                                .map(|(s, _)| *s)
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    })
                }
                Some((_, keys)) => {
                    if !keys.contains(&e.key.as_str()) {
                        return Err(Error::Config {
                            line: e.line,
                            message: format!(
                                "unknown key `{}` in [{}] (known: {})",
                                e.key,
                                e.section,
                                keys.join(", ")
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// 64-bit FNV-1a hash — tiny, dependency-free, and stable across platforms;
/// collision resistance is irrelevant here (the digest only ties an output
/// file back to the exact config text that produced it).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Format with a fixed number of significant digits, period decimal, no
/// exponent — the crate's CSV number convention.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1, "need at least one significant digit");
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    const SAMPLE: &str = "\
# a demo config
[model]
omega_r = 5.15
n_cut = 30

[sweep]
reference = true
labels = gg0, gg1 , ee0
";

    #[test]
    fn parses_sections_keys_and_types() {
        let c = RawConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.f64("model", "omega_r", 0.0).unwrap(), 5.15);
        assert_eq!(c.usize("model", "n_cut", 0).unwrap(), 30);
        assert!(c.bool("sweep", "reference", false).unwrap());
        assert_eq!(c.list("sweep", "labels", &[]), vec!["gg0", "gg1", "ee0"]);
        // defaults fill in when a key is absent
        assert_eq!(c.f64("model", "g1", 3.33).unwrap(), 3.33);
        assert_eq!(c.string("model", "mode", "full"), "full");
        assert!(c.opt_string("model", "mode").is_none());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let cases: &[(&str, usize)] = &[
            ("omega_r = 5.15\n", 1),              // key before any section
            ("[model\nomega_r = 5.15\n", 1),      // unterminated header
            ("[model]\nomega_r 5.15\n", 2),       // missing '='
            ("[model]\nomega_r =\n", 2),          // empty value
            ("[model]\n= 5.15\n", 2),             // empty key
            ("[]\n", 1),                          // empty section name
            ("[m]\na = 1\na = 2\n", 3),           // duplicate key
        ];
        for (text, want_line) in cases {
            match RawConfig::parse(text) {
                Err(Error::Config { line, .. }) => {
                    assert_eq!(line, *want_line, "wrong line for {text:?}")
                }
                other => panic!("expected config error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn value_parse_errors_point_at_the_value_line() {
        let c = RawConfig::parse("[model]\n\nn_cut = thirty\n").unwrap();
        match c.usize("model", "n_cut", 0) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected config error, got {other:?}"),
        }
        let c = RawConfig::parse("[sweep]\nreference = maybe\n").unwrap();
        assert!(matches!(
            c.bool("sweep", "reference", false),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn schema_check_rejects_unknown_sections_and_keys() {
        let allowed: &[(&str, &[&str])] =
            &[("model", &["omega_r", "n_cut"]), ("sweep", &["points"])];
        let ok = RawConfig::parse("[model]\nomega_r = 1.0\n").unwrap();
        ok.check_schema(allowed).unwrap();
        let bad_key = RawConfig::parse("[model]\nomega = 1.0\n").unwrap();
        assert!(matches!(
            bad_key.check_schema(allowed),
            Err(Error::Config { line: 2, .. })
        ));
        let bad_section = RawConfig::parse("[mode]\nomega_r = 1.0\n").unwrap();
        assert!(matches!(
            bad_section.check_schema(allowed),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn digest_matches_reference_vectors_and_tracks_content() {
        // standard FNV-1a test vectors
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
        let a = RawConfig::parse("[m]\nk = 1\n").unwrap();
        let b = RawConfig::parse("[m]\nk = 2\n").unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn significant_digit_formatting_spans_magnitudes() {
        assert_eq!(fmt_sig(5.15, 12), "5.15000000000");
        assert_eq!(fmt_sig(201.6, 12), "201.600000000");
        assert_eq!(fmt_sig(-0.00078, 12), "-0.000780000000000");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(1.0e15, 12), "1000000000000000");
        // every rendering must survive a parse round-trip at 1e-9 relative
        for &x in &[5.15, -3.22, 201.6, 0.547, 9.43e-3, 22.4362e-3] {
            let s = fmt_sig(x, 12);
            let back: f64 = s.parse().unwrap();
            assert!(
                ((back - x) / x).abs() < 1e-9,
                "{x} rendered as {s}, parsed back {back}"
            );
            assert!(!s.contains(','), "period decimal only: {s}");
        }
    }
}
