//! Run configuration stored as `key = value` lines under a versioned header.
//!
//! ```text
//! vfe-config 1
//! command = simulate
//! m = 3
//! nodes_per_side = 512
//! steps = 151200
//! dump_times = paper1260
//! out = run_M3_n512
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vfe_core::algebraic::RationalTime;
use vfe_core::gauss::GaussArgs;
use vfe_core::io::fmt17;
use vfe_core::reproduce::Scale;
use vfe_core::spectral::GridSpec;
use vfe_core::{Result, VfeError};

pub const CONFIG_MAGIC: &str = "vfe-config";
pub const CONFIG_VERSION: u32 = 1;

/// Which states a simulation keeps in full.
#[derive(Debug, Clone, PartialEq)]
pub enum DumpTimes {
    None,
    /// The 1261 times `k / 1260` of the period.
    Paper1260,
    /// One time per line; blank lines and `#` comments are skipped.
    File(PathBuf),
}

impl DumpTimes {
    pub fn resolve(&self, m: u32) -> Result<Vec<f64>> {
        match self {
            DumpTimes::None => Ok(vec![]),
            DumpTimes::Paper1260 => Ok(vfe_core::spectral::standard_dump_times(m)),
            DumpTimes::File(path) => {
                let text = fs::read_to_string(path)?;
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| l.parse::<f64>().map_err(|_| VfeError::Parse(format!("bad dump time {l:?}"))))
                    .collect()
            }
        }
    }
}

impl fmt::Display for DumpTimes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DumpTimes::None => f.write_str("none"),
            DumpTimes::Paper1260 => f.write_str("paper1260"),
            DumpTimes::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for DumpTimes {
    type Err = VfeError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" | "" => DumpTimes::None,
            "paper1260" => DumpTimes::Paper1260,
            path => DumpTimes::File(PathBuf::from(path)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Table1,
    Table2,
    Riemann,
    Holder,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Table1 => "table1",
            Target::Table2 => "table2",
            Target::Riemann => "riemann",
            Target::Holder => "holder",
        }
    }

    /// Polygon orders run when none are given.
    pub fn default_ms(self) -> Vec<u32> {
        match self {
            Target::Table1 | Target::Table2 => (3..=10).collect(),
            Target::Riemann => (3..=8).collect(),
            Target::Holder => vec![3],
        }
    }
}

impl FromStr for Target {
    type Err = VfeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Target::Table1),
            "table2" => Ok(Target::Table2),
            "riemann" => Ok(Target::Riemann),
            "holder" => Ok(Target::Holder),
            _ => Err(VfeError::InvalidArgument(format!(
                "target must be table1, table2, riemann or holder, got {s:?}"
            ))),
        }
    }
}

fn scale_name(s: Scale) -> &'static str {
    match s {
        Scale::Desk => "desk",
        Scale::Paper => "paper",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Gauss {
        a: i64,
        b: i64,
        c: i64,
    },
    Algebraic {
        m: u32,
        p: i64,
        q: i64,
        out: PathBuf,
    },
    Simulate {
        m: u32,
        nodes_per_side: usize,
        steps: usize,
        dump_times: DumpTimes,
        out: PathBuf,
    },
    Analyze {
        manifest: PathBuf,
        out: PathBuf,
        phi_terms: usize,
        holder_window: (f64, f64),
        /// `(p, q)`: fit at `p / q` of the period.
        holder_at: (i64, i64),
    },
    Reproduce {
        target: Target,
        scale: Scale,
        ms: Vec<u32>,
        /// Overrides the resolution of `scale`; reference values then no longer apply.
        nodes_per_side: Option<usize>,
        out: PathBuf,
    },
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Gauss { .. } => "gauss",
            RunConfig::Algebraic { .. } => "algebraic",
            RunConfig::Simulate { .. } => "simulate",
            RunConfig::Analyze { .. } => "analyze",
            RunConfig::Reproduce { .. } => "reproduce",
        }
    }

    pub fn out(&self) -> Option<&Path> {
        match self {
            RunConfig::Gauss { .. } => None,
            RunConfig::Algebraic { out, .. }
            | RunConfig::Simulate { out, .. }
            | RunConfig::Analyze { out, .. }
            | RunConfig::Reproduce { out, .. } => Some(out),
        }
    }

    /// Checks the parameters against the solver's own constraints.
    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Gauss { a, b, c } => {
                GaussArgs::new(*a, *b, *c)?;
                vfe_core::gauss::mod_inverse(*a, *c).map(|_| ())
            }
            RunConfig::Algebraic { m, p, q, .. } => RationalTime::new(*m, *p, *q).map(|_| ()),
            RunConfig::Simulate { m, nodes_per_side, steps, .. } => {
                GridSpec::new(*m, *nodes_per_side, *steps).map(|_| ())
            }
            RunConfig::Analyze { phi_terms, holder_window: (lo, hi), holder_at: (p, q), .. } => {
                if *phi_terms == 0 {
                    return Err(VfeError::InvalidArgument("phi_terms must be positive".into()));
                }
                if !(*lo > 0.0 && hi > lo) {
                    return Err(VfeError::InvalidArgument(format!("holder window needs 0 < lo < hi, got {lo}, {hi}")));
                }
                if !(*q > 0 && (0..=*q).contains(p)) {
                    return Err(VfeError::InvalidArgument(format!("holder point {p}/{q} is not in [0, 1]")));
                }
                Ok(())
            }
            RunConfig::Reproduce { ms, nodes_per_side, .. } => {
                if ms.is_empty() {
                    return Err(VfeError::InvalidArgument("no polygon orders given".into()));
                }
                let nps = nodes_per_side.unwrap_or(512);
                for &m in ms {
                    GridSpec::new(m, nps, vfe_core::reproduce::standard_steps(m, nps))?;
                }
                Ok(())
            }
        }
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Path| p.display().to_string();
        match self {
            RunConfig::Gauss { a, b, c } => vec![("a", a.to_string()), ("b", b.to_string()), ("c", c.to_string())],
            RunConfig::Algebraic { m, p, q, out } => {
                vec![("m", m.to_string()), ("p", p.to_string()), ("q", q.to_string()), ("out", path(out))]
            }
            RunConfig::Simulate { m, nodes_per_side, steps, dump_times, out } => vec![
                ("m", m.to_string()),
                ("nodes_per_side", nodes_per_side.to_string()),
                ("steps", steps.to_string()),
                ("dump_times", dump_times.to_string()),
                ("out", path(out)),
            ],
            RunConfig::Analyze { manifest, out, phi_terms, holder_window, holder_at } => vec![
                ("manifest", path(manifest)),
                ("out", path(out)),
                ("phi_terms", phi_terms.to_string()),
                ("holder_window", format!("{},{}", fmt17(holder_window.0), fmt17(holder_window.1))),
                ("holder_at", format!("{}/{}", holder_at.0, holder_at.1)),
            ],
            RunConfig::Reproduce { target, scale, ms, nodes_per_side, out } => {
                let ms: Vec<String> = ms.iter().map(u32::to_string).collect();
                let mut e = vec![
                    ("target", target.name().to_string()),
                    ("scale", scale_name(*scale).to_string()),
                    ("m", ms.join(",")),
                ];
                if let Some(n) = nodes_per_side {
                    e.push(("nodes_per_side", n.to_string()));
                }
                e.push(("out", path(out)));
                e
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{CONFIG_MAGIC} {CONFIG_VERSION}\ncommand = {}\n", self.command());
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| VfeError::Parse("empty config".into()))?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            [magic, version] if *magic == CONFIG_MAGIC => {
                let v: u32 = version.parse().map_err(|_| VfeError::Parse(format!("bad config version {version:?}")))?;
                if v != CONFIG_VERSION {
                    return Err(VfeError::Parse(format!("config version {v} is not supported (expected {CONFIG_VERSION})")));
                }
            }
            _ => return Err(VfeError::Parse(format!("missing '{CONFIG_MAGIC} <version>' header, found {header:?}"))),
        }
        let mut map = BTreeMap::new();
        for line in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| VfeError::Parse(format!("expected key = value, found {line:?}")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(VfeError::Parse(format!("duplicate key {:?}", k.trim())));
            }
        }
        let mut fields = Fields(map);
        let config = match fields.take("command")?.as_str() {
            "gauss" => RunConfig::Gauss { a: fields.parse("a")?, b: fields.parse("b")?, c: fields.parse("c")? },
            "algebraic" => RunConfig::Algebraic {
                m: fields.parse("m")?,
                p: fields.parse("p")?,
                q: fields.parse("q")?,
                out: fields.take("out")?.into(),
            },
            "simulate" => RunConfig::Simulate {
                m: fields.parse("m")?,
                nodes_per_side: fields.parse("nodes_per_side")?,
                steps: fields.parse("steps")?,
                dump_times: fields.parse("dump_times")?,
                out: fields.take("out")?.into(),
            },
            "analyze" => RunConfig::Analyze {
                manifest: fields.take("manifest")?.into(),
                out: fields.take("out")?.into(),
                phi_terms: fields.parse("phi_terms")?,
                holder_window: parse_window(&fields.take("holder_window")?)?,
                holder_at: parse_fraction(&fields.take("holder_at")?)?,
            },
            "reproduce" => RunConfig::Reproduce {
                target: fields.parse("target")?,
                scale: fields.parse("scale")?,
                ms: parse_list(&fields.take("m")?)?,
                nodes_per_side: fields.optional("nodes_per_side")?,
                out: fields.take("out")?.into(),
            },
            other => return Err(VfeError::Parse(format!("unknown command {other:?}"))),
        };
        if let Some(k) = fields.0.keys().next() {
            return Err(VfeError::Parse(format!("unknown key {k:?} for {}", config.command())));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_text())?)
    }
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take(&mut self, key: &str) -> Result<String> {
        self.0.remove(key).ok_or_else(|| VfeError::Parse(format!("missing key {key:?}")))
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.take(key)?;
        v.parse().map_err(|_| VfeError::Parse(format!("bad value {v:?} for {key:?}")))
    }

    fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.contains_key(key) {
            true => self.parse(key).map(Some),
            false => Ok(None),
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| VfeError::Parse(format!("bad polygon order {x:?}"))))
        .collect()
}

pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let bad = || VfeError::Parse(format!("window must be lo,hi, got {s:?}"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

pub fn parse_fraction(s: &str) -> Result<(i64, i64)> {
    let bad = || VfeError::Parse(format!("expected p/q, got {s:?}"));
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_required() {
        assert!(RunConfig::from_text("command = gauss\na = 1\nb = 0\nc = 5\n").is_err());
        assert!(RunConfig::from_text("vfe-config 2\ncommand = gauss\na = 1\nb = 0\nc = 5\n").is_err());
        let ok = RunConfig::from_text("# comment\nvfe-config 1\ncommand = gauss\na = 1\nb = 0\nc = 5\n").unwrap();
        assert_eq!(ok, RunConfig::Gauss { a: 1, b: 0, c: 5 });
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert!(RunConfig::from_text("vfe-config 1\ncommand = gauss\na = 1\nb = 0\n").is_err());
        assert!(RunConfig::from_text("vfe-config 1\ncommand = gauss\na = 1\nb = 0\nc = 5\nd = 1\n").is_err());
        assert!(RunConfig::from_text("vfe-config 1\ncommand = gauss\na = 1\na = 2\nb = 0\nc = 5\n").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::Gauss { a: 2, b: 0, c: 4 }.validate().is_err());
        assert!(RunConfig::Algebraic { m: 3, p: 2, q: 4, out: "x".into() }.validate().is_err());
        let sim = |steps| RunConfig::Simulate {
            m: 3,
            nodes_per_side: 16,
            steps,
            dump_times: DumpTimes::None,
            out: "x".into(),
        };
        assert!(sim(10).validate().is_err());
        assert!(sim(1000).validate().is_ok());
    }
}
