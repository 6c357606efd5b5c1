//! `PRAGMACT-MODEL v1` text format:
//!
//! ```text
//! PRAGMACT-MODEL v1
//! config <key> <value>
//! dictionary <n>
//! <id>\t<feature>            (n lines)
//! tensors <n>
//! <name> <dim>...
//! <value> <value> ...        (one line per tensor)
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so parsing a
//! written file reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::textfeat::FeatureDictionary;

pub const MODEL_MAGIC: &str = "PRAGMACT-MODEL v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub config: Vec<(String, String)>,
    pub dictionary: Option<FeatureDictionary>,
    pub params: ParamSet,
}

impl ModelFile {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_MAGIC);
        out.push('\n');
        for (k, v) in &self.config {
            let _ = writeln!(out, "config {k} {v}");
        }
        if let Some(dict) = &self.dictionary {
            let _ = writeln!(out, "dictionary {}", dict.len());
            out.push_str(&dict.to_text());
        }
        let _ = writeln!(out, "tensors {}", self.params.len());
        for (_, name, t) in self.params.iter() {
            out.push_str(name);
            for d in t.shape() {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let mut first = true;
            for v in t.data() {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ModelFile> {
        let ctx = "model file";
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, MODEL_MAGIC)) => {}
            _ => {
                return Err(Error::parse(
                    ctx,
                    1,
                    format!("expected header {MODEL_MAGIC:?}"),
                ))
            }
        }
        let mut config = Vec::new();
        let mut dictionary = None;
        let mut params = ParamSet::new();
        while let Some((no, line)) = lines.next() {
            if let Some(rest) = line.strip_prefix("config ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                config.push((k.to_string(), v.to_string()));
            } else if let Some(n) = line.strip_prefix("dictionary ") {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::parse(ctx, no, "bad dictionary size"))?;
                let mut body = String::new();
                for _ in 0..n {
                    let (_, l) = lines
                        .next()
                        .ok_or_else(|| Error::parse(ctx, no, "truncated dictionary"))?;
                    body.push_str(l);
                    body.push('\n');
                }
                dictionary = Some(FeatureDictionary::from_text(&body)?);
            } else if let Some(n) = line.strip_prefix("tensors ") {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::parse(ctx, no, "bad tensor count"))?;
                for _ in 0..n {
                    let (hno, head) = lines
                        .next()
                        .ok_or_else(|| Error::parse(ctx, no, "truncated tensor list"))?;
                    let mut parts = head.split(' ');
                    let name = parts.next().unwrap_or_default();
                    let shape = parts
                        .map(|d| d.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::parse(ctx, hno, "bad tensor shape"))?;
                    let (vno, body) = lines
                        .next()
                        .ok_or_else(|| Error::parse(ctx, hno, "missing tensor values"))?;
                    let data = body
                        .split_ascii_whitespace()
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::parse(ctx, vno, "bad tensor value"))?;
                    let tensor = Tensor::from_vec(&shape, data)
                        .map_err(|e| Error::parse(ctx, vno, e.to_string()))?;
                    params
                        .add(name, tensor)
                        .map_err(|e| Error::parse(ctx, hno, e.to_string()))?;
                }
            } else if !line.is_empty() {
                return Err(Error::parse(ctx, no, format!("unexpected line {line:?}")));
            }
        }
        Ok(ModelFile {
            config,
            dictionary,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = ParamSet::new();
        params.add("enc.W", Tensor::xavier(3, 5, &mut rng)).unwrap();
        params
            .add(
                "b",
                Tensor::from_vec(&[3], vec![1e-300, -0.0, f64::MIN_POSITIVE]).unwrap(),
            )
            .unwrap();
        let mut dict = FeatureDictionary::new();
        dict.intern("the");
        dict.freeze();
        let file = ModelFile {
            config: vec![("architecture".into(), "bigru".into())],
            dictionary: Some(dict),
            params,
        };
        let back = ModelFile::from_text(&file.to_text()).unwrap();
        for ((_, _, a), (_, _, b)) in file.params.iter().zip(back.params.iter()) {
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(back.config_value("architecture"), Some("bigru"));
        assert_eq!(back.dictionary, file.dictionary);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(ModelFile::from_text("PRAGMACT-MODEL v2\n").is_err());
    }
}
