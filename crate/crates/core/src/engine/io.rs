//! Batch export.
//!
//! CSV: `#`-prefixed header lines (`key: value`), then `trial,nu,z0,…,z{d−1}` with
//! shortest round-trip decimal formatting.
//!
//! Binary (little endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 8     | magic `GSUMBAT\0` |
//! | 4     | version (u32, currently 1) |
//! | 4     | dim (u32) |
//! | 8     | trials (u64) |
//! | 8     | p (f64) |
//! | 8     | seed (u64) |
//! | 32    | spec fingerprint (raw SHA-256) |
//! | 8·n   | `ν` column (u64) |
//! | 8·n·d | one f64 column per coordinate |

use std::io::{BufRead, Read, Write};

use super::SampleBatch;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"GSUMBAT\0";
pub const BINARY_VERSION: u32 = 1;

impl SampleBatch {
    /// Writes the CSV form; `extra` adds `# key: value` header lines after the standard ones.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(&str, String)]) -> Result<()> {
        writeln!(w, "# geosum sample batch v1")?;
        writeln!(w, "# spec_fingerprint: {}", self.fingerprint)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# p: {}", self.p)?;
        writeln!(w, "# dim: {}", self.dim)?;
        for (k, v) in extra {
            writeln!(w, "# {k}: {v}")?;
        }
        write!(w, "trial,nu")?;
        for k in 0..self.dim {
            write!(w, ",z{k}")?;
        }
        writeln!(w)?;
        let mut line = String::with_capacity(32 + 24 * self.dim);
        for (i, (nu, row)) in self.nu.iter().zip(self.rows()).enumerate() {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{i},{nu}");
            for z in row {
                let _ = write!(line, ",{z}");
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV form written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(r: R) -> Result<SampleBatch> {
        let bad = |msg: String| Error::Domain(format!("malformed batch CSV: {msg}"));
        let (mut fingerprint, mut seed, mut p, mut dim) = (None, None, None, None);
        let mut nu = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if let Some(h) = line.strip_prefix("# ") {
                if let Some((k, v)) = h.split_once(": ") {
                    match k {
                        "spec_fingerprint" => fingerprint = Some(v.to_string()),
                        "seed" => seed = v.parse().ok(),
                        "p" => p = v.parse().ok(),
                        "dim" => dim = v.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("trial,") || line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            fields.next();
            let n = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad(format!("line {}: bad nu", lineno + 1)))?;
            nu.push(n);
            for f in fields {
                values.push(
                    f.parse::<f64>()
                        .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
                );
            }
        }
        let dim: usize = dim.ok_or_else(|| bad("missing dim".into()))?;
        if values.len() != nu.len() * dim {
            return Err(bad("row width does not match dim".into()));
        }
        Ok(SampleBatch {
            dim,
            p: p.ok_or_else(|| bad("missing p".into()))?,
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            fingerprint: fingerprint.ok_or_else(|| bad("missing fingerprint".into()))?,
            nu,
            values,
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let fp = hex::decode(&self.fingerprint)
            .ok()
            .filter(|b| b.len() == 32)
            .ok_or_else(|| Error::Domain("fingerprint must be 64 hex digits".into()))?;
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.trials() as u64).to_le_bytes())?;
        w.write_all(&self.p.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&fp)?;
        for nu in &self.nu {
            w.write_all(&nu.to_le_bytes())?;
        }
        for k in 0..self.dim {
            for z in self.values.iter().skip(k).step_by(self.dim) {
                w.write_all(&z.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads the binary layout written by [`SampleBatch::write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> Result<SampleBatch> {
    if &take::<8, _>(&mut r)? != BINARY_MAGIC {
        return Err(Error::Domain("not a geosum batch file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != BINARY_VERSION {
        return Err(Error::Domain(format!("unsupported batch version {version}")));
    }
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let p = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let fingerprint = hex::encode(take::<32, _>(&mut r)?);
    let nu = (0..n)
        .map(|_| take(&mut r).map(u64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![0.0; n * dim];
    for k in 0..dim {
        for i in 0..n {
            values[i * dim + k] = f64::from_le_bytes(take(&mut r)?);
        }
    }
    Ok(SampleBatch {
        dim,
        p,
        seed,
        fingerprint,
        nu,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimConfig};
    use crate::sequence::{CoordinateSpec, DriftProfile, MarginalFamily, SequenceSpec, VarianceProfile};
    use proptest::prelude::*;

    fn batch(dim: usize, trials: u64, seed: u64) -> SampleBatch {
        let coords = (0..dim)
            .map(|k| CoordinateSpec {
                variance: VarianceProfile::Constant { value: 1.0 + k as f64 },
                drift: DriftProfile::Constant { value: 0.5 },
            })
            .collect();
        let spec = SequenceSpec::new(MarginalFamily::Gaussian, coords, None).unwrap();
        simulate(&spec, &SimConfig::new(0.05, trials, seed)).unwrap()
    }

    #[test]
    fn csv_layout() {
        let b = batch(2, 5, 1);
        let mut buf = Vec::new();
        b.write_csv(&mut buf, &[("config_fingerprint", "abc".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(&format!("# spec_fingerprint: {}", b.fingerprint)));
        assert!(text.contains("# config_fingerprint: abc"));
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "trial,nu,z0,z1");
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let b = batch(1, 3, 1);
        let mut buf = Vec::new();
        b.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 8 + 8 + 32 + 3 * 16);
        buf[0] = b'X';
        assert!(read_binary(buf.as_slice()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn exports_round_trip(dim in 1usize..4, trials in 1u64..200, seed in any::<u64>()) {
            let b = batch(dim, trials, seed);
            let mut csv = Vec::new();
            b.write_csv(&mut csv, &[]).unwrap();
            prop_assert_eq!(&SampleBatch::read_csv(csv.as_slice()).unwrap(), &b);
            let mut bin = Vec::new();
            b.write_binary(&mut bin).unwrap();
            prop_assert_eq!(&read_binary(bin.as_slice()).unwrap(), &b);
        }
    }
}
