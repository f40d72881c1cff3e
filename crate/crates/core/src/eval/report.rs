//! Error counts, confidence intervals and the results CSV.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Counts for one decoder at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub decoder: String,
    pub code: String,
    pub n: usize,
    pub l: usize,
    pub snr_db: f64,
    pub alpha: f64,
    pub blocks: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub seed: u64,
}

impl EvalPoint {
    pub fn bits(&self) -> u64 {
        self.blocks * self.l as u64
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits())
    }

    pub fn bler(&self) -> f64 {
        ratio(self.block_errors, self.blocks)
    }

    pub fn ber_interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits())
    }

    pub fn bler_interval(&self) -> (f64, f64) {
        wilson_interval(self.block_errors, self.blocks)
    }

    /// Half the width of the BER interval.
    pub fn ber_ci95(&self) -> f64 {
        let (lo, hi) = self.ber_interval();
        (hi - lo) / 2.0
    }

    pub fn bler_ci95(&self) -> f64 {
        let (lo, hi) = self.bler_interval();
        (hi - lo) / 2.0
    }

    /// Adds another tally of the same experiment.
    pub fn absorb(&mut self, blocks: u64, bit_errors: u64, block_errors: u64) {
        self.blocks += blocks;
        self.bit_errors += bit_errors;
        self.block_errors += block_errors;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// One CSV row; rates and intervals are derived from the counts.
#[derive(Serialize, Deserialize)]
struct Row {
    decoder: String,
    code: String,
    n: usize,
    l: usize,
    snr_db: f64,
    alpha: f64,
    blocks: u64,
    bit_errors: u64,
    block_errors: u64,
    ber: f64,
    bler: f64,
    ber_ci95: f64,
    bler_ci95: f64,
    seed: u64,
}

pub const EVAL_HEADER: [&str; 14] = [
    "decoder",
    "code",
    "n",
    "l",
    "snr_db",
    "alpha",
    "blocks",
    "bit_errors",
    "block_errors",
    "ber",
    "bler",
    "ber_ci95",
    "bler_ci95",
    "seed",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    /// Rows ordered by decoder (in request order), then SNR.
    pub points: Vec<EvalPoint>,
}

impl EvalReport {
    pub fn get(&self, decoder: &str, snr_db: f64) -> Option<&EvalPoint> {
        self.points.iter().find(|p| p.decoder == decoder && p.snr_db == snr_db)
    }

    pub fn for_decoder<'a>(&'a self, decoder: &'a str) -> impl Iterator<Item = &'a EvalPoint> + 'a {
        self.points.iter().filter(move |p| p.decoder == decoder)
    }

    /// Writes `# `-prefixed comment lines, then the header and one row per point.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        write_comments(&mut out, comments)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(EVAL_HEADER)?;
        for p in &self.points {
            w.serialize(Row {
                decoder: p.decoder.clone(),
                code: p.code.clone(),
                n: p.n,
                l: p.l,
                snr_db: p.snr_db,
                alpha: p.alpha,
                blocks: p.blocks,
                bit_errors: p.bit_errors,
                block_errors: p.block_errors,
                ber: p.ber(),
                bler: p.bler(),
                ber_ci95: p.ber_ci95(),
                bler_ci95: p.bler_ci95(),
                seed: p.seed,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a file written by [`EvalReport::write_csv`], skipping comments.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        if *r.headers()? != csv::StringRecord::from(EVAL_HEADER.to_vec()) {
            return Err(Error::invalid("unexpected results CSV header"));
        }
        let points = r
            .deserialize::<Row>()
            .map(|row| {
                let row = row?;
                Ok(EvalPoint {
                    decoder: row.decoder,
                    code: row.code,
                    n: row.n,
                    l: row.l,
                    snr_db: row.snr_db,
                    alpha: row.alpha,
                    blocks: row.blocks,
                    bit_errors: row.bit_errors,
                    block_errors: row.block_errors,
                    seed: row.seed,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { points })
    }
}

pub(crate) fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// Comment lines of a CSV file, without the `# ` prefix.
pub fn read_comments<R: Read>(input: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(c) => out.push(c.strip_prefix(' ').unwrap_or(c).to_string()),
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(blocks: u64, bit_errors: u64, block_errors: u64) -> EvalPoint {
        EvalPoint {
            decoder: "viterbi-hard".into(),
            code: "conv:5,7:zero-tail".into(),
            n: 100,
            l: 48,
            snr_db: 3.0,
            alpha: 0.0,
            blocks,
            bit_errors,
            block_errors,
            seed: 4,
        }
    }

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: interval from the closed form, computed by hand
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.055_229_4).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_366_1).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.08);
    }

    #[test]
    fn rates_follow_counts() {
        let p = point(1000, 480, 300);
        assert_eq!(p.ber(), 0.01);
        assert_eq!(p.bler(), 0.3);
        assert!(p.bler() >= p.ber());
    }

    #[test]
    fn empty_report_writes_header_only() {
        let mut out = Vec::new();
        EvalReport::default().write_csv(&mut out, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), EVAL_HEADER.join(",") + "\n");
    }

    #[test]
    fn csv_round_trip_keeps_counts() {
        let report = EvalReport {
            points: vec![point(1000, 480, 300), point(20000, 7, 3)],
        };
        let mut out = Vec::new();
        report.write_csv(&mut out, &["seed = 4\ncode = conv".to_string()]).unwrap();
        assert_eq!(read_comments(&out[..]).unwrap(), vec!["seed = 4", "code = conv"]);
        assert_eq!(EvalReport::read_csv(&out[..]).unwrap(), report);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(EvalReport::read_csv(&b"a,b\n1,2\n"[..]).is_err());
    }
}
