//! The stall test-set file format.
//!
//! Layout (bit-exact):
//!
//! ```text
//! magic "SCTS" | version u16 LE | header_len u32 LE | UTF-8 JSON header
//! frame_count records of [u32 LE stall position s][L*n f32 LE LLRs]
//! ```
//!
//! The JSON header carries the code descriptor, channel parameters, the
//! collected stall statistics, and the frame geometry.

use crate::channel::LlrFrame;
use crate::sc_code::{CodeSpec, CoupledCode};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SCTS";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestsetHeader {
    /// Descriptor of the code the frames were collected against.
    pub code: CodeSpec,
    pub snr_db: f64,
    pub seed: u64,
    pub frame_count: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    /// Mean stall start position over the collected frames (absent when
    /// the set is empty).
    pub e_s: Option<f64>,
    /// Stall-position histogram, one bin per spatial position.
    pub histogram: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestsetFrame {
    /// Stall start position under the baseline decoder (0 = none).
    pub s: u32,
    pub llrs: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct TestSet {
    pub header: TestsetHeader,
    pub frames: Vec<TestsetFrame>,
}

impl TestSet {
    /// Reconstruct the `idx`-th frame for decoding.
    pub fn frame(&self, idx: usize, code: &CoupledCode) -> LlrFrame {
        let f = &self.frames[idx];
        LlrFrame {
            llr: f.llrs.iter().map(|&v| v as f64).collect(),
            l: self.header.l,
            n: self.header.n,
            snr_db: self.header.snr_db,
            rate: code.rate,
            seed: self.header.seed,
            stream: idx as u64,
            manip: None,
        }
    }

    /// The header must describe the code the caller is about to decode with.
    pub fn check_matches(&self, code: &CoupledCode) -> Result<()> {
        if self.header.code != code.spec {
            return Err(Error::GeometryMismatch(
                "test-set descriptor differs from the loaded code".into(),
            ));
        }
        if self.header.l != code.spec.l || self.header.n != code.n {
            return Err(Error::GeometryMismatch(format!(
                "test-set geometry {}x{} vs code {}x{}",
                self.header.l,
                self.header.n,
                code.spec.l,
                code.n
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let samples = self.header.l * self.header.n;
        for (i, frame) in self.frames.iter().enumerate() {
            if frame.llrs.len() != samples {
                return Err(Error::BadTestset(format!(
                    "frame {i} has {} samples, expected {samples}",
                    frame.llrs.len()
                )));
            }
            w.write_all(&frame.s.to_le_bytes())?;
            for &v in &frame.llrs {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<TestSet> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::BadTestset("missing SCTS magic".into()));
        }
        let mut buf2 = [0u8; 2];
        r.read_exact(&mut buf2)?;
        let version = u16::from_le_bytes(buf2);
        if version != VERSION {
            return Err(Error::BadTestset(format!("unsupported version {version}")));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let header_len = u32::from_le_bytes(buf4) as usize;
        let mut header_bytes = vec![0u8; header_len];
        r.read_exact(&mut header_bytes)?;
        let header: TestsetHeader = serde_json::from_slice(&header_bytes)?;
        if header.histogram.len() != header.l {
            return Err(Error::BadTestset(format!(
                "histogram has {} bins, expected L = {}",
                header.histogram.len(),
                header.l
            )));
        }

        let samples = header.l * header.n;
        let mut frames = Vec::with_capacity(header.frame_count);
        let mut record = vec![0u8; 4 + 4 * samples];
        for i in 0..header.frame_count {
            r.read_exact(&mut record).map_err(|_| {
                Error::BadTestset(format!("truncated at frame {i} of {}", header.frame_count))
            })?;
            let s = u32::from_le_bytes(record[..4].try_into().unwrap());
            let llrs = record[4..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            frames.push(TestsetFrame { s, llrs });
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::BadTestset("trailing bytes after last frame".into()));
        }
        Ok(TestSet { header, frames })
    }
}
