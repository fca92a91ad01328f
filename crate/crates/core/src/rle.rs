//! Run-length encoded binary masks.
//!
//! Rows are concatenated in row-major order and run lengths alternate
//! starting with an "off" run (which is `0` when the first pixel is set).
//! The text form is the decimal run lengths separated by single spaces.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{Dims, Span, SpanSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleError {
    #[error("invalid run length {0:?}")]
    BadRun(String),
    #[error("runs cover {covered} pixels, mask has {expected}")]
    Coverage { covered: u64, expected: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    #[serde(serialize_with = "ser_counts", deserialize_with = "de_counts")]
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn new(width: u32, height: u32, counts: Vec<u32>) -> Result<Self, RleError> {
        let covered: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = width as u64 * height as u64;
        if covered != expected {
            return Err(RleError::Coverage { covered, expected });
        }
        Ok(Self { width, height, counts })
    }

    pub fn from_bits(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize, "mask size");
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in bits {
            if b == current {
                run += 1;
            } else {
                counts.push(run);
                current = b;
                run = 1;
            }
        }
        counts.push(run);
        Self { width, height, counts }
    }

    pub fn from_spans(dims: Dims, spans: &SpanSet) -> Self {
        let mut counts = Vec::new();
        let mut pos = 0u64;
        let w = dims.width as u64;
        for s in spans.spans() {
            let start = s.y as u64 * w + s.x0 as u64;
            let end = s.y as u64 * w + s.x1 as u64;
            if start == pos && !counts.is_empty() {
                // contiguous with the previous on-run across a row break
                *counts.last_mut().unwrap() += (end - start) as u32;
            } else {
                counts.push((start - pos) as u32);
                counts.push((end - start) as u32);
            }
            pos = end;
        }
        let total = dims.area();
        if pos < total || counts.is_empty() {
            counts.push((total - pos) as u32);
        }
        Self { width: dims.width, height: dims.height, counts }
    }

    /// Parses the space-separated text form.
    pub fn parse(width: u32, height: u32, text: &str) -> Result<Self, RleError> {
        Self::new(width, height, parse_counts(text)?)
    }

    pub fn encode_counts(&self) -> String {
        let mut s = String::with_capacity(self.counts.len() * 4);
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{c}").unwrap();
        }
        s
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn count_ones(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.width as usize * self.height as usize);
        for (i, &c) in self.counts.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
        }
        bits
    }

    pub fn spans(&self) -> SpanSet {
        let w = self.width as u64;
        let mut spans = Vec::new();
        let mut pos = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            let end = pos + c as u64;
            if i % 2 == 1 && w > 0 {
                let mut p = pos;
                while p < end {
                    let y = p / w;
                    let row_end = ((y + 1) * w).min(end);
                    spans.push(Span { y: y as u32, x0: (p - y * w) as u32, x1: (row_end - y * w) as u32 });
                    p = row_end;
                }
            }
            pos = end;
        }
        SpanSet::from_spans(spans)
    }
}

fn parse_counts(text: &str) -> Result<Vec<u32>, RleError> {
    text.split_ascii_whitespace().map(|t| t.parse::<u32>().map_err(|_| RleError::BadRun(t.to_string()))).collect()
}

fn ser_counts<S: Serializer>(counts: &[u32], s: S) -> Result<S::Ok, S::Error> {
    let m = RleMask { width: 0, height: 0, counts: counts.to_vec() };
    s.serialize_str(&m.encode_counts())
}

fn de_counts<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
    let s = String::deserialize(d)?;
    parse_counts(&s).map_err(serde::de::Error::custom)
}
