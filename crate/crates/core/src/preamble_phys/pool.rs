use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// A common pool of unit-norm preamble sequences of length `t_p`.
///
/// Sequences are stored column-major: sequence `l` occupies
/// `data[l * t_p .. (l + 1) * t_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreamblePool {
    t_p: usize,
    data: Vec<C64>,
}

impl PreamblePool {
    /// Builds a pool from explicit sequences. Each must have length `t_p`.
    pub fn from_sequences(t_p: usize, sequences: &[Vec<C64>]) -> Result<Self> {
        if t_p == 0 {
            return Err(Error::invalid("t_p", "sequence length must be positive"));
        }
        if sequences.is_empty() {
            return Err(Error::invalid("L_pool", "pool must hold at least one preamble"));
        }
        let mut data = Vec::with_capacity(t_p * sequences.len());
        for seq in sequences {
            if seq.len() != t_p {
                return Err(Error::LengthMismatch {
                    expected: t_p,
                    actual: seq.len(),
                });
            }
            data.extend_from_slice(seq);
        }
        Ok(Self { t_p, data })
    }

    pub fn sequence_len(&self) -> usize {
        self.t_p
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.t_p
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sequence(&self, index: usize) -> &[C64] {
        &self.data[index * self.t_p..(index + 1) * self.t_p]
    }

    /// First `len` sequences of the pool.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::invalid(
                "L_pool",
                format!("cannot take {len} of {} sequences", self.len()),
            ));
        }
        Ok(Self {
            t_p: self.t_p,
            data: self.data[..len * self.t_p].to_vec(),
        })
    }

    /// `⟨c_index, y⟩ = c_indexᴴ y`.
    pub fn correlate(&self, index: usize, y: &[C64]) -> C64 {
        self.sequence(index).iter().zip(y).map(|(c, v)| c.conj() * v).sum()
    }

    /// Largest `|⟨c_i, c_j⟩|` over distinct pairs.
    pub fn max_cross_correlation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                worst = worst.max(self.correlate(i, self.sequence(j)).norm());
            }
        }
        worst
    }

    /// Writes the pool as text: a `t_p L_pool` header line, then `t_p` rows
    /// of the `t_p × L_pool` matrix, each row holding `L_pool` `re im` pairs.
    /// Values use shortest round-trip formatting, so import is exact.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.t_p, self.len())?;
        let mut line = String::new();
        for n in 0..self.t_p {
            line.clear();
            for l in 0..self.len() {
                let v = self.data[l * self.t_p + n];
                if l > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{} {}", v.re, v.im);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::PoolFormat("unexpected end of input".into()))?
                .map_err(|e| Error::PoolFormat(e.to_string()))
        };
        let header = next_line()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::PoolFormat(format!("bad header {header:?}")))
            })
            .collect::<Result<_>>()?;
        let [t_p, len] = dims[..] else {
            return Err(Error::PoolFormat(format!("bad header {header:?}")));
        };
        if t_p == 0 || len == 0 {
            return Err(Error::PoolFormat("empty pool".into()));
        }
        let mut data = vec![C64::new(0.0, 0.0); t_p * len];
        for n in 0..t_p {
            let row = next_line()?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::PoolFormat(format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 2 * len {
                return Err(Error::PoolFormat(format!(
                    "row {n}: expected {} values, got {}",
                    2 * len,
                    vals.len()
                )));
            }
            for l in 0..len {
                data[l * t_p + n] = C64::new(vals[2 * l], vals[2 * l + 1]);
            }
        }
        Ok(Self { t_p, data })
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// The `t_p²` Alltop sequences of prime length `t_p >= 5`.
///
/// Sequence `l = shift * t_p + freq` has entries
/// `exp(2πi ((n - shift)³ + freq·n) / t_p) / √t_p`, i.e. time shifts and
/// modulations of the cubic-phase seed. Distinct sequences have
/// cross-correlation magnitude at most `1/√t_p`.
pub fn gen_alltop(t_p: usize) -> Result<PreamblePool> {
    if t_p < 5 || !is_prime(t_p) {
        return Err(Error::invalid("t_p", format!("Alltop needs a prime >= 5, got {t_p}")));
    }
    let p = t_p as u64;
    let scale = 1.0 / (t_p as f64).sqrt();
    let mut data = Vec::with_capacity(t_p * t_p * t_p);
    for shift in 0..p {
        for freq in 0..p {
            for n in 0..p {
                let d = (n + p - shift) % p;
                let phase = (d * d % p * d + freq * n) % p;
                let angle = std::f64::consts::TAU * phase as f64 / t_p as f64;
                data.push(C64::from_polar(scale, angle));
            }
        }
    }
    Ok(PreamblePool { t_p, data })
}
