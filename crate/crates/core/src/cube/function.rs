use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest input dimension accepted for truth tables.
pub const MAX_DIM: usize = 24;

/// How a stored bit is read as a real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueConvention {
    /// The bit itself, `0` or `1`.
    ZeroOne,
    /// `1 - 2 * bit`, so bit `0` reads as `+1`.
    PlusMinus,
}

impl ValueConvention {
    #[inline]
    pub fn read(self, bit: bool) -> f64 {
        match (self, bit) {
            (Self::ZeroOne, b) => b as u8 as f64,
            (Self::PlusMinus, false) => 1.0,
            (Self::PlusMinus, true) => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZeroOne => "zero_one",
            Self::PlusMinus => "plus_minus",
        }
    }
}

impl FromStr for ValueConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_one" => Ok(Self::ZeroOne),
            "plus_minus" => Ok(Self::PlusMinus),
            other => Err(Error::Parse(format!("unknown value convention {other:?}"))),
        }
    }
}

/// Bit mask selecting coordinate `i` (1-based) inside a point index.
///
/// Index `j` encodes `x` by bits `b_1 .. b_n` with `b_1` the most significant
/// and `x_i = +1` iff `b_i = 0`. Subset masks for Fourier coefficients use the
/// same layout.
#[inline]
pub fn coordinate_mask(n: usize, i: usize) -> usize {
    debug_assert!(i >= 1 && i <= n);
    1 << (n - i)
}

/// `x_i` in `{+1, -1}` for point index `j`.
#[inline]
pub fn coordinate(n: usize, j: usize, i: usize) -> f64 {
    if j & coordinate_mask(n, i) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Boolean function on `{±1}^n`, stored as a packed truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    n: usize,
    words: Vec<u64>,
    convention: ValueConvention,
}

impl BooleanFunction {
    /// All-zero table.
    pub fn zeros(n: usize, convention: ValueConvention) -> Result<Self> {
        check_dim(n, MAX_DIM)?;
        let len = 1usize << n;
        Ok(Self {
            n,
            words: vec![0; len.div_ceil(64)],
            convention,
        })
    }

    pub fn from_fn<F: FnMut(usize) -> bool>(
        n: usize,
        convention: ValueConvention,
        mut f: F,
    ) -> Result<Self> {
        let mut out = Self::zeros(n, convention)?;
        for j in 0..out.len() {
            if f(j) {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    /// Uniformly random table.
    pub fn random<R: rand::Rng>(
        n: usize,
        convention: ValueConvention,
        rng: &mut R,
    ) -> Result<Self> {
        Self::from_fn(n, convention, |_| rng.random_bool(0.5))
    }

    pub fn from_bits(n: usize, convention: ValueConvention, bits: &[bool]) -> Result<Self> {
        if bits.len() != 1usize << n.min(63) {
            return Err(Error::Invalid(format!(
                "table has {} entries, expected 2^{n}",
                bits.len()
            )));
        }
        Self::from_fn(n, convention, |j| bits[j])
    }

    /// Table packed into an integer: bit `j` of `table` is `f(j)`. Requires
    /// `n <= 6`.
    pub fn from_index(n: usize, convention: ValueConvention, table: u64) -> Result<Self> {
        check_dim(n, 6)?;
        let len = 1usize << n;
        if len < 64 && table >> len != 0 {
            return Err(Error::Range(format!(
                "table index {table} needs more than 2^{n} bits"
            )));
        }
        Ok(Self {
            n,
            words: vec![table],
            convention,
        })
    }

    /// Inverse of [`from_index`](Self::from_index).
    pub fn table_index(&self) -> Option<u64> {
        (self.n <= 6).then(|| self.words[0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn convention(&self) -> ValueConvention {
        self.convention
    }

    pub fn with_convention(mut self, convention: ValueConvention) -> Self {
        self.convention = convention;
        self
    }

    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        (self.words[j >> 6] >> (j & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        let mask = 1u64 << (j & 63);
        if value {
            self.words[j >> 6] |= mask;
        } else {
            self.words[j >> 6] &= !mask;
        }
    }

    /// Value at `j` under the declared convention.
    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        self.convention.read(self.bit(j))
    }

    pub fn values(&self) -> Vec<f64> {
        self.values_as(self.convention)
    }

    pub fn values_as(&self, convention: ValueConvention) -> Vec<f64> {
        (0..self.len())
            .map(|j| convention.read(self.bit(j)))
            .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of points whose bit is set.
    pub fn density(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        if self.len() < 64 {
            out.words[0] &= (1u64 << self.len()) - 1;
        }
        out
    }

    /// Text form: a header line `n=<n> conv=<convention>` then the table as
    /// `0`/`1` characters in ascending index order.
    pub fn to_text(&self) -> String {
        let mut s = format!("n={} conv={}\n", self.n, self.convention.as_str());
        s.extend((0..self.len()).map(|j| if self.bit(j) { '1' } else { '0' }));
        s.push('\n');
        s
    }

    /// Hex short form: `0x` followed by nibbles in ascending index order;
    /// bit `b` of nibble `k` is entry `4k + b`.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len().div_ceil(4);
        let mut s = String::from("0x");
        for k in 0..nibbles {
            let mut nib = 0u32;
            for b in 0..4 {
                let j = 4 * k + b;
                if j < self.len() && self.bit(j) {
                    nib |= 1 << b;
                }
            }
            s.push(char::from_digit(nib, 16).unwrap());
        }
        s
    }

    /// Parses the text form written by [`to_text`](Self::to_text); the table
    /// line may instead use the hex short form.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let mut n = None;
        let mut conv = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => {
                    n = Some(
                        v.parse::<usize>()
                            .map_err(|e| Error::Parse(format!("bad n {v:?}: {e}")))?,
                    )
                }
                Some(("conv", v)) => conv = Some(v.parse::<ValueConvention>()?),
                _ => return Err(Error::Parse(format!("unexpected header field {field:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("header lacks n=".into()))?;
        let conv = conv.ok_or_else(|| Error::Parse("header lacks conv=".into()))?;
        check_dim(n, MAX_DIM)?;
        let body = lines
            .next()
            .ok_or_else(|| Error::Parse("missing table line".into()))?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after table line".into()));
        }
        let len = 1usize << n;
        let mut f = Self::zeros(n, conv)?;
        if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
            if hex.len() != len.div_ceil(4) {
                return Err(Error::Parse(format!(
                    "hex table has {} nibbles, expected {}",
                    hex.len(),
                    len.div_ceil(4)
                )));
            }
            for (k, c) in hex.chars().enumerate() {
                let nib = c
                    .to_digit(16)
                    .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?;
                for b in 0..4 {
                    let j = 4 * k + b;
                    if nib >> b & 1 == 1 {
                        if j >= len {
                            return Err(Error::Parse("hex table sets bits past 2^n".into()));
                        }
                        f.set(j, true);
                    }
                }
            }
        } else {
            if body.len() != len {
                return Err(Error::Parse(format!(
                    "table has {} characters, expected {len}",
                    body.len()
                )));
            }
            for (j, c) in body.bytes().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => f.set(j, true),
                    other => {
                        return Err(Error::Parse(format!(
                            "unexpected character {:?} in table",
                            other as char
                        )))
                    }
                }
            }
        }
        Ok(f)
    }
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BooleanFunction(n={}, {}, {})",
            self.n,
            self.convention.as_str(),
            self.to_hex()
        )
    }
}

/// Function `{±1}^n -> {0, 1}^k`, one output word per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiOutputFunction {
    n: usize,
    k: usize,
    table: Vec<u32>,
}

impl MultiOutputFunction {
    pub fn new(n: usize, k: usize, table: Vec<u32>) -> Result<Self> {
        check_dim(n, MAX_DIM)?;
        if k == 0 || k > 24 {
            return Err(Error::Range(format!("output width {k} not in 1..=24")));
        }
        if table.len() != 1 << n {
            return Err(Error::Invalid(format!(
                "table has {} entries, expected 2^{n}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&v| v >> k != 0) {
            return Err(Error::Range(format!(
                "output {bad} does not fit in {k} bits"
            )));
        }
        Ok(Self { n, k, table })
    }

    pub fn from_boolean(f: &BooleanFunction) -> Self {
        Self {
            n: f.n(),
            k: 1,
            table: (0..f.len()).map(|j| f.bit(j) as u32).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_encoding() {
        // n = 3, j = 0b100: b_1 = 1, so x_1 = -1, x_2 = x_3 = +1.
        assert_eq!(coordinate(3, 0b100, 1), -1.0);
        assert_eq!(coordinate(3, 0b100, 2), 1.0);
        assert_eq!(coordinate(3, 0b001, 3), -1.0);
    }

    #[test]
    fn text_format() {
        let f = BooleanFunction::parse_text("n=2 conv=zero_one\n0111\n").unwrap();
        assert_eq!(f.count_ones(), 3);
        assert!(!f.bit(0) && f.bit(3));
        assert_eq!(f.to_text(), "n=2 conv=zero_one\n0111\n");
        assert_eq!(f.to_hex(), "0xe");
        let g = BooleanFunction::parse_text("n=2 conv=zero_one\n0xe").unwrap();
        assert_eq!(f, g);
        let h = BooleanFunction::parse_text("n=3 conv=plus_minus\n0x1f\n").unwrap();
        assert_eq!(h.convention(), ValueConvention::PlusMinus);
        assert_eq!(h.to_text().lines().nth(1), Some("10001111"));
    }

    #[test]
    fn text_format_errors() {
        assert!(BooleanFunction::parse_text("").is_err());
        assert!(BooleanFunction::parse_text("n=2 conv=zero_one\n011\n").is_err());
        assert!(BooleanFunction::parse_text("n=2 conv=zero_one\n0121\n").is_err());
        assert!(BooleanFunction::parse_text("n=2 conv=other\n0111\n").is_err());
        assert!(BooleanFunction::parse_text("n=1 conv=zero_one\n0x4\n").is_err());
        assert!(matches!(
            BooleanFunction::parse_text("n=25 conv=zero_one\n0\n"),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn complement_masks_short_tables() {
        let f = BooleanFunction::from_index(2, ValueConvention::ZeroOne, 0b0001).unwrap();
        assert_eq!(f.complement().table_index(), Some(0b1110));
    }

    proptest! {
        #[test]
        fn text_and_hex_roundtrip(n in 0usize..9, seed in any::<u64>()) {
            let f = BooleanFunction::from_fn(n, ValueConvention::PlusMinus, |j| {
                (seed.rotate_left(j as u32 % 64) ^ (j as u64).wrapping_mul(0x9e37_79b9)) & 1 == 1
            }).unwrap();
            prop_assert_eq!(&BooleanFunction::parse_text(&f.to_text()).unwrap(), &f);
            let hex = format!("n={} conv=plus_minus\n{}\n", n, f.to_hex());
            prop_assert_eq!(&BooleanFunction::parse_text(&hex).unwrap(), &f);
        }
    }
}
