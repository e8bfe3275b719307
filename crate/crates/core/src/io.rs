//! Plain-text matrix files.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! CART 2
//! 0.7071067811865475,0 0.7071067811865475,0
//! 0.7071067811865475,0 -0.7071067811865475,0
//! ```
//!
//! `CART n` rows hold `re,im` tokens; `PHASE n` rows hold angles `θ`, the
//! entry being `(1/√n)·e^{iθ}`. Numbers are written in the shortest form
//! that parses back to the same float, so write → read → write is
//! byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Cart,
    Phase,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload<T> {
    Cart(CMatrix<T>),
    Phase(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile<T> {
    n: usize,
    payload: Payload<T>,
}

impl<T: Real> MatrixFile<T> {
    /// PHASE keeps only the entry arguments, so it is only faithful for
    /// matrices whose entries all have modulus `1/√n`.
    pub fn from_matrix(m: &CMatrix<T>, format: MatrixFormat) -> Result<Self> {
        let n = m.require_square()?;
        let payload = match format {
            MatrixFormat::Cart => Payload::Cart(m.clone()),
            MatrixFormat::Phase => Payload::Phase(m.phases()),
        };
        Ok(Self { n, payload })
    }

    pub fn from_phases(n: usize, phases: Vec<T>) -> Result<Self> {
        if phases.len() != n * n {
            return Err(Error::Parse(format!("expected {} phases, got {}", n * n, phases.len())));
        }
        Ok(Self { n, payload: Payload::Phase(phases) })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn format(&self) -> MatrixFormat {
        match self.payload {
            Payload::Cart(_) => MatrixFormat::Cart,
            Payload::Phase(_) => MatrixFormat::Phase,
        }
    }

    pub fn matrix(&self) -> CMatrix<T> {
        match &self.payload {
            Payload::Cart(m) => m.clone(),
            Payload::Phase(p) => CMatrix::from_phases(self.n, p).expect("length checked on construction"),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let mut head = header.split_whitespace();
        let format = match head.next() {
            Some("CART") => MatrixFormat::Cart,
            Some("PHASE") => MatrixFormat::Phase,
            other => return Err(Error::Parse(format!("line {hline}: expected CART or PHASE, got {other:?}"))),
        };
        let n: usize = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("line {hline}: missing or invalid order")))?;
        if head.next().is_some() {
            return Err(Error::Parse(format!("line {hline}: trailing tokens after the order")));
        }
        if n == 0 {
            return Err(Error::EmptyOrder);
        }

        let mut cart = Vec::with_capacity(n * n);
        let mut phases = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (lno, line) in lines {
            if rows == n {
                return Err(Error::Parse(format!("line {lno}: more than {n} rows")));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != n {
                return Err(Error::Parse(format!("line {lno}: expected {n} entries, got {}", tokens.len())));
            }
            for tok in tokens {
                match format {
                    MatrixFormat::Cart => {
                        let (re, im) = tok
                            .split_once(',')
                            .ok_or_else(|| Error::Parse(format!("line {lno}: `{tok}` is not re,im")))?;
                        cart.push(Complex::new(number(re, lno)?, number(im, lno)?));
                    }
                    MatrixFormat::Phase => phases.push(number(tok, lno)?),
                }
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse(format!("expected {n} rows, got {rows}")));
        }
        let payload = match format {
            MatrixFormat::Cart => Payload::Cart(CMatrix::from_vec(n, n, cart)?),
            MatrixFormat::Phase => Payload::Phase(phases),
        };
        Ok(Self { n, payload })
    }

    pub fn render(&self) -> String {
        let n = self.n;
        let mut out = String::new();
        match &self.payload {
            Payload::Cart(m) => {
                let _ = writeln!(out, "CART {n}");
                for i in 0..n {
                    let row: Vec<String> = m.row(i).iter().map(|z| format!("{},{}", z.re, z.im)).collect();
                    let _ = writeln!(out, "{}", row.join(" "));
                }
            }
            Payload::Phase(p) => {
                let _ = writeln!(out, "PHASE {n}");
                for row in p.chunks(n) {
                    let row: Vec<String> = row.iter().map(|t| t.to_string()).collect();
                    let _ = writeln!(out, "{}", row.join(" "));
                }
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn number<T: Real>(s: &str, lno: usize) -> Result<T> {
    let x: T = s.parse().map_err(|_| Error::Parse(format!("line {lno}: `{s}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("line {lno}: non-finite value `{s}`")));
    }
    Ok(x)
}
