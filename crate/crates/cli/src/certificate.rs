//! Line-oriented certificate format.
//!
//! ```text
//! qhemi-certificate 1
//! field 3 1 0,1
//! rank 2
//! gram 1 0 0 0 0
//! ...                       (one `gram` line per row)
//! maximals 40
//! degree 2
//! generator <matrix>        (one per generator of B)
//! members 20
//! 0 <matrix>                (id and RREF basis, one line per member)
//! ...
//! mask 0
//! ```
//!
//! Field elements are base-p digits joined by `,`; matrix entries are
//! separated by spaces and rows by `;`.

use std::fmt::Write as _;

use qhemi::gf::{Field, FieldSpec};
use qhemi::hemi::HemisystemCertificate;
use qhemi::linform::Matrix;
use qhemi::quadric::QuadricModel;
use thiserror::Error;

pub const MAGIC: &str = "qhemi-certificate 1";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

/// A certificate as written on disk; nothing in it is trusted until verified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub field: FieldSpec,
    pub d: usize,
    pub gram: Matrix,
    pub total_maximals: usize,
    pub degree: u64,
    pub generators: Vec<Matrix>,
    /// Claimed maximal id and RREF basis of every member.
    pub members: Vec<(u32, Matrix)>,
    pub mask: String,
}

impl Certificate {
    pub fn from_hemisystem(h: &HemisystemCertificate, quadric: &QuadricModel) -> Certificate {
        Certificate {
            field: h.field.clone(),
            d: h.d,
            gram: h.gram.clone(),
            total_maximals: h.total_maximals,
            degree: h.degree,
            generators: h.generators.clone(),
            members: h.members.iter().map(|&id| (id, quadric.maximals()[id as usize].basis().clone())).collect(),
            mask: h.mask.to_hex(),
        }
    }

    pub fn to_text(&self, f: &Field) -> String {
        let mut out = String::new();
        let modulus: Vec<String> = self.field.modulus.iter().map(u32::to_string).collect();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "field {} {} {}", self.field.p, self.field.k, modulus.join(",")).unwrap();
        writeln!(out, "rank {}", self.d).unwrap();
        for i in 0..self.gram.rows() {
            let row = Matrix::from_rows(self.gram.cols(), &[self.gram.row(i).to_vec()]);
            writeln!(out, "gram {}", row.format(f)).unwrap();
        }
        writeln!(out, "maximals {}", self.total_maximals).unwrap();
        writeln!(out, "degree {}", self.degree).unwrap();
        for g in &self.generators {
            writeln!(out, "generator {}", g.format(f)).unwrap();
        }
        writeln!(out, "members {}", self.members.len()).unwrap();
        for (id, m) in &self.members {
            writeln!(out, "{id} {}", m.format(f)).unwrap();
        }
        writeln!(out, "mask {}", self.mask).unwrap();
        out
    }

    /// Parses a certificate and the field named in its header.
    pub fn parse(text: &str) -> Result<(Certificate, Field), ParseError> {
        let mut lines = Lines { inner: text.lines().enumerate().peekable() };

        let (n, magic) = lines.next_line()?;
        if magic.trim() != MAGIC {
            return Err(ParseError { line: n, msg: format!("expected {MAGIC:?}") });
        }

        let (n, rest) = lines.keyword("field")?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        let [p, k, modulus] = parts[..] else {
            return Err(ParseError { line: n, msg: "expected `field <p> <k> <modulus>`".into() });
        };
        let p: u32 = number(n, p)?;
        let k: u32 = number(n, k)?;
        let modulus: Vec<u32> = modulus.split(',').map(|c| number(n, c)).collect::<Result<_, _>>()?;
        let field = Field::new(p, k, Some(&modulus)).map_err(|e| ParseError { line: n, msg: e.to_string() })?;

        let (n, rest) = lines.keyword("rank")?;
        let d: usize = number(n, rest)?;
        if !(2..=16).contains(&d) {
            return Err(ParseError { line: n, msg: format!("rank {d} out of range") });
        }
        let dim = 2 * d + 1;

        let mut rows = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (n, rest) = lines.keyword("gram")?;
            let row = matrix(&field, n, rest, dim)?;
            if row.rows() != 1 {
                return Err(ParseError { line: n, msg: "a gram line holds exactly one row".into() });
            }
            rows.push(row.row(0).to_vec());
        }
        let gram = Matrix::from_rows(dim, &rows);

        let (n, rest) = lines.keyword("maximals")?;
        let total_maximals = number(n, rest)?;
        let (n, rest) = lines.keyword("degree")?;
        let degree = number(n, rest)?;

        let mut generators = Vec::new();
        while lines.peek_keyword() == Some("generator") {
            let (n, rest) = lines.keyword("generator")?;
            let g = matrix(&field, n, rest, dim)?;
            if g.rows() != dim {
                return Err(ParseError { line: n, msg: format!("generator has {} rows, expected {dim}", g.rows()) });
            }
            generators.push(g);
        }

        let (n, rest) = lines.keyword("members")?;
        let count: usize = number(n, rest)?;
        let mut members = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = lines.next_line()?;
            let (id, body) =
                line.trim().split_once(' ').ok_or(ParseError { line: n, msg: "expected `<id> <matrix>`".into() })?;
            let m = matrix(&field, n, body, dim)?;
            if m.rows() != d {
                return Err(ParseError { line: n, msg: format!("member has {} rows, expected {d}", m.rows()) });
            }
            members.push((number(n, id)?, m));
        }

        let (_, rest) = lines.keyword("mask")?;
        let mask = rest.trim().to_string();
        if let Some((n, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(ParseError { line: n + 1, msg: "trailing content".into() });
        }
        Ok((
            Certificate { field: field.spec().clone(), d, gram, total_maximals, degree, generators, members, mask },
            field,
        ))
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), ParseError> {
        loop {
            match self.inner.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => return Ok((i + 1, l)),
                None => return Err(ParseError { line: 0, msg: "unexpected end of file".into() }),
            }
        }
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        while let Some((_, l)) = self.inner.peek() {
            if l.trim().is_empty() {
                self.inner.next();
                continue;
            }
            return l.split_whitespace().next();
        }
        None
    }

    fn keyword(&mut self, kw: &str) -> Result<(usize, &'a str), ParseError> {
        let (n, line) = self.next_line()?;
        match line.trim_start().split_once(char::is_whitespace) {
            Some((k, rest)) if k == kw => Ok((n, rest)),
            _ => Err(ParseError { line: n, msg: format!("expected `{kw} ...`") }),
        }
    }
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, ParseError> {
    s.trim().parse().map_err(|_| ParseError { line, msg: format!("bad number {:?}", s.trim()) })
}

fn matrix(f: &Field, line: usize, s: &str, cols: usize) -> Result<Matrix, ParseError> {
    Matrix::parse(f, s, cols).map_err(|e| ParseError { line, msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qhemi::hemi::{Construction, Mask};
    use qhemi::Exec;

    #[test]
    fn text_roundtrip_prime_and_extension() {
        for (p, k) in [(3, 1), (3, 2)] {
            let f = Field::new(p, k, None).unwrap();
            let c = Construction::new(&f, 2, Exec::Sequential).unwrap();
            let h = c.assemble(&Mask::zeros(c.ab_report().m)).unwrap();
            let cert = Certificate::from_hemisystem(&h, c.quadric());
            let text = cert.to_text(&f);
            let (back, g) = Certificate::parse(&text).unwrap();
            assert_eq!(g, f);
            assert_eq!(back, cert);
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let f = Field::prime(3).unwrap();
        let c = Construction::new(&f, 2, Exec::Sequential).unwrap();
        let h = c.assemble(&Mask::zeros(c.ab_report().m)).unwrap();
        let text = Certificate::from_hemisystem(&h, c.quadric()).to_text(&f);

        let bad = text.replacen("rank 2", "rank two", 1);
        assert_eq!(Certificate::parse(&bad).unwrap_err().line, 3);
        let bad = text.replacen("field 3 1 0,1", "field 3 1 0,2", 1);
        assert_eq!(Certificate::parse(&bad).unwrap_err().line, 2);
        assert_eq!(Certificate::parse("nonsense").unwrap_err().line, 1);
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(Certificate::parse(&truncated).is_err());
        assert!(Certificate::parse(&format!("{text}extra\n")).is_err());
    }
}
