//! Plain-text pool files: one strand per line, `0`/`1`/`?` for binary symbols
//! or `A`/`C`/`G`/`T` for nucleotides. Blank lines and lines starting with `#`
//! are skipped.

use std::io::{BufRead, Write};

use crate::channels::{Base, ReceivedStrand, Symbol};
use crate::error::{Error, Result};
use crate::weave::{BitMatrix, Pool};

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
        Err(e) => Some(Err(e.into())),
    })
}

fn parse_symbols(line: usize, text: &str) -> Result<Vec<Symbol>> {
    text.chars()
        .map(|c| {
            Symbol::from_char(c).ok_or_else(|| Error::Parse {
                line,
                message: format!("`{c}` is not 0, 1 or ?"),
            })
        })
        .collect()
}

pub fn write_pool<W: Write>(out: &mut W, pool: &Pool) -> Result<()> {
    for strand in pool.strands().iter_rows() {
        let line: String = strand.iter().map(|&b| Symbol::from_bit(b).to_char()).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a transmitted pool; every strand must be erasure-free and equally long.
pub fn read_pool<R: BufRead>(reader: R) -> Result<Pool> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for entry in content_lines(reader) {
        let (line, text) = entry?;
        let bits = parse_symbols(line, &text)?
            .into_iter()
            .map(|s| {
                s.bit().ok_or(Error::Parse {
                    line,
                    message: "erasure in a transmitted pool".into(),
                })
            })
            .collect::<Result<Vec<u8>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != bits.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("strand has {} symbols, expected {}", bits.len(), first.len()),
                });
            }
        }
        rows.push(bits);
    }
    Ok(Pool::from_strands(BitMatrix::from_rows(&rows)?))
}

pub fn write_received<W: Write>(out: &mut W, strands: &[ReceivedStrand]) -> Result<()> {
    for s in strands {
        let line: String = s.raw().iter().map(|x| x.to_char()).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads channel outputs of any length; `original_length` is the transmitted
/// strand length used for erasure padding.
pub fn read_received<R: BufRead>(reader: R, original_length: usize) -> Result<Vec<ReceivedStrand>> {
    content_lines(reader)
        .map(|entry| {
            let (line, text) = entry?;
            Ok(ReceivedStrand::new(parse_symbols(line, &text)?, original_length))
        })
        .collect()
}

pub fn write_bases<W: Write>(out: &mut W, strands: &[Vec<Base>]) -> Result<()> {
    for s in strands {
        let line: String = s.iter().map(|b| b.to_char()).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_bases<R: BufRead>(reader: R) -> Result<Vec<Vec<Base>>> {
    content_lines(reader)
        .map(|entry| {
            let (line, text) = entry?;
            text.chars()
                .map(|c| {
                    Base::from_char(c).ok_or_else(|| Error::Parse {
                        line,
                        message: format!("`{c}` is not a nucleotide"),
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_roundtrip() {
        let m = BitMatrix::from_rows(&[vec![0u8, 1, 1], vec![1, 0, 0]]).unwrap();
        let pool = Pool::from_strands(m);
        let mut buf = Vec::new();
        write_pool(&mut buf, &pool).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "011\n100\n");
        let back = read_pool(&buf[..]).unwrap();
        assert_eq!(back.strands(), pool.strands());
    }

    #[test]
    fn received_keeps_erasures_and_lengths() {
        let text = "# header\n01?\n\n0110\n";
        let strands = read_received(text.as_bytes(), 3).unwrap();
        assert_eq!(strands.len(), 2);
        assert_eq!(strands[0].get(2), Symbol::Erasure);
        assert_eq!(strands[1].len(), 4);
        let mut buf = Vec::new();
        write_received(&mut buf, &strands).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "01?\n0110\n");
    }

    #[test]
    fn malformed_lines_report_position() {
        match read_pool("01\n0x\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_pool("01\n011\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_pool("0?\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_bases("ACGU\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn bases_roundtrip() {
        let strands = vec![vec![Base::A, Base::C, Base::G, Base::T], vec![Base::T]];
        let mut buf = Vec::new();
        write_bases(&mut buf, &strands).unwrap();
        assert_eq!(read_bases(&buf[..]).unwrap(), strands);
    }
}
