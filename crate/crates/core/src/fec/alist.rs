//! The plain-text alist format (MacKay): dimensions, maximum degrees, the
//! degree lists, then one line of 1-based indices per column and per row.
//! Zero padding on the index lines is accepted.

use std::fmt::Write;

use super::ParityCheck;
use crate::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as integers, with its 1-based line number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        for (idx, line) in self.inner.by_ref() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Alist {
                        line: line_no,
                        msg: format!("expected a non-negative integer in {what}, found {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((line_no, nums));
        }
        Err(Error::Alist {
            line: 0,
            msg: format!("unexpected end of input while reading {what}"),
        })
    }

    fn exact(&mut self, what: &str, count: usize) -> Result<(usize, Vec<usize>)> {
        let (line, nums) = self.next_numbers(what)?;
        if nums.len() != count {
            return Err(Error::Alist {
                line,
                msg: format!("{what}: expected {count} values, found {}", nums.len()),
            });
        }
        Ok((line, nums))
    }
}

pub fn load_alist(text: &str) -> Result<ParityCheck> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, dims) = lines.exact("dimensions", 2)?;
    let (n, m) = (dims[0], dims[1]);
    let (_, max_deg) = lines.exact("maximum degrees", 2)?;
    let (col_line, col_deg) = lines.exact("column degrees", n)?;
    let (row_line, row_deg) = lines.exact("row degrees", m)?;
    for (line, degs, max) in [(col_line, &col_deg, max_deg[0]), (row_line, &row_deg, max_deg[1])] {
        if degs.iter().any(|&d| d > max) {
            return Err(Error::Alist {
                line,
                msg: format!("degree exceeds the declared maximum {max}"),
            });
        }
    }

    let mut read_lists = |count: usize, degs: &[usize], bound: usize, what: &str| -> Result<Vec<Vec<usize>>> {
        (0..count)
            .map(|i| {
                let (line, nums) = lines.next_numbers(what)?;
                let idx: Vec<usize> = nums.into_iter().filter(|&v| v != 0).collect();
                if idx.len() != degs[i] {
                    return Err(Error::Alist {
                        line,
                        msg: format!("{what} {}: degree {} but {} indices", i + 1, degs[i], idx.len()),
                    });
                }
                if let Some(&bad) = idx.iter().find(|&&v| v > bound) {
                    return Err(Error::Alist {
                        line,
                        msg: format!("{what} {}: index {bad} out of range 1..={bound}", i + 1),
                    });
                }
                Ok(idx.into_iter().map(|v| v - 1).collect())
            })
            .collect()
    };
    let cols = read_lists(n, &col_deg, m, "column")?;
    let rows = read_lists(m, &row_deg, n, "row")?;

    let mut from_cols = vec![Vec::new(); m];
    for (v, cs) in cols.iter().enumerate() {
        for &c in cs {
            from_cols[c].push(v);
        }
    }
    for (c, (a, b)) in from_cols.iter_mut().zip(&rows).enumerate() {
        let mut b = b.clone();
        a.sort_unstable();
        b.sort_unstable();
        if *a != b {
            return Err(Error::Alist {
                line: 0,
                msg: format!("row {} disagrees with the column lists", c + 1),
            });
        }
    }
    ParityCheck::from_rows(n, rows)
}

/// Serializes with zero padding to the maximum degree.
pub fn to_alist(pc: &ParityCheck) -> String {
    let col_deg: Vec<usize> = pc.cols().iter().map(Vec::len).collect();
    let row_deg: Vec<usize> = pc.rows().iter().map(Vec::len).collect();
    let max_col = col_deg.iter().copied().max().unwrap_or(0);
    let max_row = row_deg.iter().copied().max().unwrap_or(0);
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let padded = |list: &[usize], width: usize| {
        let mut v: Vec<usize> = list.iter().map(|x| x + 1).collect();
        v.resize(width, 0);
        join(&v)
    };
    let mut out = String::new();
    writeln!(out, "{} {}", pc.n(), pc.m()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&col_deg)).unwrap();
    writeln!(out, "{}", join(&row_deg)).unwrap();
    for col in pc.cols() {
        writeln!(out, "{}", padded(col, max_col)).unwrap();
    }
    for row in pc.rows() {
        writeln!(out, "{}", padded(row, max_row)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy;
    use super::*;

    const TOY: &str = "4 2\n2 3\n1 2 1 2\n3 3\n1 0\n1 2\n2 0\n1 2\n1 2 4\n2 3 4\n";

    #[test]
    fn parses_toy_alist() {
        let pc = load_alist(TOY).unwrap();
        assert_eq!(pc, toy());
        assert_eq!(pc.rows().iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3]);
    }

    #[test]
    fn round_trip() {
        let pc = toy();
        assert_eq!(load_alist(&to_alist(&pc)).unwrap(), pc);
        let big = super::super::bundled_code().unwrap();
        assert_eq!(load_alist(&to_alist(&big)).unwrap(), big);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = TOY.replace("2 3 4", "2 x 4");
        match load_alist(&bad) {
            Err(Error::Alist { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
        let short = TOY.replace("1 2 4\n", "1 2\n");
        assert!(matches!(load_alist(&short), Err(Error::Alist { line: 9, .. })));
        let inconsistent = TOY.replace("1 2 4", "1 3 4");
        assert!(load_alist(&inconsistent).is_err());
        assert!(load_alist("4 2\n2 3\n").is_err());
    }
}
