//! Built-in corpus of mutual exclusion algorithms with their expected verdict
//! rows.
//!
//! Sources live in `zoo/*.alg` and are compiled into the library. The two
//! Bar-David entries are produced by [`bar_david`] from the algorithm they
//! wrap.

use std::borrow::Cow;

use crate::check::Letter;
use crate::error::Error;
use crate::lang::{self, ast::Program};
use crate::model::MemoryModel;

/// One corpus entry.
#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    /// Row label as printed in the results table.
    pub title: &'static str,
    /// Where the algorithm was first published.
    pub origin: &'static str,
    source: Source,
    pub default_threads: usize,
    /// Expected letters in [`MemoryModel::ALL`] order.
    pub expected: &'static str,
    /// Columns whose expected letter was confirmed only at two threads.
    pub unconfirmed: &'static [usize],
}

#[derive(Clone, Copy, Debug)]
enum Source {
    Text(&'static str),
    BarDavid(&'static str),
}

macro_rules! alg {
    ($f:literal) => {
        include_str!(concat!("../zoo/", $f, ".alg"))
    };
}

const fn entry(name: &'static str, title: &'static str, origin: &'static str, source: Source, n: usize, expected: &'static str) -> Entry {
    Entry { name, title, origin, source, default_threads: n, expected, unconfirmed: &[] }
}

use Source::*;

static ENTRIES: [Entry; 28] = [
    entry("anderson", "Anderson", "Anderson, 1993", Text(alg!("anderson")), 2, "SSSSMM"),
    entry("aravind", "Aravind", "Aravind, 2011 (BLRU)", Text(alg!("aravind")), 3, "SSSMMM"),
    entry("aravind-alt", "Aravind alt.", "Aravind, 2011 (BLRU), stage checked while waiting", Text(alg!("aravind-alt")), 3, "SSSSMM"),
    entry("attiya-welch", "Attiya-Welch orig.", "Attiya and Welch, 2004", Text(alg!("attiya-welch")), 2, "DSSDMM"),
    entry("attiya-welch-alt", "Attiya-Welch orig. alt.", "Attiya and Welch, 2004, guarded turn write", Text(alg!("attiya-welch-alt")), 2, "SSSDMM"),
    entry("attiya-welch-var", "Attiya-Welch var.", "Attiya and Welch, 2004, goto-free variant", Text(alg!("attiya-welch-var")), 2, "MMSDMM"),
    entry("attiya-welch-var-alt", "Attiya-Welch var. alt.", "Attiya and Welch, 2004, goto-free variant with one turn read", Text(alg!("attiya-welch-var-alt")), 2, "SSSDMM"),
    entry("burns-lynch", "Burns-Lynch", "Burns and Lynch, 1993", Text(alg!("burns-lynch")), 3, "DDDDMM"),
    entry("dekker", "Dekker", "Dijkstra, 1965 (attributed to Dekker)", Text(alg!("dekker")), 2, "MMSDMM"),
    entry("dekker-alt", "Dekker alt.", "Dijkstra, 1965, guarded turn write", Text(alg!("dekker-alt")), 2, "MMSSMM"),
    entry("dekker-rw-safe", "Dekker RW-safe", "Buhr, Dice and Hesselink, 2015", Text(alg!("dekker-rw-safe")), 2, "SSSDMM"),
    entry("dekker-rw-safe-bar-david", "RW-safe + Bar-David", "Buhr, Dice and Hesselink, 2015, wrapped in Bar-David's protocol", BarDavid(alg!("dekker-rw-safe")), 2, "SSSSMM"),
    entry("dijkstra", "Dijkstra", "Dijkstra, 1965", Text(alg!("dijkstra")), 3, "MDDMMM"),
    entry("dijkstra-alt", "Dijkstra alt.", "Dijkstra, 1965, guarded writes to c", Text(alg!("dijkstra-alt")), 3, "MDDDMM"),
    entry("kessels", "Kessels", "Kessels, 1982", Text(alg!("kessels")), 2, "XXSSMM"),
    entry("knuth", "Knuth", "Knuth, 1966", Text(alg!("knuth")), 3, "MSSMMM"),
    entry("lamport-1bit", "Lamport 1-bit", "Lamport, 1986", Text(alg!("lamport-1bit")), 3, "DDDDMM"),
    entry("lamport-1bit-bar-david", "Lamport 1-bit + Bar-David", "Lamport, 1986, wrapped in Bar-David's protocol", BarDavid(alg!("lamport-1bit")), 3, "SSSSMM"),
    entry("lamport-3bit", "Lamport 3-bit", "Lamport, 1986", Text(alg!("lamport-3bit")), 3, "SSSSMM"),
    entry("peterson", "Peterson", "Peterson, 1981", Text(alg!("peterson")), 2, "XXSSMM"),
    entry("peterson-new-int", "Peterson-new int", "Peterson, 1983", Text(alg!("peterson-new-int")), 3, "DSSDMM"),
    entry("peterson-new-bit", "Peterson-new bit", "Peterson, 1983, Boolean version", Text(alg!("peterson-new-bit")), 3, "SSSDMM"),
    entry("szymanski-flag-int", "Szymanski flag int", "Szymanski, 1988", Text(alg!("szymanski-flag-int")), 3, "XXSSMM"),
    entry("szymanski-flag-bit", "Szymanski flag bit", "Szymanski, 1988, Boolean version", Text(alg!("szymanski-flag-bit")), 3, "XXXXXX"),
    entry("szymanski-flag-bit-alt", "Szymanski flag bit alt.", "Szymanski, 1988, Boolean version with reordered exit", Text(alg!("szymanski-flag-bit-alt")), 3, "XXSSMM"),
    entry("szymanski-3bit", "Szymanski 3-bit lin. wait", "Szymanski, 1990", Text(alg!("szymanski-3bit")), 3, "XXXXXX"),
    entry("szymanski-3bit-alt", "Szymanski 3-bit alt.", "Szymanski, 1990, reads swapped in the second scan", Text(alg!("szymanski-3bit-alt")), 2, "SSSSMM"),
    Entry {
        unconfirmed: &[2, 3],
        ..entry("szymanski-4bit-robust", "Szymanski 4-bit robust", "Szymanski, 1990", Text(alg!("szymanski-4bit-robust")), 3, "XXSSMM")
    },
];

impl Entry {
    /// Mini-language source of the entry.
    pub fn source(&self) -> Cow<'static, str> {
        match self.source {
            Text(s) => Cow::Borrowed(s),
            BarDavid(inner) => Cow::Owned(bar_david(inner, self.name).expect("corpus template")),
        }
    }

    pub fn program(&self) -> Result<Program, Error> {
        Ok(lang::parse(&self.source())?)
    }

    pub fn expected_row(&self) -> [Letter; 6] {
        let b = self.expected.as_bytes();
        std::array::from_fn(|i| (b[i] as char).to_string().parse().expect("corpus letter"))
    }

    pub fn expected(&self, m: MemoryModel) -> Letter {
        let col = MemoryModel::ALL.iter().position(|x| *x == m).expect("one of the six models");
        self.expected_row()[col]
    }

    /// Table cell text, with `*` marking letters confirmed only at two threads.
    pub fn cell(&self, col: usize) -> String {
        let l = self.expected_row()[col];
        if self.unconfirmed.contains(&col) {
            format!("{l}*")
        } else {
            l.to_string()
        }
    }

    pub fn two_thread(&self) -> bool {
        self.default_threads == 2
    }
}

/// The whole corpus, in table order.
pub fn list() -> &'static [Entry] {
    &ENTRIES
}

pub fn find(name: &str) -> Result<&'static Entry, Error> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
}

/// Parses a corpus entry and checks that it supports `n` threads.
pub fn builtin(name: &str, n: usize) -> Result<Program, Error> {
    let p = find(name)?.program()?;
    lang::check_threads(&p, n)?;
    Ok(p)
}

/// Wraps the entry and exit protocols of `inner` in Bar-David's protocol.
///
/// The wrapper adds registers `bd_flag` and `bd_turn` and the local
/// `bd_tmp`; `inner` must not use these names. Its body must contain one
/// `critical` statement on a line of its own.
pub fn bar_david(inner: &str, name: &str) -> Result<String, Error> {
    let bad = |m: &str| Error::InvalidInput(format!("cannot apply the Bar-David wrapper: {m}"));
    if inner.contains("bd_") {
        return Err(bad("names starting with bd_ are reserved"));
    }
    let lines: Vec<&str> = inner.lines().collect();
    let head = lines.iter().position(|l| l.trim_start().starts_with("threads")).ok_or_else(|| bad("no threads line"))?;
    let begin = lines.iter().rposition(|l| l.trim() == "begin").ok_or_else(|| bad("no begin"))?;
    let crits: Vec<usize> = (begin..lines.len()).filter(|&i| lines[i].trim() == "critical").collect();
    let [crit] = crits[..] else { return Err(bad("expected exactly one critical line")) };
    let mut out = Vec::new();
    out.push(format!("# {name}: generated by wrapping the entry and exit protocols below."));
    for (i, l) in lines.iter().enumerate() {
        let l = if l.trim_start().starts_with("algorithm ") { format!("algorithm {name}") } else { l.to_string() };
        if i == begin || i == crit {
            out.push(l);
        } else {
            out.push(l);
            if i == head {
                out.extend(["register bd_flag[N]: bool = false", "register bd_turn: thread = any", "local bd_tmp = 0"].map(String::from));
            }
            continue;
        }
        if i == begin {
            out.extend(
                ["  bd_flag[i] := true", "  repeat", "    bd_tmp := bd_turn", "  until bd_tmp == i || bd_flag[bd_tmp] == false"].map(String::from),
            );
        } else {
            out.extend(
                [
                    "  bd_flag[i] := false",
                    "  bd_tmp := bd_turn",
                    "  if bd_flag[bd_tmp] == false then",
                    "    bd_turn := (bd_tmp + 1) mod N",
                    "  end",
                ]
                .map(String::from),
            );
        }
    }
    Ok(out.join("\n") + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registers::Style;

    #[test]
    fn manifest() {
        assert_eq!(list().len(), 28);
        for e in list() {
            assert_eq!(e.expected.len(), 6, "{}", e.name);
            let p = e.program().unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(p.name, e.name);
            lang::check_threads(&p, e.default_threads).unwrap();
            assert!(!e.origin.is_empty());
        }
        let s = find("szymanski-4bit-robust").unwrap();
        assert_eq!(s.cell(2), "S*");
        assert_eq!(s.cell(4), "M");
    }

    #[test]
    fn builtin_checks_threads() {
        assert!(builtin("peterson", 2).is_ok());
        assert!(matches!(builtin("peterson", 3), Err(Error::UnsupportedThreads { .. })));
        assert!(matches!(builtin("bakery", 2), Err(Error::UnknownAlgorithm(_))));
        assert!(find("dekker-rw-safe").unwrap().source().contains("await turn == i || flag[1 - i] == false"));
    }

    #[test]
    fn every_entry_compiles_in_both_styles() {
        for e in list() {
            let p = e.program().unwrap();
            for style in [Style::InstantRead, Style::FullRead] {
                lang::compile(&p, e.default_threads, style).unwrap_or_else(|err| panic!("{} {style:?}: {err}", e.name));
            }
        }
    }

    #[test]
    fn alt_versions_are_small_deltas() {
        let src = |n: &str| find(n).unwrap().source().into_owned();
        let body = |n: &str| -> Vec<String> {
            src(n).lines().filter(|l| !l.starts_with('#') && !l.starts_with("algorithm")).map(String::from).collect()
        };
        let diff = |a: &str, b: &str| {
            let (a, b) = (body(a), body(b));
            a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
        };
        assert_eq!(diff("dijkstra", "dijkstra-alt"), 2);
        assert_eq!(diff("dekker", "dekker-alt"), 1);
        assert_eq!(diff("szymanski-3bit", "szymanski-3bit-alt"), 1);
        assert_eq!(diff("aravind", "aravind-alt"), 1);
        assert_eq!(diff("szymanski-flag-bit", "szymanski-flag-bit-alt"), 3);
    }
}
