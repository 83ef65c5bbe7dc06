//! A small guarded-command language for mutual exclusion algorithms and its
//! compiler to thread LTSs.
//!
//! A program declares shared registers and thread-local variables and gives
//! the body executed by thread `i` of `N`. The body runs in an implicit
//! infinite loop, starting with the non-critical section; the single
//! `critical` statement splits it into entry and exit protocol. See
//! `docs/language.md` for the grammar.

pub mod ast;
pub mod build;
pub mod lower;
pub mod parse;
pub mod transform;
pub mod validate;

pub use ast::Program;
pub use build::{Phase, ThreadLts};
pub use lower::{Layout, RegisterInfo};
pub use transform::{full_to_instant, instant_to_full, isomorphic};
pub use validate::{validate_thread_properties, Report, Rule, Violation};

use crate::action::{ThreadId, MAX_THREADS};
use crate::error::{Error, ParseError};
use crate::registers::Style;

/// Parses `text` and checks it for every thread at the smallest supported
/// thread count.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let p = parse::parse_syntax(text)?;
    let n = p.min_threads;
    let layout = lower::instantiate_layout(&p, n)?;
    for i in 0..n {
        lower::lower(&p, &layout, i)?;
    }
    Ok(p)
}

/// Checks that `p` supports `n` threads.
pub fn check_threads(p: &Program, n: usize) -> Result<(), Error> {
    let fits = n >= p.min_threads && p.max_threads.is_none_or(|m| n <= m) && (1..=MAX_THREADS).contains(&n);
    if fits {
        Ok(())
    } else {
        Err(Error::UnsupportedThreads { name: p.name.clone(), threads: n })
    }
}

/// Instantiates the registers of `p` for `n` threads.
pub fn layout(p: &Program, n: usize) -> Result<Layout, Error> {
    check_threads(p, n)?;
    Ok(lower::instantiate_layout(p, n)?)
}

/// Compiles thread `i` of `n`.
pub fn compile_thread(p: &Program, n: usize, i: ThreadId, style: Style) -> Result<ThreadLts, Error> {
    let layout = layout(p, n)?;
    compile_with(p, &layout, i, style)
}

pub(crate) fn compile_with(p: &Program, layout: &Layout, i: ThreadId, style: Style) -> Result<ThreadLts, Error> {
    if i as usize >= layout.n {
        return Err(Error::InvalidConfig(format!("thread {i} out of range for {} threads", layout.n)));
    }
    let ir = lower::lower(p, layout, i as usize)?;
    build::build_thread(&ir, layout, i, style)
}

/// All threads of `p` for `n` threads.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub layout: Layout,
    pub threads: Vec<ThreadLts>,
}

pub fn compile(p: &Program, n: usize, style: Style) -> Result<Compiled, Error> {
    let layout = layout(p, n)?;
    let threads = (0..n).map(|i| compile_with(p, &layout, i as ThreadId, style)).collect::<Result<_, _>>()?;
    Ok(Compiled { layout, threads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{Action, ActionKind};

    const PETERSON: &str = "
algorithm peterson
threads 2..2
register flag[N]: bool = 0
register turn: thread = 0
begin
  flag[i] := 1
  turn := 1 - i
  await flag[1 - i] == 0 || turn == i
  critical
  flag[i] := 0
end
";

    #[test]
    fn peterson_compiles_in_both_styles() {
        let p = parse(PETERSON).unwrap();
        let f = compile_thread(&p, 2, 0, Style::FullRead).unwrap();
        let i = compile_thread(&p, 2, 0, Style::InstantRead).unwrap();
        assert!(validate_thread_properties(&f).passed());
        assert!(validate_thread_properties(&i).passed());
        assert!(isomorphic(&full_to_instant(&f).unwrap().lts, &i.lts).unwrap());
        assert!(isomorphic(&instant_to_full(&i).unwrap().lts, &f.lts).unwrap());
        // noncrit, sw/fw flag, sw/fw turn, sr/fr flag, sr/fr turn, crit, sw/fw flag
        assert_eq!(f.lts.num_states(), 12);
        assert_eq!(i.lts.num_states(), 10);
        assert_eq!(f.phase[0], Phase::NonCritical);
    }

    #[test]
    fn busy_wait_loops_on_reads() {
        let p = parse(PETERSON).unwrap();
        let t = compile_thread(&p, 2, 0, Style::InstantRead).unwrap();
        // flag[1] read, state after the two writes.
        let s = 5u32;
        let succ = &t.lts.succ[s as usize];
        assert!(succ.iter().all(|(a, _)| a.kind == ActionKind::InstantRead && a.register == 1));
        let on_one = succ.iter().find(|(a, _)| a.value == 1).unwrap().1;
        let turn_reads = &t.lts.succ[on_one as usize];
        assert!(turn_reads.contains(&(Action::instant_read(0, 2, 1), s)));
        assert!(turn_reads.iter().any(|(a, u)| a.value == 0 && t.enables_crit(*u)));
    }

    #[test]
    fn semantic_errors() {
        assert_eq!(parse("algorithm x\nthreads 2\nbegin\nend\n").unwrap_err().code, "no-critical");
        let bad = "algorithm x\nthreads 2\nregister b: bool = 0\nbegin\n b := 2\n critical\nend\n";
        assert_eq!(parse(bad).unwrap_err().code, "domain");
        let bad = "algorithm x\nthreads 2\nbegin\n goto nowhere\n critical\nend\n";
        assert_eq!(parse(bad).unwrap_err().code, "undefined-label");
        let bad = "algorithm x\nthreads 2\nbegin\n y := 1\n critical\nend\n";
        assert_eq!(parse(bad).unwrap_err().code, "undeclared");
    }

    #[test]
    fn silent_loop_diverges_visibly() {
        let src = "algorithm x\nthreads 1\nlocal k = 0\nbegin\n while k == 0 do\n skip\n end\n critical\nend\n";
        let t = compile_thread(&parse(src).unwrap(), 1, 0, Style::InstantRead).unwrap();
        assert!(t.lts.succ[1].iter().all(|(a, u)| a.kind == ActionKind::LocalStep && *u == 1));
    }

    #[test]
    fn thread_bounds() {
        let p = parse(PETERSON).unwrap();
        assert!(matches!(compile(&p, 3, Style::FullRead), Err(Error::UnsupportedThreads { .. })));
    }
}
