//! Residual-table rendering: aligned text for the terminal, RFC-4180
//! basic CSV for files.

use std::io::Write;
use std::path::Path;

use bfield::error::Result;

use crate::suites::Row;

pub fn print_rows(suite: &str, rows: &[Row]) {
    println!("suite: {suite}");
    println!(
        "{:<18} {:>13} {:>13} {:>10} {:>10}  status",
        "identity", "l2_rel", "linf", "masked", "tol"
    );
    for r in rows {
        println!(
            "{:<18} {:>13.4e} {:>13.4e} {:>10.4e} {:>10.1e}  {}",
            r.tag,
            r.entry.l2_rel,
            r.entry.linf,
            r.entry.masked_fraction,
            r.tolerance,
            if r.pass() { "pass" } else { "FAIL" }
        );
    }
    let failures = rows.iter().filter(|r| !r.pass()).count();
    if failures == 0 {
        println!("all {} identities pass", rows.len());
    } else {
        println!("{failures} of {} identities FAIL", rows.len());
    }
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "identity,l2_rel,linf,masked_fraction,tolerance,status")?;
    for r in rows {
        writeln!(
            f,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.tag,
            r.entry.l2_rel,
            r.entry.linf,
            r.entry.masked_fraction,
            r.tolerance,
            if r.pass() { "pass" } else { "fail" }
        )?;
    }
    Ok(())
}
