use std::path::Path;

use serde_json::json;

use convflow::scenario::{check_source, has_errors};

use crate::{format_diagnostic, read_file, CmdResult, Failure, Format};

pub fn cmd_lint(path: &Path, format: Format) -> CmdResult {
    let src = read_file(path)?;
    let diags = check_source(&src);
    for d in &diags {
        eprintln!("{}", format_diagnostic(path, d));
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let warnings = diags.len() - errors;
    match format {
        Format::Json => println!(
            "{}",
            json!({ "path": path.display().to_string(), "errors": errors, "warnings": warnings, "diagnostics": diags })
        ),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let row_err = |e: csv::Error| Failure::usage(e);
            w.write_record(["code", "severity", "line", "column", "node", "message"]).map_err(row_err)?;
            for d in &diags {
                let (line, col) = d.pos.map(|p| (p.line.to_string(), p.column.to_string())).unwrap_or_default();
                let severity = if d.is_error() { "error" } else { "warning" };
                w.write_record([d.code.as_str(), severity, &line, &col, d.node.as_deref().unwrap_or(""), &d.message])
                    .map_err(row_err)?;
            }
            w.flush().map_err(Failure::usage)?;
        }
        Format::Table => println!("{}: {errors} error(s), {warnings} warning(s)", path.display()),
    }
    if has_errors(&diags) {
        Err(Failure::domain(format!("{} has {errors} error(s)", path.display())))
    } else {
        Ok(())
    }
}
