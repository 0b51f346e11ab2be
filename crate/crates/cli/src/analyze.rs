use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use convflow::simulate::{aggregate_reports, read_reports, read_surveys, summarize_surveys, SURVEY_ITEMS};

use crate::{read_file, CmdResult, Failure, Format};

const ITEM_LABELS: [&str; SURVEY_ITEMS] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"];

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Survey table with columns session_id,i1..i9,vas_pre,vas_post.
    pub surveys: PathBuf,
    /// Count table with columns session_id,closed_questions_asked,broken.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

pub fn cmd_analyze(args: AnalyzeArgs) -> CmdResult {
    let records = read_surveys(read_file(&args.surveys)?.as_bytes()).map_err(Failure::domain)?;
    let summary = summarize_surveys(&records).map_err(Failure::domain)?.rounded();
    let breakdown = match &args.reports {
        Some(path) => {
            let reports = read_reports(read_file(path)?.as_bytes()).map_err(Failure::domain)?;
            Some(aggregate_reports(&reports, Some(&records)).map_err(Failure::domain)?)
        }
        None => None,
    };

    match args.format {
        Format::Json => {
            let breakdown = breakdown.map(|agg| {
                json!({
                    "sessions": agg.sessions,
                    "sessions_with_breakdown": agg.sessions_with_breakdown,
                    "mean_breakdown_rate_pct": agg.mean_breakdown_rate_pct,
                    "scatter": agg.scatter,
                })
            });
            let doc = json!({
                "respondents": summary.respondents,
                "item_means": summary.item_means,
                "total_mean": summary.total_mean,
                "vas_delta_mean": summary.vas_delta_mean,
                "breakdown": breakdown,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("summary serializes"));
        }
        Format::Csv => {
            println!("item,mean");
            for (label, mean) in ITEM_LABELS.iter().zip(summary.item_means) {
                println!("{label},{mean:.2}");
            }
            println!("Total,{:.2}", summary.total_mean);
            println!("VAS delta,{:.2}", summary.vas_delta_mean);
            if let Some(agg) = breakdown {
                println!("breakdown rate %,{:.2}", agg.mean_breakdown_rate_pct);
            }
        }
        Format::Table => {
            println!("{:<6} {:>5}", "item", "mean");
            for (label, mean) in ITEM_LABELS.iter().zip(summary.item_means) {
                println!("{label:<6} {mean:>5.2}");
            }
            println!("{:<6} {:>5.2}", "Total", summary.total_mean);
            println!("VAS delta mean {:.2} (n = {})", summary.vas_delta_mean, summary.respondents);
            if let Some(agg) = breakdown {
                println!(
                    "breakdown rate mean {:.2}% ({} of {} sessions)",
                    agg.mean_breakdown_rate_pct, agg.sessions_with_breakdown, agg.sessions
                );
            }
        }
    }
    Ok(())
}
