use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use serde_json::json;

use convflow::engine::transcript_jsonl;
use convflow::simulate::{
    aggregate_reports, mixed_personas, read_surveys, reports_csv, run_batch, scatter_csv, AnswerPolicy, BatchSpec,
    Persona,
};
use convflow_service::{REPORT_FILE, TRANSCRIPT_FILE};

use crate::{load_scenario, pick_seed, read_file, write_file, CmdResult, Failure, Format, SessionArgs};

pub const SCATTER_FILE: &str = "scatter.csv";

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// `always_first_key`, `never_match`, `match:P`, `scripted:PATH` or
    /// `mixed`.
    #[arg(long, default_value = "mixed")]
    pub persona: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Survey table joined to sessions by id (`s01`, `s02`, ...).
    #[arg(long)]
    pub surveys: Option<PathBuf>,
}

fn personas(spec: &str) -> Result<Vec<Persona>, Failure> {
    if spec == "mixed" {
        return Ok(mixed_personas());
    }
    if let Some(path) = spec.strip_prefix("scripted:") {
        let text = read_file(path.as_ref())?;
        let lines = text.lines().map(str::to_string).collect();
        return Ok(vec![Persona::new(AnswerPolicy::Scripted(lines))]);
    }
    let policy: AnswerPolicy = spec.parse().map_err(Failure::usage)?;
    Ok(vec![Persona::new(policy)])
}

pub fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let s = &args.session;
    let [a, b] = s.pair()?;
    let personas = personas(&args.persona)?;
    let surveys = match &args.surveys {
        Some(path) => Some(read_surveys(read_file(path)?.as_bytes()).map_err(Failure::domain)?),
        None => None,
    };
    let doc = Arc::new(load_scenario(&s.path, 1)?);
    let seed = pick_seed(s.seed);
    let mut spec = BatchSpec::new(a, b, seed, args.n as usize);
    spec.policy = s.policy.into();
    spec.operator_choice = s.choice.clone();

    let runs = run_batch(doc, &personas, &spec).map_err(Failure::domain)?;
    let mut reports = Vec::with_capacity(runs.len());
    for run in runs {
        let rel = format!("{}/{TRANSCRIPT_FILE}", run.report.session_id);
        write_file(&s.out.join(&rel), &transcript_jsonl(&run.transcript))?;
        let mut report = run.report;
        report.transcript_path = Some(rel);
        reports.push(report);
    }
    let aggregate = aggregate_reports(&reports, surveys.as_deref()).map_err(Failure::domain)?;
    let document = json!({
        "seed": seed,
        "persona": args.persona,
        "sessions": reports.len(),
        "reports": reports,
        "aggregate": aggregate,
    });
    let pretty = serde_json::to_string_pretty(&document).expect("reports serialize");
    write_file(&s.out.join(REPORT_FILE), &(pretty.clone() + "\n"))?;
    if surveys.is_some() {
        write_file(&s.out.join(SCATTER_FILE), &scatter_csv(&aggregate.scatter))?;
    }

    match s.format {
        Format::Json => println!("{pretty}"),
        Format::Csv => print!("{}", reports_csv(&reports)),
        Format::Table => {
            println!("seed: {seed}");
            println!("{:<8} {:<18} {:>6} {:>6} {:>9}", "session", "persona", "closed", "broken", "rate %");
            for r in &reports {
                println!(
                    "{:<8} {:<18} {:>6} {:>6} {:>9.2}",
                    r.session_id, r.persona, r.closed_questions_asked, r.broken, r.breakdown_rate_pct
                );
            }
            println!(
                "mean breakdown rate {:.2}% ({} of {} sessions with a breakdown)",
                aggregate.mean_breakdown_rate_pct, aggregate.sessions_with_breakdown, aggregate.sessions
            );
            if let Some(survey) = &aggregate.survey {
                println!("mean VAS delta {:.2} over {} respondents", survey.vas_delta_mean, survey.respondents);
            }
            println!("wrote {}", s.out.display());
        }
    }
    Ok(())
}
