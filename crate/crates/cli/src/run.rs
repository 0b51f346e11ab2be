use std::io::{self, BufRead, Write};
use std::sync::Arc;

use clap::Args;
use serde_json::json;

use convflow::engine::{transcript_jsonl, Session, SessionConfig, Turn, Utterance};
use convflow::simulate::{SurveyRecord, ITEM_MAX, ITEM_MIN, SURVEY_ITEMS, VAS_MAX};
use convflow_service::{StoredReport, REPORT_FILE, TRANSCRIPT_FILE};

use crate::{load_scenario, pick_seed, scenario_id, write_file, CmdResult, Failure, Format, SessionArgs};

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// Ask the slider question before the dialogue and the questionnaire
    /// after it.
    #[arg(long)]
    pub survey: bool,
}

/// Console I/O. In json mode the dialogue goes to stderr so that stdout
/// carries a single document.
struct Console<R> {
    input: R,
    json: bool,
}

impl<R: BufRead> Console<R> {
    fn say(&self, line: &str) {
        if self.json {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }

    fn prompt(&self, p: &str) {
        if self.json {
            eprint!("{p}");
            let _ = io::stderr().flush();
        } else {
            print!("{p}");
            let _ = io::stdout().flush();
        }
    }

    /// Next input line without its newline; `None` at end of input.
    fn read_line(&mut self) -> Result<Option<String>, Failure> {
        let mut buf = String::new();
        match self.input.read_line(&mut buf) {
            Ok(0) => Ok(None),
            Ok(_) => Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string())),
            Err(e) => Err(Failure::usage(format!("standard input: {e}"))),
        }
    }

    /// Ask until an integer in range is given; `None` at end of input.
    fn ask_number(&mut self, question: &str, min: u8, max: u8) -> Result<Option<u8>, Failure> {
        loop {
            self.prompt(&format!("{question} ({min}-{max}): "));
            let Some(line) = self.read_line()? else { return Ok(None) };
            match line.trim().parse::<u8>() {
                Ok(v) if (min..=max).contains(&v) => return Ok(Some(v)),
                _ => self.say(&format!("Please enter a whole number from {min} to {max}.")),
            }
        }
    }
}

fn prefix(u: &Utterance, stage: u8) -> String {
    format!("[{}/{}]", u.expression.name.as_str(), u.expression.stage.unwrap_or(stage))
}

pub fn cmd_run(args: RunArgs) -> CmdResult {
    let s = &args.session;
    let [a, b] = s.pair()?;
    let doc = Arc::new(load_scenario(&s.path, 2)?);
    let seed = pick_seed(s.seed);
    let mut cfg = SessionConfig::new(a.clone(), b.clone(), seed).with_policy(s.policy.into());
    cfg.operator_choice = s.choice.clone();
    let mut session = Session::start(doc, cfg).map_err(|e| Failure::usage(e.to_string()))?;

    let stdin = io::stdin();
    let mut console = Console {
        input: stdin.lock(),
        json: s.format == Format::Json,
    };
    console.say(&format!("seed: {seed}"));

    let mut vas_pre = None;
    if args.survey {
        vas_pre = console.ask_number(&format!("Which spot do you prefer now? 0 = {a}, {VAS_MAX} = {b}"), 0, VAS_MAX as u8)?;
    }

    loop {
        let u = match session.next_utterance().map_err(Failure::domain)? {
            Turn::Finished => break,
            Turn::Utterance(u) => u,
        };
        console.say(&format!("{} {}", prefix(&u, session.stage()), u.text));
        if u.awaiting_input {
            console.prompt("> ");
            // a closed input stream answers with silence
            let answer = console.read_line()?.unwrap_or_default();
            session.submit_answer(&answer).map_err(Failure::domain)?;
        }
    }

    let mut survey = None;
    if let Some(pre) = vas_pre {
        survey = collect_survey(&mut console, &a, &b, pre, session.id())?;
        if survey.is_none() {
            console.say("Survey incomplete; the report is written without it.");
        }
    }

    let report = StoredReport::build(&scenario_id(&s.path), &session, survey.as_ref());
    let transcript_path = s.out.join(TRANSCRIPT_FILE);
    let report_path = s.out.join(REPORT_FILE);
    write_file(&transcript_path, &transcript_jsonl(session.transcript()))?;
    write_file(&report_path, &report.to_json())?;

    let stats = &report.stats;
    match s.format {
        Format::Json => println!(
            "{}",
            json!({
                "seed": seed,
                "session_id": report.session_id,
                "recommended": report.recommendation.as_ref().map(|r| r.spot_id.clone()),
                "closed_questions_asked": stats.closed_questions_asked,
                "broken": stats.broken,
                "breakdown_rate_pct": stats.breakdown_rate_pct,
                "vas_delta": report.vas_delta,
                "transcript": transcript_path.display().to_string(),
                "report": report_path.display().to_string(),
            })
        ),
        Format::Csv => {
            println!("seed,session_id,closed_questions_asked,broken,breakdown_rate_pct");
            println!(
                "{seed},{},{},{},{:.2}",
                report.session_id, stats.closed_questions_asked, stats.broken, stats.breakdown_rate_pct
            );
        }
        Format::Table => {
            println!(
                "breakdown: {} of {} closed questions ({:.2}%)",
                stats.broken, stats.closed_questions_asked, stats.breakdown_rate_pct
            );
            println!("wrote {} and {}", transcript_path.display(), report_path.display());
        }
    }
    Ok(())
}

fn collect_survey<R: BufRead>(
    console: &mut Console<R>,
    a: &str,
    b: &str,
    vas_pre: u8,
    session_id: &str,
) -> Result<Option<SurveyRecord>, Failure> {
    let Some(vas_post) =
        console.ask_number(&format!("Which spot do you prefer now? 0 = {a}, {VAS_MAX} = {b}"), 0, VAS_MAX as u8)?
    else {
        return Ok(None);
    };
    let mut items = [0u8; SURVEY_ITEMS];
    for (i, item) in items.iter_mut().enumerate() {
        match console.ask_number(&format!("Questionnaire item {}", i + 1), ITEM_MIN, ITEM_MAX)? {
            Some(v) => *item = v,
            None => return Ok(None),
        }
    }
    Ok(Some(SurveyRecord::new(session_id, items, vas_pre, vas_post)))
}
