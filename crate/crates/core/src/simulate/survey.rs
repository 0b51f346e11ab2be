use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{round2, vas_delta, Mean, MetricsError};

pub const SURVEY_ITEMS: usize = 9;
pub const ITEM_MIN: u8 = 1;
pub const ITEM_MAX: u8 = 7;

/// Column names of a survey table, in order.
pub const SURVEY_COLUMNS: [&str; 12] = [
    "session_id", "i1", "i2", "i3", "i4", "i5", "i6", "i7", "i8", "i9", "vas_pre", "vas_post",
];

/// One participant's questionnaire and slider values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub session_id: String,
    pub items: [u8; SURVEY_ITEMS],
    pub vas_pre: u8,
    pub vas_post: u8,
}

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("survey header must be `{}`, found `{found}`", SURVEY_COLUMNS.join(","))]
    Header { found: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot read survey table: {0}")]
    Csv(#[from] csv::Error),
}

impl SurveyRecord {
    pub fn new(session_id: impl Into<String>, items: [u8; SURVEY_ITEMS], vas_pre: u8, vas_post: u8) -> Self {
        SurveyRecord {
            session_id: session_id.into(),
            items,
            vas_pre,
            vas_post,
        }
    }

    /// Range check: items in 1..=7, sliders in 0..=100.
    pub fn check(&self) -> Result<(), MetricsError> {
        for (i, &v) in self.items.iter().enumerate() {
            if !(ITEM_MIN..=ITEM_MAX).contains(&v) {
                return Err(MetricsError::Range {
                    field: format!("i{}", i + 1),
                    value: v.into(),
                    min: ITEM_MIN.into(),
                    max: ITEM_MAX.into(),
                });
            }
        }
        vas_delta(self.vas_pre.into(), self.vas_post.into()).map(|_| ())
    }

    pub fn vas_delta(&self) -> i64 {
        i64::from(self.vas_post) - i64::from(self.vas_pre)
    }

    pub fn total(&self) -> u32 {
        self.items.iter().map(|&v| u32::from(v)).sum()
    }
}

fn parse_cell(row: usize, column: &str, raw: &str) -> Result<i64, SurveyError> {
    raw.trim().parse::<i64>().map_err(|_| SurveyError::Row {
        row,
        message: format!("{column} = `{raw}` is not an integer"),
    })
}

/// Read a survey table. Rows are numbered from 1, excluding the header.
pub fn read_surveys<R: Read>(input: R) -> Result<Vec<SurveyRecord>, SurveyError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != SURVEY_COLUMNS {
        return Err(SurveyError::Header {
            found: header.join(","),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| SurveyError::Row {
            row,
            message: e.to_string(),
        })?;
        let mut nums = [0i64; 11];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = parse_cell(row, SURVEY_COLUMNS[k + 1], &rec[k + 1])?;
        }
        let narrow = |k: usize, max: i64| -> Result<u8, SurveyError> {
            let v = nums[k];
            if (0..=max).contains(&v) {
                Ok(v as u8)
            } else {
                Err(SurveyError::Row {
                    row,
                    message: MetricsError::Range {
                        field: SURVEY_COLUMNS[k + 1].into(),
                        value: v,
                        min: if k < SURVEY_ITEMS { ITEM_MIN.into() } else { 0 },
                        max,
                    }
                    .to_string(),
                })
            }
        };
        let mut items = [0u8; SURVEY_ITEMS];
        for (k, item) in items.iter_mut().enumerate() {
            *item = narrow(k, ITEM_MAX.into())?;
        }
        let record = SurveyRecord::new(&rec[0], items, narrow(9, 100)?, narrow(10, 100)?);
        record.check().map_err(|e| SurveyError::Row {
            row,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_surveys(records: &[SurveyRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SURVEY_COLUMNS).expect("in-memory write");
    for r in records {
        let mut row = vec![r.session_id.clone()];
        row.extend(r.items.iter().map(|v| v.to_string()));
        row.push(r.vas_pre.to_string());
        row.push(r.vas_post.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub respondents: usize,
    pub item_means: [f64; SURVEY_ITEMS],
    /// Mean of per-respondent totals.
    pub total_mean: f64,
    pub vas_delta_mean: f64,
}

impl SurveySummary {
    pub fn rounded(&self) -> SurveySummary {
        SurveySummary {
            respondents: self.respondents,
            item_means: self.item_means.map(round2),
            total_mean: round2(self.total_mean),
            vas_delta_mean: round2(self.vas_delta_mean),
        }
    }
}

pub fn summarize_surveys(records: &[SurveyRecord]) -> Result<SurveySummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut item_means = [0.0; SURVEY_ITEMS];
    for (k, mean) in item_means.iter_mut().enumerate() {
        *mean = records
            .iter()
            .map(|r| f64::from(r.items[k]))
            .collect::<Mean>()
            .value()
            .unwrap_or_default();
    }
    let total: Mean = records.iter().map(|r| f64::from(r.total())).collect();
    let vas: Mean = records.iter().map(|r| r.vas_delta() as f64).collect();
    Ok(SurveySummary {
        respondents: records.len(),
        item_means,
        total_mean: total.value().unwrap_or_default(),
        vas_delta_mean: vas.value().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "session_id,i1,i2,i3,i4,i5,i6,i7,i8,i9,vas_pre,vas_post\n";

    #[test]
    fn reads_and_round_trips() {
        let text = format!("{HEADER}a,1,2,3,4,5,6,7,1,2,40,60\nb, 7,7,7,7,7,7,7,7,7,50,50\n");
        let rows = read_surveys(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].vas_delta(), 20);
        assert_eq!(rows[1].total(), 63);
        assert_eq!(read_surveys(write_surveys(&rows).as_bytes()).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_rows() {
        for bad in ["a,8,1,1,1,1,1,1,1,1,0,0", "a,1,1,1,1,1,1,1,1,0,0,0", "a,1,1,1,1,1,1,1,1,1,0,101", "a,x,1,1,1,1,1,1,1,1,0,0"] {
            let err = read_surveys(format!("{HEADER}{bad}\n").as_bytes()).unwrap_err();
            assert!(matches!(err, SurveyError::Row { row: 1, .. }), "{bad}: {err}");
        }
        assert!(matches!(
            read_surveys("id,i1\nx,1\n".as_bytes()),
            Err(SurveyError::Header { .. })
        ));
    }

    #[test]
    fn all_ones_total_nine() {
        let rows: Vec<SurveyRecord> = (0..5).map(|i| SurveyRecord::new(format!("s{i}"), [1; 9], 0, 0)).collect();
        let s = summarize_surveys(&rows).unwrap();
        assert_eq!(s.total_mean, 9.0);
        assert_eq!(s.item_means, [1.0; 9]);
        assert_eq!(summarize_surveys(&[]), Err(MetricsError::Empty));
    }
}
