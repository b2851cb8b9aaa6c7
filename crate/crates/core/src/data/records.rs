use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ID_COLUMN: &str = "id";
pub const TIME_COLUMN: &str = "time";
/// Column name for fields that should be ignored.
pub const SKIP_COLUMN: &str = "_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Tab,
    /// Any run of spaces or tabs.
    Whitespace,
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comma" | "," => Ok(Self::Comma),
            "tab" | "\t" | "\\t" => Ok(Self::Tab),
            "space" | "whitespace" | " " => Ok(Self::Whitespace),
            other => Err(Error::InvalidConfig(format!("unknown delimiter {other:?}"))),
        }
    }
}

/// Column layout of a record file. `id` and `time` are role columns, `_` is
/// ignored, and every other name is an attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSchema {
    pub delimiter: Delimiter,
    pub columns: Vec<String>,
}

impl RecordSchema {
    pub fn new(
        delimiter: Delimiter,
        columns: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        for role in [ID_COLUMN, TIME_COLUMN] {
            if columns.iter().filter(|c| c.as_str() == role).count() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "schema needs exactly one {role:?} column"
                )));
            }
        }
        let schema = Self { delimiter, columns };
        if schema.attribute_names().is_empty() {
            return Err(Error::InvalidConfig(
                "schema has no attribute columns".into(),
            ));
        }
        Ok(schema)
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| ![ID_COLUMN, TIME_COLUMN, SKIP_COLUMN].contains(&c.as_str()))
            .cloned()
            .collect()
    }

    fn position(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .expect("validated role column")
    }
}

/// One sensor packet. `values` is aligned with [`ParsedRecords::attributes`];
/// `None` marks an absent reading.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub sensor_id: u64,
    pub time: i64,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecords {
    pub attributes: Vec<String>,
    pub records: Vec<PacketRecord>,
    pub skipped: usize,
}

impl ParsedRecords {
    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }
}

fn parse_time(cell: &str) -> Option<i64> {
    cell.parse::<i64>().ok().or_else(|| {
        cell.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| v.floor() as i64)
    })
}

fn parse_line(
    line: &str,
    schema: &RecordSchema,
    id_pos: usize,
    time_pos: usize,
) -> Option<PacketRecord> {
    let fields: Vec<&str> = match schema.delimiter {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Tab => line.split('\t').map(str::trim).collect(),
        Delimiter::Whitespace => line.split_whitespace().collect(),
    };
    let sensor_id = fields.get(id_pos)?.parse::<u64>().ok()?;
    let time = parse_time(fields.get(time_pos)?)?;
    let mut values = Vec::new();
    for (pos, name) in schema.columns.iter().enumerate() {
        if [ID_COLUMN, TIME_COLUMN, SKIP_COLUMN].contains(&name.as_str()) {
            continue;
        }
        let value = match fields.get(pos).copied() {
            None | Some("") => None,
            Some(cell) => Some(cell.parse::<f64>().ok().filter(|v| v.is_finite())?),
        };
        values.push(value);
    }
    Some(PacketRecord {
        sensor_id,
        time,
        values,
    })
}

/// Tolerant streaming parse. Blank lines are ignored; lines that cannot be parsed
/// are skipped and counted, and more than half of the non-blank lines failing is
/// reported as a schema error.
pub fn parse_records<R: BufRead>(reader: R, schema: &RecordSchema) -> Result<ParsedRecords> {
    let id_pos = schema.position(ID_COLUMN);
    let time_pos = schema.position(TIME_COLUMN);
    let mut records = Vec::new();
    let mut skipped = 0;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<record stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, schema, id_pos, time_pos) {
            Some(rec) => records.push(rec),
            None => skipped += 1,
        }
    }
    let total = records.len() + skipped;
    if skipped * 2 > total {
        return Err(Error::WrongSchema {
            malformed: skipped,
            total,
        });
    }
    Ok(ParsedRecords {
        attributes: schema.attribute_names(),
        records,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> RecordSchema {
        RecordSchema::new(Delimiter::Comma, ["id", "time", "humidity", "light"]).unwrap()
    }

    #[test]
    fn direct_mapping() {
        let p = parse_records("7,1004,45.2,310.0\n".as_bytes(), &schema()).unwrap();
        assert_eq!(p.attributes, ["humidity", "light"]);
        assert_eq!(
            p.records,
            [PacketRecord {
                sensor_id: 7,
                time: 1004,
                values: vec![Some(45.2), Some(310.0)]
            }]
        );
    }

    #[test]
    fn empty_cell_is_absent() {
        let p = parse_records("7,1004,,310.0\n".as_bytes(), &schema()).unwrap();
        assert_eq!(p.records[0].values, vec![None, Some(310.0)]);
    }

    #[test]
    fn garbage_line_skipped() {
        let text = "7,1004,45.2,310.0\nthis is not a record\n8,1005,44.0,300.5\n";
        let p = parse_records(text.as_bytes(), &schema()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.skipped, 1);
    }

    #[test]
    fn mostly_garbage_is_wrong_schema() {
        let text = "a\nb\n7,1,1,1\n";
        assert!(matches!(
            parse_records(text.as_bytes(), &schema()),
            Err(Error::WrongSchema {
                malformed: 2,
                total: 3
            })
        ));
    }

    #[test]
    fn whitespace_with_skipped_columns() {
        let s = RecordSchema::new(
            Delimiter::Whitespace,
            [
                "_",
                "_",
                "time",
                "id",
                "temperature",
                "humidity",
                "light",
                "voltage",
            ],
        )
        .unwrap();
        let line = "2004-02-28 00:59:16.02785 3 1 19.9884 37.0933 45.08 2.69964\n2004-02-28 01:03:16 11 2 19.3 38.4\n";
        let p = parse_records(line.as_bytes(), &s).unwrap();
        assert_eq!(
            p.attributes,
            ["temperature", "humidity", "light", "voltage"]
        );
        assert_eq!(p.records[0].sensor_id, 1);
        assert_eq!(p.records[0].time, 3);
        assert_eq!(
            p.records[1].values,
            vec![Some(19.3), Some(38.4), None, None]
        );
    }

    #[test]
    fn schema_validation() {
        assert!(RecordSchema::new(Delimiter::Comma, ["time", "a"]).is_err());
        assert!(RecordSchema::new(Delimiter::Comma, ["id", "time"]).is_err());
        assert!("tab".parse::<Delimiter>().is_ok());
        assert!("pipe".parse::<Delimiter>().is_err());
    }

    #[test]
    fn unreadable_stream() {
        struct Broken;
        impl std::io::Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("boom"))
            }
        }
        let r = std::io::BufReader::new(Broken);
        assert!(matches!(parse_records(r, &schema()), Err(Error::Io { .. })));
    }
}
