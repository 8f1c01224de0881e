//! Span records and the two supported export formats.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanKind {
    Client,
    Server,
    Internal,
    Other,
}

impl SpanKind {
    /// Accepts the short names as well as OTLP enum names and numbers.
    pub fn from_export(text: &str) -> Self {
        match text.trim().to_ascii_lowercase().as_str() {
            "client" | "span_kind_client" | "3" => SpanKind::Client,
            "server" | "span_kind_server" | "2" => SpanKind::Server,
            "internal" | "span_kind_internal" | "1" => SpanKind::Internal,
            _ => SpanKind::Other,
        }
    }

    fn otlp_number(self) -> u8 {
        match self {
            SpanKind::Internal => 1,
            SpanKind::Server => 2,
            SpanKind::Client => 3,
            SpanKind::Other => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub trace_id: String,
    pub span_id: String,
    pub parent_span_id: Option<String>,
    pub service: String,
    pub name: String,
    pub kind: SpanKind,
    pub start_ns: u64,
    pub end_ns: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanFormat {
    OtlpJson,
    Jsonl,
}

impl SpanFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            SpanFormat::OtlpJson => "otlp-json",
            SpanFormat::Jsonl => "jsonl",
        }
    }
}

impl fmt::Display for SpanFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpanFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "otlp-json" => Ok(SpanFormat::OtlpJson),
            "jsonl" => Ok(SpanFormat::Jsonl),
            other => Err(IngestError::UnknownFormat(other.to_owned())),
        }
    }
}

pub fn parse_spans(input: &[u8], format: SpanFormat) -> Result<Vec<SpanRecord>, IngestError> {
    let text = std::str::from_utf8(input)
        .map_err(|e| IngestError::Malformed(format!("input is not UTF-8: {e}")))?;
    let spans = match format {
        SpanFormat::OtlpJson => parse_otlp(text)?,
        SpanFormat::Jsonl => parse_jsonl(text)?,
    };
    for span in &spans {
        if span.end_ns < span.start_ns {
            return Err(IngestError::Malformed(format!(
                "span {} in trace {} ends before it starts",
                span.span_id, span.trace_id
            )));
        }
    }
    Ok(spans)
}

pub fn write_spans(spans: &[SpanRecord], format: SpanFormat) -> String {
    match format {
        SpanFormat::Jsonl => {
            let mut out = String::new();
            for span in spans {
                out.push_str(
                    &serde_json::to_string(&JsonlOut::from(span)).expect("span serializes"),
                );
                out.push('\n');
            }
            out
        }
        SpanFormat::OtlpJson => write_otlp(spans),
    }
}

// --- JSONL -----------------------------------------------------------------

#[derive(Deserialize)]
struct JsonlIn {
    trace_id: Option<String>,
    span_id: Option<String>,
    #[serde(default)]
    parent_span_id: Option<String>,
    #[serde(default)]
    service: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    start_ns: u64,
    #[serde(default)]
    end_ns: u64,
}

#[derive(Serialize)]
struct JsonlOut<'a> {
    trace_id: &'a str,
    span_id: &'a str,
    parent_span_id: Option<&'a str>,
    service: &'a str,
    name: &'a str,
    kind: SpanKind,
    start_ns: u64,
    end_ns: u64,
}

impl<'a> From<&'a SpanRecord> for JsonlOut<'a> {
    fn from(s: &'a SpanRecord) -> Self {
        JsonlOut {
            trace_id: &s.trace_id,
            span_id: &s.span_id,
            parent_span_id: s.parent_span_id.as_deref(),
            service: &s.service,
            name: &s.name,
            kind: s.kind,
            start_ns: s.start_ns,
            end_ns: s.end_ns,
        }
    }
}

fn parse_jsonl(text: &str) -> Result<Vec<SpanRecord>, IngestError> {
    let mut spans = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonlIn = serde_json::from_str(line)
            .map_err(|e| IngestError::Malformed(format!("line {}: {e}", n + 1)))?;
        let trace_id = required_id(raw.trace_id, "trace_id", n + 1)?;
        let span_id = required_id(raw.span_id, "span_id", n + 1)?;
        spans.push(SpanRecord {
            trace_id,
            span_id,
            parent_span_id: raw.parent_span_id.filter(|p| !p.is_empty()),
            service: raw.service,
            name: raw.name,
            kind: raw
                .kind
                .as_deref()
                .map_or(SpanKind::Other, SpanKind::from_export),
            start_ns: raw.start_ns,
            end_ns: raw.end_ns,
        });
    }
    Ok(spans)
}

fn required_id(
    id: Option<String>,
    field: &'static str,
    line: usize,
) -> Result<String, IngestError> {
    match id {
        Some(id) if !id.is_empty() => Ok(id),
        _ => Err(IngestError::MissingId {
            field,
            location: format!("line {line}"),
        }),
    }
}

// --- OTLP JSON -------------------------------------------------------------

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OtlpDocument {
    #[serde(default)]
    resource_spans: Vec<OtlpResourceSpans>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OtlpResourceSpans {
    #[serde(default)]
    resource: Option<OtlpResource>,
    #[serde(default)]
    scope_spans: Vec<OtlpScopeSpans>,
}

#[derive(Deserialize)]
struct OtlpResource {
    #[serde(default)]
    attributes: Vec<OtlpAttribute>,
}

#[derive(Deserialize)]
struct OtlpAttribute {
    key: String,
    #[serde(default)]
    value: serde_json::Value,
}

#[derive(Deserialize)]
struct OtlpScopeSpans {
    #[serde(default)]
    spans: Vec<OtlpSpan>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OtlpSpan {
    #[serde(default)]
    trace_id: Option<String>,
    #[serde(default)]
    span_id: Option<String>,
    #[serde(default)]
    parent_span_id: Option<String>,
    #[serde(default)]
    name: String,
    #[serde(default)]
    kind: Option<NumberOrString>,
    #[serde(default)]
    start_time_unix_nano: Option<NumberOrString>,
    #[serde(default)]
    end_time_unix_nano: Option<NumberOrString>,
}

/// OTLP JSON encodes 64-bit integers as strings; some exporters emit numbers.
#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrString {
    Number(u64),
    Text(String),
}

impl NumberOrString {
    fn as_text(&self) -> String {
        match self {
            NumberOrString::Number(n) => n.to_string(),
            NumberOrString::Text(s) => s.clone(),
        }
    }

    fn as_nanos(&self, field: &str) -> Result<u64, IngestError> {
        match self {
            NumberOrString::Number(n) => Ok(*n),
            NumberOrString::Text(s) => s
                .parse()
                .map_err(|_| IngestError::Malformed(format!("{field} is not an integer: {s:?}"))),
        }
    }
}

const UNKNOWN_SERVICE: &str = "unknown_service";

fn parse_otlp(text: &str) -> Result<Vec<SpanRecord>, IngestError> {
    let doc: OtlpDocument =
        serde_json::from_str(text).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let mut out = Vec::new();
    for (r, rs) in doc.resource_spans.into_iter().enumerate() {
        let service = rs
            .resource
            .iter()
            .flat_map(|res| &res.attributes)
            .find(|a| a.key == "service.name")
            .and_then(|a| a.value.get("stringValue"))
            .and_then(|v| v.as_str())
            .unwrap_or(UNKNOWN_SERVICE)
            .to_owned();
        for (s, ss) in rs.scope_spans.into_iter().enumerate() {
            for (i, span) in ss.spans.into_iter().enumerate() {
                let location = format!("resourceSpans[{r}].scopeSpans[{s}].spans[{i}]");
                let trace_id = match span.trace_id {
                    Some(id) if !id.is_empty() => id,
                    _ => {
                        return Err(IngestError::MissingId {
                            field: "traceId",
                            location,
                        })
                    }
                };
                let span_id = match span.span_id {
                    Some(id) if !id.is_empty() => id,
                    _ => {
                        return Err(IngestError::MissingId {
                            field: "spanId",
                            location,
                        })
                    }
                };
                let start_ns = match &span.start_time_unix_nano {
                    Some(v) => v.as_nanos("startTimeUnixNano")?,
                    None => 0,
                };
                let end_ns = match &span.end_time_unix_nano {
                    Some(v) => v.as_nanos("endTimeUnixNano")?,
                    None => start_ns,
                };
                out.push(SpanRecord {
                    trace_id,
                    span_id,
                    parent_span_id: span.parent_span_id.filter(|p| !p.is_empty()),
                    service: service.clone(),
                    name: span.name,
                    kind: span
                        .kind
                        .as_ref()
                        .map_or(SpanKind::Other, |k| SpanKind::from_export(&k.as_text())),
                    start_ns,
                    end_ns,
                });
            }
        }
    }
    Ok(out)
}

fn write_otlp(spans: &[SpanRecord]) -> String {
    use serde_json::json;
    let mut by_service: BTreeMap<&str, Vec<&SpanRecord>> = BTreeMap::new();
    for span in spans {
        by_service.entry(&span.service).or_default().push(span);
    }
    let resource_spans: Vec<_> = by_service
        .into_iter()
        .map(|(service, spans)| {
            let spans: Vec<_> = spans
                .into_iter()
                .map(|s| {
                    let mut span = json!({
                        "traceId": s.trace_id,
                        "spanId": s.span_id,
                        "name": s.name,
                        "kind": s.kind.otlp_number(),
                        "startTimeUnixNano": s.start_ns.to_string(),
                        "endTimeUnixNano": s.end_ns.to_string(),
                    });
                    if let Some(parent) = &s.parent_span_id {
                        span["parentSpanId"] = json!(parent);
                    }
                    span
                })
                .collect();
            json!({
                "resource": {"attributes": [{"key": "service.name", "value": {"stringValue": service}}]},
                "scopeSpans": [{"spans": spans}],
            })
        })
        .collect();
    json!({ "resourceSpans": resource_spans }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const OTLP: &str = r#"{
      "resourceSpans": [{
        "resource": {"attributes": [{"key": "service.name", "value": {"stringValue": "D"}}]},
        "scopeSpans": [{"scope": {"name": "x"}, "spans": [
          {"traceId": "t1", "spanId": "a", "name": "OPD1", "kind": "SPAN_KIND_SERVER",
           "startTimeUnixNano": "100", "endTimeUnixNano": "200"},
          {"traceId": "t1", "spanId": "b", "parentSpanId": "a", "name": "OPB2", "kind": "SPAN_KIND_CLIENT",
           "startTimeUnixNano": 110, "endTimeUnixNano": 150}
        ]}]
      }, {
        "resource": {"attributes": [{"key": "service.name", "value": {"stringValue": "B"}}]},
        "scopeSpans": [{"spans": [
          {"traceId": "t1", "spanId": "c", "parentSpanId": "b", "name": "OPB2", "kind": 2,
           "startTimeUnixNano": "120", "endTimeUnixNano": "140"},
          {"traceId": "t1", "spanId": "d", "parentSpanId": "c", "name": "work", "kind": "SPAN_KIND_PRODUCER"}
        ]}]
      }]
    }"#;

    #[test]
    fn parses_otlp_subset() {
        let spans = parse_spans(OTLP.as_bytes(), SpanFormat::OtlpJson).unwrap();
        assert_eq!(spans.len(), 4);
        assert_eq!(spans[0].kind, SpanKind::Server);
        assert_eq!(spans[0].service, "D");
        assert_eq!(spans[0].parent_span_id, None);
        assert_eq!(spans[1].kind, SpanKind::Client);
        assert_eq!(spans[1].start_ns, 110);
        assert_eq!(spans[2].kind, SpanKind::Server);
        assert_eq!(spans[2].service, "B");
        assert_eq!(spans[3].kind, SpanKind::Other);
    }

    #[test]
    fn empty_spans_array() {
        let doc = r#"{"resourceSpans":[{"scopeSpans":[{"spans":[]}]}]}"#;
        assert!(parse_spans(doc.as_bytes(), SpanFormat::OtlpJson)
            .unwrap()
            .is_empty());
        assert!(parse_spans(b"", SpanFormat::Jsonl).unwrap().is_empty());
    }

    #[test]
    fn otlp_errors() {
        assert!(matches!(
            parse_spans(b"{not json", SpanFormat::OtlpJson),
            Err(IngestError::Malformed(_))
        ));
        let no_span_id = r#"{"resourceSpans":[{"scopeSpans":[{"spans":[{"traceId":"t"}]}]}]}"#;
        assert!(matches!(
            parse_spans(no_span_id.as_bytes(), SpanFormat::OtlpJson),
            Err(IngestError::MissingId {
                field: "spanId",
                ..
            })
        ));
        let no_trace_id =
            r#"{"resourceSpans":[{"scopeSpans":[{"spans":[{"spanId":"s","traceId":""}]}]}]}"#;
        assert!(matches!(
            parse_spans(no_trace_id.as_bytes(), SpanFormat::OtlpJson),
            Err(IngestError::MissingId {
                field: "traceId",
                ..
            })
        ));
        assert!(matches!(
            "zipkin".parse::<SpanFormat>(),
            Err(IngestError::UnknownFormat(_))
        ));
    }

    #[test]
    fn parses_jsonl() {
        let text = concat!(
            r#"{"trace_id":"t","span_id":"1","parent_span_id":null,"service":"D","name":"OPD1","kind":"server","start_ns":1,"end_ns":9}"#,
            "\n\n",
            r#"{"trace_id":"t","span_id":"2","parent_span_id":"1","service":"D","name":"OPB2","kind":"client","start_ns":2,"end_ns":3}"#,
            "\n"
        );
        let spans = parse_spans(text.as_bytes(), SpanFormat::Jsonl).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[1].parent_span_id.as_deref(), Some("1"));
        assert_eq!(spans[1].kind, SpanKind::Client);
        let bad = r#"{"trace_id":"t","service":"D"}"#;
        assert!(matches!(
            parse_spans(bad.as_bytes(), SpanFormat::Jsonl),
            Err(IngestError::MissingId {
                field: "span_id",
                ..
            })
        ));
        let backwards = r#"{"trace_id":"t","span_id":"1","start_ns":5,"end_ns":4}"#;
        assert!(parse_spans(backwards.as_bytes(), SpanFormat::Jsonl).is_err());
    }

    #[test]
    fn writers_round_trip() {
        let spans = parse_spans(OTLP.as_bytes(), SpanFormat::OtlpJson).unwrap();
        for format in [SpanFormat::Jsonl, SpanFormat::OtlpJson] {
            let text = write_spans(&spans, format);
            let mut back = parse_spans(text.as_bytes(), format).unwrap();
            let mut orig = spans.clone();
            orig.sort_by(|a, b| a.span_id.cmp(&b.span_id));
            back.sort_by(|a, b| a.span_id.cmp(&b.span_id));
            assert_eq!(back, orig, "{format}");
        }
    }
}
